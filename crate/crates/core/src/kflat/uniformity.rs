use crate::dist::CountVector;
use crate::error::{Error, Result};
use crate::verdict::Verdict;

pub const DEFAULT_UNIFORMITY_CONSTANT: f64 = 32.0;

/// Unbiased collision estimate `Σ c(c−1) / (S(S−1))` of the squared `ℓ₂`
/// norm of the sampled distribution; `None` with fewer than two samples.
pub fn collision_estimate(counts: &[u64]) -> Option<f64> {
    let (total, pairs) = counts.iter().fold((0.0, 0.0), |(s, c), &x| {
        let x = x as f64;
        (s + x, c + x * (x - 1.0))
    });
    (total >= 2.0).then(|| pairs / (total * (total - 1.0)))
}

/// Acceptance rule on the raw sums: `Ŝ − 1/m ≤ 1.5 ε′²/m`. Cells with fewer
/// than two samples carry no evidence and are accepted.
pub(crate) fn collision_accepts(total: f64, pairs: f64, m: usize, eps_prime: f64) -> bool {
    if m <= 1 || total < 2.0 {
        return true;
    }
    let m = m as f64;
    pairs / (total * (total - 1.0)) - 1.0 / m <= 1.5 * eps_prime * eps_prime / m
}

/// Uniformity test for the conditional samples of a cell of size `m`: accepts
/// iff the collision estimate exceeds `1/m` by at most `1.5 ε′²/m`, the
/// midpoint of the gap `[ε′²/m, 2ε′²/m]`. Needs `c_unif √m / ε′²` samples.
pub fn uniformity_subtest(cell_counts: &CountVector, eps_prime: f64) -> Result<Verdict> {
    uniformity_subtest_with(cell_counts, eps_prime, DEFAULT_UNIFORMITY_CONSTANT)
}

pub fn uniformity_subtest_with(cell_counts: &CountVector, eps_prime: f64, c_unif: f64) -> Result<Verdict> {
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(Error::InvalidEpsilon(eps_prime));
    }
    let m = cell_counts.n();
    if m == 0 {
        return Err(Error::EmptyCell);
    }
    let threshold = 1.5 * eps_prime * eps_prime / m as f64;
    if m == 1 {
        return Ok(Verdict::from_threshold(0.0, threshold));
    }
    let needed = (c_unif * (m as f64).sqrt() / (eps_prime * eps_prime)).ceil() as u64;
    if cell_counts.total() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            got: cell_counts.total(),
        });
    }
    let est = collision_estimate(cell_counts.counts()).expect("at least two samples");
    Ok(Verdict::from_threshold(est - 1.0 / m as f64, threshold).with_detail("collision_estimate", est))
}
