use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{check_same_domain, Error, Result};

use super::division::Segmentation;

/// Upper limit on enumerated segmentations.
const MAX_SEGMENTATIONS: u128 = 200_000;

/// Bracket on `min_{α, r} ‖p − (1−α) q − α r‖₁` over distributions `r` that
/// are flat on some segmentation into `k` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFlatDistance {
    /// Attained by an explicit family member.
    pub upper: f64,
    /// The distance is 2-Lipschitz in `α`, so it is at least
    /// `upper − step` when grid points are `step` apart.
    pub lower: f64,
    pub alpha: f64,
    pub segmentation: Segmentation,
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// `min Σ_j g_j(x_j)` subject to `Σ x_j = total`, `x_j ≥ 0`, where
/// `g_j(x) = Σ_{i ∈ I_j} |u_i − x/|I_j||`. Each `g_j` is convex piecewise
/// linear, so taking slope segments in increasing order is optimal.
fn allocate(u: &[f64], intervals: &[std::ops::Range<usize>], total: f64) -> f64 {
    let mut value = 0.0;
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for r in intervals {
        let len = r.len() as f64;
        let mut bps: Vec<f64> = u[r.clone()].iter().map(|&x| x * len).collect();
        bps.sort_by(f64::total_cmp);
        value += u[r.clone()].iter().map(|x| x.abs()).sum::<f64>();
        let below = bps.partition_point(|&b| b <= 0.0);
        let mut at = 0.0;
        for (m, &bp) in bps.iter().enumerate().skip(below) {
            pieces.push(((2 * m) as f64 / len - 1.0, bp - at));
            at = bp;
        }
        pieces.push((1.0, f64::INFINITY));
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut left = total;
    for (slope, len) in pieces {
        if left <= 0.0 {
            break;
        }
        let take = len.min(left);
        value += slope * take;
        left -= take;
    }
    value
}

/// Grid search over `α` with step `step` and exhaustive enumeration of the
/// segmentations into exactly `k` intervals; the inner minimization over the
/// flat distribution is exact.
pub fn distance_to_kflat_family(p: &Distribution, q: &Distribution, k: usize, step: f64) -> Result<KFlatDistance> {
    check_same_domain(p.n(), q.n())?;
    let n = p.n();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidConfig(format!("grid step {step}")));
    }
    if binomial(n as u128 - 1, k as u128 - 1) > MAX_SEGMENTATIONS {
        return Err(Error::InfeasibleParameters(format!(
            "too many segmentations for n = {n}, k = {k}"
        )));
    }
    let steps = (1.0 / step).ceil() as usize;
    let alphas: Vec<f64> = (0..=steps).map(|i| (i as f64 * step).min(1.0)).collect();
    let mut segs = Vec::new();
    let mut cuts: Vec<usize> = (1..k).collect();
    loop {
        segs.push(Segmentation::from_cuts(n, &cuts)?);
        let m = cuts.len();
        let mut advanced = false;
        for pos in (0..m).rev() {
            if cuts[pos] < n - (m - pos) {
                cuts[pos] += 1;
                for j in pos + 1..m {
                    cuts[j] = cuts[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    let mut best = (f64::INFINITY, 0.0, 0usize);
    let mut u = vec![0.0; n];
    for &alpha in &alphas {
        for (i, slot) in u.iter_mut().enumerate() {
            *slot = p.prob(i) - (1.0 - alpha) * q.prob(i);
        }
        for (si, seg) in segs.iter().enumerate() {
            let d = allocate(&u, &seg.intervals(), alpha);
            if d < best.0 {
                best = (d, alpha, si);
            }
        }
    }
    Ok(KFlatDistance {
        upper: best.0,
        lower: (best.0 - step).max(0.0),
        alpha: best.1,
        segmentation: segs.swap_remove(best.2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{l1_distance, mix, MixtureWeight};

    #[test]
    fn members_have_zero_distance() {
        let q = Distribution::from_weights(&[1.0, 5.0, 2.0, 2.0, 7.0, 1.0]).unwrap();
        let r = Distribution::from_weights(&[2.0, 2.0, 2.0, 1.0, 1.0, 1.0]).unwrap();
        let p = mix(&q, &r, MixtureWeight::new(0.25).unwrap()).unwrap();
        let d = distance_to_kflat_family(&p, &q, 2, 0.01).unwrap();
        assert!(d.upper < 1e-12);
        assert!((d.alpha - 0.25).abs() < 1e-9);
        assert_eq!(d.segmentation.intervals(), vec![0..3, 3..6]);
    }

    #[test]
    fn allocation_matches_brute_force() {
        // k = 1: r uniform, so the minimum is exactly ‖p − (1−α)q − α U‖₁.
        let q = Distribution::from_weights(&[3.0, 1.0, 1.0, 5.0]).unwrap();
        let p = Distribution::from_weights(&[1.0, 4.0, 1.0, 1.0]).unwrap();
        let u = Distribution::uniform(4);
        let d = distance_to_kflat_family(&p, &q, 1, 0.001).unwrap();
        let brute = (0..=1000)
            .map(|i| {
                let m = mix(&q, &u, MixtureWeight::new(i as f64 / 1000.0).unwrap()).unwrap();
                l1_distance(&p, &m).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((d.upper - brute).abs() < 1e-12);
    }

    #[test]
    fn refuses_huge_enumerations() {
        let q = Distribution::uniform(500);
        assert!(matches!(
            distance_to_kflat_family(&q, &q, 4, 0.1),
            Err(Error::InfeasibleParameters(_))
        ));
    }
}
