use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{check_eps, check_same_domain, Error, Result};
use crate::sampling::{split_uniform, SampleSource};
use crate::verdict::Verdict;

use super::bucketing::{bucket, Bucketing};
use super::division::CellRef;
use super::fit::search_kflat_dp;
use super::uniformity::{collision_accepts, DEFAULT_UNIFORMITY_CONSTANT};

/// Parameters of [`kflat_identity_test_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KFlatConfig {
    pub eps: f64,
    pub k: usize,
    /// Constant of the empirical-distribution budget `c_emp · min(n, t ln n) / ε′²`.
    pub c_emp: f64,
    /// Per-run sample constant of the cell uniformity test.
    pub c_unif: f64,
    /// Number of uniformity runs per cell is about `c_amp · ln(n² v)`.
    pub c_amp: f64,
}

impl KFlatConfig {
    pub fn new(eps: f64, k: usize) -> Self {
        Self {
            eps,
            k,
            c_emp: 16.0,
            c_unif: DEFAULT_UNIFORMITY_CONSTANT,
            c_amp: 1.0,
        }
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps / 14.0
    }
}

/// Sample budget and number of uniformity runs for a given bucketing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KFlatBudget {
    pub samples: u64,
    pub runs: usize,
    /// `k · v`.
    pub t: usize,
}

pub fn kflat_budget(n: usize, v: usize, cfg: &KFlatConfig) -> KFlatBudget {
    let ep = cfg.eps_prime();
    let t = cfg.k * v;
    let nf = n as f64;
    let log_n = nf.ln().max(1.0);
    let runs = ((cfg.c_amp * (nf * nf * v as f64).ln()).ceil() as usize).max(1) | 1;
    let empirical = cfg.c_emp * nf.min(t as f64 * log_n) / (ep * ep);
    // Once t ≥ n every refined cell is a singleton and nothing is tested.
    let uniformity = if t < n {
        let cap = n.div_ceil(t) as f64;
        (4.0 * t as f64 / ep) * runs as f64 * cfg.c_unif * cap.sqrt() / (ep * ep)
    } else {
        0.0
    };
    KFlatBudget {
        samples: empirical.max(uniformity).ceil() as u64,
        runs,
        t,
    }
}

/// Per-run counts laid out along each bucket's member list, with prefix sums
/// of `c` and `c(c−1)` so any contiguous cell is summarized in O(1).
struct GroupPrefix {
    sums: Vec<Vec<(f64, f64)>>,
}

impl GroupPrefix {
    fn new(counts: &[u64], b: &Bucketing) -> Self {
        let sums = b
            .buckets()
            .iter()
            .map(|bk| {
                let mut acc = (0.0, 0.0);
                let mut v = Vec::with_capacity(bk.elements.len() + 1);
                v.push(acc);
                for &x in &bk.elements {
                    let c = counts[x] as f64;
                    acc = (acc.0 + c, acc.1 + c * (c - 1.0));
                    v.push(acc);
                }
                v
            })
            .collect();
        Self { sums }
    }

    fn cell(&self, bucket: usize, lo: usize, hi: usize) -> (f64, f64) {
        let s = &self.sums[bucket];
        (s[hi].0 - s[lo].0, s[hi].1 - s[lo].1)
    }
}

/// Identity test against mixtures `(1−α) q + α r` with `r` unknown and flat
/// on some `k` intervals. Uses the default constants.
pub fn kflat_identity_test<S, R>(q: &Distribution, k: usize, eps: f64, p_source: S, rng: &mut R) -> Result<Verdict>
where
    S: SampleSource,
    R: Rng + ?Sized,
{
    kflat_identity_test_with(q, &KFlatConfig::new(eps, k), p_source, rng)
}

pub fn kflat_identity_test_with<S, R>(
    q: &Distribution,
    cfg: &KFlatConfig,
    mut p_source: S,
    rng: &mut R,
) -> Result<Verdict>
where
    S: SampleSource,
    R: Rng + ?Sized,
{
    check_eps(cfg.eps)?;
    let n = q.n();
    check_same_domain(n, p_source.domain_size())?;
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::InvalidK { k: cfg.k, n });
    }
    let ep = cfg.eps_prime();
    let b = bucket(q, ep)?;
    let budget = kflat_budget(n, b.v(), cfg);

    let start = p_source.samples_drawn();
    let counts = p_source.draw(budget.samples, rng);
    let used = p_source.samples_drawn() - start;
    let p_hat = counts.empirical()?;

    // Split the single sample into independent runs, element by element.
    let mut groups = vec![vec![0u64; n]; budget.runs];
    for (x, &c) in counts.counts().iter().enumerate() {
        for (g, part) in split_uniform(c, budget.runs, rng).into_iter().enumerate() {
            groups[g][x] = part;
        }
    }
    let prefixes: Vec<GroupPrefix> = groups.iter().map(|g| GroupPrefix::new(g, &b)).collect();
    let total = counts.total() as f64;
    let min_mass = ep / (4.0 * budget.t as f64);

    let mut tested = 0usize;
    let mut failed = 0usize;
    let search = search_kflat_dp(&p_hat, q, &b, cfg.k, ep, |cell: CellRef<'_>| {
        let m = cell.elements.len();
        if m <= 1 || p_hat.mass(cell.elements) < min_mass || total == 0.0 {
            return true;
        }
        let members = &b.buckets()[cell.bucket].elements;
        let lo = members.partition_point(|&x| x < cell.elements[0]);
        let hi = lo + m;
        let accepts = prefixes
            .iter()
            .filter(|g| {
                let (s, pairs) = g.cell(cell.bucket, lo, hi);
                collision_accepts(s, pairs, m, ep)
            })
            .count();
        tested += 1;
        let ok = 2 * accepts > budget.runs;
        if !ok {
            failed += 1;
        }
        ok
    })?;

    let (statistic, alpha) = match &search.fit {
        Some(f) => (f.l1_gap, f.alpha.value()),
        None => (search.min_gap, f64::NAN),
    };
    let mut v = Verdict::from_threshold(statistic, 2.0 * ep);
    v.accepted = search.fit.is_some();
    let mut v = v
        .with_detail("samples_used", used as f64)
        .with_detail("buckets", b.v() as f64)
        .with_detail("t", budget.t as f64)
        .with_detail("uniformity_runs", budget.runs as f64)
        .with_detail("cells_tested", tested as f64)
        .with_detail("cells_failed", failed as f64);
    if alpha.is_finite() {
        v = v.with_detail("alpha", alpha);
    }
    Ok(v)
}
