//! Closeness testing against the mixture family of two components that are
//! themselves only available through samples.
//!
//! Given Poissonized counts `X`, `Y`, `Z` of `p`, `q1`, `q2`, the quadratic
//!
//! ```text
//! f(α) = Σ (X_i − (1−α)Y_i − αZ_i)² − X_i − (1−α)²Y_i − α²Z_i
//! ```
//!
//! is an unbiased estimate of `s² ‖p − q_α‖₂²`. A handful of candidate
//! parameters are read off `f`, and each is verified with an independent
//! `ℓ₂²` estimate after flattening the domain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{CountVector, MixtureWeight};
use crate::error::{check_eps, check_same_domain, Error, Result};
use crate::reshape::{build_flatten_plan, ReshapedSource};
use crate::sampling::{MixtureSource, SampleSource};
use crate::verdict::Verdict;

pub const DEFAULT_CANDIDATE_CONSTANT: f64 = 64.0;
pub const DEFAULT_ESTIMATOR_CONSTANT: f64 = 256.0;

/// Coefficients of `f(α) = Aα² + Bα + C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticStat {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadraticStat {
    pub fn eval(&self, alpha: f64) -> f64 {
        (self.a * alpha + self.b) * alpha + self.c
    }

    /// Vertex `−B/(2A)`, defined only when `A > 0`.
    pub fn alpha_min(&self) -> Option<f64> {
        (self.a > 0.0).then(|| -self.b / (2.0 * self.a))
    }

    /// Real roots of `f(α) = level` in increasing order, for `A > 0`.
    fn roots_at(&self, level: f64) -> Option<(f64, f64)> {
        if self.a <= 0.0 {
            return None;
        }
        let c = self.c - level;
        let disc = self.b * self.b - 4.0 * self.a * c;
        if disc < 0.0 {
            return None;
        }
        // Numerically stable pair.
        let sq = disc.sqrt();
        let q = -0.5 * (self.b + self.b.signum() * sq);
        let (r1, r2) = if q == 0.0 {
            let r = -self.b / (2.0 * self.a);
            (r, r)
        } else {
            (q / self.a, c / q)
        };
        Some((r1.min(r2), r1.max(r2)))
    }
}

fn check_triple(x: &CountVector, y: &CountVector, z: &CountVector) -> Result<()> {
    check_same_domain(x.n(), y.n())?;
    check_same_domain(x.n(), z.n())
}

/// Direct evaluation of `f(α)`.
pub fn eval_f(x: &CountVector, y: &CountVector, z: &CountVector, alpha: MixtureWeight) -> Result<f64> {
    check_triple(x, y, z)?;
    let a = alpha.value();
    let total = (0..x.n())
        .map(|i| {
            let (xi, yi, zi) = (x.count(i) as f64, y.count(i) as f64, z.count(i) as f64);
            (xi - (1.0 - a) * yi - a * zi).powi(2) - xi - (1.0 - a).powi(2) * yi - a * a * zi
        })
        .sum();
    Ok(total)
}

/// `A = Σ (Y−Z)² − Y − Z`, `B = 2 Σ (Y + XY + YZ − Y² − XZ)`,
/// `C = Σ (X−Y)² − X − Y`.
pub fn extract_coefficients(x: &CountVector, y: &CountVector, z: &CountVector) -> Result<QuadraticStat> {
    check_triple(x, y, z)?;
    let mut q = QuadraticStat { a: 0.0, b: 0.0, c: 0.0 };
    for i in 0..x.n() {
        let (xi, yi, zi) = (x.count(i) as f64, y.count(i) as f64, z.count(i) as f64);
        q.a += (yi - zi).powi(2) - yi - zi;
        q.b += 2.0 * (yi + xi * yi + yi * zi - yi * yi - xi * zi);
        q.c += (xi - yi).powi(2) - xi - yi;
    }
    Ok(q)
}

/// Parameters of the closeness tester.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosenessConfig {
    pub eps: f64,
    /// Size of the domain the statistic runs on.
    pub n: usize,
    /// Bound on the squared `ℓ₂` norms of the distributions involved.
    pub b: f64,
    /// `ε² / (10 n)`.
    pub gamma: f64,
    /// Poisson parameter for the candidate search, `c_s √b / (γ/2)`.
    pub s: f64,
    /// `s² γ`.
    pub threshold: f64,
    pub c_s: f64,
    /// Constant of the verification estimator budget.
    pub c_est: f64,
    /// Samples per source used to flatten; 0 when no flattening is done.
    pub k_flatten: u64,
}

impl ClosenessConfig {
    /// Configuration for counts over a domain of size `n` whose distributions
    /// have squared `ℓ₂` norm at most `b`, without flattening.
    pub fn with_norm_bound(eps: f64, n: usize, b: f64, c_s: f64) -> Result<Self> {
        check_eps(eps)?;
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        if !(b > 0.0 && b.is_finite()) || !(c_s > 0.0) {
            return Err(Error::InvalidConfig(format!("b = {b}, c_s = {c_s}")));
        }
        let gamma = eps * eps / (10.0 * n as f64);
        let s = c_s * b.sqrt() / (gamma / 2.0);
        Ok(Self {
            eps,
            n,
            b,
            gamma,
            s,
            threshold: s * s * gamma,
            c_s,
            c_est: DEFAULT_ESTIMATOR_CONSTANT,
            k_flatten: 0,
        })
    }

    /// Configuration for the full tester on an original domain of size `n`:
    /// flattening with `k = min(n, ⌈n^{2/3}/ε^{4/3}⌉)` samples per source
    /// yields a domain of size exactly `n + 3k` and norm bound `b = 1/k`.
    pub fn new(eps: f64, n: usize) -> Result<Self> {
        Self::with_constants(eps, n, DEFAULT_CANDIDATE_CONSTANT, DEFAULT_ESTIMATOR_CONSTANT)
    }

    pub fn with_constants(eps: f64, n: usize, c_s: f64, c_est: f64) -> Result<Self> {
        check_eps(eps)?;
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        let k = flatten_size(n, eps);
        let mut cfg = Self::with_norm_bound(eps, n + 3 * k as usize, 1.0 / k as f64, c_s)?;
        cfg.k_flatten = k;
        cfg.c_est = c_est;
        Ok(cfg)
    }

    /// Verification threshold scale `σ = ε² / (2n)`.
    pub fn sigma(&self) -> f64 {
        self.eps * self.eps / (2.0 * self.n as f64)
    }

    /// Poisson parameter of each verification estimate.
    pub fn estimator_s(&self) -> f64 {
        estimator_budget(self.b, self.sigma(), self.c_est)
    }
}

/// `min(n, ⌈n^{2/3} / ε^{4/3}⌉)`.
pub fn flatten_size(n: usize, eps: f64) -> u64 {
    let k = ((n as f64).powf(2.0 / 3.0) / eps.powf(4.0 / 3.0)).ceil() as u64;
    k.clamp(1, n as u64)
}

/// Candidate mixture parameters, always containing 0 and at most 5 long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    alphas: Vec<MixtureWeight>,
}

impl CandidateSet {
    fn new() -> Self {
        Self {
            alphas: vec![MixtureWeight::ZERO],
        }
    }

    fn insert(&mut self, alpha: f64) {
        let alpha = MixtureWeight::clamped(alpha);
        if !self
            .alphas
            .iter()
            .any(|a| (a.value() - alpha.value()).abs() <= 1e-12)
        {
            self.alphas.push(alpha);
        }
    }

    pub fn alphas(&self) -> &[MixtureWeight] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Smallest `α ∈ [max(α_min, 0), 1]` and largest `α ∈ [0, min(α_min, 1)]`
/// with `|f(α)| ≤ T`, when they exist.
fn boundary_candidates(f: &QuadraticStat, t: f64) -> Vec<f64> {
    let Some(vertex) = f.alpha_min() else {
        let mut out = Vec::new();
        if f.eval(1.0).abs() <= t {
            out.push(1.0);
        }
        return out;
    };
    let mut out = Vec::new();
    // Right branch: f increasing on [vertex, ∞).
    if vertex <= 1.0 {
        let lo = vertex.max(0.0);
        let v = f.eval(lo);
        if v.abs() <= t {
            out.push(lo);
        } else if v < -t {
            if let Some((_, r)) = f.roots_at(-t) {
                if (lo..=1.0).contains(&r) {
                    out.push(r);
                }
            }
        }
    }
    // Left branch: f decreasing on (−∞, vertex].
    if vertex >= 0.0 {
        let hi = vertex.min(1.0);
        let v = f.eval(hi);
        if v.abs() <= t {
            out.push(hi);
        } else if v < -t {
            if let Some((l, _)) = f.roots_at(-t) {
                if (0.0..=hi).contains(&l) {
                    out.push(l);
                }
            }
        }
    }
    out
}

/// Candidate set read off the quadratic statistic in both orientations of
/// the components, with swapped candidates mapped back by `β ↦ 1 − β`.
pub fn find_candidates(
    x: &CountVector,
    y: &CountVector,
    z: &CountVector,
    cfg: &ClosenessConfig,
) -> Result<CandidateSet> {
    let t = cfg.threshold;
    let mut set = CandidateSet::new();
    for alpha in boundary_candidates(&extract_coefficients(x, y, z)?, t) {
        set.insert(alpha);
    }
    for beta in boundary_candidates(&extract_coefficients(x, z, y)?, t) {
        set.insert(1.0 - beta);
    }
    debug_assert!(set.len() <= 5);
    Ok(set)
}

/// Poisson parameter `c √b / σ` for the `ℓ₂²` estimator.
pub fn estimator_budget(b: f64, sigma: f64, c_est: f64) -> f64 {
    c_est * b.sqrt() / sigma
}

/// `(1/s²) Σ ((X_i − Y_i)² − X_i − Y_i)`, unbiased for `‖r1 − r2‖₂²` when
/// both count vectors are Poissonized at the same `s`.
pub fn l2_sq_estimate(r1_counts: &CountVector, r2_counts: &CountVector) -> Result<f64> {
    check_same_domain(r1_counts.n(), r2_counts.n())?;
    let s = r1_counts.nominal_s();
    if (s - r2_counts.nominal_s()).abs() > 1e-9 * s.max(1.0) || s <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "estimator needs equal positive Poisson parameters, got {s} and {}",
            r2_counts.nominal_s()
        )));
    }
    let raw: f64 = r1_counts
        .counts()
        .iter()
        .zip(r2_counts.counts())
        .map(|(&x, &y)| {
            let (x, y) = (x as f64, y as f64);
            (x - y).powi(2) - x - y
        })
        .sum();
    Ok(raw / (s * s))
}

/// Accepts `p ∈ {(1 − α) q1 + α q2}` and rejects `p` that is `ε`-far from
/// every such mixture, each with probability at least 2/3, when all three
/// distributions are available only through samples. `cfg` must come from
/// [`ClosenessConfig::new`] or [`ClosenessConfig::with_constants`].
pub fn closeness_test<P, A, B, R>(
    cfg: &ClosenessConfig,
    mut p_src: P,
    mut q1_src: A,
    mut q2_src: B,
    rng: &mut R,
) -> Result<Verdict>
where
    P: SampleSource,
    A: SampleSource,
    B: SampleSource,
    R: Rng + ?Sized,
{
    check_eps(cfg.eps)?;
    let n = p_src.domain_size();
    check_same_domain(n, q1_src.domain_size())?;
    check_same_domain(n, q2_src.domain_size())?;
    if cfg.k_flatten == 0 || cfg.n != n + 3 * cfg.k_flatten as usize {
        return Err(Error::InvalidConfig(
            "closeness configuration does not match the source domain".into(),
        ));
    }
    let start = p_src.samples_drawn() + q1_src.samples_drawn() + q2_src.samples_drawn();

    let flat = build_flatten_plan(&mut p_src, &mut q1_src, &mut q2_src, cfg.k_flatten, rng)?;
    let plan = flat.plan();
    let mut p = ReshapedSource::new(&mut p_src, plan)?;
    let mut q1 = ReshapedSource::new(&mut q1_src, plan)?;
    let mut q2 = ReshapedSource::new(&mut q2_src, plan)?;

    let x = p.draw_poisson(cfg.s, rng);
    let y = q1.draw_poisson(cfg.s, rng);
    let z = q2.draw_poisson(cfg.s, rng);
    let candidates = find_candidates(&x, &y, &z, cfg)?;

    let sigma = cfg.sigma();
    let s_est = cfg.estimator_s();
    let mut best = f64::INFINITY;
    let mut best_alpha = 0.0;
    let mut verdict_details = Vec::new();
    for (j, &alpha) in candidates.alphas().iter().enumerate() {
        let p_counts = p.draw_poisson(s_est, rng);
        let q_counts = MixtureSource::new(&mut q1, &mut q2, alpha)?.draw_poisson(s_est, rng);
        let est = l2_sq_estimate(&p_counts, &q_counts)?;
        verdict_details.push((format!("candidate_{j}"), alpha.value()));
        verdict_details.push((format!("estimate_{j}"), est));
        if est < best {
            best = est;
            best_alpha = alpha.value();
        }
    }
    let used = p_src.samples_drawn() + q1_src.samples_drawn() + q2_src.samples_drawn() - start;

    let mut v = Verdict::from_threshold(best, 2.0 * sigma)
        .with_detail("alpha", best_alpha)
        .with_detail("candidates", candidates.len() as f64)
        .with_detail("k_flatten", cfg.k_flatten as f64)
        .with_detail("flattened_size", plan.total_size() as f64)
        .with_detail("s", cfg.s)
        .with_detail("estimator_s", s_est)
        .with_detail("samples_used", used as f64);
    for (k, val) in verdict_details {
        v = v.with_detail(k, val);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::sampling::{seeded_rng, DistSource};

    fn cv(v: &[u64]) -> CountVector {
        CountVector::new(v.to_vec(), 10.0)
    }

    #[test]
    fn empty_counts_give_zero() {
        let z = cv(&[0, 0, 0]);
        assert_eq!(eval_f(&z, &z, &z, MixtureWeight::new(0.3).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn coefficients_agree_with_direct_sum() {
        let x = cv(&[3, 0, 7, 2]);
        let y = cv(&[1, 4, 2, 2]);
        let z = cv(&[0, 5, 9, 1]);
        let q = extract_coefficients(&x, &y, &z).unwrap();
        for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let direct = eval_f(&x, &y, &z, MixtureWeight::new(a).unwrap()).unwrap();
            assert!((q.eval(a) - direct).abs() <= 1e-9 * q.c.abs().max(1.0));
        }
    }

    #[test]
    fn swapping_components_reflects_the_quadratic() {
        let x = cv(&[3, 0, 7, 2]);
        let y = cv(&[1, 4, 2, 2]);
        let z = cv(&[0, 5, 9, 1]);
        let f = extract_coefficients(&x, &y, &z).unwrap();
        let g = extract_coefficients(&x, &z, &y).unwrap();
        for a in [0.0, 0.1, 0.6, 1.0] {
            assert!((f.eval(a) - g.eval(1.0 - a)).abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_solutions() {
        // f(α) = 4(α − 0.5)² − 1 = 4α² − 4α, T = 0.5: f(0.5) = −1 < −T,
        // roots of f = −0.5 at 0.5 ± √2/4.
        let f = QuadraticStat { a: 4.0, b: -4.0, c: 0.0 };
        let c = boundary_candidates(&f, 0.5);
        let d = 2f64.sqrt() / 4.0;
        assert_eq!(c.len(), 2);
        assert!((c[0] - (0.5 + d)).abs() < 1e-12);
        assert!((c[1] - (0.5 - d)).abs() < 1e-12);
        // Vertex feasible: both branches return it.
        assert_eq!(boundary_candidates(&f, 1.0), vec![0.5, 0.5]);
        // Everything above T.
        let g = QuadraticStat { a: 1.0, b: 0.0, c: 5.0 };
        assert!(boundary_candidates(&g, 1.0).is_empty());
        // Non-convex: only the endpoint check.
        let h = QuadraticStat { a: -1.0, b: 0.0, c: 1.0 };
        assert_eq!(boundary_candidates(&h, 0.1), vec![1.0]);
    }

    #[test]
    fn candidate_set_contains_zero() {
        let x = cv(&[100, 0]);
        let y = cv(&[0, 100]);
        let z = cv(&[0, 100]);
        let cfg = ClosenessConfig::with_norm_bound(0.5, 2, 1.0, 1.0).unwrap();
        let c = find_candidates(&x, &y, &z, &cfg).unwrap();
        assert_eq!(c.alphas()[0], MixtureWeight::ZERO);
        assert!(c.len() <= 5);
    }

    #[test]
    fn estimator_is_exact_on_identical_counts() {
        let a = cv(&[4, 0, 6]);
        assert_eq!(l2_sq_estimate(&a, &a).unwrap(), -20.0 / 100.0);
        let b = CountVector::new(vec![4, 0, 6], 11.0);
        assert!(l2_sq_estimate(&a, &b).is_err());
    }

    #[test]
    fn config_relations() {
        let cfg = ClosenessConfig::new(0.3, 500).unwrap();
        assert_eq!(cfg.k_flatten, flatten_size(500, 0.3));
        assert_eq!(cfg.n, 500 + 3 * cfg.k_flatten as usize);
        assert_eq!(cfg.threshold, cfg.s * cfg.s * cfg.gamma);
        assert_eq!(cfg.gamma, 0.09 / (10.0 * cfg.n as f64));
        assert_eq!(flatten_size(10, 0.1), 10);
    }

    #[test]
    fn end_to_end_runs_and_accounts() {
        let n = 40;
        let q1 = Distribution::uniform(n);
        let q2 = Distribution::point_mass(n, 0).unwrap();
        let cfg = ClosenessConfig::with_constants(0.5, n, 4.0, 8.0).unwrap();
        let mut rng = seeded_rng(9);
        let mut p = DistSource::new(q1.clone());
        let mut a = DistSource::new(q1.clone());
        let mut b = DistSource::new(q2);
        let v = closeness_test(&cfg, &mut p, &mut a, &mut b, &mut rng).unwrap();
        let drawn = p.samples_drawn() + a.samples_drawn() + b.samples_drawn();
        assert_eq!(v.detail("samples_used"), Some(drawn as f64));
        assert_eq!(v.accepted, v.statistic <= v.threshold);
    }
}
