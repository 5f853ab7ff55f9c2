//! Identity testing against the mixture family of two known components.
//!
//! The tester learns a mixture parameter `α` slightly below the true one,
//! reshapes the domain so that `q_α` has small `ℓ₂` norm and `p` sits within
//! `ε′/n` of `q_α` on every bucket, then runs an `ℓ₂`-vs-`ℓ₁` identity test
//! on the reshaped domain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{mix, CountVector, Distribution};
use crate::error::{check_eps, check_same_domain, Error, Result};
use crate::learner::{learner_budget, mixture_learner, DEFAULT_LEARNER_CONSTANT};
use crate::reshape::{build_reshape_plan, reshape_counts, reshape_distribution};
use crate::sampling::SampleSource;
use crate::verdict::{majority, Verdict};

pub const DEFAULT_SUBTEST_CONSTANT: f64 = 16.0;

/// Poisson parameter the subtester needs on a domain of size `m`.
pub fn subtest_budget(m: usize, eps: f64, c_sub: f64) -> f64 {
    c_sub * (m as f64).sqrt() / (eps * eps)
}

/// Centered Poissonized statistic `Z = Σ ((X_i − s q(i))² − X_i)`, an
/// unbiased estimate of `s² ‖p − q‖₂²`.
pub fn centered_statistic(q_ref: &Distribution, counts: &CountVector) -> Result<f64> {
    check_same_domain(q_ref.n(), counts.n())?;
    let s = counts.nominal_s();
    Ok(counts
        .counts()
        .iter()
        .zip(q_ref.pmf())
        .map(|(&x, &q)| {
            let x = x as f64;
            (x - s * q).powi(2) - x
        })
        .sum())
}

/// Distinguishes `‖p − q_ref‖₂ ≤ ε/(2√m)` from `‖p − q_ref‖₁ ≥ ε` using
/// Poissonized counts of `p`. Accepts iff `Z ≤ s² ε² / (2m)`.
pub fn l2_l1_identity_subtest(q_ref: &Distribution, eps: f64, p_counts: &CountVector) -> Result<Verdict> {
    l2_l1_identity_subtest_with(q_ref, eps, p_counts, DEFAULT_SUBTEST_CONSTANT)
}

/// [`l2_l1_identity_subtest`] with an explicit sample constant.
pub fn l2_l1_identity_subtest_with(
    q_ref: &Distribution,
    eps: f64,
    p_counts: &CountVector,
    c_sub: f64,
) -> Result<Verdict> {
    check_eps(eps)?;
    check_same_domain(q_ref.n(), p_counts.n())?;
    let m = q_ref.n();
    let s = p_counts.nominal_s();
    let needed = subtest_budget(m, eps, c_sub);
    if s < needed * (1.0 - 1e-12) {
        return Err(Error::InsufficientSamples {
            needed: needed.ceil() as u64,
            got: s.floor() as u64,
        });
    }
    let z = centered_statistic(q_ref, p_counts)?;
    let threshold = s * s * eps * eps / (2.0 * m as f64);
    Ok(Verdict::from_threshold(z, threshold)
        .with_detail("s", s)
        .with_detail("domain_size", m as f64))
}

/// Parameters of [`identity_test_known_noise`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityConfig {
    pub eps: f64,
    pub c_sub: f64,
    pub c_learn: f64,
    /// Target failure probability; informational unless used through
    /// [`IdentityConfig::with_delta`].
    pub delta: f64,
    /// Odd number of independent runs combined by majority vote.
    pub repeats: usize,
}

impl IdentityConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            c_sub: DEFAULT_SUBTEST_CONSTANT,
            c_learn: DEFAULT_LEARNER_CONSTANT,
            delta: 1.0 / 3.0,
            repeats: 1,
        }
    }

    /// Sets `delta` and picks the smallest odd repeat count for which a
    /// majority of runs, each correct with probability 2/3, is correct with
    /// probability `1 − delta` by Hoeffding's bound.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        if delta < 1.0 / 3.0 {
            let r = (18.0 * (1.0 / delta).ln()).ceil() as usize;
            self.repeats = r | 1;
        } else {
            self.repeats = 1;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta = {} outside (0, 1)", self.delta)));
        }
        if self.repeats == 0 || self.repeats.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("repeats = {} must be odd", self.repeats)));
        }
        if !(self.c_sub > 0.0 && self.c_learn > 0.0) {
            return Err(Error::InvalidConfig("sample constants must be positive".into()));
        }
        Ok(())
    }
}

/// Accepts `p ∈ {(1 − α) q1 + α q2}` and rejects `p` that is `ε`-far from
/// every such mixture, each with probability at least 2/3 per run.
pub fn identity_test_known_noise<S, R>(
    q1: &Distribution,
    q2: &Distribution,
    cfg: &IdentityConfig,
    mut p_source: S,
    rng: &mut R,
) -> Result<Verdict>
where
    S: SampleSource,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    check_same_domain(q1.n(), q2.n())?;
    check_same_domain(q1.n(), p_source.domain_size())?;
    let start = p_source.samples_drawn();
    let runs = (0..cfg.repeats)
        .map(|_| single_run(q1, q2, cfg, &mut p_source, rng))
        .collect::<Result<Vec<_>>>()?;
    let used = p_source.samples_drawn() - start;
    Ok(majority(&runs).with_detail("samples_used", used as f64))
}

fn single_run<S, R>(
    q1: &Distribution,
    q2: &Distribution,
    cfg: &IdentityConfig,
    p_source: &mut S,
    rng: &mut R,
) -> Result<Verdict>
where
    S: SampleSource,
    R: Rng + ?Sized,
{
    let eps_prime = cfg.eps / 6.0;
    let learn_n = learner_budget(eps_prime, cfg.c_learn);
    let learn_counts = p_source.draw(learn_n, rng);
    let alpha = mixture_learner(q1, q2, eps_prime, &learn_counts)?;
    let q_alpha = mix(q1, q2, alpha)?;
    let plan = build_reshape_plan(&q_alpha, q2)?;
    let q_ref = reshape_distribution(&q_alpha, &plan)?;
    let s = subtest_budget(plan.total_size(), cfg.eps, cfg.c_sub);
    let raw = p_source.draw_poisson(s, rng);
    let reshaped = reshape_counts(&raw, &plan, rng)?;
    let v = l2_l1_identity_subtest_with(&q_ref, cfg.eps, &reshaped, cfg.c_sub)?;
    Ok(v.with_detail("alpha", alpha.value())
        .with_detail("learner_samples", learn_n as f64)
        .with_detail("subtest_samples", raw.total() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{poisson_sample, seeded_rng, DistSource};

    #[test]
    fn statistic_of_exact_expectation() {
        let q = Distribution::uniform(4);
        // X = s q exactly gives Z = −Σ X = −s.
        let c = CountVector::new(vec![25, 25, 25, 25], 100.0);
        assert_eq!(centered_statistic(&q, &c).unwrap(), -100.0);
    }

    #[test]
    fn rejects_short_budgets() {
        let q = Distribution::uniform(100);
        let c = CountVector::new(vec![1; 100], 10.0);
        assert!(matches!(
            l2_l1_identity_subtest(&q, 0.3, &c),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn point_mass_far_from_uniform_rejected() {
        let m = 200;
        let q = Distribution::uniform(m);
        let p = Distribution::point_mass(m, 3).unwrap();
        let s = subtest_budget(m, 0.5, DEFAULT_SUBTEST_CONSTANT);
        let mut rng = seeded_rng(1);
        let v = l2_l1_identity_subtest(&q, 0.5, &poisson_sample(&p, s, &mut rng)).unwrap();
        assert!(!v.accepted);
        assert_eq!(v.accepted, v.statistic <= v.threshold);
    }

    #[test]
    fn delta_sets_odd_repeats() {
        let c = IdentityConfig::new(0.2).with_delta(0.01);
        assert_eq!(c.repeats % 2, 1);
        assert!(c.repeats >= 83);
        assert!(c.validate().is_ok());
        let mut bad = IdentityConfig::new(0.2);
        bad.repeats = 2;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn accounting_matches_draws() {
        let q1 = Distribution::uniform(50);
        let q2 = Distribution::point_mass(50, 0).unwrap();
        let mut src = DistSource::new(q1.clone());
        let mut rng = seeded_rng(3);
        let mut cfg = IdentityConfig::new(0.5);
        cfg.repeats = 3;
        let v = identity_test_known_noise(&q1, &q2, &cfg, &mut src, &mut rng).unwrap();
        assert_eq!(v.detail("samples_used"), Some(src.samples_drawn() as f64));
        assert_eq!(v.detail("runs"), Some(3.0));
    }
}
