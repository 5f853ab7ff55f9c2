//! Estimating the mixture parameter of `p` when both components are known.
//!
//! With `S = {i : q1(i) > q2(i)}` the mixture parameter satisfies
//! `α* = (q1(S) − p(S)) / (q1(S) − q2(S))`; the learner plugs in an
//! overestimate of `p(S)` so the returned `α` sits below `α*`.

use crate::dist::{l1_distance, CountVector, Distribution, MixtureWeight};
use crate::error::{check_eps, check_same_domain, Error, Result};

/// Default constant in the `C_learn / ε²` sample budget.
pub const DEFAULT_LEARNER_CONSTANT: f64 = 64.0;

/// Number of samples the learner should be handed for proximity `eps`.
pub fn learner_budget(eps: f64, c_learn: f64) -> u64 {
    (c_learn / (eps * eps)).ceil() as u64
}

/// Intermediate quantities of one learner run.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    /// Elements where `q1` strictly dominates `q2`.
    pub dominant_set: Vec<usize>,
    /// Fraction of samples landing in the dominant set.
    pub w_s: f64,
    pub eps: f64,
}

impl LearnerState {
    pub fn new(q1: &Distribution, q2: &Distribution, eps: f64, p_samples: &CountVector) -> Result<Self> {
        check_same_domain(q1.n(), q2.n())?;
        check_same_domain(q1.n(), p_samples.n())?;
        check_eps(eps)?;
        if p_samples.total() == 0 {
            return Err(Error::EmptyCounts);
        }
        let dominant_set: Vec<usize> = (0..q1.n()).filter(|&i| q1.prob(i) > q2.prob(i)).collect();
        let hits: u64 = dominant_set.iter().map(|&i| p_samples.count(i)).sum();
        Ok(Self {
            dominant_set,
            w_s: hits as f64 / p_samples.total() as f64,
            eps,
        })
    }
}

/// Returns a mixture parameter `α` with `q_α` close to `p` and `α ≤ α*`, with
/// constant probability when `p` is a mixture of `q1` and `q2`.
pub fn mixture_learner(
    q1: &Distribution,
    q2: &Distribution,
    eps: f64,
    p_samples: &CountVector,
) -> Result<MixtureWeight> {
    let state = LearnerState::new(q1, q2, eps, p_samples)?;
    if l1_distance(q1, q2)? <= eps {
        return Ok(MixtureWeight::ZERO);
    }
    let q1_s = q1.mass(&state.dominant_set);
    let q2_s = q2.mass(&state.dominant_set);
    let alpha = (q1_s - (state.w_s + eps / 4.0)) / (q1_s - q2_s);
    Ok(MixtureWeight::clamped(alpha))
}
