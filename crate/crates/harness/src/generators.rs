//! Test instances: random components, certified far distributions and the
//! hard pair used for lower bounds.

use mixtest_core::kflat::distance_to_kflat_family;
use mixtest_core::{distance_to_mixture_family, mix, seeded_rng, Distribution, MixtureWeight};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distfile::DistributionSpec;
use crate::error::{HarnessError, Result};
use crate::trials::{Constants, InstanceSpec};

/// Random pmf with weights `u²`, `u` uniform on `[0, 1)`.
pub fn random_distribution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Distribution {
    loop {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(2)).collect();
        if let Ok(d) = Distribution::from_weights(&w) {
            return d;
        }
    }
}

/// Random distribution constant on each of `k` random intervals.
pub fn kflat_random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Distribution> {
    if k == 0 || k > n {
        return Err(mixtest_core::Error::InvalidK { k, n }.into());
    }
    let mut cuts: Vec<usize> = sample_indices(rng, n - 1, k - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.push(n);
    let mut w = Vec::with_capacity(n);
    let mut start = 0;
    for end in cuts {
        let level = 0.2 + rng.random::<f64>();
        w.extend(std::iter::repeat_n(level, end - start));
        start = end;
    }
    Ok(Distribution::from_weights(&w)?)
}

/// Each element independently takes one of the given weights.
pub fn level_distribution<R: Rng + ?Sized>(n: usize, levels: &[f64], rng: &mut R) -> Result<Distribution> {
    let w: Vec<f64> = (0..n).map(|_| levels[rng.random_range(0..levels.len())]).collect();
    Ok(Distribution::from_weights(&w)?)
}

/// Mass spread over a random tenth of the domain with random weights.
fn spiky<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Distribution {
    let m = (n / 10).max(1);
    let mut w = vec![0.0; n];
    for i in sample_indices(rng, n, m) {
        w[i] = 0.1 + rng.random::<f64>();
    }
    Distribution::from_weights(&w).expect("positive weights")
}

/// Bracket `[lower, upper]` on the distance to the target family.
pub type Bracket = (f64, f64);

/// Moves `base` toward random spiky distributions until the certified
/// distance lands in `[eps, 1.5 eps]`. The distance to a convex family is
/// convex along the segment and zero at `base`, hence nondecreasing, so
/// bisection on the mixing weight applies.
fn far_by_bisection<R, O>(base: &Distribution, eps: f64, rng: &mut R, mut oracle: O) -> Result<Distribution>
where
    R: Rng + ?Sized,
    O: FnMut(&Distribution) -> Result<Bracket>,
{
    let n = base.n();
    for _ in 0..1000 {
        let r = spiky(n, rng);
        let at = |t: f64| mix(base, &r, MixtureWeight::clamped(t)).expect("same domain");
        let (_, hi_up) = oracle(&at(1.0))?;
        if hi_up < eps {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let cand = at(mid);
            let (l, u) = oracle(&cand)?;
            if l >= eps && u <= 1.5 * eps {
                return Ok(cand);
            }
            if u < 1.25 * eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Err(HarnessError::Infeasible(format!(
        "no distribution at distance [{eps}, {}] found",
        1.5 * eps
    )))
}

/// A distribution whose `ℓ₁` distance to `{(1−α) q1 + α q2}` lies in
/// `[eps, 1.5 eps]`, certified by the exact family oracle.
pub fn gen_far_instance<R: Rng + ?Sized>(
    q1: &Distribution,
    q2: &Distribution,
    eps: f64,
    rng: &mut R,
) -> Result<Distribution> {
    check_eps(eps)?;
    let alpha0 = MixtureWeight::clamped(rng.random::<f64>());
    let base = mix(q1, q2, alpha0)?;
    far_by_bisection(&base, eps, rng, |p| {
        let (d, _) = distance_to_mixture_family(p, q1, q2)?;
        Ok((d, d))
    })
}

/// Grid step of the family oracle used to certify far `k`-flat instances.
pub const KFLAT_CERTIFY_STEP: f64 = 1e-3;

/// A distribution whose distance to mixtures of `q` with `k`-flat noise lies
/// in `[eps, 1.5 eps]`, certified by the segmentation-enumerating oracle.
pub fn gen_far_kflat_instance<R: Rng + ?Sized>(
    q: &Distribution,
    k: usize,
    eps: f64,
    rng: &mut R,
) -> Result<Distribution> {
    check_eps(eps)?;
    let noise = kflat_random(q.n(), k, rng)?;
    let base = mix(q, &noise, MixtureWeight::clamped(rng.random::<f64>()))?;
    // A coarse grid steers the bisection; the returned point is re-certified
    // on the fine grid.
    far_by_bisection(&base, eps, rng, |p| {
        let coarse = distance_to_kflat_family(p, q, k, 0.02)?;
        if coarse.lower < eps || coarse.upper > 1.5 * eps {
            return Ok((coarse.lower, coarse.upper));
        }
        let fine = distance_to_kflat_family(p, q, k, KFLAT_CERTIFY_STEP)?;
        Ok((fine.lower, fine.upper))
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(mixtest_core::Error::InvalidEpsilon(eps).into());
    }
    Ok(())
}

/// The hard pair `p* = b·1_A + a·1_B`, `q* = b·1_A + a·1_C`, against mixtures
/// of `q*` with the uniform distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LbInstance {
    pub p_star: Distribution,
    pub q_star: Distribution,
    pub a_set: Vec<usize>,
    pub b_set: Vec<usize>,
    pub c_set: Vec<usize>,
    /// Level on `B` and `C` after rescaling; nominally `4ε/n`.
    pub a_level: f64,
    /// Level on `A` after rescaling; nominally `ε^{4/3}/n^{2/3}`.
    pub b_level: f64,
    /// Exact distance of `p*` to `{(1−α) q* + α U}`.
    pub certified_distance: f64,
    /// Whether `ε ≥ 4^{3/4}/n^{1/4}`, the regime the construction is stated
    /// for; outside it the instance is still certified numerically.
    pub asymptotic_regime: bool,
}

/// Nominal set sizes `(|A|, |B|)` before rounding: `(1−ε)/b` and `ε/a`.
pub fn lb_nominal_sizes(n: usize, eps: f64) -> (f64, f64) {
    let nf = n as f64;
    let a = 4.0 * eps / nf;
    let b = eps.powf(4.0 / 3.0) / nf.powf(2.0 / 3.0);
    ((1.0 - eps) / b, eps / a)
}

pub fn gen_lb_instance(n: usize, eps: f64) -> Result<LbInstance> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(mixtest_core::Error::InvalidEpsilon(eps).into());
    }
    let (a_nom, bc_nom) = lb_nominal_sizes(n, eps);
    let a_size = a_nom.round() as usize;
    let bc_size = bc_nom.round() as usize;
    if a_size == 0 || bc_size == 0 || a_size + 2 * bc_size > n {
        return Err(mixtest_core::Error::InfeasibleParameters(format!(
            "sets of sizes {a_size}, {bc_size}, {bc_size} do not fit in a domain of {n}"
        ))
        .into());
    }
    let b_level = (1.0 - eps) / a_size as f64;
    let a_level = eps / bc_size as f64;
    let a_set: Vec<usize> = (0..a_size).collect();
    let b_set: Vec<usize> = (a_size..a_size + bc_size).collect();
    let c_set: Vec<usize> = (a_size + bc_size..a_size + 2 * bc_size).collect();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for &i in &a_set {
        p[i] = b_level;
        q[i] = b_level;
    }
    for &i in &b_set {
        p[i] = a_level;
    }
    for &i in &c_set {
        q[i] = a_level;
    }
    let p_star = Distribution::from_weights(&p)?;
    let q_star = Distribution::from_weights(&q)?;
    let (d, _) = distance_to_mixture_family(&p_star, &q_star, &Distribution::uniform(n))?;
    if d < eps {
        return Err(mixtest_core::Error::InfeasibleParameters(format!(
            "instance only {d} far from the family"
        ))
        .into());
    }
    Ok(LbInstance {
        p_star,
        q_star,
        a_set,
        b_set,
        c_set,
        a_level,
        b_level,
        certified_distance: d,
        asymptotic_regime: eps >= 4f64.powf(0.75) / (n as f64).powf(0.25),
    })
}

/// Kind of instance written by [`gen_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    /// The hard pair: `p = p*`, `q1 = q*`, `q2` uniform.
    Lb,
    /// `p` is a mixture of `q1` and `q2`.
    Mixture,
    /// `p` is certified far from all mixtures of `q1` and `q2`.
    Far,
}

impl std::str::FromStr for GenKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lb" => Ok(Self::Lb),
            "mixture" => Ok(Self::Mixture),
            "far" => Ok(Self::Far),
            other => Err(HarnessError::UnknownGenerator(other.to_string())),
        }
    }
}

/// Weights of the reference distribution used for `k`-flat instances: few
/// distinct levels keep the number of probability bands small.
pub const REFERENCE_LEVELS: [f64; 3] = [1.0, 2.0, 4.0];

/// Builds a complete instance file. With `k`, `q2` is a random `k`-flat
/// distribution and `q1` a few-level reference, so the same file serves all
/// three testers; far instances are then certified against the `k`-flat
/// family.
pub fn gen_instance(
    kind: GenKind,
    n: usize,
    eps: f64,
    alpha: f64,
    k: Option<usize>,
    seed: u64,
) -> Result<InstanceSpec> {
    let mut rng = seeded_rng(seed);
    let alpha = MixtureWeight::new(alpha)?;
    let (p, q1, q2, description) = match kind {
        GenKind::Lb => {
            let inst = gen_lb_instance(n, eps)?;
            let d = format!("hard pair at distance {:.6}", inst.certified_distance);
            (inst.p_star, inst.q_star, Distribution::uniform(n), d)
        }
        GenKind::Mixture | GenKind::Far => {
            let (q1, q2) = match k {
                Some(k) => (level_distribution(n, &REFERENCE_LEVELS, &mut rng)?, kflat_random(n, k, &mut rng)?),
                None => (random_distribution(n, &mut rng), random_distribution(n, &mut rng)),
            };
            if kind == GenKind::Mixture {
                let p = mix(&q1, &q2, alpha)?;
                (p, q1, q2, format!("mixture with alpha = {}", alpha.value()))
            } else {
                let p = match k {
                    Some(k) => gen_far_kflat_instance(&q1, k, eps, &mut rng)?,
                    None => gen_far_instance(&q1, &q2, eps, &mut rng)?,
                };
                (p, q1, q2, "certified far instance".to_string())
            }
        }
    };
    Ok(InstanceSpec {
        eps,
        k,
        p: DistributionSpec::explicit(&p),
        q: k.map(|_| DistributionSpec::explicit(&q1)),
        q1: Some(DistributionSpec::explicit(&q1)),
        q2: Some(DistributionSpec::explicit(&q2)),
        constants: Constants::default(),
        description: Some(description),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mixtest_core::seeded_rng;

    #[test]
    fn kflat_random_has_k_levels() {
        let mut rng = seeded_rng(1);
        let d = kflat_random(30, 4, &mut rng).unwrap();
        let mut changes = 0;
        for w in d.pmf().windows(2) {
            if w[0] != w[1] {
                changes += 1;
            }
        }
        assert!(changes <= 3);
        assert!(kflat_random(3, 4, &mut rng).is_err());
    }

    #[test]
    fn far_instances_are_in_band() {
        let mut rng = seeded_rng(2);
        let q1 = random_distribution(100, &mut rng);
        let q2 = random_distribution(100, &mut rng);
        for _ in 0..10 {
            let p = gen_far_instance(&q1, &q2, 0.3, &mut rng).unwrap();
            let (d, _) = distance_to_mixture_family(&p, &q1, &q2).unwrap();
            assert!((0.3..=0.45).contains(&d), "{d}");
        }
    }

    #[test]
    fn collapsed_family() {
        let mut rng = seeded_rng(3);
        let u = Distribution::uniform(50);
        let p = gen_far_instance(&u, &u, 0.2, &mut rng).unwrap();
        let d = mixtest_core::l1_distance(&p, &u).unwrap();
        assert!(d >= 0.2);
    }

    #[test]
    fn lb_sizes() {
        let (_, bc) = lb_nominal_sizes(10_000, 0.3);
        assert!((bc - 2500.0).abs() < 1e-9);
        let inst = gen_lb_instance(10_000, 0.3).unwrap();
        assert_eq!(inst.b_set.len(), 2500);
        assert!(inst.certified_distance >= 0.3);
        assert!(inst.asymptotic_regime);
        let (d, a) = distance_to_mixture_family(&inst.q_star, &inst.q_star, &Distribution::uniform(10_000)).unwrap();
        assert!(d < 1e-12 && a == MixtureWeight::ZERO);
    }

    #[test]
    fn lb_rejects_crowded_domain() {
        assert!(gen_lb_instance(50, 0.05).is_err());
    }
}
