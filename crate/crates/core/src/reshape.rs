//! Splitting each element into equal-mass buckets.
//!
//! Element `i` is expanded into `a_i ≥ 1` buckets laid out contiguously
//! starting at `offsets[i]`; a distribution `d` becomes `d'(i, j) = d(i)/a_i`.
//! Two plans are provided: the three-term plan derived from a reference
//! mixture `q_α` (used by the known-noise identity tester), and the
//! sample-driven flattening plan used by the closeness tester.

use rand::Rng;

use crate::dist::{l1_distance, CountVector, Distribution};
use crate::error::{check_same_domain, Error, Result};
use crate::sampling::{split_uniform, SampleSource};

/// Slack added before flooring so that products like `n · (1/n)` that land a
/// rounding error below an integer are not truncated.
const FLOOR_SLACK: f64 = 1e-9;

/// Per-element bucket counts and the flat layout of the expanded domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReshapePlan {
    buckets: Vec<usize>,
    offsets: Vec<usize>,
    total_size: usize,
}

impl ReshapePlan {
    pub fn from_buckets(buckets: Vec<usize>) -> Result<Self> {
        if buckets.is_empty() {
            return Err(Error::EmptyDomain);
        }
        if buckets.contains(&0) {
            return Err(Error::InvalidConfig("every element needs at least one bucket".into()));
        }
        let mut offsets = Vec::with_capacity(buckets.len());
        let mut acc = 0;
        for &a in &buckets {
            offsets.push(acc);
            acc += a;
        }
        Ok(Self {
            buckets,
            offsets,
            total_size: acc,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_buckets(vec![1; n]).expect("n > 0")
    }

    pub fn n(&self) -> usize {
        self.buckets.len()
    }

    pub fn buckets(&self) -> &[usize] {
        &self.buckets
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Size of the expanded domain, `Σ a_i`.
    pub fn total_size(&self) -> usize {
        self.total_size
    }

    /// The original element a flat index came from.
    pub fn source_of(&self, flat: usize) -> usize {
        match self.offsets.binary_search(&flat) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }
}

/// `a_i = ⌊n q_α(i)⌋ + ⌊n |q_α(i) − q2(i)| / ‖q_α − q2‖₁⌋ + 1`, with the middle
/// term taken as zero when `q_α = q2`.
pub fn build_reshape_plan(q_alpha: &Distribution, q2: &Distribution) -> Result<ReshapePlan> {
    check_same_domain(q_alpha.n(), q2.n())?;
    let n = q_alpha.n() as f64;
    let gap = l1_distance(q_alpha, q2)?;
    let buckets = (0..q_alpha.n())
        .map(|i| {
            let own = (n * q_alpha.prob(i) + FLOOR_SLACK).floor();
            let spread = if gap > 0.0 {
                (n * (q_alpha.prob(i) - q2.prob(i)).abs() / gap + FLOOR_SLACK).floor()
            } else {
                0.0
            };
            own as usize + spread as usize + 1
        })
        .collect();
    ReshapePlan::from_buckets(buckets)
}

/// Pushes `d` through the plan: bucket `(i, j)` receives `d(i) / a_i`.
pub fn reshape_distribution(d: &Distribution, plan: &ReshapePlan) -> Result<Distribution> {
    check_same_domain(d.n(), plan.n())?;
    let mut pmf = Vec::with_capacity(plan.total_size);
    for (i, &a) in plan.buckets.iter().enumerate() {
        let share = d.prob(i) / a as f64;
        pmf.extend(std::iter::repeat_n(share, a));
    }
    Ok(Distribution::from_raw(pmf))
}

/// Maps one sample `i` to a uniformly chosen bucket of `i`.
pub fn reshape_sample<R: Rng + ?Sized>(i: usize, plan: &ReshapePlan, rng: &mut R) -> Result<usize> {
    if i >= plan.n() {
        return Err(Error::IndexOutOfRange { index: i, n: plan.n() });
    }
    let j = rng.random_range(0..plan.buckets[i]);
    Ok(plan.offsets[i] + j)
}

/// Maps a whole count vector through the plan: the samples of element `i`
/// are spread uniformly over its buckets. Equivalent in distribution to
/// calling [`reshape_sample`] once per sample.
pub fn reshape_counts<R: Rng + ?Sized>(
    counts: &CountVector,
    plan: &ReshapePlan,
    rng: &mut R,
) -> Result<CountVector> {
    check_same_domain(counts.n(), plan.n())?;
    let mut out = Vec::with_capacity(plan.total_size);
    for (i, &a) in plan.buckets.iter().enumerate() {
        out.extend(split_uniform(counts.count(i), a, rng));
    }
    Ok(CountVector::new(out, counts.nominal_s()))
}

/// Sample access to the reshaping of another source.
pub struct ReshapedSource<'a, S: SampleSource> {
    inner: S,
    plan: &'a ReshapePlan,
}

impl<'a, S: SampleSource> ReshapedSource<'a, S> {
    pub fn new(inner: S, plan: &'a ReshapePlan) -> Result<Self> {
        check_same_domain(inner.domain_size(), plan.n())?;
        Ok(Self { inner, plan })
    }
}

impl<S: SampleSource> SampleSource for ReshapedSource<'_, S> {
    fn domain_size(&self) -> usize {
        self.plan.total_size
    }

    fn draw<R: Rng + ?Sized>(&mut self, count: u64, rng: &mut R) -> CountVector {
        let c = self.inner.draw(count, rng);
        reshape_counts(&c, self.plan, rng).expect("plan matches source domain")
    }

    fn draw_poisson<R: Rng + ?Sized>(&mut self, s: f64, rng: &mut R) -> CountVector {
        let c = self.inner.draw_poisson(s, rng);
        reshape_counts(&c, self.plan, rng).expect("plan matches source domain")
    }

    fn samples_drawn(&self) -> u64 {
        self.inner.samples_drawn()
    }
}

/// Flattening plan driven by a pooled sample: `b_i` is one plus the number of
/// pooled occurrences of `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlattenPlan {
    plan: ReshapePlan,
    k_flatten: u64,
}

impl FlattenPlan {
    pub fn from_pooled_counts(pooled: &CountVector, k_flatten: u64) -> Result<Self> {
        let buckets = pooled.counts().iter().map(|&c| c as usize + 1).collect();
        Ok(Self {
            plan: ReshapePlan::from_buckets(buckets)?,
            k_flatten,
        })
    }

    pub fn plan(&self) -> &ReshapePlan {
        &self.plan
    }

    pub fn k_flatten(&self) -> u64 {
        self.k_flatten
    }
}

/// Draws `k` samples from each of the three sources and pools them.
pub fn build_flatten_plan<R, P, A, B>(
    p: &mut P,
    q1: &mut A,
    q2: &mut B,
    k: u64,
    rng: &mut R,
) -> Result<FlattenPlan>
where
    R: Rng + ?Sized,
    P: SampleSource,
    A: SampleSource,
    B: SampleSource,
{
    check_same_domain(p.domain_size(), q1.domain_size())?;
    check_same_domain(p.domain_size(), q2.domain_size())?;
    let pooled = p
        .draw(k, rng)
        .merged(&q1.draw(k, rng))?
        .merged(&q2.draw(k, rng))?;
    FlattenPlan::from_pooled_counts(&pooled, k)
}
