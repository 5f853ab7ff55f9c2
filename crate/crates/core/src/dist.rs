//! Discrete distributions over `[0, n)` and the geometry the testers need:
//! mixtures, ℓp distances, coarsening over a partition, restriction to a cell,
//! and the exact ℓ₁ distance from a distribution to a two-component mixture
//! family.

use serde::{Deserialize, Serialize};

use crate::error::{check_same_domain, Error, Result};

/// Tolerance on the total mass of a probability vector.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability mass function over the elements `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pmf: Vec<f64>,
}

impl Distribution {
    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyDomain);
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight { index });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(Self {
            pmf: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Accepts a probability vector that already sums to one (within
    /// [`NORMALIZATION_TOL`]) and renormalizes away the residual.
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        let d = Self::from_weights(&pmf)?;
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidConfig(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(d)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty domain");
        Self {
            pmf: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        if at >= n {
            return Err(Error::IndexOutOfRange { index: at, n });
        }
        let mut pmf = vec![0.0; n];
        pmf[at] = 1.0;
        Ok(Self { pmf })
    }

    /// Builds a distribution from an already-valid pmf without checks.
    /// Callers guarantee nonnegativity and unit mass.
    pub(crate) fn from_raw(pmf: Vec<f64>) -> Self {
        debug_assert!(pmf.iter().all(|&x| x >= 0.0));
        Self { pmf }
    }

    pub fn n(&self) -> usize {
        self.pmf.len()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.pmf[i]
    }

    /// Total probability of a set of elements.
    pub fn mass(&self, cell: &[usize]) -> f64 {
        cell.iter().map(|&i| self.pmf[i]).sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.pmf.iter().map(|x| x * x).sum()
    }

    pub fn into_pmf(self) -> Vec<f64> {
        self.pmf
    }
}

/// Normalizes a weight vector; see [`Distribution::from_weights`].
pub fn make_distribution(weights: &[f64]) -> Result<Distribution> {
    Distribution::from_weights(weights)
}

/// A mixture parameter `α ∈ [0, 1]`, the weight on the second component.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MixtureWeight(f64);

impl MixtureWeight {
    pub const ZERO: Self = Self(0.0);
    pub const ONE: Self = Self(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(Self(alpha))
    }

    /// Clamps any real (NaN maps to 0) into `[0, 1]`.
    pub fn clamped(alpha: f64) -> Self {
        if alpha.is_nan() {
            return Self(0.0);
        }
        Self(alpha.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `(1 − α)·q1 + α·q2`.
pub fn mix(q1: &Distribution, q2: &Distribution, alpha: MixtureWeight) -> Result<Distribution> {
    check_same_domain(q1.n(), q2.n())?;
    let a = alpha.value();
    let pmf = q1
        .pmf
        .iter()
        .zip(&q2.pmf)
        .map(|(x, y)| ((1.0 - a) * x + a * y).max(0.0))
        .collect();
    Ok(Distribution { pmf })
}

/// Orders of the ℓp norms used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    L4,
}

/// `‖v‖_p` of a real vector.
pub fn lp_norm(v: impl IntoIterator<Item = f64>, order: Norm) -> f64 {
    match order {
        Norm::L1 => v.into_iter().map(f64::abs).sum(),
        Norm::L2 => v.into_iter().map(|x| x * x).sum::<f64>().sqrt(),
        Norm::L4 => v.into_iter().map(|x| (x * x) * (x * x)).sum::<f64>().powf(0.25),
    }
}

pub fn lp_distance(p: &Distribution, q: &Distribution, order: Norm) -> Result<f64> {
    check_same_domain(p.n(), q.n())?;
    Ok(lp_norm(p.pmf.iter().zip(&q.pmf).map(|(a, b)| a - b), order))
}

pub fn l1_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    lp_distance(p, q, Norm::L1)
}

/// Squared Euclidean distance, the quantity the ℓ₂ statistics estimate.
pub fn l2_distance_sq(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_domain(p.n(), q.n())?;
    Ok(p.pmf.iter().zip(&q.pmf).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Disjoint cells of element indices over a domain of size `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    cells: Vec<Vec<usize>>,
    n: usize,
    cover_all: bool,
}

impl Partition {
    pub fn new(cells: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut covered = 0;
        for cell in &cells {
            if cell.is_empty() {
                return Err(Error::EmptyCell);
            }
            for &x in cell {
                if x >= n || seen[x] {
                    return Err(Error::InvalidPartition { n });
                }
                seen[x] = true;
                covered += 1;
            }
        }
        Ok(Self {
            cells,
            n,
            cover_all: covered == n,
        })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            cells: (0..n).map(|i| vec![i]).collect(),
            n,
            cover_all: true,
        }
    }

    pub fn whole(n: usize) -> Self {
        Self {
            cells: vec![(0..n).collect()],
            n,
            cover_all: true,
        }
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn covers_all(&self) -> bool {
        self.cover_all
    }
}

/// The induced distribution over the cells of a covering partition.
pub fn coarsen(p: &Distribution, part: &Partition) -> Result<Distribution> {
    check_same_domain(p.n(), part.n)?;
    if !part.cover_all {
        return Err(Error::IncompletePartition);
    }
    Ok(Distribution {
        pmf: part.cells.iter().map(|c| p.mass(c)).collect(),
    })
}

/// The conditional distribution of `p` on `cell`, indexed in the order the
/// cell lists its elements. Returns `None` when the cell carries no mass.
pub fn restrict(p: &Distribution, cell: &[usize]) -> Result<Option<Distribution>> {
    if cell.is_empty() {
        return Err(Error::EmptyCell);
    }
    if let Some(&bad) = cell.iter().find(|&&x| x >= p.n()) {
        return Err(Error::IndexOutOfRange { index: bad, n: p.n() });
    }
    let mass = p.mass(cell);
    if mass <= 0.0 {
        return Ok(None);
    }
    Ok(Some(Distribution {
        pmf: cell.iter().map(|&x| p.pmf[x] / mass).collect(),
    }))
}

/// `‖p_|cell − q_|cell‖₁`, taken to be zero when either side has no mass on
/// the cell.
pub fn restricted_l1(p: &Distribution, q: &Distribution, cell: &[usize]) -> Result<f64> {
    check_same_domain(p.n(), q.n())?;
    match (restrict(p, cell)?, restrict(q, cell)?) {
        (Some(a), Some(b)) => l1_distance(&a, &b),
        _ => Ok(0.0),
    }
}

/// Exact `min_{α ∈ [0,1]} ‖p − ((1−α) q1 + α q2)‖₁` and a minimizer.
///
/// The objective `g(α) = Σ |d_i + α e_i|` with `d = p − q1`, `e = q1 − q2` is
/// convex and piecewise linear; its kinks are the roots `−d_i / e_i`. We sweep
/// the kinks in order, tracking the slope, and re-evaluate the best point
/// exactly.
pub fn distance_to_mixture_family(
    p: &Distribution,
    q1: &Distribution,
    q2: &Distribution,
) -> Result<(f64, MixtureWeight)> {
    check_same_domain(p.n(), q1.n())?;
    check_same_domain(p.n(), q2.n())?;
    let d: Vec<f64> = p.pmf.iter().zip(&q1.pmf).map(|(a, b)| a - b).collect();
    let e: Vec<f64> = q1.pmf.iter().zip(&q2.pmf).map(|(a, b)| a - b).collect();
    let objective = |alpha: f64| -> f64 {
        d.iter()
            .zip(&e)
            .map(|(di, ei)| (di + alpha * ei).abs())
            .sum()
    };

    // Right-derivative at 0 and the kinks strictly inside (0, 1).
    let mut slope = 0.0;
    let mut kinks: Vec<(f64, f64)> = Vec::new();
    for (&di, &ei) in d.iter().zip(&e) {
        if ei == 0.0 {
            continue;
        }
        let sign = if di > 0.0 || (di == 0.0 && ei > 0.0) {
            1.0
        } else {
            -1.0
        };
        slope += sign * ei;
        let root = -di / ei;
        if root > 0.0 && root < 1.0 {
            kinks.push((root, 2.0 * ei.abs()));
        }
    }
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best_alpha = 0.0;
    let mut best_val = objective(0.0);
    let mut pos = 0.0;
    let mut val = best_val;
    for &(root, jump) in &kinks {
        val += slope * (root - pos);
        pos = root;
        slope += jump;
        if val < best_val {
            best_val = val;
            best_alpha = root;
        }
    }
    let end = objective(1.0);
    if end < best_val {
        best_alpha = 1.0;
    }
    // The sweep accumulates rounding; report the objective at the chosen point.
    let exact = objective(best_alpha);
    Ok((exact.max(0.0), MixtureWeight::clamped(best_alpha)))
}

/// Vector of per-element sample counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
    /// Poisson parameter or fixed draw size the counts were generated with.
    nominal_s: f64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>, nominal_s: f64) -> Self {
        let total = counts.iter().sum();
        Self {
            counts,
            total,
            nominal_s,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0; n], 0.0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn nominal_s(&self) -> f64 {
        self.nominal_s
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    /// Element-wise sum of two count vectors over the same domain; nominal
    /// sizes add.
    pub fn merged(&self, other: &CountVector) -> Result<CountVector> {
        check_same_domain(self.n(), other.n())?;
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CountVector::new(counts, self.nominal_s + other.nominal_s))
    }

    /// Empirical distribution `count_i / total`.
    pub fn empirical(&self) -> Result<Distribution> {
        if self.total == 0 {
            return Err(Error::EmptyCounts);
        }
        let t = self.total as f64;
        Ok(Distribution {
            pmf: self.counts.iter().map(|&c| c as f64 / t).collect(),
        })
    }
}
