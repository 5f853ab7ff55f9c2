use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, MixtureWeight};
use crate::error::{check_same_domain, Error, Result};

use super::bucketing::Bucketing;
use super::division::{interval_spans, CellRef, CellSpan, Segmentation};

/// Slack on the `2ε′` acceptance line so that search orders summing the same
/// costs differently reach the same decision.
const GAP_TOL: f64 = 1e-12;

/// A mixture parameter with a `k`-flat function whose mixture with `q`
/// matches the coarsened empirical distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFlatFit {
    pub alpha: MixtureWeight,
    /// Per-element value of the flat function on each interval.
    pub levels: Vec<f64>,
    pub segmentation: Segmentation,
    /// Coarsened `ℓ₁` distance achieved.
    pub l1_gap: f64,
}

impl KFlatFit {
    /// The flat function as a vector over the domain. It need not sum to 1.
    pub fn flat_function(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.segmentation.n()];
        for (r, &c) in self.segmentation.intervals().into_iter().zip(&self.levels) {
            f[r].fill(c);
        }
        f
    }

    /// `f / Σf`, or the uniform distribution when `f` vanishes.
    pub fn noise_distribution(&self) -> Distribution {
        let f = self.flat_function();
        Distribution::from_weights(&f).unwrap_or_else(|_| Distribution::uniform(f.len()))
    }
}

/// Outcome of a search over mixture parameters and segmentations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSearch {
    /// First feasible fit in grid order.
    pub fit: Option<KFlatFit>,
    /// Smallest gap over the parameters examined; infinite when every
    /// segmentation contains a failing cell.
    pub min_gap: f64,
}

/// `0, ε′/2, ε′, …`, up to and always including 1.
pub fn alpha_grid(eps_prime: f64) -> Vec<f64> {
    let step = eps_prime / 2.0;
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let a = f64::from(i) * step;
        if a >= 1.0 - 1e-12 {
            break;
        }
        out.push(a);
        i += 1;
    }
    out.push(1.0);
    out
}

#[derive(Debug, Clone, Copy)]
struct CellStat {
    p: f64,
    q: f64,
    size: f64,
}

/// Memoized uniformity verdicts; cells of the low-mass bucket are never
/// tested.
struct Verdicts<'b, F> {
    bucketing: &'b Bucketing,
    f: F,
    memo: HashMap<CellSpan, bool>,
}

impl<F: FnMut(CellRef<'_>) -> bool> Verdicts<'_, F> {
    fn passes(&mut self, span: CellSpan) -> bool {
        if self.bucketing.is_low(span.bucket) {
            return true;
        }
        if let Some(&v) = self.memo.get(&span) {
            return v;
        }
        let elements = &self.bucketing.buckets()[span.bucket].elements[span.lo..span.hi];
        let v = (self.f)(CellRef {
            bucket: span.bucket,
            elements,
        });
        self.memo.insert(span, v);
        v
    }
}

struct Problem<'a, F> {
    p_hat: &'a Distribution,
    q: &'a Distribution,
    b: &'a Bucketing,
    k: usize,
    t: usize,
    eps_prime: f64,
    verdicts: Verdicts<'a, F>,
}

impl<'a, F: FnMut(CellRef<'_>) -> bool> Problem<'a, F> {
    fn new(
        p_hat: &'a Distribution,
        q: &'a Distribution,
        b: &'a Bucketing,
        k: usize,
        eps_prime: f64,
        verdict: F,
    ) -> Result<Self> {
        check_same_domain(p_hat.n(), q.n())?;
        check_same_domain(q.n(), b.n())?;
        if k == 0 || k > q.n() {
            return Err(Error::InvalidK { k, n: q.n() });
        }
        if !(eps_prime > 0.0 && eps_prime < 1.0) {
            return Err(Error::InvalidEpsilon(eps_prime));
        }
        Ok(Self {
            p_hat,
            q,
            b,
            k,
            t: k * b.v(),
            eps_prime,
            verdicts: Verdicts {
                bucketing: b,
                f: verdict,
                memo: HashMap::new(),
            },
        })
    }

    /// Cell statistics of an interval, or `None` if a tested cell fails.
    fn interval_cells(&mut self, range: Range<usize>) -> Option<Vec<CellStat>> {
        let spans = interval_spans(self.b, range, self.t, true);
        let mut out = Vec::with_capacity(spans.len());
        for span in spans {
            if !self.verdicts.passes(span) {
                return None;
            }
            let els = &self.b.buckets()[span.bucket].elements[span.lo..span.hi];
            out.push(CellStat {
                p: self.p_hat.mass(els),
                q: self.q.mass(els),
                size: els.len() as f64,
            });
        }
        Some(out)
    }

    fn accepts(&self, gap: f64) -> bool {
        gap <= 2.0 * self.eps_prime + GAP_TOL
    }
}

/// Minimum over a level `c ≥ 0` of `Σ |p̂(D) − (1−α) q(D) − α c |D||`, found as
/// a weighted median of the per-cell optimal levels.
/// Cells of each interval of a segmentation.
type IntervalCells = Vec<Vec<CellStat>>;

fn median_cost(cells: &[CellStat], alpha: f64) -> (f64, f64) {
    let resid = |c: &CellStat| c.p - (1.0 - alpha) * c.q;
    if alpha <= 0.0 {
        return (cells.iter().map(|c| resid(c).abs()).sum(), 0.0);
    }
    let mut pts: Vec<(f64, f64)> = cells
        .iter()
        .map(|c| (resid(c) / (alpha * c.size), alpha * c.size))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = pts.iter().map(|p| p.1).sum::<f64>() / 2.0;
    let mut acc = 0.0;
    let mut level = 0.0;
    for &(x, w) in &pts {
        acc += w;
        if acc >= half {
            level = x;
            break;
        }
    }
    let level = level.max(0.0);
    let cost = cells
        .iter()
        .map(|c| (resid(c) - alpha * level * c.size).abs())
        .sum();
    (cost, level)
}

/// Same minimum by evaluating the convex objective at every breakpoint.
fn breakpoint_cost(cells: &[CellStat], alpha: f64) -> f64 {
    let eval = |level: f64| -> f64 {
        cells
            .iter()
            .map(|c| (c.p - (1.0 - alpha) * c.q - alpha * level * c.size).abs())
            .sum()
    };
    let mut best = eval(0.0);
    if alpha > 0.0 {
        for c in cells {
            let x = (c.p - (1.0 - alpha) * c.q) / (alpha * c.size);
            if x > 0.0 {
                best = best.min(eval(x));
            }
        }
    }
    best
}

/// Searches mixture parameters on the grid `0, ε′/2, …, 1` in order and, for
/// each, the best split of the domain into exactly `k` intervals by dynamic
/// programming. An interval is admissible only if every non-low cell of its
/// refined division passes `verdict`. Returns the first parameter whose
/// coarsened `ℓ₁` gap is at most `2ε′`.
pub fn search_kflat_dp<F>(
    p_hat: &Distribution,
    q: &Distribution,
    b: &Bucketing,
    k: usize,
    eps_prime: f64,
    verdict: F,
) -> Result<FitSearch>
where
    F: FnMut(CellRef<'_>) -> bool,
{
    let mut pr = Problem::new(p_hat, q, b, k, eps_prime, verdict)?;
    let (n, k) = (q.n(), pr.k);
    let idx = |a: usize, e: usize| a * (n + 1) + e;
    let mut table: Vec<Option<Vec<CellStat>>> = vec![None; (n + 1) * (n + 1)];
    for a in 0..n {
        for e in a + 1..=n {
            table[idx(a, e)] = pr.interval_cells(a..e);
        }
    }

    let mut min_gap = f64::INFINITY;
    let mut cost = vec![f64::INFINITY; (n + 1) * (n + 1)];
    let mut level = vec![0.0; (n + 1) * (n + 1)];
    for alpha in alpha_grid(eps_prime) {
        for a in 0..n {
            for e in a + 1..=n {
                if let Some(cells) = &table[idx(a, e)] {
                    let (c, l) = median_cost(cells, alpha);
                    cost[idx(a, e)] = c;
                    level[idx(a, e)] = l;
                }
            }
        }
        // d[j][i]: best gap covering [0, i) with exactly j intervals.
        let mut d = vec![vec![f64::INFINITY; n + 1]; k + 1];
        let mut from = vec![vec![0usize; n + 1]; k + 1];
        d[0][0] = 0.0;
        for j in 1..=k {
            for i in j..=n {
                for a in j - 1..i {
                    let cand = d[j - 1][a] + cost[idx(a, i)];
                    if cand < d[j][i] {
                        d[j][i] = cand;
                        from[j][i] = a;
                    }
                }
            }
        }
        let gap = d[k][n];
        min_gap = min_gap.min(gap);
        if pr.accepts(gap) {
            let mut cuts = Vec::with_capacity(k - 1);
            let mut levels = vec![0.0; k];
            let mut i = n;
            for j in (1..=k).rev() {
                let a = from[j][i];
                levels[j - 1] = level[idx(a, i)];
                if j > 1 {
                    cuts.push(a);
                }
                i = a;
            }
            cuts.reverse();
            return Ok(FitSearch {
                fit: Some(KFlatFit {
                    alpha: MixtureWeight::clamped(alpha),
                    levels,
                    segmentation: Segmentation::from_cuts(n, &cuts)?,
                    l1_gap: gap,
                }),
                min_gap,
            });
        }
    }
    Ok(FitSearch { fit: None, min_gap })
}

/// The fit found by [`search_kflat_dp`], if any.
pub fn fit_kflat_dp<F>(
    p_hat: &Distribution,
    q: &Distribution,
    b: &Bucketing,
    k: usize,
    eps_prime: f64,
    verdict: F,
) -> Result<Option<KFlatFit>>
where
    F: FnMut(CellRef<'_>) -> bool,
{
    Ok(search_kflat_dp(p_hat, q, b, k, eps_prime, verdict)?.fit)
}

fn next_cuts(cuts: &mut [usize], n: usize) -> bool {
    // Advances a strictly increasing tuple in 1..n lexicographically.
    let m = cuts.len();
    for pos in (0..m).rev() {
        let limit = n - (m - pos);
        if cuts[pos] < limit {
            cuts[pos] += 1;
            for j in pos + 1..m {
                cuts[j] = cuts[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Reference search enumerating every segmentation into exactly `k`
/// intervals. Exponential in `k`; meant for small domains.
pub fn exhaustive_kflat_search<F>(
    p_hat: &Distribution,
    q: &Distribution,
    b: &Bucketing,
    k: usize,
    eps_prime: f64,
    verdict: F,
) -> Result<FitSearch>
where
    F: FnMut(CellRef<'_>) -> bool,
{
    let mut pr = Problem::new(p_hat, q, b, k, eps_prime, verdict)?;
    let (n, k) = (q.n(), pr.k);
    let mut segs: Vec<(Vec<usize>, Option<IntervalCells>)> = Vec::new();
    let mut cuts: Vec<usize> = (1..k).collect();
    loop {
        let seg = Segmentation::from_cuts(n, &cuts)?;
        let cells: Option<Vec<_>> = seg.intervals().into_iter().map(|r| pr.interval_cells(r)).collect();
        segs.push((cuts.clone(), cells));
        if !next_cuts(&mut cuts, n) {
            break;
        }
    }
    let mut min_gap = f64::INFINITY;
    for alpha in alpha_grid(eps_prime) {
        let mut best: Option<(f64, &Vec<usize>)> = None;
        for (cuts, cells) in &segs {
            let Some(cells) = cells else { continue };
            let gap: f64 = cells.iter().map(|c| breakpoint_cost(c, alpha)).sum();
            if best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, cuts));
            }
        }
        let Some((gap, cuts)) = best else { continue };
        min_gap = min_gap.min(gap);
        if pr.accepts(gap) {
            let seg = Segmentation::from_cuts(n, cuts)?;
            let levels = seg
                .intervals()
                .into_iter()
                .map(|r| median_cost(&pr.interval_cells(r).expect("admissible"), alpha).1)
                .collect();
            return Ok(FitSearch {
                fit: Some(KFlatFit {
                    alpha: MixtureWeight::clamped(alpha),
                    levels,
                    segmentation: seg,
                    l1_gap: gap,
                }),
                min_gap,
            });
        }
    }
    Ok(FitSearch { fit: None, min_gap })
}
