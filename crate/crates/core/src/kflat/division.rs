use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dist::{coarsen, CountVector, Distribution, Partition};
use crate::error::{check_same_domain, Error, Result};

use super::bucketing::Bucketing;

/// Ordered cover of `[0, n)` by nonempty contiguous intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    n: usize,
    /// Exclusive end of each interval; the last one equals `n`.
    ends: Vec<usize>,
}

impl Segmentation {
    pub fn new(intervals: &[Range<usize>], n: usize) -> Result<Self> {
        let mut expected = 0;
        let mut ends = Vec::with_capacity(intervals.len());
        for r in intervals {
            if r.start != expected || r.end <= r.start {
                return Err(Error::InvalidPartition { n });
            }
            expected = r.end;
            ends.push(r.end);
        }
        if expected != n || n == 0 {
            return Err(Error::IncompletePartition);
        }
        Ok(Self { n, ends })
    }

    /// Intervals split at the given strictly increasing interior cut points.
    pub fn from_cuts(n: usize, cuts: &[usize]) -> Result<Self> {
        let mut bounds = Vec::with_capacity(cuts.len() + 2);
        bounds.push(0);
        bounds.extend_from_slice(cuts);
        bounds.push(n);
        let intervals: Vec<Range<usize>> = bounds.windows(2).map(|w| w[0]..w[1]).collect();
        Self::new(&intervals, n)
    }

    pub fn single(n: usize) -> Result<Self> {
        Self::from_cuts(n, &[])
    }

    pub fn k(&self) -> usize {
        self.ends.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn intervals(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.ends
            .iter()
            .map(|&end| {
                let r = start..end;
                start = end;
                r
            })
            .collect()
    }
}

/// A cell `interval ∩ bucket`, or one part of it after refinement, given as a
/// contiguous run of the bucket's sorted member list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct CellSpan {
    pub bucket: usize,
    pub lo: usize,
    pub hi: usize,
}

/// Borrowed view of a cell handed to uniformity verdict callbacks.
#[derive(Debug, Clone, Copy)]
pub struct CellRef<'a> {
    pub bucket: usize,
    /// Members in increasing order.
    pub elements: &'a [usize],
}

/// Cells of `range` for every bucket, split into `⌊z·t/n⌋ + 1` near-equal
/// consecutive parts when `refine` and the size `z` exceeds `⌈n/t⌉`. When
/// `t > n` that count can exceed `z`; the cell is then split into singletons.
pub(crate) fn interval_spans(b: &Bucketing, range: Range<usize>, t: usize, refine: bool) -> Vec<CellSpan> {
    let n = b.n();
    let cap = n.div_ceil(t.max(1));
    let mut out = Vec::new();
    for (j, bk) in b.buckets().iter().enumerate() {
        let lo = bk.elements.partition_point(|&x| x < range.start);
        let hi = bk.elements.partition_point(|&x| x < range.end);
        let z = hi - lo;
        if z == 0 {
            continue;
        }
        let parts = if refine && z > cap { (z * t / n + 1).min(z) } else { 1 };
        let (base, extra) = (z / parts, z % parts);
        let mut at = lo;
        for p in 0..parts {
            let len = base + usize::from(p < extra);
            out.push(CellSpan {
                bucket: j,
                lo: at,
                hi: at + len,
            });
            at += len;
        }
    }
    out
}

/// One cell of a division together with its coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub interval: usize,
    pub bucket: usize,
    pub part: usize,
    pub elements: Vec<usize>,
}

/// Nonempty intersections of a segmentation with a bucketing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Division {
    cells: Vec<Cell>,
    /// `k · v`.
    t: usize,
    refined: bool,
    n: usize,
}

impl Division {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn refined(&self) -> bool {
        self.refined
    }

    pub fn partition(&self) -> Partition {
        Partition::new(self.cells.iter().map(|c| c.elements.clone()).collect(), self.n)
            .expect("division cells partition the domain")
    }
}

pub fn build_division(seg: &Segmentation, b: &Bucketing, refine: bool) -> Result<Division> {
    check_same_domain(seg.n(), b.n())?;
    let t = seg.k() * b.v();
    let mut cells = Vec::new();
    for (i, range) in seg.intervals().into_iter().enumerate() {
        let mut last_bucket = usize::MAX;
        let mut part = 0;
        for span in interval_spans(b, range, t, refine) {
            if span.bucket != last_bucket {
                last_bucket = span.bucket;
                part = 0;
            }
            cells.push(Cell {
                interval: i,
                bucket: span.bucket,
                part,
                elements: b.buckets()[span.bucket].elements[span.lo..span.hi].to_vec(),
            });
            part += 1;
        }
    }
    Ok(Division {
        cells,
        t,
        refined: refine,
        n: seg.n(),
    })
}

/// Empirical distribution of the counts, coarsened over the division's cells.
pub fn coarsened_empirical(p_counts: &CountVector, div: &Division) -> Result<Distribution> {
    check_same_domain(p_counts.n(), div.n)?;
    coarsen(&p_counts.empirical()?, &div.partition())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kflat::bucketing::bucket;

    fn two_level(n: usize) -> Distribution {
        let w: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 3.0 } else { 1.0 }).collect();
        Distribution::from_weights(&w).unwrap()
    }

    #[test]
    fn segmentation_validation() {
        assert!(Segmentation::new(&[0..3, 3..5], 5).is_ok());
        assert!(Segmentation::new(&[0..3, 4..5], 5).is_err());
        assert!(Segmentation::new(&[0..3], 5).is_err());
        assert!(Segmentation::from_cuts(5, &[2, 2]).is_err());
        assert_eq!(Segmentation::from_cuts(5, &[2]).unwrap().intervals(), vec![0..2, 2..5]);
    }

    #[test]
    fn single_interval_gives_buckets() {
        let q = two_level(30);
        let b = bucket(&q, 0.1).unwrap();
        let d = build_division(&Segmentation::single(30).unwrap(), &b, false).unwrap();
        assert_eq!(d.cells().len(), b.v());
        for (c, bk) in d.cells().iter().zip(b.buckets()) {
            assert_eq!(c.elements, bk.elements);
        }
    }

    #[test]
    fn cells_sit_inside_interval_and_bucket() {
        let q = two_level(40);
        let b = bucket(&q, 0.1).unwrap();
        let seg = Segmentation::from_cuts(40, &[7, 23]).unwrap();
        let ivs = seg.intervals();
        for refine in [false, true] {
            let d = build_division(&seg, &b, refine).unwrap();
            let mut covered = 0;
            for c in d.cells() {
                for &x in &c.elements {
                    assert!(ivs[c.interval].contains(&x));
                    assert_eq!(b.bucket_of(x), c.bucket);
                }
                covered += c.elements.len();
                if refine {
                    assert!(c.elements.len() <= 40usize.div_ceil(d.t()));
                }
            }
            assert_eq!(covered, 40);
            assert!(d.cells().len() <= 2 * d.t());
        }
    }

    #[test]
    fn oversized_cell_split_in_three() {
        // One bucket, k = 4, n = 40: t = 4, cap = 10; an interval of 20 splits
        // into ⌊20·4/40⌋ + 1 = 3 parts.
        let q = Distribution::uniform(40);
        let b = bucket(&q, 0.1).unwrap();
        let seg = Segmentation::from_cuts(40, &[20, 30, 35]).unwrap();
        let d = build_division(&seg, &b, true).unwrap();
        let sizes: Vec<usize> = d
            .cells()
            .iter()
            .filter(|c| c.interval == 0)
            .map(|c| c.elements.len())
            .collect();
        assert_eq!(sizes, vec![7, 7, 6]);
    }

    #[test]
    fn more_parts_than_elements_gives_singletons() {
        // Three buckets and k = 3 on n = 6: t = 9 > n, cap = 1.
        let q = Distribution::from_weights(&[1.0, 1.0, 4.0, 4.0, 16.0, 16.0]).unwrap();
        let b = bucket(&q, 0.1).unwrap();
        assert_eq!(b.v(), 3);
        let seg = Segmentation::from_cuts(6, &[1, 2]).unwrap();
        let d = build_division(&seg, &b, true).unwrap();
        assert!(d.cells().iter().all(|c| c.elements.len() == 1));
        assert_eq!(d.cells().len(), 6);
    }

    #[test]
    fn coarsened_point_mass() {
        let q = two_level(12);
        let b = bucket(&q, 0.1).unwrap();
        let d = build_division(&Segmentation::from_cuts(12, &[6]).unwrap(), &b, false).unwrap();
        let mut counts = vec![0; 12];
        counts[4] = 9;
        let e = coarsened_empirical(&CountVector::new(counts, 9.0), &d).unwrap();
        let hit = d.cells().iter().position(|c| c.elements.contains(&4)).unwrap();
        for (j, &m) in e.pmf().iter().enumerate() {
            assert_eq!(m, if j == hit { 1.0 } else { 0.0 });
        }
    }
}
