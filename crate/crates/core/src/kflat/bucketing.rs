use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};

/// One group of elements with similar reference probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    /// `None` for the low-mass bucket `{x : q(x) ≤ ε′²/n}`; otherwise the
    /// exponent `e ≥ 0` with `(1+ε′)^e ε′²/n < q(x) ≤ (1+ε′)^{e+1} ε′²/n`.
    pub band: Option<i32>,
    /// Members in increasing order.
    pub elements: Vec<usize>,
}

/// Partition of the domain into geometric probability bands of `q`. Only
/// nonempty buckets are stored; the low-mass bucket, when present, is first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucketing {
    buckets: Vec<Bucket>,
    bucket_of: Vec<usize>,
    eps_prime: f64,
    n: usize,
}

fn low_cutoff(eps_prime: f64, n: usize) -> f64 {
    eps_prime * eps_prime / n as f64
}

fn band_of(q: f64, eps_prime: f64, n: usize) -> Option<i32> {
    let cut = low_cutoff(eps_prime, n);
    if q <= cut {
        return None;
    }
    let base = 1.0 + eps_prime;
    let mut e = ((q / cut).ln() / base.ln()).ceil() as i32 - 1;
    // Correct rounding in the logarithms against the defining inequalities.
    while e > 0 && base.powi(e) * cut >= q {
        e -= 1;
    }
    while base.powi(e + 1) * cut < q {
        e += 1;
    }
    Some(e.max(0))
}

impl Bucketing {
    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    /// Number of nonempty buckets.
    pub fn v(&self) -> usize {
        self.buckets.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    /// Position in [`Bucketing::buckets`] of the bucket holding `x`.
    pub fn bucket_of(&self, x: usize) -> usize {
        self.bucket_of[x]
    }

    pub fn is_low(&self, j: usize) -> bool {
        self.buckets[j].band.is_none()
    }

    /// `(lower, upper]` probability range of bucket `j`; the low bucket is
    /// `[0, ε′²/n]`.
    pub fn range(&self, j: usize) -> (f64, f64) {
        let cut = low_cutoff(self.eps_prime, self.n);
        match self.buckets[j].band {
            None => (0.0, cut),
            Some(e) => {
                let base = 1.0 + self.eps_prime;
                (base.powi(e) * cut, base.powi(e + 1) * cut)
            }
        }
    }
}

/// Groups the elements of `[n]` by `q`-probability band with ratio `1 + ε′`.
pub fn bucket(q: &Distribution, eps_prime: f64) -> Result<Bucketing> {
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(Error::InvalidEpsilon(eps_prime));
    }
    let n = q.n();
    let bands: Vec<Option<i32>> = q.pmf().iter().map(|&x| band_of(x, eps_prime, n)).collect();
    let mut keys: Vec<Option<i32>> = bands.clone();
    keys.sort_unstable();
    keys.dedup();
    let mut buckets: Vec<Bucket> = keys
        .iter()
        .map(|&band| Bucket {
            band,
            elements: Vec::new(),
        })
        .collect();
    let mut bucket_of = Vec::with_capacity(n);
    for (x, band) in bands.iter().enumerate() {
        let j = keys.binary_search(band).expect("key collected above");
        buckets[j].elements.push(x);
        bucket_of.push(j);
    }
    Ok(Bucketing {
        buckets,
        bucket_of,
        eps_prime,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_lands_in_one_band() {
        let n = 37;
        let eps = 0.1;
        let b = bucket(&Distribution::uniform(n), eps).unwrap();
        assert_eq!(b.v(), 1);
        let e = b.buckets()[0].band.unwrap();
        let cut = eps * eps / n as f64;
        let u = 1.0 / n as f64;
        assert!(1.1f64.powi(e) * cut < u && u <= 1.1f64.powi(e + 1) * cut);
    }

    #[test]
    fn tiny_mass_goes_low() {
        let n = 10;
        let eps = 0.2;
        let mut w = vec![1.0; n];
        w[3] = 0.0;
        let q = Distribution::from_weights(&w).unwrap();
        let b = bucket(&q, eps).unwrap();
        assert!(b.is_low(b.bucket_of(3)));
        assert_eq!(b.buckets()[0].elements, vec![3]);
    }

    #[test]
    fn bands_respect_ratio() {
        let w: Vec<f64> = (1..=200).map(|i| (i as f64).powf(1.7)).collect();
        let q = Distribution::from_weights(&w).unwrap();
        let eps = 0.15;
        let b = bucket(&q, eps).unwrap();
        let mut seen = 0;
        for (j, bk) in b.buckets().iter().enumerate() {
            let (lo, hi) = b.range(j);
            for &x in &bk.elements {
                let p = q.prob(x);
                assert!((p > lo || bk.band.is_none()) && p <= hi);
            }
            seen += bk.elements.len();
            if bk.band.is_some() {
                let max = bk.elements.iter().map(|&x| q.prob(x)).fold(0.0, f64::max);
                let min = bk.elements.iter().map(|&x| q.prob(x)).fold(1.0, f64::min);
                assert!(max / min <= 1.0 + eps);
            }
        }
        assert_eq!(seen, 200);
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(bucket(&Distribution::uniform(3), 1.0).is_err());
        assert!(bucket(&Distribution::uniform(3), 0.0).is_err());
    }
}
