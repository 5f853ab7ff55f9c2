//! Seeded randomness, multinomial and Poissonized draws, and the
//! sample-access abstraction the testers consume.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _, Poisson};

use crate::dist::{CountVector, Distribution, MixtureWeight};
use crate::error::{check_same_domain, Result};

/// The deterministic generator used across the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over `(seed, stream)`; distinct streams give
/// statistically independent child seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p)
        .expect("binomial parameters validated above")
        .sample(rng)
}

pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite Poisson mean")
        .sample(rng) as u64
}

/// Splits `count` items uniformly at random into `parts` bins.
pub(crate) fn split_uniform<R: Rng + ?Sized>(count: u64, parts: usize, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0; parts];
    let mut remaining = count;
    for (j, slot) in out.iter_mut().enumerate() {
        if remaining == 0 {
            break;
        }
        let left = (parts - j) as u64;
        let take = if left == 1 {
            remaining
        } else {
            binomial(remaining, 1.0 / left as f64, rng)
        };
        *slot = take;
        remaining -= take;
    }
    out
}

/// Multinomial draw of `count` samples from `d`, via conditional binomials.
pub fn sample<R: Rng + ?Sized>(d: &Distribution, count: u64, rng: &mut R) -> CountVector {
    let n = d.n();
    // suffix[i] = mass of elements i.., summed from the back so that trailing
    // zero-mass elements see an exact zero.
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + d.prob(i);
    }
    let mut counts = vec![0u64; n];
    let mut remaining = count;
    for (i, slot) in counts.iter_mut().enumerate() {
        if remaining == 0 {
            break;
        }
        if suffix[i + 1] <= 0.0 {
            *slot = remaining;
            break;
        }
        let ratio = d.prob(i) / suffix[i];
        let take = binomial(remaining, ratio.clamp(0.0, 1.0), rng);
        *slot = take;
        remaining -= take;
    }
    CountVector::new(counts, count as f64)
}

/// Independent `Poi(s · d(i))` counts per element. Draws above `100·s` are
/// redrawn, which conditions away an event of negligible probability.
pub fn poisson_sample<R: Rng + ?Sized>(d: &Distribution, s: f64, rng: &mut R) -> CountVector {
    assert!(s > 0.0 && s.is_finite(), "Poisson parameter must be positive");
    let cap = 100.0 * s.max(1.0);
    let counts = d
        .pmf()
        .iter()
        .map(|&pi| loop {
            let c = poisson(s * pi, rng);
            if (c as f64) <= cap {
                break c;
            }
        })
        .collect();
    CountVector::new(counts, s)
}

/// Sample access to an unknown distribution. Implementations count every
/// sample they hand out.
pub trait SampleSource {
    fn domain_size(&self) -> usize;

    /// Exactly `count` i.i.d. samples, returned as counts.
    fn draw<R: Rng + ?Sized>(&mut self, count: u64, rng: &mut R) -> CountVector;

    /// `Poi(s)` samples, so that counts are independent `Poi(s·p(i))`.
    fn draw_poisson<R: Rng + ?Sized>(&mut self, s: f64, rng: &mut R) -> CountVector;

    /// Total number of samples handed out so far.
    fn samples_drawn(&self) -> u64;
}

/// Samples from an explicitly known distribution.
#[derive(Debug, Clone)]
pub struct DistSource {
    dist: Distribution,
    drawn: u64,
}

impl DistSource {
    pub fn new(dist: Distribution) -> Self {
        Self { dist, drawn: 0 }
    }

    pub fn dist(&self) -> &Distribution {
        &self.dist
    }
}

impl SampleSource for DistSource {
    fn domain_size(&self) -> usize {
        self.dist.n()
    }

    fn draw<R: Rng + ?Sized>(&mut self, count: u64, rng: &mut R) -> CountVector {
        let c = sample(&self.dist, count, rng);
        self.drawn += c.total();
        c
    }

    fn draw_poisson<R: Rng + ?Sized>(&mut self, s: f64, rng: &mut R) -> CountVector {
        let c = poisson_sample(&self.dist, s, rng);
        self.drawn += c.total();
        c
    }

    fn samples_drawn(&self) -> u64 {
        self.drawn
    }
}

impl<S: SampleSource + ?Sized> SampleSource for &mut S {
    fn domain_size(&self) -> usize {
        (**self).domain_size()
    }

    fn draw<R: Rng + ?Sized>(&mut self, count: u64, rng: &mut R) -> CountVector {
        (**self).draw(count, rng)
    }

    fn draw_poisson<R: Rng + ?Sized>(&mut self, s: f64, rng: &mut R) -> CountVector {
        (**self).draw_poisson(s, rng)
    }

    fn samples_drawn(&self) -> u64 {
        (**self).samples_drawn()
    }
}

/// Sample access to `(1 − α)·q1 + α·q2` built from two sample streams: each
/// sample flips an α-biased coin to pick its stream.
pub struct MixtureSource<'a, A: SampleSource, B: SampleSource> {
    first: &'a mut A,
    second: &'a mut B,
    alpha: MixtureWeight,
}

impl<'a, A: SampleSource, B: SampleSource> MixtureSource<'a, A, B> {
    pub fn new(first: &'a mut A, second: &'a mut B, alpha: MixtureWeight) -> Result<Self> {
        check_same_domain(first.domain_size(), second.domain_size())?;
        Ok(Self {
            first,
            second,
            alpha,
        })
    }
}

impl<A: SampleSource, B: SampleSource> SampleSource for MixtureSource<'_, A, B> {
    fn domain_size(&self) -> usize {
        self.first.domain_size()
    }

    fn draw<R: Rng + ?Sized>(&mut self, count: u64, rng: &mut R) -> CountVector {
        let from_second = binomial(count, self.alpha.value(), rng);
        let a = self.first.draw(count - from_second, rng);
        let b = self.second.draw(from_second, rng);
        let mut merged = a.merged(&b).expect("same domain");
        merged = CountVector::new(merged.counts().to_vec(), count as f64);
        merged
    }

    fn draw_poisson<R: Rng + ?Sized>(&mut self, s: f64, rng: &mut R) -> CountVector {
        // Poisson thinning: the two streams contribute independent
        // Poi((1−α)s) and Poi(αs) samples.
        let a_share = (1.0 - self.alpha.value()) * s;
        let b_share = self.alpha.value() * s;
        let n = self.domain_size();
        let a = if a_share > 0.0 {
            self.first.draw_poisson(a_share, rng)
        } else {
            CountVector::zeros(n)
        };
        let b = if b_share > 0.0 {
            self.second.draw_poisson(b_share, rng)
        } else {
            CountVector::zeros(n)
        };
        let merged = a.merged(&b).expect("same domain");
        CountVector::new(merged.counts().to_vec(), s)
    }

    fn samples_drawn(&self) -> u64 {
        self.first.samples_drawn() + self.second.samples_drawn()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_and_empty_draws() {
        let mut rng = seeded_rng(1);
        let d = Distribution::point_mass(5, 0).unwrap();
        assert_eq!(sample(&d, 10, &mut rng).counts(), &[10, 0, 0, 0, 0]);
        let u = Distribution::uniform(4);
        let c = sample(&u, 0, &mut rng);
        assert_eq!(c.total(), 0);
        assert!(c.counts().iter().all(|&x| x == 0));
    }

    #[test]
    fn multinomial_counts_are_binomially_spread() {
        let mut rng = seeded_rng(7);
        let u = Distribution::uniform(4);
        let c = sample(&u, 1_000_000, &mut rng);
        assert_eq!(c.total(), 1_000_000);
        let sd = (1e6f64 * 0.25 * 0.75).sqrt();
        for &x in c.counts() {
            assert!((x as f64 - 250_000.0).abs() < 4.0 * sd, "{x}");
        }
    }

    #[test]
    fn zero_mass_elements_never_drawn_under_poissonization() {
        let mut rng = seeded_rng(3);
        let d = Distribution::from_weights(&[0.0, 1.0, 0.0, 3.0]).unwrap();
        for _ in 0..200 {
            let c = poisson_sample(&d, 50.0, &mut rng);
            assert_eq!(c.count(0), 0);
            assert_eq!(c.count(2), 0);
            assert_eq!(c.nominal_s(), 50.0);
        }
    }

    #[test]
    fn same_seed_same_counts() {
        let d = Distribution::from_weights(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let a = sample(&d, 1000, &mut seeded_rng(42));
        let b = sample(&d, 1000, &mut seeded_rng(42));
        assert_eq!(a, b);
        let a = poisson_sample(&d, 300.0, &mut seeded_rng(9));
        let b = poisson_sample(&d, 300.0, &mut seeded_rng(9));
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_split_conserves_count() {
        let mut rng = seeded_rng(11);
        for parts in 1..6 {
            let s = split_uniform(1234, parts, &mut rng);
            assert_eq!(s.len(), parts);
            assert_eq!(s.iter().sum::<u64>(), 1234);
        }
    }

    #[test]
    fn sources_count_their_draws() {
        let mut rng = seeded_rng(5);
        let mut a = DistSource::new(Distribution::uniform(3));
        let mut b = DistSource::new(Distribution::point_mass(3, 2).unwrap());
        let drawn = a.draw(40, &mut rng).total();
        assert_eq!(a.samples_drawn(), drawn);
        let mut m = MixtureSource::new(&mut a, &mut b, MixtureWeight::new(0.5).unwrap()).unwrap();
        let c = m.draw(100, &mut rng);
        assert_eq!(c.total(), 100);
        let p = m.draw_poisson(80.0, &mut rng);
        assert_eq!(m.samples_drawn(), 40 + 100 + p.total());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|i| derive_seed(17, i)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), s.len());
    }
}
