//! Monte Carlo checks of the first moments of the count statistics, each
//! against its closed form within five standard errors.

use mixtest_core::closeness::{eval_f, extract_coefficients, l2_sq_estimate};
use mixtest_core::identity::centered_statistic;
use mixtest_core::kflat::collision_estimate;
use mixtest_core::*;
use rand::Rng;

const TRIALS: usize = 10_000;

fn random_dist(n: usize, rng: &mut SeededRng) -> Distribution {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    make_distribution(&w).unwrap()
}

struct Moments {
    mean: f64,
    var: f64,
}

impl Moments {
    fn of(xs: &[f64]) -> Self {
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Self { mean, var }
    }

    fn assert_mean(&self, expected: f64, what: &str) {
        let se = (self.var / TRIALS as f64).sqrt();
        assert!(
            (self.mean - expected).abs() <= 5.0 * se,
            "{what}: mean {} vs expected {expected} (se {se})",
            self.mean
        );
    }
}

#[test]
fn centered_statistic_is_unbiased() {
    let mut rng = seeded_rng(101);
    let n = 50;
    let p = random_dist(n, &mut rng);
    let q = random_dist(n, &mut rng);
    let s = 400.0;
    for (target, expected) in [(&p, s * s * l2_distance_sq(&p, &q).unwrap()), (&q, 0.0)] {
        let zs: Vec<f64> = (0..TRIALS)
            .map(|_| centered_statistic(&q, &poisson_sample(target, s, &mut rng)).unwrap())
            .collect();
        Moments::of(&zs).assert_mean(expected, "Z");
    }
}

#[test]
fn quadratic_statistic_moments() {
    let mut rng = seeded_rng(102);
    let n = 50;
    let q1 = random_dist(n, &mut rng);
    let q2 = random_dist(n, &mut rng);
    let a_star = 0.35;
    let p = mix(&q1, &q2, MixtureWeight::new(a_star).unwrap()).unwrap();
    let s = 300.0;
    let gap = l2_distance_sq(&q1, &q2).unwrap();
    let alpha = MixtureWeight::new(0.8).unwrap();
    let qa = mix(&q1, &q2, alpha).unwrap();

    let (mut fs, mut a_s, mut neg_b) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..TRIALS {
        let x = poisson_sample(&p, s, &mut rng);
        let y = poisson_sample(&q1, s, &mut rng);
        let z = poisson_sample(&q2, s, &mut rng);
        fs.push(eval_f(&x, &y, &z, alpha).unwrap());
        let c = extract_coefficients(&x, &y, &z).unwrap();
        a_s.push(c.a);
        neg_b.push(-c.b);
    }
    let f = Moments::of(&fs);
    f.assert_mean(s * s * l2_distance_sq(&p, &qa).unwrap(), "f(alpha)");
    Moments::of(&a_s).assert_mean(s * s * gap, "A");
    Moments::of(&neg_b).assert_mean(2.0 * a_star * s * s * gap, "-B");

    let b = [&p, &q1, &q2].iter().map(|d| d.l2_norm_sq()).fold(0.0, f64::max);
    let l4 = lp_distance(&p, &qa, Norm::L4).unwrap();
    let bound = 8.0 * s.powi(3) * b.sqrt() * l4 * l4 + 8.0 * s * s * b;
    assert!(f.var <= 1.5 * bound, "Var f = {} exceeds 1.5 × {bound}", f.var);
}

#[test]
fn l2_estimate_is_unbiased() {
    let mut rng = seeded_rng(103);
    let n = 50;
    let r1 = random_dist(n, &mut rng);
    let r2 = random_dist(n, &mut rng);
    let s = 500.0;
    let est: Vec<f64> = (0..TRIALS)
        .map(|_| {
            let x = poisson_sample(&r1, s, &mut rng);
            let y = poisson_sample(&r2, s, &mut rng);
            l2_sq_estimate(&x, &y).unwrap()
        })
        .collect();
    Moments::of(&est).assert_mean(l2_distance_sq(&r1, &r2).unwrap(), "l2 estimate");
}

#[test]
fn collision_estimate_is_unbiased() {
    let mut rng = seeded_rng(104);
    for (d, m) in [(Distribution::uniform(12), 40u64), (random_dist(12, &mut rng), 25)] {
        let est: Vec<f64> = (0..TRIALS)
            .map(|_| collision_estimate(sample(&d, m, &mut rng).counts()).unwrap())
            .collect();
        Moments::of(&est).assert_mean(d.l2_norm_sq(), "collision estimate");
    }
}
