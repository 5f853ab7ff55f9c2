//! Monte-Carlo driver: runs a tester repeatedly on one instance and
//! summarizes the acceptance rate and sample usage.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use mixtest_core::closeness::{closeness_test, ClosenessConfig};
use mixtest_core::identity::{identity_test_known_noise, IdentityConfig};
use mixtest_core::kflat::{kflat_identity_test_with, KFlatConfig};
use mixtest_core::{derive_seed, seeded_rng, DistSource, Distribution, SampleSource, Verdict};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distfile::DistributionSpec;
use crate::error::{HarnessError, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MIXTEST_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TesterKind {
    Identity,
    Closeness,
    Kflat,
}

impl FromStr for TesterKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "closeness" => Ok(Self::Closeness),
            "kflat" => Ok(Self::Kflat),
            other => Err(HarnessError::UnknownTester(other.to_string())),
        }
    }
}

impl fmt::Display for TesterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::Closeness => "closeness",
            Self::Kflat => "kflat",
        })
    }
}

/// Optional overrides of the testers' constants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_sub: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_learn: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_est: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_emp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_unif: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_amp: Option<f64>,
}

/// Instance file consumed by `bench` and written by `gen`. The identity and
/// closeness testers read `p`, `q1`, `q2`; the k-flat tester reads `p`, `q`
/// (falling back to `q1`) and `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub p: DistributionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q2: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<DistributionSpec>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// An instance with all distributions materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub eps: f64,
    pub k: Option<usize>,
    pub p: Distribution,
    pub q1: Option<Distribution>,
    pub q2: Option<Distribution>,
    pub q: Option<Distribution>,
    pub constants: Constants,
}

impl InstanceSpec {
    pub fn resolve(&self) -> Result<Instance> {
        let build = |d: &Option<DistributionSpec>| d.as_ref().map(DistributionSpec::build).transpose();
        Ok(Instance {
            eps: self.eps,
            k: self.k,
            p: self.p.build()?,
            q1: build(&self.q1)?,
            q2: build(&self.q2)?,
            q: build(&self.q)?,
            constants: self.constants,
        })
    }
}

impl Instance {
    pub fn n(&self) -> usize {
        self.p.n()
    }

    fn components(&self) -> Result<(&Distribution, &Distribution)> {
        Ok((
            self.q1.as_ref().ok_or(HarnessError::MissingField("q1"))?,
            self.q2.as_ref().ok_or(HarnessError::MissingField("q2"))?,
        ))
    }

    pub fn identity_config(&self) -> IdentityConfig {
        let mut cfg = IdentityConfig::new(self.eps);
        let c = &self.constants;
        cfg.c_sub = c.c_sub.unwrap_or(cfg.c_sub);
        cfg.c_learn = c.c_learn.unwrap_or(cfg.c_learn);
        cfg.repeats = c.repeats.unwrap_or(cfg.repeats);
        cfg
    }

    pub fn closeness_config(&self) -> Result<ClosenessConfig> {
        let base = ClosenessConfig::new(self.eps, self.n())?;
        let c = &self.constants;
        Ok(ClosenessConfig::with_constants(
            self.eps,
            self.n(),
            c.c_s.unwrap_or(base.c_s),
            c.c_est.unwrap_or(base.c_est),
        )?)
    }

    pub fn kflat_config(&self) -> Result<KFlatConfig> {
        let k = self.k.ok_or(HarnessError::MissingField("k"))?;
        let mut cfg = KFlatConfig::new(self.eps, k);
        let c = &self.constants;
        cfg.c_emp = c.c_emp.unwrap_or(cfg.c_emp);
        cfg.c_unif = c.c_unif.unwrap_or(cfg.c_unif);
        cfg.c_amp = c.c_amp.unwrap_or(cfg.c_amp);
        Ok(cfg)
    }

    /// Runs one test with a fresh generator seeded by `seed`; returns the
    /// verdict and the total number of samples drawn from all sources.
    pub fn run_once(&self, tester: TesterKind, seed: u64) -> Result<(Verdict, u64)> {
        let mut rng = seeded_rng(seed);
        let mut p = DistSource::new(self.p.clone());
        match tester {
            TesterKind::Identity => {
                let (q1, q2) = self.components()?;
                let v = identity_test_known_noise(q1, q2, &self.identity_config(), &mut p, &mut rng)?;
                Ok((v, p.samples_drawn()))
            }
            TesterKind::Closeness => {
                let (q1, q2) = self.components()?;
                let mut a = DistSource::new(q1.clone());
                let mut b = DistSource::new(q2.clone());
                let cfg = self.closeness_config()?;
                let v = closeness_test(&cfg, &mut p, &mut a, &mut b, &mut rng)?;
                Ok((v, p.samples_drawn() + a.samples_drawn() + b.samples_drawn()))
            }
            TesterKind::Kflat => {
                let q = self
                    .q
                    .as_ref()
                    .or(self.q1.as_ref())
                    .ok_or(HarnessError::MissingField("q"))?;
                let v = kflat_identity_test_with(q, &self.kflat_config()?, &mut p, &mut rng)?;
                Ok((v, p.samples_drawn()))
            }
        }
    }
}

/// Summary of a batch of trials. CSV columns follow the field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub tester: String,
    pub n: usize,
    /// Number of flat pieces; empty for the testers that do not use it.
    pub k: Option<usize>,
    pub eps: f64,
    /// Samples drawn across all trials and all sources.
    pub samples_used: u64,
    pub trials: usize,
    pub accept_rate: f64,
    /// Seconds.
    pub wall_time: f64,
    pub seed: u64,
}

pub const CSV_COLUMNS: [&str; 9] = [
    "tester",
    "n",
    "k",
    "eps",
    "samples_used",
    "trials",
    "accept_rate",
    "wall_time",
    "seed",
];

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub accepted: bool,
    /// `None` when the statistic is not finite.
    pub statistic: Option<f64>,
    pub threshold: f64,
    pub samples_used: u64,
    pub details: std::collections::BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRun {
    pub report: TrialReport,
    pub records: Vec<TrialRecord>,
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
}

/// Runs `trials` independent tests with per-trial seeds derived from `seed`,
/// in parallel. Records are ordered by trial index regardless of scheduling.
pub fn run_trials(tester: TesterKind, instance: &Instance, trials: usize, seed: u64) -> Result<TrialRun> {
    if trials == 0 {
        return Err(HarnessError::InvalidParameter("trials must be at least 1".into()));
    }
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count() {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let results: Vec<Result<TrialRecord>> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|index| {
                let trial_seed = derive_seed(seed, index as u64);
                let (v, used) = instance.run_once(tester, trial_seed)?;
                Ok(TrialRecord {
                    index,
                    seed: trial_seed,
                    accepted: v.accepted,
                    statistic: v.statistic.is_finite().then_some(v.statistic),
                    threshold: v.threshold,
                    samples_used: used,
                    details: v.details.into_iter().filter(|(_, x)| x.is_finite()).collect(),
                })
            })
            .collect()
    });
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let accepted = records.iter().filter(|r| r.accepted).count();
    let report = TrialReport {
        tester: tester.to_string(),
        n: instance.n(),
        k: match tester {
            TesterKind::Kflat => instance.k,
            _ => None,
        },
        eps: instance.eps,
        samples_used: records.iter().map(|r| r.samples_used).sum(),
        trials,
        accept_rate: accepted as f64 / trials as f64,
        wall_time: start.elapsed().as_secs_f64(),
        seed,
    };
    Ok(TrialRun { report, records })
}

pub fn write_csv<W: std::io::Write>(out: W, reports: &[TrialReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: "<csv>".into(),
        source,
    })?;
    Ok(())
}

/// Writes CSV (report row only) or JSON (report and per-trial records)
/// depending on the file extension.
pub fn write_run(path: &Path, run: &TrialRun) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let file = std::fs::File::create(path).map_err(|source| HarnessError::Io {
                path: path.display().to_string(),
                source,
            })?;
            write_csv(file, std::slice::from_ref(&run.report))
        }
        Some("json") => crate::distfile::write_json(path, run),
        _ => Err(HarnessError::InvalidParameter(format!(
            "output {} must end in .csv or .json",
            path.display()
        ))),
    }
}
