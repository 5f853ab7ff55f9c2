use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixtest_core::closeness::{closeness_test, ClosenessConfig};
use mixtest_core::identity::{identity_test_known_noise, IdentityConfig};
use mixtest_core::kflat::kflat_identity_test;
use mixtest_core::{seeded_rng, DistSource, Verdict};
use mixtest_harness::distfile::{load_distribution, read_json, write_json};
use mixtest_harness::generators::{gen_instance, GenKind};
use mixtest_harness::trials::write_run;
use mixtest_harness::{run_trials, InstanceSpec, Result, TesterKind};

#[derive(Parser)]
#[command(name = "mixtest", version, about = "Test whether a distribution is a two-component mixture")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identity test against mixtures of two known distributions.
    Identity {
        #[arg(long)]
        q1: PathBuf,
        #[arg(long)]
        q2: PathBuf,
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Closeness test with all three distributions accessed through samples.
    Closeness {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q1: PathBuf,
        #[arg(long)]
        q2: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Identity test against mixtures of q with unknown k-flat noise.
    Kflat {
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Repeated trials of one tester on an instance file.
    Bench {
        #[arg(long)]
        tester: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Output path ending in .csv or .json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write an instance file.
    Gen {
        /// One of lb, mixture, far.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Use k-flat noise as the second component.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn report(v: &Verdict) -> Result<ExitCode> {
    println!("{}", serde_json::to_string(v)?);
    Ok(if v.accepted { ExitCode::from(0) } else { ExitCode::from(1) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Identity {
            q1,
            q2,
            p,
            eps,
            seed,
            repeats,
        } => {
            let (q1, q2) = (load_distribution(&q1)?, load_distribution(&q2)?);
            let mut cfg = IdentityConfig::new(eps);
            cfg.repeats = repeats;
            let src = DistSource::new(load_distribution(&p)?);
            report(&identity_test_known_noise(&q1, &q2, &cfg, src, &mut seeded_rng(seed))?)
        }
        Command::Closeness { p, q1, q2, eps, seed } => {
            let p = load_distribution(&p)?;
            let cfg = ClosenessConfig::new(eps, p.n())?;
            let v = closeness_test(
                &cfg,
                DistSource::new(p),
                DistSource::new(load_distribution(&q1)?),
                DistSource::new(load_distribution(&q2)?),
                &mut seeded_rng(seed),
            )?;
            report(&v)
        }
        Command::Kflat { q, p, k, eps, seed } => {
            let q = load_distribution(&q)?;
            let src = DistSource::new(load_distribution(&p)?);
            report(&kflat_identity_test(&q, k, eps, src, &mut seeded_rng(seed))?)
        }
        Command::Bench {
            tester,
            config,
            trials,
            seed,
            out,
        } => {
            let tester: TesterKind = tester.parse()?;
            let instance = read_json::<InstanceSpec>(&config)?.resolve()?;
            let run = run_trials(tester, &instance, trials, seed)?;
            write_run(&out, &run)?;
            eprintln!(
                "{tester}: accept rate {:.3} over {trials} trials",
                run.report.accept_rate
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen {
            kind,
            n,
            eps,
            alpha,
            k,
            seed,
            out,
        } => {
            let kind: GenKind = kind.parse()?;
            write_json(&out, &gen_instance(kind, n, eps, alpha, k, seed)?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
