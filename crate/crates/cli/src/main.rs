//! `bachflat`: residual suites, classification and ansatz search.
//!
//! Exit codes: 0 ok, 1 residual or certification failure, 2 parse or
//! configuration error, 3 indeterminate classification, 4 search budget
//! exhausted.

use std::path::PathBuf;
use std::process::ExitCode;

use bachflat_core::ansatz::SearchConfig;
use bachflat_core::classify::Label;
use bachflat_core::exprlang::MetricDefinition;
use bachflat_core::suite::{classify_metric, run_search, run_suite, Suite, SuiteConfig, Tolerances};
use bachflat_core::Error;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

const EXIT_RESIDUAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INDETERMINATE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "bachflat", version, about = "Curvature residuals, Bach-flat Kähler classification and ansatz search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a residual suite on a metric file.
    Verify {
        metric: PathBuf,
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Certify a metric as Bach-flat Kähler and assign its type.
    Classify {
        metric: PathBuf,
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Minimize the Bach energy over the profile ansatz, then classify.
    Search {
        #[arg(long)]
        l: u32,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        #[arg(long, default_value_t = 8)]
        degree: usize,
        #[arg(long, default_value_t = 50_000)]
        budget: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    /// Jet order; 5 adds the Bach divergence check.
    #[arg(long, default_value_t = 4)]
    order: usize,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 32)]
    points: usize,
    /// Decimal or 0x-prefixed hexadecimal.
    #[arg(long, default_value = "0xB0C4", value_parser = parse_seed)]
    seed: u64,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    tol: Vec<String>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("invalid seed '{s}': {e}"))
}

impl CommonArgs {
    fn tolerances(&self) -> Result<Tolerances, Error> {
        let mut t = Tolerances::default();
        for spec in &self.tol {
            t.apply(spec)?;
        }
        Ok(t)
    }
}

fn suite_config(suite: &SuiteArgs, common: &CommonArgs) -> Result<SuiteConfig, Error> {
    Ok(SuiteConfig {
        suite: suite.suite.parse::<Suite>()?,
        points: common.points,
        seed: common.seed,
        order: suite.order,
        tolerances: common.tolerances()?,
    })
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::NotCertified { .. }
        | Error::Singular
        | Error::Degenerate(_)
        | Error::NearZeroLocus { .. }
        | Error::NoSignChange => EXIT_RESIDUAL,
        _ => EXIT_CONFIG,
    }
}

fn emit<T: Serialize>(report: &T, path: Option<&PathBuf>) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Verify { metric, suite, common } => {
            let cfg = suite_config(&suite, &common)?;
            let def = MetricDefinition::load(&metric)?;
            if cfg.suite == Suite::Classify {
                let r = classify_metric(&def, &cfg)?;
                emit(&r, common.json.as_ref())?;
                return Ok(label_exit(r.label));
            }
            let r = run_suite(&def, &cfg)?;
            emit(&r, common.json.as_ref())?;
            for res in r.residuals.iter().filter(|r| !r.pass) {
                eprintln!("FAIL {}: {:e} > {:e}", res.name, res.max, res.tol);
            }
            Ok(if r.pass { 0 } else { EXIT_RESIDUAL })
        }
        Command::Classify { metric, suite, common } => {
            let cfg = suite_config(&suite, &common)?;
            let def = MetricDefinition::load(&metric)?;
            let r = classify_metric(&def, &cfg)?;
            emit(&r, common.json.as_ref())?;
            eprintln!("{}", r.label);
            Ok(label_exit(r.label))
        }
        Command::Search { l, k, a, b, degree, budget, common } => {
            let tols = common.tolerances()?;
            let mut cfg = SearchConfig::new(l, k, a, b);
            cfg.degree = degree;
            cfg.budget = budget;
            cfg.seed = common.seed;
            let r = run_search(&cfg, common.points, &tols)?;
            emit(&r, common.json.as_ref())?;
            let label = r.classification.as_ref().map_or("uncertified", |c| c.label.as_str());
            eprintln!("energy {:e}, {label}", r.bach_energy);
            Ok(if r.converged { 0 } else { EXIT_BUDGET })
        }
    }
}

fn label_exit(l: Label) -> u8 {
    if l == Label::Indeterminate {
        EXIT_INDETERMINATE
    } else {
        0
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bachflat_core::sampling::DEFAULT_SEED;

    #[test]
    fn seeds_parse_in_both_bases() {
        assert_eq!(parse_seed("0xB0C4").unwrap(), DEFAULT_SEED);
        assert_eq!(parse_seed("45252").unwrap(), DEFAULT_SEED);
        assert!(parse_seed("zz").is_err());
    }

    #[test]
    fn command_line_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
