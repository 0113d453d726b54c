//! The `fairbary` command line.
//!
//! Exit codes: 0 success, 2 usage or schema error, 3 infeasible instance,
//! 4 internal invariant breach. Errors go to stderr as one JSON object.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::audit::{audit_envy, audit_order};
use crate::classifier::{lp_oracle, optimal_fair_classifier, LP_ORACLE_MAX};
use crate::error::{Error, Result};
use crate::files::{
    read_instance, write_text, AuditPayload, ClassifyPayload, Decision, InstanceFile, LpCheck,
    NestedPayload, Payload, PlanCell, Prediction, ResultFile, SolvePayload,
};
use crate::instance::{example_spec, FairInstance, Metadata};
use crate::nestedness::{
    check_nested, equivalence_check, potential_diagnostic, regression_from_classifiers, Grid,
    Verdict,
};
use crate::plot::{render, Format, PlotKind};
use crate::regression::solve_fair_regression;

pub const DEFAULT_GRID: &str = "-2:3:0.01";
pub const THREADS_ENV: &str = "FAIRBARY_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "fairbary",
    version,
    about = "Exact demographic-parity fair regression and classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Ω-spec of worked example 1 or 2.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        example: u8,
        /// Atoms per segment.
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Solve the fair regression problem.
    Solve {
        instance: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Optimal fair classifier at one threshold, checked against the LP when small.
    Classify {
        instance: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        /// Skip the LP cross-check.
        #[arg(long)]
        no_lp: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Nestedness on a grid, the induced regression rule and its diagnostics.
    Nested {
        instance: PathBuf,
        /// `min:max:step`.
        #[arg(long, default_value = DEFAULT_GRID, allow_hyphen_values = true)]
        grid: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Order and envy audits of a previous result.
    Audit {
        instance: PathBuf,
        result: PathBuf,
        /// Thresholds for the envy audit, in addition to the one of a classify result.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        y: Vec<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// SVG (or CSV, by extension) figure from a result.
    Plot {
        result: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Thresholds whose boundaries are drawn.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        at: Vec<f64>,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Omega,
    Boundary,
    Cdf,
}

impl From<Kind> for PlotKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Omega => PlotKind::Omega,
            Kind::Boundary => PlotKind::Boundary,
            Kind::Cdf => PlotKind::Cdf,
        }
    }
}

fn load(path: &Path) -> Result<(FairInstance, String)> {
    let (file, hash) = read_instance(path)?;
    Ok((file.build()?, hash))
}

pub fn cmd_gen(example: u8, n: usize) -> Result<InstanceFile> {
    let meta = Metadata::from([
        ("generator".to_string(), format!("example-{example}")),
        ("n".to_string(), n.to_string()),
    ]);
    Ok(InstanceFile::omega(example_spec(example, n)?, meta))
}

pub fn cmd_solve(instance: &Path) -> Result<ResultFile> {
    let (inst, hash) = load(instance)?;
    let sol = solve_fair_regression(&inst)?;
    let rule = sol.randomized_rule(&inst);
    let kernels = match rule {
        crate::regression::Rule::Randomized(k) => k,
        crate::regression::Rule::Deterministic(_) => {
            unreachable!("randomized_rule returns kernels")
        }
    };
    let payload = SolvePayload {
        ot_value: sol.ot_value(),
        excess_risk_randomized: sol.excess_risk_randomized,
        excess_risk_deterministic: sol.excess_risk_deterministic,
        parity_gap_randomized: sol.parity_gap_randomized,
        parity_gap_deterministic: sol.parity_gap_deterministic,
        barycenter: sol.barycenter.clone(),
        plan: sol
            .plan
            .coupling
            .nonzeros()
            .into_iter()
            .map(|(i, j, w)| PlanCell { i, j, w })
            .collect(),
        predictions: inst
            .atoms
            .iter()
            .zip(&sol.f_det)
            .zip(kernels)
            .map(|((a, &f_det), kernel)| Prediction {
                x: a.id.clone(),
                f_det,
                kernel,
            })
            .collect(),
    };
    Ok(ResultFile::new(hash, &inst, Payload::Solve(payload)))
}

pub fn cmd_classify(instance: &Path, y: f64, lp: bool) -> Result<ResultFile> {
    let (inst, hash) = load(instance)?;
    let g = optimal_fair_classifier(&inst, y);
    let lp_check = if lp && inst.len() <= LP_ORACLE_MAX {
        let o = lp_oracle(&inst, y)?;
        Some(LpCheck {
            optimal_risk: o.optimal_risk,
            multiplier: o.multiplier,
            gap: (g.surrogate_risk - o.optimal_risk).abs(),
        })
    } else {
        None
    };
    let q = g.acceptance();
    let payload = ClassifyPayload {
        y,
        kappa: g.kappa,
        kappa_unscaled: inst.kappa_unscaled(g.kappa),
        interval: g.interval,
        interval_unscaled: (
            inst.kappa_unscaled(g.interval.kappa_minus),
            inst.kappa_unscaled(g.interval.kappa_plus),
        ),
        decisions: inst
            .atoms
            .iter()
            .zip(q)
            .map(|(a, accept)| Decision {
                x: a.id.clone(),
                accept,
            })
            .collect(),
        parity_gap: g.parity_gap,
        parity_gap_deterministic: g.parity_gap_deterministic,
        surrogate_risk: g.surrogate_risk,
        risk: g.risk,
        lp_check,
    };
    let mut r = ResultFile::new(hash, &inst, Payload::Classify(payload));
    r.params.insert("y".into(), y.to_string());
    r.params.insert("lp".into(), lp.to_string());
    Ok(r)
}

pub fn cmd_nested(instance: &Path, grid: &Grid) -> Result<ResultFile> {
    let (inst, hash) = load(instance)?;
    let report = check_nested(&inst, grid);
    let sol = solve_fair_regression(&inst)?;
    let equivalence = equivalence_check(&inst, grid, &sol)?;
    let (regression, potential) = if report.verdict == Verdict::Nested {
        (
            Some(regression_from_classifiers(&inst, &report)?),
            Some(potential_diagnostic(&inst, &report, &sol)?),
        )
    } else {
        (None, None)
    };
    let payload = NestedPayload {
        kappa_unscaled: report
            .kappa_table
            .iter()
            .map(|iv| inst.kappa_unscaled(iv.kappa_plus))
            .collect(),
        report,
        regression,
        equivalence,
        potential,
    };
    let mut r = ResultFile::new(hash, &inst, Payload::Nested(payload));
    r.grid = Some(*grid);
    Ok(r)
}

pub fn cmd_audit(instance: &Path, result: &Path, ys: &[f64]) -> Result<ResultFile> {
    let (inst, hash) = load(instance)?;
    let prior = ResultFile::read(result)?;
    if prior.instance_sha256 != hash {
        return Err(Error::Schema(format!(
            "result was computed for instance {} but {} hashes to {hash}",
            prior.instance_sha256,
            instance.display()
        )));
    }
    let mut thresholds: Vec<f64> = ys.to_vec();
    let (rule, f) = match &prior.payload {
        Payload::Solve(s) => (
            Some("f_det"),
            Some(s.predictions.iter().map(|p| p.f_det).collect::<Vec<_>>()),
        ),
        Payload::Nested(n) => match &n.regression {
            Some(c) => (Some("f_star"), Some(c.f_star.clone())),
            None => (None, None),
        },
        Payload::Classify(c) => {
            thresholds.insert(0, c.y);
            (None, None)
        }
        Payload::Audit(_) => return Err(Error::Schema("cannot audit an audit result".into())),
    };
    let order = f.map(|f| audit_order(&inst, &f)).transpose()?;
    let envy = thresholds
        .iter()
        .map(|&y| audit_envy(&inst, &optimal_fair_classifier(&inst, y)))
        .collect::<Result<Vec<_>>>()?;
    let mut r = ResultFile::new(
        hash,
        &inst,
        Payload::Audit(AuditPayload {
            rule: rule.map(String::from),
            order,
            envy,
        }),
    );
    r.params
        .insert("source".into(), result.display().to_string());
    Ok(r)
}

pub fn cmd_plot(result: &Path, kind: PlotKind, out: &Path, at: &[f64]) -> Result<String> {
    render(&ResultFile::read(result)?, kind, Format::from_path(out), at)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Caps rayon at `FAIRBARY_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Schema(format!(
            "{THREADS_ENV} must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Gen { example, n, out } => emit(out.as_deref(), &cmd_gen(example, n)?.to_json()?),
        Command::Solve { instance, out } => emit(out.as_deref(), &cmd_solve(&instance)?.to_json()?),
        Command::Classify {
            instance,
            y,
            no_lp,
            out,
        } => emit(
            out.as_deref(),
            &cmd_classify(&instance, y, !no_lp)?.to_json()?,
        ),
        Command::Nested {
            instance,
            grid,
            out,
        } => emit(
            out.as_deref(),
            &cmd_nested(&instance, &Grid::parse(&grid)?)?.to_json()?,
        ),
        Command::Audit {
            instance,
            result,
            y,
            out,
        } => emit(
            out.as_deref(),
            &cmd_audit(&instance, &result, &y)?.to_json()?,
        ),
        Command::Plot {
            result,
            kind,
            at,
            out,
        } => write_text(&out, &cmd_plot(&result, kind.into(), &out, &at)?),
    }
}

fn error_object(kind: &str, message: &str, code: i32) -> String {
    serde_json::json!({ "error": kind, "message": message, "exit_code": code }).to_string()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            eprintln!("{}", error_object("usage", e.to_string().trim(), 2));
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}", error_object(e.kind(), &e.to_string(), code));
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        main_with_args(std::iter::once("fairbary").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(code(&["gen", "--example", "3"]), 2);
        assert_eq!(
            code(&["plot", "r.json", "--kind", "pie", "--out", "x.svg"]),
            2
        );
        assert_eq!(code(&["frobnicate"]), 2);
        assert_eq!(code(&["--help"]), 0);
    }

    #[test]
    fn missing_file_exits_two() {
        assert_eq!(code(&["solve", "/nonexistent/instance.json"]), 2);
    }
}
