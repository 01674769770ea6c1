//! Command-line front end: `run` fits a model and writes factors, trace and a
//! JSON summary; `synth` writes a synthetic problem.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::algorithms::{self, ConvergenceTrace, Fit, SolverOptions, SparsitySchedule};
use crate::constraints::ConstraintSet;
use crate::divergence::BetaParams;
use crate::error::{Error, Result};
use crate::io;
use crate::oracle::{self, OracleConfig, VerifyReport};
use crate::synth::{self, NoiseModel};

#[derive(Debug, Parser)]
#[command(name = "dcnmf", version, about = "β-divergence NMF with disjoint equality constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a data matrix.
    Run(RunArgs),
    /// Write a synthetic data set (V.csv, W_true.csv, H_true.csv).
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Baseline,
    Constrained,
    Ssnmf,
    Minvol,
    SparseSphere,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Data matrix (CSV, or MatrixMarket array format for `.mtx`).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "baseline")]
    pub model: Model,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 300)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Penalty weight: min-volume λ (default: chosen so the initial penalty is 0.1 of
    /// the initial divergence) or the initial ℓ1 weight of every row (default 0.05).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Squared column norm for the sparse model.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Target mean Hoyer sparsity of the rows of H; 0 keeps the ℓ1 weights fixed.
    #[arg(long, default_value_t = 0.0)]
    pub target_sparsity: f64,
    #[arg(long, default_value_t = 1.05)]
    pub alpha_rate: f64,
    /// Iteration range `a,b` in which the ℓ1 weights may grow.
    #[arg(long, value_parser = parse_window, default_value = "1,150")]
    pub schedule_window: (usize, usize),
    /// Constraint description file.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long)]
    pub w0: Option<PathBuf>,
    #[arg(long)]
    pub h0: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub objective_every: usize,
    /// Compare small constrained blocks at the final iterate with a brute-force solver.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Simplex,
    Separable,
    Sparse,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "simplex")]
    pub kind: SynthKind,
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub rank: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value = "poisson")]
    pub noise: NoiseModel,
    #[arg(long, default_value_t = 0.0)]
    pub level: f64,
    /// Scale of H for separable and sparse data.
    #[arg(long, default_value_t = 1.0)]
    pub intensity: f64,
    /// Probability that an entry of H is active for sparse data.
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "synth")]
    pub out: PathBuf,
}

impl clap::builder::ValueParserFactory for NoiseModel {
    type Parser = NoiseParser;
    fn value_parser() -> Self::Parser {
        NoiseParser
    }
}

#[derive(Clone)]
pub struct NoiseParser;

impl clap::builder::TypedValueParser for NoiseParser {
    type Value = NoiseModel;

    fn parse_ref(
        &self,
        _cmd: &clap::Command,
        _arg: Option<&clap::Arg>,
        value: &std::ffi::OsStr,
    ) -> std::result::Result<NoiseModel, clap::Error> {
        value
            .to_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| clap::Error::raw(clap::error::ErrorKind::InvalidValue, "noise must be gaussian, poisson or gamma\n"))
    }
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b, got '{s}'"))?;
    let a = a.trim().parse().map_err(|_| format!("bad window start '{a}'"))?;
    let b = b.trim().parse().map_err(|_| format!("bad window end '{b}'"))?;
    Ok((a, b))
}

/// Everything a run needs, echoed into the summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub args: RunArgs,
    pub options: SolverOptions,
}

impl RunManifest {
    pub fn new(args: RunArgs) -> Self {
        let options = SolverOptions {
            max_iters: args.iters,
            beta: args.beta,
            seed: args.seed,
            tol_residual: args.tol,
            objective_every: args.objective_every,
            ..SolverOptions::default()
        };
        Self { args, options }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub model: Model,
    pub iterations: usize,
    pub final_divergence: f64,
    pub final_penalty: f64,
    pub final_objective: f64,
    pub final_max_residual: f64,
    pub max_residual_over_trace: f64,
    pub newton_iters_total: usize,
    pub fallback_total: usize,
    pub total_seconds: f64,
    pub seconds_per_iteration: f64,
    pub newton_seconds: f64,
    pub final_lambda: Vec<f64>,
    pub manifest: RunManifest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyReport>,
}

/// Runs one fit and writes `W.csv`, `H.csv`, `trace.csv` and `summary.json` into the
/// output directory.
pub fn run(manifest: &RunManifest) -> Result<RunSummary> {
    let args = &manifest.args;
    let opts = &manifest.options;
    let v = io::load_data(&args.input)?;
    let (f, n) = v.dim();
    let k = args.rank;
    if k == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    let (w0, h0) = match (&args.w0, &args.h0) {
        (None, None) => algorithms::random_factors(f, k, n, opts.seed),
        (w0, h0) => {
            let (rw, rh) = algorithms::random_factors(f, k, n, opts.seed);
            let w = w0.as_ref().map(io::load_matrix).transpose()?.unwrap_or(rw);
            let h = h0.as_ref().map(io::load_matrix).transpose()?.unwrap_or(rh);
            (w, h)
        }
    };
    let constraints = match &args.constraints {
        Some(p) => io::load_constraints(p)?,
        None => io::ConstraintFile::default(),
    };
    if args.model != Model::Constrained && args.constraints.is_some() {
        return Err(Error::InvalidParameter(
            "--constraints is only used with --model constrained".into(),
        ));
    }
    let mut cs_h_for_verify = ConstraintSet::default();
    let start = Instant::now();
    let fit: Fit = match args.model {
        Model::Baseline => algorithms::fit_baseline_from(&v, w0, h0, opts)?,
        Model::Constrained => {
            cs_h_for_verify = constraints.h.clone();
            algorithms::fit_constrained_from(&v, w0, h0, &constraints.w, &constraints.h, opts)?
        }
        Model::Ssnmf => {
            let cs_h = crate::constraints::simplex_columns(k, n);
            cs_h_for_verify = cs_h.clone();
            algorithms::fit_constrained_from(&v, w0, h0, &ConstraintSet::default(), &cs_h, opts)?
        }
        Model::Minvol => {
            let lambda = match args.lambda {
                Some(l) => l,
                None => algorithms::balanced_minvol_lambda(&v, &w0, &h0, args.delta, 0.1)?,
            };
            algorithms::fit_minvol_kl_from(&v, w0, h0, lambda, args.delta, opts)?
        }
        Model::SparseSphere => {
            let schedule = SparsitySchedule {
                lambda0: vec![args.lambda.unwrap_or(0.05); k],
                rate_alpha: args.alpha_rate,
                target_sp: args.target_sparsity,
                window: (args.schedule_window.0, args.schedule_window.1.min(args.iters)),
            };
            algorithms::fit_sparse_sphere_kl_from(&v, w0, h0, &schedule, args.rho, opts)?
        }
    };
    let total_seconds = start.elapsed().as_secs_f64();

    let verify = if args.verify {
        let p = BetaParams::new(opts.beta)?;
        Some(oracle::verify_h_blocks(
            &v,
            &fit.w,
            &fit.h,
            &cs_h_for_verify,
            &p,
            &OracleConfig::default(),
            20,
        )?)
    } else {
        None
    };

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    io::save_matrix(&fit.w, args.out.join("W.csv"))?;
    io::save_matrix(&fit.h, args.out.join("H.csv"))?;
    write_trace(&fit.trace, &args.out.join("trace.csv"))?;

    let last = fit
        .trace
        .last()
        .ok_or_else(|| Error::InvalidParameter("empty trace".into()))?;
    let summary = RunSummary {
        model: args.model,
        iterations: last.iter,
        final_divergence: last.divergence,
        final_penalty: last.penalty,
        final_objective: last.objective,
        final_max_residual: last.max_residual,
        max_residual_over_trace: fit.trace.max_residual(),
        newton_iters_total: fit.trace.newton_total(),
        fallback_total: fit.trace.fallback_total(),
        total_seconds,
        seconds_per_iteration: total_seconds / opts.max_iters as f64,
        newton_seconds: fit.trace.rows.iter().map(|r| r.newton_seconds).sum(),
        final_lambda: fit.lambda.clone(),
        manifest: manifest.clone(),
        verify,
    };
    let path = args.out.join("summary.json");
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// Writes the trace with one row per recorded iteration.
pub fn write_trace(trace: &ConvergenceTrace, path: &Path) -> Result<()> {
    let mut out = String::from(
        "iter,divergence,penalty,objective,max_constraint_residual,newton_iters_total,fallback_count,elapsed_s\n",
    );
    for r in &trace.rows {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
            r.iter,
            r.divergence,
            r.penalty,
            r.objective,
            r.max_residual,
            r.newton_iters,
            r.fallback_count,
            r.elapsed_s
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let data = match args.kind {
        SynthKind::Simplex => {
            synth::synth_simplex(args.rows, args.rank, args.cols, args.noise, args.level, args.seed)?
        }
        SynthKind::Separable => synth::synth_separable(
            args.rows,
            args.rank,
            args.cols,
            args.intensity,
            args.noise,
            args.level,
            args.seed,
        )?,
        SynthKind::Sparse => synth::synth_sparse(
            args.rows,
            args.rank,
            args.cols,
            args.density,
            args.intensity,
            args.noise,
            args.level,
            args.seed,
        )?,
    };
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    io::save_matrix(&data.v, args.out.join("V.csv"))?;
    io::save_matrix(&data.w_true, args.out.join("W_true.csv"))?;
    io::save_matrix(&data.h_true, args.out.join("H_true.csv"))?;
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code. Failures
/// are reported on stderr as a single JSON object.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(&RunManifest::new(a.clone())).map(|s| {
            println!(
                "{} iterations, objective {:.10e}, max residual {:.3e}",
                s.iterations, s.final_objective, s.final_max_residual
            );
        }),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let record = json!({
                "error": {
                    "kind": e.kind(),
                    "message": e.to_string(),
                    "exit_code": e.exit_code(),
                }
            });
            eprintln!("{record}");
            e.exit_code()
        }
    }
}
