//! Command-line front end: flag parsing, engine selection, checkpoints and
//! report rendering. The `ctm-capacity` binary is a thin wrapper around
//! [`main_with_args`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use crate::bounds::{lower_bound, BoundOptions, BoundReport, BoundSource};
use crate::ctmrg::{
    drive, init_environment, read_checkpoint, spectrum, write_checkpoint, write_spectrum_csv,
    CheckpointEnv, CtmEnvironment, RunTrace, Schedule, SpectrumDump, Sweepable, Variant,
};
use crate::error::{Error, Result};
use crate::models::{builtin, parse_model_file, ModelSpec, Symmetry};
use crate::numerics::{check_precision, BigReal, DEFAULT_PRECISION};
use crate::variants::{init_asym, AsymEnvironment};

/// Version of the JSON report layout; bumped on any incompatible change.
pub const SCHEMA_VERSION: u32 = 1;

/// Exit status for a run that settled within `--tol`.
pub const EXIT_CONVERGED: i32 = 0;
/// Exit status for usage, model, checkpoint and numerical errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit status for a run stopped by `--max-sweeps` before settling.
pub const EXIT_CAP_REACHED: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    /// Symmetric for quarter-turn models, asym for half-turn ones, bond for
    /// bond models.
    Auto,
    Symmetric,
    Asym,
    Bond,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Bound,
    Estimate,
    Both,
    /// Both, with the bound replaced by a rounding-safe enclosure where the
    /// explicit matrices are small enough.
    Certify,
}

impl Mode {
    fn wants_bound(self) -> bool {
        self != Mode::Estimate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

/// Everything a run is configured by.
#[derive(Clone, Debug, Parser)]
#[command(
    name = "ctm-capacity",
    version,
    about = "Corner-transfer-matrix lower bounds and estimates for growth rates of 2-D constraints"
)]
pub struct RunConfig {
    /// Built-in model: hard_squares, nak, rwim, colouring(q), even_face,
    /// q_charge, dimer, pi, free(q).
    #[arg(long, conflicts_with = "model_file")]
    pub model: Option<String>,
    /// Model description file.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EngineChoice::Auto)]
    pub engine: EngineChoice,
    /// Largest corner-matrix dimension.
    #[arg(long, default_value_t = 32)]
    pub nmax: usize,
    /// Working precision; 320 when not given. Fixed by the checkpoint on
    /// resume.
    #[arg(long)]
    pub precision_bits: Option<u32>,
    /// Stop once successive estimates at `nmax` differ by less than this,
    /// relatively.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Cap on sweeps at `nmax`.
    #[arg(long, default_value_t = 200)]
    pub max_sweeps: usize,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub mode: Mode,
    /// Significant digits printed; at most precision·log10(2) − 10.
    #[arg(long)]
    pub digits: Option<usize>,
    /// Seed for the perturbation of the power-iteration start.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Checkpoint file, rewritten after every sweep.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Continue from `--checkpoint` instead of starting afresh.
    #[arg(long, requires = "checkpoint")]
    pub resume: bool,
    /// CSV file for the final corner spectrum.
    #[arg(long)]
    pub spectrum_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub output: OutputFormat,
    /// Worker threads for the matrix kernels.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Compute bounds for models whose bound iteration is known to be
    /// unstable (q_charge).
    #[arg(long)]
    pub allow_unstable_bound: bool,
}

const DEFAULT_DIGITS: usize = 20;

/// Largest digit count `--digits` accepts at `prec` bits.
pub fn max_digits(prec: u32) -> usize {
    BigReal::decimal_digits(prec).saturating_sub(10)
}

/// Picks the engine for `model`; explicit choices are checked against the
/// model's placement and symmetry.
pub fn resolve_engine(choice: EngineChoice, model: &ModelSpec) -> Result<Variant> {
    let bond = model.placement().is_bond();
    let resolved = match choice {
        EngineChoice::Auto if bond => Variant::Bond,
        EngineChoice::Auto if model.symmetry() == Symmetry::C4 => Variant::Symmetric,
        EngineChoice::Auto => Variant::Asym,
        EngineChoice::Symmetric => Variant::Symmetric,
        EngineChoice::Asym => Variant::Asym,
        EngineChoice::Bond => Variant::Bond,
    };
    let mismatch = |why: String| Err(Error::EngineMismatch(why));
    match resolved {
        Variant::Bond if !bond => mismatch(format!(
            "{} has no bond states; use symmetric or asym",
            model.name()
        )),
        Variant::Symmetric | Variant::Asym if bond => mismatch(format!(
            "{} places states on bonds; use the bond engine",
            model.name()
        )),
        Variant::Symmetric if model.symmetry() != Symmetry::C4 => mismatch(format!(
            "the symmetric engine needs quarter-turn symmetry; {} has only {}",
            model.name(),
            model.symmetry()
        )),
        v => Ok(v),
    }
}

/// Result of a completed run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub model: String,
    pub engine: Variant,
    pub mode: Mode,
    pub n: usize,
    pub n_max: usize,
    pub precision_bits: u32,
    pub digits: usize,
    pub tol: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub truncated: bool,
    pub seed: u64,
    pub estimate: Option<BigReal>,
    pub bound: Option<BoundReport>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_CONVERGED
        } else {
            EXIT_CAP_REACHED
        }
    }

    /// The versioned JSON report; no timestamps, so identical runs give
    /// identical bytes.
    pub fn to_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "model": self.model,
            "engine": self.engine.as_str(),
            "mode": mode_name(self.mode),
            "n": self.n,
            "n_max": self.n_max,
            "precision_bits": self.precision_bits,
            "digits": self.digits,
            "tol": self.tol,
            "sweeps": self.sweeps,
            "converged": self.converged,
            "truncated": self.truncated,
            "seed": self.seed,
            "estimate": self.estimate.as_ref().map(|e| e.to_decimal(self.digits)),
            "bound": self.bound.as_ref().map(|b| b.to_json(self.digits)),
            "warnings": self.warnings,
        })
    }

    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("model          {}", self.model),
            format!("engine         {}", self.engine.as_str()),
            format!("n              {} (max {})", self.n, self.n_max),
            format!("precision      {} bits", self.precision_bits),
            format!(
                "sweeps         {} ({})",
                self.sweeps,
                if self.converged {
                    "converged"
                } else {
                    "cap reached"
                }
            ),
        ];
        if let Some(e) = &self.estimate {
            lines.push(format!("estimate       {}", e.to_decimal(self.digits)));
        }
        if let Some(b) = &self.bound {
            lines.push(format!(
                "lower bound    {}",
                b.lower_bound.to_decimal(self.digits)
            ));
            lines.push(format!("xi             {}", b.xi.to_decimal(self.digits)));
            lines.push(format!("eta            {}", b.eta.to_decimal(self.digits)));
            lines.push(format!(
                "iterations     xi {}, eta {}",
                b.iterations_xi, b.iterations_eta
            ));
            if let Some((lo, hi)) = &b.certified_interval {
                lines.push(format!(
                    "certified      [{}, {}]",
                    lo.to_decimal(self.digits),
                    hi.to_decimal(self.digits)
                ));
            }
            lines.push(format!("note           {}", b.note));
        }
        lines.push(format!("seed           {}", self.seed));
        for w in &self.warnings {
            lines.push(format!("warning        {w}"));
        }
        lines.join("\n") + "\n"
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Bound => "bound",
        Mode::Estimate => "estimate",
        Mode::Both => "both",
        Mode::Certify => "certify",
    }
}

fn load_model(config: &RunConfig, checkpoint_name: Option<&str>) -> Result<ModelSpec> {
    match (&config.model, &config.model_file, checkpoint_name) {
        (Some(name), _, _) => builtin(name),
        (None, Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Usage(format!("cannot read model file {}: {e}", path.display()))
            })?;
            parse_model_file(&text)
        }
        (None, None, Some(name)) => builtin(name).map_err(|_| {
            Error::Usage(format!(
                "checkpoint model `{name}` is not built in; pass --model-file"
            ))
        }),
        (None, None, None) => Err(Error::Usage(
            "one of --model or --model-file is required".into(),
        )),
    }
}

// The engine-specific pieces the runner needs beyond sweeping.
trait Engine: Sweepable + CheckpointEnv + BoundSource {
    fn dump(&self, model: &ModelSpec) -> Result<SpectrumDump>;
    fn is_truncated(&self) -> bool;
}

impl Engine for CtmEnvironment {
    fn dump(&self, model: &ModelSpec) -> Result<SpectrumDump> {
        Ok(spectrum(self, model))
    }

    fn is_truncated(&self) -> bool {
        self.truncated
    }
}

impl Engine for AsymEnvironment {
    fn dump(&self, model: &ModelSpec) -> Result<SpectrumDump> {
        self.spectrum(model)
    }

    fn is_truncated(&self) -> bool {
        self.truncated
    }
}

struct Plan<'a> {
    config: &'a RunConfig,
    model: &'a ModelSpec,
    engine: Variant,
    prec: u32,
    digits: usize,
    previous: Option<BigReal>,
}

fn execute<E: Engine>(mut env: E, plan: &Plan) -> Result<RunOutcome> {
    let config = plan.config;
    let schedule = Schedule::new(config.nmax, config.tol, config.max_sweeps);
    let checkpoint = config.checkpoint.as_deref();
    let trace: RunTrace = drive(
        &mut env,
        plan.model,
        &schedule,
        plan.previous.clone(),
        &mut |env, entry| {
            log::info!(
                "sweep {} n = {} estimate {}",
                entry.sweep,
                entry.n,
                entry.estimate.to_decimal(plan.digits)
            );
            if let Some(path) = checkpoint {
                write_checkpoint(path, &env.to_checkpoint(plan.model, Some(&entry.estimate)))?;
            }
            Ok(())
        },
    )?;
    let estimate = match trace.last_estimate() {
        Some(e) => e.clone(),
        None => env.estimate(plan.model)?,
    };
    if let Some(path) = &config.spectrum_out {
        write_spectrum_csv(path, &env.dump(plan.model)?, plan.prec)?;
    }
    let bound = if config.mode.wants_bound() {
        let mut opts = BoundOptions::for_precision(plan.prec);
        opts.power.seed = config.seed;
        opts.allow_unstable = config.allow_unstable_bound;
        opts.certify = config.mode == Mode::Certify;
        Some(lower_bound(&env, plan.model, &opts)?)
    } else {
        None
    };
    Ok(RunOutcome {
        model: plan.model.name().to_string(),
        engine: plan.engine,
        mode: config.mode,
        n: Sweepable::n(&env),
        n_max: config.nmax,
        precision_bits: plan.prec,
        digits: plan.digits,
        tol: config.tol,
        sweeps: env.sweeps(),
        converged: trace.converged,
        truncated: env.is_truncated(),
        seed: config.seed,
        estimate: (config.mode != Mode::Bound).then_some(estimate),
        bound,
        warnings: trace.warnings,
    })
}

fn start_or_resume<E: Engine>(
    fresh: impl FnOnce() -> Result<E>,
    plan: &mut Plan,
    path: Option<&Path>,
) -> Result<RunOutcome> {
    match path {
        Some(path) => {
            let cp = read_checkpoint(path)?;
            let env = E::from_checkpoint(&cp, plan.model)?;
            plan.previous = cp.estimate.clone();
            execute(env, plan)
        }
        None => execute(fresh()?, plan),
    }
}

/// Validates `config`, runs the engine and returns the outcome.
pub fn run_config(config: &RunConfig) -> Result<RunOutcome> {
    let resume_from = if config.resume {
        let path = config
            .checkpoint
            .as_ref()
            .ok_or_else(|| Error::Usage("--resume needs --checkpoint".into()))?;
        Some(read_checkpoint(path)?)
    } else {
        None
    };
    let model = load_model(config, resume_from.as_ref().map(|c| c.model_name.as_str()))?;
    let engine = resolve_engine(config.engine, &model)?;
    let prec = match (&resume_from, config.precision_bits) {
        (Some(cp), Some(p)) if p != cp.precision => {
            return Err(Error::Usage(format!(
                "the checkpoint is at {} bits; precision cannot change on resume",
                cp.precision
            )))
        }
        (Some(cp), _) => cp.precision,
        (None, p) => p.unwrap_or(DEFAULT_PRECISION),
    };
    check_precision(prec)?;
    let limit = max_digits(prec);
    let digits = match config.digits {
        Some(d) if d == 0 || d > limit => {
            return Err(Error::Usage(format!(
                "--digits {d} outside 1..={limit} supported at {prec} bits"
            )))
        }
        Some(d) => d,
        None => DEFAULT_DIGITS.min(limit),
    };
    if config.nmax == 0 || !(config.tol > 0.0) || config.max_sweeps == 0 {
        return Err(Error::Usage(
            "--nmax, --tol and --max-sweeps must be positive".into(),
        ));
    }
    if config.mode.wants_bound() && model.unstable_bound() && !config.allow_unstable_bound {
        return Err(Error::Usage(format!(
            "the bound iteration for {} is known to be unstable; use --mode estimate or pass --allow-unstable-bound",
            model.name()
        )));
    }
    if let Some(cp) = &resume_from {
        cp.check_compatible(&model, engine)?;
    }
    let mut plan = Plan {
        config,
        model: &model,
        engine,
        prec,
        digits,
        previous: None,
    };
    let resume_path = resume_from.as_ref().and(config.checkpoint.as_deref());
    match engine {
        Variant::Symmetric => {
            start_or_resume(|| init_environment(&model, prec), &mut plan, resume_path)
        }
        Variant::Asym | Variant::Bond => {
            start_or_resume(|| init_asym(&model, prec), &mut plan, resume_path)
        }
    }
}

/// Parses `args` (including the program name), runs, writes the report to
/// `out` and diagnostics to `err`, and returns the exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_CONVERGED
            };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    if let Some(threads) = config.threads {
        if threads == 0 {
            let _ = writeln!(err, "error: --threads must be at least 1");
            return EXIT_ERROR;
        }
        // A second pool in the same process keeps the first one's size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run_config(&config) {
        Ok(outcome) => {
            let rendered = match config.output {
                OutputFormat::Text => outcome.to_text(),
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&outcome.to_json()).expect("report serialises")
                        + "\n"
                }
            };
            if out.write_all(rendered.as_bytes()).is_err() {
                return EXIT_ERROR;
            }
            outcome.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("ctm-capacity").chain(args.iter().copied());
        let code = main_with_args(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn auto_engine_follows_symmetry_and_placement() {
        let pick =
            |name: &str| resolve_engine(EngineChoice::Auto, &builtin(name).unwrap()).unwrap();
        assert_eq!(pick("hard_squares"), Variant::Symmetric);
        assert_eq!(pick("rwim"), Variant::Asym);
        assert_eq!(pick("q_charge"), Variant::Bond);
        assert_eq!(pick("dimer"), Variant::Bond);
        let rwim = builtin("rwim").unwrap();
        assert!(resolve_engine(EngineChoice::Symmetric, &rwim).is_err());
        assert!(resolve_engine(EngineChoice::Bond, &rwim).is_err());
        assert!(resolve_engine(EngineChoice::Asym, &builtin("dimer").unwrap()).is_err());
        assert_eq!(
            resolve_engine(EngineChoice::Asym, &builtin("nak").unwrap()).unwrap(),
            Variant::Asym
        );
    }

    #[test]
    fn digit_guard() {
        assert_eq!(max_digits(320), 86);
        assert_eq!(max_digits(64), 9);
        let (code, _, err) = run(&[
            "--model",
            "hard_squares",
            "--precision-bits",
            "64",
            "--digits",
            "15",
        ]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("--digits"), "{err}");
    }

    #[test]
    fn q_charge_bound_needs_the_override() {
        let (code, _, err) = run(&["--model", "q_charge", "--mode", "bound"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("--allow-unstable-bound"), "{err}");
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(run(&["--model", "nope"]).0, EXIT_ERROR);
        assert_eq!(run(&[]).0, EXIT_ERROR);
        assert_eq!(run(&["--model", "nak", "--bogus"]).0, EXIT_ERROR);
        assert_eq!(run(&["--model", "nak", "--resume"]).0, EXIT_ERROR);
        assert_eq!(run(&["--help"]).0, EXIT_CONVERGED);
    }

    #[test]
    fn small_run_prints_both_numbers() {
        let (code, out, _) = run(&[
            "--model",
            "hard_squares",
            "--nmax",
            "6",
            "--precision-bits",
            "128",
            "--digits",
            "15",
            "--tol",
            "1e-9",
        ]);
        assert_eq!(code, EXIT_CONVERGED);
        assert!(out.contains("estimate       1.5030"), "{out}");
        assert!(out.contains("lower bound    1.5030"), "{out}");
    }

    #[test]
    fn cap_reached_exits_with_two() {
        let (code, out, _) = run(&[
            "--model",
            "nak",
            "--nmax",
            "4",
            "--max-sweeps",
            "1",
            "--mode",
            "estimate",
            "--precision-bits",
            "96",
            "--digits",
            "8",
            "--output",
            "json",
        ]);
        assert_eq!(code, EXIT_CAP_REACHED);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["converged"], false);
        assert!(v["bound"].is_null());
    }
}
