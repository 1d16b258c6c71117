//! Corner-transfer-matrix renormalisation: the symmetric engine, the shared
//! sweep driver, checkpoints and spectrum dumps.

mod checkpoint;
mod spectrum;
mod symmetric;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numerics::BigReal;

pub(crate) use checkpoint::{family_names, take_family};
pub use checkpoint::{
    read_checkpoint, write_checkpoint, Checkpoint, CheckpointEnv, CHECKPOINT_VERSION,
};
pub use spectrum::{spectrum, write_spectrum_csv, SpectrumDump};
pub use symmetric::{
    estimate_kappa, expand, finite_partition, init_environment, normalize, reduce, run,
    CtmEnvironment,
};

/// Which engine an environment belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Symmetric,
    Asym,
    Bond,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Symmetric => "symmetric",
            Variant::Asym => "asym",
            Variant::Bond => "bond",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "symmetric" => Ok(Variant::Symmetric),
            "asym" => Ok(Variant::Asym),
            "bond" => Ok(Variant::Bond),
            other => Err(Error::InvalidConfig(format!("unknown engine `{other}`"))),
        }
    }
}

/// Size schedule and stopping rule for a run.
#[derive(Clone, Debug)]
pub struct Schedule {
    /// Target matrix size.
    pub n_max: usize,
    /// Stop once the relative change of successive estimates at `n_max`
    /// drops below this.
    pub tol: f64,
    /// Cap on sweeps performed at `n_max`.
    pub max_sweeps: usize,
    /// Sweeps between unit increments of the matrix size.
    pub growth: usize,
}

impl Schedule {
    pub fn new(n_max: usize, tol: f64, max_sweeps: usize) -> Self {
        Schedule {
            n_max,
            tol,
            max_sweeps,
            growth: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        if self.growth == 0 {
            return Err(Error::InvalidConfig("growth must be at least 1".into()));
        }
        Ok(())
    }
}

/// One completed sweep.
#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub sweep: usize,
    pub n: usize,
    pub estimate: BigReal,
    /// |κ_t − κ_{t−1}| / κ_t against the previous sweep, if there was one.
    pub relative_change: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunTrace {
    pub entries: Vec<TraceEntry>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl RunTrace {
    pub fn last_estimate(&self) -> Option<&BigReal> {
        self.entries.last().map(|e| &e.estimate)
    }
}

/// What the sweep driver needs from an engine.
pub trait Sweepable {
    fn variant(&self) -> Variant;
    fn n(&self) -> usize;
    fn precision(&self) -> u32;
    /// Number of sweeps performed so far.
    fn sweeps(&self) -> usize;
    /// Matrix size right after the next expansion.
    fn expanded_n(&self, model: &ModelSpec) -> usize;
    /// Expand, reduce to `n_target` and normalise; returns warnings.
    fn sweep(&mut self, model: &ModelSpec, n_target: usize) -> Result<Vec<String>>;
    fn estimate(&self, model: &ModelSpec) -> Result<BigReal>;
}

/// Runs sweeps until the estimate settles at `schedule.n_max` or the cap is
/// reached. `previous` is the estimate before the first sweep (a resumed
/// run passes the checkpointed value). `on_sweep` sees the environment after
/// every sweep, for checkpointing.
pub fn drive<E: Sweepable>(
    env: &mut E,
    model: &ModelSpec,
    schedule: &Schedule,
    previous: Option<BigReal>,
    on_sweep: &mut dyn FnMut(&E, &TraceEntry) -> Result<()>,
) -> Result<RunTrace> {
    schedule.validate()?;
    let mut trace = RunTrace::default();
    let mut previous = previous.map(|p| (p, env.n()));
    let mut at_target = 0usize;
    let mut since_growth = 0usize;
    loop {
        let n = env.n();
        since_growth += 1;
        let mut target = n;
        if n < schedule.n_max && since_growth >= schedule.growth {
            target = n + 1;
            since_growth = 0;
        }
        let target = target.min(schedule.n_max).min(env.expanded_n(model));
        let warnings = env.sweep(model, target)?;
        trace.warnings.extend(
            warnings
                .into_iter()
                .map(|w| format!("sweep {}: {w}", env.sweeps())),
        );
        let estimate = env.estimate(model)?;
        let relative_change = previous.as_ref().map(|(p, _)| {
            let diff = (&estimate - p).abs();
            if estimate.is_zero() {
                if diff.is_zero() {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (diff / estimate.abs()).to_f64()
            }
        });
        let entry = TraceEntry {
            sweep: env.sweeps(),
            n: env.n(),
            estimate: estimate.clone(),
            relative_change,
        };
        on_sweep(env, &entry)?;
        trace.entries.push(entry);
        let settled_size =
            env.n() >= schedule.n_max || env.n() >= env.expanded_n(model).min(schedule.n_max);
        let prev_same_size = previous.as_ref().is_some_and(|(_, pn)| *pn == env.n());
        if settled_size {
            at_target += 1;
            if prev_same_size && relative_change.is_some_and(|c| c < schedule.tol) {
                trace.converged = true;
                return Ok(trace);
            }
            if at_target >= schedule.max_sweeps {
                return Ok(trace);
            }
        }
        previous = Some((estimate, env.n()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(0, 1e-10, 5).validate().is_err());
        assert!(Schedule::new(4, 0.0, 5).validate().is_err());
        assert!(Schedule::new(4, 1e-10, 5).validate().is_ok());
        assert_eq!(Variant::parse("asym").unwrap(), Variant::Asym);
        assert!(Variant::parse("x").is_err());
    }
}
