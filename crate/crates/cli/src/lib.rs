//! Experiment runner behind the `holonomy` binary.
//!
//! A run takes an [`ExperimentConfig`], dispatches one job and returns a
//! [`ResultRecord`]. Failures carry the process exit code.

pub mod config;
pub mod record;

use std::time::Instant;

use holonomy_core::dynamics::{adiabatic_predict_with, EvolutionReport, Schedule};
use holonomy_core::oracles::predict_path;
use holonomy_core::{holonomy_auto, holonomy_matrix_with, HolonomyResult, LoopPath, Refinement};
use rayon::prelude::*;

pub use config::{parse_angle, parse_loop, parse_model, Angle, ExperimentConfig, Format, Job, LoopConfig};
pub use record::{from_csv, from_json, sweep_from_csv, to_csv, to_json, ResultRecord};

use record::{EvolutionRecord, HolonomyRecord, MatrixRecord, Sidecar, SweepRow, VerificationRecord};

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad input: config, flags, or a loop the integrator refuses.
    Validation(String),
    /// The loop meets a spectral degeneracy.
    Degeneracy(String),
    /// `verify` found the integrator and the closed form apart.
    Mismatch(String),
    Io(String),
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Degeneracy(_) => 3,
            Failure::Mismatch(_) => 4,
            Failure::Io(_) | Failure::Internal(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Validation(_) => "validation",
            Failure::Degeneracy(_) => "degeneracy",
            Failure::Mismatch(_) => "mismatch",
            Failure::Io(_) => "io",
            Failure::Internal(_) => "internal",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m)
            | Failure::Degeneracy(m)
            | Failure::Mismatch(m)
            | Failure::Io(m)
            | Failure::Internal(m) => m,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for Failure {}

impl From<holonomy_core::Error> for Failure {
    fn from(e: holonomy_core::Error) -> Self {
        use holonomy_core::Error as E;
        match e {
            E::Degeneracy(_) | E::Continuation { .. } => Failure::Degeneracy(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn holonomy_for(cfg: &ExperimentConfig, path: &LoopPath) -> Result<HolonomyResult, Failure> {
    let n = &cfg.numeric;
    let hol = if n.refine {
        let refine = Refinement {
            initial_steps: n.steps,
            tolerance: n.refine_tolerance,
            max_steps: n.max_steps,
        };
        holonomy_auto(&cfg.model, path, n.gauge, refine)?
    } else {
        holonomy_matrix_with(&cfg.model, path, n.steps, n.gauge)?
    };
    Ok(hol)
}

fn holonomy_record(h: &HolonomyResult) -> HolonomyRecord {
    HolonomyRecord {
        m: MatrixRecord::from_matrix(&h.m),
        w: MatrixRecord::from_matrix(&h.w),
        b: MatrixRecord::from_matrix(&h.b),
        permutation: h.permutation.clone(),
        level_phases: h.level_phases.iter().map(|z| z.arg()).collect(),
        residual: h.residual,
        steps: h.steps,
        warning: h.warning.clone(),
    }
}

fn evolve(cfg: &ExperimentConfig, path: &LoopPath, hol: &HolonomyResult, kicks: usize) -> Result<EvolutionReport, Failure> {
    let mut schedule = Schedule::new(path.clone(), kicks)?;
    if let Some(t) = cfg.numeric.total_time {
        schedule = schedule.with_total_time(t)?;
    }
    Ok(adiabatic_predict_with(&cfg.model, &schedule, hol.clone())?)
}

/// Runs the configured job. A failed verification still yields its record;
/// see [`ResultRecord`] and [`exit_status`].
pub fn run(cfg: &ExperimentConfig) -> Result<ResultRecord, Failure> {
    let started = Instant::now();
    cfg.validate()?;
    let path = cfg.loop_path()?;
    let hol = holonomy_for(cfg, &path)?;
    let mut record = ResultRecord {
        job: cfg.job,
        config: cfg.clone(),
        holonomy: Some(holonomy_record(&hol)),
        evolution: None,
        verification: None,
        sweep: None,
        sidecar: Sidecar::default(),
    };
    match cfg.job {
        Job::Holonomy => {}
        Job::Verify => {
            let want = predict_path(&cfg.model, &path, cfg.numeric.eta_convention)?;
            let error = holonomy_core::matcore::op_norm(&(&hol.m - &want.m_expected));
            let formula = serde_json::to_value(want.formula)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            record.verification = Some(VerificationRecord {
                formula,
                inputs: want.inputs,
                m_expected: MatrixRecord::from_matrix(&want.m_expected),
                error,
                tolerance: cfg.numeric.tolerance,
                passed: error <= cfg.numeric.tolerance,
            });
        }
        Job::Evolve => {
            let rep = evolve(cfg, &path, &hol, cfg.numeric.kicks)?;
            record.evolution = Some(EvolutionRecord {
                kicks: cfg.numeric.kicks,
                deviation: rep.deviation,
                permutation: rep.permutation,
                m_evolution: MatrixRecord::from_matrix(&rep.m_from_evolution),
            });
        }
        Job::Sweep => {
            let rows = cfg
                .numeric
                .sweep_kicks
                .par_iter()
                .map(|&l| {
                    let rep = evolve(cfg, &path, &hol, l)?;
                    Ok(SweepRow {
                        kicks: l,
                        deviation: rep.deviation,
                        permutation: rep.permutation,
                    })
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            record.sweep = Some(rows);
        }
    }
    record.check_unitary()?;
    record.sidecar.wall_time_seconds = started.elapsed().as_secs_f64();
    Ok(record)
}

/// Exit status for a finished record: a failed verification is 4.
pub fn exit_status(record: &ResultRecord) -> Result<(), Failure> {
    match &record.verification {
        Some(v) if !v.passed => Err(Failure::Mismatch(format!(
            "holonomy differs from the {} closed form by {:.3e} (tolerance {:.0e})",
            v.formula, v.error, v.tolerance
        ))),
        _ => Ok(()),
    }
}

pub fn emit(record: &ResultRecord, format: Format) -> Result<String, Failure> {
    match format {
        Format::Json => to_json(record),
        Format::Csv => to_csv(record),
    }
}

/// Caps rayon's global pool from `HOLONOMY_THREADS`, if set.
pub fn configure_threads(value: Option<&str>) -> Result<(), Failure> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Validation(format!("HOLONOMY_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}
