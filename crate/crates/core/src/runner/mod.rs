//! Configured experiments: single runs, parameter sweeps and their files.
//!
//! A simulation writes `<prefix>_trajectory.csv` (one row per sample, in
//! [`CSV_COLUMNS`] order), `<prefix>_summary.json` ([`RunSummary`]) and the
//! final fields as `<prefix>_final_u.csv` / `<prefix>_final_v.csv`. A sweep
//! writes `<prefix>_sweep.csv` ([`SweepRow`]).

pub mod config;
pub mod initial;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord, LyapunovDecayReport, WindowRule, CSV_COLUMNS};
use crate::error::{Error, Result};
use crate::grid::{RhsOptions, State};
use crate::integrator::{self, RunStatus, Trajectory};
use crate::model::{self, ConditionReport, LyapunovConstants, Params};

pub use config::ExperimentConfig;
pub use initial::{generate_initial_data, FieldSpec, InitialSpec};

/// Outcome of a decay-rate fit as reported in summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum GammaFit {
    Fitted {
        gamma: f64,
    },
    /// The deviation was zero from the start of the window.
    AlreadyConverged,
    Unavailable {
        reason: String,
    },
}

impl GammaFit {
    pub fn value(&self) -> Option<f64> {
        match self {
            GammaFit::Fitted { gamma } => Some(*gamma),
            _ => None,
        }
    }

    fn as_csv(&self) -> f64 {
        self.value().unwrap_or(f64::NAN)
    }
}

/// Fits the decay rate of `f` over the standard window of `trajectory`.
pub fn fit_gamma(
    trajectory: &Trajectory,
    params: &Params,
    f: impl Fn(&DiagnosticsRecord) -> f64,
) -> GammaFit {
    let series = trajectory.series(f);
    let Some(mut rule) = WindowRule::from_records(&trajectory.records, params) else {
        return GammaFit::Unavailable {
            reason: "deviation never entered the fit window".into(),
        };
    };
    // skip a deviation that is exactly zero at the start of the window
    match series.iter().find(|(t, x)| *t >= rule.start && *x != 0.0) {
        Some(&(t, _)) => rule.start = t,
        None => return GammaFit::AlreadyConverged,
    }
    match diagnostics::fit_decay_rate(&series, &rule) {
        Ok(gamma) => GammaFit::Fitted { gamma },
        Err(Error::Domain { .. }) => GammaFit::AlreadyConverged,
        Err(e) => GammaFit::Unavailable {
            reason: e.to_string(),
        },
    }
}

/// Largest sampled value of each bounded quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Suprema {
    pub mass_u: f64,
    pub l2_v: f64,
    pub grad_l2_v: f64,
    pub energy: f64,
    pub max_u: f64,
    pub w_neg: f64,
    pub w_pos: f64,
}

impl Suprema {
    pub fn of(records: &[DiagnosticsRecord]) -> Self {
        // NaN only when every sample is NaN
        let sup = |f: fn(&DiagnosticsRecord) -> f64| records.iter().map(f).fold(f64::NAN, f64::max);
        Suprema {
            mass_u: sup(|r| r.mass_u),
            l2_v: sup(|r| r.l2_v),
            grad_l2_v: sup(|r| r.grad_l2_v),
            energy: sup(|r| r.energy()),
            max_u: sup(|r| r.max_u),
            w_neg: sup(|r| r.w_neg),
            w_pos: sup(|r| r.w_pos),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub t: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub u_mean: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub linf_u_dev: f64,
    pub linf_v_dev: f64,
}

impl FinalState {
    fn of(state: &State, last: &DiagnosticsRecord) -> Result<Self> {
        Ok(FinalState {
            t: state.t,
            u_min: state.u.min(),
            u_max: state.u.max(),
            u_mean: state.u.integral()? / state.grid().measure(),
            v_min: state.v.min(),
            v_max: state.v.max(),
            linf_u_dev: last.linf_u_dev,
            linf_v_dev: last.linf_v_dev,
        })
    }
}

/// Contents of `<prefix>_summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub params: Params,
    pub status: RunStatus,
    pub conditions: ConditionReport,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub eta0: f64,
    pub t_of_eta0: f64,
    pub suprema: Suprema,
    #[serde(rename = "final")]
    pub final_state: FinalState,
    pub gamma_u: GammaFit,
    pub gamma_v: GammaFit,
    /// `None` when the measured lower bound leaves `mu` below threshold.
    pub lyapunov: Option<LyapunovConstants>,
    pub lyapunov_weight: f64,
    pub lyapunov_check: Option<LyapunovDecayReport>,
}

impl RunSummary {
    pub fn from_trajectory(trajectory: &Trajectory, params: &Params) -> Result<Self> {
        Ok(RunSummary {
            params: *params,
            status: trajectory.status,
            conditions: model::check_boundedness_conditions(params),
            accepted_steps: trajectory.accepted_steps,
            rejected_steps: trajectory.rejected_steps,
            eta0: trajectory.eta.eta0,
            t_of_eta0: trajectory.eta.t_of_min,
            suprema: Suprema::of(&trajectory.records),
            final_state: FinalState::of(&trajectory.final_state, trajectory.last())?,
            gamma_u: fit_gamma(trajectory, params, |r| r.linf_u_dev),
            gamma_v: fit_gamma(trajectory, params, |r| r.linf_v_dev),
            lyapunov: trajectory.lyapunov,
            lyapunov_weight: trajectory.lyapunov_weight,
            lyapunov_check: trajectory
                .lyapunov
                .map(|c| diagnostics::check_lyapunov_decay(&trajectory.records, &c)),
        })
    }
}

/// Runs the configured experiment without touching the file system.
pub fn simulate_config(config: &ExperimentConfig) -> Result<(Trajectory, RunSummary)> {
    let params = config.params()?;
    run_point(config, &params)
}

fn run_point(config: &ExperimentConfig, params: &Params) -> Result<(Trajectory, RunSummary)> {
    let grid = config.grid()?;
    let initial = generate_initial_data(&config.initial, &grid)?;
    let opts = RhsOptions {
        mean: config.run.interface_mean,
        ..RhsOptions::default()
    };
    let trajectory = integrator::simulate_with(
        &initial,
        params,
        &config.step,
        &config.schedule(),
        &config.diagnostics(params),
        &opts,
    )?;
    let summary = RunSummary::from_trajectory(&trajectory, params)?;
    Ok((trajectory, summary))
}

pub fn write_trajectory_csv<W: Write>(records: &[DiagnosticsRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Paths written by [`run_simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    pub trajectory_csv: PathBuf,
    pub summary_json: PathBuf,
    pub final_u_csv: PathBuf,
    pub final_v_csv: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub summary: RunSummary,
}

pub fn run_simulate(config: &ExperimentConfig) -> Result<SimulateOutput> {
    let (trajectory, summary) = simulate_config(config)?;

    let trajectory_csv = config.output_path("trajectory.csv");
    write_trajectory_csv(&trajectory.records, create(&trajectory_csv)?)?;

    let summary_json = config.output_path("summary.json");
    let mut w = create(&summary_json)?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    writeln!(w)?;
    w.flush()?;

    let final_u_csv = config.output_path("final_u.csv");
    let final_v_csv = config.output_path("final_v.csv");
    trajectory.final_state.u.write_csv(create(&final_u_csv)?)?;
    trajectory.final_state.v.write_csv(create(&final_v_csv)?)?;

    let mut snapshots = Vec::new();
    for (k, s) in trajectory.snapshots.iter().enumerate() {
        for (name, field) in [("u", &s.u), ("v", &s.v)] {
            let path = config.output_path(&format!("snapshot_{k:04}_{name}.csv"));
            field.write_csv(create(&path)?)?;
            snapshots.push(path);
        }
    }

    Ok(SimulateOutput {
        trajectory_csv,
        summary_json,
        final_u_csv,
        final_v_csv,
        snapshots,
        summary,
    })
}

/// One row of the sweep table. Failed points carry the error and NaNs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub a: f64,
    pub chi: f64,
    pub mu: f64,
    pub status: Option<RunStatus>,
    pub eta0: f64,
    pub gamma_u: f64,
    pub gamma_v: f64,
    pub rate_bound: f64,
    pub mu_threshold: f64,
    pub cond_a_ok: bool,
    pub cond_chi_ok: bool,
    pub margin_a: f64,
    pub margin_chi: f64,
    pub lyapunov_violations: Option<usize>,
    pub sup_energy: f64,
    pub sup_max_u: f64,
    pub sup_w_pos_mu: f64,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(index: usize, params: &Params, conditions: &ConditionReport, err: Error) -> Self {
        SweepRow {
            index,
            a: params.a,
            chi: params.chi,
            mu: params.mu,
            status: None,
            eta0: f64::NAN,
            gamma_u: f64::NAN,
            gamma_v: f64::NAN,
            rate_bound: f64::NAN,
            mu_threshold: f64::NAN,
            cond_a_ok: conditions.cond_a_ok,
            cond_chi_ok: conditions.cond_chi_ok,
            margin_a: conditions.margin_a,
            margin_chi: conditions.margin_chi,
            lyapunov_violations: None,
            sup_energy: f64::NAN,
            sup_max_u: f64::NAN,
            sup_w_pos_mu: f64::NAN,
            error: Some(err.to_string()),
        }
    }

    fn from_summary(index: usize, s: &RunSummary) -> Self {
        let c = &s.conditions;
        SweepRow {
            index,
            a: s.params.a,
            chi: s.params.chi,
            mu: s.params.mu,
            status: Some(s.status),
            eta0: s.eta0,
            gamma_u: s.gamma_u.as_csv(),
            gamma_v: s.gamma_v.as_csv(),
            rate_bound: s.lyapunov.map_or(f64::NAN, |l| l.rate_bound),
            mu_threshold: if s.eta0 > 0.0 {
                model::mu_threshold(&s.params, 1.0 / (s.eta0 * s.eta0))
            } else {
                f64::NAN
            },
            cond_a_ok: c.cond_a_ok,
            cond_chi_ok: c.cond_chi_ok,
            margin_a: c.margin_a,
            margin_chi: c.margin_chi,
            lyapunov_violations: s.lyapunov_check.map(|r| r.violations),
            sup_energy: s.suprema.energy,
            sup_max_u: s.suprema.max_u,
            sup_w_pos_mu: s.suprema.w_pos * s.params.mu,
            error: None,
        }
    }
}

/// Grid points of the sweep in row-major `(a, chi, mu)` order.
pub fn sweep_points(config: &ExperimentConfig) -> Vec<(f64, f64, f64)> {
    let sweep = config.sweep.clone().unwrap_or_default();
    let axis = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
    let m = &config.model;
    let (a_axis, chi_axis, mu_axis) = (
        axis(&sweep.a, m.a),
        axis(&sweep.chi, m.chi),
        axis(&sweep.mu, m.mu),
    );
    let mut points = Vec::new();
    for &a in &a_axis {
        for &chi in &chi_axis {
            for &mu in &mu_axis {
                points.push((a, chi, mu));
            }
        }
    }
    points
}

fn sweep_row(config: &ExperimentConfig, index: usize, (a, chi, mu): (f64, f64, f64)) -> SweepRow {
    let dim = config.grid.extents.len();
    let params = match Params::new(a, mu, chi, dim) {
        Ok(p) => p,
        Err(e) => {
            let raw = Params {
                a,
                mu,
                chi,
                dim,
                degenerate: false,
            };
            let conditions = model::check_boundedness_conditions(&raw);
            return SweepRow::failed(index, &raw, &conditions, e);
        }
    };
    match run_point(config, &params) {
        Ok((_, summary)) => SweepRow::from_summary(index, &summary),
        Err(e) => {
            let conditions = model::check_boundedness_conditions(&params);
            SweepRow::failed(index, &params, &conditions, e)
        }
    }
}

/// Runs every grid point; rows come back sorted by grid index.
pub fn sweep_config(config: &ExperimentConfig, parallel: bool) -> Vec<SweepRow> {
    let points = sweep_points(config);
    if parallel {
        let mut rows: Vec<SweepRow> = points
            .into_par_iter()
            .enumerate()
            .map(|(i, p)| sweep_row(config, i, p))
            .collect();
        rows.sort_by_key(|r| r.index);
        rows
    } else {
        points
            .into_iter()
            .enumerate()
            .map(|(i, p)| sweep_row(config, i, p))
            .collect()
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub table_csv: PathBuf,
    pub rows: Vec<SweepRow>,
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    let parallel = config.sweep.as_ref().is_none_or(|s| s.parallel);
    let rows = sweep_config(config, parallel);
    let table_csv = config.output_path("sweep.csv");
    write_sweep_csv(&rows, create(&table_csv)?)?;
    Ok(SweepOutput { table_csv, rows })
}
