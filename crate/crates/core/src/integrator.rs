//! Explicit RK4 time stepping with positivity guards and adaptive step
//! control.
//!
//! Steps are never clamped: a candidate that leaves the admissible set is
//! rejected and retried with half the step. The step is capped by the
//! diffusive stability bound `safety * cfl_diff * h_min^2`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord, DiagnosticsSpec, EtaEstimate};
use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid, RhsOptions, State};
use crate::model::{self, LyapunovConstants, Params};

/// Consecutive accepted steps before the step grows.
pub const GROWTH_STREAK: usize = 20;
pub const GROWTH_FACTOR: f64 = 1.25;
/// Consecutive converged samples required by [`detect_convergence`].
pub const CONVERGENCE_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControl {
    pub dt_init: f64,
    pub dt_min: f64,
    pub safety: f64,
    pub cfl_diff: f64,
    pub v_floor: f64,
    pub u_cap: f64,
    /// Keep `dt = dt_init` throughout and stop on the first rejection.
    pub fixed_step: bool,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            dt_init: 1e-3,
            dt_min: 1e-12,
            safety: 0.9,
            cfl_diff: 0.2,
            v_floor: 1e-10,
            u_cap: 1e6,
            fixed_step: false,
        }
    }
}

impl StepControl {
    pub fn fixed(dt: f64) -> Self {
        StepControl {
            dt_init: dt,
            dt_min: dt * 1e-3,
            fixed_step: true,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| {
            Err(Error::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        if !(self.dt_init > 0.0) {
            return bad("dt_init", self.dt_init, "must be > 0");
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_init) {
            return bad("dt_min", self.dt_min, "must lie in (0, dt_init)");
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad("safety", self.safety, "must lie in (0, 1]");
        }
        if !(self.cfl_diff > 0.0 && self.cfl_diff <= 0.25) {
            return bad("cfl_diff", self.cfl_diff, "must lie in (0, 0.25]");
        }
        if !(self.v_floor > 0.0) {
            return bad("v_floor", self.v_floor, "must be > 0");
        }
        if !(self.u_cap > 0.0) {
            return bad("u_cap", self.u_cap, "must be > 0");
        }
        Ok(())
    }

    pub fn stability_bound(&self, grid: &Grid) -> f64 {
        let h = grid.h_min();
        self.safety * self.cfl_diff * h * h
    }
}

/// Guard that rejected a candidate step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Guard {
    NegativeU {
        min: f64,
    },
    VBelowFloor {
        min: f64,
    },
    UAboveCap {
        max: f64,
    },
    NonFinite,
    /// A Runge-Kutta stage produced `v <= 0`.
    SingularStage,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted(State),
    Rejected(Guard),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    CompletedHorizon,
    ConvergedEarly,
    VFloorHit,
    BlowUpSuspected,
    StepUnderflow,
}

impl RunStatus {
    pub fn is_success(self) -> bool {
        matches!(
            self,
            RunStatus::CompletedHorizon | RunStatus::ConvergedEarly
        )
    }

    fn from_guard(guard: Guard) -> Self {
        match guard {
            Guard::VBelowFloor { .. } | Guard::SingularStage => RunStatus::VFloorHit,
            Guard::UAboveCap { .. } | Guard::NonFinite => RunStatus::BlowUpSuspected,
            Guard::NegativeU { .. } => RunStatus::StepUnderflow,
        }
    }
}

/// Reusable RK4 work buffers.
struct Stepper {
    ku: [Vec<f64>; 4],
    kv: [Vec<f64>; 4],
    su: Vec<f64>,
    sv: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Stepper {
            ku: std::array::from_fn(|_| vec![0.0; n]),
            kv: std::array::from_fn(|_| vec![0.0; n]),
            su: vec![0.0; n],
            sv: vec![0.0; n],
        }
    }

    fn step(
        &mut self,
        state: &State,
        params: &Params,
        ctrl: &StepControl,
        opts: &RhsOptions,
        dt: f64,
    ) -> Result<StepOutcome> {
        let grid = *state.grid();
        let (u, v) = (&state.u.values, &state.v.values);
        let n = u.len();
        let offsets = [0.5 * dt, 0.5 * dt, dt];
        for stage in 0..4 {
            let (ku, kv) = (&mut self.ku, &mut self.kv);
            let result = if stage == 0 {
                grid::eval_rhs(&grid, params, opts, u, v, &mut ku[0], &mut kv[0])
            } else {
                let c = offsets[stage - 1];
                for k in 0..n {
                    self.su[k] = u[k] + c * ku[stage - 1][k];
                    self.sv[k] = v[k] + c * kv[stage - 1][k];
                }
                let (ku_s, kv_s) = (&mut ku[stage], &mut kv[stage]);
                grid::eval_rhs(&grid, params, opts, &self.su, &self.sv, ku_s, kv_s)
            };
            match result {
                Ok(()) => {}
                Err(Error::Singular(_)) => return Ok(StepOutcome::Rejected(Guard::SingularStage)),
                Err(e) => return Err(e),
            }
        }
        let w = dt / 6.0;
        let combine = |y: &[f64], k: &[Vec<f64>; 4]| -> Vec<f64> {
            (0..n)
                .map(|i| y[i] + w * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
                .collect()
        };
        let new_u = combine(u, &self.ku);
        let new_v = combine(v, &self.kv);

        if new_u.iter().chain(&new_v).any(|x| !x.is_finite()) {
            return Ok(StepOutcome::Rejected(Guard::NonFinite));
        }
        let min_u = new_u.iter().copied().fold(f64::INFINITY, f64::min);
        if min_u < 0.0 {
            return Ok(StepOutcome::Rejected(Guard::NegativeU { min: min_u }));
        }
        let min_v = new_v.iter().copied().fold(f64::INFINITY, f64::min);
        if min_v < ctrl.v_floor {
            return Ok(StepOutcome::Rejected(Guard::VBelowFloor { min: min_v }));
        }
        let max_u = new_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max_u > ctrl.u_cap {
            return Ok(StepOutcome::Rejected(Guard::UAboveCap { max: max_u }));
        }
        Ok(StepOutcome::Accepted(State {
            t: state.t + dt,
            u: Field {
                grid,
                values: new_u,
            },
            v: Field {
                grid,
                values: new_v,
            },
        }))
    }
}

fn check_dt(dt: f64, bound: f64) -> Result<()> {
    // tolerate round-off in callers that compute dt from the bound itself
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        Err(Error::StepTooLarge { dt, bound })
    } else {
        Ok(())
    }
}

/// One guarded RK4 step.
pub fn step(state: &State, params: &Params, ctrl: &StepControl, dt: f64) -> Result<StepOutcome> {
    step_with(state, params, ctrl, dt, &RhsOptions::default())
}

pub fn step_with(
    state: &State,
    params: &Params,
    ctrl: &StepControl,
    dt: f64,
    opts: &RhsOptions,
) -> Result<StepOutcome> {
    check_dt(dt, ctrl.stability_bound(state.grid()))?;
    Stepper::new(state.grid().len()).step(state, params, ctrl, opts, dt)
}

/// Sampling cadence and stopping rules for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub horizon: f64,
    pub sample_every: f64,
    /// Stop early once both deviations stay below this.
    pub convergence_tol: Option<f64>,
    /// Keep a full state every this many samples.
    pub snapshot_stride: Option<usize>,
}

impl Schedule {
    pub fn new(horizon: f64, sample_every: f64) -> Self {
        Schedule {
            horizon,
            sample_every,
            convergence_tol: None,
            snapshot_stride: None,
        }
    }

    pub fn with_convergence_tol(mut self, tol: f64) -> Self {
        self.convergence_tol = Some(tol);
        self
    }

    pub fn with_snapshots(mut self, stride: usize) -> Self {
        self.snapshot_stride = Some(stride.max(1));
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: self.horizon,
                reason: "must be > 0",
            });
        }
        if !(self.sample_every > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sample_every",
                value: self.sample_every,
                reason: "must be > 0",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<State>,
    pub final_state: State,
    pub status: RunStatus,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub eta: EtaEstimate,
    /// Constants used for `F` and `G`; `None` when the measured lower bound
    /// does not satisfy the `mu` threshold.
    pub lyapunov: Option<LyapunovConstants>,
    /// Weight `L` actually used for the `F` column.
    pub lyapunov_weight: f64,
}

impl Trajectory {
    /// `(t, f(record))` pairs.
    pub fn series(&self, f: impl Fn(&DiagnosticsRecord) -> f64) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, f(r))).collect()
    }

    pub fn last(&self) -> &DiagnosticsRecord {
        self.records
            .last()
            .expect("trajectory has at least one record")
    }

    /// Recomputes `F` and `G` columns for a given weight and `G0`.
    pub fn apply_lyapunov(&mut self, l: f64, g0: f64) {
        self.lyapunov_weight = l;
        for r in &mut self.records {
            r.set_lyapunov(l, g0);
        }
    }
}

/// True when the last five samples have both deviations below `tol`.
pub fn detect_convergence(records: &[DiagnosticsRecord], tol: f64) -> bool {
    records.len() >= CONVERGENCE_SAMPLES
        && records[records.len() - CONVERGENCE_SAMPLES..]
            .iter()
            .all(|r| r.linf_u_dev < tol && r.linf_v_dev < tol)
}

/// Checks `u >= 0`, `u` not identically zero and `v > 0`.
pub fn check_admissible(state: &State) -> Result<()> {
    if state.u.min() < 0.0 {
        return Err(Error::InitialData(format!(
            "min(u0) = {} < 0",
            state.u.min()
        )));
    }
    if !(state.u.max() > 0.0) {
        return Err(Error::InitialData("u0 vanishes identically".into()));
    }
    if !(state.v.min() > 0.0) {
        return Err(Error::InitialData(format!(
            "min(v0) = {} <= 0",
            state.v.min()
        )));
    }
    Ok(())
}

pub fn simulate(
    initial: &State,
    params: &Params,
    ctrl: &StepControl,
    schedule: &Schedule,
    diag: &DiagnosticsSpec,
) -> Result<Trajectory> {
    simulate_with(
        initial,
        params,
        ctrl,
        schedule,
        diag,
        &RhsOptions::default(),
    )
}

pub fn simulate_with(
    initial: &State,
    params: &Params,
    ctrl: &StepControl,
    schedule: &Schedule,
    diag: &DiagnosticsSpec,
    opts: &RhsOptions,
) -> Result<Trajectory> {
    params.validate()?;
    ctrl.validate()?;
    schedule.validate()?;
    check_admissible(initial)?;
    let grid = *initial.grid();
    if grid.dim() != params.dim {
        return Err(Error::Grid(format!(
            "grid dimension {} does not match N = {}",
            grid.dim(),
            params.dim
        )));
    }
    let bound = ctrl.stability_bound(&grid);
    let mut dt = if ctrl.fixed_step {
        check_dt(ctrl.dt_init, bound)?;
        ctrl.dt_init
    } else {
        ctrl.dt_init.min(bound)
    };

    let mut stepper = Stepper::new(grid.len());
    let mut state = initial.clone();
    let mut records = vec![diagnostics::record(&state, params, diag)?];
    let mut snapshots = Vec::new();
    if schedule.snapshot_stride.is_some() {
        snapshots.push(state.clone());
    }
    let mut sample_index = 1usize;
    let mut streak = 0usize;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let status = loop {
        let target = (sample_index as f64 * schedule.sample_every).min(schedule.horizon);
        let remaining = target - state.t;
        let lands = remaining <= dt * (1.0 + 1e-12);
        let h = if lands { remaining } else { dt };
        match stepper.step(&state, params, ctrl, opts, h)? {
            StepOutcome::Accepted(next) => {
                state = next;
                accepted += 1;
                streak += 1;
                if !ctrl.fixed_step && streak >= GROWTH_STREAK {
                    dt = (dt * GROWTH_FACTOR).min(bound);
                    streak = 0;
                }
                if !lands {
                    continue;
                }
                state.t = target;
                records.push(diagnostics::record(&state, params, diag)?);
                if let Some(stride) = schedule.snapshot_stride {
                    if sample_index.is_multiple_of(stride) {
                        snapshots.push(state.clone());
                    }
                }
                sample_index += 1;
                if schedule
                    .convergence_tol
                    .is_some_and(|tol| detect_convergence(&records, tol))
                {
                    break RunStatus::ConvergedEarly;
                }
                if target >= schedule.horizon {
                    break RunStatus::CompletedHorizon;
                }
            }
            StepOutcome::Rejected(guard) => {
                rejected += 1;
                streak = 0;
                if ctrl.fixed_step {
                    break RunStatus::from_guard(guard);
                }
                dt *= 0.5;
                if dt < ctrl.dt_min {
                    break RunStatus::from_guard(guard);
                }
            }
        }
    };

    let eta = diagnostics::estimate_eta0(&records)?;
    let mut trajectory = Trajectory {
        records,
        snapshots,
        final_state: state,
        status,
        accepted_steps: accepted,
        rejected_steps: rejected,
        eta,
        lyapunov: None,
        lyapunov_weight: f64::NAN,
    };
    let eta0 = diag.eta0_override.unwrap_or(eta.eta0);
    if params.is_admissible() && eta0 > 0.0 {
        match model::lyapunov_constants(params, eta0, diag.l_choice) {
            Ok(consts) => {
                trajectory.apply_lyapunov(consts.l, consts.g0);
                trajectory.lyapunov = Some(consts);
            }
            Err(_) => {
                // hypotheses unmet: report F and G with a fallback weight
                let k0 = 1.0 / (eta0 * eta0);
                let window = model::l_window(params, k0);
                let l = diag.l_choice.unwrap_or(if window.is_empty() {
                    1.0
                } else {
                    window.midpoint()
                });
                trajectory.apply_lyapunov(l, model::g0_at(params, k0, l));
            }
        }
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::logistic_exact;
    use approx::assert_abs_diff_eq;

    fn params() -> Params {
        Params::new(1.0, 2.0, 0.5, 1).unwrap()
    }

    fn line() -> Grid {
        Grid::new_1d(8.0, 32).unwrap()
    }

    #[test]
    fn step_preserves_steady_state() {
        let s = State::constant(&line(), 0.5, 0.5).unwrap();
        let ctrl = StepControl::default();
        let dt = ctrl.stability_bound(&line());
        match step(&s, &params(), &ctrl, dt).unwrap() {
            StepOutcome::Accepted(next) => {
                assert_eq!(next.u.values, s.u.values);
                assert_eq!(next.v.values, s.v.values);
                assert_abs_diff_eq!(next.t, dt);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_rejects_dt_above_bound_before_arithmetic() {
        let s = State::constant(&line(), 0.5, 0.5).unwrap();
        let ctrl = StepControl::default();
        let bound = ctrl.stability_bound(&line());
        assert!(matches!(
            step(&s, &params(), &ctrl, 2.0 * bound),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn homogeneous_step_matches_scalar_rk4() {
        let (a, mu, u0, dt) = (1.0, 2.0, 0.2, 0.01);
        let f = |u: f64| u * (a - mu * u);
        let k1 = f(u0);
        let k2 = f(u0 + 0.5 * dt * k1);
        let k3 = f(u0 + 0.5 * dt * k2);
        let k4 = f(u0 + dt * k3);
        let expect = u0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        let s = State::constant(&line(), u0, 0.2).unwrap();
        let StepOutcome::Accepted(next) = step(&s, &params(), &StepControl::default(), dt).unwrap()
        else {
            panic!("rejected")
        };
        for &u in &next.u.values {
            assert_abs_diff_eq!(u, expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn negative_u_candidate_is_rejected() {
        // strong outflow from a nearly empty cell
        let g = Grid::new_1d(4.0, 4).unwrap();
        let u = Field::new(g, vec![1e-9, 1.0, 1.0, 1.0]).unwrap();
        let v = Field::new(g, vec![0.01, 5.0, 5.0, 5.0]).unwrap();
        let s = State::new(0.0, u, v).unwrap();
        let p = Params::new(1.0, 1.0, 50.0, 1).unwrap();
        let ctrl = StepControl::default();
        let out = step(&s, &p, &ctrl, ctrl.stability_bound(&g)).unwrap();
        assert!(matches!(out, StepOutcome::Rejected(_)), "{out:?}");
    }

    #[test]
    fn convergence_detection() {
        let rec = |t: f64, d: f64| DiagnosticsRecord {
            linf_u_dev: d,
            linf_v_dev: d,
            ..DiagnosticsRecord::from_lyapunov_parts(t, 0.0, 0.0, 0.0)
        };
        let steady: Vec<_> = (0..5).map(|k| rec(k as f64, 0.0)).collect();
        assert!(!detect_convergence(&steady[..4], 1e-8));
        assert!(detect_convergence(&steady, 1e-8));

        let diverging: Vec<_> = (0..50)
            .map(|k| rec(k as f64, (0.1 * k as f64).exp()))
            .collect();
        assert!(!detect_convergence(&diverging, 1e-6));

        let decaying: Vec<_> = (0..400)
            .map(|k| 0.1 * k as f64)
            .map(|t| rec(t, (-t).exp()))
            .collect();
        let first = (1..=decaying.len())
            .find(|&n| detect_convergence(&decaying[..n], 1e-6))
            .unwrap();
        let t = decaying[first - 1].t;
        assert!(t > 13.8 && t < 14.5, "converged at {t}");
    }

    #[test]
    fn simulate_steady_state() {
        let s = State::constant(&line(), 0.5, 0.5).unwrap();
        let traj = simulate(
            &s,
            &params(),
            &StepControl::default(),
            &Schedule::new(1.0, 0.1).with_convergence_tol(1e-8),
            &DiagnosticsSpec::for_params(&params()),
        )
        .unwrap();
        assert_eq!(traj.status, RunStatus::ConvergedEarly);
        assert_eq!(traj.records.len(), 5);
        assert!(traj.records.iter().all(|r| r.linf_u_dev == 0.0));
    }

    #[test]
    fn simulate_homogeneous_logistic() {
        let s = State::constant(&line(), 0.2, 0.2).unwrap();
        let traj = simulate(
            &s,
            &params(),
            &StepControl::default(),
            &Schedule::new(1.0, 0.25),
            &DiagnosticsSpec::for_params(&params()),
        )
        .unwrap();
        assert_eq!(traj.status, RunStatus::CompletedHorizon);
        assert_eq!(traj.records.len(), 5);
        assert_eq!(traj.final_state.t, 1.0);
        let exact = logistic_exact(0.2, 1.0, 2.0, 1.0);
        assert_abs_diff_eq!(exact, 0.3222025, epsilon = 1e-7);
        for &u in &traj.final_state.u.values {
            assert_abs_diff_eq!(u, exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_cell_becomes_positive() {
        let g = Grid::new_1d(4.0, 32).unwrap();
        let mut u = g.sample(|x| 1.0 + 0.5 * (std::f64::consts::PI * x[0] / 4.0).cos());
        u.values[10] = 0.0;
        let s = State::new(0.0, u, g.sample(|x| 1.0 + 0.2 * x[0].cos())).unwrap();
        let p = Params::new(1.0, 1.0, 0.5, 1).unwrap();
        let traj = simulate(
            &s,
            &p,
            &StepControl::default(),
            &Schedule::new(1.0, 0.05).with_snapshots(1),
            &DiagnosticsSpec::for_params(&p),
        )
        .unwrap();
        assert!(traj.status.is_success());
        for snap in &traj.snapshots[1..] {
            assert!(snap.u.min() > 0.0, "t = {}", snap.t);
        }
    }

    #[test]
    fn rejects_inadmissible_initial_data() {
        let g = line();
        let zero = State::constant(&g, 0.0, 1.0).unwrap();
        assert!(matches!(
            simulate(
                &zero,
                &params(),
                &StepControl::default(),
                &Schedule::new(1.0, 0.1),
                &DiagnosticsSpec::for_params(&params())
            ),
            Err(Error::InitialData(_))
        ));
    }

    #[test]
    fn fixed_step_too_large_is_an_error() {
        let s = State::constant(&line(), 0.2, 0.2).unwrap();
        let ctrl = StepControl::fixed(1.0);
        assert!(matches!(
            simulate(
                &s,
                &params(),
                &ctrl,
                &Schedule::new(1.0, 0.1),
                &DiagnosticsSpec::for_params(&params())
            ),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn blow_up_cap_is_reported() {
        // u starts above the cap's reach
        let s = State::constant(&line(), 5.0, 1.0).unwrap();
        let p = Params::degenerate(1.0, 0.0, 0.5, 1).unwrap();
        let ctrl = StepControl {
            u_cap: 6.0,
            ..Default::default()
        };
        let traj = simulate(
            &s,
            &p,
            &ctrl,
            &Schedule::new(5.0, 0.1),
            &DiagnosticsSpec::for_params(&p),
        )
        .unwrap();
        assert_eq!(traj.status, RunStatus::BlowUpSuspected);
    }

    #[test]
    fn simulation_is_deterministic() {
        let g = Grid::new_2d(4.0, 4.0, 12, 12).unwrap();
        let u = g.sample(|x| 0.3 + 0.2 * (x[0] * x[1]).cos());
        let v = g.sample(|x| 0.4 + 0.1 * x[0].cos());
        let s = State::new(0.0, u, v).unwrap();
        let p = Params::new(1.0, 2.0, 0.5, 2).unwrap();
        let run = || {
            simulate(
                &s,
                &p,
                &StepControl::default(),
                &Schedule::new(0.5, 0.1),
                &DiagnosticsSpec::for_params(&p),
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.mass_u.to_bits(), y.mass_u.to_bits());
            assert_eq!(x.lyapunov_f.to_bits(), y.lyapunov_f.to_bits());
        }
    }
}
