//! Functionals monitored along a trajectory and the checks built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, State};
use crate::model::{self, LyapunovConstants, Params};

/// Relative slack on the dissipation term in [`check_lyapunov_decay`].
pub const LYAPUNOV_SLACK: f64 = 0.2;
/// Absolute tolerance on each per-interval decay inequality.
pub const LYAPUNOV_ABS_TOL: f64 = 1e-8;
/// Decay fits start once `||U - 1||_inf` drops below this.
pub const DECAY_WINDOW_DEVIATION: f64 = 0.25;
/// Decay fits stop before the first sample below this (round-off floor).
pub const DECAY_NOISE_FLOOR: f64 = 1e-11;
pub const MIN_FIT_SAMPLES: usize = 8;
/// Extra room above `q_{1,+}(p)` for the negative-exponent integral.
pub const NEG_Q_OFFSET: f64 = 0.05;

/// Column order of the trajectory CSV.
pub const CSV_COLUMNS: [&str; 12] = [
    "t",
    "mass_u",
    "l2_v",
    "grad_l2_v",
    "min_v",
    "max_u",
    "linf_u_dev",
    "linf_v_dev",
    "w_neg",
    "w_pos",
    "F",
    "G",
];

/// One sampled row of every monitored functional.
///
/// `w_neg = int u^-p v^-q`, `w_pos = int u^kappa v^-q0`. `F` and `G` are the
/// Lyapunov functional and its dissipation; they depend on constants only
/// known after the run and are filled in by [`DiagnosticsRecord::set_lyapunov`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_u: f64,
    pub l2_v: f64,
    pub grad_l2_v: f64,
    pub min_v: f64,
    pub max_u: f64,
    pub linf_u_dev: f64,
    pub linf_v_dev: f64,
    pub w_neg: f64,
    pub w_pos: f64,
    #[serde(rename = "F")]
    pub lyapunov_f: f64,
    #[serde(rename = "G")]
    pub lyapunov_g: f64,
    /// `int (U - 1 - ln U)`
    #[serde(skip)]
    pub entropy: f64,
    /// `int (U - 1)^2`
    #[serde(skip)]
    pub u_dev_sq: f64,
    /// `int V^2`
    #[serde(skip)]
    pub v_dev_sq: f64,
}

impl DiagnosticsRecord {
    /// Record carrying only the Lyapunov ingredients, for synthetic series.
    pub fn from_lyapunov_parts(t: f64, entropy: f64, u_dev_sq: f64, v_dev_sq: f64) -> Self {
        DiagnosticsRecord {
            t,
            mass_u: f64::NAN,
            l2_v: f64::NAN,
            grad_l2_v: f64::NAN,
            min_v: f64::NAN,
            max_u: f64::NAN,
            linf_u_dev: f64::NAN,
            linf_v_dev: f64::NAN,
            w_neg: f64::NAN,
            w_pos: f64::NAN,
            lyapunov_f: f64::NAN,
            lyapunov_g: f64::NAN,
            entropy,
            u_dev_sq,
            v_dev_sq,
        }
    }

    pub fn lyapunov_f_with(&self, l: f64) -> f64 {
        self.entropy + 0.5 * l * self.v_dev_sq
    }

    pub fn lyapunov_g_with(&self, l: f64, g0: f64) -> f64 {
        g0 * (self.u_dev_sq + 0.5 * l * self.v_dev_sq)
    }

    pub fn set_lyapunov(&mut self, l: f64, g0: f64) {
        self.lyapunov_f = self.lyapunov_f_with(l);
        self.lyapunov_g = self.lyapunov_g_with(l, g0);
    }

    /// `int u + int v^2 + int |grad v|^2`.
    pub fn energy(&self) -> f64 {
        self.mass_u + self.l2_v + self.grad_l2_v
    }
}

/// Exponents of the two weighted integrals and Lyapunov settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    /// `(p, q)` in `int u^-p v^-q`; `None` leaves `w_neg` as NaN.
    pub neg_exponents: Option<(f64, f64)>,
    /// `(kappa, q0)` in `int u^kappa v^-q0`; `None` leaves `w_pos` as NaN.
    pub pos_exponents: Option<(f64, f64)>,
    /// Use this lower bound instead of the measured one.
    pub eta0_override: Option<f64>,
    pub l_choice: Option<f64>,
}

impl DiagnosticsSpec {
    /// Canonical exponents for `params`: `p` at the centre of
    /// `(0,1) ∩ (p_{g,-}, p_{g,+})` (or 1/2), `q = q_{1,+}(p) + 0.05`, and
    /// `(kappa, q0)` from [`model::select_kappa_q0`] when feasible.
    pub fn for_params(params: &Params) -> Self {
        let p = model::p_g_range(params.a, params.chi)
            .ok()
            .map(|w| w.unit_overlap)
            .filter(|w| !w.is_empty())
            .map(|w| w.midpoint())
            .unwrap_or(0.5);
        let neg = model::q1_plus(p, params.chi)
            .ok()
            .map(|q| (p, q + NEG_Q_OFFSET));
        let pos = model::select_kappa_q0(params).ok().map(|k| (k.kappa, k.q0));
        DiagnosticsSpec {
            neg_exponents: neg,
            pos_exponents: pos,
            eta0_override: None,
            l_choice: None,
        }
    }
}

/// `sum over interior faces of (dv/h)^2 * cell volume`; boundary faces carry
/// nothing under Neumann conditions.
pub fn grad_sq_integral(v: &Field) -> f64 {
    let grid = &v.grid;
    let cells = grid.cells();
    let nx = cells[0];
    let vol = grid.cell_volume();
    let mut sum = 0.0;
    for axis in 0..grid.dim() {
        let h = grid.h(axis);
        let stride = if axis == 0 { 1 } else { nx };
        for k in 0..grid.len() {
            let i = if axis == 0 { k % nx } else { k / nx };
            if i + 1 < cells[axis] {
                let d = (v.values[k + stride] - v.values[k]) / h;
                sum += d * d;
            }
        }
    }
    sum * vol
}

/// `int u^p v^q` by midpoint quadrature.
pub fn weighted_integral(u: &Field, v: &Field, p: f64, q: f64) -> Result<f64> {
    if p < 0.0 && !(u.min() > 0.0) {
        return Err(Error::Singular(format!("u^{p} with min(u) = {}", u.min())));
    }
    if q < 0.0 && !(v.min() > 0.0) {
        return Err(Error::Singular(format!("v^{q} with min(v) = {}", v.min())));
    }
    u.grid.integrate(
        u.values
            .iter()
            .zip(&v.values)
            .map(|(&x, &y)| x.powf(p) * y.powf(q)),
    )
}

/// `U - 1 - ln U` written as `x - ln(1 + x)` with `x = U - 1`.
fn relative_entropy_density(x: f64) -> f64 {
    x - x.ln_1p()
}

struct LyapunovParts {
    entropy: f64,
    u_dev_sq: f64,
    v_dev_sq: f64,
}

fn lyapunov_parts(state: &State, params: &Params) -> Result<LyapunovParts> {
    if !(state.u.min() > 0.0) {
        return Err(Error::Singular(format!(
            "ln U with min(u) = {}",
            state.u.min()
        )));
    }
    let scale = params.mu / params.a;
    let c = params.carrying_capacity();
    let grid = state.grid();
    let entropy = grid.integrate(
        state
            .u
            .values
            .iter()
            .map(|&u| relative_entropy_density(scale * u - 1.0)),
    )?;
    let u_dev_sq = grid.integrate(state.u.values.iter().map(|&u| {
        let x = scale * u - 1.0;
        x * x
    }))?;
    let v_dev_sq = grid.integrate(state.v.values.iter().map(|&v| (v - c) * (v - c)))?;
    Ok(LyapunovParts {
        entropy,
        u_dev_sq,
        v_dev_sq,
    })
}

/// `F = int (U - 1 - ln U) + (L/2) int V^2` with `U = mu u / a`, `V = v - a/mu`.
pub fn lyapunov_f(state: &State, params: &Params, l: f64) -> Result<f64> {
    let parts = lyapunov_parts(state, params)?;
    Ok(parts.entropy + 0.5 * l * parts.v_dev_sq)
}

/// `G = G0 (int (U - 1)^2 + (L/2) int V^2)`.
pub fn lyapunov_g(state: &State, params: &Params, consts: &LyapunovConstants) -> Result<f64> {
    let parts = lyapunov_parts(state, params)?;
    Ok(consts.g0 * (parts.u_dev_sq + 0.5 * consts.l * parts.v_dev_sq))
}

/// Samples every functional at `state`. Singular weighted integrals are
/// recorded as `+inf`; `F` and `G` are left as NaN until constants are known.
pub fn record(state: &State, params: &Params, spec: &DiagnosticsSpec) -> Result<DiagnosticsRecord> {
    let (u, v) = (&state.u, &state.v);
    let c = params.carrying_capacity();
    let weighted = |exps: Option<(f64, f64)>, sign: f64| -> Result<f64> {
        match exps {
            None => Ok(f64::NAN),
            Some((p, q)) => Ok(weighted_integral(u, v, sign * p, -q).unwrap_or(f64::INFINITY)),
        }
    };
    let (entropy, u_dev_sq, v_dev_sq) = match lyapunov_parts(state, params) {
        Ok(p) => (p.entropy, p.u_dev_sq, p.v_dev_sq),
        Err(_) => (f64::INFINITY, f64::NAN, f64::NAN),
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        mass_u: u.integral()?,
        l2_v: v.integrate_map(|x| x * x)?,
        grad_l2_v: grad_sq_integral(v),
        min_v: v.min(),
        max_u: u.max(),
        linf_u_dev: u.max_deviation(c),
        linf_v_dev: v.max_deviation(c),
        w_neg: weighted(spec.neg_exponents, -1.0)?,
        w_pos: weighted(spec.pos_exponents, 1.0)?,
        lyapunov_f: f64::NAN,
        lyapunov_g: f64::NAN,
        entropy,
        u_dev_sq,
        v_dev_sq,
    })
}

/// Outcome of the integrated decay inequality
/// `F(t_{k+1}) - F(t_k) <= -(1 - slack) G(t_k) dt + abs_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovDecayReport {
    pub intervals: usize,
    pub violations: usize,
    /// Intervals with a non-finite `F` or `G`.
    pub skipped: usize,
    /// Smallest `rhs - lhs`; negative iff some interval violates.
    pub worst_margin: f64,
    /// Largest single-interval increase of `F`.
    pub max_increase: f64,
}

impl LyapunovDecayReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.skipped == 0
    }

    /// `F` never rises by more than the absolute tolerance.
    pub fn nonincreasing(&self) -> bool {
        self.max_increase <= LYAPUNOV_ABS_TOL
    }
}

pub fn check_lyapunov_decay(
    records: &[DiagnosticsRecord],
    consts: &LyapunovConstants,
) -> LyapunovDecayReport {
    check_lyapunov_decay_with(records, consts, LYAPUNOV_SLACK, LYAPUNOV_ABS_TOL)
}

pub fn check_lyapunov_decay_with(
    records: &[DiagnosticsRecord],
    consts: &LyapunovConstants,
    slack: f64,
    abs_tol: f64,
) -> LyapunovDecayReport {
    let mut report = LyapunovDecayReport {
        intervals: 0,
        violations: 0,
        skipped: 0,
        worst_margin: f64::INFINITY,
        max_increase: f64::NEG_INFINITY,
    };
    for pair in records.windows(2) {
        report.intervals += 1;
        let f0 = pair[0].lyapunov_f_with(consts.l);
        let f1 = pair[1].lyapunov_f_with(consts.l);
        let g0 = pair[0].lyapunov_g_with(consts.l, consts.g0);
        if !(f0.is_finite() && f1.is_finite() && g0.is_finite()) {
            report.skipped += 1;
            continue;
        }
        let dt = pair[1].t - pair[0].t;
        let margin = -(1.0 - slack) * g0 * dt + abs_tol - (f1 - f0);
        if margin < 0.0 {
            report.violations += 1;
        }
        report.worst_margin = report.worst_margin.min(margin);
        report.max_increase = report.max_increase.max(f1 - f0);
    }
    report
}

/// Which samples enter a decay-rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRule {
    /// First time included.
    pub start: f64,
    /// Stop before the first value below this.
    pub floor: Option<f64>,
}

impl WindowRule {
    pub fn all() -> Self {
        WindowRule {
            start: f64::NEG_INFINITY,
            floor: None,
        }
    }

    /// Start at the first sample with `||U - 1||_inf < 1/4` and stop at the
    /// round-off floor. `None` if the deviation never gets that small.
    pub fn from_records(records: &[DiagnosticsRecord], params: &Params) -> Option<Self> {
        let scale = params.mu / params.a;
        records
            .iter()
            .find(|r| scale * r.linf_u_dev < DECAY_WINDOW_DEVIATION)
            .map(|r| WindowRule {
                start: r.t,
                floor: Some(DECAY_NOISE_FLOOR),
            })
    }
}

/// Least-squares slope of `ln(value)` against `t`; returns `gamma = -slope`.
pub fn fit_decay_rate(series: &[(f64, f64)], rule: &WindowRule) -> Result<f64> {
    let mut window = Vec::new();
    for &(t, value) in series.iter().filter(|(t, _)| *t >= rule.start) {
        if !(value > 0.0) {
            return Err(Error::Domain {
                what: "decay series value",
                value,
                domain: "(0, inf)".into(),
            });
        }
        if rule.floor.is_some_and(|floor| value < floor) {
            break;
        }
        window.push((t, value.ln()));
    }
    if window.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            required: MIN_FIT_SAMPLES,
            found: window.len(),
        });
    }
    let n = window.len() as f64;
    let t_mean = window.iter().map(|w| w.0).sum::<f64>() / n;
    let y_mean = window.iter().map(|w| w.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in &window {
        sxy += (t - t_mean) * (y - y_mean);
        sxx += (t - t_mean) * (t - t_mean);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples {
            required: 2,
            found: 1,
        });
    }
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaEstimate {
    pub eta0: f64,
    pub t_of_min: f64,
}

/// Smallest sampled `min_v` and when it occurred.
pub fn estimate_eta0(records: &[DiagnosticsRecord]) -> Result<EtaEstimate> {
    records
        .iter()
        .min_by(|a, b| a.min_v.total_cmp(&b.min_v))
        .map(|r| EtaEstimate {
            eta0: r.min_v,
            t_of_min: r.t,
        })
        .ok_or(Error::InsufficientSamples {
            required: 1,
            found: 0,
        })
}
