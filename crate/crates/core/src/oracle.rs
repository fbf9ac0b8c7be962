//! Reference solutions that share no code with the solver.
//!
//! The logistic closed form and a quadrature of the linear `v` equation cover
//! spatially constant data; the tiny-grid right-hand side re-derives every
//! interface flux by direct enumeration.

use crate::error::{Error, Result};
use crate::model::Params;

/// Spatially homogeneous solution of the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousSolution {
    pub u0: f64,
    pub v0: f64,
    pub a: f64,
    pub mu: f64,
}

impl HomogeneousSolution {
    pub fn new(u0: f64, v0: f64, a: f64, mu: f64) -> Self {
        HomogeneousSolution { u0, v0, a, mu }
    }

    pub fn u(&self, t: f64) -> f64 {
        logistic_exact(self.u0, self.a, self.mu, t)
    }

    pub fn v(&self, t: f64) -> Result<f64> {
        homogeneous_v_exact(self.u0, self.v0, self.a, self.mu, t)
    }
}

/// `a u0 e^{at} / (a + mu u0 (e^{at} - 1))`, evaluated in a form that does
/// not overflow for large `t`.
pub fn logistic_exact(u0: f64, a: f64, mu: f64, t: f64) -> f64 {
    if u0 == 0.0 {
        return 0.0;
    }
    let decay = (-a * t).exp();
    a * u0 / (a * decay - mu * u0 * (-a * t).exp_m1())
}

pub const QUADRATURE_TOL: f64 = 1e-12;
const MAX_DEPTH: u32 = 50;

/// `v(t) = v0 e^{-t} + int_0^t e^{-(t-s)} u(s) ds` with `u` logistic,
/// by adaptive Simpson quadrature.
pub fn homogeneous_v_exact(u0: f64, v0: f64, a: f64, mu: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(v0);
    }
    let integrand = |s: f64| (-(t - s)).exp() * logistic_exact(u0, a, mu, s);
    let integral = adaptive_simpson(&integrand, 0.0, t, QUADRATURE_TOL)?;
    Ok(v0 * (-t).exp() + integral)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let mid = 0.5 * (lo + hi);
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let mid = 0.5 * (lo + hi);
    let (lm, rm) = (0.5 * (lo + mid), 0.5 * (mid + hi));
    let (flm, frm) = (f(lm), f(rm));
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Oracle(format!(
            "non-finite integrand on [{lo}, {hi}]"
        )));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Oracle(format!(
            "depth exhausted on [{lo}, {hi}] with error {delta}"
        )));
    }
    Ok(
        simpson_step(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1)?
            + simpson_step(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1)?,
    )
}

pub const TINY_GRID_MAX_CELLS: usize = 8;

/// Right-hand side on a 1D grid of at most eight cells over `[0, length]`,
/// built from an explicit list of face fluxes.
pub fn tiny_grid_rhs_oracle(
    u: &[f64],
    v: &[f64],
    length: f64,
    params: &Params,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = u.len();
    if n != v.len() || !(2..=TINY_GRID_MAX_CELLS).contains(&n) {
        return Err(Error::Grid(format!(
            "tiny oracle takes 2..={TINY_GRID_MAX_CELLS} cells, got {n}"
        )));
    }
    if v.iter().any(|&x| x <= 0.0) {
        return Err(Error::Singular("tiny oracle needs v > 0".into()));
    }
    let h = length / n as f64;

    // faces 0..=n; faces 0 and n are the walls
    let mut u_face_flux = vec![0.0; n + 1];
    let mut v_face_flux = vec![0.0; n + 1];
    for face in 1..n {
        let (l, r) = (face - 1, face);
        let grad_u = (u[r] - u[l]) / h;
        let grad_v = (v[r] - v[l]) / h;
        let u_face = (u[l] + u[r]) / 2.0;
        let v_face = (v[l] + v[r]) / 2.0;
        u_face_flux[face] = grad_u - params.chi * (u_face / v_face) * grad_v;
        v_face_flux[face] = grad_v;
    }

    let mut du = Vec::with_capacity(n);
    let mut dv = Vec::with_capacity(n);
    for cell in 0..n {
        let net_u = (u_face_flux[cell + 1] - u_face_flux[cell]) / h;
        let net_v = (v_face_flux[cell + 1] - v_face_flux[cell]) / h;
        du.push(net_u + params.a * u[cell] - params.mu * u[cell] * u[cell]);
        dv.push(net_v - v[cell] + u[cell]);
    }
    Ok((du, dv))
}
