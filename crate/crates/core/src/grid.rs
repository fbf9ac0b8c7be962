//! Uniform cell-centred grids with homogeneous Neumann boundaries and the
//! spatial operators of the chemotaxis system.
//!
//! Values are cell averages. Cell `(i, j)` of a 2D grid lives at flat index
//! `i + nx * j`; a 1D grid is stored as `nx` cells with `ny = 1`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Params;

pub const MIN_CELLS_PER_AXIS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    extents: [f64; 2],
    cells: [usize; 2],
}

impl Grid {
    pub fn new_1d(length: f64, cells: usize) -> Result<Self> {
        Self::new(&[length], &[cells])
    }

    pub fn new_2d(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(&[lx, ly], &[nx, ny])
    }

    pub fn new(extents: &[f64], cells: &[usize]) -> Result<Self> {
        let dim = extents.len();
        if !(dim == 1 || dim == 2) || cells.len() != dim {
            return Err(Error::Grid(format!(
                "need 1 or 2 axes with matching extents and cells, got {} and {}",
                extents.len(),
                cells.len()
            )));
        }
        let mut grid = Grid {
            dim,
            extents: [1.0; 2],
            cells: [1; 2],
        };
        for axis in 0..dim {
            if !(extents[axis] > 0.0 && extents[axis].is_finite()) {
                return Err(Error::Grid(format!("extent {} must be > 0", extents[axis])));
            }
            if cells[axis] < MIN_CELLS_PER_AXIS {
                return Err(Error::Grid(format!(
                    "need at least {MIN_CELLS_PER_AXIS} cells per axis, got {}",
                    cells[axis]
                )));
            }
            grid.extents[axis] = extents[axis];
            grid.cells[axis] = cells[axis];
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.extents[axis] / self.cells[axis] as f64
    }

    pub fn h_min(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.h(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).product()
    }

    /// Measure of the domain.
    pub fn measure(&self) -> f64 {
        self.extents().iter().product()
    }

    /// Centre coordinate of index `i` along `axis`.
    pub fn center(&self, axis: usize, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h(axis)
    }

    /// Cell centre of a flat index, `[x, y]` (`y = 0` in 1D).
    pub fn position(&self, index: usize) -> [f64; 2] {
        let nx = self.cells[0];
        let (i, j) = (index % nx, index / nx);
        let y = if self.dim == 2 {
            self.center(1, j)
        } else {
            0.0
        };
        [self.center(0, i), y]
    }

    /// Samples `f` at every cell centre.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Field {
        let values = (0..self.len())
            .map(|k| {
                let pos = self.position(k);
                f(&pos[..self.dim])
            })
            .collect();
        Field {
            grid: *self,
            values,
        }
    }

    pub fn constant(&self, c: f64) -> Field {
        Field {
            grid: *self,
            values: vec![c; self.len()],
        }
    }

    /// Midpoint quadrature of cellwise values.
    pub fn integrate<I>(&self, values: I) -> Result<f64>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut sum = 0.0;
        for value in values {
            if !value.is_finite() {
                return Err(Error::NonFinite("integrand"));
            }
            sum += value;
        }
        Ok(sum * self.cell_volume())
    }

    fn strides(&self) -> [usize; 2] {
        [1, self.cells[0]]
    }
}

/// Cell averages on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "field has {} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field"));
        }
        Ok(Field { grid, values })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max |f - c|`.
    pub fn max_deviation(&self, c: f64) -> f64 {
        self.values.iter().fold(0.0, |m, &x| m.max((x - c).abs()))
    }

    pub fn integral(&self) -> Result<f64> {
        self.grid.integrate(self.values.iter().copied())
    }

    /// Integral of `g(value)` over the domain.
    pub fn integrate_map(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        self.grid.integrate(self.values.iter().map(|&x| g(x)))
    }

    /// One row per cell: `index, x[, y], value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        if self.grid.dim == 2 {
            out.write_record(["index", "x", "y", "value"])?;
        } else {
            out.write_record(["index", "x", "value"])?;
        }
        for (k, value) in self.values.iter().enumerate() {
            let pos = self.grid.position(k);
            if self.grid.dim == 2 {
                out.serialize((k, pos[0], pos[1], value))?;
            } else {
                out.serialize((k, pos[0], value))?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Cell density `u` and signal `v` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub v: Field,
}

impl State {
    /// Checks `u >= 0`, `v > 0` and matching grids.
    pub fn new(t: f64, u: Field, v: Field) -> Result<Self> {
        if u.grid != v.grid {
            return Err(Error::Grid("u and v live on different grids".into()));
        }
        if u.min() < 0.0 {
            return Err(Error::InitialData(format!("min(u) = {} < 0", u.min())));
        }
        if !(v.min() > 0.0) {
            return Err(Error::Singular(format!("min(v) = {} <= 0", v.min())));
        }
        Ok(State { t, u, v })
    }

    pub fn grid(&self) -> &Grid {
        &self.u.grid
    }

    /// Spatially constant state.
    pub fn constant(grid: &Grid, u: f64, v: f64) -> Result<Self> {
        State::new(0.0, grid.constant(u), grid.constant(v))
    }
}

/// How `u/v` is evaluated on a cell interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterfaceMean {
    #[default]
    Arithmetic,
    Harmonic,
}

impl InterfaceMean {
    #[inline]
    fn of(self, left: f64, right: f64) -> f64 {
        match self {
            InterfaceMean::Arithmetic => 0.5 * (left + right),
            InterfaceMean::Harmonic => {
                let s = left + right;
                if s > 0.0 {
                    2.0 * left * right / s
                } else {
                    0.0
                }
            }
        }
    }
}

/// Which terms of the right-hand side are active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhsOptions {
    pub diffusion: bool,
    pub transport: bool,
    /// `a u - mu u^2` and `u - v`.
    pub reaction: bool,
    pub mean: InterfaceMean,
}

impl Default for RhsOptions {
    fn default() -> Self {
        RhsOptions {
            diffusion: true,
            transport: true,
            reaction: true,
            mean: InterfaceMean::Arithmetic,
        }
    }
}

impl RhsOptions {
    /// Diffusion and chemotactic transport only; conserves total mass of `u`.
    pub fn transport_only() -> Self {
        RhsOptions {
            reaction: false,
            ..Default::default()
        }
    }
}

/// Adds the Neumann Laplacian of `f` into `out`.
pub(crate) fn add_laplacian(grid: &Grid, f: &[f64], out: &mut [f64]) {
    let strides = grid.strides();
    let nx = grid.cells[0];
    for axis in 0..grid.dim {
        let inv_h2 = 1.0 / (grid.h(axis) * grid.h(axis));
        let n = grid.cells[axis];
        let stride = strides[axis];
        for k in 0..grid.len() {
            let i = if axis == 0 { k % nx } else { k / nx };
            // ghost cells mirror the boundary cell, so boundary faces carry no flux
            let mut acc = 0.0;
            if i > 0 {
                acc += f[k - stride] - f[k];
            }
            if i + 1 < n {
                acc += f[k + stride] - f[k];
            }
            out[k] += acc * inv_h2;
        }
    }
}

/// Adds `scale * div(chi (u/v) grad v)` into `out`.
pub(crate) fn add_chemotactic_divergence(
    grid: &Grid,
    u: &[f64],
    v: &[f64],
    chi: f64,
    mean: InterfaceMean,
    scale: f64,
    out: &mut [f64],
) {
    let strides = grid.strides();
    let nx = grid.cells[0];
    for axis in 0..grid.dim {
        let h = grid.h(axis);
        let coef = scale * chi / (h * h);
        let n = grid.cells[axis];
        let stride = strides[axis];
        for k in 0..grid.len() {
            let i = if axis == 0 { k % nx } else { k / nx };
            if i + 1 >= n {
                continue;
            }
            let r = k + stride;
            // flux through the face between k and r, positive towards r
            let flux = coef * mean.of(u[k], u[r]) / mean.of(v[k], v[r]) * (v[r] - v[k]);
            out[k] += flux;
            out[r] -= flux;
        }
    }
}

fn check_positive_v(v: &[f64]) -> Result<()> {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        Ok(())
    } else {
        Err(Error::Singular(format!("min(v) = {min} <= 0")))
    }
}

pub fn laplacian(f: &Field) -> Field {
    let mut out = vec![0.0; f.values.len()];
    add_laplacian(&f.grid, &f.values, &mut out);
    Field {
        grid: f.grid,
        values: out,
    }
}

/// Discrete `div(chi (u/v) grad v)` with interface flux
/// `chi * mean(u)/mean(v) * dv/h` and zero flux through the boundary.
pub fn chemotactic_divergence(u: &Field, v: &Field, chi: f64) -> Result<Field> {
    chemotactic_divergence_with(u, v, chi, InterfaceMean::Arithmetic)
}

pub fn chemotactic_divergence_with(
    u: &Field,
    v: &Field,
    chi: f64,
    mean: InterfaceMean,
) -> Result<Field> {
    if u.grid != v.grid {
        return Err(Error::Grid("u and v live on different grids".into()));
    }
    check_positive_v(&v.values)?;
    let mut out = vec![0.0; u.values.len()];
    add_chemotactic_divergence(&u.grid, &u.values, &v.values, chi, mean, 1.0, &mut out);
    Ok(Field {
        grid: u.grid,
        values: out,
    })
}

/// Writes `(du/dt, dv/dt)` into the provided buffers.
pub(crate) fn eval_rhs(
    grid: &Grid,
    params: &Params,
    opts: &RhsOptions,
    u: &[f64],
    v: &[f64],
    du: &mut [f64],
    dv: &mut [f64],
) -> Result<()> {
    du.iter_mut().for_each(|x| *x = 0.0);
    dv.iter_mut().for_each(|x| *x = 0.0);
    if opts.transport {
        check_positive_v(v)?;
        add_chemotactic_divergence(grid, u, v, params.chi, opts.mean, -1.0, du);
    }
    if opts.diffusion {
        add_laplacian(grid, u, du);
        add_laplacian(grid, v, dv);
    }
    if opts.reaction {
        for k in 0..u.len() {
            du[k] += u[k] * (params.a - params.mu * u[k]);
            dv[k] += u[k] - v[k];
        }
    }
    Ok(())
}

/// Time derivatives of `u` and `v`.
pub fn rhs(state: &State, params: &Params) -> Result<(Field, Field)> {
    rhs_with(state, params, &RhsOptions::default())
}

pub fn rhs_with(state: &State, params: &Params, opts: &RhsOptions) -> Result<(Field, Field)> {
    let grid = *state.grid();
    let mut du = vec![0.0; grid.len()];
    let mut dv = vec![0.0; grid.len()];
    eval_rhs(
        &grid,
        params,
        opts,
        &state.u.values,
        &state.v.values,
        &mut du,
        &mut dv,
    )?;
    Ok((Field { grid, values: du }, Field { grid, values: dv }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn line(n: usize, length: f64) -> Grid {
        Grid::new_1d(length, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new_1d(1.0, 3).is_err());
        assert!(Grid::new_1d(0.0, 8).is_err());
        assert!(Grid::new(&[1.0, 1.0, 1.0], &[4, 4, 4]).is_err());
        let g = Grid::new_2d(2.0, 1.0, 8, 4).unwrap();
        assert_eq!(g.len(), 32);
        assert_abs_diff_eq!(g.cell_volume(), 0.25 * 0.25);
        assert_abs_diff_eq!(g.measure(), 2.0);
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        for g in [line(7, 2.0), Grid::new_2d(1.0, 3.0, 5, 6).unwrap()] {
            let lap = laplacian(&g.constant(3.7));
            assert!(lap.values.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn laplacian_exact_on_quadratic_interior() {
        let g = line(10, 1.0);
        let f = g.sample(|x| x[0] * x[0]);
        let lap = laplacian(&f);
        for &x in &lap.values[1..9] {
            assert_abs_diff_eq!(x, 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn chemotactic_divergence_hand_example() {
        // faces: (1,2): mean u 1, mean v 1.5, dv 1 -> 2/3; (2,3): 0; (3,4): -2/3
        let g = line(4, 4.0);
        let u = Field::new(g, vec![1.0; 4]).unwrap();
        let v = Field::new(g, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let div = chemotactic_divergence(&u, &v, 1.0).unwrap();
        let expect = [2.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 2.0 / 3.0];
        for (got, want) in div.values.iter().zip(expect) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn chemotactic_divergence_requires_positive_v() {
        let g = line(4, 1.0);
        let v = Field::new(g, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            chemotactic_divergence(&g.constant(1.0), &v, 1.0),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn constant_v_gives_no_transport() {
        let g = Grid::new_2d(1.0, 1.0, 6, 5).unwrap();
        let u = g.sample(|x| 1.0 + x[0] * x[1]);
        let div = chemotactic_divergence(&u, &g.constant(2.0), 0.7).unwrap();
        assert!(div.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rhs_steady_state_and_decay() {
        let params = Params::new(1.0, 2.0, 0.5, 1).unwrap();
        let g = line(8, 1.0);
        let s = State::constant(&g, 0.5, 0.5).unwrap();
        let (du, dv) = rhs(&s, &params).unwrap();
        assert!(du.values.iter().chain(&dv.values).all(|&x| x == 0.0));

        let s = State::constant(&g, 0.0, 0.3).unwrap();
        let (du, dv) = rhs(&s, &params).unwrap();
        assert!(du.values.iter().all(|&x| x == 0.0));
        assert!(dv.values.iter().all(|&x| x == -0.3));

        let s = State::constant(&g, 0.2, 0.7).unwrap();
        let (du, dv) = rhs(&s, &params).unwrap();
        for k in 0..8 {
            assert_abs_diff_eq!(du.values[k], 0.2 * (1.0 - 2.0 * 0.2), epsilon = 1e-15);
            assert_abs_diff_eq!(dv.values[k], 0.2 - 0.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn integrate_examples() {
        let g = Grid::new_2d(2.0, 1.5, 4, 6).unwrap();
        assert_abs_diff_eq!(
            g.constant(1.5).integral().unwrap(),
            1.5 * 3.0,
            epsilon = 1e-14
        );
        assert_eq!(line(4, 1.0).constant(0.0).integral().unwrap(), 0.0);
        let g = line(100, 1.0);
        assert_abs_diff_eq!(g.sample(|x| x[0]).integral().unwrap(), 0.5, epsilon = 1e-14);
        assert!(matches!(
            g.integrate([1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn laplacian_second_order_on_cosine() {
        let errs: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&n| {
                let g = line(n, 1.0);
                let lap = laplacian(&g.sample(|x| (PI * x[0]).cos()));
                let exact = g.sample(|x| -PI * PI * (PI * x[0]).cos());
                lap.values
                    .iter()
                    .zip(&exact.values)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .collect();
        for pair in errs.windows(2) {
            let slope = (pair[0] / pair[1]).log2();
            assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
        }
    }

    #[test]
    fn field_csv_snapshot() {
        let g = Grid::new_2d(1.0, 1.0, 4, 4).unwrap();
        let mut buf = Vec::new();
        g.constant(0.5).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("index,x,y,value"));
        assert_eq!(lines.next(), Some("0,0.125,0.125,0.5"));
        assert_eq!(text.lines().count(), 17);
    }

    fn random_state(n: usize, dim2: bool, vals: &[f64]) -> State {
        let g = if dim2 {
            Grid::new_2d(1.3, 0.9, n, n).unwrap()
        } else {
            line(n, 1.7)
        };
        let len = g.len();
        let u: Vec<f64> = (0..len).map(|k| vals[k % vals.len()]).collect();
        let v: Vec<f64> = (0..len)
            .map(|k| 0.1 + vals[(3 * k + 1) % vals.len()])
            .collect();
        State::new(0.0, Field::new(g, u).unwrap(), Field::new(g, v).unwrap()).unwrap()
    }

    proptest! {
        #[test]
        fn operators_conserve_mass(
            vals in prop::collection::vec(0.0f64..3.0, 16..40),
            n in 4usize..12,
            dim2 in any::<bool>(),
            chi in 0.01f64..3.0,
        ) {
            let s = random_state(n, dim2, &vals);
            let lap = laplacian(&s.u).integral().unwrap();
            let div = chemotactic_divergence(&s.u, &s.v, chi).unwrap();
            let scale = s.u.integral().unwrap().max(1.0) * chi;
            prop_assert!(lap.abs() < 1e-12 * s.u.max().max(1.0) * 1e3);
            prop_assert!(div.integral().unwrap().abs() < 1e-10 * scale);
            let params = Params::new(1.0, 1.0, chi, s.grid().dim()).unwrap();
            let (du, _) = rhs_with(&s, &params, &RhsOptions::transport_only()).unwrap();
            prop_assert!(du.integral().unwrap().abs() < 1e-9 * scale);
        }

        #[test]
        fn reflection_symmetry(vals in prop::collection::vec(0.05f64..3.0, 8..20)) {
            // mirror-symmetric data on a line keeps mirror-symmetric derivatives
            let n = 2 * vals.len();
            let g = line(n, 2.0);
            let mirror = |x: &[f64]| -> Vec<f64> {
                x.iter().chain(x.iter().rev()).copied().collect()
            };
            let u = Field::new(g, mirror(&vals)).unwrap();
            let v = Field::new(g, mirror(&vals.iter().map(|x| 0.5 + x.sin().abs()).collect::<Vec<_>>())).unwrap();
            let s = State::new(0.0, u, v).unwrap();
            let params = Params::new(1.0, 1.5, 0.8, 1).unwrap();
            let (du, dv) = rhs(&s, &params).unwrap();
            for k in 0..n {
                prop_assert!((du.values[k] - du.values[n - 1 - k]).abs() < 1e-9);
                prop_assert!((dv.values[k] - dv.values[n - 1 - k]).abs() < 1e-9);
            }
        }
    }
}
