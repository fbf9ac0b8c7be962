//! Spatially constant data against the closed-form logistic and the
//! quadrature of the `v` equation.
//!
//!     cargo run --release --example homogeneous_oracle

use singular_ks::diagnostics::DiagnosticsSpec;
use singular_ks::grid::{Grid, State};
use singular_ks::integrator::{simulate, Schedule, StepControl};
use singular_ks::model::Params;
use singular_ks::oracle::HomogeneousSolution;

fn main() -> singular_ks::Result<()> {
    let params = Params::new(1.0, 2.0, 0.5, 1)?;
    let grid = Grid::new_1d(16.0, 256)?;
    let traj = simulate(
        &State::constant(&grid, 0.2, 0.2)?,
        &params,
        &StepControl::fixed(1e-4),
        &Schedule::new(1.0, 0.1).with_snapshots(1),
        &DiagnosticsSpec::for_params(&params),
    )?;
    let exact = HomogeneousSolution::new(0.2, 0.2, 1.0, 2.0);
    println!(
        "{:>4} {:>12} {:>10} {:>12} {:>10}",
        "t", "u", "err_u", "v", "err_v"
    );
    for s in &traj.snapshots {
        let (u, v) = (exact.u(s.t), exact.v(s.t)?);
        println!(
            "{:>4.1} {u:>12.9} {:>10.2e} {v:>12.9} {:>10.2e}",
            s.t,
            (s.u.values[0] - u).abs(),
            (s.v.values[0] - v).abs()
        );
    }
    Ok(())
}
