//! Random data in one dimension relaxing to `(a/mu, a/mu)`.
//!
//!     cargo run --release --example simulate_1d [seed]

use singular_ks::diagnostics::DiagnosticsSpec;
use singular_ks::grid::Grid;
use singular_ks::integrator::{simulate, Schedule, StepControl};
use singular_ks::model::Params;
use singular_ks::runner::{generate_initial_data, InitialSpec};

fn main() -> singular_ks::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let params = Params::new(1.0, 1.0, 0.5, 1)?;
    let grid = Grid::new_1d(16.0, 256)?;
    let initial = generate_initial_data(&InitialSpec::perturbed(seed, 1.0, 1.0, 0.8), &grid)?;
    let traj = simulate(
        &initial,
        &params,
        &StepControl::default(),
        &Schedule::new(20.0, 0.5).with_convergence_tol(1e-6),
        &DiagnosticsSpec::for_params(&params),
    )?;
    println!(
        "{:>5} {:>9} {:>8} {:>8} {:>10} {:>10}",
        "t", "mass_u", "min_v", "max_u", "|u-a/mu|", "|v-a/mu|"
    );
    for r in traj.records.iter().step_by(2) {
        println!(
            "{:>5.1} {:>9.5} {:>8.5} {:>8.5} {:>10.3e} {:>10.3e}",
            r.t, r.mass_u, r.min_v, r.max_u, r.linf_u_dev, r.linf_v_dev
        );
    }
    println!(
        "{:?} after {} steps ({} rejected), eta0 = {:.5} at t = {}",
        traj.status, traj.accepted_steps, traj.rejected_steps, traj.eta.eta0, traj.eta.t_of_min
    );
    Ok(())
}
