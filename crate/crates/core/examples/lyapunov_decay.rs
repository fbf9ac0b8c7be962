//! Energy decay along a run with `mu` above the Lyapunov threshold.
//!
//!     cargo run --release --example lyapunov_decay

use singular_ks::diagnostics::{check_lyapunov_decay, DiagnosticsSpec};
use singular_ks::grid::Grid;
use singular_ks::integrator::{simulate, Schedule, StepControl};
use singular_ks::model::Params;
use singular_ks::runner::{generate_initial_data, InitialSpec};

fn main() -> singular_ks::Result<()> {
    let params = Params::new(1.0, 4.0, 0.5, 1)?;
    let grid = Grid::new_1d(16.0, 256)?;
    let initial = generate_initial_data(&InitialSpec::perturbed(1, 0.25, 0.25, 0.15), &grid)?;
    let traj = simulate(
        &initial,
        &params,
        &StepControl::default(),
        &Schedule::new(15.0, 0.1),
        &DiagnosticsSpec::for_params(&params),
    )?;
    let Some(consts) = traj.lyapunov else {
        println!("mu below threshold for eta0 = {:.4}", traj.eta.eta0);
        return Ok(());
    };
    println!(
        "eta0 {:.4}  mu_threshold {:.4}  L {:.4}  G0 {:.4}",
        consts.eta0, consts.mu_threshold, consts.l, consts.g0
    );
    println!("{:>5} {:>12} {:>12}", "t", "F", "G");
    for r in traj.records.iter().step_by(10) {
        println!(
            "{:>5.1} {:>12.4e} {:>12.4e}",
            r.t, r.lyapunov_f, r.lyapunov_g
        );
    }
    let report = check_lyapunov_decay(&traj.records, &consts);
    println!(
        "{} intervals, {} violations, largest increase of F {:.2e}",
        report.intervals, report.violations, report.max_increase
    );
    Ok(())
}
