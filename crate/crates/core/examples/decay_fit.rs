//! Fitted exponential rates against the guaranteed rate `G0/(N+2)`.
//!
//!     cargo run --release --example decay_fit

use singular_ks::diagnostics::{fit_decay_rate, WindowRule};
use singular_ks::runner::{self, ExperimentConfig};

fn main() -> singular_ks::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/lyapunov_1d.toml");
    let config = ExperimentConfig::load(path.as_ref())?;
    let params = config.params()?;
    let (traj, summary) = runner::simulate_config(&config)?;

    let rule = WindowRule::from_records(&traj.records, &params).expect("deviation decays");
    println!("fit window starts at t = {:.1}", rule.start);
    for (name, series) in [
        ("u", traj.series(|r| r.linf_u_dev)),
        ("v", traj.series(|r| r.linf_v_dev)),
    ] {
        println!("gamma_{name} = {:.4}", fit_decay_rate(&series, &rule)?);
    }
    match summary.lyapunov {
        Some(c) => println!("guaranteed rate G0/(N+2) = {:.4}", c.rate_bound),
        None => println!("mu below threshold: no guaranteed rate"),
    }
    Ok(())
}
