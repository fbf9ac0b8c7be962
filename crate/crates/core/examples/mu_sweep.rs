//! Damping sweep from `configs/mu_sweep.toml`, run in parallel.
//!
//!     cargo run --release --example mu_sweep [out_dir]

use singular_ks::runner::{self, ExperimentConfig};

fn main() -> singular_ks::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/mu_sweep.toml");
    let mut config = ExperimentConfig::load(path.as_ref())?;
    if let Some(dir) = std::env::args().nth(1) {
        config.output.dir = dir.into();
    }
    let out = runner::run_sweep(&config)?;
    println!(
        "{:>4} {:>8} {:>16} {:>8} {:>8} {:>8} {:>8}",
        "mu", "eta0", "status", "gamma_u", "gamma_v", "bound", "mu*w"
    );
    for r in &out.rows {
        println!(
            "{:>4} {:>8.5} {:>16} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.mu,
            r.eta0,
            r.status.map_or("failed".into(), |s| format!("{s:?}")),
            r.gamma_u,
            r.gamma_v,
            r.rate_bound,
            r.sup_w_pos_mu
        );
    }
    let w: Vec<f64> = out.rows.iter().map(|r| r.sup_w_pos_mu).collect();
    let band =
        w.iter().copied().fold(f64::MIN, f64::max) / w.iter().copied().fold(f64::MAX, f64::min);
    println!("max/min of mu * sup w_pos: {band:.3}");
    println!("wrote {}", out.table_csv.display());
    Ok(())
}
