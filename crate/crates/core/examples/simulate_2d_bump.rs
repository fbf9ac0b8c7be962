//! A Gaussian cell population on a square, written to CSV through the
//! runner.
//!
//!     cargo run --release --example simulate_2d_bump [out_dir]

use singular_ks::runner::{self, ExperimentConfig};

fn main() -> singular_ks::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/bump_2d.toml");
    let mut config = ExperimentConfig::load(path.as_ref())?;
    if let Some(dir) = std::env::args().nth(1) {
        config.output.dir = dir.into();
    }
    let out = runner::run_simulate(&config)?;
    let s = &out.summary;
    println!("status {:?}, eta0 {:.5}", s.status, s.eta0);
    println!(
        "sup mass_u {:.4}, sup l2_v {:.4}, sup grad_l2_v {:.4}, sup max_u {:.4}",
        s.suprema.mass_u, s.suprema.l2_v, s.suprema.grad_l2_v, s.suprema.max_u
    );
    println!(
        "final u in [{:.6}, {:.6}]",
        s.final_state.u_min, s.final_state.u_max
    );
    for p in [&out.trajectory_csv, &out.summary_json, &out.final_u_csv] {
        println!("wrote {}", p.display());
    }
    println!("wrote {} snapshot files", out.snapshots.len());
    Ok(())
}
