//! Lyapunov constants as the lower bound of `v` shrinks.
//!
//!     cargo run --example lyapunov_constants

use singular_ks::model::{self, Params};

fn main() -> singular_ks::Result<()> {
    let params = Params::new(1.0, 2.0, 0.5, 1)?;
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>10}",
        "eta0", "mu_thr", "L", "G0", "rate"
    );
    for eta0 in [1.0, 0.5, 0.3, 0.2, 0.1] {
        match model::lyapunov_constants(&params, eta0, None) {
            Ok(c) => println!(
                "{eta0:>6} {:>10.5} {:>10.5} {:>10.6} {:>10.6}",
                c.mu_threshold, c.l, c.g0, c.rate_bound
            ),
            Err(e) => println!("{eta0:>6} {e}"),
        }
    }
    Ok(())
}
