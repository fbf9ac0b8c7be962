//! Runs the acceptance suite.
//!
//!     cargo run --release --example verify [fast|full]

use singular_ks::verify::{run_suite, Suite};

fn main() {
    let suite: Suite = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("fast or full"))
        .unwrap_or_default();
    let outcomes = run_suite(suite);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} criteria, {failed} failed", outcomes.len());
    std::process::exit(i32::from(failed > 0));
}
