use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use singular_ks::model::{self, Params};
use singular_ks::runner::{self, ExperimentConfig};
use singular_ks::verify::{self, Suite};

#[derive(Parser)]
#[command(
    version,
    about = "Logistic Keller-Segel solver with singular sensitivity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trajectory, summary and final fields.
    Simulate(RunArgs),
    /// Run the [sweep] grid of a config and write the sweep table.
    Sweep(RunArgs),
    /// Print the boundedness conditions and exponent windows.
    CheckConditions {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        chi: f64,
        #[arg(long)]
        n: usize,
        /// Also report Lyapunov constants for this mu.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        eta0: f64,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value = "fast")]
        suite: Suite,
        /// Also write the outcomes as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    sample_every: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    prefix: Option<String>,
}

impl RunArgs {
    fn load(&self) -> singular_ks::Result<ExperimentConfig> {
        let mut c = ExperimentConfig::load(&self.config)?;
        c.model.a = self.a.unwrap_or(c.model.a);
        c.model.mu = self.mu.unwrap_or(c.model.mu);
        c.model.chi = self.chi.unwrap_or(c.model.chi);
        c.run.horizon = self.horizon.unwrap_or(c.run.horizon);
        c.run.sample_every = self.sample_every.unwrap_or(c.run.sample_every);
        if let Some(dir) = &self.out_dir {
            c.output.dir = dir.clone();
        }
        if let Some(prefix) = &self.prefix {
            c.output.prefix = prefix.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

const USAGE: u8 = 2;
const FAILED: u8 = 1;

fn usage(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(USAGE)
}

fn or_error<T: serde::Serialize>(r: singular_ks::Result<T>) -> serde_json::Value {
    match r {
        Ok(v) => json!(v),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate(args) => {
            let config = match args.load() {
                Ok(c) => c,
                Err(e) => return usage(e),
            };
            match runner::run_simulate(&config) {
                Ok(out) => {
                    println!(
                        "{:?}: eta0 {:.6}, final u in [{:.6}, {:.6}]",
                        out.summary.status,
                        out.summary.eta0,
                        out.summary.final_state.u_min,
                        out.summary.final_state.u_max
                    );
                    println!("wrote {}", out.trajectory_csv.display());
                    println!("wrote {}", out.summary_json.display());
                    ExitCode::SUCCESS
                }
                Err(e) => usage(e),
            }
        }
        Command::Sweep(args) => {
            let config = match args.load() {
                Ok(c) => c,
                Err(e) => return usage(e),
            };
            match runner::run_sweep(&config) {
                Ok(out) => {
                    let failed = out.rows.iter().filter(|r| r.error.is_some()).count();
                    println!("{} points, {failed} failed", out.rows.len());
                    println!("wrote {}", out.table_csv.display());
                    ExitCode::SUCCESS
                }
                Err(e) => usage(e),
            }
        }
        Command::CheckConditions {
            a,
            chi,
            n,
            mu,
            eta0,
        } => {
            let params = match Params::new(a, mu.unwrap_or(1.0), chi, n) {
                Ok(p) => p,
                Err(e) => return usage(e),
            };
            let report = model::check_boundedness_conditions(&params);
            let mut out = json!({
                "conditions": report,
                "p_g_range": or_error(model::p_g_range(a, chi)),
                "kappa_q0": or_error(model::select_kappa_q0(&params)),
            });
            if mu.is_some() {
                out["lyapunov"] = or_error(model::lyapunov_constants(&params, eta0, None));
            }
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            ExitCode::SUCCESS
        }
        Command::Verify { suite, report } => {
            let outcomes = verify::run_suite(suite);
            for o in &outcomes {
                println!("{}", o.line());
            }
            if let Some(path) = report {
                let written = serde_json::to_string_pretty(&outcomes)
                    .map_err(singular_ks::Error::from)
                    .and_then(|s| std::fs::write(&path, s).map_err(Into::into));
                if let Err(e) = written {
                    return usage(e);
                }
            }
            if outcomes.iter().all(|o| o.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(FAILED)
            }
        }
    }
}
