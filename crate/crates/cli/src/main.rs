//! Command-line driver: run benchmark scenarios, list the catalog, and
//! evaluate the analytic oracles.

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use xmesh_core::config::{execute, parse_config};
use xmesh_core::invlap::{sloshing_amplitude, InversionMethod};
use xmesh_core::scenario::SCENARIO_NAMES;

#[derive(Parser)]
#[command(name = "xmesh", about = "Two-phase incompressible flow on a deforming fixed-connectivity mesh")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a JSON config file.
    Run {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config and XMESH_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the scenario catalog.
    ListScenarios,
    /// Evaluate analytic oracles.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Normalized sloshing amplitude eta(t)/eta0 from the inverse-Laplace
    /// solution of the linearized viscous standing wave.
    Sloshing {
        /// Time (s).
        #[arg(long)]
        t: f64,
        /// Kinematic viscosity (m^2/s).
        #[arg(long, default_value_t = 0.01)]
        nu: f64,
        /// Wave number (1/m).
        #[arg(long, default_value_t = std::f64::consts::PI)]
        k: f64,
        /// Gravity (m/s^2).
        #[arg(long, default_value_t = 9.81)]
        g: f64,
        /// Inversion method: talbot or dehoog.
        #[arg(long, default_value = "talbot")]
        method: String,
    },
    /// Laplace pressure sigma / R of a static bubble.
    Laplace {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        radius: f64,
    },
    /// Capillary time-step bound sqrt((rho1+rho2) h^3 / (4 pi sigma)).
    CapillaryDt {
        #[arg(long)]
        rho1: f64,
        #[arg(long)]
        rho2: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        sigma: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let mut cfg = parse_config(&text)?;
            if let Some(out) = out {
                cfg.out_dir = Some(out);
            }
            let (state, _) = execute(&cfg)?;
            println!(
                "completed {} steps to t = {:.6}; mass = ({:.6}, {:.6}); min area = {:.3e}",
                state.n,
                state.t,
                state.diagnostics.mass_omega1,
                state.diagnostics.mass_omega2,
                state.diagnostics.min_area
            );
            Ok(())
        }
        Command::ListScenarios => {
            for name in SCENARIO_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Oracle { which } => match which {
            OracleCommand::Sloshing { t, nu, k, g, method } => {
                let m = match method.as_str() {
                    "talbot" => InversionMethod::Talbot,
                    "dehoog" => InversionMethod::DeHoog,
                    other => bail!("unknown inversion method {other:?} (talbot | dehoog)"),
                };
                println!("{}", sloshing_amplitude(m, t, nu, k, g)?);
                Ok(())
            }
            OracleCommand::Laplace { sigma, radius } => {
                if radius <= 0.0 {
                    bail!("radius must be positive");
                }
                println!("{}", xmesh_core::scenario::laplace_pressure(sigma, radius));
                Ok(())
            }
            OracleCommand::CapillaryDt { rho1, rho2, h, sigma } => {
                println!("{}", xmesh_core::front::capillary_dt_max(rho1, rho2, h, sigma));
                Ok(())
            }
        },
    }
}
