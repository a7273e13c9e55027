//! `mfgabsorb` — command-line front end for the absorbing-boundary MFG
//! toolkit.
//!
//! ```text
//! mfgabsorb <subcommand> --config path.json [--out dir] [--seed k] [--bk-literal]
//! ```
//!
//! Subcommands: `solve-mfg`, `toy`, `simulate`, `nash2`, `converge`,
//! `flat-distance`. Every subcommand accepts `--example-config` to print a
//! valid configuration for its kind and exit. Exit codes: 0 on success,
//! 2 on precondition/configuration errors, 3 on non-convergence. Numeric
//! output is printed with 17 significant digits.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mfgabsorb_core::error::Error;
use mfgabsorb_core::harness::{
    self, example_config, ExperimentConfig, ExperimentKind,
};

#[derive(Parser)]
#[command(name = "mfgabsorb", version, about = "mean-field games with absorbing boundaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for randomized experiments.
    #[arg(long)]
    seed: Option<u64>,
    /// Print an example configuration for this subcommand and exit.
    #[arg(long)]
    example_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward-backward system and emit the converged fields.
    SolveMfg(Common),
    /// Closed-form benchmark: scalar fixed point, series coefficients,
    /// value field.
    Toy {
        #[command(flatten)]
        common: Common,
        /// Also emit the literal series coefficients (no "-1" in the
        /// integrand) for comparison; they fail the terminal condition.
        #[arg(long)]
        bk_literal: bool,
    },
    /// Monte-Carlo simulation of the absorbed N-player game.
    Simulate(Common),
    /// Exact two-player Nash system on the tensor grid.
    Nash2(Common),
    /// Full convergence study: refinement gaps, empirical-measure rate,
    /// N = 2 projection diagnostics.
    Converge(Common),
    /// Flat (generalized Wasserstein) distance between the two measures in
    /// the config.
    FlatDistance(Common),
}

fn load_config(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
    let path = common.config.as_ref().ok_or_else(|| {
        Error::precondition("missing --config (use --example-config for a template)")
    })?;
    let text = std::fs::read_to_string(path)?;
    let cfg = ExperimentConfig::from_json(&text)?;
    if cfg.kind != kind {
        return Err(Error::precondition(format!(
            "config kind {:?} does not match the subcommand",
            cfg.kind
        )));
    }
    Ok(cfg)
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn print_example(kind: ExperimentKind) -> Result<(), Error> {
    let cfg = example_config(kind);
    println!("{}", serde_json::to_string_pretty(&cfg)?);
    Ok(())
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::SolveMfg(common) => {
            if common.example_config {
                return print_example(ExperimentKind::Mfg);
            }
            let cfg = load_config(&common, ExperimentKind::Mfg)?;
            let manifest = harness::run_solve_mfg(&cfg, &out_dir(&common))?;
            println!(
                "solve-mfg: converged in {} iterations, final mass {}",
                manifest["iterations"],
                fmt17(manifest["final_mass"].as_f64().unwrap_or(f64::NAN))
            );
        }
        Command::Toy { common, bk_literal } => {
            if common.example_config {
                return print_example(ExperimentKind::Toy);
            }
            let cfg = load_config(&common, ExperimentKind::Toy)?;
            let manifest = harness::run_toy(&cfg, &out_dir(&common), bk_literal)?;
            println!(
                "toy: c_star = {}, terminal defect {}",
                fmt17(manifest["c_star"].as_f64().unwrap_or(f64::NAN)),
                fmt17(manifest["terminal_defect"].as_f64().unwrap_or(f64::NAN))
            );
            if bk_literal {
                println!(
                    "toy: literal coefficient variant terminal defect {}",
                    fmt17(manifest["literal_terminal_defect"].as_f64().unwrap_or(f64::NAN))
                );
            }
        }
        Command::Simulate(common) => {
            if common.example_config {
                return print_example(ExperimentKind::Simulate);
            }
            let cfg = load_config(&common, ExperimentKind::Simulate)?;
            let manifest = harness::run_simulate(&cfg, &out_dir(&common), common.seed)?;
            let costs = manifest["realized_costs"].as_array().map(|a| a.len()).unwrap_or(0);
            let final_mass = manifest["empirical_mass"]
                .as_array()
                .and_then(|a| a.last())
                .and_then(|v| v.as_f64())
                .unwrap_or(f64::NAN);
            println!("simulate: {costs} players, final empirical mass {}", fmt17(final_mass));
        }
        Command::Nash2(common) => {
            if common.example_config {
                return print_example(ExperimentKind::Nash2);
            }
            let cfg = load_config(&common, ExperimentKind::Nash2)?;
            let manifest = harness::run_nash2(&cfg, &out_dir(&common))?;
            println!(
                "nash2: exchangeability gap {}",
                fmt17(manifest["exchangeability_gap"].as_f64().unwrap_or(f64::NAN))
            );
        }
        Command::Converge(common) => {
            if common.example_config {
                return print_example(ExperimentKind::Converge);
            }
            let cfg = load_config(&common, ExperimentKind::Converge)?;
            let summary =
                harness::run_convergence_study(&cfg, &out_dir(&common), common.seed)?;
            let slope = summary["empirical_rate"]["fit"]["slope"]
                .as_f64()
                .unwrap_or(f64::NAN);
            println!("converge: fitted empirical-measure exponent {}", fmt17(slope));
        }
        Command::FlatDistance(common) => {
            if common.example_config {
                return print_example(ExperimentKind::FlatDistance);
            }
            let cfg = load_config(&common, ExperimentKind::FlatDistance)?;
            let d = harness::run_flat_distance(&cfg)?;
            println!("{}", fmt17(d));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
