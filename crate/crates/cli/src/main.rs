use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swingnet::{cmd_compare, cmd_equilibrium, cmd_presets, cmd_run, CliError, Overrides, Source};

/// Swing-network synchronization experiments. Deterministic: no randomness
/// anywhere, so identical inputs produce byte-identical outputs.
#[derive(Parser)]
#[command(name = "swingnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Timing {
    /// Integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Simulation horizon in seconds.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
}

impl From<&Timing> for Overrides {
    fn from(t: &Timing) -> Self {
        Overrides { dt: t.dt, t_end: t.t_end }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario; writes trajectory.csv and report.json.
    Run {
        /// TOML config path, or preset:NAME.
        config: String,
        #[command(flatten)]
        timing: Timing,
        #[arg(long = "output-dir", default_value = "out")]
        output_dir: PathBuf,
    },
    /// Simulate two scenarios on the same network and compare their transients.
    Compare {
        a: String,
        b: String,
        #[command(flatten)]
        timing: Timing,
        #[arg(long = "output-dir", default_value = "out")]
        output_dir: PathBuf,
    },
    /// Solve and print the pre- and post-step equilibria.
    Equilibrium {
        config: String,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// List built-in presets.
    Presets {
        /// Also write each preset as a TOML config into this directory.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

fn source(arg: &str) -> Result<Source, CliError> {
    Ok(Source::parse(arg)?)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, timing, output_dir } => {
            let report = cmd_run(&source(&config)?, (&timing).into(), &output_dir)?;
            let m = &report.metrics;
            println!("law              {}", report.scenario.control.law);
            println!("peak |omega|     {:.6} rad/s", m.peak_freq_dev);
            println!("settling time    {:.3} s{}", m.settling_time, if m.settled { "" } else { " (not settled)" });
            println!("final separation {:.6} rad", m.final_separation);
            println!("final |u|        {:e} pu", m.final_control);
            println!("osc  P_m          u              P_e          error");
            for r in &report.power_sharing {
                println!("{:<4} {:<12.6} {:<14.3e} {:<12.6} {:.3e}", r.oscillator, r.pm, r.control, r.pe, r.error);
            }
            println!("wrote {}", report.artifacts.trajectory_csv.display());
            println!("wrote {}", report.artifacts.report_json.display());
        }
        Command::Compare { a, b, timing, output_dir } => {
            let r = cmd_compare(&source(&a)?, &source(&b)?, (&timing).into(), &output_dir)?;
            println!("{:<18} {:>14} {:>14}", "", r.a.law, r.b.law);
            println!("{:<18} {:>14.6} {:>14.6}", "peak |omega|", r.a.metrics.peak_freq_dev, r.b.metrics.peak_freq_dev);
            println!("{:<18} {:>14.3} {:>14.3}", "settling time", r.a.metrics.settling_time, r.b.metrics.settling_time);
            println!(
                "{:<18} {:>14.6} {:>14.6}",
                "final separation", r.a.metrics.final_separation, r.b.metrics.final_separation
            );
            println!("overshoot ratio    {:.4}", r.overshoot_ratio);
            println!("wrote {}", output_dir.join("comparison.json").display());
        }
        Command::Equilibrium { config, json } => {
            let report = cmd_equilibrium(&source(&config)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{}", report.render());
            }
        }
        Command::Presets { write } => {
            for (p, path) in cmd_presets(write.as_deref())? {
                match path {
                    Some(path) => println!("{:<12} {}  -> {}", p.name(), p.description(), path.display()),
                    None => println!("{:<12} {}", p.name(), p.description()),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
