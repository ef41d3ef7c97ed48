use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jetdqn::bridge::{serve_listener, serve_stdio};
use jetdqn::harness::{self, Checkpoint, HarnessError, RunConfig, SweepAxis};
use jetdqn::thermal::ThermalEnv;

#[derive(Parser)]
#[command(name = "jetdqn", version, about = "DQN control of an impinging-jet cooled plate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write metrics and a checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Greedy rollout of a trained checkpoint.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Constant-action rollout and steady state for one velocity level.
    Baseline {
        #[arg(long)]
        level: usize,
        #[arg(long)]
        config: PathBuf,
    },
    /// Train and evaluate across one axis for every configured seed.
    Sweep {
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long)]
        config: PathBuf,
    },
    /// Serve the thermal environment over TCP or stdio.
    ServeEnv {
        #[arg(long, value_enum, default_value = "thermal")]
        env: EnvKind,
        /// `host:port` or `stdio`.
        #[arg(long)]
        listen: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Exit after this many TCP sessions.
        #[arg(long)]
        sessions: Option<usize>,
    },
    /// Print the default configuration as TOML.
    DefaultConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Layout,
    Episodes,
    Variant,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvKind {
    Thermal,
}

fn load(path: &Path) -> harness::Result<RunConfig> {
    RunConfig::load(path)
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Train { config, seed } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = cfg.run_dir();
            let report = harness::train(&cfg)?;
            report.write(&dir)?;
            std::fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
            let last = report.metrics.last().map_or(f64::NAN, |m| m.normalized_reward);
            println!(
                "trained {} episodes ({} aborted); final normalized reward {last:.2}; output in {}",
                report.metrics.len(),
                report.aborted_episodes,
                dir.display()
            );
        }
        Command::Evaluate { ckpt, config } => {
            let cfg = load(&config)?;
            let report = harness::evaluate(&Checkpoint::load(&ckpt)?, &cfg)?;
            let dir = cfg.run_dir();
            report.write(&dir, "eval")?;
            println!(
                "in-band fraction {:.4}, normalized reward {:.2}; output in {}",
                report.in_band_fraction,
                report.normalized_reward,
                dir.display()
            );
        }
        Command::Baseline { level, config } => {
            let cfg = load(&config)?;
            let report = harness::run_baseline(level, &cfg)?;
            let dir = cfg.run_dir();
            report.write(&dir, &format!("baseline_{level}"))?;
            let steady = report.steady_t_surf.unwrap_or(f64::NAN);
            println!(
                "level {level}: steady T_surf {steady:.3} K (T* {:.4}); output in {}",
                steady / cfg.env.props.t_d,
                dir.display()
            );
        }
        Command::Sweep { axis, config } => {
            let cfg = load(&config)?;
            let axis = match axis {
                AxisArg::Layout => SweepAxis::Layout,
                AxisArg::Episodes => SweepAxis::Episodes,
                AxisArg::Variant => SweepAxis::Variant,
            };
            let report = harness::sweep(&cfg, axis)?;
            let dir = cfg.run_dir();
            report.write(&dir)?;
            for c in &report.cells {
                println!(
                    "{} seed {}: final normalized reward {:.2}, eval in-band {:.4}",
                    c.value,
                    c.seed,
                    c.final_normalized_reward().unwrap_or(f64::NAN),
                    c.eval.in_band_fraction
                );
            }
        }
        Command::ServeEnv {
            env: EnvKind::Thermal,
            listen,
            config,
            sessions,
        } => {
            let cfg = match config {
                Some(p) => load(&p)?,
                None => RunConfig::default(),
            };
            let mut env = ThermalEnv::new(cfg.env)?;
            if listen == "stdio" {
                serve_stdio(&mut env)?;
            } else {
                let listener = TcpListener::bind(&listen)?;
                eprintln!("listening on {}", listener.local_addr()?);
                serve_listener(listener, &mut env, sessions)?;
            }
        }
        Command::DefaultConfig => print!("{}", RunConfig::default().to_toml_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e.downcast_ref::<HarnessError>(), Some(HarnessError::Aborted(_))) {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
