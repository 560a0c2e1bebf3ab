use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lossyphase::commands::{self, parse_hist, simulate_settings_for};
use lossyphase::config::{self, Imperfections, ProbeArg, SimulateConfig};
use lossyphase::manifest::{BoundsRun, EstimateRun, FringesRun, RunConfig, SimulateRun};
use lossyphase::{CliError, CliResult};

/// Two-photon phase estimation under loss: bounds, fringes, simulated
/// coincidence campaigns and maximum-likelihood estimates.
#[derive(Parser)]
#[command(name = "lossyphase", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Precision of the optimal, N00N and classical probes versus transmission.
    Bounds {
        #[arg(long)]
        eta_min: Option<f64>,
        #[arg(long)]
        eta_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Coincidence probabilities of both detection settings over a phase scan.
    Fringes {
        #[arg(long)]
        eta: f64,
        #[arg(long, value_enum, default_value = "optimal")]
        probe: ProbeArg,
        #[arg(long, default_value_t = 181)]
        phi_steps: usize,
        #[command(flatten)]
        imperfections: ImperfectionArgs,
        /// Sample this many events per phase and setting instead of printing probabilities.
        #[arg(long)]
        counts: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo campaign written as a dataset CSV.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Restrict to one probe.
        #[arg(long, value_enum)]
        probe: Option<ProbeArg>,
        /// Restrict to these transmissions (repeatable).
        #[arg(long)]
        eta: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        series: Option<u32>,
        #[arg(long)]
        events: Option<u64>,
    },
    /// Maximum-likelihood estimates, uncertainty report and histograms.
    Estimate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Config with the imperfection model; defaults to the manifest of
        /// the simulate run next to the dataset, then to the ideal model.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Histogram bin width, e.g. `bin=0.01`.
        #[arg(long)]
        hist: Option<String>,
        #[arg(long)]
        exclude_cc: bool,
        #[arg(long)]
        joint_normalization: bool,
    },
    /// Repeat the run recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ImperfectionArgs {
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_hom: f64,
    #[arg(long, default_value_t = 1.0)]
    v_classical: f64,
}

impl ImperfectionArgs {
    fn resolve(&self) -> CliResult<Imperfections> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(CliError::domain(format!("{name} must lie in [0, 1], got {x}")))
            }
        };
        unit("epsilon", self.epsilon)?;
        unit("lambda_hom", self.lambda_hom)?;
        unit("v_classical", self.v_classical)?;
        Ok(Imperfections {
            epsilon: self.epsilon,
            delta: self.delta,
            lambda_hom: self.lambda_hom,
            v_classical: self.v_classical,
        })
    }
}

fn load_config(path: &PathBuf) -> CliResult<config::ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    config::parse(&text).map_err(|e| match e {
        CliError::Input(m) => CliError::input(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let run = match cli.command {
        Command::Bounds { eta_min, eta_max, steps, out } => RunConfig::Bounds(BoundsRun {
            eta_min,
            eta_max,
            steps,
            out,
        }),
        Command::Fringes {
            eta,
            probe,
            phi_steps,
            imperfections,
            counts,
            seed,
            out,
        } => RunConfig::Fringes(FringesRun {
            eta,
            probe,
            phi_steps,
            imperfections: imperfections.resolve()?,
            counts,
            seed: config::resolve_seed(seed, None)?,
            out,
        }),
        Command::Simulate {
            config: path,
            out_dir,
            probe,
            eta,
            seed,
            series,
            events,
        } => {
            let file = match &path {
                Some(p) => load_config(p)?,
                None => config::ConfigFile {
                    config: SimulateConfig::default(),
                    seed: None,
                },
            };
            let mut cfg = file.config;
            cfg.seed = config::resolve_seed(seed, file.seed)?;
            if let Some(p) = probe {
                cfg.probe = vec![p];
            }
            if !eta.is_empty() {
                if let Some(bad) = eta.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
                    return Err(CliError::domain(format!("eta must lie in (0, 1], got {bad}")));
                }
                cfg.eta_list = eta;
            }
            if let Some(s) = series {
                cfg.series = s;
            }
            if let Some(m) = events {
                cfg.events = m;
            }
            RunConfig::Simulate(SimulateRun { config: cfg, out_dir })
        }
        Command::Estimate {
            dataset,
            out_dir,
            config: path,
            hist,
            exclude_cc,
            joint_normalization,
        } => {
            let source = match &path {
                Some(p) => Some(load_config(p)?.config),
                None => simulate_settings_for(&dataset)?,
            };
            let source = source.unwrap_or_default();
            let dataset = std::fs::canonicalize(&dataset)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", dataset.display())))?;
            RunConfig::Estimate(EstimateRun {
                dataset,
                imperfections: source.imperfections,
                include_cc: source.include_cc && !exclude_cc,
                joint_normalization,
                hist_bin: hist.as_deref().map(parse_hist).transpose()?,
                out_dir,
            })
        }
        Command::Replay { manifest, out_dir } => return commands::replay(&manifest, out_dir.as_deref()),
    };
    commands::execute(run)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(manifest) => {
            eprintln!("manifest: {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lossyphase: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
