use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use robust_loss_lab::cli::{
    cmd_interp, cmd_loss_table, cmd_toyfit, cmd_verify, load_config, CliError, Format,
    InterpRunConfig, LossTableConfig, ToyfitRunConfig,
};
use robust_loss_lab::interp::{preset, BoundConvention, BoxRegressionConfig};
use robust_loss_lab::verify::ToleranceProfile;

/// Robust-loss laboratory: loss curves, invariant verification, the
/// polynomial-fitting noise study, and hyper-parameter interpretation.
#[derive(Parser)]
#[command(name = "robust-loss-lab", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Bound {
    Lower,
    Upper,
}

#[derive(Subcommand)]
enum Command {
    /// Emit loss/derivative curve data, one CSV per transition point.
    LossTable {
        /// JSON config: {"alphas": [...], "x_min": .., "x_max": .., "n_points": ..}
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; `_alpha=<value>` is inserted before the extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the loss/divergence invariant suite; non-zero exit on failure.
    Verify {
        /// Tolerance profile (only `default` is defined).
        #[arg(long, default_value = "default")]
        profile: String,
    },
    /// Run the noise-scale sweep of Huber grid searches.
    Toyfit {
        /// JSON config; see `ToyfitRunConfig` in the library docs.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; a `.grid.json` sidecar lands next to it.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print uncertainty-scale interpretations of box-regression losses.
    Interp {
        /// JSON config: {"configs": [...]}. Exclusive with --preset.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in configuration set (`paper-table1`).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Side of the Huber sandwich to read the loss through.
        #[arg(long, value_enum, default_value_t = Bound::Lower)]
        bound: Bound,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> Result<ExitCode, CliError> {
    match Args::parse().command {
        Command::LossTable { config, out } => {
            let cfg: LossTableConfig = load_config(&config)?;
            for path in cmd_loss_table(&cfg, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { profile } => {
            if profile != "default" {
                return Err(CliError::Invalid {
                    field: "profile".to_string(),
                    message: format!("unknown profile `{profile}`; only `default` is defined"),
                });
            }
            let report = cmd_verify(&ToleranceProfile::default());
            print!("{}", report.render());
            if let Some(failure) = report.first_failure() {
                eprintln!("verification failed: {}", failure.name);
                Ok(ExitCode::FAILURE)
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Toyfit { config, out, seed } => {
            let mut cfg: ToyfitRunConfig = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let outputs = cmd_toyfit(&cfg, &out)?;
            println!("wrote {}", outputs.csv.display());
            println!("wrote {}", outputs.sidecar.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Interp {
            config,
            preset: preset_name,
            format,
            bound,
            out,
        } => {
            let configs: Vec<BoxRegressionConfig> = match (config, preset_name) {
                (_, Some(name)) => preset(&name).ok_or(CliError::UnknownPreset { name })?,
                (Some(path), None) => load_config::<InterpRunConfig>(&path)?.configs,
                (None, None) => {
                    return Err(CliError::Invalid {
                        field: "config".to_string(),
                        message: "pass --config or --preset".to_string(),
                    })
                }
            };
            let convention = match bound {
                Bound::Lower => BoundConvention::Lower,
                Bound::Upper => BoundConvention::Upper,
            };
            let rendered = cmd_interp(&configs, format, convention)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &rendered).map_err(|source| CliError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    println!("wrote {}", path.display());
                }
                None => print!("{rendered}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
