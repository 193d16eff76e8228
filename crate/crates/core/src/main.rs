use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use softdmp::runner::{list_presets, load_preset, output_root, run_experiment, run_preset, ExperimentConfig, ExperimentReport};

#[derive(Parser)]
#[command(name = "softdmp", version, about = "Tabular reward/punishment RL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config (JSON).
    Run {
        config: PathBuf,
        /// Output directory; defaults to the config's output_dir, then <output root>/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a shipped preset into <root>/<preset>/<experiment>.
    Preset {
        name: String,
        /// Replace every experiment's seed list.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        seed_override: Option<Vec<u64>>,
        /// Output root; defaults to $SOFTDMP_OUTPUT_ROOT, then ./runs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List shipped presets.
    ListPresets,
}

fn report(r: &ExperimentReport) {
    println!("{}: wrote {}", r.name, r.dir.display());
}

fn execute(cli: Cli) -> softdmp::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let dir = match (out, &cfg.output_dir) {
                (Some(dir), _) => dir,
                (None, Some(dir)) => dir.clone(),
                (None, None) => output_root(None).join(&cfg.name),
            };
            report(&run_experiment(&cfg, base, &dir)?);
        }
        Command::Preset { name, seed_override, out } => {
            let preset = load_preset(&name)?;
            let root = output_root(out.as_deref());
            for r in run_preset(&preset, &root, seed_override.as_deref())? {
                report(&r);
            }
        }
        Command::ListPresets => {
            for (name, description) in list_presets() {
                println!("{name}\t{description}");
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
            ExitCode::FAILURE
        }
    }
}
