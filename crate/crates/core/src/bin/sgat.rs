use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use sgat::harness::{self, ExperimentConfig, OUTPUT_DIR_VAR};

#[derive(Parser)]
#[command(
    name = "sgat",
    version,
    about = "Grounded action transformation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override a config value, e.g. `--set grounding.max_iterations=3`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
        /// Results CSV; defaults to the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Aggregate a results CSV over trials and print a wide table.
    Summarize { csv: PathBuf },
    /// Write a canonical config and run it.
    Reproduce {
        #[arg(value_parser = ["fig5"])]
        figure: String,
        /// Directory for the config and CSVs; defaults to $SGAT_OUTPUT_DIR or `results`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn run(mut config: ExperimentConfig, output: Option<PathBuf>) -> Result<()> {
    if output.is_some() {
        config.output = output;
    }
    let out = harness::run_experiment(&config)?;
    let (results, diagnostics) = harness::write_outputs(&config, &out)?;
    println!("wrote {} rows to {}", out.rows.len(), results.display());
    println!(
        "wrote {} diagnostics to {}",
        out.diagnostics.len(),
        diagnostics.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            overrides,
            output,
        } => {
            let cfg = ExperimentConfig::load(&config, &overrides)
                .with_context(|| format!("loading {}", config.display()))?;
            run(cfg, output)
        }
        Command::Summarize { csv } => {
            let summary = harness::summarize(&csv)
                .with_context(|| format!("summarizing {}", csv.display()))?;
            for (line, reason) in &summary.malformed {
                eprintln!("skipped line {line}: {reason}");
            }
            summary.write_wide(std::io::stdout().lock())?;
            Ok(())
        }
        Command::Reproduce {
            figure,
            output_dir,
            overrides,
        } => {
            if figure != "fig5" {
                bail!("unknown figure {figure}");
            }
            let dir = output_dir
                .or_else(|| std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from))
                .unwrap_or_else(|| "results".into());
            std::fs::create_dir_all(&dir)?;
            let mut canonical = harness::fig5_config();
            canonical.output = Some(dir.join("fig5.csv"));
            let config_path = dir.join("fig5.toml");
            std::fs::write(&config_path, canonical.to_toml())?;
            println!("wrote {}", config_path.display());
            let cfg = ExperimentConfig::load(&config_path, &overrides)?;
            run(cfg, None)
        }
    }
}
