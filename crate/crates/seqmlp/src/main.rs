// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use seqmlp::compare::{comparison_table, cost_sweep, report_compare, sweep_csv, DEFAULT_SWEEP};
use seqmlp::config::PipelineConfig;
use seqmlp::formats::read_json;
use seqmlp::pipeline::{run_stage, run_until, RunReport, Stage};
use seqmlp::techfile::{format_tech, load_tech};
use seqmlp_core::cost::TechLibrary;

#[derive(Parser)]
#[command(name = "seqmlp", version, about = "Compile an MLP into a register-minimized sequential circuit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the global seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory of the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the float network.
    Train(Common),
    /// Quantize `model.json` to power-of-two weights.
    Quantize(Common),
    /// Prune redundant inputs of `quantized.json`.
    Prune(Common),
    /// Pick single-cycle neurons for `pruned.json`.
    Approximate(Common),
    /// Simulate the hybrid circuit on both splits and write a trace.
    Simulate(Common),
    /// Cost the exact, hybrid and combinational designs.
    Cost(Common),
    /// Write RTL, testbench and manifest.
    Emit(Common),
    /// Run the full pipeline, or stop after `--stage`.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stage: Option<String>,
    },
    /// Compare run reports against the first one.
    Compare {
        reports: Vec<PathBuf>,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Area and energy of growing synthetic models, as CSV.
    Sweep {
        #[arg(long)]
        tech: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Coefficient counts; defaults to 50 through 5000.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
    /// Print the built-in technology library in tech-file form.
    DefaultTech,
}

fn load_config(c: &Common) -> anyhow::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn write_or_print(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let single = |c: &Common, stage| -> anyhow::Result<()> { Ok(run_stage(load_config(c)?, stage)?) };
    match cli.command {
        Command::Train(c) => single(&c, Stage::Train),
        Command::Quantize(c) => single(&c, Stage::Quantize),
        Command::Prune(c) => single(&c, Stage::Prune),
        Command::Approximate(c) => single(&c, Stage::Approximate),
        Command::Simulate(c) => single(&c, Stage::Simulate),
        Command::Cost(c) => single(&c, Stage::Cost),
        Command::Emit(c) => single(&c, Stage::Emit),
        Command::Run { common, stage } => {
            let last = match stage {
                Some(s) => s.parse()?,
                None => Stage::Emit,
            };
            let cfg = load_config(&common)?;
            let out = cfg.out_dir.clone();
            if let Some(r) = run_until(cfg, last)? {
                println!(
                    "accuracy (test): float {:.4}  quantized {:.4}  pruned {:.4}  hybrid {:.4}",
                    r.accuracy.float.test, r.accuracy.quantized.test, r.accuracy.pruned.test, r.accuracy.hybrid.test
                );
                println!(
                    "kept {} of {} features, {} of {} neurons single-cycle, latency {} cycles",
                    r.kept_features, r.features, r.approximated_neurons, r.neurons, r.latency_cycles
                );
                println!(
                    "area: exact {:.1}  hybrid {:.1}  combinational {:.1}",
                    r.cost.sequential_exact.area, r.cost.sequential_hybrid.area, r.cost.combinational.area
                );
            }
            println!("artifacts in {}", out.display());
            Ok(())
        }
        Command::Compare { reports, json } => {
            if reports.len() < 2 {
                bail!("compare needs at least two report files");
            }
            let loaded = reports
                .iter()
                .map(|p| Ok((p.display().to_string(), read_json::<RunReport>(p)?)))
                .collect::<seqmlp::Result<Vec<_>>>()?;
            let rows = report_compare(&loaded)?;
            print!("{}", comparison_table(&rows));
            if let Some(p) = json {
                seqmlp::formats::write_json(&p, &rows)?;
            }
            Ok(())
        }
        Command::Sweep { tech, seed, out, sizes } => {
            let tech = match tech {
                Some(p) => load_tech(&p)?,
                None => TechLibrary::default(),
            };
            let sizes = if sizes.is_empty() { DEFAULT_SWEEP.to_vec() } else { sizes };
            let rows = cost_sweep(&sizes, &tech, seed)?;
            write_or_print(out.as_deref(), &sweep_csv(&rows))
        }
        Command::DefaultTech => {
            print!("{}", format_tech(&TechLibrary::default()));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
