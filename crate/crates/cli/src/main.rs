use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use load_impact::config::RunConfig;
use load_impact::features::ModelVariant;
use load_impact::pipeline::{
    cmd_fit, cmd_impact, cmd_ingest, cmd_placebo, cmd_report, cmd_simulate, fit_variant,
    load_inputs, Outputs, SimulateConfig,
};
use load_impact::report::ModelDocument;
use load_impact::{Error, ErrorClass, Result};

#[derive(Debug, Parser)]
#[command(name = "load-impact", version, about = "Counterfactual impact estimation on daily electricity load")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the Monte Carlo (or simulation) seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the number of Monte Carlo draws.
    #[arg(long, global = true)]
    draws: Option<usize>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate raw inputs and write the canonical daily CSV.
    Ingest,
    /// Fit one model and write its JSON document and coefficient table.
    Fit {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        model: u8,
        /// Also write the design matrix as CSV.
        #[arg(long)]
        dump_design: bool,
    },
    /// Daily and period impacts with Monte Carlo intervals.
    Impact(ModelChoice),
    /// In-time placebo test on the pre-treatment interaction weeks.
    Placebo(ModelChoice),
    /// Fit all models and write tables, impacts, placebo reports and plot data.
    Report,
    /// Write a synthetic input bundle and optionally run a recovery study.
    Simulate,
}

#[derive(Debug, clap::Args)]
struct ModelChoice {
    /// Fitted-model JSON written by `fit`.
    #[arg(long, conflicts_with = "model")]
    model_json: Option<PathBuf>,
    /// Fit this model on the fly instead (default 3).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    model: Option<u8>,
}

fn run_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.draws {
        cfg.draws = d;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn model_document(cfg: &RunConfig, choice: &ModelChoice) -> Result<ModelDocument> {
    match &choice.model_json {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.display().to_string(),
                source: e,
            })?;
            ModelDocument::from_json(&text)
        }
        None => {
            let variant = ModelVariant::from_number(choice.model.unwrap_or(3))?;
            let inputs = load_inputs(cfg)?;
            Ok(fit_variant(cfg, &inputs, variant)?.0)
        }
    }
}

fn write(outputs: &Outputs, dir: &Path) -> Result<()> {
    for p in outputs.write_to(dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    if let Command::Simulate = cli.command {
        let mut cfg = match &cli.config {
            Some(p) => SimulateConfig::load(p)?,
            None => SimulateConfig::from_toml_str("")?,
        };
        if let Some(s) = cli.seed {
            cfg.spec.seed = s;
        }
        if let Some(d) = cli.draws {
            cfg.draws = d;
        }
        if let Some(o) = &cli.out {
            cfg.out_dir = o.clone();
        }
        return write(&cmd_simulate(&cfg)?, &cfg.out_dir);
    }

    let cfg = run_config(cli)?;
    let outputs = match &cli.command {
        Command::Ingest => cmd_ingest(&cfg)?,
        Command::Fit { model, dump_design } => {
            let out = cmd_fit(&cfg, ModelVariant::from_number(*model)?, *dump_design)?;
            if let Some(table) = out.get(&format!("coefficients_model_{model}.txt")) {
                print!("{table}");
            }
            out
        }
        Command::Impact(choice) => cmd_impact(&cfg, &model_document(&cfg, choice)?)?,
        Command::Placebo(choice) => {
            let out = cmd_placebo(&cfg, &model_document(&cfg, choice)?)?;
            if let Some((_, table)) = out.files.iter().find(|(n, _)| n.ends_with(".txt")) {
                print!("{table}");
            }
            out
        }
        Command::Report => cmd_report(&cfg)?,
        Command::Simulate => unreachable!("handled above"),
    };
    write(&outputs, &cfg.out_dir)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                ErrorClass::Config.exit_code()
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
