use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cascade_core::conformal::Method;
use cascade_core::datagen::generate_cohort;
use cascade_core::harness::{
    ablate, ablation_file, generator_config, load_ablation, load_reports, render_ablation, render_reports,
    run_experiment, write_ablation_artifacts, write_run_artifacts, AblationParam, EvalFilter, ExperimentConfig,
    ReportFormat, REPORT_JSON,
};
use cascade_core::{CascadeError, ExecMode, Result};
use clap::{Parser, Subcommand};

/// Venn-Abers scaled conformal intervals for two-stage predictors.
#[derive(Debug, Parser)]
#[command(name = "cascade", version)]
struct Cli {
    /// TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Miscoverage level in (0, 1).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// CASCADE sensitivity (>= 0).
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Comma-separated: naive,split,cv_plus,jab,mondrian,cascade.
    #[arg(long, global = true)]
    methods: Option<String>,
    /// Evaluation population: truth or predicted.
    #[arg(long, global = true)]
    filter: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long, global = true, default_value = "json")]
    format: String,
    /// Execution mode: serial or parallel.
    #[arg(long, global = true)]
    exec: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic cohort to <out>/cohort.csv.
    Generate,
    /// Run every requested method and write reports and artifacts.
    Run,
    /// Sweep one conformal parameter over its configured grid.
    Ablate {
        /// beta, alpha or K.
        #[arg(long)]
        param: String,
    },
    /// Re-render persisted results from <out> to stdout.
    Report {
        /// Render the ablation table for this parameter instead of the report.
        #[arg(long)]
        param: Option<String>,
    },
}

fn parse_exec(s: &str) -> Result<ExecMode> {
    match s {
        "serial" => Ok(ExecMode::Serial),
        "parallel" => Ok(ExecMode::Parallel),
        other => Err(CascadeError::config(
            "exec",
            format!("unknown mode {other:?}; expected serial or parallel"),
        )),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(alpha) = cli.alpha {
        cfg.alpha = alpha;
    }
    if let Some(beta) = cli.beta {
        cfg.beta = beta;
    }
    if let Some(list) = &cli.methods {
        cfg.methods = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse::<Method>)
            .collect::<Result<_>>()?;
    }
    if let Some(filter) = &cli.filter {
        cfg.filter = filter.parse::<EvalFilter>()?;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(exec) = &cli.exec {
        cfg.exec = parse_exec(exec)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let format: ReportFormat = cli.format.parse()?;
    let cfg = load_config(cli)?;
    let out: &Path = &cfg.out;
    match &cli.command {
        Command::Generate => {
            let cohort = generate_cohort(&generator_config(&cfg))?;
            std::fs::create_dir_all(out).map_err(|e| CascadeError::io(out, e))?;
            let path = out.join("cohort.csv");
            let file = std::fs::File::create(&path).map_err(|e| CascadeError::io(&path, e))?;
            cohort.write_csv(std::io::BufWriter::new(file))?;
            print_paths(&[path]);
        }
        Command::Run => {
            let exp = run_experiment(&cfg)?;
            for r in &exp.reports {
                log::info!(
                    "{}: coverage {:.4}, mean length {:.4}, ratio {:?}",
                    r.method,
                    r.marginal_coverage,
                    r.avg_length,
                    r.cascade_ratio
                );
            }
            print_paths(&write_run_artifacts(&exp, out, format)?);
        }
        Command::Ablate { param } => {
            let table = ablate(&cfg, param.parse()?)?;
            print_paths(&write_ablation_artifacts(&table, out, format)?);
        }
        Command::Report { param } => {
            let text = match param {
                Some(p) => {
                    let p: AblationParam = p.parse()?;
                    render_ablation(&load_ablation(&out.join(ablation_file(p, ReportFormat::Json)))?, format)
                }
                None => render_reports(&load_reports(&out.join(REPORT_JSON))?, format)?,
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
