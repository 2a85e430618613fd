use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kinform::harness::{
    compare, export, gen_data, grid_search, read_json, resume_run, train_run, write_text, ExperimentConfig, ExportKind,
    ExportOptions, GridSpec, HarnessError, Method, RunConfig, Scenario,
};
use kinform::metrics::{summarize, AccuracyProtocol};
use kinform::samplers::ScaleProfile;

#[derive(Parser)]
#[command(name = "kinform", version, about = "Kinematics-informed configuration sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write FK-labelled (pose, configuration) pairs as JSON lines.
    GenData {
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one sampler and write its run directory.
    Train {
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        /// Partial run configuration (JSON) overlaid on the method defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_profile, default_value = "desk")]
        profile: ScaleProfile,
        /// Overrides the configured training seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from this checkpoint instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train every grid cell for every seed and rank the cells.
    Gridsearch {
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        /// Grid file (JSON); the full desk grid when omitted.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_profile, default_value = "desk")]
        profile: ScaleProfile,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// First seed; runs use seed, seed+1, ...
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 98.0)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate epochs to threshold DRP and sampling accuracy across methods.
    Compare {
        #[arg(long, value_parser = parse_scenario)]
        scenario: Scenario,
        #[arg(long, default_value = "all")]
        methods: String,
        /// Directory holding one run directory (or seed directories) per method.
        #[arg(long)]
        runs: PathBuf,
        #[arg(long, default_value_t = 1000)]
        targets: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 300)]
        attempts: usize,
        /// Seed of the random baseline's draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 7)]
        target_seed: u64,
        #[arg(long, default_value_t = 98.0)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write plot-ready CSV from a run directory.
    Export {
        #[arg(long, value_parser = parse_export)]
        what: ExportKind,
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Explained-variance components per row.
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
}

fn usage_message(e: HarnessError) -> String {
    match e {
        HarnessError::Usage(m) => m,
        other => other.to_string(),
    }
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(usage_message)
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(usage_message)
}

fn parse_export(s: &str) -> Result<ExportKind, String> {
    s.parse().map_err(usage_message)
}

fn parse_profile(s: &str) -> Result<ScaleProfile, String> {
    match s {
        "desk" => Ok(ScaleProfile::Desk),
        "paper" => Ok(ScaleProfile::Paper),
        _ => Err(format!("unknown profile {s:?} (expected desk or paper)")),
    }
}

fn run_config(method: Method, scenario: Scenario, profile: ScaleProfile, path: Option<&Path>) -> Result<RunConfig, HarnessError> {
    let overrides = match path {
        Some(p) => read_json(p).map_err(|e| match e {
            HarnessError::Json { path, source } => HarnessError::Usage(format!("{}: {source}", path.display())),
            other => other,
        })?,
        None => serde_json::Value::Object(Default::default()),
    };
    RunConfig::from_overrides(method, scenario, profile, overrides)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::GenData { scenario, n, seed, out } => {
            if n == 0 {
                return Err(HarnessError::Usage("--n must be at least 1".into()));
            }
            gen_data(scenario, n, seed, &out)?;
            println!("wrote {n} pairs to {}", out.display());
        }
        Command::Train { method, scenario, config, profile, seed, resume, out } => {
            let mut cfg = run_config(method, scenario, profile, config.as_deref())?;
            if let Some(seed) = seed {
                cfg.train.seed = seed;
            }
            let outcome = match resume {
                Some(ckpt) => resume_run(method, scenario, &ckpt, &cfg, &out)?,
                None => train_run(method, scenario, &cfg, &out)?,
            };
            match &outcome.report {
                Some(report) => {
                    let s = summarize(report);
                    let e98 = s.epochs_to_drp98.map_or("unreachable".to_string(), |e| e.to_string());
                    println!(
                        "{method} on {scenario}: {} epochs, final DRP {:.2}%, epochs to 98% DRP {e98}",
                        s.epochs, s.final_drp
                    );
                }
                None => println!("{method} on {scenario}: nothing to train"),
            }
            println!("run directory {}", outcome.dir.display());
        }
        Command::Gridsearch { method, scenario, grid, config, profile, seeds, seed, workers, threshold, out } => {
            let grid = match grid {
                Some(p) => read_json::<GridSpec>(&p).map_err(|e| HarnessError::Usage(e.to_string()))?,
                None => GridSpec::desk(),
            };
            let seeds: Vec<u64> = (seed..seed.saturating_add(seeds)).collect();
            let mut experiment = ExperimentConfig::new(scenario, vec![method], grid, seeds, out.clone());
            experiment.profile = profile;
            experiment.workers = workers;
            experiment.validate()?;
            let base = run_config(method, scenario, profile, config.as_deref())?;
            kinform::harness::write_json(&out.join("experiment.json"), &experiment)?;
            let outcome = grid_search(method, scenario, &base, &experiment.grid, &experiment.seeds, threshold, workers, &out)?;
            let best = outcome.best();
            println!(
                "best cell {} ({}, lr {}, batch {}): mean epochs to {threshold}% DRP {}",
                best.cell.index,
                best.cell.architecture(),
                best.cell.learning_rate,
                best.cell.batch_size,
                best.mean_epochs_to_drp.map_or("unreachable".to_string(), |e| e.to_string())
            );
            println!("leaderboard {}", out.join("leaderboard.csv").display());
        }
        Command::Compare { scenario, methods, runs, targets, tol, attempts, seed, target_seed, threshold, out } => {
            let methods = Method::parse_list(&methods)?;
            if !(tol > 0.0) || attempts == 0 {
                return Err(HarnessError::Usage("--tol and --attempts must be positive".into()));
            }
            let protocol = AccuracyProtocol { position_tol: tol, attempt_cap: attempts, seed };
            let report = compare(scenario, &methods, &runs, &protocol, targets, target_seed, threshold)?;
            report.write(&out)?;
            for m in &report.missing {
                eprintln!("missing artifacts for {m}; its cells are marked missing");
            }
            print!("{}", report.table1_csv()?);
            print!("{}", report.table2_csv()?);
        }
        Command::Export { what, run, out, top, bins } => {
            if top == 0 || bins == 0 {
                return Err(HarnessError::Usage("--top and --bins must be positive".into()));
            }
            let options = ExportOptions { top_k: top, bins, ..ExportOptions::default() };
            let csv = export(what, &run, &options)?;
            write_text(&out, &csv)?;
            println!("wrote {what} export to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
