use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn, LevelFilter};
use serde::Serialize;

use simpl_core::output::{
    write_convergence_csv, write_density_image, write_merged_csv, write_vtk, VtkFields,
};
use simpl_core::{Compliance, Method, RunConfig, RunReport, StationarityMetric, Totals};

const DEFAULT_OUT: &str = "simpl-out";

/// Density-based topology optimization of the cantilever benchmark.
///
/// Verbosity is controlled by SIMPL_LOG (quiet, info or debug).
#[derive(Debug, Parser)]
#[command(name = "simpl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize with one method. Exits with 0 only if the run converged.
    Run(RunArgs),
    /// Run simpl-a, simpl-b and oc under the L2 stationarity measure and
    /// write a merged convergence table.
    Compare(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Element size, overriding the mesh section of the configuration.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a VTK file of the final design.
    #[arg(long)]
    vtk: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// simpl-a, simpl-b, oc or pgd.
    #[arg(long)]
    method: Option<Method>,
}

#[derive(Serialize)]
struct Summary<'a> {
    method: String,
    status: String,
    converged: bool,
    totals: Totals,
    first_trial_accepts: usize,
    max_step: f64,
    final_compliance: f64,
    elapsed_seconds: f64,
    config: &'a RunConfig,
}

fn init_logging() {
    let level = match std::env::var("SIMPL_LOG").as_deref() {
        Ok("quiet") => LevelFilter::Off,
        Ok("debug") => LevelFilter::Debug,
        Ok("info") | Err(_) => LevelFilter::Info,
        Ok(other) => {
            eprintln!("unrecognized SIMPL_LOG value `{other}`, using info");
            LevelFilter::Info
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
}

fn load_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(h) = args.h {
        config.set_h(h);
    }
    if let Some(n) = args.max_iters {
        config.stopping.max_iters = n;
    }
    if args.vtk {
        config.vtk = true;
    }
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn write_outputs(report: &RunReport, config: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_convergence_csv(report, dir.join("convergence.csv"))?;
    write_density_image(&report.rho, &report.mesh, dir.join("density.pgm"))?;
    if config.vtk {
        write_vtk(&VtkFields::from_report(report), &report.mesh, dir.join("design.vtk"))?;
    }
    let summary = Summary {
        method: report.method.to_string(),
        status: format!("{:?}", report.status),
        converged: report.converged(),
        totals: report.totals,
        first_trial_accepts: report.first_trial_accepts,
        max_step: report.max_step,
        final_compliance: report.final_compliance(),
        elapsed_seconds: report.elapsed_seconds,
        config,
    };
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    info!("wrote results to {}", dir.display());
    Ok(())
}

fn output_dir(config: &RunConfig) -> PathBuf {
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run(args: RunArgs) -> Result<bool> {
    let mut config = load_config(&args.common)?;
    if let Some(method) = args.method {
        config.method = method;
    }
    config.validate()?;
    let report = simpl_core::run(&config)?;
    write_outputs(&report, &config, &output_dir(&config))?;
    if !report.converged() {
        warn!("{} did not converge: {:?}", report.method, report.status);
    }
    Ok(report.converged())
}

fn compare(args: CommonArgs) -> Result<bool> {
    let mut config = load_config(&args)?;
    config.stopping.metric = Some(StationarityMetric::L2);
    let problem = Compliance::new(config.problem()?)?;
    let root = output_dir(&config);
    let mut reports = Vec::new();
    for method in [Method::SimplA, Method::SimplB, Method::Oc] {
        let mut c = config.clone();
        c.method = method;
        let report = simpl_core::run_problem(&problem, &c)?;
        write_outputs(&report, &c, &root.join(method.name()))?;
        reports.push(report);
    }
    write_merged_csv(&reports, root.join("comparison.csv"))?;
    for r in &reports {
        info!(
            "{:8} {:?}: {} iterations, {} objective evaluations, F = {:.8e}",
            r.method.name(),
            r.status,
            r.totals.iterations,
            r.totals.objective_evals,
            r.final_compliance()
        );
    }
    Ok(reports.iter().all(RunReport::converged))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
