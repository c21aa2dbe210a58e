//! `cbml`: simulate adaptive and static LQR strategies on a plant family and
//! estimate their competitive ratios.

mod config;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cbml::controllers::StrategyKind;
use cbml::metrics::{
    analytic_ratio_static, estimate_ratios, Numerator, RatioEstimate, RatioOptions,
};
use cbml::plantspace::PlantFamily;
use cbml::sim::{simulate_strategy, summary_csv, SimConfig, SimTrace};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;

use config::{parse_strategies, Scenario, ScenarioConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<cbml::Error> for CliError {
    fn from(e: cbml::Error) -> Self {
        use cbml::Error as E;
        match e {
            E::Config(_)
            | E::InvalidFamily(_)
            | E::InvalidParams(_)
            | E::WrongFamily(_)
            | E::DimensionMismatch(_)
            | E::IndexOutOfRange { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(
    name = "cbml",
    version,
    about = "Adaptive LQR under limited model information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON; defaults to the builtin two-vehicle platoon.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated: optimal, modified-ck, centralized-ck, deadbeat.
    #[arg(long)]
    strategies: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate each strategy and write traces, a summary and plots.
    Simulate {
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate average and supremum competitive ratios.
    Ratio {
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// The four strategies on the builtin platoon at its default parameters.
    PlatoonDemo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Check a plant family document and print its free entries.
    ValidateFamily {
        /// Family JSON document.
        path: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<Scenario, CliError> {
    let (mut cfg, base) = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => (ScenarioConfig::default(), PathBuf::from(".")),
    };
    if let Some(h) = common.horizon {
        cfg.horizon = h;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(s) = &common.strategies {
        cfg.strategies = parse_strategies(s)?;
    }
    cfg.resolve(&base)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn simulate(sc: &Scenario, seed: u64, format: Format) -> Result<(), CliError> {
    let cfg = &sc.config;
    create_dir(&cfg.out)?;
    let adaptive = cfg.adaptive();
    let jobs: Vec<(StrategyKind, usize)> = cfg
        .strategies
        .iter()
        .flat_map(|&k| (0..cfg.seeds).map(move |s| (k, s)))
        .collect();
    let traces = jobs
        .par_iter()
        .map(|&(kind, s)| {
            let sim = SimConfig {
                horizon: cfg.horizon,
                seed,
                trajectory: s as u64,
                noise: cfg.noise.clone(),
                record_stride: cfg.record_stride,
                wdelta: cfg.wdelta,
                ..Default::default()
            };
            info!("simulating {kind} trajectory {s}");
            simulate_strategy(kind, &sc.family, &sc.plant, &adaptive, &sim)
        })
        .collect::<Result<Vec<SimTrace>, _>>()?;

    let mut summaries = Vec::new();
    let mut overflow = None;
    for tr in &traces {
        let stem = format!("trace_{}_{}", tr.strategy, tr.trajectory);
        match format {
            Format::Csv => write(
                &cfg.out.join(format!("{stem}.csv")),
                &tr.to_csv(Some(&sc.plant)),
            )?,
            Format::Json => write(
                &cfg.out.join(format!("{stem}.json")),
                &serde_json::to_string_pretty(tr).expect("trace serializes"),
            )?,
        }
        if let Some(k) = tr.overflow {
            overflow.get_or_insert(format!(
                "{} trajectory {} overflowed at step {k}",
                tr.strategy, tr.trajectory
            ));
        }
        summaries.push(tr.summary());
    }
    match format {
        Format::Csv => write(&cfg.out.join("summary.csv"), &summary_csv(&summaries))?,
        Format::Json => write(
            &cfg.out.join("summary.json"),
            &serde_json::to_string_pretty(&summaries).expect("summary serializes"),
        )?,
    }
    for s in &summaries {
        println!(
            "{:<15} trajectory {:>3}  final {:.6}  tail {:.6}  trace X {:.6}",
            s.strategy.to_string(),
            s.trajectory,
            s.final_cost,
            s.tail_cost,
            s.trace_x
        );
    }
    if cfg.plots {
        write_plots(&cfg.out, &traces)?;
    }
    match overflow {
        Some(m) => Err(CliError::Numeric(m)),
        None => Ok(()),
    }
}

fn write_plots(out: &Path, traces: &[SimTrace]) -> Result<(), CliError> {
    let first: Vec<&SimTrace> = traces.iter().filter(|t| t.trajectory == 0).collect();
    let Some(trace_x) = first.first().map(|t| t.trace_x) else {
        return Ok(());
    };
    let cost = svg::Plot {
        title: "Running cost".into(),
        x_label: "k".into(),
        y_label: "(1/k) Σ xᵀQx + uᵀRu".into(),
        series: first
            .iter()
            .map(|t| svg::Series {
                name: t.strategy.to_string(),
                points: t
                    .rows
                    .iter()
                    .map(|r| (r.k as f64, r.running_cost))
                    .collect(),
            })
            .collect(),
        hlines: vec![("trace X".into(), trace_x)],
        y_range: Some((0.0, 2.5 * trace_x)),
    };
    write(&out.join("running_cost.svg"), &cost.render())?;

    let mut series = Vec::new();
    for t in first.iter().filter(|t| !t.strategy.is_static()) {
        for (i, labels) in t.parameter_labels.iter().enumerate() {
            for (j, label) in labels.iter().enumerate() {
                series.push(svg::Series {
                    name: format!("{} {}: {label}", t.strategy, i + 1),
                    points: t
                        .rows
                        .iter()
                        .map(|r| (r.k as f64, r.estimate_errors[i][j].abs()))
                        .collect(),
                });
            }
        }
    }
    if !series.is_empty() {
        let err = svg::Plot {
            title: "Estimation error".into(),
            x_label: "k".into(),
            y_label: "|estimate − true value|".into(),
            series,
            hlines: vec![],
            y_range: None,
        };
        write(&out.join("estimate_error.svg"), &err.render())?;
    }
    Ok(())
}

fn ratio(sc: &Scenario, seed: u64, format: Format) -> Result<(), CliError> {
    let cfg = &sc.config;
    create_dir(&cfg.out)?;
    for &kind in &cfg.strategies {
        let est: RatioEstimate = match (cfg.ratio.grid, kind.is_static()) {
            (Some(n), true) => analytic_ratio_static(&sc.family, kind, n)?,
            _ => {
                let numerator = cfg.ratio.numerator.unwrap_or(if kind.is_static() {
                    Numerator::Analytic
                } else {
                    Numerator::Simulated
                });
                let opts = RatioOptions {
                    n_plants: cfg.ratio.n_plants,
                    seeds_per_plant: cfg.ratio.seeds_per_plant,
                    horizon: cfg.horizon,
                    master_seed: seed,
                    numerator,
                    adaptive: cfg.adaptive(),
                };
                estimate_ratios(&sc.family, kind, &opts)?
            }
        };
        let stem = cfg.out.join(format!("ratio_{kind}"));
        match format {
            Format::Csv => write(&stem.with_extension("csv"), &est.to_csv())?,
            Format::Json => write(&stem.with_extension("json"), &est.to_json())?,
        }
        println!(
            "{:<15} r_ave {:.6}  r_sup (sample max) {:.6}  plants {}  skipped {}",
            kind.to_string(),
            est.r_ave_hat,
            est.r_sup_hat,
            est.per_plant.len(),
            est.skipped.len()
        );
    }
    Ok(())
}

fn validate_family(path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let fam = PlantFamily::from_json(&text)?;
    let info = &fam.info;
    println!(
        "ok: {} subsystems, n = {}, m = {}",
        info.n_subsystems(),
        info.n(),
        info.m()
    );
    for f in fam.free_entries() {
        println!("  {:<6} [{}, {}]", f.label(), f.lo, f.hi);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { seed, common } => simulate(&load(&common)?, seed, common.format),
        Command::Ratio { seed, common } => ratio(&load(&common)?, seed, common.format),
        Command::PlatoonDemo { seed, common } => {
            let sc = load(&common)?;
            if !sc.builtin {
                return Err(CliError::Config(
                    "platoon-demo needs the builtin platoon2 family".into(),
                ));
            }
            simulate(&sc, seed, common.format)
        }
        Command::ValidateFamily { path, config } => {
            let p = path
                .or(config)
                .ok_or_else(|| CliError::Config("a family path is required".into()))?;
            validate_family(&p)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cbml: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
