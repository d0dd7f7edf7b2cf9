use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rdpersuasion::inference::{decision_flow, IdentifiedSet, Target};
use rdpersuasion::locpoly::{KernelKind, Variant};
use rdpersuasion::oracle::PopulationLimits;
use rdpersuasion::{DataScenario, DesignKind};
use rdpersuasion_cli::config::{parse_enum, KeyValues, Overrides};
use rdpersuasion_cli::estimate::{prepare_sample, run_bounds, run_estimate};
use rdpersuasion_cli::json::to_json;
use rdpersuasion_cli::oracle::DEFAULT_GRID_STEP;
use rdpersuasion_cli::simulate::{emit_sample, sidecar_path};
use rdpersuasion_cli::{
    estimate, oracle, read_csv, run_oracle, run_simulate, simulate, CliError, ColumnMap, Result,
    RunConfig, SimulationSpec,
};
use serde::Serialize;

/// Persuasion rates from regression discontinuity designs.
#[derive(Parser)]
#[command(name = "rdpersuasion", version)]
struct Cli {
    /// Print JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,

    /// Also write the JSON report to this file.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate what the decision flow prescribes for the data.
    Estimate(EstimateArgs),
    /// As `estimate`, but always report the identified interval.
    Bounds(EstimateArgs),
    /// Show the analysis plan for a design without any data.
    Flow(FlowArgs),
    /// Run a Monte Carlo study described by a key=value file.
    Simulate(SimulateArgs),
    /// Compare the closed-form a2 + b2 range with a grid enumeration.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV file with the outcome, running variable and optionally treatment.
    data: PathBuf,
    /// key=value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    y_col: String,
    #[arg(long, default_value = "w")]
    w_col: String,
    /// Treatment column; a column named `d` is used if present.
    #[arg(long)]
    d_col: Option<String>,
    /// Cluster column for cluster-robust standard errors.
    #[arg(long)]
    cluster_col: Option<String>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, value_parser = enum_arg::<KernelKind>)]
    kernel: Option<KernelKind>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Assume monotone treatment response (the default).
    #[arg(long, conflicts_with = "no_mtr")]
    mtr: bool,
    #[arg(long)]
    no_mtr: bool,
    #[arg(long, value_parser = enum_arg::<DesignKind>)]
    design: Option<DesignKind>,
    #[arg(long, value_parser = enum_arg::<Target>)]
    target: Option<Target>,
    #[arg(long)]
    exposure_plus: Option<f64>,
    #[arg(long)]
    exposure_minus: Option<f64>,
    #[arg(long, value_parser = enum_arg::<Variant>)]
    variant: Option<Variant>,
    #[arg(long)]
    epsilon_den: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long, value_parser = enum_arg::<DesignKind>)]
    design: DesignKind,
    #[arg(long, value_parser = enum_arg::<DataScenario>, default_value = "full_triplet")]
    scenario: DataScenario,
    #[arg(long, conflicts_with = "no_mtr")]
    mtr: bool,
    #[arg(long)]
    no_mtr: bool,
    #[arg(long, value_parser = enum_arg::<Target>, default_value = "population")]
    target: Target,
}

#[derive(Args)]
struct SimulateArgs {
    /// key=value file describing the DGP and the study.
    spec: PathBuf,
    /// Write one sample as CSV, with a `.truth.json` sidecar, instead of running the study.
    #[arg(long)]
    emit_sample: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, allow_hyphen_values = true)]
    p_plus: f64,
    #[arg(long, allow_hyphen_values = true)]
    p_minus: f64,
    #[arg(long, allow_hyphen_values = true)]
    e_plus: f64,
    #[arg(long, allow_hyphen_values = true)]
    e_minus: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
}

fn enum_arg<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    parse_enum(s).map_err(|e| e.to_string())
}

fn mtr_flag(mtr: bool, no_mtr: bool) -> Option<bool> {
    match (mtr, no_mtr) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    }
}

impl EstimateArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            cutoff: self.cutoff,
            bandwidth: self.bandwidth,
            kernel: self.kernel,
            order: self.order,
            alpha: self.alpha,
            mtr: mtr_flag(self.mtr, self.no_mtr),
            design: self.design,
            target: self.target,
            exposure_plus: self.exposure_plus,
            exposure_minus: self.exposure_minus,
            variant: self.variant,
            cluster_column: self.cluster_col.clone(),
            epsilon_den: self.epsilon_den,
            seed: self.seed,
        }
    }

    fn config(&self) -> Result<RunConfig> {
        let from_file = match &self.config {
            Some(path) => {
                let mut kv = KeyValues::read(path)?;
                let o = Overrides::take_from(&mut kv)?;
                kv.finish()?;
                o
            }
            None => Overrides::default(),
        };
        RunConfig::from_overrides(from_file.merge(self.overrides()))
    }
}

struct Output {
    json: String,
    table: String,
}

fn output<T: Serialize>(value: &T, table: String) -> Result<Output> {
    Ok(Output {
        json: to_json(value)?,
        table,
    })
}

fn run_command(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Estimate(args) | Command::Bounds(args) => {
            let cfg = args.config()?;
            let columns = ColumnMap {
                y: args.y_col.clone(),
                w: args.w_col.clone(),
                d: args.d_col.clone(),
                cluster: cfg.cluster_column.clone(),
            };
            let sample = prepare_sample(&cfg, read_csv(&args.data, &columns)?)?;
            let report = if matches!(cli.command, Command::Bounds(_)) {
                run_bounds(&cfg, &sample)?
            } else {
                run_estimate(&cfg, &sample)?
            };
            output(&report, estimate::render_table(&report))
        }
        Command::Flow(args) => {
            let mtr = mtr_flag(args.mtr, args.no_mtr).unwrap_or(true);
            let plan = decision_flow(args.design, mtr, args.scenario, args.target)?;
            let names: Vec<&str> = plan.estimand_set().iter().map(|e| e.name()).collect();
            let kind = match plan.identified {
                IdentifiedSet::Point { .. } => "point identified",
                IdentifiedSet::LowerBound { .. } => "lower bound only",
                IdentifiedSet::Interval { .. } => "interval identified",
            };
            let table = format!(
                "{kind} with estimands [{}], {:?} confidence interval\n",
                names.join(", "),
                plan.ci_kind
            );
            output(&plan, table)
        }
        Command::Simulate(args) => {
            let spec = SimulationSpec::read(&args.spec)?;
            if let Some(path) = &args.emit_sample {
                let sidecar = emit_sample(&spec, path)?;
                let table = format!(
                    "wrote {} records to {} and truth to {}\n",
                    sidecar.n,
                    path.display(),
                    sidecar_path(path).display()
                );
                return output(&sidecar, table);
            }
            let report = run_simulate(&spec)?;
            output(&report, simulate::render_table(&report))
        }
        Command::Oracle(args) => {
            let pop = PopulationLimits::new(args.p_plus, args.p_minus, args.e_plus, args.e_minus)?;
            let report = run_oracle(&pop, args.grid_step)?;
            output(&report, oracle::render_table(&report))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run_command(&cli).and_then(|out| {
        if let Some(path) = &cli.output {
            write_file(path, &out.json)?;
        }
        let text = if cli.json { out.json } else { out.table };
        let _ = std::io::stdout().write_all(text.as_bytes());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = ErrorReport {
                error: ErrorBody {
                    code: e.code(),
                    message: e.to_string(),
                },
            };
            let body = serde_json::to_string(&report).unwrap_or_else(|_| e.to_string());
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
