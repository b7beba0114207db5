//! The `hifloc` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hifloc_core::neuralnet::{OptimizerKind, TrainingReport};

use crate::config::{ExperimentConfig, PRESETS};
use crate::error::HarnessError;
use crate::experiment::{self, RowSelection};
use crate::io;
use crate::plot;

pub const DATASET_FILE: &str = "dataset.csv";
pub const NORMALIZER_FILE: &str = "normalizer.json";

#[derive(Debug, Parser)]
#[command(
    name = "hifloc",
    version,
    about = "High-impedance fault simulation, relay loci and neural fault location"
)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment: paper-grid or augmented.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Overrides `output_dir` of the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one fault: waveform and locus CSV, trip decision on stdout.
    Simulate(ScenarioArgs),
    /// Simulate the scenario grid into a dataset CSV and a normalizer.
    Dataset,
    /// Train on the dataset; writes a model and an epoch report per optimizer.
    Train {
        /// gdx, scg or cgb; every configured optimizer when omitted.
        #[arg(long)]
        optimizer: Option<String>,
        /// Weight initialization seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate trained models as a results table (CSV and text).
    Eval {
        /// Rows to evaluate: train, validation, test, all or auto.
        #[arg(long, default_value = "auto")]
        split: String,
    },
    /// Write SVG figures.
    #[command(subcommand)]
    Plot(PlotCommand),
    /// Print the effective configuration as JSON.
    ShowConfig,
}

#[derive(Debug, Subcommand)]
enum PlotCommand {
    /// R-X diagram of one fault with the zone-1 mho circle.
    Rx(ScenarioArgs),
    /// Predicted against target distance for a trained model.
    Fit {
        #[arg(long)]
        optimizer: Option<String>,
    },
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long)]
    distance_km: f64,
    #[arg(long)]
    rf_ohm: f64,
}

/// Parse `args` (program name first), run the command and return the exit
/// status. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "hifloc: {e}");
            e.exit_code()
        }
    }
}

/// [`run`] on the process arguments and standard streams.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, &mut std::io::stdout(), &mut std::io::stderr())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name).ok_or_else(|| {
            HarnessError::Usage(format!(
                "--preset: unknown preset {name:?}, expected one of {}",
                PRESETS.join(", ")
            ))
        })?,
        (None, None) => {
            return Err(HarnessError::Usage(
                "--config <PATH> or --preset <NAME> is required".into(),
            ))
        }
    };
    if let Some(dir) = &cli.out_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn optimizers(cfg: &ExperimentConfig, flag: &Option<String>) -> Result<Vec<OptimizerKind>, HarnessError> {
    match flag {
        Some(name) => OptimizerKind::parse(name).map(|k| vec![k]).ok_or_else(|| {
            HarnessError::Usage(format!(
                "--optimizer: unknown optimizer {name:?}, expected gdx, scg or cgb"
            ))
        }),
        None => Ok(cfg.training.optimizers.clone()),
    }
}

fn model_path(dir: &Path, kind: OptimizerKind) -> PathBuf {
    dir.join(format!("model_{}.json", kind.name()))
}

fn report_json_path(dir: &Path, kind: OptimizerKind) -> PathBuf {
    dir.join(format!("report_{}.json", kind.name()))
}

fn scenario_stem(a: &ScenarioArgs) -> String {
    format!("{}km_{}ohm", a.distance_km, a.rf_ohm)
}

fn load_dataset(
    cfg: &ExperimentConfig,
) -> Result<
    (
        hifloc_core::features::Dataset,
        hifloc_core::features::NormalizationParams,
    ),
    HarnessError,
> {
    let dir = &cfg.output_dir;
    let dataset = io::read_dataset_csv(&dir.join(DATASET_FILE), cfg.features.mode, cfg.split.seed)?;
    let norm = io::read_normalizer_json(&dir.join(NORMALIZER_FILE))?;
    Ok((dataset, norm))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), HarnessError> {
    let cfg = load_config(&cli)?;
    let dir = cfg.output_dir.clone();
    let kinds = match &cli.command {
        Command::Train { optimizer, .. } | Command::Plot(PlotCommand::Fit { optimizer }) => {
            optimizers(&cfg, optimizer)?
        }
        _ => cfg.training.optimizers.clone(),
    };
    let selection = match &cli.command {
        Command::Eval { split } => RowSelection::parse(split).ok_or_else(|| {
            HarnessError::Usage(format!(
                "--split: unknown value {split:?}, expected train, validation, test, all or auto"
            ))
        })?,
        _ => RowSelection::Auto,
    };
    if !matches!(cli.command, Command::ShowConfig) {
        fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    }
    let mut say = |line: String| writeln!(out, "{line}").map_err(|e| HarnessError::io(Path::new("<stdout>"), e));

    match &cli.command {
        Command::ShowConfig => say(cfg.to_json().trim_end().to_string())?,
        Command::Simulate(args) => {
            let run = experiment::simulate(&cfg, args.distance_km, args.rf_ohm)?;
            let stem = scenario_stem(args);
            let locus_path = dir.join(format!("locus_{stem}.csv"));
            io::write_waveforms_csv(&dir.join(format!("waveforms_{stem}.csv")), &run.fault.waves)?;
            io::write_locus_csv(&locus_path, &run.fault.locus)?;
            let d = run.decision;
            say(format!(
                "tripped={} trip_time_s={} first_inzone_index={} locus={}",
                d.tripped,
                d.trip_time_s.map_or("none".into(), |t| t.to_string()),
                d.first_inzone_index.map_or("none".into(), |i| i.to_string()),
                locus_path.display()
            ))?;
        }
        Command::Dataset => {
            let (dataset, norm) = experiment::build_dataset(&cfg)?;
            let path = dir.join(DATASET_FILE);
            io::write_dataset_csv(&path, &dataset)?;
            io::write_normalizer_json(&dir.join(NORMALIZER_FILE), &norm)?;
            say(format!("{} rows -> {}", dataset.rows.len(), path.display()))?;
        }
        Command::Train { seed, .. } => {
            let (dataset, norm) = load_dataset(&cfg)?;
            for kind in kinds {
                let report = experiment::train_locator(&cfg, &dataset, &norm, kind, *seed)?;
                let model = io::ModelFile::new(kind, &report.model, &norm, NORMALIZER_FILE);
                io::write_model_json(&model_path(&dir, kind), &model)?;
                io::write_report_csv(&dir.join(format!("report_{}.csv", kind.name())), &report)?;
                let json = serde_json::to_string_pretty(&report).expect("report always serializes") + "\n";
                let json_path = report_json_path(&dir, kind);
                fs::write(&json_path, json).map_err(|e| HarnessError::io(&json_path, e))?;
                let best = report.best_record();
                say(format!(
                    "{}: stop={} best_epoch={} train_mse={:e} val_mse={}",
                    kind.name(),
                    report.stop_reason.name(),
                    report.best_epoch,
                    best.train_mse,
                    best.validation_mse.map_or("none".into(), |v| format!("{v:e}"))
                ))?;
            }
        }
        Command::Eval { .. } => {
            let (dataset, norm) = load_dataset(&cfg)?;
            let mut models = Vec::new();
            for kind in &kinds {
                let path = model_path(&dir, *kind);
                if path.exists() {
                    let file = io::read_model_json(&path)?;
                    if file.normalizer != norm {
                        return Err(HarnessError::format(
                            &path,
                            "model was trained against a different normalizer",
                        ));
                    }
                    models.push((*kind, file.model()?));
                }
            }
            if models.is_empty() {
                return Err(HarnessError::io(&dir, "no model_*.json files; run `train` first"));
            }
            let refs: Vec<_> = models.iter().map(|(k, m)| (*k, m)).collect();
            let rows = selection.select(&dataset);
            let table = experiment::evaluate(&refs, &norm, &rows)?;
            let csv_path = dir.join("results.csv");
            fs::write(&csv_path, table.to_csv()).map_err(|e| HarnessError::io(&csv_path, e))?;
            let txt_path = dir.join("results.txt");
            let text = table.to_text();
            fs::write(&txt_path, &text).map_err(|e| HarnessError::io(&txt_path, e))?;
            say(text.trim_end().to_string())?;
        }
        Command::Plot(PlotCommand::Rx(args)) => {
            let run = experiment::simulate(&cfg, args.distance_km, args.rf_ohm)?;
            let zone = cfg.zone().map_err(|e| HarnessError::Config(e.to_string()))?;
            let path = dir.join(format!("rx_{}.svg", scenario_stem(args)));
            let title = format!(
                "Phase a to ground, {} km, Rf = {} ohm: {}",
                args.distance_km,
                args.rf_ohm,
                if run.decision.tripped { "trip" } else { "no trip" }
            );
            plot::render_rx_svg(&run.fault.locus, &zone, &title, &path)?;
            say(path.display().to_string())?;
        }
        Command::Plot(PlotCommand::Fit { .. }) => {
            let (dataset, norm) = load_dataset(&cfg)?;
            for &kind in &kinds {
                let report_path = report_json_path(&dir, kind);
                let text = fs::read_to_string(&report_path).map_err(|e| HarnessError::io(&report_path, e))?;
                let report: TrainingReport =
                    serde_json::from_str(&text).map_err(|e| HarnessError::format(&report_path, e.to_string()))?;
                let panels = experiment::fit_panels(&report.model, &norm, &dataset)?;
                let path = dir.join(format!("fit_{}.svg", kind.name()));
                plot::render_fit_svg(&report, &panels, &path)?;
                say(path.display().to_string())?;
            }
        }
    }
    Ok(())
}
