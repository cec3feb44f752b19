use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use qfa_pulse::calibration::CalibrationTable;
use qfa_pulse::compiler::{format_gates, LoweringPath};
use qfa_pulse::device::{preset_names, DevicePreset};
use qfa_pulse::harness::{
    calibrate_config, calibrate_for, emit_report, emit_thresholds, enumerate_word_lengths, format_threshold_table,
    gate_calibrations, load_json_report, load_rows, mean_rows, run_sweep_with_table, simulate_word,
    threshold_table, write_rows_csv, CalibrationMode, DeviceSource, ExperimentConfig, ReportFormat,
};

#[derive(Parser)]
#[command(name = "qfa-pulse", version, about = "Pulse-level MOD^p automaton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Rabi scan, fit it and write a calibration table.
    Calibrate(CalibrateArgs),
    /// Sweep word lengths and write per-word rows.
    Sweep(SweepArgs),
    /// Compute threshold lengths from saved rows.
    Report(ReportArgs),
    /// Compile and simulate one word.
    SimulateWord(SimulateArgs),
    /// List the built-in device presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

fn format_for(explicit: Option<Format>, path: &Path) -> ReportFormat {
    explicit.map_or_else(|| ReportFormat::from_path(path), Into::into)
}

/// Flags mirroring the experiment config. Values in `--config` win.
#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config; its fields override the flags below.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Prime modulus.
    #[arg(long)]
    p: Option<u64>,
    /// Rotation multiplier.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    residues: Option<Vec<u64>>,
    #[arg(long)]
    max_len: Option<u64>,
    #[arg(long)]
    shots: Option<u64>,
    /// Comma-separated: default_drag, custom_square.
    #[arg(long, value_delimiter = ',')]
    paths: Option<Vec<String>>,
    #[arg(long)]
    opt_level: Option<u8>,
    /// Named preset (see `presets`).
    #[arg(long, conflicts_with = "device")]
    device_preset: Option<String>,
    /// Device preset JSON file.
    #[arg(long, value_name = "FILE")]
    device: Option<PathBuf>,
    #[arg(long)]
    noise: Option<Toggle>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    /// Calibrate on the noise-free twin (ideal) or with shots on the noisy device (measured).
    #[arg(long)]
    calibration: Option<String>,
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        if let Some(v) = self.p {
            c.p = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = &self.residues {
            c.residues = v.clone();
        }
        if let Some(v) = self.max_len {
            c.max_len = v;
        }
        if let Some(v) = self.shots {
            c.shots = v;
        }
        if let Some(v) = &self.paths {
            c.paths = v.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.opt_level {
            c.opt_level = v;
        }
        if let Some(v) = &self.device_preset {
            c.device_preset = DeviceSource::Named(v.clone());
        }
        if let Some(path) = &self.device {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let doc: DevicePreset =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            c.device_preset = DeviceSource::Inline(doc);
        }
        if let Some(v) = self.noise {
            c.noise = matches!(v, Toggle::On);
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.replications {
            c.replications = v;
        }
        if let Some(v) = &self.calibration {
            c.calibration = match v.as_str() {
                "ideal" => CalibrationMode::Ideal,
                "measured" => CalibrationMode::Measured,
                other => bail!("unknown calibration mode {other:?} (ideal or measured)"),
            };
        }
        if let Some(v) = &self.thresholds {
            c.thresholds = v.clone();
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let Value::Object(overrides) = file else {
                bail!("{}: config must be a JSON object", path.display());
            };
            let mut merged = serde_json::to_value(&c)?;
            let fields = merged.as_object_mut().expect("config serializes to an object");
            for (k, v) in overrides {
                fields.insert(k, v);
            }
            c = serde_json::from_value(merged).with_context(|| format!("parsing {}", path.display()))?;
        }
        c.check()?;
        Ok(c)
    }
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Where to write the calibration table JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Calibration table to use instead of calibrating first.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// Rows output (CSV or JSON by extension unless --format is given).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    format: Option<Format>,
    /// Also write the threshold table here.
    #[arg(long, value_name = "FILE")]
    thresholds_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Rows written by `sweep` (CSV or JSON).
    #[arg(long)]
    rows: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2")]
    thresholds: Vec<f64>,
    /// Sweep length bound; read from a JSON report or taken as the longest row if omitted.
    #[arg(long)]
    max_len: Option<u64>,
    /// Threshold table output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// Per-word means over replications, as CSV.
    #[arg(long, value_name = "FILE")]
    means_out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Word length.
    #[arg(long)]
    len: u64,
    /// default_drag or custom_square.
    #[arg(long)]
    path: String,
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// Write the compiled schedule as JSON.
    #[arg(long, value_name = "FILE")]
    schedule_out: Option<PathBuf>,
    /// Print the gate list.
    #[arg(long)]
    show_gates: bool,
}

fn load_or_calibrate(config: &ExperimentConfig, table: Option<&Path>) -> Result<CalibrationTable> {
    match table {
        Some(path) => Ok(CalibrationTable::load_json(path)?),
        None => Ok(calibrate_for(config)?),
    }
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let config = args.experiment.resolve()?;
    let cal = calibrate_config(&config)?;
    cal.table.save_json(&args.out)?;
    for m in cal.table.fit_meta() {
        println!(
            "amplitude {:.4}: rabi {:.4} MHz{}",
            m.amplitude,
            2.0 * m.rate_hz / 1e6,
            if m.converged { "" } else { " (not converged)" }
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let config = args.experiment.resolve()?;
    let table = load_or_calibrate(&config, args.table.as_deref())?;
    let out = run_sweep_with_table(&config, &table)?;
    let report = threshold_table(&out.rows, &config.thresholds, config.max_len);
    emit_report(&out.rows, &report, &config, format_for(args.format, &args.out), &args.out)?;
    if let Some(path) = &args.thresholds_out {
        emit_thresholds(&report, ReportFormat::from_path(path), path)?;
    }
    print!("{}", format_threshold_table(&report));
    println!("wrote {} rows to {}", out.rows.len(), args.out.display());
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let rows = load_rows(&args.rows)?;
    let max_len = match args.max_len {
        Some(m) => m,
        None if ReportFormat::from_path(&args.rows) == ReportFormat::Json => {
            load_json_report(&args.rows)?.config.max_len
        }
        None => rows.iter().map(|r| r.word_len).max().unwrap_or(0),
    };
    let report = threshold_table(&rows, &args.thresholds, max_len);
    print!("{}", format_threshold_table(&report));
    if let Some(path) = &args.out {
        emit_thresholds(&report, format_for(args.format, path), path)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.means_out {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_rows_csv(&mean_rows(&rows), file).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let path: LoweringPath = args.path.parse()?;
    let mut config = args.experiment.resolve()?;
    config.paths = vec![path];
    let table = load_or_calibrate(&config, args.table.as_deref())?;
    let single = ExperimentConfig {
        residues: vec![args.len % config.p],
        max_len: args.len,
        ..config.clone()
    };
    let lens = enumerate_word_lengths(&single);
    let gates = gate_calibrations(&config, &table, &lens)?;
    let run = simulate_word(&config, &gates, args.len, path)?;
    if args.show_gates {
        print!("{}", format_gates(&run.gates));
    }
    if let Some(out) = &args.schedule_out {
        run.schedule.save_json(out)?;
    }
    let r = &run.row;
    println!("word length     {}", r.word_len);
    println!("path            {}", r.path);
    println!("gates           {}", run.gates.len());
    println!("latency         {:.4} us ({} dt)", r.latency_ns / 1000.0, run.schedule.end_dt());
    println!("expected        {:.9}", r.expected_prob);
    println!("exact           {:.9}", r.exact_prob);
    println!("shots           {:.9} ({} shots, seed {})", r.shot_prob, config.shots, r.seed);
    println!("abs error       {:.9}", r.abs_error_exact);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate(a) => cmd_calibrate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Report(a) => cmd_report(&a),
        Command::SimulateWord(a) => cmd_simulate(&a),
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
