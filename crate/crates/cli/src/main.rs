//! `nfpri` — run near-field passive radar imaging scenarios from the
//! command line: simulate planar measurements, invert, combine across
//! frequencies and transmitters, score and export.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nfpri_core::config::{parse_config, preset, RunMode, ScenarioConfig};
use nfpri_core::error::Error;
use nfpri_core::export::read_volume;
use nfpri_core::grids::ImagingVolume;
use nfpri_core::metrics::{GroundTruthMask, MetricsReport};
use nfpri_core::pipeline::run_pipeline;
use nfpri_core::CombinedImage;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nfpri",
    about = "Near-field passive radar imaging toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct RunFlags {
    /// Output directory for artifacts (overrides the config's output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Combination mode override
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RunMode>,
    /// Transmitter indices to combine, comma separated (e.g. 0,3,6)
    #[arg(long, value_delimiter = ',')]
    tx_subset: Option<Vec<usize>>,
    /// Frequency indices to combine, comma separated, uniformly spaced
    #[arg(long, value_delimiter = ',')]
    freq_subset: Option<Vec<usize>>,
    /// Worker thread count (defaults to the number of cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a scenario config file
    Run {
        /// Scenario JSON path
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run (or emit) one of the built-in scenarios
    Preset {
        /// pyramid | dihedral | pointcal
        name: String,
        /// CI-sized variant: decimated plane and frequency grid
        #[arg(long)]
        fast: bool,
        /// Print the scenario JSON instead of running it
        #[arg(long)]
        emit_config: bool,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Score an exported intensity volume against scenario ground truth
    Metrics {
        /// Raw volume path (expects the .hdr sidecar next to it)
        volume: PathBuf,
        /// Scenario JSON providing the ground-truth scene
        truth: PathBuf,
        /// Coverage threshold in dB (negative)
        #[arg(long, default_value_t = -10.0)]
        threshold_db: f64,
    },
}

fn parse_mode(s: &str) -> Result<RunMode, String> {
    match s {
        "coherent" => Ok(RunMode::Coherent),
        "incoherent" => Ok(RunMode::Incoherent),
        "both" => Ok(RunMode::Both),
        other => Err(format!(
            "unknown mode '{other}' (expected coherent, incoherent or both)"
        )),
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Invalid { .. } => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        Error::Inconsistent(_) | Error::Degenerate(_) => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not errors; anything else is a usage /
            // configuration problem
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn dispatch(cli: Cli) -> nfpri_core::Result<()> {
    match cli.command {
        Command::Run { config, flags } => {
            let cfg = parse_config(&config)?;
            run_with_flags(cfg, flags)
        }
        Command::Preset {
            name,
            fast,
            emit_config,
            flags,
        } => {
            let cfg = preset(&name, fast)?;
            if emit_config {
                println!("{}", cfg.to_json_pretty());
                return Ok(());
            }
            run_with_flags(cfg, flags)
        }
        Command::Metrics {
            volume,
            truth,
            threshold_db,
        } => score_volume(&volume, &truth, threshold_db),
    }
}

fn run_with_flags(mut cfg: ScenarioConfig, flags: RunFlags) -> nfpri_core::Result<()> {
    if let Some(mode) = flags.mode {
        cfg.pipeline.mode = mode;
    }
    if let Some(subset) = flags.tx_subset {
        cfg.pipeline.tx_subset = Some(subset);
    }
    if let Some(subset) = flags.freq_subset {
        cfg.pipeline.freq_subset = Some(subset);
    }
    if let Some(threads) = flags.threads {
        cfg.pipeline.threads = Some(threads);
    }
    let out_dir = flags
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("nfpri-out-{}", cfg.name)));

    let report = run_pipeline(&cfg, &out_dir)?;
    println!("wrote {} artifacts to {}", report.artifacts.len(), report.out_dir.display());
    for m in &report.metrics {
        println!(
            "{}: peak at ({:.3}, {:.3}, {:.3}) m, ghost-to-target {:.1} dB, coverage {:.3}, entropy {:.3}",
            m.label,
            m.peak_position.x,
            m.peak_position.y,
            m.peak_position.z,
            m.ghost_to_target_db,
            m.coverage,
            m.entropy
        );
    }
    if report.zero_flagged {
        println!("note: combined images carry no energy (zero-flagged)");
    }
    Ok(())
}

fn score_volume(volume: &Path, truth: &Path, threshold_db: f64) -> nfpri_core::Result<()> {
    let (values, header) = read_volume(volume)?;
    let need = |key: &str| -> nfpri_core::Result<f64> {
        header
            .get(key)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::Inconsistent(format!("volume header misses numeric '{key}'")))
    };
    let (nx, ny, nz) = (
        need("nx")? as usize,
        need("ny")? as usize,
        need("nz")? as usize,
    );
    let axis_max = |origin: f64, pitch: f64, n: usize| origin + pitch * (n - 1) as f64;
    let geometry = ImagingVolume::new(
        need("origin_x_m")?,
        axis_max(need("origin_x_m")?, need("pitch_x_m")?, nx),
        nx,
        need("origin_y_m")?,
        axis_max(need("origin_y_m")?, need("pitch_y_m")?, ny),
        ny,
        need("origin_z_m")?,
        axis_max(need("origin_z_m")?, need("pitch_z_m")?, nz),
        nz,
    )?;
    let image = CombinedImage::from_intensity(
        values.iter().map(|&v| v as f64).collect(),
        geometry,
        Vec::new(),
    )?;
    let cfg = parse_config(truth)?;
    let mask = GroundTruthMask::from_scene(&cfg.scene, image.geometry())?;
    let report = MetricsReport::compute(
        volume.display().to_string(),
        &image,
        &mask,
        threshold_db,
    )?;
    println!("label,peak_x_m,peak_y_m,peak_z_m,localization_error_m,ghost_to_target_db,coverage,coverage_threshold_db,entropy");
    println!(
        "{},{},{},{},{},{},{},{},{}",
        report.label,
        report.peak_position.x,
        report.peak_position.y,
        report.peak_position.z,
        report.localization_error_m,
        report.ghost_to_target_db,
        report.coverage,
        report.coverage_threshold_db,
        report.entropy
    );
    Ok(())
}
