//! End-to-end scenario runs: simulate, invert, combine, score, export.

use crate::combine::{CombineMode, CombineOptions, CombinedImage, StreamingCombiner};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::export;
use crate::forward::{simulate, MeasurementDataCube, SimulateOptions};
use crate::metrics::{mip, GroundTruthMask, MetricsReport};
use crate::pws::ImagingOperator;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Outcome of a pipeline run: artifact list, metrics and stage timings.
#[derive(Debug)]
pub struct PipelineReport {
    pub out_dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub warnings: Vec<String>,
    pub stage_seconds: Vec<(&'static str, f64)>,
    pub metrics: Vec<MetricsReport>,
    /// Set when the combined images carried no energy (empty scene with
    /// the incident field excluded).
    pub zero_flagged: bool,
}

/// Runs the configured pipeline, writing all artifacts under `out_dir`.
/// Partial outputs are removed when a stage fails. Stage timings go to
/// stderr, never into artifacts, so outputs stay byte-reproducible.
pub fn run_pipeline(config: &ScenarioConfig, out_dir: &Path) -> Result<PipelineReport> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut created: Vec<PathBuf> = Vec::new();
    match run_stages(config, out_dir, &mut created) {
        Ok(report) => Ok(report),
        Err(e) => {
            for f in created.iter().rev() {
                let _ = std::fs::remove_file(f);
            }
            Err(e)
        }
    }
}

fn run_stages(
    config: &ScenarioConfig,
    out_dir: &Path,
    created: &mut Vec<PathBuf>,
) -> Result<PipelineReport> {
    let warnings = config.validate()?;
    for w in &warnings {
        eprintln!("[config] warning: {w}");
    }
    match config.pipeline.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Inconsistent(format!("thread pool: {e}")))?;
            pool.install(|| run_pipeline_inner(config, out_dir, created, warnings))
        }
        None => run_pipeline_inner(config, out_dir, created, warnings),
    }
}

fn stage<T>(
    name: &'static str,
    timings: &mut Vec<(&'static str, f64)>,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let result = f();
    let secs = start.elapsed().as_secs_f64();
    match &result {
        Ok(_) => eprintln!("[pipeline] {name}: {secs:.2} s"),
        Err(e) => eprintln!("[pipeline] {name} failed after {secs:.2} s: {e}"),
    }
    timings.push((name, secs));
    result
}

fn run_pipeline_inner(
    config: &ScenarioConfig,
    out_dir: &Path,
    created: &mut Vec<PathBuf>,
    warnings: Vec<String>,
) -> Result<PipelineReport> {
    let mut timings: Vec<(&'static str, f64)> = Vec::new();
    let settings = &config.pipeline;

    // resolved config echo, for provenance and the metrics subcommand
    let config_path = out_dir.join("config.json");
    std::fs::write(&config_path, config.to_json_pretty())
        .map_err(|e| Error::io(config_path.display().to_string(), e))?;
    created.push(config_path.clone());

    let cube = stage("simulate", &mut timings, || {
        simulate(
            &config.scene,
            &config.tx_list,
            &config.grid,
            &config.plane,
            &config.pipeline.components,
            &SimulateOptions {
                include_incident: settings.include_incident,
                noise_snr_db: settings.noise_snr_db,
                seed: settings.seed,
            },
        )
    })?;

    let summary_path = out_dir.join("cube_summary.txt");
    write_cube_summary(&cube, &summary_path)?;
    created.push(summary_path.clone());

    let tx_subset: Vec<usize> = match &settings.tx_subset {
        Some(list) => sorted_unique(list),
        None => (0..config.tx_list.len()).collect(),
    };
    let freq_subset: Vec<usize> = match &settings.freq_subset {
        Some(list) => sorted_unique(list),
        None => (0..config.grid.len()).collect(),
    };
    let delta_k = subset_delta_k(&freq_subset, &config.grid)?;

    let combined = stage("invert+combine", &mut timings, || {
        let operator = ImagingOperator::new(&config.plane, &config.volume, settings.padding_factor)?;
        let mut coherent = settings.mode.coherent().then(|| {
            StreamingCombiner::with_delta_k(
                &config.grid,
                &config.tx_list,
                delta_k,
                CombineMode::Coherent,
                CombineOptions::default(),
            )
        });
        let mut incoherent = settings.mode.incoherent().then(|| {
            StreamingCombiner::with_delta_k(
                &config.grid,
                &config.tx_list,
                delta_k,
                CombineMode::Incoherent,
                CombineOptions::default(),
            )
        });
        for &n in &tx_subset {
            for &f in &freq_subset {
                let image = operator.image(&cube, n, f)?;
                if let Some(c) = coherent.as_mut() {
                    c.push(&image)?;
                }
                if let Some(c) = incoherent.as_mut() {
                    c.push(&image)?;
                }
            }
        }
        let mut out: Vec<(&'static str, CombinedImage)> = Vec::new();
        if let Some(c) = coherent {
            out.push(("coherent", c.finish()?));
        }
        if let Some(c) = incoherent {
            out.push(("incoherent", c.finish()?));
        }
        Ok(out)
    })?;

    let zero_flagged = combined.iter().all(|(_, img)| img.is_empty_image());
    if zero_flagged {
        eprintln!("[pipeline] combined images carry no energy (zero-flagged)");
    }

    let truth = if config.scene.is_empty() {
        None
    } else {
        Some(GroundTruthMask::from_scene(&config.scene, &config.volume)?)
    };

    let mut metrics_rows = Vec::new();
    stage("score+export", &mut timings, || {
        for (mode_name, image) in &combined {
            let vol_path = out_dir.join(format!("combined_{mode_name}.raw"));
            export::write_volume(
                image,
                &vol_path,
                &format!("{} {} ({} terms)", config.name, mode_name, image.provenance().len()),
            )?;
            created.push(vol_path.clone());
            created.push(vol_path.with_extension("hdr"));

            for axis in &settings.mip_axes {
                let map = mip(image, *axis);
                let map_path = out_dir.join(format!("mip_{mode_name}_{axis}.pgm"));
                export::write_pgm(&map, &map_path, settings.db_floor)?;
                created.push(map_path.clone());
                created.push(map_path.with_extension("txt"));
            }

            if let Some(truth) = &truth {
                if !image.is_empty_image() {
                    metrics_rows.push(MetricsReport::compute(
                        format!("{}:{mode_name}", config.name),
                        image,
                        truth,
                        settings.coverage_threshold_db,
                    )?);
                }
            }
        }
        let csv_path = out_dir.join("metrics.csv");
        export::write_metrics_csv(&metrics_rows, &csv_path)?;
        created.push(csv_path.clone());
        Ok(())
    })?;

    let manifest = export::write_manifest(out_dir, created)?;
    Ok(PipelineReport {
        out_dir: out_dir.to_path_buf(),
        artifacts: created.clone(),
        manifest,
        warnings,
        stage_seconds: timings,
        metrics: metrics_rows,
        zero_flagged,
    })
}

fn sorted_unique(list: &[usize]) -> Vec<usize> {
    let mut v = list.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Wavenumber spacing of a uniform frequency-index subset; 1.0 for a
/// single index, error for non-uniform subsets.
pub fn subset_delta_k(freq_subset: &[usize], grid: &crate::grids::FrequencyGrid) -> Result<f64> {
    if freq_subset.is_empty() {
        return Err(Error::invalid("subset", "frequency subset must be non-empty"));
    }
    if freq_subset.len() == 1 {
        return Ok(1.0);
    }
    let stride = freq_subset[1] - freq_subset[0];
    for w in freq_subset.windows(2) {
        if w[1] - w[0] != stride {
            return Err(Error::invalid(
                "subset",
                "frequency subset must be uniformly spaced",
            ));
        }
    }
    Ok(grid.delta_k() * stride as f64)
}

fn write_cube_summary(cube: &MeasurementDataCube, path: &Path) -> Result<()> {
    let components: Vec<String> = cube.components().iter().map(|c| c.to_string()).collect();
    let text = format!(
        "tx_count = {}\nfrequency_count = {}\ncomponents = {}\nplane_samples = {}\nincludes_incident = {}\nmean_power = {:.9e}\n",
        cube.num_tx(),
        cube.num_freqs(),
        components.join(","),
        cube.num_samples(),
        cube.includes_incident(),
        cube.mean_power(),
    );
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}
