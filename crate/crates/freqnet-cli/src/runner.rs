//! Experiment dispatch and artifact persistence.

use crate::bundle::{write_bundle, ArrayRef};
use crate::config::{Experiment, PhaseChoice, RunConfig};
use freqnet::experiments::{
    estimate_n_in, estimate_n_in_grid, run_beamsplitter_demo, scan_bin_width,
    scan_network_size, BinShape, DemoConfig, HardwareBudget, PhasePattern, ScalingScanConfig,
    ScanResult,
};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub enum RunError {
    Lib(freqnet::Error),
    Io(io::Error),
    Config(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Lib(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "io: {e}"),
            RunError::Config(msg) => write!(f, "config: {msg}"),
        }
    }
}

impl From<freqnet::Error> for RunError {
    fn from(e: freqnet::Error) -> Self {
        RunError::Lib(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

impl RunError {
    /// 1 for numerical failures inside the simulation, 2 for everything
    /// a user can fix in the configuration or environment.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Lib(freqnet::Error::Numerical(_)) => 1,
            _ => 2,
        }
    }
}

fn format_metric(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

/// Scan table: one row per record, axis coordinates first, empty metric
/// fields for infeasible points.
fn write_scan_csv(path: &Path, result: &ScanResult) -> io::Result<()> {
    let mut text = String::new();
    let axis_names: Vec<&str> = result.axes.iter().map(|a| a.name.as_str()).collect();
    text.push_str(&axis_names.join(","));
    text.push_str(",purity,squeezing_db,feasible,symplectic_min\n");
    for record in &result.records {
        for coord in &record.coords {
            text.push_str(&format!("{coord:.16e},"));
        }
        text.push_str(&format!(
            "{},{},{},{}\n",
            format_metric(record.purity),
            format_metric(record.squeezing_db),
            record.feasible,
            format_metric(record.symplectic_min)
        ));
    }
    fs::write(path, text)
}

fn write_run_manifest(
    dir: &Path,
    config: &RunConfig,
    compute_seconds: f64,
    write_seconds: f64,
) -> Result<(), RunError> {
    let manifest = serde_json::json!({
        "experiment": config.experiment.name(),
        "library-version": env!("CARGO_PKG_VERSION"),
        "provenance": config.provenance_hash(),
        "config": config,
        "timings-seconds": {
            "compute": compute_seconds,
            "write": write_seconds,
        },
    });
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| RunError::Config(format!("manifest serialization: {e}")))?;
    fs::write(dir.join("run_manifest.json"), text)?;
    Ok(())
}

fn ensure_dir(config: &RunConfig) -> Result<PathBuf, RunError> {
    let dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn run_demo(config: &RunConfig) -> Result<(), RunError> {
    let dir = ensure_dir(config)?;
    let started = Instant::now();
    let artifacts = run_beamsplitter_demo(&DemoConfig {
        grid_n: config.grid_n,
        fwhm_jsa: config.demo.fwhm_jsa,
        fwhm_bin: config.demo.fwhm_bin,
        mean_photons: config.demo.mean_photons,
    })?;
    let compute_seconds = started.elapsed().as_secs_f64();
    log::info!(
        "demo finished in {compute_seconds:.2}s: purity {:.6}, squeezing {:.4} dB",
        artifacts.metrics.purity_out,
        artifacts.metrics.squeezing_out_db
    );

    let writing = Instant::now();
    let hash = config.provenance_hash();
    write_bundle(&dir, "jsa", ArrayRef::Complex(artifacts.jsa.values()), &hash)?;
    write_bundle(&dir, "tf", ArrayRef::Complex(artifacts.tf.values()), &hash)?;
    write_bundle(&dir, "sigma_pdc", ArrayRef::Real(artifacts.sigma_pdc.entries()), &hash)?;
    write_bundle(&dir, "sigma_out", ArrayRef::Real(artifacts.sigma_out.entries()), &hash)?;
    let metrics = serde_json::json!({
        "purity": artifacts.metrics.purity_out,
        "squeezing-db": artifacts.metrics.squeezing_out_db,
        "symplectic-min": artifacts.metrics.symplectic_min_out,
        "scale": artifacts.metrics.scale,
        "conversion-angles": artifacts.metrics.conversion_angles,
        "oracle-max-dev": artifacts.metrics.oracle_max_dev,
    });
    fs::write(
        dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics)
            .map_err(|e| RunError::Config(format!("metrics serialization: {e}")))?,
    )?;
    write_run_manifest(&dir, config, compute_seconds, writing.elapsed().as_secs_f64())?;
    Ok(())
}

fn run_binwidth_scan(config: &RunConfig) -> Result<(), RunError> {
    let dir = ensure_dir(config)?;
    let widths = config.scan_binwidth.widths.materialize();
    let started = Instant::now();
    let result = scan_bin_width(&widths, &config.scan_binwidth.mean_photons, config.grid_n)?;
    let compute_seconds = started.elapsed().as_secs_f64();
    let writing = Instant::now();
    write_scan_csv(&dir.join("scan.csv"), &result)?;
    write_run_manifest(&dir, config, compute_seconds, writing.elapsed().as_secs_f64())?;
    Ok(())
}

fn run_scaling_scan(config: &RunConfig) -> Result<(), RunError> {
    let dir = ensure_dir(config)?;
    let section = &config.scan_scaling;
    let scan_config = ScalingScanConfig {
        grid_n: config.grid_n,
        n_bins: section.n_bins.materialize(),
        widths: section.widths.materialize(),
        fwhm_jsa_list: section.fwhm_jsa.clone(),
        phase: match section.phase {
            PhaseChoice::Equal => PhasePattern::Equal,
            PhaseChoice::Alternating => PhasePattern::Alternating,
        },
        bin_shape: BinShape::Box,
        explicit_centers: None,
        mean_photons: section.mean_photons,
    };
    let started = Instant::now();
    let result = scan_network_size(&scan_config)?;
    let compute_seconds = started.elapsed().as_secs_f64();
    let writing = Instant::now();
    write_scan_csv(&dir.join("scan.csv"), &result)?;
    write_run_manifest(&dir, config, compute_seconds, writing.elapsed().as_secs_f64())?;
    Ok(())
}

fn run_estimate(config: &RunConfig) -> Result<(), RunError> {
    let section = &config.estimate_nin;
    let budget = HardwareBudget {
        input_range: section.input_range,
        pump_bandwidth: section.pump_bandwidth,
        n_outputs: section.n_outputs,
        pdc_resolution: section.pdc_resolution,
        mqpg_resolution: section.mqpg_resolution,
    };
    let started = Instant::now();
    let n = estimate_n_in(&budget)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{n}")?;
    stdout.flush()?;

    match (&section.pump_bandwidths, &section.resolutions) {
        (Some(bandwidths), Some(resolutions)) => {
            let dir = ensure_dir(config)?;
            let table = estimate_n_in_grid(&budget, bandwidths, resolutions)?;
            let mut text = String::from("pump-bandwidth,resolution,n-in\n");
            for (bw, delta, count) in &table {
                text.push_str(&format!("{bw:.16e},{delta:.16e},{count}\n"));
            }
            fs::write(dir.join("nin_grid.csv"), text)?;
            write_run_manifest(&dir, config, started.elapsed().as_secs_f64(), 0.0)?;
        }
        (None, None) => {
            if config.output_dir.is_some() {
                let dir = ensure_dir(config)?;
                write_run_manifest(&dir, config, started.elapsed().as_secs_f64(), 0.0)?;
            }
        }
        _ => {
            return Err(RunError::Config(
                "estimate-nin grid table needs both pump-bandwidths and resolutions".into(),
            ));
        }
    }
    Ok(())
}

pub fn run(config: &RunConfig) -> Result<(), RunError> {
    match config.experiment {
        Experiment::DemoBeamsplitter => run_demo(config),
        Experiment::ScanBinwidth => run_binwidth_scan(config),
        Experiment::ScanScaling => run_scaling_scan(config),
        Experiment::EstimateNin => run_estimate(config),
    }
}
