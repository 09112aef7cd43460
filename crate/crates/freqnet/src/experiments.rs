//! End-to-end studies: the two-bin beamsplitter demonstration, parameter
//! scans over bin width and network size, and the input-dimensionality
//! estimate for a hardware budget.
//!
//! All pipelines run on the unit window [0, 1]; widths are fractions of it.

use rayon::prelude::*;

use crate::bogoliubov::{pdc_kernels, sfg_kernels, PdcKernels};
use crate::error::{Error, Result};
use crate::grid::{make_grid, FrequencyGrid};
use crate::network::{
    compose, covariance_from_amplitudes, ideal_output_oracle, pdc_bin_covariance,
    CovarianceMatrix,
};
use crate::processes::{
    build_mqpg_tf, build_type0_jsa, normalize_jsa, set_conversion_unity, PmProfile,
    ProcessKernel,
};
use crate::spectral::{
    box_bin, gaussian_bin, place_bins, BinPlacement, ModeSet, NetworkUnitary, SpectralFunction,
};

/// Pair-source width used by both scans, as in the demo default.
const SCAN_FWHM_JSA: f64 = 0.05;
/// Degeneracy point and output-peak center on the unit window.
const WINDOW_CENTER: f64 = 0.5;
/// The two-bin studies place their bins here.
const DEMO_CENTERS: [f64; 2] = [0.2, 0.8];
/// Width of the fixed converted output peak.
const OUTPUT_PEAK_FWHM: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub grid_n: usize,
    pub fwhm_jsa: f64,
    pub fwhm_bin: f64,
    pub mean_photons: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            grid_n: 1500,
            fwhm_jsa: 0.05,
            fwhm_bin: 0.1,
            mean_photons: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoMetrics {
    pub purity_out: f64,
    pub squeezing_out_db: f64,
    pub symplectic_min_out: f64,
    /// Gain scale that realizes the requested mean photon number.
    pub scale: f64,
    /// Schmidt angles of the converter after the unity rescale.
    pub conversion_angles: Vec<f64>,
    /// Largest entrywise gap between the pipeline covariance and the
    /// ideal-network reference.
    pub oracle_max_dev: f64,
}

#[derive(Debug, Clone)]
pub struct DemoArtifacts {
    pub jsa: ProcessKernel,
    pub tf: ProcessKernel,
    pub sigma_pdc: CovarianceMatrix,
    pub sigma_out: CovarianceMatrix,
    pub sigma_oracle: CovarianceMatrix,
    pub metrics: DemoMetrics,
}

fn gaussian_set(grid: FrequencyGrid, centers: &[f64], fwhm: f64) -> Result<ModeSet> {
    let modes = centers
        .iter()
        .map(|&c| gaussian_bin(grid, c, fwhm))
        .collect::<Result<Vec<_>>>()?;
    ModeSet::new(modes, centers.to_vec())
}

fn single_even_output(grid: FrequencyGrid) -> Result<ModeSet> {
    gaussian_set(grid, &[WINDOW_CENTER], OUTPUT_PEAK_FWHM)
}

fn max_abs_diff(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Runs the full two-bin frequency-beamsplitter pipeline: pair source,
/// unity-conversion gate on a balanced splitter, covariance readout, and
/// the ideal-network cross-check.
pub fn run_beamsplitter_demo(config: &DemoConfig) -> Result<DemoArtifacts> {
    let grid = make_grid(0.0, 1.0, config.grid_n)?;
    let jsa = build_type0_jsa(grid, WINDOW_CENTER, config.fwhm_jsa, PmProfile::Gaussian)?;
    let scale = normalize_jsa(&jsa, config.mean_photons)?;
    let pdc = pdc_kernels(&jsa, scale)?;

    let bins = gaussian_set(grid, &DEMO_CENTERS, config.fwhm_bin)?;
    let outs = gaussian_set(grid, &DEMO_CENTERS, config.fwhm_bin)?;
    let u = NetworkUnitary::balanced_beamsplitter();
    let raw_tf = build_mqpg_tf(&u, &bins, &outs)?;
    let (tf, conversion_angles) = set_conversion_unity(&raw_tf)?;
    let sfg = sfg_kernels(&tf)?;

    let amps = compose(&pdc, &sfg, &outs)?;
    let sigma_out = covariance_from_amplitudes(&amps);
    let sigma_pdc = pdc_bin_covariance(&pdc, &bins)?;
    let sigma_oracle = ideal_output_oracle(&u, &sigma_pdc)?;
    let oracle_max_dev = max_abs_diff(sigma_out.entries(), sigma_oracle.entries());

    let purity_out = sigma_out.purity()?;
    let squeezing_out_db = sigma_out.squeezing_db()?;
    let symplectic_min_out = sigma_out.symplectic_eigenvalues()?[0];
    Ok(DemoArtifacts {
        jsa,
        tf,
        sigma_pdc,
        sigma_out,
        sigma_oracle,
        metrics: DemoMetrics {
            purity_out,
            squeezing_out_db,
            symplectic_min_out,
            scale,
            conversion_angles,
            oracle_max_dev,
        },
    })
}

#[derive(Debug, Clone)]
pub struct ScanAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScanRecord {
    pub coords: Vec<f64>,
    pub feasible: bool,
    pub purity: Option<f64>,
    pub squeezing_db: Option<f64>,
    pub symplectic_min: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub axes: Vec<ScanAxis>,
    pub records: Vec<ScanRecord>,
}

fn axis(name: &str, values: &[f64]) -> ScanAxis {
    ScanAxis {
        name: name.to_string(),
        values: values.to_vec(),
    }
}

/// Converter + readout for one scan point: gate on `row`, unity
/// conversion, composition with the source, then (purity, squeezing,
/// minimum symplectic eigenvalue) of the single output mode.
fn single_output_point(
    pdc: &PdcKernels,
    bins: &ModeSet,
    row: &NetworkUnitary,
    peak: &ModeSet,
) -> Result<(f64, f64, f64)> {
    let raw_tf = build_mqpg_tf(row, bins, peak)?;
    let (tf, _) = set_conversion_unity(&raw_tf)?;
    let sfg = sfg_kernels(&tf)?;
    let amps = compose(pdc, &sfg, peak)?;
    let sigma = covariance_from_amplitudes(&amps);
    Ok((
        sigma.purity()?,
        sigma.squeezing_db()?,
        sigma.symplectic_eigenvalues()?[0],
    ))
}

fn finish_record(coords: Vec<f64>, outcome: Result<(f64, f64, f64)>) -> ScanRecord {
    match outcome {
        Ok((purity, squeezing_db, symplectic_min)) => ScanRecord {
            coords,
            feasible: true,
            purity: Some(purity),
            squeezing_db: Some(squeezing_db),
            symplectic_min: Some(symplectic_min),
            note: (symplectic_min < 0.5 - 1e-6)
                .then(|| "covariance fails the uncertainty check".to_string()),
        },
        Err(err) => ScanRecord {
            coords,
            feasible: false,
            purity: None,
            squeezing_db: None,
            symplectic_min: None,
            note: Some(err.to_string()),
        },
    }
}

/// Sweeps the width of the two Gaussian input bins for each mean photon
/// number, reading out the single even superposition (A₁ + A₂)/√2 through
/// a fixed output peak. Failed points are recorded as infeasible and the
/// scan continues.
pub fn scan_bin_width(widths: &[f64], n_means: &[f64], grid_n: usize) -> Result<ScanResult> {
    let grid = make_grid(0.0, 1.0, grid_n)?;
    let jsa = build_type0_jsa(grid, WINDOW_CENTER, SCAN_FWHM_JSA, PmProfile::Gaussian)?;
    jsa.schmidt()?;
    let pdcs = n_means
        .iter()
        .map(|&nb| {
            let scale = normalize_jsa(&jsa, nb)?;
            pdc_kernels(&jsa, scale)
        })
        .collect::<Result<Vec<_>>>()?;
    let peak = single_even_output(grid)?;
    let row = NetworkUnitary::equal_row(2)?;

    let points: Vec<(usize, usize)> = (0..widths.len())
        .flat_map(|i| (0..n_means.len()).map(move |j| (i, j)))
        .collect();
    let records: Vec<ScanRecord> = points
        .into_par_iter()
        .map(|(i, j)| {
            let outcome = gaussian_set(grid, &DEMO_CENTERS, widths[i])
                .and_then(|bins| single_output_point(&pdcs[j], &bins, &row, &peak));
            finish_record(vec![widths[i], n_means[j]], outcome)
        })
        .collect();
    Ok(ScanResult {
        axes: vec![axis("bin-width", widths), axis("mean-photons", n_means)],
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhasePattern {
    Equal,
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinShape {
    Box,
    Gaussian,
}

#[derive(Debug, Clone)]
pub struct ScalingScanConfig {
    pub grid_n: usize,
    pub n_bins: Vec<usize>,
    pub widths: Vec<f64>,
    pub fwhm_jsa_list: Vec<f64>,
    pub phase: PhasePattern,
    pub bin_shape: BinShape,
    /// Overrides the maximally spaced placement; requires `n_bins` to hold
    /// exactly the matching count.
    pub explicit_centers: Option<Vec<f64>>,
    pub mean_photons: f64,
}

impl Default for ScalingScanConfig {
    fn default() -> Self {
        let widths: Vec<f64> = (0..30).map(|k| 0.01 + 0.29 * k as f64 / 29.0).collect();
        ScalingScanConfig {
            grid_n: 1500,
            n_bins: (2..=20).collect(),
            widths,
            fwhm_jsa_list: vec![0.05, 0.02, 0.01],
            phase: PhasePattern::Equal,
            bin_shape: BinShape::Box,
            explicit_centers: None,
            mean_photons: 2.0,
        }
    }
}

fn scan_bins(
    grid: FrequencyGrid,
    n: usize,
    width: f64,
    shape: BinShape,
    explicit: Option<&[f64]>,
) -> Result<ModeSet> {
    let centers: Vec<f64> = match explicit {
        Some(c) => c.to_vec(),
        None => match place_bins(n, grid, WINDOW_CENTER, width)? {
            BinPlacement::Placed(set) => {
                if shape == BinShape::Box {
                    return Ok(set);
                }
                set.centers().to_vec()
            }
            BinPlacement::Infeasible { spacing, width } => {
                return Err(Error::config(format!(
                    "{n} bins of width {width} do not fit (spacing {spacing})"
                )));
            }
        },
    };
    let modes: Vec<SpectralFunction> = centers
        .iter()
        .map(|&c| match shape {
            BinShape::Box => box_bin(grid, c, width),
            BinShape::Gaussian => gaussian_bin(grid, c, width),
        })
        .collect::<Result<_>>()?;
    ModeSet::new(modes, centers)
}

/// Sweeps bin count, bin width and source bandwidth for a single-output
/// gate whose input row carries equal or alternating phases. Box bins are
/// placed maximally spaced; overlapping placements come back infeasible.
pub fn scan_network_size(config: &ScalingScanConfig) -> Result<ScanResult> {
    if config.n_bins.is_empty() {
        return Err(Error::config("at least one bin count is required"));
    }
    if let Some(centers) = &config.explicit_centers {
        if config.n_bins != vec![centers.len()] {
            return Err(Error::config(
                "explicit centers require n_bins to hold exactly their count",
            ));
        }
    }
    let grid = make_grid(0.0, 1.0, config.grid_n)?;
    let peak = single_even_output(grid)?;
    let pdcs = config
        .fwhm_jsa_list
        .iter()
        .map(|&f| {
            let jsa = build_type0_jsa(grid, WINDOW_CENTER, f, PmProfile::Gaussian)?;
            let scale = normalize_jsa(&jsa, config.mean_photons)?;
            pdc_kernels(&jsa, scale)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = config
        .n_bins
        .iter()
        .map(|&n| match config.phase {
            PhasePattern::Equal => NetworkUnitary::equal_row(n),
            PhasePattern::Alternating => NetworkUnitary::alternating_row(n),
        })
        .collect::<Result<Vec<_>>>()?;

    let shape = config.bin_shape;
    let explicit = config.explicit_centers.as_deref();
    let n_fwhm = config.fwhm_jsa_list.len();
    let points: Vec<(usize, usize, usize)> = (0..config.n_bins.len())
        .flat_map(|a| {
            (0..config.widths.len())
                .flat_map(move |b| (0..n_fwhm).map(move |c| (a, b, c)))
        })
        .collect();
    let records: Vec<ScanRecord> = points
        .into_par_iter()
        .map(|(a, b, c)| {
            let (n, width) = (config.n_bins[a], config.widths[b]);
            let outcome = scan_bins(grid, n, width, shape, explicit)
                .and_then(|bins| single_output_point(&pdcs[c], &bins, &rows[a], &peak));
            finish_record(
                vec![n as f64, width, config.fwhm_jsa_list[c]],
                outcome,
            )
        })
        .collect();
    Ok(ScanResult {
        axes: vec![
            ScanAxis {
                name: "n-bins".to_string(),
                values: config.n_bins.iter().map(|&n| n as f64).collect(),
            },
            axis("bin-width", &config.widths),
            axis("jsa-fwhm", &config.fwhm_jsa_list),
        ],
        records,
    })
}

/// Hardware limits determining how many input bins a physical device can
/// resolve: usable input range, gate pump bandwidth, number of output
/// channels, and the two phasematching resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareBudget {
    pub input_range: f64,
    pub pump_bandwidth: f64,
    pub n_outputs: usize,
    pub pdc_resolution: f64,
    pub mqpg_resolution: f64,
}

impl HardwareBudget {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("input range", self.input_range),
            ("pump bandwidth", self.pump_bandwidth),
            ("source resolution", self.pdc_resolution),
            ("gate resolution", self.mqpg_resolution),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::config(format!("{name} must be positive, got {value}")));
            }
        }
        if self.n_outputs == 0 {
            return Err(Error::config("at least one output channel is required"));
        }
        Ok(())
    }
}

/// Number of input bins supported by the budget:
/// ⌊min(range, pump/N_out) / max(δ_source, δ_gate)⌋.
pub fn estimate_n_in(budget: &HardwareBudget) -> Result<usize> {
    budget.validate()?;
    let usable = budget
        .input_range
        .min(budget.pump_bandwidth / budget.n_outputs as f64);
    let resolution = budget.pdc_resolution.max(budget.mqpg_resolution);
    // The tiny relief keeps exact ratios (e.g. 4/0.02) from losing their
    // last count to floating-point rounding.
    Ok(((usable / resolution) * (1.0 + 1e-12)).floor() as usize)
}

/// `estimate_n_in` over a grid of pump bandwidths and common resolutions
/// (both phasematching widths set to the scanned value). Rows iterate
/// bandwidths, columns resolutions.
pub fn estimate_n_in_grid(
    base: &HardwareBudget,
    pump_bandwidths: &[f64],
    resolutions: &[f64],
) -> Result<Vec<(f64, f64, usize)>> {
    let mut out = Vec::with_capacity(pump_bandwidths.len() * resolutions.len());
    for &bw in pump_bandwidths {
        for &delta in resolutions {
            let budget = HardwareBudget {
                pump_bandwidth: bw,
                pdc_resolution: delta,
                mqpg_resolution: delta,
                ..*base
            };
            out.push((bw, delta, estimate_n_in(&budget)?));
        }
    }
    Ok(out)
}
