//! Run configuration: TOML sections per experiment, strict key checking,
//! range validation with key paths, and a provenance hash over the physics
//! fields.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DemoBeamsplitter,
    ScanBinwidth,
    ScanScaling,
    EstimateNin,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::DemoBeamsplitter => "demo-beamsplitter",
            Experiment::ScanBinwidth => "scan-binwidth",
            Experiment::ScanScaling => "scan-scaling",
            Experiment::EstimateNin => "estimate-nin",
        }
    }
}

/// Either an explicit list of values or an even spacing over an interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum AxisSpec {
    List(Vec<f64>),
    Linspace { start: f64, stop: f64, count: usize },
}

impl AxisSpec {
    pub fn materialize(&self) -> Vec<f64> {
        match self {
            AxisSpec::List(values) => values.clone(),
            AxisSpec::Linspace { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*count)
                    .map(|i| start + (stop - start) * i as f64 / (*count - 1) as f64)
                    .collect(),
            },
        }
    }

    fn check_fractions(&self, path: &str) -> Result<(), String> {
        for v in self.materialize() {
            check_fraction(v, path)?;
        }
        Ok(())
    }
}

/// Bin counts as an explicit list or an inclusive integer range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CountSpec {
    List(Vec<usize>),
    Range { start: usize, stop: usize },
}

impl CountSpec {
    pub fn materialize(&self) -> Vec<usize> {
        match self {
            CountSpec::List(values) => values.clone(),
            CountSpec::Range { start, stop } => (*start..=*stop).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct DemoSection {
    pub fwhm_jsa: f64,
    pub fwhm_bin: f64,
    pub mean_photons: f64,
}

impl Default for DemoSection {
    fn default() -> Self {
        DemoSection { fwhm_jsa: 0.05, fwhm_bin: 0.1, mean_photons: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct BinwidthSection {
    pub widths: AxisSpec,
    pub mean_photons: Vec<f64>,
}

impl Default for BinwidthSection {
    fn default() -> Self {
        BinwidthSection {
            widths: AxisSpec::Linspace { start: 0.006, stop: 0.15, count: 30 },
            mean_photons: vec![0.25, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseChoice {
    Equal,
    Alternating,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ScalingSection {
    pub n_bins: CountSpec,
    pub widths: AxisSpec,
    pub fwhm_jsa: Vec<f64>,
    pub phase: PhaseChoice,
    pub mean_photons: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection {
            n_bins: CountSpec::Range { start: 2, stop: 20 },
            widths: AxisSpec::Linspace { start: 0.01, stop: 0.3, count: 30 },
            fwhm_jsa: vec![0.05, 0.02, 0.01],
            phase: PhaseChoice::Equal,
            mean_photons: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct EstimateSection {
    pub input_range: f64,
    pub pump_bandwidth: f64,
    pub n_outputs: usize,
    pub pdc_resolution: f64,
    pub mqpg_resolution: f64,
    /// Optional heat-map axes; when both are present a grid table is written.
    pub pump_bandwidths: Option<Vec<f64>>,
    pub resolutions: Option<Vec<f64>>,
}

impl Default for EstimateSection {
    fn default() -> Self {
        EstimateSection {
            input_range: 5.0,
            pump_bandwidth: 4.0,
            n_outputs: 1,
            pdc_resolution: 0.01,
            mqpg_resolution: 0.02,
            pump_bandwidths: None,
            resolutions: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub demo: DemoSection,
    #[serde(default)]
    pub scan_binwidth: BinwidthSection,
    #[serde(default)]
    pub scan_scaling: ScalingSection,
    #[serde(default)]
    pub estimate_nin: EstimateSection,
}

fn default_grid_n() -> usize {
    1500
}

fn check_fraction(value: f64, path: &str) -> Result<(), String> {
    if !value.is_finite() || value <= 0.0 || value >= 1.0 {
        return Err(format!("{path}: fraction {value} outside (0, 1)"));
    }
    Ok(())
}

fn check_positive(value: f64, path: &str) -> Result<(), String> {
    if !value.is_finite() || value <= 0.0 {
        return Err(format!("{path}: value {value} must be positive"));
    }
    Ok(())
}

impl RunConfig {
    /// Parses strict TOML and validates ranges; error strings carry the
    /// offending key path.
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        let config: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.grid_n < 64 {
            return Err(format!("grid-n: {} below the minimum of 64", self.grid_n));
        }
        check_fraction(self.demo.fwhm_jsa, "demo.fwhm-jsa")?;
        check_fraction(self.demo.fwhm_bin, "demo.fwhm-bin")?;
        check_positive(self.demo.mean_photons, "demo.mean-photons")?;
        self.scan_binwidth.widths.check_fractions("scan-binwidth.widths")?;
        for &n in &self.scan_binwidth.mean_photons {
            check_positive(n, "scan-binwidth.mean-photons")?;
        }
        self.scan_scaling.widths.check_fractions("scan-scaling.widths")?;
        for &f in &self.scan_scaling.fwhm_jsa {
            check_fraction(f, "scan-scaling.fwhm-jsa")?;
        }
        check_positive(self.scan_scaling.mean_photons, "scan-scaling.mean-photons")?;
        if self.scan_scaling.n_bins.materialize().is_empty() {
            return Err("scan-scaling.n-bins: empty".into());
        }
        let e = &self.estimate_nin;
        check_positive(e.input_range, "estimate-nin.input-range")?;
        check_positive(e.pump_bandwidth, "estimate-nin.pump-bandwidth")?;
        check_positive(e.pdc_resolution, "estimate-nin.pdc-resolution")?;
        check_positive(e.mqpg_resolution, "estimate-nin.mqpg-resolution")?;
        if e.n_outputs == 0 {
            return Err("estimate-nin.n-outputs: must be at least 1".into());
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON rendering of every physics field.
    /// The output directory is excluded so identical runs into different
    /// directories produce identical artifacts.
    pub fn provenance_hash(&self) -> String {
        let mut hashed = self.clone();
        hashed.output_dir = None;
        let canonical =
            serde_json::to_string(&hashed).expect("config serialization cannot fail");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(hex, "{byte:02x}").unwrap();
        }
        hex
    }
}
