//! Process kernels: construction of pair-source spectra (symmetric kernels
//! over one grid) and frequency-converter transfer functions (kernels from
//! an input to an output grid), plus their gain normalization.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use once_cell::sync::OnceCell;

use crate::bogoliubov::{self, SchmidtData};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::spectral::{gauss_amp, superposition_mode, ModeSet, NetworkUnitary, SpectralFunction};

/// What a kernel describes: a pair source's joint spectrum (symmetric, one
/// grid) or a converter's transfer function (input grid → output grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Jsa,
    Tf,
}

/// Exact factored form of a kernel built as Σ_m inputs_m(ω_in)·outputs_m(ω_out),
/// kept so downstream decompositions can skip the dense SVD.
#[derive(Debug, Clone)]
pub struct SeparableFactors {
    pub(crate) inputs: Vec<SpectralFunction>,
    pub(crate) outputs: Vec<SpectralFunction>,
    pub(crate) amplitude: f64,
}

/// Sampled two-argument kernel. Rows run over the first argument (ω or
/// ω_in), columns over the second (ω′ or ω_out).
///
/// Symmetric kernels must satisfy ‖K−Kᵀ‖_F ≤ 1e-10·‖K‖_F at construction.
/// The Schmidt/Takagi factorization is computed lazily and cached; rescaled
/// copies inherit it, so parameter scans factorize each base kernel once.
#[derive(Debug, Clone)]
pub struct ProcessKernel {
    grid_rows: FrequencyGrid,
    grid_cols: FrequencyGrid,
    values: Array2<Complex64>,
    kind: KernelKind,
    separable: Option<SeparableFactors>,
    schmidt_cache: OnceCell<Arc<SchmidtData>>,
}

fn frob(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_finite(values: &Array2<Complex64>) -> Result<()> {
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::validation("kernel contains non-finite samples"));
    }
    Ok(())
}

impl ProcessKernel {
    /// Wraps a symmetric pair-source kernel sampled on `grid`×`grid`.
    pub fn jsa(grid: FrequencyGrid, values: Array2<Complex64>) -> Result<Self> {
        let n = grid.n_points();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::usage(format!(
                "kernel shape {:?} does not match a {n}-point grid",
                values.dim()
            )));
        }
        check_finite(&values)?;
        let norm = frob(&values);
        let asym = frob(&(&values - &values.t()));
        if asym > 1e-10 * norm {
            return Err(Error::validation(format!(
                "pair-source kernel must be symmetric: ‖K−Kᵀ‖/‖K‖ = {:.3e}",
                asym / norm
            )));
        }
        Ok(ProcessKernel {
            grid_rows: grid,
            grid_cols: grid,
            values,
            kind: KernelKind::Jsa,
            separable: None,
            schmidt_cache: OnceCell::new(),
        })
    }

    /// Wraps a transfer function sampled on `grid_in` (rows) × `grid_out`
    /// (columns).
    pub fn tf(
        grid_in: FrequencyGrid,
        grid_out: FrequencyGrid,
        values: Array2<Complex64>,
    ) -> Result<Self> {
        if values.nrows() != grid_in.n_points() || values.ncols() != grid_out.n_points() {
            return Err(Error::usage(format!(
                "kernel shape {:?} does not match grids of {} × {} points",
                values.dim(),
                grid_in.n_points(),
                grid_out.n_points()
            )));
        }
        check_finite(&values)?;
        Ok(ProcessKernel {
            grid_rows: grid_in,
            grid_cols: grid_out,
            values,
            kind: KernelKind::Tf,
            separable: None,
            schmidt_cache: OnceCell::new(),
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn grid_rows(&self) -> FrequencyGrid {
        self.grid_rows
    }

    pub fn grid_cols(&self) -> FrequencyGrid {
        self.grid_cols
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    /// Discretized operator matrix: samples × √(Δω_row·Δω_col).
    pub fn gain_matrix(&self) -> Array2<Complex64> {
        let w = if self.grid_rows == self.grid_cols {
            self.grid_rows.step()
        } else {
            (self.grid_rows.step() * self.grid_cols.step()).sqrt()
        };
        &self.values * Complex64::from(w)
    }

    /// The kernel's mode decomposition (Takagi for symmetric kernels, SVD
    /// otherwise), computed on first use and shared afterwards.
    pub fn schmidt(&self) -> Result<Arc<SchmidtData>> {
        self.schmidt_cache
            .get_or_try_init(|| bogoliubov::decompose(self).map(Arc::new))
            .cloned()
    }

    pub(crate) fn separable(&self) -> Option<&SeparableFactors> {
        self.separable.as_ref()
    }

    /// Kernel multiplied by a nonnegative factor. An already-computed
    /// decomposition carries over (coefficients are linear in the kernel).
    pub(crate) fn scaled(&self, factor: f64) -> Self {
        debug_assert!(factor >= 0.0 && factor.is_finite());
        let cache = OnceCell::new();
        if let Some(data) = self.schmidt_cache.get() {
            let _ = cache.set(Arc::new(data.scaled(factor)));
        }
        ProcessKernel {
            grid_rows: self.grid_rows,
            grid_cols: self.grid_cols,
            values: &self.values * Complex64::from(factor),
            kind: self.kind,
            separable: self.separable.as_ref().map(|s| SeparableFactors {
                inputs: s.inputs.clone(),
                outputs: s.outputs.clone(),
                amplitude: s.amplitude * factor,
            }),
            schmidt_cache: cache,
        }
    }
}

/// Phasematching cross-section profile.
///
/// `width` means the intensity FWHM for a Gaussian and the distance from
/// the peak to the first zero for a sinc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmProfile {
    Gaussian,
    Sinc,
}

impl PmProfile {
    pub fn amplitude(&self, x: f64, width: f64) -> f64 {
        match self {
            PmProfile::Gaussian => gauss_amp(x, width),
            PmProfile::Sinc => {
                let t = std::f64::consts::PI * x / width;
                if t.abs() < 1e-12 {
                    1.0
                } else {
                    t.sin() / t
                }
            }
        }
    }
}

/// Orientation of the phasematching ridge in the (ω_row, ω_col) plane.
#[derive(Debug, Clone, PartialEq)]
pub enum PmOrientation {
    /// Pair-source ridge along ω + ω′ = sum_center; the profile argument is
    /// the perpendicular distance (ω + ω′ − sum_center)/√2.
    AntiDiagonal { sum_center: f64 },
    /// Converter output channels: one ridge per ω_out peak, independent of
    /// ω_in.
    Horizontal { peak_centers: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasematchingModel {
    profile: PmProfile,
    width: f64,
    orientation: PmOrientation,
}

impl PhasematchingModel {
    pub fn antidiagonal(profile: PmProfile, width: f64, sum_center: f64) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::config(format!(
                "phasematching width must be positive, got {width}"
            )));
        }
        if !sum_center.is_finite() {
            return Err(Error::config("phasematching sum center must be finite"));
        }
        Ok(PhasematchingModel {
            profile,
            width,
            orientation: PmOrientation::AntiDiagonal { sum_center },
        })
    }

    pub fn horizontal(profile: PmProfile, width: f64, peak_centers: Vec<f64>) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::config(format!(
                "phasematching width must be positive, got {width}"
            )));
        }
        if peak_centers.is_empty() {
            return Err(Error::config("at least one output peak is required"));
        }
        for pair in peak_centers.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::config(
                    "output peak centers must be strictly increasing",
                ));
            }
            if pair[1] - pair[0] < width {
                return Err(Error::config(format!(
                    "output peaks at {} and {} overlap at width {width}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(PhasematchingModel {
            profile,
            width,
            orientation: PmOrientation::Horizontal { peak_centers },
        })
    }

    pub fn profile(&self) -> PmProfile {
        self.profile
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn orientation(&self) -> &PmOrientation {
        &self.orientation
    }

    /// Phasematching amplitude at one sample point.
    pub fn amplitude(&self, omega_row: f64, omega_col: f64) -> f64 {
        match &self.orientation {
            PmOrientation::AntiDiagonal { sum_center } => self.profile.amplitude(
                (omega_row + omega_col - sum_center) / std::f64::consts::SQRT_2,
                self.width,
            ),
            PmOrientation::Horizontal { peak_centers } => peak_centers
                .iter()
                .map(|c| self.profile.amplitude(omega_col - c, self.width))
                .sum(),
        }
    }
}

/// Degenerate pair-source kernel: a ridge along ω + ω′ = 2ω₀ whose
/// cross-section is the given profile of the stated width.
///
/// The value depends on the two frequencies only through their sum, so the
/// sampled kernel is bitwise symmetric. The width must resolve on the grid
/// (more than three steps across).
pub fn build_type0_jsa(
    grid: FrequencyGrid,
    omega0: f64,
    fwhm_jsa: f64,
    profile: PmProfile,
) -> Result<ProcessKernel> {
    if !fwhm_jsa.is_finite() || fwhm_jsa <= 0.0 {
        return Err(Error::config(format!(
            "kernel width must be positive, got {fwhm_jsa}"
        )));
    }
    if fwhm_jsa <= 3.0 * grid.step() {
        return Err(Error::resolution(format!(
            "kernel width {fwhm_jsa} spans at most 3 grid steps of {}",
            grid.step()
        )));
    }
    let sum = 2.0 * omega0;
    if sum < 2.0 * grid.start() || sum > 2.0 * grid.stop() {
        return Err(Error::config(format!(
            "degeneracy point {omega0} lies outside the grid window [{}, {}]",
            grid.start(),
            grid.stop()
        )));
    }
    let pm = PhasematchingModel::antidiagonal(profile, fwhm_jsa, sum)?;
    let n = grid.n_points();
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        Complex64::from(pm.amplitude(grid.value(i), grid.value(j)))
    });
    ProcessKernel::jsa(grid, values)
}

/// Pair-source kernel as pump spectrum times phasematching:
/// f(ω,ω′) = P(ω+ω′)·Φ(ω,ω′), symmetrized exactly after sampling.
///
/// The pump grid must cover the full sum-frequency range of the kernel
/// grid; the phasematching must be a pair-source (antidiagonal) model.
pub fn build_jsa_from_pump_pm(
    pump: &SpectralFunction,
    pm: &PhasematchingModel,
    grid: FrequencyGrid,
) -> Result<ProcessKernel> {
    if !matches!(pm.orientation(), PmOrientation::AntiDiagonal { .. }) {
        return Err(Error::usage(
            "pair-source kernels need an antidiagonal phasematching model",
        ));
    }
    let (lo, hi) = (2.0 * grid.start(), 2.0 * grid.stop());
    let pg = pump.grid();
    if pg.start() > lo || pg.stop() < hi {
        return Err(Error::config(format!(
            "pump grid [{}, {}] does not cover the sum-frequency range [{lo}, {hi}]",
            pg.start(),
            pg.stop()
        )));
    }
    let n = grid.n_points();
    let raw = Array2::from_shape_fn((n, n), |(i, j)| {
        let (w1, w2) = (grid.value(i), grid.value(j));
        pump.interpolate(w1 + w2) * Complex64::from(pm.amplitude(w1, w2))
    });
    let values = (&raw + &raw.t()) * Complex64::from(0.5);
    ProcessKernel::jsa(grid, values)
}

/// Mean photon number of the pair source at the given gain scale:
/// Σ_k sinh²(scale·r_k) over the Takagi coefficients of the discretized
/// kernel.
pub fn mean_photon_number(jsa: &ProcessKernel, scale: f64) -> Result<f64> {
    if jsa.kind() != KernelKind::Jsa {
        return Err(Error::usage("mean photon number applies to pair-source kernels"));
    }
    if !scale.is_finite() || scale < 0.0 {
        return Err(Error::config(format!("gain scale must be ≥ 0, got {scale}")));
    }
    let data = jsa.schmidt()?;
    Ok(photon_number(data.coefficients(), scale))
}

fn photon_number(coefficients: &[f64], scale: f64) -> f64 {
    coefficients.iter().map(|r| (scale * r).sinh().powi(2)).sum()
}

/// Gain scale at which the pair source emits `target` photons on average,
/// found by bracketing plus bisection to 1e-6 relative accuracy.
pub fn normalize_jsa(jsa: &ProcessKernel, target: f64) -> Result<f64> {
    if jsa.kind() != KernelKind::Jsa {
        return Err(Error::usage("photon-number normalization applies to pair-source kernels"));
    }
    if !target.is_finite() || target < 0.0 {
        return Err(Error::config(format!(
            "target mean photon number must be ≥ 0, got {target}"
        )));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let data = jsa.schmidt()?;
    let r = data.coefficients();
    let r0 = r.first().copied().unwrap_or(0.0);
    if r0 <= 0.0 {
        return Err(Error::numerical(
            "a zero kernel cannot reach a positive photon number",
        ));
    }

    let mut budget = 200usize;
    let mut lo = 0.0f64;
    // sinh grows like e^x/2: scales past ~400/r0 overflow long before any
    // physically sensible target, so the bracket is capped there.
    let mut hi = 1.0 / r0;
    while photon_number(r, hi) < target {
        lo = hi;
        hi *= 2.0;
        budget = budget.checked_sub(1).ok_or_else(non_convergence)?;
        if hi * r0 > 400.0 {
            break;
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let value = photon_number(r, mid);
        if (value - target).abs() <= 1e-6 * target {
            return Ok(mid);
        }
        if value < target {
            lo = mid;
        } else {
            hi = mid;
        }
        budget = budget.checked_sub(1).ok_or_else(non_convergence)?;
    }
}

fn non_convergence() -> Error {
    Error::numerical("photon-number normalization did not converge in 200 iterations")
}

/// Transfer function of a multi-output gate that maps the superposition
/// modes S_m = Σ_l U_ml·A_l onto the output peaks O_m:
/// G(ω_in, ω_out) = Σ_m S_m(ω_in)·O_m(ω_out).
///
/// Bins and peaks must each be orthonormal within 1e-4; the matrix rows
/// must be orthonormal. The factored form is stored with the kernel.
pub fn build_mqpg_tf(
    u: &NetworkUnitary,
    input_bins: &ModeSet,
    output_peaks: &ModeSet,
) -> Result<ProcessKernel> {
    if u.n_inputs() != input_bins.len() {
        return Err(Error::usage(format!(
            "matrix has {} columns but {} input bins were given",
            u.n_inputs(),
            input_bins.len()
        )));
    }
    if u.n_outputs() != output_peaks.len() {
        return Err(Error::usage(format!(
            "matrix has {} rows but {} output peaks were given",
            u.n_outputs(),
            output_peaks.len()
        )));
    }
    let row_gram_dev = {
        let e = u.entries();
        let gram = e.dot(&e.t().mapv(|z| z.conj()));
        let mut worst = 0.0f64;
        for ((i, j), v) in gram.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).norm());
        }
        worst
    };
    if row_gram_dev > 1e-10 {
        return Err(Error::validation(format!(
            "matrix rows are not orthonormal (deviation {row_gram_dev:.3e})"
        )));
    }
    let bins_dev = input_bins.orthonormality_deviation();
    if bins_dev > 1e-4 {
        return Err(Error::validation(format!(
            "input bins are not orthonormal (deviation {bins_dev:.3e}); \
             reduce the bin width or spread the centers"
        )));
    }
    let peaks_dev = output_peaks.orthonormality_deviation();
    if peaks_dev > 1e-4 {
        return Err(Error::validation(format!(
            "output peaks are not orthonormal (deviation {peaks_dev:.3e})"
        )));
    }

    let grid_in = input_bins.grid();
    let grid_out = output_peaks.grid();
    let superpositions: Vec<SpectralFunction> = (0..u.n_outputs())
        .map(|m| superposition_mode(&u.row(m).to_vec(), input_bins))
        .collect::<Result<_>>()?;

    let (n_in, n_out) = (grid_in.n_points(), grid_out.n_points());
    let k = superpositions.len();
    let mut stack_s = Array2::<Complex64>::zeros((k, n_in));
    let mut stack_o = Array2::<Complex64>::zeros((k, n_out));
    for m in 0..k {
        stack_s.row_mut(m).assign(superpositions[m].samples());
        stack_o.row_mut(m).assign(output_peaks.mode(m).samples());
    }
    let values = stack_s.t().to_owned().dot(&stack_o);

    let mut kernel = ProcessKernel::tf(grid_in, grid_out, values)?;
    kernel.separable = Some(SeparableFactors {
        inputs: superpositions,
        outputs: output_peaks.modes().to_vec(),
        amplitude: 1.0,
    });
    Ok(kernel)
}

/// Transfer function as pump spectrum times horizontal phasematching:
/// G(ω_in, ω_out) = P(ω_out − ω_in)·Σ_m Φ_m(ω_out).
///
/// The pump grid must cover the full difference-frequency range.
pub fn build_tf_from_pump_pm(
    pump: &SpectralFunction,
    pm: &PhasematchingModel,
    grid_in: FrequencyGrid,
    grid_out: FrequencyGrid,
) -> Result<ProcessKernel> {
    if !matches!(pm.orientation(), PmOrientation::Horizontal { .. }) {
        return Err(Error::usage(
            "converter transfer functions need a horizontal phasematching model",
        ));
    }
    let (lo, hi) = (
        grid_out.start() - grid_in.stop(),
        grid_out.stop() - grid_in.start(),
    );
    let pg = pump.grid();
    if pg.start() > lo || pg.stop() < hi {
        return Err(Error::config(format!(
            "pump grid [{}, {}] does not cover the difference-frequency range [{lo}, {hi}]",
            pg.start(),
            pg.stop()
        )));
    }
    let values = Array2::from_shape_fn(
        (grid_in.n_points(), grid_out.n_points()),
        |(i, j)| {
            let (win, wout) = (grid_in.value(i), grid_out.value(j));
            pump.interpolate(wout - win) * Complex64::from(pm.amplitude(win, wout))
        },
    );
    ProcessKernel::tf(grid_in, grid_out, values)
}

/// Rescales a transfer function so its largest Schmidt angle is exactly
/// π/2 (unity conversion of the dominant mode). Returns the rescaled
/// kernel and all significant Schmidt angles (above 1e-8 of the largest).
pub fn set_conversion_unity(tf: &ProcessKernel) -> Result<(ProcessKernel, Vec<f64>)> {
    if tf.kind() != KernelKind::Tf {
        return Err(Error::usage("conversion rescaling applies to transfer functions"));
    }
    let data = tf.schmidt()?;
    let r0 = data.coefficients().first().copied().unwrap_or(0.0);
    if r0 <= 0.0 {
        return Err(Error::validation(
            "a zero transfer function cannot be scaled to unity conversion",
        ));
    }
    let factor = std::f64::consts::FRAC_PI_2 / r0;
    let rescaled = tf.scaled(factor);
    let angles: Vec<f64> = data
        .coefficients()
        .iter()
        .map(|r| r * factor)
        .filter(|&t| t > 1e-8 * std::f64::consts::FRAC_PI_2)
        .collect();
    Ok((rescaled, angles))
}
