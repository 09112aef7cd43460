//! Spectral mode shapes: frequency bins, superposition modes, pump spectra
//! and the network unitary that programs them.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;

/// Complex amplitude sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    grid: FrequencyGrid,
    samples: Array1<Complex64>,
    label: String,
}

impl SpectralFunction {
    pub fn new(
        grid: FrequencyGrid,
        samples: Array1<Complex64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::usage(format!(
                "sample count {} does not match grid size {}",
                samples.len(),
                grid.n_points()
            )));
        }
        Ok(SpectralFunction {
            grid,
            samples,
            label: label.into(),
        })
    }

    pub fn zero(grid: FrequencyGrid) -> Self {
        SpectralFunction {
            grid,
            samples: Array1::zeros(grid.n_points()),
            label: "zero".into(),
        }
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn samples(&self) -> &Array1<Complex64> {
        &self.samples
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Riemann L2 norm, `sqrt(Σ|f|²·Δω)`.
    pub fn norm(&self) -> f64 {
        let s: f64 = self.samples.iter().map(|z| z.norm_sqr()).sum();
        (s * self.grid.step()).sqrt()
    }

    /// Returns a rescaled copy with unit Riemann norm.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::validation(format!(
                "cannot normalize the zero function `{}`",
                self.label
            )));
        }
        self.samples.mapv_inplace(|z| z / n);
        Ok(self)
    }

    /// Linear interpolation at an arbitrary frequency; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        if !self.grid.contains(x) {
            return Complex64::new(0.0, 0.0);
        }
        let raw = (x - self.grid.start()) / self.grid.step();
        let i = (raw.floor() as usize).min(self.grid.n_points() - 2);
        let t = raw - i as f64;
        self.samples[i] * (1.0 - t) + self.samples[i + 1] * t
    }
}

/// Riemann inner product `Σ conj(f[i])·g[i]·Δω`.
///
/// Conjugate-symmetric exactly: `inner_product(f, g) == conj(inner_product(g, f))`
/// bit for bit, because each term swaps to its own conjugate.
pub fn inner_product(f: &SpectralFunction, g: &SpectralFunction) -> Result<Complex64> {
    if f.grid != g.grid {
        return Err(Error::usage(format!(
            "inner product between different grids (`{}` vs `{}`)",
            f.label, g.label
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in f.samples.iter().zip(g.samples.iter()) {
        acc += a.conj() * b;
    }
    Ok(acc * f.grid.step())
}

/// Unit-peak Gaussian amplitude whose squared modulus has the given
/// full width at half maximum.
///
/// `|A(x)|² = exp(−4·ln2·x²/fwhm²)`, i.e. the amplitude carries
/// σ_amp = fwhm/√(4·ln2) and the intensity σ_I = fwhm/√(8·ln2).
pub(crate) fn gauss_amp(x: f64, fwhm: f64) -> f64 {
    (-2.0 * std::f64::consts::LN_2 * (x / fwhm).powi(2)).exp()
}

/// L2-normalized Gaussian frequency bin parameterized by its intensity FWHM.
pub fn gaussian_bin(grid: FrequencyGrid, center: f64, fwhm: f64) -> Result<SpectralFunction> {
    if !fwhm.is_finite() || fwhm <= 0.0 {
        return Err(Error::config(format!("bin fwhm must be positive, got {fwhm}")));
    }
    if !grid.contains(center) {
        return Err(Error::config(format!(
            "bin center {center} lies outside the grid [{}, {}]",
            grid.start(),
            grid.stop()
        )));
    }
    if fwhm <= 3.0 * grid.step() {
        return Err(Error::resolution(format!(
            "bin fwhm {fwhm} is not resolved by the grid step {} (needs > 3 steps)",
            grid.step()
        )));
    }
    let samples = Array1::from_iter(
        grid.values()
            .map(|w| Complex64::new(gauss_amp(w - center, fwhm), 0.0)),
    );
    SpectralFunction::new(grid, samples, format!("gaussian[{center}, fwhm={fwhm}]"))?
        .normalized()
}

/// L2-normalized box bin of width `width` centered at `center`.
///
/// A sample belongs to the box when its coordinate lies in the closed
/// interval `[center−width/2, center+width/2]` (with a 1-part-in-10¹²
/// tolerance against roundoff in the edge positions).
pub fn box_bin(grid: FrequencyGrid, center: f64, width: f64) -> Result<SpectralFunction> {
    if !width.is_finite() || width <= 0.0 {
        return Err(Error::config(format!("box width must be positive, got {width}")));
    }
    let (lo, hi) = (center - width / 2.0, center + width / 2.0);
    if lo < grid.start() - 1e-12 * grid.span() || hi > grid.stop() + 1e-12 * grid.span() {
        return Err(Error::config(format!(
            "box [{lo}, {hi}] exceeds the grid [{}, {}]",
            grid.start(),
            grid.stop()
        )));
    }
    if width < 2.0 * grid.step() {
        return Err(Error::resolution(format!(
            "box width {width} is not resolved by the grid step {} (needs >= 2 steps)",
            grid.step()
        )));
    }
    let slack = 1e-12 * width;
    let samples = Array1::from_iter(grid.values().map(|w| {
        if w >= lo - slack && w <= hi + slack {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }));
    SpectralFunction::new(grid, samples, format!("box[{center}, width={width}]"))?.normalized()
}

/// A family of modes on one grid, tagged with their central frequencies.
#[derive(Debug, Clone)]
pub struct ModeSet {
    modes: Vec<SpectralFunction>,
    centers: Vec<f64>,
}

impl ModeSet {
    pub fn new(modes: Vec<SpectralFunction>, centers: Vec<f64>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::usage("mode set must contain at least one mode"));
        }
        if modes.len() != centers.len() {
            return Err(Error::usage(format!(
                "{} modes but {} centers",
                modes.len(),
                centers.len()
            )));
        }
        let grid = modes[0].grid();
        if modes.iter().any(|m| m.grid() != grid) {
            return Err(Error::usage("all modes of a set must share one grid"));
        }
        Ok(ModeSet { modes, centers })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.modes[0].grid()
    }

    pub fn modes(&self) -> &[SpectralFunction] {
        &self.modes
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn mode(&self, i: usize) -> &SpectralFunction {
        &self.modes[i]
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.modes.len() {
            for l in k..self.modes.len() {
                let g = inner_product(&self.modes[k], &self.modes[l])
                    .expect("modes of a set share one grid");
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// Result of [`place_bins`]: either the placed bins, or the geometric reason
/// why the requested configuration cannot exist on the window.
#[derive(Debug, Clone)]
pub enum BinPlacement {
    Placed(ModeSet),
    /// Neighboring bins would overlap: `spacing < width`.
    Infeasible { spacing: f64, width: f64 },
}

impl BinPlacement {
    pub fn placed(self) -> Option<ModeSet> {
        match self {
            BinPlacement::Placed(set) => Some(set),
            BinPlacement::Infeasible { .. } => None,
        }
    }
}

/// Places `n` box bins of the given width, equally spaced and symmetric about
/// `center`, with the outermost bin edges flush with the grid boundary.
///
/// `center` must be the midpoint of the grid; maximal spacing and symmetry
/// around an off-center frequency contradict each other. Overlapping
/// configurations (`spacing < width`, i.e. `n·width > span`) are reported as
/// [`BinPlacement::Infeasible`], not as an error.
pub fn place_bins(
    n: usize,
    grid: FrequencyGrid,
    center: f64,
    width: f64,
) -> Result<BinPlacement> {
    if n == 0 {
        return Err(Error::config("cannot place zero bins"));
    }
    if !width.is_finite() || width <= 0.0 {
        return Err(Error::config(format!("bin width must be positive, got {width}")));
    }
    let mid = 0.5 * (grid.start() + grid.stop());
    if (center - mid).abs() > 1e-12 * grid.span() {
        return Err(Error::config(format!(
            "maximally spaced symmetric placement requires the degeneracy point \
             {center} at the window midpoint {mid}"
        )));
    }
    let span = grid.span();
    if n as f64 * width > span * (1.0 + 1e-12) {
        let spacing = if n > 1 {
            (span - width) / (n - 1) as f64
        } else {
            0.0
        };
        return Ok(BinPlacement::Infeasible { spacing, width });
    }
    let centers: Vec<f64> = if n == 1 {
        vec![center]
    } else {
        let spacing = (span - width) / (n - 1) as f64;
        if spacing < width * (1.0 - 1e-12) {
            return Ok(BinPlacement::Infeasible { spacing, width });
        }
        // Symmetric form keeps the list exactly reflection-invariant about
        // the center.
        (0..n)
            .map(|k| center + (k as f64 - (n - 1) as f64 / 2.0) * spacing)
            .collect()
    };
    let modes = centers
        .iter()
        .map(|&c| box_bin(grid, c, width))
        .collect::<Result<Vec<_>>>()?;
    Ok(BinPlacement::Placed(ModeSet::new(modes, centers)?))
}

/// N_out×N_in matrix programming the network.
///
/// Every row must have unit Euclidean norm; square matrices must be unitary.
/// Both are checked at construction within 1e-10.
#[derive(Debug, Clone)]
pub struct NetworkUnitary {
    entries: Array2<Complex64>,
}

impl NetworkUnitary {
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        let (n_out, n_in) = entries.dim();
        if n_out == 0 || n_in == 0 {
            return Err(Error::config("network matrix must be non-empty"));
        }
        for (m, row) in entries.outer_iter().enumerate() {
            let norm: f64 = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::validation(format!(
                    "network row {m} has norm {norm}, expected 1"
                )));
            }
        }
        if n_out == n_in {
            let mut worst: f64 = 0.0;
            for k in 0..n_out {
                for l in 0..n_out {
                    let dot: Complex64 = entries
                        .row(k)
                        .iter()
                        .zip(entries.row(l).iter())
                        .map(|(a, b)| a * b.conj())
                        .sum();
                    let target = if k == l { 1.0 } else { 0.0 };
                    worst = worst.max((dot - target).norm());
                }
            }
            if worst > 1e-10 {
                return Err(Error::validation(format!(
                    "square network matrix is not unitary (U·U† deviates from I by {worst:.3e})"
                )));
            }
        }
        Ok(NetworkUnitary { entries })
    }

    pub fn identity(n: usize) -> Self {
        NetworkUnitary {
            entries: Array2::eye(n),
        }
    }

    /// The balanced two-port splitter `[[1, 1], [1, −1]]/√2`.
    pub fn balanced_beamsplitter() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let entries = ndarray::array![
            [Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
            [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)],
        ];
        NetworkUnitary { entries }
    }

    /// Single output row addressing `n` inputs with equal phases.
    pub fn equal_row(n: usize) -> Result<Self> {
        Self::single_row((0..n).map(|_| 1.0))
    }

    /// Single output row with alternating 0/π phases between neighbors.
    pub fn alternating_row(n: usize) -> Result<Self> {
        Self::single_row((0..n).map(|l| if l % 2 == 0 { 1.0 } else { -1.0 }))
    }

    fn single_row(weights: impl Iterator<Item = f64>) -> Result<Self> {
        let w: Vec<f64> = weights.collect();
        if w.is_empty() {
            return Err(Error::config("network row must address at least one input"));
        }
        let norm = (w.len() as f64).sqrt();
        let entries = Array2::from_shape_vec(
            (1, w.len()),
            w.into_iter().map(|x| Complex64::new(x / norm, 0.0)).collect(),
        )
        .expect("shape matches by construction");
        Ok(NetworkUnitary { entries })
    }

    /// Deterministic pseudo-random unitary from a seed (Gram-Schmidt on a
    /// matrix of splitmix64-driven Gaussian deviates).
    pub fn pseudo_random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("network matrix must be non-empty"));
        }
        let mut state = seed;
        let mut next = move || -> f64 {
            // splitmix64, mapped to (0, 1).
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 + f64::MIN_POSITIVE
        };
        let mut gauss = move || -> Complex64 {
            let (u1, u2) = (next(), next());
            let r = (-2.0 * u1.ln()).sqrt();
            let phi = 2.0 * std::f64::consts::PI * u2;
            Complex64::new(r * phi.cos(), r * phi.sin())
        };
        let mut rows: Vec<Array1<Complex64>> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut v = Array1::from_iter((0..n).map(|_| gauss()));
            // Modified Gram-Schmidt against the accepted rows.
            for prev in &rows {
                let proj: Complex64 = prev.iter().zip(v.iter()).map(|(p, x)| p.conj() * x).sum();
                ndarray::Zip::from(&mut v).and(prev).for_each(|x, p| *x -= proj * p);
            }
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                return Err(Error::numerical(
                    "pseudo-random unitary draw produced a degenerate row",
                ));
            }
            v.mapv_inplace(|z| z / norm);
            rows.push(v);
        }
        let mut entries = Array2::zeros((n, n));
        for (k, row) in rows.into_iter().enumerate() {
            entries.row_mut(k).assign(&row);
        }
        NetworkUnitary::new(entries)
    }

    pub fn n_outputs(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn row(&self, m: usize) -> ndarray::ArrayView1<'_, Complex64> {
        self.entries.row(m)
    }
}

/// Superposition mode `S(ω) = Σ_l row[l]·A_l(ω)` over the bins of a set.
pub fn superposition_mode(row: &[Complex64], bins: &ModeSet) -> Result<SpectralFunction> {
    if row.len() != bins.len() {
        return Err(Error::usage(format!(
            "weight row has {} entries for {} bins",
            row.len(),
            bins.len()
        )));
    }
    let mut samples = Array1::zeros(bins.grid().n_points());
    for (w, bin) in row.iter().zip(bins.modes()) {
        ndarray::Zip::from(&mut samples)
            .and(bin.samples())
            .for_each(|s, &b| *s += w * b);
    }
    SpectralFunction::new(bins.grid(), samples, "superposition")
}

/// Pump spectrum addressing every (output, input) channel pair:
/// `P(ω_P) = Σ_m Σ_l U[m,l]·B(out_centers[m] − in_centers[l] − ω_P)`,
/// with `B` a unit-peak Gaussian of the given intensity FWHM.
///
/// Components whose difference frequencies coincide add coherently.
pub fn synthesize_pump(
    unitary: &NetworkUnitary,
    in_centers: &[f64],
    out_centers: &[f64],
    bin_fwhm: f64,
    pump_grid: FrequencyGrid,
) -> Result<SpectralFunction> {
    if in_centers.len() != unitary.n_inputs() || out_centers.len() != unitary.n_outputs() {
        return Err(Error::usage(format!(
            "network is {}×{} but {} output / {} input centers were given",
            unitary.n_outputs(),
            unitary.n_inputs(),
            out_centers.len(),
            in_centers.len()
        )));
    }
    if !bin_fwhm.is_finite() || bin_fwhm <= 0.0 {
        return Err(Error::config(format!(
            "pump bin fwhm must be positive, got {bin_fwhm}"
        )));
    }
    let mut samples: Array1<Complex64> = Array1::zeros(pump_grid.n_points());
    for (m, &wo) in out_centers.iter().enumerate() {
        for (l, &wi) in in_centers.iter().enumerate() {
            let diff = wo - wi;
            if !pump_grid.contains(diff) {
                return Err(Error::config(format!(
                    "pump bin center {diff} (output {m}, input {l}) lies outside \
                     the pump grid [{}, {}]",
                    pump_grid.start(),
                    pump_grid.stop()
                )));
            }
            let weight = unitary.entries()[(m, l)];
            for (i, w) in pump_grid.values().enumerate() {
                samples[i] += weight * gauss_amp(diff - w, bin_fwhm);
            }
        }
    }
    SpectralFunction::new(pump_grid, samples, "pump")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn normalized_bin_has_unit_inner_product() {
        let g = make_grid(0.0, 1.0, 1500).unwrap();
        let bin = gaussian_bin(g, 0.5, 0.1).unwrap();
        let ip = inner_product(&bin, &bin).unwrap();
        assert_abs_diff_eq!(ip.re, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inner_product_with_zero_function_vanishes() {
        let g = make_grid(0.0, 1.0, 200).unwrap();
        let bin = gaussian_bin(g, 0.5, 0.1).unwrap();
        let z = SpectralFunction::zero(g);
        assert_eq!(inner_product(&bin, &z).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn distant_bins_are_orthogonal() {
        let g = make_grid(0.0, 1.0, 1500).unwrap();
        let a = gaussian_bin(g, 0.25, 0.1).unwrap();
        let b = gaussian_bin(g, 0.75, 0.1).unwrap(); // 5×FWHM apart
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-6);
    }

    #[test]
    fn inner_product_rejects_grid_mismatch() {
        let a = gaussian_bin(make_grid(0.0, 1.0, 200).unwrap(), 0.5, 0.1).unwrap();
        let b = gaussian_bin(make_grid(0.0, 1.0, 300).unwrap(), 0.5, 0.1).unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::Usage(_))));
    }

    #[test]
    fn inner_product_is_exactly_conjugate_symmetric() {
        let g = make_grid(0.0, 1.0, 64).unwrap();
        let f = SpectralFunction::new(
            g,
            Array1::from_iter((0..64).map(|i| Complex64::new((i as f64).sin(), (i as f64).cos()))),
            "f",
        )
        .unwrap();
        let h = SpectralFunction::new(
            g,
            Array1::from_iter((0..64).map(|i| Complex64::new(0.3 * i as f64, -0.1 * i as f64))),
            "h",
        )
        .unwrap();
        let fg = inner_product(&f, &h).unwrap();
        let gf = inner_product(&h, &f).unwrap();
        assert_eq!(fg, gf.conj());
    }

    #[test]
    fn gaussian_bin_peaks_at_center() {
        let g = make_grid(0.0, 1.0, 101).unwrap();
        let bin = gaussian_bin(g, 0.5, 0.1).unwrap();
        let peak = bin
            .samples()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(g.value(peak), 0.5);
    }

    #[test]
    fn gaussian_bin_intensity_fwhm_matches_parameter() {
        let g = make_grid(0.0, 1.0, 2001).unwrap();
        // Width chosen so the half-maximum crossings fall between samples;
        // each measured edge then errs by at most one step.
        let fwhm = 0.0831;
        let bin = gaussian_bin(g, 0.5, fwhm).unwrap();
        let intensity: Vec<f64> = bin.samples().iter().map(|z| z.norm_sqr()).collect();
        let half = intensity.iter().cloned().fold(0.0, f64::max) / 2.0;
        let above: Vec<usize> = (0..intensity.len()).filter(|&i| intensity[i] >= half).collect();
        let measured = g.value(*above.last().unwrap()) - g.value(above[0]);
        assert!((measured - fwhm).abs() <= 2.0 * g.step());
    }

    #[test]
    fn gaussian_overlap_matches_closed_form() {
        // ⟨bin(c1), bin(c2)⟩ = exp(−ln2 · sep²/fwhm²) for equal-width bins.
        let g = make_grid(0.0, 1.0, 1500).unwrap();
        let a = gaussian_bin(g, 0.45, 0.1).unwrap();
        let b = gaussian_bin(g, 0.55, 0.1).unwrap();
        let overlap = inner_product(&a, &b).unwrap().norm();
        let oracle = (-std::f64::consts::LN_2 * (0.1f64 / 0.1).powi(2)).exp();
        assert_abs_diff_eq!(overlap, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(overlap, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn gaussian_bin_guards() {
        let g = make_grid(0.0, 1.0, 101).unwrap();
        assert!(matches!(
            gaussian_bin(g, 1.5, 0.1),
            Err(Error::Config(_))
        ));
        // Anything at or below 3 grid steps is under-resolved.
        assert!(matches!(
            gaussian_bin(g, 0.5, 2.9 * g.step()),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(gaussian_bin(g, 0.5, -0.1), Err(Error::Config(_))));
    }

    #[test]
    fn box_bin_amplitude_is_inverse_sqrt_of_covered_mass() {
        let g = make_grid(0.0, 1.0, 101).unwrap(); // step 0.01
        let bin = box_bin(g, 0.5, 0.04).unwrap();
        let k = bin.samples().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(k, 5); // closed interval [0.48, 0.52]
        let expected = 1.0 / (k as f64 * g.step()).sqrt();
        for z in bin.samples().iter().filter(|z| z.norm() > 0.0) {
            assert_abs_diff_eq!(z.re, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn adjacent_boxes_are_orthogonal() {
        let g = make_grid(0.0, 1.0, 101).unwrap();
        let a = box_bin(g, 0.3, 0.04).unwrap();
        let b = box_bin(g, 0.36, 0.04).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap().norm(), 0.0);
    }

    #[test]
    fn full_span_box_is_uniform() {
        let g = make_grid(0.0, 1.0, 101).unwrap();
        let bin = box_bin(g, 0.5, 1.0).unwrap();
        assert_eq!(
            bin.samples().iter().filter(|z| z.norm() > 0.0).count(),
            101
        );
        assert_abs_diff_eq!(bin.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn box_bin_guards() {
        let g = make_grid(0.0, 1.0, 101).unwrap();
        assert!(matches!(box_bin(g, 0.02, 0.1), Err(Error::Config(_))));
        assert!(matches!(box_bin(g, 0.5, 0.015), Err(Error::Resolution(_))));
    }

    #[test]
    fn place_bins_single_bin_sits_at_center() {
        let g = make_grid(0.0, 1.0, 101).unwrap();
        let set = place_bins(1, g, 0.5, 0.2).unwrap().placed().unwrap();
        assert_eq!(set.centers(), &[0.5]);
    }

    #[test]
    fn place_bins_centers_are_mirror_symmetric() {
        let g = make_grid(0.0, 1.0, 801).unwrap();
        let set = place_bins(5, g, 0.5, 0.1).unwrap().placed().unwrap();
        let centers = set.centers();
        assert_eq!(centers.len(), 5);
        for (a, b) in centers.iter().zip(centers.iter().rev()) {
            assert!((a + b - 1.0).abs() < 1e-12);
        }
        // Outer edges flush with the window.
        assert_abs_diff_eq!(centers[0] - 0.05, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(centers[4] + 0.05, 1.0, epsilon = 1e-12);
        // Spacing (span − width)/(n−1).
        assert_abs_diff_eq!(centers[1] - centers[0], 0.9 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn place_bins_reports_overlap_as_infeasible() {
        let g = make_grid(0.0, 1.0, 801).unwrap();
        match place_bins(6, g, 0.5, 0.18).unwrap() {
            BinPlacement::Infeasible { spacing, width } => {
                assert!(spacing < width);
            }
            BinPlacement::Placed(_) => panic!("6×0.18 > 1 must be infeasible"),
        }
    }

    #[test]
    fn place_bins_rejects_off_center_degeneracy() {
        let g = make_grid(0.0, 1.0, 801).unwrap();
        assert!(matches!(
            place_bins(2, g, 0.4, 0.1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn placed_bins_are_orthonormal() {
        let g = make_grid(0.0, 1.0, 801).unwrap();
        let set = place_bins(8, g, 0.5, 0.05).unwrap().placed().unwrap();
        assert!(set.orthonormality_deviation() < 1e-12);
    }

    #[test]
    fn superposition_identity_row_returns_first_bin() {
        let g = make_grid(0.0, 1.0, 801).unwrap();
        let set = place_bins(2, g, 0.5, 0.1).unwrap().placed().unwrap();
        let s = superposition_mode(&[c(1.0), c(0.0)], &set).unwrap();
        let diff: f64 = s
            .samples()
            .iter()
            .zip(set.mode(0).samples().iter())
            .map(|(a, b)| (a - b).norm())
            .sum();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn superposition_even_and_odd_rows() {
        let g = make_grid(0.0, 1.0, 801).unwrap();
        let set = place_bins(2, g, 0.5, 0.1).unwrap().placed().unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let even = superposition_mode(&[c(r), c(r)], &set).unwrap();
        assert_abs_diff_eq!(even.norm(), 1.0, epsilon = 1e-6);
        let odd = superposition_mode(&[c(r), c(-r)], &set).unwrap();
        // Direct evaluation of (A₁ − A₂)/√2.
        for ((s, a), b) in odd
            .samples()
            .iter()
            .zip(set.mode(0).samples().iter())
            .zip(set.mode(1).samples().iter())
        {
            assert_abs_diff_eq!(s.re, r * (a.re - b.re), epsilon = 1e-15);
        }
        assert!(inner_product(&even, &odd).unwrap().norm() < 1e-12);
    }

    #[test]
    fn superposition_rejects_length_mismatch() {
        let g = make_grid(0.0, 1.0, 801).unwrap();
        let set = place_bins(2, g, 0.5, 0.1).unwrap().placed().unwrap();
        assert!(matches!(
            superposition_mode(&[c(1.0)], &set),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn superpositions_of_orthonormal_bins_stay_orthonormal() {
        let g = make_grid(0.0, 1.0, 801).unwrap();
        let set = place_bins(4, g, 0.5, 0.08).unwrap().placed().unwrap();
        let u = NetworkUnitary::pseudo_random(4, 7).unwrap();
        let supers: Vec<SpectralFunction> = (0..4)
            .map(|m| {
                superposition_mode(u.row(m).as_slice().unwrap(), &set).unwrap()
            })
            .collect();
        for k in 0..4 {
            for l in 0..4 {
                let ip = inner_product(&supers[k], &supers[l]).unwrap();
                let target = if k == l { 1.0 } else { 0.0 };
                assert!((ip - target).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn network_unitary_validates_rows() {
        let bad = ndarray::array![[c(1.0), c(1.0)], [c(0.0), c(1.0)]];
        assert!(matches!(NetworkUnitary::new(bad), Err(Error::Validation(_))));
        let not_unitary = ndarray::array![[c(1.0), c(0.0)], [c(1.0), c(0.0)]];
        assert!(matches!(
            NetworkUnitary::new(not_unitary),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn pseudo_random_unitary_is_deterministic_and_unitary() {
        let a = NetworkUnitary::pseudo_random(3, 42).unwrap();
        let b = NetworkUnitary::pseudo_random(3, 42).unwrap();
        assert_eq!(a.entries(), b.entries());
        let c = NetworkUnitary::pseudo_random(3, 43).unwrap();
        assert_ne!(a.entries(), c.entries());
    }

    #[test]
    fn pump_single_channel_is_one_bin_at_the_difference() {
        let pg = make_grid(0.0, 2.0, 801).unwrap();
        let u = NetworkUnitary::identity(1);
        let p = synthesize_pump(&u, &[0.3], &[1.4], 0.1, pg).unwrap();
        let peak = p
            .samples()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert_abs_diff_eq!(pg.value(peak.0), 1.1, epsilon = pg.step());
        assert_abs_diff_eq!(peak.1.re, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn pump_beamsplitter_has_four_weighted_bins() {
        let pg = make_grid(0.0, 3.0, 3001).unwrap();
        let u = NetworkUnitary::balanced_beamsplitter();
        let in_c = [0.2, 0.8];
        let out_c = [1.6, 2.4];
        let p = synthesize_pump(&u, &in_c, &out_c, 0.05, pg).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // Expected weight at each difference frequency.
        let expected = [
            (1.4, r),
            (0.8, r),
            (2.2, r),
            (1.6, -r),
        ];
        for (freq, weight) in expected {
            let i = pg.nearest_index(freq).unwrap();
            assert_abs_diff_eq!(p.samples()[i].re, weight, epsilon = 1e-3);
        }
    }

    #[test]
    fn pump_degenerate_differences_add_coherently() {
        let pg = make_grid(-1.0, 1.0, 2001).unwrap();
        // Both channels share the difference frequency 0.5.
        let u = NetworkUnitary::identity(2);
        let p = synthesize_pump(&u, &[0.1, 0.3], &[0.6, 0.8], 0.1, pg).unwrap();
        let i = pg.nearest_index(0.5).unwrap();
        assert_abs_diff_eq!(p.samples()[i].re, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn pump_rejects_out_of_grid_centers() {
        let pg = make_grid(0.0, 1.0, 101).unwrap();
        let u = NetworkUnitary::identity(1);
        assert!(matches!(
            synthesize_pump(&u, &[0.0], &[1.8], 0.1, pg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bin_normalization_is_refinement_stable() {
        // The same physical Gaussian must get the same normalization factor
        // (within 1e-6) when the grid is refined, i.e. the peak amplitude of
        // the normalized bin stabilizes. Odd point counts keep the center at
        // an exact sample on both grids so the peaks are comparable.
        let coarse = gaussian_bin(make_grid(0.0, 1.0, 751).unwrap(), 0.5, 0.1).unwrap();
        let fine = gaussian_bin(make_grid(0.0, 1.0, 1501).unwrap(), 0.5, 0.1).unwrap();
        let peak = |b: &SpectralFunction| {
            b.samples()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        };
        let (pc, pf) = (peak(&coarse), peak(&fine));
        assert!(((pc - pf) / pf).abs() < 1e-6);
    }

    #[test]
    fn interpolation_hits_samples_and_midpoints() {
        let g = make_grid(0.0, 1.0, 11).unwrap();
        let f = SpectralFunction::new(
            g,
            Array1::from_iter((0..11).map(|i| c(i as f64))),
            "ramp",
        )
        .unwrap();
        assert_abs_diff_eq!(f.interpolate(0.3).re, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.interpolate(0.35).re, 3.5, epsilon = 1e-12);
        assert_eq!(f.interpolate(1.5), Complex64::new(0.0, 0.0));
    }
}
