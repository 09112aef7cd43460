//! Composition of a pair source with a frequency converter, and the
//! Gaussian covariance statistics of the resulting output modes.
//!
//! Quadratures are ordered X₁, Y₁, X₂, Y₂, … with X = (Ô + Ô†)/√2 and
//! Y = (Ô − Ô†)/(i√2); the vacuum covariance is the identity over 2.

use ndarray::Array2;
use ndarray_linalg::{Determinant, Eig, Eigh, UPLO};
use num_complex::Complex64;

use crate::bogoliubov::{PdcKernels, SfgKernels};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::spectral::{ModeSet, NetworkUnitary};

fn stack_modes(set: &ModeSet) -> Array2<Complex64> {
    let n = set.grid().n_points();
    let mut stack = Array2::<Complex64>::zeros((set.len(), n));
    for (m, mode) in set.modes().iter().enumerate() {
        stack.row_mut(m).assign(mode.samples());
    }
    stack
}

/// Inhomogeneous Bogoliubov amplitudes of the measured output modes.
///
/// Row k holds the three kernels of B_k = ∫H¹_k Ĉ + ∫H²_k Â + ∫H³_k Â†,
/// where Ĉ is the vacuum field in the converted band (over `grid_out`) and
/// Â the vacuum field feeding the pair source (over `grid_in`).
#[derive(Debug, Clone)]
pub struct CompositeAmplitudes {
    h1: Array2<Complex64>,
    h2: Array2<Complex64>,
    h3: Array2<Complex64>,
    grid_in: FrequencyGrid,
    grid_out: FrequencyGrid,
}

impl CompositeAmplitudes {
    pub fn n_modes(&self) -> usize {
        self.h1.nrows()
    }

    pub fn h1(&self) -> &Array2<Complex64> {
        &self.h1
    }

    pub fn h2(&self) -> &Array2<Complex64> {
        &self.h2
    }

    pub fn h3(&self) -> &Array2<Complex64> {
        &self.h3
    }

    pub fn grid_in(&self) -> FrequencyGrid {
        self.grid_in
    }

    pub fn grid_out(&self) -> FrequencyGrid {
        self.grid_out
    }

    /// Largest deviation of ∫|H¹_k|² + ∫|H²_k|² − ∫|H³_k|² from one.
    /// Values above ~1e-5 signal a truncated or inconsistent transform.
    pub fn commutator_deviation(&self) -> f64 {
        let din = self.grid_in.step();
        let dout = self.grid_out.step();
        let mut worst = 0.0f64;
        for k in 0..self.n_modes() {
            let n1: f64 = self.h1.row(k).iter().map(|z| z.norm_sqr()).sum();
            let n2: f64 = self.h2.row(k).iter().map(|z| z.norm_sqr()).sum();
            let n3: f64 = self.h3.row(k).iter().map(|z| z.norm_sqr()).sum();
            worst = worst.max((dout * n1 + din * (n2 - n3) - 1.0).abs());
        }
        worst
    }
}

/// Propagates the measured output modes backwards through converter and
/// pair source: H¹_k = ∫O_k U^Q_a, and with W_k = ∫O_k V^Q_a the input-band
/// kernels are H²_k = −∫W_k U^P and H³_k = −∫W_k V^P.
pub fn compose(
    pdc: &PdcKernels,
    sfg: &SfgKernels,
    outputs: &ModeSet,
) -> Result<CompositeAmplitudes> {
    if sfg.grid_in() != pdc.grid() {
        return Err(Error::usage(
            "converter input grid does not match the pair-source grid",
        ));
    }
    if outputs.grid() != sfg.grid_out() {
        return Err(Error::usage(
            "output modes are not sampled on the converter output grid",
        ));
    }
    let o = stack_modes(outputs);
    let h1 = o.dot(sfg.uqa());
    let w = o.dot(sfg.vqa());
    let h2 = w.dot(pdc.up()).mapv(|z| -z);
    let h3 = w.dot(pdc.vp()).mapv(|z| -z);
    Ok(CompositeAmplitudes {
        h1,
        h2,
        h3,
        grid_in: pdc.grid(),
        grid_out: sfg.grid_out(),
    })
}

/// Covariance of spectral bins measured directly behind the pair source:
/// H²_k = ∫A_k U^P and H³_k = ∫A_k V^P, with no converted band.
pub fn pdc_bin_covariance(pdc: &PdcKernels, bins: &ModeSet) -> Result<CovarianceMatrix> {
    if bins.grid() != pdc.grid() {
        return Err(Error::usage(
            "bins are not sampled on the pair-source grid",
        ));
    }
    let dev = bins.orthonormality_deviation();
    if dev > 1e-6 {
        return Err(Error::validation(format!(
            "bins are not orthonormal (deviation {dev:.3e})"
        )));
    }
    let a = stack_modes(bins);
    let h2 = a.dot(pdc.up());
    let h3 = a.dot(pdc.vp());
    let n = bins.len();
    let amps = CompositeAmplitudes {
        h1: Array2::zeros((n, pdc.grid().n_points())),
        h2,
        h3,
        grid_in: pdc.grid(),
        grid_out: pdc.grid(),
    };
    Ok(covariance_from_amplitudes(&amps))
}

/// Vacuum moments of the amplitudes, assembled into the symmetrized
/// quadrature covariance matrix.
pub fn covariance_from_amplitudes(amps: &CompositeAmplitudes) -> CovarianceMatrix {
    let din = Complex64::from(amps.grid_in.step());
    let dout = Complex64::from(amps.grid_out.step());
    let h1 = &amps.h1;
    let h2 = &amps.h2;
    let h3 = &amps.h3;
    let h1c = h1.mapv(|z| z.conj());
    let h2c = h2.mapv(|z| z.conj());
    let h3c = h3.mapv(|z| z.conj());

    // Nonzero vacuum moments, in operator order:
    //   m1 = ⟨B_k B_l⟩, m2 = ⟨B_k B_l†⟩, m3 = ⟨B_k† B_l⟩, m4 = ⟨B_k† B_l†⟩.
    let m1 = h2.dot(&h3.t()) * din;
    let m2 = h1.dot(&h1c.t()) * dout + h2.dot(&h2c.t()) * din;
    let m3 = h3c.dot(&h3.t()) * din;
    let m4 = h3c.dot(&h2c.t()) * din;

    let k = amps.n_modes();
    let half = Complex64::from(0.5);
    let inv2i = Complex64::new(0.0, -0.5); // 1/(2i)
    let mut t = Array2::<Complex64>::zeros((2 * k, 2 * k));
    for p in 0..k {
        for q in 0..k {
            let (a, b, c, d) = (m1[(p, q)], m2[(p, q)], m3[(p, q)], m4[(p, q)]);
            t[(2 * p, 2 * q)] = (a + b + c + d) * half;
            t[(2 * p, 2 * q + 1)] = (a - b + c - d) * inv2i;
            t[(2 * p + 1, 2 * q)] = (a + b - c - d) * inv2i;
            t[(2 * p + 1, 2 * q + 1)] = -(a - b - c + d) * half;
        }
    }

    // σ_ij = Re (T_ij + T_ji)/2, written to both slots so the matrix is
    // symmetric to the last bit. Imaginary parts cancel by construction.
    let mut entries = Array2::<f64>::zeros((2 * k, 2 * k));
    for i in 0..2 * k {
        entries[(i, i)] = t[(i, i)].re;
        for j in (i + 1)..2 * k {
            let avg = (t[(i, j)] + t[(j, i)]) * half;
            debug_assert!(avg.im.abs() <= 1e-9 * (1.0 + avg.re.abs()));
            entries[(i, j)] = avg.re;
            entries[(j, i)] = avg.re;
        }
    }
    CovarianceMatrix {
        entries,
        n_modes: k,
    }
}

/// Real symmetric quadrature covariance over N modes, interleaved
/// X₁, Y₁, …, X_N, Y_N.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    entries: Array2<f64>,
    n_modes: usize,
}

impl CovarianceMatrix {
    /// Wraps an explicit matrix; it must be square, of even dimension,
    /// finite and symmetric. Small asymmetry is averaged away.
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::usage(format!(
                "covariance matrix must be square with even dimension, got {r}×{c}"
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("covariance matrix contains non-finite entries"));
        }
        let scale = entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut sym = entries;
        for i in 0..r {
            for j in (i + 1)..r {
                let gap = (sym[(i, j)] - sym[(j, i)]).abs();
                if gap > 1e-10 * (1.0 + scale) {
                    return Err(Error::validation(format!(
                        "covariance matrix is not symmetric at ({i}, {j}): gap {gap:.3e}"
                    )));
                }
                let avg = 0.5 * (sym[(i, j)] + sym[(j, i)]);
                sym[(i, j)] = avg;
                sym[(j, i)] = avg;
            }
        }
        Ok(CovarianceMatrix {
            n_modes: r / 2,
            entries: sym,
        })
    }

    /// Vacuum state: σ = I/2.
    pub fn vacuum(n_modes: usize) -> Self {
        CovarianceMatrix {
            entries: Array2::eye(2 * n_modes) * 0.5,
            n_modes,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// γ = 1 / (2^N √det σ); 1 for pure states, smaller for mixed ones.
    /// Values above 1 + 1e-6 indicate a convention error and are logged,
    /// but reported as computed.
    pub fn purity(&self) -> Result<f64> {
        let det = self.entries.det()?;
        if det <= 0.0 || !det.is_finite() {
            return Err(Error::numerical(format!(
                "covariance determinant {det} is not positive"
            )));
        }
        let gamma = 1.0 / (2f64.powi(self.n_modes as i32) * det.sqrt());
        if gamma > 1.0 + 1e-6 {
            log::warn!("purity {gamma} exceeds one; check covariance conventions");
        }
        Ok(gamma)
    }

    /// Squeezing of the least-noisy quadrature direction in decibels:
    /// S = −10·log₁₀(2a) with a the smallest ordinary eigenvalue.
    /// Positive values mean noise below vacuum.
    pub fn squeezing_db(&self) -> Result<f64> {
        let (eigs, _) = self.entries.eigh(UPLO::Lower)?;
        let a = eigs[0];
        if a <= 0.0 {
            return Err(Error::numerical(format!(
                "covariance matrix is not positive definite (min eigenvalue {a})"
            )));
        }
        Ok(-10.0 * (2.0 * a).log10())
    }

    /// Symplectic spectrum: moduli of the eigenvalues of Ωσ, averaged in
    /// conjugate pairs and returned in ascending order.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let dim = 2 * self.n_modes;
        let mut m = Array2::<f64>::zeros((dim, dim));
        for k in 0..self.n_modes {
            for j in 0..dim {
                m[(2 * k, j)] = self.entries[(2 * k + 1, j)];
                m[(2 * k + 1, j)] = -self.entries[(2 * k, j)];
            }
        }
        let (eigs, _) = m.eig()?;
        let mut mags: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).expect("eigenvalue moduli are finite"));
        let mut nus: Vec<f64> = (0..self.n_modes)
            .map(|k| 0.5 * (mags[2 * k] + mags[2 * k + 1]))
            .collect();
        nus.reverse();
        Ok(nus)
    }

    /// Symplectic spectrum plus the uncertainty-principle verdict:
    /// physical iff every symplectic eigenvalue is at least 1/2 − 1e-6.
    pub fn check_physical(&self) -> Result<(Vec<f64>, bool)> {
        let nus = self.symplectic_eigenvalues()?;
        let pass = nus.iter().all(|&v| v >= 0.5 - 1e-6);
        Ok((nus, pass))
    }
}

/// Covariance after an ideal lossless network: each matrix entry
/// U_kl = a + ib becomes the quadrature block [[a, −b], [b, a]], and
/// σ ↦ SσSᵀ.
pub fn ideal_output_oracle(
    u: &NetworkUnitary,
    sigma_bins: &CovarianceMatrix,
) -> Result<CovarianceMatrix> {
    if u.n_inputs() != u.n_outputs() {
        return Err(Error::usage(
            "the ideal-network map needs a square unitary",
        ));
    }
    let n = sigma_bins.n_modes();
    if u.n_outputs() != n {
        return Err(Error::usage(format!(
            "matrix acts on {} modes but the state has {n}",
            u.n_outputs()
        )));
    }
    let mut s = Array2::<f64>::zeros((2 * n, 2 * n));
    for k in 0..n {
        for l in 0..n {
            let z = u.entries()[(k, l)];
            s[(2 * k, 2 * l)] = z.re;
            s[(2 * k, 2 * l + 1)] = -z.im;
            s[(2 * k + 1, 2 * l)] = z.im;
            s[(2 * k + 1, 2 * l + 1)] = z.re;
        }
    }
    let raw = s.dot(sigma_bins.entries()).dot(&s.t());
    let mut entries = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..2 * n {
        entries[(i, i)] = raw[(i, i)];
        for j in (i + 1)..2 * n {
            let avg = 0.5 * (raw[(i, j)] + raw[(j, i)]);
            entries[(i, j)] = avg;
            entries[(j, i)] = avg;
        }
    }
    Ok(CovarianceMatrix { entries, n_modes: n })
}
