//! Kernel decompositions and Bogoliubov matrices.
//!
//! Discretization convention used throughout: an integral operator with
//! kernel samples `K[i,j]` on grids with steps Δr, Δc becomes the matrix
//! `K·√(Δr·Δc)`, and continuum-orthonormal mode functions are singular
//! vectors divided by √Δω. Under this convention matrix products reproduce
//! the continuum compositions without further weights.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use ndarray_linalg::{Eig, Eigh, JobSvd, QR, SVDDC, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::processes::{KernelKind, ProcessKernel, SeparableFactors};

/// Singular values below this fraction of the largest are treated as zero
/// and dropped from the stored mode lists. Dropped modes stay accounted for:
/// `complete` remains true and kernel assembly adds their identity part.
const NUMERICAL_ZERO: f64 = 1e-12;

/// Relative gap under which neighboring singular values are treated as one
/// degenerate cluster during Takagi phase correction.
const CLUSTER_GAP: f64 = 1e-8;

fn frob(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dagger(a: &ArrayView2<'_, Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

/// Result of decomposing a two-argument kernel into orthonormal mode pairs
/// with nonnegative coefficients.
///
/// Mode functions are stored as rows, L2-orthonormal on their grid
/// (Σ|φ(ω)|²Δω = 1). For symmetric kernels the left and right mode sets
/// coincide and `output_modes` is empty. Coefficients are descending;
/// trailing numerically-zero modes are not stored, but `complete` records
/// that the rest of the basis carries zero weight, so operator assembly may
/// treat it as exactly identity-passing. `truncated` drops that guarantee.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    coefficients: Vec<f64>,
    input_modes: Array2<Complex64>,
    output_modes: Option<Array2<Complex64>>,
    grid_rows: FrequencyGrid,
    grid_cols: FrequencyGrid,
    complete: bool,
}

impl SchmidtData {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Rows are the left mode functions φ_k on the row grid.
    pub fn input_modes(&self) -> ArrayView2<'_, Complex64> {
        self.input_modes.view()
    }

    /// Rows are the right mode functions ψ_k on the column grid; for a
    /// symmetric kernel these are the input modes.
    pub fn output_modes(&self) -> ArrayView2<'_, Complex64> {
        match &self.output_modes {
            Some(m) => m.view(),
            None => self.input_modes.view(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.output_modes.is_none()
    }

    pub fn grid_rows(&self) -> FrequencyGrid {
        self.grid_rows
    }

    pub fn grid_cols(&self) -> FrequencyGrid {
        self.grid_cols
    }

    /// True when the unstored remainder of the basis is numerically zero.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Number of coefficients above `rel_cut` times the largest.
    pub fn rank(&self, rel_cut: f64) -> usize {
        let max = self.coefficients.first().copied().unwrap_or(0.0);
        self.coefficients.iter().filter(|&&r| r > rel_cut * max).count()
    }

    /// Keeps the leading `keep` modes and marks the data incomplete, so
    /// kernels assembled from it no longer silently pretend unitarity.
    pub fn truncated(&self, keep: usize) -> SchmidtData {
        let keep = keep.min(self.coefficients.len());
        SchmidtData {
            coefficients: self.coefficients[..keep].to_vec(),
            input_modes: self.input_modes.slice(ndarray::s![..keep, ..]).to_owned(),
            output_modes: self
                .output_modes
                .as_ref()
                .map(|m| m.slice(ndarray::s![..keep, ..]).to_owned()),
            grid_rows: self.grid_rows,
            grid_cols: self.grid_cols,
            complete: false,
        }
    }

    /// Returns a copy with every coefficient multiplied by `factor` and the
    /// modes untouched. Valid because the decomposed matrix is linear in the
    /// kernel; callers use it to reuse one factorization across gain scales.
    pub(crate) fn scaled(&self, factor: f64) -> SchmidtData {
        debug_assert!(factor >= 0.0);
        SchmidtData {
            coefficients: self.coefficients.iter().map(|r| r * factor).collect(),
            ..self.clone()
        }
    }

    /// Max deviation of both mode Gram matrices from the identity.
    pub fn gram_deviation(&self) -> f64 {
        let dev = |m: &ArrayView2<'_, Complex64>, step: f64| -> f64 {
            let gram = m.dot(&dagger(m)) * Complex64::from(step);
            let mut worst = 0.0f64;
            for ((i, j), v) in gram.indexed_iter() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).norm());
            }
            worst
        };
        let input = dev(&self.input_modes.view(), self.grid_rows.step());
        let output = match &self.output_modes {
            Some(m) => dev(&m.view(), self.grid_cols.step()),
            None => 0.0,
        };
        input.max(output)
    }

    /// Rebuilds the discretized gain matrix from the stored modes.
    ///
    /// Symmetric kernels reconstruct as Σ_k r_k φ_k*(ω)φ_k*(ω′); general
    /// kernels as −Σ_k r_k φ_k(ω_in)ψ_k*(ω_out), the sign being part of the
    /// stored output-mode phases.
    pub fn reconstruct_gain(&self) -> Array2<Complex64> {
        let (nr, nc) = (self.grid_rows.n_points(), self.grid_cols.n_points());
        if self.coefficients.is_empty() {
            return Array2::<Complex64>::zeros((nr, nc));
        }
        let w = self.grid_rows.step().sqrt() * self.grid_cols.step().sqrt();
        if self.is_symmetric() {
            let phis_conj = self.input_modes.mapv(|z| z.conj());
            let mut weighted = phis_conj.clone();
            for (mut row, &r) in weighted.axis_iter_mut(Axis(0)).zip(&self.coefficients) {
                row.mapv_inplace(|z| z * Complex64::from(r * w));
            }
            phis_conj.t().to_owned().dot(&weighted)
        } else {
            let mut weighted = self.output_modes().mapv(|z| z.conj());
            for (mut row, &r) in weighted.axis_iter_mut(Axis(0)).zip(&self.coefficients) {
                row.mapv_inplace(|z| z * Complex64::from(-r * w));
            }
            self.input_modes.t().to_owned().dot(&weighted)
        }
    }
}

/// Autonne–Takagi factorization of a symmetric kernel: gain = conj(Φ)ᵀ·diag(r)·conj(Φ)
/// with Φ rows the orthonormal mode functions.
///
/// The kernel must be symmetric within 1e-8 relative Frobenius; it is
/// symmetrized exactly before factorization. Fails with a numerical error if
/// the reconstruction check does not hold afterwards.
pub fn takagi(kernel: &ProcessKernel) -> Result<Arc<SchmidtData>> {
    if kernel.kind() != KernelKind::Jsa {
        return Err(Error::usage(
            "takagi factorization applies to symmetric process kernels; use svd_schmidt",
        ));
    }
    kernel.schmidt()
}

/// Plain Schmidt (singular value) decomposition of any kernel.
pub fn svd_schmidt(kernel: &ProcessKernel) -> Result<Arc<SchmidtData>> {
    match kernel.kind() {
        KernelKind::Tf => kernel.schmidt(),
        // A symmetric kernel's cache holds the Takagi form; an explicit SVD
        // request bypasses it (used e.g. to cross-check coefficients).
        KernelKind::Jsa => Ok(Arc::new(dense_svd(
            &kernel.gain_matrix(),
            kernel.grid_rows(),
            kernel.grid_cols(),
        )?)),
    }
}

/// Cache-filling entry point used by `ProcessKernel::schmidt`.
pub(crate) fn decompose(kernel: &ProcessKernel) -> Result<SchmidtData> {
    match kernel.kind() {
        KernelKind::Jsa => takagi_gain(&kernel.gain_matrix(), kernel.grid_rows()),
        KernelKind::Tf => match kernel.separable() {
            Some(factors) => separable_svd(factors, kernel.grid_rows(), kernel.grid_cols()),
            None => dense_svd(&kernel.gain_matrix(), kernel.grid_rows(), kernel.grid_cols()),
        },
    }
}

fn sort_descending(values: &mut Vec<f64>, modes: &mut Array2<Complex64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut sorted_modes = Array2::<Complex64>::zeros(modes.raw_dim());
    for (dst, &src) in order.iter().enumerate() {
        sorted_modes.row_mut(dst).assign(&modes.row(src));
    }
    *values = sorted_vals;
    *modes = sorted_modes;
}

fn takagi_gain(gain: &Array2<Complex64>, grid: FrequencyGrid) -> Result<SchmidtData> {
    let n = gain.nrows();
    if gain.ncols() != n {
        return Err(Error::usage("takagi factorization needs a square matrix"));
    }
    let norm = frob(gain);
    let asym = {
        let diff = gain - &gain.t();
        frob(&diff)
    };
    if asym > 1e-8 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::validation(format!(
            "kernel is not symmetric: ‖K−Kᵀ‖ = {asym:.3e} vs ‖K‖ = {norm:.3e}"
        )));
    }
    let sym = (gain + &gain.t()) * Complex64::from(0.5);

    let all_real = sym.iter().all(|z| z.im == 0.0);
    let (mut r, w_cols) = if all_real {
        takagi_real(&sym)?
    } else {
        takagi_complex(&sym)?
    };

    // Drop numerically-zero modes; the basis stays complete.
    let r0 = r.first().copied().unwrap_or(0.0);
    let keep = r.iter().filter(|&&v| v > NUMERICAL_ZERO * r0).count();
    r.truncate(keep);
    let w_cols = w_cols.slice(ndarray::s![.., ..keep]).to_owned();

    // Reconstruction guard: W·diag(r)·Wᵀ must reproduce the symmetrized gain.
    let mut weighted = w_cols.t().to_owned();
    for (mut row, &rv) in weighted.axis_iter_mut(Axis(0)).zip(&r) {
        row.mapv_inplace(|z| z * Complex64::from(rv));
    }
    let rebuilt = w_cols.dot(&weighted);
    let resid = frob(&(&rebuilt - &sym));
    if norm > 0.0 && resid > 1e-8 * norm {
        return Err(Error::numerical(format!(
            "takagi reconstruction failed: relative residual {:.3e}",
            resid / norm
        )));
    }

    // Mode functions: φ_k = conj(w_k)/√Δω, stored as rows.
    let scale = Complex64::from(1.0 / grid.step().sqrt());
    let phis = w_cols.t().mapv(|z| z.conj() * scale);

    Ok(SchmidtData {
        coefficients: r,
        input_modes: phis,
        output_modes: None,
        grid_rows: grid,
        grid_cols: grid,
        complete: true,
    })
}

/// Real symmetric case: eigendecomposition, with i-phases absorbing negative
/// eigenvalues (A = Σ λ e eᵀ = Σ |λ| (√phase·e)(√phase·e)ᵀ).
fn takagi_real(sym: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let real = sym.mapv(|z| z.re);
    let (vals, vecs) = real.eigh(UPLO::Lower)?;
    let n = vals.len();
    let mut r: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    let mut w = Array2::<Complex64>::zeros((n, n));
    for (k, &lambda) in vals.iter().enumerate() {
        let phase = if lambda >= 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        for i in 0..n {
            w[(i, k)] = phase * vecs[(i, k)];
        }
    }
    // Present as rows temporarily for the shared sort, then restore columns.
    let mut rows = w.t().to_owned();
    sort_descending(&mut r, &mut rows);
    Ok((r, rows.t().to_owned()))
}

/// Complex case: SVD plus a symmetric-square-root phase correction,
/// performed per degenerate singular-value cluster.
fn takagi_complex(sym: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let (u_opt, s, vt_opt) = sym.svddc(JobSvd::Some)?;
    let u = u_opt.ok_or_else(|| Error::numerical("SVD returned no left vectors"))?;
    let vt = vt_opt.ok_or_else(|| Error::numerical("SVD returned no right vectors"))?;
    let s0 = s.first().copied().unwrap_or(0.0);

    // C = U†·conj(V) is unitary and block-symmetric on equal-σ clusters;
    // W = U·√C then gives A = W·Σ·Wᵀ.
    let c = dagger(&u.view()).dot(&vt.t());

    let n = s.len();
    let mut b = Array2::<Complex64>::zeros((n, n));
    let mut start = 0;
    while start < n {
        let mut stop = start + 1;
        while stop < n && (s[stop - 1] - s[stop]).abs() <= CLUSTER_GAP * s0 {
            stop += 1;
        }
        if s[start] <= NUMERICAL_ZERO * s0 {
            // Zero cluster: phases are arbitrary, identity keeps W unitary.
            for i in start..stop {
                b[(i, i)] = Complex64::new(1.0, 0.0);
            }
        } else {
            let block = c.slice(ndarray::s![start..stop, start..stop]).to_owned();
            let root = symmetric_unitary_sqrt(&block)?;
            b.slice_mut(ndarray::s![start..stop, start..stop]).assign(&root);
        }
        start = stop;
    }

    let w = u.dot(&b);
    Ok((s.to_vec(), w))
}

/// Principal-branch square root of a symmetric unitary matrix, built from
/// the spectral projectors of its (normal) eigendecomposition. Eigenvalue
/// groups share one branch choice so the root stays symmetric.
fn symmetric_unitary_sqrt(c: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let g = c.nrows();
    if g == 1 {
        return Ok(ndarray::array![[c[(0, 0)].sqrt()]]);
    }
    let (vals, vecs) = c.eig()?;
    let mut assigned = vec![false; g];
    let mut root = Array2::<Complex64>::zeros((g, g));
    for i in 0..g {
        if assigned[i] {
            continue;
        }
        let mut members = vec![i];
        assigned[i] = true;
        for j in (i + 1)..g {
            if !assigned[j] && (vals[i] - vals[j]).norm() <= 1e-7 {
                members.push(j);
                assigned[j] = true;
            }
        }
        let mean: Complex64 = members.iter().map(|&m| vals[m]).sum::<Complex64>()
            / Complex64::from(members.len() as f64);
        let lambda = mean / Complex64::from(mean.norm().max(f64::MIN_POSITIVE));
        // Orthonormalize the group's eigenvectors; zgeev does not guarantee
        // orthogonality inside degenerate subspaces.
        let mut cols = Array2::<Complex64>::zeros((g, members.len()));
        for (dst, &m) in members.iter().enumerate() {
            cols.column_mut(dst).assign(&vecs.column(m));
        }
        let (q, _) = cols.qr()?;
        let projector = q.dot(&dagger(&q.view()));
        root = root + projector * lambda.sqrt();
    }
    // Symmetry holds analytically; trim floating-point drift.
    let root = (&root + &root.t()) * Complex64::from(0.5);
    Ok(root)
}

fn dense_svd(
    gain: &Array2<Complex64>,
    grid_rows: FrequencyGrid,
    grid_cols: FrequencyGrid,
) -> Result<SchmidtData> {
    let (u_opt, s, vt_opt) = gain.svddc(JobSvd::Some)?;
    let u = u_opt.ok_or_else(|| Error::numerical("SVD returned no left vectors"))?;
    let vt = vt_opt.ok_or_else(|| Error::numerical("SVD returned no right vectors"))?;
    finish_svd(u, s.to_vec(), vt, grid_rows, grid_cols)
}

/// Schmidt data of a kernel stored as Σ_m inputs_m(ω_in)·outputs_m(ω_out):
/// thin QR of both factor stacks reduces the SVD to an M×M problem.
fn separable_svd(
    factors: &SeparableFactors,
    grid_rows: FrequencyGrid,
    grid_cols: FrequencyGrid,
) -> Result<SchmidtData> {
    let m = factors.inputs.len();
    let (nr, nc) = (grid_rows.n_points(), grid_cols.n_points());
    let sr = grid_rows.step().sqrt();
    let sc = grid_cols.step().sqrt();
    let mut x = Array2::<Complex64>::zeros((nr, m));
    let mut y = Array2::<Complex64>::zeros((nc, m));
    for (j, f) in factors.inputs.iter().enumerate() {
        let col = f.samples().mapv(|z| z * Complex64::from(sr * factors.amplitude));
        x.column_mut(j).assign(&col);
    }
    for (j, f) in factors.outputs.iter().enumerate() {
        let col = f.samples().mapv(|z| z * Complex64::from(sc));
        y.column_mut(j).assign(&col);
    }
    let (qx, rx) = x.qr()?;
    let (qy, ry) = y.qr()?;
    let small = rx.dot(&ry.t());
    let (u_opt, s, vt_opt) = small.svddc(JobSvd::Some)?;
    let u = u_opt.ok_or_else(|| Error::numerical("SVD returned no left vectors"))?;
    let vt = vt_opt.ok_or_else(|| Error::numerical("SVD returned no right vectors"))?;
    finish_svd(qx.dot(&u), s.to_vec(), vt.dot(&qy.t()), grid_rows, grid_cols)
}

fn finish_svd(
    u: Array2<Complex64>,
    s: Vec<f64>,
    vt: Array2<Complex64>,
    grid_rows: FrequencyGrid,
    grid_cols: FrequencyGrid,
) -> Result<SchmidtData> {
    let s0 = s.first().copied().unwrap_or(0.0);
    let keep = s.iter().filter(|&&v| v > NUMERICAL_ZERO * s0).count();
    let inv_sr = Complex64::from(1.0 / grid_rows.step().sqrt());
    let inv_sc = Complex64::from(1.0 / grid_cols.step().sqrt());
    // φ_k = u_k/√Δ_in; ψ_k = −v_k/√Δ_out. The minus makes the stored TF
    // decomposition −Σ r φ ψ* hold with nonnegative coefficients.
    let phis = u.slice(ndarray::s![.., ..keep]).t().mapv(|z| z * inv_sr);
    let psis = vt.slice(ndarray::s![..keep, ..]).mapv(|z| -z.conj() * inv_sc);
    Ok(SchmidtData {
        coefficients: s[..keep].to_vec(),
        input_modes: phis,
        output_modes: Some(psis),
        grid_rows,
        grid_cols,
        complete: true,
    })
}

/// Squeezer kernels U^P, V^P of a parametric pair source:
/// U^P(ω,ω′) = Σ_k φ_k*(ω)·cosh(r_k)·φ_k(ω′), V^P with sinh and φ_k*φ_k*.
#[derive(Debug, Clone)]
pub struct PdcKernels {
    up: Array2<Complex64>,
    vp: Array2<Complex64>,
    grid: FrequencyGrid,
    schmidt: Arc<SchmidtData>,
}

impl PdcKernels {
    pub fn up(&self) -> &Array2<Complex64> {
        &self.up
    }

    pub fn vp(&self) -> &Array2<Complex64> {
        &self.vp
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    /// Schmidt data the kernels were assembled from (gain scale applied).
    pub fn schmidt(&self) -> &Arc<SchmidtData> {
        &self.schmidt
    }

    /// Assembles the kernels from already-decomposed data.
    pub fn from_schmidt(schmidt: Arc<SchmidtData>) -> Result<Self> {
        if !schmidt.is_symmetric() {
            return Err(Error::usage(
                "squeezer kernels need a symmetric (Takagi) decomposition",
            ));
        }
        let grid = schmidt.grid_rows();
        let n = grid.n_points();
        let step = grid.step();
        let modes = schmidt.input_modes();
        let r = schmidt.coefficients();

        let weighted = |f: &dyn Fn(f64) -> f64, conj_right: bool| -> Array2<Complex64> {
            let mut rows = if conj_right {
                modes.mapv(|z| z.conj())
            } else {
                modes.to_owned()
            };
            for (mut row, &rv) in rows.axis_iter_mut(Axis(0)).zip(r) {
                row.mapv_inplace(|z| z * Complex64::from(f(rv) * step));
            }
            dagger(&modes).dot(&rows)
        };

        let (up, vp) = if schmidt.is_complete() {
            let mut up = weighted(&|rv| rv.cosh() - 1.0, false);
            for i in 0..n {
                up[(i, i)] += 1.0;
            }
            (up, weighted(&|rv| rv.sinh(), true))
        } else {
            // Literal partial sums: deliberately non-unitary when modes are
            // missing, so the commutation check can flag the truncation.
            (weighted(&|rv| rv.cosh(), false), weighted(&|rv| rv.sinh(), true))
        };
        Ok(PdcKernels { up, vp, grid, schmidt })
    }
}

/// Builds the squeezer kernels of a symmetric kernel at the given gain
/// scale. The decomposition is taken from the kernel's cache, so repeated
/// calls at different scales factorize only once.
pub fn pdc_kernels(jsa: &ProcessKernel, scale: f64) -> Result<PdcKernels> {
    if jsa.kind() != KernelKind::Jsa {
        return Err(Error::usage("squeezer kernels require a pair-source kernel"));
    }
    if !scale.is_finite() || scale < 0.0 {
        return Err(Error::config(format!("gain scale must be ≥ 0, got {scale}")));
    }
    let base = jsa.schmidt()?;
    // scale = 0 is handled by the assembly itself: cosh(0)−1 and sinh(0)
    // vanish exactly, leaving U^P = I, V^P = 0.
    let scaled = if scale == 1.0 { base } else { Arc::new(base.scaled(scale)) };
    PdcKernels::from_schmidt(scaled)
}

/// Frequency-converter kernels of a sum-frequency process, from the Schmidt
/// angles θ_k of the discretized transfer function:
/// U^Q_a = Σψ*cosθψ, V^Q_a = Σψ*sinθφ, U^Q_b = Σφ*cosθφ, V^Q_b = Σφ*sinθψ.
#[derive(Debug, Clone)]
pub struct SfgKernels {
    uqa: Array2<Complex64>,
    vqa: Array2<Complex64>,
    uqb: Array2<Complex64>,
    vqb: Array2<Complex64>,
    grid_in: FrequencyGrid,
    grid_out: FrequencyGrid,
    over_converted: bool,
    schmidt: Arc<SchmidtData>,
}

impl SfgKernels {
    pub fn uqa(&self) -> &Array2<Complex64> {
        &self.uqa
    }

    pub fn vqa(&self) -> &Array2<Complex64> {
        &self.vqa
    }

    pub fn uqb(&self) -> &Array2<Complex64> {
        &self.uqb
    }

    pub fn vqb(&self) -> &Array2<Complex64> {
        &self.vqb
    }

    pub fn grid_in(&self) -> FrequencyGrid {
        self.grid_in
    }

    pub fn grid_out(&self) -> FrequencyGrid {
        self.grid_out
    }

    /// True when any Schmidt angle exceeded π/2 (conversion past unity).
    pub fn over_converted(&self) -> bool {
        self.over_converted
    }

    pub fn schmidt(&self) -> &Arc<SchmidtData> {
        &self.schmidt
    }

    pub fn from_schmidt(schmidt: Arc<SchmidtData>) -> Result<Self> {
        let grid_in = schmidt.grid_rows();
        let grid_out = schmidt.grid_cols();
        if (grid_in.step() - grid_out.step()).abs() > 1e-12 * grid_in.step() {
            return Err(Error::usage(
                "converter kernels need equal sample spacing on both grids",
            ));
        }
        let step = grid_in.step();
        let angles = schmidt.coefficients();
        let over_converted = angles.iter().any(|&t| t > std::f64::consts::FRAC_PI_2 + 1e-6);
        if over_converted {
            log::warn!(
                "largest conversion angle {:.4} rad exceeds π/2; over-conversion regime",
                angles.first().copied().unwrap_or(0.0)
            );
        }

        let im = schmidt.input_modes();
        let om = schmidt.output_modes();

        // left^H · diag(f(θ)·Δω) · right
        let product = |left: &ArrayView2<'_, Complex64>,
                       right: &ArrayView2<'_, Complex64>,
                       f: &dyn Fn(f64) -> f64|
         -> Array2<Complex64> {
            let mut rows = right.to_owned();
            for (mut row, &t) in rows.axis_iter_mut(Axis(0)).zip(angles) {
                row.mapv_inplace(|z| z * Complex64::from(f(t) * step));
            }
            dagger(left).dot(&rows)
        };

        let complete = schmidt.is_complete();
        let cos_part = |x: f64| if complete { x.cos() - 1.0 } else { x.cos() };
        let mut uqa = product(&om, &om, &cos_part);
        let mut uqb = product(&im, &im, &cos_part);
        if complete {
            for i in 0..grid_out.n_points() {
                uqa[(i, i)] += 1.0;
            }
            for i in 0..grid_in.n_points() {
                uqb[(i, i)] += 1.0;
            }
        }
        let vqa = product(&om, &im, &|x| x.sin());
        let vqb = product(&im, &om, &|x| x.sin());

        Ok(SfgKernels {
            uqa,
            vqa,
            uqb,
            vqb,
            grid_in,
            grid_out,
            over_converted,
            schmidt,
        })
    }
}

/// Builds the converter kernels of a transfer function, reusing the
/// kernel's cached decomposition.
pub fn sfg_kernels(tf: &ProcessKernel) -> Result<SfgKernels> {
    if tf.kind() != KernelKind::Tf {
        return Err(Error::usage("converter kernels require a transfer function"));
    }
    SfgKernels::from_schmidt(tf.schmidt()?)
}

/// Bogoliubov kernel pairs whose defining commutator invariant can be
/// checked numerically.
pub trait BogoliubovKernels {
    /// Frobenius residual of the invariant, divided by √n so the value is
    /// on the per-entry scale of the identity.
    fn commutation_residual(&self) -> f64;
}

impl BogoliubovKernels for PdcKernels {
    /// U^P·U^P† − V^P·V^P† = I.
    fn commutation_residual(&self) -> f64 {
        let n = self.grid.n_points();
        let mut m = self.up.dot(&dagger(&self.up.view())) - self.vp.dot(&dagger(&self.vp.view()));
        for i in 0..n {
            m[(i, i)] -= 1.0;
        }
        frob(&m) / (n as f64).sqrt()
    }
}

impl BogoliubovKernels for SfgKernels {
    /// U^Q_a·U^Q_a† + V^Q_a·V^Q_a† = I.
    fn commutation_residual(&self) -> f64 {
        let n = self.grid_out.n_points();
        let mut m =
            self.uqa.dot(&dagger(&self.uqa.view())) + self.vqa.dot(&dagger(&self.vqa.view()));
        for i in 0..n {
            m[(i, i)] -= 1.0;
        }
        frob(&m) / (n as f64).sqrt()
    }
}

/// Commutator-preservation residual of a kernel pair; ≲1e-6 for kernels
/// assembled from a complete decomposition, large under truncation.
pub fn check_commutation<K: BogoliubovKernels>(kernels: &K) -> f64 {
    kernels.commutation_residual()
}
