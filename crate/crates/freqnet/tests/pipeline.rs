//! End-to-end checks of the composed source → converter → readout pipeline
//! against closed-form oracles, plus randomized structural properties of the
//! decomposition layer.

use freqnet::bogoliubov::{pdc_kernels, sfg_kernels, takagi, PdcKernels, SfgKernels};
use freqnet::grid::make_grid;
use freqnet::network::{
    compose, covariance_from_amplitudes, ideal_output_oracle, pdc_bin_covariance,
    CovarianceMatrix,
};
use freqnet::processes::{
    build_mqpg_tf, build_type0_jsa, normalize_jsa, set_conversion_unity, PmProfile,
    ProcessKernel,
};
use freqnet::spectral::{gaussian_bin, ModeSet, NetworkUnitary};
use freqnet::FrequencyGrid;
use ndarray::Array2;
use ndarray_linalg::SVD;
use num_complex::Complex64;
use proptest::prelude::*;

fn bins_at(grid: FrequencyGrid, centers: &[f64], fwhm: f64) -> ModeSet {
    let modes: Vec<_> = centers
        .iter()
        .map(|&c| gaussian_bin(grid, c, fwhm).unwrap())
        .collect();
    ModeSet::new(modes, centers.to_vec()).unwrap()
}

struct Pipeline {
    pdc: PdcKernels,
    sfg: SfgKernels,
    bins: ModeSet,
    outs: ModeSet,
}

fn build_pipeline(
    grid_n: usize,
    centers: &[f64],
    bin_fwhm: f64,
    jsa_fwhm: f64,
    mean_photons: f64,
    u: &NetworkUnitary,
) -> Pipeline {
    let grid = make_grid(0.0, 1.0, grid_n).unwrap();
    let jsa = build_type0_jsa(grid, 0.5, jsa_fwhm, PmProfile::Gaussian).unwrap();
    let scale = normalize_jsa(&jsa, mean_photons).unwrap();
    let pdc = pdc_kernels(&jsa, scale).unwrap();
    let bins = bins_at(grid, centers, bin_fwhm);
    let outs = bins_at(grid, centers, bin_fwhm);
    let tf = build_mqpg_tf(u, &bins, &outs).unwrap();
    let (unity, _) = set_conversion_unity(&tf).unwrap();
    let sfg = sfg_kernels(&unity).unwrap();
    Pipeline { pdc, sfg, bins, outs }
}

fn max_entry_diff(a: &CovarianceMatrix, b: &CovarianceMatrix) -> f64 {
    (a.entries() - b.entries())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

fn assert_pipeline_matches_oracle(p: &Pipeline, u: &NetworkUnitary, tol: f64) {
    let amps = compose(&p.pdc, &p.sfg, &p.outs).unwrap();
    let sigma_out = covariance_from_amplitudes(&amps);
    let sigma_bins = pdc_bin_covariance(&p.pdc, &p.bins).unwrap();
    let oracle = ideal_output_oracle(u, &sigma_bins).unwrap();
    let dev = max_entry_diff(&sigma_out, &oracle);
    assert!(dev < tol, "pipeline deviates from the oracle by {dev}");
    let (_, physical) = sigma_out.check_physical().unwrap();
    assert!(physical);
}

#[test]
fn beamsplitter_pipeline_matches_the_symplectic_oracle() {
    let u = NetworkUnitary::balanced_beamsplitter();
    let p = build_pipeline(400, &[0.2, 0.8], 0.1, 0.05, 1.0, &u);
    assert_pipeline_matches_oracle(&p, &u, 1e-3);
}

#[test]
fn random_three_port_pipeline_matches_the_symplectic_oracle() {
    let u = NetworkUnitary::pseudo_random(3, 21).unwrap();
    // fwhm 0.06 at 0.3 spacing keeps the bins orthonormal to ~1e-8, well
    // inside the direct-readout gate.
    let p = build_pipeline(400, &[0.2, 0.5, 0.8], 0.06, 0.05, 1.0, &u);
    assert_pipeline_matches_oracle(&p, &u, 1e-3);
}

#[test]
fn narrowband_source_fits_the_analytic_two_mode_form() {
    let grid = make_grid(0.0, 1.0, 1201).unwrap();
    let jsa = build_type0_jsa(grid, 0.5, 0.005, PmProfile::Gaussian).unwrap();
    let scale = normalize_jsa(&jsa, 1.0).unwrap();
    let pdc = pdc_kernels(&jsa, scale).unwrap();
    let bins = bins_at(grid, &[0.2, 0.8], 0.1);
    let sigma = pdc_bin_covariance(&pdc, &bins).unwrap();
    let s = sigma.entries();

    // Fit r from the thermal diagonal, then demand the full cosh/sinh
    // structure of a two-mode squeezed state.
    let d = 0.25 * (s[(0, 0)] + s[(1, 1)] + s[(2, 2)] + s[(3, 3)]);
    let r = 0.5 * (2.0 * d).acosh();
    let c = 0.5 * (2.0 * r).sinh();
    let mut expected = Array2::<f64>::eye(4) * d;
    expected[(0, 2)] = c;
    expected[(2, 0)] = c;
    expected[(1, 3)] = -c;
    expected[(3, 1)] = -c;
    let dev = (s - &expected).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(dev < 1e-2, "deviation from analytic form {dev}");
    assert!(r > 0.05, "fitted squeezing too small to be meaningful: {r}");
}

#[test]
fn composite_amplitudes_keep_output_commutators() {
    let u = NetworkUnitary::pseudo_random(3, 5).unwrap();
    let p = build_pipeline(400, &[0.2, 0.5, 0.8], 0.06, 0.05, 1.0, &u);
    let amps = compose(&p.pdc, &p.sfg, &p.outs).unwrap();
    assert!(amps.commutator_deviation() < 1e-4);
}

fn random_symmetric_kernel(n: usize, entries: &[(f64, f64)]) -> ProcessKernel {
    let grid = make_grid(0.0, 1.0, n).unwrap();
    let raw = Array2::from_shape_fn((n, n), |(i, j)| {
        let (re, im) = entries[i * n + j];
        Complex64::new(re, im)
    });
    let sym = (&raw + &raw.t()) / Complex64::from(2.0);
    ProcessKernel::jsa(grid, sym).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn takagi_coefficients_equal_singular_values(
        n in 2usize..12,
        seed in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 144),
    ) {
        let kernel = random_symmetric_kernel(n, &seed);
        let data = takagi(&kernel).unwrap();
        let (_, sv, _) = kernel.gain_matrix().svd(false, false).unwrap();
        let coeffs = data.coefficients();
        prop_assert_eq!(coeffs.len(), sv.len());
        let scale = sv.iter().cloned().fold(1.0f64, f64::max);
        for (c, s) in coeffs.iter().zip(sv.iter()) {
            prop_assert!((c - s).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn takagi_reconstructs_the_gain_matrix(
        n in 2usize..12,
        seed in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 144),
    ) {
        let kernel = random_symmetric_kernel(n, &seed);
        let data = takagi(&kernel).unwrap();
        let gain = kernel.gain_matrix();
        let rebuilt = data.reconstruct_gain();
        let num: f64 = (&rebuilt - &gain).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = gain.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(num < 1e-9 * (1.0 + den));
    }

    #[test]
    fn oracle_metrics_ignore_global_phases(
        seed in 1u64..500,
        theta in 0.0f64..std::f64::consts::TAU,
        r in 0.05f64..1.0,
    ) {
        let base = NetworkUnitary::pseudo_random(2, seed).unwrap();
        let phase = Complex64::from_polar(1.0, theta);
        let shifted = NetworkUnitary::new(base.entries().mapv(|z| z * phase)).unwrap();
        let e = (2.0 * r).exp();
        let sigma = CovarianceMatrix::new(Array2::from_diag(&ndarray::arr1(&[
            0.5 * e,
            0.5 / e,
            0.5 / e,
            0.5 * e,
        ])))
        .unwrap();
        let a = ideal_output_oracle(&base, &sigma).unwrap();
        let b = ideal_output_oracle(&shifted, &sigma).unwrap();
        prop_assert!((a.purity().unwrap() - b.purity().unwrap()).abs() < 1e-10);
        prop_assert!((a.squeezing_db().unwrap() - b.squeezing_db().unwrap()).abs() < 1e-8);
    }

    #[test]
    fn placement_feasibility_is_sharp(
        n in 1usize..20,
        width in 0.01f64..0.2,
    ) {
        use freqnet::spectral::{place_bins, BinPlacement};
        let grid = make_grid(0.0, 1.0, 501).unwrap();
        let load = n as f64 * width;
        // Skip the knife edge itself; placement tolerates 1e-12 there.
        prop_assume!((load - 1.0).abs() > 1e-9);
        match place_bins(n, grid, 0.5, width).unwrap() {
            BinPlacement::Placed(set) => {
                prop_assert!(load < 1.0);
                let centers = set.centers();
                prop_assert_eq!(centers.len(), n);
                for (i, c) in centers.iter().enumerate() {
                    let mirror = centers[n - 1 - i];
                    prop_assert!((c + mirror - 1.0).abs() < 1e-9);
                }
                for pair in centers.windows(2) {
                    prop_assert!(pair[1] - pair[0] >= width * (1.0 - 1e-9));
                }
            }
            BinPlacement::Infeasible { spacing, width: w } => {
                prop_assert!(load > 1.0);
                prop_assert!(spacing < w);
            }
        }
    }
}

#[test]
fn sfg_unitarity_splits_energy_between_converted_and_leftover() {
    // For any input function f, ‖U^Q_a f‖² + ‖V^Q_a f‖² must equal ‖f‖²:
    // what is not converted stays behind.
    let u = NetworkUnitary::balanced_beamsplitter();
    let grid = make_grid(0.0, 1.0, 300).unwrap();
    let bins = bins_at(grid, &[0.2, 0.8], 0.08);
    let outs = bins_at(grid, &[0.2, 0.8], 0.08);
    let tf = build_mqpg_tf(&u, &bins, &outs).unwrap();
    for factor in [0.3, 0.7, 1.0] {
        let (scaled, _) = set_conversion_unity(&tf).unwrap();
        let values = scaled.values() * Complex64::from(factor);
        let tf2 = ProcessKernel::tf(grid, grid, values).unwrap();
        let sfg = sfg_kernels(&tf2).unwrap();
        let step = grid.step();
        // Probe with each bin and with an asymmetric superposition.
        let mut probes: Vec<ndarray::Array1<Complex64>> = vec![
            bins.mode(0).samples().to_owned(),
            bins.mode(1).samples().to_owned(),
        ];
        probes.push(
            (bins.mode(0).samples().to_owned() * Complex64::from(0.6)
                + bins.mode(1).samples() * Complex64::new(0.0, 0.8))
            .to_owned(),
        );
        for f in probes {
            let converted = sfg.vqa().dot(&f);
            let kept = sfg.uqa().dot(&f);
            let norm = |v: &ndarray::Array1<Complex64>| {
                v.iter().map(|z| z.norm_sqr()).sum::<f64>() * step
            };
            let total = norm(&converted) + norm(&kept);
            let input = norm(&f);
            assert!(
                (total - input).abs() < 1e-6 * input.max(1.0),
                "energy split {total} vs input {input} at factor {factor}"
            );
        }
    }
}
