//! Classical beamforming estimators: delay-and-sum, Capon/MVDR and the
//! linear prediction method.

use num_complex::Complex64;

use crate::array_model::{
    manifold_matrix, validate_grid, ArrayGeometry, CovarianceEstimate, SpatialSpectrum,
};
use crate::error::{DoaError, Result};
use crate::estimate::DoaEstimate;
use crate::numerics::{hermitian_eig, poly_roots, solve_loaded};
use crate::subspace::phase_to_angle_deg;

fn check_dims(cov: &CovarianceEstimate, geometry: &ArrayGeometry) -> Result<()> {
    if cov.m_sensors() != geometry.m_sensors() {
        return Err(DoaError::InvalidInput(format!(
            "covariance is {}x{} but the array has {} sensors",
            cov.m_sensors(),
            cov.m_sensors(),
            geometry.m_sensors()
        )));
    }
    Ok(())
}

/// Delay-and-sum (conventional) spatial spectrum
/// `P(θ) = a^H(θ) R a(θ) / M²`.
pub fn das_spectrum(
    cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    grid_deg: &[f64],
) -> Result<SpatialSpectrum> {
    check_dims(cov, geometry)?;
    validate_grid(grid_deg)?;
    let a = manifold_matrix(geometry, grid_deg)?;
    let m2 = (cov.m_sensors() * cov.m_sensors()) as f64;
    let ra = cov.matrix() * &a;
    let values = quadratic_forms(&a, &ra)
        .into_iter()
        .map(|q| (q / m2).max(0.0))
        .collect();
    SpatialSpectrum::new(grid_deg.to_vec(), values)
}

/// Capon (MVDR) spatial spectrum `P(θ) = 1 / (a^H (R + loading·I)^{-1} a)`,
/// computed through a Cholesky solve rather than an explicit inverse.
pub fn capon_spectrum(
    cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    grid_deg: &[f64],
    loading: f64,
) -> Result<SpatialSpectrum> {
    check_dims(cov, geometry)?;
    validate_grid(grid_deg)?;
    let a = manifold_matrix(geometry, grid_deg)?;
    let solved = solve_loaded(cov.matrix(), loading, &a)?;
    let values = quadratic_forms(&a, &solved)
        .into_iter()
        .map(|q| 1.0 / q.max(1e-300))
        .collect();
    SpatialSpectrum::new(grid_deg.to_vec(), values)
}

/// Default Capon diagonal load: `1e-3·trace(R)/M` when the covariance is
/// snapshot-starved (N < 2M), otherwise 0. Exact covariances never need
/// loading.
pub fn default_capon_loading(cov: &CovarianceEstimate) -> f64 {
    if !cov.is_exact() && cov.n_snapshots() < 2 * cov.m_sensors() {
        1e-3 * cov.trace() / cov.m_sensors() as f64
    } else {
        0.0
    }
}

/// Linear prediction DOA estimation.
///
/// Takes the minimum-eigenvalue eigenvector of the leading (p+1)×(p+1)
/// block of the covariance, normalizes its last entry to one to obtain the
/// prediction coefficients, and reads DOAs off the prediction polynomial
/// roots nearest the unit circle (from inside).
pub fn linear_prediction_doas(
    cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    k_sources: usize,
    order: Option<usize>,
) -> Result<DoaEstimate> {
    check_dims(cov, geometry)?;
    let m = cov.m_sensors();
    let p = order.unwrap_or(m - 1);
    if k_sources == 0 {
        return Err(DoaError::InvalidInput("k_sources must be at least 1".into()));
    }
    if p < k_sources || p > m - 1 {
        return Err(DoaError::InvalidInput(format!(
            "prediction order {p} outside [k_sources={k_sources}, M-1={}]",
            m - 1
        )));
    }

    let sub = cov.matrix().view((0, 0), (p + 1, p + 1)).clone_owned();
    let eig = hermitian_eig(&sub)?;
    let v = eig.eigenvectors.column(p); // minimum eigenvalue (descending order)
    let last = v[p];
    if last.norm() < 1e-10 {
        return Err(DoaError::DegenerateInput(
            "minimum eigenvector has a vanishing last entry; covariance carries no \
             prediction structure"
            .into(),
        ));
    }
    let coeffs: Vec<Complex64> = v.iter().map(|z| (z / last).conj()).collect();
    // All-zero prediction coefficients mean a pure-delay polynomial, which is
    // the white-noise case as well (e.g. R = I resolving to a basis vector).
    if coeffs[..p].iter().all(|c| c.norm() < 1e-10) {
        return Err(DoaError::DegenerateInput(
            "prediction coefficients vanish; covariance carries no prediction structure".into(),
        ));
    }

    // The prediction error for a window x is v^H x, so the zero condition on
    // steering vectors reads Σ conj(v_m) z^m = 0.
    let roots = poly_roots(&coeffs)?;
    let spacing = geometry.spacing_wavelengths();
    let selected = select_circle_roots(&roots, k_sources, spacing)?;

    let mut angles: Vec<f64> = selected
        .iter()
        .map(|z| phase_to_angle_deg(z.arg(), spacing))
        .collect::<Result<_>>()?;
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut est = DoaEstimate::new(angles);
    est.diagnostics
        .insert("min_eigenvalue".into(), *eig.eigenvalues.last().unwrap());
    est.diagnostics.insert("order".into(), p as f64);
    Ok(est)
}

/// Keep roots inside or on the unit circle whose phase maps to a physical
/// angle, then pick `k` closest to the circle (largest |z|); deterministic
/// tie-break on |1-|z|| then phase.
pub(crate) fn select_circle_roots(
    roots: &[Complex64],
    k: usize,
    spacing: f64,
) -> Result<Vec<Complex64>> {
    let mu_max = 2.0 * std::f64::consts::PI * spacing * (1.0 + 1e-9);
    let mut inside: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|z| z.norm() <= 1.0 + 1e-9 && z.arg().abs() <= mu_max)
        .collect();
    inside.sort_by(|a, b| {
        let da = (1.0 - a.norm()).abs();
        let db = (1.0 - b.norm()).abs();
        da.partial_cmp(&db)
            .unwrap()
            .then(a.arg().partial_cmp(&b.arg()).unwrap())
    });
    if inside.len() < k {
        return Err(DoaError::EstimationFailure(format!(
            "only {} usable roots inside the unit disk, need {}",
            inside.len(),
            k
        )));
    }
    inside.truncate(k);
    Ok(inside)
}

/// Batch `Re(a_g^H b_g)` over matching columns: the quadratic form at every
/// grid angle at once.
fn quadratic_forms(a: &crate::CMat, b: &crate::CMat) -> Vec<f64> {
    (0..a.ncols())
        .map(|g| a.column(g).dotc(&b.column(g)).re)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::{exact_covariance, uniform_grid};
    use crate::test_util::{random_hpd, seeded_rng};
    use crate::CMat;

    fn geom(m: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(m).unwrap()
    }

    #[test]
    fn das_flat_for_identity() {
        let r = CovarianceEstimate::new(CMat::identity(4, 4), 100).unwrap();
        let grid = uniform_grid(1.0);
        let s = das_spectrum(&r, &geom(4), &grid).unwrap();
        for v in s.values() {
            assert!((v - 0.25).abs() < 1e-12); // a^H a / M² = 1/M
        }
    }

    #[test]
    fn das_peak_value_on_exact_single_source() {
        // P(θ0) = p + σ²/M evaluated directly: a^H R a = p M² + σ² M.
        let g = geom(8);
        let (p, sigma2) = (2.0, 0.5);
        let r = exact_covariance(&g, &[20.0], &[p], sigma2, None).unwrap();
        let grid: Vec<f64> = vec![-40.0, 0.0, 20.0, 60.0];
        let s = das_spectrum(&r, &g, &grid).unwrap();
        let at_source = s.values()[2];
        assert!((at_source - (p + sigma2 / 8.0)).abs() < 1e-10);
    }

    #[test]
    fn das_peaks_invariant_under_scaling() {
        let mut rng = seeded_rng(77);
        let r = CovarianceEstimate::new(random_hpd(&mut rng, 6, 0.5), 50).unwrap();
        let scaled = CovarianceEstimate::new(r.matrix().scale(7.5), 50).unwrap();
        let grid = uniform_grid(1.0);
        let s1 = das_spectrum(&r, &geom(6), &grid).unwrap();
        let s2 = das_spectrum(&scaled, &geom(6), &grid).unwrap();
        let argmax = |s: &SpatialSpectrum| {
            s.values()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        assert_eq!(argmax(&s1), argmax(&s2));
        for (a, b) in s1.values().iter().zip(s2.values()) {
            assert!((a * 7.5 - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn capon_flat_for_scaled_identity() {
        let sigma2 = 3.0;
        let r = CovarianceEstimate::new(CMat::identity(5, 5).scale(sigma2), 100).unwrap();
        let grid = uniform_grid(2.0);
        let s = capon_spectrum(&r, &geom(5), &grid, 0.0).unwrap();
        for v in s.values() {
            assert!((v - sigma2 / 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn capon_never_exceeds_das() {
        let mut rng = seeded_rng(5);
        let grid = uniform_grid(2.0);
        for _ in 0..25 {
            let r = CovarianceEstimate::new(random_hpd(&mut rng, 8, 0.2), 64).unwrap();
            let das = das_spectrum(&r, &geom(8), &grid).unwrap();
            let cap = capon_spectrum(&r, &geom(8), &grid, 0.0).unwrap();
            for (c, d) in cap.values().iter().zip(das.values()) {
                assert!(*c <= d * (1.0 + 1e-12), "capon {c} > das {d}");
            }
        }
    }

    #[test]
    fn capon_resolves_exact_pair() {
        let g = geom(8);
        // SNR 10 dB relative to unit noise
        let r = exact_covariance(&g, &[-10.0, 10.0], &[10.0, 10.0], 1.0, None).unwrap();
        let grid = uniform_grid(0.5);
        let s = capon_spectrum(&r, &g, &grid, 0.0).unwrap();
        let peaks = crate::eval::spectrum_peaks(&s);
        assert!(peaks.len() >= 2);
        let mut found: Vec<f64> = peaks[..2].iter().map(|p| p.angle_deg).collect();
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((found[0] + 10.0).abs() <= 0.5);
        assert!((found[1] - 10.0).abs() <= 0.5);
    }

    #[test]
    fn capon_heavy_loading_flattens() {
        let mut rng = seeded_rng(9);
        let r = CovarianceEstimate::new(random_hpd(&mut rng, 8, 0.1), 64).unwrap();
        let load = 1e6 * r.trace() / 8.0;
        let s = capon_spectrum(&r, &geom(8), &uniform_grid(1.0), load).unwrap();
        let max = s.values().iter().cloned().fold(f64::MIN, f64::max);
        let min = s.values().iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 1.01, "ratio {}", max / min);
    }

    #[test]
    fn lp_exact_single_source() {
        let g = geom(8);
        let r = exact_covariance(&g, &[20.0], &[1.0], 0.01, None).unwrap();
        let est = linear_prediction_doas(&r, &g, 1, None).unwrap();
        assert_eq!(est.angles_deg.len(), 1);
        assert!(
            (est.angles_deg[0] - 20.0).abs() < 0.1,
            "got {}",
            est.angles_deg[0]
        );

        // the selected root itself sits next to e^{jπ sin 20°}
        let eig = hermitian_eig(cov_matrix(&r)).unwrap();
        let v = eig.eigenvectors.column(7);
        let coeffs: Vec<Complex64> = v.iter().map(|z| (z / v[7]).conj()).collect();
        let roots = poly_roots(&coeffs).unwrap();
        let target = Complex64::from_polar(1.0, std::f64::consts::PI * 20f64.to_radians().sin());
        let best = roots
            .iter()
            .map(|z| (z - target).norm())
            .fold(f64::MAX, f64::min);
        assert!(best < 1e-3, "nearest root distance {best}");
    }

    fn cov_matrix(r: &CovarianceEstimate) -> &CMat {
        r.matrix()
    }

    #[test]
    fn lp_broadside_root_at_unity() {
        let g = geom(8);
        let r = exact_covariance(&g, &[0.0], &[1.0], 0.01, None).unwrap();
        let est = linear_prediction_doas(&r, &g, 1, None).unwrap();
        assert!(est.angles_deg[0].abs() < 1e-6, "got {}", est.angles_deg[0]);
    }

    #[test]
    fn lp_rejects_white_noise() {
        let r = CovarianceEstimate::new(CMat::identity(6, 6), 100).unwrap();
        assert!(matches!(
            linear_prediction_doas(&r, &geom(6), 1, None),
            Err(DoaError::DegenerateInput(_))
        ));
    }

    #[test]
    fn lp_symmetric_pair_gives_symmetric_roots() {
        let g = geom(8);
        let r = exact_covariance(&g, &[-25.0, 25.0], &[1.0, 1.0], 0.01, None).unwrap();
        let est = linear_prediction_doas(&r, &g, 2, None).unwrap();
        assert_eq!(est.angles_deg.len(), 2);
        assert!((est.angles_deg[0] + est.angles_deg[1]).abs() < 0.05);
    }

    #[test]
    fn lp_order_validation() {
        let g = geom(6);
        let r = exact_covariance(&g, &[5.0], &[1.0], 0.01, None).unwrap();
        assert!(linear_prediction_doas(&r, &g, 2, Some(1)).is_err());
        assert!(linear_prediction_doas(&r, &g, 1, Some(6)).is_err());
        assert!(linear_prediction_doas(&r, &g, 1, Some(3)).is_ok());
    }
}
