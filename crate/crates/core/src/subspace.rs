//! Signal/noise subspace machinery: MUSIC, Root-MUSIC, ESPRIT, unitary
//! ESPRIT and information-theoretic source enumeration.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::array_model::{
    forward_backward, manifold_matrix, unitary_matrix, unitary_transform, validate_grid,
    ArrayGeometry, CovarianceEstimate, SpatialSpectrum,
};
use crate::error::{DoaError, Result};
use crate::estimate::DoaEstimate;
use crate::numerics::{general_eigenvalues, hermitian_eig};
use crate::{CMat, RMat};

/// Orthonormal split of the observation space into signal and noise parts.
#[derive(Debug, Clone)]
pub struct SubspaceSplit {
    /// M×K basis of the signal subspace (largest eigenvalues first).
    pub signal_basis: CMat,
    /// M×(M-K) basis of the noise subspace.
    pub noise_basis: CMat,
    /// All M eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl SubspaceSplit {
    pub fn k_sources(&self) -> usize {
        self.signal_basis.ncols()
    }

    pub fn m_sensors(&self) -> usize {
        self.signal_basis.nrows()
    }

    /// Gap diagnostic `λ_K / λ_{K+1}`: large values indicate a clean split.
    pub fn eigen_gap(&self) -> f64 {
        let k = self.k_sources();
        self.eigenvalues[k - 1] / self.eigenvalues[k].max(1e-300)
    }
}

/// Partition the covariance eigenvectors into signal and noise bases.
pub fn subspace_split(cov: &CovarianceEstimate, k_sources: usize) -> Result<SubspaceSplit> {
    let m = cov.m_sensors();
    if k_sources == 0 || k_sources >= m {
        return Err(DoaError::InvalidInput(format!(
            "k_sources must satisfy 1 ≤ K < M, got K={k_sources}, M={m}"
        )));
    }
    let eig = hermitian_eig(cov.matrix())?;
    let signal_basis = eig.eigenvectors.columns(0, k_sources).clone_owned();
    let noise_basis = eig.eigenvectors.columns(k_sources, m - k_sources).clone_owned();
    Ok(SubspaceSplit {
        signal_basis,
        noise_basis,
        eigenvalues: eig.eigenvalues,
    })
}

/// Information-theoretic criterion for source enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceCountCriterion {
    /// Akaike: `AIC(k) = -2 log L_k + 2k(2M-k)`. Tends to overestimate.
    Aic,
    /// Minimum description length:
    /// `MDL(k) = -log L_k + ½ k(2M-k) log N`. Consistent as N → ∞.
    Mdl,
}

/// Criterion value for a candidate source count.
///
/// `log L_k = N(M-k)·log(geometric mean / arithmetic mean)` of the M-k
/// smallest eigenvalues: the sphericity-test likelihood of the noise
/// eigenvalues being equal.
fn criterion_value(
    eigenvalues: &[f64],
    n_snapshots: usize,
    k: usize,
    criterion: SourceCountCriterion,
) -> f64 {
    let m = eigenvalues.len();
    let noise = &eigenvalues[k..];
    let count = noise.len() as f64;
    let log_geo = noise.iter().map(|l| l.ln()).sum::<f64>() / count;
    let arith = noise.iter().sum::<f64>() / count;
    let log_lk = n_snapshots as f64 * count * (log_geo - arith.ln());
    let free_params = (k * (2 * m - k)) as f64;
    match criterion {
        SourceCountCriterion::Aic => -2.0 * log_lk + 2.0 * free_params,
        SourceCountCriterion::Mdl => {
            -log_lk + 0.5 * free_params * (n_snapshots as f64).ln()
        }
    }
}

/// Estimate the number of sources from covariance eigenvalues by minimizing
/// AIC or MDL over k ∈ {0, …, M-1}.
pub fn estimate_source_count(
    eigenvalues: &[f64],
    n_snapshots: usize,
    criterion: SourceCountCriterion,
) -> Result<usize> {
    if eigenvalues.is_empty() {
        return Err(DoaError::InvalidInput("no eigenvalues".into()));
    }
    if n_snapshots == 0 {
        return Err(DoaError::InvalidInput(
            "source enumeration needs n_snapshots ≥ 1".into(),
        ));
    }
    let clamped: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| {
            if l <= 0.0 {
                log::warn!("clamping nonpositive eigenvalue {l:.3e} to 1e-12");
                1e-12
            } else {
                l
            }
        })
        .collect();
    if clamped.windows(2).any(|w| w[0] < w[1]) {
        return Err(DoaError::InvalidInput(
            "eigenvalues must be sorted descending".into(),
        ));
    }

    let m = clamped.len();
    let best = (0..m)
        .map(|k| (k, criterion_value(&clamped, n_snapshots, k, criterion)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    Ok(best)
}

/// MUSIC pseudo-spectrum `P(θ) = 1 / ‖U_n^H a(θ)‖²`, the null spectrum
/// floored at 1e-30 before the reciprocal.
pub fn music_spectrum(
    split: &SubspaceSplit,
    geometry: &ArrayGeometry,
    grid_deg: &[f64],
) -> Result<SpatialSpectrum> {
    validate_grid(grid_deg)?;
    if split.m_sensors() != geometry.m_sensors() {
        return Err(DoaError::InvalidInput(
            "subspace split and geometry disagree on sensor count".into(),
        ));
    }
    let a = manifold_matrix(geometry, grid_deg)?;
    let proj = split.noise_basis.adjoint() * &a; // (M-K)×G
    let values = (0..a.ncols())
        .map(|g| 1.0 / proj.column(g).norm_squared().max(1e-30))
        .collect();
    SpatialSpectrum::new(grid_deg.to_vec(), values)
}

/// Convert a unit-circle phase to an arrival angle in degrees:
/// `θ = arcsin(φ / (2π·spacing))`.
pub(crate) fn phase_to_angle_deg(phase: f64, spacing: f64) -> Result<f64> {
    let s = phase / (2.0 * PI * spacing);
    if s.abs() > 1.0 + 1e-6 {
        return Err(DoaError::EstimationFailure(format!(
            "phase {phase:.6} maps outside the visible region (sin θ = {s:.6})"
        )));
    }
    Ok(s.clamp(-1.0, 1.0).asin().to_degrees())
}

/// Root-MUSIC: read source angles off the roots of the noise-subspace
/// polynomial instead of a spectral search.
pub fn root_music(
    split: &SubspaceSplit,
    geometry: &ArrayGeometry,
    k_sources: usize,
) -> Result<DoaEstimate> {
    let m = split.m_sensors();
    let spacing = geometry.spacing_wavelengths();
    if spacing > 0.5 {
        return Err(DoaError::InvalidInput(
            "root-MUSIC needs spacing ≤ 0.5 wavelengths for an unambiguous phase map".into(),
        ));
    }
    if geometry.m_sensors() != m {
        return Err(DoaError::InvalidInput(
            "subspace split and geometry disagree on sensor count".into(),
        ));
    }
    if k_sources == 0 || k_sources > m - 1 {
        return Err(DoaError::InvalidInput(format!(
            "k_sources must satisfy 1 ≤ K ≤ M-1, got {k_sources}"
        )));
    }

    // Null-spectrum polynomial coefficients: on the unit circle
    // a^H P_n a = Σ_{ij} [P_n]_{ij} z^{j-i}, so d_k sums the k-th
    // superdiagonal. (Summing i-j=k instead lands the roots at conjugate
    // positions and negates every angle.)
    let pn = &split.noise_basis * split.noise_basis.adjoint();
    let deg = 2 * (m - 1);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); deg + 1];
    for (i, row) in pn.row_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let k = j as isize - i as isize;
            coeffs[(k + (m as isize - 1)) as usize] += v;
        }
    }
    // Hermitian Pn forces d_{-k} = conj(d_k); enforce exactly before rooting.
    for k in 0..=(m - 1) {
        let hi = m - 1 + k;
        let lo = m - 1 - k;
        let sym = (coeffs[hi] + coeffs[lo].conj()).scale(0.5);
        debug_assert!(
            (coeffs[hi] - coeffs[lo].conj()).norm() < 1e-10 * sym.norm().max(1.0),
            "conjugate symmetry violated"
        );
        coeffs[hi] = sym;
        coeffs[lo] = sym.conj();
    }

    let roots = crate::numerics::poly_roots(&coeffs)?;
    let candidates = dedup_reciprocal_roots(&roots);
    let mu_max = 2.0 * PI * spacing * (1.0 + 1e-9);
    let mut usable: Vec<Complex64> = candidates
        .into_iter()
        .filter(|z| z.arg().abs() <= mu_max)
        .collect();
    usable.sort_by(|a, b| {
        let da = (1.0 - a.norm()).abs();
        let db = (1.0 - b.norm()).abs();
        da.partial_cmp(&db)
            .unwrap()
            .then(a.arg().partial_cmp(&b.arg()).unwrap())
    });
    if usable.len() < k_sources {
        return Err(DoaError::EstimationFailure(format!(
            "only {} distinct roots in the closed unit disk, need {}",
            usable.len(),
            k_sources
        )));
    }
    usable.truncate(k_sources);

    let mut angles: Vec<f64> = usable
        .iter()
        .map(|z| phase_to_angle_deg(z.arg(), spacing))
        .collect::<Result<_>>()?;
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut est = DoaEstimate::new(angles);
    est.diagnostics.insert("eigen_gap".into(), finite_or_max(split.eigen_gap()));
    Ok(est)
}

fn finite_or_max(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::MAX
    }
}

/// Collapse conjugate-reciprocal root pairs (z, 1/z̄) to one representative
/// inside the closed unit disk.
///
/// Every root is first reflected inside; pair members then coincide up to
/// rounding, so clustering by position removes the duplicates. Double roots
/// on the circle that rounding split radially collapse the same way.
fn dedup_reciprocal_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut canonical: Vec<Complex64> = roots
        .iter()
        .map(|z| {
            if z.norm() > 1.0 {
                z.conj().inv()
            } else {
                *z
            }
        })
        .collect();
    canonical.sort_by(|a, b| {
        a.arg()
            .partial_cmp(&b.arg())
            .unwrap()
            .then(a.norm().partial_cmp(&b.norm()).unwrap())
    });
    let mut out: Vec<Complex64> = Vec::with_capacity(canonical.len());
    for z in canonical {
        match out.last() {
            // keep the representative closest to the circle
            Some(&prev) if (z - prev).norm() < 1e-6 => {
                if z.norm() > prev.norm() {
                    *out.last_mut().unwrap() = z;
                }
            }
            _ => out.push(z),
        }
    }
    out
}

/// TLS solution of the invariance equation `S2 ≈ S1 Ψ` via the
/// eigendecomposition of the stacked Gram matrix; returns Ψ.
fn tls_invariance(s1: &CMat, s2: &CMat) -> Result<CMat> {
    let k = s1.ncols();
    let mut c = CMat::zeros(s1.nrows(), 2 * k);
    c.columns_mut(0, k).copy_from(s1);
    c.columns_mut(k, k).copy_from(s2);
    let gram = c.adjoint() * &c;
    let eig = hermitian_eig(&gram)?;
    // the K eigenvectors of the smallest eigenvalues span the null space
    let null = eig.eigenvectors.columns(k, k);
    let v12 = null.rows(0, k).clone_owned();
    let v22 = null.rows(k, k).clone_owned();
    let v22_svals = crate::numerics::svd(&v22)?.singular_values;
    if v22_svals.last().copied().unwrap_or(0.0) < 1e-12 {
        return Err(DoaError::EstimationFailure(
            "TLS block V22 is singular; invariance equation unsolvable".into(),
        ));
    }
    let v22_inv = v22
        .try_inverse()
        .ok_or_else(|| DoaError::EstimationFailure("V22 inversion failed".into()))?;
    Ok(-(&v12 * v22_inv))
}

/// TLS-ESPRIT on the signal subspace of a covariance split.
///
/// Subarrays are the maximally overlapping first/last M-1 rows; the
/// rotation Ψ comes from the total-least-squares solution of
/// `U_s2 = U_s1 Ψ` and its eigenvalue phases map to angles.
pub fn esprit(
    split: &SubspaceSplit,
    geometry: &ArrayGeometry,
    k_sources: usize,
) -> Result<DoaEstimate> {
    let m = split.m_sensors();
    let spacing = geometry.spacing_wavelengths();
    if spacing > 0.5 {
        return Err(DoaError::InvalidInput(
            "ESPRIT needs spacing ≤ 0.5 wavelengths for an unambiguous phase map".into(),
        ));
    }
    if k_sources == 0 || k_sources > m - 1 {
        return Err(DoaError::InvalidInput(format!(
            "k_sources must satisfy 1 ≤ K ≤ M-1, got {k_sources}"
        )));
    }
    if split.k_sources() < k_sources {
        return Err(DoaError::InvalidInput(
            "subspace split carries fewer signal vectors than k_sources".into(),
        ));
    }
    let us = split.signal_basis.columns(0, k_sources);
    let us1 = us.rows(0, m - 1).clone_owned();
    let us2 = us.rows(1, m - 1).clone_owned();
    let psi = tls_invariance(&us1, &us2)?;
    let eig = general_eigenvalues(&psi)?;

    let mut angles: Vec<f64> = eig
        .iter()
        .map(|l| phase_to_angle_deg(l.arg(), spacing))
        .collect::<Result<_>>()?;
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut est = DoaEstimate::new(angles);
    est.diagnostics.insert("eigen_gap".into(), finite_or_max(split.eigen_gap()));
    Ok(est)
}

/// Unitary ESPRIT: forward-backward averaging plus the real-domain
/// invariance equation.
///
/// The real signal subspace comes from `Q^H R_FB Q`; with
/// `Γ = Q_{M-1}^H J2 Q_M` the real selection matrices are K1 = Re Γ,
/// K2 = Im Γ, and the eigenvalues ω of the TLS solution of
/// `(K1 E_s) Υ = K2 E_s` give angles through `μ = 2·atan(ω)`.
pub fn unitary_esprit(
    cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    k_sources: usize,
) -> Result<DoaEstimate> {
    let m = cov.m_sensors();
    let spacing = geometry.spacing_wavelengths();
    if spacing > 0.5 {
        return Err(DoaError::InvalidInput(
            "unitary ESPRIT needs spacing ≤ 0.5 wavelengths".into(),
        ));
    }
    if geometry.m_sensors() != m {
        return Err(DoaError::InvalidInput(
            "covariance and geometry disagree on sensor count".into(),
        ));
    }
    if k_sources == 0 || k_sources > m - 1 {
        return Err(DoaError::InvalidInput(format!(
            "k_sources must satisfy 1 ≤ K ≤ M-1, got {k_sources}"
        )));
    }

    let fb = forward_backward(cov);
    let r_real = unitary_transform(&fb)?;
    let (eigenvalues, vectors) = real_symmetric_eig_desc(&r_real);
    let es = vectors.columns(0, k_sources).clone_owned();

    // Γ = Q_{M-1}^H J2 Q_M with J2 selecting the last M-1 rows.
    let q_m = unitary_matrix(m);
    let q_sub = unitary_matrix(m - 1);
    let j2_q = q_m.rows(1, m - 1).clone_owned();
    let gamma = q_sub.adjoint() * j2_q;
    let k1 = gamma.map(|z| z.re);
    let k2 = gamma.map(|z| z.im);

    let s1 = &k1 * &es;
    let s2 = &k2 * &es;
    let upsilon = tls_invariance(&to_complex(&s1), &to_complex(&s2))?;
    let eig = general_eigenvalues(&upsilon)?;

    let mut angles: Vec<f64> = eig
        .iter()
        .map(|l| {
            // real-valued problem: noisy conjugate pairs share the real part
            let mu = 2.0 * l.re.atan();
            phase_to_angle_deg(mu, spacing)
        })
        .collect::<Result<_>>()?;
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let gap = if k_sources < m {
        eigenvalues[k_sources - 1] / eigenvalues[k_sources].max(1e-300)
    } else {
        f64::MAX
    };
    let mut est = DoaEstimate::new(angles);
    est.diagnostics.insert("eigen_gap".into(), finite_or_max(gap));
    Ok(est)
}

fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

fn real_symmetric_eig_desc(m: &RMat) -> (Vec<f64>, RMat) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = RMat::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).clone_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}
