//! ULA geometry, steering vectors, covariance estimation and the structural
//! transforms (forward-backward averaging, unitary transform) every
//! estimator builds on.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{DoaError, Result};
use crate::numerics::{hermitian_eig, HermitianEigen};
use crate::{CMat, CVec, RMat};

/// Sentinel snapshot count marking an exact (asymptotic) covariance.
pub const EXACT_COVARIANCE: usize = 0;

/// Uniform linear array: `m_sensors` elements spaced `spacing_wavelengths`
/// apart (d/λ, 0.5 = half wavelength).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    m_sensors: usize,
    spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(m_sensors: usize, spacing_wavelengths: f64) -> Result<Self> {
        if m_sensors < 2 {
            return Err(DoaError::InvalidInput(format!(
                "a ULA needs at least 2 sensors, got {m_sensors}"
            )));
        }
        if !spacing_wavelengths.is_finite() || spacing_wavelengths <= 0.0 {
            return Err(DoaError::InvalidInput(format!(
                "element spacing must be positive, got {spacing_wavelengths}"
            )));
        }
        if spacing_wavelengths > 0.5 {
            log::warn!(
                "element spacing {spacing_wavelengths} > 0.5 wavelengths: spatial aliasing regime"
            );
        }
        Ok(Self {
            m_sensors,
            spacing_wavelengths,
        })
    }

    /// Half-wavelength spaced array, the common case.
    pub fn half_wavelength(m_sensors: usize) -> Result<Self> {
        Self::new(m_sensors, 0.5)
    }

    pub fn m_sensors(&self) -> usize {
        self.m_sensors
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }

    /// Spatial frequency `2π·(d/λ)·sin θ` for an arrival angle in degrees.
    pub fn spatial_frequency(&self, angle_deg: f64) -> f64 {
        2.0 * PI * self.spacing_wavelengths * angle_deg.to_radians().sin()
    }
}

fn validate_angle(angle_deg: f64) -> Result<()> {
    if !angle_deg.is_finite() || angle_deg.abs() > 90.0 {
        return Err(DoaError::InvalidInput(format!(
            "angle {angle_deg}° outside [-90°, 90°]"
        )));
    }
    Ok(())
}

/// Steering vector `a(θ)` with `a_m = e^{j·2π·(d/λ)·(m-1)·sin θ}`.
///
/// The first element is exactly 1 and every element has unit modulus.
pub fn steering_vector(geometry: &ArrayGeometry, angle_deg: f64) -> Result<CVec> {
    validate_angle(angle_deg)?;
    let mu = geometry.spatial_frequency(angle_deg);
    Ok(CVec::from_iterator(
        geometry.m_sensors,
        (0..geometry.m_sensors).map(|m| Complex64::from_polar(1.0, mu * m as f64)),
    ))
}

/// Array manifold matrix: column k is the steering vector of `angles_deg[k]`.
pub fn manifold_matrix(geometry: &ArrayGeometry, angles_deg: &[f64]) -> Result<CMat> {
    if angles_deg.is_empty() {
        return Err(DoaError::InvalidInput(
            "manifold_matrix needs at least one angle".into(),
        ));
    }
    let cols = angles_deg
        .iter()
        .map(|&a| steering_vector(geometry, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(CMat::from_columns(&cols))
}

/// Normalized beampattern `|a^H(look) a(source)| / M ∈ [0, 1]`.
pub fn beampattern(geometry: &ArrayGeometry, look_deg: f64, source_deg: f64) -> Result<f64> {
    let a_look = steering_vector(geometry, look_deg)?;
    let a_src = steering_vector(geometry, source_deg)?;
    Ok(a_look.dotc(&a_src).norm() / geometry.m_sensors as f64)
}

/// M×N matrix of array snapshots tied to the geometry that produced them.
#[derive(Debug, Clone)]
pub struct SnapshotMatrix {
    data: CMat,
    geometry: ArrayGeometry,
}

impl SnapshotMatrix {
    pub fn new(data: CMat, geometry: ArrayGeometry) -> Result<Self> {
        if data.nrows() != geometry.m_sensors() {
            return Err(DoaError::InvalidInput(format!(
                "snapshot matrix has {} rows but the array has {} sensors",
                data.nrows(),
                geometry.m_sensors()
            )));
        }
        if data.ncols() == 0 {
            return Err(DoaError::InvalidInput("need at least one snapshot".into()));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(DoaError::InvalidInput(
                "snapshot matrix contains non-finite entries".into(),
            ));
        }
        Ok(Self { data, geometry })
    }

    pub fn data(&self) -> &CMat {
        &self.data
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }
}

/// Hermitian PSD covariance matrix plus the snapshot count behind it
/// (`EXACT_COVARIANCE` marks a theoretical, noise-free-average matrix).
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    matrix: CMat,
    n_snapshots: usize,
}

impl CovarianceEstimate {
    pub fn new(matrix: CMat, n_snapshots: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(DoaError::InvalidInput(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let eig = hermitian_eig(&matrix)?; // also checks Hermitian symmetry and finiteness
        let scale = eig.eigenvalues.first().copied().unwrap_or(0.0).max(1.0);
        if let Some(&min) = eig.eigenvalues.last() {
            if min < -1e-8 * scale {
                return Err(DoaError::InvalidInput(format!(
                    "covariance is not positive semidefinite (min eigenvalue {min:.3e})"
                )));
            }
        }
        Ok(Self { matrix, n_snapshots })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Number of snapshots used to form the estimate; 0 means exact.
    pub fn n_snapshots(&self) -> usize {
        self.n_snapshots
    }

    pub fn is_exact(&self) -> bool {
        self.n_snapshots == EXACT_COVARIANCE
    }

    pub fn m_sensors(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Eigendecomposition with descending eigenvalues.
    pub fn eigen(&self) -> HermitianEigen {
        hermitian_eig(&self.matrix).expect("covariance validated on construction")
    }
}

/// Sample covariance `R̂ = (1/N) Σ x[n] x^H[n]`.
pub fn sample_covariance(snapshots: &SnapshotMatrix) -> CovarianceEstimate {
    let x = snapshots.data();
    let n = x.ncols();
    let r = (x * x.adjoint()).unscale(n as f64);
    // x x^H is Hermitian up to rounding; make it exact so downstream
    // tolerance checks never see the rounding.
    let r = (&r + r.adjoint()).scale(0.5);
    CovarianceEstimate::new(r, n).expect("sample covariance is Hermitian PSD by construction")
}

/// Theoretical covariance `R = A Rs A^H + σ²I`.
///
/// With `coherence` absent the sources are uncorrelated, `Rs = diag(powers)`.
/// With unit-modulus coherence weights `b` the source covariance is the
/// rank-one matrix `Rs = (√p ∘ b)(√p ∘ b)^H`, whose diagonal still equals the
/// requested powers. The returned estimate is marked exact.
pub fn exact_covariance(
    geometry: &ArrayGeometry,
    angles_deg: &[f64],
    source_powers: &[f64],
    noise_var: f64,
    coherence: Option<&[Complex64]>,
) -> Result<CovarianceEstimate> {
    if angles_deg.len() != source_powers.len() {
        return Err(DoaError::InvalidInput(format!(
            "{} angles but {} powers",
            angles_deg.len(),
            source_powers.len()
        )));
    }
    if !noise_var.is_finite() || noise_var < 0.0 {
        return Err(DoaError::InvalidInput(format!(
            "noise variance must be nonnegative, got {noise_var}"
        )));
    }
    if source_powers.iter().any(|&p| !p.is_finite() || p <= 0.0) {
        return Err(DoaError::InvalidInput(
            "source powers must be positive".into(),
        ));
    }
    let m = geometry.m_sensors();
    let mut r = CMat::identity(m, m).scale(noise_var);
    if !angles_deg.is_empty() {
        let a = manifold_matrix(geometry, angles_deg)?;
        match coherence {
            None => {
                for (k, &p) in source_powers.iter().enumerate() {
                    let col = a.column(k);
                    r += (col * col.adjoint()).scale(p);
                }
            }
            Some(b) => {
                if b.len() != angles_deg.len() {
                    return Err(DoaError::InvalidInput(format!(
                        "{} coherence weights for {} sources",
                        b.len(),
                        angles_deg.len()
                    )));
                }
                if b.iter().any(|w| (w.norm() - 1.0).abs() > 1e-6) {
                    return Err(DoaError::InvalidInput(
                        "coherence weights must have unit modulus".into(),
                    ));
                }
                let s = CVec::from_iterator(
                    b.len(),
                    b.iter()
                        .zip(source_powers)
                        .map(|(w, &p)| w * p.sqrt()),
                );
                let combined = &a * s;
                r += &combined * combined.adjoint();
            }
        }
    }
    let r = (&r + r.adjoint()).scale(0.5);
    CovarianceEstimate::new(r, EXACT_COVARIANCE)
}

/// `J M* J`: flip both axes and conjugate (J is the exchange matrix).
fn backward_map(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)].conj())
}

/// Forward-backward averaging `R_FB = ½(R + J R* J)`.
///
/// The output is centro-Hermitian, which restores the signal-subspace rank
/// lost to coherent sources. Trace is preserved exactly.
pub fn forward_backward(cov: &CovarianceEstimate) -> CovarianceEstimate {
    let r = cov.matrix();
    let fb = (r + backward_map(r)).scale(0.5);
    CovarianceEstimate::new(fb, cov.n_snapshots())
        .expect("forward-backward preserves Hermitian PSD")
}

/// The left-Π-real unitary matrix Q used by the real-domain transform.
///
/// Even M uses the two-block form, odd M the three-block form with the
/// center row `[0 … 0, √2, 0 … 0]/√2`.
pub fn unitary_matrix(m: usize) -> CMat {
    let s = 1.0 / 2.0_f64.sqrt();
    let p = m / 2;
    let mut q = CMat::zeros(m, m);
    let (center, offset) = if m.is_multiple_of(2) { (None, p) } else { (Some(p), p + 1) };
    for i in 0..p {
        q[(i, i)] = Complex64::new(s, 0.0);
        q[(i, offset + i)] = Complex64::new(0.0, s);
        let bottom = m - 1 - i;
        q[(bottom, i)] = Complex64::new(s, 0.0);
        q[(bottom, offset + i)] = Complex64::new(0.0, -s);
    }
    if let Some(c) = center {
        q[(c, c)] = Complex64::new(1.0, 0.0);
    }
    q
}

/// Map a centro-Hermitian covariance to the real symmetric matrix
/// `R̃ = Q^H R Q`.
///
/// The input must already be centro-Hermitian (apply [`forward_backward`]
/// first); eigenvalues are preserved since Q is unitary.
pub fn unitary_transform(cov: &CovarianceEstimate) -> Result<RMat> {
    let r = cov.matrix();
    let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let centro_err = (backward_map(r) - r)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if centro_err > 1e-8 * scale {
        return Err(DoaError::InvalidInput(format!(
            "input is not centro-Hermitian (error {centro_err:.3e}); apply forward_backward first"
        )));
    }
    let q = unitary_matrix(r.nrows());
    let transformed = q.adjoint() * r * &q;
    let imag_max = transformed.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag_max > 1e-10 * scale {
        return Err(DoaError::InvalidInput(format!(
            "residual imaginary part {imag_max:.3e} after the unitary transform; \
             apply forward_backward first"
        )));
    }
    Ok(transformed.map(|z| z.re))
}

/// Angular grid with nonnegative power values, the result type of all
/// spectral methods.
#[derive(Debug, Clone)]
pub struct SpatialSpectrum {
    angles_deg: Vec<f64>,
    values: Vec<f64>,
}

impl SpatialSpectrum {
    pub fn new(angles_deg: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if angles_deg.len() != values.len() {
            return Err(DoaError::InvalidInput(format!(
                "{} grid angles but {} values",
                angles_deg.len(),
                values.len()
            )));
        }
        validate_grid(&angles_deg)?;
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(DoaError::InvalidInput(
                "spectrum values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { angles_deg, values })
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }
}

/// Validate a strictly increasing angle grid within [-90°, 90°].
pub fn validate_grid(angles_deg: &[f64]) -> Result<()> {
    if angles_deg.is_empty() {
        return Err(DoaError::InvalidInput("empty angle grid".into()));
    }
    for &a in angles_deg {
        validate_angle(a)?;
    }
    if angles_deg.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DoaError::InvalidInput(
            "angle grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Uniform grid over [-90°, 90°] with the requested step.
pub fn uniform_grid(step_deg: f64) -> Vec<f64> {
    assert!(step_deg > 0.0, "grid step must be positive");
    let n = (180.0 / step_deg).round() as usize;
    (0..=n).map(|i| (-90.0 + i as f64 * step_deg).min(90.0)).collect()
}
