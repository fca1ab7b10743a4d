//! Concentrated maximum-likelihood estimators: DML, SML and WSF, sharing a
//! derivative-free cyclic coordinate descent optimizer.

use crate::array_model::{manifold_matrix, ArrayGeometry, CovarianceEstimate};
use crate::error::{DoaError, Result};
use crate::estimate::DoaEstimate;
use crate::numerics::hermitian_eig;
use crate::subspace::{music_spectrum, root_music, subspace_split, SubspaceSplit};
use crate::{CMat, CVec};

/// Which concentrated likelihood the optimizer descends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlMethod {
    /// Deterministic ML: minimize `tr[P⊥(θ) R̂]`.
    Dml,
    /// Stochastic ML concentrated likelihood
    /// `N(M-K)·log tr[P⊥R̂] + NK·log tr[P∥R̂]` (minimization form).
    Sml,
    /// Weighted subspace fitting `tr[P⊥ U_s W U_s^H]`,
    /// `W = (Λ_s - σ̂²I)² Λ_s^{-1}`.
    Wsf,
}

/// `tr[P⊥ R̂]` and `tr[P∥ R̂]` for the manifold at the given angles.
///
/// `P∥ = A (A^H A)^{-1} A^H` is never formed; the traces come from a K×K
/// solve. Errors out when `A^H A` has condition number above 1e12.
fn projection_traces(
    cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    angles_deg: &[f64],
) -> Result<(f64, f64)> {
    let total = cov.trace();
    if angles_deg.is_empty() {
        return Ok((total, 0.0));
    }
    let a = manifold_matrix(geometry, angles_deg)?;
    let gram = a.adjoint() * &a;
    let gram_eig = hermitian_eig(&gram)?;
    let lmax = gram_eig.eigenvalues[0];
    let lmin = *gram_eig.eigenvalues.last().unwrap();
    if lmin <= 0.0 || lmax / lmin > 1e12 {
        return Err(DoaError::IllConditionedManifold(format!(
            "cond(A^H A) = {:.3e} for angles {:?}",
            if lmin > 0.0 { lmax / lmin } else { f64::INFINITY },
            angles_deg
        )));
    }
    let arha = a.adjoint() * cov.matrix() * &a;
    let solved = gram
        .lu()
        .solve(&arha)
        .ok_or_else(|| DoaError::IllConditionedManifold("Gram solve failed".into()))?;
    let tr_par: f64 = solved.diagonal().iter().map(|z| z.re).sum();
    let tr_perp = (total - tr_par).max(0.0);
    Ok((tr_perp, tr_par.max(0.0)))
}

/// Deterministic ML cost `tr[P⊥(θ) R̂] ≥ 0`.
///
/// With an empty angle list `P⊥ = I` and the cost is `trace(R̂)`.
pub fn dml_cost(
    cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    angles_deg: &[f64],
) -> Result<f64> {
    if angles_deg.len() >= cov.m_sensors() {
        return Err(DoaError::InvalidInput(
            "DML needs K < M angles".into(),
        ));
    }
    let (tr_perp, _) = projection_traces(cov, geometry, angles_deg)?;
    Ok(tr_perp)
}

/// Noise-variance MLE `σ̂² = tr[P⊥ R̂] / (M - K)`, the SML nuisance estimate.
pub fn noise_var_mle(
    cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    angles_deg: &[f64],
) -> Result<f64> {
    let k = angles_deg.len();
    let m = cov.m_sensors();
    if k >= m {
        return Err(DoaError::InvalidInput("need K < M".into()));
    }
    let (tr_perp, _) = projection_traces(cov, geometry, angles_deg)?;
    Ok(tr_perp / (m - k) as f64)
}

/// Stochastic ML concentrated cost (negated likelihood, minimize).
///
/// An exact covariance (snapshot sentinel 0) is evaluated with N = 1.
pub fn sml_cost(
    cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    angles_deg: &[f64],
) -> Result<f64> {
    let k = angles_deg.len();
    let m = cov.m_sensors();
    if k == 0 || k >= m {
        return Err(DoaError::InvalidInput(format!(
            "SML needs 1 ≤ K < M, got K={k}, M={m}"
        )));
    }
    let n = cov.n_snapshots().max(1) as f64;
    let (tr_perp, tr_par) = projection_traces(cov, geometry, angles_deg)?;
    let floor = |x: f64, what: &str| {
        if x <= 0.0 {
            log::warn!("{what} = {x:.3e} floored to 1e-30 in the SML cost");
            1e-30
        } else {
            x
        }
    };
    let tr_perp = floor(tr_perp, "tr[P⊥R̂]");
    let tr_par = floor(tr_par, "tr[P∥R̂]");
    Ok(n * ((m - k) as f64 * tr_perp.ln() + k as f64 * tr_par.ln()))
}

/// Weighted subspace fitting cost `tr[P⊥(θ) U_s W U_s^H]` with the
/// variance-optimal diagonal weighting `W = (Λ_s - σ̂²I)² Λ_s^{-1}`.
///
/// Signal eigenvalues at or below `noise_var_hat` contribute zero weight.
pub fn wsf_cost(
    split: &SubspaceSplit,
    geometry: &ArrayGeometry,
    angles_deg: &[f64],
    noise_var_hat: f64,
) -> Result<f64> {
    if noise_var_hat < 0.0 || !noise_var_hat.is_finite() {
        return Err(DoaError::InvalidInput(
            "noise_var_hat must be nonnegative".into(),
        ));
    }
    let k = split.k_sources();
    if angles_deg.is_empty() {
        return Err(DoaError::InvalidInput("WSF needs at least one angle".into()));
    }
    let weights: Vec<f64> = split.eigenvalues[..k]
        .iter()
        .map(|&l| {
            if l <= noise_var_hat {
                log::warn!(
                    "signal eigenvalue {l:.3e} ≤ σ̂² = {noise_var_hat:.3e}; WSF weight clamped to 0"
                );
                0.0
            } else {
                (l - noise_var_hat).powi(2) / l
            }
        })
        .collect();

    // U_s W U_s^H plays the role of the covariance in the projection trace.
    let m = split.m_sensors();
    let mut uw = CMat::zeros(m, m);
    for (i, &w) in weights.iter().enumerate() {
        let col: CVec = split.signal_basis.column(i).clone_owned();
        uw += (&col * col.adjoint()).scale(w);
    }
    let uw = (&uw + uw.adjoint()).scale(0.5);
    let pseudo = CovarianceEstimate::new(uw, 1)?;
    let (tr_perp, _) = projection_traces(&pseudo, geometry, angles_deg)?;
    Ok(tr_perp)
}

/// Result of the ML coordinate-descent optimizer.
#[derive(Debug, Clone)]
pub struct MlSolution {
    /// Sorted angle estimates.
    pub angles_deg: Vec<f64>,
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Sweeps actually executed.
    pub sweeps: usize,
    /// Cost after initialization and after every sweep; non-increasing.
    pub cost_history: Vec<f64>,
}

impl MlSolution {
    pub fn into_estimate(self) -> DoaEstimate {
        let mut est = DoaEstimate::new(self.angles_deg);
        est.diagnostics.insert("final_cost".into(), self.final_cost);
        est.diagnostics.insert("initial_cost".into(), self.initial_cost);
        est.diagnostics.insert("sweeps".into(), self.sweeps as f64);
        est
    }
}

/// Golden-section search for the minimum of `f` on [lo, hi].
fn golden_min(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - (b - a) * INVPHI;
    let mut d = a + (b - a) * INVPHI;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INVPHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INVPHI;
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

const MAX_SWEEPS: usize = 50;
const ANGLE_TOL_DEG: f64 = 1e-4;
const INITIAL_BRACKET_DEG: f64 = 2.0;

/// Maximum-likelihood DOA estimation.
///
/// Initializes from Root-MUSIC (falling back to MUSIC grid peaks), then runs
/// cyclic coordinate descent: per angle a golden-section search over a ±2°
/// bracket that halves every sweep, accepting only strict improvements.
/// Stops when the largest per-sweep angle change drops below 1e-4° or after
/// 50 sweeps.
pub fn ml_estimate(
    cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    k_sources: usize,
    method: MlMethod,
) -> Result<MlSolution> {
    let m = cov.m_sensors();
    if k_sources == 0 || k_sources >= m {
        return Err(DoaError::InvalidInput(format!(
            "ml_estimate needs 1 ≤ K < M, got K={k_sources}, M={m}"
        )));
    }
    let split = subspace_split(cov, k_sources)?;
    let mut angles = initialize_angles(&split, cov, geometry, k_sources)?;

    let sigma2_hat =
        split.eigenvalues[k_sources..].iter().sum::<f64>() / (m - k_sources) as f64;
    let cost = |angles: &[f64]| -> f64 {
        let r = match method {
            MlMethod::Dml => dml_cost(cov, geometry, angles),
            MlMethod::Sml => sml_cost(cov, geometry, angles),
            MlMethod::Wsf => wsf_cost(&split, geometry, angles, sigma2_hat),
        };
        r.unwrap_or(f64::INFINITY)
    };

    let initial_cost = cost(&angles);
    if !initial_cost.is_finite() {
        return Err(DoaError::EstimationFailure(
            "non-finite cost at the initialization point".into(),
        ));
    }

    let mut current = initial_cost;
    let mut history = vec![current];
    let mut bracket = INITIAL_BRACKET_DEG;
    let mut sweeps = 0;
    for _ in 0..MAX_SWEEPS {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for i in 0..angles.len() {
            let center = angles[i];
            let lo = (center - bracket).max(-90.0);
            let hi = (center + bracket).min(90.0);
            let mut probe = angles.clone();
            let mut f = |x: f64| {
                probe[i] = x;
                cost(&probe)
            };
            let (x, fx) = golden_min(&mut f, lo, hi, 40);
            if fx < current {
                current = fx;
                max_change = max_change.max((x - angles[i]).abs());
                angles[i] = x;
            }
        }
        history.push(current);
        bracket *= 0.5;
        if max_change < ANGLE_TOL_DEG {
            break;
        }
    }

    if !current.is_finite() {
        return Err(DoaError::EstimationFailure("non-finite final cost".into()));
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(MlSolution {
        angles_deg: angles,
        initial_cost,
        final_cost: current,
        sweeps,
        cost_history: history,
    })
}

/// Root-MUSIC initialization with a MUSIC grid-peak fallback.
fn initialize_angles(
    split: &SubspaceSplit,
    _cov: &CovarianceEstimate,
    geometry: &ArrayGeometry,
    k_sources: usize,
) -> Result<Vec<f64>> {
    if let Ok(est) = root_music(split, geometry, k_sources) {
        if est.angles_deg.len() == k_sources {
            return Ok(est.angles_deg);
        }
    }
    let grid = crate::array_model::uniform_grid(0.1);
    let spectrum = music_spectrum(split, geometry, &grid)?;
    let peaks = crate::eval::find_peaks(&spectrum, k_sources);
    if peaks.angles_deg.len() < k_sources {
        return Err(DoaError::EstimationFailure(format!(
            "initialization found only {} of {} sources",
            peaks.angles_deg.len(),
            k_sources
        )));
    }
    Ok(peaks.angles_deg)
}
