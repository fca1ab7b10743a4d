//! Grid-dictionary sparse estimators: L1-SVD, sparse Bayesian learning and
//! SPICE.


use crate::array_model::{
    manifold_matrix, validate_grid, ArrayGeometry, CovarianceEstimate, SnapshotMatrix,
    SpatialSpectrum,
};
use crate::error::{DoaError, Result};
use crate::estimate::DoaEstimate;
use crate::eval::spectrum_peaks;
use crate::numerics::{hermitian_eig, hermitian_solve_logdet, solve_loaded, thin_left_singular};
use crate::CMat;

/// Steering vectors evaluated on a dense candidate-angle grid.
#[derive(Debug, Clone)]
pub struct AngularDictionary {
    grid_deg: Vec<f64>,
    atoms: CMat,
}

/// Default sparse-method grid step in degrees. Coarser than the 0.1°
/// evaluation grid to bound the per-iteration cost; override per call.
pub const DEFAULT_SPARSE_GRID_STEP: f64 = 0.5;

impl AngularDictionary {
    pub fn new(geometry: &ArrayGeometry, grid_deg: Vec<f64>) -> Result<Self> {
        validate_grid(&grid_deg)?;
        if grid_deg.len() <= geometry.m_sensors() {
            log::warn!(
                "dictionary has {} atoms for {} sensors; sparse recovery expects G > M",
                grid_deg.len(),
                geometry.m_sensors()
            );
        }
        let atoms = manifold_matrix(geometry, &grid_deg)?;
        Ok(Self { grid_deg, atoms })
    }

    /// Dictionary on the default −90°…90° grid with 0.5° spacing.
    pub fn with_default_grid(geometry: &ArrayGeometry) -> Result<Self> {
        Self::new(geometry, crate::array_model::uniform_grid(DEFAULT_SPARSE_GRID_STEP))
    }

    pub fn grid_deg(&self) -> &[f64] {
        &self.grid_deg
    }

    pub fn atoms(&self) -> &CMat {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.grid_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_deg.is_empty()
    }

    fn m_sensors(&self) -> usize {
        self.atoms.nrows()
    }
}

/// Peaks of a nonnegative profile over the dictionary grid: local maxima at
/// or above `threshold`, strongest first, capped at `limit`.
fn profile_peaks(
    grid: &[f64],
    profile: &[f64],
    threshold: f64,
    limit: usize,
) -> Result<Vec<f64>> {
    let spectrum = SpatialSpectrum::new(grid.to_vec(), profile.to_vec())?;
    let peaks = spectrum_peaks(&spectrum);
    Ok(peaks
        .into_iter()
        .filter(|p| p.value >= threshold)
        .take(limit)
        .map(|p| p.angle_deg)
        .collect())
}

// ───────────────────────── L1-SVD ─────────────────────────

/// L1-SVD output: the row-energy profile over the grid plus the peak
/// estimate, with the objective trace for convergence checks.
#[derive(Debug, Clone)]
pub struct L1SvdResult {
    pub power_profile: Vec<f64>,
    pub estimate: DoaEstimate,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value after initialization and after every proximal step;
    /// non-increasing.
    pub objective_history: Vec<f64>,
}

const L1_SVD_TOL: f64 = 1e-6;
const L1_SVD_MAX_ITER: usize = 2000;

/// L1-SVD sparse DOA estimation.
///
/// Fits the K dominant left singular vectors of the data matrix with a
/// group-sparse coefficient matrix:
/// `min ½‖A P − U_K‖_F² + μ Σ_g ‖row_g(P)‖₂`,
/// solved by proximal gradient descent with the fixed step 1/σ_max(A)².
/// The row-wise ℓ₂/ℓ₁ mixed norm keeps the support shared across the K
/// singular-vector columns.
pub fn l1_svd(
    snapshots: &SnapshotMatrix,
    k_sources: usize,
    dict: &AngularDictionary,
    mu: f64,
) -> Result<L1SvdResult> {
    let m = snapshots.geometry().m_sensors();
    let n = snapshots.n_snapshots();
    if dict.m_sensors() != m {
        return Err(DoaError::InvalidInput(
            "dictionary and snapshots disagree on sensor count".into(),
        ));
    }
    if !mu.is_finite() || mu <= 0.0 {
        return Err(DoaError::InvalidInput(format!(
            "sparsity weight mu must be positive, got {mu}"
        )));
    }
    if k_sources == 0 || k_sources >= m.min(n) {
        return Err(DoaError::InvalidInput(format!(
            "k_sources must satisfy 1 ≤ K < min(M, N) = {}",
            m.min(n)
        )));
    }

    let (u, _) = thin_left_singular(snapshots.data())?;
    let u_k = u.columns(0, k_sources).clone_owned();
    let (p, history, iterations, converged) = l1_profile(dict.atoms(), &u_k, mu)?;
    if !converged {
        log::warn!("l1_svd hit the iteration cap ({L1_SVD_MAX_ITER}); returning best iterate");
    }

    let power_profile: Vec<f64> = (0..dict.len()).map(|r| p.row(r).norm_squared()).collect();
    let angles = profile_peaks(dict.grid_deg(), &power_profile, 0.0, k_sources)?;
    let mut estimate = DoaEstimate::new(angles);
    estimate
        .diagnostics
        .insert("objective".into(), *history.last().unwrap());
    estimate
        .diagnostics
        .insert("iterations".into(), iterations as f64);
    Ok(L1SvdResult {
        power_profile,
        estimate,
        converged,
        iterations,
        objective_history: history,
    })
}

/// Proximal-gradient core of L1-SVD; separated so coefficient behavior can
/// be tested independently of the grid.
fn l1_profile(
    a: &CMat,
    u_k: &CMat,
    mu: f64,
) -> Result<(CMat, Vec<f64>, usize, bool)> {
    let g = a.ncols();
    let k = u_k.ncols();
    // Lipschitz constant of the gradient: σ_max(A)² = λ_max(A A^H).
    let lip = hermitian_eig(&(a * a.adjoint()))?.eigenvalues[0];
    let step = 1.0 / lip;
    let shrink = mu * step;

    let mut p = CMat::zeros(g, k);
    let objective = |p: &CMat| -> f64 {
        let resid = a * p - u_k;
        let fit = 0.5 * resid.norm_squared();
        let penalty: f64 = (0..g).map(|r| p.row(r).norm()).sum();
        fit + mu * penalty
    };

    let mut history = vec![objective(&p)];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..L1_SVD_MAX_ITER {
        iterations += 1;
        let grad = a.adjoint() * (a * &p - u_k);
        let z = &p - grad.scale(step);
        for r in 0..g {
            let norm = z.row(r).norm();
            let scale = if norm > shrink { 1.0 - shrink / norm } else { 0.0 };
            for c in 0..k {
                p[(r, c)] = z[(r, c)] * scale;
            }
        }
        let obj = objective(&p);
        let prev = *history.last().unwrap();
        history.push(obj);
        if (prev - obj).abs() <= L1_SVD_TOL * prev.abs().max(1e-30) {
            converged = true;
            break;
        }
    }
    Ok((p, history, iterations, converged))
}

// ───────────────────────── SBL ─────────────────────────

/// Sparse Bayesian learning output.
#[derive(Debug, Clone)]
pub struct SblResult {
    /// Per-atom prior variances after convergence (length G; pruned atoms 0).
    pub gamma: Vec<f64>,
    pub noise_var: f64,
    pub estimate: DoaEstimate,
    pub converged: bool,
    pub iterations: usize,
    /// Log-evidence (up to an additive constant) before and after each EM
    /// step; the post value never drops below the pre value.
    pub evidence_steps: Vec<(f64, f64)>,
}

const SBL_PRUNE_REL: f64 = 1e-6;
const SBL_PEAK_REL: f64 = 0.01;
const SBL_SIGMA_FLOOR: f64 = 1e-12;

struct SblState<'a> {
    x: &'a CMat,
    atoms: &'a CMat,
    gamma: Vec<f64>,
    active: Vec<usize>,
    sigma2: f64,
}

impl SblState<'_> {
    /// Log evidence of the current hyperparameters, up to the `-NM log π`
    /// constant.
    fn evidence(&self) -> Result<f64> {
        let n = self.x.ncols() as f64;
        let sigma_x = self.model_covariance();
        let (w, logdet) = hermitian_solve_logdet(&sigma_x, self.x)?;
        let quad: f64 = self
            .x
            .iter()
            .zip(w.iter())
            .map(|(x, w)| (x.conj() * w).re)
            .sum();
        Ok(-n * logdet - quad)
    }

    /// `Σ_x = A Γ A^H + σ² I` over the active atoms.
    fn model_covariance(&self) -> CMat {
        let m = self.atoms.nrows();
        let mut s = CMat::identity(m, m).scale(self.sigma2);
        for &g in &self.active {
            let col = self.atoms.column(g);
            s += (col * col.adjoint()).scale(self.gamma[g]);
        }
        (&s + s.adjoint()).scale(0.5)
    }
}

/// Sparse Bayesian learning by expectation-maximization.
///
/// The E-step works with the M×M form `(A Γ A^H + σ²I)^{-1}` rather than the
/// G×G posterior, so the cost per iteration is governed by the array size.
/// Atoms whose `γ` falls below `1e-6·max(γ)` are pruned (set to exactly 0).
pub fn sbl(
    snapshots: &SnapshotMatrix,
    dict: &AngularDictionary,
    max_iter: usize,
    tol: f64,
) -> Result<SblResult> {
    let m = snapshots.geometry().m_sensors();
    if dict.m_sensors() != m {
        return Err(DoaError::InvalidInput(
            "dictionary and snapshots disagree on sensor count".into(),
        ));
    }
    if max_iter == 0 {
        return Err(DoaError::InvalidInput("max_iter must be at least 1".into()));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(DoaError::InvalidInput("tol must be positive".into()));
    }

    let (gamma, sigma2, evidence_steps, iterations, converged) =
        sbl_em(snapshots.data(), dict.atoms(), max_iter, tol)?;

    let max_gamma = gamma.iter().cloned().fold(0.0, f64::max);
    let angles = if max_gamma > 0.0 {
        profile_peaks(dict.grid_deg(), &gamma, SBL_PEAK_REL * max_gamma, usize::MAX)?
    } else {
        Vec::new()
    };
    let mut estimate = DoaEstimate::new(angles);
    estimate.diagnostics.insert("noise_var".into(), sigma2);
    estimate
        .diagnostics
        .insert("iterations".into(), iterations as f64);
    Ok(SblResult {
        gamma,
        noise_var: sigma2,
        estimate,
        converged,
        iterations,
        evidence_steps,
    })
}

/// EM core of SBL; separated so hyperparameter behavior can be tested
/// independently of the grid.
#[allow(clippy::type_complexity)]
fn sbl_em(
    x: &CMat,
    atoms: &CMat,
    max_iter: usize,
    tol: f64,
) -> Result<(Vec<f64>, f64, Vec<(f64, f64)>, usize, bool)> {
    let m = atoms.nrows();
    let n = x.ncols();
    let g_total = atoms.ncols();

    // Matched-filter initialization of the prior variances.
    let gamma0: Vec<f64> = (0..g_total)
        .map(|g| {
            let col = atoms.column(g);
            let e: f64 = (0..n).map(|j| col.dotc(&x.column(j)).norm_sqr()).sum();
            e / (n as f64 * (m * m) as f64)
        })
        .collect();
    let mean_power = x.norm_squared() / (m * n) as f64;
    let mut state = SblState {
        x,
        atoms,
        gamma: gamma0,
        active: (0..g_total).collect(),
        sigma2: (0.1 * mean_power).max(SBL_SIGMA_FLOOR),
    };

    let mut evidence_steps = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let e_pre = state.evidence()?;

        // E-step: posterior statistics through the M×M solve.
        let sigma_x = state.model_covariance();
        let a_act = CMat::from_columns(
            &state
                .active
                .iter()
                .map(|&g| state.atoms.column(g).clone_owned())
                .collect::<Vec<_>>(),
        );
        let b = solve_loaded(&sigma_x, 0.0, &a_act)?; // Σx⁻¹ A
        let w = solve_loaded(&sigma_x, 0.0, x)?; // Σx⁻¹ X
        let mu_rows = a_act.adjoint() * &w; // Ga×N, row g scaled by γ_g below

        // M-step: γ and σ² updates as printed.
        let ga = state.active.len();
        let mut new_gamma = state.gamma.clone();
        let mut max_rel_change = 0.0f64;
        let mut mu_full = CMat::zeros(ga, n);
        for (row, &g) in state.active.iter().enumerate() {
            let gamma_g = state.gamma[g];
            let q = a_act.column(row).dotc(&b.column(row)).re; // a^H Σx⁻¹ a
            let post_var = (gamma_g - gamma_g * gamma_g * q).max(0.0);
            let mean_sq: f64 = mu_rows
                .row(row)
                .iter()
                .map(|z| (z * gamma_g).norm_sqr())
                .sum::<f64>()
                / n as f64;
            for c in 0..n {
                mu_full[(row, c)] = mu_rows[(row, c)] * gamma_g;
            }
            let updated = mean_sq + post_var;
            let rel = (updated - gamma_g).abs() / gamma_g.max(1e-30);
            max_rel_change = max_rel_change.max(rel);
            new_gamma[g] = updated;
        }

        // σ² update: residual power plus the posterior smearing term
        // tr(A Σ A^H) = tr(S) - tr(Σx⁻¹ S²).
        let resid = x - &a_act * &mu_full;
        let s_act = {
            let mut s = CMat::zeros(m, m);
            for (row, &g) in state.active.iter().enumerate() {
                let col = a_act.column(row);
                s += (col * col.adjoint()).scale(state.gamma[g]);
            }
            (&s + s.adjoint()).scale(0.5)
        };
        let t = solve_loaded(&sigma_x, 0.0, &s_act)?;
        let smear = (s_act.diagonal().sum() - (&t * &s_act).diagonal().sum()).re;
        let mut new_sigma2 =
            resid.norm_squared() / (m * n) as f64 + smear.max(0.0) / m as f64;
        if new_sigma2 < SBL_SIGMA_FLOOR {
            log::warn!("SBL noise variance collapsed to {new_sigma2:.3e}; floored at 1e-12");
            new_sigma2 = SBL_SIGMA_FLOOR;
        }

        state.gamma = new_gamma;
        state.sigma2 = new_sigma2;

        let e_post = state.evidence()?;
        evidence_steps.push((e_pre, e_post));

        // prune: exact zeros keep the evidence of the reduced model identical
        let max_gamma = state.gamma.iter().cloned().fold(0.0, f64::max);
        state.active.retain(|&g| {
            if state.gamma[g] < SBL_PRUNE_REL * max_gamma {
                state.gamma[g] = 0.0;
                false
            } else {
                true
            }
        });
        if state.active.is_empty() {
            break;
        }
        if max_rel_change < tol {
            converged = true;
            break;
        }
    }
    Ok((state.gamma, state.sigma2, evidence_steps, iterations, converged))
}

// ───────────────────────── SPICE ─────────────────────────

/// SPICE output.
#[derive(Debug, Clone)]
pub struct SpiceResult {
    /// Fitted per-atom powers (length G).
    pub powers: Vec<f64>,
    pub estimate: DoaEstimate,
    pub converged: bool,
    pub sweeps: usize,
    /// Objective after initialization and after every full sweep;
    /// non-increasing.
    pub objective_history: Vec<f64>,
}

const SPICE_PEAK_REL: f64 = 0.01;

/// Sparse iterative covariance-based estimation.
///
/// Minimizes `tr[(R̂ - A diag(p) A^H)²] + λ‖p‖₁` over `p ≥ 0` by cyclic
/// coordinate descent; each coordinate update is the closed-form clipped
/// minimizer, so the objective never increases. `‖a_i‖⁴ = M²` for
/// unit-modulus atoms.
pub fn spice(
    cov: &CovarianceEstimate,
    dict: &AngularDictionary,
    lambda_reg: f64,
    max_iter: usize,
    tol: f64,
) -> Result<SpiceResult> {
    let m = cov.m_sensors();
    if dict.m_sensors() != m {
        return Err(DoaError::InvalidInput(
            "dictionary and covariance disagree on sensor count".into(),
        ));
    }
    if !lambda_reg.is_finite() || lambda_reg < 0.0 {
        return Err(DoaError::InvalidInput(format!(
            "lambda must be nonnegative, got {lambda_reg}"
        )));
    }
    if max_iter == 0 {
        return Err(DoaError::InvalidInput("max_iter must be at least 1".into()));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(DoaError::InvalidInput("tol must be positive".into()));
    }

    let (powers, history, sweeps, converged) =
        spice_profile(cov.matrix(), dict.atoms(), lambda_reg, max_iter, tol);

    let max_p = powers.iter().cloned().fold(0.0, f64::max);
    let angles = if max_p > 0.0 {
        profile_peaks(dict.grid_deg(), &powers, SPICE_PEAK_REL * max_p, usize::MAX)?
    } else {
        Vec::new()
    };
    let mut estimate = DoaEstimate::new(angles);
    estimate
        .diagnostics
        .insert("objective".into(), *history.last().unwrap());
    estimate.diagnostics.insert("sweeps".into(), sweeps as f64);
    Ok(SpiceResult {
        powers,
        estimate,
        converged,
        sweeps,
        objective_history: history,
    })
}

/// Coordinate-descent core; also the seam for grid-permutation tests.
fn spice_profile(
    r_hat: &CMat,
    atoms: &CMat,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, Vec<f64>, usize, bool) {
    let g = atoms.ncols();
    let m = atoms.nrows();
    let m2 = (m * m) as f64;
    let mut powers = vec![0.0f64; g];
    // residual R̂ - A diag(p) A^H, updated rank-one per coordinate step
    let mut resid = r_hat.clone();
    let objective = |resid: &CMat, powers: &[f64]| -> f64 {
        resid.norm_squared() + lambda * powers.iter().sum::<f64>()
    };

    let mut history = vec![objective(&resid, &powers)];
    let mut converged = false;
    let mut sweeps = 0;
    for _ in 0..max_iter {
        sweeps += 1;
        for (i, p_i) in powers.iter_mut().enumerate() {
            let a_i = atoms.column(i);
            let quad = a_i.dotc(&(&resid * a_i)).re;
            let numer = quad + *p_i * m2;
            let updated = ((numer - lambda / 2.0) / m2).max(0.0);
            let delta = updated - *p_i;
            if delta != 0.0 {
                resid -= (a_i * a_i.adjoint()).scale(delta);
                *p_i = updated;
            }
        }
        let obj = objective(&resid, &powers);
        let prev = *history.last().unwrap();
        history.push(obj);
        if (prev - obj).abs() <= tol * prev.abs().max(1e-30) {
            converged = true;
            break;
        }
    }
    (powers, history, sweeps, converged)
}
