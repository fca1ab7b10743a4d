//! Shared estimate types and the one-call dispatch that runs any estimator
//! on a snapshot matrix.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::array_model::{sample_covariance, uniform_grid, SnapshotMatrix, SpatialSpectrum};
use crate::classical::{capon_spectrum, das_spectrum, default_capon_loading, linear_prediction_doas};
use crate::error::{DoaError, Result};
use crate::ml::{ml_estimate, MlMethod};
use crate::sparse::{l1_svd, sbl, spice, AngularDictionary};
use crate::subspace::{
    estimate_source_count, music_spectrum, root_music, subspace_split, unitary_esprit,
    SourceCountCriterion,
};

/// Sorted angle estimates plus per-method diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DoaEstimate {
    /// Estimated arrival angles in degrees, ascending.
    pub angles_deg: Vec<f64>,
    /// Scalar diagnostics (costs, gaps, iteration counts); keys are stable so
    /// serialized output is deterministic.
    pub diagnostics: BTreeMap<String, f64>,
}

impl DoaEstimate {
    pub fn new(mut angles_deg: Vec<f64>) -> Self {
        angles_deg.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self {
            angles_deg,
            diagnostics: BTreeMap::new(),
        }
    }
}

/// Every estimator the toolkit exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Das,
    Capon,
    LinearPrediction,
    Music,
    RootMusic,
    Esprit,
    UnitaryEsprit,
    Dml,
    Sml,
    Wsf,
    L1Svd,
    Sbl,
    Spice,
}

impl Method {
    pub const ALL: [Method; 13] = [
        Method::Das,
        Method::Capon,
        Method::LinearPrediction,
        Method::Music,
        Method::RootMusic,
        Method::Esprit,
        Method::UnitaryEsprit,
        Method::Dml,
        Method::Sml,
        Method::Wsf,
        Method::L1Svd,
        Method::Sbl,
        Method::Spice,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Das => "das",
            Method::Capon => "capon",
            Method::LinearPrediction => "lp",
            Method::Music => "music",
            Method::RootMusic => "root-music",
            Method::Esprit => "esprit",
            Method::UnitaryEsprit => "unitary-esprit",
            Method::Dml => "dml",
            Method::Sml => "sml",
            Method::Wsf => "wsf",
            Method::L1Svd => "l1-svd",
            Method::Sbl => "sbl",
            Method::Spice => "spice",
        }
    }

    /// Methods that produce a spatial spectrum or power profile.
    pub fn has_spectrum(&self) -> bool {
        matches!(
            self,
            Method::Das | Method::Capon | Method::Music | Method::Sbl | Method::Spice
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| {
                DoaError::Config(format!(
                    "unknown method '{s}'; valid methods: {}",
                    Method::ALL.map(|m| m.as_str()).join(", ")
                ))
            })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Method::from_str(&s).map_err(serde::de::Error::custom)
    }
}

/// Optional per-method knobs; anything unset falls back to the documented
/// default.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MethodParams {
    /// Number of sources; defaults to the scenario's source count, or to
    /// AIC/MDL enumeration when `criterion` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sources: Option<usize>,
    /// Spectral search grid step in degrees (default 0.1; sparse methods 0.5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step_deg: Option<f64>,
    /// Capon diagonal loading (default: 1e-3·tr(R)/M when N < 2M, else 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loading: Option<f64>,
    /// L1-SVD sparsity weight (default 0.1·max_g ‖a_g^H U_K‖).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// SPICE ℓ₁ weight (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Iteration cap for SBL/SPICE (defaults 200).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Convergence tolerance for SBL (1e-4) and SPICE (1e-8).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Linear prediction order (default M-1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Source enumeration criterion ("aic" or "mdl") used when `k_sources`
    /// is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
}

impl MethodParams {
    /// Resolve the source count: explicit value, else data-driven
    /// enumeration when a criterion is named, else the scenario truth.
    pub fn resolve_k(&self, snapshots: &SnapshotMatrix, scenario_k: usize) -> Result<usize> {
        if let Some(k) = self.k_sources {
            return Ok(k);
        }
        if let Some(criterion) = &self.criterion {
            let criterion = match criterion.as_str() {
                "aic" => SourceCountCriterion::Aic,
                "mdl" => SourceCountCriterion::Mdl,
                other => {
                    return Err(DoaError::Config(format!(
                        "unknown criterion '{other}'; use \"aic\" or \"mdl\""
                    )))
                }
            };
            let cov = sample_covariance(snapshots);
            let eig = cov.eigen();
            return estimate_source_count(&eig.eigenvalues, cov.n_snapshots(), criterion);
        }
        if scenario_k == 0 {
            return Err(DoaError::Config(
                "k_sources not set and the scenario has no sources".into(),
            ));
        }
        Ok(scenario_k)
    }

    fn grid(&self, default_step: f64) -> Vec<f64> {
        uniform_grid(self.grid_step_deg.unwrap_or(default_step))
    }
}

/// Default spectral-search grid step in degrees.
pub const DEFAULT_GRID_STEP: f64 = 0.1;

/// Run one estimator on a snapshot matrix and return exactly the peaks it
/// resolved (at most `k_sources`).
pub fn run_method(
    snapshots: &SnapshotMatrix,
    method: Method,
    k_sources: usize,
    params: &MethodParams,
) -> Result<DoaEstimate> {
    if k_sources == 0 {
        return Err(DoaError::InvalidInput("k_sources must be at least 1".into()));
    }
    let geometry = *snapshots.geometry();
    match method {
        Method::Das => {
            let cov = sample_covariance(snapshots);
            let spectrum = das_spectrum(&cov, &geometry, &params.grid(DEFAULT_GRID_STEP))?;
            Ok(crate::eval::find_peaks(&spectrum, k_sources))
        }
        Method::Capon => {
            let cov = sample_covariance(snapshots);
            let loading = params.loading.unwrap_or_else(|| default_capon_loading(&cov));
            let spectrum =
                capon_spectrum(&cov, &geometry, &params.grid(DEFAULT_GRID_STEP), loading)?;
            Ok(crate::eval::find_peaks(&spectrum, k_sources))
        }
        Method::LinearPrediction => {
            let cov = sample_covariance(snapshots);
            linear_prediction_doas(&cov, &geometry, k_sources, params.order)
        }
        Method::Music => {
            let cov = sample_covariance(snapshots);
            let split = subspace_split(&cov, k_sources)?;
            let spectrum = music_spectrum(&split, &geometry, &params.grid(DEFAULT_GRID_STEP))?;
            let mut est = crate::eval::find_peaks(&spectrum, k_sources);
            est.diagnostics
                .insert("eigen_gap".into(), clamp_finite(split.eigen_gap()));
            Ok(est)
        }
        Method::RootMusic => {
            let cov = sample_covariance(snapshots);
            let split = subspace_split(&cov, k_sources)?;
            root_music(&split, &geometry, k_sources)
        }
        Method::Esprit => {
            let cov = sample_covariance(snapshots);
            let split = subspace_split(&cov, k_sources)?;
            crate::subspace::esprit(&split, &geometry, k_sources)
        }
        Method::UnitaryEsprit => {
            let cov = sample_covariance(snapshots);
            unitary_esprit(&cov, &geometry, k_sources)
        }
        Method::Dml | Method::Sml | Method::Wsf => {
            let ml_method = match method {
                Method::Dml => MlMethod::Dml,
                Method::Sml => MlMethod::Sml,
                _ => MlMethod::Wsf,
            };
            let cov = sample_covariance(snapshots);
            Ok(ml_estimate(&cov, &geometry, k_sources, ml_method)?.into_estimate())
        }
        Method::L1Svd => {
            let dict = sparse_dictionary(&geometry, params)?;
            let mu = match params.mu {
                Some(m) => m,
                None => default_l1_mu(snapshots, k_sources, &dict)?,
            };
            let res = l1_svd(snapshots, k_sources, &dict, mu)?;
            let mut est = top_k_from_profile(&dict, &res.power_profile, k_sources)?;
            est.diagnostics.extend(res.estimate.diagnostics.clone());
            est.diagnostics
                .insert("converged".into(), res.converged as u8 as f64);
            Ok(est)
        }
        Method::Sbl => {
            let dict = sparse_dictionary(&geometry, params)?;
            let res = sbl(
                snapshots,
                &dict,
                params.max_iter.unwrap_or(200),
                params.tol.unwrap_or(1e-4),
            )?;
            let mut est = top_k_from_profile(&dict, &res.gamma, k_sources)?;
            est.diagnostics.insert("noise_var".into(), res.noise_var);
            est.diagnostics
                .insert("iterations".into(), res.iterations as f64);
            est.diagnostics
                .insert("converged".into(), res.converged as u8 as f64);
            Ok(est)
        }
        Method::Spice => {
            let cov = sample_covariance(snapshots);
            let dict = sparse_dictionary(&geometry, params)?;
            let res = spice(
                &cov,
                &dict,
                params.lambda.unwrap_or(0.0),
                params.max_iter.unwrap_or(200),
                params.tol.unwrap_or(1e-8),
            )?;
            let mut est = top_k_from_profile(&dict, &res.powers, k_sources)?;
            est.diagnostics.insert("sweeps".into(), res.sweeps as f64);
            est.diagnostics
                .insert("converged".into(), res.converged as u8 as f64);
            Ok(est)
        }
    }
}

fn clamp_finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::MAX
    }
}

fn sparse_dictionary(
    geometry: &crate::array_model::ArrayGeometry,
    params: &MethodParams,
) -> Result<AngularDictionary> {
    match params.grid_step_deg {
        Some(step) => AngularDictionary::new(geometry, uniform_grid(step)),
        None => AngularDictionary::with_default_grid(geometry),
    }
}

/// Default L1-SVD weight: `0.1·max_g ‖a_g^H U_K‖₂`.
fn default_l1_mu(
    snapshots: &SnapshotMatrix,
    k_sources: usize,
    dict: &AngularDictionary,
) -> Result<f64> {
    let (u, _) = crate::numerics::thin_left_singular(snapshots.data())?;
    if k_sources >= u.ncols() {
        return Err(DoaError::InvalidInput(
            "k_sources exceeds the available singular vectors".into(),
        ));
    }
    let u_k = u.columns(0, k_sources);
    let max = (0..dict.len())
        .map(|g| (dict.atoms().column(g).adjoint() * u_k).norm())
        .fold(0.0, f64::max);
    Ok(0.1 * max)
}

/// Strongest `k` local maxima of a sparse power profile as a DoaEstimate.
fn top_k_from_profile(
    dict: &AngularDictionary,
    profile: &[f64],
    k: usize,
) -> Result<DoaEstimate> {
    let spectrum = SpatialSpectrum::new(dict.grid_deg().to_vec(), profile.to_vec())?;
    Ok(crate::eval::find_peaks(&spectrum, k))
}
