//! Deterministic, seedable generation of array snapshots.
//!
//! The per-trial stream contract: a trial's data depends only on
//! `(scenario, trial index)`, never on worker scheduling, so Monte Carlo
//! campaigns are reproducible at any parallelism level.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::array_model::{manifold_matrix, ArrayGeometry, SnapshotMatrix};
use crate::error::{DoaError, Result};
use crate::{CMat, CVec};

/// A complete simulation scenario. `snr_db` is defined relative to the mean
/// source power: `noise_var = mean(source_powers) / 10^(snr_db/10)`;
/// `snr_db = +∞` yields noise-free data.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub source_angles_deg: Vec<f64>,
    pub source_powers: Vec<f64>,
    pub snr_db: f64,
    pub n_snapshots: usize,
    pub coherent: bool,
    pub seed: u64,
}

impl Scenario {
    /// Scenario with unit source powers.
    pub fn new(
        geometry: ArrayGeometry,
        source_angles_deg: Vec<f64>,
        snr_db: f64,
        n_snapshots: usize,
        seed: u64,
    ) -> Result<Self> {
        let powers = vec![1.0; source_angles_deg.len()];
        Self::with_powers(geometry, source_angles_deg, powers, snr_db, n_snapshots, false, seed)
    }

    pub fn with_powers(
        geometry: ArrayGeometry,
        source_angles_deg: Vec<f64>,
        source_powers: Vec<f64>,
        snr_db: f64,
        n_snapshots: usize,
        coherent: bool,
        seed: u64,
    ) -> Result<Self> {
        if source_angles_deg.len() != source_powers.len() {
            return Err(DoaError::InvalidInput(format!(
                "{} angles but {} powers",
                source_angles_deg.len(),
                source_powers.len()
            )));
        }
        if source_angles_deg.iter().any(|a| !a.is_finite() || a.abs() > 90.0) {
            return Err(DoaError::InvalidInput(
                "source angles must lie in [-90°, 90°]".into(),
            ));
        }
        if source_powers.iter().any(|&p| !p.is_finite() || p <= 0.0) {
            return Err(DoaError::InvalidInput("source powers must be positive".into()));
        }
        if n_snapshots == 0 {
            return Err(DoaError::InvalidInput("need at least one snapshot".into()));
        }
        if snr_db.is_nan() {
            return Err(DoaError::InvalidInput("snr_db must not be NaN".into()));
        }
        Ok(Self {
            geometry,
            source_angles_deg,
            source_powers,
            snr_db,
            n_snapshots,
            coherent,
            seed,
        })
    }

    pub fn k_sources(&self) -> usize {
        self.source_angles_deg.len()
    }

    /// Noise variance implied by the SNR definition; 0 for infinite SNR or
    /// when there are no sources to reference.
    pub fn noise_var(&self) -> f64 {
        if self.source_powers.is_empty() {
            // noise-only scenario: unit noise by convention
            return 1.0;
        }
        let mean_power: f64 =
            self.source_powers.iter().sum::<f64>() / self.source_powers.len() as f64;
        mean_power / 10f64.powf(self.snr_db / 10.0)
    }

    /// The theoretical covariance of this scenario.
    pub fn exact_covariance(&self) -> Result<crate::array_model::CovarianceEstimate> {
        let coherence: Option<Vec<Complex64>> = if self.coherent {
            Some(vec![Complex64::new(1.0, 0.0); self.k_sources()])
        } else {
            None
        };
        crate::array_model::exact_covariance(
            &self.geometry,
            &self.source_angles_deg,
            &self.source_powers,
            self.noise_var(),
            coherence.as_deref(),
        )
    }

    /// Stable 64-bit fingerprint of every parameter; used to label trial
    /// records.
    pub fn fingerprint(&self) -> String {
        let mut h = 0xcbf2_9ce4_8422_2325u64; // FNV offset basis
        let mut mix = |v: u64| {
            h ^= v;
            h = splitmix64(h);
        };
        mix(self.geometry.m_sensors() as u64);
        mix(self.geometry.spacing_wavelengths().to_bits());
        for a in &self.source_angles_deg {
            mix(a.to_bits());
        }
        for p in &self.source_powers {
            mix(p.to_bits());
        }
        mix(self.snr_db.to_bits());
        mix(self.n_snapshots as u64);
        mix(self.coherent as u64);
        mix(self.seed);
        format!("{h:016x}")
    }
}

/// SplitMix64 finalizer; a counter-based mixer with full 64-bit avalanche.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the RNG seed for one trial of a campaign: an order-independent
/// hash of the base seed and the trial index.
pub fn trial_seed(seed: u64, trial_index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ trial_index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// One draw of a circular complex Gaussian with `E|z|² = var`, built from a
/// Box-Muller pair (two independent real Gaussians of variance var/2).
fn complex_gaussian(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    if var == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    let radius = (-var * u1.ln()).sqrt();
    Complex64::from_polar(radius, 2.0 * PI * u2)
}

/// Generate `X = A S + N` for a scenario.
///
/// Uncorrelated mode draws each source i.i.d. with its own power; coherent
/// mode drives every source with one shared unit-variance waveform scaled by
/// `√p_k` (all-ones coherence phases, the worst case for subspace methods).
/// Identical scenarios produce bit-identical matrices.
pub fn generate_snapshots(scenario: &Scenario) -> SnapshotMatrix {
    let m = scenario.geometry.m_sensors();
    let n = scenario.n_snapshots;
    let k = scenario.k_sources();
    let noise_var = scenario.noise_var();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let manifold = if k > 0 {
        manifold_matrix(&scenario.geometry, &scenario.source_angles_deg)
            .expect("scenario angles validated on construction")
    } else {
        CMat::zeros(m, 0)
    };

    let mut x = CMat::zeros(m, n);
    let mut sources = CVec::zeros(k);
    for col in 0..n {
        if scenario.coherent && k > 0 {
            let base = complex_gaussian(&mut rng, 1.0);
            for (s, &p) in sources.iter_mut().zip(&scenario.source_powers) {
                *s = base * p.sqrt();
            }
        } else {
            for (s, &p) in sources.iter_mut().zip(&scenario.source_powers) {
                *s = complex_gaussian(&mut rng, p);
            }
        }
        if k > 0 {
            let combined = &manifold * &sources;
            x.column_mut(col).copy_from(&combined);
        }
        for row in 0..m {
            x[(row, col)] += complex_gaussian(&mut rng, noise_var);
        }
    }
    SnapshotMatrix::new(x, scenario.geometry)
        .expect("generated snapshots are finite by construction")
}
