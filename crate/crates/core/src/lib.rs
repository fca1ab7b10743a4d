//! Narrowband direction-of-arrival (DOA) estimation for uniform linear
//! arrays.
//!
//! The crate provides, behind one set of shared types:
//!
//! - classical spectra: delay-and-sum, Capon/MVDR, linear prediction;
//! - subspace methods: MUSIC, Root-MUSIC, ESPRIT, unitary ESPRIT, with
//!   AIC/MDL source enumeration;
//! - concentrated maximum-likelihood estimators: DML, SML, WSF;
//! - grid-dictionary sparse estimators: L1-SVD, SBL, SPICE;
//! - a seedable snapshot simulator and a deterministic Monte Carlo benchmark
//!   harness.
//!
//! Angles are degrees at every public boundary (broadside = 0°, range
//! [-90°, 90°]); radians are internal. All estimators are pure functions over
//! immutable inputs and safe to call from concurrent workers.
//!
//! ```
//! use doa_core::array_model::ArrayGeometry;
//! use doa_core::estimate::{run_method, Method, MethodParams};
//! use doa_core::simulate::{generate_snapshots, Scenario};
//!
//! let geometry = ArrayGeometry::half_wavelength(8)?;
//! let scenario = Scenario::new(geometry, vec![-10.0, 10.0], 20.0, 200, 42)?;
//! let snapshots = generate_snapshots(&scenario);
//! let estimate = run_method(&snapshots, Method::RootMusic, 2, &MethodParams::default())?;
//! assert!((estimate.angles_deg[0] + 10.0).abs() < 0.5);
//! assert!((estimate.angles_deg[1] - 10.0).abs() < 0.5);
//! # Ok::<(), doa_core::DoaError>(())
//! ```

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;
/// Dense real column vector.
pub type RVec = DVector<f64>;

pub mod array_model;
pub mod classical;
pub mod cli;
pub mod error;
pub mod estimate;
pub mod eval;
pub mod ml;
pub mod numerics;
pub mod simulate;
pub mod sparse;
pub mod subspace;

pub use array_model::{
    beampattern, exact_covariance, forward_backward, manifold_matrix, sample_covariance,
    steering_vector, unitary_transform, ArrayGeometry, CovarianceEstimate, SnapshotMatrix,
    SpatialSpectrum,
};
pub use error::{DoaError, Result};
pub use estimate::{DoaEstimate, Method, MethodParams};
pub use simulate::{generate_snapshots, Scenario};

#[cfg(test)]
pub(crate) mod test_util {
    use super::CMat;
    use num_complex::Complex64;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Random Hermitian matrix with entries of order one.
    pub fn random_hermitian(rng: &mut ChaCha8Rng, m: usize) -> CMat {
        let g = CMat::from_fn(m, m, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        (&g + g.adjoint()).scale(0.5)
    }

    /// Random Hermitian positive definite matrix.
    pub fn random_hpd(rng: &mut ChaCha8Rng, m: usize, ridge: f64) -> CMat {
        let g = CMat::from_fn(m, m, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        &g * g.adjoint() + CMat::identity(m, m).scale(ridge)
    }

    /// Random unitary matrix from the QR of a random complex matrix.
    pub fn random_unitary(rng: &mut ChaCha8Rng, m: usize) -> CMat {
        let g = CMat::from_fn(m, m, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let qr = g.qr();
        qr.q()
    }
}
