//! Dense complex linear-algebra kernels used by every estimator.
//!
//! Thin contracts over nalgebra factorizations: Hermitian eigendecomposition
//! with guaranteed descending order, full SVD, polynomial rooting via the
//! companion matrix, and diagonally loaded Hermitian solves. All functions are
//! pure and reentrant.

use nalgebra::{Cholesky, DMatrix, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{DoaError, Result};
use crate::{CMat, CVec};

/// Default absolute tolerance on `max|R - R^H|` before an input is rejected
/// as non-Hermitian. Sample covariances accumulate rounding asymmetry of this
/// order; anything larger indicates a caller bug.
pub const HERMITIAN_ASYM_TOL: f64 = 1e-8;

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
///
/// Column `i` of `eigenvectors` pairs with `eigenvalues[i]`; the columns are
/// orthonormal and `R = V diag(λ) V^H` up to rounding.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl HermitianEigen {
    /// Rebuild `V diag(λ) V^H`; used by tests to verify the reconstruction
    /// contract.
    pub fn reconstruct(&self) -> CMat {
        let lambda = DMatrix::from_diagonal(&CVec::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)),
        ));
        &self.eigenvectors * lambda * self.eigenvectors.adjoint()
    }
}

/// Full singular value decomposition `X = U Σ V^H`.
///
/// `u` is M×M and `v` is N×N (thin factors are completed to full unitary
/// bases); singular values are nonnegative and descending.
#[derive(Debug, Clone)]
pub struct SvdDecomposition {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v: CMat,
}

fn check_finite(m: &CMat, what: &str) -> Result<()> {
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(DoaError::InvalidInput(format!(
            "{what} contains non-finite entries"
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix with the default asymmetry
/// tolerance.
pub fn hermitian_eig(r: &CMat) -> Result<HermitianEigen> {
    hermitian_eig_with(r, HERMITIAN_ASYM_TOL)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized as `(R + R^H)/2` when its asymmetry is within
/// `asym_tol`; larger asymmetry or non-finite entries are rejected.
pub fn hermitian_eig_with(r: &CMat, asym_tol: f64) -> Result<HermitianEigen> {
    if !r.is_square() {
        return Err(DoaError::InvalidInput(format!(
            "hermitian_eig expects a square matrix, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    check_finite(r, "hermitian_eig input")?;
    let adj = r.adjoint();
    let asym = (r - &adj).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if asym > asym_tol {
        return Err(DoaError::InvalidInput(format!(
            "matrix asymmetry {asym:.3e} exceeds tolerance {asym_tol:.1e}"
        )));
    }
    let sym = (r + adj).scale(0.5);

    let eig = SymmetricEigen::new(sym);
    let m = r.nrows();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMat::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).clone_owned())
            .collect::<Vec<_>>(),
    );
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Extend a matrix of orthonormal columns to a full unitary basis of `dim`.
fn complete_orthonormal(mut cols: Vec<CVec>, dim: usize) -> CMat {
    let mut candidate = 0usize;
    while cols.len() < dim && candidate < dim {
        let mut v = CVec::zeros(dim);
        v[candidate] = Complex64::new(1.0, 0.0);
        for c in &cols {
            let proj = c.dotc(&v);
            v -= c * proj;
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v.unscale(n));
        }
        candidate += 1;
    }
    debug_assert_eq!(cols.len(), dim, "orthonormal completion fell short");
    CMat::from_columns(&cols)
}

/// Full SVD of an M×N complex matrix.
pub fn svd(x: &CMat) -> Result<SvdDecomposition> {
    check_finite(x, "svd input")?;
    let (m, n) = (x.nrows(), x.ncols());
    let dec = SVD::new(x.clone(), true, true);
    let u_thin = dec.u.expect("svd requested u");
    let v_t_thin = dec.v_t.expect("svd requested v_t");
    let r = dec.singular_values.len();

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        dec.singular_values[b]
            .partial_cmp(&dec.singular_values[a])
            .unwrap()
    });
    let singular_values: Vec<f64> = order.iter().map(|&i| dec.singular_values[i]).collect();

    let u_cols: Vec<CVec> = order.iter().map(|&i| u_thin.column(i).clone_owned()).collect();
    let v_thin = v_t_thin.adjoint();
    let v_cols: Vec<CVec> = order.iter().map(|&i| v_thin.column(i).clone_owned()).collect();

    Ok(SvdDecomposition {
        u: complete_orthonormal(u_cols, m),
        singular_values,
        v: complete_orthonormal(v_cols, n),
    })
}

/// Cholesky with an explicit positive-definiteness check.
///
/// nalgebra's complex Cholesky happily takes the complex square root of a
/// negative pivot, so an indefinite matrix "factors" into a non-Hermitian
/// product. A genuine PD factorization has a real positive diagonal.
fn checked_cholesky(a: CMat) -> Option<Cholesky<Complex64, nalgebra::Dyn>> {
    let chol = Cholesky::new(a)?;
    let ok = chol
        .l_dirty()
        .diagonal()
        .iter()
        .all(|z| z.re.is_finite() && z.re > 0.0 && z.im.abs() <= 1e-12 * z.re);
    ok.then_some(chol)
}

/// Thin left singular factor of X, columns sorted by descending singular
/// value. Shared by L1-SVD and the sparse defaults.
pub(crate) fn thin_left_singular(x: &CMat) -> Result<(CMat, Vec<f64>)> {
    check_finite(x, "svd input")?;
    let dec = SVD::new(x.clone(), true, false);
    let u = dec.u.expect("svd requested u");
    let r = dec.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        dec.singular_values[b]
            .partial_cmp(&dec.singular_values[a])
            .unwrap()
    });
    let values: Vec<f64> = order.iter().map(|&i| dec.singular_values[i]).collect();
    let cols: Vec<CVec> = order.iter().map(|&i| u.column(i).clone_owned()).collect();
    Ok((CMat::from_columns(&cols), values))
}

/// Solve `A X = B` for Hermitian positive definite A and return the solution
/// together with `log det A`. Used where a Gaussian log-likelihood needs the
/// determinant of the same matrix it solves against.
pub(crate) fn hermitian_solve_logdet(a: &CMat, b: &CMat) -> Result<(CMat, f64)> {
    let chol = checked_cholesky(a.clone()).ok_or_else(|| {
        DoaError::SingularMatrix("matrix is not positive definite".into())
    })?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
    Ok((chol.solve(b), logdet))
}

/// Eigenvalues of a general (non-Hermitian) complex matrix via its Schur
/// form. Internal helper shared by `poly_roots`, ESPRIT and unitary ESPRIT.
pub(crate) fn general_eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 0).ok_or_else(|| {
        DoaError::EstimationFailure("Schur iteration did not converge".into())
    })?;
    if let Some(vals) = schur.eigenvalues() {
        return Ok(vals.iter().copied().collect());
    }
    // Unresolved 2x2 blocks on the quasi-triangular form: solve them directly.
    let (_, t) = schur.unpack();
    let mut vals = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].norm() > f64::EPSILON * (t[(i, i)].norm() + t[(i + 1, i + 1)].norm()) {
            let tr = t[(i, i)] + t[(i + 1, i + 1)];
            let det = t[(i, i)] * t[(i + 1, i + 1)] - t[(i, i + 1)] * t[(i + 1, i)];
            let disc = (tr * tr - det * 4.0).sqrt();
            vals.push((tr + disc) * 0.5);
            vals.push((tr - disc) * 0.5);
            i += 2;
        } else {
            vals.push(t[(i, i)]);
            i += 1;
        }
    }
    Ok(vals)
}

/// Roots of a polynomial given by ascending-power coefficients, computed as
/// the eigenvalues of the companion matrix.
///
/// Returns exactly `degree` roots (with multiplicity) after trailing zero
/// coefficients are trimmed. A degree-0 polynomial has no roots; an all-zero
/// coefficient vector is rejected.
pub fn poly_roots(coefficients: &[Complex64]) -> Result<Vec<Complex64>> {
    if coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(DoaError::InvalidInput(
            "polynomial coefficients contain non-finite entries".into(),
        ));
    }
    let mut last = coefficients.len();
    while last > 0 && coefficients[last - 1].norm() == 0.0 {
        last -= 1;
    }
    if last == 0 {
        return Err(DoaError::InvalidInput(
            "all polynomial coefficients are zero".into(),
        ));
    }
    let degree = last - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coefficients[degree];
    let mut companion = CMat::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coefficients[i] / lead;
    }
    general_eigenvalues(&companion)
}

/// Solve `(R + load·I) X = B` for a Hermitian `R` through its Cholesky
/// factorization; never forms an explicit inverse.
pub fn solve_loaded(r: &CMat, load: f64, b: &CMat) -> Result<CMat> {
    if !r.is_square() {
        return Err(DoaError::InvalidInput(format!(
            "solve_loaded expects a square matrix, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if r.nrows() != b.nrows() {
        return Err(DoaError::InvalidInput(format!(
            "dimension mismatch: R is {0}x{0} but B has {1} rows",
            r.nrows(),
            b.nrows()
        )));
    }
    if !load.is_finite() || load < 0.0 {
        return Err(DoaError::InvalidInput(format!(
            "diagonal load must be a nonnegative finite value, got {load}"
        )));
    }
    check_finite(r, "solve_loaded matrix")?;
    check_finite(b, "solve_loaded rhs")?;

    let mut loaded = r.clone();
    for i in 0..r.nrows() {
        loaded[(i, i)] += Complex64::new(load, 0.0);
    }
    let chol = checked_cholesky(loaded).ok_or_else(|| {
        DoaError::SingularMatrix(format!(
            "R + {load:.3e}·I is not positive definite; increase the diagonal load"
        ))
    })?;
    Ok(chol.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_hermitian, seeded_rng};
    use num_complex::Complex64 as C;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn identity_eigenvalues_are_ones() {
        let eig = hermitian_eig(&CMat::identity(3, 3)).unwrap();
        for l in &eig.eigenvalues {
            assert!((l - 1.0).abs() < 1e-12);
        }
        let vtv = eig.eigenvectors.adjoint() * &eig.eigenvectors;
        assert!((vtv - CMat::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn diagonal_matrix_sorted_descending_with_permuted_basis() {
        let r = CMat::from_diagonal(&CVec::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]));
        let eig = hermitian_eig(&r).unwrap();
        assert!((eig.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 2.0).abs() < 1e-12);
        assert!((eig.eigenvalues[2] - 1.0).abs() < 1e-12);
        // eigenvector for 3 must be ±e0, for 2 must be ±e2, for 1 must be ±e1
        for (col, expect) in [(0usize, 0usize), (1, 2), (2, 1)] {
            let v = eig.eigenvectors.column(col);
            assert!((v[expect].norm() - 1.0).abs() < 1e-10);
        }
    }

    /// Characteristic polynomial coefficients via the Faddeev–LeVerrier
    /// recursion; an implementation-independent oracle for eigenvalues.
    fn char_poly(m: &CMat) -> Vec<C> {
        let n = m.nrows();
        let mut coeffs = vec![C::new(0.0, 0.0); n + 1];
        coeffs[n] = C::new(1.0, 0.0);
        let mut aux = CMat::zeros(n, n);
        for k in 1..=n {
            aux = m * aux;
            for i in 0..n {
                aux[(i, i)] += coeffs[n - k + 1];
            }
            let t = (m * &aux).diagonal().sum() / C::new(k as f64, 0.0);
            coeffs[n - k] = -t;
        }
        coeffs
    }

    #[test]
    fn rank_one_update_spectrum_matches_characteristic_polynomial() {
        // R = a a^H + I for the broadside steering vector of a 4-element ULA:
        // a = [1,1,1,1], so the spectrum is {5, 1, 1, 1}.
        let a = CVec::from_element(4, c(1.0, 0.0));
        let r = &a * a.adjoint() + CMat::identity(4, 4);

        // Oracle: roots of the characteristic polynomial. The eigenvalue 1
        // is a triple root, conditioned as ε^(1/3), hence the loose bound.
        let cp = char_poly(&r);
        let mut roots: Vec<f64> = poly_roots(&cp).unwrap().iter().map(|z| z.re).collect();
        roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
        assert!((roots[0] - 5.0).abs() < 1e-8);
        for r in &roots[1..] {
            assert!((r - 1.0).abs() < 1e-4);
        }

        let eig = hermitian_eig(&r).unwrap();
        assert!((eig.eigenvalues[0] - 5.0).abs() < 1e-10);
        for l in &eig.eigenvalues[1..] {
            assert!((l - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian_and_non_finite() {
        let mut r = CMat::identity(3, 3);
        r[(0, 1)] = c(1.0, 0.0); // asymmetry 1.0
        assert!(matches!(
            hermitian_eig(&r),
            Err(DoaError::InvalidInput(_))
        ));
        let mut r = CMat::identity(2, 2);
        r[(0, 0)] = c(f64::NAN, 0.0);
        assert!(hermitian_eig(&r).is_err());
    }

    #[test]
    fn eigen_reconstruction_and_trace_invariant() {
        let mut rng = seeded_rng(11);
        for _ in 0..100 {
            let m = rng.random_range(2..9);
            let r = random_hermitian(&mut rng, m);
            let eig = hermitian_eig(&r).unwrap();
            for w in eig.eigenvalues.windows(2) {
                assert!(w[0] >= w[1]);
            }
            let rel = (eig.reconstruct() - &r).norm() / r.norm();
            assert!(rel < 1e-10, "reconstruction error {rel:.3e}");
            let trace: f64 = r.diagonal().iter().map(|z| z.re).sum();
            let sum: f64 = eig.eigenvalues.iter().sum();
            assert!((trace - sum).abs() <= 1e-9 * trace.abs().max(1.0));
        }
    }

    #[test]
    fn svd_identity_and_rank_one() {
        let dec = svd(&CMat::identity(4, 4)).unwrap();
        for s in &dec.singular_values {
            assert!((s - 1.0).abs() < 1e-12);
        }

        let a = CVec::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 1.0)]);
        let b = CVec::from_vec(vec![c(0.7, -0.1), c(0.4, 0.9)]);
        let x = &a * b.adjoint();
        let dec = svd(&x).unwrap();
        assert!((dec.singular_values[0] - a.norm() * b.norm()).abs() < 1e-12);
        for s in &dec.singular_values[1..] {
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn svd_reconstruction_full_bases() {
        let mut rng = seeded_rng(7);
        let x = CMat::from_fn(4, 8, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let dec = svd(&x).unwrap();
        assert_eq!(dec.u.shape(), (4, 4));
        assert_eq!(dec.v.shape(), (8, 8));
        let mut sigma = CMat::zeros(4, 8);
        for (i, s) in dec.singular_values.iter().enumerate() {
            sigma[(i, i)] = c(*s, 0.0);
        }
        let rel = (&dec.u * sigma * dec.v.adjoint() - &x).norm() / x.norm();
        assert!(rel < 1e-10, "svd reconstruction error {rel:.3e}");
        assert!((dec.u.adjoint() * &dec.u - CMat::identity(4, 4)).norm() < 1e-10);
        assert!((dec.v.adjoint() * &dec.v - CMat::identity(8, 8)).norm() < 1e-10);
    }

    #[test]
    fn roots_of_simple_quadratics() {
        // z^2 - 1
        let roots = poly_roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let mut re: Vec<f64> = roots.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] + 1.0).abs() < 1e-10 && (re[1] - 1.0).abs() < 1e-10);

        // z^2 + 1
        let roots = poly_roots(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let mut im: Vec<f64> = roots.iter().map(|z| z.im).collect();
        im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((im[0] + 1.0).abs() < 1e-10 && (im[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn roots_of_expanded_unit_circle_pair() {
        // (z - e^{jπ/6})(z - e^{-jπ/4}), coefficients expanded symbolically.
        let r1 = C::from_polar(1.0, std::f64::consts::PI / 6.0);
        let r2 = C::from_polar(1.0, -std::f64::consts::PI / 4.0);
        let coeffs = [r1 * r2, -(r1 + r2), c(1.0, 0.0)];
        let mut roots = poly_roots(&coeffs).unwrap();
        roots.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((roots[0] - r2).norm() < 1e-10);
        assert!((roots[1] - r1).norm() < 1e-10);
    }

    #[test]
    fn degenerate_polynomials() {
        assert!(matches!(
            poly_roots(&[c(0.0, 0.0), c(0.0, 0.0)]),
            Err(DoaError::InvalidInput(_))
        ));
        assert!(poly_roots(&[c(3.0, 0.0)]).unwrap().is_empty());
        // trailing zeros trimmed: 2 + z with padded zero high coefficients
        let roots = poly_roots(&[c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].re + 2.0).abs() < 1e-12);
    }

    #[test]
    fn root_product_matches_coefficient_ratio() {
        let mut rng = seeded_rng(23);
        for _ in 0..50 {
            let deg = rng.random_range(1..12);
            let coeffs: Vec<C> = (0..=deg)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            if coeffs[0].norm() < 1e-3 || coeffs[deg].norm() < 1e-3 {
                continue; // keep the check well conditioned
            }
            let roots = poly_roots(&coeffs).unwrap();
            assert_eq!(roots.len(), deg);
            let prod = roots.iter().fold(c(1.0, 0.0), |acc, z| acc * z);
            let sign = if deg % 2 == 0 { 1.0 } else { -1.0 };
            let expect = coeffs[0] / coeffs[deg] * sign;
            assert!(
                (prod - expect).norm() <= 1e-6 * expect.norm().max(1.0),
                "degree {deg}: product {prod} vs {expect}"
            );
        }
    }

    #[test]
    fn root_evaluation_residual_is_small() {
        let mut rng = seeded_rng(31);
        let coeffs: Vec<C> = (0..=10)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let maxc = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for z in poly_roots(&coeffs).unwrap() {
            let mut val = c(0.0, 0.0);
            let mut zp = c(1.0, 0.0);
            for co in &coeffs {
                val += co * zp;
                zp *= z;
            }
            assert!(val.norm() <= 1e-6 * maxc, "|P(root)| = {:.3e}", val.norm());
        }
    }

    #[test]
    fn solve_loaded_basic_cases() {
        let b = CMat::from_column_slice(3, 1, &[c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 1.0)]);
        let x = solve_loaded(&CMat::identity(3, 3), 0.0, &b).unwrap();
        assert!((&x - &b).norm() < 1e-12);

        let x = solve_loaded(&CMat::zeros(3, 3), 2.0, &b).unwrap();
        assert!((&x - b.scale(0.5)).norm() < 1e-12);

        let r = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0, 0.0), c(3.0, 0.0)]));
        let b2 = CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(1.0, 0.0)]);
        let x = solve_loaded(&r, 1.0, &b2).unwrap();
        assert!((x[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((x[(1, 0)].re - 0.25).abs() < 1e-12);
    }

    #[test]
    fn solve_loaded_rejects_indefinite() {
        let r = CMat::from_diagonal(&CVec::from_vec(vec![c(-1.0, 0.0), c(1.0, 0.0)]));
        let b = CMat::identity(2, 2);
        assert!(matches!(
            solve_loaded(&r, 0.0, &b),
            Err(DoaError::SingularMatrix(_))
        ));
        // loading rescues it
        assert!(solve_loaded(&r, 2.0, &b).is_ok());
    }

    #[test]
    fn solve_loaded_residual_and_convergence_in_load() {
        let mut rng = seeded_rng(5);
        let r = {
            let g = random_hermitian(&mut rng, 5);
            &g * &g + CMat::identity(5, 5) // well conditioned PD
        };
        let b = CMat::from_fn(5, 2, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let x0 = solve_loaded(&r, 0.0, &b).unwrap();
        let resid = (&r * &x0 - &b).norm();
        assert!(resid < 1e-8 * b.norm());

        let mut dists = Vec::new();
        for eps in [1e-2, 1e-4, 1e-6] {
            let xe = solve_loaded(&r, eps, &b).unwrap();
            dists.push((xe - &x0).norm());
        }
        assert!(dists[0] >= dists[1] && dists[1] >= dists[2], "{dists:?}");
    }
}
