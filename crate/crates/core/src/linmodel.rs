//! Least-squares fits restricted to a support.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::support::SupportSet;

/// A support is treated as rank deficient when its smallest singular value
/// falls below this fraction of the largest.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub support: SupportSet,
    pub coefficients: Vec<f64>,
    pub rss: f64,
}

fn check_support(x: &DMatrix<f64>, s: &SupportSet) -> Result<()> {
    if s.bound() > x.ncols() {
        return Err(Error::InvalidArgument(format!(
            "support {s} exceeds {} columns",
            x.ncols()
        )));
    }
    if s.len() >= x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "support of size {} needs more than {} rows",
            s.len(),
            x.nrows()
        )));
    }
    Ok(())
}

/// Householder QR of `X(s)` plus the rank check.
fn factor(x: &DMatrix<f64>, s: &SupportSet) -> Result<nalgebra::QR<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let sub = x.select_columns(s.indices());
    let qr = sub.qr();
    let sv = qr.r().singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(min >= RANK_TOLERANCE * max) || max == 0.0 {
        return Err(Error::RankDeficient { support: s.clone() });
    }
    Ok(qr)
}

fn solve(
    qr: &nalgebra::QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    y: &DVector<f64>,
    k: usize,
) -> DVector<f64> {
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let head = qty.rows(0, k).into_owned();
    qr.r()
        .solve_upper_triangular(&head)
        .expect("R is nonsingular after the rank check")
}

/// Ordinary least squares of `y` on the columns in `s`, without intercept.
pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>, s: &SupportSet) -> Result<FittedModel> {
    if y.len() != x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "response has {} rows, design has {}",
            y.len(),
            x.nrows()
        )));
    }
    check_support(x, s)?;
    if s.is_empty() {
        return Ok(FittedModel {
            support: s.clone(),
            coefficients: Vec::new(),
            rss: y.norm_squared(),
        });
    }
    let qr = factor(x, s)?;
    let beta = solve(&qr, y, s.len());
    let mut resid = y.clone();
    for (b, j) in beta.iter().zip(s.iter()) {
        resid.axpy(-b, &x.column(j), 1.0);
    }
    Ok(FittedModel {
        support: s.clone(),
        coefficients: beta.iter().copied().collect(),
        rss: resid.norm_squared(),
    })
}

/// `‖μ − H(s) μ‖²`: the part of the mean vector that `X(s)` cannot represent.
pub fn projection_deficiency(x: &DMatrix<f64>, mu: &DVector<f64>, s: &SupportSet) -> Result<f64> {
    Ok(ols_fit(x, mu, s)?.rss)
}

/// Smallest and largest eigenvalues of `X(s)ᵀ X(s) / n`.
pub fn eigen_bounds(x: &DMatrix<f64>, s: &SupportSet) -> Result<(f64, f64)> {
    if s.is_empty() {
        return Err(Error::InvalidArgument("eigen_bounds needs a nonempty support".into()));
    }
    if s.bound() > x.ncols() {
        return Err(Error::InvalidArgument(format!("support {s} exceeds design")));
    }
    let sub = x.select_columns(s.indices());
    let gram = sub.tr_mul(&sub) / x.nrows() as f64;
    let eig = SymmetricEigen::new(gram).eigenvalues;
    Ok((eig.min(), eig.max()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    /// Columns of norm sqrt(n) that are mutually orthogonal (Hadamard-like signs).
    fn orthogonal_design(n: usize, p: usize) -> DMatrix<f64> {
        let q = random_matrix(n, p, 99).qr().q();
        q * (n as f64).sqrt()
    }

    #[test]
    fn empty_support_returns_total_sum_of_squares() {
        let x = random_matrix(10, 3, 1);
        let y = DVector::from_fn(10, |i, _| i as f64);
        let fit = ols_fit(&x, &y, &SupportSet::empty()).unwrap();
        assert_eq!(fit.rss, y.norm_squared());
        assert!(fit.coefficients.is_empty());
    }

    #[test]
    fn exact_fit_has_zero_rss() {
        let x = random_matrix(30, 6, 2);
        let y = 2.0 * x.column(1) - 0.5 * x.column(4);
        let s = SupportSet::from_indices([1, 4]);
        let fit = ols_fit(&x, &y, &s).unwrap();
        assert!(fit.rss <= 1e-8 * y.norm_squared());
        assert_relative_eq!(fit.coefficients[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(fit.coefficients[1], -0.5, epsilon = 1e-10);
    }

    #[test]
    fn matches_normal_equations() {
        let x = random_matrix(50, 5, 3);
        let y = DVector::from_fn(50, |i, _| ((i * 7 % 11) as f64).sin());
        let s = SupportSet::from_indices(0..5);
        let fit = ols_fit(&x, &y, &s).unwrap();
        // Independent route: Cholesky on X'X.
        let xtx = x.tr_mul(&x);
        let xty = x.tr_mul(&y);
        let beta = xtx.cholesky().unwrap().solve(&xty);
        for (a, b) in fit.coefficients.iter().zip(beta.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-8);
        }
        let resid = &y - &x * &beta;
        assert_relative_eq!(fit.rss, resid.norm_squared(), max_relative = 1e-8);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let mut x = random_matrix(20, 4, 4);
        let c = x.column(0).into_owned();
        x.set_column(2, &c);
        let y = DVector::from_element(20, 1.0);
        let s = SupportSet::from_indices([0, 2]);
        match ols_fit(&x, &y, &s) {
            Err(Error::RankDeficient { support }) => assert_eq!(support, s),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        let (lo, _) = eigen_bounds(&x, &s).unwrap();
        assert!(lo.abs() < 1e-10);
    }

    #[test]
    fn too_large_support_is_rejected() {
        let x = random_matrix(3, 5, 5);
        let y = DVector::from_element(3, 1.0);
        assert!(ols_fit(&x, &y, &SupportSet::from_indices(0..3)).is_err());
    }

    #[test]
    fn projection_deficiency_cases() {
        let n = 40;
        let x = orthogonal_design(n, 6);
        let beta = [1.5, -2.0, 0.7];
        let truth = [0usize, 2, 5];
        let mut mu = DVector::zeros(n);
        for (b, &j) in beta.iter().zip(truth.iter()) {
            mu.axpy(*b, &x.column(j), 1.0);
        }
        let superset = SupportSet::from_indices([0, 1, 2, 5]);
        assert!(projection_deficiency(&x, &mu, &superset).unwrap() <= 1e-8 * mu.norm_squared());
        assert_eq!(
            projection_deficiency(&x, &mu, &SupportSet::empty()).unwrap(),
            mu.norm_squared()
        );
        // Orthogonal columns: deficiency is the energy of the missed coefficients.
        let partial = SupportSet::from_indices([0, 3]);
        let expected = n as f64 * (2.0f64.powi(2) + 0.7f64.powi(2));
        assert_relative_eq!(
            projection_deficiency(&x, &mu, &partial).unwrap(),
            expected,
            max_relative = 1e-10
        );
    }

    #[test]
    fn eigen_bounds_orthogonal_is_unit() {
        let x = orthogonal_design(25, 4);
        let (lo, hi) = eigen_bounds(&x, &SupportSet::from_indices(0..4)).unwrap();
        assert_relative_eq!(lo, 1.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 1.0, epsilon = 1e-12);
    }

    /// Eigenvalues of a symmetric 3x3 matrix from the trigonometric solution
    /// of its characteristic cubic.
    fn cubic_eigenvalues(a: &DMatrix<f64>) -> [f64; 3] {
        let q = a.trace() / 3.0;
        let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = (a - DMatrix::identity(3, 3) * q) / p;
        let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [e3, 3.0 * q - e1 - e3, e1]
    }

    #[test]
    fn eigen_bounds_match_cubic_roots() {
        let x = random_matrix(15, 5, 6);
        let s = SupportSet::from_indices([0, 3, 4]);
        let sub = x.select_columns(s.indices());
        let gram = sub.tr_mul(&sub) / 15.0;
        let roots = cubic_eigenvalues(&gram);
        let (lo, hi) = eigen_bounds(&x, &s).unwrap();
        assert_relative_eq!(lo, roots[0], epsilon = 1e-8);
        assert_relative_eq!(hi, roots[2], epsilon = 1e-8);
    }
}
