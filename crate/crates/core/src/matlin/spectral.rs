//! Eigenvalue-based helpers: spectral radius and norm, symmetric square
//! roots, PBH stabilizability/detectability tests, and the perturbation bound
//! on quadratic forms `XᵀPX`.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::Mat;
use crate::error::{Error, Result};

/// Rank tolerance of the PBH tests, relative to the largest singular value.
pub const PBH_RANK_TOL: f64 = 1e-8;

fn require_square(m: &Mat) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        })
    }
}

/// Eigenvalues of a general real square matrix (Hessenberg + real Schur).
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex<f64>>> {
    require_square(m)?;
    if m.rows() == 0 {
        return Ok(Vec::new());
    }
    Ok(m.to_nalgebra()
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect())
}

pub fn spectral_radius(m: &Mat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().fold(0.0, |r, l| r.max(l.norm())))
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    m.to_nalgebra()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |a: f64, &s| a.max(s))
}

/// Eigen-decomposition of a symmetric matrix; the input is symmetrized first.
fn sym_eigen(m: &Mat) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    require_square(m)?;
    Ok(SymmetricEigen::new(m.symmetrized().to_nalgebra()))
}

pub fn min_sym_eigenvalue(m: &Mat) -> Result<f64> {
    if m.rows() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(sym_eigen(m)?
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v)))
}

pub fn is_positive_definite(m: &Mat) -> bool {
    m.is_symmetric(1e-10) && matches!(min_sym_eigenvalue(m), Ok(v) if v > 0.0)
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
fn sym_function(m: &Mat, f: impl Fn(f64) -> f64) -> Result<Mat> {
    let eig = sym_eigen(m)?;
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    Ok(Mat::from_nalgebra(&(v * d * v.transpose())))
}

/// Symmetric PSD square root. Eigenvalues slightly below zero from rounding
/// are clamped; clearly negative ones are an error.
pub fn sym_sqrt(m: &Mat) -> Result<Mat> {
    let lmin = min_sym_eigenvalue(m)?;
    if lmin < -1e-10 * m.max_abs().max(1.0) {
        return Err(Error::NotPositiveDefinite);
    }
    sym_function(m, |l| l.max(0.0).sqrt())
}

/// `M^{-1/2}` for symmetric positive definite `M`.
pub fn sym_inv_sqrt(m: &Mat) -> Result<Mat> {
    if !is_positive_definite(m) {
        return Err(Error::NotPositiveDefinite);
    }
    sym_function(m, |l| 1.0 / l.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabDetect {
    pub stabilizable: bool,
    pub detectable: bool,
}

/// PBH test: every eigenvalue of `a` on or outside the unit circle must
/// leave `[a - λI, b]` with full row rank.
pub fn pbh_stabilizable(a: &Mat, b: &Mat) -> Result<bool> {
    require_square(a)?;
    let n = a.rows();
    if b.rows() != n {
        return Err(Error::DimensionMismatch("PBH: b rows differ from a".into()));
    }
    for lambda in eigenvalues(a)? {
        if lambda.norm() < 1.0 - PBH_RANK_TOL {
            continue;
        }
        let cols = n + b.cols();
        let mut pencil = DMatrix::<Complex<f64>>::zeros(n, cols);
        for i in 0..n {
            for j in 0..n {
                pencil[(i, j)] = Complex::new(a[(i, j)], 0.0);
            }
            pencil[(i, i)] -= lambda;
            for j in 0..b.cols() {
                pencil[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        let sv = pencil.svd(false, false).singular_values;
        let smax = sv.iter().fold(0.0_f64, |m, &s| m.max(s));
        let smin = sv.iter().fold(f64::INFINITY, |m, &s| m.min(s));
        if sv.len() < n || smin <= PBH_RANK_TOL * smax.max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Stabilizability of `(a, b)` and detectability of `(a, q^{1/2})`.
pub fn stab_detect_check(a: &Mat, b: &Mat, q: &Mat) -> Result<StabDetect> {
    let stabilizable = pbh_stabilizable(a, b)?;
    let q_half = sym_sqrt(q)?;
    let detectable = pbh_stabilizable(&a.transpose(), &q_half)?;
    Ok(StabDetect {
        stabilizable,
        detectable,
    })
}

/// Both sides of `‖XᵀPX − YᵀPY‖ ≤ ‖P‖‖X − Y‖(‖X‖ + ‖Y‖)` in the spectral norm.
pub fn lemma3_bound(x: &Mat, p: &Mat, y: &Mat) -> Result<(f64, f64)> {
    let n = x.rows();
    for m in [x, p, y] {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(
                "quadratic-form bound needs three n x n matrices".into(),
            ));
        }
    }
    let lhs = spectral_norm(&(&(&(&x.transpose() * p) * x) - &(&(&y.transpose() * p) * y)));
    let rhs = spectral_norm(p) * spectral_norm(&(x - y)) * (spectral_norm(x) + spectral_norm(y));
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Mat {
        Mat::from_rows(rows).unwrap()
    }

    #[test]
    fn radius_of_simple_matrices() {
        assert!((spectral_radius(&Mat::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        assert!(spectral_radius(&m(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap() < 1e-8);
        let rot = m(&[&[0.0, -2.0], &[2.0, 0.0]]);
        assert!((spectral_radius(&rot).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            spectral_radius(&Mat::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn deadbeat_closed_loop_is_nilpotent() {
        let c = m(&[&[0.0, 0.0, 0.0], &[1.0, 1.0, -1.0], &[1.0, 1.0, -1.0]]);
        assert!(spectral_radius(&c).unwrap() < 1e-8);
    }

    #[test]
    fn spectral_norm_matches_known_values() {
        assert!((spectral_norm(&m(&[&[3.0, 0.0], &[0.0, -4.0]])) - 4.0).abs() < 1e-12);
        assert!((spectral_norm(&m(&[&[1.0, 1.0]])) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pbh_flags() {
        let t =
            |a: f64, b: f64| stab_detect_check(&m(&[&[a]]), &m(&[&[b]]), &m(&[&[1.0]])).unwrap();
        assert!(!t(2.0, 0.0).stabilizable);
        assert!(t(2.0, 1.0).stabilizable);
        assert!(t(0.5, 0.0).stabilizable);
        let undetectable = stab_detect_check(&m(&[&[2.0]]), &m(&[&[1.0]]), &m(&[&[0.0]])).unwrap();
        assert!(undetectable.stabilizable && !undetectable.detectable);
    }

    #[test]
    fn pbh_marginal_integrator() {
        // Eigenvalue exactly on the unit circle.
        let a = m(&[&[1.0, 0.0], &[1.0, 0.5]]);
        assert!(pbh_stabilizable(&a, &m(&[&[1.0], &[0.0]])).unwrap());
        assert!(!pbh_stabilizable(&a, &m(&[&[0.0], &[1.0]])).unwrap());
    }

    #[test]
    fn sqrt_round_trip() {
        let a = m(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let s = sym_sqrt(&a).unwrap();
        assert!((&(&s * &s) - &a).max_abs() < 1e-12);
        let is = sym_inv_sqrt(&a).unwrap();
        assert!((&(&(&is * &a) * &is) - &Mat::identity(2)).max_abs() < 1e-12);
        assert_eq!(sym_sqrt(&m(&[&[-1.0]])), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn bound_trivial_cases() {
        let x = m(&[&[1.0, 2.0], &[0.5, -1.0]]);
        let p = m(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let (lhs, rhs) = lemma3_bound(&x, &p, &x).unwrap();
        assert_eq!(lhs, 0.0);
        assert!(lhs <= rhs);
        let (lhs, rhs) = lemma3_bound(&x, &Mat::zeros(2, 2), &Mat::identity(2)).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));
        assert!(lemma3_bound(&x, &p, &Mat::identity(3)).is_err());
    }
}
