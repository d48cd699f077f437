//! Thin wrappers over `faer` for the dense complex kernels.
//!
//! Dense kernels run sequentially so results are bit-reproducible;
//! parallelism lives one level up (across seeds and inputs).

use std::sync::Once;

use faer::{Mat, Par, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

static SEQUENTIAL: Once = Once::new();

fn sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

pub type CMat = Mat<Complex64>;

/// Column-major `rows × cols` matrix of standard complex Gaussians.
pub fn ginibre(rows: usize, cols: usize, rng: &mut StreamRng) -> CMat {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| rng::complex_gaussian(rng)).collect();
    Mat::from_fn(rows, cols, |i, j| data[j * rows + i])
}

/// Q factor of a thin QR with the phases of `diag(R)` moved into `Q`, so the
/// result is Haar distributed when the input is Ginibre.
pub fn phase_fixed_q(g: &CMat) -> CMat {
    sequential();
    let qr = g.qr();
    let mut q = qr.compute_thin_Q();
    let r = qr.thin_R();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let n = d.norm();
        let phase = if n == 0.0 { Complex64::new(1.0, 0.0) } else { d / n };
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    sequential();
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::NoConvergence {
            what: format!("Hermitian eigensolver: {e:?}"),
            iterations: 0,
        })
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    sequential();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NoConvergence {
            what: format!("Hermitian eigensolver: {e:?}"),
            iterations: 0,
        })?;
    let s = evd.S().column_vector();
    let values = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// `max |(A − B)ᵢⱼ|` over all entries.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMat) -> Result<f64> {
    let e = hermitian_eigenvalues(m)?;
    Ok(e.iter().fold(0.0f64, |a, x| a.max(x.abs())))
}

/// `‖UU* − I‖₂` (or `‖U*U − I‖₂` for tall `U`).
pub fn isometry_defect(u: &CMat) -> Result<f64> {
    sequential();
    let gram = if u.nrows() >= u.ncols() {
        u.adjoint() * u
    } else {
        u * u.adjoint()
    };
    let n = gram.nrows();
    let diff = Mat::from_fn(n, n, |i, j| {
        gram[(i, j)] - if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
    });
    hermitian_norm(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_fixed_q_is_isometry_with_positive_r() {
        let mut r = rng::stream(3, 0);
        let g = ginibre(20, 7, &mut r);
        let q = phase_fixed_q(&g);
        assert!(isometry_defect(&q).unwrap() < 1e-13);
        // Q*G is upper triangular with positive diagonal
        let r = q.adjoint() * &g;
        for j in 0..7 {
            assert!(r[(j, j)].re > 0.0 && r[(j, j)].im.abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new([2.0, -1.0, 0.5][i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert_eq!(hermitian_eigenvalues(&m).unwrap(), vec![-1.0, 0.5, 2.0]);
        let (v, u) = hermitian_eigen(&m).unwrap();
        assert_eq!(v[0], -1.0);
        assert!((u[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }
}
