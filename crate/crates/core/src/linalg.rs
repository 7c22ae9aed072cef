//! Dense complex linear algebra for the small matrices used by the crate
//! (4×4 density matrices, 16×16 Choi matrices).

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Maximum |M − M†| accepted by operations that require Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Most negative eigenvalue accepted as numerical noise by [`matrix_sqrt_psd`].
pub const PSD_TOL: f64 = 1e-8;

/// Dense complex matrix with dimensions fixed at construction.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Panics if `entries.len() != rows * cols`.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[C64]) -> Self {
        Self(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |r, c| if r == c { diag[r] } else { C64::new(0.0, 0.0) },
        )
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| {
            C64::new(if r == c { diag[r] } else { 0.0 }, 0.0)
        })
    }

    /// Outer product |a><b|.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    pub fn from_inner(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn as_inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Element access; panics when out of bounds.
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.0[(row, col)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Element-wise (Schur) product.
    pub fn hadamard(&self, other: &Self) -> Self {
        Self(self.0.component_mul(&other.0))
    }

    /// max |M − M†|; infinite for non-square input.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Largest element-wise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims(), "dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let (r, c) = self.dims();
        (0..r)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// V·diag(f(λ))·V†
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = self.vectors.as_inner();
        let n = self.values.len();
        let mut scaled = v.clone();
        for (c, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            for r in 0..n {
                scaled[(r, c)] *= s;
            }
        }
        ComplexMatrix(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|x| x)
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::domain(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let err = m.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(Error::domain(format!(
            "matrix is not Hermitian (max |M - M†| = {err:.3e})"
        )));
    }
    Ok(())
}

/// Full eigen-decomposition of a Hermitian matrix.
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigen> {
    check_hermitian(m)?;
    let eig = m.hermitian_part().into_inner().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = m.rows();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigvals_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    eigh(m).map(|e| e.values)
}

/// Principal square root of a Hermitian positive-semidefinite matrix.
///
/// Eigenvalues in `[-PSD_TOL, 0)` are treated as zero.
pub fn matrix_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eigh(m)?;
    if let Some(&min) = eig.values.first() {
        if min < -PSD_TOL {
            return Err(Error::domain(format!(
                "matrix is not positive semidefinite (eigenvalue {min:.3e})"
            )));
        }
    }
    Ok(eig.map_values(|x| x.max(0.0).sqrt()))
}

/// Tensor factor removed by [`partial_trace`] on a 16×16 (input ⊗ output)
/// operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    /// Second factor (channel output in the Choi convention).
    Output,
    /// First factor.
    Input,
}

/// Partial trace of a 16×16 operator on C⁴ ⊗ C⁴.
pub fn partial_trace(m: &ComplexMatrix, subsystem: Subsystem) -> Result<ComplexMatrix> {
    const D: usize = 4;
    if m.dims() != (D * D, D * D) {
        return Err(Error::domain(format!(
            "partial trace expects a 16x16 matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let out = ComplexMatrix::from_fn(D, D, |a, b| {
        (0..D)
            .map(|t| match subsystem {
                Subsystem::Output => m.get(a * D + t, b * D + t),
                Subsystem::Input => m.get(t * D + a, t * D + b),
            })
            .sum()
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn phi_plus_projector() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [c(s), c(0.0), c(0.0), c(s)];
        ComplexMatrix::outer(&v, &v)
    }

    #[test]
    fn eigenvalues_of_simple_matrices() {
        let ev = eigvals_hermitian(&ComplexMatrix::identity(4)).unwrap();
        for x in ev {
            assert!((x - 1.0).abs() < 1e-14);
        }
        let ev =
            eigvals_hermitian(&ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5])).unwrap();
        let want = [0.0, 0.0, 0.5, 0.5];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let ev = eigvals_hermitian(&phi_plus_projector()).unwrap();
        let want = [0.0, 0.0, 0.0, 1.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-14, "{ev:?}");
        }
    }

    #[test]
    fn eigen_reconstruction() {
        let m = ComplexMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0),
                C64::new(0.3, -0.7),
                C64::new(0.0, 1.1),
                C64::new(0.3, 0.7),
                c(-1.0),
                C64::new(0.25, 0.0),
                C64::new(0.0, -1.1),
                C64::new(0.25, 0.0),
                c(0.5),
            ],
        );
        let e = eigh(&m).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(e.reconstruct().max_abs_diff(&m) < 1e-9);
    }

    #[test]
    fn rejects_non_square_and_non_hermitian() {
        assert!(matches!(
            eigvals_hermitian(&ComplexMatrix::zeros(2, 3)),
            Err(Error::Domain(_))
        ));
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(matches!(eigvals_hermitian(&m), Err(Error::Domain(_))));
    }

    #[test]
    fn sqrt_examples() {
        let id = ComplexMatrix::identity(4);
        assert!(matrix_sqrt_psd(&id).unwrap().max_abs_diff(&id) < 1e-14);

        let d = ComplexMatrix::from_real_diagonal(&[4.0, 1.0, 0.0, 9.0]);
        let want = ComplexMatrix::from_real_diagonal(&[2.0, 1.0, 0.0, 3.0]);
        assert!(matrix_sqrt_psd(&d).unwrap().max_abs_diff(&want) < 1e-12);

        // √(cP) = √c·P for a projector P
        let p = phi_plus_projector();
        let r = matrix_sqrt_psd(&p.scale(0.5)).unwrap();
        assert!(r.max_abs_diff(&p.scale(0.5f64.sqrt())) < 1e-12);
        assert!((&r * &r).max_abs_diff(&p.scale(0.5)) < 1e-9);
    }

    #[test]
    fn sqrt_rejects_negative_eigenvalue() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, -1e-3]);
        assert!(matches!(matrix_sqrt_psd(&m), Err(Error::Domain(_))));
        // tiny negative noise is clamped
        let m = ComplexMatrix::from_real_diagonal(&[1.0, -1e-11]);
        let r = matrix_sqrt_psd(&m).unwrap();
        assert_eq!(r.get(1, 1), c(0.0));
    }

    #[test]
    fn partial_trace_examples() {
        let id16 = ComplexMatrix::identity(16);
        let t = partial_trace(&id16, Subsystem::Output).unwrap();
        assert!(t.max_abs_diff(&ComplexMatrix::identity(4).scale(4.0)) < 1e-15);

        // Choi matrix of the identity channel: Σ |aa><bb|
        let choi = ComplexMatrix::from_fn(16, 16, |r, c| {
            let (a, i) = (r / 4, r % 4);
            let (b, j) = (c / 4, c % 4);
            C64::new(if a == i && b == j { 1.0 } else { 0.0 }, 0.0)
        });
        let t = partial_trace(&choi, Subsystem::Output).unwrap();
        assert!(t.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        let t = partial_trace(&choi, Subsystem::Input).unwrap();
        assert!(t.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);

        assert!(partial_trace(&ComplexMatrix::identity(4), Subsystem::Output).is_err());
    }

    #[test]
    fn kron_dims() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::zeros(3, 2);
        assert_eq!(a.kron(&b).dims(), (6, 4));
    }
}
