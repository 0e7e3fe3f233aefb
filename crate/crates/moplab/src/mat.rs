//! Dense complex matrices and the small set of linear-algebra primitives the
//! rest of the crate is built on.
//!
//! The matrix type is deliberately plain: row-major storage, value semantics,
//! no lifetime games. Decompositions (Hermitian eigenproblems, singular
//! values, QR) are delegated to `nalgebra`; 1x1 and 2x2 Hermitian
//! eigenvalues use closed forms because the optimizers evaluate millions of
//! small spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{MoplabError, Result};

pub type Complex64 = Complex<f64>;

/// Relative tolerance for treating a matrix as Hermitian when dispatching
/// between eigenvalue- and singular-value-based code paths.
pub const HERMITIAN_DISPATCH_TOL: f64 = 1e-12;

/// Relative tolerance used for Hermiticity preconditions on PSD routines.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-10;

/// Relative tolerance below which a slightly negative eigenvalue of a
/// nominally PSD matrix is treated as rounding noise.
pub const PSD_TOL: f64 = 1e-10;

/// A dense matrix over `Complex<f64>`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a row-major entry list. Errors if the length is wrong or
    /// any entry is non-finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MoplabError::Dimension(format!(
                "{} entries supplied for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MoplabError::NonFinite);
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Convenience constructor from real entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::from_vec(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    /// Diagonal matrix from complex entries.
    pub fn diagonal(entries: &[Complex64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                entries[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max_ij |A_ij - conj(A_ji)|; zero iff exactly Hermitian.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian_within(&self, rel_tol: f64) -> bool {
        self.is_square() && self.hermitian_defect() <= rel_tol * (1.0 + self.max_abs())
    }

    /// (A + A*)/2 — the Hermitian part.
    pub fn hermitize(&self) -> Self {
        let adj = self.adjoint();
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + adj[(i, j)]) * 0.5
        })
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Copy of the `nr` x `nc` block whose top-left corner is (r0, c0).
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> ComplexMatrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, m: &ComplexMatrix) {
        assert!(r0 + m.rows <= self.rows && c0 + m.cols <= self.cols);
        for i in 0..m.rows {
            for j in 0..m.cols {
                self[(r0 + i, c0 + j)] = m[(i, j)];
            }
        }
    }

    /// In-place `self += s * other`.
    pub fn add_scaled(&mut self, s: Complex64, other: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub(crate) fn to_na(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl std::ops::Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Trace out the first tensor factor of an operator on C^d1 (x) C^d2:
/// the result is sum_i of the i-th d2 x d2 diagonal block.
pub fn partial_trace_first(m: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    if m.rows() != d1 * d2 || m.cols() != d1 * d2 {
        return Err(MoplabError::Dimension(format!(
            "partial trace of a {}x{} matrix with factors {}x{}",
            m.rows(),
            m.cols(),
            d1,
            d2
        )));
    }
    let mut out = ComplexMatrix::zeros(d2, d2);
    for i in 0..d1 {
        for r in 0..d2 {
            for c in 0..d2 {
                out[(r, c)] += m[(i * d2 + r, i * d2 + c)];
            }
        }
    }
    Ok(out)
}

/// Trace out the second tensor factor: entry (i, j) of the result is the
/// trace of block (i, j).
pub fn partial_trace_second(m: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    if m.rows() != d1 * d2 || m.cols() != d1 * d2 {
        return Err(MoplabError::Dimension(format!(
            "partial trace of a {}x{} matrix with factors {}x{}",
            m.rows(),
            m.cols(),
            d1,
            d2
        )));
    }
    Ok(ComplexMatrix::from_fn(d1, d1, |i, j| {
        (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
    }))
}

/// Eigenvalues of a Hermitian matrix, ascending. 1x1 and 2x2 use closed
/// forms; larger sizes go through `nalgebra`.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(MoplabError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    match a.rows() {
        0 => Ok(vec![]),
        1 => Ok(vec![a[(0, 0)].re]),
        2 => {
            let mean = 0.5 * (a[(0, 0)].re + a[(1, 1)].re);
            let half_gap = 0.5 * (a[(0, 0)].re - a[(1, 1)].re);
            let r = (half_gap * half_gap + a[(0, 1)].norm_sqr()).sqrt();
            Ok(vec![mean - r, mean + r])
        }
        _ => {
            let eig = nalgebra::SymmetricEigen::new(a.to_na());
            let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
            Ok(vals)
        }
    }
}

/// Full Hermitian eigendecomposition: eigenvalues ascending, eigenvectors as
/// the corresponding columns of the returned matrix.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !a.is_square() {
        return Err(MoplabError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok((vec![], ComplexMatrix::zeros(0, 0)));
    }
    let eig = nalgebra::SymmetricEigen::new(a.to_na());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, vecs))
}

/// Singular values, descending.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return vec![];
    }
    let sv = a.to_na().singular_values();
    let mut vals: Vec<f64> = sv.iter().copied().collect();
    vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
    vals
}

/// PSD check for a Hermitian matrix: returns `(is_psd, min_eig)` where the
/// verdict treats eigenvalues above `-tol * (1 + max_abs)` as nonnegative.
pub fn psd_project_check(a: &ComplexMatrix, tol: f64) -> Result<(bool, f64)> {
    let scale = 1.0 + a.max_abs();
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_INPUT_TOL * scale {
        return Err(MoplabError::NotHermitian {
            defect,
            tol: HERMITIAN_INPUT_TOL * scale,
        });
    }
    let vals = hermitian_eigenvalues(&a.hermitize())?;
    let min_eig = vals.first().copied().unwrap_or(0.0);
    Ok((min_eig >= -tol * scale, min_eig))
}

/// Convenience wrapper with the crate-wide PSD tolerance.
pub fn is_psd(a: &ComplexMatrix) -> bool {
    matches!(psd_project_check(a, PSD_TOL), Ok((true, _)))
}

/// Apply `f` to the eigenvalues of a Hermitian matrix: V f(D) V*.
fn hermitian_calculus(a: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (vals, vecs) = hermitian_eigen(&a.hermitize())?;
    let n = a.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let flam = f(lam);
        if flam == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vecs[(i, k)];
            for j in 0..n {
                out[(i, j)] += vi * vecs[(j, k)].conj() * flam;
            }
        }
    }
    Ok(out)
}

/// Hermitian PSD square root. Eigenvalues within `-PSD_TOL * scale` of zero
/// are clamped to zero; anything more negative is an error.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (ok, min_eig) = psd_project_check(a, PSD_TOL)?;
    if !ok {
        return Err(MoplabError::NotPsd { min_eig });
    }
    hermitian_calculus(a, |x| if x > 0.0 { x.sqrt() } else { 0.0 })
}

/// Hermitian PSD fractional power `A^t` with the same clamping as
/// [`psd_sqrt`].
pub fn psd_power(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let (ok, min_eig) = psd_project_check(a, PSD_TOL)?;
    if !ok {
        return Err(MoplabError::NotPsd { min_eig });
    }
    hermitian_calculus(a, |x| if x > 0.0 { x.powf(t) } else { 0.0 })
}

/// Inverse square root of a strictly positive definite matrix.
pub fn pd_inv_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (_, min_eig) = psd_project_check(a, PSD_TOL)?;
    let scale = 1.0 + a.max_abs();
    if min_eig <= PSD_TOL * scale {
        return Err(MoplabError::Singular(format!(
            "inverse square root requires a positive definite matrix (min eigenvalue {min_eig:.3e})"
        )));
    }
    hermitian_calculus(a, |x| 1.0 / x.sqrt())
}

/// Solve `A x = b` for square invertible `A` (used only on small well
/// conditioned systems).
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lu = a.to_na().lu();
    let mut out = ComplexMatrix::zeros(a.rows(), b.cols());
    for j in 0..b.cols() {
        let col = DVector::from_fn(b.rows(), |i, _| b[(i, j)]);
        let x = lu
            .solve(&col)
            .ok_or_else(|| MoplabError::Singular("linear solve failed".into()))?;
        for i in 0..a.rows() {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}
