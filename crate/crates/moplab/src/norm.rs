//! Schatten (quasi-)norms and von Neumann entropy.
//!
//! `||A||_q = (sum_i sigma_i(A)^q)^(1/q)` over singular values, with
//! `q = inf` meaning the largest singular value. Orders in `[1/2, 1)` are
//! quasi-norms: well defined, but the triangle inequality fails for them,
//! and callers opting into that regime do so explicitly.

use std::fmt;
use std::str::FromStr;

use crate::error::{MoplabError, Result};
use crate::mat::{hermitian_eigenvalues, singular_values, ComplexMatrix, HERMITIAN_DISPATCH_TOL};

/// A Schatten norm order: a real `q >= 1/2`, or infinity (operator norm).
///
/// The wrapped value is kept private so every constructed order is valid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchattenOrder(f64);

impl SchattenOrder {
    pub const ONE: SchattenOrder = SchattenOrder(1.0);
    pub const TWO: SchattenOrder = SchattenOrder(2.0);
    pub const INFINITY: SchattenOrder = SchattenOrder(f64::INFINITY);

    /// Accepts any finite `q >= 1/2` or `f64::INFINITY`.
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q < 0.5 {
            return Err(MoplabError::InvalidOrder { q });
        }
        Ok(SchattenOrder(q))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }

    /// True in the quasi-norm regime `1/2 <= q < 1`.
    pub fn is_quasi(&self) -> bool {
        self.0 < 1.0
    }

    /// The order `2q`, used by square-root-factorized bounds.
    pub fn doubled(&self) -> SchattenOrder {
        SchattenOrder(self.0 * 2.0)
    }
}

impl fmt::Display for SchattenOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for SchattenOrder {
    type Err = MoplabError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "INF" | "infinity" | "oo" => Ok(SchattenOrder::INFINITY),
            other => {
                let q: f64 = other
                    .parse()
                    .map_err(|_| MoplabError::Format(format!("bad norm order {other:?}")))?;
                SchattenOrder::new(q)
            }
        }
    }
}

/// `(sum_i s_i^q)^(1/q)` for a nonnegative spectrum, `max` at `q = inf`.
fn power_sum_norm(spectrum: &[f64], q: &SchattenOrder) -> f64 {
    if q.is_infinite() {
        return spectrum.iter().copied().fold(0.0, f64::max);
    }
    let qv = q.value();
    let sum: f64 = spectrum.iter().map(|&s| s.powf(qv)).sum();
    sum.powf(1.0 / qv)
}

/// Schatten q-(quasi-)norm of an arbitrary complex matrix.
///
/// Hermitian inputs are detected (defect below `1e-12 * (1 + max_abs)`) and
/// routed through the eigenvalue path, which is both faster and exact for
/// the 2x2 case; everything else goes through singular values.
pub fn schatten_norm(a: &ComplexMatrix, q: &SchattenOrder) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    let spectrum: Vec<f64> = if a.is_hermitian_within(HERMITIAN_DISPATCH_TOL) {
        hermitian_eigenvalues(a)?.iter().map(|x| x.abs()).collect()
    } else {
        singular_values(a)
    };
    Ok(power_sum_norm(&spectrum, q))
}

/// `sum_i s_i^q` — the q-th power of the Schatten norm, computed without the
/// outer root (cleaner near `q -> 1`).
pub fn schatten_power_sum(a: &ComplexMatrix, q: &SchattenOrder) -> Result<f64> {
    if q.is_infinite() {
        return schatten_norm(a, q);
    }
    let spectrum: Vec<f64> = if a.is_hermitian_within(HERMITIAN_DISPATCH_TOL) {
        hermitian_eigenvalues(a)?.iter().map(|x| x.abs()).collect()
    } else {
        singular_values(a)
    };
    Ok(spectrum.iter().map(|&s| s.powf(q.value())).sum())
}

/// Relative eigenvalue floor below which a nominally-PSD spectrum is
/// rejected by [`entropy`].
const ENTROPY_NEG_TOL: f64 = 1e-10;

/// Von Neumann entropy `-sum_i lambda_i ln lambda_i` of a Hermitian PSD
/// matrix, in nats. Eigenvalues in `[-tol*scale, 0]` are clamped to zero
/// (with `0 ln 0 = 0`); more negative spectra are an error.
pub fn entropy(a: &ComplexMatrix) -> Result<f64> {
    let scale = 1.0 + a.max_abs();
    let defect = a.hermitian_defect();
    if defect > crate::mat::HERMITIAN_INPUT_TOL * scale {
        return Err(MoplabError::NotHermitian {
            defect,
            tol: crate::mat::HERMITIAN_INPUT_TOL * scale,
        });
    }
    let vals = hermitian_eigenvalues(&a.hermitize())?;
    let trace_scale = vals.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
    let mut s = 0.0;
    for &lam in &vals {
        if lam < -ENTROPY_NEG_TOL * trace_scale {
            return Err(MoplabError::NotPsd { min_eig: lam });
        }
        if lam > 0.0 {
            s -= lam * lam.ln();
        }
    }
    Ok(s)
}
