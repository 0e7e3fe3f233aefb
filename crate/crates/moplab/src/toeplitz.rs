//! Finite positive decompositions of block-Toeplitz states.
//!
//! A PSD matrix `[[B, C], [C*, B]]` with equal diagonal blocks can, in the
//! supported regime, be written as a finite sum of manifestly separable
//! terms
//!
//! ```text
//! [[1, e^{i theta_k}], [e^{-i theta_k}, 1]] (x) P_k,        P_k >= 0,
//! ```
//!
//! each of which is PSD (the phase factor matrix is a rank-one projector
//! times two). The construction whitens the off-diagonal block,
//! `T = B^{-1/2} C B^{-1/2}`, diagonalizes it when it is normal — every
//! eigenvalue then lies in the closed unit disk — and splits each
//! eigenvalue `r e^{i alpha}` into the convex combination
//! `(e^{i(alpha+phi)} + e^{i(alpha-phi)})/2` with `cos phi = r`. Pulling the
//! spectral projectors back through `B^{1/2}` yields the `P_k`.
//!
//! Non-normal `T` is reported as unsupported rather than approximated: a
//! decomposition is a positivity certificate, and we never emit one we
//! cannot verify.

use crate::error::{MoplabError, Result};
use crate::mat::{
    hermitian_eigen, hermitian_eigenvalues, psd_project_check, psd_sqrt, Complex64,
    ComplexMatrix, PSD_TOL,
};
use crate::report::CheckReport;

/// Relative Frobenius tolerance for the normality test on the whitened
/// off-diagonal block.
pub const NORMALITY_TOL: f64 = 1e-9;

/// Relative reconstruction tolerance the verifier enforces.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Eigenvalues of `B` below this fraction of the largest one make `B`
/// effectively singular for whitening purposes.
const SINGULAR_TOL: f64 = 1e-10;

/// Angles closer than this are merged into one term.
const THETA_MERGE_TOL: f64 = 1e-9;

/// A list of (angle, PSD weight) pairs representing a block-Toeplitz state
/// as a sum of separable terms.
#[derive(Clone, Debug)]
pub struct ToeplitzDecomposition {
    terms: Vec<(f64, ComplexMatrix)>,
}

impl ToeplitzDecomposition {
    /// Build from explicit terms (used when loading from a file). Validates
    /// shapes and finiteness of the angles, not positivity — that is the
    /// verifier's job.
    pub fn from_terms(terms: Vec<(f64, ComplexMatrix)>) -> Result<Self> {
        if let Some((_, first)) = terms.first() {
            if !first.is_square() {
                return Err(MoplabError::NotSquare {
                    rows: first.rows(),
                    cols: first.cols(),
                });
            }
            for (theta, p) in &terms {
                if !theta.is_finite() {
                    return Err(MoplabError::NonFinite);
                }
                if p.rows() != first.rows() || p.cols() != first.cols() {
                    return Err(MoplabError::Dimension(format!(
                        "terms mix {}x{} and {}x{} weights",
                        first.rows(),
                        first.cols(),
                        p.rows(),
                        p.cols()
                    )));
                }
            }
        }
        Ok(ToeplitzDecomposition { terms })
    }

    pub fn terms(&self) -> &[(f64, ComplexMatrix)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Side length of the weight matrices (zero for an empty list).
    pub fn dim(&self) -> usize {
        self.terms.first().map_or(0, |(_, p)| p.rows())
    }

    /// `sum_k P_k` — must reproduce the diagonal block `B`.
    pub fn weight_sum(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (_, p) in &self.terms {
            acc.add_scaled(Complex64::new(1.0, 0.0), p);
        }
        acc
    }

    /// `sum_k e^{i theta_k} P_k` — must reproduce the off-diagonal block `C`.
    pub fn phased_sum(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for (theta, p) in &self.terms {
            acc.add_scaled(Complex64::from_polar(1.0, *theta), p);
        }
        acc
    }

    /// The k-th separable term assembled as a 2d x 2d matrix.
    pub fn term_state(&self, k: usize) -> ComplexMatrix {
        let (theta, p) = &self.terms[k];
        let phase = Complex64::from_polar(1.0, *theta);
        let flag = ComplexMatrix::from_vec(
            2,
            2,
            vec![
                Complex64::new(1.0, 0.0),
                phase,
                phase.conj(),
                Complex64::new(1.0, 0.0),
            ],
        )
        .expect("finite phase");
        crate::mat::kron(&flag, p)
    }
}

/// Decompose the PSD block-Toeplitz matrix `[[B, C], [C*, B]]` into
/// separable terms. See the module docs for the construction and the
/// supported regime.
pub fn decompose_block_toeplitz(
    b: &ComplexMatrix,
    c: &ComplexMatrix,
) -> Result<ToeplitzDecomposition> {
    let d = b.rows();
    if !b.is_square() || !c.is_square() || c.rows() != d {
        return Err(MoplabError::Dimension(format!(
            "blocks must be square and equal-sized, got {}x{} and {}x{}",
            b.rows(),
            b.cols(),
            c.rows(),
            c.cols()
        )));
    }
    if d == 0 {
        return Ok(ToeplitzDecomposition { terms: vec![] });
    }

    // The assembled matrix must be PSD — that is what grants |lambda| <= 1
    // for the whitened block below.
    let assembled = assemble(b, c);
    let (ok, min_eig) = psd_project_check(&assembled, PSD_TOL)?;
    if !ok {
        return Err(MoplabError::NotPsd { min_eig });
    }

    let bh = b.hermitize();
    let spectrum = hermitian_eigenvalues(&bh)?;
    let largest = spectrum.last().copied().unwrap_or(0.0);
    let smallest = spectrum.first().copied().unwrap_or(0.0);
    if smallest <= SINGULAR_TOL * largest.max(1e-300) {
        return Err(MoplabError::Singular(format!(
            "diagonal block has eigenvalue {smallest:.3e} (largest {largest:.3e}); \
             regularize or reject"
        )));
    }

    let b_sqrt = psd_sqrt(&bh)?;
    let b_inv_sqrt = crate::mat::pd_inv_sqrt(&bh)?;
    let t = &(&b_inv_sqrt * c) * &b_inv_sqrt;

    // Supported regime: T normal. The commutator is the whole test.
    let commutator = &(&t * &t.adjoint()) - &(&t.adjoint() * &t);
    let t_scale = t.frobenius_norm();
    let residual = commutator.frobenius_norm();
    if residual > NORMALITY_TOL * (1.0 + t_scale * t_scale) {
        return Err(MoplabError::Unsupported(format!(
            "whitened off-diagonal block is not normal (commutator residual {residual:.3e}); \
             no constructive decomposition in this regime"
        )));
    }

    // Joint diagonalization of the commuting Hermitian and anti-Hermitian
    // parts: eigenvectors of H1 refined inside each (near-)degenerate
    // cluster by diagonalizing H2 there.
    let h1 = t.hermitize();
    let h2 = (&t - &t.adjoint()).scale(Complex64::new(0.0, -0.5)).hermitize();
    let (vals1, vecs1) = hermitian_eigen(&h1)?;
    let scale1 = vals1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cluster_tol = 1e-8 * (1.0 + scale1);

    let mut raw_terms: Vec<(f64, ComplexMatrix)> = Vec::with_capacity(2 * d);
    let mut lo = 0;
    while lo < d {
        let mut hi = lo + 1;
        while hi < d && vals1[hi] - vals1[hi - 1] <= cluster_tol {
            hi += 1;
        }
        let basis = vecs1.block(0, lo, d, hi - lo);
        let m = (&basis.adjoint() * &(&h2 * &basis)).hermitize();
        let (_, w) = hermitian_eigen(&m)?;
        let cols = &basis * &w;

        for k in 0..(hi - lo) {
            let u = cols.block(0, k, d, 1);
            let mu = quadratic_form(&h1, &u);
            let nu = quadratic_form(&h2, &u);
            let lambda = Complex64::new(mu, nu);
            let r = lambda.norm();
            if r > 1.0 + 1e-6 {
                return Err(MoplabError::Unsupported(format!(
                    "whitened eigenvalue {lambda} lies outside the closed unit disk"
                )));
            }
            let pulled = &b_sqrt * &u;
            let projector = (&pulled * &pulled.adjoint()).hermitize();

            if r <= 1e-12 {
                // Zero eigenvalue: split between opposite real phases.
                push_term(&mut raw_terms, 0.0, projector.scale(half()));
                push_term(
                    &mut raw_terms,
                    std::f64::consts::PI,
                    projector.scale(half()),
                );
            } else {
                let alpha = lambda.arg();
                let phi = r.min(1.0).acos();
                if phi < THETA_MERGE_TOL {
                    push_term(&mut raw_terms, alpha, projector);
                } else {
                    push_term(&mut raw_terms, alpha + phi, projector.scale(half()));
                    push_term(&mut raw_terms, alpha - phi, projector.scale(half()));
                }
            }
        }
        lo = hi;
    }

    // Canonical order: sort by angle, merge coincident angles.
    raw_terms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut terms: Vec<(f64, ComplexMatrix)> = Vec::with_capacity(raw_terms.len());
    for (theta, p) in raw_terms {
        match terms.last_mut() {
            Some((t0, p0)) if (theta - *t0).abs() <= THETA_MERGE_TOL => {
                p0.add_scaled(Complex64::new(1.0, 0.0), &p);
            }
            _ => terms.push((theta, p)),
        }
    }
    Ok(ToeplitzDecomposition { terms })
}

/// Check a decomposition against its target blocks: both reconstruction
/// identities, positivity of every weight, and positivity of every
/// assembled term. `lhs` is the worst relative residual, so the report
/// holds exactly when everything is within `RECONSTRUCTION_TOL`.
pub fn verify_decomposition(
    dec: &ToeplitzDecomposition,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
) -> CheckReport {
    let mut failing: Vec<&str> = Vec::new();
    let mut worst = 0.0f64;
    let tol = RECONSTRUCTION_TOL;

    let mut track = |name: &'static str, residual: f64, failing: &mut Vec<&str>| {
        if residual > tol {
            failing.push(name);
        }
        if residual > worst {
            worst = residual;
        }
    };

    let shape_ok = dec.is_empty() || (dec.dim() == b.rows() && b.rows() == c.rows());
    if !shape_ok {
        track("shape", f64::INFINITY, &mut failing);
    } else {
        let d = b.rows();
        let recon_b = if dec.is_empty() {
            ComplexMatrix::zeros(d, d)
        } else {
            dec.weight_sum()
        };
        let recon_c = if dec.is_empty() {
            ComplexMatrix::zeros(d, d)
        } else {
            dec.phased_sum()
        };
        let res_b = (&recon_b - b).frobenius_norm() / (1.0 + b.frobenius_norm());
        track("weight-sum", res_b, &mut failing);
        let res_c = (&recon_c - c).frobenius_norm() / (1.0 + c.frobenius_norm());
        track("phased-sum", res_c, &mut failing);
        for k in 0..dec.len() {
            let p = &dec.terms()[k].1;
            let defect = psd_defect(p);
            track("weight-psd", defect, &mut failing);
            let term_defect = psd_defect(&dec.term_state(k));
            track("term-psd", term_defect, &mut failing);
        }
    }

    failing.sort_unstable();
    failing.dedup();
    let mut params = crate::report::params_from([
        ("terms", dec.len().to_string()),
        ("dim", dec.dim().to_string()),
    ]);
    if !failing.is_empty() {
        params.insert("failing".into(), failing.join("+"));
    }

    let gap = -worst;
    let holds = worst <= tol;
    CheckReport {
        name: "toeplitz-decomposition".into(),
        q: "-".into(),
        lhs: worst,
        rhs: 0.0,
        gap,
        holds,
        tol,
        params,
        witness: if holds {
            None
        } else {
            Some(crate::report::Witness {
                note: format!("decomposition invariants violated: {}", failing.join(", ")),
                items: [
                    ("b".to_string(), crate::io::matrix_to_json(b)),
                    ("c".to_string(), crate::io::matrix_to_json(c)),
                ]
                .into_iter()
                .collect(),
            })
        },
    }
}

fn assemble(b: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    let d = b.rows();
    let mut m = ComplexMatrix::zeros(2 * d, 2 * d);
    m.set_block(0, 0, b);
    m.set_block(0, d, c);
    m.set_block(d, 0, &c.adjoint());
    m.set_block(d, d, b);
    m
}

fn quadratic_form(h: &ComplexMatrix, u: &ComplexMatrix) -> f64 {
    let hu = h * u;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..u.rows() {
        acc += u[(i, 0)].conj() * hu[(i, 0)];
    }
    acc.re
}

fn psd_defect(p: &ComplexMatrix) -> f64 {
    let h = p.hermitize();
    match hermitian_eigenvalues(&h) {
        Ok(vals) => {
            let min = vals.first().copied().unwrap_or(0.0);
            (-min).max(0.0) / (1.0 + h.frobenius_norm())
        }
        Err(_) => f64::INFINITY,
    }
}

fn push_term(terms: &mut Vec<(f64, ComplexMatrix)>, theta: f64, p: ComplexMatrix) {
    let tau = std::f64::consts::TAU;
    let mut t = theta.rem_euclid(tau);
    if tau - t <= THETA_MERGE_TOL {
        t = 0.0;
    }
    terms.push((t, p));
}

fn half() -> Complex64 {
    Complex64::new(0.5, 0.0)
}
