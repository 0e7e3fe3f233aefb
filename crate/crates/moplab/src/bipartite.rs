//! Bipartite states on C^2 (x) C^d in block form, and canonical square-root
//! factorizations.
//!
//! A PSD operator on the composite space is stored as the 2x2 grid of d x d
//! blocks
//!
//! ```text
//!   rho = [ B  C ]
//!         [ C* D ]
//! ```
//!
//! The factorization `rho = X* X` with `X = [X1 X2]` (blocks of width d) is
//! what connects a state to its conjugated companion `rho~`, whose blocks
//! are `X_i X_j*` instead of `X_i* X_j`. Both orderings square to operators
//! with identical nonzero spectra, which is exactly why conjugation
//! preserves every output norm downstream.

use crate::error::{MoplabError, Result};
use crate::mat::{
    hermitian_eigen, is_psd, psd_project_check, Complex64, ComplexMatrix, PSD_TOL,
};
use crate::rng::{random_psd, stream_rng};

/// Eigenvalues below `RANK_TOL * trace` are treated as zero when truncating
/// a factorization.
pub const RANK_TOL: f64 = 1e-10;

/// Relative reconstruction tolerance for factorizations.
const FACTOR_TOL: f64 = 1e-9;

/// PSD operator on C^2 (x) C^d held as blocks `[[B, C], [C*, D]]`.
#[derive(Clone, Debug)]
pub struct BipartiteBlockState {
    d: usize,
    b: ComplexMatrix,
    c: ComplexMatrix,
    dd: ComplexMatrix,
}

impl BipartiteBlockState {
    /// Validates shapes and overall positivity (within the crate PSD
    /// tolerance); `b` and `d` must be Hermitian since they are diagonal
    /// blocks of a PSD operator.
    pub fn from_blocks(b: ComplexMatrix, c: ComplexMatrix, dd: ComplexMatrix) -> Result<Self> {
        let d = b.rows();
        for (m, label) in [(&b, "B"), (&c, "C"), (&dd, "D")] {
            if m.rows() != d || m.cols() != d {
                return Err(MoplabError::Dimension(format!(
                    "block {label} is {}x{}, expected {d}x{d}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let state = BipartiteBlockState { d, b, c, dd };
        let assembled = state.assembled();
        let (ok, min_eig) = psd_project_check(&assembled, PSD_TOL)?;
        if !ok {
            return Err(MoplabError::NotPsd { min_eig });
        }
        Ok(state)
    }

    /// Split a 2d x 2d PSD matrix into blocks.
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() || m.rows() % 2 != 0 {
            return Err(MoplabError::Dimension(format!(
                "bipartite state must be square with even dimension, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let d = m.rows() / 2;
        Self::from_blocks(
            m.block(0, 0, d, d),
            m.block(0, d, d, d),
            m.block(d, d, d, d),
        )
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn block_b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn block_c(&self) -> &ComplexMatrix {
        &self.c
    }

    pub fn block_d(&self) -> &ComplexMatrix {
        &self.dd
    }

    /// Block (i, j) with i, j in {0, 1}.
    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        match (i, j) {
            (0, 0) => self.b.clone(),
            (0, 1) => self.c.clone(),
            (1, 0) => self.c.adjoint(),
            (1, 1) => self.dd.clone(),
            _ => panic!("block index out of range"),
        }
    }

    pub fn assembled(&self) -> ComplexMatrix {
        let d = self.d;
        let mut m = ComplexMatrix::zeros(2 * d, 2 * d);
        m.set_block(0, 0, &self.b);
        m.set_block(0, d, &self.c);
        m.set_block(d, 0, &self.c.adjoint());
        m.set_block(d, d, &self.dd);
        m
    }

    pub fn trace(&self) -> f64 {
        (self.b.trace() + self.dd.trace()).re
    }

    /// Canonical factorization `rho = X* X`, `X = [X1 X2]` of shape
    /// R x 2d with R the numerical rank.
    pub fn sqrt_factorization(&self) -> Result<SqrtFactorization> {
        let blocks = canonical_block_factor(&self.assembled(), 2)?;
        let fac = SqrtFactorization {
            x1: blocks[0].clone(),
            x2: blocks[1].clone(),
        };
        // Factorizations are only useful if they actually reproduce the
        // state; guard against silent eigensolver trouble.
        let rebuilt = fac.gram_state()?;
        let scale = 1.0 + self.assembled().max_abs();
        let err = (&rebuilt.assembled() - &self.assembled()).max_abs();
        if err > FACTOR_TOL * scale {
            return Err(MoplabError::Singular(format!(
                "square-root factorization residual {err:.3e} exceeds {FACTOR_TOL:.0e} relative"
            )));
        }
        Ok(fac)
    }

    /// The conjugated companion state built from this state's canonical
    /// factorization: blocks `X_i X_j*` in place of `X_i* X_j`.
    pub fn conjugated(&self) -> Result<BipartiteBlockState> {
        self.sqrt_factorization()?.flipped_state()
    }
}

/// Two-block square-root factor `X = [X1 X2]` of a PSD operator.
#[derive(Clone, Debug)]
pub struct SqrtFactorization {
    pub x1: ComplexMatrix,
    pub x2: ComplexMatrix,
}

impl SqrtFactorization {
    pub fn rank(&self) -> usize {
        self.x1.rows()
    }

    /// Reassemble the original operator from `X_i* X_j` blocks.
    pub fn gram_state(&self) -> Result<BipartiteBlockState> {
        BipartiteBlockState::from_blocks(
            &self.x1.adjoint() * &self.x1,
            &self.x1.adjoint() * &self.x2,
            &self.x2.adjoint() * &self.x2,
        )
    }

    /// The flipped (conjugated) operator with blocks `X_i X_j*`, a PSD
    /// operator on C^2 (x) C^R.
    pub fn flipped_state(&self) -> Result<BipartiteBlockState> {
        BipartiteBlockState::from_blocks(
            &self.x1 * &self.x1.adjoint(),
            &self.x1 * &self.x2.adjoint(),
            &self.x2 * &self.x2.adjoint(),
        )
    }
}

/// Canonical factorization of a PSD matrix `M = X* X` where `X` has
/// `nblocks` column blocks of equal width.
///
/// `X` is built from the eigendecomposition: rows are `sqrt(lambda_k) v_k*`
/// with eigenvalues descending and eigenvalues below `RANK_TOL * trace`
/// dropped. Each kept eigenvector is normalized so its first component of
/// modulus above `RANK_TOL` is real and positive, making the factorization
/// deterministic for a given input.
pub fn canonical_block_factor(m: &ComplexMatrix, nblocks: usize) -> Result<Vec<ComplexMatrix>> {
    if !m.is_square() || m.rows() % nblocks != 0 {
        return Err(MoplabError::Dimension(format!(
            "cannot split a {}x{} matrix into {nblocks} column blocks",
            m.rows(),
            m.cols()
        )));
    }
    let (ok, min_eig) = psd_project_check(m, PSD_TOL)?;
    if !ok {
        return Err(MoplabError::NotPsd { min_eig });
    }
    let n = m.rows();
    let width = n / nblocks;
    let (vals, vecs) = hermitian_eigen(&m.hermitize())?;
    let trace: f64 = vals.iter().sum::<f64>().max(0.0);
    let cut = RANK_TOL * trace.max(f64::MIN_POSITIVE);

    // Eigenvalues ascending from the solver; walk them in reverse so the
    // factor rows come out in descending order.
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for k in (0..n).rev() {
        if vals[k] <= cut {
            break;
        }
        let root = vals[k].sqrt();
        let mut v: Vec<Complex64> = (0..n).map(|i| vecs[(i, k)]).collect();
        let phase = v
            .iter()
            .find(|z| z.norm() > RANK_TOL)
            .map(|z| z / z.norm())
            .unwrap_or_else(|| Complex64::new(1.0, 0.0));
        let fix = phase.conj();
        for z in v.iter_mut() {
            *z = (*z * fix).conj() * root; // row of X is sqrt(l) v*
        }
        rows.push(v);
    }
    let rank = rows.len().max(1);
    let mut x = ComplexMatrix::zeros(rank, n);
    for (r, row) in rows.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            x[(r, j)] = *z;
        }
    }
    Ok((0..nblocks).map(|b| x.block(0, b * width, rank, width)).collect())
}

/// Random full-rank PSD unit-trace state on C^2 (x) C^d.
pub fn random_bipartite_state(d: usize, seed: u64) -> BipartiteBlockState {
    let mut rng = stream_rng(seed, 0xb1);
    let m = random_psd(2 * d, 2 * d, true, &mut rng);
    BipartiteBlockState::from_matrix(&m).expect("random PSD state is valid")
}

/// Random rank-one bipartite state |psi><psi| on C^2 (x) C^d.
pub fn random_pure_bipartite_state(d: usize, seed: u64) -> BipartiteBlockState {
    let v = crate::rng::random_pure_state(2 * d, seed);
    let m = &v * &v.adjoint();
    BipartiteBlockState::from_matrix(&m).expect("projector is PSD")
}

/// Sanity helper used in tests and by the EB detector's documentation: is
/// this matrix PSD?
pub fn assembled_is_psd(state: &BipartiteBlockState) -> bool {
    is_psd(&state.assembled())
}
