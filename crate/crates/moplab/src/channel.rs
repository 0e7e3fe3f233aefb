//! Linear maps between matrix algebras, held in Choi-block form.
//!
//! A map `Phi : M_{d_in} -> M_{d_out}` is stored as its unnormalized Choi
//! matrix: the d_in x d_in grid whose (i, j) block is `Phi(e_ij)`, each block
//! d_out x d_out. Complete positivity is positivity of this matrix; trace
//! preservation is `tr Phi(e_ij) = delta_ij`. The same container also holds
//! maps that are *not* CP (several bounds in [`crate::checks`] apply to any
//! map with a Hermitian Choi matrix), so the CP and TP verdicts are computed
//! once at construction and exposed as flags rather than enforced.
//!
//! The square-root view: a CP map's Choi matrix factors as `G* G` with
//! `G = [G1 .. G_{d_in}]`, so `Phi(e_ij) = G_i* G_j`. Swapping the order to
//! `G_i G_j*` yields the conjugated map, and transposing each `G_i` yields
//! the complementary channel — both constructions live here.

use rand_chacha::ChaCha8Rng;

use crate::bipartite::{canonical_block_factor, BipartiteBlockState, SqrtFactorization, RANK_TOL};
use crate::error::{MoplabError, Result};
use crate::mat::{
    hermitian_eigen, kron, pd_inv_sqrt, psd_project_check, Complex64, ComplexMatrix,
    HERMITIAN_INPUT_TOL, PSD_TOL,
};
use crate::rng::{ginibre, stream_rng};

/// Tolerance (relative) for the trace-preservation verdict.
const TP_TOL: f64 = 1e-10;

/// A linear map in Choi-block form plus its CP/TP verdicts.
#[derive(Clone, Debug)]
pub struct Channel {
    d_in: usize,
    d_out: usize,
    choi: ComplexMatrix,
    cp: bool,
    tp: bool,
}

impl Channel {
    /// Build from an unnormalized Choi matrix. The matrix must be Hermitian
    /// within `1e-10` relative; CP and TP are measured, not required.
    pub fn from_choi(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Result<Self> {
        let n = d_in * d_out;
        if choi.rows() != n || choi.cols() != n {
            return Err(MoplabError::Dimension(format!(
                "Choi matrix is {}x{}, expected {n}x{n} for a {d_in} -> {d_out} map",
                choi.rows(),
                choi.cols()
            )));
        }
        let scale = 1.0 + choi.max_abs();
        let defect = choi.hermitian_defect();
        if defect > HERMITIAN_INPUT_TOL * scale {
            return Err(MoplabError::NotHermitian {
                defect,
                tol: HERMITIAN_INPUT_TOL * scale,
            });
        }
        let (cp, _) = psd_project_check(&choi, PSD_TOL)?;
        let mut tp_defect: f64 = 0.0;
        for i in 0..d_in {
            for j in 0..d_in {
                let tr = (0..d_out)
                    .map(|k| choi[(i * d_out + k, j * d_out + k)])
                    .sum::<Complex64>();
                let want = if i == j { 1.0 } else { 0.0 };
                tp_defect = tp_defect.max((tr - Complex64::new(want, 0.0)).norm());
            }
        }
        let tp = tp_defect <= TP_TOL * scale;
        Ok(Channel {
            d_in,
            d_out,
            choi,
            cp,
            tp,
        })
    }

    /// Build from the block grid `blocks[i][j] = Phi(e_ij)`.
    pub fn from_blocks(blocks: &[Vec<ComplexMatrix>]) -> Result<Self> {
        let d_in = blocks.len();
        if d_in == 0 || blocks.iter().any(|row| row.len() != d_in) {
            return Err(MoplabError::Dimension(
                "block grid must be square and nonempty".into(),
            ));
        }
        let d_out = blocks[0][0].rows();
        let mut choi = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
        for (i, row) in blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                if b.rows() != d_out || b.cols() != d_out {
                    return Err(MoplabError::Dimension(format!(
                        "block ({i},{j}) is {}x{}, expected {d_out}x{d_out}",
                        b.rows(),
                        b.cols()
                    )));
                }
                choi.set_block(i * d_out, j * d_out, b);
            }
        }
        Self::from_choi(d_in, d_out, choi)
    }

    pub fn from_kraus(ks: &KrausSet) -> Result<Self> {
        Self::from_choi(ks.d_in, ks.d_out, ks.to_choi())
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn is_cp(&self) -> bool {
        self.cp
    }

    pub fn is_tp(&self) -> bool {
        self.tp
    }

    /// `Phi(e_ij)` — the (i, j) Choi block.
    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        self.choi
            .block(i * self.d_out, j * self.d_out, self.d_out, self.d_out)
    }

    /// Apply the map: `Phi(rho) = sum_ij rho_ij Phi(e_ij)`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.d_in || rho.cols() != self.d_in {
            return Err(MoplabError::Dimension(format!(
                "input is {}x{}, map expects {}x{}",
                rho.rows(),
                rho.cols(),
                self.d_in,
                self.d_in
            )));
        }
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                let w = rho[(i, j)];
                if w != Complex64::new(0.0, 0.0) {
                    out.add_scaled(w, &self.block(i, j));
                }
            }
        }
        Ok(out)
    }

    /// `(Phi (x) 1)(X)` for `X` on C^{d_in} (x) C^m given as a flat matrix:
    /// `sum_ij Phi(e_ij) (x) X_ij`.
    pub fn apply_tensor_blocks(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if !x.is_square() || x.rows() % self.d_in != 0 {
            return Err(MoplabError::Dimension(format!(
                "tensor input is {}x{}, expected square with dimension divisible by {}",
                x.rows(),
                x.cols(),
                self.d_in
            )));
        }
        let m = x.rows() / self.d_in;
        let mut out = ComplexMatrix::zeros(self.d_out * m, self.d_out * m);
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                let xij = x.block(i * m, j * m, m, m);
                let term = kron(&self.block(i, j), &xij);
                out.add_scaled(Complex64::new(1.0, 0.0), &term);
            }
        }
        Ok(out)
    }

    /// `(Phi (x) 1)(rho)` for a bipartite block state; requires a qubit
    /// input side.
    pub fn apply_tensor_id(&self, rho: &BipartiteBlockState) -> Result<ComplexMatrix> {
        if self.d_in != 2 {
            return Err(MoplabError::Dimension(format!(
                "block states describe qubit-side inputs, map has d_in = {}",
                self.d_in
            )));
        }
        self.apply_tensor_blocks(&rho.assembled())
    }

    /// Tensor product of two maps: block ((i1,i2),(j1,j2)) is
    /// `Phi(e_i1j1) (x) Omega(e_i2j2)`.
    pub fn tensor(&self, other: &Channel) -> Channel {
        let d_in = self.d_in * other.d_in;
        let mut blocks: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(d_in);
        for i1 in 0..self.d_in {
            for i2 in 0..other.d_in {
                let mut row = Vec::with_capacity(d_in);
                for j1 in 0..self.d_in {
                    for j2 in 0..other.d_in {
                        row.push(kron(&self.block(i1, j1), &other.block(i2, j2)));
                    }
                }
                blocks.push(row);
            }
        }
        Channel::from_blocks(&blocks).expect("tensor of valid channels is valid")
    }

    /// Kraus representation of a CP map: eigenvectors of the Choi matrix
    /// with eigenvalues above `RANK_TOL * trace`, reshaped so that column i
    /// of `A_k` is the i-th block of the k-th scaled eigenvector.
    pub fn kraus(&self) -> Result<KrausSet> {
        let (vals, vecs) = hermitian_eigen(&self.choi.hermitize())?;
        let trace: f64 = vals.iter().sum::<f64>();
        let scale = 1.0 + self.choi.max_abs();
        let cut = RANK_TOL * trace.abs().max(f64::MIN_POSITIVE);
        let mut elements = Vec::new();
        for k in (0..vals.len()).rev() {
            let lam = vals[k];
            if lam <= cut {
                if lam < -PSD_TOL * scale {
                    return Err(MoplabError::NotCompletelyPositive(lam));
                }
                continue;
            }
            let root = lam.sqrt();
            let a = ComplexMatrix::from_fn(self.d_out, self.d_in, |r, i| {
                vecs[(i * self.d_out + r, k)] * root
            });
            elements.push(a);
        }
        if elements.is_empty() {
            // The zero map: represent it with a single zero element so the
            // set stays well formed.
            elements.push(ComplexMatrix::zeros(self.d_out, self.d_in));
        }
        Ok(KrausSet {
            d_in: self.d_in,
            d_out: self.d_out,
            elements,
        })
    }

    /// The conjugated map: factor the Choi matrix as `G* G` with
    /// `G = [G1 .. G_{d_in}]` and return the map whose (i, j) block is
    /// `G_i G_j*`, together with the factor blocks used. Output dimension is
    /// the Choi rank R, so the result maps C^{d_in} -> C^R.
    ///
    /// Requires a CP source (the factorization is of a PSD matrix). For a
    /// qubit-side map the factor is returned as a [`SqrtFactorization`].
    pub fn conjugated(&self) -> Result<(Channel, SqrtFactorization)> {
        if self.d_in != 2 {
            return Err(MoplabError::Unsupported(format!(
                "conjugation is defined here for qubit-side maps, d_in = {}",
                self.d_in
            )));
        }
        if !self.cp {
            let (_, min_eig) = psd_project_check(&self.choi, PSD_TOL)?;
            return Err(MoplabError::NotCompletelyPositive(min_eig));
        }
        let blocks = canonical_block_factor(&self.choi, self.d_in)?;
        let fac = SqrtFactorization {
            x1: blocks[0].clone(),
            x2: blocks[1].clone(),
        };
        let grid: Vec<Vec<ComplexMatrix>> = (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| {
                        let gi = if i == 0 { &fac.x1 } else { &fac.x2 };
                        let gj = if j == 0 { &fac.x1 } else { &fac.x2 };
                        gi * &gj.adjoint()
                    })
                    .collect()
            })
            .collect();
        let tilde = Channel::from_blocks(&grid)?;
        Ok((tilde, fac))
    }

    // ---- named channels ----

    pub fn identity(d: usize) -> Channel {
        let mut blocks = vec![vec![ComplexMatrix::zeros(d, d); d]; d];
        for (i, row) in blocks.iter_mut().enumerate() {
            for (j, b) in row.iter_mut().enumerate() {
                b[(i, j)] = Complex64::new(1.0, 0.0);
            }
        }
        Channel::from_blocks(&blocks).expect("identity channel")
    }

    /// Qubit depolarizing channel `rho -> (1 - lambda) rho + lambda tr(rho) I/2`.
    pub fn depolarizing_qubit(lambda: f64) -> Channel {
        let mut blocks = vec![vec![ComplexMatrix::zeros(2, 2); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut b = ComplexMatrix::zeros(2, 2);
                b[(i, j)] = Complex64::new(1.0 - lambda, 0.0);
                if i == j {
                    for k in 0..2 {
                        b[(k, k)] += Complex64::new(lambda / 2.0, 0.0);
                    }
                }
                blocks[i][j] = b;
            }
        }
        Channel::from_blocks(&blocks).expect("depolarizing channel")
    }

    /// Conjugation by a fixed matrix: `rho -> A rho A*` (a single-element
    /// Kraus map; CP, and TP iff `A* A = I`).
    pub fn conjugation_by(a: &ComplexMatrix) -> Result<Channel> {
        KrausSet::new(vec![a.clone()]).and_then(|ks| Channel::from_kraus(&ks))
    }
}

/// A finite Kraus family `{A_k}`, all of shape d_out x d_in.
#[derive(Clone, Debug)]
pub struct KrausSet {
    d_in: usize,
    d_out: usize,
    pub elements: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let first = elements.first().ok_or(MoplabError::EmptyKrausSet)?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if d_in == 0 || d_out == 0 {
            return Err(MoplabError::Dimension("Kraus elements must be nonempty".into()));
        }
        if elements
            .iter()
            .any(|a| a.rows() != d_out || a.cols() != d_in)
        {
            return Err(MoplabError::Dimension(
                "all Kraus elements must share one shape".into(),
            ));
        }
        Ok(KrausSet {
            d_in,
            d_out,
            elements,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `sum_k A_k rho A_k*`.
    pub fn action(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.d_in || rho.cols() != self.d_in {
            return Err(MoplabError::Dimension(format!(
                "input is {}x{}, Kraus set expects {}x{}",
                rho.rows(),
                rho.cols(),
                self.d_in,
                self.d_in
            )));
        }
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for a in &self.elements {
            let term = &(a * rho) * &a.adjoint();
            out.add_scaled(Complex64::new(1.0, 0.0), &term);
        }
        Ok(out)
    }

    /// Unnormalized Choi matrix: block (i, j) is
    /// `sum_k (col_i A_k)(col_j A_k)*`.
    pub fn to_choi(&self) -> ComplexMatrix {
        let n = self.d_in * self.d_out;
        let mut choi = ComplexMatrix::zeros(n, n);
        for a in &self.elements {
            for i in 0..self.d_in {
                for j in 0..self.d_in {
                    for r in 0..self.d_out {
                        for s in 0..self.d_out {
                            choi[(i * self.d_out + r, j * self.d_out + s)] +=
                                a[(r, i)] * a[(s, j)].conj();
                        }
                    }
                }
            }
        }
        choi
    }

    /// `max_k |sum A_k* A_k - I|` — zero for a trace-preserving family.
    pub fn tp_defect(&self) -> f64 {
        let mut acc = ComplexMatrix::zeros(self.d_in, self.d_in);
        for a in &self.elements {
            let term = &a.adjoint() * a;
            acc.add_scaled(Complex64::new(1.0, 0.0), &term);
        }
        (&acc - &ComplexMatrix::identity(self.d_in)).max_abs()
    }

    /// The complementary channel: for an environment indexed by the Kraus
    /// label, `<k| Phi'(rho) |j> = tr(A_k rho A_j*)`. Built directly from
    /// that formula; maps C^{d_in} -> C^K.
    pub fn complementary(&self) -> Result<Channel> {
        let kk = self.elements.len();
        // Precompute A_j* A_k products.
        let mut prods = vec![vec![ComplexMatrix::zeros(self.d_in, self.d_in); kk]; kk];
        for (j, aj) in self.elements.iter().enumerate() {
            let aj_adj = aj.adjoint();
            for (k, ak) in self.elements.iter().enumerate() {
                prods[j][k] = &aj_adj * ak;
            }
        }
        // Block (m, n) of the complementary Choi matrix has (k, j) entry
        // tr(A_k e_mn A_j*) = (A_j* A_k)_{n m}.
        let mut blocks = vec![vec![ComplexMatrix::zeros(kk, kk); self.d_in]; self.d_in];
        for m in 0..self.d_in {
            for n in 0..self.d_in {
                blocks[m][n] = ComplexMatrix::from_fn(kk, kk, |k, j| prods[j][k][(n, m)]);
            }
        }
        Channel::from_blocks(&blocks)
    }
}

/// Random CP map with the given Kraus rank: independent Ginibre elements.
/// Generally not trace preserving.
pub fn random_cp_map(d_in: usize, d_out: usize, kraus_rank: usize, seed: u64) -> Channel {
    let mut rng = stream_rng(seed, 0xc9);
    random_cp_map_with(d_in, d_out, kraus_rank, &mut rng)
}

pub fn random_cp_map_with(
    d_in: usize,
    d_out: usize,
    kraus_rank: usize,
    rng: &mut ChaCha8Rng,
) -> Channel {
    let elements: Vec<ComplexMatrix> = (0..kraus_rank.max(1))
        .map(|_| ginibre(d_out, d_in, rng))
        .collect();
    let ks = KrausSet::new(elements).expect("nonempty Ginibre family");
    Channel::from_kraus(&ks).expect("Kraus-built map is CP")
}

/// Random CP *and trace-preserving* channel: Ginibre Kraus elements
/// right-normalized by `(sum A_k* A_k)^{-1/2}`.
pub fn random_tp_channel(d_in: usize, d_out: usize, kraus_rank: usize, seed: u64) -> Channel {
    let mut rng = stream_rng(seed, 0x7c);
    random_tp_channel_with(d_in, d_out, kraus_rank, &mut rng)
}

pub fn random_tp_channel_with(
    d_in: usize,
    d_out: usize,
    kraus_rank: usize,
    rng: &mut ChaCha8Rng,
) -> Channel {
    loop {
        let elements: Vec<ComplexMatrix> = (0..kraus_rank.max(1))
            .map(|_| ginibre(d_out, d_in, rng))
            .collect();
        let mut acc = ComplexMatrix::zeros(d_in, d_in);
        for a in &elements {
            let term = &a.adjoint() * a;
            acc.add_scaled(Complex64::new(1.0, 0.0), &term);
        }
        let Ok(w) = pd_inv_sqrt(&acc) else {
            continue; // astronomically unlikely rank deficiency; redraw
        };
        let normalized: Vec<ComplexMatrix> = elements.iter().map(|a| a * &w).collect();
        let ks = KrausSet::new(normalized).expect("nonempty family");
        let ch = Channel::from_kraus(&ks).expect("normalized family is CP");
        debug_assert!(ch.is_tp());
        return ch;
    }
}
