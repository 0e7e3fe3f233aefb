//! Entanglement-breaking detection.
//!
//! The verdict is three-valued because the PPT criterion is only complete in
//! low dimension. A map with an NPT Choi matrix is certainly not
//! entanglement breaking. A PPT Choi matrix certifies EB when the composite
//! dimension is at most 6, and in any dimension when the Choi matrix carries
//! block-Toeplitz or block-Hankel structure (such positive block matrices
//! are separable). Everything else is reported as unknown rather than
//! guessed.

use crate::channel::Channel;
use crate::mat::{hermitian_eigenvalues, kron, pd_inv_sqrt, Complex64, ComplexMatrix, PSD_TOL};
use crate::rng::{random_psd, stream_rng};

/// Relative tolerance for recognizing block-Toeplitz / block-Hankel
/// structure in a Choi matrix.
pub const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EbStatus {
    EntanglementBreaking,
    NotEntanglementBreaking,
    Unknown,
}

/// Status plus the reason it was reached.
#[derive(Clone, Debug)]
pub struct EbVerdict {
    pub status: EbStatus,
    /// Which criterion fired ("npt", "ppt-dimension", "block-toeplitz",
    /// "block-hankel") and its numeric evidence.
    pub certificate: String,
    /// Smallest eigenvalue of the partially transposed Choi matrix.
    pub pt_min_eig: f64,
}

/// Partial transpose over the input index: block (i, j) moves to (j, i).
/// Its spectrum equals that of the output-side partial transpose, so either
/// convention gives the same NPT verdict.
pub fn choi_partial_transpose(ch: &Channel) -> ComplexMatrix {
    let (d_in, d_out) = (ch.d_in(), ch.d_out());
    let mut out = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            out.set_block(i * d_out, j * d_out, &ch.block(j, i));
        }
    }
    out
}

/// True when the Choi matrix has equal diagonal blocks (2x2 block-Toeplitz
/// shape `[[B, C], [C*, B]]`).
pub fn choi_is_block_toeplitz(ch: &Channel) -> bool {
    if ch.d_in() != 2 {
        return false;
    }
    let scale = 1.0 + ch.choi().max_abs();
    (&ch.block(0, 0) - &ch.block(1, 1)).max_abs() <= STRUCTURE_TOL * scale
}

/// True when the Choi matrix has equal off-diagonal blocks (2x2
/// block-Hankel shape `[[B, C], [C, D]]`, forcing C Hermitian).
pub fn choi_is_block_hankel(ch: &Channel) -> bool {
    if ch.d_in() != 2 {
        return false;
    }
    let scale = 1.0 + ch.choi().max_abs();
    (&ch.block(0, 1) - &ch.block(1, 0)).max_abs() <= STRUCTURE_TOL * scale
}

/// A random measure-and-prepare channel: measure a seeded random POVM,
/// prepare a fixed random state per outcome. The Choi matrix is
/// `sum_k M_k^T (x) tau_k`, a sum of positive products, so the channel is
/// entanglement breaking by construction and trace preserving exactly.
/// [`is_entanglement_breaking`] certifies it whenever the composite
/// dimension is at most 6 (PPT is conclusive there); larger instances are
/// still EB but may come back `Unknown`.
pub fn random_eb_channel(d_in: usize, d_out: usize, outcomes: usize, seed: u64) -> Channel {
    assert!(d_in > 0 && d_out > 0 && outcomes > 0, "degenerate shape");
    let mut rng = stream_rng(seed, 0xeb);
    let effects: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let mut r = random_psd(d_in, d_in, false, &mut rng);
            // Ridge keeps the POVM normalization well conditioned.
            for i in 0..d_in {
                r[(i, i)] += Complex64::new(1e-3, 0.0);
            }
            r
        })
        .collect();
    let mut total = ComplexMatrix::zeros(d_in, d_in);
    for r in &effects {
        total.add_scaled(Complex64::new(1.0, 0.0), r);
    }
    let whiten = pd_inv_sqrt(&total.hermitize()).expect("sum of ridged PSD terms is PD");
    let mut choi = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    for r in &effects {
        let effect = (&(&whiten * r) * &whiten).hermitize();
        let prepared = random_psd(d_out, d_out, true, &mut rng);
        choi.add_scaled(Complex64::new(1.0, 0.0), &kron(&effect.transpose(), &prepared));
    }
    Channel::from_choi(d_in, d_out, choi.hermitize()).expect("Hermitian by construction")
}

/// Three-valued entanglement-breaking test with an explicit certificate.
pub fn is_entanglement_breaking(ch: &Channel) -> EbVerdict {
    let pt = choi_partial_transpose(ch);
    let vals = hermitian_eigenvalues(&pt.hermitize()).expect("PT of Hermitian Choi is square");
    let min_eig = vals.first().copied().unwrap_or(0.0);
    let scale = 1.0 + pt.max_abs();

    if min_eig < -PSD_TOL * scale {
        return EbVerdict {
            status: EbStatus::NotEntanglementBreaking,
            certificate: format!("npt: partial transpose has eigenvalue {min_eig:.6e}"),
            pt_min_eig: min_eig,
        };
    }
    let dim = ch.d_in() * ch.d_out();
    if dim <= 6 {
        return EbVerdict {
            status: EbStatus::EntanglementBreaking,
            certificate: format!("ppt-dimension: PPT is conclusive at dimension {dim} <= 6"),
            pt_min_eig: min_eig,
        };
    }
    if ch.is_cp() && choi_is_block_toeplitz(ch) {
        return EbVerdict {
            status: EbStatus::EntanglementBreaking,
            certificate: "block-toeplitz: positive block-Toeplitz Choi matrices are separable"
                .into(),
            pt_min_eig: min_eig,
        };
    }
    if ch.is_cp() && choi_is_block_hankel(ch) {
        return EbVerdict {
            status: EbStatus::EntanglementBreaking,
            certificate: "block-hankel: positive block-Hankel Choi matrices are separable".into(),
            pt_min_eig: min_eig,
        };
    }
    EbVerdict {
        status: EbStatus::Unknown,
        certificate: "ppt-inconclusive: PPT holds but no separability certificate applies".into(),
        pt_min_eig: min_eig,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{kron, Complex64};
    use crate::rng::{random_psd, stream_rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_channel_is_not_eb() {
        let v = is_entanglement_breaking(&Channel::identity(2));
        assert_eq!(v.status, EbStatus::NotEntanglementBreaking);
        assert!(v.certificate.starts_with("npt"));
        // The Bell projector's partial transpose has eigenvalue -1.
        assert!((v.pt_min_eig + 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_threshold_at_two_thirds() {
        let below = is_entanglement_breaking(&Channel::depolarizing_qubit(0.5));
        assert_eq!(below.status, EbStatus::NotEntanglementBreaking);
        let above = is_entanglement_breaking(&Channel::depolarizing_qubit(0.8));
        assert_eq!(above.status, EbStatus::EntanglementBreaking);
        assert!(above.certificate.starts_with("ppt-dimension"));
        let fully = is_entanglement_breaking(&Channel::depolarizing_qubit(1.0));
        assert_eq!(fully.status, EbStatus::EntanglementBreaking);
    }

    #[test]
    fn pt_spectrum_matches_blockwise_transpose_oracle() {
        // Independent oracle: transpose each d_out x d_out block in place
        // (the output-side partial transpose) and compare spectra.
        let ch = crate::channel::random_cp_map(2, 3, 2, 8);
        let pt_in = choi_partial_transpose(&ch);
        let d_out = 3;
        let mut pt_out = ComplexMatrix::zeros(6, 6);
        for i in 0..2 {
            for j in 0..2 {
                pt_out.set_block(i * d_out, j * d_out, &ch.block(i, j).transpose());
            }
        }
        let mut a = hermitian_eigenvalues(&pt_in.hermitize()).unwrap();
        let mut b = hermitian_eigenvalues(&pt_out.hermitize()).unwrap();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for k in 0..a.len() {
            assert!((a[k] - b[k]).abs() < 1e-10 * (1.0 + a[k].abs()), "eig {k}");
        }
    }

    /// A 2 -> 4 map whose Choi matrix is positive block-Toeplitz: dimension
    /// 8 rules out the PPT shortcut, so the structural certificate must fire.
    #[test]
    fn block_toeplitz_choi_in_high_dimension_is_eb() {
        let mut rng = stream_rng(5, 0);
        let d_out = 4;
        let mut choi = ComplexMatrix::zeros(2 * d_out, 2 * d_out);
        for k in 0..3 {
            let p = random_psd(d_out, d_out, false, &mut rng);
            let theta = 0.7 + 1.1 * k as f64;
            let phase = Complex64::from_polar(1.0, theta);
            let mut cell = ComplexMatrix::zeros(2, 2);
            cell[(0, 0)] = c(1., 0.);
            cell[(1, 1)] = c(1., 0.);
            cell[(0, 1)] = phase;
            cell[(1, 0)] = phase.conj();
            choi.add_scaled(c(1., 0.), &kron(&cell, &p));
        }
        let ch = Channel::from_choi(2, d_out, choi).unwrap();
        assert!(ch.is_cp());
        let v = is_entanglement_breaking(&ch);
        assert_eq!(v.status, EbStatus::EntanglementBreaking);
        assert!(v.certificate.starts_with("block-toeplitz"), "{}", v.certificate);
    }

    /// PPT alone in dimension 8 without usable structure: honest `Unknown`.
    #[test]
    fn ppt_without_certificate_is_unknown() {
        let mut rng = stream_rng(6, 0);
        let d_out = 4;
        // A separable-by-construction Choi matrix (sum of products) that is
        // not block-symmetric: PPT but structurally anonymous.
        let mut choi = ComplexMatrix::zeros(2 * d_out, 2 * d_out);
        for _ in 0..4 {
            let s = random_psd(2, 1, false, &mut rng);
            let t = random_psd(d_out, 2, false, &mut rng);
            choi.add_scaled(c(1., 0.), &kron(&s, &t));
        }
        let ch = Channel::from_choi(2, d_out, choi).unwrap();
        assert!(ch.is_cp());
        let v = is_entanglement_breaking(&ch);
        assert_eq!(v.status, EbStatus::Unknown);
        assert!(v.pt_min_eig >= -1e-10);
    }

    #[test]
    fn measure_and_prepare_channels_are_certified_eb() {
        for seed in 0..8u64 {
            let ch = random_eb_channel(2, 2, 3, seed);
            assert!(ch.is_cp(), "seed {seed}");
            assert!(ch.is_tp(), "seed {seed}");
            let v = is_entanglement_breaking(&ch);
            assert_eq!(v.status, EbStatus::EntanglementBreaking, "seed {seed}");
        }
        // Same construction in composite dimension 8: genuinely EB but the
        // detector has no applicable certificate, so it must stay honest.
        let big = random_eb_channel(2, 4, 3, 1);
        assert!(big.is_tp());
        let v = is_entanglement_breaking(&big);
        assert!(v.pt_min_eig >= -1e-10, "separable Choi must be PPT");
        assert_eq!(v.status, EbStatus::Unknown);
    }

    #[test]
    fn structure_detectors_are_exact() {
        let ch = Channel::depolarizing_qubit(1.0);
        assert!(choi_is_block_toeplitz(&ch));
        assert!(choi_is_block_hankel(&ch)); // off-diagonal blocks both zero
        let id = Channel::identity(2);
        assert!(!choi_is_block_toeplitz(&id));
        assert!(!choi_is_block_hankel(&id));
    }
}
