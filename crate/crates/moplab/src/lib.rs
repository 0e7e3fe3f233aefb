//! Schatten-norm machinery and maximal-output-purity analysis for completely
//! positive maps on qubits.
//!
//! The crate is organised in layers:
//!
//! * [`mat`] / [`norm`] — dense complex matrices, Hermitian eigenvalue and
//!   singular-value helpers, Schatten (quasi-)norms and von Neumann entropy.
//! * [`channel`] / [`bipartite`] — linear maps in Choi-block form, Kraus
//!   representations, conjugated and complementary maps, bipartite block
//!   states and their square-root factorizations.
//! * [`mop`] — maximal output purity: `nu_q`, its tensor-product variant and
//!   the minimal output entropy `nu_s`.
//! * [`checks`] — numerical checkers for a family of output-norm
//!   inequalities, including the diagonal family that violates the
//!   square-root bound between norm orders 2 and a computable threshold.
//! * [`toeplitz`] — constructive decomposition of positive block-Toeplitz
//!   operators into phased rank-structured terms.
//! * [`io`] — serialization of matrices, channels, states and check reports.
//!
//! All randomized routines take explicit `u64` seeds and are deterministic:
//! the same seed yields bitwise-identical results, independent of thread
//! count.

#![forbid(unsafe_code)]

pub mod bipartite;
pub mod channel;
pub mod checks;
pub mod eb;
pub mod error;
pub mod io;
pub mod mat;
pub mod mop;
pub mod norm;
pub mod report;
pub mod rng;
pub mod toeplitz;

pub use bipartite::{BipartiteBlockState, SqrtFactorization};
pub use channel::{Channel, KrausSet};
pub use checks::{
    check_block_difference_bound, check_block_norm_bound, check_eb_multiplicativity,
    check_phase_envelope_bound, check_phased_psd_factors, check_psd_tensor_bound,
    check_purity_diagonal_bound, check_sandwich_bound, check_separable_output_bound,
    check_sqrt_factor_bound, check_toeplitz_output_bound, phase_max_rhs, threshold_exponent,
    threshold_gap, CheckOptions, CounterexampleFamily, ThetaMax,
};
pub use eb::{is_entanglement_breaking, EbStatus, EbVerdict};
pub use error::{MoplabError, Result};
pub use mat::{Complex64, ComplexMatrix};
pub use mop::{nu_q, nu_q_tensor, nu_s, output_norm, MopOptions, MopResult};
pub use norm::{entropy, schatten_norm, SchattenOrder};
pub use report::{CheckReport, Witness};
pub use toeplitz::{decompose_block_toeplitz, verify_decomposition, ToeplitzDecomposition};
