//! Numerical checkers for a family of output-norm inequalities.
//!
//! Each checker evaluates both sides of one inequality on concrete inputs
//! and returns a [`CheckReport`]. Failures attach a witness with the full
//! inputs, so a violation can be reloaded and re-verified. Checkers never
//! decide whether a violation "should" happen — the diagonal counterexample
//! family below violates the square-root factor bound by design, and the
//! report simply records it.
//!
//! Names used throughout:
//!
//! * `purity-diagonal` — `||(Phi (x) 1)(rho)||_q <= nu_q(Phi) (||B||_q + ||D||_q)`
//!   with `B`, `D` the diagonal blocks of `rho`.
//! * `phase-envelope` — the sharper right-hand side obtained by maximizing
//!   `||beta Phi_00 + delta Phi_11 + sqrt(beta delta) (e^{i theta} Phi_10 +
//!   e^{-i theta} Phi_01)||_q` over a single angle.
//! * `sqrt-factor` — the square-rooted factor form
//!   `||G1 (x) X1 + G2 (x) X2||_{2q} <= max_theta ||a G1 + e^{i theta} b G2||_{2q}`
//!   with `a = ||X1||_{2q}`, `b = ||X2||_{2q}`.
//! * `sandwich` — `Tr |F H F*|^q <= Tr [(F*F)^q (|H|^q + |H*|^q) / 2]`.
//! * `psd-tensor` — `||sum A_k (x) B_k||_q <= ||sum ||B_k||_q A_k||_q <=
//!   ||sum A_k||_q max_j ||B_j||_q` for PSD `A_k`.
//! * `block-norm` — for maps whose blocks are all PSD,
//!   `||(Phi (x) 1)(X)||_q <= ||Phi([||X_ij||_q])||_q`.
//! * `phased-psd` — `sqrt-factor` specialised to `G_i = e^{i theta_i} H_i`
//!   with PSD `H_i`, where the bound is expected to hold for all q >= 1/2.
//! * `separable` — `||(Phi (x) 1)(rho)||_q <= nu_q(Phi) ||Tr_1 rho||_q` for
//!   `rho` given as an explicit convex combination of products.
//! * `eb-multiplicativity` — `nu_q(Phi (x) Omega) = nu_q(Phi) nu_q(Omega)`
//!   when `Omega` carries an entanglement-breaking certificate.
//! * `toeplitz` — the `phase-envelope` bound on block-Toeplitz states,
//!   valid for any linear map with a Hermitian Choi matrix.
//! * `block-difference` — `-X <= Delta <= X` for `X = Phi_00 + Phi_11`,
//!   `Delta = Phi_00 - Phi_11` of a CP map.

use std::f64::consts::{PI, TAU};

use crate::bipartite::BipartiteBlockState;
use crate::channel::Channel;
use crate::eb::{is_entanglement_breaking, EbStatus};
use crate::error::{MoplabError, Result};
use crate::io::matrix_to_json;
use crate::mat::{
    hermitian_eigenvalues, kron, psd_power, psd_project_check, Complex64, ComplexMatrix,
    HERMITIAN_INPUT_TOL, PSD_TOL,
};
use crate::mop::{nu_q, nu_q_tensor, MopOptions};
use crate::norm::{schatten_norm, schatten_power_sum, SchattenOrder};
use crate::report::{params_from, CheckReport, Witness, CHECK_TOL};

/// Shared knobs for all checkers.
#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Relative pass tolerance; `holds` means `gap >= -tol (1 + |rhs|)`.
    pub tol: f64,
    /// Grid resolution for angle maximization when no fast path applies.
    pub theta_grid: usize,
    /// Options forwarded to the purity optimizer where one is needed.
    pub mop: MopOptions,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            tol: CHECK_TOL,
            theta_grid: 720,
            mop: MopOptions::default(),
        }
    }
}

/// Result of a one-angle maximization: the best value and where it sits.
#[derive(Clone, Copy, Debug)]
pub struct ThetaMax {
    pub value: f64,
    pub theta_star: f64,
}

/// Maximize a smooth `2 pi`-periodic function: dense grid, then
/// golden-section refinement around the best cell (to ~1e-10 in theta).
fn maximize_theta(f: impl Fn(f64) -> f64, n_grid: usize) -> ThetaMax {
    let n = n_grid.max(8);
    let step = TAU / n as f64;
    let mut best_k = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..n {
        let v = f(k as f64 * step);
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let center = best_k as f64 * step;
    let (mut lo, mut hi) = (center - step, center + step);
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-10 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    let (value, theta) = if fm >= best_v { (fm, mid) } else { (best_v, center) };
    ThetaMax {
        value,
        theta_star: theta.rem_euclid(TAU),
    }
}

fn require_cp(ch: &Channel) -> Result<()> {
    if ch.is_cp() {
        return Ok(());
    }
    let (_, min_eig) = psd_project_check(ch.choi(), PSD_TOL)?;
    Err(MoplabError::NotCompletelyPositive(min_eig))
}

fn require_qubit_input(ch: &Channel) -> Result<()> {
    if ch.d_in() != 2 {
        return Err(MoplabError::Dimension(format!(
            "checker needs a map on qubit inputs, got d_in = {}",
            ch.d_in()
        )));
    }
    Ok(())
}

/// The phase-envelope right-hand side: maximum over one angle of
/// `||beta Phi_00 + delta Phi_11 + sqrt(beta delta)(e^{i theta} Phi_10 +
/// e^{-i theta} Phi_01)||_q`.
///
/// When `Phi_01` is Hermitian the two phased terms collapse to
/// `2 cos(theta) Phi_01`, the objective is convex in `cos(theta)`, and only
/// the extreme points `theta in {0, pi}` are evaluated. Otherwise the full
/// grid-plus-refinement maximization runs.
pub fn phase_max_rhs(
    ch: &Channel,
    beta: f64,
    delta: f64,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<ThetaMax> {
    require_qubit_input(ch)?;
    if beta < 0.0 || delta < 0.0 || !beta.is_finite() || !delta.is_finite() {
        return Err(MoplabError::Dimension(format!(
            "weights must be finite and nonnegative, got beta = {beta}, delta = {delta}"
        )));
    }
    let b00 = ch.block(0, 0);
    let b11 = ch.block(1, 1);
    let b01 = ch.block(0, 1);
    let b10 = ch.block(1, 0);
    let root = (beta * delta).sqrt();

    let mut base = ComplexMatrix::zeros(ch.d_out(), ch.d_out());
    base.add_scaled(Complex64::new(beta, 0.0), &b00);
    base.add_scaled(Complex64::new(delta, 0.0), &b11);

    let eval = |theta: f64| -> f64 {
        let mut m = base.clone();
        let phase = Complex64::from_polar(root, theta);
        m.add_scaled(phase, &b10);
        m.add_scaled(phase.conj(), &b01);
        schatten_norm(&m, q).expect("square matrix")
    };

    let scale = b01.max_abs();
    if b01.hermitian_defect() <= HERMITIAN_INPUT_TOL * (1.0 + scale) {
        let at0 = eval(0.0);
        let at_pi = eval(PI);
        Ok(if at0 >= at_pi {
            ThetaMax { value: at0, theta_star: 0.0 }
        } else {
            ThetaMax { value: at_pi, theta_star: PI }
        })
    } else {
        Ok(maximize_theta(eval, opts.theta_grid))
    }
}

fn norms_of_diagonal_blocks(
    rho: &BipartiteBlockState,
    q: &SchattenOrder,
) -> Result<(f64, f64)> {
    let beta = schatten_norm(&rho.block_b().hermitize(), q)?;
    let delta = schatten_norm(&rho.block_d().hermitize(), q)?;
    Ok((beta, delta))
}

fn output_norm_on_state(
    ch: &Channel,
    rho: &BipartiteBlockState,
    q: &SchattenOrder,
) -> Result<f64> {
    let out = ch.apply_tensor_id(rho)?;
    schatten_norm(&out.hermitize(), q)
}

/// `||(Phi (x) 1)(rho)||_q <= nu_q(Phi) (||B||_q + ||D||_q)` for a CP map
/// on qubit inputs.
pub fn check_purity_diagonal_bound(
    ch: &Channel,
    rho: &BipartiteBlockState,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    require_cp(ch)?;
    require_qubit_input(ch)?;
    let (beta, delta) = norms_of_diagonal_blocks(rho, q)?;
    let lhs = output_norm_on_state(ch, rho, q)?;
    let nu = nu_q(ch, q, &opts.mop)?;
    let rhs = nu.value * (beta + delta);
    let params = params_from([
        ("beta", format!("{beta:.17e}")),
        ("delta", format!("{delta:.17e}")),
        ("nu_q", format!("{:.17e}", nu.value)),
        ("state_dim", rho.dim().to_string()),
    ]);
    Ok(CheckReport::upper_bound(
        "purity-diagonal",
        q,
        lhs,
        rhs,
        opts.tol,
        params,
        || Witness {
            note: "output norm exceeds the diagonal-block bound".into(),
            items: [
                ("choi".to_string(), matrix_to_json(ch.choi())),
                ("rho".to_string(), matrix_to_json(&rho.assembled())),
            ]
            .into_iter()
            .collect(),
        },
    ))
}

/// `||(Phi (x) 1)(rho)||_q <= max_theta ||...||_q` — the phase-envelope
/// bound. This is the conjectured sharper form; `holds = false` with a
/// large gap is a legitimate outcome, not an error.
pub fn check_phase_envelope_bound(
    ch: &Channel,
    rho: &BipartiteBlockState,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    require_cp(ch)?;
    require_qubit_input(ch)?;
    let (beta, delta) = norms_of_diagonal_blocks(rho, q)?;
    let lhs = output_norm_on_state(ch, rho, q)?;
    let envelope = phase_max_rhs(ch, beta, delta, q, opts)?;
    let params = params_from([
        ("beta", format!("{beta:.17e}")),
        ("delta", format!("{delta:.17e}")),
        ("theta_star", format!("{:.17e}", envelope.theta_star)),
        ("state_dim", rho.dim().to_string()),
    ]);
    Ok(CheckReport::upper_bound(
        "phase-envelope",
        q,
        lhs,
        envelope.value,
        opts.tol,
        params,
        || Witness {
            note: "conjecture-violating witness for the phase-envelope bound".into(),
            items: [
                ("choi".to_string(), matrix_to_json(ch.choi())),
                ("rho".to_string(), matrix_to_json(&rho.assembled())),
            ]
            .into_iter()
            .collect(),
        },
    ))
}

/// `||G1 (x) X1 + G2 (x) X2||_{2q} <= max_theta ||a G1 + e^{i theta} b G2||_{2q}`
/// with `a = ||X1||_{2q}`, `b = ||X2||_{2q}`.
///
/// The extreme-point fast path (theta in {0, pi}) applies when both `G`s
/// are Hermitian and `2q >= 2`, where the objective is convex in
/// `cos(theta)` along the real axis and phase symmetry pins the maximum
/// there; otherwise the angle is maximized on a grid.
pub fn check_sqrt_factor_bound(
    g1: &ComplexMatrix,
    g2: &ComplexMatrix,
    x1: &ComplexMatrix,
    x2: &ComplexMatrix,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    if g1.rows() != g2.rows() || g1.cols() != g2.cols() {
        return Err(MoplabError::Dimension(format!(
            "factor blocks G differ in shape: {}x{} vs {}x{}",
            g1.rows(),
            g1.cols(),
            g2.rows(),
            g2.cols()
        )));
    }
    if x1.rows() != x2.rows() || x1.cols() != x2.cols() {
        return Err(MoplabError::Dimension(format!(
            "factor blocks X differ in shape: {}x{} vs {}x{}",
            x1.rows(),
            x1.cols(),
            x2.rows(),
            x2.cols()
        )));
    }
    let q2 = q.doubled();
    let mut w = kron(g1, x1);
    w.add_scaled(Complex64::new(1.0, 0.0), &kron(g2, x2));
    let lhs = schatten_norm(&w, &q2)?;

    let a = schatten_norm(x1, &q2)?;
    let b = schatten_norm(x2, &q2)?;
    let eval = |theta: f64| -> f64 {
        let mut m = g1.scale(Complex64::new(a, 0.0));
        m.add_scaled(Complex64::from_polar(b, theta), g2);
        schatten_norm(&m, &q2).expect("fixed shape")
    };

    let g_scale = g1.max_abs().max(g2.max_abs());
    let hermitian_pair = g1.hermitian_defect() <= HERMITIAN_INPUT_TOL * (1.0 + g_scale)
        && g2.hermitian_defect() <= HERMITIAN_INPUT_TOL * (1.0 + g_scale);
    let envelope = if hermitian_pair && q2.value() >= 2.0 {
        let at0 = eval(0.0);
        let at_pi = eval(PI);
        if at0 >= at_pi {
            ThetaMax { value: at0, theta_star: 0.0 }
        } else {
            ThetaMax { value: at_pi, theta_star: PI }
        }
    } else {
        maximize_theta(eval, opts.theta_grid)
    };

    let params = params_from([
        ("x1_norm", format!("{a:.17e}")),
        ("x2_norm", format!("{b:.17e}")),
        ("theta_star", format!("{:.17e}", envelope.theta_star)),
        ("two_q", q2.to_string()),
    ]);
    Ok(CheckReport::upper_bound(
        "sqrt-factor",
        q,
        lhs,
        envelope.value,
        opts.tol,
        params,
        || Witness {
            note: "conjecture-violating witness for the square-root factor bound".into(),
            items: [
                ("g1".to_string(), matrix_to_json(g1)),
                ("g2".to_string(), matrix_to_json(g2)),
                ("x1".to_string(), matrix_to_json(x1)),
                ("x2".to_string(), matrix_to_json(x2)),
            ]
            .into_iter()
            .collect(),
        },
    ))
}

/// Signed margin of the diagonal family at exponent `p`:
/// `((1+b)^p + (1-b)^p)(1 + b^p) - 2 (1+b^2)^p`, which is `rhs^p - lhs^p`
/// of the square-root factor bound at `2q = p`. Negative inside the
/// violation window, zero at `p = 2` and at the threshold exponent.
pub fn threshold_gap(b: f64, p: f64) -> f64 {
    ((1.0 + b).powf(p) + (1.0 - b).powf(p)) * (1.0 + b.powf(p))
        - 2.0 * (1.0 + b * b).powf(p)
}

/// The threshold exponent `p0 > 2` where the diagonal family stops
/// violating the square-root factor bound: the root of
/// [`threshold_gap`]`(b, .)` in `(2, 64]`, found by scanning for a sign
/// change and bisecting to 1e-13.
///
/// For `b < 1e-6` the family degenerates and no root is reported.
pub fn threshold_exponent(b: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&b) || b == 0.0 {
        return Err(MoplabError::Unsupported(format!(
            "family parameter must lie in (0, 1), got {b}"
        )));
    }
    if b < 1e-6 {
        return Err(MoplabError::NoRoot { b });
    }
    const STEP: f64 = 1e-3;
    const P_MAX: f64 = 64.0;
    let mut p = 2.0 + STEP;
    let mut prev = threshold_gap(b, p);
    let mut seen_negative = prev < 0.0;
    while p < P_MAX {
        let next = (p + STEP).min(P_MAX);
        let f_next = threshold_gap(b, next);
        if seen_negative && prev < 0.0 && f_next >= 0.0 {
            // Bracketed: bisect [p, next].
            let (mut lo, mut hi) = (p, next);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if threshold_gap(b, mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        if f_next < 0.0 {
            seen_negative = true;
        }
        p = next;
        prev = f_next;
    }
    Err(MoplabError::NoRoot { b })
}

/// The diagonal two-parameter family `G1 = X1 = Diag(1, b)`,
/// `G2 = X2 = Diag(b, -1)` that violates the square-root factor bound
/// exactly for `2 < 2q < p0(b)`.
#[derive(Clone, Debug)]
pub struct CounterexampleFamily {
    pub b: f64,
    /// Upper edge of the violation window in the `2q` axis.
    pub p0: f64,
}

impl CounterexampleFamily {
    pub fn new(b: f64) -> Result<Self> {
        let p0 = threshold_exponent(b)?;
        Ok(CounterexampleFamily { b, p0 })
    }

    pub fn g1(&self) -> ComplexMatrix {
        ComplexMatrix::diagonal(&[Complex64::new(1.0, 0.0), Complex64::new(self.b, 0.0)])
    }

    pub fn g2(&self) -> ComplexMatrix {
        ComplexMatrix::diagonal(&[Complex64::new(self.b, 0.0), Complex64::new(-1.0, 0.0)])
    }

    pub fn x1(&self) -> ComplexMatrix {
        self.g1()
    }

    pub fn x2(&self) -> ComplexMatrix {
        self.g2()
    }

    /// Run the square-root factor check at norm order `2q = two_q`.
    pub fn check_at(&self, two_q: f64, opts: &CheckOptions) -> Result<CheckReport> {
        let q = SchattenOrder::new(0.5 * two_q)?;
        let mut report =
            check_sqrt_factor_bound(&self.g1(), &self.g2(), &self.x1(), &self.x2(), &q, opts)?;
        report
            .params
            .insert("b".into(), format!("{:.17e}", self.b));
        report
            .params
            .insert("p0".into(), format!("{:.17e}", self.p0));
        Ok(report)
    }
}

/// `Tr |F H F*|^q <= Tr [(F*F)^q (|H|^q + |H*|^q) / 2]` for `q >= 1`.
pub fn check_sandwich_bound(
    f: &ComplexMatrix,
    h: &ComplexMatrix,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    if !h.is_square() || h.rows() != f.cols() {
        return Err(MoplabError::Dimension(format!(
            "need F ({}x{}) times square H ({}x{})",
            f.rows(),
            f.cols(),
            h.rows(),
            h.cols()
        )));
    }
    if q.is_infinite() || q.value() < 1.0 {
        return Err(MoplabError::Unsupported(format!(
            "trace-power comparison needs a finite order q >= 1, got {q}"
        )));
    }
    let qv = q.value();
    let sandwich = &(f * h) * &f.adjoint();
    let lhs = schatten_power_sum(&sandwich, q)?;

    let gram = (&f.adjoint() * f).hermitize();
    let gram_pow = psd_power(&gram, qv)?;
    let habs = psd_power(&(&h.adjoint() * h).hermitize(), 0.5 * qv)?;
    let habs_star = psd_power(&(h * &h.adjoint()).hermitize(), 0.5 * qv)?;
    let mut mix = habs;
    mix.add_scaled(Complex64::new(1.0, 0.0), &habs_star);
    let rhs = 0.5 * (&gram_pow * &mix).trace().re;

    let params = params_from([
        ("f_shape", format!("{}x{}", f.rows(), f.cols())),
        ("h_dim", h.rows().to_string()),
    ]);
    Ok(CheckReport::upper_bound(
        "sandwich",
        q,
        lhs,
        rhs,
        opts.tol,
        params,
        || Witness {
            note: "sandwiched trace power exceeds the symmetrized bound".into(),
            items: [
                ("f".to_string(), matrix_to_json(f)),
                ("h".to_string(), matrix_to_json(h)),
            ]
            .into_iter()
            .collect(),
        },
    ))
}

/// For PSD `A_k` and arbitrary `B_k`, the chain
/// `||sum A_k (x) B_k||_q <= ||sum ||B_k||_q A_k||_q <= ||sum A_k||_q max_j ||B_j||_q`.
/// `lhs`/`rhs` are the chain ends; the middle value is reported as
/// `rhs_weighted`, and `gap` is the worst of the two links, so `holds`
/// means the whole chain is intact.
pub fn check_psd_tensor_bound(
    a_list: &[ComplexMatrix],
    b_list: &[ComplexMatrix],
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    if a_list.is_empty() || a_list.len() != b_list.len() {
        return Err(MoplabError::Dimension(format!(
            "need equal nonempty lists, got {} and {}",
            a_list.len(),
            b_list.len()
        )));
    }
    for a in a_list {
        let (ok, min_eig) = psd_project_check(&a.hermitize(), PSD_TOL)?;
        if !ok || a.hermitian_defect() > HERMITIAN_INPUT_TOL * (1.0 + a.max_abs()) {
            return Err(MoplabError::NotPsd { min_eig });
        }
    }

    let (ra, ca) = (a_list[0].rows(), a_list[0].cols());
    let (rb, cb) = (b_list[0].rows(), b_list[0].cols());
    let mut tensor_sum = ComplexMatrix::zeros(ra * rb, ca * cb);
    let mut a_sum = ComplexMatrix::zeros(ra, ca);
    let mut weighted_sum = ComplexMatrix::zeros(ra, ca);
    let mut b_max = 0.0f64;
    let one = Complex64::new(1.0, 0.0);
    for (a, b) in a_list.iter().zip(b_list) {
        let bn = schatten_norm(b, q)?;
        tensor_sum.add_scaled(one, &kron(a, b));
        a_sum.add_scaled(one, a);
        weighted_sum.add_scaled(Complex64::new(bn, 0.0), a);
        b_max = b_max.max(bn);
    }
    let lhs = schatten_norm(&tensor_sum, q)?;
    let mid = schatten_norm(&weighted_sum.hermitize(), q)?;
    let rhs = schatten_norm(&a_sum.hermitize(), q)? * b_max;

    let gap = (mid - lhs).min(rhs - mid);
    let holds = gap >= -opts.tol * (1.0 + rhs.abs());
    let mut params = params_from([
        ("terms", a_list.len().to_string()),
        ("rhs_weighted", format!("{mid:.17e}")),
    ]);
    params.insert("a_dim".into(), ra.to_string());
    params.insert("b_dim".into(), rb.to_string());
    let witness = if holds {
        None
    } else {
        let mut items = std::collections::BTreeMap::new();
        for (k, (a, b)) in a_list.iter().zip(b_list).enumerate() {
            items.insert(format!("a{k}"), matrix_to_json(a));
            items.insert(format!("b{k}"), matrix_to_json(b));
        }
        Some(Witness {
            note: "a link of the PSD tensor chain is broken".into(),
            items,
        })
    };
    Ok(CheckReport {
        name: "psd-tensor".into(),
        q: q.to_string(),
        lhs,
        rhs,
        gap,
        holds,
        tol: opts.tol,
        params,
        witness,
    })
}

/// For a map whose blocks are all PSD (it need not be CP),
/// `||(Phi (x) 1)(X)||_q <= ||Phi(N)||_q` where `N_ij = ||X_ij||_q`.
pub fn check_block_norm_bound(
    ch: &Channel,
    x: &ComplexMatrix,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    let d = ch.d_in();
    for i in 0..d {
        for j in 0..d {
            let block = ch.block(i, j);
            let defect = block.hermitian_defect();
            let tol = HERMITIAN_INPUT_TOL * (1.0 + block.max_abs());
            if defect > tol {
                return Err(MoplabError::NotHermitian { defect, tol });
            }
            let (ok, min_eig) = psd_project_check(&block.hermitize(), PSD_TOL)?;
            if !ok {
                return Err(MoplabError::NotPsd { min_eig });
            }
        }
    }
    if !x.is_square() || x.rows() % d != 0 || x.rows() == 0 {
        return Err(MoplabError::Dimension(format!(
            "input must be square with side a multiple of {d}, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let m = x.rows() / d;
    let lhs = schatten_norm(&ch.apply_tensor_blocks(x)?, q)?;
    let mut norms = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let xij = x.block(i * m, j * m, m, m);
            norms[(i, j)] = Complex64::new(schatten_norm(&xij, q)?, 0.0);
        }
    }
    let rhs = schatten_norm(&ch.apply(&norms)?.hermitize(), q)?;
    let params = params_from([("inner_dim", m.to_string()), ("d_in", d.to_string())]);
    Ok(CheckReport::upper_bound(
        "block-norm",
        q,
        lhs,
        rhs,
        opts.tol,
        params,
        || Witness {
            note: "blockwise output norm exceeds the block-norm image bound".into(),
            items: [
                ("choi".to_string(), matrix_to_json(ch.choi())),
                ("x".to_string(), matrix_to_json(x)),
            ]
            .into_iter()
            .collect(),
        },
    ))
}

/// The square-root factor bound with `G_i = e^{i theta_i} H_i` for PSD
/// `H_i` — the regime where it is expected to hold for every `q >= 1/2`.
pub fn check_phased_psd_factors(
    h1: &ComplexMatrix,
    h2: &ComplexMatrix,
    theta1: f64,
    theta2: f64,
    x1: &ComplexMatrix,
    x2: &ComplexMatrix,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    for h in [h1, h2] {
        let (ok, min_eig) = psd_project_check(&h.hermitize(), PSD_TOL)?;
        if !ok || h.hermitian_defect() > HERMITIAN_INPUT_TOL * (1.0 + h.max_abs()) {
            return Err(MoplabError::NotPsd { min_eig });
        }
    }
    let g1 = h1.scale(Complex64::from_polar(1.0, theta1));
    let g2 = h2.scale(Complex64::from_polar(1.0, theta2));
    let mut report = check_sqrt_factor_bound(&g1, &g2, x1, x2, q, opts)?;
    report.name = "phased-psd".into();
    report
        .params
        .insert("theta1".into(), format!("{theta1:.17e}"));
    report
        .params
        .insert("theta2".into(), format!("{theta2:.17e}"));
    Ok(report)
}

/// `||(Phi (x) 1)(rho)||_q <= nu_q(Phi) ||Tr_1 rho||_q` for an explicitly
/// separable `rho = sum_k sigma_k (x) B_k`.
pub fn check_separable_output_bound(
    ch: &Channel,
    components: &[(ComplexMatrix, ComplexMatrix)],
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    require_cp(ch)?;
    if components.is_empty() {
        return Err(MoplabError::Dimension("no product components given".into()));
    }
    let d = ch.d_in();
    let m = components[0].1.rows();
    let one = Complex64::new(1.0, 0.0);
    let mut rho = ComplexMatrix::zeros(d * m, d * m);
    let mut reduced = ComplexMatrix::zeros(m, m);
    for (k, (sigma, bk)) in components.iter().enumerate() {
        if sigma.rows() != d || !sigma.is_square() || bk.rows() != m || !bk.is_square() {
            return Err(MoplabError::Dimension(format!(
                "component {k} has shapes {}x{} and {}x{}",
                sigma.rows(),
                sigma.cols(),
                bk.rows(),
                bk.cols()
            )));
        }
        let tr = sigma.trace().re;
        if (tr - 1.0).abs() > 1e-8 || sigma.trace().im.abs() > 1e-8 {
            return Err(MoplabError::Dimension(format!(
                "component {k} state has trace {tr:.12}, expected 1"
            )));
        }
        for p in [sigma, bk] {
            let (ok, min_eig) = psd_project_check(&p.hermitize(), PSD_TOL)?;
            if !ok {
                return Err(MoplabError::NotPsd { min_eig });
            }
        }
        rho.add_scaled(one, &kron(sigma, bk));
        reduced.add_scaled(one, bk);
    }
    let lhs = schatten_norm(&ch.apply_tensor_blocks(&rho)?.hermitize(), q)?;
    let nu = nu_q(ch, q, &opts.mop)?;
    let rhs = nu.value * schatten_norm(&reduced.hermitize(), q)?;
    let params = params_from([
        ("terms", components.len().to_string()),
        ("nu_q", format!("{:.17e}", nu.value)),
    ]);
    Ok(CheckReport::upper_bound(
        "separable",
        q,
        lhs,
        rhs,
        opts.tol,
        params,
        || {
            let mut items = std::collections::BTreeMap::new();
            items.insert("choi".to_string(), matrix_to_json(ch.choi()));
            items.insert("rho".to_string(), matrix_to_json(&rho));
            Witness {
                note: "separable state exceeds the reduced-state bound".into(),
                items,
            }
        },
    ))
}

/// Equality `nu_q(Phi (x) Omega) = nu_q(Phi) nu_q(Omega)` for `Omega`
/// carrying an entanglement-breaking certificate. The `>=` direction holds
/// for any pair, so the reported gap measures only how far the optimizer's
/// joint value sits below the product.
pub fn check_eb_multiplicativity(
    ch: &Channel,
    eb: &Channel,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    require_cp(ch)?;
    require_cp(eb)?;
    let verdict = is_entanglement_breaking(eb);
    if verdict.status != EbStatus::EntanglementBreaking {
        return Err(MoplabError::Unsupported(format!(
            "second map lacks an entanglement-breaking certificate \
             (status {:?}, certificate {})",
            verdict.status, verdict.certificate
        )));
    }
    let joint = nu_q_tensor(ch, eb, q, &opts.mop)?;
    let left = nu_q(ch, q, &opts.mop)?;
    let right = nu_q(eb, q, &opts.mop)?;
    let lhs = joint.value;
    let rhs = left.value * right.value;
    let params = params_from([
        ("nu_first", format!("{:.17e}", left.value)),
        ("nu_second", format!("{:.17e}", right.value)),
        ("certificate", verdict.certificate.clone()),
        ("evaluations", joint.evaluations.to_string()),
    ]);
    Ok(CheckReport::equality(
        "eb-multiplicativity",
        q,
        lhs,
        rhs,
        opts.tol,
        params,
        || Witness {
            note: "joint purity deviates from the product of factor purities".into(),
            items: [
                ("choi_first".to_string(), matrix_to_json(ch.choi())),
                ("choi_second".to_string(), matrix_to_json(eb.choi())),
            ]
            .into_iter()
            .collect(),
        },
    ))
}

/// The phase-envelope bound on a block-Toeplitz state `[[B, C], [C*, B]]`,
/// with `beta = delta = ||B||_q`. Valid for any linear map with a
/// Hermitian Choi matrix; CP is not required.
pub fn check_toeplitz_output_bound(
    ch: &Channel,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    require_qubit_input(ch)?;
    let rho = BipartiteBlockState::from_blocks(b.clone(), c.clone(), b.clone())?;
    let beta = schatten_norm(&b.hermitize(), q)?;
    let lhs = output_norm_on_state(ch, &rho, q)?;
    let envelope = phase_max_rhs(ch, beta, beta, q, opts)?;
    let params = params_from([
        ("beta", format!("{beta:.17e}")),
        ("theta_star", format!("{:.17e}", envelope.theta_star)),
        ("cp", ch.is_cp().to_string()),
    ]);
    Ok(CheckReport::upper_bound(
        "toeplitz",
        q,
        lhs,
        envelope.value,
        opts.tol,
        params,
        || Witness {
            note: "block-Toeplitz state exceeds the phase-envelope bound".into(),
            items: [
                ("choi".to_string(), matrix_to_json(ch.choi())),
                ("b".to_string(), matrix_to_json(b)),
                ("c".to_string(), matrix_to_json(c)),
            ]
            .into_iter()
            .collect(),
        },
    ))
}

/// `-X <= Delta <= X` for `X = Phi_00 + Phi_11`, `Delta = Phi_00 - Phi_11`
/// of a CP map on qubit inputs — equivalently, both diagonal Choi blocks
/// are PSD. `lhs` is the worst negativity found (zero when both hold).
pub fn check_block_difference_bound(ch: &Channel, opts: &CheckOptions) -> Result<CheckReport> {
    require_cp(ch)?;
    require_qubit_input(ch)?;
    let upper = ch.block(0, 0).scale(Complex64::new(2.0, 0.0));
    let lower = ch.block(1, 1).scale(Complex64::new(2.0, 0.0));
    let min_plus = hermitian_eigenvalues(&upper.hermitize())?
        .first()
        .copied()
        .unwrap_or(0.0);
    let min_minus = hermitian_eigenvalues(&lower.hermitize())?
        .first()
        .copied()
        .unwrap_or(0.0);
    let lhs = (-min_plus.min(min_minus)).max(0.0);
    let holds = lhs <= opts.tol;
    let params = params_from([
        ("min_eig_x_plus_delta", format!("{min_plus:.17e}")),
        ("min_eig_x_minus_delta", format!("{min_minus:.17e}")),
    ]);
    Ok(CheckReport {
        name: "block-difference".into(),
        q: "-".into(),
        lhs,
        rhs: 0.0,
        gap: -lhs,
        holds,
        tol: opts.tol,
        params,
        witness: if holds {
            None
        } else {
            Some(Witness {
                note: "a diagonal Choi block has a negative eigenvalue".into(),
                items: [("choi".to_string(), matrix_to_json(ch.choi()))]
                    .into_iter()
                    .collect(),
            })
        },
    })
}
