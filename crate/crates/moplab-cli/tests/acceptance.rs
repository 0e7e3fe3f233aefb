//! Release acceptance suite. Each test covers one numbered criterion and
//! prints a single `ACCEPTANCE <n> <label>: PASS` or `: FAIL` line (shown by
//! the harness on failure, or with `--nocapture`). Tolerances are pinned as
//! constants here so a change in the library defaults cannot silently
//! loosen the bar.

use moplab::mat::{is_psd, psd_sqrt, ComplexMatrix};
use moplab::rng::{ginibre, random_psd, random_state, random_unitary, stream_rng};
use moplab::{
    check_phase_envelope_bound, check_phased_psd_factors, check_psd_tensor_bound,
    check_sandwich_bound, check_toeplitz_output_bound, decompose_block_toeplitz,
    is_entanglement_breaking, nu_q, nu_q_tensor, nu_s, schatten_norm, threshold_gap,
    verify_decomposition, Channel, CheckOptions, Complex64, CounterexampleFamily, EbStatus,
    KrausSet, MopOptions, SchattenOrder,
};
use moplab::bipartite::{random_bipartite_state, random_pure_bipartite_state};
use moplab::channel::{random_cp_map, random_tp_channel};
use moplab::eb::random_eb_channel;
use rand::Rng;
use std::f64::consts::TAU;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::Instant;

// Criterion 1: norm-layer identities, relative.
const NORM_REL_TOL: f64 = 1e-9;
// Criterion 1: Schatten order 2 against the Frobenius oracle.
const FROBENIUS_TOL: f64 = 1e-10;
// Criteria 2, 4, 5, 6: inequality checks, relative.
const INEQUALITY_TOL: f64 = 1e-9;
// Criterion 3: bisection vs. fine-scan threshold exponent.
const THRESHOLD_AGREEMENT_TOL: f64 = 1e-9;
// Criterion 3: the violation inside the window must be clear of noise.
const VIOLATION_FLOOR: f64 = 1e-8;
// Criterion 7: purity agreement between a map and its conjugated companion.
const CONJUGATION_NU_TOL: f64 = 2e-6;
// Criterion 7: extended-output norm identity, relative.
const CONJUGATION_NORM_TOL: f64 = 1e-9;
// Criterion 8: complementary-channel entry formula, relative.
const COMPLEMENT_ENTRY_TOL: f64 = 1e-11;
// Criterion 9: two-sided multiplicativity gap over certified partners.
const MULTIPLICATIVITY_TOL: f64 = 1e-5;
// Criterion 9: the one-sided product lower bound for arbitrary pairs.
const ONE_SIDED_TOL: f64 = 1e-7;
// Criterion 10: optimizer against the depolarizing closed form.
const CLOSED_FORM_TOL: f64 = 1e-7;
// Criterion 10: Tsallis-style entropy limit at q = 1 + 1e-4.
const ENTROPY_LIMIT_TOL: f64 = 1e-3;
// Criterion 11: reconstruction residuals of the block-Toeplitz terms.
const RESIDUAL_TOL: f64 = 1e-8;

fn verdict(n: u32, label: &str, body: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    match outcome {
        Ok(()) => println!("ACCEPTANCE {n} {label}: PASS"),
        Err(cause) => {
            println!("ACCEPTANCE {n} {label}: FAIL");
            resume_unwind(cause);
        }
    }
}

fn order(x: f64) -> SchattenOrder {
    if x.is_infinite() {
        SchattenOrder::INFINITY
    } else {
        SchattenOrder::new(x).unwrap()
    }
}

fn opts() -> CheckOptions {
    CheckOptions {
        tol: INEQUALITY_TOL,
        ..CheckOptions::default()
    }
}

/// A non-CP map whose Choi matrix is Hermitian — the widest class the
/// block-Toeplitz output bound is stated for.
fn hermitian_choi_map(seed: u64) -> Channel {
    let mut rng = stream_rng(seed, 0xa3);
    let mut h = ginibre(4, 4, &mut rng).hermitize();
    if seed % 2 == 0 {
        // Push clearly outside the PSD cone on even seeds.
        for i in 0..4 {
            h[(i, i)] -= Complex64::new(1.25, 0.0);
        }
    }
    Channel::from_choi(2, 2, h.hermitize()).unwrap()
}

/// A PSD state with equal diagonal blocks, built as a positive combination
/// of phased product terms so the off-diagonal block is genuinely complex.
fn equal_diagonal_state(d: usize, seed: u64) -> (ComplexMatrix, ComplexMatrix) {
    let mut rng = stream_rng(seed, 0xa2);
    let mut b = ComplexMatrix::zeros(d, d);
    let mut c = ComplexMatrix::zeros(d, d);
    for _ in 0..3 {
        let p = random_psd(d, d, false, &mut rng);
        let theta: f64 = rng.gen_range(0.0..TAU);
        b.add_scaled(Complex64::new(1.0, 0.0), &p);
        c.add_scaled(Complex64::from_polar(1.0, theta), &p);
    }
    (b, c)
}

/// An instance inside the constructive decomposition regime: C = B^{1/2} T
/// B^{1/2} with T normal and spectrum in the closed unit disk, B well
/// conditioned.
fn disk_normal_pair(d: usize, seed: u64) -> (ComplexMatrix, ComplexMatrix) {
    let mut rng = stream_rng(seed, 0xa1);
    let mut b = random_psd(d, d, false, &mut rng);
    for i in 0..d {
        b[(i, i)] += Complex64::new(0.5, 0.0);
    }
    let b = b.hermitize();
    let u = random_unitary(d, &mut rng);
    let diag: Vec<Complex64> = (0..d)
        .map(|_| {
            let r: f64 = rng.gen_range(0.0..1.0);
            let a: f64 = rng.gen_range(0.0..TAU);
            Complex64::from_polar(r, a)
        })
        .collect();
    let t = &(&u * &ComplexMatrix::diagonal(&diag)) * &u.adjoint();
    let bs = psd_sqrt(&b).unwrap();
    let c = &(&bs * &t) * &bs;
    (b, c)
}

#[test]
fn criterion_01_norm_layer() {
    verdict(1, "norm-layer", || {
        let started = Instant::now();
        let orders = [1.0, 1.5, 2.0, 2.5, 3.0, f64::INFINITY];
        for seed in 0..1000u64 {
            let n = 1 + (seed as usize) % 8;
            let mut rng = stream_rng(seed, 0xa0);
            let a = ginibre(n, n, &mut rng);
            let b = ginibre(n, n, &mut rng);
            let u = random_unitary(n, &mut rng);
            let v = random_unitary(n, &mut rng);
            let q = order(orders[(seed as usize) % orders.len()]);

            let na = schatten_norm(&a, &q).unwrap();
            let nb = schatten_norm(&b, &q).unwrap();

            let sum = schatten_norm(&(&a + &b), &q).unwrap();
            assert!(
                sum <= na + nb + NORM_REL_TOL * (1.0 + na + nb),
                "triangle inequality failed at seed {seed}, q {q}: {sum} vs {na} + {nb}"
            );

            let rotated = schatten_norm(&(&(&u * &a) * &v), &q).unwrap();
            assert!(
                (rotated - na).abs() <= NORM_REL_TOL * (1.0 + na),
                "unitary invariance failed at seed {seed}, q {q}: {rotated} vs {na}"
            );

            let left = schatten_norm(&(&a * &a.adjoint()), &q).unwrap();
            let right = schatten_norm(&(&a.adjoint() * &a), &q).unwrap();
            assert!(
                (left - right).abs() <= NORM_REL_TOL * (1.0 + right),
                "AA* vs A*A failed at seed {seed}, q {q}: {left} vs {right}"
            );

            // Cauchy-Schwarz for unitarily invariant norms:
            // |||A* B|||^2 <= |||A* A||| * |||B* B|||.
            let cross = schatten_norm(&(&a.adjoint() * &b), &q).unwrap();
            let bb = schatten_norm(&(&b.adjoint() * &b), &q).unwrap();
            let cs_rhs = right * bb;
            assert!(
                cross * cross <= cs_rhs + NORM_REL_TOL * (1.0 + cs_rhs),
                "Cauchy-Schwarz failed at seed {seed}, q {q}: {} vs {cs_rhs}",
                cross * cross
            );

            let frob = a.frobenius_norm();
            let two = schatten_norm(&a, &SchattenOrder::TWO).unwrap();
            assert!(
                (two - frob).abs() <= FROBENIUS_TOL * (1.0 + frob),
                "order 2 drifted from Frobenius at seed {seed}: {two} vs {frob}"
            );
        }
        let elapsed = started.elapsed().as_secs_f64();
        assert!(elapsed < 10.0, "norm layer sweep took {elapsed:.2} s");
    });
}

#[test]
fn criterion_02_diagonal_block_bound() {
    verdict(2, "diagonal-block-bound", || {
        let orders = [
            order(1.0),
            order(1.5),
            order(2.0),
            order(3.0),
            SchattenOrder::INFINITY,
        ];
        for seed in 0..500u64 {
            let d = 1 + (seed as usize) % 4;
            let mut rng = stream_rng(seed, 0xa4);
            let m = ginibre(2 * d, 2 * d, &mut rng);
            let rho = (&m.adjoint() * &m).hermitize();
            let b = rho.block(0, 0, d, d);
            let dd = rho.block(d, d, d, d);
            for q in &orders {
                let whole = schatten_norm(&rho, q).unwrap();
                let parts =
                    schatten_norm(&b, q).unwrap() + schatten_norm(&dd, q).unwrap();
                assert!(
                    whole <= parts + INEQUALITY_TOL * (1.0 + parts),
                    "block bound failed at seed {seed}, q {q}: {whole} vs {parts}"
                );
            }
        }
    });
}

/// Independent threshold locator: progressively finer forward scans, no
/// bisection. Finds where the margin turns nonnegative again above 2.
fn fine_scan_threshold(b: f64) -> f64 {
    let mut lo = 2.0 + 1e-3;
    let mut hi = 64.0;
    for step in [1e-3, 1e-6, 1e-10] {
        let mut p = lo;
        let mut entered = false;
        loop {
            let g = threshold_gap(b, p);
            if g < 0.0 {
                entered = true;
            } else if entered {
                lo = p - step;
                hi = p;
                break;
            }
            p += step;
            assert!(p <= hi + step, "scan ran past {hi} without a sign change");
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_03_counterexample_family() {
    verdict(3, "counterexample-family", || {
        let started = Instant::now();
        for b in [0.3, 0.5, 0.7] {
            let family = CounterexampleFamily::new(b).unwrap();
            let scanned = fine_scan_threshold(b);
            assert!(
                (family.p0 - scanned).abs() <= THRESHOLD_AGREEMENT_TOL,
                "threshold mismatch at b {b}: bisection {} vs scan {scanned}",
                family.p0
            );

            let inside = family.check_at(0.5 * (2.0 + family.p0), &opts()).unwrap();
            assert!(
                !inside.holds,
                "expected a violation inside the window at b {b}: {}",
                inside.summary_line()
            );
            assert!(
                inside.gap.abs() > VIOLATION_FLOOR * (1.0 + inside.rhs.abs()),
                "window violation at b {b} is below the noise floor: gap {}",
                inside.gap
            );

            let outside = family.check_at(1.1 * family.p0, &opts()).unwrap();
            assert!(
                outside.holds,
                "expected the bound to hold above the window at b {b}: {}",
                outside.summary_line()
            );
        }
        let elapsed = started.elapsed().as_secs_f64();
        assert!(elapsed < 5.0, "family reproduction took {elapsed:.2} s");
    });
}

#[test]
fn criterion_04_envelope_special_cases() {
    verdict(4, "envelope-special-cases", || {
        let orders = [order(1.0), order(1.5), order(2.0), order(3.0)];

        // (a) pure bipartite states under random CP maps.
        for seed in 0..200u64 {
            let ch = random_cp_map(2, 2 + (seed as usize) % 2, 1 + (seed as usize) % 3, seed);
            let rho = random_pure_bipartite_state(2 + (seed as usize) % 3, seed);
            let q = &orders[(seed as usize) % orders.len()];
            let report = check_phase_envelope_bound(&ch, &rho, q, &opts()).unwrap();
            assert!(report.holds, "pure-state case, seed {seed}: {}", report.summary_line());
        }

        // (b) single-Kraus maps on arbitrary states.
        for seed in 0..200u64 {
            let mut rng = stream_rng(seed, 0xa5);
            let k = ginibre(2 + (seed as usize) % 2, 2, &mut rng);
            let ch = Channel::from_kraus(&KrausSet::new(vec![k]).unwrap()).unwrap();
            let rho = random_bipartite_state(2 + (seed as usize) % 3, seed);
            let q = &orders[(seed as usize) % orders.len()];
            let report = check_phase_envelope_bound(&ch, &rho, q, &opts()).unwrap();
            assert!(report.holds, "single-Kraus case, seed {seed}: {}", report.summary_line());
        }

        // (c) the identity map.
        let identity = Channel::identity(2);
        for seed in 0..200u64 {
            let rho = random_bipartite_state(2 + (seed as usize) % 3, seed);
            let q = &orders[(seed as usize) % orders.len()];
            let report = check_phase_envelope_bound(&identity, &rho, q, &opts()).unwrap();
            assert!(report.holds, "identity case, seed {seed}: {}", report.summary_line());
        }

        // (d) equal-diagonal block-Toeplitz states under Hermitian-Choi
        // maps that need not be CP.
        for seed in 0..200u64 {
            let ch = hermitian_choi_map(seed);
            let (b, c) = equal_diagonal_state(2 + (seed as usize) % 2, seed);
            let q = &orders[(seed as usize) % orders.len()];
            let report = check_toeplitz_output_bound(&ch, &b, &c, q, &opts()).unwrap();
            assert!(report.holds, "block-Toeplitz case, seed {seed}: {}", report.summary_line());
        }

        // (e) phased PSD square-root factors, quasi-norm order included.
        let factor_orders = [order(0.75), order(1.0), order(1.5), order(2.0), order(3.0)];
        for seed in 0..200u64 {
            let mut rng = stream_rng(seed, 0xa6);
            let n = 2 + (seed as usize) % 2;
            let m = 2 + (seed as usize) % 3;
            let h1 = random_psd(n, n, false, &mut rng);
            let h2 = random_psd(n, n, false, &mut rng);
            let theta1: f64 = rng.gen_range(0.0..TAU);
            let theta2: f64 = rng.gen_range(0.0..TAU);
            let x1 = ginibre(m, m, &mut rng);
            let x2 = ginibre(m, m, &mut rng);
            let q = &factor_orders[(seed as usize) % factor_orders.len()];
            let report =
                check_phased_psd_factors(&h1, &h2, theta1, theta2, &x1, &x2, q, &opts()).unwrap();
            assert!(report.holds, "phased-factor case, seed {seed}: {}", report.summary_line());
        }
    });
}

#[test]
fn criterion_05_sandwich_bound() {
    verdict(5, "sandwich-bound", || {
        let orders = [order(1.0), order(1.5), order(2.0), order(3.0)];
        for seed in 0..500u64 {
            let n = 2 + (seed as usize) % 3;
            let mut rng = stream_rng(seed, 0xa7);
            let f = ginibre(n, n, &mut rng);
            let h = if seed % 3 == 0 {
                // A deliberately non-normal middle factor: strict upper
                // triangle plus a spread-out diagonal.
                let mut t = ginibre(n, n, &mut rng);
                for i in 0..n {
                    for j in 0..=i {
                        t[(i, j)] = Complex64::new(0.0, 0.0);
                    }
                    t[(i, i)] = Complex64::new(1.0 + i as f64, 0.0);
                }
                t
            } else {
                ginibre(n, n, &mut rng)
            };
            let q = &orders[(seed as usize) % orders.len()];
            let report = check_sandwich_bound(&f, &h, q, &opts()).unwrap();
            assert!(report.holds, "seed {seed}, q {q}: {}", report.summary_line());
        }
    });
}

#[test]
fn criterion_06_psd_tensor_chain() {
    verdict(6, "psd-tensor-chain", || {
        let orders = [
            order(1.0),
            order(1.5),
            order(2.0),
            order(3.0),
            SchattenOrder::INFINITY,
        ];
        for seed in 0..500u64 {
            let mut rng = stream_rng(seed, 0xa8);
            let terms = 1 + (seed as usize) % 3;
            let m = 2 + (seed as usize) % 2;
            let n = 2 + (seed as usize) % 3;
            let a_list: Vec<ComplexMatrix> =
                (0..terms).map(|_| random_psd(m, m, false, &mut rng)).collect();
            let b_list: Vec<ComplexMatrix> = (0..terms).map(|_| ginibre(n, n, &mut rng)).collect();
            let q = &orders[(seed as usize) % orders.len()];
            let report = check_psd_tensor_bound(&a_list, &b_list, q, &opts()).unwrap();
            assert!(
                report.holds,
                "chain broke at seed {seed}, q {q}: {}",
                report.summary_line()
            );
        }
    });
}

#[test]
fn criterion_07_conjugation() {
    verdict(7, "conjugation", || {
        let mop = MopOptions::default();
        let orders = [order(1.5), order(2.0), order(3.0)];
        for seed in 0..50u64 {
            let ch = random_cp_map(2, 2, 1 + (seed as usize) % 3, seed);
            let (tilde, _) = ch.conjugated().unwrap();

            for q in &orders {
                let direct = nu_q(&ch, q, &mop).unwrap().value;
                let flipped = nu_q(&tilde, q, &mop).unwrap().value;
                assert!(
                    (direct - flipped).abs() <= CONJUGATION_NU_TOL,
                    "purity moved under conjugation at seed {seed}, q {q}: {direct} vs {flipped}"
                );
            }

            let rho = random_bipartite_state(2 + (seed as usize) % 2, seed);
            let rho_tilde = rho.conjugated().unwrap();
            let out = ch.apply_tensor_id(&rho).unwrap().hermitize();
            let out_tilde = tilde.apply_tensor_id(&rho_tilde).unwrap().hermitize();
            for q in &orders {
                let a = schatten_norm(&out, q).unwrap();
                let b = schatten_norm(&out_tilde, q).unwrap();
                assert!(
                    (a - b).abs() <= CONJUGATION_NORM_TOL * (1.0 + a),
                    "extended-output norm moved at seed {seed}, q {q}: {a} vs {b}"
                );
            }
        }
    });
}

#[test]
fn criterion_08_complementary_entries() {
    verdict(8, "complementary-entries", || {
        for seed in 0..50u64 {
            let d_out = 2 + (seed as usize) % 2;
            let rank = 1 + (seed as usize) % 3;
            let ch = if seed % 2 == 0 {
                random_tp_channel(2, d_out, rank, seed)
            } else {
                random_cp_map(2, d_out, rank, seed)
            };
            let ks = ch.kraus().unwrap();
            let comp = ks.complementary().unwrap();
            assert_eq!(comp.d_out(), ks.len());

            let rho = random_state(2, 2, seed);
            let out = comp.apply(&rho).unwrap();
            let scale = 1.0 + out.max_abs();
            for k in 0..ks.len() {
                for j in 0..ks.len() {
                    let want = (&(&ks.elements[k] * &rho) * &ks.elements[j].adjoint()).trace();
                    let got = out[(k, j)];
                    assert!(
                        (got - want).norm() <= COMPLEMENT_ENTRY_TOL * scale,
                        "entry ({k},{j}) off at seed {seed}: {got} vs {want}"
                    );
                }
            }
            if ch.is_tp() {
                assert!(comp.is_tp(), "complement lost trace preservation at seed {seed}");
            }
        }
    });
}

#[test]
fn criterion_09_eb_multiplicativity() {
    verdict(9, "eb-multiplicativity", || {
        let started = Instant::now();
        let mop = MopOptions::default();
        let orders = [order(1.5), order(2.0), order(4.0)];

        for seed in 0..20u64 {
            let phi = if seed % 2 == 0 {
                random_tp_channel(2, 2, 1 + (seed as usize) % 3, seed)
            } else {
                random_cp_map(2, 2, 1 + (seed as usize) % 3, seed)
            };
            let omega = random_eb_channel(2, 2, 3, seed);
            let certified = is_entanglement_breaking(&omega);
            assert_eq!(
                certified.status,
                EbStatus::EntanglementBreaking,
                "partner at seed {seed} is not certified: {}",
                certified.certificate
            );

            for q in &orders {
                let left = nu_q(&phi, q, &mop).unwrap().value;
                let right = nu_q(&omega, q, &mop).unwrap().value;
                let joint = nu_q_tensor(&phi, &omega, q, &mop).unwrap().value;
                let product = left * right;
                assert!(
                    (joint - product).abs() <= MULTIPLICATIVITY_TOL,
                    "multiplicativity gap at seed {seed}, q {q}: {joint} vs {product}"
                );
                assert!(
                    joint >= product - ONE_SIDED_TOL,
                    "product bound failed at seed {seed}, q {q}: {joint} vs {product}"
                );
            }
        }

        // The one-sided product bound holds with no structure on the
        // partner at all.
        for seed in 0..10u64 {
            let phi = random_cp_map(2, 2, 1 + (seed as usize) % 2, 100 + seed);
            let omega = random_tp_channel(2, 2, 2, 100 + seed);
            let q = &orders[(seed as usize) % orders.len()];
            let left = nu_q(&phi, q, &mop).unwrap().value;
            let right = nu_q(&omega, q, &mop).unwrap().value;
            let joint = nu_q_tensor(&phi, &omega, q, &mop).unwrap().value;
            assert!(
                joint >= left * right - ONE_SIDED_TOL,
                "product bound failed at seed {seed}, q {q}: {joint} vs {}",
                left * right
            );
        }

        let elapsed = started.elapsed().as_secs_f64();
        assert!(elapsed < 300.0, "multiplicativity sweep took {elapsed:.1} s");
    });
}

#[test]
fn criterion_10_optimizer_closed_forms() {
    verdict(10, "optimizer-closed-forms", || {
        let mop = MopOptions::default();
        for lambda in [0.25, 0.5, 1.0] {
            let ch = Channel::depolarizing_qubit(lambda);
            for qv in [1.5, 2.0, 3.0] {
                let got = nu_q(&ch, &order(qv), &mop).unwrap().value;
                let top = 1.0 - lambda / 2.0;
                let analytic = (top.powf(qv) + (lambda / 2.0).powf(qv)).powf(1.0 / qv);
                assert!(
                    (got - analytic).abs() <= CLOSED_FORM_TOL,
                    "depolarizing lambda {lambda}, q {qv}: {got} vs {analytic}"
                );
            }

            // Near q = 1 the purity recovers the minimal output entropy.
            let qv = 1.0 + 1e-4;
            let near_one = nu_q(&ch, &order(qv), &mop).unwrap().value;
            let tsallis = (1.0 - near_one.powf(qv)) / (qv - 1.0);
            let entropy = nu_s(&ch, &mop).unwrap().value;
            assert!(
                (tsallis - entropy).abs() <= ENTROPY_LIMIT_TOL,
                "entropy limit at lambda {lambda}: {tsallis} vs {entropy}"
            );
        }
    });
}

#[test]
fn criterion_11_toeplitz_decomposition() {
    verdict(11, "toeplitz-decomposition", || {
        let orders = [order(1.0), order(2.0), SchattenOrder::INFINITY];
        for seed in 0..100u64 {
            let d = 2 + (seed as usize) % 2;
            let (b, c) = disk_normal_pair(d, seed);
            let dec = decompose_block_toeplitz(&b, &c).unwrap();
            let report = verify_decomposition(&dec, &b, &c);
            assert!(report.holds, "seed {seed}: {}", report.summary_line());

            let res_b = (&dec.weight_sum() - &b).frobenius_norm() / (1.0 + b.frobenius_norm());
            let res_c = (&dec.phased_sum() - &c).frobenius_norm() / (1.0 + c.frobenius_norm());
            assert!(
                res_b < RESIDUAL_TOL && res_c < RESIDUAL_TOL,
                "reconstruction residual too large at seed {seed}: {res_b:.3e}, {res_c:.3e}"
            );
            for (k, (_, p)) in dec.terms().iter().enumerate() {
                assert!(is_psd(p), "term {k} at seed {seed} is not PSD");
            }

            let ch = random_cp_map(2, 2, 2, seed);
            for q in &orders {
                let bound = check_toeplitz_output_bound(&ch, &b, &c, q, &opts()).unwrap();
                assert!(bound.holds, "seed {seed}, q {q}: {}", bound.summary_line());
            }
        }
    });
}

#[test]
fn criterion_12_sweep_determinism() {
    verdict(12, "sweep-determinism", || {
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("first.csv");
        let second = dir.path().join("second.csv");
        let args = |out: &std::path::Path| {
            vec![
                "sweep".to_string(),
                "--check".to_string(),
                "sqrt-factor,sandwich,psd-tensor".to_string(),
                "--q".to_string(),
                "1.5,2".to_string(),
                "--seed".to_string(),
                "11".to_string(),
                "--samples".to_string(),
                "3".to_string(),
                "--out".to_string(),
                out.display().to_string(),
            ]
        };

        let run = |out: &std::path::Path, threads: Option<&str>| {
            let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_moplab"));
            cmd.args(args(out));
            match threads {
                Some(t) => cmd.env("MOPLAB_THREADS", t),
                None => cmd.env_remove("MOPLAB_THREADS"),
            };
            let status = cmd.status().unwrap();
            assert!(status.success(), "sweep exited with {status}");
        };

        run(&first, None);
        run(&second, Some("2"));

        let bytes_a = std::fs::read(&first).unwrap();
        let bytes_b = std::fs::read(&second).unwrap();
        assert!(!bytes_a.is_empty(), "sweep produced no output");
        assert!(
            bytes_a.starts_with(b"# moplab "),
            "missing provenance header"
        );
        assert_eq!(bytes_a, bytes_b, "rerun changed the sweep bytes");
    });
}
