//! Turning JSON documents into checker inputs.
//!
//! Two document shapes feed `check`: a `moplab/check-input` whose `inputs`
//! object names the matrices and scalars for one checker, and a
//! `moplab/report` whose witness items carry the inputs that produced a
//! violation. Field names agree between the two, so a witness bundle
//! written by `search` replays directly.

use std::str::FromStr;

use serde_json::Value;

use moplab::checks::{self, CheckOptions};
use moplab::io::matrix_from_json;
use moplab::{
    BipartiteBlockState, Channel, CheckReport, ComplexMatrix, MoplabError, SchattenOrder,
};

type Items = std::collections::BTreeMap<String, Value>;
type Result<T> = moplab::Result<T>;

fn matrix_field(items: &Items, key: &str) -> Result<ComplexMatrix> {
    let v = items
        .get(key)
        .ok_or_else(|| MoplabError::Format(format!("missing input field `{key}`")))?;
    matrix_from_json(v)
}

fn scalar_field(items: &Items, key: &str) -> Result<f64> {
    items
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| MoplabError::Format(format!("missing numeric input field `{key}`")))
}

/// A channel given as its Choi matrix under `key`, with the input dimension
/// taken from a sibling `d_in` field (default 2).
fn channel_field(items: &Items, key: &str) -> Result<Channel> {
    let choi = matrix_field(items, key)?;
    let d_in = items.get("d_in").and_then(Value::as_u64).unwrap_or(2) as usize;
    if d_in == 0 || choi.rows() % d_in != 0 {
        return Err(MoplabError::Format(format!(
            "Choi side {} is not divisible by d_in = {d_in}",
            choi.rows()
        )));
    }
    Channel::from_choi(d_in, choi.rows() / d_in, choi)
}

/// Matrices stored as `prefix0`, `prefix1`, ... without gaps.
fn matrix_series(items: &Items, prefix: &str) -> Result<Vec<ComplexMatrix>> {
    let mut out = Vec::new();
    while let Some(v) = items.get(&format!("{prefix}{}", out.len())) {
        out.push(matrix_from_json(v)?);
    }
    if out.is_empty() {
        return Err(MoplabError::Format(format!(
            "no `{prefix}0`, `{prefix}1`, ... fields found"
        )));
    }
    Ok(out)
}

fn separable_components(items: &Items) -> Result<Vec<(ComplexMatrix, ComplexMatrix)>> {
    let arr = items
        .get("components")
        .and_then(Value::as_array)
        .ok_or_else(|| {
            MoplabError::Format(
                "the separable check needs a `components` array of {sigma, block} objects; \
                 a recorded witness carries only the assembled state and cannot be replayed"
                    .into(),
            )
        })?;
    let mut out = Vec::with_capacity(arr.len());
    for (k, entry) in arr.iter().enumerate() {
        let obj = entry
            .as_object()
            .ok_or_else(|| MoplabError::Format(format!("component {k} is not an object")))?;
        let sigma = obj
            .get("sigma")
            .ok_or_else(|| MoplabError::Format(format!("component {k} lacks `sigma`")))?;
        let block = obj
            .get("block")
            .ok_or_else(|| MoplabError::Format(format!("component {k} lacks `block`")))?;
        out.push((matrix_from_json(sigma)?, matrix_from_json(block)?));
    }
    Ok(out)
}

/// All check names `run_check_on_items` (and the sweep) understand.
pub const CHECK_NAMES: &[&str] = &[
    "purity-diagonal",
    "phase-envelope",
    "sqrt-factor",
    "phased-psd",
    "sandwich",
    "psd-tensor",
    "block-norm",
    "separable",
    "eb-multiplicativity",
    "toeplitz",
    "block-difference",
];

/// Run the named checker against input fields.
pub fn run_check_on_items(
    name: &str,
    items: &Items,
    q: &SchattenOrder,
    opts: &CheckOptions,
) -> Result<CheckReport> {
    match name {
        "purity-diagonal" => {
            let ch = channel_field(items, "choi")?;
            let rho = BipartiteBlockState::from_matrix(&matrix_field(items, "rho")?)?;
            checks::check_purity_diagonal_bound(&ch, &rho, q, opts)
        }
        "phase-envelope" => {
            let ch = channel_field(items, "choi")?;
            let rho = BipartiteBlockState::from_matrix(&matrix_field(items, "rho")?)?;
            checks::check_phase_envelope_bound(&ch, &rho, q, opts)
        }
        "sqrt-factor" => {
            let g1 = matrix_field(items, "g1")?;
            let g2 = matrix_field(items, "g2")?;
            let x1 = matrix_field(items, "x1")?;
            let x2 = matrix_field(items, "x2")?;
            checks::check_sqrt_factor_bound(&g1, &g2, &x1, &x2, q, opts)
        }
        "phased-psd" => {
            if items.contains_key("h1") {
                let h1 = matrix_field(items, "h1")?;
                let h2 = matrix_field(items, "h2")?;
                let t1 = scalar_field(items, "theta1")?;
                let t2 = scalar_field(items, "theta2")?;
                let x1 = matrix_field(items, "x1")?;
                let x2 = matrix_field(items, "x2")?;
                checks::check_phased_psd_factors(&h1, &h2, t1, t2, &x1, &x2, q, opts)
            } else {
                // Witness replay: the phases are already folded into the
                // recorded factors.
                let g1 = matrix_field(items, "g1")?;
                let g2 = matrix_field(items, "g2")?;
                let x1 = matrix_field(items, "x1")?;
                let x2 = matrix_field(items, "x2")?;
                let mut report = checks::check_sqrt_factor_bound(&g1, &g2, &x1, &x2, q, opts)?;
                report.name = "phased-psd".into();
                Ok(report)
            }
        }
        "sandwich" => {
            let f = matrix_field(items, "f")?;
            let h = matrix_field(items, "h")?;
            checks::check_sandwich_bound(&f, &h, q, opts)
        }
        "psd-tensor" => {
            let a = matrix_series(items, "a")?;
            let b = matrix_series(items, "b")?;
            checks::check_psd_tensor_bound(&a, &b, q, opts)
        }
        "block-norm" => {
            let ch = channel_field(items, "choi")?;
            let x = matrix_field(items, "x")?;
            checks::check_block_norm_bound(&ch, &x, q, opts)
        }
        "separable" => {
            let ch = channel_field(items, "choi")?;
            let components = separable_components(items)?;
            checks::check_separable_output_bound(&ch, &components, q, opts)
        }
        "eb-multiplicativity" => {
            let first = channel_field(items, "choi_first")?;
            let second = channel_field(items, "choi_second")?;
            checks::check_eb_multiplicativity(&first, &second, q, opts)
        }
        "toeplitz" => {
            let ch = channel_field(items, "choi")?;
            let b = matrix_field(items, "b")?;
            let c = matrix_field(items, "c")?;
            checks::check_toeplitz_output_bound(&ch, &b, &c, q, opts)
        }
        "block-difference" => {
            let ch = channel_field(items, "choi")?;
            checks::check_block_difference_bound(&ch, opts)
        }
        other => Err(MoplabError::Unsupported(format!(
            "unknown check `{other}`; known checks: {}",
            CHECK_NAMES.join(", ")
        ))),
    }
}

/// Parse the norm order a report or check-input recorded, tolerating the
/// `-` placeholder of q-less checks.
pub fn order_for(name: &str, recorded: &str) -> Result<SchattenOrder> {
    if name == "block-difference" || recorded == "-" {
        return Ok(SchattenOrder::TWO);
    }
    SchattenOrder::from_str(recorded)
}

/// Replay a recorded report: rebuild the checker inputs from its witness
/// items and run the same check again.
pub fn replay_report(report: &CheckReport, opts: &CheckOptions) -> Result<CheckReport> {
    let witness = report.witness.as_ref().ok_or_else(|| {
        MoplabError::Format("the report holds, so it carries no witness to replay".into())
    })?;
    let q = order_for(&report.name, &report.q)?;
    run_check_on_items(&report.name, &witness.items, &q, opts)
}
