//! JSON interchange for matrices, channels, states and reports.
//!
//! Every document is a JSON object with a `format` tag and a `version`
//! number. Matrices are stored dense, row-major, each entry as an
//! `[re, im]` pair; serde_json prints the shortest decimal that round-trips,
//! so a save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::bipartite::BipartiteBlockState;
use crate::channel::Channel;
use crate::error::{MoplabError, Result};
use crate::mat::{Complex64, ComplexMatrix};
use crate::report::CheckReport;
use crate::toeplitz::ToeplitzDecomposition;

/// Document-format version written by this build.
pub const FORMAT_VERSION: u64 = 1;

/// Matrix in interchange form: `{"rows": r, "cols": c, "entries": [[re, im], ...]}`.
pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    let entries: Vec<Value> = (0..m.rows())
        .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
        .map(|(i, j)| {
            let z = m[(i, j)];
            json!([z.re, z.im])
        })
        .collect();
    json!({ "rows": m.rows(), "cols": m.cols(), "entries": entries })
}

pub fn matrix_from_json(v: &Value) -> Result<ComplexMatrix> {
    let obj = v
        .as_object()
        .ok_or_else(|| MoplabError::Format("matrix: expected a JSON object".into()))?;
    let rows = field_usize(obj, "rows")?;
    let cols = field_usize(obj, "cols")?;
    let entries = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| MoplabError::Format("matrix: missing entries array".into()))?;
    if entries.len() != rows * cols {
        return Err(MoplabError::Format(format!(
            "matrix: {} entries for a {rows}x{cols} shape",
            entries.len()
        )));
    }
    let mut data = Vec::with_capacity(entries.len());
    for e in entries {
        let pair = e
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| MoplabError::Format("matrix: entry is not an [re, im] pair".into()))?;
        let re = pair[0]
            .as_f64()
            .ok_or_else(|| MoplabError::Format("matrix: non-numeric entry".into()))?;
        let im = pair[1]
            .as_f64()
            .ok_or_else(|| MoplabError::Format("matrix: non-numeric entry".into()))?;
        data.push(Complex64::new(re, im));
    }
    ComplexMatrix::from_vec(rows, cols, data)
}

/// `{"format": "moplab/matrix", ...}` — a bare matrix (used by `norm`).
pub fn matrix_document(m: &ComplexMatrix) -> Value {
    json!({
        "format": "moplab/matrix",
        "version": FORMAT_VERSION,
        "matrix": matrix_to_json(m),
    })
}

/// `{"format": "moplab/channel", ...}` — Choi matrix plus shape and the
/// measured CP/TP flags (informational; they are recomputed on load).
pub fn channel_document(ch: &Channel) -> Value {
    json!({
        "format": "moplab/channel",
        "version": FORMAT_VERSION,
        "d_in": ch.d_in(),
        "d_out": ch.d_out(),
        "cp": ch.is_cp(),
        "tp": ch.is_tp(),
        "choi": matrix_to_json(ch.choi()),
    })
}

pub fn channel_from_document(v: &Value) -> Result<Channel> {
    let obj = expect_format(v, "moplab/channel")?;
    let d_in = field_usize(obj, "d_in")?;
    let d_out = field_usize(obj, "d_out")?;
    let choi = matrix_from_json(
        obj.get("choi")
            .ok_or_else(|| MoplabError::Format("channel: missing choi".into()))?,
    )?;
    Channel::from_choi(d_in, d_out, choi)
}

/// `{"format": "moplab/bipartite", ...}` — assembled 2d x 2d matrix.
pub fn bipartite_document(state: &BipartiteBlockState) -> Value {
    json!({
        "format": "moplab/bipartite",
        "version": FORMAT_VERSION,
        "d": state.dim(),
        "matrix": matrix_to_json(&state.assembled()),
    })
}

pub fn bipartite_from_document(v: &Value) -> Result<BipartiteBlockState> {
    let obj = expect_format(v, "moplab/bipartite")?;
    let d = field_usize(obj, "d")?;
    let m = matrix_from_json(
        obj.get("matrix")
            .ok_or_else(|| MoplabError::Format("bipartite: missing matrix".into()))?,
    )?;
    if m.rows() != 2 * d {
        return Err(MoplabError::Format(format!(
            "bipartite: matrix is {}x{} but d = {d}",
            m.rows(),
            m.cols()
        )));
    }
    BipartiteBlockState::from_matrix(&m)
}

/// `{"format": "moplab/toeplitz-input", ...}` — the pair (B, C).
pub fn toeplitz_input_document(b: &ComplexMatrix, c: &ComplexMatrix) -> Value {
    json!({
        "format": "moplab/toeplitz-input",
        "version": FORMAT_VERSION,
        "b": matrix_to_json(b),
        "c": matrix_to_json(c),
    })
}

pub fn toeplitz_input_from_document(v: &Value) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let obj = expect_format(v, "moplab/toeplitz-input")?;
    let b = matrix_from_json(
        obj.get("b")
            .ok_or_else(|| MoplabError::Format("toeplitz-input: missing b".into()))?,
    )?;
    let c = matrix_from_json(
        obj.get("c")
            .ok_or_else(|| MoplabError::Format("toeplitz-input: missing c".into()))?,
    )?;
    Ok((b, c))
}

/// `{"format": "moplab/toeplitz-decomposition", ...}` — list of (theta, P).
pub fn decomposition_document(dec: &ToeplitzDecomposition) -> Value {
    let terms: Vec<Value> = dec
        .terms()
        .iter()
        .map(|(theta, p)| json!({ "theta": theta, "p": matrix_to_json(p) }))
        .collect();
    json!({
        "format": "moplab/toeplitz-decomposition",
        "version": FORMAT_VERSION,
        "terms": terms,
    })
}

pub fn decomposition_from_document(v: &Value) -> Result<ToeplitzDecomposition> {
    let obj = expect_format(v, "moplab/toeplitz-decomposition")?;
    let raw = obj
        .get("terms")
        .and_then(Value::as_array)
        .ok_or_else(|| MoplabError::Format("decomposition: missing terms".into()))?;
    let mut terms = Vec::with_capacity(raw.len());
    for t in raw {
        let theta = t
            .get("theta")
            .and_then(Value::as_f64)
            .ok_or_else(|| MoplabError::Format("decomposition: missing theta".into()))?;
        let p = matrix_from_json(
            t.get("p")
                .ok_or_else(|| MoplabError::Format("decomposition: missing p".into()))?,
        )?;
        terms.push((theta, p));
    }
    ToeplitzDecomposition::from_terms(terms)
}

/// `{"format": "moplab/report", ...}` — a single check report.
pub fn report_document(report: &CheckReport) -> Value {
    json!({
        "format": "moplab/report",
        "version": FORMAT_VERSION,
        "report": serde_json::to_value(report).expect("report serializes"),
    })
}

pub fn report_from_document(v: &Value) -> Result<CheckReport> {
    let obj = expect_format(v, "moplab/report")?;
    let report = obj
        .get("report")
        .ok_or_else(|| MoplabError::Format("report: missing payload".into()))?;
    Ok(serde_json::from_value(report.clone())?)
}

/// Write a document as pretty JSON with a trailing newline.
pub fn save_document(path: &Path, doc: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_document(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// The `format` tag of a loaded document, for dispatch.
pub fn document_format(v: &Value) -> Result<&str> {
    v.get("format")
        .and_then(Value::as_str)
        .ok_or_else(|| MoplabError::Format("document has no format tag".into()))
}

/// Load a matrix from either a bare matrix document or anything carrying a
/// top-level `matrix` field (state and bipartite documents qualify).
pub fn any_matrix_from_document(v: &Value) -> Result<ComplexMatrix> {
    if let Some(m) = v.get("matrix") {
        return matrix_from_json(m);
    }
    if v.get("entries").is_some() {
        return matrix_from_json(v);
    }
    Err(MoplabError::Format(format!(
        "document of format {:?} carries no matrix",
        document_format(v).unwrap_or("<untagged>")
    )))
}

fn expect_format<'a>(v: &'a Value, want: &str) -> Result<&'a Map<String, Value>> {
    let obj = v
        .as_object()
        .ok_or_else(|| MoplabError::Format("expected a JSON object".into()))?;
    let format = document_format(v)?;
    if format != want {
        return Err(MoplabError::Format(format!(
            "expected a {want} document, found {format}"
        )));
    }
    let version = obj.get("version").and_then(Value::as_u64).unwrap_or(0);
    if version > FORMAT_VERSION {
        return Err(MoplabError::Format(format!(
            "{want} version {version} is newer than supported {FORMAT_VERSION}"
        )));
    }
    Ok(obj)
}

fn field_usize(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| MoplabError::Format(format!("missing integer field {key}")))
}
