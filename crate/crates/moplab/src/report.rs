//! Outcome record for a single inequality check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::norm::SchattenOrder;

/// Default relative tolerance for declaring an inequality satisfied.
pub const CHECK_TOL: f64 = 1e-9;

/// Violations smaller than this (relative) are treated as numerical noise by
/// witness-collecting drivers, not as genuine counterexamples.
pub const WITNESS_TOL: f64 = 1e-8;

/// Everything a checker found out about one instance: the two sides of the
/// comparison, their gap, and the verdict. `gap = rhs - lhs`, and for an
/// upper-bound check `holds` means `gap >= -tol * (1 + |rhs|)`.
///
/// A witness is attached exactly when the check fails, so a failing report
/// can be re-verified from the serialized inputs alone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// Norm order in display form ("2", "1.5", "inf").
    pub q: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub holds: bool,
    pub tol: f64,
    /// Free-form inputs that identify the instance (seeds, dimensions,
    /// family parameters). BTreeMap so serialization order is stable.
    pub params: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Serialized inputs of a failed check, sufficient to reproduce it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub note: String,
    /// Named payloads (matrices, channels, scalars) in their interchange
    /// form.
    pub items: BTreeMap<String, serde_json::Value>,
}

impl CheckReport {
    /// Report for an upper-bound claim `lhs <= rhs`. The witness closure is
    /// invoked only on failure.
    pub fn upper_bound(
        name: &str,
        q: &SchattenOrder,
        lhs: f64,
        rhs: f64,
        tol: f64,
        params: BTreeMap<String, String>,
        witness: impl FnOnce() -> Witness,
    ) -> CheckReport {
        let gap = rhs - lhs;
        let holds = gap >= -tol * (1.0 + rhs.abs());
        CheckReport {
            name: name.to_string(),
            q: q.to_string(),
            lhs,
            rhs,
            gap,
            holds,
            tol,
            params,
            witness: if holds { None } else { Some(witness()) },
        }
    }

    /// Report for an equality claim `lhs = rhs` (used where a theorem gives
    /// both directions and the residual is optimizer-limited).
    pub fn equality(
        name: &str,
        q: &SchattenOrder,
        lhs: f64,
        rhs: f64,
        tol: f64,
        params: BTreeMap<String, String>,
        witness: impl FnOnce() -> Witness,
    ) -> CheckReport {
        let gap = rhs - lhs;
        let holds = gap.abs() <= tol * (1.0 + rhs.abs());
        CheckReport {
            name: name.to_string(),
            q: q.to_string(),
            lhs,
            rhs,
            gap,
            holds,
            tol,
            params,
            witness: if holds { None } else { Some(witness()) },
        }
    }

    /// True when the failure is large enough to be a genuine counterexample
    /// rather than accumulated rounding (relative margin `WITNESS_TOL`).
    pub fn is_strong_violation(&self) -> bool {
        !self.holds && self.gap < -WITNESS_TOL * (1.0 + self.rhs.abs())
    }

    /// One-line human-readable form used by the CLI.
    pub fn summary_line(&self) -> String {
        format!(
            "{name} q={q} lhs={lhs:.12e} rhs={rhs:.12e} gap={gap:+.3e} holds={holds}",
            name = self.name,
            q = self.q,
            lhs = self.lhs,
            rhs = self.rhs,
            gap = self.gap,
            holds = self.holds
        )
    }
}

/// Convenience builder for the `params` map.
pub fn params_from<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w() -> Witness {
        Witness {
            note: "test".into(),
            items: BTreeMap::new(),
        }
    }

    #[test]
    fn upper_bound_verdicts() {
        let q = SchattenOrder::TWO;
        let ok = CheckReport::upper_bound("t", &q, 1.0, 2.0, 1e-9, BTreeMap::new(), w);
        assert!(ok.holds);
        assert!(ok.witness.is_none());
        assert_eq!(ok.gap, 1.0);

        let borderline = CheckReport::upper_bound(
            "t",
            &q,
            1.0 + 1e-12,
            1.0,
            1e-9,
            BTreeMap::new(),
            w,
        );
        assert!(borderline.holds, "sub-tolerance overshoot is not a failure");

        let broken = CheckReport::upper_bound("t", &q, 1.1, 1.0, 1e-9, BTreeMap::new(), w);
        assert!(!broken.holds);
        assert!(broken.witness.is_some(), "failed checks carry a witness");
        assert!(broken.is_strong_violation());
    }

    #[test]
    fn equality_verdicts() {
        let q = SchattenOrder::ONE;
        let ok = CheckReport::equality("e", &q, 1.0 + 1e-7, 1.0, 1e-5, BTreeMap::new(), w);
        assert!(ok.holds);
        let off = CheckReport::equality("e", &q, 1.1, 1.0, 1e-5, BTreeMap::new(), w);
        assert!(!off.holds);
    }

    #[test]
    fn weak_violations_are_not_strong() {
        let q = SchattenOrder::TWO;
        let r = CheckReport::upper_bound("t", &q, 1.0 + 5e-9, 1.0, 1e-9, BTreeMap::new(), w);
        assert!(!r.holds);
        assert!(!r.is_strong_violation());
    }

    #[test]
    fn serializes_without_witness_field_when_held() {
        let q = SchattenOrder::TWO;
        let r = CheckReport::upper_bound("t", &q, 1.0, 2.0, 1e-9, BTreeMap::new(), w);
        let s = serde_json::to_string(&r).unwrap();
        assert!(!s.contains("witness"));
        let back: CheckReport = serde_json::from_str(&s).unwrap();
        assert!(back.holds);
        assert_eq!(back.q, "2");
    }
}
