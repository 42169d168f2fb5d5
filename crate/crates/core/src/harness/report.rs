use std::fmt::Write as _;

use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::vm::{CostCounters, IntMode, Key, Weights};

/// Aggregate results of one trace under one instrumentation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRun {
    pub name: String,
    pub total: CostCounters,
    /// Whether each transaction was committed.
    pub verdicts: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mismatch {
    Verdict {
        tx: usize,
        mode: String,
        expected: bool,
        got: bool,
    },
    Intermediate {
        tx: usize,
        mode: String,
        name: String,
        key: Key,
        expected: BigInt,
        got: BigInt,
    },
    FinalState {
        mode: String,
    },
}

impl Mismatch {
    pub fn to_json(&self) -> Value {
        match self {
            Mismatch::Verdict {
                tx,
                mode,
                expected,
                got,
            } => json!({"kind": "verdict", "tx": tx, "mode": mode, "expected": expected, "got": got}),
            Mismatch::Intermediate {
                tx,
                mode,
                name,
                key,
                expected,
                got,
            } => json!({
                "kind": "intermediate",
                "tx": tx,
                "mode": mode,
                "name": name,
                "key": key.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
                "expected": expected.to_string(),
                "got": got.to_string(),
            }),
            Mismatch::FinalState { mode } => json!({"kind": "final_state", "mode": mode}),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub int_mode: IntMode,
    pub weights: Weights,
    pub tx_count: usize,
    pub modes: Vec<ModeRun>,
    /// Expected commit decision per transaction, when an oracle ran.
    pub oracle: Option<Vec<bool>>,
    pub mismatches: Vec<Mismatch>,
}

impl BenchReport {
    pub fn mode(&self, name: &str) -> Option<&ModeRun> {
        self.modes.iter().find(|m| m.name == name)
    }

    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// `num.sload+sstore / den.sload+sstore`.
    pub fn access_ratio(&self, num: &str, den: &str) -> Option<f64> {
        let (a, b) = (self.mode(num)?, self.mode(den)?);
        Some(a.total.state_accesses() as f64 / b.total.state_accesses().max(1) as f64)
    }

    /// Ratio of total weighted costs.
    pub fn weighted_ratio(&self, num: &str, den: &str) -> Option<f64> {
        let (a, b) = (self.mode(num)?, self.mode(den)?);
        Some(a.total.weighted(&self.weights) as f64 / b.total.weighted(&self.weights).max(1) as f64)
    }

    fn ratio_pairs(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for (n, d) in [("naive", "delta"), ("naive_opt", "delta_opt")] {
            if self.mode(n).is_some() && self.mode(d).is_some() {
                out.push((format!("{n}/{d}.state_accesses"), n.to_string(), d.to_string()));
            }
        }
        for m in ["delta", "delta_opt", "naive", "naive_opt"] {
            if self.mode(m).is_some() && self.mode("none").is_some() {
                out.push((format!("{m}/none.weighted"), m.to_string(), "none".to_string()));
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut ratios = serde_json::Map::new();
        for (label, n, d) in self.ratio_pairs() {
            let r = if label.ends_with("weighted") {
                self.weighted_ratio(&n, &d)
            } else {
                self.access_ratio(&n, &d)
            };
            ratios.insert(label, json!(r));
        }
        let modes: serde_json::Map<String, Value> = self
            .modes
            .iter()
            .map(|m| {
                let mut cost = m.total.to_json();
                cost["weighted"] = json!(m.total.weighted(&self.weights));
                (
                    m.name.clone(),
                    json!({
                        "cost": cost,
                        "accepted": m.verdicts.iter().filter(|v| **v).count(),
                        "verdicts": m.verdicts,
                    }),
                )
            })
            .collect();
        json!({
            "int_mode": self.int_mode.to_string(),
            "tx_count": self.tx_count,
            "modes": modes,
            "oracle": self.oracle,
            "ratios": ratios,
            "mismatches": self.mismatches.iter().map(Mismatch::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>10} {:>10} {:>12} {:>14} {:>9}",
            "mode", "sload", "sstore", "mload", "mstore", "arith", "weighted", "accepted"
        );
        for m in &self.modes {
            let c = &m.total;
            let _ = writeln!(
                out,
                "{:<10} {:>10} {:>10} {:>10} {:>10} {:>12} {:>14} {:>9}",
                m.name,
                c.sload,
                c.sstore,
                c.mload,
                c.mstore,
                c.arith,
                c.weighted(&self.weights),
                m.verdicts.iter().filter(|v| **v).count(),
            );
        }
        for (label, n, d) in self.ratio_pairs() {
            let r = if label.ends_with("weighted") {
                self.weighted_ratio(&n, &d)
            } else {
                self.access_ratio(&n, &d)
            };
            let _ = writeln!(out, "{label:<30} {:.2}", r.unwrap_or(f64::NAN));
        }
        let _ = writeln!(out, "mismatches: {}", self.mismatches.len());
        out
    }
}
