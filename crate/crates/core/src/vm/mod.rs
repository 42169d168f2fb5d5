//! Reference interpreter with revert semantics and cost accounting.

mod exec;
mod state;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde_json::{json, Value};
use thiserror::Error;

pub use exec::{execute, run_trace, TraceRun};
pub use state::{Key, Memory, SlotChange, Slots, StateStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntMode {
    /// Arbitrary precision.
    #[default]
    BigInt,
    /// Unsigned 256-bit wraparound. Checked operators revert instead of wrapping.
    Wrap256,
}

impl FromStr for IntMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bigint" => Ok(IntMode::BigInt),
            "wrap256" => Ok(IntMode::Wrap256),
            other => Err(format!("unknown int mode `{other}` (expected bigint or wrap256)")),
        }
    }
}

impl fmt::Display for IntMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntMode::BigInt => "bigint",
            IntMode::Wrap256 => "wrap256",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Weights {
    pub sload: u64,
    pub sstore: u64,
    pub mload: u64,
    pub mstore: u64,
    pub arith: u64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            sload: 100,
            sstore: 100,
            mload: 1,
            mstore: 1,
            arith: 1,
        }
    }
}

impl FromStr for Weights {
    type Err = String;

    /// `sload=100,arith=2`; unnamed counters keep their default weight.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut w = Weights::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected name=value, found `{part}`"))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| format!("bad weight `{value}`"))?;
            match name.trim() {
                "sload" => w.sload = value,
                "sstore" => w.sstore = value,
                "mload" => w.mload = value,
                "mstore" => w.mstore = value,
                "arith" => w.arith = value,
                other => return Err(format!("unknown counter `{other}`")),
            }
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VmConfig {
    pub int_mode: IntMode,
    pub weights: Weights,
    pub depth_limit: usize,
}

impl Default for VmConfig {
    fn default() -> Self {
        VmConfig {
            int_mode: IntMode::BigInt,
            weights: Weights::default(),
            depth_limit: 64,
        }
    }
}

impl VmConfig {
    pub fn wrap256() -> Self {
        VmConfig {
            int_mode: IntMode::Wrap256,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CostCounters {
    pub sload: u64,
    pub sstore: u64,
    pub mload: u64,
    pub mstore: u64,
    pub arith: u64,
}

impl CostCounters {
    pub fn state_accesses(&self) -> u64 {
        self.sload + self.sstore
    }

    pub fn weighted(&self, w: &Weights) -> u64 {
        self.sload * w.sload
            + self.sstore * w.sstore
            + self.mload * w.mload
            + self.mstore * w.mstore
            + self.arith * w.arith
    }

    pub fn add(&mut self, other: &CostCounters) {
        self.sload += other.sload;
        self.sstore += other.sstore;
        self.mload += other.mload;
        self.mstore += other.mstore;
        self.arith += other.arith;
    }

    pub fn to_json(&self) -> Value {
        json!({
            "sload": self.sload,
            "sstore": self.sstore,
            "mload": self.mload,
            "mstore": self.mstore,
            "arith": self.arith,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub sender: BigInt,
    pub function: String,
    pub args: Vec<BigInt>,
}

impl Transaction {
    pub fn new(sender: impl Into<BigInt>, function: &str, args: Vec<BigInt>) -> Self {
        Transaction {
            sender: sender.into(),
            function: function.to_string(),
            args,
        }
    }

    /// Integers are written as decimal strings so 256-bit values survive.
    pub fn to_json(&self) -> Value {
        json!({
            "sender": self.sender.to_string(),
            "function": self.function,
            "args": self.args.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        })
    }

    /// Accepts integers as JSON numbers or decimal strings.
    pub fn from_json(v: &Value) -> Result<Self, TraceError> {
        let int = |v: &Value| -> Result<BigInt, TraceError> {
            match v {
                Value::String(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| TraceError::Field(format!("bad integer `{s}`"))),
                Value::Number(n) => n
                    .to_string()
                    .parse()
                    .map_err(|_| TraceError::Field(format!("non-integer number `{n}`"))),
                other => Err(TraceError::Field(format!("expected integer, found {other}"))),
            }
        };
        let sender = int(v.get("sender").ok_or(TraceError::Field("missing sender".into()))?)?;
        let function = v
            .get("function")
            .and_then(Value::as_str)
            .ok_or(TraceError::Field("missing function".into()))?
            .to_string();
        let args = match v.get("args") {
            None => Vec::new(),
            Some(Value::Array(a)) => a.iter().map(int).collect::<Result<_, _>>()?,
            Some(_) => return Err(TraceError::Field("args must be a list".into())),
        };
        Ok(Transaction {
            sender,
            function,
            args,
        })
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Field(String),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
}

/// Reads a JSON Lines trace; blank lines are skipped.
pub fn read_trace(text: &str) -> Result<Vec<Transaction>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(line).map_err(|source| TraceError::Json {
            line: i + 1,
            source,
        })?;
        out.push(Transaction::from_json(&v).map_err(|e| TraceError::Line {
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_trace(trace: &[Transaction]) -> String {
    let mut out = String::new();
    for tx in trace {
        out.push_str(&tx.to_json().to_string());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RevertReason {
    AssertFailed,
    DivisionByZero,
    Overflow,
    DepthLimitExceeded,
}

impl fmt::Display for RevertReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RevertReason::AssertFailed => "assert failed",
            RevertReason::DivisionByZero => "division by zero",
            RevertReason::Overflow => "overflow",
            RevertReason::DepthLimitExceeded => "depth limit exceeded",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    UnknownEntry(String),
    ArityMismatch { expected: usize, found: usize },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::UnknownEntry(n) => write!(f, "unknown entry function `{n}`"),
            RejectReason::ArityMismatch { expected, found } => {
                write!(f, "expected {expected} arguments, found {found}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Accepted,
    Reverted(RevertReason),
    /// Never executed: the transaction does not name a valid entry call.
    Rejected(RejectReason),
}

impl Status {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Status::Accepted)
    }

    pub fn to_json(&self) -> Value {
        match self {
            Status::Accepted => json!("accepted"),
            Status::Reverted(r) => json!({"reverted": r.to_string()}),
            Status::Rejected(r) => json!({"rejected": r.to_string()}),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    pub status: Status,
    pub cost: CostCounters,
    /// Empty unless accepted.
    pub state_delta: Vec<SlotChange>,
}

impl ExecOutcome {
    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status.to_json(),
            "cost": self.cost.to_json(),
            "state_delta": self.state_delta.iter().map(|c| json!({
                "var": c.var,
                "key": c.key.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
                "before": c.before.to_string(),
                "after": c.after.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_parse_partial() {
        let w: Weights = "sload=5, arith=0".parse().unwrap();
        assert_eq!(w.sload, 5);
        assert_eq!(w.arith, 0);
        assert_eq!(w.sstore, 100);
        assert!("gas=1".parse::<Weights>().is_err());
    }

    #[test]
    fn trace_round_trip_with_big_values() {
        let big: BigInt = BigInt::from(1) << 255;
        let trace = vec![
            Transaction::new(3, "transfer", vec![4.into(), big.clone()]),
            Transaction::new(1, "noop", vec![]),
        ];
        let text = write_trace(&trace);
        assert_eq!(read_trace(&text).unwrap(), trace);
        let numeric = read_trace(r#"{"sender": 7, "function": "f", "args": [1, "2"]}"#).unwrap();
        assert_eq!(numeric[0].args, vec![BigInt::from(1), BigInt::from(2)]);
    }

    #[test]
    fn trace_errors_name_the_line() {
        let err = read_trace("\n{\"function\": \"f\"}").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
    }
}
