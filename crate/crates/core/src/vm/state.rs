use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::contract::{Program, Storage, RESERVED_PREFIX};

pub type Key = Vec<BigInt>;

/// Integer slots addressed by `(variable, key)`. Scalars use the empty key.
/// A key is defined once written, even with zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Slots {
    arity: BTreeMap<String, usize>,
    data: BTreeMap<String, BTreeMap<Key, BigInt>>,
}

impl Slots {
    fn declare(&mut self, name: &str, arity: usize) {
        self.arity.insert(name.to_string(), arity);
        self.data.entry(name.to_string()).or_default();
    }

    pub fn arity(&self, var: &str) -> Option<usize> {
        self.arity.get(var).copied()
    }

    pub fn get(&self, var: &str, key: &[BigInt]) -> BigInt {
        self.data
            .get(var)
            .and_then(|m| m.get(key))
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    /// Previous value, `None` if the key was undefined.
    pub fn set(&mut self, var: &str, key: Key, value: BigInt) -> Option<BigInt> {
        self.data.entry(var.to_string()).or_default().insert(key, value)
    }

    fn unset(&mut self, var: &str, key: &[BigInt]) {
        if let Some(m) = self.data.get_mut(var) {
            m.remove(key);
        }
    }

    /// Defined keys in ascending order.
    pub fn entries(&self, var: &str) -> impl Iterator<Item = (&Key, &BigInt)> {
        self.data.get(var).into_iter().flat_map(|m| m.iter())
    }

    pub fn defined_count(&self, var: &str) -> usize {
        self.data.get(var).map_or(0, |m| m.len())
    }

    pub fn vars(&self) -> impl Iterator<Item = (&String, usize)> {
        self.arity.iter().map(|(k, v)| (k, *v))
    }

    fn clear_values(&mut self) {
        for m in self.data.values_mut() {
            m.clear();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotChange {
    pub var: String,
    pub key: Key,
    pub before: BigInt,
    pub after: BigInt,
}

/// Persistent contract state with an undo journal for transaction revert.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateStore {
    slots: Slots,
    journal: Vec<(String, Key, Option<BigInt>)>,
}

impl StateStore {
    /// All persistent variables of `program`, undefined everywhere.
    pub fn new(program: &Program) -> Self {
        let mut slots = Slots::default();
        for d in &program.decls {
            if d.storage == Storage::Persistent {
                slots.declare(&d.name, d.arity);
            }
        }
        StateStore {
            slots,
            journal: Vec::new(),
        }
    }

    pub fn slots(&self) -> &Slots {
        &self.slots
    }

    pub fn get(&self, var: &str, key: &[BigInt]) -> BigInt {
        self.slots.get(var, key)
    }

    /// Journaled; a later revert of the current transaction undoes it.
    pub fn set(&mut self, var: &str, key: Key, value: BigInt) {
        let prev = self.slots.set(var, key.clone(), value);
        self.journal.push((var.to_string(), key, prev));
    }

    pub(crate) fn begin(&mut self) {
        self.journal.clear();
    }

    pub(crate) fn rollback(&mut self) {
        while let Some((var, key, prev)) = self.journal.pop() {
            match prev {
                Some(v) => {
                    self.slots.set(&var, key, v);
                }
                None => self.slots.unset(&var, &key),
            }
        }
    }

    /// Ends the transaction, returning every slot whose value or definedness
    /// changed, sorted by address.
    pub(crate) fn commit(&mut self) -> Vec<SlotChange> {
        let mut first: BTreeMap<(String, Key), Option<BigInt>> = BTreeMap::new();
        for (var, key, prev) in self.journal.drain(..) {
            first.entry((var, key)).or_insert(prev);
        }
        first
            .into_iter()
            .filter_map(|((var, key), prev)| {
                let after = self.slots.get(&var, &key);
                match prev {
                    Some(before) if before == after => None,
                    prev => Some(SlotChange {
                        before: prev.unwrap_or_else(BigInt::zero),
                        var,
                        key,
                        after,
                    }),
                }
            })
            .collect()
    }

    /// Canonical JSON: sorted keys, decimal strings. Scalars map to a value,
    /// maps to a list of `[key, value]` pairs in key order.
    pub fn snapshot(&self) -> Value {
        self.snapshot_filtered(|_| true)
    }

    /// Snapshot of user-declared variables only, leaving out names generated
    /// by instrumentation.
    pub fn user_snapshot(&self) -> Value {
        self.snapshot_filtered(|v| !v.starts_with(RESERVED_PREFIX))
    }

    fn snapshot_filtered(&self, keep: impl Fn(&str) -> bool) -> Value {
        let mut out = Map::new();
        for (var, arity) in self.slots.vars() {
            if !keep(var) {
                continue;
            }
            let v = if arity == 0 {
                Value::String(self.slots.get(var, &[]).to_string())
            } else {
                Value::Array(
                    self.slots
                        .entries(var)
                        .map(|(k, v)| {
                            let k: Vec<String> = k.iter().map(|i| i.to_string()).collect();
                            json!([k, v.to_string()])
                        })
                        .collect(),
                )
            };
            out.insert(var.clone(), v);
        }
        Value::Object(out)
    }
}

/// Transaction-scoped arena; zeroed at the start of every transaction.
#[derive(Debug, Clone, Default)]
pub struct Memory {
    pub(crate) slots: Slots,
}

impl Memory {
    pub fn new(program: &Program) -> Self {
        let mut slots = Slots::default();
        for d in &program.decls {
            if d.storage == Storage::Memory {
                slots.declare(&d.name, d.arity);
            }
        }
        Memory { slots }
    }

    pub fn reset(&mut self) {
        self.slots.clear_values();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::parse_contract;

    fn store() -> StateStore {
        StateStore::new(
            &parse_contract("contract C { state b: map^1; state s: int; memory m: map^1; }")
                .unwrap(),
        )
    }

    #[test]
    fn rollback_restores_definedness() {
        let mut st = store();
        st.set("b", vec![1.into()], 5.into());
        st.begin();
        let before = st.snapshot();
        st.set("b", vec![1.into()], 7.into());
        st.set("b", vec![2.into()], 0.into());
        st.set("s", vec![], 3.into());
        st.rollback();
        assert_eq!(st.snapshot(), before);
        assert_eq!(st.slots().defined_count("b"), 1);
    }

    #[test]
    fn commit_reports_changes_including_zero_writes() {
        let mut st = store();
        st.begin();
        st.set("b", vec![2.into()], 0.into());
        st.set("s", vec![], 3.into());
        st.set("s", vec![], 0.into());
        let d = st.commit();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].var, "b");
        assert_eq!(d[1].after, BigInt::zero());
    }

    #[test]
    fn snapshot_is_canonical() {
        let mut st = store();
        st.set("b", vec![10.into()], 1.into());
        st.set("b", vec![2.into()], 4.into());
        assert_eq!(
            serde_json::to_string(&st.snapshot()).unwrap(),
            r#"{"b":[[["2"],"4"],[["10"],"1"]],"s":"0"}"#
        );
    }
}
