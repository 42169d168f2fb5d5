//! Trace generation, a brute-force invariant oracle, and runners that compare
//! instrumentation modes against it.

mod oracle;
mod report;
mod tracegen;

use num_bigint::BigInt;
use num_traits::Zero;

pub use oracle::{oracle_check, OracleResult, Table};
pub use report::{BenchReport, Mismatch, ModeRun};
pub use tracegen::{gen_trace, TraceGenError, TraceKind, TraceSpec};

use crate::contract::Program;
use crate::instrument::{compile, InstrumentError, InstrumentMode, Options, INTERMEDIATE_PREFIX};
use crate::spec_lang::TypedSpec;
use crate::vm::{execute, StateStore, Transaction, VmConfig};

struct Runner {
    name: String,
    program: Program,
    state: StateStore,
    run: ModeRun,
}

impl Runner {
    fn new(name: &str, program: Program) -> Self {
        Runner {
            name: name.to_string(),
            state: StateStore::new(&program),
            program,
            run: ModeRun {
                name: name.to_string(),
                total: Default::default(),
                verdicts: Vec::new(),
            },
        }
    }

    fn step(&mut self, tx: &Transaction, config: &VmConfig) -> bool {
        let o = execute(&mut self.state, &self.program, tx, config);
        self.run.total.add(&o.cost);
        let ok = o.status.is_accepted();
        self.run.verdicts.push(ok);
        ok
    }
}

fn build(program: &Program, spec: &TypedSpec, name: &str, opts: Options) -> Result<Runner, InstrumentError> {
    Ok(Runner::new(name, compile(program, spec, &opts)?.program))
}

/// Compares maintained intermediates in `state` with their recomputation.
fn check_intermediates(tx: usize, r: &Runner, spec: &TypedSpec, out: &mut Vec<Mismatch>) {
    let expect = oracle_check(&r.state, spec).intermediates;
    for (name, table) in &expect {
        let stored = format!("{INTERMEDIATE_PREFIX}{name}");
        let slots = r.state.slots();
        let mut keys: Vec<_> = table.keys().cloned().collect();
        keys.extend(slots.entries(&stored).map(|(k, _)| k.clone()));
        keys.sort();
        keys.dedup();
        for key in keys {
            let want = table.get(&key).cloned().unwrap_or_else(BigInt::zero);
            let got = slots.get(&stored, &key);
            if want != got {
                out.push(Mismatch::Intermediate {
                    tx,
                    mode: r.name.clone(),
                    name: name.clone(),
                    key,
                    expected: want,
                    got,
                });
            }
        }
    }
}

/// Runs `trace` uninstrumented, naive, delta, and optimized delta, and checks
/// every commit decision against the oracle.
///
/// The expected decision for a transaction is: it commits when uninstrumented,
/// and the oracle holds on the resulting state. The reference state only
/// advances on expected commits, so it stays aligned with a correct
/// instrumented contract. The `none` mode commits everything it can, as plain
/// execution would.
pub fn differential_test(
    program: &Program,
    spec: &TypedSpec,
    trace: &[Transaction],
    config: &VmConfig,
) -> Result<BenchReport, InstrumentError> {
    let mut none = Runner::new("none", program.clone());
    let mut reference = StateStore::new(program);
    let mut modes = vec![
        build(program, spec, "naive", Options::mode(InstrumentMode::Naive))?,
        build(program, spec, "delta", Options::mode(InstrumentMode::Delta))?,
        build(program, spec, "delta_opt", Options::optimized())?,
    ];
    let mut expected = Vec::with_capacity(trace.len());
    let mut mismatches = Vec::new();
    for (i, tx) in trace.iter().enumerate() {
        none.step(tx, config);
        let mut next = reference.clone();
        let ok = execute(&mut next, program, tx, config).status.is_accepted()
            && oracle_check(&next, spec).satisfied;
        if ok {
            reference = next;
        }
        expected.push(ok);
        for r in &mut modes {
            let got = r.step(tx, config);
            if got != ok {
                mismatches.push(Mismatch::Verdict {
                    tx: i,
                    mode: r.name.clone(),
                    expected: ok,
                    got,
                });
            }
            if got && r.name.starts_with("delta") {
                check_intermediates(i, r, spec, &mut mismatches);
            }
        }
    }
    let want = reference.user_snapshot();
    for r in &modes {
        if r.state.user_snapshot() != want {
            mismatches.push(Mismatch::FinalState { mode: r.name.clone() });
        }
    }
    let mut runs = vec![none.run];
    runs.extend(modes.into_iter().map(|r| r.run));
    Ok(BenchReport {
        int_mode: config.int_mode,
        weights: config.weights,
        tx_count: trace.len(),
        modes: runs,
        oracle: Some(expected),
        mismatches,
    })
}

/// Runs `trace` under every mode with and without optimizations and reports
/// costs. Any disagreement between instrumented modes is a mismatch.
pub fn bench_compare(
    program: &Program,
    spec: &TypedSpec,
    trace: &[Transaction],
    config: &VmConfig,
) -> Result<BenchReport, InstrumentError> {
    let opt = |mode| Options {
        mode,
        prune: true,
        cache: true,
    };
    let mut modes = vec![
        Runner::new("none", program.clone()),
        build(program, spec, "naive", Options::mode(InstrumentMode::Naive))?,
        build(program, spec, "delta", Options::mode(InstrumentMode::Delta))?,
        build(program, spec, "naive_opt", opt(InstrumentMode::Naive))?,
        build(program, spec, "delta_opt", opt(InstrumentMode::Delta))?,
    ];
    let mut mismatches = Vec::new();
    for (i, tx) in trace.iter().enumerate() {
        let verdicts: Vec<bool> = modes.iter_mut().map(|r| r.step(tx, config)).collect();
        for (r, v) in modes.iter().zip(&verdicts).skip(2) {
            if *v != verdicts[1] {
                mismatches.push(Mismatch::Verdict {
                    tx: i,
                    mode: r.name.clone(),
                    expected: verdicts[1],
                    got: *v,
                });
            }
        }
    }
    let want = modes[1].state.user_snapshot();
    for r in &modes[2..] {
        if r.state.user_snapshot() != want {
            mismatches.push(Mismatch::FinalState { mode: r.name.clone() });
        }
    }
    Ok(BenchReport {
        int_mode: config.int_mode,
        weights: config.weights,
        tx_count: trace.len(),
        modes: modes.into_iter().map(|r| r.run).collect(),
        oracle: None,
        mismatches,
    })
}
