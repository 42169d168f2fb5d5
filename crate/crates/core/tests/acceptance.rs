//! End-to-end acceptance checks. Each prints one PASS/FAIL line; the test
//! fails if any criterion does.

use std::io::Write;
use std::time::Instant;

use deltaguard::contract::{parse_contract, parse_instrumented, pretty_print, Program};
use deltaguard::harness::{bench_compare, differential_test, gen_trace, BenchReport, TraceKind, TraceSpec};
use deltaguard::instrument::{cache_state_vars, compile, InstrumentMode, Options};
use deltaguard::spec_lang::{check_spec, parse_spec, print_spec, TypedSpec};
use deltaguard::vm::{execute, run_trace, StateStore, Status, VmConfig};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn load(name: &str) -> (Program, TypedSpec) {
    let p = parse_contract(&fixture(&format!("{name}.mini"))).unwrap();
    let s = check_spec(&parse_spec(&fixture(&format!("{name}.inv"))).unwrap(), &p).unwrap();
    (p, s)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn verdicts<'a>(r: &'a BenchReport, m: &str) -> &'a [bool] {
    &r.mode(m).unwrap().verdicts
}

fn double_vote() -> Outcome {
    let (p, s) = load("vote");
    let t = gen_trace(&TraceSpec::new(TraceKind::AttackDoubleVote, 0, 0, 0)).unwrap();
    let r = differential_test(&p, &s, &t, &VmConfig::default()).unwrap();
    let want = [true, true, false];
    let pass = r.passed()
        && r.oracle.as_deref() == Some(&want[..])
        && verdicts(&r, "none") == [true, true, true]
        && verdicts(&r, "naive") == want
        && verdicts(&r, "delta") == want;
    outcome(
        pass,
        format!(
            "oracle {:?}, none {:?}, naive {:?}, delta {:?}",
            r.oracle.as_deref().unwrap(),
            verdicts(&r, "none"),
            verdicts(&r, "naive"),
            verdicts(&r, "delta")
        ),
    )
}

fn batch_overflow() -> Outcome {
    let (p, s) = load("erc20");
    let t = gen_trace(&TraceSpec::new(TraceKind::AttackBatchOverflow, 0, 0, 0)).unwrap();
    let config = VmConfig::wrap256();
    let r = differential_test(&p, &s, &t, &config).unwrap();
    let delta = compile(&p, &s, &Options::mode(InstrumentMode::Delta)).unwrap().program;
    let mut st = StateStore::new(&delta);
    let status = execute(&mut st, &delta, &t[0], &config).status;
    let pass = r.passed()
        && r.oracle.as_deref() == Some(&[false][..])
        && verdicts(&r, "none") == [true]
        && verdicts(&r, "delta") == [false]
        && verdicts(&r, "naive") == [false];
    outcome(pass, format!("uninstrumented accepts; delta status {status:?}"))
}

fn oracle_equivalence(reports: &mut Vec<BenchReport>) -> Outcome {
    let mut txs = 0;
    let mut verdict = 0;
    let mut inter = 0;
    let mut rejected = 0;
    for (name, kind, accounts) in [
        ("erc20", TraceKind::Erc20Transfer, 12),
        ("erc721", TraceKind::Erc721Transfer, 12),
        ("vote", TraceKind::Erc1202Vote, 20),
    ] {
        let (p, s) = load(name);
        for seed in 1..=5 {
            let t = gen_trace(&TraceSpec::new(kind, accounts, 700, seed).with_fault_rate(0.1)).unwrap();
            let r = differential_test(&p, &s, &t, &VmConfig::default()).unwrap();
            txs += t.len();
            rejected += r.oracle.as_ref().unwrap().iter().filter(|v| !**v).count();
            for m in &r.mismatches {
                match m {
                    deltaguard::harness::Mismatch::Intermediate { .. } => inter += 1,
                    _ => verdict += 1,
                }
            }
            reports.push(r);
        }
    }
    outcome(
        txs >= 10_000 && verdict == 0 && inter == 0,
        format!("{txs} txs, {rejected} expected rejections, {verdict} verdict/state mismatches, {inter} intermediate mismatches"),
    )
}

fn naive_blowup(report: &BenchReport) -> Outcome {
    let opt = report.access_ratio("naive_opt", "delta_opt").unwrap();
    let plain = report.access_ratio("naive", "delta").unwrap();
    outcome(
        opt >= 100.0,
        format!("naive/delta state accesses {opt:.1} with prune+cache, {plain:.1} without"),
    )
}

fn delta_overhead(report: &BenchReport) -> Outcome {
    let opt = report.weighted_ratio("delta_opt", "none").unwrap();
    let plain = report.weighted_ratio("delta", "none").unwrap();
    outcome(
        opt <= 3.0,
        format!("delta/none weighted {opt:.2} with prune+cache, {plain:.2} without"),
    )
}

fn optimization_safety(reports: &[BenchReport]) -> Outcome {
    let differing = reports
        .iter()
        .filter(|r| verdicts(r, "delta") != verdicts(r, "delta_opt"))
        .count();
    let state = reports
        .iter()
        .flat_map(|r| &r.mismatches)
        .filter(|m| matches!(m, deltaguard::harness::Mismatch::FinalState { .. }))
        .count();

    let p = parse_contract(&fixture("vote_cached.mini")).unwrap();
    let (cached, _) = cache_state_vars(&p);
    let mut t = vec![
        deltaguard::vm::Transaction::new(1, "open", vec![1.into(), 2.into(), 30.into()]),
        deltaguard::vm::Transaction::new(1, "open", vec![1.into(), 3.into(), 40.into()]),
    ];
    for v in [2, 3, 2] {
        t.push(deltaguard::vm::Transaction::new(v, "vote", vec![1.into(), 1.into()]));
    }
    let mut a = StateStore::new(&p);
    let mut b = StateStore::new(&cached);
    let ra = run_trace(&mut a, &p, &t, &VmConfig::default());
    let rb = run_trace(&mut b, &cached, &t, &VmConfig::default());
    let same = ra.outcomes.iter().map(|o| &o.status).eq(rb.outcomes.iter().map(|o| &o.status))
        && a.snapshot() == b.snapshot();
    let pass = differing == 0
        && state == 0
        && same
        && rb.total.sload < ra.total.sload
        && rb.total.state_accesses() < ra.total.state_accesses();
    outcome(
        pass,
        format!(
            "{} traces, {differing} verdict differences, {state} state differences; cached vote sload {} -> {}",
            reports.len(),
            ra.total.sload,
            rb.total.sload
        ),
    )
}

fn revert_atomicity() -> Outcome {
    let mut programs = Vec::new();
    for name in ["erc20", "erc721", "vote"] {
        let (p, s) = load(name);
        programs.push(compile(&p, &s, &Options::mode(InstrumentMode::Delta)).unwrap().program);
        programs.push(compile(&p, &s, &Options::optimized()).unwrap().program);
        programs.push(p);
    }
    programs.push(parse_contract(&fixture("cyclic.mini")).unwrap());
    let mut reverts = 0;
    let mut broken = 0;
    for i in 0..1000u64 {
        let p = &programs[i as usize % programs.len()];
        let spec = TraceSpec::custom(p, 5, 20, i).with_fault_rate(0.3);
        let mut st = StateStore::new(p);
        for tx in gen_trace(&spec).unwrap() {
            let before = st.snapshot().to_string();
            let o = execute(&mut st, p, &tx, &VmConfig::default());
            if let Status::Reverted(_) = o.status {
                reverts += 1;
                let after = st.snapshot().to_string();
                if after != before {
                    broken += 1;
                }
            }
        }
    }
    outcome(
        reverts > 0 && broken == 0,
        format!("1000 traces, {reverts} reverts, {broken} changed state"),
    )
}

fn round_trips_program(p: &Program) -> bool {
    let text = pretty_print(p);
    matches!(parse_instrumented(&text), Ok(q) if q == *p && pretty_print(&q) == text)
}

fn round_trips() -> Outcome {
    let mut cases: Vec<(String, bool)> = Vec::new();
    for name in ["erc20", "erc721", "vote", "vote_cached", "cyclic"] {
        let p = parse_contract(&fixture(&format!("{name}.mini"))).unwrap();
        cases.push((format!("{name}.mini"), round_trips_program(&p)));
        cases.push((format!("{name} cached"), round_trips_program(&cache_state_vars(&p).0)));
    }
    for name in ["erc20", "erc721", "vote"] {
        let (p, s) = load(name);
        for mode in [InstrumentMode::Delta, InstrumentMode::Naive] {
            for (prune, cache) in [(false, false), (true, false), (false, true), (true, true)] {
                let out = compile(&p, &s, &Options { mode, prune, cache }).unwrap().program;
                cases.push((format!("{name} {mode} prune={prune} cache={cache}"), round_trips_program(&out)));
            }
        }
        let text = print_spec(&s.spec);
        let ok = parse_spec(&text).ok().as_ref() == Some(&s.spec) && print_spec(&s.spec) == text;
        cases.push((format!("{name}.inv"), ok));
    }
    let failures: Vec<&String> = cases.iter().filter(|(_, ok)| !ok).map(|(l, _)| l).collect();
    outcome(failures.is_empty(), format!("{} round-trips, failures: {failures:?}", cases.len()))
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    let mut run = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let line = format!(
            "{} {n}. {name}: {} ({:.2}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        // Written to the stream directly so it shows even when output is captured.
        let _ = writeln!(std::io::stdout(), "{line}");
        results.push((o.pass, line));
    };

    let mut reports = Vec::new();
    run(1, "double vote nullified", &mut double_vote);
    run(2, "batch overflow nullified", &mut batch_overflow);
    run(3, "oracle equivalence", &mut || oracle_equivalence(&mut reports));

    let (p, s) = load("erc20");
    let t = gen_trace(&TraceSpec::new(TraceKind::Erc20Transfer, 1000, 1000, 42)).unwrap();
    let bench = bench_compare(&p, &s, &t, &VmConfig::default()).unwrap();
    run(4, "naive blow-up", &mut || naive_blowup(&bench));
    run(5, "delta overhead bounded", &mut || delta_overhead(&bench));

    for kind in [TraceKind::AttackDoubleVote, TraceKind::AttackBatchOverflow] {
        let (name, config) = match kind {
            TraceKind::AttackDoubleVote => ("vote", VmConfig::default()),
            _ => ("erc20", VmConfig::wrap256()),
        };
        let (p, s) = load(name);
        let t = gen_trace(&TraceSpec::new(kind, 0, 0, 0)).unwrap();
        reports.push(differential_test(&p, &s, &t, &config).unwrap());
    }
    run(6, "optimization safety", &mut || optimization_safety(&reports));
    run(7, "revert atomicity", &mut revert_atomicity);
    run(8, "round-trips", &mut round_trips);

    let failed: Vec<&String> = results.iter().filter(|(p, _)| !p).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}
