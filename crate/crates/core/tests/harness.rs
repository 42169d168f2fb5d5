use deltaguard::contract::{parse_contract, Program};
use deltaguard::harness::{bench_compare, differential_test, gen_trace, oracle_check, TraceKind, TraceSpec};
use deltaguard::spec_lang::{check_spec, parse_spec, TypedSpec};
use deltaguard::vm::{execute, write_trace, StateStore, VmConfig};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn load(name: &str) -> (Program, TypedSpec) {
    let p = parse_contract(&fixture(&format!("{name}.mini"))).unwrap();
    let s = check_spec(&parse_spec(&fixture(&format!("{name}.inv"))).unwrap(), &p).unwrap();
    (p, s)
}

#[test]
fn erc20_trace_snapshot() {
    let t = gen_trace(&TraceSpec::new(TraceKind::Erc20Transfer, 10, 100, 1)).unwrap();
    let head: Vec<String> = write_trace(&t[10..15]).lines().map(String::from).collect();
    assert_eq!(
        head,
        [
            r#"{"args":["3","2049"],"function":"transfer","sender":"6"}"#,
            r#"{"args":["6","6834"],"function":"transfer","sender":"4"}"#,
            r#"{"args":["6","4908"],"function":"transfer","sender":"10"}"#,
            r#"{"args":["6","2907"],"function":"transfer","sender":"4"}"#,
            r#"{"args":["6","69"],"function":"transfer","sender":"10"}"#,
        ]
    );
}

#[test]
fn double_vote_is_nullified() {
    let (p, s) = load("vote");
    let t = gen_trace(&TraceSpec::new(TraceKind::AttackDoubleVote, 0, 0, 0)).unwrap();
    let r = differential_test(&p, &s, &t, &VmConfig::default()).unwrap();
    assert!(r.passed(), "{:?}", r.mismatches);
    assert_eq!(r.oracle.as_deref(), Some(&[true, true, false][..]));
    assert_eq!(r.mode("none").unwrap().verdicts, [true, true, true]);
    for m in ["naive", "delta", "delta_opt"] {
        assert_eq!(r.mode(m).unwrap().verdicts, [true, true, false], "{m}");
    }
}

#[test]
fn oracle_flags_double_vote_state() {
    let (p, s) = load("vote");
    let t = gen_trace(&TraceSpec::new(TraceKind::AttackDoubleVote, 0, 0, 0)).unwrap();
    let mut st = StateStore::new(&p);
    let verdicts: Vec<bool> = t
        .iter()
        .map(|tx| {
            execute(&mut st, &p, tx, &VmConfig::default());
            oracle_check(&st, &s).satisfied
        })
        .collect();
    assert_eq!(verdicts, [true, true, false]);
}

#[test]
fn random_traces_agree_with_oracle() {
    for (name, kind) in [
        ("erc20", TraceKind::Erc20Transfer),
        ("erc721", TraceKind::Erc721Transfer),
        ("vote", TraceKind::Erc1202Vote),
    ] {
        let (p, s) = load(name);
        let t = gen_trace(&TraceSpec::new(kind, 8, 150, 11).with_fault_rate(0.15)).unwrap();
        let r = differential_test(&p, &s, &t, &VmConfig::default()).unwrap();
        assert!(r.passed(), "{name}: {:?}", &r.mismatches[..r.mismatches.len().min(3)]);
        assert!(r.oracle.unwrap().contains(&false), "{name}: no faults exercised");
    }
}

#[test]
fn empty_spec_adds_no_cost() {
    let p = parse_contract(&fixture("erc20.mini")).unwrap();
    let s = check_spec(&parse_spec("").unwrap(), &p).unwrap();
    let t = gen_trace(&TraceSpec::new(TraceKind::Erc20Transfer, 10, 100, 2)).unwrap();
    let r = bench_compare(&p, &s, &t, &VmConfig::default()).unwrap();
    let none = r.mode("none").unwrap().total;
    let delta = r.mode("delta").unwrap().total;
    assert_eq!(delta, none);
}

/// Extra persistent writes per vote stay flat as the voter pool grows.
#[test]
fn vote_overhead_is_constant() {
    let (p, s) = load("vote");
    let per_tx = |accounts| {
        let t = gen_trace(&TraceSpec::new(TraceKind::Erc1202Vote, accounts, 120, 5)).unwrap();
        let r = bench_compare(&p, &s, &t, &VmConfig::default()).unwrap();
        assert!(r.passed());
        let extra = r.mode("delta").unwrap().total.sstore - r.mode("none").unwrap().total.sstore;
        extra as f64 / t.len() as f64
    };
    let small = per_tx(5);
    let large = per_tx(60);
    assert!((small - large).abs() < 0.5, "{small} vs {large}");
    assert!(large <= 8.0, "{large}");
}

#[test]
fn erc20_cost_scaling() {
    let (p, s) = load("erc20");
    let mut last = 0.0;
    for n in [10, 100, 1000] {
        let t = gen_trace(&TraceSpec::new(TraceKind::Erc20Transfer, n, 200, 3)).unwrap();
        let r = bench_compare(&p, &s, &t, &VmConfig::default()).unwrap();
        assert!(r.passed());
        let delta = r.mode("delta").unwrap().total.state_accesses() as f64 / t.len() as f64;
        assert!(delta < 25.0, "delta per tx {delta} at N={n}");
        let ratio = r.access_ratio("naive", "delta").unwrap();
        assert!(ratio > last, "ratio {ratio} at N={n} not above {last}");
        last = ratio;
    }
}
