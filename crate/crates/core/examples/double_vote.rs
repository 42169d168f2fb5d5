//! A voter casting a second ballot double-counts their weight. The
//! uninstrumented contract accepts it; both instrumented versions revert it.

use deltaguard::contract::parse_contract;
use deltaguard::harness::{differential_test, gen_trace, TraceKind, TraceSpec};
use deltaguard::spec_lang::{check_spec, parse_spec};
use deltaguard::vm::VmConfig;

fn main() {
    let program = parse_contract(include_str!("../fixtures/vote.mini")).unwrap();
    let spec = check_spec(&parse_spec(include_str!("../fixtures/vote.inv")).unwrap(), &program).unwrap();
    let trace = gen_trace(&TraceSpec::new(TraceKind::AttackDoubleVote, 0, 0, 0)).unwrap();
    let report = differential_test(&program, &spec, &trace, &VmConfig::default()).unwrap();
    println!("oracle    {:?}", report.oracle.as_ref().unwrap());
    for m in &report.modes {
        println!("{:<9} {:?}", m.name, m.verdicts);
    }
}
