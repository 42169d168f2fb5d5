//! `batchTransfer` with a value of 2^255: the debit `value * 2` wraps to 0
//! and two receivers are credited 2^255 each.

use deltaguard::contract::parse_contract;
use deltaguard::harness::{gen_trace, oracle_check, TraceKind, TraceSpec};
use deltaguard::instrument::{compile, Options};
use deltaguard::spec_lang::{check_spec, parse_spec};
use deltaguard::vm::{execute, StateStore, VmConfig};

fn main() {
    let program = parse_contract(include_str!("../fixtures/erc20.mini")).unwrap();
    let spec = check_spec(&parse_spec(include_str!("../fixtures/erc20.inv")).unwrap(), &program).unwrap();
    let guarded = compile(&program, &spec, &Options::optimized()).unwrap().program;
    let tx = &gen_trace(&TraceSpec::new(TraceKind::AttackBatchOverflow, 0, 0, 0)).unwrap()[0];
    let config = VmConfig::wrap256();

    let mut plain = StateStore::new(&program);
    let o = execute(&mut plain, &program, tx, &config);
    println!("uninstrumented: {}", o.status.to_json());
    println!("state: {}", plain.user_snapshot());
    println!("oracle: {:?}", oracle_check(&plain, &spec).violations);

    let mut st = StateStore::new(&guarded);
    let o = execute(&mut st, &guarded, tx, &config);
    println!("instrumented: {}", o.status.to_json());
}
