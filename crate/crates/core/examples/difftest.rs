//! Random traces over every fixture, checked against the brute-force oracle.
//!
//!     cargo run --release --example difftest -- 500

use deltaguard::contract::parse_contract;
use deltaguard::harness::{differential_test, gen_trace, TraceKind, TraceSpec};
use deltaguard::spec_lang::{check_spec, parse_spec};
use deltaguard::vm::VmConfig;

fn main() {
    let txs = std::env::args().nth(1).map_or(300, |s| s.parse().unwrap());
    let fixtures = [
        (include_str!("../fixtures/erc20.mini"), include_str!("../fixtures/erc20.inv"), TraceKind::Erc20Transfer),
        (include_str!("../fixtures/erc721.mini"), include_str!("../fixtures/erc721.inv"), TraceKind::Erc721Transfer),
        (include_str!("../fixtures/vote.mini"), include_str!("../fixtures/vote.inv"), TraceKind::Erc1202Vote),
    ];
    for (contract, inv, kind) in fixtures {
        let program = parse_contract(contract).unwrap();
        let spec = check_spec(&parse_spec(inv).unwrap(), &program).unwrap();
        let trace = gen_trace(&TraceSpec::new(kind, 10, txs, 1).with_fault_rate(0.1)).unwrap();
        let report = differential_test(&program, &spec, &trace, &VmConfig::default()).unwrap();
        println!("{kind}\n{}", report.to_table());
    }
}
