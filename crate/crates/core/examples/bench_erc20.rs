//! Cost of every instrumentation mode on token transfers as the number of
//! accounts grows.
//!
//!     cargo run --release --example bench_erc20 -- 10 100 1000

use deltaguard::contract::parse_contract;
use deltaguard::harness::{bench_compare, gen_trace, TraceKind, TraceSpec};
use deltaguard::spec_lang::{check_spec, parse_spec};
use deltaguard::vm::VmConfig;

fn main() {
    let mut sizes: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().unwrap()).collect();
    if sizes.is_empty() {
        sizes = vec![10, 100, 1000];
    }
    let program = parse_contract(include_str!("../fixtures/erc20.mini")).unwrap();
    let spec = check_spec(&parse_spec(include_str!("../fixtures/erc20.inv")).unwrap(), &program).unwrap();
    for n in sizes {
        let trace = gen_trace(&TraceSpec::new(TraceKind::Erc20Transfer, n, 1000, 42)).unwrap();
        let report = bench_compare(&program, &spec, &trace, &VmConfig::default()).unwrap();
        println!("N = {n}\n{}", report.to_table());
    }
}
