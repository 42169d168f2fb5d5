//! Evaluates the total-supply invariant directly over a hand-built state.

use deltaguard::contract::parse_contract;
use deltaguard::harness::oracle_check;
use deltaguard::spec_lang::{check_spec, parse_spec};
use deltaguard::vm::StateStore;

fn main() {
    let program = parse_contract(include_str!("../fixtures/erc20.mini")).unwrap();
    let spec = check_spec(&parse_spec(include_str!("../fixtures/erc20.inv")).unwrap(), &program).unwrap();
    let mut state = StateStore::new(&program);
    state.set("balances", vec![1.into()], 3.into());
    state.set("balances", vec![2.into()], 4.into());
    for supply in [7, 8] {
        state.set("totalSupply", vec![], supply.into());
        let r = oracle_check(&state, &spec);
        println!("totalSupply = {supply}: satisfied = {}, t = {:?}", r.satisfied, r.intermediates["t"]);
        for v in &r.violations {
            println!("  {v}");
        }
    }
}
