//! Which invariant instances each store of the vote contract can affect.

use deltaguard::binder::binding_dump;
use deltaguard::contract::parse_contract;
use deltaguard::spec_lang::{check_spec, parse_spec};

fn main() {
    let program = parse_contract(include_str!("../fixtures/vote.mini")).unwrap();
    let spec = parse_spec(include_str!("../fixtures/vote.inv")).unwrap();
    check_spec(&spec, &program).unwrap();
    for entry in binding_dump(&program, &spec).as_array().unwrap() {
        println!("{entry}");
    }
}
