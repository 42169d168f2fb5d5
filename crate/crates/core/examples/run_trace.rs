//! Executes transactions one by one and shows costs, reverts, and state.

use deltaguard::contract::parse_contract;
use deltaguard::vm::{execute, StateStore, Transaction, VmConfig};

fn main() {
    let program = parse_contract(include_str!("../fixtures/erc20.mini")).unwrap();
    let mut state = StateStore::new(&program);
    let config = VmConfig::default();
    let txs = [
        Transaction::new(1, "mint", vec![1.into(), 100.into()]),
        Transaction::new(1, "transfer", vec![2.into(), 30.into()]),
        Transaction::new(2, "transfer", vec![1.into(), 31.into()]),
        Transaction::new(2, "nope", vec![]),
    ];
    for tx in &txs {
        let o = execute(&mut state, &program, tx, &config);
        println!(
            "{} -> {} cost {} weighted {}",
            tx.to_json(),
            o.status.to_json(),
            o.cost.to_json(),
            o.cost.weighted(&config.weights)
        );
    }
    println!("{}", state.snapshot());
}
