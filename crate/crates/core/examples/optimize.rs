//! Effect of check pruning and state-variable caching on the token contract.

use deltaguard::contract::{parse_contract, pretty_print};
use deltaguard::instrument::{cache_state_vars, compile, InstrumentMode, Options};
use deltaguard::spec_lang::{check_spec, parse_spec};

fn main() {
    let program = parse_contract(include_str!("../fixtures/erc20.mini")).unwrap();
    let spec = check_spec(&parse_spec(include_str!("../fixtures/erc20.inv")).unwrap(), &program).unwrap();
    for (prune, cache) in [(false, false), (true, false), (true, true)] {
        let opts = Options {
            mode: InstrumentMode::Delta,
            prune,
            cache,
        };
        let out = compile(&program, &spec, &opts).unwrap();
        println!("prune={prune} cache={cache}: {}", out.stats.to_json());
    }

    // The double-read ballot slot collapses to one load.
    let voting = parse_contract(include_str!("../fixtures/vote_cached.mini")).unwrap();
    let (cached, stats) = cache_state_vars(&voting);
    println!("\n{stats:?}");
    print!("{}", pretty_print(&cached));
}
