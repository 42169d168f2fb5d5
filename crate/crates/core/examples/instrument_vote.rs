//! Instruments the weighted-vote contract with its ballot-count invariant and
//! prints the result.
//!
//!     cargo run --example instrument_vote [delta|naive]

use deltaguard::contract::{parse_contract, pretty_print};
use deltaguard::instrument::{compile, InstrumentMode, Options};
use deltaguard::spec_lang::{check_spec, parse_spec};

fn main() {
    let mode: InstrumentMode = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "delta".into())
        .parse()
        .unwrap();
    let program = parse_contract(include_str!("../fixtures/vote.mini")).unwrap();
    let spec = parse_spec(include_str!("../fixtures/vote.inv")).unwrap();
    let spec = check_spec(&spec, &program).unwrap();
    let out = compile(&program, &spec, &Options::mode(mode)).unwrap();
    print!("{}", pretty_print(&out.program));
    eprintln!("{}", out.stats.to_json());
}
