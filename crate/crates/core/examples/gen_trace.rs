//! Prints a seeded trace as JSON Lines.
//!
//!     cargo run --example gen_trace -- erc1202_vote 8 12 3

use deltaguard::harness::{gen_trace, TraceKind, TraceSpec};
use deltaguard::vm::write_trace;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let kind: TraceKind = arg(0, "erc20_transfer").parse().unwrap();
    let spec = TraceSpec::new(
        kind,
        arg(1, "10").parse().unwrap(),
        arg(2, "20").parse().unwrap(),
        arg(3, "1").parse().unwrap(),
    );
    print!("{}", write_trace(&gen_trace(&spec).unwrap()));
}
