//! Rebuilds every canonical example and prints its facts. The exhaustive
//! grid audits are skipped unless `--full` is given.
//!
//! Run with `cargo run --release --example canonical_examples -- --full`.

use agency::canonical::{build, Depth, ExampleId, ExampleParams};

fn main() {
    let depth = if std::env::args().any(|a| a == "--full") {
        Depth::Full
    } else {
        Depth::Quick
    };
    for id in ExampleId::ALL {
        let ex = build(ExampleParams::defaults(id), depth).expect("default parameters are valid");
        println!("{id} {:?}: {}", ex.params, if ex.pass() { "pass" } else { "FAIL" });
        for f in &ex.facts {
            println!(
                "  {:<40} {:?} expected {:<12.6} observed {:<12.6} {}",
                f.name,
                f.relation,
                f.expected,
                f.observed,
                if f.pass { "ok" } else { "fail" }
            );
        }
    }
}
