//! Seeded random instances checked against every default guarantee.
//!
//! Run with `cargo run --release --example battery -- [seed] [count]`.

use std::collections::BTreeMap;

use agency::battery::{run_battery, DEFAULT_CASES, DEFAULT_SEED};
use agency::conditions::ScanConfig;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_SEED);
    let count = args.next().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_CASES);
    let report = run_battery(seed, count, ScanConfig::from_env());

    let mut by_theorem: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for row in &report.rows {
        let slot = match row.exit_code {
            0 => 0,
            2 => 1,
            _ => 2,
        };
        by_theorem.entry(row.verdict.theorem).or_default()[slot] += 1;
    }
    println!("seed {seed}, {count} random cases");
    println!("{:<34} {:>5} {:>5} {:>5}", "theorem", "pass", "fail", "skip");
    for (t, [p, f, s]) in by_theorem {
        println!("{t:<34} {p:>5} {f:>5} {s:>5}");
    }
    let worst = report
        .rows
        .iter()
        .filter(|r| r.exit_code == 0 && r.verdict.guarantee.is_finite())
        .map(|r| {
            (
                r.verdict.achieved_ratio / r.verdict.guarantee,
                &r.case,
                r.verdict.theorem,
            )
        })
        .max_by(|a, b| a.0.total_cmp(&b.0));
    if let Some((slack, case, t)) = worst {
        println!("tightest: {case} {t} uses {:.1}% of its guarantee", 100.0 * slack);
    }
}
