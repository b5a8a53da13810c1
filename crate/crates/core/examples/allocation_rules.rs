//! Allocation rules: linear-contract envelopes, the welfare rule and the
//! virtual-welfare rule, with their breakpoints.
//!
//! Run with `cargo run --example allocation_rules`.

use agency::allocation::{envelope_rule, virtual_rule, welfare_breakpoints};
use agency::typedist::DEFAULT_GRID;
use agency::{Instance, TypeDistribution};

fn main() {
    let inst = Instance::new(
        vec![0.0, 0.5, 1.2, 2.0],
        vec![0.0, 2.0, 5.0],
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.7, 0.3],
            vec![0.0, 0.4, 0.6],
            vec![0.0, 0.1, 0.9],
        ],
    )
    .expect("valid instance");
    let dist = TypeDistribution::uniform(0.0, 3.0).expect("valid");
    let span = dist.support();

    println!("welfare breakpoints (cost, from, to):");
    for (c, from, to) in welfare_breakpoints(&inst) {
        println!("  {c:.4}: {from} -> {to}");
    }
    for alpha in [0.25, 0.5, 0.75, 1.0] {
        let rule = envelope_rule(&inst, alpha, span);
        println!(
            "alpha {alpha:.2}: breakpoints {:?} actions {:?}",
            rounded(&rule.breakpoints()),
            rule.actions()
        );
    }

    let iv = dist.iron(DEFAULT_GRID).expect("atom-free");
    let rule = virtual_rule(&inst, &iv, span);
    println!(
        "virtual welfare rule: breakpoints {:?} actions {:?}",
        rounded(&rule.breakpoints()),
        rule.actions()
    );
    println!("monotone: {}", rule.is_monotone());
    println!(
        "effort integral over the support: {:.6}",
        rule.effort_integral(&inst, span.0, span.1)
    );
    for c in [0.1, 0.6, 1.1, 2.5] {
        println!("  x*({c}) = {}", rule.action_at(c));
    }
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e6).round() / 1e6).collect()
}
