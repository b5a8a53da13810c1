//! Two optimal-contract constructions: a menu for two non-null actions that
//! attains virtual welfare, and removal of payments on the null outcome
//! when the first action is effortless.
//!
//! Run with `cargo run --example binary_constructions`.

use agency::battery::{binary_action_cases, hazard_ratio};
use agency::incentives::{binary_action_optimal, binary_outcome_transform, MenuContract};
use agency::typedist::DEFAULT_GRID;
use agency::{EffortOrder, Instance, PaymentProfile, TypeDistribution};

fn main() {
    let dist = TypeDistribution::uniform(0.0, 1.0).expect("valid");
    let iv = dist.iron(DEFAULT_GRID).expect("atom-free");
    for inst in binary_action_cases(42, 4) {
        let out = binary_action_optimal(&inst, &iv, 1000).expect("hazard-rent holds");
        println!(
            "hazard ratio {:.4}: revenue {:.6} VWel {:.6} IC {} profiles {:?}",
            hazard_ratio(&inst).unwrap_or(f64::NAN),
            out.revenue,
            out.virtual_welfare,
            out.ic.pass,
            out.contract
                .profiles()
                .iter()
                .map(|p| p.as_slice().to_vec())
                .collect::<Vec<_>>()
        );
    }

    let inst = Instance::with_order(
        vec![0.0, 0.0, 0.5],
        vec![0.0, 1.0, 2.0],
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.4], vec![0.0, 0.1, 0.9]],
        EffortOrder::Weak,
    )
    .expect("valid instance");
    let menu = MenuContract::single(
        PaymentProfile::new(vec![0.3, 0.0, 0.4]).expect("non-negative"),
        (0.0, 1.0),
    );
    match binary_outcome_transform(&inst, &dist, &menu, 1000) {
        Ok(t) => println!(
            "\nnull-outcome payment removed: {:?}, revenue {:.6} -> {:.6}, IC {}",
            t.contract
                .profiles()
                .iter()
                .map(|p| p.as_slice().to_vec())
                .collect::<Vec<_>>(),
            t.revenue_before,
            t.revenue_after,
            t.ic.pass
        ),
        Err(e) => println!("\nprecondition failed: {e:?}"),
    }
}
