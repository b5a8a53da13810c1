//! Optimal revenue is not monotone in the type distribution: a
//! distribution with more low-cost mass earns strictly less.
//!
//! Run with `cargo run --release --example non_monotone`.

use agency::canonical::{non_monotone_audit, non_monotone_instance};

fn main() {
    let (delta, eps) = (0.02, 0.01);
    let inst = non_monotone_instance(delta);
    println!("gammas {:?}\nrewards {:?}", inst.gammas(), inst.rewards());
    for (i, row) in inst.outcome_probs().iter().enumerate() {
        println!("F[{i}] = {row:?}");
    }
    let audit = non_monotone_audit(delta, eps, 0.02, 2.0).expect("valid parameters");
    println!("\nrevenue under the point mass at 1: {}", audit.revenue_h);
    println!(
        "best single contract for the mixture over {} grid points: {:.6} at t = {:?}",
        audit.contracts_checked, audit.revenue_g_upper, audit.best_contract
    );
}
