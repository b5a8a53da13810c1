//! A virtual-welfare rule that no contract implements: grid certificate at
//! a single type, plus the same check for a rule that is implementable.
//!
//! Run with `cargo run --release --example non_implementable`.

use agency::allocation::{envelope_rule, virtual_rule};
use agency::canonical::{non_implementable_dist, non_implementable_instance};
use agency::incentives::{certify_non_implementable_at, PaymentBox};
use agency::typedist::DEFAULT_GRID;

fn main() {
    let inst = non_implementable_instance();
    let dist = non_implementable_dist();
    let iv = dist.iron(DEFAULT_GRID).expect("atom-free");
    let rule = virtual_rule(&inst, &iv, dist.support());
    println!(
        "virtual-welfare rule: breakpoints {:?} actions {:?}",
        rule.breakpoints(),
        rule.actions()
    );
    for c in [0.5, 2.0, 6.0, 10.0] {
        println!("  phi({c}) = {:.6}", iv.value(c));
    }

    let bx = PaymentBox::default_for(&inst);
    let cert = certify_non_implementable_at(&inst, &rule, 4.0, bx);
    println!(
        "\nat c = 4 (action {}): certificate {} after {} consistent profiles out of {}",
        cert.allocated_action, cert.certificate, cert.consistent_checked, cert.enumerated
    );
    if let (Some(d), Some(at)) = (cert.min_d_star, &cert.min_d_star_at) {
        println!("smallest violation {d:.4} at t = {at:?}");
    }

    let linear = envelope_rule(&inst, 0.5, dist.support());
    let cert = certify_non_implementable_at(&inst, &linear, 4.0, bx);
    println!(
        "\nlinear rule at c = 4: certificate {} witness {:?}",
        cert.certificate, cert.witness
    );
}
