//! The curvature condition for implementability: a linear contract always
//! passes it, and the payment identity recovers its expected payments.
//!
//! Run with `cargo run --example curvature`.

use agency::allocation::envelope_rule;
use agency::incentives::{agent_utility_identity, curvature_check, expected_payment_identity};
use agency::{Instance, PaymentProfile};

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
    let alpha = 0.6;
    let span = (0.0, 3.0);
    let rule = envelope_rule(&inst, alpha, span);
    let t = PaymentProfile::linear(&inst, alpha);
    let pay = inst.expected_payments(&t);
    println!("rule breakpoints {:?} actions {:?}", rule.breakpoints(), rule.actions());

    println!(
        "{:>5} {:>4} {:>10} {:>10} {:>12} {:>12}",
        "c", "x", "D*", "pass", "T identity", "T direct"
    );
    for k in 0..=12 {
        let c = 0.25 * k as f64;
        let check = curvature_check(&inst, &rule, c, &t);
        let u_bar = pay[rule.action_at(span.1)] - inst.gamma(rule.action_at(span.1)) * span.1;
        let identity = expected_payment_identity(&inst, &rule, c, u_bar);
        println!(
            "{c:>5.2} {:>4} {:>10.2e} {:>10} {:>12.6} {:>12.6}",
            check.allocated_action, check.d_star, check.pass, identity, pay[check.allocated_action]
        );
    }

    // This profile makes action 2 the best response at c = 1 while the rule
    // asks for action 1.
    let bad = PaymentProfile::new(vec![0.0, 0.0, 2.5]).expect("non-negative");
    let check = curvature_check(&inst, &rule, 1.0, &bad);
    println!("\nad-hoc profile at c = 1: {check:?}");
    println!(
        "agent utility at c = 1 by identity: {:.6}",
        agent_utility_identity(&inst, &rule, 1.0, 0.0)
    );
}
