//! Agent best responses to a fixed payment profile as the cost type varies.
//!
//! Run with `cargo run --example best_response`.

use agency::{Instance, PaymentProfile};

fn main() {
    let inst = Instance::new(
        vec![0.0, 1.0, 2.0],
        vec![0.0, 1.0, 4.0],
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.4], vec![0.0, 0.2, 0.8]],
    )
    .expect("valid instance");

    println!("expected rewards R = {:?}", inst.expected_rewards());
    let t = PaymentProfile::new(vec![0.0, 0.5, 2.0]).expect("non-negative");
    println!("expected payments T = {:?}", inst.expected_payments(&t));

    println!(
        "{:>6} {:>7} {:>9} {:>9} {:>10}",
        "c", "action", "payment", "agent", "principal"
    );
    for k in 0..=12 {
        let c = 0.25 * k as f64;
        let br = inst.best_response(&t, c);
        println!(
            "{c:>6.2} {:>7} {:>9.4} {:>9.4} {:>10.4}",
            br.action, br.expected_payment, br.agent_utility, br.principal_utility
        );
    }

    // Linear contract α = 1/2: the agent is indifferent between actions 1
    // and 2 at c = (T_2 - T_1) / (γ_2 - γ_1); ties go to the principal.
    let lin = PaymentProfile::linear(&inst, 0.5);
    let pay = inst.expected_payments(&lin);
    let c_tie = (pay[2] - pay[1]) / (inst.gamma(2) - inst.gamma(1));
    let br = inst.best_response(&lin, c_tie);
    println!(
        "alpha = 0.5, tie at c = {c_tie:.4}: action {} (principal gets {:.4})",
        br.action, br.principal_utility
    );
}
