//! Linear contracts can lose a factor of order n against welfare. The
//! instance needs double-double arithmetic: rewards grow like δ^{-n}.
//!
//! Run with `cargo run --example gap`.

use agency::canonical::{minimal_linear_alpha, minimal_linear_alpha_bisect, scaling_instance};
use agency::metrics::{best_linear, first_best_value, total_welfare};
use agency::{Instance, TwoFloat, TypeDistribution};

fn main() {
    let (n, delta) = (10, 0.01);
    let inst: Instance<TwoFloat> = scaling_instance(n, delta);
    let point = TypeDistribution::atom(1.0).expect("valid");

    println!("{:>3} {:>22} {:>22}", "i", "closed-form alpha", "bisected alpha");
    for i in 1..=n {
        let bis = minimal_linear_alpha_bisect(&inst, i, 1.0).unwrap_or(f64::NAN);
        println!("{i:>3} {:>22.16} {:>22.16}", minimal_linear_alpha(delta, i, 1.0), bis);
    }

    let wel: f64 = total_welfare(&inst, &point).into();
    let best = best_linear(&inst, &point, None);
    let rev: f64 = best.revenue.into();
    println!(
        "\nfirst best at c = 1: {}",
        f64::from(first_best_value(&inst, TwoFloat::from(1.0)))
    );
    println!(
        "welfare {wel:.12}  (n + 1 - nδ = {})",
        n as f64 + 1.0 - n as f64 * delta
    );
    println!("best linear revenue {rev:.12} at alpha {}", f64::from(best.alpha));
    println!("ratio {:.6}", wel / rev);

    for n in [2, 4, 6, 8, 10, 12] {
        let inst: Instance<TwoFloat> = scaling_instance(n, delta);
        let w: f64 = total_welfare(&inst, &point).into();
        let r: f64 = best_linear(&inst, &point, None).revenue.into();
        println!("n = {n:>2}: welfare / best linear = {:.4}", w / r);
    }
}
