//! Cost-type distributions: CDFs, quantiles, virtual costs and ironing.
//!
//! Run with `cargo run --example distributions`.

use agency::typedist::{Segment, DEFAULT_GRID};
use agency::TypeDistribution;

fn main() {
    let uniform = TypeDistribution::uniform(0.0, 2.0).expect("valid");
    let expo = TypeDistribution::exponential(1.5).expect("valid");
    let normal = TypeDistribution::truncated_normal(1.0, 2.0, 0.0).expect("valid");
    for (name, d) in [
        ("uniform[0,2]", &uniform),
        ("exponential(1.5)", &expo),
        ("normal(1,2)|c>=0", &normal),
    ] {
        let median = d.quantile(0.5);
        println!(
            "{name:<18} support {:?} median {median:.4} phi(median) {:.4} nonincreasing density {}",
            d.support(),
            d.virtual_cost(median).expect("atom-free"),
            d.density_nonincreasing()
        );
    }

    // A density that jumps up makes the raw virtual cost decrease; ironing
    // flattens it.
    let bumpy = TypeDistribution::piecewise(vec![
        Segment {
            from: 0.0,
            to: 1.0,
            density: 0.2,
        },
        Segment {
            from: 1.0,
            to: 2.0,
            density: 0.8,
        },
    ])
    .expect("valid");
    let iv = bumpy.iron(DEFAULT_GRID).expect("atom-free");
    println!("\n{:>5} {:>10} {:>10}", "c", "phi", "ironed");
    for k in 0..=8 {
        let c = 0.25 * k as f64;
        let raw = bumpy.virtual_cost(c).expect("atom-free");
        println!("{c:>5.2} {raw:>10.4} {:>10.4}", iv.value(c));
    }
    for p in iv.pieces() {
        println!("piece {p:?}");
    }

    // Distributions with atoms have CDF jumps and no virtual cost.
    let mix = TypeDistribution::smoothed_unit(0.1).expect("valid");
    println!(
        "\nsmoothed mixture: G(1-) = {:.3}, G(1) = {:.3}, atoms {:?}, virtual cost defined: {}",
        mix.cdf_left(1.0),
        mix.cdf(1.0),
        mix.atoms(),
        mix.virtual_cost(0.5).is_ok()
    );
}
