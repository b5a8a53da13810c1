//! Linear contract revenue, welfare benchmarks and the best share, with
//! closed forms checked against direct quadrature.
//!
//! Run with `cargo run --example linear_contracts`.

use agency::metrics::{
    best_linear, linear_revenue, linear_revenue_quadrature, total_virtual_welfare, total_welfare,
    virtual_welfare_quadrature, welfare_quadrature, Metrics,
};
use agency::typedist::DEFAULT_GRID;
use agency::{DistSpec, Instance, TypeDistribution};

fn main() {
    let inst = Instance::new(
        vec![0.0, 1.0, 2.0],
        vec![0.0, 1.0, 4.0],
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.4], vec![0.0, 0.2, 0.8]],
    )
    .expect("valid instance");

    for spec in [
        DistSpec::Uniform { low: 0.0, high: 1.0 },
        DistSpec::Exponential { rate: 2.0 },
        DistSpec::TruncatedNormal {
            mu: 0.5,
            sigma: 0.5,
            low: 0.0,
        },
    ] {
        let dist = TypeDistribution::new(spec.clone()).expect("valid");
        let iv = dist.iron(DEFAULT_GRID).expect("atom-free");
        let m = Metrics::compute(&inst, &dist, Some(&iv), &[0.25, 0.5, 0.75]);
        println!("{spec:?}");
        println!(
            "  Wel {:.6} (quadrature {:.6})",
            m.wel,
            welfare_quadrature(&inst, &dist, dist.low(), dist.grid_high())
        );
        println!(
            "  VWel {:.6} (quadrature {:.6})",
            total_virtual_welfare(&inst, &iv),
            virtual_welfare_quadrature(&inst, &iv, dist.low())
        );
        for (a, r) in &m.apx_at {
            println!(
                "  alpha {a:.2}: revenue {r:.6} (quadrature {:.6})",
                linear_revenue_quadrature(&inst, &dist, *a)
            );
        }
        let best = best_linear(&inst, &dist, Some(&iv));
        println!(
            "  best alpha {:.6} revenue {:.6}; Wel/revenue {:.4}",
            best.alpha,
            best.revenue,
            total_welfare(&inst, &dist) / best.revenue
        );
        let coarse = (0..=20)
            .map(|k| linear_revenue(&inst, &dist, k as f64 / 20.0))
            .fold(f64::NEG_INFINITY, f64::max);
        println!("  best on a 0.05 grid {coarse:.6}");
    }
}
