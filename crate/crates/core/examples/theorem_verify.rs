//! Checking approximation guarantees of linear contracts on one instance.
//! Each verdict reports its hypotheses, the benchmark and the achieved
//! ratio.
//!
//! Run with `cargo run --example theorem_verify`.

use agency::conditions::{verify, RevVariant, ScanConfig, Theorem};
use agency::typedist::DEFAULT_GRID;
use agency::{Instance, TypeDistribution};

fn main() {
    let inst = Instance::new(
        vec![0.0, 0.4, 1.0, 1.8],
        vec![0.0, 1.0, 3.0, 6.0],
        vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.6, 0.3, 0.1],
            vec![0.0, 0.3, 0.4, 0.3],
            vec![0.0, 0.1, 0.3, 0.6],
        ],
    )
    .expect("valid instance");
    let cfg = ScanConfig::default();

    let runs = [
        (
            TypeDistribution::exponential(1.0),
            Theorem::Universal { q: 0.5, alpha: 0.5 },
        ),
        (
            TypeDistribution::exponential(1.0),
            Theorem::Slow {
                alpha: 0.5,
                beta: None,
                kappa: 0.0,
                eta: None,
            },
        ),
        (
            TypeDistribution::exponential(1.0),
            Theorem::LinBounded1 {
                kappa: 0.5,
                alpha: None,
            },
        ),
        (TypeDistribution::exponential(1.0), Theorem::UpperN),
        (
            TypeDistribution::uniform(1.0, 3.0),
            Theorem::WelImplications { kappa: 2.0 },
        ),
        (
            TypeDistribution::truncated_normal(1.0, 2.0, 0.0),
            Theorem::RevImplications(RevVariant::TruncatedNormal),
        ),
        (TypeDistribution::smoothed_unit(0.5), Theorem::Smooth { eps: 0.5 }),
    ];
    for (dist, theorem) in runs {
        let dist = dist.expect("valid distribution");
        let iv = dist.iron(DEFAULT_GRID).ok();
        let v = verify(&inst, &dist, iv.as_ref(), theorem, cfg);
        println!(
            "{:<32} exit {} hypotheses {} alpha {:.4} ratio {:.4} <= {:.4}",
            v.theorem,
            v.exit_code(),
            v.hypothesis_satisfied,
            v.alpha,
            v.achieved_ratio,
            v.guarantee
        );
        for h in v.hypotheses.iter().filter(|h| !h.holds) {
            println!("    unmet: {} ({})", h.name, h.detail);
        }
    }
}
