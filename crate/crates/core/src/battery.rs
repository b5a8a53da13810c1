//! Seeded random instances and distributions, and a theorem battery over
//! them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conditions::{verify, RevVariant, ScanConfig, Theorem, TheoremVerdict};
use crate::incentives::likelihood_outcome;
use crate::instance::Instance;
use crate::typedist::{DistSpec, Segment, TypeDistribution, DEFAULT_GRID};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_CASES: usize = 50;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random valid instance with `n` non-null actions and `m` non-null
/// outcomes. Rows are sorted by expected reward and efforts are increasing.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, m: usize) -> Instance {
    loop {
        let mut rewards: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..10.0)).collect();
        rewards.sort_by(f64::total_cmp);
        rewards.insert(0, 0.0);
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut row = simplex(rng, m);
                row.insert(0, 0.0);
                row
            })
            .collect();
        let value = |row: &Vec<f64>| row.iter().zip(&rewards).map(|(p, r)| p * r).sum::<f64>();
        rows.sort_by(|a, b| value(a).total_cmp(&value(b)));
        let mut probs = vec![std::iter::once(1.0)
            .chain(std::iter::repeat_n(0.0, m))
            .collect::<Vec<_>>()];
        probs.extend(rows);
        let mut gammas = vec![0.0];
        let mut g = 0.0;
        for _ in 0..n {
            g += rng.random_range(0.05..1.5);
            gammas.push(g);
        }
        if let Ok(inst) = Instance::new(gammas, rewards, probs) {
            return inst;
        }
    }
}

/// Random atom-free distribution from the uniform, exponential, truncated
/// normal and piecewise-constant families.
pub fn random_dist<R: Rng>(rng: &mut R) -> TypeDistribution {
    let spec = match rng.random_range(0..4) {
        0 => {
            let low = if rng.random_bool(0.5) {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            };
            DistSpec::Uniform {
                low,
                high: low + rng.random_range(0.5..4.0),
            }
        }
        1 => DistSpec::Exponential {
            rate: rng.random_range(0.3..3.0),
        },
        2 => DistSpec::TruncatedNormal {
            mu: rng.random_range(0.0..2.0),
            sigma: rng.random_range(0.3..2.0),
            low: 0.0,
        },
        _ => {
            let k = rng.random_range(2..=4);
            let mut edges = vec![0.0];
            for _ in 0..k {
                let last = *edges.last().expect("non-empty");
                edges.push(last + rng.random_range(0.2..1.5));
            }
            let w = simplex(rng, k);
            DistSpec::Piecewise {
                segments: (0..k)
                    .map(|i| Segment {
                        from: edges[i],
                        to: edges[i + 1],
                        density: w[i] / (edges[i + 1] - edges[i]),
                    })
                    .collect(),
            }
        }
    };
    TypeDistribution::new(spec).expect("generated parameters are valid")
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryCase {
    pub index: usize,
    pub instance: Instance,
    pub dist: DistSpec,
}

/// `count` random atom-free (instance, distribution) pairs.
pub fn cases(seed: u64, count: usize) -> Vec<BatteryCase> {
    let mut rng = rng(seed);
    (0..count)
        .map(|index| {
            let n = rng.random_range(1..=4);
            let m = rng.random_range(2..=4);
            let instance = random_instance(&mut rng, n, m);
            let dist = random_dist(&mut rng).spec().clone();
            BatteryCase { index, instance, dist }
        })
        .collect()
}

/// Instances paired with `U[0, c̄]` where `c̄` is large enough that the
/// top type's virtual cost `2c̄` makes every action unprofitable under
/// `t = r`.
pub fn idle_top_uniform_cases(seed: u64, count: usize) -> Vec<(Instance, TypeDistribution)> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=4);
            let m = rng.random_range(2..=4);
            let inst = random_instance(&mut rng, n, m);
            let ratio = (1..inst.num_actions())
                .map(|i| inst.big_r(i) / inst.gamma(i))
                .fold(0.0, f64::max);
            let c_high = ratio / 2.0 * rng.random_range(1.05..3.0);
            (inst, TypeDistribution::uniform(0.0, c_high).expect("positive width"))
        })
        .collect()
}

/// `γ_2 q_{1,2} / (γ_1 q_2)` for a two-action instance, if both
/// likelihood outcomes exist.
pub fn hazard_ratio(inst: &Instance) -> Option<f64> {
    likelihood_outcome(inst, 1, 2)?;
    let j2 = likelihood_outcome(inst, 2, 1)?;
    let f = inst.outcome_probs();
    Some(inst.gamma(2) * f[1][j2] / (inst.gamma(1) * f[2][j2]))
}

/// Two-action instances satisfying the hazard-rent inequality.
pub fn binary_action_cases(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let m = rng.random_range(2..=3);
        let inst = random_instance(&mut rng, 2, m);
        if hazard_ratio(&inst).is_some_and(|h| h <= 1.0) {
            out.push(inst);
        }
    }
    out
}

/// Theorem parameters used for a random case.
pub fn default_theorems(dist: &TypeDistribution) -> Vec<Theorem> {
    let low = dist.low();
    vec![
        Theorem::Universal { q: 0.5, alpha: 0.5 },
        Theorem::Slow {
            alpha: 0.5,
            beta: None,
            kappa: low / 0.5,
            eta: None,
        },
        Theorem::LinBounded1 {
            kappa: dist.quantile(0.25),
            alpha: None,
        },
        Theorem::LinBounded2 {
            kappa: dist.quantile(0.25),
            alpha: None,
        },
        Theorem::UpperN,
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryRow {
    pub case: String,
    pub exit_code: i32,
    pub verdict: TheoremVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub hypothesis_not_met: usize,
    pub rows: Vec<BatteryRow>,
}

impl BatteryReport {
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            2
        } else {
            0
        }
    }
}

fn push(rows: &mut Vec<BatteryRow>, case: String, verdict: TheoremVerdict) {
    rows.push(BatteryRow {
        case,
        exit_code: verdict.exit_code(),
        verdict,
    });
}

/// Verifies every default theorem on `count` random pairs, the smoothing
/// proposition on random instances for `ε ∈ {0.1, 0.5}`, and the
/// exponential and truncated normal specializations.
pub fn run_battery(seed: u64, count: usize, cfg: ScanConfig) -> BatteryReport {
    let mut rows = Vec::new();
    for case in cases(seed, count) {
        let dist = TypeDistribution::new(case.dist.clone()).expect("valid spec");
        let iv = dist.iron(DEFAULT_GRID).ok();
        for th in default_theorems(&dist) {
            push(
                &mut rows,
                format!("random_{}", case.index),
                verify(&case.instance, &dist, iv.as_ref(), th, cfg),
            );
        }
    }

    let mut r = rng(seed ^ 0x5eed);
    for eps in [0.1, 0.5] {
        let dist = TypeDistribution::smoothed_unit(eps).expect("valid mixture");
        for k in 0..5 {
            let (n, m) = (r.random_range(1..=4), r.random_range(2..=4));
            let inst = random_instance(&mut r, n, m);
            push(
                &mut rows,
                format!("smoothed_{eps}_{k}"),
                verify(&inst, &dist, None, Theorem::Smooth { eps }, cfg),
            );
        }
    }

    let expo = TypeDistribution::exponential(1.0).expect("valid rate");
    let expo_iv = expo.iron(DEFAULT_GRID).ok();
    let normal = TypeDistribution::truncated_normal(1.0, 2.0, 0.0).expect("valid normal");
    let normal_iv = normal.iron(DEFAULT_GRID).ok();
    for k in 0..5 {
        let (n, m) = (r.random_range(1..=4), r.random_range(2..=4));
        let inst = random_instance(&mut r, n, m);
        push(
            &mut rows,
            format!("exponential_{k}"),
            verify(
                &inst,
                &expo,
                expo_iv.as_ref(),
                Theorem::LinBounded1 {
                    kappa: 0.0,
                    alpha: Some(0.5),
                },
                cfg,
            ),
        );
        push(
            &mut rows,
            format!("exponential_{k}"),
            verify(
                &inst,
                &expo,
                expo_iv.as_ref(),
                Theorem::Slow {
                    alpha: 0.5,
                    beta: Some(0.5),
                    kappa: 0.0,
                    eta: Some(1.0),
                },
                cfg,
            ),
        );
        push(
            &mut rows,
            format!("truncated_normal_{k}"),
            verify(
                &inst,
                &normal,
                normal_iv.as_ref(),
                Theorem::RevImplications(RevVariant::TruncatedNormal),
                cfg,
            ),
        );
    }

    let passed = rows.iter().filter(|r| r.exit_code == 0).count();
    let failed = rows.iter().filter(|r| r.exit_code == 2).count();
    BatteryReport {
        seed,
        cases: count,
        passed,
        failed,
        hypothesis_not_met: rows.len() - passed - failed,
        rows,
    }
}
