//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! with its runtime, and the run exits non-zero if any criterion fails.
//! Runs without the libtest harness so the lines are never captured.
//!
//! Reference values come from closed forms or brute-force oracles written
//! here, not from the library code under test.

use std::time::{Duration, Instant};

use agency::allocation::{envelope_rule, virtual_rule};
use agency::battery::{binary_action_cases, cases, idle_top_uniform_cases, run_battery};
use agency::canonical::{build, gap, non_implementable_dist, non_implementable_instance, Depth, ExampleParams};
use agency::conditions::{top_type_idle, ScanConfig};
use agency::incentives::{
    agent_utility_identity, binary_action_optimal, certify_non_implementable_at, ic_grid_check, CurvatureEngine,
    PaymentBox,
};
use agency::metrics::{best_linear, linear_revenue, total_virtual_welfare};
use agency::typedist::DEFAULT_GRID;
use agency::{Instance, IronedVirtualCost, PaymentProfile, TwoFloat, TypeDistribution};

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(results: &mut Vec<(usize, bool)>, id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let pass = out.pass && took <= budget;
    let status = if pass { "PASS" } else { "FAIL" };
    println!(
        "{status} [{id:>2}] {name}: {} ({took:.2?}, budget {budget:?})",
        out.detail
    );
    results.push((id, pass));
}

// ---------- oracles ----------

/// Principal utility of the agent's brute-force best response to expected
/// payments `pay` at cost `c`; utility ties go to the principal.
fn brute_principal(inst: &Instance, pay: &[f64], c: f64) -> f64 {
    let mut best: Option<(f64, f64)> = None;
    for (i, &t) in pay.iter().enumerate() {
        let u = t - inst.gamma(i) * c;
        let p = inst.big_r(i) - t;
        best = match best {
            None => Some((u, p)),
            Some((bu, bp)) if u > bu + 1e-9 || (u >= bu - 1e-9 && p > bp) => Some((u, p)),
            keep => keep,
        };
    }
    best.expect("actions").1
}

fn brute_action(inst: &Instance, pay: &[f64], c: f64) -> usize {
    let mut best = (0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, &t) in pay.iter().enumerate() {
        let u = t - inst.gamma(i) * c;
        let p = inst.big_r(i) - t;
        if u > best.1 + 1e-9 || (u >= best.1 - 1e-9 && p >= best.2) {
            best = (i, u, p);
        }
    }
    best.0
}

/// Adaptive Simpson with a depth cap.
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

/// Integrates a piecewise-smooth `f` over `[a, b]`, splitting at `cuts` and
/// at every place where `piece(c)` changes value on a fine grid (located by
/// bisection). Pieces are integrated strictly inside.
fn piecewise_integral(f: &dyn Fn(f64) -> f64, piece: &dyn Fn(f64) -> usize, a: f64, b: f64, cuts: &[f64]) -> f64 {
    let mut pts: Vec<f64> = vec![a, b];
    pts.extend(cuts.iter().copied().filter(|x| *x > a && *x < b));
    let grid = 4000;
    let mut prev = piece(a + (b - a) * 1e-9);
    for k in 1..=grid {
        let x = a + (b - a) * k as f64 / grid as f64;
        let cur = piece(x.min(b - (b - a) * 1e-9));
        if cur != prev {
            let (mut lo, mut hi) = (a + (b - a) * (k - 1) as f64 / grid as f64, x);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if piece(mid) == prev {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            pts.push(0.5 * (lo + hi));
            prev = cur;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|w| {
            let e = (w[1] - w[0]) * 1e-10;
            adaptive(f, w[0] + e, w[1] - e, 1e-13)
        })
        .sum()
}

fn oracle_linear_revenue(inst: &Instance, dist: &TypeDistribution, alpha: f64) -> f64 {
    let pay: Vec<f64> = (0..inst.num_actions()).map(|i| alpha * inst.big_r(i)).collect();
    let (a, b) = (dist.low(), dist.grid_high());
    piecewise_integral(
        &|c| brute_principal(inst, &pay, c) * dist.pdf(c),
        &|c| brute_action(inst, &pay, c),
        a,
        b,
        &dist.kinks(),
    )
}

fn oracle_virtual_welfare(inst: &Instance, iv: &IronedVirtualCost) -> f64 {
    let dist = iv.dist();
    let surplus = |c: f64| {
        let phi = iv.value(c);
        (0..inst.num_actions())
            .map(|i| inst.big_r(i) - inst.gamma(i) * phi)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let argmax = |c: f64| {
        let phi = iv.value(c);
        (0..inst.num_actions())
            .max_by(|&x, &y| (inst.big_r(x) - inst.gamma(x) * phi).total_cmp(&(inst.big_r(y) - inst.gamma(y) * phi)))
            .expect("actions")
    };
    let mut cuts = dist.kinks();
    for p in iv.pieces() {
        cuts.push(p.from);
        cuts.push(p.to);
    }
    piecewise_integral(
        &|c| surplus(c) * dist.pdf(c),
        &argmax,
        dist.low(),
        dist.grid_high(),
        &cuts,
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

// ---------- criteria ----------

fn c1_uniform_virtual_cost() -> Outcome {
    let mut worst = 0.0f64;
    for c_high in [1.0, 2.5, 7.0] {
        let d = TypeDistribution::uniform(0.0, c_high).expect("valid");
        let iv = d.iron(DEFAULT_GRID).expect("atom-free");
        for k in 0..1000 {
            let c = c_high * (k as f64 + 0.5) / 1000.0;
            let raw = d.virtual_cost(c).expect("atom-free");
            worst = worst.max((raw - 2.0 * c).abs()).max((iv.value(c) - 2.0 * c).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max |phi(c) - 2c| = {worst:.2e} over 3000 points (tol 1e-12)"),
    }
}

fn c2_non_implementable() -> Outcome {
    let inst = non_implementable_instance();
    let dist = non_implementable_dist();
    // φ = c + G/g from the density written out by hand.
    let d = 20.0 / 23.0;
    let segs = [(0.0, 1.0, d), (1.0, 4.0, 0.025 * d), (4.0, 10.0, 0.0125 * d)];
    let g_at = |c: f64| -> (f64, f64) {
        let mut cdf = 0.0;
        for &(a, b, h) in &segs {
            if c > b {
                cdf += h * (b - a);
            } else if c > a {
                return (cdf + h * (c - a), h);
            }
        }
        (cdf, 0.0)
    };
    let shifts = [0.0, 39.0, 82.0];
    let mut seg_err = 0.0f64;
    for (&(a, b, _), shift) in segs.iter().zip(shifts) {
        for k in 1..200 {
            let c = a + (b - a) * k as f64 / 200.0;
            let (cdf, pdf) = g_at(c);
            let oracle = c + cdf / pdf;
            let lib = dist.virtual_cost(c).expect("atom-free");
            seg_err = seg_err
                .max((oracle - (2.0 * c + shift)).abs())
                .max((lib - oracle).abs());
        }
    }
    let iv = dist.iron(DEFAULT_GRID).expect("atom-free");
    let rule = virtual_rule(&inst, &iv, (0.0, 10.0));
    let bps = rule.breakpoints();
    let interior = &bps[1..bps.len() - 1];
    let bp_err = if interior.len() == 3 {
        [9.0, 4.0, 1.0]
            .iter()
            .zip(interior)
            .map(|(w, h)| (w - h).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let bx = PaymentBox::default_for(&inst);
    let cert = certify_non_implementable_at(&inst, &rule, 4.0, bx);
    Outcome {
        pass: seg_err <= 1e-9 && bp_err <= 1e-6 && cert.certificate,
        detail: format!(
            "phi segment error {seg_err:.2e} (tol 1e-9), breakpoint error {bp_err:.2e} (tol 1e-6), \
             certificate at c=4: {} over {} consistent profiles (grid step {}, box [0, {}])",
            cert.certificate, cert.consistent_checked, bx.step, bx.high
        ),
    }
}

fn c3_gap() -> Outcome {
    let (n, delta) = (10usize, 0.01);
    let ex = gap(n, delta).expect("valid parameters");
    let inst: Instance<TwoFloat> = agency::canonical::scaling_instance(n, delta);
    let point = TypeDistribution::atom(1.0).expect("valid");
    let rev = f64::from(best_linear(&inst, &point, None).revenue);
    // Welfare at c = 1 is max_i (i + 1 - δ i).
    let wel_oracle = (0..=n)
        .map(|i| if i == 0 { 0.0 } else { i as f64 + 1.0 - delta * i as f64 })
        .fold(0.0, f64::max);
    let wel = f64::from(agency::metrics::total_welfare(&inst, &point));
    let ratio = wel / rev;
    Outcome {
        pass: rev <= 2.0 + 1e-6 && (wel - 10.9).abs() <= 1e-9 && (wel_oracle - 10.9).abs() <= 1e-12 && ratio >= 5.4499
            && ex.pass(),
        detail: format!("best linear revenue {rev:.9} (<= 2 + 1e-6), welfare {wel:.12} (10.9 +/- 1e-9), ratio {ratio:.6} (>= 5.4499)"),
    }
}

fn c4_uniform_optimality() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut idle = true;
    for (inst, dist) in idle_top_uniform_cases(42, 20) {
        let iv = dist.iron(DEFAULT_GRID).expect("atom-free");
        idle &= top_type_idle(&inst, &iv);
        let rev = linear_revenue(&inst, &dist, 0.5);
        let vwel = oracle_virtual_welfare(&inst, &iv);
        worst = worst.min((rev - vwel * (1.0 - 1e-6)) / vwel.abs().max(1e-12));
    }
    Outcome {
        pass: idle && worst >= 0.0,
        detail: format!("20 instances, top type idle: {idle}, min (rev(1/2) - (1-1e-6) VWel)/VWel = {worst:.3e}"),
    }
}

fn c5_closed_forms() -> Outcome {
    let (mut lin, mut vw) = (0.0f64, 0.0f64);
    for case in cases(42, 50) {
        let dist = TypeDistribution::new(case.dist.clone()).expect("valid");
        let iv = dist.iron(DEFAULT_GRID).expect("atom-free");
        for alpha in [0.2, 0.5, 0.8] {
            lin = lin.max(rel(
                linear_revenue(&case.instance, &dist, alpha),
                oracle_linear_revenue(&case.instance, &dist, alpha),
            ));
        }
        vw = vw.max(rel(
            total_virtual_welfare(&case.instance, &iv),
            oracle_virtual_welfare(&case.instance, &iv),
        ));
    }
    Outcome {
        pass: lin <= 1e-6 && vw <= 1e-6,
        detail: format!("max relative error: linear revenue {lin:.2e}, virtual welfare {vw:.2e} (tol 1e-6)"),
    }
}

fn c6_battery() -> Outcome {
    let report = run_battery(42, 50, ScanConfig::default());
    let needed = [
        "universal",
        "slow",
        "lin_bounded_1",
        "lin_bounded_2",
        "upper_n",
        "smooth",
        "rev_implications_normal",
    ];
    let missing: Vec<&str> = needed
        .iter()
        .copied()
        .filter(|t| !report.rows.iter().any(|r| r.verdict.theorem == *t && r.exit_code == 0))
        .collect();
    let smooth_ok = report
        .rows
        .iter()
        .filter(|r| r.verdict.theorem == "smooth")
        .all(|r| r.exit_code == 0);
    let special_ok = report
        .rows
        .iter()
        .filter(|r| r.case.starts_with("exponential") || r.case.starts_with("truncated_normal"))
        .all(|r| r.exit_code == 0);
    Outcome {
        pass: report.failed == 0 && missing.is_empty() && smooth_ok && special_ok,
        detail: format!(
            "{} verdicts: {} pass, {} fail, {} hypothesis not met; smoothing and exponential/normal cases all pass: {}",
            report.rows.len(),
            report.passed,
            report.failed,
            report.hypothesis_not_met,
            smooth_ok && special_ok
        ),
    }
}

fn c7_menu() -> Outcome {
    let (n, r1, r2) = (8usize, 10.0, 27.0);
    let ex = build(
        ExampleParams::Menu {
            n,
            r1,
            r2,
            c_high: None,
        },
        Depth::Full,
    )
    .expect("valid");
    let inst = &ex.instance;
    let contract = ex.contract.as_ref().expect("contract");
    let dr = r2 - r1;
    let nf = n as f64;
    let pays: Vec<Vec<f64>> = contract.profiles().iter().map(|p| inst.expected_payments(p)).collect();
    let top: Vec<f64> = (0..=n)
        .map(|i| pays.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let pay_err = (1..=n)
        .map(|i| {
            let fi = i as f64;
            (top[i] - (r1 / 2.0 + fi * dr / (2.0 * nf) + fi * fi / (2.0 * nf))).abs()
        })
        .fold(0.0, f64::max);
    let mut want = vec![(nf * r1 + dr + 1.0) / 2.0];
    want.extend((1..n).map(|i| dr / (4 * i + 2) as f64 + 0.5));
    // Switch points of the brute-force best response to the whole menu.
    let c_high = want[0] + 1.0;
    let mut found = Vec::new();
    let grid = 200_000;
    let mut prev = brute_action(inst, &top, c_high);
    for k in (0..grid).rev() {
        let c = 1.0 + (c_high - 1.0) * k as f64 / grid as f64;
        let cur = brute_action(inst, &top, c);
        if cur != prev {
            let (mut lo, mut hi) = (c, 1.0 + (c_high - 1.0) * (k + 1) as f64 / grid as f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if brute_action(inst, &top, mid) == cur {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            found.push(0.5 * (lo + hi));
            prev = cur;
        }
    }
    let bp_err = if found.len() == want.len() {
        want.iter().zip(&found).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let size = contract.profiles().len();
    Outcome {
        pass: size == 4 && pay_err <= 1e-9 && bp_err <= 1e-6 && ex.pass(),
        detail: format!(
            "{size} profiles, payment error {pay_err:.2e} (tol 1e-9), breakpoint error {bp_err:.2e} (tol 1e-6)"
        ),
    }
}

fn c8_non_monotone() -> Outcome {
    let ex = build(
        ExampleParams::NonMonotone {
            delta: 0.02,
            eps: 0.01,
            step: 0.01,
            t_max: 2.0,
        },
        Depth::Full,
    )
    .expect("valid");
    let audit = ex.audit.as_ref().expect("full depth runs the audit");
    // Under t = (0, 0, 1, 0) the type-1 agent takes action 2 and pays 0.5.
    let inst = &ex.instance;
    let pay = inst.expected_payments(&PaymentProfile::new(vec![0.0, 0.0, 1.0, 0.0]).expect("non-negative"));
    let rev_h = brute_principal(inst, &pay, 1.0);
    Outcome {
        pass: (audit.revenue_h - 0.5).abs() <= 1e-12 && (rev_h - 0.5).abs() <= 1e-12 && audit.revenue_g_upper < 0.5,
        detail: format!(
            "revenue_H = {} (oracle {rev_h}), best grid revenue for G = {:.6} < 0.5 over {} contracts \
             (step {}, t_0 = 0, grid-relative)",
            audit.revenue_h, audit.revenue_g_upper, audit.contracts_checked, audit.step
        ),
    }
}

fn c9_ic_suite() -> Outcome {
    let mut failures = 0usize;
    let mut checks = 0usize;
    let mut min_second = f64::INFINITY;
    let mut max_first = f64::NEG_INFINITY;
    let mut util_err = 0.0f64;
    for case in cases(7, 10) {
        let inst = &case.instance;
        let c_high = 3.0;
        for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let rule = envelope_rule(inst, alpha, (0.0, c_high));
            let t = PaymentProfile::linear(inst, alpha);
            let pay = inst.expected_payments(&t);
            let mut engine = CurvatureEngine::new(inst, &rule);
            let u_direct = |c: f64| {
                (0..inst.num_actions())
                    .map(|i| pay[i] - inst.gamma(i) * c)
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let u_bar = u_direct(c_high);
            let mut us = Vec::with_capacity(1000);
            for k in 0..1000 {
                let c = c_high * k as f64 / 999.0;
                let (d, _) = engine.max_deviation(c, &pay);
                checks += 1;
                if d > 1e-9 {
                    failures += 1;
                }
                let u = agent_utility_identity(inst, &rule, c, u_bar);
                util_err = util_err.max((u - u_direct(c)).abs());
                us.push(u);
            }
            for w in us.windows(3) {
                min_second = min_second.min(w[0] - 2.0 * w[1] + w[2]);
            }
            for w in us.windows(2) {
                max_first = max_first.max(w[1] - w[0]);
            }
        }
    }
    Outcome {
        pass: failures == 0 && min_second >= -1e-8 && max_first <= 1e-12 && util_err <= 1e-9,
        detail: format!(
            "{checks} curvature checks, {failures} failures; min second difference {min_second:.2e} (>= -1e-8), \
             max first difference {max_first:.2e}, identity vs direct utility {util_err:.2e}"
        ),
    }
}

fn c10_binary_action() -> Outcome {
    let dist = TypeDistribution::uniform(0.0, 1.0).expect("valid");
    let iv = dist.iron(DEFAULT_GRID).expect("atom-free");
    let mut ic_ok = true;
    let mut worst = 0.0f64;
    for inst in binary_action_cases(42, 10) {
        let out = binary_action_optimal(&inst, &iv, 1000).expect("hazard-rent holds");
        let ic = ic_grid_check(&inst, &out.contract, 1000, false);
        ic_ok &= ic.pass && out.ic.pass;
        worst = worst.max(rel(out.revenue, oracle_virtual_welfare(&inst, &iv)));
    }
    Outcome {
        pass: ic_ok && worst <= 1e-6,
        detail: format!(
            "10 instances, IC grid checks pass: {ic_ok}, max |revenue - VWel|/VWel = {worst:.2e} (tol 1e-6)"
        ),
    }
}

fn main() {
    let mut results = Vec::new();
    let s = Duration::from_secs;
    criterion(&mut results, 1, "uniform virtual cost", s(1), c1_uniform_virtual_cost);
    criterion(&mut results, 2, "non-implementable rule", s(60), c2_non_implementable);
    criterion(&mut results, 3, "linear vs welfare gap", s(5), c3_gap);
    criterion(
        &mut results,
        4,
        "uniform optimality of linear",
        s(10),
        c4_uniform_optimality,
    );
    criterion(&mut results, 5, "closed forms vs quadrature", s(30), c5_closed_forms);
    criterion(&mut results, 6, "theorem battery", s(120), c6_battery);
    criterion(&mut results, 7, "menu example", s(5), c7_menu);
    criterion(&mut results, 8, "non-monotone revenue", s(600), c8_non_monotone);
    criterion(&mut results, 9, "IC property suite", s(30), c9_ic_suite);
    criterion(&mut results, 10, "binary-action construction", s(30), c10_binary_action);
    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
