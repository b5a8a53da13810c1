//! A menu with ⌈n/2⌉ profiles that implements the virtual-welfare rule
//! for n actions, verified on a type grid.
//!
//! Run with `cargo run --example menu_contract`.

use agency::canonical::{build, menu_breakpoints, menu_payment, Depth, ExampleParams};
use agency::incentives::{ic_grid_check, induced_rule, menu_revenue, menu_revenue_quadrature, menu_size};

fn main() {
    let (n, r1, r2) = (8, 10.0, 27.0);
    let ex = build(
        ExampleParams::Menu {
            n,
            r1,
            r2,
            c_high: None,
        },
        Depth::Full,
    )
    .expect("valid parameters");
    let inst = &ex.instance;
    let contract = ex.contract.as_ref().expect("menu example carries its contract");
    let dist = ex.dist("uniform").expect("type distribution");

    for (k, p) in contract.profiles().iter().enumerate() {
        println!("profile {k}: {:?}", p.as_slice());
    }
    println!("target breakpoints  {:?}", menu_breakpoints(n, r1, r2));
    let rule = induced_rule(inst, contract);
    println!("induced breakpoints {:?}", rule.breakpoints());
    println!("{} actions served by {} profiles", inst.n(), menu_size(contract));

    for (lo, hi, i) in rule.intervals() {
        let c = 0.5 * (lo + hi);
        let br = inst.best_response(contract.profile_at(c), c);
        println!(
            "  types ({lo:.3}, {hi:.3}): action {i}, payment {:.4}, closed form {:.4}",
            br.expected_payment,
            if i == 0 { 0.0 } else { menu_payment(n, r1, r2, i) }
        );
    }

    let report = ic_grid_check(inst, contract, 1000, false);
    println!(
        "IC grid check over {} types: pass {} max regret {:.2e} max D* {:.2e}",
        report.types_checked, report.pass, report.max_regret, report.max_d_star
    );
    println!(
        "expected revenue {:.6} (quadrature {:.6})",
        menu_revenue(inst, dist, contract),
        menu_revenue_quadrature(inst, dist, contract)
    );
    println!("all facts pass: {}", ex.pass());
}
