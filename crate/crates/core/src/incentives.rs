//! Incentive compatibility for menus of contracts.
//!
//! A menu assigns a payment profile to every cost type. A rule `x` is
//! implemented at type `c` by profile `t` when `x(c)` is a best response to
//! `t` and the curvature integral
//! `D(c') = ∫_c^{c'} γ_{x(z)} - γ_{i*(t,z)} dz` never goes positive.
//! Both integrands are step functions, so `D` is piecewise linear and its
//! maximum is found exactly at merged breakpoints.

use serde::{Deserialize, Serialize};

use crate::allocation::{rule_from_payments, upper_envelope_into, virtual_rule, AllocationRule};
use crate::instance::{Instance, PaymentProfile};
use crate::metrics::{simpson, total_virtual_welfare, SIMPSON_PANELS};
use crate::scalar::Real;
use crate::typedist::{IronedVirtualCost, TypeDistribution};

pub const IC_TOL: f64 = 1e-9;
/// Uniform types checked by [`ic_grid_check`] besides all breakpoints.
pub const IC_GRID: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct ContractError {
    pub key: String,
    pub message: String,
}

fn bad(key: impl Into<String>, message: impl Into<String>) -> ContractError {
    ContractError {
        key: key.into(),
        message: message.into(),
    }
}

/// On-disk form of a menu contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractFile {
    pub profiles: Vec<Vec<f64>>,
    pub assignment: AssignmentFile,
    #[serde(default)]
    pub u_bar: f64,
}

/// Descending breakpoints and the profile used on each `(z_{i+1}, z_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentFile {
    pub breakpoints: Vec<f64>,
    pub profile_index: Vec<usize>,
}

/// Finite set of payment profiles plus a type-to-profile map.
#[derive(Debug, Clone, PartialEq)]
pub struct MenuContract {
    profiles: Vec<PaymentProfile>,
    assignment: AllocationRule,
    u_bar: f64,
}

impl MenuContract {
    pub fn new(profiles: Vec<PaymentProfile>, assignment: AllocationRule, u_bar: f64) -> Result<Self, ContractError> {
        if profiles.is_empty() {
            return Err(bad("profiles", "at least one profile is required"));
        }
        let width = profiles[0].len();
        for (k, p) in profiles.iter().enumerate() {
            if p.len() != width {
                return Err(bad(
                    format!("profiles[{k}]"),
                    format!("has {} entries, expected {width}", p.len()),
                ));
            }
        }
        for (_, _, k) in assignment.intervals() {
            if k >= profiles.len() {
                return Err(bad(
                    "assignment.profile_index",
                    format!("index {k} out of range for {} profiles", profiles.len()),
                ));
            }
        }
        Ok(Self {
            profiles,
            assignment,
            u_bar,
        })
    }

    /// One profile for every type.
    pub fn single(profile: PaymentProfile, (low, high): (f64, f64)) -> Self {
        Self {
            profiles: vec![profile],
            assignment: AllocationRule::constant(0, low, high),
            u_bar: 0.0,
        }
    }

    pub fn from_file(file: &ContractFile, instance: &Instance) -> Result<Self, ContractError> {
        let mut profiles = Vec::with_capacity(file.profiles.len());
        for (k, p) in file.profiles.iter().enumerate() {
            if p.len() != instance.num_outcomes() {
                return Err(bad(
                    format!("profiles[{k}]"),
                    format!(
                        "has {} entries, instance has {} outcomes",
                        p.len(),
                        instance.num_outcomes()
                    ),
                ));
            }
            if let Some(j) = p.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(bad(
                    format!("profiles[{k}][{j}]"),
                    format!("payment {} must be finite and >= 0", p[j]),
                ));
            }
            profiles.push(PaymentProfile::new(p.clone()).expect("checked non-negative"));
        }
        let a = &file.assignment;
        let assignment = AllocationRule::piecewise(a.breakpoints.clone(), a.profile_index.clone())
            .map_err(|e| bad("assignment", e.to_string()))?;
        if !file.u_bar.is_finite() {
            return Err(bad("u_bar", "must be finite"));
        }
        Self::new(profiles, assignment, file.u_bar)
    }

    pub fn to_file(&self) -> ContractFile {
        ContractFile {
            profiles: self.profiles.iter().map(|p| p.as_slice().to_vec()).collect(),
            assignment: AssignmentFile {
                breakpoints: self.assignment.breakpoints(),
                profile_index: self.assignment.actions(),
            },
            u_bar: self.u_bar,
        }
    }

    pub fn profiles(&self) -> &[PaymentProfile] {
        &self.profiles
    }

    pub fn assignment(&self) -> &AllocationRule {
        &self.assignment
    }

    pub fn u_bar(&self) -> f64 {
        self.u_bar
    }

    pub fn support(&self) -> (f64, f64) {
        (self.assignment.low(), self.assignment.high())
    }

    pub fn profile_at(&self, c: f64) -> &PaymentProfile {
        &self.profiles[self.assignment.action_at(c)]
    }
}

fn rounded(p: &PaymentProfile) -> Vec<i64> {
    p.as_slice().iter().map(|x| (x / 1e-9).round() as i64).collect()
}

/// Distinct profiles the assignment actually uses, compared after
/// rounding to `1e-9`.
pub fn menu_size(contract: &MenuContract) -> usize {
    let mut seen: Vec<Vec<i64>> = contract
        .assignment
        .intervals()
        .map(|(_, _, k)| rounded(&contract.profiles[k]))
        .collect();
    seen.sort();
    seen.dedup();
    seen.len()
}

/// `u(c) = u(c̄) + ∫_c^{c̄} γ_{x(z)} dz`.
pub fn agent_utility_identity(instance: &Instance, rule: &AllocationRule, c: f64, u_bar: f64) -> f64 {
    rule.effort_integral(instance, c, rule.high()) + u_bar
}

/// The unique expected payment `T^c_{x(c)}` an implementation of `rule`
/// must make at type `c`.
pub fn expected_payment_identity(instance: &Instance, rule: &AllocationRule, c: f64, u_bar: f64) -> f64 {
    instance.gamma(rule.action_at(c)) * c + agent_utility_identity(instance, rule, c, u_bar)
}

/// The step function `γ_{x(·)}` of a rule, ready for repeated curvature
/// evaluations without allocation.
pub struct CurvatureEngine<'a> {
    instance: &'a Instance,
    edges: Vec<f64>,
    efforts: Vec<f64>,
    hull: Vec<(usize, f64)>,
}

impl<'a> CurvatureEngine<'a> {
    pub fn new(instance: &'a Instance, rule: &AllocationRule) -> Self {
        let mut edges = vec![rule.low()];
        let mut efforts = Vec::new();
        for (_, hi, a) in rule.intervals() {
            edges.push(hi);
            efforts.push(instance.gamma(a));
        }
        Self {
            instance,
            edges,
            efforts,
            hull: Vec::with_capacity(instance.num_actions()),
        }
    }

    /// `max_{c'} D(c')` and its argmax for anchor `c` under expected
    /// payments `pay`.
    pub fn max_deviation(&mut self, c: f64, pay: &[f64]) -> (f64, f64) {
        let inst = self.instance;
        let tol = inst.utility_tie();
        let rewards = inst.expected_rewards();
        upper_envelope_into(
            pay,
            inst.gammas(),
            <f64 as Real>::cost_merge(),
            tol,
            |i, j| {
                let (a, b) = (rewards[i] - pay[i], rewards[j] - pay[j]);
                a > b + tol || (a >= b - tol && i > j)
            },
            &mut self.hull,
        );
        let (low, high) = (self.edges[0], self.edges[self.edges.len() - 1]);
        let hull = &self.hull;
        let mut iy = hull.partition_point(|h| h.1 <= low).saturating_sub(1);
        let y_end = |k: usize| hull.get(k + 1).map_or(f64::INFINITY, |h| h.1);
        let mut ix = 0usize;
        let mut z = low;
        let mut p = 0.0f64;
        let mut p_at_c = if c <= low { Some(0.0) } else { None };
        let (mut best, mut arg) = (0.0f64, low);
        while z < high && ix < self.efforts.len() {
            let next = self.edges[ix + 1].min(y_end(iy)).min(high);
            let h = self.efforts[ix] - inst.gamma(hull[iy].0);
            if p_at_c.is_none() && c <= next {
                p_at_c = Some(p + h * (c - z));
            }
            p += h * (next - z);
            if p > best {
                best = p;
                arg = next;
            }
            z = next;
            if self.edges[ix + 1] <= z {
                ix += 1;
            }
            if y_end(iy) <= z {
                iy += 1;
            }
        }
        let pc = p_at_c.unwrap_or(p);
        (best.max(0.0) - pc, arg)
    }
}

/// Result of checking one type against one payment profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureCheck {
    pub anchor: f64,
    pub allocated_action: usize,
    pub chosen_action: usize,
    pub consistent: bool,
    pub worst_type: f64,
    pub d_star: f64,
    pub pass: bool,
}

fn consistent_at(instance: &Instance, pay: &[f64], action: usize, c: f64) -> bool {
    let u = |i: usize| pay[i] - instance.gamma(i) * c;
    let top = (0..pay.len()).map(u).fold(f64::NEG_INFINITY, f64::max);
    u(action) >= top - instance.utility_tie()
}

/// Checks that `t_c` implements `rule` at type `c`.
pub fn curvature_check(instance: &Instance, rule: &AllocationRule, c: f64, t_c: &PaymentProfile) -> CurvatureCheck {
    let pay = instance.expected_payments(t_c);
    let mut engine = CurvatureEngine::new(instance, rule);
    curvature_with(&mut engine, instance, rule, c, &pay)
}

fn curvature_with(
    engine: &mut CurvatureEngine,
    instance: &Instance,
    rule: &AllocationRule,
    c: f64,
    pay: &[f64],
) -> CurvatureCheck {
    let allocated = rule.action_at(c);
    let chosen = instance.best_response_to(pay, c).action;
    let consistent = consistent_at(instance, pay, allocated, c);
    let (d_star, worst) = max_deviation_exact(engine, c, pay);
    CurvatureCheck {
        anchor: c,
        allocated_action: allocated,
        chosen_action: chosen,
        consistent,
        worst_type: worst,
        d_star,
        pass: consistent && d_star <= IC_TOL,
    }
}

fn max_deviation_exact(engine: &mut CurvatureEngine, c: f64, pay: &[f64]) -> (f64, f64) {
    let (d, arg) = engine.max_deviation(c, pay);
    (d.max(0.0), arg)
}

/// Payment grid `[low, high]` with spacing `step` on every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaymentBox {
    pub low: f64,
    pub high: f64,
    pub step: f64,
}

impl PaymentBox {
    /// `[0, 4 max r]` with step `max r / 600`.
    pub fn default_for(instance: &Instance) -> Self {
        let top = instance.max_reward();
        Self {
            low: 0.0,
            high: 4.0 * top,
            step: top / 600.0,
        }
    }

    fn points(&self) -> usize {
        ((self.high - self.low) / self.step + 1e-9).floor() as usize + 1
    }

    fn value(&self, k: usize) -> f64 {
        self.low + self.step * k as f64
    }
}

/// Outcome of exhausting a payment grid at one type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// True when every consistent grid payment violates the curvature
    /// condition. Only as strong as the grid.
    pub certificate: bool,
    pub grid_relative: bool,
    pub anchor: f64,
    pub allocated_action: usize,
    pub payment_box: PaymentBox,
    pub points_per_coordinate: usize,
    pub enumerated: u64,
    pub consistent_checked: u64,
    pub min_d_star: Option<f64>,
    pub min_d_star_at: Option<Vec<f64>>,
    pub witness: Option<Vec<f64>>,
}

/// Enumerates every payment profile on the grid that makes `rule(c)` a
/// best response at `c` and runs the curvature check on it. Stops at the
/// first profile that passes.
///
/// The null outcome only occurs under the null action, so `t_0` moves the
/// null action's payment alone; it is swept only over the values that keep
/// the allocated action optimal.
pub fn certify_non_implementable_at(
    instance: &Instance,
    rule: &AllocationRule,
    c: f64,
    payment_box: PaymentBox,
) -> Certificate {
    let k = payment_box.points();
    let m = instance.num_outcomes();
    let x = rule.action_at(c);
    let tol = instance.utility_tie();
    let probs = instance.outcome_probs();
    let mut engine = CurvatureEngine::new(instance, rule);
    let mut idx = vec![0usize; m.saturating_sub(1)];
    let mut t = vec![payment_box.low; m];
    let mut pay = vec![0.0; instance.num_actions()];
    let mut cert = Certificate {
        certificate: true,
        grid_relative: true,
        anchor: c,
        allocated_action: x,
        payment_box,
        points_per_coordinate: k,
        enumerated: 0,
        consistent_checked: 0,
        min_d_star: None,
        min_d_star_at: None,
        witness: None,
    };
    'outer: loop {
        for (j, v) in idx.iter().enumerate() {
            t[j + 1] = payment_box.value(*v);
        }
        for (i, row) in probs.iter().enumerate().skip(1) {
            pay[i] = (1..m).map(|j| row[j] * t[j]).sum();
        }
        let best_other = (1..pay.len())
            .map(|i| pay[i] - instance.gamma(i) * c)
            .fold(f64::NEG_INFINITY, f64::max);
        let ux = if x == 0 {
            None
        } else {
            Some(pay[x] - instance.gamma(x) * c)
        };
        let t0_range = match ux {
            Some(u) if u >= best_other - tol => (payment_box.low, u + tol),
            Some(_) => (1.0, 0.0),
            None => (best_other - tol, f64::INFINITY),
        };
        cert.enumerated += k as u64;
        let step = payment_box.step;
        let first = ((t0_range.0 - payment_box.low) / step).ceil().max(0.0);
        let last = ((t0_range.1 - payment_box.low) / step).floor().min((k - 1) as f64);
        let span = (last >= first).then_some(first as usize..=last as usize);
        for k0 in span.into_iter().flatten() {
            let t0 = payment_box.value(k0);
            pay[0] = t0 * probs[0][0];
            cert.consistent_checked += 1;
            let (d, _) = max_deviation_exact(&mut engine, c, &pay);
            if cert.min_d_star.is_none_or(|m| d < m) {
                cert.min_d_star = Some(d);
                t[0] = t0;
                cert.min_d_star_at = Some(t.clone());
            }
            if d <= IC_TOL {
                t[0] = t0;
                cert.witness = Some(t.clone());
                cert.certificate = false;
                break 'outer;
            }
        }
        let mut j = 0;
        loop {
            if j == idx.len() {
                break 'outer;
            }
            idx[j] += 1;
            if idx[j] < k {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
    if cert.consistent_checked == 0 {
        cert.certificate = true;
    }
    cert
}

/// Allocation induced by a menu: within each assignment interval the agent
/// best-responds to the assigned profile.
pub fn induced_rule(instance: &Instance, contract: &MenuContract) -> AllocationRule {
    let (low, high) = contract.support();
    let mut edges = vec![low];
    let mut actions = Vec::new();
    for (lo, hi, k) in contract.assignment.intervals() {
        if hi <= lo {
            continue;
        }
        let sub = rule_from_payments(instance, &contract.profiles[k], (lo, hi));
        for (_, b, a) in sub.intervals() {
            edges.push(b);
            actions.push(a);
        }
    }
    if actions.is_empty() {
        let a = instance
            .best_response(&contract.profiles[contract.assignment.action_at(low)], low)
            .action;
        return AllocationRule::constant(a, low, high);
    }
    AllocationRule::from_ascending(edges, actions)
}

/// Expected principal revenue of a menu, exact over best-response
/// intervals. Atoms use the best response at the atom itself.
pub fn menu_revenue(instance: &Instance, dist: &TypeDistribution, contract: &MenuContract) -> f64 {
    let mut total = 0.0;
    if dist.continuous_weight() > 0.0 {
        for (lo, hi, k) in contract.assignment.intervals() {
            let (lo, hi) = (lo.max(dist.low()), hi.min(dist.high()));
            if hi <= lo {
                continue;
            }
            let t = &contract.profiles[k];
            let pay = instance.expected_payments(t);
            let sub = rule_from_payments(instance, t, (lo, hi));
            for (a, b, act) in sub.intervals() {
                total += (instance.big_r(act) - pay[act]) * dist.continuous_mass(a, b);
            }
        }
    }
    for &(at, mass) in dist.atoms() {
        let br = instance.best_response(contract.profile_at(at), at);
        total += br.principal_utility * mass;
    }
    total
}

/// Oracle for [`menu_revenue`]: Simpson per assignment interval with a
/// best response at every node.
pub fn menu_revenue_quadrature(instance: &Instance, dist: &TypeDistribution, contract: &MenuContract) -> f64 {
    let mut total = 0.0;
    for (lo, hi, k) in contract.assignment.intervals() {
        let (lo, hi) = (lo.max(dist.low()), hi.min(dist.grid_high()));
        if hi <= lo {
            continue;
        }
        let t = &contract.profiles[k];
        let mut pts: Vec<f64> = vec![lo, hi];
        pts.extend(rule_from_payments(instance, t, (lo, hi)).interior().iter().copied());
        pts.extend(dist.kinks().into_iter().filter(|x| *x > lo && *x < hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        for w in pts.windows(2) {
            total += simpson(
                |c| instance.best_response(t, c).principal_utility * dist.pdf(c),
                w[0],
                w[1],
                SIMPSON_PANELS,
            );
        }
    }
    for &(at, mass) in dist.atoms() {
        total += instance.best_response(contract.profile_at(at), at).principal_utility * mass;
    }
    total
}

/// Grid verification of a menu.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IcReport {
    pub types_checked: usize,
    /// Largest gain from reporting another type.
    pub max_regret: f64,
    pub max_regret_type: f64,
    /// Largest curvature violation against the induced rule.
    pub max_d_star: f64,
    pub max_d_star_type: f64,
    pub curvature_failures: usize,
    pub pass: bool,
    pub checks: Vec<CurvatureCheck>,
}

/// Checks truthful reporting and the curvature condition at `grid`
/// uniform types plus every breakpoint.
pub fn ic_grid_check(instance: &Instance, contract: &MenuContract, grid: usize, keep_checks: bool) -> IcReport {
    let (low, high) = contract.support();
    let rule = induced_rule(instance, contract);
    let mut types: Vec<f64> = (0..grid.max(2))
        .map(|k| low + (high - low) * k as f64 / (grid.max(2) - 1) as f64)
        .collect();
    types.extend(rule.interior().iter().copied());
    types.extend(contract.assignment.interior().iter().copied());
    types.retain(|c| c.is_finite());
    types.sort_by(f64::total_cmp);
    types.dedup();

    let pays: Vec<Vec<f64>> = contract
        .profiles
        .iter()
        .map(|p| instance.expected_payments(p))
        .collect();
    let mut engine = CurvatureEngine::new(instance, &rule);
    let mut report = IcReport {
        types_checked: types.len(),
        max_regret: 0.0,
        max_regret_type: low,
        max_d_star: 0.0,
        max_d_star_type: low,
        curvature_failures: 0,
        pass: true,
        checks: Vec::new(),
    };
    for &c in &types {
        let k = contract.assignment.action_at(c);
        let own = instance.best_response_to(&pays[k], c).agent_utility;
        let best = pays
            .iter()
            .map(|p| instance.best_response_to(p, c).agent_utility)
            .fold(f64::NEG_INFINITY, f64::max);
        let regret = best - own;
        if regret > report.max_regret {
            report.max_regret = regret;
            report.max_regret_type = c;
        }
        let check = curvature_with(&mut engine, instance, &rule, c, &pays[k]);
        if check.d_star > report.max_d_star {
            report.max_d_star = check.d_star;
            report.max_d_star_type = c;
        }
        if !check.pass {
            report.curvature_failures += 1;
        }
        if keep_checks {
            report.checks.push(check);
        }
    }
    report.pass = report.max_regret <= IC_TOL && report.curvature_failures == 0;
    report
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PreconditionFailed {
    #[error("expected {expected}, instance has {found}")]
    Shape { expected: &'static str, found: usize },
    #[error("no likelihood-ratio maximizing outcome with positive probability for action {0}")]
    NoLikelihoodOutcome(usize),
    #[error("efficient action incentivization fails: gamma_2 q_12 / (gamma_1 q_2) = {0} > 1")]
    HazardRent(f64),
    #[error("first action requires effort {0}, expected 0")]
    EffortfulFirstAction(f64),
    #[error("F[1][1] = {f11} is below F[{i}][1] = {fi1}")]
    OutcomeOneOrder { i: usize, f11: f64, fi1: f64 },
    #[error("{0}")]
    Other(String),
}

/// Outcome maximizing `F[i][j] / F[other][j]`; an outcome the other
/// action never produces wins, larger `F[i][j]` breaking ties.
pub fn likelihood_outcome(instance: &Instance, i: usize, other: usize) -> Option<usize> {
    let f = instance.outcome_probs();
    let mut best: Option<(usize, f64)> = None;
    for j in 1..instance.num_outcomes() {
        if f[i][j] <= 0.0 {
            continue;
        }
        let ratio = if f[other][j] > 0.0 {
            f[i][j] / f[other][j]
        } else {
            f64::INFINITY
        };
        let better = match best {
            None => true,
            Some((b, r)) => ratio > r || (ratio == r && f[i][j] > f[i][b]),
        };
        if better {
            best = Some((j, ratio));
        }
    }
    best.map(|b| b.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct BinaryActionContract {
    #[serde(serialize_with = "ser_contract")]
    pub contract: MenuContract,
    pub rule: AllocationRule,
    pub likelihood_outcomes: [usize; 2],
    pub hazard_ratio: f64,
    pub revenue: f64,
    pub virtual_welfare: f64,
    pub ic: IcReport,
}

fn ser_contract<S: serde::Serializer>(c: &MenuContract, s: S) -> Result<S::Ok, S::Error> {
    c.to_file().serialize(s)
}

impl Serialize for MenuContract {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

/// Revenue-optimal menu for two non-null actions: implements the virtual
/// welfare maximizing rule with one profile per action, each paying only on
/// that action's likelihood-ratio outcome.
pub fn binary_action_optimal(
    instance: &Instance,
    iv: &IronedVirtualCost,
    ic_grid: usize,
) -> Result<BinaryActionContract, PreconditionFailed> {
    if instance.n() != 2 {
        return Err(PreconditionFailed::Shape {
            expected: "two non-null actions",
            found: instance.n(),
        });
    }
    let j1 = likelihood_outcome(instance, 1, 2).ok_or(PreconditionFailed::NoLikelihoodOutcome(1))?;
    let j2 = likelihood_outcome(instance, 2, 1).ok_or(PreconditionFailed::NoLikelihoodOutcome(2))?;
    let f = instance.outcome_probs();
    let (g1, g2) = (instance.gamma(1), instance.gamma(2));
    let hazard = g2 * f[1][j2] / (g1 * f[2][j2]);
    if !(hazard <= 1.0 + 1e-12) {
        return Err(PreconditionFailed::HazardRent(hazard));
    }
    let dist = iv.dist();
    let (low, high) = (dist.low(), dist.grid_high());
    let rule = virtual_rule(instance, iv, (low, high));

    let intervals: Vec<(f64, f64, usize)> = rule.intervals().collect();
    let c_top = intervals
        .iter()
        .filter(|iv| iv.2 != 0)
        .map(|iv| iv.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let m = instance.num_outcomes();
    let mut profiles: Vec<PaymentProfile> = Vec::new();
    let mut of_action = [None::<usize>; 3];
    for &(_, hi, a) in &intervals {
        if a == 0 {
            continue;
        }
        let j = if a == 1 { j1 } else { j2 };
        let c_i = hi;
        let rent = rule.effort_integral(instance, c_i, c_top);
        let mut t = vec![0.0; m];
        t[j] = (rent + c_i * instance.gamma(a)) / f[a][j];
        of_action[a] = Some(profiles.len());
        profiles.push(PaymentProfile::new(t).expect("non-negative"));
    }
    if profiles.is_empty() {
        profiles.push(PaymentProfile::zero(m));
    }
    let top_profile = intervals.iter().rev().find_map(|iv| of_action[iv.2]).unwrap_or(0);
    let mut edges = vec![low];
    let mut index = Vec::new();
    for &(_, hi, a) in &intervals {
        edges.push(hi);
        index.push(of_action[a].unwrap_or(top_profile));
    }
    let assignment = AllocationRule::from_ascending(edges, index);
    let contract =
        MenuContract::new(profiles, assignment, 0.0).map_err(|e| PreconditionFailed::Other(e.to_string()))?;
    let ic = ic_grid_check(instance, &contract, ic_grid, false);
    Ok(BinaryActionContract {
        revenue: menu_revenue(instance, dist, &contract),
        virtual_welfare: total_virtual_welfare(instance, iv),
        contract,
        rule,
        likelihood_outcomes: [j1, j2],
        hazard_ratio: hazard,
        ic,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BinaryOutcomeTransform {
    pub contract: MenuContract,
    pub revenue_before: f64,
    pub revenue_after: f64,
    pub ic: IcReport,
}

/// Removes payments on the null outcome: types that took the null action
/// get `t_0 / F[1][1]` on outcome 1 and take the effortless action 1
/// instead; everyone else keeps `(0, t_1, t_2)`.
pub fn binary_outcome_transform(
    instance: &Instance,
    dist: &TypeDistribution,
    contract: &MenuContract,
    ic_grid: usize,
) -> Result<BinaryOutcomeTransform, PreconditionFailed> {
    if instance.num_outcomes() != 3 {
        return Err(PreconditionFailed::Shape {
            expected: "outcomes 0, 1, 2",
            found: instance.num_outcomes(),
        });
    }
    if instance.n() < 1 || instance.gamma(1) != 0.0 {
        return Err(PreconditionFailed::EffortfulFirstAction(
            instance.gammas().get(1).copied().unwrap_or(f64::NAN),
        ));
    }
    let f = instance.outcome_probs();
    let f11 = f[1][1];
    if f11 <= 0.0 {
        return Err(PreconditionFailed::Other("F[1][1] must be positive".into()));
    }
    if let Some((i, row)) = f.iter().enumerate().skip(2).find(|(_, row)| row[1] > f11) {
        return Err(PreconditionFailed::OutcomeOneOrder { i, f11, fi1: row[1] });
    }
    let mut profiles: Vec<PaymentProfile> = Vec::new();
    let mut keys: Vec<Vec<i64>> = Vec::new();
    let mut intern = |p: PaymentProfile| {
        let key = rounded(&p);
        if let Some(k) = keys.iter().position(|x| *x == key) {
            return k;
        }
        keys.push(key);
        profiles.push(p);
        profiles.len() - 1
    };
    let (low, high) = contract.support();
    let mut edges = vec![low];
    let mut index = Vec::new();
    for (lo, hi, k) in contract.assignment.intervals() {
        let t = contract.profiles[k].as_slice();
        if hi <= lo {
            continue;
        }
        let sub = rule_from_payments(instance, &contract.profiles[k], (lo, hi));
        for (_, b, act) in sub.intervals() {
            let p = if act == 0 {
                vec![0.0, t[0] / f11, 0.0]
            } else {
                vec![0.0, t[1], t[2]]
            };
            index.push(intern(PaymentProfile::new(p).expect("non-negative")));
            edges.push(b);
        }
    }
    if index.is_empty() {
        let t = contract.profiles[contract.assignment.action_at(low)].as_slice();
        index.push(intern(
            PaymentProfile::new(vec![0.0, t[0] / f11, t[2]]).expect("non-negative"),
        ));
        edges.push(high);
    }
    let assignment = AllocationRule::from_ascending(edges, index);
    let out = MenuContract::new(profiles, assignment, contract.u_bar)
        .map_err(|e| PreconditionFailed::Other(e.to_string()))?;
    let ic = ic_grid_check(instance, &out, ic_grid, false);
    Ok(BinaryOutcomeTransform {
        revenue_before: menu_revenue(instance, dist, contract),
        revenue_after: menu_revenue(instance, dist, &out),
        contract: out,
        ic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::envelope_rule;
    use crate::typedist::{Segment, DEFAULT_GRID};
    use approx::assert_relative_eq;

    fn appx() -> Instance {
        Instance::new(
            vec![0.0, 1.0, 3.0, 5.5],
            vec![0.0, 100.0, 300.0],
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.5, 0.5],
                vec![0.0, 0.0, 1.0],
            ],
        )
        .unwrap()
    }

    fn x_star() -> AllocationRule {
        AllocationRule::new(vec![10.0, 9.0, 4.0, 1.0, 0.0], vec![0, 1, 2, 3]).unwrap()
    }

    fn brute_d_star(inst: &Instance, rule: &AllocationRule, c: f64, t: &PaymentProfile) -> f64 {
        let (low, high) = (rule.low(), rule.high());
        let n = 20_000;
        let h = (high - low) / n as f64;
        let g = |z: f64| inst.gamma(rule.action_at(z)) - inst.gamma(inst.best_response(t, z).action);
        let mut cum = vec![0.0; n + 1];
        for k in 0..n {
            let mid = low + h * (k as f64 + 0.5);
            cum[k + 1] = cum[k] + g(mid) * h;
        }
        let kc = ((c - low) / h).round() as usize;
        cum.iter().map(|p| p - cum[kc]).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn linear_contracts_pass_everywhere() {
        let inst = appx();
        for alpha in [0.0, 0.02, 0.05, 0.5, 1.0] {
            let rule = envelope_rule(&inst, alpha, (0.0, 10.0));
            let t = PaymentProfile::linear(&inst, alpha);
            for c in [0.0, 0.7, 2.5, 5.0, 9.99, 10.0] {
                let chk = curvature_check(&inst, &rule, c, &t);
                assert!(chk.pass, "alpha {alpha} c {c}: {chk:?}");
                assert!(chk.d_star.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_implementable_anchor_fails() {
        let inst = appx();
        let t = PaymentProfile::new(vec![0.0, 4.0, 21.0]).unwrap();
        let chk = curvature_check(&inst, &x_star(), 4.0, &t);
        assert!(chk.consistent);
        assert!(!chk.pass);
        assert_relative_eq!(chk.d_star, 2.5 * 2.4, epsilon = 1e-9);
        assert_relative_eq!(chk.d_star, brute_d_star(&inst, &x_star(), 4.0, &t), epsilon = 1e-2);
        // paying only on the top outcome is inconsistent at c = 4
        let t = PaymentProfile::new(vec![0.0, 0.0, 17.0]).unwrap();
        assert!(!curvature_check(&inst, &x_star(), 4.0, &t).consistent);
    }

    #[test]
    fn low_type_is_locally_implementable() {
        let inst = appx();
        let big_t = expected_payment_identity(&inst, &x_star(), 0.5, 0.0);
        assert_relative_eq!(big_t, 19.5, epsilon = 1e-12);
        let t = PaymentProfile::new(vec![0.0, 0.0, big_t]).unwrap();
        let chk = curvature_check(&inst, &x_star(), 0.5, &t);
        assert!(chk.pass, "{chk:?}");
    }

    #[test]
    fn curvature_matches_brute_force() {
        let inst = appx();
        for (c, t) in [
            (4.0, vec![0.0, 4.0, 21.0]),
            (6.0, vec![0.0, 7.0, 30.0]),
            (2.0, vec![3.0, 12.0, 40.0]),
            (9.5, vec![1.0, 2.0, 3.0]),
        ] {
            let t = PaymentProfile::new(t).unwrap();
            let exact = curvature_check(&inst, &x_star(), c, &t).d_star;
            assert_relative_eq!(exact, brute_d_star(&inst, &x_star(), c, &t).max(0.0), epsilon = 2e-2);
        }
    }

    #[test]
    fn coarse_certificate() {
        let inst = appx();
        let cert = certify_non_implementable_at(
            &inst,
            &x_star(),
            4.0,
            PaymentBox {
                low: 0.0,
                high: 400.0,
                step: 2.0,
            },
        );
        assert!(cert.certificate);
        assert!(cert.consistent_checked > 0);
        assert!(cert.min_d_star.unwrap() > 0.0);
        let cert = certify_non_implementable_at(
            &inst,
            &x_star(),
            0.5,
            PaymentBox {
                low: 0.0,
                high: 400.0,
                step: 0.5,
            },
        );
        assert!(!cert.certificate);
        let rule = envelope_rule(&inst, 0.1, (0.0, 10.0));
        let cert = certify_non_implementable_at(
            &inst,
            &rule,
            3.0,
            PaymentBox {
                low: 0.0,
                high: 60.0,
                step: 1.0,
            },
        );
        assert!(!cert.certificate);
    }

    #[test]
    fn payment_identity_of_constant_rules() {
        let inst = appx();
        let rule = AllocationRule::constant(0, 0.0, 10.0);
        assert_eq!(expected_payment_identity(&inst, &rule, 3.0, 0.0), 0.0);
        let rule = AllocationRule::new(vec![2.0, 1.0, 0.0], vec![1, 3]).unwrap();
        // T = 5.5 c + 5.5 (1 - c) + 1 for c < 1
        assert_relative_eq!(expected_payment_identity(&inst, &rule, 0.25, 0.0), 6.5);
    }

    #[test]
    fn menu_size_dedups() {
        let p = PaymentProfile::new(vec![0.0, 1.0, 2.0]).unwrap();
        let a = AllocationRule::piecewise(vec![2.0, 1.0, 0.0], vec![0, 1]).unwrap();
        let m = MenuContract::new(vec![p.clone(), p], a, 0.0).unwrap();
        assert_eq!(menu_size(&m), 1);
    }

    #[test]
    fn contract_file_round_trip() {
        let inst = appx();
        let file: ContractFile = serde_json::from_str(
            r#"{"profiles": [[0, 4, 21], [0, 0, 19.5]], "assignment": {"breakpoints": [10, 1, 0], "profile_index": [0, 1]}, "u_bar": 0}"#,
        )
        .unwrap();
        let m = MenuContract::from_file(&file, &inst).unwrap();
        assert_eq!(m.to_file(), file);
        let bad: ContractFile = serde_json::from_str(
            r#"{"profiles": [[0, 4]], "assignment": {"breakpoints": [10, 0], "profile_index": [0]}}"#,
        )
        .unwrap();
        let err = MenuContract::from_file(&bad, &inst).unwrap_err();
        assert_eq!(err.key, "profiles[0]");
    }

    fn binary() -> Instance {
        Instance::new(
            vec![0.0, 0.3, 0.8],
            vec![0.0, 1.0, 3.0],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.7, 0.3], vec![0.0, 0.2, 0.8]],
        )
        .unwrap()
    }

    #[test]
    fn binary_action_is_optimal() {
        let inst = binary();
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        let iv = d.iron(DEFAULT_GRID).unwrap();
        let out = binary_action_optimal(&inst, &iv, IC_GRID).unwrap();
        assert_eq!(out.likelihood_outcomes, [1, 2]);
        assert!(out.ic.pass, "{:?}", out.ic);
        assert_relative_eq!(out.revenue, out.virtual_welfare, max_relative = 1e-6);
        assert_relative_eq!(
            out.revenue,
            menu_revenue_quadrature(&inst, &d, &out.contract),
            max_relative = 1e-6
        );
    }

    #[test]
    fn hazard_rent_violation() {
        let inst = Instance::new(
            vec![0.0, 0.3, 0.4],
            vec![0.0, 1.0, 3.0],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.5], vec![0.0, 0.4, 0.6]],
        )
        .unwrap();
        let iv = TypeDistribution::uniform(0.0, 1.0).unwrap().iron(DEFAULT_GRID).unwrap();
        assert!(matches!(
            binary_action_optimal(&inst, &iv, IC_GRID),
            Err(PreconditionFailed::HazardRent(_))
        ));
    }

    fn effortless() -> Instance {
        Instance::with_order(
            vec![0.0, 0.0, 0.5],
            vec![0.0, 1.0, 2.0],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.4], vec![0.0, 0.1, 0.9]],
            crate::EffortOrder::Weak,
        )
        .unwrap()
    }

    #[test]
    fn binary_outcome_moves_null_payment() {
        let inst = effortless();
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        let m = MenuContract::single(PaymentProfile::new(vec![0.3, 0.0, 0.0]).unwrap(), (0.0, 1.0));
        let out = binary_outcome_transform(&inst, &d, &m, 200).unwrap();
        assert_eq!(out.contract.profiles().len(), 1);
        let p = out.contract.profiles()[0].as_slice();
        assert_relative_eq!(p[1], 0.5, epsilon = 1e-12);
        assert_eq!((p[0], p[2]), (0.0, 0.0));
        assert!(out.revenue_after >= out.revenue_before - 1e-9);
        assert!(out.ic.pass);
    }

    #[test]
    fn binary_outcome_fixed_point() {
        let inst = effortless();
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        let m = MenuContract::single(PaymentProfile::new(vec![0.0, 0.2, 0.6]).unwrap(), (0.0, 1.0));
        let out = binary_outcome_transform(&inst, &d, &m, 200).unwrap();
        assert_eq!(out.contract, m);
    }

    #[test]
    fn irregular_distribution_still_has_rule() {
        let d = TypeDistribution::piecewise(vec![
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
        .unwrap();
        let iv = d.iron(DEFAULT_GRID).unwrap();
        let out = binary_action_optimal(&binary(), &iv, 200).unwrap();
        assert!(out.ic.pass);
    }
}
