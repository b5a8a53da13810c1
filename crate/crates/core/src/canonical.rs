//! Builders for the canonical instances and the numeric facts they are
//! known for.
//!
//! Every builder validates its parameters and returns the instance, the
//! relevant type distributions and a list of [`Fact`]s, each a named
//! quantity compared against its expected value. [`Depth::Full`] adds the
//! expensive grid audits.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::allocation::{rule_from_expected, virtual_rule, AllocationRule};
use crate::conditions::{slowly_increasing_beta, verify, ScanConfig, Theorem, TheoremVerdict};
use crate::incentives::{
    certify_non_implementable_at, curvature_check, expected_payment_identity, ic_grid_check, menu_revenue, menu_size,
    Certificate, IcReport, MenuContract, PaymentBox, IC_GRID,
};
use crate::instance::{EffortOrder, Instance, PaymentProfile};
use crate::metrics::{best_linear, first_best_value, total_welfare, welfare};
use crate::scalar::{Real, TwoFloat};
use crate::typedist::{DistSpec, Segment, TypeDistribution, DEFAULT_GRID};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("constraint violated: {constraint} ({detail})")]
pub struct ConstraintError {
    pub constraint: &'static str,
    pub detail: String,
}

fn require(ok: bool, constraint: &'static str, detail: impl FnOnce() -> String) -> Result<(), ConstraintError> {
    if ok {
        Ok(())
    } else {
        Err(ConstraintError {
            constraint,
            detail: detail(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleId {
    Gap,
    ScalingUniform,
    NonMonotone,
    Menu,
    NonImplementable,
    Smoothed,
}

impl ExampleId {
    pub const ALL: [ExampleId; 6] = [
        ExampleId::Gap,
        ExampleId::ScalingUniform,
        ExampleId::NonMonotone,
        ExampleId::Menu,
        ExampleId::NonImplementable,
        ExampleId::Smoothed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExampleId::Gap => "gap",
            ExampleId::ScalingUniform => "scaling_uniform",
            ExampleId::NonMonotone => "non_monotone",
            ExampleId::Menu => "menu",
            ExampleId::NonImplementable => "non_implementable",
            ExampleId::Smoothed => "smoothed",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|i| i.as_str()).collect();
            format!("unknown example '{s}', expected one of {}", names.join(", "))
        })
    }
}

/// How much checking a build performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// A value stated for the example.
    Published,
    /// A value from an independent computation.
    Computed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    AtMost,
    AtLeast,
    Below,
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fact {
    pub name: String,
    pub relation: Relation,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub origin: Origin,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Fact {
    pub fn equal(name: impl Into<String>, expected: f64, observed: f64, tolerance: f64, origin: Origin) -> Self {
        Self {
            name: name.into(),
            relation: Relation::Equal,
            expected,
            observed,
            tolerance,
            origin,
            pass: (observed - expected).abs() <= tolerance,
            note: None,
        }
    }

    pub fn at_most(name: impl Into<String>, bound: f64, observed: f64, tolerance: f64, origin: Origin) -> Self {
        Self {
            name: name.into(),
            relation: Relation::AtMost,
            expected: bound,
            observed,
            tolerance,
            origin,
            pass: observed <= bound + tolerance,
            note: None,
        }
    }

    pub fn at_least(name: impl Into<String>, bound: f64, observed: f64, tolerance: f64, origin: Origin) -> Self {
        Self {
            name: name.into(),
            relation: Relation::AtLeast,
            expected: bound,
            observed,
            tolerance,
            origin,
            pass: observed >= bound - tolerance,
            note: None,
        }
    }

    pub fn below(name: impl Into<String>, bound: f64, observed: f64, origin: Origin) -> Self {
        Self {
            name: name.into(),
            relation: Relation::Below,
            expected: bound,
            observed,
            tolerance: 0.0,
            origin,
            pass: observed < bound,
            note: None,
        }
    }

    pub fn holds(name: impl Into<String>, pass: bool, origin: Origin) -> Self {
        Self {
            name: name.into(),
            relation: Relation::Holds,
            expected: 1.0,
            observed: if pass { 1.0 } else { 0.0 },
            tolerance: 0.0,
            origin,
            pass,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedDist {
    pub name: String,
    pub spec: DistSpec,
    #[serde(skip)]
    pub dist: TypeDistribution,
}

#[derive(Debug, Clone, Serialize)]
pub struct CanonicalExample {
    pub id: ExampleId,
    pub params: Vec<(String, f64)>,
    pub instance: Instance,
    pub distributions: Vec<NamedDist>,
    pub facts: Vec<Fact>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contract: Option<MenuContract>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<NonMonotoneAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic: Option<IcReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<TheoremVerdict>,
}

impl CanonicalExample {
    fn new(id: ExampleId, params: Vec<(&str, f64)>, instance: Instance) -> Self {
        Self {
            id,
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            instance,
            distributions: Vec::new(),
            facts: Vec::new(),
            contract: None,
            certificate: None,
            audit: None,
            ic: None,
            verdict: None,
        }
    }

    fn add_dist(&mut self, name: &str, dist: TypeDistribution) {
        self.distributions.push(NamedDist {
            name: name.into(),
            spec: dist.spec().clone(),
            dist,
        });
    }

    pub fn dist(&self, name: &str) -> Option<&TypeDistribution> {
        self.distributions.iter().find(|d| d.name == name).map(|d| &d.dist)
    }

    pub fn fact(&self, name: &str) -> Option<&Fact> {
        self.facts.iter().find(|f| f.name == name)
    }

    pub fn pass(&self) -> bool {
        self.facts.iter().all(|f| f.pass)
    }
}

/// Parameters for every example, with the defaults used by `reproduce`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExampleParams {
    Gap {
        n: usize,
        delta: f64,
    },
    ScalingUniform {
        n: usize,
        delta: f64,
        c_high: f64,
    },
    NonMonotone {
        delta: f64,
        eps: f64,
        step: f64,
        t_max: f64,
    },
    Menu {
        n: usize,
        r1: f64,
        r2: f64,
        c_high: Option<f64>,
    },
    NonImplementable {
        anchor: f64,
        step: Option<f64>,
        t_max: Option<f64>,
    },
    Smoothed {
        eps: f64,
        n: usize,
        delta: f64,
    },
}

impl ExampleParams {
    pub fn defaults(id: ExampleId) -> Self {
        match id {
            ExampleId::Gap => ExampleParams::Gap { n: 10, delta: 0.01 },
            ExampleId::ScalingUniform => ExampleParams::ScalingUniform {
                n: 5,
                delta: 0.1,
                c_high: 2.0,
            },
            ExampleId::NonMonotone => ExampleParams::NonMonotone {
                delta: 0.02,
                eps: 0.01,
                step: 0.01,
                t_max: 2.0,
            },
            ExampleId::Menu => ExampleParams::Menu {
                n: 8,
                r1: 10.0,
                r2: 27.0,
                c_high: None,
            },
            ExampleId::NonImplementable => ExampleParams::NonImplementable {
                anchor: 4.0,
                step: None,
                t_max: None,
            },
            ExampleId::Smoothed => ExampleParams::Smoothed {
                eps: 0.5,
                n: 5,
                delta: 0.1,
            },
        }
    }

    pub fn id(&self) -> ExampleId {
        match self {
            ExampleParams::Gap { .. } => ExampleId::Gap,
            ExampleParams::ScalingUniform { .. } => ExampleId::ScalingUniform,
            ExampleParams::NonMonotone { .. } => ExampleId::NonMonotone,
            ExampleParams::Menu { .. } => ExampleId::Menu,
            ExampleParams::NonImplementable { .. } => ExampleId::NonImplementable,
            ExampleParams::Smoothed { .. } => ExampleId::Smoothed,
        }
    }
}

pub fn build(params: ExampleParams, depth: Depth) -> Result<CanonicalExample, ConstraintError> {
    match params {
        ExampleParams::Gap { n, delta } => gap(n, delta),
        ExampleParams::ScalingUniform { n, delta, c_high } => scaling_uniform(n, delta, c_high),
        ExampleParams::NonMonotone {
            delta,
            eps,
            step,
            t_max,
        } => non_monotone(delta, eps, step, t_max, depth),
        ExampleParams::Menu { n, r1, r2, c_high } => menu(n, r1, r2, c_high),
        ExampleParams::NonImplementable { anchor, step, t_max } => non_implementable(anchor, step, t_max, depth),
        ExampleParams::Smoothed { eps, n, delta } => smoothed(eps, n, delta),
    }
}

fn check_scaling(n: usize, delta: f64) -> Result<(), ConstraintError> {
    require(n >= 1, "n >= 1", || format!("n = {n}"))?;
    require(delta > 0.0 && delta < 1.0, "0 < delta < 1", || {
        format!("delta = {delta}")
    })
}

/// Efforts `δ^{-i} - (i+1) + δ i` and rewards `δ^{-i}` with outcome `i`
/// certain under action `i`.
pub fn scaling_instance<T: Real>(n: usize, delta: f64) -> Instance<T> {
    let d = T::of(delta);
    let mut gammas = vec![T::zero()];
    let mut rewards = vec![T::zero()];
    let mut inv = T::one();
    for i in 1..=n {
        inv = inv / d;
        let it = T::of_usize(i);
        gammas.push(inv - (it + T::one()) + d * it);
        rewards.push(inv);
    }
    let probs = (0..=n)
        .map(|i| (0..=n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    Instance::new(gammas, rewards, probs).expect("scaling family is valid for 0 < delta < 1")
}

/// Smallest linear share that makes action `i` a best response at cost
/// `c` in the scaling family: `c (1-δ)^2` for the first action and
/// `c (1 - δ^i)` beyond it.
pub fn minimal_linear_alpha(delta: f64, i: usize, c: f64) -> f64 {
    if i <= 1 {
        c * (1.0 - delta) * (1.0 - delta)
    } else {
        c * (1.0 - delta.powi(i as i32))
    }
}

/// Smallest `α ∈ [0, 1]` whose linear contract induces an action at least
/// `i` at cost `c`, by bisection on the best response. `None` when even
/// `α = 1` does not reach `i`.
pub fn minimal_linear_alpha_bisect<T: Real>(instance: &Instance<T>, i: usize, c: f64) -> Option<f64> {
    let c = T::of(c);
    let reaches = |a: T| instance.best_response(&PaymentProfile::linear(instance, a), c).action >= i;
    if reaches(T::zero()) {
        return Some(0.0);
    }
    if !reaches(T::one()) {
        return None;
    }
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..120 {
        let mid = (lo + hi) / T::of(2.0);
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi.as_f64())
}

/// Top of the spread distribution: twice the largest cost at which any
/// action still has positive welfare.
fn gap_c_high(instance: &Instance<TwoFloat>) -> f64 {
    let ratio = (1..instance.num_actions())
        .map(|i| (instance.big_r(i) / instance.gamma(i)).as_f64())
        .fold(1.0, f64::max);
    2.0 * ratio
}

pub fn gap(n: usize, delta: f64) -> Result<CanonicalExample, ConstraintError> {
    check_scaling(n, delta)?;
    let precise = scaling_instance::<TwoFloat>(n, delta);
    let mut ex = CanonicalExample::new(
        ExampleId::Gap,
        vec![("n", n as f64), ("delta", delta)],
        scaling_instance::<f64>(n, delta),
    );
    let point = TypeDistribution::atom(1.0).expect("valid atom");
    let c_high = gap_c_high(&precise);
    let spread = TypeDistribution::mixture(vec![
        (1.0 - delta, DistSpec::Atom { at: 1.0 }),
        (delta, DistSpec::Uniform { low: 1.0, high: c_high }),
    ])
    .expect("valid mixture");

    let nf = n as f64;
    let target = nf + 1.0 - delta * nf;
    let wel = first_best_value(&precise, TwoFloat::of(1.0)).as_f64();
    ex.facts.push(Fact::equal(
        "welfare_at_unit_cost",
        target,
        wel,
        1e-9,
        Origin::Published,
    ));
    let apx = best_linear(&precise, &point, None);
    let apx_rev = apx.revenue.as_f64();
    ex.facts.push(Fact::at_most(
        "best_linear_revenue_point",
        2.0,
        apx_rev,
        1e-6,
        Origin::Published,
    ));
    ex.facts.push(Fact::at_least(
        "welfare_to_linear_ratio",
        target / 2.0,
        wel / apx_rev,
        1e-6,
        Origin::Published,
    ));
    for i in 1..=n {
        let closed = minimal_linear_alpha(delta, i, 1.0);
        let bis = minimal_linear_alpha_bisect(&precise, i, 1.0).unwrap_or(f64::NAN);
        ex.facts.push(Fact::equal(
            format!("minimal_alpha_{i}"),
            closed,
            bis,
            1e-9,
            Origin::Computed,
        ));
    }
    let spread_apx = best_linear(&precise, &spread, None).revenue.as_f64();
    let spread_wel = total_welfare(&precise, &spread).as_f64();
    ex.facts.push(Fact::at_most(
        "best_linear_revenue_spread",
        2.0,
        spread_apx,
        1e-6,
        Origin::Computed,
    ));
    ex.facts.push(Fact::at_least(
        "welfare_spread",
        (1.0 - delta) * target,
        spread_wel,
        1e-9,
        Origin::Computed,
    ));
    ex.add_dist("point", point);
    ex.add_dist("spread", spread);
    Ok(ex)
}

/// `max_i R_i / γ_i - 1`: every type above `1 + ε` has zero welfare.
pub fn scaling_eps(instance: &Instance) -> f64 {
    (1..instance.num_actions())
        .map(|i| instance.big_r(i) / instance.gamma(i) - 1.0)
        .fold(0.0, f64::max)
}

pub fn scaling_uniform(n: usize, delta: f64, c_high: f64) -> Result<CanonicalExample, ConstraintError> {
    check_scaling(n, delta)?;
    let inst = scaling_instance::<f64>(n, delta);
    let eps_top = inst.big_r(n) / inst.gamma(n) - 1.0;
    let eps = scaling_eps(&inst);
    require(c_high > 1.0 + eps, "c_high > 1 + eps", || {
        format!("c_high = {c_high}, eps = {eps}")
    })?;
    let dist = TypeDistribution::uniform(1.0, c_high).expect("valid uniform");
    let mut ex = CanonicalExample::new(
        ExampleId::ScalingUniform,
        vec![
            ("n", n as f64),
            ("delta", delta),
            ("c_high", c_high),
            ("eps", eps),
            ("eps_top", eps_top),
        ],
        inst.clone(),
    );
    let tail = welfare(&inst, &dist, 1.0 + eps, c_high);
    ex.facts.push(Fact::equal(
        "welfare_above_one_plus_eps",
        0.0,
        tail,
        1e-9,
        Origin::Published,
    ));
    let p_eps = dist.cdf(1.0 + eps);
    let apx = best_linear(&inst, &dist, None).revenue;
    ex.facts.push(Fact::at_most(
        "best_linear_revenue",
        2.0 * p_eps,
        apx,
        1e-9,
        Origin::Published,
    ));

    let mut t = vec![0.0; n + 1];
    t[n] = (1.0 + eps_top / 2.0) * inst.gamma(n);
    let contract = MenuContract::single(PaymentProfile::new(t).expect("non-negative"), (1.0, c_high));
    let rev = menu_revenue(&inst, &dist, &contract);
    let nf = n as f64;
    let expected = (nf + 1.0 - delta * nf) / 2.0 * dist.cdf(1.0 + eps_top / 2.0);
    ex.facts.push(Fact::equal(
        "top_action_contract_revenue",
        expected,
        rev,
        1e-6 * expected.abs().max(1e-12),
        Origin::Published,
    ));
    ex.contract = Some(contract);
    ex.add_dist("uniform", dist);
    Ok(ex)
}

pub fn non_monotone_instance(delta: f64) -> Instance {
    let d = delta;
    Instance::with_order(
        vec![0.0, 0.0, 0.5, 1.0 / d],
        vec![0.0, 0.0, 0.0, 1.0 / d],
        vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0 - 0.25 * d, 0.0, 0.25 * d],
            vec![0.0, 0.5 - d, 0.5, d],
            vec![0.0, 0.0, 1.0 - d - d * d, d + d * d],
        ],
        EffortOrder::Weak,
    )
    .expect("valid for small delta")
}

fn check_non_monotone(delta: f64, eps: f64) -> Result<(), ConstraintError> {
    require(eps > 0.0, "eps > 0", || format!("eps = {eps}"))?;
    require(eps < delta, "eps < delta", || format!("eps = {eps}, delta = {delta}"))?;
    require((1.0 + delta) * delta < 0.25, "(1 + delta) delta < 0.25", || {
        format!("(1 + delta) delta = {}", (1.0 + delta) * delta)
    })?;
    require(7.0 * delta + 6.0 * eps < 0.5, "7 delta + 6 eps < 0.5", || {
        format!("7 delta + 6 eps = {}", 7.0 * delta + 6.0 * eps)
    })
}

/// Best single contract found for the low-cost mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonMonotoneAudit {
    pub revenue_h: f64,
    pub revenue_g_upper: f64,
    pub best_contract: Vec<f64>,
    pub contracts_checked: u64,
    pub step: f64,
    pub t_max: f64,
    /// The null-outcome payment is held at 0.
    pub null_payment_fixed: bool,
    pub grid_relative: bool,
}

/// Revenue of `t = (0, 0, 1, 0)` under the point mass at 1, and the best
/// revenue any contract on the grid `{0, step, ..} ≤ t_max` achieves under
/// the mixture with mass `ε` at cost 0.
pub fn non_monotone_audit(delta: f64, eps: f64, step: f64, t_max: f64) -> Result<NonMonotoneAudit, ConstraintError> {
    check_non_monotone(delta, eps)?;
    require(step > 0.0 && t_max >= 0.0, "step > 0 and t_max >= 0", || {
        format!("step = {step}, t_max = {t_max}")
    })?;
    let inst = non_monotone_instance(delta);
    let h = TypeDistribution::atom(1.0).expect("valid atom");
    let explicit = MenuContract::single(
        PaymentProfile::new(vec![0.0, 0.0, 1.0, 0.0]).expect("non-negative"),
        (1.0, 1.0),
    );
    let revenue_h = menu_revenue(&inst, &h, &explicit);

    let k = (t_max / step + 1e-9).floor() as usize + 1;
    let f = inst.outcome_probs();
    let mut pay = [0.0; 4];
    let mut best = (f64::NEG_INFINITY, vec![0.0; 4]);
    let mut checked = 0u64;
    for a in 0..k {
        let t1 = step * a as f64;
        for b in 0..k {
            let t2 = step * b as f64;
            for c in 0..k {
                let t3 = step * c as f64;
                for i in 1..4 {
                    pay[i] = f[i][1] * t1 + f[i][2] * t2 + f[i][3] * t3;
                }
                let low = inst.best_response_to(&pay, 0.0).principal_utility;
                let high = inst.best_response_to(&pay, 1.0).principal_utility;
                let rev = eps * low + (1.0 - eps) * high;
                checked += 1;
                if rev > best.0 {
                    best = (rev, vec![0.0, t1, t2, t3]);
                }
            }
        }
    }
    Ok(NonMonotoneAudit {
        revenue_h,
        revenue_g_upper: best.0,
        best_contract: best.1,
        contracts_checked: checked,
        step,
        t_max,
        null_payment_fixed: true,
        grid_relative: true,
    })
}

fn non_monotone(
    delta: f64,
    eps: f64,
    step: f64,
    t_max: f64,
    depth: Depth,
) -> Result<CanonicalExample, ConstraintError> {
    check_non_monotone(delta, eps)?;
    let inst = non_monotone_instance(delta);
    let mut ex = CanonicalExample::new(
        ExampleId::NonMonotone,
        vec![("delta", delta), ("eps", eps), ("step", step), ("t_max", t_max)],
        inst.clone(),
    );
    let g = TypeDistribution::mixture(vec![
        (eps, DistSpec::Atom { at: 0.0 }),
        (1.0 - eps, DistSpec::Atom { at: 1.0 }),
    ])
    .expect("valid mixture");
    let h = TypeDistribution::atom(1.0).expect("valid atom");
    let explicit = MenuContract::single(
        PaymentProfile::new(vec![0.0, 0.0, 1.0, 0.0]).expect("non-negative"),
        (1.0, 1.0),
    );
    let rev_h = menu_revenue(&inst, &h, &explicit);
    ex.facts
        .push(Fact::equal("revenue_h", 0.5, rev_h, 1e-12, Origin::Published));
    let br = inst.best_response(explicit.profile_at(1.0), 1.0).action;
    ex.facts.push(Fact::equal(
        "explicit_contract_action",
        2.0,
        br as f64,
        0.0,
        Origin::Published,
    ));
    if depth == Depth::Full {
        let audit = non_monotone_audit(delta, eps, step, t_max)?;
        ex.facts.push(
            Fact::below("revenue_g_upper", 0.5, audit.revenue_g_upper, Origin::Published)
                .with_note("grid-relative: single contracts on the payment grid with zero null-outcome payment"),
        );
        ex.audit = Some(audit);
    }
    ex.contract = Some(explicit);
    ex.add_dist("g", g);
    ex.add_dist("h", h);
    Ok(ex)
}

pub fn menu_instance(n: usize, r1: f64, r2: f64) -> Result<Instance, ConstraintError> {
    require(n >= 2, "n >= 2", || format!("n = {n}"))?;
    require(r1 > 0.0, "r1 > 0", || format!("r1 = {r1}"))?;
    let nf = n as f64;
    require(r1 + 2.0 * (nf - 1.0) + 1.0 < r2, "r1 + 2(n - 1) + 1 < r2", || {
        format!("r1 = {r1}, r2 = {r2}, n = {n}")
    })?;
    let gammas = (0..=n).map(|i| (i * i) as f64 / nf).collect();
    let mut probs = vec![vec![1.0, 0.0, 0.0]];
    for i in 1..=n {
        let q = i as f64 / nf;
        probs.push(vec![0.0, 1.0 - q, q]);
    }
    Instance::new(gammas, vec![0.0, r1, r2], probs).map_err(|e| ConstraintError {
        constraint: "valid instance",
        detail: e.to_string(),
    })
}

/// `t^k = (0, a_k, a_k + (Δr + 4k - 1)/2)` with
/// `a_k = r1/2 + (2k - 4k^2)/(2n)`, for `k = 1..⌈n/2⌉`.
pub fn menu_profiles(n: usize, r1: f64, r2: f64) -> Result<Vec<PaymentProfile>, ConstraintError> {
    let nf = n as f64;
    let dr = r2 - r1;
    (1..=n.div_ceil(2))
        .map(|k| {
            let kf = k as f64;
            let a = r1 / 2.0 + (2.0 * kf - 4.0 * kf * kf) / (2.0 * nf);
            require(a >= 0.0, "menu payments non-negative", || {
                format!("profile {k} pays {a} on the low outcome")
            })?;
            Ok(PaymentProfile::new(vec![0.0, a, a + (dr + 4.0 * kf - 1.0) / 2.0]).expect("non-negative"))
        })
        .collect()
}

/// Breakpoints of the virtual welfare maximizing rule: `(n r1 + Δr + 1)/2`
/// between actions 1 and 0, then `Δr/(4i + 2) + 1/2` between `i + 1` and
/// `i`, in descending order.
pub fn menu_breakpoints(n: usize, r1: f64, r2: f64) -> Vec<f64> {
    let dr = r2 - r1;
    let mut out = vec![(n as f64 * r1 + dr + 1.0) / 2.0];
    out.extend((1..n).map(|i| dr / (4 * i + 2) as f64 + 0.5));
    out
}

/// Closed-form expected payment for action `i` under the menu.
pub fn menu_payment(n: usize, r1: f64, r2: f64, i: usize) -> f64 {
    let (nf, i) = (n as f64, i as f64);
    r1 / 2.0 + i * (r2 - r1) / (2.0 * nf) + i * i / (2.0 * nf)
}

fn menu(n: usize, r1: f64, r2: f64, c_high: Option<f64>) -> Result<CanonicalExample, ConstraintError> {
    let inst = menu_instance(n, r1, r2)?;
    let bps = menu_breakpoints(n, r1, r2);
    let c_high = c_high.unwrap_or(bps[0] + 1.0);
    require(c_high > bps[0], "c_high > (n r1 + r2 - r1 + 1)/2", || {
        format!("c_high = {c_high}, bound = {}", bps[0])
    })?;
    let dist = TypeDistribution::uniform(1.0, c_high).expect("valid uniform");
    let iv = dist.iron(DEFAULT_GRID).expect("uniform irons");
    let mut ex = CanonicalExample::new(
        ExampleId::Menu,
        vec![("n", n as f64), ("r1", r1), ("r2", r2), ("c_high", c_high)],
        inst.clone(),
    );

    let rule = virtual_rule(&inst, &iv, (1.0, c_high));
    let got = rule.breakpoints();
    let interior = &got[1..got.len() - 1];
    ex.facts.push(Fact::equal(
        "virtual_breakpoint_count",
        bps.len() as f64,
        interior.len() as f64,
        0.0,
        Origin::Published,
    ));
    for (k, (want, have)) in bps.iter().zip(interior).enumerate() {
        ex.facts.push(Fact::equal(
            format!("virtual_breakpoint_{k}"),
            *want,
            *have,
            1e-6,
            Origin::Published,
        ));
    }

    let profiles = menu_profiles(n, r1, r2)?;
    let pays: Vec<Vec<f64>> = profiles.iter().map(|p| inst.expected_payments(p)).collect();
    for i in 1..=n {
        let want = menu_payment(n, r1, r2, i);
        let own = pays[i.div_ceil(2) - 1][i];
        let top = pays.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
        ex.facts.push(Fact::equal(
            format!("payment_action_{i}"),
            want,
            own,
            1e-9,
            Origin::Published,
        ));
        ex.facts.push(Fact::equal(
            format!("payment_action_{i}_is_menu_max"),
            want,
            top,
            1e-9,
            Origin::Published,
        ));
        let mid = rule
            .intervals()
            .find(|iv| iv.2 == i)
            .map(|(a, b, _)| (a + b) / 2.0)
            .unwrap_or(f64::NAN);
        ex.facts.push(Fact::equal(
            format!("payment_identity_action_{i}"),
            want,
            expected_payment_identity(&inst, &rule, mid, 0.0),
            1e-9,
            Origin::Computed,
        ));
    }

    // best responses to the whole menu: the agent faces max_k T^k_i
    let top: Vec<f64> = (0..=n)
        .map(|i| pays.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let induced = rule_from_expected(&inst, &top, (1.0, c_high));
    let ib = induced.breakpoints();
    let ib = &ib[1..ib.len() - 1];
    let worst = if ib.len() == bps.len() {
        bps.iter().zip(ib).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    ex.facts.push(Fact::equal(
        "induced_breakpoint_mismatch",
        0.0,
        worst,
        1e-6,
        Origin::Published,
    ));
    let grid_mismatch = (0..IC_GRID)
        .map(|k| 1.0 + (c_high - 1.0) * (k as f64 + 0.5) / IC_GRID as f64)
        .filter(|&c| inst.best_response_to(&top, c).action != rule.action_at(c))
        .count();
    ex.facts.push(Fact::equal(
        "grid_best_response_mismatches",
        0.0,
        grid_mismatch as f64,
        0.0,
        Origin::Computed,
    ));

    let mut edges = vec![1.0];
    let mut index = Vec::new();
    for (_, hi, a) in rule.intervals() {
        edges.push(hi);
        index.push(a.max(1).div_ceil(2) - 1);
    }
    let assignment = AllocationRule::piecewise(
        edges.iter().rev().copied().collect(),
        index.iter().rev().copied().collect(),
    )
    .expect("ascending edges");
    let contract = MenuContract::new(profiles, assignment, 0.0).expect("indices in range");
    ex.facts.push(Fact::equal(
        "menu_size",
        n.div_ceil(2) as f64,
        menu_size(&contract) as f64,
        0.0,
        Origin::Published,
    ));
    let ic = ic_grid_check(&inst, &contract, IC_GRID, false);
    ex.facts.push(Fact::holds("ic_grid_check", ic.pass, Origin::Computed));
    ex.ic = Some(ic);
    ex.contract = Some(contract);
    ex.add_dist("uniform", dist);
    Ok(ex)
}

pub fn non_implementable_instance() -> Instance {
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
    .expect("valid instance")
}

pub fn non_implementable_dist() -> TypeDistribution {
    let d = 20.0 / 23.0;
    TypeDistribution::piecewise(vec![
        Segment {
            from: 0.0,
            to: 1.0,
            density: d,
        },
        Segment {
            from: 1.0,
            to: 4.0,
            density: 0.025 * d,
        },
        Segment {
            from: 4.0,
            to: 10.0,
            density: 0.0125 * d,
        },
    ])
    .expect("valid density")
}

fn non_implementable(
    anchor: f64,
    step: Option<f64>,
    t_max: Option<f64>,
    depth: Depth,
) -> Result<CanonicalExample, ConstraintError> {
    require((0.0..=10.0).contains(&anchor), "anchor in [0, 10]", || {
        format!("anchor = {anchor}")
    })?;
    let inst = non_implementable_instance();
    let dist = non_implementable_dist();
    let iv = dist.iron(DEFAULT_GRID).expect("valid density");
    let mut pb = PaymentBox::default_for(&inst);
    if let Some(s) = step {
        require(s > 0.0, "step > 0", || format!("step = {s}"))?;
        pb.step = s;
    }
    if let Some(t) = t_max {
        require(t > 0.0, "t_max > 0", || format!("t_max = {t}"))?;
        pb.high = t;
    }
    let mut ex = CanonicalExample::new(
        ExampleId::NonImplementable,
        vec![("anchor", anchor), ("step", pb.step), ("t_max", pb.high)],
        inst.clone(),
    );

    let segments: [(f64, f64, f64); 3] = [(0.0, 1.0, 0.0), (1.0, 4.0, 39.0), (4.0, 10.0, 82.0)];
    let mut worst = 0.0f64;
    for (a, b, shift) in segments {
        for k in 1..100 {
            let c = a + (b - a) * k as f64 / 100.0;
            worst = worst.max((dist.virtual_cost(c).unwrap_or(f64::NAN) - (2.0 * c + shift)).abs());
        }
    }
    ex.facts.push(Fact::equal(
        "virtual_cost_segment_error",
        0.0,
        worst,
        1e-9,
        Origin::Published,
    ));

    let rule = virtual_rule(&inst, &iv, (0.0, 10.0));
    let want = [9.0, 4.0, 1.0];
    let got = rule.breakpoints();
    let interior = &got[1..got.len() - 1];
    let err = if interior.len() == 3 {
        want.iter()
            .zip(interior)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    ex.facts.push(Fact::equal(
        "virtual_breakpoint_error",
        0.0,
        err,
        1e-6,
        Origin::Published,
    ));
    ex.facts.push(Fact::holds(
        "virtual_rule_actions",
        rule.actions() == vec![0, 1, 2, 3],
        Origin::Published,
    ));

    let t = PaymentProfile::new(vec![0.0, 4.0, 21.0]).expect("non-negative");
    let chk = curvature_check(&inst, &rule, 4.0, &t);
    ex.facts.push(Fact::holds(
        "sample_payment_consistent",
        chk.consistent,
        Origin::Computed,
    ));
    ex.facts.push(Fact::at_least(
        "sample_payment_violation",
        1e-9,
        chk.d_star,
        0.0,
        Origin::Published,
    ));

    let big_t = expected_payment_identity(&inst, &rule, 0.5, 0.0);
    let local = curvature_check(
        &inst,
        &rule,
        0.5,
        &PaymentProfile::new(vec![0.0, 0.0, big_t]).expect("non-negative"),
    );
    ex.facts.push(Fact::holds(
        "low_type_locally_implementable",
        local.pass,
        Origin::Computed,
    ));

    if depth == Depth::Full {
        let cert = certify_non_implementable_at(&inst, &rule, anchor, pb);
        ex.facts.push(
            Fact::holds("certificate", cert.certificate, Origin::Published).with_note(format!(
                "grid-relative: box [{}, {}] per coordinate, step {}",
                pb.low, pb.high, pb.step
            )),
        );
        ex.certificate = Some(cert);
    }
    ex.add_dist("piecewise", dist);
    Ok(ex)
}

fn smoothed(eps: f64, n: usize, delta: f64) -> Result<CanonicalExample, ConstraintError> {
    require(eps > 0.0 && eps < 1.0, "0 < eps < 1", || format!("eps = {eps}"))?;
    check_scaling(n, delta)?;
    let inst = scaling_instance::<f64>(n, delta);
    let dist = TypeDistribution::smoothed_unit(eps).expect("valid mixture");
    let mut ex = CanonicalExample::new(
        ExampleId::Smoothed,
        vec![("eps", eps), ("n", n as f64), ("delta", delta)],
        inst.clone(),
    );
    let cfg = ScanConfig::from_env();
    let claimed = eps / (2.0 * (2.0 - eps));
    let beta = slowly_increasing_beta(&dist, 0.5, 0.0, cfg);
    ex.facts.push(Fact::at_least(
        "slowly_increasing_beta",
        claimed,
        beta.value,
        1e-9,
        Origin::Published,
    ));
    let verdict = verify(&inst, &dist, None, Theorem::Smooth { eps }, cfg);
    ex.facts.push(Fact::holds(
        "welfare_guarantee",
        verdict.pass && verdict.hypothesis_satisfied,
        Origin::Published,
    ));
    ex.facts.push(Fact::at_most(
        "achieved_ratio",
        4.0 * (2.0 - eps) / eps,
        verdict.achieved_ratio,
        1e-6,
        Origin::Published,
    ));
    ex.verdict = Some(verdict);
    ex.add_dist("smoothed", dist);
    Ok(ex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn failing(ex: &CanonicalExample) -> Vec<&Fact> {
        ex.facts.iter().filter(|f| !f.pass).collect()
    }

    #[test]
    fn minimal_alpha_values() {
        assert_relative_eq!(minimal_linear_alpha(0.1, 1, 1.0), 0.81, epsilon = 1e-12);
        assert_relative_eq!(minimal_linear_alpha(0.1, 3, 1.0), 0.999, epsilon = 1e-12);
        for i in 1..5 {
            assert_eq!(minimal_linear_alpha(0.1, i, 0.0), 0.0);
        }
        let inst = scaling_instance::<TwoFloat>(4, 0.1);
        for i in 1..=4 {
            let b = minimal_linear_alpha_bisect(&inst, i, 0.7).unwrap();
            assert_relative_eq!(b, minimal_linear_alpha(0.1, i, 0.7), epsilon = 1e-9);
        }
        assert_eq!(minimal_linear_alpha_bisect(&inst, 2, 0.0), Some(0.0));
    }

    #[test]
    fn gap_facts() {
        for n in [3, 5, 10] {
            for delta in [0.1, 0.01] {
                let ex = gap(n, delta).unwrap();
                assert!(failing(&ex).is_empty(), "n {n} delta {delta}: {:?}", failing(&ex));
            }
        }
        let ex = gap(10, 0.01).unwrap();
        assert_relative_eq!(ex.fact("welfare_at_unit_cost").unwrap().observed, 10.9, epsilon = 1e-9);
    }

    #[test]
    fn scaling_uniform_facts() {
        let ex = scaling_uniform(5, 0.1, 2.0).unwrap();
        assert!(failing(&ex).is_empty(), "{:?}", failing(&ex));
        assert!(scaling_uniform(5, 0.1, 1.1).is_err());
    }

    #[test]
    fn non_monotone_constraints() {
        let e = non_monotone(0.02, 0.02, 0.01, 2.0, Depth::Quick).unwrap_err();
        assert_eq!(e.constraint, "eps < delta");
        let e = non_monotone(0.3, 0.01, 0.01, 2.0, Depth::Quick).unwrap_err();
        assert_eq!(e.constraint, "(1 + delta) delta < 0.25");
        let ex = non_monotone(0.02, 0.01, 0.01, 2.0, Depth::Quick).unwrap();
        assert_eq!(ex.fact("revenue_h").unwrap().observed, 0.5);
    }

    #[test]
    fn coarse_non_monotone_audit() {
        let a = non_monotone_audit(0.02, 0.01, 0.05, 2.0).unwrap();
        assert_eq!(a.revenue_h, 0.5);
        assert!(a.revenue_g_upper < 0.5, "{a:?}");
        assert_eq!(a.contracts_checked, 41 * 41 * 41);
    }

    #[test]
    fn menu_facts() {
        let ex = menu(8, 10.0, 27.0, None).unwrap();
        assert!(failing(&ex).is_empty(), "{:?}", failing(&ex));
        assert_eq!(menu_size(ex.contract.as_ref().unwrap()), 4);
        let ex = menu(7, 20.0, 40.0, None).unwrap();
        assert!(failing(&ex).is_empty(), "{:?}", failing(&ex));
        assert_eq!(
            menu(8, 10.0, 25.0, None).unwrap_err().constraint,
            "r1 + 2(n - 1) + 1 < r2"
        );
    }

    #[test]
    fn menu_breakpoint_formula() {
        let b = menu_breakpoints(8, 10.0, 27.0);
        assert_relative_eq!(b[0], 49.0);
        assert_relative_eq!(b[1], 17.0 / 6.0 + 0.5);
        assert_relative_eq!(b[7], 17.0 / 30.0 + 0.5);
    }

    #[test]
    fn non_implementable_quick() {
        let ex = non_implementable(4.0, None, None, Depth::Quick).unwrap();
        assert!(failing(&ex).is_empty(), "{:?}", failing(&ex));
    }

    #[test]
    fn smoothed_facts() {
        for eps in [0.1, 0.5] {
            let ex = smoothed(eps, 5, 0.1).unwrap();
            assert!(failing(&ex).is_empty(), "{:?}", failing(&ex));
        }
    }

    #[test]
    fn ids_round_trip() {
        for id in ExampleId::ALL {
            assert_eq!(id.as_str().parse::<ExampleId>().unwrap(), id);
        }
        assert!("nope".parse::<ExampleId>().is_err());
    }
}
