//! Distributional condition parameters and numeric checks of the
//! approximation guarantees for linear contracts.
//!
//! Infima and suprema over cost ranges are found by a dense scan plus
//! special points (atoms, kinks and their images under `c ↦ c/α`) and a few
//! rounds of local refinement, so every value here is grid-relative.

use serde::Serialize;

use crate::instance::{Instance, PaymentProfile};
use crate::metrics::{best_linear, linear_revenue, total_virtual_welfare, total_welfare, virtual_welfare, welfare};
use crate::typedist::{DistError, DistSpec, IronedVirtualCost, TypeDistribution, CDF_FLOOR};

pub const SCAN_POINTS: usize = 4096;
pub const REFINE_ROUNDS: usize = 3;
pub const VERDICT_TOL: f64 = 1e-6;
/// Slack allowed when a computed parameter is compared with a claimed one.
pub const PARAM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanConfig {
    pub points: usize,
    pub rounds: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            points: SCAN_POINTS,
            rounds: REFINE_ROUNDS,
        }
    }
}

impl ScanConfig {
    /// Default scan, with the density taken from `AGENCY_GRID` when set.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(n) = std::env::var("AGENCY_GRID")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            cfg.points = n.max(16);
        }
        cfg
    }
}

/// A scanned infimum or supremum and where it was attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub witness: f64,
}

fn near(s: f64) -> [f64; 3] {
    let d = 1e-10 * (1.0 + s.abs());
    [s - d, s, s + d]
}

/// Optimizes `f` over `[lo, hi]`; `None` from `f` marks points where the
/// quantity is vacuous.
fn scan(
    f: impl Fn(f64) -> Option<f64>,
    lo: f64,
    hi: f64,
    special: &[f64],
    minimize: bool,
    cfg: ScanConfig,
) -> Option<Extremum> {
    let better = |a: f64, b: f64| if minimize { a < b } else { a > b };
    let mut best: Option<Extremum> = None;
    let take = |c: f64, best: &mut Option<Extremum>| -> Option<f64> {
        if !(c >= lo && c <= hi) {
            return None;
        }
        let v = f(c)?;
        if !v.is_finite() {
            return None;
        }
        if best.is_none_or(|b| better(v, b.value)) {
            *best = Some(Extremum { value: v, witness: c });
        }
        Some(v)
    };
    let n = cfg.points.max(2);
    let width = hi - lo;
    let xs: Vec<f64> = (0..=n).map(|k| lo + width * k as f64 / n as f64).collect();
    let mut grid_best: Option<(usize, f64)> = None;
    for (k, &x) in xs.iter().enumerate() {
        if let Some(v) = take(x, &mut best) {
            if grid_best.is_none_or(|(_, b)| better(v, b)) {
                grid_best = Some((k, v));
            }
        }
    }
    for s in special {
        for x in near(*s) {
            take(x, &mut best);
        }
    }
    for k in 4..=13 {
        take(lo + width * 10f64.powi(-k), &mut best);
    }
    if let Some((k, _)) = grid_best {
        let (mut a, mut b) = (xs[k.saturating_sub(1)], xs[(k + 1).min(n)]);
        for _ in 0..cfg.rounds {
            let m = 16;
            let mut local: Option<(f64, f64)> = None;
            for j in 0..=m {
                let x = a + (b - a) * j as f64 / m as f64;
                if let Some(v) = take(x, &mut best) {
                    if local.is_none_or(|(_, lv)| better(v, lv)) {
                        local = Some((x, v));
                    }
                }
            }
            let Some((x, _)) = local else { break };
            let h = (b - a) / m as f64;
            a = (x - h).max(lo);
            b = (x + h).min(hi);
        }
    }
    best
}

fn scan_top(dist: &TypeDistribution) -> f64 {
    dist.grid_high()
}

fn special_points(dist: &TypeDistribution, alpha: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = dist.atoms().iter().map(|a| a.0).chain(dist.kinks()).collect();
    if alpha > 0.0 {
        let scaled: Vec<f64> = pts.iter().map(|p| p / alpha).collect();
        pts.extend(scaled);
    }
    pts
}

/// `inf_{c ∈ [κ, c̄]} G(αc) / G(c)`; types with `G(c) = 0` impose nothing.
pub fn slowly_increasing_beta(dist: &TypeDistribution, alpha: f64, kappa: f64, cfg: ScanConfig) -> Extremum {
    let lo = kappa.max(dist.low());
    let hi = scan_top(dist).max(lo);
    let ratio = |c: f64| {
        let g = dist.cdf(c);
        (g > CDF_FLOOR).then(|| dist.cdf(alpha * c) / g)
    };
    let left = |c: f64| {
        let g = dist.cdf_left(c);
        (g > CDF_FLOOR).then(|| dist.cdf_left(alpha * c) / g)
    };
    let special = special_points(dist, alpha);
    let mut best = scan(ratio, lo, hi, &special, true, cfg);
    // jumps of G(αc) are approached from the left
    for s in &special {
        if *s > lo && *s <= hi {
            if let Some(v) = left(*s) {
                if best.is_none_or(|b| v < b.value) {
                    best = Some(Extremum { value: v, witness: *s });
                }
            }
        }
    }
    best.unwrap_or(Extremum {
        value: 1.0,
        witness: lo,
    })
}

/// `inf_{c ≥ κ} G(αc) / G(φ̄^{-1}(c))`.
pub fn slow_virtual_beta(iv: &IronedVirtualCost, alpha: f64, kappa: f64, cfg: ScanConfig) -> Extremum {
    let dist = iv.dist();
    let lo = kappa.max(dist.low());
    let hi = iv.value(scan_top(dist)).max(scan_top(dist)).max(lo);
    let ratio = |c: f64| {
        let g = dist.cdf(iv.inverse(c));
        (g > CDF_FLOOR).then(|| dist.cdf(alpha * c) / g)
    };
    let mut special = special_points(dist, alpha);
    for p in iv.pieces() {
        special.push(iv.value(p.from));
        special.push(iv.value(p.to));
    }
    scan(ratio, lo, hi, &special, true, cfg).unwrap_or(Extremum {
        value: 1.0,
        witness: lo,
    })
}

/// Tightest `(α, β)` with `c/α ≤ φ̄(c) ≤ c/β` on `[κ, c̄]`: `α` is the
/// supremum of `c/φ̄(c)` and `β` its infimum.
pub fn linear_bounded_params(iv: &IronedVirtualCost, kappa: f64, cfg: ScanConfig) -> (Extremum, Extremum) {
    let dist = iv.dist();
    let lo = kappa.max(dist.low());
    let hi = scan_top(dist).max(lo);
    let ratio = |c: f64| {
        let p = iv.value(c);
        (c > 0.0 && p > 0.0).then(|| c / p)
    };
    let mut special = dist.kinks();
    for p in iv.pieces() {
        special.push(p.from);
        special.push(p.to);
    }
    let fallback = Extremum {
        value: 1.0,
        witness: lo,
    };
    let sup = scan(ratio, lo, hi, &special, false, cfg).unwrap_or(fallback);
    let inf = scan(ratio, lo, hi, &special, true, cfg).unwrap_or(fallback);
    (sup, inf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    Cost,
    Virtual,
}

/// `η`: share of the (virtual) welfare contributed by types in `[κ, c̄]`.
/// An instance with no welfare at all counts as fully in the tail.
pub fn small_tail_eta(
    instance: &Instance,
    dist: &TypeDistribution,
    iv: Option<&IronedVirtualCost>,
    kappa: f64,
    kind: TailKind,
) -> Result<f64, DistError> {
    let (full, tail) = match kind {
        TailKind::Cost => (
            total_welfare(instance, dist),
            welfare(instance, dist, kappa, dist.high()),
        ),
        TailKind::Virtual => {
            let iv = iv.ok_or(DistError::AtomPresent)?;
            (
                total_virtual_welfare(instance, iv),
                virtual_welfare(instance, iv, kappa),
            )
        }
    };
    if full.abs() <= 1e-300 {
        return Ok(1.0);
    }
    Ok((tail / full).clamp(0.0, 1.0))
}

/// `α̂ = inf_c G(c) / (c g(c))`, the largest constant with
/// `RHR(c) ≤ 1/(α̂ c)`.
pub fn rhr_bound_alpha_hat(dist: &TypeDistribution, cfg: ScanConfig) -> Result<Extremum, DistError> {
    if dist.has_atoms() {
        return Err(DistError::AtomPresent);
    }
    let f = |c: f64| {
        let g = dist.cdf(c);
        let d = dist.pdf(c);
        (g > CDF_FLOOR && d > 0.0 && c > 0.0).then(|| g / (c * d))
    };
    let lo = dist.low();
    Ok(
        scan(f, lo, scan_top(dist), &dist.kinks(), true, cfg).unwrap_or(Extremum {
            value: 0.0,
            witness: lo,
        }),
    )
}

/// `i*(r, φ̄(c̄)) = 0`: the highest type is not worth any effort even at
/// its virtual cost. Holds trivially on unbounded supports.
pub fn top_type_idle(instance: &Instance, iv: &IronedVirtualCost) -> bool {
    let high = iv.dist().high();
    if !high.is_finite() {
        return true;
    }
    let r = PaymentProfile::new(instance.rewards().to_vec()).expect("rewards are non-negative");
    instance.best_response(&r, iv.value(high)).action == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RevVariant {
    /// Non-increasing density with `c_low > 0`, threshold `κ c_low`.
    NonIncreasingDensity { kappa: f64 },
    /// `U[0, c̄]` with an idle top type: linear is optimal.
    Uniform,
    /// Normal truncated at 0 with `σ ≥ 5μ/(2√2)`.
    TruncatedNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "theorem", rename_all = "snake_case")]
pub enum Theorem {
    /// Linear `α` against welfare with threshold `κ = c_q / α`.
    Universal {
        q: f64,
        alpha: f64,
    },
    /// Slowly-increasing `(α, β, κ)` plus cost small-tail `η`. Missing
    /// `β`, `η` are computed.
    Slow {
        alpha: f64,
        beta: Option<f64>,
        kappa: f64,
        eta: Option<f64>,
    },
    /// Linear boundedness against virtual welfare. `α` defaults to the
    /// tightest value.
    LinBounded1 {
        kappa: f64,
        alpha: Option<f64>,
    },
    /// As above with the refined guarantee for an idle top type.
    LinBounded2 {
        kappa: f64,
        alpha: Option<f64>,
    },
    /// Best linear contract against virtual welfare, factor `n`.
    UpperN,
    /// `(1-ε)` point mass at 1 plus `ε U[0,2]`.
    Smooth {
        eps: f64,
    },
    /// Non-increasing density against welfare, threshold `κ c_low`.
    WelImplications {
        kappa: f64,
    },
    RevImplications(RevVariant),
}

impl Theorem {
    pub fn id(&self) -> &'static str {
        match self {
            Theorem::Universal { .. } => "universal",
            Theorem::Slow { .. } => "slow",
            Theorem::LinBounded1 { .. } => "lin_bounded_1",
            Theorem::LinBounded2 { .. } => "lin_bounded_2",
            Theorem::UpperN => "upper_n",
            Theorem::Smooth { .. } => "smooth",
            Theorem::WelImplications { .. } => "wel_implications",
            Theorem::RevImplications(RevVariant::NonIncreasingDensity { .. }) => "rev_implications_nonincreasing",
            Theorem::RevImplications(RevVariant::Uniform) => "rev_implications_uniform",
            Theorem::RevImplications(RevVariant::TruncatedNormal) => "rev_implications_normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Welfare,
    VirtualWelfare,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremVerdict {
    pub theorem: &'static str,
    pub params: Vec<(String, f64)>,
    pub hypotheses: Vec<Hypothesis>,
    pub hypothesis_satisfied: bool,
    pub benchmark: Benchmark,
    pub benchmark_value: f64,
    pub alpha: f64,
    pub revenue: f64,
    pub guarantee: f64,
    pub achieved_ratio: f64,
    pub degenerate: bool,
    pub pass: bool,
    pub scan: ScanConfig,
}

impl TheoremVerdict {
    pub fn exit_code(&self) -> i32 {
        if !self.hypothesis_satisfied {
            3
        } else if self.pass {
            0
        } else {
            2
        }
    }
}

struct Builder {
    params: Vec<(String, f64)>,
    hyps: Vec<Hypothesis>,
}

impl Builder {
    fn param(&mut self, name: &str, v: f64) {
        self.params.push((name.to_string(), v));
    }

    fn hyp(&mut self, name: &str, holds: bool, detail: impl Into<String>) -> bool {
        self.hyps.push(Hypothesis {
            name: name.to_string(),
            holds,
            detail: detail.into(),
        });
        holds
    }

    fn ok(&self) -> bool {
        self.hyps.iter().all(|h| h.holds)
    }
}

struct Plan {
    benchmark: Benchmark,
    alpha: Option<f64>,
    guarantee: f64,
}

/// Checks `benchmark ≤ guarantee · revenue + tol · benchmark` for one
/// theorem on one instance. Unmet hypotheses are reported, never raised.
pub fn verify(
    instance: &Instance,
    dist: &TypeDistribution,
    iv: Option<&IronedVirtualCost>,
    theorem: Theorem,
    cfg: ScanConfig,
) -> TheoremVerdict {
    let mut b = Builder {
        params: Vec::new(),
        hyps: Vec::new(),
    };
    let low = dist.low();
    let plan = plan(instance, dist, iv, theorem, cfg, &mut b, low);
    let hypothesis_satisfied = b.ok() && plan.guarantee.is_finite();

    let benchmark_value = match plan.benchmark {
        Benchmark::Welfare => total_welfare(instance, dist),
        Benchmark::VirtualWelfare => iv.map_or(f64::NAN, |iv| total_virtual_welfare(instance, iv)),
    };
    let (alpha, revenue) = match plan.alpha {
        Some(a) => (a, linear_revenue(instance, dist, a)),
        None => {
            let best = best_linear(instance, dist, iv);
            (best.alpha, best.revenue)
        }
    };
    let degenerate = benchmark_value.abs() <= 1e-300;
    let achieved_ratio = if degenerate {
        1.0
    } else if revenue > 0.0 {
        benchmark_value / revenue
    } else {
        f64::INFINITY
    };
    let holds = degenerate || benchmark_value <= plan.guarantee * revenue + VERDICT_TOL * benchmark_value.abs();
    TheoremVerdict {
        theorem: theorem.id(),
        params: b.params,
        hypotheses: b.hyps,
        hypothesis_satisfied,
        benchmark: plan.benchmark,
        benchmark_value,
        alpha,
        revenue,
        guarantee: plan.guarantee,
        achieved_ratio,
        degenerate,
        pass: hypothesis_satisfied && holds,
        scan: cfg,
    }
}

fn need_iv<'a>(iv: Option<&'a IronedVirtualCost>, b: &mut Builder) -> Option<&'a IronedVirtualCost> {
    b.hyp(
        "atom_free",
        iv.is_some(),
        if iv.is_some() {
            "ironed virtual cost available"
        } else {
            "virtual cost undefined with atoms"
        },
    );
    iv
}

fn plan(
    instance: &Instance,
    dist: &TypeDistribution,
    iv: Option<&IronedVirtualCost>,
    theorem: Theorem,
    cfg: ScanConfig,
    b: &mut Builder,
    low: f64,
) -> Plan {
    let cost_eta = |kappa: f64| small_tail_eta(instance, dist, iv, kappa, TailKind::Cost).unwrap_or(0.0);
    let virt_eta = |kappa: f64| small_tail_eta(instance, dist, iv, kappa, TailKind::Virtual).unwrap_or(0.0);
    let unit = |x: f64| x > 0.0 && x < 1.0;
    match theorem {
        Theorem::Universal { q, alpha } => {
            let cq = dist.quantile(q);
            let kappa = cq / alpha;
            let eta = cost_eta(kappa);
            b.param("q", q);
            b.param("alpha", alpha);
            b.param("c_q", cq);
            b.param("kappa", kappa);
            b.param("eta", eta);
            b.hyp("q_in_unit", unit(q), format!("q = {q}"));
            b.hyp("alpha_in_unit", unit(alpha), format!("alpha = {alpha}"));
            b.hyp("eta_positive", eta > 0.0, format!("eta = {eta} at kappa = {kappa}"));
            Plan {
                benchmark: Benchmark::Welfare,
                alpha: Some(alpha),
                guarantee: 1.0 / ((1.0 - alpha) * eta * q),
            }
        }
        Theorem::Slow {
            alpha,
            beta,
            kappa,
            eta,
        } => {
            let computed_beta = slowly_increasing_beta(dist, alpha, kappa, cfg);
            let computed_eta = cost_eta(kappa);
            let beta = beta.unwrap_or(computed_beta.value);
            let eta = eta.unwrap_or(computed_eta);
            b.param("alpha", alpha);
            b.param("beta", beta);
            b.param("kappa", kappa);
            b.param("eta", eta);
            b.param("beta_scanned", computed_beta.value);
            b.param("beta_witness", computed_beta.witness);
            b.param("eta_computed", computed_eta);
            b.hyp("alpha_in_unit", alpha > 0.0 && alpha < 1.0, format!("alpha = {alpha}"));
            b.hyp(
                "kappa_range",
                kappa >= low / alpha - PARAM_TOL && kappa <= dist.high(),
                format!("kappa = {kappa}, need [{}, {}]", low / alpha, dist.high()),
            );
            b.hyp(
                "slowly_increasing",
                beta > 0.0 && computed_beta.value >= beta - PARAM_TOL,
                format!("scanned beta {} vs {beta}", computed_beta.value),
            );
            b.hyp(
                "small_tail",
                eta > 0.0 && computed_eta >= eta - PARAM_TOL,
                format!("eta {computed_eta} vs {eta}"),
            );
            Plan {
                benchmark: Benchmark::Welfare,
                alpha: Some(alpha),
                guarantee: 1.0 / ((1.0 - alpha) * beta * eta),
            }
        }
        Theorem::LinBounded1 { kappa, alpha } | Theorem::LinBounded2 { kappa, alpha } => {
            let part2 = matches!(theorem, Theorem::LinBounded2 { .. });
            let Some(iv) = need_iv(iv, b) else {
                return Plan {
                    benchmark: Benchmark::VirtualWelfare,
                    alpha: alpha.or(Some(0.5)),
                    guarantee: f64::INFINITY,
                };
            };
            let (sup, inf) = linear_bounded_params(iv, kappa, cfg);
            let a = alpha.unwrap_or(sup.value);
            let eta = virt_eta(kappa);
            b.param("kappa", kappa);
            b.param("alpha", a);
            b.param("alpha_scanned", sup.value);
            b.param("beta", inf.value);
            b.param("eta", eta);
            b.hyp(
                "linear_bounded",
                a < 1.0 && a >= sup.value - PARAM_TOL,
                format!("sup c/phi = {} at {}, alpha = {a}", sup.value, sup.witness),
            );
            b.hyp("eta_positive", eta > 0.0, format!("eta = {eta}"));
            let mut guarantee = 1.0 / (eta * (1.0 - a));
            if part2 {
                let idle = top_type_idle(instance, iv);
                b.hyp("top_type_idle", idle, "i*(r, phi_bar(c_high)) = 0");
                guarantee *= 1.0 - inf.value;
            }
            Plan {
                benchmark: Benchmark::VirtualWelfare,
                alpha: Some(a),
                guarantee,
            }
        }
        Theorem::UpperN => {
            need_iv(iv, b);
            let n = instance.n() as f64;
            b.param("n", n);
            Plan {
                benchmark: Benchmark::VirtualWelfare,
                alpha: None,
                guarantee: n.max(1.0),
            }
        }
        Theorem::Smooth { eps } => {
            let claimed = eps / (2.0 * (2.0 - eps));
            let beta = slowly_increasing_beta(dist, 0.5, 0.0, cfg);
            b.param("eps", eps);
            b.param("beta_claimed", claimed);
            b.param("beta_scanned", beta.value);
            b.hyp("eps_in_unit", unit(eps), format!("eps = {eps}"));
            b.hyp("zero_low", low == 0.0, format!("c_low = {low}"));
            b.hyp(
                "slowly_increasing",
                beta.value >= claimed - PARAM_TOL,
                format!("scanned beta {} vs {claimed}", beta.value),
            );
            Plan {
                benchmark: Benchmark::Welfare,
                alpha: Some(0.5),
                guarantee: 4.0 * (2.0 - eps) / eps,
            }
        }
        Theorem::WelImplications { kappa } => {
            let alpha = (kappa + 1.0) / (2.0 * kappa);
            let threshold = kappa * low;
            let eta = cost_eta(threshold);
            let beta = slowly_increasing_beta(dist, alpha, threshold, cfg);
            b.param("kappa", kappa);
            b.param("alpha", alpha);
            b.param("threshold", threshold);
            b.param("eta", eta);
            b.param("beta_scanned", beta.value);
            b.hyp("kappa_above_one", kappa > 1.0, format!("kappa = {kappa}"));
            b.hyp("nonincreasing_density", dist.density_nonincreasing(), "density scan");
            b.hyp("eta_positive", eta > 0.0, format!("eta = {eta}"));
            Plan {
                benchmark: Benchmark::Welfare,
                alpha: Some(alpha),
                guarantee: 4.0 * kappa / (eta * (kappa - 1.0)),
            }
        }
        Theorem::RevImplications(variant) => {
            let Some(iv) = need_iv(iv, b) else {
                return Plan {
                    benchmark: Benchmark::VirtualWelfare,
                    alpha: Some(0.5),
                    guarantee: f64::INFINITY,
                };
            };
            match variant {
                RevVariant::NonIncreasingDensity { kappa } => {
                    let alpha = kappa / (2.0 * kappa - 1.0);
                    let threshold = kappa * low;
                    let eta = virt_eta(threshold);
                    b.param("kappa", kappa);
                    b.param("alpha", alpha);
                    b.param("threshold", threshold);
                    b.param("eta", eta);
                    b.hyp("kappa_above_one", kappa > 1.0, format!("kappa = {kappa}"));
                    b.hyp("positive_low", low > 0.0, format!("c_low = {low}"));
                    b.hyp("nonincreasing_density", dist.density_nonincreasing(), "density scan");
                    b.hyp("eta_positive", eta > 0.0, format!("eta = {eta}"));
                    Plan {
                        benchmark: Benchmark::VirtualWelfare,
                        alpha: Some(alpha),
                        guarantee: (2.0 * kappa - 1.0) / (eta * (kappa - 1.0)),
                    }
                }
                RevVariant::Uniform => {
                    let is_uniform = matches!(dist.spec(), DistSpec::Uniform { low, .. } if *low == 0.0);
                    b.hyp("uniform_from_zero", is_uniform, "dist kind uniform with low 0");
                    b.hyp(
                        "top_type_idle",
                        top_type_idle(instance, iv),
                        "i*(r, phi_bar(c_high)) = 0",
                    );
                    b.param("alpha", 0.5);
                    Plan {
                        benchmark: Benchmark::VirtualWelfare,
                        alpha: Some(0.5),
                        guarantee: 1.0,
                    }
                }
                RevVariant::TruncatedNormal => {
                    let ok = match dist.spec() {
                        DistSpec::TruncatedNormal { mu, sigma, low } => {
                            b.param("mu", *mu);
                            b.param("sigma", *sigma);
                            *low == 0.0 && *sigma >= 5.0 / (2.0 * 2f64.sqrt()) * mu
                        }
                        _ => false,
                    };
                    b.hyp(
                        "wide_normal_at_zero",
                        ok,
                        "truncated at 0 with sigma >= 5 mu / (2 sqrt 2)",
                    );
                    b.param("alpha", 2.0 / 3.0);
                    Plan {
                        benchmark: Benchmark::VirtualWelfare,
                        alpha: Some(2.0 / 3.0),
                        guarantee: 3.0,
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typedist::{Segment, DEFAULT_GRID};
    use approx::assert_relative_eq;

    fn cfg() -> ScanConfig {
        ScanConfig::default()
    }

    fn inst() -> Instance {
        Instance::new(
            vec![0.0, 0.2, 0.5, 1.1],
            vec![0.0, 1.0, 2.0],
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.8, 0.2],
                vec![0.0, 0.5, 0.5],
                vec![0.0, 0.1, 0.9],
            ],
        )
        .unwrap()
    }

    #[test]
    fn uniform_slowly_increasing() {
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert_relative_eq!(slowly_increasing_beta(&d, 0.5, 0.0, cfg()).value, 0.5, epsilon = 1e-12);
        assert_relative_eq!(slowly_increasing_beta(&d, 1.0, 0.0, cfg()).value, 1.0);
    }

    #[test]
    fn smoothed_beta() {
        for eps in [0.1, 0.5, 0.9] {
            let d = TypeDistribution::smoothed_unit(eps).unwrap();
            let b = slowly_increasing_beta(&d, 0.5, 0.0, cfg());
            assert_relative_eq!(b.value, eps / (2.0 * (2.0 - eps)), epsilon = 1e-9);
            assert_relative_eq!(b.witness, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn uniform_virtual_beta_and_bounds() {
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        let iv = d.iron(DEFAULT_GRID).unwrap();
        assert_relative_eq!(slow_virtual_beta(&iv, 0.5, 0.0, cfg()).value, 1.0, epsilon = 1e-9);
        assert!(slow_virtual_beta(&iv, 1.0, 0.0, cfg()).value >= 1.0 - 1e-9);
        let (a, b) = linear_bounded_params(&iv, 0.0, cfg());
        assert_relative_eq!(a.value, 0.5, epsilon = 1e-9);
        assert_relative_eq!(b.value, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn wide_normal_is_two_thirds_bounded() {
        let d = TypeDistribution::truncated_normal(1.0, 2.0, 0.0).unwrap();
        let iv = d.iron(DEFAULT_GRID).unwrap();
        let (a, _) = linear_bounded_params(&iv, 0.0, cfg());
        assert!(a.value <= 2.0 / 3.0 + 1e-9, "{a:?}");
    }

    #[test]
    fn nonincreasing_density_bound() {
        let d = TypeDistribution::piecewise(vec![
            Segment {
                from: 1.0,
                to: 2.0,
                density: 0.6,
            },
            Segment {
                from: 2.0,
                to: 4.0,
                density: 0.2,
            },
        ])
        .unwrap();
        let iv = d.iron(DEFAULT_GRID).unwrap();
        for k in [1.5, 2.0, 3.0] {
            let (a, _) = linear_bounded_params(&iv, k * d.low(), cfg());
            assert!(a.value <= k / (2.0 * k - 1.0) + 1e-9);
        }
    }

    #[test]
    fn rhr_alpha_hat() {
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert_relative_eq!(rhr_bound_alpha_hat(&d, cfg()).unwrap().value, 1.0, epsilon = 1e-9);
        let e = TypeDistribution::exponential(1.0).unwrap();
        let a = rhr_bound_alpha_hat(&e, cfg()).unwrap().value;
        assert!((1.0 - 1e-9..1.0 + 1e-6).contains(&a));
        let n = TypeDistribution::uniform(1.0, 1.01).unwrap();
        assert!(rhr_bound_alpha_hat(&n, cfg()).unwrap().value < 1e-3);
    }

    #[test]
    fn eta_edges() {
        let d = TypeDistribution::uniform(0.0, 2.0).unwrap();
        let iv = d.iron(DEFAULT_GRID).unwrap();
        let i = inst();
        assert_eq!(small_tail_eta(&i, &d, Some(&iv), 0.0, TailKind::Cost).unwrap(), 1.0);
        assert_eq!(small_tail_eta(&i, &d, Some(&iv), 2.0, TailKind::Cost).unwrap(), 0.0);
        assert_eq!(small_tail_eta(&i, &d, Some(&iv), 2.0, TailKind::Virtual).unwrap(), 0.0);
    }

    #[test]
    fn exponential_instantiations_pass() {
        let d = TypeDistribution::exponential(1.5).unwrap();
        let iv = d.iron(DEFAULT_GRID).unwrap();
        let v = verify(
            &inst(),
            &d,
            Some(&iv),
            Theorem::LinBounded1 {
                kappa: 0.0,
                alpha: Some(0.5),
            },
            cfg(),
        );
        assert!(v.pass, "{v:?}");
        let v = verify(
            &inst(),
            &d,
            Some(&iv),
            Theorem::Slow {
                alpha: 0.5,
                beta: Some(0.5),
                kappa: 0.0,
                eta: Some(1.0),
            },
            cfg(),
        );
        assert!(v.pass, "{v:?}");
        assert_relative_eq!(v.guarantee, 4.0);
    }

    #[test]
    fn hypothesis_failure_is_reported() {
        let d = TypeDistribution::smoothed_unit(0.5).unwrap();
        let v = verify(&inst(), &d, None, Theorem::UpperN, cfg());
        assert!(!v.hypothesis_satisfied);
        assert_eq!(v.exit_code(), 3);
    }
}
