//! Revenue, welfare and virtual welfare.
//!
//! The closed forms are sums over envelope intervals using exact interval
//! masses and partial means. The `*_quadrature` functions integrate the
//! same quantities with composite Simpson and a brute-force argmax at every
//! node; they exist as independent cross-checks.

use serde::Serialize;

use crate::allocation::{envelope_rule, virtual_rule, welfare_breakpoints};
use crate::instance::Instance;
use crate::scalar::Real;
use crate::typedist::{IronedVirtualCost, PieceKind, TypeDistribution};

/// Panels per smooth segment in the quadrature oracles.
pub const SIMPSON_PANELS: usize = 256;
/// Default number of uniformly spaced `α` values probed by [`best_linear`].
pub const ALPHA_GRID: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearOptimum<T = f64> {
    pub alpha: T,
    pub revenue: T,
}

fn lift<T: Real>(x: f64) -> T {
    T::of(x)
}

/// Expected principal revenue of the linear contract `α r`.
pub fn linear_revenue<T: Real>(instance: &Instance<T>, dist: &TypeDistribution, alpha: T) -> T {
    let (low, high) = dist.support();
    let rule = envelope_rule(instance, alpha, (T::of(low), T::of(high)));
    let share = T::one() - alpha;
    let mut total = T::zero();
    if dist.continuous_weight() > 0.0 {
        for (lo, hi, act) in rule.intervals() {
            if act == 0 {
                continue;
            }
            let mass = dist.continuous_mass(lo.as_f64(), hi.as_f64());
            total = total + share * instance.big_r(act) * lift(mass);
        }
    }
    if dist.has_atoms() {
        let pay: Vec<T> = instance.expected_rewards().iter().map(|r| alpha * *r).collect();
        for &(at, mass) in dist.atoms() {
            let br = instance.best_response_to(&pay, T::of(at));
            total = total + br.principal_utility * lift(mass);
        }
    }
    total
}

fn atom_in(at: f64, a: f64, b: f64, high: f64) -> bool {
    at >= a && (at < b || (at == b && b >= high))
}

/// `Wel_[a,b]`: first-best welfare from types in `[a, b)`; the top of the
/// support is included when `b` reaches it.
pub fn welfare<T: Real>(instance: &Instance<T>, dist: &TypeDistribution, a: T, b: T) -> T {
    let (low, high) = dist.support();
    let (af, bf) = (a.as_f64().max(low), b.as_f64().min(high));
    let mut total = T::zero();
    if bf < af {
        return total;
    }
    if dist.continuous_weight() > 0.0 && bf > af {
        let rule = envelope_rule(instance, T::one(), (T::of(low), T::of(high)));
        for (lo, hi, act) in rule.intervals() {
            if act == 0 {
                continue;
            }
            let (x, y) = (lo.as_f64().max(af), hi.as_f64().min(bf));
            if y <= x {
                continue;
            }
            let mass = dist.continuous_mass(x, y);
            let mean = dist.partial_mean(x, y);
            total = total + instance.big_r(act) * lift(mass) - instance.gamma(act) * lift(mean);
        }
    }
    for &(at, mass) in dist.atoms() {
        if atom_in(at, af, bf, high) {
            total = total + first_best_value(instance, T::of(at)) * lift(mass);
        }
    }
    total
}

/// `max_i R_i - γ_i c`.
pub fn first_best_value<T: Real>(instance: &Instance<T>, c: T) -> T {
    (0..instance.num_actions())
        .map(|i| instance.big_r(i) - instance.gamma(i) * c)
        .fold(T::zero(), T::max)
}

/// `Wel` over the whole support.
pub fn total_welfare<T: Real>(instance: &Instance<T>, dist: &TypeDistribution) -> T {
    let (low, high) = dist.support();
    welfare(instance, dist, T::of(low), T::of(high))
}

/// `VWel_[κ, c̄]` by the breakpoint sum. Each interval `(u, v]` on which
/// the virtual rule picks `i` contributes `R_i ΔG - γ_i Δ(cG)`, except on
/// flat pieces of `φ̄` at level `s`, which contribute `(R_i - γ_i s) ΔG`.
pub fn virtual_welfare<T: Real>(instance: &Instance<T>, iv: &IronedVirtualCost, kappa: T) -> T {
    let dist = iv.dist();
    let (low, high) = dist.support();
    let rule = virtual_rule(instance, iv, (T::of(low), T::of(high)));
    let k = kappa.as_f64().max(low);
    let mut total = T::zero();
    for (lo, hi, act) in rule.intervals() {
        if act == 0 {
            continue;
        }
        let u = lo.as_f64().max(k);
        let mut v = hi.as_f64();
        if !v.is_finite() {
            v = dist.grid_high();
        }
        if v <= u {
            continue;
        }
        for p in iv.pieces() {
            let (a, b) = (p.from.max(u), p.to.min(v));
            if b <= a {
                continue;
            }
            let (ga, gb) = (dist.cdf(a), dist.cdf(b));
            total = total
                + match p.kind {
                    PieceKind::Exact => {
                        instance.big_r(act) * lift(gb - ga)
                            - instance.gamma(act) * (lift::<T>(b) * lift(gb) - lift::<T>(a) * lift(ga))
                    }
                    PieceKind::Flat { value } => {
                        (instance.big_r(act) - instance.gamma(act) * lift(value)) * lift(gb - ga)
                    }
                };
        }
    }
    total
}

/// Optimal virtual welfare over the full support.
pub fn total_virtual_welfare<T: Real>(instance: &Instance<T>, iv: &IronedVirtualCost) -> T {
    virtual_welfare(instance, iv, T::of(iv.dist().low()))
}

/// Maximizes [`linear_revenue`] over `α ∈ [0, 1]`.
///
/// Probes every `α` at which a welfare breakpoint `z` scaled by `α` meets a
/// support edge, an atom, a density kink or `φ̄^{-1}(z)`, plus a uniform
/// grid, then polishes the best grid bracket by golden section.
pub fn best_linear<T: Real>(
    instance: &Instance<T>,
    dist: &TypeDistribution,
    iv: Option<&IronedVirtualCost>,
) -> LinearOptimum<T> {
    best_linear_with(instance, dist, iv, ALPHA_GRID)
}

pub fn best_linear_with<T: Real>(
    instance: &Instance<T>,
    dist: &TypeDistribution,
    iv: Option<&IronedVirtualCost>,
    grid: usize,
) -> LinearOptimum<T> {
    let eval = |alpha: T| LinearOptimum {
        alpha,
        revenue: linear_revenue(instance, dist, alpha),
    };
    let mut best = eval(T::zero());
    let consider = |cand: LinearOptimum<T>, best: &mut LinearOptimum<T>| {
        if cand.revenue > best.revenue {
            *best = cand;
        }
    };

    let (low, high) = dist.support();
    let mut targets: Vec<f64> = vec![low, high];
    targets.extend(dist.atoms().iter().map(|a| a.0));
    targets.extend(dist.kinks());
    for (z, _, _) in welfare_breakpoints(instance) {
        if z <= T::zero() {
            continue;
        }
        let mut tz: Vec<T> = targets.iter().filter(|t| t.is_finite()).map(|t| T::of(*t)).collect();
        if let Some(iv) = iv {
            tz.push(T::of(iv.inverse(z.as_f64())));
        }
        for t in tz {
            let a = t / z;
            if a >= T::zero() && a <= T::one() {
                consider(eval(a), &mut best);
            }
        }
    }

    let steps = grid.max(2) - 1;
    let mut grid_best = (0usize, T::neg_infinity());
    for k in 0..=steps {
        let a = T::of_usize(k) / T::of_usize(steps);
        let cand = eval(a);
        if cand.revenue > grid_best.1 {
            grid_best = (k, cand.revenue);
        }
        consider(cand, &mut best);
    }
    let lo = T::of_usize(grid_best.0.saturating_sub(1)) / T::of_usize(steps);
    let hi = T::of_usize((grid_best.0 + 1).min(steps)) / T::of_usize(steps);
    consider(golden_max(eval, lo, hi), &mut best);
    best
}

fn golden_max<T: Real>(eval: impl Fn(T) -> LinearOptimum<T>, mut a: T, mut b: T) -> LinearOptimum<T> {
    let ratio = T::of((5f64.sqrt() - 1.0) / 2.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..80 {
        if f1.revenue >= f2.revenue {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = eval(x2);
        }
    }
    if f1.revenue >= f2.revenue {
        f1
    } else {
        f2
    }
}

/// Composite Simpson on `[a, b]` that never evaluates `f` at the ends.
/// End values are extrapolated linearly from two points just inside, so
/// one-sided integrands see only their interior. The offset is large
/// enough that utility differences there clear the tie tolerance.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let e = (1e-6 * a.abs().max(b.abs()).max(1.0)).min(h / 4.0);
    let mut s = 2.0 * f(a + e) - f(a + 2.0 * e) + 2.0 * f(b - e) - f(b - 2.0 * e);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * k as f64);
    }
    s * h / 3.0
}

fn split_points(dist: &TypeDistribution, a: f64, b: f64, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = vec![a, b];
    pts.extend(dist.kinks());
    pts.extend(dist.atoms().iter().map(|x| x.0));
    pts.extend(extra);
    pts.retain(|x| x.is_finite() && *x >= a && *x <= b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn piecewise_simpson(pts: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    pts.windows(2).map(|w| simpson(&f, w[0], w[1], SIMPSON_PANELS)).sum()
}

fn finite_high(dist: &TypeDistribution) -> f64 {
    dist.grid_high()
}

fn brute_argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Oracle for [`linear_revenue`].
pub fn linear_revenue_quadrature(instance: &Instance, dist: &TypeDistribution, alpha: f64) -> f64 {
    let (low, high) = (dist.low(), finite_high(dist));
    let r = instance.expected_rewards();
    let z: Vec<f64> = welfare_breakpoints(instance).iter().map(|w| alpha * w.0).collect();
    let pts = split_points(dist, low, high, z);
    let act = |c: f64| brute_argmax((0..r.len()).map(|i| alpha * r[i] - instance.gamma(i) * c));
    let mut total = piecewise_simpson(&pts, |c| (1.0 - alpha) * r[act(c)] * dist.pdf(c));
    for &(at, m) in dist.atoms() {
        total += m * (1.0 - alpha) * r[act(at)];
    }
    total
}

/// Oracle for [`welfare`].
pub fn welfare_quadrature(instance: &Instance, dist: &TypeDistribution, a: f64, b: f64) -> f64 {
    let (a, b) = (a.max(dist.low()), b.min(finite_high(dist)));
    let z: Vec<f64> = welfare_breakpoints(instance).iter().map(|w| w.0).collect();
    let pts = split_points(dist, a, b, z);
    let value = |c: f64| first_best_value(instance, c);
    let mut total = piecewise_simpson(&pts, |c| value(c) * dist.pdf(c));
    for &(at, m) in dist.atoms() {
        if atom_in(at, a, b, dist.high()) {
            total += m * value(at);
        }
    }
    total
}

/// Oracle for [`virtual_welfare`]: integrates `max_i R_i - γ_i φ̄(c)`
/// against the density on `[κ, c̄]`.
pub fn virtual_welfare_quadrature(instance: &Instance, iv: &IronedVirtualCost, kappa: f64) -> f64 {
    let dist = iv.dist();
    let (a, b) = (kappa.max(dist.low()), finite_high(dist));
    let mut extra: Vec<f64> = welfare_breakpoints(instance).iter().map(|w| iv.inverse(w.0)).collect();
    for p in iv.pieces() {
        if let PieceKind::Flat { .. } = p.kind {
            extra.push(p.from);
            extra.push(p.to);
        }
    }
    let pts = split_points(dist, a, b, extra);
    piecewise_simpson(&pts, |c| first_best_value(instance, iv.value(c)) * dist.pdf(c))
}

/// Headline numbers for one instance and distribution.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub wel: f64,
    pub vwel: Option<f64>,
    pub apx_best: LinearOptimum<f64>,
    pub apx_at: Vec<(f64, f64)>,
}

impl Metrics {
    pub fn compute(
        instance: &Instance,
        dist: &TypeDistribution,
        iv: Option<&IronedVirtualCost>,
        alphas: &[f64],
    ) -> Self {
        Self {
            wel: total_welfare(instance, dist),
            vwel: iv.map(|iv| total_virtual_welfare(instance, iv)),
            apx_best: best_linear(instance, dist, iv),
            apx_at: alphas
                .iter()
                .map(|a| (*a, linear_revenue(instance, dist, *a)))
                .collect(),
        }
    }
}
