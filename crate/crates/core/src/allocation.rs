//! Piecewise-constant allocation rules from upper envelopes of lines.
//!
//! Every rule here is the pointwise argmax of lines `a_i - γ_i c` over
//! the cost axis: `αR_i` for linear contracts, `R_i` evaluated at `φ̄(c)`
//! for virtual welfare, and `T_i` for an arbitrary payment profile. Since
//! efforts increase with the index, the winning action can only fall as `c`
//! grows.

use serde::ser::{Serialize, Serializer};

use crate::instance::{Instance, PaymentProfile};
use crate::scalar::Real;
use crate::typedist::IronedVirtualCost;

/// Piecewise-constant map from cost to action.
///
/// Stored with ascending `edges`; `actions[k]` applies on
/// `(edges[k], edges[k+1]]`, and the lowest cost maps to `actions[0]`.
/// A cost exactly at an interior edge therefore gets the higher action.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationRule<T = f64> {
    edges: Vec<T>,
    actions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuleError {
    #[error("need one more breakpoint than actions, got {0} breakpoints and {1} actions")]
    Shape(usize, usize),
    #[error("breakpoints must be strictly decreasing")]
    Unsorted,
    #[error("actions must increase toward lower cost")]
    NotMonotone,
}

impl<T: Real> AllocationRule<T> {
    /// Builds a monotone rule from descending breakpoints
    /// `c_high = z_0 > … > z_{ℓ+1} = c_low` and the action on each
    /// `(z_{i+1}, z_i]`.
    pub fn new(breakpoints: Vec<T>, actions: Vec<usize>) -> Result<Self, RuleError> {
        let rule = Self::piecewise(breakpoints, actions)?;
        if !rule.is_monotone() {
            return Err(RuleError::NotMonotone);
        }
        Ok(rule)
    }

    /// Same layout as [`AllocationRule::new`] without the monotonicity
    /// requirement. Used for rules induced by arbitrary menus.
    pub fn piecewise(mut breakpoints: Vec<T>, mut actions: Vec<usize>) -> Result<Self, RuleError> {
        if breakpoints.len() != actions.len() + 1 || actions.is_empty() {
            return Err(RuleError::Shape(breakpoints.len(), actions.len()));
        }
        breakpoints.reverse();
        actions.reverse();
        let degenerate = breakpoints.len() == 2 && breakpoints[0] == breakpoints[1];
        if !degenerate && breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RuleError::Unsorted);
        }
        Ok(Self::from_ascending(breakpoints, actions))
    }

    pub(crate) fn from_ascending(edges: Vec<T>, actions: Vec<usize>) -> Self {
        let mut e = vec![edges[0]];
        let mut a: Vec<usize> = Vec::new();
        for (k, act) in actions.into_iter().enumerate() {
            if a.last() == Some(&act) {
                *e.last_mut().unwrap() = edges[k + 1];
            } else {
                a.push(act);
                e.push(edges[k + 1]);
            }
        }
        Self { edges: e, actions: a }
    }

    pub fn constant(action: usize, low: T, high: T) -> Self {
        Self {
            edges: vec![low, high],
            actions: vec![action],
        }
    }

    pub fn low(&self) -> T {
        self.edges[0]
    }

    pub fn high(&self) -> T {
        self.edges[self.edges.len() - 1]
    }

    /// Descending breakpoints `z_0 = c_high, …, z_{ℓ+1} = c_low`.
    pub fn breakpoints(&self) -> Vec<T> {
        self.edges.iter().rev().copied().collect()
    }

    /// Actions aligned with [`AllocationRule::breakpoints`]: entry `i`
    /// applies on `(z_{i+1}, z_i]`.
    pub fn actions(&self) -> Vec<usize> {
        self.actions.iter().rev().copied().collect()
    }

    /// Interior breakpoints, ascending.
    pub fn interior(&self) -> &[T] {
        &self.edges[1..self.edges.len() - 1]
    }

    /// `(lo, hi, action)` for every interval, by ascending cost.
    pub fn intervals(&self) -> impl Iterator<Item = (T, T, usize)> + '_ {
        self.actions
            .iter()
            .enumerate()
            .map(move |(k, a)| (self.edges[k], self.edges[k + 1], *a))
    }

    pub fn action_at(&self, c: T) -> usize {
        let inner = self.interior();
        let k = inner.partition_point(|z| *z < c);
        self.actions[k]
    }

    pub fn is_monotone(&self) -> bool {
        self.actions.windows(2).all(|w| w[1] < w[0])
    }

    /// `∫_a^b γ_{x(z)} dz` as an exact sum over intervals.
    pub fn effort_integral(&self, instance: &Instance<T>, a: T, b: T) -> T {
        if b < a {
            return -self.effort_integral(instance, b, a);
        }
        let mut total = T::zero();
        for (lo, hi, act) in self.intervals() {
            let (x, y) = (lo.max(a), hi.min(b));
            if y > x {
                total = total + instance.gamma(act) * (y - x);
            }
        }
        total
    }

    pub fn convert<U: Real>(&self) -> AllocationRule<U> {
        AllocationRule {
            edges: self.edges.iter().map(|e| U::of(e.as_f64())).collect(),
            actions: self.actions.clone(),
        }
    }
}

impl<T: Real> Serialize for AllocationRule<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct View {
            breakpoints: Vec<f64>,
            actions: Vec<usize>,
        }
        View {
            breakpoints: self.breakpoints().iter().map(|z| z.as_f64()).collect(),
            actions: self.actions(),
        }
        .serialize(s)
    }
}

/// Lines `intercept_i - slope_i c`. Returns `(action, start)` in order of
/// increasing cost, where `action` wins on `(start, next start]`.
/// `prefer(i, j)` settles identical lines.
fn upper_envelope<T: Real>(
    intercepts: &[T],
    slopes: &[T],
    tol: T,
    value_tol: T,
    prefer: impl Fn(usize, usize) -> bool,
) -> Vec<(usize, T)> {
    let mut hull = Vec::with_capacity(intercepts.len());
    upper_envelope_into(intercepts, slopes, tol, value_tol, prefer, &mut hull);
    hull
}

/// [`upper_envelope`] writing into a reusable buffer.
pub(crate) fn upper_envelope_into<T: Real>(
    intercepts: &[T],
    slopes: &[T],
    tol: T,
    value_tol: T,
    prefer: impl Fn(usize, usize) -> bool,
    hull: &mut Vec<(usize, T)>,
) {
    hull.clear();
    for j in (0..intercepts.len()).rev() {
        loop {
            let Some(&(top, start)) = hull.last() else {
                hull.push((j, T::neg_infinity()));
                break;
            };
            let dslope = slopes[top] - slopes[j];
            if dslope <= T::zero() {
                let diff = intercepts[j] - intercepts[top];
                if diff > value_tol || (diff >= -value_tol && prefer(j, top)) {
                    hull.pop();
                    continue;
                }
                break;
            }
            let x = (intercepts[top] - intercepts[j]) / dslope;
            if x <= start + tol {
                hull.pop();
                continue;
            }
            hull.push((j, x));
            break;
        }
    }
}

fn clip<T: Real>(starts: &[(usize, T)], low: T, high: T) -> AllocationRule<T> {
    if high <= low {
        let k = starts.partition_point(|(_, s)| *s < low).saturating_sub(1);
        return AllocationRule::constant(starts[k].0, low, high);
    }
    let mut edges = vec![low];
    let mut actions = Vec::new();
    for (k, &(act, start)) in starts.iter().enumerate() {
        let end = starts.get(k + 1).map_or(T::infinity(), |s| s.1);
        let (a, b) = (start.max(low), end.min(high));
        if b > a {
            actions.push(act);
            edges.push(b);
        }
    }
    if actions.is_empty() {
        let k = starts.partition_point(|(_, s)| *s < low).saturating_sub(1);
        return AllocationRule::constant(starts[k].0, low, high);
    }
    AllocationRule::from_ascending(edges, actions)
}

fn scaled_starts<T: Real>(instance: &Instance<T>, alpha: T) -> Vec<(usize, T)> {
    let intercepts: Vec<T> = instance.expected_rewards().iter().map(|r| alpha * *r).collect();
    upper_envelope(
        &intercepts,
        instance.gammas(),
        T::cost_merge(),
        instance.utility_tie(),
        |i, j| i > j,
    )
}

/// Welfare breakpoints `z_Wel`: interior starts of the `α = 1` envelope
/// over the whole cost axis, with the actions above and below each.
pub fn welfare_breakpoints<T: Real>(instance: &Instance<T>) -> Vec<(T, usize, usize)> {
    let s = scaled_starts(instance, T::one());
    s.windows(2).map(|w| (w[1].1, w[0].0, w[1].0)).collect()
}

/// The rule induced by the linear contract `α r`: argmax of `αR_i - γ_i c`.
/// `α = 1` gives the welfare-maximizing rule.
pub fn envelope_rule<T: Real>(instance: &Instance<T>, alpha: T, (low, high): (T, T)) -> AllocationRule<T> {
    clip(&scaled_starts(instance, alpha), low, high)
}

/// Argmax of `R_i - γ_i φ̄(c)`: each welfare breakpoint `z` moves to
/// `φ̄^{-1}(z)`.
pub fn virtual_rule<T: Real>(instance: &Instance<T>, iv: &IronedVirtualCost, (low, high): (T, T)) -> AllocationRule<T> {
    let starts = scaled_starts(instance, T::one());
    let mapped: Vec<(usize, T)> = starts
        .iter()
        .enumerate()
        .map(|(k, &(a, z))| {
            if k == 0 {
                (a, z)
            } else {
                (a, T::of(iv.inverse(z.as_f64())))
            }
        })
        .collect();
    clip(&mapped, low, high)
}

/// `i*(t, ·)` as a rule over `[low, high]`.
pub fn rule_from_payments<T: Real>(
    instance: &Instance<T>,
    t: &PaymentProfile<T>,
    (low, high): (T, T),
) -> AllocationRule<T> {
    let pay = instance.expected_payments(t);
    rule_from_expected(instance, &pay, (low, high))
}

/// [`rule_from_payments`] from expected payments `T_i`.
pub fn rule_from_expected<T: Real>(instance: &Instance<T>, pay: &[T], (low, high): (T, T)) -> AllocationRule<T> {
    let tol = instance.utility_tie();
    let pu = |i: usize| instance.big_r(i) - pay[i];
    let starts = upper_envelope(pay, instance.gammas(), T::cost_merge(), tol, |i, j| {
        let (a, b) = (pu(i), pu(j));
        a > b + tol || (a >= b - tol && i > j)
    });
    clip(&starts, low, high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typedist::{Segment, TypeDistribution, DEFAULT_GRID};
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

    fn appx_dist() -> TypeDistribution {
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
        .unwrap()
    }

    #[test]
    fn welfare_rule_on_small_support_is_constant() {
        let r = envelope_rule(&appx(), 1.0, (0.0, 10.0));
        assert_eq!(r.actions(), vec![3]);
        assert_eq!(r.breakpoints(), vec![10.0, 0.0]);
        let z: Vec<f64> = welfare_breakpoints(&appx()).iter().map(|w| w.0).collect();
        assert_eq!(z, vec![40.0, 50.0, 100.0]);
    }

    #[test]
    fn zero_scale_is_null_everywhere() {
        let r = envelope_rule(&appx(), 0.0, (0.0, 10.0));
        assert_eq!(r.actions(), vec![0]);
    }

    #[test]
    fn scaled_breakpoints() {
        let r = envelope_rule(&appx(), 0.05, (0.0, 10.0));
        assert_eq!(r.actions(), vec![0, 1, 2, 3]);
        let z = r.breakpoints();
        for (got, want) in z.iter().zip([10.0, 5.0, 2.5, 2.0, 0.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        // at a breakpoint the higher action
        assert_eq!(r.action_at(2.5), 2);
        assert_eq!(r.action_at(2.5 + 1e-9), 1);
        // a breakpoint landing on the top edge leaves no room for action 0
        assert_eq!(envelope_rule(&appx(), 0.1, (0.0, 10.0)).actions(), vec![1, 2, 3]);
        assert_eq!(r.action_at(0.0), 3);
    }

    #[test]
    fn virtual_rule_of_three_segment_example() {
        let iv = appx_dist().iron(DEFAULT_GRID).unwrap();
        let r = virtual_rule(&appx(), &iv, (0.0, 10.0));
        assert_eq!(r.actions(), vec![0, 1, 2, 3]);
        for (got, want) in r.breakpoints().iter().zip([10.0, 9.0, 4.0, 1.0, 0.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn payments_rule_crossover() {
        // consistent at c = 4: action 2 is chosen there
        let inst = appx();
        let t = PaymentProfile::new(vec![0.0, 4.0, 21.0]).unwrap();
        assert_eq!(inst.best_response(&t, 4.0).action, 2);
        let r = rule_from_payments(&inst, &t, (0.0, 10.0));
        let z = r.breakpoints();
        assert_eq!(r.actions(), vec![0, 2, 3]);
        assert!(z[2] >= 3.2);
        assert_relative_eq!(z[2], 3.4, epsilon = 1e-12);
        // the profile (0, 0, 17) never reaches action 2 and is inconsistent at c = 4
        let t = PaymentProfile::new(vec![0.0, 0.0, 17.0]).unwrap();
        let r = rule_from_payments(&inst, &t, (0.0, 10.0));
        assert_eq!(r.actions(), vec![0, 3]);
        assert_eq!(r.action_at(4.0), 0);
    }

    #[test]
    fn effort_integral_is_breakpoint_sum() {
        let r = AllocationRule::new(vec![2.0, 1.0, 0.0], vec![1, 3]).unwrap();
        assert_relative_eq!(r.effort_integral(&appx(), 0.5, 2.0), 5.5 * 0.5 + 1.0);
        assert_relative_eq!(r.effort_integral(&appx(), 2.0, 0.5), -(5.5 * 0.5 + 1.0));
    }

    #[test]
    fn monotonicity_is_enforced() {
        assert_eq!(
            AllocationRule::new(vec![2.0, 1.0, 0.0], vec![3, 1]).unwrap_err(),
            RuleError::NotMonotone
        );
        assert!(AllocationRule::piecewise(vec![2.0, 1.0, 0.0], vec![3, 1]).is_ok());
    }

    #[test]
    fn serializes_descending() {
        let r = AllocationRule::new(vec![2.0, 1.0, 0.0], vec![1, 3]).unwrap();
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"breakpoints":[2.0,1.0,0.0],"actions":[1,3]}"#
        );
    }
}
