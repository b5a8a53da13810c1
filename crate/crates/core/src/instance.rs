//! Principal-agent instances and the agent's best response.
//!
//! Action 0 is the null action (no effort) and outcome 0 is the null
//! outcome it produces with certainty. Efforts increase with the action
//! index and so do expected rewards.

use std::fmt;

use serde::Serialize;

use crate::scalar::Real;

/// Row sums of `F` must be within this of 1.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Whether consecutive actions may share an effort level.
///
/// A few canonical constructions give the first non-null action zero
/// effort, which the strict ordering rules out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffortOrder {
    #[default]
    Strict,
    Weak,
}

/// One broken instance invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub key: &'static str,
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("invalid instance: {}", join(.0))]
pub struct InvalidInstance(pub Vec<Violation>);

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.message.as_str()).collect::<Vec<_>>().join("; ")
}

fn short(x: f64) -> String {
    let r = (x * 1e12).round() / 1e12;
    format!("{r}")
}

/// Checks every instance invariant and returns the broken ones.
pub fn validate<T: Real>(gammas: &[T], rewards: &[T], probs: &[Vec<T>], order: EffortOrder) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |key, index, message: String| out.push(Violation { key, index, message });

    if gammas.is_empty() {
        push("gammas", None, "gammas is empty".into());
    }
    for (i, g) in gammas.iter().enumerate() {
        if !g.is_finite() || *g < T::zero() {
            push(
                "gammas",
                Some(i),
                format!("gammas[{i}] = {g} is not a non-negative number"),
            );
        }
    }
    if let Some(g0) = gammas.first() {
        if !g0.is_zero() {
            push("gammas", Some(0), format!("gammas[0] must be 0, got {g0}"));
        }
    }
    for i in 1..gammas.len() {
        let bad = match order {
            EffortOrder::Strict => gammas[i] <= gammas[i - 1],
            EffortOrder::Weak => gammas[i] < gammas[i - 1],
        };
        if bad {
            let what = match order {
                EffortOrder::Strict => "strictly increasing",
                EffortOrder::Weak => "non-decreasing",
            };
            push("gammas", Some(i), format!("gammas not {what} at index {i}"));
        }
    }

    let mut rewards_ok = !rewards.is_empty();
    if rewards.is_empty() {
        push("rewards", None, "rewards is empty".into());
    }
    for (j, r) in rewards.iter().enumerate() {
        if !r.is_finite() || *r < T::zero() {
            rewards_ok = false;
            push(
                "rewards",
                Some(j),
                format!("rewards[{j}] = {r} is not a non-negative number"),
            );
        }
    }
    if let Some(r0) = rewards.first() {
        if !r0.is_zero() {
            rewards_ok = false;
            push("rewards", Some(0), format!("rewards[0] must be 0, got {r0}"));
        }
    }
    for j in 1..rewards.len() {
        if rewards[j] < rewards[j - 1] {
            rewards_ok = false;
            push("rewards", Some(j), format!("rewards not non-decreasing at index {j}"));
        }
    }

    let mut probs_ok = true;
    if probs.len() != gammas.len() {
        probs_ok = false;
        push(
            "F",
            None,
            format!("F has {} rows but there are {} actions", probs.len(), gammas.len()),
        );
    }
    for (i, row) in probs.iter().enumerate() {
        if row.len() != rewards.len() {
            probs_ok = false;
            push(
                "F",
                Some(i),
                format!(
                    "F row {i} has {} entries but there are {} outcomes",
                    row.len(),
                    rewards.len()
                ),
            );
            continue;
        }
        let mut sum = T::zero();
        for (j, p) in row.iter().enumerate() {
            if !p.is_finite() || *p < T::zero() || *p > T::one() {
                probs_ok = false;
                push("F", Some(i), format!("F[{i}][{j}] = {p} is outside [0, 1]"));
            }
            sum = sum + *p;
        }
        if (sum - T::one()).abs().as_f64() > ROW_SUM_TOL {
            probs_ok = false;
            push("F", Some(i), format!("F row {i} sums to {}", short(sum.as_f64())));
        }
        if i == 0 && row.first().is_some_and(|p| !p.is_one()) {
            probs_ok = false;
            push(
                "F",
                Some(0),
                "F[0][0] must be 1: the null action yields the null outcome".into(),
            );
        }
        if i > 0 && row.first().is_some_and(|p| !p.is_zero()) {
            probs_ok = false;
            push(
                "F",
                Some(i),
                format!("F[{i}][0] must be 0: only the null action yields the null outcome"),
            );
        }
    }

    if probs_ok && rewards_ok {
        let big_r = expected(probs, rewards);
        for i in 1..big_r.len() {
            if big_r[i] <= big_r[i - 1] {
                push(
                    "rewards",
                    Some(i),
                    format!("expected rewards not strictly increasing at index {i}"),
                );
            }
        }
    }
    out
}

fn expected<T: Real>(probs: &[Vec<T>], values: &[T]) -> Vec<T> {
    probs
        .iter()
        .map(|row| row.iter().zip(values).fold(T::zero(), |acc, (p, v)| acc + *p * *v))
        .collect()
}

/// Payments per outcome. Limited liability: every entry is non-negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PaymentProfile<T = f64>(Vec<T>);

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum PaymentError {
    #[error("payment t[{0}] is negative or not finite")]
    Negative(usize),
}

impl<T: Real> PaymentProfile<T> {
    pub fn new(t: Vec<T>) -> Result<Self, PaymentError> {
        match t.iter().position(|x| !x.is_finite() || *x < T::zero()) {
            Some(j) => Err(PaymentError::Negative(j)),
            None => Ok(Self(t)),
        }
    }

    pub fn zero(outcomes: usize) -> Self {
        Self(vec![T::zero(); outcomes])
    }

    /// Linear contract: pays `alpha * r_j` on outcome `j`.
    pub fn linear(instance: &Instance<T>, alpha: T) -> Self {
        Self(instance.rewards.iter().map(|r| alpha * *r).collect())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// What the agent does under a given payment profile and cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponse<T = f64> {
    pub action: usize,
    pub expected_payment: T,
    pub agent_utility: T,
    pub principal_utility: T,
}

/// A validated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T = f64> {
    gammas: Vec<T>,
    rewards: Vec<T>,
    probs: Vec<Vec<T>>,
    expected_rewards: Vec<T>,
    utility_tie: T,
    order: EffortOrder,
}

impl Serialize for Instance<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("gammas", &self.gammas)?;
        m.serialize_entry("rewards", &self.rewards)?;
        m.serialize_entry("F", &self.probs)?;
        if self.order == EffortOrder::Weak {
            m.serialize_entry("effort_order", &self.order)?;
        }
        m.end()
    }
}

impl<T: Real> Instance<T> {
    pub fn new(gammas: Vec<T>, rewards: Vec<T>, probs: Vec<Vec<T>>) -> Result<Self, InvalidInstance> {
        Self::with_order(gammas, rewards, probs, EffortOrder::Strict)
    }

    pub fn with_order(
        gammas: Vec<T>,
        rewards: Vec<T>,
        probs: Vec<Vec<T>>,
        order: EffortOrder,
    ) -> Result<Self, InvalidInstance> {
        let violations = validate(&gammas, &rewards, &probs, order);
        if !violations.is_empty() {
            return Err(InvalidInstance(violations));
        }
        let expected_rewards = expected(&probs, &rewards);
        Ok(Self {
            gammas,
            rewards,
            probs,
            expected_rewards,
            utility_tie: T::utility_tie(),
            order,
        })
    }

    /// Replaces the utility tie tolerance used by [`Instance::best_response`].
    pub fn with_utility_tie(mut self, tol: T) -> Self {
        self.utility_tie = tol;
        self
    }

    pub fn utility_tie(&self) -> T {
        self.utility_tie
    }

    pub fn effort_order(&self) -> EffortOrder {
        self.order
    }

    /// Number of non-null actions.
    pub fn n(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn num_actions(&self) -> usize {
        self.gammas.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.rewards.len()
    }

    pub fn gammas(&self) -> &[T] {
        &self.gammas
    }

    pub fn gamma(&self, i: usize) -> T {
        self.gammas[i]
    }

    pub fn rewards(&self) -> &[T] {
        &self.rewards
    }

    pub fn outcome_probs(&self) -> &[Vec<T>] {
        &self.probs
    }

    pub fn expected_rewards(&self) -> &[T] {
        &self.expected_rewards
    }

    pub fn big_r(&self, i: usize) -> T {
        self.expected_rewards[i]
    }

    pub fn max_reward(&self) -> T {
        self.rewards.iter().copied().fold(T::zero(), T::max)
    }

    /// Expected payment `T_i` for every action.
    pub fn expected_payments(&self, t: &PaymentProfile<T>) -> Vec<T> {
        expected(&self.probs, t.as_slice())
    }

    /// Agent's best response to `t` at cost `c`.
    ///
    /// Agent-utility ties within the tolerance go to the action the
    /// principal prefers; if the principal is also indifferent the highest
    /// index wins.
    pub fn best_response(&self, t: &PaymentProfile<T>, c: T) -> BestResponse<T> {
        self.best_response_to(&self.expected_payments(t), c)
    }

    /// Best response given precomputed expected payments.
    pub fn best_response_to(&self, pay: &[T], c: T) -> BestResponse<T> {
        let tol = self.utility_tie;
        let util = |i: usize| pay[i] - self.gammas[i] * c;
        let top = (0..pay.len()).map(util).fold(T::neg_infinity(), T::max);
        let mut best: Option<usize> = None;
        for i in 0..pay.len() {
            if util(i) < top - tol {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let pb = self.expected_rewards[b] - pay[b];
                    let pi = self.expected_rewards[i] - pay[i];
                    if pi >= pb - tol {
                        Some(i)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let a = best.unwrap_or(0);
        BestResponse {
            action: a,
            expected_payment: pay[a],
            agent_utility: util(a),
            principal_utility: self.expected_rewards[a] - pay[a],
        }
    }

    /// Converts every number to another scalar type.
    pub fn convert<U: Real>(&self) -> Instance<U> {
        let cv = |v: &[T]| v.iter().map(|x| U::of(x.as_f64())).collect::<Vec<_>>();
        let probs: Vec<Vec<U>> = self.probs.iter().map(|r| cv(r)).collect();
        let rewards = cv(&self.rewards);
        Instance {
            gammas: cv(&self.gammas),
            expected_rewards: expected(&probs, &rewards),
            rewards,
            probs,
            utility_tie: U::of(self.utility_tie.as_f64()),
            order: self.order,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn minimal_instance_is_valid() {
        let v = validate(
            &[0.0, 1.0],
            &[0.0, 1.0],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            EffortOrder::Strict,
        );
        assert!(v.is_empty());
    }

    #[test]
    fn expected_rewards_of_four_action_instance() {
        assert_eq!(appx().expected_rewards(), &[0.0, 100.0, 200.0, 300.0]);
    }

    #[test]
    fn unordered_efforts_are_reported_with_index() {
        let v = validate(
            &[0.0, 2.0, 1.0],
            &[0.0, 1.0, 2.0],
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            EffortOrder::Strict,
        );
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].message, "gammas not strictly increasing at index 2");
    }

    #[test]
    fn row_sum_is_reported() {
        let v = validate(
            &[0.0, 1.0, 2.0],
            &[0.0, 1.0, 2.0],
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.5, 0.47]],
            EffortOrder::Strict,
        );
        assert!(v.iter().any(|x| x.message == "F row 2 sums to 0.97"), "{v:?}");
    }

    #[test]
    fn dominated_action_is_an_error() {
        let v = validate(
            &[0.0, 1.0, 2.0],
            &[0.0, 1.0, 2.0],
            &[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
            EffortOrder::Strict,
        );
        assert!(v.iter().any(|x| x
            .message
            .contains("expected rewards not strictly increasing at index 2")));
    }

    #[test]
    fn null_contract_gives_null_action() {
        let inst = appx();
        let br = inst.best_response(&PaymentProfile::zero(3), 0.7);
        assert_eq!(br.action, 0);
        assert_eq!(br.agent_utility, 0.0);
        assert_eq!(br.principal_utility, 0.0);
    }

    #[test]
    fn agent_tie_goes_to_principal() {
        // t2 - t1 = 16 makes actions 1 and 2 indifferent at c = 4.
        let inst = appx();
        let t = PaymentProfile::new(vec![0.0, 10.0, 26.0]).unwrap();
        let pay = inst.expected_payments(&t);
        assert!(((pay[1] - 4.0) - (pay[2] - 12.0)).abs() < 1e-12);
        let br = inst.best_response(&t, 4.0);
        assert_eq!(br.action, 2);
    }
}
