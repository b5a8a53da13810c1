//! Cost-type distributions.
//!
//! A distribution is a finite mixture of closed-form families plus point
//! masses. The CDF is right-continuous and counts an atom once `c` reaches
//! its location. Densities are right-continuous too, with the top of the
//! support closed, so virtual costs at a density jump take the value from
//! the segment starting there.

mod family;
mod iron;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
pub use family::Family;
pub use iron::{IronPiece, IronedVirtualCost, PieceKind, DEFAULT_GRID};

/// Quantile at which infinite supports are cut for grids and quadrature.
pub const TAIL_QUANTILE: f64 = 1.0 - 1e-9;

/// Weights and masses must add up to 1 within this.
pub const MASS_TOL: f64 = 1e-12;

/// Below this CDF value the reverse hazard rate is reported undefined.
pub const CDF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("virtual cost is undefined for distributions with atoms")]
    AtomPresent,
    #[error("density is zero at c = {0}")]
    ZeroDensity(f64),
    #[error("CDF is below {CDF_FLOOR} at c = {0}")]
    ZeroCdf(f64),
    #[error("grid size {0} is below the minimum of 64")]
    GridTooSmall(usize),
}

/// File representation of a distribution: a record tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
    TruncatedNormal { mu: f64, sigma: f64, low: f64 },
    Piecewise { segments: Vec<Segment> },
    Mixture { parts: Vec<Part> },
    Atom { at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub from: f64,
    pub to: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Part {
    pub weight: f64,
    pub dist: DistSpec,
}

/// A validated cost distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    spec: DistSpec,
    parts: Vec<(f64, Family)>,
    atoms: Vec<(f64, f64)>,
    low: f64,
    high: f64,
    grid_high: f64,
}

fn invalid(key: &str, message: impl Into<String>) -> DistError {
    DistError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

fn flatten(spec: &DistSpec, weight: f64, key: &str, out: &mut Vec<(f64, Family)>) -> Result<(), DistError> {
    if let DistSpec::Mixture { parts } = spec {
        if parts.is_empty() {
            return Err(invalid(&format!("{key}.parts"), "mixture has no parts"));
        }
        let mut total = 0.0;
        for (k, p) in parts.iter().enumerate() {
            let pk = format!("{key}.parts[{k}]");
            if !(p.weight.is_finite() && p.weight > 0.0) {
                return Err(invalid(&format!("{pk}.weight"), "weight must be positive"));
            }
            total += p.weight;
            flatten(&p.dist, weight * p.weight, &format!("{pk}.dist"), out)?;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid(&format!("{key}.parts"), format!("weights sum to {total}")));
        }
        return Ok(());
    }
    out.push((weight, Family::from_spec(spec, key)?));
    Ok(())
}

impl TypeDistribution {
    pub fn new(spec: DistSpec) -> Result<Self, DistError> {
        let mut parts = Vec::new();
        flatten(&spec, 1.0, "dist", &mut parts)?;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for (w, f) in &parts {
            if let Family::Atom { at } = f {
                match atoms.iter_mut().find(|(a, _)| a == at) {
                    Some(e) => e.1 += w,
                    None => atoms.push((*at, *w)),
                }
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let low = parts.iter().map(|(_, f)| f.low()).fold(f64::INFINITY, f64::min);
        let high = parts.iter().map(|(_, f)| f.high()).fold(f64::NEG_INFINITY, f64::max);
        let grid_high = parts
            .iter()
            .map(|(_, f)| {
                if f.high().is_finite() {
                    f.high()
                } else {
                    f.quantile(TAIL_QUANTILE)
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            spec,
            parts,
            atoms,
            low,
            high,
            grid_high,
        })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self, DistError> {
        Self::new(DistSpec::Uniform { low, high })
    }

    pub fn exponential(rate: f64) -> Result<Self, DistError> {
        Self::new(DistSpec::Exponential { rate })
    }

    pub fn truncated_normal(mu: f64, sigma: f64, low: f64) -> Result<Self, DistError> {
        Self::new(DistSpec::TruncatedNormal { mu, sigma, low })
    }

    pub fn piecewise(segments: Vec<Segment>) -> Result<Self, DistError> {
        Self::new(DistSpec::Piecewise { segments })
    }

    pub fn atom(at: f64) -> Result<Self, DistError> {
        Self::new(DistSpec::Atom { at })
    }

    pub fn mixture(parts: Vec<(f64, DistSpec)>) -> Result<Self, DistError> {
        Self::new(DistSpec::Mixture {
            parts: parts.into_iter().map(|(weight, dist)| Part { weight, dist }).collect(),
        })
    }

    /// `(1-eps)` point mass at 1 plus `eps` uniform on `[0, 2]`.
    pub fn smoothed_unit(eps: f64) -> Result<Self, DistError> {
        if eps == 1.0 {
            return Self::uniform(0.0, 2.0);
        }
        Self::mixture(vec![
            (1.0 - eps, DistSpec::Atom { at: 1.0 }),
            (eps, DistSpec::Uniform { low: 0.0, high: 2.0 }),
        ])
    }

    pub fn spec(&self) -> &DistSpec {
        &self.spec
    }

    pub fn parts(&self) -> &[(f64, Family)] {
        &self.parts
    }

    /// `(c_low, c_high)`; `c_high` may be infinite.
    pub fn support(&self) -> (f64, f64) {
        (self.low, self.high)
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    /// Upper end used for grids and quadrature: `c_high` when finite,
    /// otherwise the tail quantile of the unbounded parts.
    pub fn grid_high(&self) -> f64 {
        self.grid_high
    }

    /// Point masses as `(location, mass)`, sorted by location.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    pub fn continuous_weight(&self) -> f64 {
        self.parts.iter().filter(|(_, f)| !f.is_atom()).map(|(w, _)| w).sum()
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, c: f64) -> f64 {
        let v: f64 = self.parts.iter().map(|(w, f)| w * f.cdf(c)).sum();
        v.clamp(0.0, 1.0)
    }

    /// `P(C < c)`.
    pub fn cdf_left(&self, c: f64) -> f64 {
        let v: f64 = self.parts.iter().map(|(w, f)| w * f.cdf_left(c)).sum();
        v.clamp(0.0, 1.0)
    }

    /// CDF at a cost held in another scalar type. Atoms are compared in
    /// that type so that a cost a hair below an atom does not pick it up.
    pub fn cdf_at<T: Real>(&self, c: T) -> f64 {
        let x = c.as_f64();
        let mut v = 0.0;
        for (w, f) in &self.parts {
            v += match f {
                Family::Atom { at } => {
                    if c >= T::of(*at) {
                        *w
                    } else {
                        0.0
                    }
                }
                _ => w * f.cdf(x),
            };
        }
        v.clamp(0.0, 1.0)
    }

    /// CDF of the continuous part only, not renormalised.
    pub fn continuous_cdf(&self, c: f64) -> f64 {
        self.parts
            .iter()
            .filter(|(_, f)| !f.is_atom())
            .map(|(w, f)| w * f.cdf(c))
            .sum()
    }

    /// Density of the continuous part, right-continuous.
    pub fn pdf(&self, c: f64) -> f64 {
        self.parts.iter().map(|(w, f)| w * f.pdf(c)).sum()
    }

    /// Left limit of the density.
    pub fn pdf_left(&self, c: f64) -> f64 {
        self.parts.iter().map(|(w, f)| w * f.pdf_left(c)).sum()
    }

    /// `∫_a^b c g(c) dc` over the continuous part.
    pub fn partial_mean(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.parts.iter().map(|(w, f)| w * f.partial_mean(a, b)).sum()
    }

    /// Continuous mass on `[a, b]`.
    pub fn continuous_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.continuous_cdf(b) - self.continuous_cdf(a)
    }

    /// Costs where some density changes formula, inside the grid range.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .parts
            .iter()
            .flat_map(|(_, f)| f.kinks())
            .filter(|x| *x >= self.low && *x <= self.grid_high)
            .collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// Generalised inverse `inf{c : G(c) >= q}`; `c_low` at `q = 0`.
    pub fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return self.low;
        }
        if q >= 1.0 && !self.high.is_finite() {
            return self.high;
        }
        if self.parts.len() == 1 {
            return self.parts[0].1.quantile(q.min(1.0));
        }
        let mut hi = self.grid_high;
        while self.cdf(hi) < q {
            if hi >= self.high {
                return self.high;
            }
            hi = (hi * 2.0 + 1.0).min(self.high);
        }
        let mut lo = self.low;
        if self.cdf(lo) >= q {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn density_for_virtual(&self, c: f64) -> f64 {
        let g = self.pdf(c);
        if g > 0.0 {
            g
        } else {
            self.pdf_left(c)
        }
    }

    /// `φ(c) = c + G(c)/g(c)` with the right-continuous density.
    pub fn virtual_cost(&self, c: f64) -> Result<f64, DistError> {
        if self.has_atoms() {
            return Err(DistError::AtomPresent);
        }
        let g = self.density_for_virtual(c);
        if !(g > 0.0) {
            return Err(DistError::ZeroDensity(c));
        }
        Ok(c + self.cdf(c) / g)
    }

    /// Virtual cost using the density's left limit at `c`.
    pub fn virtual_cost_left(&self, c: f64) -> Result<f64, DistError> {
        if self.has_atoms() {
            return Err(DistError::AtomPresent);
        }
        let mut g = self.pdf_left(c);
        if !(g > 0.0) {
            g = self.pdf(c);
        }
        if !(g > 0.0) {
            return Err(DistError::ZeroDensity(c));
        }
        Ok(c + self.cdf(c) / g)
    }

    /// Reverse hazard rate `g(c)/G(c)`.
    pub fn rhr(&self, c: f64) -> Result<f64, DistError> {
        let big_g = self.cdf(c);
        if big_g < CDF_FLOOR {
            return Err(DistError::ZeroCdf(c));
        }
        Ok(self.density_for_virtual(c) / big_g)
    }

    /// Whether the continuous density never increases on `[c_low, ∞)`.
    pub fn density_nonincreasing(&self) -> bool {
        if self.has_atoms() {
            return false;
        }
        if self.parts.len() == 1 {
            return self.parts[0].1.density_nonincreasing();
        }
        let lo = self.low;
        let hi = self.grid_high;
        let mut pts = self.kinks();
        let n = 4096;
        pts.extend((0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64));
        pts.sort_by(f64::total_cmp);
        let mut prev: Option<f64> = None;
        for c in pts {
            let left = if c > lo { self.pdf_left(c) } else { self.pdf(c) };
            for g in [left, self.pdf(c)] {
                if prev.is_some_and(|p| g > p * (1.0 + 1e-12) + 1e-300) {
                    return false;
                }
                prev = Some(g);
            }
        }
        true
    }

    /// Builds the ironed virtual cost on `grid_size` cells.
    pub fn iron(&self, grid_size: usize) -> Result<IronedVirtualCost, DistError> {
        IronedVirtualCost::build(self, grid_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn appx_piecewise() -> TypeDistribution {
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
    fn uniform_midpoint() {
        assert_eq!(TypeDistribution::uniform(0.0, 1.0).unwrap().cdf(0.5), 0.5);
    }

    #[test]
    fn smoothed_mixture_cdf_counts_atom() {
        let d = TypeDistribution::smoothed_unit(0.5).unwrap();
        assert_relative_eq!(d.cdf(1.0), 0.75, epsilon = 1e-15);
        assert_relative_eq!(d.cdf_left(1.0), 0.25, epsilon = 1e-15);
        assert_eq!(d.support(), (0.0, 2.0));
    }

    #[test]
    fn piecewise_cdf_at_first_kink() {
        assert_relative_eq!(appx_piecewise().cdf(1.0), 20.0 / 23.0, epsilon = 1e-15);
    }

    #[test]
    fn piecewise_virtual_cost_segments() {
        let d = appx_piecewise();
        assert_relative_eq!(d.virtual_cost(2.0).unwrap(), 43.0, epsilon = 1e-9);
        assert_relative_eq!(d.virtual_cost(0.5).unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(d.virtual_cost(6.0).unwrap(), 94.0, epsilon = 1e-9);
        // right-continuous at the kink
        assert_relative_eq!(d.virtual_cost(1.0).unwrap(), 41.0, epsilon = 1e-9);
        assert_relative_eq!(d.virtual_cost_left(1.0).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn uniform_virtual_cost_is_doubling() {
        let d = TypeDistribution::uniform(0.0, 3.0).unwrap();
        for c in [0.0, 0.3, 1.7, 3.0] {
            assert_relative_eq!(d.virtual_cost(c).unwrap(), 2.0 * c, epsilon = 1e-12);
        }
    }

    #[test]
    fn exponential_virtual_cost_at_zero() {
        assert_eq!(
            TypeDistribution::exponential(1.0).unwrap().virtual_cost(0.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn atoms_disable_virtual_cost() {
        let d = TypeDistribution::smoothed_unit(0.2).unwrap();
        assert_eq!(d.virtual_cost(0.5), Err(DistError::AtomPresent));
        assert!(matches!(d.iron(4096), Err(DistError::AtomPresent)));
    }

    #[test]
    fn quantiles() {
        assert_relative_eq!(TypeDistribution::uniform(1.0, 5.0).unwrap().quantile(0.25), 2.0);
        assert_eq!(TypeDistribution::exponential(2.0).unwrap().quantile(0.0), 0.0);
        let d = TypeDistribution::smoothed_unit(0.5).unwrap();
        // G jumps from 0.25 to 0.75 at the atom: the whole plateau maps to 1.
        assert_relative_eq!(d.quantile(0.5), 1.0, epsilon = 1e-12);
        assert_relative_eq!(d.quantile(0.75), 1.0, epsilon = 1e-12);
        assert_relative_eq!(d.quantile(0.875), 1.5, epsilon = 1e-9);
    }

    #[test]
    fn reverse_hazard_rate() {
        let u = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert_relative_eq!(u.rhr(0.5).unwrap(), 2.0);
        assert!(matches!(u.rhr(1e-14), Err(DistError::ZeroCdf(_))));
        let e = TypeDistribution::exponential(1.0).unwrap();
        let want = (-1.0f64).exp() / (1.0 - (-1.0f64).exp());
        assert_relative_eq!(e.rhr(1.0).unwrap(), want, epsilon = 1e-12);
        assert_relative_eq!(want, 0.58198, epsilon = 1e-5);
    }

    #[test]
    fn file_format_round_trip() {
        let text = r#"{"kind":"mixture","parts":[
            {"weight":0.25,"dist":{"kind":"atom","at":1.0}},
            {"weight":0.75,"dist":{"kind":"truncated_normal","mu":1.0,"sigma":2.0,"low":0.0}}]}"#;
        let spec: DistSpec = serde_json::from_str(text).unwrap();
        let d = TypeDistribution::new(spec.clone()).unwrap();
        assert_eq!(d.atoms(), &[(1.0, 0.25)]);
        let back: DistSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn bad_weights_name_the_key() {
        let err = TypeDistribution::mixture(vec![
            (0.5, DistSpec::Atom { at: 1.0 }),
            (0.4, DistSpec::Uniform { low: 0.0, high: 1.0 }),
        ])
        .unwrap_err();
        assert_eq!(err.to_string(), "dist.parts: weights sum to 0.9");
    }

    #[test]
    fn nonincreasing_density_detection() {
        assert!(TypeDistribution::exponential(1.0).unwrap().density_nonincreasing());
        assert!(TypeDistribution::uniform(1.0, 2.0).unwrap().density_nonincreasing());
        assert!(appx_piecewise().density_nonincreasing());
        assert!(!TypeDistribution::truncated_normal(1.0, 1.0, 0.0)
            .unwrap()
            .density_nonincreasing());
        assert!(TypeDistribution::truncated_normal(0.0, 1.0, 0.5)
            .unwrap()
            .density_nonincreasing());
    }
}
