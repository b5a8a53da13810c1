use statrs::function::erf::{erfc, erfc_inv};

use super::{invalid, DistError, DistSpec, Segment, MASS_TOL};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Upper tail of the standard normal.
fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

fn std_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// One closed-form mixture component.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Uniform {
        low: f64,
        high: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Normal(mu, sigma) conditioned on `c >= low`; `mass` is the
    /// untruncated probability of that event.
    TruncatedNormal {
        mu: f64,
        sigma: f64,
        low: f64,
        mass: f64,
    },
    /// Segments sorted, with `cum[k]` the mass below segment `k`.
    Piecewise {
        segments: Vec<Segment>,
        cum: Vec<f64>,
    },
    Atom {
        at: f64,
    },
}

fn finite(key: &str, name: &str, x: f64) -> Result<(), DistError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(&format!("{key}.{name}"), "must be a finite number"))
    }
}

impl Family {
    pub(super) fn from_spec(spec: &DistSpec, key: &str) -> Result<Self, DistError> {
        match *spec {
            DistSpec::Uniform { low, high } => {
                finite(key, "low", low)?;
                finite(key, "high", high)?;
                if low < 0.0 {
                    return Err(invalid(&format!("{key}.low"), "costs must be non-negative"));
                }
                if high <= low {
                    return Err(invalid(&format!("{key}.high"), "high must exceed low"));
                }
                Ok(Family::Uniform { low, high })
            }
            DistSpec::Exponential { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(invalid(&format!("{key}.rate"), "rate must be positive"));
                }
                Ok(Family::Exponential { rate })
            }
            DistSpec::TruncatedNormal { mu, sigma, low } => {
                finite(key, "mu", mu)?;
                finite(key, "low", low)?;
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(invalid(&format!("{key}.sigma"), "sigma must be positive"));
                }
                if low < 0.0 {
                    return Err(invalid(&format!("{key}.low"), "costs must be non-negative"));
                }
                let mass = upper_tail((low - mu) / sigma);
                if !(mass > 1e-300) {
                    return Err(invalid(&format!("{key}.low"), "truncation leaves no mass"));
                }
                Ok(Family::TruncatedNormal { mu, sigma, low, mass })
            }
            DistSpec::Piecewise { ref segments } => {
                let key = format!("{key}.segments");
                if segments.is_empty() {
                    return Err(invalid(&key, "no segments"));
                }
                let mut cum = Vec::with_capacity(segments.len());
                let mut total = 0.0;
                for (k, s) in segments.iter().enumerate() {
                    let sk = format!("{key}[{k}]");
                    finite(&sk, "from", s.from)?;
                    finite(&sk, "to", s.to)?;
                    finite(&sk, "density", s.density)?;
                    if s.from < 0.0 {
                        return Err(invalid(&format!("{sk}.from"), "costs must be non-negative"));
                    }
                    if s.to <= s.from {
                        return Err(invalid(&format!("{sk}.to"), "to must exceed from"));
                    }
                    if s.density < 0.0 {
                        return Err(invalid(&format!("{sk}.density"), "density must be non-negative"));
                    }
                    if k > 0 && s.from < segments[k - 1].to {
                        return Err(invalid(&format!("{sk}.from"), "segments overlap or are unsorted"));
                    }
                    cum.push(total);
                    total += s.density * (s.to - s.from);
                }
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(invalid(&key, format!("total mass is {total}")));
                }
                Ok(Family::Piecewise {
                    segments: segments.clone(),
                    cum,
                })
            }
            DistSpec::Atom { at } => {
                finite(key, "at", at)?;
                if at < 0.0 {
                    return Err(invalid(&format!("{key}.at"), "costs must be non-negative"));
                }
                Ok(Family::Atom { at })
            }
            DistSpec::Mixture { .. } => unreachable!("mixtures are flattened by the caller"),
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Family::Atom { .. })
    }

    pub fn low(&self) -> f64 {
        match self {
            Family::Uniform { low, .. } => *low,
            Family::Exponential { .. } => 0.0,
            Family::TruncatedNormal { low, .. } => *low,
            Family::Piecewise { segments, .. } => segments[0].from,
            Family::Atom { at } => *at,
        }
    }

    pub fn high(&self) -> f64 {
        match self {
            Family::Uniform { high, .. } => *high,
            Family::Exponential { .. } | Family::TruncatedNormal { .. } => f64::INFINITY,
            Family::Piecewise { segments, .. } => segments[segments.len() - 1].to,
            Family::Atom { at } => *at,
        }
    }

    pub fn cdf(&self, c: f64) -> f64 {
        match self {
            Family::Uniform { low, high } => ((c - low) / (high - low)).clamp(0.0, 1.0),
            Family::Exponential { rate } => {
                if c <= 0.0 {
                    0.0
                } else {
                    -(-rate * c).exp_m1()
                }
            }
            Family::TruncatedNormal { mu, sigma, low, mass } => {
                if c <= *low {
                    0.0
                } else {
                    (1.0 - upper_tail((c - mu) / sigma) / mass).clamp(0.0, 1.0)
                }
            }
            Family::Piecewise { segments, cum } => {
                if c <= segments[0].from {
                    return 0.0;
                }
                let k = segments.partition_point(|s| s.from <= c) - 1;
                let s = segments[k];
                (cum[k] + s.density * (c.min(s.to) - s.from)).min(1.0)
            }
            Family::Atom { at } => {
                if c >= *at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf_left(&self, c: f64) -> f64 {
        match self {
            Family::Atom { at } => {
                if c > *at {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(c),
        }
    }

    pub fn pdf(&self, c: f64) -> f64 {
        match self {
            Family::Uniform { low, high } => {
                if c >= *low && c <= *high {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
            Family::Exponential { rate } => {
                if c >= 0.0 {
                    rate * (-rate * c).exp()
                } else {
                    0.0
                }
            }
            Family::TruncatedNormal { mu, sigma, low, mass } => {
                if c >= *low {
                    std_pdf((c - mu) / sigma) / (sigma * mass)
                } else {
                    0.0
                }
            }
            Family::Piecewise { segments, .. } => {
                let last = segments[segments.len() - 1];
                if c == last.to {
                    return last.density;
                }
                if c < segments[0].from || c > last.to {
                    return 0.0;
                }
                let k = segments.partition_point(|s| s.from <= c) - 1;
                if c < segments[k].to {
                    segments[k].density
                } else {
                    0.0
                }
            }
            Family::Atom { .. } => 0.0,
        }
    }

    pub fn pdf_left(&self, c: f64) -> f64 {
        match self {
            Family::Uniform { low, .. } if c <= *low => 0.0,
            Family::Exponential { .. } if c <= 0.0 => 0.0,
            Family::TruncatedNormal { low, .. } if c <= *low => 0.0,
            Family::Piecewise { segments, .. } => {
                if c <= segments[0].from || c > segments[segments.len() - 1].to {
                    return 0.0;
                }
                let k = segments.partition_point(|s| s.from < c) - 1;
                if c <= segments[k].to {
                    segments[k].density
                } else {
                    0.0
                }
            }
            _ => self.pdf(c),
        }
    }

    /// `∫_a^b c g(c) dc`, exact for every family.
    pub fn partial_mean(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(self.low()), b.min(self.high()));
        if b <= a {
            return 0.0;
        }
        match self {
            Family::Uniform { low, high } => (b - a) * (b + a) / (2.0 * (high - low)),
            Family::Exponential { rate } => {
                let term = |x: f64| {
                    if x.is_infinite() {
                        0.0
                    } else {
                        (x + 1.0 / rate) * (-rate * x).exp()
                    }
                };
                term(a) - term(b)
            }
            Family::TruncatedNormal { mu, sigma, mass, .. } => {
                let pa = std_pdf((a - mu) / sigma);
                let pb = if b.is_infinite() {
                    0.0
                } else {
                    std_pdf((b - mu) / sigma)
                };
                mu * (self.cdf(b) - self.cdf(a)) + sigma * (pa - pb) / mass
            }
            Family::Piecewise { segments, .. } => segments
                .iter()
                .map(|s| {
                    let (x, y) = (a.max(s.from), b.min(s.to));
                    if y > x {
                        s.density * (y - x) * (y + x) / 2.0
                    } else {
                        0.0
                    }
                })
                .sum(),
            Family::Atom { .. } => 0.0,
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Family::Uniform { low, high } => low + q * (high - low),
            Family::Exponential { rate } => -(-q).ln_1p() / rate,
            Family::TruncatedNormal { mu, sigma, low, mass } => {
                if q <= 0.0 {
                    return *low;
                }
                if q >= 1.0 {
                    return f64::INFINITY;
                }
                let tail = (1.0 - q) * mass;
                let mut x = SQRT_2 * erfc_inv(2.0 * tail);
                for _ in 0..3 {
                    let f = upper_tail(x) - tail;
                    let d = std_pdf(x);
                    if d > 0.0 {
                        x += f / d;
                    }
                }
                (mu + sigma * x).max(*low)
            }
            Family::Piecewise { segments, cum } => {
                if q <= 0.0 {
                    return segments[0].from;
                }
                for (k, s) in segments.iter().enumerate() {
                    let top = cum[k] + s.density * (s.to - s.from);
                    if q <= top && s.density > 0.0 {
                        return (s.from + (q - cum[k]) / s.density).clamp(s.from, s.to);
                    }
                }
                segments[segments.len() - 1].to
            }
            Family::Atom { at } => *at,
        }
    }

    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Family::Uniform { low, high } => vec![*low, *high],
            Family::Exponential { .. } => vec![0.0],
            Family::TruncatedNormal { low, .. } => vec![*low],
            Family::Piecewise { segments, .. } => segments.iter().flat_map(|s| [s.from, s.to]).collect(),
            Family::Atom { .. } => vec![],
        }
    }

    pub fn density_nonincreasing(&self) -> bool {
        match self {
            Family::Uniform { .. } | Family::Exponential { .. } => true,
            Family::TruncatedNormal { mu, low, .. } => mu <= low,
            Family::Piecewise { segments, .. } => segments
                .windows(2)
                .all(|w| w[1].density <= w[0].density && w[1].from == w[0].to),
            Family::Atom { .. } => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn truncated_normal_quantile_inverts_cdf() {
        let f = Family::from_spec(
            &DistSpec::TruncatedNormal {
                mu: 1.0,
                sigma: 2.0,
                low: 0.0,
            },
            "d",
        )
        .unwrap();
        for q in [1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-9] {
            assert_relative_eq!(f.cdf(f.quantile(q)), q, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_means_match_simpson() {
        let fams = [
            DistSpec::Exponential { rate: 0.7 },
            DistSpec::TruncatedNormal {
                mu: 2.0,
                sigma: 1.5,
                low: 0.5,
            },
            DistSpec::Uniform { low: 1.0, high: 3.0 },
        ];
        for spec in fams {
            let f = Family::from_spec(&spec, "d").unwrap();
            let (a, b) = (1.2, 2.9);
            let n = 20_000;
            let h = (b - a) / n as f64;
            let mut s = 0.0;
            for k in 0..n {
                let x0 = a + k as f64 * h;
                let g = |x: f64| x * f.pdf(x);
                s += h / 6.0 * (g(x0) + 4.0 * g(x0 + h / 2.0) + g(x0 + h));
            }
            assert_relative_eq!(f.partial_mean(a, b), s, max_relative = 1e-9);
        }
    }

    #[test]
    fn piecewise_density_is_right_continuous() {
        let f = Family::from_spec(
            &DistSpec::Piecewise {
                segments: vec![
                    Segment {
                        from: 0.0,
                        to: 1.0,
                        density: 0.5,
                    },
                    Segment {
                        from: 1.0,
                        to: 2.0,
                        density: 0.5,
                    },
                ],
            },
            "d",
        )
        .unwrap();
        assert_eq!(f.pdf(1.0), 0.5);
        assert_eq!(f.pdf(2.0), 0.5);
        assert_eq!(f.pdf_left(0.0), 0.0);
        assert_eq!(f.quantile(0.5), 1.0);
    }
}
