//! Ironing in cost space.
//!
//! `Φ(c) = ∫ φ` is tabulated on a grid that has a node at every density
//! kink, its lower convex hull is taken, and each hull edge that skips grid
//! nodes becomes a flat piece of `φ̄`. The ends of every flat piece are then
//! moved to the exact tangency points, so `φ̄` is continuous wherever `φ`
//! is and equals the analytic `φ` outside the flat pieces.

use serde::Serialize;

use super::{DistError, TypeDistribution};

pub const DEFAULT_GRID: usize = 4096;
const MIN_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PieceKind {
    /// `φ̄ = φ`.
    Exact,
    /// `φ̄` is constant.
    Flat { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IronPiece {
    pub from: f64,
    pub to: f64,
    #[serde(flatten)]
    pub kind: PieceKind,
}

#[derive(Debug, Clone)]
pub struct IronedVirtualCost {
    dist: TypeDistribution,
    low: f64,
    high: f64,
    grid: Vec<f64>,
    big_phi: Vec<f64>,
    pieces: Vec<IronPiece>,
}

impl IronedVirtualCost {
    pub(super) fn build(dist: &TypeDistribution, grid_size: usize) -> Result<Self, DistError> {
        if dist.has_atoms() {
            return Err(DistError::AtomPresent);
        }
        if grid_size < MIN_GRID {
            return Err(DistError::GridTooSmall(grid_size));
        }
        let low = dist.low();
        let high = dist.grid_high();
        let mut breaks = vec![low];
        breaks.extend(dist.kinks().into_iter().filter(|k| *k > low && *k < high));
        breaks.push(high);

        let mut grid = Vec::with_capacity(grid_size + breaks.len() * 4);
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let cells = ((grid_size as f64) * (b - a) / (high - low)).round().max(4.0) as usize;
            grid.extend((0..cells).map(|k| a + (b - a) * k as f64 / cells as f64));
        }
        grid.push(high);

        let mut iv = Self {
            dist: dist.clone(),
            low,
            high,
            big_phi: vec![0.0; grid.len()],
            grid,
            pieces: Vec::new(),
        };
        for k in 0..iv.grid.len() - 1 {
            let (a, b) = (iv.grid[k], iv.grid[k + 1]);
            iv.big_phi[k + 1] = iv.big_phi[k] + iv.simpson(a, b)?;
        }
        iv.pieces = iv.hull_pieces()?;
        Ok(iv)
    }

    fn phi_right(&self, c: f64) -> Result<f64, DistError> {
        self.dist.virtual_cost(c)
    }

    fn phi_left(&self, c: f64) -> Result<f64, DistError> {
        self.dist.virtual_cost_left(c)
    }

    /// `∫_a^b φ` for `a, b` inside one grid cell.
    fn simpson(&self, a: f64, b: f64) -> Result<f64, DistError> {
        if b <= a {
            return Ok(0.0);
        }
        let m = 0.5 * (a + b);
        Ok((b - a) / 6.0 * (self.phi_right(a)? + 4.0 * self.phi_right(m)? + self.phi_left(b)?))
    }

    /// `Φ(c)` by Simpson on the partial cell.
    fn big_phi_at(&self, c: f64) -> f64 {
        let k = self
            .grid
            .partition_point(|x| *x <= c)
            .saturating_sub(1)
            .min(self.grid.len() - 1);
        self.big_phi[k] + self.simpson(self.grid[k], c).unwrap_or(0.0)
    }

    fn hull_pieces(&self) -> Result<Vec<IronPiece>, DistError> {
        let (x, y) = (&self.grid, &self.big_phi);
        let mut hull: Vec<usize> = Vec::new();
        for k in 0..x.len() {
            while hull.len() >= 2 {
                let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (x[a] - x[o]) * (y[k] - y[o]) - (y[a] - y[o]) * (x[k] - x[o]);
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(k);
        }

        let last = x.len() - 1;
        let mut flats: Vec<(f64, f64, f64)> = Vec::new();
        for e in hull.windows(2) {
            let (a, b) = (e[0], e[1]);
            if b == a + 1 {
                continue;
            }
            let floor = flats.last().map_or(self.low, |f| f.1);
            let wl = (x[a.saturating_sub(1)].max(floor), x[(a + 1).min(b - 1)]);
            let wr = (x[(b - 1).max(a + 1)], x[(b + 1).min(last)]);
            flats.push(self.tangent(wl, wr, (y[b] - y[a]) / (x[b] - x[a]))?);
        }

        let mut pieces = Vec::new();
        let mut at = self.low;
        for (p, q, s) in flats {
            if p > at {
                pieces.push(IronPiece {
                    from: at,
                    to: p,
                    kind: PieceKind::Exact,
                });
            }
            if q > p {
                pieces.push(IronPiece {
                    from: p,
                    to: q,
                    kind: PieceKind::Flat { value: s },
                });
            }
            at = at.max(q);
        }
        if self.high > at {
            pieces.push(IronPiece {
                from: at,
                to: self.high,
                kind: PieceKind::Exact,
            });
        }
        Ok(pieces)
    }

    /// Newton iteration on the flat value `s`: the ends are where `φ`
    /// crosses `s`, and `s` is the chord slope of `Φ` between them.
    fn tangent(&self, wl: (f64, f64), wr: (f64, f64), s0: f64) -> Result<(f64, f64, f64), DistError> {
        let mut s = s0;
        let (mut p, mut q) = (wl.0, wr.1);
        for _ in 0..40 {
            p = self.crossing(wl, s)?;
            q = self.crossing(wr, s)?;
            if q <= p {
                break;
            }
            let next = (self.big_phi_at(q) - self.big_phi_at(p)) / (q - p);
            let done = (next - s).abs() <= 1e-15 * s.abs().max(1.0);
            s = next;
            if done {
                break;
            }
        }
        Ok((p, q, s))
    }

    /// First point of `[a, b]` where `φ` reaches `s`, assuming `φ` rises
    /// there; the window ends when it does not cross.
    fn crossing(&self, (a, b): (f64, f64), s: f64) -> Result<f64, DistError> {
        if self.phi_right(a)? >= s {
            return Ok(a);
        }
        if self.phi_left(b)? <= s {
            return Ok(b);
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.phi_right(mid)? >= s {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    /// Top of the ironing range (the grid cut for unbounded supports).
    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn dist(&self) -> &TypeDistribution {
        &self.dist
    }

    pub fn pieces(&self) -> &[IronPiece] {
        &self.pieces
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `φ̄` at every grid node.
    pub fn values(&self) -> Vec<f64> {
        self.grid.iter().map(|c| self.value(*c)).collect()
    }

    fn piece_at(&self, c: f64) -> &IronPiece {
        let k = self.pieces.partition_point(|p| p.to <= c);
        &self.pieces[k.min(self.pieces.len() - 1)]
    }

    /// `φ̄(c)`, right-continuous, clamped to the support. Past the grid
    /// of an unbounded support `φ` itself is used.
    pub fn value(&self, c: f64) -> f64 {
        if c > self.high && c <= self.dist.high() {
            return self.phi_right(c).unwrap_or(c);
        }
        let c = c.clamp(self.low, self.high);
        match self.piece_at(c).kind {
            PieceKind::Flat { value } => value,
            PieceKind::Exact => {
                let v = if c >= self.high {
                    self.phi_left(c)
                } else {
                    self.phi_right(c)
                };
                v.unwrap_or(c)
            }
        }
    }

    /// `∫_{c_low}^c φ̄`.
    pub fn integral(&self, c: f64) -> f64 {
        let c = c.clamp(self.low, self.high);
        let mut total = 0.0;
        for p in &self.pieces {
            if p.from >= c {
                break;
            }
            let to = p.to.min(c);
            total += match p.kind {
                PieceKind::Flat { value } => value * (to - p.from),
                PieceKind::Exact => self.big_phi_at(to) - self.big_phi_at(p.from),
            };
        }
        total
    }

    /// `sup{c : φ̄(c) <= q}`, clamped to the support. On an unbounded
    /// support the search continues past the grid using `φ`.
    pub fn inverse(&self, q: f64) -> f64 {
        let c = self.inverse_on_grid(q);
        if c < self.high || !(self.dist.high() > self.high) {
            return c;
        }
        let phi = |x: f64| self.phi_right(x).unwrap_or(x);
        let (mut lo, mut hi) = (self.high, 2.0 * self.high + 1.0);
        while phi(hi) <= q {
            if !hi.is_finite() {
                return self.dist.high();
            }
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if phi(mid) <= q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn inverse_on_grid(&self, q: f64) -> f64 {
        for p in &self.pieces {
            match p.kind {
                PieceKind::Flat { value } => {
                    if value > q {
                        return p.from;
                    }
                }
                PieceKind::Exact => {
                    let top = self.phi_left(p.to).unwrap_or(f64::INFINITY);
                    if top <= q {
                        continue;
                    }
                    if self.phi_right(p.from).unwrap_or(p.from) > q {
                        return p.from;
                    }
                    let (mut lo, mut hi) = (p.from, p.to);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        if self.phi_right(mid).unwrap_or(mid) <= q {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    return hi;
                }
            }
        }
        self.high
    }
}

#[cfg(test)]
mod tests {
    use super::super::Segment;
    use super::*;
    use approx::assert_relative_eq;

    fn appx() -> TypeDistribution {
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

    /// Density 0.2 then 0.8: φ drops at the kink, so ironing kicks in.
    fn irregular() -> TypeDistribution {
        TypeDistribution::piecewise(vec![
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
        .unwrap()
    }

    #[test]
    fn regular_uniform_is_not_ironed() {
        let iv = TypeDistribution::uniform(0.0, 1.0).unwrap().iron(DEFAULT_GRID).unwrap();
        assert_eq!(iv.pieces().len(), 1);
        for k in 0..=1000 {
            let c = k as f64 / 1000.0;
            assert!((iv.value(c) - 2.0 * c).abs() < 1e-8);
        }
        assert_relative_eq!(iv.inverse(1.0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn jumps_in_three_piece_example() {
        let iv = appx().iron(DEFAULT_GRID).unwrap();
        assert!(iv.pieces().iter().all(|p| p.kind == PieceKind::Exact));
        assert_relative_eq!(iv.value(2.0), 43.0, epsilon = 1e-9);
        assert_relative_eq!(iv.inverse(50.0), 4.0, epsilon = 1e-9);
        assert_relative_eq!(iv.inverse(100.0), 9.0, epsilon = 1e-9);
        assert_relative_eq!(iv.inverse(40.0), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn inverse_clamps_outside_range() {
        let iv = TypeDistribution::uniform(1.0, 2.0).unwrap().iron(256).unwrap();
        assert_eq!(iv.inverse(0.5), 1.0);
        assert_eq!(iv.inverse(10.0), 2.0);
    }

    #[test]
    fn irregular_density_gets_a_flat_piece() {
        let iv = irregular().iron(DEFAULT_GRID).unwrap();
        let flats: Vec<_> = iv
            .pieces()
            .iter()
            .filter(|p| matches!(p.kind, PieceKind::Flat { .. }))
            .collect();
        assert_eq!(flats.len(), 1);
        // closed form: 2p = s, 2q - 0.75 = s, ∫_p^q φ = s (q - p)
        assert_relative_eq!(flats[0].from, 0.8125, epsilon = 1e-9);
        assert_relative_eq!(flats[0].to, 1.1875, epsilon = 1e-9);
        assert_eq!(flats[0].kind, PieceKind::Flat { value: iv.value(1.0) });
        assert_relative_eq!(iv.value(1.0), 1.625, epsilon = 1e-9);
        let vals = iv.values();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        for (c, v) in iv.grid().iter().zip(&vals) {
            assert!(*v >= *c - 1e-12);
        }
    }

    #[test]
    fn small_grid_rejected() {
        assert_eq!(
            TypeDistribution::uniform(0.0, 1.0).unwrap().iron(10).unwrap_err(),
            DistError::GridTooSmall(10)
        );
    }
}
