//! Discretized curves in parameter space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Coord, ParamPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathShape {
    /// One coordinate swept linearly from `from` to `to`.
    Coordinate { coord: Coord, from: f64, to: f64 },
    /// Straight segments between the vertices in coordinate space.
    Polyline { vertices: Vec<ParamPoint> },
    /// Great-circle arcs between `(θ, φ)` vertices on the unit sphere.
    SphericalPolygon { vertices: Vec<(f64, f64)> },
}

/// A curve in parameter space. `base` supplies every coordinate the shape
/// does not move.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopPath {
    pub base: ParamPoint,
    pub shape: PathShape,
    pub closed: bool,
}

impl LoopPath {
    /// The loop `C_x`: `coord` increased by 2π from its value in `base`.
    pub fn coordinate_loop(base: ParamPoint, coord: Coord) -> Result<Self> {
        let from = base.require(coord)?;
        Ok(Self {
            base,
            shape: PathShape::Coordinate {
                coord,
                from,
                to: from + std::f64::consts::TAU,
            },
            closed: true,
        })
    }

    pub fn coordinate_segment(base: ParamPoint, coord: Coord, from: f64, to: f64) -> Self {
        Self {
            base,
            shape: PathShape::Coordinate { coord, from, to },
            closed: false,
        }
    }

    pub fn polyline(base: ParamPoint, vertices: Vec<ParamPoint>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Domain("a polyline needs at least two vertices".into()));
        }
        Ok(Self {
            base,
            shape: PathShape::Polyline { vertices },
            closed,
        })
    }

    /// Closed geodesic polygon through `(θ, φ)` vertices.
    pub fn spherical_polygon(base: ParamPoint, vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Domain("a spherical polygon needs at least three vertices".into()));
        }
        Ok(Self {
            base,
            shape: PathShape::SphericalPolygon { vertices },
            closed: true,
        })
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let shape = match &self.shape {
            PathShape::Coordinate { coord, from, to } => PathShape::Coordinate {
                coord: *coord,
                from: *to,
                to: *from,
            },
            PathShape::Polyline { vertices } => {
                let mut v = vertices.clone();
                if self.closed {
                    v[1..].reverse();
                } else {
                    v.reverse();
                }
                PathShape::Polyline { vertices: v }
            }
            PathShape::SphericalPolygon { vertices } => {
                let mut v = vertices.clone();
                v[1..].reverse();
                PathShape::SphericalPolygon { vertices: v }
            }
        };
        let base = match (&self.shape, &shape) {
            (PathShape::Coordinate { coord, .. }, PathShape::Coordinate { from, .. }) => {
                self.base.with(*coord, *from)
            }
            _ => self.base,
        };
        Self {
            base,
            shape,
            closed: self.closed,
        }
    }

    /// The coordinate a coordinate loop moves.
    pub fn direction(&self) -> Option<Coord> {
        match self.shape {
            PathShape::Coordinate { coord, .. } => Some(coord),
            _ => None,
        }
    }

    /// Range of the curve parameter `s`. Coordinate paths use the coordinate
    /// itself, other shapes the unit interval.
    pub fn param_range(&self) -> (f64, f64) {
        match self.shape {
            PathShape::Coordinate { from, to, .. } => (from, to),
            _ => (0.0, 1.0),
        }
    }

    pub fn start(&self) -> ParamPoint {
        self.point_at(0.0)
    }

    fn cumulative(lengths: &[f64]) -> Vec<f64> {
        let total: f64 = lengths.iter().sum();
        let mut acc = vec![0.0];
        let mut run = 0.0;
        for l in lengths {
            run += l;
            acc.push(if total > 0.0 { run / total } else { acc.len() as f64 / lengths.len() as f64 });
        }
        acc
    }

    fn locate(knots: &[f64], t: f64) -> (usize, f64) {
        let segs = knots.len() - 1;
        let mut k = 0;
        while k + 1 < segs && t > knots[k + 1] {
            k += 1;
        }
        let width = knots[k + 1] - knots[k];
        let u = if width > 0.0 { (t - knots[k]) / width } else { 0.0 };
        (k, u)
    }

    fn polyline_vertices(&self, vertices: &[ParamPoint]) -> Vec<ParamPoint> {
        let mut v: Vec<ParamPoint> = vertices.iter().map(|p| overlay(&self.base, p)).collect();
        if self.closed {
            v.push(v[0]);
        }
        v
    }

    /// The point at fraction `t ∈ [0, 1]` of the curve, uniform in arc length.
    /// Outside the unit interval closed curves repeat with the net coordinate
    /// shift of one traversal; open curves extrapolate their end segments.
    pub fn point_at(&self, t: f64) -> ParamPoint {
        match &self.shape {
            PathShape::Coordinate { coord, from, to } => self.base.with(*coord, from + t * (to - from)),
            PathShape::Polyline { vertices } => {
                let v = self.polyline_vertices(vertices);
                if self.closed && !(0.0..=1.0).contains(&t) {
                    return self.periodic(t);
                }
                let lengths: Vec<f64> = v.windows(2).map(|w| coordinate_distance(&w[0], &w[1])).collect();
                let knots = Self::cumulative(&lengths);
                let (k, u) = Self::locate(&knots, t.clamp(0.0, 1.0));
                let u = if t < 0.0 {
                    t / knots[1].max(f64::EPSILON)
                } else if t > 1.0 {
                    1.0 + (t - 1.0) / (1.0 - knots[knots.len() - 2]).max(f64::EPSILON)
                } else {
                    u
                };
                v[k].lerp(&v[k + 1], u)
            }
            PathShape::SphericalPolygon { vertices } => {
                if !(0.0..=1.0).contains(&t) {
                    return self.periodic(t);
                }
                let mut v: Vec<[f64; 3]> = vertices.iter().map(|&(th, ph)| unit(th, ph)).collect();
                v.push(v[0]);
                let lengths: Vec<f64> = v.windows(2).map(|w| arc(&w[0], &w[1])).collect();
                let knots = Self::cumulative(&lengths);
                let (k, u) = Self::locate(&knots, t);
                let x = slerp(&v[k], &v[k + 1], u);
                let theta = x[0].hypot(x[1]).atan2(x[2]);
                let phi = x[1].atan2(x[0]);
                self.base.with(Coord::Theta, theta).with(Coord::Phi, phi)
            }
        }
    }

    fn periodic(&self, t: f64) -> ParamPoint {
        let turns = t.floor();
        let inside = self.point_at(t - turns);
        let shift = self.point_at(1.0).difference(&self.point_at(0.0));
        inside.offset(&shift, turns)
    }

    /// Samples at `t_k = k/n` for `k = −1 ..= n + 1`; the two outer points let
    /// central differences reach both ends. Azimuths of spherical polygons are
    /// unwrapped along the sequence.
    pub fn sample_points(&self, n: usize) -> Vec<ParamPoint> {
        let n = n.max(1);
        let mut pts: Vec<ParamPoint> = (0..=n).map(|k| self.point_at(k as f64 / n as f64)).collect();
        if matches!(self.shape, PathShape::SphericalPolygon { .. }) {
            let mut prev = pts[0].get_or(Coord::Phi, 0.0);
            for p in pts.iter_mut().skip(1) {
                let raw = p.get_or(Coord::Phi, 0.0);
                let next = prev + crate::matcore::wrap_phase(raw - prev);
                p.set(Coord::Phi, next);
                prev = next;
            }
        }
        let (before, after) = if self.closed {
            let shift = pts[n].difference(&pts[0]);
            (pts[n - 1].offset(&shift, -1.0), pts[1].offset(&shift, 1.0))
        } else {
            (self.point_at(-1.0 / n as f64), self.point_at(1.0 + 1.0 / n as f64))
        };
        let mut out = Vec::with_capacity(n + 3);
        out.push(before);
        out.extend(pts);
        out.push(after);
        out
    }

    /// Curve-parameter values `s_k` for `k = 0 ..= n`.
    pub fn sample_params(&self, n: usize) -> Vec<f64> {
        let (s0, s1) = self.param_range();
        (0..=n).map(|k| s0 + (s1 - s0) * k as f64 / n as f64).collect()
    }
}

fn overlay(base: &ParamPoint, p: &ParamPoint) -> ParamPoint {
    p.coords().fold(*base, |acc, (c, v)| acc.with(c, v))
}

fn coordinate_distance(a: &ParamPoint, b: &ParamPoint) -> f64 {
    a.difference(b)
        .coords()
        .map(|(_, d)| d * d)
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn arc(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let c = cross(a, b);
    dot(&c, &c).sqrt().atan2(dot(a, b))
}

fn slerp(a: &[f64; 3], b: &[f64; 3], u: f64) -> [f64; 3] {
    let omega = arc(a, b);
    if omega < 1e-12 {
        return *a;
    }
    let (wa, wb) = (((1.0 - u) * omega).sin() / omega.sin(), (u * omega).sin() / omega.sin());
    [
        wa * a[0] + wb * b[0],
        wa * a[1] + wb * b[1],
        wa * a[2] + wb * b[2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn coordinate_loop_extends_periodically() {
        let base = ParamPoint::new().with(Coord::Lambda, 0.5).with(Coord::Mu, 1.0);
        let path = LoopPath::coordinate_loop(base, Coord::Lambda).unwrap();
        let pts = path.sample_points(4);
        assert_eq!(pts.len(), 7);
        assert!((pts[0].get(Coord::Lambda).unwrap() - (0.5 - TAU / 4.0)).abs() < 1e-12);
        assert!((pts[5].get(Coord::Lambda).unwrap() - (0.5 + TAU)).abs() < 1e-12);
        assert_eq!(pts[3].get(Coord::Mu), Some(1.0));
    }

    #[test]
    fn polygon_passes_through_vertices_with_continuous_azimuth() {
        let verts = vec![(0.5, 0.0), (0.5, 2.0), (0.5, 4.0)];
        let path = LoopPath::spherical_polygon(ParamPoint::new().with(Coord::B, 1.0), verts).unwrap();
        let pts = path.sample_points(300);
        let phis: Vec<f64> = pts.iter().map(|p| p.get(Coord::Phi).unwrap()).collect();
        for w in phis.windows(2) {
            assert!((w[1] - w[0]).abs() < 0.1);
        }
        // the polygon winds once around the pole
        assert!((phis[301] - phis[1] - TAU).abs() < 1e-9);
        assert!((pts[1].get(Coord::Theta).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reversed_coordinate_loop_runs_backwards() {
        let base = ParamPoint::new().with(Coord::Theta, 0.0);
        let path = LoopPath::coordinate_loop(base, Coord::Theta).unwrap().reversed();
        assert_eq!(path.param_range(), (TAU, 0.0));
        assert!((path.point_at(0.5).get(Coord::Theta).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn polyline_is_uniform_in_length() {
        let a = ParamPoint::new().with(Coord::Mu, 0.0).with(Coord::Lambda, 0.0);
        let b = ParamPoint::new().with(Coord::Mu, 3.0).with(Coord::Lambda, 0.0);
        let c = ParamPoint::new().with(Coord::Mu, 3.0).with(Coord::Lambda, 1.0);
        let path = LoopPath::polyline(ParamPoint::new(), vec![a, b, c], false).unwrap();
        let mid = path.point_at(0.5);
        assert!((mid.get(Coord::Mu).unwrap() - 2.0).abs() < 1e-12);
    }
}
