//! Exact feasible parameter sets in the plane.
//!
//! The set of parameters consistent with all data so far is a convex
//! polygon: inflate the previous one by the rate box, then clip by every
//! measurement's halfspaces (including `θ ≥ 0`). This is the reference the
//! zonotope estimators are checked against.

use nalgebra::{dvector, DVector};
use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::estimators::MeasurementRecord;
use crate::geometry::{Halfspace, Zonotope};

/// Vertices closer than this are fused.
pub const MERGE_TOL: f64 = 1e-12;

/// Convex polygon, counterclockwise. Zero vertices means empty; one or two
/// vertices describe a point or a segment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn close(a: [f64; 2], b: [f64; 2]) -> bool {
    let scale = 1f64.max(a[0].abs()).max(a[1].abs());
    (a[0] - b[0]).abs() <= MERGE_TOL * scale && (a[1] - b[1]).abs() <= MERGE_TOL * scale
}

fn dedupe(mut v: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    v.dedup_by(|b, a| close(*a, *b));
    while v.len() > 1 && close(v[0], *v.last().unwrap()) {
        v.pop();
    }
    v
}

impl Polygon {
    /// Takes vertices in counterclockwise order.
    pub fn new(vertices: Vec<[f64; 2]>) -> Self {
        Self {
            vertices: dedupe(vertices),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_box(lower: [f64; 2], upper: [f64; 2]) -> Self {
        Self::new(vec![
            [lower[0], lower[1]],
            [upper[0], lower[1]],
            [upper[0], upper[1]],
            [lower[0], upper[1]],
        ])
    }

    /// Exact vertex list of a planar zonotope.
    pub fn from_zonotope(z: &Zonotope) -> Result<Self, OracleError> {
        if z.dim() != 2 {
            return Err(OracleError::Dimension(z.dim()));
        }
        let mut gens: Vec<[f64; 2]> = z
            .generators()
            .column_iter()
            .map(|g| if g[1] < 0.0 || (g[1] == 0.0 && g[0] < 0.0) { [-g[0], -g[1]] } else { [g[0], g[1]] })
            .collect();
        gens.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
        let mut start = [z.center()[0], z.center()[1]];
        for g in &gens {
            start[0] -= g[0];
            start[1] -= g[1];
        }
        let mut out = vec![start];
        let mut cur = start;
        for sign in [2.0, -2.0] {
            for g in &gens {
                cur = [cur[0] + sign * g[0], cur[1] + sign * g[1]];
                out.push(cur);
            }
        }
        out.pop();
        Ok(Self::new(out).without_collinear())
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area; 0 for empty or degenerate polygons.
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            s += a[0] * b[1] - a[1] * b[0];
        }
        (0.5 * s).max(0.0)
    }

    pub fn is_convex(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        n < 3 || (0..n).all(|i| cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) >= -1e-12)
    }

    /// Whether `x` satisfies every edge inequality within `tol`.
    pub fn contains(&self, x: [f64; 2], tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => (x[0] - v[0][0]).hypot(x[1] - v[0][1]) <= tol,
            _ => {
                let n = v.len();
                (0..n).all(|i| {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    len == 0.0 || cross(a, b, x) / len >= -tol
                })
            }
        }
    }

    /// Intersection with `{x : aᵀx ≤ b}`.
    pub fn clip(&self, h: &Halfspace) -> Polygon {
        let (a, b) = ([h.normal[0], h.normal[1]], h.offset);
        let side = |p: [f64; 2]| a[0] * p[0] + a[1] * p[1] - b;
        let v = &self.vertices;
        if v.len() == 1 {
            return if side(v[0]) <= 0.0 { self.clone() } else { Polygon::empty() };
        }
        let mut out = Vec::with_capacity(v.len() + 1);
        let n = v.len();
        let edges = if n == 2 { 1 } else { n };
        for i in 0..edges {
            let (p, q) = (v[i], v[(i + 1) % n]);
            let (dp, dq) = (side(p), side(q));
            if dp <= 0.0 {
                out.push(p);
            }
            if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
                let t = dp / (dp - dq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        if n == 2 && side(v[1]) <= 0.0 {
            out.push(v[1]);
        }
        Polygon::new(out)
    }

    /// Minkowski sum with the box `[−γ₁, γ₁] × [−γ₂, γ₂]`, by merging edge
    /// sequences sorted by angle.
    pub fn minkowski_box(&self, gamma: [f64; 2]) -> Polygon {
        if self.is_empty() {
            return Polygon::empty();
        }
        let boxed = Polygon::from_box([-gamma[0], -gamma[1]], gamma);
        let (sa, ea) = self.edges_from_bottom();
        let (sb, eb) = boxed.edges_from_bottom();
        let mut cur = [sa[0] + sb[0], sa[1] + sb[1]];
        let mut out = vec![cur];
        let (mut i, mut j) = (0, 0);
        while i < ea.len() || j < eb.len() {
            let take_a = j >= eb.len() || (i < ea.len() && ea[i].0 <= eb[j].0);
            let e = if take_a {
                i += 1;
                ea[i - 1].1
            } else {
                j += 1;
                eb[j - 1].1
            };
            cur = [cur[0] + e[0], cur[1] + e[1]];
            out.push(cur);
        }
        Polygon::new(out).without_collinear()
    }

    /// Lowest (then leftmost) vertex and the nonzero edges from it, with
    /// their angles in `[0, 2π)`.
    fn edges_from_bottom(&self) -> ([f64; 2], Vec<(f64, [f64; 2])>) {
        let v = &self.vertices;
        let start = (0..v.len())
            .min_by(|&a, &b| v[a][1].total_cmp(&v[b][1]).then(v[a][0].total_cmp(&v[b][0])))
            .unwrap_or(0);
        let n = v.len();
        let mut edges = Vec::with_capacity(n);
        if n >= 2 {
            for k in 0..n {
                let (p, q) = (v[(start + k) % n], v[(start + k + 1) % n]);
                let e = [q[0] - p[0], q[1] - p[1]];
                if e[0] == 0.0 && e[1] == 0.0 {
                    continue;
                }
                let mut ang = e[1].atan2(e[0]);
                if ang < 0.0 {
                    ang += 2.0 * std::f64::consts::PI;
                }
                edges.push((ang, e));
            }
        }
        (v[start], edges)
    }

    fn without_collinear(self) -> Polygon {
        let v = self.vertices;
        if v.len() < 3 {
            return Polygon { vertices: v };
        }
        let n = v.len();
        let keep: Vec<[f64; 2]> = (0..n)
            .filter(|&i| {
                let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
                let scale = (b[0] - a[0]).hypot(b[1] - a[1]) * (c[0] - b[0]).hypot(c[1] - b[1]);
                cross(a, b, c).abs() > 1e-14 * scale.max(f64::MIN_POSITIVE)
            })
            .map(|i| v[i])
            .collect();
        Polygon::new(keep)
    }
}

/// Halfspaces of measurement `i`: the two cone sides plus `θ ≥ 0`.
pub fn information_halfspaces(record: &MeasurementRecord, i: usize) -> Result<Vec<Halfspace>, OracleError> {
    if record.n() != 2 {
        return Err(OracleError::Dimension(record.n()));
    }
    let phi_u: DVector<f64> = record.phi_upper.column(i).into_owned();
    let phi_l: DVector<f64> = record.phi_lower.column(i).into_owned();
    let y = record.y[i];
    Ok(vec![
        Halfspace::new(-phi_u, -(y - record.u_upper[i])),
        Halfspace::new(phi_l, y - record.u_lower[i]),
        Halfspace::new(dvector![-1.0, 0.0], 0.0),
        Halfspace::new(dvector![0.0, -1.0], 0.0),
    ])
}

/// `(poly ⊕ Γ𝐁²) ∩ 𝓛ₖ`.
pub fn fss_step(poly: &Polygon, record: &MeasurementRecord) -> Result<Polygon, OracleError> {
    if record.n() != 2 {
        return Err(OracleError::Dimension(record.n()));
    }
    let mut out = poly.minkowski_box([record.gamma[0], record.gamma[1]]);
    for i in 0..record.m() {
        for h in information_halfspaces(record, i)? {
            out = out.clip(&h);
        }
    }
    Ok(out)
}

pub fn area(poly: &Polygon) -> f64 {
    poly.area()
}

/// Oracle output for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleStep {
    pub k: usize,
    pub vertices: Vec<[f64; 2]>,
    pub area: f64,
    pub empty: bool,
}

/// Runs [`fss_step`] over a stream.
pub fn run(initial: &Polygon, stream: &[MeasurementRecord]) -> Result<Vec<OracleStep>, OracleError> {
    let mut poly = initial.clone();
    let mut out = Vec::with_capacity(stream.len());
    for r in stream {
        poly = fss_step(&poly, r)?;
        out.push(OracleStep {
            k: r.k,
            vertices: poly.vertices().to_vec(),
            area: poly.area(),
            empty: poly.is_empty(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn unit() -> Polygon {
        Polygon::from_box([0.0, 0.0], [1.0, 1.0])
    }

    #[test]
    fn areas() {
        assert_eq!(unit().area(), 1.0);
        assert_eq!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).area(), 0.5);
        assert_eq!(Polygon::empty().area(), 0.0);
    }

    #[test]
    fn clipping() {
        let h = Halfspace::new(dvector![1.0, 0.0], 0.5);
        assert!((unit().clip(&h).area() - 0.5).abs() < 1e-15);
        let all = Halfspace::new(dvector![1.0, 1.0], 10.0);
        assert_eq!(unit().clip(&all), unit());
        let none = Halfspace::new(dvector![1.0, 1.0], -1.0);
        assert!(unit().clip(&none).is_empty());
    }

    #[test]
    fn minkowski_cases() {
        assert_eq!(unit().minkowski_box([0.0, 0.0]), unit());
        let p = Polygon::new(vec![[1.0, 2.0]]).minkowski_box([0.5, 0.25]);
        assert_eq!(p, Polygon::from_box([0.5, 1.75], [1.5, 2.25]));
        let t = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).minkowski_box([0.1, 0.1]);
        // A + 2γ₁·height + 2γ₂·width + 4γ₁γ₂
        assert!(t.is_convex());
        assert!((t.area() - 0.94).abs() < 1e-12);
    }

    #[test]
    fn zonotope_vertices() {
        let z = Zonotope::new(dvector![0.0, 0.0], dmatrix![1.0, 0.0, 1.0; 0.0, 1.0, 1.0]).unwrap();
        let p = Polygon::from_zonotope(&z).unwrap();
        assert_eq!(p.vertices().len(), 6);
        assert!((p.area() - z.volume().unwrap()).abs() < 1e-12);
        assert!(p.is_convex());
    }

    #[test]
    fn information_rows() {
        let r = MeasurementRecord::new(
            0,
            dvector![1.0],
            dmatrix![1.0; 1.0],
            dmatrix![1.0; 1.0],
            dvector![-0.1],
            dvector![0.1],
            dvector![0.0, 0.0],
        )
        .unwrap();
        let hs = information_halfspaces(&r, 0).unwrap();
        assert_eq!(hs.len(), 4);
        let poly = fss_step(&Polygon::from_box([0.0, 0.0], [2.0, 2.0]), &r).unwrap();
        // 0.9 ≤ θ₁ + θ₂ ≤ 1.1 inside the positive quadrant
        assert!((poly.area() - 0.5 * (1.1f64.powi(2) - 0.9f64.powi(2))).abs() < 1e-12);
    }
}
