//! Discretized closed curves, rigid motions and the analytic shape catalogue.
//!
//! Every [`Curve`] is sampled at equispaced parameter values
//! `t_j = 2πj/N` of a smooth `2π`-periodic map traversed counter-clockwise, so
//! normals point outward and the trapezoidal rule on `t` is spectrally
//! accurate. The boundary operators rely on that equispaced structure.

mod shapes;

pub use shapes::{build_curve, build_target_curves, Coating, ShapeGeometry, ShapeSpec, TargetCurves};

use nalgebra::Vector2;

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// A closed curve sampled for Nyström quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    nodes: Vec<Vec2>,
    normals: Vec<Vec2>,
    weights: Vec<f64>,
    /// `|x'(t)|` at each node.
    speeds: Vec<f64>,
    /// Signed curvature, positive on convex arcs.
    curvature: Vec<f64>,
    parametrization_id: String,
}

impl Curve {
    /// Builds a curve from samples of a periodic map at `t_j = 2πj/N`:
    /// positions, first and second parameter derivatives.
    pub fn from_samples(
        parametrization_id: impl Into<String>,
        points: Vec<Vec2>,
        d1: &[Vec2],
        d2: &[Vec2],
    ) -> Result<Self> {
        let n = points.len();
        if n < 3 || d1.len() != n || d2.len() != n {
            return Err(Error::InvalidShape(format!(
                "inconsistent sample counts ({n}, {}, {})",
                d1.len(),
                d2.len()
            )));
        }
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let mut normals = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut speeds = Vec::with_capacity(n);
        let mut curvature = Vec::with_capacity(n);
        for (a, b) in d1.iter().zip(d2) {
            let speed = a.norm();
            if !(speed > 0.0 && speed.is_finite()) {
                return Err(Error::InvalidShape("parametrization has zero speed".into()));
            }
            normals.push(Vec2::new(a.y, -a.x) / speed);
            weights.push(speed * h);
            speeds.push(speed);
            curvature.push((a.x * b.y - a.y * b.x) / speed.powi(3));
        }
        let curve = Curve {
            nodes: points,
            normals,
            weights,
            speeds,
            curvature,
            parametrization_id: parametrization_id.into(),
        };
        if curve.nodes.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::InvalidShape("non-finite node".into()));
        }
        if curve.signed_area() <= 0.0 {
            return Err(Error::InvalidShape("curve must be traversed counter-clockwise".into()));
        }
        Ok(curve)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn parametrization_id(&self) -> &str {
        &self.parametrization_id
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Enclosed area by the trapezoidal rule on `½∮(x dy − y dx)`.
    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .nodes
            .iter()
            .zip(&self.normals)
            .zip(&self.weights)
            .map(|((p, n), w)| p.dot(n) * w)
            .sum::<f64>()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2 {
        // ∫_D x dA = ½∮ |x|² ν ds
        let area = self.signed_area();
        let mut acc = Vec2::zeros();
        for ((p, n), w) in self.nodes.iter().zip(&self.normals).zip(&self.weights) {
            acc += n * (0.5 * p.norm_squared() * w);
        }
        acc / area
    }

    /// Largest distance from `center` to a node.
    pub fn radius_about(&self, center: Vec2) -> f64 {
        self.nodes.iter().map(|p| (p - center).norm()).fold(0.0, f64::max)
    }

    /// Smallest distance between nodes of two curves.
    pub fn min_distance_to(&self, other: &Curve) -> f64 {
        let mut best = f64::INFINITY;
        for p in &self.nodes {
            for q in &other.nodes {
                best = best.min((p - q).norm_squared());
            }
        }
        best.sqrt()
    }

    /// Scans all pairs of non-adjacent polygon edges for crossings.
    pub fn check_simple(&self) -> Result<()> {
        let n = self.nodes.len();
        for i in 0..n {
            let (a, b) = (self.nodes[i], self.nodes[(i + 1) % n]);
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (self.nodes[j], self.nodes[(j + 1) % n]);
                if segments_cross(a, b, c, d) {
                    return Err(Error::SelfIntersecting(i, j));
                }
            }
        }
        Ok(())
    }

    /// Winding-number test against the node polygon.
    pub fn contains_point(&self, p: Vec2) -> bool {
        let n = self.nodes.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.nodes[i], self.nodes[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// Maps nodes by `x ↦ z + s·R(θ)x`.
    pub fn apply_motion(&self, m: &RigidMotion) -> Curve {
        if m.is_identity() {
            return self.clone();
        }
        let (sin, cos) = m.theta.sin_cos();
        let rot = |v: &Vec2| Vec2::new(cos * v.x - sin * v.y, sin * v.x + cos * v.y);
        Curve {
            nodes: self.nodes.iter().map(|p| m.translation_vec() + rot(p) * m.s).collect(),
            normals: self.normals.iter().map(rot).collect(),
            weights: self.weights.iter().map(|w| w * m.s).collect(),
            speeds: self.speeds.iter().map(|v| v * m.s).collect(),
            curvature: self.curvature.iter().map(|k| k / m.s).collect(),
            parametrization_id: self.parametrization_id.clone(),
        }
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2, o: f64| {
        o == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// Maximum pairwise node distance.
pub fn curve_diameter(curve: &Curve) -> f64 {
    let nodes = curve.nodes();
    let mut best = 0.0f64;
    for (i, p) in nodes.iter().enumerate() {
        for q in &nodes[i + 1..] {
            best = best.max((p - q).norm_squared());
        }
    }
    best.sqrt()
}

/// `x ↦ z + s·R(θ)x`: rotation about the origin, then scaling, then translation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RigidMotion {
    pub z: [f64; 2],
    pub theta: f64,
    pub s: f64,
}

impl RigidMotion {
    pub fn new(z: Vec2, theta: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidShape(format!("scale must be positive, got {s}")));
        }
        Ok(RigidMotion { z: [z.x, z.y], theta, s })
    }

    pub fn identity() -> Self {
        RigidMotion { z: [0.0, 0.0], theta: 0.0, s: 1.0 }
    }

    pub fn translation(z: Vec2) -> Self {
        RigidMotion { z: [z.x, z.y], theta: 0.0, s: 1.0 }
    }

    pub fn rotation(theta: f64) -> Self {
        RigidMotion { z: [0.0, 0.0], theta, s: 1.0 }
    }

    pub fn scaling(s: f64) -> Self {
        RigidMotion { z: [0.0, 0.0], theta: 0.0, s }
    }

    pub fn translation_vec(&self) -> Vec2 {
        Vec2::new(self.z[0], self.z[1])
    }

    pub fn is_identity(&self) -> bool {
        self.z == [0.0, 0.0] && self.theta == 0.0 && self.s == 1.0
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        let (sin, cos) = self.theta.sin_cos();
        self.translation_vec() + Vec2::new(cos * p.x - sin * p.y, sin * p.x + cos * p.y) * self.s
    }

    pub fn inverse(&self) -> Self {
        let (sin, cos) = self.theta.sin_cos();
        let z = self.translation_vec();
        // R(−θ)z / s
        let back = Vec2::new(cos * z.x + sin * z.y, -sin * z.x + cos * z.y) / self.s;
        RigidMotion { z: [-back.x, -back.y], theta: -self.theta, s: 1.0 / self.s }
    }
}
