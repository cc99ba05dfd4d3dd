//! Analytic boundary maps for the shape catalogue.
//!
//! Smooth shapes (circle, ellipse, bean) use closed-form maps. Corner shapes
//! (triangle, shield, triangular shield) are described as a sharp "turtle
//! path" of straight segments, circular arcs and corners; the curvature
//! measure of that path is convolved with a periodic Gaussian of width
//! `corner_rounding × size`, integrated to a tangent angle, and integrated
//! again in Fourier space. The result is a trigonometric polynomial, so the
//! trapezoidal rule on it converges spectrally. Every shape is translated so
//! that its area centroid sits at the origin.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{Curve, Vec2};
use crate::error::{Error, Result};

/// Resolution of the reference grid the corner-shape Fourier series is fitted on.
const REFERENCE_SAMPLES: usize = 16384;

/// Bean: `x(t) = (cos t, 0.6 sin t + 0.4 cos 2t)` before centering.
pub const BEAN_Y_SIN: f64 = 0.6;
pub const BEAN_Y_COS2: f64 = 0.4;

/// Shield: flat top of half-width 0.8, straight sides of length 0.5, then
/// circular arcs turning by π/3 that meet at a bottom point.
pub const SHIELD_HALF_WIDTH: f64 = 0.8;
pub const SHIELD_SIDE: f64 = 0.5;
pub const SHIELD_ARC_TURN: f64 = PI / 3.0;

/// Triangular shield: corners at (±1, 0), a top arc of total turn π/2 bulging
/// upward, and straight sides meeting at (0, −1.6).
pub const TRI_SHIELD_HALF_WIDTH: f64 = 1.0;
pub const TRI_SHIELD_DEPTH: f64 = 1.6;
pub const TRI_SHIELD_ARC_TURN: f64 = PI / 2.0;

/// Geometry of a single boundary. Serialized as `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ShapeGeometry {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Triangle { circumradius: f64, corner_rounding: f64 },
    Bean { scale: f64 },
    Shield { scale: f64, corner_rounding: f64 },
    TriangularShield { scale: f64, corner_rounding: f64 },
}

impl ShapeGeometry {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ShapeGeometry::Circle { .. } => "circle",
            ShapeGeometry::Ellipse { .. } => "ellipse",
            ShapeGeometry::Triangle { .. } => "triangle",
            ShapeGeometry::Bean { .. } => "bean",
            ShapeGeometry::Shield { .. } => "shield",
            ShapeGeometry::TriangularShield { .. } => "triangular_shield",
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, ShapeGeometry::Circle { .. })
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidShape(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let rounding = |v: f64| {
            if (1e-3..=0.3).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidShape(format!("corner_rounding must lie in [1e-3, 0.3], got {v}")))
            }
        };
        match *self {
            ShapeGeometry::Circle { radius } => positive("radius", radius),
            ShapeGeometry::Ellipse { a, b } => positive("a", a).and(positive("b", b)),
            ShapeGeometry::Triangle { circumradius, corner_rounding } => {
                positive("circumradius", circumradius).and(rounding(corner_rounding))
            }
            ShapeGeometry::Bean { scale } => positive("scale", scale),
            ShapeGeometry::Shield { scale, corner_rounding }
            | ShapeGeometry::TriangularShield { scale, corner_rounding } => {
                positive("scale", scale).and(rounding(corner_rounding))
            }
        }
    }

    fn map(&self) -> BoundaryMap {
        match *self {
            ShapeGeometry::Circle { radius } => BoundaryMap::Ellipse { a: radius, b: radius },
            ShapeGeometry::Ellipse { a, b } => BoundaryMap::Ellipse { a, b },
            ShapeGeometry::Bean { scale } => BoundaryMap::Bean { scale, shift: bean_centroid_y() * scale },
            ShapeGeometry::Triangle { circumradius, corner_rounding } => {
                let side = 3f64.sqrt();
                let turn = 2.0 * PI / 3.0;
                let pieces = vec![
                    Piece::Line(side / 2.0),
                    Piece::Corner(turn),
                    Piece::Line(side),
                    Piece::Corner(turn),
                    Piece::Line(side),
                    Piece::Corner(turn),
                    Piece::Line(side / 2.0),
                ];
                let path = TurtlePath { start: Vec2::new(0.0, -0.5), heading: 0.0, pieces };
                BoundaryMap::Smoothed(SmoothedPath::new(&path, corner_rounding, circumradius))
            }
            ShapeGeometry::Shield { scale, corner_rounding } => {
                BoundaryMap::Smoothed(SmoothedPath::new(&shield_path(), corner_rounding, scale))
            }
            ShapeGeometry::TriangularShield { scale, corner_rounding } => {
                BoundaryMap::Smoothed(SmoothedPath::new(&triangular_shield_path(), corner_rounding, scale))
            }
        }
    }
}

/// Inner phase of a coated target: a homothety of the outer boundary about
/// its centroid (the origin).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coating {
    pub ratio: f64,
    /// Optional explicit inner geometry; when absent the inner boundary is
    /// `ratio ×` the outer one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<ShapeGeometry>,
}

impl Default for Coating {
    fn default() -> Self {
        Coating { ratio: 0.5, inner: None }
    }
}

/// A piecewise-constant conductivity target: geometry plus phase conductivities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    #[serde(flatten)]
    pub geometry: ShapeGeometry,
    #[serde(default)]
    pub coated: Option<Coating>,
    pub k1: f64,
    #[serde(default)]
    pub k2: Option<f64>,
}

impl ShapeSpec {
    pub fn homogeneous(geometry: ShapeGeometry, k: f64) -> Self {
        ShapeSpec { geometry, coated: None, k1: k, k2: None }
    }

    pub fn coated(geometry: ShapeGeometry, k1: f64, k2: f64, ratio: f64) -> Self {
        ShapeSpec { geometry, coated: Some(Coating { ratio, inner: None }), k1, k2: Some(k2) }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        check_conductivity("k1", self.k1)?;
        match (&self.coated, self.k2) {
            (Some(c), Some(k2)) => {
                check_conductivity("k2", k2)?;
                if !(c.ratio > 0.0 && c.ratio < 1.0) {
                    return Err(Error::InvalidShape(format!("coating ratio must lie in (0, 1), got {}", c.ratio)));
                }
                if let Some(inner) = &c.inner {
                    inner.validate()?;
                }
                Ok(())
            }
            (Some(_), None) => Err(Error::InvalidShape("coated target requires k2".into())),
            (None, Some(_)) => Err(Error::InvalidShape("k2 given without a coating".into())),
            (None, None) => Ok(()),
        }
    }
}

fn check_conductivity(name: &str, k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidContrast(format!("{name} must be positive and finite, got {k}")));
    }
    if (k - 1.0).abs() < 1e-12 {
        return Err(Error::InvalidContrast(format!("{name} = 1 has no contrast with the background")));
    }
    Ok(())
}

/// Outer and optional inner boundary of a target.
#[derive(Clone, Debug)]
pub struct TargetCurves {
    pub outer: Curve,
    pub inner: Option<Curve>,
}

/// Discretizes a single boundary with `n_nodes` nodes.
pub fn build_curve(geometry: &ShapeGeometry, n_nodes: usize) -> Result<Curve> {
    if n_nodes < 16 || !n_nodes.is_multiple_of(2) {
        return Err(Error::InvalidShape(format!("n_nodes must be even and >= 16, got {n_nodes}")));
    }
    geometry.validate()?;
    let curve = geometry.map().sample(geometry.kind_name(), n_nodes)?;
    curve.check_simple()?;
    Ok(curve)
}

/// Discretizes every boundary of a target; inner curves get the same node count.
pub fn build_target_curves(spec: &ShapeSpec, n_nodes: usize) -> Result<TargetCurves> {
    spec.validate()?;
    let outer = build_curve(&spec.geometry, n_nodes)?;
    let inner = match &spec.coated {
        None => None,
        Some(coating) => {
            let inner_geometry = coating.inner.clone().unwrap_or_else(|| spec.geometry.clone());
            let mut inner = build_curve(&inner_geometry, n_nodes)?;
            if coating.inner.is_none() {
                inner = inner.apply_motion(&super::RigidMotion::scaling(coating.ratio));
            }
            check_contained(&outer, &inner)?;
            Some(inner)
        }
    };
    Ok(TargetCurves { outer, inner })
}

fn check_contained(outer: &Curve, inner: &Curve) -> Result<()> {
    if inner.nodes().iter().any(|p| !outer.contains_point(*p)) {
        return Err(Error::NotContained);
    }
    let gap = outer.min_distance_to(inner);
    let scale = outer.perimeter();
    if gap < 1e-3 * scale {
        return Err(Error::NotContained);
    }
    Ok(())
}

enum BoundaryMap {
    Ellipse { a: f64, b: f64 },
    Bean { scale: f64, shift: f64 },
    Smoothed(SmoothedPath),
}

impl BoundaryMap {
    fn sample(&self, id: &str, n: usize) -> Result<Curve> {
        let mut p = Vec::with_capacity(n);
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for j in 0..n {
            let t = 2.0 * PI * j as f64 / n as f64;
            let (x, dx, ddx) = self.eval(t);
            p.push(x);
            d1.push(dx);
            d2.push(ddx);
        }
        Curve::from_samples(id, p, &d1, &d2)
    }

    fn eval(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        match self {
            BoundaryMap::Ellipse { a, b } => {
                let (s, c) = t.sin_cos();
                (Vec2::new(a * c, b * s), Vec2::new(-a * s, b * c), Vec2::new(-a * c, -b * s))
            }
            BoundaryMap::Bean { scale, shift } => {
                let (s, c) = t.sin_cos();
                let (s2, c2) = (2.0 * t).sin_cos();
                let x = Vec2::new(c, BEAN_Y_SIN * s + BEAN_Y_COS2 * c2) * *scale - Vec2::new(0.0, *shift);
                let dx = Vec2::new(-s, BEAN_Y_SIN * c - 2.0 * BEAN_Y_COS2 * s2) * *scale;
                let ddx = Vec2::new(-c, -BEAN_Y_SIN * s - 4.0 * BEAN_Y_COS2 * c2) * *scale;
                (x, dx, ddx)
            }
            BoundaryMap::Smoothed(path) => path.eval(t),
        }
    }
}

/// Area centroid height of the unit bean: `∫ y dA = −½∮ y² dx`.
fn bean_centroid_y() -> f64 {
    // The integrands are trigonometric polynomials of low degree; 64 points are exact.
    let n = 64;
    let (mut area, mut moment) = (0.0, 0.0);
    for j in 0..n {
        let t = 2.0 * PI * j as f64 / n as f64;
        let (s, c) = t.sin_cos();
        let (s2, c2) = (2.0 * t).sin_cos();
        let (x, y) = (c, BEAN_Y_SIN * s + BEAN_Y_COS2 * c2);
        let (dx, dy) = (-s, BEAN_Y_SIN * c - 2.0 * BEAN_Y_COS2 * s2);
        area += 0.5 * (x * dy - y * dx);
        moment += -0.5 * y * y * dx;
    }
    moment / area
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    Line(f64),
    /// Circular arc of the given length turning counter-clockwise by `turn`.
    Arc { length: f64, turn: f64 },
    Corner(f64),
}

struct TurtlePath {
    start: Vec2,
    heading: f64,
    pieces: Vec<Piece>,
}

fn shield_path() -> TurtlePath {
    let radius = SHIELD_HALF_WIDTH / (1.0 - SHIELD_ARC_TURN.cos());
    let arc = Piece::Arc { length: radius * SHIELD_ARC_TURN, turn: SHIELD_ARC_TURN };
    let tip = PI - 2.0 * SHIELD_ARC_TURN;
    TurtlePath {
        start: Vec2::new(0.0, 0.0),
        heading: PI,
        pieces: vec![
            Piece::Line(SHIELD_HALF_WIDTH),
            Piece::Corner(PI / 2.0),
            Piece::Line(SHIELD_SIDE),
            arc,
            Piece::Corner(tip),
            arc,
            Piece::Line(SHIELD_SIDE),
            Piece::Corner(PI / 2.0),
            Piece::Line(SHIELD_HALF_WIDTH),
        ],
    }
}

fn triangular_shield_path() -> TurtlePath {
    let half_turn = TRI_SHIELD_ARC_TURN / 2.0;
    let radius = TRI_SHIELD_HALF_WIDTH / half_turn.sin();
    let sagitta = radius * (1.0 - half_turn.cos());
    let arc = Piece::Arc { length: radius * half_turn, turn: half_turn };
    let slope = TRI_SHIELD_DEPTH.atan2(TRI_SHIELD_HALF_WIDTH);
    let side = TRI_SHIELD_HALF_WIDTH.hypot(TRI_SHIELD_DEPTH);
    let shoulder = 0.75 * PI - slope;
    TurtlePath {
        start: Vec2::new(0.0, sagitta),
        heading: PI,
        pieces: vec![
            arc,
            Piece::Corner(shoulder),
            Piece::Line(side),
            Piece::Corner(2.0 * slope),
            Piece::Line(side),
            Piece::Corner(shoulder),
            arc,
        ],
    }
}

/// Fourier representation of a corner-smoothed turtle path, parametrized by
/// `t = 2π s / L` with `s` the arclength of the sharp path.
struct SmoothedPath {
    length: f64,
    /// (wave number k, velocity coefficient v̂_k), k ≠ 0
    modes: Arc<Vec<(f64, Complex64)>>,
    offset: Complex64,
}

impl SmoothedPath {
    fn new(path: &TurtlePath, rounding: f64, scale: f64) -> Self {
        let m = REFERENCE_SAMPLES;
        let length: f64 = path
            .pieces
            .iter()
            .map(|p| match p {
                Piece::Line(l) => *l,
                Piece::Arc { length, .. } => *length,
                Piece::Corner(_) => 0.0,
            })
            .sum();
        let sigma = rounding;
        let omega = |k: i64| 2.0 * PI * k as f64 / length;
        let wave = |j: usize| -> i64 {
            if j <= m / 2 {
                j as i64
            } else {
                j as i64 - m as i64
            }
        };

        // Fourier coefficients of the smoothed curvature measure.
        let mut kappa_hat = vec![Complex64::new(0.0, 0.0); m];
        let mut s = 0.0;
        for piece in &path.pieces {
            match *piece {
                Piece::Line(l) => s += l,
                Piece::Corner(turn) => {
                    for (j, c) in kappa_hat.iter_mut().enumerate() {
                        let w = omega(wave(j));
                        *c += Complex64::from_polar(turn / length, -w * s);
                    }
                }
                Piece::Arc { length: l, turn } => {
                    for (j, c) in kappa_hat.iter_mut().enumerate() {
                        let w = omega(wave(j));
                        if wave(j) == 0 {
                            *c += turn / length;
                        } else {
                            let e0 = Complex64::from_polar(1.0, -w * s);
                            let e1 = Complex64::from_polar(1.0, -w * (s + l));
                            *c += (e0 - e1) / Complex64::new(0.0, w) * (turn / l / length);
                        }
                    }
                    s += l;
                }
            }
        }
        for (j, c) in kappa_hat.iter_mut().enumerate() {
            let w = omega(wave(j));
            *c *= (-0.5 * (w * sigma).powi(2)).exp();
        }
        kappa_hat[m / 2] = Complex64::new(0.0, 0.0);

        // Tangent angle φ(s) = φ0 + 2πs/L + Σ_{k≠0} κ̂_k/(iω_k)(e^{iω_k s} − 1).
        let mut planner = FftPlanner::new();
        let inverse = planner.plan_fft_inverse(m);
        let forward = planner.plan_fft_forward(m);
        let mut phase: Vec<Complex64> = kappa_hat
            .iter()
            .enumerate()
            .map(|(j, c)| if wave(j) == 0 { Complex64::new(0.0, 0.0) } else { c / Complex64::new(0.0, omega(wave(j))) })
            .collect();
        inverse.process(&mut phase);
        let phase0 = phase[0].re;
        let mut velocity: Vec<Complex64> = (0..m)
            .map(|j| {
                let phi = path.heading + 2.0 * PI * j as f64 / m as f64 + phase[j].re - phase0;
                Complex64::from_polar(1.0, phi)
            })
            .collect();
        forward.process(&mut velocity);
        let norm = 1.0 / m as f64;
        let peak = velocity.iter().map(|c| c.norm() * norm).fold(0.0, f64::max);
        let mut modes = Vec::new();
        for (j, c) in velocity.iter().enumerate() {
            let k = wave(j);
            let coeff = c * norm;
            // The mean velocity is the closure defect of the smoothed path; dropping it closes the curve.
            if k == 0 || j == m / 2 || coeff.norm() < 1e-15 * peak {
                continue;
            }
            modes.push((omega(k), coeff));
        }
        modes.sort_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap().then(a.0.partial_cmp(&b.0).unwrap()));

        let mut smoothed = SmoothedPath { length, modes: Arc::new(modes), offset: Complex64::new(path.start.x, path.start.y) };
        // Anchor x(0) at the sharp start point, then move the centroid to the origin.
        let x0 = smoothed.position(0.0);
        smoothed.offset += Complex64::new(path.start.x, path.start.y) - x0;
        let centroid = smoothed.centroid();
        smoothed.offset -= centroid;
        smoothed.offset *= scale;
        smoothed.length *= scale;
        let modes = smoothed
            .modes
            .iter()
            .map(|(w, c)| (w / scale, *c))
            .collect::<Vec<_>>();
        smoothed.modes = Arc::new(modes);
        smoothed
    }

    fn position(&self, s: f64) -> Complex64 {
        let mut acc = self.offset;
        for (w, c) in self.modes.iter() {
            acc += c / Complex64::new(0.0, *w) * Complex64::from_polar(1.0, w * s);
        }
        acc
    }

    fn centroid(&self) -> Complex64 {
        let n = 4096;
        let (mut area, mut mx, mut my) = (0.0, 0.0, 0.0);
        for j in 0..n {
            let s = self.length * j as f64 / n as f64;
            let (x, v, _) = self.derivs(s);
            area += 0.5 * (x.re * v.im - x.im * v.re);
            mx += 0.5 * x.re * x.re * v.im;
            my -= 0.5 * x.im * x.im * v.re;
        }
        Complex64::new(mx / area, my / area)
    }

    /// Position, arclength velocity and acceleration.
    fn derivs(&self, s: f64) -> (Complex64, Complex64, Complex64) {
        let mut x = self.offset;
        let mut v = Complex64::new(0.0, 0.0);
        let mut a = Complex64::new(0.0, 0.0);
        for (w, c) in self.modes.iter() {
            let e = Complex64::from_polar(1.0, w * s);
            let iw = Complex64::new(0.0, *w);
            x += c / iw * e;
            v += c * e;
            a += c * iw * e;
        }
        (x, v, a)
    }

    fn eval(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let ds = self.length / (2.0 * PI);
        let (x, v, a) = self.derivs(t * ds);
        (Vec2::new(x.re, x.im), Vec2::new(v.re, v.im) * ds, Vec2::new(a.re, a.im) * (ds * ds))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dictionary_geometries() -> Vec<ShapeGeometry> {
        vec![
            ShapeGeometry::Triangle { circumradius: 1.0, corner_rounding: 0.05 },
            ShapeGeometry::Ellipse { a: 1.0, b: 0.5 },
            ShapeGeometry::Bean { scale: 1.0 },
            ShapeGeometry::Shield { scale: 1.0, corner_rounding: 0.05 },
            ShapeGeometry::TriangularShield { scale: 1.0, corner_rounding: 0.05 },
        ]
    }

    /// Adaptive Simpson integration, independent of the trapezoidal curve sums.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn ellipse_perimeter_matches_adaptive_quadrature() {
        let oracle = adaptive_simpson(&|t: f64| (t.sin().powi(2) + 0.25 * t.cos().powi(2)).sqrt(), 0.0, 2.0 * PI, 1e-13);
        assert!((oracle - 4.844_224_110_273_838).abs() < 1e-10, "oracle {oracle}");
        let c = build_curve(&ShapeGeometry::Ellipse { a: 1.0, b: 0.5 }, 128).unwrap();
        assert!((c.perimeter() - oracle).abs() < 1e-8);
    }

    #[test]
    fn rounded_triangle_is_a_valid_curve() {
        let c = build_curve(&ShapeGeometry::Triangle { circumradius: 1.0, corner_rounding: 0.05 }, 256).unwrap();
        assert!(c.check_simple().is_ok());
        for n in c.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
        assert!(c.weights().iter().all(|w| *w > 0.0));
        assert!(c.centroid().norm() < 1e-10);
    }

    #[test]
    fn perimeter_is_stable_under_node_doubling() {
        for g in dictionary_geometries() {
            let a = build_curve(&g, 512).unwrap().perimeter();
            let b = build_curve(&g, 1024).unwrap().perimeter();
            assert!(((a - b) / b).abs() < 1e-10, "{g:?}: {a} vs {b}");
        }
    }

    #[test]
    fn dictionary_shapes_are_centered() {
        for g in dictionary_geometries() {
            let c = build_curve(&g, 512).unwrap();
            assert!(c.centroid().norm() < 1e-10, "{g:?}: {}", c.centroid());
        }
    }

    #[test]
    fn coated_inner_is_strictly_inside() {
        for g in dictionary_geometries() {
            let spec = ShapeSpec::coated(g, 2.0, 4.0, 0.5);
            let t = build_target_curves(&spec, 128).unwrap();
            let inner = t.inner.unwrap();
            assert!(inner.nodes().iter().all(|p| t.outer.contains_point(*p)));
        }
    }

    #[test]
    fn containment_survives_joint_motion() {
        let spec = ShapeSpec::coated(ShapeGeometry::Bean { scale: 1.0 }, 2.0, 4.0, 0.5);
        let t = build_target_curves(&spec, 128).unwrap();
        let m = super::super::RigidMotion::new(Vec2::new(2.0, -1.0), 1.0, 0.4).unwrap();
        let (o, i) = (t.outer.apply_motion(&m), t.inner.unwrap().apply_motion(&m));
        assert!(i.nodes().iter().all(|p| o.contains_point(*p)));
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = ShapeGeometry::Circle { radius: 1.0 };
        assert!(build_curve(&g, 15).is_err());
        assert!(build_curve(&g, 17).is_err());
        assert!(build_curve(&ShapeGeometry::Circle { radius: -1.0 }, 32).is_err());
        assert!(ShapeSpec::homogeneous(g.clone(), 1.0).validate().is_err());
        assert!(ShapeSpec::homogeneous(g.clone(), 0.0).validate().is_err());
        let mut spec = ShapeSpec::coated(g.clone(), 2.0, 4.0, 0.5);
        spec.coated.as_mut().unwrap().ratio = 1.2;
        assert!(spec.validate().is_err());
        let spec = ShapeSpec { geometry: g, coated: Some(Coating::default()), k1: 2.0, k2: None };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn explicit_inner_must_fit() {
        let spec = ShapeSpec {
            geometry: ShapeGeometry::Circle { radius: 1.0 },
            coated: Some(Coating { ratio: 0.5, inner: Some(ShapeGeometry::Ellipse { a: 1.5, b: 0.2 }) }),
            k1: 2.0,
            k2: Some(4.0),
        };
        assert!(matches!(build_target_curves(&spec, 64), Err(Error::NotContained)));
    }

    #[test]
    fn spec_json_uses_documented_field_names() {
        let spec = ShapeSpec::coated(ShapeGeometry::Ellipse { a: 1.0, b: 0.5 }, 2.0, 4.0, 0.5);
        let v: serde_json::Value = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["kind"], "ellipse");
        assert_eq!(v["params"]["a"], 1.0);
        assert_eq!(v["coated"]["ratio"], 0.5);
        assert_eq!(v["k1"], 2.0);
        assert_eq!(v["k2"], 4.0);
        let back: ShapeSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
        let parsed: ShapeSpec =
            serde_json::from_str(r#"{"kind":"circle","params":{"radius":1.0},"k1":3.0}"#).unwrap();
        assert_eq!(parsed, ShapeSpec::homogeneous(ShapeGeometry::Circle { radius: 1.0 }, 3.0));
    }
}
