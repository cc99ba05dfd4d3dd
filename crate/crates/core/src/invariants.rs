//! Translation, rotation and scaling invariant descriptors built from
//! complex CGPTs.
//!
//! A rigid motion `x ↦ z + s·R(θ)x` sends the reduction point
//! `u = N2_12 / (2 N2_11)` to `z + s e^{iθ} u`, so translating by `−u`
//! removes the dependence on `z`. The normalization by `sqrt(J2_mm J2_nn)`
//! removes `s` and leaves only unit-modulus rotation phases, which the
//! entrywise modulus discards.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cgpt_algebra::translation_matrix;
use crate::cgpt_engine::ComplexCgpt;
use crate::error::{Error, Result};

/// Default descriptor order used for classification.
pub const DEFAULT_DESCRIPTOR_ORDER: usize = 2;

/// Invariant descriptor matrices and the reduction point they were built at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "DescriptorJson", try_from = "DescriptorJson")]
pub struct DescriptorPair {
    pub order: usize,
    pub i1: DMatrix<f64>,
    pub i2: DMatrix<f64>,
    pub u: Complex64,
}

#[derive(Serialize, Deserialize)]
struct DescriptorJson {
    order: usize,
    #[serde(rename = "I1")]
    i1: Vec<Vec<f64>>,
    #[serde(rename = "I2")]
    i2: Vec<Vec<f64>>,
    u: [f64; 2],
}

impl From<DescriptorPair> for DescriptorJson {
    fn from(d: DescriptorPair) -> Self {
        let rows = |m: &DMatrix<f64>| m.row_iter().map(|r| r.iter().cloned().collect()).collect();
        DescriptorJson { order: d.order, i1: rows(&d.i1), i2: rows(&d.i2), u: [d.u.re, d.u.im] }
    }
}

impl TryFrom<DescriptorJson> for DescriptorPair {
    type Error = Error;
    fn try_from(j: DescriptorJson) -> Result<Self> {
        let k = j.order;
        let mat = |rows: &[Vec<f64>], name: &str| {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(Error::DimensionMismatch(format!("descriptor {name} is not {k}×{k}")));
            }
            Ok(DMatrix::from_fn(k, k, |a, b| rows[a][b]))
        };
        Ok(DescriptorPair { order: k, i1: mat(&j.i1, "I1")?, i2: mat(&j.i2, "I2")?, u: Complex64::new(j.u[0], j.u[1]) })
    }
}

impl DescriptorPair {
    /// Leading `k × k` part of both descriptors.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.order {
            return Err(Error::InvalidOrder { order: k, reason: "descriptor order must lie in 1..=order" });
        }
        Ok(DescriptorPair {
            order: k,
            i1: self.i1.view((0, 0), (k, k)).into_owned(),
            i2: self.i2.view((0, 0), (k, k)).into_owned(),
            u: self.u,
        })
    }

    /// `sqrt(‖ΔI1‖²_F + ‖ΔI2‖²_F)`.
    pub fn distance(&self, other: &DescriptorPair) -> Result<f64> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch(format!(
                "descriptor orders {} and {} differ",
                self.order, other.order
            )));
        }
        Ok(((&self.i1 - &other.i1).norm_squared() + (&self.i2 - &other.i2).norm_squared()).sqrt())
    }
}

/// `u = N2_12 / (2 N2_11)`.
pub fn reduction_point(n: &ComplexCgpt) -> Result<Complex64> {
    if n.order() < 2 {
        return Err(Error::InvalidOrder { order: n.order(), reason: "reduction point needs order at least 2" });
    }
    let n11 = n.n2[(0, 0)];
    if n11.norm() <= 1e-12 * n.n2.norm() || n11.norm() == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    Ok(n.n2[(0, 1)] / (n11 * 2.0))
}

/// `J1 = C^{−u} N1 (C^{−u})ᵀ`, `J2 = conj(C^{−u}) N2 (C^{−u})ᵀ`.
pub fn translation_reduce(n: &ComplexCgpt, u: Complex64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    if u == Complex64::new(0.0, 0.0) {
        return (n.n1.clone(), n.n2.clone());
    }
    let c = translation_matrix(-u, n.order());
    let ct = c.transpose();
    (&c * &n.n1 * &ct, c.conjugate() * &n.n2 * &ct)
}

/// `I1 = |J1_mn| / |sqrt(J2_mm J2_nn)|`, `I2 = |J2_mn| / |sqrt(J2_mm J2_nn)|`.
pub fn shape_descriptors(j1: &DMatrix<Complex64>, j2: &DMatrix<Complex64>, u: Complex64) -> Result<DescriptorPair> {
    let k = j2.nrows();
    let scale = j2.norm();
    for m in 0..k {
        if j2[(m, m)].norm() <= 1e-14 * scale || j2[(m, m)].norm() == 0.0 {
            return Err(Error::DescriptorUndefined(m + 1));
        }
    }
    // Principal branch; the modulus below makes the branch immaterial.
    let norm = |a: usize, b: usize| (j2[(a, a)] * j2[(b, b)]).sqrt().norm();
    Ok(DescriptorPair {
        order: k,
        i1: DMatrix::from_fn(k, k, |a, b| j1[(a, b)].norm() / norm(a, b)),
        i2: DMatrix::from_fn(k, k, |a, b| j2[(a, b)].norm() / norm(a, b)),
        u,
    })
}

/// Full chain: reduction point, translation reduction, normalization, then
/// truncation to `order` (truncation commutes with the triangular reduction).
pub fn descriptors(n: &ComplexCgpt, order: usize) -> Result<DescriptorPair> {
    if order == 0 || order > n.order() {
        return Err(Error::InvalidOrder { order, reason: "descriptor order must not exceed the CGPT order" });
    }
    let u = reduction_point(n)?;
    let (j1, j2) = translation_reduce(n, u);
    let k = order;
    let t = |m: &DMatrix<Complex64>| m.view((0, 0), (k, k)).into_owned();
    shape_descriptors(&t(&j1), &t(&j2), u)
}
