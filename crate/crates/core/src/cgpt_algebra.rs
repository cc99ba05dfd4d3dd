//! Exact transformation laws of CGPTs under translation, rotation and scaling.
//!
//! Moving a target by `x ↦ z + s·R(θ)x` acts on the complex CGPTs as
//!
//! ```text
//! N1 ↦ C^z G^w N1 G^w (C^z)ᵀ,    N2 ↦ conj(C^z G^w) N2 G^w (C^z)ᵀ,
//! ```
//!
//! with `w = s·e^{iθ}`, `C^z_{mn} = binom(m, n) z^{m−n}` (lower triangular)
//! and `G^w = diag(w^m)`. Both factors are triangular, so the laws hold for
//! truncated matrices. The real 2×2 block formulas are kept alongside as an
//! independent check.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::cgpt_engine::{binomial, CgptMatrix, ComplexCgpt};
use crate::geometry::{RigidMotion, Vec2};

/// `C^z` and `G^w` at a fixed truncation order.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrices {
    pub cz: DMatrix<Complex64>,
    pub gw: DMatrix<Complex64>,
}

impl TransferMatrices {
    pub fn for_motion(motion: &RigidMotion, order: usize) -> Self {
        let z = Complex64::new(motion.z[0], motion.z[1]);
        TransferMatrices { cz: translation_matrix(z, order), gw: scaling_rotation_matrix(motion.s, motion.theta, order) }
    }
}

/// Lower-triangular `C^z` with entry `(m, n) = binom(m, n) z^{m−n}`, 1-based.
pub fn translation_matrix(z: Complex64, order: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(order, order, |i, j| {
        let (m, n) = (i + 1, j + 1);
        if n > m {
            Complex64::new(0.0, 0.0)
        } else {
            z.powu((m - n) as u32) * binomial(m, n) as f64
        }
    })
}

/// Diagonal `G^w` with entry `(m, m) = s^m e^{imθ}`.
pub fn scaling_rotation_matrix(s: f64, theta: f64, order: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(order, order, |i, j| {
        if i == j {
            Complex64::from_polar(s.powi(i as i32 + 1), (i + 1) as f64 * theta)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Complex CGPTs of the moved target.
pub fn transform_complex(n: &ComplexCgpt, motion: &RigidMotion) -> ComplexCgpt {
    let t = TransferMatrices::for_motion(motion, n.order());
    let left = &t.cz * &t.gw;
    let right = &t.gw * t.cz.transpose();
    ComplexCgpt { n1: &left * &n.n1 * &right, n2: left.conjugate() * &n.n2 * &right }
}

/// Real CGPTs of the moved target, through the complex form.
pub fn transform(m: &CgptMatrix, motion: &RigidMotion) -> CgptMatrix {
    if motion.is_identity() {
        return m.clone();
    }
    transform_complex(&m.to_complex(), motion).to_real()
}

/// CGPTs of the target translated by `z`.
pub fn translate(m: &CgptMatrix, z: Vec2) -> CgptMatrix {
    transform(m, &RigidMotion::translation(z))
}

/// CGPTs of the target rotated by `θ` about the origin: `R(nθ) 𝐌_mn R(mθ)ᵀ`.
pub fn rotate(m: &CgptMatrix, theta: f64) -> CgptMatrix {
    let mut out = CgptMatrix::zeros(m.order);
    for a in 1..=m.order {
        for b in 1..=m.order {
            let blk = rot(b as f64 * theta) * m.block(a, b) * rot(a as f64 * theta).transpose();
            out.set_block(a, b, &blk);
        }
    }
    out
}

/// CGPTs of the target scaled by `s > 0` about the origin: `s^{m+n} M_mn`.
pub fn scale(m: &CgptMatrix, s: f64) -> CgptMatrix {
    assert!(s > 0.0, "scale factor must be positive");
    let f = |b: &DMatrix<f64>| DMatrix::from_fn(m.order, m.order, |i, j| b[(i, j)] * s.powi((i + j + 2) as i32));
    CgptMatrix { order: m.order, cc: f(&m.cc), cs: f(&m.cs), sc: f(&m.sc), ss: f(&m.ss) }
}

fn rot(t: f64) -> Matrix2<f64> {
    let (s, c) = t.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Translation through the real block double sum
/// `Σ_{k≤m, r≤n} r_z^{m−k} r_z^{n−r} binom(m,k) binom(n,r) R((n−r)θ_z) 𝐌_kr R((m−k)θ_z)ᵀ`.
pub fn translate_blockwise(m: &CgptMatrix, z: Vec2) -> CgptMatrix {
    let (rz, tz) = (z.norm(), z.y.atan2(z.x));
    let mut out = CgptMatrix::zeros(m.order);
    for a in 1..=m.order {
        for b in 1..=m.order {
            let mut acc = Matrix2::zeros();
            for k in 1..=a {
                for r in 1..=b {
                    let coef = rz.powi((a - k + b - r) as i32) * (binomial(a, k) * binomial(b, r)) as f64;
                    acc += rot((b - r) as f64 * tz) * m.block(k, r) * rot((a - k) as f64 * tz).transpose() * coef;
                }
            }
            out.set_block(a, b, &acc);
        }
    }
    out
}
