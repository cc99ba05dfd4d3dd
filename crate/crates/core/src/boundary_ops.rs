//! Nyström discretizations of the single-layer potential, the adjoint
//! Neumann–Poincaré operator and cross-curve normal derivatives.
//!
//! All operators act on nodal density values and already include the
//! quadrature weights, so `S·φ` approximates `∫ Γ(x_i, y) φ(y) ds_y` with
//! `Γ(x, y) = (1/2π) ln|x − y|`. Normals point outward on every curve.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::Curve;

const INV_2PI: f64 = 0.5 / PI;

/// Dense `N_tgt × N_src` operator between two curves.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub matrix: DMatrix<f64>,
    pub src_curve_id: String,
    pub tgt_curve_id: String,
}

impl DenseOperator {
    fn new(matrix: DMatrix<f64>, src: &Curve, tgt: &Curve) -> Self {
        debug_assert!(matrix.iter().all(|v| v.is_finite()));
        DenseOperator {
            matrix,
            src_curve_id: src.parametrization_id().to_string(),
            tgt_curve_id: tgt.parametrization_id().to_string(),
        }
    }

    pub fn apply(&self, density: &[f64]) -> Vec<f64> {
        assert_eq!(density.len(), self.matrix.ncols(), "density length does not match source nodes");
        let v = &self.matrix * nalgebra::DVector::from_column_slice(density);
        v.as_slice().to_vec()
    }
}

/// Single layer `S[φ](x) = ∫ Γ(x, y) φ(y) ds_y` from `src` to `tgt`.
///
/// With `tgt = None` the operator maps `src` to itself and the logarithmic
/// singularity is integrated with the spectrally accurate Kress splitting.
/// For a distinct target curve plain trapezoidal quadrature is used, which
/// requires the curves to be separated by at least half a node spacing.
pub fn single_layer(src: &Curve, tgt: Option<&Curve>) -> Result<DenseOperator> {
    match tgt {
        None => Ok(DenseOperator::new(single_layer_self(src), src, src)),
        Some(tgt) => {
            check_separation(src, tgt)?;
            let (xs, ys, w) = (tgt.nodes(), src.nodes(), src.weights());
            let m = DMatrix::from_fn(xs.len(), ys.len(), |i, j| INV_2PI * (xs[i] - ys[j]).norm().ln() * w[j]);
            Ok(DenseOperator::new(m, src, tgt))
        }
    }
}

fn single_layer_self(curve: &Curve) -> DMatrix<f64> {
    let nn = curve.len();
    let n = nn / 2;
    let h = 2.0 * PI / nn as f64;
    // Kress weights for ∫ ln(4 sin²((t−τ)/2)) f(τ) dτ, depending only on i − j.
    let r: Vec<f64> = (0..nn)
        .map(|d| {
            let s = d as f64 * h;
            let sum: f64 = (1..n).map(|m| (m as f64 * s).cos() / m as f64).sum();
            -2.0 * PI / n as f64 * sum - PI / (n * n) as f64 * (n as f64 * s).cos()
        })
        .collect();
    let (x, speed) = (curve.nodes(), curve.speeds());
    DMatrix::from_fn(nn, nn, |i, j| {
        let d = (i + nn - j) % nn;
        let smooth = if i == j {
            speed[i].ln()
        } else {
            let half = 0.5 * (d as f64 * h);
            0.5 * ((x[i] - x[j]).norm_squared() / (4.0 * half.sin().powi(2))).ln()
        };
        INV_2PI * (0.5 * r[d] + h * smooth) * speed[j]
    })
}

/// Adjoint Neumann–Poincaré operator
/// `K*[φ](x) = (1/2π) ∫ ⟨x − y, ν_x⟩/|x − y|² φ(y) ds_y`.
///
/// The kernel is smooth on a smooth curve; its diagonal limit is `κ(x)/4π`
/// with `κ > 0` on convex arcs.
pub fn np_adjoint(curve: &Curve) -> DenseOperator {
    let (x, nu, w, kappa) = (curve.nodes(), curve.normals(), curve.weights(), curve.curvature());
    let m = DMatrix::from_fn(curve.len(), curve.len(), |i, j| {
        if i == j {
            0.5 * INV_2PI * kappa[i] * w[i]
        } else {
            let d = x[i] - x[j];
            INV_2PI * d.dot(&nu[i]) / d.norm_squared() * w[j]
        }
    });
    DenseOperator::new(m, curve, curve)
}

/// `φ ↦ ∂/∂ν_x S_src[φ](x)` for `x` on a disjoint curve `tgt`, using the
/// outward normal of `tgt`.
pub fn normal_derivative_coupling(src: &Curve, tgt: &Curve) -> Result<DenseOperator> {
    check_separation(src, tgt)?;
    let (x, nu, y, w) = (tgt.nodes(), tgt.normals(), src.nodes(), src.weights());
    let m = DMatrix::from_fn(x.len(), y.len(), |i, j| {
        let d = x[i] - y[j];
        INV_2PI * d.dot(&nu[i]) / d.norm_squared() * w[j]
    });
    Ok(DenseOperator::new(m, src, tgt))
}

fn check_separation(src: &Curve, tgt: &Curve) -> Result<()> {
    let gap = src.min_distance_to(tgt);
    let spacing = src.weights().iter().cloned().fold(0.0, f64::max);
    if gap < 0.5 * spacing {
        return Err(Error::CurvesTooClose(gap));
    }
    if gap < 4.0 * spacing {
        log::warn!("curve separation {gap:.3e} is within {:.1} node spacings; quadrature accuracy degrades", gap / spacing);
    }
    Ok(())
}
