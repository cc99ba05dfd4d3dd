//! Oracles shared by the integration tests. They use only closed forms and
//! small dense solves, never the boundary integral machinery.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

/// Diagonal CGPT `M^cc_mm = M^ss_mm` of concentric disks, from the radial
/// ODE. `layers` lists `(radius, conductivity)` from the outside in, with
/// strictly decreasing radii; the background has conductivity 1.
///
/// Outside: `r^m + D r^{−m}`; annulus `j`: `B_j r^m + C_j r^{−m}`; core:
/// `A r^m`. Continuity of `u` and `k ∂_r u` at every radius fixes the
/// coefficients and `M_mm = −2πm·D`.
pub fn radial_cgpt(layers: &[(f64, f64)], m: usize) -> f64 {
    let n_if = layers.len();
    // unknowns: D, then (B_j, C_j) for each annulus, then A
    let n = 2 * n_if;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let mf = m as f64;
    let col_outer = |j: usize| if j == 0 { None } else { Some(1 + 2 * (j - 1)) };
    for (j, &(r, k_in)) in layers.iter().enumerate() {
        let k_out = if j == 0 { 1.0 } else { layers[j - 1].1 };
        let (rp, rm) = (r.powf(mf), r.powf(-mf));
        let (drp, drm) = (mf * r.powf(mf - 1.0), -mf * r.powf(-mf - 1.0));
        let (row_u, row_f) = (2 * j, 2 * j + 1);
        // outside side of interface j
        match col_outer(j) {
            None => {
                b[row_u] -= rp;
                b[row_f] -= k_out * drp;
                a[(row_u, 0)] += rm;
                a[(row_f, 0)] += k_out * drm;
            }
            Some(c) => {
                a[(row_u, c)] += rp;
                a[(row_u, c + 1)] += rm;
                a[(row_f, c)] += k_out * drp;
                a[(row_f, c + 1)] += k_out * drm;
            }
        }
        // inside side, subtracted
        if j + 1 == n_if {
            a[(row_u, n - 1)] -= rp;
            a[(row_f, n - 1)] -= k_in * drp;
        } else {
            let c = 1 + 2 * j;
            a[(row_u, c)] -= rp;
            a[(row_u, c + 1)] -= rm;
            a[(row_f, c)] -= k_in * drp;
            a[(row_f, c + 1)] -= k_in * drm;
        }
    }
    let x = a.lu().solve(&b).expect("radial system is regular");
    -2.0 * PI * mf * x[0]
}

/// Conductivity of the homogeneous unit disk with the same first-order
/// response as `layers`.
pub fn effective_conductivity(layers: &[(f64, f64)]) -> f64 {
    let r = layers[0].0;
    let t = radial_cgpt(layers, 1) / (2.0 * PI * r * r);
    (1.0 + t) / (1.0 - t)
}
