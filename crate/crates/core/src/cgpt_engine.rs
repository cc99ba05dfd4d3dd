//! CGPTs of homogeneous and two-phase targets from the free-space
//! transmission problem.
//!
//! The potential is represented as `u = h + S_outer[ψ] + S_inner[φ]` with a
//! harmonic background `h = Re(w^n)` or `Im(w^n)`, `w = x − c`. Flux
//! continuity on each interface gives a second-kind system for `(ψ, φ)`,
//! and the CGPTs are the moments of the densities against `Re(w^m)`,
//! `Im(w^m)`. Densities are left un-normalized by the contrast so that an
//! inner interface without contrast carries exactly zero density.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary_ops::{normal_derivative_coupling, np_adjoint};
use crate::error::{Error, Result};
use crate::geometry::{build_target_curves, Curve, RigidMotion, ShapeSpec, Vec2};
use crate::linalg::solve_dense;

/// Largest supported expansion order (binomials stay exact in `u64`).
pub const MAX_ORDER: usize = 16;

/// Default number of quadrature nodes per interface.
pub const DEFAULT_NODES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Harmonic {
    Cos,
    Sin,
}

/// Point about which harmonic backgrounds and moments are expanded.
///
/// Results are always reported about the origin; expanding about the
/// centroid and translating back keeps `|w|^n` small at high orders.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ExpansionCenter {
    #[default]
    Centroid,
    Origin,
}

/// Piecewise-constant conductivity inclusion in a unit background.
#[derive(Clone, Debug)]
pub struct ConductivityTarget {
    pub id: String,
    pub outer: Curve,
    pub inner: Option<Curve>,
    /// conductivity between the outer and inner interfaces (or of the whole inclusion)
    pub k1: f64,
    /// conductivity inside the inner interface
    pub k2: Option<f64>,
}

impl ConductivityTarget {
    pub fn from_spec(id: impl Into<String>, spec: &ShapeSpec, n_nodes: usize) -> Result<Self> {
        let curves = build_target_curves(spec, n_nodes)?;
        Ok(ConductivityTarget { id: id.into(), outer: curves.outer, inner: curves.inner, k1: spec.k1, k2: spec.k2 })
    }

    pub fn homogeneous(id: impl Into<String>, outer: Curve, k: f64) -> Self {
        ConductivityTarget { id: id.into(), outer, inner: None, k1: k, k2: None }
    }

    pub fn is_coated(&self) -> bool {
        self.inner.is_some()
    }

    pub fn apply_motion(&self, m: &RigidMotion) -> Self {
        ConductivityTarget {
            id: self.id.clone(),
            outer: self.outer.apply_motion(m),
            inner: self.inner.as_ref().map(|c| c.apply_motion(m)),
            k1: self.k1,
            k2: self.k2,
        }
    }

    fn validate(&self) -> Result<()> {
        check_contrast("k1", self.k1, 1.0)?;
        match (&self.inner, self.k2) {
            (Some(_), Some(k2)) => {
                if !(k2 > 0.0 && k2.is_finite()) {
                    return Err(Error::InvalidContrast(format!("k2 must be positive, got {k2}")));
                }
                Ok(())
            }
            (None, None) => Ok(()),
            _ => Err(Error::InvalidContrast("inner curve and k2 must be given together".into())),
        }
    }
}

fn check_contrast(name: &str, k: f64, background: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidContrast(format!("{name} must be positive and finite, got {k}")));
    }
    if (k - background).abs() < 1e-12 {
        return Err(Error::InvalidContrast(format!("{name} = {k} has no contrast; the contrast parameter is infinite")));
    }
    Ok(())
}

/// Boundary densities of one transmission solve.
#[derive(Clone, Debug)]
pub struct Densities {
    pub outer: Vec<f64>,
    pub inner: Option<Vec<f64>>,
}

/// Real CGPT blocks of order `K`; entry `(m−1, n−1)` holds index `(m, n)`.
///
/// `cs` pairs the `Re(z^m)` moment with the `Im(z^n)` background, and so on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "CgptJson", try_from = "CgptJson")]
pub struct CgptMatrix {
    pub order: usize,
    pub cc: DMatrix<f64>,
    pub cs: DMatrix<f64>,
    pub sc: DMatrix<f64>,
    pub ss: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct CgptJson {
    order: usize,
    cc: Vec<Vec<f64>>,
    cs: Vec<Vec<f64>>,
    sc: Vec<Vec<f64>>,
    ss: Vec<Vec<f64>>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], k: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch(format!("block {name} is not {k}×{k}")));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

impl From<CgptMatrix> for CgptJson {
    fn from(m: CgptMatrix) -> Self {
        CgptJson { order: m.order, cc: to_rows(&m.cc), cs: to_rows(&m.cs), sc: to_rows(&m.sc), ss: to_rows(&m.ss) }
    }
}

impl TryFrom<CgptJson> for CgptMatrix {
    type Error = Error;
    fn try_from(j: CgptJson) -> Result<Self> {
        let k = j.order;
        let m = CgptMatrix {
            order: k,
            cc: from_rows(&j.cc, k, "cc")?,
            cs: from_rows(&j.cs, k, "cs")?,
            sc: from_rows(&j.sc, k, "sc")?,
            ss: from_rows(&j.ss, k, "ss")?,
        };
        if !m.is_finite() {
            return Err(Error::InvalidConfig("CGPT contains non-finite entries".into()));
        }
        Ok(m)
    }
}

impl CgptMatrix {
    pub fn zeros(order: usize) -> Self {
        let z = DMatrix::zeros(order, order);
        CgptMatrix { order, cc: z.clone(), cs: z.clone(), sc: z.clone(), ss: z }
    }

    pub fn is_finite(&self) -> bool {
        [&self.cc, &self.cs, &self.sc, &self.ss].iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Leading `k × k` part of every block.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.order {
            return Err(Error::InvalidOrder { order: k, reason: "truncation order must lie in 1..=order" });
        }
        let t = |b: &DMatrix<f64>| b.view((0, 0), (k, k)).into_owned();
        Ok(CgptMatrix { order: k, cc: t(&self.cc), cs: t(&self.cs), sc: t(&self.sc), ss: t(&self.ss) })
    }

    /// `sqrt(Σ blocks ‖·‖²_F)`.
    pub fn frobenius(&self) -> f64 {
        (self.cc.norm_squared() + self.cs.norm_squared() + self.sc.norm_squared() + self.ss.norm_squared()).sqrt()
    }

    pub fn sub(&self, other: &CgptMatrix) -> Result<CgptMatrix> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch(format!("orders {} and {} differ", self.order, other.order)));
        }
        Ok(CgptMatrix {
            order: self.order,
            cc: &self.cc - &other.cc,
            cs: &self.cs - &other.cs,
            sc: &self.sc - &other.sc,
            ss: &self.ss - &other.ss,
        })
    }

    /// Relative Frobenius distance `‖self − reference‖ / ‖reference‖`.
    pub fn relative_error(&self, reference: &CgptMatrix) -> Result<f64> {
        Ok(self.sub(reference)?.frobenius() / reference.frobenius())
    }

    /// Relative error restricted to indices `m, n ≤ k`.
    pub fn relative_error_at_order(&self, reference: &CgptMatrix, k: usize) -> Result<f64> {
        self.truncate(k)?.relative_error(&reference.truncate(k)?)
    }

    /// The 2×2 block `[[cc, sc], [cs, ss]]` at 1-based `(m, n)`.
    pub fn block(&self, m: usize, n: usize) -> nalgebra::Matrix2<f64> {
        let (i, j) = (m - 1, n - 1);
        nalgebra::Matrix2::new(self.cc[(i, j)], self.sc[(i, j)], self.cs[(i, j)], self.ss[(i, j)])
    }

    pub fn set_block(&mut self, m: usize, n: usize, b: &nalgebra::Matrix2<f64>) {
        let (i, j) = (m - 1, n - 1);
        self.cc[(i, j)] = b[(0, 0)];
        self.sc[(i, j)] = b[(0, 1)];
        self.cs[(i, j)] = b[(1, 0)];
        self.ss[(i, j)] = b[(1, 1)];
    }

    pub fn to_complex(&self) -> ComplexCgpt {
        to_complex(self)
    }
}

/// `N1 = (cc − ss) + i(cs + sc)`, `N2 = (cc + ss) + i(cs − sc)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexCgpt {
    pub n1: DMatrix<Complex64>,
    pub n2: DMatrix<Complex64>,
}

impl ComplexCgpt {
    pub fn order(&self) -> usize {
        self.n1.nrows()
    }

    /// Inverse of [`to_complex`].
    pub fn to_real(&self) -> CgptMatrix {
        let k = self.order();
        let (a, b) = (&self.n1, &self.n2);
        CgptMatrix {
            order: k,
            cc: DMatrix::from_fn(k, k, |i, j| 0.5 * (a[(i, j)].re + b[(i, j)].re)),
            ss: DMatrix::from_fn(k, k, |i, j| 0.5 * (b[(i, j)].re - a[(i, j)].re)),
            cs: DMatrix::from_fn(k, k, |i, j| 0.5 * (a[(i, j)].im + b[(i, j)].im)),
            sc: DMatrix::from_fn(k, k, |i, j| 0.5 * (a[(i, j)].im - b[(i, j)].im)),
        }
    }
}

pub fn to_complex(m: &CgptMatrix) -> ComplexCgpt {
    let k = m.order;
    ComplexCgpt {
        n1: DMatrix::from_fn(k, k, |i, j| {
            Complex64::new(m.cc[(i, j)] - m.ss[(i, j)], m.cs[(i, j)] + m.sc[(i, j)])
        }),
        n2: DMatrix::from_fn(k, k, |i, j| {
            Complex64::new(m.cc[(i, j)] + m.ss[(i, j)], m.cs[(i, j)] - m.sc[(i, j)])
        }),
    }
}

/// Diagnostics of a batched transmission solve.
#[derive(Clone, Debug)]
pub struct SolveDiagnostics {
    pub condition: f64,
    pub relative_residual: f64,
}

/// Assembled transmission operator of a target.
struct TransmissionSystem<'a> {
    interfaces: Vec<&'a Curve>,
    /// jump factor of the right-hand side on each interface: `k_in − k_out`
    contrasts: Vec<f64>,
    matrix: DMatrix<f64>,
}

impl<'a> TransmissionSystem<'a> {
    fn assemble(target: &'a ConductivityTarget) -> Result<Self> {
        target.validate()?;
        let k1 = target.k1;
        let outer = &target.outer;
        let no = outer.len();
        let ko = np_adjoint(outer).matrix;
        match (&target.inner, target.k2) {
            (None, _) => {
                let mut a = ko * -(k1 - 1.0);
                for i in 0..no {
                    a[(i, i)] += 0.5 * (k1 + 1.0);
                }
                Ok(TransmissionSystem { interfaces: vec![outer], contrasts: vec![k1 - 1.0], matrix: a })
            }
            (Some(inner), Some(k2)) => {
                let ni = inner.len();
                let ki = np_adjoint(inner).matrix;
                let c_oi = normal_derivative_coupling(inner, outer)?.matrix;
                let c_io = normal_derivative_coupling(outer, inner)?.matrix;
                let mut a = DMatrix::zeros(no + ni, no + ni);
                a.view_mut((0, 0), (no, no)).copy_from(&(ko * -(k1 - 1.0)));
                a.view_mut((0, no), (no, ni)).copy_from(&(c_oi * -(k1 - 1.0)));
                a.view_mut((no, 0), (ni, no)).copy_from(&(c_io * -(k2 - k1)));
                a.view_mut((no, no), (ni, ni)).copy_from(&(ki * -(k2 - k1)));
                for i in 0..no {
                    a[(i, i)] += 0.5 * (k1 + 1.0);
                }
                for i in 0..ni {
                    a[(no + i, no + i)] += 0.5 * (k1 + k2);
                }
                Ok(TransmissionSystem {
                    interfaces: vec![outer, inner],
                    contrasts: vec![k1 - 1.0, k2 - k1],
                    matrix: a,
                })
            }
            (Some(_), None) => Err(Error::InvalidContrast("coated target requires k2".into())),
        }
    }

    fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Right-hand sides for harmonics `1..=order` about `center`; column
    /// `2(n−1)` is the cosine harmonic of order `n`, `2(n−1)+1` the sine one.
    fn harmonic_rhs(&self, center: Vec2, order: usize) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.size(), 2 * order);
        let mut row = 0;
        for (iface, contrast) in self.interfaces.iter().zip(&self.contrasts) {
            for (p, nu) in iface.nodes().iter().zip(iface.normals()) {
                let w = Complex64::new(p.x - center.x, p.y - center.y);
                let dn = Complex64::new(nu.x, nu.y);
                let mut wpow = Complex64::new(1.0, 0.0);
                for n in 1..=order {
                    // ∂_ν w^n = n w^{n−1} (ν1 + iν2)
                    let g = wpow * dn * n as f64;
                    b[(row, 2 * (n - 1))] = contrast * g.re;
                    b[(row, 2 * (n - 1) + 1)] = contrast * g.im;
                    wpow *= w;
                }
                row += 1;
            }
        }
        b
    }

    fn split(&self, column: &[f64]) -> Densities {
        let no = self.interfaces[0].len();
        Densities {
            outer: column[..no].to_vec(),
            inner: if self.interfaces.len() > 1 { Some(column[no..].to_vec()) } else { None },
        }
    }
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidOrder { order, reason: "order must be at least 1" });
    }
    if order > MAX_ORDER {
        return Err(Error::InvalidOrder { order, reason: "order exceeds the supported maximum of 16" });
    }
    Ok(())
}

/// Densities for the background `Re(x^n)` or `Im(x^n)` (about the origin).
pub fn solve_transmission(target: &ConductivityTarget, n: usize, harmonic: Harmonic) -> Result<Densities> {
    check_order(n)?;
    let system = TransmissionSystem::assemble(target)?;
    let rhs = system.harmonic_rhs(Vec2::zeros(), n);
    let col = 2 * (n - 1) + usize::from(harmonic == Harmonic::Sin);
    let b = rhs.columns(col, 1).into_owned();
    let report = solve_dense(&system.matrix, &b)?;
    if report.relative_residual > 1e-12 {
        log::warn!("transmission residual {:.2e} above 1e-12", report.relative_residual);
    }
    Ok(system.split(report.solution.as_slice()))
}

/// CGPT of order `K` about the origin, expanded about the target centroid.
pub fn compute_cgpt(target: &ConductivityTarget, order: usize) -> Result<CgptMatrix> {
    compute_cgpt_about(target, order, ExpansionCenter::Centroid).map(|(m, _)| m)
}

/// CGPT of order `K` about the origin together with solver diagnostics.
pub fn compute_cgpt_about(
    target: &ConductivityTarget,
    order: usize,
    center: ExpansionCenter,
) -> Result<(CgptMatrix, SolveDiagnostics)> {
    check_order(order)?;
    let system = TransmissionSystem::assemble(target)?;
    let c = match center {
        ExpansionCenter::Centroid => target.outer.centroid(),
        ExpansionCenter::Origin => Vec2::zeros(),
    };
    let rhs = system.harmonic_rhs(c, order);
    let report = solve_dense(&system.matrix, &rhs)?;
    if report.relative_residual > 1e-12 {
        log::warn!("transmission residual {:.2e} above 1e-12 for target {}", report.relative_residual, target.id);
    }
    let mut m = CgptMatrix::zeros(order);
    let mut row = 0;
    for iface in &system.interfaces {
        for (p, w) in iface.nodes().iter().zip(iface.weights()) {
            let z = Complex64::new(p.x - c.x, p.y - c.y);
            let mut zpow = z;
            for mi in 0..order {
                for ni in 0..order {
                    let (dc, ds) = (report.solution[(row, 2 * ni)], report.solution[(row, 2 * ni + 1)]);
                    m.cc[(mi, ni)] += zpow.re * dc * w;
                    m.cs[(mi, ni)] += zpow.re * ds * w;
                    m.sc[(mi, ni)] += zpow.im * dc * w;
                    m.ss[(mi, ni)] += zpow.im * ds * w;
                }
                zpow *= z;
            }
            row += 1;
        }
    }
    let m = if c == Vec2::zeros() { m } else { crate::cgpt_algebra::translate(&m, c) };
    if !m.is_finite() {
        return Err(Error::Singular(format!("non-finite CGPT for target {}", target.id)));
    }
    Ok((m, SolveDiagnostics { condition: report.condition, relative_residual: report.relative_residual }))
}

/// CGPT of a single-phase target through the classical generalized
/// polarization tensors `M_αβ = ∫ y^α (λI − K*)⁻¹[ν·∇x^β] ds`,
/// `λ = (k+1)/(2(k−1))`, contracted with the monomial expansions of
/// `Re(z^m)` and `Im(z^m)`. Moments are taken about the origin.
pub fn compute_cgpt_homogeneous(target: &ConductivityTarget, order: usize) -> Result<CgptMatrix> {
    check_order(order)?;
    if target.is_coated() {
        return Err(Error::InvalidContrast("homogeneous route needs a single-phase target".into()));
    }
    let k = target.k1;
    check_contrast("k", k, 1.0)?;
    let lambda = contrast_lambda(k);
    let curve = &target.outer;
    let n = curve.len();
    let mut a = np_adjoint(curve).matrix * -1.0;
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    // Multi-indices (α1, α2) with 1 ≤ |α| ≤ K, grouped by degree.
    let indices: Vec<(usize, usize)> = (1..=order).flat_map(|d| (0..=d).map(move |j| (d - j, j))).collect();
    let (x, nu, w) = (curve.nodes(), curve.normals(), curve.weights());
    let powi = |v: f64, e: usize| if e == 0 { 1.0 } else { v.powi(e as i32) };
    let rhs = DMatrix::from_fn(n, indices.len(), |i, b| {
        let (b1, b2) = indices[b];
        let p = x[i];
        let dx = if b1 > 0 { b1 as f64 * powi(p.x, b1 - 1) * powi(p.y, b2) } else { 0.0 };
        let dy = if b2 > 0 { b2 as f64 * powi(p.x, b1) * powi(p.y, b2 - 1) } else { 0.0 };
        dx * nu[i].x + dy * nu[i].y
    });
    let report = solve_dense(&a, &rhs)?;
    let gpt = DMatrix::from_fn(indices.len(), indices.len(), |al, be| {
        let (a1, a2) = indices[al];
        (0..n).map(|i| powi(x[i].x, a1) * powi(x[i].y, a2) * report.solution[(i, be)] * w[i]).sum::<f64>()
    });
    let gpt = &gpt;
    // Re(z^m) = Σ_j C(m,j) Re(i^j) x^{m−j} y^j, Im likewise.
    let coeffs = |m: usize, real: bool| -> Vec<(usize, f64)> {
        (0..=m)
            .filter_map(|j| {
                let unit = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][j % 4];
                let c = binomial(m, j) as f64 * if real { unit.0 } else { unit.1 };
                let idx = indices.iter().position(|t| *t == (m - j, j)).expect("index table covers degree m");
                (c != 0.0).then_some((idx, c))
            })
            .collect()
    };
    let contract = |m: usize, nn: usize, rm: bool, rn: bool| -> f64 {
        let (cm, cn) = (coeffs(m, rm), coeffs(nn, rn));
        let cn = &cn;
        cm.iter().flat_map(|(i, a)| cn.iter().map(move |(j, b)| a * b * gpt[(*i, *j)])).sum()
    };
    let mut out = CgptMatrix::zeros(order);
    for m in 1..=order {
        for nn in 1..=order {
            out.cc[(m - 1, nn - 1)] = contract(m, nn, true, true);
            out.cs[(m - 1, nn - 1)] = contract(m, nn, true, false);
            out.sc[(m - 1, nn - 1)] = contract(m, nn, false, true);
            out.ss[(m - 1, nn - 1)] = contract(m, nn, false, false);
        }
    }
    Ok(out)
}

/// `λ = (k+1)/(2(k−1))`.
pub fn contrast_lambda(k: f64) -> f64 {
    (k + 1.0) / (2.0 * (k - 1.0))
}

/// Exact binomial coefficient; valid for `n ≤ 60`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}
