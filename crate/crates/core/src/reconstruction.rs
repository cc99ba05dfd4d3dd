//! Least-squares recovery of CGPTs from an MSR matrix at a known center.
//!
//! Every measurement is `s_pᵀ Q g_{p,r}` where `Q` is the `2K × 2K` matrix
//! whose `(n, m)` block is the CGPT block `(m, n)`, `s_p` holds the source
//! coefficients of pose `p` and `g_{p,r}` the receiver coefficients of
//! receptor `r` in that pose. With a shared receptor set this is the
//! factored model `S Q Gᵀ`; receptors carried by the fish give each pose its
//! own `G_p`, and the normal equations are assembled as
//! `Σ_p (G_pᵀG_p) ⊗ (s_p s_pᵀ) vec(Q) = Σ_p (G_pᵀ y_p) ⊗ s_p`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cgpt_algebra::translate;
use crate::cgpt_engine::{CgptMatrix, MAX_ORDER};
use crate::error::{csv_error, Error, Result};
use crate::geometry::Vec2;
use crate::linalg::{truncated_pinv, SpdSolver};
use crate::sensing_sim::{
    fish_poses, real_pairs, receiver_coefficients, source_coefficients, AcquisitionConfig, LayoutMode, TargetFootprint,
};

/// Singular values below this fraction of the largest are truncated.
pub const RANK_TOL: f64 = 1e-10;

/// Receiver coefficient matrices, one row per receptor.
#[derive(Clone, Debug)]
pub enum ReceiverFactors {
    Shared(DMatrix<f64>),
    PerPose(Vec<DMatrix<f64>>),
}

#[derive(Clone, Debug)]
pub struct AcquisitionOperator {
    pub order: usize,
    pub center: Vec2,
    /// `n_positions × 2K`
    pub sources: DMatrix<f64>,
    pub receivers: ReceiverFactors,
}

/// Assembles source and receiver coefficients of every pose at order `order`.
pub fn build_acquisition(config: &AcquisitionConfig, target: &TargetFootprint, order: usize) -> Result<AcquisitionOperator> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidOrder { order, reason: "acquisition order must lie in 1..=16" });
    }
    let poses = fish_poses(config, target)?;
    let z = config.center();
    let nearest = poses
        .iter()
        .flat_map(|p| p.receptors.iter())
        .map(|x| (x - z).norm())
        .fold(f64::INFINITY, f64::min);
    if nearest < 1.05 * target.radius {
        log::warn!("receptor at distance {nearest:.3} from the center barely clears the target radius {:.3}", target.radius);
    }
    let mut sources = DMatrix::zeros(poses.len(), 2 * order);
    for (p, pose) in poses.iter().enumerate() {
        let s = real_pairs(&source_coefficients(pose.source, pose.dipole, z, order)?);
        sources.row_mut(p).copy_from_slice(&s);
    }
    let g_of = |pts: &[Vec2]| {
        let mut g = DMatrix::zeros(pts.len(), 2 * order);
        for (r, x) in pts.iter().enumerate() {
            g.row_mut(r).copy_from_slice(&real_pairs(&receiver_coefficients(*x, z, order)));
        }
        g
    };
    let receivers = match config.receptor_layout.mode {
        LayoutMode::Stationary => ReceiverFactors::Shared(g_of(&poses[0].receptors)),
        LayoutMode::Attached => ReceiverFactors::PerPose(poses.iter().map(|p| g_of(&p.receptors)).collect()),
    };
    let op = AcquisitionOperator { order, center: z, sources, receivers };
    let (_, rank) = truncated_pinv(&op.sources, RANK_TOL);
    if rank < 2 * order {
        log::warn!("source factor has rank {rank} < {}", 2 * order);
    }
    Ok(op)
}

/// `Q[(n, a), (m, b)] = block(m, n)[a][b]`.
pub fn q_matrix(m: &CgptMatrix) -> DMatrix<f64> {
    let k = m.order;
    let mut q = DMatrix::zeros(2 * k, 2 * k);
    for a in 1..=k {
        for b in 1..=k {
            q.fixed_view_mut::<2, 2>(2 * (b - 1), 2 * (a - 1)).copy_from(&m.block(a, b));
        }
    }
    q
}

/// Inverse of [`q_matrix`].
pub fn cgpt_from_q(q: &DMatrix<f64>) -> CgptMatrix {
    let k = q.nrows() / 2;
    let mut m = CgptMatrix::zeros(k);
    for a in 1..=k {
        for b in 1..=k {
            m.set_block(a, b, &q.fixed_view::<2, 2>(2 * (b - 1), 2 * (a - 1)).into_owned());
        }
    }
    m
}

impl AcquisitionOperator {
    pub fn n_positions(&self) -> usize {
        self.sources.nrows()
    }

    pub fn n_receptors(&self) -> usize {
        match &self.receivers {
            ReceiverFactors::Shared(g) => g.nrows(),
            ReceiverFactors::PerPose(gs) => gs.first().map_or(0, |g| g.nrows()),
        }
    }

    fn receiver(&self, p: usize) -> &DMatrix<f64> {
        match &self.receivers {
            ReceiverFactors::Shared(g) => g,
            ReceiverFactors::PerPose(gs) => &gs[p],
        }
    }

    /// MSR of CGPTs `m` given about the origin, at exactly this operator's order.
    pub fn apply(&self, m: &CgptMatrix) -> Result<DMatrix<f64>> {
        if m.order != self.order {
            return Err(Error::DimensionMismatch(format!("CGPT order {} but operator order {}", m.order, self.order)));
        }
        let q = q_matrix(&translate(m, -self.center));
        let qt = q.transpose();
        let mut out = DMatrix::zeros(self.n_positions(), self.n_receptors());
        for p in 0..self.n_positions() {
            let coupled = &qt * self.sources.row(p).transpose();
            out.row_mut(p).copy_from(&(self.receiver(p) * coupled).transpose());
        }
        Ok(out)
    }

    fn check_msr(&self, msr: &DMatrix<f64>) -> Result<()> {
        if msr.nrows() != self.n_positions() || msr.ncols() != self.n_receptors() {
            return Err(Error::DimensionMismatch(format!(
                "MSR is {}×{} but the operator expects {}×{}",
                msr.nrows(),
                msr.ncols(),
                self.n_positions(),
                self.n_receptors()
            )));
        }
        Ok(())
    }
}

/// Factorized normal equations of an operator, reusable across MSR matrices.
pub struct Reconstructor<'a> {
    op: &'a AcquisitionOperator,
    solver: SpdSolver,
}

/// Recovered CGPTs (about the origin) with solver diagnostics.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub cgpt: CgptMatrix,
    pub rank: usize,
    pub condition: f64,
}

impl<'a> Reconstructor<'a> {
    pub fn new(op: &'a AcquisitionOperator) -> Self {
        let k2 = 2 * op.order;
        let mut gram = DMatrix::zeros(k2 * k2, k2 * k2);
        for p in 0..op.n_positions() {
            let s = op.sources.row(p).transpose();
            let g = op.receiver(p);
            gram += (g.transpose() * g).kronecker(&(&s * s.transpose()));
        }
        // Eigenvalues of the Gram matrix are squared singular values.
        let solver = SpdSolver::new(&gram, RANK_TOL * RANK_TOL);
        Reconstructor { op, solver }
    }

    pub fn reconstruct(&self, msr: &DMatrix<f64>) -> Result<Reconstruction> {
        self.op.check_msr(msr)?;
        let k2 = 2 * self.op.order;
        let mut rhs = DVector::zeros(k2 * k2);
        for p in 0..self.op.n_positions() {
            let s = self.op.sources.row(p).transpose();
            let gy = self.op.receiver(p).transpose() * msr.row(p).transpose();
            rhs += gy.kronecker(&s);
        }
        let x = self.solver.solve(&DMatrix::from_column_slice(k2 * k2, 1, rhs.as_slice()));
        let q = DMatrix::from_column_slice(k2, k2, x.as_slice());
        Ok(Reconstruction {
            cgpt: translate(&cgpt_from_q(&q), self.op.center),
            rank: self.solver.rank(),
            condition: self.solver.condition(),
        })
    }
}

/// Least-squares CGPTs `argmin ‖model(M) − MSR‖_F`.
pub fn reconstruct_cgpt(msr: &DMatrix<f64>, op: &AcquisitionOperator) -> Result<Reconstruction> {
    Reconstructor::new(op).reconstruct(msr)
}

/// `pinv(S)·MSR·pinv(G)ᵀ`, available when every pose shares one receptor set.
pub fn reconstruct_factorwise(msr: &DMatrix<f64>, op: &AcquisitionOperator) -> Result<CgptMatrix> {
    op.check_msr(msr)?;
    let ReceiverFactors::Shared(g) = &op.receivers else {
        return Err(Error::InvalidConfig("factor-wise solve needs a receptor set shared by all poses".into()));
    };
    let (ps, _) = truncated_pinv(&op.sources, RANK_TOL);
    let (pg, _) = truncated_pinv(g, RANK_TOL);
    let q = ps * msr * pg.transpose();
    Ok(translate(&cgpt_from_q(&q), op.center))
}

/// Relative error of the leading `k × k` truncation for `k = 1..=estimate.order`.
pub fn per_order_errors(estimate: &CgptMatrix, truth: &CgptMatrix) -> Result<Vec<f64>> {
    (1..=estimate.order).map(|k| estimate.relative_error_at_order(truth, k)).collect()
}

/// Entrywise mean of CGPT estimates of equal order.
pub fn average_cgpts(estimates: &[CgptMatrix]) -> Result<CgptMatrix> {
    let first = estimates.first().ok_or_else(|| Error::InvalidConfig("no estimates to average".into()))?;
    let mut acc = CgptMatrix::zeros(first.order);
    for e in estimates {
        if e.order != first.order {
            return Err(Error::DimensionMismatch("estimates have different orders".into()));
        }
        acc.cc += &e.cc;
        acc.cs += &e.cs;
        acc.sc += &e.sc;
        acc.ss += &e.ss;
    }
    let f = 1.0 / estimates.len() as f64;
    for b in [&mut acc.cc, &mut acc.cs, &mut acc.sc, &mut acc.ss] {
        *b *= f;
    }
    Ok(acc)
}

/// One row of the reconstruction diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderDiagnostic {
    pub order: usize,
    pub relative_error: f64,
    pub sigma0: f64,
    pub trials: usize,
}

pub fn write_diagnostics_csv(path: &Path, rows: &[OrderDiagnostic]) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        out.serialize(r).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing_sim::ReceptorLayout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(order: usize, seed: u64) -> CgptMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut block = || DMatrix::from_fn(order, order, |i, j| rng.random_range(-1.0..1.0) * 0.5f64.powi((i + j) as i32));
        let mut m = CgptMatrix { order, cc: block(), cs: block(), sc: block(), ss: block() };
        // symmetric like a physical CGPT
        m.cc = (&m.cc + m.cc.transpose()) * 0.5;
        m.ss = (&m.ss + m.ss.transpose()) * 0.5;
        m.sc = m.cs.transpose();
        m
    }

    fn config(mode: LayoutMode) -> AcquisitionConfig {
        AcquisitionConfig {
            n_positions: 40,
            n_receptors: 24,
            target_center: [0.1, -0.05],
            receptor_layout: ReceptorLayout { half_angle: std::f64::consts::PI, radial_offset: 0.0, mode },
            ..Default::default()
        }
    }

    const FOOT: TargetFootprint = TargetFootprint { diameter: 1.0, radius: 0.6 };

    #[test]
    fn q_layout_round_trip() {
        let m = sample(3, 1);
        let q = q_matrix(&m);
        assert_eq!(q[(2, 0)], m.cc[(0, 1)]);
        assert_eq!(q[(3, 0)], m.cs[(0, 1)]);
        assert_eq!(cgpt_from_q(&q), m);
    }

    #[test]
    fn single_order_has_two_columns() {
        let op = build_acquisition(&config(LayoutMode::Attached), &FOOT, 1).unwrap();
        assert_eq!(op.sources.ncols(), 2);
    }

    #[test]
    fn entries_are_the_bilinear_form() {
        let cfg = config(LayoutMode::Attached);
        let op = build_acquisition(&cfg, &FOOT, 3).unwrap();
        let m = sample(3, 2);
        let msr = op.apply(&m).unwrap();
        let q = q_matrix(&translate(&m, -op.center));
        let ReceiverFactors::PerPose(gs) = &op.receivers else { panic!() };
        for (p, r) in [(0, 0), (7, 11), (39, 23)] {
            let e = (op.sources.row(p) * &q * gs[p].row(r).transpose())[(0, 0)];
            assert!((e - msr[(p, r)]).abs() < 1e-12 * msr.norm());
        }
        assert_eq!(op.apply(&CgptMatrix::zeros(3)).unwrap(), DMatrix::zeros(40, 24));
    }

    #[test]
    fn full_orbit_gives_full_rank_sources() {
        let cfg = AcquisitionConfig { n_positions: 500, n_receptors: 4, ..Default::default() };
        let op = build_acquisition(&cfg, &FOOT, 5).unwrap();
        let sv = op.sources.clone().singular_values();
        assert!(sv.min() > 1e-8 * sv.max());
    }

    #[test]
    fn matched_order_round_trip_is_exact() {
        for mode in [LayoutMode::Attached, LayoutMode::Stationary] {
            let op = build_acquisition(&config(mode), &FOOT, 3).unwrap();
            let m = sample(3, 3);
            let rec = reconstruct_cgpt(&op.apply(&m).unwrap(), &op).unwrap();
            assert!(rec.cgpt.relative_error(&m).unwrap() < 1e-10);
            assert_eq!(rec.rank, 36);
        }
    }

    #[test]
    fn factorwise_and_vectorized_agree_on_shared_receptors() {
        let op = build_acquisition(&config(LayoutMode::Stationary), &FOOT, 3).unwrap();
        let m = sample(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut msr = op.apply(&m).unwrap();
        let scale = msr.norm() / (msr.len() as f64).sqrt();
        msr.iter_mut().for_each(|v| *v += 0.05 * scale * rng.random_range(-1.0..1.0));
        let a = reconstruct_cgpt(&msr, &op).unwrap().cgpt;
        let b = reconstruct_factorwise(&msr, &op).unwrap();
        assert!(a.relative_error(&b).unwrap() < 1e-9);
    }

    #[test]
    fn factorwise_needs_shared_receptors() {
        let op = build_acquisition(&config(LayoutMode::Attached), &FOOT, 2).unwrap();
        assert!(reconstruct_factorwise(&DMatrix::zeros(40, 24), &op).is_err());
    }

    #[test]
    fn estimator_is_linear() {
        let op = build_acquisition(&config(LayoutMode::Attached), &FOOT, 3).unwrap();
        let msr = DMatrix::from_fn(40, 24, |i, j| ((i * 13 + j * 5) % 17) as f64 * 1e-3);
        let r = Reconstructor::new(&op);
        let a = r.reconstruct(&msr).unwrap().cgpt;
        let b = r.reconstruct(&(&msr * -2.5)).unwrap().cgpt;
        let mut a_scaled = a.clone();
        for blk in [&mut a_scaled.cc, &mut a_scaled.cs, &mut a_scaled.sc, &mut a_scaled.ss] {
            *blk *= -2.5;
        }
        assert!(b.sub(&a_scaled).unwrap().frobenius() <= 1e-12 * a_scaled.frobenius());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let op = build_acquisition(&config(LayoutMode::Attached), &FOOT, 2).unwrap();
        assert!(matches!(reconstruct_cgpt(&DMatrix::zeros(3, 3), &op), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn averaging_and_order_errors() {
        let m = sample(3, 6);
        assert_eq!(average_cgpts(&[m.clone(), m.clone()]).unwrap(), m);
        let errs = per_order_errors(&m, &m).unwrap();
        assert_eq!(errs, vec![0.0; 3]);
    }
}
