//! Dense solves with conditioning diagnostics, and truncated pseudo-inverses.

use nalgebra::{DMatrix, SymmetricEigen, LU, SVD};

use crate::error::{Error, Result};

/// Condition numbers above this are logged as warnings.
pub const CONDITION_WARN: f64 = 1e10;

/// LU factorization that also tracks a 1-norm condition estimate.
pub struct Factorized {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    norm1: f64,
}

impl Factorized {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!("{}×{} system is not square", a.nrows(), a.ncols())));
        }
        let norm1 = column_sum_norm(&a);
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::Singular("LU factorization hit an exact zero pivot".into()));
        }
        Ok(Factorized { lu, norm1 })
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.lu.solve(b).ok_or_else(|| Error::Singular("LU solve failed".into()))
    }

    /// Solves `Aᵀx = b` with the factors of `PA = LU`.
    fn solve_transpose(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let u = self.lu.u();
        let l = self.lu.l();
        let mut x = b.clone();
        u.tr_solve_upper_triangular_mut(&mut x);
        l.tr_solve_lower_triangular_mut(&mut x);
        self.lu.p().inv_permute_rows(&mut x);
        x
    }

    /// Hager's estimate of `‖A‖₁‖A⁻¹‖₁`.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.norm1_dim();
        let mut x = DMatrix::from_element(n, 1, 1.0 / n as f64);
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = match self.solve(&x) {
                Ok(y) => y,
                Err(_) => return f64::INFINITY,
            };
            estimate = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transpose(&xi);
            let (jmax, zmax) = z.iter().enumerate().fold((0, 0.0f64), |acc, (j, v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
            let ztx: f64 = z.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.fill(0.0);
            x[jmax] = 1.0;
        }
        estimate * self.norm1
    }

    fn norm1_dim(&self) -> usize {
        self.lu.u().nrows()
    }
}

fn column_sum_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Outcome of a dense solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: DMatrix<f64>,
    pub condition: f64,
    /// max over columns of ‖Ax − b‖ / ‖b‖
    pub relative_residual: f64,
}

/// Solves `AX = B` by LU with partial pivoting, estimating the condition
/// number and the achieved residual.
pub fn solve_dense(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SolveReport> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!("matrix has {} rows, right-hand side {}", a.nrows(), b.nrows())));
    }
    let f = Factorized::new(a.clone())?;
    let mut x = f.solve(b)?;
    // One step of refinement recovers most of what pivot growth costs.
    let r = b - a * &x;
    x += f.solve(&r)?;
    let condition = f.condition_estimate();
    if !condition.is_finite() {
        return Err(Error::Singular("condition estimate is not finite".into()));
    }
    if condition > CONDITION_WARN {
        log::warn!("ill-conditioned system: condition estimate {condition:.3e}");
    }
    let resid = b - a * &x;
    let relative_residual = (0..b.ncols())
        .map(|j| {
            let bn = b.column(j).norm();
            if bn == 0.0 {
                resid.column(j).norm()
            } else {
                resid.column(j).norm() / bn
            }
        })
        .fold(0.0, f64::max);
    Ok(SolveReport { solution: x, condition, relative_residual })
}

/// Pseudo-inverse via SVD, dropping singular values below `rel_tol·σ_max`.
/// Returns the pseudo-inverse and the retained rank.
pub fn truncated_pinv(a: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * smax;
    let rank = svd.singular_values.iter().filter(|s| **s > cut && **s > 0.0).count();
    if rank < svd.singular_values.len() {
        log::warn!("pseudo-inverse truncated {} of {} singular values", svd.singular_values.len() - rank, svd.singular_values.len());
    }
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut pinv = DMatrix::zeros(a.ncols(), a.nrows());
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > cut && *s > 0.0 {
            pinv += vt.row(k).transpose() * u.column(k).transpose() / *s;
        }
    }
    (pinv, rank)
}

/// Truncated eigendecomposition of a symmetric positive semi-definite
/// matrix after symmetric Jacobi scaling, reusable across right-hand sides.
pub struct SpdSolver {
    scaled: DMatrix<f64>,
    d: Vec<f64>,
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
    cut: f64,
    rank: usize,
}

impl SpdSolver {
    /// Eigenvalues below `max(rel_tol, 64ε)·λ_max` of the scaled matrix are discarded.
    pub fn new(g: &DMatrix<f64>, rel_tol: f64) -> Self {
        let n = g.nrows();
        let d: Vec<f64> = (0..n).map(|i| if g[(i, i)] > 0.0 { 1.0 / g[(i, i)].sqrt() } else { 1.0 }).collect();
        let scaled = DMatrix::from_fn(n, n, |i, j| g[(i, j)] * d[i] * d[j]);
        let scaled = (&scaled + scaled.transpose()) * 0.5;
        let eig = SymmetricEigen::new(scaled.clone());
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let cut = rel_tol.max(64.0 * f64::EPSILON) * lmax;
        let rank = eig.eigenvalues.iter().filter(|l| **l > cut).count();
        if rank < n {
            log::warn!("normal equations are rank deficient: kept {rank} of {n} directions");
        }
        SpdSolver { scaled, d, eig, cut, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Ratio of the largest to the smallest retained scaled eigenvalue.
    pub fn condition(&self) -> f64 {
        let kept: Vec<f64> = self.eig.eigenvalues.iter().cloned().filter(|l| *l > self.cut).collect();
        let hi = kept.iter().cloned().fold(0.0, f64::max);
        let lo = kept.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    fn apply_pinv(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut proj = self.eig.eigenvectors.transpose() * rhs;
        for (k, l) in self.eig.eigenvalues.iter().enumerate() {
            let f = if *l > self.cut { 1.0 / l } else { 0.0 };
            proj.row_mut(k).scale_mut(f);
        }
        &self.eig.eigenvectors * proj
    }

    /// Minimum-norm solution in the scaled variables, with two refinement steps.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.d.len();
        let bs = DMatrix::from_fn(n, b.ncols(), |i, j| b[(i, j)] * self.d[i]);
        let mut y = self.apply_pinv(&bs);
        for _ in 0..2 {
            let r = &bs - &self.scaled * &y;
            y += self.apply_pinv(&r);
        }
        DMatrix::from_fn(n, b.ncols(), |i, j| y[(i, j)] * self.d[i])
    }
}

/// One-shot [`SpdSolver`]: returns the solution and the retained rank.
pub fn solve_spd_truncated(g: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let s = SpdSolver::new(g, rel_tol);
    (s.solve(b), s.rank())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_estimate_of_diagonal_is_exact() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-3, 5.0]));
        let f = Factorized::new(a).unwrap();
        assert!((f.condition_estimate() - 5e3).abs() < 1e-9);
    }

    #[test]
    fn condition_estimate_brackets_true_value() {
        let a = DMatrix::from_fn(6, 6, |i, j| 1.0 / (i + j + 1) as f64 + if i == j { 0.1 } else { 0.0 });
        let inv = a.clone().try_inverse().unwrap();
        let exact = column_sum_norm(&a) * column_sum_norm(&inv);
        let est = Factorized::new(a).unwrap().condition_estimate();
        assert!(est <= exact * (1.0 + 1e-9) && est >= exact / 3.0, "{est} vs {exact}");
    }

    #[test]
    fn transpose_solve_matches_explicit_transpose() {
        let a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 + if i == j { 4.0 } else { 0.0 });
        let b = DMatrix::from_fn(5, 1, |i, _| i as f64 - 2.0);
        let x = Factorized::new(a.clone()).unwrap().solve_transpose(&b);
        assert!((a.transpose() * x - b).norm() < 1e-12);
    }

    #[test]
    fn solve_reports_tiny_residual() {
        let a = DMatrix::from_fn(8, 8, |i, j| if i == j { 3.0 } else { 1.0 / (1 + i + 2 * j) as f64 });
        let b = DMatrix::from_fn(8, 2, |i, j| (i + j) as f64);
        let r = solve_dense(&a, &b).unwrap();
        assert!(r.relative_residual < 1e-14);
        assert!(r.condition > 1.0);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve_dense(&a, &DMatrix::from_element(2, 1, 1.0)).is_err());
    }

    #[test]
    fn pinv_of_rank_deficient_matrix() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let (p, rank) = truncated_pinv(&a, 1e-10);
        assert_eq!(rank, 1);
        assert!((&a * &p * &a - &a).norm() < 1e-12);
    }

    #[test]
    fn spd_solve_agrees_with_direct_inverse() {
        let m = DMatrix::from_fn(6, 4, |i, j| ((i + 1) as f64).powi(j as i32) * 10f64.powi(j as i32 - 2));
        let g = m.transpose() * &m;
        let b = DMatrix::from_fn(4, 1, |i, _| 1.0 + i as f64);
        let (x, rank) = solve_spd_truncated(&g, &b, 1e-14);
        assert_eq!(rank, 4);
        assert!((&g * &x - &b).norm() < 1e-9 * b.norm());
    }
}
