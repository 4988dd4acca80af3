//! Direct sparse solvers: Cholesky for SPD systems and pivoted LU for the
//! symmetric indefinite saddle systems.
//!
//! Every factorization is preceded by a symmetric equilibration
//! `S K S` (Ruiz scaling) and followed by a self-check solve against a
//! known vector, so numerically singular systems are reported instead of
//! returning garbage. Solves apply a few steps of iterative refinement.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::assembly::{CsrMatrix, Elimination};
use crate::error::{Error, Result};

const REFINEMENT_STEPS: usize = 3;
const SELF_CHECK_TOL: f64 = 1e-6;

enum Factor {
    Lu(Lu<usize, f64>),
    Llt(Llt<usize, f64>),
}

struct Factorization {
    matrix: CsrMatrix,
    scale: Vec<f64>,
    factor: Factor,
}

fn ruiz_scaling(m: &CsrMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut s = vec![1.0; n];
    for _ in 0..8 {
        let mut row_max = vec![0.0f64; n];
        for (i, j, v) in m.triplets() {
            row_max[i] = row_max[i].max((s[i] * v * s[j]).abs());
        }
        let mut done = true;
        for i in 0..n {
            if row_max[i] > 0.0 {
                let f = 1.0 / row_max[i].sqrt();
                if (f - 1.0).abs() > 1e-3 {
                    done = false;
                }
                s[i] *= f;
            }
        }
        if done {
            break;
        }
    }
    s
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl Factorization {
    fn new(matrix: &CsrMatrix, spd: bool) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::invalid(format!("cannot factor a non-square {matrix}")));
        }
        if matrix.triplets().any(|(_, _, v)| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let scale = ruiz_scaling(matrix);
        let trip: Vec<_> = matrix
            .triplets()
            .filter(|&(i, j, _)| !spd || i >= j)
            .map(|(i, j, v)| Triplet::new(i, j, scale[i] * v * scale[j]))
            .collect();
        let scaled = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::invalid(format!("sparse matrix construction failed: {e:?}")))?;
        let factor = if spd {
            Factor::Llt(
                scaled
                    .sp_cholesky(Side::Lower)
                    .map_err(|e| Error::SingularSystem(format!("Cholesky factorization failed: {e}")))?,
            )
        } else {
            Factor::Lu(
                scaled
                    .sp_lu()
                    .map_err(|e| Error::SingularSystem(format!("LU factorization of {matrix} failed: {e}")))?,
            )
        };
        let f = Factorization {
            matrix: matrix.clone(),
            scale,
            factor,
        };
        f.self_check()?;
        Ok(f)
    }

    fn self_check(&self) -> Result<()> {
        let n = self.matrix.nrows();
        if n == 0 {
            return Ok(());
        }
        // Deterministic pseudo-random probe.
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let e: Vec<f64> = (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        // Probe in scaled coordinates so the check is insensitive to units.
        let x_true: Vec<f64> = e.iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        let b = self.matrix.matvec(&x_true);
        let x = self.refined_solve(&b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem(
                "factorization self-check produced non-finite values; the system is singular".into(),
            ));
        }
        let err = x
            .iter()
            .zip(&x_true)
            .zip(&self.scale)
            .map(|((a, b), s)| ((a - b) / s).abs())
            .fold(0.0, f64::max);
        if !err.is_finite() || err > SELF_CHECK_TOL * inf_norm(&e) {
            return Err(Error::SingularSystem(format!(
                "factorization self-check failed (relative error {err:.3e}); the system is singular or numerically rank deficient"
            )));
        }
        Ok(())
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| self.scale[i] * b[i]);
        match &self.factor {
            Factor::Lu(lu) => lu.solve_in_place(rhs.as_mut()),
            Factor::Llt(llt) => llt.solve_in_place(rhs.as_mut()),
        }
        (0..n).map(|i| self.scale[i] * rhs[(i, 0)]).collect()
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let ax = self.matrix.matvec(x);
        ax.iter().zip(b).map(|(a, b)| b - a).collect()
    }

    fn refined_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.raw_solve(b);
        let mut r = self.residual(&x, b);
        let mut rnorm = inf_norm(&r);
        for _ in 0..REFINEMENT_STEPS {
            let scale = inf_norm(&self.matrix.abs_matvec(&x)).max(inf_norm(b));
            if !rnorm.is_finite() || rnorm <= 1e-15 * scale {
                break;
            }
            let dx = self.raw_solve(&r);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let rc = self.residual(&cand, b);
            let rcn = inf_norm(&rc);
            if !(rcn < rnorm) {
                break;
            }
            x = cand;
            r = rc;
            rnorm = rcn;
        }
        x
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.matrix.nrows() {
            return Err(Error::invalid(format!(
                "rhs length {} does not match system size {}",
                b.len(),
                self.matrix.nrows()
            )));
        }
        let x = self.refined_solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("solve produced non-finite values".into()));
        }
        Ok(x)
    }
}

/// Cholesky solver for symmetric positive definite matrices.
pub struct SpdSolver {
    inner: Factorization,
}

impl SpdSolver {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        Ok(SpdSolver {
            inner: Factorization::new(matrix, true)?,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.inner.solve(b)
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.inner.matrix
    }
}

/// Pivoted LU solver for general nonsingular matrices.
pub struct LuSolver {
    inner: Factorization,
}

impl LuSolver {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        Ok(LuSolver {
            inner: Factorization::new(matrix, false)?,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.inner.solve(b)
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.inner.matrix
    }
}

/// One-shot SPD solve.
pub fn solve_spd(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SpdSolver::new(a)?.solve(b)
}

/// `|b - A x| / max(1, |b|)` in the Euclidean norm.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    r / bn.max(1.0)
}

/// Generalized Stokes system
///
/// ```text
/// [ A   B^T  R^T ] [u  ]   [ f ]
/// [ B  -C    0   ] [xi ] = [-g ]
/// [ R   0    0   ] [lam]   [ 0 ]
/// ```
///
/// i.e. `A u + B^T xi = f` and `-B u + C xi = g`, with optional rigid-motion
/// constraint rows `R` and Dirichlet displacement values.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub c: CsrMatrix,
    pub constraints: Vec<Vec<f64>>,
    pub rhs_u: Vec<f64>,
    pub rhs_xi: Vec<f64>,
    /// Constrained displacement dofs and their values.
    pub dirichlet: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// Blockwise relative residuals `(u rows, xi rows, constraint rows)`.
    pub residuals: [f64; 3],
}

/// Factored saddle operator; the blocks and the Dirichlet dof set are fixed,
/// right-hand sides and Dirichlet values may change between solves.
pub struct SaddleSolver {
    nu: usize,
    nxi: usize,
    nc: usize,
    full: CsrMatrix,
    elimination: Elimination,
    solver: LuSolver,
}

impl SaddleSolver {
    pub fn new(
        a: &CsrMatrix,
        b: &CsrMatrix,
        c: &CsrMatrix,
        constraints: &[Vec<f64>],
        dirichlet_dofs: &[usize],
    ) -> Result<Self> {
        let nu = a.nrows();
        let nxi = c.nrows();
        let nc = constraints.len();
        if a.ncols() != nu || b.nrows() != nxi || b.ncols() != nu || c.ncols() != nxi {
            return Err(Error::invalid("inconsistent saddle block dimensions"));
        }
        if constraints.iter().any(|r| r.len() != nu) {
            return Err(Error::invalid("constraint row length must equal the displacement dimension"));
        }
        if dirichlet_dofs.iter().any(|&d| d >= nu) {
            return Err(Error::invalid("Dirichlet dof outside the displacement block"));
        }
        let n = nu + nxi + nc;
        let mut trip = Vec::with_capacity(a.nnz() + 2 * b.nnz() + c.nnz() + 2 * nc * nu);
        trip.extend(a.triplets());
        for (i, j, v) in b.triplets() {
            trip.push((nu + i, j, v));
            trip.push((j, nu + i, v));
        }
        trip.extend(c.triplets().map(|(i, j, v)| (nu + i, nu + j, -v)));
        for (k, row) in constraints.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((nu + nxi + k, j, v));
                    trip.push((j, nu + nxi + k, v));
                }
            }
        }
        let full = CsrMatrix::from_triplets(n, n, &trip);
        let elimination = Elimination::new(&full, dirichlet_dofs)?;
        let solver = LuSolver::new(&elimination.matrix).map_err(|e| match e {
            Error::SingularSystem(msg) => Error::IllPosed(format!(
                "generalized Stokes system is singular ({msg}); check that c0 > 0 and that rigid motions are removed"
            )),
            other => other,
        })?;
        Ok(SaddleSolver {
            nu,
            nxi,
            nc,
            full,
            elimination,
            solver,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nu, self.nxi, self.nc)
    }

    pub fn full_matrix(&self) -> &CsrMatrix {
        &self.full
    }

    pub fn solve(&self, rhs_u: &[f64], rhs_xi: &[f64], dirichlet: &[(usize, f64)]) -> Result<SaddleSolution> {
        if rhs_u.len() != self.nu || rhs_xi.len() != self.nxi {
            return Err(Error::invalid("saddle rhs block lengths do not match the system"));
        }
        let mut rhs = Vec::with_capacity(self.nu + self.nxi + self.nc);
        rhs.extend_from_slice(rhs_u);
        rhs.extend(rhs_xi.iter().map(|v| -v));
        rhs.extend(std::iter::repeat(0.0).take(self.nc));
        let reduced = self.elimination.rhs(&rhs, dirichlet);
        let x = self.solver.solve(&reduced)?;

        let kx = self.solver.matrix().matvec(&x);
        let akx = self.solver.matrix().abs_matvec(&x);
        let blocks = [0..self.nu, self.nu..self.nu + self.nxi, self.nu + self.nxi..x.len()];
        let mut residuals = [0.0; 3];
        for (k, range) in blocks.iter().enumerate() {
            let r: f64 = range.clone().map(|i| (kx[i] - reduced[i]).powi(2)).sum::<f64>().sqrt();
            let bn: f64 = range.clone().map(|i| reduced[i].powi(2)).sum::<f64>().sqrt();
            let an: f64 = range.clone().map(|i| akx[i].powi(2)).sum::<f64>().sqrt();
            residuals[k] = r / bn.max(an).max(f64::MIN_POSITIVE);
        }
        Ok(SaddleSolution {
            u: x[..self.nu].to_vec(),
            xi: x[self.nu..self.nu + self.nxi].to_vec(),
            multipliers: x[self.nu + self.nxi..].to_vec(),
            residuals,
        })
    }
}

/// One-shot saddle solve.
pub fn solve_saddle(sys: &SaddleSystem) -> Result<SaddleSolution> {
    let dofs: Vec<usize> = sys.dirichlet.iter().map(|d| d.0).collect();
    SaddleSolver::new(&sys.a, &sys.b, &sys.c, &sys.constraints, &dofs)?.solve(&sys.rhs_u, &sys.rhs_xi, &sys.dirichlet)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_two_by_two() {
        let x = solve_spd(&CsrMatrix::identity(3), &[1.0, -2.0, 3.5]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.5]);
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let x = solve_spd(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!(relative_residual(&a, &x, &[3.0, 3.0]) < 1e-15);
    }

    #[test]
    fn indefinite_rejected_by_cholesky() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(SpdSolver::new(&a), Err(Error::SingularSystem(_))));
        let x = LuSolver::new(&a).unwrap().solve(&[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_detected() {
        let a = CsrMatrix::from_dense(&[
            vec![1.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 1.0],
        ]);
        assert!(matches!(LuSolver::new(&a), Err(Error::SingularSystem(_))));
        assert!(matches!(SpdSolver::new(&a), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn badly_scaled_system_solved_accurately() {
        let a = CsrMatrix::from_dense(&[vec![1e8, 1.0], vec![1.0, 1e-6]]);
        let x = LuSolver::new(&a).unwrap().solve(&[1e8 + 2.0, 1.0 + 2e-6]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn small_saddle_with_dirichlet() {
        // A = 2I (2x2), B = [1 1], C = [1]
        let a = CsrMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let b = CsrMatrix::from_dense(&[vec![1.0, 1.0]]);
        let c = CsrMatrix::from_dense(&[vec![1.0]]);
        let sys = SaddleSystem {
            a: a.clone(),
            b: b.clone(),
            c: c.clone(),
            constraints: vec![],
            rhs_u: vec![0.0, 0.0],
            rhs_xi: vec![0.0],
            dirichlet: vec![],
        };
        let s = solve_saddle(&sys).unwrap();
        assert!(s.u.iter().chain(&s.xi).all(|v| *v == 0.0));

        // exact (u, xi) = ((1, 2), 3): f = A u + B^T xi, g = -B u + C xi
        let sys = SaddleSystem {
            rhs_u: vec![5.0, 7.0],
            rhs_xi: vec![0.0],
            dirichlet: vec![(0, 1.0)],
            ..sys
        };
        let s = solve_saddle(&sys).unwrap();
        assert!((s.u[0] - 1.0).abs() < 1e-14 && (s.u[1] - 2.0).abs() < 1e-14 && (s.xi[0] - 3.0).abs() < 1e-14);
        assert!(s.residuals.iter().all(|r| *r <= 1e-14));
    }

    #[test]
    fn constraint_rows_remove_kernel() {
        // A singular with kernel (1, 1); constraint u0 + u1 = 0 fixes it.
        let a = CsrMatrix::from_dense(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let b = CsrMatrix::zeros(1, 2);
        let c = CsrMatrix::identity(1);
        assert!(matches!(SaddleSolver::new(&a, &b, &c, &[], &[]), Err(Error::IllPosed(_))));
        let solver = SaddleSolver::new(&a, &b, &c, &[vec![1.0, 1.0]], &[]).unwrap();
        let s = solver.solve(&[1.0, -1.0], &[0.0], &[]).unwrap();
        assert!((s.u[0] - 0.5).abs() < 1e-14 && (s.u[1] + 0.5).abs() < 1e-14);
        assert!(s.multipliers[0].abs() < 1e-14);
    }
}
