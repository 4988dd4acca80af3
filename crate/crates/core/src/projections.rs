//! Projections used for initial data and approximation checks: the strain
//! elliptic projection `R_h` into V_h, the gradient projection `S_h` with
//! a mean constraint, and the L2 projection `Q_h` onto M_h.

use crate::assembly::{assemble_a, assemble_c_mass, assemble_diffusion, assemble_vector_mass, rm_constraints, CsrMatrix, Elimination};
use crate::error::Result;
use crate::fem::{rigid_motion_basis, rigid_motion_fields, SpacePair};
use crate::linsolve::{LuSolver, SpdSolver};
use crate::mesh::quadrature_rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionKind {
    Rh,
    Sh,
    Qh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedField {
    pub coefficients: Vec<f64>,
    pub kind: ProjectionKind,
    pub source: String,
}

// Data integrals use a rule above the default so that smooth fields are
// integrated well beyond the discretization error.
const DATA_RULE: usize = 6;

/// Strain elliptic projection: `(eps(R_h v - v), eps(w)) = 0` for all `w`
/// in X_h, with `R_h v` L2-orthogonal to the rigid motions.
/// Only the gradient of `v` enters the definition.
pub fn project_rh(
    spaces: &SpacePair,
    gradient: &dyn Fn([f64; 2]) -> [[f64; 2]; 2],
    source: &str,
) -> Result<ProjectedField> {
    let a = assemble_a(spaces, 1.0);
    let rhs = strain_load(spaces, gradient);
    // Pin three dofs, then remove the rigid-motion component.
    let pins = rm_pins(spaces);
    let elim = Elimination::new(&a, &pins)?;
    let values: Vec<(usize, f64)> = pins.iter().map(|&d| (d, 0.0)).collect();
    let u = SpdSolver::new(&elim.matrix)?.solve(&elim.rhs(&rhs, &values))?;
    let u = rm_orthogonalize(spaces, &u)?;
    Ok(ProjectedField {
        coefficients: u,
        kind: ProjectionKind::Rh,
        source: source.to_string(),
    })
}

/// `(eps(v), eps(phi_j))` for every vector basis function.
pub fn strain_load(spaces: &SpacePair, gradient: &dyn Fn([f64; 2]) -> [[f64; 2]; 2]) -> Vec<f64> {
    let rule = quadrature_rule(DATA_RULE).expect("rule exists");
    let mut out = vec![0.0; spaces.num_vector_dofs()];
    for t in 0..spaces.mesh.num_triangles() {
        let geo = spaces.geometry(t);
        let nodes = spaces.p2_nodes(t);
        for (bary, w) in rule.iter() {
            let g = geo.p2_gradients(bary);
            let gv = gradient(geo.map(bary));
            let e = [
                [gv[0][0], 0.5 * (gv[0][1] + gv[1][0])],
                [0.5 * (gv[0][1] + gv[1][0]), gv[1][1]],
            ];
            let wq = w * 2.0 * geo.area;
            for k in 0..6 {
                // eps(N e_c) : e = sum_d e[c][d] dN/dx_d
                for c in 0..2 {
                    out[2 * nodes[k] + c] += wq * (e[c][0] * g[k][0] + e[c][1] * g[k][1]);
                }
            }
        }
    }
    out
}

/// Gradient projection with preserved mean: `(grad S_h phi, grad psi) =
/// (grad phi, grad psi)` for all `psi` in M_h and `(S_h phi, 1) = (phi, 1)`.
pub fn project_sh(
    spaces: &SpacePair,
    value: &dyn Fn([f64; 2]) -> f64,
    gradient: &dyn Fn([f64; 2]) -> [f64; 2],
    source: &str,
) -> Result<ProjectedField> {
    let n = spaces.num_scalar_dofs();
    let l = assemble_diffusion(spaces, [[1.0, 0.0], [0.0, 1.0]], 1.0)?;
    let m = assemble_c_mass(spaces, 1.0);

    let rule = quadrature_rule(DATA_RULE).expect("rule exists");
    let mut rhs = vec![0.0; n];
    let mut mean = 0.0;
    for t in 0..spaces.mesh.num_triangles() {
        let geo = spaces.geometry(t);
        let nodes = spaces.p1_nodes(t);
        for (bary, w) in rule.iter() {
            let x = geo.map(bary);
            let g = gradient(x);
            let wq = w * 2.0 * geo.area;
            for i in 0..3 {
                let gl = geo.grad_lambda[i];
                rhs[nodes[i]] += wq * (g[0] * gl[0] + g[1] * gl[1]);
            }
            mean += wq * value(x);
        }
    }
    // Pin one dof, then shift by a constant to match the mean.
    let elim = Elimination::new(&l, &[0])?;
    let mut x = SpdSolver::new(&elim.matrix)?.solve(&elim.rhs(&rhs, &[(0, 0.0)]))?;
    let ones = m.matvec(&vec![1.0; n]);
    let shift = (mean - dot(&ones, &x)) / ones.iter().sum::<f64>();
    x.iter_mut().for_each(|v| *v += shift);
    Ok(ProjectedField {
        coefficients: x,
        kind: ProjectionKind::Sh,
        source: source.to_string(),
    })
}

/// `(phi, psi_i)` for every P1 basis function.
pub fn scalar_data_load(spaces: &SpacePair, value: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let rule = quadrature_rule(DATA_RULE).expect("rule exists");
    let mut out = vec![0.0; spaces.num_scalar_dofs()];
    for t in 0..spaces.mesh.num_triangles() {
        let geo = spaces.geometry(t);
        let nodes = spaces.p1_nodes(t);
        for (bary, w) in rule.iter() {
            let v = value(geo.map(bary)) * w * 2.0 * geo.area;
            for i in 0..3 {
                out[nodes[i]] += v * bary[i];
            }
        }
    }
    out
}

/// Global L2 projection onto the continuous space M_h.
pub fn project_qh(spaces: &SpacePair, value: &dyn Fn([f64; 2]) -> f64, source: &str) -> Result<ProjectedField> {
    let m = assemble_c_mass(spaces, 1.0);
    let x = SpdSolver::new(&m)?.solve(&scalar_data_load(spaces, value))?;
    Ok(ProjectedField {
        coefficients: x,
        kind: ProjectionKind::Qh,
        source: source.to_string(),
    })
}

/// Removes the L2-orthogonal projection onto the rigid motions.
pub fn rm_orthogonalize(spaces: &SpacePair, coeffs: &[f64]) -> Result<Vec<f64>> {
    let mass = assemble_vector_mass(spaces);
    let rm = rigid_motion_basis(spaces);
    let mut gram = vec![vec![0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    let mv = mass.matvec(coeffs);
    for i in 0..3 {
        let mr = mass.matvec(&rm.vectors[i]);
        for j in 0..3 {
            gram[i][j] = mr.iter().zip(&rm.vectors[j]).map(|(a, b)| a * b).sum();
        }
        rhs[i] = mv.iter().zip(&rm.vectors[i]).map(|(a, b)| a * b).sum();
    }
    let c = LuSolver::new(&CsrMatrix::from_dense(&gram))?.solve(&rhs)?;
    let mut out = coeffs.to_vec();
    for i in 0..3 {
        for (o, r) in out.iter_mut().zip(&rm.vectors[i]) {
            *o -= c[i] * r;
        }
    }
    Ok(out)
}

/// Moments `(v, r)` of a P2 field against the three rigid motions.
pub fn rm_moments(spaces: &SpacePair, coeffs: &[f64]) -> [f64; 3] {
    let rows = rm_constraints(spaces);
    let mut out = [0.0; 3];
    for (o, r) in out.iter_mut().zip(&rows) {
        *o = r.iter().zip(coeffs).map(|(a, b)| a * b).sum();
    }
    out
}

/// Coefficients `c` such that `v - sum_i c_i r_i` is L2-orthogonal to the
/// rigid motions `r_i`, with the integrals computed by quadrature.
pub fn rm_coefficients_of_field(spaces: &SpacePair, value: &dyn Fn([f64; 2]) -> [f64; 2]) -> Result<[f64; 3]> {
    let rule = quadrature_rule(DATA_RULE).expect("rule exists");
    let fields = rigid_motion_fields();
    let mut gram = vec![vec![0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for t in 0..spaces.mesh.num_triangles() {
        let geo = spaces.geometry(t);
        for (bary, w) in rule.iter() {
            let x = geo.map(bary);
            let wq = w * 2.0 * geo.area;
            let v = value(x);
            let r = fields.map(|f| f(x));
            for i in 0..3 {
                rhs[i] += wq * (v[0] * r[i][0] + v[1] * r[i][1]);
                for j in 0..3 {
                    gram[i][j] += wq * (r[i][0] * r[j][0] + r[i][1] * r[j][1]);
                }
            }
        }
    }
    let c = LuSolver::new(&CsrMatrix::from_dense(&gram))?.solve(&rhs)?;
    Ok([c[0], c[1], c[2]])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Vector dofs that fix the rigid motions: both components at one vertex
/// and the normal component at the vertex farthest from it.
fn rm_pins(spaces: &SpacePair) -> Vec<usize> {
    let v = &spaces.mesh.vertices;
    let far = (0..v.len())
        .max_by(|&i, &j| {
            let di = (v[i][0] - v[0][0]).hypot(v[i][1] - v[0][1]);
            let dj = (v[j][0] - v[0][0]).hypot(v[j][1] - v[0][1]);
            di.total_cmp(&dj)
        })
        .expect("non-empty mesh");
    let d = [v[far][0] - v[0][0], v[far][1] - v[0][1]];
    let comp = if d[0].abs() >= d[1].abs() { 1 } else { 0 };
    vec![0, 1, 2 * far + comp]
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{h1_error_vector, l2_error_scalar, l2_error_vector};
    use crate::fem::{build_spaces, interpolate_scalar, interpolate_vector};
    use crate::mesh::build_unit_square_mesh;
    use std::sync::Arc;

    fn spaces(n: usize) -> SpacePair {
        build_spaces(Arc::new(build_unit_square_mesh(n).unwrap()))
    }

    fn rate(e: &[f64]) -> Vec<f64> {
        e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    }

    fn smooth(x: [f64; 2]) -> [f64; 2] {
        [x[0].sin() * x[1].sin(), 0.0]
    }

    fn smooth_grad(x: [f64; 2]) -> [[f64; 2]; 2] {
        [[x[0].cos() * x[1].sin(), x[0].sin() * x[1].cos()], [0.0, 0.0]]
    }

    #[test]
    fn qh_and_sh_converge_at_second_order() {
        let f = |x: [f64; 2]| (x[0] + x[1]).sin();
        let g = |x: [f64; 2]| [(x[0] + x[1]).cos(); 2];
        let mut eq = Vec::new();
        let mut es = Vec::new();
        for n in [8, 16, 32] {
            let sp = spaces(n);
            eq.push(l2_error_scalar(&sp, &project_qh(&sp, &f, "sin").unwrap().coefficients, &f));
            es.push(l2_error_scalar(&sp, &project_sh(&sp, &f, &g, "sin").unwrap().coefficients, &f));
        }
        for r in rate(&eq).into_iter().chain(rate(&es)) {
            assert!((r - 2.0).abs() <= 0.3, "rate {r}");
        }
    }

    #[test]
    fn rh_rates_and_constraints() {
        let mut el2 = Vec::new();
        let mut eh1 = Vec::new();
        for n in [8, 16, 32] {
            let sp = spaces(n);
            let c = rm_coefficients_of_field(&sp, &smooth).unwrap();
            let [r0, r1, r2] = rigid_motion_fields();
            let v = move |x: [f64; 2]| {
                let s = smooth(x);
                let (a, b, d) = (r0(x), r1(x), r2(x));
                [s[0] - c[0] * a[0] - c[1] * b[0] - c[2] * d[0], s[1] - c[0] * a[1] - c[1] * b[1] - c[2] * d[1]]
            };
            let vg = move |x: [f64; 2]| {
                let g = smooth_grad(x);
                [[g[0][0], g[0][1] + c[2]], [g[1][0] - c[2], g[1][1]]]
            };
            let rh = project_rh(&sp, &vg, "smooth").unwrap();
            let moments = rm_moments(&sp, &rh.coefficients);
            assert!(moments.iter().all(|m| m.abs() < 1e-11), "{moments:?}");
            el2.push(l2_error_vector(&sp, &rh.coefficients, &v));
            eh1.push(h1_error_vector(&sp, &rh.coefficients, &vg));
        }
        for r in rate(&el2) {
            assert!((r - 3.0).abs() <= 0.3, "L2 rate {r}");
        }
        for r in rate(&eh1) {
            assert!((r - 2.0).abs() <= 0.3, "H1 rate {r}");
        }
    }

    #[test]
    fn rh_galerkin_orthogonality_and_idempotence() {
        let sp = spaces(4);
        let quad = |x: [f64; 2]| [x[0] * x[0] - x[1], x[0] * x[1]];
        let quad_grad = |x: [f64; 2]| [[2.0 * x[0], -1.0], [x[1], x[0]]];
        let rh = project_rh(&sp, &quad_grad, "quad").unwrap();
        let a = assemble_a(&sp, 1.0);
        let res: Vec<f64> = a
            .matvec(&rh.coefficients)
            .iter()
            .zip(strain_load(&sp, &quad_grad))
            .map(|(x, y)| x - y)
            .collect();
        assert!(res.iter().all(|r| r.abs() < 1e-11));
        let expected = rm_orthogonalize(&sp, &interpolate_vector(&sp, quad)).unwrap();
        for (x, y) in rh.coefficients.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-11);
        }
        let zero = project_rh(&sp, &|_| [[0.0; 2]; 2], "zero").unwrap();
        assert!(zero.coefficients.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn sh_preserves_mean_and_affine_fields() {
        let sp = spaces(5);
        let mass = assemble_c_mass(&sp, 1.0);
        let f = |x: [f64; 2]| (x[0] + x[1]).sin();
        let g = |x: [f64; 2]| [(x[0] + x[1]).cos(); 2];
        let s = project_sh(&sp, &f, &g, "sin").unwrap();
        let mean: f64 = mass.matvec(&s.coefficients).iter().sum();
        // (sin(x+y), 1) over the unit square.
        let exact = 2.0 * 1f64.sin() - 2f64.sin();
        assert!((mean - exact).abs() < 1e-12);
        let affine = |x: [f64; 2]| 2.0 + 3.0 * x[0] - x[1];
        let s = project_sh(&sp, &affine, &|_| [3.0, -1.0], "affine").unwrap();
        for (x, y) in s.coefficients.iter().zip(interpolate_scalar(&sp, affine)) {
            assert!((x - y).abs() < 1e-12);
        }
        let c = project_sh(&sp, &|_| 4.5, &|_| [0.0, 0.0], "const").unwrap();
        assert!(c.coefficients.iter().all(|v| (v - 4.5).abs() < 1e-12));
    }

    #[test]
    fn qh_residual_and_stability() {
        let sp = spaces(6);
        let f = |x: [f64; 2]| (3.0 * x[0]).cos() * x[1].exp();
        let q = project_qh(&sp, &f, "f").unwrap();
        let mass = assemble_c_mass(&sp, 1.0);
        let res: Vec<f64> = mass
            .matvec(&q.coefficients)
            .iter()
            .zip(scalar_data_load(&sp, &f))
            .map(|(a, b)| a - b)
            .collect();
        assert!(res.iter().all(|r| r.abs() < 1e-11));
        let norm_q = mass.quad_form(&q.coefficients).sqrt();
        let norm_f = l2_error_scalar(&sp, &vec![0.0; sp.num_scalar_dofs()], &f);
        assert!(norm_q <= norm_f + 1e-12);
        let c = project_qh(&sp, &|_| -1.25, "c").unwrap();
        assert!(c.coefficients.iter().all(|v| (v + 1.25).abs() < 1e-12));
    }
}
