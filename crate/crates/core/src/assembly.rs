//! Sparse matrices, bilinear forms, load vectors and boundary data.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::fem::{eval_basis, rigid_motion_fields, ScalarFn, SpacePair, VectorFn};
use crate::mesh::{edge_rule, quadrature_rule, QuadRule, Segment};
use crate::model::PhysicalParams;

/// Compressed sparse row matrix with sorted, unique column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[cursor[r]] = c;
            vals[cursor[r]] = v;
            cursor[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == c {
                    s += row[k].1;
                    k += 1;
                }
                indices.push(c);
                values.push(s);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, &[])
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut t = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows.len(), ncols, &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `|A| |x|`, used for scale-aware residuals.
    pub fn abs_matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| (v * x[j]).abs()).sum())
            .collect()
    }

    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                y[j] += v * x[i];
            }
        }
        y
    }

    /// `x^T A x` for square matrices.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `y^T A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|i| y[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `a * self + b * other`.
    pub fn add_scaled(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t: Vec<_> = self
            .triplets()
            .map(|(i, j, v)| (i, j, a * v))
            .chain(other.triplets().map(|(i, j, v)| (i, j, b * v)))
            .collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|` divided by `max |A|` (0 for the zero matrix).
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.triplets() {
            worst = worst.max((v - self.get(j, i)).abs());
        }
        worst / scale
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }
}

impl fmt::Display for CsrMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} sparse ({} nonzeros)", self.nrows, self.ncols, self.nnz())
    }
}

fn element_rule() -> QuadRule {
    quadrature_rule(4).expect("degree 4 rule exists")
}

/// Elasticity matrix of `a(u, v) = mu (eps(u), eps(v))` on X_h.
pub fn assemble_a(spaces: &SpacePair, mu: f64) -> CsrMatrix {
    let rule = element_rule();
    let mesh = &spaces.mesh;
    let mut trip = Vec::with_capacity(144 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let geo = spaces.geometry(t);
        let dofs = spaces.vector_dofs(t);
        let mut local = [[0.0; 12]; 12];
        for (bary, w) in rule.iter() {
            let g = geo.p2_gradients(bary);
            let wq = w * 2.0 * geo.area * mu;
            for k in 0..6 {
                for l in 0..6 {
                    let dot = g[k][0] * g[l][0] + g[k][1] * g[l][1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let delta = if c == d { dot } else { 0.0 };
                            local[2 * k + c][2 * l + d] += wq * 0.5 * (delta + g[k][d] * g[l][c]);
                        }
                    }
                }
            }
        }
        for i in 0..12 {
            for j in 0..12 {
                trip.push((dofs[i], dofs[j], local[i][j]));
            }
        }
    }
    let n = spaces.num_vector_dofs();
    CsrMatrix::from_triplets(n, n, &trip)
}

/// Coupling matrix of `b(v, xi) = -(div v, xi)`: rows are scalar dofs,
/// columns vector dofs.
pub fn assemble_b(spaces: &SpacePair) -> CsrMatrix {
    let rule = element_rule();
    let mesh = &spaces.mesh;
    let mut trip = Vec::with_capacity(36 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let geo = spaces.geometry(t);
        let vd = spaces.vector_dofs(t);
        let sd = spaces.p1_nodes(t);
        let mut local = [[0.0; 12]; 3];
        for (bary, w) in rule.iter() {
            let g = geo.p2_gradients(bary);
            let wq = w * 2.0 * geo.area;
            for i in 0..3 {
                for k in 0..6 {
                    for c in 0..2 {
                        local[i][2 * k + c] -= wq * bary[i] * g[k][c];
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..12 {
                trip.push((sd[i], vd[j], local[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(spaces.num_scalar_dofs(), spaces.num_vector_dofs(), &trip)
}

/// `coeff` times the P1 mass matrix.
pub fn assemble_c_mass(spaces: &SpacePair, coeff: f64) -> CsrMatrix {
    let mesh = &spaces.mesh;
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let area = mesh.signed_area(t);
        let nodes = spaces.p1_nodes(t);
        for i in 0..3 {
            for j in 0..3 {
                let m = if i == j { area / 6.0 } else { area / 12.0 };
                trip.push((nodes[i], nodes[j], coeff * m));
            }
        }
    }
    let n = spaces.num_scalar_dofs();
    CsrMatrix::from_triplets(n, n, &trip)
}

/// Vector P2 mass matrix `(u, v)` on X_h.
pub fn assemble_vector_mass(spaces: &SpacePair) -> CsrMatrix {
    let rule = element_rule();
    let mesh = &spaces.mesh;
    let mut trip = Vec::with_capacity(72 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let area = mesh.signed_area(t);
        let nodes = spaces.p2_nodes(t);
        let mut local = [[0.0; 6]; 6];
        for (bary, w) in rule.iter() {
            let b = eval_basis(bary);
            for k in 0..6 {
                for l in 0..6 {
                    local[k][l] += w * 2.0 * area * b.p2[k] * b.p2[l];
                }
            }
        }
        for k in 0..6 {
            for l in 0..6 {
                for c in 0..2 {
                    trip.push((2 * nodes[k] + c, 2 * nodes[l] + c, local[k][l]));
                }
            }
        }
    }
    let n = spaces.num_vector_dofs();
    CsrMatrix::from_triplets(n, n, &trip)
}

pub(crate) fn check_spd_2x2(k: [[f64; 2]; 2]) -> Result<()> {
    let finite = k.iter().flatten().all(|v| v.is_finite());
    let sym = (k[0][1] - k[1][0]).abs() <= 1e-14 * (k[0][1].abs() + k[1][0].abs()).max(f64::MIN_POSITIVE);
    let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
    if !finite || !sym || k[0][0] <= 0.0 || det <= 0.0 {
        return Err(Error::invalid(format!(
            "permeability tensor {k:?} is not symmetric positive definite"
        )));
    }
    Ok(())
}

/// `(K / mu_f) (grad eta, grad psi)` on M_h.
pub fn assemble_diffusion(spaces: &SpacePair, k: [[f64; 2]; 2], mu_f: f64) -> Result<CsrMatrix> {
    check_spd_2x2(k)?;
    if !(mu_f > 0.0 && mu_f.is_finite()) {
        return Err(Error::invalid(format!("fluid viscosity must be positive, got {mu_f}")));
    }
    let mesh = &spaces.mesh;
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let geo = spaces.geometry(t);
        let nodes = spaces.p1_nodes(t);
        for i in 0..3 {
            let gi = geo.grad_lambda[i];
            let kgi = [k[0][0] * gi[0] + k[0][1] * gi[1], k[1][0] * gi[0] + k[1][1] * gi[1]];
            for j in 0..3 {
                let gj = geo.grad_lambda[j];
                let v = geo.area * (kgi[0] * gj[0] + kgi[1] * gj[1]) / mu_f;
                trip.push((nodes[j], nodes[i], v));
            }
        }
    }
    let n = spaces.num_scalar_dofs();
    Ok(CsrMatrix::from_triplets(n, n, &trip))
}

/// The three rows `(v, r)` for the rigid motions `(1,0)`, `(0,1)`, `(-y,x)`,
/// as dense vectors over the vector dofs.
pub fn rm_constraints(spaces: &SpacePair) -> [Vec<f64>; 3] {
    let rule = element_rule();
    let fields = rigid_motion_fields();
    let mut rows = [
        vec![0.0; spaces.num_vector_dofs()],
        vec![0.0; spaces.num_vector_dofs()],
        vec![0.0; spaces.num_vector_dofs()],
    ];
    for t in 0..spaces.mesh.num_triangles() {
        let geo = spaces.geometry(t);
        let nodes = spaces.p2_nodes(t);
        for (bary, w) in rule.iter() {
            let b = eval_basis(bary);
            let x = geo.map(bary);
            let wq = w * 2.0 * geo.area;
            for (r, f) in fields.iter().enumerate() {
                let rv = f(x);
                for k in 0..6 {
                    rows[r][2 * nodes[k]] += wq * b.p2[k] * rv[0];
                    rows[r][2 * nodes[k] + 1] += wq * b.p2[k] * rv[1];
                }
            }
        }
    }
    rows
}

/// Field a boundary condition applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Ux,
    Uy,
    P,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Ux, Field::Uy, Field::P];
}

/// Boundary data for one segment and field. For displacement components a
/// Neumann function is the total traction component; for the pressure it
/// is the inflow flux `phi_1` (with `v_f . n = -phi_1`).
#[derive(Clone)]
pub enum BcKind {
    Dirichlet(ScalarFn),
    Neumann(ScalarFn),
}

impl BcKind {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BcKind::Dirichlet(_))
    }

    pub fn function(&self) -> &ScalarFn {
        match self {
            BcKind::Dirichlet(f) | BcKind::Neumann(f) => f,
        }
    }
}

impl fmt::Debug for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_dirichlet() { "Dirichlet" } else { "Neumann" })
    }
}

#[derive(Debug, Clone, Default)]
pub struct BoundaryCondition {
    entries: BTreeMap<(Segment, Field), BcKind>,
}

impl BoundaryCondition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, segment: Segment, field: Field, kind: BcKind) -> &mut Self {
        self.entries.insert((segment, field), kind);
        self
    }

    /// Sets the same condition on several segments.
    pub fn set_many(&mut self, segments: &[Segment], field: Field, kind: BcKind) -> &mut Self {
        for &s in segments {
            self.set(s, field, kind.clone());
        }
        self
    }

    pub fn get(&self, segment: Segment, field: Field) -> Option<&BcKind> {
        self.entries.get(&(segment, field))
    }

    /// Checks that each segment and field has exactly one condition.
    pub fn validate(&self) -> Result<()> {
        for s in Segment::ALL {
            for f in Field::ALL {
                if self.get(s, f).is_none() {
                    return Err(Error::invalid(format!("no boundary condition for {f:?} on {s}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_dirichlet(&self, segment: Segment, field: Field) -> bool {
        self.get(segment, field).is_some_and(BcKind::is_dirichlet)
    }

    pub fn has_displacement_dirichlet(&self) -> bool {
        Segment::ALL
            .iter()
            .any(|&s| self.is_dirichlet(s, Field::Ux) || self.is_dirichlet(s, Field::Uy))
    }

    pub fn has_pressure_dirichlet(&self) -> bool {
        Segment::ALL.iter().any(|&s| self.is_dirichlet(s, Field::P))
    }

    /// Constrained vector dofs and their values at time `t`, sorted by dof.
    /// Where segments meet, the first segment in `G1..G4` order wins.
    pub fn vector_dirichlet(&self, spaces: &SpacePair, t: f64) -> Vec<(usize, f64)> {
        let nv = spaces.mesh.num_vertices();
        let mut out: BTreeMap<usize, f64> = BTreeMap::new();
        for be in &spaces.mesh.boundary_edges {
            for (c, field) in [(0, Field::Ux), (1, Field::Uy)] {
                if let Some(BcKind::Dirichlet(g)) = self.get(be.segment, field) {
                    for node in [be.vertices[0], be.vertices[1], nv + be.edge] {
                        out.entry(2 * node + c)
                            .or_insert_with(|| g(spaces.p2_node_coords(node), t));
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Constrained scalar dofs and pressure values at time `t`, sorted by dof.
    pub fn pressure_dirichlet(&self, spaces: &SpacePair, t: f64) -> Vec<(usize, f64)> {
        let mut out: BTreeMap<usize, f64> = BTreeMap::new();
        for be in &spaces.mesh.boundary_edges {
            if let Some(BcKind::Dirichlet(g)) = self.get(be.segment, Field::P) {
                for v in be.vertices {
                    out.entry(v).or_insert_with(|| g(spaces.scalar_dof_coords(v), t));
                }
            }
        }
        out.into_iter().collect()
    }
}

/// Volume and boundary loads at time `t`: `(f, v) + <f_1, v>` on X_h and
/// `(phi, psi) + <phi_1, psi> + (K/mu_f)(rho_f g, grad psi)` on M_h.
/// Boundary terms are added only where the field is not Dirichlet.
pub fn assemble_loads(
    spaces: &SpacePair,
    f: &VectorFn,
    phi: &ScalarFn,
    bc: &BoundaryCondition,
    params: &PhysicalParams,
    t: f64,
) -> (Vec<f64>, Vec<f64>) {
    (
        assemble_vector_load(spaces, f, bc, t),
        assemble_scalar_load(spaces, phi, bc, params, t),
    )
}

pub fn assemble_vector_load(spaces: &SpacePair, f: &VectorFn, bc: &BoundaryCondition, t: f64) -> Vec<f64> {
    let rule = element_rule();
    let mesh = &spaces.mesh;
    let mut out = vec![0.0; spaces.num_vector_dofs()];
    for tri in 0..mesh.num_triangles() {
        let geo = spaces.geometry(tri);
        let nodes = spaces.p2_nodes(tri);
        for (bary, w) in rule.iter() {
            let b = eval_basis(bary);
            let fv = f(geo.map(bary), t);
            let wq = w * 2.0 * geo.area;
            for k in 0..6 {
                out[2 * nodes[k]] += wq * b.p2[k] * fv[0];
                out[2 * nodes[k] + 1] += wq * b.p2[k] * fv[1];
            }
        }
    }
    let nv = mesh.num_vertices();
    for be in &mesh.boundary_edges {
        let [a, bv] = be.vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[bv]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let nodes = [a, bv, nv + be.edge];
        for (c, field) in [(0, Field::Ux), (1, Field::Uy)] {
            let Some(BcKind::Neumann(g)) = bc.get(be.segment, field) else {
                continue;
            };
            for (s, w) in edge_rule() {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let gv = g(x, t) * w * len;
                let shape = [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)];
                for k in 0..3 {
                    out[2 * nodes[k] + c] += gv * shape[k];
                }
            }
        }
    }
    out
}

pub fn assemble_scalar_load(
    spaces: &SpacePair,
    phi: &ScalarFn,
    bc: &BoundaryCondition,
    params: &PhysicalParams,
    t: f64,
) -> Vec<f64> {
    let rule = element_rule();
    let mesh = &spaces.mesh;
    let mut out = vec![0.0; spaces.num_scalar_dofs()];
    let k = params.permeability;
    let rg = [params.rho_f * params.gravity[0], params.rho_f * params.gravity[1]];
    let flux = [
        (k[0][0] * rg[0] + k[0][1] * rg[1]) / params.mu_f,
        (k[1][0] * rg[0] + k[1][1] * rg[1]) / params.mu_f,
    ];
    let has_gravity = flux[0] != 0.0 || flux[1] != 0.0;
    for tri in 0..mesh.num_triangles() {
        let geo = spaces.geometry(tri);
        let nodes = spaces.p1_nodes(tri);
        for (bary, w) in rule.iter() {
            let v = phi(geo.map(bary), t) * w * 2.0 * geo.area;
            for i in 0..3 {
                out[nodes[i]] += v * bary[i];
            }
        }
        if has_gravity {
            for i in 0..3 {
                let g = geo.grad_lambda[i];
                out[nodes[i]] += geo.area * (flux[0] * g[0] + flux[1] * g[1]);
            }
        }
    }
    for be in &mesh.boundary_edges {
        let Some(BcKind::Neumann(g)) = bc.get(be.segment, Field::P) else {
            continue;
        };
        let [a, b] = be.vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        for (s, w) in edge_rule() {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let gv = g(x, t) * w * len;
            out[a] += gv * (1.0 - s);
            out[b] += gv * s;
        }
    }
    out
}

/// Symmetric elimination of Dirichlet dofs: the constrained rows and
/// columns are zeroed, the diagonal set to one, and the known values moved
/// to the right-hand side. Time-dependent data only touch the rhs, so the
/// reduced matrix can be factored once and reused through [`Elimination::rhs`].
#[derive(Debug, Clone)]
pub struct Elimination {
    pub matrix: CsrMatrix,
    constrained: Vec<bool>,
    /// Entries `K[i][j]` with `i` free and `j` constrained.
    coupling: Vec<(usize, usize, f64)>,
}

impl Elimination {
    pub fn new(matrix: &CsrMatrix, dofs: &[usize]) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::invalid("elimination needs a square matrix"));
        }
        let n = matrix.nrows();
        let mut constrained = vec![false; n];
        for &d in dofs {
            if d >= n {
                return Err(Error::invalid(format!("constrained dof {d} out of range {n}")));
            }
            constrained[d] = true;
        }
        let mut trip = Vec::with_capacity(matrix.nnz());
        let mut coupling = Vec::new();
        for (i, j, v) in matrix.triplets() {
            match (constrained[i], constrained[j]) {
                (false, false) => trip.push((i, j, v)),
                (false, true) => coupling.push((i, j, v)),
                _ => {}
            }
        }
        trip.extend((0..n).filter(|&i| constrained[i]).map(|i| (i, i, 1.0)));
        Ok(Elimination {
            matrix: CsrMatrix::from_triplets(n, n, &trip),
            constrained,
            coupling,
        })
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    /// Right-hand side of the reduced system for load `b` and Dirichlet
    /// values given as `(dof, value)` pairs over the constrained set.
    pub fn rhs(&self, b: &[f64], values: &[(usize, f64)]) -> Vec<f64> {
        let mut full = vec![0.0; b.len()];
        for &(d, v) in values {
            debug_assert!(self.constrained[d]);
            full[d] = v;
        }
        let mut out = b.to_vec();
        for &(i, j, v) in &self.coupling {
            out[i] -= v * full[j];
        }
        for (i, c) in self.constrained.iter().enumerate() {
            if *c {
                out[i] = full[i];
            }
        }
        out
    }
}

/// One-shot symmetric elimination of `(dof, value)` constraints.
pub fn apply_dirichlet(matrix: &CsrMatrix, rhs: &[f64], values: &[(usize, f64)]) -> Result<(CsrMatrix, Vec<f64>)> {
    let dofs: Vec<usize> = values.iter().map(|v| v.0).collect();
    let elim = Elimination::new(matrix, &dofs)?;
    let b = elim.rhs(rhs, values);
    Ok((elim.matrix, b))
}
