//! Taylor–Hood spaces on a triangulation: continuous P2 vector fields and
//! continuous P1 scalar fields, with nodal interpolation and point
//! evaluation.
//!
//! Global numbering: P2 nodes are the mesh vertices followed by the edge
//! midpoints (in mesh edge order). Vector dofs interleave components, so
//! node `i` owns dofs `2i` (x) and `2i + 1` (y). P1 dofs coincide with the
//! vertices.

use std::sync::Arc;

use crate::mesh::Mesh;

/// Scalar function of position and time.
pub type ScalarFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;
/// Vector function of position and time.
pub type VectorFn = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;

pub fn scalar_fn(f: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

pub fn vector_fn(f: impl Fn([f64; 2], f64) -> [f64; 2] + Send + Sync + 'static) -> VectorFn {
    Arc::new(f)
}

pub fn zero_scalar() -> ScalarFn {
    scalar_fn(|_, _| 0.0)
}

pub fn zero_vector() -> VectorFn {
    vector_fn(|_, _| [0.0, 0.0])
}

#[derive(Debug, Clone)]
pub struct SpacePair {
    pub mesh: Arc<Mesh>,
}

pub fn build_spaces(mesh: Arc<Mesh>) -> SpacePair {
    SpacePair { mesh }
}

impl SpacePair {
    pub fn num_scalar_dofs(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn num_p2_nodes(&self) -> usize {
        self.mesh.num_vertices() + self.mesh.num_edges()
    }

    pub fn num_vector_dofs(&self) -> usize {
        2 * self.num_p2_nodes()
    }

    /// Local P2 node list of triangle `t`: its three vertices, then the
    /// midpoints of the edges opposite vertex 0, 1, 2.
    pub fn p2_nodes(&self, t: usize) -> [usize; 6] {
        let [a, b, c] = self.mesh.triangles[t];
        let nv = self.mesh.num_vertices();
        let [e0, e1, e2] = self.mesh.triangle_edges[t];
        [a, b, c, nv + e0, nv + e1, nv + e2]
    }

    pub fn p1_nodes(&self, t: usize) -> [usize; 3] {
        self.mesh.triangles[t]
    }

    /// Local vector dofs of triangle `t`, ordered `[x0, y0, x1, y1, ...]`.
    pub fn vector_dofs(&self, t: usize) -> [usize; 12] {
        let nodes = self.p2_nodes(t);
        let mut out = [0usize; 12];
        for (k, &nd) in nodes.iter().enumerate() {
            out[2 * k] = 2 * nd;
            out[2 * k + 1] = 2 * nd + 1;
        }
        out
    }

    pub fn p2_node_coords(&self, node: usize) -> [f64; 2] {
        let nv = self.mesh.num_vertices();
        if node < nv {
            self.mesh.vertices[node]
        } else {
            let [a, b] = self.mesh.edges[node - nv];
            let (p, q) = (self.mesh.vertices[a], self.mesh.vertices[b]);
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
        }
    }

    pub fn scalar_dof_coords(&self, dof: usize) -> [f64; 2] {
        self.mesh.vertices[dof]
    }

    pub fn geometry(&self, t: usize) -> ElementGeometry {
        ElementGeometry::new(self.mesh.triangle_coords(t))
    }

    /// Value of a P2 vector field at barycentric point `bary` of triangle `t`.
    pub fn vector_value(&self, coeffs: &[f64], t: usize, bary: [f64; 3]) -> [f64; 2] {
        let b = eval_basis(bary);
        let nodes = self.p2_nodes(t);
        let mut v = [0.0; 2];
        for k in 0..6 {
            v[0] += b.p2[k] * coeffs[2 * nodes[k]];
            v[1] += b.p2[k] * coeffs[2 * nodes[k] + 1];
        }
        v
    }

    /// Jacobian `[[dvx/dx, dvx/dy], [dvy/dx, dvy/dy]]` of a P2 vector field.
    pub fn vector_gradient(&self, coeffs: &[f64], t: usize, bary: [f64; 3]) -> [[f64; 2]; 2] {
        let g = self.geometry(t).p2_gradients(bary);
        let nodes = self.p2_nodes(t);
        let mut out = [[0.0; 2]; 2];
        for k in 0..6 {
            for c in 0..2 {
                let coef = coeffs[2 * nodes[k] + c];
                out[c][0] += coef * g[k][0];
                out[c][1] += coef * g[k][1];
            }
        }
        out
    }

    pub fn scalar_value(&self, coeffs: &[f64], t: usize, bary: [f64; 3]) -> f64 {
        let nodes = self.p1_nodes(t);
        (0..3).map(|k| bary[k] * coeffs[nodes[k]]).sum()
    }

    pub fn scalar_gradient(&self, coeffs: &[f64], t: usize) -> [f64; 2] {
        let geo = self.geometry(t);
        let nodes = self.p1_nodes(t);
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += coeffs[nodes[k]] * geo.grad_lambda[k][0];
            g[1] += coeffs[nodes[k]] * geo.grad_lambda[k][1];
        }
        g
    }

    /// Point evaluation of a P2 vector field anywhere in the domain.
    pub fn eval_vector_at(&self, coeffs: &[f64], x: [f64; 2]) -> [f64; 2] {
        let (t, bary) = self.mesh.locate(x);
        self.vector_value(coeffs, t, bary)
    }

    pub fn eval_vector_gradient_at(&self, coeffs: &[f64], x: [f64; 2]) -> [[f64; 2]; 2] {
        let (t, bary) = self.mesh.locate(x);
        self.vector_gradient(coeffs, t, bary)
    }

    pub fn eval_scalar_at(&self, coeffs: &[f64], x: [f64; 2]) -> f64 {
        let (t, bary) = self.mesh.locate(x);
        self.scalar_value(coeffs, t, bary)
    }

    pub fn eval_scalar_gradient_at(&self, coeffs: &[f64], x: [f64; 2]) -> [f64; 2] {
        let (t, _) = self.mesh.locate(x);
        self.scalar_gradient(coeffs, t)
    }
}

/// Affine map data for one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub coords: [[f64; 2]; 3],
    pub area: f64,
    /// Physical gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(coords: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = coords;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let area = 0.5 * det;
        let mut grad_lambda = [[0.0; 2]; 3];
        for k in 0..3 {
            let p = coords[(k + 1) % 3];
            let q = coords[(k + 2) % 3];
            grad_lambda[k] = [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
        }
        ElementGeometry {
            coords,
            area,
            grad_lambda,
        }
    }

    pub fn map(&self, bary: [f64; 3]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for k in 0..3 {
            x[0] += bary[k] * self.coords[k][0];
            x[1] += bary[k] * self.coords[k][1];
        }
        x
    }

    /// Physical gradients of the six P2 basis functions.
    pub fn p2_gradients(&self, bary: [f64; 3]) -> [[f64; 2]; 6] {
        let d = p2_bary_derivatives(bary);
        let mut out = [[0.0; 2]; 6];
        for (k, row) in d.iter().enumerate() {
            for i in 0..3 {
                out[k][0] += row[i] * self.grad_lambda[i][0];
                out[k][1] += row[i] * self.grad_lambda[i][1];
            }
        }
        out
    }
}

/// Basis values on the reference triangle. Reference gradients are with
/// respect to `(s, t)` where `lambda_1 = s`, `lambda_2 = t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisValues {
    pub p2: [f64; 6],
    pub p2_ref_grad: [[f64; 2]; 6],
    pub p1: [f64; 3],
    pub p1_ref_grad: [[f64; 2]; 3],
}

fn p2_bary_derivatives(l: [f64; 3]) -> [[f64; 3]; 6] {
    let mut d = [[0.0; 3]; 6];
    for k in 0..3 {
        d[k][k] = 4.0 * l[k] - 1.0;
        let a = (k + 1) % 3;
        let b = (k + 2) % 3;
        d[3 + k][a] = 4.0 * l[b];
        d[3 + k][b] = 4.0 * l[a];
    }
    d
}

pub fn eval_basis(bary: [f64; 3]) -> BasisValues {
    let l = bary;
    let mut p2 = [0.0; 6];
    for k in 0..3 {
        p2[k] = l[k] * (2.0 * l[k] - 1.0);
        p2[3 + k] = 4.0 * l[(k + 1) % 3] * l[(k + 2) % 3];
    }
    let d = p2_bary_derivatives(l);
    let mut p2_ref_grad = [[0.0; 2]; 6];
    for k in 0..6 {
        p2_ref_grad[k] = [d[k][1] - d[k][0], d[k][2] - d[k][0]];
    }
    BasisValues {
        p2,
        p2_ref_grad,
        p1: l,
        p1_ref_grad: [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
    }
}

/// Nodal interpolant of a vector field into X_h.
pub fn interpolate_vector(spaces: &SpacePair, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let mut out = vec![0.0; spaces.num_vector_dofs()];
    for node in 0..spaces.num_p2_nodes() {
        let v = f(spaces.p2_node_coords(node));
        out[2 * node] = v[0];
        out[2 * node + 1] = v[1];
    }
    out
}

/// Nodal interpolant of a scalar field into M_h.
pub fn interpolate_scalar(spaces: &SpacePair, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    (0..spaces.num_scalar_dofs())
        .map(|i| f(spaces.scalar_dof_coords(i)))
        .collect()
}

/// Coefficient vectors of the translations `(1,0)`, `(0,1)` and the
/// rotation `(-y, x)`.
#[derive(Debug, Clone)]
pub struct RigidMotionBasis {
    pub vectors: [Vec<f64>; 3],
}

pub fn rigid_motion_fields() -> [fn([f64; 2]) -> [f64; 2]; 3] {
    [|_| [1.0, 0.0], |_| [0.0, 1.0], |x| [-x[1], x[0]]]
}

pub fn rigid_motion_basis(spaces: &SpacePair) -> RigidMotionBasis {
    let [f0, f1, f2] = rigid_motion_fields();
    RigidMotionBasis {
        vectors: [
            interpolate_vector(spaces, f0),
            interpolate_vector(spaces, f1),
            interpolate_vector(spaces, f2),
        ],
    }
}
