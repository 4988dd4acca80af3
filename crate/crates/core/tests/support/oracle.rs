//! Dense reference assembly: shape functions come from a monomial
//! Vandermonde system in physical coordinates, integrals from a collapsed
//! Gauss–Legendre rule. Shared by the core and acceptance test suites.

#![allow(dead_code)]

use poro_core::assembly::CsrMatrix;
use poro_core::fem::SpacePair;

pub const TOL: f64 = 1e-12;

pub fn gauss_legendre01(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (x + 1.0), 0.5 * w));
    }
    out
}

/// Points and weights on the triangle `v`, via the Duffy map.
pub fn triangle_rule(v: [[f64; 2]; 3]) -> Vec<([f64; 2], f64)> {
    let g = gauss_legendre01(7);
    let det = ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])).abs();
    let mut out = Vec::new();
    for &(s, ws) in &g {
        for &(t, wt) in &g {
            let (a, b) = (s, t * (1.0 - s));
            let x = [
                v[0][0] + a * (v[1][0] - v[0][0]) + b * (v[2][0] - v[0][0]),
                v[0][1] + a * (v[1][1] - v[0][1]) + b * (v[2][1] - v[0][1]),
            ];
            out.push((x, ws * wt * (1.0 - s) * det));
        }
    }
    out
}

pub fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for j in 0..n {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}

/// Shape functions spanned by monomials up to `degree`, nodal at `nodes`.
struct Shapes {
    center: [f64; 2],
    degree: usize,
    coeffs: Vec<Vec<f64>>,
}

pub fn monomials(degree: usize, d: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let mut v = Vec::new();
    let mut g = Vec::new();
    for total in 0..=degree {
        for j in 0..=total {
            let i = total - j;
            let pw = |b: f64, e: usize| if e == 0 { 1.0 } else { b.powi(e as i32) };
            v.push(pw(d[0], i) * pw(d[1], j));
            let gx = if i == 0 { 0.0 } else { i as f64 * pw(d[0], i - 1) * pw(d[1], j) };
            let gy = if j == 0 { 0.0 } else { j as f64 * pw(d[0], i) * pw(d[1], j - 1) };
            g.push([gx, gy]);
        }
    }
    (v, g)
}

impl Shapes {
    fn new(nodes: &[[f64; 2]], degree: usize) -> Self {
        let center = [
            nodes.iter().map(|p| p[0]).sum::<f64>() / nodes.len() as f64,
            nodes.iter().map(|p| p[1]).sum::<f64>() / nodes.len() as f64,
        ];
        let vand: Vec<Vec<f64>> = nodes
            .iter()
            .map(|p| monomials(degree, [p[0] - center[0], p[1] - center[1]]).0)
            .collect();
        // Columns of the inverse hold the monomial coefficients of each shape.
        let inv = invert(vand);
        let n = nodes.len();
        let coeffs = (0..n).map(|k| (0..n).map(|r| inv[r][k]).collect()).collect();
        Shapes { center, degree, coeffs }
    }

    fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (m, g) = monomials(self.degree, [x[0] - self.center[0], x[1] - self.center[1]]);
        let vals = self.coeffs.iter().map(|c| c.iter().zip(&m).map(|(a, b)| a * b).sum()).collect();
        let grads = self
            .coeffs
            .iter()
            .map(|c| {
                let gx = c.iter().zip(&g).map(|(a, b)| a * b[0]).sum();
                let gy = c.iter().zip(&g).map(|(a, b)| a * b[1]).sum();
                [gx, gy]
            })
            .collect();
        (vals, grads)
    }
}

pub struct Oracle {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub mass: Vec<Vec<f64>>,
    pub vmass: Vec<Vec<f64>>,
    pub diff: Vec<Vec<f64>>,
    pub rm: [Vec<f64>; 3],
}

pub fn oracle(sp: &SpacePair, mu: f64, k: [[f64; 2]; 2], mu_f: f64) -> Oracle {
    let nv = sp.num_vector_dofs();
    let ns = sp.num_scalar_dofs();
    let mut o = Oracle {
        a: vec![vec![0.0; nv]; nv],
        b: vec![vec![0.0; nv]; ns],
        mass: vec![vec![0.0; ns]; ns],
        vmass: vec![vec![0.0; nv]; nv],
        diff: vec![vec![0.0; ns]; ns],
        rm: [vec![0.0; nv], vec![0.0; nv], vec![0.0; nv]],
    };
    for t in 0..sp.mesh.num_triangles() {
        let vtx = sp.mesh.triangle_coords(t);
        let p2 = sp.p2_nodes(t);
        let p1 = sp.p1_nodes(t);
        let s2 = Shapes::new(&p2.map(|n| sp.p2_node_coords(n)), 2);
        let s1 = Shapes::new(&p1.map(|n| sp.scalar_dof_coords(n)), 1);
        for (x, w) in triangle_rule(vtx) {
            let (v2, g2) = s2.eval(x);
            let (v1, g1) = s1.eval(x);
            let rmf = [[1.0, 0.0], [0.0, 1.0], [-x[1], x[0]]];
            for i in 0..6 {
                for ci in 0..2 {
                    let di = 2 * p2[i] + ci;
                    // Strain of phi_i e_ci.
                    let mut ei = [[0.0; 2]; 2];
                    for d in 0..2 {
                        ei[ci][d] += 0.5 * g2[i][d];
                        ei[d][ci] += 0.5 * g2[i][d];
                    }
                    for (r, f) in rmf.iter().enumerate() {
                        o.rm[r][di] += w * v2[i] * f[ci];
                    }
                    for j in 0..6 {
                        for cj in 0..2 {
                            let dj = 2 * p2[j] + cj;
                            let mut ej = [[0.0; 2]; 2];
                            for d in 0..2 {
                                ej[cj][d] += 0.5 * g2[j][d];
                                ej[d][cj] += 0.5 * g2[j][d];
                            }
                            let dd: f64 = (0..2).flat_map(|r| (0..2).map(move |c| (r, c))).map(|(r, c)| ei[r][c] * ej[r][c]).sum();
                            o.a[di][dj] += w * mu * dd;
                            if ci == cj {
                                o.vmass[di][dj] += w * v2[i] * v2[j];
                            }
                        }
                    }
                    for l in 0..3 {
                        o.b[p1[l]][di] -= w * g2[i][ci] * v1[l];
                    }
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    o.mass[p1[i]][p1[j]] += w * v1[i] * v1[j];
                    let kg = [k[0][0] * g1[j][0] + k[0][1] * g1[j][1], k[1][0] * g1[j][0] + k[1][1] * g1[j][1]];
                    o.diff[p1[i]][p1[j]] += w * (g1[i][0] * kg[0] + g1[i][1] * kg[1]) / mu_f;
                }
            }
        }
    }
    o
}

pub fn assert_close(name: &str, sparse: &CsrMatrix, dense: &[Vec<f64>]) {
    assert_eq!((sparse.nrows(), sparse.ncols()), (dense.len(), dense[0].len()), "{name} shape");
    for (i, row) in dense.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let s = sparse.get(i, j);
            assert!((s - v).abs() <= TOL, "{name}[{i}][{j}]: sparse {s:e} vs oracle {v:e}");
        }
    }
}

pub fn dense_quad(m: &[Vec<f64>], x: &[f64]) -> f64 {
    m.iter().zip(x).map(|(row, xi)| xi * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).sum()
}


/// Largest entrywise difference, or infinity on a shape mismatch.
pub fn max_diff(sparse: &CsrMatrix, dense: &[Vec<f64>]) -> f64 {
    if (sparse.nrows(), sparse.ncols()) != (dense.len(), dense[0].len()) {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for (i, row) in dense.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            worst = worst.max((sparse.get(i, j) - v).abs());
        }
    }
    worst
}
