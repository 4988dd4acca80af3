//! Structured triangulations of the unit square with tagged boundary
//! segments, and the quadrature rules used by the assembly routines.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Boundary segment of the unit square.
///
/// The numbering follows the benchmark definitions: `G1` is `y = 0`, `G2` is
/// `x = 1`, `G3` is `y = 1` and `G4` is `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    G1,
    G2,
    G3,
    G4,
}

impl Segment {
    pub const ALL: [Segment; 4] = [Segment::G1, Segment::G2, Segment::G3, Segment::G4];

    pub fn index(self) -> usize {
        match self {
            Segment::G1 => 0,
            Segment::G2 => 1,
            Segment::G3 => 2,
            Segment::G4 => 3,
        }
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Segment::G1 => [0.0, -1.0],
            Segment::G2 => [1.0, 0.0],
            Segment::G3 => [0.0, 1.0],
            Segment::G4 => [-1.0, 0.0],
        }
    }

    /// Signed distance of `x` from the line carrying the segment.
    pub fn defect(self, x: [f64; 2]) -> f64 {
        match self {
            Segment::G1 => x[1],
            Segment::G2 => x[0] - 1.0,
            Segment::G3 => x[1] - 1.0,
            Segment::G4 => x[0],
        }
    }

    pub fn parse(name: &str) -> Result<Segment> {
        match name.trim().to_ascii_lowercase().as_str() {
            "g1" | "gamma1" | "bottom" => Ok(Segment::G1),
            "g2" | "gamma2" | "right" => Ok(Segment::G2),
            "g3" | "gamma3" | "top" => Ok(Segment::G3),
            "g4" | "gamma4" | "left" => Ok(Segment::G4),
            other => Err(Error::invalid(format!("unknown boundary segment '{other}'"))),
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.index() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Endpoints, ordered counterclockwise with respect to the domain.
    pub vertices: [usize; 2],
    /// Global edge index.
    pub edge: usize,
    pub triangle: usize,
    pub segment: Segment,
}

/// Triangulation of a rectangle. All triangles are counterclockwise.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Unique edges as sorted vertex pairs, numbered in order of first
    /// appearance while sweeping the triangles.
    pub edges: Vec<[usize; 2]>,
    /// Local edge `k` of a triangle is the one opposite its vertex `k`.
    pub triangle_edges: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Subdivisions per side.
    pub n: usize,
    pub h: f64,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Finds the triangle containing `x` and the barycentric coordinates of
    /// `x` in it. Points outside the unit square are clamped onto it.
    pub fn locate(&self, x: [f64; 2]) -> (usize, [f64; 3]) {
        let n = self.n;
        let scaled = [x[0].clamp(0.0, 1.0) * n as f64, x[1].clamp(0.0, 1.0) * n as f64];
        let i = (scaled[0].floor() as usize).min(n - 1);
        let j = (scaled[1].floor() as usize).min(n - 1);
        let s = scaled[0] - i as f64;
        let r = scaled[1] - j as f64;
        let t = 2 * (j * n + i) + usize::from(r > s);
        (t, self.barycentric(t, x))
    }

    pub fn barycentric(&self, t: usize, x: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangle_coords(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Uniform `n x n` triangulation of `[0,1]^2`; every cell is split along
/// its lower-left to upper-right diagonal.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::invalid("mesh subdivisions n must be at least 1"));
    }
    let np = n + 1;
    let vid = |i: usize, j: usize| j * np + i;

    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = vid(i, j);
            let v10 = vid(i + 1, j);
            let v11 = vid(i + 1, j + 1);
            let v01 = vid(i, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut edge_owner: Vec<Vec<usize>> = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut local = [0usize; 3];
        for k in 0..3 {
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            let key = [a.min(b), a.max(b)];
            let id = *edge_ids.entry(key).or_insert_with(|| {
                edges.push(key);
                edge_owner.push(Vec::new());
                edges.len() - 1
            });
            edge_owner[id].push(t);
            local[k] = id;
        }
        triangle_edges.push(local);
    }

    let mut boundary_edges = Vec::with_capacity(4 * n);
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let e = triangle_edges[t][k];
            if edge_owner[e].len() != 1 {
                continue;
            }
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            let mid = [
                0.5 * (vertices[a][0] + vertices[b][0]),
                0.5 * (vertices[a][1] + vertices[b][1]),
            ];
            let segment = Segment::ALL
                .into_iter()
                .find(|s| s.defect(mid).abs() < 1e-14)
                .expect("boundary edge off the unit square");
            boundary_edges.push(BoundaryEdge {
                vertices: [a, b],
                edge: e,
                triangle: t,
                segment,
            });
        }
    }
    boundary_edges.sort_by_key(|b| (b.segment, b.edge));

    let mut mesh = Mesh {
        vertices,
        triangles,
        edges,
        triangle_edges,
        boundary_edges,
        n,
        h: 0.0,
    };
    mesh.h = mesh_size(&mesh);
    Ok(mesh)
}

/// Largest edge length over all triangles.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    mesh.edges
        .iter()
        .map(|&[a, b]| {
            let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Symmetric quadrature rule on the reference triangle
/// `{(s, t): s, t >= 0, s + t <= 1}`. Points are barycentric coordinates
/// and weights sum to the reference area `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

fn orbit3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[b, a, a], [a, b, a], [a, a, b]]
}

fn orbit6(a: f64, b: f64) -> [[f64; 3]; 6] {
    let c = 1.0 - a - b;
    [[a, b, c], [b, a, c], [c, a, b], [a, c, b], [b, c, a], [c, b, a]]
}

#[derive(Default)]
struct RuleBuilder {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl RuleBuilder {
    // `w` is relative to unit area.
    fn push(mut self, pts: &[[f64; 3]], w: f64) -> Self {
        for p in pts {
            self.points.push(*p);
            self.weights.push(0.5 * w);
        }
        self
    }

    fn finish(self, degree: usize) -> QuadRule {
        QuadRule {
            points: self.points,
            weights: self.weights,
            degree,
        }
    }
}

/// Returns a symmetric rule exact for polynomials of total degree up to
/// `degree` (1 through 6). Degree 3 uses the 6-point degree-4 rule.
pub fn quadrature_rule(degree: usize) -> Result<QuadRule> {
    let rule = match degree {
        1 => RuleBuilder::default().push(&[[1.0 / 3.0; 3]], 1.0).finish(1),
        2 => RuleBuilder::default()
            .push(&orbit3(1.0 / 6.0), 1.0 / 3.0)
            .finish(2),
        3 | 4 => RuleBuilder::default()
            .push(
                &orbit3(0.445_948_490_915_964_886_318_329_253_883),
                0.223_381_589_678_011_465_695_007_008_433,
            )
            .push(
                &orbit3(0.091_576_213_509_770_743_459_571_463_402_2),
                0.109_951_743_655_321_867_638_326_324_900,
            )
            .finish(4),
        5 => {
            let s15 = 15f64.sqrt();
            RuleBuilder::default()
                .push(&[[1.0 / 3.0; 3]], 9.0 / 40.0)
                .push(&orbit3((6.0 - s15) / 21.0), (155.0 - s15) / 1200.0)
                .push(&orbit3((6.0 + s15) / 21.0), (155.0 + s15) / 1200.0)
                .finish(5)
        }
        6 => RuleBuilder::default()
            .push(
                &orbit3(0.249_286_745_170_910_421_291_638_553_107),
                0.116_786_275_726_379_366_025_289_611_386,
            )
            .push(
                &orbit3(0.063_089_014_491_502_228_340_331_602_870_8),
                0.050_844_906_370_206_816_920_936_809_106_9,
            )
            .push(
                &orbit6(
                    0.053_145_049_844_816_947_353_249_671_631_4,
                    0.310_352_451_033_784_405_416_607_733_957,
                ),
                0.082_851_075_618_373_575_193_553_456_420_4,
            )
            .finish(6),
        d => {
            return Err(Error::invalid(format!(
                "unsupported quadrature degree {d} (supported: 1..=6)"
            )))
        }
    };
    Ok(rule)
}

/// Three-point Gauss–Legendre rule on `[0, 1]` (exact to degree 5), used
/// for boundary-edge integrals. Returns `(abscissa, weight)` pairs.
pub fn edge_rule() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
