//! Energy law, conservation laws, error norms and convergence rates.
//!
//! Energy and conservation quantities are evaluated with the same assembled
//! matrices the solver uses, so that the discrete identities hold up to
//! round-off.

use crate::assembly::CsrMatrix;
use crate::cases::ExactSolution;
use crate::error::{Error, Result};
use crate::fem::{interpolate_vector, SpacePair};
use crate::mesh::{edge_rule, quadrature_rule};
use crate::model::Kappas;
use crate::scheme::{Simulation, State, Theta, Trajectory, WindowObserver, WindowRecord};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Maximum that returns NaN as soon as one entry is NaN.
fn max_or_nan(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m: f64, v| if m.is_nan() || v.is_nan() { f64::NAN } else { m.max(v) })
}

/// `J = 1/2 [u^T A u + k2 |eta|_M^2 + k3 |xi|_M^2] - F . u`, where `eta` is
/// the diffusion iterate paired with `(u, xi)` by the chosen `theta`.
pub fn energy_j(a: &CsrMatrix, mass: &CsrMatrix, kappas: Kappas, u: &[f64], xi: &[f64], eta: &[f64], load_u: &[f64]) -> f64 {
    0.5 * (a.quad_form(u) + kappas.k2 * mass.quad_form(eta) + kappas.k3 * mass.quad_form(xi)) - dot(load_u, u)
}

/// Fine history of a finished window, kept for the `theta = 0` pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowData {
    pub xi: Vec<f64>,
    /// `eta^{nm+k}`, `k = 0..=m`.
    pub eta_history: Vec<Vec<f64>>,
    /// Scalar loads at `k = 1..=m`.
    pub loads: Vec<Vec<f64>>,
}

/// One window's contribution to `S`, with the sum of absolute values of its
/// terms for normalization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SIncrement {
    pub value: f64,
    pub magnitude: f64,
}

impl SIncrement {
    fn add(&mut self, v: f64) {
        self.value += v;
        self.magnitude += v.abs();
    }
}

/// Dissipation of one coarse window.
///
/// The mechanical part is `1/2 du^T A du + k3/2 |dxi|^2 + (F^{n+1} - F^n) . u^n`.
/// The diffusion part sums, over fine steps, `dt w^T L w - dt Phi . w +
/// k2/2 |d eta|^2` with `w = k1 xi^{n+1} + k2 eta`. With `theta = 1` it runs
/// over the current window. With `theta = 0` it runs over the previous
/// window (`prev`) and picks up the cross term `-dt k1 w^T L (xi^{n+1} - xi^n)`.
pub fn energy_s_increment(sim: &Simulation, rec: &WindowRecord<'_>, prev: Option<&WindowData>) -> SIncrement {
    let k = sim.kappas;
    let dt = rec.grid.dt;
    let mut s = SIncrement::default();

    let du = sub(&rec.new.u, &rec.old.u);
    let dxi = sub(&rec.new.xi, &rec.old.xi);
    let dload = sub(rec.load_u_new, rec.load_u_old);
    s.add(0.5 * sim.a.quad_form(&du));
    s.add(0.5 * k.k3 * sim.mass.quad_form(&dxi));
    s.add(dot(&dload, &rec.old.u));

    let xi_new = &rec.new.xi;
    let (history, loads, cross) = match rec.grid.theta {
        Theta::One => (&rec.new.eta_history, rec.fine_loads, None),
        Theta::Zero => match prev {
            Some(p) => (&p.eta_history, &p.loads[..], Some(sim.diffusion.matvec(&dxi))),
            None => return s,
        },
    };
    for step in 1..history.len() {
        let eta = &history[step];
        let w: Vec<f64> = xi_new.iter().zip(eta).map(|(x, e)| k.k1 * x + k.k2 * e).collect();
        let d_eta = sub(eta, &history[step - 1]);
        s.add(dt * sim.diffusion.quad_form(&w));
        s.add(-dt * dot(&loads[step - 1], &w));
        s.add(0.5 * k.k2 * sim.mass.quad_form(&d_eta));
        if let Some(l_dxi) = &cross {
            s.add(-dt * k.k1 * dot(&w, l_dxi));
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    /// Coarse index `l + 1` of the state entering `J`.
    pub index: usize,
    pub time: f64,
    pub j: f64,
    pub s_cumulative: f64,
    /// `|J^{l+1} + S^l - J^0|`.
    pub residual: f64,
    pub scale: f64,
}

impl EnergyRow {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyReport {
    pub j0: f64,
    pub rows: Vec<EnergyRow>,
}

impl EnergyReport {
    pub fn max_relative_residual(&self) -> f64 {
        max_or_nan(self.rows.iter().map(EnergyRow::relative))
    }
}

/// Observer that evaluates the discrete energy identity after every window.
#[derive(Debug, Default)]
pub struct EnergyTracker {
    report: EnergyReport,
    magnitude: f64,
    prev: Option<WindowData>,
}

impl EnergyTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn report(&self) -> &EnergyReport {
        &self.report
    }

    pub fn into_report(self) -> EnergyReport {
        self.report
    }
}

impl WindowObserver for EnergyTracker {
    fn initial(&mut self, sim: &Simulation, state: &State, load_u: &[f64]) -> Result<()> {
        self.report.j0 = energy_j(&sim.a, &sim.mass, sim.kappas, &state.u, &state.xi, &state.eta, load_u);
        Ok(())
    }

    fn window(&mut self, sim: &Simulation, rec: &WindowRecord<'_>) -> Result<()> {
        let inc = energy_s_increment(sim, rec, self.prev.as_ref());
        let eta_paired = match rec.grid.theta {
            Theta::Zero => &rec.old.eta,
            Theta::One => &rec.new.eta,
        };
        let j = energy_j(&sim.a, &sim.mass, sim.kappas, &rec.new.u, &rec.new.xi, eta_paired, rec.load_u_new);
        let s_cumulative = self.report.rows.last().map_or(0.0, |r| r.s_cumulative) + inc.value;
        self.magnitude += inc.magnitude;
        let j0 = self.report.j0;
        self.report.rows.push(EnergyRow {
            index: rec.new.n,
            time: rec.new.time,
            j,
            s_cumulative,
            residual: (j + s_cumulative - j0).abs(),
            scale: j0.abs() + j.abs() + self.magnitude,
        });
        self.prev = Some(WindowData {
            xi: rec.new.xi.clone(),
            eta_history: rec.new.eta_history.clone(),
            loads: rec.fine_loads.to_vec(),
        });
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationRow {
    pub index: usize,
    pub time: f64,
    /// `(eta^{nm}, 1)`.
    pub eta_mean: f64,
    /// `(eta^0, 1)` plus the accumulated fluid sources.
    pub eta_expected: f64,
    pub eta_residual: f64,
    /// Informational: `(xi, 1) - (mu k1 (eta, 1) - (f, x) - <f1, x>) / (2 + mu k3)`.
    pub xi_residual: f64,
    /// Informational: `<u . n, 1> - (k1 (eta, 1) - k3 (xi, 1))`.
    pub u_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Conservation {
    /// The identities only hold without Dirichlet data.
    NotApplicable { reason: String },
    Residuals(Vec<ConservationRow>),
}

impl Conservation {
    pub fn rows(&self) -> Option<&[ConservationRow]> {
        match self {
            Conservation::Residuals(r) => Some(r),
            Conservation::NotApplicable { .. } => None,
        }
    }

    pub fn max_eta_residual(&self) -> Option<f64> {
        self.rows().map(|r| max_or_nan(r.iter().map(|r| r.eta_residual)))
    }
}

/// `<u . n, 1>` over the boundary of the unit square.
pub fn boundary_flux(spaces: &SpacePair, u: &[f64]) -> f64 {
    let mesh = &spaces.mesh;
    let mut total = 0.0;
    for be in &mesh.boundary_edges {
        let n = be.segment.normal();
        let [a, b] = be.vertices;
        let (xa, xb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = ((xb[0] - xa[0]).powi(2) + (xb[1] - xa[1]).powi(2)).sqrt();
        for (s, w) in edge_rule() {
            let x = [xa[0] + s * (xb[0] - xa[0]), xa[1] + s * (xb[1] - xa[1])];
            let bary = mesh.barycentric(be.triangle, x);
            let v = spaces.vector_value(u, be.triangle, bary);
            total += w * len * (v[0] * n[0] + v[1] * n[1]);
        }
    }
    total
}

/// Residuals of the three conservation identities at every coarse index.
pub fn conservation_residuals(sim: &Simulation, traj: &Trajectory) -> Conservation {
    let bc = &sim.case.bc;
    if bc.has_displacement_dirichlet() || bc.has_pressure_dirichlet() {
        return Conservation::NotApplicable {
            reason: format!("case '{}' has Dirichlet boundary data", sim.case.name),
        };
    }
    let Some(first) = traj.snapshots.first() else {
        return Conservation::Residuals(Vec::new());
    };
    let k = sim.kappas;
    let mu = sim.params().mu;
    let ones = vec![1.0; sim.spaces.num_scalar_dofs()];
    let mass_one = sim.mass.matvec(&ones);
    let position = interpolate_vector(&sim.spaces, |x| x);
    let eta0 = dot(&mass_one, &first.eta);

    let mut rows = Vec::with_capacity(traj.snapshots.len());
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let eta_mean = dot(&mass_one, &snap.eta);
        let eta_expected = eta0 + snap.cumulative_source;
        let paired = match sim.grid.theta {
            Theta::One => &snap.eta,
            Theta::Zero => &traj.snapshots[i.saturating_sub(1)].eta,
        };
        let paired_mean = dot(&mass_one, paired);
        let xi_mean = dot(&mass_one, &snap.xi);
        let load = sim.vector_load(snap.time);
        let c_xi = (mu * k.k1 * paired_mean - dot(&load, &position)) / (2.0 + mu * k.k3);
        let flux = boundary_flux(&sim.spaces, &snap.u);
        rows.push(ConservationRow {
            index: snap.index,
            time: snap.time,
            eta_mean,
            eta_expected,
            eta_residual: (eta_mean - eta_expected).abs(),
            xi_residual: (xi_mean - c_xi).abs(),
            u_residual: (flux - (k.k1 * paired_mean - k.k3 * xi_mean)).abs(),
        });
    }
    Conservation::Residuals(rows)
}

// Spatial norms are integrated with a rule well above the element degree.
const ERROR_RULE: usize = 6;

/// `|| v_h - v ||_{L2}` for a P2 vector field.
pub fn l2_error_vector(spaces: &SpacePair, coeffs: &[f64], exact: &dyn Fn([f64; 2]) -> [f64; 2]) -> f64 {
    integrate(spaces, |t, bary, x| {
        let v = spaces.vector_value(coeffs, t, bary);
        let e = exact(x);
        (v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2)
    })
    .sqrt()
}

/// `| v_h - v |_{H1}` (full gradient seminorm) for a P2 vector field.
pub fn h1_error_vector(spaces: &SpacePair, coeffs: &[f64], grad: &dyn Fn([f64; 2]) -> [[f64; 2]; 2]) -> f64 {
    integrate(spaces, |t, bary, x| {
        let g = spaces.vector_gradient(coeffs, t, bary);
        let e = grad(x);
        (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| (g[i][j] - e[i][j]).powi(2)).sum()
    })
    .sqrt()
}

pub fn l2_error_scalar(spaces: &SpacePair, coeffs: &[f64], exact: &dyn Fn([f64; 2]) -> f64) -> f64 {
    integrate(spaces, |t, bary, x| (spaces.scalar_value(coeffs, t, bary) - exact(x)).powi(2)).sqrt()
}

/// `( K grad(p_h - p), grad(p_h - p) )^{1/2}` with a constant tensor `K`.
pub fn h1_error_scalar(spaces: &SpacePair, coeffs: &[f64], grad: &dyn Fn([f64; 2]) -> [f64; 2], k: [[f64; 2]; 2]) -> f64 {
    integrate(spaces, |t, _, x| {
        let g = spaces.scalar_gradient(coeffs, t);
        let e = grad(x);
        let d = [g[0] - e[0], g[1] - e[1]];
        d[0] * (k[0][0] * d[0] + k[0][1] * d[1]) + d[1] * (k[1][0] * d[0] + k[1][1] * d[1])
    })
    .max(0.0)
    .sqrt()
}

fn integrate(spaces: &SpacePair, mut f: impl FnMut(usize, [f64; 3], [f64; 2]) -> f64) -> f64 {
    let rule = quadrature_rule(ERROR_RULE).expect("rule exists");
    let mut total = 0.0;
    for t in 0..spaces.mesh.num_triangles() {
        let geo = spaces.geometry(t);
        for (bary, w) in rule.iter() {
            total += w * 2.0 * geo.area * f(t, bary, geo.map(bary));
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    /// `max_n || u(t_n) - u_h^n ||_{L2}` over coarse indices.
    LinfL2,
    /// `max_n | u(t_n) - u_h^n |_{H1}` over coarse indices.
    LinfH1,
    /// `(dt sum_j || p(t_j) - p_h^j ||^2)^{1/2}` over fine indices.
    L2L2,
    /// `(dt sum_j (K/mu_f) || grad(p(t_j) - p_h^j) ||^2)^{1/2}` over fine indices.
    L2H1,
}

impl NormKind {
    pub const ALL: [NormKind; 4] = [NormKind::LinfL2, NormKind::LinfH1, NormKind::L2L2, NormKind::L2H1];
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    pub u_linf_l2: f64,
    pub u_linf_h1: f64,
    pub p_l2_l2: f64,
    pub p_l2_h1: f64,
}

impl ErrorNorms {
    pub fn get(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::LinfL2 => self.u_linf_l2,
            NormKind::LinfH1 => self.u_linf_h1,
            NormKind::L2L2 => self.p_l2_l2,
            NormKind::L2H1 => self.p_l2_h1,
        }
    }
}

/// What the discrete solution is compared against.
#[derive(Clone, Copy)]
pub enum ErrorTarget<'a> {
    Exact(&'a ExactSolution),
    /// A finer single-rate run; snapshot `j` must sit at fine time `j dt`.
    Reference { spaces: &'a SpacePair, trajectory: &'a Trajectory },
}

/// Observer accumulating space-time error norms during a run.
pub struct ErrorAccumulator<'a> {
    target: ErrorTarget<'a>,
    k_weight: [[f64; 2]; 2],
    u_l2: f64,
    u_h1: f64,
    p_l2_sq: f64,
    p_h1_sq: f64,
}

impl<'a> ErrorAccumulator<'a> {
    pub fn new(target: ErrorTarget<'a>) -> Self {
        ErrorAccumulator {
            target,
            k_weight: [[0.0; 2]; 2],
            u_l2: 0.0,
            u_h1: 0.0,
            p_l2_sq: 0.0,
            p_h1_sq: 0.0,
        }
    }

    pub fn norms(&self) -> ErrorNorms {
        ErrorNorms {
            u_linf_l2: self.u_l2,
            u_linf_h1: self.u_h1,
            p_l2_l2: self.p_l2_sq.sqrt(),
            p_l2_h1: self.p_h1_sq.sqrt(),
        }
    }

    fn displacement(&mut self, spaces: &SpacePair, u: &[f64], time: f64, dt: f64) -> Result<()> {
        let (l2, h1) = match self.target {
            ErrorTarget::Exact(ex) => (
                l2_error_vector(spaces, u, &|x| (ex.u)(x, time)),
                h1_error_vector(spaces, u, &|x| (ex.grad_u)(x, time)),
            ),
            ErrorTarget::Reference { spaces: rs, trajectory } => {
                let r = reference_snapshot(trajectory, time, dt)?;
                (
                    l2_error_vector(rs, &r.u, &|x| spaces.eval_vector_at(u, x)),
                    h1_error_vector(rs, &r.u, &|x| spaces.eval_vector_gradient_at(u, x)),
                )
            }
        };
        self.u_l2 = self.u_l2.max(l2);
        self.u_h1 = self.u_h1.max(h1);
        Ok(())
    }

    fn pressure(&mut self, spaces: &SpacePair, p: &[f64], time: f64, dt: f64) -> Result<()> {
        let k = self.k_weight;
        let (l2, h1) = match self.target {
            ErrorTarget::Exact(ex) => (
                l2_error_scalar(spaces, p, &|x| (ex.p)(x, time)),
                h1_error_scalar(spaces, p, &|x| (ex.grad_p)(x, time), k),
            ),
            ErrorTarget::Reference { spaces: rs, trajectory } => {
                let r = reference_snapshot(trajectory, time, dt)?;
                (
                    l2_error_scalar(rs, &r.p, &|x| spaces.eval_scalar_at(p, x)),
                    h1_error_scalar(rs, &r.p, &|x| spaces.eval_scalar_gradient_at(p, x), k),
                )
            }
        };
        self.p_l2_sq += dt * l2 * l2;
        self.p_h1_sq += dt * h1 * h1;
        Ok(())
    }
}

fn reference_snapshot(traj: &Trajectory, time: f64, dt: f64) -> Result<&crate::scheme::Snapshot> {
    let j = (time / dt).round() as usize;
    let snap = traj
        .snapshots
        .get(j)
        .ok_or_else(|| Error::invalid(format!("reference trajectory has no snapshot at t = {time}")))?;
    if (snap.time - time).abs() > 1e-9 * dt.max(time) {
        return Err(Error::invalid(format!(
            "reference snapshot {j} is at t = {}, expected {time}; the reference must be single-rate with the same dt",
            snap.time
        )));
    }
    Ok(snap)
}

impl WindowObserver for ErrorAccumulator<'_> {
    fn initial(&mut self, sim: &Simulation, state: &State, _load_u: &[f64]) -> Result<()> {
        let params = sim.params();
        self.k_weight = params.permeability.map(|row| row.map(|v| v / params.mu_f));
        self.displacement(&sim.spaces, &state.u, state.time, sim.grid.dt)
    }

    fn window(&mut self, sim: &Simulation, rec: &WindowRecord<'_>) -> Result<()> {
        let dt = rec.grid.dt;
        self.displacement(&sim.spaces, &rec.new.u, rec.new.time, dt)?;
        let first = rec.old.n * rec.grid.m;
        for (k, p) in rec.new.fine_pressures.iter().enumerate() {
            self.pressure(&sim.spaces, p, rec.grid.fine_time(first + k + 1), dt)?;
        }
        Ok(())
    }
}

/// Pairwise rates `log(e_i / e_{i+1}) / log(h_i / h_{i+1})`. A pair yields
/// `None` when an error is not positive and finite or the two sizes coincide.
pub fn convergence_rates(errors: &[f64], hs: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != hs.len() {
        return Err(Error::invalid(format!(
            "{} errors but {} mesh sizes",
            errors.len(),
            hs.len()
        )));
    }
    if errors.len() < 2 {
        return Err(Error::invalid("at least two meshes are needed for a rate"));
    }
    if hs.windows(2).any(|w| w[1] > w[0]) || hs.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::invalid("mesh sizes must be positive and non-increasing"));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| {
            let ok = e.iter().all(|v| *v > 0.0 && v.is_finite()) && h[0] != h[1];
            ok.then(|| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub errors: ErrorNorms,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Rate of each row relative to the previous one (`None` for the first).
    pub fn rates(&self, kind: NormKind) -> Result<Vec<Option<f64>>> {
        let errors: Vec<f64> = self.rows.iter().map(|r| r.errors.get(kind)).collect();
        let hs: Vec<f64> = self.rows.iter().map(|r| r.h).collect();
        let mut out = vec![None];
        out.extend(convergence_rates(&errors, &hs)?);
        Ok(out)
    }

    pub fn errors(&self, kind: NormKind) -> Vec<f64> {
        self.rows.iter().map(|r| r.errors.get(kind)).collect()
    }
}

/// L2 norms of the coarse fields of a state, in the order `u, p, xi, eta`.
pub fn field_norms(sim: &Simulation, vector_mass: &CsrMatrix, u: &[f64], p: &[f64], xi: &[f64], eta: &[f64]) -> [f64; 4] {
    [
        vector_mass.quad_form(u).max(0.0).sqrt(),
        sim.mass.quad_form(p).max(0.0).sqrt(),
        sim.mass.quad_form(xi).max(0.0).sqrt(),
        sim.mass.quad_form(eta).max(0.0).sqrt(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{test1_manufactured, verification_neumann};
    use crate::fem::{build_spaces, interpolate_scalar};
    use crate::mesh::build_unit_square_mesh;
    use crate::scheme::{SchemeOptions, TimeGrid};
    use std::sync::Arc;

    fn spaces(n: usize) -> SpacePair {
        build_spaces(Arc::new(build_unit_square_mesh(n).unwrap()))
    }

    #[test]
    fn rates_examples() {
        let r = convergence_rates(&[1e-2, 2.5e-3], &[0.2, 0.1]).unwrap();
        assert!((r[0].unwrap() - 2.0).abs() < 1e-12);
        let r = convergence_rates(&[1.06336e-3, 9.00707e-5, 7.79098e-6, 6.87406e-7], &[0.18, 0.09, 0.045, 0.0225]).unwrap();
        for (got, want) in r.iter().zip([3.5614, 3.5312, 3.5026]) {
            assert!((got.unwrap() - want).abs() < 5e-4, "{got:?} vs {want}");
        }
        let r = convergence_rates(&[0.3, 0.3, 0.3], &[0.2, 0.1, 0.05]).unwrap();
        assert!(r.iter().all(|v| v.unwrap().abs() < 1e-15));
        let r = convergence_rates(&[0.3, 0.0], &[0.2, 0.1]).unwrap();
        assert_eq!(r, vec![None]);
        let r = convergence_rates(&[0.3, 0.1], &[0.1, 0.1]).unwrap();
        assert_eq!(r, vec![None]);
        assert!(convergence_rates(&[0.3], &[0.1]).is_err());
        assert!(convergence_rates(&[0.3, 0.1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn quadratic_field_has_zero_error() {
        let s = spaces(3);
        let u = interpolate_vector(&s, |x| [0.5 * x[0] * x[0], 0.5 * x[1] * x[1] - x[0] * x[1]]);
        let l2 = l2_error_vector(&s, &u, &|x| [0.5 * x[0] * x[0], 0.5 * x[1] * x[1] - x[0] * x[1]]);
        let h1 = h1_error_vector(&s, &u, &|x| [[x[0], 0.0], [-x[1], x[1] - x[0]]]);
        assert!(l2 < 1e-14 && h1 < 1e-12, "{l2} {h1}");
    }

    #[test]
    fn p2_interpolation_rate_is_three() {
        let f = |x: [f64; 2]| [x[0].sin() * x[1].sin(), 0.0];
        let errs: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| {
                let s = spaces(n);
                l2_error_vector(&s, &interpolate_vector(&s, f), &f)
            })
            .collect();
        let r = convergence_rates(&errs, &[0.25, 0.125, 0.0625]).unwrap();
        for v in r {
            assert!((v.unwrap() - 3.0).abs() < 0.3, "{v:?}");
        }
    }

    #[test]
    fn scalar_errors() {
        let s = spaces(4);
        let p = interpolate_scalar(&s, |x| 1.0 + 2.0 * x[0] - x[1]);
        assert!(l2_error_scalar(&s, &p, &|x| 1.0 + 2.0 * x[0] - x[1]) < 1e-14);
        let k = [[3.0, 0.0], [0.0, 3.0]];
        assert!(h1_error_scalar(&s, &p, &|_| [2.0, -1.0], k) < 1e-13);
        let e = h1_error_scalar(&s, &p, &|_| [0.0, 0.0], k);
        assert!((e - (3.0f64 * 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn boundary_flux_is_divergence_integral() {
        let s = spaces(2);
        let u = interpolate_vector(&s, |x| [x[0] * x[0], x[0] * x[1]]);
        // div u = 3x, integral 3/2
        assert!((boundary_flux(&s, &u) - 1.5).abs() < 1e-13);
    }

    #[test]
    fn energy_j_simple_values() {
        let s = spaces(2);
        let case = verification_neumann();
        let grid = TimeGrid::new(0.1, 1, 0.1, Theta::Zero).unwrap();
        let sim = Simulation::new(&case, s.clone(), grid, SchemeOptions::default()).unwrap();
        let nu = s.num_vector_dofs();
        let np = s.num_scalar_dofs();
        let zero_u = vec![0.0; nu];
        let zero_p = vec![0.0; np];
        assert_eq!(energy_j(&sim.a, &sim.mass, sim.kappas, &zero_u, &zero_p, &zero_p, &zero_u), 0.0);
        let rot = interpolate_vector(&s, |x| [-x[1], x[0]]);
        let j = energy_j(&sim.a, &sim.mass, sim.kappas, &rot, &zero_p, &zero_p, &zero_u);
        assert!(j.abs() < 1e-14);
        let ones = vec![1.0; np];
        let j = energy_j(&sim.a, &sim.mass, sim.kappas, &zero_u, &zero_p, &ones, &zero_u);
        assert!((j - 0.5 * sim.kappas.k2).abs() < 1e-14);
    }

    #[test]
    fn energy_identity_two_windows() {
        for theta in [Theta::Zero, Theta::One] {
            let case = verification_neumann();
            let grid = TimeGrid::new(0.05, 2, 0.2, theta).unwrap();
            let mut sim = Simulation::new(&case, spaces(3), grid, SchemeOptions::default()).unwrap();
            let mut tracker = EnergyTracker::new();
            sim.run(&mut [&mut tracker]).unwrap();
            let rep = tracker.into_report();
            assert_eq!(rep.rows.len(), 2);
            assert!(rep.max_relative_residual() < 1e-8, "theta {theta}: {:?}", rep.rows);
        }
    }

    #[test]
    fn conservation_on_verification_case() {
        let case = verification_neumann();
        let grid = TimeGrid::new(0.05, 2, 0.3, Theta::Zero).unwrap();
        let mut sim = Simulation::new(&case, spaces(3), grid, SchemeOptions::default()).unwrap();
        let traj = sim.run(&mut []).unwrap();
        let cons = conservation_residuals(&sim, &traj);
        let rows = cons.rows().unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert!((r.eta_mean - r.time).abs() < 1e-10, "{r:?}");
            assert!(r.eta_residual < 1e-10);
            assert!(r.u_residual < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn conservation_not_applicable_with_dirichlet() {
        let case = test1_manufactured();
        let grid = TimeGrid::new(1e-3, 1, 1e-3, Theta::Zero).unwrap();
        let mut sim = Simulation::new(&case, spaces(2), grid, SchemeOptions::default()).unwrap();
        let traj = sim.run(&mut []).unwrap();
        assert!(matches!(conservation_residuals(&sim, &traj), Conservation::NotApplicable { .. }));
    }

    #[test]
    fn exact_errors_vanish_for_exact_trajectory() {
        let case = test1_manufactured();
        let ex = case.exact.clone().unwrap();
        let s = spaces(4);
        let mut acc = ErrorAccumulator::new(ErrorTarget::Exact(&ex));
        let u = interpolate_vector(&s, |x| (ex.u)(x, 0.5));
        acc.displacement(&s, &u, 0.5, 0.1).unwrap();
        let n = acc.norms();
        assert!(n.u_linf_l2 < 1e-14 && n.u_linf_h1 < 1e-12);
    }
}
