//! Benchmark problem definitions on the unit square.

use std::fmt;
use std::sync::Arc;

use crate::assembly::{BcKind, BoundaryCondition, Field};
use crate::error::{Error, Result};
use crate::fem::{scalar_fn, vector_fn, ScalarFn, VectorFn};
use crate::mesh::Segment;
use crate::model::PhysicalParams;
use crate::scheme::{Theta, TimeGrid};

/// Matrix-valued function of position and time (e.g. a displacement gradient).
pub type TensorFn = Arc<dyn Fn([f64; 2], f64) -> [[f64; 2]; 2] + Send + Sync>;

pub fn tensor_fn(f: impl Fn([f64; 2], f64) -> [[f64; 2]; 2] + Send + Sync + 'static) -> TensorFn {
    Arc::new(f)
}

#[derive(Clone)]
pub struct ExactSolution {
    pub u: VectorFn,
    pub grad_u: TensorFn,
    pub p: ScalarFn,
    pub grad_p: VectorFn,
}

#[derive(Clone)]
pub struct CaseDefinition {
    pub name: String,
    pub params: PhysicalParams,
    pub f: VectorFn,
    pub phi: ScalarFn,
    pub bc: BoundaryCondition,
    pub initial_u: VectorFn,
    pub initial_grad_u: TensorFn,
    pub initial_p: ScalarFn,
    pub initial_q: ScalarFn,
    pub exact: Option<ExactSolution>,
    /// Desk-scale grid used by default.
    pub recommended: TimeGrid,
    /// Grid of the original experiment, kept as a preset.
    pub reference_grid: TimeGrid,
}

impl fmt::Debug for CaseDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CaseDefinition")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("bc", &self.bc)
            .field("has_exact", &self.exact.is_some())
            .field("recommended", &self.recommended)
            .finish_non_exhaustive()
    }
}

pub const CASE_NAMES: [&str; 4] = ["test1", "test2", "test3", "verification"];

fn zero_initial() -> (VectorFn, TensorFn, ScalarFn) {
    (
        vector_fn(|_, _| [0.0, 0.0]),
        tensor_fn(|_, _| [[0.0; 2]; 2]),
        scalar_fn(|_, _| 0.0),
    )
}

pub fn test1_params() -> PhysicalParams {
    PhysicalParams::from_young(1e-4, 0.4, 1e-5, 0.83, 1e-5, 1.0).expect("valid parameters")
}

pub fn test2_params() -> PhysicalParams {
    PhysicalParams::from_young(3.5e-2, 0.11, 0.9, 0.31, 3e-6, 1.0).expect("valid parameters")
}

pub fn test3_params() -> PhysicalParams {
    PhysicalParams::from_young(1e5, 0.4, 0.01, 0.93, 0.1, 1.0).expect("valid parameters")
}

/// Manufactured solution `u = t/2 (x^2, y^2)`, `p = sin(x+y) e^t`.
pub fn test1_manufactured() -> CaseDefinition {
    test1_manufactured_with(test1_params())
}

pub fn test1_manufactured_with(params: PhysicalParams) -> CaseDefinition {
    let (lambda, mu, alpha, c0) = (params.lambda, params.mu, params.alpha, params.c0);
    let k_over_mu = params.permeability[0][0] / params.mu_f;

    let f = vector_fn(move |x, t| {
        let s = -(lambda + mu) * t + alpha * (x[0] + x[1]).cos() * t.exp();
        [s, s]
    });
    let phi = scalar_fn(move |x, t| (c0 + 2.0 * k_over_mu) * (x[0] + x[1]).sin() * t.exp() + alpha * (x[0] + x[1]));

    let p_exact = scalar_fn(|x, t| (x[0] + x[1]).sin() * t.exp());
    let mut bc = BoundaryCondition::new();
    bc.set_many(&Segment::ALL, Field::P, BcKind::Dirichlet(p_exact.clone()));
    bc.set_many(
        &[Segment::G2, Segment::G4],
        Field::Ux,
        BcKind::Dirichlet(scalar_fn(|x, t| 0.5 * x[0] * x[0] * t)),
    );
    bc.set_many(
        &[Segment::G1, Segment::G3],
        Field::Uy,
        BcKind::Dirichlet(scalar_fn(|x, t| 0.5 * x[1] * x[1] * t)),
    );
    // total traction f1 = mu t (x n1, y n2) + lambda (x+y) t n - alpha sin(x+y) e^t n
    for seg in Segment::ALL {
        let n = seg.normal();
        for (c, field) in [(0usize, Field::Ux), (1usize, Field::Uy)] {
            if bc.get(seg, field).is_none() {
                let traction = scalar_fn(move |x, t| {
                    mu * t * x[c] * n[c] + lambda * (x[0] + x[1]) * t * n[c] - alpha * (x[0] + x[1]).sin() * t.exp() * n[c]
                });
                bc.set(seg, field, BcKind::Neumann(traction));
            }
        }
    }

    let exact = ExactSolution {
        u: vector_fn(|x, t| [0.5 * t * x[0] * x[0], 0.5 * t * x[1] * x[1]]),
        grad_u: tensor_fn(|x, t| [[t * x[0], 0.0], [0.0, t * x[1]]]),
        p: p_exact,
        grad_p: vector_fn(|x, t| {
            let g = (x[0] + x[1]).cos() * t.exp();
            [g, g]
        }),
    };
    let (u0, gu0, _) = zero_initial();
    CaseDefinition {
        name: "test1".into(),
        params,
        f,
        phi,
        bc,
        initial_u: u0,
        initial_grad_u: gu0,
        initial_p: scalar_fn(|x, _| (x[0] + x[1]).sin()),
        initial_q: scalar_fn(|_, _| 0.0),
        exact: Some(exact),
        recommended: TimeGrid::new(1e-4, 5, 0.01, Theta::Zero).expect("valid grid"),
        reference_grid: TimeGrid::new(1e-6, 5, 1.0, Theta::Zero).expect("valid grid"),
    }
}

/// Pressure pulse on the bottom boundary: `sin t` for `x` in `[0.2, 0.8)`.
pub fn barry_mercer_p2(x: [f64; 2], t: f64) -> f64 {
    if (0.2..0.8).contains(&x[0]) {
        t.sin()
    } else {
        0.0
    }
}

pub fn test2_barry_mercer() -> CaseDefinition {
    test2_barry_mercer_with(test2_params())
}

pub fn test2_barry_mercer_with(params: PhysicalParams) -> CaseDefinition {
    let alpha = params.alpha;
    let zero = scalar_fn(|_, _| 0.0);
    let mut bc = BoundaryCondition::new();
    bc.set(Segment::G1, Field::P, BcKind::Dirichlet(scalar_fn(barry_mercer_p2)));
    bc.set_many(&[Segment::G2, Segment::G3, Segment::G4], Field::P, BcKind::Dirichlet(zero.clone()));
    bc.set_many(&[Segment::G2, Segment::G4], Field::Ux, BcKind::Dirichlet(zero.clone()));
    bc.set_many(&[Segment::G1, Segment::G3], Field::Uy, BcKind::Dirichlet(zero.clone()));
    // traction (0, alpha p) with p the boundary pressure of the segment
    bc.set_many(&[Segment::G1, Segment::G3], Field::Ux, BcKind::Neumann(zero.clone()));
    bc.set_many(&[Segment::G2, Segment::G4], Field::Uy, BcKind::Neumann(scalar_fn(move |_, _| alpha * 0.0)));

    let (u0, gu0, z) = zero_initial();
    CaseDefinition {
        name: "test2".into(),
        params,
        f: vector_fn(|_, _| [0.0, 0.0]),
        phi: zero,
        bc,
        initial_u: u0,
        initial_grad_u: gu0,
        initial_p: z.clone(),
        initial_q: z,
        exact: None,
        recommended: TimeGrid::new(1e-3, 5, 0.1, Theta::Zero).expect("valid grid"),
        reference_grid: TimeGrid::new(1e-5, 5, 1.0, Theta::Zero).expect("valid grid"),
    }
}

/// Footing problem: clamped bottom, unit downward load on the top, no-flux
/// pressure boundary.
pub fn test3_footing() -> CaseDefinition {
    test3_footing_with(test3_params())
}

pub fn test3_footing_with(params: PhysicalParams) -> CaseDefinition {
    let zero = scalar_fn(|_, _| 0.0);
    let mut bc = BoundaryCondition::new();
    bc.set_many(&Segment::ALL, Field::P, BcKind::Neumann(zero.clone()));
    bc.set(Segment::G1, Field::Ux, BcKind::Dirichlet(zero.clone()));
    bc.set(Segment::G1, Field::Uy, BcKind::Dirichlet(zero.clone()));
    bc.set_many(&[Segment::G2, Segment::G3, Segment::G4], Field::Ux, BcKind::Neumann(zero.clone()));
    bc.set_many(&[Segment::G2, Segment::G4], Field::Uy, BcKind::Neumann(zero.clone()));
    bc.set(Segment::G3, Field::Uy, BcKind::Neumann(scalar_fn(|_, _| -1.0)));

    let (u0, gu0, z) = zero_initial();
    CaseDefinition {
        name: "test3".into(),
        params,
        f: vector_fn(|_, _| [0.0, 0.0]),
        phi: zero,
        bc,
        initial_u: u0,
        initial_grad_u: gu0,
        initial_p: z.clone(),
        initial_q: z,
        exact: None,
        recommended: TimeGrid::new(1e-3, 5, 0.1, Theta::Zero).expect("valid grid"),
        reference_grid: TimeGrid::new(1e-5, 5, 1.0, Theta::Zero).expect("valid grid"),
    }
}

/// Pure traction and pure flux problem driven by a unit fluid source,
/// starting from rest. Rigid motions are removed by constraints.
pub fn verification_neumann() -> CaseDefinition {
    verification_neumann_with(test1_params())
}

pub fn verification_neumann_with(params: PhysicalParams) -> CaseDefinition {
    let zero = scalar_fn(|_, _| 0.0);
    let mut bc = BoundaryCondition::new();
    for field in Field::ALL {
        bc.set_many(&Segment::ALL, field, BcKind::Neumann(zero.clone()));
    }
    let (u0, gu0, z) = zero_initial();
    CaseDefinition {
        name: "verification".into(),
        params,
        f: vector_fn(|_, _| [0.0, 0.0]),
        phi: scalar_fn(|_, _| 1.0),
        bc,
        initial_u: u0,
        initial_grad_u: gu0,
        initial_p: z.clone(),
        initial_q: z,
        exact: None,
        recommended: TimeGrid::new(1e-2, 1, 0.2, Theta::Zero).expect("valid grid"),
        reference_grid: TimeGrid::new(1e-2, 1, 0.2, Theta::Zero).expect("valid grid"),
    }
}

pub fn case_by_name(name: &str) -> Result<CaseDefinition> {
    match normalize(name)? {
        "test1" => Ok(test1_manufactured()),
        "test2" => Ok(test2_barry_mercer()),
        "test3" => Ok(test3_footing()),
        _ => Ok(verification_neumann()),
    }
}

/// Builds a case with replaced physical parameters.
pub fn case_by_name_with(name: &str, params: PhysicalParams) -> Result<CaseDefinition> {
    params.validate()?;
    match normalize(name)? {
        "test1" => Ok(test1_manufactured_with(params)),
        "test2" => Ok(test2_barry_mercer_with(params)),
        "test3" => Ok(test3_footing_with(params)),
        _ => Ok(verification_neumann_with(params)),
    }
}

/// Default physical parameters of a case.
pub fn default_params(name: &str) -> Result<PhysicalParams> {
    match normalize(name)? {
        "test2" => Ok(test2_params()),
        "test3" => Ok(test3_params()),
        _ => Ok(test1_params()),
    }
}

fn normalize(name: &str) -> Result<&'static str> {
    match name.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
        "test1" | "test1_manufactured" | "manufactured" => Ok("test1"),
        "test2" | "test2_barry_mercer" | "barry_mercer" => Ok("test2"),
        "test3" | "test3_footing" | "footing" => Ok("test3"),
        "verification" | "verification_neumann" | "neumann" => Ok("verification"),
        other => Err(Error::invalid(format!(
            "unknown case '{other}' (expected one of {})",
            CASE_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test1_exact_values() {
        let c = test1_manufactured();
        let ex = c.exact.as_ref().unwrap();
        assert_eq!((ex.u)([0.5, 0.5], 1.0), [0.125, 0.125]);
        assert_eq!((ex.p)([0.0, 0.0], 0.0), 0.0);
        assert!((c.params.lambda - 1.43e-4).abs() < 0.005e-4);
        assert!((c.params.mu - 3.57e-5).abs() < 0.005e-5);
    }

    #[test]
    fn test1_initial_data_matches_exact() {
        let c = test1_manufactured();
        let ex = c.exact.as_ref().unwrap();
        for &x in &[[0.1, 0.7], [0.4, 0.4], [1.0, 0.0]] {
            assert!(((c.initial_p)(x, 0.0) - (ex.p)(x, 0.0)).abs() < 1e-12);
            let u = (ex.u)(x, 0.0);
            assert!(u[0].abs() < 1e-12 && u[1].abs() < 1e-12);
        }
    }

    #[test]
    fn test1_strong_form_residual() {
        let c = test1_manufactured();
        let ex = c.exact.clone().unwrap();
        let p = &c.params;
        let h = 1e-4;
        for &(x, t) in &[([0.3, 0.6], 0.5), ([0.71, 0.12], 1.3), ([0.5, 0.5], 0.01)] {
            // sigma = mu eps(u) + lambda div(u) I, evaluated from the analytic gradient
            let sigma = |x: [f64; 2]| {
                let g = (ex.grad_u)(x, t);
                let div = g[0][0] + g[1][1];
                let e01 = 0.5 * (g[0][1] + g[1][0]);
                [[p.mu * g[0][0] + p.lambda * div, p.mu * e01], [p.mu * e01, p.mu * g[1][1] + p.lambda * div]]
            };
            let mut div_sigma = [0.0; 2];
            for i in 0..2 {
                let sx = (sigma([x[0] + h, x[1]])[i][0] - sigma([x[0] - h, x[1]])[i][0]) / (2.0 * h);
                let sy = (sigma([x[0], x[1] + h])[i][1] - sigma([x[0], x[1] - h])[i][1]) / (2.0 * h);
                div_sigma[i] = sx + sy;
            }
            let gp = (ex.grad_p)(x, t);
            let f = (c.f)(x, t);
            for i in 0..2 {
                let r = -div_sigma[i] + p.alpha * gp[i] - f[i];
                assert!(r.abs() <= 1e-8 * f[i].abs().max(1e-12), "momentum residual {r}");
            }
            // (c0 p + alpha div u)_t - (K/mu_f) lap p = phi
            let ptime = ((ex.p)(x, t + h) - (ex.p)(x, t - h)) / (2.0 * h);
            let div_u = |t: f64| {
                let g = (ex.grad_u)(x, t);
                g[0][0] + g[1][1]
            };
            let qtime = (div_u(t + h) - div_u(t - h)) / (2.0 * h);
            let lap = ((ex.p)([x[0] + h, x[1]], t) + (ex.p)([x[0] - h, x[1]], t) + (ex.p)([x[0], x[1] + h], t)
                + (ex.p)([x[0], x[1] - h], t)
                - 4.0 * (ex.p)(x, t))
                / (h * h);
            let k = p.permeability[0][0] / p.mu_f;
            let lhs = p.c0 * ptime + p.alpha * qtime - k * lap;
            let phi = (c.phi)(x, t);
            assert!((lhs - phi).abs() <= 1e-7 * phi.abs(), "mass residual {}", lhs - phi);
        }
    }

    #[test]
    fn test1_traction_matches_stress() {
        let c = test1_manufactured();
        let ex = c.exact.clone().unwrap();
        let p = &c.params;
        let (x, t) = ([0.0, 0.37], 0.8);
        // on G4 the y-component is natural
        let g = (ex.grad_u)(x, t);
        let div = g[0][0] + g[1][1];
        let n = Segment::G4.normal();
        let sigma_n_y = p.mu * 0.5 * (g[0][1] + g[1][0]) * n[0] + (p.mu * g[1][1] + p.lambda * div) * n[1];
        let expected = sigma_n_y - p.alpha * (ex.p)(x, t) * n[1];
        let BcKind::Neumann(f1) = c.bc.get(Segment::G4, Field::Uy).unwrap() else {
            panic!("expected traction")
        };
        assert!((f1(x, t) - expected).abs() < 1e-15);
    }

    #[test]
    fn barry_mercer_pulse() {
        assert_eq!(barry_mercer_p2([0.5, 0.0], 0.3), 0.3f64.sin());
        assert_eq!(barry_mercer_p2([0.9, 0.0], 0.3), 0.0);
        assert_eq!(barry_mercer_p2([0.2, 0.0], 0.3), 0.3f64.sin());
        assert_eq!(barry_mercer_p2([0.8, 0.0], 0.3), 0.0);
    }

    #[test]
    fn footing_data() {
        let c = test3_footing();
        let BcKind::Neumann(f) = c.bc.get(Segment::G3, Field::Uy).unwrap() else { panic!() };
        assert_eq!(f([0.4, 1.0], 0.2), -1.0);
        let BcKind::Neumann(f) = c.bc.get(Segment::G3, Field::Ux).unwrap() else { panic!() };
        assert_eq!(f([0.4, 1.0], 0.2), 0.0);
        assert_eq!((c.initial_p)([0.3, 0.3], 0.0), 0.0);
        assert!((c.params.lambda - 142_857.14).abs() < 0.01);
    }

    #[test]
    fn all_cases_valid_and_named() {
        for name in CASE_NAMES {
            let c = case_by_name(name).unwrap();
            c.bc.validate().unwrap();
            c.recommended.validate().unwrap();
            c.reference_grid.validate().unwrap();
        }
        assert!(case_by_name("test9").is_err());
        assert_eq!(case_by_name("Barry-Mercer").unwrap().name, "test2");
    }
}
