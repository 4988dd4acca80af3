//! Physical parameters of the Biot model and the change of variables
//! `xi = alpha p - lambda q`, `eta = c0 p + alpha q` with `q = div u`.

use crate::assembly::check_spd_2x2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappas {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub young: f64,
    pub nu: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Bulk modulus `lambda + 2 mu / 3`; informational only.
    pub bulk: f64,
    pub c0: f64,
    pub alpha: f64,
    pub permeability: [[f64; 2]; 2],
    pub mu_f: f64,
    pub rho_f: f64,
    pub gravity: [f64; 2],
}

impl PhysicalParams {
    /// Parameters from Young's modulus and Poisson ratio with isotropic
    /// permeability `k I`. Fluid density and gravity default to zero.
    pub fn from_young(young: f64, nu: f64, c0: f64, alpha: f64, k: f64, mu_f: f64) -> Result<Self> {
        let (lambda, mu) = derive_lame(young, nu)?;
        let p = PhysicalParams {
            young,
            nu,
            lambda,
            mu,
            bulk: lambda + 2.0 * mu / 3.0,
            c0,
            alpha,
            permeability: [[k, 0.0], [0.0, k]],
            mu_f,
            rho_f: 0.0,
            gravity: [0.0, 0.0],
        };
        p.validate()?;
        log::debug!("derived lambda={lambda:.6e} mu={mu:.6e} bulk={:.6e}", p.bulk);
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(Error::invalid(format!("Poisson ratio must lie in (0, 0.5), got {}", self.nu)));
        }
        if !(self.young > 0.0 && self.young.is_finite()) {
            return Err(Error::invalid(format!("Young's modulus must be positive, got {}", self.young)));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::invalid(format!(
                "storage coefficient c0 must be positive (c0 = {} makes kappa3 = 0 and the xi block degenerate)",
                self.c0
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("Biot-Willis constant must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.mu_f > 0.0 && self.mu_f.is_finite()) {
            return Err(Error::invalid(format!("fluid viscosity must be positive, got {}", self.mu_f)));
        }
        if !(self.rho_f.is_finite() && self.gravity.iter().all(|g| g.is_finite())) {
            return Err(Error::invalid("fluid density and gravity must be finite"));
        }
        check_spd_2x2(self.permeability)
    }

    pub fn kappas(&self) -> Kappas {
        derive_kappas(self.alpha, self.lambda, self.c0).expect("validated parameters")
    }

    /// Largest eigenvalue of the permeability tensor.
    pub fn k_max(&self) -> f64 {
        let k = self.permeability;
        let tr = k[0][0] + k[1][1];
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt()
    }
}

/// Lamé constants `(lambda, mu)` from Young's modulus and Poisson ratio.
pub fn derive_lame(young: f64, nu: f64) -> Result<(f64, f64)> {
    if !(young > 0.0 && young.is_finite()) {
        return Err(Error::invalid(format!("Young's modulus must be positive, got {young}")));
    }
    if !(nu > 0.0 && nu < 0.5) {
        return Err(Error::invalid(format!(
            "Poisson ratio must lie in (0, 0.5), got {nu} (the incompressible limit is unsupported)"
        )));
    }
    let lambda = young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = young / (2.0 * (1.0 + nu));
    Ok((lambda, mu))
}

pub fn derive_kappas(alpha: f64, lambda: f64, c0: f64) -> Result<Kappas> {
    if !(alpha > 0.0 && lambda > 0.0 && c0 > 0.0) {
        return Err(Error::invalid(format!(
            "kappas need alpha, lambda, c0 > 0 (got {alpha}, {lambda}, {c0})"
        )));
    }
    let d = alpha * alpha + lambda * c0;
    Ok(Kappas {
        k1: alpha / d,
        k2: lambda / d,
        k3: c0 / d,
    })
}

/// `(p, q) -> (xi, eta)`, applied entrywise.
pub fn to_reformulated(p: &[f64], q: &[f64], params: &PhysicalParams) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(p.len(), q.len());
    let (a, l, c0) = (params.alpha, params.lambda, params.c0);
    let xi = p.iter().zip(q).map(|(p, q)| a * p - l * q).collect();
    let eta = p.iter().zip(q).map(|(p, q)| c0 * p + a * q).collect();
    (xi, eta)
}

/// `(xi, eta) -> (p, q)`, applied entrywise.
pub fn recover_pq(xi: &[f64], eta: &[f64], params: &PhysicalParams) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(xi.len(), eta.len());
    let k = params.kappas();
    let p = xi.iter().zip(eta).map(|(x, e)| k.k1 * x + k.k2 * e).collect();
    let q = xi.iter().zip(eta).map(|(x, e)| k.k1 * e - k.k3 * x).collect();
    (p, q)
}
