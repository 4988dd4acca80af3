//! Multirate time integrator.
//!
//! Each coarse window of length `m * dt` performs one generalized Stokes
//! solve for `(u, xi)` followed by `m` backward Euler steps of the `eta`
//! diffusion problem with `xi` frozen. With `theta = 0` the Stokes solve
//! uses `eta` from the start of the window; with `theta = 1` the two solves
//! are iterated to a fixed point so that the Stokes solve sees `eta` at the
//! end of the window.

use std::fmt;
use std::time::Instant;

use crate::assembly::{
    assemble_a, assemble_b, assemble_c_mass, assemble_diffusion, assemble_scalar_load, assemble_vector_load,
    rm_constraints, CsrMatrix, Elimination,
};
use crate::cases::CaseDefinition;
use crate::error::{Error, Result};
use crate::fem::SpacePair;
use crate::linsolve::{SaddleSolver, SpdSolver};
use crate::model::{Kappas, PhysicalParams};
use crate::projections::{project_qh, project_rh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theta {
    /// Stokes step driven by `eta` at the start of the window.
    Zero,
    /// Stokes and diffusion steps coupled through a fixed-point loop.
    One,
}

impl Theta {
    pub fn from_int(v: i64) -> Result<Theta> {
        match v {
            0 => Ok(Theta::Zero),
            1 => Ok(Theta::One),
            other => Err(Error::invalid(format!("theta must be 0 or 1, got {other}"))),
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Theta::Zero => 0,
            Theta::One => 1,
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_int())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub m: usize,
    pub t_final: f64,
    pub theta: Theta,
}

impl TimeGrid {
    pub fn new(dt: f64, m: usize, t_final: f64, theta: Theta) -> Result<Self> {
        let g = TimeGrid { dt, m, t_final, theta };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if self.m == 0 {
            return Err(Error::invalid("m (fine steps per coarse step) must be at least 1"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(format!("final time must be positive, got {}", self.t_final)));
        }
        let ratio = self.t_final / (self.m as f64 * self.dt);
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-10 * ratio {
            return Err(Error::invalid(format!(
                "T / (m dt) = {ratio} is not a positive integer (T = {}, m = {}, dt = {})",
                self.t_final, self.m, self.dt
            )));
        }
        Ok(())
    }

    pub fn coarse_dt(&self) -> f64 {
        self.m as f64 * self.dt
    }

    pub fn n_coarse(&self) -> usize {
        (self.t_final / self.coarse_dt()).round() as usize
    }

    pub fn n_fine(&self) -> usize {
        self.n_coarse() * self.m
    }

    /// Time of fine index `j`.
    pub fn fine_time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// Time of coarse index `n`.
    pub fn coarse_time(&self, n: usize) -> f64 {
        self.fine_time(n * self.m)
    }
}

/// How the coarse-level pressure snapshot is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureUpdate {
    /// `p = k1 xi^{(n+1)m} + k2 eta^{(n+1)m}`, consistent with the fine steps.
    Fine,
    /// `p = k1 xi^{(n+1)m} + k2 eta^{(n+theta)m}` (lags a window when theta = 0).
    Lagged,
}

/// How a Dirichlet pressure value is turned into boundary values of `eta`
/// in the fine steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletClosure {
    /// `Exact` when the case has an exact solution, `Dilatation` otherwise.
    Auto,
    /// `eta = c0 p + alpha div u` from the exact solution of the case.
    Exact,
    /// `eta = c0 p_D + alpha q`, with the dilatation `q = k1 eta_in - k3 xi`
    /// of the latest Stokes solve.
    Dilatation,
    /// `eta = (p_D - k1 xi) / k2`, so that `p = p_D` holds exactly.
    Pressure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOptions {
    pub pressure_update: PressureUpdate,
    pub dirichlet_closure: DirichletClosure,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iterations: usize,
    /// Surrogate inf-sup constant in the theta = 0 step-size advisory.
    pub stability_beta: f64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions {
            pressure_update: PressureUpdate::Fine,
            dirichlet_closure: DirichletClosure::Auto,
            fixed_point_tol: 1e-10,
            max_fixed_point_iterations: 50,
            stability_beta: 0.1,
        }
    }
}

/// Coarse-level state at coarse index `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub n: usize,
    pub time: f64,
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    /// `eta^{nm}`.
    pub eta: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Fine history `eta^{(n-1)m + k}`, `k = 0..=m`, of the window that
    /// produced this state (just `[eta^0]` initially).
    pub eta_history: Vec<Vec<f64>>,
    /// Fine pressures `p^{(n-1)m + k}`, `k = 1..=m`, of that window.
    pub fine_pressures: Vec<Vec<f64>>,
}

/// Everything an observer needs about one advanced window.
pub struct WindowRecord<'a> {
    pub window: usize,
    pub grid: &'a TimeGrid,
    pub old: &'a State,
    pub new: &'a State,
    /// Vector loads at the start and end of the window.
    pub load_u_old: &'a [f64],
    pub load_u_new: &'a [f64],
    /// Scalar loads at the fine times of the window, `k = 1..=m`.
    pub fine_loads: &'a [Vec<f64>],
    pub iterations: usize,
}

pub trait WindowObserver {
    fn initial(&mut self, _sim: &Simulation, _state: &State, _load_u: &[f64]) -> Result<()> {
        Ok(())
    }

    fn window(&mut self, sim: &Simulation, rec: &WindowRecord<'_>) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub index: usize,
    pub time: f64,
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `dt * sum_j [(phi, 1) + <phi_1, 1>](t_j)` over fine steps up to this time.
    pub cumulative_source: f64,
    pub fixed_point_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineScalars {
    pub step: usize,
    pub time: f64,
    /// `(K/mu_f) |grad p|^2` integrated over the domain.
    pub pressure_energy: f64,
    /// `|d_t eta|` in L2.
    pub dt_eta_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub setup_seconds: f64,
    pub loop_seconds: f64,
    pub stokes_solves: usize,
    pub diffusion_solves: usize,
    pub advisories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub fine: Vec<FineScalars>,
    pub stats: RunStats,
}

/// Assembled and factored operators for one case, mesh and time grid.
pub struct Simulation {
    pub case: CaseDefinition,
    pub spaces: SpacePair,
    pub grid: TimeGrid,
    pub options: SchemeOptions,
    pub kappas: Kappas,
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    /// P1 mass matrix.
    pub mass: CsrMatrix,
    /// `(K/mu_f)` P1 stiffness.
    pub diffusion: CsrMatrix,
    pub rm_rows: Option<[Vec<f64>; 3]>,
    p_dirichlet_dofs: Vec<usize>,
    stokes: SaddleSolver,
    diffusion_elim: Elimination,
    diffusion_solver: SpdSolver,
    pub setup_seconds: f64,
    pub advisories: Vec<String>,
    stokes_solves: usize,
    diffusion_solves: usize,
}

impl fmt::Debug for Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation")
            .field("case", &self.case.name)
            .field("n", &self.spaces.mesh.n)
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl Simulation {
    pub fn new(case: &CaseDefinition, spaces: SpacePair, grid: TimeGrid, mut options: SchemeOptions) -> Result<Self> {
        let start = Instant::now();
        options.dirichlet_closure = match (options.dirichlet_closure, &case.exact) {
            (DirichletClosure::Auto, Some(_)) => DirichletClosure::Exact,
            (DirichletClosure::Auto, None) => DirichletClosure::Dilatation,
            (DirichletClosure::Exact, None) => {
                return Err(Error::invalid(format!("case '{}' has no exact solution for the exact closure", case.name)))
            }
            (c, _) => c,
        };
        grid.validate()?;
        case.params.validate()?;
        case.bc.validate()?;
        let params = &case.params;
        let kappas = params.kappas();

        let a = assemble_a(&spaces, params.mu);
        let b = assemble_b(&spaces);
        let mass = assemble_c_mass(&spaces, 1.0);
        let diffusion = assemble_diffusion(&spaces, params.permeability, params.mu_f)?;
        let rm_rows = (!case.bc.has_displacement_dirichlet()).then(|| rm_constraints(&spaces));

        let u_dirichlet_dofs: Vec<usize> = case.bc.vector_dirichlet(&spaces, 0.0).iter().map(|d| d.0).collect();
        let p_dirichlet_dofs: Vec<usize> = case.bc.pressure_dirichlet(&spaces, 0.0).iter().map(|d| d.0).collect();

        let c = mass.scaled(kappas.k3);
        let rows: &[Vec<f64>] = rm_rows.as_ref().map_or(&[], |r| &r[..]);
        let stokes = SaddleSolver::new(&a, &b, &c, rows, &u_dirichlet_dofs)?;

        let step_matrix = mass.add_scaled(1.0 / grid.dt, &diffusion, kappas.k2);
        let diffusion_elim = Elimination::new(&step_matrix, &p_dirichlet_dofs)?;
        let diffusion_solver = SpdSolver::new(&diffusion_elim.matrix)?;

        let mut advisories = Vec::new();
        if grid.theta == Theta::Zero {
            let h = spaces.mesh.h;
            let m = grid.m as f64;
            let limit = params.mu_f * options.stability_beta.powi(2) * h * h
                / (params.mu * kappas.k1 * kappas.k1 * params.k_max() * m * m);
            if grid.dt > limit {
                let msg = format!(
                    "theta = 0 stability advisory: dt = {:.3e} exceeds mu_f beta^2 h^2 / (mu k1^2 K m^2) = {limit:.3e} (beta = {})",
                    grid.dt, options.stability_beta
                );
                log::warn!("{msg}");
                advisories.push(msg);
            }
        }

        Ok(Simulation {
            case: case.clone(),
            spaces,
            grid,
            options,
            kappas,
            a,
            b,
            mass,
            diffusion,
            rm_rows,
            p_dirichlet_dofs,
            stokes,
            diffusion_elim,
            diffusion_solver,
            setup_seconds: start.elapsed().as_secs_f64(),
            advisories,
            stokes_solves: 0,
            diffusion_solves: 0,
        })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.case.params
    }

    pub fn stokes_solves(&self) -> usize {
        self.stokes_solves
    }

    pub fn diffusion_solves(&self) -> usize {
        self.diffusion_solves
    }

    pub fn vector_load(&self, t: f64) -> Vec<f64> {
        assemble_vector_load(&self.spaces, &self.case.f, &self.case.bc, t)
    }

    pub fn scalar_load(&self, t: f64) -> Vec<f64> {
        assemble_scalar_load(&self.spaces, &self.case.phi, &self.case.bc, &self.case.params, t)
    }

    pub fn has_pressure_dirichlet(&self) -> bool {
        !self.p_dirichlet_dofs.is_empty()
    }

    pub fn has_rm_constraints(&self) -> bool {
        self.rm_rows.is_some()
    }

    /// Initial state from the projections of the initial data.
    pub fn init_state(&self) -> Result<State> {
        let case = &self.case;
        let params = &case.params;
        let u0 = case.initial_grad_u.clone();
        let u = project_rh(&self.spaces, &|x| u0(x, 0.0), "initial displacement")?.coefficients;
        let p0 = case.initial_p.clone();
        let p = project_qh(&self.spaces, &|x| p0(x, 0.0), "initial pressure")?.coefficients;
        let q0 = case.initial_q.clone();
        let q = project_qh(&self.spaces, &|x| q0(x, 0.0), "initial dilatation")?.coefficients;
        let xi: Vec<f64> = p.iter().zip(&q).map(|(p, q)| params.alpha * p - params.lambda * q).collect();
        let eta: Vec<f64> = p.iter().zip(&q).map(|(p, q)| params.c0 * p + params.alpha * q).collect();
        Ok(State {
            n: 0,
            time: 0.0,
            u,
            xi,
            eta: eta.clone(),
            p,
            q,
            eta_history: vec![eta],
            fine_pressures: Vec::new(),
        })
    }

    /// Step 1: solves `A u + B^T xi = F(t)`, `-B u + k3 M xi = k1 M eta_input`.
    pub fn coarse_step_stokes(&mut self, eta_input: &[f64], t: f64, load_u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let g: Vec<f64> = self.mass.matvec(eta_input).iter().map(|v| self.kappas.k1 * v).collect();
        let dirichlet = self.case.bc.vector_dirichlet(&self.spaces, t);
        let sol = self.stokes.solve(load_u, &g, &dirichlet)?;
        self.stokes_solves += 1;
        let worst = sol.residuals.iter().fold(0.0f64, |m, r| m.max(*r));
        if worst > 1e-10 {
            log::warn!("Stokes solve at t = {t:.6e}: blockwise residual {worst:.3e}");
        }
        Ok((sol.u, sol.xi))
    }

    /// Step 2, one fine step: `(M/dt + k2 L) eta = M eta_prev / dt - k1 L xi + Phi(t)`.
    /// `eta_in` is the diffusion field the Stokes step was driven by; it
    /// enters the Dirichlet closure.
    pub fn fine_step_diffusion(
        &mut self,
        eta_prev: &[f64],
        eta_in: &[f64],
        xi_new: &[f64],
        t: f64,
        load_p: &[f64],
    ) -> Result<Vec<f64>> {
        let k = self.kappas;
        let dt = self.grid.dt;
        let m_eta = self.mass.matvec(eta_prev);
        let l_xi = self.diffusion.matvec(xi_new);
        let rhs: Vec<f64> = (0..m_eta.len())
            .map(|i| m_eta[i] / dt - k.k1 * l_xi[i] + load_p[i])
            .collect();
        let values: Vec<(usize, f64)> = self
            .case
            .bc
            .pressure_dirichlet(&self.spaces, t)
            .into_iter()
            .map(|(d, p)| {
                let params = &self.case.params;
                let v = match self.options.dirichlet_closure {
                    DirichletClosure::Exact | DirichletClosure::Auto => {
                        let ex = self.case.exact.as_ref().expect("resolved in Simulation::new");
                        let g = (ex.grad_u)(self.spaces.scalar_dof_coords(d), t);
                        params.c0 * p + params.alpha * (g[0][0] + g[1][1])
                    }
                    DirichletClosure::Pressure => (p - k.k1 * xi_new[d]) / k.k2,
                    DirichletClosure::Dilatation => {
                        params.c0 * p + params.alpha * (k.k1 * eta_in[d] - k.k3 * xi_new[d])
                    }
                };
                (d, v)
            })
            .collect();
        let reduced = self.diffusion_elim.rhs(&rhs, &values);
        let eta = self.diffusion_solver.solve(&reduced)?;
        self.diffusion_solves += 1;
        Ok(eta)
    }

    fn fine_steps(
        &mut self,
        eta_start: &[f64],
        eta_in: &[f64],
        xi_new: &[f64],
        first_step: usize,
        loads: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>> {
        let mut history = Vec::with_capacity(self.grid.m + 1);
        history.push(eta_start.to_vec());
        for k in 1..=self.grid.m {
            let t = self.grid.fine_time(first_step + k);
            let eta = self.fine_step_diffusion(&history[k - 1], eta_in, xi_new, t, &loads[k - 1])?;
            history.push(eta);
        }
        Ok(history)
    }

    /// Step 3: fine pressures `k1 xi + k2 eta^{nm+k}` and the coarse `(p, q)`.
    pub fn update_pq(&self, xi: &[f64], history: &[Vec<f64>], eta_lagged: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let k = self.kappas;
        let fine: Vec<Vec<f64>> = history[1..]
            .iter()
            .map(|eta| xi.iter().zip(eta).map(|(x, e)| k.k1 * x + k.k2 * e).collect())
            .collect();
        let eta_end = history.last().expect("non-empty history");
        let p = match self.options.pressure_update {
            PressureUpdate::Fine => fine.last().cloned().unwrap_or_else(|| {
                xi.iter().zip(eta_end).map(|(x, e)| k.k1 * x + k.k2 * e).collect()
            }),
            PressureUpdate::Lagged => xi.iter().zip(eta_lagged).map(|(x, e)| k.k1 * x + k.k2 * e).collect(),
        };
        let q = xi.iter().zip(eta_end).map(|(x, e)| k.k1 * e - k.k3 * x).collect();
        (fine, p, q)
    }

    /// Advances one coarse window; returns the new state, the scalar loads
    /// used at the fine steps, and the fixed-point iteration count.
    pub fn advance_coarse(&mut self, state: &State, load_u_new: &[f64]) -> Result<(State, Vec<Vec<f64>>, usize)> {
        let n = state.n;
        let m = self.grid.m;
        let first = n * m;
        let t_new = self.grid.coarse_time(n + 1);
        let loads: Vec<Vec<f64>> = (1..=m).map(|k| self.scalar_load(self.grid.fine_time(first + k))).collect();

        let (u, xi, history, iterations) = match self.grid.theta {
            Theta::Zero => {
                let (u, xi) = self.coarse_step_stokes(&state.eta, t_new, load_u_new)?;
                let history = self.fine_steps(&state.eta, &state.eta, &xi, first, &loads)?;
                (u, xi, history, 1)
            }
            Theta::One => {
                let mut guess = state.eta.clone();
                let mut iterations = 0;
                loop {
                    iterations += 1;
                    let (u, xi) = self.coarse_step_stokes(&guess, t_new, load_u_new)?;
                    let history = self.fine_steps(&state.eta, &guess, &xi, first, &loads)?;
                    let end = history.last().expect("history");
                    let diff: Vec<f64> = end.iter().zip(&guess).map(|(a, b)| a - b).collect();
                    let change = self.mass.quad_form(&diff).max(0.0).sqrt();
                    let size = self.mass.quad_form(end).max(0.0).sqrt();
                    let tol = self.options.fixed_point_tol * size.max(1.0);
                    if change <= tol {
                        break (u, xi, history, iterations);
                    }
                    if iterations >= self.options.max_fixed_point_iterations {
                        return Err(Error::IterationFailure {
                            iterations,
                            last_update: change,
                            tolerance: tol,
                        });
                    }
                    guess = end.clone();
                }
            }
        };

        let lagged = match self.grid.theta {
            Theta::Zero => &state.eta,
            Theta::One => history.last().expect("history"),
        };
        let (fine_pressures, p, q) = self.update_pq(&xi, &history, lagged);
        let new = State {
            n: n + 1,
            time: t_new,
            u,
            xi,
            eta: history.last().expect("history").clone(),
            p,
            q,
            eta_history: history,
            fine_pressures,
        };
        Ok((new, loads, iterations))
    }

    /// Runs the full time loop, notifying `observers` after every window.
    pub fn run(&mut self, observers: &mut [&mut dyn WindowObserver]) -> Result<Trajectory> {
        let mut state = self.init_state()?;
        let mut load_u = self.vector_load(0.0);
        for obs in observers.iter_mut() {
            obs.initial(self, &state, &load_u)?;
        }
        let mut snapshots = vec![self.snapshot(&state, 0.0, 0)];
        let mut fine = Vec::with_capacity(self.grid.n_fine());
        let mut cumulative = 0.0;
        let (stokes0, diff0) = (self.stokes_solves, self.diffusion_solves);

        let start = Instant::now();
        for window in 0..self.grid.n_coarse() {
            let t_new = self.grid.coarse_time(window + 1);
            let load_u_new = self.vector_load(t_new);
            let (new, loads, iterations) = self
                .advance_coarse(&state, &load_u_new)
                .map_err(|e| e.in_window(window))?;

            for (k, load) in loads.iter().enumerate() {
                cumulative += self.grid.dt * load.iter().sum::<f64>();
                let step = window * self.grid.m + k + 1;
                let diff: Vec<f64> = new.eta_history[k + 1]
                    .iter()
                    .zip(&new.eta_history[k])
                    .map(|(a, b)| (a - b) / self.grid.dt)
                    .collect();
                fine.push(FineScalars {
                    step,
                    time: self.grid.fine_time(step),
                    pressure_energy: self.diffusion.quad_form(&new.fine_pressures[k]),
                    dt_eta_norm: self.mass.quad_form(&diff).max(0.0).sqrt(),
                });
            }

            let rec = WindowRecord {
                window,
                grid: &self.grid,
                old: &state,
                new: &new,
                load_u_old: &load_u,
                load_u_new: &load_u_new,
                fine_loads: &loads,
                iterations,
            };
            for obs in observers.iter_mut() {
                obs.window(self, &rec).map_err(|e| e.in_window(window))?;
            }
            if new.u.iter().chain(&new.xi).chain(&new.eta).any(|v| !v.is_finite()) {
                return Err(Error::SingularSystem("non-finite state".into()).in_window(window));
            }
            snapshots.push(self.snapshot(&new, cumulative, iterations));
            state = new;
            load_u = load_u_new;
        }
        let loop_seconds = start.elapsed().as_secs_f64();

        Ok(Trajectory {
            snapshots,
            fine,
            stats: RunStats {
                setup_seconds: self.setup_seconds,
                loop_seconds,
                stokes_solves: self.stokes_solves - stokes0,
                diffusion_solves: self.diffusion_solves - diff0,
                advisories: self.advisories.clone(),
            },
        })
    }

    fn snapshot(&self, s: &State, cumulative_source: f64, iterations: usize) -> Snapshot {
        Snapshot {
            index: s.n,
            time: s.time,
            u: s.u.clone(),
            xi: s.xi.clone(),
            eta: s.eta.clone(),
            p: s.p.clone(),
            q: s.q.clone(),
            cumulative_source,
            fixed_point_iterations: iterations,
        }
    }
}

/// Convenience wrapper: builds the simulation and runs it without observers.
pub fn run(case: &CaseDefinition, spaces: SpacePair, grid: TimeGrid, options: SchemeOptions) -> Result<Trajectory> {
    Simulation::new(case, spaces, grid, options)?.run(&mut [])
}
