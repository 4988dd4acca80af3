//! Experiment drivers: single run, convergence study, timing comparison.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use poro_core::assembly::assemble_vector_mass;
use poro_core::cases::CaseDefinition;
use poro_core::diagnostics::{
    conservation_residuals, field_norms, Conservation, ConvergenceRow, ConvergenceTable, EnergyReport, EnergyTracker,
    ErrorAccumulator, ErrorTarget, NormKind,
};
use poro_core::fem::{build_spaces, SpacePair};
use poro_core::mesh::build_unit_square_mesh;
use poro_core::scheme::{Simulation, TimeGrid, Trajectory};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{self, opt_fixed, opt_sci, sci, NA};

pub fn spaces_for(n: usize) -> CliResult<SpacePair> {
    Ok(build_spaces(Arc::new(build_unit_square_mesh(n)?)))
}

fn single<T: Copy>(values: &[T], key: &str, mode: &str) -> CliResult<T> {
    match values {
        [v] => Ok(*v),
        _ => Err(CliError::config(key, format!("{mode} needs exactly one value"))),
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub trajectory_csv: PathBuf,
    pub vtk_files: Vec<PathBuf>,
    pub trajectory: Trajectory,
    pub energy: EnergyReport,
    pub conservation: Conservation,
}

/// Single run writing `trajectory.csv` and optional VTK snapshots.
pub fn run_case(cfg: &RunConfig) -> CliResult<RunOutput> {
    let n = single(&cfg.n, "n", "run")?;
    let m = single(&cfg.m, "m", "run")?;
    let case = cfg.build_case()?;
    let grid = cfg.time_grid(m)?;
    let spaces = spaces_for(n)?;
    let mut sim = Simulation::new(&case, spaces, grid, cfg.options)?;
    let mut tracker = EnergyTracker::new();
    let trajectory = sim.run(&mut [&mut tracker])?;
    let energy = tracker.into_report();
    let conservation = conservation_residuals(&sim, &trajectory);
    let dirichlet = case.bc.has_displacement_dirichlet() || case.bc.has_pressure_dirichlet();

    output::ensure_dir(&cfg.output_dir)?;
    let vector_mass = assemble_vector_mass(&sim.spaces);
    let mut rows = Vec::with_capacity(trajectory.snapshots.len());
    for (i, s) in trajectory.snapshots.iter().enumerate() {
        let norms = field_norms(&sim, &vector_mass, &s.u, &s.p, &s.xi, &s.eta);
        let energy_cell = if dirichlet {
            NA.to_string()
        } else if i == 0 {
            sci(0.0)
        } else {
            sci(energy.rows[i - 1].relative())
        };
        let cons_cell = opt_sci(conservation.rows().map(|r| r[i].eta_residual));
        let mut row = vec![s.index.to_string(), sci(s.time)];
        row.extend(norms.iter().map(|v| sci(*v)));
        row.extend([energy_cell, cons_cell, s.fixed_point_iterations.to_string()]);
        rows.push(row);
    }
    let trajectory_csv = cfg.output_dir.join("trajectory.csv");
    output::write_csv(&trajectory_csv, &output::TRAJECTORY_HEADER, &rows)?;

    let mut vtk_files = Vec::new();
    if cfg.emit_vtk {
        for s in &trajectory.snapshots {
            vtk_files.push(output::write_vtk(&cfg.output_dir, &sim.spaces, s)?);
        }
    }
    for a in &trajectory.stats.advisories {
        log::warn!("{a}");
    }
    log::info!(
        "run finished: {} windows, setup {:.3}s, loop {:.3}s",
        grid.n_coarse(),
        trajectory.stats.setup_seconds,
        trajectory.stats.loop_seconds
    );
    Ok(RunOutput {
        trajectory_csv,
        vtk_files,
        trajectory,
        energy,
        conservation,
    })
}

/// Single-rate reference trajectory on a fine mesh.
pub struct Reference {
    pub spaces: SpacePair,
    pub trajectory: Trajectory,
}

pub fn reference_run(case: &CaseDefinition, n: usize, grid: &TimeGrid, cfg: &RunConfig) -> CliResult<Reference> {
    let ref_grid = TimeGrid::new(grid.dt, 1, grid.t_final, grid.theta)?;
    let spaces = spaces_for(n)?;
    log::info!("reference run on n = {n}, {} steps", ref_grid.n_coarse());
    let trajectory = Simulation::new(case, spaces.clone(), ref_grid, cfg.options)?.run(&mut [])?;
    Ok(Reference { spaces, trajectory })
}

/// Errors of one run against an exact solution or a reference.
pub fn measure_errors(
    case: &CaseDefinition,
    n: usize,
    grid: TimeGrid,
    cfg: &RunConfig,
    reference: Option<&Reference>,
) -> CliResult<ConvergenceRow> {
    let start = Instant::now();
    let spaces = spaces_for(n)?;
    let target = match (&case.exact, reference) {
        (Some(ex), _) => ErrorTarget::Exact(ex),
        (None, Some(r)) => ErrorTarget::Reference {
            spaces: &r.spaces,
            trajectory: &r.trajectory,
        },
        (None, None) => {
            return Err(CliError::config("case", format!("case '{}' has no exact solution and no reference", case.name)))
        }
    };
    let mut acc = ErrorAccumulator::new(target);
    let mut sim = Simulation::new(case, spaces, grid, cfg.options)?;
    sim.run(&mut [&mut acc])?;
    Ok(ConvergenceRow {
        n,
        h: sim.spaces.mesh.h,
        errors: acc.norms(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug)]
pub struct StudyOutput {
    /// One table per `m`.
    pub tables: Vec<(usize, ConvergenceTable, PathBuf)>,
}

/// Convergence study over the configured mesh list, one CSV per `m`.
pub fn convergence_study(cfg: &RunConfig) -> CliResult<StudyOutput> {
    if cfg.n.len() < 2 {
        return Err(CliError::config("n", "a convergence study needs at least two meshes"));
    }
    let case = cfg.build_case()?;
    output::ensure_dir(&cfg.output_dir)?;
    let reference = match case.exact {
        Some(_) => None,
        None => Some(reference_run(&case, cfg.reference_n, &cfg.time_grid(cfg.m[0])?, cfg)?),
    };
    let mut tables = Vec::new();
    for &m in &cfg.m {
        let grid = cfg.time_grid(m)?;
        let mut table = ConvergenceTable::default();
        for &n in &cfg.n {
            let row = measure_errors(&case, n, grid, cfg, reference.as_ref())?;
            log::info!("m = {m}, n = {n}: {:?}", row.errors);
            table.rows.push(row);
        }
        let path = if cfg.m.len() == 1 {
            cfg.output_dir.join("convergence.csv")
        } else {
            cfg.output_dir.join(format!("convergence_m{m}.csv"))
        };
        write_study_csv(&path, &table)?;
        tables.push((m, table, path));
    }
    Ok(StudyOutput { tables })
}

/// Rates with undefined entries for repeated or non-positive inputs.
fn rates_or_na(table: &ConvergenceTable, kind: NormKind) -> Vec<Option<f64>> {
    let errors = table.errors(kind);
    let hs: Vec<f64> = table.rows.iter().map(|r| r.h).collect();
    let mut out = vec![None];
    for i in 1..errors.len() {
        let r = poro_core::diagnostics::convergence_rates(&errors[i - 1..=i], &hs[i - 1..=i])
            .ok()
            .and_then(|v| v[0]);
        out.push(r);
    }
    out
}

pub fn write_study_csv(path: &std::path::Path, table: &ConvergenceTable) -> CliResult<()> {
    let ru = rates_or_na(table, NormKind::LinfL2);
    let rh = rates_or_na(table, NormKind::LinfH1);
    let rp = rates_or_na(table, NormKind::L2H1);
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                sci(r.h),
                sci(r.errors.u_linf_l2),
                opt_fixed(ru[i], 4),
                sci(r.errors.u_linf_h1),
                opt_fixed(rh[i], 4),
                sci(r.errors.p_l2_h1),
                opt_fixed(rp[i], 4),
                format!("{:.3}", r.wall_seconds),
            ]
        })
        .collect();
    output::write_csv(path, &output::STUDY_HEADER, &rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub m: usize,
    /// Median time-loop wall time.
    pub wall_seconds: f64,
    pub speedup: f64,
    pub setup_seconds: f64,
    pub stokes_solves: usize,
    pub diffusion_solves: usize,
}

pub const BENCH_REPEATS: usize = 3;

/// Times the loop for each `m` at a fixed fine step: one warm-up run, then
/// the median of three.
pub fn timing_compare(cfg: &RunConfig) -> CliResult<Vec<BenchRow>> {
    if cfg.m.len() < 2 {
        return Err(CliError::config("m", "a timing comparison needs at least two values"));
    }
    if !cfg.m.contains(&1) {
        return Err(CliError::config("m", "the m list must include 1 as the baseline"));
    }
    let n = single(&cfg.n, "n", "bench")?;
    let case = cfg.build_case()?;
    let mut rows = Vec::new();
    for &m in &cfg.m {
        let grid = cfg.time_grid(m)?;
        let mut sim = Simulation::new(&case, spaces_for(n)?, grid, cfg.options)?;
        sim.run(&mut [])?;
        let mut times = Vec::with_capacity(BENCH_REPEATS);
        let mut last = None;
        for _ in 0..BENCH_REPEATS {
            let t = sim.run(&mut [])?;
            times.push(t.stats.loop_seconds);
            last = Some(t.stats);
        }
        times.sort_by(f64::total_cmp);
        let stats = last.expect("at least one timed run");
        log::info!("m = {m}: loop times {times:?}");
        rows.push(BenchRow {
            m,
            wall_seconds: times[BENCH_REPEATS / 2],
            speedup: 0.0,
            setup_seconds: stats.setup_seconds,
            stokes_solves: stats.stokes_solves,
            diffusion_solves: stats.diffusion_solves,
        });
    }
    let base = rows.iter().find(|r| r.m == 1).expect("checked above").wall_seconds;
    for r in &mut rows {
        r.speedup = if r.m == 1 { 1.0 } else { base / r.wall_seconds };
    }

    output::ensure_dir(&cfg.output_dir)?;
    let timing: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.m.to_string(), format!("{:.6}", r.wall_seconds), format!("{:.4}", r.speedup)])
        .collect();
    output::write_csv(&cfg.output_dir.join("timing.csv"), &output::BENCH_HEADER, &timing)?;
    let setup: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                format!("{:.6}", r.setup_seconds),
                format!("{:.6}", r.wall_seconds),
                r.stokes_solves.to_string(),
                r.diffusion_solves.to_string(),
            ]
        })
        .collect();
    output::write_csv(&cfg.output_dir.join("timing_setup.csv"), &output::BENCH_SETUP_HEADER, &setup)?;
    Ok(rows)
}
