//! CSV and legacy VTK writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use poro_core::fem::SpacePair;
use poro_core::scheme::Snapshot;

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_HEADER: [&str; 9] = [
    "index",
    "time",
    "u_L2",
    "p_L2",
    "xi_L2",
    "eta_L2",
    "energy_residual",
    "conservation_residual",
    "fixed_point_iterations",
];
pub const STUDY_HEADER: [&str; 8] = ["h", "err_u_L2", "rate_u_L2", "err_u_H1", "rate_u_H1", "err_p_L2H1", "rate_p", "wall_s"];
pub const BENCH_HEADER: [&str; 3] = ["m", "wall_s", "speedup_vs_m1"];
pub const BENCH_SETUP_HEADER: [&str; 5] = ["m", "setup_s", "loop_s", "stokes_solves", "diffusion_solves"];

/// Marker written in place of an undefined or inapplicable number.
pub const NA: &str = "NA";

pub fn sci(v: f64) -> String {
    format!("{v:.10e}")
}

pub fn opt_sci(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map_or_else(|| NA.to_string(), sci)
}

pub fn opt_fixed(v: Option<f64>, digits: usize) -> String {
    v.filter(|x| x.is_finite())
        .map_or_else(|| NA.to_string(), |x| format!("{x:.digits$}"))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes a CSV file, refusing non-finite numeric cells.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    for row in rows {
        if let Some(bad) = row.iter().find(|c| matches!(c.to_ascii_lowercase().as_str(), "nan" | "inf" | "-inf")) {
            return Err(CliError::io(
                path,
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("refusing to write non-finite value '{bad}'")),
            ));
        }
    }
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Legacy ASCII VTK file with vertex values of `p`, `xi`, `eta` and `u`.
pub fn vtk_string(spaces: &SpacePair, snap: &Snapshot) -> String {
    let mesh = &spaces.mesh;
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "poroelastic state index {} time {:.10e}", snap.index, snap.time);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", v[0], v[1]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    for (name, field) in [("p", &snap.p), ("xi", &snap.xi), ("eta", &snap.eta)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in field.iter().take(nv) {
            let _ = writeln!(s, "{v:.16e}");
        }
    }
    let _ = writeln!(s, "VECTORS u double");
    // P2 nodes 0..nv are the mesh vertices.
    for i in 0..nv {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", snap.u[2 * i], snap.u[2 * i + 1]);
    }
    s
}

pub fn write_vtk(dir: &Path, spaces: &SpacePair, snap: &Snapshot) -> CliResult<PathBuf> {
    let path = dir.join(format!("state_{:05}.vtk", snap.index));
    fs::write(&path, vtk_string(spaces, snap)).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
