//! TOML run configuration.

use std::path::{Path, PathBuf};

use poro_core::cases::{case_by_name_with, default_params, CaseDefinition};
use poro_core::model::PhysicalParams;
use poro_core::scheme::{DirichletClosure, PressureUpdate, SchemeOptions, Theta, TimeGrid};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "PORO_OUTPUT_DIR";

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(i64),
    Many(Vec<i64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<i64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Permeability {
    Scalar(f64),
    Tensor([[f64; 2]; 2]),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    young: Option<f64>,
    nu: Option<f64>,
    c0: Option<f64>,
    alpha: Option<f64>,
    permeability: Option<Permeability>,
    mu_f: Option<f64>,
    rho_f: Option<f64>,
    gravity: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    fixed_point_tol: Option<f64>,
    max_fixed_point_iterations: Option<usize>,
    stability_beta: Option<f64>,
    pressure_update: Option<String>,
    dirichlet_closure: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    case: String,
    n: OneOrMany,
    dt: f64,
    m: Option<OneOrMany>,
    #[serde(rename = "T", alias = "t_final")]
    t_final: f64,
    #[serde(default)]
    theta: i64,
    output_dir: Option<String>,
    #[serde(default)]
    emit_vtk: bool,
    #[serde(default)]
    seed: u64,
    reference_n: Option<i64>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    solver: RawSolver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Single,
    /// Several mesh sizes.
    Study,
    /// Several values of `m`.
    Bench,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: String,
    pub n: Vec<usize>,
    pub dt: f64,
    pub m: Vec<usize>,
    pub t_final: f64,
    pub theta: Theta,
    pub params: PhysicalParams,
    pub options: SchemeOptions,
    pub output_dir: PathBuf,
    pub emit_vtk: bool,
    pub seed: u64,
    /// Mesh of the single-rate reference run for cases without an exact solution.
    pub reference_n: usize,
}

impl RunConfig {
    /// Configuration with defaults for `case`.
    pub fn new(case: &str, n: usize, dt: f64, m: usize, t_final: f64) -> CliResult<Self> {
        let params = default_params(case).map_err(|e| CliError::config("case", e.to_string()))?;
        let cfg = RunConfig {
            case: case.to_string(),
            n: vec![n],
            dt,
            m: vec![m],
            t_final,
            theta: Theta::Zero,
            params,
            options: SchemeOptions::default(),
            output_dir: PathBuf::from("output"),
            emit_vtk: false,
            seed: 0,
            reference_n: 64,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mode(&self) -> Mode {
        if self.m.len() > 1 {
            Mode::Bench
        } else if self.n.len() > 1 {
            Mode::Study
        } else {
            Mode::Single
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(CliError::config("n", "mesh subdivisions must be at least 1"));
        }
        if self.m.is_empty() || self.m.contains(&0) {
            return Err(CliError::config("m", "fine steps per coarse step must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::config("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(CliError::config("T", format!("must be positive, got {}", self.t_final)));
        }
        if self.reference_n == 0 {
            return Err(CliError::config("reference_n", "must be at least 1"));
        }
        self.params.validate().map_err(|e| CliError::config(param_key(&e.to_string()), e.to_string()))?;
        for &m in &self.m {
            self.time_grid(m)?;
        }
        Ok(())
    }

    pub fn time_grid(&self, m: usize) -> CliResult<TimeGrid> {
        TimeGrid::new(self.dt, m, self.t_final, self.theta).map_err(|e| CliError::config("T", e.to_string()))
    }

    pub fn build_case(&self) -> CliResult<CaseDefinition> {
        Ok(case_by_name_with(&self.case, self.params.clone())?)
    }
}

fn param_key(message: &str) -> &'static str {
    if message.contains("c0") {
        "params.c0"
    } else if message.contains("Poisson") {
        "params.nu"
    } else if message.contains("Young") {
        "params.young"
    } else if message.contains("Biot") {
        "params.alpha"
    } else if message.contains("viscosity") {
        "params.mu_f"
    } else if message.contains("permeab") {
        "params.permeability"
    } else {
        "params"
    }
}

pub fn parse_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> CliResult<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let key = offending_key(text, &e);
        CliError::config(key, e.message().to_string())
    })?;

    let base = default_params(&raw.case).map_err(|e| CliError::config("case", e.to_string()))?;
    let p = &raw.params;
    let mut params = PhysicalParams::from_young(
        p.young.unwrap_or(base.young),
        p.nu.unwrap_or(base.nu),
        p.c0.unwrap_or(base.c0),
        p.alpha.unwrap_or(base.alpha),
        base.permeability[0][0],
        p.mu_f.unwrap_or(base.mu_f),
    )
    .map_err(|e| CliError::config(param_key(&e.to_string()), e.to_string()))?;
    params.permeability = match p.permeability {
        Some(Permeability::Scalar(k)) => [[k, 0.0], [0.0, k]],
        Some(Permeability::Tensor(k)) => k,
        None => base.permeability,
    };
    params.rho_f = p.rho_f.unwrap_or(base.rho_f);
    params.gravity = p.gravity.unwrap_or(base.gravity);

    let to_usize = |key: &str, v: Vec<i64>| -> CliResult<Vec<usize>> {
        if v.is_empty() {
            return Err(CliError::config(key, "list must not be empty"));
        }
        v.into_iter()
            .map(|x| usize::try_from(x).map_err(|_| CliError::config(key, format!("must be non-negative, got {x}"))))
            .collect()
    };
    let theta = Theta::from_int(raw.theta).map_err(|e| CliError::config("theta", e.to_string()))?;

    let mut options = SchemeOptions::default();
    let s = &raw.solver;
    if let Some(v) = s.fixed_point_tol {
        options.fixed_point_tol = v;
    }
    if let Some(v) = s.max_fixed_point_iterations {
        options.max_fixed_point_iterations = v;
    }
    if let Some(v) = s.stability_beta {
        options.stability_beta = v;
    }
    if let Some(v) = &s.pressure_update {
        options.pressure_update = match v.to_ascii_lowercase().as_str() {
            "fine" => PressureUpdate::Fine,
            "lagged" => PressureUpdate::Lagged,
            other => {
                return Err(CliError::config(
                    "solver.pressure_update",
                    format!("expected 'fine' or 'lagged', got '{other}'"),
                ))
            }
        };
    }
    if let Some(v) = &s.dirichlet_closure {
        options.dirichlet_closure = match v.to_ascii_lowercase().as_str() {
            "auto" => DirichletClosure::Auto,
            "exact" => DirichletClosure::Exact,
            "dilatation" => DirichletClosure::Dilatation,
            "pressure" => DirichletClosure::Pressure,
            other => {
                return Err(CliError::config(
                    "solver.dirichlet_closure",
                    format!("expected 'auto', 'exact', 'dilatation' or 'pressure', got '{other}'"),
                ))
            }
        };
    }

    let cfg = RunConfig {
        case: raw.case,
        n: to_usize("n", raw.n.into_vec())?,
        dt: raw.dt,
        m: to_usize("m", raw.m.map_or(vec![1], OneOrMany::into_vec))?,
        t_final: raw.t_final,
        theta,
        params,
        options,
        output_dir: PathBuf::from(raw.output_dir.unwrap_or_else(|| "output".into())),
        emit_vtk: raw.emit_vtk,
        seed: raw.seed,
        reference_n: to_usize("reference_n", vec![raw.reference_n.unwrap_or(64)])?[0],
    };
    cfg.validate()?;
    Ok(cfg)
}

fn offending_key(text: &str, err: &toml::de::Error) -> String {
    let msg = err.message();
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    if let Some(span) = err.span() {
        let line_start = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
        let line = text[line_start..].lines().next().unwrap_or("");
        if let Some((key, _)) = line.split_once('=') {
            return key.trim().to_string();
        }
    }
    "<document>".into()
}

/// Output directory after applying the environment override.
pub fn resolve_output_dir(configured: &Path, env_value: Option<&str>) -> PathBuf {
    match env_value {
        Some(v) if !v.trim().is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "case = \"test1\"\nn = 8\ndt = 1e-4\nm = 5\nT = 0.01\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.n, vec![8]);
        assert_eq!(cfg.m, vec![5]);
        assert_eq!(cfg.theta, Theta::Zero);
        assert!(!cfg.emit_vtk);
        assert_eq!(cfg.mode(), Mode::Single);
        assert!((cfg.params.lambda - 1.428_571_4e-4).abs() < 1e-10);
    }

    #[test]
    fn default_m_and_theta() {
        let cfg = parse_config_str("case = \"test2\"\nn = 4\ndt = 1e-3\nT = 0.01\n").unwrap();
        assert_eq!(cfg.m, vec![1]);
        assert_eq!(cfg.theta, Theta::Zero);
    }

    #[test]
    fn c0_zero_rejected_naming_kappa3() {
        let err = parse_config_str(&format!("{MINIMAL}[params]\nc0 = 0.0\n")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kappa3"), "{msg}");
        assert!(msg.contains("params.c0"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn m_list_activates_bench() {
        let cfg = parse_config_str("case = \"test1\"\nn = 8\ndt = 1e-4\nm = [1, 5]\nT = 0.01\n").unwrap();
        assert_eq!(cfg.mode(), Mode::Bench);
        let cfg = parse_config_str("case = \"test1\"\nn = [8, 16]\ndt = 1e-4\nT = 0.01\n").unwrap();
        assert_eq!(cfg.mode(), Mode::Study);
    }

    #[test]
    fn missing_and_mistyped_keys_are_named() {
        let err = parse_config_str("case = \"test1\"\nn = 8\nT = 0.01\n").unwrap_err();
        assert!(matches!(&err, CliError::Config { key, .. } if key == "dt"), "{err}");
        let err = parse_config_str("case = \"test1\"\nn = 8\ndt = \"small\"\nT = 0.01\n").unwrap_err();
        assert!(matches!(&err, CliError::Config { key, .. } if key == "dt"), "{err}");
        let err = parse_config_str(&format!("{MINIMAL}bogus = 1\n")).unwrap_err();
        assert!(matches!(&err, CliError::Config { key, .. } if key == "bogus"), "{err}");
    }

    #[test]
    fn invariant_violations() {
        for (text, key) in [
            ("case = \"test1\"\nn = 0\ndt = 1e-4\nT = 0.01\n", "n"),
            ("case = \"test1\"\nn = 4\ndt = 1e-4\nm = 0\nT = 0.01\n", "m"),
            ("case = \"test1\"\nn = 4\ndt = 1e-4\nT = -1.0\n", "T"),
            ("case = \"test1\"\nn = 4\ndt = 1e-4\nT = 0.01\ntheta = 2\n", "theta"),
            ("case = \"test1\"\nn = 4\ndt = 1e-4\nm = 3\nT = 0.01\n", "T"),
            ("case = \"nope\"\nn = 4\ndt = 1e-4\nT = 0.01\n", "case"),
        ] {
            let err = parse_config_str(text).unwrap_err();
            assert!(matches!(&err, CliError::Config { key: k, .. } if k == key), "{text}: {err}");
        }
    }

    #[test]
    fn parameter_overrides() {
        let cfg = parse_config_str(&format!(
            "{MINIMAL}[params]\nyoung = 1.0\nnu = 0.25\npermeability = [[2.0, 0.0], [0.0, 1.0]]\n[solver]\npressure_update = \"lagged\"\n"
        ))
        .unwrap();
        assert!((cfg.params.mu - 0.4).abs() < 1e-15);
        assert_eq!(cfg.params.permeability, [[2.0, 0.0], [0.0, 1.0]]);
        assert_eq!(cfg.options.pressure_update, PressureUpdate::Lagged);
    }

    #[test]
    fn output_dir_override() {
        let p = Path::new("out");
        assert_eq!(resolve_output_dir(p, None), PathBuf::from("out"));
        assert_eq!(resolve_output_dir(p, Some("/tmp/x")), PathBuf::from("/tmp/x"));
        assert_eq!(resolve_output_dir(p, Some("  ")), PathBuf::from("out"));
    }
}
