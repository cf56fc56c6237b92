//! Run configuration: a sectioned TOML file.
//!
//! ```toml
//! [problem]
//! kind = "test2"     # test1 | test2 | custom
//! delta = 0.01
//!
//! [mesh]
//! resolution = [32, 4, 4]
//!
//! [time]
//! T = 1.0
//! N = 100
//! ```
//!
//! Every key is optional except `problem.kind`; unknown keys are rejected.
//! The resolved configuration, defaults included, is echoed into each run's
//! `metadata.toml`.

use std::path::{Path, PathBuf};

use hybrid_fv::expr::Expression;
use hybrid_fv::geometry::{Cuboid, Point, Tensor};
use hybrid_fv::linalg::LinearSolver;
use hybrid_fv::problem::{
    make_test1, make_test2, Beta, BoundarySide, BoundarySpec, Declared, ProblemSpec, Reaction, Region, ScalarField,
    Test2Params,
};
use hybrid_fv::solver::NewtonConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Test1,
    Test2,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    /// Test II front offset, speed and diffusivity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Custom problems only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reaction: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reaction_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dirichlet: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    /// Zero-flux sides such as `"x2-"` or `"x3+"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_flux: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_min: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_max: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub resolution: Option<Vec<usize>>,
    pub refine_probability: Option<f64>,
    pub seed: Option<u64>,
    /// Mesh file in the text format written by `mesh-gen`; overrides generation.
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    #[serde(rename = "N")]
    pub steps: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_halvings: Option<usize>,
    pub condense: Option<bool>,
    pub switch: Option<bool>,
    pub alpha: Option<f64>,
    /// `auto`, `direct` or `iterative`.
    pub linear: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Write a VTK snapshot every this many steps; 0 writes the final state only.
    pub snapshot_stride: Option<usize>,
    pub vtk: Option<bool>,
    pub front_threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    /// Number of levels; each doubles the resolution and the step count.
    pub levels: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: ProblemSection,
    #[serde(default)]
    mesh: MeshSection,
    #[serde(default)]
    time: TimeSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    output: OutputSection,
    #[serde(default)]
    convergence: ConvergenceSection,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshConfig {
    pub resolution: Vec<usize>,
    pub refine_probability: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "N")]
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub condense: bool,
    pub switch: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub linear: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub snapshot_stride: usize,
    pub vtk: bool,
    pub front_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceConfig {
    pub levels: usize,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub mesh: MeshConfig,
    pub time: TimeConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub convergence: ConvergenceConfig,
}

fn check_positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive, got {v}")))
    }
}

fn parse_linear(key: &str, s: &str) -> Result<LinearSolver, ConfigError> {
    match s {
        "auto" => Ok(LinearSolver::default()),
        "direct" => Ok(LinearSolver::Direct),
        "iterative" => Ok(LinearSolver::Iterative),
        other => Err(invalid(key, format!("expected auto, direct or iterative, got `{other}`"))),
    }
}

fn parse_side(key: &str, s: &str, dim: usize) -> Result<BoundarySide, ConfigError> {
    let bad = || invalid(key, format!("expected a side such as `x1-` or `x2+`, got `{s}`"));
    let rest = s.strip_prefix('x').ok_or_else(bad)?;
    let (axis, sign) = rest.split_at(rest.len().saturating_sub(1));
    let axis: usize = axis.parse().map_err(|_| bad())?;
    if axis == 0 || axis > dim {
        return Err(bad());
    }
    let upper = match sign {
        "+" => true,
        "-" => false,
        _ => return Err(bad()),
    };
    Ok(BoundarySide { axis: axis - 1, upper })
}

fn expression(key: &str, text: &Option<String>) -> Result<ScalarField, ConfigError> {
    match text {
        None => Ok(ScalarField::Zero),
        Some(t) => Expression::parse(t).map(ScalarField::Expr).map_err(|e| invalid(key, e.to_string())),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::resolve(raw, base)
    }

    fn resolve(raw: RawConfig, base: &Path) -> Result<Self, ConfigError> {
        let p = &raw.problem;
        let dim = match (&p.domain_min, p.kind) {
            (Some(m), ProblemKind::Custom) => m.len(),
            _ => 3,
        };
        let (def_res, def_prob, def_seed, def_n) = match p.kind {
            ProblemKind::Test1 => (vec![4, 3, 3], 0.45, 25, 50),
            ProblemKind::Test2 => (vec![32, 4, 4], 0.0, 0, 100),
            ProblemKind::Custom => (vec![4; dim], 0.0, 0, 20),
        };
        let m = raw.mesh;
        let resolution = m.resolution.unwrap_or(def_res);
        if resolution.len() != dim {
            return Err(invalid("mesh.resolution", format!("needs {dim} entries, got {}", resolution.len())));
        }
        if resolution.contains(&0) {
            return Err(invalid("mesh.resolution", "entries must be at least 1"));
        }
        let refine_probability = m.refine_probability.unwrap_or(def_prob);
        if !(0.0..=1.0).contains(&refine_probability) {
            return Err(invalid("mesh.refine_probability", format!("must lie in [0, 1], got {refine_probability}")));
        }
        let file = match m.file {
            Some(f) => {
                let f = if f.is_relative() { base.join(f) } else { f };
                if !f.is_file() {
                    return Err(invalid("mesh.file", format!("{} does not exist", f.display())));
                }
                Some(f)
            }
            None => None,
        };
        let mesh = MeshConfig { resolution, refine_probability, seed: m.seed.unwrap_or(def_seed), file };

        let def_t = if p.kind == ProblemKind::Test2 { 0.5 } else { 1.0 };
        let t_final = check_positive("time.T", raw.time.t_final.unwrap_or(def_t))?;
        let steps = raw.time.steps.unwrap_or(def_n);
        if steps == 0 {
            return Err(invalid("time.N", "must be at least 1, got 0"));
        }
        let time = TimeConfig { t_final, steps };

        let s = raw.solver;
        let d = NewtonConfig::default();
        let solver = SolverConfig {
            abs_tol: check_positive("solver.abs_tol", s.abs_tol.unwrap_or(d.abs_tol))?,
            rel_tol: s.rel_tol.unwrap_or(d.rel_tol),
            max_iter: s.max_iter.unwrap_or(d.max_iter),
            max_halvings: s.max_halvings.unwrap_or(d.max_halvings),
            condense: s.condense.unwrap_or(d.condense),
            switch: s.switch.unwrap_or(d.switch),
            alpha: s.alpha.map(|a| check_positive("solver.alpha", a)).transpose()?,
            linear: s.linear.unwrap_or_else(|| "auto".into()),
        };
        if !(solver.rel_tol >= 0.0 && solver.rel_tol < 1.0) {
            return Err(invalid("solver.rel_tol", format!("must lie in [0, 1), got {}", solver.rel_tol)));
        }
        if solver.max_iter == 0 {
            return Err(invalid("solver.max_iter", "must be at least 1, got 0"));
        }
        parse_linear("solver.linear", &solver.linear)?;

        let o = raw.output;
        let output = OutputConfig {
            dir: o.dir.unwrap_or_else(|| PathBuf::from("out")),
            snapshot_stride: o.snapshot_stride.unwrap_or(0),
            vtk: o.vtk.unwrap_or(true),
            front_threshold: o.front_threshold.unwrap_or(1e-3),
        };
        if !(output.front_threshold > 0.0 && output.front_threshold < 1.0) {
            return Err(invalid(
                "output.front_threshold",
                format!("must lie in (0, 1), got {}", output.front_threshold),
            ));
        }
        let levels = raw.convergence.levels.unwrap_or(3);
        if levels == 0 {
            return Err(invalid("convergence.levels", "must be at least 1, got 0"));
        }
        let cfg =
            RunConfig { problem: raw.problem, mesh, time, solver, output, convergence: ConvergenceConfig { levels } };
        cfg.problem_spec()?;
        Ok(cfg)
    }

    pub fn newton(&self) -> NewtonConfig {
        let s = &self.solver;
        NewtonConfig {
            abs_tol: s.abs_tol,
            rel_tol: s.rel_tol,
            max_iter: s.max_iter,
            max_halvings: s.max_halvings,
            condense: s.condense,
            switch: s.switch,
            alpha: s.alpha,
            linear: parse_linear("solver.linear", &s.linear).expect("validated"),
        }
    }

    /// Builds the PDE data; also the validation path for problem keys.
    pub fn problem_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let p = &self.problem;
        let test2_only = [("p", p.p.is_some()), ("v", p.v.is_some()), ("delta", p.delta.is_some())];
        let custom_only = [
            ("beta", p.beta.is_some()),
            ("reaction", p.reaction.is_some()),
            ("reaction_coefficient", p.reaction_coefficient.is_some()),
            ("diffusion", p.diffusion.is_some()),
            ("velocity", p.velocity.is_some()),
            ("source", p.source.is_some()),
            ("initial", p.initial.is_some()),
            ("dirichlet", p.dirichlet.is_some()),
            ("exact", p.exact.is_some()),
            ("zero_flux", p.zero_flux.is_some()),
            ("domain_min", p.domain_min.is_some()),
            ("domain_max", p.domain_max.is_some()),
        ];
        let reject = |keys: &[(&str, bool)], kind: &str| -> Result<(), ConfigError> {
            match keys.iter().find(|(_, set)| *set) {
                Some((k, _)) => Err(invalid(&format!("problem.{k}"), format!("not used by kind = \"{kind}\""))),
                None => Ok(()),
            }
        };
        match p.kind {
            ProblemKind::Test1 => {
                reject(&test2_only, "test1")?;
                reject(&custom_only, "test1")?;
                Ok(make_test1())
            }
            ProblemKind::Test2 => {
                reject(&custom_only, "test2")?;
                let d = Test2Params::default();
                let params = Test2Params {
                    p: p.p.unwrap_or(d.p),
                    v: check_positive("problem.v", p.v.unwrap_or(d.v))?,
                    delta: check_positive("problem.delta", p.delta.unwrap_or(d.delta))?,
                };
                make_test2(params).map_err(|e| invalid("problem", e.to_string()))
            }
            ProblemKind::Custom => {
                reject(&test2_only, "custom")?;
                self.custom_spec()
            }
        }
    }

    fn custom_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let p = &self.problem;
        let lo = p.domain_min.clone().unwrap_or_else(|| vec![0.0; 3]);
        let hi = p.domain_max.clone().unwrap_or_else(|| vec![1.0; lo.len()]);
        let dim = lo.len();
        if !(1..=3).contains(&dim) || hi.len() != dim {
            return Err(invalid("problem.domain_max", "domain_min and domain_max need the same length, 1 to 3"));
        }
        let domain =
            Cuboid::new(dim, &lo, &hi).ok_or_else(|| invalid("problem.domain_max", "must exceed domain_min"))?;
        let beta_name = p.beta.as_deref().unwrap_or("linear");
        let beta = Beta::from_name(beta_name).ok_or_else(|| {
            invalid("problem.beta", format!("expected linear, linear_plus_sqrt or sqrt, got `{beta_name}`"))
        })?;
        let c = p.reaction_coefficient.unwrap_or(0.0);
        let reaction = match p.reaction.as_deref().unwrap_or("zero") {
            "zero" => Reaction::Zero,
            "linear" => Reaction::Linear(c),
            "half_sqrt" => Reaction::HalfSqrt,
            other => {
                return Err(invalid("problem.reaction", format!("expected zero, linear or half_sqrt, got `{other}`")))
            }
        };
        let mut diffusion = Tensor::zeros();
        match &p.diffusion {
            None => diffusion.fill_with_identity(),
            Some(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(invalid("problem.diffusion", format!("needs a {dim}x{dim} matrix")));
                }
                for (i, r) in rows.iter().enumerate() {
                    for (j, v) in r.iter().enumerate() {
                        diffusion[(i, j)] = *v;
                    }
                }
            }
        }
        let ev = hybrid_fv::geometry::eigenvalues(&diffusion, dim);
        if hybrid_fv::geometry::asymmetry(&diffusion, dim) > 1e-12 || ev[0] <= 0.0 {
            return Err(invalid("problem.diffusion", "must be symmetric positive definite"));
        }
        let mut velocity = Point::zeros();
        if let Some(v) = &p.velocity {
            if v.len() != dim {
                return Err(invalid("problem.velocity", format!("needs {dim} entries")));
            }
            for (i, x) in v.iter().enumerate() {
                velocity[i] = *x;
            }
        }
        let zero_flux = p
            .zero_flux
            .iter()
            .flatten()
            .map(|s| parse_side("problem.zero_flux", s, dim))
            .collect::<Result<Vec<_>, _>>()?;
        let exact = match &p.exact {
            Some(_) => Some(expression("problem.exact", &p.exact)?),
            None => None,
        };
        let initial = match (&p.initial, &exact) {
            (Some(_), _) => expression("problem.initial", &p.initial)?,
            (None, Some(e)) => e.clone(),
            (None, None) => ScalarField::Zero,
        };
        let dirichlet = match (&p.dirichlet, &exact) {
            (Some(_), _) => expression("problem.dirichlet", &p.dirichlet)?,
            (None, Some(e)) => e.clone(),
            (None, None) => ScalarField::Zero,
        };
        let reaction_lower = match reaction {
            Reaction::Linear(c) if c < 0.0 => -c,
            _ => 0.0,
        };
        Ok(ProblemSpec {
            name: "custom".into(),
            domain,
            beta,
            reaction,
            regions: vec![Region { diffusion, velocity }],
            split: None,
            source: expression("problem.source", &p.source)?,
            initial,
            dirichlet,
            exact,
            boundary: BoundarySpec { zero_flux },
            declared: Declared {
                beta_lower: if beta.globally_coercive() { 1.0 } else { 0.5 },
                lambda_lower: ev[0],
                lambda_upper: ev[dim - 1],
                reaction_lower,
            },
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    RunConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
}
