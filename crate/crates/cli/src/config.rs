//! Plain-text `key = value` run configuration.
//!
//! Every omitted key takes its documented default. Mesh defaults depend on
//! the problem; they are resolved at parse time so that the serialized form
//! lists every value explicitly.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mhdal::assembly::{EliminationOrder, SolverConfig};
use mhdal::driver::problems::{Shape, TimeProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Ldc2dStationary,
    Ldc2dTransient,
    Island2d,
    MmsStationary,
    MmsTransient,
    SchurCheck,
    QuadCheck,
}

impl Problem {
    pub const ALL: [Problem; 7] = [
        Problem::Ldc2dStationary,
        Problem::Ldc2dTransient,
        Problem::Island2d,
        Problem::MmsStationary,
        Problem::MmsTransient,
        Problem::SchurCheck,
        Problem::QuadCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Ldc2dStationary => "ldc2d_stationary",
            Problem::Ldc2dTransient => "ldc2d_transient",
            Problem::Island2d => "island2d",
            Problem::MmsStationary => "mms_stationary",
            Problem::MmsTransient => "mms_transient",
            Problem::SchurCheck => "schur_check",
            Problem::QuadCheck => "quad_check",
        }
    }

    pub fn is_transient(self) -> bool {
        matches!(self, Problem::Ldc2dTransient | Problem::Island2d | Problem::MmsTransient)
    }

    /// (coarse cells per side, refinements, degree)
    fn mesh_defaults(self) -> (usize, usize, usize) {
        match self {
            Problem::Ldc2dStationary | Problem::Ldc2dTransient => (16, 2, 2),
            Problem::Island2d => (8, 3, 2),
            Problem::MmsStationary | Problem::MmsTransient => (4, 1, 2),
            Problem::SchurCheck => (2, 0, 1),
            Problem::QuadCheck => (64, 0, 2),
        }
    }

    /// (dt, final time)
    fn time_defaults(self) -> (f64, f64) {
        match self {
            Problem::Island2d => (0.05, 10.0),
            Problem::MmsTransient => (0.025, 1.0),
            _ => (0.01, 0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line of the offending entry; `None` for whole-file errors.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub nx: usize,
    pub refinements: usize,
    pub solver: SolverConfig,
    pub t_final: f64,
    pub output_dir: PathBuf,
    /// Write a snapshot every this many time steps (stationary: at the end);
    /// 0 disables snapshots.
    pub snapshot_every: usize,
    pub island_k: f64,
    pub island_eps: f64,
    pub mms_shape: Shape,
    pub mms_profile: TimeProfile,
    /// Moment quadrature degrees of the quad_check table.
    pub quad_degrees: Vec<usize>,
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse '{v}'"))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, String> {
    v.split(',').map(|s| parse_value(key, s.trim())).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got '{v}'")),
    }
}

fn positive(key: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{key} must be positive, got {v}"))
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn shape_name(s: Shape) -> &'static str {
    match s {
        Shape::Trig => "trig",
        Shape::Polynomial => "polynomial",
    }
}

fn profile_name(p: TimeProfile) -> &'static str {
    match p {
        TimeProfile::Constant => "constant",
        TimeProfile::Linear => "linear",
        TimeProfile::Smooth => "smooth",
    }
}

/// Entries collected before defaults are resolved.
#[derive(Default)]
struct Raw {
    problem: Option<Problem>,
    nx: Option<usize>,
    refinements: Option<usize>,
    degree: Option<usize>,
    dt: Option<f64>,
    newton: Option<bool>,
    /// Re, Re_m, S
    physics: [Option<f64>; 3],
    t_final: Option<f64>,
    ladders: [Option<Vec<f64>>; 3],
    cfg: SolverConfig,
    output_dir: Option<PathBuf>,
    snapshot_every: usize,
    island_k: Option<f64>,
    island_eps: Option<f64>,
    mms_shape: Option<Shape>,
    mms_profile: Option<TimeProfile>,
    quad_degrees: Option<Vec<usize>>,
}

impl Raw {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let c = &mut self.cfg;
        match key {
            "problem" => {
                self.problem =
                    Some(Problem::ALL.into_iter().find(|p| p.name() == v).ok_or_else(|| format!("unknown problem '{v}'"))?)
            }
            "nx" => self.nx = Some(parse_value(key, v)?),
            "refinements" => self.refinements = Some(parse_value(key, v)?),
            "degree" => self.degree = Some(parse_value(key, v)?),
            "Re" => self.physics[0] = Some(positive(key, parse_value(key, v)?)?),
            "Rem" => self.physics[1] = Some(positive(key, parse_value(key, v)?)?),
            "S" => self.physics[2] = Some(positive(key, parse_value(key, v)?)?),
            "gamma" => c.gamma = positive(key, parse_value(key, v)?)?,
            "dt" => self.dt = Some(positive(key, parse_value(key, v)?)?),
            "t_final" => self.t_final = Some(positive(key, parse_value(key, v)?)?),
            "newton" => self.newton = Some(parse_bool(key, v)?),
            "sigma" => c.sigma = Some(positive(key, parse_value(key, v)?)?),
            "mu" => c.mu = parse_value(key, v)?,
            "nl_rtol" => c.nl_rtol = parse_value(key, v)?,
            "nl_atol" => c.nl_atol = parse_value(key, v)?,
            "nl_maxit" => c.nl_maxit = parse_value(key, v)?,
            "lin_rtol" => c.lin_rtol = parse_value(key, v)?,
            "lin_atol" => c.lin_atol = parse_value(key, v)?,
            "lin_maxit" => c.lin_maxit = parse_value(key, v)?,
            "smoother_its" => c.smoother_its = parse_value(key, v)?,
            "inner_its" => c.inner_its = parse_value(key, v)?,
            "order" => {
                c.order = match v {
                    "eliminate_up" => EliminationOrder::EliminateUp,
                    "eliminate_EB" => EliminationOrder::EliminateEB,
                    _ => return Err(format!("order: expected eliminate_up or eliminate_EB, got '{v}'")),
                }
            }
            "ladder_S" => self.ladders[0] = Some(parse_list(key, v)?),
            "ladder_Re" => self.ladders[1] = Some(parse_list(key, v)?),
            "ladder_Rem" => self.ladders[2] = Some(parse_list(key, v)?),
            "output_dir" => self.output_dir = Some(PathBuf::from(v)),
            "snapshot_every" => self.snapshot_every = parse_value(key, v)?,
            "island_k" => self.island_k = Some(positive(key, parse_value(key, v)?)?),
            "island_eps" => self.island_eps = Some(parse_value(key, v)?),
            "mms_shape" => {
                self.mms_shape = Some(match v {
                    "trig" => Shape::Trig,
                    "polynomial" => Shape::Polynomial,
                    _ => return Err(format!("mms_shape: expected trig or polynomial, got '{v}'")),
                })
            }
            "mms_profile" => {
                self.mms_profile = Some(match v {
                    "constant" => TimeProfile::Constant,
                    "linear" => TimeProfile::Linear,
                    "smooth" => TimeProfile::Smooth,
                    _ => return Err(format!("mms_profile: expected constant, linear or smooth, got '{v}'")),
                })
            }
            "quad_degrees" => self.quad_degrees = Some(parse_list(key, v)?),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    fn resolve(self) -> Result<RunConfig, ConfigError> {
        let whole = |message: String| ConfigError { line: None, message };
        let problem = self.problem.ok_or_else(|| whole("missing problem name (problem = ...)".into()))?;
        let (nx, refs, degree) = problem.mesh_defaults();
        let (dt, t_final) = problem.time_defaults();
        let mut solver = self.cfg;
        // coalescence needs the Lorentz force S/Re_m j×B at unit strength
        let phys = if problem == Problem::Island2d { 1000.0 } else { 1.0 };
        solver.re = self.physics[0].unwrap_or(phys);
        solver.re_m = self.physics[1].unwrap_or(phys);
        let s_default = if problem == Problem::Island2d { solver.re_m } else { 1.0 };
        solver.s = self.physics[2].unwrap_or(s_default);
        solver.degree = self.degree.unwrap_or(degree);
        solver.dt = self.dt.unwrap_or(dt);
        solver.transient = problem.is_transient();
        // the exactness check concerns the Picard linearization
        solver.newton = self.newton.unwrap_or(problem != Problem::SchurCheck);
        // a parameter without an explicit ladder is continued in one step
        let targets = [solver.s, solver.re, solver.re_m];
        let [ls, lre, lrem] = self.ladders;
        let ladder = |l: Option<Vec<f64>>, target: f64| l.unwrap_or_else(|| if target == 1.0 { vec![1.0] } else { vec![1.0, target] });
        solver.ladder_s = ladder(ls, targets[0]);
        solver.ladder_re = ladder(lre, targets[1]);
        solver.ladder_rem = ladder(lrem, targets[2]);
        mhdal::driver::ContinuationLadder::from_config(&solver).map_err(|e| whole(e.to_string()))?;
        solver.validate().map_err(|e| whole(e.to_string()))?;
        let cfg = RunConfig {
            problem,
            nx: self.nx.unwrap_or(nx),
            refinements: self.refinements.unwrap_or(refs),
            solver,
            t_final: self.t_final.unwrap_or(t_final),
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("output")),
            snapshot_every: self.snapshot_every,
            island_k: self.island_k.unwrap_or(0.2),
            island_eps: self.island_eps.unwrap_or(0.01),
            mms_shape: self.mms_shape.unwrap_or(Shape::Trig),
            mms_profile: self.mms_profile.unwrap_or(if problem == Problem::MmsTransient { TimeProfile::Smooth } else { TimeProfile::Constant }),
            quad_degrees: self.quad_degrees.unwrap_or_else(|| (1..=10).collect()),
        };
        if cfg.nx == 0 {
            return Err(whole("nx must be positive".into()));
        }
        if cfg.problem == Problem::Island2d && cfg.nx < 3 {
            return Err(whole("island2d is periodic in x and needs nx >= 3".into()));
        }
        Ok(cfg)
    }
}

/// Split a `key = value` entry; blank and comment-only lines give `None`.
fn entry(line: &str) -> Result<Option<(&str, &str)>, String> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let (k, v) = content.split_once('=').ok_or_else(|| format!("expected key = value, got '{content}'"))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(format!("expected key = value, got '{content}'"));
    }
    Ok(Some((k, v)))
}

/// Parse a configuration file followed by `key=value` overrides.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut raw = Raw::default();
    let nlines = text.lines().count();
    let lines = text.lines().map(str::to_string).chain(overrides.iter().cloned());
    for (i, line) in lines.enumerate() {
        let at = |message: String| {
            if i < nlines {
                ConfigError { line: Some(i + 1), message }
            } else {
                ConfigError { line: None, message: format!("--set {}: {message}", overrides[i - nlines]) }
            }
        };
        if let Some((k, v)) = entry(&line).map_err(at)? {
            raw.set(k, v).map_err(at)?;
        }
    }
    raw.resolve()
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_with_overrides(text, &[])
}

impl RunConfig {
    /// Every key with its resolved value; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let c = &self.solver;
        let mut lines = vec![
            format!("problem = {}", self.problem.name()),
            format!("nx = {}", self.nx),
            format!("refinements = {}", self.refinements),
            format!("degree = {}", c.degree),
            format!("Re = {}", c.re),
            format!("Rem = {}", c.re_m),
            format!("S = {}", c.s),
            format!("gamma = {}", c.gamma),
            format!("dt = {}", c.dt),
            format!("t_final = {}", self.t_final),
            format!("newton = {}", c.newton),
        ];
        if let Some(s) = c.sigma {
            lines.push(format!("sigma = {s}"));
        }
        lines.extend([
            format!("mu = {}", c.mu),
            format!("nl_rtol = {}", c.nl_rtol),
            format!("nl_atol = {}", c.nl_atol),
            format!("nl_maxit = {}", c.nl_maxit),
            format!("lin_rtol = {}", c.lin_rtol),
            format!("lin_atol = {}", c.lin_atol),
            format!("lin_maxit = {}", c.lin_maxit),
            format!("smoother_its = {}", c.smoother_its),
            format!("inner_its = {}", c.inner_its),
            format!(
                "order = {}",
                match c.order {
                    EliminationOrder::EliminateUp => "eliminate_up",
                    EliminationOrder::EliminateEB => "eliminate_EB",
                }
            ),
            format!("ladder_S = {}", join(&c.ladder_s)),
            format!("ladder_Re = {}", join(&c.ladder_re)),
            format!("ladder_Rem = {}", join(&c.ladder_rem)),
            format!("output_dir = {}", self.output_dir.display()),
            format!("snapshot_every = {}", self.snapshot_every),
            format!("island_k = {}", self.island_k),
            format!("island_eps = {}", self.island_eps),
            format!("mms_shape = {}", shape_name(self.mms_shape)),
            format!("mms_profile = {}", profile_name(self.mms_profile)),
            format!("quad_degrees = {}", join(&self.quad_degrees)),
        ]);
        lines.join("\n") + "\n"
    }
}
