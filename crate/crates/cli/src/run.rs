//! Experiment orchestration and artifact output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use mhdal::assembly::{assemble_jacobian, scalar_fn, vec_fn, AssemblyInput, Discretization, MixedState, ProblemSpec};
use mhdal::driver::problems::island_b_eq;
use mhdal::driver::{
    bdf2_run, continuation_run_with, newton_solve, setup_island, setup_ldc2d, setup_mms, IslandParams, IterationReport,
    Manufactured, Reconnection, Solver,
};
use mhdal::femspace::derham::div_l2_norm;
use mhdal::femspace::{build_space, Family};
use mhdal::mesh::{build_rect_mesh, MeshHierarchy, Rect};
use mhdal::precond::schur_exactness_check;

use crate::config::{Problem, RunConfig};
use crate::snapshot::FieldSnapshot;

#[derive(Debug)]
pub enum RunError {
    /// Invalid setup detected by the library (bad mesh size, unsupported degree).
    Config(String),
    /// Setup that could not be carried out numerically.
    Solver(String),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Solver(m) => write!(f, "solver error: {m}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(e.into())
    }
}

impl From<mhdal::Error> for RunError {
    fn from(e: mhdal::Error) -> Self {
        match e {
            mhdal::Error::InvalidArgument(m) => RunError::Config(m),
            mhdal::Error::Io(e) => RunError::Io(e),
            e => RunError::Solver(e.to_string()),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
            RunError::Io(_) => 4,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: IterationReport,
    /// False if any requested solve failed.
    pub converged: bool,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            3
        }
    }
}

/// Collects written files and the first write error of an observer.
struct Sink {
    dir: PathBuf,
    files: Vec<PathBuf>,
    error: Option<std::io::Error>,
}

impl Sink {
    fn snapshot(&mut self, d: &Discretization, x: &[f64], t: f64, index: usize) {
        if self.error.is_some() {
            return;
        }
        match FieldSnapshot::new(d, x, t).write(&self.dir, index) {
            Ok(p) => self.files.extend(p),
            Err(e) => self.error = Some(e),
        }
    }

    fn finish(&mut self) -> Result<(), RunError> {
        self.error.take().map_or(Ok(()), |e| Err(e.into()))
    }
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:.12e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Run the configured experiment and write its artifacts to `output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut sink = Sink { dir: dir.clone(), files: Vec::new(), error: None };
    let sc = &cfg.solver;
    let every = cfg.snapshot_every;
    let mut extra: Option<(&str, Vec<&str>, Vec<Vec<f64>>)> = None;

    let report = match cfg.problem {
        Problem::Ldc2dStationary => {
            let solver = Solver::new(setup_ldc2d(true, cfg.nx, cfg.refinements)?, sc.degree)?;
            let ncells = mhdal::driver::ContinuationLadder::from_config(sc)?.cells().len();
            let mut seen = 0;
            let rep = continuation_run_with(&solver, sc, &mut |_, _, x| {
                seen += 1;
                if every > 0 && seen == ncells {
                    sink.snapshot(solver.disc(), x, 0.0, 0);
                }
            })?;
            rep
        }
        Problem::MmsStationary => {
            let m = manufactured(cfg);
            let solver = Solver::new(setup_mms(m, cfg.nx, cfg.refinements)?, sc.degree)?;
            // solve from rest so that the run exercises the nonlinear solver
            let cold = MixedState::new(vec![0.0; solver.disc().ndofs()]);
            let (st, rec) = newton_solve(&solver, sc, cold);
            if every > 0 {
                sink.snapshot(solver.disc(), &st.x, 0.0, 0);
            }
            extra = Some(("errors.csv", error_header(), vec![mms_errors(&solver, &m, &st.x, 0.0)]));
            IterationReport { rows: vec![rec] }
        }
        Problem::Ldc2dTransient | Problem::MmsTransient | Problem::Island2d => {
            let (spec, m) = match cfg.problem {
                Problem::Ldc2dTransient => (setup_ldc2d(false, cfg.nx, cfg.refinements)?, None),
                Problem::Island2d => {
                    let prm = IslandParams { k: cfg.island_k, eps: cfg.island_eps, nx: cfg.nx, refinements: cfg.refinements };
                    (setup_island(sc, &prm)?, None)
                }
                _ => {
                    let m = manufactured(cfg);
                    (setup_mms(m, cfg.nx, cfg.refinements)?, Some(m))
                }
            };
            let island = cfg.problem == Problem::Island2d;
            let solver = Solver::new(spec, sc.degree)?;
            let d = solver.disc();
            let init = solver.initial_state(0.0);
            let recon = if island { Some(Reconnection::new(d, [0.0, 0.0])?) } else { None };
            let j0 = match &recon {
                Some(r) => r.point_current(d, &init.x)?,
                None => 0.0,
            };
            let mut rows = Vec::new();
            let mut diag_err = None;
            let mut step = 0;
            let (_, rep) = bdf2_run(&solver, sc, init, cfg.t_final, &mut |t, x| {
                if every > 0 && step % every == 0 {
                    sink.snapshot(d, x, t, step / every);
                }
                step += 1;
                if let Some(r) = &recon {
                    match r.rate(d, x, j0, sc.re_m) {
                        Ok(v) => rows.push(vec![t, v]),
                        Err(e) => diag_err = diag_err.take().or(Some(e)),
                    }
                }
                if let Some(m) = &m {
                    rows.push(mms_errors(&solver, m, x, t));
                }
            })?;
            if let Some(e) = diag_err {
                return Err(e.into());
            }
            if island {
                extra = Some(("reconnection.csv", vec!["t", "rate"], rows));
            } else if m.is_some() {
                extra = Some(("errors.csv", error_header(), rows));
            }
            rep
        }
        Problem::SchurCheck => {
            let def = schur_check(cfg)?;
            extra = Some(("schur_check.csv", vec!["outer", "identity", "k1"], vec![vec![def.outer, def.identity, def.k1]]));
            IterationReport::default()
        }
        Problem::QuadCheck => {
            let mesh = build_rect_mesh(cfg.nx, cfg.nx, Rect::new(-1.0, 1.0, -1.0, 1.0), true)?;
            let rt = build_space(std::sync::Arc::new(mesh), Family::RT, sc.degree)?;
            let k = cfg.island_k;
            let rows = cfg
                .quad_degrees
                .iter()
                .map(|&q| vec![q as f64, div_l2_norm(&rt, &rt.interpolate_vector(|p| island_b_eq(k, p), q))])
                .collect();
            extra = Some(("quad_check.csv", vec!["degree", "div_l2"], rows));
            IterationReport::default()
        }
    };
    sink.finish()?;
    let mut files = std::mem::take(&mut sink.files);
    if !report.rows.is_empty() {
        let path = dir.join("report.csv");
        fs::write(&path, report.to_csv())?;
        files.push(path);
    }
    if let Some((name, header, rows)) = extra {
        let path = dir.join(name);
        write_table(&path, &header, &rows)?;
        files.push(path);
    }
    let path = dir.join("config.txt");
    fs::write(&path, cfg.to_text())?;
    files.push(path);
    Ok(RunOutcome { converged: report.all_converged(), report, files })
}

fn manufactured(cfg: &RunConfig) -> Manufactured {
    let sc = &cfg.solver;
    let profile = if cfg.problem == Problem::MmsStationary { mhdal::driver::problems::TimeProfile::Constant } else { cfg.mms_profile };
    Manufactured { shape: cfg.mms_shape, profile, re: sc.re, re_m: sc.re_m, s: sc.s }
}

fn error_header() -> Vec<&'static str> {
    vec!["t", "err_u", "err_E", "err_B"]
}

/// L² errors of u, E and B against the manufactured solution.
fn mms_errors(solver: &Solver, m: &Manufactured, x: &[f64], t: f64) -> Vec<f64> {
    let d = solver.disc();
    let q = 2 * d.degree + 4;
    vec![
        t,
        d.vu.l2_error(d.u(x), |p, o| o.copy_from_slice(&m.u(p, t)), q),
        d.ve.l2_error(d.e(x), |p, o| o[0] = m.e(p, t), q),
        d.vb.l2_error(d.b(x), |p, o| o.copy_from_slice(&m.b(p, t)), q),
    ]
}

/// Schur defects of the Jacobian at a fixed smooth non-trivial state.
fn schur_check(cfg: &RunConfig) -> Result<mhdal::precond::SchurDefects, RunError> {
    let mesh = build_rect_mesh(cfg.nx, cfg.nx, Rect::unit(), false)?;
    let mut spec = ProblemSpec::new("schur_check", MeshHierarchy::new(mesh, cfg.refinements)?);
    spec.b_bc = Some(vec_fn(|_, _| [1.0, 0.3]));
    spec.e_bc = Some(scalar_fn(|_, _| 0.0));
    let d = Discretization::new(spec.hierarchy.finest().clone(), cfg.solver.degree)?;
    let mut x: Vec<f64> = (0..d.ndofs()).map(|i| (1.0 + i as f64).sin()).collect();
    d.apply_strong_bcs(&spec, &mut x, 0.0);
    let scfg = mhdal::assembly::SolverConfig { transient: false, ..cfg.solver.clone() };
    let inp = AssemblyInput { disc: &d, spec: &spec, cfg: &scfg, time: 0.0, time_terms: None, induction_interp: None };
    let sys = assemble_jacobian(&inp, &x, scfg.newton)?;
    Ok(schur_exactness_check(&sys)?)
}
