//! Nonlinear solves, parameter continuation and BDF2 time stepping.
//!
//! Every nonlinear step solves J δU = −R(U) with outer FGMRES preconditioned
//! by the block-triangular preconditioner and takes the full update.

pub mod diagnostics;
pub mod problems;
pub mod report;

use std::time::Instant;

use crate::assembly::{
    apply_block_system, assemble_jacobian, assemble_residual, spatial_residual_ub, AssemblyInput, Coupling, Discretization,
    MixedState, ProblemSpec, SolverConfig, TimeTerms,
};
use crate::error::{invalid, Result};
use crate::linalg::{fgmres, KrylovConfig};
use crate::multigrid::LevelSet;
use crate::precond::{alpha_rule, InnerKind, OuterPreconditioner};

pub use diagnostics::{reconnection_rate, Reconnection};
pub use problems::{setup_island, setup_ldc2d, setup_mms, IslandParams, Manufactured};
pub use report::{Failure, IterationReport, StepRecord, CSV_HEADER};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// A problem with its multigrid hierarchy, reused across solves.
pub struct Solver {
    pub spec: ProblemSpec,
    pub levels: LevelSet,
    pub inner: InnerKind,
}

/// Outcome of one nonlinear solve.
#[derive(Clone, Debug, Default)]
pub struct SolveOutcome {
    pub iterations: usize,
    pub krylov: Vec<usize>,
    pub residuals: Vec<f64>,
    pub linear_secs: f64,
    pub failure: Option<Failure>,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }
}

impl Solver {
    pub fn new(spec: ProblemSpec, degree: usize) -> Result<Self> {
        let levels = LevelSet::new(&spec.hierarchy, degree)?;
        Ok(Solver { spec, levels, inner: InnerKind::Multigrid })
    }

    pub fn disc(&self) -> &Discretization {
        self.levels.finest()
    }

    /// Interpolated initial data at time `t`.
    pub fn initial_state(&self, t: f64) -> MixedState {
        MixedState { x: self.disc().initial_state(&self.spec, t), history: Vec::new(), t }
    }

    fn input<'a>(&'a self, cfg: &'a SolverConfig, t: f64, tt: Option<&'a TimeTerms>) -> AssemblyInput<'a> {
        AssemblyInput { disc: self.disc(), spec: &self.spec, cfg, time: t, time_terms: tt, induction_interp: None }
    }

    pub fn residual(&self, cfg: &SolverConfig, x: &[f64], t: f64, tt: Option<&TimeTerms>) -> Result<Vec<f64>> {
        assemble_residual(&self.input(cfg, t, tt), x, Coupling::Full)
    }

    /// α of the (E,B)-first ordering; Δt is the effective step of the time
    /// terms and infinite for stationary solves.
    pub fn alpha(&self, cfg: &SolverConfig, x: &[f64], tt: Option<&TimeTerms>) -> f64 {
        let d = self.disc();
        let h = d.mesh.max_cell_diameter();
        let un = d.vu.l2_norm(d.u(x));
        match tt {
            Some(tt) => alpha_rule(tt.effective_dt(), cfg.re_m, h, un, cfg.newton),
            None => {
                let delta = if cfg.newton { 1.0 } else { 0.0 };
                1.0 / (1.0 + delta * cfg.re_m * h * un)
            }
        }
    }

    /// Newton (or Picard) iteration from `x` at time `t`. Strong boundary
    /// data must already be in `x`.
    pub fn solve(&self, cfg: &SolverConfig, x: &mut [f64], t: f64, tt: Option<&TimeTerms>) -> SolveOutcome {
        let mut out = SolveOutcome::default();
        if let Err(e) = self.solve_inner(cfg, x, t, tt, &mut out) {
            out.failure = Some(Failure::Setup(e.to_string()));
        }
        if out.converged() {
            self.disc().remove_pressure_mean(x);
        }
        out
    }

    fn solve_inner(&self, cfg: &SolverConfig, x: &mut [f64], t: f64, tt: Option<&TimeTerms>, out: &mut SolveOutcome) -> Result<()> {
        cfg.validate()?;
        let inp = self.input(cfg, t, tt);
        let mut r = assemble_residual(&inp, x, Coupling::Full)?;
        let r0 = norm(&r);
        out.residuals.push(r0);
        let target = (cfg.nl_rtol * r0).max(cfg.nl_atol);
        let kcfg = KrylovConfig::new(cfg.lin_rtol, cfg.lin_atol, cfg.lin_maxit);
        // ‖uⁿ‖ for α is taken at the start of the solve
        let alpha = self.alpha(cfg, x, tt);
        let mut rn = r0;
        while rn > target {
            if out.iterations >= cfg.nl_maxit {
                out.failure = Some(Failure::MaxIterations);
                return Ok(());
            }
            let clock = Instant::now();
            let sys = assemble_jacobian(&inp, x, cfg.newton)?;
            let systems = match self.inner {
                InnerKind::Multigrid => self.levels.level_systems(&self.spec, cfg, x, tt.map(|t| t.coef), cfg.newton, Some(&sys))?,
                InnerKind::Dense => Vec::new(),
            };
            let pc = OuterPreconditioner::new(&sys, &self.levels, &systems, cfg, cfg.order, alpha, self.inner)?;
            drop(systems);
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let mut dx = vec![0.0; rhs.len()];
            let rep = fgmres(&mut |v, y| apply_block_system(&sys, v, y), &mut |v, y| pc.apply(v, y), &rhs, &mut dx, &kcfg);
            out.linear_secs += clock.elapsed().as_secs_f64();
            out.iterations += 1;
            out.krylov.push(rep.iterations);
            if !rep.converged {
                out.failure = Some(Failure::Linear { maxit: cfg.lin_maxit });
                return Ok(());
            }
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            r = assemble_residual(&inp, x, Coupling::Full)?;
            rn = norm(&r);
            out.residuals.push(rn);
            if !rn.is_finite() || rn > 1e12 * r0.max(1.0) {
                out.failure = Some(Failure::Diverged);
                return Ok(());
            }
        }
        Ok(())
    }

    fn record(&self, stage: &str, cfg: &SolverConfig, dt: f64, t: f64, x: &[f64], o: &SolveOutcome) -> StepRecord {
        let d = self.disc();
        let total: usize = o.krylov.iter().sum();
        StepRecord {
            stage: stage.to_string(),
            s: cfg.s,
            re: cfg.re,
            re_m: cfg.re_m,
            dt,
            t,
            newton_its: o.iterations,
            krylov: o.krylov.clone(),
            avg_krylov: StepRecord::mean(&o.krylov),
            initial_residual: o.residuals.first().copied().unwrap_or(f64::NAN),
            residuals: o.residuals.clone(),
            res_norm: o.residuals.last().copied().unwrap_or(f64::NAN),
            div_u: d.div_u_norm(x),
            div_b: d.div_b_norm(x),
            secs_per_linear_it: if total > 0 { o.linear_secs / total as f64 } else { 0.0 },
            failure: o.failure.clone(),
        }
    }
}

/// Stationary nonlinear solve from `initial`.
pub fn newton_solve(solver: &Solver, cfg: &SolverConfig, initial: MixedState) -> (MixedState, StepRecord) {
    let mut x = initial.x;
    solver.disc().apply_strong_bcs(&solver.spec, &mut x, initial.t);
    let o = solver.solve(cfg, &mut x, initial.t, None);
    let rec = solver.record("stationary", cfg, 0.0, initial.t, &x, &o);
    (MixedState { x, history: initial.history, t: initial.t }, rec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Param {
    S,
    Re,
    Rem,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::S => "S",
            Param::Re => "Re",
            Param::Rem => "Rem",
        }
    }

    fn set(self, cfg: &mut SolverConfig, v: f64) {
        match self {
            Param::S => cfg.s = v,
            Param::Re => cfg.re = v,
            Param::Rem => cfg.re_m = v,
        }
    }
}

/// Parameter ladders in nesting order, outermost (the table column) first.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationLadder {
    pub params: Vec<(Param, Vec<f64>)>,
}

impl ContinuationLadder {
    /// Ladders of `cfg`, nested Re, then S, then Re_m. This reproduces the
    /// column/row layout of the tables (S\Re, Re_m\Re and Re_m\S).
    pub fn from_config(cfg: &SolverConfig) -> Result<Self> {
        let l = ContinuationLadder {
            params: vec![(Param::Re, cfg.ladder_re.clone()), (Param::S, cfg.ladder_s.clone()), (Param::Rem, cfg.ladder_rem.clone())],
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        for (p, v) in &self.params {
            if v.is_empty() || v[0] != 1.0 {
                return invalid(format!("ladder for {} must start at 1", p.name()));
            }
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return invalid(format!("ladder for {} must be strictly increasing", p.name()));
            }
        }
        Ok(())
    }

    /// Multi-indices in traversal order: the innermost ladder (table rows)
    /// varies fastest, so each table column is walked top to bottom.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for (_, v) in &self.params {
            out = out.into_iter().flat_map(|p| (0..v.len()).map(move |i| [p.clone(), vec![i]].concat())).collect();
        }
        out
    }

    /// The cell whose solution warm-starts `cell`: decrement the last
    /// nonzero index. `None` for the first cell.
    pub fn predecessor(cell: &[usize]) -> Option<Vec<usize>> {
        let k = cell.iter().rposition(|&i| i > 0)?;
        let mut p = cell.to_vec();
        p[k] -= 1;
        Some(p)
    }

    pub fn config_for(&self, base: &SolverConfig, cell: &[usize]) -> SolverConfig {
        let mut cfg = base.clone();
        for ((p, v), &i) in self.params.iter().zip(cell) {
            p.set(&mut cfg, v[i]);
        }
        cfg
    }
}

/// Stationary solves over the ladder grid with warm starts. Failed cells are
/// recorded; a cell whose predecessor failed starts from the predecessor's
/// own starting point.
pub fn continuation_run(solver: &Solver, cfg: &SolverConfig) -> Result<IterationReport> {
    continuation_run_with(solver, cfg, &mut |_, _, _| {})
}

/// `continuation_run` handing each cell's configuration and result (the
/// starting point if the cell failed) to `observer`.
pub fn continuation_run_with(
    solver: &Solver,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&[usize], &SolverConfig, &[f64]),
) -> Result<IterationReport> {
    let ladder = ContinuationLadder::from_config(cfg)?;
    let mut report = IterationReport::default();
    let mut solved: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    let cold = solver.initial_state(0.0);
    for cell in ladder.cells() {
        let start = match ContinuationLadder::predecessor(&cell) {
            Some(p) => solved.iter().find(|(c, _)| *c == p).map(|(_, x)| x.clone()).unwrap_or_else(|| cold.x.clone()),
            None => cold.x.clone(),
        };
        let ccfg = ladder.config_for(cfg, &cell);
        let (st, mut rec) = newton_solve(solver, &ccfg, MixedState::new(start.clone()));
        rec.stage = "continuation".to_string();
        let keep = if rec.converged() { st.x } else { start };
        observer(&cell, &ccfg, &keep);
        solved.push((cell, keep));
        report.push(rec);
    }
    Ok(report)
}

/// Crank–Nicolson first step followed by BDF2 steps up to `t_final`. The
/// observer sees every accepted state (including the initial one). On a
/// failed step the run stops; the state returned is the last accepted one.
pub fn bdf2_run(
    solver: &Solver,
    cfg: &SolverConfig,
    initial: MixedState,
    t_final: f64,
    observer: &mut dyn FnMut(f64, &[f64]),
) -> Result<(MixedState, IterationReport)> {
    if !(cfg.dt > 0.0) {
        return invalid("time stepping needs dt > 0");
    }
    let scfg = SolverConfig { transient: true, ..cfg.clone() };
    let d = solver.disc();
    let nsteps = ((t_final - initial.t) / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let mut report = IterationReport::default();
    let mut cur = initial.x.clone();
    let mut t = initial.t;
    d.apply_strong_bcs(&solver.spec, &mut cur, t);
    observer(t, &cur);
    let mut prev: Option<Vec<f64>> = initial.history.first().cloned();
    for _ in 0..nsteps {
        let tn = t + cfg.dt;
        let (tt, stage) = match &prev {
            None => {
                let old = spatial_residual_ub(&solver.input(&scfg, t, None), &cur)?;
                (TimeTerms::crank_nicolson(cfg.dt, &cur, old), "cn")
            }
            Some(p) => (TimeTerms::bdf2(cfg.dt, &cur, p), "bdf2"),
        };
        let mut x = cur.clone();
        d.apply_strong_bcs(&solver.spec, &mut x, tn);
        let o = solver.solve(&scfg, &mut x, tn, Some(&tt));
        let rec = solver.record(stage, &scfg, cfg.dt, tn, &x, &o);
        let ok = rec.converged();
        report.push(rec);
        if !ok {
            break;
        }
        prev = Some(std::mem::replace(&mut cur, x));
        t = tn;
        observer(t, &cur);
    }
    Ok((MixedState { x: cur, history: prev.into_iter().collect(), t }, report))
}

/// `bdf2_run` keeping every state.
pub fn bdf2_history(solver: &Solver, cfg: &SolverConfig, initial: MixedState, t_final: f64) -> Result<(Vec<(f64, Vec<f64>)>, IterationReport)> {
    let mut states = Vec::new();
    let (_, rep) = bdf2_run(solver, cfg, initial, t_final, &mut |t, x| states.push((t, x.to_vec())))?;
    Ok((states, rep))
}
