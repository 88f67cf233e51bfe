//! Block-triangular outer preconditioner and its inner solvers.
//!
//! With unknowns (u, p, E, B) the outer preconditioner is upper triangular in
//! one of two orderings. `EliminateUp` puts the hydrodynamic block on top and
//! uses the EM block itself as the Schur approximation; `EliminateEB` puts
//! the EM block on top and approximates its Schur complement by the
//! hydrodynamic block with F + αD.

pub mod schur;

use std::cell::Cell;

use crate::assembly::{stack, BlockSystem, EliminationOrder, SolverConfig};
use crate::error::Result;
use crate::femspace::FunctionSpace;
use crate::linalg::{fgmres, CsrMatrix, DenseMatrix, KrylovConfig, KrylovReport, LuFactor};
use crate::multigrid::{build_em_hierarchy, build_momentum_hierarchy, LevelSet, Multigrid};

pub use schur::{outer_schur_dense, outer_schur_up_formula, schur_exactness_check, schur_exactness_check_alpha, SchurDefects};

/// α = Δt / (Δt + Re_m h² + δ Re_m h ‖uⁿ‖ Δt).
pub fn alpha_rule(dt: f64, re_m: f64, h: f64, u_norm: f64, newton: bool) -> f64 {
    let delta = if newton { 1.0 } else { 0.0 };
    dt / (dt + re_m * h * h + delta * re_m * h * u_norm * dt)
}

/// −(1/Re + γ)·M_p⁻¹ with cell-wise dense solves.
pub struct HydroSchur {
    blocks: Vec<(Vec<usize>, LuFactor)>,
    scale: f64,
    n: usize,
}

impl HydroSchur {
    pub fn new(vp: &FunctionSpace, re: f64, gamma: f64) -> Result<Self> {
        let mp = crate::assembly::mass_matrix(vp);
        let mut lookup = Vec::new();
        let mut blocks = Vec::with_capacity(vp.mesh().num_cells());
        for c in 0..vp.mesh().num_cells() {
            let d = vp.cell_dofs(c).to_vec();
            let local = mp.dense_submatrix(&d, &d, &mut lookup);
            blocks.push((d, LuFactor::new(local)?));
        }
        Ok(HydroSchur { blocks, scale: -(1.0 / re + gamma), n: vp.ndofs() })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        debug_assert_eq!(r.len(), self.n);
        let mut buf = Vec::new();
        for (d, f) in &self.blocks {
            buf.clear();
            buf.extend(d.iter().map(|&i| r[i]));
            f.solve_in_place(&mut buf);
            for (&i, v) in d.iter().zip(&buf) {
                z[i] = self.scale * v;
            }
        }
    }
}

/// Adds c·wwᵀ to the pressure block `p` of a dense (u, p) matrix, with w the
/// normalised constant pressure and c the largest entry. This removes the
/// constant pressure null space without changing solutions of consistent
/// systems that have zero-mean pressure.
pub fn regularize_pressure(m: &mut DenseMatrix, p: std::ops::Range<usize>) {
    let np = p.len();
    if np == 0 {
        return;
    }
    let c = m.data.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0) / np as f64;
    for i in p.clone() {
        for j in p.clone() {
            m[(i, j)] += c;
        }
    }
}

/// Dense LU of a (u, p) matrix with `nu` velocity unknowns, regularised in p.
pub fn dense_hydro(mut m: DenseMatrix, nu: usize) -> Result<LuFactor> {
    let n = m.nrows;
    regularize_pressure(&mut m, nu..n);
    LuFactor::new(m)
}

/// Removes the arithmetic mean of the pressure coefficients.
pub fn remove_pressure_mean(z: &mut [f64]) {
    if z.is_empty() {
        return;
    }
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    z.iter_mut().for_each(|v| *v -= mean);
}

/// Approximate inverse of one diagonal 2×2 block.
pub enum BlockSolve {
    /// FGMRES on the (u,p) block preconditioned by [V-cycle, Bᵀ; 0, S̃_p].
    Hydro { a: CsrMatrix, bt: CsrMatrix, mg: Multigrid, schur: HydroSchur, its: usize, nu: usize },
    /// FGMRES on the (E,B) block preconditioned by the monolithic V-cycle.
    Em { a: CsrMatrix, mg: Multigrid, its: usize },
    /// Exact dense solve.
    Dense(LuFactor),
}

impl BlockSolve {
    /// Approximately solve with the configured fixed number of inner
    /// iterations; returns the inner Krylov report when iterative.
    pub fn solve(&self, r: &[f64], z: &mut [f64]) -> Option<KrylovReport> {
        let its = match self {
            BlockSolve::Hydro { its, .. } | BlockSolve::Em { its, .. } => *its,
            BlockSolve::Dense(_) => 0,
        };
        z.iter_mut().for_each(|v| *v = 0.0);
        self.solve_to_tolerance(r, z, &KrylovConfig::fixed(its))
    }

    /// Tolerance-driven solve with the same inner preconditioner, starting
    /// from the given `z`.
    pub fn solve_to_tolerance(&self, r: &[f64], z: &mut [f64], cfg: &KrylovConfig) -> Option<KrylovReport> {
        match self {
            BlockSolve::Dense(lu) => {
                z.copy_from_slice(r);
                lu.solve_in_place(z);
                None
            }
            BlockSolve::Em { a, mg, .. } => Some(fgmres(&mut |v, y| a.matvec(v, y), &mut |v, y| mg.v_cycle(v, y), r, z, cfg)),
            BlockSolve::Hydro { a, bt, mg, schur, nu, .. } => {
                let nu = *nu;
                let mut tmp = vec![0.0; nu];
                let mut prec = |v: &[f64], y: &mut [f64]| {
                    let (yu, yp) = y.split_at_mut(nu);
                    schur.apply(&v[nu..], yp);
                    tmp.copy_from_slice(&v[..nu]);
                    bt.matvec_add(-1.0, yp, &mut tmp);
                    mg.v_cycle(&tmp, yu);
                };
                Some(fgmres(&mut |v, y| a.matvec(v, y), &mut prec, r, z, cfg))
            }
        }
    }
}

/// How the diagonal blocks are inverted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerKind {
    Multigrid,
    Dense,
}

/// Inner iteration counters collected while the preconditioner is applied.
#[derive(Clone, Debug, Default)]
pub struct Counters {
    pub applications: usize,
    pub top_solves: usize,
    pub schur_solves: usize,
    pub inner_iterations: usize,
    pub inner_breakdowns: usize,
}

pub struct OuterPreconditioner {
    pub order: EliminationOrder,
    pub top: BlockSolve,
    pub schur: BlockSolve,
    /// Coupling block K (rows of the top block, columns of the Schur block).
    pub coupling: CsrMatrix,
    pub alpha: f64,
    /// Size of the (u, p) part.
    hydro: usize,
    /// Start of the pressure block.
    p0: usize,
    n: usize,
    counters: Cell<(usize, usize, usize, usize, usize)>,
}

pub fn hydro_solve(sys: &BlockSystem, levels: &LevelSet, systems: &[BlockSystem], cfg: &SolverConfig, alpha: f64) -> Result<BlockSolve> {
    let mg = build_momentum_hierarchy(levels, systems, alpha, cfg.smoother_its)?;
    let schur = HydroSchur::new(&levels.finest().vp, cfg.re, cfg.gamma)?;
    Ok(BlockSolve::Hydro { a: sys.hydro_block(alpha), bt: sys.bt.clone(), mg, schur, its: cfg.inner_its, nu: sys.f.nrows })
}

pub fn em_solve(sys: &BlockSystem, levels: &LevelSet, systems: &[BlockSystem], cfg: &SolverConfig) -> Result<BlockSolve> {
    let mg = build_em_hierarchy(levels, systems, cfg.smoother_its)?;
    Ok(BlockSolve::Em { a: sys.em_block(), mg, its: cfg.inner_its })
}

impl OuterPreconditioner {
    /// `systems` are the level linearisations (coarse to fine; unused for
    /// dense inner solves). `alpha` scales D in the Schur approximation of
    /// the `EliminateEB` ordering.
    pub fn new(
        sys: &BlockSystem,
        levels: &LevelSet,
        systems: &[BlockSystem],
        cfg: &SolverConfig,
        order: EliminationOrder,
        alpha: f64,
        inner: InnerKind,
    ) -> Result<Self> {
        let o = sys.offsets;
        let (nu, np, ne, nb) = (o[1] - o[0], o[2] - o[1], o[3] - o[2], o[4] - o[3]);
        let dense = |m: CsrMatrix| -> Result<BlockSolve> { Ok(BlockSolve::Dense(LuFactor::new(m.to_dense())?)) };
        let dense_h = |m: CsrMatrix| -> Result<BlockSolve> { Ok(BlockSolve::Dense(dense_hydro(m.to_dense(), nu)?)) };
        let (top, schur, coupling) = match order {
            EliminationOrder::EliminateUp => {
                let top = match inner {
                    InnerKind::Dense => dense_h(sys.hydro_block(1.0))?,
                    InnerKind::Multigrid => hydro_solve(sys, levels, systems, cfg, 1.0)?,
                };
                let schur = match inner {
                    InnerKind::Dense => dense(sys.em_block())?,
                    InnerKind::Multigrid => em_solve(sys, levels, systems, cfg)?,
                };
                let ub = sys.ub_block();
                let k = stack(&[&[Some(&sys.j), Some(&ub)], &[None, None]], &[nu, np], &[ne, nb]);
                (top, schur, k)
            }
            EliminationOrder::EliminateEB => {
                let top = match inner {
                    InnerKind::Dense => dense(sys.em_block())?,
                    InnerKind::Multigrid => em_solve(sys, levels, systems, cfg)?,
                };
                let schur = match inner {
                    InnerKind::Dense => dense_h(sys.hydro_block(alpha))?,
                    InnerKind::Multigrid => hydro_solve(sys, levels, systems, cfg, alpha)?,
                };
                let k = stack(&[&[Some(&sys.g), None], &[None, None]], &[ne, nb], &[nu, np]);
                (top, schur, k)
            }
        };
        Ok(Self::from_parts(order, top, schur, coupling, alpha, o))
    }

    /// Assemble from explicit block solvers (used to plug in exact Schur
    /// complements).
    pub fn from_parts(order: EliminationOrder, top: BlockSolve, schur: BlockSolve, coupling: CsrMatrix, alpha: f64, offsets: [usize; 5]) -> Self {
        OuterPreconditioner { order, top, schur, coupling, alpha, hydro: offsets[2], p0: offsets[1], n: offsets[4], counters: Cell::new((0, 0, 0, 0, 0)) }
    }

    pub fn counters(&self) -> Counters {
        let (a, t, s, i, b) = self.counters.get();
        Counters { applications: a, top_solves: t, schur_solves: s, inner_iterations: i, inner_breakdowns: b }
    }

    fn record(&self, rep: Option<KrylovReport>, top: bool) {
        let (a, mut t, mut s, mut i, mut b) = self.counters.get();
        if top {
            t += 1;
        } else {
            s += 1;
        }
        if let Some(r) = rep {
            i += r.iterations;
            if r.breakdown && !r.converged {
                b += 1;
            }
        }
        self.counters.set((a, t, s, i, b));
    }

    /// z = P⁻¹ r for the upper block-triangular P.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        debug_assert_eq!(r.len(), self.n);
        let hydro = self.hydro;
        // permute into (top, schur) ordering
        let (rt, rs): (Vec<f64>, Vec<f64>) = match self.order {
            EliminationOrder::EliminateUp => (r[..hydro].to_vec(), r[hydro..].to_vec()),
            EliminationOrder::EliminateEB => (r[hydro..].to_vec(), r[..hydro].to_vec()),
        };
        let mut zs = vec![0.0; rs.len()];
        let rep = self.schur.solve(&rs, &mut zs);
        self.record(rep, false);
        let mut rt2 = rt;
        self.coupling.matvec_add(-1.0, &zs, &mut rt2);
        let mut zt = vec![0.0; rt2.len()];
        let rep = self.top.solve(&rt2, &mut zt);
        self.record(rep, true);
        match self.order {
            EliminationOrder::EliminateUp => {
                z[..hydro].copy_from_slice(&zt);
                z[hydro..].copy_from_slice(&zs);
            }
            EliminationOrder::EliminateEB => {
                z[..hydro].copy_from_slice(&zs);
                z[hydro..].copy_from_slice(&zt);
            }
        }
        remove_pressure_mean(&mut z[self.p0..hydro]);
        let mut c = self.counters.get();
        c.0 += 1;
        self.counters.set(c);
    }
}
