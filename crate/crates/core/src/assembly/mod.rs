//! Nonlinear residual and linearised block systems.
//!
//! Unknowns are ordered (u, p, E, B) in one global vector. The velocity is
//! BDM_k with symmetric interior penalty viscous terms and upwinded
//! conservative advection. The normal velocity, B·n and E are imposed
//! strongly: their boundary dofs carry the data in the state, the residual
//! vanishes there and the Jacobian has identity rows and columns. The
//! tangential velocity enters weakly through Nitsche terms. With u·n given
//! on the whole boundary the pressure is determined up to a constant.

mod forms;

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::femspace::derham::{curl_matrix, div_l2_norm, div_matrix};
use crate::femspace::{Family, FunctionSpace};
use crate::linalg::CsrMatrix;
use crate::mesh::{BoundaryTag, Mesh, MeshHierarchy};

pub use forms::{mass_matrix, stabilization_matrix};

pub type VecFn = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

pub fn vec_fn(f: impl Fn([f64; 2], f64) -> [f64; 2] + Send + Sync + 'static) -> VecFn {
    Arc::new(f)
}

pub fn scalar_fn(f: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

/// Problem data: geometry, sources, boundary and initial data.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub hierarchy: MeshHierarchy,
    /// Momentum body force f.
    pub force: Option<VecFn>,
    /// Source in Ohm's law (E equation).
    pub ohm_source: Option<ScalarFn>,
    /// Source in the induction (B) equation.
    pub induction_source: Option<VecFn>,
    /// Assemble the induction source as M_B·I_RT(g) so that it is exactly
    /// divergence-free whenever g is.
    pub interpolate_induction_source: bool,
    /// Moment quadrature degree for interpolating data; `None` uses the
    /// element default.
    pub interp_degree: Option<usize>,
    /// Velocity boundary data g_D (normal part strong, tangential part weak).
    pub u_bc: Option<VecFn>,
    /// Field whose normal trace is imposed on B.
    pub b_bc: Option<VecFn>,
    /// Boundary values of E.
    pub e_bc: Option<ScalarFn>,
    pub u0: Option<VecFn>,
    pub p0: Option<ScalarFn>,
    pub e0: Option<ScalarFn>,
    pub b0: Option<VecFn>,
}

impl ProblemSpec {
    pub fn new(name: &str, hierarchy: MeshHierarchy) -> Self {
        ProblemSpec {
            name: name.to_string(),
            hierarchy,
            force: None,
            ohm_source: None,
            induction_source: None,
            interpolate_induction_source: false,
            interp_degree: None,
            u_bc: None,
            b_bc: None,
            e_bc: None,
            u0: None,
            p0: None,
            e0: None,
            b0: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EliminationOrder {
    /// Eliminate (u,p): the EM block acts as Schur approximation.
    EliminateUp,
    /// Eliminate (E,B): the hydrodynamic block with D acts as Schur approximation.
    EliminateEB,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub re: f64,
    pub re_m: f64,
    pub s: f64,
    pub gamma: f64,
    pub dt: f64,
    /// η: transient (true) or stationary.
    pub transient: bool,
    /// δ: Newton (true) or Picard.
    pub newton: bool,
    pub degree: usize,
    /// DG penalty; `None` means 10k².
    pub sigma: Option<f64>,
    pub mu: f64,
    pub nl_rtol: f64,
    pub nl_atol: f64,
    pub nl_maxit: usize,
    pub lin_rtol: f64,
    pub lin_atol: f64,
    pub lin_maxit: usize,
    pub smoother_its: usize,
    pub inner_its: usize,
    pub order: EliminationOrder,
    pub ladder_s: Vec<f64>,
    pub ladder_re: Vec<f64>,
    pub ladder_rem: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            re: 1.0,
            re_m: 1.0,
            s: 1.0,
            gamma: 1e4,
            dt: 0.01,
            transient: false,
            newton: true,
            degree: 2,
            sigma: None,
            mu: 5e-3,
            nl_rtol: 1e-10,
            nl_atol: 1e-6,
            nl_maxit: 25,
            lin_rtol: 1e-7,
            lin_atol: 1e-7,
            lin_maxit: 50,
            smoother_its: 6,
            inner_its: 2,
            order: EliminationOrder::EliminateUp,
            ladder_s: vec![1.0],
            ladder_re: vec![1.0],
            ladder_rem: vec![1.0],
        }
    }
}

impl SolverConfig {
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(10.0 * (self.degree * self.degree) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("Re", self.re), ("Rem", self.re_m), ("gamma", self.gamma)] {
            if !(v > 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        // S = 0 decouples the fluid from the field
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return invalid(format!("S must be non-negative, got {}", self.s));
        }
        if self.transient && !(self.dt > 0.0) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(1..=2).contains(&self.degree) {
            return invalid(format!("degree must be 1 or 2, got {}", self.degree));
        }
        Ok(())
    }
}

/// Spaces, dof offsets and boundary bookkeeping on one mesh.
pub struct Discretization {
    pub mesh: Arc<Mesh>,
    pub degree: usize,
    pub vu: FunctionSpace,
    pub vp: FunctionSpace,
    pub ve: FunctionSpace,
    pub vb: FunctionSpace,
    /// Start of the u, p, E, B blocks and the total size.
    pub offsets: [usize; 5],
    /// Strongly constrained normal velocity dofs (local to the u space).
    pub u_bc: Vec<usize>,
    /// Strongly constrained E dofs (local to the E space).
    pub e_bc: Vec<usize>,
    /// Strongly constrained B dofs (local to the B space).
    pub b_bc: Vec<usize>,
    pub u_mask: Vec<bool>,
    pub e_mask: Vec<bool>,
    pub b_mask: Vec<bool>,
    pub div_u: CsrMatrix,
    pub div_b: CsrMatrix,
    pub curl: CsrMatrix,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        let vu = FunctionSpace::new(mesh.clone(), crate::femspace::Element::new(Family::BDM, degree)?)?;
        let mut vp = FunctionSpace::new(mesh.clone(), crate::femspace::Element::new(Family::DG, degree - 1)?)?;
        vp.mean_constraint = true;
        let ve = FunctionSpace::new(mesh.clone(), crate::femspace::Element::new(Family::CG, degree)?)?;
        let vb = FunctionSpace::new(mesh.clone(), crate::femspace::Element::new(Family::RT, degree)?)?;
        let nu = vu.ndofs();
        let np = vp.ndofs();
        let ne = ve.ndofs();
        let nb = vb.ndofs();
        let offsets = [0, nu, nu + np, nu + np + ne, nu + np + ne + nb];
        let u_bc = vu.boundary_dofs_union(&BoundaryTag::BOUNDARY);
        let mut u_mask = vec![false; nu];
        u_bc.iter().for_each(|&i| u_mask[i] = true);
        let e_bc = ve.boundary_dofs_union(&BoundaryTag::BOUNDARY);
        let b_bc = vb.boundary_dofs_union(&BoundaryTag::BOUNDARY);
        let mut e_mask = vec![false; ne];
        e_bc.iter().for_each(|&i| e_mask[i] = true);
        let mut b_mask = vec![false; nb];
        b_bc.iter().for_each(|&i| b_mask[i] = true);
        let div_u = div_matrix(&vu, &vp)?;
        let div_b = div_matrix(&vb, &vp)?;
        let curl = curl_matrix(&ve, &vb)?;
        Ok(Discretization {
            mesh,
            degree,
            vu,
            vp,
            ve,
            vb,
            offsets,
            u_bc,
            e_bc,
            b_bc,
            u_mask,
            e_mask,
            b_mask,
            div_u,
            div_b,
            curl,
        })
    }

    pub fn ndofs(&self) -> usize {
        self.offsets[4]
    }

    pub fn range(&self, field: usize) -> std::ops::Range<usize> {
        self.offsets[field]..self.offsets[field + 1]
    }

    pub fn u<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.range(0)]
    }
    pub fn p<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.range(1)]
    }
    pub fn e<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.range(2)]
    }
    pub fn b<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.range(3)]
    }

    /// Mask over the full vector marking strongly constrained dofs.
    pub fn constrained_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.ndofs()];
        for &i in &self.u_bc {
            m[i] = true;
        }
        for &i in &self.e_bc {
            m[self.offsets[2] + i] = true;
        }
        for &i in &self.b_bc {
            m[self.offsets[3] + i] = true;
        }
        m
    }

    /// Write boundary data at time `t` into the strongly constrained dofs.
    pub fn apply_strong_bcs(&self, spec: &ProblemSpec, x: &mut [f64], t: f64) {
        let qdeg = spec.interp_degree.unwrap_or(self.vb.default_interp_degree());
        match &spec.u_bc {
            Some(f) => {
                let uv = self.vu.interpolate_vector(|p| f(p, t), qdeg);
                for &i in &self.u_bc {
                    x[self.offsets[0] + i] = uv[i];
                }
            }
            None => self.u_bc.iter().for_each(|&i| x[self.offsets[0] + i] = 0.0),
        }
        match &spec.e_bc {
            Some(f) => {
                let ev = self.ve.interpolate_scalar(|p| f(p, t), qdeg);
                for &i in &self.e_bc {
                    x[self.offsets[2] + i] = ev[i];
                }
            }
            None => self.e_bc.iter().for_each(|&i| x[self.offsets[2] + i] = 0.0),
        }
        match &spec.b_bc {
            Some(f) => {
                let bv = self.vb.interpolate_vector(|p| f(p, t), qdeg);
                for &i in &self.b_bc {
                    x[self.offsets[3] + i] = bv[i];
                }
            }
            None => self.b_bc.iter().for_each(|&i| x[self.offsets[3] + i] = 0.0),
        }
    }

    /// Interpolate initial data (missing fields are zero) and apply strong BCs.
    pub fn initial_state(&self, spec: &ProblemSpec, t: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.ndofs()];
        let qdeg = spec.interp_degree.unwrap_or(self.vu.default_interp_degree());
        if let Some(f) = &spec.u0 {
            let v = self.vu.interpolate_vector(|p| f(p, t), qdeg);
            x[self.range(0)].copy_from_slice(&v);
        }
        if let Some(f) = &spec.p0 {
            let v = self.vp.interpolate_scalar(|p| f(p, t), qdeg);
            x[self.range(1)].copy_from_slice(&v);
        }
        if let Some(f) = &spec.e0 {
            let v = self.ve.interpolate_scalar(|p| f(p, t), qdeg);
            x[self.range(2)].copy_from_slice(&v);
        }
        if let Some(f) = &spec.b0 {
            let v = self.vb.interpolate_vector(|p| f(p, t), qdeg);
            x[self.range(3)].copy_from_slice(&v);
        }
        self.apply_strong_bcs(spec, &mut x, t);
        x
    }

    pub fn div_u_norm(&self, x: &[f64]) -> f64 {
        div_l2_norm(&self.vu, self.u(x))
    }

    pub fn div_b_norm(&self, x: &[f64]) -> f64 {
        div_l2_norm(&self.vb, self.b(x))
    }

    /// Shift the pressure so that it has zero mean.
    pub fn remove_pressure_mean(&self, x: &mut [f64]) {
        let area = self.mesh.bounds().width() * self.mesh.bounds().height();
        let mean = self.vp.integral(self.p(x)) / area;
        // every DG basis set sums to one on its cell, so a constant shift is
        // a shift of all pressure coefficients
        for v in x[self.range(1)].iter_mut() {
            *v -= mean;
        }
    }
}

/// Time-discretisation data for one implicit step.
///
/// The u and B rows receive `coef·M(x − reference)` plus `explicit`, the
/// latter carrying the old-level spatial residual for Crank–Nicolson.
#[derive(Clone, Debug)]
pub struct TimeTerms {
    pub coef: f64,
    pub reference: Vec<f64>,
    pub explicit: Option<Vec<f64>>,
}

impl TimeTerms {
    /// BDF2: (3x − 4xⁿ + xⁿ⁻¹)/(2Δt).
    pub fn bdf2(dt: f64, xn: &[f64], xnm1: &[f64]) -> Self {
        let reference = xn.iter().zip(xnm1).map(|(a, b)| (4.0 * a - b) / 3.0).collect();
        TimeTerms { coef: 1.5 / dt, reference, explicit: None }
    }

    /// Crank–Nicolson scaled by 2: 2(x − xⁿ)/Δt + N(x) + N(xⁿ).
    pub fn crank_nicolson(dt: f64, xn: &[f64], old_residual: Vec<f64>) -> Self {
        TimeTerms { coef: 2.0 / dt, reference: xn.to_vec(), explicit: Some(old_residual) }
    }

    /// Backward Euler.
    pub fn backward_euler(dt: f64, xn: &[f64]) -> Self {
        TimeTerms { coef: 1.0 / dt, reference: xn.to_vec(), explicit: None }
    }

    /// Effective step Δt/c used by the α rule.
    pub fn effective_dt(&self) -> f64 {
        1.0 / self.coef
    }
}

/// Coefficient vectors with time history.
#[derive(Clone, Debug)]
pub struct MixedState {
    pub x: Vec<f64>,
    /// Previous levels, most recent first.
    pub history: Vec<Vec<f64>>,
    pub t: f64,
}

impl MixedState {
    pub fn new(x: Vec<f64>) -> Self {
        MixedState { x, history: Vec::new(), t: 0.0 }
    }
}

/// Linearised operator of Table 1 (fields named after its blocks).
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub newton: bool,
    pub offsets: [usize; 5],
    pub re_m: f64,
    pub f: CsrMatrix,
    pub d: CsrMatrix,
    pub bt: CsrMatrix,
    pub j: CsrMatrix,
    pub jt: Option<CsrMatrix>,
    pub d1t: Option<CsrMatrix>,
    pub d2t: Option<CsrMatrix>,
    pub b: CsrMatrix,
    pub me: CsrMatrix,
    pub g: CsrMatrix,
    pub gt: Option<CsrMatrix>,
    pub a: CsrMatrix,
    pub at: CsrMatrix,
    pub c: CsrMatrix,
    /// Strongly constrained u, E and B dofs (local indices).
    pub u_bc: Vec<usize>,
    pub e_bc: Vec<usize>,
    pub b_bc: Vec<usize>,
}

impl BlockSystem {
    pub fn ndofs(&self) -> usize {
        self.offsets[4]
    }

    /// F + D (+ α-scaled D).
    pub fn momentum(&self, alpha: f64) -> CsrMatrix {
        self.f.add(1.0, &self.d, alpha)
    }

    /// Sum of the (u,B) coupling blocks J̃ + D̃₁ + D̃₂ (zero for Picard).
    pub fn ub_block(&self) -> CsrMatrix {
        let mut m = CsrMatrix::zeros(self.f.nrows, self.c.ncols);
        for blk in [&self.jt, &self.d1t, &self.d2t].into_iter().flatten() {
            m = m.add(1.0, blk, 1.0);
        }
        m
    }

    /// G̃ − A/Re_m.
    pub fn eb_block(&self) -> CsrMatrix {
        match &self.gt {
            Some(gt) => gt.add(1.0, &self.a, -1.0 / self.re_m),
            None => self.a.scaled(-1.0 / self.re_m),
        }
    }

    /// Monolithic EM block [[M_E, G̃ − A/Re_m], [Aᵀ, C]].
    pub fn em_block(&self) -> CsrMatrix {
        let ne = self.me.nrows;
        let nb = self.c.nrows;
        let eb = self.eb_block();
        stack(&[&[Some(&self.me), Some(&eb)], &[Some(&self.at), Some(&self.c)]], &[ne, nb], &[ne, nb])
    }

    /// Hydrodynamic block [[F + αD, Bᵀ], [B, 0]].
    pub fn hydro_block(&self, alpha: f64) -> CsrMatrix {
        let nu = self.f.nrows;
        let np = self.b.nrows;
        let m = self.momentum(alpha);
        stack(&[&[Some(&m), Some(&self.bt)], &[Some(&self.b), None]], &[nu, np], &[nu, np])
    }

    /// Full 4×4 operator as one sparse matrix.
    pub fn monolithic(&self) -> CsrMatrix {
        let o = self.offsets;
        let sizes = [o[1] - o[0], o[2] - o[1], o[3] - o[2], o[4] - o[3]];
        let fd = self.momentum(1.0);
        let ub = self.ub_block();
        let eb = self.eb_block();
        stack(
            &[
                &[Some(&fd), Some(&self.bt), Some(&self.j), Some(&ub)],
                &[Some(&self.b), None, None, None],
                &[Some(&self.g), None, Some(&self.me), Some(&eb)],
                &[None, None, Some(&self.at), Some(&self.c)],
            ],
            &sizes,
            &sizes,
        )
    }
}

/// Assemble a block matrix from optional sub-blocks.
pub fn stack(blocks: &[&[Option<&CsrMatrix>]], rows: &[usize], cols: &[usize]) -> CsrMatrix {
    let nrows: usize = rows.iter().sum();
    let ncols: usize = cols.iter().sum();
    let mut coff = vec![0; cols.len()];
    for j in 1..cols.len() {
        coff[j] = coff[j - 1] + cols[j - 1];
    }
    let mut indptr = Vec::with_capacity(nrows + 1);
    let mut indices = Vec::new();
    let mut data = Vec::new();
    indptr.push(0);
    for (bi, brow) in blocks.iter().enumerate() {
        for i in 0..rows[bi] {
            for (bj, blk) in brow.iter().enumerate() {
                if let Some(m) = blk {
                    let (c, v) = m.row(i);
                    indices.extend(c.iter().map(|&j| j + coff[bj]));
                    data.extend_from_slice(v);
                }
            }
            indptr.push(indices.len());
        }
    }
    CsrMatrix { nrows, ncols, indptr, indices, data }
}

/// How the state enters the coupling terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling<'a> {
    /// Full nonlinear residual.
    Full,
    /// Picard residual variant: the magnetic field in the Lorentz force and in
    /// u×B is frozen at the given state.
    FrozenField(&'a [f64]),
}

/// Everything the assembler needs besides the state.
pub struct AssemblyInput<'a> {
    pub disc: &'a Discretization,
    pub spec: &'a ProblemSpec,
    pub cfg: &'a SolverConfig,
    pub time: f64,
    pub time_terms: Option<&'a TimeTerms>,
    /// Coefficients of I_RT(g) on this discretisation, if the induction
    /// source is assembled from its interpolant.
    pub induction_interp: Option<&'a [f64]>,
}

fn check_len(disc: &Discretization, x: &[f64]) -> Result<()> {
    if x.len() != disc.ndofs() {
        return invalid(format!("state has length {}, expected {}", x.len(), disc.ndofs()));
    }
    Ok(())
}

/// Nonlinear residual R(U) (zero on strongly constrained dofs).
pub fn assemble_residual(inp: &AssemblyInput, x: &[f64], coupling: Coupling) -> Result<Vec<f64>> {
    check_len(inp.disc, x)?;
    if let Coupling::FrozenField(frozen) = coupling {
        check_len(inp.disc, frozen)?;
    }
    let mut r = forms::residual(inp, x, coupling);
    if let Some(tt) = inp.time_terms {
        if let Some(ex) = &tt.explicit {
            for (ri, ei) in r.iter_mut().zip(ex) {
                *ri += ei;
            }
        }
    }
    let d = inp.disc;
    for &i in &d.u_bc {
        r[d.offsets[0] + i] = 0.0;
    }
    for &i in &d.e_bc {
        r[d.offsets[2] + i] = 0.0;
    }
    for &i in &d.b_bc {
        r[d.offsets[3] + i] = 0.0;
    }
    Ok(r)
}

/// Spatial part of the residual only restricted to the u and B rows
/// (used for the explicit half of Crank–Nicolson).
pub fn spatial_residual_ub(inp: &AssemblyInput, x: &[f64]) -> Result<Vec<f64>> {
    let stationary = AssemblyInput { time_terms: None, ..*inp };
    let mut r = assemble_residual(&stationary, x, Coupling::Full)?;
    let d = inp.disc;
    for i in d.range(1).chain(d.range(2)) {
        r[i] = 0.0;
    }
    Ok(r)
}

/// Newton (δ=1) or Picard (δ=0) linearisation at `x`.
pub fn assemble_jacobian(inp: &AssemblyInput, x: &[f64], newton: bool) -> Result<BlockSystem> {
    check_len(inp.disc, x)?;
    Ok(forms::jacobian(inp, x, newton))
}

/// The residual with the Jacobian, in one pass over the mesh.
pub fn assemble_system(inp: &AssemblyInput, x: &[f64], newton: bool) -> Result<(Vec<f64>, BlockSystem)> {
    let r = assemble_residual(inp, x, Coupling::Full)?;
    let j = assemble_jacobian(inp, x, newton)?;
    Ok((r, j))
}

/// Apply the monolithic operator without forming it.
pub fn apply_block_system(sys: &BlockSystem, x: &[f64], y: &mut [f64]) {
    let o = sys.offsets;
    let (xu, xp, xe, xb) = (&x[o[0]..o[1]], &x[o[1]..o[2]], &x[o[2]..o[3]], &x[o[3]..o[4]]);
    y.iter_mut().for_each(|v| *v = 0.0);
    {
        let yu = &mut y[o[0]..o[1]];
        sys.f.matvec_add(1.0, xu, yu);
        sys.d.matvec_add(1.0, xu, yu);
        sys.bt.matvec_add(1.0, xp, yu);
        sys.j.matvec_add(1.0, xe, yu);
        for blk in [&sys.jt, &sys.d1t, &sys.d2t].into_iter().flatten() {
            blk.matvec_add(1.0, xb, yu);
        }
    }
    sys.b.matvec_add(1.0, xu, &mut y[o[1]..o[2]]);
    {
        let ye = &mut y[o[2]..o[3]];
        sys.g.matvec_add(1.0, xu, ye);
        sys.me.matvec_add(1.0, xe, ye);
        if let Some(gt) = &sys.gt {
            gt.matvec_add(1.0, xb, ye);
        }
        sys.a.matvec_add(-1.0 / sys.re_m, xb, ye);
    }
    {
        let yb = &mut y[o[3]..o[4]];
        sys.at.matvec_add(1.0, xe, yb);
        sys.c.matvec_add(1.0, xb, yb);
    }
}

#[cfg(test)]
mod tests;
