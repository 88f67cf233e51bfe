//! Reconnection rate of the island coalescence problem.
//!
//! The current j₀ = curl B is applied weakly: find j₀ in CG_k with zero
//! boundary values such that (j₀, k) = (B, vcurl k) for all such k. It is then
//! L²-projected to CG_1 and evaluated at the X-point.

use crate::assembly::{mass_matrix, Discretization};
use crate::error::{invalid, Result};
use crate::femspace::{build_space, cell_quadrature, Family, FunctionSpace, Tab};
use crate::linalg::{gmres, CsrMatrix, KrylovConfig, TripletBuilder};

pub struct Reconnection {
    mass: CsrMatrix,
    mask: Vec<bool>,
    cg1: FunctionSpace,
    mass1: CsrMatrix,
    /// (φ¹_i, φ^k_j) with CG_1 rows and CG_k columns.
    mixed: CsrMatrix,
    point: (usize, [f64; 2]),
}

fn jacobi_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let diag = a.diagonal();
    let mut x = vec![0.0; b.len()];
    let rep = gmres(
        &mut |v, y| a.matvec(v, y),
        &mut |v, y| y.iter_mut().zip(v).zip(&diag).for_each(|((yi, vi), di)| *yi = vi / di),
        b,
        &mut x,
        &KrylovConfig::new(1e-14, 1e-300, 500),
    );
    if !rep.converged && rep.rel_residual > 1e-10 {
        return invalid(format!("mass solve stalled at relative residual {:e}", rep.rel_residual));
    }
    Ok(x)
}

impl Reconnection {
    pub fn new(disc: &Discretization, point: [f64; 2]) -> Result<Self> {
        let ve = &disc.ve;
        let mut mass = mass_matrix(ve);
        let mask = disc.e_mask.clone();
        mass.eliminate_symmetric(&mask, 1.0);
        let cg1 = build_space(disc.mesh.clone(), Family::CG, 1)?;
        let mass1 = mass_matrix(&cg1);
        let mesh = &disc.mesh;
        let qdeg = ve.element().degree + 2;
        let mut b = TripletBuilder::new(cg1.ndofs(), ve.ndofs());
        let (mut t1, mut tk) = (Tab::default(), Tab::default());
        for c in 0..mesh.num_cells() {
            let (pts, wts) = cell_quadrature(mesh, c, qdeg);
            cg1.tabulate_into(c, &pts, &mut t1);
            ve.tabulate_into(c, &pts, &mut tk);
            for (i, &gi) in cg1.cell_dofs(c).iter().enumerate() {
                for (j, &gj) in ve.cell_dofs(c).iter().enumerate() {
                    let v: f64 = wts.iter().enumerate().map(|(q, w)| w * t1.v(q, i, 0) * tk.v(q, j, 0)).sum();
                    b.push(gi, gj, v);
                }
            }
        }
        let located = mesh.locate(point)?;
        Ok(Reconnection { mass, mask, cg1, mass1, mixed: b.build(), point: located })
    }

    /// Weak curl j₀ ∈ CG_k of the B part of `x`.
    pub fn weak_curl(&self, disc: &Discretization, x: &[f64]) -> Result<Vec<f64>> {
        let (ve, vb) = (&disc.ve, &disc.vb);
        let bx = disc.b(x);
        let mesh = &disc.mesh;
        let qdeg = 2 * disc.degree + 1;
        let mut rhs = vec![0.0; ve.ndofs()];
        let (mut te, mut tb) = (Tab::default(), Tab::default());
        for c in 0..mesh.num_cells() {
            let (pts, wts) = cell_quadrature(mesh, c, qdeg);
            ve.tabulate_into(c, &pts, &mut te);
            vb.tabulate_into(c, &pts, &mut tb);
            let bd = vb.cell_dofs(c);
            for (q, w) in wts.iter().enumerate() {
                let mut bq = [0.0; 2];
                for (m, &g) in bd.iter().enumerate() {
                    let v = tb.vec(q, m);
                    bq[0] += bx[g] * v[0];
                    bq[1] += bx[g] * v[1];
                }
                for (i, &g) in ve.cell_dofs(c).iter().enumerate() {
                    let gr = te.sgrad(q, i);
                    rhs[g] += w * (bq[0] * gr[1] - bq[1] * gr[0]);
                }
            }
        }
        for (r, &m) in rhs.iter_mut().zip(&self.mask) {
            if m {
                *r = 0.0;
            }
        }
        jacobi_solve(&self.mass, &rhs)
    }

    /// CG_1 projection of j₀ evaluated at the evaluation point.
    pub fn point_current(&self, disc: &Discretization, x: &[f64]) -> Result<f64> {
        let j0 = self.weak_curl(disc, x)?;
        let rhs = self.mixed.mul_vec(&j0);
        let j1 = jacobi_solve(&self.mass1, &rhs)?;
        let (c, p) = self.point;
        Ok(self.cg1.eval(&j1, c, p).0[0])
    }

    /// (j(x) − j(x₀)) / √Re_m.
    pub fn rate(&self, disc: &Discretization, x: &[f64], initial_current: f64, re_m: f64) -> Result<f64> {
        Ok((self.point_current(disc, x)? - initial_current) / re_m.sqrt())
    }
}

/// One-shot reconnection rate at (0,0).
pub fn reconnection_rate(disc: &Discretization, x: &[f64], initial: &[f64], re_m: f64) -> Result<f64> {
    let r = Reconnection::new(disc, [0.0, 0.0])?;
    let j0 = r.point_current(disc, initial)?;
    r.rate(disc, x, j0, re_m)
}
