//! Dense Schur-complement oracles for small meshes.

use crate::assembly::{BlockSystem, EliminationOrder};
use crate::error::Result;
use crate::linalg::DenseMatrix;

fn range(a: usize, b: usize) -> Vec<usize> {
    (a..b).collect()
}

/// Brute-force outer Schur complement of the monolithic matrix for the
/// chosen elimination.
pub fn outer_schur_dense(sys: &BlockSystem, order: EliminationOrder) -> Result<DenseMatrix> {
    let o = sys.offsets;
    let full = sys.monolithic().to_dense();
    let (elim, keep) = match order {
        EliminationOrder::EliminateUp => (range(0, o[2]), range(o[2], o[4])),
        EliminationOrder::EliminateEB => (range(o[2], o[4]), range(0, o[2])),
    };
    let mut a11 = full.select(&elim, &elim);
    if order == EliminationOrder::EliminateUp {
        super::regularize_pressure(&mut a11, o[1]..o[2]);
    }
    let a12 = full.select(&elim, &keep);
    let a21 = full.select(&keep, &elim);
    let a22 = full.select(&keep, &keep);
    let x = a11.solve_matrix(&a12)?;
    Ok(a22.add(&a21.matmul(&x), -1.0))
}

/// S^(u,p) from its block formula with
/// N⁻¹₁₁ = F̂⁻¹ − F̂⁻¹Bᵀ(B F̂⁻¹ Bᵀ)⁻¹ B F̂⁻¹, F̂ = F + D.
pub fn outer_schur_up_formula(sys: &BlockSystem) -> Result<DenseMatrix> {
    let fhat = sys.momentum(1.0).to_dense();
    let bt = sys.bt.to_dense();
    let b = sys.b.to_dense();
    let finv = fhat.inverse()?;
    let fbt = finv.matmul(&bt);
    // the constant pressure lies in the kernel of Bᵀ
    let mut s = b.matmul(&fbt);
    let np = s.nrows;
    super::regularize_pressure(&mut s, 0..np);
    let corr = fbt.matmul(&s.solve_matrix(&b.matmul(&finv))?);
    let n11 = finv.add(&corr, -1.0);
    let g = sys.g.to_dense();
    let gn = g.matmul(&n11);
    let s11 = sys.me.to_dense().add(&gn.matmul(&sys.j.to_dense()), -1.0);
    let s12 = sys.eb_block().to_dense().add(&gn.matmul(&sys.ub_block().to_dense()), -1.0);
    let (ne, nb) = (s11.nrows, sys.c.nrows);
    let at = sys.at.to_dense();
    let c = sys.c.to_dense();
    Ok(DenseMatrix::from_fn(ne + nb, ne + nb, |i, j| match (i < ne, j < ne) {
        (true, true) => s11[(i, j)],
        (true, false) => s12[(i, j - ne)],
        (false, true) => at[(i - ne, j)],
        (false, false) => c[(i - ne, j - ne)],
    }))
}

#[derive(Clone, Copy, Debug)]
pub struct SchurDefects {
    /// ‖S^(E,B) − S̃^(E,B)‖_F / ‖S̃^(E,B)‖_F.
    pub outer: f64,
    /// ‖Â(C + Aᵀ M_E⁻¹ Â)⁻¹ Aᵀ − M_E‖_F / ‖M_E‖_F with Â = A/Re_m, on the
    /// unconstrained E dofs.
    pub identity: f64,
    /// ‖K₁ − D‖_F / ‖D‖_F with K₁ = D − J M⁻¹₁₁ G.
    pub k1: f64,
}

pub fn schur_exactness_check(sys: &BlockSystem) -> Result<SchurDefects> {
    schur_exactness_check_alpha(sys, 1.0)
}

/// As [`schur_exactness_check`] with S̃ = [F + αD, Bᵀ; B, 0].
pub fn schur_exactness_check_alpha(sys: &BlockSystem, alpha: f64) -> Result<SchurDefects> {
    let ne = sys.me.nrows;
    let nb = sys.c.nrows;
    let minv = sys.em_block().to_dense().inverse()?;
    let e = range(0, ne);
    let b = range(ne, ne + nb);
    let m11 = minv.select(&e, &e);
    let m21 = minv.select(&b, &e);
    let g = sys.g.to_dense();
    let jm = sys.j.to_dense().matmul(&m11).matmul(&g);
    let um = sys.ub_block().to_dense().matmul(&m21).matmul(&g);
    // S − S̃_α = (1 − α)D − J M⁻¹₁₁ G − (J̃ + D̃₁ + D̃₂) M⁻¹₂₁ G
    let delta = jm.add(&um, 1.0).add(&sys.d.to_dense(), alpha - 1.0);
    let stilde = sys.hydro_block(alpha);
    let outer = delta.frobenius() / stilde.frobenius();
    let dn = sys.d.frobenius();
    let k1 = if dn > 0.0 { jm.frobenius() / dn } else { jm.frobenius() };

    let me = sys.me.to_dense();
    let a = sys.a.to_dense();
    let ahat = DenseMatrix::from_fn(a.nrows, a.ncols, |i, j| a[(i, j)] / sys.re_m);
    let at = sys.at.to_dense();
    let inner = sys.c.to_dense().add(&at.matmul(&me.solve_matrix(&ahat)?), 1.0);
    let x = ahat.matmul(&inner.solve_matrix(&at)?);
    let free: Vec<usize> = (0..ne).filter(|i| !sys.e_bc.contains(i)).collect();
    let mef = me.select(&free, &free);
    let identity = x.select(&free, &free).add(&mef, -1.0).frobenius() / mef.frobenius();
    Ok(SchurDefects { outer, identity, k1 })
}
