//! Geometric multigrid with vertex-star patch smoothing.
//!
//! Levels are ordered coarse to fine. Each level operator comes from
//! re-assembling the linearisation on that mesh with the state injected from
//! the finest level. Smoothing is a fixed number of GMRES iterations
//! right-preconditioned by the additive star correction, so the cycle is a
//! nonlinear operator and belongs inside FGMRES.

mod patch;
mod transfer;

pub use patch::{star_patches, PatchDecomposition, PatchSmoother, PatchSpace};
pub use transfer::{block_prolongation, inject, prolongation};

use crate::assembly::{assemble_jacobian, AssemblyInput, BlockSystem, Discretization, ProblemSpec, SolverConfig, TimeTerms};
use crate::error::{invalid, Result};
use crate::linalg::{gmres, CsrMatrix, KrylovConfig, LuFactor};
use crate::mesh::MeshHierarchy;

/// Discretisations, transfers and patch layouts of a mesh hierarchy.
pub struct LevelSet {
    pub discs: Vec<Discretization>,
    /// Velocity prolongation from level l to l+1.
    pub p_u: Vec<CsrMatrix>,
    /// (E, B) prolongation from level l to l+1.
    pub p_em: Vec<CsrMatrix>,
    /// Per-level prolongations of every field (u, p, E, B).
    pub p_fields: Vec<[CsrMatrix; 4]>,
    pub patches_u: Vec<PatchDecomposition>,
    pub patches_em: Vec<PatchDecomposition>,
}

impl LevelSet {
    pub fn new(h: &MeshHierarchy, degree: usize) -> Result<Self> {
        let mut discs = Vec::with_capacity(h.num_levels());
        for m in &h.levels {
            discs.push(Discretization::new(m.clone(), degree)?);
        }
        let mut p_u = Vec::new();
        let mut p_em = Vec::new();
        let mut p_fields = Vec::new();
        for l in 0..discs.len().saturating_sub(1) {
            let (c, f) = (&discs[l], &discs[l + 1]);
            let pu = prolongation(&c.vu, &f.vu)?;
            let pp = prolongation(&c.vp, &f.vp)?;
            let pe = prolongation(&c.ve, &f.ve)?;
            let pb = prolongation(&c.vb, &f.vb)?;
            let mut pu_masked = pu.clone();
            pu_masked.zero_rows_cols(Some(&f.u_mask), Some(&c.u_mask));
            p_u.push(pu_masked);
            // strongly constrained dofs are decoupled from the coarse correction
            let mut pem = block_prolongation(&[pe.clone(), pb.clone()]);
            let fmask: Vec<bool> = f.e_mask.iter().chain(&f.b_mask).copied().collect();
            let cmask: Vec<bool> = c.e_mask.iter().chain(&c.b_mask).copied().collect();
            pem.zero_rows_cols(Some(&fmask), Some(&cmask));
            p_em.push(pem);
            p_fields.push([pu, pp, pe, pb]);
        }
        let patches_u = discs
            .iter()
            .map(|d| star_patches(&d.mesh, &[PatchSpace { space: &d.vu, offset: 0, excluded: Some(&d.u_mask) }]))
            .collect();
        let patches_em = discs
            .iter()
            .map(|d| {
                star_patches(
                    &d.mesh,
                    &[
                        PatchSpace { space: &d.ve, offset: 0, excluded: Some(&d.e_mask) },
                        PatchSpace { space: &d.vb, offset: d.ve.ndofs(), excluded: Some(&d.b_mask) },
                    ],
                )
            })
            .collect();
        Ok(LevelSet { discs, p_u, p_em, p_fields, patches_u, patches_em })
    }

    pub fn num_levels(&self) -> usize {
        self.discs.len()
    }

    pub fn finest(&self) -> &Discretization {
        self.discs.last().unwrap()
    }

    /// The finest-level state injected to every level (coarse to fine).
    pub fn inject_state(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let nl = self.discs.len();
        let mut out = vec![Vec::new(); nl];
        out[nl - 1] = x.to_vec();
        for l in (0..nl - 1).rev() {
            let (c, f) = (&self.discs[l], &self.discs[l + 1]);
            let xf = &out[l + 1];
            let mut xc = vec![0.0; c.ndofs()];
            for (k, (cs, fs)) in [(&c.vu, &f.vu), (&c.vp, &f.vp), (&c.ve, &f.ve), (&c.vb, &f.vb)].into_iter().enumerate() {
                let v = inject(cs, fs, &xf[f.range(k)])?;
                xc[c.range(k)].copy_from_slice(&v);
            }
            out[l] = xc;
        }
        Ok(out)
    }

    /// Configuration used to re-discretise level `l`: the facet penalty and
    /// the gradient-jump weight keep the finest mesh's scaling, so that coarse
    /// operators agree with the fine forms on coarse functions (a coarse facet
    /// of level l has length 2^(L−1−l) h_F).
    pub fn level_config(&self, cfg: &SolverConfig, l: usize) -> SolverConfig {
        let k = (self.discs.len() - 1 - l) as i32;
        SolverConfig { sigma: Some(cfg.sigma() * 2f64.powi(k)), mu: cfg.mu * 0.25f64.powi(k), ..cfg.clone() }
    }

    /// Linearisations of all levels at the injected state. A finest-level
    /// system that is already assembled can be passed in to avoid rebuilding it.
    pub fn level_systems(
        &self,
        spec: &ProblemSpec,
        cfg: &SolverConfig,
        x: &[f64],
        time_coef: Option<f64>,
        newton: bool,
        fine: Option<&BlockSystem>,
    ) -> Result<Vec<BlockSystem>> {
        let states = self.inject_state(x)?;
        // only the coefficient of the time term enters the Jacobian
        let tt = time_coef.map(|coef| TimeTerms { coef, reference: Vec::new(), explicit: None });
        let nl = self.discs.len();
        let mut out = Vec::with_capacity(nl);
        for (l, (d, s)) in self.discs.iter().zip(&states).enumerate() {
            if l == nl - 1 {
                if let Some(f) = fine {
                    out.push(f.clone());
                    continue;
                }
            }
            let lcfg = self.level_config(cfg, l);
            let inp = AssemblyInput { disc: d, spec, cfg: &lcfg, time: 0.0, time_terms: tt.as_ref(), induction_interp: None };
            out.push(assemble_jacobian(&inp, s, newton)?);
        }
        Ok(out)
    }
}

/// V(ν,ν) cycle with GMRES + patch smoothing and a dense coarse solve.
pub struct Multigrid {
    ops: Vec<CsrMatrix>,
    smoothers: Vec<Option<PatchSmoother>>,
    prolong: Vec<CsrMatrix>,
    coarse: LuFactor,
    smoother_its: usize,
}

impl Multigrid {
    /// `ops`, `patches` coarse to fine; `prolong[l]` maps level l to l+1.
    pub fn new(ops: Vec<CsrMatrix>, patches: &[PatchDecomposition], prolong: Vec<CsrMatrix>, smoother_its: usize) -> Result<Self> {
        if ops.is_empty() {
            return invalid("multigrid needs at least one level");
        }
        if prolong.len() + 1 != ops.len() || patches.len() != ops.len() {
            return invalid("multigrid: inconsistent number of levels");
        }
        let coarse = LuFactor::new(ops[0].to_dense())?;
        let mut smoothers = vec![None];
        for l in 1..ops.len() {
            smoothers.push(Some(PatchSmoother::new(&ops[l], patches[l].clone())?));
        }
        Ok(Multigrid { ops, smoothers, prolong, coarse, smoother_its })
    }

    pub fn num_levels(&self) -> usize {
        self.ops.len()
    }

    pub fn operator(&self, level: usize) -> &CsrMatrix {
        &self.ops[level]
    }

    pub fn fine_operator(&self) -> &CsrMatrix {
        self.ops.last().unwrap()
    }

    fn smooth(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let a = &self.ops[l];
        let s = self.smoothers[l].as_ref().unwrap();
        gmres(&mut |v, y| a.matvec(v, y), &mut |v, y| s.apply(v, y), b, x, &KrylovConfig::fixed(self.smoother_its));
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        if l == 0 {
            x.copy_from_slice(b);
            self.coarse.solve_in_place(x);
            return;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        self.smooth(l, b, x);
        let a = &self.ops[l];
        let mut r = b.to_vec();
        a.matvec_add(-1.0, x, &mut r);
        let p = &self.prolong[l - 1];
        let mut rc = vec![0.0; p.ncols];
        p.matvec_transpose_add(1.0, &r, &mut rc);
        let mut ec = vec![0.0; p.ncols];
        self.cycle(l - 1, &rc, &mut ec);
        p.matvec_add(1.0, &ec, x);
        self.smooth(l, b, x);
    }

    /// One V-cycle applied to `b` from a zero initial guess.
    pub fn v_cycle(&self, b: &[f64], x: &mut [f64]) {
        self.cycle(self.ops.len() - 1, b, x);
    }
}

/// Multigrid for the momentum block F + αD on every level.
pub fn build_momentum_hierarchy(levels: &LevelSet, systems: &[BlockSystem], alpha: f64, smoother_its: usize) -> Result<Multigrid> {
    let ops = systems.iter().map(|s| s.momentum(alpha)).collect();
    Multigrid::new(ops, &levels.patches_u, levels.p_u.clone(), smoother_its)
}

/// Monolithic multigrid for the (E, B) block.
pub fn build_em_hierarchy(levels: &LevelSet, systems: &[BlockSystem], smoother_its: usize) -> Result<Multigrid> {
    let ops = systems.iter().map(|s| s.em_block()).collect();
    Multigrid::new(ops, &levels.patches_em, levels.p_em.clone(), smoother_its)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femspace::derham::div_matrix;
    use crate::mesh::{build_rect_mesh, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn levels(periodic: bool) -> LevelSet {
        let m = build_rect_mesh(3, 2, Rect::new(0.0, 2.0, -1.0, 1.0), periodic).unwrap();
        LevelSet::new(&MeshHierarchy::new(m, 1).unwrap(), 2).unwrap()
    }

    #[test]
    fn prolongation_is_exact_embedding() {
        for periodic in [false, true] {
            let ls = levels(periodic);
            let (c, f) = (&ls.discs[0], &ls.discs[1]);
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            for (k, (cs, fs)) in [(&c.vu, &f.vu), (&c.vp, &f.vp), (&c.ve, &f.ve), (&c.vb, &f.vb)].into_iter().enumerate() {
                let xc: Vec<f64> = (0..cs.ndofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let xf = ls.p_fields[0][k].mul_vec(&xc);
                for _ in 0..20 {
                    let cf = rng.gen_range(0..f.mesh.num_cells());
                    let l: [f64; 3] = [rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0)];
                    let s = l[0] + l[1] + l[2];
                    let q = f.mesh.cell_coords(cf);
                    let p = [0, 1].map(|d| (l[0] * q[0][d] + l[1] * q[1][d] + l[2] * q[2][d]) / s);
                    let pc = f.mesh.parent().unwrap()[cf];
                    let (vf, _) = fs.eval(&xf, cf, p);
                    let (vc, _) = cs.eval(&xc, pc, p);
                    for (a, b) in vf.iter().zip(&vc) {
                        assert!((a - b).abs() < 1e-12, "field {k}: {a} vs {b}");
                    }
                }
                let back = inject(cs, fs, &xf).unwrap();
                let e = back.iter().zip(&xc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(e < 1e-11, "injection of field {k} off by {e}");
            }
        }
    }

    #[test]
    fn prolongation_preserves_solenoidality() {
        let ls = levels(false);
        let (c, f) = (&ls.discs[0], &ls.discs[1]);
        let e: Vec<f64> = (0..c.ve.ndofs()).map(|i| (i as f64 * 0.37).sin()).collect();
        let xb = c.curl.mul_vec(&e);
        let xf = ls.p_fields[0][3].mul_vec(&xb);
        let dv = div_matrix(&f.vb, &f.vp).unwrap().mul_vec(&xf);
        assert!(dv.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= 1e-10);
    }

    #[test]
    fn patches_cover_and_match_stars() {
        let ls = levels(true);
        for (d, pu, pem) in ls.discs.iter().map(|d| d).zip(&ls.patches_u).zip(&ls.patches_em).map(|((a, b), c)| (a, b, c)) {
            let mut cov = vec![false; d.vu.ndofs()];
            pu.dofs.iter().flatten().for_each(|&i| cov[i] = true);
            assert!(cov.iter().zip(&d.u_mask).all(|(&c, &m)| c != m));
            let ne = d.ve.ndofs();
            let mut cov = vec![false; ne + d.vb.ndofs()];
            pem.dofs.iter().flatten().for_each(|&i| cov[i] = true);
            for i in 0..cov.len() {
                let bc = if i < ne { d.e_mask[i] } else { d.b_mask[i - ne] };
                assert_eq!(cov[i], !bc);
            }
            // support ⊂ star
            for (v, dofs) in pu.vertices.iter().zip(&pu.dofs) {
                let star = d.mesh.vertex_star(*v).unwrap();
                for c in 0..d.mesh.num_cells() {
                    if d.vu.cell_dofs(c).iter().any(|x| dofs.contains(x)) {
                        assert!(star.contains(&c));
                    }
                }
            }
        }
    }

    #[test]
    fn single_patch_is_exact_and_smoother_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.push((i, j, v));
                if i != j {
                    t.push((j, i, v));
                }
            }
            t.push((i, i, 10.0));
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let whole = PatchDecomposition { vertices: vec![0], dofs: vec![(0..n).collect()] };
        let s = PatchSmoother::new(&a, whole).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut z = vec![0.0; n];
        s.apply(&b, &mut z);
        let az = a.mul_vec(&z);
        assert!(az.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        let parts = PatchDecomposition { vertices: vec![0, 1, 2], dofs: vec![(0..6).collect(), (4..10).collect(), vec![0, 9, 10, 11]] };
        let s = PatchSmoother::new(&a, parts).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (mut sx, mut sy) = (vec![0.0; n], vec![0.0; n]);
        s.apply(&x, &mut sx);
        s.apply(&y, &mut sy);
        let d1: f64 = y.iter().zip(&sx).map(|(a, b)| a * b).sum();
        let d2: f64 = x.iter().zip(&sy).map(|(a, b)| a * b).sum();
        assert!((d1 - d2).abs() < 1e-12);
    }
}
