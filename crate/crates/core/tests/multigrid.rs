//! Multigrid on the augmented momentum block and the EM block.

use mhdal::assembly::{ProblemSpec, SolverConfig};
use mhdal::linalg::{fgmres, gmres, KrylovConfig};
use mhdal::mesh::{build_rect_mesh, MeshHierarchy, Rect};
use mhdal::multigrid::{build_em_hierarchy, build_momentum_hierarchy, LevelSet, PatchSmoother};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(n: usize, refinements: usize) -> (LevelSet, ProblemSpec) {
    let m = build_rect_mesh(n, n, Rect::unit(), false).unwrap();
    let h = MeshHierarchy::new(m, refinements).unwrap();
    let ls = LevelSet::new(&h, 2).unwrap();
    (ls, ProblemSpec::new("mg", h))
}

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn momentum_smoother_reduces_residual() {
    let (ls, spec) = setup(16, 0);
    let cfg = SolverConfig { re: 1.0, gamma: 1e4, s: 1.0, ..Default::default() };
    let x = vec![0.0; ls.finest().ndofs()];
    let sys = ls.level_systems(&spec, &cfg, &x, None, true, None).unwrap();
    let a = sys[0].momentum(1.0);
    let s = PatchSmoother::new(&a, ls.patches_u[0].clone()).unwrap();
    let b = random(a.nrows, 1);
    let mut z = vec![0.0; a.nrows];
    let rep = gmres(&mut |v, y| a.matvec(v, y), &mut |v, y| s.apply(v, y), &b, &mut z, &KrylovConfig::fixed(6));
    assert!(rep.residual <= 0.5 * norm(&b), "reduction {}", rep.residual / norm(&b));
}

#[test]
fn momentum_vcycle_fgmres() {
    let (ls, spec) = setup(8, 1);
    let cfg = SolverConfig { re: 1.0, gamma: 1e4, s: 1.0, ..Default::default() };
    let x = vec![0.0; ls.finest().ndofs()];
    let sys = ls.level_systems(&spec, &cfg, &x, None, true, None).unwrap();
    let mg = build_momentum_hierarchy(&ls, &sys, 1.0, 6).unwrap();
    let a = mg.fine_operator().clone();
    let mut b = random(a.nrows, 2);
    ls.finest().u_bc.iter().for_each(|&i| b[i] = 0.0);
    let mut z = vec![0.0; a.nrows];
    mg.v_cycle(&vec![0.0; a.nrows], &mut z);
    assert!(z.iter().all(|v| *v == 0.0));
    let rep = fgmres(&mut |v, y| a.matvec(v, y), &mut |v, y| mg.v_cycle(v, y), &b, &mut z, &KrylovConfig::new(1e-7, 0.0, 50));
    println!("momentum FGMRES its {}", rep.iterations);
    assert!(rep.converged && rep.iterations <= 25, "{rep:?}");
}

#[test]
fn em_vcycle_rem_robust() {
    let (ls, spec) = setup(4, 2);
    let mut counts = Vec::new();
    for rem in [1.0, 100.0, 1e4] {
        let cfg = SolverConfig { re_m: rem, ..Default::default() };
        let x = vec![0.0; ls.finest().ndofs()];
        let sys = ls.level_systems(&spec, &cfg, &x, None, false, None).unwrap();
        let mg = build_em_hierarchy(&ls, &sys, 6).unwrap();
        let a = mg.fine_operator().clone();
        let d = ls.finest();
        let mut b = random(a.nrows, 3);
        let ne = d.ve.ndofs();
        d.e_bc.iter().for_each(|&i| b[i] = 0.0);
        d.b_bc.iter().for_each(|&i| b[ne + i] = 0.0);
        let mut z = vec![0.0; a.nrows];
        let rep = fgmres(&mut |v, y| a.matvec(v, y), &mut |v, y| mg.v_cycle(v, y), &b, &mut z, &KrylovConfig::new(1e-8, 0.0, 100));
        assert!(rep.converged, "Rem={rem}: {rep:?}");
        counts.push(rep.iterations);
    }
    println!("EM FGMRES its {counts:?}");
    let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
    assert!(hi <= 2 * lo.max(1), "{counts:?}");
}
