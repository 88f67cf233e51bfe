//! Outer preconditioner, Schur approximations and inner solvers.

use mhdal::assembly::{
    assemble_jacobian, scalar_fn, vec_fn, AssemblyInput, BlockSystem, Discretization, EliminationOrder, ProblemSpec, SolverConfig,
    TimeTerms,
};
use mhdal::linalg::{fgmres, KrylovConfig, LuFactor};
use mhdal::mesh::{build_rect_mesh, MeshHierarchy, Rect};
use mhdal::multigrid::LevelSet;
use mhdal::precond::{
    dense_hydro, remove_pressure_mean,
    alpha_rule, outer_schur_dense, outer_schur_up_formula, schur_exactness_check, schur_exactness_check_alpha, BlockSolve, InnerKind, OuterPreconditioner,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(n: usize, refinements: usize) -> ProblemSpec {
    let m = build_rect_mesh(n, n, Rect::unit(), false).unwrap();
    let mut s = ProblemSpec::new("p", MeshHierarchy::new(m, refinements).unwrap());
    s.b_bc = Some(vec_fn(|_, _| [1.0, 0.3]));
    s.e_bc = Some(scalar_fn(|_, _| 0.0));
    s
}

fn state(d: &Discretization, sp: &ProblemSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..d.ndofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    d.apply_strong_bcs(sp, &mut x, 0.0);
    x
}

fn system(d: &Discretization, sp: &ProblemSpec, cfg: &SolverConfig, x: &[f64], newton: bool, tt: Option<&TimeTerms>) -> BlockSystem {
    let inp = AssemblyInput { disc: d, spec: sp, cfg, time: 0.0, time_terms: tt, induction_interp: None };
    assemble_jacobian(&inp, x, newton).unwrap()
}

fn rhs(sys: &BlockSystem, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b: Vec<f64> = (0..sys.ndofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let o = sys.offsets;
    sys.e_bc.iter().for_each(|&i| b[o[2] + i] = 0.0);
    sys.b_bc.iter().for_each(|&i| b[o[3] + i] = 0.0);
    sys.u_bc.iter().for_each(|&i| b[i] = 0.0);
    // consistent with the constant pressure null space
    remove_pressure_mean(&mut b[o[1]..o[2]]);
    b
}

fn outer_iterations(sys: &BlockSystem, p: &OuterPreconditioner, b: &[f64]) -> usize {
    let a = sys.monolithic();
    let mut x = vec![0.0; b.len()];
    let rep = fgmres(&mut |v, y| a.matvec(v, y), &mut |v, y| p.apply(v, y), b, &mut x, &KrylovConfig::new(1e-10, 0.0, 60));
    assert!(rep.converged, "{rep:?}");
    rep.iterations
}

#[test]
fn picard_schur_is_exact_in_2d() {
    let sp = spec(2, 0);
    let d = Discretization::new(sp.hierarchy.finest().clone(), 1).unwrap();
    let x = state(&d, &sp, 1);
    let cfg = SolverConfig { re: 1.0, re_m: 1.0, s: 1.0, degree: 1, ..Default::default() };
    let sys = system(&d, &sp, &cfg, &x, false, None);
    let def = schur_exactness_check(&sys).unwrap();
    println!("picard defects {def:?}");
    assert!(def.outer <= 1e-10 && def.identity <= 1e-10 && def.k1 <= 1e-10, "{def:?}");
    let mut prev = 0.0;
    for rem in [1.0, 100.0] {
        let cfg = SolverConfig { re_m: rem, ..cfg.clone() };
        let def = schur_exactness_check(&system(&d, &sp, &cfg, &x, true, None)).unwrap();
        println!("newton Rem={rem}: {def:?}");
        assert!(def.outer > 1e-8 && def.outer > prev);
        prev = def.outer;
    }
}

#[test]
fn transient_alpha_limit_recovers_stationary_defect() {
    let sp = spec(2, 0);
    let d = Discretization::new(sp.hierarchy.finest().clone(), 1).unwrap();
    let x = state(&d, &sp, 2);
    let cfg = SolverConfig { degree: 1, transient: true, ..Default::default() };
    let h = d.mesh.max_cell_diameter();
    let stat = schur_exactness_check(&system(&d, &sp, &cfg, &x, false, None)).unwrap();
    let mut prev = f64::INFINITY;
    for dt in [1e-2, 1.0, 1e12] {
        let tt = TimeTerms::backward_euler(dt, &x);
        let alpha = alpha_rule(dt, cfg.re_m, h, 0.0, false);
        let tr = schur_exactness_check_alpha(&system(&d, &sp, &cfg, &x, false, Some(&tt)), alpha).unwrap();
        println!("dt={dt} alpha={alpha} defect={}", tr.outer);
        assert!(tr.outer < prev);
        prev = tr.outer;
    }
    assert!((prev - stat.outer).abs() <= 1e-8);
    assert!((alpha_rule(1e12, 1.0, h, 1.0, false) - 1.0).abs() < 1e-10);
    // with δ = 1 the large-Δt limit is 1/(1 + Re_m h ‖uⁿ‖) < 1
    assert!((alpha_rule(1e12, 1.0, h, 1.0, true) - 1.0 / (1.0 + h)).abs() < 1e-10);
}

#[test]
fn outer_schur_formula_matches_brute_force() {
    let sp = spec(2, 0);
    let d = Discretization::new(sp.hierarchy.finest().clone(), 1).unwrap();
    let x = state(&d, &sp, 3);
    for newton in [false, true] {
        let cfg = SolverConfig { degree: 1, s: 3.0, re_m: 5.0, ..Default::default() };
        let sys = system(&d, &sp, &cfg, &x, newton, None);
        let brute = outer_schur_dense(&sys, EliminationOrder::EliminateUp).unwrap();
        let formula = outer_schur_up_formula(&sys).unwrap();
        let err = brute.add(&formula, -1.0).max_abs() / brute.max_abs();
        assert!(err <= 1e-10, "newton={newton}: {err}");
    }
}

#[test]
fn dense_inner_solves() {
    let sp = spec(2, 1);
    let ls = LevelSet::new(&sp.hierarchy, 1).unwrap();
    let d = ls.finest();
    let x = state(d, &sp, 4);
    let cfg = SolverConfig { degree: 1, s: 2.0, re_m: 3.0, ..Default::default() };
    // exact outer Schur complement: ≤ 3 iterations in both orderings
    for newton in [false, true] {
        let sys = system(d, &sp, &cfg, &x, newton, None);
        for order in [EliminationOrder::EliminateUp, EliminationOrder::EliminateEB] {
            let p = OuterPreconditioner::new(&sys, &ls, &[], &cfg, order, 1.0, InnerKind::Dense).unwrap();
            let m = outer_schur_dense(&sys, order).unwrap();
            let exact = BlockSolve::Dense(match order {
                EliminationOrder::EliminateUp => LuFactor::new(m).unwrap(),
                EliminationOrder::EliminateEB => dense_hydro(m, sys.offsets[1]).unwrap(),
            });
            let p = OuterPreconditioner::from_parts(order, p.top, exact, p.coupling, 1.0, sys.offsets);
            let its = outer_iterations(&sys, &p, &rhs(&sys, 9));
            assert!(its <= 3, "{order:?} newton={newton}: {its}");
        }
    }
    // stationary Picard with S̃^(E,B): the approximation itself is exact
    let sys = system(d, &sp, &cfg, &x, false, None);
    let p = OuterPreconditioner::new(&sys, &ls, &[], &cfg, EliminationOrder::EliminateEB, 1.0, InnerKind::Dense).unwrap();
    let its = outer_iterations(&sys, &p, &rhs(&sys, 10));
    assert!(its <= 2, "EB Picard: {its}");
}

#[test]
fn decoupled_case_converges_quickly() {
    let sp = spec(8, 0);
    let ls = LevelSet::new(&sp.hierarchy, 1).unwrap();
    let d = ls.finest();
    let x = state(d, &sp, 5);
    let cfg = SolverConfig { degree: 1, s: 0.0, ..Default::default() };
    let sys = system(d, &sp, &cfg, &x, true, None);
    let p = OuterPreconditioner::new(&sys, &ls, &[], &cfg, EliminationOrder::EliminateUp, 1.0, InnerKind::Dense).unwrap();
    let its = outer_iterations(&sys, &p, &rhs(&sys, 11));
    assert!(its <= 4, "{its}");
}

#[test]
fn apply_touches_each_inner_solver_once() {
    let sp = spec(4, 1);
    let ls = LevelSet::new(&sp.hierarchy, 2).unwrap();
    let d = ls.finest();
    let x = state(d, &sp, 6);
    let cfg = SolverConfig::default();
    let sys = system(d, &sp, &cfg, &x, true, None);
    let levels = ls.level_systems(&sp, &cfg, &x, None, true, Some(&sys)).unwrap();
    let p = OuterPreconditioner::new(&sys, &ls, &levels, &cfg, EliminationOrder::EliminateUp, 1.0, InnerKind::Multigrid).unwrap();
    let r = rhs(&sys, 12);
    let mut z = vec![0.0; r.len()];
    p.apply(&r, &mut z);
    p.apply(&r, &mut z);
    let c = p.counters();
    assert_eq!((c.applications, c.top_solves, c.schur_solves), (2, 2, 2));
    assert_eq!(c.inner_iterations, 2 * 2 * cfg.inner_its);
    let zero = vec![0.0; r.len()];
    p.apply(&zero, &mut z);
    assert!(z.iter().all(|v| *v == 0.0));
}

fn stokes_iterations(n: usize, refinements: usize, gamma: f64) -> usize {
    let m = build_rect_mesh(n, n, Rect::unit(), false).unwrap();
    let sp = ProblemSpec::new("stokes", MeshHierarchy::new(m, refinements).unwrap());
    let ls = LevelSet::new(&sp.hierarchy, 2).unwrap();
    let d = ls.finest();
    let x = vec![0.0; d.ndofs()];
    let cfg = SolverConfig { s: 0.0, gamma, re: 1.0, ..Default::default() };
    let sys = system(d, &sp, &cfg, &x, true, None);
    let levels = ls.level_systems(&sp, &cfg, &x, None, true, Some(&sys)).unwrap();
    let hs = mhdal::precond::hydro_solve(&sys, &ls, &levels, &cfg, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut b: Vec<f64> = (0..d.offsets[2]).map(|_| rng.gen_range(-1.0..1.0)).collect();
    d.u_bc.iter().for_each(|&i| b[i] = 0.0);
    remove_pressure_mean(&mut b[d.offsets[1]..]);
    let mut z = vec![0.0; b.len()];
    let rep = hs.solve_to_tolerance(&b, &mut z, &KrylovConfig::new(1e-8, 0.0, 100)).unwrap();
    assert!(rep.converged, "{rep:?}");
    rep.iterations
}

#[test]
fn hydro_solver_stokes_limit() {
    let coarse = stokes_iterations(8, 1, 1e4);
    let fine = stokes_iterations(8, 2, 1e4);
    let low_gamma = stokes_iterations(8, 1, 1e2);
    println!("stokes its: 16x16 {coarse}, 32x32 {fine}, gamma=1e2 {low_gamma}");
    assert!(coarse <= 20);
    assert!(fine as f64 <= 1.5 * coarse as f64);
    assert!((low_gamma as i64 - coarse as i64).abs() <= 2);
}

#[test]
fn alpha_rule_properties() {
    let a = |dt: f64, rem: f64, h: f64| alpha_rule(dt, rem, h, 0.7, true);
    assert!(a(0.1, 1.0, 0.1) < a(1.0, 1.0, 0.1));
    assert!(a(0.1, 10.0, 0.1) < a(0.1, 1.0, 0.1));
    assert!(a(0.1, 1.0, 0.2) < a(0.1, 1.0, 0.1));
    assert!(a(1e-12, 1.0, 0.1) < 1e-9);
    for dt in [1e-3, 0.1, 10.0] {
        let v = a(dt, 100.0, 0.05);
        assert!(v > 0.0 && v <= 1.0);
    }
    assert!(alpha_rule(0.1, 1.0, 0.1, 5.0, false) > alpha_rule(0.1, 1.0, 0.1, 5.0, true));
}
