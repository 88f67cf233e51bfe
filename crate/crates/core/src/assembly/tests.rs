use super::*;
use crate::mesh::{build_rect_mesh, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(k: usize, periodic: bool) -> (Discretization, ProblemSpec) {
    let m = build_rect_mesh(3, 3, Rect::new(0.0, 1.0, 0.0, 1.0), periodic).unwrap();
    let h = MeshHierarchy::new(m, 0).unwrap();
    let disc = Discretization::new(h.finest().clone(), k).unwrap();
    let mut spec = ProblemSpec::new("t", h);
    spec.u_bc = Some(vec_fn(|p, _| [0.3 + p[1], -0.2 * p[0]]));
    spec.b_bc = Some(vec_fn(|p, _| [1.0 + 0.1 * p[1], 0.5]));
    spec.e_bc = Some(scalar_fn(|p, _| 0.2 * p[0] - 0.1));
    spec.force = Some(vec_fn(|p, t| [p[0] * p[1] + t, 1.0]));
    spec.ohm_source = Some(scalar_fn(|p, _| p[0]));
    spec.induction_source = Some(vec_fn(|p, _| [p[1], -p[0]]));
    (disc, spec)
}

fn random_state(disc: &Discretization, spec: &ProblemSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..disc.ndofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    disc.apply_strong_bcs(spec, &mut x, 0.0);
    x
}

fn cfg() -> SolverConfig {
    SolverConfig { re: 7.0, re_m: 3.0, s: 2.0, gamma: 5.0, ..Default::default() }
}

fn fd_check(newton: bool, k: usize, periodic: bool, transient: bool) {
    let (disc, spec) = setup(k, periodic);
    let cfg = cfg();
    let x = random_state(&disc, &spec, 1 + k as u64);
    let xn = random_state(&disc, &spec, 11);
    let xnm1 = random_state(&disc, &spec, 12);
    let tt = TimeTerms::bdf2(0.1, &xn, &xnm1);
    let inp = AssemblyInput {
        disc: &disc,
        spec: &spec,
        cfg: &cfg,
        time: 0.3,
        time_terms: if transient { Some(&tt) } else { None },
        induction_interp: None,
    };
    let sys = assemble_jacobian(&inp, &x, newton).unwrap();
    let mask = disc.constrained_mask();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let v: Vec<f64> = (0..disc.ndofs()).map(|i| if mask[i] { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
    let mut jv = vec![0.0; v.len()];
    apply_block_system(&sys, &v, &mut jv);
    let mono = sys.monolithic().mul_vec(&v);
    let h = 1e-6;
    let coupling = if newton { Coupling::Full } else { Coupling::FrozenField(&x) };
    let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
    let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
    let rp = assemble_residual(&inp, &xp, coupling).unwrap();
    let rm = assemble_residual(&inp, &xm, coupling).unwrap();
    let scale = jv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut err = 0.0f64;
    for i in 0..v.len() {
        let fd = (rp[i] - rm[i]) / (2.0 * h);
        err = err.max((fd - jv[i]).abs());
        assert!((mono[i] - jv[i]).abs() <= 1e-10 * scale);
    }
    assert!(err <= 1e-6 * scale, "newton={newton} k={k} err={err} scale={scale}");
}

#[test]
fn jacobian_matches_finite_differences() {
    for k in [1, 2] {
        for newton in [true, false] {
            fd_check(newton, k, false, true);
        }
    }
    fd_check(true, 2, true, false);
    fd_check(false, 2, true, false);
}

#[test]
fn zero_coupling_decouples() {
    let (disc, spec) = setup(2, false);
    let cfg = SolverConfig { s: 0.0, ..cfg() };
    let x = random_state(&disc, &spec, 3);
    let inp = AssemblyInput { disc: &disc, spec: &spec, cfg: &cfg, time: 0.0, time_terms: None, induction_interp: None };
    let sys = assemble_jacobian(&inp, &x, true).unwrap();
    assert_eq!(sys.d.max_abs(), 0.0);
    assert_eq!(sys.j.max_abs(), 0.0);
    assert_eq!(sys.ub_block().max_abs(), 0.0);
    assert!(sys.g.max_abs() > 0.0);
}

#[test]
fn picard_block_identity() {
    let (disc, spec) = setup(2, false);
    let cfg = cfg();
    let x = random_state(&disc, &spec, 5);
    let inp = AssemblyInput { disc: &disc, spec: &spec, cfg: &cfg, time: 0.0, time_terms: None, induction_interp: None };
    let n = assemble_jacobian(&inp, &x, true).unwrap();
    let p = assemble_jacobian(&inp, &x, false).unwrap();
    for (a, b) in [(&n.f, &p.f), (&n.d, &p.d), (&n.bt, &p.bt), (&n.j, &p.j), (&n.me, &p.me), (&n.g, &p.g), (&n.a, &p.a), (&n.c, &p.c)] {
        assert!(a.add(1.0, b, -1.0).max_abs() == 0.0);
    }
    assert!(p.jt.is_none() && p.gt.is_none() && p.d1t.is_none() && p.d2t.is_none());
    assert!(n.ub_block().max_abs() > 0.0);
}

#[test]
fn sip_symmetric_and_penalty_linear() {
    let (disc, mut spec) = setup(2, true);
    spec.u_bc = None;
    let x = vec![0.0; disc.ndofs()];
    let visc = |sigma: f64| {
        let cfg = SolverConfig { sigma: Some(sigma), gamma: 0.0, mu: 0.0, s: 0.0, ..cfg() };
        let inp = AssemblyInput { disc: &disc, spec: &spec, cfg: &cfg, time: 0.0, time_terms: None, induction_interp: None };
        assemble_jacobian(&inp, &x, true).unwrap().f
    };
    let a = visc(10.0);
    assert!(a.add(1.0, &a.transpose(), -1.0).max_abs() <= 1e-12 * a.max_abs());
    let (a0, a2) = (visc(0.0), visc(20.0));
    // a(σ) is affine in σ
    let lhs = a2.add(1.0, &a0, -1.0);
    let rhs = a.add(2.0, &a0, -2.0);
    assert!(lhs.add(1.0, &rhs, -1.0).max_abs() <= 1e-10 * lhs.max_abs());
    // large enough penalty is coercive on random vectors
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let v: Vec<f64> = (0..a.nrows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let av = a.mul_vec(&v);
        assert!(v.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>() > 0.0);
    }
}

#[test]
fn stabilization_properties() {
    let (disc, _) = setup(2, false);
    let s1 = stabilization_matrix(&disc.vu, 1.0);
    let s3 = stabilization_matrix(&disc.vu, 3.0);
    assert!(s3.add(1.0, &s1, -3.0).max_abs() <= 1e-12 * s3.max_abs());
    assert!(s1.add(1.0, &s1.transpose(), -1.0).max_abs() <= 1e-13 * s1.max_abs());
    // globally smooth quadratic fields are in the kernel
    let w = disc.vu.interpolate_vector(|p| [p[0] * p[1] + p[1] * p[1], 1.0 - p[0] * p[0]], 8);
    let sw = s1.mul_vec(&w);
    let e = sw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(e <= 1e-12 * s1.max_abs(), "kernel residual {e} vs {}", s1.max_abs());
    let d = s1.to_dense();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let v: Vec<f64> = (0..d.nrows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = vec![0.0; v.len()];
        d.matvec(&v, &mut y);
        assert!(v.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() >= -1e-12);
    }
}

#[test]
fn em_block_structure() {
    let (disc, spec) = setup(2, false);
    let cfg = SolverConfig { transient: true, ..cfg() };
    let x = random_state(&disc, &spec, 6);
    let tt = TimeTerms::backward_euler(0.1, &x);
    let inp = AssemblyInput { disc: &disc, spec: &spec, cfg: &cfg, time: 0.0, time_terms: Some(&tt), induction_interp: None };
    let sys = assemble_jacobian(&inp, &x, false).unwrap();
    assert!(sys.at.add(1.0, &sys.a.transpose(), -1.0).max_abs() == 0.0);
    let me = sys.me.to_dense();
    assert!(me.add(&me.transpose(), -1.0).max_abs() <= 1e-14);
    assert!(crate::linalg::LuFactor::new(me).is_ok());
    // stationary C = div-div annihilates discrete curls
    let inp0 = AssemblyInput { time_terms: None, ..inp };
    let c0 = assemble_jacobian(&inp0, &x, false).unwrap().c;
    let mut e: Vec<f64> = (0..disc.ve.ndofs()).map(|i| ((i * 7) % 5) as f64).collect();
    disc.e_bc.iter().for_each(|&i| e[i] = 0.0);
    let db = disc.curl.mul_vec(&e);
    let cdb = c0.mul_vec(&db);
    assert!(cdb.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= 1e-10);
}
