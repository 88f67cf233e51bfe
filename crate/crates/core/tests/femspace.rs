//! Function spaces, interpolation and the discrete de Rham sequence.

use std::sync::Arc;

use mhdal::assembly::mass_matrix;
use mhdal::driver::problems::island_b_eq;
use mhdal::femspace::derham::{derham_ops, div_l2_norm};
use mhdal::femspace::{build_space, Family, FunctionSpace};
use mhdal::mesh::{build_rect_mesh, BoundaryTag, Mesh, Rect};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn mesh(n: usize, periodic: bool) -> Arc<Mesh> {
    Arc::new(build_rect_mesh(n, n, Rect::new(-1.0, 1.0, -1.0, 1.0), periodic).unwrap())
}

fn rank(m: &mhdal::linalg::CsrMatrix) -> usize {
    let d = m.to_dense();
    let a = DMatrix::from_row_slice(d.nrows, d.ncols, &d.data);
    a.rank(1e-10 * a.norm())
}

#[test]
fn sequence_is_exact_on_the_square() {
    let m = mesh(2, false);
    for k in [1, 2] {
        let cg = build_space(m.clone(), Family::CG, k).unwrap();
        let rt = build_space(m.clone(), Family::RT, k).unwrap();
        let dg = build_space(m.clone(), Family::DG, k - 1).unwrap();
        let ops = derham_ops(&cg, &rt, &dg).unwrap();
        assert!(ops.ddiv.matmul(&ops.dcurl).max_abs() <= 1e-13);
        // ker vcurl = constants; div is onto DG; dim ker div = rank vcurl
        let rc = rank(&ops.dcurl);
        assert_eq!(rc, cg.ndofs() - 1, "k={k}");
        let rd = rank(&ops.ddiv);
        assert_eq!(rd, dg.ndofs());
        assert_eq!(rt.ndofs() - rd, rc);
    }
}

#[test]
fn mismatched_meshes_rejected() {
    let cg = build_space(mesh(2, false), Family::CG, 1).unwrap();
    let rt = build_space(mesh(2, false), Family::RT, 1).unwrap();
    let dg = build_space(mesh(2, false), Family::DG, 0).unwrap();
    assert!(derham_ops(&cg, &rt, &dg).is_err());
    assert!(build_space(mesh(2, false), Family::BDM, 3).is_err());
}

#[test]
fn hdiv_mass_matrices_are_spd() {
    for periodic in [false, true] {
        let m = mesh(3, periodic);
        for fam in [Family::RT, Family::BDM] {
            let v = build_space(m.clone(), fam, 2).unwrap();
            let d = mass_matrix(&v).to_dense();
            let a = DMatrix::from_row_slice(d.nrows, d.ncols, &d.data);
            assert!((&a - a.transpose()).amax() <= 1e-13);
            let lmin = a.symmetric_eigen().eigenvalues.min();
            assert!(lmin > 0.0, "{fam:?} periodic={periodic}: {lmin}");
        }
    }
}

#[test]
fn boundary_dofs_are_not_interior() {
    let m = mesh(3, false);
    for fam in [Family::CG, Family::RT, Family::BDM] {
        let v = build_space(m.clone(), fam, 2).unwrap();
        let all = [BoundaryTag::Left, BoundaryTag::Right, BoundaryTag::Bottom, BoundaryTag::Top];
        let bnd = v.boundary_dofs_union(&all);
        // a dof is a boundary dof iff it belongs to some boundary facet or vertex
        let mut on_boundary = vec![false; v.ndofs()];
        for c in 0..m.num_cells() {
            for (i, &g) in v.cell_dofs(c).iter().enumerate() {
                let s = v.samples(c, i, 4);
                let p = s.points[0];
                let inside = p[0].abs() < 1.0 - 1e-12 && p[1].abs() < 1.0 - 1e-12;
                // facet moments have every sample on the facet
                if !inside && s.points.iter().all(|q| q[0].abs() > 1.0 - 1e-12 || q[1].abs() > 1.0 - 1e-12) {
                    on_boundary[g] = true;
                }
            }
        }
        let expected: Vec<usize> = (0..v.ndofs()).filter(|&i| on_boundary[i]).collect();
        assert_eq!(bnd, expected, "{fam:?}");
    }
}

fn max_pointwise_error(v: &FunctionSpace, x: &[f64], f: &dyn Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let m = v.mesh();
    let mut err = 0.0f64;
    for c in 0..m.num_cells() {
        let p = m.cell_coords(c);
        for (a, b) in [(0.2, 0.3), (0.6, 0.1), (0.25, 0.5)] {
            let q = [p[0][0] + a * (p[1][0] - p[0][0]) + b * (p[2][0] - p[0][0]), p[0][1] + a * (p[1][1] - p[0][1]) + b * (p[2][1] - p[0][1])];
            let val = v.eval(x, c, q).0;
            let e = f(q);
            err = err.max((val[0] - e[0]).abs()).max((val[1] - e[1]).abs());
        }
    }
    err
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bdm_reproduces_polynomials(c in prop::collection::vec(-2.0f64..2.0, 12), k in 1usize..3) {
        let v = build_space(mesh(3, false), Family::BDM, k).unwrap();
        let f = |p: [f64; 2]| {
            let (x, y) = (p[0], p[1]);
            let q = if k == 2 { 1.0 } else { 0.0 };
            [
                c[0] + c[1] * x + c[2] * y + q * (c[3] * x * x + c[4] * x * y + c[5] * y * y),
                c[6] + c[7] * x + c[8] * y + q * (c[9] * x * x + c[10] * x * y + c[11] * y * y),
            ]
        };
        let x = v.interpolate_vector(f, v.default_interp_degree());
        prop_assert!(max_pointwise_error(&v, &x, &f) <= 1e-11);
    }

    #[test]
    fn interpolation_commutes_with_div(a in -2.0f64..2.0, b in -2.0f64..2.0, w in 0.5f64..2.0) {
        // vcurl of ψ = a sin(πw x) cos(y) + b x y², divergence free
        let v = build_space(mesh(4, false), Family::RT, 2).unwrap();
        let dg = build_space(v.mesh().clone(), Family::DG, 1).unwrap();
        let pi = std::f64::consts::PI;
        let f = |p: [f64; 2]| {
            let (x, y) = (p[0], p[1]);
            let psi_y = -a * (pi * w * x).sin() * y.sin() + 2.0 * b * x * y;
            let psi_x = a * pi * w * (pi * w * x).cos() * y.cos() + b * y * y;
            [psi_y, -psi_x]
        };
        let x = v.interpolate_vector(f, 20);
        let div = mhdal::femspace::derham::div_matrix(&v, &dg).unwrap().mul_vec(&x);
        let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(div.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= 1e-10 * xmax);
    }
}

#[test]
fn linear_cg_curl_is_constant_rt_field() {
    let m = mesh(3, false);
    let cg = build_space(m.clone(), Family::CG, 2).unwrap();
    let rt = build_space(m.clone(), Family::RT, 2).unwrap();
    let dg = build_space(m, Family::DG, 1).unwrap();
    let ops = derham_ops(&cg, &rt, &dg).unwrap();
    let (a, b, c) = (0.7, -1.3, 2.1);
    let e = cg.interpolate_scalar(|p| a + b * p[0] + c * p[1], 8);
    let got = ops.dcurl.mul_vec(&e);
    let want = rt.interpolate_vector(|_| [c, -b], 8);
    assert!(got.iter().zip(&want).all(|(p, q)| (p - q).abs() <= 1e-12));
}

#[test]
fn island_field_needs_high_quadrature() {
    let rt = build_space(mesh(64, true), Family::RT, 2).unwrap();
    let low = div_l2_norm(&rt, &rt.interpolate_vector(|p| island_b_eq(0.2, p), 2));
    let high = div_l2_norm(&rt, &rt.interpolate_vector(|p| island_b_eq(0.2, p), 10));
    println!("island div: degree 2 {low:e}, degree 10 {high:e}");
    assert!(low >= 1e-4, "{low:e}");
    assert!(high <= 1e-10, "{high:e}");
    let c = rt.interpolate_vector(|_| [0.0, 1.0], 1);
    assert!(div_l2_norm(&rt, &c) <= 1e-12);
}
