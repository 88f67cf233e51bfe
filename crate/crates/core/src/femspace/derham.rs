//! Matrices of the discrete 2D de Rham sequence CG_k → RT_k → DG_{k−1}.

use std::sync::Arc;

use super::{FunctionSpace, Tab};
use crate::error::{invalid, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};

pub struct DeRhamOps {
    /// vcurl: CG_k coefficients → RT_k coefficients.
    pub dcurl: CsrMatrix,
    /// div: RT_k (or BDM_k) coefficients → DG coefficients.
    pub ddiv: CsrMatrix,
}

pub fn derham_ops(cg: &FunctionSpace, rt: &FunctionSpace, dg: &FunctionSpace) -> Result<DeRhamOps> {
    Ok(DeRhamOps { dcurl: curl_matrix(cg, rt)?, ddiv: div_matrix(rt, dg)? })
}

/// Coefficients of I_RT(vcurl φ) for every CG basis function φ.
pub fn curl_matrix(cg: &FunctionSpace, rt: &FunctionSpace) -> Result<CsrMatrix> {
    if !Arc::ptr_eq(cg.mesh(), rt.mesh()) {
        return invalid("curl_matrix: spaces live on different meshes");
    }
    let qdeg = 2 * rt.element().degree + 2;
    let mut b = TripletBuilder::new(rt.ndofs(), cg.ndofs());
    let mut done = vec![false; rt.ndofs()];
    let mut t = Tab::default();
    for c in 0..cg.mesh().num_cells() {
        let rdofs = rt.cell_dofs(c);
        let rsigns = rt.cell_signs(c);
        let cdofs = cg.cell_dofs(c);
        for i in 0..rt.ldofs() {
            if done[rdofs[i]] {
                continue;
            }
            done[rdofs[i]] = true;
            let s = rt.samples(c, i, qdeg);
            cg.tabulate_into(c, &s.points, &mut t);
            for m in 0..cg.ldofs() {
                let mut acc = 0.0;
                for q in 0..s.points.len() {
                    let g = t.sgrad(q, m);
                    acc += s.weights[2 * q] * g[1] - s.weights[2 * q + 1] * g[0];
                }
                let v = rsigns[i] * acc;
                if v.abs() > 1e-15 {
                    b.push(rdofs[i], cdofs[m], v);
                }
            }
        }
    }
    Ok(b.build())
}

/// Divergence of an H(div) function evaluated at the DG nodes.
pub fn div_matrix(hdiv: &FunctionSpace, dg: &FunctionSpace) -> Result<CsrMatrix> {
    if !Arc::ptr_eq(hdiv.mesh(), dg.mesh()) {
        return invalid("div_matrix: spaces live on different meshes");
    }
    if hdiv.element().value_dim() != 2 || dg.element().value_dim() != 1 {
        return invalid("div_matrix: expected an H(div) space and a scalar space");
    }
    let mut b = TripletBuilder::new(dg.ndofs(), hdiv.ndofs());
    let mut t = Tab::default();
    for c in 0..dg.mesh().num_cells() {
        let pts: Vec<[f64; 2]> = (0..dg.ldofs()).map(|i| dg.samples(c, i, 0).points[0]).collect();
        hdiv.tabulate_into(c, &pts, &mut t);
        let hd = hdiv.cell_dofs(c);
        for (i, &gd) in dg.cell_dofs(c).iter().enumerate() {
            for (m, &gh) in hd.iter().enumerate() {
                let v = t.div(i, m);
                if v.abs() > 1e-15 {
                    b.push(gd, gh, v);
                }
            }
        }
    }
    Ok(b.build())
}

/// ‖div x‖_{L²} of an H(div) function computed by quadrature.
pub fn div_l2_norm(hdiv: &FunctionSpace, x: &[f64]) -> f64 {
    let qdeg = 2 * hdiv.element().degree;
    let mut total = 0.0;
    let mut t = Tab::default();
    for c in 0..hdiv.mesh().num_cells() {
        let (pts, wts) = hdiv.cell_quadrature(c, qdeg);
        hdiv.tabulate_into(c, &pts, &mut t);
        let dofs = hdiv.cell_dofs(c);
        for q in 0..pts.len() {
            let d: f64 = (0..t.n).map(|i| x[dofs[i]] * t.div(q, i)).sum();
            total += wts[q] * d * d;
        }
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femspace::{build_space, Family};
    use crate::mesh::{build_rect_mesh, Rect};

    #[test]
    fn complex_property_and_linear_curl() {
        for periodic in [false, true] {
            let m = Arc::new(build_rect_mesh(3, 3, Rect::new(-1.0, 1.0, -1.0, 1.0), periodic).unwrap());
            for k in [1, 2] {
                let cg = build_space(m.clone(), Family::CG, k).unwrap();
                let rt = build_space(m.clone(), Family::RT, k).unwrap();
                let dg = build_space(m.clone(), Family::DG, k - 1).unwrap();
                let ops = derham_ops(&cg, &rt, &dg).unwrap();
                let prod = ops.ddiv.matmul(&ops.dcurl);
                assert!(prod.max_abs() <= 1e-13, "max {}", prod.max_abs());
                if !periodic {
                    // E = 1 + 2x - 3y → vcurl E = (-3, -2)
                    let e = cg.interpolate_scalar(|p| 1.0 + 2.0 * p[0] - 3.0 * p[1], 6);
                    let b = ops.dcurl.mul_vec(&e);
                    let exact = rt.interpolate_vector(|_| [-3.0, -2.0], 6);
                    let err = b.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    assert!(err < 1e-12);
                }
            }
        }
    }
}
