//! Inter-level transfer for nested spaces on uniformly refined meshes.

use crate::error::{invalid, Result};
use crate::femspace::{FunctionSpace, Tab};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::Mesh;

fn check_nested(coarse: &Mesh, fine: &Mesh) -> Result<()> {
    match fine.parent() {
        Some(p) if p.len() == fine.num_cells() && 4 * coarse.num_cells() == fine.num_cells() => Ok(()),
        _ => invalid("fine mesh is not a uniform refinement of the coarse mesh"),
    }
}

/// Prolongation P (fine × coarse): fine functionals applied to coarse basis
/// functions, exact for nested spaces.
pub fn prolongation(coarse: &FunctionSpace, fine: &FunctionSpace) -> Result<CsrMatrix> {
    let (cm, fm) = (coarse.mesh(), fine.mesh());
    check_nested(cm, fm)?;
    if coarse.element() != fine.element() {
        return invalid("prolongation between different elements");
    }
    let parent = fm.parent().unwrap();
    let vd = fine.element().value_dim();
    let qdeg = fine.default_interp_degree();
    let mut b = TripletBuilder::new(fine.ndofs(), coarse.ndofs());
    let mut done = vec![false; fine.ndofs()];
    let mut t = Tab::default();
    for cf in 0..fm.num_cells() {
        let pc = parent[cf];
        let fd = fine.cell_dofs(cf);
        let fs = fine.cell_signs(cf);
        let cd = coarse.cell_dofs(pc);
        for i in 0..fine.ldofs() {
            if done[fd[i]] {
                continue;
            }
            done[fd[i]] = true;
            // children share the parent's coordinate frame
            let s = fine.samples(cf, i, qdeg);
            coarse.tabulate_into(pc, &s.points, &mut t);
            for (j, &cj) in cd.iter().enumerate() {
                let mut acc = 0.0;
                for q in 0..s.points.len() {
                    for d in 0..vd {
                        acc += s.weights[q * vd + d] * t.v(q, j, d);
                    }
                }
                let v = fs[i] * acc;
                if v.abs() > 1e-14 {
                    b.push(fd[i], cj, v);
                }
            }
        }
    }
    Ok(b.build())
}

/// Child of coarse cell `c` containing `p` (parent frame).
fn child_containing(fine: &Mesh, c: usize, p: [f64; 2]) -> usize {
    let mut best = (4 * c, f64::NEG_INFINITY);
    for k in 4 * c..4 * c + 4 {
        let l = fine.barycentric(k, p);
        let m = l[0].min(l[1]).min(l[2]);
        if m > best.1 {
            best = (k, m);
        }
    }
    best.0
}

/// Coarse interpolant of a fine FE function (coarse functionals evaluated on
/// the fine function, child by child).
pub fn inject(coarse: &FunctionSpace, fine: &FunctionSpace, x: &[f64]) -> Result<Vec<f64>> {
    let (cm, fm) = (coarse.mesh(), fine.mesh());
    check_nested(cm, fm)?;
    if x.len() != fine.ndofs() {
        return invalid("inject: vector length does not match the fine space");
    }
    let vd = coarse.element().value_dim();
    let qdeg = coarse.default_interp_degree();
    let mut out = vec![0.0; coarse.ndofs()];
    let mut done = vec![false; coarse.ndofs()];
    for c in 0..cm.num_cells() {
        let cd = coarse.cell_dofs(c);
        let cs = coarse.cell_signs(c);
        for i in 0..coarse.ldofs() {
            if done[cd[i]] {
                continue;
            }
            done[cd[i]] = true;
            let s = coarse.samples(c, i, qdeg);
            let mut acc = 0.0;
            for (q, &p) in s.points.iter().enumerate() {
                let k = child_containing(fm, c, p);
                let (val, _) = fine.eval(x, k, p);
                for d in 0..vd {
                    acc += s.weights[q * vd + d] * val[d];
                }
            }
            out[cd[i]] = cs[i] * acc;
        }
    }
    Ok(out)
}

/// Block-diagonal prolongation for a product of spaces.
pub fn block_prolongation(blocks: &[CsrMatrix]) -> CsrMatrix {
    let rows: Vec<usize> = blocks.iter().map(|b| b.nrows).collect();
    let cols: Vec<usize> = blocks.iter().map(|b| b.ncols).collect();
    let grid: Vec<Vec<Option<&CsrMatrix>>> =
        (0..blocks.len()).map(|i| (0..blocks.len()).map(|j| if i == j { Some(&blocks[i]) } else { None }).collect()).collect();
    let refs: Vec<&[Option<&CsrMatrix>]> = grid.iter().map(|r| r.as_slice()).collect();
    crate::assembly::stack(&refs, &rows, &cols)
}
