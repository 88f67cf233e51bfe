//! Vertex-star patches and the additive patch correction.

use crate::error::{Error, Result};
use crate::femspace::FunctionSpace;
use crate::linalg::{CsrMatrix, LuFactor};
use crate::mesh::Mesh;

/// One patch per mesh vertex: the dofs whose support lies in the vertex star.
#[derive(Clone, Debug)]
pub struct PatchDecomposition {
    pub vertices: Vec<usize>,
    /// Global (operator) indices, sorted.
    pub dofs: Vec<Vec<usize>>,
}

/// A space contributing to a patch operator: its index offset inside the
/// operator and a mask of excluded (Dirichlet) dofs.
pub struct PatchSpace<'a> {
    pub space: &'a FunctionSpace,
    pub offset: usize,
    pub excluded: Option<&'a [bool]>,
}

/// Vertices shared by all cells that contain each dof.
fn common_vertices(space: &FunctionSpace, mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut common: Vec<Option<Vec<usize>>> = vec![None; space.ndofs()];
    for c in 0..mesh.num_cells() {
        let verts = mesh.cells()[c];
        for &d in space.cell_dofs(c) {
            match &mut common[d] {
                Some(v) => v.retain(|x| verts.contains(x)),
                slot @ None => *slot = Some(verts.to_vec()),
            }
        }
    }
    common.into_iter().map(|v| v.unwrap_or_default()).collect()
}

pub fn star_patches(mesh: &Mesh, spaces: &[PatchSpace]) -> PatchDecomposition {
    let nv = mesh.num_vertices();
    let mut dofs = vec![Vec::new(); nv];
    for ps in spaces {
        for (d, verts) in common_vertices(ps.space, mesh).into_iter().enumerate() {
            if ps.excluded.is_some_and(|m| m[d]) {
                continue;
            }
            for v in verts {
                dofs[v].push(ps.offset + d);
            }
        }
    }
    let mut vertices = Vec::new();
    let mut out = Vec::new();
    for (v, mut d) in dofs.into_iter().enumerate() {
        if d.is_empty() {
            continue;
        }
        d.sort_unstable();
        vertices.push(v);
        out.push(d);
    }
    PatchDecomposition { vertices, dofs: out }
}

/// Σᵢ Rᵢᵀ Aᵢ⁻¹ Rᵢ with dense LU per patch.
pub struct PatchSmoother {
    patches: PatchDecomposition,
    factors: Vec<LuFactor>,
    n: usize,
}

impl PatchSmoother {
    pub fn new(a: &CsrMatrix, patches: PatchDecomposition) -> Result<Self> {
        let mut lookup = Vec::new();
        let mut factors = Vec::with_capacity(patches.dofs.len());
        for (k, d) in patches.dofs.iter().enumerate() {
            let local = a.dense_submatrix(d, d, &mut lookup);
            match LuFactor::new(local) {
                Ok(f) => factors.push(f),
                Err(_) => return Err(Error::SingularPatch { vertex: patches.vertices[k] }),
            }
        }
        Ok(PatchSmoother { patches, factors, n: a.nrows })
    }

    pub fn num_patches(&self) -> usize {
        self.factors.len()
    }

    pub fn patches(&self) -> &PatchDecomposition {
        &self.patches
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        debug_assert_eq!(r.len(), self.n);
        z.iter_mut().for_each(|v| *v = 0.0);
        let mut buf = Vec::new();
        for (d, f) in self.patches.dofs.iter().zip(&self.factors) {
            buf.clear();
            buf.extend(d.iter().map(|&i| r[i]));
            f.solve_in_place(&mut buf);
            for (&i, v) in d.iter().zip(&buf) {
                z[i] += v;
            }
        }
    }
}
