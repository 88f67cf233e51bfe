//! Finite element spaces CG_k, DG_k, RT_k and BDM_k on triangles.
//!
//! Bases are built per cell in physical coordinates: a primal polynomial basis in
//! scaled local coordinates ξ = (x − x_K)/h_K is made nodal with respect to the
//! dof functionals by inverting the local dual matrix. Facet moments for H(div)
//! elements use Legendre polynomials in the facet parameter that runs from the
//! lower to the higher global vertex, so both neighbours agree on them; the local
//! functionals use the outward normal and the global dof carries the sign
//! n_out · n_F.

pub mod derham;

use std::sync::Arc;

use crate::linalg::dense::DenseMatrix;
use crate::error::{invalid, Result};
use crate::mesh::{BoundaryTag, Mesh, FACET_VERTICES};
use crate::quadrature::{legendre, line_rule, triangle_rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    CG,
    DG,
    RT,
    BDM,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    pub family: Family,
    pub degree: usize,
}

impl Element {
    pub fn new(family: Family, degree: usize) -> Result<Self> {
        let ok = match family {
            Family::CG | Family::RT | Family::BDM => (1..=2).contains(&degree),
            Family::DG => degree <= 2,
        };
        if !ok {
            return invalid(format!("unsupported element {family:?}_{degree}"));
        }
        Ok(Element { family, degree })
    }

    pub fn ndofs(&self) -> usize {
        let k = self.degree;
        match self.family {
            Family::CG | Family::DG => (k + 1) * (k + 2) / 2,
            Family::BDM => (k + 1) * (k + 2),
            Family::RT => k * (k + 2),
        }
    }

    pub fn value_dim(&self) -> usize {
        match self.family {
            Family::CG | Family::DG => 1,
            Family::RT | Family::BDM => 2,
        }
    }

    pub fn dofs_per_vertex(&self) -> usize {
        usize::from(self.family == Family::CG)
    }

    pub fn dofs_per_facet(&self) -> usize {
        match self.family {
            Family::CG => self.degree - 1,
            Family::DG => 0,
            Family::RT => self.degree,
            Family::BDM => self.degree + 1,
        }
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.ndofs() - 3 * self.dofs_per_vertex() - 3 * self.dofs_per_facet()
    }

    /// Primal basis: each function is a list of (component, a, b) terms ξ1^a ξ2^b e_comp.
    fn primal(&self) -> Vec<Vec<(usize, usize, usize)>> {
        let k = self.degree;
        let monos = |d: usize| -> Vec<(usize, usize)> {
            let mut v = Vec::new();
            for t in 0..=d {
                for b in 0..=t {
                    v.push((t - b, b));
                }
            }
            v
        };
        match self.family {
            Family::CG | Family::DG => monos(k).into_iter().map(|(a, b)| vec![(0, a, b)]).collect(),
            Family::BDM => {
                let mut v = Vec::new();
                for (a, b) in monos(k) {
                    v.push(vec![(0, a, b)]);
                    v.push(vec![(1, a, b)]);
                }
                v
            }
            Family::RT => {
                let mut v = Vec::new();
                for (a, b) in monos(k - 1) {
                    v.push(vec![(0, a, b)]);
                    v.push(vec![(1, a, b)]);
                }
                for b in 0..k {
                    let a = k - 1 - b;
                    v.push(vec![(0, a + 1, b), (1, a, b + 1)]);
                }
                v
            }
        }
    }

    /// Interior moment weights (in ξ) for H(div) elements.
    fn interior_weights(&self) -> Vec<Vec<(usize, usize, usize, f64)>> {
        match (self.family, self.degree) {
            (Family::RT, 2) => vec![vec![(0, 0, 0, 1.0)], vec![(1, 0, 0, 1.0)]],
            (Family::BDM, 2) => vec![
                vec![(0, 0, 0, 1.0)],
                vec![(1, 0, 0, 1.0)],
                vec![(0, 0, 1, -1.0), (1, 1, 0, 1.0)],
            ],
            _ => Vec::new(),
        }
    }
}

/// Local dof functional of a cell.
#[derive(Clone, Debug)]
enum Functional {
    Point([f64; 2]),
    FacetMoment { facet: usize, j: usize },
    InteriorMoment(usize),
}

/// Point samples realising a functional: ℓ(f) = Σ w · f(x).
pub struct Samples {
    pub points: Vec<[f64; 2]>,
    /// `value_dim` weights per point.
    pub weights: Vec<f64>,
}

/// Basis tabulation of one cell at a set of points (global signs applied).
#[derive(Clone, Debug, Default)]
pub struct Tab {
    pub n: usize,
    pub npts: usize,
    pub vdim: usize,
    pub val: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Tab {
    #[inline]
    pub fn v(&self, q: usize, i: usize, c: usize) -> f64 {
        self.val[(q * self.n + i) * self.vdim + c]
    }
    #[inline]
    pub fn g(&self, q: usize, i: usize, c: usize, d: usize) -> f64 {
        self.grad[((q * self.n + i) * self.vdim + c) * 2 + d]
    }
    #[inline]
    pub fn vec(&self, q: usize, i: usize) -> [f64; 2] {
        let o = (q * self.n + i) * 2;
        [self.val[o], self.val[o + 1]]
    }
    /// grad[r][c] = ∂_c φ_r
    #[inline]
    pub fn vgrad(&self, q: usize, i: usize) -> [[f64; 2]; 2] {
        let o = (q * self.n + i) * 4;
        [[self.grad[o], self.grad[o + 1]], [self.grad[o + 2], self.grad[o + 3]]]
    }
    #[inline]
    pub fn div(&self, q: usize, i: usize) -> f64 {
        let o = (q * self.n + i) * 4;
        self.grad[o] + self.grad[o + 3]
    }
    #[inline]
    pub fn sgrad(&self, q: usize, i: usize) -> [f64; 2] {
        let o = (q * self.n + i) * 2;
        [self.grad[o], self.grad[o + 1]]
    }
}

pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    element: Element,
    ndofs: usize,
    primal: Vec<Vec<(usize, usize, usize)>>,
    cell_dofs: Vec<usize>,
    cell_signs: Vec<f64>,
    coeffs: Vec<f64>,
    frames: Vec<([f64; 2], f64)>,
    boundary: [Vec<usize>; 4],
    /// Pressure-like spaces whose mean is fixed by a post-solve shift.
    pub mean_constraint: bool,
}

fn tag_index(tag: BoundaryTag) -> Option<usize> {
    match tag {
        BoundaryTag::Left => Some(0),
        BoundaryTag::Right => Some(1),
        BoundaryTag::Bottom => Some(2),
        BoundaryTag::Top => Some(3),
        BoundaryTag::Interior => None,
    }
}

pub fn build_space(mesh: Arc<Mesh>, family: Family, degree: usize) -> Result<FunctionSpace> {
    FunctionSpace::new(mesh, Element::new(family, degree)?)
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, element: Element) -> Result<Self> {
        let n = element.ndofs();
        let (nvd, nfd, ncd) = (element.dofs_per_vertex(), element.dofs_per_facet(), element.dofs_per_cell());
        let nv = mesh.num_vertices();
        let nf = mesh.num_facets();
        let nc = mesh.num_cells();
        let ndofs = nv * nvd + nf * nfd + nc * ncd;
        let mut cell_dofs = Vec::with_capacity(nc * n);
        let mut cell_signs = Vec::with_capacity(nc * n);
        let vector = element.value_dim() == 2;
        for c in 0..nc {
            let cell = mesh.cells()[c];
            for &v in &cell {
                for d in 0..nvd {
                    cell_dofs.push(v * nvd + d);
                    cell_signs.push(1.0);
                }
            }
            let cf = mesh.cell_facets(c);
            for i in 0..3 {
                let f = mesh.facet(cf[i]);
                let s = if vector && !(f.cells[0] == c && f.local[0] == i) { -1.0 } else { 1.0 };
                for d in 0..nfd {
                    cell_dofs.push(nv * nvd + cf[i] * nfd + d);
                    cell_signs.push(s);
                }
            }
            for d in 0..ncd {
                cell_dofs.push(nv * nvd + nf * nfd + c * ncd + d);
                cell_signs.push(1.0);
            }
        }
        let mut boundary: [Vec<usize>; 4] = Default::default();
        for (fi, f) in mesh.facets().iter().enumerate() {
            if let Some(t) = tag_index(f.tag) {
                for &v in &f.vertices {
                    for d in 0..nvd {
                        boundary[t].push(v * nvd + d);
                    }
                }
                for d in 0..nfd {
                    boundary[t].push(nv * nvd + fi * nfd + d);
                }
            }
        }
        for b in boundary.iter_mut() {
            b.sort_unstable();
            b.dedup();
        }
        let frames = (0..nc).map(|c| (mesh.cell_centroid(c), mesh.cell_diameter(c))).collect();
        let mut space = FunctionSpace {
            mesh,
            element,
            ndofs,
            primal: element.primal(),
            cell_dofs,
            cell_signs,
            coeffs: vec![0.0; nc * n * n],
            frames,
            boundary,
            mean_constraint: false,
        };
        space.build_coefficients()?;
        Ok(space)
    }

    fn build_coefficients(&mut self) -> Result<()> {
        let n = self.element.ndofs();
        let qdeg = 2 * self.element.degree + 2;
        for c in 0..self.mesh.num_cells() {
            let mut v = DenseMatrix::zeros(n, n);
            for i in 0..n {
                let s = self.samples(c, i, qdeg);
                for (q, x) in s.points.iter().enumerate() {
                    let pv = self.primal_values(c, *x);
                    for j in 0..n {
                        let mut acc = 0.0;
                        for d in 0..self.element.value_dim() {
                            acc += s.weights[q * self.element.value_dim() + d] * pv[j * self.element.value_dim() + d];
                        }
                        v[(i, j)] += acc;
                    }
                }
            }
            // basis_m = Σ_j C[j][m] p_j with V C = I; store row-major basis-by-primal
            let inv = v.inverse()?;
            for m in 0..n {
                for j in 0..n {
                    self.coeffs[(c * n + m) * n + j] = inv[(j, m)];
                }
            }
        }
        Ok(())
    }

    fn functional(&self, c: usize, i: usize) -> Functional {
        let e = self.element;
        let (nvd, nfd) = (e.dofs_per_vertex(), e.dofs_per_facet());
        let coords = self.mesh.cell_coords(c);
        if i < 3 * nvd {
            return Functional::Point(coords[i / nvd.max(1)]);
        }
        let i = i - 3 * nvd;
        if i < 3 * nfd {
            let (facet, j) = (i / nfd, i % nfd);
            if e.family == Family::CG {
                // CG_2: one midpoint per facet
                let [a, b] = FACET_VERTICES[facet];
                let p = [(coords[a][0] + coords[b][0]) * 0.5, (coords[a][1] + coords[b][1]) * 0.5];
                return Functional::Point(p);
            }
            return Functional::FacetMoment { facet, j };
        }
        let i = i - 3 * nfd;
        match e.family {
            Family::DG => {
                let k = e.degree;
                if k == 0 {
                    return Functional::Point(self.mesh.cell_centroid(c));
                }
                let mut nodes = Vec::new();
                for t in 0..=k {
                    for b in 0..=t {
                        let (l1, l2) = ((t - b) as f64 / k as f64, b as f64 / k as f64);
                        let p0 = coords[0];
                        nodes.push([
                            p0[0] + l1 * (coords[1][0] - p0[0]) + l2 * (coords[2][0] - p0[0]),
                            p0[1] + l1 * (coords[1][1] - p0[1]) + l2 * (coords[2][1] - p0[1]),
                        ]);
                    }
                }
                Functional::Point(nodes[i])
            }
            _ => Functional::InteriorMoment(i),
        }
    }

    /// Samples of local functional `i` of cell `c` (local orientation).
    pub fn samples(&self, c: usize, i: usize, qdeg: usize) -> Samples {
        let vd = self.element.value_dim();
        match self.functional(c, i) {
            Functional::Point(p) => Samples { points: vec![p], weights: vec![1.0] },
            Functional::FacetMoment { facet, j } => {
                let (a, b) = self.mesh.facet_endpoints_in_cell(c, facet);
                let n = self.mesh.outward_normal(c, facet);
                let r = line_rule(qdeg);
                let mut points = Vec::with_capacity(r.points.len());
                let mut weights = Vec::with_capacity(2 * r.points.len());
                for (t, w) in r.points.iter().zip(&r.weights) {
                    points.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    let pj = legendre(j, 2.0 * t - 1.0);
                    weights.push(w * pj * n[0]);
                    weights.push(w * pj * n[1]);
                }
                Samples { points, weights }
            }
            Functional::InteriorMoment(m) => {
                let terms = &self.element.interior_weights()[m];
                let (xc, h) = self.frames[c];
                let r = triangle_rule(qdeg);
                let coords = self.mesh.cell_coords(c);
                let mut points = Vec::with_capacity(r.points.len());
                let mut weights = Vec::with_capacity(vd * r.points.len());
                for (p, w) in r.points.iter().zip(&r.weights) {
                    let x = map_ref(&coords, *p);
                    let xi = [(x[0] - xc[0]) / h, (x[1] - xc[1]) / h];
                    let mut q = [0.0; 2];
                    for &(comp, a, b, coef) in terms {
                        q[comp] += coef * xi[0].powi(a as i32) * xi[1].powi(b as i32);
                    }
                    points.push(x);
                    weights.push(2.0 * w * q[0]);
                    weights.push(2.0 * w * q[1]);
                }
                Samples { points, weights }
            }
        }
    }

    fn primal_values(&self, c: usize, x: [f64; 2]) -> Vec<f64> {
        let vd = self.element.value_dim();
        let (xc, h) = self.frames[c];
        let xi = [(x[0] - xc[0]) / h, (x[1] - xc[1]) / h];
        let mut out = vec![0.0; self.primal.len() * vd];
        for (j, terms) in self.primal.iter().enumerate() {
            for &(comp, a, b) in terms {
                out[j * vd + comp] += xi[0].powi(a as i32) * xi[1].powi(b as i32);
            }
        }
        out
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn element(&self) -> Element {
        self.element
    }
    pub fn ndofs(&self) -> usize {
        self.ndofs
    }
    /// Dofs per cell.
    pub fn ldofs(&self) -> usize {
        self.element.ndofs()
    }
    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        let n = self.ldofs();
        &self.cell_dofs[c * n..(c + 1) * n]
    }
    pub fn cell_signs(&self, c: usize) -> &[f64] {
        let n = self.ldofs();
        &self.cell_signs[c * n..(c + 1) * n]
    }

    pub fn boundary_dofs(&self, tag: BoundaryTag) -> &[usize] {
        match tag_index(tag) {
            Some(t) => &self.boundary[t],
            None => &[],
        }
    }

    /// Sorted union of boundary dofs over the given tags.
    pub fn boundary_dofs_union(&self, tags: &[BoundaryTag]) -> Vec<usize> {
        let mut v: Vec<usize> = tags.iter().flat_map(|t| self.boundary_dofs(*t).iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Tabulate the (signed, global) basis of cell `c` at physical points.
    pub fn tabulate(&self, c: usize, pts: &[[f64; 2]]) -> Tab {
        let mut t = Tab::default();
        self.tabulate_into(c, pts, &mut t);
        t
    }

    pub fn tabulate_into(&self, c: usize, pts: &[[f64; 2]], t: &mut Tab) {
        let n = self.ldofs();
        let vd = self.element.value_dim();
        t.n = n;
        t.npts = pts.len();
        t.vdim = vd;
        t.val.clear();
        t.val.resize(pts.len() * n * vd, 0.0);
        t.grad.clear();
        t.grad.resize(pts.len() * n * vd * 2, 0.0);
        let (xc, h) = self.frames[c];
        let hinv = 1.0 / h;
        let coef = &self.coeffs[c * n * n..(c + 1) * n * n];
        let signs = self.cell_signs(c);
        let mut pv = vec![0.0; n * vd];
        let mut pg = vec![0.0; n * vd * 2];
        for (q, x) in pts.iter().enumerate() {
            let xi = [(x[0] - xc[0]) * hinv, (x[1] - xc[1]) * hinv];
            let mut p1 = [1.0; 4];
            let mut p2 = [1.0; 4];
            for e in 1..4 {
                p1[e] = p1[e - 1] * xi[0];
                p2[e] = p2[e - 1] * xi[1];
            }
            pv.iter_mut().for_each(|v| *v = 0.0);
            pg.iter_mut().for_each(|v| *v = 0.0);
            for (j, terms) in self.primal.iter().enumerate() {
                for &(comp, a, b) in terms {
                    pv[j * vd + comp] += p1[a] * p2[b];
                    if a > 0 {
                        pg[(j * vd + comp) * 2] += a as f64 * p1[a - 1] * p2[b] * hinv;
                    }
                    if b > 0 {
                        pg[(j * vd + comp) * 2 + 1] += b as f64 * p1[a] * p2[b - 1] * hinv;
                    }
                }
            }
            for i in 0..n {
                let row = &coef[i * n..(i + 1) * n];
                let s = signs[i];
                let vo = (q * n + i) * vd;
                for comp in 0..vd {
                    let mut acc = 0.0;
                    let mut gx = 0.0;
                    let mut gy = 0.0;
                    for j in 0..n {
                        let cj = row[j];
                        acc += cj * pv[j * vd + comp];
                        gx += cj * pg[(j * vd + comp) * 2];
                        gy += cj * pg[(j * vd + comp) * 2 + 1];
                    }
                    t.val[vo + comp] = s * acc;
                    t.grad[(vo + comp) * 2] = s * gx;
                    t.grad[(vo + comp) * 2 + 1] = s * gy;
                }
            }
        }
    }

    /// Value (and gradient) of the FE function `x` at point `p` of cell `c`.
    pub fn eval(&self, x: &[f64], c: usize, p: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        let t = self.tabulate(c, &[p]);
        let vd = t.vdim;
        let mut val = vec![0.0; vd];
        let mut grad = vec![0.0; vd * 2];
        for (i, &g) in self.cell_dofs(c).iter().enumerate() {
            for comp in 0..vd {
                val[comp] += x[g] * t.v(0, i, comp);
                for d in 0..2 {
                    grad[comp * 2 + d] += x[g] * t.g(0, i, comp, d);
                }
            }
        }
        (val, grad)
    }

    /// Apply the dof functionals to `f` (value written into the slice) using
    /// moment quadrature of degree `qdeg`.
    pub fn interpolate_with<F: Fn([f64; 2], &mut [f64])>(&self, f: F, qdeg: usize) -> Vec<f64> {
        let vd = self.element.value_dim();
        let mut out = vec![0.0; self.ndofs];
        let mut done = vec![false; self.ndofs];
        let mut buf = vec![0.0; vd];
        for c in 0..self.mesh.num_cells() {
            let dofs = self.cell_dofs(c);
            let signs = self.cell_signs(c);
            for i in 0..self.ldofs() {
                if done[dofs[i]] {
                    continue;
                }
                let s = self.samples(c, i, qdeg);
                let mut acc = 0.0;
                for (q, p) in s.points.iter().enumerate() {
                    f(*p, &mut buf);
                    for d in 0..vd {
                        acc += s.weights[q * vd + d] * buf[d];
                    }
                }
                out[dofs[i]] = signs[i] * acc;
                done[dofs[i]] = true;
            }
        }
        out
    }

    pub fn interpolate_vector<F: Fn([f64; 2]) -> [f64; 2]>(&self, f: F, qdeg: usize) -> Vec<f64> {
        self.interpolate_with(
            |x, out| {
                let v = f(x);
                out[0] = v[0];
                out[1] = v[1];
            },
            qdeg,
        )
    }

    pub fn interpolate_scalar<F: Fn([f64; 2]) -> f64>(&self, f: F, qdeg: usize) -> Vec<f64> {
        self.interpolate_with(|x, out| out[0] = f(x), qdeg)
    }

    /// Default moment quadrature degree (element degree + 6).
    pub fn default_interp_degree(&self) -> usize {
        self.element.degree + 6
    }

    /// Quadrature points and weights of cell `c` for a rule exact to `degree`.
    pub fn cell_quadrature(&self, c: usize, degree: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
        cell_quadrature(&self.mesh, c, degree)
    }

    /// Global L² norm of a FE function.
    pub fn l2_norm(&self, x: &[f64]) -> f64 {
        let qdeg = 2 * self.element.degree + 1;
        let mut total = 0.0;
        let mut t = Tab::default();
        for c in 0..self.mesh.num_cells() {
            let (pts, wts) = self.cell_quadrature(c, qdeg);
            self.tabulate_into(c, &pts, &mut t);
            let dofs = self.cell_dofs(c);
            for q in 0..pts.len() {
                for comp in 0..t.vdim {
                    let v: f64 = (0..t.n).map(|i| x[dofs[i]] * t.v(q, i, comp)).sum();
                    total += wts[q] * v * v;
                }
            }
        }
        total.sqrt()
    }

    /// L² error against an exact function.
    pub fn l2_error<F: Fn([f64; 2], &mut [f64])>(&self, x: &[f64], f: F, qdeg: usize) -> f64 {
        let mut total = 0.0;
        let mut t = Tab::default();
        let mut buf = vec![0.0; self.element.value_dim()];
        for c in 0..self.mesh.num_cells() {
            let (pts, wts) = self.cell_quadrature(c, qdeg);
            self.tabulate_into(c, &pts, &mut t);
            let dofs = self.cell_dofs(c);
            for q in 0..pts.len() {
                f(pts[q], &mut buf);
                for comp in 0..t.vdim {
                    let v: f64 = (0..t.n).map(|i| x[dofs[i]] * t.v(q, i, comp)).sum();
                    total += wts[q] * (v - buf[comp]).powi(2);
                }
            }
        }
        total.sqrt()
    }

    /// ∫_Ω of a scalar FE function.
    pub fn integral(&self, x: &[f64]) -> f64 {
        let qdeg = self.element.degree;
        let mut total = 0.0;
        let mut t = Tab::default();
        for c in 0..self.mesh.num_cells() {
            let (pts, wts) = self.cell_quadrature(c, qdeg);
            self.tabulate_into(c, &pts, &mut t);
            let dofs = self.cell_dofs(c);
            for q in 0..pts.len() {
                total += wts[q] * (0..t.n).map(|i| x[dofs[i]] * t.v(q, i, 0)).sum::<f64>();
            }
        }
        total
    }
}

pub fn map_ref(coords: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 2] {
    let p0 = coords[0];
    [
        p0[0] + p[0] * (coords[1][0] - p0[0]) + p[1] * (coords[2][0] - p0[0]),
        p0[1] + p[0] * (coords[1][1] - p0[1]) + p[1] * (coords[2][1] - p0[1]),
    ]
}

/// Physical quadrature points and weights of cell `c`.
pub fn cell_quadrature(mesh: &Mesh, c: usize, degree: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let r = triangle_rule(degree);
    let coords = mesh.cell_coords(c);
    let scale = 2.0 * mesh.cell_area(c);
    let pts = r.points.iter().map(|p| map_ref(&coords, *p)).collect();
    let wts = r.weights.iter().map(|w| w * scale).collect();
    (pts, wts)
}

/// Physical quadrature on local facet `i` of cell `c`, parameterised in the
/// global facet direction: returns points, weights (including length).
pub fn facet_quadrature(mesh: &Mesh, c: usize, i: usize, degree: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let (a, b) = mesh.facet_endpoints_in_cell(c, i);
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let r = line_rule(degree);
    let pts = r.points.iter().map(|t| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]).collect();
    let wts = r.weights.iter().map(|w| w * len).collect();
    (pts, wts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, Rect};

    fn mesh(nx: usize, ny: usize, periodic: bool) -> Arc<Mesh> {
        Arc::new(build_rect_mesh(nx, ny, Rect::new(-1.0, 1.0, -1.0, 1.0), periodic).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = mesh(2, 2, false);
        assert_eq!(build_space(m.clone(), Family::DG, 1).unwrap().ndofs(), 24);
        for (fam, k, n) in [(Family::RT, 2, 8), (Family::BDM, 2, 12), (Family::CG, 2, 6), (Family::RT, 1, 3)] {
            assert_eq!(Element::new(fam, k).unwrap().ndofs(), n);
        }
        let one = Arc::new(build_rect_mesh(1, 1, Rect::unit(), false).unwrap());
        // two triangles: RT_2 = 5 facets * 2 + 2 cells * 2
        assert_eq!(build_space(one, Family::RT, 2).unwrap().ndofs(), 14);
        assert!(Element::new(Family::RT, 3).is_err());
    }

    #[test]
    fn nodal_property() {
        let m = mesh(3, 3, true);
        for (fam, k) in [(Family::CG, 1), (Family::CG, 2), (Family::DG, 1), (Family::RT, 1), (Family::RT, 2), (Family::BDM, 1), (Family::BDM, 2)] {
            let s = build_space(m.clone(), fam, k).unwrap();
            let vd = s.element().value_dim();
            for c in [0, 5, 17] {
                let n = s.ldofs();
                for i in 0..n {
                    let smp = s.samples(c, i, 8);
                    let t = s.tabulate(c, &smp.points);
                    for j in 0..n {
                        let mut acc = 0.0;
                        for q in 0..smp.points.len() {
                            for d in 0..vd {
                                acc += smp.weights[q * vd + d] * t.v(q, j, d);
                            }
                        }
                        // undo the global sign of basis j to compare with local functionals
                        let acc = acc * s.cell_signs(c)[j];
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((acc - expect).abs() < 1e-12, "{fam:?}{k} cell {c} ({i},{j}) {acc}");
                    }
                }
            }
        }
    }

    #[test]
    fn shared_facet_signs_opposite() {
        let m = mesh(3, 2, true);
        let s = build_space(m.clone(), Family::RT, 2).unwrap();
        for f in m.facets().iter().filter(|f| f.ncells == 2) {
            let s0 = s.cell_signs(f.cells[0])[2 * f.local[0]];
            let s1 = s.cell_signs(f.cells[1])[2 * f.local[1]];
            assert_eq!(s0, -s1);
        }
    }

    #[test]
    fn normal_continuity() {
        let m = mesh(3, 3, true);
        let s = build_space(m.clone(), Family::BDM, 2).unwrap();
        let x: Vec<f64> = (0..s.ndofs()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        for f in m.facets().iter().filter(|f| f.ncells == 2) {
            let (a0, b0) = m.facet_endpoints_in_cell(f.cells[0], f.local[0]);
            let (a1, b1) = m.facet_endpoints_in_cell(f.cells[1], f.local[1]);
            for t in [0.2, 0.7] {
                let p0 = [a0[0] + t * (b0[0] - a0[0]), a0[1] + t * (b0[1] - a0[1])];
                let p1 = [a1[0] + t * (b1[0] - a1[0]), a1[1] + t * (b1[1] - a1[1])];
                let (v0, _) = s.eval(&x, f.cells[0], p0);
                let (v1, _) = s.eval(&x, f.cells[1], p1);
                let n = f.normal;
                let j = (v0[0] - v1[0]) * n[0] + (v0[1] - v1[1]) * n[1];
                assert!(j.abs() < 1e-10, "normal jump {j}");
            }
        }
    }

    #[test]
    fn constant_field_into_rt2() {
        let m = mesh(4, 4, false);
        let s = build_space(m.clone(), Family::RT, 2).unwrap();
        for q in [2, 5, 8] {
            let x = s.interpolate_vector(|_| [0.0, 1.0], q);
            for c in [0, 9, 31] {
                let (v, g) = s.eval(&x, c, m.cell_centroid(c));
                assert!((v[0]).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
                assert!((g[0] + g[3]).abs() < 1e-12);
            }
        }
    }
}
