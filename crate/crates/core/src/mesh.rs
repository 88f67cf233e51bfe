//! Structured triangulations of rectangles, uniform refinement and vertex stars.
//!
//! Each quad of the structured grid is split along its bottom-left to top-right
//! diagonal. Periodicity in x is realised by aliasing the vertices of the right
//! edge onto the left edge; cells keep their own (unwrapped) vertex coordinates so
//! all geometry stays local to a cell.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    Left,
    Right,
    Bottom,
    Top,
}

impl BoundaryTag {
    pub const BOUNDARY: [BoundaryTag; 4] =
        [BoundaryTag::Left, BoundaryTag::Right, BoundaryTag::Bottom, BoundaryTag::Top];
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }
    pub fn unit() -> Self {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }
    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

#[derive(Clone, Debug)]
pub struct Facet {
    /// Global vertex indices, sorted ascending. The facet parameter runs from
    /// `vertices[0]` to `vertices[1]`.
    pub vertices: [usize; 2],
    /// Adjacent cells, `cells[0] < cells[1]` for interior facets.
    pub cells: [usize; 2],
    /// Local facet index of this facet inside each adjacent cell.
    pub local: [usize; 2],
    /// Number of adjacent cells (1 on the boundary).
    pub ncells: usize,
    pub tag: BoundaryTag,
    /// Unit normal pointing from `cells[0]` into `cells[1]` (outward on the boundary).
    pub normal: [f64; 2],
    pub length: f64,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.ncells == 1
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    cell_coords: Vec<[[f64; 2]; 3]>,
    cell_facets: Vec<[usize; 3]>,
    facets: Vec<Facet>,
    vertex_cells: Vec<Vec<usize>>,
    periodic_x: bool,
    bounds: Rect,
    parent: Option<Vec<usize>>,
}

/// Local facet `i` is opposite local vertex `i`.
pub const FACET_VERTICES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

pub fn build_rect_mesh(nx: usize, ny: usize, bounds: Rect, periodic_x: bool) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return invalid(format!("cell counts must be positive, got {nx}x{ny}"));
    }
    if periodic_x && nx < 3 {
        return invalid(format!("periodic meshes need nx >= 3, got {nx}"));
    }
    if !(bounds.x1 > bounds.x0 && bounds.y1 > bounds.y0) {
        return invalid("degenerate rectangle");
    }
    let ncols = if periodic_x { nx } else { nx + 1 };
    let hx = bounds.width() / nx as f64;
    let hy = bounds.height() / ny as f64;
    let mut vertices = Vec::with_capacity(ncols * (ny + 1));
    for j in 0..=ny {
        for i in 0..ncols {
            vertices.push([bounds.x0 + i as f64 * hx, bounds.y0 + j as f64 * hy]);
        }
    }
    let vid = |i: usize, j: usize| j * ncols + if periodic_x { i % nx } else { i };
    let pt = |i: usize, j: usize| [bounds.x0 + i as f64 * hx, bounds.y0 + j as f64 * hy];
    let mut cells = Vec::with_capacity(2 * nx * ny);
    let mut coords = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
            coords.push([pt(i, j), pt(i + 1, j), pt(i + 1, j + 1)]);
            cells.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            coords.push([pt(i, j), pt(i + 1, j + 1), pt(i, j + 1)]);
        }
    }
    Mesh::from_parts(vertices, cells, coords, bounds, periodic_x, None)
}

pub fn refine_uniform(m: &Mesh) -> Result<Mesh> {
    let nv = m.vertices.len();
    let mut vertices = m.vertices.clone();
    vertices.reserve(m.facets.len());
    for f in &m.facets {
        let c = f.cells[0];
        let [a, b] = FACET_VERTICES[f.local[0]];
        let p = m.cell_coords[c];
        let mid = [0.5 * (p[a][0] + p[b][0]), 0.5 * (p[a][1] + p[b][1])];
        vertices.push(m.wrap(mid));
    }
    let mut cells = Vec::with_capacity(4 * m.cells.len());
    let mut coords = Vec::with_capacity(4 * m.cells.len());
    let mut parent = Vec::with_capacity(4 * m.cells.len());
    for (c, cell) in m.cells.iter().enumerate() {
        let p = m.cell_coords[c];
        let mv = |i: usize| nv + m.cell_facets[c][i];
        let mp = |i: usize| {
            let [a, b] = FACET_VERTICES[i];
            [0.5 * (p[a][0] + p[b][0]), 0.5 * (p[a][1] + p[b][1])]
        };
        let kids = [
            ([cell[0], mv(2), mv(1)], [p[0], mp(2), mp(1)]),
            ([mv(2), cell[1], mv(0)], [mp(2), p[1], mp(0)]),
            ([mv(1), mv(0), cell[2]], [mp(1), mp(0), p[2]]),
            ([mv(0), mv(1), mv(2)], [mp(0), mp(1), mp(2)]),
        ];
        for (v, x) in kids {
            cells.push(v);
            coords.push(x);
            parent.push(c);
        }
    }
    Mesh::from_parts(vertices, cells, coords, m.bounds, m.periodic_x, Some(parent))
}

fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

impl Mesh {
    fn from_parts(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        cell_coords: Vec<[[f64; 2]; 3]>,
        bounds: Rect,
        periodic_x: bool,
        parent: Option<Vec<usize>>,
    ) -> Result<Mesh> {
        for (c, p) in cell_coords.iter().enumerate() {
            if signed_area(p) <= 0.0 {
                return invalid(format!("cell {c} has non-positive area"));
            }
        }
        let mut map: HashMap<[usize; 2], usize> = HashMap::with_capacity(cells.len() * 2);
        let mut facets: Vec<Facet> = Vec::with_capacity(cells.len() * 2);
        let mut cell_facets = vec![[0usize; 3]; cells.len()];
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..3 {
                let [a, b] = FACET_VERTICES[i];
                let key = if cell[a] < cell[b] { [cell[a], cell[b]] } else { [cell[b], cell[a]] };
                if key[0] == key[1] {
                    return invalid(format!("cell {c} has a degenerate facet"));
                }
                match map.get(&key) {
                    Some(&f) => {
                        let fac = &mut facets[f];
                        if fac.ncells == 2 {
                            return invalid(format!("facet {key:?} shared by more than two cells"));
                        }
                        fac.cells[1] = c;
                        fac.local[1] = i;
                        fac.ncells = 2;
                        cell_facets[c][i] = f;
                    }
                    None => {
                        map.insert(key, facets.len());
                        cell_facets[c][i] = facets.len();
                        facets.push(Facet {
                            vertices: key,
                            cells: [c, c],
                            local: [i, i],
                            ncells: 1,
                            tag: BoundaryTag::Interior,
                            normal: [0.0; 2],
                            length: 0.0,
                        });
                    }
                }
            }
        }
        let tol = 1e-10 * bounds.width().max(bounds.height());
        for f in facets.iter_mut() {
            let (c, i) = (f.cells[0], f.local[0]);
            let p = cell_coords[c];
            let [a, b] = FACET_VERTICES[i];
            let (pa, pb) = (p[a], p[b]);
            let t = [pb[0] - pa[0], pb[1] - pa[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            let mut n = [t[1] / len, -t[0] / len];
            // orient away from the opposite vertex (outward for cell c)
            let q = p[i];
            if (q[0] - pa[0]) * n[0] + (q[1] - pa[1]) * n[1] > 0.0 {
                n = [-n[0], -n[1]];
            }
            f.normal = n;
            f.length = len;
            if f.ncells == 1 {
                let on = |x: f64, y: f64| (x - y).abs() < tol;
                f.tag = if on(pa[1], bounds.y0) && on(pb[1], bounds.y0) {
                    BoundaryTag::Bottom
                } else if on(pa[1], bounds.y1) && on(pb[1], bounds.y1) {
                    BoundaryTag::Top
                } else if on(pa[0], bounds.x0) && on(pb[0], bounds.x0) {
                    BoundaryTag::Left
                } else if on(pa[0], bounds.x1) && on(pb[0], bounds.x1) {
                    BoundaryTag::Right
                } else {
                    return invalid("boundary facet not on the rectangle boundary");
                };
            }
        }
        let mut vertex_cells = vec![Vec::new(); vertices.len()];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                vertex_cells[v].push(c);
            }
        }
        Ok(Mesh { vertices, cells, cell_coords, cell_facets, facets, vertex_cells, periodic_x, bounds, parent })
    }

    fn wrap(&self, p: [f64; 2]) -> [f64; 2] {
        if self.periodic_x {
            let w = self.bounds.width();
            let mut x = p[0];
            if x > self.bounds.x1 - 1e-10 * w {
                x -= w;
            }
            [x, p[1]]
        } else {
            p
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }
    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }
    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }
    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }
    pub fn facet(&self, f: usize) -> &Facet {
        &self.facets[f]
    }
    pub fn cell_facets(&self, c: usize) -> [usize; 3] {
        self.cell_facets[c]
    }
    /// Vertex coordinates of cell `c` in the cell's own (unwrapped) frame.
    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 3] {
        self.cell_coords[c]
    }
    pub fn periodic_x(&self) -> bool {
        self.periodic_x
    }
    pub fn bounds(&self) -> Rect {
        self.bounds
    }
    /// Child cell → parent cell on the next coarser mesh.
    pub fn parent(&self) -> Option<&[usize]> {
        self.parent.as_deref()
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        signed_area(&self.cell_coords[c])
    }

    pub fn cell_centroid(&self, c: usize) -> [f64; 2] {
        let p = self.cell_coords[c];
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        let p = self.cell_coords[c];
        let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        d(p[0], p[1]).max(d(p[1], p[2])).max(d(p[2], p[0]))
    }

    pub fn max_cell_diameter(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_diameter(c)).fold(0.0, f64::max)
    }

    /// Endpoints of local facet `i` of cell `c` in the cell frame, ordered from
    /// the lower to the higher global vertex index.
    pub fn facet_endpoints_in_cell(&self, c: usize, i: usize) -> ([f64; 2], [f64; 2]) {
        let [a, b] = FACET_VERTICES[i];
        let p = self.cell_coords[c];
        if self.cells[c][a] < self.cells[c][b] {
            (p[a], p[b])
        } else {
            (p[b], p[a])
        }
    }

    /// Outward unit normal of local facet `i` of cell `c`.
    pub fn outward_normal(&self, c: usize, i: usize) -> [f64; 2] {
        let f = &self.facets[self.cell_facets[c][i]];
        if f.cells[0] == c && f.local[0] == i {
            f.normal
        } else {
            [-f.normal[0], -f.normal[1]]
        }
    }

    /// All cells incident to vertex `v`.
    pub fn vertex_star(&self, v: usize) -> Result<&[usize]> {
        match self.vertex_cells.get(v) {
            Some(s) => Ok(s),
            None => invalid(format!("vertex {v} out of range ({} vertices)", self.vertices.len())),
        }
    }

    /// Barycentric coordinates of `p` with respect to cell `c` (cell frame).
    pub fn barycentric(&self, c: usize, p: [f64; 2]) -> [f64; 3] {
        let q = self.cell_coords[c];
        let det = (q[1][0] - q[0][0]) * (q[2][1] - q[0][1]) - (q[2][0] - q[0][0]) * (q[1][1] - q[0][1]);
        let l1 = ((p[0] - q[0][0]) * (q[2][1] - q[0][1]) - (q[2][0] - q[0][0]) * (p[1] - q[0][1])) / det;
        let l2 = ((q[1][0] - q[0][0]) * (p[1] - q[0][1]) - (p[0] - q[0][0]) * (q[1][1] - q[0][1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Find a cell containing `p`; returns the cell and `p` expressed in that
    /// cell's frame (periodic images are tried).
    pub fn locate(&self, p: [f64; 2]) -> Result<(usize, [f64; 2])> {
        let w = self.bounds.width();
        let shifts: &[f64] = if self.periodic_x { &[0.0, w, -w] } else { &[0.0] };
        let tol = 1e-12;
        for &s in shifts {
            let q = [p[0] + s, p[1]];
            for c in 0..self.num_cells() {
                let l = self.barycentric(c, q);
                if l.iter().all(|&x| x >= -tol) {
                    return Ok((c, q));
                }
            }
        }
        invalid(format!("point ({}, {}) is not in the mesh", p[0], p[1]))
    }
}

/// Nested meshes, coarsest first.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    pub levels: Vec<Arc<Mesh>>,
}

impl MeshHierarchy {
    pub fn new(coarse: Mesh, refinements: usize) -> Result<Self> {
        let mut levels = vec![Arc::new(coarse)];
        for _ in 0..refinements {
            let next = refine_uniform(levels.last().unwrap())?;
            levels.push(Arc::new(next));
        }
        Ok(MeshHierarchy { levels })
    }

    pub fn finest(&self) -> &Arc<Mesh> {
        self.levels.last().unwrap()
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }
}
