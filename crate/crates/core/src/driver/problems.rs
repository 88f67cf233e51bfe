//! Benchmark and manufactured problems.

use std::f64::consts::PI;

use crate::assembly::{scalar_fn, vec_fn, ProblemSpec, SolverConfig};
use crate::error::Result;
use crate::mesh::{build_rect_mesh, MeshHierarchy, Rect};

/// Lid-driven cavity on (−½,½)² with lid velocity (1,0) on y = ½ and a
/// constant background field B₀ = (0,1). The transient variant starts
/// impulsively from u = 0.
pub fn setup_ldc2d(stationary: bool, nx: usize, refinements: usize) -> Result<ProblemSpec> {
    let mesh = build_rect_mesh(nx, nx, Rect::new(-0.5, 0.5, -0.5, 0.5), false)?;
    let name = if stationary { "ldc2d_stationary" } else { "ldc2d_transient" };
    let mut spec = ProblemSpec::new(name, MeshHierarchy::new(mesh, refinements)?);
    spec.u_bc = Some(vec_fn(|p, _| if (p[1] - 0.5).abs() < 1e-12 { [1.0, 0.0] } else { [0.0, 0.0] }));
    spec.b_bc = Some(vec_fn(|_, _| [0.0, 1.0]));
    spec.e_bc = Some(scalar_fn(|_, _| 0.0));
    spec.b0 = Some(vec_fn(|_, _| [0.0, 1.0]));
    Ok(spec)
}

#[derive(Clone, Debug)]
pub struct IslandParams {
    pub k: f64,
    pub eps: f64,
    pub nx: usize,
    pub refinements: usize,
}

impl Default for IslandParams {
    fn default() -> Self {
        IslandParams { k: 0.2, eps: 0.01, nx: 8, refinements: 3 }
    }
}

fn island_den(k: f64, p: [f64; 2]) -> f64 {
    (2.0 * PI * p[1]).cosh() + k * (2.0 * PI * p[0]).cos()
}

pub fn island_b_eq(k: f64, p: [f64; 2]) -> [f64; 2] {
    let d = island_den(k, p);
    [(2.0 * PI * p[1]).sinh() / d, k * (2.0 * PI * p[0]).sin() / d]
}

/// curl B_eq = ∂x B₂ − ∂y B₁ = −2π(1 − k²)/D².
pub fn island_curl_b_eq(k: f64, p: [f64; 2]) -> f64 {
    let d = island_den(k, p);
    -2.0 * PI * (1.0 - k * k) / (d * d)
}

pub fn island_p_eq(k: f64, p: [f64; 2]) -> f64 {
    let d = island_den(k, p);
    0.5 * (1.0 - k * k) * (1.0 + 1.0 / (d * d))
}

pub fn island_source(k: f64, re_m: f64, p: [f64; 2]) -> [f64; 2] {
    let d = island_den(k, p);
    let s = -8.0 * PI * PI * (k * k - 1.0) / (re_m * d * d * d);
    [s * (2.0 * PI * p[1]).sinh(), s * k * (2.0 * PI * p[0]).sin()]
}

pub fn island_perturbation(eps: f64, p: [f64; 2]) -> [f64; 2] {
    let (x, y) = (p[0], p[1]);
    [-eps / PI * (PI * x).cos() * (PI * y / 2.0).sin(), 2.0 * eps / PI * (PI * y / 2.0).cos() * (PI * x).sin()]
}

/// Island coalescence on (−1,1)², periodic in x. The induction source g is
/// assembled from its RT interpolant. The equilibrium pressure is scaled by
/// S/Re_m, which balances the Lorentz force of the nondimensional momentum
/// equation.
pub fn setup_island(cfg: &SolverConfig, prm: &IslandParams) -> Result<ProblemSpec> {
    let mesh = build_rect_mesh(prm.nx, prm.nx, Rect::new(-1.0, 1.0, -1.0, 1.0), true)?;
    let mut spec = ProblemSpec::new("island2d", MeshHierarchy::new(mesh, prm.refinements)?);
    let (k, eps, re_m, s) = (prm.k, prm.eps, cfg.re_m, cfg.s);
    spec.induction_source = Some(vec_fn(move |p, _| island_source(k, re_m, p)));
    spec.interpolate_induction_source = true;
    // B_eq and g vary on the scale 1/(2π) in y; moment quadrature of degree
    // 16 keeps their interpolants divergence-free to round-off even on
    // coarse meshes
    spec.interp_degree = Some(16);
    spec.u_bc = Some(vec_fn(|_, _| [0.0, 0.0]));
    spec.b_bc = Some(vec_fn(move |p, _| island_b_eq(k, p)));
    spec.e_bc = Some(scalar_fn(move |p, _| island_curl_b_eq(k, p) / re_m));
    spec.p0 = Some(scalar_fn(move |p, _| s / re_m * island_p_eq(k, p)));
    spec.e0 = Some(scalar_fn(move |p, _| island_curl_b_eq(k, p) / re_m));
    spec.b0 = Some(vec_fn(move |p, _| {
        let (b, db) = (island_b_eq(k, p), island_perturbation(eps, p));
        [b[0] + db[0], b[1] + db[1]]
    }));
    Ok(spec)
}

/// Time profile τ(t) multiplying every manufactured field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeProfile {
    Constant,
    Linear,
    Smooth,
}

impl TimeProfile {
    fn eval(self, t: f64) -> (f64, f64) {
        match self {
            TimeProfile::Constant => (1.0, 0.0),
            TimeProfile::Linear => (1.0 + t, 1.0),
            TimeProfile::Smooth => (1.0 + 0.5 * (2.0 * t).sin(), (2.0 * t).cos()),
        }
    }
}

/// Spatial shape of a manufactured solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    /// Smooth trigonometric fields for spatial convergence studies.
    Trig,
    /// Fields inside the k = 2 spaces, for temporal studies.
    Polynomial,
}

/// Point values of the fields and the derivatives needed for the sources.
#[derive(Clone, Copy, Debug, Default)]
struct Fields {
    u: [f64; 2],
    /// grad_u[i][j] = ∂_j u_i
    grad_u: [[f64; 2]; 2],
    lap_u: [f64; 2],
    p: f64,
    grad_p: [f64; 2],
    e: f64,
    grad_e: [f64; 2],
    b: [f64; 2],
    curl_b: f64,
}

fn shape_fields(shape: Shape, q: [f64; 2]) -> Fields {
    let (x, y) = (q[0], q[1]);
    match shape {
        Shape::Trig => {
            let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
            let u = [sx * cy, -cx * sy];
            Fields {
                u,
                grad_u: [[PI * cx * cy, -PI * sx * sy], [PI * sx * sy, -PI * cx * cy]],
                lap_u: [-2.0 * PI * PI * u[0], -2.0 * PI * PI * u[1]],
                p: sx * cy,
                grad_p: [PI * cx * cy, -PI * sx * sy],
                e: cx * sy,
                grad_e: [-PI * sx * sy, PI * cx * cy],
                b: [-cx * sy, 1.0 + sx * cy],
                curl_b: 2.0 * PI * cx * cy,
            }
        }
        Shape::Polynomial => Fields {
            u: [x * x, -2.0 * x * y],
            grad_u: [[2.0 * x, 0.0], [-2.0 * y, -2.0 * x]],
            lap_u: [2.0, 0.0],
            p: x - y,
            grad_p: [1.0, -1.0],
            e: x * y,
            grad_e: [y, x],
            b: [1.0 + x + 2.0 * y, 0.5 * x - y],
            curl_b: -1.5,
        },
    }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Manufactured solution on the unit square: every field is τ(t) times a
/// fixed spatial shape, and the sources are computed from the strong form
///   ∂t u − (1/Re)Δu + (u·∇)u + ∇p + S (E + u×B)(B₂, −B₁) = f,
///   E + u×B − (1/Re_m) curl B = s,
///   ∂t B + vcurl E = g.
#[derive(Clone, Copy, Debug)]
pub struct Manufactured {
    pub shape: Shape,
    pub profile: TimeProfile,
    pub re: f64,
    pub re_m: f64,
    pub s: f64,
}

impl Manufactured {
    fn at(&self, p: [f64; 2], t: f64) -> (Fields, f64, f64) {
        let (tau, dtau) = self.profile.eval(t);
        (shape_fields(self.shape, p), tau, dtau)
    }

    pub fn u(&self, p: [f64; 2], t: f64) -> [f64; 2] {
        let (f, tau, _) = self.at(p, t);
        [tau * f.u[0], tau * f.u[1]]
    }
    pub fn p(&self, p: [f64; 2], t: f64) -> f64 {
        let (f, tau, _) = self.at(p, t);
        tau * f.p
    }
    pub fn e(&self, p: [f64; 2], t: f64) -> f64 {
        let (f, tau, _) = self.at(p, t);
        tau * f.e
    }
    pub fn b(&self, p: [f64; 2], t: f64) -> [f64; 2] {
        let (f, tau, _) = self.at(p, t);
        [tau * f.b[0], tau * f.b[1]]
    }

    pub fn force(&self, p: [f64; 2], t: f64) -> [f64; 2] {
        let (f, tau, dtau) = self.at(p, t);
        let u = [tau * f.u[0], tau * f.u[1]];
        let b = [tau * f.b[0], tau * f.b[1]];
        let j = tau * f.e + cross(u, b);
        let mut out = [0.0; 2];
        for i in 0..2 {
            let adv = tau * tau * (f.u[0] * f.grad_u[i][0] + f.u[1] * f.grad_u[i][1]);
            out[i] = dtau * f.u[i] - tau * f.lap_u[i] / self.re + adv + tau * f.grad_p[i];
        }
        out[0] += self.s * j * b[1];
        out[1] -= self.s * j * b[0];
        out
    }

    pub fn ohm(&self, p: [f64; 2], t: f64) -> f64 {
        let (f, tau, _) = self.at(p, t);
        tau * f.e + tau * tau * cross(f.u, f.b) - tau * f.curl_b / self.re_m
    }

    pub fn induction(&self, p: [f64; 2], t: f64) -> [f64; 2] {
        let (f, tau, dtau) = self.at(p, t);
        [dtau * f.b[0] + tau * f.grad_e[1], dtau * f.b[1] - tau * f.grad_e[0]]
    }
}

/// Manufactured problem on the unit square with all boundary data taken
/// from the exact solution.
pub fn setup_mms(m: Manufactured, nx: usize, refinements: usize) -> Result<ProblemSpec> {
    let mesh = build_rect_mesh(nx, nx, Rect::unit(), false)?;
    let name = if m.profile == TimeProfile::Constant { "mms_stationary" } else { "mms_transient" };
    let mut spec = ProblemSpec::new(name, MeshHierarchy::new(mesh, refinements)?);
    spec.force = Some(vec_fn(move |p, t| m.force(p, t)));
    spec.ohm_source = Some(scalar_fn(move |p, t| m.ohm(p, t)));
    spec.induction_source = Some(vec_fn(move |p, t| m.induction(p, t)));
    // g = ∂t B + vcurl E is solenoidal; its interpolant keeps div B_h = 0
    spec.interpolate_induction_source = true;
    spec.interp_degree = Some(16);
    spec.u_bc = Some(vec_fn(move |p, t| m.u(p, t)));
    spec.b_bc = Some(vec_fn(move |p, t| m.b(p, t)));
    spec.e_bc = Some(scalar_fn(move |p, t| m.e(p, t)));
    spec.u0 = Some(vec_fn(move |p, t| m.u(p, t)));
    spec.p0 = Some(scalar_fn(move |p, t| m.p(p, t)));
    spec.e0 = Some(scalar_fn(move |p, t| m.e(p, t)));
    spec.b0 = Some(vec_fn(move |p, t| m.b(p, t)));
    Ok(spec)
}
