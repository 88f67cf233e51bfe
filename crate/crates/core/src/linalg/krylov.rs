//! Right-preconditioned GMRES and flexible GMRES.
//!
//! Both store the preconditioned directions, so the update is formed from the
//! same vectors whether or not the preconditioner changes between iterations.
//! The reported residual is always recomputed explicitly from ‖b − A x‖.

pub type Operator<'a> = dyn FnMut(&[f64], &mut [f64]) + 'a;

#[derive(Clone, Debug)]
pub struct KrylovConfig {
    pub rtol: f64,
    pub atol: f64,
    pub maxit: usize,
    /// Restart length; `None` means no restart.
    pub restart: Option<usize>,
    /// Run exactly this many iterations, ignoring the tolerances.
    pub fixed_its: Option<usize>,
}

impl KrylovConfig {
    pub fn new(rtol: f64, atol: f64, maxit: usize) -> Self {
        KrylovConfig { rtol, atol, maxit, restart: None, fixed_its: None }
    }

    pub fn fixed(its: usize) -> Self {
        KrylovConfig { rtol: 0.0, atol: 0.0, maxit: its, restart: None, fixed_its: Some(its) }
    }
}

#[derive(Clone, Debug, Default)]
pub struct KrylovReport {
    pub iterations: usize,
    /// ‖b − A x‖ recomputed at exit.
    pub residual: f64,
    pub rel_residual: f64,
    pub converged: bool,
    pub breakdown: bool,
    /// Residual estimates: initial norm followed by one entry per iteration.
    pub history: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &mut Operator, b: &[f64], x: &[f64], r: &mut [f64]) {
    a(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

fn solve(a: &mut Operator, p: &mut Operator, b: &[f64], x: &mut [f64], cfg: &KrylovConfig) -> KrylovReport {
    let n = b.len();
    let bnorm = norm(b);
    let mut rep = KrylovReport::default();
    if bnorm == 0.0 && cfg.fixed_its.is_none() {
        x.iter_mut().for_each(|v| *v = 0.0);
        rep.converged = true;
        rep.history.push(0.0);
        return rep;
    }
    let target = (cfg.rtol * bnorm).max(cfg.atol);
    let maxit = cfg.fixed_its.unwrap_or(cfg.maxit);
    let m = cfg.restart.unwrap_or(maxit).max(1);
    let mut r = vec![0.0; n];
    residual(a, b, x, &mut r);
    let mut rnorm = norm(&r);
    rep.history.push(rnorm);
    let mut vs: Vec<Vec<f64>> = Vec::new();
    let mut zs: Vec<Vec<f64>> = Vec::new();
    let mut total = 0;
    loop {
        if cfg.fixed_its.is_none() && rnorm <= target {
            rep.converged = true;
            break;
        }
        if rnorm == 0.0 || total >= maxit {
            rep.converged = rnorm <= target;
            break;
        }
        let beta = rnorm;
        vs.clear();
        zs.clear();
        vs.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        let mut lucky = false;
        for j in 0..m {
            let mut z = vec![0.0; n];
            p(&vs[j], &mut z);
            let mut w = vec![0.0; n];
            a(&z, &mut w);
            zs.push(z);
            for i in 0..=j {
                let hij = dot(&w, &vs[i]);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&vs[i]) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (hjj, hj1) = (h[j][j], h[j + 1][j]);
            let d = hjj.hypot(hj1);
            if d == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = hjj / d;
                sn[j] = hj1 / d;
            }
            h[j][j] = cs[j] * hjj + sn[j] * hj1;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            total += 1;
            k = j + 1;
            rep.history.push(g[j + 1].abs());
            if hn <= 1e-14 * beta {
                lucky = true;
                break;
            }
            vs.push(w.iter().map(|v| v / hn).collect());
            if cfg.fixed_its.is_some() {
                if total >= maxit {
                    break;
                }
            } else if g[j + 1].abs() <= target || total >= maxit {
                break;
            }
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in i + 1..k {
                s -= h[i][l] * y[l];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (yi, z) in y.iter().zip(&zs) {
            for (xk, zk) in x.iter_mut().zip(z) {
                *xk += yi * zk;
            }
        }
        residual(a, b, x, &mut r);
        rnorm = norm(&r);
        if lucky {
            rep.breakdown = true;
            rep.converged = rnorm <= target.max(1e-12 * bnorm);
            break;
        }
        if cfg.fixed_its.is_some() && total >= maxit {
            rep.converged = rnorm <= target;
            break;
        }
    }
    rep.iterations = total;
    rep.residual = rnorm;
    rep.rel_residual = if bnorm > 0.0 { rnorm / bnorm } else { 0.0 };
    rep
}

/// Flexible GMRES: the preconditioner may change between iterations.
pub fn fgmres(a: &mut Operator, p: &mut Operator, b: &[f64], x: &mut [f64], cfg: &KrylovConfig) -> KrylovReport {
    solve(a, p, b, x, cfg)
}

/// GMRES with a fixed right preconditioner; `fixed_its` gives smoother mode.
pub fn gmres(a: &mut Operator, p: &mut Operator, b: &[f64], x: &mut [f64], cfg: &KrylovConfig) -> KrylovReport {
    solve(a, p, b, x, cfg)
}
