//! Cell and facet kernels.

use super::{AssemblyInput, BlockSystem, Coupling};
use crate::femspace::{cell_quadrature, facet_quadrature, FunctionSpace, Tab};
use crate::linalg::{CsrMatrix, TripletBuilder};

#[inline]
fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn sym(g: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let o = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], o], [o, g[1][1]]]
}

#[inline]
fn ddot(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

#[inline]
fn matn(a: [[f64; 2]; 2], n: [f64; 2]) -> [f64; 2] {
    [a[0][0] * n[0] + a[0][1] * n[1], a[1][0] * n[0] + a[1][1] * n[1]]
}

#[inline]
fn heaviside(a: f64) -> f64 {
    if a > 0.0 {
        1.0
    } else if a < 0.0 {
        0.0
    } else {
        0.5
    }
}

fn vec_at(t: &Tab, q: usize, x: &[f64], dofs: &[usize]) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut v = [0.0; 2];
    let mut g = [[0.0; 2]; 2];
    for (i, &d) in dofs.iter().enumerate() {
        let c = x[d];
        let p = t.vec(q, i);
        let gi = t.vgrad(q, i);
        v[0] += c * p[0];
        v[1] += c * p[1];
        for r in 0..2 {
            for s in 0..2 {
                g[r][s] += c * gi[r][s];
            }
        }
    }
    (v, g)
}

fn scal_at(t: &Tab, q: usize, x: &[f64], dofs: &[usize]) -> (f64, [f64; 2]) {
    let mut v = 0.0;
    let mut g = [0.0; 2];
    for (i, &d) in dofs.iter().enumerate() {
        let c = x[d];
        v += c * t.v(q, i, 0);
        let gi = t.sgrad(q, i);
        g[0] += c * gi[0];
        g[1] += c * gi[1];
    }
    (v, g)
}

struct Params {
    re: f64,
    rem: f64,
    s: f64,
    gamma: f64,
    sigma: f64,
    mu: f64,
    coef: f64,
    qv: usize,
    qf: usize,
}

impl Params {
    fn new(inp: &AssemblyInput) -> Self {
        let k = inp.disc.degree;
        Params {
            re: inp.cfg.re,
            rem: inp.cfg.re_m,
            s: inp.cfg.s,
            gamma: inp.cfg.gamma,
            sigma: inp.cfg.sigma(),
            mu: inp.cfg.mu,
            coef: inp.time_terms.map_or(0.0, |t| t.coef),
            qv: 2 * k + 2,
            qf: 2 * k + 3,
        }
    }
}

/// Coefficients of I_RT(g) at the current time, when requested.
fn induction_interpolant(inp: &AssemblyInput) -> Option<Vec<f64>> {
    if let Some(v) = inp.induction_interp {
        return Some(v.to_vec());
    }
    if !inp.spec.interpolate_induction_source {
        return None;
    }
    let g = inp.spec.induction_source.as_ref()?;
    let t = inp.time;
    let vb = &inp.disc.vb;
    Some(vb.interpolate_vector(|p| g(p, t), inp.spec.interp_degree.unwrap_or(vb.default_interp_degree())))
}

struct FacetSide {
    cell: usize,
    pts: Vec<[f64; 2]>,
    tab: Tab,
}

fn facet_side(vu: &FunctionSpace, c: usize, local: usize, qf: usize) -> (FacetSide, Vec<f64>) {
    let (pts, wts) = facet_quadrature(vu.mesh(), c, local, qf);
    let tab = vu.tabulate(c, &pts);
    (FacetSide { cell: c, pts, tab }, wts)
}

pub(super) fn residual(inp: &AssemblyInput, x: &[f64], coupling: Coupling) -> Vec<f64> {
    let d = inp.disc;
    let prm = Params::new(inp);
    let mesh = &d.mesh;
    let t = inp.time;
    let o = d.offsets;
    let mut r = vec![0.0; d.ndofs()];
    let (xu, xp, xe, xb) = (d.u(x), d.p(x), d.e(x), d.b(x));
    let frozen_b = match coupling {
        Coupling::Full => xb,
        Coupling::FrozenField(f) => d.b(f),
    };
    let refs = inp.time_terms.map(|tt| (d.u(&tt.reference), d.b(&tt.reference)));
    let g_interp = induction_interpolant(inp);
    let (mut tu, mut tp, mut te, mut tb) = (Tab::default(), Tab::default(), Tab::default(), Tab::default());
    for c in 0..mesh.num_cells() {
        let (pts, wts) = cell_quadrature(mesh, c, prm.qv);
        d.vu.tabulate_into(c, &pts, &mut tu);
        d.vp.tabulate_into(c, &pts, &mut tp);
        d.ve.tabulate_into(c, &pts, &mut te);
        d.vb.tabulate_into(c, &pts, &mut tb);
        let (du, dp, de, db) = (d.vu.cell_dofs(c), d.vp.cell_dofs(c), d.ve.cell_dofs(c), d.vb.cell_dofs(c));
        for (q, &w) in wts.iter().enumerate() {
            let x_q = pts[q];
            let (u, gu) = vec_at(&tu, q, xu, du);
            let (p, _) = scal_at(&tp, q, xp, dp);
            let (e, ge) = scal_at(&te, q, xe, de);
            let (b, gb) = vec_at(&tb, q, xb, db);
            let bc = match coupling {
                Coupling::Full => b,
                Coupling::FrozenField(_) => vec_at(&tb, q, frozen_b, db).0,
            };
            let divu = gu[0][0] + gu[1][1];
            let divb = gb[0][0] + gb[1][1];
            let eps = sym(gu);
            let wxb = cross(u, bc);
            let (mut utime, mut btime) = ([0.0; 2], [0.0; 2]);
            if let Some((ur, br)) = refs {
                let (u0, _) = vec_at(&tu, q, ur, du);
                let (b0, _) = vec_at(&tb, q, br, db);
                utime = [prm.coef * (u[0] - u0[0]), prm.coef * (u[1] - u0[1])];
                btime = [prm.coef * (b[0] - b0[0]), prm.coef * (b[1] - b0[1])];
            }
            let f = inp.spec.force.as_ref().map_or([0.0; 2], |f| f(x_q, t));
            let so = inp.spec.ohm_source.as_ref().map_or(0.0, |f| f(x_q, t));
            let g = match &g_interp {
                Some(gi) => vec_at(&tb, q, gi, db).0,
                None => inp.spec.induction_source.as_ref().map_or([0.0; 2], |f| f(x_q, t)),
            };
            for i in 0..tu.n {
                let phi = tu.vec(q, i);
                let gp = tu.vgrad(q, i);
                let dv = gp[0][0] + gp[1][1];
                let pxb = cross(phi, bc);
                let mut adv = 0.0;
                for rr in 0..2 {
                    for cc in 0..2 {
                        adv += u[rr] * u[cc] * gp[rr][cc];
                    }
                }
                let val = dot(utime, phi) + 2.0 / prm.re * ddot(eps, gp) - adv + prm.gamma * divu * dv - p * dv
                    + prm.s * e * pxb
                    + prm.s * wxb * pxb
                    - dot(f, phi);
                r[o[0] + du[i]] += w * val;
            }
            for i in 0..tp.n {
                r[o[1] + dp[i]] -= w * divu * tp.v(q, i, 0);
            }
            for i in 0..te.n {
                let ri = te.v(q, i, 0);
                let gr = te.sgrad(q, i);
                let vc = [gr[1], -gr[0]];
                r[o[2] + de[i]] += w * ((e + wxb - so) * ri - dot(b, vc) / prm.rem);
            }
            let vce = [ge[1], -ge[0]];
            for i in 0..tb.n {
                let ci = tb.vec(q, i);
                let val = dot(btime, ci) + divb * tb.div(q, i) / prm.rem + dot(vce, ci) - dot(g, ci);
                r[o[3] + db[i]] += w * val;
            }
        }
    }
    facet_residual(inp, &prm, xu, &mut r);
    r
}

fn facet_residual(inp: &AssemblyInput, prm: &Params, xu: &[f64], r: &mut [f64]) {
    let d = inp.disc;
    let mesh = &d.mesh;
    let vu = &d.vu;
    let o = d.offsets[0];
    let t = inp.time;
    for fct in mesh.facets() {
        let n = fct.normal;
        let h = fct.length;
        let pen = prm.sigma / h / prm.re;
        if fct.is_boundary() {
            let (s0, wts) = facet_side(vu, fct.cells[0], fct.local[0], prm.qf);
            let du = vu.cell_dofs(s0.cell);
            for (q, &w) in wts.iter().enumerate() {
                let (u, gu) = vec_at(&s0.tab, q, xu, du);
                let g = inp.spec.u_bc.as_ref().map_or([0.0; 2], |f| f(s0.pts[q], t));
                let en = matn(sym(gu), n);
                let dif = [u[0] - g[0], u[1] - g[1]];
                let un = dot(u, n);
                let flux = [un.max(0.0) * u[0] + un.min(0.0) * g[0], un.max(0.0) * u[1] + un.min(0.0) * g[1]];
                for i in 0..s0.tab.n {
                    let phi = s0.tab.vec(q, i);
                    let epn = matn(sym(s0.tab.vgrad(q, i)), n);
                    let val = -2.0 / prm.re * dot(en, phi) - 2.0 / prm.re * dot(dif, epn) + pen * dot(dif, phi) + dot(flux, phi);
                    r[o + du[i]] += w * val;
                }
            }
        } else {
            let (s0, wts) = facet_side(vu, fct.cells[0], fct.local[0], prm.qf);
            let (s1, _) = facet_side(vu, fct.cells[1], fct.local[1], prm.qf);
            let d0 = vu.cell_dofs(s0.cell);
            let d1 = vu.cell_dofs(s1.cell);
            for (q, &w) in wts.iter().enumerate() {
                let (u0, g0) = vec_at(&s0.tab, q, xu, d0);
                let (u1, g1) = vec_at(&s1.tab, q, xu, d1);
                let e0 = matn(sym(g0), n);
                let e1 = matn(sym(g1), n);
                let avg_en = [0.5 * (e0[0] + e1[0]), 0.5 * (e0[1] + e1[1])];
                let ju = [u0[0] - u1[0], u0[1] - u1[1]];
                let a = 0.5 * (dot(u0, n) + dot(u1, n));
                let flux = [a.max(0.0) * u0[0] + a.min(0.0) * u1[0], a.max(0.0) * u0[1] + a.min(0.0) * u1[1]];
                let mut jg = [[0.0; 2]; 2];
                for rr in 0..2 {
                    for cc in 0..2 {
                        jg[rr][cc] = g0[rr][cc] - g1[rr][cc];
                    }
                }
                let stab = prm.mu * h * h;
                for (side, dofs, sg) in [(&s0, d0, 1.0), (&s1, d1, -1.0)] {
                    for i in 0..side.tab.n {
                        let phi = side.tab.vec(q, i);
                        let gp = side.tab.vgrad(q, i);
                        let epn = matn(sym(gp), n);
                        let val = sg * (-2.0 / prm.re * dot(avg_en, phi) + pen * dot(ju, phi) + dot(flux, phi) + stab * ddot(jg, gp))
                            - 1.0 / prm.re * dot(ju, epn);
                        r[o + dofs[i]] += w * val;
                    }
                }
            }
        }
    }
}

/// Dense local element matrix flushed into a triplet builder.
struct Local {
    n: usize,
    m: usize,
    a: Vec<f64>,
}

impl Local {
    fn new(n: usize, m: usize) -> Self {
        Local { n, m, a: vec![0.0; n * m] }
    }
    fn clear(&mut self) {
        self.a.iter_mut().for_each(|v| *v = 0.0);
    }
    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.m + j] += v;
    }
    fn flush(&self, b: &mut TripletBuilder, rows: &[usize], cols: &[usize]) {
        for i in 0..self.n {
            for j in 0..self.m {
                let v = self.a[i * self.m + j];
                if v != 0.0 {
                    b.push(rows[i], cols[j], v);
                }
            }
        }
    }
}

pub(super) fn jacobian(inp: &AssemblyInput, x: &[f64], newton: bool) -> BlockSystem {
    let d = inp.disc;
    let prm = Params::new(inp);
    let mesh = &d.mesh;
    let (nu, np, ne, nb) = (d.vu.ndofs(), d.vp.ndofs(), d.ve.ndofs(), d.vb.ndofs());
    let (xu, xe, xb) = (d.u(x), d.e(x), d.b(x));
    let mut bf = TripletBuilder::new(nu, nu);
    let mut bd = TripletBuilder::new(nu, nu);
    let mut bbt = TripletBuilder::new(nu, np);
    let mut bj = TripletBuilder::new(nu, ne);
    let mut bjt = TripletBuilder::new(nu, nb);
    let mut bd1 = TripletBuilder::new(nu, nb);
    let mut bd2 = TripletBuilder::new(nu, nb);
    let mut bme = TripletBuilder::new(ne, ne);
    let mut bg = TripletBuilder::new(ne, nu);
    let mut bgt = TripletBuilder::new(ne, nb);
    let mut ba = TripletBuilder::new(ne, nb);
    let mut bc_ = TripletBuilder::new(nb, nb);
    let (lu, lp, le, lb) = (d.vu.ldofs(), d.vp.ldofs(), d.ve.ldofs(), d.vb.ldofs());
    let mut lf = Local::new(lu, lu);
    let mut ld = Local::new(lu, lu);
    let mut lbt = Local::new(lu, lp);
    let mut lj = Local::new(lu, le);
    let mut ljt = Local::new(lu, lb);
    let mut ld1 = Local::new(lu, lb);
    let mut ld2 = Local::new(lu, lb);
    let mut lme = Local::new(le, le);
    let mut lg = Local::new(le, lu);
    let mut lgt = Local::new(le, lb);
    let mut la = Local::new(le, lb);
    let mut lc = Local::new(lb, lb);
    let (mut tu, mut tp, mut te, mut tb) = (Tab::default(), Tab::default(), Tab::default(), Tab::default());
    let mut pxb = vec![0.0; lu];
    for c in 0..mesh.num_cells() {
        let (pts, wts) = cell_quadrature(mesh, c, prm.qv);
        d.vu.tabulate_into(c, &pts, &mut tu);
        d.vp.tabulate_into(c, &pts, &mut tp);
        d.ve.tabulate_into(c, &pts, &mut te);
        d.vb.tabulate_into(c, &pts, &mut tb);
        let (du, dp, de, db) = (d.vu.cell_dofs(c), d.vp.cell_dofs(c), d.ve.cell_dofs(c), d.vb.cell_dofs(c));
        for l in [&mut lf, &mut ld, &mut lbt, &mut lj, &mut ljt, &mut ld1, &mut ld2, &mut lme, &mut lg, &mut lgt, &mut la, &mut lc] {
            l.clear();
        }
        for (q, &w) in wts.iter().enumerate() {
            let (u, _) = vec_at(&tu, q, xu, du);
            let (e, _) = scal_at(&te, q, xe, de);
            let (b, _) = vec_at(&tb, q, xb, db);
            let wxb = cross(u, b);
            for i in 0..lu {
                pxb[i] = cross(tu.vec(q, i), b);
            }
            for i in 0..lu {
                let pi = tu.vec(q, i);
                let gi = tu.vgrad(q, i);
                let ei = sym(gi);
                let di = gi[0][0] + gi[1][1];
                for j in 0..lu {
                    let pj = tu.vec(q, j);
                    let gj = tu.vgrad(q, j);
                    let dj = gj[0][0] + gj[1][1];
                    let mut adv = 0.0;
                    for rr in 0..2 {
                        for cc in 0..2 {
                            adv += (pj[rr] * u[cc] + u[rr] * pj[cc]) * gi[rr][cc];
                        }
                    }
                    let v = prm.coef * dot(pj, pi) + 2.0 / prm.re * ddot(sym(gj), ei) - adv + prm.gamma * dj * di;
                    lf.add(i, j, w * v);
                    ld.add(i, j, w * prm.s * pxb[j] * pxb[i]);
                }
                for j in 0..lp {
                    lbt.add(i, j, -w * tp.v(q, j, 0) * di);
                }
                for j in 0..le {
                    lj.add(i, j, w * prm.s * te.v(q, j, 0) * pxb[i]);
                }
                if newton {
                    for j in 0..lb {
                        let cj = tb.vec(q, j);
                        ljt.add(i, j, w * prm.s * e * cross(pi, cj));
                        ld1.add(i, j, w * prm.s * cross(u, cj) * pxb[i]);
                        ld2.add(i, j, w * prm.s * wxb * cross(pi, cj));
                    }
                }
            }
            for i in 0..le {
                let ri = te.v(q, i, 0);
                let gr = te.sgrad(q, i);
                let vc = [gr[1], -gr[0]];
                for j in 0..le {
                    lme.add(i, j, w * te.v(q, j, 0) * ri);
                }
                for j in 0..lu {
                    lg.add(i, j, w * pxb[j] * ri);
                }
                for j in 0..lb {
                    let cj = tb.vec(q, j);
                    la.add(i, j, w * dot(cj, vc));
                    if newton {
                        lgt.add(i, j, w * cross(u, cj) * ri);
                    }
                }
            }
            for i in 0..lb {
                let ci = tb.vec(q, i);
                let dci = tb.div(q, i);
                for j in 0..lb {
                    let v = prm.coef * dot(tb.vec(q, j), ci) + tb.div(q, j) * dci / prm.rem;
                    lc.add(i, j, w * v);
                }
            }
        }
        lf.flush(&mut bf, du, du);
        ld.flush(&mut bd, du, du);
        lbt.flush(&mut bbt, du, dp);
        lj.flush(&mut bj, du, de);
        lme.flush(&mut bme, de, de);
        lg.flush(&mut bg, de, du);
        la.flush(&mut ba, de, db);
        lc.flush(&mut bc_, db, db);
        if newton {
            ljt.flush(&mut bjt, du, db);
            ld1.flush(&mut bd1, du, db);
            ld2.flush(&mut bd2, du, db);
            lgt.flush(&mut bgt, de, db);
        }
    }
    facet_jacobian(inp, &prm, xu, &mut bf);

    let mut f = bf.build();
    let mut dd = bd.build();
    let mut bt = bbt.build();
    let mut j = bj.build();
    let mut me = bme.build();
    let mut g = bg.build();
    let mut a = ba.build();
    let mut c = bc_.build();
    let (mut jt, mut d1t, mut d2t, mut gt) = if newton {
        (Some(bjt.build()), Some(bd1.build()), Some(bd2.build()), Some(bgt.build()))
    } else {
        (None, None, None, None)
    };
    // strong u·n, E and B·n rows/columns
    let (um, em, bm) = (&d.u_mask, &d.e_mask, &d.b_mask);
    f.eliminate_symmetric(um, 1.0);
    dd.zero_rows_cols(Some(um), Some(um));
    bt.zero_rows_cols(Some(um), None);
    let b = bt.transpose();
    g.zero_rows_cols(None, Some(um));
    me.eliminate_symmetric(em, 1.0);
    c.eliminate_symmetric(bm, 1.0);
    j.zero_rows_cols(Some(um), Some(em));
    g.zero_rows_cols(Some(em), None);
    a.zero_rows_cols(Some(em), Some(bm));
    for m in [&mut jt, &mut d1t, &mut d2t].into_iter().flatten() {
        m.zero_rows_cols(Some(um), Some(bm));
    }
    if let Some(m) = gt.as_mut() {
        m.zero_rows_cols(Some(em), Some(bm));
    }
    let at = a.transpose();
    BlockSystem {
        newton,
        offsets: d.offsets,
        re_m: prm.rem,
        f,
        d: dd,
        bt,
        j,
        jt,
        d1t,
        d2t,
        b,
        me,
        g,
        gt,
        a,
        at,
        c,
        u_bc: d.u_bc.clone(),
        e_bc: d.e_bc.clone(),
        b_bc: d.b_bc.clone(),
    }
}

fn facet_jacobian(inp: &AssemblyInput, prm: &Params, xu: &[f64], bf: &mut TripletBuilder) {
    let d = inp.disc;
    let mesh = &d.mesh;
    let vu = &d.vu;
    let t = inp.time;
    let lu = vu.ldofs();
    let mut lb = Local::new(lu, lu);
    let mut li = Local::new(2 * lu, 2 * lu);
    let mut dofs2 = vec![0; 2 * lu];
    for fct in mesh.facets() {
        let n = fct.normal;
        let h = fct.length;
        let pen = prm.sigma / h / prm.re;
        if fct.is_boundary() {
            lb.clear();
            let (s0, wts) = facet_side(vu, fct.cells[0], fct.local[0], prm.qf);
            let du = vu.cell_dofs(s0.cell);
            for (q, &w) in wts.iter().enumerate() {
                let (u, _) = vec_at(&s0.tab, q, xu, du);
                let g = inp.spec.u_bc.as_ref().map_or([0.0; 2], |f| f(s0.pts[q], t));
                let un = dot(u, n);
                let hv = heaviside(un);
                let up = [hv * u[0] + (1.0 - hv) * g[0], hv * u[1] + (1.0 - hv) * g[1]];
                for i in 0..lu {
                    let pi = s0.tab.vec(q, i);
                    let epi = matn(sym(s0.tab.vgrad(q, i)), n);
                    for j in 0..lu {
                        let pj = s0.tab.vec(q, j);
                        let epj = matn(sym(s0.tab.vgrad(q, j)), n);
                        let v = -2.0 / prm.re * (dot(epj, pi) + dot(pj, epi))
                            + pen * dot(pj, pi)
                            + un.max(0.0) * dot(pj, pi)
                            + dot(up, pi) * dot(pj, n);
                        lb.add(i, j, w * v);
                    }
                }
            }
            lb.flush(bf, du, du);
        } else {
            li.clear();
            let (s0, wts) = facet_side(vu, fct.cells[0], fct.local[0], prm.qf);
            let (s1, _) = facet_side(vu, fct.cells[1], fct.local[1], prm.qf);
            let d0 = vu.cell_dofs(s0.cell);
            let d1 = vu.cell_dofs(s1.cell);
            dofs2[..lu].copy_from_slice(d0);
            dofs2[lu..].copy_from_slice(d1);
            let stab = prm.mu * h * h;
            for (q, &w) in wts.iter().enumerate() {
                let (u0, _) = vec_at(&s0.tab, q, xu, d0);
                let (u1, _) = vec_at(&s1.tab, q, xu, d1);
                let a = 0.5 * (dot(u0, n) + dot(u1, n));
                let hv = heaviside(a);
                let up = [hv * u0[0] + (1.0 - hv) * u1[0], hv * u0[1] + (1.0 - hv) * u1[1]];
                let side = |k: usize| if k < lu { (&s0.tab, k, 1.0) } else { (&s1.tab, k - lu, -1.0) };
                for ii in 0..2 * lu {
                    let (ti, i, si) = side(ii);
                    let pi = ti.vec(q, i);
                    let gi = ti.vgrad(q, i);
                    let epi = matn(sym(gi), n);
                    for jj in 0..2 * lu {
                        let (tj, j, sj) = side(jj);
                        let pj = tj.vec(q, j);
                        let gj = tj.vgrad(q, j);
                        let epj = matn(sym(gj), n);
                        let coef_u = if sj > 0.0 { a.max(0.0) } else { a.min(0.0) };
                        let v = -1.0 / prm.re * si * dot(epj, pi) - 1.0 / prm.re * sj * dot(pj, epi)
                            + pen * si * sj * dot(pj, pi)
                            + si * (coef_u * dot(pj, pi) + 0.5 * dot(pj, n) * dot(up, pi))
                            + stab * si * sj * ddot(gj, gi);
                        li.add(ii, jj, w * v);
                    }
                }
            }
            li.flush(bf, &dofs2, &dofs2);
        }
    }
}

/// Mass matrix of any space.
pub fn mass_matrix(space: &FunctionSpace) -> CsrMatrix {
    let mesh = space.mesh();
    let n = space.ldofs();
    let vd = space.element().value_dim();
    let qdeg = 2 * space.element().degree + 2;
    let mut b = TripletBuilder::new(space.ndofs(), space.ndofs());
    let mut l = Local::new(n, n);
    let mut t = Tab::default();
    for c in 0..mesh.num_cells() {
        let (pts, wts) = cell_quadrature(mesh, c, qdeg);
        space.tabulate_into(c, &pts, &mut t);
        l.clear();
        for (q, &w) in wts.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = (0..vd).map(|k| t.v(q, i, k) * t.v(q, j, k)).sum();
                    l.add(i, j, w * v);
                }
            }
        }
        let dofs = space.cell_dofs(c);
        l.flush(&mut b, dofs, dofs);
    }
    b.build()
}

/// Gradient-jump stabilisation Σ_F μ h_F² ∫_F [[∇u]]:[[∇v]] on interior facets.
pub fn stabilization_matrix(space: &FunctionSpace, mu: f64) -> CsrMatrix {
    let mesh = space.mesh();
    let n = space.ldofs();
    let vd = space.element().value_dim();
    let qf = 2 * space.element().degree + 3;
    let mut b = TripletBuilder::new(space.ndofs(), space.ndofs());
    let mut l = Local::new(2 * n, 2 * n);
    let mut dofs2 = vec![0; 2 * n];
    for fct in mesh.facets() {
        if fct.is_boundary() {
            continue;
        }
        l.clear();
        let (s0, wts) = facet_side(space, fct.cells[0], fct.local[0], qf);
        let (s1, _) = facet_side(space, fct.cells[1], fct.local[1], qf);
        dofs2[..n].copy_from_slice(space.cell_dofs(s0.cell));
        dofs2[n..].copy_from_slice(space.cell_dofs(s1.cell));
        let scale = mu * fct.length * fct.length;
        for (q, &w) in wts.iter().enumerate() {
            let side = |k: usize| if k < n { (&s0.tab, k, 1.0) } else { (&s1.tab, k - n, -1.0) };
            for ii in 0..2 * n {
                let (ti, i, si) = side(ii);
                for jj in 0..2 * n {
                    let (tj, j, sj) = side(jj);
                    let mut v = 0.0;
                    for comp in 0..vd {
                        for dd in 0..2 {
                            v += ti.g(q, i, comp, dd) * tj.g(q, j, comp, dd);
                        }
                    }
                    l.add(ii, jj, w * scale * si * sj * v);
                }
            }
        }
        l.flush(&mut b, &dofs2, &dofs2);
    }
    b.build()
}
