//! Field snapshots: centroid samples of u, p, E and B plus the coefficients
//! they were computed from.

use std::path::{Path, PathBuf};

use mhdal::assembly::Discretization;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    /// Coefficient vectors of u, p, E and B.
    pub coefficients: [Vec<f64>; 4],
    pub centroids: Vec<[f64; 2]>,
    pub u: Vec<[f64; 2]>,
    pub p: Vec<f64>,
    pub e: Vec<f64>,
    pub b: Vec<[f64; 2]>,
}

pub const FIELDS: [&str; 4] = ["u", "p", "E", "B"];

impl FieldSnapshot {
    pub fn new(d: &Discretization, x: &[f64], t: f64) -> Self {
        let m = &d.mesh;
        let centroids: Vec<[f64; 2]> = (0..m.num_cells()).map(|c| m.cell_centroid(c)).collect();
        let vec2 = |v: Vec<f64>| [v[0], v[1]];
        let cells = || centroids.iter().enumerate();
        FieldSnapshot {
            t,
            coefficients: [d.u(x).to_vec(), d.p(x).to_vec(), d.e(x).to_vec(), d.b(x).to_vec()],
            u: cells().map(|(c, &q)| vec2(d.vu.eval(d.u(x), c, q).0)).collect(),
            p: cells().map(|(c, &q)| d.vp.eval(d.p(x), c, q).0[0]).collect(),
            e: cells().map(|(c, &q)| d.ve.eval(d.e(x), c, q).0[0]).collect(),
            b: cells().map(|(c, &q)| vec2(d.vb.eval(d.b(x), c, q).0)).collect(),
            centroids,
        }
    }

    /// Largest difference between the stored samples and a fresh evaluation
    /// of the stored coefficients.
    pub fn sample_defect(&self, d: &Discretization) -> f64 {
        let mut x = Vec::with_capacity(d.ndofs());
        self.coefficients.iter().for_each(|c| x.extend_from_slice(c));
        let fresh = FieldSnapshot::new(d, &x, self.t);
        let pairs = |a: &[[f64; 2]], b: &[[f64; 2]]| a.iter().zip(b).map(|(p, q)| (p[0] - q[0]).abs().max((p[1] - q[1]).abs())).fold(0.0, f64::max);
        let scal = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        pairs(&self.u, &fresh.u).max(pairs(&self.b, &fresh.b)).max(scal(&self.p, &fresh.p)).max(scal(&self.e, &fresh.e))
    }

    /// Write `<field>_<index>.csv` (centroid samples) and
    /// `<field>_coeffs_<index>.csv` for every field; returns the sample paths.
    pub fn write(&self, dir: &Path, index: usize) -> std::io::Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for (f, name) in FIELDS.iter().enumerate() {
            let path = dir.join(format!("{name}_{index:05}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            let vector = f == 0 || f == 3;
            if vector {
                w.write_record(["t", "cell", "x", "y", &format!("{name}_x"), &format!("{name}_y")])?;
            } else {
                w.write_record(["t", "cell", "x", "y", name])?;
            }
            for (c, q) in self.centroids.iter().enumerate() {
                let mut rec = vec![self.t.to_string(), c.to_string(), q[0].to_string(), q[1].to_string()];
                match f {
                    0 => rec.extend(self.u[c].iter().map(f64::to_string)),
                    1 => rec.push(self.p[c].to_string()),
                    2 => rec.push(self.e[c].to_string()),
                    _ => rec.extend(self.b[c].iter().map(f64::to_string)),
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
            let mut w = csv::Writer::from_path(dir.join(format!("{name}_coeffs_{index:05}.csv")))?;
            w.write_record(["dof", "value"])?;
            for (i, v) in self.coefficients[f].iter().enumerate() {
                w.write_record([i.to_string(), v.to_string()])?;
            }
            w.flush()?;
            out.push(path);
        }
        Ok(out)
    }
}
