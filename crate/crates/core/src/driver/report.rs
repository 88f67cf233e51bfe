//! Per-solve iteration records and their CSV form.

use std::fmt::Write as _;

/// Why a solve did not converge.
#[derive(Clone, Debug, PartialEq)]
pub enum Failure {
    /// The outer Krylov solve hit its iteration cap.
    Linear { maxit: usize },
    /// The nonlinear iteration hit its step cap.
    MaxIterations,
    /// Residual blew up or became non-finite.
    Diverged,
    /// Assembly or preconditioner setup failed.
    Setup(String),
}

/// One row of the report: a stationary solve, a continuation cell or a time step.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub stage: String,
    pub s: f64,
    pub re: f64,
    pub re_m: f64,
    pub dt: f64,
    pub t: f64,
    pub newton_its: usize,
    /// Outer Krylov iterations of every nonlinear step.
    pub krylov: Vec<usize>,
    pub avg_krylov: f64,
    pub initial_residual: f64,
    /// Residual norms, initial value first.
    pub residuals: Vec<f64>,
    pub res_norm: f64,
    pub div_u: f64,
    pub div_b: f64,
    pub secs_per_linear_it: f64,
    pub failure: Option<Failure>,
}

impl StepRecord {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }

    pub fn mean(counts: &[usize]) -> f64 {
        if counts.is_empty() {
            0.0
        } else {
            counts.iter().sum::<usize>() as f64 / counts.len() as f64
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct IterationReport {
    pub rows: Vec<StepRecord>,
}

pub const CSV_HEADER: &str = "stage,S,Re,Rem,dt,t,newton_its,avg_krylov,res_norm,div_u,div_B,secs_per_linear_it";

impl IterationReport {
    pub fn push(&mut self, r: StepRecord) {
        self.rows.push(r);
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged())
    }

    /// Mean of the per-row nonlinear iteration counts.
    pub fn avg_newton(&self) -> f64 {
        let its: Vec<usize> = self.rows.iter().map(|r| r.newton_its).collect();
        StepRecord::mean(&its)
    }

    /// Mean outer Krylov count over all nonlinear steps of all rows.
    pub fn avg_krylov(&self) -> f64 {
        let all: Vec<usize> = self.rows.iter().flat_map(|r| r.krylov.iter().copied()).collect();
        StepRecord::mean(&all)
    }

    /// CSV with failure markers: "-" for nonlinear failures and ">N" for an
    /// outer solve that hit its cap of N iterations.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let newton = match r.failure {
                None | Some(Failure::Linear { .. }) => r.newton_its.to_string(),
                Some(_) => "-".to_string(),
            };
            let krylov = match r.failure {
                Some(Failure::Linear { maxit }) => format!(">{maxit}"),
                _ => format!("{:.4}", r.avg_krylov),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.6},{},{},{:.6e},{:.6e},{:.6e},{:.6e}",
                r.stage, r.s, r.re, r.re_m, r.dt, r.t, newton, krylov, r.res_norm, r.div_u, r.div_b, r.secs_per_linear_it
            );
        }
        s
    }
}
