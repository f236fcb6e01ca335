//! History weights for the discrete Caputo operator
//! D^a_N u^n = sum_{k=0}^{n-1} d[n][k] (u^{k+1} - u^k),
//! in the fitted (exact on 1 and t^a) and classical L1 variants.

use crate::mesh::GradedTemporalMesh;
use crate::specfun::{self, SpecFunConfig, SpecFunError};
use rayon::prelude::*;
use thiserror::Error;

/// Which temporal discretization generates the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Basis piecewise linear in t^a; exact on 1 and t^a.
    Fitted,
    /// Classical L1 approximation; exact on piecewise-linear histories.
    L1,
}

impl SchemeKind {
    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::Fitted => "fitted",
            SchemeKind::L1 => "l1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaputoError {
    #[error("fractional order must lie in (0, 1), got {0}")]
    OrderOutOfRange(f64),
    #[error("special function failure while building weights: {0}")]
    SpecFun(#[from] SpecFunError),
    #[error("history has {got} entries, level {level} needs {want}")]
    HistoryLength { level: usize, want: usize, got: usize },
    #[error("level {0} outside 1..=N")]
    LevelOutOfRange(usize),
    #[error("weight rows do not form a triangle (row {row} has length {len})")]
    MalformedRows { row: usize, len: usize },
}

/// Per-level history weights d[n][k] (1 <= n <= N, 0 <= k <= n-1) for one
/// fractional order and mesh, in difference form.
#[derive(Debug, Clone, PartialEq)]
pub struct CaputoWeightTable {
    alpha: f64,
    kind: SchemeKind,
    mesh: GradedTemporalMesh,
    /// rows[n-1] holds d[n][0..n]
    rows: Vec<Vec<f64>>,
    /// incomplete-Beta evaluations spent building the table (0 for L1)
    beta_evals: u64,
}

impl CaputoWeightTable {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn mesh(&self) -> &GradedTemporalMesh {
        &self.mesh
    }

    pub fn levels(&self) -> usize {
        self.rows.len()
    }

    /// d[n][0..n] for 1 <= n <= N.
    pub fn row(&self, n: usize) -> Result<&[f64], CaputoError> {
        if n == 0 || n > self.rows.len() {
            return Err(CaputoError::LevelOutOfRange(n));
        }
        Ok(&self.rows[n - 1])
    }

    /// Incomplete-Beta evaluation count spent on construction.
    pub fn beta_evals(&self) -> u64 {
        self.beta_evals
    }

    /// Applies the discrete operator to a nodal history u^0..u^n at one
    /// spatial point: sum_k d[n][k] (u^{k+1} - u^k), ascending k.
    pub fn apply(&self, history: &[f64], n: usize) -> Result<f64, CaputoError> {
        let row = self.row(n)?;
        if history.len() != n + 1 {
            return Err(CaputoError::HistoryLength {
                level: n,
                want: n + 1,
                got: history.len(),
            });
        }
        let mut acc = 0.0;
        for k in 0..n {
            acc += row[k] * (history[k + 1] - history[k]);
        }
        Ok(acc)
    }

    /// Nodal form Theta[0..n] with D^a_N u^n = sum_j Theta[j] u^j:
    /// Theta[n] = d[n][n-1], Theta[j] = d[n][j-1] - d[n][j], Theta[0] = -d[n][0].
    pub fn nodal_weights(&self, n: usize) -> Result<Vec<f64>, CaputoError> {
        let row = self.row(n)?;
        let mut theta = vec![0.0; n + 1];
        theta[0] = -row[0];
        for j in 1..n {
            theta[j] = row[j - 1] - row[j];
        }
        theta[n] = row[n - 1];
        Ok(theta)
    }

    /// Rebuilds a table from raw rows (row n must have length n); used for
    /// fault injection in verification tests.
    pub fn from_rows(
        mesh: GradedTemporalMesh,
        alpha: f64,
        kind: SchemeKind,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, CaputoError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CaputoError::OrderOutOfRange(alpha));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(CaputoError::MalformedRows {
                    row: i + 1,
                    len: row.len(),
                });
            }
        }
        Ok(CaputoWeightTable {
            alpha,
            kind,
            mesh,
            rows,
            beta_evals: 0,
        })
    }
}

/// Weights of the fitted discretization:
/// d[n][k] = (a / Gamma(1-a)) [B(t_{k+1}/t_n; a, 1-a) - B(t_k/t_n; a, 1-a)]
///           / (t_{k+1}^a - t_k^a).
pub fn fitted_weights(mesh: &GradedTemporalMesh, alpha: f64) -> Result<CaputoWeightTable, CaputoError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CaputoError::OrderOutOfRange(alpha));
    }
    let cfg = SpecFunConfig::default();
    let n_total = mesh.intervals();
    // ln(k) for k = 0..=N; index 0 unused
    let ln_idx: Vec<f64> = (0..=n_total)
        .map(|k| if k == 0 { f64::NEG_INFINITY } else { (k as f64).ln() })
        .collect();
    let coeff = alpha * (-specfun::lgamma_positive(1.0 - alpha)).exp();
    let bc = specfun::complete_beta(alpha, 1.0 - alpha)?;

    let build = |n: usize| fitted_row(mesh, alpha, n, &cfg, &ln_idx, coeff, bc);
    let results: Vec<Result<(Vec<f64>, u64), CaputoError>> = if n_total >= 64 {
        (1..=n_total).into_par_iter().map(build).collect()
    } else {
        (1..=n_total).map(build).collect()
    };
    let mut rows = Vec::with_capacity(n_total);
    let mut beta_evals = 0u64;
    for r in results {
        let (row, evals) = r?;
        rows.push(row);
        beta_evals += evals;
    }
    Ok(CaputoWeightTable {
        alpha,
        kind: SchemeKind::Fitted,
        mesh: mesh.clone(),
        rows,
        beta_evals,
    })
}

/// One fitted row. Incomplete-Beta endpoints are evaluated once each on
/// whichever side of 1/2 they fall (base 0 directly, base 1 through the
/// complement with an expm1-accurate 1 - z), so increments near either
/// endpoint avoid cancellation against the complete Beta.
fn fitted_row(
    mesh: &GradedTemporalMesh,
    alpha: f64,
    n: usize,
    cfg: &SpecFunConfig,
    ln_idx: &[f64],
    coeff: f64,
    bc: f64,
) -> Result<(Vec<f64>, u64), CaputoError> {
    let r = mesh.grading();
    let t = mesh.nodes();
    let mut evals = 0u64;

    // endpoint values: (value, on_one_side)
    // on_one_side = false: value = B(z_k; a, 1-a)
    // on_one_side = true:  value = B(1-z_k; 1-a, a) (complement integral)
    let mut endpoint = vec![(0.0f64, false); n + 1];
    endpoint[0] = (0.0, false);
    endpoint[n] = (0.0, true);
    for k in 1..n {
        let log_ratio = r * (ln_idx[k] - ln_idx[n]);
        let z = log_ratio.exp();
        if z <= 0.5 {
            let v = specfun::inc_beta_with(cfg, z, alpha, 1.0 - alpha)?;
            evals += 1;
            endpoint[k] = (v, false);
        } else {
            let w = -log_ratio.exp_m1();
            let v = specfun::inc_beta_with(cfg, w, 1.0 - alpha, alpha)?;
            evals += 1;
            endpoint[k] = (v, true);
        }
    }

    let mut row = Vec::with_capacity(n);
    for k in 0..n {
        let (v0, s0) = endpoint[k];
        let (v1, s1) = endpoint[k + 1];
        let psi = match (s0, s1) {
            (false, false) => v1 - v0,
            (false, true) => bc - v1 - v0,
            (true, true) => v0 - v1,
            (true, false) => unreachable!("z_k decreasing"),
        };
        let denom = if k == 0 {
            (alpha * t[1].ln()).exp()
        } else {
            // t_{k+1}^a (1 - exp(a (ln t_k - ln t_{k+1}))) without cancellation
            let ln_tk1 = t[k + 1].ln();
            let dln = r * (ln_idx[k] - ln_idx[k + 1]);
            -(alpha * ln_tk1).exp() * (alpha * dln).exp_m1()
        };
        row.push(coeff * psi / denom);
    }
    Ok((row, evals))
}

/// Weights of the classical L1 discretization:
/// d[n][k] = [(t_n - t_k)^{1-a} - (t_n - t_{k+1})^{1-a}] / (Gamma(2-a) tau_{k+1}).
pub fn l1_weights(mesh: &GradedTemporalMesh, alpha: f64) -> Result<CaputoWeightTable, CaputoError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CaputoError::OrderOutOfRange(alpha));
    }
    let inv_gamma = (-specfun::lgamma_positive(2.0 - alpha)).exp();
    let t = mesh.nodes();
    let tau = mesh.steps();
    let q = 1.0 - alpha;
    let n_total = mesh.intervals();
    let rows: Vec<Vec<f64>> = (1..=n_total)
        .map(|n| {
            (0..n)
                .map(|k| {
                    let a = (t[n] - t[k]).powf(q);
                    let b = if k + 1 == n { 0.0 } else { (t[n] - t[k + 1]).powf(q) };
                    inv_gamma * (a - b) / tau[k]
                })
                .collect()
        })
        .collect();
    Ok(CaputoWeightTable {
        alpha,
        kind: SchemeKind::L1,
        mesh: mesh.clone(),
        rows,
        beta_evals: 0,
    })
}

/// Builds the weight table for the requested scheme.
pub fn build_weights(
    mesh: &GradedTemporalMesh,
    alpha: f64,
    kind: SchemeKind,
) -> Result<CaputoWeightTable, CaputoError> {
    match kind {
        SchemeKind::Fitted => fitted_weights(mesh, alpha),
        SchemeKind::L1 => l1_weights(mesh, alpha),
    }
}
