//! Time-marching solution of the discrete problem: at each level n solve the
//! tridiagonal system coupling the discrete Caputo operator, the second
//! difference -p d2/dx2, and the reaction term c(x).

use crate::caputo::{self, CaputoError, CaputoWeightTable, SchemeKind};
use crate::mesh::{GradedTemporalMesh, UniformSpatialGrid};
use crate::problems::ProblemSpec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("weight construction failed: {0}")]
    Weights(#[from] CaputoError),
    #[error("problem domain (l = {problem_l}, T = {problem_t}) does not match grids (l = {grid_l}, T = {grid_t})")]
    InconsistentDomain {
        problem_l: f64,
        problem_t: f64,
        grid_l: f64,
        grid_t: f64,
    },
    #[error("invalid problem data: {0}")]
    InvalidProblem(String),
    #[error("non-positive pivot {pivot:.6e} at level {level}, interior index {index}; the weight table violates the M-matrix structure")]
    NonPositivePivot {
        level: usize,
        index: usize,
        pivot: f64,
    },
}

/// Dense nodal solution u^n_m on the space-time grid, stored row-major by
/// time level. Immutable after the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    values: Vec<f64>,
    spatial: UniformSpatialGrid,
    temporal: GradedTemporalMesh,
    alpha: f64,
    kind: SchemeKind,
    problem_id: String,
    history_ops: u64,
}

impl SolutionGrid {
    pub fn value(&self, n: usize, m: usize) -> f64 {
        self.values[n * (self.spatial.intervals() + 1) + m]
    }

    /// Nodal values at time level n.
    pub fn time_row(&self, n: usize) -> &[f64] {
        let w = self.spatial.intervals() + 1;
        &self.values[n * w..(n + 1) * w]
    }

    pub fn spatial(&self) -> &UniformSpatialGrid {
        &self.spatial
    }

    pub fn temporal(&self) -> &GradedTemporalMesh {
        &self.temporal
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn problem_id(&self) -> &str {
        &self.problem_id
    }

    /// Multiply-add operations spent in history sums (cost-model diagnostics).
    pub fn history_ops(&self) -> u64 {
        self.history_ops
    }
}

/// -p times the second difference of a nodal row, at the M-1 interior points.
pub fn discrete_laplacian(row: &[f64], h: f64, p: f64) -> Vec<f64> {
    debug_assert!(row.len() >= 3);
    let scale = p / (h * h);
    row.windows(3)
        .map(|w| -scale * (w[2] - 2.0 * w[1] + w[0]))
        .collect()
}

/// Marches the scheme over the full grid.
///
/// Level n solves, for interior m,
/// (Theta_nn + 2p/h^2 + c(x_m)) u^n_m - (p/h^2)(u^n_{m+1} + u^n_{m-1})
///     = f(x_m, t_n) - sum_{k<n} Theta_nk u^k_m,
/// with zero boundary values. The history sum runs in fixed ascending k
/// order, so repeated runs are bitwise identical.
pub fn solve(
    problem: &ProblemSpec,
    spatial: &UniformSpatialGrid,
    temporal: &GradedTemporalMesh,
    alpha: f64,
    kind: SchemeKind,
) -> Result<SolutionGrid, SolveError> {
    check_domain(problem, spatial, temporal)?;
    let table = caputo::build_weights(temporal, alpha, kind)?;
    solve_with_table(problem, spatial, temporal, &table)
}

/// Marching with a caller-supplied weight table (shared across solves).
pub fn solve_with_table(
    problem: &ProblemSpec,
    spatial: &UniformSpatialGrid,
    temporal: &GradedTemporalMesh,
    table: &CaputoWeightTable,
) -> Result<SolutionGrid, SolveError> {
    check_domain(problem, spatial, temporal)?;
    if !(problem.p > 0.0) {
        return Err(SolveError::InvalidProblem(format!(
            "diffusion coefficient must be positive, got {}",
            problem.p
        )));
    }
    let m_total = spatial.intervals();
    let n_total = temporal.intervals();
    let x = spatial.nodes();
    let t = temporal.nodes();
    let width = m_total + 1;

    let phi0 = (problem.phi)(0.0);
    let phil = (problem.phi)(problem.length);
    if phi0.abs() > 1e-10 || phil.abs() > 1e-10 {
        return Err(SolveError::InvalidProblem(format!(
            "initial data violates phi(0) = phi(l) = 0: phi(0) = {phi0:.3e}, phi(l) = {phil:.3e}"
        )));
    }
    let c_vals: Vec<f64> = x.iter().map(|&xm| (problem.c)(xm)).collect();
    if let Some(m) = c_vals.iter().position(|&c| c < 0.0) {
        return Err(SolveError::InvalidProblem(format!(
            "reaction coefficient negative at x = {}: c = {}",
            x[m], c_vals[m]
        )));
    }

    let mut values = vec![0.0f64; width * (n_total + 1)];
    for m in 0..=m_total {
        values[m] = (problem.phi)(x[m]);
    }

    let ph2 = problem.p / (spatial.width() * spatial.width());
    let mut history_ops = 0u64;
    let mut rhs = vec![0.0f64; m_total.max(1) - 1];
    let mut diag = vec![0.0f64; m_total.max(1) - 1];
    let mut scratch = vec![0.0f64; m_total.max(1) - 1];

    for n in 1..=n_total {
        let theta = table.nodal_weights(n).map_err(SolveError::Weights)?;

        for (i, slot) in rhs.iter_mut().enumerate() {
            *slot = (problem.f)(x[i + 1], t[n]);
        }
        // history: rhs -= sum_{k<n} Theta_nk u^k, ascending k
        for (k, &th) in theta.iter().enumerate().take(n) {
            let row = &values[k * width..k * width + width];
            for (i, slot) in rhs.iter_mut().enumerate() {
                *slot -= th * row[i + 1];
            }
        }
        history_ops += (n as u64) * (m_total as u64 - 1);

        let theta_nn = theta[n];
        for i in 0..m_total - 1 {
            diag[i] = theta_nn + 2.0 * ph2 + c_vals[i + 1];
        }
        thomas_solve(&mut diag, -ph2, &mut rhs, &mut scratch, n)?;

        let row = &mut values[n * width..(n + 1) * width];
        row[0] = 0.0;
        row[m_total] = 0.0;
        row[1..m_total].copy_from_slice(&rhs);
    }

    Ok(SolutionGrid {
        values,
        spatial: spatial.clone(),
        temporal: temporal.clone(),
        alpha: table.alpha(),
        kind: table.kind(),
        problem_id: problem.id.clone(),
        history_ops,
    })
}

fn check_domain(
    problem: &ProblemSpec,
    spatial: &UniformSpatialGrid,
    temporal: &GradedTemporalMesh,
) -> Result<(), SolveError> {
    let l_ok = (problem.length - spatial.length()).abs() <= 1e-12 * problem.length.abs();
    let t_ok = (problem.final_time - temporal.final_time()).abs()
        <= 1e-12 * problem.final_time.abs();
    if l_ok && t_ok {
        Ok(())
    } else {
        Err(SolveError::InconsistentDomain {
            problem_l: problem.length,
            problem_t: problem.final_time,
            grid_l: spatial.length(),
            grid_t: temporal.final_time(),
        })
    }
}

/// Thomas elimination for the constant-offdiagonal tridiagonal system.
/// `diag` and `rhs` are overwritten; no pivoting (the matrix is an M-matrix
/// by construction; a non-positive pivot signals a corrupted weight table).
fn thomas_solve(
    diag: &mut [f64],
    off: f64,
    rhs: &mut [f64],
    upper: &mut [f64],
    level: usize,
) -> Result<(), SolveError> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    if diag[0] <= 0.0 {
        return Err(SolveError::NonPositivePivot {
            level,
            index: 0,
            pivot: diag[0],
        });
    }
    upper[0] = off / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - off * upper[i - 1];
        if denom <= 0.0 {
            return Err(SolveError::NonPositivePivot {
                level,
                index: i,
                pivot: denom,
            });
        }
        upper[i] = off / denom;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= upper[i] * rhs[i + 1];
    }
    Ok(())
}

/// One entry of a failed M-matrix check.
#[derive(Debug, Clone, PartialEq)]
pub enum MMatrixViolation {
    /// Theta_nn not strictly positive.
    Diagonal { level: usize, value: f64 },
    /// Theta_nk not strictly negative for k < n.
    History { level: usize, k: usize, value: f64 },
    /// Spatial row not strictly diagonally dominant.
    Dominance { level: usize, m: usize, margin: f64 },
}

/// Structured result of the discrete maximum-principle verification.
#[derive(Debug, Clone, PartialEq)]
pub struct MMatrixReport {
    pub pass: bool,
    pub levels_checked: usize,
    pub first_violation: Option<MMatrixViolation>,
}

/// Checks the sign structure that makes the system matrix an M-matrix:
/// Theta_nn > 0, Theta_nk < 0 for k < n, and strict diagonal dominance of
/// the spatial rows (margin Theta_nn + c(x_m), independent of p).
pub fn verify_m_matrix(
    spatial: &UniformSpatialGrid,
    temporal: &GradedTemporalMesh,
    alpha: f64,
    kind: SchemeKind,
    c: &dyn Fn(f64) -> f64,
) -> Result<MMatrixReport, SolveError> {
    let table = caputo::build_weights(temporal, alpha, kind)?;
    Ok(verify_weight_table(&table, spatial, c))
}

/// Same check against an existing (possibly doctored) weight table.
pub fn verify_weight_table(
    table: &CaputoWeightTable,
    spatial: &UniformSpatialGrid,
    c: &dyn Fn(f64) -> f64,
) -> MMatrixReport {
    let n_total = table.levels();
    for n in 1..=n_total {
        let theta = match table.nodal_weights(n) {
            Ok(t) => t,
            Err(_) => unreachable!("level range checked"),
        };
        if !(theta[n] > 0.0) {
            return MMatrixReport {
                pass: false,
                levels_checked: n,
                first_violation: Some(MMatrixViolation::Diagonal {
                    level: n,
                    value: theta[n],
                }),
            };
        }
        for (k, &th) in theta.iter().enumerate().take(n) {
            if !(th < 0.0) {
                return MMatrixReport {
                    pass: false,
                    levels_checked: n,
                    first_violation: Some(MMatrixViolation::History {
                        level: n,
                        k,
                        value: th,
                    }),
                };
            }
        }
        for m in 1..spatial.intervals() {
            let margin = theta[n] + c(spatial.node(m));
            if !(margin > 0.0) {
                return MMatrixReport {
                    pass: false,
                    levels_checked: n,
                    first_violation: Some(MMatrixViolation::Dominance { level: n, m, margin }),
                };
            }
        }
    }
    MMatrixReport {
        pass: true,
        levels_checked: n_total,
        first_violation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{graded_mesh, uniform_grid};
    use crate::problems::{fitted_exactness_problem, ProblemSpec};
    use std::sync::Arc;

    fn zero_problem(l: f64, t_final: f64) -> ProblemSpec {
        ProblemSpec {
            p: 1.0,
            c: Arc::new(|_| 0.0),
            f: Arc::new(|_, _| 0.0),
            phi: Arc::new(|_| 0.0),
            length: l,
            final_time: t_final,
            exact: None,
            id: "zero".into(),
        }
    }

    #[test]
    fn laplacian_annihilates_affine() {
        let h = 0.1;
        let row: Vec<f64> = (0..8).map(|m| 2.0 + 3.0 * (m as f64 * h)).collect();
        for v in discrete_laplacian(&row, h, 1.7) {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_exact_on_quadratic() {
        let h = 0.25;
        let row: Vec<f64> = (0..9).map(|m| (m as f64 * h).powi(2)).collect();
        for v in discrete_laplacian(&row, h, 1.0) {
            assert!((v - (-2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_sine_closed_form() {
        // second difference of sin is -(4/h^2) sin^2(h/2) sin(x)
        let m_total = 8usize;
        let h = std::f64::consts::PI / m_total as f64;
        let row: Vec<f64> = (0..=m_total).map(|m| (m as f64 * h).sin()).collect();
        let vals = discrete_laplacian(&row, h, 1.0);
        let factor = 4.0 / (h * h) * (h / 2.0).sin().powi(2);
        for (i, v) in vals.iter().enumerate() {
            let expected = factor * ((i + 1) as f64 * h).sin();
            assert!((v - expected).abs() < 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn zero_data_gives_zero_grid() {
        let spatial = uniform_grid(1.0, 8).unwrap();
        let temporal = graded_mesh(1.0, 8, 2.0).unwrap();
        let problem = zero_problem(1.0, 1.0);
        for kind in [SchemeKind::Fitted, SchemeKind::L1] {
            let grid = solve(&problem, &spatial, &temporal, 0.5, kind).unwrap();
            assert!(grid.time_row(8).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn manufactured_fitted_exactness() {
        // u = x(l - x)(1 + t^a) reproduced to rounding by the fitted scheme
        let alpha = 0.4;
        let problem = fitted_exactness_problem(alpha, 1.0, 1.0);
        let spatial = uniform_grid(1.0, 12).unwrap();
        let temporal = graded_mesh(1.0, 10, 2.0).unwrap();
        let grid = solve(&problem, &spatial, &temporal, alpha, SchemeKind::Fitted).unwrap();
        let exact = problem.exact.as_ref().unwrap();
        let mut worst = 0.0f64;
        for n in 0..=10 {
            for m in 0..=12 {
                let e = (grid.value(n, m) - exact(spatial.node(m), temporal.node(n))).abs();
                worst = worst.max(e);
            }
        }
        assert!(worst <= 1e-10, "max nodal defect {worst:.3e}");
    }

    #[test]
    fn smallest_grids_accepted() {
        let spatial = uniform_grid(1.0, 2).unwrap();
        let temporal = graded_mesh(1.0, 1, 1.0).unwrap();
        let problem = fitted_exactness_problem(0.5, 1.0, 1.0);
        let grid = solve(&problem, &spatial, &temporal, 0.5, SchemeKind::Fitted).unwrap();
        assert_eq!(grid.time_row(1).len(), 3);
    }

    #[test]
    fn residual_of_every_row() {
        let alpha = 0.3;
        let problem = crate::problems::example2(1.0);
        let spatial = uniform_grid(std::f64::consts::PI, 16).unwrap();
        let temporal = graded_mesh(1.0, 16, 2.5).unwrap();
        let table = caputo::build_weights(&temporal, alpha, SchemeKind::Fitted).unwrap();
        let grid = solve_with_table(&problem, &spatial, &temporal, &table).unwrap();
        let ph2 = problem.p / (spatial.width() * spatial.width());
        for n in 1..=16 {
            let theta = table.nodal_weights(n).unwrap();
            for m in 1..16 {
                let mut lhs = (theta[n] + 2.0 * ph2 + (problem.c)(spatial.node(m)))
                    * grid.value(n, m)
                    - ph2 * (grid.value(n, m + 1) + grid.value(n, m - 1));
                let mut scale = lhs.abs();
                for k in 0..n {
                    lhs += theta[k] * grid.value(k, m);
                    scale = scale.max((theta[k] * grid.value(k, m)).abs());
                }
                let rhs = (problem.f)(spatial.node(m), temporal.node(n));
                scale = scale.max(rhs.abs()).max(1e-30);
                assert!(
                    (lhs - rhs).abs() <= 1e-11 * scale,
                    "residual at ({n},{m}): {:.3e} vs scale {scale:.3e}",
                    (lhs - rhs).abs()
                );
            }
        }
    }

    #[test]
    fn deterministic_bitwise() {
        let problem = crate::problems::example2(1.0);
        let spatial = uniform_grid(std::f64::consts::PI, 24).unwrap();
        let temporal = graded_mesh(1.0, 24, 3.5).unwrap();
        let a = solve(&problem, &spatial, &temporal, 0.35, SchemeKind::Fitted).unwrap();
        let b = solve(&problem, &spatial, &temporal, 0.35, SchemeKind::Fitted).unwrap();
        for n in 0..=24 {
            for (va, vb) in a.time_row(n).iter().zip(b.time_row(n)) {
                assert_eq!(va.to_bits(), vb.to_bits());
            }
        }
    }

    #[test]
    fn history_cost_counter() {
        let n = 128usize;
        let problem = zero_problem(1.0, 1.0);
        let spatial = uniform_grid(1.0, n).unwrap();
        let temporal = graded_mesh(1.0, n, 1.0).unwrap();
        let grid = solve(&problem, &spatial, &temporal, 0.5, SchemeKind::L1).unwrap();
        let nominal = (n * n * n / 2) as u64;
        assert!(
            grid.history_ops() >= nominal / 2 && grid.history_ops() <= 2 * nominal,
            "history ops {} outside 2x of {}",
            grid.history_ops(),
            nominal
        );
    }

    #[test]
    fn m_matrix_pass_and_fault_injection() {
        let spatial = uniform_grid(1.0, 8).unwrap();
        let temporal = graded_mesh(1.0, 16, 1.0).unwrap();
        let report =
            verify_m_matrix(&spatial, &temporal, 0.5, SchemeKind::Fitted, &|_| 0.0).unwrap();
        assert!(report.pass);
        assert_eq!(report.levels_checked, 16);

        let graded = graded_mesh(1.0, 64, 4.5).unwrap();
        let report =
            verify_m_matrix(&spatial, &graded, 0.2, SchemeKind::Fitted, &|_| 0.0).unwrap();
        assert!(report.pass);

        // flip one weight's ordering so Theta_{n,k} goes positive
        let table = caputo::fitted_weights(&temporal, 0.5).unwrap();
        let mut rows: Vec<Vec<f64>> = (1..=16).map(|n| table.row(n).unwrap().to_vec()).collect();
        rows[9][3] = rows[9][5]; // d no longer increasing at k = 3..4
        let doctored =
            CaputoWeightTable::from_rows(temporal.clone(), 0.5, SchemeKind::Fitted, rows).unwrap();
        let report = verify_weight_table(&doctored, &spatial, &|_| 0.0);
        assert!(!report.pass);
        match report.first_violation {
            Some(MMatrixViolation::History { level: 10, k, .. }) => assert!(k == 3 || k == 4),
            other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn pivot_failure_aborts_loudly() {
        // a wildly negative diagonal weight drives the pivot non-positive
        let temporal = graded_mesh(1.0, 2, 1.0).unwrap();
        let spatial = uniform_grid(1.0, 4).unwrap();
        let rows = vec![vec![1.0], vec![-1.0e5, -2.0e5]];
        let doctored =
            CaputoWeightTable::from_rows(temporal.clone(), 0.5, SchemeKind::Fitted, rows).unwrap();
        let problem = zero_problem(1.0, 1.0);
        let err = solve_with_table(&problem, &spatial, &temporal, &doctored).unwrap_err();
        assert!(matches!(err, SolveError::NonPositivePivot { .. }));
    }

    #[test]
    fn domain_mismatch_rejected() {
        let problem = zero_problem(1.0, 1.0);
        let spatial = uniform_grid(2.0, 4).unwrap();
        let temporal = graded_mesh(1.0, 4, 1.0).unwrap();
        let err = solve(&problem, &spatial, &temporal, 0.5, SchemeKind::Fitted).unwrap_err();
        assert!(matches!(err, SolveError::InconsistentDomain { .. }));
    }

    #[test]
    fn bad_problem_data_rejected() {
        let spatial = uniform_grid(1.0, 4).unwrap();
        let temporal = graded_mesh(1.0, 4, 1.0).unwrap();
        let mut problem = zero_problem(1.0, 1.0);
        problem.phi = Arc::new(|x| x); // phi(l) != 0
        assert!(matches!(
            solve(&problem, &spatial, &temporal, 0.5, SchemeKind::Fitted),
            Err(SolveError::InvalidProblem(_))
        ));
        let mut problem = zero_problem(1.0, 1.0);
        problem.c = Arc::new(|_| -1.0);
        assert!(matches!(
            solve(&problem, &spatial, &temporal, 0.5, SchemeKind::Fitted),
            Err(SolveError::InvalidProblem(_))
        ));
        let mut problem = zero_problem(1.0, 1.0);
        problem.p = -2.0;
        assert!(matches!(
            solve(&problem, &spatial, &temporal, 0.5, SchemeKind::Fitted),
            Err(SolveError::InvalidProblem(_))
        ));
    }
}
