//! Finite-difference solvers for one-dimensional Caputo time-fractional
//! reaction-diffusion problems
//!
//!   (D_t^a - p d^2/dx^2 + c(x)) u = f(x, t)  on (0, l) x (0, T],
//!
//! with homogeneous Dirichlet boundaries and 0 < a < 1. Two temporal
//! discretizations are provided on graded meshes t_n = T (n/N)^r:
//!
//! * a fitted scheme whose history weights come from incomplete-Beta
//!   differences, exact on the functions 1 and t^a and therefore robust to
//!   the typical t^a initial layer (temporal order min{2-a, 2ra});
//! * the classical L1 scheme (order min{2-a, ra}).
//!
//! Both yield M-matrix systems solved by Thomas elimination per time level.
//! The [`harness`] module measures maximum nodal errors, two-mesh
//! differences, observed convergence rates, and error growth in the final
//! time.

pub mod caputo;
pub mod harness;
pub mod mesh;
pub mod problems;
pub mod solver;
pub mod specfun;

pub use caputo::{fitted_weights, l1_weights, CaputoWeightTable, SchemeKind};
pub use harness::{
    growth_rate, max_nodal_error, observed_rates, theoretical_order, two_mesh_difference,
    ConvergenceReport, MetricKind, Rate, ReportCell,
};
pub use mesh::{graded_mesh, optimal_grading, uniform_grid, GradedTemporalMesh, UniformSpatialGrid};
pub use problems::{
    build_example, example1, example2, example3, fitted_exactness_problem, ExampleId, ProblemSpec,
};
pub use solver::{discrete_laplacian, solve, verify_m_matrix, MMatrixReport, SolutionGrid};
pub use specfun::{inc_beta, log_gamma, mittag_leffler, SpecFunConfig, SpecFunError};
