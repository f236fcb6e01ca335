//! Graded temporal meshes t_n = T (n/N)^r and uniform spatial grids.

use crate::caputo::SchemeKind;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("final time must be positive, got {0}")]
    NonPositiveFinalTime(f64),
    #[error("at least one interval is required")]
    ZeroIntervals,
    #[error("grading exponent must be >= 1, got {0}")]
    GradingBelowOne(f64),
    #[error("domain length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("spatial grid needs at least 2 intervals, got {0}")]
    TooFewSpatialIntervals(usize),
    #[error("fractional order must lie in (0, 1), got {0}")]
    OrderOutOfRange(f64),
}

/// Temporal grid t_n = T (n/N)^r, concentrating nodes near t = 0 for r > 1.
///
/// Immutable after construction. The node formula evaluates (n/N) first so
/// that the mesh with 2N intervals reproduces every node of the mesh with N
/// intervals bitwise (2n/(2N) rounds identically to n/N), which the two-mesh
/// difference relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedTemporalMesh {
    final_time: f64,
    intervals: usize,
    grading: f64,
    t: Vec<f64>,
    tau: Vec<f64>,
}

/// Builds the graded mesh; rejects T <= 0, N = 0 and r < 1.
pub fn graded_mesh(final_time: f64, intervals: usize, grading: f64) -> Result<GradedTemporalMesh, MeshError> {
    if !(final_time > 0.0) {
        return Err(MeshError::NonPositiveFinalTime(final_time));
    }
    if intervals == 0 {
        return Err(MeshError::ZeroIntervals);
    }
    if !(grading >= 1.0) {
        return Err(MeshError::GradingBelowOne(grading));
    }
    let n = intervals;
    let mut t = Vec::with_capacity(n + 1);
    t.push(0.0);
    for k in 1..n {
        let frac = k as f64 / n as f64;
        t.push(final_time * frac.powf(grading));
    }
    // assigned, not computed, so the endpoint carries no rounding
    t.push(final_time);
    let tau: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    debug_assert!(tau.iter().all(|&s| s > 0.0));
    Ok(GradedTemporalMesh {
        final_time,
        intervals,
        grading,
        t,
        tau,
    })
}

impl GradedTemporalMesh {
    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    /// Number of intervals N.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// Node times t_0 .. t_N.
    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn node(&self, n: usize) -> f64 {
        self.t[n]
    }

    /// Step sizes tau_n = t_n - t_{n-1}, indexed 0..N (tau[n-1] = tau_n).
    pub fn steps(&self) -> &[f64] {
        &self.tau
    }
}

/// Uniform spatial grid x_m = m h on [0, l] with h = l/M.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSpatialGrid {
    length: f64,
    intervals: usize,
    h: f64,
    x: Vec<f64>,
}

pub fn uniform_grid(length: f64, intervals: usize) -> Result<UniformSpatialGrid, MeshError> {
    if !(length > 0.0) {
        return Err(MeshError::NonPositiveLength(length));
    }
    if intervals < 2 {
        return Err(MeshError::TooFewSpatialIntervals(intervals));
    }
    let h = length / intervals as f64;
    let mut x: Vec<f64> = (0..=intervals).map(|m| m as f64 * h).collect();
    x[0] = 0.0;
    x[intervals] = length;
    Ok(UniformSpatialGrid {
        length,
        intervals,
        h,
        x,
    })
}

impl UniformSpatialGrid {
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of intervals M.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn width(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn node(&self, m: usize) -> f64 {
        self.x[m]
    }
}

/// Grading exponent that attains the optimal temporal order for each scheme:
/// max{1, (2-a)/(2a)} for the fitted scheme and max{1, (2-a)/a} for L1.
pub fn optimal_grading(alpha: f64, kind: SchemeKind) -> Result<f64, MeshError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MeshError::OrderOutOfRange(alpha));
    }
    let r = match kind {
        SchemeKind::Fitted => (2.0 - alpha) / (2.0 * alpha),
        SchemeKind::L1 => (2.0 - alpha) / alpha,
    };
    Ok(r.max(1.0))
}
