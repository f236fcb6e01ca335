//! Built-in reaction-diffusion problems: three reference examples plus the
//! manufactured problem the fitted scheme solves exactly.

use crate::specfun::{self, lgamma_positive};
use std::cell::RefCell;
use std::collections::HashMap;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// One initial-boundary value problem
/// (D_t^a - p d^2/dx^2 + c(x)) u = f on (0, l) x (0, T],
/// u(0, t) = u(l, t) = 0, u(x, 0) = phi(x).
#[derive(Clone)]
pub struct ProblemSpec {
    /// Diffusion coefficient p > 0.
    pub p: f64,
    /// Reaction coefficient c(x) >= 0.
    pub c: SpaceFn,
    /// Source term f(x, t).
    pub f: SpaceTimeFn,
    /// Initial data phi(x) with phi(0) = phi(l) = 0.
    pub phi: SpaceFn,
    /// Domain length l.
    pub length: f64,
    /// Final time T.
    pub final_time: f64,
    /// Exact solution, when known.
    pub exact: Option<SpaceTimeFn>,
    /// Short identifier carried into solution grids and reports.
    pub id: String,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("id", &self.id)
            .field("p", &self.p)
            .field("length", &self.length)
            .field("final_time", &self.final_time)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("fractional order must lie in (0, 1), got {0}")]
    OrderOutOfRange(f64),
    #[error("final time must be positive, got {0}")]
    NonPositiveFinalTime(f64),
    #[error("domain length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("source series did not converge in {terms} terms at t = {t}")]
    SeriesTruncation { t: f64, terms: usize },
    #[error("unknown example id '{0}' (expected 1, 2, 3 or exactness)")]
    UnknownExample(String),
}

/// Built-in problem identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleId {
    Example1,
    Example2,
    Example3,
    FittedExactness,
}

impl FromStr for ExampleId {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "example1" => Ok(ExampleId::Example1),
            "2" | "example2" => Ok(ExampleId::Example2),
            "3" | "example3" => Ok(ExampleId::Example3),
            "exactness" | "fitted-exactness" => Ok(ExampleId::FittedExactness),
            other => Err(ProblemError::UnknownExample(other.to_string())),
        }
    }
}

/// Instantiates a built-in example. `alpha` is ignored by Example 2 (its data
/// does not depend on the order); Example 3 fixes l = T = 1.
pub fn build_example(id: ExampleId, alpha: f64, final_time: f64) -> Result<ProblemSpec, ProblemError> {
    match id {
        ExampleId::Example1 => example1(alpha, final_time),
        ExampleId::Example2 => Ok(example2(final_time)),
        ExampleId::Example3 => example3(alpha),
        ExampleId::FittedExactness => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(ProblemError::OrderOutOfRange(alpha));
            }
            if !(final_time > 0.0) {
                return Err(ProblemError::NonPositiveFinalTime(final_time));
            }
            Ok(fitted_exactness_problem(alpha, 1.0, final_time))
        }
    }
}

const OMEGA: f64 = std::f64::consts::PI / 3.0;
const SOURCE_SERIES_CAP: usize = 200;

thread_local! {
    static E1_SOURCE_CACHE: RefCell<HashMap<(u64, u64), f64>> = RefCell::new(HashMap::new());
    static E1_EXACT_CACHE: RefCell<HashMap<(u64, u64), f64>> = RefCell::new(HashMap::new());
}

/// Caputo derivative of cos(w t):
/// sum_{k>=1} (-1)^k w^{2k} t^{2k-a} / Gamma(2k+1-a), truncated when the next
/// term drops below 1e-14 relative.
fn caputo_cos(alpha: f64, omega: f64, t: f64) -> Result<f64, ProblemError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let wt2 = (omega * t) * (omega * t);
    // k = 1 term: -w^2 t^{2-a} / Gamma(3-a)
    let mut term = -omega * omega * t.powf(2.0 - alpha) * (-lgamma_positive(3.0 - alpha)).exp();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for k in 1..=SOURCE_SERIES_CAP {
        let y = term - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        let kf = 2.0 * k as f64;
        let next = term * (-wt2) / ((kf + 1.0 - alpha) * (kf + 2.0 - alpha));
        if next.abs() <= 1e-14 * (sum.abs() + 1e-300) {
            return Ok(sum);
        }
        term = next;
    }
    Err(ProblemError::SeriesTruncation {
        t,
        terms: SOURCE_SERIES_CAP,
    })
}

fn cached_caputo_cos(alpha: f64, t: f64) -> f64 {
    E1_SOURCE_CACHE.with(|cache| {
        let key = (alpha.to_bits(), t.to_bits());
        if let Some(&v) = cache.borrow().get(&key) {
            return v;
        }
        let v = caputo_cos(alpha, OMEGA, t)
            .expect("source series diverged; final time far outside the supported range");
        cache.borrow_mut().insert(key, v);
        v
    })
}

fn cached_e1_time_factor(alpha: f64, t: f64) -> f64 {
    E1_EXACT_CACHE.with(|cache| {
        let key = (alpha.to_bits(), t.to_bits());
        if let Some(&v) = cache.borrow().get(&key) {
            return v;
        }
        let ml = specfun::mittag_leffler(alpha, 1.0, -t.powf(alpha))
            .expect("Mittag-Leffler evaluation lost accuracy on the solution profile");
        let v = 0.5 * (ml + (OMEGA * t).cos());
        cache.borrow_mut().insert(key, v);
        v
    })
}

/// Reference problem with a typical t^a initial layer:
/// u(x, t) = 0.5 [E_{a,1}(-t^a) + cos(pi t / 3)] sin x on (0, pi).
///
/// The source reduces to f(x, t) = 0.5 [C_a(t) + cos(pi t / 3)] sin x where
/// C_a is the Caputo derivative of cos(pi t / 3); the Mittag-Leffler parts of
/// D_t^a u and -u_xx cancel exactly.
pub fn example1(alpha: f64, final_time: f64) -> Result<ProblemSpec, ProblemError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ProblemError::OrderOutOfRange(alpha));
    }
    if !(final_time > 0.0) {
        return Err(ProblemError::NonPositiveFinalTime(final_time));
    }
    // fail fast if the source series cannot converge at the worst point
    caputo_cos(alpha, OMEGA, final_time)?;

    let f: SpaceTimeFn = Arc::new(move |x, t| {
        0.5 * (cached_caputo_cos(alpha, t) + (OMEGA * t).cos()) * x.sin()
    });
    let exact: SpaceTimeFn = Arc::new(move |x, t| cached_e1_time_factor(alpha, t) * x.sin());
    Ok(ProblemSpec {
        p: 1.0,
        c: Arc::new(|_| 0.0),
        f,
        phi: Arc::new(|x| x.sin()),
        length: std::f64::consts::PI,
        final_time,
        exact: Some(exact),
        id: "example1".into(),
    })
}

/// Reference problem without a known exact solution:
/// D_t^a u - u_xx + (1 + x) u = x (pi - x)(1 + t^4) + t^2, phi = sin x.
pub fn example2(final_time: f64) -> ProblemSpec {
    ProblemSpec {
        p: 1.0,
        c: Arc::new(|x| 1.0 + x),
        f: Arc::new(|x, t| {
            x * (std::f64::consts::PI - x) * (1.0 + t.powi(4)) + t * t
        }),
        phi: Arc::new(|x| x.sin()),
        length: std::f64::consts::PI,
        final_time,
        exact: None,
        id: "example2".into(),
    }
}

/// Smooth-solution problem on (0, 1) with p = 1, c(x) = x^2 and
/// u(x, t) = (1 + t^3)(4 x (1 - x))^2 + 5 t^{3+a}.
pub fn example3(alpha: f64) -> Result<ProblemSpec, ProblemError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ProblemError::OrderOutOfRange(alpha));
    }
    let u = move |x: f64, t: f64| {
        let s = 4.0 * x * (1.0 - x);
        (1.0 + t.powi(3)) * s * s + 5.0 * t.powf(3.0 + alpha)
    };
    // D_t^a t^q = Gamma(q+1)/Gamma(q+1-a) t^{q-a}
    let d3 = (lgamma_positive(4.0) - lgamma_positive(4.0 - alpha)).exp();
    let d3a = (lgamma_positive(4.0 + alpha) - lgamma_positive(4.0)).exp();
    let f: SpaceTimeFn = Arc::new(move |x, t| {
        let s = 4.0 * x * (1.0 - x);
        let caputo = d3 * t.powf(3.0 - alpha) * s * s + 5.0 * d3a * t.powi(3);
        let diffusion = -(1.0 + t.powi(3)) * 32.0 * (1.0 - 6.0 * x + 6.0 * x * x);
        caputo + diffusion + x * x * u(x, t)
    });
    Ok(ProblemSpec {
        p: 1.0,
        c: Arc::new(|x| x * x),
        f,
        phi: Arc::new(|x| {
            let s = 4.0 * x * (1.0 - x);
            s * s
        }),
        length: 1.0,
        final_time: 1.0,
        exact: Some(Arc::new(u)),
        id: "example3".into(),
    })
}

/// Manufactured problem u = x(l - x)(1 + t^a): the fitted operator is exact
/// on 1 and t^a and the second difference is exact on quadratics, so the
/// scheme reproduces u to rounding on every grid.
pub fn fitted_exactness_problem(alpha: f64, length: f64, final_time: f64) -> ProblemSpec {
    let gamma_1a = lgamma_positive(1.0 + alpha).exp();
    let l = length;
    ProblemSpec {
        p: 1.0,
        c: Arc::new(|_| 0.0),
        f: Arc::new(move |x, t| gamma_1a * x * (l - x) + 2.0 * (1.0 + t.powf(alpha))),
        phi: Arc::new(move |x| x * (l - x)),
        length,
        final_time,
        exact: Some(Arc::new(move |x, t| x * (l - x) * (1.0 + t.powf(alpha)))),
        id: "fitted-exactness".into(),
    }
}
