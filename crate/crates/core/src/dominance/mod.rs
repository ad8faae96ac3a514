//! Comparability of coefficient vectors, connecting curves along which every
//! `E_k` is non-decreasing, and the resulting inequality for `sum f`.

mod audit;
mod curve;
mod seed;
mod steer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criterion::{CriterionError, CriterionFunction};
use crate::index_set::IndexSet;
use crate::numeric::compensated_sum;
use crate::sympoly::{self, MonicPoly, Point, SymPolyError};

pub use audit::{monotonicity_audit, AuditReport, CheckResult};
pub use curve::{
    build_curve, build_curve_by_increments, AbortReason, CurveOptions, CurveSample, CurveStatus, CurveTrace, Phase,
    PhaseKind,
};
pub use seed::{seed_candidates, seed_direction, PerturbationPlan, Ramp, SeedMode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DominanceError {
    #[error("points have different lengths ({a} and {b})")]
    DimensionMismatch { a: usize, b: usize },
    #[error("b does not dominate a (relation {0:?})")]
    NotDominating(Relation),
    #[error("index set {set} is not allowed here: {reason}")]
    InvalidIndexSet { set: IndexSet, reason: String },
    #[error("no perturbation with the given indices separates the repeated entries: {0}")]
    Infeasible(String),
    #[error("boundary seeds are only tabulated for n <= 4, got n = {0}")]
    UnsupportedN(usize),
    #[error("constant coefficient is zero")]
    ZeroConstantTerm,
    #[error("curve reached a root collision at t = {t}")]
    RootCollision { t: f64 },
    #[error("curve endpoint misses b by {error}")]
    EndpointMismatch { error: f64 },
    #[error("curve construction stopped: {0}")]
    Aborted(String),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error(transparent)]
    Point(#[from] SymPolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Dominates,
    Equal,
    Incomparable,
}

/// Per-index comparison of `E_k(a)` and `E_k(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintProfile {
    pub n: usize,
    /// Indices with `E_k(b) - E_k(a)` above tolerance.
    pub s: IndexSet,
    /// `A_k = E_k(b) - E_k(a)`.
    pub deltas: Vec<f64>,
    pub relation: Relation,
}

/// Tolerance below which `|E_k(b) - E_k(a)|` counts as equality.
pub fn equality_tolerance(eb: f64) -> f64 {
    1e-12 * (1.0 + eb.abs())
}

pub fn compare(a: &Point, b: &Point) -> Result<ConstraintProfile, DominanceError> {
    if a.n() != b.n() {
        return Err(DominanceError::DimensionMismatch { a: a.n(), b: b.n() });
    }
    let ea = sympoly::elem_sym(a);
    let eb = sympoly::elem_sym(b);
    let deltas: Vec<f64> = eb.values().iter().zip(ea.values()).map(|(y, x)| y - x).collect();
    let mut s = IndexSet::empty();
    let mut incomparable = false;
    for (k, (&d, &e)) in deltas.iter().zip(eb.values()).enumerate() {
        let tol = equality_tolerance(e);
        if d > tol {
            s = s.with(k);
        } else if d < -tol {
            incomparable = true;
        }
    }
    let relation = if incomparable {
        Relation::Incomparable
    } else if s.is_empty() {
        Relation::Equal
    } else {
        Relation::Dominates
    };
    Ok(ConstraintProfile { n: a.n(), s, deltas, relation })
}

/// Monic polynomial whose roots are the reciprocals of the roots of `p`.
pub fn reversal_transform(p: &MonicPoly) -> Result<MonicPoly, DominanceError> {
    let c = p.coeffs();
    let n = c.len();
    if c[0] == 0.0 {
        return Err(DominanceError::ZeroConstantTerm);
    }
    let reversed = (0..n).map(|k| if k == 0 { 1.0 / c[0] } else { c[n - k] / c[0] }).collect();
    Ok(MonicPoly::new(reversed)?)
}

/// `{n - k : k in s}`; `s` must avoid 0.
pub fn reverse_index_set(n: usize, s: IndexSet) -> Result<IndexSet, DominanceError> {
    if s.contains(0) || s.max().is_some_and(|m| m >= n) {
        return Err(DominanceError::InvalidIndexSet { set: s, reason: format!("indices must lie in 1..{}", n - 1) });
    }
    Ok(s.reflect(n))
}

/// `sum_i f'(y_i) (-y_i)^k / prod_{j != i} (y_j - y_i)`.
pub fn dhat(y: &Point, k: usize, f: &CriterionFunction) -> Result<f64, DominanceError> {
    if let Some(&i) = y.coincidences().first() {
        return Err(SymPolyError::DegeneratePoint(i).into());
    }
    let v = y.values();
    let n = v.len();
    if k >= n {
        return Err(CriterionError::InvalidIndex { n, k }.into());
    }
    for &x in v {
        f.check_domain(x)?;
    }
    let terms = (0..n).map(|i| {
        let denom: f64 = (0..n).filter(|&j| j != i).map(|j| v[j] - v[i]).product();
        f.fprime(v[i]) * (-v[i]).powi(k as i32) / denom
    });
    Ok(compensated_sum(terms))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    pub holds: bool,
    /// `sum f(b) - sum f(a)`.
    pub margin: f64,
    pub sum_a: f64,
    pub sum_b: f64,
    pub tolerance: f64,
}

/// Compares `sum f(a)` with `sum f(b)`; holds when the margin is at least
/// `-1e-10 (1 + |sum f(b)|)`.
pub fn verify_inequality(a: &Point, b: &Point, f: &CriterionFunction) -> Result<InequalityVerdict, DominanceError> {
    if a.n() != b.n() {
        return Err(DominanceError::DimensionMismatch { a: a.n(), b: b.n() });
    }
    let sum_a = f.sum_over(a.values())?;
    let sum_b = f.sum_over(b.values())?;
    let margin = sum_b - sum_a;
    let tolerance = 1e-10 * (1.0 + sum_b.abs());
    Ok(InequalityVerdict { holds: margin >= -tolerance, margin, sum_a, sum_b, tolerance })
}
