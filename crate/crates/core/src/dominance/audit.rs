use serde::Serialize;

use super::curve::CurveTrace;
use super::DominanceError;
use crate::criterion::{certify_sign, CriterionFunction, Verdict};

/// Worst normalized value of a check; the check passes when `ok`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckResult {
    pub ok: bool,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    /// Smallest step change `(E_k(t') - E_k(t)) / (1 + |E_k(t)|)`.
    pub e_monotone: CheckResult,
    /// Smallest step change of `sum f(y)`, normalized the same way. `None` when
    /// the criterion for `f` is not certified on the hull of the trace.
    pub eta_monotone: Option<CheckResult>,
    /// Largest relative distance of a sample from its prescribed coefficients.
    pub manifold: CheckResult,
    pub trace_completed: bool,
}

const STEP_SLACK: f64 = 1e-9;
const CERTIFY_GRID: usize = 256;

/// Replays a trace and checks that every `E_k` and, where the criterion is
/// certified, `sum f` never decrease.
pub fn monotonicity_audit(trace: &CurveTrace, f: &CriterionFunction) -> Result<AuditReport, DominanceError> {
    let samples = &trace.samples;
    let mut e_worst = 0.0_f64;
    for w in samples.windows(2) {
        for (prev, next) in w[0].e.values().iter().zip(w[1].e.values()) {
            e_worst = e_worst.min((next - prev) / (1.0 + prev.abs()));
        }
    }

    let lo = samples.iter().map(|s| s.y.min()).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.y.max()).fold(0.0, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (0.5 * lo, 2.0 * hi) };
    let certified = !trace.s.is_empty()
        && certify_sign(f, trace.n, trace.s, lo, hi, CERTIFY_GRID)?
            .iter()
            .all(|c| c.verdict == Verdict::AllNonpositiveOnGrid);
    let eta_monotone = if certified {
        let etas = samples.iter().map(|s| f.sum_over(s.y.values())).collect::<Result<Vec<_>, _>>()?;
        let worst = etas.windows(2).map(|w| (w[1] - w[0]) / (1.0 + w[0].abs())).fold(0.0, f64::min);
        Some(CheckResult { ok: worst >= -STEP_SLACK, worst })
    } else {
        None
    };

    let base = samples[0].e.values();
    let drift = samples
        .iter()
        .flat_map(|s| s.e.values().iter().zip(base).zip(&s.b).map(|((e, a), b)| (e - a - b).abs() / (a + b).abs()))
        .fold(0.0, f64::max);
    let manifold = CheckResult { ok: drift <= 10.0 * trace.tol, worst: drift };
    let e_monotone = CheckResult { ok: e_worst >= -STEP_SLACK, worst: e_worst };
    let trace_completed = trace.is_completed();
    let passed = trace_completed && e_monotone.ok && manifold.ok && eta_monotone.is_none_or(|c| c.ok);
    Ok(AuditReport { passed, e_monotone, eta_monotone, manifold, trace_completed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dominance::{build_curve, CurveOptions};
    use crate::sympoly::{Point, SymCoords};

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quadratic_curve_passes() {
        let trace = build_curve(&pt(&[1.0, 1.0]), &pt(&[0.5, 2.0]), &CurveOptions::default()).unwrap();
        let report = monotonicity_audit(&trace, &CriterionFunction::log_squared()).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.eta_monotone.is_some());
    }

    #[test]
    fn trivial_curve_passes() {
        let a = pt(&[1.0, 2.0, 3.0]);
        let trace = build_curve(&a, &a, &CurveOptions::default()).unwrap();
        let report = monotonicity_audit(&trace, &CriterionFunction::log_squared()).unwrap();
        assert!(report.passed);
        assert_eq!(report.e_monotone.worst, 0.0);
    }

    #[test]
    fn decreasing_coefficient_is_flagged() {
        let mut trace = build_curve(&pt(&[1.0, 2.0]), &pt(&[1.5, 3.0]), &CurveOptions::default()).unwrap();
        let last = trace.samples.len() - 1;
        let y = pt(&[0.5, 2.0]);
        trace.samples[last].e = SymCoords::from_vec(crate::sympoly::elem_sym_slice(y.values()));
        trace.samples[last].y = y;
        let report = monotonicity_audit(&trace, &CriterionFunction::log_squared()).unwrap();
        assert!(!report.e_monotone.ok);
        assert!(!report.passed);
    }
}
