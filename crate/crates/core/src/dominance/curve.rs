//! Root homotopy from `a` to `b` under monotone coefficient growth.
//!
//! A boundary start is first split by a seed perturbation evaluated by direct
//! root solves. The remaining growth is integrated as an ODE for the roots,
//! `y_i' = sum_k B_k' (-y_i)^k / prod_{j != i} (y_j - y_i)`, with an embedded
//! Dormand-Prince pair, and each accepted step is projected back onto the exact
//! coefficient manifold by simultaneous Newton (Weierstrass) correction.
//! Growth rates are throttled near collisions by [`Steering`].

use std::io::Write;

use serde::{Serialize, Serializer};

use super::seed::{seed_candidates, PerturbationPlan};
use super::steer::Steering;
use super::{compare, DominanceError, Relation};
use crate::criterion::CriterionFunction;
use crate::index_set::IndexSet;
use crate::sympoly::{self, elem_sym_slice, MonicPoly, Point, SymCoords, DEFAULT_ROOT_TOL};

fn serialize_name<S: Serializer>(f: &CriterionFunction, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(f.name())
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveOptions {
    /// Initial step in the ramp parameter.
    pub dt0: f64,
    /// Local error tolerance per step, relative to `1 + |y_i|`; also the
    /// relative endpoint tolerance.
    pub tol: f64,
    /// Smallest admissible root gap; `None` means `1e-7 (1 + max entry)`.
    pub min_gap: Option<f64>,
    pub max_steps: usize,
    /// Relative gap below which a root pair constrains the growth rates.
    pub activation_gap: f64,
    /// Largest admissible logarithmic shrink rate of a constrained gap.
    pub max_shrink_rate: f64,
    /// Fraction of each `A_k` that the seed phase may consume.
    pub seed_budget: f64,
    /// Keep every accepted step; otherwise only the first and last samples.
    pub record_samples: bool,
    /// Objective recorded as `eta = sum f(y_i)`.
    #[serde(serialize_with = "serialize_name")]
    pub objective: CriterionFunction,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            dt0: 1e-3,
            tol: 1e-10,
            min_gap: None,
            max_steps: 100_000,
            activation_gap: 0.02,
            max_shrink_rate: 1.0,
            seed_budget: 0.5,
            record_samples: true,
            objective: CriterionFunction::log_squared(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSample {
    pub t: f64,
    pub y: Point,
    pub e: SymCoords,
    /// `B_k(t)` for every `k`, zero off the growing indices.
    pub b: Vec<f64>,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseKind {
    Seed,
    LinearRamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phase {
    pub kind: PhaseKind,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason")]
pub enum AbortReason {
    /// Two roots came closer than `min_gap`. `t` assumes unthrottled growth.
    RootCollision {
        t: f64,
        gap: f64,
    },
    /// Growth could not continue without closing a constrained gap.
    Stalled {
        t: f64,
    },
    StepLimit {
        t: f64,
    },
    EndpointMismatch {
        error: f64,
    },
    SeedFailed {
        detail: String,
    },
    /// Growth was prescribed by increments whose target polynomial has
    /// non-real or repeated roots.
    TargetNotRealRooted,
    /// Growth lost track of its targets: the throttled ramp needed more than
    /// `MAX_RAMP_STRETCH` times its nominal length.
    Overstretched {
        t: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum CurveStatus {
    Completed,
    Aborted(AbortReason),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTrace {
    pub n: usize,
    pub s: IndexSet,
    pub a: Point,
    /// Target point; for curves driven by coefficient increments, the endpoint reached.
    pub b: Point,
    pub samples: Vec<CurveSample>,
    pub phases: Vec<Phase>,
    pub status: CurveStatus,
    pub tol: f64,
    pub min_gap: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Accepted steps on which some growth rate was throttled.
    pub steps_throttled: usize,
    pub endpoint_error: f64,
    /// Largest `|E_k(y) - E_k(a) - B_k| / (E_k(a) + B_k)` over recorded samples.
    pub max_manifold_drift: f64,
}

impl CurveTrace {
    pub fn is_completed(&self) -> bool {
        self.status == CurveStatus::Completed
    }

    /// Converts an aborted trace into the matching error.
    pub fn into_result(self) -> Result<Self, DominanceError> {
        match &self.status {
            CurveStatus::Completed => Ok(self),
            CurveStatus::Aborted(AbortReason::RootCollision { t, .. }) => Err(DominanceError::RootCollision { t: *t }),
            CurveStatus::Aborted(AbortReason::EndpointMismatch { error }) => {
                Err(DominanceError::EndpointMismatch { error: *error })
            }
            CurveStatus::Aborted(other) => Err(DominanceError::Aborted(format!("{other:?}"))),
        }
    }

    pub fn last(&self) -> &CurveSample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn csv_header(&self) -> Vec<String> {
        let n = self.n;
        let mut h = vec!["t".to_string()];
        h.extend((1..=n).map(|i| format!("y_{i}")));
        h.extend((0..n).map(|k| format!("E_{k}")));
        h.extend((0..n).map(|k| format!("B_{k}")));
        h.push("eta".into());
        h
    }

    /// One row per sample: `t, y_1..y_n, E_0..E_{n-1}, B_0..B_{n-1}, eta`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.csv_header())?;
        for s in &self.samples {
            let mut row = vec![s.t];
            row.extend_from_slice(s.y.values());
            row.extend_from_slice(s.e.values());
            row.extend_from_slice(&s.b);
            row.push(s.eta);
            out.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Builds a curve from `a` to `b` along which every `E_k` is non-decreasing.
///
/// Requires `b` to dominate `a`. Numerical failures are reported through an
/// aborted [`CurveStatus`]; see [`CurveTrace::into_result`].
pub fn build_curve(a: &Point, b: &Point, opts: &CurveOptions) -> Result<CurveTrace, DominanceError> {
    let profile = compare(a, b)?;
    match profile.relation {
        Relation::Incomparable => return Err(DominanceError::NotDominating(Relation::Incomparable)),
        Relation::Equal => return Ok(trivial_trace(a, opts)),
        Relation::Dominates => {}
    }
    let n = a.n();
    let ea = elem_sym_slice(a.values());
    let eb = elem_sym_slice(b.values());
    let deltas: Vec<f64> = (0..n).map(|k| if profile.s.contains(k) { eb[k] - ea[k] } else { 0.0 }).collect();
    let targets: Vec<f64> = (0..n).map(|k| if profile.s.contains(k) { eb[k] } else { ea[k] }).collect();
    let min_gap = opts.min_gap.unwrap_or(1e-7 * (1.0 + a.max()));
    let mut trace = trace_growth(a, profile.s, &deltas, &targets, min_gap, opts)?;
    trace.b = b.clone();
    if trace.is_completed() {
        let end = trace.last().y.values();
        let err = end.iter().zip(b.values()).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        let norm = b.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        trace.endpoint_error = err;
        if err > opts.tol * (1.0 + norm) {
            trace.status = CurveStatus::Aborted(AbortReason::EndpointMismatch { error: err });
        }
    }
    Ok(trace)
}

/// Curve from `a` adding `increments[k]` to `E_k(a)` for `k` in `s`. The
/// endpoint becomes `trace.b`.
pub fn build_curve_by_increments(
    a: &Point,
    s: IndexSet,
    increments: &[f64],
    opts: &CurveOptions,
) -> Result<CurveTrace, DominanceError> {
    let n = a.n();
    let ea = elem_sym_slice(a.values());
    let deltas: Vec<f64> = (0..n).map(|k| if s.contains(k) { increments[k] } else { 0.0 }).collect();
    let targets: Vec<f64> = ea.iter().zip(&deltas).map(|(e, d)| e + d).collect();
    let min_gap = opts.min_gap.unwrap_or(1e-7 * (1.0 + a.max()));
    let target = sympoly::poly_to_roots(&MonicPoly::new(targets.clone())?, DEFAULT_ROOT_TOL)?;
    if !target.all_real || target.min_gap < min_gap || target.values[0] <= 0.0 {
        let mut trace = trivial_trace(a, opts);
        trace.s = s;
        trace.min_gap = min_gap;
        trace.status = CurveStatus::Aborted(AbortReason::TargetNotRealRooted);
        return Ok(trace);
    }
    trace_growth(a, s, &deltas, &targets, min_gap, opts)
}

fn trivial_trace(a: &Point, opts: &CurveOptions) -> CurveTrace {
    let n = a.n();
    let mut rec = Recorder::new(opts);
    rec.push(0.0, a.values(), &vec![0.0; n]);
    let samples = rec.finish(0.0, 1.0, &elem_sym_slice(a.values()));
    CurveTrace {
        n,
        s: IndexSet::empty(),
        a: a.clone(),
        b: a.clone(),
        samples,
        phases: Vec::new(),
        status: CurveStatus::Completed,
        tol: opts.tol,
        min_gap: opts.min_gap.unwrap_or(1e-7 * (1.0 + a.max())),
        steps_accepted: 0,
        steps_rejected: 0,
        steps_throttled: 0,
        endpoint_error: 0.0,
        max_manifold_drift: 0.0,
    }
}

/// Raw samples in phase parameters, mapped to curve time at the end.
struct Recorder<'a> {
    objective: &'a CriterionFunction,
    record_all: bool,
    raw: Vec<(f64, Vec<f64>, Vec<f64>, bool)>,
}

impl<'a> Recorder<'a> {
    fn new(opts: &'a CurveOptions) -> Self {
        Self { objective: &opts.objective, record_all: opts.record_samples, raw: Vec::new() }
    }

    fn push_seed(&mut self, s: f64, y: &[f64], b: &[f64]) {
        self.raw.push((s, y.to_vec(), b.to_vec(), true));
    }

    fn push(&mut self, tau: f64, y: &[f64], b: &[f64]) {
        if !self.record_all && self.raw.len() >= 2 {
            self.raw.pop();
        }
        self.raw.push((tau, y.to_vec(), b.to_vec(), false));
    }

    /// Maps seed parameters unchanged and ramp parameters `tau` to
    /// `seed_end + (1 - seed_end) tau / tau_end`.
    fn finish(self, seed_end: f64, tau_end: f64, ea: &[f64]) -> Vec<CurveSample> {
        let scale = if tau_end > 0.0 { (1.0 - seed_end) / tau_end } else { 0.0 };
        self.raw
            .into_iter()
            .map(|(param, y, b, is_seed)| {
                let t = if is_seed { param } else { seed_end + param * scale };
                let e = elem_sym_slice(&y);
                let eta = self.objective.sum_over(&y).unwrap_or(f64::NAN);
                debug_assert_eq!(e.len(), ea.len());
                CurveSample {
                    t,
                    y: Point::new(y).expect("tracked roots stay sorted and positive"),
                    e: SymCoords::from_vec(e),
                    b,
                    eta,
                }
            })
            .collect()
    }
}

fn relative_drift(sample: &CurveSample, ea: &[f64]) -> f64 {
    sample
        .e
        .values()
        .iter()
        .zip(ea)
        .zip(&sample.b)
        .map(|((e, a), b)| (e - a - b).abs() / (a + b).abs())
        .fold(0.0, f64::max)
}

fn trace_growth(
    a: &Point,
    s: IndexSet,
    deltas: &[f64],
    targets: &[f64],
    min_gap: f64,
    opts: &CurveOptions,
) -> Result<CurveTrace, DominanceError> {
    let n = a.n();
    let ea = elem_sym_slice(a.values());
    let mut rec = Recorder::new(opts);
    rec.push_seed(0.0, a.values(), &vec![0.0; n]);
    let mut phases = Vec::new();
    let mut y = a.values().to_vec();
    let mut b0 = vec![0.0; n];
    let mut seed_end = 0.0;
    let mut status = CurveStatus::Completed;

    if a.min_gap() < min_gap {
        let plans = seed_candidates(a, s.without(0), min_gap)?;
        match run_seed(a, &plans, deltas, min_gap, opts.seed_budget) {
            Some(seed) => {
                for (param, roots, inc) in &seed.samples {
                    rec.push_seed(*param, roots, inc);
                }
                seed_end = seed.epsilon;
                y = seed.roots;
                b0 = seed.increments;
                phases.push(Phase { kind: PhaseKind::Seed, t_start: 0.0, t_end: seed_end });
            }
            None => {
                status = CurveStatus::Aborted(AbortReason::SeedFailed {
                    detail: "no seed parameter gives real roots separated by min_gap".into(),
                });
            }
        }
    }

    let mut ramp = RampOutcome::default();
    if status == CurveStatus::Completed {
        ramp = run_ramp(&mut rec, &ea, deltas, targets, &y, &b0, seed_end, min_gap, opts);
        if let Some(reason) = ramp.abort.clone() {
            status = CurveStatus::Aborted(reason);
        }
        let t_end = if status == CurveStatus::Completed { 1.0 } else { seed_end + (1.0 - seed_end) * ramp.tau };
        phases.push(Phase { kind: PhaseKind::LinearRamp, t_start: seed_end, t_end });
    }
    let tau_end = if status == CurveStatus::Completed { ramp.tau } else { 1.0 };
    let samples = rec.finish(seed_end, tau_end, &ea);
    let max_manifold_drift = samples.iter().map(|smp| relative_drift(smp, &ea)).fold(0.0, f64::max);
    let end = samples[samples.len() - 1].y.clone();
    Ok(CurveTrace {
        n,
        s,
        a: a.clone(),
        b: end,
        samples,
        phases,
        status,
        tol: opts.tol,
        min_gap,
        steps_accepted: ramp.accepted,
        steps_rejected: ramp.rejected,
        steps_throttled: ramp.throttled,
        endpoint_error: 0.0,
        max_manifold_drift,
    })
}

struct SeedOutcome {
    epsilon: f64,
    roots: Vec<f64>,
    increments: Vec<f64>,
    samples: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

const SEED_PROBES: i32 = 12;

fn run_seed(a: &Point, plans: &[PerturbationPlan], deltas: &[f64], min_gap: f64, budget: f64) -> Option<SeedOutcome> {
    let n = a.n();
    let base = sympoly::roots_to_poly(a);
    // Eigenvalue real parts seed a real simultaneous Newton iteration, which
    // settles only if every root is real; clustered real roots often carry
    // spurious imaginary parts in the eigenvalues.
    let settle = |mut y: Vec<f64>, inc: &[f64]| -> Option<Vec<f64>> {
        if !project(&mut y, a.values(), inc) {
            return None;
        }
        y.sort_by(f64::total_cmp);
        strictly_sorted_positive(&y).then_some(y)
    };
    let from_eigen = |inc: &[f64]| -> Option<Vec<f64>> {
        let guess = sympoly::complex_roots(&base.plus(inc)).ok()?;
        // A spurious conjugate pair hints at the spread of a real cluster.
        let mut y: Vec<f64> = guess.iter().map(|z| -z.re + z.im).collect();
        y.sort_by(f64::total_cmp);
        for i in 1..n {
            let floor = y[i - 1] + 1e-7 * y[i - 1].abs();
            if y[i] < floor {
                y[i] = floor;
            }
        }
        settle(y, inc)
    };
    // Roots at `eps` and at each halving below it. Each level starts from the
    // previous one contracted toward `a`, since eigenvalues are unreliable
    // inside a tight cluster next to a distant root.
    let chain = |plan: &PerturbationPlan, eps: f64| -> Option<Vec<(f64, Vec<f64>)>> {
        let top = from_eigen(&plan.increments(n, eps))?;
        if sympoly::min_gap(&top) < min_gap {
            return None;
        }
        let mut out = vec![(eps, top)];
        for j in 1..=SEED_PROBES {
            let p = eps * 0.5f64.powi(j);
            let inc = plan.increments(n, p);
            let prev = &out[out.len() - 1].1;
            let contracted: Vec<f64> =
                prev.iter().zip(a.values()).map(|(y, c)| c + (y - c) * std::f64::consts::FRAC_1_SQRT_2).collect();
            let y = settle(contracted, &inc).or_else(|| settle(prev.clone(), &inc)).or_else(|| from_eigen(&inc))?;
            out.push((p, y));
        }
        Some(out)
    };
    let admissible = |plan: &PerturbationPlan, eps: f64| chain(plan, eps).is_some();
    for plan in plans {
        let mut cap = (0.999 * plan.epsilon_max).min(0.5);
        for r in &plan.ramps {
            let limit = budget * deltas[r.index];
            if r.value(cap) > limit {
                let (mut lo, mut hi) = (0.0, cap);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if r.value(mid) <= limit {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                cap = lo;
            }
        }
        if !(cap > 0.0) {
            continue;
        }
        let mut eps = cap;
        let mut found = false;
        for _ in 0..60 {
            if admissible(plan, eps) {
                found = true;
                break;
            }
            eps *= 0.5;
        }
        if !found {
            continue;
        }
        let (mut lo, mut hi) = (eps, (2.0 * eps).min(cap));
        if hi > lo && !admissible(plan, hi) {
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                if admissible(plan, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        } else {
            lo = hi;
        }
        let epsilon = lo;
        let Some(mut levels) = chain(plan, epsilon) else { continue };
        let roots = levels.remove(0).1;
        let samples = levels.into_iter().rev().map(|(p, y)| (p, y, plan.increments(n, p))).collect();
        return Some(SeedOutcome { epsilon, roots, increments: plan.increments(n, epsilon), samples });
    }
    None
}

#[derive(Default)]
struct RampOutcome {
    tau: f64,
    accepted: usize,
    rejected: usize,
    throttled: usize,
    abort: Option<AbortReason>,
}

/// `y_i' = D(-y_i) / prod_{j != i} (y_j - y_i)` with `D(x) = sum_k d_k x^k`.
fn root_velocity(y: &[f64], d: &[f64], out: &mut [f64]) -> bool {
    let n = y.len();
    for i in 0..n {
        let x = -y[i];
        let num = d.iter().rev().fold(0.0, |acc, dk| acc * x + dk);
        let mut denom = 1.0;
        for (j, yj) in y.iter().enumerate() {
            if j != i {
                denom *= yj - y[i];
            }
        }
        if denom == 0.0 || !denom.is_finite() {
            return false;
        }
        out[i] = num / denom;
    }
    true
}

fn strictly_sorted_positive(y: &[f64]) -> bool {
    y[0] > 0.0 && y.windows(2).all(|w| w[0] < w[1]) && y.iter().all(|v| v.is_finite())
}

// Dormand-Prince 5(4) tableau; the field is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One embedded step; returns the fifth-order solution and the scaled error
/// norm, or `None` if a stage leaves the ordered chamber.
fn dopri_step(y: &[f64], d: &[f64], h: f64, tol: f64) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    let mut k = [(); 7].map(|_| vec![0.0; n]);
    let mut stage = vec![0.0; n];
    for s in 0..7 {
        for i in 0..n {
            stage[i] = y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
        }
        if !strictly_sorted_positive(&stage) {
            return None;
        }
        if !root_velocity(&stage, d, &mut k[s]) {
            return None;
        }
    }
    let mut out = vec![0.0; n];
    let mut err = 0.0_f64;
    for i in 0..n {
        let hi: f64 = (0..7).map(|s| B5[s] * k[s][i]).sum();
        let lo: f64 = (0..7).map(|s| B4[s] * k[s][i]).sum();
        out[i] = y[i] + h * hi;
        err = err.max((h * (hi - lo)).abs() / (tol * (1.0 + y[i].abs())));
    }
    Some((out, err))
}

/// `prod_j (x + anchor_j) + sum_k dc_k x^k` at `x = -y`. The factored part
/// keeps full relative accuracy next to clustered anchors.
fn anchored_residual(anchor: &[f64], dc: &[f64], y: f64) -> f64 {
    let product: f64 = anchor.iter().map(|a| a - y).product();
    let correction = dc.iter().rev().fold(0.0, |acc, d| acc * -y + d);
    product + correction
}

/// Simultaneous Newton (Weierstrass) correction of `y` towards the roots of
/// `prod (x + anchor_j) + sum_k dc_k x^k`. Returns false if it does not settle.
fn project(y: &mut [f64], anchor: &[f64], dc: &[f64]) -> bool {
    let n = y.len();
    let mut delta = vec![0.0; n];
    let mut prev = f64::INFINITY;
    for iter in 0..40 {
        for i in 0..n {
            let denom: f64 = (0..n).filter(|&j| j != i).map(|j| y[j] - y[i]).product();
            delta[i] = anchored_residual(anchor, dc, y[i]) / denom;
        }
        let mut size = 0.0_f64;
        for i in 0..n {
            y[i] += delta[i];
            size = size.max(delta[i].abs() / y[i].abs());
        }
        if !size.is_finite() {
            return false;
        }
        if size <= 2.0 * f64::EPSILON {
            return true;
        }
        if iter >= 3 && size > 0.5 * prev {
            return size <= 1e-9;
        }
        prev = size;
    }
    prev <= 1e-9
}

/// Ramp length, in units of the unthrottled length, after which growth is
/// considered stuck.
const MAX_RAMP_STRETCH: f64 = 50.0;

#[allow(clippy::too_many_arguments)]
fn run_ramp(
    rec: &mut Recorder<'_>,
    ea: &[f64],
    deltas: &[f64],
    targets: &[f64],
    y0: &[f64],
    b0: &[f64],
    seed_end: f64,
    min_gap: f64,
    opts: &CurveOptions,
) -> RampOutcome {
    let n = y0.len();
    let steering = Steering { activation_gap: opts.activation_gap, max_shrink: opts.max_shrink_rate };
    let rates: Vec<f64> = (0..n).map(|k| (deltas[k] - b0[k]).max(0.0)).collect();
    let mut done: Vec<bool> = rates.iter().map(|&r| r <= 0.0).collect();
    let mut y = y0.to_vec();
    let mut bcur = b0.to_vec();
    let mut out = RampOutcome::default();
    let mut h_try = opts.dt0;
    let curve_time = |tau: f64| seed_end + (1.0 - seed_end) * tau;
    let coefficient = |k: usize, b: &[f64], done: &[bool]| if done[k] { targets[k] } else { ea[k] + b[k] };

    while done.iter().any(|d| !d) {
        if out.tau > MAX_RAMP_STRETCH {
            out.abort = Some(AbortReason::Overstretched { t: curve_time(out.tau) });
            return out;
        }
        if out.accepted + out.rejected >= opts.max_steps {
            out.abort = Some(AbortReason::StepLimit { t: curve_time(out.tau) });
            return out;
        }
        let live: Vec<f64> = (0..n).map(|k| if done[k] { 0.0 } else { rates[k] }).collect();
        let Some(w) = steering.weights(&y, &live) else {
            out.abort = Some(AbortReason::Stalled { t: curve_time(out.tau) });
            return out;
        };
        let d: Vec<f64> = (0..n).map(|k| w[k] * live[k]).collect();
        if d.iter().zip(&live).all(|(dk, lk)| *dk <= 1e-12 * lk) {
            out.abort = Some(AbortReason::Stalled { t: curve_time(out.tau) });
            return out;
        }
        let throttled = (0..n).any(|k| live[k] > 0.0 && w[k] < 1.0);
        let h_finish =
            (0..n).filter(|&k| d[k] > 0.0).map(|k| (deltas[k] - bcur[k]) / d[k]).fold(f64::INFINITY, f64::min);
        let h = h_try.min(h_finish);
        let finishing: Vec<bool> =
            (0..n).map(|k| done[k] || (d[k] > 0.0 && (deltas[k] - bcur[k]) / d[k] <= h * (1.0 + 1e-12))).collect();

        let e_y = elem_sym_slice(&y);
        let step = dopri_step(&y, &d, h, opts.tol);
        let accepted = step.and_then(|(mut y_new, err)| {
            if err > 1.0 {
                return Some(Err(err));
            }
            let predicted = y_new.clone();
            let b_new: Vec<f64> = (0..n).map(|k| if finishing[k] { deltas[k] } else { bcur[k] + h * d[k] }).collect();
            let dc: Vec<f64> = (0..n).map(|k| coefficient(k, &b_new, &finishing) - e_y[k]).collect();
            if !project(&mut y_new, &y, &dc) || !strictly_sorted_positive(&y_new) {
                return None;
            }
            let gap = sympoly::min_gap(&predicted);
            let moved = y_new.iter().zip(&predicted).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            if moved > 0.1 * gap {
                return None;
            }
            Some(Ok((y_new, b_new, err)))
        });
        match accepted {
            Some(Ok((y_new, b_new, err))) => {
                let gap = sympoly::min_gap(&y_new);
                if gap < min_gap {
                    out.abort = Some(AbortReason::RootCollision { t: curve_time(out.tau + h), gap });
                    return out;
                }
                y = y_new;
                bcur = b_new;
                out.tau += h;
                out.accepted += 1;
                if throttled {
                    out.throttled += 1;
                }
                done = finishing;
                rec.push(out.tau, &y, &bcur);
                let grow = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
                // A step cut short to land on a target says nothing about the
                // local error scale.
                h_try = if h < h_try { h_try } else { h * grow };
            }
            Some(Err(err)) => {
                out.rejected += 1;
                h_try = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
            }
            None => {
                out.rejected += 1;
                h_try = h * 0.5;
            }
        }
        if h_try < 1e-14 {
            let gap = sympoly::min_gap(&y);
            out.abort = Some(if gap < 10.0 * min_gap {
                AbortReason::RootCollision { t: curve_time(out.tau), gap }
            } else {
                AbortReason::Stalled { t: curve_time(out.tau) }
            });
            return out;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quadratic_from_double_root() {
        let trace = build_curve(&pt(&[1.0, 1.0]), &pt(&[0.5, 2.0]), &CurveOptions::default()).unwrap();
        assert!(trace.is_completed(), "{:?}", trace.status);
        let end = trace.last().y.values().to_vec();
        assert!((end[0] - 0.5).abs() < 1e-10 && (end[1] - 2.0).abs() < 1e-10, "{end:?}");
        assert_eq!(trace.phases[0].kind, PhaseKind::Seed);
        assert_eq!(trace.phases.last().unwrap().t_end, 1.0);
        assert!(trace.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert!(trace.max_manifold_drift < 1e-12);
    }

    #[test]
    fn interior_linear_ramp_ends_at_b() {
        let a = pt(&[1.0, 2.0, 3.0]);
        let b = pt(&[0.9, 2.2, 3.6]);
        let profile = compare(&a, &b).unwrap();
        assert_eq!(profile.relation, Relation::Dominates);
        let trace = build_curve(&a, &b, &CurveOptions::default()).unwrap();
        assert!(trace.is_completed(), "{:?}", trace.status);
        assert!(trace.endpoint_error < 1e-10);
        assert_eq!(trace.phases.len(), 1);
    }

    #[test]
    fn equal_points_give_single_sample() {
        let a = pt(&[1.0, 2.0]);
        let trace = build_curve(&a, &a, &CurveOptions::default()).unwrap();
        assert!(trace.is_completed());
        assert_eq!(trace.samples.len(), 1);
    }

    #[test]
    fn incomparable_points_are_refused() {
        let r = build_curve(&pt(&[1.0, 3.0]), &pt(&[1.0, 2.0]), &CurveOptions::default());
        assert!(matches!(r, Err(DominanceError::NotDominating(Relation::Incomparable))));
    }

    #[test]
    fn all_equal_quartic_start() {
        let a = pt(&[1.0; 4]);
        let b = pt(&[0.5, 0.8, 1.25, 2.0]);
        assert_eq!(compare(&a, &b).unwrap().s, IndexSet::range(1, 4));
        let trace = build_curve(&a, &b, &CurveOptions::default()).unwrap();
        assert!(trace.is_completed(), "{:?}", trace.status);
        assert_eq!(trace.phases[0].kind, PhaseKind::Seed);
        assert!(trace.endpoint_error < 1e-9);
    }

    #[test]
    fn increments_without_real_target_are_refused() {
        let a = pt(&[1.0; 4]);
        let trace =
            build_curve_by_increments(&a, IndexSet::range(1, 4), &[0.0, 0.3, 0.5, 0.2], &CurveOptions::default())
                .unwrap();
        assert_eq!(trace.status, CurveStatus::Aborted(AbortReason::TargetNotRealRooted));
    }

    #[test]
    fn increments_reach_their_coefficients() {
        let a = pt(&[0.5, 1.0, 3.0]);
        let inc = [0.0, 0.7, 0.2];
        let trace = build_curve_by_increments(&a, IndexSet::range(1, 3), &inc, &CurveOptions::default()).unwrap();
        assert!(trace.is_completed(), "{:?}", trace.status);
        let ea = elem_sym_slice(a.values());
        for k in 0..3 {
            assert!((trace.last().e.get(k) - ea[k] - inc[k]).abs() < 1e-12 * (1.0 + ea[k]));
        }
    }

    #[test]
    fn csv_layout() {
        let trace = build_curve(&pt(&[1.0, 1.0]), &pt(&[0.5, 2.0]), &CurveOptions::default()).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,y_1,y_2,E_0,E_1,B_0,B_1,eta");
        assert_eq!(lines.count(), trace.samples.len());
    }
}
