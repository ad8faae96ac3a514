//! Randomized constrained pairs and falsification campaigns.
//!
//! Every trial draws from its own ChaCha8 stream, `seed` with stream `trial`,
//! so reports do not depend on the number of worker threads.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::Complex;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::criterion::{CriterionError, CriterionFunction};
use crate::dominance::{
    build_curve_by_increments, compare, verify_inequality, AbortReason, CurveOptions, CurveStatus, DominanceError,
    Relation,
};
use crate::index_set::IndexSet;
use crate::numeric::compensated_sum;
use crate::sympoly::{self, elem_sym_slice, MonicPoly, Point, SymPolyError, DEFAULT_ROOT_TOL};

#[derive(Debug, Error)]
pub enum FuzzError {
    #[error("sampler starved: {accepted} acceptances in {attempts} attempts")]
    SamplerStarved { attempts: u64, accepted: u64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Dominance(#[from] DominanceError),
    #[error(transparent)]
    Criterion(#[from] CriterionError),
    #[error(transparent)]
    Point(#[from] SymPolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Interior `a`, random coefficient increments, `b` at the end of the curve.
    ForwardCurve,
    /// Independent `a` and `b`, kept when the constraint pattern matches.
    RejectionFilter,
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampler::ForwardCurve => "forward-curve",
            Sampler::RejectionFilter => "rejection-filter",
        })
    }
}

impl FromStr for Sampler {
    type Err = FuzzError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward-curve" | "forward" => Ok(Sampler::ForwardCurve),
            "rejection-filter" | "rejection" => Ok(Sampler::RejectionFilter),
            other => Err(FuzzError::InvalidConfig(format!("unknown sampler {other:?}"))),
        }
    }
}

fn serialize_name<S: Serializer>(f: &CriterionFunction, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(f.name())
}

/// Attempts per pair after which the rejection sampler gives up.
pub const REJECTION_ATTEMPTS: u64 = 1_000_000;
/// Redraws per pair after which the forward sampler gives up.
pub const FORWARD_REDRAWS: u64 = 10_000;

/// Draws `log10(A_k / E_k(a))` uniformly from this range.
const INCREMENT_DECADES: (f64, f64) = (-3.0, 1.0);

pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Sorted entries drawn log-uniformly from `(lo, hi)`.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Point {
    let v = (0..n).map(|_| log_uniform(rng, lo, hi)).collect();
    Point::from_unsorted(v).expect("log-uniform draws are positive")
}

/// Running counts of a sampler, merged across trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SamplerStats {
    pub attempts: u64,
    /// Forward draws whose target polynomial was not real-rooted.
    pub unreal_targets: u64,
    /// Forward draws whose curve aborted.
    pub curve_failures: u64,
    /// Draws rejected because the re-checked constraint pattern differed.
    pub profile_mismatches: u64,
}

impl SamplerStats {
    fn merge(&mut self, other: &SamplerStats) {
        self.attempts += other.attempts;
        self.unreal_targets += other.unreal_targets;
        self.curve_failures += other.curve_failures;
        self.profile_mismatches += other.profile_mismatches;
    }
}

fn pattern_matches(a: &Point, b: &Point, s: IndexSet) -> bool {
    compare(a, b).is_ok_and(|p| p.relation == Relation::Dominates && p.s == s)
}

fn validate_sampler(n: usize, s: IndexSet, sampler: Sampler, scale: (f64, f64)) -> Result<(), FuzzError> {
    if n < 2 {
        return Err(FuzzError::InvalidConfig(format!("n must be at least 2, got {n}")));
    }
    if !(scale.0 > 0.0 && scale.0 < scale.1 && scale.1.is_finite()) {
        return Err(FuzzError::InvalidConfig(format!("scale must satisfy 0 < lo < hi, got {scale:?}")));
    }
    if s.is_empty() || s.max().is_some_and(|m| m >= n) {
        return Err(FuzzError::InvalidConfig(format!("S = {s} must be a nonempty subset of 0..{}", n - 1)));
    }
    if sampler == Sampler::ForwardCurve && s.contains(0) {
        return Err(FuzzError::InvalidConfig("the forward sampler keeps E_0 fixed; S must avoid 0".into()));
    }
    Ok(())
}

/// Draws a pair with `compare(a, b).s == s`.
pub fn sample_pair<R: Rng + ?Sized>(
    n: usize,
    s: IndexSet,
    rng: &mut R,
    scale: (f64, f64),
    sampler: Sampler,
) -> Result<(Point, Point), FuzzError> {
    let mut stats = SamplerStats::default();
    sample_pair_counted(n, s, rng, scale, sampler, &mut stats)
}

fn sample_pair_counted<R: Rng + ?Sized>(
    n: usize,
    s: IndexSet,
    rng: &mut R,
    scale: (f64, f64),
    sampler: Sampler,
    stats: &mut SamplerStats,
) -> Result<(Point, Point), FuzzError> {
    validate_sampler(n, s, sampler, scale)?;
    match sampler {
        Sampler::ForwardCurve => forward_pair(n, s, rng, scale, stats),
        Sampler::RejectionFilter => rejection_pair(n, s, rng, scale, stats),
    }
}

fn forward_pair<R: Rng + ?Sized>(
    n: usize,
    s: IndexSet,
    rng: &mut R,
    scale: (f64, f64),
    stats: &mut SamplerStats,
) -> Result<(Point, Point), FuzzError> {
    let opts = CurveOptions { record_samples: false, ..CurveOptions::default() };
    for _ in 0..FORWARD_REDRAWS {
        stats.attempts += 1;
        let a = random_point(rng, n, scale.0, scale.1);
        if a.min_gap() < 1e-6 * a.max() {
            continue;
        }
        let ea = elem_sym_slice(a.values());
        let inc: Vec<f64> = (0..n)
            .map(|k| {
                let decades = rng.random_range(INCREMENT_DECADES.0..INCREMENT_DECADES.1);
                if s.contains(k) {
                    ea[k] * 10f64.powf(decades)
                } else {
                    0.0
                }
            })
            .collect();
        let trace = build_curve_by_increments(&a, s, &inc, &opts)?;
        match &trace.status {
            CurveStatus::Completed => {}
            CurveStatus::Aborted(AbortReason::TargetNotRealRooted) => {
                stats.unreal_targets += 1;
                continue;
            }
            CurveStatus::Aborted(_) => {
                stats.curve_failures += 1;
                continue;
            }
        }
        let b = trace.b;
        if !pattern_matches(&a, &b, s) {
            stats.profile_mismatches += 1;
            continue;
        }
        return Ok((a, b));
    }
    Err(FuzzError::SamplerStarved { attempts: FORWARD_REDRAWS, accepted: 0 })
}

fn rejection_pair<R: Rng + ?Sized>(
    n: usize,
    s: IndexSet,
    rng: &mut R,
    scale: (f64, f64),
    stats: &mut SamplerStats,
) -> Result<(Point, Point), FuzzError> {
    for _ in 0..REJECTION_ATTEMPTS {
        stats.attempts += 1;
        let a = random_point(rng, n, scale.0, scale.1);
        let mut b = random_point(rng, n, scale.0, scale.1);
        if !s.contains(0) {
            let factor = (a.values().iter().product::<f64>() / b.values().iter().product::<f64>()).powf(1.0 / n as f64);
            b = b.scaled(factor)?;
        }
        if pattern_matches(&a, &b, s) {
            return Ok((a, b));
        }
    }
    Err(FuzzError::SamplerStarved { attempts: REJECTION_ATTEMPTS, accepted: 0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzConfig {
    pub n: usize,
    pub s: IndexSet,
    #[serde(serialize_with = "serialize_name")]
    pub f: CriterionFunction,
    pub trials: u64,
    pub seed: u64,
    pub scale: (f64, f64),
    pub sampler: Sampler,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
    /// Relative violation threshold.
    pub tolerance: f64,
}

impl FuzzConfig {
    pub fn new(f: CriterionFunction, n: usize, s: IndexSet, trials: u64, seed: u64) -> Self {
        Self { n, s, f, trials, seed, scale: (1e-2, 1e2), sampler: Sampler::ForwardCurve, jobs: 0, tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub trial: u64,
    pub a: Point,
    pub b: Point,
    /// `sum f(b) - sum f(a)`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzReport {
    pub trials: u64,
    pub violations: Vec<Violation>,
    /// Smallest `margin / (1 + |sum f(b)|)`; `None` without trials.
    pub worst_margin: Option<f64>,
    pub seed: u64,
    pub n: usize,
    pub s: IndexSet,
    pub f: String,
    pub sampler: Sampler,
    pub scale: (f64, f64),
    pub tolerance: f64,
    pub sampler_stats: SamplerStats,
}

impl FuzzReport {
    /// Rows `a_1..a_n, b_1..b_n, margin`.
    pub fn write_violations_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.n).map(|i| format!("a_{i}")).collect();
        header.extend((1..=self.n).map(|i| format!("b_{i}")));
        header.push("margin".into());
        out.write_record(&header)?;
        for v in &self.violations {
            let row = v.a.values().iter().chain(v.b.values()).chain(std::iter::once(&v.margin));
            out.write_record(row.map(|x| format!("{x:e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Default)]
struct Partial {
    violations: Vec<Violation>,
    worst: Option<f64>,
    stats: SamplerStats,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.violations.extend(other.violations);
        self.worst = match (self.worst, other.worst) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        self.stats.merge(&other.stats);
        self
    }
}

/// Stream-separated generator for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn run_trial(cfg: &FuzzConfig, trial: u64) -> Result<Partial, FuzzError> {
    let mut rng = trial_rng(cfg.seed, trial);
    let mut stats = SamplerStats::default();
    let (a, b) = sample_pair_counted(cfg.n, cfg.s, &mut rng, cfg.scale, cfg.sampler, &mut stats)?;
    let verdict = verify_inequality(&a, &b, &cfg.f)?;
    let scale = 1.0 + verdict.sum_b.abs();
    let mut relative = verdict.margin / scale;
    let mut violations = Vec::new();
    if relative < -cfg.tolerance {
        // Pairwise differences avoid cancellation between the two large sums.
        let margin = compensated_sum(a.values().iter().zip(b.values()).map(|(x, y)| cfg.f.f(*y) - cfg.f.f(*x)));
        relative = margin / scale;
        if relative < -cfg.tolerance {
            violations.push(Violation { trial, a, b, margin });
        }
    }
    Ok(Partial { violations, worst: Some(relative), stats })
}

/// Samples `trials` constrained pairs and checks `sum f(a) <= sum f(b)` on each.
pub fn fuzz_inequality(cfg: &FuzzConfig) -> Result<FuzzReport, FuzzError> {
    validate_sampler(cfg.n, cfg.s, cfg.sampler, cfg.scale)?;
    let work = || {
        (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).try_reduce(Partial::default, |x, y| Ok(x.merge(y)))
    };
    let mut partial = if cfg.jobs == 0 {
        work()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| FuzzError::Pool(e.to_string()))?;
        pool.install(work)?
    };
    partial.violations.sort_by_key(|v| v.trial);
    if cfg.sampler == Sampler::RejectionFilter
        && partial.stats.attempts >= REJECTION_ATTEMPTS
        && (cfg.trials as f64) < 1e-4 * partial.stats.attempts as f64
    {
        return Err(FuzzError::SamplerStarved { attempts: partial.stats.attempts, accepted: cfg.trials });
    }
    Ok(FuzzReport {
        trials: cfg.trials,
        violations: partial.violations,
        worst_margin: partial.worst,
        seed: cfg.seed,
        n: cfg.n,
        s: cfg.s,
        f: cfg.f.name().to_string(),
        sampler: cfg.sampler,
        scale: cfg.scale,
        tolerance: cfg.tolerance,
        sampler_stats: partial.stats,
    })
}

/// Which polynomial family a root-count claim concerns: odd powers added
/// (`P`) or even powers added (`Q`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    OddPowers,
    EvenPowers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    Exactly(usize),
    AtMost(usize),
}

impl Bound {
    fn holds(self, count: usize) -> bool {
        match self {
            Bound::Exactly(m) => count == m,
            Bound::AtMost(m) => count <= m,
        }
    }
}

/// Interval `(-a_hi, -a_lo)` in terms of 1-based entries; `None` stands for
/// `-inf` on the left and `0` on the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NamedInterval {
    pub left: Option<usize>,
    pub right: Option<usize>,
}

impl NamedInterval {
    fn bounds(self, a: &[f64]) -> (f64, f64) {
        let lo = self.left.map_or(f64::NEG_INFINITY, |i| -a[i - 1]);
        let hi = self.right.map_or(0.0, |i| -a[i - 1]);
        (lo, hi)
    }
}

impl fmt::Display for NamedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.left.map_or("-inf".to_string(), |i| format!("-a_{i}"));
        let r = self.right.map_or("0".to_string(), |i| format!("-a_{i}"));
        write!(f, "({l}, {r})")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCountClaim {
    pub family: Family,
    pub interval: NamedInterval,
    pub bound: Bound,
    pub description: String,
    /// Trials where both root filtering and a Sturm count break the bound.
    pub violations: u64,
    /// Trials where only one of the two counts breaks the bound.
    pub ambiguous: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCountReport {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub claims: Vec<RootCountClaim>,
    pub total_violations: u64,
}

fn claims_for(n: usize) -> Vec<(Family, NamedInterval, Bound)> {
    let iv = |left, right| NamedInterval { left, right };
    if n % 2 == 1 {
        vec![
            (Family::OddPowers, iv(Some(1), None), Bound::Exactly(1)),
            (Family::OddPowers, iv(Some(n), Some(n - 1)), Bound::AtMost(2)),
            (Family::EvenPowers, iv(None, Some(n)), Bound::Exactly(1)),
            (Family::EvenPowers, iv(Some(2), Some(1)), Bound::AtMost(2)),
        ]
    } else {
        vec![
            (Family::OddPowers, iv(None, Some(n)), Bound::Exactly(1)),
            (Family::OddPowers, iv(Some(1), None), Bound::Exactly(1)),
            (Family::EvenPowers, iv(Some(n), Some(n - 1)), Bound::AtMost(2)),
            (Family::EvenPowers, iv(Some(2), Some(1)), Bound::AtMost(2)),
        ]
    }
}

/// Exponents added to `prod (x + a_i)` in each family: odd `2k - 1` and even
/// `2k`, both below `n`.
fn family_powers(n: usize, family: Family) -> Vec<usize> {
    match family {
        Family::OddPowers => (1..n).step_by(2).collect(),
        Family::EvenPowers => (2..n).step_by(2).collect(),
    }
}

/// Nonnegative coefficients on `powers`, at least one positive; each is zero
/// with probability one half and otherwise `E_k(a)` times a log-uniform factor.
fn random_increments<R: Rng + ?Sized>(rng: &mut R, a: &[f64], powers: &[usize]) -> Vec<f64> {
    let n = a.len();
    let ea = elem_sym_slice(a);
    let mut inc = vec![0.0; n];
    if powers.is_empty() {
        return inc;
    }
    let forced = powers[rng.random_range(0..powers.len())];
    for &k in powers {
        if k == forced || rng.random_bool(0.5) {
            inc[k] = ea[k] * log_uniform(rng, 1e-3, 1e2);
        }
    }
    inc
}

fn real_roots(p: &MonicPoly) -> Result<Vec<f64>, SymPolyError> {
    let roots: Vec<Complex<f64>> = sympoly::complex_roots(p)?;
    Ok(roots.into_iter().filter(|z| z.im.abs() <= DEFAULT_ROOT_TOL * (1.0 + z.norm())).map(|z| z.re).collect())
}

/// Audits the root-location claims for `prod (x + a_i)` plus nonnegative
/// multiples of odd or even powers of `x`.
pub fn check_lemma_rootcounts(
    n: usize,
    trials: u64,
    seed: u64,
    scale: (f64, f64),
) -> Result<RootCountReport, FuzzError> {
    if n < 2 {
        return Err(FuzzError::InvalidConfig(format!("n must be at least 2, got {n}")));
    }
    let specs = claims_for(n);
    let mut claims: Vec<RootCountClaim> = specs
        .iter()
        .map(|&(family, interval, bound)| {
            let name = match family {
                Family::OddPowers => "odd powers added",
                Family::EvenPowers => "even powers added",
            };
            let b = match bound {
                Bound::Exactly(m) => format!("exactly {m}"),
                Bound::AtMost(m) => format!("at most {m}"),
            };
            RootCountClaim {
                family,
                interval,
                bound,
                description: format!("{name}: {b} root(s) in {interval}"),
                violations: 0,
                ambiguous: 0,
            }
        })
        .collect();
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let a = random_point(&mut rng, n, scale.0, scale.1);
        let base = sympoly::roots_to_poly(&a);
        for family in [Family::OddPowers, Family::EvenPowers] {
            let inc = random_increments(&mut rng, a.values(), &family_powers(n, family));
            let p = base.plus(&inc);
            let roots = real_roots(&p)?;
            for claim in claims.iter_mut().filter(|c| c.family == family) {
                let (lo, hi) = claim.interval.bounds(a.values());
                let filtered = roots.iter().filter(|&&r| r > lo && r < hi).count();
                let sturm = sympoly::sturm_count(&p, lo, hi) - usize::from(p.eval(hi) == 0.0);
                match (claim.bound.holds(filtered), claim.bound.holds(sturm)) {
                    (true, true) => {}
                    (false, false) => claim.violations += 1,
                    _ => claim.ambiguous += 1,
                }
            }
        }
    }
    let total_violations = claims.iter().map(|c| c.violations).sum();
    Ok(RootCountReport { n, trials, seed, claims, total_violations })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub n: usize,
    pub s: IndexSet,
    pub trials: u64,
    pub seed: u64,
    /// `S` already contains every index, so no obstruction is claimed.
    pub skipped: bool,
    pub all_real_found: u64,
    /// Up to ten increment vectors that produced only real roots.
    pub examples: Vec<Vec<f64>>,
}

/// Adds small positive multiples of `x^k`, `k` in `s`, to `(x + c)^n` and
/// counts perturbations whose roots are all real.
pub fn amgm_obstruction_check(n: usize, s: IndexSet, trials: u64, seed: u64) -> Result<ObstructionReport, FuzzError> {
    let full = IndexSet::range(1, n);
    if n < 2 || s.is_empty() || !s.is_subset(full) {
        return Err(FuzzError::InvalidConfig(format!("S = {s} must be a nonempty subset of 1..{}", n - 1)));
    }
    let mut report =
        ObstructionReport { n, s, trials, seed, skipped: s == full, all_real_found: 0, examples: Vec::new() };
    if report.skipped {
        return Ok(report);
    }
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let c = log_uniform(&mut rng, 1e-2, 1e2);
        let a = Point::constant(n, c)?;
        let ea = elem_sym_slice(a.values());
        let inc: Vec<f64> =
            (0..n).map(|k| if s.contains(k) { ea[k] * log_uniform(&mut rng, 1e-6, 1e-1) } else { 0.0 }).collect();
        let roots = sympoly::poly_to_roots(&sympoly::roots_to_poly(&a).plus(&inc), DEFAULT_ROOT_TOL)?;
        if roots.all_real {
            report.all_real_found += 1;
            if report.examples.len() < 10 {
                report.examples.push(inc);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn forward_pairs_have_requested_pattern() {
        let mut rng = trial_rng(7, 0);
        for s in IndexSet::range(1, 4).nonempty_subsets() {
            for _ in 0..20 {
                let (a, b) = sample_pair(4, s, &mut rng, (1e-2, 1e2), Sampler::ForwardCurve).unwrap();
                assert_eq!(compare(&a, &b).unwrap().s, s);
            }
        }
    }

    #[test]
    fn rejection_rescales_constant_term() {
        let mut rng = trial_rng(3, 0);
        let s = IndexSet::from_iter([1]);
        let (a, b) = sample_pair(2, s, &mut rng, (1e-1, 1e1), Sampler::RejectionFilter).unwrap();
        let (ea, eb) = (elem_sym_slice(a.values()), elem_sym_slice(b.values()));
        assert!((ea[0] - eb[0]).abs() <= 1e-12 * (1.0 + eb[0]));
        assert!(eb[1] > ea[1]);
    }

    #[test]
    fn rejection_accepts_documented_pair() {
        // a = (1, 4); b rescaled to product 4 with a larger sum.
        let a = pt(&[1.0, 4.0]);
        let b = pt(&[0.5, 8.0]);
        assert!(pattern_matches(&a, &b, IndexSet::from_iter([1])));
        let c = pt(&[1.0, 1.0, 1.0]);
        let d = pt(&[0.5, 1.0, 2.0]);
        assert!(pattern_matches(&c, &d, IndexSet::from_iter([1, 2])));
    }

    #[test]
    fn forward_sampler_refuses_constant_index() {
        let mut rng = trial_rng(1, 0);
        let r = sample_pair(3, IndexSet::from_iter([0, 1]), &mut rng, (1e-2, 1e2), Sampler::ForwardCurve);
        assert!(matches!(r, Err(FuzzError::InvalidConfig(_))));
    }

    #[test]
    fn campaign_is_deterministic_and_thread_independent() {
        let mut cfg = FuzzConfig::new(CriterionFunction::log_squared(), 3, IndexSet::from_iter([1, 2]), 64, 11);
        cfg.jobs = 1;
        let one = fuzz_inequality(&cfg).unwrap();
        cfg.jobs = 3;
        let three = fuzz_inequality(&cfg).unwrap();
        assert_eq!(one, three);
        assert!(one.violations.is_empty());
        assert!(one.worst_margin.unwrap() >= -1e-9);
    }

    #[test]
    fn zero_trials_give_empty_report() {
        let cfg = FuzzConfig::new(CriterionFunction::log_squared(), 2, IndexSet::from_iter([1]), 0, 0);
        let r = fuzz_inequality(&cfg).unwrap();
        assert_eq!(r.trials, 0);
        assert!(r.violations.is_empty());
        assert_eq!(r.worst_margin, None);
    }

    #[test]
    fn weakened_constant_constraint_is_violated_for_negative_power() {
        let f = CriterionFunction::power(-0.5).unwrap();
        let a = pt(&[1.0 / 3.0; 3]);
        let b = pt(&[1.0; 3]);
        let v = crate::dominance::verify_inequality(&a, &b, &f).unwrap();
        assert!((v.sum_a - 3.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(!v.holds);
    }

    #[test]
    fn documented_root_locations() {
        let a = pt(&[1.0, 2.0, 3.0]);
        let base = sympoly::roots_to_poly(&a);
        let p = base.plus(&[0.0, 1.0, 0.0]);
        assert_eq!(p.eval(-1.0), -1.0);
        assert_eq!(p.eval(0.0), 6.0);
        assert_eq!(real_roots(&p).unwrap().iter().filter(|&&r| r > -1.0 && r < 0.0).count(), 1);
        let q = base.plus(&[0.0, 0.0, 1.0]);
        assert_eq!(q.eval(-3.0), 9.0);
        assert_eq!(q.eval(-10.0), -404.0);
        assert_eq!(real_roots(&q).unwrap().iter().filter(|&&r| r < -3.0).count(), 1);
        let quad = sympoly::roots_to_poly(&pt(&[1.0, 2.0])).plus(&[0.0, 1.0]);
        assert_eq!((quad.eval(-2.0), quad.eval(0.0), quad.eval(-1.0)), (-2.0, 2.0, -1.0));
        let r = real_roots(&quad).unwrap();
        assert_eq!(r.iter().filter(|&&x| x < -2.0).count(), 1);
        assert_eq!(r.iter().filter(|&&x| x > -1.0 && x < 0.0).count(), 1);
    }

    #[test]
    fn root_count_audit_small_run() {
        for n in 2..=6 {
            let report = check_lemma_rootcounts(n, 200, 5, (1e-2, 1e2)).unwrap();
            assert_eq!(report.total_violations, 0, "{report:?}");
        }
    }

    #[test]
    fn obstruction_small_run() {
        let r = amgm_obstruction_check(3, IndexSet::from_iter([1]), 200, 2).unwrap();
        assert_eq!(r.all_real_found, 0);
        let full = amgm_obstruction_check(2, IndexSet::from_iter([1]), 10, 2).unwrap();
        assert!(full.skipped);
    }
}
