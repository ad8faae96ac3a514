//! Sign of `(-1)^{n+k} (x^k f'(x))^{(n-1)}` for candidate functions `f`, grid
//! certification of that sign, and explicit pairs violating the inequality
//! when the sign is positive somewhere.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index_set::IndexSet;
use crate::numeric::compensated_sum;
use crate::sympoly::{self, Point, SymPolyError, DEFAULT_ROOT_TOL};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriterionError {
    #[error("x = {x} lies outside the open interval ({lo}, {hi})")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("index k = {k} is invalid for n = {n} (need n >= 2 and k <= n - 1)")]
    InvalidIndex { n: usize, k: usize },
    #[error("invalid interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("grid size {0} is below 2")]
    InvalidGrid(usize),
    #[error("unknown function {0:?}; expected \"log2\" or \"pow:<p>\"")]
    UnknownFunction(String),
    #[error("criterion value {value} at x = {x} is not positive")]
    CriterionNotViolated { x: f64, value: f64 },
    #[error("no real, distinct, positive perturbed roots after {halvings} halvings of t")]
    NoRealRoots { halvings: usize },
    #[error(transparent)]
    Point(#[from] SymPolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FunctionKind {
    LogSquared,
    Power(f64),
    Generic,
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, CriterionError> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(CriterionError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn positive_reals() -> Self {
        Self { lo: 0.0, hi: f64::INFINITY }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    fn check(&self, x: f64) -> Result<(), CriterionError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(CriterionError::OutOfDomain { x, lo: self.lo, hi: self.hi })
        }
    }

    /// Distance from `x` to the nearer endpoint; `1 + |x|` when both are infinite.
    fn room(&self, x: f64) -> f64 {
        let d = (x - self.lo).min(self.hi - x);
        if d.is_finite() {
            d
        } else {
            1.0 + x.abs()
        }
    }
}

/// A candidate `f` with its derivative on an open interval.
#[derive(Clone)]
pub struct CriterionFunction {
    kind: FunctionKind,
    interval: Interval,
    name: String,
    f: RealFn,
    fprime: RealFn,
}

impl fmt::Debug for CriterionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CriterionFunction")
            .field("kind", &self.kind)
            .field("interval", &self.interval)
            .field("name", &self.name)
            .finish()
    }
}

impl CriterionFunction {
    /// `f(x) = log(x)^2` on `(0, inf)`.
    pub fn log_squared() -> Self {
        Self {
            kind: FunctionKind::LogSquared,
            interval: Interval::positive_reals(),
            name: "log2".into(),
            f: Arc::new(|x: f64| x.ln().powi(2)),
            fprime: Arc::new(|x: f64| 2.0 * x.ln() / x),
        }
    }

    /// `f(x) = x^p` on `(0, inf)`.
    pub fn power(p: f64) -> Result<Self, CriterionError> {
        if !p.is_finite() {
            return Err(CriterionError::UnknownFunction(format!("pow:{p}")));
        }
        Ok(Self {
            kind: FunctionKind::Power(p),
            interval: Interval::positive_reals(),
            name: format!("pow:{p}"),
            f: Arc::new(move |x: f64| x.powf(p)),
            fprime: Arc::new(move |x: f64| p * x.powf(p - 1.0)),
        })
    }

    /// User-supplied `f` and `f'`; the criterion is then evaluated by finite
    /// differences, so `f'` must be smooth on the interval.
    pub fn generic(name: impl Into<String>, interval: Interval, f: RealFn, fprime: RealFn) -> Self {
        Self { kind: FunctionKind::Generic, interval, name: name.into(), f, fprime }
    }

    /// Parses `"log2"` or `"pow:<p>"`.
    pub fn parse(text: &str) -> Result<Self, CriterionError> {
        let s = text.trim();
        if s == "log2" {
            return Ok(Self::log_squared());
        }
        if let Some(p) = s.strip_prefix("pow:") {
            let p: f64 = p.trim().parse().map_err(|_| CriterionError::UnknownFunction(text.into()))?;
            return Self::power(p);
        }
        Err(CriterionError::UnknownFunction(text.into()))
    }

    /// Same `f` and `f'`, but evaluated through the finite-difference path.
    pub fn as_generic(&self) -> Self {
        Self { kind: FunctionKind::Generic, ..self.clone() }
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn fprime(&self, x: f64) -> f64 {
        (self.fprime)(x)
    }

    pub fn check_domain(&self, x: f64) -> Result<(), CriterionError> {
        self.interval.check(x)
    }

    /// Compensated `sum f(y_i)` after checking every entry lies in the interval.
    pub fn sum_over(&self, y: &[f64]) -> Result<f64, CriterionError> {
        for &v in y {
            self.check_domain(v)?;
        }
        Ok(compensated_sum(y.iter().map(|&v| self.f(v))))
    }
}

fn check_index(n: usize, k: usize) -> Result<(), CriterionError> {
    if n < 2 || k >= n {
        return Err(CriterionError::InvalidIndex { n, k });
    }
    Ok(())
}

fn parity_sign(n: usize, k: usize) -> f64 {
    if (n + k).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `m (m-1) ... (m-r+1)`.
fn falling(m: f64, r: usize) -> f64 {
    (0..r).map(|i| m - i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Terms of `d^j/dx^j [2 x^m log x]`: the `log x` coefficient and the
/// constant parts, both to be multiplied by `x^(m-j)`.
fn log_squared_terms(m: f64, j: usize) -> (f64, Vec<f64>) {
    let log_coeff = 2.0 * falling(m, j);
    let consts = (1..=j)
        .map(|i| {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            2.0 * binomial(j, i) * falling(m, j - i) * sign * factorial(i - 1)
        })
        .collect();
    (log_coeff, consts)
}

/// `(-1)^{n+k} (x^k f'(x))^{(n-1)}`.
pub fn criterion_value(f: &CriterionFunction, n: usize, k: usize, x: f64) -> Result<f64, CriterionError> {
    check_index(n, k)?;
    f.check_domain(x)?;
    let sign = parity_sign(n, k);
    let j = n - 1;
    let value = match f.kind {
        FunctionKind::Power(p) => {
            let kp = k as f64 + p;
            p * (1..=j).map(|i| kp - i as f64).product::<f64>() * x.powf(kp - n as f64)
        }
        FunctionKind::LogSquared => {
            let m = k as f64 - 1.0;
            let (log_coeff, consts) = log_squared_terms(m, j);
            x.powf(m - j as f64) * (log_coeff * x.ln() + consts.iter().sum::<f64>())
        }
        FunctionKind::Generic => {
            let g = |t: f64| t.powi(k as i32) * f.fprime(t);
            richardson_derivative(&g, j, x, f.interval.room(x))
        }
    };
    Ok(sign * value)
}

/// Magnitude against which criterion errors are measured: `|value|` for
/// powers, the sum of absolute closed-form terms for `log2`. Finite-difference
/// functions fall back to `|value|`.
pub fn criterion_scale(f: &CriterionFunction, n: usize, k: usize, x: f64) -> Result<f64, CriterionError> {
    let value = criterion_value(f, n, k, x)?.abs();
    if let FunctionKind::LogSquared = f.kind {
        let m = k as f64 - 1.0;
        let j = n - 1;
        let (log_coeff, consts) = log_squared_terms(m, j);
        let terms = (log_coeff * x.ln()).abs() + consts.iter().map(|c| c.abs()).sum::<f64>();
        return Ok(value.max(x.powf(m - j as f64) * terms));
    }
    Ok(value)
}

/// Central difference of order `m` with step `h`.
fn central_difference(g: &dyn Fn(f64) -> f64, m: usize, x: f64, h: f64) -> f64 {
    let half = m as f64 / 2.0;
    let sum: f64 = (0..=m)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(m, i) * g(x + (half - i as f64) * h)
        })
        .sum();
    sum / h.powi(m as i32)
}

/// `m`-th derivative of `g` at `x` by central differences on a geometric
/// ladder of steps (ratio 1.3) followed by full Richardson elimination of the
/// even-power error terms. The widest stencil reaches `c * room` from `x`.
fn richardson_derivative(g: &dyn Fn(f64) -> f64, m: usize, x: f64, room: f64) -> f64 {
    const RATIO: f64 = 1.3;
    if m == 0 {
        return g(x);
    }
    let (reach, levels) = if m <= 3 { (0.5, 7) } else { (0.6, 6) };
    let h0 = reach * room * 2.0 / m as f64;
    let mut table: Vec<f64> = (0..=levels).map(|l| central_difference(g, m, x, h0 / RATIO.powi(l))).collect();
    for level in 1..=levels {
        let factor = RATIO.powi(2 * level);
        table = table.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
    }
    table[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    AllNonpositiveOnGrid,
    PositiveFound,
}

/// Largest criterion value over a grid, for one `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignCertificate {
    pub n: usize,
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub grid: usize,
    pub max: f64,
    pub argmax: f64,
    pub verdict: Verdict,
}

/// Grid over `[lo, hi]`: log-spaced when `lo > 0`, linear otherwise.
pub fn grid_points(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    let last = (size - 1) as f64;
    if lo > 0.0 {
        let (a, b) = (lo.ln(), hi.ln());
        (0..size)
            .map(|i| {
                if i == 0 {
                    lo
                } else if i == size - 1 {
                    hi
                } else {
                    (a + (b - a) * i as f64 / last).exp()
                }
            })
            .collect()
    } else {
        (0..size).map(|i| lo + (hi - lo) * i as f64 / last).collect()
    }
}

/// One certificate per `k` in `s`, each maximizing the criterion over the grid.
pub fn certify_sign(
    f: &CriterionFunction,
    n: usize,
    s: IndexSet,
    lo: f64,
    hi: f64,
    grid: usize,
) -> Result<Vec<SignCertificate>, CriterionError> {
    if grid < 2 {
        return Err(CriterionError::InvalidGrid(grid));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CriterionError::InvalidInterval { lo, hi });
    }
    let xs = grid_points(lo, hi, grid);
    s.iter()
        .map(|k| {
            check_index(n, k)?;
            let mut max = f64::NEG_INFINITY;
            let mut argmax = xs[0];
            for &x in &xs {
                let v = criterion_value(f, n, k, x)?;
                if v > max || max.is_nan() {
                    max = v;
                    argmax = x;
                }
            }
            let verdict = if max > 0.0 { Verdict::PositiveFound } else { Verdict::AllNonpositiveOnGrid };
            Ok(SignCertificate { n, k, lo, hi, grid, max, argmax, verdict })
        })
        .collect()
}

/// A pair with `E_k(a) < E_k(b)`, every other coefficient equal, and
/// `sum f(a) > sum f(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub k: usize,
    pub x_star: f64,
    /// Interval around `x_star` on which the criterion was found positive.
    pub j_interval: (f64, f64),
    pub a: Point,
    pub b: Point,
    /// `sum f(a) - sum f(b)`.
    pub gap: f64,
    /// Coefficient added to `x^k`.
    pub t: f64,
    pub halvings: usize,
}

const J_PROBES: usize = 64;
const J_DOUBLINGS: usize = 30;
const T_HALVINGS: usize = 60;

fn positive_on(f: &CriterionFunction, n: usize, k: usize, lo: f64, hi: f64) -> bool {
    grid_points(lo, hi, J_PROBES).into_iter().all(|x| criterion_value(f, n, k, x).is_ok_and(|v| v > 0.0))
}

/// Largest symmetric radius around `x_star` (up to clipping at the domain)
/// on which the criterion stays positive at every probe.
fn positive_neighbourhood(f: &CriterionFunction, n: usize, k: usize, x_star: f64) -> (f64, f64) {
    let iv = f.interval();
    let floor = if iv.lo.is_finite() { iv.lo + 1e-3 * (x_star - iv.lo) } else { f64::NEG_INFINITY };
    let ceil = if iv.hi.is_finite() { iv.hi - 1e-3 * (iv.hi - x_star) } else { f64::INFINITY };
    let clip = |r: f64| ((x_star - r).max(floor), (x_star + r).min(ceil));
    let mut r = 0.1 * iv.room(x_star);
    let mut shrinks = 0;
    while !{
        let (lo, hi) = clip(r);
        positive_on(f, n, k, lo, hi)
    } {
        r *= 0.5;
        shrinks += 1;
        if shrinks > J_DOUBLINGS {
            return (x_star, x_star);
        }
    }
    let mut best = clip(r);
    for _ in 0..J_DOUBLINGS {
        r *= 2.0;
        let (lo, hi) = clip(r);
        if !positive_on(f, n, k, lo, hi) {
            break;
        }
        best = (lo, hi);
    }
    best
}

/// Spreads `a_1 < ... < a_n` around `x_star` inside the positive neighbourhood,
/// then adds `t x^k` to `prod (x + a_i)`, halving `t` until the roots are real,
/// distinct, inside the domain, and `sum f(a) > sum f(b)`.
pub fn counterexample_from_criterion(
    f: &CriterionFunction,
    n: usize,
    k: usize,
    x_star: f64,
    t: f64,
) -> Result<Counterexample, CriterionError> {
    let value = criterion_value(f, n, k, x_star)?;
    if !(value > 0.0) {
        return Err(CriterionError::CriterionNotViolated { x: x_star, value });
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(CriterionError::InvalidInterval { lo: 0.0, hi: t });
    }
    let j_interval = positive_neighbourhood(f, n, k, x_star);
    let radius = (x_star - j_interval.0).min(j_interval.1 - x_star);
    let a_values: Vec<f64> = (1..=n).map(|i| x_star - radius + 2.0 * radius * i as f64 / (n + 1) as f64).collect();
    let a = Point::new(a_values)?;
    let sum_a = f.sum_over(a.values())?;
    let base = sympoly::roots_to_poly(&a);
    let mut t = t;
    for halvings in 0..=T_HALVINGS {
        let roots = sympoly::poly_to_roots(&base.plus_monomial(k, t), DEFAULT_ROOT_TOL)?;
        if roots.all_real && roots.min_gap > 0.0 {
            if let Ok(b) = roots.to_point() {
                if let Ok(sum_b) = f.sum_over(b.values()) {
                    let gap = sum_a - sum_b;
                    if gap > 0.0 {
                        return Ok(Counterexample { k, x_star, j_interval, a, b, gap, t, halvings });
                    }
                }
            }
        }
        t *= 0.5;
    }
    Err(CriterionError::NoRealRoots { halvings: T_HALVINGS })
}
