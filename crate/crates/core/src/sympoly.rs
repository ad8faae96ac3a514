//! Reversed elementary symmetric polynomials, root/coefficient conversion and
//! the Jacobian of the coefficient map.
//!
//! `E_k(y)` is the coefficient of `x^k` in `(x + y_1)...(x + y_n)`, so `E_0` is
//! the product of the entries and `E_{n-1}` their sum.

use nalgebra::{Complex, DMatrix, Schur};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default realness tolerance, applied as `tol * (1 + |root|)`.
pub const DEFAULT_ROOT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymPolyError {
    #[error("a point needs at least 2 entries, got {0}")]
    TooFewEntries(usize),
    #[error("entry {index} is {value}; entries must be finite and strictly positive")]
    NonPositiveEntry { index: usize, value: f64 },
    #[error("entries are not sorted at position {0}")]
    Unsorted(usize),
    #[error("root value {value} at position {index} is not positive")]
    NonPositiveRoot { index: usize, value: f64 },
    #[error("polynomial has a non-real root pair")]
    NotAllReal,
    #[error("entries {0} and {next} coincide", next = .0 + 1)]
    DegeneratePoint(usize),
    #[error("polynomial must have degree at least 1")]
    EmptyPolynomial,
    #[error("coefficient {0} is not finite")]
    NonFiniteCoefficient(usize),
    #[error("companion eigenvalue iteration did not converge")]
    NoConvergence,
}

/// Sorted vector of strictly positive reals with at least two entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    values: Vec<f64>,
}

impl Point {
    pub fn new(values: Vec<f64>) -> Result<Self, SymPolyError> {
        if values.len() < 2 {
            return Err(SymPolyError::TooFewEntries(values.len()));
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(SymPolyError::NonPositiveEntry { index, value });
            }
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(SymPolyError::Unsorted(i + 1));
        }
        Ok(Self { values })
    }

    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self, SymPolyError> {
        values.sort_by(f64::total_cmp);
        Self::new(values)
    }

    /// Constant point `(v, ..., v)`.
    pub fn constant(n: usize, v: f64) -> Result<Self, SymPolyError> {
        Self::new(vec![v; n])
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// True when all entries are strictly increasing.
    pub fn is_interior(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }

    /// Smallest gap between consecutive entries.
    pub fn min_gap(&self) -> f64 {
        min_gap(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    /// 1-based positions `i` with `y_i == y_{i+1}`.
    pub fn coincidences(&self) -> Vec<usize> {
        self.coincidences_within(0.0)
    }

    /// 1-based positions `i` with `y_{i+1} - y_i <= tol * y_{i+1}`.
    pub fn coincidences_within(&self, tol: f64) -> Vec<usize> {
        self.values.windows(2).enumerate().filter(|(_, w)| w[1] - w[0] <= tol * w[1]).map(|(i, _)| i + 1).collect()
    }

    /// Entrywise reciprocal, re-sorted.
    pub fn reciprocal(&self) -> Point {
        let values = self.values.iter().rev().map(|v| 1.0 / v).collect();
        Point { values }
    }

    /// Entrywise scaling by a positive factor.
    pub fn scaled(&self, factor: f64) -> Result<Point, SymPolyError> {
        Point::new(self.values.iter().map(|v| v * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = SymPolyError;
    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Point::new(values)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.values
    }
}

/// `(E_0, ..., E_{n-1})` of a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymCoords {
    e: Vec<f64>,
}

impl SymCoords {
    pub fn from_vec(e: Vec<f64>) -> Self {
        Self { e }
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.e
    }

    pub fn get(&self, k: usize) -> f64 {
        self.e[k]
    }

    pub fn product(&self) -> f64 {
        self.e[0]
    }

    pub fn sum(&self) -> f64 {
        self.e[self.e.len() - 1]
    }
}

/// Monic polynomial `x^n + c[n-1] x^{n-1} + ... + c[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MonicPoly {
    c: Vec<f64>,
}

impl MonicPoly {
    pub fn new(c: Vec<f64>) -> Result<Self, SymPolyError> {
        if c.is_empty() {
            return Err(SymPolyError::EmptyPolynomial);
        }
        if let Some(i) = c.iter().position(|v| !v.is_finite()) {
            return Err(SymPolyError::NonFiniteCoefficient(i));
        }
        Ok(Self { c })
    }

    pub fn degree(&self) -> usize {
        self.c.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Returns `self + v x^k` for `k < n`.
    pub fn plus_monomial(&self, k: usize, v: f64) -> MonicPoly {
        let mut c = self.c.clone();
        c[k] += v;
        MonicPoly { c }
    }

    /// Returns `self + sum_k delta[k] x^k`.
    pub fn plus(&self, delta: &[f64]) -> MonicPoly {
        let c = self.c.iter().zip(delta).map(|(a, d)| a + d).collect();
        MonicPoly { c }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(1.0, |acc, &ck| acc * x + ck)
    }

    /// Value and first derivative.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 1.0;
        let mut dp = 0.0;
        for &ck in self.c.iter().rev() {
            dp = dp * x + p;
            p = p * x + ck;
        }
        (p, dp)
    }

    fn eval_complex_with_derivative(&self, z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
        let mut p = Complex::new(1.0, 0.0);
        let mut dp = Complex::new(0.0, 0.0);
        for &ck in self.c.iter().rev() {
            dp = dp * z + p;
            p = p * z + ck;
        }
        (p, dp)
    }

    /// `|x|^n + sum |c_k| |x|^k`, the scale of rounding error in `eval(x)`.
    pub fn abs_scale(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.c.iter().rev().fold(1.0, |acc, &ck| acc * ax + ck.abs())
    }
}

/// Negated roots of a monic polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    /// `-Re(root)`, sorted ascending.
    pub values: Vec<f64>,
    pub all_real: bool,
    /// Smallest distance between consecutive values; infinite for one root.
    pub min_gap: f64,
}

impl RootSet {
    /// Requires all roots real and negative.
    pub fn to_point(&self) -> Result<Point, SymPolyError> {
        if !self.all_real {
            return Err(SymPolyError::NotAllReal);
        }
        if let Some((index, &value)) = self.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(SymPolyError::NonPositiveRoot { index, value });
        }
        Point::new(self.values.clone())
    }
}

pub(crate) fn min_gap(sorted: &[f64]) -> f64 {
    sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Coefficients `c[0..=m]` of `prod (x + y_i)` including the leading 1.
pub(crate) fn full_coeffs(y: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(y.len() + 1);
    c.push(1.0);
    for (m, &yi) in y.iter().enumerate() {
        c.push(c[m]);
        for k in (1..=m).rev() {
            c[k] = c[k - 1] + yi * c[k];
        }
        c[0] *= yi;
    }
    c
}

/// `E_0..E_{n-1}` for an arbitrary slice.
pub fn elem_sym_slice(y: &[f64]) -> Vec<f64> {
    let mut c = full_coeffs(y);
    c.pop();
    c
}

pub fn elem_sym(y: &Point) -> SymCoords {
    SymCoords { e: elem_sym_slice(y.values()) }
}

pub fn roots_to_poly(y: &Point) -> MonicPoly {
    MonicPoly { c: elem_sym_slice(y.values()) }
}

/// Eigenvalues of the scaled companion matrix of `x^n + sum c_k x^k`.
fn companion_eigenvalues(c: &[f64]) -> Result<Vec<Complex<f64>>, SymPolyError> {
    let n = c.len();
    // Scale so that every coefficient of the rescaled polynomial is at most 1.
    let s = c.iter().enumerate().map(|(k, ck)| ck.abs().powf(1.0 / (n - k) as f64)).fold(0.0, f64::max);
    if s == 0.0 {
        return Ok(vec![Complex::new(0.0, 0.0); n]);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for (k, ck) in c.iter().enumerate() {
        m[(k, n - 1)] = -ck / s.powi((n - k) as i32);
    }
    let schur = Schur::try_new(m, f64::EPSILON, 10_000).ok_or(SymPolyError::NoConvergence)?;
    Ok(schur.complex_eigenvalues().iter().map(|z| z * s).collect())
}

/// Complex roots, Newton-polished.
///
/// The companion matrix resolves roots near the largest modulus well and
/// loses the small ones when the moduli span many decades, so small roots are
/// taken from the reversed polynomial instead, whose roots are reciprocals.
pub fn complex_roots(p: &MonicPoly) -> Result<Vec<Complex<f64>>, SymPolyError> {
    let n = p.degree();
    let c = p.coeffs();
    let mut roots = companion_eigenvalues(c)?;
    if c[0] != 0.0 && n > 1 {
        let reversed: Vec<f64> = (0..n).map(|k| if k == 0 { 1.0 / c[0] } else { c[n - k] / c[0] }).collect();
        let small: Vec<Complex<f64>> = companion_eigenvalues(&reversed)?.iter().map(|z| z.inv()).collect();
        let largest = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let smallest = small.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let cut = (largest * smallest).sqrt();
        let mut merged: Vec<Complex<f64>> = roots.iter().copied().filter(|z| z.norm() >= cut).collect();
        merged.extend(small.iter().copied().filter(|z| z.norm() < cut));
        if merged.len() == n && merged.iter().all(|z| z.is_finite()) {
            roots = merged;
        }
    }
    for z in roots.iter_mut() {
        *z = newton_polish(p, *z);
    }
    Ok(roots)
}

fn newton_polish(p: &MonicPoly, mut z: Complex<f64>) -> Complex<f64> {
    let (mut pz, _) = p.eval_complex_with_derivative(z);
    for _ in 0..8 {
        let (_, dp) = p.eval_complex_with_derivative(z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - pz / dp;
        let (pn, _) = p.eval_complex_with_derivative(next);
        if !(pn.norm() < pz.norm()) {
            break;
        }
        z = next;
        pz = pn;
        if pz.norm() == 0.0 {
            break;
        }
    }
    z
}

/// Bisection for a sign change of `p` on `[lo, hi]`.
fn bisect(p: &MonicPoly, mut lo: f64, mut hi: f64) -> f64 {
    let mut plo = p.eval(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let pm = p.eval(mid);
        if pm == 0.0 {
            return mid;
        }
        if (pm < 0.0) == (plo < 0.0) {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `p`, reported as negated real parts.
///
/// A root counts as real when `|Im z| <= tol (1 + |z|)`. A conjugate pair that
/// fails this test is resolved on the real axis: if `p` changes sign twice
/// around its real part, the two real roots are bisected out; if `p` at the
/// real part is within rounding error of zero, the pair is a numerically
/// multiple real root.
pub fn poly_to_roots(p: &MonicPoly, tol: f64) -> Result<RootSet, SymPolyError> {
    let roots = complex_roots(p)?;
    let n = p.degree();
    let mut real_parts = Vec::with_capacity(n);
    let mut all_real = true;
    let mut pending: Vec<Complex<f64>> = Vec::new();
    for &z in &roots {
        if z.im.abs() <= tol * (1.0 + z.norm()) {
            real_parts.push(z.re);
        } else if z.im > 0.0 {
            pending.push(z);
        }
    }
    for &z in &pending {
        let x = z.re;
        // Sign changes come from real parts, so the bracket must stop short of every
        // other real part; complex distance alone lets a wide pair swallow a real neighbour.
        let nearest = roots
            .iter()
            .filter(|w| (**w - z).norm() > 0.0 && (**w - z.conj()).norm() > 0.0)
            .map(|w| (w.re - x).abs())
            .fold(f64::INFINITY, f64::min);
        let d = if nearest.is_finite() { 0.5 * nearest } else { 3.0 * z.im };
        let (pl, pm, pr) = (p.eval(x - d), p.eval(x), p.eval(x + d));
        let noise = 4.0 * (n as f64 + 1.0) * f64::EPSILON * p.abs_scale(x);
        if pm.abs() <= noise {
            real_parts.push(x);
            real_parts.push(x);
        } else if (pl < 0.0) != (pm < 0.0) && (pr < 0.0) != (pm < 0.0) {
            real_parts.push(bisect(p, x - d, x));
            real_parts.push(bisect(p, x, x + d));
        } else {
            all_real = false;
            real_parts.push(x);
            real_parts.push(x);
        }
    }
    let mut values: Vec<f64> = real_parts.into_iter().map(|r| -r).collect();
    values.sort_by(f64::total_cmp);
    let min_gap = min_gap(&values);
    Ok(RootSet { values, all_real, min_gap })
}

/// `D Psi(y)` with entry `(j, k)` equal to `e_j(y without y_k)`; row 0 is all ones.
pub fn psi_jacobian(y: &Point) -> DMatrix<f64> {
    let n = y.n();
    let v = y.values();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut sub = Vec::with_capacity(n - 1);
    for k in 0..n {
        sub.clear();
        sub.extend(v.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, x)| *x));
        let c = full_coeffs(&sub);
        for j in 0..n {
            m[(j, k)] = c[n - 1 - j];
        }
    }
    m
}

/// Reversed Vandermonde matrix `V_ij = (-y_i)^{n-1-j}`.
pub fn reversed_vandermonde(y: &Point) -> DMatrix<f64> {
    let n = y.n();
    DMatrix::from_fn(n, n, |i, j| (-y.values()[i]).powi((n - 1 - j) as i32))
}

/// Relative residual of `V D Psi = diag(prod_{j != i} (y_j - y_i))` and of
/// `det D Psi = prod_{i<j} (y_i - y_j)`; returns the worse of the two.
pub fn vandermonde_identity_check(y: &Point) -> Result<f64, SymPolyError> {
    if let Some(&i) = y.coincidences().first() {
        return Err(SymPolyError::DegeneratePoint(i));
    }
    let n = y.n();
    let v = y.values();
    let jac = psi_jacobian(y);
    let prod = reversed_vandermonde(y) * &jac;
    let diag: Vec<f64> = (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| v[j] - v[i]).product()).collect();
    let diag_scale = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let mut worst = 0.0_f64;
    for i in 0..n {
        for k in 0..n {
            let expected = if i == k { diag[i] } else { 0.0 };
            worst = worst.max((prod[(i, k)] - expected).abs());
        }
    }
    let product_residual = worst / diag_scale;
    let mut det_expected = 1.0;
    for i in 0..n {
        for j in i + 1..n {
            det_expected *= v[i] - v[j];
        }
    }
    let det = jac.lu().determinant();
    let det_residual = ((det - det_expected) / det_expected).abs();
    Ok(product_residual.max(det_residual))
}

/// Number of distinct real roots of `p` in `(lo, hi]`, by a Sturm sequence.
///
/// Infinite bounds are allowed. Remainders whose coefficients fall below
/// `1e-12` of the previous polynomial's scale are treated as zero.
pub fn sturm_count(p: &MonicPoly, lo: f64, hi: f64) -> usize {
    let chain = sturm_chain(p);
    let lo_changes = sign_changes(&chain, lo);
    let hi_changes = sign_changes(&chain, hi);
    lo_changes.saturating_sub(hi_changes)
}

fn sturm_chain(p: &MonicPoly) -> Vec<Vec<f64>> {
    let n = p.degree();
    let mut p0: Vec<f64> = p.coeffs().to_vec();
    p0.push(1.0);
    let p1: Vec<f64> = (1..=n).map(|k| k as f64 * p0[k]).collect();
    let mut chain = vec![p0, p1];
    loop {
        let len = chain.len();
        let (a, b) = (&chain[len - 2], &chain[len - 1]);
        if b.len() <= 1 {
            break;
        }
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut r = poly_rem(a, b);
        for v in r.iter_mut() {
            *v = -*v;
        }
        while r.last().is_some_and(|v| v.abs() <= 1e-12 * scale) {
            r.pop();
        }
        if r.is_empty() {
            break;
        }
        let lead = r.last().copied().unwrap_or(1.0).abs();
        for v in r.iter_mut() {
            *v /= lead;
        }
        chain.push(r);
    }
    chain
}

fn poly_rem(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    while r.len() > db {
        let q = r[r.len() - 1] / lead;
        let shift = r.len() - 1 - db;
        for (i, bi) in b.iter().enumerate() {
            r[shift + i] -= q * bi;
        }
        r.pop();
    }
    r
}

fn sign_at(c: &[f64], x: f64) -> f64 {
    let deg = c.len() - 1;
    if x.is_infinite() {
        let lead = c[deg];
        return if x > 0.0 || deg.is_multiple_of(2) { lead.signum() } else { -lead.signum() };
    }
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn sign_changes(chain: &[Vec<f64>], x: f64) -> usize {
    let mut last = 0.0;
    let mut count = 0;
    for c in chain {
        let s = sign_at(c, x);
        if s == 0.0 {
            continue;
        }
        if last != 0.0 && (s < 0.0) != (last < 0.0) {
            count += 1;
        }
        last = s;
    }
    count
}
