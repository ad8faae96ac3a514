//! Initial perturbations that split repeated entries of a boundary point.
//!
//! Each plan adds `sum_k B_k(t) x^k` to `prod (x + a_i)` with polynomial ramps
//! `B_k(0) = 0`, chosen so that all roots are real and distinct for small
//! `t > 0`. Patterns whose reflection `a -> 1/a` is tabulated are handled by
//! solving the reflected problem and mapping `C_l(t)` back to
//! `B_{n-l}(t) = E_0(a) C_l(t)`.

use serde::{Deserialize, Serialize};

use super::DominanceError;
use crate::index_set::IndexSet;
use crate::sympoly::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedMode {
    Monomial(usize),
    Combo,
}

/// `B_index(t) = sum_j coeffs[j] t^j` with `coeffs[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub index: usize,
    pub coeffs: Vec<f64>,
}

impl Ramp {
    fn linear(index: usize, slope: f64) -> Self {
        Self { index, coeffs: vec![0.0, slope] }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, c)| acc * t + j as f64 * c)
    }

    fn scaled(&self, factor: f64) -> Self {
        Self { index: self.index, coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPlan {
    pub mode: SeedMode,
    pub ramps: Vec<Ramp>,
    /// Ramps are valid for `0 < t < epsilon_max`.
    pub epsilon_max: f64,
}

impl PerturbationPlan {
    fn monomial(k: usize) -> Self {
        Self { mode: SeedMode::Monomial(k), ramps: vec![Ramp::linear(k, 1.0)], epsilon_max: f64::INFINITY }
    }

    pub fn indices(&self) -> IndexSet {
        self.ramps.iter().map(|r| r.index).collect()
    }

    /// Length-`n` vector of `B_k(t)`, zero off the ramp indices.
    pub fn increments(&self, n: usize, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for r in &self.ramps {
            out[r.index] += r.value(t);
        }
        out
    }

    fn reflected(&self, n: usize, e0: f64) -> Self {
        let mode = match self.mode {
            SeedMode::Monomial(l) => SeedMode::Monomial(n - l),
            SeedMode::Combo => SeedMode::Combo,
        };
        let mut ramps: Vec<Ramp> = self.ramps.iter().map(|r| Ramp { index: n - r.index, ..r.scaled(e0) }).collect();
        ramps.sort_by_key(|r| r.index);
        Self { mode, ramps, epsilon_max: self.epsilon_max }
    }
}

/// First feasible seed for `a` and `s`, with repeated entries detected exactly.
pub fn seed_direction(a: &Point, s: IndexSet) -> Result<PerturbationPlan, DominanceError> {
    seed_candidates(a, s, 0.0).map(|mut plans| plans.swap_remove(0))
}

/// All tabulated seeds for `a` and `s`, best first. Entries closer than
/// `merge_tol` (absolute) are treated as equal.
pub fn seed_candidates(a: &Point, s: IndexSet, merge_tol: f64) -> Result<Vec<PerturbationPlan>, DominanceError> {
    let n = a.n();
    if s.is_empty() || s.contains(0) || s.max().is_some_and(|m| m >= n) {
        return Err(DominanceError::InvalidIndexSet {
            set: s,
            reason: format!("seeds need a nonempty subset of 1..{}", n - 1),
        });
    }
    let pattern = pattern_within(a.values(), merge_tol);
    if pattern.is_empty() {
        return Ok(s.iter().map(PerturbationPlan::monomial).collect());
    }
    if n > 4 {
        return Err(DominanceError::UnsupportedN(n));
    }
    tabulated(a.values(), &pattern, s)
}

fn pattern_within(v: &[f64], tol: f64) -> Vec<usize> {
    v.windows(2).enumerate().filter(|(_, w)| w[1] - w[0] <= tol).map(|(i, _)| i + 1).collect()
}

fn require(ok: bool, reason: &str) -> Result<(), DominanceError> {
    if ok {
        Ok(())
    } else {
        Err(DominanceError::Infeasible(reason.to_string()))
    }
}

fn odd_monomials(s: IndexSet, reason: &str) -> Result<Vec<PerturbationPlan>, DominanceError> {
    let plans: Vec<_> = s.iter().filter(|k| k % 2 == 1).map(PerturbationPlan::monomial).collect();
    require(!plans.is_empty(), reason)?;
    Ok(plans)
}

fn tabulated(a: &[f64], pattern: &[usize], s: IndexSet) -> Result<Vec<PerturbationPlan>, DominanceError> {
    let n = a.len();
    match (n, pattern) {
        (2, [1]) => Ok(vec![PerturbationPlan::monomial(1)]),
        (3, [2]) => {
            require(s.contains(2), "a_1 < a_2 = a_3 needs 2 in S; x^1 growth leaves a single real root")?;
            Ok(vec![PerturbationPlan::monomial(2)])
        }
        (3, [1, 2]) => {
            require(s == IndexSet::range(1, 3), "a_1 = a_2 = a_3 needs S = {1,2}; a missing index forces b = a")?;
            let a1 = a[0];
            Ok(vec![PerturbationPlan {
                mode: SeedMode::Combo,
                ramps: vec![Ramp::linear(1, a1), Ramp::linear(2, 1.0)],
                epsilon_max: f64::INFINITY,
            }])
        }
        (4, [1]) => {
            odd_monomials(s, "a_1 = a_2 < a_3 < a_4 needs an odd index in S; x^2 growth keeps at most two real roots")
        }
        (4, [2]) => {
            require(
                s.contains(2),
                "a_1 < a_2 = a_3 < a_4 needs 2 in S; odd-power growth keeps at most two real roots",
            )?;
            Ok(vec![PerturbationPlan::monomial(2)])
        }
        (4, [2, 3]) => {
            require(
                s.contains(2) && s.contains(3),
                "a_1 < a_2 = a_3 = a_4 needs {2,3} in S; every smaller choice keeps at most two real roots",
            )?;
            let a2 = a[1];
            Ok(vec![PerturbationPlan {
                mode: SeedMode::Combo,
                ramps: vec![Ramp::linear(2, a2), Ramp::linear(3, 1.0)],
                epsilon_max: f64::INFINITY,
            }])
        }
        (4, [1, 3]) => odd_monomials(s, "a_1 = a_2 < a_3 = a_4 needs 1 or 3 in S; x^2 growth leaves no real roots"),
        (4, [1, 2, 3]) => {
            require(s == IndexSet::range(1, 4), "a_1 = ... = a_4 needs S = {1,2,3}; a missing index forces b = a")?;
            let a1 = a[0];
            // x^3 t + 2 a_1 t x^2 + (a_1^2 t - t^3) x = t x ((x + a_1)^2 - t^2)
            Ok(vec![PerturbationPlan {
                mode: SeedMode::Combo,
                ramps: vec![
                    Ramp { index: 1, coeffs: vec![0.0, a1 * a1, 0.0, -1.0] },
                    Ramp::linear(2, 2.0 * a1),
                    Ramp::linear(3, 1.0),
                ],
                epsilon_max: (3.0 * a1 / 22.0).min(a1),
            }])
        }
        (3, [1]) | (4, [3]) | (4, [1, 2]) => mirrored(a, pattern, s),
        _ => Err(DominanceError::UnsupportedN(n)),
    }
}

fn mirrored(a: &[f64], pattern: &[usize], s: IndexSet) -> Result<Vec<PerturbationPlan>, DominanceError> {
    let n = a.len();
    let z: Vec<f64> = a.iter().rev().map(|v| 1.0 / v).collect();
    let z_pattern: Vec<usize> = pattern.iter().rev().map(|i| n - i).collect();
    let t = s.reflect(n);
    let e0: f64 = a.iter().product();
    let plans = tabulated(&z, &z_pattern, t).map_err(|e| match e {
        DominanceError::Infeasible(reason) => {
            DominanceError::Infeasible(format!("reciprocal problem with T = {t}: {reason}"))
        }
        other => other,
    })?;
    Ok(plans.iter().map(|p| p.reflected(n, e0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sympoly::{poly_to_roots, roots_to_poly, DEFAULT_ROOT_TOL};

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn set(v: &[usize]) -> IndexSet {
        v.iter().copied().collect()
    }

    fn splits(a: &Point, plan: &PerturbationPlan, t: f64) -> bool {
        let p = roots_to_poly(a).plus(&plan.increments(a.n(), t));
        let r = poly_to_roots(&p, DEFAULT_ROOT_TOL).unwrap();
        r.all_real && r.min_gap > 1e-9 && r.values[0] > 0.0
    }

    #[test]
    fn documented_seeds() {
        assert!(matches!(seed_direction(&pt(&[1.0, 1.0, 2.0, 3.0]), set(&[2])), Err(DominanceError::Infeasible(_))));
        let combo = seed_direction(&pt(&[1.0; 4]), set(&[1, 2, 3])).unwrap();
        assert_eq!(combo.mode, SeedMode::Combo);
        for &t in &[0.01, 0.1] {
            let b = combo.increments(4, t);
            assert!((b[1] - t * (1.0 - t * t)).abs() < 1e-15);
            assert!((b[2] - 2.0 * t).abs() < 1e-15);
            assert!((b[3] - t).abs() < 1e-15);
        }
        assert!(combo.epsilon_max <= 3.0 / 22.0);
        let two = seed_direction(&pt(&[1.0, 1.0]), set(&[1])).unwrap();
        assert_eq!(two.mode, SeedMode::Monomial(1));
    }

    #[test]
    fn combo_sign_pattern() {
        // r(-1.2) at t = 0.1 equals 0.001 (10 t - 3) = -0.002.
        let a = pt(&[1.0; 4]);
        let plan = seed_direction(&a, set(&[1, 2, 3])).unwrap();
        let p = roots_to_poly(&a).plus(&plan.increments(4, 0.1));
        assert!((p.eval(-1.2) + 0.002).abs() < 1e-14);
        assert!((p.eval(-1.0) - 0.001).abs() < 1e-14);
        assert!(splits(&a, &plan, 0.1));
    }

    #[test]
    fn interior_points_accept_any_index() {
        let plans = seed_candidates(&pt(&[1.0, 2.0, 3.0, 5.0, 8.0]), set(&[2, 4]), 0.0).unwrap();
        assert_eq!(plans.len(), 2);
        assert!(matches!(
            seed_direction(&pt(&[1.0, 1.0, 2.0, 3.0, 4.0]), set(&[1])),
            Err(DominanceError::UnsupportedN(5))
        ));
    }

    #[test]
    fn every_feasible_seed_splits_roots() {
        let points: [&[f64]; 9] = [
            &[1.0, 1.0],
            &[1.0, 2.0, 2.0],
            &[1.0, 1.0, 3.0],
            &[2.0, 2.0, 2.0],
            &[1.0, 1.0, 2.0, 3.0],
            &[1.0, 2.0, 3.0, 3.0],
            &[1.0, 2.0, 2.0, 3.0],
            &[0.5, 2.0, 2.0, 2.0],
            &[1.0, 1.0, 1.0, 4.0],
        ];
        let more: [&[f64]; 2] = [&[1.0, 1.0, 3.0, 3.0], &[1.5; 4]];
        for v in points.iter().chain(more.iter()) {
            let a = pt(v);
            for s in IndexSet::range(1, a.n()).nonempty_subsets() {
                if let Ok(plans) = seed_candidates(&a, s, 0.0) {
                    for plan in plans {
                        assert!(plan.indices().is_subset(s));
                        let t = (1e-5_f64).min(0.5 * plan.epsilon_max);
                        assert!(splits(&a, &plan, t), "a={v:?} s={s} plan={plan:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn mirrored_seed_uses_reflected_indices() {
        let a = pt(&[1.0, 1.0, 1.0, 4.0]);
        let plan = seed_direction(&a, set(&[1, 2])).unwrap();
        assert_eq!(plan.mode, SeedMode::Combo);
        assert_eq!(plan.indices(), set(&[1, 2]));
        assert!(matches!(seed_direction(&a, set(&[2, 3])), Err(DominanceError::Infeasible(_))));
    }

    #[test]
    fn ramp_derivative() {
        let r = Ramp { index: 1, coeffs: vec![0.0, 2.0, 0.0, -1.0] };
        assert!((r.value(0.5) - 0.875).abs() < 1e-15);
        assert!((r.derivative(0.5) - 1.25).abs() < 1e-15);
    }
}
