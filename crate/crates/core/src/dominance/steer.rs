//! Per-step throttling of coefficient growth near root collisions.
//!
//! Each index `k` grows at `w_k` times its nominal rate, `0 <= w_k <= 1`. For
//! every adjacent root pair whose relative gap is below the activation
//! threshold, the weights must keep `-d(log gap)/dtau <= max_shrink`. Among
//! such weights the linear program picks the one with the largest total
//! growth, so closing pairs slide along their constraint while other indices
//! keep pushing.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

/// `(-y_i)^k / prod_{j != i} (y_j - y_i)`: velocity of `y_i` per unit growth of `E_k`.
pub(crate) fn unit_velocity(y: &[f64], i: usize, k: usize) -> f64 {
    let denom: f64 = (0..y.len()).filter(|&j| j != i).map(|j| y[j] - y[i]).product();
    (-y[i]).powi(k as i32) / denom
}

pub(crate) struct Steering {
    pub activation_gap: f64,
    pub max_shrink: f64,
}

impl Steering {
    /// Weights for `rates` (nominal growth per index, zero when inactive).
    /// Returns `None` when the linear program fails.
    pub fn weights(&self, y: &[f64], rates: &[f64]) -> Option<Vec<f64>> {
        let n = y.len();
        let active: Vec<usize> = (0..rates.len()).filter(|&k| rates[k] > 0.0).collect();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for i in 0..n - 1 {
            let gap = y[i + 1] - y[i];
            if gap >= self.activation_gap * y[i + 1] {
                continue;
            }
            let row: Vec<f64> = active
                .iter()
                .map(|&k| -rates[k] * (unit_velocity(y, i + 1, k) - unit_velocity(y, i, k)) / gap)
                .collect();
            if row.iter().any(|&c| c > 0.0) {
                rows.push(row);
            }
        }
        let mut w = vec![0.0; rates.len()];
        if rows.is_empty() {
            for &k in &active {
                w[k] = 1.0;
            }
            return Some(w);
        }
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = active.iter().map(|_| problem.add_var(1.0, (0.0, 1.0))).collect();
        for row in &rows {
            let scale = row.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
            let expr: Vec<_> = vars.iter().zip(row).map(|(&v, &c)| (v, c / scale)).collect();
            problem.add_constraint(expr, ComparisonOp::Le, self.max_shrink / scale);
        }
        let solution = problem.solve().ok()?.into_solution().ok()?;
        for (&k, &v) in active.iter().zip(&vars) {
            w[k] = solution.var_value(v).clamp(0.0, 1.0);
        }
        Some(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_apart_roots_are_not_throttled() {
        let s = Steering { activation_gap: 0.02, max_shrink: 1.0 };
        let w = s.weights(&[1.0, 2.0, 4.0], &[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(w, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn closing_pair_is_throttled() {
        // Growing E_1 pulls the two largest roots of (x+1)(x+2)(x+2.01) together.
        let y = [1.0, 2.0, 2.01];
        let s = Steering { activation_gap: 0.02, max_shrink: 1.0 };
        let rates = [0.0, 1.0, 0.0];
        let row = -(unit_velocity(&y, 2, 1) - unit_velocity(&y, 1, 1)) / (y[2] - y[1]);
        assert!(row > 1.0);
        let w = s.weights(&y, &rates).unwrap();
        assert!((w[1] * row - 1.0).abs() < 1e-9, "w={w:?} row={row}");
    }

    #[test]
    fn separating_index_keeps_full_rate() {
        let y = [1.0, 2.0, 2.01];
        let s = Steering { activation_gap: 0.02, max_shrink: 1.0 };
        let w = s.weights(&y, &[0.0, 0.0, 1.0]).unwrap();
        // x^2 growth separates the pair at 2 (parity 2).
        assert_eq!(w[2], 1.0);
    }
}
