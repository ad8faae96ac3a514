use proptest::prelude::*;
use symlog::criterion::{criterion_value, CriterionFunction};
use symlog::dominance::{
    build_curve, build_curve_by_increments, compare, dhat, monotonicity_audit, seed_direction, CurveOptions,
    CurveTrace, DominanceError, Relation,
};
use symlog::sympoly::{elem_sym_slice, Point};
use symlog::IndexSet;

/// A boundary point and the index sets for which it admits a seed.
type PatternCase = (&'static [f64], fn(IndexSet) -> bool);

fn interior(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Point> {
    n.prop_flat_map(|n| prop::collection::vec(-2.0f64..2.0, n))
        .prop_map(|u| Point::from_unsorted(u.into_iter().map(|x| 10f64.powf(x)).collect()).unwrap())
        .prop_filter("well separated", |p| p.min_gap() > 1e-3 * p.max())
}

fn index_set(n: usize, bits: u64) -> IndexSet {
    let mask = (1u64 << n) - 2;
    let s = IndexSet::from_bits(bits & mask);
    if s.is_empty() {
        IndexSet::from_iter([1])
    } else {
        s
    }
}

/// Endpoint reached from `a` by the forward construction, if its target is real-rooted.
fn forward_target(a: &Point, s: IndexSet, decades: &[f64]) -> Option<Point> {
    let ea = elem_sym_slice(a.values());
    let inc: Vec<f64> = (0..a.n()).map(|k| if s.contains(k) { ea[k] * 10f64.powf(decades[k]) } else { 0.0 }).collect();
    let trace = build_curve_by_increments(a, s, &inc, &CurveOptions::default()).unwrap();
    trace.is_completed().then_some(trace.b)
}

fn max_manifold_error(trace: &CurveTrace) -> f64 {
    let ea = &elem_sym_slice(trace.a.values());
    trace
        .samples
        .iter()
        .flat_map(|smp| {
            let e = elem_sym_slice(smp.y.values());
            (0..trace.n).map(move |k| (e[k] - ea[k] - smp.b[k]).abs() / (ea[k] + smp.b[k]))
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn completed_curves_follow_their_coefficients(
        a in interior(2..=4),
        bits in 0u64..16,
        decades in prop::collection::vec(-3.0f64..1.0, 4),
    ) {
        let s = index_set(a.n(), bits);
        let Some(b) = forward_target(&a, s, &decades) else { return Ok(()) };
        let trace = build_curve(&a, &b, &CurveOptions::default()).unwrap();
        prop_assert!(trace.is_completed(), "{:?}", trace.status);
        prop_assert!(max_manifold_error(&trace) <= 10.0 * trace.tol);
        let end = trace.last().y.values();
        let norm = b.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = end.iter().zip(b.values()).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= trace.tol * (1.0 + norm));
        let (ee, eb) = (elem_sym_slice(end), elem_sym_slice(b.values()));
        for (x, y) in ee.iter().zip(&eb) {
            prop_assert!((x - y).abs() <= trace.tol * (1.0 + y.abs()));
        }
        let audit = monotonicity_audit(&trace, &CriterionFunction::log_squared()).unwrap();
        prop_assert!(audit.passed, "{audit:?}");
    }

    #[test]
    fn reciprocal_problem_traces_the_reciprocal_curve(
        a in interior(2..=4),
        bits in 0u64..16,
        decades in prop::collection::vec(-3.0f64..0.0, 4),
    ) {
        let n = a.n();
        let s = index_set(n, bits);
        let Some(b) = forward_target(&a, s, &decades) else { return Ok(()) };
        let opts = CurveOptions::default();
        let forward = build_curve(&a, &b, &opts).unwrap();
        let mirror = build_curve(&a.reciprocal(), &b.reciprocal(), &opts).unwrap();
        prop_assert_eq!(forward.is_completed(), mirror.is_completed());
        prop_assert_eq!(compare(&a.reciprocal(), &b.reciprocal()).unwrap().s, s.reflect(n));
        if mirror.steps_throttled > 0 || forward.steps_throttled > 0 {
            return Ok(());
        }
        // Unthrottled, both ramps are linear, so reciprocals of mirror samples
        // sit on the forward curve: E_k - E_k(a) proportional to E_k(b) - E_k(a).
        let (ea, eb) = (elem_sym_slice(a.values()), elem_sym_slice(b.values()));
        for smp in &mirror.samples {
            let e = elem_sym_slice(smp.y.reciprocal().values());
            let k0 = s.iter().next().unwrap();
            let tau = (e[k0] - ea[k0]) / (eb[k0] - ea[k0]);
            for k in 0..n {
                let expected = ea[k] + if s.contains(k) { tau * (eb[k] - ea[k]) } else { 0.0 };
                prop_assert!((e[k] - expected).abs() <= 1e-8 * expected, "k={} {} vs {}", k, e[k], expected);
            }
        }
    }

    #[test]
    fn dhat_is_nonnegative_where_the_criterion_holds(y in interior(2..=5), k_seed in 0usize..5, which in 0usize..2) {
        let n = y.n();
        let (f, k) = if which == 0 {
            (CriterionFunction::log_squared(), 1 + k_seed % (n - 1))
        } else {
            (CriterionFunction::power(0.5).unwrap(), k_seed % n)
        };
        prop_assert!(dhat(&y, k, &f).unwrap() >= -1e-9);
    }

    #[test]
    fn dhat_is_negative_near_one_for_log_squared_constant_term(
        n in 2usize..=5,
        offsets in prop::collection::vec(-0.05f64..0.05, 5),
    ) {
        let f = CriterionFunction::log_squared();
        let v: Vec<f64> = offsets[..n].iter().map(|o| 1.0 + o).collect();
        let y = Point::from_unsorted(v).unwrap();
        prop_assume!(y.min_gap() > 1e-4);
        prop_assert!(y.values().iter().all(|&x| criterion_value(&f, n, 0, x).unwrap() > 0.0));
        prop_assert!(dhat(&y, 0, &f).unwrap() < 0.0);
    }

    #[test]
    fn compare_is_consistent_with_coefficients((a, b) in (2usize..=5).prop_flat_map(|n| (interior(n..=n), interior(n..=n)))) {
        let p = compare(&a, &b).unwrap();
        let (ea, eb) = (elem_sym_slice(a.values()), elem_sym_slice(b.values()));
        match p.relation {
            Relation::Incomparable => prop_assert!(ea.iter().zip(&eb).any(|(x, y)| x > y)),
            _ => {
                for k in 0..a.n() {
                    prop_assert!(eb[k] >= ea[k] || (eb[k] - ea[k]).abs() <= 1e-12 * eb[k]);
                    prop_assert_eq!(p.s.contains(k), p.deltas[k] > 0.0);
                }
            }
        }
    }
}

#[test]
fn two_point_curve_is_exact() {
    let trace = build_curve(
        &Point::new(vec![1.0, 1.0]).unwrap(),
        &Point::new(vec![0.5, 2.0]).unwrap(),
        &CurveOptions::default(),
    )
    .unwrap();
    assert!(trace.is_completed());
    // E_0 stays 1 and E_1 grows linearly, so y(t) solves y^2 - (2 + t/2) y + 1 = 0.
    for smp in &trace.samples {
        let sum = smp.y.values()[0] + smp.y.values()[1];
        let disc = sum * sum - 4.0;
        let lo = 0.5 * (sum - disc.max(0.0).sqrt());
        assert!((smp.y.values()[0] - lo).abs() <= 1e-8, "t={} y={:?}", smp.t, smp.y.values());
        assert!((smp.y.values()[0] * smp.y.values()[1] - 1.0).abs() <= 1e-10);
    }
    let end = trace.last().y.values();
    assert!((end[0] - 0.5).abs() <= 1e-10 && (end[1] - 2.0).abs() <= 1e-10);
}

#[test]
fn seed_feasibility_matches_the_quartic_cases() {
    let cases: [PatternCase; 5] = [
        (&[1.0, 1.0, 2.0, 3.0], |s| s.contains(1) || s.contains(3)),
        (&[1.0, 2.0, 2.0, 3.0], |s| s.contains(2)),
        (&[1.0, 2.0, 2.0, 2.0], |s| s.contains(2) && s.contains(3)),
        (&[1.0, 1.0, 3.0, 3.0], |s| s.contains(1) || s.contains(3)),
        (&[2.0, 2.0, 2.0, 2.0], |s| s == IndexSet::range(1, 4)),
    ];
    for (v, feasible) in cases {
        let a = Point::new(v.to_vec()).unwrap();
        for s in IndexSet::range(1, 4).nonempty_subsets() {
            match seed_direction(&a, s) {
                Ok(_) => assert!(feasible(s), "a={v:?} S={s} should be infeasible"),
                Err(DominanceError::Infeasible(_)) => assert!(!feasible(s), "a={v:?} S={s} should be feasible"),
                Err(e) => panic!("{e}"),
            }
        }
    }
}

#[test]
fn boundary_starts_reach_their_targets() {
    let opts = CurveOptions::default();
    let starts: [(&[f64], &[usize]); 4] = [
        (&[1.0, 1.0, 1.0, 1.0], &[1, 2, 3]),
        (&[0.5, 2.0, 2.0, 2.0], &[2, 3]),
        (&[1.0, 1.0, 3.0, 3.0], &[1]),
        (&[1.0, 1.0, 1.0, 4.0], &[1, 2]),
    ];
    for (v, s) in starts {
        let a = Point::new(v.to_vec()).unwrap();
        let s: IndexSet = s.iter().copied().collect();
        // The seed itself yields real, distinct roots for small parameters.
        let plan = seed_direction(&a, s).unwrap();
        let inc = plan.increments(4, (0.01f64).min(0.5 * plan.epsilon_max));
        let forward = build_curve_by_increments(&a, s, &inc, &opts).unwrap();
        assert!(forward.is_completed(), "a={v:?} S={s}: {:?}", forward.status);
        let trace = build_curve(&a, &forward.b, &opts).unwrap();
        assert!(trace.is_completed(), "a={v:?} S={s}: {:?}", trace.status);
        assert!(monotonicity_audit(&trace, &CriterionFunction::log_squared()).unwrap().passed);
    }
}
