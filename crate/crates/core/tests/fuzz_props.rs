use proptest::prelude::*;
use symlog::criterion::CriterionFunction;
use symlog::dominance::{compare, Relation};
use symlog::fuzz::{
    amgm_obstruction_check, check_lemma_rootcounts, fuzz_inequality, sample_pair, trial_rng, FuzzConfig, FuzzError,
    Sampler,
};
use symlog::IndexSet;

fn campaign(n: usize, s: IndexSet, seed: u64, jobs: usize) -> String {
    let mut cfg = FuzzConfig::new(CriterionFunction::log_squared(), n, s, 200, seed);
    cfg.jobs = jobs;
    serde_json::to_string(&fuzz_inequality(&cfg).unwrap()).unwrap()
}

#[test]
fn reports_are_reproducible_across_pool_sizes() {
    let s = IndexSet::from_iter([1, 2]);
    let first = campaign(3, s, 42, 1);
    assert_eq!(first, campaign(3, s, 42, 1));
    assert_eq!(first, campaign(3, s, 42, 3));
    assert_ne!(first, campaign(3, s, 43, 1));
}

#[test]
fn forward_sampler_refuses_free_product() {
    let mut cfg = FuzzConfig::new(CriterionFunction::log_squared(), 3, IndexSet::from_iter([0, 1]), 10, 0);
    cfg.sampler = Sampler::ForwardCurve;
    assert!(matches!(fuzz_inequality(&cfg), Err(FuzzError::InvalidConfig(_))));
}

#[test]
fn violation_csv_layout() {
    // Negative powers fail once the product may grow.
    let mut cfg = FuzzConfig::new(CriterionFunction::power(-0.5).unwrap(), 2, IndexSet::range(0, 2), 300, 5);
    cfg.sampler = Sampler::RejectionFilter;
    let report = fuzz_inequality(&cfg).unwrap();
    assert!(!report.violations.is_empty());
    let mut out = Vec::new();
    report.write_violations_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a_1,a_2,b_1,b_2,margin"));
    assert_eq!(lines.count(), report.violations.len());
    assert!(report.violations.iter().all(|v| v.margin < 0.0));
}

#[test]
fn lemma_audits_and_equal_root_obstruction() {
    for n in [2, 3, 4, 5, 6] {
        assert_eq!(check_lemma_rootcounts(n, 500, 1, (1e-2, 1e2)).unwrap().total_violations, 0, "n={n}");
    }
    for s in IndexSet::range(1, 4).nonempty_subsets() {
        let r = amgm_obstruction_check(4, s, 500, 2).unwrap();
        assert_eq!(r.skipped, s == IndexSet::range(1, 4));
        assert_eq!(r.all_real_found, 0, "S={s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampled_pairs_carry_the_requested_pattern(n in 2usize..=4, bits in 1u64..16, seed in any::<u64>(), forward in any::<bool>()) {
        let s = IndexSet::from_bits(bits & ((1u64 << n) - 1));
        prop_assume!(!s.is_empty());
        let sampler = if forward { Sampler::ForwardCurve } else { Sampler::RejectionFilter };
        prop_assume!(!(forward && s.contains(0)));
        // Rejection only enforces the product, so every other index must be free.
        prop_assume!(forward || IndexSet::range(1, n).is_subset(s));
        let mut rng = trial_rng(seed, 0);
        let (a, b) = sample_pair(n, s, &mut rng, (1e-2, 1e2), sampler).unwrap();
        let p = compare(&a, &b).unwrap();
        prop_assert_eq!(p.relation, Relation::Dominates);
        prop_assert_eq!(p.s, s);
    }
}
