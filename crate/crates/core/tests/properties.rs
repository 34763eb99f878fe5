//! Randomized-parameter properties that hold across the whole public API,
//! complementing the fixed-vector unit tests inside each module.

use fountain_core::{
    anneal, inactivation_decode, lrfc_bounds, lt_ml_lower_bound, parse_plan_tsv, plan_tsv,
    run_plan, BitMatrix, CodeConfig, DegreeDistribution, DesignContext, DesignSpec, Family,
    FieldMatrix, FieldSpec, InactivationStrategy, OverheadPoint, RsdParams, Schedule,
    SparseSystem, StopRule, SweepSpec, TrialPlan,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MASS_TOL: f64 = 1e-12;

fn assert_valid_distribution(dist: &DegreeDistribution) {
    let total: f64 = dist.support().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() <= 1e-9, "mass sums to {total}");
    assert!(dist.support().all(|(_, p)| p >= 0.0));
    assert!(dist.prob(dist.max_degree()) > 0.0, "trailing zeros must be trimmed");
    let mean: f64 = dist.support().map(|(d, p)| d as f64 * p).sum();
    assert!((mean - dist.mean()).abs() <= 1e-9 * mean.max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soliton_constructors_emit_valid_distributions(
        k in 2usize..400,
        c in 0.01f64..1.5,
        delta in 0.01f64..0.95,
        dmax in 1usize..80,
    ) {
        assert_valid_distribution(&DegreeDistribution::ideal_soliton(k));
        let params = RsdParams { k, c, delta };
        if let Ok(rsd) = DegreeDistribution::robust_soliton(&params) {
            assert_valid_distribution(&rsd);
            // The spike and tail push degree-one mass up relative to ideal.
            prop_assert!(rsd.prob(1) >= DegreeDistribution::ideal_soliton(k).prob(1) - MASS_TOL);
            let trunc = DegreeDistribution::truncated_robust_soliton(&params, dmax).unwrap();
            assert_valid_distribution(&trunc);
            prop_assert!(trunc.max_degree() <= dmax.min(k));
            prop_assert!(trunc.mean() <= rsd.mean() + MASS_TOL);
        }
    }

    #[test]
    fn clamping_preserves_mass_and_shrinks_the_mean(
        k in 4usize..300,
        dmax in 1usize..50,
    ) {
        let dist = DegreeDistribution::binomial_half(k);
        let clamped = dist.clamped_to(dmax);
        assert_valid_distribution(&clamped);
        prop_assert!(clamped.max_degree() <= dmax);
        prop_assert!(clamped.mean() <= dist.mean() + MASS_TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn field_axioms_hold_on_random_elements(m in 1u32..=8, seed in any::<u64>()) {
        let f = FieldSpec::new(m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..32 {
            let a = f.random(&mut rng);
            let b = f.random(&mut rng);
            let c = f.random(&mut rng);
            prop_assert_eq!(f.add(a, b), f.add(b, a));
            prop_assert_eq!(f.mul(a, b), f.mul(b, a));
            prop_assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.add(a, a), 0, "characteristic two");
            if a != 0 {
                prop_assert_eq!(f.mul(a, f.inv(a)), 1);
            }
        }
    }

    #[test]
    fn elimination_recovers_planted_binary_solutions(
        n in 1usize..20,
        extra in 0usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = BitMatrix::random(n + extra, n, &mut rng);
        let x = BitMatrix::random(n, 1, &mut rng);
        let b = a.mul(&x);
        let rep = a.eliminate(Some(&b));
        prop_assert!(rep.consistent, "planted systems are consistent");
        if rep.rank == n {
            let s = rep.solution.expect("full column rank yields a solution");
            prop_assert_eq!(a.mul(&s), b);
        }
    }

    #[test]
    fn elimination_recovers_planted_field_solutions(
        n in 1usize..12,
        extra in 0usize..4,
        seed in any::<u64>(),
    ) {
        let f = FieldSpec::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = FieldMatrix::random(n + extra, n, &f, &mut rng);
        let x = FieldMatrix::random(n, 1, &f, &mut rng);
        let b = a.mul(&x);
        let rep = a.eliminate(Some(&b));
        prop_assert!(rep.consistent);
        if rep.rank == n {
            let s = rep.solution.expect("full column rank yields a solution");
            prop_assert_eq!(a.mul(&s).row(0).to_vec(), b.row(0).to_vec());
            for r in 0..n + extra {
                prop_assert_eq!(a.mul(&s).row(r), b.row(r));
            }
        }
    }

    #[test]
    fn rank_of_a_product_never_exceeds_either_factor(
        a_rows in 1usize..16,
        inner in 1usize..16,
        b_cols in 1usize..16,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = BitMatrix::random(a_rows, inner, &mut rng);
        let b = BitMatrix::random(inner, b_cols, &mut rng);
        let prod = a.mul(&b);
        prop_assert!(prod.rank() <= a.rank().min(b.rank()));
    }

    #[test]
    fn inactivation_agrees_with_dense_elimination(
        vars in 1usize..12,
        eqs in 1usize..18,
        m in prop::sample::select(vec![1u32, 2]),
        seed in any::<u64>(),
    ) {
        let f = FieldSpec::new(m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sys = SparseSystem::new(vars, f.clone());
        for _ in 0..eqs {
            let deg = 1 + (rand::Rng::gen_range(&mut rng, 0..3usize)).min(vars - 1);
            let mut idx: Vec<u32> = (0..vars as u32).collect();
            for i in 0..deg {
                let j = rand::Rng::gen_range(&mut rng, i..vars);
                idx.swap(i, j);
            }
            let vars_row = &idx[..deg];
            let coefs: Vec<u32> = vars_row.iter().map(|_| f.random_nonzero(&mut rng)).collect();
            let rhs = f.random(&mut rng);
            sys.push(vars_row, &coefs, rhs);
        }
        let report = inactivation_decode(&sys, InactivationStrategy::Random, &mut rng);
        let (a, b) = sys.to_dense();
        let dense = a.eliminate(Some(&b));
        prop_assert_eq!(report.success, dense.consistent && dense.rank == vars);
        prop_assert_eq!(report.rank, dense.rank);
        if report.success {
            let x = report.solution.expect("successful decode carries a solution");
            prop_assert!(sys.satisfied_by(&x));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lt_failure_floor_never_rises_with_more_receipts(
        k in 8usize..80,
        m_gap in 0usize..12,
        seed in any::<u64>(),
    ) {
        let _ = seed;
        let dist = DegreeDistribution::ideal_soliton(k);
        let lo = lt_ml_lower_bound(&dist, k, m_gap as f64 / k as f64);
        let hi = lt_ml_lower_bound(&dist, k, (m_gap + 8) as f64 / k as f64);
        prop_assert!(hi.value <= lo.value + 1e-15);
        prop_assert!(lo.value > 0.0 && lo.value <= 1.0);
    }

    #[test]
    fn lrfc_bracket_is_ordered_and_shrinks_with_delta(
        m in prop::sample::select(vec![1u32, 2, 4]),
        delta in 0usize..24,
    ) {
        let q = 1u32 << m;
        let (lo, hi) = lrfc_bounds(q, delta);
        let (lo_next, hi_next) = lrfc_bounds(q, delta + 1);
        prop_assert!(lo < hi);
        prop_assert!(hi_next < hi && lo_next < lo);
        prop_assert!(hi <= 1.0 + 1e-12 && lo > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulation_plans_are_seed_deterministic_and_round_trip(
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let plan = TrialPlan {
            code: CodeConfig::Lrfc { k, field_m: 1 },
            sweep: SweepSpec::FixedReceipts { deltas: vec![0, 1] },
            stop: StopRule { target_failures: 8, max_trials: 400 },
            track_inactivations: false,
            seed,
        };
        let rows = run_plan(&plan).unwrap();
        let again = run_plan(&plan).unwrap();
        prop_assert_eq!(&rows, &again);
        let text = plan_tsv(&plan, &rows);
        let (parsed_plan, parsed_rows) = parse_plan_tsv(&text).unwrap();
        prop_assert_eq!(parsed_plan, plan);
        prop_assert_eq!(parsed_rows.len(), rows.len());
        for (p, r) in parsed_rows.iter().zip(&rows) {
            prop_assert_eq!(p.trials, r.trials);
            prop_assert_eq!(p.failures, r.failures);
            prop_assert!((p.pf - r.pf).abs() <= 1e-15);
        }
    }

    #[test]
    fn designed_distributions_respect_every_constraint(
        k in 24usize..64,
        dmax in 4usize..10,
        max_mean in 2.5f64..4.5,
        pin in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let spec = DesignSpec {
            k,
            target_pf: 0.5,
            eval_at: OverheadPoint::Relative { epsilon: 0.15 },
            max_mean,
            pin_mean: pin,
            dmax,
            support: (1..=dmax).collect(),
            penalty: None,
            family: Family::Free,
            schedule: Schedule { sweeps: 4, steps_per_sweep: 4, chains: 1, ..Schedule::default() },
            seed,
        };
        let result = anneal(&spec, &DesignContext::Lt).unwrap();
        assert_valid_distribution(&result.dist);
        prop_assert!(result.dist.max_degree() <= dmax);
        if pin {
            prop_assert!((result.dist.mean() - max_mean).abs() <= 1e-6);
        } else {
            prop_assert!(result.dist.mean() <= max_mean + 1e-9);
        }
        prop_assert_eq!(result.feasible, result.failure_bound < spec.target_pf);
        prop_assert!(result.expected_inactivations.is_finite());
    }
}
