//! Randomized invariants over the public API.

use ends::criteria::{sup_criterion, CriterionCase, Verdict};
use ends::profile::RadialProfile;
use ends::quad::TailKind;
use ends::report::ManifoldReport;
use ends::stochastic::mc_explosion;
use ends::table::Extrapolation;
use proptest::prelude::*;

fn exp_power_profile() -> impl Strategy<Value = RadialProfile> {
    // sign * r^k exponents with |coefficient| <= 2 stay within every
    // integrator's comfort zone while exercising both volume classes
    (prop_oneof![Just(1i32), Just(2), Just(3)], -2.0f64..2.0)
        .prop_filter("drop the flat profile", |(_, c)| c.abs() > 1e-3)
        .prop_map(|(k, c)| {
            RadialProfile::parse(&format!("exp({c}*r^{k})")).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn ln_evaluate_matches_log_of_evaluate(c in -2.0f64..2.0, r in 0.0f64..20.0) {
        let p = RadialProfile::parse(&format!("exp({c}*r)")).unwrap();
        let direct = p.evaluate(r).unwrap().ln();
        let ln = p.ln_evaluate(r).unwrap();
        prop_assert!((direct - ln).abs() <= 1e-12 * (1.0 + ln.abs()));
    }

    #[test]
    fn duality_kinds_agree(p in exp_power_profile(), t in 0.5f64..8.0) {
        let a = sup_criterion(&p, t, CriterionCase::Infinite).unwrap();
        let b = sup_criterion(&p.reciprocal(), t, CriterionCase::Finite).unwrap();
        match (a.b.kind(), b.b.kind()) {
            (TailKind::Convergent(x), TailKind::Convergent(y)) => {
                prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-300));
            }
            (ka, kb) => prop_assert_eq!(ka, kb),
        }
    }

    #[test]
    fn sup_is_monotone_under_t(p in exp_power_profile(), t in 0.5f64..4.0) {
        // B(t) = sup_{s>t} A(t,s) can only shrink when the base point moves
        // out, because the s-range shrinks and the inner integral loses mass
        let b0 = sup_criterion(&p, t, CriterionCase::Infinite).unwrap();
        let b1 = sup_criterion(&p, t + 1.0, CriterionCase::Infinite).unwrap();
        if let (TailKind::Convergent(x), TailKind::Convergent(y)) = (b0.b.kind(), b1.b.kind()) {
            prop_assert!(y <= x * (1.0 + 1e-6), "B({t}) = {x} < B({}) = {y}", t + 1.0);
        }
    }

    #[test]
    fn table_profile_reproduces_samples(c in -1.5f64..1.5) {
        let samples: Vec<(f64, f64)> =
            (0..=100).map(|i| { let r = i as f64 * 0.1; (r, (c * r).exp()) }).collect();
        let p = RadialProfile::from_table(&samples, Extrapolation::LogLinear).unwrap();
        for &(r, w) in samples.iter().step_by(7) {
            let v = p.evaluate(r).unwrap();
            prop_assert!((v - w).abs() <= 1e-9 * w, "at r={r}: {v} vs {w}");
        }
    }

    #[test]
    fn mc_fraction_is_seed_deterministic(seed in any::<u64>()) {
        let p = RadialProfile::parse("exp(r^3)").unwrap();
        let a = mc_explosion(&p, 100, 2.0, 30.0, seed).unwrap();
        let b = mc_explosion(&p, 100, 2.0, 30.0, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    // pure logic, so the full default case count is cheap
    #[test]
    fn overall_verdict_is_the_conjunction(codes in proptest::collection::vec(0u8..3, 1..12)) {
        let verdicts: Vec<Verdict> = codes
            .iter()
            .map(|c| match c {
                0 => Verdict::Discrete,
                1 => Verdict::NotDiscrete,
                _ => Verdict::Inconclusive,
            })
            .collect();
        let overall = ManifoldReport::combine(&verdicts);
        if verdicts.iter().any(|v| *v == Verdict::NotDiscrete) {
            prop_assert_eq!(overall, Verdict::NotDiscrete);
        } else if verdicts.iter().any(|v| *v == Verdict::Inconclusive) {
            prop_assert_eq!(overall, Verdict::Inconclusive);
        } else {
            prop_assert_eq!(overall, Verdict::Discrete);
        }
    }
}
