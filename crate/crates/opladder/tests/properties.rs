//! Property-based invariants over randomized weight parameters. Kept at
//! moderate precision and small case counts: each case builds real rules.

use opladder::opcore;
use opladder::precision::Ctx;
use opladder::quadrature::{build_rules, RulePlan};
use opladder::weights::{Atom, Exponents, Family, JumpPoint, JumpSpec, WeightSpec};
use proptest::prelude::*;

fn small_exponent() -> impl Strategy<Value = f64> {
    // exercise the (-1, 0] range the crate exists for, plus a positive tail
    prop_oneof![(-0.95f64..0.0), (0.0f64..2.0)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, .. ProptestConfig::default() })]

    #[test]
    fn weight_json_round_trip(
        lambda in small_exponent(),
        c in 0.5f64..2.0,
        gamma in -1.5f64..1.5,
        shift in 0.5f64..3.0,
    ) {
        let w = WeightSpec::new(
            Family::Laguerre,
            Exponents::Lambda(lambda),
            vec![Atom::ExpLinear { c }, Atom::PowerShift { c: shift, gamma }],
            None,
            None,
        )
        .unwrap();
        let s = serde_json::to_string(&w).unwrap();
        let back: WeightSpec = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(w, back);
    }

    #[test]
    fn jacobi_mass_matches_beta_function(
        alpha in small_exponent(),
        beta in small_exponent(),
    ) {
        let ctx = Ctx::new(192);
        let w = WeightSpec::new(
            Family::Jacobi,
            Exponents::AlphaBeta { alpha, beta },
            vec![],
            None,
            None,
        )
        .unwrap();
        let rules = build_rules(ctx, &w, &RulePlan::standard(24, 4)).unwrap();
        let q = rules.integrate(|_| ctx.one()).unwrap();
        let expect = ctx.pow(&ctx.re(2.0), &(ctx.re(alpha) + ctx.re(beta) + ctx.one()))
            * ctx.beta(&(ctx.re(alpha) + ctx.one()), &(ctx.re(beta) + ctx.one()));
        let rel = ((q - &expect) / expect).abs();
        prop_assert!(rel < ctx.re(1e-40), "rel = {:e}", rel.to_f64());
    }

    #[test]
    fn cd_kernel_symmetric_and_consistent(
        alpha in small_exponent(),
        x in -0.9f64..0.9,
        y in 1.5f64..3.0,
    ) {
        let ctx = Ctx::new(128);
        let w = WeightSpec::new(
            Family::Jacobi,
            Exponents::AlphaBeta { alpha, beta: alpha },
            vec![],
            None,
            None,
        )
        .unwrap();
        let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 4, 40).unwrap();
        let k_xy = opcore::cd_kernel(&tab, 3, &ctx.re(x), &ctx.re(y)).unwrap();
        let k_yx = opcore::cd_kernel(&tab, 3, &ctx.re(y), &ctx.re(x)).unwrap();
        let k_sum = opcore::cd_kernel_sum(&tab, 3, &ctx.re(x), &ctx.re(y)).unwrap();
        let scale = ctx.one() + k_xy.clone().abs();
        prop_assert!(((k_xy.clone() - k_yx) / &scale).abs() < ctx.re(1e-25));
        prop_assert!(((k_xy - k_sum) / &scale).abs() < ctx.re(1e-25));
    }

    #[test]
    fn jump_partial_sums_guard_nonnegativity(
        omega0 in 0.0f64..1.0,
        drop in 0.1f64..5.0,
    ) {
        // a step that dips below zero anywhere must be rejected
        let w = WeightSpec::new(
            Family::Laguerre,
            Exponents::Lambda(0.0),
            vec![Atom::ExpLinear { c: 1.0 }],
            Some(JumpSpec {
                omega0,
                points: vec![JumpPoint { t: 1.0, omega: -(omega0 + drop) }],
            }),
            None,
        );
        prop_assert!(w.is_err());
    }

    #[test]
    fn rules_invariant_under_atom_order(
        lambda in small_exponent(),
        c in 0.5f64..1.5,
        gamma in 0.1f64..1.5,
    ) {
        let ctx = Ctx::new(128);
        let atoms1 = vec![Atom::ExpLinear { c: 1.0 }, Atom::PowerShift { c, gamma }];
        let atoms2 = vec![Atom::PowerShift { c, gamma }, Atom::ExpLinear { c: 1.0 }];
        let w1 = WeightSpec::new(Family::Laguerre, Exponents::Lambda(lambda), atoms1, None, None)
            .unwrap();
        let w2 = WeightSpec::new(Family::Laguerre, Exponents::Lambda(lambda), atoms2, None, None)
            .unwrap();
        let r1 = build_rules(ctx, &w1, &RulePlan::standard(12, 4)).unwrap();
        let r2 = build_rules(ctx, &w2, &RulePlan::standard(12, 4)).unwrap();
        let q1 = r1.integrate(|x| x.clone()).unwrap();
        let q2 = r2.integrate(|x| x.clone()).unwrap();
        let rel = ((q1 - &q2) / q2).abs();
        prop_assert!(rel < ctx.re(1e-30), "rel = {:e}", rel.to_f64());
    }
}
