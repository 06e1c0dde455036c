//! Property tests for the run-list algebra and the exact identities the
//! correlation layer must satisfy.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

use cutstack::correlation::{birkhoff_hist, corr_sum, moment};
use cutstack::levelset::LevelSet;
use cutstack::params::{Alpha, Beta, FamilySpec, MRule};
use cutstack::Construction;

type Set = LevelSet<u64>;
type BigSet = LevelSet<BigUint>;

fn families() -> Vec<Construction> {
    vec![
        Construction::explicit(vec![2; 4], vec![1; 4], vec![1; 4]).unwrap(),
        Construction::explicit(vec![3, 2, 4, 2], vec![0, 2, 1, 3], vec![2, 1, 1, 2]).unwrap(),
        Construction::new(FamilySpec::valpha(
            Alpha::new(1, 2).unwrap(),
            MRule::Square,
            4,
        ))
        .unwrap(),
    ]
}

prop_compose! {
    fn arb_intervals(max_h: u64)(
        raw in prop::collection::vec((0u64..max_h, 1u64..6), 0..6)
    ) -> Vec<(u64, u64)> {
        raw.into_iter().map(|(lo, len)| (lo, (lo + len).min(max_h))).collect()
    }
}

fn h_at(ctx: &Construction, stage: usize) -> u64 {
    ctx.h(stage).unwrap().try_into().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measure_inclusion_exclusion(
        fam in 0usize..3,
        stage in 1usize..3,
        ia in arb_intervals(24),
        ib in arb_intervals(24),
    ) {
        let ctx = &families()[fam];
        let h = h_at(ctx, stage);
        let clip = |iv: Vec<(u64, u64)>| -> Vec<(u64, u64)> {
            iv.into_iter().map(|(lo, hi)| (lo.min(h - 1), hi.min(h))).collect()
        };
        let a = Set::from_intervals(ctx, stage, clip(ia)).unwrap();
        let b = Set::from_intervals(ctx, stage, clip(ib)).unwrap();
        let union = a.union(ctx, &b).unwrap();
        let inter = a.intersect(ctx, &b).unwrap();
        union.check_invariants(ctx).unwrap();
        inter.check_invariants(ctx).unwrap();
        // μ(A) + μ(B) = μ(A∪B) + μ(A∩B), exactly
        prop_assert_eq!(
            a.measure(ctx).unwrap() + b.measure(ctx).unwrap(),
            union.measure(ctx).unwrap() + inter.measure(ctx).unwrap()
        );
        // difference partitions the union
        let only_a = a.difference(ctx, &b).unwrap();
        let only_b = b.difference(ctx, &a).unwrap();
        only_a.check_invariants(ctx).unwrap();
        prop_assert_eq!(
            only_a.measure(ctx).unwrap()
                + only_b.measure(ctx).unwrap()
                + inter.measure(ctx).unwrap(),
            union.measure(ctx).unwrap()
        );
        // set identities
        prop_assert!(inter.is_subset_of(ctx, &a).unwrap());
        prop_assert!(a.is_subset_of(ctx, &union).unwrap());
        prop_assert!(only_a.intersect(ctx, &b).unwrap().is_empty());
    }

    #[test]
    fn refinement_preserves_measure_and_membership(
        fam in 0usize..3,
        ia in arb_intervals(6),
        target in 1usize..4,
    ) {
        let ctx = &families()[fam];
        let a = Set::from_intervals(ctx, 1, ia.into_iter().map(|(lo, hi)| (lo.min(3), hi.min(4)))).unwrap();
        let r = a.refine(ctx, target.max(1)).unwrap();
        r.check_invariants(ctx).unwrap();
        prop_assert_eq!(a.measure(ctx).unwrap(), r.measure(ctx).unwrap());
        prop_assert!(a.eq_as_sets(ctx, &r).unwrap());
        // intersection with the refined complement is empty
        let comp = a.complement_in_column(ctx).unwrap().refine(ctx, target.max(1)).unwrap();
        prop_assert!(r.intersect(ctx, &comp).unwrap().is_empty());
    }

    #[test]
    fn fubini_identity_on_random_bases(
        fam in 0usize..3,
        pick in prop::collection::vec(any::<bool>(), 8),
        t in 1u64..100,
    ) {
        let ctx = &families()[fam];
        let f = Set::f_set(ctx, 2).unwrap();
        // random sub-level-set of F: keep a prefix pattern of its runs
        let runs: Vec<(u64, u64)> = f
            .runs()
            .iter()
            .enumerate()
            .filter(|(i, _)| *pick.get(i % pick.len()).unwrap_or(&true))
            .map(|(_, r)| (r.lo, r.lo + r.len))
            .collect();
        prop_assume!(!runs.is_empty());
        let base = Set::from_intervals(ctx, 2, runs).unwrap();
        let hist = birkhoff_hist(ctx, &base, &BigUint::from(t)).unwrap();
        let cs = corr_sum(ctx, &Set::f_set(ctx, 2).unwrap(), &base, &BigUint::from(t)).unwrap();
        prop_assert_eq!(hist.weighted_sum(), cs);
        prop_assert_eq!(hist.total_mass(), base.measure(ctx).unwrap());
    }

    #[test]
    fn power_mean_monotonicity_and_log_convexity(
        fam in 0usize..3,
        t in 1u64..200,
    ) {
        let ctx = &families()[fam];
        let base = Set::f_set(ctx, 2).unwrap();
        let hist = birkhoff_hist(ctx, &base, &BigUint::from(t)).unwrap();
        let mu = base.measure(ctx).unwrap();
        let m: Vec<BigRational> = (1u32..=4)
            .map(|b| {
                moment(&hist, &Beta::integer(b).unwrap(), 96)
                    .unwrap()
                    .exact_value()
                    .unwrap()
                    .clone()
            })
            .collect();
        // power-mean chain, cross-powered to stay rational:
        // (m_b1/μ)^(1/b1) ≤ (m_b2/μ)^(1/b2)  ⇔  (m_b1/μ)^b2 ≤ (m_b2/μ)^b1
        for b1 in 1usize..=3 {
            for b2 in (b1 + 1)..=4 {
                let lhs = pow_rat(&(&m[b1 - 1] / &mu), b2 as u32);
                let rhs = pow_rat(&(&m[b2 - 1] / &mu), b1 as u32);
                prop_assert!(lhs <= rhs, "power mean failed t={t} b1={b1} b2={b2}");
            }
        }
        // log-convexity on the integer triple (2,3,4): m3² ≤ m2·m4
        prop_assert!(&m[2] * &m[2] <= &m[1] * &m[3]);
    }

    #[test]
    fn engines_agree(
        fam in 0usize..3,
        ia in arb_intervals(20),
        ib in arb_intervals(20),
        t in 1u64..60,
    ) {
        let ctx = &families()[fam];
        let h = h_at(ctx, 2);
        let clip = |iv: Vec<(u64, u64)>| -> Vec<(u64, u64)> {
            iv.into_iter().map(|(lo, hi)| (lo.min(h - 1), hi.min(h))).collect()
        };
        let a = Set::from_intervals(ctx, 2, clip(ia.clone())).unwrap();
        let b = Set::from_intervals(ctx, 2, clip(ib.clone())).unwrap();
        let a_big: BigSet = a.convert().unwrap();
        let b_big: BigSet = b.convert().unwrap();
        let fast = corr_sum(ctx, &a, &b, &BigUint::from(t)).unwrap();
        let big = corr_sum(ctx, &a_big, &b_big, &BigUint::from(t)).unwrap();
        prop_assert_eq!(fast, big);
    }

    #[test]
    fn corr_sum_zero_cases(fam in 0usize..3, t in 0u64..50) {
        let ctx = &families()[fam];
        let f = Set::f_set(ctx, 2).unwrap();
        let empty = Set::empty(2);
        prop_assert_eq!(corr_sum(ctx, &f, &empty, &BigUint::from(t)).unwrap(), BigRational::zero());
        prop_assert_eq!(corr_sum(ctx, &empty, &f, &BigUint::from(t)).unwrap(), BigRational::zero());
        prop_assert_eq!(corr_sum(ctx, &f, &f, &BigUint::zero()).unwrap(), BigRational::zero());
    }
}

fn pow_rat(x: &BigRational, p: u32) -> BigRational {
    BigRational::new(x.numer().pow(p), x.denom().pow(p))
}

#[test]
fn f_self_similarity_across_all_families() {
    for ctx in families() {
        for n in 0..ctx.top_stage() {
            let fn_refined = Set::f_set(&ctx, n).unwrap().refine(&ctx, n + 1).unwrap();
            assert_eq!(fn_refined, Set::f_set(&ctx, n + 1).unwrap());
        }
    }
}
