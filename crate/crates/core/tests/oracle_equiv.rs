//! Engine vs explicit-tower oracle: the run-list kernels and the literal
//! stacking simulation must agree exactly on every query.

use num_bigint::BigUint;
use num_rational::BigRational;

use cutstack::correlation::{birkhoff_hist, corr, corr_at_stage, corr_sum};
use cutstack::levelset::LevelSet;
use cutstack::oracle::{build_explicit, ExplicitTower, Role, DEFAULT_LEVEL_CAP};
use cutstack::params::{Alpha, FamilySpec, MRule};
use cutstack::Construction;

type Set = LevelSet<u64>;

fn p221() -> Construction {
    Construction::explicit(vec![2; 4], vec![1; 4], vec![1; 4]).unwrap()
}

fn va() -> Construction {
    Construction::new(FamilySpec::valpha(
        Alpha::new(1, 2).unwrap(),
        MRule::Square,
        5,
    ))
    .unwrap()
}

/// xorshift64* — deterministic fuzz without external dependencies.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    fn below(&mut self, bound: u64) -> u64 {
        self.next() % bound.max(1)
    }
}

fn random_set(rng: &mut Rng, ctx: &Construction, stage: usize) -> Set {
    let h = ctx.h(stage).unwrap().to_string().parse::<u64>().unwrap();
    let runs = 1 + rng.below(4);
    let mut intervals = Vec::new();
    for _ in 0..runs {
        let lo = rng.below(h);
        let len = 1 + rng.below((h - lo).min(8));
        intervals.push((lo, lo + len));
    }
    Set::from_intervals(ctx, stage, intervals).unwrap()
}

fn set_levels(s: &Set) -> Vec<u64> {
    s.levels_u64().unwrap()
}

fn f_levels_match(ctx: &Construction, tower: &ExplicitTower) {
    let f = Set::f_set(ctx, tower.stage()).unwrap();
    assert_eq!(set_levels(&f), tower.originals());
    // role sets agree level by level
    let spacers = f.complement_in_column(ctx).unwrap();
    for lvl in set_levels(&spacers) {
        assert_eq!(tower.role(lvl), Role::Spacer);
    }
}

fn named_sets(ctx: &Construction, top: usize) -> Vec<Set> {
    let mut sets = vec![Set::f_set(ctx, top).unwrap()];
    for n in 0..top {
        for i in 0..ctx.k(n).unwrap() {
            sets.push(Set::subcolumn(ctx, n, i).unwrap());
        }
    }
    if ctx.params().is_valpha() {
        for n in 1..top {
            let d = Set::d_set(ctx, n).unwrap();
            if !d.is_empty() {
                sets.push(d);
            }
        }
    }
    sets
}

fn check_family(ctx: &Construction, seed: u64) {
    let top = 3;
    let tower = build_explicit(ctx, top, DEFAULT_LEVEL_CAP).unwrap();
    f_levels_match(ctx, &tower);

    let h = tower.height();
    let sets = named_sets(ctx, top);
    // all named pairs, a spread of shifts and windows
    for a in &sets {
        for b in &sets {
            let (a3, b3) = (a.refine(ctx, top).unwrap(), b.refine(ctx, top).unwrap());
            let (la, lb) = (set_levels(&a3), set_levels(&b3));
            let max_b = lb.last().copied().unwrap_or(0);
            for i in [0, 1, 2, 7, (h - max_b - 1) / 2, h - max_b - 1] {
                let engine = corr(ctx, a, b, &BigUint::from(i)).unwrap();
                let oracle = tower.corr(&la, &lb, i).unwrap();
                assert_eq!(engine, oracle, "corr mismatch shift {i}");
            }
            for t in [1, 2, 3, h / 4, h - max_b - 1] {
                let engine = corr_sum(ctx, a, b, &BigUint::from(t)).unwrap();
                let oracle = tower.corr_sum(&la, &lb, t).unwrap();
                assert_eq!(engine, oracle, "corr_sum mismatch t {t}");
            }
        }
    }

    // fuzz pairs at mixed stages
    let mut rng = Rng(seed);
    for case in 0..60 {
        let sa = (rng.below(3) + 1) as usize;
        let sb = (rng.below(3) + 1) as usize;
        let a = random_set(&mut rng, ctx, sa);
        let b = random_set(&mut rng, ctx, sb);
        let a3 = a.refine(ctx, top).unwrap();
        let b3 = b.refine(ctx, top).unwrap();
        let (la, lb) = (set_levels(&a3), set_levels(&b3));
        let max_b = lb.last().copied().unwrap();
        let room = h - max_b - 1;
        let i = rng.below(room + 1);
        let t = 1 + rng.below(room);

        let engine = corr(ctx, &a, &b, &BigUint::from(i)).unwrap();
        assert_eq!(engine, tower.corr(&la, &lb, i).unwrap(), "fuzz case {case}");
        let engine = corr_sum(ctx, &a, &b, &BigUint::from(t)).unwrap();
        assert_eq!(
            engine,
            tower.corr_sum(&la, &lb, t).unwrap(),
            "fuzz corr_sum case {case}"
        );

        // stage independence: same value at two distinct safe stages
        let s1 = corr_at_stage(ctx, &a, &b, &BigUint::from(i), top).unwrap();
        let s2 = corr_at_stage(ctx, &a, &b, &BigUint::from(i), top + 1).unwrap();
        assert_eq!(s1, s2, "stage choice changed corr, case {case}");
    }
}

#[test]
fn p221_matches_oracle() {
    check_family(&p221(), 0x5eed_0001);
}

#[test]
fn va_matches_oracle() {
    check_family(&va(), 0x5eed_0002);
}

#[test]
fn birkhoff_matches_oracle_counts() {
    for (ctx, seed) in [(p221(), 1u64), (va(), 2u64)] {
        let tower = build_explicit(&ctx, 3, DEFAULT_LEVEL_CAP).unwrap();
        let f3 = Set::f_set(&ctx, 3).unwrap();
        let f_levels = set_levels(&f3);
        let max_f = *f_levels.last().unwrap();
        let mut rng = Rng(seed);
        for _ in 0..20 {
            let t = 1 + rng.below(tower.height() - max_f - 1);
            let hist = birkhoff_hist(&ctx, &f3, &BigUint::from(t)).unwrap();
            let oracle = tower.birkhoff_counts(&f_levels, t).unwrap();
            let engine: Vec<(u64, u64)> = hist.entries().iter().map(|(v, c)| (*v, *c)).collect();
            let oracle: Vec<(u64, u64)> = oracle.into_iter().collect();
            assert_eq!(engine, oracle, "t = {t}");
            // Fubini both ways
            assert_eq!(
                hist.weighted_sum(),
                corr_sum(&ctx, &f3, &f3, &BigUint::from(t)).unwrap()
            );
        }
    }
}

#[test]
fn oracle_height_equals_geometry_for_va_stage4() {
    let c = va();
    let tower = build_explicit(&c, 4, DEFAULT_LEVEL_CAP).unwrap();
    assert_eq!(BigUint::from(tower.height()), *c.h(4).unwrap());
    assert_eq!(BigUint::from(tower.h_hat()), *c.h_hat(4).unwrap());
    // spot-check a mid-range correlation value at stage 4 scale
    let f = Set::f_set(&c, 4).unwrap();
    let levels = set_levels(&f);
    let engine = corr_sum(&c, &f, &f, &BigUint::from(1920u32)).unwrap();
    let oracle = tower.corr_sum(&levels, &levels, 1920).unwrap();
    assert_eq!(engine, oracle);
    assert_eq!(
        engine,
        BigRational::new(2065.into(), 36.into()),
        "frozen regression value for corr_sum(F, F, H_3)"
    );
}
