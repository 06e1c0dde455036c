//! Exact correlation quantities.
//!
//! Everything here reduces to counting levels at a *safe stage*: a stage `s`
//! where the largest level of the shifted operand plus the shift window is
//! still below `h_s`, so `Tⁱ` acts on level indices as `j ↦ j + i` and
//! `μ(A ∩ TⁱB)` is `|A ∩ (B + i)| / ĥ_s`. Results are independent of which
//! safe stage is used; the smallest one is chosen.
//!
//! The partial sum `Σ_{i<t} μ(A ∩ TⁱB)` is *not* computed term by term
//! (that is what [`crate::oracle`] does). Writing the sum as
//! `Σ_{b∈B} |A ∩ [b, b+t)|` and introducing the double prefix
//! `F(y) = Σ_{u<y} |A ∩ [0, u)|`, each run `[l, h)` of `B` contributes
//! `(F(h+t) − F(l+t)) − (F(h) − F(l))`, so the whole sum costs one linear
//! pass over the runs of `A` and `B` regardless of `t`. `F` is piecewise
//! quadratic with breakpoints at the run bounds of `A`; evaluation points
//! arrive in increasing order per stream, so a moving cursor suffices.
//!
//! Counts can exceed any machine word, but when the column height fits in
//! 60 bits every intermediate is below 2^123, so a fixed `i128` lane is used
//! there and a `BigInt` lane elsewhere. Both lanes are exact.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::approx::{pow_value, Value};
use crate::construction::Construction;
use crate::error::{Error, Result};
use crate::levelset::{LevelSet, Run};
use crate::params::Beta;
use crate::scalar::LevelInt;
use crate::Measure;

/// Practical guard for the per-level histogram walk.
const MAX_HIST_LEVELS: u64 = 1 << 40;

/// Threshold (bits of `h_s`) under which the fixed-width lane is safe.
const WIDE_BITS: u64 = 60;

/// Smallest stage `s ≥ floor_stage` at which shifting `shifted` by anything
/// up to `window` stays inside the column: `max_level(shifted@s) + window < h_s`.
pub fn safe_stage<T: LevelInt>(
    ctx: &Construction,
    floor_stage: usize,
    shifted: &LevelSet<T>,
    window: &BigUint,
) -> Result<usize> {
    let start = floor_stage.max(shifted.stage());
    if shifted.is_empty() {
        return Ok(start);
    }
    for s in start..=ctx.top_stage() {
        let max = shifted
            .max_level_at(ctx, s)?
            .expect("nonempty set has a max level");
        if &max + window < *ctx.h(s)? {
            return Ok(s);
        }
    }
    Err(Error::NoSafeStage {
        window: window.to_string(),
    })
}

/// `μ(A ∩ T^shift B)`, exactly.
pub fn corr<T: LevelInt>(
    ctx: &Construction,
    a: &LevelSet<T>,
    b: &LevelSet<T>,
    shift: &BigUint,
) -> Result<Measure> {
    let s = safe_stage(ctx, a.stage(), b, shift)?;
    corr_at_stage(ctx, a, b, shift, s)
}

/// Same as [`corr`] but evaluated at a caller-chosen safe stage (used by the
/// stage-independence checks).
pub fn corr_at_stage<T: LevelInt>(
    ctx: &Construction,
    a: &LevelSet<T>,
    b: &LevelSet<T>,
    shift: &BigUint,
    s: usize,
) -> Result<Measure> {
    if b.is_empty() || a.is_empty() {
        return Ok(Measure::zero());
    }
    let max = b.max_level_at(ctx, s)?.expect("nonempty");
    if !(&max + shift < *ctx.h(s)?) {
        return Err(Error::NoSafeStage {
            window: shift.to_string(),
        });
    }
    let a = a.refine(ctx, s)?;
    let b = b.refine(ctx, s)?;
    let shift_t = T::from_biguint(shift).ok_or(Error::Capacity { stage: s })?;
    let count = shifted_overlap_count(a.runs(), b.runs(), &shift_t);
    Ok(BigRational::new(count.into(), ctx.h_hat(s)?.clone().into()))
}

/// `|A ∩ (B + shift)|` over normalized run lists.
fn shifted_overlap_count<T: LevelInt>(a: &[Run<T>], b: &[Run<T>], shift: &T) -> BigUint {
    let mut acc = BigUint::zero();
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        let a_lo = &a[i].lo;
        let a_hi = a[i].end();
        let b_lo = b[j].lo.clone() + shift;
        let b_hi = b_lo.clone() + &b[j].len;
        let lo = a_lo.clone().max(b_lo);
        let hi = a_hi.clone().min(b_hi.clone());
        if hi > lo {
            acc += (hi - &lo).to_biguint();
        }
        if a_hi <= b_hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    acc
}

/// Fixed-width or unbounded accumulator for the window kernels. The `i128`
/// lane is valid whenever `h_s` has at most [`WIDE_BITS`] bits: every
/// intermediate is bounded by `(2·h_s)·ĥ_s < 2^123`.
trait Acc: Clone + Ord + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Sized {
    fn zero() -> Self;
    fn from_level<T: LevelInt>(v: &T) -> Self;
    fn from_big(v: &BigUint) -> Self;
    fn into_big(self) -> BigUint;
}

impl Acc for i128 {
    fn zero() -> Self {
        0
    }
    fn from_level<T: LevelInt>(v: &T) -> Self {
        v.to_u64_checked().expect("wide lane guard") as i128
    }
    fn from_big(v: &BigUint) -> Self {
        v.to_i128().expect("wide lane guard")
    }
    fn into_big(self) -> BigUint {
        debug_assert!(self >= 0);
        BigUint::from(self as u128)
    }
}

impl Acc for BigInt {
    fn zero() -> Self {
        BigInt::ZERO
    }
    fn from_level<T: LevelInt>(v: &T) -> Self {
        BigInt::from(v.to_biguint())
    }
    fn from_big(v: &BigUint) -> Self {
        BigInt::from(v.clone())
    }
    fn into_big(self) -> BigUint {
        debug_assert!(!self.is_negative());
        self.magnitude().clone()
    }
}

fn tri_i128(d: i128) -> i128 {
    if d <= 0 {
        0
    } else {
        d * (d - 1) / 2
    }
}

fn tri_bigint(d: BigInt) -> BigInt {
    if d.is_negative() || d.is_zero() {
        BigInt::ZERO
    } else {
        (&d * (d.clone() - 1)) / 2
    }
}

/// Window count `Σ_{b ∈ B} |A ∩ [b, b+t)|` over runs, one lane per scalar width.
fn window_count<T: LevelInt>(a: &[Run<T>], b: &[Run<T>], t: &BigUint, wide: bool) -> BigUint {
    if wide {
        let dp = DoublePrefixI128::build(a);
        dp.window_count(b, i128::from_big(t))
    } else {
        let dp = DoublePrefixBig::build(a);
        dp.window_count(b, BigInt::from_big(t))
    }
}

// The double prefix `F(y) = Σ_{u<y} |A ∩ [0, u)|` is piecewise quadratic in
// `y` with breakpoints at A's run bounds: with `j` the last run with
// `lo_j ≤ y`, `d = min(y, hi_j) − lo_j`, and `cumf_j = F(lo_j)`,
//
//   F(y) = cumf_j + cumlen_j·(y − lo_j) + d(d−1)/2 + len_j·max(0, y − hi_j).
//
// The two lanes differ only in the accumulator type, hence the macro.
macro_rules! double_prefix_impl {
    ($name:ident, $acc:ty, $tri:path) => {
        struct $name {
            lo: Vec<$acc>,
            hi: Vec<$acc>,
            len: Vec<$acc>,
            cumlen: Vec<$acc>,
            cumf: Vec<$acc>,
        }

        impl $name {
            fn build<T: LevelInt>(runs: &[Run<T>]) -> Self {
                let n = runs.len();
                let mut lo_v: Vec<$acc> = Vec::with_capacity(n);
                let mut hi_v: Vec<$acc> = Vec::with_capacity(n);
                let mut len_v: Vec<$acc> = Vec::with_capacity(n);
                let mut cumlen_v: Vec<$acc> = Vec::with_capacity(n);
                let mut cumf_v: Vec<$acc> = Vec::with_capacity(n);
                let mut cumlen: $acc = <$acc as Acc>::zero();
                let mut cumf: $acc = <$acc as Acc>::zero();
                for (j, r) in runs.iter().enumerate() {
                    let lo = <$acc as Acc>::from_level(&r.lo);
                    let len = <$acc as Acc>::from_level(&r.len);
                    let hi = lo.clone() + len.clone();
                    if j > 0 {
                        let p = j - 1;
                        cumf = cumf
                            + cumlen_v[p].clone() * (lo.clone() - lo_v[p].clone())
                            + $tri(len_v[p].clone())
                            + len_v[p].clone() * (lo.clone() - hi_v[p].clone());
                        cumlen += len_v[p].clone();
                    }
                    lo_v.push(lo);
                    hi_v.push(hi);
                    len_v.push(len);
                    cumlen_v.push(cumlen.clone());
                    cumf_v.push(cumf.clone());
                }
                $name {
                    lo: lo_v,
                    hi: hi_v,
                    len: len_v,
                    cumlen: cumlen_v,
                    cumf: cumf_v,
                }
            }

            fn eval(&self, cursor: &mut usize, y: &$acc) -> $acc {
                while *cursor < self.lo.len() && &self.lo[*cursor] <= y {
                    *cursor += 1;
                }
                if *cursor == 0 {
                    return <$acc as Acc>::zero();
                }
                let j = *cursor - 1;
                let d = if *y >= self.hi[j] {
                    self.len[j].clone()
                } else {
                    y.clone() - self.lo[j].clone()
                };
                let tail = if *y > self.hi[j] {
                    self.len[j].clone() * (y.clone() - self.hi[j].clone())
                } else {
                    <$acc as Acc>::zero()
                };
                self.cumf[j].clone()
                    + self.cumlen[j].clone() * (y.clone() - self.lo[j].clone())
                    + $tri(d)
                    + tail
            }

            fn window_count<T: LevelInt>(&self, b: &[Run<T>], t: $acc) -> BigUint {
                let mut total = <$acc as Acc>::zero();
                let (mut c_l, mut c_h, mut c_lt, mut c_ht) = (0usize, 0usize, 0usize, 0usize);
                for r in b {
                    let l = <$acc as Acc>::from_level(&r.lo);
                    let h = l.clone() + <$acc as Acc>::from_level(&r.len);
                    let f_l = self.eval(&mut c_l, &l);
                    let f_h = self.eval(&mut c_h, &h);
                    let f_lt = self.eval(&mut c_lt, &(l + t.clone()));
                    let f_ht = self.eval(&mut c_ht, &(h + t.clone()));
                    let val = (f_ht - f_lt) - (f_h - f_l);
                    debug_assert!(val >= <$acc as Acc>::zero());
                    total += val;
                }
                Acc::into_big(total)
            }
        }
    };
}

double_prefix_impl!(DoublePrefixI128, i128, tri_i128);
double_prefix_impl!(DoublePrefixBig, BigInt, tri_bigint);

/// `Σ_{i<t} μ(A ∩ TⁱB)` via the window identity, exactly.
pub fn corr_sum<T: LevelInt>(
    ctx: &Construction,
    a: &LevelSet<T>,
    b: &LevelSet<T>,
    t: &BigUint,
) -> Result<Measure> {
    if t.is_zero() || a.is_empty() || b.is_empty() {
        return Ok(Measure::zero());
    }
    let s = safe_stage(ctx, a.stage(), b, t)?;
    let a = a.refine(ctx, s)?;
    let b = b.refine(ctx, s)?;
    let wide = ctx.h(s)?.bits() <= WIDE_BITS;
    let count = window_count(a.runs(), b.runs(), t, wide);
    Ok(BigRational::new(count.into(), ctx.h_hat(s)?.clone().into()))
}

/// Exact distribution of the Birkhoff sum `S_t(x) = Σ_{i<t} 1_F(Tⁱx)` over
/// the levels of `base ⊆ F`, as value → level-count pairs with a common
/// denominator `ĥ_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BirkhoffHistogram<T: LevelInt> {
    stage: usize,
    t: BigUint,
    denom: BigUint,
    base_count: BigUint,
    entries: Vec<(T, u64)>,
}

impl<T: LevelInt> BirkhoffHistogram<T> {
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn t(&self) -> &BigUint {
        &self.t
    }

    /// Common denominator (`ĥ` at the evaluation stage).
    pub fn denom(&self) -> &BigUint {
        &self.denom
    }

    /// Number of base levels the distribution was taken over.
    pub fn base_level_count(&self) -> &BigUint {
        &self.base_count
    }

    /// Value → level-count pairs, ascending by value.
    pub fn entries(&self) -> &[(T, u64)] {
        &self.entries
    }

    pub fn atoms(&self) -> usize {
        self.entries.len()
    }

    /// Measure attached to one value.
    pub fn measure_of(&self, idx: usize) -> Measure {
        BigRational::new(self.entries[idx].1.into(), self.denom.clone().into())
    }

    /// `Σ measures` — must equal μ(base).
    pub fn total_mass(&self) -> Measure {
        let sum: u64 = self.entries.iter().map(|(_, c)| *c).sum();
        BigRational::new(sum.into(), self.denom.clone().into())
    }

    /// `Σ v·measure` — the Fubini dual of `corr_sum(F, base, t)`.
    pub fn weighted_sum(&self) -> Measure {
        let mut acc = BigUint::zero();
        for (v, c) in &self.entries {
            acc += v.to_biguint() * *c;
        }
        BigRational::new(acc.into(), self.denom.clone().into())
    }
}

/// Build the Birkhoff-sum histogram of `base ⊆ F` for window `t`.
pub fn birkhoff_hist<T: LevelInt>(
    ctx: &Construction,
    base: &LevelSet<T>,
    t: &BigUint,
) -> Result<BirkhoffHistogram<T>> {
    let s = safe_stage(ctx, base.stage(), base, t)?;
    let base_s = base.refine(ctx, s)?;
    let f = LevelSet::<T>::f_set(ctx, s)?;
    if !base_s.is_subset_of(ctx, &f)? {
        return Err(Error::NotInF);
    }
    let base_count = base_s.level_count();
    if base_count > BigUint::from(MAX_HIST_LEVELS) {
        return Err(Error::Invalid(format!(
            "histogram base has {base_count} levels; per-level walk capped at {MAX_HIST_LEVELS}"
        )));
    }
    let wide = ctx.h(s)?.bits() <= WIDE_BITS;
    let counts: BTreeMap<BigUint, u64> = if wide {
        hist_walk_u64(&f, &base_s, t)
    } else {
        hist_walk_big(&f, &base_s, t)
    };
    let mut entries = Vec::with_capacity(counts.len());
    for (v, c) in counts {
        let v = T::from_biguint(&v).ok_or(Error::Capacity { stage: s })?;
        entries.push((v, c));
    }
    debug_assert_eq!(
        entries
            .iter()
            .map(|(_, c)| BigUint::from(*c))
            .sum::<BigUint>(),
        base_count
    );
    Ok(BirkhoffHistogram {
        stage: s,
        t: t.clone(),
        denom: ctx.h_hat(s)?.clone(),
        base_count,
        entries,
    })
}

/// Forward-only prefix counter `P(y) = |F ∩ [0, y)|` over u64 runs.
struct EdgeU64<'a> {
    runs: &'a [(u64, u64)],
    idx: usize,
    acc: u64,
}

impl<'a> EdgeU64<'a> {
    fn new(runs: &'a [(u64, u64)]) -> Self {
        EdgeU64 {
            runs,
            idx: 0,
            acc: 0,
        }
    }

    #[inline]
    fn p(&mut self, y: u64) -> u64 {
        while self.idx < self.runs.len() && self.runs[self.idx].1 <= y {
            self.acc += self.runs[self.idx].1 - self.runs[self.idx].0;
            self.idx += 1;
        }
        if self.idx < self.runs.len() && self.runs[self.idx].0 < y {
            self.acc + (y - self.runs[self.idx].0)
        } else {
            self.acc
        }
    }
}

fn hist_walk_u64<T: LevelInt>(
    f: &LevelSet<T>,
    base: &LevelSet<T>,
    t: &BigUint,
) -> BTreeMap<BigUint, u64> {
    let f_runs: Vec<(u64, u64)> = f
        .runs()
        .iter()
        .map(|r| {
            let lo = r.lo.to_u64_checked().expect("wide lane guard");
            (lo, lo + r.len.to_u64_checked().expect("wide lane guard"))
        })
        .collect();
    let t = t.to_u64().expect("wide lane guard");
    let mut left = EdgeU64::new(&f_runs);
    let mut right = EdgeU64::new(&f_runs);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut pending: Option<(u64, u64)> = None;
    for r in base.runs() {
        let lo = r.lo.to_u64_checked().expect("wide lane guard");
        let hi = lo + r.len.to_u64_checked().expect("wide lane guard");
        for u in lo..hi {
            let v = right.p(u + t) - left.p(u);
            pending = match pending {
                Some((pv, c)) if pv == v => Some((pv, c + 1)),
                Some((pv, c)) => {
                    *counts.entry(pv).or_insert(0) += c;
                    Some((v, 1))
                }
                None => Some((v, 1)),
            };
        }
    }
    if let Some((pv, c)) = pending {
        *counts.entry(pv).or_insert(0) += c;
    }
    counts
        .into_iter()
        .map(|(v, c)| (BigUint::from(v), c))
        .collect()
}

/// Unbounded-scalar version of the histogram walk.
fn hist_walk_big<T: LevelInt>(
    f: &LevelSet<T>,
    base: &LevelSet<T>,
    t: &BigUint,
) -> BTreeMap<BigUint, u64> {
    let f_runs: Vec<(BigUint, BigUint)> = f
        .runs()
        .iter()
        .map(|r| {
            let lo = r.lo.to_biguint();
            let hi = &lo + r.len.to_biguint();
            (lo, hi)
        })
        .collect();
    struct Edge<'a> {
        runs: &'a [(BigUint, BigUint)],
        idx: usize,
        acc: BigUint,
    }
    impl<'a> Edge<'a> {
        fn p(&mut self, y: &BigUint) -> BigUint {
            while self.idx < self.runs.len() && &self.runs[self.idx].1 <= y {
                self.acc += &self.runs[self.idx].1 - &self.runs[self.idx].0;
                self.idx += 1;
            }
            if self.idx < self.runs.len() && &self.runs[self.idx].0 < y {
                &self.acc + (y - &self.runs[self.idx].0)
            } else {
                self.acc.clone()
            }
        }
    }
    let mut left = Edge {
        runs: &f_runs,
        idx: 0,
        acc: BigUint::zero(),
    };
    let mut right = Edge {
        runs: &f_runs,
        idx: 0,
        acc: BigUint::zero(),
    };
    let mut counts: BTreeMap<BigUint, u64> = BTreeMap::new();
    let mut pending: Option<(BigUint, u64)> = None;
    for r in base.runs() {
        let lo = r.lo.to_biguint();
        let hi = &lo + r.len.to_biguint();
        let mut u = lo;
        while u < hi {
            let shifted = &u + t;
            let v = right.p(&shifted) - left.p(&u);
            pending = match pending.take() {
                Some((pv, c)) if pv == v => Some((pv, c + 1)),
                Some((pv, c)) => {
                    *counts.entry(pv).or_insert(0) += c;
                    Some((v, 1))
                }
                None => Some((v, 1)),
            };
            u += 1u32;
        }
    }
    if let Some((pv, c)) = pending {
        *counts.entry(pv).or_insert(0) += c;
    }
    counts
}

/// `Σ v^β · measure(v)`: exact for integer β, an enclosure otherwise.
pub fn moment<T: LevelInt>(h: &BirkhoffHistogram<T>, beta: &Beta, bits: u32) -> Result<Value> {
    if beta.is_integer() {
        let p = beta.numer();
        let mut acc = BigUint::zero();
        for (v, c) in h.entries() {
            acc += v.to_biguint().pow(p) * *c;
        }
        return Ok(Value::Exact(BigRational::new(
            acc.into(),
            h.denom().clone().into(),
        )));
    }
    let mut total = crate::approx::Enclosure::exact(BigRational::zero(), bits);
    for (v, c) in h.entries() {
        let v_rat = BigRational::from_integer(v.to_biguint().into());
        let powered = match pow_value(&v_rat, beta, bits)? {
            Value::Exact(r) => crate::approx::Enclosure::exact(r, bits),
            Value::Approx(e) => e,
        };
        total = total.add(&powered.scale(&BigRational::from_integer((*c).into())));
    }
    let denom = BigRational::new(1.into(), h.denom().clone().into());
    Ok(Value::Approx(total.scale(&denom)))
}
