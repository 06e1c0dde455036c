//! Run-encoded level sets.
//!
//! Every set this crate manipulates — the original-mass set `F`, subcolumns,
//! spacer complements, the `D_n` sets — is a union of full levels of some
//! stage's column, so a set is stored as its stage plus a sorted list of
//! disjoint, non-adjacent runs `[lo, lo+len)` of level indices. The run list
//! is normalized on construction and every operation preserves the
//! invariants:
//!
//! * runs lie inside `[0, h_stage)`,
//! * runs are sorted, pairwise disjoint, and never adjacent,
//! * all runs are nonempty.
//!
//! Refining a set to a later stage replaces each run by one copy per
//! embedding offset; the measure (run lengths over `ĥ_stage`) is preserved
//! exactly. Binary operations align their operands to a common stage first.

use std::borrow::Cow;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;

use crate::construction::Construction;
use crate::error::{Error, Result};
use crate::scalar::LevelInt;
use crate::Measure;

/// A half-open run of level indices `[lo, lo + len)`, `len > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run<T> {
    pub lo: T,
    pub len: T,
}

impl<T: LevelInt> Run<T> {
    pub fn end(&self) -> T {
        self.lo.clone() + &self.len
    }
}

/// A measurable set as a union of full levels at a fixed stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSet<T: LevelInt> {
    stage: usize,
    runs: Vec<Run<T>>,
}

/// Append a run, coalescing with the previous one when flush.
fn push_run<T: LevelInt>(out: &mut Vec<Run<T>>, lo: T, len: T) {
    if len.is_zero() {
        return;
    }
    if let Some(last) = out.last_mut() {
        debug_assert!(last.end() <= lo);
        if last.end() == lo {
            last.len = last.len.clone() + &len;
            return;
        }
    }
    out.push(Run { lo, len });
}

impl<T: LevelInt> LevelSet<T> {
    pub fn empty(stage: usize) -> Self {
        LevelSet {
            stage,
            runs: Vec::new(),
        }
    }

    /// The whole column `[0, h_stage)` as a set.
    pub fn column(ctx: &Construction, stage: usize) -> Result<Self> {
        let h = ctx.h(stage)?;
        let h = T::from_biguint(h).ok_or(Error::Capacity { stage })?;
        Ok(LevelSet {
            stage,
            runs: vec![Run {
                lo: T::zero(),
                len: h,
            }],
        })
    }

    /// Build from arbitrary `[lo, hi)` intervals; overlapping or adjacent
    /// intervals are unioned, out-of-range intervals are rejected.
    pub fn from_intervals(
        ctx: &Construction,
        stage: usize,
        intervals: impl IntoIterator<Item = (T, T)>,
    ) -> Result<Self> {
        let h_big = ctx.h(stage)?.clone();
        let mut ivs: Vec<(T, T)> = intervals.into_iter().filter(|(lo, hi)| hi > lo).collect();
        ivs.sort();
        let mut runs: Vec<Run<T>> = Vec::with_capacity(ivs.len());
        for (lo, hi) in ivs {
            if hi.to_biguint() > h_big {
                return Err(Error::IndexRange {
                    index: hi.to_string(),
                    bound: h_big.to_string(),
                });
            }
            match runs.last_mut() {
                Some(last) if last.end() >= lo => {
                    let end = last.end();
                    if hi > end {
                        last.len = last.len.clone() + &(hi - &end);
                    }
                }
                _ => runs.push(Run { len: hi - &lo, lo }),
            }
        }
        Ok(LevelSet { stage, runs })
    }

    /// Build from single levels (test and oracle plumbing).
    pub fn from_levels(
        ctx: &Construction,
        stage: usize,
        levels: impl IntoIterator<Item = T>,
    ) -> Result<Self> {
        Self::from_intervals(
            ctx,
            stage,
            levels.into_iter().map(|l| {
                let hi = l.clone() + &T::one();
                (l, hi)
            }),
        )
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn runs(&self) -> &[Run<T>] {
        &self.runs
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Number of levels in the set, exactly.
    pub fn level_count(&self) -> BigUint {
        let mut total = BigUint::zero();
        for r in &self.runs {
            total += r.len.to_biguint();
        }
        total
    }

    /// Largest level index, if nonempty.
    pub fn max_level(&self) -> Option<T> {
        self.runs.last().map(|r| r.end() - &T::one())
    }

    /// μ(self) = level count / ĥ_stage, exactly.
    pub fn measure(&self, ctx: &Construction) -> Result<Measure> {
        let h_hat = ctx.h_hat(self.stage)?;
        Ok(BigRational::new(
            self.level_count().into(),
            h_hat.clone().into(),
        ))
    }

    /// Largest level index the set would have after refining to `target`,
    /// computed without materializing the refinement.
    pub fn max_level_at(&self, ctx: &Construction, target: usize) -> Result<Option<BigUint>> {
        if target < self.stage {
            return Err(Error::StageOrder(format!(
                "target stage {target} below set stage {}",
                self.stage
            )));
        }
        let Some(max) = self.max_level() else {
            return Ok(None);
        };
        let mut max = max.to_biguint();
        for s in self.stage..target {
            let e = ctx.embedding(s)?;
            max += e.offsets.last().expect("k·m >= 2 copies");
        }
        Ok(Some(max))
    }

    /// Express the same measurable set at a later stage.
    pub fn refine(&self, ctx: &Construction, target: usize) -> Result<Self> {
        if target < self.stage {
            return Err(Error::StageOrder(format!(
                "cannot refine stage {} down to {target}",
                self.stage
            )));
        }
        if target > ctx.top_stage() {
            return Err(Error::Horizon {
                requested: target,
                allowed: ctx.top_stage(),
            });
        }
        let mut cur = Cow::Borrowed(self);
        for s in self.stage..target {
            let emb = ctx.embedding(s)?;
            let mut out: Vec<Run<T>> = Vec::with_capacity(emb.copies() * cur.runs.len());
            for o in &emb.offsets {
                let o = T::from_biguint(o).ok_or(Error::Capacity { stage: s + 1 })?;
                for r in &cur.runs {
                    push_run(&mut out, o.clone() + &r.lo, r.len.clone());
                }
            }
            cur = Cow::Owned(LevelSet {
                stage: s + 1,
                runs: out,
            });
        }
        Ok(cur.into_owned())
    }

    fn aligned<'a>(
        ctx: &Construction,
        a: &'a Self,
        b: &'a Self,
    ) -> Result<(Cow<'a, Self>, Cow<'a, Self>)> {
        let stage = a.stage.max(b.stage);
        let a = if a.stage == stage {
            Cow::Borrowed(a)
        } else {
            Cow::Owned(a.refine(ctx, stage)?)
        };
        let b = if b.stage == stage {
            Cow::Borrowed(b)
        } else {
            Cow::Owned(b.refine(ctx, stage)?)
        };
        Ok((a, b))
    }

    pub fn intersect(&self, ctx: &Construction, other: &Self) -> Result<Self> {
        let (a, b) = Self::aligned(ctx, self, other)?;
        let (ar, br) = (&a.runs, &b.runs);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < ar.len() && j < br.len() {
            let a_end = ar[i].end();
            let b_end = br[j].end();
            let lo = ar[i].lo.clone().max(br[j].lo.clone());
            let hi = a_end.clone().min(b_end.clone());
            if hi > lo {
                push_run(&mut out, lo.clone(), hi.clone() - &lo);
            }
            if a_end <= b_end {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(LevelSet {
            stage: a.stage,
            runs: out,
        })
    }

    pub fn union(&self, ctx: &Construction, other: &Self) -> Result<Self> {
        let (a, b) = Self::aligned(ctx, self, other)?;
        let mut out: Vec<Run<T>> = Vec::with_capacity(a.runs.len() + b.runs.len());
        let (mut i, mut j) = (0, 0);
        while i < a.runs.len() || j < b.runs.len() {
            let take_a = match (a.runs.get(i), b.runs.get(j)) {
                (Some(ra), Some(rb)) => ra.lo <= rb.lo,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => unreachable!(),
            };
            let r = if take_a {
                i += 1;
                &a.runs[i - 1]
            } else {
                j += 1;
                &b.runs[j - 1]
            };
            match out.last_mut() {
                Some(last) if last.end() >= r.lo => {
                    let end = last.end();
                    let r_end = r.end();
                    if r_end > end {
                        last.len = last.len.clone() + &(r_end - &end);
                    }
                }
                _ => out.push(r.clone()),
            }
        }
        Ok(LevelSet {
            stage: a.stage,
            runs: out,
        })
    }

    /// `self \ other`.
    pub fn difference(&self, ctx: &Construction, other: &Self) -> Result<Self> {
        let (a, b) = Self::aligned(ctx, self, other)?;
        let mut out = Vec::new();
        let mut j = 0;
        for ra in &a.runs {
            let mut lo = ra.lo.clone();
            let end = ra.end();
            while j < b.runs.len() && b.runs[j].end() <= lo {
                j += 1;
            }
            let mut jj = j;
            while jj < b.runs.len() && b.runs[jj].lo < end {
                let rb = &b.runs[jj];
                if rb.lo > lo {
                    push_run(&mut out, lo.clone(), rb.lo.clone() - &lo);
                }
                let b_end = rb.end();
                if b_end >= end {
                    lo = end.clone();
                    break;
                }
                lo = b_end;
                jj += 1;
            }
            if lo < end {
                push_run(&mut out, lo.clone(), end - &lo);
            }
        }
        Ok(LevelSet {
            stage: a.stage,
            runs: out,
        })
    }

    /// Complement within an ambient set: `ambient \ self`.
    pub fn complement_in(&self, ctx: &Construction, ambient: &Self) -> Result<Self> {
        ambient.difference(ctx, self)
    }

    /// Complement within the whole column at this set's stage.
    pub fn complement_in_column(&self, ctx: &Construction) -> Result<Self> {
        LevelSet::column(ctx, self.stage)?.difference(ctx, self)
    }

    pub fn is_subset_of(&self, ctx: &Construction, other: &Self) -> Result<bool> {
        let inter = self.intersect(ctx, other)?;
        Ok(inter.level_count() == self.level_count())
    }

    /// Equality as measurable sets (alignment-insensitive).
    pub fn eq_as_sets(&self, ctx: &Construction, other: &Self) -> Result<bool> {
        let (a, b) = Self::aligned(ctx, self, other)?;
        Ok(a.runs == b.runs)
    }

    /// The set `F` of original-interval levels at stage `n` (n ≤ n_max + 1):
    /// `F_0 = {[0,1)}` and `F_{n+1} = ⋃_offsets (o + F_n)`. Its measure is 1
    /// at every stage by the `μ(I_0) = 1` normalization.
    pub fn f_set(ctx: &Construction, n: usize) -> Result<Self> {
        LevelSet {
            stage: 0,
            runs: vec![Run {
                lo: T::zero(),
                len: T::one(),
            }],
        }
        .refine(ctx, n)
    }

    /// The `i`-th subcolumn `C_n(i)` of stage `n`, expressed at stage `n+1`.
    pub fn subcolumn(ctx: &Construction, n: usize, i: u64) -> Result<Self> {
        let k = ctx.k(n)?;
        let m = ctx.m(n)?;
        if i >= k {
            return Err(Error::IndexRange {
                index: i.to_string(),
                bound: k.to_string(),
            });
        }
        let stage = n + 1;
        let h_big = ctx.h(n)?;
        let big_h_big = ctx.big_h(n)?;
        let h = T::from_biguint(h_big).ok_or(Error::Capacity { stage })?;
        let conv = |v: BigUint| T::from_biguint(&v).ok_or(Error::Capacity { stage });
        let mut runs = Vec::new();
        if i < k - 1 {
            // Copy j of this subcolumn sits at block (j·(k−1) + i) of the ladder.
            for j in 0..m {
                let block = j as u128 * (k - 1) as u128 + i as u128;
                let lo = conv(&big_h_big * BigUint::from(block))?;
                push_run(&mut runs, lo, h.clone());
            }
        } else {
            let base = big_h_big * BigUint::from(m as u128 * (k - 1) as u128);
            for j in 0..m {
                let lo = conv(&base + h_big * j)?;
                push_run(&mut runs, lo, h.clone());
            }
        }
        Ok(LevelSet { stage, runs })
    }

    /// The tail union `D_n = ⋃_{j=⌊n^α⌋}^{m_n−1} C_n(k_n−1, j)` of the last
    /// subcolumn's secondary cuts, at stage `n+1`. Empty when ⌊n^α⌋ ≥ m_n.
    pub fn d_set(ctx: &Construction, n: usize) -> Result<Self> {
        let fa = ctx.params().floor_alpha(n)?.clone();
        if n < 1 {
            return Err(Error::StageOrder("D_n needs n >= 1".into()));
        }
        let k = ctx.k(n)?;
        let m = ctx.m(n)?;
        let stage = n + 1;
        let Some(fa) = fa.to_u64_checked() else {
            return Ok(LevelSet::empty(stage)); // ⌊n^α⌋ beyond any m_n
        };
        if fa >= m {
            return Ok(LevelSet::empty(stage));
        }
        let h_big = ctx.h(n)?;
        // the tail cuts j = ⌊n^α⌋ .. m−1 are flush, so they form one run
        let lo = ctx.big_h(n)? * BigUint::from(m as u128 * (k - 1) as u128) + h_big * fa;
        let lo = T::from_biguint(&lo).ok_or(Error::Capacity { stage })?;
        let len = T::from_biguint(&(h_big * (m - fa))).ok_or(Error::Capacity { stage })?;
        Ok(LevelSet {
            stage,
            runs: vec![Run { lo, len }],
        })
    }

    /// Parse the set-literal format `stage:lo-hi,lo-hi,...` (half-open,
    /// decimal, unbounded).
    pub fn parse_literal(ctx: &Construction, s: &str) -> Result<Self> {
        let (stage, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Invalid(format!("set literal needs 'stage:runs', got {s:?}")))?;
        let stage: usize = stage
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad stage in set literal {s:?}")))?;
        let mut intervals = Vec::new();
        for part in rest.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (lo, hi) = part
                .split_once('-')
                .ok_or_else(|| Error::Invalid(format!("bad run {part:?} in set literal")))?;
            let lo: BigUint = lo
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad run bound {lo:?}")))?;
            let hi: BigUint = hi
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad run bound {hi:?}")))?;
            let lo = T::from_biguint(&lo).ok_or(Error::Capacity { stage })?;
            let hi = T::from_biguint(&hi).ok_or(Error::Capacity { stage })?;
            intervals.push((lo, hi));
        }
        Self::from_intervals(ctx, stage, intervals)
    }

    /// Render in the set-literal format.
    pub fn to_literal(&self) -> String {
        let runs = self
            .runs
            .iter()
            .map(|r| format!("{}-{}", r.lo, r.end()))
            .collect::<Vec<_>>()
            .join(",");
        format!("{}:{}", self.stage, runs)
    }

    /// Enumerate levels as `u64` (oracle-scale sets only).
    pub fn levels_u64(&self) -> Option<Vec<u64>> {
        let mut out = Vec::new();
        for r in &self.runs {
            let lo = r.lo.to_u64_checked()?;
            let len = r.len.to_u64_checked()?;
            out.extend(lo..lo + len);
        }
        Some(out)
    }

    /// Convert the run list to a different scalar.
    pub fn convert<U: LevelInt>(&self) -> Result<LevelSet<U>> {
        let mut runs = Vec::with_capacity(self.runs.len());
        for r in &self.runs {
            let lo =
                U::from_biguint(&r.lo.to_biguint()).ok_or(Error::Capacity { stage: self.stage })?;
            let len = U::from_biguint(&r.len.to_biguint())
                .ok_or(Error::Capacity { stage: self.stage })?;
            runs.push(Run { lo, len });
        }
        Ok(LevelSet {
            stage: self.stage,
            runs,
        })
    }

    /// Check the normalization invariants (test support).
    pub fn check_invariants(&self, ctx: &Construction) -> Result<()> {
        let h = ctx.h(self.stage)?.clone();
        let mut prev_end: Option<T> = None;
        for r in &self.runs {
            if r.len.is_zero() {
                return Err(Error::Invalid("empty run".into()));
            }
            if let Some(p) = &prev_end {
                if &r.lo <= p {
                    return Err(Error::Invalid(
                        "runs unsorted, overlapping or adjacent".into(),
                    ));
                }
            }
            prev_end = Some(r.end());
        }
        if let Some(p) = prev_end {
            if p.to_biguint() > h {
                return Err(Error::Invalid("run beyond column height".into()));
            }
        }
        Ok(())
    }
}
