//! Normalizing sequences.
//!
//! The return-sequence normalizer `a_t` is driven by the position of `t`
//! inside the block structure of the enclosing stage: pick `n` with
//! `h_n ≤ t < h_{n+1}`, write `t = q·H_n + r` with `0 ≤ r < H_n`, and split
//! on where the remainder falls:
//!
//! * case 2 — `r < h_n`: refine `r = q′·H_{n−1} + r′` and add a stage-(n−1)
//!   correction,
//! * case 1 — `h_n ≤ r < H_n − h_n`: the remainder is absorbed by spacers,
//!   contributing a flat `ĥ_n/2`,
//! * case 3 — `r ≥ H_n − h_n`: count from the next multiple of `H_n`
//!   downward, with `H_n − r = q″·H_{n−1} + r″`.
//!
//! With `ℓ_n < 2h_n` the case-1 window `[h_n, H_n − h_n)` is empty and the
//! decomposition only ever produces cases 2 and 3. Cases 2 and 3 can overlap
//! when `ℓ_n < h_n` (possible for explicit debug families, never for
//! v-alpha); case 2 takes precedence so exactly one case is reported.
//!
//! The v-alpha family has `k_n = n + 1`, which makes the natural factor
//! `k_n·m_n` appear as `(n+1)·m_n`; the general `k_n·m_n` form is used here
//! so the formulas stay evaluable on explicit families.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::construction::{div_rem, Construction};
use crate::correlation::corr_sum;
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::scalar::LevelInt;
use crate::Measure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    One,
    Two,
    Three,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = match self {
            Case::One => 1,
            Case::Two => 2,
            Case::Three => 3,
        };
        write!(f, "{c}")
    }
}

/// `t = q·H_n + r` with the case split and the stage-(n−1) refinements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TDecomposition {
    pub t: BigUint,
    /// Stage with `h_n ≤ t < h_{n+1}`.
    pub n: usize,
    pub q: BigUint,
    pub r: BigUint,
    pub case: Case,
    /// Case 2: `r = q′·H_{n−1} + r′`.
    pub q1: Option<BigUint>,
    pub r1: Option<BigUint>,
    /// Case 3: `H_n − r = q″·H_{n−1} + r″`.
    pub q2: Option<BigUint>,
    pub r2: Option<BigUint>,
}

/// Decompose a time `t ≥ h_2` (the cases reference stage `n − 1 ≥ 1`).
pub fn decompose(ctx: &Construction, t: &BigUint) -> Result<TDecomposition> {
    if ctx.top_stage() < 2 {
        return Err(Error::Horizon {
            requested: 2,
            allowed: ctx.top_stage(),
        });
    }
    if t < ctx.h(2)? {
        return Err(Error::Invalid(format!(
            "t = {t} is below h_2 = {}; the normalizer is undefined there",
            ctx.h(2)?
        )));
    }
    let n = ctx.enclosing_stage(t)?;
    debug_assert!(n >= 2);
    let h_n = ctx.h(n)?;
    let big_h = ctx.big_h(n)?;
    let (q, r) = div_rem(t, &big_h);
    let big_h_prev = ctx.big_h(n - 1)?;

    let (case, q1, r1, q2, r2) = if &r < h_n {
        let (q1, r1) = div_rem(&r, &big_h_prev);
        (Case::Two, Some(q1), Some(r1), None, None)
    } else if &big_h - &r <= *h_n {
        let gap = &big_h - &r;
        let (q2, r2) = div_rem(&gap, &big_h_prev);
        (Case::Three, None, None, Some(q2), Some(r2))
    } else {
        (Case::One, None, None, None, None)
    };

    Ok(TDecomposition {
        t: t.clone(),
        n,
        q,
        r,
        case,
        q1,
        r1,
        q2,
        r2,
    })
}

fn ratio(n: BigUint, d: BigUint) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `1 − q / (2·k_n·m_n)`, the damping factor of the counting lemma.
fn lemma_factor(ctx: &Construction, n: usize, q: &BigUint) -> Result<BigRational> {
    let km2 = BigUint::from(2 * ctx.k(n)? * ctx.m(n)?);
    Ok(BigRational::one() - ratio(q.clone(), km2))
}

/// `q·ĥ_n·(1 − q/(2·k_n·m_n))`.
fn stage_term(ctx: &Construction, n: usize, q: &BigUint) -> Result<BigRational> {
    Ok(ratio(q * ctx.h_hat(n)?, BigUint::one()) * lemma_factor(ctx, n, q)?)
}

/// Evaluate the case formula for a precomputed decomposition.
pub fn a_hat_of(ctx: &Construction, d: &TDecomposition) -> Result<BigRational> {
    let n = d.n;
    match d.case {
        Case::One => {
            let main = stage_term(ctx, n, &d.q)?;
            Ok(main + ratio(ctx.h_hat(n)?.clone(), BigUint::from(2u32)))
        }
        Case::Two => {
            let main = stage_term(ctx, n, &d.q)?;
            let q1 = d.q1.as_ref().expect("case 2 carries q'");
            Ok(main + stage_term(ctx, n - 1, q1)?)
        }
        Case::Three => {
            // (q+1)·ĥ_n·(1 − q/(2·k_n·m_n))
            //   − q″·ĥ_{n−1}·(1 − q″/(2·k_{n−1}·m_{n−1}))·(1 − q/(k_n·m_n))
            let q_plus = &d.q + BigUint::one();
            let lead = ratio(&q_plus * ctx.h_hat(n)?, BigUint::one()) * lemma_factor(ctx, n, &d.q)?;
            let q2 = d.q2.as_ref().expect("case 3 carries q''");
            let km = BigUint::from(ctx.k(n)? * ctx.m(n)?);
            let damp = BigRational::one() - ratio(d.q.clone(), km);
            let sub = stage_term(ctx, n - 1, q2)? * damp;
            Ok(lead - sub)
        }
    }
}

/// The block-structured normalizer `a_t`, exactly. Defined for `t ≥ h_2`.
pub fn a_hat(ctx: &Construction, t: &BigUint) -> Result<BigRational> {
    let d = decompose(ctx, t)?;
    a_hat_of(ctx, &d)
}

/// `a_N(F) = Σ_{i<N} μ(F ∩ TⁱF) / μ(F)²` for an arbitrary finite-measure
/// level set `F` (the general normalizing sequence; with the canonical `F`
/// of measure 1 this is plain `corr_sum`).
pub fn a_of_f<T: LevelInt>(ctx: &Construction, f: &LevelSet<T>, n: &BigUint) -> Result<Measure> {
    let mu = f.measure(ctx)?;
    if mu.is_zero() {
        return Err(Error::Invalid(
            "a_N(F) needs a set of positive measure".into(),
        ));
    }
    Ok(corr_sum(ctx, f, f, n)? / (&mu * &mu))
}

/// `b_N^n = Σ_{i<N} [μ(F ∩ Tⁱ G) + μ(G ∩ Tⁱ F)]` with `G = F ∩ C_n(k_n−1)`,
/// the correlation mass carried by the last subcolumn.
pub fn b_term<T: LevelInt>(ctx: &Construction, n: usize, t: &BigUint) -> Result<Measure> {
    if n > ctx.n_max() {
        return Err(Error::Horizon {
            requested: n,
            allowed: ctx.n_max(),
        });
    }
    let f = LevelSet::<T>::f_set(ctx, n + 1)?;
    let last = LevelSet::<T>::subcolumn(ctx, n, ctx.k(n)? - 1)?;
    let g = f.intersect(ctx, &last)?;
    Ok(corr_sum(ctx, &f, &g, t)? + corr_sum(ctx, &g, &f, t)?)
}
