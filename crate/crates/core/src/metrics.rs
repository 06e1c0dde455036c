//! Headline ergodic-theory quantities.
//!
//! * [`wre_ratio`] — the weak-rational-ergodicity check: how close
//!   `Σ_{i<t} μ(A ∩ TⁱB) / a_t` is to `μ(A)·μ(B)` for `A, B ⊆ F`.
//! * [`beta_ratio`] — the β-rational-ergodicity functional
//!   `(∫_base S_t dμ)^β / ∫_base S_t^β dμ`.
//! * [`holder_check`] — the Hölder inequality
//!   `(∫ S)^β ≤ (∫ S^β)·μ(base)^{β−1}` as a nonnegative-slack test.
//! * [`independence_check`] — exact product-law verification for the sets
//!   `C_N ∩ C_n(k_n−1)` under the normalized measure on `C_N`.
//! * [`closing_bound`] — the closing upper bound
//!   `2^{2β} / (⌊n^α⌋^β/(n+1) · (1−δ)² · (1 − 5δ − 2⌊n^α⌋/m_n))`.
//!
//! Every quantity is an exact rational unless a non-integer power is
//! involved, in which case it is a directed-rounding enclosure
//! ([`Value::Approx`]); floats appear only when rendering.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::approx::{pow_value, pow_value_frac, Value};
use crate::construction::Construction;
use crate::correlation::{birkhoff_hist, corr_sum, moment};
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::normalizers::{a_hat_of, decompose, TDecomposition};
use crate::params::{Alpha, Beta};
use crate::scalar::LevelInt;
use crate::Measure;

/// One row of the weak-rational-ergodicity table.
#[derive(Debug, Clone, PartialEq)]
pub struct WreRow {
    pub decomposition: TDecomposition,
    pub corr_sum: Measure,
    pub a_t: Measure,
    /// `corr_sum / a_t`, exact (both operands are rational).
    pub ratio: Measure,
    /// `μ(A)·μ(B)`.
    pub target: Measure,
    /// `|ratio − target|`.
    pub residual: Measure,
}

/// Evaluate the weak-rational-ergodicity ratio at one time `t ≥ h_2`.
pub fn wre_ratio<T: LevelInt>(
    ctx: &Construction,
    a: &LevelSet<T>,
    b: &LevelSet<T>,
    t: &BigUint,
) -> Result<WreRow> {
    let f = LevelSet::<T>::f_set(ctx, a.stage().max(b.stage()))?;
    if !a.is_subset_of(ctx, &f)? || !b.is_subset_of(ctx, &f)? {
        return Err(Error::NotInF);
    }
    let decomposition = decompose(ctx, t)?;
    let a_t = a_hat_of(ctx, &decomposition)?;
    let cs = corr_sum(ctx, a, b, t)?;
    let target = a.measure(ctx)? * b.measure(ctx)?;
    let ratio = &cs / &a_t;
    let residual = (&ratio - &target).abs();
    Ok(WreRow {
        decomposition,
        corr_sum: cs,
        a_t,
        ratio,
        target,
        residual,
    })
}

/// One row of the β-rational-ergodicity table.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaRow {
    pub t: BigUint,
    pub beta: Beta,
    /// `(∫_base S_t dμ)^β = corr_sum(F, base, t)^β`.
    pub numerator: Value,
    /// `∫_base S_t^β dμ`.
    pub denominator: Value,
    /// Their quotient; in `(0, μ(base)^{β−1}]` by Hölder.
    pub r: Value,
}

/// The β-rational-ergodicity functional for `base ⊆ F` and window `t ≥ 1`.
pub fn beta_ratio<T: LevelInt>(
    ctx: &Construction,
    base: &LevelSet<T>,
    t: &BigUint,
    beta: &Beta,
    bits: u32,
) -> Result<BetaRow> {
    if t.is_zero() {
        return Err(Error::Invalid("beta ratio needs a window t >= 1".into()));
    }
    if base.is_empty() {
        return Err(Error::Invalid(
            "beta ratio needs a base of positive measure".into(),
        ));
    }
    let hist = birkhoff_hist(ctx, base, t)?; // checks base ⊆ F
    let f = LevelSet::<T>::f_set(ctx, base.stage())?;
    let integral = corr_sum(ctx, &f, base, t)?;
    let numerator = pow_value(&integral, beta, bits)?;
    let denominator = moment(&hist, beta, bits)?;
    let r = numerator.div(&denominator);
    Ok(BetaRow {
        t: t.clone(),
        beta: *beta,
        numerator,
        denominator,
        r,
    })
}

/// Result of the Hölder-slack test.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    /// `(∫_base S_t dμ)^β`.
    pub lhs: Value,
    /// `(∫_base S_t^β dμ)·μ(base)^{β−1}`.
    pub rhs: Value,
    /// `rhs − lhs ≥ 0`.
    pub slack: Value,
    /// Whether the inequality is verified: exact sign for integer β; for
    /// enclosures this reports "not definitely violated".
    pub holds: bool,
}

/// Check `(∫ S)^β ≤ (∫ S^β)·μ(base)^{β−1}` with explicit slack.
pub fn holder_check<T: LevelInt>(
    ctx: &Construction,
    base: &LevelSet<T>,
    t: &BigUint,
    beta: &Beta,
    bits: u32,
) -> Result<HolderReport> {
    if beta.is_one() {
        return Err(Error::BadBeta("holder check needs beta > 1".into()));
    }
    let row = beta_ratio(ctx, base, t, beta, bits)?;
    let mu = base.measure(ctx)?;
    // μ^{β−1} with β − 1 = (p − q)/q, a nonnegative rational below the
    // Beta domain, hence the raw fractional power.
    let mu_pow = pow_value_frac(&mu, beta.numer() - beta.denom(), beta.denom(), bits)?;
    let rhs = row.denominator.mul(&mu_pow);
    let slack = rhs.sub(&row.numerator);
    let holds = if beta.is_integer() {
        slack.is_nonneg()
    } else {
        slack.may_be_nonneg()
    };
    Ok(HolderReport {
        lhs: row.numerator,
        rhs,
        slack,
        holds,
    })
}

/// Exact independence data for `E_n = C_N ∩ C_n(k_n−1)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub n_base: usize,
    pub n1: usize,
    pub n2: usize,
    /// `μ_N(E_{n1})`, `μ_N(E_{n2})`, `μ_N(E_{n1} ∩ E_{n2})` under the
    /// normalized measure `μ/μ(C_N)`.
    pub mu1: Measure,
    pub mu2: Measure,
    pub joint: Measure,
    pub product: Measure,
    /// `joint == mu1·mu2`, exactly.
    pub product_law: bool,
    /// `mu_i == 1/k_{n_i}`, exactly.
    pub matches_inv_k: bool,
}

/// Verify the product law for one stage pair `N < n1 < n2 ≤ n_max`.
pub fn independence_check<T: LevelInt>(
    ctx: &Construction,
    n_base: usize,
    n1: usize,
    n2: usize,
) -> Result<IndependenceReport> {
    if !(n_base < n1 && n1 < n2) {
        return Err(Error::StageOrder(format!(
            "need N < n < n' (got {n_base}, {n1}, {n2})"
        )));
    }
    let stage = n2 + 1;
    let c_base = LevelSet::<T>::column(ctx, n_base)?.refine(ctx, stage)?;
    let e1 = LevelSet::<T>::subcolumn(ctx, n1, ctx.k(n1)? - 1)?
        .refine(ctx, stage)?
        .intersect(ctx, &c_base)?;
    let e2 = LevelSet::<T>::subcolumn(ctx, n2, ctx.k(n2)? - 1)?.intersect(ctx, &c_base)?;
    let mu_base = c_base.measure(ctx)?;
    let mu1 = e1.measure(ctx)? / &mu_base;
    let mu2 = e2.measure(ctx)? / &mu_base;
    let joint = e1.intersect(ctx, &e2)?.measure(ctx)? / &mu_base;
    let product = &mu1 * &mu2;
    let inv = |n: usize| -> Result<Measure> {
        Ok(BigRational::new(BigInt::one(), BigInt::from(ctx.k(n)?)))
    };
    let matches_inv_k = mu1 == inv(n1)? && mu2 == inv(n2)?;
    Ok(IndependenceReport {
        n_base,
        n1,
        n2,
        product_law: joint == product,
        mu1,
        mu2,
        joint,
        product,
        matches_inv_k,
    })
}

/// The closing bound `2^{2β} / (⌊n^α⌋^β/(n+1) · (1−δ)² · (1 − 5δ − 2⌊n^α⌋/m_n))`
/// under the `μ(F) = 1` normalization. `δ ∈ [0, 1/10]`; errors when the last
/// factor is not positive.
pub fn closing_bound(
    n: u64,
    alpha: Alpha,
    beta: &Beta,
    m_n: &BigUint,
    delta: &Measure,
    bits: u32,
) -> Result<Value> {
    let tenth = BigRational::new(1.into(), 10.into());
    if delta.is_negative() || delta > &tenth {
        return Err(Error::Invalid(format!(
            "delta must lie in [0, 1/10], got {delta}"
        )));
    }
    let fa = alpha.floor_pow(n);
    if fa.is_zero() {
        return Err(Error::BoundInapplicable(format!(
            "floor(n^alpha) = 0 at n = {n}"
        )));
    }
    let sign_term = BigRational::one()
        - delta * BigRational::from_integer(5.into())
        - BigRational::new(BigInt::from(&fa * 2u32), BigInt::from(m_n.clone()));
    if !sign_term.is_positive() {
        return Err(Error::BoundInapplicable(format!(
            "1 − 5δ − 2⌊n^α⌋/m_n = {sign_term} ≤ 0 at n = {n}"
        )));
    }
    // 2^{2β}
    let two = BigRational::from_integer(2.into());
    let numerator = pow_value_frac(&two, 2 * beta.numer(), beta.denom(), bits)?;
    // ⌊n^α⌋^β / (n+1)
    let fa_rat = BigRational::from_integer(BigInt::from(fa));
    let fa_pow = pow_value(&fa_rat, beta, bits)?;
    let over_n = BigRational::new(BigInt::one(), BigInt::from(n + 1));
    let one_minus_delta = BigRational::one() - delta;
    let scale = over_n * (&one_minus_delta * &one_minus_delta) * sign_term;
    let denominator = fa_pow.mul(&Value::Exact(scale));
    Ok(numerator.div(&denominator))
}
