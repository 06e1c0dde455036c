//! Exact tower geometry.
//!
//! Stage n + 1 is built from stage n by cutting the column `C_n` (height
//! `h_n`) into `k_n` subcolumns, putting `ℓ_n` spacers on top of each of the
//! first `k_n − 1`, stacking those into one tall subcolumn, cutting both the
//! tall subcolumn and the untouched last subcolumn into `m_n` pieces,
//! stacking the short pile on top of the tall one, and finally adding as
//! many spacers on top as the column already has levels. Hence
//!
//! ```text
//! h_{n+1} = 2·m_n·(h_n + ℓ_n)·(k_n − 1) + 2·m_n·h_n ,       h_0 = 1,
//! ```
//!
//! the top half of every column is pure spacer, and `C_{n+1}` contains
//! exactly `k_n·m_n` full copies of `C_n`, so the induced (spacer-free)
//! height obeys `ĥ_{n+1} = k_n·m_n·ĥ_n`. Measures are normalized so that the
//! original interval has total mass 1, i.e. every level has width `1/ĥ_n`.
//!
//! All stages are computed eagerly at construction; a [`Construction`] is
//! immutable afterwards and safe to share across threads.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::params::{FamilySpec, ParamSeq};

/// Exact geometry of one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageGeometry {
    pub n: usize,
    /// Column height `h_n`.
    pub h: BigUint,
    /// Block height `H_n = h_n + ℓ_n`; undefined at the final stage
    /// `n_max + 1` where no ℓ exists.
    pub big_h: Option<BigUint>,
    /// Induced height `ĥ_n` (number of non-spacer levels).
    pub h_hat: BigUint,
    /// Width of a level, `1/ĥ_n`, under the normalization `μ(I_0) = 1`.
    pub base_width: BigRational,
    /// Number of spacer levels, `h_n − ĥ_n`.
    pub spacer_levels: BigUint,
}

/// Base levels of the `k_n·m_n` copies of `C_n` inside `C_{n+1}`.
///
/// The first `m_n·(k_n − 1)` copies sit at multiples of `H_n` (each copy is
/// followed by its ℓ_n spacers); the last `m_n` copies are stacked flush at
/// spacing `h_n`. Offsets are strictly increasing and all copies lie in the
/// bottom, non-spacer half of `C_{n+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingMap {
    pub n: usize,
    pub offsets: Vec<BigUint>,
}

impl EmbeddingMap {
    pub fn copies(&self) -> usize {
        self.offsets.len()
    }
}

/// A validated family together with its fully computed stage geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Construction {
    params: ParamSeq,
    /// h_n for n = 0 ..= n_max + 1.
    h: Vec<BigUint>,
    /// ĥ_n for n = 0 ..= n_max + 1.
    h_hat: Vec<BigUint>,
}

impl Construction {
    /// Validate a family spec and run the geometry recurrences through
    /// stage `n_max + 1`.
    pub fn new(spec: FamilySpec) -> Result<Self> {
        let mut params = match &spec {
            FamilySpec::Explicit { k, ell, m } => {
                ParamSeq::from_explicit(k.clone(), ell.clone(), m.clone())?
            }
            FamilySpec::VAlpha { .. } => ParamSeq::valpha_skeleton(&spec)?,
        };
        let n_max = params.n_max;

        let mut h: Vec<BigUint> = vec![BigUint::one()];
        let mut h_hat: Vec<BigUint> = vec![BigUint::one()];
        for n in 0..=n_max {
            // v-alpha ℓ_n depends on h_n, so it is realized here.
            if n >= 1 {
                if let Some(fa) = &params.floor_alpha {
                    params.ell[n] = &fa[n] * &h[n];
                }
            }
            let k = BigUint::from(params.k[n]);
            let m = BigUint::from(params.m[n]);
            let big_h = &h[n] + &params.ell[n];
            let half = &m * &big_h * (&k - 1u32) + &m * &h[n];
            h.push(&half * 2u32);
            h_hat.push(&k * &m * &h_hat[n]);
        }

        Ok(Construction { params, h, h_hat })
    }

    /// Convenience constructor for explicit sequences.
    pub fn explicit(k: Vec<u64>, ell: Vec<u64>, m: Vec<u64>) -> Result<Self> {
        Construction::new(FamilySpec::Explicit {
            k,
            ell: ell.into_iter().map(BigUint::from).collect(),
            m,
        })
    }

    pub fn params(&self) -> &ParamSeq {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.params.n_max
    }

    /// Largest stage with a defined height, `n_max + 1`.
    pub fn top_stage(&self) -> usize {
        self.params.n_max + 1
    }

    pub fn h(&self, n: usize) -> Result<&BigUint> {
        self.h.get(n).ok_or(Error::Horizon {
            requested: n,
            allowed: self.top_stage(),
        })
    }

    pub fn h_hat(&self, n: usize) -> Result<&BigUint> {
        self.h_hat.get(n).ok_or(Error::Horizon {
            requested: n,
            allowed: self.top_stage(),
        })
    }

    /// `H_n = h_n + ℓ_n`, defined for n ≤ n_max.
    pub fn big_h(&self, n: usize) -> Result<BigUint> {
        Ok(self.h(n)? + self.params.ell(n)?)
    }

    pub fn k(&self, n: usize) -> Result<u64> {
        self.params.k(n)
    }

    pub fn ell(&self, n: usize) -> Result<&BigUint> {
        self.params.ell(n)
    }

    pub fn m(&self, n: usize) -> Result<u64> {
        self.params.m(n)
    }

    /// Assemble the full geometry view of a stage (n ≤ n_max + 1).
    pub fn geometry(&self, n: usize) -> Result<StageGeometry> {
        let h = self.h(n)?.clone();
        let h_hat = self.h_hat(n)?.clone();
        let big_h = if n <= self.n_max() {
            Some(self.big_h(n)?)
        } else {
            None
        };
        Ok(StageGeometry {
            n,
            spacer_levels: &h - &h_hat,
            base_width: BigRational::new(1.into(), h_hat.clone().into()),
            h,
            big_h,
            h_hat,
        })
    }

    /// The embedding of stage-n copies into stage n + 1 (n ≤ n_max).
    pub fn embedding(&self, n: usize) -> Result<EmbeddingMap> {
        if n > self.n_max() {
            return Err(Error::Horizon {
                requested: n,
                allowed: self.n_max(),
            });
        }
        let k = self.params.k[n];
        let m = self.params.m[n];
        let h = &self.h[n];
        let big_h = self.big_h(n)?;

        let copies = usize::try_from(k as u128 * m as u128).unwrap_or(usize::MAX);
        let mut offsets = Vec::with_capacity(copies.min(1 << 24));
        let ladder = m as u128 * (k - 1) as u128;
        let mut at = BigUint::ZERO;
        for _ in 0..ladder {
            offsets.push(at.clone());
            at += &big_h;
        }
        for _ in 0..m {
            offsets.push(at.clone());
            at += h;
        }
        // `at` now ends exactly at the half height: the copies tile the
        // bottom half and the top half is pure spacer.
        debug_assert_eq!(&at * 2u32, self.h[n + 1]);
        Ok(EmbeddingMap { n, offsets })
    }

    /// Stage index n with `h_n ≤ t < h_{n+1}`.
    pub(crate) fn enclosing_stage(&self, t: &BigUint) -> Result<usize> {
        if t < &self.h[0] {
            return Err(Error::Invalid(format!("t = {t} is below h_0 = 1")));
        }
        match self.h.iter().position(|h| h > t) {
            Some(p) => Ok(p - 1),
            None => Err(Error::Horizon {
                requested: self.top_stage() + 1,
                allowed: self.top_stage(),
            }),
        }
    }
}

/// Division helper: `(q, r)` with `a = q·b + r`, `0 ≤ r < b`.
pub(crate) fn div_rem(a: &BigUint, b: &BigUint) -> (BigUint, BigUint) {
    a.div_rem(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Alpha, MRule};

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

    #[test]
    fn p221_heights() {
        let c = p221();
        assert_eq!(c.h(0).unwrap(), &BigUint::from(1u32));
        // h_1 = 2·1·(1+1)·(2−1) + 2·1·1 = 6
        assert_eq!(c.h(1).unwrap(), &BigUint::from(6u32));
        assert_eq!(c.h(2).unwrap(), &BigUint::from(26u32));
        assert_eq!(c.h_hat(2).unwrap(), &BigUint::from(4u32));
        assert_eq!(c.big_h(1).unwrap(), BigUint::from(7u32));
        assert_eq!(c.h(3).unwrap(), &BigUint::from(106u32));
    }

    #[test]
    fn va_realizes_family_rule() {
        let c = va();
        let p = c.params();
        assert_eq!(p.k, vec![2, 2, 3, 4, 5, 6]);
        assert_eq!(p.m, vec![1, 1, 4, 9, 16, 25]);
        // ℓ_1 = ⌊1^(1/2)⌋·h_1 = h_1
        assert_eq!(p.ell(1).unwrap(), c.h(1).unwrap());
        assert_eq!(c.h(1).unwrap(), &BigUint::from(4u32));
        assert_eq!(c.h(2).unwrap(), &BigUint::from(24u32));
        assert_eq!(c.h(3).unwrap(), &BigUint::from(960u32));
        assert_eq!(c.h_hat(3).unwrap(), &BigUint::from(48u32));
        assert_eq!(c.big_h(2).unwrap(), BigUint::from(48u32));
        assert_eq!(c.big_h(3).unwrap(), BigUint::from(1920u32));
        assert_eq!(c.h(4).unwrap(), &BigUint::from(120960u32));
        assert_eq!(c.h_hat(4).unwrap(), &BigUint::from(1728u32));
        assert_eq!(c.h(6).unwrap(), &BigUint::from(40255488000u64));
        assert_eq!(c.h_hat(6).unwrap(), &BigUint::from(20736000u64));
    }

    #[test]
    fn geometry_identities() {
        for c in [p221(), va()] {
            for n in 0..=c.top_stage() {
                let g = c.geometry(n).unwrap();
                // base_width · ĥ_n = 1 exactly
                assert_eq!(
                    g.base_width * BigRational::from(num_bigint::BigInt::from(g.h_hat.clone())),
                    BigRational::from_integer(1.into())
                );
                assert_eq!(g.spacer_levels, g.h - c.h_hat(n).unwrap());
            }
            for n in 0..=c.n_max() {
                // ĥ_{n+1} = k_n m_n ĥ_n
                let lhs = c.h_hat(n + 1).unwrap().clone();
                let rhs = BigUint::from(c.k(n).unwrap())
                    * BigUint::from(c.m(n).unwrap())
                    * c.h_hat(n).unwrap();
                assert_eq!(lhs, rhs);
                // h_{n+1} even, top half spacer accounting
                assert!(c.h(n + 1).unwrap().is_even());
            }
        }
    }

    #[test]
    fn embedding_offsets() {
        let c = p221();
        let e = c.embedding(1).unwrap();
        assert_eq!(e.offsets, vec![BigUint::from(0u32), BigUint::from(7u32)]);
        assert_eq!(e.copies(), 2);

        let c = va();
        let e = c.embedding(1).unwrap();
        assert_eq!(e.offsets, vec![BigUint::from(0u32), BigUint::from(8u32)]);
        // count(offsets) = k_n · m_n, copies pairwise ≥ h_n apart
        for n in 0..=c.n_max() {
            let e = c.embedding(n).unwrap();
            assert_eq!(e.copies() as u64, c.k(n).unwrap() * c.m(n).unwrap());
            let h = c.h(n).unwrap();
            for w in e.offsets.windows(2) {
                assert!(&w[1] - &w[0] >= *h);
            }
            // the copies tile the bottom half exactly: last offset + h_n = h_{n+1}/2
            let last = e.offsets.last().unwrap();
            assert_eq!(&(last + h) * 2u32, *c.h(n + 1).unwrap());
        }
    }

    #[test]
    fn shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Construction>();
        assert_send_sync::<crate::LevelSet<u64>>();
        assert_send_sync::<crate::LevelSet<BigUint>>();
        assert_send_sync::<crate::correlation::BirkhoffHistogram<u64>>();
    }

    #[test]
    fn horizon_errors() {
        let c = p221();
        assert!(matches!(c.h(6), Err(Error::Horizon { .. })));
        assert!(matches!(c.embedding(4), Err(Error::Horizon { .. })));
        assert!(c.geometry(4).is_ok()); // n_max + 1 is fine
        assert!(c.geometry(5).is_err());
    }
}
