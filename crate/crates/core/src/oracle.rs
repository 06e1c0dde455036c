//! Independent brute-force ground truth.
//!
//! [`ExplicitTower`] materializes a stage's column as one array entry per
//! level by literally performing the cut/stack/spacer procedure, without
//! touching the embedding-offset arithmetic in [`crate::construction`] or the
//! run kernels in [`crate::levelset`]. Measures are obtained by direct
//! counting. The point is independence: agreement between this module and
//! the run-list engine is the main correctness evidence for both.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::construction::Construction;
use crate::error::{Error, Result};

pub const DEFAULT_LEVEL_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// A copy of a piece of the original interval `I_0`.
    Original,
    /// A level added as a spacer at some stage.
    Spacer,
}

/// Where a level of `C_n` came from in the last stacking step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Inside copy `c` (in stacking order) of `C_{n−1}`.
    Copy(u32),
    /// Among the ℓ spacers put on top of ladder block `b`.
    BlockSpacer(u32),
    /// In the top spacer half.
    TopSpacer,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Copy(c) => write!(f, "copy:{c}"),
            Provenance::BlockSpacer(b) => write!(f, "spacer:block:{b}"),
            Provenance::TopSpacer => write!(f, "spacer:top"),
        }
    }
}

/// A stage column materialized level by level.
///
/// The transformation acts on it as the successor map `j ↦ j + 1`
/// (undefined on the top level); all queries below only ever shift indices.
#[derive(Debug, Clone)]
pub struct ExplicitTower {
    n: usize,
    roles: Vec<Role>,
    provenance: Vec<Provenance>,
    /// Sorted indices of the `Original` levels.
    originals: Vec<u64>,
}

/// Build `C_n` by simulating the construction, one stage at a time.
///
/// Only the parameter sequences are read from `ctx`; heights and level
/// layout are re-derived here by actually stacking vectors.
pub fn build_explicit(ctx: &Construction, n: usize, cap: usize) -> Result<ExplicitTower> {
    let mut roles = vec![Role::Original];
    let mut provenance = vec![Provenance::Copy(0)];

    for s in 0..n {
        let k = ctx.k(s)?;
        let m = ctx.m(s)?;
        let ell_big = ctx.ell(s)?;

        // Predicted size, checked against the cap before any allocation.
        let h = BigUint::from(roles.len());
        let big_h = &h + ell_big;
        let half = BigUint::from(m) * (&big_h * (k - 1) + &h);
        let total = &half * 2u32;
        if total > BigUint::from(cap) {
            return Err(Error::MemoryCap {
                stage: s + 1,
                levels: total.to_string(),
                cap,
            });
        }
        let ell = ell_big.to_usize().ok_or(Error::MemoryCap {
            stage: s + 1,
            levels: ell_big.to_string(),
            cap,
        })?;
        let total = total.to_usize().expect("under cap");

        let mut new_roles = Vec::with_capacity(total);
        let mut new_prov = Vec::with_capacity(total);
        let mut copy: u32 = 0;
        let mut block: u32 = 0;
        // Ladder: m × (k−1) blocks of (C_s copy + ℓ spacers).
        for _ in 0..m {
            for _ in 0..(k - 1) {
                new_roles.extend_from_slice(&roles);
                new_prov.resize(new_roles.len(), Provenance::Copy(copy));
                new_roles.resize(new_roles.len() + ell, Role::Spacer);
                new_prov.resize(new_roles.len(), Provenance::BlockSpacer(block));
                copy += 1;
                block += 1;
            }
        }
        // Dense pile: m flush copies of C_s.
        for _ in 0..m {
            new_roles.extend_from_slice(&roles);
            new_prov.resize(new_roles.len(), Provenance::Copy(copy));
            copy += 1;
        }
        // Equal number of spacers on top.
        new_roles.resize(2 * new_roles.len(), Role::Spacer);
        new_prov.resize(new_roles.len(), Provenance::TopSpacer);
        debug_assert_eq!(new_roles.len(), total);

        roles = new_roles;
        provenance = new_prov;
    }

    let originals = roles
        .iter()
        .enumerate()
        .filter(|(_, r)| **r == Role::Original)
        .map(|(i, _)| i as u64)
        .collect();
    Ok(ExplicitTower {
        n,
        roles,
        provenance,
        originals,
    })
}

impl ExplicitTower {
    pub fn stage(&self) -> usize {
        self.n
    }

    pub fn height(&self) -> u64 {
        self.roles.len() as u64
    }

    pub fn role(&self, level: u64) -> Role {
        self.roles[level as usize]
    }

    pub fn provenance(&self, level: u64) -> Provenance {
        self.provenance[level as usize]
    }

    /// Sorted level indices of the original (non-spacer) mass; their count
    /// is the induced height ĥ_n.
    pub fn originals(&self) -> &[u64] {
        &self.originals
    }

    pub fn h_hat(&self) -> u64 {
        self.originals.len() as u64
    }

    fn check_shift(&self, b: &[u64], shift: u64) -> Result<()> {
        if let Some(max) = b.last() {
            if max + shift >= self.height() {
                return Err(Error::NoSafeStage {
                    window: format!("{max} + {shift} at explicit stage {}", self.n),
                });
            }
        }
        Ok(())
    }

    /// `μ(A ∩ T^shift B)` by direct counting; `a` and `b` are sorted level lists.
    pub fn corr(&self, a: &[u64], b: &[u64], shift: u64) -> Result<BigRational> {
        self.check_shift(b, shift)?;
        let mut count: u64 = 0;
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let bj = b[j] + shift;
            match a[i].cmp(&bj) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(BigRational::new(count.into(), self.h_hat().into()))
    }

    /// `Σ_{i<t} μ(A ∩ TⁱB)` term by term (no windowing shortcut).
    pub fn corr_sum(&self, a: &[u64], b: &[u64], t: u64) -> Result<BigRational> {
        if t > 0 {
            self.check_shift(b, t - 1)?;
        }
        let mut acc = BigRational::from_integer(0.into());
        for i in 0..t {
            acc += self.corr(a, b, i)?;
        }
        Ok(acc)
    }

    /// Distribution of `x ↦ #{i < t : T^i x ∈ originals}` over the levels of
    /// `base`, as value → level-count pairs.
    pub fn birkhoff_counts(&self, base: &[u64], t: u64) -> Result<BTreeMap<u64, u64>> {
        self.check_shift(base, t.saturating_sub(1))?;
        let mut out: BTreeMap<u64, u64> = BTreeMap::new();
        for &u in base {
            let lo = self.originals.partition_point(|&x| x < u);
            let hi = self.originals.partition_point(|&x| x < u + t);
            *out.entry((hi - lo) as u64).or_insert(0) += 1;
        }
        Ok(out)
    }

    /// CSV rows `level_index,role,provenance`.
    pub fn dump_csv(&self) -> String {
        let mut out = String::from("level_index,role,provenance\n");
        for (i, (r, p)) in self.roles.iter().zip(&self.provenance).enumerate() {
            let role = match r {
                Role::Original => "original",
                Role::Spacer => "spacer",
            };
            out.push_str(&format!("{i},{role},{p}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Alpha, FamilySpec, MRule};

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
    fn p221_stage1_layout() {
        let t = build_explicit(&p221(), 1, DEFAULT_LEVEL_CAP).unwrap();
        assert_eq!(t.height(), 6);
        assert_eq!(t.originals(), &[0, 2]);
        assert_eq!(t.role(1), Role::Spacer);
        assert_eq!(t.provenance(0), Provenance::Copy(0));
        assert_eq!(t.provenance(1), Provenance::BlockSpacer(0));
        assert_eq!(t.provenance(2), Provenance::Copy(1));
        assert_eq!(t.provenance(5), Provenance::TopSpacer);
    }

    #[test]
    fn va_stage2_layout() {
        let t = build_explicit(&va(), 2, DEFAULT_LEVEL_CAP).unwrap();
        assert_eq!(t.height(), 24);
        assert_eq!(t.originals(), &[0, 1, 8, 9]);
    }

    #[test]
    fn heights_match_recurrence() {
        // Independent reconstruction agrees with the geometry recurrences.
        for c in [p221(), va()] {
            for n in 0..=3 {
                let t = build_explicit(&c, n, DEFAULT_LEVEL_CAP).unwrap();
                assert_eq!(BigUint::from(t.height()), *c.h(n).unwrap());
                assert_eq!(BigUint::from(t.h_hat()), *c.h_hat(n).unwrap());
            }
        }
    }

    #[test]
    fn corr_examples() {
        let c = p221();
        let t = build_explicit(&c, 2, DEFAULT_LEVEL_CAP).unwrap();
        let f: Vec<u64> = t.originals().to_vec();
        assert_eq!(
            t.corr(&f, &f, 2).unwrap(),
            BigRational::new(1.into(), 2.into())
        );
        assert_eq!(
            t.corr(&f, &f, 1).unwrap(),
            BigRational::from_integer(0.into())
        );
        // i = 0, A = B → μ(A)
        assert_eq!(
            t.corr(&f, &f, 0).unwrap(),
            BigRational::from_integer(1.into())
        );
        assert_eq!(
            t.corr_sum(&f, &f, 3).unwrap(),
            BigRational::new(3.into(), 2.into())
        );
    }

    #[test]
    fn cap_is_enforced() {
        let c = va();
        assert!(matches!(
            build_explicit(&c, 5, 1_000_000),
            Err(Error::MemoryCap { .. })
        ));
    }
}
