//! Construction parameters.
//!
//! A family is given by three sequences: `k_n` (cuts per stage, ≥ 2),
//! `ℓ_n` (spacers on each of the first `k_n − 1` subcolumns, ≥ 0) and
//! `m_n` (secondary cuts, ≥ 1). They are either spelled out explicitly or
//! generated by the v-alpha rule `k_n = n + 1`, `ℓ_n = ⌊n^α⌋·h_n` for a
//! rational `α ∈ (0,1)`. In the latter case `ℓ_n` depends on the column
//! height `h_n`, so the realized sequence is produced stage by stage while
//! the geometry recurrence runs (see [`crate::construction`]).

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// A rational exponent `p/q` in `(0,1)`, stored reduced.
///
/// Keeping `α` rational lets `⌊n^α⌋` be computed exactly as the largest
/// `ℓ` with `ℓ^q ≤ n^p`, so the floor never wobbles at boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alpha {
    p: u32,
    q: u32,
}

impl Alpha {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if q == 0 || p == 0 || p >= q {
            return Err(Error::InvalidParams(format!(
                "alpha must be a rational in (0,1), got {p}/{q}"
            )));
        }
        let g = p.gcd(&q);
        Ok(Alpha { p: p / g, q: q / g })
    }

    pub fn numer(&self) -> u32 {
        self.p
    }

    pub fn denom(&self) -> u32 {
        self.q
    }

    /// `⌊n^α⌋`, exactly.
    pub fn floor_pow(&self, n: u64) -> BigUint {
        BigUint::from(n).pow(self.p).nth_root(self.q)
    }

    /// Parse `"p/q"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::InvalidParams(format!("alpha must look like p/q, got {s:?}")))?;
        let p: u32 = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad alpha numerator {p:?}")))?;
        let q: u32 = q
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad alpha denominator {q:?}")))?;
        Alpha::new(p, q)
    }
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// A rational moment exponent `β = p/q ≥ 1`, stored reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Beta {
    p: u32,
    q: u32,
}

impl Beta {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if q == 0 || p < q {
            return Err(Error::BadBeta(format!("{p}/{q}")));
        }
        let g = p.gcd(&q);
        Ok(Beta { p: p / g, q: q / g })
    }

    pub fn integer(b: u32) -> Result<Self> {
        Beta::new(b, 1)
    }

    pub fn numer(&self) -> u32 {
        self.p
    }

    pub fn denom(&self) -> u32 {
        self.q
    }

    pub fn is_integer(&self) -> bool {
        self.q == 1
    }

    pub fn is_one(&self) -> bool {
        self.p == 1 && self.q == 1
    }

    /// Parse `"3"` or `"5/2"`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.split_once('/') {
            None => {
                let p: u32 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::BadBeta(s.to_string()))?;
                Beta::new(p, 1)
            }
            Some((p, q)) => {
                let p: u32 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::BadBeta(s.to_string()))?;
                let q: u32 = q
                    .trim()
                    .parse()
                    .map_err(|_| Error::BadBeta(s.to_string()))?;
                Beta::new(p, q)
            }
        }
    }
}

impl std::fmt::Display for Beta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.q == 1 {
            write!(f, "{}", self.p)
        } else {
            write!(f, "{}/{}", self.p, self.q)
        }
    }
}

/// Rule generating the secondary-cut counts `m_n` in v-alpha mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MRule {
    /// `m_n = n²` for n ≥ 1 (the bootstrap supplies `m_0`).
    Square,
    /// `m_n = n³` for n ≥ 1.
    Cube,
    /// Explicit values for n = 1 ..= n_max.
    Explicit(Vec<u64>),
}

impl MRule {
    fn value(&self, n: usize) -> Result<u64> {
        debug_assert!(n >= 1);
        match self {
            MRule::Square => Ok((n as u64) * (n as u64)),
            MRule::Cube => Ok((n as u64) * (n as u64) * (n as u64)),
            MRule::Explicit(v) => v
                .get(n - 1)
                .copied()
                .ok_or_else(|| Error::InvalidParams(format!("m_rule list too short: no m_{n}"))),
        }
    }
}

/// How a family is specified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySpec {
    /// Explicit `(k_n, ℓ_n, m_n)` for n = 0 ..= n_max.
    Explicit {
        k: Vec<u64>,
        ell: Vec<BigUint>,
        m: Vec<u64>,
    },
    /// The v-alpha rule for n ≥ 1; stage 0 comes from `bootstrap`.
    ///
    /// The rule at n = 0 would degenerate (`k_0 = 1`), so stage 0 is a free
    /// choice; `(2, 0, 1)` is the default bootstrap.
    VAlpha {
        alpha: Alpha,
        m_rule: MRule,
        bootstrap: (u64, BigUint, u64),
        n_max: usize,
    },
}

impl FamilySpec {
    /// Default bootstrap `(k_0, ℓ_0, m_0) = (2, 0, 1)`.
    pub fn valpha(alpha: Alpha, m_rule: MRule, n_max: usize) -> Self {
        FamilySpec::VAlpha {
            alpha,
            m_rule,
            bootstrap: (2, BigUint::zero(), 1),
            n_max,
        }
    }

    pub fn n_max(&self) -> usize {
        match self {
            FamilySpec::Explicit { k, .. } => k.len().saturating_sub(1),
            FamilySpec::VAlpha { n_max, .. } => *n_max,
        }
    }
}

/// The realized, validated parameter sequences over a finite horizon.
///
/// For v-alpha families the ℓ values are filled in by the geometry pass;
/// a `ParamSeq` is therefore only built through [`crate::Construction`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSeq {
    pub(crate) spec: FamilySpec,
    pub(crate) n_max: usize,
    pub(crate) k: Vec<u64>,
    pub(crate) ell: Vec<BigUint>,
    pub(crate) m: Vec<u64>,
    /// `⌊n^α⌋` per stage (v-alpha only), kept for the D_n sets and bounds.
    pub(crate) floor_alpha: Option<Vec<BigUint>>,
    /// Non-fatal validation findings, surfaced in CSV metadata.
    pub(crate) warnings: Vec<String>,
}

impl ParamSeq {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn k(&self, n: usize) -> Result<u64> {
        self.k.get(n).copied().ok_or(Error::Horizon {
            requested: n,
            allowed: self.n_max,
        })
    }

    pub fn ell(&self, n: usize) -> Result<&BigUint> {
        self.ell.get(n).ok_or(Error::Horizon {
            requested: n,
            allowed: self.n_max,
        })
    }

    pub fn m(&self, n: usize) -> Result<u64> {
        self.m.get(n).copied().ok_or(Error::Horizon {
            requested: n,
            allowed: self.n_max,
        })
    }

    pub fn is_valpha(&self) -> bool {
        matches!(self.spec, FamilySpec::VAlpha { .. })
    }

    pub fn alpha(&self) -> Option<Alpha> {
        match &self.spec {
            FamilySpec::VAlpha { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }

    /// `⌊n^α⌋` for a v-alpha family.
    pub fn floor_alpha(&self, n: usize) -> Result<&BigUint> {
        let fa = self.floor_alpha.as_ref().ok_or(Error::NotValpha)?;
        fa.get(n).ok_or(Error::Horizon {
            requested: n,
            allowed: self.n_max,
        })
    }

    /// Non-fatal validation findings.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Whether the v-alpha rule `k_n = n + 1` actually holds at every stage
    /// (it can fail for explicit families fed to the normalizer formulas).
    pub fn k_matches_valpha_rule(&self) -> bool {
        self.k
            .iter()
            .enumerate()
            .skip(1)
            .all(|(n, &k)| k == n as u64 + 1)
    }

    /// One-line description used in CSV metadata headers.
    pub fn describe(&self) -> String {
        match &self.spec {
            FamilySpec::Explicit { .. } => format!(
                "explicit k={:?} ell={} m={:?} n_max={}",
                self.k,
                self.ell
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                self.m,
                self.n_max
            ),
            FamilySpec::VAlpha {
                alpha, bootstrap, ..
            } => format!(
                "valpha alpha={} bootstrap=({},{},{}) m={:?} n_max={}",
                alpha, bootstrap.0, bootstrap.1, bootstrap.2, self.m, self.n_max
            ),
        }
    }

    /// Validate the stage-n parameters shared by both modes.
    pub(crate) fn check_stage(n: usize, k: u64, m: u64) -> Result<()> {
        if k < 2 {
            return Err(Error::InvalidParams(format!("k_{n} = {k} < 2")));
        }
        if m < 1 {
            return Err(Error::InvalidParams(format!("m_{n} = {m} < 1")));
        }
        Ok(())
    }

    /// Validate an explicit spec and return the realized sequences.
    pub(crate) fn from_explicit(k: Vec<u64>, ell: Vec<BigUint>, m: Vec<u64>) -> Result<ParamSeq> {
        if k.is_empty() || k.len() != ell.len() || k.len() != m.len() {
            return Err(Error::InvalidParams(format!(
                "k/ell/m must be nonempty and equally long (got {}, {}, {})",
                k.len(),
                ell.len(),
                m.len()
            )));
        }
        for n in 0..k.len() {
            Self::check_stage(n, k[n], m[n])?;
        }
        let n_max = k.len() - 1;
        Ok(ParamSeq {
            spec: FamilySpec::Explicit {
                k: k.clone(),
                ell: ell.clone(),
                m: m.clone(),
            },
            n_max,
            k,
            ell,
            m,
            floor_alpha: None,
            warnings: Vec::new(),
        })
    }

    /// Validate the v-alpha skeleton (everything except ℓ_n for n ≥ 1,
    /// which needs h_n). Returns the sequences with ℓ placeholders and the
    /// per-stage `⌊n^α⌋` values.
    pub(crate) fn valpha_skeleton(spec: &FamilySpec) -> Result<ParamSeq> {
        let FamilySpec::VAlpha {
            alpha,
            m_rule,
            bootstrap,
            n_max,
        } = spec
        else {
            return Err(Error::NotValpha);
        };
        if *n_max < 1 {
            return Err(Error::InvalidParams(
                "v-alpha families need n_max >= 1".into(),
            ));
        }
        let (k0, ell0, m0) = bootstrap;
        Self::check_stage(0, *k0, *m0)?;

        let mut k = vec![*k0];
        let mut m = vec![*m0];
        let mut fa = vec![BigUint::one()]; // unused at stage 0
        for n in 1..=*n_max {
            let kn = n as u64 + 1;
            let mn = m_rule.value(n)?;
            Self::check_stage(n, kn, mn)?;
            k.push(kn);
            m.push(mn);
            fa.push(alpha.floor_pow(n as u64));
        }

        // The family premise lim ⌊n^α⌋ / m_n = 0 cannot be witnessed on a
        // finite horizon. A nonincreasing ratio would be the natural finite
        // surrogate, but the floor staircase breaks it even for m_n = n²
        // (1/9 at n = 3, 2/16 at n = 4), so violations are reported as
        // warnings rather than rejected.
        let mut warnings = Vec::new();
        for n in 2..=*n_max {
            let lhs = &fa[n] * BigUint::from(m[n - 1]);
            let rhs = &fa[n - 1] * BigUint::from(m[n]);
            if lhs > rhs {
                warnings.push(format!(
                    "floor(n^alpha)/m_n increases from stage {} to {}",
                    n - 1,
                    n
                ));
            }
        }

        let mut ell = vec![ell0.clone()];
        ell.resize(*n_max + 1, BigUint::zero()); // filled by the geometry pass

        Ok(ParamSeq {
            spec: spec.clone(),
            n_max: *n_max,
            k,
            ell,
            m,
            floor_alpha: Some(fa),
            warnings,
        })
    }
}
