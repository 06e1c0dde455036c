//! Exact arithmetic for rank-one cutting-and-stacking constructions.
//!
//! A cutting-and-stacking construction builds a nested sequence of columns
//! (Rokhlin towers) `C_0 ⊂ C_1 ⊂ …` by repeatedly cutting a column into
//! subcolumns, inserting spacer levels, and restacking. The limit is a
//! σ-finite measure-preserving transformation on an infinite measure space.
//! Everything this crate computes about such a transformation — measures of
//! level sets, correlation sums `Σ_i μ(A ∩ TⁱB)`, distributions of Birkhoff
//! sums, and the normalizing sequences used to study weak rational
//! ergodicity — is carried out in exact integer and rational arithmetic.
//!
//! The key trick making exactness cheap is the *safe stage*: at a fine
//! enough stage `s`, applying `Tⁱ` to a union of full levels is just an
//! integer shift of level indices, because no orbit segment of length `i`
//! crosses the top of the column. Sets are stored as sorted run lists of
//! level indices, so all the heavy operations are linear merges over runs.
//!
//! Level indices grow beyond machine words within a handful of stages, so
//! the run kernels are generic over the [`LevelInt`] scalar: `u64` where the
//! whole horizon fits a word (fast, allocation-free) and [`num_bigint::BigUint`]
//! otherwise. Both are exact; results are identical whichever scalar carries
//! them. See [`fits_u64`] for the capacity rule.
//!
//! Modules follow the pipeline:
//!
//! * [`params`] / [`construction`] — parameter families and exact tower
//!   geometry (heights, induced heights, embedding offsets),
//! * [`levelset`] — run-encoded measurable sets and their algebra,
//! * [`correlation`] — correlation sums and Birkhoff-sum histograms,
//! * [`normalizers`] — the normalizing sequences `a_t`, `a_n(F)`, `b_N^n`,
//! * [`metrics`] — weak-rational-ergodicity ratios, β-rational-ergodicity
//!   functionals, Hölder checks, independence checks,
//! * [`oracle`] — an independent brute-force tower simulation used as ground
//!   truth in the test suites,
//! * [`approx`] — directed-rounding dyadic enclosures for the few quantities
//!   (non-integer powers) that have no exact rational value.

pub mod approx;
pub mod construction;
pub mod correlation;
pub mod error;
pub mod levelset;
pub mod metrics;
pub mod normalizers;
pub mod oracle;
pub mod params;
pub mod scalar;

pub use construction::{Construction, EmbeddingMap, StageGeometry};
pub use error::{Error, Result};
pub use levelset::LevelSet;
pub use params::{Alpha, Beta, FamilySpec, MRule, ParamSeq};
pub use scalar::LevelInt;

use num_bigint::BigUint;

/// Exact measure values: nonnegative rationals with unbounded terms.
pub type Measure = num_rational::BigRational;

/// Level scalar for horizons that fit a machine word.
pub type FastLevel = u64;
/// Level scalar with no capacity limit.
pub type ExactLevel = BigUint;

/// Run-encoded set over the fast scalar.
pub type FastLevelSet = LevelSet<FastLevel>;
/// Run-encoded set over the unbounded scalar.
pub type ExactLevelSet = LevelSet<ExactLevel>;

/// Whether the whole construction (through stage `n_max + 1`) fits the
/// `u64` scalar with enough headroom for shifted window arithmetic.
pub fn fits_u64(c: &Construction) -> bool {
    c.h(c.n_max() + 1).map(|h| h.bits() <= 62).unwrap_or(false)
}
