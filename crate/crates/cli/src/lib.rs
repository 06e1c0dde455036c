//! Command implementations behind the `cutstack` binary.
//!
//! Every command is a pure function from (config, options) to a CSV string;
//! the binary only parses arguments and writes the result. Identical inputs
//! produce byte-identical output — there are no timestamps, no ambient
//! randomness (the fuzz seed is an explicit option), and all floating-point
//! columns are decimal renderings of exact rationals.

pub mod config;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use cutstack::approx::{decimal_string, digits_for_bits, render_value, Value};
use cutstack::correlation::{birkhoff_hist, corr, corr_at_stage, corr_sum, safe_stage};
use cutstack::error::Error as CoreError;
use cutstack::levelset::LevelSet;
use cutstack::metrics::{beta_ratio, closing_bound, holder_check, independence_check, wre_ratio};
use cutstack::normalizers::{a_hat_of, decompose};
use cutstack::oracle::{build_explicit, DEFAULT_LEVEL_CAP};
use cutstack::params::Beta;
use cutstack::scalar::LevelInt;
use cutstack::{fits_u64, Construction};

use config::{build_construction, parse_betas, parse_stage_list, parse_times, RawConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Core(CoreError),
    /// The invariant suite found a violation.
    CheckFailed(String),
    Io(String),
}

impl CliError {
    pub(crate) fn config(lineno: usize, msg: &str) -> CliError {
        CliError::Config(format!("line {}: {msg}", lineno + 1))
    }

    pub(crate) fn from_config_err(e: CoreError) -> CliError {
        CliError::Config(e.to_string())
    }

    /// 1 invariant failure, 2 usage/config, 3 horizon/memory.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                CoreError::Horizon { .. }
                | CoreError::NoSafeStage { .. }
                | CoreError::MemoryCap { .. }
                | CoreError::Capacity { .. } => 3,
                _ => 2,
            },
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) => format!("usage error: {m}"),
            CliError::Config(m) => format!("config error: {m}"),
            CliError::Core(e) => format!("error: {e}"),
            CliError::CheckFailed(m) => format!("check failed: {m}"),
            CliError::Io(m) => format!("io error: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub precision: u32,
    /// Set when `--precision` was given explicitly; wins over the config.
    pub precision_flag: bool,
    pub seed: u64,
    pub memory_cap: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            precision: 96,
            precision_flag: false,
            seed: 1,
            memory_cap: DEFAULT_LEVEL_CAP,
        }
    }
}

pub const COMMANDS: &[&str] = &[
    "geometry",
    "wre-table",
    "beta-table",
    "normalizers",
    "independence",
    "check",
    "dump-tower",
];

/// Run one subcommand against a parsed config.
pub fn run_command(cmd: &str, raw: &RawConfig, opts: &Options) -> Result<String, CliError> {
    let mut opts = opts.clone();
    if !opts.precision_flag {
        if let Some(p) = raw.get("output", "precision") {
            opts.precision = p
                .parse()
                .map_err(|_| CliError::Config("bad precision".into()))?;
        }
    }
    if opts.precision < 64 {
        return Err(CliError::Config(format!(
            "precision must be at least 64 bits, got {}",
            opts.precision
        )));
    }
    let ctx = build_construction(raw)?;
    match cmd {
        "geometry" => cmd_geometry(&ctx, &opts),
        "wre-table" => dispatch_wre(&ctx, raw, &opts),
        "beta-table" => dispatch_beta(&ctx, raw, &opts),
        "normalizers" => cmd_normalizers(&ctx, raw, &opts),
        "independence" => dispatch_independence(&ctx, raw, &opts),
        "check" => dispatch_check(&ctx, raw, &opts),
        "dump-tower" => cmd_dump_tower(&ctx, raw, &opts),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}

fn meta_header(ctx: &Construction, opts: &Options, notes: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# family: {}", ctx.params().describe());
    let _ = writeln!(out, "# precision: {} bits", opts.precision);
    for w in ctx.params().warnings() {
        let _ = writeln!(out, "# warning: {w}");
    }
    if ctx.params().is_valpha() && !ctx.params().k_matches_valpha_rule() {
        let _ = writeln!(out, "# note: bootstrap overrides k_n = n+1 at some stage");
    }
    for n in notes {
        let _ = writeln!(out, "# note: {n}");
    }
    out
}

/// Exact rational as `num/den` (denominator 1 omitted). Round-trips.
fn rat(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn dec(r: &BigRational, bits: u32) -> String {
    decimal_string(r, digits_for_bits(bits))
}

fn val_cell(v: &Value, bits: u32) -> String {
    match v {
        Value::Exact(r) => rat(r),
        Value::Approx(_) => render_value(v, bits),
    }
}

fn cmd_geometry(ctx: &Construction, opts: &Options) -> Result<String, CliError> {
    let mut out = meta_header(ctx, opts, &[]);
    out.push_str("n,k,ell,m,h,H,hhat\n");
    for n in 1..=ctx.n_max() {
        let _ = writeln!(
            out,
            "{n},{},{},{},{},{},{}",
            ctx.k(n)?,
            ctx.ell(n)?,
            ctx.m(n)?,
            ctx.h(n)?,
            ctx.big_h(n)?,
            ctx.h_hat(n)?,
        );
    }
    Ok(out)
}

fn parse_set<T: LevelInt>(ctx: &Construction, spec: &str) -> Result<LevelSet<T>, CliError> {
    let spec = spec.trim();
    if spec == "F" {
        let stage = 2.min(ctx.top_stage());
        return Ok(LevelSet::f_set(ctx, stage)?);
    }
    Ok(LevelSet::parse_literal(ctx, spec)?)
}

fn dispatch_wre(ctx: &Construction, raw: &RawConfig, opts: &Options) -> Result<String, CliError> {
    if fits_u64(ctx) {
        cmd_wre_table::<u64>(ctx, raw, opts)
    } else {
        cmd_wre_table::<BigUint>(ctx, raw, opts)
    }
}

fn cmd_wre_table<T: LevelInt>(
    ctx: &Construction,
    raw: &RawConfig,
    opts: &Options,
) -> Result<String, CliError> {
    let times = parse_times(ctx, raw.require("experiment", "t")?)?;
    let a: LevelSet<T> = parse_set(ctx, raw.get("experiment", "A").unwrap_or("F"))?;
    let b: LevelSet<T> = parse_set(ctx, raw.get("experiment", "B").unwrap_or("F"))?;
    let notes = generalization_note(ctx);
    let mut out = meta_header(ctx, opts, &notes);
    out.push_str("t,n,q,r,case,corr_sum,a_t,ratio,target,residual\n");
    for t in &times {
        let row = wre_ratio(ctx, &a, &b, t)?;
        let d = &row.decomposition;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            d.t,
            d.n,
            d.q,
            d.r,
            d.case,
            rat(&row.corr_sum),
            rat(&row.a_t),
            dec(&row.ratio, opts.precision),
            rat(&row.target),
            dec(&row.residual, opts.precision),
        );
    }
    Ok(out)
}

fn generalization_note(ctx: &Construction) -> Vec<String> {
    if !ctx.params().k_matches_valpha_rule() {
        vec!["a_t uses the k_n*m_n generalization (k_n != n+1 for this family)".into()]
    } else {
        Vec::new()
    }
}

fn dispatch_beta(ctx: &Construction, raw: &RawConfig, opts: &Options) -> Result<String, CliError> {
    if fits_u64(ctx) {
        cmd_beta_table::<u64>(ctx, raw, opts)
    } else {
        cmd_beta_table::<BigUint>(ctx, raw, opts)
    }
}

fn cmd_beta_table<T: LevelInt>(
    ctx: &Construction,
    raw: &RawConfig,
    opts: &Options,
) -> Result<String, CliError> {
    let stages = parse_stage_list(raw.require("experiment", "n")?)?;
    let betas = parse_betas(raw.require("experiment", "beta")?)?;
    let mut out = meta_header(ctx, opts, &generalization_note(ctx));
    out.push_str("n,t,beta,numerator,denominator,R,R_mode,closing_bound\n");
    for &n in &stages {
        let t = ctx.big_h(n)?;
        let base: LevelSet<T> = LevelSet::f_set(ctx, 2.min(ctx.top_stage()))?;
        for beta in &betas {
            let row = beta_ratio(ctx, &base, &t, beta, opts.precision)?;
            let bound = bound_cell(ctx, n, beta, opts.precision);
            let _ = writeln!(
                out,
                "{n},{t},{beta},{},{},{},{},{}",
                val_cell(&row.numerator, opts.precision),
                val_cell(&row.denominator, opts.precision),
                decimal_string(&row.r.midpoint(), digits_for_bits(opts.precision)),
                row.r.mode(),
                bound,
            );
        }
    }
    Ok(out)
}

/// The closing-bound column: populated only for v-alpha families at stages
/// where the sign condition holds.
fn bound_cell(ctx: &Construction, n: usize, beta: &Beta, bits: u32) -> String {
    let Some(alpha) = ctx.params().alpha() else {
        return String::new();
    };
    let Ok(m_n) = ctx.m(n) else {
        return String::new();
    };
    match closing_bound(
        n as u64,
        alpha,
        beta,
        &BigUint::from(m_n),
        &BigRational::zero(),
        bits,
    ) {
        Ok(v) => render_value(&v, bits),
        Err(_) => String::new(),
    }
}

fn cmd_normalizers(
    ctx: &Construction,
    raw: &RawConfig,
    opts: &Options,
) -> Result<String, CliError> {
    let times = parse_times(ctx, raw.require("experiment", "t")?)?;
    let mut out = meta_header(ctx, opts, &generalization_note(ctx));
    out.push_str("t,n,q,r,case,q_prime,r_prime,q_dprime,r_dprime,a_t\n");
    let h2 = if ctx.top_stage() >= 2 {
        Some(ctx.h(2)?.clone())
    } else {
        None
    };
    for t in &times {
        let defined = matches!(&h2, Some(h2) if t >= h2);
        if !defined {
            let _ = writeln!(out, "{t},,,,,,,,,undefined");
            continue;
        }
        let d = decompose(ctx, t)?;
        let a = a_hat_of(ctx, &d)?;
        let opt = |v: &Option<BigUint>| v.as_ref().map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            d.t,
            d.n,
            d.q,
            d.r,
            d.case,
            opt(&d.q1),
            opt(&d.r1),
            opt(&d.q2),
            opt(&d.r2),
            rat(&a),
        );
    }
    Ok(out)
}

fn dispatch_independence(
    ctx: &Construction,
    raw: &RawConfig,
    opts: &Options,
) -> Result<String, CliError> {
    if fits_u64(ctx) {
        cmd_independence::<u64>(ctx, raw, opts)
    } else {
        cmd_independence::<BigUint>(ctx, raw, opts)
    }
}

fn cmd_independence<T: LevelInt>(
    ctx: &Construction,
    raw: &RawConfig,
    opts: &Options,
) -> Result<String, CliError> {
    let n_base: usize = raw
        .get("experiment", "N")
        .unwrap_or("1")
        .parse()
        .map_err(|_| CliError::Config("bad N".into()))?;
    let stages = parse_stage_list(raw.require("experiment", "n")?)?;
    let mut out = meta_header(ctx, opts, &[]);
    out.push_str("N,n1,n2,mu1,mu2,joint,product,product_law,matches_inv_k\n");
    for (idx, &n1) in stages.iter().enumerate() {
        for &n2 in &stages[idx + 1..] {
            let rep = independence_check::<T>(ctx, n_base, n1, n2)?;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                rep.n_base,
                rep.n1,
                rep.n2,
                rat(&rep.mu1),
                rat(&rep.mu2),
                rat(&rep.joint),
                rat(&rep.product),
                rep.product_law,
                rep.matches_inv_k,
            );
        }
    }
    Ok(out)
}

fn cmd_dump_tower(ctx: &Construction, raw: &RawConfig, opts: &Options) -> Result<String, CliError> {
    let stage: usize = raw
        .require("experiment", "stage")?
        .parse()
        .map_err(|_| CliError::Config("bad stage".into()))?;
    let tower = build_explicit(ctx, stage, opts.memory_cap)?;
    let mut out = meta_header(ctx, opts, &[]);
    out.push_str(&tower.dump_csv());
    Ok(out)
}

// ---------------------------------------------------------------------------
// check: the deterministic invariant suite
// ---------------------------------------------------------------------------

/// xorshift64* — all fuzzing is a pure function of the seed.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound.max(1)
    }
}

struct CheckOutcome {
    name: &'static str,
    cases: usize,
    failures: usize,
}

fn dispatch_check(ctx: &Construction, raw: &RawConfig, opts: &Options) -> Result<String, CliError> {
    if fits_u64(ctx) {
        cmd_check::<u64>(ctx, raw, opts)
    } else {
        cmd_check::<BigUint>(ctx, raw, opts)
    }
}

fn random_set<T: LevelInt>(rng: &mut Rng, ctx: &Construction, stage: usize, h: u64) -> LevelSet<T> {
    let runs = 1 + rng.below(4);
    let mut intervals = Vec::new();
    for _ in 0..runs {
        let lo = rng.below(h);
        let len = 1 + rng.below((h - lo).min(8));
        intervals.push((
            T::from_biguint(&BigUint::from(lo)).expect("small"),
            T::from_biguint(&BigUint::from(lo + len)).expect("small"),
        ));
    }
    LevelSet::from_intervals(ctx, stage, intervals).expect("in range")
}

fn cmd_check<T: LevelInt>(
    ctx: &Construction,
    raw: &RawConfig,
    opts: &Options,
) -> Result<String, CliError> {
    let fuzz: usize = raw
        .get("experiment", "fuzz")
        .unwrap_or("200")
        .parse()
        .map_err(|_| CliError::Config("bad fuzz count".into()))?;
    let mut results: Vec<CheckOutcome> = Vec::new();

    // conservation and geometry identities
    {
        let mut cases = 0;
        let mut failures = 0;
        for n in 0..=ctx.top_stage() {
            cases += 1;
            let f = LevelSet::<T>::f_set(ctx, n)?;
            if f.measure(ctx)? != BigRational::one() {
                failures += 1;
            }
            let g = ctx.geometry(n)?;
            if g.base_width * BigRational::from_integer(g.h_hat.clone().into())
                != BigRational::one()
            {
                failures += 1;
            }
        }
        for n in 0..ctx.n_max() {
            cases += 1;
            let a = LevelSet::<T>::f_set(ctx, n)?.refine(ctx, n + 1)?;
            if a != LevelSet::<T>::f_set(ctx, n + 1)? {
                failures += 1;
            }
        }
        results.push(CheckOutcome {
            name: "conservation",
            cases,
            failures,
        });
    }

    // oracle equivalence + stage-choice independence
    {
        let mut cases = 0;
        let mut failures = 0;
        let stage = oracle_stage(ctx, opts.memory_cap);
        if let Some(stage) = stage {
            let tower = build_explicit(ctx, stage, opts.memory_cap)?;
            let h = tower.height();
            let mut rng = Rng::new(opts.seed);
            for _ in 0..fuzz {
                cases += 1;
                let sa = 1 + (rng.below(stage as u64) as usize).min(stage - 1);
                let a: LevelSet<T> = random_set(&mut rng, ctx, sa, small_h(ctx, sa));
                let b: LevelSet<T> = random_set(&mut rng, ctx, sa, small_h(ctx, sa));
                let a_lv = a.refine(ctx, stage)?.levels_u64().expect("oracle scale");
                let b_lv = b.refine(ctx, stage)?.levels_u64().expect("oracle scale");
                let max_b = *b_lv.last().expect("nonempty");
                let room = h - max_b - 1;
                let i = BigUint::from(rng.below(room + 1));
                let t = BigUint::from(1 + rng.below(room.max(1)));
                let ok = corr(ctx, &a, &b, &i)? == tower.corr(&a_lv, &b_lv, i.to_u64().unwrap())?
                    && corr_sum(ctx, &a, &b, &t)?
                        == tower.corr_sum(&a_lv, &b_lv, t.to_u64().unwrap())?;
                // evaluate at two distinct safe stages
                let s0 = safe_stage(ctx, a.stage(), &b, &i)?;
                let deterministic = if s0 < ctx.top_stage() {
                    corr_at_stage(ctx, &a, &b, &i, s0)? == corr_at_stage(ctx, &a, &b, &i, s0 + 1)?
                } else {
                    true
                };
                if !(ok && deterministic) {
                    failures += 1;
                }
            }
        }
        results.push(CheckOutcome {
            name: "oracle_equivalence",
            cases,
            failures,
        });
    }

    // Fubini identity
    {
        let mut cases = 0;
        let mut failures = 0;
        let mut rng = Rng::new(opts.seed ^ 0xF0B1);
        let stage = 2.min(ctx.top_stage());
        let f = LevelSet::<T>::f_set(ctx, stage)?;
        for _ in 0..(fuzz / 2).max(20) {
            cases += 1;
            let base = random_subset_of(&mut rng, ctx, &f);
            if base.is_empty() {
                continue;
            }
            let t = BigUint::from(1 + rng.below(4 * small_h(ctx, stage)));
            let hist = birkhoff_hist(ctx, &base, &t)?;
            if hist.weighted_sum() != corr_sum(ctx, &f, &base, &t)?
                || hist.total_mass() != base.measure(ctx)?
            {
                failures += 1;
            }
        }
        results.push(CheckOutcome {
            name: "fubini",
            cases,
            failures,
        });
    }

    // Hölder slack
    {
        let mut cases = 0;
        let mut failures = 0;
        let mut rng = Rng::new(opts.seed ^ 0x401D);
        let stage = 2.min(ctx.top_stage());
        let f = LevelSet::<T>::f_set(ctx, stage)?;
        for b in [2u32, 3, 4] {
            let beta = Beta::integer(b).expect("valid");
            for _ in 0..(fuzz / 8).max(8) {
                cases += 1;
                let base = random_subset_of(&mut rng, ctx, &f);
                if base.is_empty() {
                    continue;
                }
                let t = BigUint::from(1 + rng.below(2 * small_h(ctx, stage)));
                let rep = holder_check(ctx, &base, &t, &beta, opts.precision)?;
                if !rep.holds || !rep.slack.is_nonneg() {
                    failures += 1;
                }
                // single-atom equality: t = 1 on any base within F
                let rep1 = holder_check(ctx, &base, &BigUint::one(), &beta, opts.precision)?;
                if rep1.slack != Value::Exact(BigRational::zero()) {
                    failures += 1;
                }
            }
        }
        results.push(CheckOutcome {
            name: "holder",
            cases,
            failures,
        });
    }

    // independence product law
    {
        let mut cases = 0;
        let mut failures = 0;
        let hi = ctx.n_max().min(4);
        for n1 in 2..hi {
            for n2 in (n1 + 1)..=hi {
                cases += 1;
                let rep = independence_check::<T>(ctx, 1, n1, n2)?;
                if !rep.product_law {
                    failures += 1;
                }
            }
        }
        results.push(CheckOutcome {
            name: "independence",
            cases,
            failures,
        });
    }

    let mut out = meta_header(ctx, opts, &[format!("seed: {}", opts.seed)]);
    out.push_str("check,cases,status\n");
    let mut any_failed = false;
    for r in &results {
        let status = if r.failures == 0 {
            "pass".to_string()
        } else {
            any_failed = true;
            format!("fail({})", r.failures)
        };
        let _ = writeln!(out, "{},{},{}", r.name, r.cases, status);
    }
    if any_failed {
        return Err(CliError::CheckFailed(out));
    }
    Ok(out)
}

/// Largest stage ≤ min(3, n_max) whose explicit tower fits the cap.
fn oracle_stage(ctx: &Construction, cap: usize) -> Option<usize> {
    let mut best = None;
    for n in 1..=ctx.n_max().min(3) {
        match ctx.h(n) {
            Ok(h) if *h <= BigUint::from(cap) => best = Some(n),
            _ => break,
        }
    }
    best
}

fn small_h(ctx: &Construction, stage: usize) -> u64 {
    ctx.h(stage)
        .ok()
        .and_then(|h| h.to_u64())
        .unwrap_or(u64::MAX / 4)
        .min(1 << 20)
}

fn random_subset_of<T: LevelInt>(
    rng: &mut Rng,
    ctx: &Construction,
    f: &LevelSet<T>,
) -> LevelSet<T> {
    let keep: BTreeSet<usize> = (0..f.run_count()).filter(|_| rng.below(2) == 1).collect();
    let intervals: Vec<(T, T)> = f
        .runs()
        .iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, r)| (r.lo.clone(), r.end()))
        .collect();
    LevelSet::from_intervals(ctx, f.stage(), intervals).expect("subset of valid set")
}
