//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! ```text
//! [family]
//! mode = valpha
//! alpha = 1/2
//! m_rule = n^2
//! bootstrap = 2,0,1
//! n_max = 5
//!
//! [experiment]
//! t = 48, H3, 2*H4
//! beta = 3, 5/2
//! n = 2..5
//!
//! [output]
//! precision = 96
//! ```
//!
//! `#` starts a comment. Keys are unique per section (last assignment wins).

use std::collections::BTreeMap;

use num_bigint::BigUint;

use cutstack::params::{Alpha, Beta, FamilySpec, MRule};
use cutstack::Construction;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig, CliError> {
        let mut cfg = RawConfig::default();
        let mut section = String::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(i) => &raw_line[..i],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::config(lineno, "unterminated [section]"))?;
                section = name.trim().to_string();
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(lineno, "expected key = value"))?;
            if section.is_empty() {
                return Err(CliError::config(lineno, "key before any [section]"));
            }
            cfg.sections
                .get_mut(&section)
                .expect("section entry exists")
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|s| s.as_str())
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str, CliError> {
        self.get(section, key)
            .ok_or_else(|| CliError::Config(format!("missing [{section}] {key}")))
    }
}

fn parse_list<T, F>(value: &str, what: &str, f: F) -> Result<Vec<T>, CliError>
where
    F: Fn(&str) -> Option<T>,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).ok_or_else(|| CliError::Config(format!("bad {what} entry {s:?}"))))
        .collect()
}

/// Build the family from the `[family]` section.
pub fn build_construction(raw: &RawConfig) -> Result<Construction, CliError> {
    let mode = raw.require("family", "mode")?;
    let spec = match mode {
        "explicit" => {
            let k = parse_list(raw.require("family", "k")?, "k", |s| s.parse::<u64>().ok())?;
            let ell = parse_list(raw.require("family", "ell")?, "ell", |s| {
                s.parse::<BigUint>().ok()
            })?;
            let m = parse_list(raw.require("family", "m")?, "m", |s| s.parse::<u64>().ok())?;
            if let Some(n_max) = raw.get("family", "n_max") {
                let n_max: usize = n_max
                    .parse()
                    .map_err(|_| CliError::Config("bad n_max".into()))?;
                if n_max + 1 != k.len() {
                    return Err(CliError::Config(format!(
                        "n_max = {n_max} disagrees with {} explicit stages",
                        k.len()
                    )));
                }
            }
            FamilySpec::Explicit { k, ell, m }
        }
        "valpha" => {
            let alpha =
                Alpha::parse(raw.require("family", "alpha")?).map_err(CliError::from_config_err)?;
            let n_max: usize = raw
                .require("family", "n_max")?
                .parse()
                .map_err(|_| CliError::Config("bad n_max".into()))?;
            let m_rule = match raw.require("family", "m_rule")? {
                "n^2" => MRule::Square,
                "n^3" => MRule::Cube,
                list => MRule::Explicit(parse_list(list, "m_rule", |s| s.parse::<u64>().ok())?),
            };
            let bootstrap = match raw.get("family", "bootstrap") {
                None => (2, BigUint::ZERO, 1),
                Some(b) => {
                    let parts: Vec<&str> = b.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(CliError::Config("bootstrap needs k0,ell0,m0".into()));
                    }
                    let k0 = parts[0]
                        .parse::<u64>()
                        .map_err(|_| CliError::Config("bad bootstrap k0".into()))?;
                    let ell0 = parts[1]
                        .parse::<BigUint>()
                        .map_err(|_| CliError::Config("bad bootstrap ell0".into()))?;
                    let m0 = parts[2]
                        .parse::<u64>()
                        .map_err(|_| CliError::Config("bad bootstrap m0".into()))?;
                    (k0, ell0, m0)
                }
            };
            FamilySpec::VAlpha {
                alpha,
                m_rule,
                bootstrap,
                n_max,
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "mode must be explicit or valpha, got {other:?}"
            )))
        }
    };
    Construction::new(spec).map_err(CliError::from_config_err)
}

/// A time grid entry: a literal, `H<n>`, or `<q>*H<n>`.
pub fn parse_time(ctx: &Construction, token: &str) -> Result<BigUint, CliError> {
    let token = token.trim();
    let eval_h = |spec: &str, mult: &BigUint| -> Result<BigUint, CliError> {
        let n: usize = spec
            .parse()
            .map_err(|_| CliError::Config(format!("bad stage in time token {token:?}")))?;
        let h = ctx.big_h(n).map_err(CliError::Core)?;
        Ok(mult * h)
    };
    if let Some((q, h)) = token.split_once('*') {
        let q: BigUint = q
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad multiplier in {token:?}")))?;
        let h = h
            .trim()
            .strip_prefix('H')
            .ok_or_else(|| CliError::Config(format!("expected q*H<n> in time token {token:?}")))?;
        return eval_h(h, &q);
    }
    if let Some(h) = token.strip_prefix('H') {
        return eval_h(h, &BigUint::from(1u32));
    }
    token
        .parse::<BigUint>()
        .map_err(|_| CliError::Config(format!("bad time token {token:?}")))
}

pub fn parse_times(ctx: &Construction, value: &str) -> Result<Vec<BigUint>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_time(ctx, s))
        .collect()
}

/// `2..5` (inclusive) or a comma list.
pub fn parse_stage_list(value: &str) -> Result<Vec<usize>, CliError> {
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad range start in {value:?}")))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad range end in {value:?}")))?;
        if hi < lo {
            return Err(CliError::Config(format!("empty range {value:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    parse_list(value, "stage", |s| s.parse::<usize>().ok())
}

pub fn parse_betas(value: &str) -> Result<Vec<Beta>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Beta::parse(s).map_err(CliError::from_config_err))
        .collect()
}
