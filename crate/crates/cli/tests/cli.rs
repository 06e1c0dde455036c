//! Command-level behavior: exit codes, output shape, and the CSV
//! round-trip guarantee for rational columns.

use std::path::{Path, PathBuf};
use std::process::Output;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;

use cutstack::correlation::corr_sum;
use cutstack::levelset::LevelSet;
use cutstack::normalizers::a_hat;
use cutstack::params::{Alpha, FamilySpec, MRule};
use cutstack::Construction;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cutstack")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cutstack-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    std::process::Command::new(bin())
        .args(args)
        .output()
        .expect("spawn cutstack")
}

const VA_CFG: &str = "\
[family]
mode = valpha
alpha = 1/2
m_rule = n^2
bootstrap = 2,0,1
n_max = 4

[experiment]
t = 48, H3
n = 2..3
beta = 3, 5/2
N = 1
fuzz = 40

[output]
precision = 96
";

#[test]
fn usage_errors_exit_2() {
    let out = run(&["frobnicate", "--config", "/nonexistent"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["geometry"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["geometry", "--config", "/nonexistent/path.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("USAGE"));
}

#[test]
fn precision_floor_is_enforced() {
    let dir = scratch("prec");
    let cfg = write_cfg(&dir, VA_CFG);
    let out = run(&[
        "geometry",
        "--config",
        cfg.to_str().unwrap(),
        "--precision",
        "32",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precision"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn horizon_exceeded_exits_3() {
    let dir = scratch("hor");
    let cfg = write_cfg(
        &dir,
        "[family]\nmode = valpha\nalpha = 1/2\nm_rule = n^2\nn_max = 3\n\n[experiment]\nt = H7\n",
    );
    let out = run(&["wre-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn wre_table_diagnoses_t_below_h2() {
    let dir = scratch("smallt");
    let cfg = write_cfg(
        &dir,
        "[family]\nmode = valpha\nalpha = 1/2\nm_rule = n^2\nn_max = 3\n\n[experiment]\nt = 7\n",
    );
    let out = run(&["wre-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("below h_2"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn geometry_header_only_when_no_stages() {
    let dir = scratch("geo0");
    let cfg = write_cfg(&dir, "[family]\nmode = explicit\nk = 2\nell = 0\nm = 1\n");
    let out = run(&["geometry", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let data_lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data_lines, vec!["n,k,ell,m,h,H,hhat"]);
    let _ = std::fs::remove_dir_all(&dir);
}

fn parse_rat(s: &str) -> BigRational {
    match s.split_once('/') {
        Some((n, d)) => BigRational::new(n.parse().unwrap(), d.parse().unwrap()),
        None => BigRational::from_integer(s.parse().unwrap()),
    }
}

#[test]
fn wre_table_rational_columns_round_trip() {
    let dir = scratch("wre");
    let cfg = write_cfg(&dir, VA_CFG);
    let out = run(&["wre-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    // identical config → byte-identical output
    let again = run(&["wre-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.stdout, again.stdout);
    let text = String::from_utf8(out.stdout).unwrap();

    let ctx = Construction::new(FamilySpec::valpha(
        Alpha::new(1, 2).unwrap(),
        MRule::Square,
        4,
    ))
    .unwrap();
    let f = LevelSet::<u64>::f_set(&ctx, 2).unwrap();
    let mut data = text.lines().filter(|l| !l.starts_with('#'));
    let header = data.next().unwrap();
    assert_eq!(header, "t,n,q,r,case,corr_sum,a_t,ratio,target,residual");
    let mut rows = 0;
    for line in data {
        let cols: Vec<&str> = line.split(',').collect();
        let t: BigUint = cols[0].parse().unwrap();
        // re-parsing the rational columns reproduces the exact values
        assert_eq!(parse_rat(cols[5]), corr_sum(&ctx, &f, &f, &t).unwrap());
        assert_eq!(parse_rat(cols[6]), a_hat(&ctx, &t).unwrap());
        assert_eq!(parse_rat(cols[8]), BigRational::one());
        rows += 1;
    }
    assert_eq!(rows, 2);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn beta_table_accepts_fractional_beta() {
    let dir = scratch("beta");
    let cfg = write_cfg(&dir, VA_CFG);
    let out = run(&["beta-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n,"))
        .collect();
    // two stages × two betas
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r.contains(",5/2,")));
    assert!(rows.iter().any(|r| r.contains("approx(96)")));
    assert!(rows.iter().any(|r| r.contains("exact")));
    // closing_bound column populated for this v-alpha family
    for r in &rows {
        assert!(!r.ends_with(','), "bound column empty in {r}");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn set_literals_select_operands() {
    let dir = scratch("lit");
    // A = F ∩ C_2(0), B = F ∩ C_2(1) as literals at stage 3 (VA): the
    // first two subcolumn blocks carry F-levels {0,1,8,9} within each copy.
    let cfg = write_cfg(
        &dir,
        "[family]\nmode = valpha\nalpha = 1/2\nm_rule = n^2\nn_max = 4\n\n\
         [experiment]\nt = 48\nA = 3:0-2,8-10,96-98,104-106,192-194,200-202,288-290,296-298\n\
         B = 3:48-50,56-58,144-146,152-154,240-242,248-250,336-338,344-346\n",
    );
    let out = run(&["wre-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text
        .lines()
        .find(|l| l.starts_with("48,"))
        .expect("one data row");
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[5], "3/8"); // corr_sum(A, B, 48)
    assert_eq!(cols[8], "1/9"); // target μ(A)μ(B)
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn check_seed_changes_fuzz_but_not_verdict() {
    let dir = scratch("seed");
    let cfg = write_cfg(&dir, VA_CFG);
    for seed in ["3", "4"] {
        let out = run(&["check", "--config", cfg.to_str().unwrap(), "--seed", seed]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains(&format!("seed: {seed}")));
        assert!(text.lines().filter(|l| l.ends_with(",pass")).count() >= 5);
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn dump_tower_matches_geometry() {
    let dir = scratch("dump");
    let cfg = write_cfg(
        &dir,
        "[family]\nmode = valpha\nalpha = 1/2\nm_rule = n^2\nn_max = 3\n\n[experiment]\nstage = 2\n",
    );
    let out = run(&["dump-tower", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("level_index"))
        .collect();
    assert_eq!(rows.len(), 24); // h_2
    let originals: Vec<u64> = rows
        .iter()
        .filter(|r| r.contains(",original,"))
        .map(|r| r.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(originals, vec![0, 1, 8, 9]);
    let _ = std::fs::remove_dir_all(&dir);
}
