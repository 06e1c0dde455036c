use std::path::PathBuf;
use std::process::ExitCode;

use cutstack_cli::config::RawConfig;
use cutstack_cli::{run_command, CliError, Options, COMMANDS};

fn usage() -> &'static str {
    "\
cutstack - exact experiments on rank-one cutting-and-stacking towers

USAGE:
  cutstack <COMMAND> --config PATH [OPTIONS]

COMMANDS:
  geometry      Stage table: n, k_n, ell_n, m_n, h_n, H_n, hhat_n
  wre-table     Weak-rational-ergodicity ratios over a time grid
  beta-table    Beta-rational-ergodicity functionals along t = H_n
  normalizers   Time decompositions t = q*H_n + r and the a_t normalizer
  independence  Product-law checks for the last-subcolumn sets
  check         Deterministic invariant suite (exit 0 iff all pass)
  dump-tower    Explicit level-by-level tower as CSV

OPTIONS:
  --config PATH       Experiment configuration file (required)
  --out PATH          Write CSV here instead of stdout
  --precision BITS    Working precision for decimal columns (default 96, min 64)
  --seed N            Fuzz seed for `check` (default 1)
  --memory-cap N      Explicit-tower level cap (default 10000000)
  --help              Show this help

CONFIG:
  Line-oriented `key = value` with [section] headers; see README for the
  [family], [experiment], and [output] keys per command. Times accept
  literals, H<n>, and q*H<n>; sets accept `F` or `stage:lo-hi,...` literals.

EXIT CODES:
  0  success
  1  invariant failure (check)
  2  usage or configuration error
  3  horizon or memory cap exceeded
"
}

struct Args {
    command: String,
    config: PathBuf,
    out: Option<PathBuf>,
    opts: Options,
}

fn parse_args(argv: &[String]) -> Result<Args, CliError> {
    if argv.is_empty() || argv[0] == "--help" || argv[0] == "-h" {
        return Err(CliError::Usage("no command given".into()));
    }
    let command = argv[0].clone();
    if !COMMANDS.contains(&command.as_str()) {
        return Err(CliError::Usage(format!("unknown command {command:?}")));
    }
    let mut config = None;
    let mut out = None;
    let mut opts = Options::default();
    let mut it = argv[1..].iter();
    while let Some(flag) = it.next() {
        let mut value = |name: &str| {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("{name} needs a value")))
        };
        match flag.as_str() {
            "--config" => config = Some(PathBuf::from(value("--config")?)),
            "--out" => out = Some(PathBuf::from(value("--out")?)),
            "--precision" => {
                opts.precision = value("--precision")?
                    .parse()
                    .map_err(|_| CliError::Usage("bad --precision".into()))?;
                opts.precision_flag = true;
            }
            "--seed" => {
                opts.seed = value("--seed")?
                    .parse()
                    .map_err(|_| CliError::Usage("bad --seed".into()))?
            }
            "--memory-cap" => {
                opts.memory_cap = value("--memory-cap")?
                    .parse()
                    .map_err(|_| CliError::Usage("bad --memory-cap".into()))?
            }
            "--help" | "-h" => return Err(CliError::Usage("help requested".into())),
            other => return Err(CliError::Usage(format!("unknown flag {other:?}"))),
        }
    }
    let config = config.ok_or_else(|| CliError::Usage("--config is required".into()))?;
    Ok(Args {
        command,
        config,
        out,
        opts,
    })
}

fn run(argv: &[String]) -> Result<(), (i32, String)> {
    let args = parse_args(argv).map_err(|e| (e.exit_code(), e.message()))?;
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        (
            2,
            format!("config error: cannot read {}: {e}", args.config.display()),
        )
    })?;
    let raw = RawConfig::parse(&text).map_err(|e| (e.exit_code(), e.message()))?;
    let csv = match run_command(&args.command, &raw, &args.opts) {
        Ok(csv) => csv,
        Err(CliError::CheckFailed(csv)) => {
            // the table itself is the diagnostic; emit it, then fail
            emit(&args.out, &csv).map_err(|e| (2, e))?;
            return Err((1, "check failed".into()));
        }
        Err(e) => return Err((e.exit_code(), e.message())),
    };
    emit(&args.out, &csv).map_err(|e| (2, e))?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, csv: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| format!("io error: cannot write {}: {e}", path.display())),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            if msg.contains("help requested") || msg.contains("no command given") {
                eprint!("{}", usage());
            } else {
                eprintln!("{msg}");
            }
            ExitCode::from(code as u8)
        }
    }
}
