//! Flag and config-file merging, and typed parsing of the merged values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mti_core::harness::Algorithm;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Pretty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    Manchester,
    Quantile,
}

/// Flags shared by every subcommand. Values stay textual until merged with
/// the config file so both sources go through the same parser.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Protocols, comma separated (cpt, polling, pcmti, mmti, sfmti)
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Inventory sizes, comma separated
    #[arg(long = "n")]
    pub n: Option<String>,
    /// Missing fractions, comma separated
    #[arg(long)]
    pub alpha: Option<String>,
    /// Tolerated miss fractions, comma separated (0 = exhaustive)
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Failure probabilities, comma separated
    #[arg(long)]
    pub delta: Option<String>,
    /// Trials per cell
    #[arg(long)]
    pub trials: Option<String>,
    /// Base seed (falls back to MTI_SEED, then 0)
    #[arg(long)]
    pub seed: Option<String>,
    /// Load factor used by the framed baselines
    #[arg(long)]
    pub rho: Option<String>,
    /// Write output here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Emit per-cell summaries instead of per-trial rows
    #[arg(long)]
    pub summary: bool,
    /// Accept epsilon/delta outside the bound window
    #[arg(long)]
    pub allow_out_of_range: bool,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
}

const KEYS: [&str; 13] = [
    "algorithm",
    "n",
    "alpha",
    "epsilon",
    "delta",
    "trials",
    "seed",
    "rho",
    "out",
    "format",
    "summary",
    "allow-out-of-range",
    "inject-fault",
];

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config line {}: expected `key = value`",
                lineno + 1
            ))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Fully parsed configuration for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub algorithms: Vec<Algorithm>,
    pub ns: Vec<usize>,
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub rho: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub summary: bool,
    pub allow_out_of_range: bool,
    pub inject_fault: Option<Fault>,
    /// Cells outside the bound window that were let through.
    pub out_of_range: Vec<String>,
}

pub struct Defaults {
    pub n: &'static str,
    pub trials: &'static str,
    pub format: Format,
}

impl Settings {
    pub fn resolve(args: &CommonArgs, defaults: &Defaults) -> Result<Settings, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let pick =
            |flag: &Option<String>, key: &str| flag.clone().or_else(|| file.get(key).cloned());
        let flag_bool = |flag: bool, key: &str| -> Result<bool, CliError> {
            if flag {
                return Ok(true);
            }
            match file.get(key).map(String::as_str) {
                None | Some("false") => Ok(false),
                Some("true") => Ok(true),
                Some(v) => Err(CliError::Usage(format!("{key}: `{v}` is not true/false"))),
            }
        };

        let algorithms = match pick(&args.algorithm, "algorithm") {
            Some(s) => list(&s, "algorithm", |v| {
                v.parse::<Algorithm>().map_err(|e| e.to_string())
            })?,
            None => Algorithm::ALL.to_vec(),
        };
        let ns = list(
            &pick(&args.n, "n").unwrap_or_else(|| defaults.n.into()),
            "n",
            |v| {
                v.parse::<usize>().map_err(|e| e.to_string()).and_then(|n| {
                    if n >= 1 {
                        Ok(n)
                    } else {
                        Err("must be at least 1".into())
                    }
                })
            },
        )?;
        let alphas = list(
            &pick(&args.alpha, "alpha").unwrap_or_else(|| "0.01".into()),
            "alpha",
            |v| unit_float(v, 0.0, 1.0, "must lie in [0, 1]"),
        )?;
        let epsilons = list(
            &pick(&args.epsilon, "epsilon").unwrap_or_else(|| "0.01".into()),
            "epsilon",
            |v| unit_float(v, 0.0, 1.0, "must lie in [0, 1]"),
        )?;
        let deltas = list(
            &pick(&args.delta, "delta").unwrap_or_else(|| "0.1".into()),
            "delta",
            |v| {
                let d = unit_float(v, 0.0, 1.0, "must lie in [0, 1)")?;
                if d < 1.0 {
                    Ok(d)
                } else {
                    Err("must lie in [0, 1)".into())
                }
            },
        )?;
        let trials = single(
            &pick(&args.trials, "trials").unwrap_or_else(|| defaults.trials.into()),
            "trials",
            |v| {
                v.parse::<u64>().map_err(|e| e.to_string()).and_then(|t| {
                    if t >= 1 {
                        Ok(t)
                    } else {
                        Err("must be at least 1".into())
                    }
                })
            },
        )?;
        let seed_text = pick(&args.seed, "seed").or_else(|| std::env::var("MTI_SEED").ok());
        let seed = match seed_text {
            Some(s) => single(&s, "seed", parse_seed)?,
            None => 0,
        };
        let rho = match pick(&args.rho, "rho") {
            Some(s) => Some(single(&s, "rho", |v| {
                let r: f64 = v
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| e.to_string())?;
                if r > 0.0 && r.is_finite() {
                    Ok(r)
                } else {
                    Err("must be positive".into())
                }
            })?),
            None => None,
        };
        let out = args
            .out
            .clone()
            .or_else(|| file.get("out").map(PathBuf::from));
        let format = match (args.format, file.get("format")) {
            (Some(f), _) => f,
            (None, Some(s)) => Format::from_str(s, true)
                .map_err(|_| CliError::Usage(format!("format: `{s}` is not csv/pretty")))?,
            (None, None) => defaults.format,
        };
        let inject_fault = match (args.inject_fault, file.get("inject-fault")) {
            (Some(f), _) => Some(f),
            (None, Some(s)) => Some(
                Fault::from_str(s, true)
                    .map_err(|_| CliError::Usage(format!("inject-fault: `{s}` unknown")))?,
            ),
            (None, None) => None,
        };
        let summary = flag_bool(args.summary, "summary")?;
        let allow_out_of_range = flag_bool(args.allow_out_of_range, "allow-out-of-range")?;

        let mut out_of_range = Vec::new();
        for &d in &deltas {
            if d >= 1.0 / 3.0 {
                out_of_range.push(format!("delta {d} outside [0, 1/3)"));
            }
        }
        for &e in &epsilons {
            if e > 0.5 {
                out_of_range.push(format!("epsilon {e} outside [0, 1/2]"));
            }
        }
        if !out_of_range.is_empty() && !allow_out_of_range {
            return Err(CliError::Usage(format!(
                "{} (pass --allow-out-of-range to run anyway)",
                out_of_range.join("; ")
            )));
        }

        Ok(Settings {
            algorithms,
            ns,
            alphas,
            epsilons,
            deltas,
            trials,
            seed,
            rho,
            out,
            format,
            summary,
            allow_out_of_range,
            inject_fault,
            out_of_range,
        })
    }
}

fn unit_float(v: &str, lo: f64, hi: f64, rule: &str) -> Result<f64, String> {
    let x: f64 = v
        .parse()
        .map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if (lo..=hi).contains(&x) {
        Ok(x)
    } else {
        Err(rule.to_string())
    }
}

fn parse_seed(v: &str) -> Result<u64, String> {
    match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).map_err(|e| e.to_string()),
        None => v
            .parse()
            .map_err(|e: std::num::ParseIntError| e.to_string()),
    }
}

fn list<T>(
    text: &str,
    name: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Vec<T>, CliError> {
    let items: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(CliError::Usage(format!("{name}: empty list")));
    }
    items
        .into_iter()
        .map(|v| parse(v).map_err(|e| CliError::Usage(format!("{name} `{v}`: {e}"))))
        .collect()
}

fn single<T>(
    text: &str,
    name: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<T, CliError> {
    parse(text.trim()).map_err(|e| CliError::Usage(format!("{name} `{text}`: {e}")))
}
