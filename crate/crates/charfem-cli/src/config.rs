//! Run configuration: a flat key-value config file with optional `[section]`
//! headers, every key mirrored by a command-line flag. Flags win over the
//! file; the `CHARFEM_OUT` environment variable wins over `--out`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use charfem::time_basis::BasisPolicy;

use crate::CliError;

/// Quadrature rule selector: `gauss`, `radau`, or `theta:S` with `S` in
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleSpec {
    Gauss,
    Radau,
    Theta(f64),
}

impl RuleSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        if s == "gauss" {
            return Ok(RuleSpec::Gauss);
        }
        if s == "radau" {
            return Ok(RuleSpec::Radau);
        }
        if let Some(arg) = s.strip_prefix("theta:") {
            let v: f64 = arg
                .parse()
                .map_err(|_| CliError::Config(format!("theta parameter {arg:?} is not a number")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Config(format!(
                    "theta parameter {v} outside [0, 1]"
                )));
            }
            return Ok(RuleSpec::Theta(v));
        }
        Err(CliError::Config(format!(
            "unknown rule {s:?}; expected gauss, radau, or theta:S"
        )))
    }
}

/// Mesh motion selector: `static`, `characteristics`, `prescribed:NAME`, or
/// `dilation:RATE`.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionSpec {
    Static,
    Characteristics,
    Prescribed(String),
    Dilation(f64),
}

impl MotionSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        if s == "static" {
            return Ok(MotionSpec::Static);
        }
        if s == "characteristics" {
            return Ok(MotionSpec::Characteristics);
        }
        if let Some(name) = s.strip_prefix("prescribed:") {
            if name.is_empty() {
                return Err(CliError::Config("prescribed motion needs a name".into()));
            }
            return Ok(MotionSpec::Prescribed(name.to_string()));
        }
        if let Some(arg) = s.strip_prefix("dilation:") {
            let v: f64 = arg.parse().map_err(|_| {
                CliError::Config(format!("dilation rate {arg:?} is not a number"))
            })?;
            if !v.is_finite() {
                return Err(CliError::Config(format!("dilation rate {v} not finite")));
            }
            return Ok(MotionSpec::Dilation(v));
        }
        Err(CliError::Config(format!(
            "unknown motion {s:?}; expected static, characteristics, prescribed:NAME, or dilation:RATE"
        )))
    }
}

pub fn parse_basis(s: &str) -> Result<BasisPolicy, CliError> {
    match s {
        "coincident" => Ok(BasisPolicy::Coincident),
        "equispaced" => Ok(BasisPolicy::Equispaced),
        _ => Err(CliError::Config(format!(
            "unknown basis policy {s:?}; expected coincident or equispaced"
        ))),
    }
}

/// Fully resolved configuration for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub benchmark: String,
    pub p: usize,
    pub rule: RuleSpec,
    pub basis: BasisPolicy,
    pub elements: usize,
    pub partitions: usize,
    pub levels: usize,
    pub motion: MotionSpec,
    pub dt_ceiling: Option<f64>,
    pub out_dir: PathBuf,
    /// Reserved for randomized harnesses; parsed and carried, not used by
    /// the built-in commands.
    pub seed: u64,
    pub threads: usize,
}

/// Raw option set coming from the command line (all optional).
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub benchmark: Option<String>,
    pub p: Option<usize>,
    pub rule: Option<String>,
    pub basis: Option<String>,
    pub elements: Option<usize>,
    pub partitions: Option<usize>,
    pub levels: Option<usize>,
    pub motion: Option<String>,
    pub dt_ceiling: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

const KNOWN_KEYS: &[&str] = &[
    "benchmark",
    "p",
    "rule",
    "basis",
    "elements",
    "partitions",
    "levels",
    "motion",
    "dt-ceiling",
    "out",
    "seed",
    "threads",
];

/// Parse the config file text into a key -> value map. Sections group keys
/// visually but share one flat namespace; duplicate keys are rejected.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') || line.len() < 3 {
                return Err(CliError::Config(format!(
                    "line {}: malformed section header {line:?}",
                    lineno + 1
                )));
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected `key = value`, got {line:?}",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "line {}: unknown key {key:?}; known keys: {}",
                lineno + 1,
                KNOWN_KEYS.join(", ")
            )));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(CliError::Config(format!(
                "line {}: duplicate key {key:?}",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

/// Merge precedence: environment (`CHARFEM_OUT`) > flags > config file >
/// defaults, then validate.
pub fn resolve(
    file: &BTreeMap<String, String>,
    cli: &CliOverrides,
    env_out: Option<String>,
) -> Result<RunConfig, CliError> {
    let from_file = |key: &str| file.get(key).map(String::as_str);

    let benchmark = cli
        .benchmark
        .clone()
        .or_else(|| from_file("benchmark").map(str::to_string))
        .ok_or_else(|| CliError::Config("missing benchmark name (--benchmark)".into()))?;

    let p = match (cli.p, from_file("p")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_num("p", v)?,
        (None, None) => 1,
    };
    let rule = match (cli.rule.as_deref(), from_file("rule")) {
        (Some(v), _) => RuleSpec::parse(v)?,
        (None, Some(v)) => RuleSpec::parse(v)?,
        (None, None) => RuleSpec::Gauss,
    };
    let basis = match (cli.basis.as_deref(), from_file("basis")) {
        (Some(v), _) => parse_basis(v)?,
        (None, Some(v)) => parse_basis(v)?,
        (None, None) => BasisPolicy::Coincident,
    };
    let elements = match (cli.elements, from_file("elements")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_num("elements", v)?,
        (None, None) => 16,
    };
    let partitions = match (cli.partitions, from_file("partitions")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_num("partitions", v)?,
        (None, None) => 8,
    };
    let levels = match (cli.levels, from_file("levels")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_num("levels", v)?,
        (None, None) => 1,
    };
    let motion = match (cli.motion.as_deref(), from_file("motion")) {
        (Some(v), _) => MotionSpec::parse(v)?,
        (None, Some(v)) => MotionSpec::parse(v)?,
        (None, None) => MotionSpec::Static,
    };
    let dt_ceiling = match (cli.dt_ceiling, from_file("dt-ceiling")) {
        (Some(v), _) => Some(v),
        (None, Some(v)) => Some(parse_num("dt-ceiling", v)?),
        (None, None) => None,
    };
    let out_dir = match (env_out, &cli.out, from_file("out")) {
        (Some(v), _, _) => PathBuf::from(v),
        (None, Some(v), _) => v.clone(),
        (None, None, Some(v)) => PathBuf::from(v),
        (None, None, None) => PathBuf::from("out"),
    };
    let seed = match (cli.seed, from_file("seed")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_num("seed", v)?,
        (None, None) => 0,
    };
    let threads = match (cli.threads, from_file("threads")) {
        (Some(v), _) => v,
        (None, Some(v)) => parse_num("threads", v)?,
        (None, None) => 1,
    };

    let config = RunConfig {
        benchmark,
        p,
        rule,
        basis,
        elements,
        partitions,
        levels,
        motion,
        dt_ceiling,
        out_dir,
        seed,
        threads,
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), CliError> {
    if config.p < 1 || config.p > charfem::quadrature::MAX_DEGREE {
        return Err(CliError::Config(format!(
            "p = {} outside supported range 1..={}",
            config.p,
            charfem::quadrature::MAX_DEGREE
        )));
    }
    if config.elements < 1 {
        return Err(CliError::Config("elements must be >= 1".into()));
    }
    if config.partitions < 1 {
        return Err(CliError::Config("partitions must be >= 1".into()));
    }
    if config.levels < 1 {
        return Err(CliError::Config("levels must be >= 1".into()));
    }
    if config.threads < 1 {
        return Err(CliError::Config("threads must be >= 1".into()));
    }
    if let Some(c) = config.dt_ceiling {
        if !(c > 0.0) {
            return Err(CliError::Config(format!("dt-ceiling {c} must be positive")));
        }
    }
    Ok(())
}

/// Load the config file (when given), merge with flags and environment.
pub fn load(
    config_path: Option<&std::path::Path>,
    cli: &CliOverrides,
) -> Result<RunConfig, CliError> {
    let file = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    let env_out = std::env::var("CHARFEM_OUT").ok();
    resolve(&file, cli, env_out)
}
