//! Flat `key = value` experiment files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::portfolio::{parse_real, LagKind, Mode, PowerLawSchedule};
use crate::problems::ProblemKey;
use crate::solvers::SolverSpec;

/// Environment variable overriding `base_seed`.
pub const SEED_ENV: &str = "NP_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Solo,
    Portfolio(Mode),
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunMode::Solo => f.write_str("solo"),
            RunMode::Portfolio(m) => m.fmt(f),
        }
    }
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "solo" => Ok(RunMode::Solo),
            other => Ok(RunMode::Portfolio(other.parse()?)),
        }
    }
}

/// Optional slope band checked by `run --check`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeCheck {
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub problem: ProblemKey,
    pub solvers: Vec<SolverSpec>,
    pub mode: RunMode,
    pub schedule: PowerLawSchedule,
    pub sharing: bool,
    pub budget: u64,
    pub repetitions: u64,
    pub base_seed: u64,
    pub output: PathBuf,
    pub dense: bool,
    pub check: Option<SlopeCheck>,
}

/// Splits on commas that are not inside braces.
fn split_list(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '{' => depth += 1,
            '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Accepts integers and reals such as `1e5` or `4e5` that are whole numbers.
fn parse_count(key: &str, v: &str) -> Result<u64> {
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = v.parse().map_err(|_| Error::Config(format!("`{key}` must be a count, got `{v}`")))?;
    if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(Error::Config(format!("`{key}` must be a whole number, got `{v}`")))
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` must be true or false, got `{v}`"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut label = None;
        let mut problem = None;
        let mut solvers_raw = None;
        let mut mode = RunMode::Solo;
        let mut a = 4.2;
        let mut b = 2.2;
        let mut lag = LagKind::Pow(1.0 / 4.2);
        let mut sharing = false;
        let mut budget = None;
        let mut repetitions = 50;
        let mut base_seed = 0;
        let mut output = PathBuf::from("results");
        let mut dense = false;
        let (mut check_min, mut check_max) = (None, None);

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "label" => label = Some(value.to_string()),
                "problem" => problem = Some(value.parse::<ProblemKey>()?),
                "solvers" | "solver" => solvers_raw = Some(split_list(value)),
                "mode" => mode = value.parse()?,
                "schedule.a" => a = parse_real(value)?,
                "schedule.b" => b = parse_real(value)?,
                "schedule.lag" => lag = value.parse()?,
                "sharing" => sharing = parse_bool(key, value)?,
                "budget" => budget = Some(parse_count(key, value)?),
                "repetitions" => repetitions = parse_count(key, value)?,
                "base_seed" => base_seed = parse_count(key, value)?,
                "output" => output = PathBuf::from(value),
                "dense" => dense = parse_bool(key, value)?,
                "check.min_slope" => check_min = Some(parse_real(value)?),
                "check.max_slope" => check_max = Some(parse_real(value)?),
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }

        let problem = problem.ok_or_else(|| Error::Config("missing `problem`".into()))?;
        let profile = match problem {
            ProblemKey::Synthetic { c, alpha } => Some((c, alpha)),
            _ => None,
        };
        let solvers = solvers_raw
            .ok_or_else(|| Error::Config("missing `solvers`".into()))?
            .iter()
            .map(|s| SolverSpec::parse_with_profile(s, profile))
            .collect::<Result<Vec<_>>>()?;
        let budget = budget.ok_or_else(|| Error::Config("missing `budget`".into()))?;
        let schedule = PowerLawSchedule::new(a, b, lag).map_err(|e| Error::Config(e.to_string()))?;
        let check = match (check_min, check_max) {
            (None, None) => None,
            (min, max) => Some(SlopeCheck { min: min.unwrap_or(f64::NEG_INFINITY), max: max.unwrap_or(f64::INFINITY) }),
        };
        let label = label.unwrap_or_else(|| {
            let names: Vec<String> = solvers.iter().map(|s| s.key()).collect();
            format!("{}_{}_{}", problem, mode, names.join("+"))
        });
        let cfg = Self {
            label,
            problem,
            solvers,
            mode,
            schedule,
            sharing,
            budget,
            repetitions,
            base_seed,
            output,
            dense,
            check,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        if self.budget < 10 {
            return bad(format!("budget must be >= 10, got {}", self.budget));
        }
        if self.label.is_empty() || self.label.contains(['/', '\\']) {
            return bad(format!("label `{}` is not a valid file name", self.label));
        }
        match self.mode {
            RunMode::Solo if self.solvers.len() != 1 => {
                bad(format!("solo mode takes exactly one solver, got {}", self.solvers.len()))
            }
            RunMode::Portfolio(_) if self.solvers.len() < 2 => bad("a portfolio needs at least 2 solvers".into()),
            _ => Ok(()),
        }
    }

    /// Applies the `NP_SEED` override when set.
    pub fn with_env_seed(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.base_seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")))?;
        }
        Ok(self)
    }
}
