//! Comparison schedules `(r_n, s_n, lag)` and their theoretical properties.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Relative tolerance under which a real is treated as the nearby integer
/// before rounding up, so `10000^0.25` gives 10 rather than 11.
const SNAP: f64 = 1e-9;

/// `⌈v⌉` with snapping of values within rounding error of an integer.
/// Saturates at `u64::MAX` and maps negative values to 0.
pub fn ceil_real(v: f64) -> u64 {
    if v.is_nan() || v <= 0.0 {
        return 0;
    }
    let r = v.round();
    let c = if (v - r).abs() <= SNAP * r.max(1.0) { r } else { v.ceil() };
    if c >= u64::MAX as f64 {
        u64::MAX
    } else {
        c as u64
    }
}

/// `⌈n^p⌉`
pub fn ceil_pow(n: u64, p: f64) -> u64 {
    ceil_real((n as f64).powf(p))
}

/// Comparison milestones `r`, resampling counts `s` and the lag function.
pub trait Schedule: Send + Sync + fmt::Debug {
    /// Evaluation count per solver at selection `n >= 1`.
    fn r(&self, n: u64) -> u64;
    /// Resamplings per recommendation at selection `n >= 1`.
    fn s(&self, n: u64) -> u64;
    /// Lagged evaluation index; `1 <= lag(m) <= m` for `m >= 1`, `lag(0) = 0`.
    fn lag(&self, m: u64) -> u64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LagKind {
    /// `⌈m^c⌉`, `c ∈ (0, 1]`
    Pow(f64),
    /// `max(1, ⌈ln m⌉)`
    Log,
    /// `lag(m) = m`
    None,
}

impl LagKind {
    pub fn apply(&self, m: u64) -> u64 {
        if m == 0 {
            return 0;
        }
        let v = match *self {
            LagKind::Pow(c) => ceil_pow(m, c),
            LagKind::Log => ceil_real((m as f64).ln()).max(1),
            LagKind::None => m,
        };
        v.clamp(1, m)
    }
}

impl fmt::Display for LagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LagKind::Pow(c) => write!(f, "pow:{c}"),
            LagKind::Log => f.write_str("log"),
            LagKind::None => f.write_str("none"),
        }
    }
}

/// Parses a real or a quotient such as `1/4.2`.
pub fn parse_real(s: &str) -> Result<f64> {
    let bad = || Error::Config(format!("expected a number, got `{s}`"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

impl FromStr for LagKind {
    type Err = Error;

    /// `pow:c`, `log` or `none`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "log" => Ok(LagKind::Log),
            "none" => Ok(LagKind::None),
            _ => {
                let c = s
                    .strip_prefix("pow:")
                    .ok_or_else(|| Error::Config(format!("lag must be pow:<c>, log or none, got `{s}`")))?;
                let c = parse_real(c)?;
                if !(c > 0.0 && c <= 1.0) {
                    return Err(Error::Config(format!("lag exponent must lie in (0, 1], got {c}")));
                }
                Ok(LagKind::Pow(c))
            }
        }
    }
}

/// `r_n = ⌈n^a⌉`, `s_n = ⌈n^b⌉`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawSchedule {
    pub a: f64,
    pub b: f64,
    pub lag: LagKind,
}

impl PowerLawSchedule {
    pub fn new(a: f64, b: f64, lag: LagKind) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(invalid(format!("schedule exponents must be positive, got a={a}, b={b}")));
        }
        if let LagKind::Pow(c) = lag {
            if !(c > 0.0 && c <= 1.0) {
                return Err(invalid(format!("lag exponent must lie in (0, 1], got {c}")));
            }
        }
        Ok(Self { a, b, lag })
    }

    /// `r_n = ⌈n^4.2⌉`, `s_n = ⌈n^2.2⌉`, `lag(m) = ⌈m^(1/4.2)⌉`.
    pub fn experiments() -> Self {
        Self { a: 4.2, b: 2.2, lag: LagKind::Pow(1.0 / 4.2) }
    }

    pub fn with_lag(self, lag: LagKind) -> Self {
        Self { lag, ..self }
    }
}

impl Schedule for PowerLawSchedule {
    fn r(&self, n: u64) -> u64 {
        ceil_pow(n, self.a).max(1)
    }

    fn s(&self, n: u64) -> u64 {
        ceil_pow(n, self.b).max(1)
    }

    fn lag(&self, m: u64) -> u64 {
        self.lag.apply(m)
    }
}

/// One asymptotic condition of a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleReport {
    pub conditions: Vec<ConditionCheck>,
}

impl ScheduleReport {
    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }
}

impl fmt::Display for ScheduleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(f, "{:<12} {}  {}", c.name, if c.holds { "PASS" } else { "FAIL" }, c.detail)?;
        }
        Ok(())
    }
}

/// Checks the exponent conditions of a power-law schedule against
/// `ε_n = C / n^{α*}`:
///
/// * `convergence`: `Σ 1 / (s_j ε²_{lag(r_j)}) < ∞`
/// * `budget`: `Σ_{i<=n} s_i = o(r_n)`
/// * `lag`: `lag(n) = o(n)`
pub fn schedule_validity(p: &PowerLawSchedule, alpha_star: f64) -> ScheduleReport {
    let (a, b) = (p.a, p.b);
    let convergence = match p.lag {
        LagKind::Pow(c) => {
            let e = b - 2.0 * alpha_star * a * c;
            ConditionCheck {
                name: "convergence",
                holds: e > 1.0,
                detail: format!("b - 2 alpha* a c = {e:.4} (needs > 1)"),
            }
        }
        LagKind::None => {
            let e = b - 2.0 * alpha_star * a;
            ConditionCheck {
                name: "convergence",
                holds: e > 1.0,
                detail: format!("b - 2 alpha* a = {e:.4} (needs > 1)"),
            }
        }
        LagKind::Log => ConditionCheck {
            name: "convergence",
            holds: b > 1.0,
            detail: format!("log lag: terms ~ (log j)^(2 alpha*) / j^b, b = {b} (needs > 1)"),
        },
    };
    let budget = ConditionCheck {
        name: "budget",
        holds: b + 1.0 < a,
        detail: format!("b + 1 = {:.4} vs a = {a} (needs b + 1 < a)", b + 1.0),
    };
    let lag = match p.lag {
        LagKind::Pow(c) => ConditionCheck { name: "lag", holds: c < 1.0, detail: format!("c = {c:.4} (needs < 1)") },
        LagKind::Log => ConditionCheck { name: "lag", holds: true, detail: "log lag".into() },
        LagKind::None => ConditionCheck { name: "lag", holds: false, detail: "lag(n) = n".into() },
    };
    ScheduleReport { conditions: vec![convergence, budget, lag] }
}
