//! Config-file loading, flag/file merging and the CLI error type.
//!
//! The config file is a flat `key=value` text format whose keys mirror the
//! long flag names (`lambda=5`, `L=16,32`, `fix=mu=3`, ...). Values given on
//! the command line take precedence over the file. Blank lines and lines
//! starting with `#` are ignored; when a key repeats, the last line wins.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rbg_core::percolation::{PercCriterion, SweepParam};

/// Exit code 2: the request itself is malformed (bad flag, bad config file,
/// out-of-range parameter). Exit code 1: the experiment was configured
/// plausibly but failed while running (overflow cap, censored threshold
/// under `--strict`, I/O).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Experiment(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Experiment(_) => "experiment",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Experiment(m) => m,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Experiment(_) => 1,
        }
    }

    /// Single-line JSON on stderr so schedulers can parse failures.
    pub fn emit_json(&self) {
        let j = serde_json::json!({
            "error": { "kind": self.kind(), "message": self.message() }
        });
        eprintln!("{j}");
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

/// Errors surfacing out of the core library once an experiment is running.
impl From<rbg_core::Error> for CliError {
    fn from(e: rbg_core::Error) -> Self {
        CliError::Experiment(e.to_string())
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Every key any subcommand understands. Unknown keys are rejected (they are
/// almost always typos), but keys that merely do not apply to the current
/// subcommand are allowed so one file can drive a whole sweep farm.
const KNOWN_KEYS: &[&str] = &[
    "lambda", "mu", "conn", "d", "reps", "seed", "L", "grid", "fix", "criterion", "eps-edge",
    "window", "out", "format", "workers", "strict",
];

/// Parsed config file: a key -> raw string map.
#[derive(Debug, Default)]
pub struct FileConfig(HashMap<String, String>);

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config file {}: {e}", path.display())))?;
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(format!(
                    "config file {} line {}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(config_err(format!(
                    "config file {} line {}: unknown key {key:?} (known keys: {})",
                    path.display(),
                    lineno + 1,
                    KNOWN_KEYS.join(", ")
                )));
            }
            map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig(map))
    }

    /// Typed lookup; `Ok(None)` when the key is absent.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                config_err(format!("config key {key:?}: cannot parse {raw:?}: {e}"))
            }),
        }
    }
}

/// CLI flag value, else config file value, else error naming the flag.
pub fn require<T>(flag: &str, cli: Option<T>, file: Result<Option<T>, CliError>) -> Result<T, CliError> {
    match cli {
        Some(v) => Ok(v),
        None => file?.ok_or_else(|| {
            config_err(format!("missing required parameter --{flag} (or config key {flag:?})"))
        }),
    }
}

/// CLI flag value, else config file value, else the given default.
pub fn or_default<T>(cli: Option<T>, file: Result<Option<T>, CliError>, default: T) -> Result<T, CliError> {
    Ok(cli.or(file?).unwrap_or(default))
}

/// CLI flag value, else config file value, else `None`.
pub fn optional<T>(cli: Option<T>, file: Result<Option<T>, CliError>) -> Result<Option<T>, CliError> {
    Ok(cli.or(file?))
}

// ---------------------------------------------------------------------------
// structured flag values
// ---------------------------------------------------------------------------

/// `lo:hi:n` — `n` log-spaced grid values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let ratio = self.hi / self.lo;
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.hi
                } else {
                    self.lo * ratio.powf(i as f64 / (self.n - 1) as f64)
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(format!("expected lo:hi:n, got {s:?}"));
        };
        let lo: f64 = lo.parse().map_err(|_| format!("bad grid lower bound {lo:?}"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("bad grid upper bound {hi:?}"))?;
        let n: usize = n.parse().map_err(|_| format!("bad grid point count {n:?}"))?;
        if !(lo.is_finite() && lo > 0.0 && hi.is_finite() && hi > lo) {
            return Err(format!("grid needs 0 < lo < hi, got {lo}:{hi}"));
        }
        if n < 2 {
            return Err(format!("grid needs at least 2 points, got {n}"));
        }
        Ok(GridSpec { lo, hi, n })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

/// Comma-separated list of positive window sides, e.g. `16,32`.
#[derive(Debug, Clone)]
pub struct SideList(pub Vec<f64>);

impl FromStr for SideList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let sides: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad window side {t:?}")))
            .collect::<Result<_, _>>()?;
        if sides.is_empty() || sides.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(format!("window sides must be positive and finite, got {s:?}"));
        }
        Ok(SideList(sides))
    }
}

/// `lambda=<v>` or `mu=<v>`: which intensity stays fixed during a sweep (the
/// other one is swept over the grid).
#[derive(Debug, Clone, Copy)]
pub struct FixSpec {
    pub fixed: SweepParam,
    pub value: f64,
}

impl FixSpec {
    pub fn swept(&self) -> SweepParam {
        match self.fixed {
            SweepParam::Lambda => SweepParam::Mu,
            SweepParam::Mu => SweepParam::Lambda,
        }
    }
}

impl FromStr for FixSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, value) = s
            .split_once('=')
            .ok_or_else(|| format!("expected lambda=<v> or mu=<v>, got {s:?}"))?;
        let fixed = match name.trim() {
            "lambda" => SweepParam::Lambda,
            "mu" => SweepParam::Mu,
            other => return Err(format!("can only fix lambda or mu, got {other:?}")),
        };
        let value: f64 = value.trim().parse().map_err(|_| format!("bad fixed value {value:?}"))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("fixed intensity must be positive and finite, got {value}"));
        }
        Ok(FixSpec { fixed, value })
    }
}

/// `wrap`, `span` or `frac:<share>` percolation criterion.
#[derive(Debug, Clone, Copy)]
pub struct CriterionSpec(pub PercCriterion);

impl FromStr for CriterionSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wrap" => Ok(CriterionSpec(PercCriterion::Wrap)),
            "span" => Ok(CriterionSpec(PercCriterion::Span)),
            _ => match s.strip_prefix("frac:") {
                Some(x) => {
                    let share: f64 =
                        x.parse().map_err(|_| format!("bad fraction {x:?} in criterion"))?;
                    if !(share > 0.0 && share <= 1.0) {
                        return Err(format!("criterion fraction must be in (0,1], got {share}"));
                    }
                    Ok(CriterionSpec(PercCriterion::Fraction(share)))
                }
                None => Err(format!("unknown criterion {s:?}; expected wrap, span or frac:<x>")),
            },
        }
    }
}

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Csv,
    Json,
}

impl FromStr for OutFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutFormat::Csv),
            "json" => Ok(OutFormat::Json),
            _ => Err(format!("unknown format {s:?}; expected csv or json")),
        }
    }
}

impl fmt::Display for OutFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutFormat::Csv => "csv",
            OutFormat::Json => "json",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_are_log_spaced_and_hit_endpoints() {
        let g: GridSpec = "0.5:8:5".parse().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 5);
        assert_eq!(pts[0], 0.5);
        assert_eq!(pts[4], 8.0);
        for w in pts.windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 1e-12, "ratio {}", w[1] / w[0]);
        }
    }

    #[test]
    fn grid_rejects_malformed() {
        for s in ["1:2", "0:2:4", "2:1:4", "1:2:1", "a:2:4", "1:2:4:8"] {
            assert!(s.parse::<GridSpec>().is_err(), "{s} should fail");
        }
    }

    #[test]
    fn fix_spec_picks_the_other_param() {
        let f: FixSpec = "mu=3".parse().unwrap();
        assert_eq!(f.value, 3.0);
        assert!(matches!(f.swept(), SweepParam::Lambda));
        assert!("sigma=3".parse::<FixSpec>().is_err());
        assert!("mu=-1".parse::<FixSpec>().is_err());
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# sweep farm defaults\nlambda=5\nL=16,32\nfix=mu=3\nstrict=true\n")
            .unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.get::<f64>("lambda").unwrap(), Some(5.0));
        assert_eq!(cfg.get::<SideList>("L").unwrap().unwrap().0, vec![16.0, 32.0]);
        let fix = cfg.get::<FixSpec>("fix").unwrap().unwrap();
        assert_eq!(fix.value, 3.0);
        assert_eq!(cfg.get::<bool>("strict").unwrap(), Some(true));
        assert_eq!(cfg.get::<u64>("seed").unwrap(), None);
    }

    #[test]
    fn config_file_rejects_unknown_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "lambada=5\n").unwrap();
        assert!(FileConfig::load(&path).is_err());
    }
}
