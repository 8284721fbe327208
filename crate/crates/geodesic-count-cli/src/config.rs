//! Command-line flags, the optional TOML config file and the resolved [`RunConfig`].
//!
//! Precedence: flags, then the config file, then `GEODESIC_COUNT_CACHE` (cache
//! path only), then built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use geodesic_count::counting::Branch;
use geodesic_count::group::is_prime;
use geodesic_count::verify::{Suite, Tolerances};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CACHE_ENV: &str = "GEODESIC_COUNT_CACHE";
pub const DEFAULT_P: u64 = 3;
pub const DEFAULT_XMAX: f64 = 1000.0;
pub const DEFAULT_D: f64 = 0.1;
pub const DEFAULT_WINDOWS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl From<Sign> for Branch {
    fn from(s: Sign) -> Branch {
        match s {
            Sign::Plus => Branch::Plus,
            Sign::Minus => Branch::Minus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Lin,
    Geo,
}

/// `lin:N` or `geo:N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub spacing: Spacing,
    pub count: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, n) = s.split_once(':').ok_or_else(|| format!("grid `{s}` is not lin:N or geo:N"))?;
        let spacing = match kind {
            "lin" => Spacing::Lin,
            "geo" => Spacing::Geo,
            _ => return Err(format!("grid spacing `{kind}` is not lin or geo")),
        };
        let count = n.parse().map_err(|_| format!("grid count `{n}` is not an integer"))?;
        Ok(GridSpec { spacing, count })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.spacing {
            Spacing::Lin => "lin",
            Spacing::Geo => "geo",
        };
        write!(f, "{kind}:{}", self.count)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl GridSpec {
    /// Samples on (lo, hi]: lin gives lo + (hi − lo)k/N for k = 1..N, geo gives
    /// lo·(hi/lo)^{k/(N−1)} for k = 0..N−1. A collapsed range yields one point.
    pub fn points(&self, lo: f64, hi: f64) -> Result<Vec<f64>, CliError> {
        if hi == lo {
            return Ok(vec![hi]);
        }
        let n = self.count;
        match self.spacing {
            Spacing::Lin => Ok((1..=n).map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 }).collect()),
            Spacing::Geo => {
                if lo <= 0.0 {
                    return Err(CliError::Usage("a geometric grid needs --xmin > 0".into()));
                }
                let r = hi / lo;
                Ok((0..n)
                    .map(|k| if k + 1 == n { hi } else { lo * r.powf(k as f64 / (n - 1) as f64) })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "geodesic-count", version, about = "Double cosets, ideal correlations and trace-formula checks over Z[√2]")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Clone, Debug, Default, clap::Args)]
pub struct Flags {
    /// Prime level p.
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// Correlation branch.
    #[arg(long, global = true, value_enum)]
    pub sign: Option<Sign>,
    /// Lower end of a scan range.
    #[arg(long, global = true)]
    pub xmin: Option<f64>,
    /// Upper end of the range.
    #[arg(long, global = true)]
    pub xmax: Option<f64>,
    /// Smoothing fraction D in (0, 1).
    #[arg(long, global = true)]
    pub d: Option<f64>,
    /// Sample grid, lin:N or geo:N.
    #[arg(long, global = true)]
    pub grid: Option<GridSpec>,
    /// Sieve cache file.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Tolerance override NAME=VALUE; repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VAL")]
    pub tol: Vec<String>,
    /// TOML file supplying any of the above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write the ideal-count table for n ≤ limit to a cache file.
    Sieve {
        #[arg(long)]
        limit: u64,
    },
    /// S(x), M(x), E(x) on a grid up to --xmax.
    Correlate,
    /// Run module verification suites (all four when --suite is absent).
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Vec<SuiteName>,
    },
    /// E(x) over [--xmin, --xmax] with log-log exponent fits.
    ErrorScan {
        /// Geometric windows for the RMS fit.
        #[arg(long, default_value_t = DEFAULT_WINDOWS)]
        windows: usize,
    },
    /// c_p and the main-term constants for --p.
    Mainterm,
    /// Double-coset classes with |B| ≤ --xmax.
    Cosets,
    /// N1..N4, the sign-class counts and pair counts at --xmax.
    Report,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SuiteName(#[serde(serialize_with = "ser_suite")] pub Suite);

fn ser_suite<S: serde::Serializer>(s: &Suite, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(suite_str(*s))
}

pub fn suite_str(s: Suite) -> &'static str {
    match s {
        Suite::Geometry => "geometry",
        Suite::Specfun => "specfun",
        Suite::Trace => "trace",
        Suite::Group => "group",
    }
}

fn parse_suite(s: &str) -> Result<SuiteName, String> {
    s.parse().map(SuiteName)
}

/// Keys accepted in the config file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<u64>,
    pub sign: Option<Sign>,
    pub xmin: Option<f64>,
    pub xmax: Option<f64>,
    pub d: Option<f64>,
    pub grid: Option<GridSpec>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub tol: BTreeMap<String, f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Resource(format!("reading config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub p: u64,
    pub sign: Sign,
    pub xmin: Option<f64>,
    pub x_max: f64,
    pub d: f64,
    pub grid: Option<GridSpec>,
    pub tol: BTreeMap<String, f64>,
    pub cache_path: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub workers: Option<usize>,
    /// Set when --p or --xmax was given explicitly.
    #[serde(skip)]
    pub explicit_point: bool,
}

impl RunConfig {
    /// Merges flags over `file` over defaults; `env_cache` is the value of
    /// `GEODESIC_COUNT_CACHE`.
    pub fn resolve(command: Command, flags: Flags, file: FileConfig, env_cache: Option<PathBuf>) -> Result<Self, CliError> {
        let mut tol = file.tol;
        let mut parsed = Tolerances::new();
        for spec in &flags.tol {
            parsed.parse_override(spec).map_err(CliError::Usage)?;
            let (name, value) = spec.split_once('=').expect("validated above");
            tol.insert(name.trim().to_string(), value.trim().parse().expect("validated above"));
        }
        for (name, &value) in &tol {
            if !(value >= 0.0) {
                return Err(CliError::Usage(format!("tolerance {name} must be non-negative")));
            }
        }
        let explicit_point = flags.p.or(file.p).is_some() || flags.xmax.or(file.xmax).is_some();
        let cfg = RunConfig {
            command,
            p: flags.p.or(file.p).unwrap_or(DEFAULT_P),
            sign: flags.sign.or(file.sign).unwrap_or(Sign::Plus),
            xmin: flags.xmin.or(file.xmin),
            x_max: flags.xmax.or(file.xmax).unwrap_or(DEFAULT_XMAX),
            d: flags.d.or(file.d).unwrap_or(DEFAULT_D),
            grid: flags.grid.or(file.grid),
            tol,
            cache_path: flags.cache.or(file.cache).or(env_cache),
            out: flags.out.or(file.out),
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
            workers: flags.workers.or(file.workers),
            explicit_point,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !is_prime(self.p as i64) {
            return usage(format!("--p {} is not prime", self.p));
        }
        if !(self.d > 0.0 && self.d < 1.0) {
            return usage(format!("--d {} must lie in (0, 1)", self.d));
        }
        if !(self.x_max.is_finite() && self.x_max >= 0.0) {
            return usage(format!("--xmax {} must be a finite non-negative number", self.x_max));
        }
        if let Some(lo) = self.xmin {
            if !(lo.is_finite() && lo >= 0.0 && lo <= self.x_max) {
                return usage(format!("--xmin {lo} must lie in [0, xmax]"));
            }
        }
        if let Some(g) = self.grid {
            if g.count < 2 {
                return usage(format!("grid {g} needs at least 2 points"));
            }
        }
        if self.workers == Some(0) {
            return usage("--workers must be at least 1".into());
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::new();
        for (k, &v) in &self.tol {
            t.set(k.clone(), v);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags::default()
    }

    #[test]
    fn grid_parsing() {
        assert_eq!("geo:30".parse::<GridSpec>().unwrap(), GridSpec { spacing: Spacing::Geo, count: 30 });
        assert!("log:3".parse::<GridSpec>().is_err());
        assert!("lin".parse::<GridSpec>().is_err());
        assert!("lin:x".parse::<GridSpec>().is_err());
    }

    #[test]
    fn grid_points() {
        let lin = GridSpec { spacing: Spacing::Lin, count: 5 };
        assert_eq!(lin.points(0.0, 5.0).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(lin.points(0.0, 0.0).unwrap(), vec![0.0]);
        let geo = GridSpec { spacing: Spacing::Geo, count: 3 };
        let pts = geo.points(1e4, 1e6).unwrap();
        assert_eq!(pts.len(), 3);
        assert!((pts[1] - 1e5).abs() < 1e-6);
        assert_eq!(pts[2], 1e6);
        assert!(geo.points(0.0, 10.0).is_err());
    }

    #[test]
    fn precedence() {
        let file = FileConfig { p: Some(5), d: Some(0.3), xmax: Some(50.0), cache: Some("file.bin".into()), ..Default::default() };
        let mut f = flags();
        f.p = Some(7);
        let cfg = RunConfig::resolve(Command::Mainterm, f, file, Some("env.bin".into())).unwrap();
        assert_eq!(cfg.p, 7);
        assert_eq!(cfg.d, 0.3);
        assert_eq!(cfg.x_max, 50.0);
        assert_eq!(cfg.cache_path, Some(PathBuf::from("file.bin")));

        let cfg = RunConfig::resolve(Command::Mainterm, flags(), FileConfig::default(), Some("env.bin".into())).unwrap();
        assert_eq!(cfg.d, DEFAULT_D);
        assert_eq!(cfg.p, DEFAULT_P);
        assert_eq!(cfg.cache_path, Some(PathBuf::from("env.bin")));
        assert!(!cfg.explicit_point);
    }

    #[test]
    fn invariants_rejected() {
        let bad = |f: Flags| RunConfig::resolve(Command::Correlate, f, FileConfig::default(), None).is_err();
        assert!(bad(Flags { d: Some(1.0), ..flags() }));
        assert!(bad(Flags { d: Some(0.0), ..flags() }));
        assert!(bad(Flags { p: Some(4), ..flags() }));
        assert!(bad(Flags { xmax: Some(-1.0), ..flags() }));
        assert!(bad(Flags { grid: Some(GridSpec { spacing: Spacing::Lin, count: 1 }), ..flags() }));
        assert!(bad(Flags { tol: vec!["x".into()], ..flags() }));
        assert!(bad(Flags { workers: Some(0), ..flags() }));
    }

    #[test]
    fn tolerance_merge() {
        let file = FileConfig { tol: BTreeMap::from([("a".to_string(), 1.0), ("b".to_string(), 2.0)]), ..Default::default() };
        let f = Flags { tol: vec!["b=0".into()], ..flags() };
        let cfg = RunConfig::resolve(Command::Mainterm, f, file, None).unwrap();
        let t = cfg.tolerances();
        assert_eq!(t.get("a", 9.0), 1.0);
        assert_eq!(t.get("b", 9.0), 0.0);
        assert_eq!(t.get("c", 9.0), 9.0);
    }
}
