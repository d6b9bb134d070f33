//! Benchmark configuration: a JSON file overlaid with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use stokes_core::metrics::{MU_D, MU_SM};
use stokes_core::solvers::CoarseChoice;
use stokes_core::{Formulation, SolverKind};

/// Inclusive range of refinement levels, written `A..B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelRange {
    pub min: usize,
    pub max: usize,
}

impl LevelRange {
    pub fn iter(self) -> std::ops::RangeInclusive<usize> {
        self.min..=self.max
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

impl FromStr for LevelRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad level `{t}` in `{s}`"))
        };
        let (min, max) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let l = parse(s)?;
                (l, l)
            }
        };
        if min > max {
            return Err(format!("empty level range `{s}`"));
        }
        Ok(LevelRange { min, max })
    }
}

impl Serialize for LevelRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LevelRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Md,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Md => "md",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Md),
            "json" => Ok(Format::Json),
            other => Err(format!(
                "unknown format `{other}` (expected csv, md or json)"
            )),
        }
    }
}

/// One FMG variant: `cycles` saddle `Vvar(n, n)` cycles per level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FmgVariant {
    pub cycles: usize,
    pub n: usize,
}

impl FmgVariant {
    /// The eight standard variants: one or two cycles of `Vvar(n, n)` for
    /// `n` in 1, 2, 3, 5.
    pub fn standard() -> Vec<FmgVariant> {
        let mut v = Vec::new();
        for cycles in [1, 2] {
            for n in [1, 2, 3, 5] {
                v.push(FmgVariant { cycles, n });
            }
        }
        v
    }
}

impl fmt::Display for FmgVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cycles {
            1 => write!(f, "Vvar({0},{0})", self.n),
            k => write!(f, "{k}Vvar({0},{0})", self.n),
        }
    }
}

impl FromStr for FmgVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || format!("bad FMG variant `{s}` (expected e.g. Vvar(2,2) or 2Vvar(2,2))");
        let t = s.trim();
        let (count, rest) = t.split_at(t.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?);
        let cycles = if count.is_empty() {
            1
        } else {
            count.parse().map_err(|_| bad())?
        };
        let inner = rest
            .strip_prefix("Vvar(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let (a, b): (usize, usize) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a != b || a == 0 || cycles == 0 {
            return Err(bad());
        }
        Ok(FmgVariant { cycles, n: a })
    }
}

impl Serialize for FmgVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FmgVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Coarse mesh file; the built-in unit cube when absent.
    pub mesh: Option<PathBuf>,
    pub formulation: Formulation,
    pub solvers: Vec<SolverKind>,
    pub levels: LevelRange,
    pub eps: f64,
    pub seeds: Vec<u64>,
    pub coarse: CoarseChoice,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub include_setup: bool,
    pub jobs: usize,
    /// Outer iteration cap; each solver's own default when absent.
    pub max_iters: Option<usize>,
    pub fmg_variants: Vec<FmgVariant>,
    /// Lattice updates per second and thread.
    pub mu_sm: f64,
    /// Cost of an `A2` smoothing step relative to `A1`.
    pub mu_d: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            mesh: None,
            formulation: Formulation::Laplace,
            solvers: SolverKind::ALL.to_vec(),
            levels: LevelRange { min: 2, max: 4 },
            eps: 1e-8,
            seeds: vec![0],
            coarse: CoarseChoice::Tol,
            format: Format::Md,
            out: None,
            include_setup: false,
            jobs: 1,
            max_iters: None,
            fmg_variants: FmgVariant::standard(),
            mu_sm: MU_SM,
            mu_d: MU_D,
        }
    }
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            bail!("no solver selected");
        }
        if self.seeds.is_empty() {
            bail!("no seed given");
        }
        if self.fmg_variants.is_empty() {
            bail!("no FMG variant selected");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            bail!("eps must lie in (0, 1), got {}", self.eps);
        }
        if self.max_iters == Some(0) {
            bail!("max_iters must be at least 1");
        }
        if self.jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        if !(self.mu_sm > 0.0 && self.mu_d > 0.0) {
            bail!("machine constants must be positive");
        }
        Ok(())
    }
}
