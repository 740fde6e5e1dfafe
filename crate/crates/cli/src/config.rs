//! Experiment configuration files.

use std::fmt;
use std::str::FromStr;

use effdyn::dynamics::System;
use effdyn::measure::ZooMeasure;
use effdyn::numerics::Rational;
use effdyn::space::{Point, SpaceDescriptor};
use effdyn::symbolic::ComputablePartition;
use serde::Deserialize;

pub const SYSTEMS: &[(&str, &str)] = &[
    ("doubling", "x -> 2x mod 1 on the circle"),
    ("tent", "tent map on [0, 1]"),
    ("rotation", "x -> x + alpha mod 1; alpha = \"p/q\" or \"sqrt2-1\""),
    ("shift", "full shift on `alphabet` symbols with the uniform measure"),
    ("markov", "shift with the Markov measure of `transition`"),
];

pub const ESTIMATORS: &[(&str, &str)] = &[
    ("block", "Shannon block entropy H(xi_n) and its increments over the n grid"),
    ("local-info", "local information -log2 mu[xi_n(x)] at each n"),
    ("ksym", "compressed symbolic orbit rate at each n"),
    ("brudno", "pseudo-orbit code rate for each eps = 2^-p"),
    ("h1", "spanning/separated set counts and their slope in n"),
    ("null-cover", "weights and coverage of a null s-cover built from spanning sets"),
    ("birkhoff", "orbit frequency of the interval `target` at each n"),
    ("typicality", "empirical versus reference mass on dyadic sets up to `level`"),
    ("recurrence", "running minimum of d(x, T^k x) over k <= n"),
];

const COMPRESSORS: &[&str] = &["lz78", "lz77", "best-of"];

/// A configuration problem, located by its `section.key`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { field: field.to_string(), message: message.into() })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    pub system: SystemSpec,
    pub measure: Option<MeasureSpec>,
    pub partition: Option<PartitionSpec>,
    pub estimator: EstimatorSpec,
    #[serde(default)]
    pub caps: Caps,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output path without extension; `.csv` and `.json` are written.
    pub output: Option<String>,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: String,
    pub alpha: Option<String>,
    pub alphabet: Option<u8>,
    pub transition: Option<Vec<Vec<String>>>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub kind: String,
    pub probs: Option<Vec<String>>,
    pub transition: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub kind: String,
    pub cuts: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub kind: String,
    pub n: Vec<usize>,
    pub p: Option<Vec<u32>>,
    /// Random starting points, one per seed.
    pub seeds: Option<Vec<u64>>,
    /// Rational starting points.
    pub points: Option<Vec<String>>,
    pub compressor: Option<String>,
    pub target: Option<Vec<String>>,
    pub level: Option<u32>,
    pub tol: Option<f64>,
    pub s: Option<f64>,
    pub k_max: Option<usize>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Bits of input precision an orbit may request.
    pub precision: Option<u64>,
    /// Largest accepted value in the n grid.
    pub max_n: Option<usize>,
}

fn rational(field: &str, s: &str) -> Result<Rational, ConfigError> {
    Rational::from_str(s).or_else(|e| err(field, e.to_string()))
}

fn matrix(field: &str, rows: &[Vec<String>]) -> Result<Vec<Vec<Rational>>, ConfigError> {
    rows.iter().map(|r| r.iter().map(|s| rational(field, s)).collect()).collect()
}

impl Config {
    /// Parses and validates; TOML syntax errors carry their line and column.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| ConfigError { field: String::new(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.experiment.workers == 0 {
            return err("experiment.workers", "must be at least 1");
        }
        if !SYSTEMS.iter().any(|(k, _)| *k == self.system.kind) {
            return err("system.kind", format!("unknown system {:?}", self.system.kind));
        }
        let e = &self.estimator;
        if !ESTIMATORS.iter().any(|(k, _)| *k == e.kind) {
            return err("estimator.kind", format!("unknown estimator {:?}", e.kind));
        }
        if e.n.is_empty() {
            return err("estimator.n", "grid is empty");
        }
        if e.n.contains(&0) {
            return err("estimator.n", "grid values must be at least 1");
        }
        if let Some(cap) = self.caps.precision {
            if cap == 0 {
                return err("caps.precision", "must be positive");
            }
        }
        if let Some(m) = self.caps.max_n {
            if m == 0 {
                return err("caps.max_n", "must be positive");
            }
            if let Some(&big) = e.n.iter().find(|&&n| n > m) {
                return err("estimator.n", format!("{big} exceeds caps.max_n = {m}"));
            }
        }
        if matches!(e.kind.as_str(), "brudno" | "h1" | "null-cover") {
            match &e.p {
                None => return err("estimator.p", format!("required by {}", e.kind)),
                Some(p) if p.is_empty() => return err("estimator.p", "grid is empty"),
                _ => {}
            }
        }
        if let Some(s) = &e.seeds {
            if s.is_empty() {
                return err("estimator.seeds", "list is empty");
            }
        }
        if let Some(p) = &e.points {
            if p.is_empty() {
                return err("estimator.points", "list is empty");
            }
        }
        if let Some(c) = &e.compressor {
            if !COMPRESSORS.contains(&c.as_str()) {
                return err("estimator.compressor", format!("unknown compressor {c:?}"));
            }
        }
        if e.kind == "birkhoff" {
            match &e.target {
                Some(t) if t.len() == 2 => {
                    let (a, b) = (rational("estimator.target", &t[0])?, rational("estimator.target", &t[1])?);
                    if a >= b {
                        return err("estimator.target", "needs a < b");
                    }
                }
                _ => return err("estimator.target", "birkhoff needs target = [a, b]"),
            }
        }
        if e.kind == "null-cover" && e.s.is_none() {
            return err("estimator.s", "required by null-cover");
        }
        if let Some(t) = e.tol {
            if t.is_nan() || t <= 0.0 {
                return err("estimator.tol", "must be positive");
            }
        }
        self.system()?;
        self.partition()?;
        self.measure()?;
        self.points()?;
        Ok(())
    }

    pub fn system(&self) -> Result<System, ConfigError> {
        let s = &self.system;
        let sys = match s.kind.as_str() {
            "doubling" => System::doubling(),
            "tent" => System::tent(),
            "rotation" => match s.alpha.as_deref() {
                None => return err("system.alpha", "required by rotation"),
                Some("sqrt2-1") => System::golden_rotation(),
                Some(a) => {
                    let a = rational("system.alpha", a)?;
                    if a.is_negative() || a >= Rational::one() {
                        return err("system.alpha", "must lie in [0, 1)");
                    }
                    System::rotation_rational(a)
                }
            },
            "shift" => match s.alphabet {
                Some(k) if k >= 2 => System::shift(k),
                _ => return err("system.alphabet", "shift needs alphabet >= 2"),
            },
            "markov" => {
                let Some(t) = &s.transition else { return err("system.transition", "required by markov") };
                let mu = ZooMeasure::markov(matrix("system.transition", t)?)
                    .or_else(|e| err("system.transition", e.to_string()))?;
                System::markov_shift(mu).or_else(|e| err("system.transition", e.to_string()))?
            }
            other => return err("system.kind", format!("unknown system {other:?}")),
        };
        let sys = match &s.label {
            Some(l) => sys.with_name(l.clone()),
            None => sys,
        };
        Ok(match self.caps.precision {
            Some(c) => sys.with_precision_cap(c),
            None => sys,
        })
    }

    pub fn space(&self) -> Result<SpaceDescriptor, ConfigError> {
        Ok(self.system()?.space.clone())
    }

    pub fn partition(&self) -> Result<ComputablePartition, ConfigError> {
        let space = self.space()?;
        let Some(p) = &self.partition else {
            return Ok(match space.alphabet() {
                Some(k) => ComputablePartition::symbols(k),
                None => ComputablePartition::halves(space),
            });
        };
        match p.kind.as_str() {
            "halves" => Ok(ComputablePartition::halves(space)),
            "symbols" => match space.alphabet() {
                Some(k) => Ok(ComputablePartition::symbols(k)),
                None => err("partition.kind", "symbols needs a sequence space"),
            },
            "cuts" => {
                let Some(c) = &p.cuts else { return err("partition.cuts", "required by cuts") };
                let cuts = c.iter().map(|s| rational("partition.cuts", s)).collect::<Result<Vec<_>, _>>()?;
                ComputablePartition::cuts(space, cuts).or_else(|e| err("partition.cuts", e.to_string()))
            }
            other => err("partition.kind", format!("unknown partition {other:?}")),
        }
    }

    /// The configured measure, defaulting to the system's own.
    pub fn measure(&self) -> Result<Option<ZooMeasure>, ConfigError> {
        let space = self.space()?;
        let Some(m) = &self.measure else { return Ok(self.system()?.measure.clone()) };
        let mu = match m.kind.as_str() {
            "lebesgue" => ZooMeasure::lebesgue(space.clone()),
            "uniform" => match space.alphabet() {
                Some(k) => ZooMeasure::uniform(k),
                None => return err("measure.kind", "uniform needs a sequence space"),
            },
            "bernoulli" => {
                let Some(p) = &m.probs else { return err("measure.probs", "required by bernoulli") };
                let p = p.iter().map(|s| rational("measure.probs", s)).collect::<Result<Vec<_>, _>>()?;
                ZooMeasure::bernoulli(p).or_else(|e| err("measure.probs", e.to_string()))?
            }
            "markov" => {
                let Some(t) = &m.transition else { return err("measure.transition", "required by markov") };
                ZooMeasure::markov(matrix("measure.transition", t)?)
                    .or_else(|e| err("measure.transition", e.to_string()))?
            }
            other => return err("measure.kind", format!("unknown measure {other:?}")),
        };
        if mu.space_descriptor() != space {
            return err("measure.kind", format!("measure lives on {:?}, system on {space:?}", mu.space_descriptor()));
        }
        Ok(Some(mu))
    }

    /// Starting points: the rational `points`, then one random point per
    /// seed; the experiment seed when neither is given.
    pub fn points(&self) -> Result<Vec<Point>, ConfigError> {
        let space = self.space()?;
        let mut out = Vec::new();
        for s in self.estimator.points.iter().flatten() {
            let x = rational("estimator.points", s)?;
            out.push(Point::rational(space.clone(), x).or_else(|e| err("estimator.points", e.to_string()))?);
        }
        let seeds = match (&self.estimator.seeds, out.is_empty()) {
            (Some(s), _) => s.clone(),
            (None, true) => vec![self.experiment.seed],
            (None, false) => vec![],
        };
        for seed in seeds {
            out.push(Point::random(space.clone(), seed).or_else(|e| err("estimator.seeds", e.to_string()))?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[experiment]
name = "t"

[system]
kind = "doubling"

[estimator]
kind = "block"
n = [1, 2, 3]
"#;

    #[test]
    fn parses_minimal_config() {
        let c = Config::parse(BASE).unwrap();
        assert_eq!(c.experiment.workers, 1);
        assert_eq!(c.system().unwrap().name, "doubling");
        assert_eq!(c.points().unwrap().len(), 1);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let e = Config::parse(&BASE.replace("n = [1, 2, 3]", "n = []")).unwrap_err();
        assert_eq!(e.field, "estimator.n");
    }

    #[test]
    fn diagnostics_name_the_field() {
        let e = Config::parse(&BASE.replace("\"doubling\"", "\"baker\"")).unwrap_err();
        assert_eq!(e.field, "system.kind");
        let e = Config::parse(&BASE.replace("kind = \"block\"", "kind = \"brudno\"")).unwrap_err();
        assert_eq!(e.field, "estimator.p");
        let e = Config::parse(&BASE.replace("[system]", "[system]\nalpha = \"1/0\"\nkind2 = 1")).unwrap_err();
        assert!(e.message.contains("line"), "{e}");
        let e = Config::parse(&format!("{BASE}\n[caps]\nmax_n = 2\n")).unwrap_err();
        assert_eq!(e.field, "estimator.n");
    }

    #[test]
    fn rotation_and_markov() {
        let r = BASE.replace("\"doubling\"", "\"rotation\"\nalpha = \"1/3\"");
        assert!(Config::parse(&r).is_ok());
        let r = BASE.replace("\"doubling\"", "\"rotation\"\nalpha = \"3/2\"");
        assert_eq!(Config::parse(&r).unwrap_err().field, "system.alpha");
        let m = BASE.replace("\"doubling\"", "\"markov\"\ntransition = [[\"9/10\", \"1/10\"], [\"1/2\", \"1/2\"]]");
        let c = Config::parse(&m).unwrap();
        assert_eq!(c.partition().unwrap().len(), 2);
        assert!(c.measure().unwrap().is_some());
    }
}
