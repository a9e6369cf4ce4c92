//! Flat `key = value` run configuration.
//!
//! Every subcommand has a fixed key table with defaults. A config file
//! sets any subset; `--set key=value` and the dedicated flags override it.
//! Unknown keys and malformed values are rejected with the line and key.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{source_name}:{line}: {msg}")]
    Syntax { source_name: String, line: usize, msg: String },
    #[error("{source_name}:{line}: unknown key `{key}` for subcommand {subcommand}")]
    UnknownKey { source_name: String, line: usize, key: String, subcommand: Subcommand },
    #[error("key `{key}`: {msg} (got `{value}`)")]
    BadValue { key: String, value: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Read { path: PathBuf, msg: String },
    #[error("subcommand mismatch: file says {file}, command line says {cli}")]
    SubcommandMismatch { file: Subcommand, cli: Subcommand },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subcommand {
    Levelscan,
    SlabLte,
    SlabExp,
    Domain3d,
    Nonexist,
    ThreeLevel,
    Verify,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Levelscan,
        Subcommand::SlabLte,
        Subcommand::SlabExp,
        Subcommand::Domain3d,
        Subcommand::Nonexist,
        Subcommand::ThreeLevel,
        Subcommand::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Levelscan => "levelscan",
            Subcommand::SlabLte => "slab-lte",
            Subcommand::SlabExp => "slab-exp",
            Subcommand::Domain3d => "domain3d",
            Subcommand::Nonexist => "nonexist",
            Subcommand::ThreeLevel => "three-level",
            Subcommand::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Subcommand> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Keys specific to this subcommand with their defaults.
    fn keys(self) -> &'static [(&'static str, Kind, &'static str)] {
        use Kind::*;
        match self {
            Subcommand::Levelscan => &[
                ("t1_min", Pos, "10"),
                ("t1_max", Pos, "12"),
                ("t2_min", Pos, "10"),
                ("t2_max", Pos, "12"),
                ("step", Pos, "0.1"),
                ("levels", Count, "8"),
                ("prefactor", Word(&["printed", "consistent"]), "printed"),
                ("r_max", Pos, "12"),
                ("n_r", Count, "96"),
                ("n_rho", Count, "96"),
                ("n_theta", Count, "48"),
            ],
            Subcommand::SlabLte => &[
                ("l", Pos, "1"),
                ("n_y", Count, "401"),
                ("grid", Word(&["graded", "uniform"]), "graded"),
                ("j0", Text, "polynomial:0,1"),
                ("t0", Pos, "2"),
                ("mass", Text, "none"),
                ("tol", Pos, "1e-14"),
                ("max_iter", Count, "100000"),
            ],
            Subcommand::SlabExp => &[
                ("l", Pos, "1"),
                ("n_y", Count, "401"),
                ("grid", Word(&["graded", "uniform"]), "graded"),
                ("n_mu", Count, "32"),
                ("a_plus", Text, "constant:1"),
                ("normalize", Word(&["true", "false"]), "true"),
                ("tol", Pos, "1e-14"),
                ("max_iter", Count, "100000"),
            ],
            Subcommand::Domain3d => &[
                ("domain", Text, "ball:0,0,0,1"),
                ("f", Text, "constant:1"),
                ("lattice", Count, "33"),
                ("n_polar", Count, "24"),
                ("n_azimuth", Count, "48"),
                ("tol", Pos, "1e-12"),
                ("max_iter", Count, "2000"),
                ("mass_correction", Word(&["true", "false"]), "true"),
            ],
            Subcommand::Nonexist => &[
                ("domain", Text, "box:0,-15,-15,1,15,15"),
                ("f", Text, "one-sided:1"),
                ("a2", Pos, "1"),
                ("samples", Text, "0.5,0,0;0.3,0,0;0.7,1,-2"),
                ("tol", Pos, "1e-3"),
                ("h", Pos, "0.02"),
                ("n_polar", Count, "48"),
                ("n_azimuth", Count, "64"),
            ],
            Subcommand::ThreeLevel => &[
                ("gamma1", Real, "0.7"),
                ("gamma2", Real, "0.3"),
                ("eps", Pos, "1"),
                ("t0", Pos, "2"),
                ("rho0", Pos, "1"),
                ("p12", Pos, "1"),
                ("p23", Pos, "1"),
                ("l", Pos, "1"),
                ("n_y", Count, "201"),
                ("n_mu", Count, "32"),
                ("grid", Word(&["graded", "uniform"]), "graded"),
                ("h_plus", Text, "constant:0.1"),
                ("h_minus", Text, "zero"),
                ("xi", Real, "0"),
                ("c0", Text, "0"),
            ],
            Subcommand::Verify => &[
                ("n_samples", Count, "1000000"),
                ("tuples", Count, "100000"),
                ("rho1", Pos, "1"),
                ("rho2", Pos, "0.5"),
                ("t1", Pos, "10"),
                ("t2", Pos, "12"),
                ("u", Text, "0.2,0,-0.1"),
            ],
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Real,
    Pos,
    Count,
    Int,
    Word(&'static [&'static str]),
    Text,
}

const COMMON: &[(&str, Kind, &str)] = &[
    ("epsilon0", Kind::Pos, "1"),
    ("sigma", Kind::Pos, "1"),
    ("c0_kernel", Kind::Pos, "2"),
    ("kernel", Kind::Word(&["simplified", "angular"]), "simplified"),
    ("exec", Kind::Word(&["parallel", "sequential"]), "parallel"),
    ("threads", Kind::Int, "0"),
    ("seed", Kind::Int, "0"),
    ("out", Kind::Text, "out"),
];

fn lookup(sub: Subcommand, key: &str) -> Option<(Kind, &'static str)> {
    COMMON.iter().chain(sub.keys()).find(|(k, _, _)| *k == key).map(|&(_, kind, d)| (kind, d))
}

/// Canonical form of a value; rejects what does not fit the key's kind.
fn normalize(key: &str, kind: Kind, raw: &str) -> Result<String, ConfigError> {
    let bad = |msg: &str| ConfigError::BadValue { key: key.into(), value: raw.into(), msg: msg.into() };
    let raw = raw.trim();
    match kind {
        Kind::Real | Kind::Pos => {
            let v: f64 = raw.parse().map_err(|_| bad("expected a real number"))?;
            if !v.is_finite() {
                return Err(bad("must be finite"));
            }
            if matches!(kind, Kind::Pos) && v <= 0.0 {
                return Err(bad("must be > 0"));
            }
            Ok(format!("{v:?}"))
        }
        Kind::Count => {
            let v: u64 = raw.parse().map_err(|_| bad("expected a positive integer"))?;
            if v == 0 {
                return Err(bad("must be >= 1"));
            }
            Ok(v.to_string())
        }
        Kind::Int => raw.parse::<u64>().map(|v| v.to_string()).map_err(|_| bad("expected a nonnegative integer")),
        Kind::Word(options) => {
            if options.contains(&raw) {
                Ok(raw.to_string())
            } else {
                Err(bad(&format!("expected one of {}", options.join(", "))))
            }
        }
        Kind::Text => {
            if raw.is_empty() {
                Err(bad("must not be empty"))
            } else {
                Ok(raw.to_string())
            }
        }
    }
}

/// Fully resolved configuration: every key of the subcommand has a value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    values: BTreeMap<&'static str, String>,
}

/// Where a value came from, lowest precedence first.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub file: Option<PathBuf>,
    /// `key=value` pairs from the command line, applied in order.
    pub set: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Output directory from the environment; used only when neither the
    /// file nor a flag sets `out`.
    pub env_out: Option<String>,
}

impl RunConfig {
    pub fn defaults(subcommand: Subcommand) -> Self {
        let values = COMMON
            .iter()
            .chain(subcommand.keys())
            .map(|&(k, kind, d)| (k, normalize(k, kind, d).expect("defaults are valid")))
            .collect();
        RunConfig { subcommand, values }
    }

    /// Parse `key = value` lines. `#` starts a comment. A `subcommand`
    /// line, if present, must match `subcommand`.
    pub fn parse_str(subcommand: Subcommand, text: &str, source_name: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults(subcommand);
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { source_name: source_name.into(), line: line_no, msg: format!("expected `key = value`, got `{content}`") });
            };
            let key = key.trim();
            if key == "subcommand" {
                let file = Subcommand::parse(value.trim()).ok_or_else(|| ConfigError::BadValue {
                    key: key.into(),
                    value: value.trim().into(),
                    msg: "unknown subcommand".into(),
                })?;
                if file != subcommand {
                    return Err(ConfigError::SubcommandMismatch { file, cli: subcommand });
                }
                continue;
            }
            cfg.set_at(key, value, source_name, line_no)?;
        }
        Ok(cfg)
    }

    fn set_at(&mut self, key: &str, value: &str, source_name: &str, line: usize) -> Result<(), ConfigError> {
        let Some((kind, _)) = lookup(self.subcommand, key) else {
            return Err(ConfigError::UnknownKey { source_name: source_name.into(), line, key: key.into(), subcommand: self.subcommand });
        };
        let stored = COMMON.iter().chain(self.subcommand.keys()).find(|(k, _, _)| *k == key).map(|(k, _, _)| *k).unwrap();
        self.values.insert(stored, normalize(key, kind, value)?);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.set_at(key, value, "command line", 0)
    }

    /// Defaults, then the file, then the environment (for `out` only, when
    /// the file did not set it), then `--set` pairs, then dedicated flags.
    pub fn resolve(subcommand: Subcommand, o: &Overrides) -> Result<Self, ConfigError> {
        let (mut cfg, file_text) = match &o.file {
            Some(path) => {
                let text = read(path)?;
                (Self::parse_str(subcommand, &text, &path.display().to_string())?, Some(text))
            }
            None => (Self::defaults(subcommand), None),
        };
        let file_sets_out = file_text.as_deref().is_some_and(|t| {
            t.lines().any(|l| l.split('#').next().unwrap_or("").split_once('=').is_some_and(|(k, _)| k.trim() == "out"))
        });
        if let (Some(env), false) = (&o.env_out, file_sets_out) {
            if !env.is_empty() {
                cfg.set("out", env)?;
            }
        }
        for pair in &o.set {
            let Some((k, v)) = pair.split_once('=') else {
                return Err(ConfigError::Syntax { source_name: "--set".into(), line: 0, msg: format!("expected key=value, got `{pair}`") });
            };
            cfg.set(k.trim(), v)?;
        }
        if let Some(out) = &o.out {
            cfg.set("out", &out.display().to_string())?;
        }
        if let Some(seed) = o.seed {
            cfg.set("seed", &seed.to_string())?;
        }
        if let Some(t) = o.threads {
            cfg.set("threads", &t.to_string())?;
        }
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key `{key}` not defined for {}", self.subcommand))
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.get(key).parse().expect("normalized real")
    }

    pub fn usize(&self, key: &str) -> usize {
        self.get(key).parse().expect("normalized integer")
    }

    pub fn u64(&self, key: &str) -> u64 {
        self.get(key).parse().expect("normalized integer")
    }

    pub fn flag(&self, key: &str) -> bool {
        self.get(key) == "true"
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out"))
    }

    /// Deterministic echo: `subcommand` first, then keys in sorted order.
    pub fn render(&self) -> String {
        let mut s = format!("subcommand = {}\n", self.subcommand);
        for (k, v) in &self.values {
            s += &format!("{k} = {v}\n");
        }
        s
    }

    /// Check that referenced files (tabulated profiles) exist.
    pub fn check_files(&self) -> Result<(), ConfigError> {
        for (k, v) in &self.values {
            if let Some(path) = v.strip_prefix("tabulated:") {
                if !Path::new(path).is_file() {
                    return Err(ConfigError::BadValue { key: (*k).into(), value: v.clone(), msg: "file not found".into() });
                }
            }
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.to_path_buf(), msg: e.to_string() })
}
