//! Experiment configuration: flat `key = value` files with optional
//! `[section]` headers, overridden by command-line flags.
//!
//! A section named after an experiment only applies when that experiment
//! runs; any other section name just groups keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use kronlab_core::frequencies::SystemKind;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Count,
    TauberCompare,
    Assumptions,
    Ergodic,
    TimeAverage,
    Kms,
    Skms,
    Witten,
    Nullspace,
    ClassicalDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Count,
        Experiment::TauberCompare,
        Experiment::Assumptions,
        Experiment::Ergodic,
        Experiment::TimeAverage,
        Experiment::Kms,
        Experiment::Skms,
        Experiment::Witten,
        Experiment::Nullspace,
        Experiment::ClassicalDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Count => "count",
            Experiment::TauberCompare => "tauber-compare",
            Experiment::Assumptions => "assumptions",
            Experiment::Ergodic => "ergodic",
            Experiment::TimeAverage => "time-average",
            Experiment::Kms => "kms",
            Experiment::Skms => "skms",
            Experiment::Witten => "witten",
            Experiment::Nullspace => "nullspace",
            Experiment::ClassicalDemo => "classical-demo",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Experiment::Count => "exact lattice-point counts N(E) and the window ratio",
            Experiment::TauberCompare => "exact N(E) against the saddle-point asymptotic",
            Experiment::Assumptions => "growth, derivative-ratio and root-free checks on φ",
            Experiment::Ergodic => "microcanonical averages of Toeplitz observables",
            Experiment::TimeAverage => "decay of time-averaged observables in M and E",
            Experiment::Kms => "operator identities and the KMS condition",
            Experiment::Skms => "super-KMS functional identities",
            Experiment::Witten => "Witten index of free supersymmetric modes",
            Experiment::Nullspace => "uniqueness of super-KMS functionals on small matrix algebras",
            Experiment::ClassicalDemo => "classical wave fields, action variables and brackets",
        }
    }

    /// Per-experiment default values for keys the user leaves unset.
    fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Experiment::Count => &[("system", "powerlaw:A=1,alpha=1"), ("E", "10,20,30,40")],
            Experiment::TauberCompare => &[
                ("system", "powerlaw:A=1,alpha=1.5"),
                ("E", "16:144:16"),
            ],
            Experiment::Assumptions => &[("system", "powerlaw:A=1,alpha=1"), ("sigma", "dyadic:12")],
            Experiment::Ergodic => &[
                ("system", "powerlaw:A=1,alpha=1.5"),
                ("E", "10,20,30,40"),
                ("tol", "1e-12"),
            ],
            Experiment::TimeAverage => &[
                ("system", "powerlaw:A=1,alpha=1.5"),
                ("E", "10,20,30"),
                ("M", "10,100,1000"),
            ],
            Experiment::Kms | Experiment::Skms => &[("system", "powerlaw:A=1,alpha=1.5"), ("beta", "1")],
            Experiment::Witten => &[
                ("system", "powerlaw:A=1,alpha=1.5"),
                ("beta", "1"),
                ("boson-cutoff", "40"),
            ],
            Experiment::Nullspace => &[
                ("system", "powerlaw:A=1,alpha=1.5"),
                ("beta", "0.5,1,2"),
                ("boson-cutoff", "3"),
            ],
            Experiment::ClassicalDemo => &[
                ("system", "powerlaw:A=1,alpha=1.5"),
                ("modes", "3"),
                ("t", "0:2:0.5"),
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                ConfigError(format!("unknown experiment `{s}` (expected one of: {})", names.join(", ")))
            })
    }
}

const COMMON_DEFAULTS: &[(&str, &str)] = &[
    ("seed", "0"),
    ("out", "."),
    ("svg", "false"),
    ("timing", "false"),
    ("tol", "1e-10"),
    ("cap", "100000000"),
    ("window", "1"),
    ("modes", "2"),
    ("boson-cutoff", "4"),
    ("pairs", "50"),
    ("polys", "20"),
    ("gamma-delta", "4"),
    ("x-steps", "40"),
    ("growth-floor", "0.1"),
    ("beta-factor", "10"),
    ("b1-sigma", "1e-3"),
    ("b1-tol", "0.05"),
    ("spread", "3"),
];

/// Every key the runner understands.
pub const KEYS: &[&str] = &[
    "system",
    "E",
    "beta",
    "sigma",
    "t",
    "M",
    "seed",
    "out",
    "svg",
    "timing",
    "tol",
    "cap",
    "window",
    "modes",
    "boson-cutoff",
    "pairs",
    "polys",
    "gamma-delta",
    "x-steps",
    "growth-floor",
    "beta-factor",
    "b1-sigma",
    "b1-tol",
    "spread",
];

/// Keys that describe where results go rather than what is computed; they
/// are left out of the config echo so outputs do not depend on them.
const LOCATION_KEYS: &[&str] = &["out", "svg"];

/// Parses a config file body. Returns the keys that apply to `experiment`.
pub fn parse_config(text: &str, experiment: Experiment) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    let mut section: Option<String> = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError(format!("line {}: unterminated section header", no + 1)))?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key = value", no + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return err(format!("line {}: unknown key `{key}`", no + 1));
        }
        let applies = match &section {
            Some(s) => match s.parse::<Experiment>() {
                Ok(e) => e == experiment,
                Err(_) => true,
            },
            None => true,
        };
        if applies {
            map.insert(key.to_string(), value.trim().to_string());
        }
    }
    Ok(map)
}

pub fn load_config(path: &Path, experiment: Experiment) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, experiment)
}

/// Comma list, inclusive range `start:stop:step`, or `dyadic:K` for 2^{−1..−K}.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, ConfigError> {
    let s = s.trim();
    if let Some(levels) = s.strip_prefix("dyadic:") {
        let k: u32 = levels
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("bad dyadic level count `{levels}`")))?;
        if k == 0 {
            return err("dyadic grid needs at least one level");
        }
        return Ok(kronlab_core::tauber::dyadic_grid(k));
    }
    let number = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| ConfigError(format!("bad number `{}`", t.trim())))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [single] => single
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(number)
            .collect::<Result<Vec<_>, _>>()?,
        [a, b, step] => {
            let (a, b, step) = (number(a)?, number(b)?, number(step)?);
            if !(step > 0.0) || b < a {
                return err(format!("bad range `{s}`"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| a + step * i as f64).collect()
        }
        _ => return err(format!("bad grid `{s}`")),
    };
    if grid.is_empty() {
        return err("grids must be nonempty");
    }
    Ok(grid)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => err(format!("{key}: expected true or false, got `{v}`")),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError(format!("{key}: cannot parse `{v}`")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub system: SystemKind,
    pub energies: Vec<f64>,
    pub betas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub times: Vec<f64>,
    /// Averaging times M.
    pub averaging: Vec<f64>,
    pub modes: usize,
    pub boson_cutoff: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub svg: bool,
    /// Adds a wall-clock column to the count table; off by default since it
    /// breaks byte-for-byte reproducibility.
    pub timing: bool,
    pub tol: f64,
    pub cap: u64,
    pub window: f64,
    pub pairs: usize,
    pub polys: usize,
    pub gamma_delta: f64,
    pub x_steps: usize,
    pub growth_floor: f64,
    pub beta_factor: f64,
    pub b1_sigma: f64,
    pub b1_tol: f64,
    /// Allowed max/min spread of M²·τ_E(A†A) across the M grid.
    pub spread: f64,
    /// Effective key/value pairs, echoed into the JSON summary.
    pub echo: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Layers experiment defaults, then `file`, then `flags`.
    pub fn resolve(
        experiment: Experiment,
        file: &BTreeMap<String, String>,
        flags: &BTreeMap<String, String>,
    ) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<String, String> = COMMON_DEFAULTS
            .iter()
            .chain(experiment.defaults())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (k, v) in file.iter().chain(flags) {
            if !KEYS.contains(&k.as_str()) {
                return err(format!("unknown key `{k}`"));
            }
            map.insert(k.clone(), v.clone());
        }
        let get = |k: &str| map.get(k).map(String::as_str).unwrap_or("");
        let grid = |k: &str| -> Result<Vec<f64>, ConfigError> {
            match map.get(k) {
                Some(v) => parse_grid(v).map_err(|e| ConfigError(format!("{k}: {e}"))),
                None => Ok(Vec::new()),
            }
        };
        let system: SystemKind = get("system")
            .parse()
            .map_err(|e| ConfigError(format!("system: {e}")))?;
        let cfg = ExperimentConfig {
            experiment,
            system,
            energies: grid("E")?,
            betas: grid("beta")?,
            sigmas: grid("sigma")?,
            times: grid("t")?,
            averaging: grid("M")?,
            modes: parse_num("modes", get("modes"))?,
            boson_cutoff: parse_num("boson-cutoff", get("boson-cutoff"))?,
            seed: parse_num("seed", get("seed"))?,
            out_dir: PathBuf::from(get("out")),
            svg: parse_bool("svg", get("svg"))?,
            timing: parse_bool("timing", get("timing"))?,
            tol: parse_num("tol", get("tol"))?,
            cap: parse_num("cap", get("cap"))?,
            window: parse_num("window", get("window"))?,
            pairs: parse_num("pairs", get("pairs"))?,
            polys: parse_num("polys", get("polys"))?,
            gamma_delta: parse_num("gamma-delta", get("gamma-delta"))?,
            x_steps: parse_num("x-steps", get("x-steps"))?,
            growth_floor: parse_num("growth-floor", get("growth-floor"))?,
            beta_factor: parse_num("beta-factor", get("beta-factor"))?,
            b1_sigma: parse_num("b1-sigma", get("b1-sigma"))?,
            b1_tol: parse_num("b1-tol", get("b1-tol"))?,
            spread: parse_num("spread", get("spread"))?,
            echo: map
                .iter()
                .filter(|(k, _)| !LOCATION_KEYS.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults plus `flags` with no config file.
    pub fn from_flags(experiment: Experiment, flags: &[(&str, &str)]) -> Result<Self, ConfigError> {
        let flags = flags.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Self::resolve(experiment, &BTreeMap::new(), &flags)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let needs: &[(&str, &Vec<f64>)] = match self.experiment {
            Experiment::Count | Experiment::TauberCompare | Experiment::Ergodic => &[("E", &self.energies)],
            Experiment::TimeAverage => &[("E", &self.energies), ("M", &self.averaging)],
            Experiment::Assumptions => &[("sigma", &self.sigmas)],
            Experiment::Kms | Experiment::Skms | Experiment::Witten | Experiment::Nullspace => {
                &[("beta", &self.betas)]
            }
            Experiment::ClassicalDemo => &[("t", &self.times)],
        };
        for (k, g) in needs {
            if g.is_empty() {
                return err(format!("{} needs a nonempty {k} grid", self.experiment));
            }
        }
        if self.betas.iter().any(|&b| !(b > 0.0)) {
            return err("beta values must be positive");
        }
        if self.averaging.iter().any(|&m| !(m > 0.0)) {
            return err("M values must be positive");
        }
        if self.modes == 0 {
            return err("modes must be at least 1");
        }
        if !(self.tol > 0.0) {
            return err("tol must be positive");
        }
        Ok(())
    }
}
