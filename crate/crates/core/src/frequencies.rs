//! Frequency systems: the positive half Ω₊ = {ω₁ < ω₂ < …} of an even
//! frequency set. Ω₋ = −Ω₊ is implicit throughout the crate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

/// Perturbation family μ_n for power-law systems ω_n = A·n^α·(1 + μ_n).
///
/// Every family tends to zero, so generated systems always satisfy μ_n = o(1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    Zero,
    /// μ_n = c / n
    Harmonic { c: f64 },
    /// μ_n = c / log(n + 1)
    Logarithmic { c: f64 },
}

impl Perturbation {
    pub fn at(&self, n: f64) -> f64 {
        match *self {
            Perturbation::Zero => 0.0,
            Perturbation::Harmonic { c } => c / n,
            Perturbation::Logarithmic { c } => c / (n + 1.0).ln(),
        }
    }

    fn coefficient(&self) -> f64 {
        match *self {
            Perturbation::Zero => 0.0,
            Perturbation::Harmonic { c } | Perturbation::Logarithmic { c } => c,
        }
    }

    fn rule(&self) -> &'static str {
        match self {
            Perturbation::Zero => "zero",
            Perturbation::Harmonic { .. } => "harmonic",
            Perturbation::Logarithmic { .. } => "logarithmic",
        }
    }
}

/// Generator rule of a frequency system.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemKind {
    /// log p over the rational primes.
    PrimeLog,
    /// √(n² + m²).
    Dispersion { mass: f64 },
    /// A·n^α·(1 + μ_n).
    PowerLaw {
        amplitude: f64,
        exponent: f64,
        perturbation: Perturbation,
    },
    /// A finite, user supplied list. Treated as the complete system.
    Explicit(Vec<f64>),
}

impl SystemKind {
    pub fn power_law(amplitude: f64, exponent: f64) -> Self {
        SystemKind::PowerLaw {
            amplitude,
            exponent,
            perturbation: Perturbation::Zero,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::PrimeLog => "primelog",
            SystemKind::Dispersion { .. } => "dispersion",
            SystemKind::PowerLaw { .. } => "powerlaw",
            SystemKind::Explicit(_) => "explicit",
        }
    }

    /// Closed-form ω_n (1-based) where the generator admits one.
    pub fn closed_form(&self, n: usize) -> Option<f64> {
        let x = n as f64;
        match *self {
            SystemKind::Dispersion { mass } => Some(x.hypot(mass)),
            SystemKind::PowerLaw {
                amplitude,
                exponent,
                perturbation,
            } => Some(amplitude * x.powf(exponent) * (1.0 + perturbation.at(x))),
            SystemKind::PrimeLog | SystemKind::Explicit(_) => None,
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemKind::PrimeLog => write!(f, "primelog"),
            SystemKind::Dispersion { mass } => write!(f, "dispersion:m={mass}"),
            SystemKind::PowerLaw {
                amplitude,
                exponent,
                perturbation,
            } => {
                write!(f, "powerlaw:A={amplitude},alpha={exponent}")?;
                match perturbation {
                    Perturbation::Zero => Ok(()),
                    p => write!(f, ",mu={},c={}", p.rule(), p.coefficient()),
                }
            }
            SystemKind::Explicit(list) => {
                write!(f, "explicit:")?;
                for (i, w) in list.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `primelog`, `dispersion:m=3.14`, `powerlaw:A=1,alpha=1.5[,mu=harmonic,c=0.1]`
/// and `explicit:1,2,3`.
impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h.trim(), r.trim()),
            None => (s.trim(), ""),
        };
        let bad = |msg: &str| Error::InvalidSystem(format!("{msg} in `{s}`"));
        let params = || -> Result<BTreeMap<String, String>> {
            let mut map = BTreeMap::new();
            for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| bad("expected key=value"))?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
            Ok(map)
        };
        let number = |map: &BTreeMap<String, String>, key: &str, default: Option<f64>| {
            match map.get(key) {
                Some(v) => v.parse::<f64>().map_err(|_| bad(&format!("bad number for {key}"))),
                None => default.ok_or_else(|| bad(&format!("missing {key}"))),
            }
        };
        match head.to_ascii_lowercase().as_str() {
            "primelog" => Ok(SystemKind::PrimeLog),
            "dispersion" => {
                let map = params()?;
                let mass = match map.get("m").or_else(|| map.get("mass")) {
                    Some(v) => v.parse().map_err(|_| bad("bad mass"))?,
                    None => return Err(bad("missing m")),
                };
                Ok(SystemKind::Dispersion { mass })
            }
            "powerlaw" => {
                let map = params()?;
                let amplitude = number(&map, "A", Some(1.0))?;
                let exponent = number(&map, "alpha", None)?;
                let c = number(&map, "c", Some(0.0))?;
                let perturbation = match map.get("mu").map(String::as_str) {
                    None | Some("zero") => Perturbation::Zero,
                    Some("harmonic") => Perturbation::Harmonic { c },
                    Some("logarithmic") | Some("log") => Perturbation::Logarithmic { c },
                    Some(other) => return Err(bad(&format!("unknown perturbation `{other}`"))),
                };
                Ok(SystemKind::PowerLaw {
                    amplitude,
                    exponent,
                    perturbation,
                })
            }
            "explicit" => {
                let list = rest
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| p.trim().parse::<f64>().map_err(|_| bad("bad frequency")))
                    .collect::<Result<Vec<_>>>()?;
                Ok(SystemKind::Explicit(list))
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

/// A materialized prefix of Ω₊ together with its generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SystemRecord", try_from = "SystemRecord")]
pub struct FrequencySystem {
    kind: SystemKind,
    omegas: Vec<f64>,
}

impl FrequencySystem {
    /// The first `count` elements of Ω₊ in increasing order.
    pub fn generate(kind: SystemKind, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidSystem("count must be positive".into()));
        }
        let omegas = match &kind {
            SystemKind::PrimeLog => primes(count).into_iter().map(|p| (p as f64).ln()).collect(),
            SystemKind::Dispersion { mass } => {
                if !(mass.is_finite() && *mass > 0.0) {
                    return Err(Error::InvalidSystem(format!("mass must be positive, got {mass}")));
                }
                (1..=count).map(|n| kind.closed_form(n).unwrap()).collect()
            }
            SystemKind::PowerLaw {
                amplitude,
                exponent,
                ..
            } => {
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(Error::InvalidSystem(format!(
                        "amplitude must be positive, got {amplitude}"
                    )));
                }
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(Error::InvalidSystem(format!(
                        "exponent must be at least 1, got {exponent}"
                    )));
                }
                let omegas: Vec<f64> = (1..=count).map(|n| kind.closed_form(n).unwrap()).collect();
                if omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::InvalidSystem("power law produced a nonpositive frequency".into()));
                }
                if omegas.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidSystem("power law prefix is not increasing".into()));
                }
                omegas
            }
            SystemKind::Explicit(list) => {
                if count > list.len() {
                    return Err(Error::InvalidSystem(format!(
                        "explicit system has {} frequencies, {count} requested",
                        list.len()
                    )));
                }
                list[..count].to_vec()
            }
        };
        Ok(FrequencySystem { kind, omegas })
    }

    /// A finite system given by an explicit list. Not validated: see [`check_axioms`](Self::check_axioms).
    pub fn explicit(omegas: Vec<f64>) -> Self {
        FrequencySystem {
            kind: SystemKind::Explicit(omegas.clone()),
            omegas,
        }
    }

    /// Generates a prefix whose last element strictly exceeds `bound`.
    pub fn covering(kind: SystemKind, bound: f64) -> Result<Self> {
        if let SystemKind::Explicit(list) = &kind {
            let n = list.len();
            return Self::generate(kind, n);
        }
        let mut count = 16;
        loop {
            let sys = Self::generate(kind.clone(), count)?;
            if sys.largest() > bound {
                return Ok(sys);
            }
            if count > 1 << 26 {
                return Err(Error::InvalidSystem(format!("cannot cover bound {bound}")));
            }
            count *= 2;
        }
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn count(&self) -> usize {
        self.omegas.len()
    }

    /// ω_n, 1-based.
    pub fn omega(&self, n: usize) -> f64 {
        self.omegas[n - 1]
    }

    pub fn largest(&self) -> f64 {
        self.omegas.last().copied().unwrap_or(0.0)
    }

    /// Explicit systems are complete; generated ones are prefixes of an infinite sequence.
    pub fn is_finite(&self) -> bool {
        matches!(self.kind, SystemKind::Explicit(_))
    }

    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.count() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate {} frequencies to {count}",
                self.count()
            )));
        }
        let kind = match &self.kind {
            SystemKind::Explicit(list) => SystemKind::Explicit(list[..count].to_vec()),
            k => k.clone(),
        };
        Ok(FrequencySystem {
            kind,
            omegas: self.omegas[..count].to_vec(),
        })
    }

    pub fn extended(&self, count: usize) -> Result<Self> {
        if self.is_finite() {
            return if count <= self.count() {
                self.truncated(count)
            } else {
                Err(Error::InvalidSystem("explicit systems cannot be extended".into()))
            };
        }
        Self::generate(self.kind.clone(), count)
    }

    /// Number of frequencies ≤ `energy` in the materialized prefix.
    pub fn modes_below(&self, energy: f64) -> usize {
        self.omegas.partition_point(|&w| w <= energy)
    }

    pub fn check_axioms(&self) -> AxiomReport {
        let positive = self.omegas.iter().all(|&w| w > 0.0);
        let increasing = self.omegas.windows(2).all(|w| w[1] > w[0]);
        let divergent = match &self.kind {
            SystemKind::Explicit(_) => Verdict::NotCheckable,
            kind => {
                let n = self.count();
                let far = match kind.closed_form(4 * n) {
                    Some(w) => Some(w),
                    None => self.extended(4 * n).ok().map(|s| s.largest()),
                };
                match far {
                    Some(w) if w > self.largest() => Verdict::Pass,
                    _ => Verdict::Fail,
                }
            }
        };
        AxiomReport {
            positive: Verdict::from_bool(positive),
            strictly_increasing: Verdict::from_bool(increasing),
            divergent,
            independent: Verdict::NotCheckable,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotCheckable,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Outcome of the testable Kronecker axioms on a materialized prefix.
/// Algebraic independence over ℤ is never checkable numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub positive: Verdict,
    pub strictly_increasing: Verdict,
    pub divergent: Verdict,
    pub independent: Verdict,
}

impl AxiomReport {
    pub fn all_checkable_pass(&self) -> bool {
        [self.positive, self.strictly_increasing, self.divergent]
            .iter()
            .all(|v| *v != Verdict::Fail)
    }
}

#[derive(Serialize, Deserialize)]
struct SystemRecord {
    kind: String,
    #[serde(default)]
    params: BTreeMap<String, Value>,
    omegas: Vec<f64>,
}

impl From<FrequencySystem> for SystemRecord {
    fn from(sys: FrequencySystem) -> Self {
        let mut params = BTreeMap::new();
        match &sys.kind {
            SystemKind::PrimeLog | SystemKind::Explicit(_) => {}
            SystemKind::Dispersion { mass } => {
                params.insert("mass".into(), Value::from(*mass));
            }
            SystemKind::PowerLaw {
                amplitude,
                exponent,
                perturbation,
            } => {
                params.insert("A".into(), Value::from(*amplitude));
                params.insert("alpha".into(), Value::from(*exponent));
                params.insert("mu".into(), Value::from(perturbation.rule()));
                params.insert("c".into(), Value::from(perturbation.coefficient()));
            }
        }
        SystemRecord {
            kind: sys.kind.name().to_string(),
            params,
            omegas: sys.omegas,
        }
    }
}

impl TryFrom<SystemRecord> for FrequencySystem {
    type Error = Error;

    fn try_from(rec: SystemRecord) -> Result<Self> {
        let num = |key: &str| -> Result<f64> {
            rec.params
                .get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::InvalidSystem(format!("missing parameter {key}")))
        };
        let kind = match rec.kind.as_str() {
            "primelog" => SystemKind::PrimeLog,
            "dispersion" => SystemKind::Dispersion { mass: num("mass")? },
            "powerlaw" => {
                let c = num("c").unwrap_or(0.0);
                let perturbation = match rec.params.get("mu").and_then(Value::as_str) {
                    None | Some("zero") => Perturbation::Zero,
                    Some("harmonic") => Perturbation::Harmonic { c },
                    Some("logarithmic") => Perturbation::Logarithmic { c },
                    Some(other) => {
                        return Err(Error::InvalidSystem(format!("unknown perturbation {other}")))
                    }
                };
                SystemKind::PowerLaw {
                    amplitude: num("A")?,
                    exponent: num("alpha")?,
                    perturbation,
                }
            }
            "explicit" => return Ok(FrequencySystem::explicit(rec.omegas)),
            other => return Err(Error::InvalidSystem(format!("unknown kind {other}"))),
        };
        let sys = FrequencySystem::generate(kind, rec.omegas.len().max(1))?;
        let agrees = sys.omegas.len() == rec.omegas.len()
            && sys
                .omegas
                .iter()
                .zip(&rec.omegas)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
        if !agrees {
            return Err(Error::InvalidSystem(
                "stored frequencies disagree with the generator".into(),
            ));
        }
        Ok(sys)
    }
}

/// The first `count` primes by a deterministic sieve of Eratosthenes.
pub fn primes(count: usize) -> Vec<u64> {
    if count == 0 {
        return Vec::new();
    }
    let n = count as f64;
    // p_n < n (ln n + ln ln n) for n ≥ 6
    let mut bound = if count < 6 {
        15
    } else {
        (n * (n.ln() + n.ln().ln())).ceil() as usize + 1
    };
    loop {
        let found = sieve(bound);
        if found.len() >= count {
            return found.into_iter().take(count).collect();
        }
        bound *= 2;
    }
}

fn sieve(bound: usize) -> Vec<u64> {
    let mut composite = vec![false; bound + 1];
    let mut out = Vec::new();
    for i in 2..=bound {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= bound {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}
