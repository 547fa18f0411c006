//! Exact eigenvalue counting for H₊: lattice points of ℕ[Ω₊] with energy ≤ E.
//!
//! The search walks modes in decreasing frequency with a remaining-energy
//! budget, so every visited node is a prefix of at least one counted point.
//! The smallest mode is never branched on: it contributes ⌊budget/ω₁⌋ + 1.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frequencies::FrequencySystem;
use crate::{Error, Result};

pub const DEFAULT_CAP: u64 = 100_000_000;

/// Tolerance under which two energies are considered equal.
pub fn tie_tolerance(energy: f64) -> f64 {
    1e-12 * energy.abs().max(1.0)
}

/// A finitely supported occupation n_ω ≥ 0 over mode positions (position k is ω_{k+1}).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occupation(Vec<u32>);

impl Occupation {
    pub fn vacuum() -> Self {
        Occupation(Vec::new())
    }

    pub fn new(mut entries: Vec<u32>) -> Self {
        while entries.last() == Some(&0) {
            entries.pop();
        }
        Occupation(entries)
    }

    pub fn get(&self, mode: usize) -> u32 {
        self.0.get(mode).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    /// Σ n_ω ω against per-mode frequencies.
    pub fn energy(&self, omegas: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(omegas)
            .map(|(&n, &w)| n as f64 * w)
            .sum()
    }

    /// Occupation with n_mode shifted by `delta`, or `None` if it would go negative.
    pub fn shifted(&self, mode: usize, delta: i64) -> Option<Self> {
        let n = self.get(mode) as i64 + delta;
        if n < 0 {
            return None;
        }
        let mut v = self.0.clone();
        if v.len() <= mode {
            v.resize(mode + 1, 0);
        }
        v[mode] = n as u32;
        Some(Occupation::new(v))
    }

    /// Applies a multi-mode integer shift; `None` if any entry goes negative.
    pub fn shifted_by(&self, shift: &[(usize, i64)]) -> Option<Self> {
        let len = shift
            .iter()
            .map(|&(m, _)| m + 1)
            .max()
            .unwrap_or(0)
            .max(self.0.len());
        let mut v = self.0.clone();
        v.resize(len, 0);
        for &(m, d) in shift {
            let n = v[m] as i64 + d;
            if n < 0 {
                return None;
            }
            v[m] = n as u32;
        }
        Some(Occupation::new(v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub energy: f64,
    pub count: u64,
    pub spectrum: Option<Vec<(f64, u64)>>,
}

/// Frequencies that can appear below `energy`, with the prefix-length precondition checked.
fn active_modes(sys: &FrequencySystem, energy: f64) -> Result<Vec<f64>> {
    if sys.omegas().iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidSystem("frequencies must be positive".into()));
    }
    if !sys.is_finite() && sys.largest() <= energy {
        return Err(Error::PrefixTooShort {
            largest: sys.largest(),
            energy,
        });
    }
    let limit = energy + tie_tolerance(energy);
    Ok(sys.omegas().iter().copied().filter(|&w| w <= limit).collect())
}

/// N(E) = #{η ∈ ℕ[Ω₊] : η ≤ E}, vacuum included; 0 for E < 0.
pub fn count_n(sys: &FrequencySystem, energy: f64) -> Result<CountResult> {
    count_n_capped(sys, energy, DEFAULT_CAP)
}

pub fn count_n_capped(sys: &FrequencySystem, energy: f64, cap: u64) -> Result<CountResult> {
    if energy < 0.0 {
        return Ok(CountResult {
            energy,
            count: 0,
            spectrum: None,
        });
    }
    let mut modes = active_modes(sys, energy)?;
    modes.reverse();
    let tol = tie_tolerance(energy);
    let count = if modes.is_empty() {
        1
    } else {
        parallel_count(&modes, energy, tol, cap)?
    };
    if count > cap {
        return Err(Error::CountCap { cap });
    }
    Ok(CountResult {
        energy,
        count,
        spectrum: None,
    })
}

/// Largest energy for which [`count_n_integral`] allocates its table.
const INTEGRAL_DP_LIMIT: f64 = 1e6;

/// N(E) by coin-change over integer-valued frequencies, without enumerating.
/// Returns `None` when some frequency at or below E is not an integer.
pub fn count_n_integral(sys: &FrequencySystem, energy: f64) -> Result<Option<CountResult>> {
    if energy < 0.0 {
        return Ok(Some(CountResult {
            energy,
            count: 0,
            spectrum: None,
        }));
    }
    let modes = active_modes(sys, energy)?;
    if energy > INTEGRAL_DP_LIMIT || modes.iter().any(|w| w.fract() != 0.0) {
        return Ok(None);
    }
    let top = (energy + tie_tolerance(energy)).floor() as usize;
    let overflow = || Error::CountCap { cap: u64::MAX };
    let mut ways = vec![0u64; top + 1];
    ways[0] = 1;
    for &w in &modes {
        let w = w as usize;
        for s in w..=top {
            ways[s] = ways[s].checked_add(ways[s - w]).ok_or_else(overflow)?;
        }
    }
    let count = ways
        .iter()
        .try_fold(0u64, |acc, &x| acc.checked_add(x))
        .ok_or_else(overflow)?;
    Ok(Some(CountResult {
        energy,
        count,
        spectrum: None,
    }))
}

/// Integer-valued systems go through [`count_n_integral`], others through the capped search.
pub fn count_n_exact(sys: &FrequencySystem, energy: f64) -> Result<CountResult> {
    match count_n_integral(sys, energy)? {
        Some(r) => Ok(r),
        None => count_n(sys, energy),
    }
}

/// Splits the search tree by the occupancies of the largest modes into
/// enough disjoint subtrees to keep all workers busy. The sum of the
/// subtree counts does not depend on the split.
fn parallel_count(modes: &[f64], energy: f64, tol: f64, cap: u64) -> Result<u64> {
    let last = modes.len() - 1;
    let mut level = 0;
    let mut tasks = vec![energy];
    while tasks.len() < 256 && level < last {
        let w = modes[level];
        tasks = tasks
            .into_iter()
            .flat_map(|budget| {
                let kmax = ((budget + tol) / w).floor() as u64;
                (0..=kmax).map(move |k| budget - k as f64 * w)
            })
            .collect();
        level += 1;
    }
    let rest = &modes[level..];
    tasks
        .par_iter()
        .map(|&budget| count_subtree(rest, budget, tol, cap))
        .try_reduce(
            || 0,
            |a, b| {
                let s = a + b;
                if s > cap {
                    Err(Error::CountCap { cap })
                } else {
                    Ok(s)
                }
            },
        )
}

fn count_subtree(modes: &[f64], budget: f64, tol: f64, cap: u64) -> Result<u64> {
    let (&w, rest) = modes.split_first().expect("at least one mode");
    if rest.is_empty() {
        return Ok(((budget + tol) / w).floor() as u64 + 1);
    }
    let mut total = 0u64;
    let mut b = budget;
    while b >= -tol {
        total += count_subtree(rest, b, tol, cap)?;
        if total > cap {
            return Err(Error::CountCap { cap });
        }
        b -= w;
    }
    Ok(total)
}

/// (N(E) − N(E − Δ)) / N(E).
pub fn window_ratio(sys: &FrequencySystem, energy: f64, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("window must be nonnegative, got {delta}")));
    }
    let top = count_n(sys, energy)?.count;
    if top == 0 {
        return Err(Error::InvalidArgument(format!("N({energy}) = 0")));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let below = count_n(sys, energy - delta)?.count;
    Ok((top - below) as f64 / top as f64)
}

/// All lattice points with energy ≤ E, sorted by energy and then occupation.
pub fn enumerate(sys: &FrequencySystem, energy: f64) -> Result<Vec<(f64, Occupation)>> {
    enumerate_capped(sys, energy, DEFAULT_CAP)
}

pub fn enumerate_capped(sys: &FrequencySystem, energy: f64, cap: u64) -> Result<Vec<(f64, Occupation)>> {
    if energy < 0.0 {
        return Ok(Vec::new());
    }
    let modes = active_modes(sys, energy)?;
    let tol = tie_tolerance(energy);
    let mut out = Vec::new();
    let mut current = vec![0u32; modes.len()];
    if modes.is_empty() {
        out.push((0.0, Occupation::vacuum()));
    } else {
        walk(&modes, modes.len() - 1, energy, tol, &mut current, &mut out, cap)?;
    }
    for (e, occ) in &mut out {
        *e = occ.energy(&modes);
    }
    out.sort_by(|a, b| match a.0.total_cmp(&b.0) {
        Ordering::Equal => a.1.cmp(&b.1),
        o => o,
    });
    Ok(out)
}

fn walk(
    modes: &[f64],
    level: usize,
    budget: f64,
    tol: f64,
    current: &mut Vec<u32>,
    out: &mut Vec<(f64, Occupation)>,
    cap: u64,
) -> Result<()> {
    let w = modes[level];
    let kmax = ((budget + tol) / w).floor() as u32;
    for k in 0..=kmax {
        current[level] = k;
        let b = budget - k as f64 * w;
        if level == 0 {
            if out.len() as u64 >= cap {
                return Err(Error::CountCap { cap });
            }
            out.push((0.0, Occupation::new(current.clone())));
        } else {
            walk(modes, level - 1, b, tol, current, out, cap)?;
        }
    }
    current[level] = 0;
    Ok(())
}

/// Distinct energies ≤ E with the number of lattice points at each.
pub fn spectrum_up_to(sys: &FrequencySystem, energy: f64) -> Result<Vec<(f64, u64)>> {
    let points = enumerate(sys, energy)?;
    let tol = tie_tolerance(energy);
    let mut out: Vec<(f64, u64)> = Vec::new();
    for (e, _) in points {
        match out.last_mut() {
            Some((last, mult)) if (e - *last).abs() <= tol => *mult += 1,
            _ => out.push((e, 1)),
        }
    }
    Ok(out)
}

pub fn count_with_spectrum(sys: &FrequencySystem, energy: f64) -> Result<CountResult> {
    let spectrum = spectrum_up_to(sys, energy)?;
    Ok(CountResult {
        energy,
        count: spectrum.iter().map(|&(_, m)| m).sum(),
        spectrum: Some(spectrum),
    })
}
