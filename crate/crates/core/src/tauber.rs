//! θ(s), φ(s) = −Σ log(1 − e^{−sω}) and derivatives, the saddle point
//! φ′(σ_E) + E = 0 with the asymptotic count Ñ(E), and numerical checkers for
//! the growth hypotheses (α), (β), (γ).
//!
//! Series are summed until an analytic bound on the remainder drops below
//! `rel_tol` times the partial sum of absolute values. For n > M with
//! e^{−sω_M} ≤ 1/2 each term is at most C·ω^k e^{−sω}, and comparing the sum
//! with an integral in ω gives
//!
//! Σ_{n>M} ≤ C · Γ(k+1, sω_M) / (ω′_min · s^{k+1})
//!
//! where ω′_min bounds dω/dn from below on [M, ∞) and sω_M ≥ k.

use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting;
use crate::frequencies::{FrequencySystem, Perturbation, SystemKind};
use crate::special::{gamma, upper_gamma_int, zeta};
use crate::{Error, Result};

/// Hard limit on the number of series terms per evaluation.
pub const TERM_CAP: usize = 10_000_000;

const FIRST_CHECK: usize = 32;

#[derive(Clone, Copy, Debug)]
enum Quantity {
    Theta,
    Phi,
    Phi1,
    Phi2,
    Phi3,
}

impl Quantity {
    fn order(self) -> u32 {
        match self {
            Quantity::Theta | Quantity::Phi => 0,
            Quantity::Phi1 => 1,
            Quantity::Phi2 => 2,
            Quantity::Phi3 => 3,
        }
    }

    fn constant(self) -> f64 {
        match self {
            Quantity::Theta => 1.0,
            Quantity::Phi | Quantity::Phi1 => 2.0,
            Quantity::Phi2 => 4.0,
            Quantity::Phi3 => 12.0,
        }
    }

    fn term(self, s: f64, w: f64) -> f64 {
        let x = (-s * w).exp();
        let one_minus = -(-s * w).exp_m1();
        match self {
            Quantity::Theta => x,
            Quantity::Phi => -(-x).ln_1p(),
            Quantity::Phi1 => -w * x / one_minus,
            Quantity::Phi2 => w * w * x / (one_minus * one_minus),
            Quantity::Phi3 => -w * w * w * x * (1.0 + x) / (one_minus * one_minus * one_minus),
        }
    }
}

/// A summed series with its certified remainder bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
    pub tail_bound: f64,
}

/// Evaluates the spectral series of a frequency system, materializing more
/// frequencies from the generator as needed.
#[derive(Debug)]
pub struct PhiEvaluator {
    kind: SystemKind,
    finite: bool,
    rel_tol: f64,
    omegas: RwLock<Arc<Vec<f64>>>,
}

impl Clone for PhiEvaluator {
    fn clone(&self) -> Self {
        PhiEvaluator {
            kind: self.kind.clone(),
            finite: self.finite,
            rel_tol: self.rel_tol,
            omegas: RwLock::new(self.omegas.read().unwrap().clone()),
        }
    }
}

impl PhiEvaluator {
    pub fn new(sys: &FrequencySystem) -> Self {
        Self::with_tolerance(sys, 1e-12)
    }

    pub fn with_tolerance(sys: &FrequencySystem, rel_tol: f64) -> Self {
        PhiEvaluator {
            kind: sys.kind().clone(),
            finite: sys.is_finite(),
            rel_tol,
            omegas: RwLock::new(Arc::new(sys.omegas().to_vec())),
        }
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    fn omegas_at_least(&self, n: usize) -> Result<Arc<Vec<f64>>> {
        let current = self.omegas.read().unwrap().clone();
        if self.finite || current.len() >= n {
            return Ok(current);
        }
        if n > TERM_CAP {
            return Err(Error::TruncationCap { cap: TERM_CAP });
        }
        let count = n.max(2 * current.len()).min(TERM_CAP);
        let fresh = Arc::new(FrequencySystem::generate(self.kind.clone(), count)?.omegas().to_vec());
        *self.omegas.write().unwrap() = fresh.clone();
        Ok(fresh)
    }

    fn check_argument(&self, s: f64) -> Result<()> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("series argument must be positive, got {s}")));
        }
        if matches!(self.kind, SystemKind::PrimeLog) && !self.finite && s <= 1.0 {
            return Err(Error::Divergent(format!(
                "prime-log series diverge for s ≤ 1 (s = {s})"
            )));
        }
        Ok(())
    }

    /// Lower bound for dω/dn on [m, ∞), if positive.
    fn slope_floor(&self, m: usize) -> Option<f64> {
        let m = m as f64;
        let v = match &self.kind {
            SystemKind::PowerLaw {
                amplitude: a,
                exponent: alpha,
                perturbation,
            } => {
                let base = a * m.powf(alpha - 1.0);
                match perturbation {
                    Perturbation::Zero => base * alpha,
                    Perturbation::Harmonic { c } => base * (alpha - c.abs() * (alpha - 1.0) / m),
                    Perturbation::Logarithmic { c } => {
                        let l = (m + 1.0).ln();
                        base * (alpha * (1.0 - c.abs() / l) - c.abs() / (l * l))
                    }
                }
            }
            SystemKind::Dispersion { mass } => m / (m * m + mass * mass).sqrt(),
            SystemKind::PrimeLog | SystemKind::Explicit(_) => return None,
        };
        (v > 0.0).then_some(v)
    }

    /// Remainder bound after the first m terms, or `None` if not yet certifiable.
    fn tail_bound(&self, s: f64, order: u32, constant: f64, m: usize, w_m: f64) -> Option<f64> {
        if let SystemKind::PrimeLog = self.kind {
            // Terms are ≤ C (ln u)^k u^{−s} over integers u > p_M.
            if s * w_m < (order as f64).max(2f64.ln()) {
                return None;
            }
            let d = s - 1.0;
            return Some(constant * upper_gamma_int(order, d * w_m) / d.powi(order as i32 + 1));
        }
        if s * w_m < (order as f64).max(2f64.ln()) {
            return None;
        }
        let slope = self.slope_floor(m)?;
        Some(constant * upper_gamma_int(order, s * w_m) / (slope * s.powi(order as i32 + 1)))
    }

    fn sum<F>(&self, s: f64, order: u32, constant: f64, term: F) -> Result<SeriesValue>
    where
        F: Fn(f64) -> f64,
    {
        self.check_argument(s)?;
        let mut omegas = self.omegas_at_least(FIRST_CHECK)?;
        let mut value = 0.0;
        let mut magnitude = 0.0;
        let mut n = 0;
        let mut checkpoint = FIRST_CHECK;
        loop {
            if n == omegas.len() {
                if self.finite {
                    return Ok(SeriesValue {
                        value,
                        terms: n,
                        tail_bound: 0.0,
                    });
                }
                omegas = self.omegas_at_least(n + 1)?;
            }
            let t = term(omegas[n]);
            value += t;
            magnitude += t.abs();
            n += 1;
            if n == checkpoint && !self.finite {
                if let Some(tail) = self.tail_bound(s, order, constant, n, omegas[n - 1]) {
                    if tail <= self.rel_tol * magnitude || (magnitude == 0.0 && tail < f64::MIN_POSITIVE) {
                        return Ok(SeriesValue {
                            value,
                            terms: n,
                            tail_bound: tail,
                        });
                    }
                }
                if checkpoint >= TERM_CAP {
                    return Err(Error::TruncationCap { cap: TERM_CAP });
                }
                checkpoint = (checkpoint * 2).min(TERM_CAP);
            }
        }
    }

    fn quantity(&self, q: Quantity, s: f64) -> Result<SeriesValue> {
        self.sum(s, q.order(), q.constant(), |w| q.term(s, w))
    }

    /// θ(s) = Σ e^{−sω}.
    pub fn theta(&self, s: f64) -> Result<f64> {
        Ok(self.quantity(Quantity::Theta, s)?.value)
    }

    /// φ(s) = log ζ_Ω(s).
    pub fn phi(&self, s: f64) -> Result<f64> {
        Ok(self.quantity(Quantity::Phi, s)?.value)
    }

    pub fn phi_series(&self, s: f64) -> Result<SeriesValue> {
        self.quantity(Quantity::Phi, s)
    }

    pub fn phi1(&self, s: f64) -> Result<f64> {
        Ok(self.quantity(Quantity::Phi1, s)?.value)
    }

    pub fn phi2(&self, s: f64) -> Result<f64> {
        Ok(self.quantity(Quantity::Phi2, s)?.value)
    }

    pub fn phi3(&self, s: f64) -> Result<f64> {
        Ok(self.quantity(Quantity::Phi3, s)?.value)
    }

    /// Im φ′(σ + iτ) = Σ λ e^{−σλ} sin(τλ) / |1 − e^{−(σ+iτ)λ}|².
    pub fn im_phi_prime(&self, sigma: f64, tau: f64) -> Result<f64> {
        if tau == 0.0 {
            self.check_argument(sigma)?;
            return Ok(0.0);
        }
        let value = self.sum(sigma, 1, 4.0, |w| {
            let r = (-sigma * w).exp();
            let one_minus = -(-sigma * w).exp_m1();
            let half = (0.5 * tau * w).sin();
            w * r * (tau * w).sin() / (one_minus * one_minus + 4.0 * r * half * half)
        })?;
        Ok(value.value)
    }

    /// Im φ′ on the ray σ + ixσ.
    pub fn im_phi_prime_ray(&self, sigma: f64, x: f64) -> Result<f64> {
        self.im_phi_prime(sigma, x * sigma)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleResult {
    pub energy: f64,
    pub sigma: f64,
    pub phi: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub ln_n_tilde: f64,
    pub n_tilde: f64,
    pub iterations: usize,
}

impl SaddleResult {
    pub fn residual(&self) -> f64 {
        (self.phi1 + self.energy).abs()
    }
}

const SIGMA_MIN: f64 = 1e-12;
const SIGMA_MAX: f64 = 1e6;

/// Solves φ′(σ) + E = 0 and evaluates Ñ(E) = (2πσ²φ″)^{−1/2} e^{σE+φ}.
pub fn solve_saddle(eval: &PhiEvaluator, energy: f64) -> Result<SaddleResult> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::InvalidArgument(format!("energy must be positive, got {energy}")));
    }
    // g(σ) = −φ′(σ) − E is decreasing in σ.
    let g = |s: f64| -> Result<f64> { Ok(-eval.phi1(s)? - energy) };
    let start = if matches!(eval.kind(), SystemKind::PrimeLog) { 2.0 } else { 1.0 };
    let (mut lo, mut hi);
    if g(start)? > 0.0 {
        lo = start;
        hi = start;
        loop {
            hi *= 2.0;
            if hi > SIGMA_MAX {
                return Err(Error::BracketNotFound(energy));
            }
            if g(hi)? <= 0.0 {
                break;
            }
            lo = hi;
        }
    } else {
        lo = start;
        hi = start;
        loop {
            lo *= 0.5;
            if lo < SIGMA_MIN {
                return Err(Error::BracketNotFound(energy));
            }
            let v = match g(lo) {
                Ok(v) => v,
                Err(Error::Divergent(_)) => return Err(Error::BracketNotFound(energy)),
                Err(e) => return Err(e),
            };
            if v > 0.0 {
                break;
            }
            hi = lo;
        }
    }
    let mut sigma = 0.5 * (lo + hi);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let phi1 = eval.phi1(sigma)?;
        let residual = -phi1 - energy;
        if residual.abs() <= 1e-10 * energy * 0.1 || iterations > 300 {
            break;
        }
        if residual > 0.0 {
            lo = sigma;
        } else {
            hi = sigma;
        }
        // g′(σ) = −φ″(σ).
        let step = residual / eval.phi2(sigma)?;
        let next = sigma + step;
        sigma = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if (hi - lo) <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let phi = eval.phi(sigma)?;
    let phi1 = eval.phi1(sigma)?;
    let phi2 = eval.phi2(sigma)?;
    let phi3 = eval.phi3(sigma)?;
    let ln_n_tilde = sigma * energy + phi - 0.5 * (2.0 * PI * sigma * sigma * phi2).ln();
    Ok(SaddleResult {
        energy,
        sigma,
        phi,
        phi1,
        phi2,
        phi3,
        ln_n_tilde,
        n_tilde: ln_n_tilde.exp(),
        iterations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub energy: f64,
    pub n_exact: u64,
    pub n_tilde: f64,
    pub ratio: f64,
    pub sigma: f64,
}

/// Exact N(E) against Ñ(E) along a grid.
pub fn asymptotic_vs_exact(sys: &FrequencySystem, grid: &[f64]) -> Result<Vec<ComparisonRow>> {
    let top = grid.iter().copied().fold(0.0, f64::max);
    let counting_sys = if sys.is_finite() || sys.largest() > top {
        sys.clone()
    } else {
        FrequencySystem::covering(sys.kind().clone(), top)?
    };
    let eval = PhiEvaluator::new(&counting_sys);
    grid.iter()
        .map(|&e| {
            let n = counting::count_n_exact(&counting_sys, e)?.count;
            let saddle = solve_saddle(&eval, e)?;
            Ok(ComparisonRow {
                energy: e,
                n_exact: n,
                n_tilde: saddle.n_tilde,
                ratio: ((n as f64).ln() - saddle.ln_n_tilde).exp(),
                sigma: saddle.sigma,
            })
        })
        .collect()
}

fn check_decreasing_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("σ grid needs at least two points".into()));
    }
    if grid.iter().any(|&s| !(s > 0.0)) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("σ grid must be positive and strictly decreasing".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    /// (σ, −σφ′(σ), σ²φ″(σ)) along the grid.
    pub rows: Vec<(f64, f64, f64)>,
    pub strictly_increasing: bool,
    /// Log-log growth rate of each sequence against 1/σ over the tail of the grid.
    pub growth: (f64, f64),
    pub floor: f64,
    pub pass: bool,
}

pub const DEFAULT_GROWTH_FLOOR: f64 = 0.1;

/// (α): −σφ′ and σ²φ″ increase strictly as σ decreases and keep growing.
///
/// Growth is measured as d log(value) / d log(1/σ) between the last grid
/// point and the point four steps earlier; unbounded power growth has a
/// positive rate while a bounded sequence drifts to rate 0.
pub fn check_alpha(eval: &PhiEvaluator, grid: &[f64], floor: f64) -> Result<AlphaReport> {
    check_decreasing_grid(grid)?;
    let rows: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&s| Ok((s, -s * eval.phi1(s)?, s * s * eval.phi2(s)?)))
        .collect::<Result<_>>()?;
    let strictly_increasing = rows.windows(2).all(|w| w[1].1 > w[0].1 && w[1].2 > w[0].2);
    let last = rows.len() - 1;
    let back = last.saturating_sub(4);
    let span = (rows[back].0 / rows[last].0).ln();
    let rate = |a: f64, b: f64| (b / a).ln() / span;
    let growth = (
        rate(rows[back].1, rows[last].1),
        rate(rows[back].2, rows[last].2),
    );
    let pass = strictly_increasing && growth.0 >= floor && growth.1 >= floor;
    Ok(AlphaReport {
        rows,
        strictly_increasing,
        growth,
        floor,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaReport {
    /// (σ, |σφ‴(σ)/φ″(σ)|).
    pub rows: Vec<(f64, f64)>,
    pub max: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub const DEFAULT_BETA_FACTOR: f64 = 10.0;

/// (β): |σφ‴/φ″| stays below `factor` times its value at the largest σ.
pub fn check_beta(eval: &PhiEvaluator, grid: &[f64], factor: f64) -> Result<BetaReport> {
    check_decreasing_grid(grid)?;
    let rows: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&s| Ok((s, (s * eval.phi3(s)? / eval.phi2(s)?).abs())))
        .collect::<Result<_>>()?;
    let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let threshold = factor * rows[0].1;
    Ok(BetaReport {
        rows,
        max,
        threshold,
        pass: max <= threshold,
    })
}

/// h(x) = (1+x²)^{−β/2} sin(β arctan x) / x, with h(0) = β.
pub fn h(beta: f64, x: f64) -> f64 {
    if x.abs() < 1e-8 {
        return beta * (1.0 - (beta + 1.0) * (beta + 2.0) * x * x / 6.0 + beta * x * x / 2.0);
    }
    (1.0 + x * x).powf(-beta / 2.0) * (beta * x.atan()).sin() / x
}

/// (Γ(β), ζ(β)) for β > 1.
pub fn gamma_zeta(beta: f64) -> Result<(f64, f64)> {
    if !(beta > 1.0) {
        return Err(Error::InvalidArgument(format!("β must exceed 1, got {beta}")));
    }
    Ok((gamma(beta), zeta(beta)))
}

/// C_{A,α} = α^{−1} Γ(β) ζ(β) A^{−1/α} with β = 1 + 1/α.
pub fn asymptotic_constant(amplitude: f64, alpha: f64) -> Result<f64> {
    let beta = 1.0 + 1.0 / alpha;
    let (g, z) = gamma_zeta(beta)?;
    Ok(g * z * amplitude.powf(-1.0 / alpha) / alpha)
}

/// Im φ′(σ+ixσ) divided by its small-σ asymptotic C σ^{−β} x h(x).
pub fn im_phi_prime_ratio(eval: &PhiEvaluator, sigma: f64, x: f64) -> Result<f64> {
    let (a, alpha) = match eval.kind() {
        SystemKind::PowerLaw {
            amplitude,
            exponent,
            ..
        } => (*amplitude, *exponent),
        other => {
            return Err(Error::InvalidArgument(format!(
                "the Im φ′ asymptotic needs a power-law system, got {}",
                other.name()
            )))
        }
    };
    let beta = 1.0 + 1.0 / alpha;
    let c = asymptotic_constant(a, alpha)?;
    let model = c * sigma.powf(-beta) * x * h(beta, x);
    Ok(eval.im_phi_prime_ray(sigma, x)? / model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub delta: f64,
    pub points: usize,
    /// Grid points where sign(Im φ′(σ+ixσ)) ≠ sign(x).
    pub violations: Vec<(f64, f64, f64)>,
    /// Smallest |Im φ′(σ+ixσ)| / (σ^{−1}|x|) seen, a margin indicator.
    pub min_margin: f64,
    /// Largest grid σ such that no violation occurs at any grid σ′ ≤ σ.
    pub sigma0: Option<f64>,
    pub pass: bool,
}

/// (γ) falsifier: scans 0 < |x| ≤ Δ at each σ for zeros of Im φ′(σ+ixσ).
pub fn check_gamma(eval: &PhiEvaluator, delta: f64, sigmas: &[f64], x_steps: usize) -> Result<GammaReport> {
    if !(delta > 0.0) || x_steps == 0 || sigmas.is_empty() {
        return Err(Error::InvalidArgument("γ scan needs Δ > 0, x steps and a σ grid".into()));
    }
    let xs: Vec<f64> = (1..=x_steps)
        .flat_map(|i| {
            let x = delta * i as f64 / x_steps as f64;
            [x, -x]
        })
        .collect();
    let pairs: Vec<(f64, f64)> = sigmas
        .iter()
        .flat_map(|&s| xs.iter().map(move |&x| (s, x)))
        .collect();
    let values: Vec<(f64, f64, f64)> = pairs
        .par_iter()
        .map(|&(s, x)| Ok((s, x, eval.im_phi_prime_ray(s, x)?)))
        .collect::<Result<_>>()?;
    let violations: Vec<(f64, f64, f64)> = values
        .iter()
        .copied()
        .filter(|&(_, x, v)| !(v * x.signum() > 0.0))
        .collect();
    let min_margin = values
        .iter()
        .map(|&(s, x, v)| v.abs() * s / x.abs())
        .fold(f64::INFINITY, f64::min);
    let mut clean: Vec<f64> = sigmas.to_vec();
    clean.sort_by(f64::total_cmp);
    let sigma0 = clean
        .iter()
        .take_while(|&&s| !violations.iter().any(|v| v.0 == s))
        .last()
        .copied();
    Ok(GammaReport {
        delta,
        points: values.len(),
        sigma0,
        pass: violations.is_empty(),
        violations,
        min_margin,
    })
}

/// σ = 2^{−k} for k = 1..=levels.
pub fn dyadic_grid(levels: u32) -> Vec<f64> {
    (1..=levels).map(|k| 2f64.powi(-(k as i32))).collect()
}
