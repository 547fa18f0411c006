//! One function per experiment. Each returns the table, a JSON results
//! object and the overall verdict; writing files is left to the caller.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use kronlab_core::apalgebra::{FourierIndex, TrigPolynomial};
use kronlab_core::classical::{poisson, ClassicalField, LinearObservable};
use kronlab_core::counting;
use kronlab_core::ergodic::{self, Observable};
use kronlab_core::fock::{FockSpace, Statistics};
use kronlab_core::frequencies::{FrequencySystem, Perturbation, SystemKind};
use kronlab_core::kms::{self, CheckReport, ThermalContext};
use kronlab_core::report::{fmt_f64, Plot, Series, Table};
use kronlab_core::sparse::SparseOperator;
use kronlab_core::tauber::{self, PhiEvaluator};
use kronlab_core::Complex64;

use crate::config::{ConfigError, Experiment, ExperimentConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(kronlab_core::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<kronlab_core::Error> for RunError {
    fn from(e: kronlab_core::Error) -> Self {
        RunError::Core(e)
    }
}

type Res<T> = std::result::Result<T, RunError>;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    pub results: Value,
    pub pass: bool,
    pub plot: Option<Plot>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Res<Outcome> {
    match cfg.experiment {
        Experiment::Count => count(cfg),
        Experiment::TauberCompare => tauber_compare(cfg),
        Experiment::Assumptions => assumptions(cfg),
        Experiment::Ergodic => ergodic_limits(cfg),
        Experiment::TimeAverage => time_average(cfg),
        Experiment::Kms => kms_suite(cfg),
        Experiment::Skms => skms_suite(cfg),
        Experiment::Witten => witten(cfg),
        Experiment::Nullspace => nullspace(cfg),
        Experiment::ClassicalDemo => classical_demo(cfg),
    }
}

/// A system long enough that every frequency ≤ `bound` is materialized.
fn covering(kind: &SystemKind, bound: f64) -> Res<FrequencySystem> {
    Ok(match kind {
        SystemKind::Explicit(list) => FrequencySystem::explicit(list.clone()),
        other => FrequencySystem::covering(other.clone(), bound)?,
    })
}

/// The first `count` frequencies.
fn prefix(kind: &SystemKind, count: usize) -> Res<FrequencySystem> {
    Ok(match kind {
        SystemKind::Explicit(list) => {
            let sys = FrequencySystem::explicit(list.clone());
            if sys.count() < count {
                return Err(ConfigError(format!("explicit system has {} modes, {count} needed", sys.count())).into());
            }
            sys
        }
        other => FrequencySystem::generate(other.clone(), count)?,
    })
}

fn is_integer_system(kind: &SystemKind) -> bool {
    matches!(
        kind,
        SystemKind::PowerLaw {
            amplitude,
            exponent,
            perturbation: Perturbation::Zero,
        } if *amplitude == 1.0 && *exponent == 1.0
    )
}

/// Σ_{k ≤ n} p(k) for n = 0..=max, by the standard coin-change recurrence.
fn partition_prefix_sums(max: usize) -> Vec<u64> {
    let mut p = vec![0u64; max + 1];
    p[0] = 1;
    for part in 1..=max {
        for n in part..=max {
            p[n] += p[n - part];
        }
    }
    let mut acc = 0;
    p.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn top_half<T>(rows: &[T]) -> &[T] {
    &rows[rows.len() / 2..]
}

fn sorted_indices(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

fn check_value(r: &CheckReport) -> Value {
    json!({"check": r.check, "beta": r.beta, "dims": r.dims, "defect": r.defect, "pass": r.pass})
}

fn check_table(reports: &[CheckReport]) -> Table {
    let mut table = Table::new(&["check", "beta", "dims", "defect", "pass"]);
    for r in reports {
        table.push(vec![
            r.check.clone(),
            fmt_f64(r.beta),
            r.dims.to_string(),
            fmt_f64(r.defect),
            r.pass.to_string(),
        ]);
    }
    table
}

fn check_outcome(reports: Vec<CheckReport>, extra: Value) -> Outcome {
    let pass = reports.iter().all(|r| r.pass);
    Outcome {
        table: check_table(&reports),
        results: json!({
            "checks": reports.iter().map(check_value).collect::<Vec<_>>(),
            "details": extra,
        }),
        pass,
        plot: None,
    }
}

fn count(cfg: &ExperimentConfig) -> Res<Outcome> {
    let top = cfg.energies.iter().copied().fold(0.0, f64::max) + cfg.window.max(0.0);
    let sys = covering(&cfg.system, top)?;
    let mut header = vec!["E", "N", "window"];
    if cfg.timing {
        header.push("runtime_ms");
    }
    let mut table = Table::new(&header);
    let mut counts = Vec::new();
    let mut windows = Vec::new();
    for &e in &cfg.energies {
        let start = Instant::now();
        let n = counting::count_n_capped(&sys, e, cfg.cap)?.count;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let upper = counting::count_n_capped(&sys, e + cfg.window, cfg.cap)?.count;
        let window = if n > 0 {
            (upper - n) as f64 / n as f64
        } else {
            f64::NAN
        };
        let mut row = vec![fmt_f64(e), n.to_string(), fmt_f64(window)];
        if cfg.timing {
            row.push(format!("{elapsed:.3}"));
        }
        table.push(row);
        counts.push(n);
        windows.push(window);
    }
    let order = sorted_indices(&cfg.energies);
    let monotone = order.windows(2).all(|w| counts[w[0]] <= counts[w[1]]);
    let oracle = if is_integer_system(&cfg.system) {
        let max = cfg.energies.iter().copied().fold(0.0, f64::max).max(0.0).floor() as usize;
        let sums = partition_prefix_sums(max);
        let ok = cfg.energies.iter().zip(&counts).all(|(&e, &n)| {
            let expected = if e < 0.0 { 0 } else { sums[e.floor() as usize] };
            expected == n
        });
        Some(ok)
    } else {
        None
    };
    let sorted_windows: Vec<f64> = order.iter().map(|&i| windows[i]).collect();
    let upper_windows = top_half(&sorted_windows);
    let pass = monotone && oracle.unwrap_or(true);
    let plot = Plot {
        title: format!("N(E) for {}", cfg.system),
        x_label: "E".into(),
        y_label: "N(E)".into(),
        log_x: false,
        log_y: true,
        series: vec![Series {
            name: "N".into(),
            points: order.iter().map(|&i| (cfg.energies[i], counts[i] as f64)).collect(),
        }],
    };
    Ok(Outcome {
        table,
        results: json!({
            "system": cfg.system.to_string(),
            "counts": cfg.energies.iter().zip(&counts).map(|(e, n)| json!([e, n])).collect::<Vec<_>>(),
            "monotone": monotone,
            "oracle": oracle.map(|_| "partition-dp"),
            "oracle_match": oracle,
            "window": {
                "delta": cfg.window,
                "decreasing_top_half": strictly_decreasing(upper_windows),
                "final": sorted_windows.last().copied(),
            },
        }),
        pass,
        plot: Some(plot),
    })
}

fn tauber_compare(cfg: &ExperimentConfig) -> Res<Outcome> {
    let top = cfg.energies.iter().copied().fold(0.0, f64::max);
    let sys = covering(&cfg.system, top)?;
    let mut grid = cfg.energies.clone();
    grid.sort_by(f64::total_cmp);
    let rows = tauber::asymptotic_vs_exact(&sys, &grid)?;
    let mut table = Table::new(&["E", "N_exact", "N_tilde", "ratio", "sigma_E"]);
    for r in &rows {
        table.push(vec![
            fmt_f64(r.energy),
            r.n_exact.to_string(),
            fmt_f64(r.n_tilde),
            fmt_f64(r.ratio),
            fmt_f64(r.sigma),
        ]);
    }
    let finite = rows.iter().all(|r| r.ratio.is_finite() && r.n_tilde.is_finite());
    let in_band = top_half(&rows).iter().all(|r| (0.5..=2.0).contains(&r.ratio));
    let tail = &rows[rows.len().saturating_sub(4)..];
    let deviations: Vec<f64> = tail.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    let settling = deviations.windows(2).all(|w| w[1] <= w[0]);
    let plot = Plot {
        title: format!("N/Ñ for {}", cfg.system),
        x_label: "E".into(),
        y_label: "N(E)/Ñ(E)".into(),
        log_x: true,
        log_y: true,
        series: vec![Series {
            name: "ratio".into(),
            points: rows.iter().map(|r| (r.energy, r.ratio)).collect(),
        }],
    };
    Ok(Outcome {
        table,
        results: json!({
            "system": cfg.system.to_string(),
            "rows": rows.len(),
            "ratios": rows.iter().map(|r| json!([r.energy, r.ratio])).collect::<Vec<_>>(),
            "max_n": rows.iter().map(|r| r.n_exact).max(),
            "finite": finite,
            "top_half_in_band": in_band,
            "tail_deviation_nonincreasing": settling,
        }),
        pass: finite && in_band && settling,
        plot: Some(plot),
    })
}

fn assumptions(cfg: &ExperimentConfig) -> Res<Outcome> {
    let sys = match &cfg.system {
        SystemKind::Explicit(list) => FrequencySystem::explicit(list.clone()),
        other => FrequencySystem::generate(other.clone(), 16)?,
    };
    let eval = PhiEvaluator::new(&sys);
    let alpha = tauber::check_alpha(&eval, &cfg.sigmas, cfg.growth_floor)?;
    let beta = tauber::check_beta(&eval, &cfg.sigmas, cfg.beta_factor)?;
    let gamma = tauber::check_gamma(&eval, cfg.gamma_delta, &cfg.sigmas, cfg.x_steps)?;
    let b1 = match cfg.system {
        SystemKind::PowerLaw { .. } => {
            let ratio = tauber::im_phi_prime_ratio(&eval, cfg.b1_sigma, 1.0)?;
            Some((ratio, (ratio - 1.0).abs() <= cfg.b1_tol))
        }
        _ => None,
    };
    let mut table = Table::new(&[
        "sigma",
        "minus_sigma_phi1",
        "sigma2_phi2",
        "beta_ratio",
        "gamma_violations",
    ]);
    for (a, b) in alpha.rows.iter().zip(&beta.rows) {
        let v = gamma.violations.iter().filter(|v| v.0 == a.0).count();
        table.push(vec![fmt_f64(a.0), fmt_f64(a.1), fmt_f64(a.2), fmt_f64(b.1), v.to_string()]);
    }
    let violation_sigmas: BTreeSet<String> = gamma.violations.iter().map(|v| fmt_f64(v.0)).collect();
    let pass = alpha.pass && beta.pass && gamma.pass && b1.map_or(true, |b| b.1);
    let plot = Plot {
        title: format!("growth of −σφ′ and σ²φ″ for {}", cfg.system),
        x_label: "σ".into(),
        y_label: "value".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series {
                name: "−σφ′(σ)".into(),
                points: alpha.rows.iter().map(|r| (r.0, r.1)).collect(),
            },
            Series {
                name: "σ²φ″(σ)".into(),
                points: alpha.rows.iter().map(|r| (r.0, r.2)).collect(),
            },
        ],
    };
    Ok(Outcome {
        table,
        results: json!({
            "system": cfg.system.to_string(),
            "alpha": {
                "pass": alpha.pass,
                "strictly_increasing": alpha.strictly_increasing,
                "growth": [alpha.growth.0, alpha.growth.1],
                "floor": alpha.floor,
            },
            "beta": {"pass": beta.pass, "max": beta.max, "threshold": beta.threshold},
            "gamma": {
                "pass": gamma.pass,
                "delta": gamma.delta,
                "points": gamma.points,
                "violations": gamma.violations.len(),
                "violation_sigmas": violation_sigmas,
                "sigma0": gamma.sigma0,
                "min_margin": gamma.min_margin,
            },
            "b1": b1.map(|(ratio, ok)| json!({
                "sigma": cfg.b1_sigma,
                "x": 1.0,
                "ratio": ratio,
                "tol": cfg.b1_tol,
                "pass": ok,
            })),
        }),
        pass,
        plot: Some(plot),
    })
}

fn random_trig_polynomial<R: Rng>(sys: &Arc<FrequencySystem>, modes: usize, rng: &mut R) -> TrigPolynomial {
    let c = |rng: &mut R| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut terms = vec![(FourierIndex::zero(), c(rng))];
    for _ in 0..rng.random_range(1..=5) {
        let support = rng.random_range(1..=2usize);
        let pairs: Vec<(usize, i64)> = (0..support)
            .map(|_| (rng.random_range(0..modes), rng.random_range(-2..=2i64)))
            .collect();
        terms.push((FourierIndex::from_pairs(pairs), c(rng)));
    }
    TrigPolynomial::from_terms(sys.clone(), terms)
}

fn ergodic_limits(cfg: &ExperimentConfig) -> Res<Outcome> {
    let modes = 4;
    let base = Arc::new(prefix(&cfg.system, modes)?);
    let mut rng = kms::seeded_rng(cfg.seed);
    let polys: Vec<TrigPolynomial> = (0..cfg.polys)
        .map(|_| random_trig_polynomial(&base, modes, &mut rng))
        .collect();
    let observables: Vec<Observable> = polys.iter().cloned().map(Observable::Toeplitz).collect();
    let margin = observables.iter().map(Observable::margin).fold(0.0, f64::max);

    let mut grid = cfg.energies.clone();
    grid.sort_by(f64::total_cmp);
    let exactness: Vec<f64> = grid
        .iter()
        .map(|&e| {
            let sys = covering(&cfg.system, e + margin)?;
            let space = FockSpace::energy_cut(&sys, e + margin)?;
            let worst = polys
                .par_iter()
                .map(|f| {
                    let t = space.toeplitz(f)?;
                    Ok((ergodic::tau_e(&space, &t, e)? - f.bohr_mean()).norm())
                })
                .collect::<kronlab_core::Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(worst)
        })
        .collect::<Res<_>>()?;

    let f = TrigPolynomial::exponential(base.clone(), 0, 1).add(&TrigPolynomial::exponential(base.clone(), 0, -1))?;
    let defect = ergodic::classical_limit_table(&base, &Observable::ToeplitzDefect(f.clone(), f), &grid)?;
    let projector = ergodic::classical_limit_table(&base, &Observable::ModeProjector(0), &grid)?;

    let mut table = Table::new(&[
        "E",
        "N",
        "re_tau_E",
        "im_tau_E",
        "predicted_limit",
        "toeplitz_max_defect",
        "projector_tau_E",
        "projector_bound",
    ]);
    for ((row, p), ex) in defect.rows.iter().zip(&projector.rows).zip(&exactness) {
        table.push(vec![
            fmt_f64(row.energy),
            row.n.to_string(),
            fmt_f64(row.tau.0),
            fmt_f64(row.tau.1),
            fmt_f64(row.predicted.0),
            fmt_f64(*ex),
            fmt_f64(p.tau.0),
            fmt_f64(p.bound.unwrap_or(f64::NAN)),
        ]);
    }
    let magnitudes: Vec<f64> = defect.values().iter().map(|z| z.norm()).collect();
    let exact_ok = exactness.iter().all(|&d| d <= cfg.tol);
    let decreasing = strictly_decreasing(&magnitudes);
    let final_value = magnitudes.last().copied().unwrap_or(f64::NAN);
    let bounded = projector
        .rows
        .iter()
        .all(|r| r.bound.is_some_and(|b| r.tau.0 <= b + 1e-12));
    let plot = Plot {
        title: "τ_E of T(f)T(f) − T(f²)".into(),
        x_label: "E".into(),
        y_label: "|τ_E|".into(),
        log_x: false,
        log_y: true,
        series: vec![Series {
            name: "|τ_E|".into(),
            points: grid.iter().copied().zip(magnitudes.iter().copied()).collect(),
        }],
    };
    Ok(Outcome {
        table,
        results: json!({
            "system": cfg.system.to_string(),
            "toeplitz": {
                "polynomials": cfg.polys,
                "max_defect": exactness.iter().copied().fold(0.0, f64::max),
                "tol": cfg.tol,
                "pass": exact_ok,
            },
            "commutator_ideal": {
                "observable": defect.observable,
                "magnitudes": magnitudes,
                "decreasing": decreasing,
                "final": final_value,
                "threshold": 0.3,
                "pass": decreasing && final_value < 0.3,
            },
            "projector": {"bounded": bounded},
        }),
        pass: exact_ok && decreasing && final_value < 0.3 && bounded,
        plot: Some(plot),
    })
}

/// Σ over the first six modes and their pairwise differences, each
/// coefficient proportional to the frequency it carries so every term
/// contributes comparably to τ_E(A†A).
pub fn spread_polynomial(sys: &Arc<FrequencySystem>) -> TrigPolynomial {
    let om = sys.omegas();
    let modes = om.len().min(6);
    let c = |x: f64| Complex64::new(x / 10.0, 0.0);
    let mut terms = vec![(FourierIndex::zero(), Complex64::new(0.5, 0.0))];
    for j in 0..modes {
        terms.push((FourierIndex::single(j, 1), c(om[j])));
        terms.push((FourierIndex::single(j, -1), c(om[j])));
        for i in 0..j {
            let d = om[j] - om[i];
            terms.push((FourierIndex::from_pairs([(j, 1), (i, -1)]), c(d)));
            terms.push((FourierIndex::from_pairs([(j, -1), (i, 1)]), c(d)));
        }
    }
    TrigPolynomial::from_terms(sys.clone(), terms)
}

fn time_average(cfg: &ExperimentConfig) -> Res<Outcome> {
    let base = Arc::new(prefix(&cfg.system, 6)?);
    let f = spread_polynomial(&base);
    let limit = f.bohr_mean();
    let mut grid = cfg.energies.clone();
    grid.sort_by(f64::total_cmp);
    let mut ms = cfg.averaging.clone();
    ms.sort_by(f64::total_cmp);
    let m_top = *ms.last().expect("validated nonempty");

    let toeplitz = Observable::Toeplitz(f.clone());
    let with_projector = Observable::ToeplitzPlusProjector(f.clone(), 0);
    let per_energy: Vec<(Vec<f64>, f64)> = grid
        .par_iter()
        .map(|&e| {
            let space = ergodic::space_for(&base, &toeplitz, e)?;
            let a = toeplitz.build(&space)?;
            let defects = ms
                .iter()
                .map(|&m| ergodic::ergodicity_defect(&space, &a, limit, m, e))
                .collect::<kronlab_core::Result<Vec<_>>>()?;
            let space = ergodic::space_for(&base, &with_projector, e)?;
            let b = with_projector.build(&space)?;
            let tail = ergodic::ergodicity_defect(&space, &b, with_projector.predicted_limit(), m_top, e)?;
            Ok((defects, tail))
        })
        .collect::<kronlab_core::Result<_>>()?;

    let mut table = Table::new(&["observable", "E", "M", "defect", "M2_defect"]);
    let mut spreads = Vec::new();
    let mut decay_in_m = true;
    for (&e, (defects, _)) in grid.iter().zip(&per_energy) {
        for (&m, &d) in ms.iter().zip(defects) {
            table.push(vec![toeplitz.label(), fmt_f64(e), fmt_f64(m), fmt_f64(d), fmt_f64(m * m * d)]);
        }
        let scaled: Vec<f64> = ms.iter().zip(defects).map(|(m, d)| m * m * d).collect();
        let hi = scaled.iter().copied().fold(0.0, f64::max);
        let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        spreads.push(hi / lo);
        decay_in_m &= strictly_decreasing(defects);
    }
    let tails: Vec<f64> = per_energy.iter().map(|p| p.1).collect();
    for (&e, &d) in grid.iter().zip(&tails) {
        table.push(vec![with_projector.label(), fmt_f64(e), fmt_f64(m_top), fmt_f64(d), fmt_f64(m_top * m_top * d)]);
    }
    let spread_ok = spreads.iter().all(|&s| s.is_finite() && s <= cfg.spread);
    let e_decay = strictly_decreasing(&tails);
    let plot = Plot {
        title: "τ_E(A†A) against the averaging time".into(),
        x_label: "M".into(),
        y_label: "τ_E(A†A)".into(),
        log_x: true,
        log_y: true,
        series: grid
            .iter()
            .zip(&per_energy)
            .map(|(e, (defects, _))| Series {
                name: format!("E = {e}"),
                points: ms.iter().copied().zip(defects.iter().copied()).collect(),
            })
            .collect(),
    };
    Ok(Outcome {
        table,
        results: json!({
            "system": cfg.system.to_string(),
            "limit": [limit.re, limit.im],
            "m_grid": ms,
            "scaling": {
                "spreads": spreads,
                "allowed": cfg.spread,
                "decreasing_in_m": decay_in_m,
                "pass": spread_ok && decay_in_m,
            },
            "energy_decay": {
                "observable": with_projector.label(),
                "m": m_top,
                "values": tails,
                "pass": e_decay,
            },
        }),
        pass: spread_ok && decay_in_m && e_decay,
        plot: Some(plot),
    })
}

/// δ_K(x) = Σ_{|ω| ≤ ω_K} e^{iωx} = 2 Σ_{j<K} cos(ω_j x).
fn delta_k(omegas: &[f64], x: f64) -> f64 {
    omegas.iter().map(|w| 2.0 * (w * x).cos()).sum()
}

const FIELD_POINTS: [(f64, f64); 4] = [(0.0, 0.0), (0.3, 1.1), (-0.7, 2.5), (1.9, 1.9)];

fn kms_suite(cfg: &ExperimentConfig) -> Res<Outcome> {
    let sys = prefix(&cfg.system, cfg.modes.max(2))?;
    let omegas = sys.omegas()[..cfg.modes].to_vec();
    let m = cfg.boson_cutoff;
    let tol = cfg.tol;
    let mut reports = Vec::new();
    let c = |x: f64| Complex64::new(x, 0.0);

    let bosons = FockSpace::occupancy(Statistics::Boson, omegas.clone(), m)?;
    let mut ccr: f64 = 0.0;
    for i in 0..cfg.modes {
        let (a, _) = bosons.boson_ops(i)?;
        for j in 0..cfg.modes {
            let (aj, aj_star) = bosons.boson_ops(j)?;
            let expected = if i == j { bosons.identity() } else { bosons.zero() };
            ccr = ccr.max(a.commutator(&aj_star)?.max_defect(&expected)?);
            ccr = ccr.max(a.commutator(&aj)?.max_abs_protected());
        }
    }
    reports.push(CheckReport::new("ccr", 0.0, bosons.dim(), ccr, tol));

    let fermions = FockSpace::occupancy(Statistics::Fermion, omegas.clone(), 0)?;
    let mut car: f64 = 0.0;
    for i in 0..cfg.modes {
        let (b, _) = fermions.fermion_ops(i)?;
        for j in 0..cfg.modes {
            let (bj, bj_star) = fermions.fermion_ops(j)?;
            let expected = if i == j { fermions.identity() } else { fermions.zero() };
            car = car.max(b.anticommutator(&bj_star)?.sub(&expected)?.max_abs());
            car = car.max(b.anticommutator(&bj)?.max_abs());
        }
    }
    reports.push(CheckReport::new("car", 0.0, fermions.dim(), car, tol));

    // Doubled layouts pair +ω and −ω, so K = modes / 2 signed pairs.
    let k = (cfg.modes / 2).max(1);
    let signed = &sys.omegas()[..k];
    let field_space = FockSpace::doubled(Statistics::Boson, &sys, k, m)?;
    let mut field: f64 = 0.0;
    for &(x, y) in &FIELD_POINTS {
        let (phi, _) = field_space.field_ops(x, 0.4, k)?;
        let (_, pi) = field_space.field_ops(y, 0.4, k)?;
        let expected = field_space.identity().scale(Complex64::new(0.0, delta_k(signed, x - y)));
        field = field.max(phi.commutator(&pi)?.max_defect(&expected)?);
        field = field.max(phi.commutator(&field_space.field_ops(y, 0.4, k)?.0)?.max_abs_protected());
    }
    reports.push(CheckReport::new("field-ccr", 0.0, field_space.dim(), field, tol));

    let fermi_space = FockSpace::doubled(Statistics::Fermion, &sys, k, 0)?;
    let mut fermi: f64 = 0.0;
    for &(x, y) in &FIELD_POINTS {
        let left = fermi_space.fermi_fields(x, k)?;
        let right = fermi_space.fermi_fields(y, k)?;
        let lhs = [&left.0, &left.1];
        let rhs = [&right.0, &right.1];
        for (i, l) in lhs.iter().enumerate() {
            for (j, r) in rhs.iter().enumerate() {
                let d = if i == j { 2.0 * delta_k(signed, x - y) } else { 0.0 };
                let expected = fermi_space.identity().scale(c(d));
                fermi = fermi.max(l.anticommutator(r)?.sub(&expected)?.max_abs());
            }
        }
    }
    reports.push(CheckReport::new("field-car", 0.0, fermi_space.dim(), fermi, tol));

    let susy = FockSpace::doubled(Statistics::Graded, &sys, k, m)?;
    let q = susy.supercharge(k)?;
    let q2 = q.mul(&q)?.with_protected(susy.bosons_below(m))?;
    reports.push(CheckReport::new(
        "q-squared",
        0.0,
        susy.dim(),
        q2.max_defect(&susy.hamiltonian())?,
        tol,
    ));
    let gamma = susy.grading();
    reports.push(CheckReport::new(
        "grading-anticommutes",
        0.0,
        susy.dim(),
        gamma.anticommutator(&q)?.max_abs(),
        tol,
    ));

    let mut rng = kms::seeded_rng(cfg.seed);
    for &beta in &cfg.betas {
        let ctx = ThermalContext::new(bosons.clone(), beta)?;
        let norm = (ctx.gibbs(&bosons.identity())? - c(1.0)).norm();
        reports.push(CheckReport::new("gibbs-normalized", beta, bosons.dim(), norm, tol));
        let nnz = 2 * bosons.dim();
        let pairs: Vec<(SparseOperator, SparseOperator)> = (0..cfg.pairs)
            .map(|_| {
                (
                    kms::random_operator(&bosons, &mut rng, nnz, None),
                    kms::random_operator(&bosons, &mut rng, nnz, None),
                )
            })
            .collect();
        let worst = pairs
            .par_iter()
            .map(|(a, b)| ctx.kms_check(a, b))
            .collect::<kronlab_core::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        reports.push(CheckReport::new("kms", beta, bosons.dim(), worst, tol));
    }
    Ok(check_outcome(
        reports,
        json!({"modes": cfg.modes, "boson_cutoff": m, "pairs": cfg.pairs, "signed_pairs": k}),
    ))
}

fn skms_suite(cfg: &ExperimentConfig) -> Res<Outcome> {
    let sys = prefix(&cfg.system, cfg.modes)?;
    let omegas = sys.omegas()[..cfg.modes].to_vec();
    let m = cfg.boson_cutoff;
    let space = FockSpace::occupancy(Statistics::Graded, omegas.clone(), m)?;
    let q = space.supercharge(cfg.modes)?;
    let h = space.hamiltonian();
    let low = space.bosons_below(m);
    let nnz = 2 * space.dim();
    let mut rng = kms::seeded_rng(cfg.seed);
    let mut reports = Vec::new();
    for &beta in &cfg.betas {
        let ctx = ThermalContext::new(space.clone(), beta)?;
        let predicted: f64 = omegas
            .iter()
            .map(|w| 1.0 - (-beta * w * (m as f64 + 1.0)).exp())
            .product();
        let identity = (ctx.skms(&space.identity())? - Complex64::new(predicted, 0.0)).norm();
        reports.push(CheckReport::new("mu-identity", beta, space.dim(), identity, cfg.tol));

        let mut worst = [0.0f64; 7];
        for _ in 0..cfg.pairs {
            let pa: u32 = rng.random_range(0..2);
            let pb: u32 = rng.random_range(0..2);
            let a = kms::random_operator(&space, &mut rng, nnz, Some(pa));
            let b = kms::random_operator(&space, &mut rng, nnz, Some(pb));
            let da = kms::super_d(&space, &q, &a)?;
            let db = kms::super_d(&space, &q, &b)?;
            let a_grade = kms::grade(&space, &a);
            let b_grade = kms::grade(&space, &b);

            worst[0] = worst[0].max(ctx.skms(&da)?.norm());
            worst[1] = worst[1].max(ctx.twisted_kms_check(&a, &b)?);
            let leibniz = kms::super_d(&space, &q, &a.mul(&b)?)?.sub(&da.mul(&b)?.add(&a_grade.mul(&db)?)?)?;
            worst[2] = worst[2].max(leibniz.max_abs());

            // d² = [H, ·] holds exactly on operators supported where Q² = H.
            let a_low = a.map_entries(|r, c, v| if low[r] && low[c] { v } else { Complex64::new(0.0, 0.0) });
            let dd = kms::super_d(&space, &q, &kms::super_d(&space, &q, &a_low)?)?;
            let square = dd.sub(&h.commutator(&a_low)?)?.with_protected(low.clone())?;
            worst[3] = worst[3].max(square.max_abs_protected());

            let t = 0.37;
            let flowed = space.evolution(t).mul(&a)?.mul(&space.evolution(-t))?;
            worst[4] = worst[4].max((ctx.skms(&flowed)? - ctx.skms(&a)?).norm());
            worst[5] = worst[5].max((ctx.skms(&a_grade)? - ctx.skms(&a)?).norm());
            worst[6] = worst[6].max((ctx.skms(&a.mul(&db)?)? - ctx.skms(&da.mul(&b_grade)?)?).norm());
        }
        let names = [
            "mu-of-d",
            "twisted-kms",
            "graded-leibniz",
            "d-squared",
            "flow-invariance",
            "grading-invariance",
            "integration-by-parts",
        ];
        for (name, d) in names.iter().zip(worst) {
            reports.push(CheckReport::new(name, beta, space.dim(), d, cfg.tol));
        }
    }
    Ok(check_outcome(
        reports,
        json!({"modes": cfg.modes, "boson_cutoff": m, "pairs": cfg.pairs, "seed": cfg.seed}),
    ))
}

fn witten(cfg: &ExperimentConfig) -> Res<Outcome> {
    let sys = prefix(&cfg.system, cfg.modes)?;
    let omegas = sys.omegas()[..cfg.modes].to_vec();
    let m = cfg.boson_cutoff as f64;
    let space = FockSpace::occupancy(Statistics::Graded, omegas.clone(), cfg.boson_cutoff)?;
    let k = cfg.modes as f64;
    let mut table = Table::new(&["beta", "index", "predicted", "defect", "bound"]);
    let mut indices = Vec::new();
    let mut pass = true;
    let mut rows = Vec::new();
    for &beta in &cfg.betas {
        let ctx = ThermalContext::new(space.clone(), beta)?;
        let index = ctx.witten_index();
        let predicted: f64 = omegas.iter().map(|w| 1.0 - (-beta * w * (m + 1.0)).exp()).product();
        let bound = 2.0 * k * (-beta * omegas[0] * (m + 1.0)).exp();
        let defect = (index - 1.0).abs();
        let ok = defect <= bound && (index - predicted).abs() <= 1e-12;
        pass &= ok;
        table.push(vec![fmt_f64(beta), fmt_f64(index), fmt_f64(predicted), fmt_f64(defect), fmt_f64(bound)]);
        rows.push(json!({"beta": beta, "index": index, "predicted": predicted, "defect": defect, "bound": bound, "pass": ok}));
        indices.push(index);
    }
    let beta_min = cfg.betas.iter().copied().fold(f64::INFINITY, f64::min);
    let tails: f64 = omegas.iter().map(|w| (-beta_min * w * (m + 1.0)).exp()).sum();
    let spread = indices.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - indices.iter().copied().fold(f64::INFINITY, f64::min);
    let stable = spread <= tails;
    Ok(Outcome {
        table,
        results: json!({
            "modes": cfg.modes,
            "boson_cutoff": cfg.boson_cutoff,
            "dims": space.dim(),
            "rows": rows,
            "beta_independence": {"spread": spread, "tail_sum": tails, "pass": stable},
        }),
        pass: pass && stable,
        plot: None,
    })
}

fn nullspace(cfg: &ExperimentConfig) -> Res<Outcome> {
    let sys = prefix(&cfg.system, 1)?;
    let w = sys.omegas()[0];
    let fermion = FockSpace::occupancy(Statistics::Fermion, vec![w], 0)?;
    let susy = FockSpace::occupancy(Statistics::Graded, vec![w], cfg.boson_cutoff)?;
    let mut table = Table::new(&["case", "d", "beta", "dimension"]);
    let mut rows = Vec::new();
    let mut pass = true;
    for &beta in &cfg.betas {
        let cases = [
            ("fermion", fermion.dim(), kms::pre_skms_nullspace(&fermion, beta)?),
            ("susy", susy.dim(), kms::pre_skms_nullspace(&susy, beta)?),
            ("trace", 2, kms::nullspace_dimension(&[0.0, 0.0], &[0, 0], beta)?),
        ];
        for (name, d, dim) in cases {
            pass &= dim == 1;
            table.push(vec![name.to_string(), d.to_string(), fmt_f64(beta), dim.to_string()]);
            rows.push(json!({"case": name, "d": d, "beta": beta, "dimension": dim}));
        }
    }
    Ok(Outcome {
        table,
        results: json!({"rows": rows, "expected_dimension": 1}),
        pass,
        plot: None,
    })
}

fn classical_demo(cfg: &ExperimentConfig) -> Res<Outcome> {
    let k = cfg.modes;
    let sys = Arc::new(prefix(&cfg.system, k)?);
    let mut rng = kms::seeded_rng(cfg.seed);
    let field = ClassicalField::random(sys.clone(), k, &mut rng)?;
    let e0 = field.energy();
    let mut table = Table::new(&["t", "energy", "energy_by_mean", "phi_at_0", "pi_at_0", "reconstruction_defect"]);
    let mut conservation: f64 = 0.0;
    let mut mean_gap: f64 = 0.0;
    let mut reconstruction: f64 = 0.0;
    let mut wave: f64 = 0.0;
    let mut snapshots = Vec::new();
    for &t in &cfg.times {
        let energy = field.evolved(t).energy();
        let by_mean = field.energy_by_mean(t)?;
        let (phi, pi) = field.evolve(t);
        let (phi_r, pi_r) = field.reconstruct(t);
        let defect = (&phi - &phi_r).l1_norm().max((&pi - &pi_r).l1_norm()) / phi.l1_norm().max(1e-300);
        conservation = conservation.max((energy - e0).abs() / e0);
        mean_gap = mean_gap.max((by_mean - e0).abs() / e0);
        reconstruction = reconstruction.max(defect);

        // Second differences in t and x should cancel for the wave equation.
        let hstep = 1e-3;
        for x in [0.0, 0.7, 2.3] {
            let at = |dx: f64, dt: f64| field.evolve(t + dt).0.evaluate(x + dx).re;
            let centre = at(0.0, 0.0);
            let dtt = (at(0.0, hstep) + at(0.0, -hstep) - 2.0 * centre) / (hstep * hstep);
            let dxx = (at(hstep, 0.0) + at(-hstep, 0.0) - 2.0 * centre) / (hstep * hstep);
            let scale = dtt.abs().max(dxx.abs()).max(1.0);
            wave = wave.max((dtt - dxx).abs() / scale);
        }
        table.push(vec![
            fmt_f64(t),
            fmt_f64(energy),
            fmt_f64(by_mean),
            fmt_f64(phi.evaluate(0.0).re),
            fmt_f64(pi.evaluate(0.0).re),
            fmt_f64(defect),
        ]);
        snapshots.push(Series {
            name: format!("t = {t}"),
            points: (0..=200)
                .map(|i| {
                    let x = 20.0 * i as f64 / 200.0;
                    (x, phi.evaluate(x).re)
                })
                .collect(),
        });
    }

    let actions = field.to_action();
    let back = ClassicalField::from_action(sys.clone(), k, &actions)?;
    let round_trip = field
        .phi1()
        .iter()
        .zip(back.phi1())
        .chain(field.phi2().iter().zip(back.phi2()))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let mut canonical: f64 = 0.0;
    let mut commuting: f64 = 0.0;
    for i in 0..2 * k {
        for j in 0..2 * k {
            let a_i = LinearObservable::action(&sys, k, i);
            let a_j = LinearObservable::action(&sys, k, j);
            let a_bar_j = LinearObservable::action_conj(&sys, k, j);
            let expected = if i == j { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 0.0) };
            canonical = canonical.max((poisson(&a_i, &a_bar_j)? - expected).norm());
            commuting = commuting.max(poisson(&a_i, &a_j)?.norm());
        }
    }
    let signed = &sys.omegas()[..k];
    let mut field_bracket: f64 = 0.0;
    for &(x, y) in &FIELD_POINTS {
        let b = poisson(
            &LinearObservable::field_at(&sys, k, x),
            &LinearObservable::momentum_at(&sys, k, y),
        )?;
        field_bracket = field_bracket.max((b - Complex64::new(delta_k(signed, x - y), 0.0)).norm());
    }

    let checks = [
        ("energy-conservation", conservation, 1e-10),
        ("energy-by-mean", mean_gap, 1e-10),
        ("reconstruction", reconstruction, 1e-12),
        ("wave-equation", wave, 1e-5),
        ("action-round-trip", round_trip, 1e-12),
        ("bracket-a-abar", canonical, 1e-12),
        ("bracket-a-a", commuting, 1e-12),
        ("bracket-phi-pi", field_bracket, 1e-12),
    ];
    let pass = checks.iter().all(|&(_, d, tol)| d <= tol);
    let plot = Plot {
        title: "field snapshots φ(x, t)".into(),
        x_label: "x".into(),
        y_label: "φ".into(),
        log_x: false,
        log_y: false,
        series: snapshots,
    };
    Ok(Outcome {
        table,
        results: json!({
            "modes": k,
            "energy": e0,
            "checks": checks
                .iter()
                .map(|&(name, d, tol)| json!({"check": name, "defect": d, "tol": tol, "pass": d <= tol}))
                .collect::<Vec<_>>(),
            "bracket_convention": "{a, ā} = −i",
        }),
        pass,
        plot: Some(plot),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn partition_sums() {
        assert_eq!(partition_prefix_sums(5), vec![1, 2, 4, 7, 12, 19]);
    }

    #[test]
    fn delta_k_matches_definition() {
        assert_eq!(delta_k(&[1.0], 0.0), 2.0);
        assert!((delta_k(&[1.0, 2.0], PI) - (2.0 * -1.0 + 2.0)).abs() < 1e-12);
    }
}
