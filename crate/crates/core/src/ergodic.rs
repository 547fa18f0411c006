//! Microcanonical averages τ_E(a) = N(E)^{−1} Σ_{η ≤ E} (e(η), a e(η)) and
//! exact time averages (1/M)∫₀^M U(t) a U(−t) dt.
//!
//! Products of raising operators leave any energy-truncated basis, so
//! observables are built on a space cut at E + margin, where the margin is the
//! largest energy the observable can add. Diagonal entries at η ≤ E are then
//! exactly those of the untruncated operator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apalgebra::TrigPolynomial;
use crate::counting::{self, tie_tolerance};
use crate::fock::{FockSpace, Truncation};
use crate::frequencies::FrequencySystem;
use crate::sparse::SparseOperator;
use crate::{Error, Result, ONE, ZERO};

/// τ_E(a): normalized diagonal sum over basis states with energy ≤ E.
pub fn tau_e(space: &FockSpace, a: &SparseOperator, energy: f64) -> Result<Complex64> {
    if a.space() != space.fingerprint() {
        return Err(Error::IncompatibleSpace("observable was built on another space".into()));
    }
    if let Truncation::EnergyCut(cut) = space.truncation() {
        if energy > cut + tie_tolerance(cut) {
            return Err(Error::InvalidArgument(format!(
                "τ_E at E = {energy} needs a space cut at least at E (have {cut})"
            )));
        }
    }
    let limit = energy + tie_tolerance(energy);
    let mut sum = ZERO;
    let mut n = 0u64;
    for (i, &e) in space.energies().iter().enumerate() {
        if e <= limit {
            sum += a.get(i, i);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument(format!("no states with energy ≤ {energy}")));
    }
    Ok(sum / n as f64)
}

/// Observables with a known classical limit τ(a).
#[derive(Clone, Debug)]
pub enum Observable {
    Identity,
    Toeplitz(TrigPolynomial),
    /// T(f)T(g) − T(fg), in the commutator ideal.
    ToeplitzDefect(TrigPolynomial, TrigPolynomial),
    /// I − u_ω u*_ω on mode `mode` (0-based), a finite-rank factor.
    ModeProjector(usize),
    /// T(f) + (I − u_ω u*_ω).
    ToeplitzPlusProjector(TrigPolynomial, usize),
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Identity => "identity".into(),
            Observable::Toeplitz(_) => "toeplitz".into(),
            Observable::ToeplitzDefect(..) => "toeplitz-defect".into(),
            Observable::ModeProjector(m) => format!("mode-projector-{}", m + 1),
            Observable::ToeplitzPlusProjector(_, m) => format!("toeplitz-plus-projector-{}", m + 1),
        }
    }

    /// Largest energy the operator can add to a lattice point.
    pub fn margin(&self) -> f64 {
        let sys_margin = |f: &TrigPolynomial| {
            f.terms()
                .map(|(i, _)| i.raising_energy(f.system()))
                .fold(0.0, f64::max)
        };
        match self {
            Observable::Identity | Observable::ModeProjector(_) => 0.0,
            Observable::Toeplitz(f) | Observable::ToeplitzPlusProjector(f, _) => sys_margin(f),
            Observable::ToeplitzDefect(f, g) => sys_margin(f) + sys_margin(g),
        }
    }

    /// τ(a) = lim τ_E(a).
    pub fn predicted_limit(&self) -> Complex64 {
        match self {
            Observable::Identity => ONE,
            Observable::Toeplitz(f) | Observable::ToeplitzPlusProjector(f, _) => f.bohr_mean(),
            Observable::ToeplitzDefect(..) | Observable::ModeProjector(_) => ZERO,
        }
    }

    pub fn build(&self, space: &FockSpace) -> Result<SparseOperator> {
        match self {
            Observable::Identity => Ok(space.identity()),
            Observable::Toeplitz(f) => space.toeplitz(f),
            Observable::ToeplitzDefect(f, g) => {
                let fg = f.multiply(g)?;
                space.toeplitz(f)?.mul(&space.toeplitz(g)?)?.sub(&space.toeplitz(&fg)?)
            }
            Observable::ModeProjector(m) => space.mode_vacuum_projector(*m),
            Observable::ToeplitzPlusProjector(f, m) => space.toeplitz(f)?.add(&space.mode_vacuum_projector(*m)?),
        }
    }
}

/// The energy-cut space on which τ_E of `obs` is free of truncation artifacts.
pub fn space_for(sys: &FrequencySystem, obs: &Observable, energy: f64) -> Result<FockSpace> {
    let cut = energy + obs.margin();
    let sys = if sys.is_finite() || sys.largest() > cut {
        sys.clone()
    } else {
        FrequencySystem::covering(sys.kind().clone(), cut)?
    };
    FockSpace::energy_cut(&sys, cut)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicRow {
    pub energy: f64,
    pub n: u64,
    pub tau: (f64, f64),
    pub predicted: (f64, f64),
    /// (N(E) − N(E − ω)) / N(E) for projector observables.
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub observable: String,
    pub rows: Vec<ErgodicRow>,
}

impl ErgodicReport {
    pub fn values(&self) -> Vec<Complex64> {
        self.rows.iter().map(|r| Complex64::new(r.tau.0, r.tau.1)).collect()
    }
}

/// τ_E(a) along an energy grid with the predicted classical limit.
pub fn classical_limit_table(sys: &FrequencySystem, obs: &Observable, grid: &[f64]) -> Result<ErgodicReport> {
    let rows = grid
        .par_iter()
        .map(|&e| {
            let space = space_for(sys, obs, e)?;
            let a = obs.build(&space)?;
            let tau = tau_e(&space, &a, e)?;
            let counting_sys = if sys.is_finite() || sys.largest() > e {
                sys.clone()
            } else {
                FrequencySystem::covering(sys.kind().clone(), e)?
            };
            let n = counting::count_n(&counting_sys, e)?.count;
            let bound = match obs {
                Observable::ModeProjector(m) => Some(counting::window_ratio(
                    &counting_sys,
                    e,
                    counting_sys.omegas()[*m],
                )?),
                _ => None,
            };
            let p = obs.predicted_limit();
            Ok(ErgodicRow {
                energy: e,
                n,
                tau: (tau.re, tau.im),
                predicted: (p.re, p.im),
                bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErgodicReport {
        observable: obs.label(),
        rows,
    })
}

/// (e^{ix} − 1)/(ix), equal to 1 at x = 0.
fn phase_average(x: f64) -> Complex64 {
    if x.abs() < 1e-8 {
        return Complex64::new(1.0 - x * x / 6.0, x / 2.0);
    }
    Complex64::new(x.sin() / x, (1.0 - x.cos()) / x)
}

/// (1/M)∫₀^M e^{itH} a e^{−itH} dt, entrywise (e^{iMΔ} − 1)/(iMΔ) with Δ = E_r − E_c.
pub fn time_average(space: &FockSpace, a: &SparseOperator, m: f64) -> Result<SparseOperator> {
    if a.space() != space.fingerprint() {
        return Err(Error::IncompatibleSpace("observable was built on another space".into()));
    }
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("averaging time must be positive, got {m}")));
    }
    let e = space.energies();
    Ok(a.map_entries(|r, c, v| {
        let d = e[r] - e[c];
        if d == 0.0 {
            v
        } else {
            v * phase_average(m * d)
        }
    }))
}

/// τ_E(A†A) with A = time_average(a, M) − τ(a)·I.
pub fn ergodicity_defect(space: &FockSpace, a: &SparseOperator, limit: Complex64, m: f64, energy: f64) -> Result<f64> {
    let avg = time_average(space, a, m)?;
    let residual = avg.combine(&space.identity(), -limit)?;
    Ok(tau_e(space, &residual.adjoint().mul(&residual)?, energy)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apalgebra::FourierIndex;
    use crate::frequencies::SystemKind;
    use std::sync::Arc;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sys(e: f64) -> Arc<FrequencySystem> {
        Arc::new(FrequencySystem::covering(SystemKind::power_law(1.0, 1.5), e).unwrap())
    }

    #[test]
    fn identity_and_toeplitz_mean() {
        let s = sys(20.0);
        let f = TrigPolynomial::from_terms(
            s.clone(),
            [
                (FourierIndex::zero(), Complex64::new(0.3, -0.2)),
                (FourierIndex::single(0, 1), c(1.0)),
                (FourierIndex::single(1, -1), c(0.5)),
            ],
        );
        let obs = Observable::Toeplitz(f.clone());
        let space = space_for(&s, &obs, 12.0).unwrap();
        let t = obs.build(&space).unwrap();
        assert!((tau_e(&space, &t, 12.0).unwrap() - f.bohr_mean()).norm() < 1e-14);
        assert!((tau_e(&space, &space.identity(), 12.0).unwrap() - ONE).norm() < 1e-15);
    }

    #[test]
    fn projector_matches_window_ratio() {
        let s = sys(20.0);
        let space = FockSpace::energy_cut(&s, 15.0).unwrap();
        let p = space.mode_vacuum_projector(1).unwrap();
        let tau = tau_e(&space, &p, 15.0).unwrap().re;
        let ratio = counting::window_ratio(&s, 15.0, s.omegas()[1]).unwrap();
        assert!((tau - ratio).abs() < 1e-14);
    }

    #[test]
    fn time_average_diagonal_and_shift() {
        let s = sys(20.0);
        let space = FockSpace::energy_cut(&s, 10.0).unwrap();
        let h = space.hamiltonian();
        assert_eq!(time_average(&space, &h, 3.0).unwrap(), h);
        let u = space.shift_power(0, 2).unwrap();
        let m = 50.0;
        let avg = time_average(&space, &u, m).unwrap();
        let bound = 2.0 / (2.0 * s.omegas()[0] * m);
        assert!(avg.max_abs() <= bound + 1e-15);
    }

    #[test]
    fn tau_invariant_under_evolution() {
        let s = sys(20.0);
        let f = TrigPolynomial::from_terms(
            s.clone(),
            [
                (FourierIndex::single(0, 1), c(1.0)),
                (FourierIndex::from_pairs([(0, -1), (1, 1)]), c(0.5)),
                (FourierIndex::zero(), c(0.25)),
            ],
        );
        let obs = Observable::Toeplitz(f.clone());
        let space = space_for(&s, &obs, 9.0).unwrap();
        let t = 0.77;
        let conj = space
            .evolution(t)
            .mul(&obs.build(&space).unwrap())
            .unwrap()
            .mul(&space.evolution(-t))
            .unwrap();
        let flowed = space.toeplitz(&f.kronecker_flow(t)).unwrap();
        assert!(conj.sub(&flowed).unwrap().max_abs() < 1e-12);
        let a = tau_e(&space, &conj, 9.0).unwrap();
        let b = tau_e(&space, &flowed, 9.0).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn wrong_space_and_cut() {
        let s = sys(20.0);
        let small = FockSpace::energy_cut(&s, 5.0).unwrap();
        let big = FockSpace::energy_cut(&s, 6.0).unwrap();
        assert!(tau_e(&small, &big.identity(), 5.0).is_err());
        assert!(tau_e(&small, &small.identity(), 6.0).is_err());
        assert!(time_average(&small, &small.identity(), 0.0).is_err());
    }
}
