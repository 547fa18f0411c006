//! The classical almost periodic wave equation φ_tt = φ_xx over Ω = ±Ω₊.
//!
//! A solution is φ(x,t) = Σ_ω (φ₁,ω e^{iω(x+t)} + φ₂,ω e^{iω(x−t)}). Signed
//! modes use the doubled layout: index j < K is +ω_{j+1}, index K + j is −ω_{j+1}.
//!
//! Linear observables L = Σ_κ (u_κ c_κ + v_κ p_κ) act on the Fourier
//! coefficients c, p of φ(·,0) and π(·,0). The canonical bracket
//! {φ(x), π(y)} = δ_Ω(x − y) gives {c_κ, p_λ} = δ_{κ,−λ}.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::apalgebra::{FourierIndex, TrigPolynomial};
use crate::frequencies::FrequencySystem;
use crate::{Error, Result, ZERO};

fn signed_index(k: usize, j: usize) -> FourierIndex {
    if j < k {
        FourierIndex::single(j, 1)
    } else {
        FourierIndex::single(j - k, -1)
    }
}

fn partner(k: usize, j: usize) -> usize {
    (j + k) % (2 * k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalField {
    sys: Arc<FrequencySystem>,
    k: usize,
    phi1: Vec<Complex64>,
    phi2: Vec<Complex64>,
}

impl ClassicalField {
    /// Validates lengths (2K each) and the reality condition φ̄_ω = φ_{−ω}.
    pub fn new(sys: Arc<FrequencySystem>, k: usize, phi1: Vec<Complex64>, phi2: Vec<Complex64>) -> Result<Self> {
        if k == 0 || k > sys.count() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                available: sys.count(),
            });
        }
        for v in [&phi1, &phi2] {
            if v.len() != 2 * k {
                return Err(Error::DimensionMismatch(v.len(), 2 * k));
            }
            let scale = v.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for j in 0..k {
                if (v[j].conj() - v[j + k]).norm() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "coefficients at ±ω_{} violate the reality condition",
                        j + 1
                    )));
                }
            }
        }
        Ok(ClassicalField { sys, k, phi1, phi2 })
    }

    pub fn zero(sys: Arc<FrequencySystem>, k: usize) -> Result<Self> {
        Self::new(sys, k, vec![ZERO; 2 * k], vec![ZERO; 2 * k])
    }

    /// Random real field with coefficients uniform in the unit square.
    pub fn random<R: Rng>(sys: Arc<FrequencySystem>, k: usize, rng: &mut R) -> Result<Self> {
        let mut draw = || {
            let half: Vec<Complex64> = (0..k)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let mut full = half.clone();
            full.extend(half.iter().map(|z| z.conj()));
            full
        };
        let phi1 = draw();
        let phi2 = draw();
        Self::new(sys, k, phi1, phi2)
    }

    pub fn modes(&self) -> usize {
        self.k
    }

    pub fn system(&self) -> &Arc<FrequencySystem> {
        &self.sys
    }

    pub fn phi1(&self) -> &[Complex64] {
        &self.phi1
    }

    pub fn phi2(&self) -> &[Complex64] {
        &self.phi2
    }

    /// Signed frequency of layout index j.
    pub fn frequency(&self, j: usize) -> f64 {
        let w = self.sys.omegas()[j % self.k];
        if j < self.k {
            w
        } else {
            -w
        }
    }

    /// The same solution with time origin moved to t.
    pub fn evolved(&self, t: f64) -> Self {
        let phase = |j: usize, s: f64| Complex64::from_polar(1.0, s * self.frequency(j) * t);
        ClassicalField {
            sys: self.sys.clone(),
            k: self.k,
            phi1: self.phi1.iter().enumerate().map(|(j, z)| z * phase(j, 1.0)).collect(),
            phi2: self.phi2.iter().enumerate().map(|(j, z)| z * phase(j, -1.0)).collect(),
        }
    }

    /// (φ(·,t), π(·,t)) with π = ∂_t φ.
    pub fn evolve(&self, t: f64) -> (TrigPolynomial, TrigPolynomial) {
        let at = self.evolved(t);
        let i = Complex64::i();
        let phi = TrigPolynomial::from_terms(
            self.sys.clone(),
            (0..2 * self.k).map(|j| (signed_index(self.k, j), at.phi1[j] + at.phi2[j])),
        );
        let pi = TrigPolynomial::from_terms(
            self.sys.clone(),
            (0..2 * self.k).map(|j| (signed_index(self.k, j), i * self.frequency(j) * (at.phi1[j] - at.phi2[j]))),
        );
        (phi, pi)
    }

    /// Coefficients (c_κ, p_κ) of φ(·,0) and π(·,0) in layout order.
    pub fn initial_data(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let c = (0..2 * self.k).map(|j| self.phi1[j] + self.phi2[j]).collect();
        let p = (0..2 * self.k)
            .map(|j| Complex64::i() * self.frequency(j) * (self.phi1[j] - self.phi2[j]))
            .collect();
        (c, p)
    }

    /// a_ω = √2 |ω|^{1/2} φ₁,₋ω for ω > 0 and √2 |ω|^{1/2} φ₂,₋ω for ω < 0.
    pub fn to_action(&self) -> Vec<Complex64> {
        (0..2 * self.k)
            .map(|j| {
                let s = SQRT_2 * self.frequency(j).abs().sqrt();
                let m = partner(self.k, j);
                if j < self.k {
                    s * self.phi1[m]
                } else {
                    s * self.phi2[m]
                }
            })
            .collect()
    }

    /// Inverse of [`to_action`](Self::to_action).
    pub fn from_action(sys: Arc<FrequencySystem>, k: usize, a: &[Complex64]) -> Result<Self> {
        if a.len() != 2 * k {
            return Err(Error::DimensionMismatch(a.len(), 2 * k));
        }
        if k > sys.count() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                available: sys.count(),
            });
        }
        let mut phi1 = vec![ZERO; 2 * k];
        let mut phi2 = vec![ZERO; 2 * k];
        for j in 0..k {
            let s = SQRT_2 * sys.omegas()[j].sqrt();
            // a_{+ω} fixes φ₁ at −ω, a_{−ω} fixes φ₂ at +ω.
            phi1[j + k] = a[j] / s;
            phi1[j] = phi1[j + k].conj();
            phi2[j] = a[j + k] / s;
            phi2[j + k] = phi2[j].conj();
        }
        Self::new(sys, k, phi1, phi2)
    }

    /// φ and π rebuilt from the action variables:
    /// φ = 2^{−1/2} Σ |ω|^{−1/2} (ā_ω e^{it|ω|} + a_{−ω} e^{−it|ω|}) e^{iωx},
    /// π = i 2^{−1/2} Σ |ω|^{1/2} (ā_ω e^{it|ω|} − a_{−ω} e^{−it|ω|}) e^{iωx}.
    pub fn reconstruct(&self, t: f64) -> (TrigPolynomial, TrigPolynomial) {
        let a = self.to_action();
        let i = Complex64::i();
        let mut phi_terms = Vec::new();
        let mut pi_terms = Vec::new();
        for j in 0..2 * self.k {
            let w = self.frequency(j).abs();
            let fwd = a[j].conj() * Complex64::from_polar(1.0, t * w);
            let bwd = a[partner(self.k, j)] * Complex64::from_polar(1.0, -t * w);
            phi_terms.push((signed_index(self.k, j), (fwd + bwd) / (SQRT_2 * w.sqrt())));
            pi_terms.push((signed_index(self.k, j), i * (fwd - bwd) * w.sqrt() / SQRT_2));
        }
        (
            TrigPolynomial::from_terms(self.sys.clone(), phi_terms),
            TrigPolynomial::from_terms(self.sys.clone(), pi_terms),
        )
    }

    /// Σ_ω ω² (|φ₁,ω|² + |φ₂,ω|²), equal to Σ_ω |ω| |a_ω|².
    pub fn energy(&self) -> f64 {
        (0..2 * self.k)
            .map(|j| self.frequency(j).powi(2) * (self.phi1[j].norm_sqr() + self.phi2[j].norm_sqr()))
            .sum()
    }

    /// ½ ∫_ap (π² + (∂_x φ)²) dx at time t, computed from the polynomials.
    pub fn energy_by_mean(&self, t: f64) -> Result<f64> {
        let (phi, pi) = self.evolve(t);
        let dphi = phi.derivative();
        let density = pi.multiply(&pi)?.add(&dphi.multiply(&dphi)?)?;
        Ok(0.5 * density.bohr_mean().re)
    }
}

/// L = Σ_κ (u_κ c_κ + v_κ p_κ) over signed modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearObservable {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

impl LinearObservable {
    fn empty(k: usize) -> Self {
        LinearObservable {
            u: vec![ZERO; 2 * k],
            v: vec![ZERO; 2 * k],
        }
    }

    pub fn modes(&self) -> usize {
        self.u.len() / 2
    }

    /// φ(x) at time 0.
    pub fn field_at(sys: &FrequencySystem, k: usize, x: f64) -> Self {
        let mut l = Self::empty(k);
        for j in 0..2 * k {
            let w = if j < k { sys.omegas()[j] } else { -sys.omegas()[j - k] };
            l.u[j] = Complex64::from_polar(1.0, w * x);
        }
        l
    }

    /// π(x) at time 0.
    pub fn momentum_at(sys: &FrequencySystem, k: usize, x: f64) -> Self {
        let f = Self::field_at(sys, k, x);
        LinearObservable { u: f.v, v: f.u }
    }

    /// a_ω = 2^{−1/2} |ω|^{1/2} (c_{−ω} + i p_{−ω}/|ω|) for layout index j.
    pub fn action(sys: &FrequencySystem, k: usize, j: usize) -> Self {
        let w = sys.omegas()[j % k];
        let m = partner(k, j);
        let mut l = Self::empty(k);
        l.u[m] = Complex64::new(w.sqrt() / SQRT_2, 0.0);
        l.v[m] = Complex64::new(0.0, 1.0 / (SQRT_2 * w.sqrt()));
        l
    }

    /// ā_ω, the complex conjugate observable.
    pub fn action_conj(sys: &FrequencySystem, k: usize, j: usize) -> Self {
        let a = Self::action(sys, k, j);
        let mut l = Self::empty(k);
        for m in 0..2 * k {
            // conj(c_κ) = c_{−κ} for real fields.
            l.u[partner(k, m)] = a.u[m].conj();
            l.v[partner(k, m)] = a.v[m].conj();
        }
        l
    }

    pub fn evaluate(&self, field: &ClassicalField) -> Result<Complex64> {
        if field.modes() != self.modes() {
            return Err(Error::DimensionMismatch(field.modes(), self.modes()));
        }
        let (c, p) = field.initial_data();
        Ok(self.u.iter().zip(&c).map(|(a, b)| a * b).sum::<Complex64>()
            + self.v.iter().zip(&p).map(|(a, b)| a * b).sum::<Complex64>())
    }
}

/// {L₁, L₂} = Σ_κ (u₁,κ v₂,₋κ − v₁,κ u₂,₋κ).
pub fn poisson(a: &LinearObservable, b: &LinearObservable) -> Result<Complex64> {
    let k = a.modes();
    if b.modes() != k {
        return Err(Error::DimensionMismatch(a.modes(), b.modes()));
    }
    Ok((0..2 * k)
        .map(|j| {
            let m = partner(k, j);
            a.u[j] * b.v[m] - a.v[j] * b.u[m]
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apalgebra::delta_truncated;
    use crate::frequencies::SystemKind;
    use crate::kms::seeded_rng;

    fn sys() -> Arc<FrequencySystem> {
        Arc::new(FrequencySystem::generate(SystemKind::Dispersion { mass: 0.6 }, 4).unwrap())
    }

    #[test]
    fn reality_is_enforced() {
        let s = sys();
        let bad = vec![Complex64::new(1.0, 1.0), Complex64::new(1.0, 1.0)];
        assert!(ClassicalField::new(s.clone(), 1, bad.clone(), vec![ZERO; 2]).is_err());
        assert!(ClassicalField::new(s, 1, vec![ZERO; 3], vec![ZERO; 3]).is_err());
    }

    #[test]
    fn evolution_at_zero_and_right_movers() {
        let s = sys();
        let mut rng = seeded_rng(11);
        let f = ClassicalField::random(s.clone(), 3, &mut rng).unwrap();
        let (phi0, _) = f.evolve(0.0);
        let (c, _) = f.initial_data();
        for j in 0..6 {
            assert_eq!(phi0.coefficient(&signed_index(3, j)), c[j]);
        }
        // Right mover: φ(x,t) = φ(x−t,0).
        let rm = ClassicalField::new(s.clone(), 3, vec![ZERO; 6], f.phi2().to_vec()).unwrap();
        let t = 0.9;
        let (phit, _) = rm.evolve(t);
        let (phi0, _) = rm.evolve(0.0);
        for &x in &[0.0, 1.3, -2.2] {
            assert!((phit.evaluate(x) - phi0.evaluate(x - t)).norm() < 1e-12);
        }
    }

    #[test]
    fn wave_equation_by_finite_differences() {
        let s = sys();
        let f = ClassicalField::random(s, 4, &mut seeded_rng(5)).unwrap();
        let (t, x, h) = (0.4, 0.7, 1e-3);
        let at = |t: f64, x: f64| f.evolve(t).0.evaluate(x);
        let tt = (at(t + h, x) - 2.0 * at(t, x) + at(t - h, x)) / (h * h);
        let xx = (at(t, x + h) - 2.0 * at(t, x) + at(t, x - h)) / (h * h);
        assert!((tt - xx).norm() < 1e-6 * tt.norm().max(1.0));
    }

    #[test]
    fn action_round_trip_and_reconstruction() {
        let s = sys();
        let f = ClassicalField::random(s.clone(), 4, &mut seeded_rng(8)).unwrap();
        let back = ClassicalField::from_action(s.clone(), 4, &f.to_action()).unwrap();
        for (a, b) in f.phi1().iter().chain(f.phi2()).zip(back.phi1().iter().chain(back.phi2())) {
            assert!((a - b).norm() < 1e-12);
        }
        for &t in &[0.0, 1.7] {
            let (phi, pi) = f.evolve(t);
            let (rphi, rpi) = f.reconstruct(t);
            assert!((&phi - &rphi).l1_norm() < 1e-12);
            assert!((&pi - &rpi).l1_norm() < 1e-12);
        }
        assert!(ClassicalField::zero(s, 2).unwrap().to_action().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn energy_forms_agree_and_are_conserved() {
        let s = sys();
        let f = ClassicalField::random(s, 4, &mut seeded_rng(2)).unwrap();
        let e = f.energy();
        let by_action: f64 = f
            .to_action()
            .iter()
            .enumerate()
            .map(|(j, a)| f.frequency(j).abs() * a.norm_sqr())
            .sum();
        assert!((e - by_action).abs() < 1e-12 * e);
        for &t in &[0.0, 0.3, 5.0] {
            assert!((f.energy_by_mean(t).unwrap() - e).abs() < 1e-10 * e);
            assert!((f.evolved(t).energy() - e).abs() < 1e-10 * e);
        }
    }

    #[test]
    fn brackets() {
        let s = sys();
        let k = 3;
        for j in 0..2 * k {
            let a = LinearObservable::action(&s, k, j);
            let abar = LinearObservable::action_conj(&s, k, j);
            assert!((poisson(&a, &abar).unwrap() - Complex64::new(0.0, -1.0)).norm() < 1e-14);
            for m in 0..2 * k {
                let b = LinearObservable::action(&s, k, m);
                assert!(poisson(&a, &b).unwrap().norm() < 1e-14);
                if m != j {
                    let bbar = LinearObservable::action_conj(&s, k, m);
                    assert!(poisson(&a, &bbar).unwrap().norm() < 1e-14);
                }
            }
        }
        let (x, y) = (0.4, -1.1);
        let phi = LinearObservable::field_at(&s, k, x);
        let pi = LinearObservable::momentum_at(&s, k, y);
        let delta = delta_truncated(s.clone(), k).unwrap().evaluate(x - y);
        assert!((poisson(&phi, &pi).unwrap() - delta).norm() < 1e-12);
        assert!(poisson(&phi, &LinearObservable::field_at(&s, k, y)).unwrap().norm() < 1e-14);
    }

    #[test]
    fn observables_evaluate_fields() {
        let s = sys();
        let f = ClassicalField::random(s.clone(), 3, &mut seeded_rng(4)).unwrap();
        let a = f.to_action();
        for j in 0..6 {
            let v = LinearObservable::action(&s, 3, j).evaluate(&f).unwrap();
            assert!((v - a[j]).norm() < 1e-12);
        }
        let x = 0.8;
        let v = LinearObservable::field_at(&s, 3, x).evaluate(&f).unwrap();
        assert!((v - f.evolve(0.0).0.evaluate(x)).norm() < 1e-12);
    }
}
