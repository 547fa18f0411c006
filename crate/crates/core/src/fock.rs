//! Truncated bosonic, fermionic and graded Fock spaces.
//!
//! Two truncations are supported. `EnergyCut(E)` keeps the lattice points of
//! ℕ[Ω₊] with energy ≤ E in the order produced by [`counting::enumerate`].
//! `OccupancyCut(M)` keeps a tensor-product box 0..=M per boson mode.
//!
//! Field theory over Ω = Ω₊ ∪ Ω₋ uses a doubled layout: modes 0..K carry
//! +ω₁..+ω_K and modes K..2K carry −ω₁..−ω_K, each with energy |ω|.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::apalgebra::TrigPolynomial;
use crate::counting::{self, Occupation};
use crate::frequencies::FrequencySystem;
use crate::sparse::SparseOperator;
use crate::{Error, Result, ONE, ZERO};

/// Largest basis a space may have.
pub const DIM_CAP: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistics {
    Boson,
    Fermion,
    Graded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Truncation {
    EnergyCut(f64),
    OccupancyCut(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    Plain,
    /// K positive frequencies followed by their negatives.
    Doubled(usize),
}

/// A basis vector: boson occupations and fermion occupations (entries 0 or 1).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    pub bosons: Occupation,
    pub fermions: Occupation,
}

impl BasisState {
    pub fn parity(&self) -> u32 {
        self.fermions.total() % 2
    }
}

#[derive(Clone, Debug)]
pub struct FockSpace {
    statistics: Statistics,
    truncation: Truncation,
    layout: Layout,
    mode_omegas: Vec<f64>,
    basis: Vec<BasisState>,
    energies: Vec<f64>,
    index: HashMap<BasisState, usize>,
    fingerprint: u64,
}

impl PartialEq for FockSpace {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint && self.basis == other.basis
    }
}

impl FockSpace {
    /// The bosonic space spanned by e(η), η ∈ ℕ[Ω₊], η ≤ E.
    pub fn energy_cut(sys: &FrequencySystem, energy: f64) -> Result<Self> {
        let points = counting::enumerate_capped(sys, energy, DIM_CAP as u64).map_err(|e| match e {
            Error::CountCap { cap } => Error::TooLarge {
                dim: cap as usize + 1,
                cap: DIM_CAP,
            },
            other => other,
        })?;
        let basis = points
            .into_iter()
            .map(|(_, occ)| BasisState {
                bosons: occ,
                fermions: Occupation::vacuum(),
            })
            .collect();
        Self::build(
            Statistics::Boson,
            Truncation::EnergyCut(energy),
            Layout::Plain,
            sys.omegas().to_vec(),
            basis,
        )
    }

    /// Tensor-product box: boson occupancies 0..=cutoff, fermion occupancies 0..=1.
    pub fn occupancy(statistics: Statistics, mode_omegas: Vec<f64>, cutoff: u32) -> Result<Self> {
        Self::occupancy_with_layout(statistics, mode_omegas, cutoff, Layout::Plain)
    }

    /// Doubled-mode space for fields over ±ω₁..±ω_K.
    pub fn doubled(statistics: Statistics, sys: &FrequencySystem, k: usize, cutoff: u32) -> Result<Self> {
        if k == 0 || k > sys.count() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                available: sys.count(),
            });
        }
        let mut omegas = sys.omegas()[..k].to_vec();
        omegas.extend_from_slice(&sys.omegas()[..k]);
        Self::occupancy_with_layout(statistics, omegas, cutoff, Layout::Doubled(k))
    }

    fn occupancy_with_layout(
        statistics: Statistics,
        mode_omegas: Vec<f64>,
        cutoff: u32,
        layout: Layout,
    ) -> Result<Self> {
        if mode_omegas.is_empty() || mode_omegas.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidSystem("modes need positive frequencies".into()));
        }
        let k = mode_omegas.len() as u32;
        let boson_dim = (cutoff as f64 + 1.0).powi(k as i32);
        let fermion_dim = 2f64.powi(k as i32);
        let dim = match statistics {
            Statistics::Boson => boson_dim,
            Statistics::Fermion => fermion_dim,
            Statistics::Graded => boson_dim * fermion_dim,
        };
        if dim > DIM_CAP as f64 {
            return Err(Error::TooLarge {
                dim: dim.min(usize::MAX as f64) as usize,
                cap: DIM_CAP,
            });
        }
        let boxes = |radix: u32| -> Vec<Occupation> {
            let count = (radix as usize).pow(k);
            (0..count)
                .map(|mut i| {
                    let mut digits = vec![0u32; k as usize];
                    for d in digits.iter_mut().rev() {
                        *d = (i % radix as usize) as u32;
                        i /= radix as usize;
                    }
                    Occupation::new(digits)
                })
                .collect()
        };
        let basis: Vec<BasisState> = match statistics {
            Statistics::Boson => boxes(cutoff + 1)
                .into_iter()
                .map(|b| BasisState {
                    bosons: b,
                    fermions: Occupation::vacuum(),
                })
                .collect(),
            Statistics::Fermion => boxes(2)
                .into_iter()
                .map(|f| BasisState {
                    bosons: Occupation::vacuum(),
                    fermions: f,
                })
                .collect(),
            Statistics::Graded => {
                let fermions = boxes(2);
                boxes(cutoff + 1)
                    .into_iter()
                    .flat_map(|b| {
                        fermions.iter().map(move |f| BasisState {
                            bosons: b.clone(),
                            fermions: f.clone(),
                        })
                    })
                    .collect()
            }
        };
        Self::build(statistics, Truncation::OccupancyCut(cutoff), layout, mode_omegas, basis)
    }

    fn build(
        statistics: Statistics,
        truncation: Truncation,
        layout: Layout,
        mode_omegas: Vec<f64>,
        basis: Vec<BasisState>,
    ) -> Result<Self> {
        let energies = basis
            .iter()
            .map(|s| s.bosons.energy(&mode_omegas) + s.fermions.energy(&mode_omegas))
            .collect();
        let index = basis.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut h = DefaultHasher::new();
        statistics.hash(&mut h);
        match truncation {
            Truncation::EnergyCut(e) => (0u8, e.to_bits()).hash(&mut h),
            Truncation::OccupancyCut(m) => (1u8, m as u64).hash(&mut h),
        }
        layout.hash(&mut h);
        for w in &mode_omegas {
            w.to_bits().hash(&mut h);
        }
        basis.len().hash(&mut h);
        Ok(FockSpace {
            statistics,
            truncation,
            layout,
            mode_omegas,
            basis,
            energies,
            index,
            fingerprint: h.finish(),
        })
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn modes(&self) -> usize {
        self.mode_omegas.len()
    }

    pub fn mode_omegas(&self) -> &[f64] {
        &self.mode_omegas
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn has_bosons(&self) -> bool {
        self.statistics != Statistics::Fermion
    }

    pub fn has_fermions(&self) -> bool {
        self.statistics != Statistics::Boson
    }

    /// Human-readable basis manifest, one line per state.
    pub fn manifest(&self) -> Vec<String> {
        let fmt = |o: &Occupation| {
            o.entries()
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        self.basis
            .iter()
            .map(|s| match self.statistics {
                Statistics::Boson => format!("[{}]", fmt(&s.bosons)),
                Statistics::Fermion => format!("[{}]", fmt(&s.fermions)),
                Statistics::Graded => format!("[{}|{}]", fmt(&s.bosons), fmt(&s.fermions)),
            })
            .collect()
    }

    /// Mask of states whose boson occupancies are all below `bound`.
    pub fn bosons_below(&self, bound: u32) -> Vec<bool> {
        self.basis
            .iter()
            .map(|s| s.bosons.entries().iter().all(|&n| n < bound))
            .collect()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes() {
            return Err(Error::ModeOutOfRange {
                mode,
                available: self.modes(),
            });
        }
        Ok(())
    }

    fn require_bosons(&self) -> Result<()> {
        if !self.has_bosons() {
            return Err(Error::IncompatibleSpace("space has no bosonic factor".into()));
        }
        Ok(())
    }

    fn require_fermions(&self) -> Result<()> {
        if !self.has_fermions() {
            return Err(Error::IncompatibleSpace("space has no fermionic factor".into()));
        }
        Ok(())
    }

    pub fn identity(&self) -> SparseOperator {
        SparseOperator::identity(self.fingerprint, self.dim())
    }

    pub fn zero(&self) -> SparseOperator {
        SparseOperator::zero(self.fingerprint, self.dim())
    }

    pub fn diagonal(&self, values: Vec<Complex64>) -> Result<SparseOperator> {
        if values.len() != self.dim() {
            return Err(Error::DimensionMismatch(values.len(), self.dim()));
        }
        Ok(SparseOperator::diagonal(self.fingerprint, values))
    }

    /// Builds e_c ↦ Σ value·e_r from a per-column map. A column is protected
    /// when every image the map produces lies in the basis.
    fn from_map<F>(&self, map: F) -> SparseOperator
    where
        F: Fn(&BasisState) -> Vec<(BasisState, Complex64)>,
    {
        let mut triplets = Vec::new();
        let mut protected = vec![true; self.dim()];
        for (c, state) in self.basis.iter().enumerate() {
            for (target, v) in map(state) {
                match self.index.get(&target) {
                    Some(&r) => triplets.push((r, c, v)),
                    None => protected[c] = false,
                }
            }
        }
        SparseOperator::from_triplets(self.fingerprint, self.dim(), triplets, protected)
            .expect("indices come from the basis")
    }

    fn boson_step(&self, mode: usize, delta: i64, weighted: bool) -> Result<SparseOperator> {
        self.require_bosons()?;
        self.check_mode(mode)?;
        Ok(self.from_map(|s| {
            let n = s.bosons.get(mode);
            match s.bosons.shifted(mode, delta) {
                None => Vec::new(),
                Some(b) => {
                    let w = if !weighted {
                        1.0
                    } else if delta > 0 {
                        (n as f64 + 1.0).sqrt()
                    } else {
                        (n as f64).sqrt()
                    };
                    vec![(
                        BasisState {
                            bosons: b,
                            fermions: s.fermions.clone(),
                        },
                        Complex64::new(w, 0.0),
                    )]
                }
            }
        }))
    }

    /// (a_ω, a*_ω) with a* e(η) = √(n_ω+1) e(η+ω).
    pub fn boson_ops(&self, mode: usize) -> Result<(SparseOperator, SparseOperator)> {
        Ok((self.boson_step(mode, -1, true)?, self.boson_step(mode, 1, true)?))
    }

    /// The unilateral shift u_ω: e(η) ↦ e(η+ω).
    pub fn shift(&self, mode: usize) -> Result<SparseOperator> {
        self.boson_step(mode, 1, false)
    }

    /// u*_ω: e(η) ↦ e(η−ω), or 0 when n_ω = 0.
    pub fn shift_adjoint(&self, mode: usize) -> Result<SparseOperator> {
        self.boson_step(mode, -1, false)
    }

    /// u_ω(n) = uⁿ for n ≥ 0 and (u*)^{|n|} for n < 0.
    pub fn shift_power(&self, mode: usize, n: i64) -> Result<SparseOperator> {
        if n == 0 {
            return Ok(self.identity());
        }
        self.boson_step(mode, n, false)
    }

    /// I − u_ω u*_ω, the projection onto n_ω = 0.
    pub fn mode_vacuum_projector(&self, mode: usize) -> Result<SparseOperator> {
        self.require_bosons()?;
        self.check_mode(mode)?;
        let values = self
            .basis
            .iter()
            .map(|s| if s.bosons.get(mode) == 0 { ONE } else { ZERO })
            .collect();
        self.diagonal(values)
    }

    /// (b_ω, b*_ω) in Jordan–Wigner form: b*_ω carries (−1)^{Σ_{ω′<ω} n_{ω′}}.
    pub fn fermion_ops(&self, mode: usize) -> Result<(SparseOperator, SparseOperator)> {
        self.require_fermions()?;
        self.check_mode(mode)?;
        let op = |delta: i64| {
            self.from_map(|s| {
                let target = s.fermions.shifted(mode, delta);
                match target {
                    Some(f) if f.get(mode) <= 1 => {
                        let before: u32 = (0..mode).map(|m| s.fermions.get(m)).sum();
                        let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
                        vec![(
                            BasisState {
                                bosons: s.bosons.clone(),
                                fermions: f,
                            },
                            Complex64::new(sign, 0.0),
                        )]
                    }
                    _ => Vec::new(),
                }
            })
        };
        Ok((op(-1), op(1)))
    }

    /// T(f) = Σ f_η Π u_ω(n_ω): e(ξ) ↦ Σ f_η e(ξ+η), dropping ξ+η ∉ ℕ[Ω₊].
    pub fn toeplitz(&self, f: &TrigPolynomial) -> Result<SparseOperator> {
        self.require_bosons()?;
        if self.statistics != Statistics::Boson || self.layout != Layout::Plain {
            return Err(Error::IncompatibleSpace(
                "Toeplitz operators need a plain bosonic space".into(),
            ));
        }
        if let Some(m) = f.max_mode() {
            self.check_mode(m)?;
            let symbol = f.system().omegas();
            if symbol.len() <= m || symbol[..=m] != self.mode_omegas[..=m] {
                return Err(Error::SystemMismatch);
            }
        }
        let terms: Vec<_> = f.terms().map(|(i, c)| (i.clone(), *c)).collect();
        Ok(self.from_map(|s| {
            terms
                .iter()
                .filter_map(|(idx, c)| {
                    s.bosons.shifted_by(idx.entries()).map(|b| {
                        (
                            BasisState {
                                bosons: b,
                                fermions: s.fermions.clone(),
                            },
                            *c,
                        )
                    })
                })
                .collect()
        }))
    }

    /// Diagonal H with eigenvalue Σ n_ω |ω| over bosons and fermions.
    pub fn hamiltonian(&self) -> SparseOperator {
        SparseOperator::diagonal(
            self.fingerprint,
            self.energies.iter().map(|&e| Complex64::new(e, 0.0)).collect(),
        )
    }

    /// Total number operator F.
    pub fn number(&self) -> SparseOperator {
        SparseOperator::diagonal(
            self.fingerprint,
            self.basis
                .iter()
                .map(|s| Complex64::new((s.bosons.total() + s.fermions.total()) as f64, 0.0))
                .collect(),
        )
    }

    /// Γ = (−1)^{fermion number}.
    pub fn grading(&self) -> SparseOperator {
        SparseOperator::diagonal(
            self.fingerprint,
            self.basis
                .iter()
                .map(|s| if s.parity() == 0 { ONE } else { -ONE })
                .collect(),
        )
    }

    /// U(t) = e^{itH}.
    pub fn evolution(&self, t: f64) -> SparseOperator {
        SparseOperator::diagonal(
            self.fingerprint,
            self.energies.iter().map(|&e| Complex64::from_polar(1.0, t * e)).collect(),
        )
    }

    fn doubled_k(&self, k: usize) -> Result<usize> {
        match self.layout {
            Layout::Doubled(total) if k >= 1 && k <= total => Ok(total),
            Layout::Doubled(total) => Err(Error::ModeOutOfRange { mode: k, available: total }),
            Layout::Plain => Err(Error::IncompatibleSpace("fields need the doubled-mode layout".into())),
        }
    }

    /// (φ_K(x,t), π_K(x,t)) summed over ±ω₁..±ω_K:
    /// φ = 2^{−1/2} Σ |ω|^{−1/2} (a*_ω e^{it|ω|} + a_{−ω} e^{−it|ω|}) e^{iωx},
    /// π = i 2^{−1/2} Σ |ω|^{1/2} (a*_ω e^{it|ω|} − a_{−ω} e^{−it|ω|}) e^{iωx}.
    pub fn field_ops(&self, x: f64, t: f64, k: usize) -> Result<(SparseOperator, SparseOperator)> {
        let total = self.doubled_k(k)?;
        self.require_bosons()?;
        let mut phi = self.zero();
        let mut pi = self.zero();
        for j in 0..k {
            let w = self.mode_omegas[j];
            for (plus, minus, value) in [(j, total + j, w), (total + j, j, -w)] {
                let (_, create) = self.boson_ops(plus)?;
                let (annihilate, _) = self.boson_ops(minus)?;
                let space = Complex64::from_polar(1.0, value * x);
                let forward = Complex64::from_polar(1.0, t * w) * space;
                let backward = Complex64::from_polar(1.0, -t * w) * space;
                let a = (2.0 * w).sqrt().recip();
                let b = (0.5 * w).sqrt();
                let i = Complex64::i();
                phi = phi
                    .combine(&create, forward * a)?
                    .combine(&annihilate, backward * a)?;
                pi = pi
                    .combine(&create, i * forward * b)?
                    .combine(&annihilate, -i * backward * b)?;
            }
        }
        Ok((phi, pi))
    }

    /// Hermitian Majorana-type fields over ±ω₁..±ω_K:
    /// ψ₁ = Σ (b*_ω + b_{−ω}) e^{−iωx}, ψ₂ = i Σ (b*_ω − b_{−ω}) e^{−iωx}.
    pub fn fermi_fields(&self, x: f64, k: usize) -> Result<(SparseOperator, SparseOperator)> {
        let total = self.doubled_k(k)?;
        self.require_fermions()?;
        let mut psi1 = self.zero();
        let mut psi2 = self.zero();
        let i = Complex64::i();
        for j in 0..k {
            let w = self.mode_omegas[j];
            for (plus, minus, value) in [(j, total + j, w), (total + j, j, -w)] {
                let (_, create) = self.fermion_ops(plus)?;
                let (annihilate, _) = self.fermion_ops(minus)?;
                let phase = Complex64::from_polar(1.0, -value * x);
                psi1 = psi1.combine(&create, phase)?.combine(&annihilate, phase)?;
                psi2 = psi2
                    .combine(&create, i * phase)?
                    .combine(&annihilate, -i * phase)?;
            }
        }
        Ok((psi1, psi2))
    }

    /// Q = Σ √|ω| (a*_ω b_ω + a_ω b*_ω) over the first `k` positive
    /// frequencies and their negatives in the doubled layout, or over all modes
    /// of a plain graded space when `k` equals the mode count.
    pub fn supercharge(&self, k: usize) -> Result<SparseOperator> {
        if self.statistics != Statistics::Graded {
            return Err(Error::IncompatibleSpace("supercharge needs a graded space".into()));
        }
        let modes: Vec<usize> = match self.layout {
            Layout::Doubled(total) => {
                self.doubled_k(k)?;
                (0..k).chain(total..total + k).collect()
            }
            Layout::Plain => {
                if k == 0 || k > self.modes() {
                    return Err(Error::ModeOutOfRange {
                        mode: k,
                        available: self.modes(),
                    });
                }
                (0..k).collect()
            }
        };
        let mut q = self.zero();
        for m in modes {
            let w = self.mode_omegas[m].sqrt();
            let (a, a_star) = self.boson_ops(m)?;
            let (b, b_star) = self.fermion_ops(m)?;
            q = q
                .combine(&a_star.mul(&b)?, Complex64::new(w, 0.0))?
                .combine(&a.mul(&b_star)?, Complex64::new(w, 0.0))?;
        }
        Ok(q)
    }
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

    fn three_halves(e: f64) -> Arc<FrequencySystem> {
        Arc::new(FrequencySystem::covering(SystemKind::power_law(1.0, 1.5), e).unwrap())
    }

    #[test]
    fn energy_cut_basis_matches_counting() {
        let sys = three_halves(12.0);
        let space = FockSpace::energy_cut(&sys, 12.0).unwrap();
        assert_eq!(space.dim() as u64, counting::count_n(&sys, 12.0).unwrap().count);
        assert!(space.basis()[0].bosons.is_vacuum());
        assert!(space.energies().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn shift_identities() {
        let sys = three_halves(10.0);
        let space = FockSpace::energy_cut(&sys, 10.0).unwrap();
        let u = space.shift(0).unwrap();
        let us = space.shift_adjoint(0).unwrap();
        let id = space.identity();
        assert_eq!(us.mul(&u).unwrap().max_defect(&id).unwrap(), 0.0);
        assert!(us.mul(&u).unwrap().protected_count() > 0);
        let proj = space.mode_vacuum_projector(0).unwrap();
        let uus = u.mul(&us).unwrap();
        assert_eq!(uus.max_defect(&id.sub(&proj).unwrap()).unwrap(), 0.0);
        // u e(0) = e(ω₁).
        let target = space
            .index_of(&BasisState {
                bosons: Occupation::new(vec![1]),
                fermions: Occupation::vacuum(),
            })
            .unwrap();
        assert_eq!(u.get(target, 0), ONE);
    }

    #[test]
    fn ccr_and_ladder_values() {
        let space = FockSpace::occupancy(Statistics::Boson, vec![1.0, 2.0], 4).unwrap();
        let (a, a_star) = space.boson_ops(1).unwrap();
        let comm = a.commutator(&a_star).unwrap();
        assert!(comm.max_defect(&space.identity()).unwrap() < 1e-14);
        assert!(comm.protected_count() < space.dim());
        let v0 = {
            let mut v = vec![ZERO; space.dim()];
            v[0] = ONE;
            v
        };
        assert!(a.apply(&v0).unwrap().iter().all(|z| *z == ZERO));
        let one = a_star.apply(&v0).unwrap();
        let e1 = space
            .index_of(&BasisState {
                bosons: Occupation::new(vec![0, 1]),
                fermions: Occupation::vacuum(),
            })
            .unwrap();
        assert_eq!(one[e1], ONE);
        let two = a_star.apply(&one).unwrap();
        let e2 = space
            .index_of(&BasisState {
                bosons: Occupation::new(vec![0, 2]),
                fermions: Occupation::vacuum(),
            })
            .unwrap();
        assert!((two[e2] - c(2f64.sqrt())).norm() < 1e-15);
        let (a0, _) = space.boson_ops(0).unwrap();
        assert_eq!(a0.commutator(&a_star).unwrap().max_abs_protected(), 0.0);
    }

    #[test]
    fn car_with_signs() {
        let space = FockSpace::occupancy(Statistics::Fermion, vec![1.0, 1.5, 2.5], 0).unwrap();
        let id = space.identity();
        for m in 0..3 {
            let (b, bs) = space.fermion_ops(m).unwrap();
            assert_eq!(b.anticommutator(&bs).unwrap().max_defect(&id).unwrap(), 0.0);
            assert_eq!(b.mul(&b).unwrap().max_abs(), 0.0);
            for n in 0..3 {
                let (b2, bs2) = space.fermion_ops(n).unwrap();
                assert_eq!(b.anticommutator(&b2).unwrap().max_abs(), 0.0);
                if n != m {
                    assert_eq!(b.anticommutator(&bs2).unwrap().max_abs(), 0.0);
                }
            }
        }
    }

    #[test]
    fn toeplitz_basics() {
        let sys = three_halves(9.0);
        let space = FockSpace::energy_cut(&sys, 9.0).unwrap();
        let one = TrigPolynomial::constant(sys.clone(), ONE);
        assert_eq!(space.toeplitz(&one).unwrap(), space.identity());
        let e1 = TrigPolynomial::exponential(sys.clone(), 0, 1);
        assert_eq!(space.toeplitz(&e1).unwrap(), space.shift(0).unwrap());
        let f = TrigPolynomial::from_terms(
            sys.clone(),
            [
                (FourierIndex::zero(), c(0.7)),
                (FourierIndex::from_pairs([(0, 1), (1, -1)]), c(2.0)),
                (FourierIndex::single(2, -2), Complex64::new(0.0, 1.0)),
            ],
        );
        let t = space.toeplitz(&f).unwrap();
        assert!(t.diagonal_entries().iter().all(|d| (*d - c(0.7)).norm() < 1e-15));
    }

    #[test]
    fn toeplitz_rejects_foreign_system() {
        let sys = three_halves(9.0);
        let space = FockSpace::energy_cut(&sys, 9.0).unwrap();
        let other = Arc::new(FrequencySystem::covering(SystemKind::power_law(1.0, 2.0), 9.0).unwrap());
        let f = TrigPolynomial::exponential(other, 1, 1);
        assert!(matches!(space.toeplitz(&f), Err(Error::SystemMismatch)));
    }

    #[test]
    fn hamiltonian_grading_evolution() {
        let space = FockSpace::occupancy(Statistics::Graded, vec![1.0, 2.5], 2).unwrap();
        let h = space.hamiltonian();
        let g = space.grading();
        assert_eq!(h.get(0, 0), ZERO);
        assert_eq!(g.mul(&g).unwrap(), space.identity());
        assert_eq!(g.commutator(&h).unwrap().max_abs(), 0.0);
        let u = space.evolution(0.3).mul(&space.evolution(0.4)).unwrap();
        assert!(u.sub(&space.evolution(0.7)).unwrap().max_abs() < 1e-14);
        assert_eq!(space.evolution(0.0), space.identity());
    }

    #[test]
    fn supercharge_squares_to_hamiltonian() {
        let sys = FrequencySystem::generate(SystemKind::power_law(1.0, 1.0), 2).unwrap();
        let space = FockSpace::doubled(Statistics::Graded, &sys, 1, 3).unwrap();
        let q = space.supercharge(1).unwrap();
        let q2 = q.mul(&q).unwrap().with_protected(space.bosons_below(3)).unwrap();
        assert!(q2.max_defect(&space.hamiltonian()).unwrap() < 1e-12);
        let g = space.grading();
        assert_eq!(g.anticommutator(&q).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn sizes_are_capped() {
        assert!(matches!(
            FockSpace::occupancy(Statistics::Graded, vec![1.0; 8], 9),
            Err(Error::TooLarge { .. })
        ));
    }
}
