//! Finite trigonometric polynomials with frequencies in ℤ[Ω₊].
//!
//! Frequencies are stored as exact integer vectors over the modes, never as
//! floating sums, so products and the flow never merge distinct lattice points.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::frequencies::FrequencySystem;
use crate::{Error, Result, ONE, ZERO};

/// Coefficients below this magnitude are dropped after arithmetic.
pub const PRUNE: f64 = 1e-15;

/// A finitely supported integer vector (n_ω) over mode positions (0-based: position k is ω_{k+1}).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FourierIndex(Vec<(usize, i64)>);

impl FourierIndex {
    pub fn zero() -> Self {
        FourierIndex(Vec::new())
    }

    /// n·ω at a single mode.
    pub fn single(mode: usize, n: i64) -> Self {
        Self::from_pairs([(mode, n)])
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, i64)>>(pairs: I) -> Self {
        let mut map = BTreeMap::new();
        for (m, n) in pairs {
            *map.entry(m).or_insert(0) += n;
        }
        FourierIndex(map.into_iter().filter(|&(_, n)| n != 0).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[(usize, i64)] {
        &self.0
    }

    pub fn get(&self, mode: usize) -> i64 {
        self.0
            .binary_search_by_key(&mode, |&(m, _)| m)
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    /// The mode position of a single-mode index ±ω_k with unit coefficient.
    pub fn as_unit_mode(&self) -> Option<(usize, i64)> {
        match self.0.as_slice() {
            [(m, n)] if n.abs() == 1 => Some((*m, *n)),
            _ => None,
        }
    }

    pub fn max_mode(&self) -> Option<usize> {
        self.0.last().map(|&(m, _)| m)
    }

    /// η = Σ n_ω ω.
    pub fn value(&self, sys: &FrequencySystem) -> f64 {
        self.0.iter().map(|&(m, n)| n as f64 * sys.omegas()[m]).sum()
    }

    /// Σ max(n_ω, 0)·ω, the energy a Toeplitz term can add to a lattice point.
    pub fn raising_energy(&self, sys: &FrequencySystem) -> f64 {
        self.0
            .iter()
            .filter(|&&(_, n)| n > 0)
            .map(|&(m, n)| n as f64 * sys.omegas()[m])
            .sum()
    }
}

impl Add for &FourierIndex {
    type Output = FourierIndex;

    fn add(self, rhs: &FourierIndex) -> FourierIndex {
        FourierIndex::from_pairs(self.0.iter().chain(rhs.0.iter()).copied())
    }
}

impl Neg for &FourierIndex {
    type Output = FourierIndex;

    fn neg(self) -> FourierIndex {
        FourierIndex(self.0.iter().map(|&(m, n)| (m, -n)).collect())
    }
}

/// f(x) = Σ f_η e^{iηx} with finitely many η ∈ ℤ[Ω₊].
#[derive(Clone, Debug)]
pub struct TrigPolynomial {
    sys: Arc<FrequencySystem>,
    terms: BTreeMap<FourierIndex, Complex64>,
}

impl PartialEq for TrigPolynomial {
    fn eq(&self, other: &Self) -> bool {
        same_system(&self.sys, &other.sys) && self.terms == other.terms
    }
}

fn same_system(a: &Arc<FrequencySystem>, b: &Arc<FrequencySystem>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl TrigPolynomial {
    pub fn zero(sys: Arc<FrequencySystem>) -> Self {
        TrigPolynomial {
            sys,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(sys: Arc<FrequencySystem>, c: Complex64) -> Self {
        Self::from_terms(sys, [(FourierIndex::zero(), c)])
    }

    pub fn monomial(sys: Arc<FrequencySystem>, index: FourierIndex, c: Complex64) -> Self {
        Self::from_terms(sys, [(index, c)])
    }

    /// e^{±iω_k x} for mode position k.
    pub fn exponential(sys: Arc<FrequencySystem>, mode: usize, sign: i64) -> Self {
        Self::monomial(sys, FourierIndex::single(mode, sign), ONE)
    }

    pub fn from_terms<I: IntoIterator<Item = (FourierIndex, Complex64)>>(
        sys: Arc<FrequencySystem>,
        terms: I,
    ) -> Self {
        let mut out = Self::zero(sys);
        for (k, c) in terms {
            *out.terms.entry(k).or_insert(ZERO) += c;
        }
        out.prune();
        out
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= PRUNE);
    }

    pub fn system(&self) -> &Arc<FrequencySystem> {
        &self.sys
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FourierIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, index: &FourierIndex) -> Complex64 {
        self.terms.get(index).copied().unwrap_or(ZERO)
    }

    /// Largest mode position carrying a nonzero exponent.
    pub fn max_mode(&self) -> Option<usize> {
        self.terms.keys().filter_map(FourierIndex::max_mode).max()
    }

    /// Σ |f_η|, an upper bound for the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// The Bohr mean: the zero-frequency coefficient.
    pub fn bohr_mean(&self) -> Complex64 {
        self.coefficient(&FourierIndex::zero())
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if !same_system(&self.sys, &other.sys) {
            return Err(Error::SystemMismatch);
        }
        let mut terms: BTreeMap<FourierIndex, Complex64> = BTreeMap::new();
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                *terms.entry(i + j).or_insert(ZERO) += a * b;
            }
        }
        let mut out = TrigPolynomial {
            sys: self.sys.clone(),
            terms,
        };
        out.prune();
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !same_system(&self.sys, &other.sys) {
            return Err(Error::SystemMismatch);
        }
        Ok(Self::from_terms(
            self.sys.clone(),
            self.terms.iter().chain(other.terms.iter()).map(|(k, c)| (k.clone(), *c)),
        ))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms(self.sys.clone(), self.terms.iter().map(|(k, c)| (k.clone(), c * s)))
    }

    /// Pointwise complex conjugate: f̄(x) = Σ conj(f_η) e^{−iηx}.
    pub fn conj(&self) -> Self {
        Self::from_terms(self.sys.clone(), self.terms.iter().map(|(k, c)| (-k, c.conj())))
    }

    /// True when f_{−η} = conj(f_η) for all η, i.e. f is real valued.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms
            .iter()
            .all(|(k, c)| (self.coefficient(&-k) - c.conj()).norm() <= tol)
    }

    /// α_t f: the coefficient at η picks up e^{itη}.
    pub fn kronecker_flow(&self, t: f64) -> Self {
        let terms = self.terms.iter().map(|(k, c)| {
            let phase = Complex64::from_polar(1.0, t * k.value(&self.sys));
            (k.clone(), c * phase)
        });
        Self::from_terms(self.sys.clone(), terms)
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, k.value(&self.sys) * x))
            .sum()
    }

    /// Frequency derivative ∂ₓ: multiplies each coefficient by iη.
    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| (k.clone(), c * Complex64::new(0.0, k.value(&self.sys))));
        Self::from_terms(self.sys.clone(), terms)
    }

    /// (k ⋆ f)(x) = ∫_ap k(x − y) f(y) dy, which multiplies coefficients.
    pub fn bohr_convolve(&self, kernel: &Self) -> Result<Self> {
        if !same_system(&self.sys, &kernel.sys) {
            return Err(Error::SystemMismatch);
        }
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| (k.clone(), c * kernel.coefficient(k)));
        Ok(Self::from_terms(self.sys.clone(), terms))
    }

    pub fn to_json(&self) -> Result<String> {
        let records: Vec<TermRecord> = self
            .terms
            .iter()
            .map(|(k, c)| TermRecord {
                index: k.0.iter().copied().collect(),
                re: c.re,
                im: c.im,
            })
            .collect();
        Ok(serde_json::to_string(&records)?)
    }

    pub fn from_json(sys: Arc<FrequencySystem>, text: &str) -> Result<Self> {
        let records: Vec<TermRecord> = serde_json::from_str(text)?;
        for r in &records {
            if let Some((&m, _)) = r.index.iter().next_back() {
                if m >= sys.count() {
                    return Err(Error::ModeOutOfRange {
                        mode: m,
                        available: sys.count(),
                    });
                }
            }
        }
        Ok(Self::from_terms(
            sys,
            records
                .into_iter()
                .map(|r| (FourierIndex::from_pairs(r.index), Complex64::new(r.re, r.im))),
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    index: BTreeMap<usize, i64>,
    re: f64,
    im: f64,
}

impl Add for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn add(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        TrigPolynomial::add(self, rhs).expect("operands share a frequency system")
    }
}

impl Sub for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn sub(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        TrigPolynomial::add(self, &rhs.scale(-ONE)).expect("operands share a frequency system")
    }
}

impl Mul for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn mul(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        self.multiply(rhs).expect("operands share a frequency system")
    }
}

/// δ_Ω truncated to ±ω₁..±ω_K: 2K unit coefficients.
pub fn delta_truncated(sys: Arc<FrequencySystem>, modes: usize) -> Result<TrigPolynomial> {
    if modes == 0 || modes > sys.count() {
        return Err(Error::ModeOutOfRange {
            mode: modes,
            available: sys.count(),
        });
    }
    let terms = (0..modes).flat_map(|m| {
        [
            (FourierIndex::single(m, 1), ONE),
            (FourierIndex::single(m, -1), ONE),
        ]
    });
    Ok(TrigPolynomial::from_terms(sys, terms))
}

/// The projection onto frequencies in {±ω₁..±ω_K}, realized as the Bohr
/// convolution with the truncated delta.
pub fn project(f: &TrigPolynomial, modes: usize) -> Result<TrigPolynomial> {
    let delta = delta_truncated(f.system().clone(), modes)?;
    f.bohr_convolve(&delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequencies::SystemKind;
    use proptest::prelude::*;

    fn sys() -> Arc<FrequencySystem> {
        let kind = SystemKind::PowerLaw {
            amplitude: 1.0,
            exponent: 1.5,
            perturbation: crate::frequencies::Perturbation::Logarithmic { c: 0.1 },
        };
        Arc::new(FrequencySystem::generate(kind, 4).unwrap())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mean_reads_zero_mode() {
        let s = sys();
        assert_eq!(TrigPolynomial::constant(s.clone(), ONE).bohr_mean(), ONE);
        assert_eq!(TrigPolynomial::exponential(s.clone(), 0, 1).bohr_mean(), ZERO);
        let f = TrigPolynomial::from_terms(
            s.clone(),
            [
                (FourierIndex::zero(), c(3.0, 0.0)),
                (FourierIndex::single(0, 1), c(2.0, 0.0)),
                (FourierIndex::single(0, -1), c(2.0, 0.0)),
            ],
        );
        assert_eq!(f.bohr_mean(), c(3.0, 0.0));
    }

    #[test]
    fn products() {
        let s = sys();
        let e = TrigPolynomial::exponential(s.clone(), 0, 1);
        let em = TrigPolynomial::exponential(s.clone(), 0, -1);
        assert_eq!(&e * &em, TrigPolynomial::constant(s.clone(), ONE));

        let one_plus = &TrigPolynomial::constant(s.clone(), ONE) + &e;
        let sq = &one_plus * &one_plus;
        assert_eq!(sq.len(), 3);
        assert_eq!(sq.coefficient(&FourierIndex::zero()), ONE);
        assert_eq!(sq.coefficient(&FourierIndex::single(0, 1)), c(2.0, 0.0));
        assert_eq!(sq.coefficient(&FourierIndex::single(0, 2)), ONE);
    }

    #[test]
    fn mismatched_systems() {
        let a = TrigPolynomial::constant(sys(), ONE);
        let other = Arc::new(FrequencySystem::explicit(vec![1.0, 2.0]));
        let b = TrigPolynomial::constant(other, ONE);
        assert!(matches!(a.multiply(&b), Err(Error::SystemMismatch)));
    }

    #[test]
    fn flow_phases() {
        let s = sys();
        let w = s.omega(2);
        let f = TrigPolynomial::exponential(s.clone(), 1, 1);
        let g = f.kronecker_flow(0.7);
        assert!((g.coefficient(&FourierIndex::single(1, 1)) - Complex64::from_polar(1.0, 0.7 * w)).norm() < 1e-15);
        assert_eq!(f.kronecker_flow(0.0), f);
    }

    #[test]
    fn delta_and_projection() {
        let s = sys();
        let d = delta_truncated(s.clone(), 1).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.bohr_mean(), ZERO);
        assert!(delta_truncated(s.clone(), 5).is_err());

        let f = TrigPolynomial::from_terms(
            s.clone(),
            [
                (FourierIndex::zero(), c(1.0, 0.0)),
                (FourierIndex::single(0, 1), c(0.5, 0.1)),
                (FourierIndex::single(2, -1), c(0.0, 2.0)),
                (FourierIndex::single(1, 2), c(3.0, 0.0)),
                (FourierIndex::from_pairs([(0, 1), (1, -1)]), c(4.0, 0.0)),
            ],
        );
        let p = project(&f, 3).unwrap();
        // direct filtering: keep the single-mode unit exponents only
        let kept: Vec<_> = f.terms().filter(|(k, _)| k.as_unit_mode().is_some()).collect();
        assert_eq!(p.len(), kept.len());
        for (k, v) in kept {
            assert_eq!(p.coefficient(k), *v);
        }
    }

    #[test]
    fn evaluate_basics() {
        let s = sys();
        assert_eq!(TrigPolynomial::constant(s.clone(), ONE).evaluate(3.3), ONE);
        assert!((TrigPolynomial::exponential(s.clone(), 0, 1).evaluate(0.0) - ONE).norm() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let s = sys();
        let f = TrigPolynomial::from_terms(
            s.clone(),
            [
                (FourierIndex::zero(), c(1.0, -2.0)),
                (FourierIndex::from_pairs([(0, 1), (3, -2)]), c(0.25, 0.5)),
            ],
        );
        let text = f.to_json().unwrap();
        assert_eq!(TrigPolynomial::from_json(s.clone(), &text).unwrap(), f);
        assert!(TrigPolynomial::from_json(s, r#"[{"index":{"9":1},"re":1,"im":0}]"#).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = Vec<((i64, i64, i64), (f64, f64))>> {
        prop::collection::vec(((-2i64..=2, -2i64..=2, -1i64..=1), (-1.0f64..1.0, -1.0f64..1.0)), 1..=5)
    }

    fn build(s: &Arc<FrequencySystem>, raw: &[((i64, i64, i64), (f64, f64))]) -> TrigPolynomial {
        TrigPolynomial::from_terms(
            s.clone(),
            raw.iter().map(|&((a, b, d), (re, im))| {
                (FourierIndex::from_pairs([(0, a), (1, b), (3, d)]), c(re, im))
            }),
        )
    }

    fn close(a: &TrigPolynomial, b: &TrigPolynomial, tol: f64) -> bool {
        a.terms().all(|(k, v)| (b.coefficient(k) - v).norm() <= tol)
            && b.terms().all(|(k, v)| (a.coefficient(k) - v).norm() <= tol)
    }

    proptest! {
        #[test]
        fn mean_of_modulus_squared(raw in arb_poly()) {
            let s = sys();
            let f = build(&s, &raw);
            // oracle: only the pairs (η, η) survive in f·f̄
            let terms: Vec<_> = f.terms().map(|(k, v)| (k.clone(), *v)).collect();
            let mut oracle = ZERO;
            for (k1, a) in &terms {
                for (k2, b) in &terms {
                    if k1 == k2 {
                        oracle += a * b.conj();
                    }
                }
            }
            let got = f.multiply(&f.conj()).unwrap().bohr_mean();
            prop_assert!((got - oracle).norm() <= 1e-12);
            let parseval: f64 = terms.iter().map(|(_, v)| v.norm_sqr()).sum();
            prop_assert!((got.re - parseval).abs() <= 1e-12);
        }

        #[test]
        fn ring_laws(a in arb_poly(), b in arb_poly(), d in arb_poly()) {
            let s = sys();
            let (f, g, h) = (build(&s, &a), build(&s, &b), build(&s, &d));
            prop_assert!(close(&(&f * &g), &(&g * &f), 1e-12));
            prop_assert!(close(&(&(&f * &g) * &h), &(&f * &(&g * &h)), 1e-12));
        }

        #[test]
        fn flow_group_law_and_mean(raw in arb_poly(), t in -5.0f64..5.0, u in -5.0f64..5.0) {
            let s = sys();
            let f = build(&s, &raw);
            let composed = f.kronecker_flow(u).kronecker_flow(t);
            prop_assert!(close(&composed, &f.kronecker_flow(t + u), 1e-12));
            prop_assert!((f.kronecker_flow(t).bohr_mean() - f.bohr_mean()).norm() <= 1e-15);
        }

        #[test]
        fn evaluation_bounds(raw in arb_poly(), x in -20.0f64..20.0) {
            let s = sys();
            let f = build(&s, &raw);
            prop_assert!(f.evaluate(x).norm() <= f.l1_norm() + 1e-12);
            let real = &f + &f.conj();
            prop_assert!(real.is_hermitian(1e-14));
            prop_assert!(real.evaluate(x).im.abs() <= 1e-12 * real.l1_norm().max(1.0));
        }
    }
}
