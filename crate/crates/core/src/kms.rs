//! Gibbs and super-KMS functionals on truncated Fock spaces with diagonal H.
//!
//! The Gibbs state is tr(a e^{−βH})/Z and the super-KMS functional is the
//! unnormalized supertrace μ_β(a) = Str(a e^{−βH}). Both KMS identities are
//! evaluated in a combined form that never materializes e^{βH}:
//!
//! tr(b σ_{iβ}(a) e^{−βH}) = Σ_{i,k} b_ik a_ki e^{−βE_k}.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fock::FockSpace;
use crate::sparse::SparseOperator;
use crate::{Error, Result, ZERO};

/// Largest β·(E_max − E_min) for which e^{±βH} is formed explicitly.
pub const EXP_GUARD: f64 = 700.0;

/// Largest dimension accepted by [`pre_skms_nullspace`].
pub const NULLSPACE_DIM_CAP: usize = 16;

#[derive(Clone, Debug)]
pub struct ThermalContext {
    space: FockSpace,
    beta: f64,
    /// e^{−β(E − E_min)} per basis state.
    weights: Vec<f64>,
    parities: Vec<f64>,
    e_min: f64,
    z: f64,
    str_z: f64,
}

impl ThermalContext {
    pub fn new(space: FockSpace, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("β must be positive, got {beta}")));
        }
        let e_min = space.energies().iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = space.energies().iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
        let parities: Vec<f64> = space
            .basis()
            .iter()
            .map(|s| if s.parity() == 0 { 1.0 } else { -1.0 })
            .collect();
        let shift = (-beta * e_min).exp();
        let z = weights.iter().sum::<f64>() * shift;
        let str_z = weights.iter().zip(&parities).map(|(w, p)| w * p).sum::<f64>() * shift;
        Ok(ThermalContext {
            space,
            beta,
            weights,
            parities,
            e_min,
            z,
            str_z,
        })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn partition_function(&self) -> f64 {
        self.z
    }

    fn check(&self, a: &SparseOperator) -> Result<()> {
        if a.space() != self.space.fingerprint() {
            return Err(Error::IncompatibleSpace("operator was built on another space".into()));
        }
        Ok(())
    }

    fn weighted_trace(&self, a: &SparseOperator, graded: bool) -> Complex64 {
        (0..a.dim())
            .map(|i| {
                let s = if graded { self.parities[i] } else { 1.0 };
                a.get(i, i) * (s * self.weights[i])
            })
            .sum()
    }

    /// Σ_{i,k} s_k b_ik a_ki w_k, the weighted trace of b σ_{iβ}(a) (twisted when graded).
    fn shifted_pair_trace(&self, a: &SparseOperator, b: &SparseOperator, graded: bool) -> Complex64 {
        let mut sum = ZERO;
        for (i, row) in b.rows().iter().enumerate() {
            for &(k, bik) in row {
                let aki = a.get(k, i);
                if aki != ZERO {
                    let s = if graded { self.parities[k] } else { 1.0 };
                    sum += bik * aki * (s * self.weights[k]);
                }
            }
        }
        sum
    }

    fn ab_trace(&self, a: &SparseOperator, b: &SparseOperator, graded: bool) -> Complex64 {
        let mut sum = ZERO;
        for (i, row) in a.rows().iter().enumerate() {
            let s = if graded { self.parities[i] } else { 1.0 };
            for &(k, aik) in row {
                let bki = b.get(k, i);
                if bki != ZERO {
                    sum += aik * bki * (s * self.weights[i]);
                }
            }
        }
        sum
    }

    /// tr(a e^{−βH}) / Z.
    pub fn gibbs(&self, a: &SparseOperator) -> Result<Complex64> {
        self.check(a)?;
        let norm: f64 = self.weights.iter().sum();
        Ok(self.weighted_trace(a, false) / norm)
    }

    /// |ω(ab) − ω(b σ_{iβ}(a))| for the Gibbs state ω.
    pub fn kms_check(&self, a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        let norm: f64 = self.weights.iter().sum();
        let lhs = self.ab_trace(a, b, false) / norm;
        let rhs = self.shifted_pair_trace(a, b, false) / norm;
        Ok((lhs - rhs).norm())
    }

    /// σ_{iβ}(a) = e^{−βH} a e^{βH}.
    pub fn sigma_i_beta(&self, a: &SparseOperator) -> Result<SparseOperator> {
        self.check(a)?;
        let e = self.space.energies();
        let span = e.iter().copied().fold(f64::NEG_INFINITY, f64::max) - self.e_min;
        if self.beta * span > EXP_GUARD {
            return Err(Error::Overflow(self.beta * span));
        }
        Ok(a.map_entries(|r, c, v| v * (-self.beta * (e[r] - e[c])).exp()))
    }

    /// μ_β(a) = Str(a e^{−βH}).
    pub fn skms(&self, a: &SparseOperator) -> Result<Complex64> {
        self.check(a)?;
        Ok(self.weighted_trace(a, true) * (-self.beta * self.e_min).exp())
    }

    /// |μ(ab) − μ(b^Γ σ_{iβ}(a))|.
    pub fn twisted_kms_check(&self, a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        let scale = (-self.beta * self.e_min).exp();
        let lhs = self.ab_trace(a, b, true) * scale;
        let rhs = self.shifted_pair_trace(a, b, true) * scale;
        Ok((lhs - rhs).norm())
    }

    /// Str(e^{−βH}).
    pub fn witten_index(&self) -> f64 {
        self.str_z
    }
}

/// Parity of an operator under Γ: 0 (even), 1 (odd), or `None` when mixed.
pub fn parity_of(space: &FockSpace, a: &SparseOperator) -> Option<u32> {
    let basis = space.basis();
    let mut parity = None;
    for (r, row) in a.rows().iter().enumerate() {
        for &(c, _) in row {
            let p = (basis[r].parity() + basis[c].parity()) % 2;
            match parity {
                None => parity = Some(p),
                Some(q) if q != p => return None,
                _ => {}
            }
        }
    }
    Some(parity.unwrap_or(0))
}

/// (a + ΓaΓ)/2 and (a − ΓaΓ)/2.
pub fn parity_split(space: &FockSpace, a: &SparseOperator) -> (SparseOperator, SparseOperator) {
    let basis = space.basis();
    let even = a.map_entries(|r, c, v| if basis[r].parity() == basis[c].parity() { v } else { ZERO });
    let odd = a.map_entries(|r, c, v| if basis[r].parity() != basis[c].parity() { v } else { ZERO });
    (even, odd)
}

/// a^Γ = ΓaΓ.
pub fn grade(space: &FockSpace, a: &SparseOperator) -> SparseOperator {
    let basis = space.basis();
    a.map_entries(|r, c, v| if basis[r].parity() == basis[c].parity() { v } else { -v })
}

/// da = Qa − (−1)^{|a|} aQ for definite-parity a.
pub fn super_d(space: &FockSpace, q: &SparseOperator, a: &SparseOperator) -> Result<SparseOperator> {
    let parity = parity_of(space, a).ok_or(Error::IndefiniteParity)?;
    let qa = q.mul(a)?;
    let aq = a.mul(q)?;
    if parity == 0 {
        qa.sub(&aq)
    } else {
        qa.add(&aq)
    }
}

/// A random operator with `nnz` entries of magnitude ≤ 1, optionally of fixed parity.
pub fn random_operator(space: &FockSpace, rng: &mut ChaCha8Rng, nnz: usize, parity: Option<u32>) -> SparseOperator {
    let dim = space.dim();
    let basis = space.basis();
    let mut triplets = Vec::with_capacity(nnz);
    let mut attempts = 0;
    while triplets.len() < nnz && attempts < 100 * nnz.max(1) {
        attempts += 1;
        let r = rng.random_range(0..dim);
        let c = rng.random_range(0..dim);
        if let Some(p) = parity {
            if (basis[r].parity() + basis[c].parity()) % 2 != p {
                continue;
            }
        }
        let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        triplets.push((r, c, v));
    }
    SparseOperator::from_triplets(space.fingerprint(), dim, triplets, vec![true; dim])
        .expect("indices are in range")
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub beta: f64,
    pub dims: usize,
    pub defect: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(check: &str, beta: f64, dims: usize, defect: f64, tol: f64) -> Self {
        CheckReport {
            check: check.into(),
            beta,
            dims,
            defect,
            pass: defect.is_finite() && defect <= tol,
        }
    }
}

/// Dimension of the space of functionals μ on the full matrix algebra with
/// μ(xy) = μ(y^Γ σ_{iβ}(x)) for all x, y.
///
/// In the matrix-unit basis E_ij the conditions read
/// δ_jk μ(E_il) = γ_k γ_l e^{−β(h_i − h_j)} δ_li μ(E_kj).
pub fn nullspace_dimension(energies: &[f64], parities: &[u32], beta: f64) -> Result<usize> {
    let d = energies.len();
    if parities.len() != d {
        return Err(Error::DimensionMismatch(parities.len(), d));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("empty space".into()));
    }
    if d > NULLSPACE_DIM_CAP {
        return Err(Error::TooLarge {
            dim: d,
            cap: NULLSPACE_DIM_CAP,
        });
    }
    let unknowns = d * d;
    let at = |i: usize, j: usize| i * d + j;
    let gamma = |i: usize| if parities[i] % 2 == 0 { 1.0 } else { -1.0 };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut row = vec![0.0; unknowns];
                    if j == k {
                        row[at(i, l)] += 1.0;
                    }
                    if l == i {
                        row[at(k, j)] -= gamma(k) * gamma(l) * (-beta * (energies[i] - energies[j])).exp();
                    }
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 1e-14 {
                        let lead = row.iter().find(|v| v.abs() > 1e-14).copied().unwrap();
                        let s = lead.signum() / norm;
                        row.iter_mut().for_each(|v| *v *= s);
                        rows.push(row);
                    }
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-13));
    if rows.is_empty() {
        return Ok(unknowns);
    }
    let m = DMatrix::from_fn(rows.len(), unknowns, |r, c| rows[r][c]);
    let sv = m.svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * max).count();
    Ok(unknowns - rank)
}

/// Null-space dimension of the pre-super-KMS conditions on a small space.
pub fn pre_skms_nullspace(space: &FockSpace, beta: f64) -> Result<usize> {
    let parities: Vec<u32> = space.basis().iter().map(|s| s.parity()).collect();
    nullspace_dimension(space.energies(), &parities, beta)
}
