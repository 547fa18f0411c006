//! Row-compressed complex matrices bound to a Fock basis.
//!
//! Every operator carries a protected mask over basis columns: column c is
//! protected when the operator applied to e_c agrees with the untruncated
//! operator. Products propagate the mask soundly (c is protected in AB when
//! it is protected in B and every state B e_c touches is protected in A), so
//! identities compared on protected columns are free of truncation artifacts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::{Error, Result, ONE, ZERO};

type Row = Vec<(usize, Complex64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    space: u64,
    dim: usize,
    rows: Vec<Row>,
    protected: Vec<bool>,
}

impl SparseOperator {
    pub fn zero(space: u64, dim: usize) -> Self {
        SparseOperator {
            space,
            dim,
            rows: vec![Vec::new(); dim],
            protected: vec![true; dim],
        }
    }

    pub fn identity(space: u64, dim: usize) -> Self {
        Self::diagonal(space, (0..dim).map(|_| ONE).collect())
    }

    pub fn diagonal(space: u64, values: Vec<Complex64>) -> Self {
        let dim = values.len();
        let rows = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| if v == ZERO { Vec::new() } else { vec![(i, v)] })
            .collect();
        SparseOperator {
            space,
            dim,
            rows,
            protected: vec![true; dim],
        }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets<I>(space: u64, dim: usize, triplets: I, protected: Vec<bool>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        if protected.len() != dim {
            return Err(Error::DimensionMismatch(protected.len(), dim));
        }
        let mut rows: Vec<Row> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch(r.max(c), dim));
            }
            rows[r].push((c, v));
        }
        for row in &mut rows {
            *row = normalize_row(std::mem::take(row));
        }
        Ok(SparseOperator {
            space,
            dim,
            rows,
            protected,
        })
    }

    pub fn space(&self) -> u64 {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.rows[r]
            .binary_search_by_key(&c, |&(j, _)| j)
            .map(|i| self.rows[r][i].1)
            .unwrap_or(ZERO)
    }

    pub fn protected(&self) -> &[bool] {
        &self.protected
    }

    pub fn protected_count(&self) -> usize {
        self.protected.iter().filter(|&&p| p).count()
    }

    pub fn with_protected(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.dim {
            return Err(Error::DimensionMismatch(mask.len(), self.dim));
        }
        self.protected = mask;
        Ok(self)
    }

    /// Intersects the protected mask with `mask`.
    pub fn restrict(mut self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.dim {
            return Err(Error::DimensionMismatch(mask.len(), self.dim));
        }
        for (p, &m) in self.protected.iter_mut().zip(mask) {
            *p &= m;
        }
        Ok(self)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::IncompatibleSpace(format!(
                "operators live on different spaces ({:016x} vs {:016x})",
                self.space, other.space
            )));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn diagonal_entries(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal_entries().into_iter().sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|&(j, _)| j == i))
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(v.len(), self.dim));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, a)| a * v[j]).sum())
            .collect())
    }

    /// Matrix product self·rhs with a per-row sparse accumulator.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check(rhs)?;
        let dim = self.dim;
        let rows: Vec<Row> = self
            .rows
            .par_iter()
            .map_init(
                || (vec![ZERO; dim], vec![false; dim], Vec::new()),
                |(acc, seen, touched), row| {
                    for &(k, a) in row {
                        for &(j, b) in &rhs.rows[k] {
                            if !seen[j] {
                                seen[j] = true;
                                touched.push(j);
                            }
                            acc[j] += a * b;
                        }
                    }
                    touched.sort_unstable();
                    let mut out = Vec::with_capacity(touched.len());
                    for &j in touched.iter() {
                        if acc[j] != ZERO {
                            out.push((j, acc[j]));
                        }
                        acc[j] = ZERO;
                        seen[j] = false;
                    }
                    touched.clear();
                    out
                },
            )
            .collect();
        let mut protected = rhs.protected.clone();
        for (r, row) in rhs.rows.iter().enumerate() {
            if !self.protected[r] {
                for &(c, _) in row {
                    protected[c] = false;
                }
            }
        }
        Ok(SparseOperator {
            space: self.space,
            dim,
            rows,
            protected,
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, ONE)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, -ONE)
    }

    /// self + s·rhs.
    pub fn combine(&self, rhs: &Self, s: Complex64) -> Result<Self> {
        self.check(rhs)?;
        let rows = self
            .rows
            .iter()
            .zip(&rhs.rows)
            .map(|(a, b)| {
                let mut merged: Row = a.clone();
                merged.extend(b.iter().map(|&(j, v)| (j, s * v)));
                normalize_row(merged)
            })
            .collect();
        let protected = self
            .protected
            .iter()
            .zip(&rhs.protected)
            .map(|(&p, &q)| p && q)
            .collect();
        Ok(SparseOperator {
            space: self.space,
            dim: self.dim,
            rows,
            protected,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map_entries(|_, _, v| s * v)
    }

    /// Applies f(row, col, value) to every stored entry; zeros are dropped.
    pub fn map_entries<F: Fn(usize, usize, Complex64) -> Complex64>(&self, f: F) -> Self {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .map(|&(j, v)| (j, f(i, j, v)))
                    .filter(|&(_, v)| v != ZERO)
                    .collect()
            })
            .collect();
        SparseOperator {
            space: self.space,
            dim: self.dim,
            rows,
            protected: self.protected.clone(),
        }
    }

    /// Conjugate transpose. The protected mask is carried over unchanged, so
    /// truncated raising operators should be built directly rather than as
    /// adjoints of lowering operators.
    pub fn adjoint(&self) -> Self {
        let mut rows: Vec<Row> = vec![Vec::new(); self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                rows[j].push((i, v.conj()));
            }
        }
        SparseOperator {
            space: self.space,
            dim: self.dim,
            rows,
            protected: self.protected.clone(),
        }
    }

    /// [A, B] = AB − BA.
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        self.mul(rhs)?.sub(&rhs.mul(self)?)
    }

    /// [A, B]₊ = AB + BA.
    pub fn anticommutator(&self, rhs: &Self) -> Result<Self> {
        self.mul(rhs)?.add(&rhs.mul(self)?)
    }

    /// max |A_rc − B_rc| over columns protected in both operands.
    pub fn max_defect(&self, rhs: &Self) -> Result<f64> {
        let diff = self.sub(rhs)?;
        Ok(diff.max_abs_protected())
    }

    pub fn max_abs_protected(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|row| row.iter())
            .filter(|&&(j, _)| self.protected[j])
            .map(|&(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|row| row.iter())
            .map(|&(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Coordinate triplets (row, col, re, im) in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64, f64)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v.re, v.im)))
            .collect()
    }
}

fn normalize_row(mut row: Row) -> Row {
    row.sort_by_key(|&(j, _)| j);
    let mut out: Row = Vec::with_capacity(row.len());
    for (j, v) in row {
        match out.last_mut() {
            Some((k, acc)) if *k == j => *acc += v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|&(_, v)| v != ZERO);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dense_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        a * b
    }

    fn random_op(dim: usize, entries: Vec<(usize, usize, f64, f64)>) -> SparseOperator {
        SparseOperator::from_triplets(
            1,
            dim,
            entries.into_iter().map(|(r, c_, re, im)| (r % dim, c_ % dim, c(re, im))),
            vec![true; dim],
        )
        .unwrap()
    }

    fn entries() -> impl Strategy<Value = Vec<(usize, usize, f64, f64)>> {
        prop::collection::vec((0usize..6, 0usize..6, -2.0..2.0f64, -2.0..2.0f64), 0..20)
    }

    proptest! {
        #[test]
        fn product_matches_dense(a in entries(), b in entries()) {
            let (a, b) = (random_op(6, a), random_op(6, b));
            let sparse = a.mul(&b).unwrap().to_dense();
            let dense = dense_product(&a.to_dense(), &b.to_dense());
            prop_assert!((sparse - dense).iter().all(|v| v.norm() < 1e-12));
        }

        #[test]
        fn adjoint_reverses_products(a in entries(), b in entries()) {
            let (a, b) = (random_op(6, a), random_op(6, b));
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            let lhs = a.mul(&b).unwrap().adjoint();
            let rhs = b.adjoint().mul(&a.adjoint()).unwrap();
            prop_assert!(lhs.max_defect(&rhs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let op = SparseOperator::from_triplets(
            0,
            2,
            [(0, 1, ONE), (0, 1, ONE), (1, 0, ONE), (1, 0, -ONE)],
            vec![true; 2],
        )
        .unwrap();
        assert_eq!(op.get(0, 1), c(2.0, 0.0));
        assert_eq!(op.nnz(), 1);
    }

    #[test]
    fn incompatible_spaces() {
        let a = SparseOperator::identity(1, 3);
        let b = SparseOperator::identity(2, 3);
        assert!(matches!(a.mul(&b), Err(Error::IncompatibleSpace(_))));
        let d = SparseOperator::identity(1, 4);
        assert!(matches!(a.add(&d), Err(Error::DimensionMismatch(3, 4))));
    }

    #[test]
    fn truncated_shift_protection() {
        // Raising on a 3-level ladder: e2 leaves the basis.
        let raise = SparseOperator::from_triplets(0, 3, [(1, 0, ONE), (2, 1, ONE)], vec![true, true, false])
            .unwrap();
        let lower = raise.adjoint().with_protected(vec![true; 3]).unwrap();
        let id = SparseOperator::identity(0, 3);
        // u*u = I fails only on the unprotected column.
        let uu = lower.mul(&raise).unwrap();
        assert_eq!(uu.protected(), &[true, true, false]);
        assert_eq!(uu.max_defect(&id).unwrap(), 0.0);
        assert!(uu.sub(&id).unwrap().max_abs() > 0.5);
        // u·u loses e1 as well.
        let u2 = raise.mul(&raise).unwrap();
        assert_eq!(u2.protected(), &[true, false, false]);
    }

    #[test]
    fn triplet_order() {
        let op = SparseOperator::from_triplets(0, 2, [(1, 0, c(0.0, 1.0)), (0, 1, ONE)], vec![true; 2]).unwrap();
        assert_eq!(op.triplets(), vec![(0, 1, 1.0, 0.0), (1, 0, 0.0, 1.0)]);
        assert!(!op.is_diagonal());
        assert_eq!(op.trace(), ZERO);
    }
}
