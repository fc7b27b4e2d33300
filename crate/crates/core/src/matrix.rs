//! Dense square matrices over `F_p`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};

/// A `k x k` matrix over `F_p`, entries row-major and canonical.
#[derive(Clone, PartialEq, Eq)]
pub struct MatrixFp {
    k: usize,
    spec: FieldSpec,
    entries: Vec<BigUint>,
}

impl MatrixFp {
    /// Entries are reduced mod `p`.
    pub fn from_entries(spec: &FieldSpec, k: usize, entries: Vec<BigUint>) -> Result<Self> {
        if k == 0 {
            return Err(Error::ShapeMismatch("dimension must be at least 1".into()));
        }
        if entries.len() != k * k {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {k}x{k} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            k,
            spec: spec.clone(),
            entries: entries.into_iter().map(|e| spec.reduce(e)).collect(),
        })
    }

    pub fn from_rows(spec: &FieldSpec, rows: Vec<Vec<BigUint>>) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::ShapeMismatch("matrix is not square".into()));
        }
        Self::from_entries(spec, k, rows.into_iter().flatten().collect())
    }

    pub fn from_u64_rows(spec: &FieldSpec, rows: &[&[u64]]) -> Result<Self> {
        Self::from_rows(
            spec,
            rows.iter()
                .map(|r| r.iter().map(|&x| BigUint::from(x)).collect())
                .collect(),
        )
    }

    pub fn zero(spec: &FieldSpec, k: usize) -> Self {
        Self {
            k,
            spec: spec.clone(),
            entries: vec![BigUint::zero(); k * k],
        }
    }

    pub fn identity(spec: &FieldSpec, k: usize) -> Self {
        let mut m = Self::zero(spec, k);
        for i in 0..k {
            m.entries[i * k + i] = BigUint::one();
        }
        m
    }

    /// Uniform random matrix (not necessarily invertible).
    pub fn random<R: RngCore + ?Sized>(spec: &FieldSpec, k: usize, rng: &mut R) -> Self {
        Self {
            k,
            spec: spec.clone(),
            entries: (0..k * k).map(|_| spec.random_raw(rng)).collect(),
        }
    }

    /// Rejection-samples uniform matrices until one is invertible.
    pub fn random_invertible<R: RngCore + ?Sized>(spec: &FieldSpec, k: usize, rng: &mut R) -> Self {
        loop {
            let m = Self::random(spec, k, rng);
            if m.inverse().is_ok() {
                return m;
            }
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i * self.k + j]
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.spec.element(self.entry(i, j).clone())
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<BigUint>> {
        self.entries.chunks(self.k).map(|r| r.to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::MismatchedField);
        }
        if self.k != other.k {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.k, self.k, other.k, other.k
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&BigUint, &BigUint) -> BigUint) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            k: self.k,
            spec: self.spec.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| self.spec.add_raw(a, b))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| self.spec.sub_raw(a, b))
    }

    pub fn neg(&self) -> Self {
        Self {
            k: self.k,
            spec: self.spec.clone(),
            entries: self.entries.iter().map(|a| self.spec.neg_raw(a)).collect(),
        }
    }

    pub fn scale(&self, c: &FieldElement) -> Result<Self> {
        if *c.spec() != self.spec {
            return Err(Error::MismatchedField);
        }
        Ok(Self {
            k: self.k,
            spec: self.spec.clone(),
            entries: self
                .entries
                .iter()
                .map(|a| self.spec.mul_raw(a, c.value()))
                .collect(),
        })
    }

    /// Schoolbook product; each entry is reduced once after accumulation.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let k = self.k;
        let p = self.spec.modulus();
        let mut entries = Vec::with_capacity(k * k);
        for i in 0..k {
            let row = &self.entries[i * k..(i + 1) * k];
            for j in 0..k {
                let mut acc = BigUint::zero();
                for (l, a) in row.iter().enumerate() {
                    let b = &other.entries[l * k + j];
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                entries.push(acc % p);
            }
        }
        Ok(Self {
            k,
            spec: self.spec.clone(),
            entries,
        })
    }

    /// `self^e` by left-to-right square-and-multiply; `X^0 = I`.
    pub fn pow(&self, e: &BigUint) -> Self {
        let mut acc = Self::identity(&self.spec, self.k);
        for bit in (0..e.bits()).rev() {
            acc = acc.checked_mul(&acc).expect("same shape");
            if e.bit(bit) {
                acc = acc.checked_mul(self).expect("same shape");
            }
        }
        acc
    }

    /// Gauss-Jordan inverse on `[X | I]` with first-nonzero pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let k = self.k;
        let mut work = WorkMatrix::new(&self.spec, 2 * k);
        for i in 0..k {
            let mut row = self.entries[i * k..(i + 1) * k].to_vec();
            row.extend((0..k).map(|j| if i == j { BigUint::one() } else { BigUint::zero() }));
            work.rows.push(row);
        }
        let pivots = work.reduce(k);
        if pivots.len() < k {
            return Err(Error::SingularMatrix);
        }
        let entries = work.rows.into_iter().flat_map(|r| r.into_iter().skip(k)).collect();
        Ok(Self {
            k,
            spec: self.spec.clone(),
            entries,
        })
    }

    pub fn transpose(&self) -> Self {
        let k = self.k;
        let mut entries = Vec::with_capacity(k * k);
        for j in 0..k {
            for i in 0..k {
                entries.push(self.entries[i * k + j].clone());
            }
        }
        Self {
            k,
            spec: self.spec.clone(),
            entries,
        }
    }

    /// Row-major flattening into a length-`k^2` vector.
    pub fn flatten(&self) -> FlatRow {
        FlatRow {
            spec: self.spec.clone(),
            values: self.entries.clone(),
        }
    }

    pub fn unflatten(row: &FlatRow, k: usize) -> Result<Self> {
        Self::from_entries(&row.spec, k, row.values.clone())
    }

    fn add_scalar_diagonal(&mut self, c: &BigUint) {
        for i in 0..self.k {
            let idx = i * self.k + i;
            self.entries[idx] = self.spec.add_raw(&self.entries[idx], c);
        }
    }
}

impl fmt::Debug for MatrixFp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} over {:?}", self.spec)
    }
}

impl fmt::Display for MatrixFp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.entries.chunks(self.k).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// `c_0 I + c_1 H + ... + c_{d} H^d` by Horner's rule.
pub fn poly_eval(coeffs: &[FieldElement], h: &MatrixFp) -> Result<MatrixFp> {
    if coeffs.iter().any(|c| *c.spec() != h.spec) {
        return Err(Error::MismatchedField);
    }
    let Some((last, rest)) = coeffs.split_last() else {
        return Ok(MatrixFp::zero(&h.spec, h.k));
    };
    let mut acc = MatrixFp::identity(&h.spec, h.k).scale(last)?;
    for c in rest.iter().rev() {
        acc = acc.checked_mul(h)?;
        acc.add_scalar_diagonal(c.value());
    }
    Ok(acc)
}

/// A flattened matrix, or any row vector over `F_p`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FlatRow {
    spec: FieldSpec,
    values: Vec<BigUint>,
}

impl FlatRow {
    pub fn new(spec: &FieldSpec, values: Vec<BigUint>) -> Self {
        Self {
            spec: spec.clone(),
            values: values.into_iter().map(|v| spec.reduce(v)).collect(),
        }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[BigUint] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    pub fn neg(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            values: self.values.iter().map(|v| self.spec.neg_raw(v)).collect(),
        }
    }
}

/// Basis of a left kernel, each vector in reduced echelon form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KernelBasis {
    spec: FieldSpec,
    vectors: Vec<Vec<BigUint>>,
}

impl KernelBasis {
    pub fn new(spec: &FieldSpec, vectors: Vec<Vec<BigUint>>) -> Self {
        Self {
            spec: spec.clone(),
            vectors,
        }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<BigUint>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> Vec<FieldElement> {
        self.vectors[i]
            .iter()
            .map(|v| self.spec.element(v.clone()))
            .collect()
    }
}

/// Left kernel of `rows`: all `v` with `sum_i v_i * rows_i = 0`.
///
/// Row-reduces `[rows | I]` to reduced echelon form and reads the basis off
/// the identity block of every row whose left block became zero.
pub fn left_kernel(spec: &FieldSpec, rows: &[FlatRow]) -> Result<KernelBasis> {
    let n = rows.len();
    let width = rows.first().map_or(0, FlatRow::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::ShapeMismatch("rows have different lengths".into()));
    }
    if rows.iter().any(|r| r.spec != *spec) {
        return Err(Error::MismatchedField);
    }
    let mut work = WorkMatrix::new(spec, width + n);
    for (i, r) in rows.iter().enumerate() {
        let mut row = r.values.clone();
        row.extend((0..n).map(|j| if i == j { BigUint::one() } else { BigUint::zero() }));
        work.rows.push(row);
    }
    work.reduce(width + n);
    let vectors = work
        .rows
        .into_iter()
        .filter(|r| r[..width].iter().all(Zero::is_zero))
        .map(|r| r[width..].to_vec())
        .collect();
    Ok(KernelBasis::new(spec, vectors))
}

/// Rank of a list of equal-length vectors over `F_p`.
pub fn rank(spec: &FieldSpec, rows: &[Vec<BigUint>]) -> usize {
    let width = rows.first().map_or(0, Vec::len);
    let mut work = WorkMatrix::new(spec, width);
    work.rows = rows.to_vec();
    work.reduce(width).len()
}

/// Scratch matrix for in-place row reduction.
struct WorkMatrix<'a> {
    spec: &'a FieldSpec,
    ncols: usize,
    rows: Vec<Vec<BigUint>>,
}

impl<'a> WorkMatrix<'a> {
    fn new(spec: &'a FieldSpec, ncols: usize) -> Self {
        Self {
            spec,
            ncols,
            rows: Vec::new(),
        }
    }

    /// Reduced row echelon form, pivoting only in the first `pivot_cols`
    /// columns. Returns the pivot columns.
    fn reduce(&mut self, pivot_cols: usize) -> Vec<usize> {
        let p = self.spec.modulus();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..pivot_cols.min(self.ncols) {
            if r == self.rows.len() {
                break;
            }
            let Some(found) = (r..self.rows.len()).find(|&i| !self.rows[i][c].is_zero()) else {
                continue;
            };
            self.rows.swap(r, found);
            let inv = self.spec.inv_raw(&self.rows[r][c]).expect("pivot is nonzero mod a prime");
            for x in &mut self.rows[r][c..] {
                *x = (&*x * &inv) % p;
            }
            let pivot_row = std::mem::take(&mut self.rows[r]);
            for (i, row) in self.rows.iter_mut().enumerate() {
                if i == r || row[c].is_zero() {
                    continue;
                }
                let factor = p - &row[c];
                for (x, y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                    if !y.is_zero() {
                        *x = (&*x + &factor * y) % p;
                    }
                }
            }
            self.rows[r] = pivot_row;
            pivots.push(c);
            r += 1;
        }
        pivots
    }
}
