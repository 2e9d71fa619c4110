//! Two-block degenerate perturbation theory for matrix power series.
//!
//! A series `H(δ) = Σ H_k δ^k` with diagonal `H_0` is block-diagonalized by
//! a similarity `e^{S} H e^{-S}` where `S = Σ S_k δ^k` only couples the
//! `P` block with its complement. For hermitian input `S` is
//! anti-hermitian and the transformation is unitary. Eigenvalue series of
//! small blocks are then resolved recursively.
//!
//! Coefficients are either exact rationals or `f64`, see [`Coefficient`].

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Scalar type of a matrix series.
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    /// Exact zero for rationals, below `1e-13` in magnitude for floats.
    fn is_negligible(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// Diagonalizes `m` if possible in this scalar type, eigenvalues in
    /// descending order.
    fn eigen_split(m: &Mat<Self>) -> Option<Eigenbasis<Self>>;
}

/// Eigenvalues with a basis `v` (columns) and its inverse.
#[derive(Clone, Debug)]
pub struct Eigenbasis<S> {
    pub values: Vec<S>,
    pub v: Mat<S>,
    pub v_inv: Mat<S>,
}

/// Small dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Coefficient> Mat<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn diagonal(values: &[S]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = v.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::arg("matrix rows must form a square"));
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        self.data.chunks(self.n.max(1)).map(<[S]>::to_vec).collect()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(S::is_negligible)
    }

    /// `true` when the matrix is a multiple of the identity.
    pub fn is_scalar(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            (0..n).all(|j| {
                if i == j {
                    (self.get(i, i).clone() - self.get(0, 0).clone()).is_negligible()
                } else {
                    self.get(i, j).is_negligible()
                }
            })
        })
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..n).all(|j| i == j || self.get(i, j).is_negligible()))
    }

    pub fn diagonal_values(&self) -> Vec<S> {
        (0..self.n).map(|i| self.get(i, i).clone()).collect()
    }

    pub fn trace(&self) -> S {
        (0..self.n).fold(S::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j].clone();
            }
        }
        t
    }

    pub fn scale(&self, s: &S) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x.clone() * s.clone()).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_negligible() {
                    continue;
                }
                for j in 0..n {
                    let b = &o.data[k * n + j];
                    if b.is_negligible() {
                        continue;
                    }
                    let cur = core::mem::replace(&mut out.data[i * n + j], S::zero());
                    out.data[i * n + j] = cur + a.clone() * b.clone();
                }
            }
        }
        out
    }

    /// `[self, o] = self·o − o·self`.
    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    /// Restriction to the rows and columns in `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut out = Self::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.data[a * k + b] = self.get(i, j).clone();
            }
        }
        out
    }
}

/// Power series of square matrices, `terms[k]` multiplying `δ^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSeries<S> {
    terms: Vec<Mat<S>>,
}

impl<S: Coefficient> MatrixSeries<S> {
    pub fn new(terms: Vec<Mat<S>>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::arg("matrix series needs at least one term"));
        };
        let n = first.dim();
        if terms.iter().any(|t| t.dim() != n) {
            return Err(Error::arg("all series terms must have the same dimension"));
        }
        Ok(Self { terms })
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    pub fn terms(&self) -> &[Mat<S>] {
        &self.terms
    }

    pub fn term(&self, k: usize) -> &Mat<S> {
        &self.terms[k]
    }

    pub fn truncated(&self, order: usize) -> Self {
        Self {
            terms: self.terms[..=order.min(self.order())].to_vec(),
        }
    }

    /// Restriction of every term to the indices in `idx`.
    pub fn block(&self, idx: &[usize]) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.submatrix(idx)).collect(),
        }
    }

    /// `v_inv · H_k · v` for every term.
    pub fn conjugated(&self, v: &Mat<S>, v_inv: &Mat<S>) -> Self {
        Self {
            terms: self.terms.iter().map(|t| v_inv.mul(t).mul(v)).collect(),
        }
    }

    /// Sum of the terms at `δ`, in `f64`.
    pub fn eval_f64(&self, delta: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut p = 1.0;
        for t in &self.terms {
            out += t.to_f64() * p;
            p *= delta;
        }
        out
    }
}

/// The `P` block of a two-block split, given by sorted indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSplit {
    dim: usize,
    p: Vec<usize>,
}

impl BlockSplit {
    pub fn new(mut p: Vec<usize>, dim: usize) -> Result<Self> {
        p.sort_unstable();
        p.dedup();
        if p.is_empty() || p.len() >= dim {
            return Err(Error::arg("block split must be a nonempty proper subset"));
        }
        if p.last().is_some_and(|&i| i >= dim) {
            return Err(Error::arg("block split index out of range"));
        }
        Ok(Self { dim, p })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> &[usize] {
        &self.p
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.dim).filter(|i| !self.contains(*i)).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.p.binary_search(&i).is_ok()
    }

    fn same_block(&self, i: usize, j: usize) -> bool {
        self.contains(i) == self.contains(j)
    }
}

/// Inverse of `ad_{H0}` on off-diagonal blocks for the unit-gap case
/// `H0 = 1` on `P` and `0` on the complement: `P B P̄ − P̄ B P`.
pub fn ad_inverse<S: Coefficient>(b: &Mat<S>, split: &BlockSplit) -> Result<Mat<S>> {
    let h0: Vec<S> = (0..split.dim())
        .map(|i| if split.contains(i) { S::one() } else { S::zero() })
        .collect();
    ad_inverse_with_gaps(b, &h0, split)
}

/// Inverse of `ad_{H0}: S ↦ [H0, S]` for diagonal `H0 = diag(h0)`, applied
/// to a matrix with vanishing diagonal blocks.
pub fn ad_inverse_with_gaps<S: Coefficient>(
    b: &Mat<S>,
    h0: &[S],
    split: &BlockSplit,
) -> Result<Mat<S>> {
    let n = b.dim();
    if n != split.dim() || h0.len() != n {
        return Err(Error::arg("dimension mismatch in ad_inverse"));
    }
    let mut out = Mat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let x = b.get(i, j);
            if split.same_block(i, j) {
                if !x.is_negligible() {
                    return Err(Error::arg("ad_inverse input has a nonzero diagonal block"));
                }
                continue;
            }
            if x.is_negligible() {
                continue;
            }
            let gap = h0[i].clone() - h0[j].clone();
            if gap.is_negligible() {
                return Err(Error::arg("unperturbed levels of the two blocks coincide"));
            }
            out.set(i, j, x.clone() / gap);
        }
    }
    Ok(out)
}

fn off_diagonal_part<S: Coefficient>(m: &Mat<S>, split: &BlockSplit) -> (Mat<S>, Mat<S>) {
    let n = m.dim();
    let mut diag = Mat::zeros(n);
    let mut off = Mat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let x = m.get(i, j).clone();
            if split.same_block(i, j) {
                diag.set(i, j, x);
            } else {
                off.set(i, j, x);
            }
        }
    }
    (diag, off)
}

/// Result of [`block_diagonalize`].
#[derive(Clone, Debug)]
pub struct BlockDiagonalization<S> {
    /// `e^{S} H e^{-S}`, block diagonal through the requested order.
    pub transformed: MatrixSeries<S>,
    /// `S_1, …, S_order`, all purely off-diagonal.
    pub generators: Vec<Mat<S>>,
}

/// Lie–Schwinger block diagonalization through `order`.
///
/// `H_0` must be diagonal with different entries across the split.
pub fn block_diagonalize<S: Coefficient>(
    series: &MatrixSeries<S>,
    split: &BlockSplit,
    order: usize,
) -> Result<BlockDiagonalization<S>> {
    if order > series.order() {
        return Err(Error::arg("requested order exceeds the available series terms"));
    }
    if split.dim() != series.dim() {
        return Err(Error::arg("block split dimension differs from the series"));
    }
    let h = series.terms();
    if !h[0].is_diagonal() {
        return Err(Error::arg("leading series term must be diagonal"));
    }
    let h0 = h[0].diagonal_values();
    let n = series.dim();

    // c[m][j]: coefficient of δ^j in ad_S^m(H), m ≥ 1.
    let mut c: Vec<Vec<Mat<S>>> = vec![vec![Mat::zeros(n); order + 1]; order + 1];
    let mut gens: Vec<Mat<S>> = vec![Mat::zeros(n)];
    let mut out = vec![h[0].clone()];
    let mut inv_fact = vec![S::one()];
    for m in 1..=order {
        let prev = inv_fact[m - 1].clone();
        inv_fact.push(prev / S::from_i64(m as i64));
    }

    for j in 1..=order {
        let mut t = h[j].clone();
        for m in 1..=j {
            let mut acc = Mat::zeros(n);
            for k in 1..j {
                let inner = if m == 1 { &h[j - k] } else { &c[m - 1][j - k] };
                if gens[k].is_zero() || inner.is_zero() {
                    continue;
                }
                acc = acc.add(&gens[k].commutator(inner));
            }
            t = t.add(&acc.scale(&inv_fact[m]));
            c[m][j] = acc;
        }
        let (diag, off) = off_diagonal_part(&t, split);
        let s = ad_inverse_with_gaps(&off, &h0, split)?;
        c[1][j] = c[1][j].add(&s.commutator(&h[0]));
        gens.push(s);
        out.push(diag);
    }
    gens.remove(0);
    Ok(BlockDiagonalization {
        transformed: MatrixSeries::new(out)?,
        generators: gens,
    })
}

/// How an eigenvalue branch was resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenKind {
    Simple,
    /// A block that stays a multiple of the identity through the order.
    Degenerate,
    /// A block whose leading non-scalar term could not be diagonalized in
    /// the scalar type. Coefficients are the block averages.
    Unresolved,
}

/// One eigenvalue branch as a polynomial in `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSeries<S> {
    pub coeffs: Vec<S>,
    pub multiplicity: usize,
    pub kind: EigenKind,
}

impl<S: Coefficient> EigenSeries<S> {
    pub fn eval_f64(&self, delta: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * delta + c.to_f64())
    }
}

/// Eigenvalue branches of a matrix series through `order`, sorted by their
/// value as `δ → 0⁺` (largest first).
pub fn eigenvalue_series<S: Coefficient>(
    block: &MatrixSeries<S>,
    order: usize,
) -> Result<Vec<EigenSeries<S>>> {
    if order > block.order() {
        return Err(Error::arg("requested order exceeds the available series terms"));
    }
    let mut out = resolve(&block.truncated(order))?;
    out.sort_by(|a, b| compare_branches(b, a));
    Ok(out)
}

fn compare_branches<S: Coefficient>(a: &EigenSeries<S>, b: &EigenSeries<S>) -> core::cmp::Ordering {
    for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
        let d = x.clone() - y.clone();
        if !d.is_negligible() {
            return d.to_f64().total_cmp(&0.0);
        }
    }
    core::cmp::Ordering::Equal
}

fn averaged<S: Coefficient>(series: &MatrixSeries<S>, kind: EigenKind) -> EigenSeries<S> {
    let n = series.dim();
    let inv = S::one() / S::from_i64(n as i64);
    EigenSeries {
        coeffs: series.terms().iter().map(|t| t.trace() * inv.clone()).collect(),
        multiplicity: n,
        kind,
    }
}

fn resolve<S: Coefficient>(series: &MatrixSeries<S>) -> Result<Vec<EigenSeries<S>>> {
    let n = series.dim();
    let order = series.order();
    if n == 1 {
        return Ok(vec![EigenSeries {
            coeffs: series.terms().iter().map(|t| t.get(0, 0).clone()).collect(),
            multiplicity: 1,
            kind: EigenKind::Simple,
        }]);
    }
    let Some(k) = series.terms().iter().position(|t| !t.is_scalar()) else {
        return Ok(vec![averaged(series, EigenKind::Degenerate)]);
    };
    let Some(eb) = S::eigen_split(series.term(k)) else {
        return Ok(vec![averaged(series, EigenKind::Unresolved)]);
    };
    let scalars: Vec<S> = series.terms()[..k].iter().map(|t| t.get(0, 0).clone()).collect();
    let reduced = MatrixSeries::new(series.terms()[k..].to_vec())?.conjugated(&eb.v, &eb.v_inv);

    let first = eb.values[0].clone();
    let p: Vec<usize> = (0..n)
        .filter(|&i| (eb.values[i].clone() - first.clone()).is_negligible())
        .collect();
    let split = BlockSplit::new(p, n)?;
    let bd = block_diagonalize(&reduced, &split, order - k)?;
    let mut branches = resolve(&bd.transformed.block(split.p()))?;
    branches.extend(resolve(&bd.transformed.block(&split.complement()))?);
    for b in &mut branches {
        let mut coeffs = scalars.clone();
        coeffs.append(&mut b.coeffs);
        b.coeffs = coeffs;
    }
    Ok(branches)
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn is_negligible(&self) -> bool {
        self.abs() < 1e-13
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn eigen_split(m: &Mat<f64>) -> Option<Eigenbasis<f64>> {
        let d = m.to_f64();
        if (&d - d.transpose()).amax() > 1e-12 * d.amax().max(1.0) {
            return None;
        }
        let (values, vecs) = crate::linalg::symmetric_eigen(&d).ok()?;
        let n = m.dim();
        let v = Mat::from_rows((0..n).map(|i| (0..n).map(|j| vecs[(i, j)]).collect()).collect())
            .ok()?;
        let v_inv = v.transpose();
        Some(Eigenbasis { values, v, v_inv })
    }
}

impl Coefficient for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn is_negligible(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn eigen_split(m: &Mat<BigRational>) -> Option<Eigenbasis<BigRational>> {
        rational_eigen_split(m)
    }
}

/// Best rational approximation with denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-15 || ((h1 as f64) / (k1 as f64) - x).abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
        r = 1.0 / frac;
    }
    if k1 == 0 {
        return None;
    }
    Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)))
}

fn rational_eigen_split(m: &Mat<BigRational>) -> Option<Eigenbasis<BigRational>> {
    let n = m.dim();
    let approx = m.to_f64().complex_eigenvalues();
    let scale = approx.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let mut candidates: Vec<BigRational> = Vec::new();
    for z in approx.iter() {
        if z.im.abs() > 1e-8 * scale {
            return None;
        }
        let r = rationalize(z.re, 100_000_000)?;
        if !candidates.contains(&r) {
            candidates.push(r);
        }
    }
    candidates.sort_by(|a, b| b.cmp(a));

    let mut values = Vec::with_capacity(n);
    let mut columns: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    for lam in candidates {
        let shifted = m.sub(&Mat::identity(n).scale(&lam));
        for v in nullspace(&shifted) {
            values.push(lam.clone());
            columns.push(v);
        }
    }
    if columns.len() != n {
        return None;
    }
    let mut v = Mat::zeros(n);
    for (j, col) in columns.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            v.set(i, j, x.clone());
        }
    }
    let v_inv = inverse(&v)?;
    Some(Eigenbasis { values, v, v_inv })
}

fn row_reduce(mut a: Vec<Vec<BigRational>>, cols: usize) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..a[i].len() {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Basis of the right nullspace, one vector per free column.
pub fn nullspace(m: &Mat<BigRational>) -> Vec<Vec<BigRational>> {
    let n = m.dim();
    let (red, pivots) = row_reduce(m.rows(), n);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![<BigRational as Zero>::zero(); n];
            v[f] = <BigRational as One>::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -red[r][f].clone();
            }
            v
        })
        .collect()
}

/// Exact inverse, `None` when singular.
pub fn inverse(m: &Mat<BigRational>) -> Option<Mat<BigRational>> {
    let n = m.dim();
    let aug: Vec<Vec<BigRational>> = m
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.extend((0..n).map(|j| if i == j { <BigRational as One>::one() } else { <BigRational as Zero>::zero() }));
            row
        })
        .collect();
    let (red, pivots) = row_reduce(aug, n);
    if pivots.len() != n {
        return None;
    }
    Mat::from_rows(red.into_iter().map(|row| row[n..].to_vec()).collect()).ok()
}

/// Largest absolute entry, used in tolerance checks.
pub fn max_abs<S: Coefficient>(m: &Mat<S>) -> f64 {
    m.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn toy() -> MatrixSeries<BigRational> {
        let h0 = Mat::diagonal(&[q(1, 1), q(0, 1)]);
        let h1 = Mat::from_rows(vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]]).unwrap();
        let mut terms = vec![h0, h1];
        terms.extend((2..=6).map(|_| Mat::zeros(2)));
        MatrixSeries::new(terms).unwrap()
    }

    #[test]
    fn ad_inverse_two_by_two() {
        let split = BlockSplit::new(vec![0], 2).unwrap();
        let b = Mat::from_rows(vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]]).unwrap();
        let s = ad_inverse(&b, &split).unwrap();
        assert_eq!(s.rows(), vec![vec![q(0, 1), q(1, 1)], vec![q(-1, 1), q(0, 1)]]);
        assert!(ad_inverse(&Mat::<BigRational>::zeros(2), &split).unwrap().is_zero());
        let bad = Mat::diagonal(&[q(1, 1), q(0, 1)]);
        assert!(ad_inverse(&bad, &split).is_err());
    }

    #[test]
    fn toy_block_series() {
        let split = BlockSplit::new(vec![0], 2).unwrap();
        let bd = block_diagonalize(&toy(), &split, 6).unwrap();
        let p: Vec<BigRational> = bd.transformed.terms().iter().map(|t| t.get(0, 0).clone()).collect();
        assert_eq!(p, vec![q(1, 1), q(0, 1), q(1, 1), q(0, 1), q(-1, 1), q(0, 1), q(2, 1)]);
        for t in bd.transformed.terms() {
            assert!(t.get(0, 1).is_zero() && t.get(1, 0).is_zero());
        }
        for s in &bd.generators {
            assert_eq!(s.transpose(), s.scale(&q(-1, 1)));
        }
    }

    #[test]
    fn toy_eigenvalues() {
        let ev = eigenvalue_series(&toy(), 6).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].coeffs, vec![q(1, 1), q(0, 1), q(1, 1), q(0, 1), q(-1, 1), q(0, 1), q(2, 1)]);
        assert_eq!(ev[1].coeffs, vec![q(0, 1), q(0, 1), q(-1, 1), q(0, 1), q(1, 1), q(0, 1), q(-2, 1)]);
    }

    #[test]
    fn commuting_input_is_unchanged() {
        let h0 = Mat::diagonal(&[q(1, 1), q(0, 1), q(0, 1)]);
        let h1 = Mat::diagonal(&[q(3, 1), q(1, 2), q(-1, 1)]);
        let s = MatrixSeries::new(vec![h0, h1]).unwrap();
        let split = BlockSplit::new(vec![0], 3).unwrap();
        let bd = block_diagonalize(&s, &split, 1).unwrap();
        assert_eq!(bd.transformed, s);
        assert!(bd.generators.iter().all(Mat::is_zero));
    }

    #[test]
    fn rationalize_recovers_fractions() {
        assert_eq!(rationalize(40.0 / 729.0, 1_000_000), Some(q(40, 729)));
        assert_eq!(rationalize(-0.25, 10), Some(q(-1, 4)));
    }

    #[test]
    fn float_mode_matches_rational() {
        let h0 = Mat::diagonal(&[1.0, 0.0]);
        let h1 = Mat::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut terms = vec![h0, h1];
        terms.extend((2..=6).map(|_| Mat::zeros(2)));
        let ev = eigenvalue_series(&MatrixSeries::new(terms).unwrap(), 6).unwrap();
        let want = [1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 2.0];
        for (a, b) in ev[0].coeffs.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
