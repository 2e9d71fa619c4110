//! The N-Harmonium: N fermions in a harmonic trap with harmonic pair
//! coupling.
//!
//! The ground-state 1-RDM has the kernel
//! `ρ(x,y) = F_N(x,y) exp(−a(x²+y²) + bxy)` with a symmetric polynomial
//! `F_N` of degree `2(N−1)`. Writing the Gaussian kernel as a Mehler sum
//! over Hermite functions of length `L` turns `ρ` into a banded matrix
//! `Σ g_ij X^i Q X^j` with `X` the position ladder and `Q = diag(q^k)`.
//! Every routine is generic over [`Field`], so the same code produces
//! `f64` matrices, extended-precision matrices and exact power series in
//! the coupling `δ`.
//!
//! Units: `ħ = m = ω = 1`, `l₋ = 1`, `l₊ = ratio = e^{−δ}`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::Spectrum;
use crate::linalg;
use crate::perturbation::{self, BlockSplit, EigenKind, Mat, MatrixSeries};
use crate::scalar::{ln_to_f64, Field, Mp, Real, Series};

/// Largest particle number for which `F_N` is expanded.
pub const MAX_PARTICLES: usize = 8;
/// Default basis cutoff for NON tables.
pub const DEFAULT_M_MAX: usize = 200;
/// Default basis cutoff for decay diagnostics.
pub const DEFAULT_DECAY_M_MAX: usize = 500;
/// Highest order of the weak-coupling series.
pub const MAX_SERIES_ORDER: usize = 10;

/// Closed-form parameters of the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmoniumParams {
    pub particles: usize,
    /// `l₊/l₋`.
    pub ratio: f64,
    /// `−ln(ratio)`.
    pub delta: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub a: f64,
    pub b: f64,
    /// Normalization of the bosonic 1-RDM kernel.
    pub c_norm: f64,
    /// Length of the bosonic natural orbitals.
    pub length: f64,
    /// `βΩ` of the effective Gibbs state, infinite without interaction.
    pub beta_omega: f64,
    pub q: f64,
    /// `(l₋/l₊)⁴ − 1`.
    pub kappa: f64,
}

/// Parameters from the length ratio `l₊/l₋`.
pub fn derive_params(particles: usize, ratio: f64) -> Result<HarmoniumParams> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::arg(format!("length ratio must be positive, got {ratio}")));
    }
    from_delta(particles, -libm::log(ratio))
}

/// Parameters from the coupling `δ = −ln(l₊/l₋)`.
pub fn from_delta(particles: usize, delta: f64) -> Result<HarmoniumParams> {
    if particles == 0 {
        return Err(Error::arg("particle number must be positive"));
    }
    if !delta.is_finite() {
        return Err(Error::arg("coupling must be finite"));
    }
    let n = particles as f64;
    let big_a = libm::exp(2.0 * delta) / 2.0;
    let big_b = libm::expm1(2.0 * delta) / (2.0 * n);
    let g = Gen::from_ab(particles, big_a, big_b);
    let beta_omega = if g.b == 0.0 {
        f64::INFINITY
    } else {
        libm::asinh(g.c * g.d / g.b.abs())
    };
    Ok(HarmoniumParams {
        particles,
        ratio: libm::exp(-delta),
        delta,
        big_a,
        big_b,
        a: g.a,
        b: g.b,
        c_norm: n * libm::sqrt((2.0 * g.a - g.b) / core::f64::consts::PI),
        length: g.l,
        beta_omega,
        q: g.q,
        kappa: libm::expm1(4.0 * delta),
    })
}

/// Derived quantities in a generic scalar type.
#[derive(Clone, Debug)]
struct Gen<T> {
    n: usize,
    a: T,
    b: T,
    c: T,
    d: T,
    l: T,
    q: T,
    s: T,
    e: T,
}

impl<T: Field> Gen<T> {
    fn from_ab(n: usize, big_a: T, big_b: T) -> Self {
        let two = T::from_i64(2);
        let nm1 = T::from_i64(n as i64 - 1);
        let den = big_a.clone() - nm1.clone() * big_b.clone();
        let b = nm1 * big_b.clone() * big_b.clone() / den.clone();
        let a = big_a.clone() - big_b.clone() - b.clone() / two.clone();
        let c = (two.clone() * a.clone() - b.clone()).sqrt();
        let d = (two.clone() * a.clone() + b.clone()).sqrt();
        let l = T::one() / (c.clone() * d.clone()).sqrt();
        let cd = c.clone() + d.clone();
        let q = two.clone() * b.clone() / (cd.clone() * cd);
        let s = big_b / (two.clone() * den);
        let e = (two * big_a).sqrt();
        Self { n, a, b, c, d, l, q, s, e }
    }

    fn from_delta(n: usize, delta: T) -> Self {
        let two = T::from_i64(2);
        let e2 = (two.clone() * delta).exp();
        let big_a = e2.clone() / two.clone();
        let big_b = (e2 - T::one()) / (two * T::from_i64(n as i64));
        Self::from_ab(n, big_a, big_b)
    }

    fn degree(&self) -> usize {
        2 * (self.n - 1)
    }
}

/// Dense cube of coefficients of `w^i x^j y^k`.
struct Poly3<T> {
    side: usize,
    c: Vec<T>,
}

impl<T: Field> Poly3<T> {
    fn zero(side: usize) -> Self {
        Self {
            side,
            c: vec![T::zero(); side * side * side],
        }
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.side + j) * self.side + k
    }

    fn terms(&self) -> impl Iterator<Item = (usize, usize, usize, &T)> {
        let s = self.side;
        self.c.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(move |(p, v)| {
            (p / (s * s), (p / s) % s, p % s, v)
        })
    }

    fn add_at(&mut self, i: usize, j: usize, k: usize, v: T) {
        let p = self.idx(i, j, k);
        let cur = core::mem::replace(&mut self.c[p], T::zero());
        self.c[p] = cur + v;
    }

    /// `2(w + αx + βy)·self − two_k·prev`.
    fn hermite_step(&self, prev: &Self, alpha: &T, beta: &T, two_k: i64) -> Self {
        let mut out = Self::zero(self.side);
        let two = T::from_i64(2);
        for (i, j, k, v) in self.terms() {
            let v2 = two.clone() * v.clone();
            out.add_at(i + 1, j, k, v2.clone());
            out.add_at(i, j + 1, k, alpha.clone() * v2.clone());
            out.add_at(i, j, k + 1, beta.clone() * v2);
        }
        if two_k != 0 {
            let f = T::from_i64(two_k);
            for (i, j, k, v) in prev.terms() {
                out.add_at(i, j, k, -(f.clone() * v.clone()));
            }
        }
        out
    }
}

fn double_factorial(n: i64) -> i64 {
    if n <= 0 {
        1
    } else {
        n * double_factorial(n - 2)
    }
}

/// Coefficients `f[i][j]` of `x^i y^j` in `F_N`, normalized so that the
/// trace of the kernel is `N/√π`. Dropping the `√π` keeps the series path
/// rational.
fn reduced_polynomial<T: Field>(g: &Gen<T>) -> Vec<Vec<T>> {
    let deg = g.n - 1;
    let side_h = deg + 2;
    let alpha_x = g.e.clone() * (T::one() - g.s.clone());
    let beta_x = -(g.e.clone() * g.s.clone());
    let (alpha_y, beta_y) = (beta_x.clone(), alpha_x.clone());

    let mut unit = Poly3::zero(side_h);
    unit.c[0] = T::one();
    let mut hx = vec![unit];
    let mut hy = vec![Poly3 {
        side: side_h,
        c: hx[0].c.clone(),
    }];
    for k in 0..deg {
        let empty = Poly3::zero(side_h);
        let (px, py) = if k == 0 { (&empty, &empty) } else { (&hx[k - 1], &hy[k - 1]) };
        let nx = hx[k].hermite_step(px, &alpha_x, &beta_x, 2 * k as i64);
        let ny = hy[k].hermite_step(py, &alpha_y, &beta_y, 2 * k as i64);
        hx.push(nx);
        hy.push(ny);
    }

    let side = 2 * deg + 1;
    let mut prod = Poly3::zero(side);
    let mut norm: i64 = 1;
    for k in 0..=deg {
        if k > 0 {
            norm *= 2 * k as i64;
        }
        let inv = T::one() / T::from_i64(norm);
        for (i1, j1, k1, v1) in hx[k].terms() {
            for (i2, j2, k2, v2) in hy[k].terms() {
                prod.add_at(i1 + i2, j1 + j2, k1 + k2, v1.clone() * v2.clone() * inv.clone());
            }
        }
    }

    let mut f = vec![vec![T::zero(); side]; side];
    let mut moments = vec![T::one()];
    for j in 1..side {
        let prev = moments[j - 1].clone();
        moments.push(prev * g.s.clone() * T::from_i64(2 * j as i64 - 1));
    }
    for (w, x, y, v) in prod.terms() {
        if w % 2 == 0 {
            let cur = core::mem::replace(&mut f[x][y], T::zero());
            f[x][y] = cur + v.clone() * moments[w / 2].clone();
        }
    }

    // Σ f_ij ∫ x^{i+j} e^{−c²x²} dx / √π
    let mut cpow = vec![g.c.clone()];
    for p in 1..=(2 * side) {
        let prev = cpow[p - 1].clone();
        cpow.push(prev * g.c.clone());
    }
    let mut trace = T::zero();
    for (i, row) in f.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let p = i + j;
            if p % 2 == 1 || v.is_zero() {
                continue;
            }
            let num = T::from_i64(double_factorial(p as i64 - 1));
            let den = T::from_i64(1i64 << (p / 2)) * cpow[p].clone();
            trace = trace + v.clone() * num / den;
        }
    }
    let scale = T::from_i64(g.n as i64) / trace;
    for row in f.iter_mut() {
        for v in row.iter_mut() {
            if !v.is_zero() {
                *v = v.clone() * scale.clone();
            }
        }
    }
    f
}

/// The polynomial prefactor `F_N` of the fermionic 1-RDM kernel,
/// normalized so that `∫ρ(x,x)dx = N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RDMPolynomial {
    pub particles: usize,
    /// `coeffs[i][j]` multiplies `x^i y^j`.
    pub coeffs: Vec<Vec<f64>>,
    pub a: f64,
    pub b: f64,
}

impl RDMPolynomial {
    pub fn degree(&self) -> usize {
        2 * (self.particles - 1)
    }

    /// `c_{ν,μ}`, the coefficient of `x^{2ν−μ} y^μ`.
    pub fn c(&self, nu: usize, mu: usize) -> f64 {
        if mu > 2 * nu {
            return 0.0;
        }
        self.coeffs
            .get(2 * nu - mu)
            .and_then(|r| r.get(mu))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for row in self.coeffs.iter().rev() {
            let mut r = 0.0;
            for v in row.iter().rev() {
                r = r * y + v;
            }
            acc = acc * x + r;
        }
        acc
    }

    /// The full kernel `ρ(x, y)`.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        self.evaluate(x, y) * libm::exp(-self.a * (x * x + y * y) + self.b * x * y)
    }
}

fn check_particles(n: usize) -> Result<()> {
    if n > MAX_PARTICLES {
        return Err(Error::Precondition(format!(
            "F_N is only expanded for N <= {MAX_PARTICLES}, got {n}"
        )));
    }
    Ok(())
}

fn polynomial_from(g: &Gen<f64>) -> RDMPolynomial {
    let inv_sqrt_pi = 1.0 / libm::sqrt(core::f64::consts::PI);
    let coeffs = reduced_polynomial(g)
        .into_iter()
        .map(|row| row.into_iter().map(|v| v * inv_sqrt_pi).collect())
        .collect();
    RDMPolynomial {
        particles: g.n,
        coeffs,
        a: g.a,
        b: g.b,
    }
}

pub fn fermion_polynomial(params: &HarmoniumParams) -> Result<RDMPolynomial> {
    check_particles(params.particles)?;
    Ok(polynomial_from(&Gen::from_ab(params.particles, params.big_a, params.big_b)))
}

/// `F_N` for the ground state `Π(x_i−x_j) exp(−A Σx² + B(Σx)²)` with
/// arbitrary `A > max(0, N·B)`.
pub fn fermion_polynomial_ab(particles: usize, big_a: f64, big_b: f64) -> Result<RDMPolynomial> {
    if particles == 0 {
        return Err(Error::arg("particle number must be positive"));
    }
    check_particles(particles)?;
    if !(big_a > particles as f64 * big_b) || !(big_a > 0.0) {
        return Err(Error::arg("ground state not normalizable: need A > N*B and A > 0"));
    }
    Ok(polynomial_from(&Gen::from_ab(particles, big_a, big_b)))
}

/// Ladder convention for the position operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Basis {
    /// Hermite functions: `X e_k = √((k+1)/2) e_{k+1} + √(k/2) e_{k−1}`.
    Orthonormal,
    /// Rescaled Hermite functions: `X e_k = e_{k+1} + (k/2) e_{k−1}`.
    /// Related to the orthonormal matrix by a diagonal similarity.
    Rational,
}

/// Symmetric band matrix, row `n` holding columns `n−bw ..= n+bw`.
#[derive(Clone, Debug)]
struct Banded<T> {
    dim: usize,
    bw: usize,
    rows: Vec<Vec<T>>,
}

impl<T: Field> Banded<T> {
    fn get(&self, n: usize, m: usize) -> T {
        if n.abs_diff(m) > self.bw || n >= self.dim || m >= self.dim {
            return T::zero();
        }
        self.rows[n][m + self.bw - n].clone()
    }

    /// Indices of one parity, in increasing order.
    fn parity_indices(&self, parity: usize) -> Vec<usize> {
        (parity..self.dim).step_by(2).collect()
    }

    fn dense_block(&self, idx: &[usize]) -> Vec<Vec<T>> {
        idx.iter()
            .map(|&n| idx.iter().map(|&m| self.get(n, m)).collect())
            .collect()
    }
}

fn build_matrix<T: Field>(g: &Gen<T>, m_max: usize, basis: Basis) -> Banded<T> {
    let f = reduced_polynomial(g);
    let deg = g.degree();
    let width = m_max + 2 * deg + 2;
    let (up, down): (Vec<T>, Vec<T>) = (0..width)
        .map(|k| match basis {
            Basis::Orthonormal => (
                T::from_ratio(k as i64 + 1, 2).sqrt(),
                T::from_ratio(k as i64, 2).sqrt(),
            ),
            Basis::Rational => (T::one(), T::from_ratio(k as i64, 2)),
        })
        .unzip();
    let mut qpow = vec![T::one()];
    for k in 1..width {
        let prev = qpow[k - 1].clone();
        qpow.push(prev * g.q.clone());
    }
    let mut lpow = vec![T::one()];
    for k in 1..=deg {
        let prev = lpow[k - 1].clone();
        lpow.push(prev * g.l.clone());
    }
    let gij: Vec<Vec<T>> = (0..=deg)
        .map(|i| {
            (0..=deg)
                .map(|j| {
                    let v = &f[i][j];
                    if v.is_zero() {
                        T::zero()
                    } else {
                        v.clone() * lpow[i + j].clone()
                    }
                })
                .collect()
        })
        .collect();
    let prefactor = g.l.clone() * (T::one() - g.q.clone() * g.q.clone()).sqrt();

    let apply_x = |v: &[T], lo: usize| -> Vec<T> {
        let len = v.len();
        (0..len)
            .map(|t| {
                let n = lo + t;
                let mut acc = T::zero();
                if t > 0 && !v[t - 1].is_zero() {
                    acc = acc + up[n - 1].clone() * v[t - 1].clone();
                }
                if t + 1 < len && !v[t + 1].is_zero() {
                    acc = acc + down[n + 1].clone() * v[t + 1].clone();
                }
                acc
            })
            .collect()
    };

    let mut rows: Vec<Vec<T>> = vec![vec![T::zero(); 2 * deg + 1]; m_max + 1];
    for m in 0..=m_max {
        let lo = m.saturating_sub(2 * deg);
        let len = m + 2 * deg - lo + 1;
        let mut v = vec![T::zero(); len];
        v[m - lo] = T::one();
        let mut powers = vec![v];
        for j in 1..=deg {
            let next = apply_x(&powers[j - 1], lo);
            powers.push(next);
        }
        let weighted: Vec<Vec<T>> = powers
            .into_iter()
            .map(|p| {
                p.into_iter()
                    .enumerate()
                    .map(|(t, x)| if x.is_zero() { x } else { x * qpow[lo + t].clone() })
                    .collect()
            })
            .collect();
        let z: Vec<Vec<T>> = (0..=deg)
            .map(|i| {
                let mut acc = vec![T::zero(); len];
                for (j, w) in weighted.iter().enumerate() {
                    let c = &gij[i][j];
                    if c.is_zero() {
                        continue;
                    }
                    for (a, x) in acc.iter_mut().zip(w) {
                        if !x.is_zero() {
                            let cur = core::mem::replace(a, T::zero());
                            *a = cur + c.clone() * x.clone();
                        }
                    }
                }
                acc
            })
            .collect();
        let mut r = z[deg].clone();
        for i in (0..deg).rev() {
            r = apply_x(&r, lo)
                .into_iter()
                .zip(&z[i])
                .map(|(a, b)| a + b.clone())
                .collect();
        }
        let n_lo = m.saturating_sub(deg);
        let n_hi = (m + deg).min(m_max);
        for n in n_lo..=n_hi {
            let x = &r[n - lo];
            if !x.is_zero() {
                rows[n][m + deg - n] = prefactor.clone() * x.clone();
            }
        }
    }
    Banded {
        dim: m_max + 1,
        bw: deg,
        rows,
    }
}

/// Matrix of the fermionic 1-RDM in the bosonic natural orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionRDMMatrix {
    pub particles: usize,
    pub m_max: usize,
    pub entries: DMatrix<f64>,
}

impl FermionRDMMatrix {
    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

fn check_cutoff(particles: usize, m_max: usize) -> Result<()> {
    check_particles(particles)?;
    if m_max < 2 * (particles - 1) {
        return Err(Error::arg(format!(
            "m_max = {m_max} is below 2(N-1) = {}",
            2 * (particles - 1)
        )));
    }
    Ok(())
}

fn f64_band(params: &HarmoniumParams, m_max: usize) -> Result<Banded<f64>> {
    check_cutoff(params.particles, m_max)?;
    let g = Gen::from_ab(params.particles, params.big_a, params.big_b);
    Ok(build_matrix(&g, m_max, Basis::Orthonormal))
}

pub fn rdm_matrix(params: &HarmoniumParams, m_max: usize) -> Result<FermionRDMMatrix> {
    let band = f64_band(params, m_max)?;
    let entries = DMatrix::from_fn(m_max + 1, m_max + 1, |i, j| band.get(i, j));
    Ok(FermionRDMMatrix {
        particles: params.particles,
        m_max,
        entries,
    })
}

/// Whether `q^{m_max}` is below `1e-14`.
pub fn cutoff_adequate(params: &HarmoniumParams, m_max: usize) -> bool {
    params.q == 0.0 || libm::pow(params.q, m_max as f64) < 1e-14
}

/// Fermionic NONs from the truncated matrix, both parity blocks
/// diagonalized separately. Length `m_max + 1`, descending.
pub fn fermionic_nons(params: &HarmoniumParams, m_max: usize) -> Result<Spectrum> {
    let band = f64_band(params, m_max)?;
    let mut values = Vec::with_capacity(m_max + 1);
    for parity in 0..2 {
        let idx = band.parity_indices(parity);
        let mut block = band.dense_block(&idx);
        let cut = block.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-250;
        for v in block.iter_mut().flatten() {
            if v.abs() < cut {
                *v = 0.0;
            }
        }
        values.extend(linalg::jacobi_eigenvalues(block, 100)?);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    let sum: f64 = values.iter().sum();
    let tol = 1e-9 + (sum - params.particles as f64).abs();
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Spectrum::with_tolerance(values, params.particles, tol)
}

/// Fermionic NONs in `P`-bit arithmetic via graded Jacobi on the parity
/// blocks. Keeps small NONs and holes `1 − λ` accurate relative to their
/// own size.
pub fn fermionic_nons_mp<const P: usize>(particles: usize, delta: f64, m_max: usize) -> Result<Vec<Mp<P>>> {
    if particles == 0 {
        return Err(Error::arg("particle number must be positive"));
    }
    check_cutoff(particles, m_max)?;
    let g = Gen::<Mp<P>>::from_delta(particles, Mp::from_f64(delta));
    let band = build_matrix(&g, m_max, Basis::Orthonormal);
    let mut values = Vec::with_capacity(m_max + 1);
    for parity in 0..2 {
        let idx = band.parity_indices(parity);
        values.extend(linalg::jacobi_eigenvalues(band.dense_block(&idx), 200)?);
    }
    values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    Ok(values)
}

/// A basis cutoff for [`fermionic_nons_mp`] that resolves NONs down to
/// about `10^{−digits}`.
pub fn precise_cutoff(particles: usize, delta: f64, digits: f64) -> Result<usize> {
    let p = from_delta(particles, delta)?;
    let deg = 2 * (particles - 1);
    if !p.beta_omega.is_finite() {
        return Ok(deg + particles + 2);
    }
    let extra = libm::ceil(digits * core::f64::consts::LN_10 / p.beta_omega) as usize;
    Ok(deg + particles + extra + 4)
}

/// Boltzmann occupation numbers of the bosonic ground state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BosonicSpectrum {
    /// `λ_k = N(1−q)q^k` for `k = 0..=k_max`.
    pub occupations: Vec<f64>,
    /// Weight beyond `k_max`, `N q^{k_max+1}`.
    pub tail: f64,
    /// `−ln(1−q) − q ln q/(1−q)`.
    pub entropy: f64,
}

pub fn bosonic_spectrum(params: &HarmoniumParams, k_max: usize) -> BosonicSpectrum {
    let n = params.particles as f64;
    let q = params.q;
    let occupations = (0..=k_max)
        .map(|k| n * (1.0 - q) * libm::pow(q, k as f64))
        .collect();
    let entropy = if q == 0.0 {
        0.0
    } else {
        -libm::log1p(-q) - q * libm::log(q) / (1.0 - q)
    };
    BosonicSpectrum {
        occupations,
        tail: n * libm::pow(q, k_max as f64 + 1.0),
        entropy,
    }
}

/// Parity of the bosonic orbitals a NON branch lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// One NON as an exact polynomial in `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonSeries {
    pub parity: Parity,
    pub coeffs: Vec<BigRational>,
    pub multiplicity: usize,
    pub kind: EigenKind,
}

impl NonSeries {
    pub fn eval_f64(&self, delta: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * delta + num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::NAN))
    }
}

/// Weak-coupling expansion of the fermionic NONs through `δ^order`.
///
/// The matrix is expanded in the rescaled Hermite basis, split by parity
/// and block-diagonalized around the occupied orbitals. Branches are
/// sorted by their value as `δ → 0⁺`, largest first; high orbitals whose
/// NONs vanish through the order come out as one degenerate branch per
/// parity.
pub fn weak_coupling_series(particles: usize, order: usize) -> Result<Vec<NonSeries>> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::Precondition(format!(
            "series order {order} exceeds the supported {MAX_SERIES_ORDER}"
        )));
    }
    if particles == 0 {
        return Err(Error::arg("particle number must be positive"));
    }
    check_particles(particles)?;
    let g = Gen::<Series<MAX_SERIES_ORDER>>::from_delta(particles, Series::variable());
    let n_max = 2 * (particles - 1) + order.max(2);
    let band = build_matrix(&g, n_max, Basis::Rational);

    let mut out = Vec::new();
    for (parity, tag) in [(0, Parity::Even), (1, Parity::Odd)] {
        let idx = band.parity_indices(parity);
        let dense = band.dense_block(&idx);
        let terms: Vec<Mat<BigRational>> = (0..=order)
            .map(|k| {
                Mat::from_rows(
                    dense
                        .iter()
                        .map(|row| row.iter().map(|s| s.coeffs()[k].clone()).collect())
                        .collect(),
                )
            })
            .collect::<Result<_>>()?;
        let series = MatrixSeries::new(terms)?;
        let occupied: Vec<usize> = idx
            .iter()
            .enumerate()
            .filter(|(_, &n)| n < particles)
            .map(|(t, _)| t)
            .collect();
        let blocks = if occupied.is_empty() || occupied.len() == idx.len() {
            vec![series]
        } else {
            let split = BlockSplit::new(occupied, idx.len())?;
            let bd = perturbation::block_diagonalize(&series, &split, order)?;
            vec![
                bd.transformed.block(split.p()),
                bd.transformed.block(&split.complement()),
            ]
        };
        for b in blocks {
            for e in perturbation::eigenvalue_series(&b, order)? {
                out.push(NonSeries {
                    parity: tag,
                    coeffs: e.coeffs,
                    multiplicity: e.multiplicity,
                    kind: e.kind,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            if x != y {
                return y.cmp(x);
            }
        }
        core::cmp::Ordering::Equal
    });
    Ok(out)
}

/// Least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_error: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::arg("a line fit needs at least two matching points"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("a line fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_error = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        libm::sqrt(rss / (nf - 2.0) / sxx)
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_error,
    })
}

/// Power law `y ≈ coefficient · x^slope` fitted in log-log space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLogFit {
    pub quantity: String,
    pub slope: f64,
    pub intercept: f64,
    pub coefficient: f64,
}

pub fn loglog_fit(quantity: impl Into<String>, xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::arg("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| libm::log(*x)).collect();
    let ly: Vec<f64> = ys.iter().map(|y| libm::log(*y)).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(LogLogFit {
        quantity: quantity.into(),
        slope: fit.slope,
        intercept: fit.intercept,
        coefficient: libm::exp(fit.intercept),
    })
}

fn quadratic_leading(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 3 {
        return None;
    }
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    for (x, y) in xs.iter().zip(ys) {
        let row = nalgebra::Vector3::new(x * x, *x, 1.0);
        ata += row * row.transpose();
        aty += row * *y;
    }
    ata.lu().solve(&aty).map(|s| s[0])
}

/// Fitted decay constants of the NONs and natural orbitals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub particles: usize,
    pub delta: f64,
    pub m_max: usize,
    pub precision_bits: usize,
    /// Exact `βΩ`.
    pub beta_omega: f64,
    /// `(k, ln λ_k)` for the requested orbitals, `k` counted from 0.
    pub log_nons: Vec<(usize, f64)>,
    /// Slope of `−ln(λ_k k^{−(N−1)})` against `k + ½`, estimating `βΩ`.
    pub non_fit: Option<LinearFit>,
    /// Quadratic coefficient of `−ln|ζ_m^{(k)}|` in `m − k` for `m ≫ k`,
    /// estimating `βΩ/(4(N−1))`, per orbital.
    pub gaussian: Vec<(usize, f64)>,
    /// Slope of `ln|ζ_m^{(k)}|` in `m` over `k/4 ≤ m ≤ k/2` for the
    /// largest orbital.
    pub exponential: Option<(usize, f64)>,
    pub warnings: Vec<String>,
}

/// Settings for [`decay_diagnostics`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    pub m_max: usize,
    /// Orbital indices `k`, counted from 0 like the bosonic orbitals.
    pub orbitals: Vec<usize>,
    /// Range of `m − k` used for the Gaussian tail fit.
    pub gaussian_window: (usize, usize),
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            m_max: DEFAULT_DECAY_M_MAX,
            orbitals: (100..=250).step_by(30).collect(),
            gaussian_window: (10, 40),
        }
    }
}

/// Banded symmetric matrix in compact form, for one parity block.
struct BandBlock<T> {
    n: usize,
    w: usize,
    /// `a[i][j − i + w]`.
    a: Vec<Vec<T>>,
}

impl<T: Real> BandBlock<T> {
    fn from_banded(band: &Banded<T>, parity: usize) -> Self {
        let idx = band.parity_indices(parity);
        let w = band.bw / 2;
        let n = idx.len();
        let a = (0..n)
            .map(|i| {
                (0..=2 * w)
                    .map(|o| {
                        let j = (i + o) as isize - w as isize;
                        if j < 0 || j as usize >= n {
                            T::zero()
                        } else {
                            band.get(idx[i], idx[j as usize])
                        }
                    })
                    .collect()
            })
            .collect();
        Self { n, w, a }
    }

    fn at(&self, i: usize, j: usize) -> T {
        if i.abs_diff(j) > self.w {
            return T::zero();
        }
        self.a[i][j + self.w - i].clone()
    }

    /// Number of eigenvalues above `sigma` (Sylvester inertia of an
    /// `LDLᵀ` factorization of `A − σ`).
    fn count_above(&self, sigma: &T) -> usize {
        let (n, w) = (self.n, self.w);
        let mut l: Vec<Vec<T>> = vec![vec![T::zero(); w]; n];
        let mut d: Vec<T> = Vec::with_capacity(n);
        let tiny = T::epsilon() * T::epsilon();
        let mut count = 0;
        for i in 0..n {
            let j0 = i.saturating_sub(w);
            for j in j0..i {
                let mut acc = self.at(i, j);
                for k in i.saturating_sub(w).max(j.saturating_sub(w))..j {
                    acc = acc - l[i][k + w - i].clone() * l[j][k + w - j].clone() * d[k].clone();
                }
                l[i][j + w - i] = acc / d[j].clone();
            }
            let mut di = self.at(i, i) - sigma.clone();
            for k in j0..i {
                let lik = l[i][k + w - i].clone();
                di = di - lik.clone() * lik * d[k].clone();
            }
            if di.is_zero() {
                di = tiny.clone() * (sigma.abs() + tiny.clone());
            }
            if di > T::zero() {
                count += 1;
            }
            d.push(di);
        }
        count
    }

    fn rayleigh(&self, x: &[T]) -> T {
        let (n, w) = (self.n, self.w);
        let mut num = T::zero();
        let mut den = T::zero();
        for i in 0..n {
            if x[i].is_zero() {
                continue;
            }
            let mut ax = T::zero();
            for j in i.saturating_sub(w)..=(i + w).min(n - 1) {
                ax = ax + self.at(i, j) * x[j].clone();
            }
            num = num + x[i].clone() * ax;
            den = den + x[i].clone() * x[i].clone();
        }
        num / den
    }

    /// Solves `(A − σ) x = b` by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, sigma: &T, b: &[T]) -> Vec<T> {
        let (n, w) = (self.n, self.w);
        let mut m: Vec<Vec<T>> = (0..n)
            .map(|i| {
                let mut row = vec![T::zero(); 3 * w + 1];
                for j in i.saturating_sub(w)..=(i + w).min(n - 1) {
                    let mut v = self.at(i, j);
                    if i == j {
                        v = v - sigma.clone();
                    }
                    row[j + w - i] = v;
                }
                row
            })
            .collect();
        // row i stores columns i−w ..= i+2w at offset j + w − i
        let mut x: Vec<T> = b.to_vec();
        let span = |i: usize| (i.saturating_sub(w), (i + 2 * w).min(n - 1));
        let get = |m: &Vec<Vec<T>>, i: usize, j: usize| -> T {
            let (lo, hi) = span(i);
            if j < lo || j > hi {
                T::zero()
            } else {
                m[i][j + w - i].clone()
            }
        };
        for c in 0..n {
            let last = (c + w).min(n - 1);
            let mut p = c;
            for r in c + 1..=last {
                if get(&m, r, c).abs() > get(&m, p, c).abs() {
                    p = r;
                }
            }
            if p != c {
                let hi = (c + 2 * w).min(n - 1);
                for j in c..=hi {
                    let a = get(&m, c, j);
                    let bb = get(&m, p, j);
                    m[c][j + w - c] = bb;
                    if j + w >= p {
                        m[p][j + w - p] = a;
                    }
                }
                x.swap(c, p);
            }
            let mut piv = get(&m, c, c);
            if piv.is_zero() {
                piv = T::epsilon() * T::epsilon();
                m[c][w] = piv.clone();
            }
            for r in c + 1..=last {
                let f = get(&m, r, c) / piv.clone();
                if f.is_zero() {
                    continue;
                }
                let hi = (c + 2 * w).min(n - 1);
                for j in c..=hi {
                    let v = get(&m, r, j) - f.clone() * get(&m, c, j);
                    if j + w >= r && j <= r + 2 * w {
                        m[r][j + w - r] = v;
                    }
                }
                let xr = x[r].clone() - f * x[c].clone();
                x[r] = xr;
            }
        }
        for c in (0..n).rev() {
            let mut acc = x[c].clone();
            for j in c + 1..=(c + 2 * w).min(n - 1) {
                acc = acc - get(&m, c, j) * x[j].clone();
            }
            x[c] = acc / get(&m, c, c);
        }
        x
    }
}

fn normalize_max<T: Real>(v: &mut [T]) {
    let mut big = T::zero();
    for x in v.iter() {
        if x.abs() > big {
            big = x.abs();
        }
    }
    if big.is_zero() {
        return;
    }
    for x in v.iter_mut() {
        *x = x.clone() / big.clone();
    }
}

struct Decay<T> {
    blocks: [BandBlock<T>; 2],
}

impl<T: Real> Decay<T> {
    fn count(&self, sigma: &T) -> usize {
        self.blocks[0].count_above(sigma) + self.blocks[1].count_above(sigma)
    }

    /// `ln λ_k`, `k` counted from 0, by bisection in `ln σ`.
    fn log_eigenvalue(&self, k: usize, beta_omega: f64) -> f64 {
        let mut hi = 1.0f64;
        let mut lo = -(beta_omega * (k as f64 + 8.0) + 60.0);
        while self.count(&T::from_f64(lo).exp()) <= k {
            lo = 2.0 * lo - 10.0;
        }
        while self.count(&T::from_f64(hi).exp()) > k {
            hi += 1.0;
        }
        for _ in 0..48 {
            let mid = 0.5 * (lo + hi);
            if self.count(&T::from_f64(mid).exp()) > k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Natural-orbital coefficients `ζ_m` (full index `m`) for the
    /// eigenvalue `exp(log_lambda)`.
    fn orbital(&self, log_lambda: f64) -> (usize, Vec<T>) {
        let sigma = T::from_f64(log_lambda).exp();
        let below = T::from_f64(log_lambda - 1e-6).exp();
        let above = T::from_f64(log_lambda + 1e-6).exp();
        let parity = if self.blocks[0].count_above(&below) > self.blocks[0].count_above(&above) {
            0
        } else {
            1
        };
        let block = &self.blocks[parity];
        let mut x = vec![T::one(); block.n];
        let mut sigma = sigma;
        for it in 0..5 {
            x = block.solve_shifted(&sigma, &x);
            normalize_max(&mut x);
            if it >= 1 {
                sigma = block.rayleigh(&x);
            }
        }
        (parity, x)
    }
}

/// Decay of the NONs and of the natural-orbital coefficients in the
/// bosonic basis. Runs in extended precision chosen from the expected
/// dynamic range.
pub fn decay_diagnostics(params: &HarmoniumParams, config: &DecayConfig) -> Result<DecayReport> {
    let k_max = config.orbitals.iter().copied().max().unwrap_or(0) as f64;
    let t_max = config.gaussian_window.1 as f64;
    let range = params.beta_omega * (k_max / 2.0 + t_max * t_max / (4.0 * (params.particles as f64 - 1.0)));
    let bits = range / core::f64::consts::LN_2 + 256.0;
    if bits <= 1024.0 {
        decay_with::<1024>(params, config)
    } else if bits <= 2048.0 {
        decay_with::<2048>(params, config)
    } else {
        decay_with::<4096>(params, config)
    }
}

/// [`decay_diagnostics`] at a fixed precision of `P` bits.
pub fn decay_with<const P: usize>(params: &HarmoniumParams, config: &DecayConfig) -> Result<DecayReport> {
    let n = params.particles;
    if n < 2 {
        return Err(Error::arg("decay diagnostics need at least two particles"));
    }
    if !params.beta_omega.is_finite() {
        return Err(Error::arg("decay diagnostics need a nonzero interaction"));
    }
    check_cutoff(n, config.m_max)?;
    let m_max = config.m_max;
    let mut warnings = Vec::new();
    if m_max < 300 {
        warnings.push(format!("m_max = {m_max} is below the recommended 300"));
    }
    let g = Gen::<Mp<P>>::from_delta(n, Mp::from_f64(params.delta));
    let band = build_matrix(&g, m_max, Basis::Orthonormal);
    let decay = Decay {
        blocks: [BandBlock::from_banded(&band, 0), BandBlock::from_banded(&band, 1)],
    };

    let mut log_nons = Vec::new();
    for &k in &config.orbitals {
        if k + 20 > m_max {
            warnings.push(format!("orbital {k} is too close to m_max = {m_max}; skipped"));
            continue;
        }
        log_nons.push((k, decay.log_eigenvalue(k, params.beta_omega)));
    }
    let fit_points: Vec<(f64, f64)> = log_nons
        .iter()
        .filter(|(k, _)| *k >= 1)
        .map(|&(k, ll)| (k as f64 + 0.5, -ll + (n as f64 - 1.0) * libm::log(k as f64)))
        .collect();
    let mut non_fit = if fit_points.len() >= 2 {
        let xs: Vec<f64> = fit_points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = fit_points.iter().map(|p| p.1).collect();
        Some(linear_fit(&xs, &ys)?)
    } else {
        None
    };
    if let Some(fit) = non_fit.as_mut() {
        if !cutoff_adequate(params, m_max) {
            fit.slope_error *= 10.0;
            warnings.push(String::from("q^m_max exceeds 1e-14; uncertainty widened"));
        }
    }

    let (t1, t2) = config.gaussian_window;
    let mut gaussian = Vec::new();
    for &(k, ll) in &log_nons {
        if k + t2 > m_max {
            continue;
        }
        let (_, zeta) = decay.orbital(ll);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for t in (t1..=t2).filter(|t| t % 2 == 0) {
            let v = &zeta[(k + t) / 2];
            if v.is_zero() {
                continue;
            }
            xs.push(t as f64);
            ys.push(-ln_to_f64(&v.abs()));
        }
        if let Some(c) = quadratic_leading(&xs, &ys) {
            gaussian.push((k, c));
        }
    }

    let exponential = log_nons.iter().max_by_key(|p| p.0).and_then(|&(k, ll)| {
        let (_, zeta) = decay.orbital(ll);
        let (lo, hi) = (k / 4, k / 2);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for m in (lo..=hi).filter(|m| (k - m) % 2 == 0) {
            let v = &zeta[m / 2];
            if !v.is_zero() {
                xs.push(m as f64);
                ys.push(ln_to_f64(&v.abs()));
            }
        }
        linear_fit(&xs, &ys).ok().map(|f| (k, f.slope))
    });

    Ok(DecayReport {
        particles: n,
        delta: params.delta,
        m_max,
        precision_bits: P,
        beta_omega: params.beta_omega,
        log_nons,
        non_fit,
        gaussian,
        exponential,
        warnings,
    })
}
