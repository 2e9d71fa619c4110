//! Dense eigen-decompositions with deterministic output, plus a Jacobi
//! solver that runs in any [`Real`] scalar type.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const CLUSTER_GAP: f64 = 1e-9;

/// Hermitian eigen-decomposition, eigenvalues descending, eigenvectors in
/// canonical form (see [`canonicalize_clusters`]).
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    eigen_sorted(m)
}

/// Real symmetric eigen-decomposition, eigenvalues descending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    eigen_sorted(m)
}

/// Eigenvalues of a real symmetric matrix, descending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eig = nalgebra::SymmetricEigen::try_new(flush_tiny(m), f64::EPSILON, 0)
        .ok_or_else(|| Error::numeric("symmetric eigensolver did not converge", f64::NAN))?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("symmetric eigensolver produced non-finite values", f64::NAN));
    }
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// Zeroes entries below `1e-250` of the largest one. The QR sweeps of the
/// solver break down on subnormal inputs.
fn flush_tiny<T>(m: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let scale = m.iter().map(|x| x.modulus()).fold(0.0f64, f64::max);
    let cut = scale * 1e-250;
    m.map(|x| if x.modulus() < cut { T::zero() } else { x })
}

fn eigen_sorted<T>(m: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::arg("matrix must be square"));
    }
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let eig = nalgebra::SymmetricEigen::try_new(flush_tiny(m), f64::EPSILON, 0)
        .ok_or_else(|| Error::numeric("hermitian eigensolver did not converge", f64::NAN))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<T>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    canonicalize_clusters(&values, &mut vectors);

    let scale = m.iter().map(|x| x.modulus()).fold(1.0f64, f64::max);
    let mut residual = 0.0f64;
    for (col, &lam) in values.iter().enumerate() {
        let v = vectors.column(col);
        let r = m * v - v * T::from_real(lam);
        residual = residual.max(r.norm());
    }
    if !(residual <= 1e-8 * scale) {
        return Err(Error::numeric(
            format!("eigen-decomposition of a {n}x{n} matrix"),
            residual,
        ));
    }
    Ok((values, vectors))
}

/// Replaces the eigenvectors of every cluster of eigenvalues (consecutive
/// gaps below [`CLUSTER_GAP`]) with a pivoted Gram-Schmidt basis built from
/// the projections of the standard basis vectors onto the cluster span.
///
/// Each output vector has its pivot component real and positive, which also
/// fixes the phase of non-degenerate eigenvectors.
pub fn canonicalize_clusters<T>(values: &[f64], vectors: &mut DMatrix<T>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end - 1] - values[end]).abs() < CLUSTER_GAP {
            end += 1;
        }
        canonical_span(vectors, start, end);
        start = end;
    }
}

fn canonical_span<T>(vectors: &mut DMatrix<T>, start: usize, end: usize)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let d = vectors.nrows();
    let span = vectors.columns(start, end - start).into_owned();
    // Column k of the projector onto the span is P e_k.
    let proj = &span * span.adjoint();
    let mut chosen: Vec<nalgebra::DVector<T>> = Vec::with_capacity(end - start);
    for slot in start..end {
        let mut best: Option<(f64, nalgebra::DVector<T>)> = None;
        for k in 0..d {
            let mut w = proj.column(k).into_owned();
            for u in &chosen {
                let c = u[k].conjugate();
                w -= u * c;
            }
            let norm = w.norm();
            if best.as_ref().map_or(true, |(b, _)| norm > *b + 1e-12) {
                best = Some((norm, w));
            }
        }
        let (norm, w) = best.expect("cluster of nonzero width");
        let mut u = w / T::from_real(norm);
        // Fix the phase at the largest component.
        let mut piv = 0;
        for k in 0..d {
            if u[k].modulus() > u[piv].modulus() + 1e-12 {
                piv = k;
            }
        }
        let ph = u[piv] / T::from_real(u[piv].modulus());
        u /= ph;
        vectors.set_column(slot, &u);
        chosen.push(u);
    }
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix given as rows.
///
/// Rotations are skipped when `|a_pq| <= eps * sqrt(|a_pp a_qq|)`, which
/// keeps small eigenvalues of graded matrices accurate relative to their
/// own size. Returned descending.
pub fn jacobi_eigenvalues<T: Real>(mut a: Vec<Vec<T>>, max_sweeps: usize) -> Result<Vec<T>> {
    let n = a.len();
    let eps = T::epsilon();
    for sweep in 0..=max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].is_zero() {
                    continue;
                }
                let apq = a[p][q].clone();
                let scale = (a[p][p].clone() * a[q][q].clone()).abs().sqrt();
                if apq.abs() <= eps.clone() * scale {
                    continue;
                }
                if sweep == max_sweeps {
                    return Err(Error::numeric(
                        format!("Jacobi iteration on a {n}x{n} matrix"),
                        apq.abs().to_f64(),
                    ));
                }
                rotated = true;
                let two = T::from_i64(2);
                let theta = (a[q][q].clone() - a[p][p].clone()) / (two * apq.clone());
                let one = T::one();
                let t = {
                    let r = (theta.clone() * theta.clone() + one.clone()).sqrt();
                    let denom = theta.abs() + r;
                    if theta < T::zero() {
                        -(one.clone() / denom)
                    } else {
                        one.clone() / denom
                    }
                };
                let c = one.clone() / (t.clone() * t.clone() + one).sqrt();
                let s = t.clone() * c.clone();
                let app = a[p][p].clone() - t.clone() * apq.clone();
                let aqq = a[q][q].clone() + t * apq;
                a[p][p] = app;
                a[q][q] = aqq;
                a[p][q] = T::zero();
                a[q][p] = T::zero();
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r][p].clone();
                    let arq = a[r][q].clone();
                    let np = c.clone() * arp.clone() - s.clone() * arq.clone();
                    let nq = s.clone() * arp + c.clone() * arq;
                    a[r][p] = np.clone();
                    a[p][r] = np;
                    a[r][q] = nq.clone();
                    a[q][r] = nq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut vals: Vec<T> = (0..n).map(|i| a[i][i].clone()).collect();
    vals.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
    Ok(vals)
}

/// Dense matrix from rows, converted to `f64`.
pub fn rows_to_f64<T: Real>(rows: &[Vec<T>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    let mut out = DMatrix::zeros(n, m);
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            out[(i, j)] = x.to_f64();
        }
    }
    out
}

/// Zero square matrix as rows.
pub fn zero_rows<T: Real>(n: usize) -> Vec<Vec<T>> {
    vec![vec![T::zero(); n]; n]
}
