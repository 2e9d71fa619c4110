//! Slater determinants, fermion states, one-particle reduced density
//! matrices and natural occupation numbers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance on the squared norm of a [`FermionState`].
pub const STATE_NORM_TOL: f64 = 1e-12;
/// Default tolerance for [`Spectrum`] and [`OneRdm`] validation.
pub const SPECTRUM_TOL: f64 = 1e-10;

/// The pair `(N, d)`: `N` fermions in `d` orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Setting {
    particles: usize,
    orbitals: usize,
}

impl Setting {
    pub const MAX_ORBITALS: usize = 64;

    pub fn new(particles: usize, orbitals: usize) -> Result<Self> {
        if particles > orbitals {
            return Err(Error::arg(format!(
                "setting ({particles},{orbitals}) has more particles than orbitals"
            )));
        }
        if orbitals > Self::MAX_ORBITALS {
            return Err(Error::arg(format!(
                "setting ({particles},{orbitals}) exceeds {} orbitals",
                Self::MAX_ORBITALS
            )));
        }
        Ok(Self { particles, orbitals })
    }

    /// Skips the orbital cap; used for long occupation-number lists.
    pub(crate) fn unchecked(particles: usize, orbitals: usize) -> Self {
        Self { particles, orbitals }
    }

    pub fn particles(self) -> usize {
        self.particles
    }

    pub fn orbitals(self) -> usize {
        self.orbitals
    }

    /// Particle-hole dual `(d - N, d)`.
    pub fn dual(self) -> Self {
        Self {
            particles: self.orbitals - self.particles,
            orbitals: self.orbitals,
        }
    }

    /// Number of Slater determinants, `C(d, N)`.
    pub fn dimension(self) -> u128 {
        let (n, d) = (self.particles as u128, self.orbitals as u128);
        let k = n.min(d - n);
        (0..k).fold(1u128, |acc, i| acc * (d - i) / (i + 1))
    }

    /// All determinants of the setting in ascending bitmask order.
    pub fn determinants(self) -> Vec<SlaterDeterminant> {
        let mut out = Vec::new();
        let (n, d) = (self.particles as u32, self.orbitals as u32);
        if n == 0 {
            out.push(SlaterDeterminant(0));
            return out;
        }
        let limit = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
        let mut mask: u64 = (1u64 << n) - 1;
        loop {
            out.push(SlaterDeterminant(mask));
            // Gosper's hack: next mask with the same popcount
            let c = mask & mask.wrapping_neg();
            let r = mask.wrapping_add(c);
            if r == 0 {
                break;
            }
            let next = (((r ^ mask) >> 2) / c) | r;
            if next > limit || next < mask {
                break;
            }
            mask = next;
        }
        out
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.particles, self.orbitals)
    }
}

/// Occupation bitmask of a Slater determinant. Bit `i - 1` is orbital `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlaterDeterminant(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderMode {
    Create,
    Annihilate,
}

impl SlaterDeterminant {
    pub const EMPTY: Self = Self(0);

    pub fn from_mask(mask: u64) -> Self {
        Self(mask)
    }

    /// Builds `|i1, ..., iN>` from 1-based orbital indices in any order;
    /// the determinant is stored with orbitals ascending, so an odd
    /// permutation of the input is *not* reflected in a sign.
    pub fn from_orbitals(orbitals: &[usize], setting: Setting) -> Result<Self> {
        let mut mask = 0u64;
        for &i in orbitals {
            if i == 0 || i > setting.orbitals {
                return Err(Error::arg(format!(
                    "orbital {i} outside 1..={}",
                    setting.orbitals
                )));
            }
            let bit = 1u64 << (i - 1);
            if mask & bit != 0 {
                return Err(Error::arg(format!("orbital {i} listed twice")));
            }
            mask |= bit;
        }
        if orbitals.len() != setting.particles {
            return Err(Error::arg(format!(
                "determinant has {} orbitals, setting {setting} needs {}",
                orbitals.len(),
                setting.particles
            )));
        }
        Ok(Self(mask))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Whether 1-based orbital `i` is occupied.
    pub fn occupies(self, i: usize) -> bool {
        i >= 1 && i <= 64 && self.0 & (1u64 << (i - 1)) != 0
    }

    /// Occupied orbitals, 1-based and ascending.
    pub fn orbitals(self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count());
        let mut m = self.0;
        while m != 0 {
            let tz = m.trailing_zeros() as usize;
            out.push(tz + 1);
            m &= m - 1;
        }
        out
    }

    /// `a_i` or `a_i^dagger` applied to the determinant; `None` is the zero
    /// vector. The sign is `(-1)^(occupied orbitals below i)`.
    pub fn apply_ladder(
        self,
        orbital: usize,
        mode: LadderMode,
        orbitals: usize,
    ) -> Result<Option<(i8, SlaterDeterminant)>> {
        if orbital == 0 || orbital > orbitals || orbitals > 64 {
            return Err(Error::arg(format!("orbital {orbital} outside 1..={orbitals}")));
        }
        let bit = 1u64 << (orbital - 1);
        let occupied = self.0 & bit != 0;
        match (mode, occupied) {
            (LadderMode::Annihilate, false) | (LadderMode::Create, true) => return Ok(None),
            _ => {}
        }
        let below = (self.0 & (bit - 1)).count_ones();
        let sign = if below % 2 == 0 { 1 } else { -1 };
        Ok(Some((sign, SlaterDeterminant(self.0 ^ bit))))
    }
}

impl fmt::Display for SlaterDeterminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for (k, i) in self.orbitals().into_iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str(">")
    }
}

/// `a_i^dagger a_j |det>` for 0-based `i`, `j`, as a sign and the image.
fn hop(det: u64, i: usize, j: usize) -> Option<(f64, u64)> {
    let bj = 1u64 << j;
    if det & bj == 0 {
        return None;
    }
    let mut sign = if (det & (bj - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    let mid = det ^ bj;
    let bi = 1u64 << i;
    if mid & bi != 0 {
        return None;
    }
    if (mid & (bi - 1)).count_ones() % 2 == 1 {
        sign = -sign;
    }
    Some((sign, mid | bi))
}

/// A normalized N-fermion state as a sparse map of determinant amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionState {
    setting: Setting,
    amplitudes: BTreeMap<SlaterDeterminant, Complex64>,
}

impl FermionState {
    /// Builds a state that must already be normalized to [`STATE_NORM_TOL`].
    pub fn new(
        setting: Setting,
        terms: impl IntoIterator<Item = (SlaterDeterminant, Complex64)>,
    ) -> Result<Self> {
        let state = Self::collect(setting, terms)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::arg(format!(
                "state is not normalized (sum |c|^2 = {norm})"
            )));
        }
        Ok(state)
    }

    /// Builds a state and rescales it to unit norm.
    pub fn normalized(
        setting: Setting,
        terms: impl IntoIterator<Item = (SlaterDeterminant, Complex64)>,
    ) -> Result<Self> {
        let mut state = Self::collect(setting, terms)?;
        let norm = state.norm_sqr().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::arg("state has zero norm"));
        }
        for c in state.amplitudes.values_mut() {
            *c /= norm;
        }
        Ok(state)
    }

    /// Convenience constructor from orbital lists and real amplitudes.
    pub fn from_real_terms(setting: Setting, terms: &[(&[usize], f64)]) -> Result<Self> {
        let mut out = Vec::with_capacity(terms.len());
        for (orbs, c) in terms {
            out.push((
                SlaterDeterminant::from_orbitals(orbs, setting)?,
                Complex64::new(*c, 0.0),
            ));
        }
        Self::new(setting, out)
    }

    fn collect(
        setting: Setting,
        terms: impl IntoIterator<Item = (SlaterDeterminant, Complex64)>,
    ) -> Result<Self> {
        let limit = if setting.orbitals == 64 {
            u64::MAX
        } else {
            (1u64 << setting.orbitals) - 1
        };
        let mut amplitudes = BTreeMap::new();
        for (det, c) in terms {
            if det.count() != setting.particles || det.mask() & !limit != 0 {
                return Err(Error::arg(format!("determinant {det} does not fit {setting}")));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::arg(format!("amplitude of {det} is not finite")));
            }
            if amplitudes.insert(det, c).is_some() {
                return Err(Error::arg(format!("duplicate determinant {det}")));
            }
        }
        amplitudes.retain(|_, c: &mut Complex64| c.norm_sqr() != 0.0);
        Ok(Self { setting, amplitudes })
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn amplitudes(&self) -> &BTreeMap<SlaterDeterminant, Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, det: SlaterDeterminant) -> Complex64 {
        self.amplitudes.get(&det).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|c| c.norm_sqr()).sum()
    }

    /// Diagonal occupations `sum_{I containing i} |c_I|^2` in the state's
    /// own orbital basis.
    pub fn occupation_sums(&self) -> Vec<f64> {
        let mut occ = alloc::vec![0.0; self.setting.orbitals];
        for (det, c) in &self.amplitudes {
            let w = c.norm_sqr();
            for i in det.orbitals() {
                occ[i - 1] += w;
            }
        }
        occ
    }
}

/// Hermitian one-particle reduced density matrix with trace `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneRdm {
    matrix: DMatrix<Complex64>,
    particles: usize,
}

impl OneRdm {
    pub fn new(matrix: DMatrix<Complex64>, particles: usize) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d {
            return Err(Error::arg("1-RDM must be square"));
        }
        Setting::new(particles, d)?;
        for i in 0..d {
            for j in 0..=i {
                let diff = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if diff > 1e-12 {
                    return Err(Error::arg(format!(
                        "1-RDM is not hermitian at ({}, {}): {diff:e}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let trace: f64 = (0..d).map(|i| matrix[(i, i)].re).sum();
        if (trace - particles as f64).abs() > SPECTRUM_TOL {
            return Err(Error::arg(format!(
                "1-RDM trace {trace} differs from N = {particles}"
            )));
        }
        Ok(Self { matrix, particles })
    }

    pub fn from_real(matrix: DMatrix<f64>, particles: usize) -> Result<Self> {
        Self::new(matrix.map(|x| Complex64::new(x, 0.0)), particles)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Natural occupation numbers in descending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    values: Vec<f64>,
    particles: usize,
}

impl Spectrum {
    /// Validates ordering, the box `[0, 1]` and normalization to
    /// [`SPECTRUM_TOL`].
    pub fn new(values: Vec<f64>, particles: usize) -> Result<Self> {
        Self::with_tolerance(values, particles, SPECTRUM_TOL)
    }

    /// Spectra may be longer than [`Setting::MAX_ORBITALS`]; only the
    /// determinant representation is limited to 64 orbitals.
    pub fn with_tolerance(values: Vec<f64>, particles: usize, tol: f64) -> Result<Self> {
        if particles > values.len() {
            return Err(Error::arg(format!(
                "{particles} particles need at least as many occupation numbers, got {}",
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < -tol || v > 1.0 + tol {
                return Err(Error::arg(format!("lambda_{} = {v} outside [0, 1]", i + 1)));
            }
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[1] > w[0] + tol {
                return Err(Error::arg(format!(
                    "spectrum not descending at lambda_{} = {} < lambda_{} = {}",
                    i + 1,
                    w[0],
                    i + 2,
                    w[1]
                )));
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - particles as f64).abs() > tol {
            return Err(Error::arg(format!(
                "spectrum sums to {sum}, expected {particles}"
            )));
        }
        Ok(Self { values, particles })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn setting(&self) -> Setting {
        Setting {
            particles: self.particles,
            orbitals: self.values.len(),
        }
    }
}

/// `rho_ij = <Psi| a_i^dagger a_j |Psi>`.
pub fn one_rdm(state: &FermionState) -> OneRdm {
    let d = state.setting.orbitals;
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    for (det, cj) in &state.amplitudes {
        let m = det.mask();
        for j in 0..d {
            if m & (1u64 << j) == 0 {
                continue;
            }
            for i in 0..d {
                if let Some((sign, image)) = hop(m, i, j) {
                    if let Some(ci) = state.amplitudes.get(&SlaterDeterminant(image)) {
                        rho[(i, j)] += ci.conj() * cj * sign;
                    }
                }
            }
        }
    }
    // Exact hermiticity regardless of summation order.
    for i in 0..d {
        rho[(i, i)].im = 0.0;
        for j in 0..i {
            let avg = (rho[(i, j)] + rho[(j, i)].conj()) * 0.5;
            rho[(i, j)] = avg;
            rho[(j, i)] = avg.conj();
        }
    }
    OneRdm {
        matrix: rho,
        particles: state.setting.particles,
    }
}

/// Eigen-decomposition of a 1-RDM: descending occupations and the matching
/// orthonormal natural orbitals as columns.
///
/// Since `rho_ij = <a_i^dagger a_j>` is the transpose of the operator
/// matrix, the orbitals are the complex conjugates of the eigenvectors of
/// `rho`.
///
/// Eigenvectors inside a cluster of eigenvalues closer than `1e-9` are
/// replaced by a pivoted Gram-Schmidt basis of the cluster's span, so the
/// output does not depend on the eigensolver's internal choices.
pub fn natural_occupations(rdm: &OneRdm) -> Result<(Spectrum, DMatrix<Complex64>)> {
    let (mut values, vectors) = linalg::hermitian_eigen(&rdm.matrix)?;
    if let Some(&min) = values.last() {
        if min < -SPECTRUM_TOL {
            return Err(Error::Precondition(format!(
                "1-RDM is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
    }
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    let spectrum = Spectrum::new(values, rdm.particles)?;
    Ok((spectrum, vectors.map(|z| z.conj())))
}

/// Sum of the `k` largest occupations.
pub fn ky_fan_sum(spectrum: &Spectrum, k: usize) -> Result<f64> {
    if k > spectrum.len() {
        return Err(Error::arg(format!(
            "k = {k} exceeds the spectrum length {}",
            spectrum.len()
        )));
    }
    Ok(spectrum.values[..k].iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: usize, d: usize) -> Setting {
        Setting::new(n, d).unwrap()
    }

    #[test]
    fn ladder_signs() {
        let set = s(3, 6);
        let det = SlaterDeterminant::from_orbitals(&[1, 2, 3], set).unwrap();
        let a = LadderMode::Annihilate;
        let (sg, d1) = det.apply_ladder(1, a, 6).unwrap().unwrap();
        assert_eq!((sg, d1.orbitals()), (1, alloc::vec![2, 3]));
        let (sg, d3) = det.apply_ladder(3, a, 6).unwrap().unwrap();
        assert_eq!((sg, d3.orbitals()), (1, alloc::vec![1, 2]));
        let (sg, _) = det.apply_ladder(2, a, 6).unwrap().unwrap();
        assert_eq!(sg, -1);
        assert!(det.apply_ladder(4, a, 6).unwrap().is_none());
        assert!(det.apply_ladder(2, LadderMode::Create, 6).unwrap().is_none());
        assert!(det.apply_ladder(7, a, 6).is_err());
        assert!(det.apply_ladder(0, a, 6).is_err());
    }

    #[test]
    fn enumerates_all_determinants() {
        assert_eq!(s(3, 6).determinants().len(), 20);
        assert_eq!(s(0, 4).determinants().len(), 1);
        assert_eq!(s(4, 4).determinants().len(), 1);
        assert_eq!(s(5, 10).dimension(), 252);
        let dets = s(2, 5).determinants();
        assert_eq!(dets.len(), 10);
        assert!(dets.windows(2).all(|w| w[0] < w[1]));
        assert!(dets.iter().all(|d| d.count() == 2 && d.mask() < 32));
    }

    #[test]
    fn single_determinant_rdm() {
        let set = s(3, 6);
        let st = FermionState::from_real_terms(set, &[(&[1, 2, 3], 1.0)]).unwrap();
        let rho = one_rdm(&st);
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j && i < 3 { 1.0 } else { 0.0 };
                assert!((rho.matrix()[(i, j)].re - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_states() {
        let set = s(2, 4);
        assert!(FermionState::from_real_terms(set, &[(&[1, 2], 0.5)]).is_err());
        assert!(FermionState::from_real_terms(set, &[(&[1, 2, 3], 1.0)]).is_err());
        let d = SlaterDeterminant::from_orbitals(&[1, 2], set).unwrap();
        let one = Complex64::new(0.5f64.sqrt(), 0.0);
        assert!(FermionState::new(set, [(d, one), (d, one)]).is_err());
        let st = FermionState::normalized(set, [(d, Complex64::new(3.0, 4.0))]).unwrap();
        assert!((st.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectrum_validation() {
        assert!(Spectrum::new(alloc::vec![0.5, 0.3, 0.2], 1).is_ok());
        assert!(Spectrum::new(alloc::vec![0.3, 0.5, 0.2], 1).is_err());
        assert!(Spectrum::new(alloc::vec![0.5, 0.3, 0.1], 1).is_err());
        assert!(Spectrum::new(alloc::vec![1.2, -0.2], 1).is_err());
    }

    #[test]
    fn ky_fan_edges() {
        let sp = Spectrum::new(alloc::vec![0.5, 0.3, 0.2], 1).unwrap();
        assert!((ky_fan_sum(&sp, 2).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(ky_fan_sum(&sp, 0).unwrap(), 0.0);
        assert!((ky_fan_sum(&sp, 3).unwrap() - 1.0).abs() < 1e-15);
        assert!(ky_fan_sum(&sp, 4).is_err());
    }

    #[test]
    fn two_by_two_occupations() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.5]);
        let rdm = OneRdm::from_real(m, 1).unwrap();
        let (sp, v) = natural_occupations(&rdm).unwrap();
        assert!((sp.values()[0] - 0.6).abs() < 1e-14);
        assert!((sp.values()[1] - 0.4).abs() < 1e-14);
        // canonical phase: largest component real and positive
        assert!(v[(0, 0)].re > 0.0 && v[(0, 0)].im.abs() < 1e-15);
    }
}
