//! The periodic one-band Hubbard chain with hopping `t = 1`.
//!
//! Everything is expressed in Bloch spin orbitals: bit `2k + σ` of a
//! determinant (`σ = 0` up, `σ = 1` down) is the plane wave of wavenumber
//! `2πk/d`. The Hamiltonian is
//! `Σ ε_k n_kσ + (u/d) Σ c†_{k+q↑} c†_{p−q↓} c_{p↓} c_{k↑}` with
//! `ε_k = −2cos(2πk/d)`, and it is block diagonal in the total wavenumber
//! `K` and spin projection `M`. Inside a block the 1-RDM of an eigenstate
//! is diagonal, so its NONs are the Bloch occupations.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::constraints;
use crate::error::{Error, Result};
use crate::fock::{self, FermionState, Setting, SlaterDeterminant, Spectrum};
use crate::linalg;
use crate::pinning::{self, AnalysisConfig, PinningReport, TruncationPolicy, Verdict};

pub const MIN_SITES: usize = 3;
pub const MAX_SITES: usize = 5;
pub const MIN_ELECTRONS: usize = 3;
pub const MAX_ELECTRONS: usize = 5;
/// Level spacing below which a sector ground state counts as degenerate.
pub const CROSSING_GAP: f64 = 1e-8;
/// Constraint proximity below which an ED ground state counts as pinned.
pub const PIN_TOL: f64 = 1e-9;
/// Resolution of [`find_transition`] in `u`.
pub const TRANSITION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSetting {
    pub sites: usize,
    pub electrons: usize,
    pub u: f64,
}

impl LatticeSetting {
    pub fn new(sites: usize, electrons: usize, u: f64) -> Result<Self> {
        if !(MIN_SITES..=MAX_SITES).contains(&sites) || !(MIN_ELECTRONS..=MAX_ELECTRONS).contains(&electrons) {
            return Err(Error::Precondition(format!(
                "lattices of {MIN_SITES}..={MAX_SITES} sites with {MIN_ELECTRONS}..={MAX_ELECTRONS} electrons are supported, got {sites} sites and {electrons} electrons"
            )));
        }
        if electrons > 2 * sites {
            return Err(Error::arg(format!("{electrons} electrons do not fit on {sites} sites")));
        }
        if !u.is_finite() {
            return Err(Error::arg("on-site coupling must be finite"));
        }
        Ok(Self { sites, electrons, u })
    }

    pub fn orbitals(&self) -> usize {
        2 * self.sites
    }

    pub fn fock(&self) -> Setting {
        Setting::new(self.electrons, self.orbitals()).expect("validated sizes")
    }

    pub fn with_u(&self, u: f64) -> Self {
        Self { u, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

/// 0-based bit of the Bloch orbital `(k, σ)`.
pub fn bloch_orbital(k: usize, spin: Spin) -> usize {
    2 * k
        + match spin {
            Spin::Up => 0,
            Spin::Down => 1,
        }
}

pub fn band_energy(k: usize, sites: usize) -> f64 {
    -2.0 * libm::cos(2.0 * core::f64::consts::PI * k as f64 / sites as f64)
}

/// Total wavenumber `Σk mod d`.
pub fn momentum(det: SlaterDeterminant, sites: usize) -> usize {
    det.orbitals().iter().map(|&o| (o - 1) / 2).sum::<usize>() % sites
}

/// `2M = n↑ − n↓`.
pub fn two_m(det: SlaterDeterminant) -> i32 {
    det.orbitals()
        .iter()
        .map(|&o| if (o - 1) % 2 == 0 { 1 } else { -1 })
        .sum()
}

fn ladder_sign(mask: u64, bit: usize) -> f64 {
    if (mask & ((1u64 << bit) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn annihilate(mask: u64, bit: usize) -> Option<(f64, u64)> {
    (mask & (1u64 << bit) != 0).then(|| (ladder_sign(mask, bit), mask ^ (1u64 << bit)))
}

fn create(mask: u64, bit: usize) -> Option<(f64, u64)> {
    (mask & (1u64 << bit) == 0).then(|| (ladder_sign(mask, bit), mask | (1u64 << bit)))
}

/// `H|det⟩` as a list of images with coefficients; images may repeat.
fn apply_hamiltonian(mask: u64, sites: usize, u: f64) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let kinetic: f64 = (0..2 * sites)
        .filter(|b| mask & (1u64 << b) != 0)
        .map(|b| band_energy(b / 2, sites))
        .sum();
    out.push((mask, kinetic));
    let scale = u / sites as f64;
    for k in 0..sites {
        let Some((s1, m1)) = annihilate(mask, bloch_orbital(k, Spin::Up)) else {
            continue;
        };
        for p in 0..sites {
            let Some((s2, m2)) = annihilate(m1, bloch_orbital(p, Spin::Down)) else {
                continue;
            };
            for q in 0..sites {
                let kq = (k + q) % sites;
                let pq = (p + sites - q) % sites;
                let Some((s3, m3)) = create(m2, bloch_orbital(pq, Spin::Down)) else {
                    continue;
                };
                let Some((s4, m4)) = create(m3, bloch_orbital(kq, Spin::Up)) else {
                    continue;
                };
                out.push((m4, scale * s1 * s2 * s3 * s4));
            }
        }
    }
    out
}

/// One `(K, M)` block of the Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryBlock {
    pub k: usize,
    pub two_m: i32,
    /// Bloch determinants, ascending by mask.
    pub basis: Vec<SlaterDeterminant>,
    pub matrix: DMatrix<f64>,
}

fn block_basis(setting: &LatticeSetting, k: usize, tm: i32) -> Vec<SlaterDeterminant> {
    setting
        .fock()
        .determinants()
        .into_iter()
        .filter(|&d| momentum(d, setting.sites) == k && two_m(d) == tm)
        .collect()
}

fn assemble(setting: &LatticeSetting, k: usize, tm: i32, basis: Vec<SlaterDeterminant>) -> SymmetryBlock {
    let n = basis.len();
    let mut matrix = DMatrix::zeros(n, n);
    for (j, d) in basis.iter().enumerate() {
        for (image, c) in apply_hamiltonian(d.mask(), setting.sites, setting.u) {
            let i = basis
                .binary_search(&SlaterDeterminant::from_mask(image))
                .expect("H conserves K and M");
            matrix[(i, j)] += c;
        }
    }
    SymmetryBlock {
        k,
        two_m: tm,
        basis,
        matrix,
    }
}

/// All nonempty `(K, M)` blocks, ordered by `2M` then `K`.
pub fn build_blocks(setting: &LatticeSetting) -> Vec<SymmetryBlock> {
    let n = setting.electrons as i32;
    let mut out = Vec::new();
    for tm in (-n..=n).step_by(2) {
        for k in 0..setting.sites {
            let basis = block_basis(setting, k, tm);
            if !basis.is_empty() {
                out.push(assemble(setting, k, tm, basis));
            }
        }
    }
    out
}

pub fn block(setting: &LatticeSetting, k: usize, two_m: i32) -> Result<SymmetryBlock> {
    if k >= setting.sites {
        return Err(Error::arg(format!("wavenumber {k} outside 0..{}", setting.sites)));
    }
    let basis = block_basis(setting, k, two_m);
    if basis.is_empty() {
        return Err(Error::arg(format!("sector K = {k}, 2M = {two_m} is empty")));
    }
    Ok(assemble(setting, k, two_m, basis))
}

/// Dimension of the `(S, M, K)` subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpinSector {
    pub two_s: i32,
    pub two_m: i32,
    pub k: usize,
    pub dim: usize,
}

/// The `(S, M, K)` subspaces with `M ≥ 0`, ordered by `S` descending, then
/// `M` descending, then `K`. Spin multiplicities follow from the `(K, M)`
/// dimensions: the number of spin-`S` multiplets is
/// `dim(K, S) − dim(K, S+1)`.
pub fn sector_layout(sites: usize, electrons: usize) -> Result<Vec<SpinSector>> {
    let s = LatticeSetting::new(sites, electrons, 0.0)?;
    let dim = |k: usize, tm: i32| block_basis(&s, k, tm).len();
    let n = electrons as i32;
    let mut out = Vec::new();
    for two_s in (0..=n).rev().filter(|t| (n - t) % 2 == 0) {
        for two_m in (0..=two_s).rev().step_by(2) {
            for k in 0..sites {
                let count = dim(k, two_s) - dim(k, two_s + 2);
                if count > 0 {
                    out.push(SpinSector { two_s, two_m, k, dim: count });
                }
            }
        }
    }
    Ok(out)
}

/// Lowest eigenstate of one `(K, M)` block.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    pub k: usize,
    pub two_m: i32,
    pub energy: f64,
    /// Distance to the next level of the block, infinite for 1×1 blocks.
    pub gap: f64,
    pub state: FermionState,
    /// Bloch occupations, indexed by bit.
    pub occupations: Vec<f64>,
}

impl SectorState {
    pub fn degenerate(&self) -> bool {
        self.gap < CROSSING_GAP
    }

    /// NONs, descending.
    pub fn nons(&self) -> Vec<f64> {
        let mut v = self.occupations.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

pub fn sector_ground_state(setting: &LatticeSetting, k: usize, two_m: i32) -> Result<SectorState> {
    let b = block(setting, k, two_m)?;
    let (values, vectors) = linalg::symmetric_eigen(&b.matrix)?;
    let n = values.len();
    let energy = values[n - 1];
    let gap = if n > 1 { values[n - 2] - energy } else { f64::INFINITY };
    let col = vectors.column(n - 1);
    let state = FermionState::normalized(
        setting.fock(),
        b.basis.iter().zip(col.iter()).map(|(&d, &c)| (d, Complex64::new(c, 0.0))),
    )?;
    let occupations = state.occupation_sums();
    Ok(SectorState {
        k,
        two_m,
        energy,
        gap,
        state,
        occupations,
    })
}

/// Which symmetry-adapted ground state to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectorChoice {
    Fixed { k: usize, two_m: i32 },
    /// Lowest level over all `(K, M ≥ 0)`; ties go to the smaller `M`,
    /// then the smaller `K`.
    Lowest,
}

impl SectorChoice {
    /// `K = 1` with the smallest `M ≥ 0`.
    pub fn default_for(electrons: usize) -> Self {
        SectorChoice::Fixed {
            k: 1,
            two_m: (electrons % 2) as i32,
        }
    }
}

pub fn ground_state(setting: &LatticeSetting, choice: SectorChoice) -> Result<SectorState> {
    match choice {
        SectorChoice::Fixed { k, two_m } => sector_ground_state(setting, k, two_m),
        SectorChoice::Lowest => {
            let n = setting.electrons as i32;
            let mut best: Option<SectorState> = None;
            for tm in ((n % 2)..=n).step_by(2) {
                for k in 0..setting.sites {
                    if block_basis(setting, k, tm).is_empty() {
                        continue;
                    }
                    let s = sector_ground_state(setting, k, tm)?;
                    if best.as_ref().map_or(true, |b| s.energy < b.energy - CROSSING_GAP) {
                        best = Some(s);
                    }
                }
            }
            best.ok_or_else(|| Error::arg("no nonempty sector"))
        }
    }
}

/// Pinning analysis of Hubbard NONs. Settings without a catalog are
/// truncated with the smallest achievable error.
pub fn analyze_nons(nons: &[f64], electrons: usize) -> Result<PinningReport> {
    let mut values = nons.to_vec();
    values.sort_by(|a, b| b.total_cmp(a));
    let spectrum = Spectrum::new(values, electrons)?;
    let policy = if constraints::is_supported(spectrum.setting()) {
        TruncationPolicy::Threshold(0.0)
    } else {
        let (_, _, r, s) = *pinning::achievable_truncations(&spectrum)
            .first()
            .ok_or_else(|| Error::UnsupportedSetting {
                setting: spectrum.setting(),
                nearest: None,
            })?;
        TruncationPolicy::Explicit { r, s }
    };
    let config = AnalysisConfig {
        policy,
        pinned_tolerance: PIN_TOL,
        ..AnalysisConfig::default()
    };
    pinning::analyze(&spectrum, &config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub u: f64,
    pub k: usize,
    pub two_m: i32,
    pub energy: f64,
    pub gap: f64,
    pub degenerate: bool,
    pub nons: Vec<f64>,
    pub min_label: Option<String>,
    pub min_distance: Option<f64>,
    pub pinned: bool,
    pub report: PinningReport,
}

pub fn scan_point(setting: &LatticeSetting, choice: SectorChoice) -> Result<ScanPoint> {
    let g = ground_state(setting, choice)?;
    let nons = g.nons();
    let report = analyze_nons(&nons, setting.electrons)?;
    Ok(ScanPoint {
        u: setting.u,
        k: g.k,
        two_m: g.two_m,
        energy: g.energy,
        gap: g.gap,
        degenerate: g.degenerate(),
        nons,
        min_label: report.min.as_ref().map(|m| m.label.clone()),
        min_distance: report.min.as_ref().map(|m| m.value),
        pinned: report.verdict == Verdict::Pinned,
        report,
    })
}

/// Ground-state pinning along a grid of couplings.
pub fn ground_scan(sites: usize, electrons: usize, choice: SectorChoice, u_grid: &[f64]) -> Result<Vec<ScanPoint>> {
    let base = LatticeSetting::new(sites, electrons, 0.0)?;
    u_grid
        .iter()
        .map(|&u| {
            if !u.is_finite() {
                return Err(Error::arg("on-site coupling must be finite"));
            }
            scan_point(&base.with_u(u), choice)
        })
        .collect()
}

/// `P_u(E) = E³ − 2uE² + (u² − 9)E + 6u`, the characteristic polynomial
/// of the `K = 1, M = ½` block of three electrons on three sites.
pub fn three_site_characteristic(u: f64, e: f64) -> f64 {
    ((e - 2.0 * u) * e + (u * u - 9.0)) * e + 6.0 * u
}

/// Roots of [`three_site_characteristic`], `[E₁, E₂, E₃]` with
/// `E₁ < E₃ < E₂`.
pub fn three_site_energies(u: f64) -> [f64; 3] {
    let q = u * u / 9.0 + 3.0;
    let r = u * u * u / 27.0;
    let theta = libm::acos((r / (q * libm::sqrt(q))).clamp(-1.0, 1.0));
    let two_pi = 2.0 * core::f64::consts::PI;
    let root = |j: f64| {
        let mut e = 2.0 * u / 3.0 - 2.0 * libm::sqrt(q) * libm::cos((theta + two_pi * j) / 3.0);
        for _ in 0..2 {
            let slope = (3.0 * e - 4.0 * u) * e + u * u - 9.0;
            if slope != 0.0 {
                e -= three_site_characteristic(u, e) / slope;
            }
        }
        e
    };
    [root(0.0), root(1.0), root(2.0)]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeSiteSolution {
    pub u: f64,
    pub energies: [f64; 3],
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Bloch occupations `(k0↑, k0↓, k1↑, k1↓, k2↑, k2↓)`.
    pub occupations: [f64; 6],
    /// NONs, descending.
    pub nons: Vec<f64>,
    /// `D^{(3,6)}` by the two-case rule.
    pub d36: f64,
}

/// Ground state of three electrons on three sites in the `K = 1, M = ½`
/// sector, as amplitudes on `|k0↑ k0↓ k1↑⟩`, `|k1↑ k1↓ k2↑⟩`,
/// `|k0↑ k2↑ k2↓⟩`.
pub fn solve_three_site(u: f64) -> ThreeSiteSolution {
    let energies = three_site_energies(u);
    let e = energies[0];
    let w = u - e;
    // eigenvector of u·1 + diag(−3, 3, 0) − (u/3)·J
    let v = [(w + 3.0) * w, (w - 3.0) * w, w * w - 9.0];
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
    let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
    let [alpha, beta, gamma] = v.map(|x| sign * x / norm);
    let (a2, b2, g2) = (alpha * alpha, beta * beta, gamma * gamma);
    let occupations = [a2 + g2, a2, a2 + b2, b2, b2 + g2, g2];
    let mut nons = occupations.to_vec();
    nons.sort_by(|x, y| y.total_cmp(x));
    let d36 = if a2 >= b2 + g2 { 0.0 } else { b2 + g2 - a2 };
    ThreeSiteSolution {
        u,
        energies,
        alpha,
        beta,
        gamma,
        occupations,
        nons,
        d36,
    }
}

fn three_site_basis() -> [u64; 3] {
    let bit = |k, s| 1u64 << bloch_orbital(k, s);
    [
        bit(0, Spin::Up) | bit(0, Spin::Down) | bit(1, Spin::Up),
        bit(1, Spin::Up) | bit(1, Spin::Down) | bit(2, Spin::Up),
        bit(0, Spin::Up) | bit(2, Spin::Up) | bit(2, Spin::Down),
    ]
}

/// The analytic ground state as a [`FermionState`] in Bloch determinants,
/// with the basis signs of this module's operator ordering.
pub fn three_site_state(u: f64) -> FermionState {
    let sol = solve_three_site(u);
    let setting = LatticeSetting::new(3, 3, 1.0).expect("valid");
    let basis = three_site_basis();
    let blk = block(&setting, 1, 1).expect("nonempty");
    let idx = |m: u64| {
        blk.basis
            .iter()
            .position(|d| d.mask() == m)
            .expect("determinant in the K = 1 block")
    };
    let (ia, ib, ic) = (idx(basis[0]), idx(basis[1]), idx(basis[2]));
    // off-diagonal entries are −u/3 up to the basis signs
    let sb = -libm::copysign(1.0, blk.matrix[(ia, ib)]);
    let sc = -libm::copysign(1.0, blk.matrix[(ia, ic)]);
    FermionState::normalized(
        setting.fock(),
        [
            (SlaterDeterminant::from_mask(basis[0]), Complex64::new(sol.alpha, 0.0)),
            (SlaterDeterminant::from_mask(basis[1]), Complex64::new(sb * sol.beta, 0.0)),
            (SlaterDeterminant::from_mask(basis[2]), Complex64::new(sc * sol.gamma, 0.0)),
        ],
    )
    .expect("nonzero amplitudes")
}

/// The wavenumber reflection `k → −k` applied to a state.
pub fn reflect(state: &FermionState, sites: usize) -> Result<FermionState> {
    let mut terms = Vec::with_capacity(state.amplitudes().len());
    for (det, &c) in state.amplitudes() {
        // |det⟩ = c†_{o1} ⋯ c†_{oN} |0⟩ with ascending o; create right to left
        let mut mask = 0u64;
        let mut sign = 1.0;
        for &o in det.orbitals().iter().rev() {
            let b = o - 1;
            let k = b / 2;
            let image = 2 * ((sites - k) % sites) + b % 2;
            let (s, m) = create(mask, image).ok_or_else(|| Error::arg("reflection is not injective"))?;
            sign *= s;
            mask = m;
        }
        terms.push((SlaterDeterminant::from_mask(mask), c * sign));
    }
    FermionState::new(state.setting(), terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PinCase {
    /// `m₃ < n₁`, `D = 0`.
    Pinned,
    /// `m₃ > n₁`, `D = 1 − 2n₁`.
    Unpinned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Superposition {
    pub u: f64,
    /// `ρ↑` on `(k0↑, k1↑, k2↑)`.
    pub rho_up: DMatrix<Complex64>,
    /// `ρ↓` on `(k0↓, k1↓, k2↓)`.
    pub rho_down: DMatrix<Complex64>,
    /// Eigenvalues `m₁ ≥ m₂ ≥ m₃` of `ρ↑`.
    pub up: [f64; 3],
    /// Eigenvalues `n₁ ≥ n₂ ≥ n₃` of `ρ↓`.
    pub down: [f64; 3],
    pub nons: Spectrum,
    /// `λ₅ + λ₆ − λ₄`.
    pub d36: f64,
    pub case: PinCase,
    /// `max |m_{4−i} + n_i − 1|`.
    pub pairing_residual: f64,
}

/// `ζ|Ψ₁⟩ + ξ|Ψ₂⟩` with `Ψ₁` the `K = 1` ground state and `Ψ₂` its
/// reflection into `K = −1`.
pub fn superposed_state(u: f64, zeta: Complex64, xi: Complex64) -> Result<Superposition> {
    let norm = zeta.norm_sqr() + xi.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::arg(format!("|zeta|^2 + |xi|^2 = {norm}, expected 1")));
    }
    if !u.is_finite() {
        return Err(Error::arg("on-site coupling must be finite"));
    }
    let psi1 = three_site_state(u);
    let psi2 = reflect(&psi1, 3)?;
    let mut terms: alloc::collections::BTreeMap<SlaterDeterminant, Complex64> = alloc::collections::BTreeMap::new();
    for (d, c) in psi1.amplitudes() {
        *terms.entry(*d).or_default() += zeta * c;
    }
    for (d, c) in psi2.amplitudes() {
        *terms.entry(*d).or_default() += xi * c;
    }
    let psi = FermionState::normalized(psi1.setting(), terms)?;
    let rho = fock::one_rdm(&psi);
    let pick = |spin: usize| DMatrix::from_fn(3, 3, |i, j| rho.matrix()[(2 * i + spin, 2 * j + spin)]);
    let rho_up = pick(0);
    let rho_down = pick(1);
    let (mu, _) = linalg::hermitian_eigen(&rho_up)?;
    let (nd, _) = linalg::hermitian_eigen(&rho_down)?;
    let up = [mu[0], mu[1], mu[2]];
    let down = [nd[0], nd[1], nd[2]];
    let pairing_residual = (0..3)
        .map(|i| (up[2 - i] + down[i] - 1.0).abs())
        .fold(0.0, f64::max);
    let mut all: Vec<f64> = up.iter().chain(down.iter()).map(|v| v.clamp(0.0, 1.0)).collect();
    all.sort_by(|a, b| b.total_cmp(a));
    let d36 = all[4] + all[5] - all[3];
    let nons = Spectrum::new(all, 3)?;
    let case = if up[2] < down[0] { PinCase::Pinned } else { PinCase::Unpinned };
    Ok(Superposition {
        u,
        rho_up,
        rho_down,
        up,
        down,
        nons,
        d36,
        case,
        pairing_residual,
    })
}

fn bisect(mut lo: f64, mut hi: f64, what: &str, f: impl Fn(f64) -> Result<bool>) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::arg(format!("invalid bracket [{lo}, {hi}]")));
    }
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo == fhi {
        return Err(Error::NotFound {
            what: String::from(what),
            lo,
            hi,
        });
    }
    while hi - lo > TRANSITION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid)? == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Coupling at which the default-sector ground state changes between
/// pinned and unpinned inside `bracket`.
///
/// Three electrons on three sites use the analytic sign of
/// `|α|² − |β|² − |γ|²`; other settings bisect on the pinning status of
/// the exact ground state.
pub fn find_transition(sites: usize, electrons: usize, bracket: (f64, f64)) -> Result<f64> {
    let setting = LatticeSetting::new(sites, electrons, 0.0)?;
    let (lo, hi) = bracket;
    if sites == 3 && electrons == 3 {
        return bisect(lo, hi, "|alpha|^2 - |beta|^2 - |gamma|^2", |u| {
            let s = solve_three_site(u);
            Ok(s.alpha * s.alpha - s.beta * s.beta - s.gamma * s.gamma >= 0.0)
        });
    }
    let choice = SectorChoice::default_for(electrons);
    bisect(lo, hi, "pinning status", |u| {
        Ok(scan_point(&setting.with_u(u), choice)?.pinned)
    })
}
