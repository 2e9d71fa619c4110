//! Truncated pinning analysis, the selection rule and the structural
//! stability bounds near the Hartree-Fock point and in the `(3,6)` setting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::constraints::{self, AffineConstraint, ConstraintKind, Measure};
use crate::error::{Error, Result};
use crate::fock::{self, FermionState, Setting, SlaterDeterminant, Spectrum};

/// NONs within this distance of 1 or 0 are removed as exact in step 1.
pub const EXACT_TOL: f64 = 1e-12;
/// Default verdict threshold on the constraint proximity.
pub const DEFAULT_QUASI_THRESHOLD: f64 = 1e-3;
/// Normalization slack of a truncated spectrum on top of the discarded weight.
pub const TRUNCATION_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TruncationPolicy {
    /// Discard as many NONs as possible with truncation error at most the
    /// threshold, landing on a supported setting with inequalities.
    Threshold(f64),
    /// Discard exactly `r` leading and `s` trailing NONs (or more, when step
    /// one finds more exact ones).
    Explicit { r: usize, s: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationReport {
    pub original: Setting,
    pub r: usize,
    pub s: usize,
    /// Largest deviation of a discarded NON from its pinned value; NONs
    /// removed as exact count as zero.
    pub epsilon: f64,
    pub truncated_setting: Setting,
    /// Kept NONs without renormalization.
    pub truncated_values: Vec<f64>,
    /// Number of NONs removed as exact 1s and 0s respectively.
    pub exact_ones: usize,
    pub exact_zeros: usize,
}

impl TruncationReport {
    /// The kept NONs validated for the truncated setting. Normalization is
    /// checked to the discarded weight plus [`TRUNCATION_NORM_TOL`].
    pub fn truncated_spectrum(&self) -> Result<Spectrum> {
        let tol = TRUNCATION_NORM_TOL + self.discarded_weight();
        Spectrum::with_tolerance(self.truncated_values.clone(), self.truncated_setting.particles(), tol)
    }

    fn discarded_weight(&self) -> f64 {
        // bounds the missing weight of the leading NONs plus the weight of
        // the trailing ones
        (self.r + self.s) as f64 * (self.epsilon + EXACT_TOL)
    }
}

fn exact_counts(values: &[f64], n: usize) -> (usize, usize) {
    let ones = values
        .iter()
        .take(n)
        .take_while(|&&v| v >= 1.0 - EXACT_TOL)
        .count();
    let d = values.len();
    let zeros = values
        .iter()
        .rev()
        .take(d - n)
        .take_while(|&&v| v <= EXACT_TOL)
        .count();
    (ones, zeros)
}

fn truncation_error(values: &[f64], r: usize, s: usize, exact: (usize, usize)) -> f64 {
    let d = values.len();
    let mut eps = 0.0f64;
    if r > exact.0 {
        eps = eps.max(1.0 - values[r - 1]);
    }
    if s > exact.1 {
        eps = eps.max(values[d - s]);
    }
    eps.max(0.0)
}

fn build_report(spectrum: &Spectrum, r: usize, s: usize, exact: (usize, usize)) -> TruncationReport {
    let values = spectrum.values();
    let d = values.len();
    let n = spectrum.particles();
    TruncationReport {
        original: spectrum.setting(),
        r,
        s,
        epsilon: truncation_error(values, r, s, exact),
        truncated_setting: Setting::unchecked(n - r, d - r - s),
        truncated_values: values[r..d - s].to_vec(),
        exact_ones: exact.0,
        exact_zeros: exact.1,
    }
}

fn has_inequalities(setting: Setting) -> bool {
    constraints::catalog(setting)
        .map(|c| c.has_inequalities())
        .unwrap_or(false)
}

/// All supported truncations with inequality constraints, ordered by
/// truncation error.
pub fn achievable_truncations(spectrum: &Spectrum) -> Vec<(Setting, f64, usize, usize)> {
    let values = spectrum.values();
    let (n, d) = (spectrum.particles(), values.len());
    let exact = exact_counts(values, n);
    let mut out = Vec::new();
    for r in exact.0..=n {
        for s in exact.1..=(d - n) {
            let t = Setting::unchecked(n - r, d - r - s);
            if constraints::is_supported(t) && has_inequalities(t) {
                out.push((t, truncation_error(values, r, s, exact), r, s));
            }
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then((b.2 + b.3).cmp(&(a.2 + a.3))));
    out
}

/// Truncates a spectrum to a supported setting.
///
/// Step one always removes leading exact 1s and trailing exact 0s. If the
/// remaining setting has a catalog, that is the result. Otherwise, for a
/// threshold policy, the supported setting with inequalities that discards
/// the most NONs with truncation error within the threshold is chosen (ties
/// go to the smaller error).
pub fn truncate(spectrum: &Spectrum, policy: TruncationPolicy) -> Result<TruncationReport> {
    let values = spectrum.values();
    let (n, d) = (spectrum.particles(), values.len());
    let exact = exact_counts(values, n);
    match policy {
        TruncationPolicy::Explicit { r, s } => {
            if r > n || s > d - n {
                return Err(Error::arg(format!(
                    "cannot discard r = {r}, s = {s} from {}",
                    spectrum.setting()
                )));
            }
            let (r, s) = (r.max(exact.0), s.max(exact.1));
            let report = build_report(spectrum, r, s, exact);
            if !constraints::is_supported(report.truncated_setting) {
                return Err(Error::UnsupportedSetting {
                    setting: report.truncated_setting,
                    nearest: constraints::nearest_supported(report.truncated_setting),
                });
            }
            Ok(report)
        }
        TruncationPolicy::Threshold(threshold) => {
            if !(threshold >= 0.0) {
                return Err(Error::arg("truncation threshold must be non-negative"));
            }
            let base = build_report(spectrum, exact.0, exact.1, exact);
            if constraints::is_supported(base.truncated_setting) {
                return Ok(base);
            }
            let options = achievable_truncations(spectrum);
            let best = options
                .iter()
                .filter(|o| o.1 <= threshold)
                .min_by(|a, b| (b.2 + b.3).cmp(&(a.2 + a.3)).then(a.1.total_cmp(&b.1)));
            match best {
                Some(&(_, _, r, s)) => Ok(build_report(spectrum, r, s, exact)),
                None => Err(Error::UnsupportedTruncation {
                    threshold,
                    achievable: options.iter().map(|o| (o.0, o.1)).collect(),
                }),
            }
        }
    }
}

/// Like [`truncate`] with a threshold, but falls back to the supported
/// truncation of smallest error when nothing lies within the threshold.
/// The flag reports whether the threshold was met.
pub fn truncate_best_effort(spectrum: &Spectrum, threshold: f64) -> Result<(TruncationReport, bool)> {
    match truncate(spectrum, TruncationPolicy::Threshold(threshold)) {
        Ok(r) => Ok((r, true)),
        Err(Error::UnsupportedTruncation { .. }) => {
            let values = spectrum.values();
            let exact = exact_counts(values, spectrum.particles());
            let options = achievable_truncations(spectrum);
            let (_, _, r, s) = *options.first().ok_or_else(|| Error::UnsupportedSetting {
                setting: spectrum.setting(),
                nearest: None,
            })?;
            Ok((build_report(spectrum, r, s, exact), false))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pinned,
    QuasiPinned,
    Unpinned,
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Verdict::Pinned => "pinned",
            Verdict::QuasiPinned => "quasi-pinned",
            Verdict::Unpinned => "unpinned",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub policy: TruncationPolicy,
    pub measure: Measure,
    /// Proximity below which a spectrum counts as quasi-pinned.
    pub quasi_threshold: f64,
    /// Proximity up to which a spectrum with `ε = 0` counts as pinned.
    pub pinned_tolerance: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            policy: TruncationPolicy::Threshold(1e-8),
            measure: Measure::D,
            quasi_threshold: DEFAULT_QUASI_THRESHOLD,
            pinned_tolerance: EXACT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintValue {
    pub label: String,
    pub kind: ConstraintKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinValue {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinningReport {
    /// Setting whose catalog was evaluated.
    pub setting: Setting,
    pub measure: Measure,
    pub epsilon: f64,
    pub constraints: Vec<ConstraintValue>,
    /// Minimum of the measure over the inequalities.
    pub min: Option<MinValue>,
    pub verdict: Verdict,
    /// `min ± C ε` with `C = Σ|κi|` of the minimizing constraint.
    pub bound: Option<(f64, f64)>,
    /// Smallest `|D|` over the inequalities; the verdict is based on it.
    pub proximity: Option<f64>,
    pub truncation: TruncationReport,
}

/// Truncates, evaluates the catalog of the resulting setting and classifies.
///
/// When the truncated setting carries no inequalities but nothing was cut
/// with nonzero error, the original setting's catalog is used if it has
/// inequalities, so an exactly pinned vertex is still reported against its
/// own constraints.
pub fn analyze(spectrum: &Spectrum, config: &AnalysisConfig) -> Result<PinningReport> {
    let truncation = truncate(spectrum, config.policy)?;
    let eps = truncation.epsilon;
    let (setting, values) = if !has_inequalities(truncation.truncated_setting)
        && eps == 0.0
        && has_inequalities(spectrum.setting())
    {
        (spectrum.setting(), spectrum.values().to_vec())
    } else {
        truncation.truncated_spectrum()?;
        (truncation.truncated_setting, truncation.truncated_values.clone())
    };
    let cat = constraints::catalog(setting)?;

    let mut list = Vec::with_capacity(cat.constraints.len());
    let mut best: Option<(f64, &AffineConstraint)> = None;
    let mut proximity: Option<f64> = None;
    let mut eq_residual = 0.0f64;
    for c in &cat.constraints {
        let v = c.measure_values(&values, config.measure)?;
        list.push(ConstraintValue {
            label: c.label.clone(),
            kind: c.kind,
            value: v,
        });
        match c.kind {
            ConstraintKind::Inequality => {
                if best.map_or(true, |(b, _)| v < b) {
                    best = Some((v, c));
                }
                let p = v.abs();
                proximity = Some(proximity.map_or(p, |q: f64| q.min(p)));
            }
            ConstraintKind::Equality => eq_residual = eq_residual.max(v.abs()),
        }
    }

    let verdict = match proximity {
        Some(p) if p <= config.pinned_tolerance && eps == 0.0 => Verdict::Pinned,
        Some(p) if p < config.quasi_threshold => Verdict::QuasiPinned,
        Some(_) => Verdict::Unpinned,
        None if eps == 0.0 && eq_residual <= config.pinned_tolerance => Verdict::Pinned,
        None => Verdict::Unpinned,
    };
    let min = best.map(|(v, c)| MinValue {
        label: c.label.clone(),
        value: v,
    });
    let bound = best.map(|(v, c)| {
        let w = c.norm_l1() * eps;
        (v - w, v + w)
    });
    Ok(PinningReport {
        setting,
        measure: config.measure,
        epsilon: eps,
        constraints: list,
        min,
        verdict,
        bound,
        proximity,
        truncation,
    })
}

/// Determinants on which every listed constraint operator vanishes.
pub fn selection_zero_space(saturated: &[AffineConstraint], setting: Setting) -> Result<Vec<SlaterDeterminant>> {
    for c in saturated {
        if c.dimension() != setting.orbitals() {
            return Err(Error::arg(format!(
                "constraint {} does not belong to {setting}",
                c.label
            )));
        }
    }
    Ok(setting
        .determinants()
        .into_iter()
        .filter(|&det| saturated.iter().all(|c| c.on_determinant(det) == 0))
        .collect())
}

/// `Σ |c_I|^2` over the listed determinants.
pub fn projection_weight(state: &FermionState, dets: &[SlaterDeterminant]) -> f64 {
    dets.iter().map(|&d| state.amplitude(d).norm_sqr()).sum()
}

/// Amplitudes of `state` in the determinant basis built from the columns of
/// `orbitals`, restricted to the requested determinants.
pub fn amplitudes_in_basis(
    state: &FermionState,
    orbitals: &DMatrix<Complex64>,
    targets: &[SlaterDeterminant],
) -> Vec<Complex64> {
    targets
        .iter()
        .map(|t| {
            let cols = t.orbitals();
            let mut acc = Complex64::new(0.0, 0.0);
            for (det, c) in state.amplitudes() {
                let rows = det.orbitals();
                let sub = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
                    orbitals[(rows[i] - 1, cols[j] - 1)]
                });
                acc += sub.determinant().conj() * c;
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureCheck {
    Hf,
    BorlandDennis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub check: StructureCheck,
    /// `N - Σ_{i≤N} λi` for the HF check, `3 - λ1 - λ2 - λ3` for `(3,6)`.
    pub delta: f64,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    /// `D^{(3,6)}` for the `(3,6)` check.
    pub saturation: Option<f64>,
    pub holds: bool,
}

const BOUND_TOL: f64 = 1e-10;

/// Checks the structural sandwich bounds on a state.
///
/// `Hf`: `1 - δ ≤ |<Φ|Ψ>|^2 ≤ 1 - δ/N` with `Φ` the Slater determinant of
/// the `N` leading natural orbitals. `BorlandDennis`: `1 - χ D ≤ ||PΨ||^2 ≤
/// 1 - D/2` with `χ = (1+2δ)/(1-4δ)` and `P` the projector onto the zero
/// space of the four `(3,6)` constraint operators in the natural-orbital
/// basis; requires `δ ≤ 1/4`.
pub fn structure_bounds(state: &FermionState, check: StructureCheck) -> Result<BoundReport> {
    let setting = state.setting();
    let rdm = fock::one_rdm(state);
    let (spectrum, orbitals) = fock::natural_occupations(&rdm)?;
    let lam = spectrum.values();
    let n = setting.particles();
    match check {
        StructureCheck::Hf => {
            let delta = n as f64 - lam[..n].iter().sum::<f64>();
            let hf = SlaterDeterminant::from_orbitals(&(1..=n).collect::<Vec<_>>(), setting)?;
            let overlap = amplitudes_in_basis(state, &orbitals, &[hf])[0].norm_sqr();
            let (lower, upper) = (1.0 - delta, 1.0 - delta / n.max(1) as f64);
            Ok(BoundReport {
                check,
                delta,
                lower,
                value: overlap,
                upper,
                saturation: None,
                holds: lower - BOUND_TOL <= overlap && overlap <= upper + BOUND_TOL,
            })
        }
        StructureCheck::BorlandDennis => {
            let bd = Setting::new(3, 6)?;
            if setting != bd {
                return Err(Error::Precondition(format!(
                    "the (3,6) bound needs a state in (3,6), got {setting}"
                )));
            }
            let delta = 3.0 - lam[0] - lam[1] - lam[2];
            if delta > 0.25 {
                return Err(Error::Precondition(format!(
                    "3 - λ1 - λ2 - λ3 = {delta} exceeds 1/4"
                )));
            }
            let cat = constraints::catalog(bd)?;
            let all: Vec<AffineConstraint> = cat.constraints.clone();
            let zero = selection_zero_space(&all, bd)?;
            let weight: f64 = amplitudes_in_basis(state, &orbitals, &zero)
                .iter()
                .map(|a| a.norm_sqr())
                .sum();
            let d = cat
                .get("D^{(3,6)}")
                .expect("catalog has D^{(3,6)}")
                .evaluate_values(lam)?;
            let chi = (1.0 + 2.0 * delta) / (1.0 - 4.0 * delta);
            let (lower, upper) = (1.0 - chi * d, 1.0 - d / 2.0);
            Ok(BoundReport {
                check,
                delta,
                lower,
                value: weight,
                upper,
                saturation: Some(d),
                holds: lower - BOUND_TOL <= weight && weight <= upper + BOUND_TOL,
            })
        }
    }
}

/// The `(3,6)` state `α|1,3,5> + sqrt(α² + γ² - δ)|1,2,4> + γ|2,3,6>`,
/// rescaled to unit norm (the unscaled form has norm `2α² + 2γ² - δ`).
pub fn counterexample_state(alpha: f64, gamma: f64, delta: f64) -> Result<FermionState> {
    let mid = alpha * alpha + gamma * gamma - delta;
    if mid < 0.0 {
        return Err(Error::arg("α² + γ² - δ must be non-negative"));
    }
    let bd = Setting::new(3, 6)?;
    let term = |o: &[usize], c: f64| -> Result<(SlaterDeterminant, Complex64)> {
        Ok((SlaterDeterminant::from_orbitals(o, bd)?, Complex64::new(c, 0.0)))
    };
    FermionState::normalized(
        bd,
        [
            term(&[1, 3, 5], alpha)?,
            term(&[1, 2, 4], libm::sqrt(mid))?,
            term(&[2, 3, 6], gamma)?,
        ],
    )
}
