//! Generalized Pauli constraint catalogs and the three distance measures.
//!
//! A constraint is the affine functional `D(λ) = κ0 + Σ κi λi` with integer
//! coefficients. Inequalities require `D ≥ 0`, equalities `D = 0`.
//!
//! The catalogs for `(3,6)`, `(3,7)` and `(3,8)` are embedded as a text
//! resource guarded by a SHA-256 checksum. Two-particle catalogs and the
//! one-particle ones are generated by rule, and every particle-hole dual
//! `(d-N, d)` is derived on request via `λi -> 1 - λ_{d+1-i}`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::{Setting, Spectrum};
use crate::scalar::Field;

/// Largest orbital count with catalog support.
pub const MAX_CATALOG_ORBITALS: usize = 10;

const RESOURCE: &str = include_str!("../data/catalog.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Inequality,
    Equality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// The constraint value itself.
    #[serde(rename = "dD")]
    D,
    /// Value divided by the Euclidean norm of `κ1..κd`.
    #[serde(rename = "d2")]
    L2,
    /// Value divided by the largest `|κi|`.
    #[serde(rename = "d1")]
    L1,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::D => "dD",
            Measure::L2 => "d2",
            Measure::L1 => "d1",
        }
    }
}

impl core::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dD" | "D" | "d" => Ok(Measure::D),
            "d2" => Ok(Measure::L2),
            "d1" => Ok(Measure::L1),
            _ => Err(Error::arg(format!("unknown measure `{s}` (expected dD, d2 or d1)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AffineConstraint {
    pub label: String,
    pub kind: ConstraintKind,
    pub kappa0: i64,
    pub kappas: Vec<i64>,
}

impl AffineConstraint {
    pub fn new(label: impl Into<String>, kind: ConstraintKind, kappa0: i64, kappas: Vec<i64>) -> Result<Self> {
        let label = label.into();
        if kappas.iter().all(|&k| k == 0) {
            return Err(Error::arg(format!("constraint {label} has no nonzero coefficient")));
        }
        Ok(Self {
            label,
            kind,
            kappa0,
            kappas,
        })
    }

    pub fn dimension(&self) -> usize {
        self.kappas.len()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.kappas.len() {
            return Err(Error::arg(format!(
                "constraint {} has {} coefficients, spectrum has {len} entries",
                self.label,
                self.kappas.len()
            )));
        }
        Ok(())
    }

    /// `κ0 + Σ κi λi` on a validated spectrum.
    pub fn evaluate(&self, spectrum: &Spectrum) -> Result<f64> {
        self.evaluate_values(spectrum.values())
    }

    /// `κ0 + Σ κi λi` on raw values; only the length is checked.
    pub fn evaluate_values(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        let mut acc = self.kappa0 as f64;
        for (&k, &l) in self.kappas.iter().zip(values) {
            if k != 0 {
                acc += k as f64 * l;
            }
        }
        Ok(acc)
    }

    /// Evaluation in any [`Field`], e.g. exact series or extended precision.
    pub fn evaluate_generic<T: Field>(&self, values: &[T]) -> Result<T> {
        self.check_len(values.len())?;
        let mut acc = T::from_i64(self.kappa0);
        for (&k, l) in self.kappas.iter().zip(values) {
            if k != 0 {
                acc = acc + T::from_i64(k) * l.clone();
            }
        }
        Ok(acc)
    }

    pub fn norm_l2(&self) -> f64 {
        libm::sqrt(self.kappas.iter().map(|&k| (k * k) as f64).sum())
    }

    pub fn norm_inf(&self) -> f64 {
        self.kappas.iter().map(|k| k.abs()).max().unwrap_or(0) as f64
    }

    /// `Σ |κi|`, the worst-case sensitivity to a unit shift of every entry.
    pub fn norm_l1(&self) -> f64 {
        self.kappas.iter().map(|k| k.abs()).sum::<i64>() as f64
    }

    pub fn measure(&self, spectrum: &Spectrum, which: Measure) -> Result<f64> {
        self.measure_values(spectrum.values(), which)
    }

    pub fn measure_values(&self, values: &[f64], which: Measure) -> Result<f64> {
        let v = self.evaluate_values(values)?;
        Ok(match which {
            Measure::D => v,
            Measure::L2 => v / self.norm_l2(),
            Measure::L1 => v / self.norm_inf(),
        })
    }

    /// Particle-hole dual: the constraint on `λ'i = 1 - λ_{d+1-i}`.
    pub fn dual(&self, label: impl Into<String>) -> Self {
        let sum: i64 = self.kappas.iter().sum();
        Self {
            label: label.into(),
            kind: self.kind,
            kappa0: self.kappa0 + sum,
            kappas: self.kappas.iter().rev().map(|k| -k).collect(),
        }
    }

    /// Eigenvalue of the diagonal operator `κ0 + Σ κk n_k` on a determinant.
    pub fn on_determinant(&self, det: crate::fock::SlaterDeterminant) -> i64 {
        self.kappa0
            + det
                .orbitals()
                .into_iter()
                .map(|i| self.kappas.get(i - 1).copied().unwrap_or(0))
                .sum::<i64>()
    }
}

impl fmt::Display for AffineConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.label, self.kappa0)?;
        for (i, &k) in self.kappas.iter().enumerate() {
            match k {
                0 => {}
                1 => write!(f, " + l{}", i + 1)?,
                -1 => write!(f, " - l{}", i + 1)?,
                k if k > 0 => write!(f, " + {k} l{}", i + 1)?,
                k => write!(f, " - {} l{}", -k, i + 1)?,
            }
        }
        match self.kind {
            ConstraintKind::Inequality => f.write_str(" >= 0"),
            ConstraintKind::Equality => f.write_str(" = 0"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Native,
    DualOf(Setting),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCatalog {
    pub setting: Setting,
    pub constraints: Vec<AffineConstraint>,
    pub provenance: Provenance,
}

/// Outcome of a membership test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub inside: bool,
    /// Most negative inequality value (0 when there are none).
    pub worst_inequality: f64,
    /// Largest `|D|` over the equalities (0 when there are none).
    pub worst_equality: f64,
}

impl ConstraintCatalog {
    pub fn inequalities(&self) -> impl Iterator<Item = &AffineConstraint> {
        self.constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Inequality)
    }

    pub fn equalities(&self) -> impl Iterator<Item = &AffineConstraint> {
        self.constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Equality)
    }

    pub fn has_inequalities(&self) -> bool {
        self.inequalities().next().is_some()
    }

    pub fn get(&self, label: &str) -> Option<&AffineConstraint> {
        self.constraints.iter().find(|c| c.label == label)
    }

    /// Every equality `D = 0` expanded to the pair `D ≥ 0`, `-D ≥ 0`, followed
    /// by the inequalities.
    pub fn as_inequalities(&self) -> Vec<AffineConstraint> {
        let mut out = Vec::new();
        for c in &self.constraints {
            match c.kind {
                ConstraintKind::Inequality => out.push(c.clone()),
                ConstraintKind::Equality => {
                    let mut lo = c.clone();
                    lo.kind = ConstraintKind::Inequality;
                    lo.label = format!("{}+", c.label);
                    let hi = AffineConstraint {
                        label: format!("{}-", c.label),
                        kind: ConstraintKind::Inequality,
                        kappa0: -c.kappa0,
                        kappas: c.kappas.iter().map(|k| -k).collect(),
                    };
                    out.push(lo);
                    out.push(hi);
                }
            }
        }
        out
    }

    pub fn membership(&self, values: &[f64], tol: f64) -> Result<Membership> {
        let mut worst_ineq = 0.0f64;
        let mut worst_eq = 0.0f64;
        for c in &self.constraints {
            let v = c.evaluate_values(values)?;
            match c.kind {
                ConstraintKind::Inequality => worst_ineq = worst_ineq.min(v),
                ConstraintKind::Equality => worst_eq = worst_eq.max(v.abs()),
            }
        }
        Ok(Membership {
            inside: worst_ineq >= -tol && worst_eq <= tol,
            worst_inequality: worst_ineq,
            worst_equality: worst_eq,
        })
    }

    /// Minimum of `which` over the inequalities on raw values, with the
    /// first constraint in catalog order achieving it.
    pub fn min_distance_values(&self, values: &[f64], which: Measure) -> Result<(f64, &AffineConstraint)> {
        let mut best: Option<(f64, &AffineConstraint)> = None;
        for c in self.inequalities() {
            let v = c.measure_values(values, which)?;
            if best.map_or(true, |(b, _)| v < b) {
                best = Some((v, c));
            }
        }
        best.ok_or_else(|| {
            Error::Precondition(format!(
                "catalog {} has no inequality constraints",
                self.setting
            ))
        })
    }
}

/// The embedded catalog text.
pub fn resource_text() -> &'static str {
    RESOURCE
}

/// Parses a catalog resource and verifies its checksum.
///
/// Layout: comment lines starting with `#`, one of which is
/// `# sha256 <hex>` covering every byte after that line; section headers
/// `[N,d]`; constraint lines `label kind kappa0 kappa1 ... kappad` with
/// `kind` either `ineq` or `eq`.
pub fn parse_resource(text: &str) -> Result<BTreeMap<Setting, Vec<AffineConstraint>>> {
    let marker = "# sha256 ";
    let start = text
        .find(marker)
        .ok_or_else(|| Error::arg("catalog resource has no checksum line"))?;
    let line_end = text[start..]
        .find('\n')
        .map(|i| start + i + 1)
        .ok_or_else(|| Error::arg("catalog resource ends after the checksum line"))?;
    let expected = text[start + marker.len()..line_end].trim();
    let body = &text[line_end..];
    let digest = Sha256::digest(body.as_bytes());
    let actual: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    if actual != expected {
        return Err(Error::arg(format!(
            "catalog checksum mismatch: header {expected}, content {actual}"
        )));
    }

    let mut out: BTreeMap<Setting, Vec<AffineConstraint>> = BTreeMap::new();
    let mut current: Option<Setting> = None;
    for (lineno, raw) in body.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| Error::arg(format!("catalog line {}: {msg}", lineno + 1));
        if let Some(inner) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let (n, d) = inner.split_once(',').ok_or_else(|| err("bad section header"))?;
            let n = n.trim().parse().map_err(|_| err("bad particle count"))?;
            let d = d.trim().parse().map_err(|_| err("bad orbital count"))?;
            let s = Setting::new(n, d)?;
            out.entry(s).or_default();
            current = Some(s);
            continue;
        }
        let setting = current.ok_or_else(|| err("constraint before any section header"))?;
        let mut fields = line.split_whitespace();
        let label = fields.next().ok_or_else(|| err("missing label"))?;
        let kind = match fields.next() {
            Some("ineq") => ConstraintKind::Inequality,
            Some("eq") => ConstraintKind::Equality,
            _ => return Err(err("kind must be `ineq` or `eq`")),
        };
        let nums = fields
            .map(|f| f.parse::<i64>().map_err(|_| err("non-integer coefficient")))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != setting.orbitals() + 1 {
            return Err(err("wrong number of coefficients"));
        }
        let c = AffineConstraint::new(label, kind, nums[0], nums[1..].to_vec())?;
        out.get_mut(&setting).expect("section exists").push(c);
    }
    Ok(out)
}

fn stored(setting: Setting) -> Option<Vec<AffineConstraint>> {
    let all = parse_resource(RESOURCE).expect("embedded catalog is valid");
    all.get(&setting).cloned()
}

fn unit(d: usize, i: usize, k: i64) -> Vec<i64> {
    let mut v = alloc::vec![0; d];
    v[i] = k;
    v
}

/// Catalog for settings that are not obtained by duality.
fn native(setting: Setting) -> Option<Vec<AffineConstraint>> {
    let (n, d) = (setting.particles(), setting.orbitals());
    if let Some(c) = stored(setting) {
        return Some(c);
    }
    let tag = format!("({n},{d})");
    match n {
        0 => Some(Vec::new()),
        _ if n == d => Some(Vec::new()),
        1 => Some(alloc::vec![AffineConstraint {
            label: format!("P^{{{tag}}}_1"),
            kind: ConstraintKind::Equality,
            kappa0: 1,
            kappas: unit(d, 0, -1),
        }]),
        2 => {
            let mut out = Vec::new();
            for i in 0..d / 2 {
                let mut k = unit(d, 2 * i, 1);
                k[2 * i + 1] = -1;
                out.push(AffineConstraint {
                    label: format!("E^{{{tag}}}_{}", i + 1),
                    kind: ConstraintKind::Equality,
                    kappa0: 0,
                    kappas: k,
                });
            }
            if d % 2 == 1 {
                out.push(AffineConstraint {
                    label: format!("E^{{{tag}}}_{}", d / 2 + 1),
                    kind: ConstraintKind::Equality,
                    kappa0: 0,
                    kappas: unit(d, d - 1, -1),
                });
            }
            Some(out)
        }
        _ => None,
    }
}

/// Whether [`catalog`] supports the setting.
pub fn is_supported(setting: Setting) -> bool {
    setting.orbitals() <= MAX_CATALOG_ORBITALS
        && (native(setting).is_some() || native(setting.dual()).is_some())
}

/// Supported setting `(N - r, d - r - s)`, preferring catalogs with
/// inequalities, then the fewest removed orbitals, then fewer leading
/// removals.
pub fn nearest_supported(setting: Setting) -> Option<Setting> {
    let (n, d) = (setting.particles(), setting.orbitals());
    let mut best: Option<(bool, usize, usize, Setting)> = None;
    for r in 0..=n {
        for s in 0..=(d - n) {
            let Ok(t) = Setting::new(n - r, d - r - s) else {
                continue;
            };
            if !is_supported(t) {
                continue;
            }
            let has_ineq = catalog(t).map(|c| c.has_inequalities()).unwrap_or(false);
            let key = (!has_ineq, r + s, r, t);
            if best.map_or(true, |b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                best = Some(key);
            }
        }
    }
    best.map(|b| b.3)
}

/// The full constraint catalog of a setting.
pub fn catalog(setting: Setting) -> Result<ConstraintCatalog> {
    let unsupported = || Error::UnsupportedSetting {
        setting,
        nearest: nearest_supported(setting),
    };
    if setting.orbitals() > MAX_CATALOG_ORBITALS {
        return Err(unsupported());
    }
    if let Some(constraints) = native(setting) {
        return Ok(ConstraintCatalog {
            setting,
            constraints,
            provenance: Provenance::Native,
        });
    }
    let dual = setting.dual();
    if let Some(base) = native(dual) {
        let tag = format!("({},{})", setting.particles(), setting.orbitals());
        let dtag = format!("({},{})", dual.particles(), dual.orbitals());
        let constraints = base
            .iter()
            .map(|c| c.dual(c.label.replace(&dtag, &tag)))
            .collect();
        return Ok(ConstraintCatalog {
            setting,
            constraints,
            provenance: Provenance::DualOf(dual),
        });
    }
    Err(unsupported())
}

/// Supported settings with at most `max_orbitals` orbitals, sorted.
pub fn supported_settings(max_orbitals: usize) -> Vec<Setting> {
    let mut out = Vec::new();
    for d in 0..=max_orbitals.min(MAX_CATALOG_ORBITALS) {
        for n in 0..=d {
            let s = Setting::new(n, d).expect("n <= d");
            if is_supported(s) {
                out.push(s);
            }
        }
    }
    out
}

/// `evaluate` as a free function.
pub fn evaluate(c: &AffineConstraint, spectrum: &Spectrum) -> Result<f64> {
    c.evaluate(spectrum)
}

/// `measure` as a free function.
pub fn measure(c: &AffineConstraint, spectrum: &Spectrum, which: Measure) -> Result<f64> {
    c.measure(spectrum, which)
}

/// Minimum of `which` over the inequalities of the setting's catalog.
pub fn min_distance(spectrum: &Spectrum, setting: Setting, which: Measure) -> Result<(f64, AffineConstraint)> {
    if spectrum.setting() != setting {
        return Err(Error::arg(format!(
            "spectrum belongs to {}, not {setting}",
            spectrum.setting()
        )));
    }
    let cat = catalog(setting)?;
    let (v, c) = cat.min_distance_values(spectrum.values(), which)?;
    Ok((v, c.clone()))
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Native => f.write_str("native"),
            Provenance::DualOf(s) => write!(f, "dual-of{s}"),
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Inequality => "ineq",
            ConstraintKind::Equality => "eq",
        })
    }
}
