//! Compatibility of local and joint spectra for two qubits.
//!
//! Two marginal problems are covered: `{A, AB}`, where only the spectrum of
//! one qubit is prescribed together with the joint spectrum, and
//! `{A, B, AB}`, where both one-qubit spectra are prescribed.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Slack on normalization, ordering and each inequality.
pub const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    /// `{A, AB}`; the spectrum of `B` is carried along but not tested.
    AAb,
    /// `{A, B, AB}`.
    ABAb,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::AAb => "a_ab",
            Mode::ABAb => "a_b_ab",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "a_ab" => Ok(Mode::AAb),
            "a_b_ab" => Ok(Mode::ABAb),
            _ => Err(Error::arg(alloc::format!("unknown marginal mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalTriple {
    pub spec_a: [f64; 2],
    pub spec_b: [f64; 2],
    pub spec_ab: [f64; 4],
    pub mode: Mode,
}

fn check_spectrum(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite() || *v < -TOL) {
        return Err(Error::arg(alloc::format!("{name}: entries must be finite and nonnegative")));
    }
    if values.windows(2).any(|w| w[1] > w[0] + TOL) {
        return Err(Error::arg(alloc::format!("{name}: entries must be in descending order")));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > TOL {
        return Err(Error::arg(alloc::format!("{name}: entries sum to {sum}, not 1")));
    }
    Ok(())
}

impl MarginalTriple {
    pub fn new(spec_a: [f64; 2], spec_b: [f64; 2], spec_ab: [f64; 4], mode: Mode) -> Result<Self> {
        check_spectrum("spectrum of A", &spec_a)?;
        check_spectrum("spectrum of B", &spec_b)?;
        check_spectrum("spectrum of AB", &spec_ab)?;
        Ok(Self {
            spec_a,
            spec_b,
            spec_ab,
            mode,
        })
    }

    /// Builds a triple from slices, rejecting wrong lengths.
    pub fn from_slices(a: &[f64], b: &[f64], ab: &[f64], mode: Mode) -> Result<Self> {
        let a: [f64; 2] = a
            .try_into()
            .map_err(|_| Error::arg("spectrum of A needs 2 entries"))?;
        let b: [f64; 2] = b
            .try_into()
            .map_err(|_| Error::arg("spectrum of B needs 2 entries"))?;
        let ab: [f64; 4] = ab
            .try_into()
            .map_err(|_| Error::arg("spectrum of AB needs 4 entries"))?;
        Self::new(a, b, ab, mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality {
    pub name: String,
    /// `lhs - rhs`; the inequality holds when this is at most [`TOL`].
    pub violation: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Compatibility {
    pub mode: Mode,
    pub compatible: bool,
    pub inequalities: Vec<Inequality>,
}

fn ineq(name: &str, lhs: f64, rhs: f64) -> Inequality {
    let violation = lhs - rhs;
    Inequality {
        name: name.into(),
        violation,
        holds: violation <= TOL,
    }
}

pub fn check(triple: &MarginalTriple) -> Compatibility {
    let [a1, a2] = triple.spec_a;
    let [b1, b2] = triple.spec_b;
    let [l1, l2, l3, l4] = triple.spec_ab;
    let inequalities = match triple.mode {
        Mode::AAb => alloc::vec![ineq("a1 <= l1 + l2", a1, l1 + l2)],
        Mode::ABAb => alloc::vec![
            ineq("a1 - a2 <= l1 + l2 - l3 - l4", a1 - a2, l1 + l2 - l3 - l4),
            ineq("b1 - b2 <= l1 + l2 - l3 - l4", b1 - b2, l1 + l2 - l3 - l4),
            ineq("(a1 - a2) + (b1 - b2) <= 2 l1 - 2 l4", (a1 - a2) + (b1 - b2), 2.0 * l1 - 2.0 * l4),
            ineq("|a1 - b1| <= min(l1 - l3, l2 - l4)", (a1 - b1).abs(), (l1 - l3).min(l2 - l4)),
        ],
    };
    Compatibility {
        mode: triple.mode,
        compatible: inequalities.iter().all(|i| i.holds),
        inequalities,
    }
}

fn descending(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Spectra of both reduced states and of a two-qubit density matrix in the
/// basis `|00⟩, |01⟩, |10⟩, |11⟩` with `A` the left factor.
pub fn marginal_spectra(rho: &DMatrix<Complex64>, mode: Mode) -> Result<MarginalTriple> {
    if rho.shape() != (4, 4) {
        return Err(Error::arg("two-qubit density matrix must be 4x4"));
    }
    let mut rho_a = DMatrix::<Complex64>::zeros(2, 2);
    let mut rho_b = DMatrix::<Complex64>::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                rho_a[(i, j)] += rho[(2 * i + k, 2 * j + k)];
                rho_b[(i, j)] += rho[(2 * k + i, 2 * k + j)];
            }
        }
    }
    let spec = |m: &DMatrix<Complex64>| -> Result<Vec<f64>> {
        let (values, _) = linalg::hermitian_eigen(m)?;
        Ok(descending(values.into_iter().map(|v| v.max(0.0)).collect()))
    };
    MarginalTriple::from_slices(&spec(&rho_a)?, &spec(&rho_b)?, &spec(rho)?, mode)
}
