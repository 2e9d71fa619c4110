//! Parsing of command-line values and input files.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use pinning_core::fock::{FermionState, Setting, SlaterDeterminant, Spectrum};

use crate::error::{CliError, Result};

/// Tolerance on the normalization of user-supplied spectra and states.
pub const INPUT_NORM_TOL: f64 = 1e-8;

/// `"3,8"` or `"3 8"`.
pub fn parse_setting(s: &str) -> Result<Setting> {
    let parts: Vec<&str> = s.split([',', ' ', '(', ')']).filter(|p| !p.is_empty()).collect();
    let [n, d] = parts.as_slice() else {
        return Err(CliError::usage(format!("setting `{s}` is not of the form N,d")));
    };
    let n = n.parse().map_err(|_| CliError::usage(format!("bad particle number in `{s}`")))?;
    let d = d.parse().map_err(|_| CliError::usage(format!("bad orbital number in `{s}`")))?;
    Ok(Setting::new(n, d)?)
}

/// Numbers separated by commas, whitespace or semicolons. Lines starting
/// with `#` are comments.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split([',', ' ', '\t', ';']))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::usage(format!("`{t}` is not a number"))))
        .collect()
}

/// A `--lambda` value: a path to an existing file, or an inline list.
pub fn read_lambda(arg: &str) -> Result<Vec<f64>> {
    let path = Path::new(arg);
    let values = if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.into(), source: e })?;
        parse_numbers(&text)?
    } else {
        parse_numbers(arg)?
    };
    if values.is_empty() {
        return Err(CliError::usage("no occupation numbers given"));
    }
    Ok(values)
}

/// Validates NONs for `particles`, which defaults to the rounded sum.
pub fn spectrum_from(values: Vec<f64>, particles: Option<usize>) -> Result<Spectrum> {
    let n = match particles {
        Some(n) => n,
        None => {
            let sum: f64 = values.iter().sum();
            if !sum.is_finite() || sum < -0.5 {
                return Err(CliError::usage(format!("occupation numbers sum to {sum}")));
            }
            sum.round() as usize
        }
    };
    Ok(Spectrum::with_tolerance(values, n, INPUT_NORM_TOL)?)
}

/// Reads a state file:
///
/// ```text
/// # comment
/// setting 3 6
/// 1,2,3 0.9486832980505 0
/// 4,5,6 0.3162277660168 0
/// ```
///
/// Orbitals are 1-based; the amplitude is `re im`. Repeated determinants
/// are rejected. The squared norm must be 1 within [`INPUT_NORM_TOL`]
/// unless `renormalize` is set; the state is rescaled to unit norm.
pub fn read_state(path: &Path, renormalize: bool) -> Result<FermionState> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.into(), source: e })?;
    parse_state(&text, path, renormalize)
}

pub fn parse_state(text: &str, path: &Path, renormalize: bool) -> Result<FermionState> {
    let bad = |line: usize, message: String| CliError::Input { path: path.into(), line, message };
    let mut setting: Option<Setting> = None;
    let mut terms: BTreeMap<SlaterDeterminant, Complex64> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields[0] == "setting" {
            if setting.is_some() {
                return Err(bad(line, "repeated setting header".into()));
            }
            if fields.len() != 3 {
                return Err(bad(line, "expected `setting N d`".into()));
            }
            let s = parse_setting(&format!("{},{}", fields[1], fields[2])).map_err(|e| bad(line, e.to_string()))?;
            setting = Some(s);
            continue;
        }
        let Some(s) = setting else {
            return Err(bad(line, "determinant before the `setting N d` header".into()));
        };
        if fields.len() != 3 {
            return Err(bad(line, "expected `i1,...,iN re im`".into()));
        }
        let orbitals: Vec<usize> = fields[0]
            .split(',')
            .map(|t| t.parse().map_err(|_| bad(line, format!("bad orbital index `{t}`"))))
            .collect::<Result<_>>()?;
        let det = SlaterDeterminant::from_orbitals(&orbitals, s).map_err(|e| bad(line, e.to_string()))?;
        let re: f64 = fields[1].parse().map_err(|_| bad(line, format!("bad real part `{}`", fields[1])))?;
        let im: f64 = fields[2].parse().map_err(|_| bad(line, format!("bad imaginary part `{}`", fields[2])))?;
        if terms.insert(det, Complex64::new(re, im)).is_some() {
            return Err(bad(line, format!("determinant {} listed twice", fields[0])));
        }
    }
    let setting = setting.ok_or_else(|| bad(0, "missing `setting N d` header".into()))?;
    if terms.is_empty() {
        return Err(bad(0, "no determinants".into()));
    }
    let norm: f64 = terms.values().map(|c| c.norm_sqr()).sum();
    if !renormalize && (norm - 1.0).abs() > INPUT_NORM_TOL {
        return Err(bad(0, format!("sum of |c|^2 is {norm}; pass --renormalize to rescale")));
    }
    Ok(FermionState::normalized(setting, terms)?)
}

/// A list of values, `start:stop:count` (linear, inclusive) or
/// `log:start:stop:count` (geometric, inclusive).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let range = |a: &str, b: &str, n: &str| -> Result<(f64, f64, usize)> {
        let num = |t: &str| t.parse::<f64>().map_err(|_| CliError::usage(format!("bad grid bound `{t}`")));
        let n = n.parse::<usize>().map_err(|_| CliError::usage(format!("bad grid count `{n}`")))?;
        Ok((num(a)?, num(b)?, n))
    };
    let grid = match parts.as_slice() {
        [_] => parse_numbers(s)?,
        [a, b, n] => {
            let (a, b, n) = range(a, b, n)?;
            linear(a, b, n)
        }
        ["log", a, b, n] => {
            let (a, b, n) = range(a, b, n)?;
            if !(a > 0.0 && b > 0.0) {
                return Err(CliError::usage("a logarithmic grid needs positive bounds"));
            }
            linear(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
        }
        _ => return Err(CliError::usage(format!("cannot parse grid `{s}`"))),
    };
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(CliError::usage("grid values must be finite"));
    }
    Ok(grid)
}

/// `count` equally spaced points from `a` to `b` inclusive.
pub fn linear(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// `re`, `re+imi`, or `r@phi` (polar).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || CliError::usage(format!("cannot parse complex number `{s}`"));
    if let Some((r, phi)) = s.split_once('@') {
        let r: f64 = r.parse().map_err(|_| bad())?;
        let phi: f64 = phi.parse().map_err(|_| bad())?;
        return Ok(Complex64::from_polar(r, phi));
    }
    s.parse::<Complex64>().map_err(|_| bad())
}

/// Reads `key = value` lines. Blank lines and `#` comments are skipped.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.into(), source: e })?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let Some((k, v)) = l.split_once('=') else {
            return Err(CliError::Input {
                path: path.into(),
                line: i + 1,
                message: "expected key = value".into(),
            });
        };
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Applies config entries on top of the command-line arguments: every
/// `--key` given in the file replaces the same flag on the command line.
/// `true` and `false` switch boolean flags on and off.
pub fn merge_config(args: &[String], entries: &[(String, String)]) -> Vec<String> {
    let keys: Vec<String> = entries.iter().map(|(k, _)| format!("--{k}")).collect();
    let mut out = Vec::with_capacity(args.len() + 2 * entries.len());
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        let (flag, inline) = match a.split_once('=') {
            Some((f, _)) if a.starts_with("--") => (f, true),
            _ => (a.as_str(), false),
        };
        if keys.iter().any(|k| k == flag) {
            // drop the flag and, unless it was `--k=v` or a switch, its value
            let takes_value = !inline && args.get(i + 1).is_some_and(|n| !n.starts_with("--"));
            let is_switch = entries
                .iter()
                .any(|(k, v)| format!("--{k}") == flag && (v == "true" || v == "false"));
            i += if takes_value && !is_switch { 2 } else { 1 };
            continue;
        }
        out.push(a.clone());
        i += 1;
    }
    for (k, v) in entries {
        match v.as_str() {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => out.push(format!("--{k}={v}")),
        }
    }
    out
}
