//! Command-line definitions and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use pinning_core::constraints::{self, ConstraintKind, Measure, Provenance};
use pinning_core::fock::{self, FermionState, Setting};
use pinning_core::harmonium::{self, HarmoniumParams, Parity};
use pinning_core::hubbard::{self, LatticeSetting, SectorChoice};
use pinning_core::perturbation::EigenKind;
use pinning_core::pinning::{self as pin, AnalysisConfig, StructureCheck, TruncationPolicy};
use pinning_core::qmp;
use pinning_core::scalar::{Field, Mp, Real};

use crate::error::{CliError, Result};
use crate::input;
use crate::output::{Cell, Format, Report, Table};

#[derive(Debug, Parser)]
#[command(name = "pinning", version, about = "Natural occupation numbers, generalized Pauli constraints and pinning analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// `key = value` file whose entries replace the matching flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output file; standard output when absent.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generalized Pauli constraints.
    #[command(subcommand)]
    Gpc(GpcCommand),
    /// Truncated pinning analysis.
    #[command(subcommand)]
    Pin(PinCommand),
    /// N-Harmonium ground state.
    #[command(subcommand)]
    Harmonium(HarmoniumCommand),
    /// Small Hubbard rings.
    #[command(subcommand)]
    Hubbard(HubbardCommand),
    /// Two-qubit marginal compatibility.
    #[command(subcommand)]
    Qmp(QmpCommand),
}

#[derive(Debug, Subcommand)]
pub enum GpcCommand {
    /// Print the catalog of a setting, one constraint per line.
    List {
        #[arg(long)]
        setting: String,
    },
    /// Evaluate the catalog on a spectrum.
    Eval {
        #[arg(long)]
        setting: String,
        /// File with the NONs, or an inline comma-separated list.
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value = "dD")]
        measure: String,
    },
    /// Check catalog membership of random pure states.
    Sample {
        #[arg(long)]
        setting: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Determinants drawn per state.
        #[arg(long, default_value_t = 20)]
        support: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum PinCommand {
    /// Truncate a spectrum and classify its pinning.
    Analyze {
        #[arg(long, allow_hyphen_values = true, conflicts_with = "state", required_unless_present = "state")]
        lambda: Option<String>,
        /// State file; its NONs are analyzed.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        particles: Option<usize>,
        /// Largest truncation error allowed.
        #[arg(long, default_value_t = 1e-8)]
        threshold: f64,
        /// Distance below which a spectrum is quasi-pinned.
        #[arg(long, default_value_t = pin::DEFAULT_QUASI_THRESHOLD)]
        quasi: f64,
        #[arg(long, default_value = "dD")]
        measure: String,
        #[arg(long)]
        renormalize: bool,
    },
    /// Overlap bounds near the Hartree-Fock point or the (3,6) pinned face.
    Structure {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum, default_value_t = CheckArg::Hf)]
        check: CheckArg,
        #[arg(long)]
        renormalize: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Hf,
    #[value(alias = "bd")]
    BorlandDennis,
}

#[derive(Debug, Clone, Args)]
pub struct Coupling {
    /// Coupling `δ = −ln(l₊/l₋)`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "ratio", required_unless_present = "ratio")]
    pub delta: Option<f64>,
    /// Length ratio `l₊/l₋`.
    #[arg(long)]
    pub ratio: Option<f64>,
}

impl Coupling {
    fn params(&self, n: usize) -> Result<HarmoniumParams> {
        Ok(match (self.delta, self.ratio) {
            (Some(d), _) => harmonium::from_delta(n, d)?,
            (None, Some(r)) => harmonium::derive_params(n, r)?,
            (None, None) => return Err(CliError::usage("give --delta or --ratio")),
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum HarmoniumCommand {
    /// Fermionic NONs of the ground state.
    Nons {
        #[arg(long = "N")]
        n: usize,
        #[command(flatten)]
        coupling: Coupling,
        #[arg(long, default_value_t = harmonium::DEFAULT_M_MAX)]
        mmax: usize,
        /// Number of leading NONs reported.
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// NONs over a grid of couplings, with optional power-law fits.
    Sweep {
        #[arg(long = "N")]
        n: usize,
        /// List, `a:b:n` or `log:a:b:n`.
        #[arg(long)]
        delta_grid: String,
        #[arg(long, default_value_t = harmonium::DEFAULT_M_MAX)]
        mmax: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Fit `gap_k ≈ c·δ^p` for every reported `k`.
        #[arg(long)]
        fit: bool,
        /// 256-bit arithmetic with an adaptive cutoff; resolves gaps far
        /// below double precision.
        #[arg(long)]
        precise: bool,
    },
    /// Exact weak-coupling series of the NONs.
    Series {
        #[arg(long = "N", default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = harmonium::MAX_SERIES_ORDER)]
        order: usize,
    },
    /// Decay of NONs and natural-orbital coefficients.
    Decay {
        #[arg(long = "N")]
        n: usize,
        #[command(flatten)]
        coupling: Coupling,
        #[arg(long, default_value_t = harmonium::DEFAULT_DECAY_M_MAX)]
        mmax: usize,
        /// Orbital indices counted from 0.
        #[arg(long, value_delimiter = ',')]
        orbitals: Option<Vec<usize>>,
    },
}

#[derive(Debug, Subcommand)]
pub enum HubbardCommand {
    /// Ground state, NONs and pinning at one coupling.
    Solve {
        #[arg(long)]
        sites: usize,
        #[arg(long)]
        electrons: usize,
        #[arg(long, allow_hyphen_values = true)]
        u: f64,
        /// Weight of the `K = 1` state (`re`, `re+imi` or `r@phi`).
        #[arg(long, allow_hyphen_values = true)]
        zeta: Option<String>,
        /// Weight of the `K = −1` state.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        /// Extra relative phase applied to `xi`.
        #[arg(long, allow_hyphen_values = true)]
        phase: Option<f64>,
        /// `default`, `lowest` or `K,2M`.
        #[arg(long, default_value = "default")]
        sector: String,
    },
    /// Pinning along a uniform grid of couplings.
    Scan {
        #[arg(long)]
        sites: usize,
        #[arg(long)]
        electrons: usize,
        #[arg(long, allow_hyphen_values = true)]
        u_from: f64,
        #[arg(long, allow_hyphen_values = true)]
        u_to: f64,
        /// Number of grid points, endpoints included.
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "default")]
        sector: String,
    },
    /// Coupling where the ground state turns from pinned to unpinned.
    Transition {
        #[arg(long, default_value_t = 3)]
        sites: usize,
        #[arg(long, default_value_t = 3)]
        electrons: usize,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum QmpCommand {
    /// Test marginal spectra against the two-qubit inequalities.
    Check {
        #[arg(long, default_value = "a_b_ab")]
        mode: String,
        /// Spectrum of A, two values.
        #[arg(long)]
        a: String,
        /// Spectrum of B; optional in mode `a_ab`.
        #[arg(long)]
        b: Option<String>,
        /// Spectrum of AB, four values.
        #[arg(long)]
        ab: String,
    },
}

/// A finished command: the report and the format it defaults to.
pub struct Outcome {
    pub report: Report,
    pub default_format: OutputFormat,
}

impl Outcome {
    fn json(report: Report) -> Self {
        Self {
            report,
            default_format: OutputFormat::Json,
        }
    }

    fn csv(report: Report) -> Self {
        Self {
            report,
            default_format: OutputFormat::Csv,
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Gpc(c) => gpc(c, cli.global.seed),
        Command::Pin(c) => pin_cmd(c),
        Command::Harmonium(c) => harmonium_cmd(c),
        Command::Hubbard(c) => hubbard_cmd(c),
        Command::Qmp(c) => qmp_cmd(c),
    }
}

/// Renders in the chosen format; `text` is only defined where a command
/// provides it.
pub fn render(outcome: &Outcome, format: Option<OutputFormat>) -> Result<(String, Option<Format>)> {
    match format.unwrap_or(outcome.default_format) {
        OutputFormat::Json => Ok((outcome.report.render(Format::Json)?, Some(Format::Json))),
        OutputFormat::Csv => Ok((outcome.report.render(Format::Csv)?, Some(Format::Csv))),
        OutputFormat::Text => match &outcome.report.text {
            Some(t) => Ok((t.clone(), None)),
            None => Err(CliError::usage(format!("`{}` has no text form", outcome.report.name))),
        },
    }
}

fn parse_measure(s: &str) -> Result<Measure> {
    Ok(s.parse::<Measure>()?)
}

fn provenance(p: Provenance) -> String {
    p.to_string()
}

fn kind_name(k: ConstraintKind) -> &'static str {
    match k {
        ConstraintKind::Inequality => "inequality",
        ConstraintKind::Equality => "equality",
    }
}

fn setting_value(s: Setting) -> Value {
    json!([s.particles(), s.orbitals()])
}

fn gpc(cmd: &GpcCommand, seed: u64) -> Result<Outcome> {
    match cmd {
        GpcCommand::List { setting } => {
            let s = input::parse_setting(setting)?;
            let cat = constraints::catalog(s)?;
            let mut table = Table::new(["label", "kind", "kappa0", "kappas"]);
            let mut text = String::new();
            let mut list = Vec::new();
            for c in &cat.constraints {
                let kappas = c.kappas.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
                table.push(vec![c.label.as_str().into(), kind_name(c.kind).into(), Cell::Int(c.kappa0), kappas.into()]);
                text.push_str(&c.to_string());
                text.push('\n');
                list.push(json!({
                    "label": c.label,
                    "kind": kind_name(c.kind),
                    "kappa0": c.kappa0,
                    "kappas": c.kappas,
                }));
            }
            let json = json!({
                "setting": setting_value(s),
                "provenance": provenance(cat.provenance),
                "constraints": list,
            });
            let mut report = Report::value("gpc-list", json).with_table(table);
            report.text = Some(text);
            Ok(Outcome {
                report,
                default_format: OutputFormat::Text,
            })
        }
        GpcCommand::Eval { setting, lambda, measure } => {
            let s = input::parse_setting(setting)?;
            let measure = parse_measure(measure)?;
            let values = input::read_lambda(lambda)?;
            if values.len() != s.orbitals() {
                return Err(CliError::usage(format!(
                    "setting {s} needs {} occupation numbers, got {}",
                    s.orbitals(),
                    values.len()
                )));
            }
            let spectrum = input::spectrum_from(values, Some(s.particles()))?;
            let cat = constraints::catalog(s)?;
            let membership = cat.membership(spectrum.values(), qmp::TOL)?;
            let mut table = Table::new(["label", "kind", "value", "distance"]);
            let mut list = Vec::new();
            for c in &cat.constraints {
                let v = c.evaluate(&spectrum)?;
                let m = c.measure(&spectrum, measure)?;
                table.push(vec![c.label.as_str().into(), kind_name(c.kind).into(), v.into(), m.into()]);
                list.push(json!({"label": c.label, "kind": kind_name(c.kind), "value": v, "distance": m}));
            }
            let min = if cat.has_inequalities() {
                let (v, c) = cat.min_distance_values(spectrum.values(), measure)?;
                json!({"label": c.label, "value": v})
            } else {
                Value::Null
            };
            let json = json!({
                "setting": setting_value(s),
                "provenance": provenance(cat.provenance),
                "measure": measure.name(),
                "inside": membership.inside,
                "worst_inequality": membership.worst_inequality,
                "worst_equality": membership.worst_equality,
                "constraints": list,
                "min": min,
            });
            Ok(Outcome::json(Report::value("gpc-eval", json).with_table(table)))
        }
        GpcCommand::Sample { setting, count, support } => {
            let s = input::parse_setting(setting)?;
            let cat = constraints::catalog(s)?;
            if *support == 0 {
                return Err(CliError::usage("--support must be positive"));
            }
            let dets = s.determinants();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut header = vec!["index".to_string(), "inside".into(), "min_label".into(), "min_distance".into()];
            header.extend((1..=s.orbitals()).map(|k| format!("lambda_{k}")));
            let mut table = Table::new(header);
            let mut samples = Vec::with_capacity(*count);
            let mut all_inside = true;
            for index in 0..*count {
                let terms: std::collections::BTreeMap<_, _> = (0..*support)
                    .map(|_| {
                        let d = dets[rng.random_range(0..dets.len())];
                        (d, Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    })
                    .collect();
                let psi = FermionState::normalized(s, terms)?;
                let (spec, _) = fock::natural_occupations(&fock::one_rdm(&psi))?;
                let inside = cat.membership(spec.values(), 1e-9)?.inside;
                all_inside &= inside;
                let min = if cat.has_inequalities() {
                    let (v, c) = cat.min_distance_values(spec.values(), Measure::D)?;
                    Some((c.label.clone(), v))
                } else {
                    None
                };
                let mut row = vec![
                    index.into(),
                    inside.into(),
                    min.as_ref().map(|m| m.0.clone()).into(),
                    min.as_ref().map(|m| m.1).into(),
                ];
                row.extend(spec.values().iter().map(|&v| Cell::from(v)));
                table.push(row);
                samples.push(json!({
                    "index": index,
                    "inside": inside,
                    "min": min.map(|(l, v)| json!({"label": l, "value": v})),
                    "nons": spec.values(),
                }));
            }
            let json = json!({
                "setting": setting_value(s),
                "seed": seed,
                "count": count,
                "support": support,
                "all_inside": all_inside,
                "samples": samples,
            });
            Ok(Outcome::json(Report::value("gpc-sample", json).with_table(table)))
        }
    }
}

fn constraint_table(report: &pin::PinningReport) -> Table {
    let mut t = Table::new(["label", "kind", "value"]);
    for c in &report.constraints {
        t.push(vec![c.label.as_str().into(), kind_name(c.kind).into(), c.value.into()]);
    }
    t
}

fn pin_cmd(cmd: &PinCommand) -> Result<Outcome> {
    match cmd {
        PinCommand::Analyze {
            lambda,
            state,
            particles,
            threshold,
            quasi,
            measure,
            renormalize,
        } => {
            let spectrum = match (lambda, state) {
                (Some(l), _) => input::spectrum_from(input::read_lambda(l)?, *particles)?,
                (None, Some(p)) => {
                    let psi = input::read_state(p, *renormalize)?;
                    fock::natural_occupations(&fock::one_rdm(&psi))?.0
                }
                (None, None) => return Err(CliError::usage("give --lambda or --state")),
            };
            if !(*threshold >= 0.0) || !(*quasi > 0.0) {
                return Err(CliError::usage("--threshold must be nonnegative and --quasi positive"));
            }
            let config = AnalysisConfig {
                policy: TruncationPolicy::Threshold(*threshold),
                measure: parse_measure(measure)?,
                quasi_threshold: *quasi,
                ..AnalysisConfig::default()
            };
            let report = pin::analyze(&spectrum, &config)?;
            let table = constraint_table(&report);
            Ok(Outcome::json(Report::json("pin-analyze", &report)?.with_table(table)))
        }
        PinCommand::Structure { state, check, renormalize } => {
            let psi = input::read_state(state, *renormalize)?;
            let check = match check {
                CheckArg::Hf => StructureCheck::Hf,
                CheckArg::BorlandDennis => StructureCheck::BorlandDennis,
            };
            let r = pin::structure_bounds(&psi, check)?;
            let mut t = Table::new(["check", "delta", "lower", "value", "upper", "saturation", "holds"]);
            let name = match r.check {
                StructureCheck::Hf => "hf",
                StructureCheck::BorlandDennis => "borland_dennis",
            };
            t.push(vec![name.into(), r.delta.into(), r.lower.into(), r.value.into(), r.upper.into(), r.saturation.into(), r.holds.into()]);
            Ok(Outcome::json(Report::json("pin-structure", &r)?.with_table(t)))
        }
    }
}

/// `1 − λ_k` for the `N` leading NONs, `λ_k` beyond.
fn gap(k: usize, n: usize, lambda: f64) -> f64 {
    if k <= n {
        1.0 - lambda
    } else {
        lambda
    }
}

fn gap_name(k: usize, n: usize) -> String {
    if k <= n {
        format!("1-lambda_{k}")
    } else {
        format!("lambda_{k}")
    }
}

#[derive(Serialize)]
struct SweepRow {
    delta: f64,
    k: usize,
    lambda: f64,
    gap: f64,
}

fn sweep_values(n: usize, delta: f64, mmax: usize, count: usize, precise: bool) -> Result<Vec<(f64, f64)>> {
    if precise {
        const DIGITS: f64 = 60.0;
        let m = harmonium::precise_cutoff(n, delta, DIGITS)?.max(2 * n + count);
        let values = harmonium::fermionic_nons_mp::<256>(n, delta, m)?;
        let one = <Mp<256> as Field>::one();
        Ok(values
            .iter()
            .take(count)
            .enumerate()
            .map(|(i, v)| {
                let g = if i < n { (one.clone() - v.clone()).to_f64() } else { v.to_f64() };
                (v.to_f64(), g)
            })
            .collect())
    } else {
        let s = harmonium::fermionic_nons(&harmonium::from_delta(n, delta)?, mmax)?;
        Ok(s.values()
            .iter()
            .take(count)
            .enumerate()
            .map(|(i, &v)| (v, gap(i + 1, n, v)))
            .collect())
    }
}

fn eigen_kind(k: EigenKind) -> &'static str {
    match k {
        EigenKind::Simple => "simple",
        EigenKind::Degenerate => "degenerate",
        EigenKind::Unresolved => "unresolved",
    }
}

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

fn harmonium_cmd(cmd: &HarmoniumCommand) -> Result<Outcome> {
    match cmd {
        HarmoniumCommand::Nons { n, coupling, mmax, count } => {
            let params = coupling.params(*n)?;
            let spectrum = harmonium::fermionic_nons(&params, *mmax)?;
            let shown: Vec<f64> = spectrum.values().iter().take(*count).copied().collect();
            let mut t = Table::new(["k", "lambda_k"]);
            for (i, v) in shown.iter().enumerate() {
                t.push(vec![(i + 1).into(), (*v).into()]);
            }
            let json = json!({
                "particles": n,
                "delta": params.delta,
                "ratio": params.ratio,
                "m_max": mmax,
                "cutoff_adequate": harmonium::cutoff_adequate(&params, *mmax),
                "sum": spectrum.values().iter().sum::<f64>(),
                "params": crate::output::to_value(params)?,
                "nons": shown,
            });
            Ok(Outcome::json(Report::value("harmonium-nons", json).with_table(t)))
        }
        HarmoniumCommand::Sweep {
            n,
            delta_grid,
            mmax,
            count,
            fit,
            precise,
        } => {
            let mut grid = input::parse_grid(delta_grid)?;
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let mut rows = Vec::new();
            let mut params = Vec::new();
            let mut t = Table::new(["delta", "k", "lambda_k", "gap_k"]);
            let mut gaps: Vec<Vec<f64>> = vec![Vec::new(); *count];
            for &delta in &grid {
                params.push(crate::output::to_value(harmonium::from_delta(*n, delta)?)?);
                let values = sweep_values(*n, delta, *mmax, *count, *precise)?;
                for (i, (lambda, g)) in values.into_iter().enumerate() {
                    let k = i + 1;
                    t.push(vec![delta.into(), k.into(), lambda.into(), g.into()]);
                    rows.push(SweepRow { delta, k, lambda, gap: g });
                    gaps[i].push(g);
                }
            }
            let mut fits = Vec::new();
            let mut warnings = Vec::new();
            if *fit {
                for (i, ys) in gaps.iter().enumerate() {
                    let quantity = gap_name(i + 1, *n);
                    let pts: Vec<(f64, f64)> = grid.iter().copied().zip(ys.iter().copied()).filter(|(x, y)| *x > 0.0 && *y > 0.0).collect();
                    if pts.len() < 2 || pts.len() < ys.len() {
                        warnings.push(format!("{quantity}: not fitted, needs positive deltas and values"));
                        continue;
                    }
                    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                    fits.push(crate::output::to_value(harmonium::loglog_fit(quantity, &xs, &ys)?)?);
                }
            }
            let arithmetic = if *precise { "mp256" } else { "f64" };
            let companion = json!({
                "particles": n,
                "arithmetic": arithmetic,
                "m_max": if *precise { Value::Null } else { json!(mmax) },
                "params": params,
                "fits": fits,
                "warnings": warnings,
            });
            let json = json!({
                "particles": n,
                "arithmetic": arithmetic,
                "m_max": if *precise { Value::Null } else { json!(mmax) },
                "params": params,
                "rows": crate::output::to_value(&rows)?,
                "fits": fits,
                "warnings": warnings,
            });
            Ok(Outcome::csv(Report::value("harmonium-sweep", json).with_table(t).with_companion(companion)))
        }
        HarmoniumCommand::Series { n, order } => {
            let series = harmonium::weak_coupling_series(*n, *order)?;
            let mut t = Table::new(["branch", "parity", "multiplicity", "kind", "power", "coefficient"]);
            let mut branches = Vec::new();
            for (b, s) in series.iter().enumerate() {
                let coeffs: Vec<String> = s.coeffs.iter().map(ToString::to_string).collect();
                for (p, c) in coeffs.iter().enumerate() {
                    t.push(vec![
                        (b + 1).into(),
                        parity_name(s.parity).into(),
                        s.multiplicity.into(),
                        eigen_kind(s.kind).into(),
                        p.into(),
                        c.as_str().into(),
                    ]);
                }
                branches.push(json!({
                    "branch": b + 1,
                    "parity": parity_name(s.parity),
                    "multiplicity": s.multiplicity,
                    "kind": eigen_kind(s.kind),
                    "coefficients": coeffs,
                }));
            }
            let json = json!({"particles": n, "order": order, "branches": branches});
            Ok(Outcome::json(Report::value("harmonium-series", json).with_table(t)))
        }
        HarmoniumCommand::Decay { n, coupling, mmax, orbitals } => {
            let params = coupling.params(*n)?;
            let mut config = harmonium::DecayConfig {
                m_max: *mmax,
                ..Default::default()
            };
            if let Some(o) = orbitals {
                config.orbitals = o.clone();
            }
            let r = harmonium::decay_diagnostics(&params, &config)?;
            let mut t = Table::new(["k", "ln_lambda_k"]);
            for &(k, l) in &r.log_nons {
                t.push(vec![k.into(), l.into()]);
            }
            Ok(Outcome::json(Report::json("harmonium-decay", &r)?.with_table(t)))
        }
    }
}

fn parse_sector(s: &str, electrons: usize) -> Result<SectorChoice> {
    match s {
        "default" => Ok(SectorChoice::default_for(electrons)),
        "lowest" => Ok(SectorChoice::Lowest),
        _ => {
            let (k, m) = s
                .split_once(',')
                .ok_or_else(|| CliError::usage(format!("sector `{s}` is not default, lowest or K,2M")))?;
            let k = k.trim().parse().map_err(|_| CliError::usage(format!("bad momentum in `{s}`")))?;
            let two_m = m.trim().parse().map_err(|_| CliError::usage(format!("bad 2M in `{s}`")))?;
            Ok(SectorChoice::Fixed { k, two_m })
        }
    }
}

fn matrix_value(m: &nalgebra::DMatrix<Complex64>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
        .collect();
    Value::Array(rows)
}

fn scan_header(orbitals: usize) -> Vec<String> {
    let mut h = vec!["u".to_string(), "E0".into()];
    h.extend((1..=orbitals).map(|k| format!("lambda_{k}")));
    h.extend(["min_constraint_label", "min_distance", "pinned", "k", "two_m", "degenerate", "interval"].map(String::from));
    h
}

fn hubbard_cmd(cmd: &HubbardCommand) -> Result<Outcome> {
    match cmd {
        HubbardCommand::Solve {
            sites,
            electrons,
            u,
            zeta,
            xi,
            phase,
            sector,
        } => {
            if zeta.is_some() || xi.is_some() || phase.is_some() {
                if (*sites, *electrons) != (3, 3) {
                    return Err(CliError::usage("superpositions are available for 3 sites and 3 electrons"));
                }
                let half = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
                let z = zeta.as_deref().map(input::parse_complex).transpose()?.unwrap_or(half);
                let mut x = xi.as_deref().map(input::parse_complex).transpose()?.unwrap_or(half);
                if let Some(p) = phase {
                    x *= Complex64::from_polar(1.0, *p);
                }
                let s = hubbard::superposed_state(*u, z, x)?;
                let json = json!({
                    "u": s.u,
                    "zeta": [z.re, z.im],
                    "xi": [x.re, x.im],
                    "up": s.up,
                    "down": s.down,
                    "nons": s.nons.values(),
                    "d36": s.d36,
                    "case": crate::output::to_value(s.case)?,
                    "pairing_residual": s.pairing_residual,
                    "rho_up": matrix_value(&s.rho_up),
                    "rho_down": matrix_value(&s.rho_down),
                });
                let mut t = Table::new(["k", "lambda_k"]);
                for (i, v) in s.nons.values().iter().enumerate() {
                    t.push(vec![(i + 1).into(), (*v).into()]);
                }
                return Ok(Outcome::json(Report::value("hubbard-solve", json).with_table(t)));
            }
            let setting = LatticeSetting::new(*sites, *electrons, *u)?;
            if !u.is_finite() {
                return Err(CliError::usage("--u must be finite"));
            }
            let choice = parse_sector(sector, *electrons)?;
            let point = hubbard::scan_point(&setting, choice)?;
            let mut json = json!({
                "sites": sites,
                "electrons": electrons,
                "point": crate::output::to_value(&point)?,
            });
            if (*sites, *electrons) == (3, 3) && choice == SectorChoice::default_for(3) {
                json["analytic"] = crate::output::to_value(hubbard::solve_three_site(*u))?;
            }
            let mut t = Table::new(scan_header(setting.orbitals()));
            t.push(scan_row(&point, 0));
            Ok(Outcome::json(Report::value("hubbard-solve", json).with_table(t)))
        }
        HubbardCommand::Scan {
            sites,
            electrons,
            u_from,
            u_to,
            steps,
            sector,
        } => {
            let setting = LatticeSetting::new(*sites, *electrons, 0.0)?;
            let choice = parse_sector(sector, *electrons)?;
            let grid = input::linear(*u_from, *u_to, *steps);
            let points = hubbard::ground_scan(*sites, *electrons, choice, &grid)?;
            let mut t = Table::new(scan_header(setting.orbitals()));
            let mut list = Vec::new();
            let mut interval = 0usize;
            for (i, p) in points.iter().enumerate() {
                if i > 0 {
                    let prev = &points[i - 1];
                    if (prev.k, prev.two_m) != (p.k, p.two_m) || p.degenerate {
                        interval += 1;
                    }
                }
                t.push(scan_row(p, interval));
                list.push(json!({
                    "u": p.u,
                    "energy": p.energy,
                    "k": p.k,
                    "two_m": p.two_m,
                    "gap": p.gap,
                    "degenerate": p.degenerate,
                    "nons": p.nons,
                    "min_label": p.min_label,
                    "min_distance": p.min_distance,
                    "pinned": p.pinned,
                    "interval": interval,
                }));
            }
            let json = json!({
                "sites": sites,
                "electrons": electrons,
                "sector": sector,
                "points": list,
            });
            Ok(Outcome::csv(Report::value("hubbard-scan", json).with_table(t)))
        }
        HubbardCommand::Transition { sites, electrons, from, to } => {
            let default = match (*sites, *electrons) {
                (3, 3) => Some((0.0, 50.0)),
                (4, 3) | (4, 5) => Some((1.0, 2.4)),
                _ => None,
            };
            let bracket = match (from, to, default) {
                (Some(a), Some(b), _) => (*a, *b),
                (None, None, Some(d)) => d,
                (a, b, Some(d)) => (a.unwrap_or(d.0), b.unwrap_or(d.1)),
                _ => return Err(CliError::usage("this setting has no default bracket; give --from and --to")),
            };
            let u_p = hubbard::find_transition(*sites, *electrons, bracket)?;
            let json = json!({
                "sites": sites,
                "electrons": electrons,
                "bracket": [bracket.0, bracket.1],
                "u_p": u_p,
            });
            let mut t = Table::new(["sites", "electrons", "u_p"]);
            t.push(vec![(*sites).into(), (*electrons).into(), u_p.into()]);
            Ok(Outcome::json(Report::value("hubbard-transition", json).with_table(t)))
        }
    }
}

fn scan_row(p: &hubbard::ScanPoint, interval: usize) -> Vec<Cell> {
    let mut row = vec![p.u.into(), p.energy.into()];
    row.extend(p.nons.iter().map(|&v| Cell::from(v)));
    row.extend([
        p.min_label.clone().into(),
        p.min_distance.into(),
        p.pinned.into(),
        p.k.into(),
        p.two_m.into(),
        p.degenerate.into(),
        interval.into(),
    ]);
    row
}

fn qmp_cmd(cmd: &QmpCommand) -> Result<Outcome> {
    let QmpCommand::Check { mode, a, b, ab } = cmd;
    let mode = qmp::Mode::parse(mode)?;
    let a = input::parse_numbers(a)?;
    let given_b = b.is_some();
    let b = match (b, mode) {
        (Some(b), _) => input::parse_numbers(b)?,
        (None, qmp::Mode::AAb) => vec![0.5, 0.5],
        (None, qmp::Mode::ABAb) => return Err(CliError::usage("mode a_b_ab needs --b")),
    };
    let ab = input::parse_numbers(ab)?;
    let triple = qmp::MarginalTriple::from_slices(&a, &b, &ab, mode)?;
    let result = qmp::check(&triple);
    let mut t = Table::new(["inequality", "violation", "holds"]);
    for q in &result.inequalities {
        t.push(vec![q.name.as_str().into(), q.violation.into(), q.holds.into()]);
    }
    let json = json!({
        "mode": mode.name(),
        "spec_a": triple.spec_a,
        "spec_b": if !given_b { Value::Null } else { json!(triple.spec_b) },
        "spec_ab": triple.spec_ab,
        "compatible": result.compatible,
        "inequalities": crate::output::to_value(&result.inequalities)?,
    });
    Ok(Outcome::json(Report::value("qmp-check", json).with_table(t)))
}
