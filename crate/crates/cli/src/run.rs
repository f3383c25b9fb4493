//! Executes scenarios and writes CSV tables with JSON metadata.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use photon_counting::charpoly::CharPolyOptions;
use photon_counting::counting::{
    conservation_check, Counted, CountingModel, CumulantReport, EngineOptions, Generator, Method,
};
use photon_counting::distributions::{closed_cumulants, closed_distribution, reconstruct, PhotonDistribution, ReconstructOptions};
use photon_counting::model_jc::{jc_closed_statistics, jc_cumulants, JcModel};
use photon_counting::model_lambda::{lambda_cumulants, LambdaFrame, LambdaModel};
use photon_counting::superop::{stationary_state_with, CVector, GeneralizedDensityMatrix, C64};
use photon_counting::Error;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::scenario::{InitialState, ModelSpec, Numerics, Scenario, Sweep, Task};

/// Probabilities below this are left out of joint tables.
pub const JOINT_CUTOFF: f64 = 1e-14;
const MAX_GRID: usize = 1 << 16;
const MAX_JOINT_GRID: usize = 1 << 11;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub points: usize,
    pub failed: usize,
    /// Summary lines for standard output.
    pub messages: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            1
        } else {
            0
        }
    }

    fn merge(&mut self, other: Outcome) {
        self.files.extend(other.files);
        self.points += other.points;
        self.failed += other.failed;
        self.messages.extend(other.messages);
    }
}

#[derive(Debug)]
pub enum RunError {
    Io(io::Error),
    Csv(csv::Error),
    /// The scenario could not be evaluated at all.
    Model(Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Io(e) => write!(f, "i/o error: {e}"),
            RunError::Csv(e) => write!(f, "csv error: {e}"),
            RunError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Csv(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Model(e)
    }
}

pub fn engine_options(n: &Numerics) -> EngineOptions {
    let mut o = EngineOptions { h: n.h, richardson_tol: n.richardson_tol, ..EngineOptions::default() };
    o.integrator.steps = n.steps;
    o.integrator.doubling_tol = n.doubling_tol;
    o
}

pub fn charpoly_options(n: &Numerics) -> CharPolyOptions {
    CharPolyOptions { h: n.charpoly_h, richardson_tol: n.richardson_tol, ..CharPolyOptions::default() }
}

/// Seventeen significant digits, empty when absent.
pub fn fmt_num(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{:.16e}", if v == 0.0 { 0.0 } else { v }),
        None => String::new(),
    }
}

/// Cumulant rates of one ledger of `model` by `method`.
pub fn report(model: &ModelSpec, ledger: Counted, method: Method, n: &Numerics) -> Result<CumulantReport, Error> {
    let engine = engine_options(n);
    match model {
        ModelSpec::JaynesCummings(p) => jc_cumulants(p, ledger, 2, method, &engine, &charpoly_options(n)),
        ModelSpec::Lambda { params, allow_outside_rwa } => lambda_cumulants(params, ledger, 2, method, &engine, *allow_outside_rwa),
    }
}

fn counting_model(model: &ModelSpec, method: Method) -> Result<Box<dyn CountingModel>, Error> {
    Ok(match model {
        ModelSpec::JaynesCummings(p) => Box::new(JcModel::new(*p)?),
        ModelSpec::Lambda { params, allow_outside_rwa } => {
            let frame = if method == Method::PeriodicNumeric { LambdaFrame::RotatingFramePeriodic } else { LambdaFrame::RwaEffective };
            Box::new(LambdaModel { allow_outside_rwa: *allow_outside_rwa, ..LambdaModel::new(*params, frame)? })
        }
    })
}

fn params_json(model: &ModelSpec) -> Value {
    match model {
        ModelSpec::JaynesCummings(p) => json!({
            "eps_delta": p.eps_delta, "omega1": p.omega1, "omega2": p.omega2,
            "phi1": p.phi1, "phi2": p.phi2, "gamma": p.gamma,
        }),
        ModelSpec::Lambda { params: p, allow_outside_rwa } => json!({
            "eps_a": p.eps_a, "eps_b": p.eps_b, "eps_c": p.eps_c, "omega_p": p.omega_p, "omega_1": p.omega_1,
            "omega_d": p.omega_d, "r": p.r, "omega_s": p.omega_s, "omega_p0": p.omega_p0, "omega_p1": p.omega_p1,
            "gamma": p.gamma, "phi1": p.phi1, "phi2": p.phi2, "allow_outside_rwa": allow_outside_rwa,
        }),
    }
}

fn numerics_json(n: &Numerics) -> Value {
    json!({
        "h": n.h, "charpoly_h": n.charpoly_h, "richardson_tol": n.richardson_tol,
        "steps": n.steps, "doubling_tol": n.doubling_tol,
        "grid": n.grid.map_or(json!("auto"), |g| json!(g)),
    })
}

fn base_metadata(s: &Scenario) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("generator".into(), json!(concat!("pcount ", env!("CARGO_PKG_VERSION"))));
    m.insert("model".into(), json!(s.model.kind()));
    m.insert("params".into(), params_json(&s.model));
    m.insert("methods".into(), json!(s.methods.iter().map(|m| m.name()).collect::<Vec<_>>()));
    m.insert("numerics".into(), numerics_json(&s.numerics));
    m.insert("task".into(), json!(s.task.kind()));
    m
}

fn write_json(path: &Path, v: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Compact label for file names: `25`, `0.5`, `1e-3`.
fn label(x: f64) -> String {
    format!("{x}")
}

pub fn run(s: &Scenario, out: &Path) -> Result<Outcome, RunError> {
    fs::create_dir_all(out)?;
    match &s.task {
        Task::Cumulants { ledgers } => run_cumulants(s, ledgers, out),
        Task::Scan { sweeps, series } => {
            let mut total = Outcome::default();
            for sweep in sweeps {
                total.merge(run_scan(s, sweep, series.as_ref(), out)?);
            }
            Ok(total)
        }
        Task::Distribution { times, modes, joint, state, initial } => run_distribution(s, times, modes, *joint, *state, initial, out),
        Task::ClosedSystem { weights, mode, times, initial_variance } => run_closed(s, *weights, *mode, times, *initial_variance, out),
        Task::ConservationCheck { flux_tol, noise_tol } => run_conserve(s, *flux_tol, *noise_tol, out),
    }
}

fn ledger_name(c: Counted) -> String {
    match c {
        Counted::Drive(k) => format!("drive{}", k + 1),
        Counted::Bath(_) => "bath".into(),
        Counted::AllDrives => "drives".into(),
        Counted::AllBaths => "baths".into(),
    }
}

fn run_cumulants(s: &Scenario, ledgers: &[Counted], out: &Path) -> Result<Outcome, RunError> {
    let jobs: Vec<(Counted, Method)> = ledgers.iter().flat_map(|&l| s.methods.iter().map(move |&m| (l, m))).collect();
    let results: Vec<_> = jobs.par_iter().map(|&(l, m)| report(&s.model, l, m, &s.numerics)).collect();
    let header: Vec<String> = ["ledger", "method", "flux", "noise", "snr", "stencil_error", "errors"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let mut outcome = Outcome { points: jobs.len(), ..Outcome::default() };
    for ((l, m), r) in jobs.iter().zip(&results) {
        let row = match r {
            Ok(r) => {
                outcome.messages.push(format!(
                    "{} {}: I = {:.6e}, sigma2 = {}",
                    ledger_name(*l),
                    m.name(),
                    r.flux,
                    r.noise.map_or("-".into(), |v| format!("{v:.6e}"))
                ));
                vec![
                    ledger_name(*l),
                    m.name().into(),
                    fmt_num(Some(r.flux)),
                    fmt_num(r.noise),
                    fmt_num(r.snr()),
                    fmt_num(Some(r.stencil.relative_error(r.flux, r.noise))),
                    String::new(),
                ]
            }
            Err(e) => {
                outcome.failed += 1;
                outcome.messages.push(format!("{} {}: error: {e}", ledger_name(*l), m.name()));
                vec![ledger_name(*l), m.name().into(), String::new(), String::new(), String::new(), String::new(), e.to_string()]
            }
        };
        rows.push(row);
    }
    let csv = out.join(format!("{}.csv", s.prefix));
    write_csv(&csv, &header, &rows)?;
    let mut meta = base_metadata(s);
    meta.insert("columns".into(), json!(header));
    meta.insert("failed".into(), json!(outcome.failed));
    let js = out.join(format!("{}.json", s.prefix));
    write_json(&js, &Value::Object(meta))?;
    outcome.files.extend([csv, js]);
    Ok(outcome)
}

/// Column names of one scan table.
pub fn scan_header(variable: &str, series: Option<&str>, methods: &[Method]) -> Vec<String> {
    let mut h = Vec::new();
    if let Some(sv) = series {
        h.push(sv.to_string());
    }
    h.push(variable.to_string());
    for m in methods {
        let sfx = if methods.len() > 1 { format!("_{}", m.name()) } else { String::new() };
        for base in ["I_1", "I_2", "sigma2_1", "sigma2_2", "snr_1", "snr_2", "method", "stencil_error"] {
            h.push(format!("{base}{sfx}"));
        }
    }
    h.push("errors".into());
    h
}

fn run_scan(s: &Scenario, sweep: &Sweep, series: Option<&Sweep>, out: &Path) -> Result<Outcome, RunError> {
    let series_values: Vec<Option<f64>> = match series {
        Some(sr) => sr.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let points: Vec<(Option<f64>, f64)> =
        series_values.iter().flat_map(|&a| sweep.values.iter().map(move |&v| (a, v))).collect();
    let rows: Vec<(Vec<String>, bool)> = points
        .par_iter()
        .map(|&(a, v)| {
            let mut row = Vec::new();
            if let Some(a) = a {
                row.push(fmt_num(Some(a)));
            }
            row.push(fmt_num(Some(v)));
            let mut errors = Vec::new();
            let model = match a {
                Some(a) => s.model.with(&series.expect("series present").variable, a),
                None => Ok(s.model),
            }
            .and_then(|m| m.with(&sweep.variable, v));
            for &method in &s.methods {
                let res = model.clone().and_then(|m| {
                    Ok::<_, Error>([report(&m, Counted::Drive(0), method, &s.numerics)?, report(&m, Counted::Drive(1), method, &s.numerics)?])
                });
                match res {
                    Ok([r1, r2]) => {
                        let err = r1.stencil.relative_error(r1.flux, r1.noise).max(r2.stencil.relative_error(r2.flux, r2.noise));
                        row.extend([
                            fmt_num(Some(r1.flux)),
                            fmt_num(Some(r2.flux)),
                            fmt_num(r1.noise),
                            fmt_num(r2.noise),
                            fmt_num(r1.snr()),
                            fmt_num(r2.snr()),
                            method.name().to_string(),
                            fmt_num(Some(err)),
                        ]);
                    }
                    Err(e) => {
                        row.extend(std::iter::repeat_n(String::new(), 6));
                        row.push(method.name().to_string());
                        row.push(String::new());
                        errors.push(format!("{}: {e}", method.name()));
                    }
                }
            }
            let failed = !errors.is_empty();
            row.push(errors.join("; "));
            (row, failed)
        })
        .collect();
    let header = scan_header(&sweep.variable, series.map(|s| s.variable.as_str()), &s.methods);
    let failed = rows.iter().filter(|r| r.1).count();
    let table: Vec<Vec<String>> = rows.into_iter().map(|r| r.0).collect();
    let stem = format!("{}_{}", s.prefix, sweep.variable);
    let csv = out.join(format!("{stem}.csv"));
    write_csv(&csv, &header, &table)?;
    let mut meta = base_metadata(s);
    meta.insert("columns".into(), json!(header));
    meta.insert("sweep".into(), json!({ "variable": sweep.variable, "points": sweep.values.len() }));
    if let Some(sr) = series {
        meta.insert("series".into(), json!({ "variable": sr.variable, "values": sr.values }));
    }
    meta.insert("failed".into(), json!(failed));
    let js = out.join(format!("{stem}.json"));
    write_json(&js, &Value::Object(meta))?;
    let msg = format!("{}: {} points, {} failed -> {}", stem, points.len(), failed, csv.display());
    Ok(Outcome { files: vec![csv, js], points: points.len(), failed, messages: vec![msg] })
}

fn initial_state(model: &dyn CountingModel, state: InitialState, engine: &EngineOptions) -> Result<GeneralizedDensityMatrix, Error> {
    let g: Generator = model.generator(&model.zero_fields())?;
    let dim = g.matter_dim();
    let basis_vector = |i: usize| {
        let mut v = CVector::zeros(dim);
        v[i] = C64::new(1.0, 0.0);
        GeneralizedDensityMatrix::pure(&v)
    };
    match state {
        InitialState::Stationary => stationary_state_with(&g.effective(engine)?, &engine.spectral),
        // Two-level states are ordered (up, down); lambda states (a, b, c).
        InitialState::Ground => basis_vector(if dim == 2 { 1 } else { 0 }),
        InitialState::Excited => basis_vector(if dim == 2 { 0 } else { dim - 1 }),
    }
}

/// Reconstruction with the configured grid, or the smallest sufficient one.
fn reconstruct_auto(
    model: &dyn CountingModel,
    rho0: &GeneralizedDensityMatrix,
    law: &photon_counting::counting::InitialLaw,
    t: f64,
    modes: &[usize],
    fixed: Option<usize>,
    opts: &ReconstructOptions,
) -> Result<PhotonDistribution, Error> {
    let cap = if modes.len() == 2 { MAX_JOINT_GRID } else { MAX_GRID };
    let mut n = fixed.unwrap_or(128);
    loop {
        match reconstruct(model, rho0, law, t, modes, &vec![n; modes.len()], opts) {
            Err(Error::WindowOverflow { suggested, .. }) if fixed.is_none() && suggested <= cap => n = suggested.max(2 * n),
            other => return other,
        }
    }
}

fn distribution_rows(d: &PhotonDistribution) -> (Vec<Vec<String>>, f64) {
    let mut rows = Vec::new();
    let mut omitted = 0.0;
    if d.axes.len() == 1 {
        for (n, p) in d.marginal(0) {
            rows.push(vec![n.to_string(), fmt_num(Some(p))]);
        }
    } else {
        let n1 = d.axes[1].len();
        for (idx, &p) in d.probabilities.iter().enumerate() {
            if p < JOINT_CUTOFF {
                omitted += p;
                continue;
            }
            rows.push(vec![d.axes[0][idx / n1].to_string(), d.axes[1][idx % n1].to_string(), fmt_num(Some(p))]);
        }
    }
    (rows, omitted)
}

fn run_distribution(
    s: &Scenario,
    times: &[f64],
    modes: &[usize],
    joint: bool,
    state: InitialState,
    law: &photon_counting::counting::InitialLaw,
    out: &Path,
) -> Result<Outcome, RunError> {
    let method = s.methods[0];
    let model = counting_model(&s.model, method)?;
    let engine = engine_options(&s.numerics);
    let rho0 = initial_state(model.as_ref(), state, &engine)?;
    let opts = ReconstructOptions { engine, ..ReconstructOptions::default() };
    let groups: Vec<Vec<usize>> = if joint { vec![modes.to_vec()] } else { modes.iter().map(|&m| vec![m]).collect() };
    let mut outcome = Outcome::default();
    for &t in times {
        for g in &groups {
            outcome.points += 1;
            let tag = if g.len() == 2 { "joint".to_string() } else { format!("mode{}", g[0] + 1) };
            let stem = format!("{}_t{}_{}", s.prefix, label(t), tag);
            match reconstruct_auto(model.as_ref(), &rho0, law, t, g, s.numerics.grid, &opts) {
                Ok(d) => {
                    let mut header: Vec<String> = g.iter().map(|m| format!("n_{}", m + 1)).collect();
                    header.push("probability".into());
                    let (rows, omitted) = distribution_rows(&d);
                    let csv = out.join(format!("{stem}.csv"));
                    write_csv(&csv, &header, &rows)?;
                    let mut meta = base_metadata(s);
                    meta.insert("columns".into(), json!(header));
                    meta.insert("time".into(), json!(t));
                    meta.insert("modes".into(), json!(g.iter().map(|m| m + 1).collect::<Vec<_>>()));
                    meta.insert("grid".into(), json!(d.grid));
                    meta.insert("initial_state".into(), json!(format!("{state:?}").to_lowercase()));
                    meta.insert("initial_law".into(), json!(format!("{law:?}")));
                    meta.insert("raw_total".into(), json!(d.raw_total));
                    meta.insert("clipped_mass".into(), json!(d.clipped_mass));
                    meta.insert("min_raw_probability".into(), json!(d.min_raw));
                    meta.insert("max_imaginary_residue".into(), json!(d.max_imag));
                    meta.insert("omitted_mass".into(), json!(omitted));
                    meta.insert("means".into(), json!((0..g.len()).map(|k| d.mean(k)).collect::<Vec<_>>()));
                    meta.insert("variances".into(), json!((0..g.len()).map(|k| d.variance(k)).collect::<Vec<_>>()));
                    let js = out.join(format!("{stem}.json"));
                    write_json(&js, &Value::Object(meta))?;
                    outcome.messages.push(format!(
                        "{stem}: grid {:?}, mean {:.6e}, variance {:.6e}",
                        d.grid,
                        d.mean(0),
                        d.variance(0)
                    ));
                    outcome.files.extend([csv, js]);
                }
                Err(e) => {
                    outcome.failed += 1;
                    outcome.messages.push(format!("{stem}: error: {e}"));
                }
            }
        }
    }
    Ok(outcome)
}

fn run_closed(s: &Scenario, weights: [f64; 2], mode: usize, times: &[f64], initial_variance: Option<f64>, out: &Path) -> Result<Outcome, RunError> {
    let ModelSpec::JaynesCummings(p) = s.model else {
        return Err(RunError::Model(Error::Unsupported("the closed task needs the two-level model".into())));
    };
    let header: Vec<String> = ["t", "mean", "variance", "mgf_mean", "mgf_variance", "errors"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let mut outcome = Outcome::default();
    for &t in times {
        outcome.points += 1;
        let row = jc_closed_statistics(&p, weights, mode, t).and_then(|st| Ok((st, closed_cumulants(&p, weights, mode, t)?)));
        match row {
            Ok((st, (m, v))) => rows.push(vec![fmt_num(Some(t)), fmt_num(Some(st.mean)), fmt_num(st.variance), fmt_num(Some(m)), fmt_num(Some(v)), String::new()]),
            Err(e) => {
                outcome.failed += 1;
                rows.push(vec![fmt_num(Some(t)), String::new(), String::new(), String::new(), String::new(), e.to_string()]);
            }
        }
        if let Some(var0) = initial_variance {
            let stem = format!("{}_t{}_mode{}", s.prefix, label(t), mode + 1);
            let mut n = s.numerics.grid.unwrap_or(128);
            let d = loop {
                match closed_distribution(&p, weights, mode, t, var0, n) {
                    Err(Error::WindowOverflow { suggested, .. }) if s.numerics.grid.is_none() && suggested <= MAX_GRID => {
                        n = suggested.max(2 * n)
                    }
                    other => break other,
                }
            };
            match d {
                Ok(d) => {
                    let (rows_d, _) = distribution_rows(&d);
                    let csv = out.join(format!("{stem}.csv"));
                    write_csv(&csv, &[format!("n_{}", mode + 1), "probability".into()], &rows_d)?;
                    outcome.files.push(csv);
                }
                Err(e) => {
                    outcome.failed += 1;
                    outcome.messages.push(format!("{stem}: error: {e}"));
                }
            }
        }
    }
    let csv = out.join(format!("{}.csv", s.prefix));
    write_csv(&csv, &header, &rows)?;
    let mut meta = base_metadata(s);
    meta.insert("columns".into(), json!(header));
    meta.insert("weights".into(), json!(weights));
    meta.insert("mode".into(), json!(mode + 1));
    let js = out.join(format!("{}.json", s.prefix));
    write_json(&js, &Value::Object(meta))?;
    outcome.messages.push(format!("{}: {} times -> {}", s.prefix, times.len(), csv.display()));
    outcome.files.extend([csv, js]);
    Ok(outcome)
}

fn run_conserve(s: &Scenario, flux_tol: f64, noise_tol: f64, out: &Path) -> Result<Outcome, RunError> {
    let model = counting_model(&s.model, s.methods[0])?;
    let engine = engine_options(&s.numerics);
    let header: Vec<String> = [
        "drive_flux", "bath_flux", "drive_noise", "bath_noise", "mode_flux_sum", "flux_violation", "mode_violation",
        "noise_violation", "passed", "errors",
    ]
    .map(String::from)
    .to_vec();
    let mut outcome = Outcome { points: 1, ..Outcome::default() };
    let row = match conservation_check(model.as_ref(), flux_tol, noise_tol, &engine) {
        Ok(r) => {
            let worst = r.flux_violation.max(r.mode_violation);
            outcome.messages.push(format!(
                "{} conservation: max flux violation {:.3e} (tol {:.1e}), noise violation {:.3e} (tol {:.1e})",
                if r.passed { "PASS" } else { "FAIL" },
                worst,
                flux_tol,
                r.noise_violation,
                noise_tol
            ));
            if !r.passed {
                outcome.failed = 1;
            }
            vec![
                fmt_num(Some(r.drive_flux)),
                fmt_num(Some(r.bath_flux)),
                fmt_num(Some(r.drive_noise)),
                fmt_num(Some(r.bath_noise)),
                fmt_num(Some(r.mode_flux_sum)),
                fmt_num(Some(r.flux_violation)),
                fmt_num(Some(r.mode_violation)),
                fmt_num(Some(r.noise_violation)),
                r.passed.to_string(),
                String::new(),
            ]
        }
        Err(e) => {
            outcome.failed = 1;
            outcome.messages.push(format!("FAIL conservation: {e}"));
            let mut v = vec![String::new(); 9];
            v.push(e.to_string());
            v
        }
    };
    let csv = out.join(format!("{}.csv", s.prefix));
    write_csv(&csv, &header, &[row])?;
    let mut meta = base_metadata(s);
    meta.insert("columns".into(), json!(header));
    meta.insert("flux_tol".into(), json!(flux_tol));
    meta.insert("noise_tol".into(), json!(noise_tol));
    let js = out.join(format!("{}.json", s.prefix));
    write_json(&js, &Value::Object(meta))?;
    outcome.files.extend([csv, js]);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_num(Some(x));
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(None), "");
    }

    #[test]
    fn scan_header_layout() {
        let h = scan_header("eps_delta", Some("phi"), &[Method::SpectralFD]);
        assert_eq!(h.join(","), "phi,eps_delta,I_1,I_2,sigma2_1,sigma2_2,snr_1,snr_2,method,stencil_error,errors");
        let h = scan_header("omega_delta", None, &[Method::PerturbationTheory, Method::PeriodicNumeric]);
        assert_eq!(h[1], "I_1_perturbation-theory");
        assert_eq!(h[9], "I_1_periodic-numeric");
        assert_eq!(h.len(), 18);
    }
}
