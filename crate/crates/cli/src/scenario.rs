//! Scenario files: TOML with `[model]`, `[method]`, `[numerics]`, `[task]` and `[output]` sections.
//!
//! Parsing walks the table by hand so that every violation is reported in one pass.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use photon_counting::counting::{Counted, InitialLaw, Method};
use photon_counting::model_jc::JcParams;
use photon_counting::model_lambda::LambdaParams;
use photon_counting::Error;
use toml::{Table, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioError(pub Vec<Violation>);

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    JaynesCummings(JcParams),
    Lambda { params: LambdaParams, allow_outside_rwa: bool },
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::JaynesCummings(_) => "jaynes-cummings",
            ModelSpec::Lambda { .. } => "lambda",
        }
    }

    pub fn variables(&self) -> &'static [&'static str] {
        match self {
            ModelSpec::JaynesCummings(_) => &["eps_delta", "omega1", "omega2", "phi1", "phi2", "phi", "gamma"],
            ModelSpec::Lambda { .. } => &[
                "eps_a", "eps_b", "eps_c", "omega_p", "omega_1", "omega_delta", "omega_d", "r", "omega_s", "omega_p0",
                "omega_p1", "gamma", "phi1", "phi2",
            ],
        }
    }

    /// Copy with `variable` set to `v`. `phi` moves `phi2` to `phi1 + v`;
    /// `omega_delta` moves `omega_1` to `eps_c - v`.
    pub fn with(&self, variable: &str, v: f64) -> Result<ModelSpec, Error> {
        let bad = || Error::InvalidParameter { name: variable.to_string(), reason: "not a parameter of this model".into() };
        match *self {
            ModelSpec::JaynesCummings(p) => {
                let mut q = p;
                match variable {
                    "eps_delta" => q.eps_delta = v,
                    "omega1" => q.omega1 = v,
                    "omega2" => q.omega2 = v,
                    "phi1" => q.phi1 = v,
                    "phi2" => q.phi2 = v,
                    "phi" => q.phi2 = q.phi1 + v,
                    "gamma" => q.gamma = v,
                    _ => return Err(bad()),
                }
                q.validate()?;
                Ok(ModelSpec::JaynesCummings(q))
            }
            ModelSpec::Lambda { params, allow_outside_rwa } => {
                let mut q = params;
                match variable {
                    "eps_a" => q.eps_a = v,
                    "eps_b" => q.eps_b = v,
                    "eps_c" => q.eps_c = v,
                    "omega_p" => q.omega_p = v,
                    "omega_1" => q.omega_1 = v,
                    "omega_delta" => q = q.with_omega_delta(v),
                    "omega_d" => q.omega_d = v,
                    "r" => {
                        if v < 0.0 || v.fract() != 0.0 {
                            return Err(Error::InvalidParameter { name: "r".into(), reason: "must be a nonnegative integer".into() });
                        }
                        q.r = v as u32;
                    }
                    "omega_s" => q.omega_s = v,
                    "omega_p0" => q.omega_p0 = v,
                    "omega_p1" => q.omega_p1 = v,
                    "gamma" => q.gamma = v,
                    "phi1" => q.phi1 = v,
                    "phi2" => q.phi2 = v,
                    _ => return Err(bad()),
                }
                q.validate()?;
                Ok(ModelSpec::Lambda { params: q, allow_outside_rwa })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    pub h: f64,
    pub charpoly_h: f64,
    pub richardson_tol: f64,
    pub steps: usize,
    pub doubling_tol: f64,
    /// Fourier grid per mode; `None` grows the grid until the window fits.
    pub grid: Option<usize>,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { h: 1e-3, charpoly_h: 5e-3, richardson_tol: 1e-6, steps: 512, doubling_tol: 1e-8, grid: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub variable: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    Stationary,
    Ground,
    Excited,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    Cumulants { ledgers: Vec<Counted> },
    Scan { sweeps: Vec<Sweep>, series: Option<Sweep> },
    Distribution { times: Vec<f64>, modes: Vec<usize>, joint: bool, state: InitialState, initial: InitialLaw },
    ClosedSystem { weights: [f64; 2], mode: usize, times: Vec<f64>, initial_variance: Option<f64> },
    ConservationCheck { flux_tol: f64, noise_tol: f64 },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Cumulants { .. } => "cumulants",
            Task::Scan { .. } => "scan",
            Task::Distribution { .. } => "distribution",
            Task::ClosedSystem { .. } => "closed",
            Task::ConservationCheck { .. } => "conserve",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub model: ModelSpec,
    pub methods: Vec<Method>,
    pub numerics: Numerics,
    pub task: Task,
    pub output_dir: Option<String>,
    pub prefix: String,
}

impl Scenario {
    /// Combinations of series value and sweep point a scan evaluates.
    pub fn scan_points(&self) -> usize {
        match &self.task {
            Task::Scan { sweeps, series } => {
                sweeps.iter().map(|s| s.values.len()).sum::<usize>() * series.as_ref().map_or(1, |s| s.values.len())
            }
            _ => 0,
        }
    }
}

struct Reader {
    errors: Vec<Violation>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Reader {
    fn fail(&mut self, path: String, message: impl Into<String>) {
        self.errors.push(Violation { path, message: message.into() });
    }

    fn keys(&mut self, t: &Table, path: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                self.fail(join(path, k), format!("unknown key (expected one of: {})", allowed.join(", ")));
            }
        }
    }

    fn table<'a>(&mut self, t: &'a Table, path: &str, key: &str, required: bool) -> Option<&'a Table> {
        match t.get(key) {
            Some(Value::Table(x)) => Some(x),
            Some(v) => {
                self.fail(join(path, key), format!("expected a table, found {}", type_name(v)));
                None
            }
            None => {
                if required {
                    self.fail(join(path, key), "missing section");
                }
                None
            }
        }
    }

    fn num(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        let v = t.get(key)?;
        match as_f64(v) {
            Some(x) if x.is_finite() => Some(x),
            Some(_) => {
                self.fail(join(path, key), "expected a finite number");
                None
            }
            None => {
                self.fail(join(path, key), format!("expected a number, found {}", type_name(v)));
                None
            }
        }
    }

    fn req_num(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        if !t.contains_key(key) {
            self.fail(join(path, key), "missing required number");
            return None;
        }
        self.num(t, path, key)
    }

    fn uint(&mut self, t: &Table, path: &str, key: &str) -> Option<usize> {
        match t.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            v => {
                self.fail(join(path, key), format!("expected a nonnegative integer, found {}", type_name(v)));
                None
            }
        }
    }

    fn string<'a>(&mut self, t: &'a Table, path: &str, key: &str) -> Option<&'a str> {
        match t.get(key)? {
            Value::String(s) => Some(s),
            v => {
                self.fail(join(path, key), format!("expected a string, found {}", type_name(v)));
                None
            }
        }
    }

    fn boolean(&mut self, t: &Table, path: &str, key: &str) -> Option<bool> {
        match t.get(key)? {
            Value::Boolean(b) => Some(*b),
            v => {
                self.fail(join(path, key), format!("expected a boolean, found {}", type_name(v)));
                None
            }
        }
    }

    fn nums(&mut self, t: &Table, path: &str, key: &str) -> Option<Vec<f64>> {
        match t.get(key)? {
            Value::Array(a) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    match as_f64(v) {
                        Some(x) if x.is_finite() => out.push(x),
                        _ => {
                            self.fail(format!("{}[{i}]", join(path, key)), format!("expected a finite number, found {}", type_name(v)));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            v => {
                self.fail(join(path, key), format!("expected an array of numbers, found {}", type_name(v)));
                None
            }
        }
    }

    fn strings(&mut self, t: &Table, path: &str, key: &str) -> Option<Vec<String>> {
        match t.get(key)? {
            Value::Array(a) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    match v {
                        Value::String(s) => out.push(s.clone()),
                        _ => {
                            self.fail(format!("{}[{i}]", join(path, key)), format!("expected a string, found {}", type_name(v)));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            v => {
                self.fail(join(path, key), format!("expected an array of strings, found {}", type_name(v)));
                None
            }
        }
    }

    fn model(&mut self, root: &Table) -> Option<ModelSpec> {
        let t = self.table(root, "", "model", true)?;
        self.keys(t, "model", &["kind", "params"]);
        let kind = match self.string(t, "model", "kind") {
            Some(k) => k,
            None => {
                if !t.contains_key("kind") {
                    self.fail("model.kind".into(), "missing (expected \"jaynes-cummings\" or \"lambda\")");
                }
                return None;
            }
        };
        let p = self.table(t, "model", "params", true)?;
        let path = "model.params";
        match kind {
            "jaynes-cummings" => {
                self.keys(p, path, &["eps_delta", "omega1", "omega2", "phi1", "phi2", "gamma"]);
                let eps_delta = self.req_num(p, path, "eps_delta");
                let omega1 = self.req_num(p, path, "omega1");
                let omega2 = self.req_num(p, path, "omega2");
                let gamma = self.req_num(p, path, "gamma");
                let phi1 = self.num(p, path, "phi1").unwrap_or(0.0);
                let phi2 = self.num(p, path, "phi2").unwrap_or(0.0);
                let q = JcParams { eps_delta: eps_delta?, omega1: omega1?, omega2: omega2?, phi1, phi2, gamma: gamma? };
                self.validated(q.validate(), path)?;
                Some(ModelSpec::JaynesCummings(q))
            }
            "lambda" => {
                self.keys(p, path, &[
                    "eps_a", "eps_b", "eps_c", "omega_p", "omega_1", "omega_delta", "omega_d", "r", "omega_s", "omega_p0",
                    "omega_p1", "gamma", "phi1", "phi2", "allow_outside_rwa",
                ]);
                let eps_a = self.num(p, path, "eps_a").unwrap_or(0.0);
                let eps_b = self.num(p, path, "eps_b").unwrap_or(0.0);
                let eps_c = self.num(p, path, "eps_c").unwrap_or(10.0);
                let omega_p = self.num(p, path, "omega_p").unwrap_or(eps_c - eps_b);
                let omega_1 = match (p.contains_key("omega_1"), p.contains_key("omega_delta")) {
                    (true, false) => self.num(p, path, "omega_1"),
                    (false, true) => self.num(p, path, "omega_delta").map(|w| eps_c - w),
                    _ => {
                        self.fail(join(path, "omega_1"), "give exactly one of omega_1 and omega_delta");
                        None
                    }
                };
                let omega_d = self.req_num(p, path, "omega_d");
                let r = if p.contains_key("r") { self.uint(p, path, "r") } else {
                    self.fail(join(path, "r"), "missing required nonnegative integer");
                    None
                };
                let omega_p0 = self.req_num(p, path, "omega_p0");
                let omega_p1 = self.req_num(p, path, "omega_p1");
                let gamma = self.req_num(p, path, "gamma");
                let omega_s = self.num(p, path, "omega_s").or(omega_p0.map(|w| 0.02 * w));
                let phi1 = self.num(p, path, "phi1").unwrap_or(FRAC_PI_2);
                let phi2 = self.num(p, path, "phi2").unwrap_or(0.0);
                let allow_outside_rwa = self.boolean(p, path, "allow_outside_rwa").unwrap_or(false);
                let q = LambdaParams {
                    eps_a,
                    eps_b,
                    eps_c,
                    omega_p,
                    omega_1: omega_1?,
                    omega_d: omega_d?,
                    r: u32::try_from(r?).ok()?,
                    omega_s: omega_s?,
                    omega_p0: omega_p0?,
                    omega_p1: omega_p1?,
                    gamma: gamma?,
                    phi1,
                    phi2,
                };
                self.validated(q.validate(), path)?;
                Some(ModelSpec::Lambda { params: q, allow_outside_rwa })
            }
            other => {
                self.fail("model.kind".into(), format!("unknown model {other:?} (expected \"jaynes-cummings\" or \"lambda\")"));
                None
            }
        }
    }

    fn validated(&mut self, r: Result<(), Error>, path: &str) -> Option<()> {
        match r {
            Ok(()) => Some(()),
            Err(Error::InvalidParameter { name, reason }) => {
                self.fail(join(path, &name), format!("out of range: {reason}"));
                None
            }
            Err(e) => {
                self.fail(path.to_string(), e.to_string());
                None
            }
        }
    }

    fn methods(&mut self, root: &Table) -> Vec<Method> {
        let Some(t) = self.table(root, "", "method", false) else { return vec![Method::SpectralFD] };
        self.keys(t, "method", &["name", "names"]);
        let names = match (t.contains_key("name"), t.contains_key("names")) {
            (true, true) => {
                self.fail("method".into(), "give either name or names, not both");
                return vec![];
            }
            (true, false) => self.string(t, "method", "name").map(|s| vec![s.to_string()]).unwrap_or_default(),
            (false, true) => self.strings(t, "method", "names").unwrap_or_default(),
            (false, false) => vec![Method::SpectralFD.name().to_string()],
        };
        let mut out = Vec::new();
        for (i, n) in names.iter().enumerate() {
            match Method::parse(n) {
                Some(m) => out.push(m),
                None => self.fail(
                    format!("method.names[{i}]"),
                    format!("unknown method {n:?} (expected spectral-fd, charpoly, analytic-oracle, perturbation-theory or periodic-numeric)"),
                ),
            }
        }
        if out.is_empty() && self.errors.is_empty() {
            self.fail("method.names".into(), "at least one method is required");
        }
        out
    }

    fn numerics(&mut self, root: &Table) -> Numerics {
        let mut n = Numerics::default();
        let Some(t) = self.table(root, "", "numerics", false) else { return n };
        let path = "numerics";
        self.keys(t, path, &["h", "charpoly_h", "richardson_tol", "steps", "doubling_tol", "grid"]);
        for (key, slot) in [("h", &mut n.h), ("charpoly_h", &mut n.charpoly_h), ("richardson_tol", &mut n.richardson_tol), ("doubling_tol", &mut n.doubling_tol)] {
            if let Some(v) = self.num(t, path, key) {
                if v > 0.0 {
                    *slot = v;
                } else {
                    self.fail(join(path, key), "out of range: must be positive");
                }
            }
        }
        if let Some(s) = self.uint(t, path, "steps") {
            if s >= 4 {
                n.steps = s;
            } else {
                self.fail(join(path, "steps"), "out of range: must be at least 4");
            }
        }
        match t.get("grid") {
            None => {}
            Some(Value::String(s)) if s == "auto" => {}
            Some(Value::Integer(g)) if *g >= 128 && (*g as u64).is_power_of_two() => n.grid = Some(*g as usize),
            Some(v) => self.fail(join(path, "grid"), format!("expected \"auto\" or a power of two >= 128, found {v}")),
        }
        n
    }

    fn sweep(&mut self, t: &Table, path: &str, model: Option<&ModelSpec>) -> Option<Sweep> {
        self.keys(t, path, &["variable", "range", "points", "spacing", "values"]);
        let variable = match self.string(t, path, "variable") {
            Some(v) => v.to_string(),
            None => {
                if !t.contains_key("variable") {
                    self.fail(join(path, "variable"), "missing sweep variable");
                }
                return None;
            }
        };
        if let Some(m) = model {
            if !m.variables().contains(&variable.as_str()) {
                self.fail(join(path, "variable"), format!("unknown variable {variable:?} for model {} (expected one of: {})", m.kind(), m.variables().join(", ")));
            }
        }
        if t.contains_key("values") {
            if t.contains_key("range") || t.contains_key("points") || t.contains_key("spacing") {
                self.fail(path.to_string(), "give either values or range/points/spacing");
                return None;
            }
            let values = self.nums(t, path, "values")?;
            if values.is_empty() {
                self.fail(join(path, "values"), "must not be empty");
                return None;
            }
            return Some(Sweep { variable, values });
        }
        let range = self.nums(t, path, "range");
        if !t.contains_key("range") {
            self.fail(join(path, "range"), "missing [start, stop]");
        }
        let points = if t.contains_key("points") { self.uint(t, path, "points") } else {
            self.fail(join(path, "points"), "missing number of points");
            None
        };
        let spacing = self.string(t, path, "spacing").unwrap_or("linear").to_string();
        let (range, points) = (range?, points?);
        if range.len() != 2 {
            self.fail(join(path, "range"), "expected [start, stop]");
            return None;
        }
        if points < 2 {
            self.fail(join(path, "points"), "out of range: at least 2 points");
            return None;
        }
        let (a, b) = (range[0], range[1]);
        let values = match spacing.as_str() {
            "linear" => (0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect(),
            "log" => {
                if !(a > 0.0 && b > 0.0) {
                    self.fail(join(path, "range"), "out of range: log spacing needs positive bounds");
                    return None;
                }
                let (la, lb) = (a.log10(), b.log10());
                (0..points).map(|i| 10f64.powf(la + (lb - la) * i as f64 / (points - 1) as f64)).collect()
            }
            other => {
                self.fail(join(path, "spacing"), format!("unknown spacing {other:?} (expected \"linear\" or \"log\")"));
                return None;
            }
        };
        Some(Sweep { variable, values })
    }

    fn task(&mut self, root: &Table, model: Option<&ModelSpec>) -> Option<Task> {
        let t = self.table(root, "", "task", true)?;
        let kind = match self.string(t, "task", "kind") {
            Some(k) => k,
            None => {
                if !t.contains_key("kind") {
                    self.fail("task.kind".into(), "missing (expected cumulants, scan, distribution, closed or conserve)");
                }
                return None;
            }
        };
        let path = "task";
        match kind {
            "cumulants" => {
                self.keys(t, path, &["kind", "ledgers"]);
                let names = self.strings(t, path, "ledgers").unwrap_or_else(|| vec!["drive1".into(), "drive2".into(), "bath".into()]);
                let mut ledgers = Vec::new();
                for (i, n) in names.iter().enumerate() {
                    match n.as_str() {
                        "drive1" => ledgers.push(Counted::Drive(0)),
                        "drive2" => ledgers.push(Counted::Drive(1)),
                        "drives" => ledgers.push(Counted::AllDrives),
                        "bath" => ledgers.push(Counted::Bath(0)),
                        _ => self.fail(format!("task.ledgers[{i}]"), format!("unknown ledger {n:?} (expected drive1, drive2, drives or bath)")),
                    }
                }
                Some(Task::Cumulants { ledgers })
            }
            "scan" => {
                self.keys(t, path, &["kind", "sweep", "series"]);
                let sweeps = match t.get("sweep") {
                    Some(Value::Array(a)) if !a.is_empty() => {
                        let mut out = Vec::new();
                        for (i, v) in a.iter().enumerate() {
                            match v {
                                Value::Table(s) => out.extend(self.sweep(s, &format!("task.sweep[{i}]"), model)),
                                other => self.fail(format!("task.sweep[{i}]"), format!("expected a table, found {}", type_name(other))),
                            }
                        }
                        out
                    }
                    Some(Value::Table(s)) => self.sweep(s, "task.sweep", model).into_iter().collect(),
                    Some(v) => {
                        self.fail("task.sweep".into(), format!("expected [[task.sweep]] tables, found {}", type_name(v)));
                        vec![]
                    }
                    None => {
                        self.fail("task.sweep".into(), "missing [[task.sweep]]");
                        vec![]
                    }
                };
                let series = self.table(t, path, "series", false).and_then(|s| self.sweep(s, "task.series", model));
                Some(Task::Scan { sweeps, series })
            }
            "distribution" => {
                self.keys(t, path, &["kind", "times", "modes", "joint", "state", "initial"]);
                let times = self.times(t);
                let modes = self.modes(t, &[1]);
                let joint = self.boolean(t, path, "joint").unwrap_or(false);
                if joint && modes.len() != 2 {
                    self.fail("task.joint".into(), "a joint distribution needs exactly two modes");
                }
                let state = match self.string(t, path, "state").unwrap_or("stationary") {
                    "stationary" => InitialState::Stationary,
                    "ground" => InitialState::Ground,
                    "excited" => InitialState::Excited,
                    other => {
                        self.fail("task.state".into(), format!("unknown state {other:?} (expected stationary, ground or excited)"));
                        InitialState::Stationary
                    }
                };
                let initial = self.initial(t)?;
                Some(Task::Distribution { times, modes, joint, state, initial })
            }
            "closed" => {
                self.keys(t, path, &["kind", "weights", "mode", "times", "initial_variance"]);
                let times = self.times(t);
                let mode = self.modes(t, &[1]);
                let w = self.nums(t, path, "weights").unwrap_or_else(|| vec![0.5, 0.5]);
                if w.len() != 2 || w.iter().any(|x| *x < 0.0) || ((w.iter().sum::<f64>()) - 1.0).abs() > 1e-12 {
                    self.fail("task.weights".into(), "expected two nonnegative weights summing to 1");
                }
                let initial_variance = self.num(t, path, "initial_variance");
                if initial_variance.is_some_and(|v| v < 0.0) {
                    self.fail("task.initial_variance".into(), "out of range: must be nonnegative");
                }
                if mode.len() != 1 {
                    self.fail("task.mode".into(), "expected a single mode");
                }
                Some(Task::ClosedSystem { weights: [w[0], *w.get(1).unwrap_or(&0.0)], mode: mode.first().copied().unwrap_or(0), times, initial_variance })
            }
            "conserve" => {
                self.keys(t, path, &["kind", "flux_tol", "noise_tol"]);
                let flux_tol = self.num(t, path, "flux_tol").unwrap_or(1e-8);
                let noise_tol = self.num(t, path, "noise_tol").unwrap_or(1e-6);
                if !(flux_tol > 0.0) || !(noise_tol > 0.0) {
                    self.fail("task".into(), "out of range: tolerances must be positive");
                }
                Some(Task::ConservationCheck { flux_tol, noise_tol })
            }
            other => {
                self.fail("task.kind".into(), format!("unknown task {other:?} (expected cumulants, scan, distribution, closed or conserve)"));
                None
            }
        }
    }

    fn times(&mut self, t: &Table) -> Vec<f64> {
        let times = self.nums(t, "task", "times").unwrap_or_default();
        if !t.contains_key("times") {
            self.fail("task.times".into(), "missing list of times");
        } else if times.is_empty() || times.iter().any(|x| *x < 0.0) {
            self.fail("task.times".into(), "out of range: expected a nonempty list of nonnegative times");
        }
        times
    }

    /// One-based mode labels in the file, zero-based in the result.
    fn modes(&mut self, t: &Table, default: &[usize]) -> Vec<usize> {
        let key = if t.contains_key("mode") { "mode" } else { "modes" };
        let raw: Vec<f64> = match t.get(key) {
            Some(Value::Integer(i)) => vec![*i as f64],
            Some(_) => self.nums(t, "task", key).unwrap_or_default(),
            None => default.iter().map(|&m| m as f64).collect(),
        };
        let mut out = Vec::new();
        for (i, m) in raw.iter().enumerate() {
            if *m == 1.0 || *m == 2.0 {
                out.push(*m as usize - 1);
            } else {
                self.fail(format!("task.{key}[{i}]"), "out of range: drive modes are 1 and 2");
            }
        }
        out
    }

    fn initial(&mut self, t: &Table) -> Option<InitialLaw> {
        let Some(s) = self.table(t, "task", "initial", false) else {
            return Some(InitialLaw::Gaussian { mean: vec![0.0, 0.0], variance: vec![100.0, 100.0] });
        };
        let path = "task.initial";
        self.keys(s, path, &["law", "mean", "variance"]);
        let pair = |r: &mut Reader, key: &str| -> Option<Vec<f64>> {
            let v = r.nums(s, path, key)?;
            if v.len() != 2 || v.iter().any(|x| *x < 0.0) {
                r.fail(join(path, key), "out of range: expected two nonnegative numbers");
                return None;
            }
            Some(v)
        };
        match self.string(s, path, "law").unwrap_or("gaussian") {
            "gaussian" => {
                let mean = if s.contains_key("mean") { self.nums(s, path, "mean") } else { Some(vec![0.0, 0.0]) };
                let variance = pair(self, "variance").or_else(|| {
                    if !s.contains_key("variance") {
                        self.fail(join(path, "variance"), "missing initial variances");
                    }
                    None
                });
                let mean = mean?;
                if mean.len() != 2 {
                    self.fail(join(path, "mean"), "expected two numbers");
                    return None;
                }
                Some(InitialLaw::Gaussian { mean, variance: variance? })
            }
            "poisson" => {
                if s.contains_key("variance") {
                    self.fail(join(path, "variance"), "a Poisson law is fixed by its mean");
                }
                let mean = pair(self, "mean").or_else(|| {
                    if !s.contains_key("mean") {
                        self.fail(join(path, "mean"), "missing mean photon numbers");
                    }
                    None
                })?;
                Some(InitialLaw::Poisson { alpha_sq: mean })
            }
            other => {
                self.fail(join(path, "law"), format!("unknown law {other:?} (expected \"gaussian\" or \"poisson\")"));
                None
            }
        }
    }

    fn output(&mut self, root: &Table) -> (Option<String>, String) {
        let Some(t) = self.table(root, "", "output", false) else { return (None, String::new()) };
        self.keys(t, "output", &["dir", "prefix"]);
        let dir = self.string(t, "output", "dir").map(str::to_string);
        let prefix = self.string(t, "output", "prefix").unwrap_or("").to_string();
        if prefix.contains(['/', '\\']) {
            self.fail("output.prefix".into(), "must not contain path separators");
        }
        (dir, prefix)
    }
}

fn check_compatibility(s: &Scenario, r: &mut Reader) {
    let lambda = matches!(s.model, ModelSpec::Lambda { .. });
    for (i, m) in s.methods.iter().enumerate() {
        let ok = match m {
            Method::SpectralFD | Method::CharPoly => true,
            Method::AnalyticOracle => !lambda,
            Method::PerturbationTheory | Method::PeriodicNumeric => lambda,
        };
        if !ok {
            r.fail(format!("method.names[{i}]"), format!("method {} is not available for model {}", m.name(), s.model.kind()));
        }
    }
    match &s.task {
        Task::ClosedSystem { .. } if lambda => r.fail("task.kind".into(), "the closed task needs the jaynes-cummings model"),
        Task::Distribution { .. } | Task::ConservationCheck { .. } if s.methods.len() > 1 => {
            r.fail("method.names".into(), "this task uses a single method")
        }
        _ => {}
    }
}

/// Re-checks method and task compatibility, e.g. after a command-line method override.
pub fn validate(s: &Scenario) -> Result<(), ScenarioError> {
    let mut r = Reader { errors: Vec::new() };
    check_compatibility(s, &mut r);
    if r.errors.is_empty() {
        Ok(())
    } else {
        Err(ScenarioError(r.errors))
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let root: Table = toml::from_str(text).map_err(|e| {
        ScenarioError(vec![Violation { path: "<document>".into(), message: e.message().to_string() }])
    })?;
    let mut r = Reader { errors: Vec::new() };
    r.keys(&root, "", &["model", "method", "numerics", "task", "output"]);
    let model = r.model(&root);
    let methods = r.methods(&root);
    let numerics = r.numerics(&root);
    let task = r.task(&root, model.as_ref());
    let (output_dir, prefix) = r.output(&root);
    match (model, task) {
        (Some(model), Some(task)) if r.errors.is_empty() => {
            let prefix = if prefix.is_empty() { task.kind().to_string() } else { prefix };
            let s = Scenario { model, methods, numerics, task, output_dir, prefix };
            check_compatibility(&s, &mut r);
            if r.errors.is_empty() {
                Ok(s)
            } else {
                Err(ScenarioError(r.errors))
            }
        }
        _ => Err(ScenarioError(r.errors)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
kind = "jaynes-cummings"
[model.params]
eps_delta = 0.1
omega1 = 1.0
omega2 = 1.0
gamma = 0.001
[task]
kind = "cumulants"
"#;

    #[test]
    fn minimal_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.methods, vec![Method::SpectralFD]);
        assert_eq!(s.numerics.h, 1e-3);
        assert_eq!(s.prefix, "cumulants");
        assert_eq!(s.task, Task::Cumulants { ledgers: vec![Counted::Drive(0), Counted::Drive(1), Counted::Bath(0)] });
    }

    #[test]
    fn negative_gamma_names_field() {
        let e = parse_scenario(&MINIMAL.replace("gamma = 0.001", "gamma = -0.1")).unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].path, "model.params.gamma");
        assert!(e.0[0].message.contains("out of range"));
    }

    #[test]
    fn all_violations_reported() {
        let text = MINIMAL.replace("omega2 = 1.0", "omega2 = \"one\"\ncolour = 3") + "[numerics]\nh = -1\nspeed = 2\n";
        let e = parse_scenario(&text).unwrap_err();
        let paths: Vec<_> = e.0.iter().map(|v| v.path.as_str()).collect();
        for p in ["model.params.colour", "model.params.omega2", "numerics.h", "numerics.speed"] {
            assert!(paths.contains(&p), "{paths:?}");
        }
    }

    #[test]
    fn sweep_grids() {
        let text = MINIMAL.replace("kind = \"cumulants\"", "kind = \"scan\"")
            + "[[task.sweep]]\nvariable = \"gamma\"\nrange = [1e-4, 1.0]\npoints = 5\nspacing = \"log\"\n"
            + "[[task.sweep]]\nvariable = \"eps_delta\"\nvalues = [0.5, 1]\n";
        let s = parse_scenario(&text).unwrap();
        let Task::Scan { sweeps, series } = &s.task else { panic!() };
        assert!(series.is_none());
        assert_eq!(sweeps[0].values.len(), 5);
        assert!((sweeps[0].values[1] - 1e-3).abs() < 1e-18);
        assert_eq!(sweeps[1].values, vec![0.5, 1.0]);
    }

    #[test]
    fn unknown_sweep_variable_and_method() {
        let text = MINIMAL.replace("kind = \"cumulants\"", "kind = \"scan\"")
            + "[[task.sweep]]\nvariable = \"omega_p1\"\nvalues = [1]\n[method]\nname = \"perturbation-theory\"\n";
        let e = parse_scenario(&text).unwrap_err();
        assert!(e.0.iter().any(|v| v.path == "task.sweep[0].variable"));
    }

    #[test]
    fn lambda_defaults() {
        let text = r#"
[model]
kind = "lambda"
[model.params]
omega_delta = 0.5
omega_d = 40
r = 1
omega_p0 = 1
omega_p1 = 80
gamma = 0.2
[method]
names = ["perturbation-theory", "periodic-numeric"]
[task]
kind = "cumulants"
ledgers = ["drive2"]
"#;
        let s = parse_scenario(text).unwrap();
        let ModelSpec::Lambda { params, allow_outside_rwa } = s.model else { panic!() };
        assert!(!allow_outside_rwa);
        assert_eq!(params.omega_s, 0.02);
        assert_eq!(params.omega_delta(), 0.5);
        assert_eq!(params.phi1 - params.phi2, FRAC_PI_2);
        assert_eq!(s.methods.len(), 2);
    }

    #[test]
    fn model_with_variables() {
        let s = parse_scenario(MINIMAL).unwrap();
        let ModelSpec::JaynesCummings(p) = s.model.with("phi", 0.5).unwrap() else { panic!() };
        assert_eq!(p.phi(), 0.5);
        assert!(s.model.with("gamma", -1.0).is_err());
        assert!(s.model.with("r", 1.0).is_err());
    }
}
