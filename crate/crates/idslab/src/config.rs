//! Run configuration: a TOML file with a `[model]` and a `[run]` section.
//!
//! ```toml
//! [model]
//! dimension = 1
//! size = 2000
//! boundary = "dirichlet"        # or "periodic"
//! lambda = 0.5
//! seed = 1
//! law = "uniform"               # a, b
//! a = -1.0
//! b = 1.0
//! # law = "truncated_gaussian"  # sigma, cutoff (default 3)
//! # background_period = [2]
//! # background_values = [0.0, 0.5]
//!
//! [run]
//! realizations = 100
//! energies = { start = -1.0, stop = 1.0, step = 0.05 }   # or an explicit list
//! ```
//!
//! Parsing is strict: unknown keys, keys the command does not use, type
//! mismatches and constraint violations are all reported, each with its key.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use idslab_core::{Boundary, DisorderLaw, DisorderSpec, LatticeSpec, ModelSpec, PeriodicPotential};
use toml::{Table, Value};

use crate::error::{ConfigError, ConfigErrors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Command {
    Ids,
    Surface,
    HolderE,
    HolderLambda,
    WeakDisorder,
    Wegner,
    CtDecay,
    DosSeries,
    Selftest,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Ids => "ids",
            Command::Surface => "surface",
            Command::HolderE => "holder-e",
            Command::HolderLambda => "holder-lambda",
            Command::WeakDisorder => "weak-disorder",
            Command::Wegner => "wegner",
            Command::CtDecay => "ct-decay",
            Command::DosSeries => "dos-series",
            Command::Selftest => "selftest",
        }
    }

    /// Commands that end in a theorem verdict (exit status 3 on failure).
    pub fn is_theorem_check(self) -> bool {
        !matches!(self, Command::Ids | Command::Surface | Command::Selftest)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, false)
    }
}

/// Command-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Ids {
        energies: Vec<f64>,
        realizations: u64,
    },
    Surface {
        energies: Vec<f64>,
        lambdas: Vec<f64>,
        realizations: u64,
        couple_seeds: bool,
    },
    HolderE {
        energies: Vec<f64>,
        realizations: u64,
        window: (f64, f64),
        separations: Vec<f64>,
        q1: f64,
        q_star: f64,
    },
    HolderLambda {
        lambdas: Vec<f64>,
        energy: f64,
        realizations: u64,
        couple_seeds: bool,
        q1: f64,
        q_star: f64,
    },
    WeakDisorder {
        lambdas: Vec<f64>,
        energy: f64,
        realizations: u64,
        couple_seeds: bool,
        n0_ref: Option<f64>,
        max_deviation: Option<f64>,
    },
    Wegner {
        energy: f64,
        etas: Vec<f64>,
        realizations: u64,
        slope_min: f64,
        slope_max: f64,
    },
    CtDecay {
        energy: f64,
        max_range: usize,
    },
    DosSeries {
        energy: f64,
        epsilon: f64,
        order: usize,
        box_size: usize,
        realizations: u64,
        c1: f64,
        allow_divergent: bool,
    },
    Selftest {
        models: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Absent only for `selftest`.
    pub model: Option<ModelSpec>,
    pub task: Task,
    pub output_dir: Option<PathBuf>,
    pub cache: bool,
}

/// Tracks which keys of one TOML table were read, collecting errors.
struct Section<'a> {
    name: &'static str,
    table: &'a Table,
    used: BTreeSet<&'a str>,
    errors: Vec<ConfigError>,
}

impl<'a> Section<'a> {
    fn new(name: &'static str, table: &'a Table) -> Self {
        Self {
            name,
            table,
            used: BTreeSet::new(),
            errors: Vec::new(),
        }
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn err(&mut self, k: &str, reason: impl Into<String>) {
        let key = self.key(k);
        self.errors.push(ConfigError {
            key,
            reason: reason.into(),
        });
    }

    fn raw(&mut self, k: &str) -> Option<&'a Value> {
        let (key, v) = self.table.get_key_value(k)?;
        self.used.insert(key.as_str());
        Some(v)
    }

    fn f64(&mut self, k: &str) -> Option<f64> {
        match self.raw(k)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.err(k, format!("expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn int(&mut self, k: &str, min: i64) -> Option<i64> {
        match self.raw(k)? {
            Value::Integer(i) if *i >= min => Some(*i),
            Value::Integer(_) => {
                self.err(k, format!("must be >= {min}"));
                None
            }
            other => {
                self.err(
                    k,
                    format!("expected an integer, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn bool(&mut self, k: &str) -> Option<bool> {
        match self.raw(k)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.err(k, format!("expected a boolean, found {}", other.type_str()));
                None
            }
        }
    }

    fn string(&mut self, k: &str) -> Option<&'a str> {
        match self.raw(k)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                self.err(k, format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn number_list(&mut self, k: &str) -> Option<Vec<f64>> {
        match self.raw(k)? {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for v in items {
                    match v {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(i) => out.push(*i as f64),
                        other => {
                            self.err(k, format!("expected numbers, found {}", other.type_str()));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            other => {
                self.err(k, format!("expected an array, found {}", other.type_str()));
                None
            }
        }
    }

    /// An explicit list or `{ start, stop, step }`.
    fn grid(&mut self, k: &str) -> Option<Vec<f64>> {
        match self.table.get(k)? {
            Value::Table(t) => {
                self.raw(k);
                let mut sub = Section::new("", t);
                let start = sub.f64("start");
                let stop = sub.f64("stop");
                let step = sub.f64("step");
                let unknown = sub.unknown_keys();
                for e in sub.errors.into_iter().chain(unknown) {
                    self.errors.push(ConfigError {
                        key: format!("{}{}", self.key(k), e.key),
                        reason: e.reason,
                    });
                }
                let (Some(start), Some(stop), Some(step)) = (start, stop, step) else {
                    self.err(k, "range needs start, stop and step");
                    return None;
                };
                match range_grid(start, stop, step) {
                    Ok(g) => Some(g),
                    Err(reason) => {
                        self.err(k, reason);
                        None
                    }
                }
            }
            _ => self.number_list(k),
        }
    }

    fn unknown_keys(&self) -> Vec<ConfigError> {
        self.table
            .keys()
            .filter(|k| !self.used.contains(k.as_str()))
            .map(|k| ConfigError {
                key: self.key(k),
                reason: "unknown key".into(),
            })
            .collect()
    }

    fn finish(self, extra_reason: Option<&str>) -> Vec<ConfigError> {
        let mut errors = self.errors;
        for k in self.table.keys() {
            if !self.used.contains(k.as_str()) {
                let reason = match extra_reason {
                    Some(r) => format!("unknown key ({r})"),
                    None => "unknown key".into(),
                };
                errors.push(ConfigError {
                    key: format!("{}.{k}", self.name),
                    reason,
                });
            }
        }
        errors
    }
}

/// `start, start + step, ..., stop` with exact endpoints.
pub fn range_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err("range needs finite start <= stop and step > 0".into());
    }
    let n = ((stop - start) / step).round();
    if (n * step - (stop - start)).abs() > 1e-9 * (1.0 + (stop - start).abs()) {
        return Err("step must divide stop - start".into());
    }
    if n > 1e7 {
        return Err("range has too many points".into());
    }
    let n = n as usize;
    Ok((0..=n)
        .map(|k| {
            if k == n {
                stop
            } else {
                start + (stop - start) * k as f64 / n as f64
            }
        })
        .collect())
}

fn parse_model(sec: &mut Section<'_>) -> Option<ModelSpec> {
    let dimension = sec.int("dimension", 1);
    let size = sec.int("size", 1);
    let boundary = match sec.string("boundary").unwrap_or("dirichlet") {
        "dirichlet" => Some(Boundary::Dirichlet),
        "periodic" => Some(Boundary::Periodic),
        other => {
            sec.err(
                "boundary",
                format!("expected \"dirichlet\" or \"periodic\", found {other:?}"),
            );
            None
        }
    };
    let lambda = sec.f64("lambda");
    let seed = sec.int("seed", 0).unwrap_or(0) as u64;
    let law = match sec.string("law") {
        Some("uniform") => {
            let a = sec.f64("a");
            let b = sec.f64("b");
            match (a, b) {
                (Some(a), Some(b)) => Some(DisorderLaw::Uniform { a, b }),
                _ => {
                    if !sec.table.contains_key("a") {
                        sec.err("a", "required for the uniform law");
                    }
                    if !sec.table.contains_key("b") {
                        sec.err("b", "required for the uniform law");
                    }
                    None
                }
            }
        }
        Some("truncated_gaussian") => {
            let sigma = sec.f64("sigma");
            let cutoff = sec.f64("cutoff").unwrap_or(DisorderLaw::DEFAULT_CUTOFF);
            match sigma {
                Some(sigma) => Some(DisorderLaw::TruncatedGaussian { sigma, cutoff }),
                None => {
                    if !sec.table.contains_key("sigma") {
                        sec.err("sigma", "required for the truncated_gaussian law");
                    }
                    None
                }
            }
        }
        Some(other) => {
            sec.err(
                "law",
                format!("expected \"uniform\" or \"truncated_gaussian\", found {other:?}"),
            );
            None
        }
        None => {
            if !sec.table.contains_key("law") {
                sec.err("law", "required");
            }
            None
        }
    };
    let period = sec.number_list("background_period");
    let values = sec.number_list("background_values");

    if dimension.is_none() && !sec.table.contains_key("dimension") {
        sec.err("dimension", "required");
    }
    if size.is_none() && !sec.table.contains_key("size") {
        sec.err("size", "required");
    }
    if lambda.is_none() && !sec.table.contains_key("lambda") {
        sec.err("lambda", "required");
    }
    let (dimension, size, boundary, lambda, law) = (dimension?, size?, boundary?, lambda?, law?);
    let dimension = dimension as usize;

    let background = match (period, values) {
        (None, None) => PeriodicPotential::zero(dimension),
        (Some(p), Some(v)) => {
            if p.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
                sec.err("background_period", "components must be integers >= 1");
                return None;
            }
            PeriodicPotential {
                period: p.iter().map(|&x| x as usize).collect(),
                values: v,
            }
        }
        (Some(_), None) => {
            sec.err("background_values", "required with background_period");
            return None;
        }
        (None, Some(_)) => {
            sec.err("background_period", "required with background_values");
            return None;
        }
    };

    let model = ModelSpec {
        lattice: LatticeSpec {
            dimension,
            size: size as usize,
            boundary,
        },
        background,
        disorder: DisorderSpec {
            law,
            master_seed: seed,
        },
        lambda,
    };
    if let Err(e) = model.validate() {
        match e {
            idslab_core::Error::InvalidSpec { field, reason } => {
                let key = match field {
                    "disorder" => "law",
                    "background.period" => "background_period",
                    "background.values" => "background_values",
                    f => f,
                };
                sec.err(key, reason);
            }
            other => sec.err("model", other.to_string()),
        }
        return None;
    }
    if let Err(e) = model
        .lattice
        .checked_sites(idslab_core::lattice::DEFAULT_MAX_SITES)
    {
        sec.err("size", e.to_string());
        return None;
    }
    Some(model)
}

fn required<T>(sec: &mut Section<'_>, k: &str, v: Option<T>) -> Option<T> {
    if v.is_none() && !sec.table.contains_key(k) {
        sec.err(k, "required");
    }
    v
}

fn parse_task(command: Command, sec: &mut Section<'_>, model: Option<&ModelSpec>) -> Option<Task> {
    macro_rules! need {
        ($getter:ident, $k:expr $(, $arg:expr)*) => {{
            let v = sec.$getter($k $(, $arg)*);
            required(sec, $k, v)
        }};
    }
    let positive = |sec: &mut Section<'_>, k: &str, v: Option<f64>| -> Option<f64> {
        match v {
            Some(x) if x > 0.0 && x.is_finite() => Some(x),
            Some(_) => {
                sec.err(k, format!("{k} must be > 0"));
                None
            }
            None => None,
        }
    };
    let task = match command {
        Command::Ids => {
            let energies = need!(grid, "energies");
            let realizations = need!(int, "realizations", 1);
            Task::Ids {
                energies: energies?,
                realizations: realizations? as u64,
            }
        }
        Command::Surface => {
            let energies = need!(grid, "energies");
            let lambdas = need!(grid, "lambdas");
            let realizations = need!(int, "realizations", 1);
            let couple_seeds = sec.bool("couple_seeds").unwrap_or(true);
            Task::Surface {
                energies: energies?,
                lambdas: lambdas?,
                realizations: realizations? as u64,
                couple_seeds,
            }
        }
        Command::HolderE => {
            let energies = need!(grid, "energies");
            let realizations = need!(int, "realizations", 1);
            let window = need!(number_list, "window");
            let separations = need!(number_list, "separations");
            let q1 = sec.f64("q1").unwrap_or(1.0);
            let q_star = sec.f64("q_star").unwrap_or(1.0);
            let window = match window {
                Some(w) if w.len() == 2 && w[0] < w[1] => Some((w[0], w[1])),
                Some(_) => {
                    sec.err("window", "expected [lo, hi] with lo < hi");
                    None
                }
                None => None,
            };
            Task::HolderE {
                energies: energies?,
                realizations: realizations? as u64,
                window: window?,
                separations: separations?,
                q1,
                q_star,
            }
        }
        Command::HolderLambda => {
            let lambdas = need!(grid, "lambdas");
            let energy = need!(f64, "energy");
            let realizations = need!(int, "realizations", 1);
            let couple_seeds = sec.bool("couple_seeds").unwrap_or(true);
            let q1 = sec.f64("q1").unwrap_or(1.0);
            let q_star = sec.f64("q_star").unwrap_or(1.0);
            Task::HolderLambda {
                lambdas: lambdas?,
                energy: energy?,
                realizations: realizations? as u64,
                couple_seeds,
                q1,
                q_star,
            }
        }
        Command::WeakDisorder => {
            let lambdas = need!(grid, "lambdas");
            let energy = need!(f64, "energy");
            let realizations = need!(int, "realizations", 1);
            let couple_seeds = sec.bool("couple_seeds").unwrap_or(true);
            let n0_ref = sec.f64("n0_ref");
            let max_deviation = sec.f64("max_deviation");
            Task::WeakDisorder {
                lambdas: lambdas?,
                energy: energy?,
                realizations: realizations? as u64,
                couple_seeds,
                n0_ref,
                max_deviation,
            }
        }
        Command::Wegner => {
            let energy = need!(f64, "energy");
            let etas = need!(number_list, "etas");
            let realizations = need!(int, "realizations", 1);
            let slope_min = sec.f64("slope_min").unwrap_or(0.8);
            let slope_max = sec.f64("slope_max").unwrap_or(1.2);
            Task::Wegner {
                energy: energy?,
                etas: etas?,
                realizations: realizations? as u64,
                slope_min,
                slope_max,
            }
        }
        Command::CtDecay => {
            let energy = need!(f64, "energy");
            let max_range = sec.int("max_range", 2).unwrap_or(10) as usize;
            Task::CtDecay {
                energy: energy?,
                max_range,
            }
        }
        Command::DosSeries => {
            let energy = need!(f64, "energy");
            let epsilon = sec.f64("epsilon");
            let epsilon =
                positive(sec, "epsilon", epsilon).or(if sec.table.contains_key("epsilon") {
                    None
                } else {
                    Some(1e-3)
                });
            let order = need!(int, "order", 0);
            let box_size = need!(int, "box_size", 1);
            let realizations = need!(int, "realizations", 1);
            let c1 = sec.f64("c1");
            let c1 = positive(sec, "c1", c1).or(if sec.table.contains_key("c1") {
                None
            } else {
                Some(1.0)
            });
            let allow_divergent = sec.bool("allow_divergent").unwrap_or(false);
            Task::DosSeries {
                energy: energy?,
                epsilon: epsilon?,
                order: order? as usize,
                box_size: box_size? as usize,
                realizations: realizations? as u64,
                c1: c1?,
                allow_divergent,
            }
        }
        Command::Selftest => Task::Selftest {
            models: sec.int("models", 1).unwrap_or(40) as usize,
        },
    };
    validate_task(&task, sec, model);
    Some(task)
}

fn validate_task(task: &Task, sec: &mut Section<'_>, model: Option<&ModelSpec>) {
    let ascending =
        |v: &[f64]| v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1]);
    match task {
        Task::Ids { energies, .. }
        | Task::Surface { energies, .. }
        | Task::HolderE { energies, .. }
            if !ascending(energies) || energies.is_empty() =>
        {
            sec.err("energies", "must be a nonempty, strictly ascending grid")
        }
        _ => {}
    }
    match task {
        Task::Surface { lambdas, .. }
        | Task::HolderLambda { lambdas, .. }
        | Task::WeakDisorder { lambdas, .. } => {
            if lambdas.is_empty() || lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                sec.err("lambdas", "lambda must be >= 0");
            } else if lambdas.windows(2).any(|w| w[0] > w[1]) {
                sec.err("lambdas", "must be ascending");
            }
        }
        _ => {}
    }
    match task {
        Task::HolderE {
            separations,
            q1,
            q_star,
            ..
        } => {
            if separations.len() < 3 || separations.iter().any(|h| !(*h > 0.0)) {
                sec.err("separations", "need >= 3 positive separations");
            }
            check_q(sec, *q1, *q_star);
        }
        Task::HolderLambda { q1, q_star, .. } => check_q(sec, *q1, *q_star),
        Task::Wegner {
            etas,
            slope_min,
            slope_max,
            ..
        } => {
            if etas.is_empty()
                || etas.iter().any(|x| !(*x > 0.0))
                || etas.windows(2).any(|w| w[0] <= w[1])
            {
                sec.err("etas", "must be positive and strictly descending");
            }
            if slope_min > slope_max {
                sec.err("slope_min", "must not exceed slope_max");
            }
        }
        Task::CtDecay { energy, max_range } => {
            if let Some(m) = model {
                let d = m.lattice.dimension as f64;
                if energy.abs() <= 2.0 * d {
                    sec.err("energy", format!("|E| must exceed 2d = {}", 2.0 * d));
                }
                if m.lattice.size < 4 * max_range {
                    sec.err(
                        "max_range",
                        format!("model.size must be >= 4 * max_range = {}", 4 * max_range),
                    );
                }
            }
        }
        Task::DosSeries { energy, .. } => {
            if let Some(m) = model {
                if energy.abs() <= 2.0 * m.lattice.dimension as f64 {
                    sec.err(
                        "energy",
                        "dos-series needs |E| > 2d (outside the free spectrum)",
                    );
                }
            }
        }
        _ => {}
    }
}

fn check_q(sec: &mut Section<'_>, q1: f64, q_star: f64) {
    if !(q1 > 0.0 && q1 <= 1.0) {
        sec.err("q1", "must lie in (0, 1]");
    }
    if !(q_star > 0.0 && q_star <= 1.0) {
        sec.err("q_star", "must lie in (0, 1]");
    }
}

/// Parses and fully validates a configuration for `command`.
pub fn parse_config(command: Command, text: &str) -> Result<RunConfig, ConfigErrors> {
    let root: Table = text.parse::<Table>().map_err(|e| {
        ConfigErrors(vec![ConfigError {
            key: "<file>".into(),
            reason: e.to_string().trim().to_string(),
        }])
    })?;
    let mut errors = Vec::new();
    for k in root.keys() {
        if k != "model" && k != "run" {
            errors.push(ConfigError {
                key: k.clone(),
                reason: "unknown section".into(),
            });
        }
    }
    let empty = Table::new();
    let section = |name: &str, errors: &mut Vec<ConfigError>| -> Option<&Table> {
        match root.get(name) {
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                errors.push(ConfigError {
                    key: name.into(),
                    reason: "expected a table".into(),
                });
                None
            }
            None => None,
        }
    };
    let model_table = section("model", &mut errors);
    let run_table = section("run", &mut errors).unwrap_or(&empty);

    let model = match model_table {
        Some(t) => {
            let mut sec = Section::new("model", t);
            let m = parse_model(&mut sec);
            errors.extend(sec.finish(None));
            m
        }
        None if command == Command::Selftest => None,
        None => {
            errors.push(ConfigError {
                key: "model".into(),
                reason: "required section".into(),
            });
            None
        }
    };

    let mut sec = Section::new("run", run_table);
    let output_dir = sec.string("output_dir").map(PathBuf::from);
    let cache = sec.bool("cache").unwrap_or(true);
    let task = parse_task(command, &mut sec, model.as_ref());
    let note = format!("not used by command {command}");
    errors.extend(sec.finish(Some(&note)));

    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    match (task, model) {
        (Some(task), model) if model.is_some() || command == Command::Selftest => Ok(RunConfig {
            command,
            model,
            task,
            output_dir,
            cache,
        }),
        _ => Err(ConfigErrors(vec![ConfigError {
            key: "<file>".into(),
            reason: "incomplete configuration".into(),
        }])),
    }
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

impl RunConfig {
    /// Canonical TOML: sorted keys, explicit grids, every default spelled out.
    /// Parsing it back yields an equal `RunConfig`.
    pub fn to_canonical_toml(&self) -> String {
        let mut root = Table::new();
        if let Some(m) = &self.model {
            let mut t = Table::new();
            t.insert(
                "dimension".into(),
                Value::Integer(m.lattice.dimension as i64),
            );
            t.insert("size".into(), Value::Integer(m.lattice.size as i64));
            t.insert(
                "boundary".into(),
                Value::String(m.lattice.boundary.as_str().into()),
            );
            t.insert("lambda".into(), Value::Float(m.lambda));
            t.insert("seed".into(), Value::Integer(m.disorder.master_seed as i64));
            match m.disorder.law {
                DisorderLaw::Uniform { a, b } => {
                    t.insert("law".into(), Value::String("uniform".into()));
                    t.insert("a".into(), Value::Float(a));
                    t.insert("b".into(), Value::Float(b));
                }
                DisorderLaw::TruncatedGaussian { sigma, cutoff } => {
                    t.insert("law".into(), Value::String("truncated_gaussian".into()));
                    t.insert("sigma".into(), Value::Float(sigma));
                    t.insert("cutoff".into(), Value::Float(cutoff));
                }
            }
            t.insert(
                "background_period".into(),
                Value::Array(
                    m.background
                        .period
                        .iter()
                        .map(|&p| Value::Integer(p as i64))
                        .collect(),
                ),
            );
            t.insert("background_values".into(), floats(&m.background.values));
            root.insert("model".into(), Value::Table(t));
        }
        let mut r = Table::new();
        let mut put = |k: &str, v: Value| {
            r.insert(k.into(), v);
        };
        let int = |x: u64| Value::Integer(x as i64);
        match &self.task {
            Task::Ids {
                energies,
                realizations,
            } => {
                put("energies", floats(energies));
                put("realizations", int(*realizations));
            }
            Task::Surface {
                energies,
                lambdas,
                realizations,
                couple_seeds,
            } => {
                put("energies", floats(energies));
                put("lambdas", floats(lambdas));
                put("realizations", int(*realizations));
                put("couple_seeds", Value::Boolean(*couple_seeds));
            }
            Task::HolderE {
                energies,
                realizations,
                window,
                separations,
                q1,
                q_star,
            } => {
                put("energies", floats(energies));
                put("realizations", int(*realizations));
                put("window", floats(&[window.0, window.1]));
                put("separations", floats(separations));
                put("q1", Value::Float(*q1));
                put("q_star", Value::Float(*q_star));
            }
            Task::HolderLambda {
                lambdas,
                energy,
                realizations,
                couple_seeds,
                q1,
                q_star,
            } => {
                put("lambdas", floats(lambdas));
                put("energy", Value::Float(*energy));
                put("realizations", int(*realizations));
                put("couple_seeds", Value::Boolean(*couple_seeds));
                put("q1", Value::Float(*q1));
                put("q_star", Value::Float(*q_star));
            }
            Task::WeakDisorder {
                lambdas,
                energy,
                realizations,
                couple_seeds,
                n0_ref,
                max_deviation,
            } => {
                put("lambdas", floats(lambdas));
                put("energy", Value::Float(*energy));
                put("realizations", int(*realizations));
                put("couple_seeds", Value::Boolean(*couple_seeds));
                if let Some(v) = n0_ref {
                    put("n0_ref", Value::Float(*v));
                }
                if let Some(v) = max_deviation {
                    put("max_deviation", Value::Float(*v));
                }
            }
            Task::Wegner {
                energy,
                etas,
                realizations,
                slope_min,
                slope_max,
            } => {
                put("energy", Value::Float(*energy));
                put("etas", floats(etas));
                put("realizations", int(*realizations));
                put("slope_min", Value::Float(*slope_min));
                put("slope_max", Value::Float(*slope_max));
            }
            Task::CtDecay { energy, max_range } => {
                put("energy", Value::Float(*energy));
                put("max_range", int(*max_range as u64));
            }
            Task::DosSeries {
                energy,
                epsilon,
                order,
                box_size,
                realizations,
                c1,
                allow_divergent,
            } => {
                put("energy", Value::Float(*energy));
                put("epsilon", Value::Float(*epsilon));
                put("order", int(*order as u64));
                put("box_size", int(*box_size as u64));
                put("realizations", int(*realizations));
                put("c1", Value::Float(*c1));
                put("allow_divergent", Value::Boolean(*allow_divergent));
            }
            Task::Selftest { models } => put("models", int(*models as u64)),
        }
        root.insert("run".into(), Value::Table(r));
        toml::to_string(&root).expect("TOML tables always serialize")
    }

    /// Canonical text plus output placement, for a full round trip.
    pub fn to_toml_with_io(&self) -> String {
        let mut root: Table = self
            .to_canonical_toml()
            .parse()
            .expect("canonical TOML parses");
        if let Some(Value::Table(r)) = root.get_mut("run") {
            r.insert("cache".into(), Value::Boolean(self.cache));
            if let Some(dir) = &self.output_dir {
                r.insert(
                    "output_dir".into(),
                    Value::String(dir.display().to_string()),
                );
            }
        }
        toml::to_string(&root).expect("TOML tables always serialize")
    }

    pub fn seed(&self) -> Option<u64> {
        self.model.as_ref().map(|m| m.disorder.master_seed)
    }
}
