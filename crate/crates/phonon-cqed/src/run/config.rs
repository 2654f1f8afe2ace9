//! TOML run files: parsing, validation and the resolved echo.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::simulate::{EngineSettings, LadderOptions};
use crate::units::{mev_to_ps_inv, ps_inv_to_mev};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaStar {
    /// Virtual-phonon rate of the bath at the run temperature.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detuning {
    /// Cavity tuned to the polaron-shifted exciton, `δ = −R_v`.
    Resonant,
    Value(f64),
}

/// System parameters before `γ*` and `δ` are resolved against the bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemTemplate {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_star: GammaStar,
    pub delta: Detuning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Spectrum,
    Indistinguishability,
    Efficiency,
    Varpol,
    Rates,
    Sweep,
    RegimeMap,
}

impl Task {
    pub const ALL: [Task; 7] = [
        Task::Spectrum,
        Task::Indistinguishability,
        Task::Efficiency,
        Task::Varpol,
        Task::Rates,
        Task::Sweep,
        Task::RegimeMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Indistinguishability => "indistinguishability",
            Task::Efficiency => "efficiency",
            Task::Varpol => "varpol",
            Task::Rates => "rates",
            Task::Sweep => "sweep",
            Task::RegimeMap => "regime-map",
        }
    }

    fn parse(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Tasks that run the process-tensor engine.
    pub fn uses_engine(self) -> bool {
        matches!(
            self,
            Task::Spectrum | Task::Indistinguishability | Task::Efficiency | Task::Sweep
        )
    }

    fn accepts_sweep(self) -> bool {
        matches!(self, Task::Varpol | Task::Rates | Task::Sweep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    G,
    Kappa,
    Gamma,
    GammaStar,
    Delta,
    Temperature,
    Alpha,
    Xi,
    Mu,
}

impl SweepVariable {
    pub const ALL: [SweepVariable; 9] = [
        SweepVariable::G,
        SweepVariable::Kappa,
        SweepVariable::Gamma,
        SweepVariable::GammaStar,
        SweepVariable::Delta,
        SweepVariable::Temperature,
        SweepVariable::Alpha,
        SweepVariable::Xi,
        SweepVariable::Mu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::G => "g",
            SweepVariable::Kappa => "kappa",
            SweepVariable::Gamma => "gamma",
            SweepVariable::GammaStar => "gamma_star",
            SweepVariable::Delta => "delta",
            SweepVariable::Temperature => "temperature",
            SweepVariable::Alpha => "alpha",
            SweepVariable::Xi => "xi",
            SweepVariable::Mu => "mu",
        }
    }

    /// Whether values may be given in meV.
    pub fn is_energy(self) -> bool {
        !matches!(self, SweepVariable::Temperature | SweepVariable::Alpha | SweepVariable::Mu)
    }

    fn parse(s: &str) -> Option<SweepVariable> {
        SweepVariable::ALL.into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Indistinguishability,
    Efficiency,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Indistinguishability => "indistinguishability",
            Observable::Efficiency => "efficiency",
        }
    }

    fn parse(s: &str) -> Option<Observable> {
        [Observable::Indistinguishability, Observable::Efficiency]
            .into_iter()
            .find(|o| o.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Values in internal units (ps⁻¹, K, ps²).
    pub values: Vec<f64>,
    pub pin_kappa_to_4g: bool,
    /// Engine observables computed at each point of a `sweep` task.
    pub observables: Vec<Observable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    /// Also write the full two-time correlation grid.
    pub correlation_grid: bool,
}

impl OutputSpec {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }
}

/// A fully resolved run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub bath: BathSpec,
    pub system: SystemTemplate,
    pub engine: EngineSettings,
    pub converge: bool,
    pub ladder: LadderOptions,
    /// Zero-padding factor of the spectrum transform.
    pub padding: usize,
    /// Preset names for `regime-map`; empty means all of them.
    pub presets: Vec<String>,
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
}

const SECTIONS: [&str; 6] = ["bath", "system", "engine", "task", "sweep", "output"];

/// One section of the file. Keys are removed as they are read so whatever
/// is left over is unknown.
struct Section {
    name: &'static str,
    table: Table,
}

impl Section {
    fn new(root: &mut Table, name: &'static str, errs: &mut Vec<String>) -> Option<Section> {
        match root.remove(name) {
            None => None,
            Some(Value::Table(table)) => Some(Section { name, table }),
            Some(other) => {
                errs.push(format!("[{name}] must be a table, got {}", other.type_str()));
                None
            }
        }
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn number(&mut self, key: &str, errs: &mut Vec<String>) -> Option<f64> {
        match self.table.remove(key)? {
            Value::Float(x) => Some(x),
            Value::Integer(i) => Some(i as f64),
            other => {
                errs.push(format!("{} must be a number, got {}", self.key(key), other.type_str()));
                None
            }
        }
    }

    fn integer(&mut self, key: &str, errs: &mut Vec<String>) -> Option<usize> {
        match self.table.remove(key)? {
            Value::Integer(i) if i >= 0 => Some(i as usize),
            other => {
                errs.push(format!("{} must be a non-negative integer, got {other}", self.key(key)));
                None
            }
        }
    }

    fn boolean(&mut self, key: &str, errs: &mut Vec<String>) -> Option<bool> {
        match self.table.remove(key)? {
            Value::Boolean(b) => Some(b),
            other => {
                errs.push(format!("{} must be true or false, got {other}", self.key(key)));
                None
            }
        }
    }

    fn string(&mut self, key: &str, errs: &mut Vec<String>) -> Option<String> {
        match self.table.remove(key)? {
            Value::String(s) => Some(s),
            other => {
                errs.push(format!("{} must be a string, got {other}", self.key(key)));
                None
            }
        }
    }

    fn strings(&mut self, key: &str, errs: &mut Vec<String>) -> Option<Vec<String>> {
        match self.table.remove(key)? {
            Value::Array(items) => {
                let mut out = Vec::new();
                for v in items {
                    match v {
                        Value::String(s) => out.push(s),
                        other => errs.push(format!("{} entries must be strings, got {other}", self.key(key))),
                    }
                }
                Some(out)
            }
            other => {
                errs.push(format!("{} must be a list of strings, got {other}", self.key(key)));
                None
            }
        }
    }

    fn numbers(&mut self, key: &str, errs: &mut Vec<String>) -> Option<Vec<f64>> {
        match self.table.remove(key)? {
            Value::Array(items) => {
                let mut out = Vec::new();
                for v in items {
                    match v {
                        Value::Float(x) => out.push(x),
                        Value::Integer(i) => out.push(i as f64),
                        other => errs.push(format!("{} entries must be numbers, got {other}", self.key(key))),
                    }
                }
                Some(out)
            }
            other => {
                errs.push(format!("{} must be a list of numbers, got {other}", self.key(key)));
                None
            }
        }
    }

    /// `key` in ps⁻¹ or `key_mev` in meV, never both.
    fn energy(&mut self, key: &str, errs: &mut Vec<String>) -> Option<f64> {
        let mev_key = format!("{key}_mev");
        let direct = self.number(key, errs);
        let mev = self.number(&mev_key, errs);
        match (direct, mev) {
            (Some(_), Some(_)) => {
                errs.push(format!("give {} or {}, not both", self.key(key), self.key(&mev_key)));
                None
            }
            (Some(x), None) => Some(x),
            (None, Some(e)) => Some(mev_to_ps_inv(e)),
            (None, None) => None,
        }
    }

    /// Number, or the keyword `word` (case-sensitive) for the automatic choice.
    fn number_or_word(&mut self, key: &str, word: &str, errs: &mut Vec<String>) -> Option<Option<f64>> {
        match self.table.get(key) {
            Some(Value::String(s)) if s == word => {
                self.table.remove(key);
                Some(None)
            }
            Some(Value::String(s)) => {
                errs.push(format!("{} must be a number or \"{word}\", got \"{s}\"", self.key(key)));
                self.table.remove(key);
                None
            }
            _ => self.energy(key, errs).map(Some),
        }
    }

    fn finish(self, errs: &mut Vec<String>) {
        for k in self.table.keys() {
            errs.push(format!("unknown key {}.{k}", self.name));
        }
    }
}

fn require<T>(v: Option<T>, key: &str, errs: &mut Vec<String>) -> Option<T> {
    if v.is_none() {
        errs.push(format!("missing required field {key}"));
    }
    v
}

fn check(ok: bool, msg: String, errs: &mut Vec<String>) {
    if !ok {
        errs.push(msg);
    }
}

impl RunConfig {
    /// Reads and validates a run file. Relative output directories are
    /// kept relative to the working directory.
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    /// Parses a run file, reporting every problem at once.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Validation(vec![format!("TOML syntax: {}", e.message())]))?;
        let mut errs = Vec::new();
        let mut sec = |name: &'static str, errs: &mut Vec<String>| Section::new(&mut root, name, errs);
        let mut bath_s = sec("bath", &mut errs);
        let mut system_s = sec("system", &mut errs);
        let mut engine_s = sec("engine", &mut errs);
        let mut task_s = sec("task", &mut errs);
        let mut sweep_s = sec("sweep", &mut errs);
        let mut output_s = sec("output", &mut errs);
        for k in root.keys() {
            if SECTIONS.contains(&k.as_str()) {
                continue;
            }
            errs.push(format!("unknown section or key {k}"));
        }

        // [task]
        let kind = task_s.as_mut().and_then(|s| s.string("kind", &mut errs));
        let task = match require(kind, "task.kind", &mut errs) {
            Some(k) => match Task::parse(&k) {
                Some(t) => Some(t),
                None => {
                    let names: Vec<&str> = Task::ALL.iter().map(|t| t.name()).collect();
                    errs.push(format!("task.kind must be one of {}, got \"{k}\"", names.join(", ")));
                    None
                }
            },
            None => None,
        };
        let physical = task != Some(Task::RegimeMap);
        let padding = task_s.as_mut().and_then(|s| s.integer("padding", &mut errs)).unwrap_or(4);
        check(padding >= 1, "task.padding must be at least 1".into(), &mut errs);
        let presets = task_s.as_mut().and_then(|s| s.strings("presets", &mut errs)).unwrap_or_default();
        for name in &presets {
            check(
                super::presets::find_preset(name).is_some(),
                format!("task.presets: unknown preset \"{name}\""),
                &mut errs,
            );
        }

        // [bath]
        let (mut alpha, mut xi, mut temperature) = (None, None, None);
        let mut bath = BathSpec::new(0.0, 1.0, 0.0);
        let mut nu_factor = None;
        if let Some(s) = bath_s.as_mut() {
            alpha = s.number("alpha", &mut errs);
            xi = s.energy("xi", &mut errs);
            temperature = s.number("temperature", &mut errs);
            if let Some(mu) = s.number("mu", &mut errs) {
                check(mu >= 0.0, format!("bath.mu must be >= 0, got {mu}"), &mut errs);
                bath.mu = mu;
            }
            if let Some(n) = s.integer("n_quad", &mut errs) {
                check(n >= 2, format!("bath.n_quad must be at least 2, got {n}"), &mut errs);
                bath.n_quad = n;
            }
            if let Some(m) = s.number("nu_max_over_xi", &mut errs) {
                check(m > 0.0, format!("bath.nu_max_over_xi must be positive, got {m}"), &mut errs);
                nu_factor = Some(m);
            }
        }
        if physical {
            alpha = require(alpha, "bath.alpha", &mut errs);
            xi = require(xi, "bath.xi", &mut errs);
            temperature = require(temperature, "bath.temperature", &mut errs);
        }
        if let Some(a) = alpha {
            check(a >= 0.0 && a.is_finite(), format!("bath.alpha must be >= 0, got {a}"), &mut errs);
            bath.alpha = a;
        }
        if let Some(x) = xi {
            check(x > 0.0 && x.is_finite(), format!("bath.xi must be positive, got {x}"), &mut errs);
            bath.xi = x;
        }
        if let Some(t) = temperature {
            check(t >= 0.0 && t.is_finite(), format!("bath.temperature must be >= 0, got {t}"), &mut errs);
            bath.temperature = t;
        }
        bath.nu_max = nu_factor.unwrap_or(8.0) * bath.xi;

        // [system]
        let (mut g, mut kappa, mut gamma) = (None, None, None);
        let mut gamma_star = GammaStar::Auto;
        let mut delta = Detuning::Resonant;
        if let Some(s) = system_s.as_mut() {
            g = s.energy("g", &mut errs);
            kappa = s.energy("kappa", &mut errs);
            gamma = s.energy("gamma", &mut errs);
            if let Some(v) = s.number_or_word("gamma_star", "auto", &mut errs) {
                gamma_star = v.map_or(GammaStar::Auto, GammaStar::Value);
            }
            if let Some(v) = s.number_or_word("delta", "resonant", &mut errs) {
                delta = v.map_or(Detuning::Resonant, Detuning::Value);
            }
        }
        if physical {
            g = require(g, "system.g", &mut errs);
            kappa = require(kappa, "system.kappa", &mut errs);
            gamma = require(gamma, "system.gamma", &mut errs);
        }
        if let Some(v) = g {
            check(v >= 0.0 && v.is_finite(), format!("system.g must be >= 0, got {v}"), &mut errs);
        }
        if let Some(v) = kappa {
            check(v > 0.0 && v.is_finite(), format!("system.kappa must be positive, got {v}"), &mut errs);
        }
        if let Some(v) = gamma {
            check(v >= 0.0 && v.is_finite(), format!("system.gamma must be >= 0, got {v}"), &mut errs);
        }
        if let GammaStar::Value(v) = gamma_star {
            check(v >= 0.0 && v.is_finite(), format!("system.gamma_star must be >= 0, got {v}"), &mut errs);
        }
        if let Detuning::Value(v) = delta {
            check(v.is_finite(), format!("system.delta must be finite, got {v}"), &mut errs);
        }
        let system = SystemTemplate {
            g: g.unwrap_or(0.0),
            kappa: kappa.unwrap_or(1.0),
            gamma: gamma.unwrap_or(0.0),
            gamma_star,
            delta,
        };

        // [engine]
        let mut engine = EngineSettings::default();
        let mut converge = false;
        let mut ladder = LadderOptions::default();
        if let Some(s) = engine_s.as_mut() {
            engine.dt = s.number("dt", &mut errs);
            engine.steps = s.integer("steps", &mut errs);
            engine.t_max = s.number("t_max", &mut errs);
            if engine.steps.is_some() && engine.t_max.is_some() {
                errs.push("give engine.steps or engine.t_max, not both".into());
            }
            if let Some(v) = s.number("svd_cutoff", &mut errs) {
                engine.svd_cutoff = v;
            }
            if let Some(v) = s.number("memory_tolerance", &mut errs) {
                engine.memory_tolerance = v;
            }
            if let Some(v) = s.integer("max_bond", &mut errs) {
                engine.max_bond = v;
            }
            if let Some(v) = s.integer("max_steps", &mut errs) {
                engine.max_steps = v;
            }
            if let Some(v) = s.number("decay_threshold", &mut errs) {
                engine.decay_threshold = v;
            }
            if let Some(v) = s.integer("max_memory_steps", &mut errs) {
                engine.max_memory_steps = v;
            }
            if let Some(v) = s.string("cache_dir", &mut errs) {
                engine.cache_dir = Some(PathBuf::from(v));
            }
            converge = s.boolean("converge", &mut errs).unwrap_or(false);
            if let Some(v) = s.number("ladder_tolerance", &mut errs) {
                check(
                    v > 0.0 && v < 1.0,
                    format!("engine.ladder_tolerance must lie in (0, 1), got {v}"),
                    &mut errs,
                );
                ladder.relative_tolerance = v;
            }
            if let Some(v) = s.integer("ladder_rungs", &mut errs) {
                check(v >= 2, format!("engine.ladder_rungs must be at least 2, got {v}"), &mut errs);
                ladder.max_rungs = v;
            }
        }
        if let Err(Error::Validation(list)) = engine.validate() {
            errs.extend(list);
        }

        // [sweep]
        let mut sweep = None;
        if let Some(s) = sweep_s.as_mut() {
            let variable = match require(s.string("variable", &mut errs), "sweep.variable", &mut errs) {
                Some(v) => match SweepVariable::parse(&v) {
                    Some(x) => Some(x),
                    None => {
                        let names: Vec<&str> = SweepVariable::ALL.iter().map(|v| v.name()).collect();
                        errs.push(format!("sweep.variable must be one of {}, got \"{v}\"", names.join(", ")));
                        None
                    }
                },
                None => None,
            };
            let direct = s.numbers("values", &mut errs);
            let mev = s.numbers("values_mev", &mut errs);
            let values = match (direct, mev) {
                (Some(_), Some(_)) => {
                    errs.push("give sweep.values or sweep.values_mev, not both".into());
                    None
                }
                (Some(v), None) => Some(v),
                (None, Some(v)) => {
                    if variable.is_some_and(|x| !x.is_energy()) {
                        errs.push("sweep.values_mev only applies to energy variables".into());
                    }
                    Some(v.into_iter().map(mev_to_ps_inv).collect())
                }
                (None, None) => {
                    errs.push("missing required field sweep.values".into());
                    None
                }
            };
            if let Some(v) = &values {
                check(v.len() >= 2, format!("sweep needs at least 2 values, got {}", v.len()), &mut errs);
                check(
                    v.iter().all(|x| x.is_finite()),
                    "sweep.values must be finite".into(),
                    &mut errs,
                );
            }
            let pin = s.boolean("pin_kappa_to_4g", &mut errs).unwrap_or(false);
            if pin && variable == Some(SweepVariable::Kappa) {
                errs.push("sweep.pin_kappa_to_4g cannot be combined with a kappa sweep".into());
            }
            let mut observables = vec![Observable::Indistinguishability, Observable::Efficiency];
            if let Some(list) = s.strings("observables", &mut errs) {
                observables.clear();
                for o in list {
                    match Observable::parse(&o) {
                        Some(x) if !observables.contains(&x) => observables.push(x),
                        Some(_) => {}
                        None => errs.push(format!(
                            "sweep.observables: unknown observable \"{o}\" (indistinguishability, efficiency)"
                        )),
                    }
                }
                check(!observables.is_empty(), "sweep.observables must not be empty".into(), &mut errs);
            }
            if let (Some(variable), Some(values)) = (variable, values) {
                sweep = Some(SweepSpec {
                    variable,
                    values,
                    pin_kappa_to_4g: pin,
                    observables,
                });
            }
        }
        match task {
            Some(Task::Sweep) if sweep_s.is_none() => errs.push("task sweep requires a [sweep] section".into()),
            Some(t) if sweep_s.is_some() && !t.accepts_sweep() => {
                errs.push(format!("task {} does not take a [sweep] section", t.name()))
            }
            _ => {}
        }
        if task == Some(Task::Rates) && delta != Detuning::Resonant {
            errs.push("task rates needs system.delta = \"resonant\"".into());
        }
        if let Some(sw) = &sweep {
            if sw.variable == SweepVariable::Delta && delta == Detuning::Resonant && physical {
                errs.push("a delta sweep needs a numeric system.delta".into());
            }
            if sw.variable == SweepVariable::GammaStar && gamma_star == GammaStar::Auto {
                errs.push("a gamma_star sweep needs a numeric system.gamma_star".into());
            }
            for v in &sw.values {
                let ok = match sw.variable {
                    SweepVariable::Kappa | SweepVariable::Xi => *v > 0.0,
                    SweepVariable::Delta => true,
                    _ => *v >= 0.0,
                };
                check(ok, format!("sweep value {v} is not allowed for {}", sw.variable.name()), &mut errs);
            }
        }

        // [output]
        let mut output = OutputSpec {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
            correlation_grid: false,
        };
        if let Some(s) = output_s.as_mut() {
            if let Some(d) = s.string("directory", &mut errs) {
                output.directory = PathBuf::from(d);
            }
            if let Some(list) = s.strings("formats", &mut errs) {
                output.formats.clear();
                for f in list {
                    match f.as_str() {
                        "csv" => output.formats.push(Format::Csv),
                        "json" => output.formats.push(Format::Json),
                        other => errs.push(format!("output.formats: unknown format \"{other}\" (csv, json)")),
                    }
                }
                output.formats.dedup();
                check(!output.formats.is_empty(), "output.formats must not be empty".into(), &mut errs);
            }
            output.correlation_grid = s.boolean("correlation_grid", &mut errs).unwrap_or(false);
        }

        for s in [bath_s, system_s, engine_s, task_s, sweep_s, output_s].into_iter().flatten() {
            s.finish(&mut errs);
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        Ok(RunConfig {
            task: task.expect("checked above"),
            bath,
            system,
            engine,
            converge,
            ladder,
            padding,
            presets,
            sweep,
            output,
        })
    }

    /// The resolved configuration as TOML, internal units first with meV
    /// equivalents in comments.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mev = |x: f64| format!("  # {:.6} meV", ps_inv_to_mev(x));
        let b = &self.bath;
        let _ = writeln!(s, "[task]\nkind = \"{}\"\npadding = {}", self.task.name(), self.padding);
        if !self.presets.is_empty() {
            let _ = writeln!(s, "presets = {:?}", self.presets);
        }
        let _ = writeln!(s, "\n[bath]");
        let _ = writeln!(s, "alpha = {:e}  # ps^2", b.alpha);
        let _ = writeln!(s, "xi = {:e}{}", b.xi, mev(b.xi));
        let _ = writeln!(s, "temperature = {:e}  # K", b.temperature);
        let _ = writeln!(s, "mu = {:e}  # ps^2", b.mu);
        let _ = writeln!(s, "n_quad = {}", b.n_quad);
        let _ = writeln!(s, "nu_max_over_xi = {:e}", b.nu_max / b.xi);
        let y = &self.system;
        let _ = writeln!(s, "\n[system]");
        let _ = writeln!(s, "g = {:e}{}", y.g, mev(y.g));
        let _ = writeln!(s, "kappa = {:e}{}", y.kappa, mev(y.kappa));
        let _ = writeln!(s, "gamma = {:e}{}", y.gamma, mev(y.gamma));
        match y.gamma_star {
            GammaStar::Auto => {
                let _ = writeln!(s, "gamma_star = \"auto\"");
            }
            GammaStar::Value(v) => {
                let _ = writeln!(s, "gamma_star = {v:e}{}", mev(v));
            }
        }
        match y.delta {
            Detuning::Resonant => {
                let _ = writeln!(s, "delta = \"resonant\"");
            }
            Detuning::Value(v) => {
                let _ = writeln!(s, "delta = {v:e}{}", mev(v));
            }
        }
        let e = &self.engine;
        let _ = writeln!(s, "\n[engine]");
        if let Some(dt) = e.dt {
            let _ = writeln!(s, "dt = {dt:e}  # ps");
        }
        if let Some(n) = e.steps {
            let _ = writeln!(s, "steps = {n}");
        }
        if let Some(t) = e.t_max {
            let _ = writeln!(s, "t_max = {t:e}  # ps");
        }
        let _ = writeln!(s, "svd_cutoff = {:e}", e.svd_cutoff);
        let _ = writeln!(s, "memory_tolerance = {:e}", e.memory_tolerance);
        let _ = writeln!(s, "max_bond = {}", e.max_bond);
        let _ = writeln!(s, "max_steps = {}", e.max_steps);
        let _ = writeln!(s, "decay_threshold = {:e}", e.decay_threshold);
        let _ = writeln!(s, "max_memory_steps = {}", e.max_memory_steps);
        let _ = writeln!(s, "converge = {}", self.converge);
        let _ = writeln!(s, "ladder_tolerance = {:e}", self.ladder.relative_tolerance);
        let _ = writeln!(s, "ladder_rungs = {}", self.ladder.max_rungs);
        if let Some(sw) = &self.sweep {
            let _ = writeln!(s, "\n[sweep]");
            let _ = writeln!(s, "variable = \"{}\"", sw.variable.name());
            let vals: Vec<String> = sw.values.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "values = [{}]", vals.join(", "));
            let _ = writeln!(s, "pin_kappa_to_4g = {}", sw.pin_kappa_to_4g);
            let obs: Vec<String> = sw.observables.iter().map(|o| format!("\"{}\"", o.name())).collect();
            let _ = writeln!(s, "observables = [{}]", obs.join(", "));
        }
        let o = &self.output;
        let _ = writeln!(s, "\n[output]");
        let fmts: Vec<&str> = o
            .formats
            .iter()
            .map(|f| match f {
                Format::Csv => "\"csv\"",
                Format::Json => "\"json\"",
            })
            .collect();
        let _ = writeln!(s, "formats = [{}]", fmts.join(", "));
        let _ = writeln!(s, "correlation_grid = {}", o.correlation_grid);
        s
    }

    /// SHA-256 of the echo; the output directory and cache location are
    /// left out so moving a run does not change its identity.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[task]
kind = "spectrum"

[bath]
alpha = 0.025
xi = 2.23
temperature = 4

[system]
g = 1.1
kappa = 0.5
gamma = 0.01
"#;

    #[test]
    fn minimal_spectrum_config() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.task, Task::Spectrum);
        assert_eq!((c.bath.alpha, c.bath.xi), (0.025, 2.23));
        assert_eq!((c.system.kappa, c.system.gamma), (0.5, 0.01));
        assert_eq!(c.system.delta, Detuning::Resonant);
        assert_eq!(c.system.gamma_star, GammaStar::Auto);
        assert_eq!(c.bath.nu_max, 8.0 * 2.23);
        let echo = c.echo();
        for line in ["alpha = 2.5e-2", "xi = 2.23e0", "kappa = 5e-1", "gamma = 1e-2"] {
            assert!(echo.contains(line), "{line} missing from\n{echo}");
        }
        // the echo is itself a valid run file describing the same run
        let again = RunConfig::parse(&echo).unwrap();
        assert_eq!(again.echo(), echo);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn empty_file_names_required_fields() {
        let Err(Error::Validation(list)) = RunConfig::parse("") else {
            panic!("expected a validation error");
        };
        for key in [
            "task.kind",
            "bath.alpha",
            "bath.xi",
            "bath.temperature",
            "system.g",
            "system.kappa",
            "system.gamma",
        ] {
            assert!(list.iter().any(|m| m.contains(key)), "{key} not reported: {list:?}");
        }
    }

    #[test]
    fn every_violation_reported() {
        let text = BASE.replace("kappa = 0.5", "kappa = -1\ncolour = \"red\"").replace("xi = 2.23", "xi = 0")
            + "\n[engine]\ndt = -0.1\n[extra]\nx = 1\n";
        let Err(Error::Validation(list)) = RunConfig::parse(&text) else {
            panic!("expected a validation error");
        };
        for needle in ["system.kappa", "system.colour", "bath.xi", "engine.dt", "extra"] {
            assert!(list.iter().any(|m| m.contains(needle)), "{needle} not reported: {list:?}");
        }
    }

    #[test]
    fn mev_keys_convert() {
        let text = BASE.replace("g = 1.1", "g_mev = 2.0").replace("xi = 2.23", "xi_mev = 1.0");
        let c = RunConfig::parse(&text).unwrap();
        assert!((c.system.g - 2.0 * 1.5193).abs() < 1e-3);
        assert!((c.bath.xi - 1.5193).abs() < 1e-4);
        let both = BASE.replace("g = 1.1", "g = 1.1\ng_mev = 2.0");
        assert!(matches!(RunConfig::parse(&both), Err(Error::Validation(_))));
    }

    #[test]
    fn sweep_rules() {
        let base = BASE.replace("\"spectrum\"", "\"sweep\"");
        assert!(matches!(RunConfig::parse(&base), Err(Error::Validation(_))));
        let one = base.clone() + "\n[sweep]\nvariable = \"g\"\nvalues = [1.0]\n";
        assert!(matches!(RunConfig::parse(&one), Err(Error::Validation(_))));
        let ok = base.clone() + "\n[sweep]\nvariable = \"g\"\nvalues = [1.0, 2.0]\npin_kappa_to_4g = true\n";
        let c = RunConfig::parse(&ok).unwrap();
        assert!(c.sweep.unwrap().pin_kappa_to_4g);
        let spectrum_sweep = BASE.to_string() + "\n[sweep]\nvariable = \"g\"\nvalues = [1.0, 2.0]\n";
        assert!(matches!(RunConfig::parse(&spectrum_sweep), Err(Error::Validation(_))));
        let bad_pin = base + "\n[sweep]\nvariable = \"kappa\"\nvalues = [1.0, 2.0]\npin_kappa_to_4g = true\n";
        assert!(matches!(RunConfig::parse(&bad_pin), Err(Error::Validation(_))));
    }

    #[test]
    fn keywords_and_syntax() {
        let text = BASE.replace("gamma = 0.01", "gamma = 0.01\ngamma_star = 0.002\ndelta = \"detuned\"");
        let Err(Error::Validation(list)) = RunConfig::parse(&text) else {
            panic!("expected a validation error");
        };
        assert_eq!(list.len(), 1, "{list:?}");
        assert!(matches!(RunConfig::parse("[task"), Err(Error::Validation(_))));
        let rates = BASE.replace("\"spectrum\"", "\"rates\"").replace("gamma = 0.01", "gamma = 0.01\ndelta = 0.0");
        assert!(matches!(RunConfig::parse(&rates), Err(Error::Validation(_))));
    }

    #[test]
    fn regime_map_needs_no_physics() {
        let c = RunConfig::parse("[task]\nkind = \"regime-map\"\n").unwrap();
        assert_eq!(c.task, Task::RegimeMap);
        assert!(c.presets.is_empty());
        let bad = "[task]\nkind = \"regime-map\"\npresets = [\"unobtainium\"]\n";
        assert!(matches!(RunConfig::parse(bad), Err(Error::Validation(_))));
    }
}
