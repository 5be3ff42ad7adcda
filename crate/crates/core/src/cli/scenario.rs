//! Scenario files: flat `key = value` lines grouped under `[section]`
//! headers.
//!
//! ```text
//! # comment
//! name = fig1
//!
//! [system]
//! epsilon = 0
//! delta = 4
//! n_atoms = 1
//!
//! [bath]
//! g = 0.05
//! omega_c = 5
//! beta = 1                  # optional, default 1
//!
//! [preparation]
//! state = down_z            # down_z | up_z | plus_x, default down_z
//!
//! [simulation]
//! t_max = 2
//! dt = 0.0015               # optional, default 1e-3·2π/Δ̃ (shrunk to divide t_max)
//! kernel_grid_dt = 0.00075  # optional, default dt/2
//! record_every = 1          # optional, default 1
//! correlations = both       # both | with | without, default both
//!
//! [engines]
//! master_equation = true
//! exact_dephasing = true
//! short_time = false
//!
//! [output]
//! observables = jz, jz2     # primary observables, default jz; CSVs carry all four
//! ```
//!
//! Keys are unique within a section, unknown keys are errors, and `#`
//! starts a comment anywhere on a line. [`Scenario::to_text`] writes every
//! field explicitly so parsing its output gives back the same scenario.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::bath::BathSpec;
use crate::corr_kernel::Preparation;
use crate::error::{Error, Result};
use crate::master_equation::SimConfig;
use crate::spin_algebra::SystemParams;

pub const OBSERVABLES: [&str; 4] = ["jz", "jz2", "jy", "jx"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    MasterEquation,
    ExactDephasing,
    ShortTime,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::MasterEquation, Engine::ExactDephasing, Engine::ShortTime];

    pub fn key(self) -> &'static str {
        match self {
            Engine::MasterEquation => "master_equation",
            Engine::ExactDephasing => "exact_dephasing",
            Engine::ShortTime => "short_time",
        }
    }

    /// Tag used in output file names.
    pub fn tag(self) -> &'static str {
        match self {
            Engine::MasterEquation => "me",
            Engine::ExactDephasing => "exact",
            Engine::ShortTime => "short",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    Both,
    With,
    Without,
}

impl CorrelationMode {
    pub fn settings(self) -> &'static [bool] {
        match self {
            CorrelationMode::Both => &[true, false],
            CorrelationMode::With => &[true],
            CorrelationMode::Without => &[false],
        }
    }

    fn name(self) -> &'static str {
        match self {
            CorrelationMode::Both => "both",
            CorrelationMode::With => "with",
            CorrelationMode::Without => "without",
        }
    }
}

impl FromStr for CorrelationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "both" => Ok(CorrelationMode::Both),
            "with" => Ok(CorrelationMode::With),
            "without" => Ok(CorrelationMode::Without),
            _ => Err(format!("expected both, with or without, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub sys: SystemParams,
    pub bath: BathSpec,
    pub prep: Preparation,
    pub sim: SimConfig,
    pub correlations: CorrelationMode,
    pub engines: Vec<Engine>,
    pub outputs: Vec<String>,
}

impl Scenario {
    /// Engine/parameter compatibility.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        {
            return Err(Error::Config(format!(
                "scenario name '{}' must be non-empty and use only [A-Za-z0-9_.-]",
                self.name
            )));
        }
        self.sys.validate()?;
        self.bath.validate()?;
        self.sim.validate()?;
        if self.engines.is_empty() {
            return Err(Error::Config("no engine enabled".into()));
        }
        if self.engines.contains(&Engine::ExactDephasing) && self.sys.epsilon != 0.0 {
            return Err(Error::Config(format!(
                "exact_dephasing needs epsilon = 0, got {}",
                self.sys.epsilon
            )));
        }
        if self.engines.contains(&Engine::ShortTime) && self.prep != Preparation::DownZ {
            return Err(Error::Config(format!(
                "short_time needs the down_z preparation, got {}",
                self.prep
            )));
        }
        for o in &self.outputs {
            if !OBSERVABLES.contains(&o.as_str()) {
                return Err(Error::Config(format!("unknown observable '{o}'")));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.into_scenario()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let on = |e: Engine| self.engines.contains(&e);
        // Infallible: writing to a String.
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "\n[system]");
        let _ = writeln!(s, "epsilon = {}", self.sys.epsilon);
        let _ = writeln!(s, "delta = {}", self.sys.delta);
        let _ = writeln!(s, "n_atoms = {}", self.sys.n_atoms);
        let _ = writeln!(s, "\n[bath]");
        let _ = writeln!(s, "g = {}", self.bath.g);
        let _ = writeln!(s, "omega_c = {}", self.bath.omega_c);
        let _ = writeln!(s, "beta = {}", self.bath.beta);
        let _ = writeln!(s, "\n[preparation]");
        let _ = writeln!(s, "state = {}", self.prep);
        let _ = writeln!(s, "\n[simulation]");
        let _ = writeln!(s, "t_max = {}", self.sim.t_max);
        let _ = writeln!(s, "dt = {}", self.sim.dt);
        let _ = writeln!(s, "kernel_grid_dt = {}", self.sim.kernel_grid_dt);
        let _ = writeln!(s, "record_every = {}", self.sim.record_every);
        let _ = writeln!(s, "correlations = {}", self.correlations.name());
        let _ = writeln!(s, "\n[engines]");
        for e in Engine::ALL {
            let _ = writeln!(s, "{} = {}", e.key(), on(e));
        }
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "observables = {}", self.outputs.join(", "));
        s
    }
}

/// A value with the position of its first character.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

#[derive(Debug, Default)]
struct Document {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

const SECTIONS: [(&str, &[&str]); 7] = [
    ("", &["name"]),
    ("system", &["epsilon", "delta", "n_atoms"]),
    ("bath", &["g", "omega_c", "beta"]),
    ("preparation", &["state"]),
    (
        "simulation",
        &["t_max", "dt", "kernel_grid_dt", "record_every", "correlations"],
    ),
    ("engines", &["master_equation", "exact_dephasing", "short_time"]),
    ("output", &["observables"]),
];

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut doc = Document::default();
        let mut section = String::new();
        doc.sections.insert(String::new(), BTreeMap::new());
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            let col = indent + 1;
            if let Some(rest) = trimmed.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(parse_err(line_no, col, "unterminated section header"));
                };
                let name = name.trim();
                if !SECTIONS.iter().any(|(s, _)| !s.is_empty() && *s == name) {
                    return Err(parse_err(line_no, col + 1, format!("unknown section [{name}]")));
                }
                if doc.sections.contains_key(name) {
                    return Err(parse_err(line_no, col, format!("duplicate section [{name}]")));
                }
                section = name.to_string();
                doc.sections.insert(section.clone(), BTreeMap::new());
                continue;
            }
            let Some(eq) = trimmed.find('=') else {
                return Err(parse_err(line_no, col, "expected 'key = value'"));
            };
            let key = trimmed[..eq].trim();
            let value_part = &trimmed[eq + 1..];
            let value = value_part.trim();
            let value_col = col + eq + 1 + (value_part.len() - value_part.trim_start().len());
            if key.is_empty() {
                return Err(parse_err(line_no, col, "missing key"));
            }
            let allowed = SECTIONS
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, keys)| *keys)
                .unwrap_or(&[]);
            if !allowed.contains(&key) {
                let place = if section.is_empty() {
                    "at top level".to_string()
                } else {
                    format!("in [{section}]")
                };
                return Err(parse_err(line_no, col, format!("unknown key '{key}' {place}")));
            }
            if value.is_empty() {
                return Err(parse_err(line_no, value_col, format!("missing value for '{key}'")));
            }
            let table = doc.sections.get_mut(&section).expect("section inserted above");
            if table.contains_key(key) {
                return Err(parse_err(line_no, col, format!("duplicate key '{key}'")));
            }
            table.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line: line_no,
                    column: value_col,
                },
            );
        }
        Ok(doc)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|t| t.get(key))
    }

    fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| parse_err(e.line, e.column, format!("invalid value for '{key}': {err}"))),
        }
    }

    fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)?.ok_or_else(|| {
            let place = if section.is_empty() {
                "at top level".to_string()
            } else {
                format!("in [{section}]")
            };
            Error::Config(format!("missing required key '{key}' {place}"))
        })
    }

    fn into_scenario(self) -> Result<Scenario> {
        let name: String = self.require("", "name")?;
        let sys = SystemParams::new(
            self.require("system", "epsilon")?,
            self.require("system", "delta")?,
            self.require("system", "n_atoms")?,
        )?;
        let bath = BathSpec::new(
            self.require("bath", "g")?,
            self.require("bath", "omega_c")?,
            self.get("bath", "beta")?.unwrap_or(1.0),
        )?;
        let prep = match self.entry("preparation", "state") {
            None => Preparation::DownZ,
            Some(e) => e
                .value
                .parse()
                .map_err(|err: Error| parse_err(e.line, e.column, err.to_string()))?,
        };
        let t_max: f64 = self.require("simulation", "t_max")?;
        let mut sim = match self.get::<f64>("simulation", "dt")? {
            Some(dt) => SimConfig::with_step(t_max, dt)?,
            None => SimConfig::new(&sys, t_max)?,
        };
        if let Some(k) = self.get("simulation", "kernel_grid_dt")? {
            sim.kernel_grid_dt = k;
        }
        if let Some(r) = self.get("simulation", "record_every")? {
            sim.record_every = r;
        }
        let correlations = self
            .get("simulation", "correlations")?
            .unwrap_or(CorrelationMode::Both);
        let mut engines = Vec::new();
        for e in Engine::ALL {
            if self.get::<bool>("engines", e.key())?.unwrap_or(false) {
                engines.push(e);
            }
        }
        let outputs = match self.entry("output", "observables") {
            None => vec!["jz".to_string()],
            Some(e) => {
                let list: Vec<String> = e.value.split(',').map(|s| s.trim().to_string()).collect();
                if let Some(bad) = list.iter().find(|o| !OBSERVABLES.contains(&o.as_str())) {
                    return Err(parse_err(e.line, e.column, format!("unknown observable '{bad}'")));
                }
                list
            }
        };
        let scenario = Scenario {
            name,
            sys,
            bath,
            prep,
            sim,
            correlations,
            engines,
            outputs,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
