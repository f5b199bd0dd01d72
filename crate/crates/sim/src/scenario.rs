//! Strict `key = value` scenario files with one-level `[section]` headers.
//!
//! Every key has a home section and may also be written before the first
//! header. Unknown keys, keys the chosen `kind` does not use, duplicates and
//! malformed or out-of-range values are rejected with the offending line.
//! `#` starts a comment.

use std::collections::BTreeMap;

use cascade_core::dressed::LineId;
use cascade_core::qsystem::{SystemParams, DEFAULT_DEB_OVER_HBAR_OMEGA};

use crate::error::SimError;
use crate::runners::RunnerRegistry;

pub const SECTIONS: [&str; 4] = ["system", "lines", "grid", "pulse"];
const ROOT: &str = "";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    Finite,
    Positive,
    NonNegative,
    /// Integer ≥ 2.
    Points,
    Text,
    Line,
    /// Comma-separated, non-empty, no repeats.
    Lines,
}

impl ValueKind {
    fn describe(self) -> &'static str {
        match self {
            ValueKind::Finite => "a finite number",
            ValueKind::Positive => "a positive number",
            ValueKind::NonNegative => "a non-negative number",
            ValueKind::Points => "an integer of at least 2",
            ValueKind::Text => "a non-empty word",
            ValueKind::Line => "a line name such as L_plus or R0",
            ValueKind::Lines => "a comma-separated list of distinct line names",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KeySpec {
    pub name: &'static str,
    pub section: &'static str,
    pub kind: ValueKind,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
}

impl KeySpec {
    pub const fn new(name: &'static str, section: &'static str, kind: ValueKind, default: Option<&'static str>) -> Self {
        Self { name, section, kind, default }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Number(f64),
    Count(usize),
    Text(String),
    Line(LineId),
    Lines(Vec<LineId>),
}

impl Value {
    fn parse(kind: ValueKind, raw: &str) -> Option<Value> {
        let number = || raw.parse::<f64>().ok().filter(|x| x.is_finite());
        match kind {
            ValueKind::Finite => number().map(Value::Number),
            ValueKind::Positive => number().filter(|x| *x > 0.0).map(Value::Number),
            ValueKind::NonNegative => number().filter(|x| *x >= 0.0).map(Value::Number),
            ValueKind::Points => raw.parse::<usize>().ok().filter(|n| *n >= 2).map(Value::Count),
            ValueKind::Text => {
                let ok = !raw.is_empty() && raw.chars().all(|c| c.is_ascii_alphanumeric() || "_-./".contains(c));
                ok.then(|| Value::Text(raw.to_string()))
            }
            ValueKind::Line => raw.parse::<LineId>().ok().map(Value::Line),
            ValueKind::Lines => {
                let lines: Option<Vec<LineId>> = raw.split(',').map(|s| s.trim().parse::<LineId>().ok()).collect();
                lines.filter(|v| !v.is_empty() && v.iter().enumerate().all(|(i, l)| !v[..i].contains(l))).map(Value::Lines)
            }
        }
    }

    fn render(&self) -> String {
        match self {
            Value::Number(x) => format!("{x}"),
            Value::Count(n) => n.to_string(),
            Value::Text(s) => s.clone(),
            Value::Line(l) => l.to_string(),
            Value::Lines(ls) => ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", "),
        }
    }
}

/// Keys every kind accepts.
pub const COMMON_KEYS: &[KeySpec] = &[
    KeySpec::new("kind", ROOT, ValueKind::Text, None),
    KeySpec::new("output", ROOT, ValueKind::Text, Some("")),
    KeySpec::new("propagator", ROOT, ValueKind::Text, Some("rk4")),
    KeySpec::new("delta_eb_ueV", "system", ValueKind::Positive, Some("2000")),
    KeySpec::new("delta_fss_ueV", "system", ValueKind::Finite, Some("50")),
    KeySpec::new("delta_laser_ueV", "system", ValueKind::Finite, Some("0")),
    KeySpec::new("hbar_omega_ueV", "system", ValueKind::NonNegative, Some("")),
    KeySpec::new("deb_over_hbar_omega", "system", ValueKind::Positive, Some("")),
    KeySpec::new("tau_xx_ps", "system", ValueKind::Positive, Some("314")),
    KeySpec::new("tau_x_ps", "system", ValueKind::Positive, Some("742")),
    KeySpec::new("gamma_deph_per_ps", "system", ValueKind::NonNegative, Some("0")),
    KeySpec::new("e_x_ueV", "system", ValueKind::Positive, Some("1330000")),
];

#[derive(Clone, Debug)]
struct Entry {
    value: Value,
    /// Line in the file, `None` when the default was applied.
    line: Option<usize>,
}

/// A fully validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub kind: String,
    pub params: SystemParams,
    /// File-name prefix of the outputs.
    pub output: String,
    pub propagator: String,
    entries: BTreeMap<&'static str, Entry>,
}

impl Scenario {
    fn entry(&self, key: &str) -> &Entry {
        self.entries.get(key).unwrap_or_else(|| panic!("runner read undeclared key `{key}`"))
    }

    pub fn number(&self, key: &str) -> f64 {
        match self.entry(key).value {
            Value::Number(x) => x,
            ref v => panic!("`{key}` is not numeric: {v:?}"),
        }
    }

    pub fn count(&self, key: &str) -> usize {
        match self.entry(key).value {
            Value::Count(n) => n,
            ref v => panic!("`{key}` is not a count: {v:?}"),
        }
    }

    pub fn line(&self, key: &str) -> LineId {
        match self.entry(key).value {
            Value::Line(l) => l,
            ref v => panic!("`{key}` is not a line: {v:?}"),
        }
    }

    pub fn lines(&self, key: &str) -> Vec<LineId> {
        match &self.entry(key).value {
            Value::Lines(ls) => ls.clone(),
            v => panic!("`{key}` is not a line list: {v:?}"),
        }
    }

    /// Whether `key` was written in the file (as opposed to defaulted).
    pub fn is_set(&self, key: &str) -> bool {
        self.entries.get(key).is_some_and(|e| e.line.is_some())
    }

    /// Parse error pointing at `key`'s line.
    pub fn error_at(&self, key: &str, message: impl Into<String>) -> SimError {
        SimError::parse(self.entries.get(key).and_then(|e| e.line), message)
    }

    /// Resolved settings in key order, for the run manifest.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .filter(|(k, e)| !matches!(&e.value, Value::Text(s) if s.is_empty()) || **k == "output")
            .map(|(k, e)| (k.to_string(), e.value.render()))
            .collect()
    }
}

struct RawEntry {
    value: String,
    line: usize,
    section: &'static str,
}

fn tokenize(text: &str) -> Result<BTreeMap<String, RawEntry>, SimError> {
    let mut out: BTreeMap<String, RawEntry> = BTreeMap::new();
    let mut section = ROOT;
    for (idx, raw) in text.lines().enumerate() {
        let n = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| SimError::parse(Some(n), "unterminated section header"))?.trim();
            section = SECTIONS
                .iter()
                .find(|s| **s == name)
                .ok_or_else(|| SimError::parse(Some(n), format!("unknown section [{name}] (expected one of: {})", SECTIONS.join(", "))))?;
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SimError::parse(Some(n), format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(SimError::parse(Some(n), format!("invalid key `{key}`")));
        }
        if value.is_empty() {
            return Err(SimError::parse(Some(n), format!("`{key}` has no value")));
        }
        if let Some(prev) = out.get(key) {
            return Err(SimError::parse(Some(n), format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
        out.insert(key.to_string(), RawEntry { value: value.to_string(), line: n, section });
    }
    Ok(out)
}

pub fn parse_scenario(text: &str, registry: &RunnerRegistry) -> Result<Scenario, SimError> {
    let raw = tokenize(text)?;
    let kinds = registry.kinds().join(", ");
    let kind_entry = raw.get("kind").ok_or_else(|| SimError::parse(None, format!("missing required key `kind` (one of: {kinds})")))?;
    if kind_entry.section != ROOT {
        return Err(SimError::parse(Some(kind_entry.line), "`kind` must appear before any section header"));
    }
    let runner = registry
        .get(&kind_entry.value)
        .ok_or_else(|| SimError::parse(Some(kind_entry.line), format!("unknown kind `{}` (one of: {kinds})", kind_entry.value)))?;
    let excluded = runner.excluded_keys();
    let defs: Vec<&KeySpec> = COMMON_KEYS.iter().filter(|s| !excluded.contains(&s.name)).chain(runner.keys()).collect();

    for (key, e) in &raw {
        let def = defs.iter().find(|s| s.name == key).ok_or_else(|| {
            let why = if excluded.contains(&key.as_str()) { "is swept by" } else { "is not used by" };
            SimError::parse(Some(e.line), format!("unknown key `{key}`: it {why} kind `{}`", runner.kind()))
        })?;
        if e.section != ROOT && e.section != def.section {
            let home = if def.section == ROOT { "the top of the file".to_string() } else { format!("[{}]", def.section) };
            return Err(SimError::parse(Some(e.line), format!("key `{key}` belongs in {home}, found in [{}]", e.section)));
        }
    }

    let mut entries = BTreeMap::new();
    for def in &defs {
        let (text, line) = match raw.get(def.name) {
            Some(e) => (e.value.as_str(), Some(e.line)),
            None => match def.default {
                Some(d) => (d, None),
                None => return Err(SimError::parse(None, format!("missing required key `{}` for kind `{}`", def.name, runner.kind()))),
            },
        };
        // Empty defaults stand for "not set"; they are kept as empty text.
        let value = if line.is_none() && text.is_empty() {
            Value::Text(String::new())
        } else {
            Value::parse(def.kind, text).ok_or_else(|| {
                SimError::parse(line, format!("`{}` expects {}, got `{text}`", def.name, def.kind.describe()))
            })?
        };
        entries.insert(def.name, Entry { value, line });
    }

    let mut scenario = Scenario {
        kind: runner.kind().to_string(),
        params: SystemParams::default(),
        output: String::new(),
        propagator: String::new(),
        entries,
    };
    scenario.output = match &scenario.entry("output").value {
        Value::Text(s) if !s.is_empty() => s.clone(),
        _ => runner.kind().to_string(),
    };
    scenario.propagator = match &scenario.entry("propagator").value {
        Value::Text(s) => s.clone(),
        _ => unreachable!("propagator is text"),
    };
    if !registry.propagators().names().contains(&scenario.propagator.as_str()) {
        return Err(scenario.error_at(
            "propagator",
            format!("unknown propagator `{}` (one of: {})", scenario.propagator, registry.propagators().names().join(", ")),
        ));
    }
    scenario.params = system_params(&scenario)?;
    runner.check(&scenario)?;
    Ok(scenario)
}

fn system_params(sc: &Scenario) -> Result<SystemParams, SimError> {
    let num = |k: &str| sc.entries.get(k).and_then(|e| if let Value::Number(x) = e.value { Some(x) } else { None });
    let delta_eb = num("delta_eb_ueV").unwrap_or(2000.0);
    if sc.is_set("hbar_omega_ueV") && sc.is_set("deb_over_hbar_omega") {
        return Err(sc.error_at("deb_over_hbar_omega", "set either `hbar_omega_ueV` or `deb_over_hbar_omega`, not both"));
    }
    let hbar_omega = match (num("hbar_omega_ueV"), num("deb_over_hbar_omega")) {
        (Some(w), _) => w,
        (None, Some(r)) => delta_eb / r,
        (None, None) => delta_eb / DEFAULT_DEB_OVER_HBAR_OMEGA,
    };
    let d = SystemParams::default();
    let p = SystemParams {
        delta_eb,
        delta_fss: num("delta_fss_ueV").unwrap_or(d.delta_fss),
        hbar_omega,
        delta_laser: num("delta_laser_ueV").unwrap_or(d.delta_laser),
        tau_xx: num("tau_xx_ps").unwrap_or(d.tau_xx),
        tau_x: num("tau_x_ps").unwrap_or(d.tau_x),
        gamma_deph: num("gamma_deph_per_ps").unwrap_or(d.gamma_deph),
        e_x: num("e_x_ueV").unwrap_or(d.e_x),
    };
    p.validate().map_err(|e| SimError::parse(None, e.to_string()))?;
    Ok(p)
}
