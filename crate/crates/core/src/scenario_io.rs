//! File formats: network, scenario and parameter JSON, trace CSV, and the
//! ASCII timeline.
//!
//! Parsing is strict. Unknown fields, wrong types and unresolved names are
//! hard errors carrying a JSON path and a line/column. Serialized JSON uses
//! sorted keys so output is byte-stable.
//!
//! Network:
//! ```json
//! {"concepts": [{"name": "salt", "layer": 1, "patterns": [["tasting", "salty"], ["looking", "white"]]}]}
//! ```
//! Scenario (`hold` is `"converge"` or a sweep count):
//! ```json
//! {"phases": [{"clamp": {"looking": 1, "white": 1}, "hold": "converge"}]}
//! ```
//! Params: a flat object of [`EngineParams`] fields, all optional.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{self, DeserializeOwned, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::engine::{EngineParams, ErrorRouting, Hold, Phase, Trace};
use crate::model::{ClampError, ConceptSpec, NetworkSpec, ValidatedNetwork};

pub const TRACE_HEADER: [&str; 5] = ["phase", "sweep", "kind", "name", "value"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("syntax error at line {line} column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown field `{field}` at {path} (line {line} column {column})")]
    UnknownField {
        field: String,
        path: String,
        line: usize,
        column: usize,
    },
    #[error("type mismatch at {path} (line {line} column {column}): {message}")]
    TypeMismatch {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing field at {path} (line {line} column {column}): {message}")]
    MissingField {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value at {path} (line {line} column {column}): {message}")]
    InvalidValue {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

fn strict_from_str<T: DeserializeOwned>(text: &str) -> Result<T, FormatError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        classify(e.into_inner(), path)
    })?;
    de.end().map_err(|e| classify(e, ".".into()))?;
    Ok(value)
}

fn classify(e: serde_json::Error, path: String) -> FormatError {
    let (line, column) = (e.line(), e.column());
    let full = e.to_string();
    let suffix = format!(" at line {line} column {column}");
    let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
    if !e.is_data() {
        return FormatError::Syntax {
            line,
            column,
            message,
        };
    }
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let field = rest.split('`').next().unwrap_or_default().to_string();
        FormatError::UnknownField {
            field,
            path,
            line,
            column,
        }
    } else if message.starts_with("invalid type") {
        FormatError::TypeMismatch {
            path,
            line,
            column,
            message,
        }
    } else if message.starts_with("missing field") {
        FormatError::MissingField {
            path,
            line,
            column,
            message,
        }
    } else {
        FormatError::InvalidValue {
            path,
            line,
            column,
            message,
        }
    }
}

fn to_canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json's Value map is a BTreeMap, so this sorts every object's keys.
    let v = serde_json::to_value(value).expect("file types always serialize");
    let mut out = serde_json::to_string_pretty(&v).expect("Value always serializes");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Network

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    concepts: Vec<ConceptEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptEntry {
    name: String,
    layer: usize,
    patterns: Vec<Vec<String>>,
}

pub fn parse_network_file(text: &str) -> Result<NetworkSpec, FormatError> {
    let file: NetworkFile = strict_from_str(text)?;
    Ok(NetworkSpec {
        concepts: file
            .concepts
            .into_iter()
            .map(|c| ConceptSpec {
                name: c.name,
                layer: c.layer,
                patterns: c.patterns,
            })
            .collect(),
    })
}

pub fn write_network_file(spec: &NetworkSpec) -> String {
    to_canonical_json(&NetworkFile {
        concepts: spec
            .concepts
            .iter()
            .map(|c| ConceptEntry {
                name: c.name.clone(),
                layer: c.layer,
                patterns: c.patterns.clone(),
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Scenario

/// A bottom unit's clamp value, written as `0` or `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Bit(bool);

impl Serialize for Bit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(self.0))
    }
}

impl<'de> Deserialize<'de> for Bit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct BitVisitor;
        impl<'de> Visitor<'de> for BitVisitor {
            type Value = Bit;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("0 or 1")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Bit, E> {
                match v {
                    0 => Ok(Bit(false)),
                    1 => Ok(Bit(true)),
                    _ => Err(E::invalid_value(de::Unexpected::Unsigned(v), &self)),
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Bit, E> {
                Err(E::invalid_value(de::Unexpected::Signed(v), &self))
            }
        }
        d.deserialize_u64(BitVisitor)
    }
}

struct HoldField(Hold);

impl Serialize for HoldField {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Hold::Converge => s.serialize_str("converge"),
            Hold::Sweeps(n) => s.serialize_u64(n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for HoldField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct HoldVisitor;
        impl<'de> Visitor<'de> for HoldVisitor {
            type Value = HoldField;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"converge\" or a positive sweep count")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<HoldField, E> {
                if v == "converge" {
                    Ok(HoldField(Hold::Converge))
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<HoldField, E> {
                if v == 0 {
                    return Err(E::invalid_value(de::Unexpected::Unsigned(v), &self));
                }
                usize::try_from(v)
                    .map(|n| HoldField(Hold::Sweeps(n)))
                    .map_err(|_| E::invalid_value(de::Unexpected::Unsigned(v), &self))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<HoldField, E> {
                Err(E::invalid_value(de::Unexpected::Signed(v), &self))
            }
        }
        d.deserialize_any(HoldVisitor)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    phases: Vec<PhaseEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseEntry {
    clamp: BTreeMap<String, Bit>,
    hold: HoldField,
}

/// Scenario phases by name, checked against a network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub phases: Vec<ScenarioPhase>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioPhase {
    pub clamp: BTreeMap<String, bool>,
    pub hold: Hold,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("phase {phase}: unknown element '{name}'")]
    UnknownElement { phase: usize, name: String },
    #[error("phase {phase}: '{name}' is not a layer-0 concept and cannot be clamped")]
    NonBottomClamp { phase: usize, name: String },
    #[error("scenario has no phases")]
    EmptyScenario,
}

impl ScenarioSpec {
    /// Resolves names to ids. Only fails if `net` is not the network the
    /// scenario was parsed against.
    pub fn phases_for(&self, net: &ValidatedNetwork) -> Result<Vec<Phase>, ScenarioError> {
        self.phases
            .iter()
            .enumerate()
            .map(|(i, ph)| {
                let mut clamp = BTreeMap::new();
                for (name, &on) in &ph.clamp {
                    let id =
                        net.resolve_bottom(std::slice::from_ref(name))
                            .map_err(|e| match e {
                                ClampError::UnknownElement(name) => {
                                    ScenarioError::UnknownElement { phase: i + 1, name }
                                }
                                ClampError::NonBottomClamp(name) => {
                                    ScenarioError::NonBottomClamp { phase: i + 1, name }
                                }
                            })?;
                    clamp.insert(*id.iter().next().expect("one name resolved"), on);
                }
                Ok(Phase {
                    clamp,
                    hold: ph.hold,
                })
            })
            .collect()
    }
}

pub fn parse_scenario_file(
    text: &str,
    net: &ValidatedNetwork,
) -> Result<ScenarioSpec, ScenarioError> {
    let file: ScenarioFile = strict_from_str(text)?;
    if file.phases.is_empty() {
        return Err(ScenarioError::EmptyScenario);
    }
    let spec = ScenarioSpec {
        phases: file
            .phases
            .into_iter()
            .map(|p| ScenarioPhase {
                clamp: p.clamp.into_iter().map(|(k, v)| (k, v.0)).collect(),
                hold: p.hold.0,
            })
            .collect(),
    };
    spec.phases_for(net)?;
    Ok(spec)
}

pub fn write_scenario_file(spec: &ScenarioSpec) -> String {
    to_canonical_json(&ScenarioFile {
        phases: spec
            .phases
            .iter()
            .map(|p| PhaseEntry {
                clamp: p.clamp.iter().map(|(k, &v)| (k.clone(), Bit(v))).collect(),
                hold: HoldField(p.hold),
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Params

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    w_ff: Option<f64>,
    w_self: Option<f64>,
    w_lat: Option<f64>,
    w_err: Option<f64>,
    theta: Option<f64>,
    tau: Option<f64>,
    max_sweeps: Option<usize>,
    error_routing: Option<ErrorRouting>,
}

/// Reads a params file; absent input or absent fields take the defaults.
/// Invariants are checked later, when an engine is built.
pub fn parse_params(text: Option<&str>) -> Result<EngineParams, FormatError> {
    let d = EngineParams::default();
    let Some(text) = text else {
        return Ok(d);
    };
    let f: ParamsFile = strict_from_str(text)?;
    Ok(EngineParams {
        w_ff: f.w_ff.unwrap_or(d.w_ff),
        w_self: f.w_self.unwrap_or(d.w_self),
        w_lat: f.w_lat.unwrap_or(d.w_lat),
        w_err: f.w_err.unwrap_or(d.w_err),
        theta: f.theta.unwrap_or(d.theta),
        tau: f.tau.unwrap_or(d.tau),
        max_sweeps: f.max_sweeps.unwrap_or(d.max_sweeps),
        error_routing: f.error_routing.unwrap_or(d.error_routing),
    })
}

pub fn write_params(params: &EngineParams) -> String {
    to_canonical_json(params)
}

// ---------------------------------------------------------------------------
// Trace CSV

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnitKind {
    Concept,
    Omission,
    Commission,
}

impl UnitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitKind::Concept => "concept",
            UnitKind::Omission => "omission",
            UnitKind::Commission => "commission",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "concept" => Some(UnitKind::Concept),
            "omission" => Some(UnitKind::Omission),
            "commission" => Some(UnitKind::Commission),
            _ => None,
        }
    }
}

/// One unit's value at one sweep. Phases and sweeps count from 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceRow {
    pub phase: usize,
    pub sweep: usize,
    pub kind: UnitKind,
    pub name: String,
    pub value: bool,
}

/// Canonically ordered trace rows: by (phase, sweep, kind, name), one row
/// per key.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceTable {
    rows: Vec<TraceRow>,
}

impl TraceTable {
    /// Sorts rows into canonical order; fails on a repeated key.
    pub fn from_rows(mut rows: Vec<TraceRow>) -> Result<Self, TraceCsvError> {
        rows.sort();
        for w in rows.windows(2) {
            if (w[0].phase, w[0].sweep, w[0].kind, &w[0].name)
                == (w[1].phase, w[1].sweep, w[1].kind, &w[1].name)
            {
                return Err(TraceCsvError::SchemaMismatch {
                    line: None,
                    message: format!(
                        "duplicate row for phase {} sweep {} {} {}",
                        w[1].phase,
                        w[1].sweep,
                        w[1].kind.as_str(),
                        w[1].name
                    ),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn value(&self, phase: usize, sweep: usize, kind: UnitKind, name: &str) -> Option<bool> {
        self.rows
            .binary_search_by(|r| {
                (r.phase, r.sweep, r.kind, r.name.as_str()).cmp(&(phase, sweep, kind, name))
            })
            .ok()
            .map(|i| self.rows[i].value)
    }
}

impl Trace {
    pub fn to_table(&self) -> TraceTable {
        let mut rows = Vec::new();
        for (p, phase) in self.phases.iter().enumerate() {
            for (s, snap) in phase.snapshots.iter().enumerate() {
                for (i, unit) in self.units.iter().enumerate() {
                    let mut push = |kind, value| {
                        rows.push(TraceRow {
                            phase: p + 1,
                            sweep: s + 1,
                            kind,
                            name: unit.name.clone(),
                            value,
                        })
                    };
                    push(UnitKind::Concept, snap.activation[i]);
                    if unit.has_error_units {
                        push(UnitKind::Omission, snap.omission[i]);
                        push(UnitKind::Commission, snap.commission[i]);
                    }
                }
            }
        }
        TraceTable::from_rows(rows).expect("unit names are unique")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceCsvError {
    #[error("CSV syntax error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Syntax { line: Option<u64>, message: String },
    #[error("trace schema mismatch{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    SchemaMismatch { line: Option<u64>, message: String },
}

pub fn write_trace_csv(trace: &Trace) -> String {
    write_table_csv(&trace.to_table())
}

pub fn write_table_csv(table: &TraceTable) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(TRACE_HEADER).expect("in-memory write");
    for r in table.rows() {
        w.write_record([
            r.phase.to_string().as_str(),
            r.sweep.to_string().as_str(),
            r.kind.as_str(),
            r.name.as_str(),
            if r.value { "1" } else { "0" },
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("input was UTF-8")
}

pub fn read_trace_csv(text: &str) -> Result<TraceTable, TraceCsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();

    let syntax = |e: csv::Error| TraceCsvError::Syntax {
        line: e.position().map(|p| p.line()),
        message: e.to_string(),
    };
    let header = records
        .next()
        .ok_or_else(|| TraceCsvError::SchemaMismatch {
            line: Some(1),
            message: "missing header".into(),
        })?
        .map_err(syntax)?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(TraceCsvError::SchemaMismatch {
            line: Some(1),
            message: format!("header must be `{}`", TRACE_HEADER.join(",")),
        });
    }

    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(syntax)?;
        let line = rec.position().map(|p| p.line());
        let bad = |message: String| TraceCsvError::SchemaMismatch { line, message };
        let index = |field: &str, what: &str| -> Result<usize, TraceCsvError> {
            match field.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(bad(format!(
                    "{what} must be a positive integer, got `{field}`"
                ))),
            }
        };
        let phase = index(&rec[0], "phase")?;
        let sweep = index(&rec[1], "sweep")?;
        let kind =
            UnitKind::parse(&rec[2]).ok_or_else(|| bad(format!("unknown kind `{}`", &rec[2])))?;
        let name = rec[3].to_string();
        if name.is_empty() {
            return Err(bad("empty unit name".into()));
        }
        let value = match &rec[4] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("value must be 0 or 1, got `{other}`"))),
        };
        rows.push(TraceRow {
            phase,
            sweep,
            kind,
            name,
            value,
        });
    }
    TraceTable::from_rows(rows)
}

// ---------------------------------------------------------------------------
// Timeline

/// One line per unit (sorted by name), one column per sweep. `#` active,
/// `o` commission error, `g` omission error, `.` silent; `|` separates
/// phases.
pub fn render_ascii_timeline(table: &TraceTable) -> String {
    let names: BTreeSet<&str> = table.rows().iter().map(|r| r.name.as_str()).collect();
    let mut sweeps_per_phase: BTreeMap<usize, usize> = BTreeMap::new();
    for r in table.rows() {
        let e = sweeps_per_phase.entry(r.phase).or_default();
        *e = (*e).max(r.sweep);
    }
    let width = names.iter().map(|n| n.chars().count()).max().unwrap_or(0);

    let mut out = String::new();
    for name in names {
        out.push_str(name);
        out.extend(std::iter::repeat_n(' ', width - name.chars().count() + 1));
        out.push('|');
        for (&phase, &sweeps) in &sweeps_per_phase {
            for sweep in 1..=sweeps {
                let on = |kind| table.value(phase, sweep, kind, name) == Some(true);
                out.push(if on(UnitKind::Commission) {
                    'o'
                } else if on(UnitKind::Omission) {
                    'g'
                } else if on(UnitKind::Concept) {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('|');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::model::{canonical_network, validate_network};

    const SALT: &str = include_str!("../examples/salt.json");
    const SALT_REJECT: &str = include_str!("../examples/salt_reject.json");

    #[test]
    fn canonical_network_file() {
        let spec = parse_network_file(SALT).unwrap();
        assert_eq!(spec.concepts.len(), 7);
        let net = validate_network(&spec).unwrap();
        assert_eq!(net.pattern_count(), 4);
        assert_eq!(net, canonical_network());
    }

    #[test]
    fn empty_network_file_is_syntax_error() {
        assert!(matches!(
            parse_network_file(""),
            Err(FormatError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_network_file("{\"concepts\": [] } trailing"),
            Err(FormatError::Syntax { .. })
        ));
    }

    #[test]
    fn integer_element_is_type_mismatch() {
        let text = r#"{"concepts": [
  {"name": "a", "layer": 0, "patterns": []},
  {"name": "b", "layer": 1, "patterns": [["a", 3]]}
]}"#;
        match parse_network_file(text) {
            Err(FormatError::TypeMismatch {
                path, line, column, ..
            }) => {
                assert_eq!(path, "concepts[1].patterns[0][1]");
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_network_field() {
        let text = r#"{"concepts": [{"name": "a", "layer": 0, "patterns": [], "weight": 2}]}"#;
        assert!(matches!(
            parse_network_file(text),
            Err(FormatError::UnknownField { ref field, .. }) if field == "weight"
        ));
        assert!(matches!(
            parse_network_file(r#"{"concepts": [{"name": "a", "layer": 0}]}"#),
            Err(FormatError::MissingField { .. })
        ));
    }

    #[test]
    fn salt_scenario_file() {
        let net = canonical_network();
        let sc = parse_scenario_file(SALT_REJECT, &net).unwrap();
        assert_eq!(sc.phases.len(), 2);
        assert_eq!(sc.phases[1].clamp.len(), 3);
        assert_eq!(sc.phases[1].hold, Hold::Converge);
    }

    #[test]
    fn scenario_errors() {
        let net = canonical_network();
        let parse = |t: &str| parse_scenario_file(t, &net);
        assert_eq!(
            parse(r#"{"phases": [{"clamp": {"salt": 1}, "hold": "converge"}]}"#),
            Err(ScenarioError::NonBottomClamp {
                phase: 1,
                name: "salt".into()
            })
        );
        assert_eq!(
            parse(r#"{"phases": [{"clamp": {"umami": 1}, "hold": "converge"}]}"#),
            Err(ScenarioError::UnknownElement {
                phase: 1,
                name: "umami".into()
            })
        );
        assert_eq!(
            parse(r#"{"phases": []}"#),
            Err(ScenarioError::EmptyScenario)
        );
        assert!(matches!(
            parse(r#"{"phases": [{"clamp": {"white": 2}, "hold": "converge"}]}"#),
            Err(ScenarioError::Format(FormatError::InvalidValue { .. }))
        ));
        assert!(matches!(
            parse(r#"{"phases": [{"clamp": {}, "hold": 0}]}"#),
            Err(ScenarioError::Format(FormatError::InvalidValue { .. }))
        ));
        assert!(matches!(
            parse(r#"{"phases": [{"clamp": {}, "hold": "forever"}]}"#),
            Err(ScenarioError::Format(FormatError::InvalidValue { .. }))
        ));
        assert!(matches!(
            parse(r#"{"phases": [{"clamp": {}, "hold": 3, "note": "x"}]}"#),
            Err(ScenarioError::Format(FormatError::UnknownField { .. }))
        ));
        assert!(matches!(
            parse("{\"phases\": ["),
            Err(ScenarioError::Format(FormatError::Syntax { .. }))
        ));
    }

    #[test]
    fn fixed_hold_round_trips() {
        let net = canonical_network();
        let text = r#"{"phases": [{"clamp": {"white": 0, "looking": 1}, "hold": 3}]}"#;
        let sc = parse_scenario_file(text, &net).unwrap();
        assert_eq!(sc.phases[0].hold, Hold::Sweeps(3));
        assert_eq!(
            parse_scenario_file(&write_scenario_file(&sc), &net).unwrap(),
            sc
        );
    }

    #[test]
    fn params_parsing() {
        assert_eq!(parse_params(None).unwrap(), EngineParams::default());
        assert_eq!(
            parse_params(Some(r#"{"w_lat": 0.9}"#)).unwrap(),
            EngineParams {
                w_lat: 0.9,
                ..EngineParams::default()
            }
        );
        assert!(matches!(
            parse_params(Some(r#"{"w_latt": 0.9}"#)),
            Err(FormatError::UnknownField { ref field, .. }) if field == "w_latt"
        ));
        assert_eq!(
            parse_params(Some(r#"{"error_routing": "all_global"}"#))
                .unwrap()
                .error_routing,
            ErrorRouting::AllGlobal
        );
        assert!(matches!(
            parse_params(Some(r#"{"error_routing": "global"}"#)),
            Err(FormatError::InvalidValue { .. })
        ));
        assert!(matches!(
            parse_params(Some(r#"{"w_ff": "1"}"#)),
            Err(FormatError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn params_serialize_canonically() {
        let text = write_params(&EngineParams::default());
        assert_eq!(
            text,
            "{\n  \"error_routing\": \"split\",\n  \"max_sweeps\": 64,\n  \"tau\": 0.5,\n  \"theta\": 0.5,\n  \"w_err\": 1.5,\n  \"w_ff\": 1.0,\n  \"w_lat\": 0.3,\n  \"w_self\": 0.9\n}\n"
        );
        assert_eq!(parse_params(Some(&text)).unwrap(), EngineParams::default());
    }

    #[test]
    fn quiescent_trace_csv() {
        let net = canonical_network();
        let engine = Engine::new(&net, EngineParams::default()).unwrap();
        let trace = engine.settle(&BTreeSet::new()).unwrap();
        let csv = write_trace_csv(&trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("phase,sweep,kind,name,value"));
        let rows: Vec<&str> = lines.collect();
        // 7 concept rows plus omission and commission rows for 5 bottom units.
        assert_eq!(rows.len(), 7 + 10);
        assert!(rows
            .iter()
            .all(|r| r.starts_with("1,1,") && r.ends_with(",0")));
        assert_eq!(rows[0], "1,1,concept,looking,0");
        assert_eq!(rows[7], "1,1,omission,looking,0");
        assert_eq!(rows[16], "1,1,commission,white,0");
    }

    #[test]
    fn shuffled_csv_is_reordered() {
        let text =
            "phase,sweep,kind,name,value\n1,2,concept,b,1\n1,1,omission,a,0\n1,1,concept,a,1\n";
        let table = read_trace_csv(text).unwrap();
        let canonical = write_table_csv(&table);
        assert_eq!(
            canonical,
            "phase,sweep,kind,name,value\n1,1,concept,a,1\n1,1,omission,a,0\n1,2,concept,b,1\n"
        );
        assert_eq!(read_trace_csv(&canonical).unwrap(), table);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            read_trace_csv("phase,sweep,kind,unit,value\n"),
            Err(TraceCsvError::SchemaMismatch { line: Some(1), .. })
        ));
        assert!(matches!(
            read_trace_csv("phase,sweep,kind,name,value\n1,1,glia,a,0\n"),
            Err(TraceCsvError::SchemaMismatch { line: Some(2), .. })
        ));
        assert!(matches!(
            read_trace_csv("phase,sweep,kind,name,value\n1,1,concept,a,2\n"),
            Err(TraceCsvError::SchemaMismatch { .. })
        ));
        assert!(matches!(
            read_trace_csv("phase,sweep,kind,name,value\n0,1,concept,a,1\n"),
            Err(TraceCsvError::SchemaMismatch { .. })
        ));
        assert!(matches!(
            read_trace_csv("phase,sweep,kind,name,value\n1,1,concept,a\n"),
            Err(TraceCsvError::Syntax { .. })
        ));
        assert!(matches!(
            read_trace_csv("phase,sweep,kind,name,value\n1,1,concept,a,1\n1,1,concept,a,0\n"),
            Err(TraceCsvError::SchemaMismatch { .. })
        ));
        assert!(matches!(
            read_trace_csv(""),
            Err(TraceCsvError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn names_with_commas_survive() {
        let table = TraceTable::from_rows(vec![TraceRow {
            phase: 1,
            sweep: 1,
            kind: UnitKind::Concept,
            name: "salt, coarse".into(),
            value: true,
        }])
        .unwrap();
        assert_eq!(read_trace_csv(&write_table_csv(&table)).unwrap(), table);
    }

    #[test]
    fn timeline_rendering() {
        let net = canonical_network();
        let engine = Engine::new(&net, EngineParams::default()).unwrap();
        let trace = engine.settle(&BTreeSet::new()).unwrap();
        let text = render_ascii_timeline(&trace.to_table());
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().all(|l| l.ends_with("|.|")));

        let single = validate_network(&NetworkSpec {
            concepts: vec![ConceptSpec::bottom("x")],
        })
        .unwrap();
        let engine = Engine::new(&single, EngineParams::default()).unwrap();
        let trace = engine.settle(&BTreeSet::new()).unwrap();
        assert_eq!(render_ascii_timeline(&trace.to_table()), "x |.|\n");
    }
}
