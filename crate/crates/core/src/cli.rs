//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain failure (invalid network, bad clamp,
//! too-large enumeration, `compare --strict` disagreement), 2 usage or parse
//! failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::compare::{compare_with_oracle, CompareError};
use crate::engine::{phase_verdicts, Engine, ParamError, Termination, Trace};
use crate::model::{validate_network, ConceptId, PatternStatus, ValidatedNetwork};
use crate::oracle::{
    concept_locally_consistent, enumerate_interpretations, verdicts_from_reports, OracleError,
    OracleOptions,
};
use crate::scenario_io::{
    parse_network_file, parse_params, parse_scenario_file, read_trace_csv, render_ascii_timeline,
    write_trace_csv, ScenarioError,
};

#[derive(Debug, Parser)]
#[command(
    name = "concept-net",
    version,
    about = "Concept networks: dynamics, oracle and comparison"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a network file and print its size and warnings.
    Validate {
        network: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run a scenario through the circuit and print verdicts per phase.
    Run {
        network: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        /// Write the trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print the ASCII timeline after the verdicts.
        #[arg(long)]
        render: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Oracle verdicts and per-concept pattern detail for one active set.
    Check {
        network: PathBuf,
        /// Comma-separated layer-0 names.
        #[arg(long, default_value = "")]
        active: String,
        #[arg(long, default_value_t = crate::model::DEFAULT_APPLICABILITY)]
        tau: f64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// List every consistent interpretation; maximal ones are starred.
    Enumerate {
        network: PathBuf,
        #[arg(long, default_value = "")]
        active: String,
        #[arg(long, default_value_t = crate::model::DEFAULT_APPLICABILITY)]
        tau: f64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Compare the dynamics with the oracle over every clamp subset.
    Compare {
        network: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        /// Exit 1 if any case disagrees.
        #[arg(long)]
        strict: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Render a trace CSV as an ASCII timeline.
    Render { trace: PathBuf },
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    fn domain(message: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Format(_) => Failure::usage(e),
            _ => Failure::domain(e),
        }
    }
}

impl From<ParamError> for Failure {
    fn from(e: ParamError) -> Self {
        Failure::domain(format!("bad params: {e}"))
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Failure::domain(e)
    }
}

impl From<CompareError> for Failure {
    fn from(e: CompareError) -> Self {
        Failure::domain(e)
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` and runs the command, writing to `out` and `err`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Validate { network, format } => cmd_validate(&network, format, out),
        Command::Run {
            network,
            scenario,
            params,
            trace,
            render,
            format,
        } => cmd_run(
            &network,
            &scenario,
            params.as_deref(),
            trace.as_deref(),
            render,
            format,
            out,
        ),
        Command::Check {
            network,
            active,
            tau,
            format,
        } => cmd_check(&network, &active, tau, format, out),
        Command::Enumerate {
            network,
            active,
            tau,
            format,
        } => cmd_enumerate(&network, &active, tau, format, out),
        Command::Compare {
            network,
            params,
            strict,
            format,
        } => cmd_compare(&network, params.as_deref(), strict, format, out),
        Command::Render { trace } => cmd_render(&trace, out),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_network(path: &Path) -> Result<ValidatedNetwork, Failure> {
    let spec = parse_network_file(&read(path)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    validate_network(&spec).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))
}

fn load_engine<'n>(
    net: &'n ValidatedNetwork,
    params: Option<&Path>,
) -> Result<Engine<'n>, Failure> {
    let text = params.map(read).transpose()?;
    let params = parse_params(text.as_deref()).map_err(|e| {
        Failure::usage(format!(
            "{}: {e}",
            params.map(|p| p.display().to_string()).unwrap_or_default()
        ))
    })?;
    Ok(Engine::new(net, params)?)
}

fn parse_active(net: &ValidatedNetwork, active: &str) -> Result<BTreeSet<ConceptId>, Failure> {
    let names: Vec<&str> = active
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    net.resolve_bottom(&names).map_err(Failure::domain)
}

fn names(net: &ValidatedNetwork, ids: &BTreeSet<ConceptId>) -> Vec<String> {
    ids.iter().map(|&i| net.name(i).to_string()).collect()
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::usage(format!("write failed: {e}")))
}

fn emit_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    emit(out, &text)
}

fn cmd_validate(path: &Path, format: Format, out: &mut dyn Write) -> CmdResult {
    let net = load_network(path)?;
    let warnings: Vec<String> = net.warnings().iter().map(ToString::to_string).collect();
    match format {
        Format::Text => {
            let mut text = format!(
                "{} concepts, {} layers, {} patterns, {} warnings\n",
                net.len(),
                net.layer_count(),
                net.pattern_count(),
                warnings.len()
            );
            for w in &warnings {
                text.push_str(&format!("warning: {w}\n"));
            }
            emit(out, &text)?;
        }
        Format::Json => emit_json(
            out,
            &json!({
                "concepts": net.len(),
                "layers": net.layer_count(),
                "patterns": net.pattern_count(),
                "warnings": warnings,
            }),
        )?,
    }
    Ok(0)
}

fn cmd_run(
    network: &Path,
    scenario: &Path,
    params: Option<&Path>,
    trace_out: Option<&Path>,
    render: bool,
    format: Format,
    out: &mut dyn Write,
) -> CmdResult {
    let net = load_network(network)?;
    let engine = load_engine(&net, params)?;
    let spec = parse_scenario_file(&read(scenario)?, &net)?;
    let trace = engine
        .run_scenario(&spec.phases_for(&net)?)
        .map_err(Failure::domain)?;

    if let Some(path) = trace_out {
        fs::write(path, write_trace_csv(&trace))
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }

    match format {
        Format::Text => {
            let mut text = String::new();
            for (i, ph) in trace.phases.iter().enumerate() {
                text.push_str(&format!(
                    "phase {}: {:?} after {} sweeps\n",
                    i + 1,
                    ph.termination,
                    ph.snapshots.len()
                ));
                for (c, v) in phase_verdicts(&trace, i) {
                    text.push_str(&format!("  {}: {:?}\n", net.name(c), v));
                }
            }
            if render {
                text.push('\n');
                text.push_str(&render_ascii_timeline(&trace.to_table()));
            }
            emit(out, &text)?;
        }
        Format::Json => {
            let mut value = run_json(&net, &trace);
            if render {
                value["timeline"] = json!(render_ascii_timeline(&trace.to_table()));
            }
            emit_json(out, &value)?;
        }
    }
    Ok(0)
}

fn run_json(net: &ValidatedNetwork, trace: &Trace) -> serde_json::Value {
    let phases: Vec<serde_json::Value> = trace
        .phases
        .iter()
        .enumerate()
        .map(|(i, ph)| {
            let verdicts: BTreeMap<String, String> = phase_verdicts(trace, i)
                .into_iter()
                .map(|(c, v)| (net.name(c).to_string(), format!("{v:?}")))
                .collect();
            json!({
                "phase": i + 1,
                "termination": ph.termination,
                "sweeps": ph.snapshots.len(),
                "verdicts": verdicts,
            })
        })
        .collect();
    json!({ "phases": phases })
}

fn status_label(s: PatternStatus) -> &'static str {
    match s {
        PatternStatus::Off => "off",
        PatternStatus::ApplicableIncomplete => "applicable-incomplete",
        PatternStatus::Complete => "complete",
    }
}

fn cmd_check(
    network: &Path,
    active: &str,
    tau: f64,
    format: Format,
    out: &mut dyn Write,
) -> CmdResult {
    let net = load_network(network)?;
    let clamped = parse_active(&net, active)?;
    let options = OracleOptions {
        tau,
        ..OracleOptions::default()
    };
    let reports = enumerate_interpretations(&net, &clamped, options)?;
    let verdicts = verdicts_from_reports(&net, &reports);

    let mut text = format!("active: {}\n", net.format_set(&clamped));
    let mut concepts_json = Vec::new();
    for (&c, verdict) in &verdicts {
        let (ok, detail) = concept_locally_consistent(&net, c, &clamped, tau)?;
        text.push_str(&format!(
            "{}: {:?} (locally {})\n",
            net.name(c),
            verdict,
            if ok { "consistent" } else { "inconsistent" }
        ));
        let mut patterns_json = Vec::new();
        for (ordinal, p) in net.concept(c).patterns.iter().enumerate() {
            let st = crate::model::pattern_state(p, &clamped, tau);
            let missing: Vec<String> = detail
                .violated_patterns
                .iter()
                .find(|v| v.ordinal == ordinal)
                .map(|v| v.missing.iter().map(|&m| net.name(m).to_string()).collect())
                .unwrap_or_default();
            text.push_str(&format!(
                "  pattern {ordinal} {}: {} ({}/{})",
                net.format_set(p.elements()),
                status_label(st.status),
                st.present,
                st.total
            ));
            if !missing.is_empty() {
                text.push_str(&format!(", missing: {}", missing.join(",")));
            }
            text.push('\n');
            patterns_json.push(json!({
                "ordinal": ordinal,
                "status": status_label(st.status),
                "present": st.present,
                "total": st.total,
                "missing": missing,
            }));
        }
        concepts_json.push(json!({
            "name": net.name(c),
            "verdict": verdict,
            "locally_consistent": ok,
            "patterns": patterns_json,
        }));
    }

    match format {
        Format::Text => emit(out, &text)?,
        Format::Json => emit_json(
            out,
            &json!({ "active": names(&net, &clamped), "concepts": concepts_json }),
        )?,
    }
    Ok(0)
}

fn cmd_enumerate(
    network: &Path,
    active: &str,
    tau: f64,
    format: Format,
    out: &mut dyn Write,
) -> CmdResult {
    let net = load_network(network)?;
    let clamped = parse_active(&net, active)?;
    let options = OracleOptions {
        tau,
        ..OracleOptions::default()
    };
    let reports = enumerate_interpretations(&net, &clamped, options)?;
    match format {
        Format::Text => {
            let mut text = String::new();
            if reports.is_empty() {
                text.push_str("no consistent interpretation\n");
            }
            for r in &reports {
                text.push_str(&net.format_set(&r.interpretation.inferred));
                if r.maximal {
                    text.push('*');
                }
                text.push('\n');
            }
            emit(out, &text)?;
        }
        Format::Json => {
            let list: Vec<serde_json::Value> = reports
                .iter()
                .map(|r| {
                    json!({
                        "inferred": names(&net, &r.interpretation.inferred),
                        "maximal": r.maximal,
                    })
                })
                .collect();
            emit_json(
                out,
                &json!({ "active": names(&net, &clamped), "interpretations": list }),
            )?;
        }
    }
    Ok(0)
}

fn cmd_compare(
    network: &Path,
    params: Option<&Path>,
    strict: bool,
    format: Format,
    out: &mut dyn Write,
) -> CmdResult {
    let net = load_network(network)?;
    let engine = load_engine(&net, params)?;
    let report = compare_with_oracle(&engine)?;

    match format {
        Format::Text => {
            let rows: Vec<[String; 4]> = report
                .cases
                .iter()
                .map(|c| {
                    let maximal: Vec<String> =
                        c.maximal.iter().map(|m| net.format_set(m)).collect();
                    let inferred = if c.termination == Termination::FixedPoint {
                        net.format_set(&c.inferred)
                    } else {
                        format!("{} ({:?})", net.format_set(&c.inferred), c.termination)
                    };
                    [
                        net.format_set(&c.clamped),
                        inferred,
                        if maximal.is_empty() {
                            "-".to_string()
                        } else {
                            maximal.join(" ")
                        },
                        c.agreement.to_string(),
                    ]
                })
                .collect();
            let header = ["clamp", "dynamics", "oracle maximal", "result"].map(String::from);
            let mut widths = [0usize; 4];
            for row in std::iter::once(&header).chain(&rows) {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.chars().count());
                }
            }
            let mut text = String::new();
            for row in std::iter::once(&header).chain(&rows) {
                let line: Vec<String> = row
                    .iter()
                    .zip(widths)
                    .map(|(cell, w)| format!("{cell:<w$}"))
                    .collect();
                text.push_str(line.join("  ").trim_end());
                text.push('\n');
            }
            text.push_str(&report.summary());
            text.push('\n');
            emit(out, &text)?;
        }
        Format::Json => {
            let cases: Vec<serde_json::Value> = report
                .cases
                .iter()
                .map(|c| {
                    json!({
                        "clamp": names(&net, &c.clamped),
                        "dynamics": names(&net, &c.inferred),
                        "termination": c.termination,
                        "oracle_maximal": c.maximal.iter().map(|m| names(&net, m)).collect::<Vec<_>>(),
                        "result": c.agreement.to_string(),
                    })
                })
                .collect();
            emit_json(
                out,
                &json!({
                    "cases": cases,
                    "total": report.total(),
                    "agree": report.agree,
                    "tie_selected": report.tie_selected,
                    "disagree": report.disagree,
                }),
            )?;
        }
    }
    Ok(if strict && report.disagree > 0 { 1 } else { 0 })
}

fn cmd_render(path: &Path, out: &mut dyn Write) -> CmdResult {
    let table = read_trace_csv(&read(path)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    emit(out, &render_ascii_timeline(&table))?;
    Ok(0)
}
