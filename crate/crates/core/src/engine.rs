//! Discrete-time circuit dynamics.
//!
//! Units are binary. One sweep clamps the bottom layer, then updates every
//! higher layer in order (concepts within a layer sequentially, in file
//! order), then recomputes the two kinds of error units from the fresh
//! activations. Errors inhibit concepts on the following sweep. A concept
//! switched off while it was receiving error inhibition is latched off until
//! the next clamp change.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{pattern_state_with, ClampError, ConceptId, ValidatedNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ErrorRouting {
    /// Omission errors inhibit the active concepts that predicted the missing
    /// element; commission errors inhibit every active concept on the layer
    /// above the element.
    #[default]
    Split,
    /// Every error inhibits every active non-bottom concept.
    AllGlobal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    /// Dendrite to concept weight.
    pub w_ff: f64,
    /// Recurrent self-excitation.
    pub w_self: f64,
    /// Lateral inhibition from each other active concept on the same layer.
    pub w_lat: f64,
    /// Inhibition per routed error unit.
    pub w_err: f64,
    pub theta: f64,
    /// Applicability fraction for patterns.
    pub tau: f64,
    pub max_sweeps: usize,
    pub error_routing: ErrorRouting,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            w_ff: 1.0,
            w_self: 0.9,
            w_lat: 0.3,
            w_err: 1.5,
            theta: 0.5,
            tau: 0.5,
            max_sweeps: 64,
            error_routing: ErrorRouting::Split,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("w_ff ≤ θ: w_ff ({w_ff}) must exceed theta ({theta}) so a complete pattern can ignite its concept")]
    FeedforwardTooWeak { w_ff: f64, theta: f64 },
    #[error("w_err ≤ w_self: w_err ({w_err}) must exceed w_self ({w_self}) so one error can shut a self-sustained unit")]
    ErrorTooWeak { w_err: f64, w_self: f64 },
    #[error("tau must lie in (0, 1], got {0}")]
    TauOutOfRange(f64),
    #[error("max_sweeps must be at least 1")]
    ZeroSweeps,
}

impl EngineParams {
    pub fn check(&self) -> Result<(), ParamError> {
        let named = [
            ("w_ff", self.w_ff),
            ("w_self", self.w_self),
            ("w_lat", self.w_lat),
            ("w_err", self.w_err),
            ("theta", self.theta),
            ("tau", self.tau),
        ];
        for (name, value) in named {
            if !value.is_finite() {
                return Err(ParamError::NonFinite { name, value });
            }
            if value < 0.0 {
                return Err(ParamError::Negative { name, value });
            }
        }
        if self.w_ff <= self.theta {
            return Err(ParamError::FeedforwardTooWeak {
                w_ff: self.w_ff,
                theta: self.theta,
            });
        }
        if self.w_err <= self.w_self {
            return Err(ParamError::ErrorTooWeak {
                w_err: self.w_err,
                w_self: self.w_self,
            });
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(ParamError::TauOutOfRange(self.tau));
        }
        if self.max_sweeps == 0 {
            return Err(ParamError::ZeroSweeps);
        }
        Ok(())
    }
}

/// Everything that determines the next sweep, plus the sweep counter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EngineState {
    pub activation: Vec<bool>,
    /// Bottom-layer clamp; bottom units missing here are held at 0.
    pub clamp: BTreeMap<ConceptId, bool>,
    /// "Not active but should be".
    pub omission: Vec<bool>,
    /// "Active but should not be".
    pub commission: Vec<bool>,
    pub latched: Vec<bool>,
    /// Error units routed to each concept, applied on the next sweep.
    pub routed_errors: Vec<u32>,
    pub sweep_count: usize,
}

impl EngineState {
    fn zero(n: usize) -> Self {
        Self {
            activation: vec![false; n],
            clamp: BTreeMap::new(),
            omission: vec![false; n],
            commission: vec![false; n],
            latched: vec![false; n],
            routed_errors: vec![0; n],
            sweep_count: 0,
        }
    }

    pub fn is_active(&self, id: ConceptId) -> bool {
        self.activation[id.index()]
    }

    pub fn active_set(&self) -> BTreeSet<ConceptId> {
        self.activation
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| ConceptId(i))
            .collect()
    }

    /// Equality ignoring the sweep counter.
    pub fn same_dynamics(&self, other: &Self) -> bool {
        self.activation == other.activation
            && self.clamp == other.clamp
            && self.omission == other.omission
            && self.commission == other.commission
            && self.latched == other.latched
            && self.routed_errors == other.routed_errors
    }

    fn dynamics_key(&self) -> EngineState {
        EngineState {
            sweep_count: 0,
            ..self.clone()
        }
    }
}

/// Error units computed from one activation vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorUnits {
    /// Elements predicted by an applicable pattern of some active concept.
    pub predicted: Vec<bool>,
    pub omission: Vec<bool>,
    pub commission: Vec<bool>,
}

/// Prediction and error pass over `activation`.
///
/// An element is predicted (and, if active, explained) when some active
/// concept has a non-off pattern containing it. Top-layer units cannot be
/// explained by anything and never raise commission errors.
pub fn error_units(net: &ValidatedNetwork, tau: f64, activation: &[bool]) -> ErrorUnits {
    let n = net.len();
    let mut predicted = vec![false; n];
    for owner in net.ids() {
        if !activation[owner.index()] {
            continue;
        }
        for p in &net.concept(owner).patterns {
            if pattern_state_with(p, |e| activation[e.index()], tau)
                .status
                .is_applicable()
            {
                for &e in p.elements() {
                    predicted[e.index()] = true;
                }
            }
        }
    }
    let omission = (0..n).map(|i| predicted[i] && !activation[i]).collect();
    let commission = net
        .ids()
        .map(|e| activation[e.index()] && !predicted[e.index()] && net.has_layer_above(e))
        .collect();
    ErrorUnits {
        predicted,
        omission,
        commission,
    }
}

/// Per-concept count of error units inhibiting it on the next sweep.
pub fn route_errors(
    net: &ValidatedNetwork,
    params: &EngineParams,
    activation: &[bool],
    errors: &ErrorUnits,
) -> Vec<u32> {
    let mut routed = vec![0u32; net.len()];
    match params.error_routing {
        ErrorRouting::Split => {
            for e in net.ids() {
                if errors.omission[e.index()] {
                    for &(owner, ordinal) in net.element_parents(e).unwrap_or_default() {
                        if !activation[owner.index()] {
                            continue;
                        }
                        let p = &net.concept(owner).patterns[ordinal];
                        if pattern_state_with(p, |x| activation[x.index()], params.tau)
                            .status
                            .is_applicable()
                        {
                            routed[owner.index()] += 1;
                        }
                    }
                }
                if errors.commission[e.index()] {
                    for &c in &net.layers()[net.layer_of(e) + 1] {
                        if activation[c.index()] {
                            routed[c.index()] += 1;
                        }
                    }
                }
            }
        }
        ErrorRouting::AllGlobal => {
            let total = errors.omission.iter().filter(|&&x| x).count()
                + errors.commission.iter().filter(|&&x| x).count();
            for c in net.ids() {
                if net.layer_of(c) > 0 && activation[c.index()] {
                    routed[c.index()] = total as u32;
                }
            }
        }
    }
    routed
}

/// Full-conjunction dendrite output for every (concept, pattern ordinal).
pub fn dendrite_values(
    net: &ValidatedNetwork,
    state: &EngineState,
) -> BTreeMap<(ConceptId, usize), bool> {
    let mut out = BTreeMap::new();
    for c in net.non_bottom() {
        for (ordinal, p) in net.concept(c).patterns.iter().enumerate() {
            out.insert(
                (c, ordinal),
                p.elements().iter().all(|&e| state.is_active(e)),
            );
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    FixedPoint,
    Cycle,
    SweepLimit,
}

/// How long a scenario phase runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hold {
    Converge,
    Sweeps(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub clamp: BTreeMap<ConceptId, bool>,
    pub hold: Hold,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseTrace {
    pub clamp: BTreeMap<ConceptId, bool>,
    pub hold: Hold,
    /// State after each sweep of the phase.
    pub snapshots: Vec<EngineState>,
    pub termination: Termination,
    /// Period of the detected cycle, when `termination` is `Cycle`.
    pub cycle_len: Option<usize>,
}

impl PhaseTrace {
    pub fn final_state(&self) -> &EngineState {
        self.snapshots.last().expect("phase has at least one sweep")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceUnit {
    pub name: String,
    pub layer: usize,
    /// Whether the unit has omission/commission error units (everything
    /// below the top layer does).
    pub has_error_units: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub units: Vec<TraceUnit>,
    pub phases: Vec<PhaseTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Verdict {
    Inferred,
    Rejected,
    Inactive,
    Unstable,
}

pub type VerdictMap = BTreeMap<ConceptId, Verdict>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    BadParams(#[from] ParamError),
    #[error(transparent)]
    Clamp(#[from] ClampError),
    #[error("scenario has no phases")]
    EmptyScenario,
    #[error("phase {phase} holds for {sweeps} sweeps; must be between 1 and max_sweeps ({max})")]
    BadHold {
        phase: usize,
        sweeps: usize,
        max: usize,
    },
}

/// Validated parameters bound to a network.
#[derive(Debug, Clone)]
pub struct Engine<'n> {
    net: &'n ValidatedNetwork,
    params: EngineParams,
}

/// Zero state for `net`, after checking `params`.
pub fn init_engine(
    net: &ValidatedNetwork,
    params: &EngineParams,
) -> Result<EngineState, ParamError> {
    params.check()?;
    Ok(EngineState::zero(net.len()))
}

impl<'n> Engine<'n> {
    pub fn new(net: &'n ValidatedNetwork, params: EngineParams) -> Result<Self, ParamError> {
        params.check()?;
        Ok(Self { net, params })
    }

    pub fn network(&self) -> &'n ValidatedNetwork {
        self.net
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    pub fn init(&self) -> EngineState {
        EngineState::zero(self.net.len())
    }

    /// Replaces the clamp, clears rejection latches and restarts the sweep
    /// counter. Activations change only on the next sweep.
    pub fn apply_clamp(
        &self,
        state: &mut EngineState,
        clamp: BTreeMap<ConceptId, bool>,
    ) -> Result<(), ClampError> {
        for &id in clamp.keys() {
            if id.index() >= self.net.len() {
                return Err(ClampError::UnknownElement(id.to_string()));
            }
            if self.net.layer_of(id) != 0 {
                return Err(ClampError::NonBottomClamp(self.net.name(id).to_string()));
            }
        }
        state.clamp = clamp;
        state.latched.iter_mut().for_each(|l| *l = false);
        state.sweep_count = 0;
        Ok(())
    }

    /// One deterministic pass. Returns the new state and whether anything
    /// other than the sweep counter changed.
    pub fn sweep(&self, state: &EngineState) -> (EngineState, bool) {
        let net = self.net;
        let p = &self.params;
        let mut next = state.clone();

        for &b in net.bottom() {
            next.activation[b.index()] = state.clamp.get(&b).copied().unwrap_or(false);
        }

        for layer in net.layers().iter().skip(1) {
            for &c in layer {
                let i = c.index();
                let dendrite = net
                    .concept(c)
                    .patterns
                    .iter()
                    .any(|pat| pat.elements().iter().all(|e| next.activation[e.index()]));
                let competitors = layer
                    .iter()
                    .filter(|&&o| o != c && next.activation[o.index()])
                    .count();
                let input = p.w_ff * f64::from(u8::from(dendrite))
                    + p.w_self * f64::from(u8::from(state.activation[i]))
                    - p.w_lat * competitors as f64
                    - p.w_err * f64::from(state.routed_errors[i])
                    - p.theta;
                let on = input > 0.0 && !state.latched[i];
                if state.activation[i] && !on && state.routed_errors[i] > 0 {
                    next.latched[i] = true;
                }
                next.activation[i] = on;
            }
        }

        let errors = error_units(net, p.tau, &next.activation);
        next.routed_errors = route_errors(net, p, &next.activation, &errors);
        next.omission = errors.omission;
        next.commission = errors.commission;
        next.sweep_count += 1;

        let changed = !state.same_dynamics(&next);
        (next, changed)
    }

    /// Sweeps until nothing changes, a state repeats, or `max_sweeps` is hit.
    pub fn run_to_fixed_point(
        &self,
        state: &EngineState,
    ) -> (Vec<EngineState>, Termination, Option<usize>) {
        self.run_phase(state, self.params.max_sweeps, true)
    }

    /// Runs exactly `sweeps` sweeps and classifies how the phase ended.
    pub fn run_for(
        &self,
        state: &EngineState,
        sweeps: usize,
    ) -> (Vec<EngineState>, Termination, Option<usize>) {
        self.run_phase(state, sweeps, false)
    }

    fn run_phase(
        &self,
        start: &EngineState,
        budget: usize,
        stop_early: bool,
    ) -> (Vec<EngineState>, Termination, Option<usize>) {
        let mut seen: Vec<EngineState> = vec![start.dynamics_key()];
        let mut lookup: HashSet<EngineState> = seen.iter().cloned().collect();
        let mut snapshots = Vec::new();
        let mut current = start.clone();
        let mut outcome = (Termination::SweepLimit, None);

        for _ in 0..budget {
            let (next, changed) = self.sweep(&current);
            let key = next.dynamics_key();
            snapshots.push(next.clone());
            current = next;
            outcome = if !changed {
                (Termination::FixedPoint, None)
            } else if lookup.contains(&key) {
                let first = seen.iter().position(|s| *s == key).expect("key was seen");
                (Termination::Cycle, Some(seen.len() - first))
            } else {
                (Termination::SweepLimit, None)
            };
            if outcome.0 != Termination::SweepLimit && stop_early {
                break;
            }
            lookup.insert(key.clone());
            seen.push(key);
        }
        (snapshots, outcome.0, outcome.1)
    }

    pub fn run_scenario(&self, phases: &[Phase]) -> Result<Trace, EngineError> {
        if phases.is_empty() {
            return Err(EngineError::EmptyScenario);
        }
        for (i, ph) in phases.iter().enumerate() {
            if let Hold::Sweeps(n) = ph.hold {
                if n == 0 || n > self.params.max_sweeps {
                    return Err(EngineError::BadHold {
                        phase: i,
                        sweeps: n,
                        max: self.params.max_sweeps,
                    });
                }
            }
        }

        let mut state = self.init();
        let mut out = Vec::with_capacity(phases.len());
        for ph in phases {
            self.apply_clamp(&mut state, ph.clamp.clone())?;
            let (snapshots, termination, cycle_len) = match ph.hold {
                Hold::Converge => self.run_to_fixed_point(&state),
                Hold::Sweeps(n) => self.run_for(&state, n),
            };
            state = snapshots
                .last()
                .expect("budget is at least one sweep")
                .clone();
            out.push(PhaseTrace {
                clamp: ph.clamp.clone(),
                hold: ph.hold,
                snapshots,
                termination,
                cycle_len,
            });
        }
        Ok(Trace {
            units: trace_units(self.net),
            phases: out,
        })
    }

    /// Single phase from the zero state with the given bottom units on.
    pub fn settle(&self, on: &BTreeSet<ConceptId>) -> Result<Trace, EngineError> {
        self.run_scenario(&[Phase {
            clamp: on.iter().map(|&id| (id, true)).collect(),
            hold: Hold::Converge,
        }])
    }
}

pub fn trace_units(net: &ValidatedNetwork) -> Vec<TraceUnit> {
    net.ids()
        .map(|id| TraceUnit {
            name: net.name(id).to_string(),
            layer: net.layer_of(id),
            has_error_units: net.has_layer_above(id),
        })
        .collect()
}

/// Verdicts at the end of one phase.
pub fn phase_verdicts(trace: &Trace, phase: usize) -> VerdictMap {
    let ph = &trace.phases[phase];
    let last = ph.final_state();
    let window: &[EngineState] = match (ph.termination, ph.cycle_len) {
        (Termination::FixedPoint, _) => &ph.snapshots[ph.snapshots.len() - 1..],
        (Termination::Cycle, Some(n)) => &ph.snapshots[ph.snapshots.len().saturating_sub(n)..],
        _ => &ph.snapshots,
    };
    trace
        .units
        .iter()
        .enumerate()
        .filter(|(_, u)| u.layer > 0)
        .map(|(i, _)| {
            let verdict = if last.latched[i] {
                Verdict::Rejected
            } else if window.iter().any(|s| s.activation[i] != last.activation[i]) {
                Verdict::Unstable
            } else if last.activation[i] {
                Verdict::Inferred
            } else {
                Verdict::Inactive
            };
            (ConceptId(i), verdict)
        })
        .collect()
}

/// Verdicts at the end of the final phase.
pub fn read_verdicts(trace: &Trace) -> VerdictMap {
    phase_verdicts(trace, trace.phases.len() - 1)
}

/// Concepts read as inferred at the end of the final phase.
pub fn inferred_set(trace: &Trace) -> BTreeSet<ConceptId> {
    read_verdicts(trace)
        .into_iter()
        .filter(|(_, v)| *v == Verdict::Inferred)
        .map(|(c, _)| c)
        .collect()
}
