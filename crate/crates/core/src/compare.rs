//! Exhaustive comparison of the circuit dynamics against the oracle.
//!
//! Every subset of bottom-layer clamps is settled from rest and the set of
//! inferred concepts is checked against the oracle's consistent
//! interpretations for the same clamp.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{inferred_set, Engine, EngineError, Termination};
use crate::model::{ConceptId, ValidatedNetwork};
use crate::oracle::{enumerate_interpretations, OracleError, OracleOptions};

/// Largest bottom layer the harness will sweep exhaustively.
pub const MAX_BOTTOM_UNITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Agreement {
    /// The dynamics inferred a maximal consistent interpretation, or inferred
    /// nothing where the oracle finds no consistent interpretation at all.
    Agree,
    /// The dynamics inferred a consistent, non-maximal interpretation:
    /// lateral inhibition picked among concepts the oracle accepts jointly.
    TieSelected,
    Disagree,
}

impl fmt::Display for Agreement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agreement::Agree => "AGREE",
            Agreement::TieSelected => "TIE-SELECTED",
            Agreement::Disagree => "DISAGREE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseResult {
    /// Bit `i` set means the `i`-th bottom unit (file order) is clamped on.
    pub subset_index: u32,
    pub clamped: BTreeSet<ConceptId>,
    pub inferred: BTreeSet<ConceptId>,
    pub termination: Termination,
    pub consistent: Vec<BTreeSet<ConceptId>>,
    pub maximal: Vec<BTreeSet<ConceptId>>,
    pub agreement: Agreement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgreementReport {
    pub cases: Vec<CaseResult>,
    pub agree: usize,
    pub tie_selected: usize,
    pub disagree: usize,
}

impl AgreementReport {
    pub fn total(&self) -> usize {
        self.cases.len()
    }

    pub fn disagreements(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases
            .iter()
            .filter(|c| c.agreement == Agreement::Disagree)
    }

    pub fn summary(&self) -> String {
        format!(
            "{} cases: AGREE {}, TIE-SELECTED {}, DISAGREE {}",
            self.total(),
            self.agree,
            self.tie_selected,
            self.disagree
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("{count} bottom units exceed the exhaustive comparison limit of {limit}")]
    TooLarge { count: usize, limit: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

pub fn classify(
    inferred: &BTreeSet<ConceptId>,
    termination: Termination,
    consistent: &[BTreeSet<ConceptId>],
    maximal: &[BTreeSet<ConceptId>],
) -> Agreement {
    if termination != Termination::FixedPoint {
        return Agreement::Disagree;
    }
    if consistent.is_empty() {
        return if inferred.is_empty() {
            Agreement::Agree
        } else {
            Agreement::Disagree
        };
    }
    if maximal.contains(inferred) {
        Agreement::Agree
    } else if consistent.contains(inferred) {
        Agreement::TieSelected
    } else {
        Agreement::Disagree
    }
}

/// Runs every clamp subset through both the dynamics and the oracle.
pub fn compare_with_oracle(engine: &Engine<'_>) -> Result<AgreementReport, CompareError> {
    let net: &ValidatedNetwork = engine.network();
    let bottom = net.bottom();
    if bottom.len() > MAX_BOTTOM_UNITS {
        return Err(CompareError::TooLarge {
            count: bottom.len(),
            limit: MAX_BOTTOM_UNITS,
        });
    }
    let options = OracleOptions {
        tau: engine.params().tau,
        ..OracleOptions::default()
    };

    let mut cases = Vec::with_capacity(1 << bottom.len());
    for subset_index in 0u32..(1u32 << bottom.len()) {
        let clamped: BTreeSet<ConceptId> = bottom
            .iter()
            .enumerate()
            .filter(|(b, _)| subset_index & (1 << b) != 0)
            .map(|(_, &id)| id)
            .collect();

        let reports = enumerate_interpretations(net, &clamped, options)?;
        let consistent: Vec<BTreeSet<ConceptId>> = reports
            .iter()
            .map(|r| r.interpretation.inferred.clone())
            .collect();
        let maximal: Vec<BTreeSet<ConceptId>> = reports
            .iter()
            .filter(|r| r.maximal)
            .map(|r| r.interpretation.inferred.clone())
            .collect();

        let trace = engine.settle(&clamped)?;
        let termination = trace.phases[0].termination;
        let inferred = inferred_set(&trace);
        let agreement = classify(&inferred, termination, &consistent, &maximal);

        cases.push(CaseResult {
            subset_index,
            clamped,
            inferred,
            termination,
            consistent,
            maximal,
            agreement,
        });
    }

    let count = |a: Agreement| cases.iter().filter(|c| c.agreement == a).count();
    Ok(AgreementReport {
        agree: count(Agreement::Agree),
        tie_selected: count(Agreement::TieSelected),
        disagree: count(Agreement::Disagree),
        cases,
    })
}
