//! Declarative inference rule, evaluated by brute force.
//!
//! An interpretation (a set of inferred concepts) is consistent with a set of
//! clamped observations when every inferred concept has at least one complete
//! pattern and no applicable-but-incomplete pattern, and every active unit
//! below the top layer is explained by some inferred concept's applicable
//! pattern. Nothing here knows about weights or time; the dynamics engine is
//! tested against this module.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{pattern_state, ConceptId, PatternStatus, ValidatedNetwork};

/// Default cap on the number of non-bottom concepts the enumerator accepts.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptId),
    #[error("concept '{0}' is on layer 0 and has no patterns to evaluate")]
    BottomConcept(String),
    #[error("{count} non-bottom concepts exceed the enumeration limit of {limit}")]
    TooLarge { count: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub tau: f64,
    pub limit: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tau: crate::model::DEFAULT_APPLICABILITY,
            limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// A candidate set of inferred (non-bottom) concepts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct Interpretation {
    pub inferred: BTreeSet<ConceptId>,
}

impl Interpretation {
    pub fn new(inferred: impl IntoIterator<Item = ConceptId>) -> Self {
        Self {
            inferred: inferred.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.inferred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inferred.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolatedPattern {
    pub ordinal: usize,
    pub missing: Vec<ConceptId>,
}

/// Per-concept outcome of the local rule.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ConceptDetail {
    pub complete_patterns: usize,
    pub violated_patterns: Vec<ViolatedPattern>,
}

impl ConceptDetail {
    pub fn is_consistent(&self) -> bool {
        self.complete_patterns > 0 && self.violated_patterns.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub interpretation: Interpretation,
    pub consistent: bool,
    pub per_concept: BTreeMap<ConceptId, ConceptDetail>,
    pub unexpected: BTreeSet<ConceptId>,
    pub maximal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OracleVerdict {
    InAllMaximal,
    InSomeMaximal,
    InNone,
}

/// Clamped observations plus the inferred concepts.
pub fn effective_active(
    interpretation: &Interpretation,
    clamped: &BTreeSet<ConceptId>,
) -> BTreeSet<ConceptId> {
    clamped.union(&interpretation.inferred).copied().collect()
}

/// Local rule for one concept: some pattern complete, none applicable but
/// incomplete.
pub fn concept_locally_consistent(
    net: &ValidatedNetwork,
    concept: ConceptId,
    active: &BTreeSet<ConceptId>,
    tau: f64,
) -> Result<(bool, ConceptDetail), OracleError> {
    if concept.index() >= net.len() {
        return Err(OracleError::UnknownConcept(concept));
    }
    let c = net.concept(concept);
    if c.layer == 0 {
        return Err(OracleError::BottomConcept(c.name.clone()));
    }
    let mut detail = ConceptDetail::default();
    for (ordinal, p) in c.patterns.iter().enumerate() {
        match pattern_state(p, active, tau).status {
            PatternStatus::Complete => detail.complete_patterns += 1,
            PatternStatus::ApplicableIncomplete => detail.violated_patterns.push(ViolatedPattern {
                ordinal,
                missing: p.missing(|e| active.contains(&e)),
            }),
            PatternStatus::Off => {}
        }
    }
    Ok((detail.is_consistent(), detail))
}

/// True if some inferred concept has an applicable pattern containing `element`.
fn is_explained(
    net: &ValidatedNetwork,
    element: ConceptId,
    inferred: &BTreeSet<ConceptId>,
    active: &BTreeSet<ConceptId>,
    tau: f64,
) -> bool {
    net.element_parents(element)
        .unwrap_or_default()
        .iter()
        .any(|&(owner, ordinal)| {
            inferred.contains(&owner)
                && pattern_state(&net.concept(owner).patterns[ordinal], active, tau)
                    .status
                    .is_applicable()
        })
}

/// Active units, below the top layer, that no inferred concept explains.
pub fn unexpected_elements(
    net: &ValidatedNetwork,
    interpretation: &Interpretation,
    clamped: &BTreeSet<ConceptId>,
    tau: f64,
) -> BTreeSet<ConceptId> {
    let active = effective_active(interpretation, clamped);
    active
        .iter()
        .copied()
        .filter(|&e| net.has_layer_above(e))
        .filter(|&e| !is_explained(net, e, &interpretation.inferred, &active, tau))
        .collect()
}

/// Full verdict on one interpretation. `maximal` is left false; only the
/// enumerator can decide it.
pub fn interpretation_consistent(
    net: &ValidatedNetwork,
    interpretation: &Interpretation,
    clamped: &BTreeSet<ConceptId>,
    tau: f64,
) -> ConsistencyReport {
    let active = effective_active(interpretation, clamped);
    let mut per_concept = BTreeMap::new();
    let mut locally_ok = true;
    for &c in &interpretation.inferred {
        // Interpretations only ever hold non-bottom concepts.
        let (ok, detail) = concept_locally_consistent(net, c, &active, tau)
            .expect("interpretation holds only known non-bottom concepts");
        locally_ok &= ok;
        per_concept.insert(c, detail);
    }
    let unexpected = unexpected_elements(net, interpretation, clamped, tau);
    ConsistencyReport {
        interpretation: interpretation.clone(),
        consistent: locally_ok && unexpected.is_empty(),
        per_concept,
        unexpected,
        maximal: false,
    }
}

fn check_size(net: &ValidatedNetwork, limit: usize) -> Result<Vec<ConceptId>, OracleError> {
    let candidates = net.non_bottom();
    // Subsets are indexed by u64 masks.
    if candidates.len() > limit.min(63) {
        return Err(OracleError::TooLarge {
            count: candidates.len(),
            limit: limit.min(63),
        });
    }
    Ok(candidates)
}

/// Every consistent interpretation, largest first, then lexicographic by
/// sorted concept ids. `maximal` is set on those with no consistent strict
/// superset.
pub fn enumerate_interpretations(
    net: &ValidatedNetwork,
    clamped: &BTreeSet<ConceptId>,
    options: OracleOptions,
) -> Result<Vec<ConsistencyReport>, OracleError> {
    let candidates = check_size(net, options.limit)?;
    let k = candidates.len();

    let mut consistent: Vec<(u64, ConsistencyReport)> = Vec::new();
    for mask in 0u64..(1u64 << k) {
        let interpretation = Interpretation::new(
            (0..k)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| candidates[b]),
        );
        let report = interpretation_consistent(net, &interpretation, clamped, options.tau);
        if report.consistent {
            consistent.push((mask, report));
        }
    }

    consistent.sort_by(|(_, a), (_, b)| {
        b.interpretation
            .len()
            .cmp(&a.interpretation.len())
            .then_with(|| {
                a.interpretation
                    .inferred
                    .iter()
                    .cmp(b.interpretation.inferred.iter())
            })
    });

    // Largest first: a set is maximal unless it sits inside an earlier maximal one.
    let mut maximal_masks: Vec<u64> = Vec::new();
    for (mask, report) in &mut consistent {
        report.maximal = !maximal_masks.iter().any(|&m| m & *mask == *mask);
        if report.maximal {
            maximal_masks.push(*mask);
        }
    }

    let reports: Vec<ConsistencyReport> = consistent.into_iter().map(|(_, r)| r).collect();
    Ok(reports)
}

/// Summarises the maximal consistent interpretations per non-bottom concept.
pub fn oracle_verdicts(
    net: &ValidatedNetwork,
    clamped: &BTreeSet<ConceptId>,
    options: OracleOptions,
) -> Result<BTreeMap<ConceptId, OracleVerdict>, OracleError> {
    let reports = enumerate_interpretations(net, clamped, options)?;
    Ok(verdicts_from_reports(net, &reports))
}

pub fn verdicts_from_reports(
    net: &ValidatedNetwork,
    reports: &[ConsistencyReport],
) -> BTreeMap<ConceptId, OracleVerdict> {
    let maximal: Vec<&Interpretation> = reports
        .iter()
        .filter(|r| r.maximal)
        .map(|r| &r.interpretation)
        .collect();
    net.non_bottom()
        .into_iter()
        .map(|c| {
            let hits = maximal.iter().filter(|i| i.inferred.contains(&c)).count();
            let verdict = if hits == 0 {
                OracleVerdict::InNone
            } else if hits == maximal.len() {
                OracleVerdict::InAllMaximal
            } else {
                OracleVerdict::InSomeMaximal
            };
            (c, verdict)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{canonical_network, ids, validate_network, ConceptSpec, NetworkSpec};

    fn interp(net: &ValidatedNetwork, names: &[&str]) -> Interpretation {
        Interpretation {
            inferred: ids(net, names),
        }
    }

    fn three_layer() -> ValidatedNetwork {
        let mut spec = canonical_network().to_spec();
        spec.concepts
            .push(ConceptSpec::new("anchovy", 2, &[&["salt"]]));
        validate_network(&spec).unwrap()
    }

    #[test]
    fn effective_active_is_union() {
        let net = canonical_network();
        assert_eq!(
            effective_active(&interp(&net, &["salt"]), &ids(&net, &["looking", "white"])),
            ids(&net, &["looking", "white", "salt"])
        );
        assert!(effective_active(&Interpretation::default(), &BTreeSet::new()).is_empty());

        let net = three_layer();
        assert_eq!(
            effective_active(
                &interp(&net, &["salt", "anchovy"]),
                &ids(&net, &["tasting", "salty"])
            ),
            ids(&net, &["tasting", "salty", "salt", "anchovy"])
        );
    }

    #[test]
    fn local_consistency_examples() {
        let net = canonical_network();
        let salt = net.lookup("salt").unwrap();

        let (ok, detail) =
            concept_locally_consistent(&net, salt, &ids(&net, &["looking", "white"]), 0.5).unwrap();
        assert!(ok);
        assert_eq!(detail.complete_patterns, 1);

        let (ok, detail) = concept_locally_consistent(
            &net,
            salt,
            &ids(&net, &["looking", "white", "tasting"]),
            0.5,
        )
        .unwrap();
        assert!(!ok);
        assert_eq!(
            detail.violated_patterns,
            vec![ViolatedPattern {
                ordinal: 0,
                missing: vec![net.lookup("salty").unwrap()]
            }]
        );

        let (ok, _) = concept_locally_consistent(&net, salt, &BTreeSet::new(), 0.5).unwrap();
        assert!(!ok);

        assert_eq!(
            concept_locally_consistent(&net, ConceptId(42), &BTreeSet::new(), 0.5),
            Err(OracleError::UnknownConcept(ConceptId(42)))
        );
        assert_eq!(
            concept_locally_consistent(&net, ConceptId(0), &BTreeSet::new(), 0.5),
            Err(OracleError::BottomConcept("looking".into()))
        );
    }

    #[test]
    fn unexpected_examples() {
        let net = canonical_network();
        assert!(unexpected_elements(
            &net,
            &interp(&net, &["salt"]),
            &ids(&net, &["looking", "white"]),
            0.5
        )
        .is_empty());
        assert_eq!(
            unexpected_elements(
                &net,
                &Interpretation::default(),
                &ids(&net, &["white"]),
                0.5
            ),
            ids(&net, &["white"])
        );
        assert_eq!(
            unexpected_elements(
                &net,
                &interp(&net, &["salt"]),
                &ids(&net, &["looking", "white", "sweet"]),
                0.5
            ),
            ids(&net, &["sweet"])
        );
    }

    #[test]
    fn mid_layer_concepts_need_explaining() {
        let net = three_layer();
        let clamp = ids(&net, &["tasting", "salty"]);
        assert_eq!(
            unexpected_elements(&net, &interp(&net, &["salt"]), &clamp, 0.5),
            ids(&net, &["salt"])
        );
        assert!(
            unexpected_elements(&net, &interp(&net, &["salt", "anchovy"]), &clamp, 0.5).is_empty()
        );
    }

    #[test]
    fn consistency_examples() {
        let net = canonical_network();
        let r = interpretation_consistent(
            &net,
            &interp(&net, &["salt"]),
            &ids(&net, &["looking", "white"]),
            0.5,
        );
        assert!(r.consistent);

        let r = interpretation_consistent(
            &net,
            &interp(&net, &["salt"]),
            &ids(&net, &["looking", "white", "tasting"]),
            0.5,
        );
        assert!(!r.consistent);
        let salt = net.lookup("salt").unwrap();
        assert_eq!(
            r.per_concept[&salt].violated_patterns,
            vec![ViolatedPattern {
                ordinal: 0,
                missing: vec![net.lookup("salty").unwrap()]
            }]
        );

        let r = interpretation_consistent(&net, &Interpretation::default(), &BTreeSet::new(), 0.5);
        assert!(r.consistent);
    }

    fn consistent_sets(net: &ValidatedNetwork, clamp: &[&str]) -> Vec<(String, bool)> {
        enumerate_interpretations(net, &ids(net, clamp), OracleOptions::default())
            .unwrap()
            .iter()
            .map(|r| (net.format_set(&r.interpretation.inferred), r.maximal))
            .collect()
    }

    #[test]
    fn enumeration_examples() {
        let net = canonical_network();
        assert_eq!(
            consistent_sets(&net, &["looking", "white"]),
            vec![
                ("{salt,sugar}".to_string(), true),
                ("{salt}".to_string(), false),
                ("{sugar}".to_string(), false),
            ]
        );
        assert_eq!(
            consistent_sets(&net, &["tasting", "salty"]),
            vec![("{salt}".to_string(), true)]
        );
        assert_eq!(consistent_sets(&net, &[]), vec![("{}".to_string(), true)]);
        assert!(consistent_sets(&net, &["looking", "white", "tasting"]).is_empty());
    }

    #[test]
    fn verdict_examples() {
        let net = canonical_network();
        let salt = net.lookup("salt").unwrap();
        let sugar = net.lookup("sugar").unwrap();
        let opts = OracleOptions::default();

        let v = oracle_verdicts(&net, &ids(&net, &["tasting", "salty"]), opts).unwrap();
        assert_eq!(v[&salt], OracleVerdict::InAllMaximal);
        assert_eq!(v[&sugar], OracleVerdict::InNone);

        let v = oracle_verdicts(&net, &ids(&net, &["looking", "white"]), opts).unwrap();
        assert_eq!(v[&salt], OracleVerdict::InAllMaximal);
        assert_eq!(v[&sugar], OracleVerdict::InAllMaximal);

        let v = oracle_verdicts(&net, &BTreeSet::new(), opts).unwrap();
        assert!(v.values().all(|&x| x == OracleVerdict::InNone));
    }

    #[test]
    fn some_maximal_when_maximal_sets_differ() {
        // X and Y each explain one of two rival readings of {a,b}, and each
        // has a pattern that becomes applicable-incomplete if the other's
        // reading is also inferred.
        let spec = NetworkSpec {
            concepts: vec![
                ConceptSpec::bottom("a"),
                ConceptSpec::bottom("b"),
                ConceptSpec::bottom("c"),
                ConceptSpec::bottom("d"),
                ConceptSpec::new("p", 1, &[&["a", "b"]]),
                ConceptSpec::new("q", 1, &[&["a", "b"]]),
                ConceptSpec::new("z", 1, &[&["c", "d"]]),
                ConceptSpec::new("w", 1, &[&["c", "d"]]),
                ConceptSpec::new("X", 2, &[&["p"], &["q", "z"]]),
                ConceptSpec::new("Y", 2, &[&["q"], &["p", "w"]]),
            ],
        };
        let net = validate_network(&spec).unwrap();
        assert_eq!(
            consistent_sets(&net, &["a", "b"]),
            vec![("{p,X}".to_string(), true), ("{q,Y}".to_string(), true)]
        );
        let v = oracle_verdicts(&net, &ids(&net, &["a", "b"]), OracleOptions::default()).unwrap();
        for name in ["p", "q", "X", "Y"] {
            assert_eq!(
                v[&net.lookup(name).unwrap()],
                OracleVerdict::InSomeMaximal,
                "{name}"
            );
        }
        for name in ["z", "w"] {
            assert_eq!(
                v[&net.lookup(name).unwrap()],
                OracleVerdict::InNone,
                "{name}"
            );
        }
    }

    #[test]
    fn too_large_is_refused() {
        let mut spec = NetworkSpec {
            concepts: vec![ConceptSpec::bottom("a"), ConceptSpec::bottom("b")],
        };
        for i in 0..21 {
            spec.concepts
                .push(ConceptSpec::new(format!("c{i}"), 1, &[&["a", "b"]]));
        }
        let net = validate_network(&spec).unwrap();
        assert_eq!(
            enumerate_interpretations(&net, &BTreeSet::new(), OracleOptions::default()),
            Err(OracleError::TooLarge {
                count: 21,
                limit: 20
            })
        );
    }
}
