//! Concept networks: layered units, each defined by a set of conditional
//! bistable patterns over the layer directly below it.
//!
//! Layer 0 holds the clampable observations ("looking", "salty", ...). Every
//! concept on layer `n >= 1` is described by one or more patterns, each a set
//! of layer `n - 1` concepts. A pattern is evaluated against a set of active
//! units and lands in one of three states: off, applicable but incomplete, or
//! complete.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default applicability threshold: half of a pattern's elements.
pub const DEFAULT_APPLICABILITY: f64 = 0.5;

/// Dense index of a concept, assigned in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConceptId(pub usize);

impl ConceptId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Unvalidated network description, with pattern elements given by name.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NetworkSpec {
    pub concepts: Vec<ConceptSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptSpec {
    pub name: String,
    pub layer: usize,
    pub patterns: Vec<Vec<String>>,
}

impl ConceptSpec {
    pub fn bottom(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            layer: 0,
            patterns: Vec::new(),
        }
    }

    pub fn new(name: impl Into<String>, layer: usize, patterns: &[&[&str]]) -> Self {
        Self {
            name: name.into(),
            layer,
            patterns: patterns
                .iter()
                .map(|p| p.iter().map(|s| s.to_string()).collect())
                .collect(),
        }
    }
}

/// A resolved pattern. Elements keep their file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    elements: Vec<ConceptId>,
}

impl Pattern {
    pub fn elements(&self) -> &[ConceptId] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        self.elements.contains(&id)
    }

    /// Number of elements for which `is_active` holds.
    pub fn present_count(&self, is_active: impl Fn(ConceptId) -> bool) -> usize {
        self.elements.iter().filter(|&&e| is_active(e)).count()
    }

    /// Elements for which `is_active` does not hold, in pattern order.
    pub fn missing(&self, is_active: impl Fn(ConceptId) -> bool) -> Vec<ConceptId> {
        self.elements
            .iter()
            .copied()
            .filter(|&e| !is_active(e))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PatternStatus {
    Off,
    ApplicableIncomplete,
    Complete,
}

impl PatternStatus {
    /// True for any state other than `Off`.
    pub fn is_applicable(self) -> bool {
        self != PatternStatus::Off
    }
}

/// Evaluated pattern: its status plus the exact present fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternState {
    pub status: PatternStatus,
    pub present: usize,
    pub total: usize,
}

impl PatternState {
    pub fn fraction(&self) -> f64 {
        self.present as f64 / self.total as f64
    }

    /// Classifies `present` of `total` elements against threshold `tau`
    /// (inclusive: a fraction equal to `tau` is applicable).
    pub fn classify(present: usize, total: usize, tau: f64) -> Self {
        debug_assert!(total > 0);
        let status = if present == total {
            PatternStatus::Complete
        } else if present as f64 / total as f64 >= tau {
            PatternStatus::ApplicableIncomplete
        } else {
            PatternStatus::Off
        };
        Self {
            status,
            present,
            total,
        }
    }
}

/// State of `pattern` given the membership test `is_active`.
pub fn pattern_state_with(
    pattern: &Pattern,
    is_active: impl Fn(ConceptId) -> bool,
    tau: f64,
) -> PatternState {
    PatternState::classify(pattern.present_count(is_active), pattern.len(), tau)
}

/// State of `pattern` against an explicit active set.
pub fn pattern_state(pattern: &Pattern, active: &BTreeSet<ConceptId>, tau: f64) -> PatternState {
    pattern_state_with(pattern, |e| active.contains(&e), tau)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub name: String,
    pub layer: usize,
    pub patterns: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationWarning {
    /// A one-element pattern is never applicable-but-incomplete.
    SingletonPattern { concept: String, ordinal: usize },
}

impl fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationWarning::SingletonPattern { concept, ordinal } => write!(
                f,
                "concept '{concept}' pattern {ordinal} has a single element and can never be applicable-but-incomplete"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("network has no concepts")]
    EmptyNetwork,
    #[error("concept {index} has an empty name")]
    EmptyName { index: usize },
    #[error("duplicate concept name '{0}'")]
    DuplicateName(String),
    #[error("layer-0 concept '{0}' must not have patterns")]
    BottomWithPatterns(String),
    #[error("concept '{0}' on layer >= 1 has no patterns")]
    NonBottomWithoutPatterns(String),
    #[error("concept '{concept}' pattern {ordinal} is empty")]
    EmptyPattern { concept: String, ordinal: usize },
    #[error("concept '{concept}' pattern {ordinal} references unknown concept '{element}'")]
    DanglingReference {
        concept: String,
        ordinal: usize,
        element: String,
    },
    #[error(
        "concept '{concept}' (layer {layer}) pattern {ordinal} references '{element}' on layer {element_layer}; expected layer {expected}",
        expected = layer - 1
    )]
    LayerViolation {
        concept: String,
        layer: usize,
        ordinal: usize,
        element: String,
        element_layer: usize,
    },
    #[error("concept '{concept}' pattern {ordinal} lists '{element}' twice")]
    DuplicateElement {
        concept: String,
        ordinal: usize,
        element: String,
    },
    #[error("concept '{concept}' patterns {first} and {second} have the same elements")]
    DuplicatePattern {
        concept: String,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown concept {0}")]
pub struct UnknownConcept(pub ConceptId);

/// A structurally checked network with lookup indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedNetwork {
    concepts: Vec<Concept>,
    layers: Vec<Vec<ConceptId>>,
    parents: Vec<Vec<(ConceptId, usize)>>,
    by_name: HashMap<String, ConceptId>,
    warnings: Vec<ValidationWarning>,
}

/// Checks every structural invariant of `spec` and builds the indices.
pub fn validate_network(spec: &NetworkSpec) -> Result<ValidatedNetwork, ValidationError> {
    if spec.concepts.is_empty() {
        return Err(ValidationError::EmptyNetwork);
    }

    let mut by_name = HashMap::with_capacity(spec.concepts.len());
    for (index, c) in spec.concepts.iter().enumerate() {
        if c.name.is_empty() {
            return Err(ValidationError::EmptyName { index });
        }
        if by_name.insert(c.name.clone(), ConceptId(index)).is_some() {
            return Err(ValidationError::DuplicateName(c.name.clone()));
        }
    }

    let mut concepts = Vec::with_capacity(spec.concepts.len());
    let mut warnings = Vec::new();
    for c in &spec.concepts {
        if c.layer == 0 && !c.patterns.is_empty() {
            return Err(ValidationError::BottomWithPatterns(c.name.clone()));
        }
        if c.layer > 0 && c.patterns.is_empty() {
            return Err(ValidationError::NonBottomWithoutPatterns(c.name.clone()));
        }

        let mut patterns: Vec<Pattern> = Vec::with_capacity(c.patterns.len());
        let mut seen_sets: Vec<BTreeSet<ConceptId>> = Vec::with_capacity(c.patterns.len());
        for (ordinal, names) in c.patterns.iter().enumerate() {
            if names.is_empty() {
                return Err(ValidationError::EmptyPattern {
                    concept: c.name.clone(),
                    ordinal,
                });
            }
            let mut elements = Vec::with_capacity(names.len());
            let mut set = BTreeSet::new();
            for element in names {
                let id =
                    *by_name
                        .get(element)
                        .ok_or_else(|| ValidationError::DanglingReference {
                            concept: c.name.clone(),
                            ordinal,
                            element: element.clone(),
                        })?;
                let element_layer = spec.concepts[id.0].layer;
                if element_layer + 1 != c.layer {
                    return Err(ValidationError::LayerViolation {
                        concept: c.name.clone(),
                        layer: c.layer,
                        ordinal,
                        element: element.clone(),
                        element_layer,
                    });
                }
                if !set.insert(id) {
                    return Err(ValidationError::DuplicateElement {
                        concept: c.name.clone(),
                        ordinal,
                        element: element.clone(),
                    });
                }
                elements.push(id);
            }
            if let Some(first) = seen_sets.iter().position(|s| *s == set) {
                return Err(ValidationError::DuplicatePattern {
                    concept: c.name.clone(),
                    first,
                    second: ordinal,
                });
            }
            if elements.len() == 1 {
                warnings.push(ValidationWarning::SingletonPattern {
                    concept: c.name.clone(),
                    ordinal,
                });
            }
            seen_sets.push(set);
            patterns.push(Pattern { elements });
        }

        concepts.push(Concept {
            name: c.name.clone(),
            layer: c.layer,
            patterns,
        });
    }

    // Strict layering makes the occupied layers contiguous from 0.
    let top = concepts.iter().map(|c| c.layer).max().unwrap_or(0);
    let mut layers = vec![Vec::new(); top + 1];
    for (i, c) in concepts.iter().enumerate() {
        layers[c.layer].push(ConceptId(i));
    }

    let mut parents = vec![Vec::new(); concepts.len()];
    for (owner, c) in concepts.iter().enumerate() {
        for (ordinal, p) in c.patterns.iter().enumerate() {
            for &e in p.elements() {
                parents[e.0].push((ConceptId(owner), ordinal));
            }
        }
    }

    Ok(ValidatedNetwork {
        concepts,
        layers,
        parents,
        by_name,
        warnings,
    })
}

impl ValidatedNetwork {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn concept(&self, id: ConceptId) -> &Concept {
        &self.concepts[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ConceptId> + '_ {
        (0..self.concepts.len()).map(ConceptId)
    }

    pub fn name(&self, id: ConceptId) -> &str {
        &self.concepts[id.0].name
    }

    pub fn layer_of(&self, id: ConceptId) -> usize {
        self.concepts[id.0].layer
    }

    pub fn lookup(&self, name: &str) -> Option<ConceptId> {
        self.by_name.get(name).copied()
    }

    /// Concepts on each layer, in file order. Index 0 is the bottom layer.
    pub fn layers(&self) -> &[Vec<ConceptId>] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn top_layer(&self) -> usize {
        self.layers.len() - 1
    }

    /// True when some layer exists above `id`, i.e. something could explain it.
    pub fn has_layer_above(&self, id: ConceptId) -> bool {
        self.layer_of(id) < self.top_layer()
    }

    pub fn bottom(&self) -> &[ConceptId] {
        &self.layers[0]
    }

    /// Concepts on layers >= 1, in file order.
    pub fn non_bottom(&self) -> Vec<ConceptId> {
        self.ids().filter(|&c| self.layer_of(c) > 0).collect()
    }

    pub fn pattern_count(&self) -> usize {
        self.concepts.iter().map(|c| c.patterns.len()).sum()
    }

    pub fn warnings(&self) -> &[ValidationWarning] {
        &self.warnings
    }

    /// Owners (and pattern ordinals) of every pattern containing `id`,
    /// ordered by owner index then ordinal.
    pub fn element_parents(&self, id: ConceptId) -> Result<&[(ConceptId, usize)], UnknownConcept> {
        self.parents
            .get(id.0)
            .map(Vec::as_slice)
            .ok_or(UnknownConcept(id))
    }

    /// Converts back to the name-based description.
    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            concepts: self
                .concepts
                .iter()
                .map(|c| ConceptSpec {
                    name: c.name.clone(),
                    layer: c.layer,
                    patterns: c
                        .patterns
                        .iter()
                        .map(|p| {
                            p.elements()
                                .iter()
                                .map(|&e| self.name(e).to_string())
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Renders a set of ids as `{a,b}` using concept names in id order.
    pub fn format_set<'a>(&self, ids: impl IntoIterator<Item = &'a ConceptId>) -> String {
        let mut ids: Vec<ConceptId> = ids.into_iter().copied().collect();
        ids.sort();
        let names: Vec<&str> = ids.iter().map(|&i| self.name(i)).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Resolves names against the bottom layer.
    pub fn resolve_bottom<S: AsRef<str>>(
        &self,
        names: &[S],
    ) -> Result<BTreeSet<ConceptId>, ClampError> {
        let mut out = BTreeSet::new();
        for n in names {
            let n = n.as_ref();
            let id = self
                .lookup(n)
                .ok_or_else(|| ClampError::UnknownElement(n.to_string()))?;
            if self.layer_of(id) != 0 {
                return Err(ClampError::NonBottomClamp(n.to_string()));
            }
            out.insert(id);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClampError {
    #[error("unknown element '{0}'")]
    UnknownElement(String),
    #[error("'{0}' is not a layer-0 concept and cannot be clamped")]
    NonBottomClamp(String),
}

/// The salt/sugar network: five observations and two concepts sharing the
/// `{looking, white}` pattern.
pub fn canonical_network() -> ValidatedNetwork {
    let spec = NetworkSpec {
        concepts: vec![
            ConceptSpec::bottom("looking"),
            ConceptSpec::bottom("tasting"),
            ConceptSpec::bottom("white"),
            ConceptSpec::bottom("salty"),
            ConceptSpec::bottom("sweet"),
            ConceptSpec::new("salt", 1, &[&["tasting", "salty"], &["looking", "white"]]),
            ConceptSpec::new("sugar", 1, &[&["tasting", "sweet"], &["looking", "white"]]),
        ],
    };
    validate_network(&spec).expect("canonical network is valid")
}

/// Groups ids by layer; handy for reports.
pub fn by_layer(
    net: &ValidatedNetwork,
    ids: &BTreeSet<ConceptId>,
) -> BTreeMap<usize, Vec<ConceptId>> {
    let mut out: BTreeMap<usize, Vec<ConceptId>> = BTreeMap::new();
    for &id in ids {
        out.entry(net.layer_of(id)).or_default().push(id);
    }
    out
}

/// Set of ids from an iterator of names; panics on unknown names. Test helper.
#[doc(hidden)]
pub fn ids(net: &ValidatedNetwork, names: &[&str]) -> BTreeSet<ConceptId> {
    names
        .iter()
        .map(|n| {
            net.lookup(n)
                .unwrap_or_else(|| panic!("unknown concept {n}"))
        })
        .collect()
}
