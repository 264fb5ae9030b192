//! Symbolic world model: predicates, states, and STRIPS-style actions.
//!
//! States are flat sets of canonical predicate atoms. Actions carry
//! positive/negative preconditions, add effects and delete patterns. A delete
//! pattern may end in `:*` to remove every atom sharing that prefix, which is
//! how "drive to X" clears the previous `robot_at:` fact.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("predicate text is empty")]
    EmptyPredicate,
    #[error("invalid delete pattern `{0}`")]
    InvalidPattern(String),
    #[error("action title is empty")]
    EmptyTitle,
    #[error("action `{title}` both adds and deletes `{atom}`")]
    ConflictingEffects { title: String, atom: String },
    #[error("duplicate action title `{0}`")]
    DuplicateTitle(String),
    #[error("preconditions of `{title}` not satisfied: {unmet:?}")]
    PreconditionViolated { title: String, unmet: Vec<String> },
}

/// Lowercases, trims and replaces whitespace with `_`.
pub fn canonicalize(text: &str) -> String {
    text.trim()
        .chars()
        .flat_map(|c| {
            if c.is_whitespace() {
                vec!['_']
            } else {
                c.to_lowercase().collect()
            }
        })
        .collect()
}

/// An atomic fact such as `robot_at:apple_table` or `gripper_empty`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Predicate(String);

impl Predicate {
    pub fn new(text: &str) -> Result<Self, WorldError> {
        let atom = canonicalize(text);
        if atom.is_empty() {
            return Err(WorldError::EmptyPredicate);
        }
        Ok(Predicate(atom))
    }

    pub fn atom(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Predicate {
    type Error = WorldError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Predicate::new(&value)
    }
}

impl From<Predicate> for String {
    fn from(p: Predicate) -> String {
        p.0
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A set of facts. Transitions return new states.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    facts: BTreeSet<Predicate>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms<I, S>(atoms: I) -> Result<Self, WorldError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let facts = atoms
            .into_iter()
            .map(|a| Predicate::new(a.as_ref()))
            .collect::<Result<_, _>>()?;
        Ok(WorldState { facts })
    }

    pub fn holds(&self, p: &Predicate) -> bool {
        self.facts.contains(p)
    }

    pub fn holds_atom(&self, atom: &str) -> bool {
        self.facts.iter().any(|p| p.atom() == atom)
    }

    pub fn facts(&self) -> impl Iterator<Item = &Predicate> {
        self.facts.iter()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn with(mut self, p: Predicate) -> Self {
        self.facts.insert(p);
        self
    }

    pub fn insert(&mut self, p: Predicate) {
        self.facts.insert(p);
    }
}

impl FromIterator<Predicate> for WorldState {
    fn from_iter<T: IntoIterator<Item = Predicate>>(iter: T) -> Self {
        WorldState {
            facts: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub predicate: Predicate,
    pub polarity: Polarity,
}

impl Literal {
    pub fn pos(p: Predicate) -> Self {
        Literal {
            predicate: p,
            polarity: Polarity::Positive,
        }
    }

    pub fn neg(p: Predicate) -> Self {
        Literal {
            predicate: p,
            polarity: Polarity::Negative,
        }
    }

    pub fn satisfied_by(&self, state: &WorldState) -> bool {
        match self.polarity {
            Polarity::Positive => state.holds(&self.predicate),
            Polarity::Negative => !state.holds(&self.predicate),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Polarity::Positive => write!(f, "+{}", self.predicate),
            Polarity::Negative => write!(f, "-{}", self.predicate),
        }
    }
}

/// Either an exact atom or every atom beginning with `prefix:`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DeletePattern {
    Exact(Predicate),
    /// Stored with its trailing `:`.
    Prefix(String),
}

impl DeletePattern {
    pub fn parse(text: &str) -> Result<Self, WorldError> {
        let canon = canonicalize(text);
        if let Some(head) = canon.strip_suffix(":*") {
            if head.is_empty() || head.contains('*') {
                return Err(WorldError::InvalidPattern(text.to_string()));
            }
            return Ok(DeletePattern::Prefix(format!("{head}:")));
        }
        if canon.contains('*') {
            return Err(WorldError::InvalidPattern(text.to_string()));
        }
        Ok(DeletePattern::Exact(Predicate::new(&canon)?))
    }

    pub fn matches(&self, p: &Predicate) -> bool {
        match self {
            DeletePattern::Exact(e) => e == p,
            DeletePattern::Prefix(prefix) => p.atom().starts_with(prefix.as_str()),
        }
    }
}

impl TryFrom<String> for DeletePattern {
    type Error = WorldError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        DeletePattern::parse(&value)
    }
}

impl From<DeletePattern> for String {
    fn from(d: DeletePattern) -> String {
        d.to_string()
    }
}

impl fmt::Display for DeletePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeletePattern::Exact(p) => write!(f, "{p}"),
            DeletePattern::Prefix(prefix) => write!(f, "{prefix}*"),
        }
    }
}

/// Opaque handle the executor hands to the simulator, e.g. `drive:apple_table`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BehaviorId(pub String);

impl BehaviorId {
    pub fn new(id: impl Into<String>) -> Self {
        BehaviorId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BehaviorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawActionSpec")]
pub struct ActionSpec {
    title: String,
    preconditions: Vec<Literal>,
    adds: Vec<Predicate>,
    deletes: Vec<DeletePattern>,
    behavior: BehaviorId,
}

#[derive(Deserialize)]
struct RawActionSpec {
    title: String,
    #[serde(default)]
    preconditions: Vec<Literal>,
    #[serde(default)]
    adds: Vec<Predicate>,
    #[serde(default)]
    deletes: Vec<DeletePattern>,
    behavior: BehaviorId,
}

impl TryFrom<RawActionSpec> for ActionSpec {
    type Error = WorldError;

    fn try_from(raw: RawActionSpec) -> Result<Self, Self::Error> {
        let mut b = ActionSpec::builder(&raw.title, raw.behavior);
        b.preconditions = raw.preconditions;
        b.adds = raw.adds;
        b.deletes = raw.deletes;
        b.build()
    }
}

impl ActionSpec {
    pub fn builder(title: &str, behavior: BehaviorId) -> ActionBuilder {
        ActionBuilder {
            title: title.trim().to_string(),
            preconditions: Vec::new(),
            adds: Vec::new(),
            deletes: Vec::new(),
            behavior,
            error: None,
        }
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn preconditions(&self) -> &[Literal] {
        &self.preconditions
    }

    pub fn adds(&self) -> &[Predicate] {
        &self.adds
    }

    pub fn deletes(&self) -> &[DeletePattern] {
        &self.deletes
    }

    pub fn behavior(&self) -> &BehaviorId {
        &self.behavior
    }

    pub fn unmet_preconditions(&self, state: &WorldState) -> Vec<&Literal> {
        self.preconditions
            .iter()
            .filter(|l| !l.satisfied_by(state))
            .collect()
    }
}

/// Collects an action definition; atom parse errors surface at [`build`](Self::build).
#[derive(Debug)]
pub struct ActionBuilder {
    title: String,
    preconditions: Vec<Literal>,
    adds: Vec<Predicate>,
    deletes: Vec<DeletePattern>,
    behavior: BehaviorId,
    error: Option<WorldError>,
}

impl ActionBuilder {
    fn record<T>(&mut self, r: Result<T, WorldError>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.error.get_or_insert(e);
                None
            }
        }
    }

    pub fn requires(mut self, atom: &str) -> Self {
        if let Some(p) = self.record(Predicate::new(atom)) {
            self.preconditions.push(Literal::pos(p));
        }
        self
    }

    pub fn requires_not(mut self, atom: &str) -> Self {
        if let Some(p) = self.record(Predicate::new(atom)) {
            self.preconditions.push(Literal::neg(p));
        }
        self
    }

    pub fn adds(mut self, atom: &str) -> Self {
        if let Some(p) = self.record(Predicate::new(atom)) {
            self.adds.push(p);
        }
        self
    }

    pub fn deletes(mut self, pattern: &str) -> Self {
        if let Some(d) = self.record(DeletePattern::parse(pattern)) {
            self.deletes.push(d);
        }
        self
    }

    pub fn build(mut self) -> Result<ActionSpec, WorldError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        if self.title.is_empty() {
            return Err(WorldError::EmptyTitle);
        }
        dedup(&mut self.preconditions);
        dedup(&mut self.adds);
        dedup(&mut self.deletes);
        for d in &self.deletes {
            if let DeletePattern::Exact(p) = d {
                if self.adds.contains(p) {
                    return Err(WorldError::ConflictingEffects {
                        title: self.title,
                        atom: p.to_string(),
                    });
                }
            }
        }
        Ok(ActionSpec {
            title: self.title,
            preconditions: self.preconditions,
            adds: self.adds,
            deletes: self.deletes,
            behavior: self.behavior,
        })
    }
}

fn dedup<T: PartialEq>(v: &mut Vec<T>) {
    let mut out: Vec<T> = Vec::with_capacity(v.len());
    for x in v.drain(..) {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    *v = out;
}

/// Actions keyed by title, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionRegistry {
    actions: IndexMap<String, ActionSpec>,
}

impl ActionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, action: ActionSpec) -> Result<(), WorldError> {
        if self.actions.contains_key(action.title()) {
            return Err(WorldError::DuplicateTitle(action.title.clone()));
        }
        self.actions.insert(action.title.clone(), action);
        Ok(())
    }

    pub fn get(&self, title: &str) -> Option<&ActionSpec> {
        self.actions.get(title)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActionSpec> {
        self.actions.values()
    }

    pub fn titles(&self) -> impl Iterator<Item = &str> {
        self.actions.keys().map(String::as_str)
    }

    pub fn get_index(&self, i: usize) -> Option<&ActionSpec> {
        self.actions.get_index(i).map(|(_, a)| a)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

impl TryFrom<Vec<ActionSpec>> for ActionRegistry {
    type Error = WorldError;

    fn try_from(actions: Vec<ActionSpec>) -> Result<Self, Self::Error> {
        let mut reg = ActionRegistry::new();
        for a in actions {
            reg.insert(a)?;
        }
        Ok(reg)
    }
}

pub fn is_applicable(state: &WorldState, action: &ActionSpec) -> bool {
    action.preconditions.iter().all(|l| l.satisfied_by(state))
}

/// Deletes first, then adds. Fails if the action is not applicable.
pub fn apply(state: &WorldState, action: &ActionSpec) -> Result<WorldState, WorldError> {
    if !is_applicable(state, action) {
        return Err(WorldError::PreconditionViolated {
            title: action.title.clone(),
            unmet: action
                .unmet_preconditions(state)
                .into_iter()
                .map(ToString::to_string)
                .collect(),
        });
    }
    let mut facts: BTreeSet<Predicate> = state
        .facts
        .iter()
        .filter(|p| !action.deletes.iter().any(|d| d.matches(p)))
        .cloned()
        .collect();
    facts.extend(action.adds.iter().cloned());
    Ok(WorldState { facts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanCheck {
    Valid,
    Invalid { first_failing_index: usize },
}

impl PlanCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, PlanCheck::Valid)
    }
}

pub fn check_plan<'a, I>(state: &WorldState, plan: I) -> PlanCheck
where
    I: IntoIterator<Item = &'a ActionSpec>,
{
    let mut current = state.clone();
    for (i, action) in plan.into_iter().enumerate() {
        match apply(&current, action) {
            Ok(next) => current = next,
            Err(_) => {
                return PlanCheck::Invalid {
                    first_failing_index: i,
                }
            }
        }
    }
    PlanCheck::Valid
}
