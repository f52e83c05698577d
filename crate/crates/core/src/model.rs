//! The discourse model: entities and their attributes, focused attribute
//! sets, utterances, the focus stack and the context-search chain.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centering::{compute_cb, order_cf, CbState, CfList};
use crate::distinguish::KnowledgeBase;
use crate::np::{FormClass, NpForm, Realization};

/// Attribute names reserved for agreement features projected into an
/// entity's known attributes.
pub const AGREEMENT_ATTRIBUTES: [&str; 4] = ["person", "number", "gender", "animacy"];

pub fn is_agreement_attribute(name: &str) -> bool {
    AGREEMENT_ATTRIBUTES.contains(&name)
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == ':')
}

/// An `attribute:value` pair. Equality is exact token equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeValue {
    pub attribute: String,
    pub value: String,
}

impl AttributeValue {
    /// Builds a pair. Panics on empty or malformed tokens; use `parse` for
    /// untrusted input.
    pub fn new(attribute: &str, value: &str) -> Self {
        assert!(
            is_token(attribute) && is_token(value),
            "malformed attribute-value pair {attribute:?}:{value:?}"
        );
        AttributeValue {
            attribute: attribute.to_string(),
            value: value.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed attribute-value pair `{0}` (expected attribute:value)")]
pub struct AttributeParseError(pub String);

impl FromStr for AttributeValue {
    type Err = AttributeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, v) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| AttributeParseError(s.to_string()))?;
        if !is_token(a) || !is_token(v) {
            return Err(AttributeParseError(s.to_string()));
        }
        Ok(AttributeValue {
            attribute: a.to_string(),
            value: v.to_string(),
        })
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.attribute, self.value)
    }
}

impl Serialize for AttributeValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttributeValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

pub type UtteranceId = u32;
pub type SegmentId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Number {
    #[serde(rename = "sg")]
    Singular,
    #[serde(rename = "pl")]
    Plural,
}

impl Number {
    pub fn as_str(self) -> &'static str {
        match self {
            Number::Singular => "sg",
            Number::Plural => "pl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Neuter,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Neuter => "neuter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Animacy {
    Animate,
    Inanimate,
}

impl Animacy {
    pub fn as_str(self) -> &'static str {
        match self {
            Animacy::Animate => "animate",
            Animacy::Inanimate => "inanimate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Agreement {
    pub person: u8,
    pub number: Number,
    pub gender: Gender,
    pub animacy: Animacy,
}

impl Agreement {
    pub fn third(number: Number, gender: Gender, animacy: Animacy) -> Self {
        Agreement {
            person: 3,
            number,
            gender,
            animacy,
        }
    }

    /// Agreement projected as attribute-value pairs.
    pub fn pairs(&self) -> [AttributeValue; 4] {
        [
            AttributeValue::new("person", &self.person.to_string()),
            AttributeValue::new("number", self.number.as_str()),
            AttributeValue::new("gender", self.gender.as_str()),
            AttributeValue::new("animacy", self.animacy.as_str()),
        ]
    }
}

/// Grammatical role, ranked by increasing obliqueness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GramRole {
    Subject = 0,
    DirectObject = 1,
    IndirectObject = 2,
    Oblique = 3,
    Adjunct = 4,
}

impl GramRole {
    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn is_subject(self) -> bool {
        self == GramRole::Subject
    }
}

/// A ground predicate over entity ids and literal tokens, e.g. `on(e2,e4)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<String>,
}

/// An argument of a constraint: the free slot `X` or a literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Slot,
    Atom(String),
}

/// A given-information predicate with one free entity slot, e.g.
/// `on(X,e4)`. It binds to the mention that carries it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermParseError {
    #[error("malformed predicate term `{0}`")]
    Malformed(String),
    #[error("constraint `{0}` must contain exactly one free slot X")]
    SlotCount(String),
    #[error("fact `{0}` must not contain the free slot X")]
    SlotInFact(String),
}

fn split_term(s: &str) -> Result<(String, Vec<String>), TermParseError> {
    let bad = || TermParseError::Malformed(s.to_string());
    let s = s.trim();
    let open = s.find('(').ok_or_else(bad)?;
    if !s.ends_with(')') {
        return Err(bad());
    }
    let predicate = s[..open].trim();
    if predicate.is_empty() || predicate.chars().any(|c| c.is_whitespace() || c == ',') {
        return Err(bad());
    }
    let inner = &s[open + 1..s.len() - 1];
    let mut args = Vec::new();
    let mut current = String::new();
    let mut quoted = false;
    let mut was_quoted = false;
    for c in inner.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                was_quoted = true;
            }
            ',' if !quoted => {
                args.push(std::mem::take(&mut current));
            }
            c if quoted => current.push(c),
            c if c.is_whitespace() => {}
            '(' | ')' => return Err(bad()),
            c => current.push(c),
        }
    }
    if quoted {
        return Err(bad());
    }
    if !current.is_empty() || !args.is_empty() || was_quoted {
        args.push(current);
    }
    if args.is_empty() || args.iter().any(|a| a.is_empty()) {
        return Err(bad());
    }
    Ok((predicate.to_string(), args))
}

fn write_term<'a>(
    f: &mut fmt::Formatter<'_>,
    predicate: &str,
    args: impl Iterator<Item = &'a str>,
) -> fmt::Result {
    write!(f, "{predicate}(")?;
    for (i, a) in args.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        if a.chars().any(|c| c.is_whitespace() || c == ',' || c == '(' || c == ')') {
            write!(f, "\"{a}\"")?;
        } else {
            f.write_str(a)?;
        }
    }
    f.write_str(")")
}

impl FromStr for Fact {
    type Err = TermParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (predicate, args) = split_term(s)?;
        if args.iter().any(|a| a == "X") {
            return Err(TermParseError::SlotInFact(s.to_string()));
        }
        Ok(Fact { predicate, args })
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.predicate, self.args.iter().map(String::as_str))
    }
}

impl FromStr for Constraint {
    type Err = TermParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (predicate, raw) = split_term(s)?;
        if raw.iter().filter(|a| *a == "X").count() != 1 {
            return Err(TermParseError::SlotCount(s.to_string()));
        }
        let args = raw
            .into_iter()
            .map(|a| if a == "X" { Term::Slot } else { Term::Atom(a) })
            .collect();
        Ok(Constraint { predicate, args })
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(
            f,
            &self.predicate,
            self.args.iter().map(|t| match t {
                Term::Slot => "X",
                Term::Atom(a) => a.as_str(),
            }),
        )
    }
}

impl Constraint {
    pub fn instantiate(&self, entity: &EntityId) -> Fact {
        Fact {
            predicate: self.predicate.clone(),
            args: self
                .args
                .iter()
                .map(|t| match t {
                    Term::Slot => entity.0.clone(),
                    Term::Atom(a) => a.clone(),
                })
                .collect(),
        }
    }

    /// The entity bound to the slot if `fact` matches this pattern.
    pub fn matches<'a>(&self, fact: &'a Fact) -> Option<&'a str> {
        if fact.predicate != self.predicate || fact.args.len() != self.args.len() {
            return None;
        }
        let mut slot = None;
        for (t, a) in self.args.iter().zip(&fact.args) {
            match t {
                Term::Slot => slot = Some(a.as_str()),
                Term::Atom(x) if x != a => return None,
                Term::Atom(_) => {}
            }
        }
        slot
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(Fact);
string_serde!(Constraint);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FavCategory {
    RecentPhrasal,
    Location,
    KeyEvent,
}

/// One focused attribute set and the utterance that set it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FavSet {
    pub pairs: BTreeSet<AttributeValue>,
    pub stamp: UtteranceId,
}

/// Focused attribute sets: at most one per category.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FavSets {
    pub recent_phrasal: Option<FavSet>,
    pub location: Option<FavSet>,
    pub key_event: Option<FavSet>,
}

impl FavSets {
    pub fn get(&self, category: FavCategory) -> Option<&FavSet> {
        match category {
            FavCategory::RecentPhrasal => self.recent_phrasal.as_ref(),
            FavCategory::Location => self.location.as_ref(),
            FavCategory::KeyEvent => self.key_event.as_ref(),
        }
    }

    pub fn set(&mut self, category: FavCategory, pairs: BTreeSet<AttributeValue>, stamp: UtteranceId) {
        let slot = match category {
            FavCategory::RecentPhrasal => &mut self.recent_phrasal,
            FavCategory::Location => &mut self.location,
            FavCategory::KeyEvent => &mut self.key_event,
        };
        *slot = Some(FavSet { pairs, stamp });
    }

    /// Sets ordered by priority: most recently stamped first, ties broken
    /// recent-phrasal, then location, then key-event.
    pub fn by_priority(&self) -> Vec<(FavCategory, &FavSet)> {
        let mut sets: Vec<_> = [
            FavCategory::RecentPhrasal,
            FavCategory::Location,
            FavCategory::KeyEvent,
        ]
        .into_iter()
        .filter_map(|c| self.get(c).map(|s| (c, s)))
        .collect();
        sets.sort_by(|(ca, a), (cb, b)| b.stamp.cmp(&a.stamp).then(ca.cmp(cb)));
        sets
    }
}

/// Declaration of a referent, as read from a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityDecl {
    pub id: EntityId,
    pub attrs: BTreeSet<AttributeValue>,
    pub basic_category: AttributeValue,
    pub agreement: Agreement,
    /// Segment whose focus space holds the entity before the first
    /// utterance; `None` for entities evoked by a mention.
    pub evoked_in: Option<SegmentId>,
    pub associations: Vec<EntityId>,
    /// Events declared key for this entity regardless of mention counts.
    pub key_events: BTreeSet<String>,
}

impl EntityDecl {
    pub fn new(
        id: impl Into<EntityId>,
        attrs: impl IntoIterator<Item = AttributeValue>,
        basic_category: AttributeValue,
        agreement: Agreement,
    ) -> Self {
        EntityDecl {
            id: id.into(),
            attrs: attrs.into_iter().collect(),
            basic_category,
            agreement,
            evoked_in: None,
            associations: Vec::new(),
            key_events: BTreeSet::new(),
        }
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        EntityId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscourseEntity {
    pub id: EntityId,
    pub known_attrs: BTreeSet<AttributeValue>,
    pub basic_category: AttributeValue,
    pub agreement: Agreement,
    pub fav: FavSets,
    pub last_location: Option<(BTreeSet<AttributeValue>, UtteranceId)>,
    pub event_agent_counts: BTreeMap<String, u32>,
    pub key_events: BTreeSet<String>,
    pub associations: Vec<EntityId>,
    pub home_segment: Option<SegmentId>,
    /// Most recent mention: utterance, segment and explicitness rank.
    pub last_mention: Option<LastMention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LastMention {
    pub utterance: UtteranceId,
    pub segment: SegmentId,
    pub explicitness: usize,
}

impl DiscourseEntity {
    /// Segment of the nearest antecedent: the last mention, or the segment
    /// the entity was evoked in.
    pub fn antecedent_segment(&self) -> Option<SegmentId> {
        self.last_mention.map(|m| m.segment).or(self.home_segment)
    }

    /// Highest-priority focused set with at least one usable modifier pair
    /// (agreement pairs and the head attribute excluded).
    pub fn top_fav_modifiers(&self, head_attribute: &str) -> Option<(FavCategory, Vec<AttributeValue>)> {
        self.fav.by_priority().into_iter().find_map(|(c, set)| {
            let pairs: Vec<_> = set
                .pairs
                .iter()
                .filter(|p| p.attribute != head_attribute && !is_agreement_attribute(&p.attribute))
                .cloned()
                .collect();
            (!pairs.is_empty()).then_some((c, pairs))
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionFlags {
    #[serde(default)]
    pub segment_onset: bool,
    #[serde(default)]
    pub attentional_shift: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub surface: String,
    pub np: NpForm,
    pub role: GramRole,
    pub gold: Option<EntityId>,
    pub zero_allowed: bool,
    pub flags: MentionFlags,
    /// False for the mention that first evokes an entity.
    pub anaphoric: bool,
    /// Given-information constraints whose slot is this mention.
    pub constraints: Vec<Constraint>,
}

impl Mention {
    pub fn form(&self) -> FormClass {
        self.np.form
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub id: UtteranceId,
    pub segment: SegmentId,
    pub mentions: Vec<Mention>,
    /// Facts the utterance establishes; they become given afterwards.
    pub facts: Vec<Fact>,
}

impl Utterance {
    /// Every constraint in the utterance with the index of the mention it
    /// binds.
    pub fn context_constraints(&self) -> impl Iterator<Item = (usize, &Constraint)> {
        self.mentions
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.constraints.iter().map(move |c| (i, c)))
    }

    /// Entities realized by annotated mentions, with roles.
    pub fn gold_realizations(&self) -> Vec<(EntityId, GramRole)> {
        self.mentions
            .iter()
            .filter_map(|m| m.gold.clone().map(|g| (g, m.role)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FocusSpace {
    pub id: SegmentId,
    pub entities: BTreeSet<EntityId>,
}

/// Focus spaces, most recent last; ids strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FocusStack {
    spaces: Vec<FocusSpace>,
}

impl FocusStack {
    pub fn spaces(&self) -> &[FocusSpace] {
        &self.spaces
    }

    pub fn current(&self) -> Option<&FocusSpace> {
        self.spaces.last()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn push(&mut self, id: SegmentId) -> Result<(), ModelError> {
        if let Some(top) = self.current() {
            if id <= top.id {
                return Err(ModelError::FocusSpaceOrder { top: top.id, id });
            }
        }
        self.spaces.push(FocusSpace {
            id,
            entities: BTreeSet::new(),
        });
        Ok(())
    }

    fn add_to_current(&mut self, entity: &EntityId) {
        if let Some(top) = self.spaces.last_mut() {
            top.entities.insert(entity.clone());
        }
    }

    fn space_mut(&mut self, id: SegmentId) -> Option<&mut FocusSpace> {
        self.spaces.iter_mut().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "stage", rename_all = "kebab-case")]
pub enum StageKind {
    PreviousCf,
    CurrentSpace { segment: SegmentId },
    /// `depth` 1 is the space immediately below the current one.
    EarlierSpace { segment: SegmentId, depth: usize },
    Union,
}

impl StageKind {
    /// True when the antecedent lies beyond the most recent earlier space.
    pub fn is_distant(&self) -> bool {
        match self {
            StageKind::EarlierSpace { depth, .. } => *depth >= 2,
            StageKind::Union => true,
            _ => false,
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageKind::PreviousCf => f.write_str("Cf(prev)"),
            StageKind::CurrentSpace { segment } => write!(f, "FS{segment}"),
            StageKind::EarlierSpace { segment, .. } => write!(f, "FS{segment}"),
            StageKind::Union => f.write_str("union"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContextStage {
    pub kind: StageKind,
    pub entities: BTreeSet<EntityId>,
}

/// Centering state recorded for a processed utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessedUtterance {
    pub id: UtteranceId,
    pub segment: SegmentId,
    pub cf: CfList,
    pub cb: CbState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Attribute preference order for the incremental describer.
    pub preferred_order: Vec<String>,
    /// Agent mentions needed before an event counts as key.
    pub key_event_threshold: u32,
    /// Surface realization per modifier attribute name.
    pub realization: BTreeMap<String, Realization>,
    /// Whether generation may produce demonstrative pronouns.
    pub generate_demonstratives: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            preferred_order: ["type", "age", "size", "loc", "event"]
                .map(String::from)
                .to_vec(),
            key_event_threshold: 2,
            realization: [
                ("loc".to_string(), Realization::Pp),
                ("event".to_string(), Realization::Relative),
            ]
            .into_iter()
            .collect(),
            generate_demonstratives: false,
        }
    }
}

impl EngineConfig {
    pub fn realization_of(&self, attribute: &str) -> Realization {
        self.realization
            .get(attribute)
            .copied()
            .unwrap_or(Realization::Attributive)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("entity {0} is already registered")]
    DuplicateEntity(EntityId),
    #[error("basic category {category} of entity {id} is not among its attributes")]
    BasicCategoryMissing { id: EntityId, category: AttributeValue },
    #[error("focus space {id} does not follow current space {top}")]
    FocusSpaceOrder { top: SegmentId, id: SegmentId },
    #[error("utterance {id} belongs to segment {segment}, earlier than current segment {current}")]
    SegmentRegression {
        id: UtteranceId,
        segment: SegmentId,
        current: SegmentId,
    },
    #[error("mention refers to unknown entity {0}")]
    UnknownEntity(EntityId),
}

/// Mutable state of one discourse.
#[derive(Debug, Clone, Default)]
pub struct DiscourseModel {
    entities: BTreeMap<EntityId, DiscourseEntity>,
    pending: BTreeMap<EntityId, EntityDecl>,
    facts: BTreeSet<Fact>,
    stack: FocusStack,
    history: Vec<ProcessedUtterance>,
    config: EngineConfig,
}

impl DiscourseModel {
    pub fn new(config: EngineConfig) -> Self {
        DiscourseModel {
            config,
            ..Default::default()
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn entity(&self, id: &EntityId) -> Option<&DiscourseEntity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &DiscourseEntity> {
        self.entities.values()
    }

    pub fn is_registered(&self, id: &EntityId) -> bool {
        self.entities.contains_key(id)
    }

    pub fn stack(&self) -> &FocusStack {
        &self.stack
    }

    pub fn history(&self) -> &[ProcessedUtterance] {
        &self.history
    }

    pub fn previous(&self) -> Option<&ProcessedUtterance> {
        self.history.last()
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn assert_fact(&mut self, fact: Fact) {
        self.facts.insert(fact);
    }

    /// Records a fact established before the first utterance, updating
    /// locations and event counts as an utterance fact would.
    pub fn absorb_initial_fact(&mut self, fact: Fact) {
        self.absorb_fact(&fact, 0);
        self.facts.insert(fact);
    }

    /// Registers an entity and places it in the current focus space.
    pub fn add_entity(&mut self, decl: EntityDecl) -> Result<EntityId, ModelError> {
        if self.entities.contains_key(&decl.id) {
            return Err(ModelError::DuplicateEntity(decl.id));
        }
        if !decl.attrs.contains(&decl.basic_category) {
            return Err(ModelError::BasicCategoryMissing {
                id: decl.id,
                category: decl.basic_category,
            });
        }
        let mut known = decl.attrs;
        known.extend(decl.agreement.pairs());
        let mut entity = DiscourseEntity {
            id: decl.id.clone(),
            known_attrs: known,
            basic_category: decl.basic_category,
            agreement: decl.agreement,
            fav: FavSets::default(),
            last_location: None,
            event_agent_counts: BTreeMap::new(),
            key_events: decl.key_events,
            associations: decl.associations,
            home_segment: None,
            last_mention: None,
        };
        for event in entity.key_events.clone() {
            let pair = AttributeValue::new("event", &event);
            entity.known_attrs.insert(pair.clone());
            entity
                .fav
                .set(FavCategory::KeyEvent, BTreeSet::from([pair]), 0);
        }
        entity.home_segment = self.stack.current().map(|s| s.id);
        self.stack.add_to_current(&decl.id);
        self.pending.remove(&decl.id);
        self.entities.insert(decl.id.clone(), entity);
        Ok(decl.id)
    }

    /// Registers an entity in the focus space of segment `segment`, creating
    /// the space on top of the stack if needed.
    pub fn add_entity_in(&mut self, decl: EntityDecl, segment: SegmentId) -> Result<EntityId, ModelError> {
        if self.stack.current().is_none_or(|top| segment > top.id) {
            self.stack.push(segment)?;
        }
        let id = decl.id.clone();
        if self.stack.current().map(|s| s.id) == Some(segment) {
            self.add_entity(decl)?;
        } else {
            let top = self.stack.current().map(|s| s.id).unwrap_or(0);
            let space = self
                .stack
                .space_mut(segment)
                .ok_or(ModelError::FocusSpaceOrder { top, id: segment })?;
            space.entities.insert(id.clone());
            self.add_entity(decl)?;
            // add_entity placed it in the top space as well; undo that.
            if let Some(last) = self.stack.spaces.last_mut() {
                last.entities.remove(&id);
            }
            if let Some(e) = self.entities.get_mut(&id) {
                e.home_segment = Some(segment);
            }
        }
        Ok(id)
    }

    /// Stores a declaration to be registered when a mention first evokes it.
    pub fn declare(&mut self, decl: EntityDecl) {
        self.pending.insert(decl.id.clone(), decl);
    }

    pub fn push_focus_space(&mut self, segment: SegmentId) -> Result<(), ModelError> {
        self.stack.push(segment)
    }

    /// True when `segment` opens a new focus space.
    pub fn opens_segment(&self, segment: SegmentId) -> bool {
        self.stack.current().is_none_or(|top| segment > top.id)
    }

    /// Contexts to search, in order: the previous utterance's Cf, the
    /// current focus space, earlier spaces most recent first, then the union
    /// of all spaces.
    pub fn context_chain(&self) -> Vec<ContextStage> {
        let mut chain = Vec::new();
        if let Some(prev) = self.previous() {
            let cf: BTreeSet<_> = prev.cf.entities().cloned().collect();
            if !cf.is_empty() {
                chain.push(ContextStage {
                    kind: StageKind::PreviousCf,
                    entities: cf,
                });
            }
        }
        let spaces = self.stack.spaces();
        for (depth, space) in spaces.iter().rev().enumerate() {
            let kind = if depth == 0 {
                StageKind::CurrentSpace { segment: space.id }
            } else {
                StageKind::EarlierSpace {
                    segment: space.id,
                    depth,
                }
            };
            chain.push(ContextStage {
                kind,
                entities: space.entities.clone(),
            });
        }
        let trivial_union = spaces.len() == 1 && self.previous().is_none();
        if !spaces.is_empty() && !trivial_union {
            let union = spaces.iter().flat_map(|s| s.entities.iter().cloned()).collect();
            chain.push(ContextStage {
                kind: StageKind::Union,
                entities: union,
            });
        }
        chain
    }

    /// Whether a constraint is given information: some fact in the model
    /// instantiates it. Constraints that are not given filter nothing.
    pub fn constraint_is_given(&self, c: &Constraint) -> bool {
        self.facts.iter().any(|f| c.matches(f).is_some())
    }

    pub fn satisfies(&self, entity: &EntityId, c: &Constraint) -> bool {
        self.facts.contains(&c.instantiate(entity))
    }

    /// Whether any registered entity is known to have `pair`.
    pub fn pair_is_given(&self, pair: &AttributeValue) -> bool {
        self.entities.values().any(|e| e.known_attrs.contains(pair))
    }

    /// Absorbs a processed utterance: pushes a focus space at a segment
    /// onset, registers evoked entities, accumulates attributes and focused
    /// attribute sets, records facts and the centering state.
    ///
    /// A new focus space is added after the onset utterance itself has been
    /// interpreted, so queries made before this call still see the previous
    /// segment's space on top.
    pub fn update_after_utterance(&mut self, utt: &Utterance) -> Result<(), ModelError> {
        if let Some(top) = self.stack.current() {
            if utt.segment < top.id {
                return Err(ModelError::SegmentRegression {
                    id: utt.id,
                    segment: utt.segment,
                    current: top.id,
                });
            }
        }
        if self.opens_segment(utt.segment) {
            self.stack.push(utt.segment)?;
        }
        for m in &utt.mentions {
            let Some(id) = &m.gold else { continue };
            if !self.entities.contains_key(id) {
                let decl = self
                    .pending
                    .remove(id)
                    .ok_or_else(|| ModelError::UnknownEntity(id.clone()))?;
                self.add_entity(decl)?;
            }
        }
        let mut associated = Vec::new();
        for m in &utt.mentions {
            let Some(id) = &m.gold else { continue };
            let entity = self.entities.get_mut(id).expect("registered above");
            let expressed = m.np.expressed_pairs();
            entity.known_attrs.extend(expressed.iter().cloned());
            if m.np.form == FormClass::Phrasal {
                entity.fav.set(
                    FavCategory::RecentPhrasal,
                    expressed.into_iter().collect(),
                    utt.id,
                );
            }
            entity.last_mention = Some(LastMention {
                utterance: utt.id,
                segment: utt.segment,
                explicitness: m.np.explicitness(),
            });
            associated.extend(entity.associations.iter().cloned());
            self.stack.add_to_current(id);
        }
        for id in associated {
            if self.entities.contains_key(&id) {
                self.stack.add_to_current(&id);
            }
        }
        for fact in &utt.facts {
            self.absorb_fact(fact, utt.id);
            self.facts.insert(fact.clone());
        }
        let cf = order_cf(&utt.gold_realizations());
        let cb = compute_cb(&cf, self.previous().map(|p| &p.cf));
        self.history.push(ProcessedUtterance {
            id: utt.id,
            segment: utt.segment,
            cf,
            cb,
        });
        Ok(())
    }

    fn absorb_fact(&mut self, fact: &Fact, stamp: UtteranceId) {
        if fact.args.len() != 2 {
            return;
        }
        let id = EntityId::new(fact.args[0].clone());
        let threshold = self.config.key_event_threshold;
        let Some(entity) = self.entities.get_mut(&id) else { return };
        let value = &fact.args[1];
        if !is_token(value) {
            return;
        }
        match fact.predicate.as_str() {
            "loc" => {
                let pair = AttributeValue::new("loc", value);
                // Only the latest location is mutually known.
                entity.known_attrs.insert(pair.clone());
                let set = BTreeSet::from([pair]);
                entity.last_location = Some((set.clone(), stamp));
                entity.fav.set(FavCategory::Location, set, stamp);
            }
            "agent" => {
                let pair = AttributeValue::new("event", value);
                entity.known_attrs.insert(pair.clone());
                let count = entity.event_agent_counts.entry(value.clone()).or_insert(0);
                *count += 1;
                if *count >= threshold || entity.key_events.contains(value) {
                    entity
                        .fav
                        .set(FavCategory::KeyEvent, BTreeSet::from([pair]), stamp);
                }
            }
            _ => {}
        }
    }
}

impl KnowledgeBase for DiscourseModel {
    fn known_attrs(&self, id: &EntityId) -> Option<&BTreeSet<AttributeValue>> {
        self.entities.get(id).map(|e| &e.known_attrs)
    }

    fn basic_category(&self, id: &EntityId) -> Option<&AttributeValue> {
        self.entities.get(id).map(|e| &e.basic_category)
    }

    fn focused_pairs(&self, id: &EntityId) -> BTreeSet<AttributeValue> {
        self.entities
            .get(id)
            .and_then(|e| e.fav.by_priority().first().map(|(_, s)| s.pairs.clone()))
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn av(s: &str) -> AttributeValue {
        s.parse().unwrap()
    }

    fn male() -> Agreement {
        Agreement::third(Number::Singular, Gender::Male, Animacy::Animate)
    }

    fn decl(id: &str, attrs: &[&str], basic: &str) -> EntityDecl {
        EntityDecl::new(id, attrs.iter().map(|a| av(a)), av(basic), male())
    }

    fn phrasal_mention(gold: &str, head: &str, mods: &[&str], role: GramRole) -> Mention {
        Mention {
            surface: String::new(),
            np: NpForm::phrasal(av(head), mods.iter().map(|m| av(m)).collect()),
            role,
            gold: Some(gold.into()),
            zero_allowed: false,
            flags: MentionFlags::default(),
            anaphoric: true,
            constraints: vec![],
        }
    }

    #[test]
    fn add_entity_registers_in_current_space() {
        let mut m = DiscourseModel::default();
        m.push_focus_space(1).unwrap();
        let id = m
            .add_entity(decl("e1", &["type:man", "size:plump", "wears:apron"], "type:man"))
            .unwrap();
        assert_eq!(id, EntityId::from("e1"));
        assert!(m.stack().current().unwrap().entities.contains(&id));
        m.add_entity(decl("e2", &["type:boy"], "type:boy")).unwrap();
        assert_eq!(m.stack().current().unwrap().entities.len(), 2);
    }

    #[test]
    fn add_entity_rejects_missing_basic_and_duplicates() {
        let mut m = DiscourseModel::default();
        assert!(matches!(
            m.add_entity(decl("e1", &["type:man"], "type:boy")),
            Err(ModelError::BasicCategoryMissing { .. })
        ));
        m.add_entity(decl("e1", &["type:man"], "type:man")).unwrap();
        assert_eq!(
            m.add_entity(decl("e1", &["type:man"], "type:man")),
            Err(ModelError::DuplicateEntity("e1".into()))
        );
    }

    #[test]
    fn push_focus_space_orders_ids() {
        let mut m = DiscourseModel::default();
        m.push_focus_space(1).unwrap();
        m.push_focus_space(2).unwrap();
        let ids: Vec<_> = m.stack().spaces().iter().map(|s| s.id).collect();
        assert_eq!(ids, [1, 2]);

        let mut m = DiscourseModel::default();
        m.push_focus_space(3).unwrap();
        assert_eq!(
            m.push_focus_space(2),
            Err(ModelError::FocusSpaceOrder { top: 3, id: 2 })
        );
    }

    #[test]
    fn phrasal_mention_sets_recent_phrasal() {
        let mut m = DiscourseModel::default();
        m.add_entity_in(decl("b", &["type:boy"], "type:boy"), 5).unwrap();
        let utt = Utterance {
            id: 30,
            segment: 7,
            mentions: vec![phrasal_mention("b", "type:boy", &["size:little"], GramRole::Subject)],
            facts: vec![],
        };
        m.update_after_utterance(&utt).unwrap();
        let e = m.entity(&"b".into()).unwrap();
        let fav = e.fav.recent_phrasal.as_ref().unwrap();
        assert_eq!(fav.pairs, BTreeSet::from([av("type:boy"), av("size:little")]));
        assert_eq!(fav.stamp, 30);
        assert!(e.known_attrs.contains(&av("size:little")));
    }

    #[test]
    fn location_fact_sets_location_fav() {
        let mut m = DiscourseModel::default();
        m.add_entity_in(decl("e1", &["type:man"], "type:man"), 1).unwrap();
        let utt = Utterance {
            id: 9,
            segment: 1,
            mentions: vec![phrasal_mention("e1", "type:man", &[], GramRole::Subject)],
            facts: vec!["loc(e1,in-tree)".parse().unwrap()],
        };
        m.update_after_utterance(&utt).unwrap();
        let e = m.entity(&"e1".into()).unwrap();
        assert_eq!(
            e.fav.location.as_ref().unwrap().pairs,
            BTreeSet::from([av("loc:in-tree")])
        );
        // Location stamped with the same utterance wins over the phrasal set.
        assert_eq!(e.fav.by_priority()[0].0, FavCategory::RecentPhrasal);
        assert_eq!(e.top_fav_modifiers("type").unwrap().1, vec![av("loc:in-tree")]);
    }

    #[test]
    fn empty_utterance_only_extends_history() {
        let mut m = DiscourseModel::default();
        m.add_entity_in(decl("e1", &["type:man"], "type:man"), 1).unwrap();
        let before = m.entity(&"e1".into()).cloned();
        m.update_after_utterance(&Utterance {
            id: 1,
            segment: 1,
            mentions: vec![],
            facts: vec![],
        })
        .unwrap();
        assert_eq!(m.entity(&"e1".into()).cloned(), before);
        assert_eq!(m.history().len(), 1);
        assert_eq!(m.stack().spaces().len(), 1);
    }

    #[test]
    fn key_event_needs_two_agent_mentions() {
        let mut m = DiscourseModel::default();
        m.add_entity_in(decl("e2", &["type:man"], "type:man"), 1).unwrap();
        let utt = |id| Utterance {
            id,
            segment: 1,
            mentions: vec![],
            facts: vec!["agent(e2,picking-pears)".parse().unwrap()],
        };
        m.update_after_utterance(&utt(1)).unwrap();
        assert!(m.entity(&"e2".into()).unwrap().fav.key_event.is_none());
        m.update_after_utterance(&utt(2)).unwrap();
        assert_eq!(
            m.entity(&"e2".into()).unwrap().fav.key_event.as_ref().unwrap().pairs,
            BTreeSet::from([av("event:picking-pears")])
        );
    }

    #[test]
    fn context_chain_boundaries() {
        let mut m = DiscourseModel::default();
        m.add_entity_in(decl("e1", &["type:man"], "type:man"), 1).unwrap();
        let kinds = |m: &DiscourseModel| m.context_chain().iter().map(|s| s.kind).collect::<Vec<_>>();
        assert_eq!(kinds(&m), [StageKind::CurrentSpace { segment: 1 }]);
        m.update_after_utterance(&Utterance {
            id: 1,
            segment: 1,
            mentions: vec![phrasal_mention("e1", "type:man", &[], GramRole::Subject)],
            facts: vec![],
        })
        .unwrap();
        assert_eq!(
            kinds(&m),
            [
                StageKind::PreviousCf,
                StageKind::CurrentSpace { segment: 1 },
                StageKind::Union
            ]
        );
        assert_eq!(m.context_chain()[0].entities, BTreeSet::from(["e1".into()]));
    }

    #[test]
    fn terms_round_trip_through_display() {
        let c: Constraint = "fills(X,\"his thing\",pears)".parse().unwrap();
        assert_eq!(c.to_string(), "fills(X,\"his thing\",pears)");
        assert_eq!(c.to_string().parse::<Constraint>().unwrap(), c);
        assert!("on(e2,e4)".parse::<Constraint>().is_err());
        assert!("on(X,X)".parse::<Constraint>().is_err());
        assert!("on(X,e4".parse::<Constraint>().is_err());
        assert!("on(X,e4)".parse::<Fact>().is_err());
        let f: Fact = "on(e2,e4)".parse().unwrap();
        let c: Constraint = "on(X,e4)".parse().unwrap();
        assert_eq!(c.matches(&f), Some("e2"));
        assert_eq!(c.instantiate(&"e2".into()), f);
    }
}
