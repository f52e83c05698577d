//! Discriminatory power, distinguishing-description construction and
//! minimality.
//!
//! A description distinguishes a target within a context when every pair is
//! true of the target and no other member of the context satisfies all of
//! them. Discriminatory power is kept as an exact rational so ties between
//! candidate pairs are detected exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::model::{AttributeValue, EntityId};

/// Discriminatory power of a pair, in `[0, 1]`.
pub type Power = Ratio<u64>;

/// Read access to what is mutually known about entities.
pub trait KnowledgeBase {
    fn known_attrs(&self, id: &EntityId) -> Option<&BTreeSet<AttributeValue>>;

    /// The basic-level head pair of an entity, if it has one.
    fn basic_category(&self, _id: &EntityId) -> Option<&AttributeValue> {
        None
    }

    /// Pairs of the entity's highest-priority focused attribute set.
    fn focused_pairs(&self, _id: &EntityId) -> BTreeSet<AttributeValue> {
        BTreeSet::new()
    }

    fn has(&self, id: &EntityId, pair: &AttributeValue) -> bool {
        self.known_attrs(id).is_some_and(|a| a.contains(pair))
    }
}

/// Plain entity → attributes table, for ad-hoc contexts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributeTable {
    pub attrs: BTreeMap<EntityId, BTreeSet<AttributeValue>>,
    pub basic: BTreeMap<EntityId, AttributeValue>,
}

impl AttributeTable {
    pub fn insert(&mut self, id: EntityId, attrs: impl IntoIterator<Item = AttributeValue>) {
        self.attrs.entry(id).or_default().extend(attrs);
    }

    pub fn with_basic(mut self, id: EntityId, basic: AttributeValue) -> Self {
        self.attrs.entry(id.clone()).or_default().insert(basic.clone());
        self.basic.insert(id, basic);
        self
    }

    pub fn ids(&self) -> impl Iterator<Item = &EntityId> {
        self.attrs.keys()
    }
}

impl KnowledgeBase for AttributeTable {
    fn known_attrs(&self, id: &EntityId) -> Option<&BTreeSet<AttributeValue>> {
        self.attrs.get(id)
    }

    fn basic_category(&self, id: &EntityId) -> Option<&AttributeValue> {
        self.basic.get(id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistinguishError {
    #[error("context is empty")]
    EmptyContext,
    #[error("target {0} is not in the context")]
    TargetNotInContext(EntityId),
    #[error("pair {pair} is not true of {target}")]
    NotTrueOfTarget { target: EntityId, pair: AttributeValue },
    #[error("no unique description of {target} can be constructed")]
    NotDescribable { target: EntityId },
    #[error("preferred attribute order is empty")]
    EmptyPreference,
    #[error("distractors remain for {target}: {remaining:?}")]
    Residual {
        target: EntityId,
        remaining: Vec<EntityId>,
    },
}

/// A universe of entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    universe: BTreeSet<EntityId>,
}

impl Context {
    pub fn new(universe: impl IntoIterator<Item = EntityId>) -> Result<Self, DistinguishError> {
        let universe: BTreeSet<_> = universe.into_iter().collect();
        if universe.is_empty() {
            return Err(DistinguishError::EmptyContext);
        }
        Ok(Context { universe })
    }

    pub fn universe(&self) -> &BTreeSet<EntityId> {
        &self.universe
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.universe.contains(id)
    }

    fn require(&self, target: &EntityId) -> Result<(), DistinguishError> {
        if self.contains(target) {
            Ok(())
        } else {
            Err(DistinguishError::TargetNotInContext(target.clone()))
        }
    }
}

/// Attribute-value pairs in selection order, no attribute repeated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Description {
    pairs: Vec<AttributeValue>,
}

impl Description {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a description, dropping later pairs that repeat an attribute.
    pub fn from_pairs(pairs: impl IntoIterator<Item = AttributeValue>) -> Self {
        let mut d = Description::new();
        for p in pairs {
            d.push(p);
        }
        d
    }

    /// Appends a pair; returns false if its attribute is already present.
    pub fn push(&mut self, pair: AttributeValue) -> bool {
        if self.has_attribute(&pair.attribute) {
            return false;
        }
        self.pairs.push(pair);
        true
    }

    fn insert_front(&mut self, pair: AttributeValue) {
        if !self.has_attribute(&pair.attribute) {
            self.pairs.insert(0, pair);
        }
    }

    pub fn has_attribute(&self, attribute: &str) -> bool {
        self.pairs.iter().any(|p| p.attribute == attribute)
    }

    pub fn pairs(&self) -> &[AttributeValue] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: &AttributeValue) -> bool {
        self.pairs.contains(pair)
    }

    pub fn to_set(&self) -> BTreeSet<AttributeValue> {
        self.pairs.iter().cloned().collect()
    }
}

impl fmt::Display for Description {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

/// Number of universe members `pair` is true of.
fn count_true<'a, K: KnowledgeBase + ?Sized>(
    pair: &AttributeValue,
    universe: impl IntoIterator<Item = &'a EntityId>,
    kb: &K,
) -> u64 {
    universe.into_iter().filter(|e| kb.has(e, pair)).count() as u64
}

fn power_over(n: u64, total: u64) -> Power {
    if total <= 1 {
        Ratio::from_integer(1)
    } else {
        Ratio::new(total - n.min(total), total - 1)
    }
}

/// `(N - n) / (N - 1)`, with N the context size and n the number of members
/// the pair is true of. A one-entity context has power 1; a pair true of no
/// member exceeds 1.
pub fn discriminatory_power<K: KnowledgeBase + ?Sized>(
    pair: &AttributeValue,
    context: &Context,
    kb: &K,
) -> Power {
    let n = count_true(pair, context.universe(), kb);
    power_over(n, context.size() as u64)
}

fn satisfies_all<K: KnowledgeBase + ?Sized>(id: &EntityId, pairs: &[AttributeValue], kb: &K) -> bool {
    pairs.iter().all(|p| kb.has(id, p))
}

/// Whether `pairs` is true of the target and of no other context member.
pub fn pairs_distinguish<K: KnowledgeBase + ?Sized>(
    pairs: &[AttributeValue],
    target: &EntityId,
    context: &Context,
    kb: &K,
) -> bool {
    satisfies_all(target, pairs, kb)
        && context
            .universe()
            .iter()
            .all(|e| e == target || !satisfies_all(e, pairs, kb))
}

pub fn is_distinguishing<K: KnowledgeBase + ?Sized>(
    desc: &Description,
    target: &EntityId,
    context: &Context,
    kb: &K,
) -> bool {
    pairs_distinguish(desc.pairs(), target, context, kb)
}

/// Greedy construction: repeatedly select the pair with the highest
/// discriminatory power over the current universe and shrink the universe
/// to the entities it is true of, until a selected pair has power 1.
///
/// Ties go to pairs in the target's highest-priority focused set, then the
/// basic-category pair, then attribute name and value order.
pub fn build_distinguishing_description<K: KnowledgeBase + ?Sized>(
    target: &EntityId,
    candidates: &BTreeSet<AttributeValue>,
    context: &Context,
    kb: &K,
) -> Result<Description, DistinguishError> {
    context.require(target)?;
    if let Some(pair) = candidates.iter().find(|p| !kb.has(target, p)) {
        return Err(DistinguishError::NotTrueOfTarget {
            target: target.clone(),
            pair: pair.clone(),
        });
    }
    let focused = kb.focused_pairs(target);
    let basic = kb.basic_category(target);
    let fail = || DistinguishError::NotDescribable {
        target: target.clone(),
    };

    let mut universe: Vec<&EntityId> = context.universe().iter().collect();
    let mut desc = Description::new();
    loop {
        let scored = candidates
            .iter()
            .filter(|p| !desc.has_attribute(&p.attribute))
            .map(|p| {
                let n = count_true(p, universe.iter().copied(), kb);
                (power_over(n, universe.len() as u64), p)
            });
        let best = scored.max_by(|(fa, a), (fb, b)| {
            fa.cmp(fb)
                .then_with(|| focused.contains(a).cmp(&focused.contains(b)))
                .then_with(|| (Some(*a) == basic).cmp(&(Some(*b) == basic)))
                .then_with(|| b.cmp(a))
        });
        let Some((power, pair)) = best else {
            // Out of pairs; only the target left means it is already picked out.
            return if universe.len() == 1 { Ok(desc) } else { Err(fail()) };
        };
        if power == Ratio::from_integer(0) {
            return Err(fail());
        }
        desc.push(pair.clone());
        universe.retain(|e| kb.has(e, pair));
        if power == Ratio::from_integer(1) {
            break;
        }
    }
    if is_distinguishing(&desc, target, context, kb) {
        Ok(desc)
    } else {
        Err(fail())
    }
}

/// Whether no proper subset of a distinguishing description distinguishes.
///
/// The target's basic-category head is exempt: it is never removed, so a
/// head-only description is minimal even when the context is a singleton.
/// Because supersets (within the description) of a distinguishing subset
/// also distinguish, checking every one-pair removal is equivalent to
/// enumerating all proper subsets.
pub fn is_minimal<K: KnowledgeBase + ?Sized>(
    desc: &Description,
    target: &EntityId,
    context: &Context,
    kb: &K,
) -> bool {
    if !is_distinguishing(desc, target, context, kb) {
        return false;
    }
    let head = kb.basic_category(target);
    let pairs = desc.pairs();
    (0..pairs.len())
        .filter(|&i| Some(&pairs[i]) != head)
        .all(|skip| {
            let reduced: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, p)| p.clone())
                .collect();
            !pairs_distinguish(&reduced, target, context, kb)
        })
}

/// Preference-order construction: walk attributes in a fixed order and keep
/// a pair whenever it rules out a remaining distractor. The basic-category
/// head is always included. The result need not be minimal.
pub fn incremental_describe<K: KnowledgeBase + ?Sized>(
    target: &EntityId,
    preferred_order: &[String],
    context: &Context,
    kb: &K,
) -> Result<Description, DistinguishError> {
    if preferred_order.is_empty() {
        return Err(DistinguishError::EmptyPreference);
    }
    context.require(target)?;
    let known = kb.known_attrs(target).cloned().unwrap_or_default();
    let basic = kb.basic_category(target).cloned();
    let mut distractors: Vec<&EntityId> =
        context.universe().iter().filter(|e| *e != target).collect();
    let mut desc = Description::new();

    for attribute in preferred_order {
        if distractors.is_empty() {
            break;
        }
        if desc.has_attribute(attribute) {
            continue;
        }
        let ruled_out = |p: &AttributeValue| distractors.iter().filter(|e| !kb.has(e, p)).count();
        let value = match &basic {
            Some(b) if &b.attribute == attribute => Some(b.clone()),
            _ => known
                .iter()
                .filter(|p| &p.attribute == attribute)
                .max_by(|a, b| ruled_out(a).cmp(&ruled_out(b)).then_with(|| b.cmp(a)))
                .cloned(),
        };
        if let Some(pair) = value {
            if ruled_out(&pair) > 0 {
                distractors.retain(|e| kb.has(e, &pair));
                desc.push(pair);
            }
        }
    }
    if !distractors.is_empty() {
        return Err(DistinguishError::Residual {
            target: target.clone(),
            remaining: distractors.into_iter().cloned().collect(),
        });
    }
    if let Some(b) = basic {
        desc.insert_front(b);
    }
    Ok(desc)
}

/// Power of every pair true of the target, sorted by descending power.
pub fn power_table<K: KnowledgeBase + ?Sized>(
    target: &EntityId,
    context: &Context,
    kb: &K,
) -> Vec<(AttributeValue, Power)> {
    let mut rows: Vec<_> = kb
        .known_attrs(target)
        .into_iter()
        .flatten()
        .map(|p| (p.clone(), discriminatory_power(p, context, kb)))
        .collect();
    rows.sort_by(|(pa, fa), (pb, fb)| fb.cmp(fa).then_with(|| pa.cmp(pb)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn av(s: &str) -> AttributeValue {
        s.parse().unwrap()
    }

    fn id(s: &str) -> EntityId {
        s.into()
    }

    fn table(rows: &[(&str, &[&str])]) -> AttributeTable {
        let mut t = AttributeTable::default();
        for (e, attrs) in rows {
            t.insert(id(e), attrs.iter().map(|a| av(a)));
        }
        t
    }

    fn ctx(ids: &[&str]) -> Context {
        Context::new(ids.iter().map(|s| id(s))).unwrap()
    }

    fn man_boy() -> AttributeTable {
        table(&[
            ("e1", &["type:man", "type:human", "gender:male", "wears:apron", "size:plump"]),
            ("e2", &["type:boy", "type:human", "gender:male"]),
        ])
        .with_basic(id("e1"), av("type:man"))
        .with_basic(id("e2"), av("type:boy"))
    }

    #[test]
    fn power_examples() {
        let t = table(&[
            ("man", &["type:man", "concrete:yes"]),
            ("ladder", &["type:ladder", "concrete:yes"]),
            ("tree", &["type:tree", "concrete:yes"]),
        ]);
        let c = ctx(&["man", "ladder", "tree"]);
        assert_eq!(discriminatory_power(&av("type:man"), &c, &t), Ratio::from_integer(1));
        assert_eq!(discriminatory_power(&av("concrete:yes"), &c, &t), Ratio::from_integer(0));

        let t = table(&[("a", &["x:1"]), ("b", &["x:1"]), ("c", &[]), ("d", &[])]);
        assert_eq!(
            discriminatory_power(&av("x:1"), &ctx(&["a", "b", "c", "d"]), &t),
            Ratio::new(2, 3)
        );
        let t = table(&[("only", &["x:1"])]);
        assert_eq!(discriminatory_power(&av("x:1"), &ctx(&["only"]), &t), Ratio::from_integer(1));
    }

    #[test]
    fn empty_context_is_rejected() {
        assert_eq!(Context::new(Vec::new()), Err(DistinguishError::EmptyContext));
    }

    #[test]
    fn distinguishing_examples() {
        let t = man_boy();
        let c = ctx(&["e1", "e2"]);
        let man = Description::from_pairs([av("type:man")]);
        assert!(is_distinguishing(&man, &id("e1"), &c, &t));
        let human_male = Description::from_pairs([av("type:human"), av("gender:male")]);
        assert!(!is_distinguishing(&human_male, &id("e1"), &c, &t));
        assert!(is_distinguishing(&Description::new(), &id("e1"), &ctx(&["e1"]), &t));
    }

    #[test]
    fn greedy_picks_basic_head_on_ties() {
        let t = man_boy();
        let known = t.known_attrs(&id("e1")).unwrap().clone();
        let d = build_distinguishing_description(&id("e1"), &known, &ctx(&["e1", "e2"]), &t).unwrap();
        assert_eq!(d.pairs(), [av("type:man")]);
    }

    #[test]
    fn greedy_uses_location_when_types_match() {
        let t = table(&[
            ("e1", &["type:man", "loc:in-tree"]),
            ("e3", &["type:man", "with:goat"]),
        ])
        .with_basic(id("e1"), av("type:man"));
        let known = t.known_attrs(&id("e1")).unwrap().clone();
        let d = build_distinguishing_description(&id("e1"), &known, &ctx(&["e1", "e3"]), &t).unwrap();
        assert_eq!(d.pairs(), [av("loc:in-tree")]);
    }

    #[test]
    fn greedy_fails_on_indistinguishable_entities() {
        let t = table(&[("a", &["type:man", "size:big"]), ("b", &["type:man", "size:big"])]);
        let known = t.known_attrs(&id("a")).unwrap().clone();
        assert_eq!(
            build_distinguishing_description(&id("a"), &known, &ctx(&["a", "b"]), &t),
            Err(DistinguishError::NotDescribable { target: id("a") })
        );
    }

    #[test]
    fn greedy_returns_empty_for_sole_entity_without_pairs() {
        let t = table(&[("a", &[])]);
        let d = build_distinguishing_description(&id("a"), &BTreeSet::new(), &ctx(&["a"]), &t).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn greedy_rejects_pairs_false_of_target() {
        let t = man_boy();
        let p = BTreeSet::from([av("type:boy")]);
        assert!(matches!(
            build_distinguishing_description(&id("e1"), &p, &ctx(&["e1", "e2"]), &t),
            Err(DistinguishError::NotTrueOfTarget { .. })
        ));
    }

    #[test]
    fn minimality_examples() {
        let t = man_boy();
        let c = ctx(&["e1", "e2"]);
        assert!(is_minimal(&Description::from_pairs([av("type:man")]), &id("e1"), &c, &t));
        assert!(!is_minimal(
            &Description::from_pairs([av("type:man"), av("wears:apron")]),
            &id("e1"),
            &c,
            &t
        ));
        let single = ctx(&["e1"]);
        assert!(is_minimal(&Description::new(), &id("e1"), &single, &t));
        assert!(is_minimal(&Description::from_pairs([av("type:man")]), &id("e1"), &single, &t));
        assert!(!is_minimal(&Description::from_pairs([av("size:plump")]), &id("e1"), &single, &t));
    }

    #[test]
    fn incremental_examples() {
        let t = man_boy();
        let order = vec!["type".to_string()];
        let d = incremental_describe(&id("e1"), &order, &ctx(&["e1", "e2"]), &t).unwrap();
        assert_eq!(d.pairs(), [av("type:man")]);
        let d = incremental_describe(&id("e1"), &order, &ctx(&["e1"]), &t).unwrap();
        assert_eq!(d.pairs(), [av("type:man")]);

        let t = table(&[
            ("e1", &["type:man", "loc:in-tree"]),
            ("e3", &["type:man", "loc:on-road"]),
        ])
        .with_basic(id("e1"), av("type:man"));
        let order: Vec<String> = ["type", "age", "size", "loc", "event"].map(String::from).to_vec();
        let d = incremental_describe(&id("e1"), &order, &ctx(&["e1", "e3"]), &t).unwrap();
        assert_eq!(d.to_set(), BTreeSet::from([av("type:man"), av("loc:in-tree")]));
    }

    #[test]
    fn incremental_reports_residual_distractors() {
        let t = table(&[("a", &["type:man"]), ("b", &["type:man"])]).with_basic(id("a"), av("type:man"));
        let order = vec!["type".to_string(), "size".to_string()];
        assert_eq!(
            incremental_describe(&id("a"), &order, &ctx(&["a", "b"]), &t),
            Err(DistinguishError::Residual {
                target: id("a"),
                remaining: vec![id("b")]
            })
        );
        assert_eq!(
            incremental_describe(&id("a"), &[], &ctx(&["a", "b"]), &t),
            Err(DistinguishError::EmptyPreference)
        );
    }

    #[test]
    fn power_table_sorted_descending() {
        let t = man_boy();
        let rows = power_table(&id("e1"), &ctx(&["e1", "e2"]), &t);
        assert!(rows.windows(2).all(|w| w[0].1 >= w[1].1));
        assert_eq!(rows.last().unwrap().1, Ratio::from_integer(0));
    }
}
