//! Local attentional state: forward-looking center ordering, the
//! backward-looking center with null CBs, property sharing and the pronoun
//! rule.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::distinguish::KnowledgeBase;
use crate::model::{EntityId, GramRole};
use crate::np::NpForm;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CfEntry {
    pub entity: EntityId,
    pub role: GramRole,
}

/// Entities of an utterance ordered by increasing obliqueness of their best
/// grammatical role; ties keep surface order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CfList {
    entries: Vec<CfEntry>,
}

impl CfList {
    pub fn entries(&self) -> &[CfEntry] {
        &self.entries
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityId> {
        self.entries.iter().map(|e| &e.entity)
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.entries.iter().any(|e| &e.entity == id)
    }

    pub fn role_of(&self, id: &EntityId) -> Option<GramRole> {
        self.entries.iter().find(|e| &e.entity == id).map(|e| e.role)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Orders realized entities into a Cf list. Zero pronouns count as
/// realizations at their role.
pub fn order_cf(realizations: &[(EntityId, GramRole)]) -> CfList {
    let mut best: BTreeMap<&EntityId, (GramRole, usize)> = BTreeMap::new();
    for (pos, (id, role)) in realizations.iter().enumerate() {
        best.entry(id)
            .and_modify(|(r, _)| *r = (*r).min(*role))
            .or_insert((*role, pos));
    }
    let mut entries: Vec<_> = best.into_iter().collect();
    entries.sort_by_key(|(_, (role, pos))| (*role, *pos));
    CfList {
        entries: entries
            .into_iter()
            .map(|(id, (role, _))| CfEntry {
                entity: id.clone(),
                role,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "cb", content = "entity", rename_all = "lowercase")]
pub enum CbState {
    /// First utterance: there is no previous utterance.
    Undefined,
    /// No entity of the previous utterance is realized.
    Null,
    Entity(EntityId),
}

impl CbState {
    pub fn entity(&self) -> Option<&EntityId> {
        match self {
            CbState::Entity(e) => Some(e),
            _ => None,
        }
    }
}

/// Backward-looking center: the highest-ranked entity of the previous Cf
/// realized in the current utterance, preferring one whose subject or
/// non-subject role class is unchanged.
pub fn compute_cb(current: &CfList, previous: Option<&CfList>) -> CbState {
    let Some(previous) = previous else {
        return CbState::Undefined;
    };
    let realized: Vec<(&CfEntry, GramRole)> = previous
        .entries()
        .iter()
        .filter_map(|e| current.role_of(&e.entity).map(|r| (e, r)))
        .collect();
    let shared = realized
        .iter()
        .find(|(prev, now)| prev.role.is_subject() == now.is_subject());
    match shared.or(realized.first()) {
        Some((e, _)) => CbState::Entity(e.entity.clone()),
        None => CbState::Null,
    }
}

/// True iff the current and previous CB are the same entity.
pub fn pronoun_rule(cb_now: &CbState, cb_prev: &CbState) -> bool {
    matches!((cb_now, cb_prev), (CbState::Entity(a), CbState::Entity(b)) if a == b)
}

/// The highest-ranked entity of the previous Cf whose agreement unifies
/// with the pronoun.
pub fn default_pronoun_interpretation<K: KnowledgeBase + ?Sized>(
    pronoun: &NpForm,
    previous: &CfList,
    kb: &K,
) -> Option<EntityId> {
    let pairs = pronoun.agreement?.pairs();
    previous
        .entities()
        .find(|e| pairs.iter().all(|p| kb.has(e, p)))
        .cloned()
}

/// Interpretation of a zero pronoun: the continuing center, taken as the
/// highest-ranked previous entity in the same role class, else the
/// highest-ranked one.
pub fn zero_interpretation(role: GramRole, previous: &CfList) -> Option<EntityId> {
    previous
        .entries()
        .iter()
        .find(|e| e.role.is_subject() == role.is_subject())
        .or(previous.entries().first())
        .map(|e| e.entity.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distinguish::AttributeTable;
    use crate::model::{Agreement, Animacy, Gender, Number};

    fn id(s: &str) -> EntityId {
        s.into()
    }

    fn cf(items: &[(&str, GramRole)]) -> CfList {
        order_cf(&items.iter().map(|(e, r)| (id(e), *r)).collect::<Vec<_>>())
    }

    use GramRole::*;

    #[test]
    fn cf_ordered_by_obliqueness() {
        let l = cf(&[("e3", Oblique), ("e1", Subject)]);
        assert_eq!(l.entities().collect::<Vec<_>>(), [&id("e1"), &id("e3")]);
        assert!(cf(&[]).is_empty());
        let l = cf(&[("e2", Oblique), ("e1", DirectObject), ("e2", Subject)]);
        assert_eq!(l.entries()[0], CfEntry { entity: id("e2"), role: Subject });
        assert_eq!(l.len(), 2);
    }

    #[test]
    fn equal_roles_keep_surface_order() {
        let l = cf(&[("b", Oblique), ("a", Oblique)]);
        assert_eq!(l.entities().collect::<Vec<_>>(), [&id("b"), &id("a")]);
    }

    #[test]
    fn cb_examples() {
        let u107 = cf(&[("e1", Subject), ("e3", DirectObject)]);
        let u108 = cf(&[("e1", Subject), ("e2", DirectObject)]);
        assert_eq!(compute_cb(&u108, Some(&u107)), CbState::Entity(id("e1")));
        let u9 = cf(&[("e1", Subject), ("e3", Oblique)]);
        let u10 = cf(&[("e2", Subject), ("e4", DirectObject)]);
        assert_eq!(compute_cb(&u10, Some(&u9)), CbState::Null);
        assert_eq!(compute_cb(&u9, None), CbState::Undefined);
    }

    #[test]
    fn property_sharing_prefers_matching_role_class() {
        // a moves from subject to oblique; b stays an object.
        let prev = cf(&[("a", Subject), ("b", DirectObject)]);
        let now = cf(&[("b", DirectObject), ("a", Oblique), ("c", Subject)]);
        assert_eq!(compute_cb(&now, Some(&prev)), CbState::Entity(id("b")));
        // Nothing keeps its class: fall back to rank.
        let now = cf(&[("b", Subject), ("a", DirectObject)]);
        assert_eq!(compute_cb(&now, Some(&prev)), CbState::Entity(id("a")));
    }

    #[test]
    fn pronoun_rule_cases() {
        let e1 = CbState::Entity(id("e1"));
        assert!(pronoun_rule(&e1, &e1));
        assert!(!pronoun_rule(&CbState::Null, &e1));
        assert!(!pronoun_rule(&e1, &CbState::Undefined));
        assert!(!pronoun_rule(&e1, &CbState::Entity(id("e2"))));
        assert!(!pronoun_rule(&CbState::Null, &CbState::Null));
    }

    fn people() -> AttributeTable {
        let mut t = AttributeTable::default();
        let female = Agreement::third(Number::Singular, Gender::Female, Animacy::Animate);
        let neuter = Agreement::third(Number::Singular, Gender::Neuter, Animacy::Inanimate);
        let male = Agreement::third(Number::Singular, Gender::Male, Animacy::Animate);
        t.insert(id("carmella"), female.pairs());
        t.insert(id("rachel"), female.pairs());
        t.insert(id("book"), neuter.pairs());
        t.insert(id("e1"), male.pairs());
        t.insert(id("e3"), neuter.pairs());
        t
    }

    #[test]
    fn default_interpretation_takes_first_agreeing_entry() {
        let t = people();
        let she = NpForm::pronoun("she").unwrap();
        let prev = cf(&[("carmella", Subject), ("book", DirectObject), ("rachel", IndirectObject)]);
        assert_eq!(default_pronoun_interpretation(&she, &prev, &t), Some(id("carmella")));
        let it = NpForm::pronoun("it").unwrap();
        let u9 = cf(&[("e1", Subject), ("e3", Oblique)]);
        assert_eq!(default_pronoun_interpretation(&it, &u9, &t), Some(id("e3")));
        let they = NpForm::pronoun("they").unwrap();
        assert_eq!(default_pronoun_interpretation(&they, &u9, &t), None);
    }

    #[test]
    fn zero_takes_previous_subject() {
        let prev = cf(&[("e2", Subject), ("e4", DirectObject)]);
        assert_eq!(zero_interpretation(Subject, &prev), Some(id("e2")));
        assert_eq!(zero_interpretation(Subject, &cf(&[])), None);
        let prev = cf(&[("e4", DirectObject)]);
        assert_eq!(zero_interpretation(Subject, &prev), Some(id("e4")));
    }
}
