mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use anaphora::centering::{compute_cb, order_cf, pronoun_rule, zero_interpretation, CbState, CfList};
use anaphora::classify::{classify_utterance, percent, CorpusStats, Informativeness, InformativenessLabel};
use anaphora::corpus::parse_corpus;
use anaphora::model::{AttributeValue, Constraint, EntityId, Fact, GramRole};
use anaphora::report::render_stats_table;

use common::all_fixtures;

const ROLES: [GramRole; 5] = [
    GramRole::Subject,
    GramRole::DirectObject,
    GramRole::IndirectObject,
    GramRole::Oblique,
    GramRole::Adjunct,
];

fn realizations() -> impl Strategy<Value = Vec<(EntityId, GramRole)>> {
    prop::collection::vec((0u8..6, 0usize..5), 0..10).prop_map(|v| {
        v.into_iter()
            .map(|(e, r)| (EntityId::new(format!("e{e}")), ROLES[r]))
            .collect()
    })
}

fn cb_state() -> impl Strategy<Value = CbState> {
    prop_oneof![
        Just(CbState::Undefined),
        Just(CbState::Null),
        (0u8..3).prop_map(|e| CbState::Entity(EntityId::new(format!("e{e}")))),
    ]
}

fn atom() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z][a-z0-9-]{0,6}",
        "[a-z]{1,4} [a-z]{1,4}",
    ]
}

proptest! {
    #[test]
    fn cf_lists_each_entity_once_at_its_best_role(r in realizations()) {
        let cf = order_cf(&r);
        let ids: Vec<_> = cf.entities().cloned().collect();
        let unique: BTreeSet<_> = ids.iter().cloned().collect();
        prop_assert_eq!(ids.len(), unique.len());
        prop_assert_eq!(unique, r.iter().map(|(e, _)| e.clone()).collect::<BTreeSet<_>>());
        for entry in cf.entries() {
            let best = r.iter().filter(|(e, _)| e == &entry.entity).map(|(_, role)| *role).min();
            prop_assert_eq!(Some(entry.role), best);
        }
        let first = |e: &EntityId| r.iter().position(|(x, _)| x == e).unwrap();
        for w in cf.entries().windows(2) {
            prop_assert!(
                (w[0].role, first(&w[0].entity)) < (w[1].role, first(&w[1].entity)),
                "not ordered by role then surface position"
            );
        }
    }

    #[test]
    fn cb_is_shared_with_previous_cf(now in realizations(), prev in realizations()) {
        let (now, prev) = (order_cf(&now), order_cf(&prev));
        prop_assert_eq!(compute_cb(&now, None), CbState::Undefined);
        let shared: Vec<_> = prev.entities().filter(|e| now.contains(e)).cloned().collect();
        match compute_cb(&now, Some(&prev)) {
            CbState::Entity(e) => {
                prop_assert!(shared.contains(&e));
                // No shared entity that keeps its role class outranks the CB.
                let keeps = |x: &EntityId| prev.role_of(x).unwrap().is_subject() == now.role_of(x).unwrap().is_subject();
                if let Some(k) = shared.iter().find(|x| keeps(x)) {
                    prop_assert_eq!(&e, k);
                } else {
                    prop_assert_eq!(&e, &shared[0]);
                }
            }
            CbState::Null => prop_assert!(shared.is_empty()),
            CbState::Undefined => prop_assert!(false, "undefined with a previous utterance"),
        }
    }

    #[test]
    fn pronoun_rule_needs_the_same_entity_center(a in cb_state(), b in cb_state()) {
        let rule = pronoun_rule(&a, &b);
        prop_assert_eq!(rule, pronoun_rule(&b, &a));
        prop_assert_eq!(rule, a.entity().is_some() && a == b);
    }

    #[test]
    fn zero_takes_a_previous_entity(prev in realizations(), r in 0usize..5) {
        let prev = order_cf(&prev);
        match zero_interpretation(ROLES[r], &prev) {
            Some(e) => {
                prop_assert!(prev.contains(&e));
                let same_class = prev.entries().iter().find(|x| x.role.is_subject() == ROLES[r].is_subject());
                prop_assert_eq!(&e, &same_class.unwrap_or(&prev.entries()[0]).entity);
            }
            None => prop_assert!(prev.is_empty()),
        }
    }

    #[test]
    fn labels_follow_predicate_priority(adequate: bool, efficient: Option<bool>, increasing: bool) {
        let l = InformativenessLabel::from_predicates(adequate, efficient, increasing);
        let want = if !adequate {
            Informativeness::UnderSpecified
        } else if increasing {
            Informativeness::OverDetermined
        } else if efficient == Some(true) {
            Informativeness::WellSpecified
        } else {
            Informativeness::OverSpecified
        };
        prop_assert_eq!(l.label, want);
    }

    #[test]
    fn stats_rows_sum_to_totals(cells in prop::array::uniform2(prop::array::uniform4(0u32..50))) {
        let stats = CorpusStats { cells, ..CorpusStats::default() };
        for (r, row) in cells.iter().enumerate() {
            prop_assert_eq!(stats.row_total(r), row.iter().sum::<u32>());
        }
        let cols = stats.column_totals();
        for c in 0..4 {
            prop_assert_eq!(cols[c], cells[0][c] + cells[1][c]);
        }
        prop_assert_eq!(stats.total(), stats.row_total(0) + stats.row_total(1));
        let merged = stats.clone().merge(&stats);
        prop_assert_eq!(merged.total(), 2 * stats.total());
        let table = render_stats_table(&stats);
        let totals = table.lines().find(|l| l.starts_with("Totals")).unwrap();
        prop_assert_eq!(
            totals.split_whitespace().last().unwrap().parse::<u32>().unwrap(),
            stats.total()
        );
    }

    #[test]
    fn percent_is_rounded_share(part in 0u32..500, extra in 0u32..500) {
        let whole = part + extra;
        let p = percent(part, whole);
        if whole == 0 {
            prop_assert_eq!(p, 0);
        } else {
            // |p - 100·part/whole| ≤ 1/2, ties rounding up.
            let scaled = 100 * part as u64 * 2;
            let lo = (2 * p as u64).saturating_sub(1) * whole as u64;
            let hi = (2 * p as u64 + 1) * whole as u64;
            prop_assert!(lo <= scaled && scaled < hi, "{part}/{whole} -> {p}");
        }
    }

    #[test]
    fn pairs_print_and_parse_back(a in "[a-z][a-z0-9_-]{0,8}", v in "[a-z0-9][a-z0-9_-]{0,8}") {
        let p = AttributeValue::new(&a, &v);
        prop_assert_eq!(p.to_string().parse::<AttributeValue>().unwrap(), p);
    }

    #[test]
    fn facts_print_and_parse_back(pred in "[a-z]{1,6}", args in prop::collection::vec(atom(), 1..4)) {
        let fact = Fact { predicate: pred, args };
        prop_assert_eq!(fact.to_string().parse::<Fact>().unwrap(), fact);
    }

    #[test]
    fn constraints_print_and_parse_back(
        pred in "[a-z]{1,6}",
        args in prop::collection::vec(atom(), 0..3),
        slot in 0usize..3,
    ) {
        let mut text: Vec<String> = args.iter().map(|a| if a.contains(' ') { format!("\"{a}\"") } else { a.clone() }).collect();
        text.insert(slot.min(text.len()), "X".into());
        let c: Constraint = format!("{pred}({})", text.join(",")).parse().unwrap();
        prop_assert_eq!(c.to_string().parse::<Constraint>().unwrap(), c);
    }
}

#[test]
fn empty_cf_has_no_zero_reading() {
    assert_eq!(zero_interpretation(GramRole::Subject, &CfList::default()), None);
}

#[test]
fn fixtures_survive_canonical_reserialization() {
    for (name, corpus) in all_fixtures() {
        let text = corpus.to_canonical_json();
        let again = parse_corpus(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(again, corpus, "{name}");
        assert_eq!(again.to_canonical_json(), text, "{name}");
    }
}

#[test]
fn fixture_labels_are_consistent() {
    for (name, corpus) in all_fixtures() {
        corpus
            .replay(|u, m| {
                for c in classify_utterance(u, m) {
                    let l = c.label;
                    assert_eq!(l.label == Informativeness::UnderSpecified, !l.adequate, "{name} {}", c.surface);
                    if l.adequate && l.increasing {
                        assert_ne!(l.efficient, Some(true), "{name} {}", c.surface);
                    }
                    let sortable = c.potentially_overspecified && l.label != Informativeness::OverDetermined;
                    assert_eq!(c.sort.is_some(), sortable, "{name} {}", c.surface);
                }
            })
            .unwrap();
    }
}
