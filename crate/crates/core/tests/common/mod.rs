#![allow(dead_code)]

use std::path::PathBuf;

use anaphora::corpus::{parse_corpus, Corpus};
use anaphora::distinguish::AttributeTable;
use anaphora::model::{AttributeValue, DiscourseModel, EntityId, Utterance};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(name: &str) -> Corpus {
    let path = fixture_dir().join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_corpus(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every bundled fixture, sorted by file name.
pub fn all_fixtures() -> Vec<(String, Corpus)> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_dir())
        .expect("fixture dir")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "json").then(|| p.file_stem()?.to_str().map(str::to_string))?
        })
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), fixture(&n))).collect()
}

/// Runs `f` on the model as it stands before utterance `id` is absorbed.
pub fn at_utterance<R>(corpus: &Corpus, id: u32, mut f: impl FnMut(&Utterance, &DiscourseModel) -> R) -> R {
    let mut out = None;
    corpus
        .replay(|u, m| {
            if u.id == id {
                out = Some(f(u, m));
            }
        })
        .expect("replay");
    out.unwrap_or_else(|| panic!("no utterance {id}"))
}

/// Random table of `n` entities over `attrs` attributes, each with up to
/// three values and at most one value per attribute. With `basic`, each
/// entity's first pair becomes its head.
pub fn random_table<R: rand::Rng>(rng: &mut R, n: usize, attrs: usize, basic: bool) -> AttributeTable {
    let mut table = AttributeTable::default();
    for i in 0..n {
        let id = EntityId::new(format!("x{i}"));
        let mut pairs = Vec::new();
        for a in 0..attrs {
            if rng.gen_bool(0.7) {
                pairs.push(AttributeValue::new(&format!("a{a}"), &format!("v{}", rng.gen_range(0..3))));
            }
        }
        match pairs.first().cloned() {
            Some(head) if basic => {
                table.insert(id.clone(), pairs);
                table = table.with_basic(id, head);
            }
            _ => table.insert(id, pairs),
        }
    }
    table
}
