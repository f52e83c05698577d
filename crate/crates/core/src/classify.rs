//! Informativeness labels for discourse-anaphoric NPs, detection and sorting
//! of potentially over-specified NPs, and the contingency report.

use std::fmt;

use serde::Serialize;

use crate::cdescribe::{informational_walk, resolve_np};
use crate::centering::zero_interpretation;
use crate::model::{DiscourseModel, EntityId, Mention, Utterance};
use crate::np::{definite_pronouns, pronoun_lexeme, FormClass, NpForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Informativeness {
    WellSpecified,
    OverSpecified,
    UnderSpecified,
    OverDetermined,
}

impl fmt::Display for Informativeness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Informativeness::WellSpecified => "well-specified",
            Informativeness::OverSpecified => "over-specified",
            Informativeness::UnderSpecified => "under-specified",
            Informativeness::OverDetermined => "over-determined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InformativenessLabel {
    pub adequate: bool,
    /// Undefined for inadequate NPs.
    pub efficient: Option<bool>,
    pub increasing: bool,
    pub label: Informativeness,
}

impl InformativenessLabel {
    pub fn from_predicates(adequate: bool, efficient: Option<bool>, increasing: bool) -> Self {
        let label = if !adequate {
            Informativeness::UnderSpecified
        } else if increasing {
            Informativeness::OverDetermined
        } else if efficient == Some(true) {
            Informativeness::WellSpecified
        } else {
            Informativeness::OverSpecified
        };
        InformativenessLabel {
            adequate,
            efficient: if adequate { efficient } else { None },
            increasing,
            label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SortCategory {
    WellSpecified,
    SegmentOnset,
    AttentionalShift,
    Other,
}

impl SortCategory {
    pub const ALL: [SortCategory; 4] = [
        SortCategory::WellSpecified,
        SortCategory::SegmentOnset,
        SortCategory::AttentionalShift,
        SortCategory::Other,
    ];
}

impl fmt::Display for SortCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SortCategory::WellSpecified => "well-specified",
            SortCategory::SegmentOnset => "segment-onset",
            SortCategory::AttentionalShift => "attentional-shift",
            SortCategory::Other => "other",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AntecedentSegment {
    Same,
    Previous,
}

impl fmt::Display for AntecedentSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AntecedentSegment::Same => "same",
            AntecedentSegment::Previous => "previous",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OverSpecSort {
    pub category: SortCategory,
    pub antecedent_segment: AntecedentSegment,
}

fn with_form(utterance: &Utterance, index: usize, np: NpForm) -> Utterance {
    let mut u = utterance.clone();
    u.mentions[index].np = np;
    u
}

fn gold_of(mention: &Mention) -> Option<&EntityId> {
    mention.gold.as_ref()
}

/// Whether `np` in the position of mention `index` identifies the gold
/// entity: the first context stage with any candidates holds exactly it. A
/// zero form identifies whatever the zero interpretation picks.
pub fn form_is_adequate(np: &NpForm, utterance: &Utterance, index: usize, model: &DiscourseModel) -> bool {
    let mention = &utterance.mentions[index];
    let Some(gold) = gold_of(mention) else { return false };
    if np.form == FormClass::Zero {
        return model
            .previous()
            .and_then(|p| zero_interpretation(mention.role, &p.cf))
            .as_ref()
            == Some(gold);
    }
    let chain = model.context_chain();
    match informational_walk(np, &mention.constraints, &chain, model, &mut Vec::new()) {
        Some((_, found)) => found.len() == 1 && &found[0] == gold,
        None => false,
    }
}

pub fn adequacy(utterance: &Utterance, index: usize, model: &DiscourseModel) -> bool {
    form_is_adequate(&utterance.mentions[index].np, utterance, index, model)
}

/// Forms strictly below the mention's form on the explicitness order that
/// could fill its position: zero where licensed, pronouns agreeing with the
/// gold entity, the bare head and every proper subset of the modifiers.
pub fn lower_forms(utterance: &Utterance, index: usize, model: &DiscourseModel) -> Vec<NpForm> {
    let mention = &utterance.mentions[index];
    let mut out = Vec::new();
    if mention.np.form == FormClass::Zero {
        return out;
    }
    if mention.zero_allowed {
        out.push(NpForm::zero());
    }
    if mention.np.form == FormClass::Pronoun {
        return out;
    }
    if let Some(e) = gold_of(mention).and_then(|g| model.entity(g)) {
        for (lexeme, f) in definite_pronouns() {
            if f.unifies(&e.agreement) {
                out.extend(NpForm::pronoun(pronoun_lexeme(lexeme, mention.role)));
            }
        }
    }
    let head = mention.np.head.clone().expect("phrasal head");
    let mods = &mention.np.modifiers;
    let n = mods.len().min(16);
    for mask in 0u32..(1 << n) - 1 {
        let kept = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| mods[i].clone()).collect();
        let mut np = NpForm::phrasal(head.clone(), kept);
        np.determiner = mention.np.determiner;
        out.push(np);
    }
    out
}

/// True iff no strictly lower form is adequate in the same position.
pub fn efficiency(utterance: &Utterance, index: usize, model: &DiscourseModel) -> bool {
    lower_forms(utterance, index, model)
        .iter()
        .all(|np| !form_is_adequate(np, utterance, index, model))
}

/// True iff the NP expresses a pair not yet known of the entity.
pub fn increasing(mention: &Mention, entity: &EntityId, model: &DiscourseModel) -> bool {
    let Some(e) = model.entity(entity) else { return false };
    mention
        .np
        .expressed_pairs()
        .iter()
        .any(|p| !e.known_attrs.contains(p))
}

pub fn classify_np(utterance: &Utterance, index: usize, model: &DiscourseModel) -> InformativenessLabel {
    let mention = &utterance.mentions[index];
    let adequate = adequacy(utterance, index, model);
    let efficient = adequate.then(|| efficiency(utterance, index, model));
    let inc = gold_of(mention).is_some_and(|g| increasing(mention, g, model));
    InformativenessLabel::from_predicates(adequate, efficient, inc)
}

/// Whether the mention is potentially over-specified: a discourse-anaphoric
/// phrasal NP, or a pronoun where a zero form is licensed, whose nearest
/// preceding coindexed mention is strictly less explicit.
pub fn is_potentially_overspecified(mention: &Mention, model: &DiscourseModel) -> bool {
    if !mention.anaphoric {
        return false;
    }
    let eligible = match mention.np.form {
        FormClass::Phrasal => true,
        FormClass::Pronoun => mention.zero_allowed,
        FormClass::Zero => false,
    };
    let antecedent = gold_of(mention)
        .and_then(|g| model.entity(g))
        .and_then(|e| e.last_mention);
    eligible && antecedent.is_some_and(|a| a.explicitness < mention.np.explicitness())
}

/// Indices of potentially over-specified mentions in one utterance.
pub fn find_potentially_overspecified(utterance: &Utterance, model: &DiscourseModel) -> Vec<usize> {
    utterance
        .mentions
        .iter()
        .enumerate()
        .filter(|(_, m)| is_potentially_overspecified(m, model))
        .map(|(i, _)| i)
        .collect()
}

/// Whether a lower form would still be understood as the gold entity. An
/// ambiguous pronoun counts if its centering default is the gold entity; a
/// garden path does not count.
fn lower_form_is_clear(np: &NpForm, utterance: &Utterance, index: usize, model: &DiscourseModel) -> bool {
    let gold = gold_of(&utterance.mentions[index]);
    if np.form == FormClass::Zero {
        return form_is_adequate(np, utterance, index, model);
    }
    let hypothetical = with_form(utterance, index, np.clone());
    match resolve_np(&hypothetical, index, model) {
        Ok(r) => Some(&r.entity) == gold && !r.garden_path,
        Err(_) => false,
    }
}

pub fn antecedent_segment(utterance: &Utterance, index: usize, model: &DiscourseModel) -> AntecedentSegment {
    let same = gold_of(&utterance.mentions[index])
        .and_then(|g| model.entity(g))
        .and_then(|e| e.antecedent_segment()) == Some(utterance.segment);
    if same {
        AntecedentSegment::Same
    } else {
        AntecedentSegment::Previous
    }
}

/// Sorts a potentially over-specified NP into the first applicable of
/// well-specified, segment onset, attentional shift and other.
pub fn sort_overspecified(utterance: &Utterance, index: usize, model: &DiscourseModel) -> OverSpecSort {
    let mention = &utterance.mentions[index];
    let unclear = lower_forms(utterance, index, model)
        .iter()
        .all(|np| !lower_form_is_clear(np, utterance, index, model));
    let category = if unclear {
        SortCategory::WellSpecified
    } else if mention.flags.segment_onset {
        SortCategory::SegmentOnset
    } else if mention.flags.attentional_shift {
        SortCategory::AttentionalShift
    } else {
        SortCategory::Other
    };
    OverSpecSort {
        category,
        antecedent_segment: antecedent_segment(utterance, index, model),
    }
}

/// Per-mention outcome used to build the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassifiedMention {
    pub utterance: u32,
    pub mention: usize,
    pub surface: String,
    pub form: FormClass,
    pub label: InformativenessLabel,
    pub potentially_overspecified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sort: Option<OverSpecSort>,
}

/// Classifies every discourse-anaphoric mention of one utterance against
/// the model state before it.
pub fn classify_utterance(utterance: &Utterance, model: &DiscourseModel) -> Vec<ClassifiedMention> {
    utterance
        .mentions
        .iter()
        .enumerate()
        .filter(|(_, m)| m.anaphoric && m.gold.is_some())
        .map(|(i, m)| {
            let label = classify_np(utterance, i, model);
            let flagged = is_potentially_overspecified(m, model);
            let sort = (flagged && label.label != Informativeness::OverDetermined)
                .then(|| sort_overspecified(utterance, i, model));
            ClassifiedMention {
                utterance: utterance.id,
                mention: i,
                surface: m.surface.clone(),
                form: m.np.form,
                label,
                potentially_overspecified: flagged,
                sort,
            }
        })
        .collect()
}

/// Table of potentially over-specified NPs by antecedent segment and
/// category, with form-class totals over all discourse-anaphoric NPs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    /// `[same, previous]` × `[well-specified, onset, shift, other]`.
    pub cells: [[u32; 4]; 2],
    pub over_determined: u32,
    pub phrasal: u32,
    pub pronoun: u32,
    pub zero: u32,
}

impl CorpusStats {
    pub fn add(&mut self, m: &ClassifiedMention) {
        match m.form {
            FormClass::Phrasal => self.phrasal += 1,
            FormClass::Pronoun => self.pronoun += 1,
            FormClass::Zero => self.zero += 1,
        }
        if !m.potentially_overspecified {
            return;
        }
        match m.sort {
            Some(s) => {
                let row = s.antecedent_segment as usize;
                let col = SortCategory::ALL.iter().position(|c| *c == s.category).expect("category");
                self.cells[row][col] += 1;
            }
            None => self.over_determined += 1,
        }
    }

    pub fn merge(mut self, other: &CorpusStats) -> CorpusStats {
        for r in 0..2 {
            for c in 0..4 {
                self.cells[r][c] += other.cells[r][c];
            }
        }
        self.over_determined += other.over_determined;
        self.phrasal += other.phrasal;
        self.pronoun += other.pronoun;
        self.zero += other.zero;
        self
    }

    pub fn row_total(&self, row: usize) -> u32 {
        self.cells[row].iter().sum()
    }

    pub fn column_totals(&self) -> [u32; 4] {
        std::array::from_fn(|c| self.cells[0][c] + self.cells[1][c])
    }

    pub fn total(&self) -> u32 {
        self.row_total(0) + self.row_total(1)
    }

    pub fn anaphoric_total(&self) -> u32 {
        self.phrasal + self.pronoun + self.zero
    }

    /// Potentially over-specified NPs that are not well-specified.
    pub fn over_specified(&self) -> u32 {
        self.total() - self.column_totals()[0]
    }
}

/// Integer percentage, rounded half up.
pub fn percent(part: u32, whole: u32) -> u32 {
    if whole == 0 {
        0
    } else {
        ((200 * part as u64 + whole as u64) / (2 * whole as u64)) as u32
    }
}

pub fn corpus_stats<'a>(mentions: impl IntoIterator<Item = &'a ClassifiedMention>) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for m in mentions {
        stats.add(m);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_table() {
        use Informativeness::*;
        let l = |a, e, i| InformativenessLabel::from_predicates(a, e, i).label;
        assert_eq!(l(true, Some(true), false), WellSpecified);
        assert_eq!(l(true, Some(false), false), OverSpecified);
        assert_eq!(l(true, Some(false), true), OverDetermined);
        assert_eq!(l(false, None, true), UnderSpecified);
        assert_eq!(InformativenessLabel::from_predicates(false, Some(true), false).efficient, None);
    }

    #[test]
    fn percent_rounds_half_up() {
        assert_eq!(percent(1, 8), 13);
        assert_eq!(percent(2, 3), 67);
        assert_eq!(percent(1, 6), 17);
        assert_eq!(percent(1, 3), 33);
        assert_eq!(percent(0, 0), 0);
    }

    #[test]
    fn stats_rows_and_rate() {
        let s = CorpusStats {
            cells: [[3, 0, 2, 1], [4, 5, 1, 0]],
            over_determined: 1,
            ..CorpusStats::default()
        };
        assert_eq!(s.row_total(0), 6);
        assert_eq!(s.row_total(1), 10);
        assert_eq!(s.column_totals(), [7, 5, 3, 1]);
        assert_eq!(s.total(), 16);
        assert_eq!(s.over_specified(), 9);
    }
}
