//! Annotated corpus documents: a versioned JSON schema, validation with
//! field-path diagnostics, canonical serialization and replay.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    is_agreement_attribute, Agreement, AttributeValue, Constraint, DiscourseModel, EngineConfig,
    EntityDecl, EntityId, Fact, GramRole, Mention, MentionFlags, ModelError, SegmentId, Utterance,
    UtteranceId,
};
use crate::np::{lookup_pronoun, Determiner, FormClass, NpForm};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("replay failed: {0}")]
    Replay(#[from] ModelError),
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CorpusError {
    CorpusError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpus {
    format: u32,
    #[serde(default)]
    name: String,
    #[serde(default)]
    config: EngineConfig,
    #[serde(default)]
    entities: Vec<RawEntity>,
    #[serde(default)]
    facts: Vec<Fact>,
    #[serde(default)]
    utterances: Vec<RawUtterance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntity {
    id: EntityId,
    #[serde(default)]
    attrs: Vec<AttributeValue>,
    basic: AttributeValue,
    agreement: Agreement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    evoked_in: Option<SegmentId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    associations: Vec<EntityId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    key_events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUtterance {
    id: UtteranceId,
    segment: SegmentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    segment_onset: Option<bool>,
    #[serde(default, skip_serializing_if = "is_false")]
    attentional_shift: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    facts: Vec<Fact>,
    #[serde(default)]
    mentions: Vec<RawMention>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_true(b: &bool) -> bool {
    *b
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMention {
    surface: String,
    form: FormClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pronoun: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    determiner: Option<Determiner>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    head: Option<AttributeValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    modifiers: Vec<AttributeValue>,
    role: GramRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold: Option<EntityId>,
    #[serde(default, skip_serializing_if = "is_false")]
    zero_allowed: bool,
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    anaphoric: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constraints: Vec<Constraint>,
}

/// A validated corpus document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub config: EngineConfig,
    pub entities: Vec<EntityDecl>,
    pub facts: Vec<Fact>,
    pub utterances: Vec<Utterance>,
}

/// Parses and validates a corpus document.
pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let raw: RawCorpus = serde_json::from_str(text).map_err(|e| CorpusError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Corpus::from_raw(raw)
}

impl Corpus {
    fn from_raw(raw: RawCorpus) -> Result<Corpus, CorpusError> {
        if raw.format != FORMAT_VERSION {
            return Err(invalid(
                "format",
                format!("unsupported format {}, expected {FORMAT_VERSION}", raw.format),
            ));
        }
        let mut declared: BTreeMap<EntityId, Option<SegmentId>> = BTreeMap::new();
        for (i, e) in raw.entities.iter().enumerate() {
            if declared.insert(e.id.clone(), e.evoked_in).is_some() {
                return Err(invalid(format!("entities[{i}].id"), format!("duplicate entity {}", e.id)));
            }
        }
        let mut entities = Vec::with_capacity(raw.entities.len());
        for (i, e) in raw.entities.into_iter().enumerate() {
            let path = format!("entities[{i}]");
            if let Some(p) = e
                .attrs
                .iter()
                .chain(std::iter::once(&e.basic))
                .find(|p| is_agreement_attribute(&p.attribute))
            {
                return Err(invalid(
                    format!("{path}.attrs"),
                    format!("attribute {} is reserved for agreement", p.attribute),
                ));
            }
            if e.agreement.person != 3 {
                return Err(invalid(format!("{path}.agreement.person"), "only third person is supported"));
            }
            for (j, a) in e.associations.iter().enumerate() {
                if !declared.contains_key(a) {
                    return Err(invalid(
                        format!("{path}.associations[{j}]"),
                        format!("undeclared entity {a}"),
                    ));
                }
            }
            let mut decl = EntityDecl::new(e.id, e.attrs, e.basic.clone(), e.agreement);
            decl.attrs.insert(e.basic);
            decl.evoked_in = e.evoked_in;
            decl.associations = e.associations;
            decl.key_events = e.key_events.into_iter().collect();
            entities.push(decl);
        }

        let top_initial = declared.values().flatten().max().copied();
        let mut evoked: BTreeSet<EntityId> = declared
            .iter()
            .filter(|(_, s)| s.is_some())
            .map(|(id, _)| id.clone())
            .collect();
        let mut utterances = Vec::with_capacity(raw.utterances.len());
        let mut last: Option<(UtteranceId, SegmentId)> = None;
        for (ui, u) in raw.utterances.into_iter().enumerate() {
            let path = format!("utterances[{ui}]");
            if let Some((id, seg)) = last {
                if u.id <= id {
                    return Err(invalid(
                        format!("{path}.id"),
                        format!("utterance id {} does not follow {id}", u.id),
                    ));
                }
                if u.segment < seg {
                    return Err(invalid(
                        format!("{path}.segment"),
                        format!("segment {} precedes segment {seg}", u.segment),
                    ));
                }
            } else if let Some(top) = top_initial {
                if u.segment < top {
                    return Err(invalid(
                        format!("{path}.segment"),
                        format!("segment {} precedes initial focus space {top}", u.segment),
                    ));
                }
            }
            let onset = match last {
                Some((_, seg)) => u.segment > seg,
                None => top_initial.is_none_or(|top| u.segment > top),
            };
            if let Some(given) = u.segment_onset {
                if given != onset {
                    return Err(invalid(
                        format!("{path}.segment_onset"),
                        format!("annotated {given} but segment ids imply {onset}"),
                    ));
                }
            }
            let flags = MentionFlags {
                segment_onset: onset,
                attentional_shift: u.attentional_shift,
            };
            let mut mentions = Vec::with_capacity(u.mentions.len());
            for (mi, m) in u.mentions.into_iter().enumerate() {
                let mpath = format!("{path}.mentions[{mi}]");
                mentions.push(convert_mention(m, &mpath, flags, &declared, &evoked)?);
            }
            for m in &mentions {
                if let Some(g) = &m.gold {
                    evoked.insert(g.clone());
                }
            }
            last = Some((u.id, u.segment));
            utterances.push(Utterance {
                id: u.id,
                segment: u.segment,
                mentions,
                facts: u.facts,
            });
        }
        Ok(Corpus {
            name: raw.name,
            config: raw.config,
            entities,
            facts: raw.facts,
            utterances,
        })
    }

    fn to_raw(&self) -> RawCorpus {
        RawCorpus {
            format: FORMAT_VERSION,
            name: self.name.clone(),
            config: self.config.clone(),
            entities: self
                .entities
                .iter()
                .map(|d| RawEntity {
                    id: d.id.clone(),
                    attrs: d.attrs.iter().filter(|p| **p != d.basic_category).cloned().collect(),
                    basic: d.basic_category.clone(),
                    agreement: d.agreement,
                    evoked_in: d.evoked_in,
                    associations: d.associations.clone(),
                    key_events: d.key_events.iter().cloned().collect(),
                })
                .collect(),
            facts: self.facts.clone(),
            utterances: self
                .utterances
                .iter()
                .map(|u| RawUtterance {
                    id: u.id,
                    segment: u.segment,
                    segment_onset: None,
                    attentional_shift: u.mentions.iter().any(|m| m.flags.attentional_shift),
                    facts: u.facts.clone(),
                    mentions: u
                        .mentions
                        .iter()
                        .map(|m| RawMention {
                            surface: m.surface.clone(),
                            form: m.np.form,
                            pronoun: m.np.pronoun.clone(),
                            determiner: (m.np.form == FormClass::Phrasal
                                && m.np.determiner != Determiner::Definite)
                                .then_some(m.np.determiner),
                            head: m.np.head.clone(),
                            modifiers: m.np.modifiers.clone(),
                            role: m.role,
                            gold: m.gold.clone(),
                            zero_allowed: m.zero_allowed,
                            anaphoric: m.anaphoric,
                            constraints: m.constraints.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Canonical pretty-printed JSON.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("corpus serializes")
    }

    /// The model before the first utterance: focus spaces for every
    /// `evoked_in` segment in ascending order, and pending declarations for
    /// entities a mention will evoke.
    pub fn initial_model(&self) -> Result<DiscourseModel, ModelError> {
        let mut model = DiscourseModel::new(self.config.clone());
        let segments: BTreeSet<SegmentId> = self.entities.iter().filter_map(|d| d.evoked_in).collect();
        for s in segments {
            model.push_focus_space(s)?;
            for d in self.entities.iter().filter(|d| d.evoked_in == Some(s)) {
                model.add_entity(d.clone())?;
            }
        }
        for d in self.entities.iter().filter(|d| d.evoked_in.is_none()) {
            model.declare(d.clone());
        }
        for f in &self.facts {
            model.absorb_initial_fact(f.clone());
        }
        Ok(model)
    }

    /// Walks the utterances in order, calling `visit` with each utterance
    /// and the model state before it, then absorbing the gold annotation.
    pub fn replay<F>(&self, mut visit: F) -> Result<DiscourseModel, CorpusError>
    where
        F: FnMut(&Utterance, &DiscourseModel),
    {
        let mut model = self.initial_model()?;
        for u in &self.utterances {
            visit(u, &model);
            model.update_after_utterance(u)?;
        }
        Ok(model)
    }

    pub fn mention_count(&self) -> usize {
        self.utterances.iter().map(|u| u.mentions.len()).sum()
    }
}

fn convert_mention(
    m: RawMention,
    path: &str,
    flags: MentionFlags,
    declared: &BTreeMap<EntityId, Option<SegmentId>>,
    evoked: &BTreeSet<EntityId>,
) -> Result<Mention, CorpusError> {
    if let Some(g) = &m.gold {
        if !declared.contains_key(g) {
            return Err(invalid(format!("{path}.gold"), format!("undeclared entity {g}")));
        }
        let seen = evoked.contains(g);
        if m.anaphoric && !seen {
            return Err(invalid(
                format!("{path}.anaphoric"),
                format!("entity {g} has not been evoked yet"),
            ));
        }
        if !m.anaphoric && seen {
            return Err(invalid(
                format!("{path}.anaphoric"),
                format!("entity {g} is already in the discourse"),
            ));
        }
    } else if m.anaphoric && m.form == FormClass::Zero {
        return Err(invalid(format!("{path}.gold"), "zero form needs a gold entity"));
    }
    let np = match m.form {
        FormClass::Zero => {
            if !m.zero_allowed {
                return Err(invalid(format!("{path}.zero_allowed"), "zero form at a position that forbids it"));
            }
            if m.pronoun.is_some() || m.head.is_some() || !m.modifiers.is_empty() {
                return Err(invalid(path, "zero form carries no pronoun, head or modifiers"));
            }
            NpForm::zero()
        }
        FormClass::Pronoun => {
            let Some(lexeme) = &m.pronoun else {
                return Err(invalid(format!("{path}.pronoun"), "pronoun form needs a pronoun"));
            };
            if lookup_pronoun(lexeme).is_none() {
                return Err(invalid(format!("{path}.pronoun"), format!("unknown pronoun {lexeme}")));
            }
            if m.head.is_some() || !m.modifiers.is_empty() {
                return Err(invalid(path, "pronoun form carries no head or modifiers"));
            }
            NpForm::pronoun(lexeme).expect("checked")
        }
        FormClass::Phrasal => {
            let Some(head) = m.head else {
                return Err(invalid(format!("{path}.head"), "phrasal form needs a head"));
            };
            if m.pronoun.is_some() {
                return Err(invalid(format!("{path}.pronoun"), "phrasal form carries no pronoun"));
            }
            let mut np = NpForm::phrasal(head, m.modifiers);
            if let Some(d) = m.determiner {
                np.determiner = d;
            }
            np
        }
    };
    Ok(Mention {
        surface: m.surface,
        np,
        role: m.role,
        gold: m.gold,
        zero_allowed: m.zero_allowed,
        flags,
        anaphoric: m.anaphoric,
        constraints: m.constraints,
    })
}
