//! The integrated engine relating an entity, a surface NP, the utterance
//! context and the discourse context. Generation solves for the NP,
//! understanding solves for the entity. Centering runs first; the
//! informational search then walks the context chain.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::centering::{
    compute_cb, default_pronoun_interpretation, order_cf, pronoun_rule, zero_interpretation, CbState,
};
use crate::distinguish::{build_distinguishing_description, pairs_distinguish, Context, DistinguishError};
use crate::model::{
    is_agreement_attribute, AttributeValue, Constraint, ContextStage, DiscourseModel, EntityId,
    FavCategory, Mention, StageKind, Utterance,
};
use crate::np::{definite_pronouns, pronoun_lexeme, FormClass, NpForm};

pub use crate::np::{Determiner, PronounFeatures};

/// One step of the engine's reasoning, serialized by `--trace`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceRecord {
    Centering { cb_now: CbState, cb_prev: CbState },
    CenteringDefault { entity: Option<EntityId> },
    ConstraintIgnored { constraint: String },
    ModifierIgnored { pair: String },
    Stage { stage: StageKind, candidates: Vec<EntityId> },
    InformationalAnswer { entity: EntityId },
    DefaultChosen { entity: EntityId, survivors: Vec<EntityId> },
    GardenPath { default: EntityId, answer: EntityId },
    ZeroContinuation { entity: EntityId },
    PronounLicensedByCentering { pronoun: String, adequate: bool },
    PronounAdequate { pronoun: String, stage: StageKind },
    PronounsBlocked { reason: String },
    Shadowed { form: String, stage: StageKind },
    Phrasal { head: AttributeValue, modifiers: Vec<AttributeValue>, stage: StageKind },
    FavAppended { category: FavCategory, pairs: Vec<AttributeValue> },
}

/// Outcome of matching an NP against one context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Understanding {
    Unique(EntityId),
    NoCandidates,
    Ambiguous(Vec<EntityId>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResolutionResult {
    pub entity: EntityId,
    pub stage: StageKind,
    pub garden_path: bool,
    pub centering_default: Option<EntityId>,
    /// Informational survivors at the deciding stage.
    pub survivors: Vec<EntityId>,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", rename_all = "kebab-case")]
pub enum ResolveError {
    #[error("zero pronoun without a previous utterance")]
    NoAntecedent,
    #[error("no entity in any context matches; final candidates {candidates:?}")]
    Unresolvable { candidates: Vec<EntityId> },
    #[error("ambiguous at {stage}: {candidates:?}")]
    Ambiguous {
        stage: StageKind,
        candidates: Vec<EntityId>,
    },
}

/// How a generated form is licensed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Licensing {
    /// Zero subject continuing the center.
    Continuation,
    /// Pronoun licensed by the pronoun rule even if under-specified.
    Centering,
    /// Distinguishing description at the stage that produced it.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Generation {
    #[serde(skip)]
    pub np: NpForm,
    pub stage: Option<StageKind>,
    pub licensing: Licensing,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("mention has no gold entity to generate")]
    NoGold,
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("entity {0} is not in the context")]
    NotInContext(EntityId),
    #[error("entity {0} cannot be distinguished in any context")]
    Indistinguishable(EntityId),
    #[error(transparent)]
    Distinguish(#[from] DistinguishError),
}

/// Entities in `context` matched by the NP and the given constraints.
///
/// Pronoun agreement and the phrasal head must hold. A modifier or
/// constraint that no entity in the model is known to satisfy is new
/// information and filters nothing.
pub fn candidates(
    np: &NpForm,
    constraints: &[Constraint],
    context: &BTreeSet<EntityId>,
    model: &DiscourseModel,
    trace: &mut Vec<TraceRecord>,
) -> Vec<EntityId> {
    let mut required: Vec<AttributeValue> = match np.form {
        FormClass::Zero => Vec::new(),
        FormClass::Pronoun => np.agreement.map(|a| a.pairs()).unwrap_or_default(),
        FormClass::Phrasal => np.head.iter().cloned().collect(),
    };
    for m in &np.modifiers {
        if model.pair_is_given(m) {
            required.push(m.clone());
        } else {
            trace.push(TraceRecord::ModifierIgnored { pair: m.to_string() });
        }
    }
    let given: Vec<&Constraint> = constraints
        .iter()
        .filter(|c| {
            let g = model.constraint_is_given(c);
            if !g {
                trace.push(TraceRecord::ConstraintIgnored {
                    constraint: c.to_string(),
                });
            }
            g
        })
        .collect();
    context
        .iter()
        .filter(|e| model.entity(e).is_some_and(|ent| required.iter().all(|p| ent.known_attrs.contains(p))))
        .filter(|e| given.iter().all(|c| model.satisfies(e, c)))
        .cloned()
        .collect()
}

/// Understanding direction: solve for the entity given the NP, the
/// utterance constraints and one context.
pub fn c_describe_understand(
    np: &NpForm,
    constraints: &[Constraint],
    context: &BTreeSet<EntityId>,
    model: &DiscourseModel,
) -> Understanding {
    let mut found = candidates(np, constraints, context, model, &mut Vec::new());
    match found.len() {
        0 => Understanding::NoCandidates,
        1 => Understanding::Unique(found.remove(0)),
        _ => Understanding::Ambiguous(found),
    }
}

/// First stage of the chain with any candidates, and those candidates.
pub fn informational_walk(
    np: &NpForm,
    constraints: &[Constraint],
    chain: &[ContextStage],
    model: &DiscourseModel,
    trace: &mut Vec<TraceRecord>,
) -> Option<(StageKind, Vec<EntityId>)> {
    for stage in chain {
        let found = candidates(np, constraints, &stage.entities, model, trace);
        trace.push(TraceRecord::Stage {
            stage: stage.kind,
            candidates: found.clone(),
        });
        if !found.is_empty() {
            return Some((stage.kind, found));
        }
    }
    None
}

fn agreeing_pronouns(entity: &EntityId, model: &DiscourseModel) -> Vec<(&'static str, PronounFeatures)> {
    let Some(e) = model.entity(entity) else { return Vec::new() };
    let mut inventory: Vec<_> = definite_pronouns().to_vec();
    if model.config().generate_demonstratives {
        for lex in ["that", "those"] {
            if let Some(np) = NpForm::pronoun(lex) {
                inventory.push((lex, np.agreement.expect("pronoun has agreement")));
            }
        }
    }
    inventory
        .into_iter()
        .filter(|(_, f)| f.unifies(&e.agreement))
        .collect()
}

fn pronoun_form(nominative: &str, mention: &Mention) -> NpForm {
    NpForm::pronoun(pronoun_lexeme(nominative, mention.role))
        .or_else(|| NpForm::pronoun(nominative))
        .expect("inventory pronoun")
}

/// Modifiers for a phrasal NP with `head`: from the entity's
/// highest-priority focused attribute set when it distinguishes, else from
/// all of its known attributes. Redundant selections are pruned so the
/// result is a minimal distinguishing modifier set.
pub fn select_modifiers(
    entity: &EntityId,
    head: &AttributeValue,
    context: &Context,
    model: &DiscourseModel,
) -> Result<Vec<AttributeValue>, DistinguishError> {
    let e = model
        .entity(entity)
        .ok_or_else(|| DistinguishError::TargetNotInContext(entity.clone()))?;
    let universe: Vec<EntityId> = context
        .universe()
        .iter()
        .filter(|c| model.entity(c).is_some_and(|x| x.known_attrs.contains(head)))
        .cloned()
        .collect();
    if !universe.contains(entity) {
        return Err(DistinguishError::TargetNotInContext(entity.clone()));
    }
    if universe.len() == 1 {
        return Ok(Vec::new());
    }
    let headed = Context::new(universe)?;
    let prune = |pairs: &[AttributeValue]| {
        let mut kept = pairs.to_vec();
        let mut i = kept.len();
        while i > 0 {
            i -= 1;
            let mut trial = kept.clone();
            trial.remove(i);
            if pairs_distinguish(&trial, entity, &headed, model) {
                kept = trial;
            }
        }
        kept
    };
    if let Some((_, fav)) = e.top_fav_modifiers(&head.attribute) {
        let pool: BTreeSet<_> = fav.into_iter().collect();
        if let Ok(d) = build_distinguishing_description(entity, &pool, &headed, model) {
            return Ok(prune(d.pairs()));
        }
    }
    let pool: BTreeSet<_> = e
        .known_attrs
        .iter()
        .filter(|p| p.attribute != head.attribute && !is_agreement_attribute(&p.attribute))
        .cloned()
        .collect();
    let d = build_distinguishing_description(entity, &pool, &headed, model)?;
    Ok(prune(d.pairs()))
}

/// Generation direction within one context: the first definite pronoun
/// that, with the constraints, distinguishes the entity; otherwise a phrasal
/// NP headed by the basic category with as few modifiers as needed.
pub fn c_describe_generate(
    entity: &EntityId,
    constraints: &[Constraint],
    context: &BTreeSet<EntityId>,
    model: &DiscourseModel,
    allow_pronouns: bool,
) -> Result<NpForm, GenerateError> {
    let e = model
        .entity(entity)
        .ok_or_else(|| GenerateError::UnknownEntity(entity.clone()))?;
    if !context.contains(entity) {
        return Err(GenerateError::NotInContext(entity.clone()));
    }
    let sole = |np: &NpForm| {
        let found = candidates(np, constraints, context, model, &mut Vec::new());
        found.len() == 1 && &found[0] == entity
    };
    if allow_pronouns {
        for (lexeme, _) in agreeing_pronouns(entity, model) {
            let np = NpForm::pronoun(lexeme).expect("inventory pronoun");
            if sole(&np) {
                return Ok(np);
            }
        }
    }
    let head = e.basic_category.clone();
    let bare = NpForm::phrasal(head.clone(), Vec::new());
    if sole(&bare) {
        return Ok(bare);
    }
    let found = candidates(&bare, constraints, context, model, &mut Vec::new());
    let universe = if found.contains(entity) {
        found
    } else {
        context.iter().cloned().collect()
    };
    let modifiers = select_modifiers(entity, &head, &Context::new(universe)?, model)?;
    let np = NpForm::phrasal(head, modifiers);
    if sole(&np) {
        Ok(np)
    } else {
        Err(GenerateError::Indistinguishable(entity.clone()))
    }
}

fn shares_previous(
    utterance: &Utterance,
    index: usize,
    answer: &EntityId,
    previous: &crate::centering::CfList,
) -> bool {
    previous.contains(answer)
        || utterance
            .mentions
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != index)
            .filter_map(|(_, m)| m.gold.as_ref())
            .any(|g| previous.contains(g))
}

/// Resolves mention `index` of `utterance` against the model state before
/// the utterance. The mention's own gold id is ignored; other mentions'
/// annotations stand in for their realizations.
pub fn resolve_np(
    utterance: &Utterance,
    index: usize,
    model: &DiscourseModel,
) -> Result<ResolutionResult, ResolveError> {
    let mention = &utterance.mentions[index];
    let previous = model.previous();
    let mut trace = Vec::new();
    match mention.np.form {
        FormClass::Zero => {
            let prev = previous.ok_or(ResolveError::NoAntecedent)?;
            let entity = zero_interpretation(mention.role, &prev.cf).ok_or(ResolveError::NoAntecedent)?;
            trace.push(TraceRecord::ZeroContinuation {
                entity: entity.clone(),
            });
            Ok(ResolutionResult {
                entity: entity.clone(),
                stage: StageKind::PreviousCf,
                garden_path: false,
                centering_default: Some(entity.clone()),
                survivors: vec![entity],
                trace,
            })
        }
        FormClass::Pronoun => {
            let default = previous.and_then(|p| default_pronoun_interpretation(&mention.np, &p.cf, model));
            trace.push(TraceRecord::CenteringDefault {
                entity: default.clone(),
            });
            let chain = model.context_chain();
            let Some((stage, survivors)) =
                informational_walk(&mention.np, &mention.constraints, &chain, model, &mut trace)
            else {
                return Err(ResolveError::Unresolvable { candidates: vec![] });
            };
            if survivors.len() == 1 {
                let answer = survivors[0].clone();
                trace.push(TraceRecord::InformationalAnswer {
                    entity: answer.clone(),
                });
                let garden_path = match (&default, previous) {
                    (Some(d), Some(prev)) => {
                        d != &answer && !shares_previous(utterance, index, &answer, &prev.cf)
                    }
                    _ => false,
                };
                if garden_path {
                    trace.push(TraceRecord::GardenPath {
                        default: default.clone().expect("checked"),
                        answer: answer.clone(),
                    });
                }
                return Ok(ResolutionResult {
                    entity: answer,
                    stage,
                    garden_path,
                    centering_default: default,
                    survivors,
                    trace,
                });
            }
            match default {
                Some(d) if survivors.contains(&d) => {
                    trace.push(TraceRecord::DefaultChosen {
                        entity: d.clone(),
                        survivors: survivors.clone(),
                    });
                    Ok(ResolutionResult {
                        entity: d.clone(),
                        stage,
                        garden_path: false,
                        centering_default: Some(d),
                        survivors,
                        trace,
                    })
                }
                _ => Err(ResolveError::Ambiguous {
                    stage,
                    candidates: survivors,
                }),
            }
        }
        FormClass::Phrasal => {
            let chain = model.context_chain();
            let Some((stage, survivors)) =
                informational_walk(&mention.np, &mention.constraints, &chain, model, &mut trace)
            else {
                return Err(ResolveError::Unresolvable { candidates: vec![] });
            };
            if survivors.len() > 1 {
                return Err(ResolveError::Ambiguous {
                    stage,
                    candidates: survivors,
                });
            }
            let entity = survivors[0].clone();
            trace.push(TraceRecord::InformationalAnswer {
                entity: entity.clone(),
            });
            Ok(ResolutionResult {
                entity,
                stage,
                garden_path: false,
                centering_default: None,
                survivors,
                trace,
            })
        }
    }
}

/// Generates a form for mention `index` of `utterance` from its gold
/// entity, against the model state before the utterance.
///
/// Pipeline: a zero subject when it continues the center; the agreeing
/// pronoun when the pronoun rule holds for the entity; otherwise a walk of
/// the context chain, with pronouns blocked under a null CB. Phrasal forms
/// at segment onsets or for distant antecedents also carry the
/// highest-priority focused attribute set. Every candidate form is checked
/// by resolving it before it is emitted.
pub fn generate_np(
    utterance: &Utterance,
    index: usize,
    model: &DiscourseModel,
) -> Result<Generation, GenerateError> {
    let mention = &utterance.mentions[index];
    let entity = mention.gold.clone().ok_or(GenerateError::NoGold)?;
    let e = model
        .entity(&entity)
        .ok_or_else(|| GenerateError::UnknownEntity(entity.clone()))?;
    let previous = model.previous();
    let cf_now = order_cf(&utterance.gold_realizations());
    let cb_now = compute_cb(&cf_now, previous.map(|p| &p.cf));
    let cb_prev = previous.map(|p| p.cb.clone()).unwrap_or(CbState::Undefined);
    let mut trace = vec![TraceRecord::Centering {
        cb_now: cb_now.clone(),
        cb_prev: cb_prev.clone(),
    }];

    let verify = |np: &NpForm| -> Option<ResolutionResult> {
        let mut hypothetical = utterance.clone();
        hypothetical.mentions[index].np = np.clone();
        resolve_np(&hypothetical, index, model)
            .ok()
            .filter(|r| r.entity == entity)
    };

    let is_center = cb_now.entity() == Some(&entity);
    if mention.zero_allowed && mention.role.is_subject() && is_center {
        let zero = NpForm::zero();
        if verify(&zero).is_some() {
            trace.push(TraceRecord::ZeroContinuation {
                entity: entity.clone(),
            });
            return Ok(Generation {
                np: zero,
                stage: Some(StageKind::PreviousCf),
                licensing: Licensing::Continuation,
                trace,
            });
        }
    }

    if is_center && pronoun_rule(&cb_now, &cb_prev) {
        for (lexeme, _) in agreeing_pronouns(&entity, model) {
            let np = pronoun_form(lexeme, mention);
            if let Some(r) = verify(&np) {
                let adequate = r.survivors.len() == 1;
                trace.push(TraceRecord::PronounLicensedByCentering {
                    pronoun: lexeme.to_string(),
                    adequate,
                });
                return Ok(Generation {
                    np,
                    stage: Some(r.stage),
                    licensing: if adequate {
                        Licensing::Informational
                    } else {
                        Licensing::Centering
                    },
                    trace,
                });
            }
        }
    }

    let allow_pronouns = cb_now != CbState::Null;
    if !allow_pronouns {
        trace.push(TraceRecord::PronounsBlocked {
            reason: "null CB".to_string(),
        });
    }

    let mut effective = BTreeSet::new();
    for stage in model.context_chain() {
        effective.extend(stage.entities.iter().cloned());
        if !stage.entities.contains(&entity) {
            continue;
        }
        let Ok(mut np) =
            c_describe_generate(&entity, &mention.constraints, &effective, model, allow_pronouns)
        else {
            continue;
        };
        if np.form == FormClass::Pronoun {
            let lexeme = np.pronoun.clone().unwrap_or_default();
            np = pronoun_form(&lexeme, mention);
            trace.push(TraceRecord::PronounAdequate {
                pronoun: lexeme,
                stage: stage.kind,
            });
        } else {
            let head = np.head.clone().expect("phrasal head");
            trace.push(TraceRecord::Phrasal {
                head: head.clone(),
                modifiers: np.modifiers.clone(),
                stage: stage.kind,
            });
            if mention.flags.segment_onset || stage.kind.is_distant() {
                if let Some((category, pairs)) = e.top_fav_modifiers(&head.attribute) {
                    let added: Vec<_> = pairs.into_iter().filter(|p| !np.modifiers.contains(p)).collect();
                    np.modifiers.extend(added.iter().cloned());
                    trace.push(TraceRecord::FavAppended {
                        category,
                        pairs: added,
                    });
                }
            }
        }
        if verify(&np).is_some() {
            return Ok(Generation {
                np,
                stage: Some(stage.kind),
                licensing: Licensing::Informational,
                trace,
            });
        }
        trace.push(TraceRecord::Shadowed {
            form: format!("{:?}", np.form),
            stage: stage.kind,
        });
    }
    Err(GenerateError::Indistinguishable(entity))
}
