//! Bidirectional engine for generating and resolving discourse-anaphoric
//! noun phrases.
//!
//! A [`model::DiscourseModel`] holds entities, a focus-space stack and the
//! centering history. [`cdescribe::generate_np`] picks a zero, pronoun or
//! phrasal form for an entity; [`cdescribe::resolve_np`] recovers the entity
//! behind a form. [`classify`] labels corpus NPs by informativeness.

pub mod batch;
pub mod cdescribe;
pub mod centering;
pub mod classify;
pub mod corpus;
pub mod distinguish;
pub mod model;
pub mod np;
pub mod report;
