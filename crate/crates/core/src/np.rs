//! Surface noun-phrase descriptions and the pronoun inventory.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Agreement, Animacy, AttributeValue, GramRole, Gender, Number};

/// Form class of a noun phrase, ordered by informativeness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormClass {
    Zero,
    Pronoun,
    Phrasal,
}

impl fmt::Display for FormClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormClass::Zero => "zero",
            FormClass::Pronoun => "pronoun",
            FormClass::Phrasal => "phrasal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Determiner {
    Definite,
    Demonstrative,
    Indefinite,
    None,
}

/// Agreement features carried by a pronoun. Unset fields unify with anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PronounFeatures {
    pub number: Number,
    pub gender: Option<Gender>,
    pub animacy: Option<Animacy>,
}

impl PronounFeatures {
    /// The attribute-value pairs the pronoun asserts of its referent.
    pub fn pairs(&self) -> Vec<AttributeValue> {
        let mut pairs = vec![AttributeValue::new("number", self.number.as_str())];
        if let Some(g) = self.gender {
            pairs.push(AttributeValue::new("gender", g.as_str()));
        }
        if let Some(a) = self.animacy {
            pairs.push(AttributeValue::new("animacy", a.as_str()));
        }
        pairs
    }

    pub fn unifies(&self, agreement: &Agreement) -> bool {
        self.number == agreement.number
            && self.gender.is_none_or(|g| g == agreement.gender)
            && self.animacy.is_none_or(|a| a == agreement.animacy)
    }
}

/// Lexical entry for a pronoun.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PronounEntry {
    pub features: PronounFeatures,
    pub demonstrative: bool,
    pub indefinite: bool,
}

const fn feats(number: Number, gender: Option<Gender>, animacy: Option<Animacy>) -> PronounFeatures {
    PronounFeatures {
        number,
        gender,
        animacy,
    }
}

const HE: PronounFeatures = feats(Number::Singular, Some(Gender::Male), Some(Animacy::Animate));
const SHE: PronounFeatures = feats(Number::Singular, Some(Gender::Female), Some(Animacy::Animate));
const IT: PronounFeatures = feats(Number::Singular, Some(Gender::Neuter), None);
const THEY: PronounFeatures = feats(Number::Plural, None, None);

/// Looks a pronoun lexeme up in the inventory (case-insensitive).
pub fn lookup_pronoun(lexeme: &str) -> Option<PronounEntry> {
    let lower = lexeme.to_ascii_lowercase();
    let (features, demonstrative, indefinite) = match lower.as_str() {
        "he" | "him" | "his" | "himself" => (HE, false, false),
        "she" | "her" | "hers" | "herself" => (SHE, false, false),
        "it" | "its" | "itself" => (IT, false, false),
        "they" | "them" | "their" | "theirs" | "themselves" => (THEY, false, false),
        "this" | "that" => (IT, true, false),
        "these" | "those" => (THEY, true, false),
        "someone" | "somebody" | "one" => (
            feats(Number::Singular, None, Some(Animacy::Animate)),
            false,
            true,
        ),
        "something" => (feats(Number::Singular, None, Some(Animacy::Inanimate)), false, true),
        _ => return None,
    };
    Some(PronounEntry {
        features,
        demonstrative,
        indefinite,
    })
}

/// The definite pronouns tried during generation, in order.
pub fn definite_pronouns() -> [(&'static str, PronounFeatures); 4] {
    [("he", HE), ("she", SHE), ("it", IT), ("they", THEY)]
}

/// Picks the case form of a definite pronoun for a grammatical role.
pub fn pronoun_lexeme(nominative: &str, role: GramRole) -> &'static str {
    let subject = role == GramRole::Subject;
    match (nominative, subject) {
        ("he", true) => "he",
        ("he", false) => "him",
        ("she", true) => "she",
        ("she", false) => "her",
        ("they", true) => "they",
        ("they", false) => "them",
        _ => "it",
    }
}

/// A surface noun-phrase description.
///
/// Pronouns carry agreement only, phrasal NPs carry a head and optional
/// modifiers, and zero forms carry nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpForm {
    pub form: FormClass,
    pub pronoun: Option<String>,
    pub agreement: Option<PronounFeatures>,
    pub determiner: Determiner,
    pub head: Option<AttributeValue>,
    pub modifiers: Vec<AttributeValue>,
}

impl NpForm {
    pub fn zero() -> Self {
        NpForm {
            form: FormClass::Zero,
            pronoun: None,
            agreement: None,
            determiner: Determiner::None,
            head: None,
            modifiers: Vec::new(),
        }
    }

    /// Builds a pronoun form; `None` for words outside the inventory.
    pub fn pronoun(lexeme: &str) -> Option<Self> {
        let entry = lookup_pronoun(lexeme)?;
        Some(NpForm {
            form: FormClass::Pronoun,
            pronoun: Some(lexeme.to_ascii_lowercase()),
            agreement: Some(entry.features),
            determiner: if entry.demonstrative {
                Determiner::Demonstrative
            } else {
                Determiner::Definite
            },
            head: None,
            modifiers: Vec::new(),
        })
    }

    pub fn phrasal(head: AttributeValue, modifiers: Vec<AttributeValue>) -> Self {
        NpForm {
            form: FormClass::Phrasal,
            pronoun: None,
            agreement: None,
            determiner: Determiner::Definite,
            head: Some(head),
            modifiers,
        }
    }

    /// Rank on the explicitness order: zero < pronoun < bare phrasal <
    /// phrasal with more modifiers. Demonstrative and definite pronouns tie.
    pub fn explicitness(&self) -> usize {
        match self.form {
            FormClass::Zero => 0,
            FormClass::Pronoun => 1,
            FormClass::Phrasal => 2 + self.modifiers.len(),
        }
    }

    /// Attribute-value pairs the NP expresses about its referent.
    pub fn expressed_pairs(&self) -> Vec<AttributeValue> {
        match self.form {
            FormClass::Zero => Vec::new(),
            FormClass::Pronoun => self.agreement.map(|a| a.pairs()).unwrap_or_default(),
            FormClass::Phrasal => self
                .head
                .iter()
                .chain(self.modifiers.iter())
                .cloned()
                .collect(),
        }
    }

    pub fn is_indefinite_pronoun(&self) -> bool {
        self.pronoun
            .as_deref()
            .and_then(lookup_pronoun)
            .is_some_and(|e| e.indefinite)
    }
}

/// How a modifier attribute is realized on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Realization {
    Attributive,
    /// Prepositional phrase after the head.
    Pp,
    /// Relative clause after the head.
    Relative,
}

fn spaced(token: &str) -> String {
    token.replace(['-', '_'], " ")
}

/// Token-concatenation realization of an NP, used for display only.
pub fn realize(
    np: &NpForm,
    role: GramRole,
    number: Number,
    realization_of: impl Fn(&str) -> Realization,
) -> String {
    match np.form {
        FormClass::Zero => "ZERO".to_string(),
        FormClass::Pronoun => match np.pronoun.as_deref() {
            Some(p @ ("he" | "she" | "it" | "they")) => pronoun_lexeme(p, role).to_string(),
            Some(p) => p.to_string(),
            None => "?".to_string(),
        },
        FormClass::Phrasal => {
            let mut before = Vec::new();
            let mut after = Vec::new();
            for m in &np.modifiers {
                match realization_of(&m.attribute) {
                    Realization::Attributive => before.push(spaced(&m.value)),
                    Realization::Pp => after.push(spaced(&m.value)),
                    Realization::Relative => after.push(format!("who was {}", spaced(&m.value))),
                }
            }
            let det = match np.determiner {
                Determiner::Definite => Some("the"),
                Determiner::Demonstrative => Some("that"),
                Determiner::Indefinite => Some("a"),
                Determiner::None => None,
            };
            let mut head = np.head.as_ref().map(|h| spaced(&h.value)).unwrap_or_default();
            if number == Number::Plural && !head.ends_with('s') {
                head.push('s');
            }
            det.into_iter()
                .map(str::to_string)
                .chain(before)
                .chain(std::iter::once(head))
                .chain(after)
                .collect::<Vec<_>>()
                .join(" ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicitness_order_is_strict() {
        let zero = NpForm::zero();
        let he = NpForm::pronoun("he").unwrap();
        let bare = NpForm::phrasal(AttributeValue::new("type", "man"), vec![]);
        let modified = NpForm::phrasal(
            AttributeValue::new("type", "man"),
            vec![AttributeValue::new("loc", "in-tree")],
        );
        assert!(zero.explicitness() < he.explicitness());
        assert!(he.explicitness() < bare.explicitness());
        assert!(bare.explicitness() < modified.explicitness());
    }

    #[test]
    fn demonstrative_and_definite_pronouns_tie() {
        let that = NpForm::pronoun("that").unwrap();
        let it = NpForm::pronoun("it").unwrap();
        assert_eq!(that.explicitness(), it.explicitness());
        assert_eq!(that.determiner, Determiner::Demonstrative);
    }

    #[test]
    fn he_expresses_male_singular_animate() {
        let he = NpForm::pronoun("He").unwrap();
        let pairs: Vec<String> = he.expressed_pairs().iter().map(|p| p.to_string()).collect();
        assert_eq!(pairs, ["number:sg", "gender:male", "animacy:animate"]);
    }

    #[test]
    fn unknown_pronoun_is_rejected() {
        assert!(NpForm::pronoun("xyzzy").is_none());
    }

    #[test]
    fn realizes_pp_and_relative_modifiers_after_head() {
        let np = NpForm::phrasal(
            AttributeValue::new("type", "man"),
            vec![
                AttributeValue::new("size", "little"),
                AttributeValue::new("event", "picking-the-pears"),
            ],
        );
        let text = realize(&np, GramRole::DirectObject, Number::Singular, |a| match a {
            "event" => Realization::Relative,
            _ => Realization::Attributive,
        });
        assert_eq!(text, "the little man who was picking the pears");
    }

    #[test]
    fn plural_heads_take_s() {
        let np = NpForm::phrasal(AttributeValue::new("type", "pear"), vec![]);
        assert_eq!(realize(&np, GramRole::Subject, Number::Plural, |_| Realization::Attributive), "the pears");
    }
}
