//! Drivers behind the command-line verbs and their table / record output.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::batch;
use crate::cdescribe::{generate_np, resolve_np, Licensing, TraceRecord};
use crate::classify::{classify_utterance, corpus_stats, percent, ClassifiedMention, CorpusStats, SortCategory};
use crate::corpus::{Corpus, CorpusError};
use crate::distinguish::{discriminatory_power, power_table, AttributeTable, Context, DistinguishError, Power};
use crate::model::{AttributeValue, EntityId, Number, StageKind};
use crate::np::{realize, FormClass, NpForm};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Options {
    pub trace: bool,
    /// Stop at the first mention the engine fails on.
    pub strict: bool,
}

/// A mention the engine could not process under `--strict`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineFailure {
    pub utterance: u32,
    pub mention: usize,
    pub message: String,
}

impl std::fmt::Display for EngineFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "utterance {} mention {}: {}", self.utterance, self.mention, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("engine failure at {0}")]
    Engine(EngineFailure),
}

fn ids(v: &[EntityId]) -> String {
    v.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(",")
}

fn opt_id(e: &Option<EntityId>) -> &str {
    e.as_ref().map_or("-", |e| e.as_str())
}

fn push_trace(out: &mut String, trace: &Option<Vec<TraceRecord>>) {
    for t in trace.iter().flatten() {
        let _ = writeln!(out, "    {}", serde_json::to_string(t).expect("trace serializes"));
    }
}

fn jsonl<T: Serialize>(records: &[T], summary: &impl Serialize) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out.push_str(&serde_json::to_string(summary).expect("summary serializes"));
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResolveRecord {
    pub utterance: u32,
    pub mention: usize,
    pub surface: String,
    pub form: FormClass,
    pub gold: Option<EntityId>,
    pub predicted: Option<EntityId>,
    pub correct: bool,
    pub stage: Option<StageKind>,
    pub garden_path: bool,
    pub centering_default: Option<EntityId>,
    /// Informational survivors when more than one remained.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ambiguous: Vec<EntityId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolveReport {
    pub corpus: String,
    pub records: Vec<ResolveRecord>,
    pub total: usize,
    pub correct: usize,
}

impl ResolveReport {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Resolves every discourse-anaphoric mention with its own gold id hidden,
/// replaying the gold annotation to advance the model.
pub fn run_resolve(corpus: &Corpus, opts: Options) -> Result<ResolveReport, RunError> {
    let mut records = Vec::new();
    let mut failure = None;
    corpus.replay(|u, model| {
        for (i, m) in u.mentions.iter().enumerate() {
            if !m.anaphoric || m.gold.is_none() || failure.is_some() {
                continue;
            }
            let mut hidden = u.clone();
            hidden.mentions[i].gold = None;
            let r = resolve_np(&hidden, i, model);
            let rec = match r {
                Ok(r) => ResolveRecord {
                    utterance: u.id,
                    mention: i,
                    surface: m.surface.clone(),
                    form: m.np.form,
                    gold: m.gold.clone(),
                    correct: Some(&r.entity) == m.gold.as_ref(),
                    predicted: Some(r.entity),
                    stage: Some(r.stage),
                    garden_path: r.garden_path,
                    centering_default: r.centering_default,
                    ambiguous: if r.survivors.len() > 1 { r.survivors } else { Vec::new() },
                    error: None,
                    trace: opts.trace.then_some(r.trace),
                },
                Err(e) => {
                    if opts.strict {
                        failure = Some(EngineFailure {
                            utterance: u.id,
                            mention: i,
                            message: e.to_string(),
                        });
                    }
                    ResolveRecord {
                        utterance: u.id,
                        mention: i,
                        surface: m.surface.clone(),
                        form: m.np.form,
                        gold: m.gold.clone(),
                        predicted: None,
                        correct: false,
                        stage: None,
                        garden_path: false,
                        centering_default: None,
                        ambiguous: match &e {
                            crate::cdescribe::ResolveError::Ambiguous { candidates, .. } => candidates.clone(),
                            _ => Vec::new(),
                        },
                        error: Some(e.to_string()),
                        trace: None,
                    }
                }
            };
            records.push(rec);
        }
    })?;
    if let Some(f) = failure {
        return Err(RunError::Engine(f));
    }
    let correct = records.iter().filter(|r| r.correct).count();
    Ok(ResolveReport {
        corpus: corpus.name.clone(),
        total: records.len(),
        correct,
        records,
    })
}

impl ResolveReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.corpus);
        let _ = writeln!(
            out,
            "{:>5} {:>2}  {:<36} {:<6} {:<6} {:<10} {:<6} notes",
            "utt", "m", "surface", "gold", "pred", "stage", "ok"
        );
        for r in &self.records {
            let mut notes = Vec::new();
            if r.garden_path {
                notes.push("garden-path".to_string());
            }
            if let Some(d) = &r.centering_default {
                notes.push(format!("default={d}"));
            }
            if !r.ambiguous.is_empty() {
                notes.push(format!("ambiguous={{{}}}", ids(&r.ambiguous)));
            }
            if let Some(e) = &r.error {
                notes.push(e.clone());
            }
            let _ = writeln!(
                out,
                "{:>5} {:>2}  {:<36} {:<6} {:<6} {:<10} {:<6} {}",
                r.utterance,
                r.mention,
                r.surface,
                opt_id(&r.gold),
                opt_id(&r.predicted),
                r.stage.map_or("-".to_string(), |s| s.to_string()),
                if r.correct { "yes" } else { "NO" },
                notes.join(" ")
            );
            push_trace(&mut out, &r.trace);
        }
        let _ = writeln!(
            out,
            "accuracy: {}/{} ({:.1}%)",
            self.correct,
            self.total,
            100.0 * self.accuracy()
        );
        out
    }

    pub fn render_records(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            summary: &'a str,
            corpus: &'a str,
            total: usize,
            correct: usize,
            accuracy: f64,
        }
        jsonl(
            &self.records,
            &Summary {
                summary: "resolve",
                corpus: &self.corpus,
                total: self.total,
                correct: self.correct,
                accuracy: self.accuracy(),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormSummary {
    pub form: FormClass,
    pub head: Option<AttributeValue>,
    pub modifiers: BTreeSet<AttributeValue>,
    pub text: String,
}

impl FormSummary {
    fn of(np: &NpForm, role: crate::model::GramRole, number: Number, corpus: &Corpus) -> Self {
        FormSummary {
            form: np.form,
            head: np.head.clone(),
            modifiers: np.modifiers.iter().cloned().collect(),
            text: realize(np, role, number, |a| corpus.config.realization_of(a)),
        }
    }

    /// Same form class, head and modifier set.
    pub fn same_content(&self, other: &FormSummary) -> bool {
        self.form == other.form && self.head == other.head && self.modifiers == other.modifiers
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenerateRecord {
    pub utterance: u32,
    pub mention: usize,
    pub gold: EntityId,
    pub annotated: FormSummary,
    pub generated: Option<FormSummary>,
    pub stage: Option<StageKind>,
    pub licensing: Option<Licensing>,
    pub form_match: bool,
    pub exact_match: bool,
    /// Resolving the generated form recovers the gold entity.
    pub round_trip: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateReport {
    pub corpus: String,
    pub records: Vec<GenerateRecord>,
}

impl GenerateReport {
    pub fn total(&self) -> usize {
        self.records.len()
    }

    pub fn count(&self, f: impl Fn(&GenerateRecord) -> bool) -> usize {
        self.records.iter().filter(|r| f(r)).count()
    }
}

/// Generates a form for every discourse-anaphoric mention from its gold
/// entity and compares it with the annotation.
pub fn run_generate(corpus: &Corpus, opts: Options) -> Result<GenerateReport, RunError> {
    let mut records = Vec::new();
    let mut failure = None;
    corpus.replay(|u, model| {
        for (i, m) in u.mentions.iter().enumerate() {
            let Some(gold) = &m.gold else { continue };
            if !m.anaphoric || failure.is_some() {
                continue;
            }
            let number = model.entity(gold).map_or(Number::Singular, |e| e.agreement.number);
            let annotated = FormSummary::of(&m.np, m.role, number, corpus);
            let rec = match generate_np(u, i, model) {
                Ok(g) => {
                    let generated = FormSummary::of(&g.np, m.role, number, corpus);
                    let mut probe = u.clone();
                    probe.mentions[i].np = g.np.clone();
                    probe.mentions[i].gold = None;
                    let round_trip = resolve_np(&probe, i, model).is_ok_and(|r| &r.entity == gold);
                    GenerateRecord {
                        utterance: u.id,
                        mention: i,
                        gold: gold.clone(),
                        form_match: generated.form == annotated.form,
                        exact_match: generated.same_content(&annotated),
                        annotated,
                        generated: Some(generated),
                        stage: g.stage,
                        licensing: Some(g.licensing),
                        round_trip,
                        error: None,
                        trace: opts.trace.then_some(g.trace),
                    }
                }
                Err(e) => {
                    if opts.strict {
                        failure = Some(EngineFailure {
                            utterance: u.id,
                            mention: i,
                            message: e.to_string(),
                        });
                    }
                    GenerateRecord {
                        utterance: u.id,
                        mention: i,
                        gold: gold.clone(),
                        annotated,
                        generated: None,
                        stage: None,
                        licensing: None,
                        form_match: false,
                        exact_match: false,
                        round_trip: false,
                        error: Some(e.to_string()),
                        trace: None,
                    }
                }
            };
            records.push(rec);
        }
    })?;
    if let Some(f) = failure {
        return Err(RunError::Engine(f));
    }
    Ok(GenerateReport {
        corpus: corpus.name.clone(),
        records,
    })
}

fn rate(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        1.0
    } else {
        part as f64 / whole as f64
    }
}

impl GenerateReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.corpus);
        let _ = writeln!(
            out,
            "{:>5} {:>2}  {:<6} {:<36} {:<36} {:<10} {:<5} {:<5} round-trip",
            "utt", "m", "gold", "annotated", "generated", "stage", "form", "exact"
        );
        for r in &self.records {
            let generated = match (&r.generated, &r.error) {
                (Some(g), _) => g.text.clone(),
                (None, Some(e)) => format!("<{e}>"),
                (None, None) => "-".to_string(),
            };
            let yn = |b: bool| if b { "yes" } else { "no" };
            let _ = writeln!(
                out,
                "{:>5} {:>2}  {:<6} {:<36} {:<36} {:<10} {:<5} {:<5} {}",
                r.utterance,
                r.mention,
                r.gold,
                r.annotated.text,
                generated,
                r.stage.map_or("-".to_string(), |s| s.to_string()),
                yn(r.form_match),
                yn(r.exact_match),
                yn(r.round_trip)
            );
            push_trace(&mut out, &r.trace);
        }
        let n = self.total();
        let form = self.count(|r| r.form_match);
        let exact = self.count(|r| r.exact_match);
        let rt = self.count(|r| r.round_trip);
        let _ = writeln!(
            out,
            "form-class match: {form}/{n} ({:.1}%); exact match: {exact}/{n} ({:.1}%); round-trip: {rt}/{n} ({:.1}%)",
            100.0 * rate(form, n),
            100.0 * rate(exact, n),
            100.0 * rate(rt, n)
        );
        out
    }

    pub fn render_records(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            summary: &'a str,
            corpus: &'a str,
            total: usize,
            form_match: usize,
            exact_match: usize,
            round_trip: usize,
        }
        jsonl(
            &self.records,
            &Summary {
                summary: "generate",
                corpus: &self.corpus,
                total: self.total(),
                form_match: self.count(|r| r.form_match),
                exact_match: self.count(|r| r.exact_match),
                round_trip: self.count(|r| r.round_trip),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassifyReport {
    pub corpus: String,
    pub records: Vec<ClassifiedMention>,
}

pub fn run_classify(corpus: &Corpus) -> Result<ClassifyReport, RunError> {
    let mut records = Vec::new();
    corpus.replay(|u, model| records.extend(classify_utterance(u, model)))?;
    Ok(ClassifyReport {
        corpus: corpus.name.clone(),
        records,
    })
}

impl ClassifyReport {
    pub fn stats(&self) -> CorpusStats {
        corpus_stats(&self.records)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.corpus);
        let _ = writeln!(
            out,
            "{:>5} {:>2}  {:<36} {:<8} {:<16} {:<5} {:<5} {:<5} sort",
            "utt", "m", "surface", "form", "label", "adeq", "effic", "incr"
        );
        let b = |x: bool| if x { "+" } else { "-" };
        for r in &self.records {
            let sort = match (&r.sort, r.potentially_overspecified) {
                (Some(s), _) => format!("{} ({} segment)", s.category, s.antecedent_segment),
                (None, true) => "over-determined".to_string(),
                (None, false) => String::new(),
            };
            let _ = writeln!(
                out,
                "{:>5} {:>2}  {:<36} {:<8} {:<16} {:<5} {:<5} {:<5} {}",
                r.utterance,
                r.mention,
                r.surface,
                r.form.to_string(),
                r.label.label.to_string(),
                b(r.label.adequate),
                r.label.efficient.map_or("n/a", b),
                b(r.label.increasing),
                sort
            );
        }
        out
    }

    pub fn render_records(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            summary: &'a str,
            corpus: &'a str,
            stats: CorpusStats,
        }
        jsonl(
            &self.records,
            &Summary {
                summary: "classify",
                corpus: &self.corpus,
                stats: self.stats(),
            },
        )
    }
}

/// Classifies each corpus independently (in parallel when enabled) and
/// merges the tables in input order.
pub fn run_stats(corpora: &[Corpus]) -> Result<CorpusStats, RunError> {
    let parts = batch::map(corpora, run_classify);
    let mut total = CorpusStats::default();
    for p in parts {
        total = total.merge(&p?.stats());
    }
    Ok(total)
}

fn cell(count: u32, structural_zero: bool) -> String {
    if structural_zero {
        "-".to_string()
    } else {
        count.to_string()
    }
}

fn pct(count: u32, whole: u32, structural_zero: bool) -> String {
    if structural_zero || whole == 0 {
        "-".to_string()
    } else {
        format!("{}%", percent(count, whole))
    }
}

/// Table of potentially over-specified NPs: counts and row percentages by
/// antecedent segment and category, then totals and rates.
pub fn render_stats_table(stats: &CorpusStats) -> String {
    let mut out = String::new();
    let header = ["Well-specified", "Segment onset", "Atten. shift", "Other", "Total"];
    let _ = write!(out, "{:<12}", "Antecedent");
    for h in header {
        let _ = write!(out, "{h:>16}");
    }
    out.push('\n');
    let rows: [(&str, [u32; 4]); 3] = [
        ("Same", stats.cells[0]),
        ("Prev", stats.cells[1]),
        ("Totals", stats.column_totals()),
    ];
    for (r, (name, counts)) in rows.iter().enumerate() {
        let total: u32 = counts.iter().sum();
        // An onset utterance cannot have an antecedent in its own segment.
        let blank = |c: usize| r == 0 && SortCategory::ALL[c] == SortCategory::SegmentOnset && counts[c] == 0;
        let _ = write!(out, "{name:<12}");
        for (c, n) in counts.iter().enumerate() {
            let _ = write!(out, "{:>16}", cell(*n, blank(c)));
        }
        let _ = writeln!(out, "{total:>16}");
        let _ = write!(out, "{:<12}", "%");
        for (c, n) in counts.iter().enumerate() {
            let _ = write!(out, "{:>16}", pct(*n, total, blank(c)));
        }
        let _ = writeln!(out, "{:>16}", pct(total, total, false));
    }
    let n = stats.anaphoric_total();
    let _ = writeln!(
        out,
        "discourse-anaphoric NPs: {n} (phrasal {}, pronoun {}, zero {})",
        stats.phrasal, stats.pronoun, stats.zero
    );
    let over = stats.over_specified();
    let share = if n == 0 { 0.0 } else { 100.0 * over as f64 / n as f64 };
    let _ = writeln!(out, "over-specified: {over}/{n} ({share:.1}%)");
    let _ = writeln!(out, "over-determined: {}/{n}", stats.over_determined);
    out
}

pub fn render_stats_records(stats: &CorpusStats) -> String {
    #[derive(Serialize)]
    struct Row {
        antecedent: &'static str,
        category: SortCategory,
        count: u32,
        percent: u32,
    }
    let mut rows = Vec::new();
    for (r, name) in ["same", "previous"].into_iter().enumerate() {
        let total = stats.row_total(r);
        for (c, cat) in SortCategory::ALL.into_iter().enumerate() {
            let count = stats.cells[r][c];
            rows.push(Row {
                antecedent: name,
                category: cat,
                count,
                percent: percent(count, total),
            });
        }
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        summary: &'a str,
        stats: &'a CorpusStats,
        total: u32,
        over_specified: u32,
    }
    jsonl(
        &rows,
        &Summary {
            summary: "stats",
            stats,
            total: stats.total(),
            over_specified: stats.over_specified(),
        },
    )
}

/// Result of the `power` verb.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PowerRow {
    pub pair: AttributeValue,
    #[serde(serialize_with = "ser_ratio")]
    pub power: Power,
    pub true_of: usize,
    pub context: usize,
}

fn ser_ratio<S: serde::Serializer>(r: &Power, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Discriminatory power of one pair over the context.
pub fn run_power_pair(table: &AttributeTable, pair: &AttributeValue) -> Result<PowerRow, DistinguishError> {
    let ctx = Context::new(table.ids().cloned())?;
    Ok(PowerRow {
        pair: pair.clone(),
        power: discriminatory_power(pair, &ctx, table),
        true_of: ctx.universe().iter().filter(|e| {
            use crate::distinguish::KnowledgeBase;
            table.has(e, pair)
        }).count(),
        context: ctx.size(),
    })
}

/// Power of every pair of `target` over the context.
pub fn run_power_table(table: &AttributeTable, target: &EntityId) -> Result<Vec<PowerRow>, DistinguishError> {
    let ctx = Context::new(table.ids().cloned())?;
    if !ctx.contains(target) {
        return Err(DistinguishError::TargetNotInContext(target.clone()));
    }
    Ok(power_table(target, &ctx, table)
        .into_iter()
        .map(|(pair, power)| {
            let n = run_power_pair(table, &pair).map(|r| r.true_of).unwrap_or(0);
            PowerRow {
                pair,
                power,
                true_of: n,
                context: ctx.size(),
            }
        })
        .collect())
}

pub fn render_power_table(rows: &[PowerRow]) -> String {
    let mut out = format!("{:<28} {:>8} {:>4} {:>4}\n", "pair", "F", "n", "N");
    for r in rows {
        let _ = writeln!(out, "{:<28} {:>8} {:>4} {:>4}", r.pair.to_string(), r.power.to_string(), r.true_of, r.context);
    }
    out
}
