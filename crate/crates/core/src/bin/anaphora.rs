use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use anaphora::corpus::{parse_corpus, Corpus};
use anaphora::distinguish::AttributeTable;
use anaphora::model::{AttributeValue, EntityId};
use anaphora::report::{self, Options, RunError};

const USAGE: u8 = 2;
const PARSE: u8 = 3;
const ENGINE: u8 = 4;

#[derive(Parser)]
#[command(name = "anaphora", version, about = "Generate, resolve and classify discourse-anaphoric NPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Records,
}

#[derive(Args)]
struct Common {
    /// Corpus files; reads stdin when none are given.
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Include the per-mention decision trace.
    #[arg(long)]
    trace: bool,
    /// Fail on the first mention the engine cannot handle.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve each anaphoric mention with its gold id hidden.
    Resolve(Common),
    /// Generate a form for each anaphoric mention and compare with the annotation.
    Generate(Common),
    /// Label each anaphoric mention by informativeness.
    Classify(Common),
    /// Over-specification table pooled over all inputs.
    Stats(Common),
    /// Discriminatory power over an ad-hoc context.
    Power {
        /// Entity and its pairs, as ID=attr:value,attr:value. Repeatable.
        #[arg(long = "entity", required = true)]
        entities: Vec<String>,
        /// Report the power of this pair.
        #[arg(long, conflicts_with = "target", required_unless_present = "target")]
        pair: Option<String>,
        /// Report the power of every pair of this entity.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("anaphora: {msg}");
    ExitCode::from(code)
}

fn load(files: &[PathBuf]) -> Result<Vec<Corpus>, ExitCode> {
    let mut texts = Vec::new();
    if files.is_empty() {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| fail(PARSE, format!("stdin: {e}")))?;
        texts.push(("<stdin>".to_string(), s));
    }
    for f in files {
        let s = std::fs::read_to_string(f).map_err(|e| fail(PARSE, format!("{}: {e}", f.display())))?;
        texts.push((f.display().to_string(), s));
    }
    texts
        .into_iter()
        .map(|(name, s)| parse_corpus(&s).map_err(|e| fail(PARSE, format!("{name}: {e}"))))
        .collect()
}

fn run_error(e: RunError) -> ExitCode {
    match e {
        RunError::Corpus(e) => fail(PARSE, e),
        RunError::Engine(e) => fail(ENGINE, e),
    }
}

fn parse_entity(spec: &str) -> Result<(EntityId, Vec<AttributeValue>), String> {
    let (id, pairs) = spec
        .split_once('=')
        .ok_or_else(|| format!("malformed entity `{spec}` (expected ID=attr:value,...)"))?;
    if id.trim().is_empty() {
        return Err(format!("malformed entity `{spec}`: empty id"));
    }
    let pairs = pairs
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<AttributeValue>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((EntityId::new(id.trim()), pairs))
}

fn power(entities: &[String], pair: Option<&str>, target: Option<&str>, format: Format) -> ExitCode {
    let mut table = AttributeTable::default();
    for spec in entities {
        match parse_entity(spec) {
            Ok((id, pairs)) => table.insert(id, pairs),
            Err(e) => return fail(USAGE, e),
        }
    }
    let rows = match (pair, target) {
        (Some(p), _) => {
            let p = match p.parse::<AttributeValue>() {
                Ok(p) => p,
                Err(e) => return fail(USAGE, e),
            };
            report::run_power_pair(&table, &p).map(|r| vec![r])
        }
        (None, Some(t)) => report::run_power_table(&table, &EntityId::new(t)),
        (None, None) => unreachable!("clap requires --pair or --target"),
    };
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return fail(ENGINE, e),
    };
    match format {
        Format::Table => print!("{}", report::render_power_table(&rows)),
        Format::Records => {
            for r in &rows {
                println!("{}", serde_json::to_string(r).expect("row serializes"));
            }
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, common) = match cli.command {
        Command::Power {
            entities,
            pair,
            target,
            format,
        } => return power(&entities, pair.as_deref(), target.as_deref(), format),
        Command::Resolve(c) => ("resolve", c),
        Command::Generate(c) => ("generate", c),
        Command::Classify(c) => ("classify", c),
        Command::Stats(c) => ("stats", c),
    };
    let corpora = match load(&common.files) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let opts = Options {
        trace: common.trace,
        strict: common.strict,
    };
    let table = matches!(common.format, Format::Table);
    let mut out = String::new();
    let mut engine_failed = false;
    match verb {
        "stats" => match report::run_stats(&corpora) {
            Ok(s) if table => out = report::render_stats_table(&s),
            Ok(s) => out = report::render_stats_records(&s),
            Err(e) => return run_error(e),
        },
        _ => {
            for c in &corpora {
                let rendered = match verb {
                    "resolve" => report::run_resolve(c, opts).map(|r| {
                        engine_failed |= r.records.iter().any(|x| x.error.is_some());
                        if table { r.render_table() } else { r.render_records() }
                    }),
                    "generate" => report::run_generate(c, opts).map(|r| {
                        engine_failed |= r.records.iter().any(|x| x.error.is_some());
                        if table { r.render_table() } else { r.render_records() }
                    }),
                    _ => report::run_classify(c).map(|r| if table { r.render_table() } else { r.render_records() }),
                };
                match rendered {
                    Ok(s) => out.push_str(&s),
                    Err(e) => return run_error(e),
                }
            }
        }
    }
    print!("{out}");
    if engine_failed && opts.strict {
        return ExitCode::from(ENGINE);
    }
    ExitCode::SUCCESS
}
