//! End-to-end checking: model in, findings out.

mod bcf;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use bcf::{topic_uuid, write_bcf, BCF_VERSION};
pub use report::{
    read_report_json, write_report_json, ComplianceReport, ExplanationEntry, Finding, ModelInfo, PackInfo, RuleStats,
};

use crate::dsl::{execute, CompiledRule, ExecContext, RulePack};
use crate::geom::{build_index, emit_triples, GeomIndex};
use crate::graph::{natural_cmp, Graph, Iri, Term};
use crate::infer::{materialize, InferError, InferStats, RuleSet};
use crate::lift::{extract_units, lift_model, LiftConfig, LiftError, UnitScale};
use crate::step::{parse_step, StepError, StepFile};
use crate::vocab;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model does not parse: {0}")]
    Parse(#[from] StepError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error("topics not in the pack: {0}")]
    Topics(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    /// Only rules with these topics run. `None` runs everything.
    pub topics: Option<BTreeSet<String>>,
    pub ground_datum: Option<f64>,
    pub lift_config: Option<PathBuf>,
    /// Report zero runtimes so reports are byte-stable.
    pub deterministic: bool,
    /// Execute rules on the thread pool.
    pub parallel: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            topics: None,
            ground_datum: None,
            lift_config: None,
            deterministic: true,
            parallel: true,
        }
    }
}

/// Graph sizes after each stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageSizes {
    pub lifted: usize,
    pub geometric: usize,
    pub inferred: usize,
    pub pruned: usize,
}

/// How far [`prepare`] should go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Lifted,
    Geometry,
    Inferred,
}

/// A model carried through the pre-processing stages.
pub struct Prepared {
    pub file: StepFile,
    pub scale: UnitScale,
    pub graph: Graph,
    pub geom: GeomIndex,
    pub sizes: StageSizes,
    pub infer: InferStats,
    pub diagnostics: Vec<String>,
}

fn read_lift_config(config: &CheckConfig) -> Result<LiftConfig, CheckError> {
    match &config.lift_config {
        None => Ok(LiftConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CheckError::Io {
                path: p.clone(),
                source,
            })?;
            Ok(LiftConfig::from_json(&text)?)
        }
    }
}

/// Parses and pre-processes a model up to `stage`.
pub fn prepare(source: &str, config: &CheckConfig, stage: Stage) -> Result<Prepared, CheckError> {
    let file = parse_step(source)?;
    let lift_config = read_lift_config(config)?;
    let mut diagnostics: Vec<String> = file.warnings.iter().map(|w| format!("parse: {w}")).collect();
    let (scale, unit_warnings) = extract_units(&file);
    diagnostics.extend(unit_warnings.into_iter().map(|w| format!("units: {w}")));
    let lifted = lift_model(&file, scale, &lift_config);
    diagnostics.extend(lifted.warnings.into_iter().map(|w| format!("lift: {w}")));
    let mut graph = lifted.graph;
    let mut sizes = StageSizes {
        lifted: graph.count(),
        ..StageSizes::default()
    };
    let mut geom = GeomIndex::new();
    let mut infer = InferStats::default();
    if stage >= Stage::Geometry {
        geom = build_index(&file, &graph, scale);
        let type_of = |iri: &Iri| {
            graph
                .objects(&Term::Iri(iri.clone()), &vocab::rdf_type())
                .first()
                .and_then(|t| t.as_iri().map(|i| i.as_str().rsplit('#').next().unwrap_or("").to_string()))
                .unwrap_or_default()
        };
        let mut missing: Vec<String> = geom
            .missing()
            .iter()
            .map(|(iri, reason)| format!("geometry: {iri} ({}) has no box: {reason}", type_of(iri)))
            .collect();
        missing.sort_by(|a, b| natural_cmp(a, b));
        diagnostics.extend(missing);
        emit_triples(&geom, &mut graph);
        sizes.geometric = graph.count();
    }
    if stage >= Stage::Inferred {
        let params = config
            .ground_datum
            .map(|g| BTreeMap::from([("ground_datum".to_string(), g)]))
            .unwrap_or_default();
        let rules = RuleSet::builtin_with(&params)?;
        infer = materialize(&mut graph, &rules)?;
        sizes.inferred = sizes.geometric + infer.derived + infer.aggregated;
        sizes.pruned = graph.count();
    }
    Ok(Prepared {
        file,
        scale,
        graph,
        geom,
        sizes,
        infer,
        diagnostics,
    })
}

fn guid_of(graph: &Graph, iri: &Iri) -> Option<String> {
    graph
        .objects(&Term::Iri(iri.clone()), &vocab::ifc("globalId"))
        .into_iter()
        .find_map(|t| t.as_literal().map(|l| l.lexical().to_string()))
}

fn term_text(t: &Term) -> String {
    match t {
        Term::Iri(i) => i.as_str().to_string(),
        Term::Literal(l) => l.lexical().to_string(),
        Term::Blank(b) => format!("_:b{b}"),
    }
}

struct RuleRun {
    stats: RuleStats,
    findings: Vec<Finding>,
    diagnostics: Vec<String>,
}

fn run_rule(rule: &CompiledRule, ctx: &ExecContext<'_>, deterministic: bool) -> RuleRun {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| execute(&rule.plan, ctx)));
    let ms = if deterministic {
        0
    } else {
        started.elapsed().as_millis() as u64
    };
    let ast = &rule.ast;
    let mut stats = RuleStats {
        id: ast.id.clone(),
        topic: ast.topic.clone(),
        candidates: 0,
        findings: 0,
        ms,
        error: None,
    };
    let out = match outcome {
        Ok(out) => out,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "rule execution failed".to_string());
            stats.error = Some(msg);
            return RuleRun {
                stats,
                findings: Vec::new(),
                diagnostics: Vec::new(),
            };
        }
    };
    let mut diagnostics = out.diagnostics;
    let template = ast.message_template();
    let placeholder = format!("{{?{}}}", ast.target);
    let findings: Vec<Finding> = out
        .matches
        .into_iter()
        .map(|m| {
            let iri = term_text(&m.target);
            let guid = m.target.as_iri().and_then(|i| guid_of(ctx.graph, i)).unwrap_or_default();
            if guid.is_empty() {
                diagnostics.push(format!("rule '{}': target {iri} has no GlobalId", ast.id));
            }
            let label = if guid.is_empty() { iri.clone() } else { guid.clone() };
            Finding {
                rule: ast.id.clone(),
                topic: ast.topic.clone(),
                severity: ast.severity.clone(),
                guid,
                iri,
                message: template.replace(&placeholder, &label),
                explanation: m
                    .explanations
                    .into_iter()
                    .map(|(role, e)| ExplanationEntry {
                        role,
                        guid: guid_of(ctx.graph, &e).unwrap_or_default(),
                        iri: e.as_str().to_string(),
                    })
                    .collect(),
            }
        })
        .collect();
    stats.candidates = out.candidates;
    stats.error = out.errors.first().cloned();
    stats.findings = findings.len();
    RuleRun {
        stats,
        findings,
        diagnostics,
    }
}

/// Runs the pack's selected rules over an already prepared model.
pub fn check_prepared(
    prepared: &Prepared,
    model: ModelInfo,
    pack: &RulePack,
    config: &CheckConfig,
) -> Result<ComplianceReport, CheckError> {
    if let Some(topics) = &config.topics {
        let known: BTreeSet<&String> = pack.manifest.topics.iter().collect();
        let unknown: Vec<&str> = topics.iter().filter(|t| !known.contains(t)).map(String::as_str).collect();
        if !unknown.is_empty() {
            return Err(CheckError::Topics(unknown.join(", ")));
        }
    }
    let selected: Vec<&CompiledRule> = pack
        .rules
        .iter()
        .filter(|r| config.topics.as_ref().is_none_or(|t| t.contains(&r.ast.topic)))
        .collect();
    let ctx = ExecContext::new(&prepared.graph, &prepared.geom, &pack.defaults);
    let runs: Vec<RuleRun> = if config.parallel {
        selected.par_iter().map(|r| run_rule(r, &ctx, config.deterministic)).collect()
    } else {
        selected.iter().map(|r| run_rule(r, &ctx, config.deterministic)).collect()
    };

    let mut diagnostics = prepared.diagnostics.clone();
    diagnostics.extend(selected.iter().flat_map(|r| r.warnings.iter().map(|w| format!("pack: {w}"))));
    let mut rules = Vec::new();
    let mut findings = Vec::new();
    for run in runs {
        if let Some(err) = &run.stats.error {
            diagnostics.push(format!("rule '{}' failed: {err}", run.stats.id));
        }
        diagnostics.extend(run.diagnostics);
        rules.push(run.stats);
        findings.extend(run.findings);
    }
    rules.sort_by(|a, b| a.id.cmp(&b.id));
    findings.sort_by(|a, b| a.rule.cmp(&b.rule).then_with(|| natural_cmp(&a.iri, &b.iri)));
    Ok(ComplianceReport {
        model,
        pack: PackInfo {
            name: pack.manifest.name.clone(),
            version: pack.manifest.version.clone(),
        },
        rules,
        findings,
        diagnostics,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::from("sha256:");
    for b in digest.iter() {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Checks model text. `name` is what the report calls the model.
pub fn run_check_source(
    name: &str,
    source: &str,
    pack: &RulePack,
    config: &CheckConfig,
) -> Result<ComplianceReport, CheckError> {
    let prepared = prepare(source, config, Stage::Inferred)?;
    let model = ModelInfo {
        path: name.to_string(),
        hash: sha256_hex(source.as_bytes()),
    };
    check_prepared(&prepared, model, pack, config)
}

/// Reads, pre-processes and checks the model at `model`.
pub fn run_check(model: &Path, pack: &RulePack, config: &CheckConfig) -> Result<ComplianceReport, CheckError> {
    let source = std::fs::read_to_string(model).map_err(|source| CheckError::Io {
        path: model.to_path_buf(),
        source,
    })?;
    run_check_source(&model.display().to_string(), &source, pack, config)
}
