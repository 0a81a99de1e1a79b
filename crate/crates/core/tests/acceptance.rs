//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion
//! and fails if any criterion fails.

mod support;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regcheck::checker::{prepare, read_report_json, run_check_source, CheckConfig, ComplianceReport, Stage};
use regcheck::dsl::{compile_rule, execute, ExecContext, RulePack};
use regcheck::geom::{intersects, separation, Transform};
use regcheck::graph::{Literal, PatternTerm, Term, TriplePattern};
use regcheck::infer::{apply_aggregates, apply_fixpoint, materialize, RuleSet};
use regcheck::vocab;
use support::{fixture, fixture_path, inst, montecarlo, naive, FIXTURES};

const USE_CASE_LIMIT: Duration = Duration::from_secs(1);
const SCALE_LIMIT: Duration = Duration::from_secs(30);
const MEMORY_LIMIT_KB: u64 = 1024 * 1024;
const GEOMETRY_PAIRS: usize = 1000;
const MIN_SEPARATION: f64 = 0.002;
const RIGID_TOL: f64 = 1e-6;
const MAX_FIXTURE_TRIPLES: usize = 500;
const SCALE_STOREYS: usize = 20;
const SCALE_PER_STOREY: usize = 500;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cli_check(model: &Path, extra: &[&str], out: &Path) -> Result<(ComplianceReport, Duration), String> {
    let started = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_regcheck"))
        .arg("check")
        .arg(model)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let code = status.status.code().unwrap_or(-1);
    if code == 2 {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    let bytes = std::fs::read(out).map_err(|e| e.to_string())?;
    let report = read_report_json(&bytes).map_err(|e| e.to_string())?;
    let expected_code = if report.findings.is_empty() { 0 } else { 1 };
    ensure(code == expected_code, format!("exit code {code}, expected {expected_code}"))?;
    Ok((report, elapsed))
}

fn wc_use_case(dir: &Path) -> Outcome {
    let out = dir.join("wc.json");
    let (r, t1) = cli_check(&fixture_path("bathroom"), &[], &out)?;
    let wc: Vec<_> = r.findings_for("acc-wc-freespace-01").collect();
    ensure(wc.len() == 1, format!("{} WC findings", wc.len()))?;
    let rail = inst(64);
    ensure(
        wc[0].explanation.iter().any(|e| e.iri == rail),
        "handrail missing from the explanation",
    )?;
    let (clear, t2) = cli_check(&fixture_path("bathroom_clear"), &[], &out)?;
    let n = clear.findings_for("acc-wc-freespace-01").count();
    ensure(n == 0, format!("{n} findings after moving the rail"))?;
    ensure(t1 < USE_CASE_LIMIT && t2 < USE_CASE_LIMIT, format!("took {t1:?} and {t2:?}"))?;
    Ok(format!("1 finding with the rail explained, 0 when clear ({t1:.0?}, {t2:.0?})"))
}

fn fire_use_case(dir: &Path) -> Outcome {
    let started = Instant::now();
    let config = CheckConfig {
        ground_datum: Some(0.0),
        ..CheckConfig::default()
    };
    let p = prepare(&fixture("fire"), &config, Stage::Inferred).map_err(|e| e.to_string())?;
    let heights = p.graph.objects(&Term::Iri(inst(20).parse_iri()), &vocab::reg("fireHeight"));
    ensure(heights.len() == 1, format!("{} fireHeight values", heights.len()))?;
    let h = heights[0].as_literal().and_then(Literal::as_f64);
    ensure(h == Some(9.0), format!("fireHeight {h:?}"))?;
    let out = dir.join("fire.json");
    let (r, t) = cli_check(&fixture_path("fire"), &["--ground-datum", "0"], &out)?;
    let flagged: Vec<&str> = r.findings_for("fire-structure-01").map(|f| f.iri.as_str()).collect();
    ensure(flagged == [inst(34).as_str()], format!("flagged {flagged:?}"))?;
    let total = started.elapsed();
    ensure(total < USE_CASE_LIMIT, format!("took {total:?}"))?;
    Ok(format!("fireHeight 9.0, column flagged, beam not ({t:.0?})"))
}

trait ParseIri {
    fn parse_iri(&self) -> regcheck::graph::Iri;
}

impl ParseIri for String {
    fn parse_iri(&self) -> regcheck::graph::Iri {
        regcheck::graph::Iri::new(self).unwrap()
    }
}

fn classification_shortcut() -> Outcome {
    let p = prepare(&fixture("classification"), &CheckConfig::default(), Stage::Lifted).map_err(|e| e.to_string())?;
    let chain = [22u64, 21, 20];
    let mut chain_triples = 0;
    for id in chain {
        let s = Term::Iri(inst(id).parse_iri());
        chain_triples += p
            .graph
            .triples()
            .filter(|t| Term::from(t.subject.clone()) == s)
            .count();
    }
    ensure(chain_triples >= 10, format!("chain has only {chain_triples} triples"))?;
    let mut g = p.graph.clone();
    materialize(&mut g, &RuleSet::builtin()).map_err(|e| e.to_string())?;
    let has = vocab::reg("hasClassification");
    for obj in [10u64, 11] {
        let n = g.objects(&Term::Iri(inst(obj).parse_iri()), &has).len();
        ensure(n == 1, format!("#{obj} has {n} classification triples"))?;
    }
    let all = g.match_pattern(&TriplePattern::new(PatternTerm::var("o"), has, PatternTerm::var("c")));
    ensure(all.len() == 2, format!("{} classification triples in total", all.len()))?;
    Ok(format!("{chain_triples}-triple chain -> 1 triple per classified object"))
}

fn geometry_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pairs = 0;
    let mut overlapping = 0;
    while pairs < GEOMETRY_PAIRS {
        let a = montecarlo::random_obb(&mut rng, 1.5);
        let b = montecarlo::random_obb(&mut rng, 1.5);
        let s = separation(&a, &b);
        if s.abs() <= MIN_SEPARATION {
            continue;
        }
        pairs += 1;
        let sat = intersects(&a, &b);
        overlapping += sat as usize;
        ensure(
            sat == montecarlo::overlaps(&a, &b, &mut rng),
            format!("pair {pairs}: SAT says {sat}, sampling disagrees"),
        )?;
        ensure(intersects(&b, &a) == sat, format!("pair {pairs}: not symmetric"))?;
        let m = Transform::new(
            montecarlo::random_rotation(&mut rng),
            Vector3::new(
                rand::Rng::random_range(&mut rng, -10.0..10.0),
                rand::Rng::random_range(&mut rng, -10.0..10.0),
                rand::Rng::random_range(&mut rng, -10.0..10.0),
            ),
        );
        let (ma, mb) = (a.transformed(&m).unwrap(), b.transformed(&m).unwrap());
        let moved = separation(&ma, &mb);
        ensure(
            (moved - s).abs() <= RIGID_TOL && intersects(&ma, &mb) == sat,
            format!("pair {pairs}: separation {s} became {moved} after a rigid motion"),
        )?;
    }
    Ok(format!("{pairs} pairs agree ({overlapping} overlapping)"))
}

fn executor_oracle() -> Outcome {
    let pack = RulePack::builtin_default();
    let mut runs = 0;
    for name in FIXTURES {
        let p = support::prepared(name);
        ensure(
            p.graph.count() <= MAX_FIXTURE_TRIPLES,
            format!("{name} has {} triples", p.graph.count()),
        )?;
        let ctx = ExecContext::new(&p.graph, &p.geom, &pack.defaults);
        for rule in &pack.rules {
            let expected = naive::run(&rule.ast, &ctx);
            for variant in naive::pattern_permutations(&rule.ast) {
                let compiled = compile_rule(&variant, &pack.vocab).map_err(|e| e.to_string())?;
                let got = naive::outcome(&execute(&compiled.plan, &ctx));
                ensure(got == expected, format!("{name} / {} differs", rule.ast.id))?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} rule orderings across {} fixtures", FIXTURES.len()))
}

fn fixpoint_idempotence() -> Outcome {
    let rules = RuleSet::builtin();
    for name in FIXTURES {
        let p = prepare(&fixture(name), &CheckConfig::default(), Stage::Geometry).map_err(|e| e.to_string())?;
        let mut g = p.graph;
        materialize(&mut g, &rules).map_err(|e| e.to_string())?;
        let pruned_size = g.count();
        let again = apply_fixpoint(&mut g, &rules.rewrites).map_err(|e| e.to_string())?
            + apply_aggregates(&mut g, &rules.aggregates).map_err(|e| e.to_string())?;
        ensure(again == 0 && g.count() == pruned_size, format!("{name}: second pass added {again}"))?;
    }
    Ok(format!("second pass adds 0 on {} fixtures", FIXTURES.len()))
}

fn determinism(dir: &Path) -> Outcome {
    let mut outputs = Vec::new();
    for i in 0..2 {
        let json = dir.join(format!("det{i}.json"));
        let bcf = dir.join(format!("det{i}.bcfzip"));
        let bcf_arg = bcf.to_str().unwrap().to_string();
        cli_check(&fixture_path("bathroom"), &["--bcf", &bcf_arg], &json)?;
        outputs.push((std::fs::read(&json).unwrap(), std::fs::read(&bcf).unwrap()));
    }
    ensure(outputs[0].0 == outputs[1].0, "report.json differs")?;
    ensure(outputs[0].1 == outputs[1].1, "BCF archive differs")?;
    Ok(format!("{} JSON bytes and {} BCF bytes identical", outputs[0].0.len(), outputs[0].1.len()))
}

fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn scale() -> Outcome {
    let model = support::generate::synthetic(SCALE_STOREYS, SCALE_PER_STOREY);
    ensure(model.elements == 10_000, format!("{} elements", model.elements))?;
    let pack = RulePack::builtin_default();
    let started = Instant::now();
    let report = run_check_source("synthetic.ifc", &model.text, &pack, &CheckConfig::default())
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let wc: Vec<String> = report.findings_for("acc-wc-freespace-01").map(|f| f.guid.clone()).collect();
    ensure(wc == model.blocked_wcs, format!("{} WC findings, expected {}", wc.len(), model.blocked_wcs.len()))?;
    let mut fire: Vec<String> = report.findings_for("fire-structure-01").map(|f| f.guid.clone()).collect();
    fire.sort();
    ensure(fire == model.weak_columns, format!("{} fire findings, expected {}", fire.len(), model.weak_columns.len()))?;
    ensure(elapsed < SCALE_LIMIT, format!("took {elapsed:?}"))?;
    let rss = peak_rss_kb();
    if let Some(kb) = rss {
        ensure(kb < MEMORY_LIMIT_KB, format!("peak RSS {kb} kB"))?;
    }
    Ok(format!(
        "10000 elements in {elapsed:.1?}, peak RSS {}, {} findings",
        rss.map(|kb| format!("{} MB", kb / 1024)).unwrap_or_else(|| "unknown".into()),
        report.findings.len()
    ))
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 WC free-space use case", Box::new(|| wc_use_case(dir.path()))),
        ("2 fire safety use case", Box::new(|| fire_use_case(dir.path()))),
        ("3 classification shortcut", Box::new(classification_shortcut)),
        ("4 geometry oracle", Box::new(geometry_oracle)),
        ("5 executor oracle", Box::new(executor_oracle)),
        ("6 fixpoint idempotence", Box::new(fixpoint_idempotence)),
        ("7 determinism", Box::new(|| determinism(dir.path()))),
        ("8 engineering scale", Box::new(scale)),
    ];
    let mut failed = Vec::new();
    for (name, run) in &criteria {
        match run() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                println!("FAIL criterion {name}: {why}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
