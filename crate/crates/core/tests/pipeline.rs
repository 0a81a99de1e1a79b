mod support;

use std::collections::BTreeSet;
use std::io::{Cursor, Read};

use proptest::prelude::*;
use regcheck::checker::{
    check_prepared, prepare, run_check, run_check_source, write_bcf, write_report_json, CheckConfig, CheckError,
    ComplianceReport, ModelInfo, Stage,
};
use regcheck::dsl::RulePack;
use regcheck::graph::{natural_cmp, Iri, Term};
use regcheck::vocab;
use support::{fixture, fixture_path, inst, FIXTURES};

const WC: &str = "acc-wc-freespace-01";
const FIRE: &str = "fire-structure-01";

fn topics(list: &[&str]) -> CheckConfig {
    CheckConfig {
        topics: Some(list.iter().map(|s| s.to_string()).collect()),
        ..CheckConfig::default()
    }
}

fn check(name: &str, config: &CheckConfig) -> ComplianceReport {
    run_check(&fixture_path(name), &RulePack::builtin_default(), config).unwrap()
}

#[test]
fn bathroom_accessibility_only() {
    let r = check("bathroom", &topics(&["accessibility"]));
    assert_eq!(r.findings.len(), 1);
    assert_eq!(r.findings[0].rule, WC);
    assert_eq!(r.findings[0].guid, "1WcSeat000000000000001");
    assert_eq!(r.rules.len(), 1, "fire rules must not run");
    assert_eq!(r.rules[0].id, WC);
    assert_eq!(r.rules[0].candidates, 1);
    let roles: Vec<(&str, &str)> = r.findings[0]
        .explanation
        .iter()
        .map(|e| (e.role.as_str(), e.guid.as_str()))
        .collect();
    assert_eq!(
        roles,
        [
            ("intersects FreeSpace", "2WallPart0000000000001"),
            ("intersects FreeSpace", "3Rail00000000000000001")
        ]
    );
    assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
}

#[test]
fn fire_fixture_flags_column() {
    let r = check("fire", &CheckConfig::default());
    let fire: Vec<_> = r.findings_for(FIRE).collect();
    assert_eq!(fire.len(), 1);
    assert_eq!(fire[0].iri, inst(34));
    assert_eq!(fire[0].guid, "5Col00000000000000001");
    let stats = r.rules.iter().find(|s| s.id == FIRE).unwrap();
    assert_eq!((stats.candidates, stats.findings), (2, 1));
}

#[test]
fn raised_ground_datum_lowers_the_threshold() {
    // 9 m over a 1 m datum is 8 m, the top of the 30 minute band.
    let config = CheckConfig {
        ground_datum: Some(1.0),
        ..CheckConfig::default()
    };
    assert_eq!(check("fire", &config).findings_for(FIRE).count(), 0);
}

#[test]
fn empty_model_lists_every_rule() {
    let src = "ISO-10303-21;HEADER;FILE_SCHEMA(('IFC2X3'));ENDSEC;DATA;\n#1=IFCSIUNIT(*,.LENGTHUNIT.,$,.METRE.);\nENDSEC;END-ISO-10303-21;";
    let r = run_check_source("empty.ifc", src, &RulePack::builtin_default(), &CheckConfig::default()).unwrap();
    assert!(r.findings.is_empty());
    let ids: Vec<&str> = r.rules.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids, [WC, FIRE]);
    assert!(r.rules.iter().all(|s| s.candidates == 0 && s.findings == 0 && s.error.is_none()));
    assert_eq!(write_bcf(&r).len(), write_bcf(&r).len());
}

#[test]
fn unknown_topic_is_rejected() {
    let err = run_check(&fixture_path("bathroom"), &RulePack::builtin_default(), &topics(&["acoustics"])).unwrap_err();
    assert!(matches!(err, CheckError::Topics(t) if t == "acoustics"));
}

#[test]
fn parse_failure_is_an_error() {
    let err = run_check_source("bad.ifc", "ISO-10303-21;\nDATA;\n#1=IFCWALL(", &RulePack::builtin_default(), &CheckConfig::default())
        .unwrap_err();
    assert!(matches!(err, CheckError::Parse(_)));
    let missing = run_check(
        std::path::Path::new("/nonexistent/model.ifc"),
        &RulePack::builtin_default(),
        &CheckConfig::default(),
    );
    assert!(matches!(missing, Err(CheckError::Io { .. })));
}

#[test]
fn failing_rule_does_not_affect_others() {
    let manifest = r#"{"name":"broken","version":"0.0.1","topics":["accessibility","fire_safety"]}"#;
    let pack = RulePack::from_sources(
        manifest,
        &[
            ("rules/a.rule".into(), regcheck::dsl::WC_RULE.into()),
            ("rules/f.rule".into(), regcheck::dsl::FIRE_RULE.into()),
        ],
    )
    .unwrap();
    let r = run_check(&fixture_path("fire"), &pack, &CheckConfig::default()).unwrap();
    let fire = r.rules.iter().find(|s| s.id == FIRE).unwrap();
    assert!(fire.error.as_deref().unwrap_or("").contains("fire threshold"), "{fire:?}");
    assert_eq!(fire.findings, 0);
    assert!(r.diagnostics.iter().any(|d| d.contains(FIRE)));
    let b = run_check(&fixture_path("bathroom"), &pack, &CheckConfig::default()).unwrap();
    assert_eq!(b.findings_for(WC).count(), 1);
}

#[test]
fn missing_guid_is_reported() {
    let src = fixture("bathroom").replace("IFCFLOWTERMINAL('1WcSeat000000000000001'", "IFCFLOWTERMINAL($");
    let r = run_check_source("noguid.ifc", &src, &RulePack::builtin_default(), &CheckConfig::default()).unwrap();
    assert_eq!(r.findings.len(), 1);
    assert_eq!(r.findings[0].guid, "");
    assert!(r.findings[0].message.contains("WC lacks"));
    assert!(r.diagnostics.iter().any(|d| d.contains("no GlobalId")));
    let bcf = write_bcf(&r);
    let mut zip = zip::ZipArchive::new(Cursor::new(bcf)).unwrap();
    assert_eq!(zip.len(), 2);
    let mut markup = String::new();
    zip.by_index(1).unwrap().read_to_string(&mut markup).unwrap();
    assert!(!markup.contains("IfcGuid"));
}

#[test]
fn bcf_lists_target_and_obstructions() {
    let r = check("bathroom", &CheckConfig::default());
    let mut zip = zip::ZipArchive::new(Cursor::new(write_bcf(&r))).unwrap();
    let names: Vec<String> = (0..zip.len()).map(|i| zip.by_index(i).unwrap().name().to_string()).collect();
    assert_eq!(names.len(), 2);
    assert_eq!(names[0], "bcf.version");
    assert!(names[1].ends_with("/markup.bcf"));
    let mut markup = String::new();
    zip.by_index(1).unwrap().read_to_string(&mut markup).unwrap();
    for guid in ["1WcSeat000000000000001", "2WallPart0000000000001", "3Rail00000000000000001"] {
        assert!(markup.contains(&format!("IfcGuid=\"{guid}\"")), "{guid}");
    }
    assert!(markup.contains(&format!("<Title>{WC}</Title>")));
}

#[test]
fn stage_sizes_grow_then_prune_shrinks() {
    for name in FIXTURES {
        let p = prepare(&fixture(name), &CheckConfig::default(), Stage::Inferred).unwrap();
        let s = p.sizes;
        assert!(s.lifted < s.inferred, "{name}: {s:?}");
        assert!(s.pruned < s.inferred, "{name}: ownerHistory links must be pruned, {s:?}");
        if name != "classification" {
            assert!(s.lifted < s.geometric && s.geometric < s.inferred, "{name}: {s:?}");
        }
    }
}

#[test]
fn report_invariants_hold_on_fixtures() {
    let pack = RulePack::builtin_default();
    let ids: BTreeSet<&str> = pack.rules.iter().map(|r| r.ast.id.as_str()).collect();
    for name in FIXTURES {
        let source = fixture(name);
        let p = prepare(&source, &CheckConfig::default(), Stage::Inferred).unwrap();
        let model = ModelInfo {
            path: name.into(),
            hash: String::new(),
        };
        let r = check_prepared(&p, model, &pack, &CheckConfig::default()).unwrap();
        for pair in r.findings.windows(2) {
            let order = pair[0].rule.cmp(&pair[1].rule).then_with(|| natural_cmp(&pair[0].iri, &pair[1].iri));
            assert!(order.is_lt(), "{name}: findings out of order");
        }
        for f in &r.findings {
            assert!(ids.contains(f.rule.as_str()));
            assert!(!f.guid.is_empty() && source.contains(&format!("'{}'", f.guid)), "{name}: {}", f.guid);
            for e in &f.explanation {
                let iri = Term::Iri(Iri::new(&e.iri).unwrap());
                assert!(!p.graph.objects(&iri, &vocab::rdf_type()).is_empty(), "{name}: {} untyped", e.iri);
            }
        }
    }
}

#[test]
fn runs_are_byte_identical() {
    let pack = RulePack::builtin_default();
    for name in FIXTURES {
        let sequential = CheckConfig {
            parallel: false,
            ..CheckConfig::default()
        };
        let a = run_check(&fixture_path(name), &pack, &CheckConfig::default()).unwrap();
        let b = run_check(&fixture_path(name), &pack, &CheckConfig::default()).unwrap();
        let c = run_check(&fixture_path(name), &pack, &sequential).unwrap();
        assert_eq!(write_report_json(&a), write_report_json(&b));
        assert_eq!(write_report_json(&a), write_report_json(&c));
        assert_eq!(write_bcf(&a), write_bcf(&b));
    }
}

#[test]
fn timings_are_recorded_when_asked() {
    let config = CheckConfig {
        deterministic: false,
        ..CheckConfig::default()
    };
    let r = check("bathroom", &config);
    assert_eq!(r.rules.len(), 2);
    let r = check("bathroom", &CheckConfig::default());
    assert!(r.rules.iter().all(|s| s.ms == 0));
}

#[test]
fn model_hash_is_sha256_of_the_bytes() {
    let r = check("bathroom", &CheckConfig::default());
    assert!(r.model.hash.starts_with("sha256:"));
    assert_eq!(r.model.hash.len(), "sha256:".len() + 64);
    let other = check("bathroom_clear", &CheckConfig::default());
    assert_ne!(r.model.hash, other.model.hash);
}

#[test]
fn lift_config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lift.json");
    // Without the fire property mapped, no element has a duration to check.
    std::fs::write(
        &path,
        r#"{"property_map":[{"pset":"*","prop":"LoadBearing","predicate":"ifc:loadBearing"}]}"#,
    )
    .unwrap();
    let config = CheckConfig {
        lift_config: Some(path),
        ..CheckConfig::default()
    };
    let r = check("fire", &config);
    assert_eq!(r.findings_for(FIRE).count(), 0);
    let stats = r.rules.iter().find(|s| s.id == FIRE).unwrap();
    assert_eq!(stats.candidates, 2, "load-bearing elements are still candidates");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn topic_filter_equals_filtered_full_run(fixture_idx in 0..FIXTURES.len(), mask in 0u8..4) {
        let name = FIXTURES[fixture_idx];
        let all = ["accessibility", "fire_safety"];
        let chosen: Vec<&str> = all.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, t)| *t).collect();
        let full = check(name, &CheckConfig::default());
        let part = check(name, &topics(&chosen));
        let expected: Vec<_> = full.findings.iter().filter(|f| chosen.contains(&f.topic.as_str())).cloned().collect();
        prop_assert_eq!(&part.findings, &expected);
        let ran: Vec<&str> = part.rules.iter().map(|r| r.topic.as_str()).collect();
        prop_assert!(ran.iter().all(|t| chosen.contains(t)));
    }
}
