//! A minimal BCF 2.1 issue archive: one topic per finding, with the
//! target and explanation elements listed as components.

use uuid::Uuid;

use super::report::{ComplianceReport, Finding};
use crate::dsl::write_zip;

pub const BCF_VERSION: &str = "2.1";
const FIXED_DATE: &str = "1970-01-01T00:00:00Z";

/// Name-based UUID for a finding, stable across runs.
pub fn topic_uuid(finding: &Finding) -> Uuid {
    let key = if finding.guid.is_empty() { &finding.iri } else { &finding.guid };
    let ns = Uuid::new_v5(&Uuid::NAMESPACE_URL, b"http://example.org/regcheck/bcf");
    Uuid::new_v5(&ns, format!("{}\n{}", finding.rule, key).as_bytes())
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn version_xml() -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<Version VersionId=\"{BCF_VERSION}\">\n  <DetailedVersion>{BCF_VERSION}</DetailedVersion>\n</Version>\n"
    )
}

fn markup_xml(f: &Finding, id: &Uuid) -> String {
    let mut guids: Vec<&str> = Vec::new();
    if !f.guid.is_empty() {
        guids.push(&f.guid);
        for e in &f.explanation {
            if !e.guid.is_empty() && !guids.contains(&e.guid.as_str()) {
                guids.push(&e.guid);
            }
        }
    }
    let mut x = String::new();
    x.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<Markup>\n");
    x.push_str(&format!("  <Topic Guid=\"{id}\" TopicType=\"Issue\" TopicStatus=\"Open\">\n"));
    x.push_str(&format!("    <Title>{}</Title>\n", escape(&f.rule)));
    x.push_str(&format!("    <Priority>{}</Priority>\n", escape(&f.severity)));
    x.push_str(&format!("    <Labels>{}</Labels>\n", escape(&f.topic)));
    x.push_str(&format!("    <CreationDate>{FIXED_DATE}</CreationDate>\n"));
    x.push_str("    <CreationAuthor>regcheck</CreationAuthor>\n");
    x.push_str(&format!("    <Description>{}</Description>\n", escape(&f.message)));
    x.push_str("  </Topic>\n  <Viewpoints>\n    <Components>\n      <Selection>\n");
    for g in guids {
        x.push_str(&format!("        <Component IfcGuid=\"{}\"/>\n", escape(g)));
    }
    x.push_str("      </Selection>\n    </Components>\n  </Viewpoints>\n</Markup>\n");
    x
}

/// The archive bytes. A finding without a GlobalId gets an empty
/// component list; the checker reports that separately.
pub fn write_bcf(report: &ComplianceReport) -> Vec<u8> {
    let mut entries = vec![("bcf.version".to_string(), version_xml().into_bytes())];
    for f in &report.findings {
        let id = topic_uuid(f);
        entries.push((format!("{id}/markup.bcf"), markup_xml(f, &id).into_bytes()));
    }
    write_zip(&entries).expect("in-memory zip")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::report::{ExplanationEntry, ModelInfo, PackInfo};
    use std::io::{Cursor, Read};

    fn report(findings: Vec<Finding>) -> ComplianceReport {
        ComplianceReport {
            model: ModelInfo {
                path: "m".into(),
                hash: "h".into(),
            },
            pack: PackInfo {
                name: "p".into(),
                version: "1".into(),
            },
            rules: vec![],
            findings,
            diagnostics: vec![],
        }
    }

    fn finding(guid: &str) -> Finding {
        Finding {
            rule: "acc-wc-freespace-01".into(),
            topic: "accessibility".into(),
            severity: "error".into(),
            guid: guid.into(),
            iri: "http://example.org/regcheck/inst/40".into(),
            message: "WC lacks <space> & room".into(),
            explanation: vec![ExplanationEntry {
                role: "intersects FreeSpace".into(),
                iri: "http://example.org/regcheck/inst/60".into(),
                guid: "RAIL".into(),
            }],
        }
    }

    fn entries(bytes: &[u8]) -> Vec<(String, String)> {
        let mut zip = zip::ZipArchive::new(Cursor::new(bytes)).unwrap();
        (0..zip.len())
            .map(|i| {
                let mut f = zip.by_index(i).unwrap();
                let mut s = String::new();
                f.read_to_string(&mut s).unwrap();
                (f.name().to_string(), s)
            })
            .collect()
    }

    #[test]
    fn empty_report_has_only_version() {
        let e = entries(&write_bcf(&report(vec![])));
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].0, "bcf.version");
        assert!(e[0].1.contains("VersionId=\"2.1\""));
    }

    #[test]
    fn one_finding_two_entries() {
        let r = report(vec![finding("WC1")]);
        let bytes = write_bcf(&r);
        assert_eq!(bytes, write_bcf(&r));
        let e = entries(&bytes);
        assert_eq!(e.len(), 2);
        let id = topic_uuid(&r.findings[0]);
        assert_eq!(e[1].0, format!("{id}/markup.bcf"));
        assert!(e[1].1.contains("<Title>acc-wc-freespace-01</Title>"));
        assert!(e[1].1.contains("WC lacks &lt;space&gt; &amp; room"));
        assert!(e[1].1.contains("IfcGuid=\"WC1\""));
        assert!(e[1].1.contains("IfcGuid=\"RAIL\""));
    }

    #[test]
    fn missing_guid_gives_empty_components() {
        let e = entries(&write_bcf(&report(vec![finding("")])));
        assert!(!e[1].1.contains("IfcGuid"));
    }

    #[test]
    fn uuid_is_name_based() {
        let a = finding("WC1");
        assert_eq!(topic_uuid(&a), topic_uuid(&a.clone()));
        assert_ne!(topic_uuid(&a), topic_uuid(&finding("WC2")));
        assert_eq!(topic_uuid(&a).get_version_num(), 5);
    }
}
