//! The JSON report.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub path: String,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    pub id: String,
    pub topic: String,
    pub candidates: usize,
    pub findings: usize,
    pub ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationEntry {
    pub role: String,
    pub iri: String,
    pub guid: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub rule: String,
    pub topic: String,
    pub severity: String,
    pub guid: String,
    pub iri: String,
    pub message: String,
    pub explanation: Vec<ExplanationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub model: ModelInfo,
    pub pack: PackInfo,
    pub rules: Vec<RuleStats>,
    pub findings: Vec<Finding>,
    pub diagnostics: Vec<String>,
}

impl ComplianceReport {
    pub fn findings_for<'a>(&'a self, rule: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| f.rule == rule)
    }
}

/// Pretty-printed UTF-8 JSON with a trailing newline. Key order follows
/// the struct definitions, so equal reports give equal bytes.
pub fn write_report_json(report: &ComplianceReport) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn read_report_json(bytes: &[u8]) -> Result<ComplianceReport, serde_json::Error> {
    serde_json::from_slice(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> ComplianceReport {
        ComplianceReport {
            model: ModelInfo {
                path: "m.ifc".into(),
                hash: "sha256:00".into(),
            },
            pack: PackInfo {
                name: "p".into(),
                version: "1".into(),
            },
            rules: vec![],
            findings: vec![],
            diagnostics: vec![],
        }
    }

    #[test]
    fn empty_report_has_empty_findings() {
        let text = String::from_utf8(write_report_json(&empty())).unwrap();
        assert!(text.contains("\"findings\": []"));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
    }

    #[test]
    fn one_finding_round_trips() {
        let mut r = empty();
        r.findings.push(Finding {
            rule: "r".into(),
            topic: "t".into(),
            severity: "error".into(),
            guid: "G1".into(),
            iri: "http://example.org/regcheck/inst/1".into(),
            message: "m".into(),
            explanation: vec![ExplanationEntry {
                role: "intersects FreeSpace".into(),
                iri: "http://example.org/regcheck/inst/2".into(),
                guid: "G2".into(),
            }],
        });
        let bytes = write_report_json(&r);
        assert_eq!(bytes, write_report_json(&r));
        let back = read_report_json(&bytes).unwrap();
        assert_eq!(back, r);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["findings"].as_array().unwrap().len(), 1);
        assert_eq!(v["findings"][0]["guid"], "G1");
        assert_eq!(v["findings"][0]["explanation"][0]["guid"], "G2");
    }
}
