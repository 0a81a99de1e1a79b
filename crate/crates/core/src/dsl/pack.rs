//! Rule packs: a ZIP with `manifest.json` and `rules/*.rule`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Cursor, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use super::parser::parse_rules;
use super::plan::{compile_rule, CompiledRule};
use super::DslError;
use crate::vocab::Vocabulary;

const DEFAULT_MANIFEST: &str = include_str!("../../assets/default-pack/manifest.json");
const DEFAULT_RULES: &[(&str, &str)] = &[
    (
        "rules/accessibility.rule",
        include_str!("../../assets/default-pack/rules/accessibility.rule"),
    ),
    (
        "rules/fire_safety.rule",
        include_str!("../../assets/default-pack/rules/fire_safety.rule"),
    ),
];

/// Numeric settings rules read at run time.
#[derive(Debug, Clone, PartialEq)]
pub struct PackDefaults {
    pub freespace_height_m: f64,
    pub adjacency_eps_m: f64,
    /// `(upper bound in meters, minutes)`; the last bound is infinite.
    pub fire_threshold_table: Vec<(f64, f64)>,
    /// Ignore elements whose top sits on a FreeSpace's base.
    pub floor_exemption: bool,
}

impl Default for PackDefaults {
    /// Engine defaults. No fire table: that must come from a pack.
    fn default() -> Self {
        PackDefaults {
            freespace_height_m: 2.0,
            adjacency_eps_m: crate::geom::DEFAULT_ADJACENCY_EPS,
            fire_threshold_table: Vec::new(),
            floor_exemption: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DefaultsPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freespace_height_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency_eps_m: Option<f64>,
    /// Rows of `[upper, minutes]`; `null` upper means no bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fire_threshold_table: Option<Vec<(Option<f64>, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor_exemption: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    #[serde(default)]
    pub description: String,
    pub topics: Vec<String>,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub defaults: DefaultsPatch,
    /// Extra CURIE prefixes for the pack's rules.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub prefixes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", errors.join("; "))]
pub struct PackError {
    pub errors: Vec<String>,
}

impl PackError {
    fn one(msg: impl Into<String>) -> Self {
        PackError { errors: vec![msg.into()] }
    }
}

#[derive(Debug, Clone)]
pub struct RulePack {
    pub manifest: Manifest,
    pub rules: Vec<CompiledRule>,
    pub defaults: PackDefaults,
    pub vocab: Vocabulary,
}

/// Minutes required for `height` meters. Rows are half-open
/// `(previous bound, bound]` intervals.
pub fn resolve_fire_threshold(height: f64, table: &[(f64, f64)]) -> Result<f64, DslError> {
    if !(height >= 0.0) {
        return Err(DslError::Threshold(format!("height must be non-negative, got {height}")));
    }
    check_table(table).map_err(DslError::Threshold)?;
    table
        .iter()
        .find(|(upper, _)| height <= *upper)
        .map(|(_, minutes)| *minutes)
        .ok_or_else(|| DslError::Threshold(format!("no row covers height {height}")))
}

fn check_table(table: &[(f64, f64)]) -> Result<(), String> {
    if table.is_empty() {
        return Err("fire threshold table is empty".into());
    }
    if table.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err("fire threshold bounds must strictly increase".into());
    }
    if table.last().is_some_and(|(upper, _)| *upper != f64::INFINITY) {
        return Err("the last fire threshold row must be unbounded (null)".into());
    }
    Ok(())
}

fn merge_defaults(patch: &DefaultsPatch) -> Result<PackDefaults, String> {
    let mut d = PackDefaults::default();
    if let Some(h) = patch.freespace_height_m {
        if !(h > 0.0) {
            return Err(format!("freespace_height_m must be positive, got {h}"));
        }
        d.freespace_height_m = h;
    }
    if let Some(e) = patch.adjacency_eps_m {
        if !(e > 0.0) {
            return Err(format!("adjacency_eps_m must be positive, got {e}"));
        }
        d.adjacency_eps_m = e;
    }
    if let Some(rows) = &patch.fire_threshold_table {
        let table: Vec<(f64, f64)> = rows.iter().map(|(u, m)| (u.unwrap_or(f64::INFINITY), *m)).collect();
        check_table(&table)?;
        d.fire_threshold_table = table;
    }
    if let Some(f) = patch.floor_exemption {
        d.floor_exemption = f;
    }
    Ok(d)
}

impl RulePack {
    /// Builds a pack from a manifest document and `(file name, source)`
    /// pairs. Collects every problem before failing.
    pub fn from_sources(manifest_json: &str, sources: &[(String, String)]) -> Result<Self, PackError> {
        let manifest: Manifest =
            serde_json::from_str(manifest_json).map_err(|e| PackError::one(format!("manifest.json: {e}")))?;
        let mut errors = Vec::new();
        let mut vocab = Vocabulary::builtin();
        for (prefix, iri) in &manifest.prefixes {
            if let Err(e) = vocab.bind(prefix, iri) {
                errors.push(format!("manifest.json: prefix '{prefix}': {e}"));
            }
        }
        let defaults = merge_defaults(&manifest.defaults).unwrap_or_else(|e| {
            errors.push(format!("manifest.json: {e}"));
            PackDefaults::default()
        });
        let topics: BTreeSet<&str> = manifest.topics.iter().map(String::as_str).collect();
        let mut rules = Vec::new();
        let mut ids = BTreeSet::new();
        for (file, src) in sources {
            let asts = match parse_rules(src, &vocab) {
                Ok(a) => a,
                Err(e) => {
                    errors.push(format!("{file}: {e}"));
                    continue;
                }
            };
            for ast in asts {
                if !ids.insert(ast.id.clone()) {
                    errors.push(format!("{file}: duplicate rule id '{}'", ast.id));
                }
                if !topics.contains(ast.topic.as_str()) {
                    errors.push(format!(
                        "{file}: rule '{}' has topic '{}' which the manifest does not list",
                        ast.id, ast.topic
                    ));
                }
                match compile_rule(&ast, &vocab) {
                    Ok(c) => rules.push(c),
                    Err(e) => errors.push(format!("{file}: {e}")),
                }
            }
        }
        if !errors.is_empty() {
            return Err(PackError { errors });
        }
        Ok(RulePack {
            manifest,
            rules,
            defaults,
            vocab,
        })
    }

    /// The pack shipped with the crate.
    pub fn builtin_default() -> Self {
        let sources: Vec<(String, String)> = DEFAULT_RULES
            .iter()
            .map(|(n, s)| (n.to_string(), s.to_string()))
            .collect();
        Self::from_sources(DEFAULT_MANIFEST, &sources).expect("default pack loads")
    }

    pub fn rule(&self, id: &str) -> Option<&CompiledRule> {
        self.rules.iter().find(|r| r.ast.id == id)
    }

    /// Compile warnings across all rules.
    pub fn warnings(&self) -> Vec<String> {
        self.rules.iter().flat_map(|r| r.warnings.iter().cloned()).collect()
    }
}

/// Reads a pack archive.
pub fn load_pack(archive: &[u8]) -> Result<RulePack, PackError> {
    let mut zip = ZipArchive::new(Cursor::new(archive)).map_err(|e| PackError::one(format!("not a ZIP archive: {e}")))?;
    let mut manifest = None;
    let mut sources = Vec::new();
    let mut errors = Vec::new();
    for i in 0..zip.len() {
        let mut entry = match zip.by_index(i) {
            Ok(e) => e,
            Err(e) => {
                errors.push(format!("entry {i}: {e}"));
                continue;
            }
        };
        let name = entry.name().to_string();
        let wanted = name == "manifest.json" || (name.starts_with("rules/") && name.ends_with(".rule"));
        if !wanted {
            continue;
        }
        let mut text = String::new();
        if let Err(e) = entry.read_to_string(&mut text) {
            errors.push(format!("{name}: {e}"));
            continue;
        }
        if name == "manifest.json" {
            manifest = Some(text);
        } else {
            sources.push((name, text));
        }
    }
    let Some(manifest) = manifest else {
        errors.insert(0, "archive has no manifest.json".to_string());
        return Err(PackError { errors });
    };
    sources.sort();
    match RulePack::from_sources(&manifest, &sources) {
        Ok(p) if errors.is_empty() => Ok(p),
        Ok(_) => Err(PackError { errors }),
        Err(mut e) => {
            errors.append(&mut e.errors);
            Err(PackError { errors })
        }
    }
}

/// Reads a pack from a file: a ZIP archive, or a directory laid out
/// like one.
pub fn load_pack_path(path: &Path) -> Result<RulePack, PackError> {
    if path.is_dir() {
        let bytes = pack_directory(path)?;
        return load_pack(&bytes);
    }
    let bytes = std::fs::read(path).map_err(|e| PackError::one(format!("{}: {e}", path.display())))?;
    load_pack(&bytes)
}

/// Writes entries into a ZIP with stored compression and fixed
/// timestamps, so equal inputs give equal bytes.
pub fn write_zip(entries: &[(String, Vec<u8>)]) -> std::io::Result<Vec<u8>> {
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(DateTime::default());
    for (name, data) in entries {
        zip.start_file(name.as_str(), options)?;
        zip.write_all(data)?;
    }
    Ok(zip.finish()?.into_inner())
}

/// Zips a pack directory (`manifest.json` plus `rules/*.rule`).
pub fn pack_directory(dir: &Path) -> Result<Vec<u8>, PackError> {
    let io = |e: std::io::Error| PackError::one(format!("{}: {e}", dir.display()));
    let manifest = std::fs::read(dir.join("manifest.json"))
        .map_err(|e| PackError::one(format!("{}: manifest.json: {e}", dir.display())))?;
    let mut entries = vec![("manifest.json".to_string(), manifest)];
    let rules_dir = dir.join("rules");
    if rules_dir.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(&rules_dir)
            .map_err(io)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "rule"))
            .collect();
        files.sort();
        for f in files {
            let name = format!("rules/{}", f.file_name().unwrap().to_string_lossy());
            entries.push((name, std::fs::read(&f).map_err(io)?));
        }
    }
    write_zip(&entries).map_err(io)
}

/// The default pack as archive bytes.
pub fn default_pack_archive() -> Vec<u8> {
    let mut entries = vec![("manifest.json".to_string(), DEFAULT_MANIFEST.as_bytes().to_vec())];
    entries.extend(DEFAULT_RULES.iter().map(|(n, s)| (n.to_string(), s.as_bytes().to_vec())));
    write_zip(&entries).expect("in-memory zip")
}
