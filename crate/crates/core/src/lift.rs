//! Lifting a parsed STEP file into `ifc:` triples.
//!
//! Only configured entities and relations are lifted. Lengths are
//! converted to meters here so nothing downstream sees model units.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, Iri, Literal, Term, Triple};
use crate::step::{StepEntity, StepFile, StepValue};
use crate::vocab::{self, Vocabulary};

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("invalid lift configuration: {0}")]
    Config(String),
    #[error("length unit factor must be positive, got {0}")]
    BadScale(f64),
}

/// Conversion factor from model length units to meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScale {
    length_to_meters: f64,
}

impl UnitScale {
    pub const METERS: UnitScale = UnitScale { length_to_meters: 1.0 };
    pub const MILLIMETERS: UnitScale = UnitScale { length_to_meters: 0.001 };

    pub fn new(length_to_meters: f64) -> Result<Self, LiftError> {
        if length_to_meters > 0.0 && length_to_meters.is_finite() {
            Ok(UnitScale { length_to_meters })
        } else {
            Err(LiftError::BadScale(length_to_meters))
        }
    }

    pub fn factor(&self) -> f64 {
        self.length_to_meters
    }

    /// Converts a model length to meters. Sub-meter decimal units divide
    /// by the integral reciprocal so `9000 mm` becomes exactly `9.0`.
    pub fn to_meters(&self, v: f64) -> f64 {
        let inv = 1.0 / self.length_to_meters;
        let rounded = inv.round();
        if self.length_to_meters < 1.0 && (inv - rounded).abs() < 1e-9 * rounded {
            v / rounded
        } else {
            v * self.length_to_meters
        }
    }
}

impl Default for UnitScale {
    fn default() -> Self {
        Self::METERS
    }
}

fn si_prefix_exponent(prefix: &str) -> Option<i32> {
    Some(match prefix {
        "EXA" => 18,
        "PETA" => 15,
        "TERA" => 12,
        "GIGA" => 9,
        "MEGA" => 6,
        "KILO" => 3,
        "HECTO" => 2,
        "DECA" => 1,
        "DECI" => -1,
        "CENTI" => -2,
        "MILLI" => -3,
        "MICRO" => -6,
        "NANO" => -9,
        "PICO" => -12,
        "FEMTO" => -15,
        "ATTO" => -18,
        _ => return None,
    })
}

fn length_factor_of(file: &StepFile, unit: &StepEntity, depth: usize) -> Option<f64> {
    if depth > 4 || unit.args.get(1).and_then(StepValue::as_enum) != Some("LENGTHUNIT") {
        return None;
    }
    match unit.name.as_str() {
        "IFCSIUNIT" => {
            if unit.args.get(3).and_then(StepValue::as_enum) != Some("METRE") {
                return None;
            }
            let exp = match unit.args.get(2) {
                Some(StepValue::Enum(p)) => si_prefix_exponent(p)?,
                _ => 0,
            };
            Some(10f64.powi(exp))
        }
        "IFCCONVERSIONBASEDUNIT" => {
            let measure = file.resolve(unit.args.get(3)?)?;
            let value = measure.args.first()?.as_f64()?;
            let base = file.resolve(measure.args.get(1)?)?;
            Some(value * length_factor_of(file, base, depth + 1)?)
        }
        _ => None,
    }
}

/// Reads the model's length unit. Absent declarations default to meters
/// with a warning.
pub fn extract_units(file: &StepFile) -> (UnitScale, Vec<String>) {
    let mut candidates: Vec<&StepEntity> = Vec::new();
    // Prefer the unit assignment's own list; fall back to any unit entity.
    for assignment in file.by_name("IFCUNITASSIGNMENT") {
        if let Some(list) = assignment.args.first().and_then(StepValue::as_list) {
            candidates.extend(list.iter().filter_map(|v| file.resolve(v)));
        }
    }
    candidates.extend(
        file.entities
            .values()
            .filter(|e| e.name == "IFCSIUNIT" || e.name == "IFCCONVERSIONBASEDUNIT"),
    );
    for unit in candidates {
        if let Some(factor) = length_factor_of(file, unit, 0) {
            if let Ok(scale) = UnitScale::new(factor) {
                return (scale, Vec::new());
            }
        }
    }
    (
        UnitScale::METERS,
        vec!["no length unit declared; assuming meters".to_string()],
    )
}

/// One property-set mapping as written in `lift.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyMapEntry {
    /// Property set name, or `*` for any set.
    pub pset: String,
    pub prop: String,
    /// CURIE or `<IRI>`.
    pub predicate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LiftConfigDoc {
    #[serde(default = "default_entities")]
    keep_entities: Vec<String>,
    #[serde(default = "default_relations")]
    keep_relations: Vec<String>,
    #[serde(default = "default_property_map")]
    property_map: Vec<PropertyMapEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyMapping {
    pub pset: String,
    pub prop: String,
    pub predicate: Iri,
}

/// Which entities and relations get lifted, and how property sets map to predicates.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftConfig {
    pub keep_entities: BTreeSet<String>,
    pub keep_relations: BTreeSet<String>,
    pub property_map: Vec<PropertyMapping>,
}

pub const REL_CONTAINED: &str = "IFCRELCONTAINEDINSPATIALSTRUCTURE";
pub const REL_AGGREGATES: &str = "IFCRELAGGREGATES";
pub const REL_DEFINES_BY_TYPE: &str = "IFCRELDEFINESBYTYPE";
pub const REL_DEFINES_BY_PROPERTIES: &str = "IFCRELDEFINESBYPROPERTIES";
pub const REL_ASSOCIATES_CLASSIFICATION: &str = "IFCRELASSOCIATESCLASSIFICATION";

/// Default fire-duration property name; override through `lift.json`.
pub const FIRE_DURATION_PROPERTY: &str = "FireResistanceDuration";

fn default_entities() -> Vec<String> {
    [
        "IFCPROJECT",
        "IFCBUILDING",
        "IFCBUILDINGSTOREY",
        "IFCSPACE",
        "IFCWALL",
        "IFCWALLSTANDARDCASE",
        "IFCSLAB",
        "IFCCOLUMN",
        "IFCBEAM",
        "IFCDOOR",
        "IFCFLOWTERMINAL",
        "IFCFLOWTERMINALTYPE",
        "IFCSANITARYTERMINALTYPE",
        "IFCRAILING",
        "IFCCLASSIFICATION",
        "IFCCLASSIFICATIONREFERENCE",
    ]
    .map(String::from)
    .to_vec()
}

fn default_relations() -> Vec<String> {
    [
        REL_CONTAINED,
        REL_AGGREGATES,
        REL_DEFINES_BY_TYPE,
        REL_DEFINES_BY_PROPERTIES,
        REL_ASSOCIATES_CLASSIFICATION,
    ]
    .map(String::from)
    .to_vec()
}

fn default_property_map() -> Vec<PropertyMapEntry> {
    vec![
        PropertyMapEntry {
            pset: "*".into(),
            prop: "LoadBearing".into(),
            predicate: "ifc:loadBearing".into(),
        },
        PropertyMapEntry {
            pset: "*".into(),
            prop: FIRE_DURATION_PROPERTY.into(),
            predicate: "ifc:fireLoadBearingDurationMinutes".into(),
        },
        PropertyMapEntry {
            pset: "*".into(),
            prop: "FacingAxis".into(),
            predicate: "ifc:facingAxis".into(),
        },
    ]
}

impl LiftConfig {
    fn from_doc(doc: LiftConfigDoc) -> Result<Self, LiftError> {
        let vocab = Vocabulary::builtin();
        let property_map = doc
            .property_map
            .into_iter()
            .map(|m| {
                let predicate = vocab
                    .resolve(&m.predicate)
                    .map_err(|e| LiftError::Config(format!("predicate '{}': {e}", m.predicate)))?;
                Ok(PropertyMapping {
                    pset: m.pset,
                    prop: m.prop,
                    predicate,
                })
            })
            .collect::<Result<_, LiftError>>()?;
        let upper = |v: Vec<String>| v.into_iter().map(|s| s.to_ascii_uppercase()).collect();
        Ok(LiftConfig {
            keep_entities: upper(doc.keep_entities),
            keep_relations: upper(doc.keep_relations),
            property_map,
        })
    }

    /// Parses a `lift.json` document; omitted keys take their defaults.
    pub fn from_json(text: &str) -> Result<Self, LiftError> {
        let doc: LiftConfigDoc =
            serde_json::from_str(text).map_err(|e| LiftError::Config(e.to_string()))?;
        Self::from_doc(doc)
    }
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self::from_doc(LiftConfigDoc {
            keep_entities: default_entities(),
            keep_relations: default_relations(),
            property_map: default_property_map(),
        })
        .expect("default lift configuration is valid")
    }
}

/// `ifc:` local name for a STEP entity keyword.
pub fn class_name(entity: &str) -> String {
    const KNOWN: &[(&str, &str)] = &[
        ("IFCPROJECT", "IfcProject"),
        ("IFCSITE", "IfcSite"),
        ("IFCBUILDING", "IfcBuilding"),
        ("IFCBUILDINGSTOREY", "IfcBuildingStorey"),
        ("IFCSPACE", "IfcSpace"),
        ("IFCWALL", "IfcWall"),
        ("IFCWALLSTANDARDCASE", "IfcWallStandardCase"),
        ("IFCSLAB", "IfcSlab"),
        ("IFCCOLUMN", "IfcColumn"),
        ("IFCBEAM", "IfcBeam"),
        ("IFCDOOR", "IfcDoor"),
        ("IFCWINDOW", "IfcWindow"),
        ("IFCFLOWTERMINAL", "IfcFlowTerminal"),
        ("IFCFLOWTERMINALTYPE", "IfcFlowTerminalType"),
        ("IFCSANITARYTERMINALTYPE", "IfcSanitaryTerminalType"),
        ("IFCRAILING", "IfcRailing"),
        ("IFCCLASSIFICATION", "IfcClassification"),
        ("IFCCLASSIFICATIONREFERENCE", "IfcClassificationReference"),
        ("IFCRELASSOCIATESCLASSIFICATION", "IfcRelAssociatesClassification"),
        ("IFCOWNERHISTORY", "IfcOwnerHistory"),
    ];
    if let Some((_, camel)) = KNOWN.iter().find(|(k, _)| *k == entity) {
        return camel.to_string();
    }
    match entity.strip_prefix("IFC") {
        Some(rest) if !rest.is_empty() => {
            let lower = rest.to_ascii_lowercase();
            let mut chars = lower.chars();
            let first = chars.next().map(|c| c.to_ascii_uppercase()).unwrap_or_default();
            format!("Ifc{first}{}", chars.as_str())
        }
        _ => entity.to_string(),
    }
}

#[derive(Clone, Copy)]
enum AttrKind {
    Text,
    Length,
    Enum,
    Ref,
}

/// Positional attributes lifted per entity, beyond GlobalId and Name.
fn attribute_table(entity: &str) -> &'static [(usize, &'static str, AttrKind)] {
    use AttrKind::*;
    match entity {
        "IFCBUILDINGSTOREY" => &[(9, "elevation", Length)],
        "IFCBUILDING" => &[(9, "elevationOfRefHeight", Length), (10, "elevationOfTerrain", Length)],
        "IFCSPACE" => &[(7, "longName", Text)],
        "IFCDOOR" => &[(8, "overallHeight", Length), (9, "overallWidth", Length), (10, "predefinedType", Enum)],
        "IFCWALL" | "IFCWALLSTANDARDCASE" | "IFCSLAB" | "IFCCOLUMN" | "IFCBEAM" | "IFCRAILING"
        | "IFCFLOWTERMINAL" => &[(8, "predefinedType", Enum)],
        "IFCCLASSIFICATIONREFERENCE" => &[
            (0, "location", Text),
            (1, "itemReference", Text),
            (2, "name", Text),
            (3, "referencedSource", Ref),
        ],
        "IFCCLASSIFICATION" => &[(0, "source", Text), (1, "edition", Text), (3, "name", Text)],
        name if name.ends_with("TYPE") => &[(9, "predefinedType", Enum)],
        _ => &[],
    }
}

/// Entities without the IfcRoot GlobalId/OwnerHistory/Name prefix.
fn is_resource_entity(entity: &str) -> bool {
    matches!(entity, "IFCCLASSIFICATION" | "IFCCLASSIFICATIONREFERENCE")
}

pub struct Lifted {
    pub graph: Graph,
    pub warnings: Vec<String>,
}

struct Lifter<'a> {
    file: &'a StepFile,
    scale: UnitScale,
    config: &'a LiftConfig,
    graph: Graph,
    warnings: Vec<String>,
}

impl Lifter<'_> {
    fn kept(&self, id: u64) -> bool {
        self.file
            .get(id)
            .is_some_and(|e| self.config.keep_entities.contains(&e.name))
    }

    fn add(&mut self, subject: u64, predicate: Iri, object: impl Into<Term>) {
        self.graph.insert(Triple::new(vocab::inst(subject), predicate, object));
    }

    fn entity(&mut self, e: &StepEntity) {
        self.add(e.id, vocab::rdf_type(), vocab::ifc(&class_name(&e.name)));
        if !is_resource_entity(&e.name) {
            if let Some(guid) = e.opt_arg(0).and_then(StepValue::as_text) {
                self.add(e.id, vocab::ifc("globalId"), Literal::text(guid));
            }
            if let Some(name) = e.opt_arg(2).and_then(StepValue::as_text) {
                self.add(e.id, vocab::ifc("name"), Literal::text(name));
            }
            // Edit history is kept as a bare link so the prune stage can drop it.
            if let Some(oh) = e.opt_arg(1).and_then(StepValue::as_ref_id) {
                if self.file.get(oh).is_some_and(|h| h.name == "IFCOWNERHISTORY") {
                    self.add(e.id, vocab::ifc("ownerHistory"), vocab::inst(oh));
                }
            }
        }
        for &(index, predicate, kind) in attribute_table(&e.name) {
            let Some(value) = e.opt_arg(index) else { continue };
            let object: Option<Term> = match kind {
                AttrKind::Text => value.as_text().map(|s| Literal::text(s).into()),
                AttrKind::Length => value
                    .as_f64()
                    .map(|v| Literal::decimal(self.scale.to_meters(v)).into()),
                AttrKind::Enum => value.as_enum().map(|s| Literal::text(s).into()),
                AttrKind::Ref => value
                    .as_ref_id()
                    .filter(|id| self.kept(*id))
                    .map(|id| vocab::inst(id).into()),
            };
            if let Some(object) = object {
                self.add(e.id, vocab::ifc(predicate), object);
            }
        }
    }

    /// Resolves a relation endpoint list; `None` when any reference dangles.
    fn endpoints(&mut self, rel: &StepEntity, index: usize) -> Option<Vec<u64>> {
        let refs: Vec<u64> = match rel.args.get(index) {
            Some(StepValue::Ref(id)) => vec![*id],
            Some(StepValue::List(items)) => items.iter().filter_map(StepValue::as_ref_id).collect(),
            _ => Vec::new(),
        };
        if let Some(missing) = refs.iter().find(|id| self.file.get(**id).is_none()) {
            self.warnings.push(format!(
                "relation #{} ({}) references undefined #{}; skipped",
                rel.id, rel.name, missing
            ));
            return None;
        }
        Some(refs.into_iter().filter(|id| self.kept(*id)).collect())
    }

    fn relation(&mut self, rel: &StepEntity) {
        match rel.name.as_str() {
            REL_CONTAINED => {
                let (Some(elements), Some(structure)) = (self.endpoints(rel, 4), self.endpoints(rel, 5)) else {
                    return;
                };
                for s in &structure {
                    for e in &elements {
                        self.add(*e, vocab::ifc("containedIn"), vocab::inst(*s));
                    }
                }
            }
            REL_AGGREGATES => {
                let (Some(whole), Some(parts)) = (self.endpoints(rel, 4), self.endpoints(rel, 5)) else {
                    return;
                };
                for w in &whole {
                    for p in &parts {
                        self.add(*w, vocab::ifc("aggregates"), vocab::inst(*p));
                    }
                }
            }
            REL_DEFINES_BY_TYPE => {
                let (Some(objects), Some(types)) = (self.endpoints(rel, 4), self.endpoints(rel, 5)) else {
                    return;
                };
                for t in &types {
                    for o in &objects {
                        self.add(*o, vocab::ifc("definedByType"), vocab::inst(*t));
                    }
                }
            }
            REL_DEFINES_BY_PROPERTIES => self.properties(rel),
            REL_ASSOCIATES_CLASSIFICATION => {
                let (Some(objects), Some(refs)) = (self.endpoints(rel, 4), self.endpoints(rel, 5)) else {
                    return;
                };
                self.entity(rel);
                for o in &objects {
                    self.add(rel.id, vocab::ifc("relatedObjects"), vocab::inst(*o));
                }
                for r in &refs {
                    self.add(rel.id, vocab::ifc("relatingClassification"), vocab::inst(*r));
                }
            }
            _ => {}
        }
    }

    fn properties(&mut self, rel: &StepEntity) {
        let Some(objects) = self.endpoints(rel, 4) else { return };
        let Some(pset) = rel.args.get(5).and_then(|v| self.file.resolve(v)) else {
            if let Some(id) = rel.args.get(5).and_then(StepValue::as_ref_id) {
                self.warnings.push(format!(
                    "relation #{} ({}) references undefined #{}; skipped",
                    rel.id, rel.name, id
                ));
            }
            return;
        };
        if pset.name != "IFCPROPERTYSET" {
            return;
        }
        let pset_name = pset.opt_arg(2).and_then(StepValue::as_text).unwrap_or("").to_string();
        let props: Vec<&StepEntity> = pset
            .args
            .get(4)
            .and_then(StepValue::as_list)
            .unwrap_or(&[])
            .iter()
            .filter_map(|v| self.file.resolve(v))
            .filter(|p| p.name == "IFCPROPERTYSINGLEVALUE")
            .collect();
        for prop in props {
            let Some(prop_name) = prop.opt_arg(0).and_then(StepValue::as_text) else { continue };
            let mappings: Vec<Iri> = self
                .config
                .property_map
                .iter()
                .filter(|m| m.prop == prop_name && (m.pset == "*" || m.pset == pset_name))
                .map(|m| m.predicate.clone())
                .collect();
            if mappings.is_empty() {
                continue;
            }
            let Some(value) = prop.opt_arg(2) else { continue };
            let Some(object) = self.property_value(value) else {
                self.warnings.push(format!(
                    "property '{prop_name}' on #{} has an unsupported value {value}",
                    prop.id
                ));
                continue;
            };
            for predicate in mappings {
                for o in &objects {
                    self.add(*o, predicate.clone(), object.clone());
                }
            }
        }
    }

    fn property_value(&self, value: &StepValue) -> Option<Literal> {
        let (type_name, inner) = match value {
            StepValue::Typed(name, inner) => (name.as_str(), inner.as_ref()),
            other => ("", other),
        };
        match (type_name, inner) {
            ("IFCBOOLEAN" | "IFCLOGICAL", StepValue::Enum(e)) => match e.as_str() {
                "T" | "TRUE" => Some(Literal::boolean(true)),
                "F" | "FALSE" => Some(Literal::boolean(false)),
                _ => None,
            },
            ("IFCLENGTHMEASURE" | "IFCPOSITIVELENGTHMEASURE" | "IFCNONNEGATIVELENGTHMEASURE", v) => {
                v.as_f64().map(|x| Literal::decimal(self.scale.to_meters(x)))
            }
            (_, StepValue::Integer(i)) => Some(Literal::integer(*i)),
            (_, StepValue::Real(r)) => Some(Literal::decimal(*r)),
            (_, StepValue::Text(s)) => Some(Literal::text(s)),
            (_, StepValue::Enum(e)) => Some(Literal::text(e)),
            _ => None,
        }
    }
}

/// Lifts kept entities and relations into a fresh graph.
pub fn lift_model(file: &StepFile, scale: UnitScale, config: &LiftConfig) -> Lifted {
    let mut lifter = Lifter {
        file,
        scale,
        config,
        graph: Graph::new(),
        warnings: Vec::new(),
    };
    for e in file.entities.values() {
        if config.keep_entities.contains(&e.name) {
            lifter.entity(e);
        }
    }
    for e in file.entities.values() {
        if config.keep_relations.contains(&e.name) {
            lifter.relation(e);
        }
    }
    Lifted {
        graph: lifter.graph,
        warnings: lifter.warnings,
    }
}

/// Canonical N-Triples text of a graph.
pub fn serialize_ntriples(graph: &Graph) -> String {
    graph.to_ntriples()
}
