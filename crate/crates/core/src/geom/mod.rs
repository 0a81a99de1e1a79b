//! Geometric pre-processing: world-space boxes for lifted elements,
//! the SAT predicates built on them, and their `geo:` triples.

mod obb;
mod placement;
mod representation;

use std::collections::BTreeMap;

use thiserror::Error;

pub use obb::{
    adjacent, geometry_triples, intersects, make_freespace, obb_node, separation, Obb, Side, AXIS_PREDICATES,
    CENTER_PREDICATES, DEFAULT_ADJACENCY_EPS, HALF_EXTENT_PREDICATES,
};
pub use placement::{compose_placements, placement_chain, read_axis_placement, AxisPlacement, Transform};
pub use representation::{obb_from_representation, Representation};

use crate::graph::{Graph, Iri, Literal, Term, Triple};
use crate::lift::UnitScale;
use crate::step::{StepEntity, StepFile};
use crate::vocab;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate direction in placement {0}")]
    DegenerateDirection(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("box axes are not orthonormal")]
    NotOrthonormal,
    #[error("reference to undefined #{0}")]
    Dangling(u64),
    #[error("malformed geometry: {0}")]
    Malformed(String),
}

/// Entities that never carry element geometry of their own.
fn is_spatial_or_non_product(name: &str) -> bool {
    matches!(
        name,
        "IFCPROJECT" | "IFCSITE" | "IFCBUILDING" | "IFCBUILDINGSTOREY" | "IFCCLASSIFICATION" | "IFCCLASSIFICATIONREFERENCE"
    ) || name.starts_with("IFCREL")
        || name.ends_with("TYPE")
}

/// Element boxes keyed by instance IRI, plus elements left without one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeomIndex {
    boxes: BTreeMap<Iri, Obb>,
    missing: Vec<(Iri, String)>,
}

impl GeomIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, element: Iri, obb: Obb) {
        self.boxes.insert(element, obb);
    }

    pub fn mark_missing(&mut self, element: Iri, reason: impl Into<String>) {
        self.missing.push((element, reason.into()));
    }

    pub fn get(&self, element: &Iri) -> Option<&Obb> {
        self.boxes.get(element)
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Iri, &Obb)> {
        self.boxes.iter()
    }

    /// Elements without a usable box, with the reason.
    pub fn missing(&self) -> &[(Iri, String)] {
        &self.missing
    }

    /// Box triples for every element plus its `geo:baseElevation`.
    pub fn triples(&self) -> Vec<Triple> {
        let mut out = Vec::with_capacity(self.boxes.len() * 17);
        for (iri, obb) in &self.boxes {
            out.extend(geometry_triples(iri, obb));
            out.push(Triple::new(
                iri.clone(),
                vocab::geo("baseElevation"),
                Term::Literal(Literal::decimal_fixed(obb.min_z(), 6)),
            ));
        }
        out
    }
}

fn element_box(file: &StepFile, e: &StepEntity, scale: UnitScale) -> Result<Representation, GeomError> {
    let world = match e.opt_arg(5) {
        Some(p) => compose_placements(&placement_chain(file, p)?, scale)?,
        None => Transform::identity(),
    };
    obb_from_representation(e, file, &world, scale)
}

/// Computes boxes for every lifted product element of `graph`.
pub fn build_index(file: &StepFile, graph: &Graph, scale: UnitScale) -> GeomIndex {
    let mut index = GeomIndex::new();
    let rdf_type = vocab::rdf_type();
    for e in file.entities.values() {
        if is_spatial_or_non_product(&e.name) || e.args.len() < 7 {
            continue;
        }
        let iri = vocab::inst(e.id);
        if graph.objects(&Term::Iri(iri.clone()), &rdf_type).is_empty() {
            continue;
        }
        match element_box(file, e, scale) {
            Ok(Representation::Box(obb)) => index.insert(iri, obb),
            Ok(Representation::Absent { reason }) => index.mark_missing(iri, reason),
            Err(err) => index.mark_missing(iri, err.to_string()),
        }
    }
    index
}

/// Adds the index's triples to the graph; returns how many were new.
pub fn emit_triples(index: &GeomIndex, graph: &mut Graph) -> usize {
    graph.extend(index.triples())
}
