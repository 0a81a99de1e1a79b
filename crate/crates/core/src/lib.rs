//! Building-model compliance checking.
//!
//! The pipeline: [`step`] parses an IFC STEP file, [`lift`] turns it
//! into `ifc:` triples in a [`graph::Graph`], [`geom`] adds world-space
//! boxes, [`infer`] materializes regulation concepts by forward
//! chaining, and [`dsl`] compiles and runs rule packs. [`checker`] ties
//! the stages together and writes JSON and BCF reports.

pub mod checker;
pub mod dsl;
pub mod geom;
pub mod graph;
pub mod infer;
pub mod lift;
pub mod step;
pub mod vocab;
