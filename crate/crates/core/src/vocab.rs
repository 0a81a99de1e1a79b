//! Namespaces and the layered regulation vocabulary.
//!
//! Layer 0 holds the lifted building-model terms (`ifc:`, `geo:`),
//! higher layers hold regulation concepts defined on top of them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Iri, TermError};

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const IFC: &str = "http://example.org/regcheck/ifc#";
pub const REG: &str = "http://example.org/regcheck/reg#";
pub const GEO: &str = "http://example.org/regcheck/geo#";
pub const INST: &str = "http://example.org/regcheck/inst/";

const BUILTIN_VOCAB: &str = include_str!("../assets/reg-vocab.json");

fn make(base: &str, local: &str) -> Iri {
    Iri::new(format!("{base}{local}")).expect("vocabulary IRIs are well-formed")
}

pub fn rdf_type() -> Iri {
    make(RDF, "type")
}

pub fn ifc(local: &str) -> Iri {
    make(IFC, local)
}

pub fn reg(local: &str) -> Iri {
    make(REG, local)
}

pub fn geo(local: &str) -> Iri {
    make(GEO, local)
}

/// IRI of a lifted STEP instance.
pub fn inst(id: u64) -> Iri {
    make(INST, &id.to_string())
}

/// Inverse of [`inst`].
pub fn instance_number(iri: &Iri) -> Option<u64> {
    iri.as_str().strip_prefix(INST)?.parse().ok()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VocabError {
    #[error("unknown prefix '{0}'")]
    UnknownPrefix(String),
    #[error("'{0}' is neither a CURIE nor an <IRI>")]
    Malformed(String),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("invalid vocabulary document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Namespace {
    pub prefix: String,
    pub iri: String,
    pub layer: u32,
    /// Declared local names. An empty list means the namespace is open.
    #[serde(default)]
    pub terms: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    namespaces: Vec<Namespace>,
}

#[derive(Deserialize)]
struct NamespaceSection {
    namespaces: Vec<Namespace>,
}

impl Vocabulary {
    pub fn new(namespaces: Vec<Namespace>) -> Self {
        Vocabulary { namespaces }
    }

    /// The shipped vocabulary (`assets/reg-vocab.json`).
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_VOCAB).expect("builtin vocabulary parses")
    }

    /// Reads the `namespaces` section of a vocabulary document.
    pub fn from_json(text: &str) -> Result<Self, VocabError> {
        let section: NamespaceSection =
            serde_json::from_str(text).map_err(|e| VocabError::Document(e.to_string()))?;
        for ns in &section.namespaces {
            Iri::new(&ns.iri)?;
        }
        Ok(Vocabulary::new(section.namespaces))
    }

    pub fn namespaces(&self) -> &[Namespace] {
        &self.namespaces
    }

    /// Adds or replaces a prefix binding (open namespace, top layer).
    pub fn bind(&mut self, prefix: &str, iri: &str) -> Result<(), VocabError> {
        Iri::new(iri)?;
        let layer = self.namespaces.iter().map(|n| n.layer).max().unwrap_or(0);
        self.namespaces.retain(|n| n.prefix != prefix);
        self.namespaces.push(Namespace {
            prefix: prefix.to_string(),
            iri: iri.to_string(),
            layer,
            terms: BTreeSet::new(),
        });
        Ok(())
    }

    /// Resolves `prefix:local` or `<absolute-iri>`.
    pub fn resolve(&self, text: &str) -> Result<Iri, VocabError> {
        if let Some(inner) = text.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
            return Ok(Iri::new(inner)?);
        }
        let (prefix, local) = text
            .split_once(':')
            .ok_or_else(|| VocabError::Malformed(text.to_string()))?;
        let ns = self
            .namespaces
            .iter()
            .find(|n| n.prefix == prefix)
            .ok_or_else(|| VocabError::UnknownPrefix(prefix.to_string()))?;
        Ok(Iri::new(format!("{}{}", ns.iri, local))?)
    }

    fn namespace_of<'a>(&'a self, iri: &'a Iri) -> Option<(&'a Namespace, &'a str)> {
        self.namespaces
            .iter()
            .filter_map(|n| iri.as_str().strip_prefix(n.iri.as_str()).map(|l| (n, l)))
            .max_by_key(|(n, _)| n.iri.len())
    }

    /// `prefix:local` when a namespace matches, `<iri>` otherwise.
    pub fn compact(&self, iri: &Iri) -> String {
        match self.namespace_of(iri) {
            Some((ns, local)) => format!("{}:{}", ns.prefix, local),
            None => iri.to_string(),
        }
    }

    /// True when the IRI belongs to a declared namespace and, for closed
    /// namespaces, names a declared term.
    pub fn is_known(&self, iri: &Iri) -> bool {
        match self.namespace_of(iri) {
            Some((ns, local)) => ns.terms.is_empty() || ns.terms.contains(local),
            None => false,
        }
    }

    pub fn layer_of(&self, iri: &Iri) -> Option<u32> {
        self.namespace_of(iri).map(|(ns, _)| ns.layer)
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::builtin()
    }
}
