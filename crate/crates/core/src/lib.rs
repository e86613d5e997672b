//! Petri net synthesis from labelled nets via token-trail regions.
//!
//! A specification is a set of labelled nets. Every minimal token-trail
//! region (up to a bound `k`) is enumerated with an exact integer linear
//! program and turned into one place of the synthesized net, which can then
//! simulate every net of the specification.

pub mod convert;
pub mod fixtures;
pub mod ilp;
pub mod io;
pub mod net;
pub mod regions;
pub mod semantics;
pub mod synthesis;

pub use net::{LabelledNet, MarkedPetriNet, Marking, Multiset, NetError, PetriNet, Specification};

/// Outcome of a validity check: valid, or the first violation found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<V> {
    Valid,
    Invalid(V),
}

impl<V> Verdict<V> {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn violation(&self) -> Option<&V> {
        match self {
            Verdict::Valid => None,
            Verdict::Invalid(v) => Some(v),
        }
    }
}
