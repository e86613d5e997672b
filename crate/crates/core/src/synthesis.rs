//! From regions to places, and from places to the synthesized net: one
//! transition per label, one place per distinct non-trivial minimal region.

use thiserror::Error;

use crate::net::{MarkedPetriNet, Marking, NetError, PetriNet};
use crate::regions::{
    enumerate_minimal_regions, initial_sum, transition_rise, verify_region, Region, RegionError,
    RegionProblem,
};
use crate::semantics::PlaceBehavior;
use crate::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("not a region: {condition} violated at {witness}")]
    InvalidRegion { condition: String, witness: String },
    #[error("rise of {0} does not fit the place weights")]
    RiseOutOfRange(String),
}

pub type Result<T, E = SynthesisError> = std::result::Result<T, E>;

/// A place of the synthesized net together with the region it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceDefinition {
    pub behavior: PlaceBehavior,
    pub source_region: Region,
}

impl PlaceDefinition {
    pub fn consume(&self, label: &str) -> u64 {
        self.behavior.consume(label)
    }

    pub fn produce(&self, label: &str) -> u64 {
        self.behavior.produce(label)
    }

    pub fn initial(&self) -> u64 {
        self.behavior.initial()
    }

    /// Labels of `alphabet` neither consumed nor produced by this place.
    pub fn unconnected<'a>(&self, alphabet: &'a [String]) -> Vec<&'a str> {
        alphabet
            .iter()
            .filter(|l| self.consume(l) == 0 && self.produce(l) == 0)
            .map(String::as_str)
            .collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.behavior == PlaceBehavior::new(0)
    }
}

/// Reads the place induced by a region: for each label, the smallest inflow
/// among its transitions is consumed (first such transition in document
/// order), and the common rise is added on top to get what is produced.
pub fn place_from_region(spec: &crate::net::Specification, r: &Region) -> Result<PlaceDefinition> {
    if let Verdict::Invalid(v) = verify_region(spec, r)? {
        return Err(SynthesisError::InvalidRegion {
            condition: v.condition.to_string(),
            witness: v.witness,
        });
    }
    let nets = spec.nets();
    let mut behavior = PlaceBehavior::new(initial_sum(&nets[0], &r.marking)? as u64);
    for label in spec.alphabet() {
        let mut chosen: Option<(u64, usize, usize)> = None;
        for (n, t) in spec.transitions_with_label(&label) {
            let pnet = nets[n].net();
            let inflow = pnet
                .pre_arcs(t)
                .iter()
                .try_fold(0u64, |acc, &(p, w)| {
                    w.checked_mul(r.get(&pnet.places()[p]))
                        .and_then(|v| acc.checked_add(v))
                })
                .ok_or(NetError::Overflow)?;
            if chosen.is_none_or(|(best, _, _)| inflow < best) {
                chosen = Some((inflow, n, t));
            }
        }
        let (consume, n, t) = chosen.expect("every label has a transition");
        let produce = consume as i128 + transition_rise(&nets[n], &r.marking, t)?;
        let produce =
            u64::try_from(produce).map_err(|_| SynthesisError::RiseOutOfRange(label.clone()))?;
        behavior.set_consume(label.clone(), consume);
        behavior.set_produce(label, produce);
    }
    Ok(PlaceDefinition {
        behavior,
        source_region: r.clone(),
    })
}

/// Keeps the first place of each distinct (consume, produce, initial) triple.
pub fn dedupe_places(places: Vec<PlaceDefinition>) -> Vec<PlaceDefinition> {
    let mut seen = std::collections::HashSet::new();
    places
        .into_iter()
        .filter(|p| seen.insert(p.behavior.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisResult {
    pub net: MarkedPetriNet,
    /// Definitions of the net's places, in place order.
    pub places: Vec<PlaceDefinition>,
    pub label_alphabet: Vec<String>,
    /// Minimal regions enumerated, before dropping duplicates and zero places.
    pub regions_found: usize,
    pub truncated: bool,
}

/// Place ids `p1`, `p2`, …, primed if they would clash with a label.
fn place_ids(count: usize, labels: &[String]) -> Vec<String> {
    (1..=count)
        .map(|i| {
            let mut id = format!("p{i}");
            while labels.contains(&id) {
                id.push('\'');
            }
            id
        })
        .collect()
}

pub fn build_net(places: &[PlaceDefinition], alphabet: &[String]) -> Result<MarkedPetriNet> {
    let ids = place_ids(places.len(), alphabet);
    let mut builder = PetriNet::builder()
        .places(ids.iter().cloned())
        .transitions(alphabet.iter().cloned());
    let mut initial = Marking::new();
    for (id, place) in ids.iter().zip(places) {
        for label in alphabet {
            if place.consume(label) > 0 {
                builder = builder.arc(id.clone(), label.clone(), place.consume(label));
            }
            if place.produce(label) > 0 {
                builder = builder.arc(label.clone(), id.clone(), place.produce(label));
            }
        }
        initial.set(id.clone(), place.initial());
    }
    Ok(MarkedPetriNet::new(builder.build()?, initial)?)
}

pub fn synthesize(problem: &RegionProblem) -> Result<SynthesisResult> {
    let found = enumerate_minimal_regions(problem)?;
    let places = found
        .regions
        .iter()
        .map(|r| place_from_region(&problem.spec, r))
        .collect::<Result<Vec<_>>>()?;
    let places: Vec<PlaceDefinition> = dedupe_places(places)
        .into_iter()
        .filter(|p| !p.is_trivial())
        .collect();
    let label_alphabet = problem.spec.alphabet();
    let net = build_net(&places, &label_alphabet)?;
    Ok(SynthesisResult {
        net,
        places,
        label_alphabet,
        regions_found: found.regions.len(),
        truncated: found.truncated,
    })
}
