//! Place/transition nets: multisets, markings, the firing rule and bounded
//! reachability exploration.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("unknown transition '{0}'")]
    UnknownTransition(String),
    #[error("unknown place '{0}'")]
    UnknownPlace(String),
    #[error("transition '{0}' not enabled")]
    NotEnabled(String),
    #[error("state cap exceeded: more than {0} reachable markings")]
    StateCapExceeded(usize),
    #[error("duplicate identifier '{0}'")]
    DuplicateIdentifier(String),
    #[error("empty identifier")]
    EmptyIdentifier,
    #[error("arc weight must be at least 1 (arc {from} -> {to})")]
    ZeroWeight { from: String, to: String },
    #[error("arithmetic overflow")]
    Overflow,
    #[error("missing label for transition '{0}'")]
    MissingLabel(String),
    #[error("a specification needs at least one net")]
    EmptySpecification,
}

pub type Result<T, E = NetError> = std::result::Result<T, E>;

/// Finite multiset with non-negative counts. Zero counts are never stored,
/// so two multisets are equal iff they agree on every element.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset<K: Ord> {
    entries: BTreeMap<K, u64>,
}

impl<K: Ord> Default for Multiset<K> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<K: Ord + fmt::Debug> fmt::Debug for Multiset<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl<K: Ord + Clone> Multiset<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get<Q>(&self, key: &Q) -> u64
    where
        K: std::borrow::Borrow<Q>,
        Q: Ord + ?Sized,
    {
        self.entries.get(key).copied().unwrap_or(0)
    }

    /// Sets the count of `key`, removing it when `count` is zero.
    pub fn set(&mut self, key: K, count: u64) {
        if count == 0 {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, count);
        }
    }

    pub fn add(&mut self, key: K, count: u64) -> Result<()> {
        let current = self.get(&key);
        let next = current.checked_add(count).ok_or(NetError::Overflow)?;
        self.set(key, next);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, u64)> + '_ {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn support(&self) -> impl Iterator<Item = &K> + '_ {
        self.entries.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> Result<u64> {
        self.entries
            .values()
            .try_fold(0u64, |acc, &v| acc.checked_add(v))
            .ok_or(NetError::Overflow)
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.entries.iter().all(|(k, &v)| other.get(k) >= v)
    }
}

impl<K: Ord + Clone> FromIterator<(K, u64)> for Multiset<K> {
    fn from_iter<I: IntoIterator<Item = (K, u64)>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for (k, v) in iter {
            m.add(k, v).expect("multiset count overflow");
        }
        m
    }
}

/// A marking: a multiset over place identifiers.
pub type Marking = Multiset<String>;

impl Marking {
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, u64)>) -> Self {
        pairs.into_iter().map(|(k, v)| (k.into(), v)).collect()
    }
}

/// One entry of the arc multiset `W`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arc {
    PlaceToTransition { place: String, transition: String },
    TransitionToPlace { transition: String, place: String },
}

/// A place/transition net with ordered places and transitions.
///
/// Arcs are kept per transition as `(place index, weight)` lists sorted by
/// place index; weights are always at least 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<String>,
    place_index: HashMap<String, usize>,
    transition_index: HashMap<String, usize>,
    pre: Vec<Vec<(usize, u64)>>,
    post: Vec<Vec<(usize, u64)>>,
}

#[derive(Debug, Default, Clone)]
pub struct PetriNetBuilder {
    places: Vec<String>,
    transitions: Vec<String>,
    arcs: Vec<(String, String, u64)>,
}

impl PetriNetBuilder {
    pub fn place(mut self, id: impl Into<String>) -> Self {
        self.places.push(id.into());
        self
    }

    pub fn places<S: Into<String>>(mut self, ids: impl IntoIterator<Item = S>) -> Self {
        self.places.extend(ids.into_iter().map(Into::into));
        self
    }

    pub fn transition(mut self, id: impl Into<String>) -> Self {
        self.transitions.push(id.into());
        self
    }

    pub fn transitions<S: Into<String>>(mut self, ids: impl IntoIterator<Item = S>) -> Self {
        self.transitions.extend(ids.into_iter().map(Into::into));
        self
    }

    /// Adds an arc between a place and a transition (either direction).
    /// Repeated arcs between the same pair accumulate their weights.
    pub fn arc(mut self, from: impl Into<String>, to: impl Into<String>, weight: u64) -> Self {
        self.arcs.push((from.into(), to.into(), weight));
        self
    }

    pub fn build(self) -> Result<PetriNet> {
        let mut place_index = HashMap::new();
        let mut transition_index = HashMap::new();
        for (i, p) in self.places.iter().enumerate() {
            if p.is_empty() {
                return Err(NetError::EmptyIdentifier);
            }
            if place_index.insert(p.clone(), i).is_some() {
                return Err(NetError::DuplicateIdentifier(p.clone()));
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if t.is_empty() {
                return Err(NetError::EmptyIdentifier);
            }
            if place_index.contains_key(t) || transition_index.insert(t.clone(), i).is_some() {
                return Err(NetError::DuplicateIdentifier(t.clone()));
            }
        }
        let mut pre: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); self.transitions.len()];
        let mut post: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); self.transitions.len()];
        for (from, to, w) in self.arcs {
            if w == 0 {
                return Err(NetError::ZeroWeight { from, to });
            }
            let (slot, p, t) = match (place_index.get(&from), transition_index.get(&to)) {
                (Some(&p), Some(&t)) => (&mut pre, p, t),
                _ => match (transition_index.get(&from), place_index.get(&to)) {
                    (Some(&t), Some(&p)) => (&mut post, p, t),
                    _ => {
                        let missing = if place_index.contains_key(&from)
                            || transition_index.contains_key(&from)
                        {
                            to
                        } else {
                            from
                        };
                        return Err(NetError::UnknownPlace(missing));
                    }
                },
            };
            let e = slot[t].entry(p).or_insert(0);
            *e = e.checked_add(w).ok_or(NetError::Overflow)?;
        }
        Ok(PetriNet {
            places: self.places,
            transitions: self.transitions,
            place_index,
            transition_index,
            pre: pre.into_iter().map(|m| m.into_iter().collect()).collect(),
            post: post.into_iter().map(|m| m.into_iter().collect()).collect(),
        })
    }
}

impl PetriNet {
    pub fn builder() -> PetriNetBuilder {
        PetriNetBuilder::default()
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[String] {
        &self.transitions
    }

    pub fn place_idx(&self, id: &str) -> Option<usize> {
        self.place_index.get(id).copied()
    }

    pub fn transition_idx(&self, id: &str) -> Option<usize> {
        self.transition_index.get(id).copied()
    }

    pub fn has_place(&self, id: &str) -> bool {
        self.place_index.contains_key(id)
    }

    pub fn has_transition(&self, id: &str) -> bool {
        self.transition_index.contains_key(id)
    }

    fn require_transition(&self, t: &str) -> Result<usize> {
        self.transition_idx(t)
            .ok_or_else(|| NetError::UnknownTransition(t.to_string()))
    }

    /// Indexed preset of transition `t`: `(place index, weight)` pairs.
    pub fn pre_arcs(&self, t: usize) -> &[(usize, u64)] {
        &self.pre[t]
    }

    pub fn post_arcs(&self, t: usize) -> &[(usize, u64)] {
        &self.post[t]
    }

    pub fn preset(&self, t: &str) -> Result<Multiset<String>> {
        let i = self.require_transition(t)?;
        Ok(self.pre[i]
            .iter()
            .map(|&(p, w)| (self.places[p].clone(), w))
            .collect())
    }

    pub fn postset(&self, t: &str) -> Result<Multiset<String>> {
        let i = self.require_transition(t)?;
        Ok(self.post[i]
            .iter()
            .map(|&(p, w)| (self.places[p].clone(), w))
            .collect())
    }

    /// `W(p, t)`, zero when there is no arc.
    pub fn weight_in(&self, place: usize, t: usize) -> u64 {
        lookup(&self.pre[t], place)
    }

    /// `W(t, p)`, zero when there is no arc.
    pub fn weight_out(&self, t: usize, place: usize) -> u64 {
        lookup(&self.post[t], place)
    }

    /// Places with no outgoing arc (empty postset), in place order.
    pub fn sink_places(&self) -> Vec<usize> {
        let mut has_out = vec![false; self.places.len()];
        for pre in &self.pre {
            for &(p, _) in pre {
                has_out[p] = true;
            }
        }
        (0..self.places.len()).filter(|&p| !has_out[p]).collect()
    }

    /// The arc multiset `W`, in transition order (inputs before outputs).
    pub fn arcs(&self) -> Vec<(Arc, u64)> {
        let mut out = Vec::new();
        for (t, tid) in self.transitions.iter().enumerate() {
            for &(p, w) in &self.pre[t] {
                out.push((
                    Arc::PlaceToTransition {
                        place: self.places[p].clone(),
                        transition: tid.clone(),
                    },
                    w,
                ));
            }
            for &(p, w) in &self.post[t] {
                out.push((
                    Arc::TransitionToPlace {
                        transition: tid.clone(),
                        place: self.places[p].clone(),
                    },
                    w,
                ));
            }
        }
        out
    }

    /// Dense vector view of a marking, in place order.
    pub fn dense(&self, m: &Marking) -> Result<Vec<u64>> {
        let mut v = vec![0; self.places.len()];
        for (p, c) in m.iter() {
            let i = self
                .place_idx(p)
                .ok_or_else(|| NetError::UnknownPlace(p.clone()))?;
            v[i] = c;
        }
        Ok(v)
    }

    pub fn sparse(&self, v: &[u64]) -> Marking {
        self.places.iter().cloned().zip(v.iter().copied()).collect()
    }

    fn enabled_dense(&self, m: &[u64], t: usize) -> bool {
        self.pre[t].iter().all(|&(p, w)| m[p] >= w)
    }

    fn fire_dense(&self, m: &[u64], t: usize) -> Result<Vec<u64>> {
        let mut next = m.to_vec();
        for &(p, w) in &self.pre[t] {
            next[p] -= w;
        }
        for &(p, w) in &self.post[t] {
            next[p] = next[p].checked_add(w).ok_or(NetError::Overflow)?;
        }
        Ok(next)
    }
}

fn lookup(arcs: &[(usize, u64)], place: usize) -> u64 {
    arcs.binary_search_by_key(&place, |&(p, _)| p)
        .map(|i| arcs[i].1)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedPetriNet {
    pub net: PetriNet,
    initial: Marking,
}

impl MarkedPetriNet {
    pub fn new(net: PetriNet, initial: Marking) -> Result<Self> {
        if let Some(p) = initial.support().find(|p| !net.has_place(p)) {
            return Err(NetError::UnknownPlace(p.clone()));
        }
        Ok(Self { net, initial })
    }

    pub fn initial(&self) -> &Marking {
        &self.initial
    }

    pub fn enabled_transitions(&self, m: &Marking) -> Result<Vec<String>> {
        let dense = self.net.dense(m)?;
        Ok((0..self.net.transitions.len())
            .filter(|&t| self.net.enabled_dense(&dense, t))
            .map(|t| self.net.transitions[t].clone())
            .collect())
    }

    pub fn is_enabled(&self, m: &Marking, t: &str) -> Result<bool> {
        let i = self.net.require_transition(t)?;
        Ok(self.net.enabled_dense(&self.net.dense(m)?, i))
    }

    /// Fires `t` in `m`, returning `m - preset(t) + postset(t)`.
    pub fn fire(&self, m: &Marking, t: &str) -> Result<Marking> {
        let i = self.net.require_transition(t)?;
        let dense = self.net.dense(m)?;
        if !self.net.enabled_dense(&dense, i) {
            return Err(NetError::NotEnabled(t.to_string()));
        }
        Ok(self.net.sparse(&self.net.fire_dense(&dense, i)?))
    }

    /// Breadth-first exploration of the reachable markings. Fails once more
    /// than `state_cap` distinct markings have been discovered.
    pub fn reachability_graph(&self, state_cap: usize) -> Result<ReachabilityGraph> {
        let mut markings: Vec<Vec<u64>> = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut arcs = Vec::new();
        let m0 = self.net.dense(&self.initial)?;
        seen.insert(m0.clone(), 0);
        markings.push(m0);
        if markings.len() > state_cap {
            return Err(NetError::StateCapExceeded(state_cap));
        }
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            for t in 0..self.net.transitions.len() {
                if !self.net.enabled_dense(&markings[s], t) {
                    continue;
                }
                let next = self.net.fire_dense(&markings[s], t)?;
                let target = match seen.get(&next) {
                    Some(&i) => i,
                    None => {
                        let i = markings.len();
                        if i + 1 > state_cap {
                            return Err(NetError::StateCapExceeded(state_cap));
                        }
                        seen.insert(next.clone(), i);
                        markings.push(next);
                        queue.push_back(i);
                        i
                    }
                };
                arcs.push((s, t, target));
            }
        }
        Ok(ReachabilityGraph {
            markings: markings.iter().map(|m| self.net.sparse(m)).collect(),
            transitions: self.net.transitions.clone(),
            arcs,
        })
    }
}

/// Reachable markings (index 0 is the initial marking) and the firings
/// between them, as `(source, transition index, target)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityGraph {
    pub markings: Vec<Marking>,
    pub transitions: Vec<String>,
    pub arcs: Vec<(usize, usize, usize)>,
}

impl ReachabilityGraph {
    pub fn state_count(&self) -> usize {
        self.markings.len()
    }

    /// Arcs with transitions replaced by `label(transition index)`.
    pub fn labelled_arcs<F: Fn(usize) -> String>(&self, label: F) -> Vec<(usize, String, usize)> {
        self.arcs
            .iter()
            .map(|&(s, t, d)| (s, label(t), d))
            .collect()
    }
}

/// A marked net whose transitions carry (not necessarily distinct) labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelledNet {
    pub marked: MarkedPetriNet,
    labels: Vec<String>,
}

impl LabelledNet {
    /// `labels` maps transition ids to labels and must be total.
    pub fn new(net: PetriNet, initial: Marking, labels: &BTreeMap<String, String>) -> Result<Self> {
        let labels = net
            .transitions()
            .iter()
            .map(|t| {
                labels
                    .get(t)
                    .cloned()
                    .ok_or_else(|| NetError::MissingLabel(t.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            marked: MarkedPetriNet::new(net, initial)?,
            labels,
        })
    }

    /// Labels given positionally, one per transition.
    pub fn with_labels(net: PetriNet, initial: Marking, labels: Vec<String>) -> Result<Self> {
        if labels.len() != net.transitions().len() {
            let t = net
                .transitions()
                .get(labels.len())
                .cloned()
                .unwrap_or_default();
            return Err(NetError::MissingLabel(t));
        }
        Ok(Self {
            marked: MarkedPetriNet::new(net, initial)?,
            labels,
        })
    }

    /// Every transition labelled by its own id.
    pub fn identity(marked: MarkedPetriNet) -> Self {
        let labels = marked.net.transitions().to_vec();
        Self { marked, labels }
    }

    pub fn net(&self) -> &PetriNet {
        &self.marked.net
    }

    pub fn initial(&self) -> &Marking {
        self.marked.initial()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_of(&self, t: usize) -> &str {
        &self.labels[t]
    }

    pub fn label(&self, t: &str) -> Result<&str> {
        let i = self.net().require_transition(t)?;
        Ok(&self.labels[i])
    }

    /// Distinct labels in order of first appearance.
    pub fn alphabet(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in &self.labels {
            if !out.contains(l) {
                out.push(l.clone());
            }
        }
        out
    }

    /// The underlying net with transitions renamed to their labels. Fails if
    /// two transitions share a label.
    pub fn to_model(&self) -> Result<MarkedPetriNet> {
        let net = self.net();
        let mut b = PetriNet::builder().places(net.places().iter().cloned());
        b = b.transitions(self.labels.iter().cloned());
        for t in 0..net.transitions().len() {
            for &(p, w) in net.pre_arcs(t) {
                b = b.arc(net.places()[p].clone(), self.labels[t].clone(), w);
            }
            for &(p, w) in net.post_arcs(t) {
                b = b.arc(self.labels[t].clone(), net.places()[p].clone(), w);
            }
        }
        MarkedPetriNet::new(b.build()?, self.initial().clone())
    }

    /// Copy of this net with places and transitions renamed through `rename`.
    pub fn renamed<F: FnMut(&str) -> String>(&self, mut rename: F) -> Result<Self> {
        let net = self.net();
        let places: Vec<String> = net.places().iter().map(|p| rename(p)).collect();
        let transitions: Vec<String> = net.transitions().iter().map(|t| rename(t)).collect();
        let mut b = PetriNet::builder()
            .places(places.clone())
            .transitions(transitions.clone());
        for t in 0..transitions.len() {
            for &(p, w) in net.pre_arcs(t) {
                b = b.arc(places[p].clone(), transitions[t].clone(), w);
            }
            for &(p, w) in net.post_arcs(t) {
                b = b.arc(transitions[t].clone(), places[p].clone(), w);
            }
        }
        let initial = self
            .initial()
            .iter()
            .map(|(p, c)| {
                (
                    places[net.place_idx(p).expect("initial place exists")].clone(),
                    c,
                )
            })
            .collect();
        Self::with_labels(b.build()?, initial, self.labels.clone())
    }
}

/// A set of labelled nets whose identifiers are globally unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Specification {
    nets: Vec<LabelledNet>,
    final_overrides: BTreeMap<usize, String>,
}

impl Specification {
    /// Ingests nets in order. Identifiers that clash with an earlier net (or
    /// an earlier identifier of any kind) are renamed to `n<index>.<id>`,
    /// with the net index counted from 1.
    pub fn new(nets: Vec<LabelledNet>) -> Result<Self> {
        if nets.is_empty() {
            return Err(NetError::EmptySpecification);
        }
        let mut used: std::collections::HashSet<String> = Default::default();
        let mut out = Vec::with_capacity(nets.len());
        for (i, net) in nets.into_iter().enumerate() {
            let own: std::collections::HashSet<String> = net
                .net()
                .places()
                .iter()
                .chain(net.net().transitions())
                .cloned()
                .collect();
            let mut taken = used.clone();
            taken.extend(own.iter().cloned());
            let renamed = net.renamed(|id| {
                if !used.contains(id) {
                    return id.to_string();
                }
                let mut candidate = format!("n{}.{}", i + 1, id);
                while taken.contains(&candidate) {
                    candidate.push('\'');
                }
                taken.insert(candidate.clone());
                candidate
            })?;
            used.extend(renamed.net().places().iter().cloned());
            used.extend(renamed.net().transitions().iter().cloned());
            out.push(renamed);
        }
        Ok(Self {
            nets: out,
            final_overrides: BTreeMap::new(),
        })
    }

    /// Designates `place` as the final place of net `index`, overriding the
    /// structural detection used in discovery mode. `place` is the id as
    /// ingested (after any renaming).
    pub fn set_final_place(&mut self, index: usize, place: impl Into<String>) -> Result<()> {
        let place = place.into();
        match self.nets.get(index) {
            Some(n) if n.net().has_place(&place) => {
                self.final_overrides.insert(index, place);
                Ok(())
            }
            _ => Err(NetError::UnknownPlace(place)),
        }
    }

    pub fn final_overrides(&self) -> &BTreeMap<usize, String> {
        &self.final_overrides
    }

    pub fn nets(&self) -> &[LabelledNet] {
        &self.nets
    }

    /// All places of all nets, in ingestion order.
    pub fn places(&self) -> Vec<String> {
        self.nets
            .iter()
            .flat_map(|n| n.net().places().iter().cloned())
            .collect()
    }

    /// Labels in order of first appearance across nets.
    pub fn alphabet(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for n in &self.nets {
            for l in n.labels() {
                if !out.contains(l) {
                    out.push(l.clone());
                }
            }
        }
        out
    }

    /// `(net index, transition index)` pairs carrying `label`, in document order.
    pub fn transitions_with_label(&self, label: &str) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, n) in self.nets.iter().enumerate() {
            for (t, l) in n.labels().iter().enumerate() {
                if l == label {
                    out.push((i, t));
                }
            }
        }
        out
    }

    /// Restriction of a marking over all places to the places of net `index`.
    pub fn restrict(&self, r: &Marking, index: usize) -> Marking {
        let net = self.nets[index].net();
        r.iter()
            .filter(|(p, _)| net.has_place(p))
            .map(|(p, c)| (p.clone(), c))
            .collect()
    }
}
