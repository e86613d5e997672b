//! Translations of state graphs, runs and traces into labelled nets, so all
//! three kinds of behaviour feed the same synthesis pipeline.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::net::{LabelledNet, Marking, NetError, PetriNet};
use crate::semantics::{CompactTokenFlow, Run, SemanticsError, StateGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("not a partial order: the order relation has a cycle")]
    NotPartialOrder,
    #[error("empty trace")]
    EmptyTrace,
    #[error("identifier '{0}' is used both as an event and as a generated place")]
    IdClash(String),
}

pub type Result<T, E = ConvertError> = std::result::Result<T, E>;

/// A non-empty sequence of labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trace(Vec<String>);

impl Trace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(ConvertError::EmptyTrace);
        }
        Ok(Self(labels))
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Every state becomes a place, every arc `s -t-> s'` a transition labelled
/// `t` moving a token from `s` to `s'`; the initial state holds the token.
/// Transition ids have the form `s-t->s'`.
pub fn state_graph_to_labelled_net(sg: &StateGraph) -> Result<LabelledNet> {
    sg.validate()?;
    let mut used: HashSet<String> = sg.states().iter().cloned().collect();
    let mut builder = PetriNet::builder().places(sg.states().iter().cloned());
    let mut labels = Vec::new();
    for (s, t, s2) in sg.arcs() {
        let mut id = format!("{s}-{t}->{s2}");
        while used.contains(&id) {
            id.push('\'');
        }
        used.insert(id.clone());
        builder = builder
            .transition(id.clone())
            .arc(s.clone(), id.clone(), 1)
            .arc(id, s2.clone(), 1);
        labels.push(t.clone());
    }
    let initial = Marking::from_pairs([(sg.initial(), 1)]);
    Ok(LabelledNet::with_labels(builder.build()?, initial, labels)?)
}

/// Whether the transitive closure of the run's order is irreflexive, i.e.
/// the order graph has no cycle.
pub fn check_run_wellformed(run: &Run) -> bool {
    let n = run.events().len();
    let mut indegree = vec![0usize; n];
    for &(_, b) in run.order() {
        indegree[b] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut done = 0;
    while let Some(v) = ready.pop() {
        done += 1;
        for &(a, b) in run.order() {
            if a == v {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    ready.push(b);
                }
            }
        }
    }
    done == n
}

pub fn start_place(v: &str) -> String {
    format!("(▶,{v})")
}

pub fn order_place(v: &str, w: &str) -> String {
    format!("({v},{w})")
}

pub fn end_place(v: &str) -> String {
    format!("({v},■)")
}

/// Places `(▶,v)` for every event, `(v,v')` for every order pair and
/// `(v,■)` for every event; events become transitions with their own ids.
pub fn run_to_labelled_net(run: &Run) -> Result<LabelledNet> {
    if !check_run_wellformed(run) {
        return Err(ConvertError::NotPartialOrder);
    }
    let ev = run.events();
    let mut places: Vec<String> = ev.iter().map(|v| start_place(v)).collect();
    places.extend(
        run.order()
            .iter()
            .map(|&(a, b)| order_place(&ev[a], &ev[b])),
    );
    places.extend(ev.iter().map(|v| end_place(v)));
    if let Some(clash) = places.iter().find(|p| run.event_idx(p).is_some()) {
        return Err(ConvertError::IdClash(clash.clone()));
    }
    let mut builder = PetriNet::builder()
        .places(places)
        .transitions(ev.iter().cloned());
    for (i, v) in ev.iter().enumerate() {
        builder = builder
            .arc(start_place(v), v.clone(), 1)
            .arc(v.clone(), end_place(v), 1);
        for &(a, b) in run.order() {
            if b == i {
                builder = builder.arc(order_place(&ev[a], v), v.clone(), 1);
            }
            if a == i {
                builder = builder.arc(v.clone(), order_place(v, &ev[b]), 1);
            }
        }
    }
    let initial = Marking::from_pairs(ev.iter().map(|v| (start_place(v), 1)));
    let labels = (0..ev.len()).map(|i| run.label_of(i).to_string()).collect();
    Ok(LabelledNet::with_labels(builder.build()?, initial, labels)?)
}

/// The token trail on the converted run net carrying the same values as `flow`.
pub fn flow_to_trail(flow: &CompactTokenFlow) -> Marking {
    let mut x = Marking::new();
    for (v, &c) in &flow.initial {
        x.set(start_place(v), c);
    }
    for ((a, b), &c) in &flow.between {
        x.set(order_place(a, b), c);
    }
    for (v, &c) in &flow.terminal {
        x.set(end_place(v), c);
    }
    x
}

/// Inverse of [`flow_to_trail`] for markings of `run_to_labelled_net(run)`.
pub fn trail_to_flow(run: &Run, x: &Marking) -> Result<CompactTokenFlow> {
    let ev = run.events();
    let mut by_place: BTreeMap<String, (u8, usize)> = BTreeMap::new();
    for (i, v) in ev.iter().enumerate() {
        by_place.insert(start_place(v), (0, i));
        by_place.insert(end_place(v), (2, i));
    }
    for (k, &(a, b)) in run.order().iter().enumerate() {
        by_place.insert(order_place(&ev[a], &ev[b]), (1, k));
    }
    let mut flow = CompactTokenFlow::default();
    for (p, c) in x.iter() {
        match by_place.get(p) {
            Some(&(0, i)) => {
                flow.initial.insert(ev[i].clone(), c);
            }
            Some(&(1, k)) => {
                let (a, b) = run.order()[k];
                flow.between.insert((ev[a].clone(), ev[b].clone()), c);
            }
            Some(&(_, i)) => {
                flow.terminal.insert(ev[i].clone(), c);
            }
            None => return Err(NetError::UnknownPlace(p.clone()).into()),
        }
    }
    Ok(flow)
}

/// The chain `c0 -e1-> c1 -> … -en-> cn` with one token on `c0`.
pub fn trace_to_labelled_net(trace: &Trace) -> Result<LabelledNet> {
    let n = trace.len();
    let mut builder = PetriNet::builder().places((0..=n).map(|i| format!("c{i}")));
    for i in 1..=n {
        let e = format!("e{i}");
        builder = builder
            .transition(e.clone())
            .arc(format!("c{}", i - 1), e.clone(), 1)
            .arc(e, format!("c{i}"), 1);
    }
    Ok(LabelledNet::with_labels(
        builder.build()?,
        Marking::from_pairs([("c0", 1)]),
        trace.labels().to_vec(),
    )?)
}
