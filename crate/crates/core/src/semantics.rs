//! Validity of token trails on labelled nets, compact token flows on runs,
//! and enabledness of state graphs.
//!
//! A token trail is a marking `x` of a labelled net witnessing that one place
//! of a model can follow the net: every transition receives at least what
//! the place's label consumes, passes on exactly inflow plus the label's
//! effect, and the initially marked places carry the place's initial tokens.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::ilp::{IlpError, IlpModel, LinearConstraint, Relation, SolveOutcome, VarId};
use crate::net::{LabelledNet, MarkedPetriNet, Marking, NetError};
use crate::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Ilp(#[from] IlpError),
    #[error("unknown label '{0}'")]
    UnknownLabel(String),
    #[error("unknown event '{0}'")]
    UnknownEvent(String),
    #[error("duplicate event '{0}'")]
    DuplicateEvent(String),
    #[error("flow entry {0} is outside the run's domain")]
    MalformedFlow(String),
    #[error("unknown state '{0}'")]
    UnknownState(String),
    #[error("unreachable state '{0}'")]
    UnreachableState(String),
    #[error("value {0} too large for the solver")]
    TooLarge(u64),
}

pub type Result<T, E = SemanticsError> = std::result::Result<T, E>;

/// Arc weights and initial tokens of one model place, seen per label.
/// Labels not mentioned have weight 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceBehavior {
    consume: BTreeMap<String, u64>,
    produce: BTreeMap<String, u64>,
    initial: u64,
}

impl PlaceBehavior {
    pub fn new(initial: u64) -> Self {
        Self {
            initial,
            ..Self::default()
        }
    }

    pub fn with_consume(mut self, label: impl Into<String>, weight: u64) -> Self {
        self.set_consume(label, weight);
        self
    }

    pub fn with_produce(mut self, label: impl Into<String>, weight: u64) -> Self {
        self.set_produce(label, weight);
        self
    }

    pub fn set_consume(&mut self, label: impl Into<String>, weight: u64) {
        set_weight(&mut self.consume, label.into(), weight);
    }

    pub fn set_produce(&mut self, label: impl Into<String>, weight: u64) {
        set_weight(&mut self.produce, label.into(), weight);
    }

    pub fn consume(&self, label: &str) -> u64 {
        self.consume.get(label).copied().unwrap_or(0)
    }

    pub fn produce(&self, label: &str) -> u64 {
        self.produce.get(label).copied().unwrap_or(0)
    }

    pub fn initial(&self) -> u64 {
        self.initial
    }

    /// Labels with a non-zero consume or produce weight.
    pub fn connected_labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .consume
            .keys()
            .chain(self.produce.keys())
            .map(String::as_str)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Behaviour of place `place` of `model`, treating transition ids as labels.
    pub fn of_model_place(model: &MarkedPetriNet, place: usize) -> Self {
        let net = &model.net;
        let mut pb = PlaceBehavior::new(model.initial().get(&net.places()[place]));
        for (t, id) in net.transitions().iter().enumerate() {
            pb.set_consume(id.clone(), net.weight_in(place, t));
            pb.set_produce(id.clone(), net.weight_out(t, place));
        }
        pb
    }
}

fn set_weight(map: &mut BTreeMap<String, u64>, label: String, weight: u64) {
    if weight == 0 {
        map.remove(&label);
    } else {
        map.insert(label, weight);
    }
}

pub type TokenTrail = Marking;

/// The three validity conditions shared by token trails and compact token
/// flows, in checking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    /// Every transition (event) receives at least what its label consumes.
    Demand,
    /// Outflow equals inflow plus produce minus consume.
    Balance,
    /// The initial tokens sum to the place's initial marking.
    InitialSum,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Demand => "(I) demand",
            Condition::Balance => "(II) balance",
            Condition::InitialSum => "(III) initial sum",
        })
    }
}

/// First violated condition and, for the per-transition conditions, the
/// lowest-ordered transition (or event) where it fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub condition: Condition,
    pub witness: Option<String>,
}

fn check_support(net: &LabelledNet, x: &Marking) -> Result<()> {
    match x.support().find(|p| !net.net().has_place(p)) {
        Some(p) => Err(NetError::UnknownPlace(p.clone()).into()),
        None => Ok(()),
    }
}

fn weighted_sum(arcs: &[(usize, u64)], x: &[u64]) -> Result<u64> {
    arcs.iter()
        .try_fold(0u64, |acc, &(p, w)| {
            w.checked_mul(x[p]).and_then(|v| acc.checked_add(v))
        })
        .ok_or(SemanticsError::Net(NetError::Overflow))
}

fn transition(net: &LabelledNet, e: &str) -> Result<usize> {
    net.net()
        .transition_idx(e)
        .ok_or_else(|| NetError::UnknownTransition(e.to_string()).into())
}

/// `Σ F(c, e) · x(c)`.
pub fn inflow(net: &LabelledNet, x: &TokenTrail, e: &str) -> Result<u64> {
    check_support(net, x)?;
    let t = transition(net, e)?;
    weighted_sum(net.net().pre_arcs(t), &net.net().dense(x)?)
}

/// `Σ F(e, c) · x(c)`.
pub fn outflow(net: &LabelledNet, x: &TokenTrail, e: &str) -> Result<u64> {
    check_support(net, x)?;
    let t = transition(net, e)?;
    weighted_sum(net.net().post_arcs(t), &net.net().dense(x)?)
}

/// Outflow minus inflow.
pub fn rise(net: &LabelledNet, x: &TokenTrail, e: &str) -> Result<i128> {
    Ok(outflow(net, x, e)? as i128 - inflow(net, x, e)? as i128)
}

/// Initial token sum `Σ i0(c) · x(c)`.
pub fn initial_sum(net: &LabelledNet, x: &TokenTrail) -> Result<u64> {
    check_support(net, x)?;
    x.iter()
        .try_fold(0u64, |acc, (p, v)| {
            v.checked_mul(net.initial().get(p))
                .and_then(|s| acc.checked_add(s))
        })
        .ok_or(SemanticsError::Net(NetError::Overflow))
}

pub fn is_valid_token_trail(
    net: &LabelledNet,
    x: &TokenTrail,
    pb: &PlaceBehavior,
) -> Result<Verdict<Violation>> {
    check_support(net, x)?;
    let dense = net.net().dense(x)?;
    let n = net.net().transitions().len();
    let mut flows = Vec::with_capacity(n);
    for t in 0..n {
        flows.push((
            weighted_sum(net.net().pre_arcs(t), &dense)?,
            weighted_sum(net.net().post_arcs(t), &dense)?,
        ));
    }
    let violation = |condition, t: usize| {
        Ok(Verdict::Invalid(Violation {
            condition,
            witness: Some(net.net().transitions()[t].clone()),
        }))
    };
    for (t, &(inn, _)) in flows.iter().enumerate() {
        if inn < pb.consume(net.label_of(t)) {
            return violation(Condition::Demand, t);
        }
    }
    for (t, &(inn, out)) in flows.iter().enumerate() {
        let l = net.label_of(t);
        if out as i128 != inn as i128 + pb.produce(l) as i128 - pb.consume(l) as i128 {
            return violation(Condition::Balance, t);
        }
    }
    if initial_sum(net, x)? != pb.initial() {
        return Ok(Verdict::Invalid(Violation {
            condition: Condition::InitialSum,
            witness: None,
        }));
    }
    Ok(Verdict::Valid)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrailSearch {
    Found(TokenTrail),
    /// No valid trail has all components within the bound. This says nothing
    /// about trails with larger components.
    NoneWithinBound,
}

fn to_i64(v: u64) -> Result<i64> {
    i64::try_from(v).map_err(|_| SemanticsError::TooLarge(v))
}

/// Searches for a valid token trail with every component at most `bound`.
pub fn find_token_trail(net: &LabelledNet, pb: &PlaceBehavior, bound: u64) -> Result<TrailSearch> {
    let pnet = net.net();
    let mut model = IlpModel::new();
    let vars: Vec<VarId> = pnet
        .places()
        .iter()
        .map(|p| {
            model
                .add_variable(format!("x:{p}"), 0, to_i64(bound)?)
                .map_err(Into::into)
        })
        .collect::<Result<_>>()?;
    for (t, tid) in pnet.transitions().iter().enumerate() {
        let l = net.label_of(t);
        let pre = pnet
            .pre_arcs(t)
            .iter()
            .map(|&(p, w)| Ok((vars[p], to_i64(w)?)))
            .collect::<Result<Vec<_>>>()?;
        let post = pnet
            .post_arcs(t)
            .iter()
            .map(|&(p, w)| Ok((vars[p], to_i64(w)?)))
            .collect::<Result<Vec<_>>>()?;
        model.add_constraint(LinearConstraint::new(
            format!("demand:{tid}"),
            pre.iter().copied(),
            Relation::Ge,
            to_i64(pb.consume(l))?,
        ))?;
        let effect = to_i64(pb.produce(l))? - to_i64(pb.consume(l))?;
        let terms = post
            .iter()
            .copied()
            .chain(pre.iter().map(|&(v, w)| (v, -w)));
        model.add_constraint(LinearConstraint::new(
            format!("balance:{tid}"),
            terms,
            Relation::Eq,
            effect,
        ))?;
    }
    let init = net
        .initial()
        .iter()
        .map(|(p, c)| {
            Ok((
                vars[pnet.place_idx(p).expect("initial place exists")],
                to_i64(c)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    model.add_constraint(LinearConstraint::new(
        "initial",
        init,
        Relation::Eq,
        to_i64(pb.initial())?,
    ))?;
    Ok(match model.solve() {
        SolveOutcome::Infeasible => TrailSearch::NoneWithinBound,
        SolveOutcome::Optimal(s) => TrailSearch::Found(
            pnet.places()
                .iter()
                .cloned()
                .zip(s.values.iter().map(|&v| v as u64))
                .collect(),
        ),
    })
}

/// Search bound used when none is given: the initial tokens, plus everything
/// the net's transitions could produce once each, plus the largest demand.
pub fn default_trail_bound(net: &LabelledNet, pb: &PlaceBehavior) -> u64 {
    let alphabet = net.alphabet();
    let produced = alphabet
        .iter()
        .fold(0u64, |acc, l| acc.saturating_add(pb.produce(l)));
    let max_consume = alphabet.iter().map(|l| pb.consume(l)).max().unwrap_or(0);
    pb.initial()
        .saturating_add(produced.saturating_mul(net.net().transitions().len() as u64))
        .saturating_add(max_consume)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Enablement {
    /// One witness trail per model place, in place order.
    Enabled(Vec<(String, TokenTrail)>),
    NotShownWithinBound {
        place: String,
    },
}

/// Checks whether `spec_net` is in the net language of `model`, place by
/// place. Model transitions are identified with labels by id.
pub fn is_enabled(
    model: &MarkedPetriNet,
    spec_net: &LabelledNet,
    bound: Option<u64>,
) -> Result<Enablement> {
    for l in spec_net.alphabet() {
        if !model.net.has_transition(&l) {
            return Err(SemanticsError::UnknownLabel(l));
        }
    }
    let mut trails = Vec::new();
    for (p, pid) in model.net.places().iter().enumerate() {
        let pb = PlaceBehavior::of_model_place(model, p);
        let b = bound.unwrap_or_else(|| default_trail_bound(spec_net, &pb));
        match find_token_trail(spec_net, &pb, b)? {
            TrailSearch::Found(x) => trails.push((pid.clone(), x)),
            TrailSearch::NoneWithinBound => {
                return Ok(Enablement::NotShownWithinBound { place: pid.clone() })
            }
        }
    }
    Ok(Enablement::Enabled(trails))
}

/// A labelled relation over events whose transitive closure must be
/// irreflexive to describe a partial order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    events: Vec<String>,
    labels: Vec<String>,
    order: Vec<(usize, usize)>,
    index: HashMap<String, usize>,
}

impl Run {
    /// `events` are `(id, label)` pairs; `order` pairs reference event ids.
    /// Repeated order pairs are kept once.
    pub fn new<S: Into<String>>(
        events: impl IntoIterator<Item = (S, S)>,
        order: impl IntoIterator<Item = (S, S)>,
    ) -> Result<Self> {
        let mut run = Run {
            events: vec![],
            labels: vec![],
            order: vec![],
            index: HashMap::new(),
        };
        for (id, label) in events {
            let id = id.into();
            if run.index.insert(id.clone(), run.events.len()).is_some() {
                return Err(SemanticsError::DuplicateEvent(id));
            }
            run.events.push(id);
            run.labels.push(label.into());
        }
        for (a, b) in order {
            let (a, b) = (a.into(), b.into());
            let ia = *run.index.get(&a).ok_or(SemanticsError::UnknownEvent(a))?;
            let ib = *run.index.get(&b).ok_or(SemanticsError::UnknownEvent(b))?;
            if !run.order.contains(&(ia, ib)) {
                run.order.push((ia, ib));
            }
        }
        Ok(run)
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    pub fn label_of(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn event_idx(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Order pairs as event indices, in insertion order.
    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }
}

/// Token counts on the initial slots `(▶, v)`, on the order pairs `(v, v')`
/// and on the final slots `(v, ■)`. Missing entries are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompactTokenFlow {
    pub initial: BTreeMap<String, u64>,
    pub between: BTreeMap<(String, String), u64>,
    pub terminal: BTreeMap<String, u64>,
}

struct DenseFlow {
    initial: Vec<u64>,
    between: Vec<u64>,
    terminal: Vec<u64>,
}

fn dense_flow(run: &Run, x: &CompactTokenFlow) -> Result<DenseFlow> {
    let mut f = DenseFlow {
        initial: vec![0; run.events.len()],
        between: vec![0; run.order.len()],
        terminal: vec![0; run.events.len()],
    };
    for (v, &c) in &x.initial {
        let i = run
            .event_idx(v)
            .ok_or_else(|| SemanticsError::MalformedFlow(format!("(▶,{v})")))?;
        f.initial[i] = c;
    }
    for (v, &c) in &x.terminal {
        let i = run
            .event_idx(v)
            .ok_or_else(|| SemanticsError::MalformedFlow(format!("({v},■)")))?;
        f.terminal[i] = c;
    }
    for ((a, b), &c) in &x.between {
        let pair = run.event_idx(a).zip(run.event_idx(b));
        let k = pair
            .and_then(|p| run.order.iter().position(|&o| o == p))
            .ok_or_else(|| SemanticsError::MalformedFlow(format!("({a},{b})")))?;
        f.between[k] = c;
    }
    Ok(f)
}

pub fn is_valid_compact_token_flow(
    run: &Run,
    x: &CompactTokenFlow,
    pb: &PlaceBehavior,
) -> Result<Verdict<Violation>> {
    let f = dense_flow(run, x)?;
    let n = run.events.len();
    let overflow = || SemanticsError::Net(NetError::Overflow);
    let mut inflow: Vec<u64> = f.initial.clone();
    let mut outflow: Vec<u64> = f.terminal.clone();
    for (k, &(a, b)) in run.order.iter().enumerate() {
        inflow[b] = inflow[b].checked_add(f.between[k]).ok_or_else(overflow)?;
        outflow[a] = outflow[a].checked_add(f.between[k]).ok_or_else(overflow)?;
    }
    let violation = |condition, v: usize| {
        Ok(Verdict::Invalid(Violation {
            condition,
            witness: Some(run.events[v].clone()),
        }))
    };
    for v in 0..n {
        if inflow[v] < pb.consume(run.label_of(v)) {
            return violation(Condition::Demand, v);
        }
    }
    for v in 0..n {
        let l = run.label_of(v);
        if outflow[v] as i128 != inflow[v] as i128 + pb.produce(l) as i128 - pb.consume(l) as i128 {
            return violation(Condition::Balance, v);
        }
    }
    let total = f
        .initial
        .iter()
        .try_fold(0u64, |a, &c| a.checked_add(c))
        .ok_or_else(overflow)?;
    if total != pb.initial() {
        return Ok(Verdict::Invalid(Violation {
            condition: Condition::InitialSum,
            witness: None,
        }));
    }
    Ok(Verdict::Valid)
}

/// A rooted labelled transition graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    states: Vec<String>,
    initial: String,
    arcs: Vec<(String, String, String)>,
}

impl StateGraph {
    /// States are the listed ones plus every arc endpoint, in first-mention
    /// order after `initial`. Arcs form a set; repeats are dropped. Does not
    /// check reachability; see [`StateGraph::validate`].
    pub fn new<S: Into<String>>(
        initial: impl Into<String>,
        states: impl IntoIterator<Item = S>,
        arcs: impl IntoIterator<Item = (S, S, S)>,
    ) -> Self {
        let initial = initial.into();
        let mut sg = StateGraph {
            states: vec![initial.clone()],
            initial,
            arcs: vec![],
        };
        for s in states {
            sg.add_state(s.into());
        }
        for (a, l, b) in arcs {
            let arc = (a.into(), l.into(), b.into());
            sg.add_state(arc.0.clone());
            sg.add_state(arc.2.clone());
            if !sg.arcs.contains(&arc) {
                sg.arcs.push(arc);
            }
        }
        sg
    }

    fn add_state(&mut self, s: String) {
        if !self.states.contains(&s) {
            self.states.push(s);
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn arcs(&self) -> &[(String, String, String)] {
        &self.arcs
    }

    /// States not reachable from the initial state, in state order.
    pub fn unreachable_states(&self) -> Vec<String> {
        let mut seen: std::collections::HashSet<&str> = [self.initial.as_str()].into();
        let mut queue = VecDeque::from([self.initial.as_str()]);
        while let Some(s) = queue.pop_front() {
            for (a, _, b) in &self.arcs {
                if a == s && seen.insert(b.as_str()) {
                    queue.push_back(b);
                }
            }
        }
        self.states
            .iter()
            .filter(|s| !seen.contains(s.as_str()))
            .cloned()
            .collect()
    }

    /// Every state must be reachable from the initial state.
    pub fn validate(&self) -> Result<()> {
        match self.unreachable_states().into_iter().next() {
            Some(s) => Err(SemanticsError::UnreachableState(s)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateGraphFailure {
    #[error("label '{label}' is not a transition of the model")]
    UnknownTransition { label: String },
    #[error("'{label}' not enabled in the marking of state '{state}'")]
    NotEnabled { state: String, label: String },
    #[error("state '{state}' reached with two different markings")]
    Inconsistent { state: String },
    #[error("states '{first}' and '{second}' map to the same marking")]
    NotInjective { first: String, second: String },
    #[error("unreachable state '{state}'")]
    Unreachable { state: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateGraphCheck {
    /// The injective state-to-marking mapping `g`.
    Enabled(BTreeMap<String, Marking>),
    Fails(StateGraphFailure),
}

/// Maps the initial state to the initial marking and propagates markings
/// along arcs by firing, breadth first, arcs in graph order.
pub fn check_state_graph_enabled(
    model: &MarkedPetriNet,
    sg: &StateGraph,
) -> Result<StateGraphCheck> {
    let fail = |f| Ok(StateGraphCheck::Fails(f));
    for (_, l, _) in sg.arcs() {
        if !model.net.has_transition(l) {
            return fail(StateGraphFailure::UnknownTransition { label: l.clone() });
        }
    }
    if let Some(state) = sg.unreachable_states().into_iter().next() {
        return fail(StateGraphFailure::Unreachable { state });
    }
    let mut g: BTreeMap<String, Marking> = BTreeMap::new();
    g.insert(sg.initial().to_string(), model.initial().clone());
    let mut queue = VecDeque::from([sg.initial().to_string()]);
    while let Some(s) = queue.pop_front() {
        let m = g[&s].clone();
        for (a, l, b) in sg.arcs().iter().filter(|(a, _, _)| *a == s) {
            let next = match model.fire(&m, l) {
                Ok(next) => next,
                Err(NetError::NotEnabled(_)) => {
                    return fail(StateGraphFailure::NotEnabled {
                        state: a.clone(),
                        label: l.clone(),
                    })
                }
                Err(e) => return Err(e.into()),
            };
            match g.get(b) {
                Some(existing) if *existing != next => {
                    return fail(StateGraphFailure::Inconsistent { state: b.clone() })
                }
                Some(_) => {}
                None => {
                    g.insert(b.clone(), next);
                    queue.push_back(b.clone());
                }
            }
        }
    }
    let mut by_marking: HashMap<&Marking, &str> = HashMap::new();
    for s in sg.states() {
        if let Some(first) = by_marking.insert(&g[s], s) {
            return fail(StateGraphFailure::NotInjective {
                first: first.to_string(),
                second: s.clone(),
            });
        }
    }
    Ok(StateGraphCheck::Enabled(g))
}
