//! Brute-force oracles and random instance generators shared by the
//! integration tests. Nothing here calls the library's own checkers.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ttsynth_core::ilp::{IlpModel, LinearConstraint, Relation};
use ttsynth_core::semantics::{PlaceBehavior, Run, StateGraph};
use ttsynth_core::{LabelledNet, MarkedPetriNet, Marking, PetriNet, Specification};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every vector in `{0..=k}^n`, last coordinate fastest.
pub fn grid(n: usize, k: u64) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=k).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

/// Rise of transition `t` of `net` when place `c` carries `r[offset + c]`.
fn rise(net: &LabelledNet, t: usize, r: &[u64], offset: usize) -> i64 {
    let p = net.net();
    let mut sum = 0i64;
    for c in 0..p.places().len() {
        sum += p.weight_out(t, c) as i64 * r[offset + c] as i64;
        sum -= p.weight_in(c, t) as i64 * r[offset + c] as i64;
    }
    sum
}

fn initial_sum(net: &LabelledNet, r: &[u64], offset: usize) -> i64 {
    net.net()
        .places()
        .iter()
        .enumerate()
        .map(|(c, id)| net.initial().get(id) as i64 * r[offset + c] as i64)
        .sum()
}

/// Same rise for equal labels across all nets, same initial sum in all nets,
/// and optionally zero on the given global place indices.
pub fn is_region(spec: &Specification, r: &[u64], zeros: &[usize]) -> bool {
    if zeros.iter().any(|&i| r[i] != 0) {
        return false;
    }
    let mut rise_of: HashMap<&str, i64> = HashMap::new();
    let mut init: Option<i64> = None;
    let mut offset = 0;
    for net in spec.nets() {
        for t in 0..net.net().transitions().len() {
            let value = rise(net, t, r, offset);
            if *rise_of.entry(net.label_of(t)).or_insert(value) != value {
                return false;
            }
        }
        let s = initial_sum(net, r, offset);
        if *init.get_or_insert(s) != s {
            return false;
        }
        offset += net.net().places().len();
    }
    true
}

/// Componentwise-minimal nonzero points among `points`.
pub fn minimal_nonzero(points: &[Vec<u64>]) -> BTreeSet<Vec<u64>> {
    let nonzero: Vec<&Vec<u64>> = points.iter().filter(|v| v.iter().any(|&x| x > 0)).collect();
    nonzero
        .iter()
        .filter(|v| {
            !nonzero
                .iter()
                .any(|w| w != *v && w.iter().zip(v.iter()).all(|(a, b)| a <= b))
        })
        .map(|v| (*v).clone())
        .collect()
}

/// Minimal nonzero regions up to `k`, by exhaustive enumeration.
pub fn brute_force_minimal_regions(
    spec: &Specification,
    k: u64,
    zeros: &[usize],
) -> BTreeSet<Vec<u64>> {
    let n = spec.places().len();
    let feasible: Vec<Vec<u64>> = grid(n, k)
        .into_iter()
        .filter(|r| is_region(spec, r, zeros))
        .collect();
    minimal_nonzero(&feasible)
}

pub fn as_vector(spec: &Specification, m: &Marking) -> Vec<u64> {
    spec.places().iter().map(|p| m.get(p)).collect()
}

pub fn as_marking(spec: &Specification, v: &[u64]) -> Marking {
    spec.places().into_iter().zip(v.iter().copied()).collect()
}

/// A random labelled net with the given numbers of places and transitions.
pub fn random_net(
    rng: &mut ChaCha8Rng,
    places: usize,
    transitions: usize,
    labels: &[&str],
    max_weight: u64,
) -> LabelledNet {
    let pid: Vec<String> = (0..places).map(|i| format!("c{i}")).collect();
    let tid: Vec<String> = (0..transitions).map(|i| format!("e{i}")).collect();
    let mut b = PetriNet::builder()
        .places(pid.iter().cloned())
        .transitions(tid.iter().cloned());
    for p in &pid {
        for t in &tid {
            if rng.gen_bool(0.35) {
                b = b.arc(p.clone(), t.clone(), rng.gen_range(1..=max_weight));
            }
            if rng.gen_bool(0.35) {
                b = b.arc(t.clone(), p.clone(), rng.gen_range(1..=max_weight));
            }
        }
    }
    let mut m0 = Marking::new();
    for p in &pid {
        if rng.gen_bool(0.4) {
            m0.set(p.clone(), rng.gen_range(1..=2));
        }
    }
    let lab = (0..transitions)
        .map(|_| labels.choose(rng).unwrap().to_string())
        .collect();
    LabelledNet::with_labels(b.build().unwrap(), m0, lab).unwrap()
}

/// At most 3 nets, at most 6 places and 5 transitions in total.
pub fn random_spec(rng: &mut ChaCha8Rng) -> Specification {
    let nets = rng.gen_range(1..=3);
    let mut places_left: usize = rng.gen_range(nets..=6);
    let mut transitions_left: usize = rng.gen_range(1..=5);
    let mut out = Vec::new();
    for i in 0..nets {
        let remaining_nets = nets - i - 1;
        let p = if remaining_nets == 0 {
            places_left
        } else {
            rng.gen_range(1..=places_left - remaining_nets)
        };
        let t = if remaining_nets == 0 {
            transitions_left
        } else {
            rng.gen_range(0..=transitions_left)
        };
        places_left -= p;
        transitions_left -= t;
        out.push(random_net(rng, p, t, &["a", "b", "c"], 2));
    }
    Specification::new(out).unwrap()
}

/// Reachable state graph: a random spanning tree from `s0` plus extra arcs.
pub fn random_state_graph(rng: &mut ChaCha8Rng) -> StateGraph {
    let n = rng.gen_range(1..=6);
    let labels = ["a", "b", "c"];
    let mut arcs: Vec<(String, String, String)> = Vec::new();
    for s in 1..n {
        let from = rng.gen_range(0..s);
        arcs.push((
            format!("s{from}"),
            labels.choose(rng).unwrap().to_string(),
            format!("s{s}"),
        ));
    }
    let extra = rng.gen_range(0..=8usize.saturating_sub(arcs.len()));
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        arcs.push((
            format!("s{a}"),
            labels.choose(rng).unwrap().to_string(),
            format!("s{b}"),
        ));
    }
    StateGraph::new("s0", Vec::<String>::new(), arcs)
}

/// Classical subset regions: for every label, its arcs all enter, all leave,
/// or none cross the subset.
pub fn subset_regions(sg: &StateGraph) -> BTreeSet<BTreeSet<String>> {
    let states = sg.states();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << states.len()) {
        let inside = |s: &str| {
            let i = states.iter().position(|x| x == s).unwrap();
            mask >> i & 1 == 1
        };
        let mut kind: HashMap<&str, i8> = HashMap::new();
        let ok = sg.arcs().iter().all(|(a, l, b)| {
            let k = inside(b) as i8 - inside(a) as i8;
            *kind.entry(l.as_str()).or_insert(k) == k
        });
        if ok {
            out.insert(
                states
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, s)| s.clone())
                    .collect(),
            );
        }
    }
    out
}

/// Random acyclic run: forward pairs only, with shuffled event names.
pub fn random_run(rng: &mut ChaCha8Rng) -> Run {
    let n = rng.gen_range(1..=4);
    let mut names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    names.shuffle(rng);
    let events: Vec<(String, String)> = names
        .iter()
        .map(|v| (v.clone(), ["a", "b"].choose(rng).unwrap().to_string()))
        .collect();
    let mut order = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                order.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    Run::new(events, order).unwrap()
}

pub fn random_behavior(rng: &mut ChaCha8Rng, labels: &[&str], max: u64) -> PlaceBehavior {
    let mut pb = PlaceBehavior::new(rng.gen_range(0..=max));
    for l in labels {
        pb.set_consume(*l, rng.gen_range(0..=max));
        pb.set_produce(*l, rng.gen_range(0..=max));
    }
    pb
}

/// All ways to write `total` as an ordered sum of `parts` naturals.
pub fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Every valid token trail of an acyclic net in which each place has at
/// most one producing transition and every producer-less place is initially
/// marked (as for converted runs). Built transition by transition.
pub fn all_trails_of_acyclic_net(net: &LabelledNet, pb: &PlaceBehavior) -> BTreeSet<Vec<u64>> {
    let p = net.net();
    let np = p.places().len();
    let nt = p.transitions().len();
    let producer_less: Vec<usize> = (0..np)
        .filter(|&c| (0..nt).all(|t| p.weight_out(t, c) == 0))
        .collect();
    for &c in &producer_less {
        assert_eq!(
            net.initial().get(&p.places()[c]),
            1,
            "oracle needs unit initial marks on sources"
        );
    }
    assert!(net
        .initial()
        .iter()
        .all(|(id, _)| producer_less.contains(&p.place_idx(id).unwrap())));
    // Topological order of transitions.
    let mut order = Vec::new();
    let mut done = vec![false; nt];
    while order.len() < nt {
        let next = (0..nt)
            .find(|&t| {
                !done[t]
                    && (0..np).all(|c| {
                        p.weight_in(c, t) == 0
                            || (0..nt).all(|u| p.weight_out(u, c) == 0 || done[u])
                    })
            })
            .expect("acyclic");
        done[next] = true;
        order.push(next);
    }
    let mut out = BTreeSet::new();
    for start in compositions(pb.initial(), producer_less.len()) {
        let mut x = vec![0u64; np];
        for (&c, v) in producer_less.iter().zip(start) {
            x[c] = v;
        }
        extend_trail(net, pb, &order, 0, x, &mut out);
    }
    out
}

fn extend_trail(
    net: &LabelledNet,
    pb: &PlaceBehavior,
    order: &[usize],
    step: usize,
    x: Vec<u64>,
    out: &mut BTreeSet<Vec<u64>>,
) {
    let p = net.net();
    if step == order.len() {
        out.insert(x);
        return;
    }
    let t = order[step];
    let l = net.label_of(t);
    let inflow: u64 = (0..x.len()).map(|c| p.weight_in(c, t) * x[c]).sum();
    if inflow < pb.consume(l) {
        return;
    }
    let outflow = inflow + pb.produce(l) - pb.consume(l);
    let post: Vec<usize> = (0..x.len()).filter(|&c| p.weight_out(t, c) > 0).collect();
    assert!(
        post.iter().all(|&c| p.weight_out(t, c) == 1),
        "oracle needs unit weights"
    );
    for split in compositions(outflow, post.len()) {
        let mut y = x.clone();
        for (&c, v) in post.iter().zip(split) {
            y[c] = v;
        }
        extend_trail(net, pb, order, step + 1, y, out);
    }
}

/// Every valid compact token flow of an acyclic run, as (initial, between,
/// terminal) value vectors in event / order-pair order.
pub fn all_flows(run: &Run, pb: &PlaceBehavior) -> Vec<(Vec<u64>, Vec<u64>, Vec<u64>)> {
    let n = run.events().len();
    let order = run.order();
    let mut topo: Vec<usize> = Vec::new();
    while topo.len() < n {
        let v = (0..n)
            .find(|v| !topo.contains(v) && order.iter().all(|&(a, b)| b != *v || topo.contains(&a)))
            .expect("acyclic");
        topo.push(v);
    }
    let mut out = Vec::new();
    for initial in compositions(pb.initial(), n) {
        let mut between = vec![0u64; order.len()];
        let mut terminal = vec![0u64; n];
        flows_from(
            run,
            pb,
            &topo,
            0,
            &initial,
            &mut between,
            &mut terminal,
            &mut out,
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn flows_from(
    run: &Run,
    pb: &PlaceBehavior,
    topo: &[usize],
    step: usize,
    initial: &[u64],
    between: &mut Vec<u64>,
    terminal: &mut Vec<u64>,
    out: &mut Vec<(Vec<u64>, Vec<u64>, Vec<u64>)>,
) {
    if step == topo.len() {
        out.push((initial.to_vec(), between.clone(), terminal.clone()));
        return;
    }
    let v = topo[step];
    let l = run.label_of(v);
    let order = run.order();
    let inflow: u64 = initial[v]
        + order
            .iter()
            .enumerate()
            .filter(|(_, &(_, b))| b == v)
            .map(|(k, _)| between[k])
            .sum::<u64>();
    if inflow < pb.consume(l) {
        return;
    }
    let outflow = inflow + pb.produce(l) - pb.consume(l);
    let outgoing: Vec<usize> = order
        .iter()
        .enumerate()
        .filter(|(_, &(a, _))| a == v)
        .map(|(k, _)| k)
        .collect();
    for split in compositions(outflow, outgoing.len() + 1) {
        for (&k, &val) in outgoing.iter().zip(&split) {
            between[k] = val;
        }
        terminal[v] = split[outgoing.len()];
        flows_from(run, pb, topo, step + 1, initial, between, terminal, out);
    }
    for &k in &outgoing {
        between[k] = 0;
    }
    terminal[v] = 0;
}

/// A random bounded ILP and its exhaustive optimum, if feasible.
pub struct RandomIlp {
    pub model: IlpModel,
    pub upper: Vec<i64>,
    pub rows: Vec<(Vec<i64>, Relation, i64)>,
    pub cost: Vec<i64>,
}

pub fn random_ilp(rng: &mut ChaCha8Rng) -> RandomIlp {
    let n = rng.gen_range(1..=8);
    let upper: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=3)).collect();
    let mut model = IlpModel::new();
    let vars: Vec<_> = (0..n)
        .map(|i| model.add_variable(format!("x{i}"), 0, upper[i]).unwrap())
        .collect();
    // Most rows hold at a hidden point, so most models are feasible.
    let hidden: Vec<i64> = upper.iter().map(|&u| rng.gen_range(0..=u)).collect();
    let mut rows = Vec::new();
    for r in 0..rng.gen_range(0..=12) {
        let coef: Vec<i64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    rng.gen_range(-3..=3)
                } else {
                    0
                }
            })
            .collect();
        let rel = *[Relation::Le, Relation::Ge, Relation::Eq]
            .choose(rng)
            .unwrap();
        let at_hidden: i64 = coef.iter().zip(&hidden).map(|(a, b)| a * b).sum();
        let rhs = if rng.gen_bool(0.9) {
            match rel {
                Relation::Le => at_hidden + rng.gen_range(0..=2),
                Relation::Ge => at_hidden - rng.gen_range(0..=2),
                Relation::Eq => at_hidden,
            }
        } else {
            rng.gen_range(-4..=8)
        };
        let terms = vars.iter().copied().zip(coef.iter().copied());
        model
            .add_constraint(LinearConstraint::new(format!("r{r}"), terms, rel, rhs))
            .unwrap();
        rows.push((coef, rel, rhs));
    }
    let cost: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
    model
        .set_objective(vars.iter().copied().zip(cost.iter().copied()))
        .unwrap();
    RandomIlp {
        model,
        upper,
        rows,
        cost,
    }
}

/// Minimum objective over all integer points in the box, if any is feasible.
pub fn exhaustive_optimum(ilp: &RandomIlp) -> Option<i64> {
    let n = ilp.upper.len();
    let mut best: Option<i64> = None;
    let mut x = vec![0i64; n];
    loop {
        let ok = ilp.rows.iter().all(|(coef, rel, rhs)| {
            let lhs: i64 = coef.iter().zip(&x).map(|(a, b)| a * b).sum();
            match rel {
                Relation::Le => lhs <= *rhs,
                Relation::Ge => lhs >= *rhs,
                Relation::Eq => lhs == *rhs,
            }
        });
        if ok {
            let z: i64 = ilp.cost.iter().zip(&x).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(z, |b| b.min(z)));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            if x[i] < ilp.upper[i] {
                x[i] += 1;
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

/// Random net with distributed markings and weights up to 3.
pub fn random_pnml_net(rng: &mut ChaCha8Rng) -> LabelledNet {
    let places = rng.gen_range(1..=6);
    let transitions = rng.gen_range(0..=5);
    let net = random_net(rng, places, transitions, &["a", "b", "c", "d"], 3);
    let mut m0 = Marking::new();
    for p in net.net().places() {
        if rng.gen_bool(0.6) {
            m0.set(p.clone(), rng.gen_range(1..=4));
        }
    }
    LabelledNet::with_labels(net.net().clone(), m0, net.labels().to_vec()).unwrap()
}

/// Labelled reachability graph of a marked net: (state count, arcs).
pub fn labelled_reachability(
    net: &MarkedPetriNet,
    label: impl Fn(usize) -> String,
) -> (usize, BTreeSet<(usize, String, usize)>) {
    let rg = net.reachability_graph(10_000).unwrap();
    let arcs = rg.arcs.iter().map(|&(a, t, b)| (a, label(t), b)).collect();
    (rg.state_count(), arcs)
}

/// Isomorphism of two rooted labelled graphs (state 0 is the root), by
/// trying every bijection. Only for small graphs.
pub fn isomorphic(
    g: &(usize, BTreeSet<(usize, String, usize)>),
    h: &(usize, BTreeSet<(usize, String, usize)>),
) -> bool {
    if g.0 != h.0 || g.1.len() != h.1.len() {
        return false;
    }
    let n = g.0;
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 1, &mut |p| {
        g.1.iter()
            .all(|(a, l, b)| h.1.contains(&(p[*a], l.clone(), p[*b])))
    })
}

fn permutations(p: &mut Vec<usize>, i: usize, check: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if i >= p.len() {
        return check(p);
    }
    for j in i..p.len() {
        p.swap(i, j);
        if permutations(p, i + 1, check) {
            return true;
        }
        p.swap(i, j);
    }
    false
}

/// Structural isomorphism of two labelled nets with unique labels: the
/// transitions are matched by label, places by trying every bijection.
pub fn nets_isomorphic(a: &LabelledNet, b: &LabelledNet) -> bool {
    let (pa, pb) = (a.net(), b.net());
    if pa.places().len() != pb.places().len() || pa.transitions().len() != pb.transitions().len() {
        return false;
    }
    let tmap: Option<Vec<usize>> = (0..pa.transitions().len())
        .map(|t| b.labels().iter().position(|l| l == a.label_of(t)))
        .collect();
    let Some(tmap) = tmap else { return false };
    let n = pa.places().len();
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| {
        (0..n).all(|c| {
            a.initial().get(&pa.places()[c]) == b.initial().get(&pb.places()[p[c]])
                && (0..tmap.len()).all(|t| {
                    pa.weight_in(c, t) == pb.weight_in(p[c], tmap[t])
                        && pa.weight_out(t, c) == pb.weight_out(tmap[t], p[c])
                })
        })
    })
}

/// Global place indices of each net's unique sink place.
pub fn sink_indices(spec: &Specification) -> Vec<usize> {
    let mut offset = 0;
    let mut out = Vec::new();
    for net in spec.nets() {
        let sinks = net.net().sink_places();
        assert_eq!(sinks.len(), 1);
        out.push(offset + sinks[0]);
        offset += net.net().places().len();
    }
    out
}
