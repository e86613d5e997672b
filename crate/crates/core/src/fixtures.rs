//! Small hand-checkable labelled nets used throughout tests and examples.

use crate::net::{LabelledNet, Marking, PetriNet};

fn chain(places: [&str; 3], transitions: [&str; 2], labels: [&str; 2]) -> LabelledNet {
    let net = PetriNet::builder()
        .places(places)
        .transitions(transitions)
        .arc(places[0], transitions[0], 1)
        .arc(transitions[0], places[1], 1)
        .arc(places[1], transitions[1], 1)
        .arc(transitions[1], places[2], 1)
        .build()
        .expect("fixture is well-formed");
    LabelledNet::with_labels(
        net,
        Marking::from_pairs([(places[0], 1)]),
        labels.iter().map(|s| s.to_string()).collect(),
    )
    .expect("fixture is well-formed")
}

fn single(p0: &str, t: &str, p1: &str, label: &str) -> LabelledNet {
    let net = PetriNet::builder()
        .places([p0, p1])
        .transition(t)
        .arc(p0, t, 1)
        .arc(t, p1, 1)
        .build()
        .expect("fixture is well-formed");
    LabelledNet::with_labels(net, Marking::from_pairs([(p0, 1)]), vec![label.to_string()])
        .expect("fixture is well-formed")
}

/// `c0 -> e_a -> c1 -> e_b -> c2`, one token on `c0`, labels `a`, `b`.
pub fn e_seq() -> LabelledNet {
    chain(["c0", "c1", "c2"], ["e_a", "e_b"], ["a", "b"])
}

/// `c0 -> e1 -> c1 -> e2 -> c2`, one token on `c0`, both transitions labelled `a`.
pub fn e_dup() -> LabelledNet {
    chain(["c0", "c1", "c2"], ["e1", "e2"], ["a", "a"])
}

/// `d0 -> f_a -> d1`, one token on `d0`.
pub fn e_two_a() -> LabelledNet {
    single("d0", "f_a", "d1", "a")
}

/// `g0 -> h_a -> g1`, one token on `g0`.
pub fn e_two_b() -> LabelledNet {
    single("g0", "h_a", "g1", "a")
}
