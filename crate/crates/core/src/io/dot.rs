use std::fmt::Write as _;

use crate::net::{Arc, LabelledNet};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: places are circles showing their token count (id as
/// external label), transitions are boxes showing their label. Arcs with
/// weight above one carry the weight.
pub fn export_dot(net: &LabelledNet) -> String {
    let pnet = net.net();
    let mut out = String::from("digraph net {\n  rankdir=LR;\n");
    for p in pnet.places() {
        let tokens = net.initial().get(p);
        let label = if tokens > 0 {
            tokens.to_string()
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "  {} [shape=circle, label={}, xlabel={}];",
            quote(&format!("p:{p}")),
            quote(&label),
            quote(p)
        );
    }
    for (i, t) in pnet.transitions().iter().enumerate() {
        let _ = writeln!(
            out,
            "  {} [shape=box, label={}];",
            quote(&format!("t:{t}")),
            quote(net.label_of(i))
        );
    }
    for (arc, weight) in pnet.arcs() {
        let (from, to) = match arc {
            Arc::PlaceToTransition { place, transition } => {
                (format!("p:{place}"), format!("t:{transition}"))
            }
            Arc::TransitionToPlace { transition, place } => {
                (format!("t:{transition}"), format!("p:{place}"))
            }
        };
        let _ = write!(out, "  {} -> {}", quote(&from), quote(&to));
        if weight > 1 {
            let _ = write!(out, " [label={}]", quote(&weight.to_string()));
        }
        out.push_str(";\n");
    }
    out.push_str("}\n");
    out
}
