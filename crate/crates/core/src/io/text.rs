//! Trace files (one whitespace-separated trace per line) and JSON state
//! graphs and runs.

use serde::{Deserialize, Serialize};

use super::{IoError, Result};
use crate::convert::Trace;
use crate::semantics::{Run, StateGraph};

/// Blank lines and lines starting with `#` are skipped.
pub fn parse_traces(input: &str) -> Result<Vec<Trace>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(Trace::new(line.split_whitespace())?);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SgArc {
    from: String,
    label: String,
    to: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SgFile {
    initial: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    states: Vec<String>,
    #[serde(default)]
    arcs: Vec<SgArc>,
}

/// `{"initial": "s0", "arcs": [{"from": "s0", "label": "a", "to": "s1"}]}`,
/// optionally with `"states"` for states without arcs. Every state must be
/// reachable from the initial one.
pub fn parse_state_graph(input: &str) -> Result<StateGraph> {
    let file: SgFile = serde_json::from_str(input).map_err(|e| IoError::Json(e.to_string()))?;
    let sg = StateGraph::new(
        file.initial,
        file.states,
        file.arcs.into_iter().map(|a| (a.from, a.label, a.to)),
    );
    sg.validate()?;
    Ok(sg)
}

pub fn write_state_graph(sg: &StateGraph) -> String {
    let file = SgFile {
        initial: sg.initial().to_string(),
        states: sg.states().to_vec(),
        arcs: sg
            .arcs()
            .iter()
            .map(|(from, label, to)| SgArc {
                from: from.clone(),
                label: label.clone(),
                to: to.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes") + "\n"
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunEvent {
    id: String,
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    events: Vec<RunEvent>,
    #[serde(default)]
    order: Vec<(String, String)>,
}

/// `{"events": [{"id": "v1", "label": "a"}], "order": [["v1", "v2"]]}`.
/// Acyclicity is checked when the run is converted, not here.
pub fn parse_run(input: &str) -> Result<Run> {
    let file: RunFile = serde_json::from_str(input).map_err(|e| IoError::Json(e.to_string()))?;
    Ok(Run::new(
        file.events.into_iter().map(|e| (e.id, e.label)),
        file.order,
    )?)
}

pub fn write_run(run: &Run) -> String {
    let ev = run.events();
    let file = RunFile {
        events: ev
            .iter()
            .enumerate()
            .map(|(i, id)| RunEvent {
                id: id.clone(),
                label: run.label_of(i).to_string(),
            })
            .collect(),
        order: run
            .order()
            .iter()
            .map(|&(a, b)| (ev[a].clone(), ev[b].clone()))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traces() {
        let t = parse_traces("a b\na a\n").unwrap();
        assert_eq!(
            t,
            vec![
                Trace::new(["a", "b"]).unwrap(),
                Trace::new(["a", "a"]).unwrap()
            ]
        );
        assert_eq!(
            parse_traces("# comment\n\na\n").unwrap(),
            vec![Trace::new(["a"]).unwrap()]
        );
        assert!(parse_traces("").unwrap().is_empty());
        assert_eq!(
            parse_traces("  x\t y  \r\n").unwrap()[0].labels(),
            ["x", "y"]
        );
    }

    #[test]
    fn state_graphs() {
        let sg =
            parse_state_graph(r#"{"initial":"s0","arcs":[{"from":"s0","label":"a","to":"s1"}]}"#)
                .unwrap();
        assert_eq!(sg.states(), ["s0", "s1"]);
        let lone = parse_state_graph(r#"{"initial":"s0","arcs":[]}"#).unwrap();
        assert_eq!(lone.states(), ["s0"]);
        let island = r#"{"initial":"s0","arcs":[{"from":"s1","label":"a","to":"s2"}]}"#;
        let err = parse_state_graph(island).unwrap_err();
        assert!(err.to_string().contains("unreachable state"));
        assert!(matches!(parse_state_graph("{"), Err(IoError::Json(_))));
        assert_eq!(parse_state_graph(&write_state_graph(&sg)).unwrap(), sg);
    }

    #[test]
    fn runs() {
        let run = parse_run(
            r#"{"events":[{"id":"v1","label":"a"},{"id":"v2","label":"b"}],"order":[["v1","v2"]]}"#,
        )
        .unwrap();
        assert_eq!(run.events(), ["v1", "v2"]);
        assert_eq!(run.order(), [(0, 1)]);
        assert_eq!(parse_run(&write_run(&run)).unwrap(), run);
        assert!(parse_run(r#"{"events":[],"order":[["x","y"]]}"#).is_err());
    }
}
