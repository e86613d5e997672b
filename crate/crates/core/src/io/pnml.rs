//! The place/transition subset of PNML (2009 grammar).
//!
//! Pages are flattened. A transition's `name/text` is its label, defaulting
//! to its id. Tool-specific blocks of other tools are skipped with a warning;
//! our own carry the final-place marker and synthesized-place provenance.

use std::collections::HashSet;
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use super::{IoError, Result};
use crate::net::{LabelledNet, Marking, PetriNet};
use crate::synthesis::SynthesisResult;

pub const TOOL_NAME: &str = "ttsynth";
const TOOL_VERSION: &str = "1";
const PNML_NS: &str = "http://www.pnml.org/version-2009/grammar/pnml";
const PTNET_TYPE: &str = "http://www.pnml.org/version-2009/grammar/ptnet";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmlDocument {
    pub net: LabelledNet,
    /// Place carrying the final-place marker, if any.
    pub final_place: Option<String>,
    /// Things that were present but skipped.
    pub warnings: Vec<String>,
}

struct Parser<'a> {
    doc: &'a Document<'a>,
    warnings: Vec<String>,
    places: Vec<(String, u64)>,
    transitions: Vec<(String, String)>,
    arcs: Vec<(String, String, u64, Node<'a, 'a>)>,
    final_place: Option<String>,
}

impl<'a> Parser<'a> {
    fn line(&self, node: Node) -> u32 {
        self.doc.text_pos_at(node.range().start).row
    }

    fn err(&self, node: Node, message: impl Into<String>) -> IoError {
        IoError::Pnml {
            line: self.line(node),
            element: node.tag_name().name().to_string(),
            message: message.into(),
        }
    }

    fn warn(&mut self, node: Node, what: &str) {
        let line = self.line(node);
        self.warnings.push(format!(
            "line {line}: ignored {what} <{}>",
            node.tag_name().name()
        ));
    }

    fn id(&self, node: Node) -> Result<String> {
        match node.attribute("id") {
            Some(id) if !id.is_empty() => Ok(id.to_string()),
            _ => Err(self.err(node, "missing id attribute")),
        }
    }

    /// Decimal content of `<child><text>…</text></child>`, if the child exists.
    fn number(&self, node: Node, child: &str) -> Result<Option<u64>> {
        let Some(c) = node.children().find(|n| n.has_tag_name(child)) else {
            return Ok(None);
        };
        let text = text_of(c).ok_or_else(|| self.err(c, "missing <text>"))?;
        let value = text.trim();
        value
            .parse::<u64>()
            .map(Some)
            .map_err(|_| self.err(c, format!("'{value}' is not a non-negative integer")))
    }

    fn element(&mut self, node: Node<'a, 'a>) -> Result<()> {
        match node.tag_name().name() {
            "page" => {
                for child in node.children().filter(Node::is_element) {
                    self.element(child)?;
                }
            }
            "place" => self.place(node)?,
            "transition" => {
                let id = self.id(node)?;
                let label = match node.children().find(|n| n.has_tag_name("name")) {
                    Some(n) => text_of(n)
                        .map(|t| t.trim().to_string())
                        .ok_or_else(|| self.err(n, "missing <text>"))?,
                    None => id.clone(),
                };
                self.skip_extras(node, &["name"]);
                self.transitions.push((id, label));
            }
            "arc" => {
                let source = node
                    .attribute("source")
                    .ok_or_else(|| self.err(node, "missing source attribute"))?;
                let target = node
                    .attribute("target")
                    .ok_or_else(|| self.err(node, "missing target attribute"))?;
                let weight = self.number(node, "inscription")?.unwrap_or(1);
                if weight == 0 {
                    return Err(self.err(node, "arc weight must be positive"));
                }
                self.skip_extras(node, &["inscription"]);
                self.arcs
                    .push((source.to_string(), target.to_string(), weight, node));
            }
            "referencePlace" | "referenceTransition" => {
                return Err(self.err(node, "reference nodes are not supported"))
            }
            "name" | "graphics" => {}
            "toolspecific" => self.warn(node, "tool-specific element"),
            _ => self.warn(node, "element"),
        }
        Ok(())
    }

    fn place(&mut self, node: Node<'a, 'a>) -> Result<()> {
        let id = self.id(node)?;
        let tokens = self.number(node, "initialMarking")?.unwrap_or(0);
        for ts in node.children().filter(|n| n.has_tag_name("toolspecific")) {
            if ts.attribute("tool") != Some(TOOL_NAME) {
                self.warn(ts, "tool-specific element");
                continue;
            }
            for marker in ts.children().filter(Node::is_element) {
                match marker.tag_name().name() {
                    "finalPlace" => {
                        if self.final_place.is_some() {
                            return Err(self.err(marker, "more than one final place"));
                        }
                        self.final_place = Some(id.clone());
                    }
                    "region" => {}
                    _ => self.warn(marker, "tool-specific element"),
                }
            }
        }
        self.skip_extras(node, &["initialMarking", "toolspecific"]);
        self.places.push((id, tokens));
        Ok(())
    }

    /// Warns about unexpected children of a node.
    fn skip_extras(&mut self, node: Node, known: &[&str]) {
        for child in node.children().filter(Node::is_element) {
            let name = child.tag_name().name();
            if known.contains(&name) || name == "graphics" || name == "name" {
                continue;
            }
            if name == "toolspecific" {
                self.warn(child, "tool-specific element");
            } else {
                self.warn(child, "element");
            }
        }
    }
}

fn text_of<'a>(node: Node<'a, 'a>) -> Option<&'a str> {
    node.children()
        .find(|n| n.has_tag_name("text"))
        .map(|t| t.text().unwrap_or(""))
}

pub fn parse_pnml(input: &str) -> Result<PnmlDocument> {
    let doc = Document::parse(input).map_err(|e| IoError::Xml(e.to_string()))?;
    let root = doc.root_element();
    let mut p = Parser {
        doc: &doc,
        warnings: vec![],
        places: vec![],
        transitions: vec![],
        arcs: vec![],
        final_place: None,
    };
    if !root.has_tag_name("pnml") {
        return Err(p.err(root, "expected <pnml> root element"));
    }
    let nets: Vec<Node> = root.children().filter(|n| n.has_tag_name("net")).collect();
    let net = match nets.as_slice() {
        [net] => *net,
        [] => return Err(p.err(root, "no <net> element")),
        [_, second, ..] => return Err(p.err(*second, "more than one <net> element")),
    };
    if net.attribute("type").is_some_and(|t| t != PTNET_TYPE) {
        p.warnings.push(format!(
            "line {}: net type '{}' read as a place/transition net",
            p.line(net),
            net.attribute("type").unwrap_or_default()
        ));
    }
    for child in net.children().filter(Node::is_element) {
        p.element(child)?;
    }

    let place_ids: HashSet<&str> = p.places.iter().map(|(id, _)| id.as_str()).collect();
    let transition_ids: HashSet<&str> = p.transitions.iter().map(|(id, _)| id.as_str()).collect();
    let mut builder = PetriNet::builder()
        .places(p.places.iter().map(|(id, _)| id.clone()))
        .transitions(p.transitions.iter().map(|(id, _)| id.clone()));
    for (source, target, weight, node) in &p.arcs {
        let ok = (place_ids.contains(source.as_str()) && transition_ids.contains(target.as_str()))
            || (transition_ids.contains(source.as_str()) && place_ids.contains(target.as_str()));
        if !ok {
            return Err(p.err(
                *node,
                format!("arc {source} -> {target} does not connect a place and a transition"),
            ));
        }
        builder = builder.arc(source.clone(), target.clone(), *weight);
    }
    let initial = Marking::from_pairs(p.places.iter().map(|(id, c)| (id.clone(), *c)));
    let labels = p.transitions.iter().map(|(_, l)| l.clone()).collect();
    let labelled = LabelledNet::with_labels(builder.build()?, initial, labels)?;
    Ok(PnmlDocument {
        net: labelled,
        final_place: p.final_place,
        warnings: p.warnings,
    })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn fresh(base: &str, used: &mut HashSet<String>) -> String {
    let mut id = base.to_string();
    let mut n = 1;
    while used.contains(&id) {
        n += 1;
        id = format!("{base}{n}");
    }
    used.insert(id.clone());
    id
}

/// Per-place extras written into our tool-specific block.
struct Extras<'a> {
    final_place: Option<&'a str>,
    regions: Vec<Option<String>>,
}

fn write(net: &LabelledNet, extras: &Extras) -> String {
    let pnet = net.net();
    let mut used: HashSet<String> = pnet
        .places()
        .iter()
        .chain(pnet.transitions())
        .cloned()
        .collect();
    let net_id = fresh("net", &mut used);
    let page_id = fresh("page", &mut used);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<pnml xmlns=\"{PNML_NS}\">");
    let _ = writeln!(out, "  <net id=\"{net_id}\" type=\"{PTNET_TYPE}\">");
    let _ = writeln!(out, "    <page id=\"{page_id}\">");
    for (i, place) in pnet.places().iter().enumerate() {
        let _ = writeln!(out, "      <place id=\"{}\">", escape(place));
        let tokens = net.initial().get(place);
        if tokens > 0 {
            let _ = writeln!(
                out,
                "        <initialMarking><text>{tokens}</text></initialMarking>"
            );
        }
        let is_final = extras.final_place == Some(place.as_str());
        let region = extras.regions.get(i).and_then(Option::as_ref);
        if is_final || region.is_some() {
            let _ = writeln!(
                out,
                "        <toolspecific tool=\"{TOOL_NAME}\" version=\"{TOOL_VERSION}\">"
            );
            if is_final {
                out.push_str("          <finalPlace/>\n");
            }
            if let Some(r) = region {
                let _ = writeln!(out, "          <region>{}</region>", escape(r));
            }
            out.push_str("        </toolspecific>\n");
        }
        out.push_str("      </place>\n");
    }
    for (t, id) in pnet.transitions().iter().enumerate() {
        let _ = writeln!(out, "      <transition id=\"{}\">", escape(id));
        let _ = writeln!(
            out,
            "        <name><text>{}</text></name>",
            escape(net.label_of(t))
        );
        out.push_str("      </transition>\n");
    }
    for (n, (arc, weight)) in pnet.arcs().iter().enumerate() {
        let (source, target) = match arc {
            crate::net::Arc::PlaceToTransition { place, transition } => (place, transition),
            crate::net::Arc::TransitionToPlace { transition, place } => (transition, place),
        };
        let id = fresh(&format!("a{}", n + 1), &mut used);
        let _ = write!(
            out,
            "      <arc id=\"{}\" source=\"{}\" target=\"{}\">",
            escape(&id),
            escape(source),
            escape(target)
        );
        if *weight > 1 {
            let _ = write!(
                out,
                "\n        <inscription><text>{weight}</text></inscription>\n      "
            );
        }
        out.push_str("</arc>\n");
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    out
}

pub fn write_pnml(net: &LabelledNet) -> String {
    write(
        net,
        &Extras {
            final_place: None,
            regions: vec![],
        },
    )
}

/// Like [`write_pnml`], keeping the final-place marker.
pub fn write_pnml_document(doc: &PnmlDocument) -> String {
    write(
        &doc.net,
        &Extras {
            final_place: doc.final_place.as_deref(),
            regions: vec![],
        },
    )
}

/// Writes a synthesized net with each place annotated by its source region,
/// as space-separated `place=count` pairs.
pub fn write_synthesis_pnml(result: &SynthesisResult) -> String {
    let regions = result
        .places
        .iter()
        .map(|p| {
            let pairs: Vec<String> = p
                .source_region
                .marking
                .iter()
                .map(|(place, c)| format!("{place}={c}"))
                .collect();
            Some(pairs.join(" "))
        })
        .collect();
    write(
        &LabelledNet::identity(result.net.clone()),
        &Extras {
            final_place: None,
            regions,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{e_dup, e_seq};

    const SMALL: &str = r#"<?xml version="1.0"?>
<pnml xmlns="http://www.pnml.org/version-2009/grammar/pnml">
  <net id="n" type="http://www.pnml.org/version-2009/grammar/ptnet">
    <page id="pg">
      <place id="c0"><initialMarking><text> 1 </text></initialMarking></place>
      <place id="c1"/>
      <transition id="e_a"><name><text>a</text></name></transition>
      <arc id="x" source="c0" target="e_a"/>
    </page>
  </net>
</pnml>"#;

    #[test]
    fn parses_a_small_document() {
        let doc = parse_pnml(SMALL).unwrap();
        assert_eq!(doc.net.net().places(), ["c0", "c1"]);
        assert_eq!(doc.net.labels(), ["a"]);
        assert_eq!(doc.net.initial(), &Marking::from_pairs([("c0", 1)]));
        assert_eq!(doc.net.net().weight_in(0, 0), 1);
        assert!(doc.warnings.is_empty());
    }

    #[test]
    fn shared_names_are_shared_labels() {
        let doc = parse_pnml(&write_pnml(&e_dup())).unwrap();
        assert_eq!(doc.net.labels(), ["a", "a"]);
        assert_eq!(doc.net.net().transitions(), ["e1", "e2"]);
    }

    #[test]
    fn missing_name_means_id_label() {
        let doc = parse_pnml(&SMALL.replace("<name><text>a</text></name>", "")).unwrap();
        assert_eq!(doc.net.labels(), ["e_a"]);
    }

    #[test]
    fn writes_the_expected_shape() {
        let text = write_pnml(&e_seq());
        assert_eq!(text.matches("<place ").count(), 3);
        assert_eq!(text.matches("<transition ").count(), 2);
        assert_eq!(text.matches("<arc ").count(), 4);
        assert_eq!(text.matches("<initialMarking>").count(), 1);
        assert_eq!(write_pnml(&e_seq()), text);

        let weighted = PetriNet::builder()
            .places(["p"])
            .transition("t")
            .arc("p", "t", 2)
            .build()
            .unwrap();
        let weighted =
            LabelledNet::with_labels(weighted, Marking::new(), vec!["a".into()]).unwrap();
        let text = write_pnml(&weighted);
        assert!(text.contains("<inscription><text>2</text></inscription>"));
        assert!(!text.contains("initialMarking"));
    }

    #[test]
    fn rejects_bad_input() {
        let negative = SMALL.replace("<text> 1 </text>", "<text>-1</text>");
        assert!(matches!(
            parse_pnml(&negative),
            Err(IoError::Pnml { line: 5, .. })
        ));
        let fraction = SMALL.replace("<text> 1 </text>", "<text>1.5</text>");
        assert!(parse_pnml(&fraction).is_err());
        let dangling = SMALL.replace("target=\"e_a\"", "target=\"nowhere\"");
        let err = parse_pnml(&dangling).unwrap_err().to_string();
        assert!(err.contains("nowhere"), "{err}");
        assert!(matches!(parse_pnml("<pnml>"), Err(IoError::Xml(_))));
        let reference = SMALL.replace(
            "<place id=\"c1\"/>",
            "<referencePlace id=\"r\" ref=\"c0\"/>",
        );
        assert!(parse_pnml(&reference).is_err());
    }

    #[test]
    fn foreign_tool_blocks_warn() {
        let foreign = SMALL.replace(
            "<place id=\"c1\"/>",
            "<place id=\"c1\"><toolspecific tool=\"other\" version=\"2\"><x/></toolspecific></place>",
        );
        let doc = parse_pnml(&foreign).unwrap();
        assert_eq!(doc.warnings.len(), 1);
        assert!(doc.warnings[0].contains("tool-specific"));
    }

    #[test]
    fn final_place_marker_round_trips() {
        let doc = PnmlDocument {
            net: e_seq(),
            final_place: Some("c2".into()),
            warnings: vec![],
        };
        let back = parse_pnml(&write_pnml_document(&doc)).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn escapes_identifiers() {
        let odd = PetriNet::builder()
            .places(["<p&q>"])
            .transition("t\"1")
            .arc("<p&q>", "t\"1", 1)
            .build()
            .unwrap();
        let odd =
            LabelledNet::with_labels(odd, Marking::from_pairs([("<p&q>", 3)]), vec!["a'b".into()])
                .unwrap();
        assert_eq!(parse_pnml(&write_pnml(&odd)).unwrap().net, odd);
    }
}
