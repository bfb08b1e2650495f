//! String-diagram export in Graphviz DOT.
//!
//! Each cell leaf of a composition tree becomes a box and each wire place
//! an edge labelled with the place. Wires start at the box producing the
//! place, or at the `in` boundary for unmarked inputs and pass-through
//! places, and end at every box that takes the place as an input, or at
//! the `out` boundary.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::decompose::CompositionTree;
use crate::net::{render_set, MarkedNet, PlaceId, PlaceSet};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum End {
    Input,
    Output,
    /// Index into [`Diagram::boxes`].
    Box(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wire {
    pub place: PlaceId,
    pub from: End,
    pub to: End,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    /// One label per cell leaf, left to right.
    pub boxes: Vec<String>,
    pub wires: Vec<Wire>,
}

impl Diagram {
    /// Distinct places carried by wires.
    pub fn wire_places(&self) -> PlaceSet {
        self.wires.iter().map(|w| w.place.clone()).collect()
    }
}

fn identity_places(t: &CompositionTree, out: &mut PlaceSet) {
    match t {
        CompositionTree::Identity(s) => out.extend(s.iter().cloned()),
        CompositionTree::Cell(_) => {}
        CompositionTree::Par(children) => children.iter().for_each(|c| identity_places(c, out)),
        CompositionTree::Seq(a, b) => {
            identity_places(a, out);
            identity_places(b, out);
        }
    }
}

fn box_label(k: usize, cell: &MarkedNet) -> String {
    format!(
        "C{} {}",
        k + 1,
        render_set(cell.net().transition_ids().map(|t| t.as_str()))
    )
}

pub fn diagram(tree: &CompositionTree) -> Diagram {
    let cells = tree.cells();
    let boxes = cells
        .iter()
        .enumerate()
        .map(|(k, c)| box_label(k, c))
        .collect();
    let outputs = tree.outputs();

    let mut places = tree.inputs();
    identity_places(tree, &mut places);
    for c in &cells {
        places.extend(c.outputs());
    }

    let mut wires = Vec::new();
    for p in places {
        let from = cells
            .iter()
            .position(|c| c.outputs().contains(&p))
            .map_or(End::Input, End::Box);
        let mut to: BTreeSet<End> = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.inputs().contains(&p))
            .map(|(k, _)| End::Box(k))
            .collect();
        if outputs.contains(&p) {
            to.insert(End::Output);
        }
        for end in to {
            wires.push(Wire {
                place: p.clone(),
                from: from.clone(),
                to: end,
            });
        }
    }
    Diagram { boxes, wires }
}

fn node_id(e: &End) -> String {
    match e {
        End::Input => "\"in\"".into(),
        End::Output => "\"out\"".into(),
        End::Box(k) => format!("c{}", k + 1),
    }
}

impl Diagram {
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph cellnet {\n  rankdir=LR;\n");
        s.push_str("  \"in\" [shape=point];\n  \"out\" [shape=point];\n");
        for (k, label) in self.boxes.iter().enumerate() {
            writeln!(s, "  c{} [shape=box, label=\"{label}\"];", k + 1).unwrap();
        }
        for w in &self.wires {
            writeln!(
                s,
                "  {} -> {} [label=\"{}\"];",
                node_id(&w.from),
                node_id(&w.to),
                w.place
            )
            .unwrap();
        }
        s.push_str("}\n");
        s
    }
}

pub fn export_diagram(tree: &CompositionTree) -> String {
    diagram(tree).to_dot()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::canonical_form;
    use crate::fixtures;

    fn places(ids: &[&str]) -> PlaceSet {
        ids.iter().map(|s| PlaceId::new(*s)).collect()
    }

    #[test]
    fn running_diagram() {
        let d = diagram(&canonical_form(&fixtures::running_marked()));
        assert_eq!(d.boxes, vec!["C1 {a,b}", "C2 {c,d}", "C3 {e,f,g,h}"]);
        assert_eq!(
            d.wire_places(),
            places(&["p1", "p10", "p4", "p5", "p6", "p7", "p8", "p9"])
        );
        let p4 = d.wires.iter().find(|w| w.place.as_str() == "p4").unwrap();
        assert_eq!((p4.from.clone(), p4.to.clone()), (End::Box(0), End::Box(2)));
        let p5 = d.wires.iter().find(|w| w.place.as_str() == "p5").unwrap();
        assert_eq!((p5.from.clone(), p5.to.clone()), (End::Box(0), End::Output));
    }

    #[test]
    fn two_cell_diagram() {
        let d = diagram(&canonical_form(&fixtures::two_cell_marked()));
        assert_eq!(d.boxes.len(), 2);
        assert_eq!(d.wire_places(), places(&["p4", "p5", "p6"]));
    }

    #[test]
    fn identity_net_has_only_wires() {
        let s = places(&["x", "y"]);
        let d = diagram(&canonical_form(&MarkedNet::identity(&s)));
        assert!(d.boxes.is_empty());
        assert_eq!(d.wires.len(), 2);
        assert!(d
            .wires
            .iter()
            .all(|w| w.from == End::Input && w.to == End::Output));
    }

    #[test]
    fn dot_text_is_stable() {
        let tree = canonical_form(&fixtures::two_cell_marked());
        let dot = export_diagram(&tree);
        assert_eq!(dot, export_diagram(&tree));
        assert!(dot.starts_with("digraph cellnet {"));
        assert!(dot.contains("c1 -> c2 [label=\"p4\"];"));
        assert_eq!(dot.matches("[shape=box").count(), 2);
    }
}
