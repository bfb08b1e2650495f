//! Structural branching cells.
//!
//! The cell preorder is the reflexive-transitive closure of the flow
//! relation together with the inverse of the pre-condition relation, so a
//! transition and each of its pre-places are mutually reachable. Every
//! equivalence class containing a transition, extended with the post-places
//! of its transitions, is a cell.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::net::{MarkedNet, Net, Node, NodeSet, PlaceId, PlaceSet};

/// The cell preorder over all nodes of a net.
#[derive(Clone, Debug)]
pub struct Preorder {
    reach: BTreeMap<Node, NodeSet>,
}

impl Preorder {
    pub fn leq(&self, x: &Node, y: &Node) -> bool {
        self.reach.get(x).is_some_and(|r| r.contains(y))
    }

    pub fn equivalent(&self, x: &Node, y: &Node) -> bool {
        self.leq(x, y) && self.leq(y, x)
    }

    /// The equivalence class of `x`.
    pub fn class_of(&self, x: &Node) -> NodeSet {
        self.reach[x]
            .iter()
            .filter(|y| self.leq(y, x))
            .cloned()
            .collect()
    }
}

pub fn scell_preorder(net: &Net) -> Preorder {
    let mut succ: BTreeMap<Node, Vec<Node>> =
        net.nodes().into_iter().map(|n| (n, Vec::new())).collect();
    for (t, arcs) in net.transitions() {
        let tn = Node::Transition(t.clone());
        for p in &arcs.pre {
            let pn = Node::Place(p.clone());
            succ.get_mut(&pn).unwrap().push(tn.clone());
            succ.get_mut(&tn).unwrap().push(pn);
        }
        for p in &arcs.post {
            succ.get_mut(&tn).unwrap().push(Node::Place(p.clone()));
        }
    }
    let reach = succ
        .keys()
        .map(|n| {
            let mut seen = NodeSet::new();
            seen.insert(n.clone());
            let mut stack = vec![n.clone()];
            while let Some(x) = stack.pop() {
                for y in &succ[&x] {
                    if seen.insert(y.clone()) {
                        stack.push(y.clone());
                    }
                }
            }
            (n.clone(), seen)
        })
        .collect();
    Preorder { reach }
}

/// One cell of a marked net.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SCell {
    /// Class nodes plus post-places.
    pub nodes: NodeSet,
    /// The induced subnet, marked with the inherited marking.
    pub subnet: MarkedNet,
    /// Position in the greedy-earliest stratification, starting at 1.
    pub layer: usize,
}

impl SCell {
    pub fn min_places(&self) -> PlaceSet {
        self.subnet.net().min_places()
    }

    pub fn max_places(&self) -> PlaceSet {
        self.subnet.net().max_places()
    }

    /// Unmarked initial places.
    pub fn inputs(&self) -> PlaceSet {
        self.subnet.inputs()
    }

    pub fn places(&self) -> PlaceSet {
        self.nodes
            .iter()
            .filter_map(|n| n.as_place().cloned())
            .collect()
    }

    /// Lexicographically smallest place, used as a tie-break.
    pub fn smallest_place(&self) -> PlaceId {
        self.places()
            .into_iter()
            .next()
            .expect("cells contain places")
    }
}

impl fmt::Display for SCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut nodes: Vec<&str> = self.nodes.iter().map(|n| n.as_str()).collect();
        nodes.sort();
        write!(f, "{{{}}}", nodes.join(","))
    }
}

/// Cells of a net with the lifted preorder.
#[derive(Clone, Debug)]
pub struct CellPoset {
    /// Sorted by layer, then by smallest place.
    pub cells: Vec<SCell>,
    leq: Vec<Vec<bool>>,
    feeds: Vec<BTreeSet<usize>>,
}

impl CellPoset {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    /// Cells that consume a place produced by cell `i`.
    pub fn feeds(&self, i: usize) -> &BTreeSet<usize> {
        &self.feeds[i]
    }
}

impl fmt::Display for CellPoset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.cells.iter().enumerate() {
            writeln!(
                f,
                "C{} = {} layer {} marked {} in {} out {}",
                i + 1,
                c,
                c.layer,
                crate::net::render_places(c.subnet.marking()),
                crate::net::render_places(&c.inputs()),
                crate::net::render_places(&c.max_places())
            )?;
        }
        for i in 0..self.len() {
            for j in 0..self.len() {
                if i != j && self.leq(i, j) {
                    writeln!(f, "C{} <= C{}", i + 1, j + 1)?;
                }
            }
        }
        Ok(())
    }
}

/// Computes the cells of a validated marked occurrence net.
pub fn scells(marked: &MarkedNet) -> CellPoset {
    let net = marked.net();
    let pre = scell_preorder(net);
    let mut classes: Vec<NodeSet> = Vec::new();
    let mut covered = NodeSet::new();
    for t in net.transition_ids() {
        let tn = Node::Transition(t.clone());
        if covered.contains(&tn) {
            continue;
        }
        let class = pre.class_of(&tn);
        covered.extend(class.iter().cloned());
        classes.push(class);
    }

    let mut raw: Vec<(NodeSet, MarkedNet, PlaceSet, PlaceSet)> = classes
        .iter()
        .map(|class| {
            let mut nodes = class.clone();
            for n in class {
                if let Node::Transition(t) = n {
                    nodes.extend(net.postset(t).iter().cloned().map(Node::Place));
                }
            }
            let sub = net.restrict(&nodes);
            let marking = marked
                .marking()
                .intersection(&sub.min_places())
                .cloned()
                .collect();
            let (min, max) = (sub.min_places(), sub.max_places());
            (
                nodes,
                MarkedNet::from_parts_unchecked(sub, marking),
                min,
                max,
            )
        })
        .collect();

    // greedy-earliest layers over the direct producer/consumer relation
    let n = raw.len();
    let direct = |i: usize, j: usize, raw: &[(NodeSet, MarkedNet, PlaceSet, PlaceSet)]| {
        i != j && !raw[i].3.is_disjoint(&raw[j].2)
    };
    let mut layer = vec![0usize; n];
    let mut remaining: BTreeSet<usize> = (0..n).collect();
    let mut current = 1;
    while !remaining.is_empty() {
        let ready: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&j| {
                (0..n).all(|i| !direct(i, j, &raw) || (layer[i] != 0 && layer[i] < current))
            })
            .collect();
        assert!(
            !ready.is_empty(),
            "cell dependencies of an occurrence net are acyclic"
        );
        for j in ready {
            layer[j] = current;
            remaining.remove(&j);
        }
        current += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let smallest = |i: usize| raw[i].0.iter().find_map(|n| n.as_place().cloned());
    order.sort_by(|&x, &y| (layer[x], smallest(x)).cmp(&(layer[y], smallest(y))));

    let reps: Vec<Node> = order
        .iter()
        .map(|&i| {
            classes[i]
                .iter()
                .find(|n| matches!(n, Node::Transition(_)))
                .unwrap()
                .clone()
        })
        .collect();
    let leq: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| pre.leq(&reps[i], &reps[j])).collect())
        .collect();
    let feeds: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| direct(order[i], order[j], &raw))
                .collect()
        })
        .collect();

    let mut slots: Vec<Option<(NodeSet, MarkedNet, PlaceSet, PlaceSet)>> =
        raw.drain(..).map(Some).collect();
    let cells = order
        .iter()
        .map(|&i| {
            let (nodes, subnet, _, _) = slots[i].take().unwrap();
            SCell {
                nodes,
                subnet,
                layer: layer[i],
            }
        })
        .collect();
    CellPoset { cells, leq, feeds }
}
