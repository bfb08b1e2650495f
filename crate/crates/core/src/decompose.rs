//! Parallel and sequential composition of marked nets, canonical layered
//! decompositions into cells, and restriction of a cell to a marking of its
//! inputs.

use std::fmt;

use crate::error::DecomposeError;
use crate::net::{render_places, MarkedNet, Marking, Node, NodeSet, PlaceSet};
use crate::scell::{scells, SCell};

/// Disjoint union of two marked nets.
pub fn parallel_compose(m1: &MarkedNet, m2: &MarkedNet) -> Result<MarkedNet, DecomposeError> {
    let overlap: Vec<String> = m1
        .nodes()
        .intersection(&m2.nodes())
        .map(|n| n.to_string())
        .collect();
    if !overlap.is_empty() {
        return Err(DecomposeError::Overlap(overlap));
    }
    let net = m1.net().union(m2.net());
    let marking = m1.marking().union(m2.marking()).cloned().collect();
    Ok(MarkedNet::from_parts_unchecked(net, marking))
}

/// Glues the final places of `m1` onto the unmarked initial places of `m2`.
pub fn sequential_compose(m1: &MarkedNet, m2: &MarkedNet) -> Result<MarkedNet, DecomposeError> {
    let left = m1.outputs();
    let right = m2.inputs();
    let shared = m1
        .nodes()
        .intersection(&m2.nodes())
        .cloned()
        .collect::<NodeSet>();
    let left_nodes: NodeSet = left.iter().cloned().map(Node::Place).collect();
    if left != right || shared != left_nodes {
        let mut difference: NodeSet = left
            .symmetric_difference(&right)
            .cloned()
            .map(Node::Place)
            .collect();
        difference.extend(shared.symmetric_difference(&left_nodes).cloned());
        return Err(DecomposeError::InterfaceMismatch {
            left_outputs: left.into_iter().collect(),
            right_inputs: right.into_iter().collect(),
            difference: difference.iter().map(|n| n.to_string()).collect(),
        });
    }
    let net = m1.net().union(m2.net());
    let marking = m1.marking().union(m2.marking()).cloned().collect();
    Ok(MarkedNet::from_parts_unchecked(net, marking))
}

/// A parallel/sequential decomposition whose leaves are cells and identity
/// nets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompositionTree {
    Cell(MarkedNet),
    Identity(PlaceSet),
    Par(Vec<CompositionTree>),
    Seq(Box<CompositionTree>, Box<CompositionTree>),
}

impl CompositionTree {
    pub fn inputs(&self) -> PlaceSet {
        match self {
            CompositionTree::Cell(m) => m.inputs(),
            CompositionTree::Identity(s) => s.clone(),
            CompositionTree::Par(children) => children.iter().flat_map(|c| c.inputs()).collect(),
            CompositionTree::Seq(a, _) => a.inputs(),
        }
    }

    pub fn outputs(&self) -> PlaceSet {
        match self {
            CompositionTree::Cell(m) => m.outputs(),
            CompositionTree::Identity(s) => s.clone(),
            CompositionTree::Par(children) => children.iter().flat_map(|c| c.outputs()).collect(),
            CompositionTree::Seq(_, b) => b.outputs(),
        }
    }

    pub fn marking(&self) -> Marking {
        self.cells()
            .iter()
            .flat_map(|c| c.marking().iter().cloned())
            .collect()
    }

    /// Cell leaves, left to right.
    pub fn cells(&self) -> Vec<&MarkedNet> {
        let mut out = Vec::new();
        self.collect_cells(&mut out);
        out
    }

    fn collect_cells<'a>(&'a self, out: &mut Vec<&'a MarkedNet>) {
        match self {
            CompositionTree::Cell(m) => out.push(m),
            CompositionTree::Identity(_) => {}
            CompositionTree::Par(children) => children.iter().for_each(|c| c.collect_cells(out)),
            CompositionTree::Seq(a, b) => {
                a.collect_cells(out);
                b.collect_cells(out);
            }
        }
    }

    /// Folds the tree back into a single marked net.
    pub fn recompose(&self) -> Result<MarkedNet, DecomposeError> {
        match self {
            CompositionTree::Cell(m) => Ok(m.clone()),
            CompositionTree::Identity(s) => Ok(MarkedNet::identity(s)),
            CompositionTree::Par(children) => {
                children.iter().try_fold(MarkedNet::empty(), |acc, c| {
                    parallel_compose(&acc, &c.recompose()?)
                })
            }
            CompositionTree::Seq(a, b) => sequential_compose(&a.recompose()?, &b.recompose()?),
        }
    }
}

impl fmt::Display for CompositionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompositionTree::Cell(m) => {
                let mut nodes: Vec<String> = m.nodes().iter().map(|n| n.to_string()).collect();
                nodes.sort();
                write!(
                    f,
                    "cell{{{}}}@{}",
                    nodes.join(","),
                    render_places(m.marking())
                )
            }
            CompositionTree::Identity(s) => write!(f, "I{}", render_places(s)),
            CompositionTree::Par(children) => {
                write!(f, "(")?;
                for (k, c) in children.iter().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            CompositionTree::Seq(a, b) => write!(f, "({a} ; {b})"),
        }
    }
}

/// Layered decomposition: layer `k` holds every cell whose producers all
/// sit in earlier layers, plus an identity carrying the wires that pass
/// through untouched. Layers are chained right-nested.
pub fn canonical_form(m: &MarkedNet) -> CompositionTree {
    let poset = scells(m);
    let mut wires = m.inputs();
    let max_layer = poset.cells.iter().map(|c| c.layer).max().unwrap_or(0);
    let mut layers = Vec::new();
    for layer in 1..=max_layer {
        let cells: Vec<&SCell> = poset.cells.iter().filter(|c| c.layer == layer).collect();
        let consumed: PlaceSet = cells.iter().flat_map(|c| c.inputs()).collect();
        let pass: PlaceSet = wires.difference(&consumed).cloned().collect();
        let mut children: Vec<CompositionTree> = cells
            .iter()
            .map(|c| CompositionTree::Cell(c.subnet.clone()))
            .collect();
        wires = pass.clone();
        wires.extend(cells.iter().flat_map(|c| c.max_places()));
        if !pass.is_empty() {
            children.push(CompositionTree::Identity(pass));
        }
        layers.push(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            CompositionTree::Par(children)
        });
    }
    match layers.pop() {
        None => CompositionTree::Identity(wires),
        Some(last) => layers.into_iter().rev().fold(last, |acc, l| {
            CompositionTree::Seq(Box::new(l), Box::new(acc))
        }),
    }
}

/// True when the cell's fully-marked subnet decomposes into itself only.
pub fn is_indecomposable(cell: &SCell) -> bool {
    let net = cell.subnet.net().clone();
    match MarkedNet::fully_marked(net) {
        Ok(full) => matches!(canonical_form(&full), CompositionTree::Cell(ref c) if c == &full),
        Err(_) => false,
    }
}

/// Outcome of [`remove_places`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Removal {
    pub net: MarkedNet,
    pub removed: NodeSet,
    /// Marked places deleted because they became isolated.
    pub dropped_tokens: PlaceSet,
}

/// Deletes the places `s`, everything that depends on them, and any place
/// left isolated.
pub fn remove_places(cell: &MarkedNet, s: &PlaceSet) -> Result<Removal, DecomposeError> {
    let inputs = cell.inputs();
    if let Some(p) = s.iter().find(|p| !inputs.contains(*p)) {
        return Err(DecomposeError::NotRemovable(p.clone()));
    }
    let net = cell.net();
    let mut dead: NodeSet = s.iter().cloned().map(Node::Place).collect();
    loop {
        let mut changed = false;
        for (t, arcs) in net.transitions() {
            let tn = Node::Transition(t.clone());
            if !dead.contains(&tn)
                && arcs
                    .pre
                    .iter()
                    .any(|p| dead.contains(&Node::Place(p.clone())))
            {
                dead.insert(tn);
                for q in &arcs.post {
                    dead.insert(Node::Place(q.clone()));
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut alive: NodeSet = net.nodes().difference(&dead).cloned().collect();
    let partial = net.restrict(&alive);
    let isolated: PlaceSet = partial
        .places()
        .iter()
        .filter(|p| partial.producers(p).is_empty() && partial.consumers(p).is_empty())
        .cloned()
        .collect();
    for p in &isolated {
        alive.remove(&Node::Place(p.clone()));
        dead.insert(Node::Place(p.clone()));
    }
    let result = net.restrict(&alive);
    let dropped_tokens: PlaceSet = cell.marking().intersection(&isolated).cloned().collect();
    let marking = cell
        .marking()
        .intersection(result.places())
        .cloned()
        .collect();
    Ok(Removal {
        net: MarkedNet::from_parts_unchecked(result, marking),
        removed: dead,
        dropped_tokens,
    })
}

/// Outcome of [`at_marking`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtMarking {
    /// Fully-marked residual net.
    pub net: MarkedNet,
    /// Final places of the cell that can no longer receive a token.
    pub dead_finals: PlaceSet,
    pub dropped_tokens: PlaceSet,
}

/// Restricts a cell to the case where exactly the inputs `m` carry a token.
pub fn at_marking(cell: &MarkedNet, m: &PlaceSet) -> Result<AtMarking, DecomposeError> {
    let inputs = cell.inputs();
    if let Some(p) = m.iter().find(|p| !inputs.contains(*p)) {
        return Err(DecomposeError::NotRemovable(p.clone()));
    }
    let s: PlaceSet = inputs.difference(m).cloned().collect();
    let removal = remove_places(cell, &s)?;
    let (net, _) = removal.net.into_parts();
    let marking: PlaceSet = net
        .min_places()
        .difference(&net.isolated_places())
        .cloned()
        .collect();
    let dead_finals = cell
        .outputs()
        .difference(&net.max_places())
        .cloned()
        .collect();
    Ok(AtMarking {
        net: MarkedNet::from_parts_unchecked(net, marking),
        dead_finals,
        dropped_tokens: removal.dropped_tokens,
    })
}
