//! Finite occurrence nets: structure, validation, causality and conflict,
//! firing, and enumeration of maximal deterministic processes.
//!
//! Nets here are always safe, so markings are plain sets of places. All
//! collections are ordered maps and sets keyed by identifier, which keeps
//! every derived output deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::NetError;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_type!(
    /// Identifier of a place.
    PlaceId
);
id_type!(
    /// Identifier of a transition.
    TransitionId
);

pub type PlaceSet = BTreeSet<PlaceId>;
pub type TransitionSet = BTreeSet<TransitionId>;
/// A marking of a safe net.
pub type Marking = PlaceSet;

/// A node of a net: either a place or a transition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Place(PlaceId),
    Transition(TransitionId),
}

impl Node {
    pub fn as_str(&self) -> &str {
        match self {
            Node::Place(p) => p.as_str(),
            Node::Transition(t) => t.as_str(),
        }
    }

    pub fn as_place(&self) -> Option<&PlaceId> {
        match self {
            Node::Place(p) => Some(p),
            Node::Transition(_) => None,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<PlaceId> for Node {
    fn from(p: PlaceId) -> Self {
        Node::Place(p)
    }
}

impl From<TransitionId> for Node {
    fn from(t: TransitionId) -> Self {
        Node::Transition(t)
    }
}

pub type NodeSet = BTreeSet<Node>;

/// Characters allowed in identifiers. Kept small so that every identifier
/// survives the textual term syntax unchanged.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '\''))
}

/// Pre- and post-set of a transition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Arcs {
    pub pre: PlaceSet,
    pub post: PlaceSet,
}

/// A Petri net `(P, T, F)` with the flow relation stored per transition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Net {
    places: PlaceSet,
    transitions: BTreeMap<TransitionId, Arcs>,
}

impl Net {
    /// Builds a structurally well-formed net: identifiers valid and
    /// disjoint, every arc endpoint declared, every pre-set non-empty.
    pub fn new(
        places: impl IntoIterator<Item = PlaceId>,
        transitions: impl IntoIterator<Item = (TransitionId, Arcs)>,
    ) -> Result<Self, NetError> {
        let mut place_set = PlaceSet::new();
        for p in places {
            if !is_valid_id(p.as_str()) {
                return Err(NetError::InvalidId(p.to_string()));
            }
            if !place_set.insert(p.clone()) {
                return Err(NetError::DuplicateId(p.to_string()));
            }
        }
        let mut map = BTreeMap::new();
        for (t, arcs) in transitions {
            if !is_valid_id(t.as_str()) {
                return Err(NetError::InvalidId(t.to_string()));
            }
            if place_set.contains(&PlaceId::new(t.as_str())) || map.contains_key(&t) {
                return Err(NetError::DuplicateId(t.to_string()));
            }
            if arcs.pre.is_empty() {
                return Err(NetError::EmptyPreset(t));
            }
            for p in arcs.pre.iter().chain(arcs.post.iter()) {
                if !place_set.contains(p) {
                    return Err(NetError::DanglingReference {
                        transition: t.clone(),
                        place: p.clone(),
                    });
                }
            }
            map.insert(t, arcs);
        }
        Ok(Net {
            places: place_set,
            transitions: map,
        })
    }

    /// Convenience constructor from string slices, mostly for tests and
    /// hand-built examples.
    pub fn from_parts(
        places: &[&str],
        transitions: &[(&str, &[&str], &[&str])],
    ) -> Result<Self, NetError> {
        Net::new(
            places.iter().map(|p| PlaceId::new(*p)),
            transitions.iter().map(|(t, pre, post)| {
                (
                    TransitionId::new(*t),
                    Arcs {
                        pre: pre.iter().map(|p| PlaceId::new(*p)).collect(),
                        post: post.iter().map(|p| PlaceId::new(*p)).collect(),
                    },
                )
            }),
        )
    }

    /// The empty net `0`.
    pub fn empty() -> Self {
        Net::default()
    }

    /// The identity net `I_s`: isolated places only.
    pub fn identity(places: &PlaceSet) -> Self {
        Net {
            places: places.clone(),
            transitions: BTreeMap::new(),
        }
    }

    pub fn places(&self) -> &PlaceSet {
        &self.places
    }

    pub fn transitions(&self) -> impl Iterator<Item = (&TransitionId, &Arcs)> {
        self.transitions.iter()
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = &TransitionId> {
        self.transitions.keys()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn arcs(&self, t: &TransitionId) -> Option<&Arcs> {
        self.transitions.get(t)
    }

    pub fn has_place(&self, p: &PlaceId) -> bool {
        self.places.contains(p)
    }

    pub fn has_transition(&self, t: &TransitionId) -> bool {
        self.transitions.contains_key(t)
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty() && self.transitions.is_empty()
    }

    pub fn has_node(&self, n: &Node) -> bool {
        match n {
            Node::Place(p) => self.has_place(p),
            Node::Transition(t) => self.has_transition(t),
        }
    }

    /// All places and transitions.
    pub fn nodes(&self) -> NodeSet {
        self.places
            .iter()
            .cloned()
            .map(Node::Place)
            .chain(self.transitions.keys().cloned().map(Node::Transition))
            .collect()
    }

    pub fn preset(&self, t: &TransitionId) -> &PlaceSet {
        &self.transitions[t].pre
    }

    pub fn postset(&self, t: &TransitionId) -> &PlaceSet {
        &self.transitions[t].post
    }

    /// Transitions producing into `p`.
    pub fn producers(&self, p: &PlaceId) -> Vec<&TransitionId> {
        self.transitions
            .iter()
            .filter(|(_, a)| a.post.contains(p))
            .map(|(t, _)| t)
            .collect()
    }

    /// Transitions consuming from `p`.
    pub fn consumers(&self, p: &PlaceId) -> Vec<&TransitionId> {
        self.transitions
            .iter()
            .filter(|(_, a)| a.pre.contains(p))
            .map(|(t, _)| t)
            .collect()
    }

    /// Direct successors of a node along the flow relation.
    pub fn flow_successors(&self, n: &Node) -> Vec<Node> {
        match n {
            Node::Transition(t) => self.transitions[t]
                .post
                .iter()
                .cloned()
                .map(Node::Place)
                .collect(),
            Node::Place(p) => self
                .consumers(p)
                .into_iter()
                .cloned()
                .map(Node::Transition)
                .collect(),
        }
    }

    /// Places with an empty pre-set.
    pub fn min_places(&self) -> PlaceSet {
        let produced: PlaceSet = self
            .transitions
            .values()
            .flat_map(|a| a.post.iter().cloned())
            .collect();
        self.places.difference(&produced).cloned().collect()
    }

    /// Places with an empty post-set.
    pub fn max_places(&self) -> PlaceSet {
        let consumed: PlaceSet = self
            .transitions
            .values()
            .flat_map(|a| a.pre.iter().cloned())
            .collect();
        self.places.difference(&consumed).cloned().collect()
    }

    /// Places that are both initial and final.
    pub fn isolated_places(&self) -> PlaceSet {
        self.min_places()
            .intersection(&self.max_places())
            .cloned()
            .collect()
    }

    /// The subnet induced by a node set. Transitions keep only the arcs whose
    /// places are inside the set.
    pub fn restrict(&self, nodes: &NodeSet) -> Net {
        let places: PlaceSet = self
            .places
            .iter()
            .filter(|p| nodes.contains(&Node::Place((*p).clone())))
            .cloned()
            .collect();
        let transitions = self
            .transitions
            .iter()
            .filter(|(t, _)| nodes.contains(&Node::Transition((*t).clone())))
            .map(|(t, a)| {
                (
                    t.clone(),
                    Arcs {
                        pre: a.pre.intersection(&places).cloned().collect(),
                        post: a.post.intersection(&places).cloned().collect(),
                    },
                )
            })
            .collect();
        Net {
            places,
            transitions,
        }
    }

    /// Element-wise union. Callers are responsible for the disjointness
    /// side conditions of the composition being built.
    pub(crate) fn union(&self, other: &Net) -> Net {
        let mut places = self.places.clone();
        places.extend(other.places.iter().cloned());
        let mut transitions = self.transitions.clone();
        for (t, a) in &other.transitions {
            transitions.insert(t.clone(), a.clone());
        }
        Net {
            places,
            transitions,
        }
    }

    /// Checks the occurrence-net conditions and lists every violation.
    pub fn validate_occurrence(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let cyclic = self.cyclic_nodes();
        for n in &cyclic {
            violations.push(Violation::Cycle { node: n.clone() });
        }
        for p in &self.places {
            let producers = self.producers(p);
            if producers.len() > 1 {
                violations.push(Violation::BackwardConflict {
                    place: p.clone(),
                    producers: producers.into_iter().cloned().collect(),
                });
            }
        }
        // conflict is only meaningful on an acyclic flow
        if cyclic.is_empty() {
            let rel = Relations::new(self);
            for t in self.transitions.keys() {
                let n = Node::Transition(t.clone());
                if rel.conflict_nodes(&n, &n) {
                    violations.push(Violation::SelfConflict {
                        transition: t.clone(),
                    });
                }
            }
        }
        ValidationReport { violations }
    }

    fn cyclic_nodes(&self) -> Vec<Node> {
        let nodes = self.nodes();
        nodes
            .iter()
            .filter(|n| {
                let mut seen = NodeSet::new();
                let mut stack = self.flow_successors(n);
                while let Some(x) = stack.pop() {
                    if &x == *n {
                        return true;
                    }
                    if seen.insert(x.clone()) {
                        stack.extend(self.flow_successors(&x));
                    }
                }
                false
            })
            .cloned()
            .collect()
    }

    /// Causality `x ≼ y`, i.e. the reflexive-transitive closure of the flow.
    pub fn causality_leq(&self, x: &Node, y: &Node) -> Result<bool, NetError> {
        self.check_node(x)?;
        self.check_node(y)?;
        Ok(Relations::new(self).leq(x, y))
    }

    /// Immediate conflict: distinct transitions sharing a pre-place.
    pub fn immediate_conflict(
        &self,
        t1: &TransitionId,
        t2: &TransitionId,
    ) -> Result<bool, NetError> {
        self.check_node(&Node::Transition(t1.clone()))?;
        self.check_node(&Node::Transition(t2.clone()))?;
        Ok(immediate_conflict(self, t1, t2))
    }

    /// Inherited conflict between arbitrary nodes.
    pub fn conflict(&self, x: &Node, y: &Node) -> Result<bool, NetError> {
        self.check_node(x)?;
        self.check_node(y)?;
        Ok(Relations::new(self).conflict_nodes(x, y))
    }

    fn check_node(&self, n: &Node) -> Result<(), NetError> {
        if self.has_node(n) {
            Ok(())
        } else {
            Err(NetError::UnknownNode(n.to_string()))
        }
    }
}

fn immediate_conflict(net: &Net, t1: &TransitionId, t2: &TransitionId) -> bool {
    t1 != t2 && !net.preset(t1).is_disjoint(net.preset(t2))
}

/// Causality and conflict relations of an acyclic net, with ancestor sets
/// precomputed once.
pub struct Relations<'a> {
    net: &'a Net,
    ancestors: BTreeMap<Node, NodeSet>,
}

impl<'a> Relations<'a> {
    pub fn new(net: &'a Net) -> Self {
        let mut ancestors: BTreeMap<Node, NodeSet> = BTreeMap::new();
        for n in net.nodes() {
            let mut seen = NodeSet::new();
            seen.insert(n.clone());
            let mut stack = vec![n.clone()];
            while let Some(x) = stack.pop() {
                let preds: Vec<Node> = match &x {
                    Node::Transition(t) => net.preset(t).iter().cloned().map(Node::Place).collect(),
                    Node::Place(p) => net
                        .producers(p)
                        .into_iter()
                        .cloned()
                        .map(Node::Transition)
                        .collect(),
                };
                for q in preds {
                    if seen.insert(q.clone()) {
                        stack.push(q);
                    }
                }
            }
            ancestors.insert(n, seen);
        }
        Relations { net, ancestors }
    }

    pub fn leq(&self, x: &Node, y: &Node) -> bool {
        self.ancestors.get(y).is_some_and(|a| a.contains(x))
    }

    /// Nodes below `x` (including `x`).
    pub fn down(&self, x: &Node) -> &NodeSet {
        &self.ancestors[x]
    }

    fn transition_ancestors(&self, x: &Node) -> impl Iterator<Item = &TransitionId> {
        self.ancestors[x].iter().filter_map(|n| match n {
            Node::Transition(t) => Some(t),
            Node::Place(_) => None,
        })
    }

    pub fn immediate_conflict(&self, t1: &TransitionId, t2: &TransitionId) -> bool {
        immediate_conflict(self.net, t1, t2)
    }

    /// `x # y` iff some `t1 ≼ x`, `t2 ≼ y` are in immediate conflict.
    pub fn conflict_nodes(&self, x: &Node, y: &Node) -> bool {
        let ys: Vec<&TransitionId> = self.transition_ancestors(y).collect();
        self.transition_ancestors(x)
            .any(|t1| ys.iter().any(|t2| immediate_conflict(self.net, t1, t2)))
    }

    pub fn conflict(&self, t1: &TransitionId, t2: &TransitionId) -> bool {
        self.conflict_nodes(&Node::Transition(t1.clone()), &Node::Transition(t2.clone()))
    }
}

/// One reason a net fails to be an occurrence net.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Cycle {
        node: Node,
    },
    BackwardConflict {
        place: PlaceId,
        producers: Vec<TransitionId>,
    },
    SelfConflict {
        transition: TransitionId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle { node } => write!(f, "flow cycle through {node}"),
            Violation::BackwardConflict { place, producers } => {
                let names: Vec<&str> = producers.iter().map(|t| t.as_str()).collect();
                write!(
                    f,
                    "backward conflict at place {place} (produced by {})",
                    names.join(", ")
                )
            }
            Violation::SelfConflict { transition } => {
                write!(f, "transition {transition} is in conflict with itself")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A validated occurrence net together with a marking of some of its
/// initial, non-isolated places.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedNet {
    net: Net,
    marking: Marking,
}

impl MarkedNet {
    pub fn new(net: Net, marking: Marking) -> Result<Self, NetError> {
        let report = net.validate_occurrence();
        if !report.is_ok() {
            return Err(NetError::NotOccurrence(report.violations));
        }
        let min = net.min_places();
        let isolated = net.isolated_places();
        for p in &marking {
            if !net.has_place(p) {
                return Err(NetError::UnknownNode(p.to_string()));
            }
            if !min.contains(p) {
                return Err(NetError::MarkedNonInitial(p.clone()));
            }
            if isolated.contains(p) {
                return Err(NetError::MarkedIsolated(p.clone()));
            }
        }
        Ok(MarkedNet { net, marking })
    }

    pub fn unmarked(net: Net) -> Result<Self, NetError> {
        MarkedNet::new(net, Marking::new())
    }

    /// Marks every non-isolated initial place.
    pub fn fully_marked(net: Net) -> Result<Self, NetError> {
        let marking = net
            .min_places()
            .difference(&net.isolated_places())
            .cloned()
            .collect();
        MarkedNet::new(net, marking)
    }

    pub fn empty() -> Self {
        MarkedNet {
            net: Net::empty(),
            marking: Marking::new(),
        }
    }

    pub fn identity(places: &PlaceSet) -> Self {
        MarkedNet {
            net: Net::identity(places),
            marking: Marking::new(),
        }
    }

    /// Skips validation; only for results that are valid by construction.
    pub(crate) fn from_parts_unchecked(net: Net, marking: Marking) -> Self {
        MarkedNet { net, marking }
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn into_parts(self) -> (Net, Marking) {
        (self.net, self.marking)
    }

    /// Unmarked initial places (the input interface).
    pub fn inputs(&self) -> PlaceSet {
        self.net
            .min_places()
            .difference(&self.marking)
            .cloned()
            .collect()
    }

    /// Final places (the output interface).
    pub fn outputs(&self) -> PlaceSet {
        self.net.max_places()
    }

    pub fn nodes(&self) -> NodeSet {
        self.net.nodes()
    }

    /// True when every non-isolated initial place carries a token.
    pub fn is_fully_marked(&self) -> bool {
        self.inputs().is_subset(&self.net.isolated_places())
    }

    /// The same net with a different marking.
    pub fn with_marking(&self, marking: Marking) -> Result<Self, NetError> {
        MarkedNet::new(self.net.clone(), marking)
    }

    /// Fires `t` from the net's own marking.
    pub fn fire(&self, t: &TransitionId) -> Result<Marking, NetError> {
        fire(&self.net, &self.marking, t)
    }

    /// Maximal deterministic processes starting from the marking.
    pub fn enumerate_transactions(&self) -> Result<BTreeSet<Process>, NetError> {
        let unmarked: PlaceSet = self
            .inputs()
            .difference(&self.net.isolated_places())
            .cloned()
            .collect();
        if let Some(p) = unmarked.into_iter().next() {
            return Err(NetError::UnmarkedInitial(p));
        }
        Ok(maximal_processes(&self.net, &self.marking))
    }
}

/// `(m \ •t) ∪ t•` when `•t ⊆ m`.
pub fn fire(net: &Net, marking: &Marking, t: &TransitionId) -> Result<Marking, NetError> {
    let arcs = net
        .arcs(t)
        .ok_or_else(|| NetError::UnknownNode(t.to_string()))?;
    if !arcs.pre.is_subset(marking) {
        return Err(NetError::NotEnabled(t.clone()));
    }
    let mut next: Marking = marking.difference(&arcs.pre).cloned().collect();
    next.extend(arcs.post.iter().cloned());
    Ok(next)
}

/// A deterministic process, identified by its transition set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Process {
    pub transitions: TransitionSet,
    pub initial_places: PlaceSet,
    pub final_places: PlaceSet,
    /// Places produced and consumed inside the process.
    pub internal_places: PlaceSet,
}

impl Process {
    /// The process induced by a conflict-free, downward-closed transition set.
    pub fn of(net: &Net, transitions: &TransitionSet) -> Process {
        let mut pre = PlaceSet::new();
        let mut post = PlaceSet::new();
        for t in transitions {
            pre.extend(net.preset(t).iter().cloned());
            post.extend(net.postset(t).iter().cloned());
        }
        Process {
            transitions: transitions.clone(),
            initial_places: pre.difference(&post).cloned().collect(),
            final_places: post.difference(&pre).cloned().collect(),
            internal_places: pre.intersection(&post).cloned().collect(),
        }
    }

    /// All places and transitions of the process.
    pub fn nodes(&self) -> NodeSet {
        self.places()
            .into_iter()
            .map(Node::Place)
            .chain(self.transitions.iter().cloned().map(Node::Transition))
            .collect()
    }

    pub fn places(&self) -> PlaceSet {
        self.initial_places
            .iter()
            .chain(&self.final_places)
            .chain(&self.internal_places)
            .cloned()
            .collect()
    }

    /// Canonical rendering of the transition set, e.g. `{e,g}`.
    pub fn key(&self) -> String {
        render_set(self.transitions.iter().map(|t| t.as_str()))
    }
}

/// Renders `{a,b,c}` from already-sorted items.
pub fn render_set<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    let v: Vec<&str> = items.into_iter().collect();
    format!("{{{}}}", v.join(","))
}

pub fn render_places(places: &PlaceSet) -> String {
    render_set(places.iter().map(|p| p.as_str()))
}

/// Depth-first search over reachable configurations, memoised on the set of
/// fired transitions. Desk-scale nets only.
fn maximal_processes(net: &Net, marking: &Marking) -> BTreeSet<Process> {
    let mut seen: BTreeSet<TransitionSet> = BTreeSet::new();
    let mut maximal = BTreeSet::new();
    let mut stack = vec![(TransitionSet::new(), marking.clone())];
    while let Some((fired, current)) = stack.pop() {
        if !seen.insert(fired.clone()) {
            continue;
        }
        let enabled: Vec<&TransitionId> = net
            .transition_ids()
            .filter(|t| !fired.contains(*t) && net.preset(t).is_subset(&current))
            .collect();
        if enabled.is_empty() {
            maximal.insert(Process::of(net, &fired));
            continue;
        }
        for t in enabled {
            let mut next_fired = fired.clone();
            next_fired.insert(t.clone());
            if seen.contains(&next_fired) {
                continue;
            }
            let next = fire(net, &current, t).expect("enabled transition fires");
            stack.push((next_fired, next));
        }
    }
    maximal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn p(s: &str) -> PlaceId {
        PlaceId::new(s)
    }

    fn t(s: &str) -> TransitionId {
        TransitionId::new(s)
    }

    fn places(ids: &[&str]) -> PlaceSet {
        ids.iter().map(|s| p(s)).collect()
    }

    fn tset(ids: &[&str]) -> TransitionSet {
        ids.iter().map(|s| t(s)).collect()
    }

    #[test]
    fn running_net_is_an_occurrence_net() {
        let net = fixtures::running_net();
        assert!(net.validate_occurrence().is_ok());
    }

    #[test]
    fn backward_conflict_is_reported() {
        let net = Net::from_parts(
            &["a0", "b0", "x"],
            &[("t1", &["a0"], &["x"]), ("t2", &["b0"], &["x"])],
        )
        .unwrap();
        let report = net.validate_occurrence();
        assert_eq!(
            report.violations,
            vec![Violation::BackwardConflict {
                place: p("x"),
                producers: vec![t("t1"), t("t2")],
            }]
        );
    }

    #[test]
    fn flow_cycle_is_reported() {
        let net = Net::from_parts(&["p"], &[("t", &["p"], &["p"])]).unwrap();
        let report = net.validate_occurrence();
        assert!(report.violations.contains(&Violation::Cycle {
            node: Node::Place(p("p"))
        }));
        assert!(report.violations.contains(&Violation::Cycle {
            node: Node::Transition(t("t"))
        }));
    }

    #[test]
    fn self_conflict_is_reported() {
        // u and v compete for s; w needs both their outputs
        let net = Net::from_parts(
            &["s", "x", "y", "z"],
            &[
                ("u", &["s"], &["x"]),
                ("v", &["s"], &["y"]),
                ("w", &["x", "y"], &["z"]),
            ],
        )
        .unwrap();
        let report = net.validate_occurrence();
        assert_eq!(
            report.violations,
            vec![Violation::SelfConflict { transition: t("w") }]
        );
        assert!(MarkedNet::unmarked(net).is_err());
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            Net::from_parts(&["p"], &[("t", &[], &["p"])]),
            Err(NetError::EmptyPreset(_))
        ));
        assert!(matches!(
            Net::from_parts(&["p"], &[("t", &["q"], &[])]),
            Err(NetError::DanglingReference { .. })
        ));
        assert!(matches!(
            Net::from_parts(&["p", "p"], &[]),
            Err(NetError::DuplicateId(_))
        ));
        assert!(matches!(
            Net::from_parts(&["p"], &[("p", &["p"], &[])]),
            Err(NetError::DuplicateId(_))
        ));
        assert!(matches!(
            Net::from_parts(&["a b"], &[]),
            Err(NetError::InvalidId(_))
        ));
    }

    #[test]
    fn causality_and_conflict_on_running_net() {
        let net = fixtures::running_net();
        let a = Node::Transition(t("a"));
        let b = Node::Transition(t("b"));
        assert!(net.immediate_conflict(&t("a"), &t("b")).unwrap());
        assert!(!net.immediate_conflict(&t("a"), &t("a")).unwrap());
        assert!(net
            .causality_leq(&Node::Place(p("p1")), &Node::Place(p("p4")))
            .unwrap());
        assert!(!net
            .causality_leq(&Node::Place(p("p4")), &Node::Place(p("p1")))
            .unwrap());
        assert!(net.conflict(&a, &b).unwrap());
        // inherited: b # a ≼ f
        assert!(net.conflict(&b, &Node::Transition(t("f"))).unwrap());
        for n in net.nodes() {
            assert!(!net.conflict(&n, &n).unwrap(), "{n} in self-conflict");
        }
        assert!(matches!(
            net.causality_leq(&Node::Place(p("zz")), &a),
            Err(NetError::UnknownNode(_))
        ));
    }

    #[test]
    fn min_max_isolated() {
        let net = fixtures::running_net();
        assert_eq!(net.min_places(), places(&["p1", "p2", "p3"]));
        assert_eq!(net.max_places(), places(&["p10", "p5", "p7", "p8", "p9"]));
        assert!(net.isolated_places().is_empty());

        let s = places(&["x", "y"]);
        let id = Net::identity(&s);
        assert_eq!(id.min_places(), s);
        assert_eq!(id.max_places(), s);
        assert_eq!(id.isolated_places(), s);

        let c1 = fixtures::running_cell_c1();
        assert_eq!(c1.min_places(), places(&["p1"]));
        assert_eq!(c1.max_places(), places(&["p4", "p5"]));
    }

    #[test]
    fn firing() {
        let net = fixtures::running_net();
        let m = places(&["p1", "p2", "p3"]);
        assert_eq!(
            fire(&net, &m, &t("a")).unwrap(),
            places(&["p2", "p3", "p4"])
        );
        assert!(matches!(
            fire(&net, &places(&["p2", "p3"]), &t("a")),
            Err(NetError::NotEnabled(_))
        ));
        // a transition whose pre-set equals its post-set leaves the marking alone
        let loopy = Net::from_parts(&["q"], &[("t", &["q"], &["q"])]).unwrap();
        assert_eq!(
            fire(&loopy, &places(&["q"]), &t("t")).unwrap(),
            places(&["q"])
        );
    }

    #[test]
    fn marked_net_rejects_bad_markings() {
        let net = fixtures::running_net();
        assert!(matches!(
            MarkedNet::new(net.clone(), places(&["p4"])),
            Err(NetError::MarkedNonInitial(_))
        ));
        let with_iso = Net::from_parts(&["p", "q", "iso"], &[("t", &["p"], &["q"])]).unwrap();
        assert!(matches!(
            MarkedNet::new(with_iso, places(&["iso"])),
            Err(NetError::MarkedIsolated(_))
        ));
    }

    #[test]
    fn transactions_of_c3() {
        let c3 = MarkedNet::fully_marked(fixtures::running_cell_c3()).unwrap();
        let th = c3.enumerate_transactions().unwrap();
        let sets: Vec<TransitionSet> = th.iter().map(|p| p.transitions.clone()).collect();
        assert_eq!(
            sets,
            vec![tset(&["e", "g"]), tset(&["e", "h"]), tset(&["f"])]
        );
        let f = th.iter().find(|p| p.transitions == tset(&["f"])).unwrap();
        assert_eq!(f.initial_places, places(&["p3", "p4", "p6"]));
        assert_eq!(f.final_places, places(&["p8"]));
        let eg = th
            .iter()
            .find(|p| p.transitions == tset(&["e", "g"]))
            .unwrap();
        assert_eq!(eg.initial_places, places(&["p3", "p6"]));
        assert_eq!(eg.final_places, places(&["p7", "p9"]));
    }

    #[test]
    fn transactions_of_c1_and_single_transition() {
        let c1 = MarkedNet::fully_marked(fixtures::running_cell_c1()).unwrap();
        let sets: Vec<TransitionSet> = c1
            .enumerate_transactions()
            .unwrap()
            .into_iter()
            .map(|p| p.transitions)
            .collect();
        assert_eq!(sets, vec![tset(&["a"]), tset(&["b"])]);

        let single = MarkedNet::fully_marked(
            Net::from_parts(&["p", "q"], &[("t", &["p"], &["q"])]).unwrap(),
        )
        .unwrap();
        let th = single.enumerate_transactions().unwrap();
        assert_eq!(th.len(), 1);
        assert_eq!(th.iter().next().unwrap().key(), "{t}");
    }

    #[test]
    fn transactions_need_a_full_marking() {
        let c1 = MarkedNet::unmarked(fixtures::running_cell_c1()).unwrap();
        assert!(matches!(
            c1.enumerate_transactions(),
            Err(NetError::UnmarkedInitial(_))
        ));
    }

    #[test]
    fn transaction_with_internal_causality() {
        // t1 ≼ t2 inside one cell, t3 competes with both
        let net = Net::from_parts(
            &["p", "q", "x", "z", "w"],
            &[
                ("t1", &["p"], &["x"]),
                ("t2", &["x", "q"], &["z"]),
                ("t3", &["q", "p"], &["w"]),
            ],
        )
        .unwrap();
        let m = MarkedNet::fully_marked(net).unwrap();
        let th: Vec<Process> = m.enumerate_transactions().unwrap().into_iter().collect();
        assert_eq!(th.len(), 2);
        assert_eq!(th[0].transitions, tset(&["t1", "t2"]));
        assert_eq!(th[0].internal_places, places(&["x"]));
        assert_eq!(th[0].final_places, places(&["z"]));
        assert_eq!(th[1].transitions, tset(&["t3"]));
    }
}
