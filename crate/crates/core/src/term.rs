//! Typed terms denoting marked occurrence nets.
//!
//! A term is built from identities `I{s}`, dead wires `Bot{s}`, parallel
//! composition, sequential composition, cell constants (a set of
//! transactions) and sums indexed by every marking of a cell's inputs.
//! Types are triples `(i, s, o)`: unmarked inputs, all nodes, outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::TermError;
use crate::net::{render_places, render_set, Node, NodeSet, PlaceId, PlaceSet, Process};

pub mod syntax;

/// Canonical rendering of a transaction set, e.g. `{{e,g},{e,h},{f}}`.
/// Members are ordered by their own rendering.
pub fn signature_of<'a>(transactions: impl IntoIterator<Item = &'a Process>) -> String {
    let mut keys: Vec<String> = transactions.into_iter().map(|p| p.key()).collect();
    keys.sort();
    format!("{{{}}}", keys.join(","))
}

/// The transactions of a fully-marked cell.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstantKey {
    transactions: BTreeSet<Process>,
    marked: PlaceSet,
    outputs: PlaceSet,
    nodes: NodeSet,
}

impl ConstantKey {
    pub fn new(transactions: BTreeSet<Process>) -> Result<Self, TermError> {
        if transactions.is_empty() {
            return Err(TermError::EmptyConstant);
        }
        let marked = transactions
            .iter()
            .flat_map(|p| p.initial_places.iter().cloned())
            .collect();
        let outputs = transactions
            .iter()
            .flat_map(|p| p.final_places.iter().cloned())
            .collect();
        let nodes = transactions.iter().flat_map(|p| p.nodes()).collect();
        Ok(ConstantKey {
            transactions,
            marked,
            outputs,
            nodes,
        })
    }

    pub fn transactions(&self) -> &BTreeSet<Process> {
        &self.transactions
    }

    /// Transactions in signature order.
    pub fn ordered_transactions(&self) -> Vec<&Process> {
        let mut v: Vec<&Process> = self.transactions.iter().collect();
        v.sort_by_key(|p| p.key());
        v
    }

    /// Places holding a token when the cell starts.
    pub fn marked(&self) -> &PlaceSet {
        &self.marked
    }

    pub fn outputs(&self) -> &PlaceSet {
        &self.outputs
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn signature(&self) -> String {
        signature_of(&self.transactions)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Identity(PlaceSet),
    Dead(PlaceSet),
    Par(Box<Term>, Box<Term>),
    Seq(Box<Term>, Box<Term>),
    Constant(ConstantKey),
    Sum {
        inputs: PlaceSet,
        branches: BTreeMap<PlaceSet, Term>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermType {
    pub inputs: PlaceSet,
    pub nodes: NodeSet,
    pub outputs: PlaceSet,
}

fn place_nodes(s: &PlaceSet) -> NodeSet {
    s.iter().cloned().map(Node::Place).collect()
}

fn node_names(s: &NodeSet) -> Vec<String> {
    s.iter().map(|n| n.to_string()).collect()
}

/// All subsets of `s`, ordered by their index under the lexicographic
/// wiring of `s` (first place is the least significant bit).
pub fn subsets(s: &PlaceSet) -> Vec<PlaceSet> {
    let items: Vec<&PlaceId> = s.iter().collect();
    (0..1usize << items.len())
        .map(|k| {
            items
                .iter()
                .enumerate()
                .filter(|(b, _)| k >> b & 1 == 1)
                .map(|(_, p)| (*p).clone())
                .collect()
        })
        .collect()
}

impl Term {
    pub fn par(a: Term, b: Term) -> Term {
        Term::Par(Box::new(a), Box::new(b))
    }

    pub fn seq(a: Term, b: Term) -> Term {
        Term::Seq(Box::new(a), Box::new(b))
    }

    pub fn typecheck(&self) -> Result<TermType, TermError> {
        match self {
            Term::Identity(s) => Ok(TermType {
                inputs: s.clone(),
                nodes: place_nodes(s),
                outputs: s.clone(),
            }),
            Term::Dead(s) => Ok(TermType {
                inputs: PlaceSet::new(),
                nodes: place_nodes(s),
                outputs: s.clone(),
            }),
            Term::Par(a, b) => {
                let (ta, tb) = (a.typecheck()?, b.typecheck()?);
                let shared: NodeSet = ta.nodes.intersection(&tb.nodes).cloned().collect();
                if !shared.is_empty() {
                    return Err(TermError::Overlap(node_names(&shared)));
                }
                Ok(TermType {
                    inputs: ta.inputs.union(&tb.inputs).cloned().collect(),
                    nodes: ta.nodes.union(&tb.nodes).cloned().collect(),
                    outputs: ta.outputs.union(&tb.outputs).cloned().collect(),
                })
            }
            Term::Seq(a, b) => {
                let (ta, tb) = (a.typecheck()?, b.typecheck()?);
                if ta.outputs != tb.inputs {
                    return Err(TermError::InterfaceMismatch {
                        left_outputs: ta.outputs.into_iter().collect(),
                        right_inputs: tb.inputs.into_iter().collect(),
                    });
                }
                let shared: NodeSet = ta.nodes.intersection(&tb.nodes).cloned().collect();
                let middle = place_nodes(&ta.outputs);
                if shared != middle {
                    let extra: NodeSet = shared.difference(&middle).cloned().collect();
                    return Err(TermError::HiddenShare(node_names(&extra)));
                }
                Ok(TermType {
                    inputs: ta.inputs,
                    nodes: ta.nodes.union(&tb.nodes).cloned().collect(),
                    outputs: tb.outputs,
                })
            }
            Term::Constant(k) => Ok(TermType {
                inputs: PlaceSet::new(),
                nodes: k.nodes().clone(),
                outputs: k.outputs().clone(),
            }),
            Term::Sum { inputs, branches } => {
                let rendered = render_places(inputs);
                if let Some(extra) = branches.keys().find(|m| !m.is_subset(inputs)) {
                    return Err(TermError::ForeignBranch {
                        inputs: rendered,
                        extra: render_places(extra),
                    });
                }
                let expected = 1usize
                    .checked_shl(inputs.len() as u32)
                    .unwrap_or(usize::MAX);
                if branches.len() != expected {
                    let missing = subsets(inputs)
                        .into_iter()
                        .find(|m| !branches.contains_key(m))
                        .unwrap_or_default();
                    return Err(TermError::MissingBranch {
                        inputs: rendered,
                        missing: render_places(&missing),
                    });
                }
                let mut outputs: Option<PlaceSet> = None;
                let mut nodes = NodeSet::new();
                for (m, t) in branches {
                    let tt = t.typecheck().map_err(|e| TermError::BranchType {
                        branch: render_places(m),
                        reason: e.to_string(),
                    })?;
                    if !tt.inputs.is_empty() {
                        return Err(TermError::BranchType {
                            branch: render_places(m),
                            reason: format!("has unmarked inputs {}", render_places(&tt.inputs)),
                        });
                    }
                    match &outputs {
                        None => outputs = Some(tt.outputs.clone()),
                        Some(o) if o != &tt.outputs => {
                            return Err(TermError::BranchType {
                                branch: render_places(m),
                                reason: format!(
                                    "outputs {} differ from {}",
                                    render_places(&tt.outputs),
                                    render_places(o)
                                ),
                            })
                        }
                        Some(_) => {}
                    }
                    nodes.extend(tt.nodes);
                }
                if !place_nodes(inputs).is_subset(&nodes) {
                    return Err(TermError::UncoveredInputs(rendered));
                }
                Ok(TermType {
                    inputs: inputs.clone(),
                    nodes,
                    outputs: outputs.unwrap_or_default(),
                })
            }
        }
    }

    /// Every constant, keyed and deduplicated by signature.
    pub fn constants(&self) -> BTreeMap<String, ConstantKey> {
        let mut out = BTreeMap::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants(&self, out: &mut BTreeMap<String, ConstantKey>) {
        match self {
            Term::Identity(_) | Term::Dead(_) => {}
            Term::Par(a, b) | Term::Seq(a, b) => {
                a.collect_constants(out);
                b.collect_constants(out);
            }
            Term::Constant(k) => {
                out.entry(k.signature()).or_insert_with(|| k.clone());
            }
            Term::Sum { branches, .. } => branches.values().for_each(|t| t.collect_constants(out)),
        }
    }

    /// Canonical representative modulo the monoidal axioms; see [`normalize`].
    pub fn normalize(&self) -> Result<Term, TermError> {
        normalize(self)
    }
}

/// Constant leaves of `t`, deduplicated by signature.
pub fn constants_of(t: &Term) -> BTreeMap<String, ConstantKey> {
    t.constants()
}

struct Atom {
    term: Term,
    inputs: PlaceSet,
    outputs: PlaceSet,
    deps: BTreeSet<usize>,
}

fn collect_atoms(
    t: &Term,
    producer: &mut BTreeMap<PlaceId, usize>,
    atoms: &mut Vec<Atom>,
) -> Result<(), TermError> {
    let mut push = |term: Term,
                    inputs: PlaceSet,
                    outputs: PlaceSet,
                    producer: &mut BTreeMap<PlaceId, usize>| {
        let deps = inputs
            .iter()
            .filter_map(|p| producer.get(p).copied())
            .collect();
        let id = atoms.len();
        for p in &outputs {
            producer.insert(p.clone(), id);
        }
        atoms.push(Atom {
            term,
            inputs,
            outputs,
            deps,
        });
    };
    match t {
        Term::Identity(_) => {}
        Term::Dead(s) => {
            for p in s {
                let single: PlaceSet = [p.clone()].into();
                push(
                    Term::Dead(single.clone()),
                    PlaceSet::new(),
                    single,
                    producer,
                );
            }
        }
        Term::Constant(k) => push(t.clone(), PlaceSet::new(), k.outputs().clone(), producer),
        Term::Sum { inputs, branches } => {
            let branches = branches
                .iter()
                .map(|(m, b)| Ok((m.clone(), normalize(b)?)))
                .collect::<Result<BTreeMap<_, _>, TermError>>()?;
            let norm = Term::Sum {
                inputs: inputs.clone(),
                branches,
            };
            let outputs = norm.typecheck()?.outputs;
            push(norm, inputs.clone(), outputs, producer);
        }
        Term::Par(a, b) | Term::Seq(a, b) => {
            collect_atoms(a, producer, atoms)?;
            collect_atoms(b, producer, atoms)?;
        }
    }
    Ok(())
}

fn par_chain(mut items: Vec<Term>) -> Term {
    let last = items.pop().expect("non-empty layer");
    items
        .into_iter()
        .rev()
        .fold(last, |acc, t| Term::par(t, acc))
}

/// Normal form: the term is flattened into atoms (constants, sums with
/// normalised branches, and single-place dead wires), each atom is placed
/// in the earliest layer after everything it reads from, and layers are
/// chained right-nested. Within a layer atoms are sorted by their printed
/// form and followed by one identity for the wires passing through.
pub fn normalize(t: &Term) -> Result<Term, TermError> {
    let ty = t.typecheck()?;
    let mut atoms = Vec::new();
    collect_atoms(t, &mut BTreeMap::new(), &mut atoms)?;

    let mut layer = vec![0usize; atoms.len()];
    for k in 0..atoms.len() {
        layer[k] = 1 + atoms[k].deps.iter().map(|&d| layer[d]).max().unwrap_or(0);
    }
    let depth = layer.iter().copied().max().unwrap_or(0);

    let mut wires = ty.inputs.clone();
    let mut layers = Vec::new();
    for l in 1..=depth {
        let mut members: Vec<&Atom> = (0..atoms.len())
            .filter(|&k| layer[k] == l)
            .map(|k| &atoms[k])
            .collect();
        members.sort_by_cached_key(|a| a.term.to_string());
        let consumed: PlaceSet = members
            .iter()
            .flat_map(|a| a.inputs.iter().cloned())
            .collect();
        let pass: PlaceSet = wires.difference(&consumed).cloned().collect();
        let mut items: Vec<Term> = members.iter().map(|a| a.term.clone()).collect();
        wires = pass.clone();
        wires.extend(members.iter().flat_map(|a| a.outputs.iter().cloned()));
        if !pass.is_empty() {
            items.push(Term::Identity(pass));
        }
        layers.push(par_chain(items));
    }
    let result = match layers.pop() {
        None => Term::Identity(ty.inputs.clone()),
        Some(last) => layers
            .into_iter()
            .rev()
            .fold(last, |acc, l| Term::seq(l, acc)),
    };
    if result.typecheck()? != ty {
        return Err(TermError::NormalizeType);
    }
    Ok(result)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Identity(s) => write!(f, "I{}", render_places(s)),
            Term::Dead(s) => write!(f, "Bot{}", render_places(s)),
            Term::Par(a, b) => write!(f, "({a} + {b})"),
            Term::Seq(a, b) => write!(f, "({a} ; {b})"),
            Term::Constant(k) => {
                write!(f, "cell[")?;
                for (n, p) in k.ordered_transactions().into_iter().enumerate() {
                    if n > 0 {
                        write!(f, "; ")?;
                    }
                    write!(
                        f,
                        "{}:{}->{}",
                        p.key(),
                        render_places(&p.initial_places),
                        render_places(&p.final_places)
                    )?;
                    if !p.internal_places.is_empty() {
                        write!(f, "~{}", render_places(&p.internal_places))?;
                    }
                }
                write!(f, "]")
            }
            Term::Sum { inputs, branches } => {
                write!(f, "sum{}[", render_places(inputs))?;
                let mut first = true;
                let ordered = subsets(inputs);
                let extra = branches.keys().filter(|m| !m.is_subset(inputs));
                for m in ordered
                    .iter()
                    .filter(|m| branches.contains_key(*m))
                    .chain(extra)
                {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    write!(f, "{}: {}", render_places(m), branches[m])?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Renders a transition-set key for a set of transition names.
pub fn transaction_key<'a>(names: impl IntoIterator<Item = &'a str>) -> String {
    let mut v: Vec<&str> = names.into_iter().collect();
    v.sort();
    render_set(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::net::MarkedNet;

    fn places(ids: &[&str]) -> PlaceSet {
        ids.iter().map(|s| PlaceId::new(*s)).collect()
    }

    fn key_of(net: crate::net::Net) -> ConstantKey {
        let m = MarkedNet::fully_marked(net).unwrap();
        ConstantKey::new(m.enumerate_transactions().unwrap()).unwrap()
    }

    #[test]
    fn constant_key_signature_and_outputs() {
        let k = key_of(fixtures::running_cell_c3());
        assert_eq!(k.signature(), "{{e,g},{e,h},{f}}");
        assert_eq!(k.outputs(), &places(&["p10", "p7", "p8", "p9"]));
        assert_eq!(k.marked(), &places(&["p3", "p4", "p6"]));
        assert_eq!(k.nodes().len(), 11);
    }

    #[test]
    fn identity_and_dead_types() {
        let s = places(&["x", "y"]);
        let t = Term::Identity(s.clone()).typecheck().unwrap();
        assert_eq!((t.inputs, t.outputs), (s.clone(), s.clone()));
        let d = Term::Dead(s.clone()).typecheck().unwrap();
        assert!(d.inputs.is_empty());
        assert_eq!(d.outputs, s);
    }

    #[test]
    fn par_overlap_is_rejected() {
        let t = Term::par(
            Term::Identity(places(&["p4"])),
            Term::Dead(places(&["p4", "p5"])),
        );
        assert_eq!(t.typecheck(), Err(TermError::Overlap(vec!["p4".into()])));
    }

    #[test]
    fn seq_mismatch_and_hidden_share() {
        let t = Term::seq(Term::Dead(places(&["x"])), Term::Identity(places(&["y"])));
        assert!(matches!(
            t.typecheck(),
            Err(TermError::InterfaceMismatch { .. })
        ));
        let k = key_of(fixtures::running_cell_c1());
        // both sides mention p1 as a non-interface node
        let t = Term::seq(
            Term::par(Term::Constant(k.clone()), Term::Dead(places(&["q"]))),
            Term::par(
                Term::Identity(places(&["p4", "p5", "q"])),
                Term::Dead(places(&["p1"])),
            ),
        );
        assert_eq!(
            t.typecheck(),
            Err(TermError::HiddenShare(vec!["p1".into()]))
        );
    }

    #[test]
    fn sum_checks() {
        let k = key_of(fixtures::running_cell_c1());
        let mut branches = BTreeMap::new();
        branches.insert(places(&["p1"]), Term::Constant(k.clone()));
        let missing = Term::Sum {
            inputs: places(&["p1"]),
            branches: branches.clone(),
        };
        assert!(matches!(
            missing.typecheck(),
            Err(TermError::MissingBranch { .. })
        ));
        branches.insert(PlaceSet::new(), Term::Dead(places(&["p4"])));
        let bad = Term::Sum {
            inputs: places(&["p1"]),
            branches: branches.clone(),
        };
        assert!(matches!(bad.typecheck(), Err(TermError::BranchType { .. })));
        branches.insert(PlaceSet::new(), Term::Dead(places(&["p4", "p5"])));
        let good = Term::Sum {
            inputs: places(&["p1"]),
            branches,
        };
        let ty = good.typecheck().unwrap();
        assert_eq!(ty.inputs, places(&["p1"]));
        assert_eq!(ty.outputs, places(&["p4", "p5"]));
        assert_eq!(ty.nodes, k.nodes().clone());
    }

    #[test]
    fn normalize_units_and_commutativity() {
        assert_eq!(
            normalize(&Term::Dead(PlaceSet::new())).unwrap(),
            Term::Identity(PlaceSet::new())
        );
        let a = Term::Dead(places(&["x", "y"]));
        let b = Term::Identity(places(&["z"]));
        let ab = normalize(&Term::par(a.clone(), b.clone())).unwrap();
        let ba = normalize(&Term::par(b.clone(), a.clone())).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.to_string(), "(Bot{x} + (Bot{y} + I{z}))");
        let o = a.typecheck().unwrap().outputs;
        assert_eq!(
            normalize(&Term::seq(a.clone(), Term::Identity(o))).unwrap(),
            normalize(&a).unwrap()
        );
    }

    #[test]
    fn normalize_is_idempotent_on_c1_sum() {
        let k = key_of(fixtures::running_cell_c1());
        let t = Term::Sum {
            inputs: places(&["p1"]),
            branches: [
                (
                    PlaceSet::new(),
                    Term::par(
                        Term::Dead(places(&["p4", "p5"])),
                        Term::Identity(PlaceSet::new()),
                    ),
                ),
                (places(&["p1"]), Term::Constant(k)),
            ]
            .into(),
        };
        let n = normalize(&t).unwrap();
        assert_eq!(normalize(&n).unwrap(), n);
        assert_eq!(n.typecheck().unwrap(), t.typecheck().unwrap());
    }

    #[test]
    fn constants_deduplicate() {
        let k = key_of(fixtures::running_cell_c1());
        let t = Term::par(Term::Constant(k.clone()), Term::Identity(places(&["z"])));
        assert_eq!(constants_of(&t).len(), 1);
        assert!(constants_of(&Term::Identity(places(&["z"]))).is_empty());
    }

    #[test]
    fn subsets_follow_index_order() {
        let s = places(&["p4", "p6"]);
        let v: Vec<String> = subsets(&s).iter().map(render_places).collect();
        assert_eq!(v, vec!["{}", "{p4}", "{p6}", "{p4,p6}"]);
    }
}
