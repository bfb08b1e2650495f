//! Translation of marked occurrence nets into terms.
//!
//! The canonical form is mapped homomorphically; each cell leaf becomes a
//! constant when all of its initial places are marked, and otherwise a sum
//! with one branch per marking `m` of its free inputs. Branch `m` is the
//! dead wires of the cell's unreachable final places next to the
//! translation of the cell restricted to `m`.

use crate::decompose::{at_marking, canonical_form, CompositionTree};
use crate::error::CompileError;
use crate::net::{render_places, MarkedNet, PlaceSet};
use crate::term::{subsets, ConstantKey, Term};

pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Clone, Debug)]
pub struct Compiler {
    max_depth: usize,
}

impl Default for Compiler {
    fn default() -> Self {
        Compiler {
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

fn is_unit(t: &Term) -> bool {
    matches!(t, Term::Identity(s) | Term::Dead(s) if s.is_empty())
}

/// Parallel composition that drops empty identities and dead wires.
fn par_units(a: Term, b: Term) -> Term {
    match (is_unit(&a), is_unit(&b)) {
        (true, true) => Term::Identity(PlaceSet::new()),
        (true, false) => b,
        (false, true) => a,
        (false, false) => Term::par(a, b),
    }
}

impl Compiler {
    pub fn new() -> Self {
        Compiler::default()
    }

    pub fn with_max_depth(max_depth: usize) -> Self {
        Compiler { max_depth }
    }

    pub fn compile_net(&self, m: &MarkedNet) -> Result<Term, CompileError> {
        self.net_at(m, 0)
    }

    /// Translates a single cell; rejects nets that decompose further.
    pub fn compile_cell(&self, cell: &MarkedNet) -> Result<Term, CompileError> {
        match canonical_form(cell) {
            CompositionTree::Cell(_) => self.cell_at(cell, 0),
            other => Err(CompileError::NotACell(other.to_string())),
        }
    }

    fn net_at(&self, m: &MarkedNet, depth: usize) -> Result<Term, CompileError> {
        self.tree(&canonical_form(m), depth)
    }

    fn tree(&self, t: &CompositionTree, depth: usize) -> Result<Term, CompileError> {
        Ok(match t {
            CompositionTree::Identity(s) => Term::Identity(s.clone()),
            CompositionTree::Cell(c) => self.cell_at(c, depth)?,
            CompositionTree::Par(children) => {
                let mut terms = children
                    .iter()
                    .map(|c| self.tree(c, depth))
                    .collect::<Result<Vec<_>, _>>()?;
                let last = terms.pop().unwrap_or(Term::Identity(PlaceSet::new()));
                terms
                    .into_iter()
                    .rev()
                    .fold(last, |acc, t| Term::par(t, acc))
            }
            CompositionTree::Seq(a, b) => Term::seq(self.tree(a, depth)?, self.tree(b, depth)?),
        })
    }

    fn cell_at(&self, cell: &MarkedNet, depth: usize) -> Result<Term, CompileError> {
        if depth > self.max_depth {
            return Err(CompileError::DepthExceeded(self.max_depth));
        }
        let inputs = cell.inputs();
        if inputs.is_empty() {
            let key = ConstantKey::new(cell.enumerate_transactions()?)?;
            // a transaction may leave a token on a place that is not a cell
            // output; no term type can describe that
            let stuck: PlaceSet = key.outputs().difference(&cell.outputs()).cloned().collect();
            if !stuck.is_empty() {
                return Err(CompileError::StrandedPlace {
                    marking: render_places(cell.marking()),
                    places: render_places(&stuck),
                });
            }
            return Ok(Term::Constant(key));
        }
        let outputs = cell.outputs();
        let mut branches = std::collections::BTreeMap::new();
        for m in subsets(&inputs) {
            let restricted = at_marking(cell, &m)?;
            let stranded: PlaceSet = restricted
                .net
                .outputs()
                .difference(&outputs)
                .cloned()
                .collect();
            if !stranded.is_empty() {
                return Err(CompileError::StrandedPlace {
                    marking: render_places(&m),
                    places: render_places(&stranded),
                });
            }
            let inner = self.net_at(&restricted.net, depth + 1)?;
            branches.insert(m, par_units(Term::Dead(restricted.dead_finals), inner));
        }
        Ok(Term::Sum { inputs, branches })
    }
}

/// [`Compiler::compile_net`] with the default depth limit.
pub fn compile_net(m: &MarkedNet) -> Result<Term, CompileError> {
    Compiler::new().compile_net(m)
}

pub fn compile_cell(cell: &MarkedNet) -> Result<Term, CompileError> {
    Compiler::new().compile_cell(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::net::{Net, PlaceId};

    fn places(ids: &[&str]) -> PlaceSet {
        ids.iter().map(|s| PlaceId::new(*s)).collect()
    }

    const C1: &str = "sum{p1}[{}: Bot{p4,p5}, {p1}: cell[{a}:{p1}->{p4}; {b}:{p1}->{p5}]]";
    const C2: &str = "cell[{c}:{p2}->{p6}; {d}:{p2}->{}]";
    const C3: &str = "sum{p4,p6}[\
        {}: (Bot{p10,p8,p9} + cell[{e}:{p3}->{p7}]), \
        {p4}: (Bot{p10,p8,p9} + cell[{e}:{p3}->{p7}]), \
        {p6}: (Bot{p8} + (cell[{g}:{p6}->{p9}; {h}:{p6}->{p10}] + cell[{e}:{p3}->{p7}])), \
        {p4,p6}: cell[{e,g}:{p3,p6}->{p7,p9}; {e,h}:{p3,p6}->{p10,p7}; {f}:{p3,p4,p6}->{p8}]]";

    #[test]
    fn cells_of_the_running_net() {
        let c1 = compile_cell(&MarkedNet::unmarked(fixtures::running_cell_c1()).unwrap()).unwrap();
        assert_eq!(c1.to_string(), C1);
        let c2 =
            compile_cell(&MarkedNet::new(fixtures::running_cell_c2(), places(&["p2"])).unwrap())
                .unwrap();
        assert_eq!(c2.to_string(), C2);
        let c3 =
            compile_cell(&MarkedNet::new(fixtures::running_cell_c3(), places(&["p3"])).unwrap())
                .unwrap();
        assert_eq!(c3.to_string(), C3);
    }

    #[test]
    fn running_net_term_and_type() {
        let t = compile_net(&fixtures::running_marked()).unwrap();
        assert_eq!(t.to_string(), format!("(({C1} + {C2}) ; ({C3} + I{{p5}}))"));
        let ty = t.typecheck().unwrap();
        assert_eq!(ty.inputs, places(&["p1"]));
        assert_eq!(ty.outputs, places(&["p10", "p5", "p7", "p8", "p9"]));
        assert_eq!(ty.nodes, fixtures::running_net().nodes());
    }

    #[test]
    fn identity_and_two_cell() {
        let s = places(&["x", "y"]);
        assert_eq!(
            compile_net(&MarkedNet::identity(&s)).unwrap(),
            Term::Identity(s)
        );
        let t = compile_net(&fixtures::two_cell_marked()).unwrap();
        match &t {
            Term::Seq(a, b) => {
                assert!(matches!(**a, Term::Constant(_)));
                assert!(matches!(**b, Term::Sum { .. }));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_cells_are_rejected() {
        let err = compile_cell(&fixtures::running_marked()).unwrap_err();
        assert!(matches!(err, CompileError::NotACell(_)));
    }

    #[test]
    fn stranded_places_are_reported() {
        let net = Net::from_parts(
            &["p", "q", "x", "z", "w"],
            &[
                ("t1", &["p"], &["x"]),
                ("t2", &["x", "q"], &["z"]),
                ("t3", &["q", "p"], &["w"]),
            ],
        )
        .unwrap();
        let err = compile_net(&MarkedNet::unmarked(net).unwrap()).unwrap_err();
        assert!(matches!(err, CompileError::StrandedPlace { .. }), "{err}");
    }

    #[test]
    fn tokens_stuck_inside_a_cell_are_reported() {
        let net = Net::from_parts(
            &["q0", "q1", "q2"],
            &[
                ("t0", &["q0", "q2"], &[]),
                ("t1", &["q0", "q1"], &[]),
                ("t2", &["q0"], &[]),
                ("t3", &["q1"], &["q2"]),
            ],
        )
        .unwrap();
        let err = compile_net(&MarkedNet::new(net, places(&["q0"])).unwrap()).unwrap_err();
        assert_eq!(
            err,
            CompileError::StrandedPlace {
                marking: "{q0,q1}".into(),
                places: "{q2}".into()
            }
        );
    }

    #[test]
    fn depth_guard() {
        let err = Compiler::with_max_depth(0)
            .compile_net(&fixtures::running_marked())
            .unwrap_err();
        assert_eq!(err, CompileError::DepthExceeded(0));
    }

    #[test]
    fn output_is_byte_stable() {
        let a = compile_net(&fixtures::running_marked())
            .unwrap()
            .to_string();
        let b = compile_net(&fixtures::running_marked())
            .unwrap()
            .to_string();
        assert_eq!(a, b);
    }
}
