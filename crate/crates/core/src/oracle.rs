//! Reference semantics built on prime event structures.
//!
//! The event structure of a net has its transitions as events, causality
//! as the flow order and conflict inherited from shared pre-places. On top
//! of it this module computes stopping prefixes, branching cells and the
//! recursively stopped configurations, and compares them with the
//! configurations read off a compiled term. It also evaluates a term
//! operationally to an exact distribution over outcomes, which serves as a
//! check on the matrix pipeline.
//!
//! Event sets are packed into `u64` masks, so a structure holds at most 64
//! events. Everything here is exponential and meant for small nets.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compile::compile_net;
use crate::decompose::remove_places;
use crate::error::{NetError, OracleError};
use crate::kleisli::DeltaTable;
use crate::net::{
    render_places, render_set, MarkedNet, Net, PlaceId, PlaceSet, Relations, TransitionId,
    TransitionSet,
};
use crate::term::{subsets, Term};

/// A downward-closed, conflict-free set of events.
pub type Configuration = TransitionSet;

type Mask = u64;

struct Bits(Mask);

impl Iterator for Bits {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

fn bit(i: usize) -> Mask {
    1 << i
}

pub fn render_configuration(v: &Configuration) -> String {
    render_set(v.iter().map(|t| t.as_str()))
}

/// A finite prime event structure. Events are kept sorted by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pes {
    events: Vec<TransitionId>,
    /// Causes of each event, the event included.
    down: Vec<Mask>,
    conflict: Vec<Mask>,
}

/// The event structure of an occurrence net, with every transition as an
/// event. Unmarked initial places should be pruned first; see [`pes_at`].
pub fn pes_of_net(net: &Net) -> Result<Pes, OracleError> {
    let events: Vec<TransitionId> = net.transition_ids().cloned().collect();
    if events.len() > 64 {
        return Err(OracleError::TooManyEvents(events.len()));
    }
    let rel = Relations::new(net);
    let node = |t: &TransitionId| crate::net::Node::Transition(t.clone());
    let mut down = vec![0; events.len()];
    let mut conflict = vec![0; events.len()];
    for (i, ei) in events.iter().enumerate() {
        for (j, ej) in events.iter().enumerate() {
            if rel.leq(&node(ej), &node(ei)) {
                down[i] |= bit(j);
            }
            if rel.conflict(ei, ej) {
                conflict[i] |= bit(j);
            }
        }
    }
    Ok(Pes {
        events,
        down,
        conflict,
    })
}

/// The net of `marked` once exactly the inputs `j` receive a token: every
/// other input and all its consequences are removed.
pub fn net_at(marked: &MarkedNet, j: &PlaceSet) -> Result<MarkedNet, OracleError> {
    let inputs = marked.inputs();
    if !j.is_subset(&inputs) {
        return Err(OracleError::ForeignMarking {
            marking: render_places(j),
            inputs: render_places(&inputs),
        });
    }
    let absent: PlaceSet = inputs.difference(j).cloned().collect();
    let (net, marking) = remove_places(marked, &absent)?.net.into_parts();
    let marking = marking
        .into_iter()
        .chain(j.iter().filter(|p| net.has_place(p)).cloned())
        .collect();
    Ok(MarkedNet::new(net, marking)?)
}

/// The event structure of `(N, m ∪ j)`.
pub fn pes_at(marked: &MarkedNet, j: &PlaceSet) -> Result<Pes, OracleError> {
    pes_of_net(net_at(marked, j)?.net())
}

impl Pes {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[TransitionId] {
        &self.events
    }

    fn all(&self) -> Mask {
        if self.events.len() == 64 {
            Mask::MAX
        } else {
            bit(self.events.len()) - 1
        }
    }

    fn index(&self, t: &TransitionId) -> Result<usize, OracleError> {
        self.events
            .binary_search(t)
            .map_err(|_| OracleError::Net(NetError::UnknownNode(t.to_string())))
    }

    fn mask_of(&self, v: &Configuration) -> Result<Mask, OracleError> {
        v.iter().try_fold(0, |m, t| Ok(m | bit(self.index(t)?)))
    }

    fn set_of(&self, mask: Mask) -> Configuration {
        Bits(mask).map(|i| self.events[i].clone()).collect()
    }

    /// Causes of `t`, including `t`.
    pub fn causes(&self, t: &TransitionId) -> Result<Configuration, OracleError> {
        Ok(self.set_of(self.down[self.index(t)?]))
    }

    pub fn in_conflict(&self, a: &TransitionId, b: &TransitionId) -> Result<bool, OracleError> {
        Ok(self.conflict[self.index(a)?] & bit(self.index(b)?) != 0)
    }

    pub fn immediate_conflict(
        &self,
        a: &TransitionId,
        b: &TransitionId,
    ) -> Result<bool, OracleError> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        Ok(self.imm(i, j, self.all()))
    }

    /// All pairs `a # b` with `a < b`.
    pub fn conflicts(&self) -> Vec<(TransitionId, TransitionId)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            for j in Bits(self.conflict[i]).filter(|&j| j > i) {
                out.push((self.events[i].clone(), self.events[j].clone()));
            }
        }
        out
    }

    /// Immediate conflict of `i` and `j` in the structure induced by
    /// `within`: they conflict and no other pair of their causes does.
    fn imm(&self, i: usize, j: usize, within: Mask) -> bool {
        if self.conflict[i] & bit(j) == 0 {
            return false;
        }
        let dj = self.down[j] & within;
        Bits(self.down[i] & within).all(|a| {
            let c = self.conflict[a] & dj;
            if a == i {
                c & !bit(j) == 0
            } else {
                c == 0
            }
        })
    }

    fn imm_table(&self, within: Mask) -> Vec<Mask> {
        let mut table = vec![0; self.len()];
        for i in Bits(within) {
            for j in Bits(within & self.conflict[i]) {
                if self.imm(i, j, within) {
                    table[i] |= bit(j);
                }
            }
        }
        table
    }

    fn is_configuration_mask(&self, v: Mask) -> bool {
        Bits(v).all(|e| self.down[e] & !v == 0 && self.conflict[e] & v == 0)
    }

    pub fn is_configuration(&self, v: &Configuration) -> bool {
        self.mask_of(v).is_ok_and(|m| self.is_configuration_mask(m))
    }

    /// Events outside `v` that conflict with nothing in `v`.
    fn future_mask(&self, v: Mask) -> Mask {
        Bits(self.all() & !v)
            .filter(|&e| self.conflict[e] & v == 0)
            .fold(0, |m, e| m | bit(e))
    }

    /// Least set containing `x` that is closed under causes and immediate
    /// conflicts, all taken inside `within`.
    fn closure_mask(&self, x: Mask, within: Mask, imm: &[Mask]) -> Mask {
        let mut cur = x;
        loop {
            let next = Bits(cur).fold(cur, |m, e| m | (self.down[e] & within) | imm[e]);
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    fn initial_stopping_prefixes_mask(&self, within: Mask, imm: &[Mask]) -> Vec<Mask> {
        let closures: BTreeMap<usize, Mask> = Bits(within)
            .map(|e| (e, self.closure_mask(bit(e), within, imm)))
            .collect();
        let mut out: Vec<Mask> = Vec::new();
        for c in closures.values() {
            if Bits(*c).all(|e| closures[&e] == *c) && !out.contains(c) {
                out.push(*c);
            }
        }
        out
    }

    /// Every configuration of the structure induced by `within`; causes
    /// outside `within` count as already executed.
    fn configurations_mask(&self, within: Mask) -> Vec<Mask> {
        let mut seen: HashSet<Mask> = HashSet::from([0]);
        let mut order = vec![0];
        let mut queue = VecDeque::from([0]);
        while let Some(v) = queue.pop_front() {
            for e in Bits(within & !v) {
                if self.enabled(e, v, within) && seen.insert(v | bit(e)) {
                    order.push(v | bit(e));
                    queue.push_back(v | bit(e));
                }
            }
        }
        order
    }

    fn enabled(&self, e: usize, v: Mask, within: Mask) -> bool {
        self.down[e] & within & !bit(e) & !v == 0 && self.conflict[e] & v == 0
    }

    fn is_maximal_in(&self, v: Mask, within: Mask) -> bool {
        Bits(within & !v).all(|e| !self.enabled(e, v, within))
    }

    /// `v` is maximal in its own closure: everything the closure adds
    /// conflicts with `v`.
    fn is_stopped_mask(&self, v: Mask, within: Mask, imm: &[Mask]) -> bool {
        let cl = self.closure_mask(v, within, imm);
        Bits(cl & !v).all(|e| self.conflict[e] & v != 0)
    }

    fn restrict(&self, within: Mask) -> Pes {
        let keep: Vec<usize> = Bits(within).collect();
        let remap = |m: Mask| {
            keep.iter()
                .enumerate()
                .filter(|(_, &old)| m & bit(old) != 0)
                .fold(0, |acc, (new, _)| acc | bit(new))
        };
        Pes {
            events: keep.iter().map(|&i| self.events[i].clone()).collect(),
            down: keep.iter().map(|&i| remap(self.down[i])).collect(),
            conflict: keep.iter().map(|&i| remap(self.conflict[i])).collect(),
        }
    }

    /// Least set containing `x` that is closed under causes and immediate
    /// conflicts.
    pub fn closure(&self, x: &TransitionSet) -> Result<TransitionSet, OracleError> {
        let all = self.all();
        Ok(self.set_of(self.closure_mask(self.mask_of(x)?, all, &self.imm_table(all))))
    }

    /// Non-empty stopping prefixes with no non-empty stopping prefix
    /// strictly inside, ordered by their smallest event.
    pub fn initial_stopping_prefixes(&self) -> Vec<TransitionSet> {
        let all = self.all();
        self.initial_stopping_prefixes_mask(all, &self.imm_table(all))
            .into_iter()
            .map(|m| self.set_of(m))
            .collect()
    }

    pub fn is_stopping_prefix(&self, b: &TransitionSet) -> bool {
        let all = self.all();
        self.mask_of(b)
            .is_ok_and(|m| self.closure_mask(m, all, &self.imm_table(all)) == m)
    }

    pub fn configurations(&self) -> Vec<Configuration> {
        let mut out: Vec<Configuration> = self
            .configurations_mask(self.all())
            .into_iter()
            .map(|m| self.set_of(m))
            .collect();
        out.sort();
        out
    }

    pub fn maximal_configurations(&self) -> Vec<Configuration> {
        let all = self.all();
        let mut out: Vec<Configuration> = self
            .configurations_mask(all)
            .into_iter()
            .filter(|&v| self.is_maximal_in(v, all))
            .map(|m| self.set_of(m))
            .collect();
        out.sort();
        out
    }

    /// Whether `v` is a maximal configuration of some stopping prefix.
    pub fn is_stopped(&self, v: &Configuration) -> Result<bool, OracleError> {
        let m = self.mask_of(v)?;
        let all = self.all();
        Ok(self.is_configuration_mask(m) && self.is_stopped_mask(m, all, &self.imm_table(all)))
    }
}

impl fmt::Display for Pes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "events {}",
            render_set(self.events.iter().map(|t| t.as_str()))
        )?;
        for (i, e) in self.events.iter().enumerate() {
            let causes = self.set_of(self.down[i] & !bit(i));
            if !causes.is_empty() {
                writeln!(f, "{} < {e}", render_configuration(&causes))?;
            }
        }
        let all = self.all();
        let imm = self.imm_table(all);
        for (a, b) in self.conflicts() {
            let (i, j) = (self.index(&a).unwrap(), self.index(&b).unwrap());
            let kind = if imm[i] & bit(j) != 0 { "#0" } else { "#" };
            writeln!(f, "{a} {kind} {b}")?;
        }
        Ok(())
    }
}

/// The events that can still happen after `v`, as a structure of their own.
pub fn future(pes: &Pes, v: &Configuration) -> Result<Pes, OracleError> {
    let m = pes.mask_of(v)?;
    if !pes.is_configuration_mask(m) {
        return Err(OracleError::NotAConfiguration(render_configuration(v)));
    }
    Ok(pes.restrict(pes.future_mask(m)))
}

/// The branching cells available after `v`.
pub fn branching_cells(pes: &Pes, v: &Configuration) -> Result<Vec<TransitionSet>, OracleError> {
    Ok(future(pes, v)?.initial_stopping_prefixes())
}

/// A recursively stopped configuration with one witnessing chain
/// `∅ = v0 ⊂ v1 ⊂ … ⊂ vn`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RStopped {
    pub config: Configuration,
    pub chain: Vec<Configuration>,
    /// No recursively stopped configuration strictly contains this one.
    pub maximal: bool,
}

/// Breadth-first search from `∅`, extending each configuration by the
/// non-empty stopped configurations of its future. Each configuration is
/// expanded once.
pub fn r_stopped_configs(pes: &Pes) -> Vec<RStopped> {
    let mut pred: BTreeMap<Mask, Mask> = BTreeMap::new();
    let mut found: Vec<Mask> = vec![0];
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        let within = pes.future_mask(v);
        let imm = pes.imm_table(within);
        for w in pes.configurations_mask(within) {
            if w == 0 || !pes.is_stopped_mask(w, within, &imm) {
                continue;
            }
            let u = v | w;
            if u != 0 && !pred.contains_key(&u) {
                pred.insert(u, v);
                found.push(u);
                queue.push_back(u);
            }
        }
    }
    let mut out: Vec<RStopped> = found
        .iter()
        .map(|&v| {
            let mut chain = vec![v];
            let mut cur = v;
            while cur != 0 {
                cur = pred[&cur];
                chain.push(cur);
            }
            chain.reverse();
            RStopped {
                config: pes.set_of(v),
                chain: chain.into_iter().map(|m| pes.set_of(m)).collect(),
                maximal: !found.iter().any(|&u| u != v && u & v == v),
            }
        })
        .collect();
    out.sort_by(|a, b| a.config.cmp(&b.config));
    out
}

pub fn maximal_r_stopped(pes: &Pes) -> BTreeSet<Configuration> {
    r_stopped_configs(pes)
        .into_iter()
        .filter(|r| r.maximal)
        .map(|r| r.config)
        .collect()
}

fn term_inputs(t: &Term) -> PlaceSet {
    match t {
        Term::Identity(s) => s.clone(),
        Term::Dead(_) | Term::Constant(_) => PlaceSet::new(),
        Term::Sum { inputs, .. } => inputs.clone(),
        Term::Par(a, b) => term_inputs(a).union(&term_inputs(b)).cloned().collect(),
        Term::Seq(a, _) => term_inputs(a),
    }
}

fn check_marking(t: &Term, m: &PlaceSet) -> Result<(), OracleError> {
    let inputs = t.typecheck()?.inputs;
    if !m.is_subset(&inputs) {
        return Err(OracleError::ForeignMarking {
            marking: render_places(m),
            inputs: render_places(&inputs),
        });
    }
    Ok(())
}

type Run = (Configuration, PlaceSet);

/// Configurations of a term under input marking `m`, each paired with the
/// output marking it leaves. Sequential composition feeds that marking to
/// the second stage, so tokens carried by identities are not lost.
fn runs(t: &Term, m: &PlaceSet) -> BTreeSet<Run> {
    match t {
        Term::Identity(_) => BTreeSet::from([(Configuration::new(), m.clone())]),
        Term::Dead(_) => BTreeSet::from([(Configuration::new(), PlaceSet::new())]),
        Term::Constant(k) => k
            .transactions()
            .iter()
            .map(|p| (p.transitions.clone(), p.final_places.clone()))
            .collect(),
        Term::Sum { branches, .. } => runs(&branches[m], &PlaceSet::new()),
        Term::Par(a, b) => {
            let ma = m.intersection(&term_inputs(a)).cloned().collect();
            let mb = m.intersection(&term_inputs(b)).cloned().collect();
            let rb = runs(b, &mb);
            let mut out = BTreeSet::new();
            for (va, oa) in runs(a, &ma) {
                for (vb, ob) in &rb {
                    out.insert((
                        va.union(vb).cloned().collect(),
                        oa.union(ob).cloned().collect(),
                    ));
                }
            }
            out
        }
        Term::Seq(a, b) => {
            let mut out = BTreeSet::new();
            for (v1, o1) in runs(a, m) {
                for (v2, o2) in runs(b, &o1) {
                    out.insert((v1.union(&v2).cloned().collect(), o2));
                }
            }
            out
        }
    }
}

/// The configurations a well-typed term allows when exactly the inputs `m`
/// are marked.
pub fn conf_of_term(t: &Term, m: &PlaceSet) -> Result<BTreeSet<Configuration>, OracleError> {
    check_marking(t, m)?;
    Ok(runs(t, m).into_iter().map(|(v, _)| v).collect())
}

/// One input marking compared by [`check_correspondence`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrespondenceCase {
    pub marking: PlaceSet,
    /// Maximal recursively stopped configurations.
    pub oracle: BTreeSet<Configuration>,
    pub term: BTreeSet<Configuration>,
}

impl CorrespondenceCase {
    pub fn agrees(&self) -> bool {
        self.oracle == self.term
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrespondenceReport {
    pub cases: Vec<CorrespondenceCase>,
}

impl CorrespondenceReport {
    pub fn is_ok(&self) -> bool {
        self.cases.iter().all(CorrespondenceCase::agrees)
    }
}

impl fmt::Display for CorrespondenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |s: &mut dyn Iterator<Item = &Configuration>| {
            s.map(render_configuration).collect::<Vec<_>>().join(" ")
        };
        for c in &self.cases {
            if c.agrees() {
                writeln!(
                    f,
                    "j = {}: equal, {} configurations",
                    render_places(&c.marking),
                    c.oracle.len()
                )?;
                writeln!(f, "  {}", list(&mut c.oracle.iter()))?;
            } else {
                writeln!(f, "j = {}: MISMATCH", render_places(&c.marking))?;
                writeln!(
                    f,
                    "  oracle only: {}",
                    list(&mut c.oracle.difference(&c.term))
                )?;
                writeln!(
                    f,
                    "  term only: {}",
                    list(&mut c.term.difference(&c.oracle))
                )?;
            }
        }
        Ok(())
    }
}

/// Compares, for every subset `j` of the unmarked inputs, the maximal
/// recursively stopped configurations of `(N, m ∪ j)` with the
/// configurations of the compiled term under `j`.
pub fn check_correspondence(marked: &MarkedNet) -> Result<CorrespondenceReport, OracleError> {
    let t = compile_net(marked)?;
    let cases = subsets(&marked.inputs())
        .into_iter()
        .map(|j| {
            Ok(CorrespondenceCase {
                oracle: maximal_r_stopped(&pes_at(marked, &j)?),
                term: conf_of_term(&t, &j)?,
                marking: j,
            })
        })
        .collect::<Result<_, OracleError>>()?;
    Ok(CorrespondenceReport { cases })
}

/// Exact distribution over complete runs, keyed by configuration and the
/// resulting marking of the output places.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub outputs: PlaceSet,
    pub outcomes: BTreeMap<Run, f64>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.outcomes.values().fold(0.0, |a, w| a + w)
    }

    /// Probability that `p` ends up marked.
    pub fn place_marginal(&self, p: &PlaceId) -> f64 {
        self.outcomes
            .iter()
            .filter(|((_, m), _)| m.contains(p))
            .fold(0.0, |a, (_, w)| a + w)
    }

    pub fn marginals(&self) -> BTreeMap<PlaceId, f64> {
        self.outputs
            .iter()
            .map(|p| (p.clone(), self.place_marginal(p)))
            .collect()
    }

    pub fn markings(&self) -> BTreeMap<PlaceSet, f64> {
        let mut out = BTreeMap::new();
        for ((_, m), w) in &self.outcomes {
            *out.entry(m.clone()).or_insert(0.0) += w;
        }
        out
    }

    pub fn configurations(&self) -> BTreeMap<Configuration, f64> {
        let mut out = BTreeMap::new();
        for ((v, _), w) in &self.outcomes {
            *out.entry(v.clone()).or_insert(0.0) += w;
        }
        out
    }

    /// Largest pointwise difference, counting absent outcomes as 0.
    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> f64 {
        self.outcomes
            .keys()
            .chain(other.outcomes.keys())
            .map(|k| {
                let a = self.outcomes.get(k).copied().unwrap_or(0.0);
                let b = other.outcomes.get(k).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for OutcomeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((v, m), w) in &self.outcomes {
            writeln!(
                f,
                "{} -> {}\t{w}",
                render_configuration(v),
                render_places(m)
            )?;
        }
        for (p, w) in self.marginals() {
            writeln!(f, "P({p}) = {w}")?;
        }
        Ok(())
    }
}

fn weighted_runs(
    t: &Term,
    delta: &DeltaTable,
    m: &PlaceSet,
) -> Result<BTreeMap<Run, f64>, OracleError> {
    let single = |run: Run| BTreeMap::from([(run, 1.0)]);
    Ok(match t {
        Term::Identity(_) => single((Configuration::new(), m.clone())),
        Term::Dead(_) => single((Configuration::new(), PlaceSet::new())),
        Term::Constant(k) => delta
            .distribution(k)?
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(p, w)| ((p.transitions.clone(), p.final_places.clone()), w))
            .collect(),
        Term::Sum { branches, .. } => weighted_runs(&branches[m], delta, &PlaceSet::new())?,
        Term::Par(a, b) => {
            let ma = m.intersection(&term_inputs(a)).cloned().collect();
            let mb = m.intersection(&term_inputs(b)).cloned().collect();
            let rb = weighted_runs(b, delta, &mb)?;
            let mut out = BTreeMap::new();
            for ((va, oa), wa) in weighted_runs(a, delta, &ma)? {
                for ((vb, ob), wb) in &rb {
                    let key = (
                        va.union(vb).cloned().collect(),
                        oa.union(ob).cloned().collect(),
                    );
                    *out.entry(key).or_insert(0.0) += wa * wb;
                }
            }
            out
        }
        Term::Seq(a, b) => {
            let mut out = BTreeMap::new();
            for ((v1, o1), w1) in weighted_runs(a, delta, m)? {
                for ((v2, o2), w2) in weighted_runs(b, delta, &o1)? {
                    *out.entry((v1.union(&v2).cloned().collect(), o2))
                        .or_insert(0.0) += w1 * w2;
                }
            }
            out
        }
    })
}

/// Exact operational evaluation of a term: each constant expands to its
/// transactions weighted by δ, sums select the branch of the incoming
/// marking, and runs combine by product.
pub fn evaluate_term(
    t: &Term,
    delta: &DeltaTable,
    m: &PlaceSet,
) -> Result<OutcomeDistribution, OracleError> {
    check_marking(t, m)?;
    Ok(OutcomeDistribution {
        outputs: t.typecheck()?.outputs,
        outcomes: weighted_runs(t, delta, m)?,
    })
}

/// Compiles `marked` and evaluates it with the inputs `j` marked.
pub fn enumerate_outcome_distribution(
    marked: &MarkedNet,
    delta: &DeltaTable,
    j: &PlaceSet,
) -> Result<OutcomeDistribution, OracleError> {
    evaluate_term(&compile_net(marked)?, delta, j)
}

/// The same distribution computed directly on the event structure: from
/// each recursively stopped configuration, resolve the first branching
/// cell of its future, weighting its maximal configurations by the δ entry
/// whose signature lists them.
pub fn ab_outcome_distribution(
    marked: &MarkedNet,
    delta: &DeltaTable,
    j: &PlaceSet,
) -> Result<OutcomeDistribution, OracleError> {
    let pruned = net_at(marked, j)?;
    let pes = pes_of_net(pruned.net())?;
    let initial: PlaceSet = marked.marking().union(j).cloned().collect();
    let outputs = marked.outputs();

    let mut frontier: BTreeMap<Mask, f64> = BTreeMap::from([(0, 1.0)]);
    let mut finished: BTreeMap<Mask, f64> = BTreeMap::new();
    // masks only grow, so popping the smallest never revisits one
    while let Some((v, w)) = frontier.pop_first() {
        let within = pes.future_mask(v);
        if within == 0 {
            *finished.entry(v).or_insert(0.0) += w;
            continue;
        }
        let imm = pes.imm_table(within);
        let cell = pes.initial_stopping_prefixes_mask(within, &imm)[0];
        let omega: Vec<Mask> = pes
            .configurations_mask(cell)
            .into_iter()
            .filter(|&u| pes.is_maximal_in(u, cell))
            .collect();
        for (u, q) in cell_distribution(&pes, &omega, delta)? {
            if q > 0.0 {
                *frontier.entry(v | u).or_insert(0.0) += w * q;
            }
        }
    }

    let net = marked.net();
    let mut outcomes = BTreeMap::new();
    for (v, w) in finished {
        let config = pes.set_of(v);
        let mut marking = initial.clone();
        for t in &config {
            marking.extend(net.postset(t).iter().cloned());
        }
        for t in &config {
            for p in net.preset(t) {
                marking.remove(p);
            }
        }
        let marking = marking.intersection(&outputs).cloned().collect();
        *outcomes.entry((config, marking)).or_insert(0.0) += w;
    }
    Ok(OutcomeDistribution { outputs, outcomes })
}

fn cell_distribution(
    pes: &Pes,
    omega: &[Mask],
    delta: &DeltaTable,
) -> Result<Vec<(Mask, f64)>, OracleError> {
    if omega.len() == 1 {
        return Ok(vec![(omega[0], 1.0)]);
    }
    let keys: Vec<String> = omega
        .iter()
        .map(|&u| render_configuration(&pes.set_of(u)))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    let signature = format!("{{{}}}", sorted.join(","));
    match delta.get(&signature) {
        Some(entry) => Ok(omega
            .iter()
            .zip(&keys)
            .map(|(&u, k)| (u, entry.get(k).copied().unwrap_or(0.0)))
            .collect()),
        None if !delta.is_strict() => {
            let q = 1.0 / omega.len() as f64;
            Ok(omega.iter().map(|&u| (u, q)).collect())
        }
        None => Err(OracleError::MissingCellDistribution(signature)),
    }
}

/// Monte Carlo estimate of per-place marking probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSummary {
    pub samples: usize,
    /// Estimate and standard error for each output place.
    pub marginals: BTreeMap<PlaceId, (f64, f64)>,
}

impl fmt::Display for SampleSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} samples", self.samples)?;
        for (p, (mean, se)) in &self.marginals {
            writeln!(f, "P({p}) = {mean} ± {se}")?;
        }
        Ok(())
    }
}

fn sample_run(
    t: &Term,
    delta: &DeltaTable,
    m: &PlaceSet,
    rng: &mut ChaCha8Rng,
) -> Result<PlaceSet, OracleError> {
    Ok(match t {
        Term::Identity(_) => m.clone(),
        Term::Dead(_) => PlaceSet::new(),
        Term::Constant(k) => {
            let dist = delta.distribution(k)?;
            let mut x: f64 = rng.gen();
            let mut pick = dist
                .last()
                .map(|(p, _)| *p)
                .expect("constants are non-empty");
            for (p, w) in &dist {
                if x < *w {
                    pick = p;
                    break;
                }
                x -= w;
            }
            pick.final_places.clone()
        }
        Term::Sum { branches, .. } => sample_run(&branches[m], delta, &PlaceSet::new(), rng)?,
        Term::Par(a, b) => {
            let ma = m.intersection(&term_inputs(a)).cloned().collect();
            let mb = m.intersection(&term_inputs(b)).cloned().collect();
            let oa = sample_run(a, delta, &ma, rng)?;
            oa.union(&sample_run(b, delta, &mb, rng)?)
                .cloned()
                .collect()
        }
        Term::Seq(a, b) => {
            let o1 = sample_run(a, delta, m, rng)?;
            sample_run(b, delta, &o1, rng)?
        }
    })
}

/// Draws `samples` independent runs with a seeded generator.
pub fn sample_outcomes(
    t: &Term,
    delta: &DeltaTable,
    m: &PlaceSet,
    samples: usize,
    seed: u64,
) -> Result<SampleSummary, OracleError> {
    check_marking(t, m)?;
    let outputs = t.typecheck()?.outputs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<PlaceId, usize> = outputs.iter().map(|p| (p.clone(), 0)).collect();
    for _ in 0..samples {
        for p in sample_run(t, delta, m, &mut rng)? {
            if let Some(c) = counts.get_mut(&p) {
                *c += 1;
            }
        }
    }
    let n = samples.max(1) as f64;
    let marginals = counts
        .into_iter()
        .map(|(p, c)| {
            let mean = c as f64 / n;
            (p, (mean, (mean * (1.0 - mean) / n).sqrt()))
        })
        .collect();
    Ok(SampleSummary { samples, marginals })
}
