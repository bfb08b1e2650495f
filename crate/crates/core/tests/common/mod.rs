//! Helpers shared by the integration suites.

#![allow(dead_code)]

use std::collections::BTreeMap;

use cellnet::kleisli::{interpret, interpret_lex};
use cellnet::net::{Arcs, PlaceId, PlaceSet, TransitionId};
use cellnet::{fixtures, DeltaTable, KleisliArrow, MarkedNet, Net, Term, Wiring};
use rand::seq::SliceRandom;
use rand::Rng;

pub const MAX_PLACES: usize = 8;
pub const MAX_TRANSITIONS: usize = 6;

/// Builds a net on places `q0..q{n-1}` from bitmask specs. Arcs only go
/// from lower to higher place indices and each place gets at most one
/// producer, so the result is acyclic without backward conflicts; nets
/// with self-conflicts are rejected by validation and yield `None`.
pub fn build_net(n: usize, specs: &[(u8, u8)], mark: u8) -> Option<MarkedNet> {
    let name = |i: usize| PlaceId::new(format!("q{i}"));
    let mut produced = vec![false; n];
    let mut transitions = Vec::new();
    for (k, (pre_m, post_m)) in specs.iter().enumerate() {
        let pre: Vec<usize> = (0..n).filter(|i| pre_m >> i & 1 == 1).collect();
        let Some(&top) = pre.last() else { continue };
        let post: Vec<usize> = (top + 1..n)
            .filter(|&i| post_m >> i & 1 == 1 && !produced[i])
            .collect();
        for &i in &post {
            produced[i] = true;
        }
        transitions.push((
            TransitionId::new(format!("t{k}")),
            Arcs {
                pre: pre.into_iter().map(name).collect(),
                post: post.into_iter().map(name).collect(),
            },
        ));
    }
    let net = Net::new((0..n).map(name), transitions).ok()?;
    let candidates: PlaceSet = net
        .min_places()
        .difference(&net.isolated_places())
        .cloned()
        .collect();
    let marking = candidates
        .into_iter()
        .filter(|p| {
            let i: usize = p.as_str()[1..].parse().unwrap();
            mark >> i & 1 == 1
        })
        .collect();
    MarkedNet::new(net, marking).ok()
}

pub fn random_net(rng: &mut impl Rng) -> MarkedNet {
    loop {
        let n = rng.gen_range(2..=MAX_PLACES);
        let t = rng.gen_range(0..=MAX_TRANSITIONS);
        let specs: Vec<(u8, u8)> = (0..t).map(|_| (rng.gen(), rng.gen())).collect();
        if let Some(m) = build_net(n, &specs, rng.gen()) {
            return m;
        }
    }
}

/// A δ table with random weights for every constant of `t`.
pub fn random_delta(t: &Term, rng: &mut impl Rng) -> DeltaTable {
    let mut d = DeltaTable::new(true);
    for (sig, key) in t.constants() {
        let txs = key.ordered_transactions();
        let w: Vec<f64> = txs.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = w.iter().sum();
        let probs: BTreeMap<String, f64> = txs
            .iter()
            .zip(&w)
            .map(|(p, x)| (p.key(), x / total))
            .collect();
        d.insert_map(sig, probs);
    }
    d
}

/// Parameters for the running example, drawn so that `pf + pg2 <= 1`.
#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub pa: f64,
    pub pc: f64,
    pub pf: f64,
    pub pg: f64,
    pub pg2: f64,
}

impl Params {
    pub fn draw(rng: &mut impl Rng) -> Self {
        let pf = rng.gen_range(0.0..1.0);
        Params {
            pa: rng.gen_range(0.0..1.0),
            pc: rng.gen_range(0.0..1.0),
            pf,
            pg: rng.gen_range(0.0..1.0),
            pg2: rng.gen_range(0.0..=1.0 - pf),
        }
    }

    pub fn delta(&self) -> DeltaTable {
        fixtures::running_delta(self.pa, self.pc, self.pf, self.pg, self.pg2)
    }
}

pub fn running_term() -> Term {
    cellnet::compile_net(&fixtures::running_marked()).unwrap()
}

pub fn two_cell_term() -> Term {
    cellnet::compile_net(&fixtures::two_cell_marked()).unwrap()
}

pub fn running_arrow(p: &Params) -> KleisliArrow {
    interpret_lex(&running_term(), &p.delta()).unwrap()
}

pub fn shuffled(w: &Wiring, rng: &mut impl Rng) -> Wiring {
    let mut places = w.places().to_vec();
    places.shuffle(rng);
    Wiring::new(places).unwrap()
}

/// Largest difference between two arrows compared subset by subset, so
/// the wirings may differ.
pub fn subsetwise_diff(a: &KleisliArrow, b: &KleisliArrow) -> f64 {
    let mut worst: f64 = 0.0;
    for m in a.input().subsets() {
        for n in a.output().subsets() {
            worst = worst.max((a.entry(&m, &n).unwrap() - b.entry(&m, &n).unwrap()).abs());
        }
    }
    worst
}

/// Interprets `t` with shuffled wirings on both sides.
pub fn interpret_shuffled(t: &Term, delta: &DeltaTable, rng: &mut impl Rng) -> KleisliArrow {
    let ty = t.typecheck().unwrap();
    let pi = shuffled(&Wiring::lexicographic(&ty.inputs), rng);
    let rho = shuffled(&Wiring::lexicographic(&ty.outputs), rng);
    interpret(t, delta, &pi, &rho).unwrap()
}
