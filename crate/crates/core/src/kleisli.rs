//! Stochastic-matrix semantics of terms.
//!
//! An arrow `2^|i| -> 2^|o|` is a dense row-stochastic matrix whose rows and
//! columns are indexed by subsets of wired place sets. A [`Wiring`] fixes
//! the order of an interface; subset `m` sits at index
//! `sum over p in m of 2^(pos(p)-1)`, so the first wired place is the least
//! significant bit. For two places `(p4,p5)` the order is
//! `{}, {p4}, {p5}, {p4,p5}`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::KleisliError;
use crate::net::{render_places, PlaceId, PlaceSet, Process};
use crate::term::{ConstantKey, Term};
use crate::STOCHASTIC_TOL;

/// Default cap on interface width.
pub const DEFAULT_MAX_WIDTH: usize = 20;

/// An ordered interface: each place appears once.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Wiring(Vec<PlaceId>);

impl Wiring {
    pub fn new(places: Vec<PlaceId>) -> Result<Self, KleisliError> {
        let mut seen = PlaceSet::new();
        for p in &places {
            if !seen.insert(p.clone()) {
                return Err(KleisliError::RepeatedPlace(p.clone()));
            }
        }
        Ok(Wiring(places))
    }

    pub fn from_strs(places: &[&str]) -> Result<Self, KleisliError> {
        Wiring::new(places.iter().map(|p| PlaceId::new(*p)).collect())
    }

    /// The lexicographic wiring of a place set.
    pub fn lexicographic(s: &PlaceSet) -> Self {
        Wiring(s.iter().cloned().collect())
    }

    pub fn empty() -> Self {
        Wiring(Vec::new())
    }

    pub fn places(&self) -> &[PlaceId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn set(&self) -> PlaceSet {
        self.0.iter().cloned().collect()
    }

    /// 1-based position.
    pub fn position(&self, p: &PlaceId) -> Option<usize> {
        self.0.iter().position(|q| q == p).map(|k| k + 1)
    }

    /// Number of subsets, `2^len`.
    pub fn size(&self) -> usize {
        1usize << self.0.len()
    }

    pub fn index_of(&self, m: &PlaceSet) -> Result<usize, KleisliError> {
        m.iter().try_fold(0usize, |acc, p| {
            let pos = self
                .position(p)
                .ok_or_else(|| KleisliError::ForeignPlace(p.clone()))?;
            Ok(acc | 1 << (pos - 1))
        })
    }

    pub fn subset_at(&self, k: usize) -> PlaceSet {
        self.0
            .iter()
            .enumerate()
            .filter(|(b, _)| k >> b & 1 == 1)
            .map(|(_, p)| p.clone())
            .collect()
    }

    /// All subsets in index order.
    pub fn subsets(&self) -> Vec<PlaceSet> {
        (0..self.size()).map(|k| self.subset_at(k)).collect()
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Wiring) -> Result<Wiring, KleisliError> {
        Wiring::new(self.0.iter().chain(other.0.iter()).cloned().collect())
    }

    /// Keeps the places of `keep`, in this wiring's order.
    pub fn restrict(&self, keep: &PlaceSet) -> Wiring {
        Wiring(
            self.0
                .iter()
                .filter(|p| keep.contains(*p))
                .cloned()
                .collect(),
        )
    }

    /// Maps an index of `self` to the index of the same subset under `other`.
    fn reindex_table(&self, other: &Wiring) -> Result<Vec<usize>, KleisliError> {
        if self.set() != other.set() {
            return Err(KleisliError::SetMismatch);
        }
        let bits: Vec<usize> = self
            .0
            .iter()
            .map(|p| other.position(p).unwrap() - 1)
            .collect();
        Ok((0..self.size())
            .map(|k| {
                bits.iter()
                    .enumerate()
                    .filter(|(b, _)| k >> b & 1 == 1)
                    .fold(0, |acc, (_, &to)| acc | 1 << to)
            })
            .collect())
    }
}

impl fmt::Display for Wiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<&str> = self.0.iter().map(|p| p.as_str()).collect();
        f.write_str(&v.join(","))
    }
}

/// `index(m)` under wiring `w`.
pub fn subset_index(w: &Wiring, m: &PlaceSet) -> Result<usize, KleisliError> {
    w.index_of(m)
}

/// The subset at index `k` under `w`.
pub fn subset_of_index(w: &Wiring, k: usize) -> PlaceSet {
    w.subset_at(k)
}

fn check_width(w: &Wiring, cap: usize) -> Result<(), KleisliError> {
    if w.len() > cap {
        Err(KleisliError::WidthExceeded {
            width: w.len(),
            cap,
        })
    } else {
        Ok(())
    }
}

/// A finite distribution over the subsets of a wired place set.
#[derive(Clone, Debug, PartialEq)]
pub struct Dist {
    wiring: Wiring,
    probs: Vec<f64>,
}

impl Dist {
    pub fn new(wiring: Wiring, probs: Vec<f64>) -> Result<Self, KleisliError> {
        if probs.len() != wiring.size() {
            return Err(KleisliError::Shape {
                rows: 1,
                cols: probs.len(),
            });
        }
        check_row(&probs).map_err(|reason| KleisliError::BadDistribution {
            signature: format!("state over ({wiring})"),
            reason,
        })?;
        Ok(Dist { wiring, probs })
    }

    /// Mass 1 on `m`.
    pub fn point(wiring: Wiring, m: &PlaceSet) -> Result<Self, KleisliError> {
        let mut probs = vec![0.0; wiring.size()];
        probs[wiring.index_of(m)?] = 1.0;
        Ok(Dist { wiring, probs })
    }

    /// Builds a distribution from explicit subset weights; unmentioned
    /// subsets get 0.
    pub fn from_weights(wiring: Wiring, weights: &[(PlaceSet, f64)]) -> Result<Self, KleisliError> {
        let mut probs = vec![0.0; wiring.size()];
        for (m, w) in weights {
            probs[wiring.index_of(m)?] += w;
        }
        Dist::new(wiring, probs)
    }

    pub(crate) fn from_parts_unchecked(wiring: Wiring, probs: Vec<f64>) -> Self {
        Dist { wiring, probs }
    }

    pub fn wiring(&self) -> &Wiring {
        &self.wiring
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, m: &PlaceSet) -> Result<f64, KleisliError> {
        Ok(self.probs[self.wiring.index_of(m)?])
    }

    /// Probability that `p` holds a token.
    pub fn marginal(&self, p: &PlaceId) -> Result<f64, KleisliError> {
        let bit = self
            .wiring
            .position(p)
            .ok_or_else(|| KleisliError::ForeignPlace(p.clone()))?
            - 1;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(k, _)| k >> bit & 1 == 1)
            .fold(0.0, |a, (_, v)| a + v))
    }

    /// Sums out every place outside `keep`.
    pub fn restrict(&self, keep: &PlaceSet) -> Result<Dist, KleisliError> {
        if let Some(p) = keep.iter().find(|p| self.wiring.position(p).is_none()) {
            return Err(KleisliError::ForeignPlace(p.clone()));
        }
        let target = self.wiring.restrict(keep);
        let mut probs = vec![0.0; target.size()];
        for (k, v) in self.probs.iter().enumerate() {
            let m: PlaceSet = self
                .wiring
                .subset_at(k)
                .intersection(keep)
                .cloned()
                .collect();
            probs[target.index_of(&m)?] += v;
        }
        Ok(Dist {
            wiring: target,
            probs,
        })
    }

    /// Non-zero entries in index order.
    pub fn support(&self) -> Vec<(PlaceSet, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| (self.wiring.subset_at(k), *v))
            .collect()
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .support()
            .iter()
            .map(|(m, v)| format!("{v}|{}>", render_places(m)))
            .collect();
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

fn check_row(row: &[f64]) -> Result<(), String> {
    if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < -STOCHASTIC_TOL) {
        return Err(format!("entry {v} is not a probability"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(format!("entries sum to {sum}"));
    }
    Ok(())
}

/// A matrix `2^|input| x 2^|output|`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct KleisliArrow {
    input: Wiring,
    output: Wiring,
    data: Vec<f64>,
}

impl KleisliArrow {
    pub fn new(input: Wiring, output: Wiring, rows: Vec<Vec<f64>>) -> Result<Self, KleisliError> {
        let (nr, nc) = (input.size(), output.size());
        if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
            return Err(KleisliError::Shape {
                rows: rows.len(),
                cols: rows.first().map_or(0, |r| r.len()),
            });
        }
        Ok(KleisliArrow {
            input,
            output,
            data: rows.into_iter().flatten().collect(),
        })
    }

    fn zeros(input: Wiring, output: Wiring) -> Self {
        let n = input.size() * output.size();
        KleisliArrow {
            input,
            output,
            data: vec![0.0; n],
        }
    }

    pub fn identity(w: &Wiring) -> Self {
        permutation_arrow(w, w).expect("same wiring")
    }

    pub fn input(&self) -> &Wiring {
        &self.input
    }

    pub fn output(&self) -> &Wiring {
        &self.output
    }

    pub fn n_rows(&self) -> usize {
        self.input.size()
    }

    pub fn n_cols(&self) -> usize {
        self.output.size()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n_cols() + c]
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        let nc = self.n_cols();
        self.data[r * nc + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let nc = self.n_cols();
        &self.data[r * nc..(r + 1) * nc]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|r| self.row(r).to_vec()).collect()
    }

    /// The output distribution for input subset `m`.
    pub fn row_for(&self, m: &PlaceSet) -> Result<Dist, KleisliError> {
        let r = self.input.index_of(m)?;
        Ok(Dist::from_parts_unchecked(
            self.output.clone(),
            self.row(r).to_vec(),
        ))
    }

    /// Entry for named input and output subsets.
    pub fn entry(&self, from: &PlaceSet, to: &PlaceSet) -> Result<f64, KleisliError> {
        Ok(self.get(self.input.index_of(from)?, self.output.index_of(to)?))
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        (0..self.n_rows()).all(|r| {
            let row = self.row(r);
            row.iter().all(|v| v.is_finite() && *v >= -tol)
                && (row.iter().sum::<f64>() - 1.0).abs() <= tol
        })
    }

    /// Largest entry-wise difference; `None` if the wirings differ.
    pub fn max_abs_diff(&self, other: &KleisliArrow) -> Option<f64> {
        if self.input != other.input || self.output != other.output {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Same arrow with rows re-indexed under another order of the inputs.
    pub fn with_input_wiring(&self, w: &Wiring) -> Result<Self, KleisliError> {
        let table = w.reindex_table(&self.input)?;
        let mut out = KleisliArrow::zeros(w.clone(), self.output.clone());
        for (r, &src) in table.iter().enumerate() {
            let nc = out.n_cols();
            out.data[r * nc..(r + 1) * nc].copy_from_slice(self.row(src));
        }
        Ok(out)
    }

    /// Same arrow with columns re-indexed under another order of the outputs.
    pub fn with_output_wiring(&self, w: &Wiring) -> Result<Self, KleisliError> {
        let table = self.output.reindex_table(w)?;
        let mut out = KleisliArrow::zeros(self.input.clone(), w.clone());
        for r in 0..self.n_rows() {
            for (c, &dst) in table.iter().enumerate() {
                out.set(r, dst, self.get(r, c));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for KleisliArrow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols: Vec<String> = self.output.subsets().iter().map(render_places).collect();
        writeln!(f, "in ({}) -> out ({})", self.input, self.output)?;
        writeln!(f, "\t{}", cols.join("\t"))?;
        for (r, m) in self.input.subsets().iter().enumerate() {
            let vals: Vec<String> = self.row(r).iter().map(|v| format!("{v:.6}")).collect();
            writeln!(f, "{}\t{}", render_places(m), vals.join("\t"))?;
        }
        Ok(())
    }
}

/// The 0/1 matrix sending each subset under `from` to itself under `to`.
pub fn permutation_arrow(from: &Wiring, to: &Wiring) -> Result<KleisliArrow, KleisliError> {
    let table = from.reindex_table(to)?;
    let mut out = KleisliArrow::zeros(from.clone(), to.clone());
    for (r, &c) in table.iter().enumerate() {
        out.set(r, c, 1.0);
    }
    Ok(out)
}

/// Kronecker-style product over concatenated wirings.
pub fn tensor(a: &KleisliArrow, b: &KleisliArrow) -> Result<KleisliArrow, KleisliError> {
    let input = a.input.concat(&b.input)?;
    let output = a.output.concat(&b.output)?;
    let (n1, k1) = (a.input.len(), a.output.len());
    let mut out = KleisliArrow::zeros(input, output);
    for r2 in 0..b.n_rows() {
        for r1 in 0..a.n_rows() {
            let r = r1 | r2 << n1;
            for (c2, &vb) in b.row(r2).iter().enumerate() {
                if vb == 0.0 {
                    continue;
                }
                for (c1, &va) in a.row(r1).iter().enumerate() {
                    out.set(r, c1 | c2 << k1, va * vb);
                }
            }
        }
    }
    Ok(out)
}

/// Matrix product; `a`'s output wiring must equal `b`'s input wiring.
pub fn compose_arrows(a: &KleisliArrow, b: &KleisliArrow) -> Result<KleisliArrow, KleisliError> {
    if a.output != b.input {
        return Err(KleisliError::WiringMismatch {
            expected: a.output.to_string(),
            found: b.input.to_string(),
        });
    }
    let mut out = KleisliArrow::zeros(a.input.clone(), b.output.clone());
    let nc = out.n_cols();
    for r in 0..a.n_rows() {
        for (k, &v) in a.row(r).iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let brow = b.row(k);
            for (c, slot) in out.data[r * nc..(r + 1) * nc].iter_mut().enumerate() {
                *slot += v * brow[c];
            }
        }
    }
    Ok(out)
}

/// Stacks single-row arrows; row `k` is the arrow for the `k`-th subset
/// of `input`.
pub fn copair(input: &Wiring, rows: &[KleisliArrow]) -> Result<KleisliArrow, KleisliError> {
    if rows.len() != input.size() {
        return Err(KleisliError::RowCount {
            expected: input.size(),
            found: rows.len(),
        });
    }
    let output = rows.first().map(|r| r.output.clone()).unwrap_or_default();
    let mut out = KleisliArrow::zeros(input.clone(), output.clone());
    let nc = out.n_cols();
    for (k, r) in rows.iter().enumerate() {
        if r.output != output || r.n_rows() != 1 {
            return Err(KleisliError::WiringMismatch {
                expected: output.to_string(),
                found: r.output.to_string(),
            });
        }
        out.data[k * nc..(k + 1) * nc].copy_from_slice(r.row(0));
    }
    Ok(out)
}

/// Single row with all mass on the empty marking.
pub fn dead_arrow(rho: &Wiring) -> KleisliArrow {
    let mut out = KleisliArrow::zeros(Wiring::empty(), rho.clone());
    out.set(0, 0, 1.0);
    out
}

/// Single row whose entry at `m` is the total δ-mass of the transactions
/// ending exactly in `m`.
pub fn constant_arrow(
    key: &ConstantKey,
    delta: &DeltaTable,
    rho: &Wiring,
) -> Result<KleisliArrow, KleisliError> {
    if &rho.set() != key.outputs() {
        return Err(KleisliError::WiringMismatch {
            expected: render_places(key.outputs()),
            found: rho.to_string(),
        });
    }
    let mut out = KleisliArrow::zeros(Wiring::empty(), rho.clone());
    for (theta, p) in delta.distribution(key)? {
        let c = rho.index_of(&theta.final_places)?;
        out.data[c] += p;
    }
    Ok(out)
}

/// Per-constant distributions over transactions, keyed by signature and
/// then by transaction key (e.g. `{e,g}`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeltaTable {
    entries: BTreeMap<String, BTreeMap<String, f64>>,
    strict: bool,
}

impl DeltaTable {
    pub fn new(strict: bool) -> Self {
        DeltaTable {
            entries: BTreeMap::new(),
            strict,
        }
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub fn insert(&mut self, signature: &str, probs: &[(&str, f64)]) {
        self.entries.insert(
            signature.to_string(),
            probs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        );
    }

    pub fn insert_map(&mut self, signature: String, probs: BTreeMap<String, f64>) {
        self.entries.insert(signature, probs);
    }

    pub fn get(&self, signature: &str) -> Option<&BTreeMap<String, f64>> {
        self.entries.get(signature)
    }

    pub fn entries(&self) -> &BTreeMap<String, BTreeMap<String, f64>> {
        &self.entries
    }

    /// Probability of each transaction of `key`. Outside strict mode a
    /// missing entry falls back to the uniform distribution.
    pub fn distribution<'k>(
        &self,
        key: &'k ConstantKey,
    ) -> Result<Vec<(&'k Process, f64)>, KleisliError> {
        let signature = key.signature();
        let txs = key.ordered_transactions();
        let Some(entry) = self.entries.get(&signature) else {
            if self.strict {
                return Err(KleisliError::MissingDelta(signature));
            }
            let u = 1.0 / txs.len() as f64;
            return Ok(txs.into_iter().map(|t| (t, u)).collect());
        };
        let keys: Vec<String> = txs.iter().map(|t| t.key()).collect();
        if let Some(foreign) = entry.keys().find(|k| !keys.contains(k)) {
            return Err(KleisliError::ForeignTransaction {
                signature,
                transaction: foreign.clone(),
            });
        }
        let row: Vec<f64> = keys
            .iter()
            .map(|k| entry.get(k).copied().unwrap_or(0.0))
            .collect();
        check_row(&row).map_err(|reason| KleisliError::BadDistribution {
            signature: signature.clone(),
            reason,
        })?;
        Ok(txs.into_iter().zip(row).collect())
    }
}

/// One finding of [`validate_delta`].
#[derive(Clone, Debug, PartialEq)]
pub enum DeltaIssue {
    Missing { signature: String },
    FilledUniform { signature: String },
    Invalid(KleisliError),
    Unused { signature: String },
}

impl DeltaIssue {
    pub fn is_error(&self) -> bool {
        matches!(self, DeltaIssue::Missing { .. } | DeltaIssue::Invalid(_))
    }
}

impl fmt::Display for DeltaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaIssue::Missing { signature } => {
                write!(f, "error: no distribution for {signature}")
            }
            DeltaIssue::FilledUniform { signature } => write!(
                f,
                "warning: {signature} filled with the uniform distribution"
            ),
            DeltaIssue::Invalid(e) => write!(f, "error: {e}"),
            DeltaIssue::Unused { signature } => {
                write!(f, "warning: entry {signature} matches no constant")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaReport {
    pub issues: Vec<DeltaIssue>,
    /// The table with uniform entries added where allowed.
    pub filled: DeltaTable,
}

impl DeltaReport {
    pub fn is_ok(&self) -> bool {
        !self.issues.iter().any(DeltaIssue::is_error)
    }
}

/// Checks coverage, support and normalisation of `delta` against the
/// constants a term needs.
pub fn validate_delta(delta: &DeltaTable, needed: &BTreeMap<String, ConstantKey>) -> DeltaReport {
    let mut issues = Vec::new();
    let mut filled = delta.clone();
    for (sig, key) in needed {
        if delta.get(sig).is_none() {
            if delta.is_strict() {
                issues.push(DeltaIssue::Missing {
                    signature: sig.clone(),
                });
            } else {
                let txs = key.ordered_transactions();
                let u = 1.0 / txs.len() as f64;
                filled.insert_map(sig.clone(), txs.iter().map(|t| (t.key(), u)).collect());
                issues.push(DeltaIssue::FilledUniform {
                    signature: sig.clone(),
                });
            }
            continue;
        }
        if let Err(e) = delta.distribution(key) {
            issues.push(DeltaIssue::Invalid(e));
        }
    }
    for sig in delta.entries().keys() {
        if !needed.contains_key(sig) {
            issues.push(DeltaIssue::Unused {
                signature: sig.clone(),
            });
        }
    }
    DeltaReport { issues, filled }
}

/// Structural interpretation of terms as arrows.
#[derive(Clone, Debug)]
pub struct Interpreter<'a> {
    delta: &'a DeltaTable,
    max_width: usize,
}

impl<'a> Interpreter<'a> {
    pub fn new(delta: &'a DeltaTable) -> Self {
        Interpreter {
            delta,
            max_width: DEFAULT_MAX_WIDTH,
        }
    }

    pub fn with_max_width(mut self, max_width: usize) -> Self {
        self.max_width = max_width;
        self
    }

    pub fn interpret(
        &self,
        t: &Term,
        pi: &Wiring,
        rho: &Wiring,
    ) -> Result<KleisliArrow, KleisliError> {
        let ty = t.typecheck()?;
        for (w, s) in [(pi, &ty.inputs), (rho, &ty.outputs)] {
            if &w.set() != s {
                return Err(KleisliError::WiringMismatch {
                    expected: render_places(s),
                    found: w.to_string(),
                });
            }
            check_width(w, self.max_width)?;
        }
        match t {
            Term::Identity(_) => permutation_arrow(pi, rho),
            Term::Dead(_) => Ok(dead_arrow(rho)),
            Term::Par(a, b) => {
                let (ta, tb) = (a.typecheck()?, b.typecheck()?);
                let (pa, ra) = (
                    Wiring::lexicographic(&ta.inputs),
                    Wiring::lexicographic(&ta.outputs),
                );
                let (pb, rb) = (
                    Wiring::lexicographic(&tb.inputs),
                    Wiring::lexicographic(&tb.outputs),
                );
                let both = tensor(&self.interpret(a, &pa, &ra)?, &self.interpret(b, &pb, &rb)?)?;
                both.with_input_wiring(pi)?.with_output_wiring(rho)
            }
            Term::Seq(a, b) => {
                let gamma = Wiring::lexicographic(&a.typecheck()?.outputs);
                check_width(&gamma, self.max_width)?;
                compose_arrows(
                    &self.interpret(a, pi, &gamma)?,
                    &self.interpret(b, &gamma, rho)?,
                )
            }
            Term::Constant(k) => constant_arrow(k, self.delta, rho),
            Term::Sum { branches, .. } => {
                let rows = pi
                    .subsets()
                    .iter()
                    .map(|m| self.interpret(&branches[m], &Wiring::empty(), rho))
                    .collect::<Result<Vec<_>, _>>()?;
                copair(pi, &rows)
            }
        }
    }
}

/// Interprets `t` under input wiring `pi` and output wiring `rho` with the
/// default width cap.
pub fn interpret(
    t: &Term,
    delta: &DeltaTable,
    pi: &Wiring,
    rho: &Wiring,
) -> Result<KleisliArrow, KleisliError> {
    Interpreter::new(delta).interpret(t, pi, rho)
}

/// Interprets `t` with lexicographic wirings on both sides.
pub fn interpret_lex(t: &Term, delta: &DeltaTable) -> Result<KleisliArrow, KleisliError> {
    let ty = t.typecheck()?;
    interpret(
        t,
        delta,
        &Wiring::lexicographic(&ty.inputs),
        &Wiring::lexicographic(&ty.outputs),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(ps: &[&str]) -> Wiring {
        Wiring::from_strs(ps).unwrap()
    }

    fn set(ps: &[&str]) -> PlaceSet {
        ps.iter().map(|p| PlaceId::new(*p)).collect()
    }

    #[test]
    fn subset_index_convention() {
        assert_eq!(subset_index(&w(&["p4", "p5"]), &set(&["p4"])).unwrap(), 1);
        assert_eq!(
            subset_index(&w(&["p4", "p5"]), &PlaceSet::new()).unwrap(),
            0
        );
        assert_eq!(
            subset_index(&w(&["p4", "p6"]), &set(&["p4", "p6"])).unwrap(),
            3
        );
        assert_eq!(subset_of_index(&w(&["p4", "p6"]), 2), set(&["p6"]));
        assert!(matches!(
            subset_index(&w(&["p4"]), &set(&["p9"])),
            Err(KleisliError::ForeignPlace(_))
        ));
        assert!(matches!(
            Wiring::from_strs(&["x", "x"]),
            Err(KleisliError::RepeatedPlace(_))
        ));
    }

    #[test]
    fn permutations() {
        let id = permutation_arrow(&w(&["p4", "p5"]), &w(&["p4", "p5"])).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(id.get(r, c), if r == c { 1.0 } else { 0.0 });
            }
        }
        let swap = permutation_arrow(&w(&["p4", "p5"]), &w(&["p5", "p4"])).unwrap();
        assert_eq!(swap.get(1, 2), 1.0);
        assert_eq!(swap.get(3, 3), 1.0);
        assert!(matches!(
            permutation_arrow(&w(&["a"]), &w(&["b"])),
            Err(KleisliError::SetMismatch)
        ));
    }

    #[test]
    fn dead_and_tensor_and_compose() {
        let d = dead_arrow(&w(&["p4", "p5"]));
        assert_eq!(d.rows(), vec![vec![1.0, 0.0, 0.0, 0.0]]);
        assert_eq!(dead_arrow(&Wiring::empty()).rows(), vec![vec![1.0]]);

        let a = KleisliArrow::new(w(&["x"]), w(&["y"]), vec![vec![0.25, 0.75], vec![1.0, 0.0]])
            .unwrap();
        let b = KleisliArrow::new(Wiring::empty(), w(&["z"]), vec![vec![0.4, 0.6]]).unwrap();
        let t = tensor(&a, &b).unwrap();
        assert_eq!(t.output(), &w(&["y", "z"]));
        // row {x}, column {z}: 1.0 * 0.6
        assert!((t.entry(&set(&["x"]), &set(&["z"])).unwrap() - 0.6).abs() < 1e-15);
        assert!((t.entry(&PlaceSet::new(), &set(&["y", "z"])).unwrap() - 0.45).abs() < 1e-15);

        let same = compose_arrows(&a, &KleisliArrow::identity(&w(&["y"]))).unwrap();
        assert_eq!(same, a);
        assert!(compose_arrows(&a, &b).is_err());
    }

    #[test]
    fn copair_checks_row_count() {
        let r = dead_arrow(&w(&["y"]));
        assert!(matches!(
            copair(&w(&["x"]), std::slice::from_ref(&r)),
            Err(KleisliError::RowCount { .. })
        ));
        let c = copair(&w(&["x"]), &[r.clone(), r]).unwrap();
        assert_eq!(c.rows(), vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn reindexing_matches_permutation_products() {
        let a = KleisliArrow::new(
            w(&["x", "y"]),
            w(&["z"]),
            vec![
                vec![1.0, 0.0],
                vec![0.5, 0.5],
                vec![0.2, 0.8],
                vec![0.0, 1.0],
            ],
        )
        .unwrap();
        let target = w(&["y", "x"]);
        let via_product =
            compose_arrows(&permutation_arrow(&target, a.input()).unwrap(), &a).unwrap();
        assert_eq!(a.with_input_wiring(&target).unwrap(), via_product);
    }

    #[test]
    fn dist_marginals_and_restriction() {
        let d = Dist::from_weights(
            w(&["a", "b"]),
            &[
                (set(&["a"]), 0.3),
                (set(&["a", "b"]), 0.2),
                (PlaceSet::new(), 0.5),
            ],
        )
        .unwrap();
        assert!((d.marginal(&PlaceId::new("a")).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.marginal(&PlaceId::new("b")).unwrap() - 0.2).abs() < 1e-15);
        let r = d.restrict(&set(&["b"])).unwrap();
        assert!((r.probs()[0] - 0.8).abs() < 1e-15 && (r.probs()[1] - 0.2).abs() < 1e-15);
        assert!(Dist::new(w(&["a"]), vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn delta_fallbacks() {
        let k = ConstantKey::new(
            [
                Process::of(
                    &crate::fixtures::running_cell_c1(),
                    &[crate::net::TransitionId::new("a")].into(),
                ),
                Process::of(
                    &crate::fixtures::running_cell_c1(),
                    &[crate::net::TransitionId::new("b")].into(),
                ),
            ]
            .into(),
        )
        .unwrap();
        let strict = DeltaTable::new(true);
        assert!(matches!(
            strict.distribution(&k),
            Err(KleisliError::MissingDelta(_))
        ));
        let lax = DeltaTable::new(false);
        let d = lax.distribution(&k).unwrap();
        assert_eq!(
            d.iter().map(|(_, p)| *p).collect::<Vec<_>>(),
            vec![0.5, 0.5]
        );

        let mut bad = DeltaTable::new(true);
        bad.insert("{{a},{b}}", &[("{a}", 0.5), ("{b}", 0.4)]);
        assert!(matches!(
            bad.distribution(&k),
            Err(KleisliError::BadDistribution { .. })
        ));
        let mut foreign = DeltaTable::new(true);
        foreign.insert("{{a},{b}}", &[("{a}", 0.5), ("{c}", 0.5)]);
        assert!(matches!(
            foreign.distribution(&k),
            Err(KleisliError::ForeignTransaction { .. })
        ));

        let needed: BTreeMap<String, ConstantKey> = [(k.signature(), k.clone())].into();
        assert!(!validate_delta(&bad, &needed).is_ok());
        let lax_report = validate_delta(&lax, &needed);
        assert!(lax_report.is_ok());
        assert_eq!(
            lax_report.issues,
            vec![DeltaIssue::FilledUniform {
                signature: "{{a},{b}}".into()
            }]
        );
        let arrow = constant_arrow(&k, &lax, &w(&["p4", "p5"])).unwrap();
        assert_eq!(arrow.rows(), vec![vec![0.0, 0.5, 0.5, 0.0]]);
    }
}
