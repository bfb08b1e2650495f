//! Forward and backward reasoning over compiled arrows.
//!
//! States are distributions over markings of an interface; predicates are
//! `[0,1]`-valued functions on the same markings. Pushing a state through
//! an arrow is a vector-matrix product, and pulling a predicate back is a
//! matrix-vector product.

use std::fmt;

use crate::error::{InferError, KleisliError};
use crate::kleisli::{Dist, KleisliArrow, Wiring};
use crate::net::{render_places, PlaceId, PlaceSet};

pub type State = Dist;

/// A fuzzy predicate over the subsets of a wired place set.
#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    wiring: Wiring,
    values: Vec<f64>,
}

impl Predicate {
    pub fn new(wiring: Wiring, values: Vec<f64>) -> Result<Self, InferError> {
        if values.len() != wiring.size() {
            return Err(KleisliError::Shape {
                rows: 1,
                cols: values.len(),
            }
            .into());
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(InferError::PredicateRange(*v));
        }
        Ok(Predicate { wiring, values })
    }

    /// Value `v` on the listed subsets, 0 elsewhere.
    pub fn from_points(wiring: Wiring, points: &[(PlaceSet, f64)]) -> Result<Self, InferError> {
        let mut values = vec![0.0; wiring.size()];
        for (m, v) in points {
            values[wiring.index_of(m)?] = *v;
        }
        Predicate::new(wiring, values)
    }

    pub fn constant(wiring: Wiring, v: f64) -> Result<Self, InferError> {
        let n = wiring.size();
        Predicate::new(wiring, vec![v; n])
    }

    /// The sharp event "`p` is marked" (or unmarked when `marked` is false).
    pub fn place(wiring: Wiring, p: &PlaceId, marked: bool) -> Result<Self, InferError> {
        let bit = wiring
            .position(p)
            .ok_or_else(|| KleisliError::ForeignPlace(p.clone()))?
            - 1;
        let values = (0..wiring.size())
            .map(|k| {
                if (k >> bit & 1 == 1) == marked {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Predicate::new(wiring, values)
    }

    /// Pointwise product, for conjoining evidence on several places.
    pub fn and(&self, other: &Predicate) -> Result<Predicate, InferError> {
        same_wiring(&self.wiring, &other.wiring)?;
        Ok(Predicate {
            wiring: self.wiring.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn wiring(&self) -> &Wiring {
        &self.wiring
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, m: &PlaceSet) -> Result<f64, InferError> {
        Ok(self.values[self.wiring.index_of(m)?])
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.values.iter().enumerate() {
            writeln!(f, "{}\t{v}", render_places(&self.wiring.subset_at(k)))?;
        }
        Ok(())
    }
}

fn same_wiring(expected: &Wiring, found: &Wiring) -> Result<(), InferError> {
    if expected != found {
        return Err(KleisliError::WiringMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
        .into());
    }
    Ok(())
}

/// Sums out every output place outside `keep`. The result keeps the
/// arrow's output order restricted to `keep`.
pub fn marginalize(a: &KleisliArrow, keep: &PlaceSet) -> Result<KleisliArrow, InferError> {
    let out = a.output();
    if let Some(p) = keep.iter().find(|p| out.position(p).is_none()) {
        return Err(KleisliError::ForeignPlace(p.clone()).into());
    }
    let target = out.restrict(keep);
    let map: Vec<usize> = (0..out.size())
        .map(|k| {
            let m: PlaceSet = out.subset_at(k).intersection(keep).cloned().collect();
            target.index_of(&m).expect("subset of target")
        })
        .collect();
    let rows = (0..a.n_rows())
        .map(|r| {
            let mut row = vec![0.0; target.size()];
            for (c, v) in a.row(r).iter().enumerate() {
                row[map[c]] += v;
            }
            row
        })
        .collect();
    Ok(KleisliArrow::new(a.input().clone(), target, rows)?)
}

/// `ω ; a`.
pub fn forward(omega: &State, a: &KleisliArrow) -> Result<State, InferError> {
    same_wiring(a.input(), omega.wiring())?;
    let mut out = vec![0.0; a.n_cols()];
    for (r, w) in omega.probs().iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (c, v) in a.row(r).iter().enumerate() {
            out[c] += w * v;
        }
    }
    Ok(Dist::from_parts_unchecked(a.output().clone(), out))
}

/// `x ↦ Σ_y a(x)(y)·q(y)`.
pub fn pullback(a: &KleisliArrow, q: &Predicate) -> Result<Predicate, InferError> {
    same_wiring(a.output(), q.wiring())?;
    let values = (0..a.n_rows())
        .map(|r| {
            a.row(r)
                .iter()
                .zip(q.values())
                .map(|(x, y)| x * y)
                .sum::<f64>()
                .clamp(0.0, 1.0)
        })
        .collect();
    Ok(Predicate {
        wiring: a.input().clone(),
        values,
    })
}

/// `ω ⊨ p = Σ_x ω(x)·p(x)`.
pub fn validity(omega: &State, p: &Predicate) -> Result<f64, InferError> {
    same_wiring(omega.wiring(), p.wiring())?;
    Ok(omega
        .probs()
        .iter()
        .zip(p.values())
        .map(|(w, v)| w * v)
        .fold(0.0, |a, x| a + x))
}

/// Bayesian update `ω|p`.
pub fn condition(omega: &State, p: &Predicate) -> Result<State, InferError> {
    let z = validity(omega, p)?;
    if z <= 0.0 {
        return Err(InferError::ZeroValidity);
    }
    let probs = omega
        .probs()
        .iter()
        .zip(p.values())
        .map(|(w, v)| w * v / z)
        .collect();
    Ok(Dist::from_parts_unchecked(omega.wiring().clone(), probs))
}
