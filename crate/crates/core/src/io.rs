//! File formats: nets, δ tables and states as TOML, matrices as JSON or CSV.
//!
//! A net file lists places, the initial marking and the transitions:
//!
//! ```toml
//! places = ["p1", "p2", "p3"]
//! marking = ["p1"]
//!
//! [[transitions]]
//! id = "a"
//! pre = ["p1"]
//! post = ["p2"]
//! ```
//!
//! A δ file has one entry per constant signature, with the probability of
//! each transaction keyed by its rendering:
//!
//! ```toml
//! strict = true
//!
//! [[entry]]
//! signature = "{{a},{b}}"
//! probabilities = { "{a}" = 0.3, "{b}" = 0.7 }
//! ```
//!
//! A state file gives a wiring and the mass of each subset; subsets not
//! listed get 0.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::IoError;
use crate::kleisli::{DeltaTable, Dist, KleisliArrow, Wiring};
use crate::net::{render_places, Arcs, MarkedNet, Net, PlaceId, PlaceSet, TransitionId};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetFile {
    places: Vec<String>,
    #[serde(default)]
    marking: Vec<String>,
    #[serde(default)]
    transitions: Vec<TransitionEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntry {
    id: String,
    pre: Vec<String>,
    #[serde(default)]
    post: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaFile {
    #[serde(default = "default_strict")]
    strict: bool,
    #[serde(default)]
    entry: Vec<DeltaEntry>,
}

fn default_strict() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaEntry {
    signature: String,
    probabilities: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    wiring: Vec<String>,
    probabilities: BTreeMap<String, f64>,
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn format_error(what: &'static str, e: impl std::fmt::Display) -> IoError {
    IoError::Format {
        what,
        msg: e.to_string(),
    }
}

/// Parses `{p1,p2}` (or `{}`) into a place set.
pub fn parse_place_set(s: &str) -> Result<PlaceSet, IoError> {
    let inner = s
        .trim()
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| format_error("place set", format!("expected {{...}}, found {s:?}")))?;
    Ok(inner
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(PlaceId::new)
        .collect())
}

/// Parses and validates a marked net.
pub fn parse_net(text: &str) -> Result<MarkedNet, IoError> {
    let file: NetFile = toml::from_str(text).map_err(|e| format_error("net file", e))?;
    let net = Net::new(
        file.places.iter().map(PlaceId::new),
        file.transitions.iter().map(|t| {
            (
                TransitionId::new(&t.id),
                Arcs {
                    pre: t.pre.iter().map(PlaceId::new).collect(),
                    post: t.post.iter().map(PlaceId::new).collect(),
                },
            )
        }),
    )?;
    let marking = file.marking.iter().map(PlaceId::new).collect();
    Ok(MarkedNet::new(net, marking)?)
}

pub fn read_net(path: impl AsRef<Path>) -> Result<MarkedNet, IoError> {
    parse_net(&read(path.as_ref())?)
}

pub fn net_to_toml(m: &MarkedNet) -> String {
    let net = m.net();
    let file = NetFile {
        places: net.places().iter().map(|p| p.to_string()).collect(),
        marking: m.marking().iter().map(|p| p.to_string()).collect(),
        transitions: net
            .transitions()
            .map(|(t, arcs)| TransitionEntry {
                id: t.to_string(),
                pre: arcs.pre.iter().map(|p| p.to_string()).collect(),
                post: arcs.post.iter().map(|p| p.to_string()).collect(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("net files serialize")
}

pub fn parse_delta(text: &str) -> Result<DeltaTable, IoError> {
    let file: DeltaFile = toml::from_str(text).map_err(|e| format_error("delta file", e))?;
    let mut delta = DeltaTable::new(file.strict);
    for e in file.entry {
        if delta.get(&e.signature).is_some() {
            return Err(format_error(
                "delta file",
                format!("duplicate signature {}", e.signature),
            ));
        }
        delta.insert_map(e.signature, e.probabilities);
    }
    Ok(delta)
}

pub fn read_delta(path: impl AsRef<Path>) -> Result<DeltaTable, IoError> {
    parse_delta(&read(path.as_ref())?)
}

pub fn delta_to_toml(delta: &DeltaTable) -> String {
    let file = DeltaFile {
        strict: delta.is_strict(),
        entry: delta
            .entries()
            .iter()
            .map(|(s, p)| DeltaEntry {
                signature: s.clone(),
                probabilities: p.clone(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("delta files serialize")
}

pub fn parse_state(text: &str) -> Result<Dist, IoError> {
    let file: StateFile = toml::from_str(text).map_err(|e| format_error("state file", e))?;
    let wiring = Wiring::new(file.wiring.iter().map(PlaceId::new).collect())?;
    let weights = file
        .probabilities
        .iter()
        .map(|(k, v)| Ok((parse_place_set(k)?, *v)))
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(Dist::from_weights(wiring, &weights)?)
}

pub fn read_state(path: impl AsRef<Path>) -> Result<Dist, IoError> {
    parse_state(&read(path.as_ref())?)
}

pub fn state_to_toml(d: &Dist) -> String {
    let file = StateFile {
        wiring: d.wiring().places().iter().map(|p| p.to_string()).collect(),
        probabilities: d
            .support()
            .into_iter()
            .map(|(m, w)| (render_places(&m), w))
            .collect(),
    };
    toml::to_string(&file).expect("state files serialize")
}

#[derive(Serialize)]
struct MatrixJson<'a> {
    inputs: Vec<&'a str>,
    outputs: Vec<&'a str>,
    rows: Vec<String>,
    columns: Vec<String>,
    data: Vec<Vec<f64>>,
}

/// Row and column labels are the subsets in index order.
pub fn matrix_to_json(a: &KleisliArrow) -> String {
    let labels = |w: &Wiring| w.subsets().iter().map(render_places).collect();
    let doc = MatrixJson {
        inputs: a.input().places().iter().map(|p| p.as_str()).collect(),
        outputs: a.output().places().iter().map(|p| p.as_str()).collect(),
        rows: labels(a.input()),
        columns: labels(a.output()),
        data: a.rows(),
    };
    serde_json::to_string_pretty(&doc).expect("matrices serialize")
}

/// Header row of output subsets, then one line per input subset. Labels
/// are quoted because they contain commas.
pub fn matrix_to_csv(a: &KleisliArrow) -> String {
    let mut out = String::from("\"\"");
    for m in a.output().subsets() {
        out.push_str(&format!(",\"{}\"", render_places(&m)));
    }
    out.push('\n');
    for (r, m) in a.input().subsets().iter().enumerate() {
        out.push_str(&format!("\"{}\"", render_places(m)));
        for v in a.row(r) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
