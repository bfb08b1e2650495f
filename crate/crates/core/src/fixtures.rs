//! Hand-built example nets and matching δ tables, shared by tests, the
//! acceptance suite and the CLI documentation. The same nets ship as files
//! under `data/`.

use crate::kleisli::DeltaTable;
use crate::net::{MarkedNet, Marking, Net, PlaceId};

fn marking(ids: &[&str]) -> Marking {
    ids.iter().map(|p| PlaceId::new(*p)).collect()
}

/// Ten places and eight transitions with three s-cells: `{p1,a,b}`,
/// `{p2,c,d}` and `{p3,p4,p6,e,f,g,h}`.
pub fn running_net() -> Net {
    Net::from_parts(
        &["p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "p9", "p10"],
        &[
            ("a", &["p1"], &["p4"]),
            ("b", &["p1"], &["p5"]),
            ("c", &["p2"], &["p6"]),
            ("d", &["p2"], &[]),
            ("e", &["p3"], &["p7"]),
            ("f", &["p3", "p4", "p6"], &["p8"]),
            ("g", &["p6"], &["p9"]),
            ("h", &["p6"], &["p10"]),
        ],
    )
    .expect("running net is well formed")
}

/// The running net with `p2` and `p3` marked; its only input is `p1`.
pub fn running_marked() -> MarkedNet {
    MarkedNet::new(running_net(), marking(&["p2", "p3"])).expect("valid marking")
}

pub fn running_cell_c1() -> Net {
    Net::from_parts(
        &["p1", "p4", "p5"],
        &[("a", &["p1"], &["p4"]), ("b", &["p1"], &["p5"])],
    )
    .unwrap()
}

pub fn running_cell_c2() -> Net {
    Net::from_parts(
        &["p2", "p6"],
        &[("c", &["p2"], &["p6"]), ("d", &["p2"], &[])],
    )
    .unwrap()
}

pub fn running_cell_c3() -> Net {
    Net::from_parts(
        &["p3", "p4", "p6", "p7", "p8", "p9", "p10"],
        &[
            ("e", &["p3"], &["p7"]),
            ("f", &["p3", "p4", "p6"], &["p8"]),
            ("g", &["p6"], &["p9"]),
            ("h", &["p6"], &["p10"]),
        ],
    )
    .unwrap()
}

/// Two cells in sequence: `{p1,a,b}` feeds `{p3,p4,c,d}` through `p4`.
pub fn two_cell_net() -> Net {
    Net::from_parts(
        &["p1", "p3", "p4", "p5", "p6"],
        &[
            ("a", &["p1"], &["p4"]),
            ("b", &["p1"], &[]),
            ("c", &["p3"], &["p5"]),
            ("d", &["p3", "p4"], &["p6"]),
        ],
    )
    .expect("two_cell net is well formed")
}

pub fn two_cell_marked() -> MarkedNet {
    MarkedNet::new(two_cell_net(), marking(&["p1", "p3"])).expect("valid marking")
}

/// δ for the running net. `pg` weights `g` in the cell `{g,h}`, `pg2`
/// weights `{e,g}` in the cell `{e,g},{e,h},{f}`; requires `pf + pg2 <= 1`.
pub fn running_delta(pa: f64, pc: f64, pf: f64, pg: f64, pg2: f64) -> DeltaTable {
    let mut d = DeltaTable::new(true);
    d.insert("{{a},{b}}", &[("{a}", pa), ("{b}", 1.0 - pa)]);
    d.insert("{{c},{d}}", &[("{c}", pc), ("{d}", 1.0 - pc)]);
    d.insert("{{e}}", &[("{e}", 1.0)]);
    d.insert("{{g},{h}}", &[("{g}", pg), ("{h}", 1.0 - pg)]);
    d.insert(
        "{{e,g},{e,h},{f}}",
        &[("{e,g}", pg2), ("{e,h}", 1.0 - pf - pg2), ("{f}", pf)],
    );
    d
}

/// δ for the two-cell net: `pa` for `a` against `b`, `pc` for `c` against `d`.
pub fn two_cell_delta(pa: f64, pc: f64) -> DeltaTable {
    let mut d = DeltaTable::new(true);
    d.insert("{{a},{b}}", &[("{a}", pa), ("{b}", 1.0 - pa)]);
    d.insert("{{c},{d}}", &[("{c}", pc), ("{d}", 1.0 - pc)]);
    d.insert("{{c}}", &[("{c}", 1.0)]);
    d
}
