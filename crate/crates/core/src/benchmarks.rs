// SPDX-License-Identifier: Apache-2.0
//! Bundled benchmark circuits.
//!
//! Two small hand-built circuits and four seeded synthetic ones. A
//! synthetic circuit is a set of parallel lanes
//! `in -> A -> ff a -> B -> ff f -> C -> ff c -> out`, where each segment
//! is a two-column ladder of gates. Side inputs from a shared pool enter
//! only the first level of every segment; an AND in `B` and an OR in `C` on the same
//! side input make the merged paths through `f` false. Lanes with a branch
//! tap the first level of `C` into a short chain and an extra flip-flop.

use crate::netlist::{GateKind, Netlist, Placement, Signal};
use crate::netlist::DelayLibrary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Benchmark {
    pub name: String,
    pub netlist: Netlist,
    pub placement: Option<Placement>,
    /// Generated from lanes, with one construction site per lane.
    pub synthetic: bool,
}

/// Shape of one lane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaneSpec {
    pub depth_a: usize,
    pub depth_b: usize,
    pub depth_c: usize,
    /// Gates between the first level of `C` and the extra flip-flop; zero
    /// for no branch.
    pub branch: usize,
}

impl Default for LaneSpec {
    fn default() -> Self {
        LaneSpec {
            depth_a: 3,
            depth_b: 6,
            depth_c: 6,
            branch: 0,
        }
    }
}

/// Two-column ladder; returns the single gate of the last level and the
/// first-level gates. Column 1 is a BUF/NOT chain from the second
/// first-level gate; column 0 takes column 1 as its side input, with kinds
/// chosen so that every side requirement asks column 1's first gate for 1.
fn segment(
    n: &mut Netlist,
    rng: &mut ChaCha8Rng,
    tag: &str,
    input: Signal,
    side: &[(Signal, GateKind); 2],
    depth: usize,
) -> (Signal, Vec<Signal>) {
    let first: Vec<Signal> = side
        .iter()
        .enumerate()
        .map(|(i, &(s, kind))| n.add_gate(&format!("{tag}_0_{i}"), kind, vec![input, s]))
        .collect();
    let (mut col0, mut col1) = (first[0], first[1]);
    // Whether column 1 currently carries the complement of its first gate.
    let mut inverted = false;
    for level in 1..depth {
        let kind = match (inverted, rng.gen_bool(0.5)) {
            (false, true) => GateKind::And,
            (false, false) => GateKind::Nand,
            (true, true) => GateKind::Or,
            (true, false) => GateKind::Nor,
        };
        let next0 = n.add_gate(&format!("{tag}_{level}_0"), kind, vec![col0, col1]);
        if level + 1 < depth {
            let not = rng.gen_bool(0.5);
            let k = if not { GateKind::Not } else { GateKind::Buf };
            col1 = n.add_gate(&format!("{tag}_{level}_1"), k, vec![col1]);
            inverted ^= not;
        }
        col0 = next0;
    }
    (col0, first)
}

/// Appends one lane. `pool` holds the shared side inputs.
pub fn add_lane(n: &mut Netlist, placement: &mut Placement, rng: &mut ChaCha8Rng, lane: usize, spec: LaneSpec, pool: &[Signal]) {
    let pick = |rng: &mut ChaCha8Rng| pool[rng.gen_range(0..pool.len())];
    let p = format!("l{lane}");
    let input = n.add_input(&format!("{p}_in"));
    let sides_a = [(pick(rng), GateKind::And), (pick(rng), GateKind::Or)];
    let (da, _) = segment(n, rng, &format!("{p}_a"), input, &sides_a, spec.depth_a);
    let a = n.add_ff(&format!("{p}_ffa"), da);
    // The first level of B and C reuse side inputs with opposite kinds.
    let shared = [pick(rng), pick(rng)];
    let sides_b = [(shared[0], GateKind::And), (shared[1], GateKind::Or)];
    let sides_c = [(shared[0], GateKind::Or), (shared[1], GateKind::And)];
    let (db, _) = segment(n, rng, &format!("{p}_b"), a, &sides_b, spec.depth_b);
    let f = n.add_ff(&format!("{p}_fff"), db);
    let (dc, first_c) = segment(n, rng, &format!("{p}_c"), f, &sides_c, spec.depth_c);
    let c = n.add_ff(&format!("{p}_ffc"), dc);
    n.add_output(c);
    let y = 20.0 * lane as f64;
    placement.coords.insert(format!("{p}_ffa"), (0.0, y));
    placement.coords.insert(format!("{p}_fff"), (1.0, y));
    placement.coords.insert(format!("{p}_ffc"), (2.0, y));
    if spec.branch > 0 {
        let mut s = first_c[0];
        for k in 0..spec.branch {
            let kind = if k % 2 == 0 { GateKind::Buf } else { GateKind::Not };
            s = n.add_gate(&format!("{p}_x{k}"), kind, vec![s]);
        }
        let d = n.add_ff(&format!("{p}_ffd"), s);
        n.add_output(d);
        placement.coords.insert(format!("{p}_ffd"), (3.0, y));
    }
}

/// Lane circuit with `lanes` lanes. Every third lane carries a two-gate
/// branch and every fifth a one-gate branch.
pub fn synthetic(name: &str, lanes: usize, seed: u64) -> Benchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = Netlist::new(name, DelayLibrary::default());
    let mut placement = Placement::default();
    let pool: Vec<Signal> = (0..4).map(|i| n.add_input(&format!("s{i}"))).collect();
    for lane in 0..lanes {
        let branch = if lane % 5 == 4 {
            1
        } else if lane % 3 == 2 {
            2
        } else {
            0
        };
        let spec = LaneSpec { branch, ..LaneSpec::default() };
        add_lane(&mut n, &mut placement, &mut rng, lane, spec, &pool);
    }
    Benchmark {
        name: name.to_string(),
        netlist: n,
        placement: Some(placement),
        synthetic: true,
    }
}

fn chain(n: &mut Netlist, tag: &str, mut s: Signal, kinds: &[GateKind]) -> Signal {
    for (i, &k) in kinds.iter().enumerate() {
        s = n.add_gate(&format!("{tag}{}", i + 1), k, vec![s]);
    }
    s
}

/// Two single-period stages `a -> f -> c`; removing `f` gives one
/// two-wave stage.
pub fn pipeline() -> Benchmark {
    use GateKind::*;
    let mut n = Netlist::new("pipeline", DelayLibrary::default());
    let input = n.add_input("in");
    let s = n.add_input("s");
    let t = n.add_input("t");
    let a = n.add_ff("a", input);
    let g0 = n.add_gate("g0", And, vec![a, s]);
    let db = chain(&mut n, "g", g0, &[Buf, Buf, Buf, Buf, Not]);
    let f = n.add_ff("f", db);
    let h0 = n.add_gate("h0", Or, vec![f, t]);
    let dc = chain(&mut n, "h", h0, &[Buf, Buf, Buf, Buf, Not]);
    let c = n.add_ff("c", dc);
    n.add_output(c);
    Benchmark {
        name: "pipeline".into(),
        netlist: n,
        placement: None,
        synthetic: false,
    }
}

/// Small sequential snippet where two true halves through `f` merge into a
/// false path: the left half needs `v2 = 1` at a NAND and the right half
/// needs `v2 = 0` at an OR.
pub fn snippet() -> Benchmark {
    use GateKind::*;
    let mut n = Netlist::new("snippet", DelayLibrary::default());
    let v1 = n.add_input("v1");
    let v2 = n.add_input("v2");
    let v3 = n.add_input("v3");
    // Placeholder D inputs, rewired once the loop closes.
    let a = n.add_ff("a", v1);
    let e = n.add_ff("e", v3);
    let g1 = n.add_gate("n1", Nand, vec![a, v2]);
    let g2 = n.add_gate("n2", Not, vec![g1]);
    let g3 = n.add_gate("n3", And, vec![g2, e]);
    let db = chain(&mut n, "p", g3, &[Buf, Buf, Buf]);
    let f = n.add_ff("f", db);
    let g4 = n.add_gate("m0", Or, vec![f, v2]);
    let dc = chain(&mut n, "m", g4, &[Buf, Buf, Buf, Buf, Not]);
    let c = n.add_ff("c", dc);
    let fb = n.add_gate("k0", Nor, vec![c, v1]);
    let ax = n.add_gate("k1", Xor, vec![v1, v3]);
    let Signal::Ff(ai) = a else { unreachable!() };
    let Signal::Ff(ei) = e else { unreachable!() };
    n.flipflops[ai].d = ax;
    n.flipflops[ei].d = fb;
    n.add_output(c);
    n.add_output(fb);
    Benchmark {
        name: "snippet".into(),
        netlist: n,
        placement: None,
        synthetic: false,
    }
}

/// Lane counts of the synthetic circuits.
pub const SYNTHETIC_LANES: [(&str, usize); 4] = [("lanes4", 4), ("lanes8", 8), ("lanes16", 16), ("lanes32", 32)];

pub fn by_name(name: &str) -> Option<Benchmark> {
    match name {
        "pipeline" => Some(pipeline()),
        "snippet" => Some(snippet()),
        _ => SYNTHETIC_LANES
            .iter()
            .position(|(s, _)| *s == name)
            .map(|i| synthetic(name, SYNTHETIC_LANES[i].1, 7 + i as u64)),
    }
}

pub fn all() -> Vec<Benchmark> {
    let mut v = vec![pipeline(), snippet()];
    v.extend(SYNTHETIC_LANES.iter().filter_map(|(s, _)| by_name(s)));
    v
}
