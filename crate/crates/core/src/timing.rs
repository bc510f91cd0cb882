// SPDX-License-Identifier: Apache-2.0
//! Static timing: arrival times, paths, sampling and window checks.

use crate::config::TimingConfig;
use crate::error::NetlistError;
use crate::netlist::{Netlist, Signal, Sink};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};

/// Latest and earliest arrival at every gate output, with the input pin
/// realizing each bound.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalTimes {
    pub late: Vec<f64>,
    pub early: Vec<f64>,
    pub late_pin: Vec<usize>,
    pub early_pin: Vec<usize>,
    pub t_cq: f64,
}

impl ArrivalTimes {
    /// (earliest, latest) arrival at a driver.
    pub fn at(&self, s: Signal) -> (f64, f64) {
        match s {
            Signal::Input(_) => (0.0, 0.0),
            Signal::Ff(_) => (self.t_cq, self.t_cq),
            Signal::Gate(g) => (self.early[g], self.late[g]),
        }
    }
}

pub fn launch_offset(s: Signal, t_cq: f64) -> f64 {
    match s {
        Signal::Ff(_) => t_cq,
        _ => 0.0,
    }
}

pub fn propagate_arrivals(n: &Netlist, t_cq: f64) -> Result<ArrivalTimes, NetlistError> {
    let order = n.topo_order()?;
    let ng = n.gates.len();
    let mut at = ArrivalTimes {
        late: vec![0.0; ng],
        early: vec![0.0; ng],
        late_pin: vec![0; ng],
        early_pin: vec![0; ng],
        t_cq,
    };
    for g in order {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (p, &s) in n.gates[g].inputs.iter().enumerate() {
            let (e, l) = at.at(s);
            let d = n.arc_delay(g, p);
            if l + d > hi {
                hi = l + d;
                at.late_pin[g] = p;
            }
            if e + d < lo {
                lo = e + d;
                at.early_pin[g] = p;
            }
        }
        at.late[g] = hi;
        at.early[g] = lo;
    }
    Ok(at)
}

/// A launch-to-end structural path. `arcs` lists (gate, input pin) in
/// order; the first pin is driven by `launch`, each later pin by the
/// previous gate, and `end` consumes the last gate (or the launch when the
/// path has no gates).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path {
    pub launch: Signal,
    pub arcs: Vec<(usize, usize)>,
    pub end: Sink,
}

impl Path {
    pub fn gates(&self) -> impl Iterator<Item = usize> + '_ {
        self.arcs.iter().map(|a| a.0)
    }

    /// Driver of the end point.
    pub fn last_driver(&self) -> Signal {
        self.arcs.last().map_or(self.launch, |a| Signal::Gate(a.0))
    }

    /// Checks the path against the netlist connectivity.
    pub fn is_well_formed(&self, n: &Netlist) -> bool {
        let mut prev = self.launch;
        for &(g, p) in &self.arcs {
            if g >= n.gates.len() || p >= n.gates[g].inputs.len() || n.gates[g].inputs[p] != prev {
                return false;
            }
            prev = Signal::Gate(g);
        }
        match self.end {
            Sink::FfD(f) => f < n.flipflops.len() && n.flipflops[f].d == prev,
            Sink::Output(o) => o < n.outputs.len() && n.outputs[o] == prev,
            Sink::Pin(g, p) => g < n.gates.len() && p < n.gates[g].inputs.len() && n.gates[g].inputs[p] == prev,
        }
    }

    /// Concatenates a fan-in half ending at flip-flop `f` and a fan-out half
    /// launched from `f`, giving the path seen once `f` is a wire.
    pub fn merge(left: &Path, right: &Path) -> Path {
        let mut arcs = left.arcs.clone();
        arcs.extend_from_slice(&right.arcs);
        Path {
            launch: left.launch,
            arcs,
            end: right.end,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DelayMode {
    Typical,
    Lookup,
}

/// Sum of inserted and pin delays along the path.
pub fn path_delay(n: &Netlist, p: &Path) -> f64 {
    p.arcs.iter().map(|&(g, pin)| n.arc_delay(g, pin)).sum()
}

/// Electrical load at a gate output, in library load units.
pub fn output_load(n: &Netlist, fo: &crate::netlist::Fanouts, g: usize) -> f64 {
    let sinks = fo.of(Signal::Gate(g)).len().max(1);
    sinks as f64 * n.library.pin_load
}

/// Path delay with slew chained through the lookup tables. The flag
/// reports that some slew or load fell outside a table and was clamped.
pub fn path_delay_lookup(n: &Netlist, p: &Path) -> (f64, bool) {
    let fo = n.fanouts();
    let mut slew = n.library.launch_slew;
    let mut total = 0.0;
    let mut clamped = false;
    for &(g, pin) in &p.arcs {
        let gate = &n.gates[g];
        let base = gate.pin_delays[pin];
        match n.library.tables.get(gate.kind.name()) {
            Some(t) => {
                let (scale, out, c) = t.eval(slew, output_load(n, &fo, g));
                clamped |= c;
                total += gate.xi + base * scale;
                slew = out;
            }
            None => total += gate.xi + base,
        }
    }
    if clamped {
        log::warn!("lookup clamped on path from {}", n.signal_name(p.launch));
    }
    (total, clamped)
}

pub fn path_delay_mode(n: &Netlist, p: &Path, mode: DelayMode) -> f64 {
    match mode {
        DelayMode::Typical => path_delay(n, p),
        DelayMode::Lookup => path_delay_lookup(n, p).0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Fanin,
    Fanout,
}

/// Number of structural paths from any launch point to each gate output.
pub fn count_paths_to(n: &Netlist) -> Result<Vec<f64>, NetlistError> {
    let mut cnt = vec![0.0; n.gates.len()];
    for g in n.topo_order()? {
        cnt[g] = n.gates[g]
            .inputs
            .iter()
            .map(|&s| match s {
                Signal::Gate(h) => cnt[h],
                _ => 1.0,
            })
            .sum();
    }
    Ok(cnt)
}

/// Number of structural paths from each gate output to any capture point.
pub fn count_paths_from(n: &Netlist) -> Result<Vec<f64>, NetlistError> {
    let fo = n.fanouts();
    let mut cnt = vec![0.0; n.gates.len()];
    for g in n.topo_order()?.into_iter().rev() {
        cnt[g] = fo
            .of(Signal::Gate(g))
            .iter()
            .map(|&s| match s {
                Sink::Pin(h, _) => cnt[h],
                _ => 1.0,
            })
            .sum();
    }
    Ok(cnt)
}

fn fanin_paths_all(n: &Netlist, end: Sink, driver: Signal, out: &mut Vec<Path>, cap: usize) {
    fn rec(n: &Netlist, s: Signal, tail: &mut Vec<(usize, usize)>, end: Sink, out: &mut Vec<Path>, cap: usize) {
        if out.len() >= cap {
            return;
        }
        match s {
            Signal::Gate(g) => {
                for p in 0..n.gates[g].inputs.len() {
                    tail.push((g, p));
                    rec(n, n.gates[g].inputs[p], tail, end, out, cap);
                    tail.pop();
                }
            }
            launch => {
                let mut arcs = tail.clone();
                arcs.reverse();
                out.push(Path { launch, arcs, end });
            }
        }
    }
    rec(n, driver, &mut Vec::new(), end, out, cap);
}

fn fanout_paths_all(n: &Netlist, fo: &crate::netlist::Fanouts, launch: Signal, out: &mut Vec<Path>, cap: usize) {
    fn rec(
        n: &Netlist,
        fo: &crate::netlist::Fanouts,
        s: Signal,
        launch: Signal,
        arcs: &mut Vec<(usize, usize)>,
        out: &mut Vec<Path>,
        cap: usize,
    ) {
        for &sink in fo.of(s) {
            if out.len() >= cap {
                return;
            }
            match sink {
                Sink::Pin(g, p) => {
                    arcs.push((g, p));
                    rec(n, fo, Signal::Gate(g), launch, arcs, out, cap);
                    arcs.pop();
                }
                end => out.push(Path {
                    launch,
                    arcs: arcs.clone(),
                    end,
                }),
            }
        }
    }
    rec(n, fo, launch, launch, &mut Vec::new(), out, cap);
}

/// Up to `limit` distinct paths ending at (fan-in) or launched from
/// (fan-out) flip-flop `ff`. All paths are returned when there are at most
/// `limit`; otherwise random walks choose uniformly at each branch.
pub fn sample_paths(n: &Netlist, ff: usize, side: Side, limit: usize, seed: u64) -> Vec<Path> {
    let fo = n.fanouts();
    let total = match side {
        Side::Fanin => match n.flipflops[ff].d {
            Signal::Gate(g) => count_paths_to(n).map(|c| c[g]).unwrap_or(f64::INFINITY),
            _ => 1.0,
        },
        Side::Fanout => {
            let from = count_paths_from(n).unwrap_or_default();
            fo.of(Signal::Ff(ff))
                .iter()
                .map(|&s| match s {
                    Sink::Pin(g, _) => from.get(g).copied().unwrap_or(f64::INFINITY),
                    _ => 1.0,
                })
                .sum()
        }
    };
    let mut out = Vec::new();
    if total <= limit as f64 {
        match side {
            Side::Fanin => fanin_paths_all(n, Sink::FfD(ff), n.flipflops[ff].d, &mut out, limit),
            Side::Fanout => fanout_paths_all(n, &fo, Signal::Ff(ff), &mut out, limit),
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (ff as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut seen = BTreeSet::new();
    let mut misses = 0usize;
    while out.len() < limit && misses < 50 * limit + 1000 {
        let p = match side {
            Side::Fanin => {
                let mut arcs = Vec::new();
                let mut s = n.flipflops[ff].d;
                while let Signal::Gate(g) = s {
                    let pin = rng.gen_range(0..n.gates[g].inputs.len());
                    arcs.push((g, pin));
                    s = n.gates[g].inputs[pin];
                }
                arcs.reverse();
                Path {
                    launch: s,
                    arcs,
                    end: Sink::FfD(ff),
                }
            }
            Side::Fanout => {
                let mut arcs = Vec::new();
                let mut s = Signal::Ff(ff);
                let end = loop {
                    let Some(&sink) = fo.of(s).choose(&mut rng) else {
                        break None;
                    };
                    match sink {
                        Sink::Pin(g, p) => {
                            arcs.push((g, p));
                            s = Signal::Gate(g);
                        }
                        e => break Some(e),
                    }
                };
                let Some(end) = end else {
                    misses += 1;
                    continue;
                };
                Path {
                    launch: Signal::Ff(ff),
                    arcs,
                    end,
                }
            }
        };
        if seen.insert(p.clone()) {
            out.push(p);
        } else {
            misses += 1;
        }
    }
    out
}

/// Attacker-facing delay class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrayClass {
    DefinitelySingle,
    DefinitelyWp,
    Suspicious,
}

pub fn classify_gray(d: f64, cfg: &TimingConfig) -> GrayClass {
    let t = cfg.period;
    if (1.0 + cfg.tau) * d < t {
        GrayClass::DefinitelySingle
    } else if (1.0 - cfg.tau) * d > t {
        GrayClass::DefinitelyWp
    } else {
        GrayClass::Suspicious
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub ok: bool,
    /// (1-δ)·dmin - (T + t_h)
    pub hold_slack: f64,
    /// (2T - t_su) - (1+δ)·dmax
    pub setup_slack: f64,
}

/// Two-wave window check with PVT margin.
pub fn check_wp_window(dmin: f64, dmax: f64, cfg: &TimingConfig) -> WindowReport {
    let hold_slack = (1.0 - cfg.delta) * dmin - (cfg.period + cfg.t_h);
    let setup_slack = (2.0 * cfg.period - cfg.t_su) - (1.0 + cfg.delta) * dmax;
    WindowReport {
        ok: hold_slack >= -1e-9 && setup_slack >= -1e-9,
        hold_slack,
        setup_slack,
    }
}

/// Sentinels for "no path of this class".
pub const NO_EARLY: f64 = f64::INFINITY;
pub const NO_LATE: f64 = f64::NEG_INFINITY;

/// Arrivals split by wave count. Class 1 paths cross no junction, class 2
/// paths cross exactly one. A junction is a gate input pin where a
/// flip-flop used to sit.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveArrivals {
    /// Per gate: [(early, late) for class 1, (early, late) for class 2].
    pub gate: Vec<[(f64, f64); 2]>,
    pub t_cq: f64,
    /// A path crossing two junctions exists.
    pub triple: bool,
}

impl WaveArrivals {
    pub fn at(&self, s: Signal) -> [(f64, f64); 2] {
        match s {
            Signal::Gate(g) => self.gate[g],
            other => [(launch_offset(other, self.t_cq), launch_offset(other, self.t_cq)), (NO_EARLY, NO_LATE)],
        }
    }
}

pub fn wave_arrivals(n: &Netlist, junctions: &HashSet<(usize, usize)>, t_cq: f64) -> Result<WaveArrivals, NetlistError> {
    let mut wa = WaveArrivals {
        gate: vec![[(NO_EARLY, NO_LATE); 2]; n.gates.len()],
        t_cq,
        triple: false,
    };
    for g in n.topo_order()? {
        let mut acc = [(NO_EARLY, NO_LATE); 2];
        for (p, &s) in n.gates[g].inputs.iter().enumerate() {
            let src = wa.at(s);
            let d = n.arc_delay(g, p);
            let shift = junctions.contains(&(g, p));
            if shift && src[1].1 > NO_LATE {
                wa.triple = true;
            }
            for c in 0..2 {
                let (e, l) = src[c];
                if l == NO_LATE {
                    continue;
                }
                let k = if shift { (c + 1).min(1) } else { c };
                acc[k].0 = acc[k].0.min(e + d);
                acc[k].1 = acc[k].1.max(l + d);
            }
        }
        wa.gate[g] = acc;
    }
    Ok(wa)
}

/// A timing problem at a capture point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureViolation {
    pub capture: String,
    pub class: usize,
    pub kind: String,
    pub slack: f64,
}

/// Checks every flip-flop D and primary output against the single-period
/// window (class 1) and the two-wave window with PVT margin (class 2).
/// Captures wired straight to a primary input are skipped.
pub fn check_captures(n: &Netlist, wa: &WaveArrivals, cfg: &TimingConfig) -> Vec<CaptureViolation> {
    let mut out = Vec::new();
    let t = cfg.period;
    let mut check = |name: String, s: Signal| {
        // Primary inputs change at the clock edge and are not timed.
        if matches!(s, Signal::Input(_)) {
            return;
        }
        let a = wa.at(s);
        let (e1, l1) = a[0];
        if l1 > NO_LATE {
            let setup = t - cfg.t_su - l1;
            let hold = e1 - cfg.t_h;
            if setup < -1e-9 {
                out.push(CaptureViolation { capture: name.clone(), class: 1, kind: "setup".into(), slack: setup });
            }
            if hold < -1e-9 {
                out.push(CaptureViolation { capture: name.clone(), class: 1, kind: "hold".into(), slack: hold });
            }
        }
        let (e2, l2) = a[1];
        if l2 > NO_LATE {
            let r = check_wp_window(e2, l2, cfg);
            if r.setup_slack < -1e-9 {
                out.push(CaptureViolation { capture: name.clone(), class: 2, kind: "setup".into(), slack: r.setup_slack });
            }
            if r.hold_slack < -1e-9 {
                out.push(CaptureViolation { capture: name.clone(), class: 2, kind: "hold".into(), slack: r.hold_slack });
            }
        }
    };
    for f in &n.flipflops {
        check(f.id.clone(), f.d);
    }
    for &o in &n.outputs {
        check(format!("out:{}", n.signal_name(o)), o);
    }
    out
}

/// Two-wave arrival with its class-specific gray check: the arrival and
/// the arrival plus setup time both fall in the gray region.
pub fn gray_ok(e: f64, l: f64, cfg: &TimingConfig) -> bool {
    classify_gray(e, cfg) == GrayClass::Suspicious
        && classify_gray(l, cfg) == GrayClass::Suspicious
        && classify_gray(e + cfg.t_su, cfg) == GrayClass::Suspicious
        && classify_gray(l + cfg.t_su, cfg) == GrayClass::Suspicious
}
