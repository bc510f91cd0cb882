// SPDX-License-Identifier: Apache-2.0
//! Retiming over the gate graph: lags, retimed net weights, legality and
//! flip-flop relocation.
//!
//! A net runs from a driver (primary input or gate) to a consumer (gate pin
//! or primary output); its weight is the number of flip-flops in series on
//! it. Ports are pinned at lag 0.

use crate::config::TimingConfig;
use crate::error::RetimingError;
use crate::netlist::{FlipFlop, Netlist, Signal, Sink};
use crate::timing::Path;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Gate lags keyed by gate name. Absent gates have lag 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetimingAssignment {
    pub lags: BTreeMap<String, i64>,
}

impl RetimingAssignment {
    pub fn set(&mut self, n: &Netlist, g: usize, r: i64) {
        if r == 0 {
            self.lags.remove(&n.gates[g].id);
        } else {
            self.lags.insert(n.gates[g].id.clone(), r);
        }
    }

    /// Dense lag vector over gate indices.
    pub fn to_vec(&self, n: &Netlist) -> Vec<i64> {
        n.gates.iter().map(|g| self.lags.get(&g.id).copied().unwrap_or(0)).collect()
    }

    pub fn from_vec(n: &Netlist, r: &[i64]) -> RetimingAssignment {
        let mut a = RetimingAssignment::default();
        for (g, &v) in r.iter().enumerate() {
            a.set(n, g, v);
        }
        a
    }

    /// Lag of a driver or consumer vertex. Ports are 0.
    pub fn of_signal(r: &[i64], s: Signal) -> i64 {
        match s {
            Signal::Gate(g) => r[g],
            _ => 0,
        }
    }

    pub fn of_sink(r: &[i64], s: Sink) -> i64 {
        match s {
            Sink::Pin(g, _) => r[g],
            _ => 0,
        }
    }

    pub fn parse(text: &str) -> Result<RetimingAssignment, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("lag map serializes")
    }
}

/// A net of the gate graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Net {
    /// `Input` or `Gate`.
    pub src: Signal,
    /// `Pin` or `Output`.
    pub sink: Sink,
    pub w: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightGraph {
    pub nets: Vec<Net>,
}

/// Follows a chain of flip-flops back to its combinational driver.
pub fn trace_back(n: &Netlist, mut s: Signal) -> Result<(Signal, i64), RetimingError> {
    let mut w = 0;
    while let Signal::Ff(f) = s {
        w += 1;
        if w as usize > n.flipflops.len() {
            return Err(RetimingError::FfLoop);
        }
        s = n.flipflops[f].d;
    }
    Ok((s, w))
}

impl WeightGraph {
    pub fn build(n: &Netlist) -> Result<WeightGraph, RetimingError> {
        let mut nets = Vec::new();
        for (g, gate) in n.gates.iter().enumerate() {
            for (p, &s) in gate.inputs.iter().enumerate() {
                let (src, w) = trace_back(n, s)?;
                nets.push(Net { src, sink: Sink::Pin(g, p), w });
            }
        }
        for (o, &s) in n.outputs.iter().enumerate() {
            let (src, w) = trace_back(n, s)?;
            nets.push(Net { src, sink: Sink::Output(o), w });
        }
        Ok(WeightGraph { nets })
    }

    pub fn total_weight(&self) -> i64 {
        self.nets.iter().map(|e| e.w).sum()
    }

    /// Nets keyed by (driver name, consumer name, pin) for comparisons
    /// across netlists that share gate names.
    pub fn keyed(&self, n: &Netlist) -> BTreeMap<(String, String, usize), i64> {
        self.nets
            .iter()
            .map(|e| {
                let (sink, pin) = match e.sink {
                    Sink::Pin(g, p) => (n.gates[g].id.clone(), p),
                    Sink::Output(o) => (format!("out{}", o), 0),
                    Sink::FfD(f) => (n.flipflops[f].id.clone(), 0),
                };
                ((n.signal_name(e.src).to_string(), sink, pin), e.w)
            })
            .collect()
    }
}

/// `w + r(sink) - r(src)`.
pub fn retimed_weight(e: &Net, r: &[i64]) -> i64 {
    e.w + RetimingAssignment::of_sink(r, e.sink) - RetimingAssignment::of_signal(r, e.src)
}

/// Number of flip-flops in series on the nets of a path, including a
/// launching flip-flop chain and the capture flip-flop.
pub fn path_weight(n: &Netlist, p: &Path) -> i64 {
    let chain = |s: Signal| trace_back(n, s).map(|x| x.1).unwrap_or(0);
    let mut w: i64 = p.arcs.iter().map(|&(g, pin)| chain(n.gates[g].inputs[pin])).sum();
    w += match p.end {
        Sink::Output(o) => chain(n.outputs[o]),
        Sink::FfD(f) => chain(Signal::Ff(f)),
        Sink::Pin(..) => 0,
    };
    w
}

/// Sum of weights over a sequence of nets of the gate graph.
pub fn edges_weight(wg: &WeightGraph, edges: &[usize], r: Option<&[i64]>) -> i64 {
    edges
        .iter()
        .map(|&i| match r {
            Some(r) => retimed_weight(&wg.nets[i], r),
            None => wg.nets[i].w,
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    Negative { src: String, sink: String, w: i64 },
    /// Zero-weight combinational stretch ending at `gate` exceeds the period.
    Period { gate: String, delay: f64 },
}

/// Checks non-negativity of every retimed net and the period condition on
/// every zero-weight path after retiming.
pub fn is_legal(n: &Netlist, r: &RetimingAssignment, cfg: &TimingConfig) -> (bool, Vec<Violation>) {
    let mut out = Vec::new();
    let wg = match WeightGraph::build(n) {
        Ok(w) => w,
        Err(_) => return (false, out),
    };
    let rv = r.to_vec(n);
    let mut zero_in: Vec<Vec<(Signal, usize)>> = vec![Vec::new(); n.gates.len()];
    for e in &wg.nets {
        let w = retimed_weight(e, &rv);
        if w < 0 {
            let sink = match e.sink {
                Sink::Pin(g, _) => n.gates[g].id.clone(),
                Sink::Output(o) => format!("out{}", o),
                Sink::FfD(f) => n.flipflops[f].id.clone(),
            };
            out.push(Violation::Negative { src: n.signal_name(e.src).to_string(), sink, w });
        }
        if let Sink::Pin(g, p) = e.sink {
            if w == 0 {
                zero_in[g].push((e.src, p));
            }
        }
    }
    if !out.is_empty() {
        return (false, out);
    }
    // Longest zero-weight stretch per gate, in an order valid for the
    // retimed graph.
    let Some(order) = zero_weight_order(n.gates.len(), &zero_in) else {
        out.push(Violation::Period { gate: "<cycle>".into(), delay: f64::INFINITY });
        return (false, out);
    };
    let mut dmax = vec![0.0f64; n.gates.len()];
    for g in order {
        let mut best = 0.0f64;
        for p in 0..n.gates[g].inputs.len() {
            best = best.max(n.arc_delay(g, p));
        }
        for &(s, p) in &zero_in[g] {
            if let Signal::Gate(h) = s {
                best = best.max(dmax[h] + n.arc_delay(g, p));
            }
        }
        dmax[g] = best;
        if best > cfg.period + 1e-9 {
            out.push(Violation::Period { gate: n.gates[g].id.clone(), delay: best });
        }
    }
    (out.is_empty(), out)
}

fn zero_weight_order(ng: usize, zero_in: &[Vec<(Signal, usize)>]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; ng];
    let mut succ = vec![Vec::new(); ng];
    for (g, ins) in zero_in.iter().enumerate() {
        for &(s, _) in ins {
            if let Signal::Gate(h) = s {
                indeg[g] += 1;
                succ[h].push(g);
            }
        }
    }
    let mut stack: Vec<usize> = (0..ng).filter(|&g| indeg[g] == 0).collect();
    let mut order = Vec::with_capacity(ng);
    while let Some(g) = stack.pop() {
        order.push(g);
        for &s in &succ[g] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                stack.push(s);
            }
        }
    }
    (order.len() == ng).then_some(order)
}

/// `Σ r(g)·(inputs − outputs)` with one output counted per consumer net.
pub fn ff_count_delta(n: &Netlist, r: &RetimingAssignment) -> i64 {
    let rv = r.to_vec(n);
    let fo = n.fanouts();
    (0..n.gates.len())
        .map(|g| {
            let consumers = fo
                .of(Signal::Gate(g))
                .iter()
                .filter(|s| !matches!(s, Sink::FfD(_)))
                .count() as i64
                + ff_consumers(&fo, Signal::Gate(g));
            rv[g] * (n.gates[g].inputs.len() as i64 - consumers)
        })
        .sum()
}

/// Gate-graph consumers reached through flip-flop chains from `s`.
fn ff_consumers(fo: &crate::netlist::Fanouts, s: Signal) -> i64 {
    let mut count = 0;
    let mut stack: Vec<Signal> = fo
        .of(s)
        .iter()
        .filter_map(|k| match k {
            Sink::FfD(f) => Some(Signal::Ff(*f)),
            _ => None,
        })
        .collect();
    while let Some(q) = stack.pop() {
        for k in fo.of(q) {
            match k {
                Sink::FfD(f) => stack.push(Signal::Ff(*f)),
                _ => count += 1,
            }
        }
    }
    count
}

/// Relocates flip-flops to the retimed weights. Drivers whose nets all
/// keep their weight keep their flip-flops untouched; the others get one
/// fresh chain per consumer, marked as retimed.
pub fn apply_retiming(n: &Netlist, r: &RetimingAssignment) -> Result<Netlist, RetimingError> {
    let wg = WeightGraph::build(n)?;
    let rv = r.to_vec(n);
    let mut changed: BTreeSet<Signal> = BTreeSet::new();
    for e in &wg.nets {
        let w = retimed_weight(e, &rv);
        if w < 0 {
            return Err(RetimingError::Negative(n.signal_name(e.src).to_string()));
        }
        if w != e.w {
            changed.insert(e.src);
        }
    }
    if changed.is_empty() {
        return Ok(n.clone());
    }
    let mut out = n.clone();
    // Flip-flops owned by rebuilt drivers are dropped afterwards.
    let mut dead = Vec::new();
    for f in 0..n.flipflops.len() {
        if let Ok((src, _)) = trace_back(n, Signal::Ff(f)) {
            if changed.contains(&src) {
                dead.push(f);
            }
        }
    }
    for e in &wg.nets {
        if !changed.contains(&e.src) {
            continue;
        }
        let w = retimed_weight(e, &rv);
        let mut s = e.src;
        for _ in 0..w {
            let id = out.fresh_name(&format!("{}_rt", n.signal_name(e.src)));
            out.flipflops.push(FlipFlop { id, d: s, is_retimed: true });
            s = Signal::Ff(out.flipflops.len() - 1);
        }
        match e.sink {
            Sink::Pin(g, p) => out.gates[g].inputs[p] = s,
            Sink::Output(o) => out.outputs[o] = s,
            Sink::FfD(_) => unreachable!("nets end at gates or outputs"),
        }
    }
    out.remove_ffs(&dead);
    Ok(out)
}

/// Rebuilds every flip-flop as an unshared chain per consumer, so the
/// flip-flop count equals the total net weight.
pub fn unshare_ffs(n: &Netlist) -> Result<Netlist, RetimingError> {
    let wg = WeightGraph::build(n)?;
    let mut out = n.clone();
    let old = n.flipflops.len();
    for e in &wg.nets {
        let mut s = e.src;
        for _ in 0..e.w {
            let id = out.fresh_name(&format!("{}_rt", n.signal_name(e.src)));
            out.flipflops.push(FlipFlop { id, d: s, is_retimed: false });
            s = Signal::Ff(out.flipflops.len() - 1);
        }
        match e.sink {
            Sink::Pin(g, p) => out.gates[g].inputs[p] = s,
            Sink::Output(o) => out.outputs[o] = s,
            Sink::FfD(_) => unreachable!(),
        }
    }
    let dead: Vec<usize> = (0..old).collect();
    out.remove_ffs(&dead);
    Ok(out)
}
