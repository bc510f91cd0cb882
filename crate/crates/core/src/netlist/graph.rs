// SPDX-License-Identifier: Apache-2.0
//! Structural queries: fan-out lists, topological order, flip-flop
//! adjacency and distance.

use super::{Netlist, Placement, Signal, Sink};
use crate::error::NetlistError;
use std::collections::{BTreeSet, VecDeque};

/// Consumers of every driver.
#[derive(Clone, Debug)]
pub struct Fanouts {
    inputs: Vec<Vec<Sink>>,
    gates: Vec<Vec<Sink>>,
    ffs: Vec<Vec<Sink>>,
}

impl Fanouts {
    pub fn build(n: &Netlist) -> Fanouts {
        let mut fo = Fanouts {
            inputs: vec![Vec::new(); n.inputs.len()],
            gates: vec![Vec::new(); n.gates.len()],
            ffs: vec![Vec::new(); n.flipflops.len()],
        };
        for (g, gate) in n.gates.iter().enumerate() {
            for (p, &s) in gate.inputs.iter().enumerate() {
                fo.slot(s).push(Sink::Pin(g, p));
            }
        }
        for (f, ff) in n.flipflops.iter().enumerate() {
            fo.slot(ff.d).push(Sink::FfD(f));
        }
        for (o, &s) in n.outputs.iter().enumerate() {
            fo.slot(s).push(Sink::Output(o));
        }
        fo
    }

    fn slot(&mut self, s: Signal) -> &mut Vec<Sink> {
        match s {
            Signal::Input(i) => &mut self.inputs[i],
            Signal::Gate(g) => &mut self.gates[g],
            Signal::Ff(f) => &mut self.ffs[f],
        }
    }

    pub fn of(&self, s: Signal) -> &[Sink] {
        match s {
            Signal::Input(i) => &self.inputs[i],
            Signal::Gate(g) => &self.gates[g],
            Signal::Ff(f) => &self.ffs[f],
        }
    }
}

pub(crate) fn topo_order(n: &Netlist) -> Result<Vec<usize>, NetlistError> {
    let ng = n.gates.len();
    let mut indeg = vec![0usize; ng];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); ng];
    for (g, gate) in n.gates.iter().enumerate() {
        for &s in &gate.inputs {
            if let Signal::Gate(h) = s {
                if h >= ng {
                    return Err(NetlistError::Undriven(gate.id.clone()));
                }
                indeg[g] += 1;
                succ[h].push(g);
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..ng).filter(|&g| indeg[g] == 0).collect();
    let mut order = Vec::with_capacity(ng);
    while let Some(g) = queue.pop_front() {
        order.push(g);
        for &h in &succ[g] {
            indeg[h] -= 1;
            if indeg[h] == 0 {
                queue.push_back(h);
            }
        }
    }
    if order.len() != ng {
        let g = (0..ng).find(|&g| indeg[g] > 0).unwrap();
        return Err(NetlistError::Cycle(n.gates[g].id.clone()));
    }
    Ok(order)
}

/// Flip-flop graph: `a -> b` iff a purely combinational path leads from
/// a's Q to b's D.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqGraph {
    pub succ: Vec<BTreeSet<usize>>,
    pub pred: Vec<BTreeSet<usize>>,
}

impl SeqGraph {
    pub fn sinks(&self, f: usize) -> usize {
        self.succ[f].len()
    }
    pub fn sources(&self, f: usize) -> usize {
        self.pred[f].len()
    }
}

pub fn sequential_adjacency(n: &Netlist) -> SeqGraph {
    let nf = n.flipflops.len();
    let fo = n.fanouts();
    let mut succ = vec![BTreeSet::new(); nf];
    let mut pred = vec![BTreeSet::new(); nf];
    let mut seen = vec![usize::MAX; n.gates.len()];
    for a in 0..nf {
        let mut stack = vec![Signal::Ff(a)];
        while let Some(s) = stack.pop() {
            for &sink in fo.of(s) {
                match sink {
                    Sink::Pin(g, _) if seen[g] != a => {
                        seen[g] = a;
                        stack.push(Signal::Gate(g));
                    }
                    Sink::FfD(b) => {
                        succ[a].insert(b);
                        pred[b].insert(a);
                    }
                    _ => {}
                }
            }
        }
    }
    SeqGraph { succ, pred }
}

/// Distance between two flip-flops: Euclidean with a placement, otherwise
/// undirected hop count in the flip-flop graph. Unreachable pairs give
/// infinity.
pub fn ff_distance(
    n: &Netlist,
    adj: &SeqGraph,
    a: usize,
    b: usize,
    placement: Option<&Placement>,
) -> Result<f64, NetlistError> {
    let nf = n.flipflops.len();
    for f in [a, b] {
        if f >= nf {
            return Err(NetlistError::UnknownFf(f.to_string()));
        }
    }
    if let Some(p) = placement {
        let pa = p
            .get(&n.flipflops[a].id)
            .ok_or_else(|| NetlistError::UnknownFf(n.flipflops[a].id.clone()))?;
        let pb = p
            .get(&n.flipflops[b].id)
            .ok_or_else(|| NetlistError::UnknownFf(n.flipflops[b].id.clone()))?;
        return Ok(((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt());
    }
    Ok(hops_from(adj, a)[b].map_or(f64::INFINITY, |h| h as f64))
}

/// Undirected hop counts from `a` to every flip-flop.
pub fn hops_from(adj: &SeqGraph, a: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.succ.len()];
    dist[a] = Some(0);
    let mut q = VecDeque::from([a]);
    while let Some(u) = q.pop_front() {
        let d = dist[u].unwrap();
        for &v in adj.succ[u].iter().chain(adj.pred[u].iter()) {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                q.push_back(v);
            }
        }
    }
    dist
}
