// SPDX-License-Identifier: Apache-2.0
//! Gate-level netlist model.
//!
//! Flip-flops are explicit records. The weight view used by retiming is
//! derived on demand (see [`crate::retiming::WeightGraph`]).

mod bench;
mod delays;
mod graph;
mod placement;

pub use bench::{parse_bench, write_annotations, write_bench};
pub use delays::{DelayLibrary, FfTiming, KindDelays, LookupTable};
pub use graph::{ff_distance, hops_from, sequential_adjacency, Fanouts, SeqGraph};
pub use placement::Placement;

use crate::error::NetlistError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Combinational cell function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Not,
    Buf,
    Xor,
    Xnor,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Not,
        GateKind::Buf,
        GateKind::Xor,
        GateKind::Xnor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
        }
    }

    pub fn parse(s: &str) -> Option<GateKind> {
        Some(match s.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "NOT" | "INV" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            _ => return None,
        })
    }

    /// Input value that forces the output regardless of the other inputs.
    pub fn controlling(self) -> Option<bool> {
        match self {
            GateKind::And | GateKind::Nand => Some(false),
            GateKind::Or | GateKind::Nor => Some(true),
            _ => None,
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, GateKind::Not | GateKind::Buf)
    }

    pub fn eval(self, ins: &[bool]) -> bool {
        match self {
            GateKind::And => ins.iter().all(|&b| b),
            GateKind::Nand => !ins.iter().all(|&b| b),
            GateKind::Or => ins.iter().any(|&b| b),
            GateKind::Nor => !ins.iter().any(|&b| b),
            GateKind::Not => !ins[0],
            GateKind::Buf => ins[0],
            GateKind::Xor => ins.iter().fold(false, |a, &b| a ^ b),
            GateKind::Xnor => !ins.iter().fold(false, |a, &b| a ^ b),
        }
    }

    /// Bit-parallel evaluation over 64 assignments.
    pub fn eval_word(self, ins: &[u64]) -> u64 {
        match self {
            GateKind::And => ins.iter().fold(!0, |a, &b| a & b),
            GateKind::Nand => !ins.iter().fold(!0, |a, &b| a & b),
            GateKind::Or => ins.iter().fold(0, |a, &b| a | b),
            GateKind::Nor => !ins.iter().fold(0, |a, &b| a | b),
            GateKind::Not => !ins[0],
            GateKind::Buf => ins[0],
            GateKind::Xor => ins.iter().fold(0, |a, &b| a ^ b),
            GateKind::Xnor => !ins.iter().fold(0, |a, &b| a ^ b),
        }
    }
}

/// A driver of a net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Signal {
    Input(usize),
    Gate(usize),
    Ff(usize),
}

/// A consumer of a net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sink {
    Pin(usize, usize),
    FfD(usize),
    Output(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub id: String,
    pub kind: GateKind,
    pub inputs: Vec<Signal>,
    /// Resolved per-pin delays for the current size level.
    pub pin_delays: Vec<f64>,
    pub size_level: usize,
    /// Inserted interconnect delay in front of the gate.
    pub xi: f64,
}

impl Gate {
    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlipFlop {
    pub id: String,
    pub d: Signal,
    pub is_retimed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Netlist {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<Signal>,
    pub gates: Vec<Gate>,
    pub flipflops: Vec<FlipFlop>,
    pub library: DelayLibrary,
}

impl Netlist {
    pub fn new(name: &str, library: DelayLibrary) -> Netlist {
        Netlist {
            name: name.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            gates: Vec::new(),
            flipflops: Vec::new(),
            library,
        }
    }

    pub fn add_input(&mut self, id: &str) -> Signal {
        self.inputs.push(id.to_string());
        Signal::Input(self.inputs.len() - 1)
    }

    /// Adds a gate at the library default size with no inserted delay.
    pub fn add_gate(&mut self, id: &str, kind: GateKind, inputs: Vec<Signal>) -> Signal {
        let size = self.library.default_size;
        let pin_delays = self.library.pin_delays(id, kind, inputs.len(), size);
        self.gates.push(Gate {
            id: id.to_string(),
            kind,
            inputs,
            pin_delays,
            size_level: size,
            xi: 0.0,
        });
        Signal::Gate(self.gates.len() - 1)
    }

    pub fn add_ff(&mut self, id: &str, d: Signal) -> Signal {
        self.flipflops.push(FlipFlop {
            id: id.to_string(),
            d,
            is_retimed: false,
        });
        Signal::Ff(self.flipflops.len() - 1)
    }

    pub fn add_output(&mut self, s: Signal) {
        self.outputs.push(s);
    }

    /// Changes the size level of a gate and refreshes its pin delays.
    pub fn resize(&mut self, g: usize, level: usize) {
        let gate = &self.gates[g];
        let pd = self
            .library
            .pin_delays(&gate.id, gate.kind, gate.inputs.len(), level);
        let gate = &mut self.gates[g];
        gate.size_level = level;
        gate.pin_delays = pd;
    }

    /// Pin delay plus the gate's inserted delay.
    pub fn arc_delay(&self, g: usize, pin: usize) -> f64 {
        let gate = &self.gates[g];
        gate.xi + gate.pin_delays[pin]
    }

    pub fn signal_name(&self, s: Signal) -> &str {
        match s {
            Signal::Input(i) => &self.inputs[i],
            Signal::Gate(g) => &self.gates[g].id,
            Signal::Ff(f) => &self.flipflops[f].id,
        }
    }

    pub fn name_map(&self) -> HashMap<&str, Signal> {
        let mut m = HashMap::new();
        for (i, s) in self.inputs.iter().enumerate() {
            m.insert(s.as_str(), Signal::Input(i));
        }
        for (i, g) in self.gates.iter().enumerate() {
            m.insert(g.id.as_str(), Signal::Gate(i));
        }
        for (i, f) in self.flipflops.iter().enumerate() {
            m.insert(f.id.as_str(), Signal::Ff(i));
        }
        m
    }

    pub fn ff_index(&self, id: &str) -> Option<usize> {
        self.flipflops.iter().position(|f| f.id == id)
    }

    pub fn gate_index(&self, id: &str) -> Option<usize> {
        self.gates.iter().position(|g| g.id == id)
    }

    /// Returns a name not yet used by any signal, derived from `base`.
    pub fn fresh_name(&self, base: &str) -> String {
        let names = self.name_map();
        if !names.contains_key(base) {
            return base.to_string();
        }
        (1..)
            .map(|k| format!("{base}_{k}"))
            .find(|c| !names.contains_key(c.as_str()))
            .unwrap()
    }

    pub fn fanouts(&self) -> Fanouts {
        Fanouts::build(self)
    }

    /// Gates in combinational topological order.
    pub fn topo_order(&self) -> Result<Vec<usize>, NetlistError> {
        graph::topo_order(self)
    }

    /// Checks structural invariants: drivers in range, acyclic logic,
    /// positive pin delays and non-negative inserted delays.
    pub fn validate(&self) -> Result<(), NetlistError> {
        let ok = |s: Signal| match s {
            Signal::Input(i) => i < self.inputs.len(),
            Signal::Gate(g) => g < self.gates.len(),
            Signal::Ff(f) => f < self.flipflops.len(),
        };
        for g in &self.gates {
            if g.inputs.is_empty() || (g.kind.is_unary() && g.inputs.len() != 1) {
                return Err(NetlistError::Arity(g.id.clone()));
            }
            if g.inputs.iter().any(|&s| !ok(s)) {
                return Err(NetlistError::Undriven(g.id.clone()));
            }
            if g.pin_delays.len() != g.inputs.len() || g.pin_delays.iter().any(|&d| d <= 0.0) {
                return Err(NetlistError::BadDelay(g.id.clone()));
            }
            if g.xi < 0.0 || !g.xi.is_finite() {
                return Err(NetlistError::BadDelay(g.id.clone()));
            }
        }
        for f in &self.flipflops {
            if !ok(f.d) {
                return Err(NetlistError::Undriven(f.id.clone()));
            }
        }
        if self.outputs.iter().any(|&s| !ok(s)) {
            return Err(NetlistError::Undriven("output".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for n in self
            .inputs
            .iter()
            .chain(self.gates.iter().map(|g| &g.id))
            .chain(self.flipflops.iter().map(|f| &f.id))
        {
            if !seen.insert(n.as_str()) {
                return Err(NetlistError::Duplicate(n.clone()));
            }
        }
        self.topo_order().map(|_| ())
    }

    /// Total inserted delay over all gates.
    pub fn total_xi(&self) -> f64 {
        self.gates.iter().map(|g| g.xi).sum()
    }

    /// Replaces a flip-flop by a wire: every consumer of its Q is driven by
    /// its D driver instead. The record stays in place but drives nothing.
    pub fn bypass_ff(&mut self, f: usize) {
        let d = self.flipflops[f].d;
        let q = Signal::Ff(f);
        for g in &mut self.gates {
            for s in &mut g.inputs {
                if *s == q {
                    *s = d;
                }
            }
        }
        for ff in &mut self.flipflops {
            if ff.d == q {
                ff.d = d;
            }
        }
        for o in &mut self.outputs {
            if *o == q {
                *o = d;
            }
        }
    }

    /// Deletes flip-flops that drive nothing, renumbering the rest.
    pub fn drop_dead_ffs(&mut self) {
        loop {
            let fo = self.fanouts();
            let dead: Vec<usize> = (0..self.flipflops.len())
                .filter(|&f| fo.of(Signal::Ff(f)).is_empty())
                .collect();
            if dead.is_empty() {
                return;
            }
            self.remove_ffs(&dead);
        }
    }

    /// Removes flip-flop records that have no consumers.
    pub fn remove_ffs(&mut self, dead: &[usize]) {
        let mut map = vec![usize::MAX; self.flipflops.len()];
        let mut kept = Vec::new();
        for (i, f) in self.flipflops.drain(..).enumerate() {
            if !dead.contains(&i) {
                map[i] = kept.len();
                kept.push(f);
            }
        }
        self.flipflops = kept;
        let remap = |s: &mut Signal| {
            if let Signal::Ff(f) = s {
                debug_assert!(map[*f] != usize::MAX, "removed flip-flop still used");
                *f = map[*f];
            }
        };
        for g in &mut self.gates {
            g.inputs.iter_mut().for_each(remap);
        }
        for f in &mut self.flipflops {
            remap(&mut f.d);
        }
        self.outputs.iter_mut().for_each(remap);
    }

    /// Removes gate records, renumbering the rest. The removed gates must
    /// drive nothing that survives.
    pub fn remove_gates(&mut self, dead: &[usize]) {
        let mut map = vec![usize::MAX; self.gates.len()];
        let mut kept = Vec::new();
        for (i, g) in self.gates.drain(..).enumerate() {
            if !dead.contains(&i) {
                map[i] = kept.len();
                kept.push(g);
            }
        }
        self.gates = kept;
        let remap = |s: &mut Signal| {
            if let Signal::Gate(g) = s {
                debug_assert!(map[*g] != usize::MAX, "removed gate still used");
                *g = map[*g];
            }
        };
        for g in &mut self.gates {
            g.inputs.iter_mut().for_each(remap);
        }
        for f in &mut self.flipflops {
            remap(&mut f.d);
        }
        self.outputs.iter_mut().for_each(remap);
    }
}
