// SPDX-License-Identifier: Apache-2.0
//! Reference implementations shared by the integration tests. None of
//! them call the code they check.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use wavecamo::milp::{Cmp, MilpModel, Sense, VarKind};
use wavecamo::timing::Path;
use wavecamo::{GateKind, Netlist, Signal, Sink};

/// Consumers of every driver, built from the gate inputs.
fn consumers(n: &Netlist) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new(); n.inputs.len() + n.gates.len() + n.flipflops.len()];
    for (g, gate) in n.gates.iter().enumerate() {
        for (p, &s) in gate.inputs.iter().enumerate() {
            out[flat(n, s)].push((g, p));
        }
    }
    out
}

fn flat(n: &Netlist, s: Signal) -> usize {
    match s {
        Signal::Input(i) => i,
        Signal::Gate(g) => n.inputs.len() + g,
        Signal::Ff(f) => n.inputs.len() + n.gates.len() + f,
    }
}

/// Arrival range over every path from `launch` to the driver of `end` that
/// crosses exactly one junction pin, by explicit depth-first enumeration.
/// Returns the range and the number of paths visited.
pub fn two_wave_range(
    n: &Netlist,
    junctions: &HashSet<(usize, usize)>,
    t_cq: f64,
    launch: Signal,
    end: Signal,
    cap: usize,
) -> (Option<(f64, f64)>, usize) {
    let cons = consumers(n);
    let start = if matches!(launch, Signal::Ff(_)) { t_cq } else { 0.0 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut visited = 0usize;
    // (signal, arrival, junction crossings)
    let mut stack = vec![(launch, start, 0u32)];
    while let Some((s, t, k)) = stack.pop() {
        if s == end && k == 1 {
            visited += 1;
            assert!(visited <= cap, "path enumeration exceeded {cap}");
            lo = lo.min(t);
            hi = hi.max(t);
        }
        for &(g, p) in &cons[flat(n, s)] {
            let gate = &n.gates[g];
            let k2 = k + junctions.contains(&(g, p)) as u32;
            if k2 > 1 {
                continue;
            }
            stack.push((Signal::Gate(g), t + gate.xi + gate.pin_delays[p], k2));
        }
    }
    ((lo <= hi).then_some((lo, hi)), visited)
}

/// Evaluates every gate over 64 input patterns at once.
pub fn eval_words(n: &Netlist, pis: &[u64]) -> Vec<u64> {
    let mut v = vec![0u64; n.inputs.len() + n.gates.len()];
    v[..pis.len()].copy_from_slice(pis);
    // Gates of generated cones are already in topological order.
    for (g, gate) in n.gates.iter().enumerate() {
        let ins: Vec<u64> = gate.inputs.iter().map(|&s| v[flat(n, s)]).collect();
        let w = word_gate(gate.kind, &ins);
        v[n.inputs.len() + g] = w;
    }
    v
}

/// Whether some input assignment puts every side input of `p` at its
/// non-controlling value, by enumerating all `2^k` assignments of a
/// combinational netlist in topological gate order.
pub fn brute_sensitizable(n: &Netlist, p: &Path) -> bool {
    let k = n.inputs.len();
    assert!(k <= 24);
    let mut side: Vec<(usize, bool)> = Vec::new();
    for &(g, pin) in &p.arcs {
        let gate = &n.gates[g];
        let nc = match gate.kind {
            GateKind::And | GateKind::Nand => true,
            GateKind::Or | GateKind::Nor => false,
            _ => continue,
        };
        for (q, &s) in gate.inputs.iter().enumerate() {
            if q != pin {
                side.push((flat(n, s), nc));
            }
        }
    }
    let total: u64 = 1 << k;
    let mut base = 0u64;
    while base < total {
        let lanes = (total - base).min(64);
        let pis: Vec<u64> = (0..k)
            .map(|i| {
                let mut w = 0u64;
                for l in 0..lanes {
                    if ((base + l) >> i) & 1 == 1 {
                        w |= 1 << l;
                    }
                }
                w
            })
            .collect();
        let v = eval_words(n, &pis);
        let mut ok = if lanes == 64 { !0u64 } else { (1u64 << lanes) - 1 };
        for &(s, want) in &side {
            ok &= if want { v[s] } else { !v[s] };
        }
        if ok != 0 {
            return true;
        }
        base += 64;
    }
    false
}

/// Random single-output cone over `k` inputs with reconvergent fan-out,
/// plus a random input-to-output path through it.
pub fn random_cone(rng: &mut ChaCha8Rng, k: usize, gates: usize) -> (Netlist, Path) {
    use GateKind::*;
    let kinds = [And, Nand, Or, Nor, Xor, Xnor, Not, Buf];
    let mut n = Netlist::new("cone", Default::default());
    let mut sigs: Vec<Signal> = (0..k).map(|i| n.add_input(&format!("i{i}"))).collect();
    for g in 0..gates {
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let arity = if kind.is_unary() { 1 } else { rng.gen_range(2..=3) };
        let mut ins = Vec::new();
        for _ in 0..arity {
            // Favour recent signals so the cone stays deep.
            let lo = sigs.len().saturating_sub(6);
            let s = if rng.gen_bool(0.6) { sigs[rng.gen_range(lo..sigs.len())] } else { sigs[rng.gen_range(0..sigs.len())] };
            ins.push(s);
        }
        sigs.push(n.add_gate(&format!("g{g}"), kind, ins));
    }
    let out = *sigs.last().unwrap();
    n.add_output(out);
    // Walk back from the output to an input.
    let mut arcs = Vec::new();
    let mut s = out;
    while let Signal::Gate(g) = s {
        let p = rng.gen_range(0..n.gates[g].inputs.len());
        arcs.push((g, p));
        s = n.gates[g].inputs[p];
    }
    arcs.reverse();
    let path = Path { launch: s, arcs, end: Sink::Output(0) };
    (n, path)
}

/// Gate order by Kahn's algorithm over gate-to-gate connections.
fn kahn(n: &Netlist) -> Vec<usize> {
    let mut indeg = vec![0usize; n.gates.len()];
    let mut succ = vec![Vec::new(); n.gates.len()];
    for (g, gate) in n.gates.iter().enumerate() {
        for &s in &gate.inputs {
            if let Signal::Gate(h) = s {
                indeg[g] += 1;
                succ[h].push(g);
            }
        }
    }
    let mut ready: Vec<usize> = (0..n.gates.len()).filter(|&g| indeg[g] == 0).collect();
    let mut order = Vec::new();
    while let Some(g) = ready.pop() {
        order.push(g);
        for &s in &succ[g] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    assert_eq!(order.len(), n.gates.len(), "combinational cycle");
    order
}

/// Zero-delay cycle simulation from a given register state; returns the
/// outputs of every cycle.
pub fn reference_run(n: &Netlist, inputs: &[Vec<bool>], init: &[bool]) -> Vec<Vec<bool>> {
    let order = kahn(n);
    let mut v = vec![0u64; n.inputs.len() + n.gates.len() + n.flipflops.len()];
    let ff0 = n.inputs.len() + n.gates.len();
    for (f, &b) in init.iter().enumerate() {
        v[ff0 + f] = b as u64;
    }
    let mut out = Vec::with_capacity(inputs.len());
    let mut ins = Vec::new();
    for pis in inputs {
        for (i, &b) in pis.iter().enumerate() {
            v[i] = b as u64;
        }
        for &g in &order {
            ins.clear();
            ins.extend(n.gates[g].inputs.iter().map(|&s| v[flat(n, s)]));
            v[n.inputs.len() + g] = word_gate(n.gates[g].kind, &ins) & 1;
        }
        out.push(n.outputs.iter().map(|&o| v[flat(n, o)] == 1).collect());
        let next: Vec<u64> = n.flipflops.iter().map(|f| v[flat(n, f.d)]).collect();
        v[ff0..].copy_from_slice(&next);
    }
    out
}

/// Register state reached by holding `first` until the registers settle.
pub fn settle_state(n: &Netlist, first: &[bool]) -> Vec<bool> {
    let mut st = vec![false; n.flipflops.len()];
    for _ in 0..=n.flipflops.len() {
        let next = step_state(n, first, &st);
        if next == st {
            break;
        }
        st = next;
    }
    st
}

fn step_state(n: &Netlist, pis: &[bool], st: &[bool]) -> Vec<bool> {
    let order = kahn(n);
    let mut v = vec![0u64; n.inputs.len() + n.gates.len() + n.flipflops.len()];
    let ff0 = n.inputs.len() + n.gates.len();
    for (i, &b) in pis.iter().enumerate() {
        v[i] = b as u64;
    }
    for (f, &b) in st.iter().enumerate() {
        v[ff0 + f] = b as u64;
    }
    for &g in &order {
        let ins: Vec<u64> = n.gates[g].inputs.iter().map(|&s| v[flat(n, s)]).collect();
        v[n.inputs.len() + g] = word_gate(n.gates[g].kind, &ins) & 1;
    }
    n.flipflops.iter().map(|f| v[flat(n, f.d)] == 1).collect()
}

fn word_gate(kind: GateKind, ins: &[u64]) -> u64 {
    match kind {
        GateKind::And => ins.iter().fold(!0, |a, &b| a & b),
        GateKind::Nand => !ins.iter().fold(!0, |a, &b| a & b),
        GateKind::Or => ins.iter().fold(0, |a, &b| a | b),
        GateKind::Nor => !ins.iter().fold(0, |a, &b| a | b),
        GateKind::Xor => ins.iter().fold(0, |a, &b| a ^ b),
        GateKind::Xnor => !ins.iter().fold(0, |a, &b| a ^ b),
        GateKind::Not => !ins[0],
        GateKind::Buf => ins[0],
    }
}

/// Optimum of a model whose integer variables are all binary, with at most
/// one continuous variable, by enumeration. The continuous variable is
/// optimized in closed form over the interval left by the rows. Returns
/// the objective in the model's own sense, or `None` when infeasible.
pub fn enumerate_milp(m: &MilpModel) -> Option<f64> {
    let bins: Vec<usize> = (0..m.vars.len()).filter(|&v| m.vars[v].kind == VarKind::Binary).collect();
    let cont: Vec<usize> = (0..m.vars.len()).filter(|&v| m.vars[v].kind == VarKind::Continuous).collect();
    assert!(cont.len() <= 1 && bins.len() + cont.len() == m.vars.len());
    let sign = if m.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut best: Option<f64> = None;
    for mask in 0u64..(1 << bins.len()) {
        let mut x = vec![0.0; m.vars.len()];
        for (i, &v) in bins.iter().enumerate() {
            x[v] = ((mask >> i) & 1) as f64;
        }
        let (mut lo, mut hi, y) = match cont.first() {
            Some(&y) => (m.vars[y].lb, m.vars[y].ub, Some(y)),
            None => (0.0, 0.0, None),
        };
        let mut ok = true;
        for c in &m.cons {
            let mut fixed = 0.0;
            let mut a = 0.0;
            for &(v, k) in &c.terms {
                if Some(v) == y {
                    a += k;
                } else {
                    fixed += k * x[v];
                }
            }
            let r = c.rhs - fixed;
            // a*y cmp r
            let tol = 1e-9;
            let mut bound = |cmp: Cmp| {
                if a.abs() < 1e-15 {
                    ok &= match cmp {
                        Cmp::Le => 0.0 <= r + tol,
                        Cmp::Ge => 0.0 >= r - tol,
                        Cmp::Eq => r.abs() <= tol,
                    };
                    return;
                }
                let q = r / a;
                let upper = matches!((cmp, a > 0.0), (Cmp::Le, true) | (Cmp::Ge, false));
                if upper {
                    hi = hi.min(q);
                } else {
                    lo = lo.max(q);
                }
            };
            match c.cmp {
                Cmp::Eq => {
                    bound(Cmp::Le);
                    bound(Cmp::Ge);
                }
                cmp => bound(cmp),
            }
        }
        if !ok || lo > hi + 1e-9 {
            continue;
        }
        let mut obj: f64 = 0.0;
        let mut cy = 0.0;
        for &(v, k) in &m.objective {
            if Some(v) == y {
                cy += k;
            } else {
                obj += k * x[v];
            }
        }
        if y.is_some() {
            let pick = if sign * cy > 0.0 { lo } else { hi };
            obj += cy * pick;
        }
        best = Some(match best {
            Some(b) if sign * b <= sign * obj => b,
            _ => obj,
        });
    }
    best
}

/// Random model over at most ten binaries and optionally one bounded
/// continuous variable.
pub fn random_model(seed: u64, with_continuous: bool) -> MilpModel {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut m = MilpModel::default();
    let nb = rng.gen_range(1..=10);
    let vars: Vec<usize> = (0..nb).map(|i| m.binary(format!("b{i}"))).collect();
    let y = with_continuous.then(|| m.continuous("y", 0.0, rng.gen_range(1.0..8.0)));
    for k in 0..rng.gen_range(1..=6) {
        let mut t = Vec::new();
        for &v in &vars {
            if rng.gen_bool(0.6) {
                t.push((v, rng.gen_range(-5..=5) as f64));
            }
        }
        if let Some(y) = y {
            if rng.gen_bool(0.7) {
                t.push((y, rng.gen_range(-3.0..3.0)));
            }
        }
        let cmp = [Cmp::Le, Cmp::Ge][rng.gen_range(0..2)];
        let rhs = rng.gen_range(-4..=6) as f64;
        m.add_con(format!("c{k}"), t, cmp, rhs);
    }
    let mut obj: Vec<(usize, f64)> = vars.iter().map(|&v| (v, rng.gen_range(-6..=6) as f64)).collect();
    if let Some(y) = y {
        obj.push((y, rng.gen_range(-2.0..2.0)));
    }
    m.set_objective(if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize }, obj);
    m
}
