// SPDX-License-Identifier: Apache-2.0
//! Event-driven gate-level simulation with inertial pin delays and
//! setup/hold checking at every capture point.
//!
//! Cycle `k` starts at time `k*T`: primary inputs take vector `k` and
//! flip-flops sample D (for `k >= 1`), with Q following `t_cq` later.
//! Output vector `k` is sampled at edge `k+1`.

use crate::config::TimingConfig;
use crate::error::SimError;
use crate::netlist::{Netlist, Signal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

const TIME_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingViolation {
    /// Edge index at which the capture was disturbed.
    pub cycle: usize,
    pub capture: String,
    /// `setup` or `hold`.
    pub kind: String,
    pub slack: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub inputs: Vec<Vec<bool>>,
    pub outputs: Vec<Vec<bool>>,
    pub violations: Vec<TimingViolation>,
}

/// Flat net numbering: inputs, then gates, then flip-flops.
struct Nets {
    ni: usize,
    ng: usize,
}

impl Nets {
    fn of(&self, s: Signal) -> usize {
        match s {
            Signal::Input(i) => i,
            Signal::Gate(g) => self.ni + g,
            Signal::Ff(f) => self.ni + self.ng + f,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Time(f64);
impl Eq for Time {}
impl PartialOrd for Time {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Time {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Zero-delay evaluation of all gates from the given port values.
fn settle(n: &Netlist, order: &[usize], pis: &[bool], ffs: &[bool]) -> Vec<bool> {
    let nets = Nets { ni: n.inputs.len(), ng: n.gates.len() };
    let mut v = vec![false; nets.ni + nets.ng + n.flipflops.len()];
    v[..nets.ni].copy_from_slice(pis);
    v[nets.ni + nets.ng..].copy_from_slice(ffs);
    let mut buf = Vec::new();
    for &g in order {
        buf.clear();
        buf.extend(n.gates[g].inputs.iter().map(|&s| v[nets.of(s)]));
        v[nets.ni + g] = n.gates[g].kind.eval(&buf);
    }
    v
}

/// Flip-flop state reached by holding the first input vector with zero
/// delays until the registers stop changing.
pub fn settled_state(n: &Netlist, first: &[bool]) -> Vec<bool> {
    let order = n.topo_order().expect("acyclic netlist");
    let nets = Nets { ni: n.inputs.len(), ng: n.gates.len() };
    let mut ffs = vec![false; n.flipflops.len()];
    for _ in 0..=n.flipflops.len() {
        let v = settle(n, &order, first, &ffs);
        let next: Vec<bool> = n.flipflops.iter().map(|f| v[nets.of(f.d)]).collect();
        if next == ffs {
            break;
        }
        ffs = next;
    }
    ffs
}

/// Cycle-based zero-delay reference simulation.
pub fn simulate_cycles(n: &Netlist, inputs: &[Vec<bool>], init: &[bool]) -> Vec<Vec<bool>> {
    let order = n.topo_order().expect("acyclic netlist");
    let nets = Nets { ni: n.inputs.len(), ng: n.gates.len() };
    let mut ffs = init.to_vec();
    let mut out = Vec::with_capacity(inputs.len());
    for pis in inputs {
        let v = settle(n, &order, pis, &ffs);
        out.push(n.outputs.iter().map(|&o| v[nets.of(o)]).collect());
        ffs = n.flipflops.iter().map(|f| v[nets.of(f.d)]).collect();
    }
    out
}

pub fn simulate(n: &Netlist, inputs: &[Vec<bool>], cfg: &TimingConfig, init: &[bool]) -> Result<SimTrace, SimError> {
    for (k, v) in inputs.iter().enumerate() {
        if v.len() != n.inputs.len() {
            return Err(SimError::Width { cycle: k, got: v.len(), want: n.inputs.len() });
        }
    }
    if init.len() != n.flipflops.len() {
        return Err(SimError::Signature(format!("{} initial values for {} flip-flops", init.len(), n.flipflops.len())));
    }
    let mut trace = SimTrace { inputs: inputs.to_vec(), ..Default::default() };
    let cycles = inputs.len();
    if cycles == 0 {
        return Ok(trace);
    }
    let order = n.topo_order().expect("acyclic netlist");
    let nets = Nets { ni: n.inputs.len(), ng: n.gates.len() };
    let nn = nets.ni + nets.ng + n.flipflops.len();
    let mut val = settle(n, &order, &inputs[0], init);

    let mut fanout: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nn];
    for (g, gate) in n.gates.iter().enumerate() {
        for (p, &s) in gate.inputs.iter().enumerate() {
            fanout[nets.of(s)].push((g, p));
        }
    }
    // Capture points watched for setup/hold: (net, name).
    let mut watch: Vec<Vec<String>> = vec![Vec::new(); nn];
    for f in &n.flipflops {
        if !matches!(f.d, Signal::Input(_)) {
            watch[nets.of(f.d)].push(f.id.clone());
        }
    }
    for &o in &n.outputs {
        if !matches!(o, Signal::Input(_)) {
            watch[nets.of(o)].push(format!("out:{}", n.signal_name(o)));
        }
    }
    let ins: Vec<Vec<usize>> = n.gates.iter().map(|g| g.inputs.iter().map(|&s| nets.of(s)).collect()).collect();
    let delays: Vec<Vec<f64>> = (0..n.gates.len())
        .map(|g| (0..n.gates[g].inputs.len()).map(|p| n.arc_delay(g, p)).collect())
        .collect();

    let t = cfg.period;
    let end = cycles as f64 * t;
    // Heap entries: (time, seq, net, value). Gate events may be cancelled.
    let mut heap: BinaryHeap<Reverse<(Time, u64, usize, bool)>> = BinaryHeap::new();
    let mut pending: Vec<VecDeque<(f64, u64, bool)>> = vec![VecDeque::new(); n.gates.len()];
    let mut seq = 0u64;
    let mut next_edge = 1usize;
    let mut buf = Vec::new();

    loop {
        let edge_time = next_edge as f64 * t;
        let head = heap.peek().map(|Reverse((tm, ..))| tm.0);
        // Edges go before events at the same instant.
        if next_edge <= cycles && head.map_or(true, |h| edge_time <= h + TIME_EPS) {
            trace.outputs.push(n.outputs.iter().map(|&o| val[nets.of(o)]).collect());
            if next_edge < cycles {
                for (f, ff) in n.flipflops.iter().enumerate() {
                    let d = val[nets.of(ff.d)];
                    seq += 1;
                    heap.push(Reverse((Time(edge_time + cfg.t_cq), seq, nets.ni + nets.ng + f, d)));
                }
                for (i, &b) in inputs[next_edge].iter().enumerate() {
                    seq += 1;
                    heap.push(Reverse((Time(edge_time), seq, i, b)));
                }
            }
            next_edge += 1;
            continue;
        }
        let Some(Reverse((Time(now), id, net, v))) = heap.pop() else { break };
        if now > end + TIME_EPS {
            break;
        }
        if net >= nets.ni && net < nets.ni + nets.ng {
            let g = net - nets.ni;
            match pending[g].front() {
                Some(&(_, s, _)) if s == id => {
                    pending[g].pop_front();
                }
                _ => continue,
            }
        }
        if val[net] == v {
            continue;
        }
        val[net] = v;
        if !watch[net].is_empty() {
            check_change(&watch[net], now, cfg, cycles, &mut trace.violations);
        }
        for &(g, p) in &fanout[net] {
            buf.clear();
            buf.extend(ins[g].iter().map(|&i| val[i]));
            let out = n.gates[g].kind.eval(&buf);
            let at = now + delays[g][p];
            let q = &mut pending[g];
            while q.back().map_or(false, |&(tm, ..)| tm >= at - TIME_EPS) {
                q.pop_back();
            }
            let current = q.back().map_or(val[nets.ni + g], |&(.., b)| b);
            if current != out {
                seq += 1;
                q.push_back((at, seq, out));
                heap.push(Reverse((Time(at), seq, nets.ni + g, out)));
            }
        }
    }
    while trace.outputs.len() < cycles {
        trace.outputs.push(n.outputs.iter().map(|&o| val[nets.of(o)]).collect());
    }
    Ok(trace)
}

/// Logs a change on a watched net that falls inside a setup or hold
/// window of a sampling edge.
fn check_change(names: &[String], now: f64, cfg: &TimingConfig, cycles: usize, log: &mut Vec<TimingViolation>) {
    let t = cfg.period;
    let k = (now / t + TIME_EPS).floor();
    let prev = k * t;
    let next = prev + t;
    let kp = k as usize;
    if kp >= 1 && kp <= cycles && now - prev < cfg.t_h - TIME_EPS {
        for c in names {
            log.push(TimingViolation { cycle: kp, capture: c.clone(), kind: "hold".into(), slack: now - prev - cfg.t_h });
        }
    }
    if kp + 1 <= cycles && next - now < cfg.t_su - TIME_EPS {
        for c in names {
            log.push(TimingViolation { cycle: kp + 1, capture: c.clone(), kind: "setup".into(), slack: next - now - cfg.t_su });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub trial: usize,
    pub cycle: usize,
    pub output: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub first_divergence: Option<Divergence>,
    /// Violations in the second netlist from the warm-up cycle on.
    pub violations: Vec<TimingViolation>,
}

pub fn random_vectors(width: usize, cycles: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<bool>> {
    (0..cycles).map(|_| (0..width).map(|_| rng.gen()).collect()).collect()
}

/// Compares output traces of `a` and `b` on random stimuli from cycle
/// `warmup` on. Both start from their settled state under the first
/// vector of each trace.
pub fn equivalence_check(
    a: &Netlist,
    b: &Netlist,
    cfg: &TimingConfig,
    cycles: usize,
    trials: usize,
    seed: u64,
    warmup: usize,
) -> Result<EquivalenceReport, SimError> {
    if a.inputs.len() != b.inputs.len() || a.outputs.len() != b.outputs.len() {
        return Err(SimError::Signature(format!(
            "{}x{} vs {}x{}",
            a.inputs.len(),
            a.outputs.len(),
            b.inputs.len(),
            b.outputs.len()
        )));
    }
    let results: Vec<Result<(Option<Divergence>, Vec<TimingViolation>), SimError>> = std::thread::scope(|sc| {
        let handles: Vec<_> = (0..trials)
            .map(|trial| {
                sc.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
                    let vecs = random_vectors(a.inputs.len(), cycles, &mut rng);
                    let ta = simulate(a, &vecs, cfg, &settled_state(a, &vecs[0]))?;
                    let tb = simulate(b, &vecs, cfg, &settled_state(b, &vecs[0]))?;
                    let mut div = None;
                    'outer: for k in warmup..cycles {
                        for o in 0..a.outputs.len() {
                            if ta.outputs[k][o] != tb.outputs[k][o] {
                                div = Some(Divergence { trial, cycle: k, output: o });
                                break 'outer;
                            }
                        }
                    }
                    let viol = tb.violations.into_iter().filter(|v| v.cycle >= warmup).collect();
                    Ok((div, viol))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread")).collect()
    });
    let mut report = EquivalenceReport { equivalent: true, first_divergence: None, violations: Vec::new() };
    for r in results {
        let (div, viol) = r?;
        if report.first_divergence.is_none() {
            report.first_divergence = div;
        }
        report.violations.extend(viol);
    }
    report.equivalent = report.first_divergence.is_none() && report.violations.is_empty();
    Ok(report)
}
