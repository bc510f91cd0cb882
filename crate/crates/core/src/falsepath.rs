// SPDX-License-Identifier: Apache-2.0
//! Static sensitization of combinational paths.

use crate::config::TimingConfig;
use crate::error::FalsePathError;
use crate::netlist::{GateKind, Netlist, Signal, Sink};
use crate::sat::{self, Cnf, Lit, SatResult};
use crate::timing::{launch_offset, path_delay, sample_paths, Path, Side};
use std::collections::{BTreeMap, HashMap};

pub const DECISION_LIMIT: u64 = 1_000_000;

/// Side-input requirements of a path plus the clauses describing the logic
/// cones that compute them.
#[derive(Clone, Debug)]
pub struct SensitizationCondition {
    /// (net, required value) per side input, in path order.
    pub side: Vec<(Signal, bool)>,
    pub cnf: Cnf,
    /// SAT variable of every net in the cones.
    pub vars: BTreeMap<Signal, usize>,
    /// The path crosses an XOR/XNOR gate, whose side inputs are left free.
    pub has_xor: bool,
}

impl SensitizationCondition {
    pub fn to_dimacs(&self) -> String {
        self.cnf.to_dimacs()
    }
    /// Free variables: primary inputs and flip-flop outputs in the cones.
    pub fn free_vars(&self) -> Vec<(Signal, usize)> {
        self.vars
            .iter()
            .filter(|(s, _)| !matches!(s, Signal::Gate(_)))
            .map(|(&s, &v)| (s, v))
            .collect()
    }
}

/// Side-input literals alone, without cone clauses.
pub fn side_inputs(n: &Netlist, p: &Path) -> (Vec<(Signal, bool)>, bool) {
    let mut side = Vec::new();
    let mut xor = false;
    for &(g, pin) in &p.arcs {
        let gate = &n.gates[g];
        if matches!(gate.kind, GateKind::Xor | GateKind::Xnor) {
            xor = true;
        }
        if let Some(c) = gate.kind.controlling() {
            for (q, &s) in gate.inputs.iter().enumerate() {
                if q != pin {
                    side.push((s, !c));
                }
            }
        }
    }
    (side, xor)
}

pub fn build_condition(n: &Netlist, p: &Path) -> Result<SensitizationCondition, FalsePathError> {
    if !p.is_well_formed(n) {
        return Err(FalsePathError::Sequential(n.signal_name(p.launch).to_string()));
    }
    let (side, has_xor) = side_inputs(n, p);
    let mut cnf = Cnf::default();
    let mut vars = BTreeMap::new();
    let mut stack: Vec<Signal> = side.iter().map(|s| s.0).collect();
    while let Some(s) = stack.pop() {
        if vars.contains_key(&s) {
            continue;
        }
        vars.insert(s, cnf.new_var());
        if let Signal::Gate(g) = s {
            stack.extend(n.gates[g].inputs.iter().copied());
        }
    }
    for (&s, &out) in &vars {
        let Signal::Gate(g) = s else { continue };
        let gate = &n.gates[g];
        let ins: Vec<usize> = gate.inputs.iter().map(|i| vars[i]).collect();
        encode_gate(&mut cnf, gate.kind, out, &ins);
    }
    for &(s, v) in &side {
        cnf.add(vec![Lit::new(vars[&s], v)]);
    }
    Ok(SensitizationCondition {
        side,
        cnf,
        vars,
        has_xor,
    })
}

fn encode_gate(cnf: &mut Cnf, kind: GateKind, out: usize, ins: &[usize]) {
    let o = |pos| Lit::new(out, pos);
    let x = |i: usize, pos| Lit::new(ins[i], pos);
    match kind {
        GateKind::And | GateKind::Nand | GateKind::Or | GateKind::Nor => {
            // Normalize to out' = AND(lits) with polarity flips.
            let (in_pos, out_pos) = match kind {
                GateKind::And => (true, true),
                GateKind::Nand => (true, false),
                GateKind::Or => (false, false),
                _ => (false, true),
            };
            let mut big = vec![o(out_pos)];
            for i in 0..ins.len() {
                cnf.add(vec![o(!out_pos), x(i, in_pos)]);
                big.push(x(i, !in_pos));
            }
            cnf.add(big);
        }
        GateKind::Not | GateKind::Buf => {
            let same = kind == GateKind::Buf;
            cnf.add(vec![o(true), x(0, !same)]);
            cnf.add(vec![o(false), x(0, same)]);
        }
        GateKind::Xor | GateKind::Xnor => {
            // Chain of two-input XORs through fresh variables.
            let mut acc = ins[0];
            for &b in &ins[1..] {
                let t = cnf.new_var();
                xor2(cnf, t, acc, b);
                acc = t;
            }
            let same = kind == GateKind::Xor;
            cnf.add(vec![o(true), Lit::new(acc, !same)]);
            cnf.add(vec![o(false), Lit::new(acc, same)]);
        }
    }
}

fn xor2(cnf: &mut Cnf, t: usize, a: usize, b: usize) {
    let l = Lit::new;
    cnf.add(vec![l(t, false), l(a, true), l(b, true)]);
    cnf.add(vec![l(t, false), l(a, false), l(b, false)]);
    cnf.add(vec![l(t, true), l(a, false), l(b, true)]);
    cnf.add(vec![l(t, true), l(a, true), l(b, false)]);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

/// Decides static sensitizability. Direct literal conflicts short-cut the
/// SAT call.
pub fn path_truth(n: &Netlist, p: &Path) -> Result<Truth, FalsePathError> {
    let (side, _) = side_inputs(n, p);
    let mut req: HashMap<Signal, bool> = HashMap::new();
    for (s, v) in side {
        if *req.entry(s).or_insert(v) != v {
            return Ok(Truth::False);
        }
    }
    let cond = build_condition(n, p)?;
    Ok(match sat::solve(&cond.cnf, DECISION_LIMIT) {
        SatResult::Sat(_) => Truth::True,
        SatResult::Unsat => Truth::False,
        SatResult::Unknown => Truth::Unknown,
    })
}

/// True unless the path is proven statically unsensitizable. An unknown
/// verdict counts as true.
pub fn is_true_path(n: &Netlist, p: &Path) -> Result<bool, FalsePathError> {
    Ok(path_truth(n, p)? != Truth::False)
}

/// Left/right path pairs through a flip-flop that can become two-wave
/// paths once it turns into a wire.
#[derive(Clone, Debug, Default)]
pub struct PairCheck {
    pub count: usize,
    pub pairs: Vec<(Path, Path)>,
    /// Merged pairs touching an XOR/XNOR gate.
    pub xor_flagged: usize,
}

/// Finds merged paths through `ff` that are false in the single-period
/// view of the merged path. Both halves are individually true.
pub fn check_wp_false_paths(n: &Netlist, ff: usize, cfg: &TimingConfig, seed: u64) -> PairCheck {
    wp_pairs(n, ff, cfg, seed, false)
}

/// Same as [`check_wp_false_paths`] for merged paths that stay true.
pub fn check_wp_true_paths(n: &Netlist, ff: usize, cfg: &TimingConfig, seed: u64) -> PairCheck {
    wp_pairs(n, ff, cfg, seed, true)
}

/// Upper bound on how far a path can be stretched by inserted delay and
/// slower cell sizes.
pub fn stretch_bound(n: &Netlist, p: &Path, cfg: &TimingConfig) -> f64 {
    p.arcs
        .iter()
        .map(|&(g, pin)| {
            let gate = &n.gates[g];
            let levels = n.library.levels(gate.kind);
            let slow = n.library.pin_delays(&gate.id, gate.kind, gate.inputs.len(), levels - 1)[pin];
            (cfg.xi_max - gate.xi).max(0.0) + (slow - gate.pin_delays[pin]).max(0.0)
        })
        .sum()
}

fn wp_pairs(n: &Netlist, ff: usize, cfg: &TimingConfig, seed: u64, want_true: bool) -> PairCheck {
    let (lo, hi) = cfg.wp_band();
    let me = Signal::Ff(ff);
    let left: Vec<Path> = sample_paths(n, ff, Side::Fanin, cfg.path_sample_limit, seed)
        .into_iter()
        .filter(|p| p.launch != me && is_true_path(n, p).unwrap_or(false))
        .collect();
    let right: Vec<Path> = sample_paths(n, ff, Side::Fanout, cfg.path_sample_limit, seed.wrapping_add(1))
        .into_iter()
        .filter(|p| p.end != Sink::FfD(ff) && is_true_path(n, p).unwrap_or(false))
        .collect();
    let mut view = n.clone();
    view.bypass_ff(ff);
    let mut out = PairCheck::default();
    for l in &left {
        let dl = launch_offset(l.launch, cfg.t_cq) + path_delay(n, l);
        let sl = stretch_bound(n, l, cfg);
        for r in &right {
            let d = dl + path_delay(n, r);
            if d > hi || d + sl + stretch_bound(n, r, cfg) < lo {
                continue;
            }
            let m = Path::merge(l, r);
            let truth = match path_truth(&view, &m) {
                Ok(t) => t,
                Err(_) => continue,
            };
            let keep = if want_true {
                truth != Truth::False
            } else {
                truth == Truth::False
            };
            if keep {
                if side_inputs(&view, &m).1 {
                    out.xor_flagged += 1;
                }
                out.pairs.push((l.clone(), r.clone()));
            }
        }
    }
    out.count = out.pairs.len();
    out
}
