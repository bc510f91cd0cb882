// SPDX-License-Identifier: Apache-2.0
//! Wave-pipelined path construction by retiming a candidate flip-flop and
//! removing it from the relevant nets.
//!
//! The model covers the combinational fan-in `L` of the flip-flop's D, the
//! fan-out `R` of its Q, and the gates reachable from `L` (the closure).
//! Per net it selects one of three cases through the retimed weight `w_r`
//! and the removal flag `y`:
//! pass-through (`w_r = 0`), kept flip-flop (`w_r = 1, y = 0`) and removed
//! flip-flop (`y = 1`), which promotes single-wave arrivals to two-wave.

use crate::config::TimingConfig;
use crate::error::MilpError;
use crate::milp::{self, Budget, Cmp, LinExpr, MilpModel, MilpSolution, Sense, Status};
use crate::netlist::{Netlist, Signal, Sink};
use crate::retiming::{apply_retiming, Net, RetimingAssignment, WeightGraph};
use crate::timing::{wave_arrivals, Path, WaveArrivals, NO_LATE};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Duration;

/// Arrival variables span `[-ARRIVAL_SPAN, ARRIVAL_SPAN]` clock periods.
const ARRIVAL_SPAN: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct RemovalRegion {
    pub ff: usize,
    pub left: BTreeSet<usize>,
    pub right: BTreeSet<usize>,
    pub closure: BTreeSet<usize>,
    /// Left/right halves whose merge must become two-wave.
    pub relevant: Vec<(Path, Path)>,
    /// Sampled halves that belong to no relevant pair.
    pub irrelevant: Vec<Path>,
    /// Interior nets of relevant merged paths, keyed by consumer pin.
    pub relevant_nets: BTreeSet<(usize, usize)>,
    pub relevant_gates: BTreeSet<usize>,
}

impl RemovalRegion {
    pub fn gates(&self) -> BTreeSet<usize> {
        self.left.iter().chain(&self.right).chain(&self.closure).copied().collect()
    }
    /// Gates whose lag, inserted delay and size the model controls.
    pub fn core(&self) -> BTreeSet<usize> {
        self.left.union(&self.right).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegionError {
    /// D must come from a gate and Q must feed only gates.
    Shape,
    /// Q reaches D combinationally.
    Loop,
    TooLarge(usize),
    /// The region touches a net already turned into a junction.
    Overlap,
    NoPairs,
}

fn comb_fanin(n: &Netlist, s: Signal, out: &mut BTreeSet<usize>) {
    let mut stack = vec![s];
    while let Some(s) = stack.pop() {
        if let Signal::Gate(g) = s {
            if out.insert(g) {
                stack.extend(n.gates[g].inputs.iter().copied());
            }
        }
    }
}

fn comb_fanout(fo: &crate::netlist::Fanouts, s: Signal, skip: &BTreeSet<usize>, out: &mut BTreeSet<usize>) {
    let mut stack = vec![s];
    while let Some(s) = stack.pop() {
        for &k in fo.of(s) {
            if let Sink::Pin(h, _) = k {
                if !skip.contains(&h) && out.insert(h) {
                    stack.push(Signal::Gate(h));
                }
            }
        }
    }
}

/// Interior nets (consumer pins) of the merged path, from the second arc
/// on. The first arc is fed by the launch and is not interior.
pub fn interior_nets(m: &Path) -> impl Iterator<Item = (usize, usize)> + '_ {
    m.arcs.iter().skip(1).copied()
}

pub fn build_region(
    n: &Netlist,
    ff: usize,
    pairs: &[(Path, Path)],
    sampled: &[Path],
    junctions: &HashSet<(usize, usize)>,
    cfg: &TimingConfig,
) -> Result<RemovalRegion, RegionError> {
    if pairs.is_empty() {
        return Err(RegionError::NoPairs);
    }
    let fo = n.fanouts();
    let q = Signal::Ff(ff);
    if !matches!(n.flipflops[ff].d, Signal::Gate(_)) || fo.of(q).iter().any(|s| !matches!(s, Sink::Pin(..))) {
        return Err(RegionError::Shape);
    }
    let mut left = BTreeSet::new();
    comb_fanin(n, n.flipflops[ff].d, &mut left);
    let mut right = BTreeSet::new();
    comb_fanout(&fo, q, &BTreeSet::new(), &mut right);
    if left.intersection(&right).next().is_some() {
        return Err(RegionError::Loop);
    }
    let core: BTreeSet<usize> = left.union(&right).copied().collect();
    let mut closure = BTreeSet::new();
    for &g in &left {
        comb_fanout(&fo, Signal::Gate(g), &core, &mut closure);
    }
    let size = core.len() + closure.len();
    if size > cfg.region_cap {
        return Err(RegionError::TooLarge(size));
    }
    for &(g, _) in junctions {
        if core.contains(&g) || closure.contains(&g) {
            return Err(RegionError::Overlap);
        }
    }
    let mut relevant_nets = BTreeSet::new();
    let mut relevant_gates = BTreeSet::new();
    let mut used: HashSet<&Path> = HashSet::new();
    for (l, r) in pairs {
        let m = Path::merge(l, r);
        relevant_nets.extend(interior_nets(&m));
        relevant_gates.extend(m.gates());
        used.insert(l);
        used.insert(r);
    }
    let irrelevant = sampled.iter().filter(|p| !used.contains(p)).cloned().collect();
    Ok(RemovalRegion {
        ff,
        left,
        right,
        closure,
        relevant: pairs.to_vec(),
        irrelevant,
        relevant_nets,
        relevant_gates,
    })
}

/// Arrival source of a net in the model.
#[derive(Clone, Debug)]
pub(crate) enum Src {
    /// (early, late) variables per wave class.
    Vars { e: [usize; 2], l: [usize; 2] },
    /// Fixed (early, late) per wave class; `None` when the class is absent.
    Const([Option<(f64, f64)>; 2]),
}

impl Src {
    pub(crate) fn from_wave(wa: &WaveArrivals, s: Signal) -> Src {
        let a = wa.at(s);
        let pick = |(e, l): (f64, f64)| (l > NO_LATE).then_some((e, l));
        Src::Const([pick(a[0]), pick(a[1])])
    }
}

/// Variable handles of a removal model.
#[derive(Clone, Debug)]
pub struct RemovalModel {
    pub model: MilpModel,
    pub lag: BTreeMap<usize, (usize, i64)>,
    pub y: BTreeMap<(usize, usize), usize>,
    pub xi: BTreeMap<usize, usize>,
    pub size: BTreeMap<usize, Vec<usize>>,
    pub arrival: BTreeMap<usize, ([usize; 2], [usize; 2])>,
}

/// Shared helper for arrival-window constraints.
pub(crate) struct TimingRows<'a> {
    pub cfg: &'a TimingConfig,
    pub m: f64,
}

impl TimingRows<'_> {
    /// Capture checks at the driver of a flip-flop or output, relaxed by
    /// `guard`.
    pub(crate) fn capture(&self, model: &mut MilpModel, name: &str, src: &Src, guard: &LinExpr) -> Result<(), MilpError> {
        let cfg = self.cfg;
        let limits = [(cfg.t_h, cfg.period - cfg.t_su), cfg.model_band()];
        match src {
            Src::Vars { e, l } => {
                for c in 0..2 {
                    model.add_relaxed(&format!("{name}_late{c}"), &LinExpr::var(l[c]), Cmp::Le, limits[c].1, guard, self.m)?;
                    model.add_relaxed(&format!("{name}_early{c}"), &LinExpr::var(e[c]), Cmp::Ge, limits[c].0, guard, self.m)?;
                }
            }
            Src::Const(k) => {
                let bad = (0..2).any(|c| match k[c] {
                    Some((e, l)) => e < limits[c].0 - 1e-9 || l > limits[c].1 + 1e-9,
                    None => false,
                });
                if bad && !guard.is_constant() {
                    // The guarded case must stay off.
                    model.add_expr(&format!("{name}_off"), guard, Cmp::Ge, &LinExpr::constant(1.0));
                }
            }
        }
        Ok(())
    }

    /// Propagation from `src` through an arc of delay `d` into the class
    /// variables of the consumer, optionally promoting class 1 to class 2.
    pub(crate) fn propagate(
        &self,
        model: &mut MilpModel,
        name: &str,
        src: &Src,
        d: &LinExpr,
        dst: ([usize; 2], [usize; 2]),
        promote: bool,
        guard: &LinExpr,
    ) -> Result<(), MilpError> {
        let (de, dl) = dst;
        let classes: &[(usize, usize)] = if promote { &[(0, 1)] } else { &[(0, 0), (1, 1)] };
        for &(cs, cd) in classes {
            match src {
                Src::Vars { e, l } => {
                    // l_dst - l_src - d >= 0 ; e_dst - e_src - d <= 0
                    let late = LinExpr::var(dl[cd]).sub(&LinExpr::var(l[cs])).sub(d);
                    model.add_relaxed(&format!("{name}_l{cd}"), &late, Cmp::Ge, 0.0, guard, self.m)?;
                    let early = LinExpr::var(de[cd]).sub(&LinExpr::var(e[cs])).sub(d);
                    model.add_relaxed(&format!("{name}_e{cd}"), &early, Cmp::Le, 0.0, guard, self.m)?;
                }
                Src::Const(k) => {
                    if let Some((e, l)) = k[cs] {
                        let late = LinExpr::var(dl[cd]).sub(d);
                        model.add_relaxed(&format!("{name}_l{cd}"), &late, Cmp::Ge, l, guard, self.m)?;
                        let early = LinExpr::var(de[cd]).sub(d);
                        model.add_relaxed(&format!("{name}_e{cd}"), &early, Cmp::Le, e, guard, self.m)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Re-seeding behind a kept flip-flop: class 1 from `t_cq`.
    pub(crate) fn reseed(&self, model: &mut MilpModel, name: &str, d: &LinExpr, dst: ([usize; 2], [usize; 2]), guard: &LinExpr) -> Result<(), MilpError> {
        let t_cq = self.cfg.t_cq;
        let src = Src::Const([Some((t_cq, t_cq)), None]);
        self.propagate(model, name, &src, d, dst, false, guard)
    }

    /// A removed flip-flop must not see a two-wave arrival at its input.
    pub(crate) fn no_second_wave(&self, model: &mut MilpModel, name: &str, src: &Src, guard: &LinExpr) -> Result<(), MilpError> {
        match src {
            Src::Vars { l, .. } => model.add_relaxed(name, &LinExpr::var(l[1]), Cmp::Le, 0.0, guard, self.m),
            Src::Const(k) => {
                if k[1].is_some() {
                    model.add_expr(name, guard, Cmp::Ge, &LinExpr::constant(1.0));
                }
                Ok(())
            }
        }
    }
}

pub(crate) fn arrival_vars(model: &mut MilpModel, n: &Netlist, g: usize, cfg: &TimingConfig) -> ([usize; 2], [usize; 2]) {
    let b = ARRIVAL_SPAN * cfg.period;
    let id = &n.gates[g].id;
    let v = |m: &mut MilpModel, s: &str| m.continuous(format!("{s}_{id}"), -b, b);
    let e = [v(model, "e1"), v(model, "e2")];
    let l = [v(model, "l1"), v(model, "l2")];
    (e, l)
}

/// Size-selection binaries for a gate, one per library row.
pub(crate) fn size_vars(model: &mut MilpModel, n: &Netlist, g: usize) -> Vec<usize> {
    let gate = &n.gates[g];
    let levels = n.library.levels(gate.kind);
    let vars: Vec<usize> = (0..levels).map(|k| model.binary(format!("s{k}_{}", gate.id))).collect();
    model.add_con(format!("one_size_{}", gate.id), vars.iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, 1.0);
    vars
}

/// Arc delay as an expression over inserted delay and size variables.
pub(crate) fn delay_expr(n: &Netlist, g: usize, p: usize, xi: Option<usize>, size: Option<&Vec<usize>>) -> LinExpr {
    let gate = &n.gates[g];
    let mut d = match size {
        Some(vars) => LinExpr {
            constant: 0.0,
            terms: vars
                .iter()
                .enumerate()
                .map(|(k, &v)| (v, n.library.pin_delays(&gate.id, gate.kind, gate.inputs.len(), k)[p]))
                .collect(),
        },
        None => LinExpr::constant(gate.pin_delays[p]),
    };
    match xi {
        Some(v) => d = d.plus_var(v, 1.0),
        None => d = d.plus(gate.xi),
    }
    d
}

/// Objective term rewarding slower size choices: `Σ_k s_k Σ_p d_k(p)`.
pub(crate) fn size_reward(n: &Netlist, g: usize, vars: &[usize]) -> Vec<(usize, f64)> {
    let gate = &n.gates[g];
    vars.iter()
        .enumerate()
        .map(|(k, &v)| (v, n.library.pin_delays(&gate.id, gate.kind, gate.inputs.len(), k).iter().sum()))
        .collect()
}

/// Options separating plain removal from the leftward retiming pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemovalOptions {
    /// Force `y = 0` everywhere and reward leftward moves.
    pub leftward: bool,
}

pub fn build_removal_model(n: &Netlist, region: &RemovalRegion, junctions: &HashSet<(usize, usize)>, cfg: &TimingConfig) -> Result<RemovalModel, MilpError> {
    build_model(n, region, junctions, cfg, RemovalOptions { leftward: false })
}

pub fn build_model(
    n: &Netlist,
    region: &RemovalRegion,
    junctions: &HashSet<(usize, usize)>,
    cfg: &TimingConfig,
    opts: RemovalOptions,
) -> Result<RemovalModel, MilpError> {
    let wa = wave_arrivals(n, junctions, cfg.t_cq).expect("acyclic netlist");
    let wg = WeightGraph::build(n).expect("no flip-flop loops");
    let all = region.gates();
    let core = region.core();
    let nets: Vec<Net> = wg
        .nets
        .iter()
        .filter(|e| {
            let sink_in = matches!(e.sink, Sink::Pin(g, _) if all.contains(&g));
            let src_in = matches!(e.src, Signal::Gate(u) if all.contains(&u));
            sink_in || src_in
        })
        .copied()
        .collect();

    // Lag eligibility.
    let mut eligible: BTreeSet<usize> = core.clone();
    for e in &nets {
        if let Sink::Pin(g, _) = e.sink {
            if matches!(e.src, Signal::Input(_)) {
                eligible.remove(&g);
            }
            if region.left.contains(&g) && e.w >= 1 {
                eligible.remove(&g);
            }
        }
        if let Signal::Gate(u) = e.src {
            let inside = match e.sink {
                Sink::Pin(h, _) => {
                    if region.left.contains(&u) {
                        core.contains(&h)
                    } else {
                        region.right.contains(&h)
                    }
                }
                _ => false,
            };
            if !inside {
                eligible.remove(&u);
            }
        }
    }

    let mut rm = RemovalModel {
        model: MilpModel::default(),
        lag: BTreeMap::new(),
        y: BTreeMap::new(),
        xi: BTreeMap::new(),
        size: BTreeMap::new(),
        arrival: BTreeMap::new(),
    };
    let model = &mut rm.model;
    for &g in &eligible {
        let v = model.binary(format!("r_{}", n.gates[g].id));
        let sign = if region.left.contains(&g) { 1 } else { -1 };
        rm.lag.insert(g, (v, sign));
    }
    for &g in &all {
        rm.arrival.insert(g, arrival_vars(model, n, g, cfg));
    }
    for &g in &core {
        rm.xi.insert(g, model.continuous(format!("xi_{}", n.gates[g].id), 0.0, cfg.xi_max));
        if region.relevant_gates.contains(&g) && n.library.levels(n.gates[g].kind) > 1 {
            let s = size_vars(model, n, g);
            rm.size.insert(g, s);
        }
    }
    let lag_expr = |lag: &BTreeMap<usize, (usize, i64)>, g: Option<usize>| -> LinExpr {
        match g.and_then(|g| lag.get(&g)) {
            Some(&(v, s)) => LinExpr { constant: 0.0, terms: vec![(v, s as f64)] },
            None => LinExpr::constant(0.0),
        }
    };
    let rows = TimingRows { cfg, m: cfg.big_m };
    let one = LinExpr::constant(1.0);

    for e in &nets {
        let src_gate = match e.src {
            Signal::Gate(u) => Some(u),
            _ => None,
        };
        let sink_gate = match e.sink {
            Sink::Pin(g, _) => Some(g),
            _ => None,
        };
        let wr = LinExpr::constant(e.w as f64)
            .add(&lag_expr(&rm.lag, sink_gate))
            .sub(&lag_expr(&rm.lag, src_gate));
        let tag = format!(
            "{}_{}",
            n.signal_name(e.src),
            match e.sink {
                Sink::Pin(g, p) => format!("{}_{}", n.gates[g].id, p),
                Sink::Output(o) => format!("out{o}"),
                Sink::FfD(f) => n.flipflops[f].id.clone(),
            }
        );
        if !wr.is_constant() {
            model.add_expr(&format!("nonneg_{tag}"), &wr, Cmp::Ge, &LinExpr::constant(0.0));
            model.add_expr(&format!("single_{tag}"), &wr, Cmp::Le, &one);
        }
        let src = match src_gate {
            Some(u) if all.contains(&u) => {
                let (ev, lv) = rm.arrival[&u];
                Src::Vars { e: ev, l: lv }
            }
            _ => Src::from_wave(&wa, e.src),
        };
        let Some(g) = sink_gate.filter(|g| all.contains(g)) else {
            // Consumer outside the region: weight is fixed at >= 1 or the
            // net ends at an output; either way `u` is a capture point.
            rows.capture(model, &format!("cap_{tag}"), &src, &LinExpr::constant(0.0))?;
            continue;
        };
        let Sink::Pin(_, p) = e.sink else { unreachable!() };
        let y = if region.relevant_nets.contains(&(g, p)) && !opts.leftward {
            let v = model.binary(format!("y_{tag}"));
            rm.y.insert((g, p), v);
            model.add_expr(&format!("clear_{tag}"), &wr, Cmp::Eq, &LinExpr::var(v));
            Some(v)
        } else {
            None
        };
        let d = delay_expr(n, g, p, rm.xi.get(&g).copied(), rm.size.get(&g));
        let dst = rm.arrival[&g];
        let can_zero = !wr.is_constant() || wr.constant == 0.0;
        let can_ff = !wr.is_constant() || wr.constant >= 1.0;
        // Pass-through.
        if can_zero {
            rows.propagate(model, &format!("pass_{tag}"), &src, &d, dst, false, &wr)?;
        }
        // Kept flip-flop.
        if can_ff {
            let guard = match (wr.is_constant(), y) {
                (true, Some(v)) => LinExpr::var(v),
                (true, None) => LinExpr::constant(0.0),
                (false, Some(v)) => one.sub(&wr).plus_var(v, 1.0),
                (false, None) => one.sub(&wr),
            };
            rows.reseed(model, &format!("kept_{tag}"), &d, dst, &guard)?;
            rows.capture(model, &format!("kcap_{tag}"), &src, &guard)?;
        }
        // Removed flip-flop.
        if let Some(v) = y {
            let guard = one.sub(&LinExpr::var(v));
            rows.propagate(model, &format!("wave_{tag}"), &src, &d, dst, true, &guard)?;
            rows.no_second_wave(model, &format!("triple_{tag}"), &src, &guard)?;
        }
    }

    // Objective.
    let mut obj: Vec<(usize, f64)> = Vec::new();
    for &v in rm.xi.values() {
        obj.push((v, cfg.alpha));
    }
    for (&g, vars) in &rm.size {
        for (v, d) in size_reward(n, g, vars) {
            obj.push((v, -cfg.beta * d));
        }
    }
    let out_nets = |g: usize| wg.nets.iter().filter(|e| e.src == Signal::Gate(g)).count() as f64;
    for (&g, &(v, s)) in &rm.lag {
        let delta = n.gates[g].inputs.len() as f64 - out_nets(g);
        let mut c = cfg.gamma * s as f64 * delta;
        if opts.leftward && s > 0 {
            c -= 1.0;
        }
        obj.push((v, c));
    }
    rm.model.set_objective(Sense::Minimize, obj);
    Ok(rm)
}

pub fn solve_model(rm: &RemovalModel, cfg: &TimingConfig) -> Result<MilpSolution, MilpError> {
    milp::solve(
        &rm.model,
        Budget {
            node_limit: cfg.node_limit,
            time_limit: Duration::from_secs(20),
            stall_limit: (cfg.stall_limit > 0).then_some(cfg.stall_limit),
        },
    )
}

/// Netlist after a removal solution, with the new junction pins.
#[derive(Clone, Debug)]
pub struct Applied {
    pub netlist: Netlist,
    /// Junctions by (gate name, pin).
    pub junctions: Vec<(String, usize)>,
    pub lags: RetimingAssignment,
    pub added_ffs: i64,
    pub inserted_delay: f64,
}

/// Applies lags, drops the flip-flops on nets with `y = 1` and sets the
/// chosen delays and sizes.
pub fn apply_removal_solution(n: &Netlist, rm: &RemovalModel, sol: &MilpSolution) -> Option<Applied> {
    if !sol.has_point() {
        return None;
    }
    let mut r = vec![0i64; n.gates.len()];
    for (&g, &(v, s)) in &rm.lag {
        if sol.is_one(v) {
            r[g] = s;
        }
    }
    let lags = RetimingAssignment::from_vec(n, &r);
    let mut out = apply_retiming(n, &lags).ok()?;
    let mut junctions = Vec::new();
    for (&(g, p), &v) in &rm.y {
        if sol.is_one(v) {
            let Signal::Ff(f) = out.gates[g].inputs[p] else {
                log::warn!("removed net on {} has no flip-flop", n.gates[g].id);
                return None;
            };
            out.gates[g].inputs[p] = out.flipflops[f].d;
            junctions.push((n.gates[g].id.clone(), p));
        }
    }
    out.drop_dead_ffs();
    let mut inserted = 0.0;
    for (&g, &v) in &rm.xi {
        if let Some(s) = rm.size.get(&g) {
            let level = s.iter().position(|&b| sol.is_one(b)).unwrap_or(out.library.default_size);
            out.resize(g, level);
        }
        let xi = (sol.value(v) * 1e6).round() / 1e6;
        out.gates[g].xi = xi.max(0.0);
        inserted += out.gates[g].xi;
    }
    let added = out.flipflops.iter().filter(|f| f.is_retimed).count() as i64
        - n.flipflops.iter().filter(|f| f.is_retimed).count() as i64;
    Some(Applied {
        netlist: out,
        junctions,
        lags,
        added_ffs: added.max(0),
        inserted_delay: inserted,
    })
}

/// Outcome of a removal attempt at one flip-flop.
#[derive(Clone, Debug)]
pub enum Attempt {
    Done(Applied),
    Infeasible,
    Skipped(String),
}

pub fn try_removal(
    n: &Netlist,
    ff: usize,
    pairs: &[(Path, Path)],
    sampled: &[Path],
    junctions: &HashSet<(usize, usize)>,
    cfg: &TimingConfig,
) -> Attempt {
    let region = match build_region(n, ff, pairs, sampled, junctions, cfg) {
        Ok(r) => r,
        Err(e) => return Attempt::Skipped(format!("{e:?}")),
    };
    let rm = match build_removal_model(n, &region, junctions, cfg) {
        Ok(m) => m,
        Err(e) => return Attempt::Skipped(e.to_string()),
    };
    let sol = match solve_model(&rm, cfg) {
        Ok(s) => s,
        Err(e) => return Attempt::Skipped(e.to_string()),
    };
    log::debug!(
        "removal at {}: {:?} after {} nodes ({} vars, {} rows)",
        n.flipflops[ff].id,
        sol.status,
        sol.nodes,
        rm.model.vars.len(),
        rm.model.cons.len()
    );
    if sol.status == Status::Infeasible || !sol.has_point() {
        return Attempt::Infeasible;
    }
    match apply_removal_solution(n, &rm, &sol) {
        Some(a) if !a.junctions.is_empty() => Attempt::Done(a),
        _ => Attempt::Infeasible,
    }
}
