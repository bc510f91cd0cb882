// SPDX-License-Identifier: Apache-2.0
//! Fallback construction by logic duplication.
//!
//! The gates of the relevant path halves are copied without the flip-flop
//! between them, so every path through the copies crosses a junction. Each
//! left copy may be anchored to its original gate (`p = 1`), which then
//! drives the copy's consumers. Copies that drive no kept capture are
//! pruned.

use crate::config::TimingConfig;
use crate::error::DuplicationError;
use crate::milp::{Budget, LinExpr, MilpModel, MilpSolution, Sense, Status};
use crate::netlist::{Gate, Netlist, Signal, Sink};
use crate::removal::{
    arrival_vars, build_model, build_region, delay_expr, size_reward, size_vars, solve_model, Applied, RemovalOptions, Src,
    TimingRows,
};
use crate::timing::{launch_offset, path_delay, path_delay_lookup, wave_arrivals, Path};
use crate::workflow::{junction_set, record_path, verify_timing, WpRecord};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Duration;

#[derive(Clone, Debug, PartialEq)]
pub struct DuplicationPlan {
    /// Flip-flops bypassed by the copies.
    pub roots: Vec<usize>,
    /// Gates copied on the D side of a root; these are the anchorable copies.
    pub left: BTreeSet<usize>,
    /// Gates copied on the Q side of a root.
    pub right: BTreeSet<usize>,
    /// Captures whose driver is redirected to its copy.
    pub captures: Vec<Sink>,
}

/// Where a copied pin reads from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Feed {
    /// A right copy, always present.
    Copy(usize),
    /// The left copy of the gate, or the original gate when anchored.
    Anchor(usize),
    Orig(Signal),
}

/// Source of pin `p` of the copy of `g`, and whether the pin is a
/// junction.
pub fn pin_feed(n: &Netlist, plan: &DuplicationPlan, g: usize, p: usize) -> (Feed, bool) {
    let s = n.gates[g].inputs[p];
    if plan.right.contains(&g) {
        if let Signal::Ff(f) = s {
            if plan.roots.contains(&f) {
                return match n.flipflops[f].d {
                    Signal::Gate(u) if plan.left.contains(&u) => (Feed::Anchor(u), true),
                    d => (Feed::Orig(d), true),
                };
            }
        }
        return match s {
            Signal::Gate(u) if plan.right.contains(&u) => (Feed::Copy(u), false),
            s => (Feed::Orig(s), false),
        };
    }
    match s {
        Signal::Gate(u) if plan.left.contains(&u) => (Feed::Anchor(u), false),
        s => (Feed::Orig(s), false),
    }
}

/// Collects the copy sets from relevant pairs, each a D-side half ending at
/// a root and a Q-side half starting at it.
pub fn plan_duplication(
    n: &Netlist,
    roots: &[usize],
    pairs: &[(Path, Path)],
    junctions: &HashSet<(usize, usize)>,
    cfg: &TimingConfig,
) -> Result<DuplicationPlan, DuplicationError> {
    let mut left = BTreeSet::new();
    let mut right = BTreeSet::new();
    let mut captures = BTreeSet::new();
    for (l, r) in pairs {
        let Sink::FfD(root) = l.end else { continue };
        if !roots.contains(&root) || r.launch != Signal::Ff(root) || r.arcs.is_empty() {
            continue;
        }
        if matches!(r.end, Sink::FfD(c) if roots.contains(&c)) {
            continue;
        }
        left.extend(l.gates());
        right.extend(r.gates());
        captures.insert(r.end);
    }
    if captures.is_empty() {
        return Err(DuplicationError::NoPairs);
    }
    if let Some(&g) = left.intersection(&right).next() {
        return Err(DuplicationError::Overlap(n.gates[g].id.clone()));
    }
    if let Some(&(g, _)) = junctions.iter().find(|(g, _)| left.contains(g) || right.contains(g)) {
        return Err(DuplicationError::Overlap(n.gates[g].id.clone()));
    }
    if left.len() + right.len() > cfg.region_cap {
        return Err(DuplicationError::TooLarge(cfg.region_cap));
    }
    Ok(DuplicationPlan {
        roots: roots.to_vec(),
        left,
        right,
        captures: captures.into_iter().collect(),
    })
}

#[derive(Clone, Debug)]
pub struct DuplicationModel {
    pub model: MilpModel,
    pub plan: DuplicationPlan,
    pub arrival: BTreeMap<usize, ([usize; 2], [usize; 2])>,
    pub xi: BTreeMap<usize, usize>,
    pub size: BTreeMap<usize, Vec<usize>>,
    /// Anchor binaries of left copies.
    pub anchor: BTreeMap<usize, usize>,
    /// Anchors fixed by the caller instead of decided by the solver.
    pub fixed: BTreeMap<usize, bool>,
    /// Objective constant contributed by fixed anchors.
    pub offset: f64,
}

impl DuplicationModel {
    pub fn anchored(&self, u: usize, sol: &MilpSolution) -> bool {
        match self.fixed.get(&u) {
            Some(&b) => b,
            None => self.anchor.get(&u).map_or(false, |&v| sol.is_one(v)),
        }
    }
}

/// Arrival, window and band constraints over the copies. With `fixed`,
/// the listed anchors become constants and their big-M rows collapse to
/// plain constraints or vanish.
pub fn build_duplication_model(
    n: &Netlist,
    plan: &DuplicationPlan,
    junctions: &HashSet<(usize, usize)>,
    cfg: &TimingConfig,
    fixed: Option<&BTreeMap<usize, bool>>,
) -> Result<DuplicationModel, DuplicationError> {
    let wa = wave_arrivals(n, junctions, cfg.t_cq).expect("acyclic netlist");
    let mut dm = DuplicationModel {
        model: MilpModel::default(),
        plan: plan.clone(),
        arrival: BTreeMap::new(),
        xi: BTreeMap::new(),
        size: BTreeMap::new(),
        anchor: BTreeMap::new(),
        fixed: fixed.cloned().unwrap_or_default(),
        offset: 0.0,
    };
    let copies: BTreeSet<usize> = plan.left.union(&plan.right).copied().collect();
    let model = &mut dm.model;
    for &g in &copies {
        dm.arrival.insert(g, arrival_vars(model, n, g, cfg));
        dm.xi.insert(g, model.continuous(format!("xi_{}", n.gates[g].id), 0.0, cfg.xi_max));
        if n.library.levels(n.gates[g].kind) > 1 {
            dm.size.insert(g, size_vars(model, n, g));
        }
    }
    for &u in &plan.left {
        if !dm.fixed.contains_key(&u) {
            dm.anchor.insert(u, model.binary(format!("p_{}", n.gates[u].id)));
        }
    }
    let p_expr = |u: usize| -> LinExpr {
        match dm.fixed.get(&u) {
            Some(&b) => LinExpr::constant(if b { 1.0 } else { 0.0 }),
            None => LinExpr::var(dm.anchor[&u]),
        }
    };
    let rows = TimingRows { cfg, m: cfg.big_m };
    let zero = LinExpr::constant(0.0);
    let one = LinExpr::constant(1.0);
    for &g in &copies {
        let id = n.gates[g].id.clone();
        let dst = dm.arrival[&g];
        for p in 0..n.gates[g].inputs.len() {
            let d = delay_expr(n, g, p, Some(dm.xi[&g]), dm.size.get(&g));
            let name = format!("{id}_{p}");
            let (feed, junction) = pin_feed(n, plan, g, p);
            let sources: Vec<(Src, LinExpr)> = match feed {
                Feed::Copy(u) => {
                    let (e, l) = dm.arrival[&u];
                    vec![(Src::Vars { e, l }, zero.clone())]
                }
                Feed::Anchor(u) => {
                    let (e, l) = dm.arrival[&u];
                    let pu = p_expr(u);
                    vec![
                        (Src::Vars { e, l }, pu.clone()),
                        (Src::from_wave(&wa, Signal::Gate(u)), one.sub(&pu)),
                    ]
                }
                Feed::Orig(s) => vec![(Src::from_wave(&wa, s), zero.clone())],
            };
            for (k, (src, guard)) in sources.iter().enumerate() {
                let tag = format!("{name}_{k}");
                if junction {
                    rows.no_second_wave(model, &format!("{tag}_nw"), src, guard)?;
                }
                rows.propagate(model, &tag, src, &d, dst, junction, guard)?;
            }
        }
    }
    for (k, &c) in plan.captures.iter().enumerate() {
        let Signal::Gate(g) = capture_driver(n, c) else { continue };
        let (e, l) = dm.arrival[&g];
        rows.capture(model, &format!("cap{k}"), &Src::Vars { e, l }, &zero)?;
    }
    let mut obj: Vec<(usize, f64)> = dm.xi.values().map(|&v| (v, cfg.alpha)).collect();
    for (&g, vars) in &dm.size {
        obj.extend(size_reward(n, g, vars).into_iter().map(|(v, c)| (v, -cfg.beta * c)));
    }
    obj.extend(dm.anchor.values().map(|&v| (v, -cfg.gamma)));
    dm.offset = -cfg.gamma * dm.fixed.values().filter(|&&b| b).count() as f64;
    dm.model.set_objective(Sense::Minimize, obj);
    Ok(dm)
}

fn capture_driver(n: &Netlist, c: Sink) -> Signal {
    match c {
        Sink::FfD(f) => n.flipflops[f].d,
        Sink::Output(o) => n.outputs[o],
        Sink::Pin(g, p) => n.gates[g].inputs[p],
    }
}

pub fn solve_duplication(dm: &DuplicationModel, cfg: &TimingConfig) -> Result<MilpSolution, DuplicationError> {
    let budget = Budget {
        node_limit: cfg.node_limit,
        time_limit: Duration::from_secs(20),
        stall_limit: (cfg.stall_limit > 0).then_some(cfg.stall_limit),
    };
    Ok(crate::milp::solve(&dm.model, budget)?)
}

/// Netlist after duplication.
#[derive(Clone, Debug)]
pub struct Duplicated {
    pub netlist: Netlist,
    /// Junctions by (copy name, pin).
    pub junctions: Vec<(String, usize)>,
    /// Surviving copies.
    pub duplicated: usize,
    pub anchored: usize,
    pub added_ffs: i64,
    pub inserted: f64,
}

/// Copies reachable backwards from the redirected captures.
pub fn live_copies(n: &Netlist, dm: &DuplicationModel, sol: &MilpSolution) -> BTreeSet<usize> {
    let plan = &dm.plan;
    let mut live = BTreeSet::new();
    let mut stack: Vec<usize> = plan
        .captures
        .iter()
        .filter_map(|&c| match capture_driver(n, c) {
            Signal::Gate(g) => Some(g),
            _ => None,
        })
        .collect();
    while let Some(g) = stack.pop() {
        if !live.insert(g) {
            continue;
        }
        for p in 0..n.gates[g].inputs.len() {
            match pin_feed(n, plan, g, p).0 {
                Feed::Copy(u) => stack.push(u),
                Feed::Anchor(u) if !dm.anchored(u, sol) => stack.push(u),
                _ => {}
            }
        }
    }
    live
}

/// Live copies ordered so every copy follows the copies it reads.
fn copy_order(n: &Netlist, dm: &DuplicationModel, sol: &MilpSolution, live: &BTreeSet<usize>) -> Vec<usize> {
    fn visit(n: &Netlist, dm: &DuplicationModel, sol: &MilpSolution, g: usize, seen: &mut BTreeSet<usize>, out: &mut Vec<usize>) {
        if !seen.insert(g) {
            return;
        }
        for p in 0..n.gates[g].inputs.len() {
            match pin_feed(n, &dm.plan, g, p).0 {
                Feed::Copy(u) => visit(n, dm, sol, u, seen, out),
                Feed::Anchor(u) if !dm.anchored(u, sol) => visit(n, dm, sol, u, seen, out),
                _ => {}
            }
        }
        out.push(g);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &g in live {
        visit(n, dm, sol, g, &mut seen, &mut out);
    }
    out
}

/// Instantiates the live copies with their chosen sizes and delays and
/// redirects the captures.
pub fn apply_duplication(n: &Netlist, dm: &DuplicationModel, sol: &MilpSolution) -> Option<Duplicated> {
    if !sol.has_point() {
        return None;
    }
    let live = live_copies(n, dm, sol);
    if live.is_empty() {
        return None;
    }
    let mut out = n.clone();
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut junctions = Vec::new();
    let mut inserted = 0.0;
    for g in copy_order(n, dm, sol, &live) {
        let orig = &n.gates[g];
        let inputs = (0..orig.inputs.len())
            .map(|p| {
                let (feed, junction) = pin_feed(n, &dm.plan, g, p);
                let s = match feed {
                    Feed::Copy(u) => Signal::Gate(map[&u]),
                    Feed::Anchor(u) if dm.anchored(u, sol) => Signal::Gate(u),
                    Feed::Anchor(u) => Signal::Gate(map[&u]),
                    Feed::Orig(s) => s,
                };
                (s, junction)
            })
            .collect::<Vec<_>>();
        let (size_level, pin_delays) = match dm.size.get(&g) {
            Some(vars) => {
                let k = vars.iter().position(|&b| sol.is_one(b)).unwrap_or(orig.size_level);
                (k, n.library.pin_delays(&orig.id, orig.kind, orig.inputs.len(), k))
            }
            None => (orig.size_level, orig.pin_delays.clone()),
        };
        let xi = ((sol.value(dm.xi[&g]) * 1e6).round() / 1e6).max(0.0);
        inserted += xi;
        let id = out.fresh_name(&format!("{}_dup", orig.id));
        for (p, &(_, j)) in inputs.iter().enumerate() {
            if j {
                junctions.push((id.clone(), p));
            }
        }
        map.insert(g, out.gates.len());
        out.gates.push(Gate {
            id,
            kind: orig.kind,
            inputs: inputs.into_iter().map(|x| x.0).collect(),
            pin_delays,
            size_level,
            xi,
        });
    }
    for &c in &dm.plan.captures {
        let Signal::Gate(g) = capture_driver(n, c) else { continue };
        let to = Signal::Gate(map[&g]);
        match c {
            Sink::FfD(f) => out.flipflops[f].d = to,
            Sink::Output(o) => out.outputs[o] = to,
            Sink::Pin(..) => {}
        }
    }
    let anchored = dm.plan.left.iter().filter(|&&u| dm.anchored(u, sol)).count();
    Some(Duplicated {
        netlist: out,
        junctions,
        duplicated: live.len(),
        anchored,
        added_ffs: 0,
        inserted,
    })
}

/// Retimes `ff` towards its D side with every flip-flop kept, so the
/// netlist stays single-period.
pub fn leftward_retime(
    n: &Netlist,
    ff: usize,
    pairs: &[(Path, Path)],
    junctions: &HashSet<(usize, usize)>,
    cfg: &TimingConfig,
) -> Result<Applied, DuplicationError> {
    let region = build_region(n, ff, pairs, &[], junctions, cfg).map_err(|e| DuplicationError::Retiming(format!("{e:?}")))?;
    let rm = build_model(n, &region, junctions, cfg, RemovalOptions { leftward: true })?;
    let sol = solve_model(&rm, cfg)?;
    if sol.status == Status::Infeasible || !sol.has_point() {
        return Err(DuplicationError::Retiming("infeasible".into()));
    }
    crate::removal::apply_removal_solution(n, &rm, &sol).ok_or_else(|| DuplicationError::Retiming("cannot apply lags".into()))
}

/// Solves and applies duplication on one netlist.
pub fn duplicate(
    n: &Netlist,
    roots: &[usize],
    pairs: &[(Path, Path)],
    junctions: &HashSet<(usize, usize)>,
    cfg: &TimingConfig,
) -> Result<Option<Duplicated>, DuplicationError> {
    let plan = plan_duplication(n, roots, pairs, junctions, cfg)?;
    let dm = build_duplication_model(n, &plan, junctions, cfg, None)?;
    let sol = solve_duplication(&dm, cfg)?;
    log::debug!(
        "duplication: {:?} after {} nodes ({} copies, {} rows)",
        sol.status,
        sol.nodes,
        plan.left.len() + plan.right.len(),
        dm.model.cons.len()
    );
    Ok(apply_duplication(n, &dm, &sol))
}

/// Leftward retiming followed by duplication, falling back to duplication
/// on the unretimed netlist. `recheck` finds relevant pairs at a flip-flop.
pub fn try_duplication(
    n: &Netlist,
    ff: usize,
    pairs: &[(Path, Path)],
    junctions: &[(String, usize)],
    cfg: &TimingConfig,
    recheck: &dyn Fn(&Netlist, usize) -> Vec<(Path, Path)>,
) -> Option<Duplicated> {
    let jset = junction_set(n, junctions);
    let mut bases: Vec<(Netlist, Vec<usize>, Vec<(Path, Path)>, i64)> = Vec::new();
    match leftward_retime(n, ff, pairs, &jset, cfg) {
        Ok(a) if a.lags.lags.values().any(|&v| v != 0) => {
            let id = &n.flipflops[ff].id;
            let roots: Vec<usize> = (0..a.netlist.flipflops.len())
                .filter(|&f| {
                    let fid = &a.netlist.flipflops[f].id;
                    fid == id || n.ff_index(fid).is_none()
                })
                .collect();
            let moved: Vec<(Path, Path)> = roots.iter().flat_map(|&r| recheck(&a.netlist, r)).collect();
            if !moved.is_empty() {
                bases.push((a.netlist, roots, moved, a.added_ffs));
            }
        }
        Ok(_) => {}
        Err(e) => log::debug!("leftward retiming at {}: {e}", n.flipflops[ff].id),
    }
    bases.push((n.clone(), vec![ff], pairs.to_vec(), 0));
    for (base, roots, pairs, added) in bases {
        let jset = junction_set(&base, junctions);
        match duplicate(&base, &roots, &pairs, &jset, cfg) {
            Ok(Some(mut d)) => {
                d.added_ffs = added;
                return Some(d);
            }
            Ok(None) => {}
            Err(e) => log::debug!("duplication at {}: {e}", n.flipflops[ff].id),
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub enum RepairStatus {
    Passed,
    /// Passed after this many repair steps.
    Repaired(usize),
    Abandoned(String),
}

/// Lookup-mode arrival of a record at its capture.
pub fn lookup_arrival(n: &Netlist, r: &WpRecord, cfg: &TimingConfig) -> Option<f64> {
    let p = record_path(n, r)?;
    Some(launch_offset(p.launch, cfg.t_cq) + path_delay_lookup(n, &p).0)
}

/// Records outside the gray band in lookup mode, with the signed excess
/// (positive when too late).
pub fn lookup_violations(n: &Netlist, records: &[WpRecord], cfg: &TimingConfig) -> Vec<(usize, f64)> {
    let (lo, hi) = cfg.wp_band();
    records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            let d = lookup_arrival(n, r, cfg)?;
            if d > hi {
                Some((i, d - hi))
            } else if d < lo {
                Some((i, d - lo))
            } else {
                None
            }
        })
        .collect()
}

/// Trim of the model band, lower end then upper end, that would bring
/// every record inside the gray band in lookup mode if lookup and typical
/// delays kept their current ratio.
pub fn lookup_trim(n: &Netlist, records: &[WpRecord], cfg: &TimingConfig) -> (f64, f64) {
    let (lo, hi) = cfg.wp_band();
    let mut trim = (0.0f64, 0.0f64);
    for r in records {
        let Some(p) = record_path(n, r) else { continue };
        let off = launch_offset(p.launch, cfg.t_cq);
        let typ = off + path_delay(n, &p);
        let look = off + path_delay_lookup(n, &p).0;
        if look <= 0.0 {
            continue;
        }
        let ratio = typ / look;
        trim.0 = trim.0.max(lo * ratio - lo);
        trim.1 = trim.1.max(hi - hi * ratio);
    }
    trim
}

fn fastest_level(n: &Netlist, g: usize) -> usize {
    let gate = &n.gates[g];
    (0..n.library.levels(gate.kind))
        .min_by(|&a, &b| {
            let s = |k| -> f64 { n.library.pin_delays(&gate.id, gate.kind, gate.inputs.len(), k).iter().sum() };
            s(a).total_cmp(&s(b))
        })
        .unwrap_or(gate.size_level)
}

/// One repair step on a violating path: remove inserted delay or upsize
/// when late, insert delay when early.
fn repair_step(n: &mut Netlist, path: &Path, excess: f64, cfg: &TimingConfig) -> bool {
    let need = excess.abs() + cfg.margin;
    if excess > 0.0 {
        if let Some(g) = path.gates().filter(|&g| n.gates[g].xi > 0.0).max_by(|&a, &b| n.gates[a].xi.total_cmp(&n.gates[b].xi)) {
            n.gates[g].xi = (n.gates[g].xi - need).max(0.0);
            return true;
        }
        let gain = |n: &Netlist, g: usize| -> f64 {
            let k = fastest_level(n, g);
            let gate = &n.gates[g];
            gate.pin_delays.iter().sum::<f64>() - n.library.pin_delays(&gate.id, gate.kind, gate.inputs.len(), k).iter().sum::<f64>()
        };
        if let Some(g) = path.gates().filter(|&g| gain(n, g) > 1e-9).max_by(|&a, &b| gain(n, a).total_cmp(&gain(n, b))) {
            let k = fastest_level(n, g);
            n.resize(g, k);
            return true;
        }
        return false;
    }
    match path.gates().filter(|&g| n.gates[g].xi + need <= cfg.xi_max).last() {
        Some(g) => {
            n.gates[g].xi += need;
            true
        }
        None => false,
    }
}

/// Re-verifies records in lookup mode and repairs violations within
/// `cfg.repair_iters` steps. Each step must keep typical-mode timing.
pub fn verify_and_repair(
    n: &Netlist,
    records: &[WpRecord],
    junctions: &HashSet<(usize, usize)>,
    cfg: &TimingConfig,
) -> (Netlist, RepairStatus) {
    let mut cur = n.clone();
    for step in 0..=cfg.repair_iters {
        let Some(&(i, excess)) = lookup_violations(&cur, records, cfg).first() else {
            let status = if step == 0 { RepairStatus::Passed } else { RepairStatus::Repaired(step) };
            return (cur, status);
        };
        if step == cfg.repair_iters {
            break;
        }
        let Some(path) = record_path(&cur, &records[i]) else {
            return (n.clone(), RepairStatus::Abandoned("record path vanished".into()));
        };
        let mut next = cur.clone();
        if !repair_step(&mut next, &path, excess, cfg) {
            return (n.clone(), RepairStatus::Abandoned(format!("no repair for record {i}")));
        }
        if let Err(e) = verify_timing(&next, junctions, cfg) {
            return (n.clone(), RepairStatus::Abandoned(format!("repair breaks timing: {e}")));
        }
        cur = next;
    }
    (n.clone(), RepairStatus::Abandoned("iteration cap reached".into()))
}
