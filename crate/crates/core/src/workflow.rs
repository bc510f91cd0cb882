// SPDX-License-Identifier: Apache-2.0
//! Construction loop, wave-pipelined path records and report metrics.

use crate::config::TimingConfig;
use crate::duplication::{self, verify_and_repair, RepairStatus};
use crate::falsepath::{self, path_truth, Truth};
use crate::netlist::{ff_distance, sequential_adjacency, Netlist, Placement, Signal, Sink};
use crate::removal::{self, Attempt};
use crate::timing::{
    classify_gray, launch_offset, path_delay, propagate_arrivals, sample_paths, wave_arrivals, GrayClass, Path, Side,
    NO_EARLY, NO_LATE,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WpKind {
    WpTrue,
    WpFalse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Removal,
    Duplication,
}

/// One constructed two-wave path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WpRecord {
    /// Flip-flop whose removal created the path.
    pub site: String,
    pub launch: String,
    /// Capture flip-flop id, or `out:<net>` for a primary output.
    pub capture: String,
    pub gates: Vec<String>,
    pub pins: Vec<usize>,
    /// Gate input where the flip-flop used to be.
    pub junction: (String, usize),
    pub kind: WpKind,
    pub method: Method,
    /// Arrival at the capture, launch offset included.
    pub delay: f64,
    /// Earliest and latest two-wave arrival over all paths from the same
    /// launch to the same capture.
    pub dmin: f64,
    pub dmax: f64,
    pub gray: bool,
}

/// Junction pins by (gate name, pin) resolved against a netlist.
pub fn junction_set(n: &Netlist, names: &[(String, usize)]) -> HashSet<(usize, usize)> {
    let idx: BTreeMap<&str, usize> = n.gates.iter().enumerate().map(|(i, g)| (g.id.as_str(), i)).collect();
    names
        .iter()
        .filter_map(|(g, p)| idx.get(g.as_str()).map(|&i| (i, *p)))
        .collect()
}

pub fn capture_name(n: &Netlist, s: Sink) -> String {
    match s {
        Sink::FfD(f) => n.flipflops[f].id.clone(),
        Sink::Output(o) => format!("out:{}", n.signal_name(n.outputs[o])),
        Sink::Pin(g, p) => format!("{}.{}", n.gates[g].id, p),
    }
}

fn sink_by_name(n: &Netlist, name: &str) -> Option<Sink> {
    if let Some(net) = name.strip_prefix("out:") {
        return n.outputs.iter().position(|&o| n.signal_name(o) == net).map(Sink::Output);
    }
    n.ff_index(name).map(Sink::FfD)
}

/// Rebuilds the structural path of a record.
pub fn record_path(n: &Netlist, r: &WpRecord) -> Option<Path> {
    let launch = *n.name_map().get(r.launch.as_str())?;
    let mut arcs = Vec::new();
    for (g, &p) in r.gates.iter().zip(&r.pins) {
        arcs.push((n.gate_index(g)?, p));
    }
    let end = sink_by_name(n, &r.capture)?;
    let path = Path { launch, arcs, end };
    path.is_well_formed(n).then_some(path)
}

/// Two-wave (early, late) arrival at `end` from `launch` alone.
pub fn launch_window(n: &Netlist, junctions: &HashSet<(usize, usize)>, t_cq: f64, launch: Signal, end: Sink) -> Option<(f64, f64)> {
    let order = n.topo_order().ok()?;
    let mut arr = vec![[(NO_EARLY, NO_LATE); 2]; n.gates.len()];
    let at = |arr: &Vec<[(f64, f64); 2]>, s: Signal| -> [(f64, f64); 2] {
        match s {
            Signal::Gate(g) => arr[g],
            s if s == launch => {
                let o = launch_offset(s, t_cq);
                [(o, o), (NO_EARLY, NO_LATE)]
            }
            _ => [(NO_EARLY, NO_LATE); 2],
        }
    };
    for g in order {
        let mut acc = [(NO_EARLY, NO_LATE); 2];
        for (p, &s) in n.gates[g].inputs.iter().enumerate() {
            let src = at(&arr, s);
            let d = n.arc_delay(g, p);
            let shift = junctions.contains(&(g, p));
            for c in 0..2 {
                let (e, l) = src[c];
                if l == NO_LATE || (shift && c == 1) {
                    continue;
                }
                let k = if shift { 1 } else { c };
                acc[k].0 = acc[k].0.min(e + d);
                acc[k].1 = acc[k].1.max(l + d);
            }
        }
        arr[g] = acc;
    }
    let driver = match end {
        Sink::FfD(f) => n.flipflops[f].d,
        Sink::Output(o) => n.outputs[o],
        Sink::Pin(..) => return None,
    };
    let w = at(&arr, driver)[1];
    (w.1 > NO_LATE).then_some(w)
}

fn backward_paths(n: &Netlist, s: Signal, cap: usize) -> Vec<(Signal, Vec<(usize, usize)>)> {
    fn rec(n: &Netlist, s: Signal, tail: &mut Vec<(usize, usize)>, out: &mut Vec<(Signal, Vec<(usize, usize)>)>, cap: usize) {
        if out.len() >= cap {
            return;
        }
        match s {
            Signal::Gate(g) => {
                for p in 0..n.gates[g].inputs.len() {
                    tail.push((g, p));
                    rec(n, n.gates[g].inputs[p], tail, out, cap);
                    tail.pop();
                }
            }
            launch => {
                let mut arcs = tail.clone();
                arcs.reverse();
                out.push((launch, arcs));
            }
        }
    }
    let mut out = Vec::new();
    rec(n, s, &mut Vec::new(), &mut out, cap);
    out
}

fn forward_paths(n: &Netlist, fo: &crate::netlist::Fanouts, first: (usize, usize), cap: usize) -> Vec<(Vec<(usize, usize)>, Sink)> {
    fn rec(
        fo: &crate::netlist::Fanouts,
        arcs: &mut Vec<(usize, usize)>,
        out: &mut Vec<(Vec<(usize, usize)>, Sink)>,
        cap: usize,
    ) {
        let g = arcs.last().unwrap().0;
        for &k in fo.of(Signal::Gate(g)) {
            if out.len() >= cap {
                return;
            }
            match k {
                Sink::Pin(h, p) => {
                    arcs.push((h, p));
                    rec(fo, arcs, out, cap);
                    arcs.pop();
                }
                end => out.push((arcs.clone(), end)),
            }
        }
    }
    let _ = n;
    let mut out = Vec::new();
    rec(fo, &mut vec![first], &mut out, cap);
    out
}

/// Records for every two-wave path through the given junctions, up to
/// `cfg.path_sample_limit` per junction in enumeration order.
pub fn site_records(
    n: &Netlist,
    junctions: &HashSet<(usize, usize)>,
    site: &[(usize, usize)],
    site_id: &str,
    method: Method,
    cfg: &TimingConfig,
) -> Vec<WpRecord> {
    let fo = n.fanouts();
    let cap = cfg.path_sample_limit.max(1);
    let mut windows: BTreeMap<(Signal, Sink), Option<(f64, f64)>> = BTreeMap::new();
    let mut out = Vec::new();
    for &(g, p) in site {
        let lefts = backward_paths(n, n.gates[g].inputs[p], cap);
        let rights = forward_paths(n, &fo, (g, p), cap);
        let mut count = 0;
        'pairs: for (launch, la) in &lefts {
            for (ra, end) in &rights {
                if count >= cap {
                    break 'pairs;
                }
                count += 1;
                let mut arcs = la.clone();
                arcs.extend_from_slice(ra);
                let path = Path { launch: *launch, arcs, end: *end };
                let Some((dmin, dmax)) = *windows
                    .entry((*launch, *end))
                    .or_insert_with(|| launch_window(n, junctions, cfg.t_cq, *launch, *end))
                else {
                    continue;
                };
                let delay = launch_offset(*launch, cfg.t_cq) + path_delay(n, &path);
                let kind = match path_truth(n, &path) {
                    Ok(Truth::False) => WpKind::WpFalse,
                    _ => WpKind::WpTrue,
                };
                let gray = [dmin, dmax, dmin + cfg.t_su, dmax + cfg.t_su]
                    .iter()
                    .all(|&d| classify_gray(d, cfg) == GrayClass::Suspicious);
                out.push(WpRecord {
                    site: site_id.to_string(),
                    launch: n.signal_name(*launch).to_string(),
                    capture: capture_name(n, *end),
                    gates: path.arcs.iter().map(|&(g, _)| n.gates[g].id.clone()).collect(),
                    pins: path.arcs.iter().map(|&(_, p)| p).collect(),
                    junction: (n.gates[g].id.clone(), p),
                    kind,
                    method,
                    delay,
                    dmin,
                    dmax,
                    gray,
                });
            }
        }
    }
    out
}

/// Typical-mode check of the whole netlist under the given junctions: no
/// path crosses two junctions, every capture meets its window, and every
/// two-wave capture stays in the gray band.
pub fn verify_timing(n: &Netlist, junctions: &HashSet<(usize, usize)>, cfg: &TimingConfig) -> Result<(), String> {
    n.validate().map_err(|e| e.to_string())?;
    let wa = wave_arrivals(n, junctions, cfg.t_cq).map_err(|e| e.to_string())?;
    if wa.triple {
        return Err("a path crosses two junctions".into());
    }
    if let Some(v) = crate::timing::check_captures(n, &wa, cfg).first() {
        return Err(format!("{} class {} {} slack {:.4}", v.capture, v.class, v.kind, v.slack));
    }
    let (lo, hi) = cfg.wp_band();
    let drivers = n.flipflops.iter().map(|f| f.d).chain(n.outputs.iter().copied());
    for d in drivers {
        let (e, l) = wa.at(d)[1];
        if l > NO_LATE && (e < lo - 1e-9 || l > hi + 1e-9) {
            return Err(format!("two-wave arrival at {} outside gray band", n.signal_name(d)));
        }
    }
    Ok(())
}

/// Flip-flops by decreasing sum of the latest arrival at D and the longest
/// path from Q; ties by id.
pub fn sort_candidates(n: &Netlist, cfg: &TimingConfig) -> Vec<usize> {
    let at = propagate_arrivals(n, 0.0).expect("acyclic netlist");
    // Longest path from each gate output to any capture.
    let order = n.topo_order().expect("acyclic netlist");
    let fo = n.fanouts();
    let mut tail = vec![0.0f64; n.gates.len()];
    for &g in order.iter().rev() {
        tail[g] = fo
            .of(Signal::Gate(g))
            .iter()
            .map(|&k| match k {
                Sink::Pin(h, p) => n.arc_delay(h, p) + tail[h],
                _ => 0.0,
            })
            .fold(0.0, f64::max);
    }
    let key = |f: usize| -> f64 {
        let fin = match n.flipflops[f].d {
            Signal::Gate(g) => at.late[g],
            _ => 0.0,
        };
        let fout = fo
            .of(Signal::Ff(f))
            .iter()
            .map(|&k| match k {
                Sink::Pin(h, p) => n.arc_delay(h, p) + tail[h],
                _ => 0.0,
            })
            .fold(0.0, f64::max);
        fin + fout
    };
    let _ = cfg;
    let mut v: Vec<(f64, usize)> = (0..n.flipflops.len()).map(|f| (key(f), f)).collect();
    v.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| n.flipflops[a.1].id.cmp(&n.flipflops[b.1].id)));
    v.into_iter().map(|x| x.1).collect()
}

/// Drops flip-flops with more source or sink flip-flops than the
/// threshold.
pub fn filter_candidates(order: &[usize], n: &Netlist, cfg: &TimingConfig) -> Vec<usize> {
    let adj = sequential_adjacency(n);
    order
        .iter()
        .copied()
        .filter(|&f| adj.sources(f) <= cfg.fanio_threshold && adj.sinks(f) <= cfg.fanio_threshold)
        .collect()
}

/// Ten times the minimum pairwise flip-flop distance.
pub fn default_dis_t(n: &Netlist, placement: Option<&Placement>) -> f64 {
    let adj = sequential_adjacency(n);
    let nf = n.flipflops.len();
    let mut best = f64::INFINITY;
    for a in 0..nf {
        for b in a + 1..nf {
            if let Ok(d) = ff_distance(n, &adj, a, b, placement) {
                if d > 0.0 {
                    best = best.min(d);
                }
            }
        }
    }
    if best.is_finite() {
        10.0 * best
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ConstructionState {
    /// Flip-flops barred from construction.
    pub blocked: BTreeSet<String>,
    /// Filtered candidate order.
    pub candidates: Vec<String>,
    pub remaining_wpf: usize,
    pub remaining_wpt: usize,
    pub records: Vec<WpRecord>,
    pub junctions: Vec<(String, usize)>,
    /// Inserted delay in buffer-delay units.
    pub n_p: f64,
    pub n_d: usize,
    pub n_r: i64,
    /// Candidate pairs found by the pair checks, summed over attempts.
    pub n_f_candidates: usize,
    pub sites: Vec<String>,
    pub log: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    False,
    True,
}

/// Builds wave-pipelined false paths, then true paths, until the targets
/// are met or candidates run out.
pub fn construct(n: &Netlist, cfg: &TimingConfig, placement: Option<&Placement>, seed: u64) -> (Netlist, ConstructionState) {
    let mut cur = n.clone();
    let mut st = ConstructionState {
        remaining_wpf: cfg.n_wpf,
        remaining_wpt: cfg.n_wpt,
        ..Default::default()
    };
    if cfg.n_wpf == 0 && cfg.n_wpt == 0 {
        return (cur, st);
    }
    let order = filter_candidates(&sort_candidates(n, cfg), n, cfg);
    st.candidates = order.iter().map(|&f| n.flipflops[f].id.clone()).collect();
    let dis_t = cfg.dis_t.unwrap_or_else(|| default_dis_t(n, placement));
    let adj = sequential_adjacency(n);
    let near = |f: usize| -> Vec<String> {
        let mut v: Vec<String> = adj.succ[f].iter().chain(adj.pred[f].iter()).map(|&j| n.flipflops[j].id.clone()).collect();
        for j in 0..n.flipflops.len() {
            if j != f && ff_distance(n, &adj, f, j, placement).map_or(false, |d| d < dis_t) {
                v.push(n.flipflops[j].id.clone());
            }
        }
        v
    };
    for phase in [Phase::False, Phase::True] {
        for (k, name) in st.candidates.clone().iter().enumerate() {
            let remaining = match phase {
                Phase::False => st.remaining_wpf,
                Phase::True => st.remaining_wpt,
            };
            if remaining == 0 {
                break;
            }
            if st.blocked.contains(name) {
                continue;
            }
            let Some(f) = cur.ff_index(name) else { continue };
            let jset = junction_set(&cur, &st.junctions);
            let s = seed.wrapping_add(k as u64);
            let check = match phase {
                Phase::False => falsepath::check_wp_false_paths(&cur, f, cfg, s),
                Phase::True => falsepath::check_wp_true_paths(&cur, f, cfg, s),
            };
            if check.count == 0 {
                continue;
            }
            st.n_f_candidates += if phase == Phase::False { check.count } else { 0 };
            let mut sampled = sample_paths(&cur, f, Side::Fanin, cfg.path_sample_limit, s);
            sampled.extend(sample_paths(&cur, f, Side::Fanout, cfg.path_sample_limit, s.wrapping_add(1)));
            let recheck = |m: &Netlist, r: usize| -> Vec<(Path, Path)> {
                match phase {
                    Phase::False => falsepath::check_wp_false_paths(m, r, cfg, s).pairs,
                    Phase::True => falsepath::check_wp_true_paths(m, r, cfg, s).pairs,
                }
            };
            let outcome = attempt_site(&cur, f, &check.pairs, &sampled, &jset, &st.junctions, cfg, &recheck);
            let Some(site) = outcome else {
                st.log.push(format!("{name}: no construction"));
                st.blocked.insert(name.clone());
                continue;
            };
            let nf = site.records.iter().filter(|r| r.kind == WpKind::WpFalse).count();
            let nt = site.records.len() - nf;
            st.log.push(format!("{name}: {:?}, {nf} false and {nt} true records", site.method));
            st.remaining_wpf = st.remaining_wpf.saturating_sub(nf);
            st.remaining_wpt = st.remaining_wpt.saturating_sub(nt);
            st.records.extend(site.records);
            st.junctions.extend(site.junctions);
            st.n_p += site.inserted / cur.library.buffer_delay;
            st.n_d += site.duplicated;
            st.n_r += site.added_ffs;
            st.sites.push(name.clone());
            st.blocked.insert(name.clone());
            if let Some(orig) = n.ff_index(name) {
                st.blocked.extend(near(orig));
            }
            cur = site.netlist;
        }
    }
    (cur, st)
}

struct SiteResult {
    netlist: Netlist,
    junctions: Vec<(String, usize)>,
    records: Vec<WpRecord>,
    method: Method,
    inserted: f64,
    duplicated: usize,
    added_ffs: i64,
}

/// Why a finished site was rejected. `Lookup` carries the model-band trim
/// that would cover the observed lookup drift.
enum Rejection {
    Final,
    Lookup((f64, f64)),
}

fn finish_site(
    after: Netlist,
    new_junctions: &[(String, usize)],
    old_junctions: &[(String, usize)],
    site_id: &str,
    method: Method,
    cfg: &TimingConfig,
) -> Result<(Netlist, Vec<WpRecord>), Rejection> {
    let mut all = old_junctions.to_vec();
    all.extend(new_junctions.iter().cloned());
    let jset = junction_set(&after, &all);
    if let Err(e) = verify_timing(&after, &jset, cfg) {
        log::info!("{site_id}: {method:?} rejected: {e}");
        return Err(Rejection::Final);
    }
    let site = junction_set(&after, new_junctions);
    let mut site: Vec<(usize, usize)> = site.into_iter().collect();
    site.sort();
    let records = site_records(&after, &jset, &site, site_id, method, cfg);
    if records.is_empty() {
        return Err(Rejection::Final);
    }
    let (repaired, status) = verify_and_repair(&after, &records, &jset, cfg);
    match status {
        RepairStatus::Passed => Ok((repaired, records)),
        RepairStatus::Repaired(_) => {
            let records = site_records(&repaired, &jset, &site, site_id, method, cfg);
            Ok((repaired, records))
        }
        RepairStatus::Abandoned(why) => {
            log::info!("{site_id}: {method:?} abandoned after repair: {why}");
            Err(Rejection::Lookup(duplication::lookup_trim(&after, &records, cfg)))
        }
    }
}

/// Model-band trims tried before a flip-flop is given up.
const TRIM_ROUNDS: usize = 3;

/// Runs `method` under growing model-band trims until a result survives
/// lookup-mode repair.
fn with_trims(
    cfg: &TimingConfig,
    id: &str,
    mut method: impl FnMut(&TimingConfig) -> Result<SiteResult, Rejection>,
) -> Option<SiteResult> {
    let mut model_cfg = cfg.clone();
    for round in 0..TRIM_ROUNDS {
        let t = match method(&model_cfg) {
            Ok(site) => return Some(site),
            Err(Rejection::Final) => return None,
            Err(Rejection::Lookup(t)) => t,
        };
        // The trim is measured against the full band, so it replaces rather
        // than adds to the previous one, growing by a margin each round.
        let grow = cfg.margin * (round + 1) as f64;
        let bt = &mut model_cfg.band_trim;
        bt.0 = bt.0.max(if t.0 > 0.0 { t.0 + grow } else { 0.0 });
        bt.1 = bt.1.max(if t.1 > 0.0 { t.1 + grow } else { 0.0 });
        let (lo, hi) = model_cfg.model_band();
        if lo >= hi {
            return None;
        }
        log::debug!("{id}: round {round} retries with band trim {:?}", model_cfg.band_trim);
    }
    None
}

/// Removal first, duplication only when removal fails under every trim.
#[allow(clippy::too_many_arguments)]
fn attempt_site(
    n: &Netlist,
    f: usize,
    pairs: &[(Path, Path)],
    sampled: &[Path],
    jset: &HashSet<(usize, usize)>,
    junctions: &[(String, usize)],
    cfg: &TimingConfig,
    recheck: &dyn Fn(&Netlist, usize) -> Vec<(Path, Path)>,
) -> Option<SiteResult> {
    let id = n.flipflops[f].id.clone();
    let removed = with_trims(cfg, &id, |model_cfg| match removal::try_removal(n, f, pairs, sampled, jset, model_cfg) {
        Attempt::Done(a) => {
            let (net, records) = finish_site(a.netlist, &a.junctions, junctions, &id, Method::Removal, cfg)?;
            let inserted = net.total_xi() - n.total_xi();
            Ok(SiteResult {
                netlist: net,
                junctions: a.junctions,
                records,
                method: Method::Removal,
                inserted,
                duplicated: 0,
                added_ffs: a.added_ffs,
            })
        }
        other => {
            log::debug!("{id}: removal infeasible {}", matches!(other, Attempt::Infeasible));
            Err(Rejection::Final)
        }
    });
    if removed.is_some() {
        return removed;
    }
    with_trims(cfg, &id, |model_cfg| {
        let d = duplication::try_duplication(n, f, pairs, junctions, model_cfg, recheck).ok_or(Rejection::Final)?;
        let (net, records) = finish_site(d.netlist, &d.junctions, junctions, &id, Method::Duplication, cfg)?;
        let inserted = net.total_xi() - n.total_xi();
        Ok(SiteResult {
            netlist: net,
            junctions: d.junctions,
            records,
            method: Method::Duplication,
            inserted,
            duplicated: d.duplicated,
            added_ffs: d.added_ffs,
        })
    })
}

/// Construction metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub circuit: String,
    pub gates_before: usize,
    pub gates_after: usize,
    pub ffs_before: usize,
    pub ffs_after: usize,
    pub n_wpt: usize,
    pub n_wpf: usize,
    pub n_t: usize,
    pub n_f_suspicious: usize,
    pub n_t_total: usize,
    pub n_f_total: usize,
    pub n_f_candidates: usize,
    /// Screening enumerated every path when true.
    pub screening_exact: bool,
    pub n_p: f64,
    pub n_d: usize,
    pub n_r: i64,
    pub sites: Vec<String>,
    /// Wall-clock time; left out of the serialized document so that
    /// reports from identical runs compare equal.
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Suspicious single-wave paths found by sampling the fan-in of every
/// capture: (true count, false count, exact).
pub fn screen_single_period(n: &Netlist, junctions: &HashSet<(usize, usize)>, cfg: &TimingConfig, seed: u64) -> (usize, usize, bool) {
    let mut nt = 0;
    let mut nf = 0;
    let mut exact = true;
    let counts = crate::timing::count_paths_to(n).unwrap_or_default();
    for f in 0..n.flipflops.len() {
        if let Signal::Gate(g) = n.flipflops[f].d {
            if counts.get(g).copied().unwrap_or(0.0) > cfg.screen_limit as f64 {
                exact = false;
            }
        }
        for p in sample_paths(n, f, Side::Fanin, cfg.screen_limit, seed) {
            if p.arcs.iter().any(|a| junctions.contains(a)) {
                continue;
            }
            let d = launch_offset(p.launch, cfg.t_cq) + path_delay(n, &p) + cfg.t_su;
            if classify_gray(d, cfg) != GrayClass::Suspicious {
                continue;
            }
            match path_truth(n, &p) {
                Ok(Truth::False) => nf += 1,
                _ => nt += 1,
            }
        }
    }
    (nt, nf, exact)
}

pub fn report(st: &ConstructionState, before: &Netlist, after: &Netlist, cfg: &TimingConfig, seed: u64, started: Instant) -> Report {
    let jset = junction_set(after, &st.junctions);
    let (n_t, n_f, exact) = screen_single_period(after, &jset, cfg, seed);
    let n_wpt = st.records.iter().filter(|r| r.kind == WpKind::WpTrue && r.gray).count();
    let n_wpf = st.records.iter().filter(|r| r.kind == WpKind::WpFalse && r.gray).count();
    Report {
        circuit: before.name.clone(),
        gates_before: before.gates.len(),
        gates_after: after.gates.len(),
        ffs_before: before.flipflops.len(),
        ffs_after: after.flipflops.len(),
        n_wpt,
        n_wpf,
        n_t,
        n_f_suspicious: n_f,
        n_t_total: n_wpt + n_t,
        n_f_total: n_wpf + n_f,
        n_f_candidates: st.n_f_candidates,
        screening_exact: exact,
        n_p: (st.n_p * 1e6).round() / 1e6,
        n_d: st.n_d,
        n_r: st.n_r,
        sites: st.sites.clone(),
        runtime_s: started.elapsed().as_secs_f64(),
    }
}
