// SPDX-License-Identifier: Apache-2.0
//! Attacker models against a camouflaged netlist: noisy delay screening
//! and a gate-sizing attack on suspicious false paths.

use crate::config::TimingConfig;
use crate::falsepath::{path_truth, Truth};
use crate::milp::{self, Budget, Cmp, LinExpr, MilpModel, Sense, Status};
use crate::netlist::Netlist;
use crate::simulate;
use crate::timing::{classify_gray, launch_offset, path_delay, sample_paths, GrayClass, Path, Side};
use crate::workflow::{record_path, screen_single_period, WpKind, WpRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Duration;

/// Classification of sampled paths and constructed records under a noisy
/// delay estimate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub definitely_single: usize,
    pub definitely_wp: usize,
    pub suspicious_true: usize,
    pub suspicious_false: usize,
    pub records_single: usize,
    pub records_wp: usize,
    pub records_suspicious: usize,
}

/// Attacker estimate of `d`: uniform multiplicative error within `tau`.
pub fn noisy(d: f64, tau: f64, rng: &mut ChaCha8Rng) -> f64 {
    if tau > 0.0 {
        d * rng.gen_range(1.0 - tau..=1.0 + tau)
    } else {
        d
    }
}

/// Required period of a path seen as single-wave: arrival plus setup.
fn required(n: &Netlist, p: &Path, cfg: &TimingConfig) -> f64 {
    launch_offset(p.launch, cfg.t_cq) + path_delay(n, p) + cfg.t_su
}

/// Screens the fan-in samples of every flip-flop and every record with
/// noisy estimates.
pub fn screen(n: &Netlist, records: &[WpRecord], cfg: &TimingConfig, noise_seed: u64) -> ScreenReport {
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut r = ScreenReport::default();
    for f in 0..n.flipflops.len() {
        for p in sample_paths(n, f, Side::Fanin, cfg.screen_limit, noise_seed) {
            match classify_gray(noisy(required(n, &p, cfg), cfg.tau, &mut rng), cfg) {
                GrayClass::DefinitelySingle => r.definitely_single += 1,
                GrayClass::DefinitelyWp => r.definitely_wp += 1,
                GrayClass::Suspicious => match path_truth(n, &p) {
                    Ok(Truth::False) => r.suspicious_false += 1,
                    _ => r.suspicious_true += 1,
                },
            }
        }
    }
    for rec in records {
        match classify_gray(noisy(rec.delay + cfg.t_su, cfg.tau, &mut rng), cfg) {
            GrayClass::DefinitelySingle => r.records_single += 1,
            GrayClass::DefinitelyWp => r.records_wp += 1,
            GrayClass::Suspicious => r.records_suspicious += 1,
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingOptions {
    /// True paths kept as constraints.
    pub true_limit: usize,
    pub sim_cycles: usize,
    pub sim_trials: usize,
    pub seed: u64,
    pub time_limit_s: f64,
}

impl Default for SizingOptions {
    fn default() -> Self {
        SizingOptions {
            true_limit: 300,
            sim_cycles: 400,
            sim_trials: 2,
            seed: 0,
            time_limit_s: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub launch: String,
    pub capture: String,
    pub gates: Vec<String>,
    pub delay_before: f64,
    pub delay_after: f64,
    pub sized: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SizingReport {
    pub attempted: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub true_paths: usize,
    /// True paths that no sizing brings under `T - t_su`; each is an
    /// irreducible infeasible constraint on its own.
    pub infeasible_true_paths: Vec<PathOutcome>,
    pub outcomes: Vec<PathOutcome>,
    /// Sized netlist equivalent to the input under simulation; `None` when
    /// nothing was sized.
    pub equivalent: Option<bool>,
    pub sim_violations: usize,
}

fn outcome(n: &Netlist, p: &Path, cfg: &TimingConfig, after: f64, sized: bool) -> PathOutcome {
    PathOutcome {
        launch: n.signal_name(p.launch).to_string(),
        capture: crate::workflow::capture_name(n, p.end),
        gates: p.gates().map(|g| n.gates[g].id.clone()).collect(),
        delay_before: launch_offset(p.launch, cfg.t_cq) + path_delay(n, p),
        delay_after: after,
        sized,
    }
}

/// Smallest arrival of `p` over all size choices with no added delay.
fn fastest_arrival(n: &Netlist, p: &Path, cfg: &TimingConfig) -> f64 {
    let mut d = launch_offset(p.launch, cfg.t_cq);
    for &(g, pin) in &p.arcs {
        let gate = &n.gates[g];
        let best = (0..n.library.levels(gate.kind))
            .map(|k| n.library.pin_delays(&gate.id, gate.kind, gate.inputs.len(), k)[pin])
            .fold(f64::INFINITY, f64::min);
        d += gate.xi + best;
    }
    d
}

/// True paths in the fan-in samples that share a gate with `sample`.
pub fn sharing_true_paths(n: &Netlist, sample: &[Path], cfg: &TimingConfig, limit: usize, seed: u64) -> Vec<Path> {
    let gates: HashSet<usize> = sample.iter().flat_map(|p| p.gates()).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for f in 0..n.flipflops.len() {
        for p in sample_paths(n, f, Side::Fanin, cfg.screen_limit, seed) {
            if out.len() >= limit {
                return out;
            }
            if !p.gates().any(|g| gates.contains(&g)) || seen.contains(&p) {
                continue;
            }
            if path_truth(n, &p).map_or(true, |t| t != Truth::False) {
                seen.insert(p.clone());
                out.push(p);
            }
        }
    }
    out
}

/// Tries to size and delay every sampled false path into the two-wave
/// window while keeping the true paths that share its gates inside one
/// period, then simulates the sized netlist.
pub fn sizing_attack(n: &Netlist, sample: &[Path], cfg: &TimingConfig, opts: &SizingOptions) -> SizingReport {
    let mut rep = SizingReport { attempted: sample.len(), ..Default::default() };
    if sample.is_empty() {
        return rep;
    }
    let truths = sharing_true_paths(n, sample, cfg, opts.true_limit, opts.seed);
    rep.true_paths = truths.len();
    let t_limit = cfg.period - cfg.t_su;
    let (lo, hi) = (cfg.period + cfg.t_h, 2.0 * cfg.period - cfg.t_su);
    let fail_all = |rep: &mut SizingReport| {
        rep.outcomes = sample.iter().map(|p| outcome(n, p, cfg, launch_offset(p.launch, cfg.t_cq) + path_delay(n, p), false)).collect();
        rep.failed = sample.len();
    };
    rep.infeasible_true_paths = truths
        .iter()
        .filter_map(|p| {
            let d = fastest_arrival(n, p, cfg);
            (d > t_limit + 1e-9).then(|| outcome(n, p, cfg, d, false))
        })
        .collect();
    if !rep.infeasible_true_paths.is_empty() {
        fail_all(&mut rep);
        return rep;
    }

    let mut gates: BTreeSet<usize> = sample.iter().flat_map(|p| p.gates()).collect();
    gates.extend(truths.iter().flat_map(|p| p.gates()));
    let mut m = MilpModel::default();
    let mut size: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut extra: BTreeMap<usize, usize> = BTreeMap::new();
    for &g in &gates {
        let gate = &n.gates[g];
        let levels = n.library.levels(gate.kind);
        let vs: Vec<usize> = (0..levels).map(|k| m.binary(format!("s_{}_{k}", gate.id))).collect();
        m.add_con(format!("one_{}", gate.id), vs.iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, 1.0);
        size.insert(g, vs);
        extra.insert(g, m.continuous(format!("x_{}", gate.id), 0.0, cfg.xi_max));
    }
    let delay = |p: &Path| -> LinExpr {
        let mut e = LinExpr::constant(launch_offset(p.launch, cfg.t_cq));
        for &(g, pin) in &p.arcs {
            let gate = &n.gates[g];
            e = e.plus(gate.xi).plus_var(extra[&g], 1.0);
            for (k, &v) in size[&g].iter().enumerate() {
                e = e.plus_var(v, n.library.pin_delays(&gate.id, gate.kind, gate.inputs.len(), k)[pin]);
            }
        }
        e.compact()
    };
    let mut obj = Vec::new();
    for (i, p) in sample.iter().enumerate() {
        let z = m.binary(format!("z{i}"));
        let guard = LinExpr::constant(1.0).plus_var(z, -1.0);
        let d = delay(p);
        let relaxed = m
            .add_relaxed(&format!("f{i}_lo"), &d, Cmp::Ge, lo, &guard, cfg.big_m)
            .and_then(|_| m.add_relaxed(&format!("f{i}_hi"), &d, Cmp::Le, hi, &guard, cfg.big_m));
        if relaxed.is_err() {
            fail_all(&mut rep);
            return rep;
        }
        obj.push((z, 1.0));
    }
    for (j, p) in truths.iter().enumerate() {
        let d = delay(p);
        let mut terms = d.terms.clone();
        terms.sort_by_key(|t| t.0);
        m.add_con(format!("t{j}"), terms, Cmp::Le, t_limit - d.constant);
    }
    obj.extend(extra.values().map(|&v| (v, -1e-3)));
    m.set_objective(Sense::Maximize, obj);
    let budget = Budget {
        node_limit: cfg.node_limit,
        time_limit: Duration::from_secs_f64(opts.time_limit_s),
        stall_limit: (cfg.stall_limit > 0).then_some(cfg.stall_limit),
    };
    let sol = match milp::solve(&m, budget) {
        Ok(s) if s.has_point() => s,
        Ok(s) => {
            log::debug!("sizing attack: {:?} after {} nodes", s.status, s.nodes);
            fail_all(&mut rep);
            return rep;
        }
        Err(e) => {
            log::warn!("sizing attack model rejected: {e}");
            fail_all(&mut rep);
            return rep;
        }
    };
    if sol.status != Status::Optimal {
        log::debug!("sizing attack: incumbent after {} nodes", sol.nodes);
    }
    let mut sized = n.clone();
    for &g in &gates {
        let k = size[&g].iter().position(|&v| sol.is_one(v)).unwrap_or(n.gates[g].size_level);
        sized.resize(g, k);
        sized.gates[g].xi += sol.value(extra[&g]).max(0.0);
    }
    for p in sample {
        let d = launch_offset(p.launch, cfg.t_cq) + path_delay(&sized, p);
        let ok = d >= lo - 1e-6 && d <= hi + 1e-6;
        rep.outcomes.push(outcome(n, p, cfg, d, ok));
    }
    rep.succeeded = rep.outcomes.iter().filter(|o| o.sized).count();
    rep.failed = rep.attempted - rep.succeeded;
    if rep.succeeded > 0 {
        if let Ok(eq) = simulate::equivalence_check(n, &sized, cfg, opts.sim_cycles, opts.sim_trials, opts.seed, cfg.warmup_cycles) {
            rep.equivalent = Some(eq.first_divergence.is_none());
            rep.sim_violations = eq.violations.len();
        }
    }
    rep
}

/// Suspicious false paths for the sizing attack: constructed false records
/// first, then screened single-wave false paths, up to `limit`.
pub fn suspicious_false_sample(n: &Netlist, records: &[WpRecord], cfg: &TimingConfig, limit: usize, seed: u64) -> Vec<Path> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.kind == WpKind::WpFalse) {
        if let Some(p) = record_path(n, r) {
            if out.len() < limit && seen.insert(p.clone()) {
                out.push(p);
            }
        }
    }
    for f in 0..n.flipflops.len() {
        for p in sample_paths(n, f, Side::Fanin, cfg.screen_limit, seed) {
            if out.len() >= limit {
                return out;
            }
            if classify_gray(required(n, &p, cfg), cfg) != GrayClass::Suspicious || seen.contains(&p) {
                continue;
            }
            if path_truth(n, &p) == Ok(Truth::False) {
                seen.insert(p.clone());
                out.push(p);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub screen: ScreenReport,
    /// Suspicious true paths, constructed and screened.
    pub n_t_total: usize,
    /// Suspicious false paths, constructed and screened.
    pub n_f_total: usize,
    /// Delay tests needed to cover the suspicious true paths.
    pub test_vector_budget: usize,
    /// Whole-circuit simulations needed to resolve the suspicious false
    /// paths, as a power of two.
    pub simulation_exponent: usize,
    pub sizing: SizingReport,
}

/// Runs screening and the sizing attack on a camouflaged netlist.
pub fn attack(
    n: &Netlist,
    records: &[WpRecord],
    junctions: &HashSet<(usize, usize)>,
    cfg: &TimingConfig,
    seed: u64,
    sample_limit: usize,
) -> AttackReport {
    let (n_t, n_f, _) = screen_single_period(n, junctions, cfg, seed);
    let n_wpt = records.iter().filter(|r| r.kind == WpKind::WpTrue && r.gray).count();
    let n_wpf = records.iter().filter(|r| r.kind == WpKind::WpFalse && r.gray).count();
    let sample = suspicious_false_sample(n, records, cfg, sample_limit, seed);
    let opts = SizingOptions { seed, ..Default::default() };
    AttackReport {
        screen: screen(n, records, cfg, seed),
        n_t_total: n_wpt + n_t,
        n_f_total: n_wpf + n_f,
        test_vector_budget: n_wpt + n_t,
        simulation_exponent: n_wpf + n_f,
        sizing: sizing_attack(n, &sample, cfg, &opts),
    }
}
