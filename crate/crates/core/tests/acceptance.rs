// SPDX-License-Identifier: Apache-2.0
//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any criterion fails.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};
use wavecamo::attacks;
use wavecamo::benchmarks::{self, add_lane, Benchmark, LaneSpec};
use wavecamo::duplication::{build_duplication_model, plan_duplication, try_duplication};
use wavecamo::falsepath::{check_wp_false_paths, check_wp_true_paths, is_true_path};
use wavecamo::milp::{self, Budget, Status};
use wavecamo::netlist::{write_annotations, write_bench, DelayLibrary, Placement};
use wavecamo::retiming::{apply_retiming, ff_count_delta, retimed_weight, unshare_ffs, Net, RetimingAssignment, WeightGraph};
use wavecamo::simulate::{random_vectors, simulate};
use wavecamo::workflow::{self, junction_set, record_path, ConstructionState, WpKind};
use wavecamo::{Netlist, Signal, Sink, TimingConfig};

/// Window and path-range agreement.
const WINDOW_TOL: f64 = 1e-6;
/// Objective agreement for solver checks.
const OBJ_TOL: f64 = 1e-6;
const C1_BUDGET: Duration = Duration::from_secs(60);
const C4_BUDGET: Duration = Duration::from_secs(120);
const TRACES: usize = 20;
const CYCLES: usize = 10_000;
const WARMUP: usize = 2;

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line { pass, detail: detail.into() }
}

struct Run {
    bench: Benchmark,
    after: Netlist,
    state: ConstructionState,
    report: String,
    elapsed: Duration,
}

fn run(b: &Benchmark, cfg: &TimingConfig) -> Run {
    let t = Instant::now();
    let (after, state) = workflow::construct(&b.netlist, cfg, b.placement.as_ref(), 1);
    let elapsed = t.elapsed();
    let rep = workflow::report(&state, &b.netlist, &after, cfg, 1, t);
    Run {
        bench: b.clone(),
        after,
        state,
        report: serde_json::to_string_pretty(&rep).unwrap(),
        elapsed,
    }
}

fn capture_driver(n: &Netlist, s: Sink) -> Signal {
    match s {
        Sink::FfD(f) => n.flipflops[f].d,
        Sink::Output(o) => n.outputs[o],
        Sink::Pin(g, p) => n.gates[g].inputs[p],
    }
}

fn c1_window(runs: &[Run], cfg: &TimingConfig) -> Line {
    let t = Instant::now();
    let mut records = 0;
    let mut paths = 0;
    let mut bad = Vec::new();
    for r in runs {
        let j = junction_set(&r.after, &r.state.junctions);
        for rec in &r.state.records {
            records += 1;
            let Some(p) = record_path(&r.after, rec) else {
                bad.push(format!("{}: missing path", r.bench.name));
                continue;
            };
            let (w, k) = common::two_wave_range(&r.after, &j, cfg.t_cq, p.launch, capture_driver(&r.after, p.end), 1_000_000);
            paths += k;
            let Some((lo, hi)) = w else {
                bad.push(format!("{}: no two-wave path", r.bench.name));
                continue;
            };
            let own = if matches!(p.launch, Signal::Ff(_)) { cfg.t_cq } else { 0.0 }
                + p.arcs.iter().map(|&(g, q)| r.after.gates[g].xi + r.after.gates[g].pin_delays[q]).sum::<f64>();
            let hold = (1.0 - cfg.delta) * lo >= cfg.period + cfg.t_h - WINDOW_TOL;
            let setup = (1.0 + cfg.delta) * hi <= 2.0 * cfg.period - cfg.t_su + WINDOW_TOL;
            let agree = (lo - rec.dmin).abs() <= WINDOW_TOL && (hi - rec.dmax).abs() <= WINDOW_TOL;
            let inside = own >= lo - WINDOW_TOL && own <= hi + WINDOW_TOL && (own - rec.delay).abs() <= WINDOW_TOL;
            if !(hold && setup && agree && inside) {
                bad.push(format!("{} {}->{}: [{lo:.4},{hi:.4}] vs [{:.4},{:.4}]", r.bench.name, rec.launch, rec.capture, rec.dmin, rec.dmax));
            }
        }
    }
    let total = t.elapsed() + runs.iter().map(|r| r.elapsed).sum::<Duration>();
    let pass = bad.is_empty() && records > 0 && total < C1_BUDGET;
    line(
        pass,
        format!(
            "{records} records over {} benchmarks, {paths} enumerated paths, {} failures{}, {:.1}s",
            runs.len(),
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default(),
            total.as_secs_f64()
        ),
    )
}

fn c2_gray(runs: &[Run], cfg: &TimingConfig) -> Line {
    let t = cfg.period;
    let gray = |d: f64| (1.0 - cfg.tau) * d <= t && t <= (1.0 + cfg.tau) * d;
    let single = |d: f64| (1.0 + cfg.tau) * d < t;
    let mut records = 0;
    let mut suspicious = 0;
    let mut singles = 0;
    let mut noisy_single = 0;
    for r in runs {
        for rec in &r.state.records {
            records += 1;
            suspicious += (gray(rec.dmin) && gray(rec.dmax) && gray(rec.dmax + cfg.t_su)) as usize;
            singles += (single(rec.dmin) || single(rec.dmax)) as usize;
        }
        for seed in 0..10 {
            noisy_single += attacks::screen(&r.after, &r.state.records, cfg, seed).records_single;
        }
    }
    line(
        records > 0 && suspicious == records && singles == 0 && noisy_single == 0,
        format!("{suspicious}/{records} suspicious, {singles} single, {noisy_single} single under noisy screening"),
    )
}

fn c3_equivalence(runs: &[Run], cfg: &TimingConfig) -> Line {
    let mut bad = Vec::new();
    let mut violations = 0;
    for r in runs {
        for trial in 0..TRACES {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial as u64);
            let vecs = random_vectors(r.bench.netlist.inputs.len(), CYCLES, &mut rng);
            let want = common::reference_run(&r.bench.netlist, &vecs, &common::settle_state(&r.bench.netlist, &vecs[0]));
            let got = simulate(&r.after, &vecs, cfg, &common::settle_state(&r.after, &vecs[0])).unwrap();
            let v = got.violations.iter().filter(|v| v.cycle >= WARMUP).count();
            violations += v;
            if got.outputs[WARMUP..] != want[WARMUP..] {
                bad.push(format!("{} trace {trial}", r.bench.name));
            }
        }
    }
    line(
        bad.is_empty() && violations == 0,
        format!("{} benchmarks x {TRACES} traces x {CYCLES} cycles, {} mismatching traces, {violations} timing violations", runs.len(), bad.len()),
    )
}

fn c4_false_paths() -> Line {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut agree = 0;
    let mut falses = 0;
    let cones = 200;
    for i in 0..cones {
        let k = if i < 20 { 20 } else { rng.gen_range(2..=20) };
        let gates = rng.gen_range(4..=40);
        let (n, p) = common::random_cone(&mut rng, k, gates);
        let want = common::brute_sensitizable(&n, &p);
        falses += (!want) as usize;
        agree += (is_true_path(&n, &p).unwrap() == want) as usize;
    }
    let el = t.elapsed();
    line(
        agree == cones && el < C4_BUDGET,
        format!("{agree}/{cones} agree ({falses} false), {:.1}s", el.as_secs_f64()),
    )
}

fn c5_retiming() -> Line {
    let e = Net { src: Signal::Gate(0), sink: Sink::Pin(1, 0), w: 0 };
    let worked = retimed_weight(&e, &[0, 1]) == 1 && retimed_weight(&e, &[-1, 1]) == 2;
    let n = unshare_ffs(&benchmarks::synthetic("retime", 3, 5).netlist).unwrap();
    let wg = WeightGraph::build(&n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut func = 0;
    let mut count = 0;
    let mut nontrivial = 0;
    let trials = 50;
    for _ in 0..trials {
        let mut r = vec![0i64; n.gates.len()];
        for _ in 0..300 {
            let g = rng.gen_range(0..n.gates.len());
            let d = if rng.gen_bool(0.5) { 1 } else { -1 };
            r[g] += d;
            if wg.nets.iter().any(|e| retimed_weight(e, &r) < 0) {
                r[g] -= d;
            }
        }
        nontrivial += r.iter().any(|&v| v != 0) as usize;
        let a = RetimingAssignment::from_vec(&n, &r);
        let m = apply_retiming(&n, &a).unwrap();
        let want: i64 = wg.nets.iter().map(|e| retimed_weight(e, &r) - e.w).sum();
        let actual = m.flipflops.len() as i64 - n.flipflops.len() as i64;
        count += (ff_count_delta(&n, &a) == want && actual == want) as usize;
        let vecs: Vec<Vec<bool>> = (0..80).map(|_| (0..n.inputs.len()).map(|_| rng.gen()).collect()).collect();
        let x = common::reference_run(&n, &vecs, &common::settle_state(&n, &vecs[0]));
        let y = common::reference_run(&m, &vecs, &common::settle_state(&m, &vecs[0]));
        // Feed-forward lanes forget their initial state within the lane depth.
        func += (x[30..] == y[30..]) as usize;
    }
    line(
        worked && func == trials && count == trials && nontrivial == trials,
        format!("worked values {}, function {func}/{trials}, flip-flop delta {count}/{trials}", if worked { "ok" } else { "wrong" }),
    )
}

fn c6_milp() -> Line {
    let mut agree = 0;
    let mut infeasible = 0;
    let models = 100;
    let mut worst: f64 = 0.0;
    for seed in 0..models {
        let m = common::random_model(600 + seed, seed % 2 == 0);
        let want = common::enumerate_milp(&m);
        let got = milp::solve(&m, Budget::default()).unwrap();
        match want {
            None => {
                infeasible += 1;
                agree += (got.status == Status::Infeasible) as usize;
            }
            Some(w) => {
                let d = (got.objective - w).abs();
                worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
                agree += (got.status == Status::Optimal && d <= OBJ_TOL) as usize;
            }
        }
    }
    line(agree == models as usize, format!("{agree}/{models} agree ({infeasible} infeasible), worst gap {worst:.2e}"))
}

fn c7_big_m() -> Line {
    let cfg = TimingConfig::default();
    let none = HashSet::new();
    let mut instances = 0;
    let mut agree = 0;
    let mut anchors = 0;
    let mut seed = 0u64;
    while instances < 20 && seed < 200 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n = Netlist::new("bigm", DelayLibrary::default());
        let mut pl = Placement::default();
        let pool: Vec<Signal> = (0..3).map(|i| n.add_input(&format!("s{i}"))).collect();
        let spec = LaneSpec { depth_a: 2, depth_b: 3, depth_c: 6, branch: 0 };
        add_lane(&mut n, &mut pl, &mut rng, 0, spec, &pool);
        let f = n.ff_index("l0_fff").unwrap();
        let fc = check_wp_false_paths(&n, f, &cfg, seed);
        let pairs = if fc.count > 0 { fc.pairs } else { check_wp_true_paths(&n, f, &cfg, seed).pairs };
        let Ok(plan) = plan_duplication(&n, &[f], &pairs, &none, &cfg) else { continue };
        if plan.left.len() > 6 {
            continue;
        }
        instances += 1;
        anchors = anchors.max(plan.left.len());
        let free = build_duplication_model(&n, &plan, &none, &cfg, None).unwrap();
        let fs = milp::solve(&free.model, Budget::default()).unwrap();
        let left: Vec<usize> = plan.left.iter().copied().collect();
        let mut best: Option<f64> = None;
        for mask in 0u32..1 << left.len() {
            let fixed: BTreeMap<usize, bool> = left.iter().enumerate().map(|(i, &u)| (u, (mask >> i) & 1 == 1)).collect();
            let dm = build_duplication_model(&n, &plan, &none, &cfg, Some(&fixed)).unwrap();
            let s = milp::solve(&dm.model, Budget::default()).unwrap();
            if s.status == Status::Optimal {
                let v = s.objective + dm.offset;
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        agree += match (fs.status, best) {
            (Status::Optimal, Some(b)) => ((fs.objective - b).abs() <= OBJ_TOL) as usize,
            (Status::Infeasible, None) => 1,
            _ => 0,
        };
    }
    line(
        instances == 20 && agree == instances,
        format!("{agree}/{instances} instances agree, up to {anchors} anchors"),
    )
}

fn c8_sizing(runs: &[Run], cfg: &TimingConfig) -> Line {
    let mut resisted = Vec::new();
    let mut notes = Vec::new();
    for r in runs {
        let j = junction_set(&r.after, &r.state.junctions);
        let rep = attacks::attack(&r.after, &r.state.records, &j, cfg, 1, 40);
        let s = &rep.sizing;
        notes.push(format!("{} {}/{} failed", r.bench.name, s.failed, s.attempted));
        if s.failed > 0 && s.true_paths > 0 {
            resisted.push(r.bench.name.clone());
        }
    }
    line(resisted.len() >= 2, format!("resisted on {:?}; {}", resisted, notes.join(", ")))
}

fn c9_yield(runs: &[Run]) -> Line {
    let mut ok = 0;
    let mut synthetic = 0;
    let mut notes = Vec::new();
    for r in runs.iter().filter(|r| r.bench.synthetic) {
        synthetic += 1;
        let t = r.state.records.iter().filter(|x| x.kind == WpKind::WpTrue).count();
        let f = r.state.records.len() - t;
        ok += (t >= 3 && f >= 3) as usize;
        notes.push(format!("{} {t}/{f}", r.bench.name));
    }
    line(synthetic > 0 && ok == synthetic, format!("{ok}/{synthetic} meet (3,3); true/false: {}", notes.join(", ")))
}

fn c10_determinism(runs: &[Run], cfg: &TimingConfig) -> Line {
    let mut same = 0;
    for r in runs {
        let again = run(&r.bench, cfg);
        let eq = write_bench(&r.after) == write_bench(&again.after)
            && write_annotations(&r.after) == write_annotations(&again.after)
            && r.report == again.report;
        same += eq as usize;
    }
    line(same == runs.len(), format!("{same}/{} benchmarks byte-identical", runs.len()))
}

fn c11_tradeoff(cfg: &TimingConfig) -> Line {
    let mut monotone = 0;
    let mut notes = Vec::new();
    let all = benchmarks::all();
    for b in &all {
        let unit = b.netlist.library.buffer_delay;
        let nd: Vec<usize> = (1..=9)
            .map(|x| {
                let c = TimingConfig { xi_max: x as f64 * unit, ..cfg.clone() };
                workflow::construct(&b.netlist, &c, b.placement.as_ref(), 1).1.n_d
            })
            .collect();
        monotone += nd.windows(2).all(|w| w[1] <= w[0]) as usize;
        notes.push(format!("{} {:?}", b.name, nd));
    }
    // Duplication forced at the first false-path site, so the count is
    // exercised even where removal wins.
    let mut forced_ok = 0;
    let forced = ["lanes4", "lanes8"];
    for name in forced {
        let b = benchmarks::by_name(name).unwrap();
        let n = &b.netlist;
        let order = workflow::filter_candidates(&workflow::sort_candidates(n, cfg), n, cfg);
        let site = order.iter().find_map(|&f| {
            let c = check_wp_false_paths(n, f, cfg, 1);
            (c.count > 0).then_some((f, c.pairs))
        });
        let Some((f, pairs)) = site else { continue };
        let nd: Vec<Option<usize>> = (1..=9)
            .map(|x| {
                let c = TimingConfig { xi_max: x as f64 * n.library.buffer_delay, ..cfg.clone() };
                let recheck = |m: &Netlist, r: usize| check_wp_false_paths(m, r, &c, 1).pairs;
                try_duplication(n, f, &pairs, &[], &c, &recheck).map(|d| d.duplicated)
            })
            .collect();
        // A failed duplication counts as unbounded.
        let key: Vec<usize> = nd.iter().map(|d| d.unwrap_or(usize::MAX)).collect();
        forced_ok += key.windows(2).all(|w| w[1] <= w[0]) as usize;
        notes.push(format!("{name} forced {:?}", nd));
    }
    line(
        monotone == all.len() && forced_ok == forced.len(),
        format!("{monotone}/{} monotone, forced duplication {forced_ok}/{}; {}", all.len(), forced.len(), notes.join(", ")),
    )
}

fn main() {
    let cfg = TimingConfig::default();
    let runs: Vec<Run> = benchmarks::all().iter().map(|b| run(b, &cfg)).collect();
    type Check<'a> = Box<dyn Fn() -> Line + 'a>;
    let checks: Vec<(&str, Check)> = vec![
        ("two-wave window soundness", Box::new(|| c1_window(&runs, &cfg))),
        ("gray-region guarantee", Box::new(|| c2_gray(&runs, &cfg))),
        ("functional equivalence", Box::new(|| c3_equivalence(&runs, &cfg))),
        ("false-path oracle agreement", Box::new(c4_false_paths)),
        ("retiming algebra", Box::new(c5_retiming)),
        ("MILP correctness", Box::new(c6_milp)),
        ("big-M case equivalence", Box::new(c7_big_m)),
        ("sizing-attack resistance", Box::new(|| c8_sizing(&runs, &cfg))),
        ("construction yield", Box::new(|| c9_yield(&runs))),
        ("determinism", Box::new(|| c10_determinism(&runs, &cfg))),
        ("duplication vs inserted delay", Box::new(|| c11_tradeoff(&cfg))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let l = check();
        failed += (!l.pass) as usize;
        println!(
            "criterion {:>2} {} {name}: {} [{:.1}s]",
            i + 1,
            if l.pass { "PASS" } else { "FAIL" },
            l.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
