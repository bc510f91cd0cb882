// SPDX-License-Identifier: Apache-2.0

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wavecamo::attacks::{screen, sizing_attack, SizingOptions};
use wavecamo::benchmarks;
use wavecamo::netlist::parse_bench;
use wavecamo::timing::propagate_arrivals;
use wavecamo::simulate::{equivalence_check, random_vectors, settled_state, simulate};
use wavecamo::workflow::{self, junction_set, record_path, verify_timing, WpKind};
use wavecamo::{Netlist, TimingConfig};

#[test]
fn timed_simulation_matches_zero_delay_reference() {
    let cfg = TimingConfig::default();
    for b in [benchmarks::pipeline(), benchmarks::snippet(), benchmarks::synthetic("s", 2, 1)] {
        let n = &b.netlist;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vecs = random_vectors(n.inputs.len(), 500, &mut rng);
        let init = settled_state(n, &vecs[0]);
        assert_eq!(init, common::settle_state(n, &vecs[0]));
        let t = simulate(n, &vecs, &cfg, &init).unwrap();
        assert!(t.violations.is_empty(), "{}: {:?}", b.name, t.violations.first());
        assert_eq!(t.outputs, common::reference_run(n, &vecs, &init), "{}", b.name);
    }
}

#[test]
fn short_period_reports_setup_violations() {
    let n = benchmarks::pipeline().netlist;
    let f = n.ff_index("f").unwrap();
    let late = propagate_arrivals(&n, 0.1).unwrap().at(n.flipflops[f].d).1;
    // The latest change at f lands 0.05 before the next edge.
    let cfg = TimingConfig { period: late + 0.05, ..TimingConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vecs = random_vectors(n.inputs.len(), 50, &mut rng);
    let t = simulate(&n, &vecs, &cfg, &settled_state(&n, &vecs[0])).unwrap();
    assert!(t.violations.iter().any(|v| v.kind == "setup" && v.capture == "f"));
}

#[test]
fn width_mismatch_is_an_error() {
    let n = benchmarks::pipeline().netlist;
    let cfg = TimingConfig::default();
    assert!(simulate(&n, &[vec![true]], &cfg, &[false; 3]).is_err());
    let other = parse_bench("INPUT(a)\nOUTPUT(b)\nb = NOT(a)\n", None).unwrap();
    assert!(equivalence_check(&n, &other, &cfg, 10, 1, 0, 2).is_err());
}

#[test]
fn zero_targets_leave_the_netlist_alone() {
    let b = benchmarks::snippet();
    let cfg = TimingConfig { n_wpf: 0, n_wpt: 0, ..TimingConfig::default() };
    let (after, st) = workflow::construct(&b.netlist, &cfg, None, 1);
    assert_eq!(after, b.netlist);
    assert!(st.records.is_empty() && st.junctions.is_empty());
}

fn construct(b: &benchmarks::Benchmark) -> (Netlist, workflow::ConstructionState) {
    workflow::construct(&b.netlist, &TimingConfig::default(), b.placement.as_ref(), 1)
}

#[test]
fn pipeline_becomes_one_two_wave_stage() {
    let b = benchmarks::pipeline();
    let cfg = TimingConfig::default();
    let (after, st) = construct(&b);
    assert_eq!(after.flipflops.len(), b.netlist.flipflops.len() - 1);
    assert!(after.ff_index("f").is_none());
    assert!(!st.records.is_empty());
    assert!(st.records.iter().all(|r| r.kind == WpKind::WpTrue));
    let j = junction_set(&after, &st.junctions);
    verify_timing(&after, &j, &cfg).unwrap();
    for r in &st.records {
        let p = record_path(&after, r).expect("record path exists");
        let (w, _) = common::two_wave_range(&after, &j, cfg.t_cq, p.launch, p.last_driver(), 1000);
        let (lo, hi) = w.unwrap();
        assert!((lo - r.dmin).abs() < 1e-6 && (hi - r.dmax).abs() < 1e-6);
    }
    let eq = equivalence_check(&b.netlist, &after, &cfg, 2000, 3, 9, cfg.warmup_cycles).unwrap();
    assert!(eq.equivalent, "{eq:?}");
}

#[test]
fn report_counts_records() {
    let b = benchmarks::snippet();
    let cfg = TimingConfig::default();
    let (after, st) = construct(&b);
    let rep = workflow::report(&st, &b.netlist, &after, &cfg, 1, std::time::Instant::now());
    assert_eq!(rep.n_wpt + rep.n_wpf, st.records.iter().filter(|r| r.gray).count());
    assert_eq!(rep.n_t_total, rep.n_wpt + rep.n_t);
    assert_eq!(rep.gates_before, b.netlist.gates.len());
}

#[test]
fn screening_never_calls_a_record_single() {
    let b = benchmarks::snippet();
    let (after, st) = construct(&b);
    assert!(!st.records.is_empty());
    for seed in 0..20 {
        let s = screen(&after, &st.records, &TimingConfig::default(), seed);
        assert_eq!(s.records_single, 0);
        assert_eq!(s.records_single + s.records_wp + s.records_suspicious, st.records.len());
    }
    // A perfectly informed attacker sees every record as two-wave.
    let exact = TimingConfig { tau: 1e-9, ..TimingConfig::default() };
    let s = screen(&after, &st.records, &exact, 0);
    assert_eq!(s.records_wp, st.records.len());
}

#[test]
fn sizing_attack_on_empty_sample() {
    let n = benchmarks::pipeline().netlist;
    let r = sizing_attack(&n, &[], &TimingConfig::default(), &SizingOptions::default());
    assert_eq!((r.attempted, r.succeeded, r.failed), (0, 0, 0));
}
