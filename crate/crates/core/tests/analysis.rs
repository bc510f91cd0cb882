// SPDX-License-Identifier: Apache-2.0

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use wavecamo::benchmarks;
use wavecamo::falsepath::{check_wp_false_paths, is_true_path, path_truth, Truth};
use wavecamo::retiming::{
    apply_retiming, ff_count_delta, is_legal, retimed_weight, unshare_ffs, Net, RetimingAssignment, WeightGraph,
};
use wavecamo::timing::{check_wp_window, classify_gray, path_delay, propagate_arrivals, wave_arrivals, GrayClass, Path};
use wavecamo::{Signal, Sink, TimingConfig};

proptest! {
    #[test]
    fn gray_classes_partition_the_delay_axis(d in 0.0f64..40.0, tau in 0.01f64..0.9) {
        let cfg = TimingConfig { tau, ..TimingConfig::default() };
        let t = cfg.period;
        let want = if (1.0 + tau) * d < t {
            GrayClass::DefinitelySingle
        } else if (1.0 - tau) * d > t {
            GrayClass::DefinitelyWp
        } else {
            GrayClass::Suspicious
        };
        prop_assert_eq!(classify_gray(d, &cfg), want);
    }

    #[test]
    fn window_check_is_the_margin_inequality(dmin in 5.0f64..25.0, spread in 0.0f64..5.0) {
        let cfg = TimingConfig::default();
        let dmax = dmin + spread;
        let r = check_wp_window(dmin, dmax, &cfg);
        let ok = (1.0 - cfg.delta) * dmin >= cfg.period + cfg.t_h - 1e-9
            && (1.0 + cfg.delta) * dmax <= 2.0 * cfg.period - cfg.t_su + 1e-9;
        prop_assert_eq!(r.ok, ok);
    }
}

#[test]
fn band_lies_inside_both_windows() {
    let cfg = TimingConfig::default();
    let (lo, hi) = cfg.wp_band();
    assert!(lo < hi);
    assert!(check_wp_window(lo, hi, &cfg).ok);
    for d in [lo, hi, hi + cfg.t_su] {
        assert_eq!(classify_gray(d, &cfg), GrayClass::Suspicious, "{d}");
    }
}

#[test]
fn arrivals_match_path_enumeration() {
    let n = benchmarks::pipeline().netlist;
    let at = propagate_arrivals(&n, 0.1).unwrap();
    let f = n.ff_index("f").unwrap();
    // Single chain a -> g0..g5 -> f: both bounds equal the chain delay.
    let Signal::Gate(last) = n.flipflops[f].d else { panic!() };
    let mut arcs = Vec::new();
    let mut s = Signal::Gate(last);
    while let Signal::Gate(g) = s {
        arcs.push((g, 0));
        s = n.gates[g].inputs[0];
    }
    arcs.reverse();
    let p = Path { launch: s, arcs, end: Sink::FfD(f) };
    let d = 0.1 + path_delay(&n, &p);
    let (e, l) = at.at(Signal::Gate(last));
    assert!((l - d).abs() < 1e-12);
    assert!(e <= l);
}

#[test]
fn wave_classes_follow_junction_crossings() {
    let n = benchmarks::pipeline().netlist;
    let g = n.gate_index("h0").unwrap();
    let j: HashSet<(usize, usize)> = [(g, 0)].into_iter().collect();
    let wa = wave_arrivals(&n, &j, 0.1).unwrap();
    let c = n.ff_index("c").unwrap();
    let Signal::Gate(d) = n.flipflops[c].d else { panic!() };
    let [one, two] = wa.gate[d];
    // h0's second input is a primary input, so both classes reach c.
    assert!(one.1.is_finite() && two.1.is_finite());
    let (w, _) = common::two_wave_range(&n, &j, 0.1, Signal::Ff(n.ff_index("f").unwrap()), Signal::Gate(d), 100);
    let (lo, hi) = w.unwrap();
    assert!((two.1 - hi).abs() < 1e-9 && (two.0 - lo).abs() < 1e-9);
}

#[test]
fn snippet_merge_through_f_is_false() {
    let n = benchmarks::snippet().netlist;
    let f = n.ff_index("f").unwrap();
    let cfg = TimingConfig::default();
    let check = check_wp_false_paths(&n, f, &cfg, 1);
    assert!(check.count > 0);
    for (l, r) in &check.pairs {
        assert!(is_true_path(&n, l).unwrap());
        assert!(is_true_path(&n, r).unwrap());
    }
}

#[test]
fn path_truth_matches_enumeration_on_small_cones() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut falses = 0;
    for _ in 0..300 {
        let k = rng.gen_range(2..=8);
        let g = rng.gen_range(3..=14);
        let (n, p) = common::random_cone(&mut rng, k, g);
        let want = common::brute_sensitizable(&n, &p);
        let got = path_truth(&n, &p).unwrap();
        assert_ne!(got, Truth::Unknown);
        assert_eq!(got == Truth::True, want);
        falses += (!want) as usize;
    }
    assert!(falses > 10, "generator produced too few false paths: {falses}");
}

#[test]
fn retimed_weight_formula() {
    let e = Net { src: Signal::Gate(0), sink: Sink::Pin(1, 0), w: 0 };
    assert_eq!(retimed_weight(&e, &[0, 1]), 1);
    assert_eq!(retimed_weight(&e, &[-1, 1]), 2);
}

/// Random walk over lags that keeps every retimed weight non-negative.
fn random_legal_lags(n: &wavecamo::Netlist, rng: &mut ChaCha8Rng, steps: usize) -> Vec<i64> {
    let wg = WeightGraph::build(n).unwrap();
    let mut r = vec![0i64; n.gates.len()];
    for _ in 0..steps {
        let g = rng.gen_range(0..n.gates.len());
        let delta = if rng.gen_bool(0.5) { 1 } else { -1 };
        r[g] += delta;
        if wg.nets.iter().any(|e| retimed_weight(e, &r) < 0) {
            r[g] -= delta;
        }
    }
    r
}

#[test]
fn retiming_preserves_function_and_counts() {
    let n = unshare_ffs(&benchmarks::synthetic("r", 2, 3).netlist).unwrap();
    let cfg = TimingConfig { period: 1e6, ..TimingConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut moved = 0;
    for _ in 0..10 {
        let r = random_legal_lags(&n, &mut rng, 200);
        moved += r.iter().filter(|&&v| v != 0).count();
        let a = RetimingAssignment::from_vec(&n, &r);
        assert!(is_legal(&n, &a, &cfg).0);
        let m = apply_retiming(&n, &a).unwrap();
        m.validate().unwrap();
        let wg = WeightGraph::build(&n).unwrap();
        let want: i64 = wg.nets.iter().map(|e| retimed_weight(e, &r) - e.w).sum();
        assert_eq!(ff_count_delta(&n, &a), want);
        assert_eq!(m.flipflops.len() as i64 - n.flipflops.len() as i64, want);
        let vecs: Vec<Vec<bool>> = (0..60).map(|_| (0..n.inputs.len()).map(|_| rng.gen()).collect()).collect();
        let x = common::reference_run(&n, &vecs, &common::settle_state(&n, &vecs[0]));
        let y = common::reference_run(&m, &vecs, &common::settle_state(&m, &vecs[0]));
        assert_eq!(&x[20..], &y[20..]);
    }
    assert!(moved > 0);
}

#[test]
fn negative_weight_is_rejected() {
    let n = benchmarks::pipeline().netlist;
    let g = n.gate_index("g0").unwrap();
    let mut r = vec![0i64; n.gates.len()];
    r[g] = -5;
    let a = RetimingAssignment::from_vec(&n, &r);
    assert!(!is_legal(&n, &a, &TimingConfig::default()).0);
    assert!(apply_retiming(&n, &a).is_err());
}

#[test]
fn lag_document_round_trips() {
    let n = benchmarks::pipeline().netlist;
    let mut a = RetimingAssignment::default();
    a.set(&n, 1, 2);
    a.set(&n, 3, -1);
    assert_eq!(RetimingAssignment::parse(&a.to_document()).unwrap(), a);
}
