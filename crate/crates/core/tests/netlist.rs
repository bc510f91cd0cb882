// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use wavecamo::benchmarks;
use wavecamo::error::NetlistError;
use wavecamo::netlist::{ff_distance, parse_bench, sequential_adjacency, write_annotations, write_bench, Placement};
use wavecamo::retiming::WeightGraph;
use wavecamo::{GateKind, Netlist, Signal};

/// Connectivity by names: (consumer, pin, driver) for gates, (ff, driver)
/// for flip-flops, drivers of outputs.
fn shape(n: &Netlist) -> (BTreeSet<(String, usize, String, String)>, BTreeSet<(String, String)>, Vec<String>) {
    let gates = n
        .gates
        .iter()
        .flat_map(|g| {
            g.inputs
                .iter()
                .enumerate()
                .map(move |(p, &s)| (g.id.clone(), p, g.kind.name().to_string(), n.signal_name(s).to_string()))
        })
        .collect();
    let ffs = n.flipflops.iter().map(|f| (f.id.clone(), n.signal_name(f.d).to_string())).collect();
    let outs = n.outputs.iter().map(|&o| n.signal_name(o).to_string()).collect();
    (gates, ffs, outs)
}

#[test]
fn minimal_circuit() {
    let n = parse_bench("INPUT(a)\nOUTPUT(b)\nb = NOT(a)\n", None).unwrap();
    assert_eq!(n.gates.len(), 1);
    assert_eq!(n.flipflops.len(), 0);
    assert_eq!(n.gates[0].kind, GateKind::Not);
}

#[test]
fn self_loop_is_a_cycle() {
    let e = parse_bench("INPUT(y)\nOUTPUT(x)\nx = AND(x, y)\n", None).unwrap_err();
    assert!(matches!(e, NetlistError::Cycle(_)), "{e:?}");
}

#[test]
fn parse_errors() {
    assert!(matches!(parse_bench("INPUT(a)\nb = FOO(a)\n", None), Err(NetlistError::UnknownKind(_))));
    assert!(matches!(parse_bench("INPUT(a)\nOUTPUT(b)\nb = AND(a, z)\n", None), Err(NetlistError::Undriven(_))));
    match parse_bench("INPUT(a)\nOUTPUT(b)\nb = AND(a\n", None) {
        Err(NetlistError::Syntax { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_netlist_round_trips() {
    let n = Netlist::new("empty", Default::default());
    let text = write_bench(&n);
    assert!(text.lines().all(|l| l.starts_with('#')));
    let back = parse_bench(&text, None).unwrap();
    assert!(back.gates.is_empty() && back.flipflops.is_empty());
}

#[test]
fn benchmarks_round_trip() {
    for b in benchmarks::all() {
        let n = &b.netlist;
        n.validate().unwrap();
        let back = parse_bench(&write_bench(n), Some(&write_annotations(n))).unwrap();
        assert_eq!(back.gates.len(), n.gates.len(), "{}", b.name);
        assert_eq!(back.flipflops.len(), n.flipflops.len(), "{}", b.name);
        assert_eq!(shape(&back), shape(n), "{}", b.name);
        let w0 = WeightGraph::build(n).unwrap().total_weight();
        let w1 = WeightGraph::build(&back).unwrap().total_weight();
        assert_eq!(w0, w1);
    }
}

#[test]
fn sizes_and_inserted_delay_survive_the_sidecar() {
    let mut n = benchmarks::pipeline().netlist;
    n.gates[2].xi = 0.75;
    let levels = n.library.levels(n.gates[3].kind);
    n.resize(3, levels - 1);
    let back = parse_bench(&write_bench(&n), Some(&write_annotations(&n))).unwrap();
    let g2 = back.gate_index(&n.gates[2].id).unwrap();
    let g3 = back.gate_index(&n.gates[3].id).unwrap();
    assert_eq!(back.gates[g2].xi, 0.75);
    assert_eq!(back.gates[g3].size_level, levels - 1);
    assert_eq!(back.gates[g3].pin_delays, n.gates[3].pin_delays);
}

#[test]
fn weight_two_net_is_two_flip_flops() {
    let n = parse_bench("INPUT(a)\nOUTPUT(z)\nq1 = DFF(x)\nq2 = DFF(q1)\nx = NOT(a)\nz = BUF(q2)\n", None).unwrap();
    let wg = WeightGraph::build(&n).unwrap();
    assert_eq!(wg.total_weight(), 2);
    let text = write_bench(&n);
    assert_eq!(text.matches("DFF(").count(), 2);
}

#[test]
fn adjacency_of_the_pipeline() {
    let n = benchmarks::pipeline().netlist;
    let adj = sequential_adjacency(&n);
    let id = |s: &str| n.ff_index(s).unwrap();
    assert!(adj.succ[id("a")].contains(&id("f")));
    assert!(adj.succ[id("f")].contains(&id("c")));
    assert!(!adj.succ[id("a")].contains(&id("c")));
    assert_eq!(ff_distance(&n, &adj, id("a"), id("c"), None).unwrap(), 2.0);
}

#[test]
fn registers_without_logic_have_no_edges() {
    let n = parse_bench("INPUT(a)\nOUTPUT(q2)\nq1 = DFF(a)\nq2 = DFF(a)\n", None).unwrap();
    let adj = sequential_adjacency(&n);
    assert!(adj.succ.iter().all(|s| s.is_empty()));
    assert_eq!(ff_distance(&n, &adj, 0, 1, None).unwrap(), f64::INFINITY);
}

#[test]
fn placement_distance() {
    let n = parse_bench("INPUT(x)\nOUTPUT(b)\na = DFF(x)\nb = DFF(a)\n", None).unwrap();
    let p = Placement::parse_csv("id,x,y\na,0,0\nb,3,4\n").unwrap();
    let adj = sequential_adjacency(&n);
    assert_eq!(ff_distance(&n, &adj, 0, 1, Some(&p)).unwrap(), 5.0);
    assert!(ff_distance(&n, &adj, 0, 7, Some(&p)).is_err());
}

#[test]
fn degrees_match_depth_first_search() {
    for b in benchmarks::all() {
        let n = &b.netlist;
        let adj = sequential_adjacency(n);
        for a in 0..n.flipflops.len() {
            // Independent reachability: forward DFS over gate inputs.
            let mut reach = vec![false; n.gates.len()];
            let mut changed = true;
            while changed {
                changed = false;
                for (g, gate) in n.gates.iter().enumerate() {
                    if !reach[g] && gate.inputs.iter().any(|&s| s == Signal::Ff(a) || matches!(s, Signal::Gate(h) if reach[h])) {
                        reach[g] = true;
                        changed = true;
                    }
                }
            }
            let sinks: BTreeSet<usize> = (0..n.flipflops.len())
                .filter(|&f| match n.flipflops[f].d {
                    Signal::Gate(g) => reach[g],
                    s => s == Signal::Ff(a),
                })
                .collect();
            assert_eq!(adj.succ[a], sinks, "{} {}", b.name, n.flipflops[a].id);
        }
    }
}
