// SPDX-License-Identifier: Apache-2.0

mod common;

use proptest::prelude::*;
use wavecamo::milp::{self, solve_lp, Budget, Cmp, Lp, LpResult, MilpModel, Sense, Status, VarKind};
use wavecamo::sat::{self, Cnf, Lit, SatResult};

fn brute_sat(cnf: &Cnf) -> bool {
    (0u32..1 << cnf.num_vars).any(|m| {
        let model: Vec<bool> = (0..cnf.num_vars).map(|i| (m >> i) & 1 == 1).collect();
        cnf.eval(&model)
    })
}

fn cnf_strategy() -> impl Strategy<Value = Cnf> {
    (1usize..=10).prop_flat_map(|nv| {
        prop::collection::vec(prop::collection::vec((0..nv, any::<bool>()), 0..=4), 0..=40).prop_map(move |cs| Cnf {
            num_vars: nv,
            clauses: cs.into_iter().map(|c| c.into_iter().map(|(v, s)| Lit::new(v, s)).collect()).collect(),
        })
    })
}

proptest! {
    #[test]
    fn sat_agrees_with_brute_force(cnf in cnf_strategy()) {
        match sat::solve(&cnf, 1_000_000) {
            SatResult::Sat(model) => prop_assert!(cnf.eval(&model)),
            SatResult::Unsat => prop_assert!(!brute_sat(&cnf)),
            SatResult::Unknown => prop_assert!(false, "budget exhausted"),
        }
    }
}

#[test]
fn dimacs_header() {
    let mut cnf = Cnf::default();
    let a = cnf.new_var();
    let b = cnf.new_var();
    cnf.add(vec![Lit::new(a, true), Lit::new(b, false)]);
    assert_eq!(cnf.to_dimacs(), "p cnf 2 1\n1 -2 0\n");
}

/// Random LP with box bounds, so it is never unbounded.
fn lp_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<(Vec<(usize, f64)>, Cmp, f64)>, Vec<f64>, Vec<f64>)> {
    (2usize..=6, 1usize..=6).prop_flat_map(|(n, m)| {
        let c = prop::collection::vec(-5i32..=5, n);
        let rows = prop::collection::vec(
            (prop::collection::vec(-4i32..=4, n), 0usize..3, -10i32..=20),
            m,
        );
        let lb = prop::collection::vec(-3i32..=1, n);
        let span = prop::collection::vec(1i32..=6, n);
        (c, rows, lb, span).prop_map(|(c, rows, lb, span)| {
            let rows = rows
                .into_iter()
                .map(|(a, k, b)| {
                    let cmp = [Cmp::Le, Cmp::Ge, Cmp::Eq][k];
                    let terms = a.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, &v)| (j, v as f64)).collect();
                    (terms, cmp, b as f64)
                })
                .collect();
            let lbf: Vec<f64> = lb.iter().map(|&v| v as f64).collect();
            let ubf: Vec<f64> = lb.iter().zip(&span).map(|(&l, &s)| (l + s) as f64).collect();
            (c.into_iter().map(|v| v as f64).collect(), rows, lbf, ubf)
        })
    })
}

fn feasible(rows: &[(Vec<(usize, f64)>, Cmp, f64)], lb: &[f64], ub: &[f64], x: &[f64]) -> bool {
    let tol = 1e-6;
    x.iter().zip(lb.iter().zip(ub)).all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
        && rows.iter().all(|(t, cmp, b)| {
            let a: f64 = t.iter().map(|&(j, v)| v * x[j]).sum();
            match cmp {
                Cmp::Le => a <= b + tol,
                Cmp::Ge => a >= b - tol,
                Cmp::Eq => (a - b).abs() <= tol,
            }
        })
}

/// Optimum over the integer lattice inside the box, a lower bound check
/// for minimization when the LP optimum happens to be integral.
fn lattice_best(c: &[f64], rows: &[(Vec<(usize, f64)>, Cmp, f64)], lb: &[f64], ub: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut x: Vec<f64> = lb.to_vec();
    let mut best: Option<f64> = None;
    loop {
        if feasible(rows, lb, ub, &x) {
            let v: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            x[i] += 1.0;
            if x[i] <= ub[i] {
                break;
            }
            x[i] = lb[i];
            i += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp_optimum_is_feasible_and_bounds_the_lattice((c, rows, lb, ub) in lp_strategy()) {
        let r = solve_lp(&c, &rows, &lb, &ub);
        let lattice = lattice_best(&c, &rows, &lb, &ub);
        match r {
            LpResult::Optimal { x, obj } => {
                prop_assert!(feasible(&rows, &lb, &ub, &x));
                let v: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                prop_assert!((v - obj).abs() < 1e-6);
                if let Some(l) = lattice {
                    prop_assert!(obj <= l + 1e-6);
                }
            }
            LpResult::Infeasible => prop_assert!(lattice.is_none()),
            LpResult::Unbounded => prop_assert!(false, "boxed LP reported unbounded"),
        }
    }

    #[test]
    fn warm_start_matches_cold(
        (c, rows, lb, ub) in lp_strategy(),
        cuts in prop::collection::vec((0usize..6, any::<bool>()), 1..12),
    ) {
        let mut warm = Lp::new(&c, &rows);
        let mut lb = lb;
        let mut ub = ub;
        warm.solve(&lb, &ub);
        for (j, up) in cuts {
            let j = j % c.len();
            // Tighten one side by one unit, the way branching does.
            if up { lb[j] += 1.0 } else { ub[j] -= 1.0 }
            let a = warm.solve(&lb, &ub);
            let b = solve_lp(&c, &rows, &lb, &ub);
            match (&a, &b) {
                (LpResult::Optimal { obj: x, .. }, LpResult::Optimal { obj: y, .. }) => prop_assert!((x - y).abs() < 1e-6, "{x} vs {y}"),
                (LpResult::Infeasible, LpResult::Infeasible) => {}
                _ => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }
    }
}

#[test]
fn milp_matches_enumeration() {
    for seed in 0..300 {
        let m = common::random_model(seed, seed % 2 == 1);
        let want = common::enumerate_milp(&m);
        let got = milp::solve(&m, Budget::default()).unwrap();
        match want {
            None => assert_eq!(got.status, Status::Infeasible, "seed {seed}"),
            Some(w) => {
                assert_eq!(got.status, Status::Optimal, "seed {seed}");
                assert!((got.objective - w).abs() <= 1e-6, "seed {seed}: {} vs {w}", got.objective);
                assert!(m.violations(&got.values, 1e-6).is_empty());
            }
        }
    }
}

#[test]
fn conditional_rows_follow_the_guard() {
    // max x subject to x <= 2 when g = 1, x <= 5 otherwise, with cost on g.
    let mut m = MilpModel::default();
    let g = m.binary("g");
    let x = m.continuous("x", 0.0, 10.0);
    m.add_conditional("cap", g, true, vec![(x, 1.0)], Cmp::Le, 2.0, 20.0).unwrap();
    m.add_con("soft", vec![(x, 1.0), (g, -3.0)], Cmp::Le, 2.0);
    m.set_objective(Sense::Maximize, vec![(x, 1.0)]);
    let s = milp::solve(&m, Budget::default()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    // g = 1 caps x at 2; g = 0 caps x at 2 through the soft row too.
    assert!((s.objective - 2.0).abs() < 1e-9);
    assert!(matches!(
        m.add_conditional("weak", g, true, vec![(x, 1.0)], Cmp::Le, 2.0, 1.0),
        Err(wavecamo::error::MilpError::WeakBigM { .. })
    ));
}

#[test]
fn integer_variables_branch() {
    let mut m = MilpModel::default();
    let a = m.add_var("a", VarKind::Integer, 0.0, 10.0);
    let b = m.add_var("b", VarKind::Integer, 0.0, 10.0);
    m.add_con("r", vec![(a, 2.0), (b, 2.0)], Cmp::Le, 7.0);
    m.set_objective(Sense::Maximize, vec![(a, 1.0), (b, 1.0)]);
    let s = milp::solve(&m, Budget::default()).unwrap();
    assert_eq!(s.objective, 3.0);
}

#[test]
fn node_budget_keeps_the_incumbent() {
    let m = common::random_model(7, false);
    let s = milp::solve(&m, Budget { node_limit: 1, ..Budget::default() }).unwrap();
    assert!(matches!(s.status, Status::Optimal | Status::TimedOut | Status::Infeasible));
    if s.has_point() {
        assert!(m.violations(&s.values, 1e-6).is_empty());
    }
}
