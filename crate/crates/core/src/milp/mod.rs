// SPDX-License-Identifier: Apache-2.0
//! Mixed-integer linear programs and a branch-and-bound solver.

mod simplex;

pub use simplex::{solve_lp, Lp, LpResult};

use crate::error::MilpError;
use std::time::{Duration, Instant};

pub const TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Bookkeeping for a big-M encoded conditional.
#[derive(Clone, Debug, PartialEq)]
pub struct Indicator {
    pub guard: usize,
    /// Guard value under which the constraint is enforced.
    pub active_when: bool,
    pub rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub vars: Vec<Var>,
    pub cons: Vec<Constraint>,
    pub sense: Sense,
    pub objective: Vec<(usize, f64)>,
    pub indicators: Vec<Indicator>,
}

impl Default for MilpModel {
    fn default() -> Self {
        MilpModel {
            vars: Vec::new(),
            cons: Vec::new(),
            sense: Sense::Minimize,
            objective: Vec::new(),
            indicators: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    TimedOut,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution {
    pub status: Status,
    /// Empty when no feasible point is known.
    pub values: Vec<f64>,
    pub objective: f64,
    pub nodes: usize,
}

impl MilpSolution {
    pub fn has_point(&self) -> bool {
        !self.values.is_empty()
    }
    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }
    pub fn is_one(&self, v: usize) -> bool {
        self.values[v] > 0.5
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    pub node_limit: usize,
    pub time_limit: Duration,
    /// Stop after this many nodes without improving the incumbent.
    pub stall_limit: Option<usize>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            node_limit: 100_000,
            time_limit: Duration::from_secs(30),
            stall_limit: None,
        }
    }
}

impl MilpModel {
    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64) -> usize {
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            _ => (lb, ub),
        };
        self.vars.push(Var {
            name: name.into(),
            kind,
            lb,
            ub,
        });
        self.vars.len() - 1
    }

    pub fn binary(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lb: f64, ub: f64) -> usize {
        self.add_var(name, VarKind::Continuous, lb, ub)
    }

    pub fn add_con(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) -> usize {
        self.cons.push(Constraint {
            name: name.into(),
            terms,
            cmp,
            rhs,
        });
        self.cons.len() - 1
    }

    pub fn set_objective(&mut self, sense: Sense, terms: Vec<(usize, f64)>) {
        self.sense = sense;
        self.objective = terms;
    }

    /// Range of `terms` over the variable bounds.
    fn range(&self, terms: &[(usize, f64)]) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for &(v, a) in terms {
            let (l, u) = (self.vars[v].lb, self.vars[v].ub);
            if a >= 0.0 {
                lo += a * l;
                hi += a * u;
            } else {
                lo += a * u;
                hi += a * l;
            }
        }
        (lo, hi)
    }

    /// Adds `terms cmp rhs`, enforced only when `guard == active_when`,
    /// relaxed by `m` otherwise. `m` must cover the worst violation over
    /// the variable bounds.
    pub fn add_conditional(
        &mut self,
        name: &str,
        guard: usize,
        active_when: bool,
        terms: Vec<(usize, f64)>,
        cmp: Cmp,
        rhs: f64,
        m: f64,
    ) -> Result<(), MilpError> {
        if guard >= self.vars.len() {
            return Err(MilpError::UnknownVar(guard));
        }
        let (lo, hi) = self.range(&terms);
        let need = match cmp {
            Cmp::Le => hi - rhs,
            Cmp::Ge => rhs - lo,
            Cmp::Eq => (hi - rhs).max(rhs - lo),
        };
        if !(need <= m) {
            return Err(MilpError::WeakBigM { m, need });
        }
        // Relaxation slack is m*guard when active on 0, m*(1-guard) when active on 1.
        let (coef, shift) = if active_when { (-1.0, 1.0) } else { (1.0, 0.0) };
        let mut rows = Vec::new();
        let mut push = |model: &mut MilpModel, cmp: Cmp, sign: f64| {
            let mut t = terms.clone();
            // terms - sign*m*(coef*guard + shift) cmp rhs
            t.push((guard, -sign * m * coef));
            rows.push(model.add_con(name, t, cmp, rhs + sign * m * shift));
        };
        match cmp {
            Cmp::Le => push(self, Cmp::Le, 1.0),
            Cmp::Ge => push(self, Cmp::Ge, -1.0),
            Cmp::Eq => {
                push(self, Cmp::Le, 1.0);
                push(self, Cmp::Ge, -1.0);
            }
        }
        self.indicators.push(Indicator {
            guard,
            active_when,
            rows,
        });
        Ok(())
    }

    /// Adds `terms cmp rhs` relaxed by `m * guard`, where `guard` is a
    /// linear expression that is 0 when the constraint must hold and at
    /// least 1 otherwise.
    pub fn add_relaxed(
        &mut self,
        name: &str,
        terms: &LinExpr,
        cmp: Cmp,
        rhs: f64,
        guard: &LinExpr,
        m: f64,
    ) -> Result<(), MilpError> {
        if guard.terms.is_empty() {
            if guard.constant.abs() < TOL {
                self.add_con(name, terms.terms.clone(), cmp, rhs - terms.constant);
            }
            return Ok(());
        }
        let (lo, hi) = self.range(&terms.terms);
        let need = match cmp {
            Cmp::Le => hi + terms.constant - rhs,
            Cmp::Ge => rhs - lo - terms.constant,
            Cmp::Eq => (hi + terms.constant - rhs).max(rhs - lo - terms.constant),
        };
        if !(need <= m) {
            return Err(MilpError::WeakBigM { m, need });
        }
        let add = |model: &mut MilpModel, cmp: Cmp, sign: f64| {
            let mut t = terms.terms.clone();
            for &(v, a) in &guard.terms {
                t.push((v, -sign * m * a));
            }
            model.add_con(name, t, cmp, rhs - terms.constant + sign * m * guard.constant);
        };
        match cmp {
            Cmp::Le => add(self, Cmp::Le, 1.0),
            Cmp::Ge => add(self, Cmp::Ge, -1.0),
            Cmp::Eq => {
                add(self, Cmp::Le, 1.0);
                add(self, Cmp::Ge, -1.0);
            }
        }
        Ok(())
    }

    /// Adds `lhs cmp rhs` for expressions on both sides.
    pub fn add_expr(&mut self, name: &str, lhs: &LinExpr, cmp: Cmp, rhs: &LinExpr) -> usize {
        let d = lhs.sub(rhs);
        self.add_con(name, d.terms, cmp, -d.constant)
    }

    pub fn check_model(&self) -> Result<(), MilpError> {
        for c in &self.cons {
            if let Some(&(v, _)) = c.terms.iter().find(|t| t.0 >= self.vars.len()) {
                return Err(MilpError::UnknownVar(v));
            }
        }
        if let Some(&(v, _)) = self.objective.iter().find(|t| t.0 >= self.vars.len()) {
            return Err(MilpError::UnknownVar(v));
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, a)| a * x[v]).sum()
    }

    /// Names of constraints and bounds violated by `x` beyond `tol`.
    pub fn violations(&self, x: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (i, v) in self.vars.iter().enumerate() {
            if x[i] < v.lb - tol || x[i] > v.ub + tol {
                out.push(format!("bound {}", v.name));
            }
            if v.kind != VarKind::Continuous && (x[i] - x[i].round()).abs() > tol {
                out.push(format!("integrality {}", v.name));
            }
        }
        for c in &self.cons {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * x[v]).sum();
            let bad = match c.cmp {
                Cmp::Le => lhs > c.rhs + tol,
                Cmp::Ge => lhs < c.rhs - tol,
                Cmp::Eq => (lhs - c.rhs).abs() > tol,
            };
            if bad {
                out.push(c.name.clone());
            }
        }
        out
    }

    /// CPLEX LP text.
    pub fn to_lp_format(&self) -> String {
        let name = |v: usize| format!("x{}_{}", v, sanitize(&self.vars[v].name));
        let expr = |terms: &[(usize, f64)]| {
            if terms.is_empty() {
                return "0 x0_dummy".to_string();
            }
            terms
                .iter()
                .map(|&(v, a)| format!("{} {} {}", if a < 0.0 { "-" } else { "+" }, a.abs(), name(v)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        s += match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        };
        s += &format!(" obj: {}\nSubject To\n", expr(&self.objective));
        for (i, c) in self.cons.iter().enumerate() {
            let op = match c.cmp {
                Cmp::Le => "<=",
                Cmp::Eq => "=",
                Cmp::Ge => ">=",
            };
            s += &format!(" c{}_{}: {} {} {}\n", i, sanitize(&c.name), expr(&c.terms), op, c.rhs);
        }
        s += "Bounds\n";
        for (i, v) in self.vars.iter().enumerate() {
            let ub = if v.ub.is_finite() { v.ub.to_string() } else { "+inf".into() };
            let lb = if v.lb.is_finite() { v.lb.to_string() } else { "-inf".into() };
            s += &format!(" {} <= {} <= {}\n", lb, name(i), ub);
        }
        let ints: Vec<String> = (0..self.vars.len())
            .filter(|&i| self.vars[i].kind == VarKind::Integer)
            .map(name)
            .collect();
        if !ints.is_empty() {
            s += &format!("General\n {}\n", ints.join(" "));
        }
        let bins: Vec<String> = (0..self.vars.len())
            .filter(|&i| self.vars[i].kind == VarKind::Binary)
            .map(name)
            .collect();
        if !bins.is_empty() {
            s += &format!("Binary\n {}\n", bins.join(" "));
        }
        s += "End\n";
        s
    }
}

/// Affine expression `constant + Σ coef·var`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> LinExpr {
        LinExpr { constant: c, terms: Vec::new() }
    }
    pub fn var(v: usize) -> LinExpr {
        LinExpr { constant: 0.0, terms: vec![(v, 1.0)] }
    }
    pub fn add(&self, o: &LinExpr) -> LinExpr {
        let mut t = self.terms.clone();
        t.extend_from_slice(&o.terms);
        LinExpr { constant: self.constant + o.constant, terms: t }.compact()
    }
    pub fn sub(&self, o: &LinExpr) -> LinExpr {
        self.add(&o.scale(-1.0))
    }
    pub fn scale(&self, k: f64) -> LinExpr {
        LinExpr {
            constant: self.constant * k,
            terms: self.terms.iter().map(|&(v, a)| (v, a * k)).collect(),
        }
    }
    pub fn plus(&self, c: f64) -> LinExpr {
        LinExpr { constant: self.constant + c, terms: self.terms.clone() }
    }
    pub fn plus_var(&self, v: usize, a: f64) -> LinExpr {
        self.add(&LinExpr { constant: 0.0, terms: vec![(v, a)] })
    }
    /// Merges repeated variables and drops zero coefficients.
    pub fn compact(mut self) -> LinExpr {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (v, a) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += a,
                _ => out.push((v, a)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, a)| a * x[v]).sum::<f64>()
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// Branch and bound over LP relaxations. Branching picks the most
/// fractional integer variable, ties going to the lowest index; the child
/// nearer the fractional value is explored first.
pub fn solve(m: &MilpModel, budget: Budget) -> Result<MilpSolution, MilpError> {
    m.check_model()?;
    let n = m.vars.len();
    let flip = if m.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut c = vec![0.0; n];
    for &(v, a) in &m.objective {
        c[v] += flip * a;
    }
    let rows: Vec<(Vec<(usize, f64)>, Cmp, f64)> =
        m.cons.iter().map(|k| (k.terms.clone(), k.cmp, k.rhs)).collect();
    let mut lb: Vec<f64> = m.vars.iter().map(|v| v.lb).collect();
    let mut ub: Vec<f64> = m.vars.iter().map(|v| v.ub).collect();
    for (i, v) in m.vars.iter().enumerate() {
        if v.kind != VarKind::Continuous {
            lb[i] = (lb[i] - TOL).ceil();
            ub[i] = (ub[i] + TOL).floor();
        }
    }
    let start = Instant::now();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut timed_out = false;
    let mut improved_at = 0usize;
    // Stack of (lb, ub, parent bound).
    let mut stack = vec![(lb, ub, f64::NEG_INFINITY)];
    let mut lp = Lp::new(&c, &rows);
    while let Some((lb, ub, parent)) = stack.pop() {
        let stalled = best.is_some() && budget.stall_limit.map_or(false, |k| nodes - improved_at >= k);
        if nodes >= budget.node_limit || start.elapsed() > budget.time_limit || stalled {
            timed_out = true;
            break;
        }
        nodes += 1;
        if let Some((inc, _)) = &best {
            if parent >= *inc - TOL {
                continue;
            }
        }
        let (x, obj) = match lp.solve(&lb, &ub) {
            LpResult::Optimal { x, obj } => (x, obj),
            LpResult::Infeasible => continue,
            LpResult::Unbounded => {
                if nodes == 1 {
                    return Err(MilpError::Unbounded);
                }
                continue;
            }
        };
        if let Some((inc, _)) = &best {
            if obj >= *inc - TOL {
                continue;
            }
        }
        let mut pick: Option<(usize, f64)> = None;
        for (i, v) in m.vars.iter().enumerate() {
            if v.kind == VarKind::Continuous {
                continue;
            }
            let f = x[i] - x[i].floor();
            let score = f.min(1.0 - f);
            if score > TOL && pick.map_or(true, |(_, s)| score > s + 1e-12) {
                pick = Some((i, score));
            }
        }
        match pick {
            None => {
                let mut xr = x;
                for (i, v) in m.vars.iter().enumerate() {
                    if v.kind != VarKind::Continuous {
                        xr[i] = xr[i].round();
                    }
                }
                best = Some((obj, xr));
                improved_at = nodes;
            }
            Some((i, _)) => {
                let fl = x[i].floor();
                let mut down = (lb.clone(), ub.clone(), obj);
                down.1[i] = fl;
                let mut up = (lb, ub, obj);
                up.0[i] = fl + 1.0;
                if x[i] - fl < 0.5 {
                    stack.push(up);
                    stack.push(down);
                } else {
                    stack.push(down);
                    stack.push(up);
                }
            }
        }
    }
    Ok(match best {
        Some((obj, x)) => MilpSolution {
            status: if timed_out { Status::TimedOut } else { Status::Optimal },
            objective: flip * obj,
            values: x,
            nodes,
        },
        None => MilpSolution {
            status: if timed_out { Status::TimedOut } else { Status::Infeasible },
            objective: f64::NAN,
            values: Vec::new(),
            nodes,
        },
    })
}
