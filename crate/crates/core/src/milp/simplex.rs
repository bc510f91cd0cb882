// SPDX-License-Identifier: Apache-2.0
//! Dense bounded-variable simplex.
//!
//! A cold solve runs the two-phase primal method. After that the tableau
//! is kept: [`Lp::solve`] applies new variable bounds to the last optimal
//! basis and restores feasibility with dual simplex pivots, which is what
//! branch and bound needs between neighbouring nodes.

use super::Cmp;

const EPS: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
/// Warm solves between forced cold solves.
const REFRESH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum LpResult {
    Optimal { x: Vec<f64>, obj: f64 },
    Infeasible,
    Unbounded,
}

pub type Row = (Vec<(usize, f64)>, Cmp, f64);

/// Minimizes `c·x` subject to `rows` and `lb <= x <= ub`. Lower bounds must
/// be finite.
pub fn solve_lp(c: &[f64], rows: &[Row], lb: &[f64], ub: &[f64]) -> LpResult {
    Lp::new(c, rows).solve_cold(lb, ub)
}

/// LP with a reusable basis.
pub struct Lp<'a> {
    c: &'a [f64],
    rows: &'a [Row],
    lb: Vec<f64>,
    ub: Vec<f64>,
    tab: Option<Tableau>,
    warm: usize,
}

impl<'a> Lp<'a> {
    pub fn new(c: &'a [f64], rows: &'a [Row]) -> Lp<'a> {
        Lp {
            c,
            rows,
            lb: Vec::new(),
            ub: Vec::new(),
            tab: None,
            warm: 0,
        }
    }

    /// Solves under the given bounds, warm when a basis is available.
    pub fn solve(&mut self, lb: &[f64], ub: &[f64]) -> LpResult {
        if self.tab.is_some() && self.warm < REFRESH {
            self.warm += 1;
            if let Some(r) = self.solve_warm(lb, ub) {
                return r;
            }
        }
        self.solve_cold(lb, ub)
    }

    pub fn solve_cold(&mut self, lb: &[f64], ub: &[f64]) -> LpResult {
        self.tab = None;
        self.warm = 0;
        let n = self.c.len();
        if (0..n).any(|j| ub[j] < lb[j] - FEAS_TOL) {
            return LpResult::Infeasible;
        }
        self.lb = lb.to_vec();
        self.ub = ub.to_vec();
        let Some(mut tab) = phase_one(self.rows, n, lb, ub) else {
            return LpResult::Infeasible;
        };
        let c2 = tab.costs(self.c);
        if tab.run(&c2).is_err() {
            return LpResult::Unbounded;
        }
        let r = self.extract(&tab);
        self.tab = Some(tab);
        r
    }

    /// `None` asks for a cold solve.
    fn solve_warm(&mut self, lb: &[f64], ub: &[f64]) -> Option<LpResult> {
        let n = self.c.len();
        if (0..n).any(|j| ub[j] < lb[j] - FEAS_TOL) {
            return Some(LpResult::Infeasible);
        }
        let mut tab = self.tab.take()?;
        for j in 0..n {
            if lb[j] != self.lb[j] || ub[j] != self.ub[j] {
                tab.rebound(j, self.lb[j], lb[j], ub[j]);
            }
        }
        self.lb = lb.to_vec();
        self.ub = ub.to_vec();
        let c2 = tab.costs(self.c);
        let feasible = tab.dual(&c2)?;
        if !feasible {
            // Drift in long pivot sequences can fake this verdict; confirm cold.
            return None;
        }
        if tab.run(&c2).is_err() {
            return None;
        }
        let r = self.extract(&tab);
        if let LpResult::Optimal { x, .. } = &r {
            if !self.satisfied(x) {
                return None;
            }
        }
        self.tab = Some(tab);
        Some(r)
    }

    fn extract(&self, tab: &Tableau) -> LpResult {
        let n = self.c.len();
        let mut xs = vec![0.0; n];
        for (j, v) in xs.iter_mut().enumerate() {
            if tab.at_upper[j] {
                *v = tab.upper[j];
            }
        }
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                xs[b] = tab.val[i];
            }
        }
        let x: Vec<f64> = (0..n).map(|j| self.lb[j] + xs[j]).collect();
        let obj = (0..n).map(|j| self.c[j] * x[j]).sum();
        LpResult::Optimal { x, obj }
    }

    fn satisfied(&self, x: &[f64]) -> bool {
        let tol = 1e-6;
        for j in 0..x.len() {
            if x[j] < self.lb[j] - tol || x[j] > self.ub[j] + tol {
                return false;
            }
        }
        self.rows.iter().all(|(terms, cmp, rhs)| {
            let a: f64 = terms.iter().map(|&(j, v)| v * x[j]).sum();
            let t = tol * (1.0 + rhs.abs());
            match cmp {
                Cmp::Le => a <= rhs + t,
                Cmp::Ge => a >= rhs - t,
                Cmp::Eq => (a - rhs).abs() <= t,
            }
        })
    }
}

/// Builds the tableau in coordinates shifted by `lb`, drives artificials
/// out and drops their columns.
fn phase_one(rows: &[Row], n: usize, lb: &[f64], ub: &[f64]) -> Option<Tableau> {
    let m = rows.len();
    // Column layout: structural | one slack per inequality | one artificial per row.
    let mut slack_of = vec![usize::MAX; m];
    let mut ncol = n;
    for (i, r) in rows.iter().enumerate() {
        if r.1 != Cmp::Eq {
            slack_of[i] = ncol;
            ncol += 1;
        }
    }
    let art0 = ncol;
    ncol += m;

    let mut upper = vec![f64::INFINITY; ncol];
    for j in 0..n {
        upper[j] = (ub[j] - lb[j]).max(0.0);
    }
    let mut t = vec![vec![0.0; ncol]; m];
    let mut val = vec![0.0; m];
    let mut basis = vec![0usize; m];
    for (i, (terms, cmp, rhs)) in rows.iter().enumerate() {
        let mut b = *rhs;
        for &(j, a) in terms {
            t[i][j] += a;
            b -= a * lb[j];
        }
        let mut cmp = *cmp;
        if b < 0.0 {
            b = -b;
            t[i].iter_mut().for_each(|v| *v = -*v);
            cmp = match cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
        }
        match cmp {
            Cmp::Le => t[i][slack_of[i]] = 1.0,
            Cmp::Ge => t[i][slack_of[i]] = -1.0,
            Cmp::Eq => {}
        }
        t[i][art0 + i] = 1.0;
        basis[i] = art0 + i;
        val[i] = b;
    }
    // Le rows start on their slack instead of the artificial.
    for i in 0..m {
        let s = slack_of[i];
        if s != usize::MAX && t[i][s] == 1.0 {
            basis[i] = s;
            upper[art0 + i] = 0.0;
        }
    }
    let mut tab = Tableau {
        t,
        val,
        basis,
        upper,
        at_upper: vec![false; ncol],
        blocked: vec![false; ncol],
    };
    let mut c1 = vec![0.0; ncol];
    for i in 0..m {
        if tab.basis[i] >= art0 {
            c1[art0 + i] = 1.0;
        }
    }
    if tab.run(&c1).is_err() {
        return None;
    }
    let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= art0).map(|i| tab.val[i]).sum();
    if infeas > FEAS_TOL {
        return None;
    }
    // Pivot remaining (zero-valued) artificials out, or drop their rows
    // when nothing else can replace them.
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] < art0 {
            i += 1;
            continue;
        }
        let is_basic = tab.basic_flags();
        let k = (0..art0)
            .filter(|&k| !is_basic[k] && tab.upper[k] > EPS)
            .max_by(|&a, &b| tab.t[i][a].abs().total_cmp(&tab.t[i][b].abs()));
        match k {
            Some(k) if tab.t[i][k].abs() > 1e-7 => {
                let v = if tab.at_upper[k] { tab.upper[k] } else { 0.0 };
                let mut d = vec![0.0; ncol];
                tab.pivot(i, k, &mut d);
                tab.val[i] = v;
                i += 1;
            }
            _ => {
                tab.t.remove(i);
                tab.val.remove(i);
                tab.basis.remove(i);
            }
        }
    }
    for row in tab.t.iter_mut() {
        row.truncate(art0);
    }
    tab.upper.truncate(art0);
    tab.at_upper.truncate(art0);
    tab.blocked.truncate(art0);
    Some(tab)
}

struct Tableau {
    t: Vec<Vec<f64>>,
    val: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    blocked: Vec<bool>,
}

impl Tableau {
    fn ncol(&self) -> usize {
        self.upper.len()
    }

    fn costs(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncol()];
        out[..c.len()].copy_from_slice(c);
        out
    }

    fn basic_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.ncol()];
        for &b in &self.basis {
            f[b] = true;
        }
        f
    }

    fn reduced(&self, c: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = c.to_vec();
        for (i, row) in self.t.iter().enumerate() {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    /// Moves structural `j` from lower bound `old_lb` to `[lb, ub]`,
    /// keeping its nonbasic side.
    fn rebound(&mut self, j: usize, old_lb: f64, lb: f64, ub: f64) {
        let new_upper = (ub - lb).max(0.0);
        if let Some(r) = self.basis.iter().position(|&b| b == j) {
            self.val[r] -= lb - old_lb;
            self.upper[j] = new_upper;
            return;
        }
        let old = old_lb + if self.at_upper[j] { self.upper[j] } else { 0.0 };
        if !new_upper.is_finite() {
            self.at_upper[j] = false;
        }
        let new = lb + if self.at_upper[j] { new_upper } else { 0.0 };
        let step = new - old;
        if step != 0.0 {
            for (v, row) in self.val.iter_mut().zip(&self.t) {
                *v -= row[j] * step;
            }
        }
        self.upper[j] = new_upper;
    }

    /// Row operations for `j` entering at row `r`; values are the caller's
    /// business.
    fn pivot(&mut self, r: usize, j: usize, d: &mut [f64]) {
        self.basis[r] = j;
        self.at_upper[j] = false;
        let piv = self.t[r][j];
        for v in self.t[r].iter_mut() {
            *v /= piv;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f.abs() > 1e-14 {
                for (a, p) in row.iter_mut().zip(&prow) {
                    *a -= f * p;
                }
            }
        }
        let f = d[j];
        if f != 0.0 {
            for (a, p) in d.iter_mut().zip(&prow) {
                *a -= f * p;
            }
        }
    }

    /// Dual simplex from a dual feasible basis. `Some(false)` means the
    /// LP is infeasible; `None` means the iteration cap was hit.
    fn dual(&mut self, c: &[f64]) -> Option<bool> {
        let m = self.t.len();
        let ncol = self.ncol();
        let mut d = self.reduced(c);
        let mut is_basic = self.basic_flags();
        for _ in 0..20 * (m + ncol) + 100 {
            let mut leave = None;
            let mut worst = FEAS_TOL;
            for i in 0..m {
                let v = self.val[i];
                let u = self.upper[self.basis[i]];
                let inf = if v < 0.0 { -v } else if v > u { v - u } else { 0.0 };
                if inf > worst {
                    worst = inf;
                    leave = Some(i);
                }
            }
            let Some(r) = leave else { return Some(true) };
            let b = self.basis[r];
            let to_upper = self.val[r] > self.upper[b];
            let target = if to_upper { self.upper[b] } else { 0.0 };
            let need = self.val[r] - target;
            // Two-pass ratio test over eligible columns, as in the primal.
            let eligible = |j: usize| -> Option<f64> {
                if is_basic[j] || self.blocked[j] || self.upper[j] <= EPS {
                    return None;
                }
                let a = self.t[r][j];
                if a.abs() <= PIVOT_TOL || (need / a > 0.0) == self.at_upper[j] {
                    return None;
                }
                Some(a.abs())
            };
            let mut theta = f64::INFINITY;
            for j in 0..ncol {
                if let Some(a) = eligible(j) {
                    theta = theta.min((d[j].abs() + FEAS_TOL) / a);
                }
            }
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..ncol {
                let Some(a) = eligible(j) else { continue };
                if d[j].abs() / a > theta {
                    continue;
                }
                if enter.map_or(true, |(_, _, ba)| a > ba) {
                    enter = Some((j, d[j].abs() / a, a));
                }
            }
            let Some((j, _, _)) = enter else { return Some(false) };
            let step = need / self.t[r][j];
            for (v, row) in self.val.iter_mut().zip(&self.t) {
                *v -= row[j] * step;
            }
            let entering = if self.at_upper[j] { self.upper[j] } else { 0.0 } + step;
            self.at_upper[b] = to_upper;
            is_basic[b] = false;
            is_basic[j] = true;
            self.pivot(r, j, &mut d);
            self.val[r] = entering;
        }
        None
    }

    /// Primal simplex minimizing `c` from the current feasible basis. `Err`
    /// means unbounded.
    fn run(&mut self, c: &[f64]) -> Result<(), ()> {
        let m = self.t.len();
        let ncol = c.len();
        let mut is_basic = self.basic_flags();
        let mut d = self.reduced(c);
        let mut degenerate = 0usize;
        let mut fresh = true;
        let max_iter = 50 * (m + ncol) + 1000;
        for _ in 0..max_iter {
            let bland = degenerate > 50;
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..ncol {
                if is_basic[j] || self.blocked[j] || self.upper[j] <= EPS {
                    continue;
                }
                let gain = if self.at_upper[j] { d[j] } else { -d[j] };
                if gain > EPS && (enter.is_none() || (!bland && gain > best)) {
                    enter = Some(j);
                    best = gain;
                    if bland {
                        break;
                    }
                }
            }
            let Some(j) = enter else {
                if fresh {
                    return Ok(());
                }
                // Confirm optimality against freshly computed reduced costs.
                d = self.reduced(c);
                fresh = true;
                continue;
            };
            fresh = false;
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };
            // Two-pass ratio test: the bound-relaxed step limit first, then
            // the largest pivot among rows that block within it.
            let limit = |i: usize, relax: f64| -> Option<f64> {
                let rate = -self.t[i][j] * dir;
                if rate.abs() <= PIVOT_TOL {
                    return None;
                }
                let b = self.basis[i];
                if rate < 0.0 {
                    Some(((self.val[i] + relax) / -rate).max(0.0))
                } else if self.upper[b].is_finite() {
                    Some(((self.upper[b] - self.val[i] + relax) / rate).max(0.0))
                } else {
                    None
                }
            };
            let mut theta = f64::INFINITY;
            for i in 0..m {
                if let Some(l) = limit(i, FEAS_TOL) {
                    theta = theta.min(l);
                }
            }
            let mut leave: Option<(usize, bool)> = None;
            let mut step = f64::INFINITY;
            let mut best = 0.0;
            for i in 0..m {
                let Some(l) = limit(i, 0.0) else { continue };
                if l > theta {
                    continue;
                }
                let rate = -self.t[i][j] * dir;
                let better = match leave {
                    None => true,
                    Some((r, _)) if bland => l < step - EPS || (l <= step + EPS && self.basis[i] < self.basis[r]),
                    Some(_) => rate.abs() > best,
                };
                if better {
                    leave = Some((i, rate > 0.0));
                    step = l;
                    best = rate.abs();
                }
            }
            if self.upper[j] <= step {
                step = self.upper[j];
                leave = None;
            }
            if !step.is_finite() {
                return Err(());
            }
            degenerate = if step <= EPS { degenerate + 1 } else { 0 };
            for i in 0..m {
                self.val[i] -= self.t[i][j] * dir * step;
            }
            match leave {
                None => {
                    // Bound flip.
                    self.at_upper[j] = !self.at_upper[j];
                }
                Some((r, to_upper)) => {
                    let entering_val = if self.at_upper[j] { self.upper[j] - step } else { step };
                    let old = self.basis[r];
                    self.at_upper[old] = to_upper;
                    is_basic[old] = false;
                    is_basic[j] = true;
                    self.pivot(r, j, &mut d);
                    self.val[r] = entering_val;
                    // Snap tiny drifts.
                    for v in self.val.iter_mut() {
                        if v.abs() < 1e-11 {
                            *v = 0.0;
                        }
                    }
                }
            }
        }
        log::warn!("simplex iteration cap reached");
        Ok(())
    }
}

