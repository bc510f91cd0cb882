// SPDX-License-Identifier: Apache-2.0
//! Small DPLL solver with two-watched-literal unit propagation.

/// Literal encoded as `2*var + negated`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: usize, positive: bool) -> Lit {
        Lit((var as u32) << 1 | (!positive) as u32)
    }
    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }
    pub fn positive(self) -> bool {
        self.0 & 1 == 0
    }
    pub fn neg(self) -> Lit {
        Lit(self.0 ^ 1)
    }
    fn idx(self) -> usize {
        self.0 as usize
    }
    /// DIMACS integer form.
    pub fn dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.positive() {
            v
        } else {
            -v
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }
    pub fn add(&mut self, c: Vec<Lit>) {
        self.clauses.push(c);
    }
    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                s += &format!("{} ", l.dimacs());
            }
            s += "0\n";
        }
        s
    }
    /// Evaluates the formula under a full assignment.
    pub fn eval(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| model[l.var()] == l.positive()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SatResult {
    Sat(Vec<bool>),
    Unsat,
    Unknown,
}

const UNASSIGNED: u8 = 2;

pub fn solve(cnf: &Cnf, decision_limit: u64) -> SatResult {
    let nv = cnf.num_vars;
    let mut value = vec![UNASSIGNED; nv];
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut units: Vec<Lit> = Vec::new();
    for c in &cnf.clauses {
        let mut c = c.clone();
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0].var() == w[1].var()) {
            continue;
        }
        match c.len() {
            0 => return SatResult::Unsat,
            1 => units.push(c[0]),
            _ => clauses.push(c),
        }
    }
    let mut watches: Vec<Vec<usize>> = vec![Vec::new(); 2 * nv];
    for (ci, c) in clauses.iter().enumerate() {
        watches[c[0].neg().idx()].push(ci);
        watches[c[1].neg().idx()].push(ci);
    }
    let lit_val = |value: &[u8], l: Lit| -> u8 {
        match value[l.var()] {
            UNASSIGNED => UNASSIGNED,
            v => (v == 1) as u8 ^ (!l.positive()) as u8,
        }
    };
    let mut trail: Vec<Lit> = Vec::new();
    // Trail index where each decision level starts, and whether the
    // decision's flipped branch was already tried.
    let mut levels: Vec<(usize, bool)> = Vec::new();
    let mut qhead = 0usize;
    let mut decisions = 0u64;

    let assign = |value: &mut Vec<u8>, trail: &mut Vec<Lit>, l: Lit| {
        value[l.var()] = l.positive() as u8;
        trail.push(l);
    };
    for &u in &units {
        match lit_val(&value, u) {
            0 => return SatResult::Unsat,
            1 => {}
            _ => assign(&mut value, &mut trail, u),
        }
    }
    loop {
        // Propagate.
        let mut conflict = false;
        while qhead < trail.len() {
            let falsified = trail[qhead];
            qhead += 1;
            let wl = std::mem::take(&mut watches[falsified.idx()]);
            let mut keep = Vec::with_capacity(wl.len());
            let mut i = 0;
            while i < wl.len() {
                let ci = wl[i];
                i += 1;
                let c = &mut clauses[ci];
                if c[0] == falsified.neg() {
                    c.swap(0, 1);
                }
                if lit_val(&value, c[0]) == 1 {
                    keep.push(ci);
                    continue;
                }
                if let Some(k) = (2..c.len()).find(|&k| lit_val(&value, c[k]) != 0) {
                    c.swap(1, k);
                    watches[c[1].neg().idx()].push(ci);
                    continue;
                }
                keep.push(ci);
                match lit_val(&value, c[0]) {
                    0 => {
                        conflict = true;
                        keep.extend_from_slice(&wl[i..]);
                        break;
                    }
                    UNASSIGNED => {
                        let l = c[0];
                        assign(&mut value, &mut trail, l);
                    }
                    _ => {}
                }
            }
            watches[falsified.idx()].extend(keep);
            if conflict {
                break;
            }
        }
        if conflict {
            // Chronological backtracking to the last untried decision.
            loop {
                let Some((start, flipped)) = levels.pop() else {
                    return SatResult::Unsat;
                };
                let dec = trail[start];
                for l in trail.drain(start..) {
                    value[l.var()] = UNASSIGNED;
                }
                qhead = start;
                if !flipped {
                    levels.push((start, true));
                    assign(&mut value, &mut trail, dec.neg());
                    break;
                }
            }
            continue;
        }
        let Some(v) = (0..nv).find(|&v| value[v] == UNASSIGNED) else {
            return SatResult::Sat(value.iter().map(|&x| x == 1).collect());
        };
        decisions += 1;
        if decisions > decision_limit {
            return SatResult::Unknown;
        }
        levels.push((trail.len(), false));
        assign(&mut value, &mut trail, Lit::new(v, false));
    }
}
