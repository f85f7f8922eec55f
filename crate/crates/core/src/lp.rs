//! Exact two-phase simplex over arbitrary-precision rationals.
//!
//! All variables are nonnegative. Duals follow the usual sign convention for
//! the given sense: for a maximization, `≤` rows get `y ≥ 0`, `≥` rows get
//! `y ≤ 0`, equality rows are free, and `Aᵀy ≥ c`. For a minimization all
//! inequalities flip. At an optimum `bᵀy` equals the objective exactly.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::scalar::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub sense: Sense,
    pub objective: Vec<(usize, Rational)>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: Status,
    /// Objective at `primal`; meaningful for optimal and unbounded results.
    pub objective: Rational,
    pub primal: Vec<Rational>,
    /// Row multipliers at an optimum; a Farkas certificate when infeasible.
    pub dual: Vec<Rational>,
    /// Improving direction when unbounded.
    pub ray: Option<Vec<Rational>>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LinearProgram { num_vars, sense, objective: Vec::new(), rows: Vec::new() }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) -> usize {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.rows.push(Row { coeffs, relation, rhs });
        self.rows.len() - 1
    }

    fn objective_dense(&self) -> Vec<Rational> {
        let mut c = vec![Rational::zero(); self.num_vars];
        for (j, v) in &self.objective {
            c[*j] += v;
        }
        c
    }

    pub fn objective_at(&self, x: &[Rational]) -> Rational {
        self.objective.iter().map(|(j, c)| c * &x[*j]).sum()
    }

    /// Writes the program in CPLEX LP text format, for cross-checking with
    /// external solvers.
    pub fn to_lp_format(&self) -> String {
        let term = |coeffs: &[(usize, Rational)]| {
            let mut s = String::new();
            for (j, c) in coeffs {
                let sign = if c.is_negative() { "-" } else { "+" };
                let _ = write!(s, " {sign} {} x{j}", format_rational(&c.abs()));
            }
            if s.is_empty() {
                s.push_str(" 0 x0");
            }
            s
        };
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Maximize => "Maximize\n",
            Sense::Minimize => "Minimize\n",
        });
        let _ = writeln!(out, " obj:{}", term(&self.objective));
        out.push_str("Subject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let op = match r.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, " r{i}:{} {op} {}", term(&r.coeffs), format_rational(&r.rhs));
        }
        out.push_str("End\n");
        out
    }
}

struct Tableau {
    /// `m` rows of `ncols + 1` entries; the last entry is the right-hand side.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

const DEGENERACY_LIMIT: usize = 50;

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize, obj: &mut [Rational]) {
        let inv = Rational::one() / &self.t[r][c];
        for v in self.t[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let prow = std::mem::take(&mut self.t[r]);
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                row[j] -= &f * &prow[j];
            }
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for &j in &nz {
                obj[j] -= &f * &prow[j];
            }
        }
        self.t[r] = prow;
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reduced costs `c_j − c_Bᵀ B⁻¹A_j`; the last entry is `−c_Bᵀx_B`.
    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut obj: Vec<Rational> = cost.to_vec();
        obj.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for (j, v) in self.t[i].iter().enumerate() {
                if !v.is_zero() {
                    obj[j] -= &cost[b] * v;
                }
            }
        }
        obj
    }

    /// Maximizes over columns not in `barred`; `obj` holds reduced costs.
    fn run(&mut self, obj: &mut [Rational], barred: &[bool]) -> Outcome {
        let rhs = self.ncols;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            let entering = if bland {
                (0..self.ncols).find(|&j| !barred[j] && obj[j].is_positive())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..self.ncols {
                    if !barred[j] && obj[j].is_positive() && best.is_none_or(|b| obj[j] > obj[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else { return Outcome::Optimal };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.t.len() {
                let a = &self.t[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.t[i][rhs] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else { return Outcome::Unbounded(c) };
            if ratio.is_zero() {
                degenerate += 1;
                if degenerate > DEGENERACY_LIMIT {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c, obj);
        }
    }
}

/// Solves `lp` exactly. Deterministic: equal inputs give equal pivots.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.num_vars;
    let m = lp.rows.len();
    let mut c = lp.objective_dense();
    if lp.sense == Sense::Minimize {
        c.iter_mut().for_each(|v| *v = -v.clone());
    }

    // Normalize rows to a nonnegative right-hand side; `≥ 0` rows are also
    // flipped so that every such row starts feasible on a slack.
    let mut flip = vec![false; m];
    let mut rels = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        let f = row.rhs.is_negative() || (row.rhs.is_zero() && row.relation == Relation::Ge);
        flip[i] = f;
        rels.push(match (row.relation, f) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => r,
        });
    }
    let n_slack = rels.iter().filter(|r| **r != Relation::Eq).count();
    let n_art = rels.iter().filter(|r| **r != Relation::Le).count();
    let ncols = n + n_slack + n_art;
    let art_start = n + n_slack;

    let mut t = vec![vec![Rational::zero(); ncols + 1]; m];
    let mut unit = vec![0usize; m];
    let mut basis = vec![0usize; m];
    let (mut ns, mut na) = (0, 0);
    for (i, row) in lp.rows.iter().enumerate() {
        let sgn = if flip[i] { -Rational::one() } else { Rational::one() };
        for (j, v) in &row.coeffs {
            t[i][*j] += &sgn * v;
        }
        t[i][ncols] = &sgn * &row.rhs;
        match rels[i] {
            Relation::Le => {
                t[i][n + ns] = Rational::one();
                unit[i] = n + ns;
                ns += 1;
            }
            Relation::Ge => {
                t[i][n + ns] = -Rational::one();
                ns += 1;
                t[i][art_start + na] = Rational::one();
                unit[i] = art_start + na;
                na += 1;
            }
            Relation::Eq => {
                t[i][art_start + na] = Rational::one();
                unit[i] = art_start + na;
                na += 1;
            }
        }
        basis[i] = unit[i];
    }
    let mut tab = Tableau { t, basis, ncols, pivots: 0 };
    let mut barred = vec![false; ncols];

    // With a unit column u_i per row, y_i = c(u_i) − r(u_i); undo the row
    // flip, then the sign change of a minimization.
    let duals = |obj: &[Rational], cost: &[Rational], negate: bool| -> Vec<Rational> {
        (0..m)
            .map(|i| {
                let y = &cost[unit[i]] - &obj[unit[i]];
                if flip[i] != negate { -y } else { y }
            })
            .collect()
    };

    if n_art > 0 {
        let mut cost1 = vec![Rational::zero(); ncols];
        for v in cost1.iter_mut().skip(art_start) {
            *v = -Rational::one();
        }
        let mut obj = tab.reduced_costs(&cost1);
        // Phase one is bounded above by zero, so it always ends optimal.
        let _ = tab.run(&mut obj, &barred);
        let value = -obj[ncols].clone();
        if value.is_negative() {
            // Phase-one duals form a Farkas certificate in original row space.
            return LpSolution {
                status: Status::Infeasible,
                objective: Rational::zero(),
                primal: vec![Rational::zero(); n],
                dual: duals(&obj, &cost1, false),
                ray: None,
                pivots: tab.pivots,
            };
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] < art_start {
                continue;
            }
            if let Some(col) = (0..art_start).find(|&j| !tab.t[r][j].is_zero()) {
                let mut dummy = vec![Rational::zero(); ncols + 1];
                tab.pivot(r, col, &mut dummy);
            }
        }
        for b in barred.iter_mut().skip(art_start) {
            *b = true;
        }
    }

    let mut cost2 = vec![Rational::zero(); ncols];
    cost2[..n].clone_from_slice(&c);
    let mut obj = tab.reduced_costs(&cost2);
    let outcome = tab.run(&mut obj, &barred);

    let mut primal = vec![Rational::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            primal[b] = tab.t[i][ncols].clone();
        }
    }
    let objective = lp.objective_at(&primal);
    match outcome {
        Outcome::Optimal => LpSolution {
            status: Status::Optimal,
            objective,
            primal,
            dual: duals(&obj, &cost2, lp.sense == Sense::Minimize),
            ray: None,
            pivots: tab.pivots,
        },
        Outcome::Unbounded(col) => {
            let mut ray = vec![Rational::zero(); n];
            if col < n {
                ray[col] = Rational::one();
            }
            for (i, &b) in tab.basis.iter().enumerate() {
                if b < n {
                    ray[b] = -tab.t[i][col].clone();
                }
            }
            LpSolution {
                status: Status::Unbounded,
                objective,
                primal,
                dual: Vec::new(),
                ray: Some(ray),
                pivots: tab.pivots,
            }
        }
    }
}

fn row_value(row: &Row, x: &[Rational]) -> Rational {
    row.coeffs.iter().map(|(j, v)| v * &x[*j]).sum()
}

fn primal_feasible(lp: &LinearProgram, x: &[Rational]) -> bool {
    x.len() == lp.num_vars
        && x.iter().all(|v| !v.is_negative())
        && lp.rows.iter().all(|r| {
            let a = row_value(r, x);
            match r.relation {
                Relation::Le => a <= r.rhs,
                Relation::Eq => a == r.rhs,
                Relation::Ge => a >= r.rhs,
            }
        })
}

/// `Aᵀy` as a dense vector.
fn transpose_times(lp: &LinearProgram, y: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); lp.num_vars];
    for (row, yi) in lp.rows.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (j, v) in &row.coeffs {
            out[*j] += v * yi;
        }
    }
    out
}

/// Whether a multiplier has the sign its row admits. For a maximization
/// (or a Farkas certificate) `≤` rows need `y ≥ 0` and `≥` rows `y ≤ 0`.
fn sign_ok(rel: Relation, y: &Rational, sense: Sense) -> bool {
    let (le_nonneg, ge_nonpos) = match sense {
        Sense::Maximize => (!y.is_negative(), !y.is_positive()),
        Sense::Minimize => (!y.is_positive(), !y.is_negative()),
    };
    match rel {
        Relation::Le => le_nonneg,
        Relation::Ge => ge_nonpos,
        Relation::Eq => true,
    }
}

/// Independently rechecks a solution with exact arithmetic.
///
/// Optimal: primal and dual feasibility, complementary slackness and equal
/// objectives. Infeasible: the Farkas certificate. Unbounded: a feasible
/// point and an improving recession direction.
pub fn verify(lp: &LinearProgram, sol: &LpSolution) -> bool {
    let c = lp.objective_dense();
    match sol.status {
        Status::Optimal => {
            let x = &sol.primal;
            let y = &sol.dual;
            if !primal_feasible(lp, x) || y.len() != lp.rows.len() {
                return false;
            }
            if !lp.rows.iter().zip(y).all(|(r, yi)| sign_ok(r.relation, yi, lp.sense)) {
                return false;
            }
            let aty = transpose_times(lp, y);
            let dual_ok = aty.iter().zip(&c).all(|(a, cj)| match lp.sense {
                Sense::Maximize => a >= cj,
                Sense::Minimize => a <= cj,
            });
            if !dual_ok {
                return false;
            }
            let slack_ok = lp.rows.iter().zip(y).all(|(r, yi)| yi.is_zero() || row_value(r, x) == r.rhs);
            let reduced_ok = (0..lp.num_vars).all(|j| x[j].is_zero() || aty[j] == c[j]);
            let by: Rational = lp.rows.iter().zip(y).map(|(r, yi)| &r.rhs * yi).sum();
            slack_ok && reduced_ok && by == lp.objective_at(x) && by == sol.objective
        }
        Status::Infeasible => {
            let y = &sol.dual;
            if y.len() != lp.rows.len() {
                return false;
            }
            if !lp.rows.iter().zip(y).all(|(r, yi)| sign_ok(r.relation, yi, Sense::Maximize)) {
                return false;
            }
            let by: Rational = lp.rows.iter().zip(y).map(|(r, yi)| &r.rhs * yi).sum();
            transpose_times(lp, y).iter().all(|v| !v.is_negative()) && by.is_negative()
        }
        Status::Unbounded => {
            let Some(d) = &sol.ray else { return false };
            if !primal_feasible(lp, &sol.primal) || d.len() != lp.num_vars {
                return false;
            }
            let dir_ok = d.iter().all(|v| !v.is_negative())
                && lp.rows.iter().all(|r| {
                    let a = row_value(r, d);
                    match r.relation {
                        Relation::Le => !a.is_positive(),
                        Relation::Eq => a.is_zero(),
                        Relation::Ge => !a.is_negative(),
                    }
                });
            let gain = lp.objective_at(d);
            dir_ok
                && match lp.sense {
                    Sense::Maximize => gain.is_positive(),
                    Sense::Minimize => gain.is_negative(),
                }
        }
    }
}
