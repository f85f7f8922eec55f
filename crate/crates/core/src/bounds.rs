//! Log-bounds over the polymatroid, normal and modular cones.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::entropy_cone::{check_cap, shannon_constraints, LinearTerm, SetFunction};
use crate::lp::{self, LinearProgram, Relation, Sense, Status};
use crate::query::{ConcreteStatistic, Norm, Query, StatisticSpec};
use crate::relalg::{Database, DegreeSequence};
use crate::scalar::{ratio_to_f64, Rational};
use crate::varset::VarSet;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cone {
    /// Γ_n, cut out by the elementary Shannon inequalities.
    Polymatroid,
    /// N_n, nonnegative combinations of step functions.
    Normal,
    /// M_n, nonnegative combinations of singleton step functions.
    Modular,
}

impl Cone {
    pub fn name(self) -> &'static str {
        match self {
            Cone::Polymatroid => "polymatroid",
            Cone::Normal => "normal",
            Cone::Modular => "modular",
        }
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" | "polymatroid" | "g" => Ok(Cone::Polymatroid),
            "normal" | "n" => Ok(Cone::Normal),
            "modular" | "m" => Ok(Cone::Modular),
            _ => Err(Error::Parse(format!("unknown cone {s:?}; use gamma, normal or modular"))),
        }
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// LP coordinates of a cone: `h(S)` as a linear form in the LP variables.
struct Coordinates {
    n: usize,
    cone: Cone,
    num_vars: usize,
    /// Generator set of each LP variable (normal/modular) or its subset (Γ).
    generators: Vec<VarSet>,
}

impl Coordinates {
    fn new(n: usize, cone: Cone) -> Self {
        let generators: Vec<VarSet> = match cone {
            Cone::Polymatroid | Cone::Normal => VarSet::all(n).skip(1).collect(),
            Cone::Modular => (0..n).map(VarSet::singleton).collect(),
        };
        Coordinates { n, cone, num_vars: generators.len(), generators }
    }

    fn value_of(&self, s: VarSet) -> Vec<(usize, Rational)> {
        match self.cone {
            Cone::Polymatroid if s.is_empty() => Vec::new(),
            Cone::Polymatroid => vec![(s.bits() - 1, Rational::one())],
            Cone::Normal | Cone::Modular => self
                .generators
                .iter()
                .enumerate()
                .filter(|(_, g)| !g.intersect(s).is_empty())
                .map(|(k, _)| (k, Rational::one()))
                .collect(),
        }
    }

    fn row(&self, t: &LinearTerm) -> Vec<(usize, Rational)> {
        let mut dense = vec![Rational::zero(); self.num_vars];
        for (s, c) in &t.coeffs {
            for (k, v) in self.value_of(*s) {
                dense[k] += c * v;
            }
        }
        dense.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect()
    }

    /// Cone-membership rows, each meaning `row ≥ 0`.
    fn cone_rows(&self) -> Vec<LinearTerm> {
        match self.cone {
            Cone::Polymatroid => shannon_constraints(self.n),
            Cone::Normal | Cone::Modular => Vec::new(),
        }
    }

    fn set_function(&self, x: &[Rational]) -> SetFunction<Rational> {
        let mut h = SetFunction::zeros(self.n);
        for s in VarSet::all(self.n).skip(1) {
            h.set(s, self.value_of(s).iter().map(|(k, c)| c * &x[*k]).sum());
        }
        h
    }

    fn decomposition(&self, x: &[Rational]) -> Option<Vec<(VarSet, Rational)>> {
        match self.cone {
            Cone::Polymatroid => None,
            _ => Some(
                self.generators
                    .iter()
                    .zip(x)
                    .filter(|(_, a)| !a.is_zero())
                    .map(|(g, a)| (*g, a.clone()))
                    .collect(),
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundStatus {
    Optimal,
    /// The statistics do not bound `h(X)`; the bound is +∞.
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub status: BoundStatus,
    pub cone: Cone,
    /// `log₂` of the bound; `None` when unbounded.
    pub logbound: Option<Rational>,
    /// `2^logbound`, or +∞.
    pub bound: f64,
    /// Weight `wᵢ ≥ 0` of each input statistic; `Σ wᵢ bᵢ = logbound`.
    pub certificate: Vec<Rational>,
    /// Nonzero multipliers of the Shannon rows, for the polymatroid cone.
    pub shannon_multipliers: Vec<(LinearTerm, Rational)>,
    /// `bᵢ − h*(τᵢ)` at the optimal set function.
    pub slack: Vec<Rational>,
    /// Optimal (or, if unbounded, last feasible) set function.
    pub optimum: SetFunction<Rational>,
    /// Generator coefficients for the normal and modular cones.
    pub decomposition: Option<Vec<(VarSet, Rational)>>,
    pub warnings: Vec<String>,
    pub pivots: usize,
}

/// Solves `max h(X)` over `cone` subject to `h(τᵢ) ≤ bᵢ` for every statistic.
/// The certificate is the optimal dual on the statistic rows.
pub fn log_bound(q: &Query, stats: &[ConcreteStatistic], cone: Cone) -> Result<BoundReport, Error> {
    let n = q.n();
    check_cap(n)?;
    for s in stats {
        s.spec.check_guard(q)?;
        if s.b.is_negative() {
            return Err(Error::Domain("log bounds must be nonnegative".into()));
        }
    }
    let coords = Coordinates::new(n, cone);
    let mut program = LinearProgram::new(coords.num_vars, Sense::Maximize);
    let mut full = LinearTerm::new();
    full.add(q.all_vars(), Rational::one());
    program.objective = coords.row(&full);
    let cone_rows = coords.cone_rows();
    for r in &cone_rows {
        program.add_row(coords.row(r), Relation::Ge, Rational::zero());
    }
    let first_stat = program.rows.len();
    for s in stats {
        program.add_row(coords.row(&LinearTerm::of_statistic(&s.spec)), Relation::Le, s.b.clone());
    }
    let sol = lp::solve(&program);
    if !lp::verify(&program, &sol) {
        return Err(Error::Lp(format!("solution failed exact verification ({:?})", sol.status)));
    }
    let optimum = coords.set_function(&sol.primal);
    let mut warnings = Vec::new();
    if cone == Cone::Modular {
        warnings.extend(modular_warning(q, stats));
    }
    let slack = stats
        .iter()
        .map(|s| &s.b - LinearTerm::of_statistic(&s.spec).eval(&optimum))
        .collect();
    match sol.status {
        Status::Infeasible => Err(Error::Lp("bound program is infeasible".into())),
        Status::Unbounded => Ok(BoundReport {
            status: BoundStatus::Unbounded,
            cone,
            logbound: None,
            bound: f64::INFINITY,
            certificate: vec![Rational::zero(); stats.len()],
            shannon_multipliers: Vec::new(),
            slack,
            decomposition: coords.decomposition(&sol.primal),
            optimum,
            warnings,
            pivots: sol.pivots,
        }),
        Status::Optimal => {
            let certificate: Vec<Rational> = sol.dual[first_stat..].to_vec();
            let shannon_multipliers = cone_rows
                .into_iter()
                .zip(&sol.dual[..first_stat])
                .filter(|(_, y)| !y.is_zero())
                .map(|(r, y)| (r, -y.clone()))
                .collect();
            let value = sol.objective.clone();
            let weighted: Rational = certificate.iter().zip(stats).map(|(w, s)| w * &s.b).sum();
            if weighted != value {
                return Err(Error::InvalidCertificate("dual weights do not reproduce the bound".into()));
            }
            Ok(BoundReport {
                status: BoundStatus::Optimal,
                cone,
                bound: 2f64.powf(ratio_to_f64(&value)),
                logbound: Some(value),
                certificate,
                shannon_multipliers,
                slack,
                decomposition: coords.decomposition(&sol.primal),
                optimum,
                warnings,
                pivots: sol.pivots,
            })
        }
    }
}

fn modular_warning(q: &Query, stats: &[ConcreteStatistic]) -> Option<String> {
    let max_p = stats
        .iter()
        .filter_map(|s| match &s.spec.p {
            Norm::Finite(p) => Some(ratio_to_f64(p)),
            Norm::Infinity => None,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let g = q.girth();
    match g.length {
        Some(len) if (len as f64) <= max_p => Some(format!(
            "modular-cone value is not a valid output-size bound here: girth {len} ≤ largest finite p {max_p}"
        )),
        None if g.diagnostic.is_some() => Some(format!(
            "modular-cone value may not be a valid output-size bound: {}",
            g.diagnostic.unwrap()
        )),
        _ => None,
    }
}

/// Statistic families gathered from data.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// ℓ1 of every atom's full variable set.
    Agm,
    /// ℓ1 of every nonempty variable subset of an atom, and ℓ∞ of `(V|U)`
    /// for disjoint nonempty `U`, `V` with `|U| ≤ max_u`.
    Panda { max_u: usize },
    /// For each atom, each variable `x` and each `p`, the statistic
    /// `((Y∖x)|x), p)`, plus ℓ1 of the full variable set `Y`.
    LpNorms(Vec<Norm>),
}

impl Preset {
    pub fn panda() -> Self {
        Preset::Panda { max_u: 2 }
    }

    pub fn label(&self) -> String {
        match self {
            Preset::Agm => "AGM".into(),
            Preset::Panda { .. } => "PANDA".into(),
            Preset::LpNorms(ps) => {
                format!("{{{}}}", ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }
}

pub fn preset_specs(q: &Query, preset: &Preset) -> Vec<StatisticSpec> {
    let mut out: Vec<StatisticSpec> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |s: StatisticSpec| {
        if seen.insert(s.clone()) {
            out.push(s);
        }
    };
    for (j, atom) in q.atoms.iter().enumerate() {
        let y = atom.varset();
        match preset {
            Preset::Agm => push(StatisticSpec::new(j, VarSet::EMPTY, y, Norm::int(1))),
            Preset::Panda { max_u } => {
                for w in VarSet::all(q.n()).filter(|w| !w.is_empty() && w.is_subset(y)) {
                    push(StatisticSpec::new(j, VarSet::EMPTY, w, Norm::int(1)));
                }
                for u in VarSet::all(q.n()).filter(|u| !u.is_empty() && u.is_subset(y) && u.len() <= *max_u) {
                    for v in VarSet::all(q.n()).filter(|v| !v.is_empty() && v.is_subset(y.minus(u))) {
                        push(StatisticSpec::new(j, u, v, Norm::Infinity));
                    }
                }
            }
            Preset::LpNorms(ps) => {
                for x in atom.vars.iter().copied() {
                    let u = VarSet::singleton(x);
                    let v = y.minus(u);
                    if v.is_empty() {
                        continue;
                    }
                    for p in ps {
                        push(StatisticSpec::new(j, u, v, p.clone()));
                    }
                }
                push(StatisticSpec::new(j, VarSet::EMPTY, y, Norm::int(1)));
            }
        }
    }
    out
}

/// Measures each spec on `db` (bounds rounded up to 2^-40).
pub fn gather(q: &Query, db: &Database, specs: &[StatisticSpec]) -> Result<Vec<ConcreteStatistic>, Error> {
    specs.iter().map(|s| ConcreteStatistic::measured(s.clone(), q, db)).collect()
}

/// Gathers a preset's statistics from `db` and bounds over Γ.
pub fn preset_bound(q: &Query, db: &Database, preset: &Preset) -> Result<(BoundReport, Vec<ConcreteStatistic>), Error> {
    let stats = gather(q, db, &preset_specs(q, preset))?;
    let report = log_bound(q, &stats, Cone::Polymatroid)?;
    Ok((report, stats))
}

/// `Σ wᵢ h(τᵢ) ≥ k·h(X)`.
#[derive(Clone, Debug)]
pub struct SigmaInequality {
    /// Statistic terms with their weights; the guard atom is not used.
    pub terms: Vec<(StatisticSpec, Rational)>,
    pub rhs: Rational,
}

impl SigmaInequality {
    pub fn lhs_minus_rhs(&self, n: usize) -> LinearTerm {
        let mut t = LinearTerm::new();
        for (s, w) in &self.terms {
            t.add_term(&LinearTerm::of_statistic(s), w);
        }
        t.add(VarSet::full(n), -self.rhs.clone());
        t
    }
}

#[derive(Clone, Debug)]
pub enum Validity {
    Valid,
    /// An integer-valued member of the cone violating the inequality, and
    /// the (negative) value of LHS − RHS there.
    Invalid { counterexample: SetFunction<Rational>, gap: Rational },
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// Minimizes LHS − RHS over `{h ∈ cone : Σ_S h(S) ≤ 1}`; the inequality is
/// valid exactly when that minimum is zero.
pub fn validity_check(n: usize, ineq: &SigmaInequality, cone: Cone) -> Result<Validity, Error> {
    check_cap(n)?;
    if ineq.terms.iter().any(|(_, w)| w.is_negative()) || ineq.rhs.is_negative() {
        return Err(Error::Domain("inequality weights must be nonnegative".into()));
    }
    if ineq.terms.iter().any(|(s, _)| !s.u.union(s.v).is_subset(VarSet::full(n))) {
        return Err(Error::Domain("inequality mentions variables outside the query".into()));
    }
    let coords = Coordinates::new(n, cone);
    let mut program = LinearProgram::new(coords.num_vars, Sense::Minimize);
    let diff = ineq.lhs_minus_rhs(n);
    program.objective = coords.row(&diff);
    for r in coords.cone_rows() {
        program.add_row(coords.row(&r), Relation::Ge, Rational::zero());
    }
    let mut total = LinearTerm::new();
    for s in VarSet::all(n).skip(1) {
        total.add(s, Rational::one());
    }
    program.add_row(coords.row(&total), Relation::Le, Rational::one());
    let sol = lp::solve(&program);
    if sol.status != Status::Optimal || !lp::verify(&program, &sol) {
        return Err(Error::Lp(format!("validity program ended {:?}", sol.status)));
    }
    if !sol.objective.is_negative() {
        return Ok(Validity::Valid);
    }
    let h = coords.set_function(&sol.primal);
    let scale = h.values().iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let counterexample = h.scaled(&Rational::from_integer(scale));
    let gap = diff.eval(&counterexample);
    Ok(Validity::Invalid { counterexample, gap })
}

/// Degree-sequence bound of a single join: `Σ aᵢ bᵢ` over the sorted
/// sequences, zero-padded to equal length.
pub fn dsb_single_join(a: &DegreeSequence, b: &DegreeSequence) -> u128 {
    a.degrees().iter().zip(b.degrees()).map(|(&x, &y)| x as u128 * y as u128).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{frac, int};

    fn triangle() -> Query {
        Query::parse("Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(Z,X).").unwrap()
    }

    fn card(q: &Query, j: usize, b: Rational) -> ConcreteStatistic {
        ConcreteStatistic::new(StatisticSpec::new(j, VarSet::EMPTY, q.atoms[j].varset(), Norm::int(1)), b)
    }

    #[test]
    fn agm_triangle() {
        let q = triangle();
        let stats: Vec<_> = (0..3).map(|j| card(&q, j, int(10))).collect();
        for cone in [Cone::Polymatroid, Cone::Normal] {
            let r = log_bound(&q, &stats, cone).unwrap();
            assert_eq!(r.logbound, Some(int(15)), "{cone}");
            assert_eq!(r.certificate, vec![frac(1, 2); 3]);
        }
    }

    #[test]
    fn no_statistics_is_unbounded() {
        let q = triangle();
        let r = log_bound(&q, &[], Cone::Polymatroid).unwrap();
        assert_eq!(r.status, BoundStatus::Unbounded);
        assert!(r.bound.is_infinite());
        let r = log_bound(&q, &[card(&q, 0, int(3))], Cone::Normal).unwrap();
        assert_eq!(r.status, BoundStatus::Unbounded);
    }

    #[test]
    fn unguarded_rejected() {
        let q = triangle();
        let bad = ConcreteStatistic::new(StatisticSpec::new(0, VarSet::EMPTY, VarSet::singleton(2), Norm::int(1)), int(1));
        assert!(matches!(log_bound(&q, &[bad], Cone::Polymatroid), Err(Error::Unguarded(_))));
    }

    #[test]
    fn lp_norm_triangle_certificate() {
        // ℓ2 on (Y|X), (Z|Y), (X|Z) with equal b: the bound is 2b with
        // weights 2/3 each.
        let q = triangle();
        let spec = |j: usize, u: usize, v: usize| {
            StatisticSpec::new(j, VarSet::singleton(u), VarSet::singleton(v), Norm::int(2))
        };
        let stats = vec![
            ConcreteStatistic::new(spec(0, 0, 1), int(3)),
            ConcreteStatistic::new(spec(1, 1, 2), int(3)),
            ConcreteStatistic::new(spec(2, 2, 0), int(3)),
        ];
        let r = log_bound(&q, &stats, Cone::Polymatroid).unwrap();
        assert_eq!(r.logbound, Some(int(6)));
        assert_eq!(r.certificate, vec![frac(2, 3); 3]);
        assert!(!r.shannon_multipliers.is_empty());
    }

    #[test]
    fn modular_girth_warning() {
        let q = Query::parse("Q(U,V) :- R(U,V), S(V,U).").unwrap();
        let stats = vec![
            ConcreteStatistic::new(StatisticSpec::new(0, VarSet::singleton(0), VarSet::singleton(1), Norm::int(2)), int(1)),
            ConcreteStatistic::new(StatisticSpec::new(1, VarSet::singleton(1), VarSet::singleton(0), Norm::int(2)), int(1)),
        ];
        let m = log_bound(&q, &stats, Cone::Modular).unwrap();
        assert!(!m.warnings.is_empty());
        let g = log_bound(&q, &stats, Cone::Polymatroid).unwrap();
        assert!(m.logbound.unwrap() < g.logbound.unwrap());
    }

    #[test]
    fn preset_counts() {
        let q = triangle();
        assert_eq!(preset_specs(&q, &Preset::Agm).len(), 3);
        let ps = vec![Norm::int(1), Norm::int(2), Norm::Infinity];
        assert_eq!(preset_specs(&q, &Preset::LpNorms(ps)).len(), 21);
        // Per binary atom: three ℓ1 subsets, two ℓ∞ conditionals.
        assert_eq!(preset_specs(&q, &Preset::panda()).len(), 15);
    }

    #[test]
    fn dsb_examples() {
        let a = DegreeSequence::new(vec![2, 1]).unwrap();
        assert_eq!(dsb_single_join(&a, &a), 5);
        let d = DegreeSequence::new(vec![7]).unwrap();
        let e = DegreeSequence::new(vec![9]).unwrap();
        assert_eq!(dsb_single_join(&d, &e), 63);
    }

    #[test]
    fn validity_rejects_negative_weights() {
        let ineq = SigmaInequality {
            terms: vec![(StatisticSpec::new(0, VarSet::EMPTY, VarSet::singleton(0), Norm::int(1)), int(-1))],
            rhs: int(1),
        };
        assert!(validity_check(1, &ineq, Cone::Polymatroid).is_err());
    }
}
