//! Worst-case databases built from normal polymatroids.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bounds::{log_bound, BoundReport, BoundStatus, Cone};
use crate::entropy_cone::{step_function, SetFunction};
use crate::evaluator::generic_join_count;
use crate::query::{satisfies, ConcreteStatistic, Query};
use crate::relalg::{Database, Relation, Value};
use crate::scalar::{ratio_to_f64, Rational};
use crate::varset::VarSet;
use crate::Error;

/// Coefficients `α_V` of `h = Σ α_V h^V` for nonempty `V`.
pub type NormalDecomposition = Vec<(VarSet, Rational)>;

/// Largest relation the constructions will materialize.
pub const MAX_TUPLES: u64 = 20_000_000;

/// `T^V_N`: tuples with value `k` on every attribute of `V` and `0`
/// elsewhere, for `k = 0..N−1`.
pub fn basic_normal_relation(v: VarSet, columns: &[String], size: u64) -> Result<Relation, Error> {
    if size == 0 || v.is_empty() {
        return Err(Error::Domain("basic normal relations need N ≥ 1 and nonempty V".into()));
    }
    if size > MAX_TUPLES {
        return Err(Error::Budget(format!("T^V_N with N = {size}")));
    }
    let tuples = (0..size)
        .map(|k| (0..columns.len()).map(|c| if v.contains(c) { k } else { 0 }).collect())
        .collect();
    Relation::new(format!("T_{}", v.display(columns)), columns.to_vec(), tuples)
}

/// Attribute-wise pairing of all tuples of `a` with all tuples of `b`.
///
/// The pair `(x, y)` is encoded as `x · r + y` with `r` one more than the
/// largest value in `b`, so repeated products decode by mixed radix.
pub fn domain_product(a: &Relation, b: &Relation) -> Result<Relation, Error> {
    if a.columns() != b.columns() {
        return Err(Error::Schema("domain product needs identical attribute lists".into()));
    }
    if (a.len() as u64).saturating_mul(b.len() as u64) > MAX_TUPLES {
        return Err(Error::Budget(format!("domain product of {} × {} tuples", a.len(), b.len())));
    }
    let radix = b.tuples().iter().flatten().max().map_or(1, |m| m + 1);
    let mut tuples = Vec::with_capacity(a.len() * b.len());
    for x in a.tuples() {
        for y in b.tuples() {
            let t: Option<Vec<Value>> = x
                .iter()
                .zip(y)
                .map(|(&p, &q)| p.checked_mul(radix).and_then(|v| v.checked_add(q)))
                .collect();
            tuples.push(t.ok_or_else(|| Error::Budget("composite value overflows 64 bits".into()))?);
        }
    }
    Relation::new(format!("{}⊗{}", a.name(), b.name()), a.columns().to_vec(), tuples)
}

/// `⌊2^r⌋` computed exactly for rational `r ≥ 0`.
pub fn floor_pow2(r: &Rational) -> Result<u64, Error> {
    if r.is_negative() {
        return Err(Error::Domain("negative exponent".into()));
    }
    let (a, c) = (r.numer().clone(), r.denom().to_u32().ok_or_else(|| Error::Domain("denominator too large".into()))?);
    let a = a.to_u64().filter(|a| *a < 64 * c as u64).ok_or_else(|| Error::Budget("2^α exceeds 64 bits".into()))?;
    // Largest N with N^c ≤ 2^a.
    let target = BigInt::one() << a as usize;
    let fits = |n: u64| num_traits::pow(BigInt::from(n), c as usize) <= target;
    let mut n = 2f64.powf(ratio_to_f64(r)).floor().min(u64::MAX as f64) as u64;
    while n > 1 && !fits(n) {
        n -= 1;
    }
    while fits(n + 1) {
        n += 1;
    }
    Ok(n.max(1))
}

/// A product of basic normal relations with its factor sizes.
#[derive(Clone, Debug)]
pub struct NormalRelation {
    pub relation: Relation,
    /// `(V, N_V)` per factor, `N_V = ⌊2^α_V⌋`.
    pub factors: Vec<(VarSet, u64)>,
    /// Number of nonzero coefficients in the decomposition.
    pub c: usize,
}

impl NormalRelation {
    /// Renders a composite value as the tuple of its factor components.
    pub fn label(&self, id: Value) -> String {
        let mut parts = Vec::with_capacity(self.factors.len());
        let mut rest = id;
        for &(_, n) in self.factors.iter().rev() {
            parts.push(rest % n);
            rest /= n;
        }
        parts.reverse();
        format!("({})", parts.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
    }
}

/// Builds `⊗_V T^V_{⌊2^α_V⌋}` for a decomposition reconstructing `h`.
///
/// The result is totally uniform, `|T| ≥ 2^h(X) / 2^c`, and
/// `h_T(W|U) ≤ h(W|U)` for all `U`, `W`.
pub fn normal_relation_from_polymatroid(
    h: &SetFunction<Rational>,
    decomposition: &NormalDecomposition,
    columns: &[String],
) -> Result<NormalRelation, Error> {
    let n = h.n();
    if columns.len() != n {
        return Err(Error::Schema("one column per variable required".into()));
    }
    let mut rebuilt = SetFunction::<Rational>::zeros(n);
    for (v, a) in decomposition {
        if a.is_negative() {
            return Err(Error::Domain("decomposition coefficients must be nonnegative".into()));
        }
        rebuilt.add_scaled(&step_function(*v, n), a);
    }
    if &rebuilt != h {
        return Err(Error::Domain("decomposition does not reconstruct the set function".into()));
    }
    let nonzero: Vec<&(VarSet, Rational)> = decomposition.iter().filter(|(_, a)| !a.is_zero()).collect();
    let mut factors = Vec::with_capacity(nonzero.len());
    let mut t = Relation::new("T", columns.to_vec(), vec![vec![0; n]])?;
    for (v, a) in &nonzero {
        let size = floor_pow2(a)?;
        factors.push((*v, size));
        t = domain_product(&t, &basic_normal_relation(*v, columns, size)?)?;
    }
    Ok(NormalRelation { relation: t.renamed("T"), factors, c: nonzero.len() })
}

#[derive(Clone, Debug)]
pub struct WorstCase {
    pub database: Database,
    pub normal: NormalRelation,
    pub bound: BoundReport,
    /// `|Q(D)|`.
    pub output_size: u64,
    /// Whether `D` satisfies the input statistics.
    pub satisfied: bool,
}

impl WorstCase {
    pub fn log_bound(&self) -> f64 {
        self.bound.logbound.as_ref().map_or(f64::INFINITY, ratio_to_f64)
    }

    /// `log₂(2^bound / |Q(D)|)`.
    pub fn gap_log2(&self) -> f64 {
        self.log_bound() - (self.output_size as f64).log2()
    }
}

/// Solves the normal-cone program, rounds its optimum to a normal relation
/// `T`, and sets each atom's relation to the projection of `T`.
///
/// Atoms sharing a relation name receive the union of their projections.
pub fn worst_case_database(q: &Query, stats: &[ConcreteStatistic]) -> Result<WorstCase, Error> {
    if let Some(s) = stats.iter().find(|s| !s.spec.is_simple()) {
        return Err(Error::Domain(format!("statistic {} is not simple", s.spec.display(q))));
    }
    let bound = log_bound(q, stats, Cone::Normal)?;
    if bound.status == BoundStatus::Unbounded {
        return Err(Error::Domain("the statistics do not bound the output".into()));
    }
    let decomposition = bound.decomposition.clone().expect("normal cone reports a decomposition");
    let normal = normal_relation_from_polymatroid(&bound.optimum, &decomposition, &q.varnames)?;
    let mut database = Database::new();
    for atom in &q.atoms {
        let names: Vec<String> = atom.vars.iter().map(|&x| q.varnames[x].clone()).collect();
        let proj = normal.relation.project(&atom.vars);
        let merged = match database.get(&atom.relation) {
            Ok(existing) => {
                let mut rows = existing.tuples().to_vec();
                rows.extend(proj);
                Relation::new(atom.relation.clone(), existing.columns().to_vec(), rows)?
            }
            Err(_) => Relation::new(atom.relation.clone(), names, proj)?,
        };
        database.insert(merged);
    }
    let satisfied = satisfies(q, &database, stats)?.ok;
    let output_size = generic_join_count(q, &database)?.output;
    Ok(WorstCase { database, normal, bound, output_size, satisfied })
}
