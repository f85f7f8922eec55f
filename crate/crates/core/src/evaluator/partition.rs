use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::generic::join_rows;
use super::output_relation;
use crate::bounds::{validity_check, Cone, SigmaInequality};
use crate::query::stats::{satisfies, SATISFACTION_TOLERANCE};
use crate::query::{ConcreteStatistic, Norm, Query};
use crate::relalg::{lp_norm, DegreeSequence, Relation, Value};
use crate::scalar::{ratio_to_f64, Rational};
use crate::Database;
use crate::Error;

/// Row indices per atom; `None` while the atom is still unrestricted.
type AtomRows = Vec<Option<Vec<usize>>>;
/// A chosen part per partitioned statistic, with the resulting atom rows.
type Combination = (Vec<usize>, AtomRows);

/// A piece of a relation that strongly satisfies an ℓp statistic: at most
/// `groups` distinct `U`-values, each of degree at most `witness`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part {
    /// Indices into the partitioned relation's tuples.
    pub rows: Vec<usize>,
    pub groups: u64,
    pub witness: u64,
}

impl Part {
    /// `log₂(groups^(1/p) · witness)`, the part's ℓp envelope.
    pub fn log_envelope(&self, p: &Norm) -> f64 {
        let g = (self.groups.max(1) as f64).log2();
        let w = (self.witness.max(1) as f64).log2();
        match p {
            Norm::Infinity => w,
            Norm::Finite(_) => g / p.to_f64() + w,
        }
    }
}

/// Whether `groups · witness^p ≤ 2^(p·b)`. Exact for integer `p` and small
/// denominators, otherwise compared in bits within the satisfaction
/// tolerance.
pub fn strongly_satisfies(groups: u64, witness: u64, p: &Norm, b: &Rational) -> bool {
    match p {
        Norm::Infinity => {
            let d = DegreeSequence::new(vec![witness.max(1)]).unwrap();
            crate::query::stats::satisfied_exactly(&d, p, b)
                .unwrap_or((witness as f64).log2() <= ratio_to_f64(b) + SATISFACTION_TOLERANCE)
        }
        Norm::Finite(pr) => {
            if let (Some(k), Some(num), Some(den)) = (p.as_integer(), b.numer().to_i64(), b.denom().to_u32()) {
                let exp = num.checked_mul(k as i64);
                if let Some(exp) = exp.filter(|e| den <= 64 && *e >= 0 && *e <= 1 << 16) {
                    let lhs = BigInt::from(groups) * num_traits::pow(BigInt::from(witness), k as usize);
                    if lhs.bits() * den as u64 <= 1 << 16 {
                        return num_traits::pow(lhs, den as usize) <= (BigInt::one() << exp as usize);
                    }
                }
            }
            let p = ratio_to_f64(pr);
            (groups as f64).log2() + p * (witness as f64).log2()
                <= p * (ratio_to_f64(b) + SATISFACTION_TOLERANCE)
        }
    }
}

/// Splits `r` into parts that each strongly satisfy `((V|U), p) ≤ b`.
///
/// Tuples are first bucketed by the degree of their `U`-value into bands
/// `[2^(i−1), 2^i)`. Within a band, `U`-values are taken in descending
/// degree order and grouped greedily while `(count + 1) · d^p ≤ B^p`, where
/// `d` is the group's first (largest) degree; `d` is then the witness.
/// With `p = ∞` or `U = ∅` the relation is a single part.
pub fn partition_relation(r: &Relation, u: &[usize], v: &[usize], p: &Norm, b: &Rational) -> Result<Vec<Part>, Error> {
    if r.is_empty() {
        return Ok(Vec::new());
    }
    let ds = crate::relalg::degree_sequence(r, v, u)?;
    let actual = lp_norm(&ds, p)?;
    let exact = crate::query::stats::satisfied_exactly(&ds, p, b);
    if !exact.unwrap_or(actual <= ratio_to_f64(b) + SATISFACTION_TOLERANCE) {
        return Err(Error::Violated(format!(
            "{}: log-norm {actual} exceeds bound {}",
            r.name(),
            ratio_to_f64(b)
        )));
    }
    // Degree of each U-value and the rows carrying it.
    #[allow(clippy::type_complexity)]
    let mut groups: HashMap<Vec<Value>, (Vec<usize>, Vec<Vec<Value>>)> = HashMap::new();
    for (i, t) in r.tuples().iter().enumerate() {
        let key: Vec<Value> = u.iter().map(|&c| t[c]).collect();
        let e = groups.entry(key).or_default();
        e.0.push(i);
        e.1.push(v.iter().map(|&c| t[c]).collect());
    }
    let mut keyed: Vec<(Vec<Value>, u64, Vec<usize>)> = groups
        .into_iter()
        .map(|(k, (rows, mut vals))| {
            vals.sort_unstable();
            vals.dedup();
            (k, vals.len() as u64, rows)
        })
        .collect();
    keyed.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    if p.is_infinite() || u.is_empty() {
        let witness = keyed[0].1;
        let mut rows: Vec<usize> = keyed.iter().flat_map(|k| k.2.iter().copied()).collect();
        rows.sort_unstable();
        return Ok(vec![Part { rows, groups: keyed.len() as u64, witness }]);
    }

    let band = |d: u64| 64 - d.leading_zeros();
    let mut parts = Vec::new();
    let mut i = 0;
    while i < keyed.len() {
        let witness = keyed[i].1;
        let this_band = band(witness);
        let mut count = 1u64;
        let mut rows = keyed[i].2.clone();
        i += 1;
        while i < keyed.len() && band(keyed[i].1) == this_band && strongly_satisfies(count + 1, witness, p, b) {
            rows.extend_from_slice(&keyed[i].2);
            count += 1;
            i += 1;
        }
        rows.sort_unstable();
        parts.push(Part { rows, groups: count, witness });
    }
    Ok(parts)
}

#[derive(Clone, Debug)]
pub struct CombinationReport {
    /// Part index chosen for each partitioned statistic.
    pub parts: Vec<usize>,
    /// `Σ wᵢ log₂(groupsᵢ^(1/pᵢ) · witnessᵢ)`.
    pub log_envelope: f64,
    pub work: u64,
    pub output: u64,
}

#[derive(Clone, Debug)]
pub struct PartitionedReport {
    /// Indices of the statistics that were partitioned (nonzero weight).
    pub partitioned: Vec<usize>,
    pub part_counts: Vec<usize>,
    /// Product of the part counts.
    pub combinations: u128,
    /// Combinations whose atom intersections were all nonempty.
    pub evaluated: Vec<CombinationReport>,
    /// `Σ wᵢ bᵢ`, the bound the certificate proves.
    pub log_bound: f64,
}

/// Evaluates `q` by partitioning every statistic with nonzero weight,
/// joining each combination of parts, and taking the union.
///
/// The weights must certify `Σ wᵢ h(τᵢ) ≥ h(X)` over the polymatroid cone
/// and the database must satisfy the statistics.
pub fn partitioned_evaluate(
    q: &Query,
    db: &Database,
    stats: &[ConcreteStatistic],
    weights: &[Rational],
) -> Result<(Relation, PartitionedReport), Error> {
    if weights.len() != stats.len() {
        return Err(Error::InvalidCertificate("one weight per statistic required".into()));
    }
    let ineq = SigmaInequality {
        terms: stats.iter().zip(weights).map(|(s, w)| (s.spec.clone(), w.clone())).collect(),
        rhs: Rational::one(),
    };
    if !validity_check(q.n(), &ineq, Cone::Polymatroid)?.is_valid() {
        return Err(Error::InvalidCertificate("weights do not give a valid polymatroid inequality".into()));
    }
    let sat = satisfies(q, db, stats)?;
    if !sat.ok {
        return Err(Error::Violated("database does not satisfy the statistics".into()));
    }
    let instances: Vec<&Relation> = (0..q.atoms.len()).map(|j| q.instance(db, j)).collect::<Result<_, _>>()?;

    let partitioned: Vec<usize> = (0..stats.len()).filter(|&i| !weights[i].is_zero()).collect();
    let mut all_parts = Vec::with_capacity(partitioned.len());
    for &i in &partitioned {
        let s = &stats[i].spec;
        let r = instances[s.atom];
        all_parts.push(partition_relation(r, &q.columns(s.atom, s.u)?, &q.columns(s.atom, s.v)?, &s.p, &stats[i].b)?);
    }
    let part_counts: Vec<usize> = all_parts.iter().map(Vec::len).collect();
    let combinations = part_counts.iter().map(|&c| c as u128).product();

    // Enumerate combinations, pruning as soon as an atom's rows run out.
    let mut combos: Vec<Combination> = Vec::new();
    let mut choice = Vec::new();
    let start: AtomRows = vec![None; q.atoms.len()];
    enumerate(&partitioned, stats, &all_parts, 0, &mut choice, start, &mut combos);

    let log_bound: f64 = stats.iter().zip(weights).map(|(s, w)| ratio_to_f64(&(w * &s.b))).sum();
    let results: Vec<(CombinationReport, Vec<Vec<Value>>)> = combos
        .par_iter()
        .map(|(choice, rows)| {
            let owned: Vec<Vec<Vec<Value>>> = rows
                .iter()
                .zip(&instances)
                .map(|(sel, r)| match sel {
                    None => r.tuples().to_vec(),
                    Some(idx) => idx.iter().map(|&k| r.tuples()[k].clone()).collect(),
                })
                .collect();
            let refs: Vec<&[Vec<Value>]> = owned.iter().map(Vec::as_slice).collect();
            let mut out = Vec::new();
            let js = join_rows(q, &refs, |t| out.push(t.to_vec()));
            let log_envelope = partitioned
                .iter()
                .zip(choice)
                .zip(&all_parts)
                .map(|((&i, &k), parts)| ratio_to_f64(&weights[i]) * parts[k].log_envelope(&stats[i].spec.p))
                .sum();
            (CombinationReport { parts: choice.clone(), log_envelope, work: js.work, output: js.output }, out)
        })
        .collect();
    let mut tuples = Vec::new();
    let mut evaluated = Vec::with_capacity(results.len());
    for (rep, out) in results {
        tuples.extend(out);
        evaluated.push(rep);
    }
    let report = PartitionedReport { partitioned, part_counts, combinations, evaluated, log_bound };
    Ok((output_relation(q, tuples), report))
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[allow(clippy::type_complexity)]
fn enumerate(
    partitioned: &[usize],
    stats: &[ConcreteStatistic],
    parts: &[Vec<Part>],
    depth: usize,
    choice: &mut Vec<usize>,
    rows: AtomRows,
    out: &mut Vec<Combination>,
) {
    if depth == partitioned.len() {
        out.push((choice.clone(), rows));
        return;
    }
    let atom = stats[partitioned[depth]].spec.atom;
    for (k, part) in parts[depth].iter().enumerate() {
        let sel = match &rows[atom] {
            None => part.rows.clone(),
            Some(cur) => intersect(cur, &part.rows),
        };
        if sel.is_empty() {
            continue;
        }
        let mut next = rows.clone();
        next[atom] = Some(sel);
        choice.push(k);
        enumerate(partitioned, stats, parts, depth + 1, choice, next, out);
        choice.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    /// U-values 0, 1, 2 with degrees 8, 3 and 1.
    fn skewed() -> Relation {
        let mut rows = Vec::new();
        for (u, d) in [(0u64, 8u64), (1, 3), (2, 1)] {
            for k in 0..d {
                rows.push(vec![u, 100 + k]);
            }
        }
        Relation::from_rows("R", &["U", "V"], rows).unwrap()
    }

    #[test]
    fn bands_split_by_degree() {
        let r = skewed();
        // B = 12 for ℓ1: log₂12.
        let b = crate::scalar::dyadic_ceil(12f64.log2());
        let parts = partition_relation(&r, &[0], &[1], &Norm::int(1), &b).unwrap();
        let witnesses: Vec<u64> = parts.iter().map(|p| p.witness).collect();
        assert_eq!(witnesses, vec![8, 3, 1]);
        for p in &parts {
            assert_eq!(p.groups, 1);
            assert!(strongly_satisfies(p.groups, p.witness, &Norm::int(1), &b));
        }
        let total: usize = parts.iter().map(|p| p.rows.len()).sum();
        assert_eq!(total, r.len());
    }

    #[test]
    fn uniform_degrees_split_evenly() {
        // 10 U-values of degree 4; ℓ2 bound B² = 64 = 4 · 4², so groups of 4.
        let rows: Vec<Vec<Value>> = (0..10u64).flat_map(|u| (0..4u64).map(move |k| vec![u, k])).collect();
        let r = Relation::from_rows("R", &["U", "V"], rows).unwrap();
        let b = crate::scalar::dyadic_ceil((160f64).sqrt().log2());
        let parts = partition_relation(&r, &[0], &[1], &Norm::int(2), &b).unwrap();
        // Capacity ⌊B²/d²⌋ = ⌊160/16⌋ = 10: one part.
        assert_eq!(parts.len(), 1);
        let b = int(3);
        let parts = partition_relation(&r, &[0], &[1], &Norm::int(2), &b).unwrap_err();
        assert!(matches!(parts, Error::Violated(_)));
        // ℓ1 with B = 40 = |R|: capacity 10 groups of degree 4 → one part;
        // with B = 2^6 and ℓ2, capacity ⌊4096/16⌋ covers all 10.
        let parts = partition_relation(&r, &[0], &[1], &Norm::int(2), &int(6)).unwrap();
        assert_eq!(parts.len(), 1);
    }

    #[test]
    fn capacity_formula() {
        // Uniform degree 2 on 9 U-values, ℓ2 with B² = 64: ⌈9·4/64⌉ = 1 part.
        let rows: Vec<Vec<Value>> = (0..9u64).flat_map(|u| (0..2u64).map(move |k| vec![u, k])).collect();
        let r = Relation::from_rows("R", &["U", "V"], rows).unwrap();
        let parts = partition_relation(&r, &[0], &[1], &Norm::int(2), &int(3)).unwrap();
        assert_eq!(parts.iter().map(|p| p.groups).collect::<Vec<_>>(), vec![9]);

        // Degrees (3,2,2,2,2) in one band, ℓ1 with B = 11: the first group
        // holds ⌊11/3⌋ = 3 values, the rest fit under witness 2.
        let mut rows = Vec::new();
        for (u, d) in [(0u64, 3u64), (1, 2), (2, 2), (3, 2), (4, 2)] {
            for k in 0..d {
                rows.push(vec![u, k]);
            }
        }
        let r = Relation::from_rows("R", &["U", "V"], rows).unwrap();
        let b = crate::scalar::dyadic_ceil(11f64.log2());
        let parts = partition_relation(&r, &[0], &[1], &Norm::int(1), &b).unwrap();
        let shape: Vec<(u64, u64)> = parts.iter().map(|p| (p.groups, p.witness)).collect();
        assert_eq!(shape, vec![(3, 3), (2, 2)]);
    }

    #[test]
    fn single_tuple_and_infinity() {
        let r = Relation::from_rows("R", &["U", "V"], vec![vec![1, 2]]).unwrap();
        let parts = partition_relation(&r, &[0], &[1], &Norm::int(2), &int(0)).unwrap();
        assert_eq!(parts, vec![Part { rows: vec![0], groups: 1, witness: 1 }]);
        let parts = partition_relation(&skewed(), &[0], &[1], &Norm::Infinity, &int(3)).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].witness, 8);
    }
}
