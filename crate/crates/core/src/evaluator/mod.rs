//! Join evaluation: a hash-based oracle, a variable-at-a-time generic join,
//! and the partitioned evaluation driven by ℓp statistics.

mod generic;
mod partition;

use std::collections::HashMap;

pub use generic::{generic_join, generic_join_count, join_rows, JoinStats};
pub use partition::{partition_relation, partitioned_evaluate, strongly_satisfies, CombinationReport, Part, PartitionedReport};

use crate::query::Query;
use crate::relalg::{Database, Relation, Value};
use crate::Error;

/// Default cap on intermediate tuples for the oracle.
pub const DEFAULT_BUDGET: usize = 20_000_000;

/// Output relation over the query variables, in head order.
pub(crate) fn output_relation(q: &Query, tuples: Vec<Vec<Value>>) -> Relation {
    Relation::new(q.head.clone(), q.varnames.clone(), tuples).expect("join output has query arity")
}

/// Reference evaluation: joins atoms left to right through hash indexes on
/// the already-bound variables.
pub fn brute_force_join(q: &Query, db: &Database, budget: usize) -> Result<Relation, Error> {
    let n = q.n();
    let mut partial: Vec<Vec<Option<Value>>> = vec![vec![None; n]];
    let mut bound = vec![false; n];
    for (j, atom) in q.atoms.iter().enumerate() {
        let r = q.instance(db, j)?;
        let key_cols: Vec<usize> = (0..atom.vars.len()).filter(|&c| bound[atom.vars[c]]).collect();
        let mut index: HashMap<Vec<Value>, Vec<&Vec<Value>>> = HashMap::new();
        for t in r.tuples() {
            index.entry(key_cols.iter().map(|&c| t[c]).collect()).or_default().push(t);
        }
        let mut next = Vec::new();
        for b in &partial {
            let key: Vec<Value> = key_cols.iter().map(|&c| b[atom.vars[c]].unwrap()).collect();
            if let Some(matches) = index.get(&key) {
                for t in matches {
                    let mut nb = b.clone();
                    for (c, &x) in atom.vars.iter().enumerate() {
                        nb[x] = Some(t[c]);
                    }
                    next.push(nb);
                    if next.len() > budget {
                        return Err(Error::Budget(format!("more than {budget} intermediate tuples")));
                    }
                }
            }
        }
        partial = next;
        for &x in &atom.vars {
            bound[x] = true;
        }
    }
    Ok(output_relation(q, partial.into_iter().map(|b| b.into_iter().map(Option::unwrap).collect()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::type_complexity)]
    pub(crate) fn db_of(rels: &[(&str, &[&str], Vec<Vec<Value>>)]) -> Database {
        let mut db = Database::new();
        for (name, cols, rows) in rels {
            db.insert(Relation::from_rows(name, cols, rows.clone()).unwrap());
        }
        db
    }

    #[test]
    fn triangle_oracle() {
        let q = Query::parse("Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(Z,X).").unwrap();
        let e = vec![vec![1, 2], vec![2, 3], vec![3, 1]];
        let cols: &[&str] = &["A", "B"];
        let db = db_of(&[("R", cols, e.clone()), ("S", cols, e.clone()), ("T", cols, e)]);
        let out = brute_force_join(&q, &db, DEFAULT_BUDGET).unwrap();
        assert_eq!(out.tuples(), &[vec![1, 2, 3], vec![2, 3, 1], vec![3, 1, 2]]);
        assert_eq!(generic_join(&q, &db).unwrap(), out);
    }

    #[test]
    fn empty_relation() {
        let q = Query::parse("Q(X,Y,Z) :- R(X,Y), S(Y,Z).").unwrap();
        let cols: &[&str] = &["A", "B"];
        let db = db_of(&[("R", cols, vec![vec![1, 2]]), ("S", cols, vec![])]);
        assert!(brute_force_join(&q, &db, DEFAULT_BUDGET).unwrap().is_empty());
        assert!(generic_join(&q, &db).unwrap().is_empty());
    }

    #[test]
    fn self_join_diagonal() {
        let q = Query::parse("Q(X,Y,Z) :- R(X,Y), R(Z,Y).").unwrap();
        let rows: Vec<Vec<Value>> = (0..7).map(|i| vec![i, i]).collect();
        let db = db_of(&[("R", &["A", "B"], rows)]);
        let out = brute_force_join(&q, &db, DEFAULT_BUDGET).unwrap();
        assert_eq!(out.len(), 7);
        assert_eq!(generic_join(&q, &db).unwrap(), out);
    }

    #[test]
    fn budget_enforced() {
        let q = Query::parse("Q(X,Y) :- R(X), S(Y).").unwrap();
        let rows: Vec<Vec<Value>> = (0..100).map(|i| vec![i]).collect();
        let db = db_of(&[("R", &["A"], rows.clone()), ("S", &["A"], rows)]);
        assert!(matches!(brute_force_join(&q, &db, 500), Err(Error::Budget(_))));
    }
}
