//! Relation storage, ingestion, degree sequences, norms and entropies.

mod degree;
pub mod generate;
mod io;

use std::collections::{BTreeMap, HashMap};

pub use degree::{degree_sequence, empirical_entropy, lp_norm, DegreeSequence, EmpiricalEntropy};
pub use generate::{generate_alpha_beta, AlphaBetaRelation};
pub use io::{load_relation, write_relation, Delimiter};

use crate::Error;

/// Value id; strings are interned through a [`Dictionary`].
pub type Value = u64;

/// A set of fixed-arity rows, kept sorted and duplicate free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    name: String,
    columns: Vec<String>,
    tuples: Vec<Vec<Value>>,
}

impl Relation {
    /// Builds a relation, dropping duplicate rows. Returns the number dropped.
    pub fn with_duplicates(
        name: impl Into<String>,
        columns: Vec<String>,
        mut tuples: Vec<Vec<Value>>,
    ) -> Result<(Self, usize), Error> {
        let name = name.into();
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(Error::Schema(format!("duplicate column {c:?} in {name}")));
            }
        }
        if let Some(bad) = tuples.iter().position(|t| t.len() != columns.len()) {
            return Err(Error::Schema(format!(
                "row {} of {name} has {} values, expected {}",
                bad + 1,
                tuples[bad].len(),
                columns.len()
            )));
        }
        let before = tuples.len();
        tuples.sort_unstable();
        tuples.dedup();
        let dropped = before - tuples.len();
        Ok((Relation { name, columns, tuples }, dropped))
    }

    pub fn new(name: impl Into<String>, columns: Vec<String>, tuples: Vec<Vec<Value>>) -> Result<Self, Error> {
        Self::with_duplicates(name, columns, tuples).map(|(r, _)| r)
    }

    /// Convenience constructor with `&str` column names.
    pub fn from_rows(name: &str, columns: &[&str], tuples: Vec<Vec<Value>>) -> Result<Self, Error> {
        Self::new(name, columns.iter().map(|c| c.to_string()).collect(), tuples)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn tuples(&self) -> &[Vec<Value>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, Error> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("no attribute {name:?} in {}", self.name)))
    }

    pub fn column_indices(&self, names: &[&str]) -> Result<Vec<usize>, Error> {
        names.iter().map(|n| self.column_index(n)).collect()
    }

    /// Distinct projections onto `cols` (in the given order), sorted.
    pub fn project(&self, cols: &[usize]) -> Vec<Vec<Value>> {
        let mut out: Vec<Vec<Value>> =
            self.tuples.iter().map(|t| cols.iter().map(|&c| t[c]).collect()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Projection as a new relation with the chosen columns.
    pub fn projection(&self, name: &str, cols: &[usize]) -> Relation {
        Relation {
            name: name.to_string(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            tuples: self.project(cols),
        }
    }

    /// Sub-relation made of the given row indices.
    pub fn subset(&self, rows: &[usize]) -> Relation {
        let mut tuples: Vec<Vec<Value>> = rows.iter().map(|&i| self.tuples[i].clone()).collect();
        tuples.sort_unstable();
        tuples.dedup();
        Relation { name: self.name.clone(), columns: self.columns.clone(), tuples }
    }

    /// Number of distinct values across all columns.
    pub fn active_domain_size(&self) -> usize {
        let mut v: Vec<Value> = self.tuples.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

/// Bidirectional string interner shared by all relations of a database.
#[derive(Clone, Debug, Default)]
pub struct Dictionary {
    labels: Vec<String>,
    ids: HashMap<String, Value>,
}

impl Dictionary {
    pub fn intern(&mut self, s: &str) -> Value {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.labels.len() as Value;
        self.labels.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    pub fn lookup(&self, s: &str) -> Option<Value> {
        self.ids.get(s).copied()
    }

    /// Label of an id; ids never interned render as their decimal value.
    pub fn label(&self, id: Value) -> String {
        match self.labels.get(id as usize) {
            Some(s) => s.clone(),
            None => id.to_string(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Named relations plus the dictionary their values were interned with.
/// An empty dictionary means values are plain integers.
#[derive(Clone, Debug, Default)]
pub struct Database {
    pub dictionary: Dictionary,
    relations: BTreeMap<String, Relation>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, r: Relation) {
        self.relations.insert(r.name().to_string(), r);
    }

    pub fn get(&self, name: &str) -> Result<&Relation, Error> {
        self.relations.get(name).ok_or_else(|| Error::MissingRelation(name.to_string()))
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    /// Loads a CSV/TSV file under `name`; returns the number of duplicate
    /// rows dropped.
    pub fn load(&mut self, path: &std::path::Path, name: &str, delimiter: Option<Delimiter>) -> Result<usize, Error> {
        let (r, dropped) = load_relation(path, name, delimiter, &mut self.dictionary)?;
        self.insert(r);
        Ok(dropped)
    }

    /// Size of the union of all relations' active domains.
    pub fn active_domain_size(&self) -> usize {
        let mut v: Vec<Value> = self.relations.values().flat_map(|r| r.tuples.iter().flatten().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedups_and_checks_arity() {
        let (r, d) = Relation::with_duplicates(
            "R",
            vec!["X".into(), "Y".into()],
            vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![1, 2]],
        )
        .unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(d, 1);
        assert!(Relation::from_rows("R", &["X", "Y"], vec![vec![1, 2, 3]]).is_err());
        assert!(Relation::from_rows("R", &["X", "X"], vec![]).is_err());
    }

    #[test]
    fn projection() {
        let r = Relation::from_rows("R", &["X", "Y"], vec![vec![1, 1], vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(r.project(&[0]), vec![vec![1], vec![2]]);
        assert_eq!(r.project(&[1, 0]).len(), 3);
        assert_eq!(r.active_domain_size(), 2);
    }
}
