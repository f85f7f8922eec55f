use std::collections::HashMap;

use super::{Relation, Value};
use crate::entropy_cone::SetFunction;
use crate::query::Norm;
use crate::varset::VarSet;
use crate::Error;

/// Degrees sorted non-increasing; every entry is at least one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<u64>,
}

impl DegreeSequence {
    /// Sorts `degrees` descending. Zero entries are rejected.
    pub fn new(mut degrees: Vec<u64>) -> Result<Self, Error> {
        if degrees.contains(&0) {
            return Err(Error::Domain("degree sequences hold positive integers".into()));
        }
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        Ok(DegreeSequence { degrees })
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn sum(&self) -> u64 {
        self.degrees.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.degrees.first().copied().unwrap_or(0)
    }

    pub fn log_norm(&self, p: &Norm) -> Result<f64, Error> {
        lp_norm(self, p)
    }
}

/// `deg_R(V|U)`: for each distinct `U`-value of `Π_{U∪V}(R)`, the number of
/// distinct `V`-values. `U` and `V` may overlap. With `U = ∅` the result is
/// the single degree `|Π_V(R)|`.
pub fn degree_sequence(r: &Relation, v: &[usize], u: &[usize]) -> Result<DegreeSequence, Error> {
    if let Some(bad) = u.iter().chain(v).find(|&&c| c >= r.arity()) {
        return Err(Error::Schema(format!("column {bad} out of range for {}", r.name())));
    }
    let mut uv: Vec<usize> = u.iter().chain(v).copied().collect();
    uv.sort_unstable();
    uv.dedup();
    let upos: Vec<usize> = u.iter().map(|c| uv.iter().position(|x| x == c).unwrap()).collect();
    let mut counts: HashMap<Vec<Value>, u64> = HashMap::new();
    for t in r.project(&uv) {
        *counts.entry(upos.iter().map(|&i| t[i]).collect()).or_default() += 1;
    }
    let degrees: Vec<u64> = counts.into_values().collect();
    DegreeSequence::new(degrees)
}

/// `log₂ ‖d‖_p`. Finite `p` sums `(dᵢ/d₁)^p` in descending order so large
/// norms stay representable; `p = ∞` gives `log₂ d₁`.
pub fn lp_norm(d: &DegreeSequence, p: &Norm) -> Result<f64, Error> {
    if d.is_empty() {
        return Err(Error::Domain("norm of an empty degree sequence".into()));
    }
    let top = d.max() as f64;
    match p {
        Norm::Infinity => Ok(top.log2()),
        Norm::Finite(_) => {
            let p = p.to_f64();
            if p <= 0.0 || p.is_nan() {
                return Err(Error::Domain(format!("norm index must be positive, got {p}")));
            }
            let s: f64 = d.degrees.iter().map(|&x| (x as f64 / top).powf(p)).sum();
            Ok(top.log2() + s.log2() / p)
        }
    }
}

/// Entropy profile of a tuple distribution over a relation's columns.
#[derive(Clone, Debug)]
pub struct EmpiricalEntropy {
    pub varnames: Vec<String>,
    pub h: SetFunction<f64>,
}

/// Shannon entropies (bits) of every marginal of the uniform distribution on
/// `r`, or of the distribution proportional to `weights`.
pub fn empirical_entropy(r: &Relation, weights: Option<&[f64]>) -> Result<EmpiricalEntropy, Error> {
    if r.is_empty() {
        return Err(Error::Domain(format!("entropy of empty relation {}", r.name())));
    }
    let probs: Vec<f64> = match weights {
        None => vec![1.0 / r.len() as f64; r.len()],
        Some(w) => {
            if w.len() != r.len() || w.iter().any(|x| *x <= 0.0 || !x.is_finite()) {
                return Err(Error::Domain("weights must be positive, one per tuple".into()));
            }
            let total: f64 = w.iter().sum();
            w.iter().map(|x| x / total).collect()
        }
    };
    let n = r.arity();
    if n > crate::query::HARD_VARIABLE_CAP {
        return Err(Error::TooManyVariables { n, cap: crate::query::HARD_VARIABLE_CAP });
    }
    let mut h = SetFunction::<f64>::zeros(n);
    for s in VarSet::all(n).skip(1) {
        let cols: Vec<usize> = s.iter().collect();
        let mut marginal: HashMap<Vec<Value>, f64> = HashMap::new();
        for (t, p) in r.tuples().iter().zip(&probs) {
            *marginal.entry(cols.iter().map(|&c| t[c]).collect()).or_default() += p;
        }
        let mut masses: Vec<f64> = marginal.into_values().collect();
        masses.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let e: f64 = masses.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
        h.set(s, e.max(0.0));
    }
    Ok(EmpiricalEntropy { varnames: r.columns().to_vec(), h })
}
