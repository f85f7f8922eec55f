//! Synthetic instances.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Relation, Value};
use crate::Error;

/// A binary relation whose `deg(Y|X)` and `deg(X|Y)` both consist of
/// `heavy_count` entries equal to `heavy_degree` followed by `light_count`
/// ones. The counts are the realized (rounded) values.
#[derive(Clone, Debug)]
pub struct AlphaBetaRelation {
    pub relation: Relation,
    pub heavy_count: u64,
    pub heavy_degree: u64,
    pub light_count: u64,
}

/// Builds the `(α,β)`-relation of size `m` as a disjoint union of
/// `{(i,(i,j))}`, `{((i,j),i)}` and a diagonal `{(k,k)}`.
///
/// `m^α` and `m^β` are rounded to the nearest positive integer. The diagonal
/// gets whatever remains of `m`; it is an error only when `m − 2m^(α+β)` is
/// negative before rounding, and a negative remainder caused by rounding is
/// clamped to zero.
pub fn generate_alpha_beta(m: u64, alpha: f64, beta: f64) -> Result<AlphaBetaRelation, Error> {
    if !(alpha > 0.0 && beta > 0.0 && alpha + beta <= 1.0) {
        return Err(Error::Domain(format!("need α, β > 0 and α + β ≤ 1, got {alpha}, {beta}")));
    }
    let mf = m as f64;
    if mf - 2.0 * mf.powf(alpha + beta) < -0.5 {
        return Err(Error::Domain(format!(
            "m − 2m^(α+β) = {} is negative",
            mf - 2.0 * mf.powf(alpha + beta)
        )));
    }
    let heavy_count = (mf.powf(alpha).round() as u64).max(1);
    let heavy_degree = (mf.powf(beta).round() as u64).max(1);
    let pairs = heavy_count * heavy_degree;
    let light = m.saturating_sub(2 * pairs);
    let pair_id = |i: u64, j: u64| heavy_count + i * heavy_degree + j;
    let diag_base = heavy_count + pairs;
    let mut tuples: Vec<Vec<Value>> = Vec::with_capacity((2 * pairs + light) as usize);
    for i in 0..heavy_count {
        for j in 0..heavy_degree {
            tuples.push(vec![i, pair_id(i, j)]);
            tuples.push(vec![pair_id(i, j), i]);
        }
    }
    for k in 0..light {
        tuples.push(vec![diag_base + k, diag_base + k]);
    }
    let relation = Relation::from_rows("R", &["X", "Y"], tuples)?;
    Ok(AlphaBetaRelation { relation, heavy_count, heavy_degree, light_count: pairs + light })
}

/// `size` distinct tuples drawn uniformly from `[domain]^arity` (fewer if
/// the space is smaller).
pub fn random_relation<R: Rng>(rng: &mut R, name: &str, columns: &[&str], size: usize, domain: u64) -> Relation {
    let space = (domain as f64).powi(columns.len() as i32);
    let target = size.min(space as usize);
    let mut seen = std::collections::BTreeSet::new();
    let mut attempts = 0;
    while seen.len() < target && attempts < 50 * size + 100 {
        let t: Vec<Value> = (0..columns.len()).map(|_| rng.gen_range(0..domain)).collect();
        seen.insert(t);
        attempts += 1;
    }
    Relation::from_rows(name, columns, seen.into_iter().collect()).expect("well-formed rows")
}

/// Directed graph with `edges` distinct edges over `nodes` vertices whose
/// endpoints follow a Zipf-like law with the given exponent; no self loops.
pub fn power_law_graph<R: Rng>(rng: &mut R, nodes: u64, edges: usize, exponent: f64) -> Relation {
    let weights: Vec<f64> = (1..=nodes).map(|k| (k as f64).powf(-exponent)).collect();
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cdf.push(acc);
    }
    let mut ids: Vec<Value> = (0..nodes).collect();
    ids.shuffle(rng);
    let draw = |rng: &mut R| {
        let x: f64 = rng.gen();
        let k = cdf.partition_point(|c| *c < x).min(ids.len() - 1);
        ids[k]
    };
    let target = edges.min((nodes * nodes.saturating_sub(1)) as usize);
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < target {
        let (a, b) = (draw(rng), draw(rng));
        if a != b {
            seen.insert(vec![a, b]);
        }
    }
    Relation::from_rows("E", &["X", "Y"], seen.into_iter().collect()).expect("well-formed rows")
}
