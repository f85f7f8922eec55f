use super::output_relation;
use crate::query::Query;
use crate::relalg::{Database, Relation, Value};
use crate::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JoinStats {
    /// Candidate values examined across all intersections.
    pub work: u64,
    pub output: u64,
}

/// An atom's tuples with columns reordered by increasing variable index,
/// sorted lexicographically, so every bound prefix is a contiguous range.
struct Trie {
    vars: Vec<usize>,
    rows: Vec<Vec<Value>>,
}

impl Trie {
    fn new(atom_vars: &[usize], tuples: &[Vec<Value>]) -> Self {
        let mut order: Vec<usize> = (0..atom_vars.len()).collect();
        order.sort_by_key(|&c| atom_vars[c]);
        let vars = order.iter().map(|&c| atom_vars[c]).collect();
        let mut rows: Vec<Vec<Value>> = tuples.iter().map(|t| order.iter().map(|&c| t[c]).collect()).collect();
        rows.sort_unstable();
        rows.dedup();
        Trie { vars, rows }
    }

    /// Sub-range of `[lo, hi)` whose column `level` equals `v`.
    fn seek(&self, lo: usize, hi: usize, level: usize, v: Value) -> (usize, usize) {
        let slice = &self.rows[lo..hi];
        let a = slice.partition_point(|r| r[level] < v);
        let b = slice.partition_point(|r| r[level] <= v);
        (lo + a, lo + b)
    }
}

struct Search<'a, F: FnMut(&[Value])> {
    tries: Vec<Trie>,
    /// For each variable, the atoms containing it with that variable's level.
    by_var: Vec<Vec<(usize, usize)>>,
    binding: Vec<Value>,
    stats: JoinStats,
    emit: &'a mut F,
}

impl<F: FnMut(&[Value])> Search<'_, F> {
    fn run(&mut self, x: usize, ranges: &mut Vec<(usize, usize)>) {
        if x == self.binding.len() {
            self.stats.output += 1;
            (self.emit)(&self.binding);
            return;
        }
        let atoms = self.by_var[x].clone();
        // Drive the intersection from the atom with the smallest range.
        let &(lead, lead_level) = atoms
            .iter()
            .min_by_key(|(j, _)| ranges[*j].1 - ranges[*j].0)
            .expect("every variable occurs in some atom");
        let (mut lo, hi) = ranges[lead];
        while lo < hi {
            let v = self.tries[lead].rows[lo][lead_level];
            let (_, next) = self.tries[lead].seek(lo, hi, lead_level, v);
            self.stats.work += 1;
            let saved: Vec<(usize, (usize, usize))> = atoms.iter().map(|&(j, _)| (j, ranges[j])).collect();
            let mut ok = true;
            for &(j, level) in &atoms {
                let (a, b) = ranges[j];
                let r = self.tries[j].seek(a, b, level, v);
                if r.0 == r.1 {
                    ok = false;
                    break;
                }
                ranges[j] = r;
            }
            if ok {
                self.binding[x] = v;
                self.run(x + 1, ranges);
            }
            for (j, r) in saved {
                ranges[j] = r;
            }
            lo = next;
        }
    }
}

/// Runs the generic join over explicit per-atom tuple lists (columns in atom
/// order), calling `emit` once per output tuple in head-variable order.
pub fn join_rows<F: FnMut(&[Value])>(q: &Query, atoms: &[&[Vec<Value>]], mut emit: F) -> JoinStats {
    let tries: Vec<Trie> = q.atoms.iter().zip(atoms).map(|(a, rows)| Trie::new(&a.vars, rows)).collect();
    if tries.iter().any(|t| t.rows.is_empty()) {
        return JoinStats::default();
    }
    let mut by_var = vec![Vec::new(); q.n()];
    for (j, t) in tries.iter().enumerate() {
        for (level, &x) in t.vars.iter().enumerate() {
            by_var[x].push((j, level));
        }
    }
    let mut ranges: Vec<(usize, usize)> = tries.iter().map(|t| (0, t.rows.len())).collect();
    let mut s = Search { tries, by_var, binding: vec![0; q.n()], stats: JoinStats::default(), emit: &mut emit };
    s.run(0, &mut ranges);
    s.stats
}

fn instances<'a>(q: &Query, db: &'a Database) -> Result<Vec<&'a Relation>, Error> {
    (0..q.atoms.len()).map(|j| q.instance(db, j)).collect()
}

/// Worst-case-optimal style join with the head order as variable order.
pub fn generic_join(q: &Query, db: &Database) -> Result<Relation, Error> {
    let rels = instances(q, db)?;
    let rows: Vec<&[Vec<Value>]> = rels.iter().map(|r| r.tuples()).collect();
    let mut out = Vec::new();
    join_rows(q, &rows, |t| out.push(t.to_vec()));
    Ok(output_relation(q, out))
}

/// Output size only, without materializing tuples.
pub fn generic_join_count(q: &Query, db: &Database) -> Result<JoinStats, Error> {
    let rels = instances(q, db)?;
    let rows: Vec<&[Vec<Value>]> = rels.iter().map(|r| r.tuples()).collect();
    Ok(join_rows(q, &rows, |_| {}))
}
