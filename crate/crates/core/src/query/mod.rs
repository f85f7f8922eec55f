//! Full conjunctive queries and their statistics.

pub mod stats;

use std::collections::VecDeque;
use std::fmt;

pub use stats::{satisfies, ConcreteStatistic, Norm, Satisfaction, StatisticSpec};

use crate::relalg::{Database, Relation};
use crate::varset::VarSet;
use crate::Error;

pub const DEFAULT_VARIABLE_CAP: usize = 14;
pub const HARD_VARIABLE_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    /// Query-variable indices, one per column of the relation.
    pub vars: Vec<usize>,
}

impl Atom {
    pub fn varset(&self) -> VarSet {
        VarSet::from_indices(self.vars.iter().copied())
    }

    /// Column of the relation bound to query variable `x`.
    pub fn column_of(&self, x: usize) -> Option<usize> {
        self.vars.iter().position(|&v| v == x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub head: String,
    pub varnames: Vec<String>,
    pub atoms: Vec<Atom>,
}

impl Query {
    pub fn parse(text: &str) -> Result<Self, Error> {
        parse_query(text, DEFAULT_VARIABLE_CAP)
    }

    pub fn n(&self) -> usize {
        self.varnames.len()
    }

    pub fn all_vars(&self) -> VarSet {
        VarSet::full(self.n())
    }

    pub fn var_index(&self, name: &str) -> Result<usize, Error> {
        self.varnames
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Parse(format!("unknown variable {name:?}")))
    }

    pub fn varset_of(&self, names: &[&str]) -> Result<VarSet, Error> {
        names.iter().try_fold(VarSet::EMPTY, |s, n| Ok(s.with(self.var_index(n)?)))
    }

    /// Columns of atom `j`'s relation holding the variables of `s`, in
    /// increasing variable order.
    pub fn columns(&self, j: usize, s: VarSet) -> Result<Vec<usize>, Error> {
        let atom = &self.atoms[j];
        s.iter()
            .map(|x| {
                atom.column_of(x).ok_or_else(|| {
                    Error::Unguarded(format!("{} does not occur in atom {j} ({})", self.varnames[x], atom.relation))
                })
            })
            .collect()
    }

    /// The relation instance bound to atom `j`, after an arity check.
    pub fn instance<'a>(&self, db: &'a Database, j: usize) -> Result<&'a Relation, Error> {
        let atom = &self.atoms[j];
        let r = db.get(&atom.relation)?;
        if r.arity() != atom.vars.len() {
            return Err(Error::Schema(format!(
                "{} has arity {}, atom {j} uses {}",
                atom.relation,
                r.arity(),
                atom.vars.len()
            )));
        }
        Ok(r)
    }

    pub fn girth(&self) -> Girth {
        girth(self)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) :- ", self.head, self.varnames.join(","))?;
        for (j, a) in self.atoms.iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            let vs: Vec<&str> = a.vars.iter().map(|&v| self.varnames[v].as_str()).collect();
            write!(f, "{}({})", a.relation, vs.join(","))?;
        }
        write!(f, ".")
    }
}

struct Lexer<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), Error> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {tok:?}")))
        }
    }

    fn ident(&mut self) -> Result<String, Error> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos || self.s[start].is_ascii_digit() {
            return Err(self.error("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.s[start..self.pos]).into_owned())
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at byte {}", self.pos))
    }

    fn call(&mut self) -> Result<(String, Vec<String>), Error> {
        let name = self.ident()?;
        self.expect("(")?;
        let mut args = vec![self.ident()?];
        while self.eat(",") {
            args.push(self.ident()?);
        }
        self.expect(")")?;
        Ok((name, args))
    }
}

/// Parses `Head(V1,…,Vn) :- A1(…), …, Am(…).` Text after `%` on a line is
/// a comment. Variables are ordered as in the head.
pub fn parse_query(text: &str, cap: usize) -> Result<Query, Error> {
    let cleaned: String = text
        .lines()
        .map(|l| l.split('%').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n");
    let mut lx = Lexer { s: cleaned.as_bytes(), pos: 0 };
    let (head, head_vars) = lx.call()?;
    lx.expect(":-")?;
    let mut body = vec![lx.call()?];
    while lx.eat(",") {
        body.push(lx.call()?);
    }
    lx.eat(".");
    lx.skip_ws();
    if lx.pos != lx.s.len() {
        return Err(lx.error("trailing input"));
    }
    for (i, v) in head_vars.iter().enumerate() {
        if head_vars[..i].contains(v) {
            return Err(Error::Parse(format!("variable {v} repeated in head")));
        }
    }
    let cap = cap.min(HARD_VARIABLE_CAP);
    if head_vars.len() > cap {
        return Err(Error::TooManyVariables { n: head_vars.len(), cap });
    }
    let mut atoms = Vec::with_capacity(body.len());
    let mut used = VarSet::EMPTY;
    for (rel, args) in body {
        let mut vars = Vec::with_capacity(args.len());
        for a in &args {
            let i = head_vars
                .iter()
                .position(|v| v == a)
                .ok_or_else(|| Error::Parse(format!("variable {a} of {rel} is not in the head")))?;
            if vars.contains(&i) {
                return Err(Error::Parse(format!("variable {a} repeated in atom {rel}")));
            }
            vars.push(i);
            used = used.with(i);
        }
        atoms.push(Atom { relation: rel, vars });
    }
    if used != VarSet::full(head_vars.len()) {
        let missing = VarSet::full(head_vars.len()).minus(used);
        return Err(Error::Parse(format!("head variables {} occur in no atom", missing.display(&head_vars))));
    }
    Ok(Query { head, varnames: head_vars, atoms })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Girth {
    /// Shortest cycle length; `None` when the atom graph is acyclic or the
    /// query has non-binary atoms.
    pub length: Option<usize>,
    pub diagnostic: Option<String>,
}

/// Shortest cycle in the multigraph with one edge per binary atom.
pub fn girth(q: &Query) -> Girth {
    if let Some(a) = q.atoms.iter().find(|a| a.vars.len() != 2) {
        return Girth {
            length: None,
            diagnostic: Some(format!("atom {} is not binary; girth is defined for binary atoms only", a.relation)),
        };
    }
    let edges: Vec<(usize, usize)> = q.atoms.iter().map(|a| (a.vars[0], a.vars[1])).collect();
    let mut best: Option<usize> = None;
    for (e, &(a, b)) in edges.iter().enumerate() {
        let mut dist = vec![usize::MAX; q.n()];
        dist[a] = 0;
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            for (f, &(s, t)) in edges.iter().enumerate() {
                if f == e {
                    continue;
                }
                let y = if s == x {
                    t
                } else if t == x {
                    s
                } else {
                    continue;
                };
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        if dist[b] != usize::MAX {
            let len = dist[b] + 1;
            best = Some(best.map_or(len, |g| g.min(len)));
        }
    }
    Girth { length: best, diagnostic: None }
}
