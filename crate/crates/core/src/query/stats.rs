//! Abstract and concrete ℓp statistics, their JSON form, and satisfaction.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use super::Query;
use crate::relalg::{degree_sequence, lp_norm, Database, DegreeSequence};
use crate::scalar::{dyadic_ceil, format_rational, parse_rational, ratio_to_f64, Rational};
use crate::varset::VarSet;
use crate::Error;

/// Satisfaction tolerance in bits.
pub const SATISFACTION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Norm {
    Finite(Rational),
    Infinity,
}

impl Norm {
    pub fn int(p: i64) -> Self {
        Norm::Finite(crate::scalar::int(p))
    }

    /// `1/p`, and zero for `p = ∞`.
    pub fn inverse(&self) -> Rational {
        match self {
            Norm::Finite(p) => p.recip(),
            Norm::Infinity => Rational::zero(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Norm::Finite(p) => ratio_to_f64(p),
            Norm::Infinity => f64::INFINITY,
        }
    }

    /// `Some(k)` for a positive integer norm index.
    pub fn as_integer(&self) -> Option<u32> {
        match self {
            Norm::Finite(p) if p.is_integer() && p.is_positive() => p.to_integer().to_u32(),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Norm::Infinity)
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let t = text.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
            return Ok(Norm::Infinity);
        }
        let p = parse_rational(t).ok_or_else(|| Error::Parse(format!("bad norm index {t:?}")))?;
        if !p.is_positive() {
            return Err(Error::Domain(format!("norm index must be positive, got {t}")));
        }
        Ok(Norm::Finite(p))
    }

    pub fn to_json(&self) -> Value {
        match self {
            Norm::Infinity => Value::String("inf".into()),
            Norm::Finite(p) => rational_json(p),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Infinity => write!(f, "inf"),
            Norm::Finite(p) => write!(f, "{}", format_rational(p)),
        }
    }
}

/// `((V|U), p)` guarded by atom `atom`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StatisticSpec {
    pub atom: usize,
    pub u: VarSet,
    pub v: VarSet,
    pub p: Norm,
}

impl StatisticSpec {
    pub fn new(atom: usize, u: VarSet, v: VarSet, p: Norm) -> Self {
        StatisticSpec { atom, u, v, p }
    }

    /// At most one conditioning variable.
    pub fn is_simple(&self) -> bool {
        self.u.len() <= 1
    }

    pub fn check_guard(&self, q: &Query) -> Result<(), Error> {
        let atom = q
            .atoms
            .get(self.atom)
            .ok_or_else(|| Error::Unguarded(format!("no atom {}", self.atom)))?;
        if !self.u.union(self.v).is_subset(atom.varset()) {
            return Err(Error::Unguarded(format!(
                "({}|{}) is not contained in atom {} ({})",
                self.v.display(&q.varnames),
                self.u.display(&q.varnames),
                self.atom,
                atom.relation
            )));
        }
        Ok(())
    }

    pub fn display(&self, q: &Query) -> String {
        format!(
            "{}: ({}|{}) p={}",
            q.atoms[self.atom].relation,
            self.v.display(&q.varnames),
            self.u.display(&q.varnames),
            self.p
        )
    }

    /// Degree sequence of this statistic on its guard's instance.
    pub fn degrees(&self, q: &Query, db: &Database) -> Result<DegreeSequence, Error> {
        self.check_guard(q)?;
        let r = q.instance(db, self.atom)?;
        degree_sequence(r, &q.columns(self.atom, self.v)?, &q.columns(self.atom, self.u)?)
    }

    /// `log₂ ‖deg(V|U)‖_p` measured on `db`.
    pub fn measure(&self, q: &Query, db: &Database) -> Result<f64, Error> {
        let d = self.degrees(q, db)?;
        if d.is_empty() {
            // An empty guard has every norm equal to zero.
            return Ok(f64::NEG_INFINITY);
        }
        lp_norm(&d, &self.p)
    }
}

/// A statistic with its bound `b = log₂ B` in bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteStatistic {
    pub spec: StatisticSpec,
    pub b: Rational,
}

impl ConcreteStatistic {
    pub fn new(spec: StatisticSpec, b: Rational) -> Self {
        ConcreteStatistic { spec, b }
    }

    /// Measures `spec` on `db`, rounding the bound up to a multiple of
    /// 2^-40 so the data satisfies it. An empty guard yields `b = 0`.
    pub fn measured(spec: StatisticSpec, q: &Query, db: &Database) -> Result<Self, Error> {
        let x = spec.measure(q, db)?;
        let b = if x.is_finite() { dyadic_ceil(x.max(0.0) + 1e-12) } else { Rational::zero() };
        Ok(ConcreteStatistic { spec, b })
    }
}

pub fn rational_json(r: &Rational) -> Value {
    let s = format_rational(r);
    if s.contains('/') {
        Value::String(s)
    } else {
        serde_json::from_str(&s).unwrap_or(Value::String(s))
    }
}

/// Reads a number (exactly, from its decimal text) or a `"n/d"` string.
pub fn json_rational(v: &Value) -> Option<Rational> {
    match v {
        Value::Number(n) => parse_rational(&n.to_string()),
        Value::String(s) => parse_rational(s),
        _ => None,
    }
}

/// `log₂ B` exactly when `B` is a power of two (including fractional
/// powers given as `2^(a/c)`-free rationals), otherwise rounded up to 2^-40.
pub fn log2_bound(raw: &Rational) -> Result<Rational, Error> {
    if *raw < Rational::one() {
        return Err(Error::Domain(format!("statistic bound B must be at least 1, got {}", format_rational(raw))));
    }
    if raw.is_integer() {
        let n = raw.to_integer();
        if (&n & (&n - BigInt::one())).is_zero() {
            return Ok(Rational::from_integer(BigInt::from(n.bits() - 1)));
        }
    }
    Ok(dyadic_ceil(ratio_to_f64(raw).log2()))
}

fn names_of(v: &Value, key: &str) -> Result<Vec<String>, Error> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(a)) => a
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| Error::Parse(format!("{key} entries must be names"))))
            .collect(),
        Some(Value::String(s)) => Ok(s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()),
        Some(_) => Err(Error::Parse(format!("{key} must be a list of variable names"))),
    }
}

/// Parses one statistic object; `b`/`B` may be absent for abstract specs.
pub fn spec_from_json(q: &Query, v: &Value) -> Result<(StatisticSpec, Option<Rational>), Error> {
    let atom = v
        .get("atom")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Parse("statistic needs an integer \"atom\"".into()))? as usize;
    let u = names_of(v, "U")?;
    let vv = names_of(v, "V")?;
    let u = q.varset_of(&u.iter().map(String::as_str).collect::<Vec<_>>())?;
    let vv = q.varset_of(&vv.iter().map(String::as_str).collect::<Vec<_>>())?;
    let p = match v.get("p") {
        Some(Value::String(s)) => Norm::parse(s)?,
        Some(Value::Number(n)) => Norm::parse(&n.to_string())?,
        _ => return Err(Error::Parse("statistic needs \"p\" (number or \"inf\")".into())),
    };
    let spec = StatisticSpec::new(atom, u, vv, p);
    spec.check_guard(q)?;
    let b = match (v.get("b"), v.get("B")) {
        (Some(b), _) => {
            let b = json_rational(b).ok_or_else(|| Error::Parse("\"b\" must be a number".into()))?;
            if b.is_negative() {
                return Err(Error::Domain("log bound b must be nonnegative".into()));
            }
            Some(b)
        }
        (None, Some(raw)) => {
            Some(log2_bound(&json_rational(raw).ok_or_else(|| Error::Parse("\"B\" must be a number".into()))?)?)
        }
        (None, None) => None,
    };
    Ok((spec, b))
}

/// Parses a JSON array of concrete statistics.
pub fn stats_from_json(q: &Query, v: &Value) -> Result<Vec<ConcreteStatistic>, Error> {
    let arr = v.as_array().ok_or_else(|| Error::Parse("statistics must be a JSON array".into()))?;
    arr.iter()
        .map(|item| {
            let (spec, b) = spec_from_json(q, item)?;
            let b = b.ok_or_else(|| Error::Parse("statistic needs \"b\" or \"B\"".into()))?;
            Ok(ConcreteStatistic::new(spec, b))
        })
        .collect()
}

/// Parses a JSON array of statistic specs, ignoring any bounds.
pub fn specs_from_json(q: &Query, v: &Value) -> Result<Vec<StatisticSpec>, Error> {
    let arr = v.as_array().ok_or_else(|| Error::Parse("statistics must be a JSON array".into()))?;
    arr.iter().map(|item| spec_from_json(q, item).map(|(s, _)| s)).collect()
}

pub fn spec_json(q: &Query, s: &StatisticSpec) -> Value {
    let names = |set: VarSet| set.iter().map(|i| q.varnames[i].clone()).collect::<Vec<_>>();
    json!({
        "atom": s.atom,
        "relation": q.atoms[s.atom].relation,
        "U": names(s.u),
        "V": names(s.v),
        "p": s.p.to_json(),
    })
}

pub fn stats_to_json(q: &Query, stats: &[ConcreteStatistic]) -> Value {
    Value::Array(
        stats
            .iter()
            .map(|c| {
                let mut v = spec_json(q, &c.spec);
                v["b"] = rational_json(&c.b);
                v["B"] = json!(2f64.powf(ratio_to_f64(&c.b)));
                v
            })
            .collect(),
    )
}

#[derive(Clone, Debug)]
pub struct Satisfaction {
    pub ok: bool,
    /// `b − log₂‖deg‖_p` per statistic.
    pub slack: Vec<f64>,
}

/// Exact comparison `‖d‖_p ≤ 2^b` for integer or infinite `p`, when the
/// numbers involved stay small enough to raise to integer powers.
pub fn satisfied_exactly(d: &DegreeSequence, p: &Norm, b: &Rational) -> Option<bool> {
    if d.is_empty() {
        return Some(true);
    }
    let (num, den) = (b.numer().to_i64()?, b.denom().to_u32()?);
    if den > 64 || num < 0 {
        return None;
    }
    // ‖d‖_p ≤ 2^(num/den)  ⇔  (Σ dᵢ^k)^den ≤ 2^(num·k), with k = 1 for max.
    let (lhs, k) = match p {
        Norm::Infinity => (BigInt::from(d.max()), 1u32),
        _ => {
            let k = p.as_integer()?;
            (d.degrees().iter().map(|&x| num_traits::pow(BigInt::from(x), k as usize)).sum(), k)
        }
    };
    let exp = num.checked_mul(k as i64)?;
    if exp > 1 << 16 || lhs.bits() * den as u64 > 1 << 16 {
        return None;
    }
    Some(num_traits::pow(lhs, den as usize) <= (BigInt::one() << exp as usize))
}

/// Whether `db` satisfies every statistic. Integer and infinite norms with
/// small denominators are compared exactly; the rest within 1e-9 bits.
pub fn satisfies(q: &Query, db: &Database, stats: &[ConcreteStatistic]) -> Result<Satisfaction, Error> {
    let mut ok = true;
    let mut slack = Vec::with_capacity(stats.len());
    for c in stats {
        let d = c.spec.degrees(q, db)?;
        let actual = if d.is_empty() { f64::NEG_INFINITY } else { lp_norm(&d, &c.spec.p)? };
        let b = ratio_to_f64(&c.b);
        let holds = satisfied_exactly(&d, &c.spec.p, &c.b).unwrap_or(actual <= b + SATISFACTION_TOLERANCE);
        ok &= holds;
        slack.push(b - actual);
    }
    Ok(Satisfaction { ok, slack })
}
