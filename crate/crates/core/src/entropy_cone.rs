//! Set functions over `2^[n]`, step functions, and the constraint systems of
//! the polymatroid, normal and modular cones.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde_json::{Map, Value};

use crate::query::StatisticSpec;
use crate::scalar::{Rational, Scalar};
use crate::varset::VarSet;

/// Dense vector indexed by every subset of `n` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFunction<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> SetFunction<T> {
    pub fn zeros(n: usize) -> Self {
        SetFunction { n, values: vec![T::zero(); 1 << n] }
    }

    pub fn from_values(n: usize, values: Vec<T>) -> Self {
        assert_eq!(values.len(), 1 << n, "set function needs 2^n values");
        SetFunction { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, s: VarSet) -> &T {
        &self.values[s.bits()]
    }

    pub fn set(&mut self, s: VarSet, v: T) {
        self.values[s.bits()] = v;
    }

    /// `h(U ∪ V) − h(U)`.
    pub fn conditional(&self, v: VarSet, u: VarSet) -> T {
        self.get(u.union(v)).clone() - self.get(u).clone()
    }

    /// `(1/p)·h(U) + h(V|U)`, the entropy-side value of an ℓp statistic.
    pub fn stat_term(&self, spec: &StatisticSpec) -> T {
        let w = T::from_rational(&spec.p.inverse());
        w * self.get(spec.u).clone() + self.conditional(spec.v, spec.u)
    }

    pub fn add_scaled(&mut self, other: &SetFunction<T>, k: &T) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += k.clone() * b.clone();
        }
    }

    pub fn scaled(&self, k: &T) -> Self {
        SetFunction {
            n: self.n,
            values: self.values.iter().map(|v| v.clone() * k.clone()).collect(),
        }
    }

    pub fn map<S: Scalar>(&self, f: impl Fn(&T) -> S) -> SetFunction<S> {
        SetFunction { n: self.n, values: self.values.iter().map(f).collect() }
    }

    /// Every elementary Shannon inequality holds within `tol` and `h(∅) = 0`.
    pub fn is_polymatroid(&self, tol: &T) -> bool {
        let zero = T::zero();
        if self.get(VarSet::EMPTY).clone() > tol.clone()
            || self.get(VarSet::EMPTY).clone() < zero.clone() - tol.clone()
        {
            return false;
        }
        shannon_constraints(self.n)
            .iter()
            .all(|row| row.eval(self) >= zero.clone() - tol.clone())
    }

    /// JSON map from comma-joined variable names to values.
    pub fn to_json(&self, names: &[String], render: impl Fn(&T) -> Value) -> Value {
        let mut m = Map::new();
        for s in VarSet::all(self.n) {
            m.insert(s.display(names), render(self.get(s)));
        }
        Value::Object(m)
    }
}

impl SetFunction<Rational> {
    /// Reads the map produced by [`SetFunction::to_json`]; missing subsets
    /// are an error except `∅`, which defaults to zero.
    pub fn from_json(names: &[String], v: &Value) -> Result<Self, String> {
        let obj = v.as_object().ok_or("set function must be a JSON object")?;
        let n = names.len();
        let mut h = SetFunction::<Rational>::zeros(n);
        let mut seen = vec![false; 1 << n];
        seen[0] = true;
        for (key, value) in obj {
            let mut s = VarSet::EMPTY;
            for part in key.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let i = names
                    .iter()
                    .position(|x| x == part)
                    .ok_or_else(|| format!("unknown variable {part:?}"))?;
                s = s.with(i);
            }
            let r = crate::query::stats::json_rational(value)
                .ok_or_else(|| format!("bad value for {key:?}"))?;
            h.set(s, r);
            seen[s.bits()] = true;
        }
        if let Some(missing) = seen.iter().position(|x| !x) {
            return Err(format!("missing value for {:?}", VarSet(missing as u32).display(names)));
        }
        Ok(h)
    }
}

/// The step function `h^V(U) = [V ∩ U ≠ ∅]`.
pub fn step_function<T: Scalar>(v: VarSet, n: usize) -> SetFunction<T> {
    let values = VarSet::all(n)
        .map(|u| if u.intersect(v).is_empty() { T::zero() } else { T::one() })
        .collect();
    SetFunction::from_values(n, values)
}

/// Sparse linear form over set-function coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearTerm {
    pub coeffs: BTreeMap<VarSet, Rational>,
}

impl LinearTerm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, s: VarSet, c: Rational) {
        let e = self.coeffs.entry(s).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&s);
        }
    }

    pub fn add_term(&mut self, other: &LinearTerm, k: &Rational) {
        for (s, c) in &other.coeffs {
            self.add(*s, c * k);
        }
    }

    pub fn eval<T: Scalar>(&self, h: &SetFunction<T>) -> T {
        let mut acc = T::zero();
        for (s, c) in &self.coeffs {
            acc += T::from_rational(c) * h.get(*s).clone();
        }
        acc
    }

    /// The linear form of [`SetFunction::stat_term`].
    pub fn of_statistic(spec: &StatisticSpec) -> Self {
        let mut t = LinearTerm::new();
        let w = spec.p.inverse();
        t.add(spec.u.union(spec.v), Rational::one());
        t.add(spec.u, w - Rational::one());
        t.coeffs.remove(&VarSet::EMPTY);
        t
    }

    pub fn display(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (s, c) in &self.coeffs {
            let sign = if c < &Rational::zero() { " - " } else { " + " };
            let mag = crate::scalar::format_rational(&num_traits::Signed::abs(c));
            out.push_str(sign);
            if mag != "1" {
                out.push_str(&mag);
                out.push('*');
            }
            out.push_str(&format!("h({})", s.display(names)));
        }
        out.trim_start_matches(" + ").to_string()
    }
}

pub fn check_cap(n: usize) -> Result<(), crate::Error> {
    if n > crate::query::HARD_VARIABLE_CAP {
        return Err(crate::Error::TooManyVariables { n, cap: crate::query::HARD_VARIABLE_CAP });
    }
    Ok(())
}

/// Elementary Shannon inequalities, each row meaning `row(h) ≥ 0`:
/// `n` monotonicities followed by `C(n,2)·2^(n−2)` elementary submodularities.
/// `h(∅) = 0` is left to the caller, which drops that coordinate.
pub fn shannon_constraints(n: usize) -> Vec<LinearTerm> {
    let full = VarSet::full(n);
    let mut rows = Vec::new();
    for x in 0..n {
        let mut t = LinearTerm::new();
        t.add(full, Rational::one());
        t.add(full.minus(VarSet::singleton(x)), -Rational::one());
        t.coeffs.remove(&VarSet::EMPTY);
        rows.push(t);
    }
    for x in 0..n {
        for y in x + 1..n {
            let rest = full.minus(VarSet::from_indices([x, y]));
            for w in VarSet::all(n).filter(|w| w.is_subset(rest)) {
                let mut t = LinearTerm::new();
                t.add(w.with(x), Rational::one());
                t.add(w.with(y), Rational::one());
                t.add(w.with(x).with(y), -Rational::one());
                t.add(w, -Rational::one());
                t.coeffs.remove(&VarSet::EMPTY);
                rows.push(t);
            }
        }
    }
    rows
}

/// The `2^n − 1` step functions of nonempty sets, in bitmask order.
pub fn normal_cone_basis<T: Scalar>(n: usize) -> Vec<SetFunction<T>> {
    VarSet::all(n).skip(1).map(|v| step_function(v, n)).collect()
}

/// The `n` singleton step functions.
pub fn modular_cone_basis<T: Scalar>(n: usize) -> Vec<SetFunction<T>> {
    (0..n).map(|i| step_function(VarSet::singleton(i), n)).collect()
}
