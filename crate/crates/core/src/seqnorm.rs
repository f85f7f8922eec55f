//! Conversion between a degree sequence of length `m` and its first `m`
//! power sums `Σ dᵢ^k`, which determine it uniquely.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::relalg::DegreeSequence;
use crate::scalar::{ratio_to_f64, Rational};
use crate::Error;

/// Distance within which a recovered root is snapped to an integer.
pub const SNAP_TOLERANCE: f64 = 1e-6;
/// Width to which isolated roots are refined.
const ROOT_WIDTH: f64 = 1e-9;

/// `(Σ dᵢ, Σ dᵢ², …, Σ dᵢ^m)` with `m` the sequence length.
pub fn sequence_to_power_sums(d: &[u64]) -> Vec<Rational> {
    (1..=d.len())
        .map(|k| {
            let s: BigInt = d.iter().map(|&x| num_traits::pow(BigInt::from(x), k)).sum();
            Rational::from_integer(s)
        })
        .collect()
}

/// Elementary symmetric polynomials `e_0..e_m` from power sums via Newton's
/// identities `k·e_k = Σ_{j=1..k} (−1)^(j−1) e_{k−j} p_j`.
pub fn elementary_symmetric(power_sums: &[Rational]) -> Vec<Rational> {
    let mut e = vec![Rational::one()];
    for k in 1..=power_sums.len() {
        let mut acc = Rational::zero();
        for j in 1..=k {
            let term = &e[k - j] * &power_sums[j - 1];
            if j % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        e.push(acc / Rational::from_integer(BigInt::from(k)));
    }
    e
}

/// Recovers the real values `x₁ ≥ … ≥ x_m ≥ 0` whose power sums are given.
/// Values within 1e-6 of an integer are snapped to it.
pub fn power_sums_to_values(power_sums: &[Rational]) -> Result<Vec<f64>, Error> {
    let m = power_sums.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let e = elementary_symmetric(power_sums);
    // Monic λ^m − e₁λ^(m−1) + e₂λ^(m−2) − …, stored lowest degree first.
    let mut f = vec![Rational::zero(); m + 1];
    for (i, ei) in e.iter().enumerate() {
        f[m - i] = if i % 2 == 0 { ei.clone() } else { -ei.clone() };
    }
    let mut roots = Vec::with_capacity(m);
    for (mult, factor) in square_free_factors(&f) {
        for r in real_roots(&factor)? {
            roots.extend(std::iter::repeat_n(r, mult));
        }
    }
    if roots.len() != m {
        return Err(invalid("the polynomial has complex roots"));
    }
    let mut out = Vec::with_capacity(m);
    for r in roots {
        let x = ratio_to_f64(&r);
        if x < 0.0 {
            return Err(invalid("the polynomial has a negative root"));
        }
        let nearest = x.round();
        out.push(if (x - nearest).abs() <= SNAP_TOLERANCE { nearest } else { x });
    }
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(out)
}

/// Like [`power_sums_to_values`], but requires integer values. Zero values
/// are padding and are dropped from the returned sequence.
pub fn power_sums_to_sequence(power_sums: &[Rational]) -> Result<DegreeSequence, Error> {
    let values = power_sums_to_values(power_sums)?;
    if let Some(x) = values.iter().find(|x| x.fract() != 0.0) {
        return Err(invalid(&format!("recovered value {x} is not an integer")));
    }
    DegreeSequence::new(values.into_iter().filter(|x| *x > 0.0).map(|x| x as u64).collect())
}

fn invalid(why: &str) -> Error {
    Error::Domain(format!("not a valid power-sum vector: {why}"))
}

type Poly = Vec<Rational>;

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn degree(p: &Poly) -> usize {
    p.len().saturating_sub(1)
}

fn is_zero_poly(p: &Poly) -> bool {
    p.iter().all(Zero::is_zero)
}

fn derivative(p: &Poly) -> Poly {
    if p.len() <= 1 {
        return vec![Rational::zero()];
    }
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * Rational::from_integer(BigInt::from(i)))
            .collect(),
    )
}

fn sub(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![Rational::zero(); a.len().max(b.len())];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] -= c;
    }
    trim(out)
}

/// Quotient and remainder of polynomial division.
fn divmod(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let b = trim(b.clone());
    let mut r = trim(a.clone());
    let db = degree(&b);
    let lead = b[db].clone();
    let mut q = vec![Rational::zero(); r.len().saturating_sub(db).max(1)];
    while !is_zero_poly(&r) && degree(&r) >= db {
        let shift = degree(&r) - db;
        let c = &r[degree(&r)] / &lead;
        for (i, bc) in b.iter().enumerate() {
            r[i + shift] -= &c * bc;
        }
        q[shift] = c;
        r = trim(r);
    }
    (trim(q), r)
}

fn monic(p: Poly) -> Poly {
    let p = trim(p);
    let lead = p[degree(&p)].clone();
    if lead.is_zero() {
        return p;
    }
    p.into_iter().map(|c| c / &lead).collect()
}

fn gcd(a: &Poly, b: &Poly) -> Poly {
    let (mut x, mut y) = (trim(a.clone()), trim(b.clone()));
    while !is_zero_poly(&y) {
        let (_, r) = divmod(&x, &y);
        x = y;
        y = r;
    }
    monic(x)
}

/// Yun's square-free factorization: pairs `(i, aᵢ)` with `f = Π aᵢ^i`.
fn square_free_factors(f: &Poly) -> Vec<(usize, Poly)> {
    let f = monic(f.clone());
    let df = derivative(&f);
    let a0 = gcd(&f, &df);
    let mut b = divmod(&f, &a0).0;
    let c = divmod(&df, &a0).0;
    let mut d = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while degree(&b) > 0 {
        let a = gcd(&b, &d);
        let next_b = divmod(&b, &a).0;
        let next_c = divmod(&d, &a).0;
        if degree(&a) > 0 {
            out.push((i, a));
        }
        d = sub(&next_c, &derivative(&next_b));
        b = next_b;
        i += 1;
    }
    out
}

fn eval(p: &Poly, x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

fn sturm_chain(p: &Poly) -> Vec<Poly> {
    let mut chain = vec![trim(p.clone()), derivative(p)];
    while !is_zero_poly(chain.last().unwrap()) && degree(chain.last().unwrap()) > 0 {
        let k = chain.len();
        let (_, r) = divmod(&chain[k - 2], &chain[k - 1]);
        if is_zero_poly(&r) {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    chain
}

fn sign_changes(chain: &[Poly], x: &Rational) -> usize {
    let signs: Vec<i8> = chain
        .iter()
        .map(|p| {
            let v = eval(p, x);
            if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            }
        })
        .filter(|s| *s != 0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Real roots of a square-free polynomial, each refined to width 1e-9 (or
/// exact when a bisection point hits it). Fails if some roots are complex.
fn real_roots(p: &Poly) -> Result<Vec<Rational>, Error> {
    let p = monic(p.clone());
    let n = degree(&p);
    if n == 0 {
        return Ok(Vec::new());
    }
    // Cauchy bound: all roots lie in (−B, B).
    let bound = p[..n].iter().map(|c| c.abs()).fold(Rational::zero(), |a, b| if b > a { b } else { a })
        + Rational::one()
        + Rational::one();
    let chain = sturm_chain(&p);
    let lo = -bound.clone();
    let count = sign_changes(&chain, &lo) - sign_changes(&chain, &bound);
    if count != n {
        return Err(invalid("the polynomial has complex roots"));
    }
    let mut roots = Vec::with_capacity(n);
    let mut stack = vec![(lo, bound)];
    let two = Rational::from_integer(BigInt::from(2));
    let width = crate::scalar::dyadic_ceil(ROOT_WIDTH);
    while let Some((a, b)) = stack.pop() {
        let k = sign_changes(&chain, &a) - sign_changes(&chain, &b);
        if k == 0 {
            continue;
        }
        if k == 1 {
            roots.push(refine(&p, a, b, &width));
            continue;
        }
        let mid = (&a + &b) / &two;
        if eval(&p, &mid).is_zero() {
            roots.push(mid.clone());
            // Exclude the exact root from both halves.
            let eps = Rational::new(BigInt::one(), BigInt::from(1u64 << 50));
            stack.push((a, &mid - &eps));
            stack.push((mid.clone(), b));
            continue;
        }
        stack.push((a, mid.clone()));
        stack.push((mid, b));
    }
    roots.sort();
    Ok(roots)
}

/// Bisects `(a, b]` holding exactly one simple root.
fn refine(p: &Poly, mut a: Rational, mut b: Rational, width: &Rational) -> Rational {
    let two = Rational::from_integer(BigInt::from(2));
    if eval(p, &b).is_zero() {
        return b;
    }
    let sb = eval(p, &b).is_positive();
    while &b - &a > *width {
        let mid = (&a + &b) / &two;
        let v = eval(p, &mid);
        if v.is_zero() {
            return mid;
        }
        if v.is_positive() == sb {
            b = mid;
        } else {
            a = mid;
        }
    }
    // Prefer an exact integer when one lies in the final interval.
    let r = (&a + &b) / &two;
    let nearest = Rational::from_integer(r.round().to_integer());
    if nearest >= a && nearest <= b && eval(p, &nearest).is_zero() {
        return nearest;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn forward_examples() {
        assert_eq!(sequence_to_power_sums(&[2, 2, 1]), ints(&[5, 9, 17]));
        assert_eq!(sequence_to_power_sums(&[7]), ints(&[7]));
        assert_eq!(sequence_to_power_sums(&[1, 1, 1]), ints(&[3, 3, 3]));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(power_sums_to_sequence(&ints(&[5, 9, 17])).unwrap().degrees(), &[2, 2, 1]);
        assert_eq!(power_sums_to_sequence(&ints(&[3, 3, 3])).unwrap().degrees(), &[1, 1, 1]);
        assert!(power_sums_to_sequence(&ints(&[1, 5])).is_err());
    }

    #[test]
    fn newton_by_hand() {
        // (1, 5): e₁ = 1, e₂ = (e₁p₁ − p₂)/2 = −2.
        let e = elementary_symmetric(&ints(&[1, 5]));
        assert_eq!(e, ints(&[1, 1, -2]));
    }

    #[test]
    fn complex_roots_rejected() {
        // x² + 1 has power sums (0, −2).
        assert!(power_sums_to_values(&ints(&[0, -2])).is_err());
    }

    #[test]
    fn non_integer_values() {
        // Values 1/2 and 3/2.
        let v = power_sums_to_values(&[int(2), Rational::new(5.into(), 2.into())]).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-9 && (v[1] - 0.5).abs() < 1e-9);
        assert!(power_sums_to_sequence(&[int(2), Rational::new(5.into(), 2.into())]).is_err());
    }

    #[test]
    fn zero_padding_dropped() {
        assert_eq!(power_sums_to_sequence(&ints(&[2, 4])).unwrap().degrees(), &[2]);
    }
}
