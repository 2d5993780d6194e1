//! Elements of `(ℚ/ℤ)^a ⊕ (ℚ/2ℤ)^b`, their orders, and orders of spanned subgroups.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::BigRat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TorsionError {
    #[error("empty coordinate signature")]
    EmptySignature,
    #[error("vectors have different modulus signatures")]
    SignatureMismatch,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

/// Target of a coordinate: `ℝ/ℤ` or `ℝ/2ℤ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Modulus {
    One,
    Two,
}

impl Modulus {
    pub fn value(self) -> i64 {
        match self {
            Modulus::One => 1,
            Modulus::Two => 2,
        }
    }

    pub fn as_rat(self) -> BigRat {
        BigRat::from_integer(BigInt::from(self.value()))
    }

    pub fn from_int(m: i64) -> Option<Modulus> {
        match m {
            1 => Some(Modulus::One),
            2 => Some(Modulus::Two),
            _ => None,
        }
    }
}

impl TryFrom<u8> for Modulus {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        Modulus::from_int(v as i64).ok_or_else(|| format!("modulus must be 1 or 2, got {v}"))
    }
}

impl From<Modulus> for u8 {
    fn from(m: Modulus) -> u8 {
        m.value() as u8
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Reduce into `[0, m)`.
pub fn reduce_mod(x: &BigRat, m: Modulus) -> BigRat {
    let mr = m.as_rat();
    let q = (x / &mr).floor();
    x - q * mr
}

/// Minimal `d ≥ 1` with `d·x ∈ mℤ`.
pub fn order_mod(x: &BigRat, m: Modulus) -> BigUint {
    let y = x / m.as_rat();
    y.denom().magnitude().clone()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionVector {
    coords: Vec<(BigRat, Modulus)>,
}

impl TorsionVector {
    pub fn new(coords: impl IntoIterator<Item = (BigRat, Modulus)>) -> Self {
        TorsionVector {
            coords: coords.into_iter().map(|(v, m)| (reduce_mod(&v, m), m)).collect(),
        }
    }

    pub fn coords(&self) -> &[(BigRat, Modulus)] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn signature(&self) -> Vec<Modulus> {
        self.coords.iter().map(|(_, m)| *m).collect()
    }

    /// Coordinates rescaled into `ℚ/ℤ`.
    fn normalized(&self) -> Vec<BigRat> {
        self.coords.iter().map(|(v, m)| v / m.as_rat()).collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self, TorsionError> {
        if self.signature() != other.signature() {
            return Err(TorsionError::SignatureMismatch);
        }
        Ok(Self::new(
            self.coords.iter().zip(&other.coords).map(|((a, m), (b, _))| (a + b, *m)),
        ))
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        let c = BigRat::from_integer(c.clone());
        Self::new(self.coords.iter().map(|(a, m)| (a * &c, *m)))
    }
}

impl fmt::Display for TorsionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (v, m)) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} mod {m}")?;
        }
        write!(f, ")")
    }
}

pub fn element_order(v: &TorsionVector) -> BigUint {
    v.coords
        .iter()
        .fold(BigUint::one(), |acc, (x, m)| acc.lcm(&order_mod(x, *m)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanReport {
    pub order: BigUint,
    /// Invariant factors of the spanned subgroup, ascending, each dividing the next.
    pub elementary_divisors: Vec<BigUint>,
}

pub fn span_order(vs: &[TorsionVector]) -> Result<SpanReport, TorsionError> {
    let Some(first) = vs.first() else {
        return Ok(SpanReport {
            order: BigUint::one(),
            elementary_divisors: Vec::new(),
        });
    };
    let sig = first.signature();
    if sig.is_empty() {
        return Err(TorsionError::EmptySignature);
    }
    if vs.iter().any(|v| v.signature() != sig) {
        return Err(TorsionError::SignatureMismatch);
    }
    let k = sig.len();
    let rows: Vec<Vec<BigRat>> = vs.iter().map(TorsionVector::normalized).collect();
    let d = rows
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|x| (x * BigRat::from_integer(d.clone())).to_integer()).collect())
        .collect();
    for i in 0..k {
        let mut row = vec![BigInt::zero(); k];
        row[i] = d.clone();
        m.push(row);
    }
    let diag = snf(&m);
    let mut order = BigUint::one();
    let mut divisors = Vec::new();
    for di in diag.iter().take(k) {
        let e = (&d / di).magnitude().clone();
        order *= &e;
        if !e.is_one() {
            divisors.push(e);
        }
    }
    divisors.sort();
    Ok(SpanReport {
        order,
        elementary_divisors: divisors,
    })
}

/// Smith normal form diagonal `d_1 | d_2 | …`, length `min(rows, cols)`.
pub fn snf(m: &[Vec<BigInt>]) -> Vec<BigInt> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let n = rows.min(cols);
    for t in 0..n {
        loop {
            // Pivot: minimal absolute value in the remaining block.
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !a[i][j].is_zero()
                        && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finish(&a, n);
            };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            let p = a[t][t].clone();
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&p);
                for j in t..cols {
                    let s = &q * &a[t][j];
                    a[i][j] -= s;
                }
                clean &= a[i][t].is_zero();
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&p);
                for i in t..rows {
                    let s = &q * &a[i][t];
                    a[i][j] -= s;
                }
                clean &= a[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !a[i][j].is_multiple_of(&p));
            match bad {
                Some((i, _)) => {
                    for j in t..cols {
                        let s = a[i][j].clone();
                        a[t][j] += s;
                    }
                }
                None => break,
            }
        }
    }
    finish(&a, n)
}

fn finish(a: &[Vec<BigInt>], n: usize) -> Vec<BigInt> {
    (0..n).map(|i| a[i][i].abs()).collect()
}

/// Exact determinant of a rational matrix.
pub fn rational_det(m: &[Vec<BigRat>]) -> BigRat {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = BigRat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return BigRat::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c].clone();
        det *= &piv;
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &piv;
            for j in c..n {
                let t = &f * &a[c][j];
                a[r][j] -= t;
            }
        }
    }
    det
}

/// Lower bound for the span of square generator data: the order in `ℚ/ℤ` of the
/// determinant after rescaling each coordinate into `ℚ/ℤ`.
pub fn det_order_bound(vs: &[TorsionVector]) -> Result<BigUint, TorsionError> {
    let rows = vs.len();
    if vs.iter().any(|v| v.len() != rows) {
        let cols = vs.first().map_or(0, TorsionVector::len);
        return Err(TorsionError::NotSquare { rows, cols });
    }
    let m: Vec<Vec<BigRat>> = vs.iter().map(TorsionVector::normalized).collect();
    Ok(order_mod(&rational_det(&m), Modulus::One))
}

/// [`det_order_bound`] for a matrix of values sharing one modulus.
pub fn det_order_bound_uniform(m: &[Vec<BigRat>], modulus: Modulus) -> Result<BigUint, TorsionError> {
    let vs: Vec<TorsionVector> = m
        .iter()
        .map(|r| TorsionVector::new(r.iter().map(|x| (x.clone(), modulus))))
        .collect();
    det_order_bound(&vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{pow2, rat};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::collections::HashSet;

    fn tv(xs: &[(i64, i64, i64)]) -> TorsionVector {
        TorsionVector::new(xs.iter().map(|&(n, d, m)| (rat(n, d), Modulus::from_int(m).unwrap())))
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn element_orders() {
        assert_eq!(element_order(&tv(&[(1, 8, 1)])), BigUint::from(8u32));
        assert_eq!(element_order(&tv(&[(0, 1, 1), (0, 1, 2)])), BigUint::one());
        for m in 0..4i64 {
            let v = TorsionVector::new([(-pow2(-4 * m - 2), Modulus::Two)]);
            assert_eq!(element_order(&v), BigUint::one() << (4 * m + 3) as usize);
        }
    }

    #[test]
    fn normalization() {
        let v = tv(&[(-1, 4, 2), (5, 4, 1)]);
        assert_eq!(v.coords()[0].0, rat(7, 4));
        assert_eq!(v.coords()[1].0, rat(1, 4));
    }

    #[test]
    fn span_examples() {
        let r = span_order(&[tv(&[(1, 2, 1), (0, 1, 1)]), tv(&[(0, 1, 1), (1, 2, 1)])]).unwrap();
        assert_eq!(r.order, BigUint::from(4u32));
        assert_eq!(r.elementary_divisors, vec![BigUint::from(2u32); 2]);
        for k in 0..=3i64 {
            let t = pow2(-4 * k - 2);
            let z = BigRat::zero();
            let mk = |a: &BigRat, b: &BigRat, c: &BigRat| {
                TorsionVector::new([(a.clone(), Modulus::Two), (b.clone(), Modulus::Two), (c.clone(), Modulus::Two)])
            };
            let r = span_order(&[mk(&z, &t, &t), mk(&t, &z, &t), mk(&t, &t, &z)]).unwrap();
            let want = BigUint::one() << (2 * (4 * k + 3) + 4 * k + 2) as usize;
            assert_eq!(r.order, want);
        }
        assert_eq!(span_order(&[]).unwrap().order, BigUint::one());
        assert_eq!(span_order(&[TorsionVector::new([])]), Err(TorsionError::EmptySignature));
        assert_eq!(
            span_order(&[tv(&[(1, 2, 1)]), tv(&[(1, 2, 2)])]),
            Err(TorsionError::SignatureMismatch)
        );
    }

    #[test]
    fn snf_examples() {
        assert_eq!(snf(&[big(&[2, 0]), big(&[0, 3])]), big(&[1, 6]));
        assert_eq!(snf(&[big(&[1, 0, 0]), big(&[0, 1, 0]), big(&[0, 0, 1])]), big(&[1, 1, 1]));
        assert_eq!(snf(&[big(&[0, 0]), big(&[0, 0])]), big(&[0, 0]));
        assert_eq!(snf(&[big(&[2, 4, 4]), big(&[-6, 6, 12]), big(&[10, -4, -16])]), big(&[2, 6, 12]));
    }

    #[test]
    fn snf_random_chain_and_determinant() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=4);
            let m: Vec<Vec<BigInt>> = (0..n)
                .map(|_| (0..n).map(|_| BigInt::from(rng.gen_range(-9..=9))).collect())
                .collect();
            let d = snf(&m);
            let det = rational_det(
                &m.iter()
                    .map(|r| r.iter().map(|x| BigRat::from_integer(x.clone())).collect())
                    .collect::<Vec<_>>(),
            );
            let prod: BigInt = d.iter().product();
            assert_eq!(BigRat::from_integer(prod), det.abs());
            for w in d.windows(2) {
                assert!(w[0].is_zero() && w[1].is_zero() || (!w[0].is_zero() && w[1].is_multiple_of(&w[0])));
            }
        }
    }

    #[test]
    fn determinant_bounds() {
        let m = vec![vec![rat(1, 2), BigRat::zero()], vec![BigRat::zero(), rat(1, 2)]];
        assert_eq!(det_order_bound_uniform(&m, Modulus::One).unwrap(), BigUint::from(4u32));
        for k in 1..=6i64 {
            let s = if k % 2 == 0 { 1 } else { -1 };
            let base = pow2(-k) * BigRat::from_integer(BigInt::from(s));
            let e = pow2(-2 * k - 1) * BigRat::from_integer(BigInt::from(s));
            let m = vec![
                vec![&base / BigRat::from_integer(BigInt::from(2)) + &e, &base / BigRat::from_integer(BigInt::from(2)) - &e],
                vec![base.clone(), base.clone()],
            ];
            assert_eq!(det_order_bound_uniform(&m, Modulus::One).unwrap(), BigUint::one() << (3 * k) as usize);
        }
        assert!(matches!(
            det_order_bound(&[tv(&[(1, 2, 1), (1, 2, 1)])]),
            Err(TorsionError::NotSquare { .. })
        ));
    }

    /// Subgroup of `(ℤ/D)^k` generated by integer rows, by closure.
    fn brute_span(rows: &[Vec<i64>], d: i64) -> usize {
        let k = rows[0].len();
        let mut seen: HashSet<Vec<i64>> = HashSet::from([vec![0; k]]);
        let mut frontier = vec![vec![0; k]];
        while let Some(x) = frontier.pop() {
            for r in rows {
                let y: Vec<i64> = x.iter().zip(r).map(|(a, b)| (a + b).rem_euclid(d)).collect();
                if seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        seen.len()
    }

    fn arb_rows() -> impl Strategy<Value = (i64, Vec<Vec<i64>>)> {
        (prop::sample::select(vec![2i64, 4, 8, 12, 16, 32, 64]), 1usize..=3, 1usize..=4).prop_flat_map(
            |(d, k, r)| (Just(d), prop::collection::vec(prop::collection::vec(0..d, k), r)),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn span_matches_brute_force((d, rows) in arb_rows()) {
            let vs: Vec<TorsionVector> = rows
                .iter()
                .map(|r| TorsionVector::new(r.iter().map(|&x| (rat(x, d), Modulus::One))))
                .collect();
            let rep = span_order(&vs).unwrap();
            prop_assert_eq!(rep.order.clone(), BigUint::from(brute_span(&rows, d)));
            let prod: BigUint = rep.elementary_divisors.iter().product();
            prop_assert_eq!(prod, rep.order);
        }

        #[test]
        fn span_of_one_is_element_order((d, rows) in arb_rows()) {
            let v = TorsionVector::new(rows[0].iter().map(|&x| (rat(x, d), Modulus::Two)));
            prop_assert_eq!(span_order(std::slice::from_ref(&v)).unwrap().order, element_order(&v));
        }

        #[test]
        fn span_invariant_under_moves((d, rows) in arb_rows()) {
            let vs: Vec<TorsionVector> = rows
                .iter()
                .map(|r| TorsionVector::new(r.iter().map(|&x| (rat(x, d), Modulus::One))))
                .collect();
            let base = span_order(&vs).unwrap().order;
            let mut moved = vs.clone();
            moved.reverse();
            moved[0] = moved[0].scale(&BigInt::from(-1));
            if moved.len() > 1 {
                moved[1] = moved[1].add(&moved[0]).unwrap();
            }
            prop_assert_eq!(span_order(&moved).unwrap().order, base);
        }

        #[test]
        fn determinant_bound_is_lower_bound((d, rows) in arb_rows()) {
            let k = rows[0].len();
            prop_assume!(rows.len() >= k);
            let vs: Vec<TorsionVector> = rows[..k]
                .iter()
                .map(|r| TorsionVector::new(r.iter().map(|&x| (rat(x, d), Modulus::One))))
                .collect();
            let all: Vec<TorsionVector> = rows
                .iter()
                .map(|r| TorsionVector::new(r.iter().map(|&x| (rat(x, d), Modulus::One))))
                .collect();
            let bound = det_order_bound(&vs).unwrap();
            let span = span_order(&all).unwrap().order;
            prop_assert!(span >= bound);
        }
    }
}
