//! Exact rationals and elements of cyclotomic fields.
//!
//! A [`CycNum`] of order `n` is stored in the power basis `1, ζ, …, ζ^{φ(n)-1}`
//! modulo the `n`-th cyclotomic polynomial. Binary operations between values of
//! different orders lift both operands to the field of the least common order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type BigRat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("galois exponent {k} is not coprime to order {order}")]
    NotCoprime { k: i64, order: u32 },
}

pub fn rat(n: i64, d: i64) -> BigRat {
    BigRat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRat {
    BigRat::from_integer(BigInt::from(n))
}

/// `2^e` as a rational, negative exponents allowed.
pub fn pow2(e: i64) -> BigRat {
    let p = BigInt::one() << e.unsigned_abs() as usize;
    if e >= 0 {
        BigRat::from_integer(p)
    } else {
        BigRat::new(BigInt::one(), p)
    }
}

fn cyclotomic_cache() -> &'static Mutex<HashMap<u32, Arc<Vec<i128>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<i128>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients of the `n`-th cyclotomic polynomial, lowest degree first.
pub fn cyclotomic_poly(n: u32) -> Arc<Vec<i128>> {
    assert!(n >= 1, "cyclotomic order must be positive");
    if let Some(p) = cyclotomic_cache().lock().unwrap().get(&n) {
        return Arc::clone(p);
    }
    let mut num = vec![0i128; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            let phi_d = cyclotomic_poly(d);
            num = monic_exact_div(&num, &phi_d);
        }
    }
    let p = Arc::new(num);
    cyclotomic_cache()
        .lock()
        .unwrap()
        .entry(n)
        .or_insert_with(|| Arc::clone(&p));
    p
}

fn monic_exact_div(num: &[i128], den: &[i128]) -> Vec<i128> {
    let dn = den.len() - 1;
    let mut rem = num.to_vec();
    let mut q = vec![0i128; num.len() - dn];
    for i in (dn..num.len()).rev() {
        let c = rem[i];
        if c != 0 {
            q[i - dn] = c;
            for (j, &dj) in den.iter().enumerate() {
                rem[i - dn + j] -= c * dj;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    q
}

pub fn euler_phi(n: u32) -> u32 {
    (cyclotomic_poly(n).len() - 1) as u32
}

// Dense rational polynomials, lowest degree first, trailing zeros trimmed.
type Poly = Vec<BigRat>;

fn trim(p: &mut Poly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn reduce_mod_cyclotomic(mut p: Poly, n: u32) -> Poly {
    let phi = cyclotomic_poly(n);
    let d = phi.len() - 1;
    if p.len() > d {
        for i in (d..p.len()).rev() {
            if p[i].is_zero() {
                continue;
            }
            let c = p[i].clone();
            for (j, &pj) in phi.iter().enumerate() {
                if pj != 0 {
                    p[i - d + j] -= &c * BigRat::from_integer(BigInt::from(pj));
                }
            }
        }
        p.truncate(d);
    }
    trim(&mut p);
    p
}

fn poly_divrem(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    trim(&mut r);
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let lead = b.last().unwrap().clone();
    let mut q = vec![BigRat::zero(); r.len() - b.len() + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let c = r.last().unwrap() / &lead;
        for (j, bj) in b.iter().enumerate() {
            r[shift + j] -= &c * bj;
        }
        q[shift] = c;
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

fn poly_sub(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    if out.len() < b.len() {
        out.resize(b.len(), BigRat::zero());
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(&mut out);
    out
}

/// An element of `ℚ(ζ_order)` in the reduced power basis.
#[derive(Clone, Debug)]
pub struct CycNum {
    order: u32,
    coeffs: BTreeMap<u32, BigRat>,
}

impl CycNum {
    fn from_dense(order: u32, p: Poly) -> Self {
        let p = reduce_mod_cyclotomic(p, order);
        let coeffs = p
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i as u32, c))
            .collect();
        CycNum { order, coeffs }
    }

    fn dense(&self) -> Poly {
        let mut p = vec![BigRat::zero(); euler_phi(self.order) as usize];
        for (&k, c) in &self.coeffs {
            p[k as usize] = c.clone();
        }
        trim(&mut p);
        p
    }

    pub fn zero() -> Self {
        CycNum {
            order: 1,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::from_rational(BigRat::one())
    }

    pub fn from_rational(r: BigRat) -> Self {
        let mut coeffs = BTreeMap::new();
        if !r.is_zero() {
            coeffs.insert(0, r);
        }
        CycNum { order: 1, coeffs }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(int(n))
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeffs(&self) -> &BTreeMap<u32, BigRat> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Re-express in `ℚ(ζ_m)`; `m` must be a multiple of the current order.
    pub fn lift(&self, m: u32) -> Self {
        assert!(m.is_multiple_of(self.order), "lift target must be a multiple");
        if m == self.order {
            return self.clone();
        }
        let step = (m / self.order) as usize;
        let mut p = vec![BigRat::zero(); m as usize];
        for (&k, c) in &self.coeffs {
            p[k as usize * step] += c;
        }
        Self::from_dense(m, p)
    }

    fn aligned(&self, other: &Self) -> (Self, Self) {
        let m = self.order.lcm(&other.order);
        (self.lift(m), other.lift(m))
    }

    pub fn scale(&self, r: &BigRat) -> Self {
        if r.is_zero() {
            return CycNum {
                order: self.order,
                coeffs: BTreeMap::new(),
            };
        }
        CycNum {
            order: self.order,
            coeffs: self.coeffs.iter().map(|(&k, c)| (k, c * r)).collect(),
        }
    }

    pub fn invert(&self) -> Result<Self, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        let n = self.order;
        let phi: Poly = cyclotomic_poly(n)
            .iter()
            .map(|&c| BigRat::from_integer(BigInt::from(c)))
            .collect();
        // Extended Euclid tracking only the coefficient of `self`.
        let (mut r0, mut r1) = (phi, self.dense());
        let (mut s0, mut s1): (Poly, Poly) = (Vec::new(), vec![BigRat::one()]);
        while r1.len() > 1 {
            let (q, r) = poly_divrem(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        let c = r1
            .first()
            .cloned()
            .ok_or(ExactError::DivisionByZero)?;
        let inv_c = c.recip();
        let s: Poly = s1.iter().map(|x| x * &inv_c).collect();
        Ok(Self::from_dense(n, s))
    }

    pub fn as_rational(&self) -> Option<BigRat> {
        match self.coeffs.len() {
            0 => Some(BigRat::zero()),
            1 => self.coeffs.get(&0).cloned(),
            _ => None,
        }
    }

    pub fn galois(&self, k: i64) -> Result<Self, ExactError> {
        let n = self.order as i64;
        if k.gcd(&n) != 1 {
            return Err(ExactError::NotCoprime {
                k,
                order: self.order,
            });
        }
        let mut p = vec![BigRat::zero(); n as usize];
        for (&j, c) in &self.coeffs {
            let e = (j as i64 * k).rem_euclid(n) as usize;
            p[e] += c;
        }
        Ok(Self::from_dense(self.order, p))
    }

    /// Complex conjugate, `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> Self {
        self.galois(-1).expect("-1 is a unit")
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = CycNum::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Floating evaluation at `ζ = exp(2πi/order)`, returned as `(re, im)`.
    pub fn to_complex(&self) -> (f64, f64) {
        let n = self.order as f64;
        self.coeffs.iter().fold((0.0, 0.0), |(re, im), (&k, c)| {
            let v = c.to_f64().unwrap_or(f64::NAN);
            let t = std::f64::consts::TAU * k as f64 / n;
            (re + v * t.cos(), im + v * t.sin())
        })
    }
}

/// `ζ_n^{k mod n}`.
///
/// # Panics
/// Panics if `n == 0`.
pub fn root_of_unity(n: u32, k: i64) -> CycNum {
    assert!(n >= 1, "root of unity order must be positive");
    let e = k.rem_euclid(n as i64) as usize;
    let mut p = vec![BigRat::zero(); n as usize];
    p[e] = BigRat::one();
    CycNum::from_dense(n, p)
}

pub fn invert(x: &CycNum) -> Result<CycNum, ExactError> {
    x.invert()
}

pub fn as_rational(x: &CycNum) -> Option<BigRat> {
    x.as_rational()
}

pub fn galois(x: &CycNum, k: i64) -> Result<CycNum, ExactError> {
    x.galois(k)
}

impl PartialEq for CycNum {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = self.aligned(other);
        a.coeffs == b.coeffs
    }
}

impl Eq for CycNum {}

impl<'a> Add<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn add(self, rhs: &CycNum) -> CycNum {
        let (mut a, b) = self.aligned(rhs);
        for (k, c) in b.coeffs {
            let e = a.coeffs.entry(k).or_insert_with(BigRat::zero);
            *e += c;
            if e.is_zero() {
                a.coeffs.remove(&k);
            }
        }
        a
    }
}

impl<'a> Sub<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn sub(self, rhs: &CycNum) -> CycNum {
        self + &(-rhs)
    }
}

impl Neg for &CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        CycNum {
            order: self.order,
            coeffs: self.coeffs.iter().map(|(&k, c)| (k, -c)).collect(),
        }
    }
}

impl Neg for CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        -&self
    }
}

impl<'a> Mul<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn mul(self, rhs: &CycNum) -> CycNum {
        if self.order == 1 {
            if let Some(r) = self.as_rational() {
                return rhs.scale(&r);
            }
        }
        if rhs.order == 1 {
            if let Some(r) = rhs.as_rational() {
                return self.scale(&r);
            }
        }
        let (a, b) = self.aligned(rhs);
        let n = a.order as usize;
        let mut p = vec![BigRat::zero(); n];
        for (&i, x) in &a.coeffs {
            for (&j, y) in &b.coeffs {
                p[(i as usize + j as usize) % n] += x * y;
            }
        }
        CycNum::from_dense(a.order, p)
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<CycNum> for CycNum {
            type Output = CycNum;
            fn $m(self, rhs: CycNum) -> CycNum {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a CycNum> for CycNum {
            type Output = CycNum;
            fn $m(self, rhs: &CycNum) -> CycNum {
                (&self).$m(rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl fmt::Display for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&k, c) in &self.coeffs {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let show_coeff = k == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{}", mag)?;
            }
            if k > 0 {
                if show_coeff {
                    write!(f, "*")?;
                }
                write!(f, "z{}", self.order)?;
                if k > 1 {
                    write!(f, "^{}", k)?;
                }
            }
        }
        Ok(())
    }
}
