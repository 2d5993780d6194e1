//! Eta invariants of spherical space forms, lens space bundles and formal sums.
//!
//! Values are computed as exact unreduced rationals from the character-sum
//! formulas and only then reduced into `ℝ/ℤ` or `ℝ/2ℤ`. The target is always an
//! explicit argument; [`suggest_modulus`] is advisory.

use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use thiserror::Error;

use crate::exact::{rat, root_of_unity, BigRat, CycNum, ExactError};
use crate::grouprep::{restrict, Elem, Family, Group, GroupError, Inclusion, VirtualChar};
use crate::torsion::{order_mod, reduce_mod, Modulus, TorsionVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EtaError {
    #[error("virtual character has dimension {0}, expected 0")]
    NonzeroDimension(i64),
    #[error("character is over {found} but the manifold has fundamental group {expected}")]
    GroupMismatch { expected: String, found: String },
    #[error("malformed manifold expression: {0}")]
    Malformed(String),
    #[error("character sum is not rational")]
    NonRational,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Per-class data for a quaternionic space form.
#[derive(Clone, Debug)]
pub struct QuaternionClass {
    /// `det(I - τ(g))` for one copy of the defining representation.
    pub det_one_minus: CycNum,
    /// The chosen `det(τ(g))^{1/2}`.
    pub half_det: CycNum,
}

#[derive(Clone, Debug)]
pub enum ManifoldExpr {
    Lens {
        l: u32,
        weights: Vec<i64>,
    },
    LensBundle {
        l: u32,
        weights: Vec<i64>,
        c1s: Vec<i64>,
    },
    QuaternionForm {
        copies: u32,
        group: Arc<Group>,
        /// Indexed by conjugacy class; the identity entry is ignored.
        class_data: Vec<QuaternionClass>,
    },
    Included {
        inner: Box<ManifoldExpr>,
        inclusion: Inclusion,
    },
    AhatScaled {
        inner: Box<ManifoldExpr>,
        factor: i64,
        added_dim: u32,
    },
    FormalSum {
        terms: Vec<(i64, ManifoldExpr)>,
    },
}

impl ManifoldExpr {
    pub fn lens(l: u32, weights: &[i64]) -> Self {
        ManifoldExpr::Lens {
            l,
            weights: weights.to_vec(),
        }
    }

    /// `RP^{2k-1}` as the lens space with `k` unit weights.
    pub fn rp(n: u32) -> Self {
        assert!(n % 2 == 1, "odd dimension");
        Self::lens(2, &vec![1; (n as usize).div_ceil(2)])
    }

    pub fn lens_bundle(l: u32, weights: &[i64], c1s: &[i64]) -> Self {
        ManifoldExpr::LensBundle {
            l,
            weights: weights.to_vec(),
            c1s: c1s.to_vec(),
        }
    }

    /// `S^{4m-1}/Q8` with class data derived from the defining representation `τ`:
    /// `det(I - τ(g)) = 2 - tr τ(g)` and `det(τ)^{1/2} = 1`.
    pub fn q8_form(copies: u32) -> Self {
        let g = Group::q8();
        let tau = g.character("tau").expect("preset").values.clone();
        let class_data = tau
            .iter()
            .map(|t| QuaternionClass {
                det_one_minus: &CycNum::from_int(2) - t,
                half_det: CycNum::one(),
            })
            .collect();
        ManifoldExpr::QuaternionForm {
            copies,
            group: g,
            class_data,
        }
    }

    pub fn included(self, inclusion: Inclusion) -> Self {
        ManifoldExpr::Included {
            inner: Box::new(self),
            inclusion,
        }
    }

    /// Product with `count` Bott manifolds (`Â = 1`, dimension 8 each).
    pub fn times_bott(self, count: u32) -> Self {
        if count == 0 {
            return self;
        }
        ManifoldExpr::AhatScaled {
            inner: Box::new(self),
            factor: 1,
            added_dim: 8 * count,
        }
    }

    /// Product with a Kummer surface (`Â = 2`, dimension 4).
    pub fn times_kummer(self) -> Self {
        ManifoldExpr::AhatScaled {
            inner: Box::new(self),
            factor: 2,
            added_dim: 4,
        }
    }

    pub fn sum(terms: Vec<(i64, ManifoldExpr)>) -> Self {
        ManifoldExpr::FormalSum { terms }
    }

    pub fn dimension(&self) -> Result<u32, EtaError> {
        match self {
            ManifoldExpr::Lens { l, weights } => {
                check_weights(*l, weights)?;
                Ok(2 * weights.len() as u32 - 1)
            }
            ManifoldExpr::LensBundle { l, weights, c1s } => {
                check_weights(*l, weights)?;
                if c1s.len() != weights.len() {
                    return Err(EtaError::Malformed("one Chern number per weight".into()));
                }
                Ok(2 * weights.len() as u32 + 1)
            }
            ManifoldExpr::QuaternionForm { copies, group, class_data } => {
                if *copies == 0 || class_data.len() != group.classes().len() {
                    return Err(EtaError::Malformed("quaternion form data".into()));
                }
                Ok(4 * copies - 1)
            }
            ManifoldExpr::Included { inner, inclusion } => {
                let g = inner.group()?;
                if g != *inclusion.sub() {
                    return Err(EtaError::GroupMismatch {
                        expected: inclusion.sub().name(),
                        found: g.name(),
                    });
                }
                inner.dimension()
            }
            ManifoldExpr::AhatScaled { inner, added_dim, .. } => Ok(inner.dimension()? + added_dim),
            ManifoldExpr::FormalSum { terms } => {
                let Some((_, first)) = terms.first() else {
                    return Err(EtaError::Malformed("empty formal sum".into()));
                };
                let d = first.dimension()?;
                let g = first.group()?;
                for (_, t) in &terms[1..] {
                    if t.dimension()? != d || t.group()? != g {
                        return Err(EtaError::Malformed("formal sum terms differ in dimension or group".into()));
                    }
                }
                Ok(d)
            }
        }
    }

    /// The fundamental group the manifold maps to.
    pub fn group(&self) -> Result<Arc<Group>, EtaError> {
        match self {
            ManifoldExpr::Lens { l, .. } | ManifoldExpr::LensBundle { l, .. } => {
                Ok(Group::get(Family::Cyclic(*l))?)
            }
            ManifoldExpr::QuaternionForm { group, .. } => Ok(Arc::clone(group)),
            ManifoldExpr::Included { inclusion, .. } => Ok(Arc::clone(inclusion.sup())),
            ManifoldExpr::AhatScaled { inner, .. } => inner.group(),
            ManifoldExpr::FormalSum { terms } => terms
                .first()
                .ok_or_else(|| EtaError::Malformed("empty formal sum".into()))?
                .1
                .group(),
        }
    }
}

fn check_weights(l: u32, weights: &[i64]) -> Result<(), EtaError> {
    if weights.is_empty() || !weights.len().is_multiple_of(2) {
        return Err(EtaError::Malformed("weight count must be even and positive".into()));
    }
    if l < 2 || !l.is_power_of_two() {
        return Err(EtaError::Malformed(format!("cyclic order {l} is not a power of two ≥ 2")));
    }
    if weights.iter().any(|a| a.rem_euclid(2) == 0) {
        return Err(EtaError::Malformed("weights must be odd".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaResult {
    /// Reduced into `[0, modulus)`.
    pub value: BigRat,
    /// The exact value of the character sum before reduction.
    pub raw: BigRat,
    pub modulus: Modulus,
    pub order: BigUint,
}

impl EtaResult {
    pub fn from_raw(raw: BigRat, modulus: Modulus) -> Self {
        EtaResult {
            value: reduce_mod(&raw, modulus),
            order: order_mod(&raw, modulus),
            raw,
            modulus,
        }
    }
}

/// Exact unreduced eta invariant.
pub fn eta_raw(m: &ManifoldExpr, rho: &VirtualChar) -> Result<BigRat, EtaError> {
    m.dimension()?;
    let g = m.group()?;
    if *rho.group() != g {
        return Err(EtaError::GroupMismatch {
            expected: g.name(),
            found: rho.group().name(),
        });
    }
    let d = rho.virtual_dim();
    if d != 0 {
        return Err(EtaError::NonzeroDimension(d));
    }
    raw_unchecked(m, rho)
}

fn raw_unchecked(m: &ManifoldExpr, rho: &VirtualChar) -> Result<BigRat, EtaError> {
    match m {
        ManifoldExpr::Lens { l, weights } => lens_sum(*l, weights, None, rho),
        ManifoldExpr::LensBundle { l, weights, c1s } => lens_sum(*l, weights, Some(c1s), rho),
        ManifoldExpr::QuaternionForm {
            copies,
            group,
            class_data,
        } => {
            let vals = rho.class_values();
            let mut acc = CycNum::zero();
            for (ci, cls) in group.classes().iter().enumerate() {
                if cls.contains(&group.identity()) {
                    continue;
                }
                let cd = &class_data[ci];
                let den = cd.det_one_minus.pow(*copies).invert()?;
                let term = &(&vals[ci] * &cd.half_det) * &den;
                acc = &acc + &term.scale(&BigRat::from_integer(BigInt::from(cls.len())));
            }
            let r = acc.as_rational().ok_or(EtaError::NonRational)?;
            Ok(r / BigRat::from_integer(BigInt::from(group.order())))
        }
        ManifoldExpr::Included { inner, inclusion } => raw_unchecked(inner, &restrict(rho, inclusion)?),
        ManifoldExpr::AhatScaled { inner, factor, .. } => {
            Ok(raw_unchecked(inner, rho)? * BigRat::from_integer(BigInt::from(*factor)))
        }
        ManifoldExpr::FormalSum { terms } => {
            let mut acc = BigRat::zero();
            for (c, t) in terms {
                acc += raw_unchecked(t, rho)? * BigRat::from_integer(BigInt::from(*c));
            }
            Ok(acc)
        }
    }
}

fn lens_sum(l: u32, weights: &[i64], c1s: Option<&Vec<i64>>, rho: &VirtualChar) -> Result<BigRat, EtaError> {
    let g = rho.group();
    let vals = rho.class_values();
    let half: i64 = weights.iter().sum::<i64>() / 2;
    let mut acc = CycNum::zero();
    for k in 1..l as i64 {
        let tr = &vals[g.class_of(g.index_of(Elem::new(0, k as u32)).expect("cyclic element"))];
        if tr.is_zero() {
            continue;
        }
        let lam = |e: i64| root_of_unity(l, k * e);
        let mut den = CycNum::one();
        for &a in weights {
            den = &den * &(&CycNum::one() - &lam(a));
        }
        let mut term = &(tr * &lam(half)) * &den.invert()?;
        if let Some(cs) = c1s {
            let mut factor = CycNum::zero();
            for (&a, &c) in weights.iter().zip(cs) {
                if c == 0 {
                    continue;
                }
                let num = &CycNum::one() + &lam(a);
                let q = &num * &(&CycNum::one() - &lam(a)).invert()?;
                factor = &factor + &q.scale(&rat(c, 2));
            }
            term = &term * &factor;
        }
        acc = &acc + &term;
    }
    let r = acc.as_rational().ok_or(EtaError::NonRational)?;
    Ok(r / BigRat::from_integer(BigInt::from(l)))
}

pub fn eta(m: &ManifoldExpr, rho: &VirtualChar, modulus: Modulus) -> Result<EtaResult, EtaError> {
    Ok(EtaResult::from_raw(eta_raw(m, rho)?, modulus))
}

pub fn eta_vector(m: &ManifoldExpr, rhos: &[(VirtualChar, Modulus)]) -> Result<TorsionVector, EtaError> {
    let coords = rhos
        .iter()
        .map(|(r, md)| Ok((eta_raw(m, r)?, *md)))
        .collect::<Result<Vec<_>, EtaError>>()?;
    Ok(TorsionVector::new(coords))
}

/// Floating-point evaluation of the defining character sum, for cross-checks.
pub fn eta_float(m: &ManifoldExpr, rho: &VirtualChar) -> Result<f64, EtaError> {
    Ok(match m {
        ManifoldExpr::Lens { l, weights } => lens_float(*l, weights, None, rho),
        ManifoldExpr::LensBundle { l, weights, c1s } => lens_float(*l, weights, Some(c1s), rho),
        ManifoldExpr::QuaternionForm {
            copies,
            group,
            class_data,
        } => {
            let vals = rho.class_values();
            let mut acc = (0.0, 0.0);
            for (ci, cls) in group.classes().iter().enumerate() {
                if cls.contains(&group.identity()) {
                    continue;
                }
                let t = cmul(vals[ci].to_complex(), class_data[ci].half_det.to_complex());
                let d = cpow(class_data[ci].det_one_minus.to_complex(), *copies);
                let q = cdiv(t, d);
                acc.0 += q.0 * cls.len() as f64;
                acc.1 += q.1 * cls.len() as f64;
            }
            acc.0 / group.order() as f64
        }
        ManifoldExpr::Included { inner, inclusion } => eta_float(inner, &restrict(rho, inclusion)?)?,
        ManifoldExpr::AhatScaled { inner, factor, .. } => *factor as f64 * eta_float(inner, rho)?,
        ManifoldExpr::FormalSum { terms } => {
            let mut acc = 0.0;
            for (c, t) in terms {
                acc += *c as f64 * eta_float(t, rho)?;
            }
            acc
        }
    })
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let n = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / n, (a.1 * b.0 - a.0 * b.1) / n)
}

fn cpow(a: (f64, f64), e: u32) -> (f64, f64) {
    (0..e).fold((1.0, 0.0), |acc, _| cmul(acc, a))
}

fn lens_float(l: u32, weights: &[i64], c1s: Option<&Vec<i64>>, rho: &VirtualChar) -> f64 {
    let g = rho.group();
    let vals = rho.class_values();
    let half: i64 = weights.iter().sum::<i64>() / 2;
    let root = |e: i64| {
        let t = std::f64::consts::TAU * e as f64 / l as f64;
        (t.cos(), t.sin())
    };
    let mut acc = (0.0, 0.0);
    for k in 1..l as i64 {
        let tr = vals[g.class_of(g.index_of(Elem::new(0, k as u32)).expect("cyclic element"))].to_complex();
        let mut den = (1.0, 0.0);
        for &a in weights {
            let z = root(k * a);
            den = cmul(den, (1.0 - z.0, -z.1));
        }
        let mut term = cdiv(cmul(tr, root(k * half)), den);
        if let Some(cs) = c1s {
            let mut f = (0.0, 0.0);
            for (&a, &c) in weights.iter().zip(cs) {
                let z = root(k * a);
                let q = cdiv((1.0 + z.0, z.1), (1.0 - z.0, -z.1));
                f.0 += 0.5 * c as f64 * q.0;
                f.1 += 0.5 * c as f64 * q.1;
            }
            term = cmul(term, f);
        }
        acc.0 += term.0;
        acc.1 += term.1;
    }
    acc.0 / l as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModulusSuggestion {
    pub modulus: Modulus,
    /// Set when every constituent is real with even multiplicity in a dimension
    /// `7 mod 8`; a doubled real representation may carry a quaternionic structure,
    /// and the caller must choose the target explicitly.
    pub advisory: bool,
}

pub fn suggest_modulus(n: u32, rho: &VirtualChar) -> ModulusSuggestion {
    let inds = rho.constituent_indicators();
    let all = |want: i64| inds.iter().all(|(name, i)| *i == want || name == "rho0");
    let modulus = match n % 8 {
        3 if all(1) => Modulus::Two,
        7 if !inds.is_empty() && inds.iter().filter(|(n, _)| n != "rho0").all(|(_, i)| *i == -1) => Modulus::Two,
        _ => Modulus::One,
    };
    let advisory = n % 8 == 7
        && modulus == Modulus::One
        && inds.iter().any(|(name, i)| *i == 1 && name != "rho0")
        && rho.combo().values().all(|m| m % 2 == 0);
    ModulusSuggestion { modulus, advisory }
}
