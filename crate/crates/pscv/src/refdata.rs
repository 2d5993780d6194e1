//! Published `ko_*` groups, `Ker(Ap)` subgroups and Bott-torsion counts.
//!
//! Every group here is a finite 2-group up to free summands, so a shape is stored
//! as a list of exponents: `[2^e]` is cyclic of order `2^e`, and an elementary
//! abelian `2^r` is `r` copies of exponent 1.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouprep::{binomial, Family};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RefError {
    #[error("no tabulated value for {group} in degree {n}")]
    OutOfRange { group: String, n: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AbelianShape {
    /// Exponents of the cyclic 2-primary summands, ascending.
    pub cyclic_exponents: Vec<u32>,
    pub free_rank: u32,
    /// Torsion known only up to order `2^e`.
    pub undetermined_exponent: Option<u32>,
}

impl AbelianShape {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn cyclic(exps: impl IntoIterator<Item = u32>) -> Self {
        let mut cyclic_exponents: Vec<u32> = exps.into_iter().filter(|&e| e > 0).collect();
        cyclic_exponents.sort_unstable();
        AbelianShape {
            cyclic_exponents,
            free_rank: 0,
            undetermined_exponent: None,
        }
    }

    pub fn elementary(rank: u32) -> Self {
        Self::cyclic(std::iter::repeat_n(1, rank as usize))
    }

    pub fn undetermined(exp: u32) -> Self {
        AbelianShape {
            undetermined_exponent: Some(exp),
            ..Self::default()
        }
    }

    pub fn with_free(mut self, rank: u32) -> Self {
        self.free_rank += rank;
        self
    }

    pub fn sum(mut self, other: AbelianShape) -> Self {
        self.cyclic_exponents.extend(other.cyclic_exponents);
        self.cyclic_exponents.sort_unstable();
        self.free_rank += other.free_rank;
        self.undetermined_exponent = match (self.undetermined_exponent, other.undetermined_exponent) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(0) + b.unwrap_or(0)),
        };
        self
    }

    /// `log2` of the torsion order.
    pub fn torsion_exponent(&self) -> u32 {
        self.cyclic_exponents.iter().sum::<u32>() + self.undetermined_exponent.unwrap_or(0)
    }

    pub fn torsion_order(&self) -> BigUint {
        BigUint::from(1u32) << self.torsion_exponent() as usize
    }

    pub fn is_determined(&self) -> bool {
        self.undetermined_exponent.is_none()
    }

    /// Elementary divisors as integers, ascending.
    pub fn divisors(&self) -> Vec<BigUint> {
        self.cyclic_exponents
            .iter()
            .map(|&e| BigUint::from(1u32) << e as usize)
            .collect()
    }
}

impl fmt::Display for AbelianShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.free_rank > 0 {
            parts.push(if self.free_rank == 1 {
                "Z".to_string()
            } else {
                format!("Z^{}", self.free_rank)
            });
        }
        let ones = self.cyclic_exponents.iter().filter(|&&e| e == 1).count();
        if ones > 0 {
            parts.push(format!("2^{ones}"));
        }
        let mut rest: Vec<u32> = self.cyclic_exponents.iter().copied().filter(|&e| e > 1).collect();
        rest.dedup();
        for e in rest.into_iter().rev() {
            let k = self.cyclic_exponents.iter().filter(|&&x| x == e).count();
            if k == 1 {
                parts.push(format!("[2^{e}]"));
            } else {
                parts.push(format!("[2^{e}]^{k}"));
            }
        }
        if let Some(e) = self.undetermined_exponent {
            parts.push(format!("<2^{e}>"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

fn out(family: Family, n: u32) -> RefError {
    RefError::OutOfRange {
        group: family.name(),
        n,
    }
}

fn cyc(exps: &[u32]) -> AbelianShape {
    AbelianShape::cyclic(exps.iter().copied())
}

fn log2(x: u32) -> u32 {
    x.trailing_zeros()
}

/// `ko_n(BG)`.
pub fn ko_table(family: Family, n: u32) -> Result<AbelianShape, RefError> {
    let m = n / 8;
    let r = n % 8;
    let el = AbelianShape::elementary;
    let shape = match family {
        Family::Cyclic(2) => match r {
            0 | 4 => AbelianShape::zero().with_free(1),
            1 | 2 => el(2),
            3 => cyc(&[4 * m + 3]),
            7 => cyc(&[4 * m + 4]),
            _ => AbelianShape::zero(),
        },
        Family::Cyclic(4) => match r {
            0 | 4 => AbelianShape::zero().with_free(1),
            1 if m == 0 => cyc(&[2, 1]),
            1 => cyc(&[2 * m + 1]).sum(el(2)),
            2 => el(2),
            3 => cyc(&[4 * m + 3, 2 * m + 1]),
            5 => cyc(&[2 * m + 2]),
            6 => AbelianShape::zero(),
            _ => cyc(&[4 * m + 5, 2 * m + 1]),
        },
        Family::Cyclic(l) => {
            let e = log2(l);
            match r {
                3 => AbelianShape::undetermined(1 + (e + 1) * (2 * m + 1)),
                7 => AbelianShape::undetermined((e + 1) * (2 * m + 2)),
                1 => AbelianShape::undetermined(1 + (e - 1) * (2 * m + 1)),
                5 => AbelianShape::undetermined((e - 1) * (2 * m + 2)),
                _ => return Err(out(family, n)),
            }
        }
        Family::ElementaryAbelian(2) => match (r, m) {
            (0, 0) => return Err(out(family, n)),
            (1, 0) => el(3),
            (2, 0) => el(4),
            (0, _) => el(2 * m + 1).with_free(1),
            (1, _) => el(4),
            (2, _) => el(2 * m + 4),
            (3, _) => cyc(&[4 * m + 3, 4 * m + 3, 4 * m + 2]),
            (4, _) => el(2 * m + 2).with_free(1),
            (5, _) => AbelianShape::zero(),
            (6, _) => el(2 * m + 1),
            _ => cyc(&[4 * m + 4, 4 * m + 4, 4 * m + 3]),
        },
        Family::ElementaryAbelian(_) => return Err(out(family, n)),
        Family::Quaternion8 => match r {
            3 => cyc(&[4 * m + 3, 2 * m, 2 * m + 2, 2 * m + 2]),
            7 => cyc(&[4 * m + 6, 2 * m, 2 * m + 2, 2 * m + 2]),
            _ => return Err(out(family, n)),
        },
        Family::Dihedral(nn) => {
            let big = 2 * nn + 12;
            let pn = 1u32 << nn;
            match r {
                0 => el(2 * m + pn).with_free(1),
                1 => el(2 + 2 * pn),
                2 => el(2 * m + pn + 3),
                3 if nn == 1 => cyc(&[4 * m + 3, 4 * m + 3, 4 * m + 3, 2 * m]),
                3 => AbelianShape::undetermined(big * m + nn + 8),
                4 => el(2 * m + 2).with_free(1),
                5 => AbelianShape::zero(),
                6 => el(2 * m + 1),
                _ if nn == 1 => cyc(&[4 * m + 4, 4 * m + 4, 4 * m + 4, 2 * m + 1]),
                _ => AbelianShape::undetermined(big * (m + 1) - 1),
            }
        }
        Family::SemiDihedral16 => match r {
            3 | 7 => ker_ap(family, n)?,
            _ => return Err(out(family, n)),
        },
    };
    Ok(shape)
}

/// The subgroup `Ker(Ap) ⊆ ko_n(BG)` that positive scalar curvature manifolds must span.
pub fn ker_ap(family: Family, n: u32) -> Result<AbelianShape, RefError> {
    let m = n / 8;
    let r = n % 8;
    let el = AbelianShape::elementary;
    Ok(match family {
        Family::Cyclic(l) if l == 2 || l == 4 => match r {
            3 | 7 | 5 => ko_table(family, n)?,
            1 if l == 4 && m >= 1 => cyc(&[2 * m + 1]),
            1 if l == 4 => return Err(out(family, n)),
            _ => AbelianShape::zero(),
        },
        Family::Cyclic(l) => {
            let e = log2(l);
            match r {
                3 | 7 | 5 => ko_table(family, n)?,
                1 if m >= 1 => AbelianShape::undetermined((e - 1) * (2 * m + 1)),
                _ => return Err(out(family, n)),
            }
        }
        Family::ElementaryAbelian(2) => match (r, m) {
            (0, 0) => return Err(out(family, n)),
            (1, _) | (5, _) => AbelianShape::zero(),
            (0, _) => el(2 * m + 1),
            (2, 0) => AbelianShape::zero(),
            (2, _) => el(2 * m),
            (4, _) => el(2 * m + 2),
            _ => ko_table(family, n)?,
        },
        Family::ElementaryAbelian(_) => return Err(out(family, n)),
        Family::Quaternion8 => ko_table(family, n)?,
        Family::Dihedral(nn) => match r {
            0 if m >= 1 => el(2 * m + (1 << nn)),
            2 => el(2 * m),
            4 => el(2 * m + 2),
            5 => AbelianShape::zero(),
            6 => el(2 * m + 1),
            3 | 7 => ko_table(family, n)?,
            _ => return Err(out(family, n)),
        },
        Family::SemiDihedral16 => sd16_ker(n),
    })
}

fn sd16_ker(n: u32) -> AbelianShape {
    let el = AbelianShape::elementary;
    let (h1, h2) = match n {
        0..=2 => (AbelianShape::zero(), 0),
        3 => (cyc(&[2, 3, 3]), 0),
        4 => (AbelianShape::zero(), 1),
        5 => (cyc(&[1]), 0),
        6 => (AbelianShape::zero(), 0),
        7 => (cyc(&[1, 2, 4, 5]), 0),
        8 => (el(1), 1),
        9 => (el(2), 0),
        10 => (AbelianShape::zero(), 1),
        11 => (cyc(&[3, 4, 7, 7]), 0),
        12 => (AbelianShape::zero(), 2),
        13 => (cyc(&[2]), 0),
        14 => (AbelianShape::zero(), 1),
        15 => (cyc(&[1, 3, 4, 8, 9]), 0),
        _ => {
            let k = n / 8;
            match n % 8 {
                0 => (el(2), k),
                1 => (el(2).sum(cyc(&[k])), 0),
                2 => (AbelianShape::zero(), k),
                3 => (cyc(&[k - 1, 1 + 2 * k, 2 * k + 2, 3 + 4 * k, 3 + 4 * k]), 0),
                4 => (AbelianShape::zero(), k + 1),
                5 => (cyc(&[k + 1]), 0),
                6 => (AbelianShape::zero(), k),
                _ => (cyc(&[k, 1 + 2 * k, 2 * k + 2, 4 * k + 4, 4 * k + 5]), 0),
            }
        }
    };
    h1.sum(el(h2))
}

pub fn ker_ap_order(family: Family, n: u32) -> Result<BigUint, RefError> {
    Ok(ker_ap(family, n)?.torsion_order())
}

/// Periodic (eta-detected) part of `ko_n(BV(rank))` for `n ≡ 3 mod 4`:
/// `⊕_i [2^{top-i}]^{C(rank, rank-1-i)}`, where `top` is `4m+3` or `4m+4`.
pub fn vn_periodic(rank: u32, n: u32) -> Result<AbelianShape, RefError> {
    let m = n / 8;
    let top = match n % 8 {
        3 => 4 * m + 3,
        7 => 4 * m + 4,
        _ => return Err(out(Family::ElementaryAbelian(rank), n)),
    };
    let mut exps = Vec::new();
    for i in 0..rank {
        let e = top as i64 - i as i64;
        if e <= 0 {
            continue;
        }
        let mult = binomial(rank, rank - 1 - i);
        let mult: u32 = mult.try_into().expect("small binomial");
        exps.extend(std::iter::repeat_n(e as u32, mult as usize));
    }
    Ok(AbelianShape::cyclic(exps))
}

/// Rank of the Bott-torsion part of `ko_n(BV(3))` detected in ordinary homology.
pub fn h_dim(n: u32) -> Result<u64, RefError> {
    if n < 4 {
        return Err(out(Family::ElementaryAbelian(3), n));
    }
    let k = (n / 4) as u64;
    Ok(match n % 4 {
        0 => k * k + 4 * k + 3,
        1 => k * k + k + 1,
        2 => k * k + 5 * k,
        _ => k * k + 2 * k,
    })
}

/// Number of homology classes the `V(2)` two-column asks for in even degree `n`.
pub fn v2_two_column_rank(n: u32) -> Result<u64, RefError> {
    if n % 2 == 1 || n < 2 {
        return Err(out(Family::ElementaryAbelian(2), n));
    }
    let k = (n / 4) as u64;
    Ok(if n % 4 == 2 { k } else { k + 1 })
}
