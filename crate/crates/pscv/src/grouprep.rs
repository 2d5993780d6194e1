//! Finite 2-groups, their character tables, virtual characters and inclusions.
//!
//! Elements are pairs `(flip, rot)`:
//! * cyclic `C_l`: `(0, r)` is `g^r`;
//! * elementary abelian `V(n)`: `(0, mask)`;
//! * dihedral: `(f, r)` is `s^f ω^r`;
//! * `SD16`: `(f, r)` is `t^f s^r`;
//! * `Q8`: `(f, r)` is `j^f i^r`.
//!
//! Conjugacy classes and irreducible characters are listed in the same order as
//! the printed tables, so positional comparison is meaningful.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{rat, root_of_unity, BigRat, CycNum, ExactError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("unknown character `{name}` for group {group}")]
    UnknownCharacter { name: String, group: String },
    #[error("class function does not decompose integrally over {0}")]
    NonIntegral(String),
    #[error("group mismatch: expected {expected}, found {found}")]
    GroupMismatch { expected: String, found: String },
    #[error("generator images do not define a homomorphism")]
    NotHomomorphism,
    #[error("embedding is not injective")]
    NotInjective,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported group parameters: {0}")]
    BadFamily(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Cyclic(u32),
    ElementaryAbelian(u32),
    /// `Dihedral(n)` has order `2^{n+2}`.
    Dihedral(u32),
    Quaternion8,
    SemiDihedral16,
}

impl Family {
    pub fn name(&self) -> String {
        match *self {
            Family::Cyclic(l) => format!("C{l}"),
            Family::ElementaryAbelian(n) => format!("V({n})"),
            Family::Dihedral(n) => format!("D{}", 1u32 << (n + 2)),
            Family::Quaternion8 => "Q8".into(),
            Family::SemiDihedral16 => "SD16".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Family, GroupError> {
        let t = s.trim();
        let num = |x: &str| x.parse::<u32>().map_err(|_| GroupError::BadFamily(s.into()));
        let f = if t.eq_ignore_ascii_case("Q8") {
            Family::Quaternion8
        } else if t.eq_ignore_ascii_case("SD16") {
            Family::SemiDihedral16
        } else if let Some(r) = t.strip_prefix("V(").and_then(|r| r.strip_suffix(')')) {
            Family::ElementaryAbelian(num(r)?)
        } else if let Some(r) = t.strip_prefix('V') {
            Family::ElementaryAbelian(num(r)?)
        } else if let Some(r) = t.strip_prefix('C') {
            Family::Cyclic(num(r)?)
        } else if let Some(r) = t.strip_prefix('D') {
            let order = num(r)?;
            if order < 8 || !order.is_power_of_two() {
                return Err(GroupError::BadFamily(s.into()));
            }
            Family::Dihedral(order.trailing_zeros() - 2)
        } else {
            return Err(GroupError::BadFamily(s.into()));
        };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<(), GroupError> {
        let ok = match *self {
            Family::Cyclic(l) => (1..=256).contains(&l),
            Family::ElementaryAbelian(n) => (1..=6).contains(&n),
            Family::Dihedral(n) => (1..=4).contains(&n),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(GroupError::BadFamily(self.name()))
        }
    }

    fn mul(&self, a: Elem, b: Elem) -> Elem {
        match *self {
            Family::Cyclic(l) => Elem::new(0, (a.rot + b.rot) % l),
            Family::ElementaryAbelian(_) => Elem::new(0, a.rot ^ b.rot),
            Family::Dihedral(n) => {
                let m = 1u32 << (n + 1);
                let r1 = if b.flip == 1 { (m - a.rot) % m } else { a.rot };
                Elem::new(a.flip ^ b.flip, (r1 + b.rot) % m)
            }
            Family::SemiDihedral16 => {
                let r1 = if b.flip == 1 { (3 * a.rot) % 8 } else { a.rot };
                Elem::new(a.flip ^ b.flip, (r1 + b.rot) % 8)
            }
            Family::Quaternion8 => {
                let r1 = if b.flip == 1 { (4 - a.rot) % 4 } else { a.rot };
                let extra = if a.flip + b.flip == 2 { 2 } else { 0 };
                Elem::new(a.flip ^ b.flip, (r1 + b.rot + extra) % 4)
            }
        }
    }

    fn elements(&self) -> Vec<Elem> {
        match *self {
            Family::Cyclic(l) => (0..l).map(|r| Elem::new(0, r)).collect(),
            Family::ElementaryAbelian(n) => (0..1u32 << n).map(|r| Elem::new(0, r)).collect(),
            Family::Dihedral(n) => pairs(1u32 << (n + 1)),
            Family::SemiDihedral16 => pairs(8),
            Family::Quaternion8 => pairs(4),
        }
    }

    /// Class representatives with labels, in printed order.
    fn class_reps(&self) -> Vec<(String, Elem)> {
        let e = Elem::new;
        match *self {
            Family::Cyclic(l) => (0..l).map(|r| (format!("g^{r}"), e(0, r))).collect(),
            Family::ElementaryAbelian(n) => {
                let names = ["e", "x", "y", "z"];
                (0..1u32 << n)
                    .map(|r| {
                        let lab = if n == 2 { names[r as usize].to_string() } else { format!("v{r}") };
                        (lab, e(0, r))
                    })
                    .collect()
            }
            Family::Dihedral(n) => {
                let h = 1u32 << n;
                let mut v = vec![("w^0".to_string(), e(0, 0)), (format!("w^{h}"), e(0, h))];
                v.extend((1..h).map(|j| (format!("w^{j}"), e(0, j))));
                v.push(("s".into(), e(1, 0)));
                v.push(("ws".into(), e(1, 1)));
                v
            }
            Family::SemiDihedral16 => vec![
                ("1".into(), e(0, 0)),
                ("s^4".into(), e(0, 4)),
                ("s".into(), e(0, 1)),
                ("s^2".into(), e(0, 2)),
                ("s^5".into(), e(0, 5)),
                ("t".into(), e(1, 0)),
                ("ts".into(), e(1, 1)),
            ],
            Family::Quaternion8 => vec![
                ("1".into(), e(0, 0)),
                ("-1".into(), e(0, 2)),
                ("i".into(), e(0, 1)),
                ("j".into(), e(1, 0)),
                ("k".into(), e(1, 1)),
            ],
        }
    }

    /// Irreducible characters evaluated on class representatives.
    fn irreducibles(&self, reps: &[Elem]) -> Vec<(String, Vec<CycNum>)> {
        let c = CycNum::from_int;
        let row = |name: &str, f: &dyn Fn(Elem) -> CycNum| {
            (name.to_string(), reps.iter().map(|&g| f(g)).collect::<Vec<_>>())
        };
        let sign = |b: bool| if b { c(-1) } else { c(1) };
        match *self {
            Family::Cyclic(l) => (0..l)
                .map(|k| row(&format!("rho{k}"), &|g: Elem| root_of_unity(l, (g.rot * k) as i64)))
                .collect(),
            Family::ElementaryAbelian(n) => {
                let chi = |w: u32| move |g: Elem| sign((g.rot & w).count_ones() % 2 == 1);
                if n == 2 {
                    vec![
                        row("rho0", &chi(0)),
                        row("xhat", &chi(2)),
                        row("yhat", &chi(1)),
                        row("zhat", &chi(3)),
                    ]
                } else {
                    (0..1u32 << n)
                        .map(|w| {
                            let name = if w == 0 { "rho0".to_string() } else { format!("chi{w}") };
                            row(&name, &chi(w))
                        })
                        .collect()
                }
            }
            Family::Dihedral(n) => {
                let m = 1u32 << (n + 1);
                let mut v = vec![
                    row("rho0", &|_| c(1)),
                    row("omegahat", &|g: Elem| sign(g.flip == 1)),
                    row("shat", &|g: Elem| sign(g.rot % 2 == 1)),
                    row("omegashat", &|g: Elem| {
                        sign(if g.flip == 0 { g.rot % 2 == 1 } else { g.rot.is_multiple_of(2) })
                    }),
                ];
                for k in 1..(m / 2) {
                    v.push(row(&format!("sigma{k}"), &|g: Elem| {
                        if g.flip == 1 {
                            c(0)
                        } else {
                            let e = (g.rot * k) as i64;
                            &root_of_unity(m, e) + &root_of_unity(m, -e)
                        }
                    }));
                }
                v
            }
            Family::SemiDihedral16 => {
                let two_dim = |a: i64, b: i64| {
                    move |g: Elem| {
                        if g.flip == 1 {
                            c(0)
                        } else {
                            let r = g.rot as i64;
                            &root_of_unity(8, a * r) + &root_of_unity(8, b * r)
                        }
                    }
                };
                vec![
                    row("rho0", &|_| c(1)),
                    row("chi2", &|g: Elem| sign(g.flip == 1)),
                    row("chi3", &|g: Elem| sign(g.rot % 2 == 1)),
                    row("chi4", &|g: Elem| sign((g.flip + g.rot) % 2 == 1)),
                    row("chi_rho", &two_dim(1, 3)),
                    row("chi_rho2", &two_dim(2, 6)),
                    row("chi_rho5", &two_dim(5, 7)),
                ]
            }
            Family::Quaternion8 => {
                // Values on 1, -1, [i], [j], [k].
                let table: [(&str, [i64; 5]); 5] = [
                    ("rho0", [1, 1, 1, 1, 1]),
                    ("kappa1", [1, 1, -1, 1, -1]),
                    ("kappa2", [1, 1, 1, -1, -1]),
                    ("kappa3", [1, 1, -1, -1, 1]),
                    ("tau", [2, -2, 0, 0, 0]),
                ];
                let idx = |g: Elem| match (g.flip, g.rot) {
                    (0, 0) => 0,
                    (0, 2) => 1,
                    (0, _) => 2,
                    (1, r) if r % 2 == 0 => 3,
                    _ => 4,
                };
                table
                    .iter()
                    .map(|(name, vals)| row(name, &|g: Elem| c(vals[idx(g)])))
                    .collect()
            }
        }
    }
}

fn pairs(m: u32) -> Vec<Elem> {
    (0..2).flat_map(|f| (0..m).map(move |r| Elem::new(f, r))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Elem {
    pub flip: u32,
    pub rot: u32,
}

impl Elem {
    pub const fn new(flip: u32, rot: u32) -> Self {
        Elem { flip, rot }
    }
}

#[derive(Clone, Debug)]
pub struct Character {
    pub name: String,
    /// One value per conjugacy class.
    pub values: Vec<CycNum>,
}

impl Character {
    pub fn degree(&self) -> i64 {
        self.values[0]
            .as_rational()
            .and_then(|r| r.to_integer().to_i64())
            .expect("character degree is an integer")
    }
}

#[derive(Debug)]
pub struct Group {
    family: Family,
    elements: Vec<Elem>,
    index: HashMap<Elem, usize>,
    mul: Vec<usize>,
    inv: Vec<usize>,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    class_labels: Vec<String>,
    table: Vec<Character>,
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

impl Eq for Group {}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.family.name())
    }
}

fn group_cache() -> &'static Mutex<HashMap<Family, Arc<Group>>> {
    static CACHE: OnceLock<Mutex<HashMap<Family, Arc<Group>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Group {
    /// The preset group of a family; constructed once and shared.
    pub fn get(family: Family) -> Result<Arc<Group>, GroupError> {
        family.validate()?;
        if let Some(g) = group_cache().lock().unwrap().get(&family) {
            return Ok(Arc::clone(g));
        }
        let g = Arc::new(Group::build(family));
        Ok(Arc::clone(
            group_cache().lock().unwrap().entry(family).or_insert(g),
        ))
    }

    pub fn cyclic(l: u32) -> Arc<Group> {
        Self::get(Family::Cyclic(l)).expect("cyclic order in range")
    }

    pub fn elementary(n: u32) -> Arc<Group> {
        Self::get(Family::ElementaryAbelian(n)).expect("rank in range")
    }

    pub fn dihedral(n: u32) -> Arc<Group> {
        Self::get(Family::Dihedral(n)).expect("dihedral parameter in range")
    }

    pub fn q8() -> Arc<Group> {
        Self::get(Family::Quaternion8).unwrap()
    }

    pub fn sd16() -> Arc<Group> {
        Self::get(Family::SemiDihedral16).unwrap()
    }

    fn build(family: Family) -> Group {
        let elements = family.elements();
        let index: HashMap<Elem, usize> =
            elements.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let n = elements.len();
        let mut mul = vec![0; n * n];
        for (i, &a) in elements.iter().enumerate() {
            for (j, &b) in elements.iter().enumerate() {
                mul[i * n + j] = index[&family.mul(a, b)];
            }
        }
        let identity = index[&Elem::new(0, 0)];
        let inv: Vec<usize> = (0..n)
            .map(|i| (0..n).find(|&j| mul[i * n + j] == identity).expect("inverse"))
            .collect();
        let reps = family.class_reps();
        let mut class_of = vec![usize::MAX; n];
        let mut classes = Vec::new();
        for (ci, (_, rep)) in reps.iter().enumerate() {
            let r = index[rep];
            let mut cls: Vec<usize> = (0..n).map(|g| mul[mul[inv[g] * n + r] * n + g]).collect();
            cls.sort_unstable();
            cls.dedup();
            for &x in &cls {
                assert_eq!(class_of[x], usize::MAX, "class representatives overlap");
                class_of[x] = ci;
            }
            classes.push(cls);
        }
        assert!(class_of.iter().all(|&c| c != usize::MAX), "classes do not cover group");
        let rep_elems: Vec<Elem> = reps.iter().map(|(_, e)| *e).collect();
        let table = family
            .irreducibles(&rep_elems)
            .into_iter()
            .map(|(name, values)| Character { name, values })
            .collect();
        Group {
            family,
            elements,
            index,
            mul,
            inv,
            classes,
            class_of,
            class_labels: reps.into_iter().map(|(l, _)| l).collect(),
            table,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn name(&self) -> String {
        self.family.name()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Elem] {
        &self.elements
    }

    pub fn index_of(&self, e: Elem) -> Option<usize> {
        self.index.get(&e).copied()
    }

    pub fn identity(&self) -> usize {
        self.index[&Elem::new(0, 0)]
    }

    pub fn mul_idx(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order() + b]
    }

    pub fn inv_idx(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.family.mul(a, b)
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, g: usize) -> usize {
        self.class_of[g]
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    pub fn char_table(&self) -> &[Character] {
        &self.table
    }

    pub fn character(&self, name: &str) -> Result<&Character, GroupError> {
        self.table
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| GroupError::UnknownCharacter {
                name: name.into(),
                group: self.name(),
            })
    }

    /// `|G|^{-1} Σ_c |c| f(c) conj(g(c))`.
    pub fn inner(&self, f: &[CycNum], g: &[CycNum]) -> CycNum {
        let mut acc = CycNum::zero();
        for (ci, cls) in self.classes.iter().enumerate() {
            let term = (&f[ci] * &g[ci].conj()).scale(&BigRat::from_integer(BigInt::from(cls.len())));
            acc = &acc + &term;
        }
        acc.scale(&rat(1, self.order() as i64))
    }

    /// Decompose a class function into integer multiplicities of irreducibles.
    pub fn decompose(&self, f: &[CycNum]) -> Result<BTreeMap<String, i64>, GroupError> {
        let mut combo = BTreeMap::new();
        for ch in &self.table {
            let m = self
                .inner(f, &ch.values)
                .as_rational()
                .filter(|r| r.is_integer())
                .ok_or_else(|| GroupError::NonIntegral(self.name()))?;
            let m = m.to_integer().to_i64().ok_or_else(|| GroupError::NonIntegral(self.name()))?;
            if m != 0 {
                combo.insert(ch.name.clone(), m);
            }
        }
        Ok(combo)
    }
}

pub fn char_table(g: &Group) -> &[Character] {
    g.char_table()
}

/// Determinant of the square character table (rows irreducibles, columns classes).
pub fn char_table_det(g: &Group) -> CycNum {
    let rows: Vec<Vec<CycNum>> = g.char_table().iter().map(|c| c.values.clone()).collect();
    determinant(rows)
}

/// Determinant by Gaussian elimination over a cyclotomic field.
pub fn determinant(mut m: Vec<Vec<CycNum>>) -> CycNum {
    let n = m.len();
    let mut det = CycNum::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return CycNum::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let piv = m[col][col].clone();
        det = &det * &piv;
        let inv = piv.invert().expect("nonzero pivot");
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] * &inv;
            for c in col..n {
                let t = &f * &m[col][c];
                m[r][c] = &m[r][c] - &t;
            }
        }
    }
    det
}

/// Frobenius–Schur indicator: 1 real, 0 complex, -1 quaternionic.
pub fn fs_indicator(g: &Group, c: &Character) -> i64 {
    let mut acc = CycNum::zero();
    for x in 0..g.order() {
        acc = &acc + &c.values[g.class_of(g.mul_idx(x, x))];
    }
    let r = acc.as_rational().expect("indicator is rational") / BigRat::from_integer(BigInt::from(g.order()));
    r.to_integer().to_i64().expect("indicator is an integer")
}

#[derive(Clone, Debug)]
pub struct VirtualChar {
    group: Arc<Group>,
    combo: BTreeMap<String, i64>,
}

impl PartialEq for VirtualChar {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.combo == other.combo
    }
}

impl VirtualChar {
    pub fn zero(group: Arc<Group>) -> Self {
        VirtualChar {
            group,
            combo: BTreeMap::new(),
        }
    }

    pub fn irreducible(group: Arc<Group>, name: &str) -> Result<Self, GroupError> {
        group.character(name)?;
        Ok(Self::from_combo(group, [(name.to_string(), 1)]))
    }

    pub fn trivial(group: Arc<Group>) -> Self {
        Self::from_combo(group, [("rho0".to_string(), 1)])
    }

    pub fn from_combo(group: Arc<Group>, terms: impl IntoIterator<Item = (String, i64)>) -> Self {
        let mut combo = BTreeMap::new();
        for (k, v) in terms {
            *combo.entry(k).or_insert(0) += v;
        }
        combo.retain(|_, v| *v != 0);
        VirtualChar { group, combo }
    }

    pub fn from_class_function(group: Arc<Group>, f: &[CycNum]) -> Result<Self, GroupError> {
        let combo = group.decompose(f)?;
        Ok(VirtualChar { group, combo })
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn combo(&self) -> &BTreeMap<String, i64> {
        &self.combo
    }

    pub fn is_zero(&self) -> bool {
        self.combo.is_empty()
    }

    pub fn virtual_dim(&self) -> i64 {
        self.combo
            .iter()
            .map(|(k, m)| m * self.group.character(k).map(Character::degree).unwrap_or(0))
            .sum()
    }

    pub fn class_values(&self) -> Vec<CycNum> {
        let n = self.group.classes().len();
        let mut out = vec![CycNum::zero(); n];
        for (name, &m) in &self.combo {
            let ch = self.group.character(name).expect("combo holds valid names");
            let mm = BigRat::from_integer(BigInt::from(m));
            for (o, v) in out.iter_mut().zip(&ch.values) {
                *o = &*o + &v.scale(&mm);
            }
        }
        out
    }

    /// Value at a group element given by index.
    pub fn value_at(&self, g: usize) -> CycNum {
        self.class_values()[self.group.class_of(g)].clone()
    }

    fn check_same(&self, other: &Self) -> Result<(), GroupError> {
        if self.group != other.group {
            return Err(GroupError::GroupMismatch {
                expected: self.group.name(),
                found: other.group.name(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, GroupError> {
        self.check_same(other)?;
        Ok(Self::from_combo(
            Arc::clone(&self.group),
            self.combo.iter().chain(&other.combo).map(|(k, &v)| (k.clone(), v)),
        ))
    }

    pub fn scale(&self, c: i64) -> Self {
        Self::from_combo(
            Arc::clone(&self.group),
            self.combo.iter().map(|(k, &v)| (k.clone(), c * v)),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GroupError> {
        self.add(&other.scale(-1))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GroupError> {
        self.check_same(other)?;
        let f: Vec<CycNum> = self
            .class_values()
            .iter()
            .zip(other.class_values())
            .map(|(a, b)| a * &b)
            .collect();
        Self::from_class_function(Arc::clone(&self.group), &f)
    }

    pub fn pow(&self, e: u32) -> Result<Self, GroupError> {
        let mut acc = Self::trivial(Arc::clone(&self.group));
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Frobenius–Schur indicators of the constituents.
    pub fn constituent_indicators(&self) -> Vec<(String, i64)> {
        self.combo
            .keys()
            .map(|k| {
                let ch = self.group.character(k).expect("valid");
                (k.clone(), fs_indicator(&self.group, ch))
            })
            .collect()
    }
}

impl fmt::Display for VirtualChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.combo.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, &m)) in self.combo.iter().enumerate() {
            let sign = if m < 0 { "-" } else if i > 0 { "+" } else { "" };
            let mag = m.abs();
            if mag == 1 {
                write!(f, "{sign}{k}")?;
            } else {
                write!(f, "{sign}{mag}{k}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Inclusion {
    sub: Arc<Group>,
    sup: Arc<Group>,
    embedding: Vec<usize>,
}

impl Inclusion {
    /// Extend generator images to a homomorphism and check it is injective.
    pub fn from_generators(
        sub: Arc<Group>,
        sup: Arc<Group>,
        images: &[(Elem, Elem)],
    ) -> Result<Self, GroupError> {
        let n = sub.order();
        let gens: Vec<(usize, usize)> = images
            .iter()
            .map(|&(a, b)| {
                Ok((
                    sub.index_of(a).ok_or(GroupError::NotHomomorphism)?,
                    sup.index_of(b).ok_or(GroupError::NotHomomorphism)?,
                ))
            })
            .collect::<Result<_, GroupError>>()?;
        let mut emb = vec![usize::MAX; n];
        emb[sub.identity()] = sup.identity();
        let mut queue = VecDeque::from([sub.identity()]);
        while let Some(a) = queue.pop_front() {
            for &(g, gi) in &gens {
                let b = sub.mul_idx(a, g);
                let img = sup.mul_idx(emb[a], gi);
                if emb[b] == usize::MAX {
                    emb[b] = img;
                    queue.push_back(b);
                } else if emb[b] != img {
                    return Err(GroupError::NotHomomorphism);
                }
            }
        }
        if emb.contains(&usize::MAX) {
            return Err(GroupError::NotHomomorphism);
        }
        for a in 0..n {
            for b in 0..n {
                if emb[sub.mul_idx(a, b)] != sup.mul_idx(emb[a], emb[b]) {
                    return Err(GroupError::NotHomomorphism);
                }
            }
        }
        let mut seen = emb.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != n {
            return Err(GroupError::NotInjective);
        }
        Ok(Inclusion {
            sub,
            sup,
            embedding: emb,
        })
    }

    /// Cyclic subgroup of order `l` generated by `g`.
    pub fn cyclic_into(sup: Arc<Group>, l: u32, g: Elem) -> Result<Self, GroupError> {
        let sub = Group::get(Family::Cyclic(l))?;
        Self::from_generators(sub, sup, &[(Elem::new(0, 1 % l), g)])
    }

    /// `V(k) → V(n)` sending the i-th basis vector to the mask `images[i]`.
    pub fn elementary(k: u32, n: u32, images: &[u32]) -> Result<Self, GroupError> {
        let sub = Group::get(Family::ElementaryAbelian(k))?;
        let sup = Group::get(Family::ElementaryAbelian(n))?;
        let gens: Vec<(Elem, Elem)> = images
            .iter()
            .enumerate()
            .map(|(i, &m)| (Elem::new(0, 1 << i), Elem::new(0, m)))
            .collect();
        Self::from_generators(sub, sup, &gens)
    }

    /// `Q8 → SD16` onto `⟨s², ts⟩`.
    pub fn q8_into_sd16() -> Self {
        Self::from_generators(
            Group::q8(),
            Group::sd16(),
            &[(Elem::new(0, 1), Elem::new(0, 2)), (Elem::new(1, 0), Elem::new(1, 1))],
        )
        .expect("preset inclusion")
    }

    pub fn sub(&self) -> &Arc<Group> {
        &self.sub
    }

    pub fn sup(&self) -> &Arc<Group> {
        &self.sup
    }

    pub fn image(&self, sub_idx: usize) -> usize {
        self.embedding[sub_idx]
    }

    pub fn compose(&self, outer: &Inclusion) -> Result<Inclusion, GroupError> {
        if self.sup != outer.sub {
            return Err(GroupError::GroupMismatch {
                expected: outer.sub.name(),
                found: self.sup.name(),
            });
        }
        Ok(Inclusion {
            sub: Arc::clone(&self.sub),
            sup: Arc::clone(&outer.sup),
            embedding: self.embedding.iter().map(|&i| outer.embedding[i]).collect(),
        })
    }
}

pub fn restrict(v: &VirtualChar, inc: &Inclusion) -> Result<VirtualChar, GroupError> {
    if *v.group() != inc.sup {
        return Err(GroupError::GroupMismatch {
            expected: inc.sup.name(),
            found: v.group().name(),
        });
    }
    let vals = v.class_values();
    let sub = &inc.sub;
    let f: Vec<CycNum> = sub
        .classes()
        .iter()
        .map(|cls| vals[inc.sup.class_of(inc.embedding[cls[0]])].clone())
        .collect();
    VirtualChar::from_class_function(Arc::clone(sub), &f)
}

/// Catalogue of named virtual characters.
///
/// | name | group | param |
/// |---|---|---|
/// | `rho_minus_rho0` | cyclic | index `a` |
/// | `sigma` | cyclic | none: `ρ_{-3}(ρ_0-ρ_3)^2` |
/// | `two_minus_tau` | Q8 | power |
/// | `eps2`, `eps3` | Q8 | none: `ρ_0-κ_1`, `ρ_0-κ_3` |
/// | `one_minus_<name>` | any | none: `ρ_0` minus a one-dimensional irreducible |
/// | `two_minus_<name>` | any | none: `2ρ_0` minus a two-dimensional irreducible |
pub fn preset_vchar(group: Arc<Group>, name: &str, param: i64) -> Result<VirtualChar, GroupError> {
    let fam = group.family();
    let unknown = || GroupError::UnknownPreset(name.to_string());
    match (name, fam) {
        ("rho_minus_rho0", Family::Cyclic(l)) => {
            let a = param.rem_euclid(l as i64);
            Ok(VirtualChar::from_combo(
                group,
                [(format!("rho{a}"), 1), ("rho0".into(), -1)],
            ))
        }
        ("sigma", Family::Cyclic(l)) => {
            let l = l as i64;
            let rho = |k: i64| VirtualChar::irreducible(Arc::clone(&group), &format!("rho{}", k.rem_euclid(l)));
            let base = VirtualChar::trivial(Arc::clone(&group)).sub(&rho(3)?)?;
            rho(-3)?.mul(&base.mul(&base)?)
        }
        ("two_minus_tau", Family::Quaternion8) => {
            let t = VirtualChar::trivial(Arc::clone(&group))
                .scale(2)
                .sub(&VirtualChar::irreducible(Arc::clone(&group), "tau")?)?;
            t.pow(u32::try_from(param).map_err(|_| unknown())?)
        }
        ("eps2", Family::Quaternion8) => parse_vchar(group, "rho0-kappa1"),
        ("eps3", Family::Quaternion8) => parse_vchar(group, "rho0-kappa3"),
        (n, _) if n.starts_with("one_minus_") => {
            let ch = &n["one_minus_".len()..];
            parse_vchar(group, &format!("rho0-{ch}"))
        }
        (n, _) if n.starts_with("two_minus_") => {
            let ch = &n["two_minus_".len()..];
            parse_vchar(group, &format!("2-{ch}"))
        }
        _ => Err(unknown()),
    }
}

// Mini-expression grammar:
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*')? unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' integer)?
//   atom   := integer | identifier | '(' expr ')'
// Integers denote multiples of the trivial character.

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, GroupError> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let t: String = cs[st..i].iter().collect();
            out.push(Tok::Int(t.parse().map_err(|_| GroupError::Parse(format!("bad integer {t}")))?));
        } else if c.is_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*^()−".contains(c) {
            out.push(Tok::Sym(if c == '−' { '-' } else { c }));
            i += 1;
        } else {
            return Err(GroupError::Parse(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    group: &'a Arc<Group>,
}

type ClassFn = Vec<CycNum>;

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn constant(&self, n: i64) -> ClassFn {
        vec![CycNum::from_int(n); self.group.classes().len()]
    }

    fn expr(&mut self) -> Result<ClassFn, GroupError> {
        let mut acc = self.term()?;
        while let Some(Tok::Sym(c @ ('+' | '-'))) = self.peek().cloned() {
            self.bump();
            let rhs = self.term()?;
            acc = acc
                .iter()
                .zip(&rhs)
                .map(|(a, b)| if c == '+' { a + b } else { a - b })
                .collect();
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<ClassFn, GroupError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Sym('*')) => {
                    self.bump();
                }
                Some(Tok::Ident(_)) | Some(Tok::Sym('(')) | Some(Tok::Int(_)) => {}
                _ => break,
            }
            let rhs = self.unary()?;
            acc = acc.iter().zip(&rhs).map(|(a, b)| a * b).collect();
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<ClassFn, GroupError> {
        if let Some(Tok::Sym('-')) = self.peek() {
            self.bump();
            let v = self.unary()?;
            return Ok(v.iter().map(|x| -x).collect());
        }
        self.power()
    }

    fn power(&mut self) -> Result<ClassFn, GroupError> {
        let base = self.atom()?;
        if let Some(Tok::Sym('^')) = self.peek() {
            self.bump();
            match self.bump() {
                Some(Tok::Int(e)) => {
                    let e = u32::try_from(e).map_err(|_| GroupError::Parse("exponent too large".into()))?;
                    return Ok(base.iter().map(|x| x.pow(e)).collect());
                }
                _ => return Err(GroupError::Parse("expected integer exponent".into())),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ClassFn, GroupError> {
        match self.bump() {
            Some(Tok::Int(n)) => Ok(self.constant(n)),
            Some(Tok::Ident(name)) => {
                let name = match name.as_str() {
                    "τ" => "tau".to_string(),
                    _ => name,
                };
                Ok(self.group.character(&name)?.values.clone())
            }
            Some(Tok::Sym('(')) => {
                let v = self.expr()?;
                match self.bump() {
                    Some(Tok::Sym(')')) => Ok(v),
                    _ => Err(GroupError::Parse("expected `)`".into())),
                }
            }
            other => Err(GroupError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parse expressions such as `2-tau`, `(2-tau)^2`, `rho4-rho0`.
pub fn parse_vchar(group: Arc<Group>, s: &str) -> Result<VirtualChar, GroupError> {
    let toks = tokenize(s)?;
    if toks.is_empty() {
        return Err(GroupError::Parse("empty expression".into()));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        group: &group,
    };
    let f = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(GroupError::Parse("trailing input".into()));
    }
    VirtualChar::from_class_function(group, &f)
}

/// Exponent identity used for `V(n)` orders: `n·2^{n-1} = 2^n - 1 + Σ_{k≥2} (k-1)·C(n,k)`.
pub fn vn_exponent_identity(n: u32) -> bool {
    let lhs = BigInt::from(n) << (n as usize).saturating_sub(1);
    let mut rhs = (BigInt::one() << n as usize) - 1;
    for k in 2..=n {
        rhs += BigInt::from(k - 1) * binomial(n, k);
    }
    lhs == rhs
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Centralizer order of the class of `g`.
pub fn centralizer_order(g: &Group, class: usize) -> usize {
    g.order() / g.classes()[class].len()
}

/// Lcm of element orders, for sanity checks.
pub fn exponent(g: &Group) -> usize {
    (0..g.order())
        .map(|x| {
            let mut k = 1;
            let mut y = x;
            while y != g.identity() {
                y = g.mul_idx(y, x);
                k += 1;
            }
            k
        })
        .fold(1, |a, b| a.lcm(&b))
}
