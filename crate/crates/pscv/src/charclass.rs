//! Graded commutative algebra over F2: quotient rings presented by rewrite
//! rules, projective bundles, Stiefel-Whitney and Wu classes, Steenrod squares
//! and pushforward of fundamental classes.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

/// Default bound on the degree of any monomial the engine is asked to reduce.
pub const DEFAULT_DEGREE_CAP: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CharClassError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{0}` appears twice")]
    DuplicateGenerator(String),
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("rewrite rule `{0}` does not decrease in the monomial order")]
    NonDecreasingRule(String),
    #[error("rewrite system is not confluent at `{0}`")]
    NotConfluent(String),
    #[error("degree {degree} exceeds the degree cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },
    #[error("ring `{0}` has no manifold dimension")]
    NotManifold(String),
    #[error("top degree has dimension {0}, expected 1")]
    TopClass(usize),
    #[error("ring `{0}` carries no tangent data")]
    MissingTangent(String),
    #[error("bundle rank must be positive")]
    ZeroRank,
    #[error("bundle class is nonzero in degree {0}, above its rank")]
    RankExceeded(u32),
    #[error("missing Steenrod action Sq^{i} on `{generator}`")]
    MissingSq { generator: String, i: u32 },
    #[error("Poincare pairing in degree {0} is degenerate")]
    DegeneratePairing(u32),
    #[error("ring map is not well defined: relation `{0}` maps to a nonzero class")]
    IllDefined(String),
    #[error("ring map has {found} generator images, expected {expected}")]
    ImageCount { expected: usize, found: usize },
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: u32, found: u32 },
    #[error("cannot parse `{0}`")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CharClassError>;

/// Exponent vector over a ring's generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn one(nvars: usize) -> Self {
        Mono(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize, e: u32) -> Self {
        let mut v = vec![0; nvars];
        v[i] = e;
        Mono(v)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming divisibility.
    pub fn cofactor(&self, other: &Mono) -> Mono {
        Mono(other.0.iter().zip(&self.0).map(|(a, b)| a - b).collect())
    }

    pub fn lcm(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn coprime(&self, other: &Mono) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }

    fn extend(&self, extra: usize) -> Mono {
        let mut v = self.0.clone();
        v.extend(std::iter::repeat_n(0, extra));
        Mono(v)
    }

    fn shift(&self, before: usize) -> Mono {
        let mut v = vec![0; before];
        v.extend_from_slice(&self.0);
        Mono(v)
    }
}

/// An F2 linear combination of monomials; coefficients are implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct F2Poly {
    terms: BTreeSet<Mono>,
}

impl F2Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one(nvars: usize) -> Self {
        Self::from_mono(Mono::one(nvars))
    }

    pub fn from_mono(m: Mono) -> Self {
        let mut terms = BTreeSet::new();
        terms.insert(m);
        F2Poly { terms }
    }

    pub fn from_monos(ms: impl IntoIterator<Item = Mono>) -> Self {
        let mut p = F2Poly::zero();
        for m in ms {
            p.toggle(m);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Mono> {
        self.terms.iter()
    }

    pub fn contains(&self, m: &Mono) -> bool {
        self.terms.contains(m)
    }

    pub fn toggle(&mut self, m: Mono) {
        if !self.terms.remove(&m) {
            self.terms.insert(m);
        }
    }

    pub fn add_assign(&mut self, other: &F2Poly) {
        for m in &other.terms {
            self.toggle(m.clone());
        }
    }

    pub fn add(&self, other: &F2Poly) -> F2Poly {
        let mut p = self.clone();
        p.add_assign(other);
        p
    }

    /// Product in the free polynomial ring, without reduction.
    pub fn mul_raw(&self, other: &F2Poly) -> F2Poly {
        let mut p = F2Poly::zero();
        for a in &self.terms {
            for b in &other.terms {
                p.toggle(a.mul(b));
            }
        }
        p
    }

    fn map_monos(&self, f: impl Fn(&Mono) -> Mono) -> F2Poly {
        F2Poly::from_monos(self.terms.iter().map(f))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub degree: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub lead: Mono,
    pub tail: F2Poly,
}

/// How homology classes of a ring are labelled for display.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStyle {
    Monomial,
    /// Dihedral rings: the normal monomial `a^i b d^j` is labelled `b^(i+1) d^j`.
    BetaPowers { alpha: usize, beta: usize },
}

/// A graded F2 algebra `F2[gens]/(rules)` with optional manifold data.
pub struct GradedRingF2 {
    name: String,
    gens: Vec<Generator>,
    priority: Vec<usize>,
    rules: Vec<Rule>,
    manifold_dim: Option<u32>,
    sq: BTreeMap<(usize, u32), F2Poly>,
    tangent_w: Option<F2Poly>,
    style: BasisStyle,
    cap: u32,
    nf_memo: Mutex<HashMap<Mono, F2Poly>>,
    sq_memo: Mutex<HashMap<(Mono, u32), F2Poly>>,
}

impl fmt::Debug for GradedRingF2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradedRingF2")
            .field("name", &self.name)
            .field("gens", &self.gens)
            .field("rules", &self.rules.len())
            .field("manifold_dim", &self.manifold_dim)
            .finish()
    }
}

impl Clone for GradedRingF2 {
    fn clone(&self) -> Self {
        GradedRingF2 {
            name: self.name.clone(),
            gens: self.gens.clone(),
            priority: self.priority.clone(),
            rules: self.rules.clone(),
            manifold_dim: self.manifold_dim,
            sq: self.sq.clone(),
            tangent_w: self.tangent_w.clone(),
            style: self.style,
            cap: self.cap,
            nf_memo: Mutex::new(HashMap::new()),
            sq_memo: Mutex::new(HashMap::new()),
        }
    }
}

/// Incremental constructor for presented rings; `build` validates.
pub struct RingBuilder {
    name: String,
    gens: Vec<Generator>,
    priority: Option<Vec<String>>,
    rules: Vec<(String, String)>,
    sq: Vec<(String, u32, String)>,
    manifold_dim: Option<u32>,
    tangent: Option<String>,
    style_dihedral: Option<(String, String)>,
    cap: u32,
}

impl RingBuilder {
    pub fn new(name: &str) -> Self {
        RingBuilder {
            name: name.to_string(),
            gens: Vec::new(),
            priority: None,
            rules: Vec::new(),
            sq: Vec::new(),
            manifold_dim: None,
            tangent: None,
            style_dihedral: None,
            cap: DEFAULT_DEGREE_CAP,
        }
    }

    pub fn generator(mut self, name: &str, degree: u32) -> Self {
        self.gens.push(Generator { name: name.to_string(), degree });
        self
    }

    /// Most significant variable first; defaults to declaration order.
    pub fn priority(mut self, order: &[&str]) -> Self {
        self.priority = Some(order.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn rule(mut self, lead: &str, tail: &str) -> Self {
        self.rules.push((lead.to_string(), tail.to_string()));
        self
    }

    pub fn sq(mut self, generator: &str, i: u32, value: &str) -> Self {
        self.sq.push((generator.to_string(), i, value.to_string()));
        self
    }

    pub fn manifold(mut self, dim: u32) -> Self {
        self.manifold_dim = Some(dim);
        self
    }

    pub fn tangent(mut self, total_w: &str) -> Self {
        self.tangent = Some(total_w.to_string());
        self
    }

    pub fn beta_powers(mut self, alpha: &str, beta: &str) -> Self {
        self.style_dihedral = Some((alpha.to_string(), beta.to_string()));
        self
    }

    pub fn cap(mut self, cap: u32) -> Self {
        self.cap = cap;
        self
    }

    pub fn build(self) -> Result<GradedRingF2> {
        let mut seen = BTreeSet::new();
        for g in &self.gens {
            if !seen.insert(g.name.clone()) {
                return Err(CharClassError::DuplicateGenerator(g.name.clone()));
            }
        }
        let index = |name: &str| -> Result<usize> {
            self.gens
                .iter()
                .position(|g| g.name == name)
                .ok_or_else(|| CharClassError::UnknownGenerator(name.to_string()))
        };
        let priority = match &self.priority {
            Some(order) => {
                let mut p = Vec::new();
                for name in order {
                    p.push(index(name)?);
                }
                for i in 0..self.gens.len() {
                    if !p.contains(&i) {
                        p.push(i);
                    }
                }
                p
            }
            None => (0..self.gens.len()).collect(),
        };
        let style = match &self.style_dihedral {
            Some((a, b)) => BasisStyle::BetaPowers { alpha: index(a)?, beta: index(b)? },
            None => BasisStyle::Monomial,
        };
        let mut ring = GradedRingF2 {
            name: self.name.clone(),
            gens: self.gens.clone(),
            priority,
            rules: Vec::new(),
            manifold_dim: self.manifold_dim,
            sq: BTreeMap::new(),
            tangent_w: None,
            style,
            cap: self.cap,
            nf_memo: Mutex::new(HashMap::new()),
            sq_memo: Mutex::new(HashMap::new()),
        };
        for (lead, tail) in &self.rules {
            let lead_p = ring.parse(lead)?;
            if lead_p.len() != 1 {
                return Err(CharClassError::Parse(lead.clone()));
            }
            let lead_m = lead_p.terms().next().cloned().unwrap();
            ring.rules.push(Rule { lead: lead_m, tail: ring.parse(tail)? });
        }
        for (g, i, v) in &self.sq {
            let gi = index(g)?;
            let p = ring.parse(v)?;
            ring.sq.insert((gi, *i), p);
        }
        if let Some(t) = &self.tangent {
            ring.tangent_w = Some(ring.parse(t)?);
        }
        ring.validate()?;
        Ok(ring)
    }
}

impl GradedRingF2 {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn nvars(&self) -> usize {
        self.gens.len()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn manifold_dim(&self) -> Option<u32> {
        self.manifold_dim
    }

    pub fn tangent_w(&self) -> Option<&F2Poly> {
        self.tangent_w.as_ref()
    }

    pub fn style(&self) -> BasisStyle {
        self.style
    }

    pub fn degree_cap(&self) -> u32 {
        self.cap
    }

    /// Same ring under a new name and degree cap.
    pub fn renamed(&self, name: &str) -> GradedRingF2 {
        let mut r = self.clone();
        r.name = name.to_string();
        r
    }

    pub fn with_cap(&self, cap: u32) -> GradedRingF2 {
        let mut r = self.clone();
        r.cap = cap;
        r
    }

    pub fn gen_index(&self, name: &str) -> Result<usize> {
        self.gens
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| CharClassError::UnknownGenerator(name.to_string()))
    }

    pub fn gen(&self, name: &str) -> Result<F2Poly> {
        let i = self.gen_index(name)?;
        Ok(F2Poly::from_mono(Mono::var(self.nvars(), i, 1)))
    }

    pub fn one(&self) -> F2Poly {
        F2Poly::one(self.nvars())
    }

    pub fn mono_degree(&self, m: &Mono) -> u32 {
        m.0.iter().zip(&self.gens).map(|(e, g)| e * g.degree).sum()
    }

    /// Degree of a homogeneous polynomial; `None` for zero, error otherwise.
    pub fn degree(&self, p: &F2Poly) -> Result<Option<u32>> {
        let mut d = None;
        for m in p.terms() {
            let dm = self.mono_degree(m);
            match d {
                None => d = Some(dm),
                Some(x) if x != dm => return Err(CharClassError::NotHomogeneous),
                _ => {}
            }
        }
        Ok(d)
    }

    pub fn component(&self, p: &F2Poly, d: u32) -> F2Poly {
        F2Poly::from_monos(p.terms().filter(|m| self.mono_degree(m) == d).cloned())
    }

    /// Graded order: degree first, then exponents compared in priority order.
    pub fn cmp_mono(&self, a: &Mono, b: &Mono) -> Ordering {
        self.mono_degree(a).cmp(&self.mono_degree(b)).then_with(|| {
            for &i in &self.priority {
                match a.0[i].cmp(&b.0[i]) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }

    fn validate(&self) -> Result<()> {
        for r in &self.rules {
            let d = self.mono_degree(&r.lead);
            for m in r.tail.terms() {
                if self.mono_degree(m) != d || self.cmp_mono(m, &r.lead) != Ordering::Less {
                    return Err(CharClassError::NonDecreasingRule(self.fmt_mono(&r.lead)));
                }
            }
        }
        self.check_confluence(self.cap)?;
        if let Some(n) = self.manifold_dim {
            let top = self.normal_basis(n)?.len();
            if top != 1 {
                return Err(CharClassError::TopClass(top));
            }
            let maxdeg = self.gens.iter().map(|g| g.degree).max().unwrap_or(1);
            for d in n + 1..=n + maxdeg {
                if d > self.cap {
                    break;
                }
                let extra = self.normal_basis(d)?.len();
                if extra != 0 {
                    return Err(CharClassError::TopClass(extra));
                }
            }
        }
        Ok(())
    }

    /// Critical-pair check: every overlap of two rule leads up to `cap`
    /// reduces to the same normal form along both rules.
    pub fn check_confluence(&self, cap: u32) -> Result<()> {
        for (i, a) in self.rules.iter().enumerate() {
            for b in &self.rules[i + 1..] {
                if a.lead.coprime(&b.lead) {
                    continue;
                }
                let l = a.lead.lcm(&b.lead);
                if self.mono_degree(&l) > cap {
                    continue;
                }
                let via_a = self.nf(&F2Poly::from_mono(a.lead.cofactor(&l)).mul_raw(&a.tail))?;
                let via_b = self.nf(&F2Poly::from_mono(b.lead.cofactor(&l)).mul_raw(&b.tail))?;
                if via_a != via_b {
                    return Err(CharClassError::NotConfluent(self.fmt_mono(&l)));
                }
            }
        }
        Ok(())
    }

    fn reducer(&self, m: &Mono) -> Option<&Rule> {
        self.rules.iter().find(|r| r.lead.divides(m))
    }

    pub fn is_normal(&self, m: &Mono) -> bool {
        self.reducer(m).is_none()
    }

    fn nf_mono(&self, m: &Mono) -> Result<F2Poly> {
        let d = self.mono_degree(m);
        if d > self.cap {
            return Err(CharClassError::DegreeCap { degree: d, cap: self.cap });
        }
        let rule = match self.reducer(m) {
            None => return Ok(F2Poly::from_mono(m.clone())),
            Some(r) => r,
        };
        if let Some(p) = self.nf_memo.lock().unwrap().get(m) {
            return Ok(p.clone());
        }
        let cof = rule.lead.cofactor(m);
        let mut out = F2Poly::zero();
        for t in rule.tail.terms() {
            out.add_assign(&self.nf_mono(&t.mul(&cof))?);
        }
        self.nf_memo.lock().unwrap().insert(m.clone(), out.clone());
        Ok(out)
    }

    /// Normal form with respect to the rewrite rules.
    pub fn nf(&self, p: &F2Poly) -> Result<F2Poly> {
        let mut out = F2Poly::zero();
        for m in p.terms() {
            out.add_assign(&self.nf_mono(m)?);
        }
        Ok(out)
    }

    pub fn reduces_to_zero(&self, p: &F2Poly) -> Result<bool> {
        Ok(self.nf(p)?.is_zero())
    }

    pub fn mul(&self, a: &F2Poly, b: &F2Poly) -> Result<F2Poly> {
        self.nf(&a.mul_raw(b))
    }

    pub fn pow(&self, a: &F2Poly, e: u32) -> Result<F2Poly> {
        let mut acc = self.one();
        let mut base = self.nf(a)?;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base)?;
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base)?;
            }
        }
        Ok(acc)
    }

    /// All monomials of degree `d`, normal or not.
    pub fn monomials(&self, d: u32) -> Vec<Mono> {
        fn rec(gens: &[Generator], i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Mono>) {
            if i == gens.len() {
                if left == 0 {
                    out.push(Mono(cur.clone()));
                }
                return;
            }
            let g = gens[i].degree;
            let mut e = 0;
            while e * g <= left {
                cur.push(e);
                rec(gens, i + 1, left - e * g, cur, out);
                cur.pop();
                if g == 0 {
                    break;
                }
                e += 1;
            }
        }
        let mut out = Vec::new();
        rec(&self.gens, 0, d, &mut Vec::new(), &mut out);
        out
    }

    /// Normal monomials of degree `d`, in decreasing monomial order.
    pub fn normal_basis(&self, d: u32) -> Result<Vec<Mono>> {
        if d > self.cap {
            return Err(CharClassError::DegreeCap { degree: d, cap: self.cap });
        }
        let mut v: Vec<Mono> = self.monomials(d).into_iter().filter(|m| self.is_normal(m)).collect();
        v.sort_by(|a, b| self.cmp_mono(b, a));
        Ok(v)
    }

    pub fn top_class(&self) -> Result<Mono> {
        let n = self.manifold_dim.ok_or_else(|| CharClassError::NotManifold(self.name.clone()))?;
        let b = self.normal_basis(n)?;
        if b.len() != 1 {
            return Err(CharClassError::TopClass(b.len()));
        }
        Ok(b[0].clone())
    }

    /// Value of a class on the fundamental class.
    pub fn evaluate(&self, p: &F2Poly) -> Result<bool> {
        let t = self.top_class()?;
        Ok(self.nf(p)?.contains(&t))
    }

    fn sq_gen(&self, g: usize, i: u32) -> Result<F2Poly> {
        let d = self.gens[g].degree;
        let x = Mono::var(self.nvars(), g, 1);
        if i == 0 {
            return Ok(F2Poly::from_mono(x));
        }
        if i == d {
            return self.nf(&F2Poly::from_mono(Mono::var(self.nvars(), g, 2)));
        }
        if i > d {
            return Ok(F2Poly::zero());
        }
        self.sq.get(&(g, i)).cloned().ok_or_else(|| CharClassError::MissingSq {
            generator: self.gens[g].name.clone(),
            i,
        })
    }

    /// Sq^i of a monomial, expanded by the Cartan formula on its factors.
    fn sq_mono(&self, i: u32, m: &Mono) -> Result<F2Poly> {
        let d = self.mono_degree(m);
        if i == 0 {
            return self.nf(&F2Poly::from_mono(m.clone()));
        }
        if i > d {
            return Ok(F2Poly::zero());
        }
        if i == d {
            return self.nf(&F2Poly::from_mono(m.mul(m)));
        }
        if let Some(p) = self.sq_memo.lock().unwrap().get(&(m.clone(), i)) {
            return Ok(p.clone());
        }
        let g = m.0.iter().position(|&e| e > 0).expect("positive degree");
        let rest = {
            let mut r = m.clone();
            r.0[g] -= 1;
            r
        };
        let gd = self.gens[g].degree;
        let mut out = F2Poly::zero();
        for a in 0..=gd.min(i) {
            let left = self.sq_gen(g, a)?;
            if left.is_zero() {
                continue;
            }
            let right = self.sq_mono(i - a, &rest)?;
            if right.is_zero() {
                continue;
            }
            out.add_assign(&self.mul(&left, &right)?);
        }
        self.sq_memo.lock().unwrap().insert((m.clone(), i), out.clone());
        Ok(out)
    }

    /// Steenrod square `Sq^i` of a homogeneous class, in normal form.
    pub fn sq(&self, i: u32, p: &F2Poly) -> Result<F2Poly> {
        self.degree(p)?;
        let mut out = F2Poly::zero();
        for m in p.terms() {
            out.add_assign(&self.sq_mono(i, m)?);
        }
        Ok(out)
    }

    /// Checks that the Steenrod data respects every relation: for each rule
    /// and each `i`, `Sq^i(lead) = Sq^i(tail)` in the quotient.
    /// Returns the failing (rule lead, i) pairs.
    pub fn steenrod_defects(&self) -> Result<Vec<(String, u32)>> {
        let mut bad = Vec::new();
        for r in &self.rules {
            let d = self.mono_degree(&r.lead);
            for i in 1..d {
                if d + i > self.cap {
                    break;
                }
                let lhs = self.sq_mono(i, &r.lead)?;
                let rhs = self.sq(i, &r.tail)?;
                if lhs != rhs {
                    bad.push((self.fmt_mono(&r.lead), i));
                }
            }
        }
        Ok(bad)
    }

    /// Poincare pairing matrix between degrees `j` and `n - j`.
    pub fn pairing_matrix(&self, j: u32) -> Result<(Vec<Mono>, Vec<Mono>, Vec<Vec<bool>>)> {
        let n = self.manifold_dim.ok_or_else(|| CharClassError::NotManifold(self.name.clone()))?;
        if j > n {
            return Ok((Vec::new(), Vec::new(), Vec::new()));
        }
        let top = self.top_class()?;
        let left = self.normal_basis(j)?;
        let right = self.normal_basis(n - j)?;
        let mut m = Vec::with_capacity(left.len());
        for a in &left {
            let mut row = Vec::with_capacity(right.len());
            for b in &right {
                row.push(self.nf_mono(&a.mul(b))?.contains(&top));
            }
            m.push(row);
        }
        Ok((left, right, m))
    }

    pub fn pairing_nondegenerate(&self, j: u32) -> Result<bool> {
        let (l, r, m) = self.pairing_matrix(j)?;
        Ok(l.len() == r.len() && f2_rank_rows(&m) == l.len())
    }

    /// Wu classes `v1`, `v2` and the Stiefel-Whitney classes they determine.
    pub fn wu_classes(&self) -> Result<WuClasses> {
        let v1 = self.wu_class(1)?;
        let v2 = self.wu_class(2)?;
        let w1 = v1.clone();
        let w2 = v2.add(&self.sq(1, &v1)?);
        Ok(WuClasses { v1, v2, w1, w2 })
    }

    fn wu_class(&self, j: u32) -> Result<F2Poly> {
        let (left, right, m) = self.pairing_matrix(j)?;
        if left.len() != right.len() || f2_rank_rows(&m) != left.len() {
            return Err(CharClassError::DegeneratePairing(j));
        }
        let mut rhs = Vec::with_capacity(right.len());
        for y in &right {
            rhs.push(self.evaluate(&self.sq(j, &F2Poly::from_mono(y.clone()))?)?);
        }
        // Solve sum_a c_a m[a][b] = rhs[b]: transpose system.
        let k = left.len();
        let mut rows: Vec<(Vec<bool>, bool)> =
            (0..k).map(|b| ((0..k).map(|a| m[a][b]).collect(), rhs[b])).collect();
        let sol = solve_f2(&mut rows, k).ok_or(CharClassError::DegeneratePairing(j))?;
        Ok(F2Poly::from_monos(left.into_iter().zip(sol).filter(|(_, c)| *c).map(|(a, _)| a)))
    }

    /// First and second Stiefel-Whitney classes of the tangent bundle.
    /// Uses the carried total class when present, Wu's formula otherwise.
    pub fn tangent_sw(&self) -> Result<(F2Poly, F2Poly)> {
        match &self.tangent_w {
            Some(w) => Ok((self.nf(&self.component(w, 1))?, self.nf(&self.component(w, 2))?)),
            None if self.manifold_dim.is_some() => {
                let wu = self.wu_classes()?;
                Ok((wu.w1, wu.w2))
            }
            None => Err(CharClassError::MissingTangent(self.name.clone())),
        }
    }

    pub fn is_spin(&self) -> Result<bool> {
        let (w1, w2) = self.tangent_sw()?;
        Ok(w1.is_zero() && w2.is_zero())
    }

    /// Relations as polynomials `lead + tail`.
    pub fn relations(&self) -> Vec<F2Poly> {
        self.rules
            .iter()
            .map(|r| {
                let mut p = r.tail.clone();
                p.toggle(r.lead.clone());
                p
            })
            .collect()
    }

    pub fn parse(&self, s: &str) -> Result<F2Poly> {
        let err = || CharClassError::Parse(s.to_string());
        let s = s.trim();
        if s.is_empty() || s == "0" {
            return Ok(F2Poly::zero());
        }
        let mut out = F2Poly::zero();
        for term in s.split('+') {
            let term = term.trim();
            if term.is_empty() {
                return Err(err());
            }
            let mut m = Mono::one(self.nvars());
            for factor in term.split('*') {
                let factor = factor.trim();
                if factor == "1" {
                    continue;
                }
                let (name, exp) = match factor.split_once('^') {
                    Some((n, e)) => (n.trim(), e.trim().parse::<u32>().map_err(|_| err())?),
                    None => (factor, 1),
                };
                let i = self.gen_index(name)?;
                m.0[i] += exp;
            }
            out.toggle(m);
        }
        Ok(out)
    }

    pub fn fmt_mono(&self, m: &Mono) -> String {
        let parts: Vec<String> = m
            .0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| {
                if e == 1 {
                    self.gens[i].name.clone()
                } else {
                    format!("{}^{}", self.gens[i].name, e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    pub fn fmt_poly(&self, p: &F2Poly) -> String {
        if p.is_zero() {
            return "0".into();
        }
        let mut ms: Vec<&Mono> = p.terms().collect();
        ms.sort_by(|a, b| self.cmp_mono(b, a));
        ms.iter().map(|m| self.fmt_mono(m)).collect::<Vec<_>>().join(" + ")
    }

    /// Label of a normal monomial in the ring's declared homology basis.
    pub fn basis_label(&self, m: &Mono) -> String {
        match self.style {
            BasisStyle::BetaPowers { alpha, beta } if m.0[beta] == 1 => {
                let mut v = m.clone();
                v.0[beta] = m.0[alpha] + 1;
                v.0[alpha] = 0;
                self.fmt_mono(&v)
            }
            _ => self.fmt_mono(m),
        }
    }

    fn lift(&self, p: &F2Poly, extra: usize) -> F2Poly {
        p.map_monos(|m| m.extend(extra))
    }
}

/// Wu classes of a closed manifold ring and the derived `w1`, `w2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WuClasses {
    pub v1: F2Poly,
    pub v2: F2Poly,
    pub w1: F2Poly,
    pub w2: F2Poly,
}

/// A real vector bundle over a ring's space, recorded by rank and total
/// Stiefel-Whitney class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleDesc {
    total_w: F2Poly,
    rank: u32,
}

impl BundleDesc {
    /// Sum of line bundles with the given first Stiefel-Whitney classes and
    /// `trivial` trivial summands.
    pub fn lines(base: &GradedRingF2, w1s: &[F2Poly], trivial: u32) -> Result<Self> {
        let mut w = base.one();
        for l in w1s {
            if base.degree(l)?.is_some_and(|d| d != 1) {
                return Err(CharClassError::DegreeMismatch { expected: 1, found: base.degree(l)?.unwrap() });
            }
            w = base.mul(&w, &base.one().add(l))?;
        }
        Ok(BundleDesc { total_w: w, rank: w1s.len() as u32 + trivial })
    }

    /// Bundle given by a total class; components above the rank must vanish.
    pub fn from_total(base: &GradedRingF2, total_w: F2Poly, rank: u32) -> Result<Self> {
        let w = base.nf(&total_w)?;
        for m in w.terms() {
            let d = base.mono_degree(m);
            if d > rank {
                return Err(CharClassError::RankExceeded(d));
            }
        }
        Ok(BundleDesc { total_w: w, rank })
    }

    /// Tangent bundle with `removed` trivial summands split off.
    pub fn tangent_minus_trivial(base: &GradedRingF2, removed: u32) -> Result<Self> {
        let w = base.tangent_w.clone().ok_or_else(|| CharClassError::MissingTangent(base.name.clone()))?;
        let n = base.manifold_dim.ok_or_else(|| CharClassError::NotManifold(base.name.clone()))?;
        if removed >= n {
            return Err(CharClassError::ZeroRank);
        }
        Self::from_total(base, w, n - removed)
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn total_w(&self) -> &F2Poly {
        &self.total_w
    }
}

/// Projective bundle of `bundle` over `base`; the new degree-one generator
/// `fiber` is the first Stiefel-Whitney class of the tautological line.
pub fn projectivize(base: &GradedRingF2, bundle: &BundleDesc, fiber: &str) -> Result<GradedRingF2> {
    let n = bundle.rank;
    if n == 0 {
        return Err(CharClassError::ZeroRank);
    }
    let wb = base.tangent_w.clone().ok_or_else(|| CharClassError::MissingTangent(base.name.clone()))?;
    let dim = base.manifold_dim.ok_or_else(|| CharClassError::NotManifold(base.name.clone()))?;
    if base.gens.iter().any(|g| g.name == fiber) {
        return Err(CharClassError::DuplicateGenerator(fiber.to_string()));
    }
    let k = base.nvars();
    let t = k;
    let mut gens = base.gens.clone();
    gens.push(Generator { name: fiber.to_string(), degree: 1 });
    let mut priority = vec![t];
    priority.extend(&base.priority);
    let mut rules: Vec<Rule> =
        base.rules.iter().map(|r| Rule { lead: r.lead.extend(1), tail: base.lift(&r.tail, 1) }).collect();

    let wk = |i: u32| base.lift(&base.component(&bundle.total_w, i), 1);
    let tpow = |e: u32| F2Poly::from_mono(Mono::var(k + 1, t, e));
    let mut tail = F2Poly::zero();
    for i in 1..=n {
        tail.add_assign(&tpow(n - i).mul_raw(&wk(i)));
    }
    rules.push(Rule { lead: Mono::var(k + 1, t, n), tail });

    let sq = base.sq.iter().map(|(key, v)| (*key, base.lift(v, 1))).collect();
    let mut ring = GradedRingF2 {
        name: format!("P({})", base.name),
        gens,
        priority,
        rules,
        manifold_dim: Some(dim + n - 1),
        sq,
        tangent_w: None,
        style: BasisStyle::Monomial,
        cap: base.cap,
        nf_memo: Mutex::new(HashMap::new()),
        sq_memo: Mutex::new(HashMap::new()),
    };
    // w(P) = w(B) * sum_i (1+t)^(n-i) w_i(bundle)
    let one_t = ring.one().add(&tpow(1));
    let mut fib = F2Poly::zero();
    for i in 0..=n {
        let p = ring.pow(&one_t, n - i)?;
        fib.add_assign(&ring.mul(&p, &wk(i))?);
    }
    let w = ring.mul(&base.lift(&wb, 1), &fib)?;
    ring.tangent_w = Some(w);
    ring.validate()?;
    Ok(ring)
}

/// Closed-form `w1`, `w2` of a projective bundle from base and bundle data.
pub fn projective_bundle_w12(
    base: &GradedRingF2,
    bundle: &BundleDesc,
    total: &GradedRingF2,
) -> Result<(F2Poly, F2Poly)> {
    let n = bundle.rank as u64;
    let wb = base.tangent_w.clone().ok_or_else(|| CharClassError::MissingTangent(base.name.clone()))?;
    let lift = |p: &F2Poly| base.lift(p, 1);
    let t = F2Poly::from_mono(Mono::var(total.nvars(), total.nvars() - 1, 1));
    let t2 = total.mul(&t, &t)?;
    let b1 = lift(&base.component(&wb, 1));
    let b2 = lift(&base.component(&wb, 2));
    let p1 = lift(&base.component(&bundle.total_w, 1));
    let p2 = lift(&base.component(&bundle.total_w, 2));
    let nt = if n % 2 == 1 { t.clone() } else { F2Poly::zero() };
    let w1 = total.nf(&p1.add(&b1).add(&nt))?;
    let mut w2 = b2.add(&total.mul(&b1, &nt.add(&p1))?);
    if (n * (n.saturating_sub(1)) / 2) % 2 == 1 {
        w2.add_assign(&t2);
    }
    if n.is_multiple_of(2) {
        w2.add_assign(&total.mul(&p1, &t)?);
    }
    w2.add_assign(&p2);
    Ok((w1, total.nf(&w2)?))
}

/// Cartesian product of two rings with disjoint generator names.
pub fn product(a: &GradedRingF2, b: &GradedRingF2) -> Result<GradedRingF2> {
    for g in &b.gens {
        if a.gens.iter().any(|h| h.name == g.name) {
            return Err(CharClassError::DuplicateGenerator(g.name.clone()));
        }
    }
    let ka = a.nvars();
    let kb = b.nvars();
    let la = |p: &F2Poly| a.lift(p, kb);
    let lb = |p: &F2Poly| p.map_monos(|m| m.shift(ka));
    let mut gens = a.gens.clone();
    gens.extend(b.gens.iter().cloned());
    let mut priority = a.priority.clone();
    priority.extend(b.priority.iter().map(|i| i + ka));
    let mut rules: Vec<Rule> = a.rules.iter().map(|r| Rule { lead: r.lead.extend(kb), tail: la(&r.tail) }).collect();
    rules.extend(b.rules.iter().map(|r| Rule { lead: r.lead.shift(ka), tail: lb(&r.tail) }));
    let mut sq: BTreeMap<(usize, u32), F2Poly> = a.sq.iter().map(|(k, v)| (*k, la(v))).collect();
    sq.extend(b.sq.iter().map(|((g, i), v)| ((g + ka, *i), lb(v))));
    let manifold_dim = match (a.manifold_dim, b.manifold_dim) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    };
    let mut ring = GradedRingF2 {
        name: format!("{}x{}", a.name, b.name),
        gens,
        priority,
        rules,
        manifold_dim,
        sq,
        tangent_w: None,
        style: BasisStyle::Monomial,
        cap: a.cap.max(b.cap),
        nf_memo: Mutex::new(HashMap::new()),
        sq_memo: Mutex::new(HashMap::new()),
    };
    if let (Some(wa), Some(wb)) = (&a.tangent_w, &b.tangent_w) {
        ring.tangent_w = Some(ring.mul(&la(wa), &lb(wb))?);
    }
    ring.validate()?;
    Ok(ring)
}

/// Real projective space `RP^a` with generator `name`.
pub fn rp(a: u32, name: &str) -> Result<GradedRingF2> {
    let ring = RingBuilder::new(&format!("RP{a}"))
        .generator(name, 1)
        .rule(&format!("{name}^{}", a + 1), "0")
        .manifold(a)
        .build()?;
    let x = ring.gen(name)?;
    let w = ring.pow(&ring.one().add(&x), a + 1)?;
    let mut ring = ring;
    ring.tangent_w = Some(w);
    Ok(ring)
}

/// `H*(BV(n)) = F2[x1..xn]`.
pub fn bv(n: usize) -> GradedRingF2 {
    let mut b = RingBuilder::new(&format!("V({n})"));
    for i in 1..=n {
        b = b.generator(&format!("x{i}"), 1);
    }
    b.build().expect("polynomial ring")
}

/// Dihedral 2-groups: `F2[a,b,d]/(b^2 + ab)` with `|d| = 2` and `Sq^1 d = a d`.
pub fn dihedral(order_exponent: u32) -> GradedRingF2 {
    RingBuilder::new(&format!("D{}", 1u64 << order_exponent))
        .generator("a", 1)
        .generator("b", 1)
        .generator("d", 2)
        .priority(&["b", "a", "d"])
        .rule("b^2", "a*b")
        .sq("d", 1, "a*d")
        .beta_powers("a", "b")
        .build()
        .expect("dihedral preset")
}

/// Semidihedral 2-groups: `F2[x,y,u,P]/(xy + x^2, x^3, xu, u^2 + (x^2+y^2)P)`.
///
/// `Sq^2 u` is forced to `y^2 u + (x+y) P` by `xu = 0` and restriction to `D8`.
pub fn semidihedral(order_exponent: u32) -> GradedRingF2 {
    sd_with_sq2u(order_exponent, "y^2*u + x*P + y*P")
}

pub(crate) fn sd_with_sq2u(order_exponent: u32, sq2u: &str) -> GradedRingF2 {
    RingBuilder::new(&format!("SD{}", 1u64 << order_exponent))
        .generator("x", 1)
        .generator("y", 1)
        .generator("u", 3)
        .generator("P", 4)
        .priority(&["u", "y", "P", "x"])
        .rule("x*y", "x^2")
        .rule("x^3", "0")
        .rule("x*u", "0")
        .rule("u^2", "x^2*P + y^2*P")
        .sq("u", 1, "0")
        .sq("u", 2, sq2u)
        .sq("P", 1, "0")
        .sq("P", 2, "u^2")
        .sq("P", 3, "0")
        .build()
        .expect("semidihedral preset")
}

/// Total space of the lens-space bundle over the circle used for dihedral
/// groups: `F2[s,t,x]/(s^2, t^2 + st, x^m)`, dimension `2m`.
pub fn dihedral_circle_bundle(m: u32) -> Result<GradedRingF2> {
    circle_bundle_ring(&format!("Mdih{}", 2 * m), m, "x*s")
}

/// Semidihedral analogue in dimension `8k`: `F2[s,t,z]/(s^2, t^2 + st, z^{4k})`.
pub fn sd16_circle_bundle(k: u32) -> Result<GradedRingF2> {
    circle_bundle_ring(&format!("Msd{}", 8 * k), 4 * k, "x*s")
}

pub(crate) fn circle_bundle_ring(name: &str, m: u32, sq1x: &str) -> Result<GradedRingF2> {
    RingBuilder::new(name)
        .generator("s", 1)
        .generator("t", 1)
        .generator("x", 2)
        .priority(&["t", "s", "x"])
        .rule("s^2", "0")
        .rule("t^2", "s*t")
        .rule(&format!("x^{m}"), "0")
        .sq("x", 1, sq1x)
        .manifold(2 * m)
        .build()
}

/// A degree-preserving algebra map between presented rings.
#[derive(Debug, Clone)]
pub struct RingMap {
    source: Arc<GradedRingF2>,
    target: Arc<GradedRingF2>,
    images: Vec<F2Poly>,
}

impl RingMap {
    pub fn new(source: Arc<GradedRingF2>, target: Arc<GradedRingF2>, images: Vec<F2Poly>) -> Result<Self> {
        if images.len() != source.nvars() {
            return Err(CharClassError::ImageCount { expected: source.nvars(), found: images.len() });
        }
        let mut reduced = Vec::with_capacity(images.len());
        for (g, p) in source.gens.iter().zip(&images) {
            let p = target.nf(p)?;
            if let Some(d) = target.degree(&p)? {
                if d != g.degree {
                    return Err(CharClassError::DegreeMismatch { expected: g.degree, found: d });
                }
            }
            reduced.push(p);
        }
        let map = RingMap { source, target, images: reduced };
        for rel in map.source.relations() {
            if map.source.mono_degree(rel.terms().next().unwrap()) > map.target.cap {
                continue;
            }
            if !map.apply(&rel)?.is_zero() {
                return Err(CharClassError::IllDefined(map.source.fmt_poly(&rel)));
            }
        }
        Ok(map)
    }

    /// Builds a map from generator-name images written in the target's syntax.
    pub fn from_strs(source: Arc<GradedRingF2>, target: Arc<GradedRingF2>, images: &[&str]) -> Result<Self> {
        let ps = images.iter().map(|s| target.parse(s)).collect::<Result<Vec<_>>>()?;
        Self::new(source, target, ps)
    }

    pub fn source(&self) -> &Arc<GradedRingF2> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GradedRingF2> {
        &self.target
    }

    pub fn images(&self) -> &[F2Poly] {
        &self.images
    }

    pub fn apply_mono(&self, m: &Mono) -> Result<F2Poly> {
        let mut acc = self.target.one();
        for (i, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let p = self.target.pow(&self.images[i], e)?;
            acc = self.target.mul(&acc, &p)?;
            if acc.is_zero() {
                break;
            }
        }
        Ok(acc)
    }

    pub fn apply(&self, p: &F2Poly) -> Result<F2Poly> {
        let mut out = F2Poly::zero();
        for m in p.terms() {
            out.add_assign(&self.apply_mono(m)?);
        }
        Ok(out)
    }

    /// `outer ∘ self`.
    pub fn then(&self, outer: &RingMap) -> Result<RingMap> {
        let images = self.images.iter().map(|p| outer.apply(p)).collect::<Result<Vec<_>>>()?;
        RingMap::new(self.source.clone(), outer.target.clone(), images)
    }

    /// Generators and operations where `Sq^i f(g) != f(Sq^i g)`.
    pub fn steenrod_defects(&self) -> Result<Vec<(String, u32)>> {
        let mut bad = Vec::new();
        for (gi, g) in self.source.gens.iter().enumerate() {
            for i in 1..g.degree {
                let lhs = self.target.sq(i, &self.images[gi])?;
                let rhs = self.apply(&self.source.sq_gen(gi, i)?)?;
                if lhs != rhs {
                    bad.push((g.name.clone(), i));
                }
            }
        }
        Ok(bad)
    }
}

/// F2 rank of a boolean matrix given by rows.
pub fn f2_rank_rows(rows: &[Vec<bool>]) -> usize {
    let width = rows.first().map_or(0, |r| r.len());
    let words = width.div_ceil(64);
    let mut packed: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| {
            let mut w = vec![0u64; words];
            for (i, &b) in r.iter().enumerate() {
                if b {
                    w[i / 64] |= 1 << (i % 64);
                }
            }
            w
        })
        .collect();
    rank_packed(&mut packed, width)
}

pub(crate) fn rank_packed(rows: &mut [Vec<u64>], width: usize) -> usize {
    let mut rank = 0;
    for col in 0..width {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] & bit != 0 {
                for (a, b) in row.iter_mut().zip(&pivot) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Solves a square F2 system given as (row, rhs); `None` if singular.
fn solve_f2(rows: &mut [(Vec<bool>, bool)], k: usize) -> Option<Vec<bool>> {
    for col in 0..k {
        let p = (col..rows.len()).find(|&r| rows[r].0[col])?;
        rows.swap(col, p);
        let pivot = rows[col].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != col && row.0[col] {
                for (a, b) in row.0.iter_mut().zip(&pivot.0) {
                    *a ^= b;
                }
                row.1 ^= pivot.1;
            }
        }
    }
    Some(rows.iter().map(|r| r.1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(r: &GradedRingF2, s: &str) -> F2Poly {
        r.parse(s).unwrap()
    }

    #[test]
    fn dihedral_and_semidihedral_reductions() {
        let d = dihedral(3);
        assert_eq!(d.nf(&p(&d, "b^3")).unwrap(), p(&d, "a^2*b"));
        let s = semidihedral(4);
        assert!(s.nf(&p(&s, "x*y^2")).unwrap().is_zero());
        for m in s.normal_basis(9).unwrap() {
            assert_eq!(s.nf(&F2Poly::from_mono(m.clone())).unwrap(), F2Poly::from_mono(m));
        }
    }

    #[test]
    fn presets_are_confluent_to_cap() {
        for r in [dihedral(3), semidihedral(4), bv(3), dihedral_circle_bundle(6).unwrap()] {
            r.check_confluence(DEFAULT_DEGREE_CAP).unwrap();
        }
    }

    #[test]
    fn steenrod_data_respects_relations() {
        assert!(dihedral(3).steenrod_defects().unwrap().is_empty());
        assert!(semidihedral(4).steenrod_defects().unwrap().is_empty());
        assert!(dihedral_circle_bundle(8).unwrap().steenrod_defects().unwrap().is_empty());
        // Dropping the x P term breaks x u = 0.
        let bad = sd_with_sq2u(4, "y^2*u + y*P");
        assert!(bad.steenrod_defects().unwrap().iter().any(|(lead, i)| lead == "x*u" && *i == 2));
    }

    #[test]
    fn rp_spin_pattern() {
        for n in 1..=33 {
            let r = rp(n, "x").unwrap();
            let expect = n == 1 || n % 4 == 3;
            assert_eq!(r.is_spin().unwrap(), expect, "RP{n}");
        }
        assert!(!rp(2, "x").unwrap().is_spin().unwrap());
    }

    #[test]
    fn rp_wu_matches_tangent() {
        for n in 1..=20 {
            let r = rp(n, "x").unwrap();
            let wu = r.wu_classes().unwrap();
            let (w1, w2) = r.tangent_sw().unwrap();
            assert_eq!(wu.w1, w1, "RP{n}");
            assert_eq!(wu.w2, w2, "RP{n}");
        }
        let wu = rp(3, "x").unwrap().wu_classes().unwrap();
        assert!(wu.v1.is_zero() && wu.v2.is_zero());
    }

    #[test]
    fn sq_on_projective_space_is_binomial() {
        let r = rp(40, "x").unwrap();
        for k in 0..20u32 {
            for i in 0..=k {
                let got = r.sq(i, &p(&r, &format!("x^{k}"))).unwrap();
                let odd = crate::grouprep::binomial(k, i).bit(0);
                let want = if odd { p(&r, &format!("x^{}", k + i)) } else { F2Poly::zero() };
                assert_eq!(got, r.nf(&want).unwrap());
            }
        }
    }

    #[test]
    fn sq1_delta_powers() {
        let d = dihedral(3);
        for k in 1..12 {
            let got = d.sq(1, &p(&d, &format!("d^{k}"))).unwrap();
            let want = if k % 2 == 1 { p(&d, &format!("a*d^{k}")) } else { F2Poly::zero() };
            assert_eq!(got, want, "k={k}");
        }
    }

    #[test]
    fn orientable_base_bundle() {
        // RP(2L + A) over RP^{4i+1}, A = 2 mod 4.
        for i in 1..=3u32 {
            for a in [2u32, 6, 10] {
                let base = rp(4 * i + 1, "x").unwrap();
                let x = base.gen("x").unwrap();
                let b = BundleDesc::lines(&base, &[x.clone(), x], a).unwrap();
                let m = projectivize(&base, &b, "t").unwrap();
                assert!(m.is_spin().unwrap());
                let rel = p(&m, &format!("t^{} + x^2*t^{}", a + 2, a));
                assert!(m.relations().contains(&rel));
                let (w1, w2) = projective_bundle_w12(&base, &b, &m).unwrap();
                assert_eq!(m.tangent_sw().unwrap(), (w1, w2));
            }
        }
    }

    #[test]
    fn trivial_bundle_over_point() {
        let pt = rp(0, "x").unwrap();
        let b = BundleDesc::lines(&pt, &[], 1).unwrap();
        let m = projectivize(&pt, &b, "t").unwrap();
        assert_eq!(m.manifold_dim(), Some(0));
        assert_eq!(m.tangent_w().unwrap(), &m.one());
    }

    #[test]
    fn iterated_bundle_presentation() {
        // X = RP(L + (4j+1)) over RP^{4i}; Y = RP(L1 L0 + L1 + L0 + A) over X.
        let (i, j, a) = (1u32, 1u32, 5u32);
        let base = rp(4 * i, "x").unwrap();
        let x = base.gen("x").unwrap();
        let xb = BundleDesc::lines(&base, &[x], 4 * j + 1).unwrap();
        let xr = projectivize(&base, &xb, "t").unwrap();
        let (x, t) = (xr.gen("x").unwrap(), xr.gen("t").unwrap());
        let yb = BundleDesc::lines(&xr, &[x.add(&t), t, x], a).unwrap();
        let y = projectivize(&xr, &yb, "u").unwrap();
        let want = [
            format!("x^{}", 4 * i + 1),
            format!("t^{} + x*t^{}", 4 * j + 2, 4 * j + 1),
            format!(
                "u^{a3} + x^2*u^{a1} + t^2*u^{a1} + x*t*u^{a1} + x^2*t*u^{a0} + x*t^2*u^{a0}",
                a3 = a + 3,
                a1 = a + 1,
                a0 = a
            ),
        ];
        let rels = y.relations();
        for w in &want {
            assert!(rels.contains(&p(&y, w)), "{w}");
        }
        assert!(y.is_spin().unwrap());
    }

    #[test]
    fn whitney_closed_form_agrees() {
        let base = rp(6, "x").unwrap();
        let x = base.gen("x").unwrap();
        for triv in 0..6 {
            let b = BundleDesc::lines(&base, &[x.clone(), x.clone(), x.clone()], triv).unwrap();
            let m = projectivize(&base, &b, "t").unwrap();
            assert_eq!(m.tangent_sw().unwrap(), projective_bundle_w12(&base, &b, &m).unwrap());
        }
    }

    #[test]
    fn tangent_split_bundle() {
        // N = RP(tau_2 + 2) over RP^2, M = RP(TN - 1) over N.
        let base = rp(2, "x").unwrap();
        let tau = BundleDesc::tangent_minus_trivial(&base, 0).unwrap();
        let pi = BundleDesc::from_total(&base, tau.total_w().clone(), 4).unwrap();
        let n = projectivize(&base, &pi, "t").unwrap();
        assert!(n.relations().contains(&p(&n, "t^4 + x*t^3 + x^2*t^2")));
        let tt = BundleDesc::tangent_minus_trivial(&n, 1).unwrap();
        let m = projectivize(&n, &tt, "u").unwrap();
        let derived = p(&m, "u^4 + x^2*u^2 + x*t*u^2 + x^2*t*u + x*t^2*u + x^2*t^2");
        assert!(m.relations().contains(&derived));
        assert!(m.is_spin().unwrap());
    }

    #[test]
    fn circle_bundle_wu_classes_vanish() {
        for m in (2..=12).step_by(2) {
            let r = dihedral_circle_bundle(m).unwrap();
            let wu = r.wu_classes().unwrap();
            assert!(wu.v1.is_zero() && wu.v2.is_zero(), "dim {}", 2 * m);
        }
        for k in 1..=3 {
            let r = sd16_circle_bundle(k).unwrap();
            let wu = r.wu_classes().unwrap();
            assert!(wu.v1.is_zero() && wu.v2.is_zero(), "dim {}", 8 * k);
        }
        // Prop-style Sq^2 check on the top-but-one power.
        let r = dihedral_circle_bundle(6).unwrap();
        assert!(r.sq(2, &p(&r, "x^5")).unwrap().is_zero());
    }

    #[test]
    fn alternative_sq1_gives_orientation_obstruction() {
        let r = circle_bundle_ring("alt", 4, "x*t + x*s").unwrap();
        let wu = r.wu_classes().unwrap();
        assert_eq!(wu.v1, p(&r, "t"));
    }

    #[test]
    fn sd16_classifying_map_choice() {
        let sd = Arc::new(semidihedral(4));
        for k in 1..=2 {
            let m = Arc::new(sd16_circle_bundle(k).unwrap());
            let good = RingMap::from_strs(sd.clone(), m.clone(), &["t", "s", "x*t + x*s", "x^2 + x*t^2"]).unwrap();
            assert!(good.steenrod_defects().unwrap().is_empty());
            let bad = RingMap::from_strs(sd.clone(), m.clone(), &["t", "s", "x*t + x*s", "x^2"]).unwrap();
            assert_eq!(bad.steenrod_defects().unwrap(), vec![("P".to_string(), 2)]);
        }
    }

    #[test]
    fn sd16_restriction_to_d8() {
        let sd = Arc::new(semidihedral(4));
        let d8 = Arc::new(dihedral(3));
        let f = RingMap::from_strs(sd.clone(), d8.clone(), &["0", "a", "a*d", "d^2"]).unwrap();
        assert!(f.steenrod_defects().unwrap().is_empty());
        let printed = Arc::new(sd_with_sq2u(4, "0"));
        let g = RingMap::from_strs(printed, d8, &["0", "a", "a*d", "d^2"]).unwrap();
        assert_eq!(g.steenrod_defects().unwrap(), vec![("u".to_string(), 2)]);
    }

    #[test]
    fn ill_defined_map_rejected() {
        let d8 = Arc::new(dihedral(3));
        let v2 = Arc::new(bv(2));
        assert!(RingMap::from_strs(d8.clone(), v2.clone(), &["x1", "0", "x2*x1 + x2^2"]).is_ok());
        assert!(matches!(
            RingMap::from_strs(d8, v2, &["x1", "x2", "x2^2"]),
            Err(CharClassError::IllDefined(_))
        ));
    }

    #[test]
    fn bad_rule_rejected() {
        let r = RingBuilder::new("bad").generator("x", 1).generator("y", 1).rule("y", "x").build();
        assert!(matches!(r, Err(CharClassError::NonDecreasingRule(_))));
        let r = RingBuilder::new("nc")
            .generator("x", 1)
            .generator("y", 1)
            .rule("x^2", "0")
            .rule("x*y", "y^2")
            .build();
        assert!(matches!(r, Err(CharClassError::NotConfluent(_))));
    }

    #[test]
    fn pairing_nonsingular_for_manifolds() {
        let rings = vec![
            rp(9, "x").unwrap(),
            dihedral_circle_bundle(5).unwrap(),
            sd16_circle_bundle(2).unwrap(),
            product(&rp(3, "x").unwrap(), &rp(5, "y").unwrap()).unwrap(),
        ];
        for r in rings {
            let n = r.manifold_dim().unwrap();
            for j in 0..=n {
                assert!(r.pairing_nondegenerate(j).unwrap(), "{} degree {j}", r.name());
            }
        }
    }

    fn small_poly(r: &GradedRingF2, d: u32, bits: u64) -> F2Poly {
        let ms = r.monomials(d);
        F2Poly::from_monos(ms.into_iter().enumerate().filter(|(i, _)| bits >> (i % 64) & 1 == 1).map(|(_, m)| m))
    }

    proptest! {
        #[test]
        fn sq0_is_identity(d in 0u32..10, bits: u64) {
            let r = dihedral(3);
            let q = r.nf(&small_poly(&r, d, bits)).unwrap();
            prop_assert_eq!(r.sq(0, &q).unwrap(), q);
        }

        #[test]
        fn cartan_is_associative(d1 in 1u32..4, d2 in 1u32..4, d3 in 1u32..4, b1: u64, b2: u64, b3: u64, i in 0u32..6) {
            let r = semidihedral(4);
            let (p1, p2, p3) = (small_poly(&r, d1, b1), small_poly(&r, d2, b2), small_poly(&r, d3, b3));
            let left = r.mul(&r.mul(&p1, &p2).unwrap(), &p3).unwrap();
            let right = r.mul(&p1, &r.mul(&p2, &p3).unwrap()).unwrap();
            prop_assert_eq!(r.sq(i, &left).unwrap(), r.sq(i, &right).unwrap());
        }

        #[test]
        fn sq_cartan_formula(d1 in 1u32..5, d2 in 1u32..5, b1: u64, b2: u64, k in 0u32..8) {
            let r = dihedral(3);
            let (a, b) = (small_poly(&r, d1, b1), small_poly(&r, d2, b2));
            let lhs = r.sq(k, &r.mul(&a, &b).unwrap()).unwrap();
            let mut rhs = F2Poly::zero();
            for i in 0..=k {
                rhs.add_assign(&r.mul(&r.sq(i, &a).unwrap(), &r.sq(k - i, &b).unwrap()).unwrap());
            }
            prop_assert_eq!(lhs, rhs);
        }
    }
}
