//! Named verification campaigns.
//!
//! Each campaign builds the generating manifolds of a spanning argument, computes
//! the subgroup their eta invariants span (or the rank of their homology images),
//! and compares against a [`Reference`]. The reference is a trait so tests can
//! inject corrupted tables.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eta::{eta, eta_raw, eta_vector, suggest_modulus, EtaError, ManifoldExpr};
use crate::exact::{pow2, BigRat};
use crate::grouprep::{fs_indicator, parse_vchar, preset_vchar, Elem, Family, Group, GroupError, Inclusion, VirtualChar};
use crate::homcount::{self, HomError};
use crate::refdata::{self, AbelianShape, RefError};
use crate::torsion::{det_order_bound, element_order, span_order, Modulus, TorsionError, TorsionVector};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown campaign `{0}`")]
    UnknownCampaign(String),
    #[error("bad parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Eta(#[from] EtaError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Torsion(#[from] TorsionError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Reference(#[from] RefError),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    ExactOrder,
    ExactShape,
    ExactValue,
    Rank,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub input: String,
    pub kind: Comparison,
    pub computed: String,
    pub expected: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub campaign: String,
    pub cases: Vec<Case>,
    pub pass: bool,
}

impl Report {
    pub fn new(campaign: impl Into<String>, cases: Vec<Case>) -> Self {
        let pass = cases.iter().all(|c| c.pass);
        Report { campaign: campaign.into(), cases, pass }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter().filter(|c| !c.pass)
    }
}

/// Parameter ranges. Span campaigns read `m` (degrees `8m+3`, `8m+7`); homology
/// campaigns read `n_max`; dihedral ones read `levels` (the `N` of `D_{2^{N+2}}`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub m_min: u32,
    pub m_max: u32,
    pub n_max: u32,
    pub levels: Vec<u32>,
}

impl Params {
    pub fn small() -> Self {
        Params { m_min: 0, m_max: 1, n_max: 16, levels: vec![1, 2] }
    }

    pub fn full() -> Self {
        Params { m_min: 0, m_max: 2, n_max: 26, levels: vec![1, 2, 3] }
    }

    pub fn with_m(mut self, lo: u32, hi: u32) -> Self {
        self.m_min = lo;
        self.m_max = hi;
        self
    }

    pub fn with_n_max(mut self, n: u32) -> Self {
        self.n_max = n;
        self
    }

    pub fn with_levels(mut self, levels: Vec<u32>) -> Self {
        self.levels = levels;
        self
    }

    fn ms(&self) -> impl Iterator<Item = u32> {
        self.m_min..=self.m_max
    }

    fn odd_degrees(&self) -> Vec<u32> {
        self.ms().flat_map(|m| [8 * m + 3, 8 * m + 7]).collect()
    }

    fn check(&self) -> Result<()> {
        if self.m_min > self.m_max {
            return Err(VerifyError::Params(format!("empty range {}..{}", self.m_min, self.m_max)));
        }
        if self.levels.iter().any(|&n| n == 0 || n > 4) {
            return Err(VerifyError::Params("dihedral levels must lie in 1..=4".into()));
        }
        Ok(())
    }
}

impl Default for Params {
    fn default() -> Self {
        Self::small()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Small,
    Full,
}

impl Scale {
    pub fn params(self) -> Params {
        match self {
            Scale::Small => Params::small(),
            Scale::Full => Params::full(),
        }
    }
}

/// Published targets consulted by the campaigns.
pub trait Reference: Sync {
    fn ker_ap(&self, family: Family, n: u32) -> std::result::Result<AbelianShape, RefError> {
        refdata::ker_ap(family, n)
    }

    fn ko(&self, family: Family, n: u32) -> std::result::Result<AbelianShape, RefError> {
        refdata::ko_table(family, n)
    }

    fn vn_periodic(&self, rank: u32, n: u32) -> std::result::Result<AbelianShape, RefError> {
        refdata::vn_periodic(rank, n)
    }

    fn h_dim(&self, n: u32) -> std::result::Result<u64, RefError> {
        refdata::h_dim(n)
    }

    fn v2_rank(&self, n: u32) -> std::result::Result<u64, RefError> {
        refdata::v2_two_column_rank(n)
    }
}

/// The tables in [`crate::refdata`].
#[derive(Clone, Copy, Debug, Default)]
pub struct Published;

impl Reference for Published {}

pub const CATALOGUE: &[&str] = &[
    "c4_span",
    "d8_span",
    "dihedral_homology",
    "extension_c4",
    "q8_span",
    "sd16_homology",
    "sd16_span",
    "v2_even",
    "v2_span",
    "v3_even",
    "v3_odd",
    "vn_span",
];

pub fn run(name: &str, params: &Params) -> Result<Report> {
    run_with(name, params, &Published)
}

pub fn run_with(name: &str, params: &Params, reference: &dyn Reference) -> Result<Report> {
    params.check()?;
    let cases = match name {
        "c4_span" => c4_span(params, reference)?,
        "q8_span" => q8_span(params, reference)?,
        "v2_span" => v2_span(params, reference)?,
        "vn_span" => vn_span(params, reference)?,
        "d8_span" => d8_span(params, reference)?,
        "sd16_span" => sd16_span(params, reference)?,
        "extension_c4" => extension_c4(params, reference)?,
        "v2_even" => homology_against(params, reference, "v2_even")?,
        "v3_even" => homology_against(params, reference, "v3_even")?,
        "v3_odd" => homology_against(params, reference, "v3_odd")?,
        "dihedral_homology" => dihedral_homology(params)?,
        "sd16_homology" => sd16_homology(params)?,
        other => return Err(VerifyError::UnknownCampaign(other.to_string())),
    };
    Ok(Report::new(name, cases))
}

/// Runs the named campaigns in parallel; reports come back in name order.
pub fn run_catalogue(names: &[&str], params: &Params, reference: &dyn Reference) -> Result<Vec<Report>> {
    let mut sorted: Vec<&str> = names.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let reports: Vec<Result<Report>> = sorted.par_iter().map(|n| run_with(n, params, reference)).collect();
    reports.into_iter().collect()
}

pub fn run_all(scale: Scale) -> Result<Vec<Report>> {
    run_catalogue(CATALOGUE, &scale.params(), &Published)
}

/// One case per campaign; passes iff every campaign passes (vacuously when empty).
pub fn aggregate(reports: &[Report]) -> Report {
    let cases = reports
        .iter()
        .map(|r| {
            let ok = r.cases.iter().filter(|c| c.pass).count();
            Case {
                input: r.campaign.clone(),
                kind: Comparison::Rank,
                computed: format!("{ok}/{} cases pass", r.cases.len()),
                expected: format!("{n}/{n}", n = r.cases.len()),
                pass: r.pass,
                note: r.failures().map(|c| c.input.clone()).collect::<Vec<_>>().join("; "),
            }
        })
        .collect();
    Report::new("all", cases)
}

fn shape_of(divisors: &[BigUint]) -> AbelianShape {
    AbelianShape::cyclic(divisors.iter().map(|d| (d.bits() - 1) as u32))
}

fn log2_order(x: &BigUint) -> u64 {
    x.bits().saturating_sub(1)
}

fn order_case(input: String, computed: &BigUint, expected: &BigUint) -> Case {
    Case {
        input,
        kind: Comparison::ExactOrder,
        computed: format!("2^{}", log2_order(computed)),
        expected: format!("2^{}", log2_order(expected)),
        pass: computed == expected,
        note: String::new(),
    }
}

fn value_case(input: String, computed: &BigRat, expected: &BigRat) -> Case {
    Case {
        input,
        kind: Comparison::ExactValue,
        computed: computed.to_string(),
        expected: expected.to_string(),
        pass: computed == expected,
        note: String::new(),
    }
}

/// Compares a spanned subgroup with a table entry: the full shape when the entry
/// is determined, its order otherwise.
fn span_case(input: String, vs: &[TorsionVector], expected: &AbelianShape) -> Result<Case> {
    let span = span_order(vs)?;
    let computed = shape_of(&span.elementary_divisors);
    let (kind, pass) = if expected.is_determined() {
        (Comparison::ExactShape, computed.cyclic_exponents == expected.cyclic_exponents)
    } else {
        (Comparison::ExactOrder, span.order == expected.torsion_order())
    };
    Ok(Case {
        input,
        kind,
        computed: computed.to_string(),
        expected: expected.to_string(),
        pass,
        note: format!("{} generators, order 2^{}", vs.len(), log2_order(&span.order)),
    })
}

fn vc(g: &Arc<Group>, s: &str) -> Result<VirtualChar> {
    Ok(parse_vchar(Arc::clone(g), s)?)
}

/// `ρ − dim ρ` for every non-trivial irreducible, with the modulus its reality type forces.
pub fn full_coordinates(g: &Arc<Group>, n: u32) -> Result<Vec<(VirtualChar, Modulus)>> {
    let mut out = Vec::new();
    for c in g.char_table().iter().filter(|c| c.name != "rho0") {
        let r = vc(g, &format!("{}-{}", c.name, c.degree()))?;
        let m = match (n % 8, fs_indicator(g, c)) {
            (3, 1) | (7, -1) => Modulus::Two,
            _ => Modulus::One,
        };
        out.push((r, m));
    }
    Ok(out)
}

fn vectors(gens: &[ManifoldExpr], coords: &[(VirtualChar, Modulus)]) -> Result<Vec<TorsionVector>> {
    gens.iter().map(|m| Ok(eta_vector(m, coords)?)).collect()
}

/// `(1, …, 1, last)` of length `2h`.
fn unit_weights(h: usize, last: i64) -> Vec<i64> {
    let mut w = vec![1; 2 * h];
    w[2 * h - 1] = last;
    w
}

/// Unit weights with at most two entries replaced by other odd residues.
fn sparse_weights(l: u32, h: usize) -> Vec<Vec<i64>> {
    let odds: Vec<i64> = (1..l as i64 / 2).map(|x| 2 * x + 1).collect();
    let mut out = vec![vec![1; 2 * h]];
    for &a in &odds {
        let w = unit_weights(h, a);
        out.push(w.clone());
        for &b in odds.iter().filter(|&&b| b <= a) {
            let mut w2 = w.clone();
            w2[2 * h - 2] = b;
            out.push(w2);
        }
    }
    out
}

fn half_dim(n: u32) -> usize {
    ((n + 1) / 4) as usize
}

fn neg_half_pow(k: u32) -> BigRat {
    let v = pow2(-i64::from(k));
    if k % 2 == 1 {
        -v
    } else {
        v
    }
}

fn c4_span(p: &Params, r: &dyn Reference) -> Result<Vec<Case>> {
    let g = Group::cyclic(4);
    let one_minus_1 = vc(&g, "rho0-rho1")?;
    let one_minus_2 = vc(&g, "rho0-rho2")?;
    let mut cases = Vec::new();
    for n in p.odd_degrees() {
        let k = (n + 1) / 4;
        let h = k as usize;
        let a = ManifoldExpr::lens(4, &unit_weights(h, 1));
        let b = ManifoldExpr::lens(4, &unit_weights(h, 3));

        let tail = pow2(-i64::from(2 * k + 1));
        let tail = if k % 2 == 1 { -tail } else { tail };
        let base = neg_half_pow(k) / BigRat::from_integer(2.into());
        let forms = [
            (&a, &one_minus_1, "L(1..1,1)", "1-rho1", &base + &tail),
            (&b, &one_minus_1, "L(1..1,3)", "1-rho1", &base - &tail),
            (&a, &one_minus_2, "L(1..1,1)", "1-rho2", neg_half_pow(k)),
            (&b, &one_minus_2, "L(1..1,3)", "1-rho2", neg_half_pow(k)),
        ];
        for (m, rho, lname, rname, want) in forms {
            let got = eta_raw(m, rho)?;
            cases.push(value_case(format!("n={n}: eta({lname})({rname})"), &got, &want));
        }

        let square: Vec<TorsionVector> = [&a, &b]
            .iter()
            .map(|m| {
                Ok(TorsionVector::new([
                    (eta_raw(m, &one_minus_1)?, Modulus::One),
                    (eta_raw(m, &one_minus_2)?, Modulus::One),
                ]))
            })
            .collect::<Result<_>>()?;
        cases.push(order_case(
            format!("n={n}: determinant bound"),
            &det_order_bound(&square)?,
            &(BigUint::one() << (3 * k)),
        ));

        let coords = [
            (one_minus_1.clone(), Modulus::One),
            (one_minus_2.clone(), suggest_modulus(n, &one_minus_2).modulus),
        ];
        let vs = vectors(&[a, b], &coords)?;
        cases.push(span_case(format!("n={n}: span"), &vs, &r.ker_ap(Family::Cyclic(4), n)?)?);

        let bundle = ManifoldExpr::lens_bundle(4, &vec![1; 2 * h], &unit_c1(2 * h));
        let e = eta(&bundle, &one_minus_1, Modulus::One)?;
        let bundle_dim = 4 * k + 1;
        let want = base.clone();
        cases.push(value_case(format!("n={bundle_dim}: eta(bundle)(1-rho1)"), &e.raw, &want));
        cases.push(order_case(
            format!("n={bundle_dim}: bundle order"),
            &e.order,
            &r.ker_ap(Family::Cyclic(4), bundle_dim)?.torsion_order(),
        ));
    }
    Ok(cases)
}

fn unit_c1(len: usize) -> Vec<i64> {
    let mut c = vec![0; len];
    c[0] = 2;
    c
}

/// `[A] ⊕ [|G|/A]` from the largest generator order, after checking `A·G = 0`.
fn rank_two_extension(vs: &[TorsionVector]) -> Result<(AbelianShape, bool)> {
    let span = span_order(vs)?;
    let a = vs.iter().map(element_order).max().unwrap_or_else(BigUint::one);
    let exponent_ok = span.elementary_divisors.iter().all(|d| (&a % d).is_zero());
    let rest = &span.order / &a;
    let shape = AbelianShape::cyclic([log2_order(&a) as u32, log2_order(&rest) as u32]);
    Ok((shape, exponent_ok && span.elementary_divisors.len() <= 2))
}

fn extension_c4(p: &Params, r: &dyn Reference) -> Result<Vec<Case>> {
    let g = Group::cyclic(4);
    let mut cases = Vec::new();
    for n in p.odd_degrees() {
        let h = half_dim(n);
        let gens = [ManifoldExpr::lens(4, &unit_weights(h, 1)), ManifoldExpr::lens(4, &unit_weights(h, 3))];
        let coords = full_coordinates(&g, n)?;
        let (shape, ok) = rank_two_extension(&vectors(&gens, &coords)?)?;
        let expected = r.ko(Family::Cyclic(4), n)?;
        cases.push(Case {
            input: format!("n={n}"),
            kind: Comparison::ExactShape,
            computed: shape.to_string(),
            expected: expected.to_string(),
            pass: ok && shape == expected,
            note: if ok { String::new() } else { "largest order does not annihilate the span".into() },
        });
    }
    Ok(cases)
}

fn q8_lens_quotients(target: Option<&Inclusion>, n: u32) -> Result<Vec<ManifoldExpr>> {
    let q8 = Group::q8();
    let h = half_dim(n);
    let mut out = Vec::new();
    for e in [Elem::new(0, 1), Elem::new(1, 0), Elem::new(1, 1)] {
        let mut inc = Inclusion::cyclic_into(Arc::clone(&q8), 4, e)?;
        if let Some(t) = target {
            inc = inc.compose(t)?;
        }
        for last in [1, 3] {
            out.push(ManifoldExpr::lens(4, &unit_weights(h, last)).included(inc.clone()));
        }
    }
    Ok(out)
}

/// Quaternionic space forms in degree `n` and `n - 8` (times a Bott manifold).
fn q8_forms(n: u32) -> Vec<ManifoldExpr> {
    let copies = (n + 1) / 4;
    let mut out = vec![ManifoldExpr::q8_form(copies)];
    if copies > 2 {
        out.push(ManifoldExpr::q8_form(copies - 2).times_bott(1));
    }
    out
}

/// Every quaternionic space form of dimension `4c - 1 ≤ n`, brought up to degree
/// `n` by Bott manifolds and at most one Kummer surface.
fn q8_tower(n: u32) -> Vec<ManifoldExpr> {
    let copies = (n + 1) / 4;
    (1..=copies)
        .map(|c| {
            let gap = copies - c;
            let form = ManifoldExpr::q8_form(c);
            if gap % 2 == 1 {
                form.times_kummer().times_bott(gap / 2)
            } else {
                form.times_bott(gap / 2)
            }
        })
        .collect()
}

/// `(2 - τ)^a` is real for even `a` and quaternionic for odd `a`.
fn tau_power_modulus(n: u32, a: u32) -> Modulus {
    match (n % 8, a % 2) {
        (3, 0) | (7, 1) => Modulus::Two,
        _ => Modulus::One,
    }
}

fn q8_span(p: &Params, r: &dyn Reference) -> Result<Vec<Case>> {
    let g = Group::q8();
    let mut cases = Vec::new();
    for n in p.odd_degrees() {
        let k = (n - 3) / 4;
        let depth = (n + 1) / 4;
        let powers: Vec<VirtualChar> = (1..=depth)
            .map(|a| preset_vchar(Arc::clone(&g), "two_minus_tau", i64::from(a)))
            .collect::<std::result::Result<_, _>>()?;
        let form = ManifoldExpr::q8_form(k + 1);
        let want = pow2(-i64::from(2 * k + 3)) + pow2(-i64::from(k + 2)) * BigRat::from_integer(3.into());
        cases.push(value_case(format!("n={n}: eta(quaternionic form)(2-tau)"), &eta_raw(&form, &powers[0])?, &want));

        let quotients = q8_lens_quotients(None, n)?;
        let diff = ManifoldExpr::sum(vec![(1, quotients[0].clone()), (-1, quotients[2].clone())]);
        for (a, rho) in powers.iter().enumerate() {
            cases.push(value_case(
                format!("n={n}: eta(M1-M2)((2-tau)^{})", a + 1),
                &eta_raw(&diff, rho)?,
                &BigRat::zero(),
            ));
        }

        let pair = q8_forms(n);
        if pair.len() == 2 && depth >= 2 {
            let square: Vec<TorsionVector> = pair
                .iter()
                .map(|m| {
                    let coords = (1..=2)
                        .map(|a| Ok((eta_raw(m, &powers[a as usize - 1])?, tau_power_modulus(n, a))))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(TorsionVector::new(coords))
                })
                .collect::<Result<_>>()?;
            let m = n / 8;
            let e = if n % 8 == 3 { 6 * m + 3 } else { 6 * m + 6 };
            cases.push(order_case(
                format!("n={n}: determinant of quaternionic forms"),
                &det_order_bound(&square)?,
                &(BigUint::one() << e),
            ));
        }

        let mut coords = Vec::new();
        for name in ["eps2", "eps3"] {
            let rho = preset_vchar(Arc::clone(&g), name, 0)?;
            let m = suggest_modulus(n, &rho).modulus;
            coords.push((rho, m));
        }
        for (a, rho) in (1..).zip(&powers) {
            coords.push((rho.clone(), tau_power_modulus(n, a)));
        }
        let mut gens = quotients;
        gens.extend(q8_tower(n));
        let vs = vectors(&gens, &coords)?;
        cases.push(span_case(format!("n={n}: span"), &vs, &r.ker_ap(Family::Quaternion8, n)?)?);
    }
    Ok(cases)
}

fn rp_images(g: &Arc<Group>, n: u32, elems: &[Elem]) -> Result<Vec<ManifoldExpr>> {
    elems
        .iter()
        .map(|&e| Ok(ManifoldExpr::rp(n).included(Inclusion::cyclic_into(Arc::clone(g), 2, e)?)))
        .collect()
}

fn all_rp(rank: u32, n: u32) -> Result<(Arc<Group>, Vec<ManifoldExpr>)> {
    let g = Group::elementary(rank);
    let elems: Vec<Elem> = (1..(1u32 << rank)).map(|mask| Elem::new(0, mask)).collect();
    let gens = rp_images(&g, n, &elems)?;
    Ok((g, gens))
}

fn v2_span(p: &Params, r: &dyn Reference) -> Result<Vec<Case>> {
    let mut cases = Vec::new();
    for n in p.odd_degrees() {
        let (g, gens) = all_rp(2, n)?;
        let vs = vectors(&gens, &full_coordinates(&g, n)?)?;
        cases.push(span_case(format!("n={n}"), &vs, &r.ker_ap(Family::ElementaryAbelian(2), n)?)?);
    }
    Ok(cases)
}

fn vn_span(p: &Params, r: &dyn Reference) -> Result<Vec<Case>> {
    let mut cases = Vec::new();
    for rank in [3u32, 4] {
        for n in p.odd_degrees() {
            let (g, gens) = all_rp(rank, n)?;
            let vs = vectors(&gens, &full_coordinates(&g, n)?)?;
            cases.push(span_case(format!("rank={rank}, n={n}"), &vs, &r.vn_periodic(rank, n)?)?);
        }
    }
    Ok(cases)
}

fn d8_span(p: &Params, r: &dyn Reference) -> Result<Vec<Case>> {
    let g = Group::dihedral(1);
    let mut cases = Vec::new();
    for n in p.odd_degrees() {
        let h = half_dim(n);
        let rotations = Inclusion::cyclic_into(Arc::clone(&g), 4, Elem::new(0, 1))?;
        let mut gens: Vec<ManifoldExpr> = [1, 3]
            .iter()
            .map(|&last| ManifoldExpr::lens(4, &unit_weights(h, last)).included(rotations.clone()))
            .collect();
        gens.extend(rp_images(&g, n, &[Elem::new(1, 0), Elem::new(1, 1)])?);
        let vs = vectors(&gens, &full_coordinates(&g, n)?)?;
        cases.push(span_case(format!("n={n}: span"), &vs, &r.ker_ap(Family::Dihedral(1), n)?)?);
    }
    let j_max = (p.m_max + 1).min(3);
    for &level in &p.levels {
        let l = 1u32 << (level + 1);
        let c = Group::cyclic(l);
        for j in 1..=j_max as usize {
            let want = BigUint::one() << (level as usize + 2 * j);
            let mut bad = Vec::new();
            let mut total = 0;
            for w in sparse_weights(l, j) {
                let lens = ManifoldExpr::lens(l, &w);
                for idx in (1..l).step_by(2) {
                    total += 1;
                    let e = eta(&lens, &vc(&c, &format!("rho{idx}-rho0"))?, Modulus::One)?;
                    if e.order != want {
                        bad.push(format!("{w:?}/rho{idx}: 2^{}", log2_order(&e.order)));
                    }
                }
            }
            cases.push(Case {
                input: format!("C{l}, n={}: odd-character orders", 4 * j - 1),
                kind: Comparison::ExactOrder,
                computed: if bad.is_empty() { format!("2^{} in all {total} cases", log2_order(&want)) } else { bad.join(", ") },
                expected: format!("2^{}", log2_order(&want)),
                pass: bad.is_empty(),
                note: String::new(),
            });
        }
        let coords = [(vc(&c, "rho0-rho1")?, Modulus::One), (vc(&c, "rho0-rho2")?, Modulus::One)];
        let gens = [ManifoldExpr::lens(l, &[1, 1, 1, 1]), ManifoldExpr::lens(l, &[1, 1, 1, 3])];
        let (shape, ok) = rank_two_extension(&vectors(&gens, &coords)?)?;
        let closed = AbelianShape::cyclic([level + 4, level]);
        let table = r.ko(Family::Cyclic(l), 7)?;
        let order_ok = shape.torsion_order() == table.torsion_order();
        let shape_ok = if table.is_determined() { shape == table } else { shape == closed };
        cases.push(Case {
            input: format!("C{l}, n=7: extension"),
            kind: Comparison::ExactShape,
            computed: shape.to_string(),
            expected: if table.is_determined() { table.to_string() } else { format!("{closed} (order {table})") },
            pass: ok && order_ok && shape_ok,
            note: String::new(),
        });
    }
    Ok(cases)
}

fn sd16_span(p: &Params, r: &dyn Reference) -> Result<Vec<Case>> {
    let g = Group::sd16();
    let q = Inclusion::q8_into_sd16();
    let mut cases = Vec::new();
    for n in p.odd_degrees() {
        let h = half_dim(n);
        let rotations = Inclusion::cyclic_into(Arc::clone(&g), 8, Elem::new(0, 1))?;
        let mut gens: Vec<ManifoldExpr> = sparse_weights(8, h)
            .iter()
            .map(|w| ManifoldExpr::lens(8, w).included(rotations.clone()))
            .collect();
        gens.extend(rp_images(&g, n, &[Elem::new(1, 0)])?);
        gens.extend(q8_forms(n).into_iter().map(|m| m.included(q.clone())));
        gens.extend(q8_lens_quotients(Some(&q), n)?);
        let vs = vectors(&gens, &full_coordinates(&g, n)?)?;
        cases.push(span_case(format!("n={n}"), &vs, &r.ker_ap(Family::SemiDihedral16, n)?)?);
    }
    Ok(cases)
}

fn even_degrees(n_max: u32) -> std::ops::RangeInclusive<u32> {
    2..=n_max
}

fn homology_against(p: &Params, r: &dyn Reference, claim: &str) -> Result<Vec<Case>> {
    let report = homcount::count_check(claim, (2..=p.n_max).filter(|&n| claim_degree(claim, n)), 1)?;
    let mut cases = Vec::new();
    for e in report.entries {
        let reference = if claim == "v2_even" { r.v2_rank(e.n)? } else { r.h_dim(e.n)? };
        cases.push(Case {
            input: format!("n={}", e.n),
            kind: Comparison::Rank,
            computed: e.computed.to_string(),
            expected: reference.to_string(),
            pass: e.pass && e.computed == reference,
            note: e.note,
        });
    }
    Ok(cases)
}

fn claim_degree(claim: &str, n: u32) -> bool {
    match claim {
        "v3_odd" => n % 2 == 1,
        _ => n.is_multiple_of(2),
    }
}

fn from_counts(prefix: &str, report: homcount::CountReport) -> Vec<Case> {
    report
        .entries
        .into_iter()
        .map(|e| Case {
            input: format!("{prefix}n={}", e.n),
            kind: Comparison::Rank,
            computed: e.computed.to_string(),
            expected: e.expected.to_string(),
            pass: e.pass,
            note: e.note,
        })
        .collect()
}

fn dihedral_homology(p: &Params) -> Result<Vec<Case>> {
    let mut cases = Vec::new();
    for &level in &p.levels {
        let report = homcount::count_check("dihedral", even_degrees(p.n_max), level)?;
        cases.extend(from_counts(&format!("N={level}, "), report));
    }
    Ok(cases)
}

fn sd16_homology(p: &Params) -> Result<Vec<Case>> {
    let mut cases = from_counts("", homcount::count_check("sd16", even_degrees(p.n_max), 1)?);
    let mono = homcount::sd16_monomorphism_check(p.n_max)?;
    cases.push(Case {
        input: format!("restriction to D8, n<={}", p.n_max),
        kind: Comparison::Rank,
        computed: format!("{} checks, injective={}", mono.checks.len(), mono.injective),
        expected: "all classes map as printed, injective".into(),
        pass: mono.pass,
        note: mono.checks.iter().filter(|c| !c.pass).map(|c| format!("{} in degree {}", c.source, c.degree)).collect::<Vec<_>>().join("; "),
    });
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Corrupted {
        campaign: &'static str,
    }

    impl Reference for Corrupted {
        fn ker_ap(&self, family: Family, n: u32) -> std::result::Result<AbelianShape, RefError> {
            let real = refdata::ker_ap(family, n)?;
            Ok(match (self.campaign, family, n) {
                ("sd16_span", Family::SemiDihedral16, 3) | ("c4_span", Family::Cyclic(4), 11) => real.sum(AbelianShape::elementary(1)),
                _ => real,
            })
        }

        fn vn_periodic(&self, rank: u32, n: u32) -> std::result::Result<AbelianShape, RefError> {
            let real = refdata::vn_periodic(rank, n)?;
            Ok(if self.campaign == "vn_span" && rank == 4 && n == 7 { AbelianShape::cyclic([1]).sum(real) } else { real })
        }

        fn h_dim(&self, n: u32) -> std::result::Result<u64, RefError> {
            let real = refdata::h_dim(n)?;
            Ok(if self.campaign == "v3_even" && n == 10 { real + 1 } else { real })
        }
    }

    fn quick() -> Params {
        Params::small().with_n_max(12).with_levels(vec![1])
    }

    #[test]
    fn c4_span_small() {
        let r = run("c4_span", &Params::small().with_m(0, 2)).unwrap();
        assert!(r.pass, "{:#?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.cases.len(), 3 * 2 * 8);
    }

    #[test]
    fn sd16_and_q8_spans() {
        for name in ["sd16_span", "q8_span", "v2_span", "vn_span", "extension_c4"] {
            let r = run(name, &Params::small()).unwrap();
            assert!(r.pass, "{name}: {:#?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn d8_span_falls_short_only_in_degrees_seven_mod_eight() {
        let r = run("d8_span", &Params::small().with_m(0, 2).with_levels(vec![1, 2, 3])).unwrap();
        let failed: Vec<&str> = r.failures().map(|c| c.input.as_str()).collect();
        assert_eq!(failed, ["n=7: span", "n=15: span", "n=23: span"]);
        for c in r.failures() {
            assert_eq!(c.note.split("order 2^").nth(1).unwrap().parse::<u32>().unwrap() + 1, {
                let n: u32 = c.input[2..].split(':').next().unwrap().parse().unwrap();
                14 * (n / 8) + 13
            });
        }
    }

    #[test]
    fn run_all_small() {
        let reports = run_catalogue(CATALOGUE, &quick(), &Published).unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.campaign.as_str()).collect();
        assert_eq!(names, CATALOGUE);
        let failing: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.campaign.as_str()).collect();
        assert_eq!(failing, ["d8_span"]);
        let again = run_catalogue(CATALOGUE, &quick(), &Published).unwrap();
        assert_eq!(reports, again);
        let agg = aggregate(&reports);
        assert!(!agg.pass);
        assert_eq!(agg.cases.len(), CATALOGUE.len());
    }

    #[test]
    fn empty_catalogue_passes() {
        let reports = run_catalogue(&[], &quick(), &Published).unwrap();
        assert!(reports.is_empty());
        assert!(aggregate(&reports).pass);
    }

    #[test]
    fn corrupting_one_entry_flips_one_campaign() {
        let names = ["c4_span", "sd16_span", "vn_span", "v3_even", "q8_span", "v2_span"];
        let clean = run_catalogue(&names, &quick(), &Published).unwrap();
        assert!(clean.iter().all(|r| r.pass));
        for target in ["sd16_span", "c4_span", "vn_span", "v3_even"] {
            let reports = run_catalogue(&names, &quick(), &Corrupted { campaign: target }).unwrap();
            let failing: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.campaign.as_str()).collect();
            assert_eq!(failing, [target]);
        }
    }

    #[test]
    fn unknown_campaign_and_bad_ranges() {
        assert!(matches!(run("nope", &quick()), Err(VerifyError::UnknownCampaign(_))));
        assert!(matches!(run("c4_span", &quick().with_m(2, 1)), Err(VerifyError::Params(_))));
    }

    #[test]
    fn homology_campaigns() {
        for name in ["v2_even", "v3_even", "v3_odd", "dihedral_homology", "sd16_homology"] {
            let r = run(name, &quick()).unwrap();
            assert!(r.pass, "{name}: {:#?}", r.failures().collect::<Vec<_>>());
            assert!(!r.cases.is_empty());
        }
    }

    #[test]
    fn sparse_weight_family() {
        let ws = sparse_weights(8, 2);
        assert_eq!(ws.len(), 1 + 3 + 6);
        assert!(ws.iter().all(|w| w.len() == 4 && w.iter().all(|x| x % 2 == 1)));
        assert_eq!(sparse_weights(2, 3), vec![vec![1; 6]]);
    }
}
