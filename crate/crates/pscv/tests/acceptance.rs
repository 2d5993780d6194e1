use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use pscv::charclass::{self, BundleDesc, GradedRingF2, RingMap};
use pscv::eta::{eta, eta_float, eta_raw, ManifoldExpr};
use pscv::exact::{pow2, rat};
use pscv::grouprep::{char_table_det, parse_vchar, preset_vchar, vn_exponent_identity, Elem, Family, Group, Inclusion};
use pscv::homcount;
use pscv::torsion::{rational_det, snf, span_order, Modulus, TorsionVector};
use pscv::verify::{self, Params, Report};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Check {
    label: String,
    pass: bool,
    note: String,
}

fn check(label: impl Into<String>, pass: bool) -> Check {
    Check { label: label.into(), pass, note: String::new() }
}

fn noted(label: impl Into<String>, pass: bool, note: impl Into<String>) -> Check {
    Check { label: label.into(), pass, note: note.into() }
}

struct Criterion {
    number: u32,
    title: &'static str,
    checks: Vec<Check>,
}

impl Criterion {
    fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

fn vc(g: &Arc<Group>, s: &str) -> pscv::grouprep::VirtualChar {
    parse_vchar(Arc::clone(g), s).unwrap()
}

fn two_pow(e: u64) -> BigUint {
    BigUint::one() << e
}

fn log2(x: &BigUint) -> u64 {
    x.bits() - 1
}

fn neg_half_pow(k: u32) -> BigRational {
    let v = pow2(-i64::from(k));
    if k % 2 == 1 {
        -v
    } else {
        v
    }
}

fn campaign(name: &str, params: &Params) -> Report {
    verify::run(name, params).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Order exponent recorded on a span case as "…, order 2^e".
fn span_exponent(report: &Report, input: &str) -> u64 {
    let case = report.cases.iter().find(|c| c.input == input).unwrap_or_else(|| panic!("{}: no case {input}", report.campaign));
    let tail = case.note.rsplit("order 2^").next().unwrap();
    tail.parse().unwrap()
}

fn campaign_checks(report: &Report) -> Vec<Check> {
    report
        .cases
        .iter()
        .map(|c| noted(format!("{}: {}", report.campaign, c.input), c.pass, format!("computed {}, expected {}", c.computed, c.expected)))
        .collect()
}

fn degrees(m_max: u32) -> impl Iterator<Item = (u32, u32, bool)> {
    (0..=m_max).flat_map(|m| [(m, 8 * m + 3, false), (m, 8 * m + 7, true)])
}

fn criterion_1() -> Criterion {
    let c2 = Group::cyclic(2);
    let rho = vc(&c2, "rho0-rho1");
    let mut checks = Vec::new();
    for m in 0..=4i64 {
        let n3 = (8 * m + 3) as u32;
        let e = eta(&ManifoldExpr::rp(n3), &rho, Modulus::Two).unwrap();
        let want = pow2(-4 * m - 2);
        checks.push(noted(
            format!("RP^{n3}"),
            e.value == (rat(2, 1) - &want) && e.raw == -want && e.order == two_pow(4 * m as u64 + 3),
            format!("{} mod 2, order {}", e.raw, e.order),
        ));
        let n7 = (8 * m + 7) as u32;
        let e = eta(&ManifoldExpr::rp(n7), &rho, Modulus::One).unwrap();
        checks.push(noted(
            format!("RP^{n7}"),
            e.value == pow2(-4 * m - 4) && e.order == two_pow(4 * m as u64 + 4),
            format!("{} mod 1, order {}", e.value, e.order),
        ));
    }
    Criterion { number: 1, title: "eta of real projective spaces", checks }
}

fn criterion_2() -> Criterion {
    let g = Group::cyclic(4);
    let r1 = vc(&g, "rho0-rho1");
    let r2 = vc(&g, "rho0-rho2");
    let mut checks = Vec::new();
    for k in 1..=6u32 {
        let h = k as usize;
        let mut w1 = vec![1i64; 2 * h];
        let mut w3 = w1.clone();
        w3[2 * h - 1] = 3;
        w1[2 * h - 1] = 1;
        let a = ManifoldExpr::lens(4, &w1);
        let b = ManifoldExpr::lens(4, &w3);
        let tail = {
            let t = pow2(-i64::from(2 * k + 1));
            if k % 2 == 1 {
                -t
            } else {
                t
            }
        };
        let base = neg_half_pow(k) / rat(2, 1);
        let got = [eta_raw(&a, &r1).unwrap(), eta_raw(&b, &r1).unwrap(), eta_raw(&a, &r2).unwrap(), eta_raw(&b, &r2).unwrap()];
        let want = [&base + &tail, &base - &tail, neg_half_pow(k), neg_half_pow(k)];
        checks.push(noted(format!("k={k}: closed forms"), got == want, format!("{got:?}")));

        let square: Vec<TorsionVector> = [[&got[0], &got[2]], [&got[1], &got[3]]]
            .iter()
            .map(|row| TorsionVector::new(row.iter().map(|x| ((*x).clone(), Modulus::One))))
            .collect();
        let det = pscv::torsion::det_order_bound(&square).unwrap();
        checks.push(noted(format!("k={k}: determinant bound"), det == two_pow(3 * u64::from(k)), format!("{det}")));

        let bundle = ManifoldExpr::lens_bundle(4, &vec![1; 2 * h], &{
            let mut c = vec![0; 2 * h];
            c[0] = 2;
            c
        });
        let e = eta(&bundle, &r1, Modulus::One).unwrap();
        checks.push(noted(
            format!("dim {}: lens-bundle order", 4 * k + 1),
            e.order == two_pow(u64::from(k) + 1),
            format!("{}", e.order),
        ));
    }
    let report = campaign("c4_span", &Params::small().with_m(0, 2));
    checks.extend(campaign_checks(&report));
    for (m, n, seven) in degrees(2) {
        let want = if seven { 6 * m + 6 } else { 6 * m + 4 };
        let got = span_exponent(&report, &format!("n={n}: span"));
        checks.push(noted(format!("n={n}: span order"), got == u64::from(want), format!("2^{got}")));
    }
    Criterion { number: 2, title: "C4 eta values, determinants and spans", checks }
}

fn criterion_3() -> Criterion {
    let q = Group::q8();
    let mut checks = Vec::new();
    let tau = preset_vchar(Arc::clone(&q), "two_minus_tau", 1).unwrap();
    for k in 0..=5i64 {
        let m = ManifoldExpr::q8_form(k as u32 + 1);
        let got = eta_raw(&m, &tau).unwrap();
        let want = pow2(-2 * k - 3) + rat(3, 1) * pow2(-k - 2);
        checks.push(noted(format!("quaternionic form, dim {}", 4 * k + 3), got == want, got.to_string()));
    }
    let report = campaign("q8_span", &Params::small().with_m(0, 1));
    checks.extend(campaign_checks(&report));
    let zeros = report.cases.iter().filter(|c| c.input.contains("eta(M1-M2)")).count();
    checks.push(noted("difference of lens quotients vanishes in every (2-tau)^a", zeros >= 1 + 2 + 3 + 4, format!("{zeros} coordinates")));
    let dets: Vec<&verify::Case> = report.cases.iter().filter(|c| c.input.contains("determinant")).collect();
    checks.push(noted(
        "determinant orders 2^{6m+3}, 2^{6m+6}",
        dets.len() == 2 && dets.iter().all(|c| c.pass),
        dets.iter().map(|c| format!("{}: {}", c.input, c.computed)).collect::<Vec<_>>().join("; "),
    ));
    for (m, n, seven) in degrees(1) {
        let want = 4 * m + 4 + 3 * (2 * m + if seven { 2 } else { 1 });
        let got = span_exponent(&report, &format!("n={n}: span"));
        checks.push(noted(format!("n={n}: full span order"), got == u64::from(want), format!("2^{got}")));
    }
    Criterion { number: 3, title: "Q8 eta values, determinants and spans", checks }
}

/// Exponent of the product formula for the spherical part of `ko_N(BV(n))`.
fn product_formula(rank: u32, m: u32, seven: bool) -> u64 {
    let top = u64::from(4 * m + if seven { 5 } else { 4 });
    (1..=rank).map(|i| pscv::grouprep::binomial(rank, i).to_u64().unwrap() * (top - u64::from(i))).sum()
}

fn criterion_4() -> Criterion {
    let mut checks = Vec::new();
    for n in 1..=4u32 {
        let det = char_table_det(&Group::elementary(n)).as_rational().unwrap().abs();
        let want = BigRational::from_integer(BigInt::from(2u32).pow(n * (1 << (n - 1))));
        checks.push(noted(format!("|det| of the V({n}) table"), det == want, det.to_string()));
    }
    let v2 = campaign("v2_span", &Params::small().with_m(0, 3));
    checks.extend(campaign_checks(&v2));
    for (k, n, seven) in degrees(3) {
        let want = 12 * k + if seven { 11 } else { 8 };
        let got = span_exponent(&v2, &format!("n={n}"));
        checks.push(noted(format!("V(2), n={n}: span order"), got == u64::from(want), format!("2^{got}")));
    }
    let vn = campaign("vn_span", &Params::small().with_m(0, 1));
    checks.extend(campaign_checks(&vn));
    for rank in [3u32, 4] {
        for (m, n, seven) in degrees(1) {
            let got = span_exponent(&vn, &format!("rank={rank}, n={n}"));
            let want = product_formula(rank, m, seven);
            checks.push(noted(format!("V({rank}), n={n}: product formula"), got == want, format!("2^{got}")));
            if rank == 3 {
                let (label, pass, note) = if seven {
                    // The statement's product is 3(4m+4)+3(4m+3)+(4m+2) = 28m+23; the
                    // proof's closing line states "at least 2^{28m+20}".
                    (
                        "at least 2^{28m+20}",
                        got >= u64::from(28 * m + 20) && got == u64::from(28 * m + 23),
                        format!("2^{got}, equal to the stated product 2^{}", 28 * m + 23),
                    )
                } else {
                    ("2^{28m+16}", got == u64::from(28 * m + 16), format!("2^{got}"))
                };
                checks.push(noted(format!("V(3), n={n}: {label}"), pass, note));
            }
        }
    }
    Criterion { number: 4, title: "elementary abelian spans", checks }
}

fn criterion_5() -> Criterion {
    let report = campaign("d8_span", &Params::small().with_m(0, 2).with_levels(vec![1, 2, 3]));
    let mut checks = campaign_checks(&report);
    for (m, n, seven) in degrees(2) {
        let want = 14 * m + if seven { 13 } else { 9 };
        let got = span_exponent(&report, &format!("n={n}: span"));
        checks.push(noted(format!("D8, n={n}: span order 2^{want}"), got == u64::from(want), format!("2^{got}")));
    }
    let orders = report.cases.iter().filter(|c| c.input.contains("odd-character orders")).count();
    checks.push(noted("order law covers N <= 3, j <= 3", orders == 9, format!("{orders} cases")));
    let ext = report.cases.iter().filter(|c| c.input.ends_with("extension")).count();
    checks.push(noted("extension shape for N = 1..3", ext == 3, format!("{ext} cases")));
    Criterion { number: 5, title: "dihedral spans and cyclic extensions", checks }
}

fn criterion_6() -> Criterion {
    let c8 = Group::cyclic(8);
    let mut checks = Vec::new();
    let r4 = vc(&c8, "rho0-rho4");
    let v = eta_raw(&ManifoldExpr::lens(8, &[1, 1]), &r4).unwrap();
    checks.push(noted("L^3(8)", v == rat(-1, 1), v.to_string()));
    let v = eta_raw(&ManifoldExpr::lens(8, &[1, 1, 1, 1]), &r4).unwrap();
    checks.push(noted("L^7(8)", v == rat(3, 2), v.to_string()));

    let b5 = ManifoldExpr::lens_bundle(8, &[1, 1], &[2, 0]);
    let b13 = ManifoldExpr::lens_bundle(8, &[1; 6], &[2, 0, 0, 0, 0, 0]);
    let at = |m: &ManifoldExpr, s: &str| eta_raw(m, &vc(&c8, s)).unwrap();
    let pairs = [
        (&b5, rat(-3, 4), rat(1, 8), "dim 5"),
        (&b13, rat(-17, 8), rat(1, 32), "dim 13"),
    ];
    for (m, centre, shift, label) in pairs {
        let (a, b) = (at(m, "rho0-rho1"), at(m, "rho0-rho3"));
        checks.push(noted(
            format!("{label}: rho1, rho3 values"),
            a == &centre - &shift && b == &centre + &shift,
            format!("{a}, {b}"),
        ));
    }
    let sd = Group::sd16();
    let inc = Inclusion::cyclic_into(Arc::clone(&sd), 8, Elem::new(0, 1)).unwrap();
    let rho = vc(&sd, "2-chi_rho");
    let v5 = eta_raw(&b5.included(inc.clone()), &rho).unwrap();
    let v13 = eta_raw(&b13.included(inc), &rho).unwrap();
    checks.push(noted("combined, dim 5", v5 == rat(-3, 2), v5.to_string()));
    checks.push(noted("combined, dim 13", v13 == rat(-17, 4), v13.to_string()));

    let report = campaign("sd16_span", &Params::small().with_m(0, 1));
    checks.extend(campaign_checks(&report));
    for (m, n, seven) in degrees(1) {
        let want = 13 * m + if seven { 12 } else { 8 };
        let got = span_exponent(&report, &format!("n={n}"));
        checks.push(noted(format!("n={n}: span order"), got == u64::from(want), format!("2^{got}")));
    }
    Criterion { number: 6, title: "semidihedral spot values and spans", checks }
}

/// Every printed relation is zero in the computed ring and keeps its leading power.
fn presentation_matches(ring: &GradedRingF2, printed: &[String]) -> bool {
    let rules = ring.rules();
    printed.len() == rules.len()
        && printed.iter().zip(rules).all(|(s, rule)| {
            let p = ring.parse(s).unwrap();
            ring.reduces_to_zero(&p).unwrap() && p.contains(&rule.lead)
        })
}

fn u_relation(r: u32, lower: &[(&str, u32)]) -> String {
    let mut s = format!("u^{r}");
    for (coeff, drop) in lower {
        for term in coeff.split('+') {
            s.push_str(&format!(" + {term}*u^{}", r - drop));
        }
    }
    s
}

fn criterion_7() -> Criterion {
    let mut checks = Vec::new();
    let mut wrong = Vec::new();
    for n in 1..=33u32 {
        let spin = charclass::rp(n, "x").unwrap().is_spin().unwrap();
        if spin != (n % 4 == 3 || n == 1) {
            wrong.push(n);
        }
    }
    checks.push(noted("RP^n spin pattern, n <= 33", wrong.is_empty(), format!("{wrong:?}")));

    // Spin bundles over orientable projective spaces: RP(2L + A) over RP^{4i+1}.
    for i in 1..=3u32 {
        for a in [2u32, 6, 10] {
            let base = charclass::rp(4 * i + 1, "x").unwrap();
            let x = base.gen("x").unwrap();
            let m = charclass::projectivize(&base, &BundleDesc::lines(&base, &[x.clone(), x], a).unwrap(), "t").unwrap();
            let printed = [format!("x^{}", 4 * i + 2), format!("t^{} + x^2*t^{a}", a + 2)];
            checks.push(check(
                format!("RP(2L+{a}) over RP^{}", 4 * i + 1),
                m.is_spin().unwrap() && presentation_matches(&m, &printed),
            ));
        }
    }

    // Iterated bundles and the even V(3) constructions.
    let c1 = [("x*t", 2), ("x^2*t+x*t^2", 3), ("x^4+t^4+x^3*t+x*t^3", 4), ("x^4*t+x*t^4+x^3*t^2+x^2*t^3", 5)];
    let c2 = [("x^2+t^2+x*t", 2), ("x^2*t+x*t^2", 3)];
    let mut families: Vec<(String, (u32, u32, u32), Vec<String>)> = Vec::new();
    for (i, j, a) in [(1u32, 1u32, 1u32), (1, 1, 5), (2, 1, 1)] {
        families.push((
            "iterated bundle over RP^{4i}".into(),
            (4 * i, 4 * j + 1, a + 2),
            vec![format!("x^{}", 4 * i + 1), format!("t^{} + x*t^{}", 4 * j + 2, 4 * j + 1), u_relation(a + 3, &c2)],
        ));
    }
    for (i, j, c) in [(1u32, 0u32, 7u32), (0, 1, 7), (0, 0, 11)] {
        families.push((
            "M(4i+2,4j+3,c)".into(),
            (4 * i + 2, 4 * j + 3, c),
            vec![format!("x^{}", 4 * i + 3), format!("t^{} + x*t^{}", 4 * j + 4, 4 * j + 3), u_relation(c + 1, &c1)],
        ));
    }
    for (i, j, c) in [(1u32, 0u32, 3u32), (0, 0, 7), (1, 1, 3)] {
        families.push((
            "M(4i+2,4j+5,c)".into(),
            (4 * i + 2, 4 * j + 5, c),
            vec![
                format!("x^{}", 4 * i + 3),
                format!("t^{} + x*t^{} + x^2*t^{} + x^3*t^{}", 4 * j + 6, 4 * j + 5, 4 * j + 4, 4 * j + 3),
                u_relation(c + 1, &c2),
            ],
        ));
    }
    for (i, j, c) in [(1u32, 0u32, 7u32), (1, 1, 7), (2, 0, 7)] {
        // The base is RP^{4i}, so the first relation is x^{4i+1}.
        families.push((
            "M(4i,4j+3,c)".into(),
            (4 * i, 4 * j + 3, c),
            vec![
                format!("x^{}", 4 * i + 1),
                format!("t^{} + x*t^{} + x^2*t^{} + x^3*t^{}", 4 * j + 4, 4 * j + 3, 4 * j + 2, 4 * j + 1),
                u_relation(c + 1, &c1),
            ],
        ));
    }
    for (label, (a, b, c), printed) in families {
        let ring = homcount::v3_even_manifold(a, b, c).unwrap();
        checks.push(check(format!("{label} at ({a},{b},{c})"), ring.is_spin().unwrap() && presentation_matches(&ring, &printed)));
    }
    for ((a, b, c), base) in [((2u32, 3u32, 3u32), ["x^3", "t^4 + x*t^3 + x^2*t^2"]), ((4, 3, 3), ["x^5", "t^4 + x*t^3"])] {
        let ring = homcount::v3_even_manifold(a, b, c).unwrap();
        let first_two = base.iter().all(|s| ring.reduces_to_zero(&ring.parse(s).unwrap()).unwrap());
        checks.push(check(format!("M({a},{b},{c}) from a split tangent bundle"), ring.is_spin().unwrap() && first_two));
    }

    let mut dims = Vec::new();
    for m in (2..=12u32).step_by(2) {
        let r = charclass::dihedral_circle_bundle(m).unwrap();
        let wu = r.wu_classes().unwrap();
        if !(wu.v1.is_zero() && wu.v2.is_zero()) {
            dims.push(r.manifold_dim());
        }
    }
    for k in 1..=3u32 {
        let r = charclass::sd16_circle_bundle(k).unwrap();
        let wu = r.wu_classes().unwrap();
        if !(wu.v1.is_zero() && wu.v2.is_zero()) {
            dims.push(r.manifold_dim());
        }
    }
    checks.push(noted("Wu classes v1 = v2 = 0 on the circle bundles up to dimension 24", dims.is_empty(), format!("{dims:?}")));

    let sd = Arc::new(charclass::semidihedral(4));
    let mut rejected = true;
    for k in 1..=3 {
        let m = Arc::new(charclass::sd16_circle_bundle(k).unwrap());
        let good = RingMap::from_strs(sd.clone(), m.clone(), &["t", "s", "x*t + x*s", "x^2 + x*t^2"]).unwrap();
        let bad = RingMap::from_strs(sd.clone(), m, &["t", "s", "x*t + x*s", "x^2"]).unwrap();
        rejected &= good.steenrod_defects().unwrap().is_empty() && bad.steenrod_defects().unwrap() == vec![("P".to_string(), 2)];
    }
    checks.push(check("image x^2 for P fails the Sq^2 check", rejected));
    Criterion { number: 7, title: "characteristic classes", checks }
}

fn count_checks(report: &homcount::CountReport, closed: impl Fn(u32) -> Option<u64>) -> Vec<Check> {
    report
        .entries
        .iter()
        .map(|e| {
            let want = closed(e.n);
            noted(
                format!("{}, n={}", report.claim, e.n),
                e.pass && want.is_none_or(|w| w == e.computed),
                format!("{} / {} {}", e.computed, want.unwrap_or(e.expected), e.note),
            )
        })
        .collect()
}

fn criterion_8() -> Criterion {
    let mut checks = Vec::new();
    let v2 = homcount::count_check("v2_even", (2..=32).step_by(2), 1).unwrap();
    checks.extend(count_checks(&v2, |n| {
        let k = u64::from(n / 4);
        Some(if n % 4 == 0 { k + 1 } else { k })
    }));
    let v3_closed = |n: u32| {
        let k = u64::from(n / 4);
        Some(match n % 4 {
            0 => k * k + 4 * k + 3,
            1 => 1 + k + k * k,
            2 => k * k + 5 * k,
            _ => k * k + 2 * k,
        })
    };
    let even = homcount::count_check("v3_even", (4..=26).step_by(2), 1).unwrap();
    let odd = homcount::count_check("v3_odd", (5..=25).step_by(2), 1).unwrap();
    checks.extend(count_checks(&even, v3_closed));
    checks.extend(count_checks(&odd, v3_closed));
    let spot: Vec<(u32, u64)> = vec![(8, 15), (10, 14), (11, 8), (13, 13)];
    for (n, want) in spot {
        let got = even.entries.iter().chain(&odd.entries).find(|e| e.n == n).map(|e| e.computed);
        checks.push(noted(format!("V(3) spot count n={n}"), got == Some(want), format!("{got:?}")));
    }

    for level in 1..=2u32 {
        let d = homcount::count_check("dihedral", (2..=24).step_by(2), level).unwrap();
        checks.extend(count_checks(&d, |_| None));
        let ring = charclass::dihedral(level + 2);
        for n in [8u32, 16, 24] {
            let classes = homcount::family("dihedral_circle_bundle", n, level).unwrap();
            let labels: Vec<Vec<String>> = classes.iter().map(|x| x.labels(&ring)).collect();
            let want = vec![vec![format!("b^2*d^{}", n / 2 - 1)]];
            checks.push(noted(format!("N={level}, n={n}: repairing class"), labels == want, format!("{labels:?}")));
        }
    }

    let sd = homcount::count_check("sd16", (2..=24).step_by(2), 1).unwrap();
    checks.extend(count_checks(&sd, |_| None));
    let mono = homcount::sd16_monomorphism_check(24).unwrap();
    checks.push(noted("SD16 restriction is a monomorphism on the printed classes", mono.pass, format!("{} checks", mono.checks.len())));
    let ring = charclass::semidihedral(4);
    for k in 1..=3u32 {
        let classes = homcount::family("sd16_circle_bundle", 8 * k, 1).unwrap();
        let labels: Vec<Vec<String>> = classes.iter().map(|x| x.labels(&ring)).collect();
        let power = if k == 1 { "P".to_string() } else { format!("P^{}", 2 * k - 1) };
        checks.push(noted(format!("n={}: circle-bundle class", 8 * k), labels == vec![vec![format!("y*u*{power}")]], format!("{labels:?}")));
    }
    Criterion { number: 8, title: "homology counts", checks }
}

/// Subgroup of `(Q/mZ)^k` generated by `vs`, enumerated exhaustively. Every
/// denominator divides 64, so coordinates are kept as residues mod `64 m`.
fn brute_span(vs: &[Vec<(BigRational, Modulus)>]) -> (usize, Vec<usize>) {
    let mods: Vec<i64> = vs.first().map(|v| v.iter().map(|(_, m)| 64 * m.value()).collect()).unwrap_or_default();
    let gens: Vec<Vec<i64>> = vs
        .iter()
        .map(|v| {
            v.iter()
                .zip(&mods)
                .map(|((x, _), &m)| (x * BigRational::from_integer(64.into())).to_integer().to_i64().unwrap().rem_euclid(m))
                .collect()
        })
        .collect();
    let zero = vec![0i64; mods.len()];
    let mut seen: HashSet<Vec<i64>> = HashSet::from([zero.clone()]);
    let mut frontier = vec![zero];
    while let Some(p) = frontier.pop() {
        for g in &gens {
            let q: Vec<i64> = p.iter().zip(g).zip(&mods).map(|((a, b), m)| (a + b) % m).collect();
            if seen.insert(q.clone()) {
                frontier.push(q);
            }
        }
    }
    // Number of elements killed by 2^i, for i = 0, 1, ...
    let mut killed = Vec::new();
    for i in 0.. {
        let c = seen.iter().filter(|x| x.iter().zip(&mods).all(|(a, m)| (a << i) % m == 0)).count();
        killed.push(c);
        if c == seen.len() {
            break;
        }
    }
    (seen.len(), killed)
}

/// The same counts from elementary divisors.
fn killed_from_divisors(divisors: &[BigUint], total: usize) -> Vec<usize> {
    let exps: Vec<u32> = divisors.iter().map(|d| log2(d) as u32).collect();
    let mut out = Vec::new();
    for i in 0.. {
        let c: u32 = exps.iter().map(|&e| e.min(i)).sum();
        out.push(1usize << c);
        if out.last() == Some(&total) {
            break;
        }
    }
    out
}

fn criterion_9() -> Criterion {
    let mut checks = Vec::new();
    let mut corpus: Vec<(String, ManifoldExpr, pscv::grouprep::VirtualChar)> = Vec::new();
    let c2 = Group::cyclic(2);
    for n in (3..=39).step_by(4) {
        corpus.push((format!("RP^{n}"), ManifoldExpr::rp(n), vc(&c2, "rho0-rho1")));
    }
    for l in [4u32, 8, 16] {
        let g = Group::cyclic(l);
        for ws in [vec![1i64, 1], vec![1, 3], vec![1, 1, 1, 3], vec![1, 5, 3, 7, 1, 1]] {
            if ws.iter().any(|w| *w >= i64::from(l)) {
                continue;
            }
            for a in 1..l {
                let rho = vc(&g, &format!("rho{a}-rho0"));
                corpus.push((format!("L(l={l};{ws:?}) rho{a}"), ManifoldExpr::lens(l, &ws), rho.clone()));
                let mut cs = vec![0; ws.len()];
                cs[0] = 2;
                corpus.push((format!("bundle(l={l};{ws:?}) rho{a}"), ManifoldExpr::lens_bundle(l, &ws, &cs), rho));
            }
        }
    }
    let q = Group::q8();
    for c in 1..=5u32 {
        for name in ["eps2", "eps3"] {
            corpus.push((format!("M_Q^{} {name}", 4 * c - 1), ManifoldExpr::q8_form(c), preset_vchar(Arc::clone(&q), name, 0).unwrap()));
        }
        for a in 1..=3 {
            corpus.push((format!("M_Q^{} (2-tau)^{a}", 4 * c - 1), ManifoldExpr::q8_form(c), preset_vchar(Arc::clone(&q), "two_minus_tau", a).unwrap()));
        }
    }
    let sd = Group::sd16();
    let inc = Inclusion::q8_into_sd16();
    for c in 1..=3u32 {
        for ch in sd.char_table().iter().filter(|c| c.name != "rho0") {
            let rho = vc(&sd, &format!("{}-{}", ch.name, ch.degree()));
            corpus.push((format!("SD16 form {c} {}", ch.name), ManifoldExpr::q8_form(c).included(inc.clone()).times_bott(1), rho));
        }
    }
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (label, m, rho) in &corpus {
        let exact = eta_raw(m, rho).unwrap().to_f64().unwrap();
        let float = eta_float(m, rho).unwrap();
        let err = (exact - float).abs();
        worst = worst.max(err);
        if err >= 1e-9 {
            bad.push(label.clone());
        }
    }
    checks.push(noted(format!("{} eta values against the floating sum", corpus.len()), bad.is_empty(), format!("max error {worst:.2e} {bad:?}")));

    let mut rng = StdRng::seed_from_u64(0x5eed);
    let denominators = [1i64, 2, 4, 8, 16, 32, 64];
    let mut mismatches = 0;
    for _ in 0..200 {
        let k = rng.gen_range(1..=3);
        let count = rng.gen_range(1..=3);
        let mods: Vec<Modulus> = (0..k).map(|_| if rng.gen_bool(0.5) { Modulus::One } else { Modulus::Two }).collect();
        let vs: Vec<Vec<(BigRational, Modulus)>> = (0..count)
            .map(|_| {
                mods.iter()
                    .map(|&m| {
                        let d = denominators[rng.gen_range(0..denominators.len())];
                        (rat(rng.gen_range(-2 * d..=2 * d), d), m)
                    })
                    .collect()
            })
            .collect();
        let tvs: Vec<TorsionVector> = vs.iter().map(|v| TorsionVector::new(v.iter().cloned())).collect();
        let span = span_order(&tvs).unwrap();
        let (size, killed) = brute_span(&vs);
        let from_snf = killed_from_divisors(&span.elementary_divisors, size);
        if span.order != BigUint::from(size) || from_snf != killed {
            mismatches += 1;
        }
    }
    checks.push(noted("span_order against exhaustive enumeration, 200 cases", mismatches == 0, format!("{mismatches} mismatches")));

    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=5);
        let cols = if rng.gen_bool(0.7) { n } else { rng.gen_range(1..=5) };
        let m: Vec<Vec<BigInt>> = (0..n).map(|_| (0..cols).map(|_| BigInt::from(rng.gen_range(-9..=9))).collect()).collect();
        let d = snf(&m);
        let chain = d.windows(2).all(|w| w[0].is_zero() && w[1].is_zero() || !w[0].is_zero() && (w[1].is_zero() || w[1].is_multiple_of(&w[0])));
        let square_ok = if cols == n {
            let q: Vec<Vec<BigRational>> = m.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
            let det = rational_det(&q).abs();
            let prod: BigInt = (0..n).map(|i| d.get(i).cloned().unwrap_or_default()).product();
            det == BigRational::from_integer(prod.abs())
        } else {
            true
        };
        if !(chain && square_ok && d.iter().all(|x| !x.is_negative())) {
            failures += 1;
        }
    }
    checks.push(noted("Smith form divisibility and determinant on 1000 matrices", failures == 0, format!("{failures} failures")));
    Criterion { number: 9, title: "oracles", checks }
}

fn criterion_10() -> Criterion {
    let mut checks = Vec::new();
    let mut rings: Vec<GradedRingF2> = (1..=4).map(charclass::bv).collect();
    rings.extend((3..=5).map(charclass::dihedral));
    rings.extend((4..=5).map(charclass::semidihedral));
    rings.extend([1u32, 3, 7, 12].iter().map(|&a| charclass::rp(a, "x").unwrap()));
    rings.extend((1..=4).map(|m| charclass::dihedral_circle_bundle(m).unwrap()));
    rings.extend((1..=2).map(|k| charclass::sd16_circle_bundle(k).unwrap()));
    let bad: Vec<String> = rings.iter().filter(|r| r.check_confluence(64).is_err()).map(|r| r.name().to_string()).collect();
    checks.push(noted(format!("{} presentations confluent to degree 64", rings.len()), bad.is_empty(), format!("{bad:?}")));

    let identity = (1..=12u32).all(|n| {
        let lhs = BigInt::from(n) << (n - 1);
        let rhs: BigInt = (BigInt::one() << n) - 1 + (2..=n).map(|k| BigInt::from(k - 1) * pscv::grouprep::binomial(n, k)).sum::<BigInt>();
        lhs == rhs && vn_exponent_identity(n)
    });
    checks.push(check("n 2^{n-1} = 2^n - 1 + sum (k-1) C(n,k), n <= 12", identity));
    checks.push(check("Lucas parity, J <= 64", homcount::lucas_parity_check(64)));

    let mut orth = Vec::new();
    for f in [Family::Cyclic(8), Family::ElementaryAbelian(3), Family::Dihedral(1), Family::Dihedral(2), Family::Quaternion8, Family::SemiDihedral16] {
        let g = Group::get(f).unwrap();
        let table = g.char_table();
        for (i, a) in table.iter().enumerate() {
            for (j, b) in table.iter().enumerate() {
                let ip = g.inner(&a.values, &b.values).as_rational();
                let want = if i == j { BigRational::one() } else { BigRational::zero() };
                if ip != Some(want) {
                    orth.push(format!("{} {}x{}", g.name(), a.name, b.name));
                }
            }
        }
    }
    checks.push(noted("row orthonormality of every preset table", orth.is_empty(), format!("{orth:?}")));

    let c8 = Group::cyclic(8);
    let mut sym = true;
    for ws in [vec![1i64, 1], vec![1, 3, 5, 7]] {
        let m = ManifoldExpr::lens(8, &ws);
        for a in 1..8 {
            let x = eta_raw(&m, &vc(&c8, &format!("rho{a}-rho0"))).unwrap();
            let y = eta_raw(&m, &vc(&c8, &format!("rho{}-rho0", 8 - a))).unwrap();
            sym &= x == y;
        }
    }
    checks.push(check("eta is invariant under complex conjugation", sym));

    let mut scaled = true;
    let g = Group::cyclic(4);
    let rho = vc(&g, "rho0-rho1");
    for w in [vec![1i64, 1], vec![1, 3]] {
        let m = ManifoldExpr::lens(4, &w);
        let base = eta_raw(&m, &rho).unwrap();
        scaled &= eta_raw(&m.clone().times_bott(2), &rho).unwrap() == base;
        scaled &= eta_raw(&m.times_kummer(), &rho).unwrap() == base * rat(2, 1);
    }
    checks.push(check("Bott and Kummer multipliers scale eta by their A-hat genus", scaled));
    let unique: BTreeSet<u32> = (1..=6).map(|k| ManifoldExpr::q8_form(k).dimension().unwrap()).collect();
    checks.push(check("quaternionic forms have dimension 4c - 1", unique == (1..=6).map(|k| 4 * k - 1).collect()));
    Criterion { number: 10, title: "module properties", checks }
}

fn main() {
    let builders: [fn() -> Criterion; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let timed: Vec<(Criterion, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = builders
            .iter()
            .map(|f| {
                s.spawn(move || {
                    let start = Instant::now();
                    let c = f();
                    (c, start.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });

    for (c, t) in &timed {
        println!(
            "{} criterion {:>2}: {} ({} checks, {:.1}s)",
            if c.pass() { "PASS" } else { "FAIL" },
            c.number,
            c.title,
            c.checks.len(),
            t.as_secs_f64()
        );
        for f in c.checks.iter().filter(|f| !f.pass) {
            println!("       {}: {}", f.label, f.note);
        }
        for f in c.checks.iter().filter(|f| f.pass && f.note.contains("stated product")) {
            println!("       note: {}: {}", f.label, f.note);
        }
    }

    let criteria: Vec<Criterion> = timed.into_iter().map(|(c, _)| c).collect();
    // The dihedral spans in degrees 8m+7 reach 2^{14m+12}, one factor of 2 short
    // of the published order; every other check must hold.
    let failing: Vec<u32> = criteria.iter().filter(|c| !c.pass()).map(|c| c.number).collect();
    let shortfall: Vec<&str> = criteria[4].checks.iter().filter(|c| !c.pass).map(|c| c.label.as_str()).collect();
    let known = [
        "d8_span: n=7: span",
        "d8_span: n=15: span",
        "d8_span: n=23: span",
        "D8, n=7: span order 2^13",
        "D8, n=15: span order 2^27",
        "D8, n=23: span order 2^41",
    ];
    let passed = criteria.len() - failing.len();
    println!("{passed}/{} criteria pass", criteria.len());
    if failing != [5] || shortfall != known {
        eprintln!("unexpected outcome: failing criteria {failing:?}, criterion 5 failures {shortfall:?}");
        std::process::exit(1);
    }
    println!("criterion 5 fails only on the known dihedral 8m+7 shortfall");
}
