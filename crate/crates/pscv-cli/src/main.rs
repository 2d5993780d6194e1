mod manifold;
mod output;

use std::fmt;
use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pscv::charclass::{self, BundleDesc, GradedRingF2, DEFAULT_DEGREE_CAP};
use pscv::eta::{eta, suggest_modulus, ManifoldExpr};
use pscv::grouprep::{fs_indicator, parse_vchar, Family, Group};
use pscv::homcount;
use pscv::refdata;
use pscv::torsion::{span_order, Modulus};
use pscv::verify::{self, Scale};
use serde::Serialize;
use serde_json::{json, Value};

use manifold::{parse_bundle, parse_json_doc, parse_lens, rp_doc, ManifoldDoc};
use output::{emit, Rendered};

const EXIT_COMPUTE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    pub fn compute(e: impl fmt::Display) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Compute(m) => write!(f, "error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "pscv", version, about = "Eta invariants, torsion spans and mod 2 homology for finite 2-groups")]
struct Cli {
    /// Emit a JSON envelope `{kind, payload}` instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Character table of a preset group (C<l>, V<n>, D<2^k>, Q8, SD16).
    Chartable { group: String },
    /// Eta invariant of one manifold against one virtual character.
    Eta(EtaArgs),
    /// Order and shape of the subgroup spanned by eta vectors.
    Span(SpanArgs),
    /// Presentation and normal basis of a preset cohomology ring.
    Ring {
        /// V<n>, D<2^k>, SD<2^k>, RP<a>, Mdih<2m> or Msd<8k>.
        name: String,
        /// Highest degree of the printed basis.
        #[arg(long)]
        degree: Option<u32>,
    },
    /// Projective bundle of a sum of line bundles over a product of projective spaces.
    Bundle(BundleArgs),
    /// Spin test via Wu classes, for `RP^n` or a projective bundle.
    Spin(SpinArgs),
    /// Homology images of the named generator families, or a count check.
    Pushforward(PushArgs),
    /// Published ko, Ker(Ap) and homology-count tables.
    Table(TableArgs),
    /// Run verification campaigns.
    Verify(VerifyArgs),
}

#[derive(Args, Default)]
struct Sources {
    /// Lens space `L:w1,w2,...`.
    #[arg(long)]
    lens: Vec<String>,
    /// Real projective space of odd dimension.
    #[arg(long)]
    rp: Vec<u32>,
    /// Lens space bundle `L:w1,...:c1,...`.
    #[arg(long = "lens-bundle")]
    lens_bundle: Vec<String>,
    /// Manifold JSON, inline or `@file`.
    #[arg(long)]
    manifold: Vec<String>,
}

impl Sources {
    fn docs(&self) -> Result<Vec<ManifoldDoc>, Failure> {
        let mut out = Vec::new();
        for s in &self.lens {
            out.push(parse_lens(s)?);
        }
        for &n in &self.rp {
            out.push(rp_doc(n)?);
        }
        for s in &self.lens_bundle {
            out.push(parse_bundle(s)?);
        }
        for s in &self.manifold {
            out.push(parse_json_doc(s)?);
        }
        Ok(out)
    }
}

#[derive(Args)]
struct EtaArgs {
    #[command(flatten)]
    sources: Sources,
    /// Virtual character, e.g. `rho4-rho0` or `(2-tau)^2`.
    #[arg(long)]
    vchar: String,
    /// Target `R/Z` (1) or `R/2Z` (2); defaults to the reality type of the character.
    #[arg(long = "mod")]
    modulus: Option<u8>,
}

#[derive(Args)]
struct SpanArgs {
    #[command(flatten)]
    sources: Sources,
    /// Coordinates; defaults to `rho - dim rho` for every non-trivial irreducible.
    #[arg(long)]
    vchar: Vec<String>,
    /// One modulus per `--vchar`; defaults to the reality type.
    #[arg(long = "mod")]
    modulus: Vec<u8>,
}

#[derive(Args)]
struct BundleArgs {
    /// Product of projective spaces, `RP3:x,RP5:y`.
    #[arg(long)]
    base: String,
    /// First Stiefel-Whitney classes of the line summands, `x,x+y`.
    #[arg(long)]
    lines: String,
    /// Additional trivial summands.
    #[arg(long, default_value_t = 0)]
    trivial: u32,
    /// Name of the tautological class.
    #[arg(long, default_value = "t")]
    fiber: String,
}

#[derive(Args)]
struct SpinArgs {
    #[arg(long, conflicts_with = "base")]
    rp: Option<u32>,
    #[arg(long, requires = "lines")]
    base: Option<String>,
    #[arg(long)]
    lines: Option<String>,
    #[arg(long, default_value_t = 0)]
    trivial: u32,
    #[arg(long, default_value = "t")]
    fiber: String,
}

#[derive(Args)]
struct PushArgs {
    /// Generator family (see `homcount::FAMILIES`).
    #[arg(long, conflicts_with = "claim")]
    family: Option<String>,
    /// Count claim: v2_even, v3_even, v3_odd, dihedral, sd16.
    #[arg(long)]
    claim: Option<String>,
    /// Degree, for `--family`.
    #[arg(long)]
    n: Option<u32>,
    /// Largest degree, for `--claim`.
    #[arg(long = "n-max", default_value_t = 16)]
    n_max: u32,
    /// Dihedral level `N` (group of order `2^{N+2}`).
    #[arg(long, default_value_t = 1)]
    level: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableKind {
    Ko,
    Kerap,
    H,
}

#[derive(Args)]
struct TableArgs {
    #[arg(value_enum)]
    which: TableKind,
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    n: u32,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, conflicts_with = "all")]
    campaign: Option<String>,
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum, default_value = "small")]
    scale: ScaleArg,
    /// Range `a..b` (inclusive) or a single value.
    #[arg(long)]
    m: Option<String>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
    /// Comma-separated dihedral levels.
    #[arg(long)]
    levels: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Small,
    Full,
}

struct Outcome {
    kind: &'static str,
    payload: Value,
    text: String,
    verified: bool,
}

impl Outcome {
    fn new(kind: &'static str, payload: impl Serialize, text: String) -> Result<Self, Failure> {
        let payload = serde_json::to_value(payload).map_err(Failure::compute)?;
        Ok(Outcome { kind, payload, text, verified: true })
    }
}

fn degree_cap() -> Result<u32, Failure> {
    match std::env::var("PSCV_DEGREE_CAP") {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Usage(format!("PSCV_DEGREE_CAP=`{v}` is not a number"))),
        Err(_) => Ok(DEFAULT_DEGREE_CAP),
    }
}

fn group(name: &str) -> Result<Arc<Group>, Failure> {
    let f = Family::parse(name).map_err(|e| Failure::Usage(e.to_string()))?;
    Group::get(f).map_err(|e| Failure::Usage(e.to_string()))
}

fn modulus(m: u8) -> Result<Modulus, Failure> {
    Modulus::try_from(m).map_err(|_| Failure::Usage(format!("modulus must be 1 or 2, got {m}")))
}

fn chartable(name: &str) -> Result<Outcome, Failure> {
    let g = group(name)?;
    let sizes = g.class_sizes();
    let rows: Vec<Value> = g
        .char_table()
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "indicator": fs_indicator(&g, c),
                "values": c.values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let payload = json!({
        "group": g.name(),
        "class_sizes": sizes,
        "classes": g.class_labels(),
        "characters": rows,
    });
    let mut table = vec![
        std::iter::once(String::new()).chain(sizes.iter().map(|s| s.to_string())).collect::<Vec<_>>(),
        std::iter::once(String::new()).chain(g.class_labels().iter().cloned()).collect(),
    ];
    for c in g.char_table() {
        table.push(std::iter::once(c.name.clone()).chain(c.values.iter().map(|v| v.to_string())).collect());
    }
    Outcome::new("chartable", payload, Rendered::grid(&table))
}

fn eta_cmd(a: &EtaArgs) -> Result<Outcome, Failure> {
    let docs = a.sources.docs()?;
    let [doc] = &docs[..] else {
        return Err(Failure::Usage("eta takes exactly one manifold".into()));
    };
    let m = doc.build()?;
    let g = m.group().map_err(Failure::compute)?;
    let dim = m.dimension().map_err(Failure::compute)?;
    let rho = parse_vchar(Arc::clone(&g), &a.vchar).map_err(|e| Failure::Usage(e.to_string()))?;
    let suggestion = suggest_modulus(dim, &rho);
    let md = match a.modulus {
        Some(x) => modulus(x)?,
        None => suggestion.modulus,
    };
    let r = eta(&m, &rho, md).map_err(Failure::compute)?;
    let payload = json!({
        "group": g.name(),
        "dimension": dim,
        "vchar": rho.to_string(),
        "value": r.value.to_string(),
        "raw": r.raw.to_string(),
        "modulus": md.value(),
        "order": r.order.to_string(),
        "advisory": suggestion.advisory,
    });
    let text = format!(
        "eta = {} mod {} (raw {}), order {}{}",
        r.value,
        md.value(),
        r.raw,
        r.order,
        if suggestion.advisory && a.modulus.is_none() { "\nnote: doubled real character in degree 7 mod 8; pass --mod explicitly" } else { "" }
    );
    Outcome::new("eta", payload, text)
}

fn span_cmd(a: &SpanArgs) -> Result<Outcome, Failure> {
    let docs = a.sources.docs()?;
    if docs.is_empty() {
        return Err(Failure::Usage("span needs at least one manifold".into()));
    }
    let ms: Vec<ManifoldExpr> = docs.iter().map(ManifoldDoc::build).collect::<Result<_, _>>()?;
    let g = ms[0].group().map_err(Failure::compute)?;
    let dim = ms[0].dimension().map_err(Failure::compute)?;
    for m in &ms[1..] {
        if m.group().map_err(Failure::compute)? != g || m.dimension().map_err(Failure::compute)? != dim {
            return Err(Failure::Usage("all manifolds must share group and dimension".into()));
        }
    }
    if !a.modulus.is_empty() && a.modulus.len() != a.vchar.len() {
        return Err(Failure::Usage("give one --mod per --vchar or none".into()));
    }
    let coords = if a.vchar.is_empty() {
        verify::full_coordinates(&g, dim).map_err(Failure::compute)?
    } else {
        let mut out = Vec::new();
        for (i, s) in a.vchar.iter().enumerate() {
            let rho = parse_vchar(Arc::clone(&g), s).map_err(|e| Failure::Usage(e.to_string()))?;
            let md = match a.modulus.get(i) {
                Some(&x) => modulus(x)?,
                None => suggest_modulus(dim, &rho).modulus,
            };
            out.push((rho, md));
        }
        out
    };
    let vs = ms
        .iter()
        .map(|m| pscv::eta::eta_vector(m, &coords))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::compute)?;
    let report = span_order(&vs).map_err(Failure::compute)?;
    let shape = refdata::AbelianShape::cyclic(report.elementary_divisors.iter().map(|d| (d.bits() - 1) as u32));
    let payload = json!({
        "group": g.name(),
        "dimension": dim,
        "generators": ms.len(),
        "coordinates": coords.iter().map(|(r, m)| json!({"vchar": r.to_string(), "modulus": m.value()})).collect::<Vec<_>>(),
        "order": report.order.to_string(),
        "elementary_divisors": report.elementary_divisors.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "shape": shape.to_string(),
    });
    let text = format!("span of {} generators in degree {dim}: order {} = {shape}", ms.len(), report.order);
    Outcome::new("span", payload, text)
}

fn preset_ring(name: &str) -> Result<GradedRingF2, Failure> {
    let num = |s: &str| s.parse::<u32>().map_err(|_| Failure::Usage(format!("unknown ring `{name}`")));
    let log2 = |n: u32| {
        if n.is_power_of_two() {
            Ok(n.trailing_zeros())
        } else {
            Err(Failure::Usage(format!("`{name}`: order must be a power of two")))
        }
    };
    let ring = if let Some(r) = name.strip_prefix("Mdih") {
        let d = num(r)?;
        if d == 0 || d % 2 == 1 {
            return Err(Failure::Usage("Mdih<2m> needs an even positive dimension".into()));
        }
        charclass::dihedral_circle_bundle(d / 2).map_err(Failure::compute)?
    } else if let Some(r) = name.strip_prefix("Msd") {
        let d = num(r)?;
        if d == 0 || d % 8 != 0 {
            return Err(Failure::Usage("Msd<8k> needs a positive multiple of 8".into()));
        }
        charclass::sd16_circle_bundle(d / 8).map_err(Failure::compute)?
    } else if let Some(r) = name.strip_prefix("SD") {
        let e = log2(num(r)?)?;
        if e < 4 {
            return Err(Failure::Usage("semidihedral groups start at SD16".into()));
        }
        charclass::semidihedral(e)
    } else if let Some(r) = name.strip_prefix("RP") {
        charclass::rp(num(r)?, "x").map_err(Failure::compute)?
    } else if let Some(r) = name.strip_prefix('D') {
        let e = log2(num(r)?)?;
        if e < 3 {
            return Err(Failure::Usage("dihedral groups start at D8".into()));
        }
        charclass::dihedral(e)
    } else if let Some(r) = name.strip_prefix('V') {
        let n = num(r.trim_start_matches('(').trim_end_matches(')'))?;
        if n == 0 || n > 8 {
            return Err(Failure::Usage("V<n> needs 1 <= n <= 8".into()));
        }
        charclass::bv(n as usize)
    } else {
        return Err(Failure::Usage(format!("unknown ring `{name}`")));
    };
    Ok(ring.with_cap(degree_cap()?))
}

#[derive(Serialize)]
struct RingDoc {
    name: String,
    generators: Vec<(String, u32)>,
    relations: Vec<String>,
    dimension: Option<u32>,
    basis: Vec<(u32, Vec<String>)>,
}

fn ring_doc(ring: &GradedRingF2, top: u32) -> Result<RingDoc, Failure> {
    let basis = (0..=top)
        .map(|d| {
            let b = ring.normal_basis(d).map_err(Failure::compute)?;
            Ok((d, b.iter().map(|m| ring.fmt_mono(m)).collect()))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(RingDoc {
        name: ring.name().to_string(),
        generators: ring.generators().iter().map(|g| (g.name.clone(), g.degree)).collect(),
        relations: ring.rules().iter().map(|r| format!("{} = {}", ring.fmt_mono(&r.lead), ring.fmt_poly(&r.tail))).collect(),
        dimension: ring.manifold_dim(),
        basis,
    })
}

fn ring_text(doc: &RingDoc) -> String {
    let gens: Vec<String> = doc.generators.iter().map(|(n, d)| format!("{n} ({d})")).collect();
    let mut out = format!("{}: F2[{}]", doc.name, gens.join(", "));
    if let Some(d) = doc.dimension {
        out.push_str(&format!(", closed manifold of dimension {d}"));
    }
    for r in &doc.relations {
        out.push_str(&format!("\n  {r}"));
    }
    for (d, b) in &doc.basis {
        out.push_str(&format!("\n  H^{d}: {}", if b.is_empty() { "0".to_string() } else { b.join(" ") }));
    }
    out
}

fn ring_cmd(name: &str, degree: Option<u32>) -> Result<Outcome, Failure> {
    let ring = preset_ring(name)?;
    let top = degree.or(ring.manifold_dim()).unwrap_or(8);
    if top > ring.degree_cap() {
        return Err(Failure::Usage(format!("degree {top} exceeds the cap {}", ring.degree_cap())));
    }
    let doc = ring_doc(&ring, top)?;
    let text = ring_text(&doc);
    Outcome::new("ring", doc, text)
}

fn projective_bundle(base: &str, lines: &str, trivial: u32, fiber: &str) -> Result<GradedRingF2, Failure> {
    let cap = degree_cap()?;
    let mut ring: Option<GradedRingF2> = None;
    for piece in base.split(',') {
        let (rp, var) = piece
            .split_once(':')
            .ok_or_else(|| Failure::Usage(format!("expected RP<a>:<name>, got `{piece}`")))?;
        let a = rp
            .trim()
            .strip_prefix("RP")
            .and_then(|x| x.parse::<u32>().ok())
            .ok_or_else(|| Failure::Usage(format!("expected RP<a>, got `{rp}`")))?;
        let factor = charclass::rp(a, var.trim()).map_err(Failure::compute)?;
        ring = Some(match ring {
            None => factor,
            Some(r) => charclass::product(&r, &factor).map_err(|e| Failure::Usage(e.to_string()))?,
        });
    }
    let base = ring.ok_or_else(|| Failure::Usage("empty base".into()))?.with_cap(cap);
    let w1s = lines
        .split(',')
        .map(|s| base.parse(s.trim()).map_err(|e| Failure::Usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let bundle = BundleDesc::lines(&base, &w1s, trivial).map_err(|e| Failure::Usage(e.to_string()))?;
    charclass::projectivize(&base, &bundle, fiber).map_err(|e| Failure::Usage(e.to_string()))
}

#[derive(Serialize)]
struct SpinDoc {
    manifold: String,
    dimension: Option<u32>,
    v1: String,
    v2: String,
    w1: String,
    w2: String,
    spin: bool,
}

fn spin_doc(ring: &GradedRingF2) -> Result<SpinDoc, Failure> {
    let wu = ring.wu_classes().map_err(Failure::compute)?;
    Ok(SpinDoc {
        manifold: ring.name().to_string(),
        dimension: ring.manifold_dim(),
        v1: ring.fmt_poly(&wu.v1),
        v2: ring.fmt_poly(&wu.v2),
        w1: ring.fmt_poly(&wu.w1),
        w2: ring.fmt_poly(&wu.w2),
        spin: wu.w1.is_zero() && wu.w2.is_zero(),
    })
}

fn spin_text(d: &SpinDoc) -> String {
    format!(
        "{} (dimension {}): w1 = {}, w2 = {}; {}",
        d.manifold,
        d.dimension.map_or("?".into(), |n| n.to_string()),
        d.w1,
        d.w2,
        if d.spin { "spin" } else { "not spin" }
    )
}

fn bundle_cmd(a: &BundleArgs) -> Result<Outcome, Failure> {
    let ring = projective_bundle(&a.base, &a.lines, a.trivial, &a.fiber)?;
    let spin = spin_doc(&ring)?;
    let doc = ring_doc(&ring, ring.manifold_dim().unwrap_or(0))?;
    let text = format!("{}\n{}", ring_text(&doc), spin_text(&spin));
    let payload = json!({
        "ring": doc,
        "spin": spin,
    });
    Outcome::new("bundle", payload, text)
}

fn spin_cmd(a: &SpinArgs) -> Result<Outcome, Failure> {
    let ring = match (&a.rp, &a.base, &a.lines) {
        (Some(n), None, _) => charclass::rp(*n, "x").map_err(Failure::compute)?.with_cap(degree_cap()?),
        (None, Some(base), Some(lines)) => projective_bundle(base, lines, a.trivial, &a.fiber)?,
        _ => return Err(Failure::Usage("give --rp N or --base with --lines".into())),
    };
    let d = spin_doc(&ring)?;
    let text = spin_text(&d);
    Outcome::new("spin", d, text)
}

fn push_cmd(a: &PushArgs) -> Result<Outcome, Failure> {
    let cap = degree_cap()?;
    let top = a.n.unwrap_or(a.n_max);
    if top > cap {
        return Err(Failure::Usage(format!("degree {top} exceeds the cap {cap}")));
    }
    match (&a.family, &a.claim) {
        (Some(fam), None) => {
            let n = a.n.ok_or_else(|| Failure::Usage("--family needs --n".into()))?;
            if !homcount::FAMILIES.contains(&fam.as_str()) {
                return Err(Failure::Usage(format!("unknown family `{fam}`; known: {}", homcount::FAMILIES.join(", "))));
            }
            let classes = homcount::family(fam, n, a.level).map_err(Failure::compute)?;
            let rank = homcount::f2_rank(&classes).map_err(Failure::compute)?;
            let labels: Vec<Vec<String>> = classes
                .iter()
                .map(|x| {
                    let ring = basis_ring(x.basis(), a.level)?;
                    Ok(x.labels(&ring))
                })
                .collect::<Result<_, Failure>>()?;
            let text = labels
                .iter()
                .map(|l| if l.is_empty() { "0".to_string() } else { l.join(" + ") })
                .chain(std::iter::once(format!("rank {rank} of {}", classes.len())))
                .collect::<Vec<_>>()
                .join("\n");
            let payload = json!({"family": fam, "degree": n, "classes": labels, "rank": rank});
            Outcome::new("pushforward", payload, text)
        }
        (None, Some(claim)) => {
            if !homcount::CLAIMS.contains(&claim.as_str()) {
                return Err(Failure::Usage(format!("unknown claim `{claim}`; known: {}", homcount::CLAIMS.join(", "))));
            }
            let r = homcount::count_check(claim, 2..=a.n_max, a.level).map_err(Failure::compute)?;
            let text = r
                .entries
                .iter()
                .map(|e| format!("{} n={}: {} / {} {}", if e.pass { "PASS" } else { "FAIL" }, e.n, e.computed, e.expected, e.note))
                .collect::<Vec<_>>()
                .join("\n");
            let pass = r.pass;
            let mut out = Outcome::new("pushforward", r, text)?;
            out.verified = pass;
            Ok(out)
        }
        _ => Err(Failure::Usage("give exactly one of --family or --claim".into())),
    }
}

/// The group ring a homology class is written in.
fn basis_ring(name: &str, level: u32) -> Result<GradedRingF2, Failure> {
    match name {
        "SD16" => Ok(charclass::semidihedral(4)),
        n if n.starts_with('D') => Ok(charclass::dihedral(level + 2)),
        n if n.starts_with("V(") => preset_ring(n),
        other => Err(Failure::Compute(format!("no preset ring for basis `{other}`"))),
    }
}

fn table_cmd(a: &TableArgs) -> Result<Outcome, Failure> {
    if let TableKind::H = a.which {
        let h = refdata::h_dim(a.n).map_err(Failure::compute)?;
        return Outcome::new("table", json!({"table": "h", "n": a.n, "value": h}), format!("h({}) = {h}", a.n));
    }
    let name = a.group.as_deref().ok_or_else(|| Failure::Usage("--group is required".into()))?;
    let family = Family::parse(name).map_err(|e| Failure::Usage(e.to_string()))?;
    let (label, shape) = match a.which {
        TableKind::Ko => ("ko", refdata::ko_table(family, a.n)),
        _ => ("kerap", refdata::ker_ap(family, a.n)),
    };
    let shape = shape.map_err(Failure::compute)?;
    let text = format!("{label}_{}(B{}) = {shape}", a.n, family.name());
    let payload = json!({"table": label, "group": family.name(), "n": a.n, "shape": shape, "display": shape.to_string()});
    Outcome::new("table", payload, text)
}

fn parse_m(s: &str) -> Result<(u32, u32), Failure> {
    let bad = || Failure::Usage(format!("--m expects a..b or a single value, got `{s}`"));
    match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        }
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            Ok((v, v))
        }
    }
}

fn verify_cmd(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let mut params = match a.scale {
        ScaleArg::Small => Scale::Small.params(),
        ScaleArg::Full => Scale::Full.params(),
    };
    if let Some(m) = &a.m {
        let (lo, hi) = parse_m(m)?;
        params = params.with_m(lo, hi);
    }
    if let Some(n) = a.n_max {
        params = params.with_n_max(n);
    }
    if let Some(l) = &a.levels {
        let levels = l
            .split(',')
            .map(|x| x.trim().parse::<u32>().map_err(|_| Failure::Usage(format!("bad level `{x}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        params = params.with_levels(levels);
    }
    let usage_or_compute = |e: verify::VerifyError| match e {
        verify::VerifyError::UnknownCampaign(_) | verify::VerifyError::Params(_) => Failure::Usage(e.to_string()),
        other => Failure::compute(other),
    };
    match (&a.campaign, a.all) {
        (Some(name), false) => {
            let r = verify::run(name, &params).map_err(usage_or_compute)?;
            let text = report_text(&r);
            let pass = r.pass;
            let mut out = Outcome::new("verify", r, text)?;
            out.verified = pass;
            Ok(out)
        }
        (None, true) => {
            let reports = verify::run_catalogue(verify::CATALOGUE, &params, &verify::Published).map_err(usage_or_compute)?;
            let summary = verify::aggregate(&reports);
            let text = reports.iter().map(report_text).chain(std::iter::once(report_text(&summary))).collect::<Vec<_>>().join("\n\n");
            let pass = summary.pass;
            let mut out = Outcome::new("verify", json!({"reports": reports, "summary": summary}), text)?;
            out.verified = pass;
            Ok(out)
        }
        _ => Err(Failure::Usage("give --campaign NAME or --all".into())),
    }
}

fn report_text(r: &verify::Report) -> String {
    let mut lines = vec![format!("{}: {}", r.campaign, if r.pass { "PASS" } else { "FAIL" })];
    for c in &r.cases {
        let mut line = format!(
            "  {} {}: computed {}, expected {}",
            if c.pass { "ok  " } else { "FAIL" },
            c.input,
            c.computed,
            c.expected
        );
        if !c.note.is_empty() {
            line.push_str(&format!(" ({})", c.note));
        }
        lines.push(line);
    }
    lines.join("\n")
}

fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Chartable { group } => chartable(group),
        Command::Eta(a) => eta_cmd(a),
        Command::Span(a) => span_cmd(a),
        Command::Ring { name, degree } => ring_cmd(name, *degree),
        Command::Bundle(a) => bundle_cmd(a),
        Command::Spin(a) => spin_cmd(a),
        Command::Pushforward(a) => push_cmd(a),
        Command::Table(a) => table_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            let printed = if cli.json { emit(out.kind, out.payload) } else { Ok(out.text) };
            match printed {
                Ok(s) => {
                    let mut stdout = std::io::stdout().lock();
                    if let Err(e) = writeln!(stdout, "{s}") {
                        if e.kind() != std::io::ErrorKind::BrokenPipe {
                            eprintln!("error: {e}");
                            return ExitCode::from(EXIT_COMPUTE);
                        }
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_COMPUTE);
                }
            }
            if out.verified {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY)
            }
        }
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(match f {
                Failure::Usage(_) => EXIT_USAGE,
                Failure::Compute(_) => EXIT_COMPUTE,
            })
        }
    }
}
