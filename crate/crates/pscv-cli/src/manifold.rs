//! JSON grammar and flag shorthand for manifold expressions.

use std::sync::Arc;

use pscv::eta::ManifoldExpr;
use pscv::grouprep::{Elem, Family, Group, Inclusion};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// A manifold over the classifying space of a finite group.
///
/// ```json
/// {"include": {"into": "SD16", "via": "q8", "manifold": {"quotient": {"group": "Q8", "copies": 2}}}}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ManifoldDoc {
    /// `S^{2k-1}/C_l` with the given weights.
    Lens { l: u32, weights: Vec<i64> },
    /// Lens space bundle with first Chern classes `c1s`.
    Lensbundle { l: u32, weights: Vec<i64>, c1s: Vec<i64> },
    /// Quaternionic space form `S^{4c-1}/Q8`.
    Quotient { group: String, copies: u32 },
    Include { into: String, via: Via, manifold: Box<ManifoldDoc> },
    /// Product with `bott` Bott manifolds and, optionally, a Kummer surface.
    Scale {
        #[serde(default)]
        bott: u32,
        #[serde(default)]
        kummer: bool,
        manifold: Box<ManifoldDoc>,
    },
    Sum { terms: Vec<(i64, ManifoldDoc)> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Via {
    /// Cyclic subgroup generated by `[flip, rot]`.
    Cyclic { generator: [u32; 2] },
    /// The quaternion subgroup of `SD16`.
    Q8,
}

impl ManifoldDoc {
    pub fn build(&self) -> Result<ManifoldExpr, Failure> {
        Ok(match self {
            ManifoldDoc::Lens { l, weights } => {
                check_lens(*l, weights)?;
                ManifoldExpr::lens(*l, weights)
            }
            ManifoldDoc::Lensbundle { l, weights, c1s } => {
                check_lens(*l, weights)?;
                if c1s.len() != weights.len() {
                    return Err(Failure::Usage("lensbundle needs one c1 per weight".into()));
                }
                ManifoldExpr::lens_bundle(*l, weights, c1s)
            }
            ManifoldDoc::Quotient { group, copies } => {
                if Family::parse(group).map_err(|e| Failure::Usage(e.to_string()))? != Family::Quaternion8 {
                    return Err(Failure::Usage(format!("no quaternionic space forms for {group}")));
                }
                if *copies == 0 {
                    return Err(Failure::Usage("copies must be positive".into()));
                }
                ManifoldExpr::q8_form(*copies)
            }
            ManifoldDoc::Include { into, via, manifold } => {
                let inner = manifold.build()?;
                let sup = Group::get(Family::parse(into).map_err(|e| Failure::Usage(e.to_string()))?)
                    .map_err(|e| Failure::Usage(e.to_string()))?;
                let sub = inner.group().map_err(Failure::compute)?;
                let inc = match via {
                    Via::Cyclic { generator } => {
                        let l = match sub.family() {
                            Family::Cyclic(l) => l,
                            other => return Err(Failure::Usage(format!("cyclic inclusion of {}", other.name()))),
                        };
                        Inclusion::cyclic_into(Arc::clone(&sup), l, Elem::new(generator[0], generator[1]))
                            .map_err(Failure::compute)?
                    }
                    Via::Q8 => {
                        if sup.family() != Family::SemiDihedral16 || sub.family() != Family::Quaternion8 {
                            return Err(Failure::Usage("`q8` inclusion goes from Q8 into SD16".into()));
                        }
                        Inclusion::q8_into_sd16()
                    }
                };
                inner.included(inc)
            }
            ManifoldDoc::Scale { bott, kummer, manifold } => {
                let inner = manifold.build()?;
                let inner = if *kummer { inner.times_kummer() } else { inner };
                inner.times_bott(*bott)
            }
            ManifoldDoc::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Failure::Usage("empty sum".into()));
                }
                let built = terms
                    .iter()
                    .map(|(c, m)| Ok((*c, m.build()?)))
                    .collect::<Result<Vec<_>, Failure>>()?;
                ManifoldExpr::sum(built)
            }
        })
    }
}

fn check_lens(l: u32, weights: &[i64]) -> Result<(), Failure> {
    if l < 2 || weights.is_empty() {
        return Err(Failure::Usage("lens spaces need l >= 2 and at least one weight".into()));
    }
    if weights.iter().any(|w| w.rem_euclid(i64::from(l)) == 0 || num_gcd(*w, i64::from(l)) != 1) {
        return Err(Failure::Usage(format!("weights must be units mod {l}")));
    }
    Ok(())
}

fn num_gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn ints(s: &str) -> Result<Vec<i64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| Failure::Usage(format!("bad integer `{t}`"))))
        .collect()
}

/// `L:w1,w2,...`
pub fn parse_lens(s: &str) -> Result<ManifoldDoc, Failure> {
    let (l, w) = s.split_once(':').ok_or_else(|| Failure::Usage(format!("expected L:w1,w2,..., got `{s}`")))?;
    let l = l.trim().parse().map_err(|_| Failure::Usage(format!("bad order `{l}`")))?;
    Ok(ManifoldDoc::Lens { l, weights: ints(w)? })
}

/// `L:w1,w2,...:c1,c2,...`
pub fn parse_bundle(s: &str) -> Result<ManifoldDoc, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    let [l, w, c] = parts[..] else {
        return Err(Failure::Usage(format!("expected L:weights:c1s, got `{s}`")));
    };
    let l = l.trim().parse().map_err(|_| Failure::Usage(format!("bad order `{l}`")))?;
    Ok(ManifoldDoc::Lensbundle { l, weights: ints(w)?, c1s: ints(c)? })
}

pub fn rp_doc(n: u32) -> Result<ManifoldDoc, Failure> {
    if n.is_multiple_of(2) {
        return Err(Failure::Usage(format!("RP^{n} is not a lens space")));
    }
    Ok(ManifoldDoc::Lens { l: 2, weights: vec![1; (n as usize).div_ceil(2)] })
}

/// Inline JSON or `@path`.
pub fn parse_json_doc(s: &str) -> Result<ManifoldDoc, Failure> {
    let text = match s.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?,
        None => s.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("manifold JSON: {e}")))
}
