use serde::{Deserialize, Serialize};

use super::steps::{rank_groups, Verifier, REFERENCE_EPSILON_EXPONENT};
use crate::error::Result;
use crate::functionals::EmpiricalDistribution;
use crate::numeric::pairwise_sum;

/// Laws are compared after snapping values to this lattice.
pub const CERTIFICATE_LATTICE: f64 = 0.125;
/// The verdict is a contradiction when TV exceeds this.
pub const TV_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "CONTRADICTION")]
    Contradiction,
    #[serde(rename = "NO-CONTRADICTION")]
    NoContradiction,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Contradiction => "CONTRADICTION",
            Verdict::NoContradiction => "NO-CONTRADICTION",
        })
    }
}

/// Law of `h` against the law forced on `h₁` by any equivalent graphon
/// with increasing degree function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionCertificate {
    pub graphon: String,
    pub m: usize,
    pub law_h: EmpiricalDistribution,
    pub forced_h1_law: EmpiricalDistribution,
    /// Mean of the forced law; the forced value when that law is a point mass.
    pub forced_h1: f64,
    pub lattice: f64,
    pub tv: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub statement: String,
}

impl ContradictionCertificate {
    /// TV distance recomputed from the stored laws.
    pub fn recompute_tv(&self) -> Result<f64> {
        self.law_h.tv(&self.forced_h1_law, self.lattice)
    }
}

/// Forced values of `h₁` in degree-rank order.
///
/// Ranks are cut into bins of width `2⁻⁶` without splitting tie groups.
/// Inside a bin, a tie group heavier than the null allowance keeps the
/// values of `h` it carries (on such a group only the conditional law is
/// determined); everything else is replaced by its pooled mean, the
/// shrinking-bin limit.
fn forced_h1_values(v: &Verifier) -> Vec<f64> {
    let m = v.m;
    let bins = 1usize << REFERENCE_EPSILON_EXPONENT;
    let (order, groups) = rank_groups(&v.d.values);
    let h = &v.h.values;
    let heavy = (v.null_allowance() * m as f64).round() as usize;
    let mut out = Vec::with_capacity(m);
    let mut k = 0;
    while k < groups.len() {
        let bin = groups[k].start * bins / m;
        let mut pooled = Vec::new();
        while k < groups.len() && groups[k].start * bins / m == bin {
            let g = groups[k].clone();
            if g.len() > heavy {
                out.extend(order[g].iter().map(|&i| h[i]));
            } else {
                pooled.extend(order[g].iter().map(|&i| h[i]));
            }
            k += 1;
        }
        if !pooled.is_empty() {
            let mean = pairwise_sum(&pooled) / pooled.len() as f64;
            out.extend(std::iter::repeat(mean).take(pooled.len()));
        }
    }
    out
}

pub(crate) fn certificate(v: &Verifier) -> Result<ContradictionCertificate> {
    let law_h = EmpiricalDistribution::from_values(&v.h.values)?;
    let forced = forced_h1_values(v);
    let forced_h1 = pairwise_sum(&forced) / forced.len() as f64;
    let forced_h1_law = EmpiricalDistribution::from_values(&forced)?;
    let tv = law_h.tv(&forced_h1_law, CERTIFICATE_LATTICE)?;
    let verdict = if tv > TV_THRESHOLD {
        Verdict::Contradiction
    } else {
        Verdict::NoContradiction
    };
    let statement = match verdict {
        Verdict::Contradiction => format!(
            "Law(h) and the law forced on h1 by an increasing degree function are {tv} apart in \
             total variation, but equivalence would make them equal. No graphon equivalent to \
             {} has an increasing degree function.",
            v.w.describe()
        ),
        Verdict::NoContradiction => format!(
            "Law(h) and the forced law of h1 agree up to {tv} in total variation; the invariants \
             are consistent with an equivalent graphon of increasing degree."
        ),
    };
    Ok(ContradictionCertificate {
        graphon: v.w.describe(),
        m: v.m,
        law_h,
        forced_h1_law,
        forced_h1,
        lattice: CERTIFICATE_LATTICE,
        tv,
        threshold: TV_THRESHOLD,
        verdict,
        statement,
    })
}
