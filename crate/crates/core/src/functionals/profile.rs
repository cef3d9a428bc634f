use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::{EmpiricalDistribution, JointDistribution};
use crate::error::{Error, Result};
use crate::graphon::{off_levels, GraphonHandle};
use crate::numeric::{pairwise_sum, piecewise_gauss, UnitPoint};

pub const PROFILE_FORMAT: &str = "profile-v1";

/// Default resolution for profiles and laws.
pub const DEFAULT_RESOLUTION: usize = 1 << 16;

/// Degree function sampled at the midpoints `(i + ½)/m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub source: String,
    pub m: usize,
    pub values: Vec<f64>,
    /// `true` when values come from closed forms / exact row means rather
    /// than numerical quadrature.
    pub exact: bool,
}

/// Level functional `h(x) = |{y : dist(W(x,y), {0,½}) > η}|` at midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    pub source: String,
    pub m: usize,
    pub eta: f64,
    pub values: Vec<f64>,
}

fn midpoints(m: usize) -> Vec<UnitPoint> {
    (0..m).map(|i| UnitPoint::midpoint(i, m)).collect()
}

fn check_resolution(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::domain("resolution m must be >= 1"));
    }
    Ok(())
}

/// Degree profile through the closed-form route.
pub fn degree(w: &GraphonHandle, m: usize) -> Result<DegreeProfile> {
    check_resolution(m)?;
    let w = w.resolved()?;
    Ok(DegreeProfile {
        source: w.describe(),
        m,
        values: w.degrees_at(&midpoints(m)),
        exact: true,
    })
}

/// Degree profile by integrating `y ↦ W(x, y)` numerically, piece by piece
/// between the kernel's row breakpoints.
pub fn degree_quadrature(w: &GraphonHandle, m: usize) -> Result<DegreeProfile> {
    check_resolution(m)?;
    let w = w.resolved()?;
    let values = (0..m)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 + 0.5) / m as f64;
            piecewise_gauss(|y| w.value(x, y), 0.0, 1.0, &w.row_breakpoints(x))
        })
        .collect();
    Ok(DegreeProfile {
        source: w.describe(),
        m,
        values,
        exact: false,
    })
}

/// Level functional through the closed-form route.
pub fn level_functional(w: &GraphonHandle, m: usize, eta: f64) -> Result<LevelProfile> {
    check_resolution(m)?;
    if !(eta >= 0.0) {
        return Err(Error::domain(format!("tolerance eta={eta} must be >= 0")));
    }
    let w = w.resolved()?;
    Ok(LevelProfile {
        source: w.describe(),
        m,
        eta,
        values: w.levels_at(&midpoints(m), eta),
    })
}

/// Level functional by counting `q` midpoints in `y`; an independent route
/// to [`level_functional`].
pub fn level_functional_counting(
    w: &GraphonHandle,
    m: usize,
    eta: f64,
    q: usize,
) -> Result<LevelProfile> {
    check_resolution(m)?;
    check_resolution(q)?;
    let w = w.resolved()?;
    let values = (0..m)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 + 0.5) / m as f64;
            let hits = (0..q)
                .filter(|&j| off_levels(w.value(x, (j as f64 + 0.5) / q as f64), eta))
                .count();
            hits as f64 / q as f64
        })
        .collect();
    Ok(LevelProfile {
        source: w.describe(),
        m,
        eta,
        values,
    })
}

impl DegreeProfile {
    /// `∫ D`, which is the edge density `t(K₂, W)`.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.m as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.m as f64
    }

    pub fn to_json(&self) -> Result<String> {
        profile_json("degree", self.m, &self.source, &self.values, None)
    }

    pub fn to_csv(&self) -> Result<String> {
        profile_csv(self.m, &self.values)
    }
}

impl LevelProfile {
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.m as f64
    }

    pub fn to_json(&self) -> Result<String> {
        profile_json("level", self.m, &self.source, &self.values, Some(self.eta))
    }

    pub fn to_csv(&self) -> Result<String> {
        profile_csv(self.m, &self.values)
    }
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    format: String,
    kind: String,
    source: String,
    m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    x: Vec<f64>,
    values: Vec<f64>,
}

fn profile_json(kind: &str, m: usize, source: &str, values: &[f64], eta: Option<f64>) -> Result<String> {
    let file = ProfileFile {
        format: PROFILE_FORMAT.into(),
        kind: kind.into(),
        source: source.into(),
        m,
        eta,
        x: (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect(),
        values: values.to_vec(),
    };
    Ok(serde_json::to_string(&file)?)
}

fn profile_csv(m: usize, values: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([((i as f64 + 0.5) / m as f64).to_string(), v.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::validation(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::validation(e.to_string()))
}

/// Reads the `(x, value)` columns written by a profile's `to_csv`;
/// `#` lines are ignored.
pub fn read_profile_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::validation(format!("bad profile row {rec:?}")))
        };
        out.push((parse(0)?, parse(1)?));
    }
    Ok(out)
}

/// Reads a `profile-v1` JSON document back into `(kind, m, values)`.
pub fn read_profile_json(text: &str) -> Result<(String, usize, Vec<f64>)> {
    let file: ProfileFile = serde_json::from_str(text)?;
    if file.format != PROFILE_FORMAT {
        return Err(Error::validation(format!("unsupported profile format {:?}", file.format)));
    }
    if file.values.len() != file.m {
        return Err(Error::validation("profile length does not match m"));
    }
    Ok((file.kind, file.m, file.values))
}

/// Push-forward of the uniform law under the degree function.
pub fn degree_law(p: &DegreeProfile) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::from_values(&p.values)
}

/// Law of a level profile's values.
pub fn level_law(p: &LevelProfile) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::from_values(&p.values)
}

/// Push-forward of the uniform law under `x ↦ (D(x), h(x))`.
pub fn joint_law(w: &GraphonHandle, m: usize, eta: f64) -> Result<JointDistribution> {
    let d = degree(w, m)?;
    let h = level_functional(w, m, eta)?;
    joint_law_of(&d, &h)
}

pub fn joint_law_of(d: &DegreeProfile, h: &LevelProfile) -> Result<JointDistribution> {
    if d.m != h.m {
        return Err(Error::validation("degree and level profiles differ in resolution"));
    }
    JointDistribution::from_pairs(d.values.iter().copied().zip(h.values.iter().copied()))
}

/// `∫ h · 1{lo < D < hi}` over the sampled midpoints.
pub fn conditional_mass(d: &DegreeProfile, h: &LevelProfile, lo: f64, hi: f64) -> f64 {
    let terms: Vec<f64> = d
        .values
        .iter()
        .zip(&h.values)
        .filter(|(&dv, _)| lo < dv && dv < hi)
        .map(|(_, &hv)| hv)
        .collect();
    pairwise_sum(&terms) / d.m as f64
}

/// One equal-width degree bin and the average of `h` over its preimage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMean {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Measure of `{x : D(x) in the bin}`.
    pub mass: f64,
    pub mean_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalReport {
    pub bins: Vec<BinMean>,
    /// Indices of interior bins that had no mass.
    pub empty_bins: Vec<usize>,
}

/// Mean of `h` over equal-width degree bins spanning `[min D, max D]`.
///
/// Only interior bins are reported (the first and last bin are dropped).
/// A degenerate degree range (constant degree) yields one bin holding all
/// the mass.
pub fn conditional_h_given_degree(
    d: &DegreeProfile,
    h: &LevelProfile,
    bins: usize,
) -> Result<ConditionalReport> {
    if bins == 0 {
        return Err(Error::domain("need at least one bin"));
    }
    if d.m != h.m {
        return Err(Error::validation("degree and level profiles differ in resolution"));
    }
    let lo = d.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Ok(ConditionalReport {
            bins: vec![BinMean {
                index: 0,
                lo,
                hi,
                mass: 1.0,
                mean_h: pairwise_sum(&h.values) / h.m as f64,
            }],
            empty_bins: vec![],
        });
    }
    let width = (hi - lo) / bins as f64;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for (&dv, &hv) in d.values.iter().zip(&h.values) {
        let k = (((dv - lo) / width).floor() as usize).min(bins - 1);
        members[k].push(hv);
    }
    let interior = if bins >= 3 { 1..bins - 1 } else { 0..bins };
    let mut report = ConditionalReport {
        bins: vec![],
        empty_bins: vec![],
    };
    for k in interior {
        if members[k].is_empty() {
            report.empty_bins.push(k);
            continue;
        }
        report.bins.push(BinMean {
            index: k,
            lo: lo + k as f64 * width,
            hi: lo + (k + 1) as f64 * width,
            mass: members[k].len() as f64 / d.m as f64,
            mean_h: pairwise_sum(&members[k]) / members[k].len() as f64,
        });
    }
    Ok(report)
}
