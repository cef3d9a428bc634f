use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form graphon families on [0, 1]².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum AnalyticGraphon {
    /// `4xy` on `(0,½)²`, `½` where `x + y > 3/2`, `0` elsewhere.
    Counterexample,
    /// `W ≡ p`.
    Constant { p: f64 },
    /// `W(x, y) = xy`.
    Product,
    /// `W(x, y) = 1` when `x + y > 2t`, else `0`.
    Threshold { t: f64 },
}

impl AnalyticGraphon {
    pub fn constant(p: f64) -> Result<Self> {
        check_param("p", p)?;
        Ok(AnalyticGraphon::Constant { p })
    }

    pub fn threshold(t: f64) -> Result<Self> {
        check_param("t", t)?;
        Ok(AnalyticGraphon::Threshold { t })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticGraphon::Counterexample => "counterexample",
            AnalyticGraphon::Constant { .. } => "constant",
            AnalyticGraphon::Product => "product",
            AnalyticGraphon::Threshold { .. } => "threshold",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            AnalyticGraphon::Constant { p } => format!("constant(p={p})"),
            AnalyticGraphon::Threshold { t } => format!("threshold(t={t})"),
            other => other.name().to_string(),
        }
    }

    /// Point evaluation, no domain checks.
    ///
    /// Case boundaries of the counterexample resolve first-match in the
    /// order `4xy` on the open square, then strict `x + y > 3/2`, else `0`.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match *self {
            AnalyticGraphon::Counterexample => {
                if x > 0.0 && x < 0.5 && y > 0.0 && y < 0.5 {
                    4.0 * x * y
                } else if x + y > 1.5 {
                    0.5
                } else {
                    0.0
                }
            }
            AnalyticGraphon::Constant { p } => p,
            AnalyticGraphon::Product => x * y,
            AnalyticGraphon::Threshold { t } => {
                if x + y > 2.0 * t {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Points of (0, 1) where `y ↦ W(x, y)` stops being a single polynomial.
    pub fn row_breakpoints(&self, x: f64) -> Vec<f64> {
        let inside = |b: f64| b > 0.0 && b < 1.0;
        let candidates = match *self {
            AnalyticGraphon::Counterexample => vec![0.5, 1.5 - x],
            AnalyticGraphon::Threshold { t } => vec![2.0 * t - x],
            AnalyticGraphon::Constant { .. } | AnalyticGraphon::Product => vec![],
        };
        candidates.into_iter().filter(|&b| inside(b)).collect()
    }

    /// Closed-form degree `∫₀¹ W(x, y) dy`.
    pub fn degree(&self, x: f64) -> f64 {
        match *self {
            AnalyticGraphon::Counterexample => {
                if x > 0.0 && x < 0.5 {
                    0.5 * x
                } else if x > 0.5 {
                    0.5 * (x - 0.5)
                } else {
                    0.0
                }
            }
            AnalyticGraphon::Constant { p } => p,
            AnalyticGraphon::Product => 0.5 * x,
            AnalyticGraphon::Threshold { t } => (x + 1.0 - 2.0 * t).clamp(0.0, 1.0),
        }
    }

    /// Closed-form level functional: the measure of
    /// `{y : dist(W(x, y), {0, ½}) > eta}`.
    pub fn level(&self, x: f64, eta: f64) -> f64 {
        match *self {
            AnalyticGraphon::Counterexample => {
                if x > 0.0 && x < 0.5 {
                    linear_band_measure(4.0 * x, 0.5, eta)
                } else {
                    // only the values 0 and ½ occur
                    0.0
                }
            }
            AnalyticGraphon::Constant { p } => {
                if off_levels(p, eta) {
                    1.0
                } else {
                    0.0
                }
            }
            AnalyticGraphon::Product => linear_band_measure(x, 1.0, eta),
            AnalyticGraphon::Threshold { .. } => {
                if off_levels(1.0, eta) {
                    self.degree(x)
                } else {
                    0.0
                }
            }
        }
    }
}

fn check_param(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("parameter {name}={v} outside [0,1]")));
    }
    Ok(())
}

/// `dist(v, {0, ½}) > eta`.
pub(crate) fn off_levels(v: f64, eta: f64) -> bool {
    v.abs() > eta && (v - 0.5).abs() > eta
}

/// Measure of `{y ∈ (0, len) : dist(slope·y, {0, ½}) > eta}` for `slope ≥ 0`.
fn linear_band_measure(slope: f64, len: f64, eta: f64) -> f64 {
    if slope <= 0.0 {
        return if off_levels(0.0, eta) { len } else { 0.0 };
    }
    let clip = |a: f64, b: f64| (a.max(0.0), b.min(len));
    // excluded y-intervals around the two levels
    let mut bands = [
        clip(-eta / slope, eta / slope),
        clip((0.5 - eta) / slope, (0.5 + eta) / slope),
    ];
    bands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut excluded = 0.0;
    let mut reach = 0.0_f64;
    for (a, b) in bands {
        let a = a.max(reach);
        if b > a {
            excluded += b - a;
            reach = b;
        }
    }
    (len - excluded).max(0.0)
}
