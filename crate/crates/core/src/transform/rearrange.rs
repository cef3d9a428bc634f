use serde::{Deserialize, Serialize};

use crate::functionals::EmpiricalDistribution;

/// A nondecreasing function on [0, 1], stored exactly as a right-continuous
/// step function or an affine map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuantileFunction {
    /// Value `values[k]` on `[cuts[k], cuts[k+1])`; `cuts[0] = 0`, and the
    /// last value extends to `u = 1`.
    Steps { cuts: Vec<f64>, values: Vec<f64> },
    /// `u ↦ lo + u·(hi − lo)`.
    Linear { lo: f64, hi: f64 },
}

/// The unique (a.e.) nondecreasing function on [0, 1] whose push-forward of
/// the uniform law is `law`: the right-continuous quantile function
/// `u ↦ inf{v : F(v) > u}`.
pub fn monotone_rearrangement(law: &EmpiricalDistribution) -> QuantileFunction {
    match law {
        EmpiricalDistribution::Uniform { lo, hi } => QuantileFunction::Linear { lo: *lo, hi: *hi },
        EmpiricalDistribution::Atoms { atoms, total } => {
            let mut cuts = Vec::with_capacity(atoms.len());
            let mut values = Vec::with_capacity(atoms.len());
            let mut cum = 0u64;
            for a in atoms {
                cuts.push(cum as f64 / *total as f64);
                values.push(a.value);
                cum += a.mass;
            }
            QuantileFunction::Steps { cuts, values }
        }
    }
}

impl QuantileFunction {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            QuantileFunction::Linear { lo, hi } => lo + u.clamp(0.0, 1.0) * (hi - lo),
            QuantileFunction::Steps { cuts, values } => {
                let k = cuts.partition_point(|&c| c <= u).max(1);
                values[k - 1]
            }
        }
    }

    /// Values at the midpoints `(i + ½)/m`: the sorted value sequence at
    /// resolution `m`.
    pub fn sample(&self, m: usize) -> Vec<f64> {
        (0..m)
            .map(|i| self.eval((i as f64 + 0.5) / m as f64))
            .collect()
    }

    /// `sup_u |Q(u) − g(u)|` for a continuous nondecreasing `g`.
    pub fn sup_distance_to<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        match self {
            QuantileFunction::Linear { .. } => {
                // compare on a fine grid; both sides are continuous
                (0..=4096)
                    .map(|i| {
                        let u = i as f64 / 4096.0;
                        (self.eval(u) - g(u)).abs()
                    })
                    .fold(0.0, f64::max)
            }
            QuantileFunction::Steps { cuts, values } => {
                let mut sup = 0.0_f64;
                for (k, &v) in values.iter().enumerate() {
                    let a = cuts[k];
                    let b = cuts.get(k + 1).copied().unwrap_or(1.0);
                    sup = sup.max((v - g(a)).abs()).max((v - g(b)).abs());
                }
                sup
            }
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        match self {
            QuantileFunction::Linear { lo, hi } => lo <= hi,
            QuantileFunction::Steps { values, .. } => values.windows(2).all(|w| w[0] <= w[1]),
        }
    }
}
