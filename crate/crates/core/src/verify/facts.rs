//! Closed forms that the pipeline compares its numbers against.

use crate::error::{Error, Result};
use crate::graphon::{AnalyticGraphon, EvalMode, GraphonHandle, Representation};
use crate::transform::{MeasurePreservingMap, Primitive};

use super::Verdict;

/// `|(lo, hi) ∩ (a, b)|`.
fn overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

/// An atom of the degree law: value, the rank interval `[u_lo, u_hi]` it
/// occupies under the quantile function, and the mean of `h` on it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DegreeAtom {
    pub value: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    pub mean_h: f64,
}

/// Closed-form facts about an analytic family, seen through an optional
/// measure-preserving map. Law-level facts do not depend on the map.
#[derive(Debug, Clone)]
pub(crate) struct Facts {
    family: AnalyticGraphon,
    map: Option<MeasurePreservingMap>,
}

impl Facts {
    pub fn from_handle(w: &GraphonHandle) -> Result<Self> {
        if w.mode() != EvalMode::Exact {
            return Err(Error::validation(
                "verification needs exact evaluation, not a cell-averaged handle",
            ));
        }
        match w.representation() {
            Representation::Analytic(a) => Ok(Self {
                family: *a,
                map: None,
            }),
            Representation::Pullback { base, map } => {
                let inner = Self::from_handle(base)?;
                let map = match inner.map {
                    Some(rest) => map.clone().then(rest),
                    None => map.clone(),
                };
                Ok(Self {
                    family: inner.family,
                    map: Some(map),
                })
            }
            Representation::Grid(_) => Err(Error::validation(
                "verification needs a closed-form family (optionally pulled back), not a grid",
            )),
        }
    }

    fn pull(&self, x: f64) -> f64 {
        self.map.as_ref().map_or(x, |m| m.apply(x))
    }

    /// Number of points where `h` or `D` can jump, seen through the map:
    /// one for the bare families, more for pull-backs whose map folds or
    /// cuts the interval. Grid tolerances scale with it.
    pub fn jump_count(&self) -> usize {
        match &self.map {
            None => 1,
            Some(map) => {
                let mut pts = map.preimages(0.5);
                pts.extend(map.discontinuities());
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                pts.len().max(1)
            }
        }
    }

    /// Product of the expand factors in the map. Midpoints of an m-point
    /// grid land on a lattice this many times coarser.
    pub fn stretch(&self) -> usize {
        self.map.as_ref().map_or(1, |map| {
            map.ops()
                .iter()
                .map(|op| match op {
                    Primitive::Expand { m } => *m,
                    Primitive::Exchange { .. } => 1,
                })
                .product()
        })
    }

    /// `1 − 2t` for the threshold family.
    fn shift(&self) -> f64 {
        match self.family {
            AnalyticGraphon::Threshold { t } => 1.0 - 2.0 * t,
            _ => 0.0,
        }
    }

    /// Value of `h` on the constant family.
    fn constant_h(p: f64) -> f64 {
        if p != 0.0 && p != 0.5 {
            1.0
        } else {
            0.0
        }
    }

    pub fn degree(&self, x: f64) -> f64 {
        let x = self.pull(x);
        match self.family {
            AnalyticGraphon::Counterexample => {
                if x < 0.5 {
                    x / 2.0
                } else {
                    (x - 0.5) / 2.0
                }
            }
            AnalyticGraphon::Constant { p } => p,
            AnalyticGraphon::Product => x / 2.0,
            AnalyticGraphon::Threshold { .. } => (x + self.shift()).clamp(0.0, 1.0),
        }
    }

    /// `h(x)` away from null sets.
    pub fn level(&self, x: f64) -> f64 {
        let x = self.pull(x);
        match self.family {
            AnalyticGraphon::Counterexample => {
                if x < 0.5 {
                    0.5
                } else {
                    0.0
                }
            }
            AnalyticGraphon::Constant { p } => Self::constant_h(p),
            AnalyticGraphon::Product => 1.0,
            AnalyticGraphon::Threshold { .. } => (x + self.shift()).clamp(0.0, 1.0),
        }
    }

    /// `Leb{D ≤ r}`.
    pub fn degree_cdf(&self, r: f64) -> f64 {
        match self.family {
            AnalyticGraphon::Counterexample => (4.0 * r).clamp(0.0, 1.0),
            AnalyticGraphon::Constant { p } => {
                if r >= p {
                    1.0
                } else {
                    0.0
                }
            }
            AnalyticGraphon::Product => (2.0 * r).clamp(0.0, 1.0),
            AnalyticGraphon::Threshold { .. } => {
                if r < 0.0 {
                    0.0
                } else if r >= 1.0 {
                    1.0
                } else {
                    (r - self.shift()).clamp(0.0, 1.0)
                }
            }
        }
    }

    pub fn degree_jumps(&self) -> Vec<f64> {
        self.degree_atoms().iter().map(|a| a.value).collect()
    }

    pub fn degree_atoms(&self) -> Vec<DegreeAtom> {
        match self.family {
            AnalyticGraphon::Constant { p } => vec![DegreeAtom {
                value: p,
                u_lo: 0.0,
                u_hi: 1.0,
                mean_h: Self::constant_h(p),
            }],
            AnalyticGraphon::Threshold { .. } => {
                let c = self.shift();
                let mut atoms = Vec::new();
                if c < 0.0 {
                    atoms.push(DegreeAtom {
                        value: 0.0,
                        u_lo: 0.0,
                        u_hi: -c,
                        mean_h: 0.0,
                    });
                }
                if c > 0.0 {
                    atoms.push(DegreeAtom {
                        value: 1.0,
                        u_lo: 1.0 - c,
                        u_hi: 1.0,
                        mean_h: 1.0,
                    });
                }
                atoms
            }
            _ => vec![],
        }
    }

    /// The nondecreasing function with the same law as `D`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self.family {
            AnalyticGraphon::Counterexample => u / 4.0,
            AnalyticGraphon::Constant { p } => p,
            AnalyticGraphon::Product => u / 2.0,
            AnalyticGraphon::Threshold { .. } => (u + self.shift()).clamp(0.0, 1.0),
        }
    }

    /// CDF of the law of `h`.
    pub fn h_cdf(&self, v: f64) -> f64 {
        let step = |at: f64| if v >= at { 1.0 } else { 0.0 };
        match self.family {
            AnalyticGraphon::Counterexample => 0.5 * step(0.0) + 0.5 * step(0.5),
            AnalyticGraphon::Constant { p } => step(Self::constant_h(p)),
            AnalyticGraphon::Product => step(1.0),
            AnalyticGraphon::Threshold { .. } => self.degree_cdf(v),
        }
    }

    pub fn h_jumps(&self) -> Vec<f64> {
        match self.family {
            AnalyticGraphon::Counterexample => vec![0.0, 0.5],
            AnalyticGraphon::Constant { p } => vec![Self::constant_h(p)],
            AnalyticGraphon::Product => vec![1.0],
            AnalyticGraphon::Threshold { .. } => self.degree_jumps(),
        }
    }

    pub fn h_mean(&self) -> f64 {
        match self.family {
            AnalyticGraphon::Counterexample => 0.25,
            AnalyticGraphon::Constant { p } => Self::constant_h(p),
            AnalyticGraphon::Product => 1.0,
            AnalyticGraphon::Threshold { .. } => {
                let c = self.shift();
                // ∫ clamp(x + c, 0, 1) dx
                let (rlo, rhi) = (c.max(0.0), (1.0 + c).min(1.0));
                (rhi * rhi - rlo * rlo) / 2.0 + c.max(0.0)
            }
        }
    }

    /// Range of the continuous part of the threshold degree.
    fn threshold_range(&self) -> (f64, f64) {
        let c = self.shift();
        (c.max(0.0), (1.0 + c).min(1.0))
    }

    /// `∫ h · 1{lo < D < hi}`.
    pub fn h_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self.family {
            AnalyticGraphon::Counterexample => overlap(lo, hi, 0.0, 0.25),
            AnalyticGraphon::Constant { p } => {
                if lo < p && p < hi {
                    Self::constant_h(p)
                } else {
                    0.0
                }
            }
            AnalyticGraphon::Product => 2.0 * overlap(lo, hi, 0.0, 0.5),
            AnalyticGraphon::Threshold { .. } => {
                let (rlo, rhi) = self.threshold_range();
                let l = lo.clamp(rlo, rhi);
                let h = hi.clamp(rlo, rhi);
                let atom_one = if self.shift() > 0.0 && lo < 1.0 && 1.0 < hi {
                    self.shift()
                } else {
                    0.0
                };
                (h * h - l * l) / 2.0 + atom_one
            }
        }
    }

    /// `Leb{lo < D < hi}`.
    pub fn degree_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match self.family {
            AnalyticGraphon::Counterexample => 4.0 * overlap(lo, hi, 0.0, 0.25),
            AnalyticGraphon::Constant { p } => {
                if lo < p && p < hi {
                    1.0
                } else {
                    0.0
                }
            }
            AnalyticGraphon::Product => 2.0 * overlap(lo, hi, 0.0, 0.5),
            AnalyticGraphon::Threshold { .. } => {
                let (rlo, rhi) = self.threshold_range();
                let atoms: f64 = self
                    .degree_atoms()
                    .iter()
                    .filter(|a| lo < a.value && a.value < hi)
                    .map(|a| a.u_hi - a.u_lo)
                    .sum();
                overlap(lo, hi, rlo, rhi) + atoms
            }
        }
    }

    /// `(1/(b − a)) ∫_a^b h₁` for the increasing version `h₁`: the open
    /// degree window `(Q(a), Q(b))` plus the share of each degree atom
    /// whose rank interval meets `[a, b]`.
    pub fn h1_bin_mean(&self, a: f64, b: f64) -> f64 {
        let window = self.h_mass(self.quantile(a), self.quantile(b));
        let atoms: f64 = self
            .degree_atoms()
            .iter()
            .map(|at| overlap(a, b, at.u_lo, at.u_hi) * at.mean_h)
            .sum();
        (window + atoms) / (b - a)
    }

    pub fn expected_verdict(&self) -> Verdict {
        match self.family {
            AnalyticGraphon::Counterexample => Verdict::Contradiction,
            _ => Verdict::NoContradiction,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn facts(a: AnalyticGraphon) -> Facts {
        Facts::from_handle(&GraphonHandle::analytic(a)).unwrap()
    }

    #[test]
    fn counterexample_facts() {
        let f = facts(AnalyticGraphon::Counterexample);
        assert_eq!(f.degree_cdf(0.1), 0.4);
        assert_eq!(f.degree_cdf(0.25), 1.0);
        assert_eq!(f.quantile(0.5), 0.125);
        assert!((f.h_mass(0.2 / 4.0, 0.6 / 4.0) - 0.1).abs() < 1e-15);
        assert_eq!(f.h_mass(0.0, 0.25), 0.25);
        assert_eq!(f.h1_bin_mean(0.3, 0.4), 0.25);
    }

    #[test]
    fn threshold_facts_are_consistent() {
        for t in [0.2, 0.5, 0.7] {
            let f = facts(AnalyticGraphon::Threshold { t });
            // total masses
            assert!((f.degree_mass(-1.0, 2.0) - 1.0).abs() < 1e-15);
            assert!((f.h_mass(-1.0, 2.0) - f.h_mean()).abs() < 1e-15);
            // h₁ = Q for this family, so bin means are averages of Q
            let direct = (0..1000)
                .map(|i| f.quantile(0.3 + 0.2 * (i as f64 + 0.5) / 1000.0))
                .sum::<f64>()
                / 1000.0;
            assert!((f.h1_bin_mean(0.3, 0.5) - direct).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_forces_its_own_level() {
        let f = facts(AnalyticGraphon::Constant { p: 0.25 });
        assert_eq!(f.h1_bin_mean(0.1, 0.2), 1.0);
        assert_eq!(f.h_mean(), 1.0);
    }

    #[test]
    fn pullbacks_compose_maps() {
        let w = crate::transform::pullback(
            &GraphonHandle::counterexample(),
            &MeasurePreservingMap::swap_halves(),
        );
        let f = Facts::from_handle(&w).unwrap();
        assert_eq!(f.level(0.3), 0.0);
        assert_eq!(f.level(0.8), 0.5);
        assert!(Facts::from_handle(&GraphonHandle::grid(
            crate::graphon::GridGraphon::constant(2, 0.1).unwrap()
        ))
        .is_err());
    }
}
