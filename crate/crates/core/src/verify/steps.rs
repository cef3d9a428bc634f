use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::facts::Facts;
use crate::error::{Error, Result};
use crate::functionals::{
    conditional_h_given_degree, conditional_mass, degree, degree_law, level_functional,
    level_functional_counting, level_law, DegreeProfile, LevelProfile,
};
use crate::graphon::{discretize, Discretization, GraphonHandle};
use crate::numeric::{pairwise_sum, piecewise_gauss, UnitPoint};
use crate::transform::monotone_rearrangement;

/// Points used by the degree-formula step.
pub const DEGREE_FORMULA_POINTS: usize = 10_000;
/// Random windows used by the conditional-mass step.
pub const CONDITIONAL_PAIRS: usize = 200;
/// Grid size of the cell-average cross-check of `h`.
pub const H_GRID_N: usize = 1024;
/// Bin widths `2⁻⁴ … 2⁻¹⁰` of the differentiation table.
pub const EPSILON_EXPONENTS: std::ops::RangeInclusive<u32> = 4..=10;
/// Bin width at which every interior bin must sit within [`BIN_TOLERANCE`].
pub const REFERENCE_EPSILON_EXPONENT: u32 = 6;
pub const BIN_TOLERANCE: f64 = 0.01;

/// One numerical comparison inside a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCheck {
    pub name: String,
    pub claimed: f64,
    pub computed: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SubCheck {
    fn new(name: impl Into<String>, claimed: f64, computed: f64, tolerance: f64) -> Self {
        let deviation = (claimed - computed).abs();
        Self::with_deviation(name, claimed, computed, deviation, tolerance)
    }

    fn with_deviation(
        name: impl Into<String>,
        claimed: f64,
        computed: f64,
        deviation: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            claimed,
            computed,
            deviation,
            tolerance,
            pass: deviation <= tolerance,
        }
    }
}

/// One row of the shrinking-bin table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub interior_bins: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Outcome of one step of the argument.
///
/// `deviation` is `|claimed − computed|` for scalar quantities and a sup
/// distance for distribution-valued ones; `pass` requires it to be within
/// `tolerance` and every sub-check to pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofStepReport {
    pub step: String,
    pub quantity: String,
    pub claimed: f64,
    pub computed: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub checks: Vec<SubCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<ConvergenceRow>,
}

impl ProofStepReport {
    fn from_checks(step: &str, quantity: &str, headline: SubCheck, checks: Vec<SubCheck>) -> Self {
        let pass = headline.pass && checks.iter().all(|c| c.pass);
        Self {
            step: step.to_string(),
            quantity: quantity.to_string(),
            claimed: headline.claimed,
            computed: headline.computed,
            deviation: headline.deviation,
            tolerance: headline.tolerance,
            pass,
            checks,
            table: vec![],
        }
    }
}

/// Runs the steps of the argument against a closed-form family (possibly
/// pulled back along a measure-preserving map) at resolution `m`.
#[derive(Debug, Clone)]
pub struct Verifier {
    pub(crate) w: GraphonHandle,
    pub(crate) facts: Facts,
    pub(crate) m: usize,
    pub(crate) seed: u64,
    pub(crate) d: DegreeProfile,
    pub(crate) h: LevelProfile,
}

impl Verifier {
    pub fn new(w: &GraphonHandle, m: usize, seed: u64) -> Result<Self> {
        let facts = Facts::from_handle(w)?;
        if m < 1 << 10 {
            return Err(Error::domain(format!(
                "verification needs resolution m >= 1024, got {m}"
            )));
        }
        let (d, h) = rayon::join(|| degree(w, m), || level_functional(w, m, 0.0));
        Ok(Self {
            w: w.clone(),
            facts,
            m,
            seed,
            d: d?,
            h: h?,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Exceptional-set allowance standing in for "almost everywhere".
    pub fn null_allowance(&self) -> f64 {
        8.0 / self.m as f64
    }

    /// `k` steps of the sample lattice, which a pulled-back grid coarsens.
    fn lattice(&self, k: f64) -> f64 {
        k * self.facts.stretch() as f64 / self.m as f64
    }

    pub fn degree_profile(&self) -> &DegreeProfile {
        &self.d
    }

    pub fn level_profile(&self) -> &LevelProfile {
        &self.h
    }

    /// Quadrature of `y ↦ W(x, y)` against the closed-form degree.
    pub fn check_degree_formula(&self) -> ProofStepReport {
        let quad = |x: f64| {
            piecewise_gauss(|y| self.w.value(x, y), 0.0, 1.0, &self.w.row_breakpoints(x))
        };
        let n = DEGREE_FORMULA_POINTS;
        let max_err = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = (i as f64 + 0.5) / n as f64;
                (quad(x) - self.facts.degree(x)).abs()
            })
            .reduce(|| 0.0, f64::max);
        let headline = SubCheck::with_deviation("max error at interior points", 0.0, max_err, max_err, 1e-10);
        let checks = [0.3, 0.8]
            .iter()
            .map(|&x| SubCheck::new(format!("D({x})"), self.facts.degree(x), quad(x), 1e-10))
            .collect();
        ProofStepReport::from_checks("degree-formula", "sup |quadrature D − closed form|", headline, checks)
    }

    /// The degree law against its closed-form CDF.
    pub fn check_degree_law(&self) -> Result<ProofStepReport> {
        let law = degree_law(&self.d)?;
        let tol = self.lattice(2.0);
        let sup = law.sup_distance_to_cdf(|r| self.facts.degree_cdf(r), &self.facts.degree_jumps());
        let headline = SubCheck::with_deviation("sup_r |F_D(r) − F(r)|", 0.0, sup, sup, tol);
        let checks = [0.0001, 0.1, 0.25]
            .iter()
            .map(|&r| SubCheck::new(format!("F_D({r})"), self.facts.degree_cdf(r), law.cdf(r), tol))
            .collect();
        Ok(ProofStepReport::from_checks("degree-law", "Leb{D <= r}", headline, checks))
    }

    /// The monotone rearrangement of the degree law against the forced
    /// increasing degree function.
    pub fn check_forced_degree(&self) -> Result<ProofStepReport> {
        let q = monotone_rearrangement(&degree_law(&self.d)?);
        let tol = self.lattice(2.0);
        let sup = q.sup_distance_to(|u| self.facts.quantile(u));
        let headline = SubCheck::with_deviation("sup_u |Q(u) − D₁(u)|", 0.0, sup, sup, tol);
        let mut checks: Vec<SubCheck> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&u| SubCheck::new(format!("D₁({u})"), self.facts.quantile(u), q.eval(u), tol))
            .collect();
        let monotone = if q.is_nondecreasing() { 0.0 } else { 1.0 };
        checks.push(SubCheck::new("nondecreasing", 0.0, monotone, 0.0));
        Ok(ProofStepReport::from_checks("forced-degree", "quantile of the degree law", headline, checks))
    }

    /// The level functional: pointwise values, its law, and two independent
    /// numerical routes.
    pub fn check_h_functional(&self) -> Result<ProofStepReport> {
        let m = self.m;
        let law = level_law(&self.h)?;
        let sup = law.sup_distance_to_cdf(|v| self.facts.h_cdf(v), &self.facts.h_jumps());
        let headline = SubCheck::with_deviation("sup_v |F_h(v) − F(v)|", 0.0, sup, sup, self.lattice(1.0));

        let mismatched = self
            .h
            .values
            .iter()
            .enumerate()
            .filter(|(i, &v)| (v - self.facts.level(midpoint(*i, m))).abs() > 1e-12)
            .count();
        let mut checks = vec![SubCheck::new(
            "measure where h differs from its closed form",
            0.0,
            mismatched as f64 / m as f64,
            self.null_allowance(),
        )];
        for p in [UnitPoint::new(3, 10), UnitPoint::new(8, 10)] {
            checks.push(SubCheck::new(
                format!("h({})", p.to_f64()),
                self.facts.level(p.to_f64()),
                self.w.level_at(p, 0.0),
                1e-12,
            ));
        }

        // counting route on a coarse set of rows
        let (rows, q) = (512, 4096);
        let counted = level_functional_counting(&self.w, rows, 0.0, q)?;
        let worst = counted
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - self.facts.level(midpoint(i, rows))).abs())
            .fold(0.0, f64::max);
        checks.push(SubCheck::with_deviation("counting route, max row error", 0.0, worst, worst, 16.0 / q as f64));

        // cell-average grid route
        let n = H_GRID_N;
        let grid = GraphonHandle::grid(discretize(&self.w, n, Discretization::CellAverage)?);
        let grid_h = level_functional(&grid, n, grid.default_eta())?;
        // boundary cells shift h by a few 1/n per jump; count rows that move further
        let band = 4.0 * self.facts.jump_count() as f64 / n as f64;
        let off = grid_h
            .values
            .iter()
            .enumerate()
            .filter(|(i, &v)| (v - self.facts.level(midpoint(*i, n))).abs() > band)
            .count();
        checks.push(SubCheck::new(
            format!("grid n={n}, measure where h moves by more than {band}"),
            0.0,
            off as f64 / n as f64,
            band,
        ));
        Ok(ProofStepReport::from_checks("h-functional", "law of h", headline, checks))
    }

    /// `∫ h · 1{D₁(a) < D < D₁(b)}` over seeded windows `0 < a < b < 1`.
    pub fn check_conditional_mass(&self) -> ProofStepReport {
        let tol = self.lattice(4.0);
        let f = &self.facts;
        let check = |a: f64, b: f64| {
            let (lo, hi) = (f.quantile(a), f.quantile(b));
            SubCheck::new(
                format!("({a}, {b})"),
                f.h_mass(lo, hi),
                conditional_mass(&self.d, &self.h, lo, hi),
                tol,
            )
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let pairs: Vec<(f64, f64)> = (0..CONDITIONAL_PAIRS)
            .map(|_| {
                let (x, y): (f64, f64) = (rng.gen(), rng.gen());
                (x.min(y), x.max(y))
            })
            .collect();
        let random: Vec<SubCheck> = pairs.par_iter().map(|&(a, b)| check(a, b)).collect();
        let worst = random
            .iter()
            .max_by(|x, y| x.deviation.total_cmp(&y.deviation))
            .expect("nonempty")
            .clone();
        let headline = SubCheck {
            name: format!("worst of {CONDITIONAL_PAIRS} seeded windows {}", worst.name),
            pass: random.iter().all(|c| c.pass),
            ..worst
        };
        let checks = [(0.2, 0.6), (0.0, 1.0), (0.5, 0.5)]
            .iter()
            .map(|&(a, b)| check(a, b))
            .collect();
        ProofStepReport::from_checks(
            "conditional-mass",
            "∫ h·1{D₁(a) < D < D₁(b)}",
            headline,
            checks,
        )
    }

    /// Averages of the forced `h₁` over shrinking bins `[a, a + ε)`.
    ///
    /// `h₁` is read off by ranking points by degree: the increasing version
    /// puts the `k`-th smallest degree at `x = (k + ½)/m`. Points with equal
    /// degree are indistinguishable to every invariant, so each tie group
    /// carries its mean `h`. Differencing the cumulative mass over a bin
    /// gives its mean.
    pub fn check_forced_h1(&self) -> Result<ProofStepReport> {
        let m = self.m;
        let h1 = forced_h1_by_rank(&self.d.values, &self.h.values);
        let mut table = Vec::new();
        let mut checks = Vec::new();
        for e in EPSILON_EXPONENTS {
            let bins = 1usize << e;
            let eps = 1.0 / bins as f64;
            let tol = 4.0 / (eps * m as f64);
            let devs: Vec<(f64, f64)> = (1..bins - 1)
                .map(|j| {
                    let (lo, hi) = (j * m / bins, (j + 1) * m / bins);
                    let computed = pairwise_sum(&h1[lo..hi]) / (hi - lo) as f64;
                    let claimed = self
                        .facts
                        .h1_bin_mean(lo as f64 / m as f64, hi as f64 / m as f64);
                    (claimed, computed)
                })
                .collect();
            let max_dev = devs.iter().map(|(c, v)| (c - v).abs()).fold(0.0, f64::max);
            table.push(ConvergenceRow {
                epsilon: eps,
                interior_bins: devs.len(),
                max_deviation: max_dev,
                tolerance: tol,
                pass: max_dev <= tol,
            });
            if e == REFERENCE_EPSILON_EXPONENT {
                let worst = devs
                    .iter()
                    .copied()
                    .max_by(|x, y| (x.0 - x.1).abs().total_cmp(&(y.0 - y.1).abs()))
                    .expect("interior bins");
                checks.push(SubCheck::new(
                    format!("ε=2^-{e}, worst interior bin"),
                    worst.0,
                    worst.1,
                    BIN_TOLERANCE,
                ));
            }
        }

        // conditional means of h over equal-width degree bins
        let report = conditional_h_given_degree(&self.d, &self.h, 1 << REFERENCE_EPSILON_EXPONENT)?;
        let mut worst_bin: Option<SubCheck> = None;
        for b in &report.bins {
            let claimed = if report.bins.len() == 1 && b.lo == b.hi {
                self.facts.h_mean()
            } else {
                let mass = self.facts.degree_mass(b.lo, b.hi);
                if mass > 0.0 {
                    self.facts.h_mass(b.lo, b.hi) / mass
                } else {
                    continue;
                }
            };
            let c = SubCheck::new(
                format!("E[h | D in [{:.6}, {:.6})]", b.lo, b.hi),
                claimed,
                b.mean_h,
                BIN_TOLERANCE,
            );
            if worst_bin.as_ref().map_or(true, |w| c.deviation > w.deviation) {
                worst_bin = Some(c);
            }
        }
        checks.extend(worst_bin);

        let finest = table.last().expect("table rows").clone();
        let headline = SubCheck {
            name: "shrinking bins, every ε".to_string(),
            claimed: 0.0,
            computed: finest.max_deviation,
            deviation: table
                .iter()
                .map(|r| r.max_deviation / r.tolerance)
                .fold(0.0, f64::max),
            tolerance: 1.0,
            pass: table.iter().all(|r| r.pass),
        };
        let mut report = ProofStepReport::from_checks(
            "forced-h1",
            "bin means of h₁ (deviation as a fraction of 4/(εm))",
            headline,
            checks,
        );
        report.table = table;
        Ok(report)
    }

    /// All steps in fixed order.
    pub fn steps(&self) -> Result<Vec<ProofStepReport>> {
        let ((a, b), (c, d)) = rayon::join(
            || rayon::join(|| self.check_degree_formula(), || self.check_degree_law()),
            || rayon::join(|| self.check_forced_degree(), || self.check_h_functional()),
        );
        let (e, f) = rayon::join(|| self.check_conditional_mass(), || self.check_forced_h1());
        Ok(vec![a, b?, c?, d?, e, f?])
    }
}

/// Sort order of the degree profile with ties kept in index order, and
/// the tie groups as ranges of that order.
pub(crate) fn rank_groups(d: &[f64]) -> (Vec<usize>, Vec<std::ops::Range<usize>>) {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let mut groups = Vec::new();
    let mut start = 0;
    for k in 1..=order.len() {
        if k == order.len() || d[order[k]] != d[order[start]] {
            groups.push(start..k);
            start = k;
        }
    }
    (order, groups)
}

/// `h` in degree-rank order with every tie group replaced by its mean.
pub(crate) fn forced_h1_by_rank(d: &[f64], h: &[f64]) -> Vec<f64> {
    let (order, groups) = rank_groups(d);
    let mut out = vec![0.0; d.len()];
    for g in groups {
        let vals: Vec<f64> = order[g.clone()].iter().map(|&i| h[i]).collect();
        let mean = pairwise_sum(&vals) / vals.len() as f64;
        out[g].fill(mean);
    }
    out
}

fn midpoint(i: usize, m: usize) -> f64 {
    (i as f64 + 0.5) / m as f64
}
