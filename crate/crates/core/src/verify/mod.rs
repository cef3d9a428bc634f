//! Step-by-step numerical check that the counterexample graphon has no
//! equivalent version with a weakly increasing degree function, with
//! closed-form control families run through the same pipeline.

mod certificate;
mod facts;
mod steps;

pub use certificate::{
    ContradictionCertificate, Verdict, CERTIFICATE_LATTICE, TV_THRESHOLD,
};
pub use steps::{
    ConvergenceRow, ProofStepReport, SubCheck, Verifier, BIN_TOLERANCE, CONDITIONAL_PAIRS,
    DEGREE_FORMULA_POINTS, EPSILON_EXPONENTS, H_GRID_N, REFERENCE_EPSILON_EXPONENT,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{discretize, Discretization, GraphonHandle, MAX_GRID_N};
use crate::metrics::l1_distance;
use crate::transform::degree_sort;

/// Full pipeline output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub graphon: String,
    pub m: usize,
    pub seed: u64,
    pub steps: Vec<ProofStepReport>,
    pub certificate: ContradictionCertificate,
    pub expected_verdict: Verdict,
}

impl VerificationReport {
    pub fn all_steps_pass(&self) -> bool {
        self.steps.iter().all(|s| s.pass)
    }

    /// Every step passes and the verdict is the one the family should get.
    pub fn success(&self) -> bool {
        self.all_steps_pass() && self.certificate.verdict == self.expected_verdict
    }
}

impl Verifier {
    pub fn emit_contradiction(&self) -> Result<ContradictionCertificate> {
        certificate::certificate(self)
    }

    pub fn expected_verdict(&self) -> Verdict {
        self.facts.expected_verdict()
    }

    pub fn run(&self) -> Result<VerificationReport> {
        let (steps, cert) = rayon::join(|| self.steps(), || self.emit_contradiction());
        Ok(VerificationReport {
            graphon: self.w.describe(),
            m: self.m,
            seed: self.seed,
            steps: steps?,
            certificate: cert?,
            expected_verdict: self.expected_verdict(),
        })
    }
}

/// Runs every step and the certificate.
pub fn verify(w: &GraphonHandle, m: usize, seed: u64) -> Result<VerificationReport> {
    Verifier::new(w, m, seed)?.run()
}

/// L¹ distance between degree-sorted discretizations at consecutive sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub n: usize,
    pub next: usize,
    pub l1: f64,
}

/// For consecutive `n < n'` in `n_list`, the L¹ distance between
/// `degree_sort(discretize(W, n))` and `degree_sort(discretize(W, n'))`
/// (cell averages, compared on the common refinement).
///
/// If these distances tended to zero the sorted grids would converge in L¹
/// to a graphon equivalent to `W` with increasing degree function.
pub fn sorted_discretization_divergence(
    w: &GraphonHandle,
    n_list: &[usize],
) -> Result<Vec<DivergenceRow>> {
    if n_list.len() < 2 || n_list.windows(2).any(|p| p[0] >= p[1]) || n_list[0] == 0 {
        return Err(Error::validation(
            "n_list needs at least two strictly increasing positive sizes",
        ));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n > MAX_GRID_N) {
        return Err(Error::capacity(format!(
            "grid size {n} exceeds {MAX_GRID_N}"
        )));
    }
    let sorted: Vec<_> = n_list
        .par_iter()
        .map(|&n| discretize(w, n, Discretization::CellAverage).map(|g| degree_sort(&g).0))
        .collect::<Result<_>>()?;
    n_list
        .windows(2)
        .zip(sorted.windows(2))
        .map(|(ns, gs)| {
            Ok(DivergenceRow {
                n: ns[0],
                next: ns[1],
                l1: l1_distance(&gs[0], &gs[1])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::AnalyticGraphon;

    #[test]
    fn counterexample_pipeline_small() {
        let r = verify(&GraphonHandle::counterexample(), 1 << 12, 7).unwrap();
        for s in &r.steps {
            assert!(s.pass, "{} failed: {:?}", s.step, s);
        }
        assert_eq!(r.certificate.tv, 1.0);
        assert_eq!(r.certificate.verdict, Verdict::Contradiction);
        assert_eq!(r.certificate.forced_h1, 0.25);
        assert!(r.success());
    }

    #[test]
    fn controls_do_not_contradict() {
        for a in [
            AnalyticGraphon::Constant { p: 0.25 },
            AnalyticGraphon::Product,
            AnalyticGraphon::Threshold { t: 0.5 },
            AnalyticGraphon::Threshold { t: 0.3 },
        ] {
            let r = verify(&GraphonHandle::analytic(a), 1 << 12, 7).unwrap();
            for s in &r.steps {
                assert!(s.pass, "{}: {} failed: {:?}", a.describe(), s.step, s);
            }
            assert_eq!(r.certificate.verdict, Verdict::NoContradiction, "{}", a.describe());
        }
    }

    #[test]
    fn divergence_rejects_bad_lists() {
        let w = GraphonHandle::counterexample();
        assert!(sorted_discretization_divergence(&w, &[8]).is_err());
        assert!(sorted_discretization_divergence(&w, &[16, 8]).is_err());
        assert!(matches!(
            sorted_discretization_divergence(&w, &[8, 8192]),
            Err(Error::Capacity(_))
        ));
    }
}
