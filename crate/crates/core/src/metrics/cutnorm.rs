use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::GridGraphon;
use crate::numeric::pairwise_sum;

/// Largest block count for the exhaustive cut norm.
pub const MAX_EXHAUSTIVE_CUT_N: usize = 24;

/// Values closer than this are treated as ties when picking an optimum.
const TIE_TOL: f64 = 1e-12;

/// Symmetric signed step kernel with entries in [−1, 1]; in practice the
/// difference of two step graphons.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    n: usize,
    values: Vec<f64>,
}

impl StepKernel {
    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::validation(format!(
                "kernel needs n >= 1 and n*n values (n={n}, got {})",
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::validation(format!(
                        "range: kernel[{i}][{j}] = {v} is outside [-1,1]"
                    )));
                }
                if j > i && v != values[j * n + i] {
                    return Err(Error::validation(format!(
                        "symmetry: kernel[{i}][{j}] differs from kernel[{j}][{i}]"
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_row_major(rows.len(), rows.concat())
    }

    /// `a − b` for grids of equal size.
    pub fn difference(a: &GridGraphon, b: &GridGraphon) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::validation(format!(
                "kernel difference needs equal block counts ({} vs {})",
                a.n(),
                b.n()
            )));
        }
        let values = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x - y)
            .collect();
        Ok(Self { n: a.n(), values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// `|Σ_{i∈S, j∈T} K[i][j]| / n²`.
    pub fn block_integral(&self, s: &[usize], t: &[usize]) -> f64 {
        let terms: Vec<f64> = s
            .iter()
            .map(|&i| {
                let row = self.row(i);
                t.iter().map(|&j| row[j]).sum::<f64>()
            })
            .collect();
        pairwise_sum(&terms).abs() / (self.n * self.n) as f64
    }

    /// `Σ |K| / n²`, an upper bound for the cut norm.
    pub fn mean_abs(&self) -> f64 {
        let abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        pairwise_sum(&abs) / (self.n * self.n) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum CutNormMethod {
    Exhaustive,
    LocalSearch { restarts: u32, seed: u64 },
}

impl CutNormMethod {
    pub fn local_search(seed: u64) -> Self {
        CutNormMethod::LocalSearch { restarts: 32, seed }
    }
}

/// Cut norm together with the optimizing block subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutNormResult {
    pub value: f64,
    /// Sorted block indices.
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    pub method: CutNormMethod,
    pub iterations: u64,
}

impl CutNormResult {
    /// Recomputes `|∫_{S×T} K|` from the stored subsets.
    pub fn recompute(&self, k: &StepKernel) -> f64 {
        k.block_integral(&self.s, &self.t)
    }
}

/// `‖K‖□ = max_{S,T} |Σ_{S×T} K| / n²` over block subsets.
///
/// Exhaustive mode enumerates `S` only; for fixed `S` the best `T` takes
/// every column whose `S`-sum has the winning sign. Local search returns a
/// lower bound of the exhaustive value.
pub fn cut_norm(k: &StepKernel, method: CutNormMethod) -> Result<CutNormResult> {
    let (s, t, iterations) = match method {
        CutNormMethod::Exhaustive => {
            if k.n() > MAX_EXHAUSTIVE_CUT_N {
                return Err(Error::capacity(format!(
                    "exhaustive cut norm needs n <= {MAX_EXHAUSTIVE_CUT_N}, got n={}; use local search",
                    k.n()
                )));
            }
            let (s, t) = exhaustive(k);
            (s, t, 1u64 << k.n())
        }
        CutNormMethod::LocalSearch { restarts, seed } => {
            if restarts == 0 {
                return Err(Error::domain("local search needs at least one restart"));
            }
            local_search(k, restarts, seed)
        }
    };
    Ok(CutNormResult {
        value: k.block_integral(&s, &t),
        s,
        t,
        method,
        iterations,
    })
}

/// Lexicographic order on sorted index lists.
fn lex_cmp(a: &[usize], b: &[usize]) -> Ordering {
    a.cmp(b)
}

fn mask_to_list(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Best `T` for given column sums: positive or negative columns.
fn best_response(cols: &[f64]) -> (f64, bool) {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for &c in cols {
        if c > 0.0 {
            pos += c;
        } else {
            neg -= c;
        }
    }
    if neg > pos {
        (neg, false)
    } else {
        (pos, true)
    }
}

#[derive(Clone)]
struct Candidate {
    value: f64,
    s: Vec<usize>,
}

impl Candidate {
    /// Larger value wins; near-ties go to the lexicographically smaller `S`.
    fn better_than(&self, other: &Candidate) -> bool {
        if self.value > other.value + TIE_TOL {
            return true;
        }
        if (self.value - other.value).abs() <= TIE_TOL {
            return lex_cmp(&self.s, &other.s) == Ordering::Less;
        }
        false
    }
}

fn exhaustive(k: &StepKernel) -> (Vec<usize>, Vec<usize>) {
    let n = k.n();
    // high bits enumerate chunks in parallel; a Gray code walks the low bits
    let low = n.min(12);
    let high = n - low;
    let best = (0u32..1 << high)
        .into_par_iter()
        .map(|hi_bits| {
            let base_mask = hi_bits << low;
            let mut cols = vec![0.0; n];
            for i in low..n {
                if base_mask >> i & 1 == 1 {
                    for (c, v) in cols.iter_mut().zip(k.row(i)) {
                        *c += v;
                    }
                }
            }
            let mut mask = base_mask;
            let mut best = eval_mask(&cols, mask, n);
            for step in 1u32..1 << low {
                let bit = step.trailing_zeros() as usize;
                mask ^= 1 << bit;
                let sign = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
                for (c, v) in cols.iter_mut().zip(k.row(bit)) {
                    *c += sign * v;
                }
                let cand = eval_mask(&cols, mask, n);
                if cand.better_than(&best) {
                    best = cand;
                }
            }
            best
        })
        .reduce_with(|a, b| if b.better_than(&a) { b } else { a })
        .expect("at least one subset");
    // recompute the column sums of the winner exactly for the T choice
    let cols: Vec<f64> = (0..n)
        .map(|j| best.s.iter().map(|&i| k.get(i, j)).sum())
        .collect();
    let (_, positive) = best_response(&cols);
    let t = pick_t(&cols, positive);
    (best.s, t)
}

fn eval_mask(cols: &[f64], mask: u32, n: usize) -> Candidate {
    Candidate {
        value: best_response(cols).0,
        s: mask_to_list(mask, n),
    }
}

fn pick_t(cols: &[f64], positive: bool) -> Vec<usize> {
    cols.iter()
        .enumerate()
        .filter(|(_, &c)| if positive { c > 0.0 } else { c < 0.0 })
        .map(|(j, _)| j)
        .collect()
}

fn local_search(k: &StepKernel, restarts: u32, seed: u64) -> (Vec<usize>, Vec<usize>, u64) {
    let n = k.n();
    let runs: Vec<(Candidate, Vec<usize>, u64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            let mut in_s: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let mut best_obj = f64::NEG_INFINITY;
            let mut iters = 0u64;
            let t = loop {
                iters += 1;
                // best T for S
                let mut cols = vec![0.0; n];
                for i in (0..n).filter(|&i| in_s[i]) {
                    for (c, v) in cols.iter_mut().zip(k.row(i)) {
                        *c += v;
                    }
                }
                let t: Vec<usize> = (0..n).filter(|&j| sign * cols[j] > 0.0).collect();
                // best S for T
                let rows: Vec<f64> = (0..n)
                    .map(|i| t.iter().map(|&j| k.get(i, j)).sum::<f64>())
                    .collect();
                let next: Vec<bool> = rows.iter().map(|&r| sign * r > 0.0).collect();
                let obj: f64 = rows
                    .iter()
                    .zip(&next)
                    .filter(|(_, &b)| b)
                    .map(|(&r, _)| sign * r)
                    .sum();
                if obj <= best_obj + TIE_TOL || iters > 1000 {
                    break t;
                }
                best_obj = obj;
                in_s = next;
            };
            let s: Vec<usize> = (0..n).filter(|&i| in_s[i]).collect();
            let value = k.block_integral(&s, &t);
            (Candidate { value, s }, t, iters)
        })
        .collect();
    let total_iters = runs.iter().map(|r| r.2).sum();
    let mut best = &runs[0];
    for run in &runs[1..] {
        if run.0.better_than(&best.0) {
            best = run;
        }
    }
    (best.0.s.clone(), best.1.clone(), total_iters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kernel() {
        let k = StepKernel::from_row_major(3, vec![0.0; 9]).unwrap();
        let r = cut_norm(&k, CutNormMethod::Exhaustive).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.s.is_empty() && r.t.is_empty());
    }

    #[test]
    fn two_block_checkerboard() {
        let k = StepKernel::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let r = cut_norm(&k, CutNormMethod::Exhaustive).unwrap();
        assert_eq!(r.value, 0.125);
        assert_eq!((r.s.as_slice(), r.t.as_slice()), (&[0][..], &[0][..]));
    }

    #[test]
    fn checkerboard_matches_subset_enumeration() {
        // all 16 (S, T) pairs by brute force
        let k = StepKernel::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let mut best: f64 = 0.0;
        for s in 0..4u32 {
            for t in 0..4u32 {
                best = best.max(k.block_integral(&mask_to_list(s, 2), &mask_to_list(t, 2)));
            }
        }
        assert_eq!(best, 0.125);
    }

    #[test]
    fn constant_kernel() {
        let k = StepKernel::from_row_major(4, vec![0.3; 16]).unwrap();
        let r = cut_norm(&k, CutNormMethod::Exhaustive).unwrap();
        assert!((r.value - 0.3).abs() < 1e-15);
        assert_eq!(r.s, vec![0, 1, 2, 3]);
        assert_eq!(r.t, vec![0, 1, 2, 3]);
    }

    #[test]
    fn capacity_and_validation() {
        let k = StepKernel::from_row_major(25, vec![0.0; 625]).unwrap();
        assert!(matches!(
            cut_norm(&k, CutNormMethod::Exhaustive),
            Err(Error::Capacity(_))
        ));
        assert!(StepKernel::from_rows(&[vec![0.0, 1.5], vec![1.5, 0.0]]).is_err());
        assert!(StepKernel::from_rows(&[vec![0.0, 0.5], vec![0.4, 0.0]]).is_err());
    }

    #[test]
    fn results_certify_themselves() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=9 {
            let k = random_kernel(&mut rng, n);
            for method in [CutNormMethod::Exhaustive, CutNormMethod::local_search(4)] {
                let r = cut_norm(&k, method).unwrap();
                assert!((r.recompute(&k) - r.value).abs() <= 1e-12);
                assert!(r.value <= k.mean_abs() + 1e-12);
            }
        }
    }

    pub(crate) fn random_kernel(rng: &mut ChaCha8Rng, n: usize) -> StepKernel {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = rng.gen_range(-1.0..=1.0);
                v[i * n + j] = x;
                v[j * n + i] = x;
            }
        }
        StepKernel::from_row_major(n, v).unwrap()
    }
}
