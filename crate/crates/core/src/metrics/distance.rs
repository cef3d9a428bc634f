use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cutnorm::{cut_norm, CutNormMethod, StepKernel, MAX_EXHAUSTIVE_CUT_N};
use crate::error::{Error, Result};
use crate::functionals::EmpiricalDistribution;
use crate::graphon::{GridGraphon, MAX_GRID_N};
use crate::numeric::pairwise_sum;

/// Largest block count searched over all permutations.
pub const MAX_EXHAUSTIVE_PERM_N: usize = 8;

/// `∫∫ |A − B|`, resampling both grids to the lcm of their block counts.
pub fn l1_distance(a: &GridGraphon, b: &GridGraphon) -> Result<f64> {
    let l = a.n().lcm(&b.n());
    if l > MAX_GRID_N {
        return Err(Error::capacity(format!(
            "common grid of {} and {} blocks has {l} > {MAX_GRID_N} blocks",
            a.n(),
            b.n()
        )));
    }
    let (fa, fb) = (l / a.n(), l / b.n());
    let rows: Vec<f64> = (0..l)
        .into_par_iter()
        .map(|i| {
            let (ra, rb) = (a.row(i / fa), b.row(i / fb));
            let terms: Vec<f64> = (0..l).map(|j| (ra[j / fa] - rb[j / fb]).abs()).collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&rows) / (l * l) as f64)
}

/// `(∫∫ |A − B|²)^½` on the common grid.
pub fn l2_distance(a: &GridGraphon, b: &GridGraphon) -> Result<f64> {
    let l = a.n().lcm(&b.n());
    if l > MAX_GRID_N {
        return Err(Error::capacity(format!(
            "common grid of {} and {} blocks has {l} > {MAX_GRID_N} blocks",
            a.n(),
            b.n()
        )));
    }
    let (fa, fb) = (l / a.n(), l / b.n());
    let rows: Vec<f64> = (0..l)
        .into_par_iter()
        .map(|i| {
            let (ra, rb) = (a.row(i / fa), b.row(i / fb));
            let terms: Vec<f64> = (0..l).map(|j| (ra[j / fa] - rb[j / fb]).powi(2)).collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok((pairwise_sum(&rows) / (l * l) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum CutDistanceMethod {
    /// All permutations when `n ≤ 8`, annealing otherwise.
    Auto { seed: u64 },
    Exhaustive,
    Annealing {
        steps: u64,
        seed: u64,
        t_start: f64,
        t_end: f64,
    },
}

impl CutDistanceMethod {
    pub fn annealing(seed: u64) -> Self {
        CutDistanceMethod::Annealing {
            steps: 10_000,
            seed,
            t_start: 0.05,
            t_end: 1e-5,
        }
    }
}

/// Best relabeling found and the cut norm it achieves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutDistanceResult {
    /// `‖A − π·B‖□` for the reported `π`.
    pub value: f64,
    /// `(π·B)[a][b] = B[π[a]][π[b]]`.
    pub permutation: Vec<usize>,
    pub method: CutDistanceMethod,
    /// The permutations visited.
    pub evaluations: u64,
    /// True when the final cut norm was computed exhaustively, so `value`
    /// is a proven upper bound on δ□ of the two step graphons.
    pub certified: bool,
}

/// Upper bound on δ□(A, B) by searching block relabelings of `B`.
pub fn cut_distance_upper(
    a: &GridGraphon,
    b: &GridGraphon,
    method: CutDistanceMethod,
) -> Result<CutDistanceResult> {
    if a.n() != b.n() {
        return Err(Error::validation(format!(
            "cut distance search needs equal block counts ({} vs {})",
            a.n(),
            b.n()
        )));
    }
    let n = a.n();
    let method = match method {
        CutDistanceMethod::Auto { seed } if n > MAX_EXHAUSTIVE_PERM_N => {
            CutDistanceMethod::annealing(seed)
        }
        CutDistanceMethod::Auto { .. } => CutDistanceMethod::Exhaustive,
        m => m,
    };
    let (permutation, evaluations) = match method {
        CutDistanceMethod::Exhaustive => {
            if n > MAX_EXHAUSTIVE_PERM_N {
                return Err(Error::capacity(format!(
                    "permutation search needs n <= {MAX_EXHAUSTIVE_PERM_N}, got n={n}"
                )));
            }
            all_permutations(a, b)?
        }
        CutDistanceMethod::Annealing {
            steps,
            seed,
            t_start,
            t_end,
        } => {
            if !(t_start > 0.0 && t_end > 0.0 && t_end <= t_start) {
                return Err(Error::domain("annealing temperatures need 0 < t_end <= t_start"));
            }
            anneal(a, b, steps, seed, t_start, t_end)?
        }
        CutDistanceMethod::Auto { .. } => unreachable!("resolved above"),
    };
    let k = StepKernel::difference(a, &b.permuted(&permutation)?)?;
    let certified = n <= MAX_EXHAUSTIVE_CUT_N;
    let final_method = if certified {
        CutNormMethod::Exhaustive
    } else {
        CutNormMethod::local_search(0)
    };
    Ok(CutDistanceResult {
        value: cut_norm(&k, final_method)?.value,
        permutation,
        method,
        evaluations,
        certified,
    })
}

/// Exact cut norm for small kernels, local search otherwise.
fn quick_norm(k: &StepKernel) -> Result<f64> {
    if k.n() <= 10 {
        return Ok(cut_norm(k, CutNormMethod::Exhaustive)?.value);
    }
    let r = cut_norm(
        k,
        CutNormMethod::LocalSearch {
            restarts: 4,
            seed: 0,
        },
    )?;
    Ok(r.value)
}

fn all_permutations(a: &GridGraphon, b: &GridGraphon) -> Result<(Vec<usize>, u64)> {
    let n = a.n();
    // one branch per first element, each walked in lexicographic order
    let branches: Vec<(f64, Vec<usize>, u64)> = (0..n)
        .into_par_iter()
        .map(|first| -> Result<(f64, Vec<usize>, u64)> {
            let mut perm: Vec<usize> = std::iter::once(first)
                .chain((0..n).filter(|&v| v != first))
                .collect();
            let mut best = (f64::INFINITY, perm.clone());
            let mut count = 0u64;
            loop {
                count += 1;
                let k = StepKernel::difference(a, &b.permuted(&perm)?)?;
                let v = cut_norm(&k, CutNormMethod::Exhaustive)?.value;
                if v < best.0 {
                    best = (v, perm.clone());
                    if v == 0.0 {
                        break;
                    }
                }
                if !next_permutation(&mut perm[1..]) {
                    break;
                }
            }
            Ok((best.0, best.1, count))
        })
        .collect::<Result<_>>()?;
    let evaluations = branches.iter().map(|b| b.2).sum();
    // earliest branch wins ties
    let best = branches
        .into_iter()
        .reduce(|x, y| if y.0 < x.0 { y } else { x })
        .expect("n >= 1");
    Ok((best.1, evaluations))
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let Some(i) = (0..p.len() - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..p.len()).rev().find(|&j| p[j] > p[i]).expect("pivot exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Relabeling that matches the degree orders of the two grids.
fn degree_alignment(a: &GridGraphon, b: &GridGraphon) -> Vec<usize> {
    let order = |g: &GridGraphon| {
        let d = g.block_degrees();
        let mut idx: Vec<usize> = (0..g.n()).collect();
        idx.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
        idx
    };
    let (oa, ob) = (order(a), order(b));
    let mut perm = vec![0; a.n()];
    for (&ia, &ib) in oa.iter().zip(&ob) {
        perm[ia] = ib;
    }
    perm
}

fn anneal(
    a: &GridGraphon,
    b: &GridGraphon,
    steps: u64,
    seed: u64,
    t_start: f64,
    t_end: f64,
) -> Result<(Vec<usize>, u64)> {
    let n = a.n();
    let eval = |perm: &[usize]| -> Result<f64> {
        quick_norm(&StepKernel::difference(a, &b.permuted(perm)?)?)
    };
    let mut perm = degree_alignment(a, b);
    let mut current = eval(&perm)?;
    let mut best = (current, perm.clone());
    let mut evaluations = 1u64;
    if n < 2 {
        return Ok((best.1, evaluations));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cooling = (t_end / t_start).powf(1.0 / steps.max(1) as f64);
    let mut temp = t_start;
    for _ in 0..steps {
        if best.0 == 0.0 {
            break;
        }
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        perm.swap(i, j);
        let v = eval(&perm)?;
        evaluations += 1;
        let accept = v <= current || rng.gen::<f64>() < ((current - v) / temp).exp();
        if accept {
            current = v;
            if v < best.0 {
                best = (v, perm.clone());
            }
        } else {
            perm.swap(i, j);
        }
        temp *= cooling;
    }
    Ok((best.1, evaluations))
}

/// One homomorphism-density term of the lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantTerm {
    pub graph: String,
    pub edges: usize,
    pub density_a: f64,
    pub density_b: f64,
    /// `|t(F, A) − t(F, B)| / e(F)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantBound {
    /// Lower bound on δ□(A, B) from the counting lemma.
    pub value: f64,
    pub terms: Vec<InvariantTerm>,
    /// KS distance between the block-degree laws.
    pub degree_ks: f64,
    /// Degree laws differ, so the step graphons are not equivalent.
    pub inequivalent: bool,
}

/// Homomorphism densities of edge, 2-path, triangle and 4-cycle via matrix
/// products.
pub(crate) fn small_densities(g: &GridGraphon) -> [f64; 4] {
    let n = g.n();
    let nf = n as f64;
    let d = g.block_degrees();
    let edge = g.edge_density();
    let sq: Vec<f64> = d.iter().map(|x| x * x).collect();
    let path2 = pairwise_sum(&sq) / nf;
    // row i of W² together with its contributions
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = g.row(i);
            let mut w2 = vec![0.0; n];
            for (k, &wik) in ri.iter().enumerate() {
                if wik != 0.0 {
                    for (acc, &v) in w2.iter_mut().zip(g.row(k)) {
                        *acc += wik * v;
                    }
                }
            }
            let tri: Vec<f64> = w2.iter().zip(ri).map(|(x, y)| x * y).collect();
            let c4: Vec<f64> = w2.iter().map(|x| x * x).collect();
            (pairwise_sum(&tri), pairwise_sum(&c4))
        })
        .collect();
    let tri: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let c4: Vec<f64> = rows.iter().map(|r| r.1).collect();
    [
        edge,
        path2,
        pairwise_sum(&tri) / nf.powi(3),
        pairwise_sum(&c4) / nf.powi(4),
    ]
}

/// Degree values rounded to a 1e-12 lattice so that float noise cannot
/// separate equal laws.
fn snapped_degree_law(g: &GridGraphon) -> Result<EmpiricalDistribution> {
    let d: Vec<f64> = g
        .block_degrees()
        .iter()
        .map(|x| (x * 1e12).round() / 1e12)
        .collect();
    EmpiricalDistribution::from_values(&d)
}

/// `max_F |t(F, A) − t(F, B)| / e(F)` over edge, 2-path, triangle and
/// 4-cycle, plus the degree-law inequivalence certificate.
pub fn invariant_lower_bound(a: &GridGraphon, b: &GridGraphon) -> Result<InvariantBound> {
    let (da, db) = rayon::join(|| small_densities(a), || small_densities(b));
    let names = [("edge", 1), ("path2", 2), ("triangle", 3), ("cycle4", 4)];
    let terms: Vec<InvariantTerm> = names
        .iter()
        .enumerate()
        .map(|(i, &(graph, edges))| InvariantTerm {
            graph: graph.to_string(),
            edges,
            density_a: da[i],
            density_b: db[i],
            bound: (da[i] - db[i]).abs() / edges as f64,
        })
        .collect();
    let value = terms.iter().map(|t| t.bound).fold(0.0, f64::max);
    let degree_ks = snapped_degree_law(a)?.ks(&snapped_degree_law(b)?);
    Ok(InvariantBound {
        value,
        terms,
        degree_ks,
        inequivalent: degree_ks > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{hom_density_exact, SmallGraph};

    #[test]
    fn l1_examples() {
        let a = GridGraphon::constant(3, 0.2).unwrap();
        let b = GridGraphon::constant(2, 0.7).unwrap();
        assert!((l1_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        let big = GridGraphon::constant(4093, 0.1).unwrap();
        assert!(matches!(l1_distance(&big, &b), Err(Error::Capacity(_))));
    }

    #[test]
    fn permutations_are_enumerated() {
        let mut p = vec![0, 1, 2];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            seen.push(p.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[5], vec![2, 1, 0]);
    }

    #[test]
    fn constants_are_half_apart() {
        let a = GridGraphon::constant(3, 0.2).unwrap();
        let b = GridGraphon::constant(3, 0.7).unwrap();
        let r = cut_distance_upper(&a, &b, CutDistanceMethod::Auto { seed: 1 }).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        let lb = invariant_lower_bound(&a, &b).unwrap();
        assert!((lb.terms[0].bound - 0.5).abs() < 1e-15);
        assert!(lb.value <= r.value + 1e-12);
        assert!(lb.inequivalent);
    }

    #[test]
    fn matrix_densities_match_enumeration() {
        let g = GridGraphon::from_rows(&[
            vec![0.1, 0.7, 0.3],
            vec![0.7, 0.0, 0.9],
            vec![0.3, 0.9, 0.5],
        ])
        .unwrap();
        let dens = small_densities(&g);
        let graphs = [
            SmallGraph::edge(),
            SmallGraph::path2(),
            SmallGraph::triangle(),
            SmallGraph::cycle4(),
        ];
        for (f, &d) in graphs.iter().zip(&dens) {
            assert!((hom_density_exact(f, &g).unwrap() - d).abs() < 1e-14);
        }
    }

    #[test]
    fn annealing_recovers_a_shuffle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.gen();
                v[i * n + j] = x;
                v[j * n + i] = x;
            }
        }
        let a = GridGraphon::from_row_major(n, v).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        perm.swap(2, 7);
        let b = a.permuted(&perm).unwrap();
        let r = cut_distance_upper(&a, &b, CutDistanceMethod::annealing(5)).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.certified);
    }
}
