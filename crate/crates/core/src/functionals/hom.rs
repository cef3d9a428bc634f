use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::GridGraphon;
use crate::numeric::{pairwise_sum, FixedSum};

/// Largest pattern graph accepted by homomorphism densities.
pub const MAX_PATTERN_VERTICES: usize = 5;

/// Largest `n^{|V(F)|}` summed in exact mode.
pub const EXACT_HOM_BUDGET: u128 = 1_000_000_000;

/// A small simple pattern graph `F`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallGraph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl SmallGraph {
    pub fn new(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if vertices == 0 || vertices > MAX_PATTERN_VERTICES {
            return Err(Error::capacity(format!(
                "pattern graphs need 1..={MAX_PATTERN_VERTICES} vertices, got {vertices}"
            )));
        }
        let mut norm: Vec<(usize, usize)> = Vec::new();
        for &(a, b) in edges {
            if a >= vertices || b >= vertices || a == b {
                return Err(Error::validation(format!("invalid pattern edge ({a}, {b})")));
            }
            let e = (a.min(b), a.max(b));
            if norm.contains(&e) {
                return Err(Error::validation(format!("duplicate pattern edge ({a}, {b})")));
            }
            norm.push(e);
        }
        Ok(Self {
            vertices,
            edges: norm,
        })
    }

    pub fn edge() -> Self {
        Self::new(2, &[(0, 1)]).unwrap()
    }

    /// Path with two edges (three vertices).
    pub fn path2() -> Self {
        Self::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    pub fn triangle() -> Self {
        Self::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    pub fn cycle4() -> Self {
        Self::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap()
    }

    /// Parses `edge`, `path2`, `triangle`, `cycle4`/`c4`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "edge" | "k2" => Ok(Self::edge()),
            "path2" | "p2" | "cherry" => Ok(Self::path2()),
            "triangle" | "k3" => Ok(Self::triangle()),
            "cycle4" | "c4" => Ok(Self::cycle4()),
            other => Err(Error::validation(format!("unknown pattern graph {other:?}"))),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// For each vertex, its neighbors with a smaller index.
    pub(crate) fn back_neighbors(&self) -> Vec<Vec<usize>> {
        let mut back = vec![Vec::new(); self.vertices];
        for &(a, b) in &self.edges {
            back[b].push(a);
        }
        back
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum HomMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomEstimate {
    pub value: f64,
    /// Zero in exact mode.
    pub std_error: f64,
    pub mode: HomMode,
}

/// Homomorphism density `t(F, G)` of a step graphon.
pub fn hom_density(f: &SmallGraph, g: &GridGraphon, mode: HomMode) -> Result<HomEstimate> {
    match mode {
        HomMode::Exact => Ok(HomEstimate {
            value: hom_density_exact(f, g)?,
            std_error: 0.0,
            mode,
        }),
        HomMode::MonteCarlo { samples, seed } => hom_density_monte_carlo(f, g, samples, seed),
    }
}

/// Exact `t(F, G)`: sum over all block assignments with weight `n^{-|V(F)|}`.
pub fn hom_density_exact(f: &SmallGraph, g: &GridGraphon) -> Result<f64> {
    let n = g.n();
    let k = f.vertex_count();
    let work = (n as u128).pow(k as u32);
    if work > EXACT_HOM_BUDGET {
        return Err(Error::capacity(format!(
            "exact t(F,G) needs n^{k} = {work} terms (limit {EXACT_HOM_BUDGET}); use Monte Carlo mode"
        )));
    }
    if f.edge_count() == 1 && k == 2 {
        return Ok(g.edge_density());
    }
    let back = f.back_neighbors();
    // Every term is a product taken in the pattern's fixed edge order, so
    // relabeling blocks permutes the terms without changing them; the exact
    // accumulator then makes the total permutation invariant bit-for-bit.
    let partials: Vec<FixedSum> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut assign = vec![0usize; k];
            assign[0] = first;
            let mut acc = FixedSum::default();
            extend(g, &back, &mut assign, 1, 1.0, &mut acc);
            acc
        })
        .collect();
    let mut total = FixedSum::default();
    partials.into_iter().for_each(|p| total.merge(p));
    Ok(total.value() / (n as f64).powi(k as i32))
}

fn extend(
    g: &GridGraphon,
    back: &[Vec<usize>],
    assign: &mut [usize],
    depth: usize,
    weight: f64,
    acc: &mut FixedSum,
) {
    let n = g.n();
    let k = assign.len();
    if depth == k {
        acc.add(weight);
        return;
    }
    for v in 0..n {
        let mut w = weight;
        for &u in &back[depth] {
            w *= g.get(assign[u], v);
        }
        if w == 0.0 {
            continue;
        }
        if depth == k - 1 {
            acc.add(w);
        } else {
            assign[depth] = v;
            extend(g, back, assign, depth + 1, w, acc);
        }
    }
}

fn hom_density_monte_carlo(
    f: &SmallGraph,
    g: &GridGraphon,
    samples: u64,
    seed: u64,
) -> Result<HomEstimate> {
    if samples < 2 {
        return Err(Error::domain("Monte Carlo mode needs at least 2 samples"));
    }
    const CHUNK: u64 = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let n = g.n();
    let k = f.vertex_count();
    // each chunk draws from its own ChaCha stream, so the estimate does not
    // depend on how chunks are scheduled
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut assign = vec![0usize; k];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                for a in assign.iter_mut() {
                    *a = rng.gen_range(0..n);
                }
                let w: f64 = f.edges().iter().map(|&(a, b)| g.get(assign[a], assign[b])).product();
                s += w;
                s2 += w * w;
            }
            (s, s2)
        })
        .collect();
    let s: f64 = pairwise_sum(&sums.iter().map(|p| p.0).collect::<Vec<_>>());
    let s2: f64 = pairwise_sum(&sums.iter().map(|p| p.1).collect::<Vec<_>>());
    let nf = samples as f64;
    let mean = s / nf;
    let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    Ok(HomEstimate {
        value: mean,
        std_error: (var / nf).sqrt(),
        mode: HomMode::MonteCarlo { samples, seed },
    })
}
