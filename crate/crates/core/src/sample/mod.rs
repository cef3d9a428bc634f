//! W-random graphs: latent uniform positions, independent edges with
//! probability `W(xᵢ, xⱼ)`, and homomorphism counts on the result.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{EmpiricalDistribution, SmallGraph};
use crate::graphon::GraphonHandle;

pub const SAMPLE_FORMAT: &str = "sample-v1";
/// Largest vertex count for exact injective counting.
pub const MAX_EXACT_COUNT_N: usize = 3000;
/// Largest pattern handled by [`empirical_hom_density`].
pub const MAX_SAMPLE_PATTERN: usize = 4;
/// Random injective maps drawn above [`MAX_EXACT_COUNT_N`].
pub const SUBSAMPLE_TUPLES: u64 = 1 << 20;

/// Symmetric adjacency bit matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        Self {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn set_pair(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
    }

    fn full_mask(&self) -> Vec<u64> {
        let mut m = vec![u64::MAX; self.words];
        if self.n % 64 != 0 {
            m[self.words - 1] = (1u64 << (self.n % 64)) - 1;
        }
        m
    }
}

/// A sample of `G(n, W)` with vertices relabeled by increasing position.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGraph {
    positions: Vec<f64>,
    adjacency: BitMatrix,
    seed: u64,
    source: String,
}

/// JSON sidecar of an edge-list export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub format: String,
    pub n: usize,
    pub seed: u64,
    pub graphon: String,
    pub edges: usize,
    pub positions: Vec<f64>,
}

/// Samples `G(n, W)`.
///
/// Positions come from stream 0 of a ChaCha generator seeded with `seed`;
/// row `i` of the upper triangle uses stream `i + 1`, so the graph does not
/// depend on how rows are scheduled.
pub fn sample_graph(w: &GraphonHandle, n: usize, seed: u64) -> Result<SampledGraph> {
    if n == 0 {
        return Err(Error::domain("a sampled graph needs n >= 1 vertices"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    positions.sort_by(f64::total_cmp);
    let upper: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let xi = positions[i];
            (i + 1..n)
                .filter(|&j| rng.gen::<f64>() < w.value(xi, positions[j]))
                .collect()
        })
        .collect();
    let mut adjacency = BitMatrix::new(n);
    for (i, row) in upper.iter().enumerate() {
        for &j in row {
            adjacency.set_pair(i, j);
        }
    }
    Ok(SampledGraph {
        positions,
        adjacency,
        seed,
        source: w.describe(),
    })
}

impl SampledGraph {
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.get(i, j)
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n())
            .map(|i| {
                self.adjacency
                    .row(i)
                    .iter()
                    .map(|w| w.count_ones() as usize)
                    .sum()
            })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.degrees().iter().sum::<usize>() / 2
    }

    /// Edges `(i, j)` with `i < j`, 0-based.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).filter(move |&j| self.has_edge(i, j)).map(move |j| (i, j)))
            .collect()
    }

    /// Law of `deg(i)/(n − 1)` over the vertices.
    pub fn normalized_degree_law(&self) -> Result<EmpiricalDistribution> {
        let scale = (self.n().max(2) - 1) as f64;
        let d: Vec<f64> = self.degrees().iter().map(|&k| k as f64 / scale).collect();
        EmpiricalDistribution::from_values(&d)
    }

    /// Edge densities between `blocks` equal groups of vertices taken in
    /// order of increasing degree (row-major `blocks × blocks`).
    pub fn degree_sorted_blocks(&self, blocks: usize) -> Result<Vec<f64>> {
        let n = self.n();
        if blocks == 0 || blocks > n {
            return Err(Error::domain(format!("need 1 <= blocks <= n, got {blocks}")));
        }
        let deg = self.degrees();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| deg[i]);
        let group = |r: usize| r * blocks / n;
        let mut hits = vec![0u64; blocks * blocks];
        let mut pairs = vec![0u64; blocks * blocks];
        for (ra, &a) in order.iter().enumerate() {
            for (rb, &b) in order.iter().enumerate() {
                if a == b {
                    continue;
                }
                let k = group(ra) * blocks + group(rb);
                pairs[k] += 1;
                hits[k] += self.has_edge(a, b) as u64;
            }
        }
        Ok(hits
            .iter()
            .zip(&pairs)
            .map(|(&h, &p)| if p == 0 { 0.0 } else { h as f64 / p as f64 })
            .collect())
    }

    /// One `i j` line per edge, 1-based with `i < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{} {}", i + 1, j + 1);
        }
        out
    }

    pub fn metadata(&self) -> SampleMetadata {
        SampleMetadata {
            format: SAMPLE_FORMAT.to_string(),
            n: self.n(),
            seed: self.seed,
            graphon: self.source.clone(),
            edges: self.edge_count(),
            positions: self.positions.clone(),
        }
    }

    /// Rebuilds a graph from its edge list and metadata.
    pub fn from_parts(meta: &SampleMetadata, edge_list: &str) -> Result<Self> {
        if meta.format != SAMPLE_FORMAT {
            return Err(Error::validation(format!(
                "unsupported sample format {:?}",
                meta.format
            )));
        }
        let n = meta.n;
        if meta.positions.len() != n {
            return Err(Error::validation("metadata positions do not match n"));
        }
        let mut adjacency = BitMatrix::new(n);
        for (lineno, line) in edge_list.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::validation(format!("edge list line {}: {e}", lineno + 1)))?;
            match parsed[..] {
                [i, j] if 1 <= i && i < j && j <= n => adjacency.set_pair(i - 1, j - 1),
                _ => {
                    return Err(Error::validation(format!(
                        "edge list line {}: expected `i j` with 1 <= i < j <= {n}",
                        lineno + 1
                    )))
                }
            }
        }
        let g = Self {
            positions: meta.positions.clone(),
            adjacency,
            seed: meta.seed,
            source: meta.graphon.clone(),
        };
        if g.edge_count() != meta.edges {
            return Err(Error::validation(format!(
                "edge list has {} edges, metadata says {}",
                g.edge_count(),
                meta.edges
            )));
        }
        Ok(g)
    }

    /// Writes `<stem>.edges` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::write(dir.join(format!("{stem}.edges")), self.to_edge_list())?;
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&self.metadata())?,
        )?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>, stem: &str) -> Result<Self> {
        let dir = dir.as_ref();
        let meta: SampleMetadata =
            serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        Self::from_parts(&meta, &std::fs::read_to_string(dir.join(format!("{stem}.edges")))?)
    }
}

/// Injective homomorphism density of `f` in `g`: the fraction of injective
/// maps `V(F) → V(G)` that send edges to edges.
///
/// Exact enumeration (bitset intersections, popcount at the last vertex)
/// up to [`MAX_EXACT_COUNT_N`] vertices; above that a seeded sample of
/// random injective maps.
pub fn empirical_hom_density(f: &SmallGraph, g: &SampledGraph) -> Result<f64> {
    let k = f.vertex_count();
    if k > MAX_SAMPLE_PATTERN {
        return Err(Error::capacity(format!(
            "patterns on more than {MAX_SAMPLE_PATTERN} vertices are not supported"
        )));
    }
    let n = g.n();
    if k > n {
        return Ok(0.0);
    }
    if n > MAX_EXACT_COUNT_N {
        return Ok(subsampled_density(f, g));
    }
    let back = f.back_neighbors();
    let full = g.adjacency.full_mask();
    let count: u128 = (0..n)
        .into_par_iter()
        .map(|v0| {
            let mut assign = vec![v0; k];
            count_extensions(g, &back, &full, &mut assign, 1)
        })
        .sum();
    let falling: u128 = (0..k as u128).map(|i| n as u128 - i).product();
    Ok(count as f64 / falling as f64)
}

fn count_extensions(
    g: &SampledGraph,
    back: &[Vec<usize>],
    full: &[u64],
    assign: &mut [usize],
    depth: usize,
) -> u128 {
    let k = assign.len();
    if depth == k {
        return 1;
    }
    let mut cand = full.to_vec();
    for &u in &back[depth] {
        for (c, r) in cand.iter_mut().zip(g.adjacency.row(assign[u])) {
            *c &= r;
        }
    }
    for &v in &assign[..depth] {
        cand[v / 64] &= !(1u64 << (v % 64));
    }
    if depth == k - 1 {
        return cand.iter().map(|w| w.count_ones() as u128).sum();
    }
    let mut total = 0;
    for (wi, &word) in cand.iter().enumerate() {
        let mut bits = word;
        while bits != 0 {
            let v = wi * 64 + bits.trailing_zeros() as usize;
            bits &= bits - 1;
            assign[depth] = v;
            total += count_extensions(g, back, full, assign, depth + 1);
        }
    }
    total
}

fn subsampled_density(f: &SmallGraph, g: &SampledGraph) -> f64 {
    let n = g.n();
    let k = f.vertex_count();
    let chunks = 64u64;
    let per = SUBSAMPLE_TUPLES / chunks;
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            rng.set_stream(1 << 32 | c);
            let mut hits = 0;
            let mut pick = vec![0usize; k];
            for _ in 0..per {
                for a in 0..k {
                    pick[a] = loop {
                        let v = rng.gen_range(0..n);
                        if !pick[..a].contains(&v) {
                            break v;
                        }
                    };
                }
                if f.edges().iter().all(|&(a, b)| g.has_edge(pick[a], pick[b])) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    hits as f64 / (per * chunks) as f64
}
