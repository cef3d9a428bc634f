//! Graphon representations: closed-form families, symmetric step grids,
//! lazy pull-backs, and discretization between them.

mod analytic;
mod grid;
mod handle;

pub use analytic::AnalyticGraphon;
pub use grid::{GridGraphon, GRID_FORMAT};
pub use handle::{EvalMode, GraphonHandle, Representation};

pub(crate) use analytic::off_levels;
pub(crate) use grid::check_permutation;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default block count for every pipeline.
pub const DEFAULT_GRID_N: usize = 1024;

/// Largest block count accepted by grid-producing operations.
pub const MAX_GRID_N: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// Sample the kernel at cell centers.
    Midpoint,
    /// Average each cell with the 4×4 tensor Gauss rule.
    CellAverage,
}

/// Step approximation of `w` on the uniform `n`-block partition.
///
/// Only the upper triangle is computed and then mirrored, so the output is
/// symmetric bit-for-bit. Rows are processed in parallel; each entry is a
/// pure function of its cell, so the result does not depend on scheduling.
pub fn discretize(w: &GraphonHandle, n: usize, mode: Discretization) -> Result<GridGraphon> {
    if n == 0 {
        return Err(Error::domain("discretization needs n >= 1"));
    }
    if n > MAX_GRID_N {
        return Err(Error::capacity(format!(
            "n={n} exceeds the grid limit {MAX_GRID_N}"
        )));
    }
    if let (Some(g), Discretization::Midpoint) = (w.as_grid(), mode) {
        if g.n() == n {
            return Ok(g.clone());
        }
    }
    let h = 1.0 / n as f64;
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let v = match mode {
                        Discretization::Midpoint => {
                            w.value((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
                        }
                        Discretization::CellAverage => w.cell_average(i, j, n),
                    };
                    v.clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(GridGraphon::from_trusted(n, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_counterexample_n2() {
        // (¾, ¾) sits on x + y = 3/2 and resolves to 0
        let g = discretize(&GraphonHandle::counterexample(), 2, Discretization::Midpoint).unwrap();
        assert_eq!(g.values(), &[0.25, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn constant_any_n() {
        let w = GraphonHandle::analytic(AnalyticGraphon::constant(0.3).unwrap());
        for n in [1, 3, 17] {
            for mode in [Discretization::Midpoint, Discretization::CellAverage] {
                let g = discretize(&w, n, mode).unwrap();
                assert!(g.values().iter().all(|&v| (v - 0.3).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        let w = GraphonHandle::counterexample();
        assert!(matches!(
            discretize(&w, 0, Discretization::Midpoint),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            discretize(&w, MAX_GRID_N + 1, Discretization::Midpoint),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn cell_average_is_symmetric() {
        let g = discretize(&GraphonHandle::counterexample(), 37, Discretization::CellAverage)
            .unwrap();
        for i in 0..37 {
            for j in 0..37 {
                assert_eq!(g.get(i, j).to_bits(), g.get(j, i).to_bits());
            }
        }
    }
}
