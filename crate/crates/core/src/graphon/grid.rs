use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{cell_of, order_free_sum};

pub const GRID_FORMAT: &str = "gridgraphon-v1";

/// Symmetric step graphon on the uniform `n × n` partition of [0, 1]².
///
/// Entry `(i, j)` is the constant value on `(i/n, (i+1)/n) × (j/n, (j+1)/n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGraphon {
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridFile {
    format: String,
    n: usize,
    values: Vec<f64>,
}

impl GridGraphon {
    /// Builds a grid from row-major values, validating symmetry and range.
    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("grid block count must be positive"));
        }
        if values.len() != n * n {
            return Err(Error::validation(format!(
                "expected {} values for n={n}, found {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::validation(format!(
                        "range: values[{i}][{j}] = {v} is outside [0,1]"
                    )));
                }
                if j > i && v != values[j * n + i] {
                    return Err(Error::validation(format!(
                        "symmetry: values[{i}][{j}] = {v} differs from values[{j}][{i}] = {}",
                        values[j * n + i]
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("grid rows must form a square matrix"));
        }
        Self::from_row_major(n, rows.concat())
    }

    pub fn constant(n: usize, p: f64) -> Result<Self> {
        Self::from_row_major(n, vec![p; n * n])
    }

    /// Trusted constructor for values that are symmetric by construction.
    pub(crate) fn from_trusted(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Step-function evaluation; cell boundaries belong to the cell on
    /// their right, and 1 to the last cell.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.get(cell_of(x, self.n), cell_of(y, self.n))
    }

    /// Row means, summed order-independently so that block permutations
    /// permute the result bit-exactly.
    pub fn block_degrees(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.n).map(|i| order_free_sum(self.row(i)) / n).collect()
    }

    /// `t(K₂, W)`: mean of all entries, permutation invariant bit-exactly.
    pub fn edge_density(&self) -> f64 {
        order_free_sum(&self.block_degrees()) / self.n as f64
    }

    /// Simultaneous row/column relabeling: `out[a][b] = self[perm[a]][perm[b]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let n = self.n;
        let mut values = Vec::with_capacity(n * n);
        for &pa in perm {
            let row = self.row(pa);
            values.extend(perm.iter().map(|&pb| row[pb]));
        }
        Ok(Self::from_trusted(n, values))
    }

    /// Refines to `n·factor` blocks by repeating every cell.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::domain("refinement factor must be positive"));
        }
        let m = self.n * factor;
        let mut values = Vec::with_capacity(m * m);
        for a in 0..m {
            let row = self.row(a / factor);
            values.extend((0..m).map(|b| row[b / factor]));
        }
        Ok(Self::from_trusted(m, values))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = GridFile {
            format: GRID_FORMAT.to_string(),
            n: self.n,
            values: self.values.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GridFile = serde_json::from_str(text)?;
        if file.format != GRID_FORMAT {
            return Err(Error::validation(format!(
                "unsupported grid format {:?}, expected {GRID_FORMAT:?}",
                file.format
            )));
        }
        Self::from_row_major(file.n, file.values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::validation(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::validation(format!(
                "not a permutation of 0..{n}: entry {p}"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridGraphon {
        GridGraphon::from_rows(&[vec![0.25, 0.0], vec![0.0, 0.5]]).unwrap()
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let g = GridGraphon::from_rows(&[
            vec![0.1, 1.0 / 3.0, 0.0],
            vec![1.0 / 3.0, 0.7, 2e-17],
            vec![0.0, 2e-17, 1.0],
        ])
        .unwrap();
        let back = GridGraphon::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        sample().save(&path).unwrap();
        assert_eq!(GridGraphon::load(&path).unwrap(), sample());
    }

    #[test]
    fn rejects_asymmetric_matrix() {
        let text = r#"{"format":"gridgraphon-v1","n":2,"values":[0.1,0.2,0.3,0.4]}"#;
        let err = GridGraphon::from_json(text).unwrap_err().to_string();
        assert!(err.contains("symmetry") && err.contains("values[0][1]"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_entry() {
        let text = r#"{"format":"gridgraphon-v1","n":2,"values":[0.1,1.5,1.5,0.4]}"#;
        let err = GridGraphon::from_json(text).unwrap_err().to_string();
        assert!(err.contains("range") && err.contains("values[0][1]"), "{err}");
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(GridGraphon::from_json("{\"format\":\"gridgraphon-v1\"}").is_err());
        assert!(GridGraphon::from_json(r#"{"format":"other","n":1,"values":[0]}"#).is_err());
        assert!(GridGraphon::from_json(r#"{"format":"gridgraphon-v1","n":2,"values":[0]}"#).is_err());
        assert!(GridGraphon::from_json(r#"{"format":"gridgraphon-v1","n":0,"values":[]}"#).is_err());
    }

    #[test]
    fn permutation_and_refinement() {
        let g = sample();
        let p = g.permuted(&[1, 0]).unwrap();
        assert_eq!(p.values(), &[0.5, 0.0, 0.0, 0.25]);
        let r = g.refined(2).unwrap();
        assert_eq!(r.n(), 4);
        assert_eq!(r.get(1, 1), 0.25);
        assert_eq!(r.get(3, 2), 0.5);
        assert!(g.permuted(&[0, 0]).is_err());
    }

    #[test]
    fn step_lookup() {
        let g = sample();
        assert_eq!(g.value(0.1, 0.2), 0.25);
        assert_eq!(g.value(0.5, 0.5), 0.5);
        assert_eq!(g.value(1.0, 1.0), 0.5);
    }
}
