//! Measure-preserving self-maps of [0, 1], pull-backs of graphons along
//! them, and monotone rearrangements (quantile functions and degree sorts).

mod map;
mod rearrange;

pub use map::{MeasurePreservingMap, Primitive, MAP_FORMAT};
pub use rearrange::{monotone_rearrangement, QuantileFunction};

use crate::graphon::{GraphonHandle, GridGraphon, Representation, MAX_GRID_N};
use crate::numeric::UnitPoint;

/// The pull-back `(x, y) ↦ W(φ(x), φ(y))`.
///
/// A grid pulled back along a map that sends cells of some resolution
/// `r ≤ 4096` affinely into grid cells is materialized exactly as an
/// `r`-block grid (a block permutation when `φ` is an interval exchange
/// with block counts dividing `n`). Everything else stays lazy.
pub fn pullback(w: &GraphonHandle, phi: &MeasurePreservingMap) -> GraphonHandle {
    if phi.ops().is_empty() {
        return w.clone();
    }
    if let Representation::Grid(g) = w.representation() {
        let r = phi.compatible_resolution(g.n());
        if r <= MAX_GRID_N as u128 {
            let r = r as usize;
            let cells: Vec<usize> = (0..r)
                .map(|a| phi.apply_exact(UnitPoint::midpoint(a, r)).cell(g.n()))
                .collect();
            let mut values = Vec::with_capacity(r * r);
            for &ca in &cells {
                let row = g.row(ca);
                values.extend(cells.iter().map(|&cb| row[cb]));
            }
            let grid = GridGraphon::from_row_major(r, values).expect("pull-back of a valid grid");
            return GraphonHandle::grid(grid)
                .with_mode(w.mode())
                .expect("mode already validated");
        }
    }
    GraphonHandle::lazy_pullback(w.clone(), phi.clone())
        .with_mode(w.mode())
        .expect("mode already validated")
}

/// Relabels blocks by nondecreasing block degree (stable: ties keep their
/// original order). Returns the sorted grid and the permutation `perm`
/// with `sorted[a][b] = g[perm[a]][perm[b]]`.
pub fn degree_sort(g: &GridGraphon) -> (GridGraphon, Vec<usize>) {
    let degrees = g.block_degrees();
    let mut perm: Vec<usize> = (0..g.n()).collect();
    perm.sort_by(|&a, &b| degrees[a].total_cmp(&degrees[b]));
    let sorted = g.permuted(&perm).expect("sort order is a permutation");
    (sorted, perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{discretize, Discretization};

    #[test]
    fn identity_pullback_is_a_no_op() {
        let w = GraphonHandle::counterexample();
        assert_eq!(pullback(&w, &MeasurePreservingMap::identity()), w);
        let g = GraphonHandle::grid(GridGraphon::constant(4, 0.2).unwrap());
        let id = MeasurePreservingMap::exchange(4, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(pullback(&g, &id), g);
    }

    #[test]
    fn swap_halves_on_counterexample() {
        let w = pullback(&GraphonHandle::counterexample(), &MeasurePreservingMap::swap_halves());
        assert_eq!(w.eval(0.1, 0.2).unwrap(), 0.0);
        let direct = GraphonHandle::counterexample().eval(0.1, 0.2).unwrap();
        assert!((w.eval(0.6, 0.7).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn grid_exchange_is_a_block_permutation() {
        let g = discretize(&GraphonHandle::counterexample(), 8, Discretization::Midpoint).unwrap();
        let phi = MeasurePreservingMap::swap_halves();
        let p = pullback(&GraphonHandle::grid(g.clone()), &phi);
        let pg = p.as_grid().unwrap();
        assert_eq!(pg.n(), 8);
        assert_eq!(pg.get(0, 0), g.get(4, 4));
        assert_eq!(pg.get(5, 1), g.get(1, 5));
    }

    #[test]
    fn grid_expansion_refines() {
        let g = GridGraphon::from_rows(&[vec![0.1, 0.9], vec![0.9, 0.5]]).unwrap();
        let p = pullback(&GraphonHandle::grid(g.clone()), &MeasurePreservingMap::expand(2).unwrap());
        let pg = p.as_grid().unwrap();
        assert_eq!(pg.n(), 4);
        for (x, y) in [(0.1, 0.3), (0.6, 0.2), (0.9, 0.95)] {
            let phi = |t: f64| (2.0 * t) % 1.0;
            assert_eq!(pg.value(x, y), g.value(phi(x), phi(y)));
        }
    }

    #[test]
    fn degree_sort_example() {
        // block degrees (0.3, 0.1, 0.2)
        let g = GridGraphon::from_rows(&[
            vec![0.3, 0.3, 0.3],
            vec![0.3, 0.0, 0.0],
            vec![0.3, 0.0, 0.3],
        ])
        .unwrap();
        let (sorted, perm) = degree_sort(&g);
        assert_eq!(perm, vec![1, 2, 0]);
        let d = sorted.block_degrees();
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
        let (_, again) = degree_sort(&sorted);
        assert_eq!(again, vec![0, 1, 2]);
    }
}
