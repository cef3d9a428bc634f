use graphonlab::graphon::{AnalyticGraphon, GraphonHandle, GridGraphon};
use graphonlab::metrics::{
    cut_distance_upper, cut_norm, invariant_lower_bound, CutDistanceMethod, CutNormMethod, StepKernel,
};
use graphonlab::transform::{degree_sort, pullback, MeasurePreservingMap};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Symmetric `n × n` row-major values from an upper triangle.
fn symmetric(n: usize, upper: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            v[i * n + j] = upper[k];
            v[j * n + i] = upper[k];
            k += 1;
        }
    }
    v
}

fn grid(range: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = GridGraphon> {
    range.prop_flat_map(|n| {
        prop::collection::vec(0.0..=1.0f64, n * (n + 1) / 2)
            .prop_map(move |u| GridGraphon::from_row_major(n, symmetric(n, &u)).unwrap())
    })
}

fn kernel(range: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = StepKernel> {
    range.prop_flat_map(|n| {
        prop::collection::vec(-1.0..=1.0f64, n * (n + 1) / 2)
            .prop_map(move |u| StepKernel::from_row_major(n, symmetric(n, &u)).unwrap())
    })
}

fn family() -> impl Strategy<Value = AnalyticGraphon> {
    prop_oneof![
        Just(AnalyticGraphon::Counterexample),
        Just(AnalyticGraphon::Product),
        (0.0..=1.0f64).prop_map(|p| AnalyticGraphon::constant(p).unwrap()),
        (0.0..=1.0f64).prop_map(|t| AnalyticGraphon::threshold(t).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eval_is_symmetric_and_bounded(a in family(), x in 0.0..=1.0f64, y in 0.0..=1.0f64, seed: u64) {
        let w = GraphonHandle::analytic(a);
        let v = w.eval(x, y).unwrap();
        prop_assert_eq!(v, w.eval(y, x).unwrap());
        prop_assert!((0.0..=1.0).contains(&v));

        let phi = MeasurePreservingMap::random(&mut ChaCha8Rng::seed_from_u64(seed), 3, &[2, 3, 4], 3);
        let p = pullback(&w, &phi);
        let v = p.eval(x, y).unwrap();
        prop_assert_eq!(v, p.eval(y, x).unwrap());
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn degree_sort_invariants(g in grid(1..=8)) {
        let (sorted, perm) = degree_sort(&g);
        let d = sorted.block_degrees();
        prop_assert!(d.windows(2).all(|p| p[0] <= p[1]));
        let mut seen = perm.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..g.n()).collect::<Vec<_>>());
        let mut a = g.values().to_vec();
        let mut b = sorted.values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
        let (again, _) = degree_sort(&sorted);
        prop_assert_eq!(again, sorted);
    }

    #[test]
    fn local_search_never_beats_exhaustive(k in kernel(1..=7), seed: u64) {
        let exact = cut_norm(&k, CutNormMethod::Exhaustive).unwrap();
        let local = cut_norm(&k, CutNormMethod::local_search(seed)).unwrap();
        prop_assert!(local.value <= exact.value + 1e-12);
        prop_assert!(exact.value <= k.mean_abs() + 1e-12);
    }

    #[test]
    fn compositions_preserve_measure(seed: u64, len in 1usize..=4) {
        let phi = MeasurePreservingMap::random(&mut ChaCha8Rng::seed_from_u64(seed), len, &[2, 3, 4, 8], 3);
        let (pts, bins) = (1usize << 16, 16usize);
        let mut counts = vec![0usize; bins];
        for i in 0..pts {
            let y = phi.apply((i as f64 + 0.5) / pts as f64);
            prop_assert!((0.0..1.0).contains(&y));
            counts[(y * bins as f64) as usize] += 1;
        }
        for c in counts {
            let mass = c as f64 / pts as f64;
            prop_assert!((mass - 1.0 / bins as f64).abs() <= 1e-3, "{}: {}", phi.describe(), mass);
        }
    }

    #[test]
    fn lower_bound_below_upper_bound(n in 1usize..=5, ua in prop::collection::vec(0.0..=1.0f64, 15), ub in prop::collection::vec(0.0..=1.0f64, 15)) {
        let a = GridGraphon::from_row_major(n, symmetric(n, &ua)).unwrap();
        let b = GridGraphon::from_row_major(n, symmetric(n, &ub)).unwrap();
        let lower = invariant_lower_bound(&a, &b).unwrap();
        let upper = cut_distance_upper(&a, &b, CutDistanceMethod::Exhaustive).unwrap();
        prop_assert!(lower.value <= upper.value + 1e-12, "{} > {}", lower.value, upper.value);
    }
}
