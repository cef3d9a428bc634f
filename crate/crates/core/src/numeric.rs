//! Small numerical kernels shared by every module: Gauss–Legendre rules,
//! deterministic summation and exact rational points of the unit interval.

use num_integer::Integer;

/// 4-point Gauss–Legendre nodes on [0, 1].
pub const GAUSS4_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];

/// Weights matching [`GAUSS4_NODES`]; they sum to one.
pub const GAUSS4_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_9,
    0.326_072_577_431_273_1,
    0.326_072_577_431_273_1,
    0.173_927_422_568_726_9,
];

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length of the input, so results are reproducible.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sum that does not depend on the order of the inputs: the values are
/// sorted first, then summed pairwise. Any permutation of the same multiset
/// gives a bit-identical result.
pub fn order_free_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    pairwise_sum(&sorted)
}

/// Fixed-point accumulator for terms in `[0, 1]` at resolution `2⁻¹²⁸`.
///
/// Each term is truncated to the grid before it is added, and integer
/// addition is associative, so the total is the same for every ordering
/// and grouping of the terms.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct FixedSum {
    whole: u64,
    frac: u128,
}

impl FixedSum {
    pub fn add(&mut self, t: f64) {
        debug_assert!((0.0..=1.0).contains(&t), "term {t} outside [0,1]");
        if t >= 1.0 {
            self.whole += 1;
            return;
        }
        // scaling by powers of two and taking fractional parts are exact
        let scaled = t * TWO_64;
        let hi = scaled.floor();
        let lo = ((scaled - hi) * TWO_64).floor();
        self.add_frac(((hi as u128) << 64) | lo as u128);
    }

    fn add_frac(&mut self, bits: u128) {
        let (frac, carry) = self.frac.overflowing_add(bits);
        self.frac = frac;
        self.whole += carry as u64;
    }

    pub fn merge(&mut self, other: FixedSum) {
        self.whole += other.whole;
        self.add_frac(other.frac);
    }

    pub fn value(&self) -> f64 {
        self.whole as f64 + self.frac as f64 / (TWO_64 * TWO_64)
    }
}

const TWO_64: f64 = 18_446_744_073_709_551_616.0;

/// Integrates `f` over `[lo, hi]` with the 4-point Gauss rule applied on
/// every piece between consecutive `breaks`. Exact (up to rounding) for
/// functions that are polynomials of degree ≤ 7 on each piece.
pub fn piecewise_gauss<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(lo);
    cuts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let mut piece = 0.0;
        for (node, weight) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS.iter()) {
            piece += weight * f(a + node * len);
        }
        total += piece * len;
    }
    total
}

/// An exact rational point `num / den` of [0, 1], kept in lowest terms.
///
/// Measure-preserving maps act on these without rounding, so a map that
/// permutes a uniform grid permutes it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitPoint {
    num: u64,
    den: u64,
}

impl UnitPoint {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0 && num <= den, "unit point {num}/{den} outside [0,1]");
        let g = num.gcd(&den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    /// Midpoint of cell `i` of the uniform `m`-grid: `(2i + 1) / (2m)`.
    pub fn midpoint(i: usize, m: usize) -> Self {
        Self::new(2 * i as u64 + 1, 2 * m as u64)
    }

    pub(crate) fn from_wide(num: u128, den: u128) -> Self {
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        Self::new(
            u64::try_from(num).expect("unit point numerator overflow"),
            u64::try_from(den).expect("unit point denominator overflow"),
        )
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// Correctly rounded floating-point value.
    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Index of the cell of the uniform `n`-grid containing this point;
    /// the right endpoint 1 belongs to the last cell.
    pub fn cell(&self, n: usize) -> usize {
        let idx = (self.num as u128 * n as u128) / self.den as u128;
        (idx as usize).min(n - 1)
    }
}

/// Index of the cell of the uniform `n`-grid containing `x ∈ [0, 1]`.
pub fn cell_of(x: f64, n: usize) -> usize {
    ((x * n as f64).floor() as usize).min(n - 1)
}
