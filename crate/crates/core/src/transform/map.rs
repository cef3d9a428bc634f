use std::fs;
use std::path::Path;

use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::check_permutation;
use crate::numeric::UnitPoint;

pub const MAP_FORMAT: &str = "mpm-v1";

/// Building blocks of measure-preserving self-maps of [0, 1].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Primitive {
    /// Cut [0,1] into `k` equal blocks and move block `b` to position
    /// `perm[b]` (0-based), translating it rigidly.
    Exchange { k: usize, perm: Vec<usize> },
    /// `x ↦ m·x mod 1`.
    Expand { m: usize },
}

/// Composition of primitives, applied left to right: `ops[0]` acts first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MeasurePreservingMap {
    ops: Vec<Primitive>,
}

impl Primitive {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Primitive::Exchange { k, perm } => {
                let kf = *k as f64;
                let b = ((x * kf).floor() as usize).min(k - 1);
                (perm[b] as f64 + (x * kf - b as f64)) / kf
            }
            Primitive::Expand { m } => {
                let y = x * *m as f64;
                let f = y - y.floor();
                if f >= 1.0 {
                    0.0
                } else {
                    f
                }
            }
        }
    }

    fn apply_exact(&self, p: UnitPoint) -> UnitPoint {
        let (num, den) = (p.num() as u128, p.den() as u128);
        match self {
            Primitive::Exchange { k, perm } => {
                let k = *k as u128;
                let b = ((k * num) / den).min(k - 1);
                let target = perm[b as usize] as u128;
                UnitPoint::from_wide(target * den + k * num - b * den, k * den)
            }
            Primitive::Expand { m } => {
                let scaled = *m as u128 * num;
                if scaled == *m as u128 * den {
                    // x = 1 maps to 0, matching the floating-point branch
                    UnitPoint::new(0, 1)
                } else {
                    UnitPoint::from_wide(scaled % den, den)
                }
            }
        }
    }

    fn preimages(&self, y: f64) -> Vec<f64> {
        match self {
            Primitive::Exchange { k, perm } => {
                let kf = *k as f64;
                let c = ((y * kf).floor() as usize).min(k - 1);
                let b = perm.iter().position(|&t| t == c).expect("valid permutation");
                vec![y + (b as f64 - c as f64) / kf]
            }
            Primitive::Expand { m } => (0..*m).map(|r| (y + r as f64) / *m as f64).collect(),
        }
    }

    fn discontinuities(&self) -> Vec<f64> {
        match self {
            Primitive::Exchange { k, .. } => (1..*k).map(|b| b as f64 / *k as f64).collect(),
            Primitive::Expand { m } => (1..*m).map(|r| r as f64 / *m as f64).collect(),
        }
    }
}

impl MeasurePreservingMap {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Interval exchange; `perm` is 0-based.
    pub fn exchange(k: usize, perm: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::validation("exchange needs k >= 1 blocks"));
        }
        check_permutation(&perm, k)?;
        Ok(Self {
            ops: vec![Primitive::Exchange { k, perm }],
        })
    }

    /// The half-swap `x ↦ x + ½ mod 1`.
    pub fn swap_halves() -> Self {
        Self::exchange(2, vec![1, 0]).expect("valid permutation")
    }

    pub fn expand(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::validation("expanding maps need m >= 2"));
        }
        Ok(Self {
            ops: vec![Primitive::Expand { m }],
        })
    }

    /// `self` followed by `next`.
    pub fn then(mut self, next: MeasurePreservingMap) -> Self {
        self.ops.extend(next.ops);
        self
    }

    pub fn ops(&self) -> &[Primitive] {
        &self.ops
    }

    pub fn is_exchange_only(&self) -> bool {
        self.ops
            .iter()
            .all(|op| matches!(op, Primitive::Exchange { .. }))
    }

    pub fn describe(&self) -> String {
        if self.ops.is_empty() {
            return "identity".into();
        }
        let parts: Vec<String> = self
            .ops
            .iter()
            .map(|op| match op {
                Primitive::Exchange { k, perm } => {
                    let p: Vec<String> = perm.iter().map(|v| (v + 1).to_string()).collect();
                    format!("exchange(k={k},[{}])", p.join(","))
                }
                Primitive::Expand { m } => format!("expand(m={m})"),
            })
            .collect();
        parts.join("∘")
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.ops.iter().fold(x, |acc, op| op.apply(acc))
    }

    /// Exact image of a rational point.
    pub fn apply_exact(&self, p: UnitPoint) -> UnitPoint {
        self.ops.iter().fold(p, |acc, op| op.apply_exact(acc))
    }

    /// All `x` with `φ(x) = y`.
    pub fn preimages(&self, y: f64) -> Vec<f64> {
        let mut pts = vec![y];
        for op in self.ops.iter().rev() {
            pts = pts.iter().flat_map(|&v| op.preimages(v)).collect();
        }
        pts
    }

    /// Points where `φ` may jump.
    pub fn discontinuities(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (idx, op) in self.ops.iter().enumerate() {
            let prefix = Self {
                ops: self.ops[..idx].to_vec(),
            };
            for d in op.discontinuities() {
                out.extend(prefix.preimages(d));
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out.retain(|&x| x > 0.0 && x < 1.0);
        out
    }

    /// Resolution `r` such that `φ` maps every `r`-cell affinely into a
    /// single `n`-cell.
    pub fn compatible_resolution(&self, n: usize) -> u128 {
        let mut r = n as u128;
        for op in self.ops.iter().rev() {
            r = match op {
                Primitive::Exchange { k, .. } => r.lcm(&(*k as u128)),
                Primitive::Expand { m } => r * *m as u128,
            };
        }
        r
    }

    /// Random composition of `len` primitives: exchanges with `k` drawn
    /// from `exchange_ks`, expanding maps with `m` in `2..=max_expand`
    /// (only when `max_expand >= 2`).
    pub fn random<R: Rng>(
        rng: &mut R,
        len: usize,
        exchange_ks: &[usize],
        max_expand: usize,
    ) -> Self {
        let mut map = Self::identity();
        for _ in 0..len {
            let expand = max_expand >= 2 && rng.gen_bool(0.5);
            let next = if expand {
                Self::expand(rng.gen_range(2..=max_expand)).expect("m >= 2")
            } else {
                let k = *exchange_ks.choose(rng).expect("nonempty block choices");
                let mut perm: Vec<usize> = (0..k).collect();
                perm.shuffle(rng);
                Self::exchange(k, perm).expect("shuffled permutation")
            };
            map = map.then(next);
        }
        map
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MapFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MapFile = serde_json::from_str(text)?;
        if file.format != MAP_FORMAT {
            return Err(Error::validation(format!(
                "unsupported map format {:?}, expected {MAP_FORMAT:?}",
                file.format
            )));
        }
        let mut map = Self::identity();
        for (i, op) in file.ops.into_iter().enumerate() {
            let next = match op {
                OpRecord::Exchange { k, perm } => {
                    if perm.iter().any(|&p| p == 0) {
                        return Err(Error::validation(format!(
                            "op {i}: exchange permutations are 1-based"
                        )));
                    }
                    Self::exchange(k, perm.iter().map(|p| p - 1).collect())
                }
                OpRecord::Expand { m } => Self::expand(m),
            }
            .map_err(|e| Error::validation(format!("op {i}: {e}")))?;
            map = map.then(next);
        }
        Ok(map)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum OpRecord {
    Exchange { k: usize, perm: Vec<usize> },
    Expand { m: usize },
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    format: String,
    ops: Vec<OpRecord>,
}

impl From<&MeasurePreservingMap> for MapFile {
    fn from(map: &MeasurePreservingMap) -> Self {
        MapFile {
            format: MAP_FORMAT.into(),
            ops: map
                .ops
                .iter()
                .map(|op| match op {
                    Primitive::Exchange { k, perm } => OpRecord::Exchange {
                        k: *k,
                        perm: perm.iter().map(|p| p + 1).collect(),
                    },
                    Primitive::Expand { m } => OpRecord::Expand { m: *m },
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_documented_example() {
        let text = r#"{"format":"mpm-v1", "ops":[{"kind":"exchange","k":4,"perm":[3,1,4,2]},{"kind":"expand","m":2}]}"#;
        let map = MeasurePreservingMap::from_json(text).unwrap();
        assert_eq!(
            map.ops(),
            &[
                Primitive::Exchange {
                    k: 4,
                    perm: vec![2, 0, 3, 1]
                },
                Primitive::Expand { m: 2 }
            ]
        );
        let back = MeasurePreservingMap::from_json(&map.to_json().unwrap()).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn rejects_bad_maps() {
        assert!(MeasurePreservingMap::from_json(
            r#"{"format":"mpm-v1","ops":[{"kind":"exchange","k":2,"perm":[1,1]}]}"#
        )
        .is_err());
        assert!(MeasurePreservingMap::from_json(
            r#"{"format":"mpm-v1","ops":[{"kind":"expand","m":1}]}"#
        )
        .is_err());
        assert!(MeasurePreservingMap::from_json(r#"{"format":"x","ops":[]}"#).is_err());
    }

    #[test]
    fn swap_halves_shifts_by_half() {
        let s = MeasurePreservingMap::swap_halves();
        assert_eq!(s.apply(0.1), 0.6);
        assert_eq!(s.apply(0.7), 0.7 - 0.5);
        assert_eq!(s.apply_exact(UnitPoint::new(1, 10)), UnitPoint::new(3, 5));
    }

    #[test]
    fn exact_and_float_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let map = MeasurePreservingMap::random(&mut rng, 4, &[2, 3, 4, 8], 3);
            for i in 0..50 {
                let p = UnitPoint::midpoint(i, 50);
                let exact = map.apply_exact(p).to_f64();
                assert!((exact - map.apply(p.to_f64())).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn preimages_map_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let map = MeasurePreservingMap::random(&mut rng, 3, &[2, 5], 3);
        for y in [0.1, 0.37, 0.9] {
            for x in map.preimages(y) {
                assert!((map.apply(x) - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn compatible_resolution_tracks_ops() {
        let m = MeasurePreservingMap::exchange(4, vec![1, 0, 3, 2])
            .unwrap()
            .then(MeasurePreservingMap::expand(2).unwrap());
        assert_eq!(m.compatible_resolution(8), 16);
        assert_eq!(MeasurePreservingMap::swap_halves().compatible_resolution(3), 6);
    }
}
