use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DIST_FORMAT: &str = "dist-v1";

/// Point mass carrying an integer share `mass / total` of a law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub mass: u64,
}

/// A probability law on the real line: finitely many atoms with rational
/// weights, or an exact uniform law.
///
/// Atom weights are stored as integer masses over a common total, which
/// keeps Kolmogorov–Smirnov and total-variation distances between two
/// atomic laws exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistFile", into = "DistFile")]
pub enum EmpiricalDistribution {
    Atoms { atoms: Vec<Atom>, total: u64 },
    Uniform { lo: f64, hi: f64 },
}

impl EmpiricalDistribution {
    /// Law of a uniformly chosen entry of `values`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::from_weighted(values.iter().map(|&v| (v, 1)))
    }

    /// Law with atoms `(value, mass)`; equal values are merged.
    pub fn from_weighted(pairs: impl IntoIterator<Item = (f64, u64)>) -> Result<Self> {
        let mut raw: Vec<Atom> = pairs
            .into_iter()
            .filter(|&(_, m)| m > 0)
            .map(|(value, mass)| Atom { value, mass })
            .collect();
        if raw.is_empty() {
            return Err(Error::validation("a law needs at least one atom of positive mass"));
        }
        if let Some(bad) = raw.iter().find(|a| !a.value.is_finite()) {
            return Err(Error::validation(format!("non-finite atom {}", bad.value)));
        }
        raw.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut atoms: Vec<Atom> = Vec::with_capacity(raw.len());
        for a in raw {
            match atoms.last_mut() {
                Some(last) if last.value == a.value => last.mass += a.mass,
                _ => atoms.push(a),
            }
        }
        let total = atoms.iter().map(|a| a.mass).sum();
        Ok(EmpiricalDistribution::Atoms { atoms, total })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!("uniform({lo}, {hi}) needs lo < hi")));
        }
        Ok(EmpiricalDistribution::Uniform { lo, hi })
    }

    pub fn atoms(&self) -> &[Atom] {
        match self {
            EmpiricalDistribution::Atoms { atoms, .. } => atoms,
            EmpiricalDistribution::Uniform { .. } => &[],
        }
    }

    pub fn total(&self) -> u64 {
        match self {
            EmpiricalDistribution::Atoms { total, .. } => *total,
            EmpiricalDistribution::Uniform { .. } => 0,
        }
    }

    /// `(value, weight)` pairs; empty for the exact uniform law.
    pub fn weighted_atoms(&self) -> Vec<(f64, f64)> {
        let t = self.total() as f64;
        self.atoms()
            .iter()
            .map(|a| (a.value, a.mass as f64 / t))
            .collect()
    }

    /// `P(X ≤ r)`.
    pub fn cdf(&self, r: f64) -> f64 {
        match self {
            EmpiricalDistribution::Atoms { atoms, total } => {
                let k = atoms.partition_point(|a| a.value <= r);
                mass_prefix(atoms, k) as f64 / *total as f64
            }
            EmpiricalDistribution::Uniform { lo, hi } => ((r - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// `P(X < r)`.
    pub fn cdf_left(&self, r: f64) -> f64 {
        match self {
            EmpiricalDistribution::Atoms { atoms, total } => {
                let k = atoms.partition_point(|a| a.value < r);
                mass_prefix(atoms, k) as f64 / *total as f64
            }
            EmpiricalDistribution::Uniform { .. } => self.cdf(r),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            EmpiricalDistribution::Atoms { atoms, total } => {
                let terms: Vec<f64> = atoms.iter().map(|a| a.value * a.mass as f64).collect();
                crate::numeric::pairwise_sum(&terms) / *total as f64
            }
            EmpiricalDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// Kolmogorov–Smirnov distance `sup_r |F(r) − G(r)|`. Exact between
    /// two atomic laws.
    pub fn ks(&self, other: &Self) -> f64 {
        use EmpiricalDistribution::*;
        match (self, other) {
            (Atoms { atoms: a, total: ta }, Atoms { atoms: b, total: tb }) => {
                ks_atoms(a, *ta, b, *tb)
            }
            (Atoms { .. }, Uniform { .. }) => self.sup_distance_to_cdf(|r| other.cdf(r), &[]),
            (Uniform { .. }, Atoms { .. }) => other.ks(self),
            (Uniform { lo: a0, hi: a1 }, Uniform { lo: b0, hi: b1 }) => {
                // both CDFs are piecewise linear; the sup sits on a breakpoint
                [*a0, *a1, *b0, *b1]
                    .iter()
                    .map(|&r| (self.cdf(r) - other.cdf(r)).abs())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// `sup_r |F(r) − G(r)|` against a nondecreasing reference CDF `g`
    /// whose jump locations are listed in `jumps`. `g_left` is implied:
    /// the reference is evaluated at `r` and just below it.
    pub fn sup_distance_to_cdf<G: Fn(f64) -> f64>(&self, g: G, jumps: &[f64]) -> f64 {
        let mut points: Vec<f64> = self.atoms().iter().map(|a| a.value).collect();
        points.extend_from_slice(jumps);
        let mut sup = 0.0_f64;
        for &r in &points {
            let below = prev_float(r);
            sup = sup
                .max((self.cdf(r) - g(r)).abs())
                .max((self.cdf_left(r) - g(below)).abs());
        }
        sup
    }

    /// Total-variation distance between two atomic laws after snapping
    /// every value to the nearest point of the lattice `resolution·ℤ`
    /// (`resolution = 0` compares values exactly). Exact arithmetic.
    pub fn tv(&self, other: &Self, resolution: f64) -> Result<f64> {
        let (Self::Atoms { atoms: a, total: ta }, Self::Atoms { atoms: b, total: tb }) =
            (self, other)
        else {
            return Err(Error::domain("total variation needs two atomic laws"));
        };
        let snap = |v: f64| {
            if resolution > 0.0 {
                (v / resolution).round() * resolution
            } else {
                v
            }
        };
        let mut keyed: Vec<(f64, i128)> = a
            .iter()
            .map(|x| (snap(x.value), x.mass as i128 * *tb as i128))
            .chain(b.iter().map(|y| (snap(y.value), -(y.mass as i128 * *ta as i128))))
            .collect();
        keyed.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut sum_abs: i128 = 0;
        let mut i = 0;
        while i < keyed.len() {
            let v = keyed[i].0;
            let mut net = 0i128;
            while i < keyed.len() && keyed[i].0 == v {
                net += keyed[i].1;
                i += 1;
            }
            sum_abs += net.abs();
        }
        Ok(sum_abs as f64 / (2.0 * *ta as f64 * *tb as f64))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&DistFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DistFile = serde_json::from_str(text)?;
        file.try_into()
    }

    /// CSV with columns `value,mass,weight` (atomic laws only).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["value", "mass", "weight"])?;
        let t = self.total();
        for a in self.atoms() {
            w.write_record([
                a.value.to_string(),
                a.mass.to_string(),
                (a.mass as f64 / t as f64).to_string(),
            ])?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::validation(e.to_string()))?)
            .map_err(|e| Error::validation(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut pairs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let value: f64 = parse_field(&rec, 0)?;
            let mass: u64 = parse_field(&rec, 1)?;
            pairs.push((value, mass));
        }
        Self::from_weighted(pairs)
    }
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::validation(format!("bad csv field {i} in {rec:?}")))
}

fn mass_prefix(atoms: &[Atom], k: usize) -> u64 {
    atoms[..k].iter().map(|a| a.mass).sum()
}

fn prev_float(r: f64) -> f64 {
    if r == 0.0 {
        -f64::MIN_POSITIVE
    } else if r > 0.0 {
        f64::from_bits(r.to_bits() - 1)
    } else {
        f64::from_bits(r.to_bits() + 1)
    }
}

fn ks_atoms(a: &[Atom], ta: u64, b: &[Atom], tb: u64) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut ca, mut cb) = (0i128, 0i128);
    let (ta, tb) = (ta as i128, tb as i128);
    let mut sup = 0i128;
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.value.min(y.value),
            (Some(x), None) => x.value,
            (None, Some(y)) => y.value,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i].value == v {
            ca += a[i].mass as i128;
            i += 1;
        }
        while j < b.len() && b[j].value == v {
            cb += b[j].mass as i128;
            j += 1;
        }
        sup = sup.max((ca * tb - cb * ta).abs());
    }
    sup as f64 / (ta as f64 * tb as f64)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DistBody {
    Atoms { total: u64, atoms: Vec<AtomRecord> },
    Uniform { lo: f64, hi: f64 },
}

#[derive(Serialize, Deserialize)]
struct AtomRecord {
    value: f64,
    mass: u64,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct DistFile {
    format: String,
    #[serde(flatten)]
    body: DistBody,
}

impl From<&EmpiricalDistribution> for DistFile {
    fn from(d: &EmpiricalDistribution) -> Self {
        let body = match d {
            EmpiricalDistribution::Atoms { atoms, total } => DistBody::Atoms {
                total: *total,
                atoms: atoms
                    .iter()
                    .map(|a| AtomRecord {
                        value: a.value,
                        mass: a.mass,
                        weight: a.mass as f64 / *total as f64,
                    })
                    .collect(),
            },
            EmpiricalDistribution::Uniform { lo, hi } => DistBody::Uniform { lo: *lo, hi: *hi },
        };
        DistFile {
            format: DIST_FORMAT.to_string(),
            body,
        }
    }
}

impl From<EmpiricalDistribution> for DistFile {
    fn from(d: EmpiricalDistribution) -> Self {
        DistFile::from(&d)
    }
}

impl TryFrom<DistFile> for EmpiricalDistribution {
    type Error = Error;

    fn try_from(f: DistFile) -> Result<Self> {
        if f.format != DIST_FORMAT {
            return Err(Error::validation(format!(
                "unsupported distribution format {:?}",
                f.format
            )));
        }
        match f.body {
            DistBody::Atoms { total, atoms } => {
                let law = Self::from_weighted(atoms.into_iter().map(|a| (a.value, a.mass)))?;
                if law.total() != total {
                    return Err(Error::validation(format!(
                        "atom masses sum to {}, header says {total}",
                        law.total()
                    )));
                }
                Ok(law)
            }
            DistBody::Uniform { lo, hi } => Self::uniform(lo, hi),
        }
    }
}

/// Law of a pair `(d, h)`: atoms with integer masses, sorted
/// lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    atoms: Vec<(f64, f64, u64)>,
    total: u64,
}

impl JointDistribution {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw: Vec<(f64, f64)> = pairs.into_iter().collect();
        if raw.is_empty() {
            return Err(Error::validation("a joint law needs at least one atom"));
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut atoms: Vec<(f64, f64, u64)> = Vec::with_capacity(raw.len());
        for (d, h) in raw {
            match atoms.last_mut() {
                Some(last) if last.0 == d && last.1 == h => last.2 += 1,
                _ => atoms.push((d, h, 1)),
            }
        }
        let total = atoms.iter().map(|a| a.2).sum();
        Ok(Self { atoms, total })
    }

    pub fn atoms(&self) -> &[(f64, f64, u64)] {
        &self.atoms
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Marginal law of the first coordinate.
    pub fn first_marginal(&self) -> EmpiricalDistribution {
        EmpiricalDistribution::from_weighted(self.atoms.iter().map(|a| (a.0, a.2)))
            .expect("joint law is nonempty")
    }

    /// Marginal law of the second coordinate.
    pub fn second_marginal(&self) -> EmpiricalDistribution {
        EmpiricalDistribution::from_weighted(self.atoms.iter().map(|a| (a.1, a.2)))
            .expect("joint law is nonempty")
    }

    /// Bivariate Kolmogorov–Smirnov distance over lower-left quadrants,
    /// `sup_{r,s} |P(d ≤ r, h ≤ s) − Q(d ≤ r, h ≤ s)|`, computed exactly.
    ///
    /// Sweeps the second coordinate upward while a range-add/max segment
    /// tree over the first coordinate holds the signed quadrant masses.
    pub fn ks(&self, other: &Self) -> f64 {
        let (ta, tb) = (self.total as i128, other.total as i128);
        let mut events: Vec<(f64, f64, i128)> = self
            .atoms
            .iter()
            .map(|&(d, h, m)| (d, h, m as i128 * tb))
            .chain(other.atoms.iter().map(|&(d, h, m)| (d, h, -(m as i128 * ta))))
            .collect();
        let mut ds: Vec<f64> = events.iter().map(|e| e.0).collect();
        ds.sort_by(f64::total_cmp);
        ds.dedup();
        events.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut tree = RangeAddTree::new(ds.len());
        let mut sup = 0i128;
        let mut i = 0;
        while i < events.len() {
            let s = events[i].1;
            while i < events.len() && events[i].1 == s {
                let pos = ds.partition_point(|&d| d < events[i].0);
                tree.add_suffix(pos, events[i].2);
                i += 1;
            }
            sup = sup.max(tree.max_abs());
        }
        sup as f64 / (ta as f64 * tb as f64)
    }
}

/// Segment tree supporting "add to every position ≥ p" and a global
/// max-abs query.
struct RangeAddTree {
    size: usize,
    max: Vec<i128>,
    min: Vec<i128>,
    lazy: Vec<i128>,
}

impl RangeAddTree {
    fn new(n: usize) -> Self {
        let size = n.max(1).next_power_of_two();
        Self {
            size,
            max: vec![0; 2 * size],
            min: vec![0; 2 * size],
            lazy: vec![0; 2 * size],
        }
    }

    fn add_suffix(&mut self, from: usize, v: i128) {
        let size = self.size;
        self.add(1, 0, size, from, size, v);
    }

    fn add(&mut self, node: usize, lo: usize, hi: usize, a: usize, b: usize, v: i128) {
        if b <= lo || hi <= a {
            return;
        }
        if a <= lo && hi <= b {
            self.max[node] += v;
            self.min[node] += v;
            self.lazy[node] += v;
            return;
        }
        let mid = (lo + hi) / 2;
        self.add(2 * node, lo, mid, a, b, v);
        self.add(2 * node + 1, mid, hi, a, b, v);
        let l = self.lazy[node];
        self.max[node] = self.max[2 * node].max(self.max[2 * node + 1]) + l;
        self.min[node] = self.min[2 * node].min(self.min[2 * node + 1]) + l;
    }

    fn max_abs(&self) -> i128 {
        self.max[1].abs().max(self.min[1].abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_sorts_atoms() {
        let d = EmpiricalDistribution::from_values(&[0.3, 0.1, 0.3, 0.2]).unwrap();
        assert_eq!(d.atoms().len(), 3);
        assert_eq!(d.atoms()[2], Atom { value: 0.3, mass: 2 });
        assert_eq!(d.cdf(0.2), 0.5);
        assert_eq!(d.cdf_left(0.3), 0.5);
        assert_eq!(d.cdf(0.3), 1.0);
    }

    #[test]
    fn constant_law_cdf() {
        let d = EmpiricalDistribution::from_values(&[0.3; 5]).unwrap();
        assert_eq!(d.cdf(0.2999), 0.0);
        assert_eq!(d.cdf(0.3), 1.0);
    }

    #[test]
    fn ks_between_atom_laws_is_exact() {
        let a = EmpiricalDistribution::from_values(&[0.1, 0.2, 0.3]).unwrap();
        let b = EmpiricalDistribution::from_values(&[0.3, 0.2, 0.1, 0.1, 0.2, 0.3]).unwrap();
        assert_eq!(a.ks(&b), 0.0);
        let c = EmpiricalDistribution::from_values(&[0.1, 0.2, 0.4]).unwrap();
        assert!((a.ks(&c) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_against_uniform() {
        let pts: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let a = EmpiricalDistribution::from_values(&pts).unwrap();
        let u = EmpiricalDistribution::uniform(0.0, 1.0).unwrap();
        assert!((a.ks(&u) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn tv_of_disjoint_laws_is_one() {
        let h = EmpiricalDistribution::from_weighted([(0.0, 1), (0.5, 1)]).unwrap();
        let f = EmpiricalDistribution::from_weighted([(0.25, 7)]).unwrap();
        assert_eq!(h.tv(&f, 0.0).unwrap(), 1.0);
        assert_eq!(h.tv(&h, 0.0).unwrap(), 0.0);
        // snapping to a coarse lattice merges nearby values
        let g = EmpiricalDistribution::from_weighted([(0.01, 1), (0.49, 1)]).unwrap();
        assert_eq!(h.tv(&g, 0.125).unwrap(), 0.0);
        assert_eq!(h.tv(&g, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn json_and_csv_round_trip() {
        let d = EmpiricalDistribution::from_values(&[0.125, 0.1, 0.7, 0.1]).unwrap();
        assert_eq!(EmpiricalDistribution::from_json(&d.to_json().unwrap()).unwrap(), d);
        assert_eq!(EmpiricalDistribution::from_csv(&d.to_csv().unwrap()).unwrap(), d);
        let u = EmpiricalDistribution::uniform(0.0, 0.25).unwrap();
        assert_eq!(EmpiricalDistribution::from_json(&u.to_json().unwrap()).unwrap(), u);
    }

    #[test]
    fn joint_ks_matches_brute_force() {
        let p = JointDistribution::from_pairs([(0.1, 0.5), (0.2, 0.0), (0.1, 0.0), (0.3, 0.5)])
            .unwrap();
        let q = JointDistribution::from_pairs([(0.1, 0.5), (0.2, 0.5), (0.3, 0.0)]).unwrap();
        let mut brute: f64 = 0.0;
        let coords: Vec<(f64, f64)> = p
            .atoms()
            .iter()
            .chain(q.atoms())
            .map(|a| (a.0, a.1))
            .collect();
        let quad = |j: &JointDistribution, r: f64, s: f64| {
            j.atoms()
                .iter()
                .filter(|a| a.0 <= r && a.1 <= s)
                .map(|a| a.2)
                .sum::<u64>() as f64
                / j.total() as f64
        };
        for &(r, _) in &coords {
            for &(_, s) in &coords {
                brute = brute.max((quad(&p, r, s) - quad(&q, r, s)).abs());
            }
        }
        assert!((p.ks(&q) - brute).abs() < 1e-15);
        assert_eq!(p.ks(&p), 0.0);
    }
}
