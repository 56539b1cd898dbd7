//! Finite join-semilattices paired with a quasi-metric.
//!
//! Elements are opaque indices into a finite carrier. Four families are
//! shipped:
//!
//! * `chain(max)` — integers `0..=max`, difference metric;
//! * `weighted_powerset(weights)` — subsets of a named universe with union
//!   join, metric `delta(A, B) = sum of weights of B \ A` for `A ⊆ B`;
//! * `vector_clock(dim, cap)` — capped coordinatewise-max vectors with a
//!   coordinate-sum difference metric;
//! * `explicit(...)` — raw order/join/delta tables, used for counterexamples.
//!
//! The first three carry metrics with exact triangle equality and are normal;
//! explicit tables can encode anything, including invalid structures that the
//! verifiers are expected to flag.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::distance::Distance;
use crate::error::{Error, Result};

/// Hard cap on carrier sizes accepted by the constructors.
pub const MAX_CARD: usize = 1 << 16;

/// Opaque element of a [`LatticeSpace`] carrier. Derived `Ord` is the carrier
/// index order, not the lattice order; it exists so elements can live in
/// ordered collections deterministically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elt(pub u32);

const VCLOCK_MAX_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq)]
enum Kernel {
    Chain {
        max: u32,
    },
    Powerset {
        names: Vec<String>,
        weights: Vec<f64>,
    },
    VectorClock {
        dim: u32,
        cap: u32,
    },
    Explicit {
        labels: Vec<String>,
        /// Row-major `card * card` order relation.
        leq: Vec<bool>,
        /// Join per ordered pair; `None` means no unique least upper bound
        /// exists (the verifier reports it; `join` falls back to `a`).
        join: Vec<Option<u32>>,
        bottom: Option<u32>,
    },
}

/// How distances are produced: the family's own metric, or an explicit table
/// keyed by ordered element pairs (the diagonal is implied zero unless a pair
/// overrides it).
#[derive(Clone, Debug, PartialEq)]
enum DeltaSource {
    Family,
    Table(BTreeMap<(u32, u32), f64>),
}

/// A finite lattice together with its quasi-metric.
#[derive(Clone, Debug)]
pub struct LatticeSpace {
    kernel: Kernel,
    delta: DeltaSource,
    normal_cache: OnceLock<(bool, Option<[Elt; 3]>)>,
}

impl PartialEq for LatticeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.kernel == other.kernel && self.delta == other.delta
    }
}

impl LatticeSpace {
    fn from_parts(kernel: Kernel, delta: DeltaSource) -> Self {
        LatticeSpace {
            kernel,
            delta,
            normal_cache: OnceLock::new(),
        }
    }

    /// Integer chain `0..=max` with `delta(a, b) = b - a`.
    pub fn chain(max: u32) -> Result<Self> {
        if max as usize + 1 > MAX_CARD {
            return Err(Error::InvalidParams(format!(
                "chain 0..={} exceeds {} elements",
                max, MAX_CARD
            )));
        }
        Ok(Self::from_parts(Kernel::Chain { max }, DeltaSource::Family))
    }

    /// Chain with the metric replaced by an explicit table; entries are
    /// `(from, to, value)` element values. Pairs not listed are undefined,
    /// except the implied zero diagonal.
    pub fn chain_with_table(max: u32, entries: &[(u32, u32, f64)]) -> Result<Self> {
        let mut space = Self::chain(max)?;
        let mut table = BTreeMap::new();
        for &(a, b, v) in entries {
            if a > max || b > max {
                return Err(Error::InvalidParams(format!(
                    "delta entry ({}, {}) outside chain 0..={}",
                    a, b, max
                )));
            }
            table.insert((a, b), v);
        }
        space.delta = DeltaSource::Table(table);
        Ok(space)
    }

    /// Powerset of a universe named by `weights` keys; join is union and
    /// `delta(A, B)` sums the weights of `B \ A` when `A ⊆ B`. Weights must be
    /// strictly positive.
    pub fn weighted_powerset(weights: &[(String, f64)]) -> Result<Self> {
        let u = weights.len();
        if u == 0 || u > 16 {
            return Err(Error::InvalidParams(format!(
                "powerset universe must have 1..=16 elements, got {}",
                u
            )));
        }
        for (name, w) in weights {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "weight of {:?} must be strictly positive, got {}",
                    name, w
                )));
            }
        }
        let names: Vec<String> = weights.iter().map(|(n, _)| n.clone()).collect();
        let ws: Vec<f64> = weights.iter().map(|(_, w)| *w).collect();
        Ok(Self::from_parts(
            Kernel::Powerset { names, weights: ws },
            DeltaSource::Family,
        ))
    }

    /// Powerset over auto-named universe `a, b, c, ...`.
    pub fn weighted_powerset_auto(weights: &[f64]) -> Result<Self> {
        let named: Vec<(String, f64)> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (((b'a' + i as u8) as char).to_string(), w))
            .collect();
        Self::weighted_powerset(&named)
    }

    /// Vectors of `dim` coordinates in `0..=cap`, coordinatewise order and
    /// max join, `delta(a, b) = sum_i (b_i - a_i)` for `a <= b`.
    pub fn vector_clock(dim: u32, cap: u32) -> Result<Self> {
        if dim == 0 || dim as usize > VCLOCK_MAX_DIM {
            return Err(Error::InvalidParams(format!(
                "vector clock dimension must be 1..={}, got {}",
                VCLOCK_MAX_DIM, dim
            )));
        }
        let card = (cap as u128 + 1).checked_pow(dim).unwrap_or(u128::MAX);
        if card > MAX_CARD as u128 {
            return Err(Error::InvalidParams(format!(
                "vector clock carrier ({}^{}) exceeds {} elements",
                cap + 1,
                dim,
                MAX_CARD
            )));
        }
        Ok(Self::from_parts(
            Kernel::VectorClock { dim, cap },
            DeltaSource::Family,
        ))
    }

    /// Raw tables. `leq_pairs` lists related pairs by index (reflexive pairs
    /// are implied, nothing else is closed over); `join_entries` overrides the
    /// derived least-upper-bound table; `delta_entries` is the metric table.
    pub fn explicit(
        labels: Vec<String>,
        leq_pairs: &[(u32, u32)],
        join_entries: Option<&[(u32, u32, u32)]>,
        delta_entries: Option<&[(u32, u32, f64)]>,
    ) -> Result<Self> {
        let card = labels.len();
        if card == 0 || card > MAX_CARD {
            return Err(Error::InvalidParams(format!(
                "explicit lattice needs 1..={} elements, got {}",
                MAX_CARD, card
            )));
        }
        {
            let mut sorted = labels.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != card {
                return Err(Error::InvalidParams(
                    "explicit element labels must be distinct".into(),
                ));
            }
        }
        let mut leq = vec![false; card * card];
        for i in 0..card {
            leq[i * card + i] = true;
        }
        for &(a, b) in leq_pairs {
            let (a, b) = (a as usize, b as usize);
            if a >= card || b >= card {
                return Err(Error::InvalidParams(format!(
                    "leq pair ({}, {}) outside carrier of {} elements",
                    a, b, card
                )));
            }
            leq[a * card + b] = true;
        }

        let join = match join_entries {
            Some(entries) => {
                let mut table = derive_joins(card, &leq);
                for &(a, b, j) in entries {
                    let (a, b, j) = (a as usize, b as usize, j as usize);
                    if a >= card || b >= card || j >= card {
                        return Err(Error::InvalidParams(format!(
                            "join entry ({}, {}, {}) outside carrier",
                            a, b, j
                        )));
                    }
                    table[a * card + b] = Some(j as u32);
                    table[b * card + a] = Some(j as u32);
                }
                table
            }
            None => derive_joins(card, &leq),
        };

        let bottom = (0..card)
            .find(|&b| (0..card).all(|x| leq[b * card + x]))
            .map(|b| b as u32);

        let delta = match delta_entries {
            Some(entries) => {
                let mut table = BTreeMap::new();
                for &(a, b, v) in entries {
                    if a as usize >= card || b as usize >= card {
                        return Err(Error::InvalidParams(format!(
                            "delta entry ({}, {}) outside carrier",
                            a, b
                        )));
                    }
                    table.insert((a, b), v);
                }
                DeltaSource::Table(table)
            }
            None => DeltaSource::Table(BTreeMap::new()),
        };

        Ok(Self::from_parts(
            Kernel::Explicit {
                labels,
                leq,
                join,
                bottom,
            },
            delta,
        ))
    }

    /// Replace the metric with an explicit table keyed by labels.
    pub fn with_delta_table(mut self, entries: &[(String, String, f64)]) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (from, to, v) in entries {
            let a = self.parse_label(from)?;
            let b = self.parse_label(to)?;
            table.insert((a.0, b.0), *v);
        }
        self.delta = DeltaSource::Table(table);
        self.normal_cache = OnceLock::new();
        Ok(self)
    }

    pub fn card(&self) -> usize {
        match &self.kernel {
            Kernel::Chain { max } => *max as usize + 1,
            Kernel::Powerset { names, .. } => 1 << names.len(),
            Kernel::VectorClock { dim, cap } => ((*cap as usize) + 1).pow(*dim),
            Kernel::Explicit { labels, .. } => labels.len(),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Elt> {
        (0..self.card() as u32).map(Elt)
    }

    pub fn leq(&self, a: Elt, b: Elt) -> bool {
        match &self.kernel {
            Kernel::Chain { .. } => a.0 <= b.0,
            Kernel::Powerset { .. } => a.0 & !b.0 == 0,
            Kernel::VectorClock { dim, cap } => {
                let (av, bv) = (decode_vc(a.0, *dim, *cap), decode_vc(b.0, *dim, *cap));
                av.iter().zip(bv.iter()).take(*dim as usize).all(|(x, y)| x <= y)
            }
            Kernel::Explicit { leq, labels, .. } => leq[a.0 as usize * labels.len() + b.0 as usize],
        }
    }

    pub fn join(&self, a: Elt, b: Elt) -> Elt {
        match &self.kernel {
            Kernel::Chain { .. } => Elt(a.0.max(b.0)),
            Kernel::Powerset { .. } => Elt(a.0 | b.0),
            Kernel::VectorClock { dim, cap } => {
                let (av, bv) = (decode_vc(a.0, *dim, *cap), decode_vc(b.0, *dim, *cap));
                let mut jv = [0u32; VCLOCK_MAX_DIM];
                for i in 0..*dim as usize {
                    jv[i] = av[i].max(bv[i]);
                }
                Elt(encode_vc(&jv, *dim, *cap))
            }
            Kernel::Explicit { join, labels, .. } => {
                join[a.0 as usize * labels.len() + b.0 as usize]
                    .map(Elt)
                    .unwrap_or(a)
            }
        }
    }

    pub fn join_all(&self, elts: &[Elt]) -> Result<Elt> {
        let mut it = elts.iter();
        let first = *it.next().ok_or(Error::EmptySet)?;
        Ok(it.fold(first, |acc, &e| self.join(acc, e)))
    }

    pub fn bottom(&self) -> Option<Elt> {
        match &self.kernel {
            Kernel::Chain { .. } | Kernel::Powerset { .. } | Kernel::VectorClock { .. } => {
                Some(Elt(0))
            }
            Kernel::Explicit { bottom, .. } => bottom.map(Elt),
        }
    }

    pub fn delta(&self, a: Elt, b: Elt) -> Distance {
        match &self.delta {
            DeltaSource::Table(table) => match table.get(&(a.0, b.0)) {
                Some(&v) => Distance::Finite(v),
                None if a == b => Distance::ZERO,
                None => Distance::Undefined,
            },
            DeltaSource::Family => self.family_delta(a, b),
        }
    }

    fn family_delta(&self, a: Elt, b: Elt) -> Distance {
        match &self.kernel {
            Kernel::Chain { .. } => {
                if a.0 <= b.0 {
                    Distance::Finite((b.0 - a.0) as f64)
                } else {
                    Distance::Undefined
                }
            }
            Kernel::Powerset { weights, .. } => {
                if a.0 & !b.0 != 0 {
                    return Distance::Undefined;
                }
                let mut extra = b.0 & !a.0;
                let mut sum = 0.0;
                while extra != 0 {
                    let i = extra.trailing_zeros();
                    sum += weights[i as usize];
                    extra &= extra - 1;
                }
                Distance::Finite(sum)
            }
            Kernel::VectorClock { dim, cap } => {
                let (av, bv) = (decode_vc(a.0, *dim, *cap), decode_vc(b.0, *dim, *cap));
                let mut sum = 0u64;
                for i in 0..*dim as usize {
                    if av[i] > bv[i] {
                        return Distance::Undefined;
                    }
                    sum += (bv[i] - av[i]) as u64;
                }
                Distance::Finite(sum as f64)
            }
            // Explicit families without a table only know the diagonal.
            Kernel::Explicit { .. } => {
                if a == b {
                    Distance::ZERO
                } else {
                    Distance::Undefined
                }
            }
        }
    }

    /// Cached height-normality: `a <= b <= c` never has a sub-chain distance
    /// exceeding `delta(a, c)`. Returns the verdict and a witness chain when
    /// not normal.
    pub fn normality(&self) -> (bool, Option<[Elt; 3]>) {
        *self.normal_cache.get_or_init(|| self.scan_normality())
    }

    pub fn is_normal(&self) -> bool {
        self.normality().0
    }

    fn scan_normality(&self) -> (bool, Option<[Elt; 3]>) {
        let n = self.card();
        let ups: Vec<Vec<u32>> = (0..n as u32)
            .map(|a| {
                (0..n as u32)
                    .filter(|&b| self.leq(Elt(a), Elt(b)))
                    .collect()
            })
            .collect();
        for a in 0..n as u32 {
            for &b in &ups[a as usize] {
                for &c in &ups[b as usize] {
                    let ac = self.delta(Elt(a), Elt(c));
                    let ab = self.delta(Elt(a), Elt(b));
                    let bc = self.delta(Elt(b), Elt(c));
                    if !(ab.le_tol(ac) && bc.le_tol(ac)) {
                        return (false, Some([Elt(a), Elt(b), Elt(c)]));
                    }
                }
            }
        }
        (true, None)
    }

    pub fn label(&self, e: Elt) -> String {
        match &self.kernel {
            Kernel::Chain { .. } => e.0.to_string(),
            Kernel::Powerset { names, .. } => {
                let members: Vec<&str> = names
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| e.0 >> i & 1 == 1)
                    .map(|(_, n)| n.as_str())
                    .collect();
                format!("{{{}}}", members.join(","))
            }
            Kernel::VectorClock { dim, cap } => {
                let v = decode_vc(e.0, *dim, *cap);
                let coords: Vec<String> =
                    v.iter().take(*dim as usize).map(|c| c.to_string()).collect();
                format!("({})", coords.join(","))
            }
            Kernel::Explicit { labels, .. } => labels[e.0 as usize].clone(),
        }
    }

    pub fn parse_label(&self, s: &str) -> Result<Elt> {
        let fail = || Error::UnknownLabel(s.to_string());
        match &self.kernel {
            Kernel::Chain { max } => {
                let v: u32 = s.trim().parse().map_err(|_| fail())?;
                if v > *max {
                    return Err(fail());
                }
                Ok(Elt(v))
            }
            Kernel::Powerset { names, .. } => {
                let inner = s
                    .trim()
                    .strip_prefix('{')
                    .and_then(|t| t.strip_suffix('}'))
                    .ok_or_else(fail)?;
                let mut mask = 0u32;
                for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    let i = names.iter().position(|n| n == part).ok_or_else(fail)?;
                    mask |= 1 << i;
                }
                Ok(Elt(mask))
            }
            Kernel::VectorClock { dim, cap } => {
                let inner = s
                    .trim()
                    .strip_prefix('(')
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(fail)?;
                let coords: Vec<u32> = inner
                    .split(',')
                    .map(|p| p.trim().parse::<u32>().map_err(|_| fail()))
                    .collect::<Result<_>>()?;
                if coords.len() != *dim as usize || coords.iter().any(|&c| c > *cap) {
                    return Err(fail());
                }
                let mut v = [0u32; VCLOCK_MAX_DIM];
                v[..coords.len()].copy_from_slice(&coords);
                Ok(Elt(encode_vc(&v, *dim, *cap)))
            }
            Kernel::Explicit { labels, .. } => labels
                .iter()
                .position(|l| l == s)
                .map(|i| Elt(i as u32))
                .ok_or_else(fail),
        }
    }

    /// Family descriptor used by the document format.
    pub fn family_name(&self) -> &'static str {
        match &self.kernel {
            Kernel::Chain { .. } => "chain",
            Kernel::Powerset { .. } => "weighted-powerset",
            Kernel::VectorClock { .. } => "vector-clock",
            Kernel::Explicit { .. } => "explicit",
        }
    }

    pub(crate) fn describe(&self) -> FamilyParams {
        match &self.kernel {
            Kernel::Chain { max } => FamilyParams::Chain { max: *max },
            Kernel::Powerset { names, weights } => FamilyParams::Powerset {
                weights: names.iter().cloned().zip(weights.iter().copied()).collect(),
            },
            Kernel::VectorClock { dim, cap } => FamilyParams::VectorClock {
                dim: *dim,
                cap: *cap,
            },
            Kernel::Explicit { labels, leq, join, .. } => {
                let card = labels.len();
                let mut pairs = Vec::new();
                for a in 0..card {
                    for b in 0..card {
                        if a != b && leq[a * card + b] {
                            pairs.push((a as u32, b as u32));
                        }
                    }
                }
                let mut joins = Vec::new();
                for a in 0..card {
                    for b in a..card {
                        if let Some(j) = join[a * card + b] {
                            joins.push((a as u32, b as u32, j));
                        }
                    }
                }
                FamilyParams::Explicit {
                    labels: labels.clone(),
                    leq: pairs,
                    join: joins,
                }
            }
        }
    }

    pub(crate) fn delta_table(&self) -> Option<Vec<(Elt, Elt, f64)>> {
        match &self.delta {
            DeltaSource::Family => None,
            DeltaSource::Table(t) => Some(
                t.iter()
                    .map(|(&(a, b), &v)| (Elt(a), Elt(b), v))
                    .collect(),
            ),
        }
    }
}

pub(crate) enum FamilyParams {
    Chain { max: u32 },
    Powerset { weights: Vec<(String, f64)> },
    VectorClock { dim: u32, cap: u32 },
    Explicit {
        labels: Vec<String>,
        leq: Vec<(u32, u32)>,
        join: Vec<(u32, u32, u32)>,
    },
}

fn decode_vc(e: u32, dim: u32, cap: u32) -> [u32; VCLOCK_MAX_DIM] {
    let base = cap + 1;
    let mut v = [0u32; VCLOCK_MAX_DIM];
    let mut rest = e;
    for coord in v.iter_mut().take(dim as usize) {
        *coord = rest % base;
        rest /= base;
    }
    v
}

fn encode_vc(v: &[u32; VCLOCK_MAX_DIM], dim: u32, cap: u32) -> u32 {
    let base = cap + 1;
    let mut e = 0u32;
    for i in (0..dim as usize).rev() {
        e = e * base + v[i];
    }
    e
}

/// Least upper bound per pair, where one exists.
fn derive_joins(card: usize, leq: &[bool]) -> Vec<Option<u32>> {
    let mut table = vec![None; card * card];
    for a in 0..card {
        for b in 0..card {
            let lub = (0..card)
                .filter(|&c| leq[a * card + c] && leq[b * card + c])
                .find(|&c| {
                    (0..card)
                        .filter(|&d| leq[a * card + d] && leq[b * card + d])
                        .all(|d| leq[c * card + d])
                });
            table[a * card + b] = lub.map(|c| c as u32);
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_basics() {
        let s = LatticeSpace::chain(9).unwrap();
        assert_eq!(s.card(), 10);
        assert!(s.leq(Elt(2), Elt(7)));
        assert!(!s.leq(Elt(7), Elt(2)));
        assert_eq!(s.join(Elt(2), Elt(7)), Elt(7));
        assert_eq!(s.delta(Elt(2), Elt(7)), Distance::Finite(5.0));
        assert_eq!(s.delta(Elt(7), Elt(2)), Distance::Undefined);
        assert_eq!(s.bottom(), Some(Elt(0)));
    }

    #[test]
    fn powerset_weights() {
        let s = LatticeSpace::weighted_powerset_auto(&[1.0, 5.0]).unwrap();
        assert_eq!(s.card(), 4);
        let a = s.parse_label("{a}").unwrap();
        let ab = s.parse_label("{a,b}").unwrap();
        assert_eq!(s.delta(a, ab), Distance::Finite(5.0));
        assert_eq!(s.delta(ab, a), Distance::Undefined);
        assert_eq!(s.join(a, s.parse_label("{b}").unwrap()), ab);
        assert_eq!(s.label(ab), "{a,b}");
        assert_eq!(s.label(Elt(0)), "{}");
    }

    #[test]
    fn vector_clock_roundtrip() {
        let s = LatticeSpace::vector_clock(3, 4).unwrap();
        assert_eq!(s.card(), 125);
        let e = s.parse_label("(1,0,4)").unwrap();
        assert_eq!(s.label(e), "(1,0,4)");
        let lo = s.parse_label("(0,0,0)").unwrap();
        assert_eq!(s.delta(lo, e), Distance::Finite(5.0));
        let other = s.parse_label("(0,2,1)").unwrap();
        assert!(!s.leq(e, other) && !s.leq(other, e));
        assert_eq!(s.label(s.join(e, other)), "(1,2,4)");
    }

    #[test]
    fn explicit_diamond_derives_joins() {
        let s = LatticeSpace::explicit(
            vec!["bot".into(), "l".into(), "r".into(), "top".into()],
            &[(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)],
            None,
            Some(&[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 2.0), (1, 3, 1.0), (2, 3, 1.0)]),
        )
        .unwrap();
        assert_eq!(s.join(Elt(1), Elt(2)), Elt(3));
        assert_eq!(s.bottom(), Some(Elt(0)));
        assert_eq!(s.delta(Elt(1), Elt(1)), Distance::ZERO);
        assert_eq!(s.delta(Elt(1), Elt(2)), Distance::Undefined);
    }

    #[test]
    fn nonnormal_chain_table() {
        let s = LatticeSpace::chain_with_table(2, &[(0, 1, 5.0), (1, 2, 5.0), (0, 2, 4.0)])
            .unwrap();
        let (normal, witness) = s.normality();
        assert!(!normal);
        assert_eq!(witness, Some([Elt(0), Elt(1), Elt(2)]));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(LatticeSpace::weighted_powerset_auto(&[1.0, 0.0]).is_err());
        assert!(LatticeSpace::weighted_powerset_auto(&[]).is_err());
        assert!(LatticeSpace::vector_clock(0, 3).is_err());
        assert!(LatticeSpace::vector_clock(8, 15).is_err());
    }
}
