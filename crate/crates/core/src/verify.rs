//! Exhaustive axiom checkers for lattices and quasi-metrics.
//!
//! Everything here scans the whole carrier, so the entry points refuse
//! carriers above [`DEFAULT_ELEMENT_LIMIT`] instead of silently sampling.

use std::fmt;

use crate::distance::Distance;
use crate::error::{Error, Result};
use crate::space::{Elt, LatticeSpace};

/// Carriers above this size are refused by the exhaustive checkers.
pub const DEFAULT_ELEMENT_LIMIT: usize = 4096;

/// Stop collecting after this many violations per run; the first hits carry
/// the witnesses that matter.
const MAX_VIOLATIONS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    Reflexivity,
    Antisymmetry,
    Transitivity,
    JoinUpperBound,
    JoinLeast,
    JoinCommutativity,
    JoinAssociativity,
    JoinIdempotence,
    BottomNotLeast,
    MetricIdentity,
    MetricDomain,
    MetricTriangle,
    MetricNonNegative,
}

impl Axiom {
    pub fn name(self) -> &'static str {
        match self {
            Axiom::Reflexivity => "reflexivity",
            Axiom::Antisymmetry => "antisymmetry",
            Axiom::Transitivity => "transitivity",
            Axiom::JoinUpperBound => "join-upper-bound",
            Axiom::JoinLeast => "join-least",
            Axiom::JoinCommutativity => "join-commutativity",
            Axiom::JoinAssociativity => "join-associativity",
            Axiom::JoinIdempotence => "join-idempotence",
            Axiom::BottomNotLeast => "bottom-not-least",
            Axiom::MetricIdentity => "(i) identity",
            Axiom::MetricDomain => "(ii) domain",
            Axiom::MetricTriangle => "(iii) triangle",
            Axiom::MetricNonNegative => "nonnegativity",
        }
    }
}

/// A failed axiom with the elements that witness the failure.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: Vec<Elt>,
    pub detail: String,
}

impl Violation {
    fn new(space: &LatticeSpace, axiom: Axiom, witness: Vec<Elt>) -> Self {
        let labels: Vec<String> = witness.iter().map(|&e| space.label(e)).collect();
        let detail = format!("{} ({})", axiom.name(), labels.join(","));
        Violation {
            axiom,
            witness,
            detail,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detail)
    }
}

/// Up-set bitsets: row `a` has bit `b` set iff `a <= b`.
struct UpSets {
    words: usize,
    bits: Vec<u64>,
}

impl UpSets {
    fn build(space: &LatticeSpace) -> UpSets {
        let n = space.card();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for a in 0..n {
            let row = &mut bits[a * words..(a + 1) * words];
            for b in 0..n {
                if space.leq(Elt(a as u32), Elt(b as u32)) {
                    row[b / 64] |= 1 << (b % 64);
                }
            }
        }
        UpSets { words, bits }
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    fn contains(&self, a: usize, b: usize) -> bool {
        self.row(a)[b / 64] >> (b % 64) & 1 == 1
    }

    /// Indices set in row `a`.
    fn iter_row(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(a).iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + i)
            })
        })
    }

    /// First index in `sub` that is missing from `sup`, if any.
    fn first_not_subset(&self, sub: usize, sup: usize) -> Option<usize> {
        let (s, t) = (self.row(sub), self.row(sup));
        for w in 0..self.words {
            let extra = s[w] & !t[w];
            if extra != 0 {
                return Some(w * 64 + extra.trailing_zeros() as usize);
            }
        }
        None
    }
}

fn check_limit(space: &LatticeSpace, limit: usize) -> Result<()> {
    let card = space.card();
    if card > limit {
        return Err(Error::SizeLimitExceeded { card, limit });
    }
    Ok(())
}

/// Exhaustively checks the poset and join axioms. Empty result means the
/// carrier is a join-semilattice under `leq`/`join`.
pub fn verify_lattice(space: &LatticeSpace) -> Result<Vec<Violation>> {
    verify_lattice_with_limit(space, DEFAULT_ELEMENT_LIMIT)
}

pub fn verify_lattice_with_limit(space: &LatticeSpace, limit: usize) -> Result<Vec<Violation>> {
    check_limit(space, limit)?;
    let n = space.card();
    let ups = UpSets::build(space);
    let mut out = Vec::new();

    macro_rules! push {
        ($axiom:expr, $witness:expr) => {
            if out.len() < MAX_VIOLATIONS {
                out.push(Violation::new(space, $axiom, $witness));
            } else {
                return Ok(out);
            }
        };
    }

    for a in 0..n {
        if !ups.contains(a, a) {
            push!(Axiom::Reflexivity, vec![Elt(a as u32)]);
        }
        if space.join(Elt(a as u32), Elt(a as u32)) != Elt(a as u32) {
            push!(Axiom::JoinIdempotence, vec![Elt(a as u32)]);
        }
    }

    for a in 0..n {
        for b in (a + 1)..n {
            if ups.contains(a, b) && ups.contains(b, a) {
                push!(Axiom::Antisymmetry, vec![Elt(a as u32), Elt(b as u32)]);
            }
        }
    }

    // a <= b implies up(b) subset of up(a)
    for a in 0..n {
        for b in ups.iter_row(a) {
            if let Some(c) = ups.first_not_subset(b, a) {
                push!(
                    Axiom::Transitivity,
                    vec![Elt(a as u32), Elt(b as u32), Elt(c as u32)]
                );
            }
        }
    }

    // join(a, b) must be the least element of up(a) & up(b)
    let words = ups.words;
    let mut common = vec![0u64; words];
    for a in 0..n {
        for b in 0..n {
            let j = space.join(Elt(a as u32), Elt(b as u32));
            let ju = j.0 as usize;
            if b < a && space.join(Elt(b as u32), Elt(a as u32)) != j {
                push!(Axiom::JoinCommutativity, vec![Elt(a as u32), Elt(b as u32)]);
            }
            if !(ups.contains(a, ju) && ups.contains(b, ju)) {
                push!(
                    Axiom::JoinUpperBound,
                    vec![Elt(a as u32), Elt(b as u32), j]
                );
                continue;
            }
            let (ra, rb, rj) = (ups.row(a), ups.row(b), ups.row(ju));
            let mut least = true;
            for w in 0..words {
                common[w] = ra[w] & rb[w];
                if common[w] & !rj[w] != 0 {
                    least = false;
                }
            }
            if !least {
                let c = (0..words)
                    .find_map(|w| {
                        let bad = common[w] & !rj[w];
                        (bad != 0).then(|| w * 64 + bad.trailing_zeros() as usize)
                    })
                    .unwrap();
                push!(
                    Axiom::JoinLeast,
                    vec![Elt(a as u32), Elt(b as u32), Elt(c as u32)]
                );
            }
        }
    }

    // Associativity over all triples, via a join table when it fits.
    if n * n <= 1 << 22 {
        let mut table = vec![0u32; n * n];
        for a in 0..n {
            for b in 0..n {
                table[a * n + b] = space.join(Elt(a as u32), Elt(b as u32)).0;
            }
        }
        'outer: for a in 0..n {
            for b in 0..n {
                let ab = table[a * n + b] as usize;
                for c in 0..n {
                    if table[ab * n + c] != table[a * n + table[b * n + c] as usize] {
                        push!(
                            Axiom::JoinAssociativity,
                            vec![Elt(a as u32), Elt(b as u32), Elt(c as u32)]
                        );
                        if out.len() >= MAX_VIOLATIONS {
                            break 'outer;
                        }
                    }
                }
            }
        }
    } else {
        'outer2: for a in 0..n {
            for b in 0..n {
                let ab = space.join(Elt(a as u32), Elt(b as u32));
                for c in 0..n {
                    let lhs = space.join(ab, Elt(c as u32));
                    let rhs = space.join(Elt(a as u32), space.join(Elt(b as u32), Elt(c as u32)));
                    if lhs != rhs {
                        push!(
                            Axiom::JoinAssociativity,
                            vec![Elt(a as u32), Elt(b as u32), Elt(c as u32)]
                        );
                        if out.len() >= MAX_VIOLATIONS {
                            break 'outer2;
                        }
                    }
                }
            }
        }
    }

    if let Some(bot) = space.bottom() {
        for x in 0..n {
            if !ups.contains(bot.0 as usize, x) {
                push!(Axiom::BottomNotLeast, vec![bot, Elt(x as u32)]);
                break;
            }
        }
    }

    Ok(out)
}

/// Exhaustively checks quasi-metric axioms (i)-(iii) over the carrier.
/// Assumes the underlying lattice already passed [`verify_lattice`].
pub fn verify_quasi_metric(space: &LatticeSpace) -> Result<Vec<Violation>> {
    verify_quasi_metric_with_limit(space, DEFAULT_ELEMENT_LIMIT)
}

pub fn verify_quasi_metric_with_limit(
    space: &LatticeSpace,
    limit: usize,
) -> Result<Vec<Violation>> {
    check_limit(space, limit)?;
    let n = space.card();
    let ups = UpSets::build(space);
    let mut out = Vec::new();

    macro_rules! push {
        ($axiom:expr, $witness:expr) => {
            if out.len() < MAX_VIOLATIONS {
                out.push(Violation::new(space, $axiom, $witness));
            } else {
                return Ok(out);
            }
        };
    }

    for a in 0..n {
        for b in 0..n {
            let d = space.delta(Elt(a as u32), Elt(b as u32));
            let comparable = ups.contains(a, b);
            if comparable != d.is_defined() {
                push!(Axiom::MetricDomain, vec![Elt(a as u32), Elt(b as u32)]);
                continue;
            }
            if let Distance::Finite(v) = d {
                if v < -crate::distance::ABS_TOL {
                    push!(Axiom::MetricNonNegative, vec![Elt(a as u32), Elt(b as u32)]);
                }
            }
            if (a == b) != d.is_zero() && d.is_defined() {
                push!(Axiom::MetricIdentity, vec![Elt(a as u32), Elt(b as u32)]);
            }
        }
    }

    for a in 0..n {
        for b in ups.iter_row(a) {
            let ab = space.delta(Elt(a as u32), Elt(b as u32));
            for c in ups.iter_row(b) {
                let ac = space.delta(Elt(a as u32), Elt(c as u32));
                let bc = space.delta(Elt(b as u32), Elt(c as u32));
                if !ab.is_defined() || !bc.is_defined() || !ac.is_defined() {
                    continue; // domain violations already reported
                }
                if !ac.le_tol(ab + bc) {
                    push!(
                        Axiom::MetricTriangle,
                        vec![Elt(a as u32), Elt(b as u32), Elt(c as u32)]
                    );
                }
            }
        }
    }

    Ok(out)
}

/// Height-normality verdict with the first counterexample chain.
/// Assumes the metric already passed [`verify_quasi_metric`].
pub fn check_normality(space: &LatticeSpace) -> (bool, Option<[Elt; 3]>) {
    space.normality()
}
