//! Compliance bounds over instances: gamma, the interval bound D, the
//! input-to-join bound D', and the lattice resolution M.

use crate::distance::Distance;
use crate::error::{Error, Result};
use crate::space::{Elt, LatticeSpace};
use crate::verify::DEFAULT_ELEMENT_LIMIT;

/// `y` lies between some member of `s` and the join of `s`.
pub fn bowtie(space: &LatticeSpace, y: Elt, s: &[Elt]) -> Result<bool> {
    let join = space.join_all(s)?;
    Ok(s.iter().any(|&m| space.leq(m, y)) && space.leq(y, join))
}

/// Unique compliance of an output set: the max distance over ordered
/// comparable pairs. Zero for singleton or all-equal outputs. Errors on an
/// incomparable pair (the comparability precondition failed upstream).
pub fn compute_gamma(space: &LatticeSpace, outputs: &[Elt]) -> Result<Distance> {
    if outputs.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut gamma = Distance::ZERO;
    for (i, &a) in outputs.iter().enumerate() {
        for &b in &outputs[i + 1..] {
            let d = if space.leq(a, b) {
                space.delta(a, b)
            } else if space.leq(b, a) {
                space.delta(b, a)
            } else {
                return Err(Error::Incomparable(space.label(a), space.label(b)));
            };
            if !d.is_defined() {
                return Err(Error::UndefinedDistance(space.label(a), space.label(b)));
            }
            gamma = gamma.max_defined(d);
        }
    }
    Ok(gamma)
}

/// Gamma via the min/max outputs; valid only for normal metrics, where it
/// must agree with [`compute_gamma`].
pub fn gamma_normal_fastpath(space: &LatticeSpace, outputs: &[Elt]) -> Result<Distance> {
    if outputs.is_empty() {
        return Err(Error::EmptySet);
    }
    let (normal, witness) = space.normality();
    if !normal {
        let w = witness.unwrap();
        return Err(Error::NotNormal(
            space.label(w[0]),
            space.label(w[1]),
            space.label(w[2]),
        ));
    }
    let mut min = outputs[0];
    let mut max = outputs[0];
    for &y in &outputs[1..] {
        if space.leq(y, min) {
            min = y;
        } else if !space.leq(min, y) {
            return Err(Error::Incomparable(space.label(y), space.label(min)));
        }
        if space.leq(max, y) {
            max = y;
        } else if !space.leq(y, max) {
            return Err(Error::Incomparable(space.label(y), space.label(max)));
        }
    }
    let d = space.delta(min, max);
    if !d.is_defined() {
        return Err(Error::UndefinedDistance(space.label(min), space.label(max)));
    }
    Ok(d)
}

/// Max distance over comparable pairs drawn from the bowtie interval of the
/// inputs. Test-side quantity: enumerates the carrier and refuses above the
/// element limit.
pub fn compute_d(space: &LatticeSpace, inputs: &[Elt]) -> Result<Distance> {
    compute_d_with_limit(space, inputs, DEFAULT_ELEMENT_LIMIT)
}

pub fn compute_d_with_limit(
    space: &LatticeSpace,
    inputs: &[Elt],
    limit: usize,
) -> Result<Distance> {
    if inputs.is_empty() {
        return Err(Error::EmptySet);
    }
    let card = space.card();
    if card > limit {
        return Err(Error::SizeLimitExceeded { card, limit });
    }
    let join = space.join_all(inputs)?;
    let interval: Vec<Elt> = space
        .elements()
        .filter(|&e| inputs.iter().any(|&m| space.leq(m, e)) && space.leq(e, join))
        .collect();
    let mut d = Distance::ZERO;
    for &a in &interval {
        for &b in &interval {
            if space.leq(a, b) {
                let dist = space.delta(a, b);
                if dist.is_defined() {
                    d = d.max_defined(dist);
                }
            }
        }
    }
    Ok(d)
}

/// Max over inputs of the distance to the join of all inputs.
pub fn compute_d_prime(space: &LatticeSpace, inputs: &[Elt]) -> Result<Distance> {
    if inputs.is_empty() {
        return Err(Error::EmptySet);
    }
    let join = space.join_all(inputs)?;
    let mut d = Distance::ZERO;
    for &x in inputs {
        let dist = space.delta(x, join);
        if !dist.is_defined() {
            return Err(Error::UndefinedDistance(space.label(x), space.label(join)));
        }
        d = d.max_defined(dist);
    }
    Ok(d)
}

/// Min distance over strictly comparable pairs `x < y`; infinity when no
/// strict pair exists. The strict inequality matters: with `x <= y` the
/// diagonal would force the minimum to zero.
pub fn compute_m(space: &LatticeSpace) -> Distance {
    let n = space.card() as u32;
    let mut m = Distance::Infinity;
    for a in 0..n {
        for b in 0..n {
            if a != b && space.leq(Elt(a), Elt(b)) {
                let d = space.delta(Elt(a), Elt(b));
                if d.is_defined() {
                    m = m.min_defined(d);
                }
            }
        }
    }
    m
}
