//! Valid-instance generator: the stand-in for a base lattice agreement
//! protocol. Outputs are prefix joins of a random permutation of the inputs,
//! so downward validity, upward validity, and comparability hold by
//! construction.

use ela_core::{AgreementInstance, Elt, LatticeSpace};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub enum InputSampler {
    /// Inputs drawn uniformly from the carrier.
    Uniform,
    /// Fixed input vector (length must be n).
    Fixed(Vec<Elt>),
}

/// Draws inputs per the sampler, then assigns output `y_{pi(t)} = J_s` where
/// `J_t` is the join of the first `t` inputs in a random permutation `pi` and
/// `s` is uniform over `t..=n`.
pub fn generate_valid_instance(
    space: &LatticeSpace,
    n: usize,
    seed: u64,
    sampler: &InputSampler,
) -> Result<AgreementInstance> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Elt> = match sampler {
        InputSampler::Uniform => {
            let card = space.card() as u32;
            (0..n).map(|_| Elt(rng.gen_range(0..card))).collect()
        }
        InputSampler::Fixed(values) => {
            if values.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "fixed sampler has {} inputs for n = {}",
                    values.len(),
                    n
                )));
            }
            values.clone()
        }
    };

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut prefix_joins = Vec::with_capacity(n);
    let mut acc = inputs[perm[0]];
    prefix_joins.push(acc);
    for &p in &perm[1..] {
        acc = space.join(acc, inputs[p]);
        prefix_joins.push(acc);
    }

    let mut outputs = vec![Elt(0); n];
    for (t, &p) in perm.iter().enumerate() {
        let s = rng.gen_range(t..n);
        outputs[p] = prefix_joins[s];
    }

    Ok(AgreementInstance::new(inputs, outputs)?)
}
