//! Result of a protocol run: decisions, crash points, and the round-by-round
//! value snapshots that the containment and monotonicity properties are
//! checked against.

use std::collections::BTreeSet;

use ela_core::Elt;

/// Snapshots index rounds: `snapshots[0]` holds the initial values and
/// `snapshots[r]` the values after round `r`. A crashed process contributes
/// its frozen last value to later snapshots, which is the reading under which
/// the round sets only ever shrink.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOutcome {
    pub decisions: Vec<Option<Elt>>,
    pub crash_round: Vec<Option<u32>>,
    pub snapshots: Vec<Vec<Elt>>,
}

impl ProtocolOutcome {
    pub fn n(&self) -> usize {
        self.decisions.len()
    }

    pub fn rounds(&self) -> usize {
        self.snapshots.len().saturating_sub(1)
    }

    /// Values present after round `r` (0 = initial), as a set.
    pub fn value_set(&self, r: usize) -> BTreeSet<Elt> {
        self.snapshots[r].iter().copied().collect()
    }

    /// Final per-process values (frozen for crashed processes).
    pub fn final_values(&self) -> &[Elt] {
        self.snapshots.last().expect("at least the initial snapshot")
    }

    pub fn correct(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&i| self.crash_round[i].is_none())
    }

    /// Decisions of correct processes.
    pub fn correct_decisions(&self) -> Vec<Elt> {
        self.correct()
            .filter_map(|i| self.decisions[i])
            .collect()
    }
}
