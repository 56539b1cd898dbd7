//! Per-process protocol state machines: the flooding synchronous agreement
//! and the k-round broadcast-and-max heuristic. Both are plain values
//! advanced by explicit calls; the simulator owns message routing.

use std::collections::BTreeSet;
use std::fmt;

use ela_core::{Elt, LatticeSpace};

use crate::error::{Error, Result};

/// 0-based process index; rendered 1-based everywhere user-facing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessId(pub usize);

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0 + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolTag {
    Sync,
    Dr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    ValueSet(BTreeSet<Elt>),
    Value(Elt),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub sender: ProcessId,
    pub round: u32,
    pub payload: Payload,
    pub tag: ProtocolTag,
}

/// Lattice maximum of a set of values; errors if some pair is incomparable
/// (the inputs violated comparability upstream).
pub fn lattice_max<'a>(
    space: &LatticeSpace,
    values: impl IntoIterator<Item = &'a Elt>,
) -> Result<Elt> {
    let mut it = values.into_iter();
    let mut max = *it
        .next()
        .ok_or_else(|| Error::State("max of empty value set".into()))?;
    for &v in it {
        if space.leq(max, v) {
            max = v;
        } else if !space.leq(v, max) {
            return Err(Error::Core(ela_core::Error::Incomparable(
                space.label(v),
                space.label(max),
            )));
        }
    }
    Ok(max)
}

/// Flooding agreement state: `V` only grows, each value is broadcast at most
/// once, and after `f + 1` receive rounds the process decides `max(V)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyncState {
    v: BTreeSet<Elt>,
    sent_before: BTreeSet<Elt>,
    round: u32,
    rounds_total: u32,
    decided: Option<Elt>,
}

impl SyncState {
    pub fn new(y: Elt, f: u32) -> SyncState {
        SyncState {
            v: BTreeSet::from([y]),
            sent_before: BTreeSet::new(),
            round: 0,
            rounds_total: f + 1,
            decided: None,
        }
    }

    /// Values not yet broadcast; marks them sent. The first call yields the
    /// initial `{y}`.
    pub fn outgoing(&mut self) -> BTreeSet<Elt> {
        let out: BTreeSet<Elt> = self.v.difference(&self.sent_before).copied().collect();
        self.sent_before.extend(out.iter().copied());
        out
    }

    /// Absorbs one round of received value sets and returns the next round's
    /// outgoing set. On the final round the state decides.
    pub fn sync_on_round(
        &mut self,
        received: &[&BTreeSet<Elt>],
        space: &LatticeSpace,
    ) -> Result<BTreeSet<Elt>> {
        if self.round >= self.rounds_total {
            return Err(Error::State(format!(
                "sync round {} past the configured {} rounds",
                self.round + 1,
                self.rounds_total
            )));
        }
        for set in received {
            self.v.extend(set.iter().copied());
        }
        self.round += 1;
        if self.round == self.rounds_total {
            self.decided = Some(lattice_max(space, &self.v)?);
        }
        Ok(self.outgoing())
    }

    pub fn decided(&self) -> Option<Elt> {
        self.decided
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    /// Current max of V, decided or not; used for round snapshots.
    pub fn current_max(&self, space: &LatticeSpace) -> Result<Elt> {
        lattice_max(space, &self.v)
    }
}

/// Broadcast-and-max state for the k-round heuristic: `y` is non-decreasing
/// across rounds and always equals the max of everything seen so far.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrState {
    pub y: Elt,
    /// Next round to execute, 1-based.
    pub round: u32,
}

impl DrState {
    pub fn new(y: Elt) -> DrState {
        DrState { y, round: 1 }
    }

    /// Folds one round's received values into `y` and advances the round.
    /// The simulator is responsible for handing in exactly `n - f` values.
    pub fn dr_on_round(&mut self, received: &[Elt], space: &LatticeSpace) -> Result<()> {
        let mut max = self.y;
        for &v in received {
            if space.leq(max, v) {
                max = v;
            } else if !space.leq(v, max) {
                return Err(Error::Core(ela_core::Error::Incomparable(
                    space.label(v),
                    space.label(max),
                )));
            }
        }
        debug_assert!(space.leq(self.y, max));
        self.y = max;
        self.round += 1;
        Ok(())
    }
}
