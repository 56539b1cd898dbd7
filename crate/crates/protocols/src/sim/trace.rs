//! Replayable run traces: a JSON header line carrying the full world
//! configuration (including the lattice document), followed by one JSON
//! event per line. Serialization is canonical, so two runs of the same
//! seeded world produce byte-identical documents.

use std::collections::{BTreeMap, BTreeSet};

use ela_core::format::LatticeDoc;
use ela_core::{Elt, LatticeSpace};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{DrState, SyncState};
use crate::outcome::ProtocolOutcome;
use crate::sim::{CrashSchedule, NetworkConfig};

pub const TRACE_VERSION: &str = "1";

/// Separator for value-set payloads; element labels never contain it.
const SET_SEP: char = '|';

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Send,
    Deliver,
    Crash,
    Decide,
}

/// One logical step. `process` is the acting process (the receiver for
/// deliveries), 1-based; `from` is the sender of a delivered message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t: u64,
    pub kind: EventKind,
    pub process: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<usize>,
    pub round: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrashWire {
    pub process: usize,
    pub round: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reached: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: String,
    pub mode: String,
    pub n: usize,
    pub f: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    pub seed: u64,
    pub scheduler: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub crash: Vec<CrashWire>,
    pub lattice: LatticeDoc,
    pub initial: Vec<String>,
}

impl TraceHeader {
    pub fn for_run(
        cfg: &NetworkConfig,
        crash: &CrashSchedule,
        k: Option<u32>,
        space: &LatticeSpace,
        initial: &[Elt],
    ) -> TraceHeader {
        TraceHeader {
            version: TRACE_VERSION.to_string(),
            mode: cfg.mode.name().to_string(),
            n: cfg.n,
            f: cfg.f,
            k,
            seed: cfg.seed,
            scheduler: cfg.scheduler.name(),
            crash: crash
                .crashes
                .iter()
                .map(|(&p, c)| CrashWire {
                    process: p + 1,
                    round: c.round,
                    reached: c.reached.iter().map(|&r| r + 1).collect(),
                })
                .collect(),
            lattice: LatticeDoc::from_space(space),
            initial: initial.iter().map(|&e| space.label(e)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn to_text(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        for event in &self.events {
            out.push('\n');
            out.push_str(&serde_json::to_string(event).expect("event serializes"));
        }
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Trace> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header_line = lines
            .next()
            .ok_or_else(|| Error::TraceParse("empty trace".into()))?;
        let header: TraceHeader =
            serde_json::from_str(header_line).map_err(|e| Error::TraceParse(e.to_string()))?;
        let events = lines
            .map(|l| serde_json::from_str(l).map_err(|e| Error::TraceParse(e.to_string())))
            .collect::<Result<Vec<TraceEvent>>>()?;
        Ok(Trace { header, events })
    }
}

pub(crate) struct TraceBuilder {
    header: TraceHeader,
    events: Vec<TraceEvent>,
    t: u64,
}

impl TraceBuilder {
    pub fn new(header: TraceHeader) -> TraceBuilder {
        TraceBuilder {
            header,
            events: Vec::new(),
            t: 0,
        }
    }

    fn push(
        &mut self,
        kind: EventKind,
        process: usize,
        from: Option<usize>,
        round: u32,
        payload: Option<String>,
    ) {
        self.events.push(TraceEvent {
            t: self.t,
            kind,
            process: process + 1,
            from: from.map(|s| s + 1),
            round,
            payload,
        });
        self.t += 1;
    }

    pub fn send(&mut self, process: usize, round: u32, payload: String) {
        self.push(EventKind::Send, process, None, round, Some(payload));
    }

    pub fn deliver(&mut self, process: usize, from: usize, round: u32, payload: String) {
        self.push(EventKind::Deliver, process, Some(from), round, Some(payload));
    }

    pub fn crash(&mut self, process: usize, round: u32) {
        self.push(EventKind::Crash, process, None, round, None);
    }

    pub fn decide(&mut self, process: usize, round: u32, payload: String) {
        self.push(EventKind::Decide, process, None, round, Some(payload));
    }

    pub fn finish(self) -> Trace {
        Trace {
            header: self.header,
            events: self.events,
        }
    }
}

pub(crate) fn set_payload(space: &LatticeSpace, set: &BTreeSet<Elt>) -> String {
    let labels: Vec<String> = set.iter().map(|&e| space.label(e)).collect();
    labels.join(&SET_SEP.to_string())
}

fn parse_set_payload(space: &LatticeSpace, payload: &str) -> Result<BTreeSet<Elt>> {
    if payload.is_empty() {
        return Ok(BTreeSet::new());
    }
    payload
        .split(SET_SEP)
        .map(|l| space.parse_label(l).map_err(Error::Core))
        .collect()
}

/// Re-executes the deliveries in recorded order and checks every recorded
/// decision against the recomputed one.
pub fn replay(trace: &Trace) -> Result<ProtocolOutcome> {
    let header = &trace.header;
    if header.version != TRACE_VERSION {
        return Err(Error::TraceVersion {
            got: header.version.clone(),
            expected: TRACE_VERSION.to_string(),
        });
    }
    let space = header.lattice.to_space()?;
    let initial: Vec<Elt> = header
        .initial
        .iter()
        .map(|l| space.parse_label(l).map_err(Error::Core))
        .collect::<Result<_>>()?;
    if initial.len() != header.n {
        return Err(Error::TraceParse(format!(
            "{} initial values for n = {}",
            initial.len(),
            header.n
        )));
    }
    let crash_round: Vec<Option<u32>> = {
        let by_proc: BTreeMap<usize, u32> = header
            .crash
            .iter()
            .map(|c| (c.process - 1, c.round))
            .collect();
        (0..header.n).map(|i| by_proc.get(&i).copied()).collect()
    };
    let recorded_decisions: BTreeMap<usize, (u32, String)> = trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Decide)
        .map(|e| {
            (
                e.process - 1,
                (e.round, e.payload.clone().unwrap_or_default()),
            )
        })
        .collect();

    match header.mode.as_str() {
        "sync" => replay_sync(trace, &space, &initial, &crash_round, &recorded_decisions),
        "dr" => replay_dr(trace, &space, &initial, &crash_round, &recorded_decisions),
        other => Err(Error::TraceParse(format!("unknown trace mode {:?}", other))),
    }
}

fn replay_sync(
    trace: &Trace,
    space: &LatticeSpace,
    initial: &[Elt],
    crash_round: &[Option<u32>],
    recorded: &BTreeMap<usize, (u32, String)>,
) -> Result<ProtocolOutcome> {
    let header = &trace.header;
    let rounds = header.f as u32 + 1;
    let mut states: Vec<SyncState> = initial
        .iter()
        .map(|&y| SyncState::new(y, header.f as u32))
        .collect();
    for st in states.iter_mut() {
        st.outgoing(); // initial broadcast bookkeeping
    }
    let mut snapshots = vec![initial.to_vec()];
    let mut last_values = initial.to_vec();

    for r in 1..=rounds {
        let mut received: Vec<Vec<BTreeSet<Elt>>> = vec![Vec::new(); header.n];
        for event in trace.events.iter().filter(|e| e.round == r) {
            if event.kind == EventKind::Deliver {
                let rcv = event.process - 1;
                let payload = event.payload.as_deref().unwrap_or("");
                received[rcv].push(parse_set_payload(space, payload)?);
            }
        }
        for i in 0..header.n {
            if crash_round[i].is_none_or(|cr| cr > r) {
                let refs: Vec<&BTreeSet<Elt>> = received[i].iter().collect();
                states[i].sync_on_round(&refs, space)?;
                last_values[i] = states[i].current_max(space)?;
            }
        }
        snapshots.push(last_values.clone());
    }

    let mut decisions = vec![None; header.n];
    for i in 0..header.n {
        if crash_round[i].is_none() {
            let d = states[i]
                .decided()
                .ok_or_else(|| Error::TraceIncomplete(format!("p{} never decided", i + 1)))?;
            match recorded.get(&i) {
                Some((_, label)) if *label == space.label(d) => {}
                Some((_, label)) => {
                    return Err(Error::ReplayMismatch(format!(
                        "p{} decided {} but trace records {}",
                        i + 1,
                        space.label(d),
                        label
                    )));
                }
                None => {
                    return Err(Error::TraceIncomplete(format!(
                        "no decide event for p{}",
                        i + 1
                    )));
                }
            }
            decisions[i] = Some(d);
        }
    }

    Ok(ProtocolOutcome {
        decisions,
        crash_round: crash_round.to_vec(),
        snapshots,
    })
}

fn replay_dr(
    trace: &Trace,
    space: &LatticeSpace,
    initial: &[Elt],
    crash_round: &[Option<u32>],
    recorded: &BTreeMap<usize, (u32, String)>,
) -> Result<ProtocolOutcome> {
    let header = &trace.header;
    let k = header
        .k
        .ok_or_else(|| Error::TraceParse("dr trace missing k".into()))?;
    let quorum = header.n - header.f;
    let mut states: Vec<DrState> = initial.iter().map(|&y| DrState::new(y)).collect();
    let mut buffers: Vec<BTreeMap<u32, Vec<Elt>>> = vec![BTreeMap::new(); header.n];
    let mut histories: Vec<Vec<Elt>> = initial.iter().map(|&y| vec![y]).collect();

    for event in &trace.events {
        if event.kind != EventKind::Deliver {
            continue;
        }
        let rcv = event.process - 1;
        let value = space
            .parse_label(event.payload.as_deref().unwrap_or(""))
            .map_err(Error::Core)?;
        buffers[rcv].entry(event.round).or_default().push(value);
        while states[rcv].round <= k
            && buffers[rcv]
                .get(&states[rcv].round)
                .is_some_and(|b| b.len() == quorum)
        {
            let values = buffers[rcv].remove(&states[rcv].round).unwrap();
            states[rcv].dr_on_round(&values, space)?;
            histories[rcv].push(states[rcv].y);
        }
    }

    let mut decisions = vec![None; header.n];
    for i in 0..header.n {
        let done = states[i].round > k;
        if crash_round[i].is_none() {
            if !done {
                return Err(Error::TraceIncomplete(format!(
                    "p{} only reached round {} of {}",
                    i + 1,
                    states[i].round,
                    k
                )));
            }
            match recorded.get(&i) {
                Some((_, label)) if *label == space.label(states[i].y) => {}
                Some((_, label)) => {
                    return Err(Error::ReplayMismatch(format!(
                        "p{} ended at {} but trace records {}",
                        i + 1,
                        space.label(states[i].y),
                        label
                    )));
                }
                None => {
                    return Err(Error::TraceIncomplete(format!(
                        "no decide event for p{}",
                        i + 1
                    )));
                }
            }
            decisions[i] = Some(states[i].y);
        }
    }

    let mut snapshots = Vec::with_capacity(k as usize + 1);
    for r in 0..=k as usize {
        let row: Vec<Elt> = histories
            .iter()
            .map(|h| *h.get(r).unwrap_or_else(|| h.last().unwrap()))
            .collect();
        snapshots.push(row);
    }

    Ok(ProtocolOutcome {
        decisions,
        crash_round: crash_round.to_vec(),
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_async_dr, run_sync, Mode, SchedulerPolicy};

    fn chain() -> LatticeSpace {
        LatticeSpace::chain(9).unwrap()
    }

    #[test]
    fn trace_text_roundtrip() {
        let space = chain();
        let cfg = NetworkConfig::new(3, 1, Mode::Async, SchedulerPolicy::UniformRandom, 5)
            .unwrap();
        let run = run_async_dr(&cfg, &CrashSchedule::none(), 2, &[Elt(1), Elt(4), Elt(6)], &space)
            .unwrap();
        let text = run.trace.to_text();
        let parsed = Trace::from_text(&text).unwrap();
        assert_eq!(parsed, run.trace);
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn replay_reproduces_sync_outcome() {
        let space = chain();
        let cfg = NetworkConfig::new(3, 1, Mode::SyncRounds, SchedulerPolicy::DeliverAll, 5)
            .unwrap();
        let run = run_sync(&cfg, &CrashSchedule::none(), &[Elt(1), Elt(2), Elt(2)], &space)
            .unwrap();
        let outcome = replay(&run.trace).unwrap();
        assert_eq!(outcome, run.outcome);
    }

    #[test]
    fn replay_reproduces_dr_outcome() {
        let space = chain();
        let cfg = NetworkConfig::new(4, 1, Mode::Async, SchedulerPolicy::UniformRandom, 9)
            .unwrap();
        let run = run_async_dr(
            &cfg,
            &CrashSchedule::none(),
            3,
            &[Elt(1), Elt(4), Elt(6), Elt(2)],
            &space,
        )
        .unwrap();
        let outcome = replay(&run.trace).unwrap();
        assert_eq!(outcome, run.outcome);
    }

    #[test]
    fn truncated_trace_is_an_error() {
        let space = chain();
        let cfg = NetworkConfig::new(3, 1, Mode::Async, SchedulerPolicy::DeliverAll, 5)
            .unwrap();
        let run = run_async_dr(&cfg, &CrashSchedule::none(), 2, &[Elt(1), Elt(4), Elt(6)], &space)
            .unwrap();
        let mut truncated = run.trace.clone();
        truncated.events.truncate(truncated.events.len() / 2);
        assert!(matches!(
            replay(&truncated),
            Err(Error::TraceIncomplete(_)) | Err(Error::ReplayMismatch(_))
        ));
    }

    #[test]
    fn version_mismatch_is_an_error() {
        let space = chain();
        let cfg = NetworkConfig::new(2, 1, Mode::Async, SchedulerPolicy::DeliverAll, 5)
            .unwrap();
        let run = run_async_dr(&cfg, &CrashSchedule::none(), 1, &[Elt(1), Elt(2)], &space)
            .unwrap();
        let mut bad = run.trace.clone();
        bad.header.version = "0".into();
        assert!(matches!(replay(&bad), Err(Error::TraceVersion { .. })));
    }
}
