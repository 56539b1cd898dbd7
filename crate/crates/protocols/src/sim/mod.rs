//! Deterministic seeded message-passing world.
//!
//! Synchronous mode runs `f + 1` lock-step rounds; a process crashing in
//! round `r` reaches only the recipient subset named in its crash schedule
//! and is silent afterwards. Asynchronous mode drives the k-round heuristic
//! with atomic broadcasts and a pluggable delivery scheduler; a process with
//! crash point `r` completes rounds `1..r` and never sends round `r`.
//!
//! Time is logical: asynchrony is modeled purely by delivery order. Channels
//! are FIFO per (sender, receiver) pair, and the scheduler only ever picks
//! among channel heads, so identical (config, seed, crash schedule) always
//! replays the identical trace.

pub mod trace;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use ela_core::{mix_seed, Elt, LatticeSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{DrState, Message, Payload, ProcessId, ProtocolTag, SyncState};
use crate::outcome::ProtocolOutcome;
use trace::{Trace, TraceBuilder, TraceHeader};

const SCHED_SALT: u64 = 0x53_4348_4544;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    SyncRounds,
    Async,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SyncRounds => "sync",
            Mode::Async => "dr",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchedulerPolicy {
    /// Prompt delivery in canonical (sender, receiver) order.
    DeliverAll,
    /// Seeded uniform choice among pending channel heads.
    UniformRandom,
    /// Hold the listed senders' messages back until every other sender's
    /// same-round messages have been delivered. 0-based indices.
    DelaySet(BTreeSet<usize>),
}

impl SchedulerPolicy {
    pub fn name(&self) -> String {
        match self {
            SchedulerPolicy::DeliverAll => "deliver-all".into(),
            SchedulerPolicy::UniformRandom => "uniform-random".into(),
            SchedulerPolicy::DelaySet(set) => {
                let ids: Vec<String> = set.iter().map(|&p| (p + 1).to_string()).collect();
                format!("delay:{}", ids.join(","))
            }
        }
    }

    pub fn parse(s: &str) -> Result<SchedulerPolicy> {
        match s {
            "deliver-all" => Ok(SchedulerPolicy::DeliverAll),
            "uniform-random" => Ok(SchedulerPolicy::UniformRandom),
            _ => {
                let rest = s.strip_prefix("delay:").ok_or_else(|| {
                    Error::InvalidConfig(format!("unknown scheduler {:?}", s))
                })?;
                let mut set = BTreeSet::new();
                for part in rest.split(',') {
                    let id: usize = part.trim().parse().map_err(|_| {
                        Error::InvalidConfig(format!("bad delay process id {:?}", part))
                    })?;
                    if id == 0 {
                        return Err(Error::InvalidConfig(
                            "delay process ids are 1-based".into(),
                        ));
                    }
                    set.insert(id - 1);
                }
                Ok(SchedulerPolicy::DelaySet(set))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct NetworkConfig {
    pub n: usize,
    pub f: usize,
    pub mode: Mode,
    pub scheduler: SchedulerPolicy,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(
        n: usize,
        f: usize,
        mode: Mode,
        scheduler: SchedulerPolicy,
        seed: u64,
    ) -> Result<NetworkConfig> {
        if n == 0 || f >= n {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= f < n, got n = {}, f = {}",
                n, f
            )));
        }
        if let SchedulerPolicy::DelaySet(set) = &scheduler {
            if set.iter().any(|&p| p >= n) {
                return Err(Error::InvalidConfig(
                    "delay set names a process outside [1, n]".into(),
                ));
            }
        }
        Ok(NetworkConfig {
            n,
            f,
            mode,
            scheduler,
            seed,
        })
    }
}

/// Per-process crash point. `reached` is the recipient subset of the final
/// partial broadcast and only applies in synchronous mode; asynchronous
/// sends are atomic, so a crash point there means rounds `1..round` were
/// sent in full and nothing after.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Crash {
    pub round: u32,
    pub reached: BTreeSet<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrashSchedule {
    pub crashes: BTreeMap<usize, Crash>,
}

impl CrashSchedule {
    pub fn none() -> CrashSchedule {
        CrashSchedule::default()
    }

    pub fn validate(&self, cfg: &NetworkConfig, max_round: u32) -> Result<()> {
        if self.crashes.len() > cfg.f {
            return Err(Error::CrashBudget {
                crashed: self.crashes.len(),
                f: cfg.f,
            });
        }
        for (&p, crash) in &self.crashes {
            if p >= cfg.n {
                return Err(Error::InvalidSchedule(format!(
                    "crash names process {} outside [1, {}]",
                    p + 1,
                    cfg.n
                )));
            }
            if crash.round == 0 || crash.round > max_round {
                return Err(Error::InvalidSchedule(format!(
                    "crash round {} outside 1..={}",
                    crash.round, max_round
                )));
            }
            if crash.reached.iter().any(|&r| r >= cfg.n) {
                return Err(Error::InvalidSchedule(format!(
                    "crash of process {} reaches a process outside [1, {}]",
                    p + 1,
                    cfg.n
                )));
            }
        }
        Ok(())
    }

    pub fn crash_round_vec(&self, n: usize) -> Vec<Option<u32>> {
        (0..n).map(|i| self.crashes.get(&i).map(|c| c.round)).collect()
    }
}

/// On-disk crash schedule document (TOML, 1-based ids).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrashDoc {
    #[serde(default)]
    pub crash: Vec<CrashDocEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrashDocEntry {
    pub process: usize,
    pub round: u32,
    #[serde(default)]
    pub reached: Vec<usize>,
}

impl CrashDoc {
    pub fn parse(text: &str) -> Result<CrashDoc> {
        toml::from_str(text).map_err(|e| Error::InvalidSchedule(e.to_string()))
    }

    pub fn to_schedule(&self) -> Result<CrashSchedule> {
        let mut crashes = BTreeMap::new();
        for entry in &self.crash {
            if entry.process == 0 {
                return Err(Error::InvalidSchedule("process ids are 1-based".into()));
            }
            let reached: BTreeSet<usize> = entry
                .reached
                .iter()
                .map(|&r| {
                    if r == 0 {
                        Err(Error::InvalidSchedule("recipient ids are 1-based".into()))
                    } else {
                        Ok(r - 1)
                    }
                })
                .collect::<Result<_>>()?;
            if crashes
                .insert(
                    entry.process - 1,
                    Crash {
                        round: entry.round,
                        reached,
                    },
                )
                .is_some()
            {
                return Err(Error::InvalidSchedule(format!(
                    "process {} crashes twice",
                    entry.process
                )));
            }
        }
        Ok(CrashSchedule { crashes })
    }
}

/// A finished run: outcome plus the replayable trace.
#[derive(Clone, Debug)]
pub struct SimRun {
    pub outcome: ProtocolOutcome,
    pub trace: Trace,
}

/// Lock-step synchronous reconciliation over `f + 1` rounds.
pub fn run_sync(
    cfg: &NetworkConfig,
    crash: &CrashSchedule,
    initial: &[Elt],
    space: &LatticeSpace,
) -> Result<SimRun> {
    if cfg.mode != Mode::SyncRounds {
        return Err(Error::ModeMismatch("run_sync needs SYNC_ROUNDS mode".into()));
    }
    if initial.len() != cfg.n {
        return Err(Error::InvalidConfig(format!(
            "{} initial values for n = {}",
            initial.len(),
            cfg.n
        )));
    }
    let rounds = cfg.f as u32 + 1;
    crash.validate(cfg, rounds)?;
    let crash_round = crash.crash_round_vec(cfg.n);

    let mut tb = TraceBuilder::new(TraceHeader::for_run(cfg, crash, None, space, initial));
    let mut states: Vec<SyncState> = initial
        .iter()
        .map(|&y| SyncState::new(y, cfg.f as u32))
        .collect();
    let mut snapshots = vec![initial.to_vec()];
    let mut last_values = initial.to_vec();

    let mut outs: Vec<BTreeSet<Elt>> = states.iter_mut().map(|st| st.outgoing()).collect();
    for r in 1..=rounds {
        let sends_this_round: Vec<usize> = (0..cfg.n)
            .filter(|&i| crash_round[i].is_none_or(|cr| cr >= r))
            .collect();
        let receivers: Vec<usize> = (0..cfg.n)
            .filter(|&i| crash_round[i].is_none_or(|cr| cr > r))
            .collect();

        let mut broadcasts: Vec<Option<Message>> = vec![None; cfg.n];
        for &i in &sends_this_round {
            tb.send(i, r, trace::set_payload(space, &outs[i]));
            broadcasts[i] = Some(Message {
                sender: ProcessId(i),
                round: r,
                payload: Payload::ValueSet(outs[i].clone()),
                tag: ProtocolTag::Sync,
            });
            if crash_round[i] == Some(r) {
                tb.crash(i, r);
            }
        }

        let mut received: Vec<Vec<&BTreeSet<Elt>>> = vec![Vec::new(); cfg.n];
        for &s in &sends_this_round {
            let msg = broadcasts[s].as_ref().unwrap();
            let Payload::ValueSet(values) = &msg.payload else {
                unreachable!("sync broadcasts carry value sets");
            };
            for &rcv in &receivers {
                let reaches = match crash_round[s] {
                    Some(cr) if cr == r => crash.crashes[&s].reached.contains(&rcv),
                    _ => true,
                };
                if reaches {
                    tb.deliver(rcv, msg.sender.0, msg.round, trace::set_payload(space, values));
                    received[rcv].push(values);
                }
            }
        }

        let mut next_outs = outs.clone();
        for &rcv in &receivers {
            next_outs[rcv] = states[rcv].sync_on_round(&received[rcv], space)?;
        }
        outs = next_outs;

        for &rcv in &receivers {
            last_values[rcv] = states[rcv].current_max(space)?;
        }
        snapshots.push(last_values.clone());
    }

    let mut decisions = vec![None; cfg.n];
    for i in 0..cfg.n {
        if crash_round[i].is_none() {
            let d = states[i]
                .decided()
                .ok_or_else(|| Error::State(format!("process {} never decided", i + 1)))?;
            decisions[i] = Some(d);
            tb.decide(i, rounds, space.label(d));
        }
    }

    Ok(SimRun {
        outcome: ProtocolOutcome {
            decisions,
            crash_round,
            snapshots,
        },
        trace: tb.finish(),
    })
}

struct DrProc {
    st: DrState,
    buffers: BTreeMap<u32, Vec<Elt>>,
    /// Rounds whose buffer was already consumed.
    completed: u32,
    done: bool,
    crashed: bool,
    history: Vec<Elt>,
}

/// Asynchronous DR(k): every correct process runs k rounds, each unblocking
/// on `n - f` round-tagged deliveries chosen by the scheduler.
pub fn run_async_dr(
    cfg: &NetworkConfig,
    crash: &CrashSchedule,
    k: u32,
    initial: &[Elt],
    space: &LatticeSpace,
) -> Result<SimRun> {
    if cfg.mode != Mode::Async {
        return Err(Error::ModeMismatch("run_async_dr needs ASYNC mode".into()));
    }
    if initial.len() != cfg.n {
        return Err(Error::InvalidConfig(format!(
            "{} initial values for n = {}",
            initial.len(),
            cfg.n
        )));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    crash.validate(cfg, k)?;
    let crash_round = crash.crash_round_vec(cfg.n);
    let quorum = cfg.n - cfg.f;

    let mut tb = TraceBuilder::new(TraceHeader::for_run(cfg, crash, Some(k), space, initial));
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, SCHED_SALT));
    let mut procs: Vec<DrProc> = initial
        .iter()
        .map(|&y| DrProc {
            st: DrState::new(y),
            buffers: BTreeMap::new(),
            completed: 0,
            done: false,
            crashed: false,
            history: vec![y],
        })
        .collect();
    let mut channels: BTreeMap<(usize, usize), VecDeque<Message>> = BTreeMap::new();

    // A process entering round r either crashes (its scheduled point) or
    // atomically broadcasts (y, r) to everyone, itself included.
    macro_rules! enter_round {
        ($i:expr) => {{
            let i: usize = $i;
            let r = procs[i].st.round;
            if crash_round[i] == Some(r) {
                procs[i].crashed = true;
                tb.crash(i, r);
            } else {
                let y = procs[i].st.y;
                for rcv in 0..cfg.n {
                    channels.entry((i, rcv)).or_default().push_back(Message {
                        sender: ProcessId(i),
                        round: r,
                        payload: Payload::Value(y),
                        tag: ProtocolTag::Dr,
                    });
                }
                tb.send(i, r, space.label(y));
            }
        }};
    }

    for i in 0..cfg.n {
        enter_round!(i);
    }

    loop {
        // Drop channel heads that can never be consumed: dead or finished
        // receivers, rounds the receiver already completed, full buffers.
        let keys: Vec<(usize, usize)> = channels.keys().copied().collect();
        for key in keys {
            let drop_all = {
                let p = &procs[key.1];
                p.crashed || p.done
            };
            if let Some(q) = channels.get_mut(&key) {
                if drop_all {
                    q.clear();
                } else {
                    while let Some(msg) = q.front() {
                        let r = msg.round;
                        let p = &procs[key.1];
                        let full = p.buffers.get(&r).is_some_and(|b| b.len() >= quorum);
                        if r <= p.completed || full {
                            q.pop_front();
                        } else {
                            break;
                        }
                    }
                }
                if q.is_empty() {
                    channels.remove(&key);
                }
            }
        }

        if channels.is_empty() {
            break;
        }

        let pick = match &cfg.scheduler {
            SchedulerPolicy::DeliverAll => *channels.keys().next().unwrap(),
            SchedulerPolicy::UniformRandom => {
                let keys: Vec<(usize, usize)> = channels.keys().copied().collect();
                keys[rng.gen_range(0..keys.len())]
            }
            SchedulerPolicy::DelaySet(delayed) => *channels
                .iter()
                .min_by_key(|((s, rcv), q)| {
                    let r = q.front().unwrap().round;
                    (r, delayed.contains(s), *s, *rcv)
                })
                .map(|(key, _)| key)
                .unwrap(),
        };

        let (sender, rcv) = pick;
        let (r, value) = {
            let q = channels.get_mut(&pick).unwrap();
            let msg = q.pop_front().unwrap();
            if q.is_empty() {
                channels.remove(&pick);
            }
            let Payload::Value(v) = msg.payload else {
                unreachable!("dr messages carry single values");
            };
            (msg.round, v)
        };
        tb.deliver(rcv, sender, r, space.label(value));
        procs[rcv].buffers.entry(r).or_default().push(value);

        // Unblock cascade: consume full buffers for the current round.
        let i = rcv;
        while !procs[i].done && !procs[i].crashed {
            let r = procs[i].st.round;
            let ready = procs[i].buffers.get(&r).is_some_and(|b| b.len() == quorum);
            if !ready {
                break;
            }
            let values = procs[i].buffers.remove(&r).unwrap();
            procs[i].st.dr_on_round(&values, space)?;
            procs[i].completed = r;
            let y = procs[i].st.y;
            procs[i].history.push(y);
            if procs[i].st.round > k {
                procs[i].done = true;
                tb.decide(i, k, space.label(y));
            } else {
                enter_round!(i);
            }
        }
    }

    for (i, p) in procs.iter().enumerate() {
        if !p.done && !p.crashed {
            return Err(Error::Deadlock(format!(
                "process {} stuck in round {} with no messages left",
                i + 1,
                p.st.round
            )));
        }
    }

    // Round snapshots with crashed processes frozen at their last value.
    let mut snapshots = Vec::with_capacity(k as usize + 1);
    for r in 0..=k as usize {
        let row: Vec<Elt> = procs
            .iter()
            .map(|p| *p.history.get(r).unwrap_or_else(|| p.history.last().unwrap()))
            .collect();
        snapshots.push(row);
    }

    let decisions: Vec<Option<Elt>> = procs
        .iter()
        .map(|p| if p.done { Some(p.st.y) } else { None })
        .collect();

    Ok(SimRun {
        outcome: ProtocolOutcome {
            decisions,
            crash_round,
            snapshots,
        },
        trace: tb.finish(),
    })
}

/// Re-executes the deliveries recorded in a trace and checks the decisions
/// against the recorded ones.
pub fn replay(t: &Trace) -> Result<ProtocolOutcome> {
    trace::replay(t)
}
