//! Reconciliation protocols for bounded lattice agreement, plus the
//! deterministic simulated world they run in.
//!
//! The state machines ([`SyncState`], [`DrState`]) are single-owner values
//! advanced by explicit calls. The simulator ([`sim`]) owns crash schedules,
//! delivery scheduling, and trace recording; identical configuration and seed
//! always reproduce the identical trace.

pub mod compose;
pub mod error;
pub mod gen;
pub mod machine;
pub mod outcome;
pub mod sim;

pub use compose::{compose_bounded_la, Reconciler};
pub use error::{Error, Result};
pub use gen::{generate_valid_instance, InputSampler};
pub use machine::{lattice_max, DrState, Message, Payload, ProcessId, ProtocolTag, SyncState};
pub use outcome::ProtocolOutcome;
pub use sim::trace::{replay, EventKind, Trace, TraceEvent, TraceHeader, TRACE_VERSION};
pub use sim::{
    run_async_dr, run_sync, Crash, CrashDoc, CrashDocEntry, CrashSchedule, Mode, NetworkConfig,
    SchedulerPolicy, SimRun,
};
