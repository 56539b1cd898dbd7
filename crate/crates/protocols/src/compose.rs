//! Composition driver: base lattice agreement (the valid-instance generator
//! stands in for it) followed by a reconciliation protocol in a simulated
//! world, yielding the full (inputs, outputs, reconciled) instance.

use ela_core::{mix_seed, AgreementInstance, Elt, LatticeSpace};

use crate::error::{Error, Result};
use crate::gen::{generate_valid_instance, InputSampler};
use crate::sim::{run_async_dr, run_sync, CrashSchedule, Mode, NetworkConfig, SimRun};

const GEN_SALT: u64 = 0x47_454e;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reconciler {
    Sync,
    Dr { k: u32 },
}

/// Generates a valid agreement instance over the given inputs, reconciles its
/// outputs in the simulated world, and returns the instance with the
/// reconciled outputs filled in (crashed processes keep their last value) and
/// the crash set recorded.
pub fn compose_bounded_la(
    space: &LatticeSpace,
    inputs: &[Elt],
    reconciler: Reconciler,
    cfg: &NetworkConfig,
    crash: &CrashSchedule,
) -> Result<(AgreementInstance, SimRun)> {
    if inputs.len() != cfg.n {
        return Err(Error::InvalidConfig(format!(
            "{} inputs for n = {}",
            inputs.len(),
            cfg.n
        )));
    }
    let mut inst = generate_valid_instance(
        space,
        cfg.n,
        mix_seed(cfg.seed, GEN_SALT),
        &InputSampler::Fixed(inputs.to_vec()),
    )?;
    let run = match reconciler {
        Reconciler::Sync => {
            if cfg.mode != Mode::SyncRounds {
                return Err(Error::ModeMismatch(
                    "SYNC reconciler needs SYNC_ROUNDS mode".into(),
                ));
            }
            run_sync(cfg, crash, &inst.outputs, space)?
        }
        Reconciler::Dr { k } => {
            if cfg.mode != Mode::Async {
                return Err(Error::ModeMismatch("DR reconciler needs ASYNC mode".into()));
            }
            run_async_dr(cfg, crash, k, &inst.outputs, space)?
        }
    };
    inst.reconciled = Some(run.outcome.final_values().to_vec());
    inst.crashed = crash.crashes.keys().copied().collect();
    Ok((inst, run))
}
