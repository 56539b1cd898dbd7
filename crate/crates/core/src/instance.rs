//! Agreement instances and the per-condition validity checker.

use std::collections::BTreeSet;
use std::fmt;

use crate::bounds::{compute_d, compute_d_prime, compute_gamma, compute_m};
use crate::distance::Distance;
use crate::error::{Error, Result};
use crate::space::{Elt, LatticeSpace};

/// Inputs, outputs, and optionally reconciled outputs of a run, with the set
/// of processes that crashed during reconciliation. Process indices are
/// 0-based internally; documents and display use 1-based ids.
#[derive(Clone, Debug, PartialEq)]
pub struct AgreementInstance {
    pub inputs: Vec<Elt>,
    pub outputs: Vec<Elt>,
    pub reconciled: Option<Vec<Elt>>,
    pub crashed: BTreeSet<usize>,
}

impl AgreementInstance {
    pub fn new(inputs: Vec<Elt>, outputs: Vec<Elt>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::MalformedInstance("no processes".into()));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::MalformedInstance(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        Ok(AgreementInstance {
            inputs,
            outputs,
            reconciled: None,
            crashed: BTreeSet::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    pub fn correct(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |i| !self.crashed.contains(i))
    }
}

/// Which output vector a check runs against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputSet {
    Final,
    Reconciled,
}

/// Where a condition failed: a single process or a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Witness {
    Process(usize),
    Pair(usize, usize),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Process(i) => write!(f, "p{}", i + 1),
            Witness::Pair(i, j) => write!(f, "(p{},p{})", i + 1, j + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Condition {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl Condition {
    fn ok() -> Condition {
        Condition {
            holds: true,
            witness: None,
        }
    }

    fn fail(witness: Witness) -> Condition {
        Condition {
            holds: false,
            witness: Some(witness),
        }
    }
}

/// Per-condition result of checking an instance: downward validity, upward
/// validity, comparability, and epsilon-tightness. Crashed processes are
/// excluded from every check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceReport {
    pub downward: Condition,
    pub upward: Condition,
    pub comparability: Condition,
    pub tightness: Condition,
}

impl InstanceReport {
    pub fn all_hold(&self) -> bool {
        self.downward.holds && self.upward.holds && self.comparability.holds
            && self.tightness.holds
    }

    pub fn validity_holds(&self) -> bool {
        self.downward.holds && self.upward.holds && self.comparability.holds
    }
}

/// Checks the final outputs against the four conditions. The input join
/// ranges over all inputs; crash exclusion applies to which outputs are
/// examined.
pub fn check_instance(
    space: &LatticeSpace,
    inst: &AgreementInstance,
    epsilon: Distance,
) -> Result<InstanceReport> {
    check_instance_of(space, inst, epsilon, OutputSet::Final)
}

pub fn check_instance_of(
    space: &LatticeSpace,
    inst: &AgreementInstance,
    epsilon: Distance,
    which: OutputSet,
) -> Result<InstanceReport> {
    if epsilon == Distance::Undefined {
        return Err(Error::UndefinedEpsilon);
    }
    let outputs = match which {
        OutputSet::Final => &inst.outputs,
        OutputSet::Reconciled => inst
            .reconciled
            .as_ref()
            .ok_or_else(|| Error::MalformedInstance("no reconciled outputs".into()))?,
    };
    if outputs.len() != inst.n() {
        return Err(Error::MalformedInstance(format!(
            "{} outputs for {} processes",
            outputs.len(),
            inst.n()
        )));
    }
    let correct: Vec<usize> = inst.correct().collect();
    let input_join = space.join_all(&inst.inputs)?;

    let mut downward = Condition::ok();
    for &i in &correct {
        if !space.leq(inst.inputs[i], outputs[i]) {
            downward = Condition::fail(Witness::Process(i));
            break;
        }
    }

    let mut upward = Condition::ok();
    for &i in &correct {
        if !space.leq(outputs[i], input_join) {
            upward = Condition::fail(Witness::Process(i));
            break;
        }
    }

    let mut comparability = Condition::ok();
    let mut tightness = Condition::ok();
    'pairs: for (a, &i) in correct.iter().enumerate() {
        for &j in &correct[a + 1..] {
            let (yi, yj) = (outputs[i], outputs[j]);
            let ordered = if space.leq(yi, yj) {
                Some((i, j, yi, yj))
            } else if space.leq(yj, yi) {
                Some((j, i, yj, yi))
            } else {
                comparability = Condition::fail(Witness::Pair(i, j));
                None
            };
            if let Some((lo_i, hi_i, lo, hi)) = ordered {
                if tightness.holds && !space.delta(lo, hi).le_tol(epsilon) {
                    tightness = Condition::fail(Witness::Pair(lo_i, hi_i));
                }
            }
            if !comparability.holds && !tightness.holds {
                break 'pairs;
            }
        }
    }

    Ok(InstanceReport {
        downward,
        upward,
        comparability,
        tightness,
    })
}

/// Compliance summary of an instance: gamma of the outputs, gamma of the
/// reconciled outputs when present, and the D / D' / M bounds. Gammas are
/// computed over the full output vectors, with crashed entries holding their
/// last value; under that reading reconciliation can never raise gamma.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplianceReport {
    pub gamma: Distance,
    pub gamma_reconciled: Option<Distance>,
    pub d: Distance,
    pub d_prime: Distance,
    pub m: Distance,
    pub improved: Option<bool>,
}

pub fn compliance_report(space: &LatticeSpace, inst: &AgreementInstance) -> Result<ComplianceReport> {
    let gamma = compute_gamma(space, &inst.outputs)?;
    let gamma_reconciled = match &inst.reconciled {
        Some(rec) => Some(compute_gamma(space, rec)?),
        None => None,
    };
    let d = compute_d(space, &inst.inputs)?;
    let d_prime = compute_d_prime(space, &inst.inputs)?;
    debug_assert!(d_prime.le_tol(d), "D' = {} exceeds D = {}", d_prime, d);
    let m = compute_m(space);
    let improved = gamma_reconciled.map(|g| g.lt_exact(gamma));
    Ok(ComplianceReport {
        gamma,
        gamma_reconciled,
        d,
        d_prime,
        m,
        improved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_instance(inputs: &[u32], outputs: &[u32]) -> AgreementInstance {
        AgreementInstance::new(
            inputs.iter().map(|&v| Elt(v)).collect(),
            outputs.iter().map(|&v| Elt(v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn all_join_outputs_hold_at_zero() {
        let s = LatticeSpace::chain(9).unwrap();
        let inst = chain_instance(&[1, 4, 6], &[6, 6, 6]);
        let report = check_instance(&s, &inst, Distance::ZERO).unwrap();
        assert!(report.all_hold());
    }

    #[test]
    fn tightness_fails_with_pair_witness() {
        let s = LatticeSpace::chain(9).unwrap();
        let inst = chain_instance(&[1, 4, 6], &[4, 4, 6]);
        let report = check_instance(&s, &inst, Distance::Finite(1.0)).unwrap();
        assert!(report.downward.holds && report.upward.holds && report.comparability.holds);
        assert!(!report.tightness.holds);
        // delta(4, 6) = 2 > 1; the witnessing pair holds outputs 4 and 6
        let w = report.tightness.witness.unwrap();
        assert!(matches!(w, Witness::Pair(_, 2)));
    }

    #[test]
    fn downward_validity_fails_at_process() {
        let s = LatticeSpace::chain(9).unwrap();
        let inst = chain_instance(&[1, 4, 6], &[1, 1, 6]);
        let report = check_instance(&s, &inst, Distance::Infinity).unwrap();
        assert_eq!(report.downward, Condition::fail(Witness::Process(1)));
    }

    #[test]
    fn crashed_processes_are_excluded() {
        let s = LatticeSpace::chain(9).unwrap();
        let mut inst = chain_instance(&[1, 4, 6], &[1, 1, 6]);
        inst.crashed.insert(1);
        let report = check_instance(&s, &inst, Distance::Infinity).unwrap();
        assert!(report.all_hold());
    }

    #[test]
    fn undefined_epsilon_is_an_error() {
        let s = LatticeSpace::chain(9).unwrap();
        let inst = chain_instance(&[1], &[1]);
        assert_eq!(
            check_instance(&s, &inst, Distance::Undefined),
            Err(Error::UndefinedEpsilon)
        );
    }

    #[test]
    fn reconciled_checked_against_original_inputs() {
        let s = LatticeSpace::chain(9).unwrap();
        let mut inst = chain_instance(&[1, 4, 6], &[4, 4, 6]);
        inst.reconciled = Some(vec![Elt(6), Elt(6), Elt(6)]);
        let report =
            check_instance_of(&s, &inst, Distance::ZERO, OutputSet::Reconciled).unwrap();
        assert!(report.all_hold());
        inst.reconciled = Some(vec![Elt(0), Elt(6), Elt(6)]);
        let report =
            check_instance_of(&s, &inst, Distance::Infinity, OutputSet::Reconciled).unwrap();
        assert_eq!(report.downward, Condition::fail(Witness::Process(0)));
    }

    #[test]
    fn compliance_report_orders_bounds() {
        let s = LatticeSpace::chain(9).unwrap();
        let mut inst = chain_instance(&[1, 4, 6], &[4, 4, 6]);
        inst.reconciled = Some(vec![Elt(6), Elt(6), Elt(6)]);
        let report = compliance_report(&s, &inst).unwrap();
        assert_eq!(report.gamma, Distance::Finite(2.0));
        assert_eq!(report.gamma_reconciled, Some(Distance::ZERO));
        assert_eq!(report.d, Distance::Finite(5.0));
        assert_eq!(report.d_prime, Distance::Finite(5.0));
        assert_eq!(report.m, Distance::Finite(1.0));
        assert_eq!(report.improved, Some(true));
        assert!(report.d_prime.le_tol(report.d));
    }
}
