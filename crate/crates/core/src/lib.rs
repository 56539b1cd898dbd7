//! Join-semilattice quasi-metric spaces and the machinery for measuring how
//! tightly a set of agreement outputs clusters: lattice families, exhaustive
//! axiom checkers, instance validity checks, and the gamma / D / D' / M
//! compliance bounds.
//!
//! Everything operates on immutable values; all functions are safe to call
//! concurrently.

pub mod bounds;
pub mod distance;
pub mod error;
pub mod format;
pub mod instance;
pub mod space;
pub mod verify;

pub use bounds::{bowtie, compute_d, compute_d_prime, compute_gamma, compute_m, gamma_normal_fastpath};
pub use distance::{Distance, ABS_TOL};
pub use error::{Error, Result};
pub use instance::{
    check_instance, check_instance_of, compliance_report, AgreementInstance, ComplianceReport,
    Condition, InstanceReport, OutputSet, Witness,
};
pub use space::{Elt, LatticeSpace};
pub use verify::{check_normality, verify_lattice, verify_quasi_metric, Axiom, Violation};

/// Splitmix64-style seed mixing, used to derive independent substreams from a
/// user-facing seed without correlating them.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
