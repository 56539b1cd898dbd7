//! Property tests for the shipped families and the compliance bounds. Valid
//! instances are built by an in-test construction (prefix joins in input
//! order) so the checks stay independent of the protocol crate's generator.

use ela_core::{
    check_instance, check_normality, compute_d, compute_d_prime, compute_gamma, compute_m,
    gamma_normal_fastpath, verify_lattice, verify_quasi_metric, AgreementInstance, Distance,
    Elt, LatticeSpace,
};
use proptest::prelude::*;

fn families() -> impl Strategy<Value = LatticeSpace> {
    prop_oneof![
        (1u32..=64).prop_map(|max| LatticeSpace::chain(max).unwrap()),
        proptest::collection::vec(1u32..=9, 1..=4).prop_map(|ws| {
            let ws: Vec<f64> = ws.into_iter().map(f64::from).collect();
            LatticeSpace::weighted_powerset_auto(&ws).unwrap()
        }),
        (1u32..=3, 1u32..=4)
            .prop_map(|(dim, cap)| LatticeSpace::vector_clock(dim, cap).unwrap()),
    ]
}

fn nonnormal_chain() -> LatticeSpace {
    LatticeSpace::chain_with_table(2, &[(0, 1, 5.0), (1, 2, 5.0), (0, 2, 4.0)]).unwrap()
}

/// Valid instance built directly from the definitions: y_i is a prefix join
/// of x_1..x_s for some s >= i, so DV/UV/Comparability hold by construction.
fn valid_instance(space: &LatticeSpace, picks: &[(u32, u32)]) -> AgreementInstance {
    let n = picks.len();
    let card = space.card() as u32;
    let inputs: Vec<Elt> = picks.iter().map(|&(x, _)| Elt(x % card)).collect();
    let mut prefix = Vec::with_capacity(n);
    let mut acc = inputs[0];
    prefix.push(acc);
    for &x in &inputs[1..] {
        acc = space.join(acc, x);
        prefix.push(acc);
    }
    let outputs: Vec<Elt> = picks
        .iter()
        .enumerate()
        .map(|(i, &(_, s))| prefix[i + (s as usize % (n - i))])
        .collect();
    AgreementInstance::new(inputs, outputs).unwrap()
}

/// Independent gamma oracle: plain loops over ordered pairs.
fn brute_gamma(space: &LatticeSpace, ys: &[Elt]) -> f64 {
    let mut best = 0.0f64;
    for &a in ys {
        for &b in ys {
            if space.leq(a, b) {
                if let Distance::Finite(v) = space.delta(a, b) {
                    if v > best {
                        best = v;
                    }
                }
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shipped_families_pass_all_checkers(space in families()) {
        prop_assert!(verify_lattice(&space).unwrap().is_empty());
        prop_assert!(verify_quasi_metric(&space).unwrap().is_empty());
        prop_assert!(check_normality(&space).0);
    }

    #[test]
    fn gamma_equals_brute_force_and_fastpath(
        space in families(),
        picks in proptest::collection::vec((0u32..4096, 0u32..4096), 1..10),
    ) {
        let inst = valid_instance(&space, &picks);
        let gamma = compute_gamma(&space, &inst.outputs).unwrap();
        prop_assert_eq!(gamma, Distance::Finite(brute_gamma(&space, &inst.outputs)));
        prop_assert_eq!(gamma, gamma_normal_fastpath(&space, &inst.outputs).unwrap());
    }

    #[test]
    fn d_prime_never_exceeds_d(
        space in families(),
        picks in proptest::collection::vec((0u32..4096, 0u32..4096), 1..8),
    ) {
        let inst = valid_instance(&space, &picks);
        let d = compute_d(&space, &inst.inputs).unwrap();
        let d_prime = compute_d_prime(&space, &inst.inputs).unwrap();
        prop_assert!(d_prime.le_tol(d), "D' = {} > D = {}", d_prime, d);
    }

    #[test]
    fn below_m_only_equal_outputs_are_tight(
        space in families(),
        picks in proptest::collection::vec((0u32..4096, 0u32..4096), 2..10),
    ) {
        // For epsilon < M, epsilon-tightness forces all outputs equal.
        let inst = valid_instance(&space, &picks);
        let m = match compute_m(&space) {
            Distance::Finite(v) => v,
            _ => return Ok(()), // singleton carrier
        };
        let eps = Distance::Finite(m / 2.0);
        let distinct = inst.outputs.iter().any(|&y| y != inst.outputs[0]);
        let report = check_instance(&space, &inst, eps).unwrap();
        if distinct {
            prop_assert!(!report.tightness.holds);
        } else {
            prop_assert!(report.tightness.holds);
        }
    }

    #[test]
    fn valid_instances_satisfy_d_and_dprime_tightness(
        space in families(),
        picks in proptest::collection::vec((0u32..4096, 0u32..4096), 1..8),
    ) {
        let inst = valid_instance(&space, &picks);
        let d = compute_d(&space, &inst.inputs).unwrap();
        let report = check_instance(&space, &inst, d).unwrap();
        prop_assert!(report.all_hold(), "D-tightness failed at D = {}", d);
        // All strategy families are normal, so the stricter bound applies too.
        let d_prime = compute_d_prime(&space, &inst.inputs).unwrap();
        let report = check_instance(&space, &inst, d_prime).unwrap();
        prop_assert!(report.all_hold(), "D'-tightness failed at D' = {}", d_prime);
    }

    #[test]
    fn nonnormal_instances_still_satisfy_d_tightness(
        picks in proptest::collection::vec((0u32..3, 0u32..3), 1..6),
    ) {
        let space = nonnormal_chain();
        let inst = valid_instance(&space, &picks);
        let d = compute_d(&space, &inst.inputs).unwrap();
        let report = check_instance(&space, &inst, d).unwrap();
        prop_assert!(report.all_hold());
    }
}

#[test]
fn nonnormal_chain_has_strict_gap() {
    let space = nonnormal_chain();
    let inputs = vec![Elt(0), Elt(2)];
    assert_eq!(compute_d(&space, &inputs).unwrap(), Distance::Finite(5.0));
    assert_eq!(
        compute_d_prime(&space, &inputs).unwrap(),
        Distance::Finite(4.0)
    );
}
