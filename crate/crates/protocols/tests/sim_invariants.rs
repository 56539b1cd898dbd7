//! Simulator-level invariants: exhaustive small-world agreement, heuristic
//! round invariants under random crash schedules, scheduler uniformity, and
//! trace replay.

use std::collections::BTreeSet;

use ela_core::{compute_gamma, Elt, LatticeSpace};
use ela_protocols::{
    generate_valid_instance, replay, run_async_dr, run_sync, Crash, CrashSchedule, EventKind,
    InputSampler, Mode, NetworkConfig, SchedulerPolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sync_cfg(n: usize, f: usize, seed: u64) -> NetworkConfig {
    NetworkConfig::new(n, f, Mode::SyncRounds, SchedulerPolicy::DeliverAll, seed).unwrap()
}

/// All crash schedules for up to `f` crashed processes: every crash round in
/// 1..=max_round and every recipient subset.
fn enumerate_schedules(n: usize, f: usize, max_round: u32) -> Vec<CrashSchedule> {
    let per_proc: Vec<(u32, BTreeSet<usize>)> = (1..=max_round)
        .flat_map(|round| {
            (0u32..1 << n).map(move |mask| {
                let reached: BTreeSet<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                (round, reached)
            })
        })
        .collect();

    let mut schedules = vec![CrashSchedule::none()];
    let procs: Vec<usize> = (0..n).collect();
    if f >= 1 {
        for &p in &procs {
            for (round, reached) in &per_proc {
                let mut s = CrashSchedule::none();
                s.crashes.insert(p, Crash { round: *round, reached: reached.clone() });
                schedules.push(s);
            }
        }
    }
    if f >= 2 {
        for (ai, &a) in procs.iter().enumerate() {
            for &b in &procs[ai + 1..] {
                for (ra, reached_a) in &per_proc {
                    for (rb, reached_b) in &per_proc {
                        let mut s = CrashSchedule::none();
                        s.crashes.insert(a, Crash { round: *ra, reached: reached_a.clone() });
                        s.crashes.insert(b, Crash { round: *rb, reached: reached_b.clone() });
                        schedules.push(s);
                    }
                }
            }
        }
    }
    schedules
}

fn check_sync_run(
    space: &LatticeSpace,
    cfg: &NetworkConfig,
    crash: &CrashSchedule,
    initial: &[Elt],
) {
    let run = run_sync(cfg, crash, initial, space).unwrap();
    let decisions = run.outcome.correct_decisions();
    assert!(
        decisions.windows(2).all(|w| w[0] == w[1]),
        "disagreement: {:?} under {:?}",
        run.outcome.decisions,
        crash
    );
    let initial_set: BTreeSet<Elt> = initial.iter().copied().collect();
    let join = space.join_all(initial).unwrap();
    for i in run.outcome.correct() {
        let d = run.outcome.decisions[i].unwrap();
        assert!(initial_set.contains(&d), "decided value not an initial one");
        assert!(space.leq(initial[i], d), "downward validity broken at p{}", i + 1);
        assert!(space.leq(d, join), "upward validity broken at p{}", i + 1);
    }
}

#[test]
fn sync_agreement_exhaustive_small_worlds() {
    let space = LatticeSpace::chain(9).unwrap();
    let value_pool = [Elt(1), Elt(4), Elt(6)];
    for n in 1..=3usize {
        for f in 0..n.min(3) {
            let initial: Vec<Elt> = (0..n).map(|i| value_pool[i % 3]).collect();
            let equal: Vec<Elt> = vec![Elt(4); n];
            for crash in enumerate_schedules(n, f, f as u32 + 1) {
                let cfg = sync_cfg(n, f, 0);
                check_sync_run(&space, &cfg, &crash, &initial);
                check_sync_run(&space, &cfg, &crash, &equal);
            }
        }
    }
}

fn random_async_schedule(rng: &mut ChaCha8Rng, n: usize, f: usize, k: u32) -> CrashSchedule {
    let mut crash = CrashSchedule::none();
    let count = rng.gen_range(0..=f);
    while crash.crashes.len() < count {
        let p = rng.gen_range(0..n);
        crash.crashes.entry(p).or_insert(Crash {
            round: rng.gen_range(1..=k),
            reached: BTreeSet::new(),
        });
    }
    crash
}

#[test]
fn dr_round_invariants_under_random_crashes() {
    let space = LatticeSpace::chain(50).unwrap();
    let (n, f) = (10, 3);
    for seed in 0..60u64 {
        let k = (seed % 4) as u32 + 1;
        let inst = generate_valid_instance(&space, n, seed, &InputSampler::Uniform).unwrap();
        let cfg = NetworkConfig::new(n, f, Mode::Async, SchedulerPolicy::UniformRandom, seed)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0ffee);
        let crash = random_async_schedule(&mut rng, n, f, k);
        let run = run_async_dr(&cfg, &crash, k, &inst.outputs, &space).unwrap();

        // y_i^r <= y_i^{r+1}
        for rows in run.outcome.snapshots.windows(2) {
            for (&prev, &next) in rows[0].iter().zip(rows[1].iter()) {
                assert!(space.leq(prev, next), "monotonicity broken");
            }
        }
        // A_{m+1} is a subset of A_m
        for r in 1..run.outcome.snapshots.len() {
            let prev = run.outcome.value_set(r - 1);
            let next = run.outcome.value_set(r);
            assert!(next.is_subset(&prev), "containment broken at round {}", r);
        }
        // gamma' <= gamma on the full frozen vectors
        let gamma = compute_gamma(&space, &inst.outputs).unwrap();
        let gamma_prime = compute_gamma(&space, run.outcome.final_values()).unwrap();
        assert!(gamma_prime.le_tol(gamma), "{} > {}", gamma_prime, gamma);
        // no sends at or past a crash point
        for event in &run.trace.events {
            if event.kind == EventKind::Send {
                if let Some(cr) = crash.crashes.get(&(event.process - 1)) {
                    assert!(event.round < cr.round, "send after crash point");
                }
            }
        }
        // replay reproduces the run
        assert_eq!(replay(&run.trace).unwrap(), run.outcome);
    }
}

#[test]
fn uniform_scheduler_spreads_senders_evenly() {
    // Deterministic chi-square sanity check: over many seeded runs, each
    // sender should be about equally represented among the first n - f
    // deliveries to a fixed receiver.
    let space = LatticeSpace::chain(9).unwrap();
    let (n, f) = (5usize, 2usize);
    let runs = 1000u64;
    let mut counts = vec![0u64; n];
    for seed in 0..runs {
        let cfg = NetworkConfig::new(n, f, Mode::Async, SchedulerPolicy::UniformRandom, seed)
            .unwrap();
        let initial: Vec<Elt> = (0..n).map(|i| Elt(i as u32)).collect();
        let run = run_async_dr(&cfg, &CrashSchedule::none(), 1, &initial, &space).unwrap();
        for event in &run.trace.events {
            if event.kind == EventKind::Deliver && event.process == 1 && event.round == 1 {
                counts[event.from.unwrap() - 1] += 1;
            }
        }
    }
    let expected = (runs * (n - f) as u64) as f64 / n as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    assert!(chi2 < 30.0, "chi2 = {} for counts {:?}", chi2, counts);
}

#[test]
fn sync_trace_is_byte_stable_and_replayable() {
    let space = LatticeSpace::weighted_powerset_auto(&[1.0, 5.0, 2.0]).unwrap();
    let inst = generate_valid_instance(&space, 4, 3, &InputSampler::Uniform).unwrap();
    let cfg = sync_cfg(4, 1, 9);
    let mut crash = CrashSchedule::none();
    crash.crashes.insert(
        1,
        Crash {
            round: 1,
            reached: BTreeSet::from([0, 1]),
        },
    );
    let a = run_sync(&cfg, &crash, &inst.outputs, &space).unwrap();
    let b = run_sync(&cfg, &crash, &inst.outputs, &space).unwrap();
    assert_eq!(a.trace.to_text(), b.trace.to_text());
    assert_eq!(replay(&a.trace).unwrap(), a.outcome);
}
