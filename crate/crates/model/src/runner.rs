//! Trajectory runner: seeded independent runs, success counting, and the
//! parallel/sequential execution paths.

use ela_core::mix_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::round::{Sampling, Trajectory};
use crate::{is_improved, parse_cells, Cell, ModelError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// Each cell independently 0 or 1 with probability 1/2, resampled until
    /// at least one 1 appears.
    RandomUniform01,
    /// All 0s and a single 1 at a uniformly random index.
    WorstCase,
    /// A fixed vector; must be a member of the state space.
    Explicit(Vec<Cell>),
}

impl InitialCondition {
    pub fn name(&self) -> String {
        match self {
            InitialCondition::RandomUniform01 => "random".into(),
            InitialCondition::WorstCase => "worst".into(),
            InitialCondition::Explicit(cells) => {
                let symbols: String = cells.iter().map(|c| c.symbol()).collect();
                format!("explicit:{}", symbols)
            }
        }
    }

    pub fn parse(s: &str) -> Result<InitialCondition> {
        match s {
            "random" => Ok(InitialCondition::RandomUniform01),
            "worst" => Ok(InitialCondition::WorstCase),
            _ => {
                let cells = s.strip_prefix("explicit:").ok_or_else(|| {
                    ModelError::InvalidConfig(format!("unknown initial condition {:?}", s))
                })?;
                Ok(InitialCondition::Explicit(parse_cells(cells)?))
            }
        }
    }

    fn tag(&self) -> u64 {
        match self {
            InitialCondition::RandomUniform01 => 1,
            InitialCondition::WorstCase => 2,
            InitialCondition::Explicit(cells) => cells
                .iter()
                .fold(3u64, |acc, &c| mix_seed(acc, c as u64 + 1)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub n: usize,
    pub f: usize,
    pub p_f: f64,
    pub k: u32,
    pub sampling: Sampling,
    pub initial: InitialCondition,
    pub runs: u64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.f >= self.n {
            return Err(ModelError::InvalidConfig(format!(
                "need 0 <= f < n, got n = {}, f = {}",
                self.n, self.f
            )));
        }
        if !(0.0..=1.0).contains(&self.p_f) {
            return Err(ModelError::InvalidConfig(format!(
                "p_f must lie in [0, 1], got {}",
                self.p_f
            )));
        }
        if self.k == 0 {
            return Err(ModelError::InvalidConfig("k must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(ModelError::InvalidConfig("runs must be at least 1".into()));
        }
        if let InitialCondition::Explicit(cells) = &self.initial {
            if cells.len() != self.n {
                return Err(ModelError::InvalidConfig(format!(
                    "explicit initial state has {} cells for n = {}",
                    cells.len(),
                    self.n
                )));
            }
            if !crate::is_in_state_space(cells, self.f) {
                return Err(ModelError::InvalidConfig(
                    "explicit initial state is outside the state space".into(),
                ));
            }
        }
        Ok(())
    }

    /// Seed for this parameter point. k and runs are deliberately excluded:
    /// trajectories are shared across k (common random numbers) and across
    /// run-count changes (per-run streams).
    pub fn point_seed(&self) -> u64 {
        let mut s = mix_seed(self.seed, self.n as u64);
        s = mix_seed(s, self.f as u64);
        s = mix_seed(s, self.p_f.to_bits());
        s = mix_seed(s, self.sampling.tag());
        mix_seed(s, self.initial.tag())
    }
}

/// Per-run result: the first round after which the state was improved (0 if
/// the sampled initial state already was), and whether the state ever left
/// the state space (every 1 crashed).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunRecord {
    pub first_improved: Option<u32>,
    pub exited: bool,
}

impl RunRecord {
    pub fn success_at(&self, k: u32) -> bool {
        self.first_improved.is_some_and(|r| r <= k)
    }
}

fn sample_initial(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Vec<Cell> {
    match &cfg.initial {
        InitialCondition::RandomUniform01 => loop {
            let cells: Vec<Cell> = (0..cfg.n)
                .map(|_| if rng.gen_bool(0.5) { Cell::One } else { Cell::Zero })
                .collect();
            if cells.contains(&Cell::One) {
                return cells;
            }
        },
        InitialCondition::WorstCase => {
            let mut cells = vec![Cell::Zero; cfg.n];
            cells[rng.gen_range(0..cfg.n)] = Cell::One;
            cells
        }
        InitialCondition::Explicit(cells) => cells.clone(),
    }
}

fn run_one(cfg: &ModelConfig, point_seed: u64, run_idx: u64, k_max: u32) -> RunRecord {
    run_one_traced(cfg, point_seed, run_idx, k_max, |_, _| {})
}

fn run_one_traced(
    cfg: &ModelConfig,
    point_seed: u64,
    run_idx: u64,
    k_max: u32,
    mut on_round: impl FnMut(&[Cell], &[Cell]),
) -> RunRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
    rng.set_stream(run_idx);
    let initial = sample_initial(cfg, &mut rng);
    let mut first_improved = is_improved(&initial).then_some(0);
    let mut exited = !initial.contains(&Cell::One);
    let mut traj =
        Trajectory::new(initial, cfg.f, cfg.p_f, cfg.sampling).expect("validated config");
    let mut prev = traj.state().cells.clone();
    for r in 1..=k_max {
        traj.step(&mut rng);
        let cells = &traj.state().cells;
        on_round(&prev, cells);
        if first_improved.is_none() && is_improved(cells) {
            first_improved = Some(r);
        }
        if !traj.state().has_one() {
            exited = true;
        }
        prev.clone_from(cells);
    }
    RunRecord {
        first_improved,
        exited,
    }
}

/// Runs `cfg.runs` trajectories for `k_max` rounds. Uses the rayon pool when
/// the `parallel` feature is on; aggregation is per-run, so both paths return
/// identical records.
pub fn collect_records(cfg: &ModelConfig, k_max: u32) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let point_seed = cfg.point_seed();
    #[cfg(feature = "parallel")]
    {
        Ok((0..cfg.runs)
            .into_par_iter()
            .map(|run| run_one(cfg, point_seed, run, k_max))
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..cfg.runs)
            .map(|run| run_one(cfg, point_seed, run, k_max))
            .collect())
    }
}

/// Single-threaded runner, always available; the benchmark suite compares it
/// against the parallel path.
pub fn collect_records_sequential(cfg: &ModelConfig, k_max: u32) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let point_seed = cfg.point_seed();
    Ok((0..cfg.runs)
        .map(|run| run_one(cfg, point_seed, run, k_max))
        .collect())
}

/// Runs one trajectory with a per-round observer; test hook for the
/// reachability and absorption properties.
pub fn run_trajectory_traced(
    cfg: &ModelConfig,
    run_idx: u64,
    k_max: u32,
    on_round: impl FnMut(&[Cell], &[Cell]),
) -> Result<RunRecord> {
    cfg.validate()?;
    Ok(run_one_traced(cfg, cfg.point_seed(), run_idx, k_max, on_round))
}

/// Aggregate success statistics at a given k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunStats {
    pub runs: u64,
    pub successes: u64,
    pub exits: u64,
}

impl RunStats {
    pub fn from_records(records: &[RunRecord], k: u32) -> RunStats {
        RunStats {
            runs: records.len() as u64,
            successes: records.iter().filter(|r| r.success_at(k)).count() as u64,
            exits: records.iter().filter(|r| r.exited).count() as u64,
        }
    }

    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }

    /// Binomial 95% confidence half-width, in rate units.
    pub fn ci95(&self) -> f64 {
        let p = self.rate();
        1.96 * (p * (1.0 - p) / self.runs as f64).sqrt()
    }
}

/// Runs the configured number of trajectories for `cfg.k` rounds and counts
/// improved final states. Deterministic given the seed.
pub fn run_model(cfg: &ModelConfig) -> Result<RunStats> {
    let records = collect_records(cfg, cfg.k)?;
    Ok(RunStats::from_records(&records, cfg.k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_cfg() -> ModelConfig {
        ModelConfig {
            n: 16,
            f: 4,
            p_f: 0.05,
            k: 3,
            sampling: Sampling::WithoutReplacement,
            initial: InitialCondition::WorstCase,
            runs: 200,
            seed: 7,
        }
    }

    #[test]
    fn run_model_is_deterministic() {
        let cfg = base_cfg();
        assert_eq!(run_model(&cfg).unwrap(), run_model(&cfg).unwrap());
    }

    #[test]
    fn forced_flip_every_round_succeeds() {
        // n = 2, f = 0, worst case: the zero always draws both cells.
        let cfg = ModelConfig {
            n: 2,
            f: 0,
            p_f: 0.0,
            k: 1,
            runs: 100,
            ..base_cfg()
        };
        let stats = run_model(&cfg).unwrap();
        assert_eq!(stats.successes, stats.runs);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let cfg = base_cfg();
        let par = collect_records(&cfg, cfg.k).unwrap();
        let seq = collect_records_sequential(&cfg, cfg.k).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn success_is_monotone_in_k_per_run() {
        let cfg = base_cfg();
        let records = collect_records(&cfg, 6).unwrap();
        for rec in &records {
            if let Some(first) = rec.first_improved {
                for k in first..=6 {
                    assert!(rec.success_at(k));
                }
            }
        }
    }

    #[test]
    fn initial_condition_strings_roundtrip() {
        for s in ["random", "worst", "explicit:0101b"] {
            assert_eq!(InitialCondition::parse(s).unwrap().name(), s);
        }
        assert!(InitialCondition::parse("median").is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = base_cfg();
        cfg.f = 16;
        assert!(run_model(&cfg).is_err());
        let mut cfg = base_cfg();
        cfg.p_f = 1.5;
        assert!(run_model(&cfg).is_err());
        let mut cfg = base_cfg();
        cfg.initial = InitialCondition::Explicit(parse_cells("0000").unwrap());
        cfg.n = 4;
        cfg.f = 1;
        assert!(run_model(&cfg).is_err()); // no 1 in the initial state
    }
}
