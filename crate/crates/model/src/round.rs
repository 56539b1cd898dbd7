//! The per-round transition of the approximate model.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{Cell, ModelError, ModelState, Result};

/// How a 0 cell draws its `n - f` values. The round model never pins this
/// down tighter than "choose n - f random values", so both readings ship;
/// without replacement is the default (n - f distinct messages).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    WithoutReplacement,
    WithReplacement,
}

impl Sampling {
    pub fn name(self) -> &'static str {
        match self {
            Sampling::WithoutReplacement => "without-replacement",
            Sampling::WithReplacement => "with-replacement",
        }
    }

    pub fn parse(s: &str) -> Result<Sampling> {
        match s {
            "without" | "without-replacement" => Ok(Sampling::WithoutReplacement),
            "with" | "with-replacement" => Ok(Sampling::WithReplacement),
            other => Err(ModelError::InvalidConfig(format!(
                "unknown sampling mode {:?}",
                other
            ))),
        }
    }

    pub fn tag(self) -> u64 {
        match self {
            Sampling::WithoutReplacement => 1,
            Sampling::WithReplacement => 2,
        }
    }
}

/// One evolving trajectory with reusable scratch buffers.
///
/// A round walks the cells in index order. A live cell crashes with
/// probability `p_f` while the crash budget lasts; the crash is written to
/// the current state (later draws in the same round see it) and to the next
/// state (it persists). A surviving 0 draws `n - f` cells from the current
/// state and becomes 1 in the next state iff it drew a 1. Value updates are
/// synchronous: they land in the next state only.
pub struct Trajectory {
    state: ModelState,
    next: Vec<Cell>,
    perm: Vec<u32>,
    n: usize,
    f: usize,
    p_f: f64,
    sampling: Sampling,
}

impl Trajectory {
    pub fn new(
        initial: Vec<Cell>,
        f: usize,
        p_f: f64,
        sampling: Sampling,
    ) -> Result<Trajectory> {
        let n = initial.len();
        if n == 0 || f >= n {
            return Err(ModelError::InvalidConfig(format!(
                "need 0 <= f < n, got n = {}, f = {}",
                n, f
            )));
        }
        if !(0.0..=1.0).contains(&p_f) {
            return Err(ModelError::InvalidConfig(format!(
                "p_f must lie in [0, 1], got {}",
                p_f
            )));
        }
        let state = ModelState::new(initial);
        Ok(Trajectory {
            next: state.cells.clone(),
            perm: (0..n as u32).collect(),
            state,
            n,
            f,
            p_f,
            sampling,
        })
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }

    pub fn step(&mut self, rng: &mut ChaCha8Rng) {
        #[cfg(debug_assertions)]
        let before = self.state.cells.clone();

        let draws = self.n - self.f;
        self.next.copy_from_slice(&self.state.cells);
        for i in 0..self.n {
            let cell = self.state.cells[i];
            if cell == Cell::Bot {
                continue;
            }
            if self.state.crashed < self.f && rng.gen_bool(self.p_f) {
                self.state.cells[i] = Cell::Bot;
                self.next[i] = Cell::Bot;
                self.state.crashed += 1;
                continue;
            }
            if cell != Cell::Zero {
                continue;
            }
            // max(C + {0}) is 1 exactly when the draw contains a 1, so the
            // scan can stop at the first hit.
            let hit = match self.sampling {
                Sampling::WithoutReplacement => {
                    let cells = &self.state.cells;
                    let perm = &mut self.perm;
                    let mut hit = false;
                    for j in 0..draws {
                        let r = rng.gen_range(j..self.n);
                        perm.swap(j, r);
                        if cells[perm[j] as usize] == Cell::One {
                            hit = true;
                            break;
                        }
                    }
                    hit
                }
                Sampling::WithReplacement => {
                    let cells = &self.state.cells;
                    let mut hit = false;
                    for _ in 0..draws {
                        if cells[rng.gen_range(0..self.n)] == Cell::One {
                            hit = true;
                            break;
                        }
                    }
                    hit
                }
            };
            if hit {
                self.next[i] = Cell::One;
            }
        }
        std::mem::swap(&mut self.state.cells, &mut self.next);

        #[cfg(debug_assertions)]
        {
            debug_assert!(crate::is_reachable(&before, &self.state.cells).unwrap());
            debug_assert!(self.state.crashed <= self.f);
        }
    }
}

/// One round as a pure function; [`Trajectory`] is the buffer-reusing form
/// the runner uses.
pub fn model_round(
    state: &ModelState,
    f: usize,
    p_f: f64,
    sampling: Sampling,
    rng: &mut ChaCha8Rng,
) -> Result<ModelState> {
    let mut traj = Trajectory::new(state.cells.clone(), f, p_f, sampling)?;
    traj.state.crashed = state.crashed;
    traj.step(rng);
    Ok(traj.into_state())
}
