//! Simplified approximate model of k-round reconciliation.
//!
//! States are vectors over {bot, 0, 1} with the ordering bot < 0 < 1: a 0 is
//! a process still holding the minimum value, a 1 holds anything above it,
//! and bot is crashed. Each round, every surviving 0 draws `n - f` cells
//! from the current state and flips to 1 if it drew any 1; cells crash with
//! probability `p_f` per round while fewer than `f` crashes have happened.
//! A run succeeds when the state has no 0s or no 1s left.
//!
//! Independent trajectories are embarrassingly parallel; each derives its own
//! RNG stream from (seed, run index), so the parallel and sequential runners
//! produce identical results.

pub mod round;
pub mod runner;
pub mod sweep;

use thiserror::Error;

pub use round::{model_round, Sampling, Trajectory};
pub use runner::{
    collect_records, collect_records_sequential, run_model, run_trajectory_traced,
    InitialCondition, ModelConfig, RunRecord, RunStats,
};
pub use sweep::{render_csv, render_text, sweep, SweepGrid, SweepRow};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("state vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid model config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Cell of a model state; the derived order is exactly bot < 0 < 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cell {
    Bot,
    Zero,
    One,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Bot => 'b',
            Cell::Zero => '0',
            Cell::One => '1',
        }
    }

    pub fn from_symbol(c: char) -> Result<Cell> {
        match c {
            'b' | 'x' | '-' => Ok(Cell::Bot),
            '0' => Ok(Cell::Zero),
            '1' => Ok(Cell::One),
            other => Err(ModelError::InvalidConfig(format!(
                "unknown cell symbol {:?} (expected 0, 1, or b)",
                other
            ))),
        }
    }
}

/// Parse a compact cell string like `"0101b"`.
pub fn parse_cells(s: &str) -> Result<Vec<Cell>> {
    s.chars().map(Cell::from_symbol).collect()
}

/// A model state plus its crash counter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelState {
    pub cells: Vec<Cell>,
    pub crashed: usize,
}

impl ModelState {
    pub fn new(cells: Vec<Cell>) -> ModelState {
        let crashed = cells.iter().filter(|&&c| c == Cell::Bot).count();
        ModelState { cells, crashed }
    }

    pub fn has_one(&self) -> bool {
        self.cells.contains(&Cell::One)
    }
}

/// State-space membership: at most `f` crashed cells and at least one 1.
pub fn is_in_state_space(cells: &[Cell], f: usize) -> bool {
    let bots = cells.iter().filter(|&&c| c == Cell::Bot).count();
    bots <= f && cells.contains(&Cell::One)
}

/// One-round reachability: crashed cells stay crashed and no 1 falls back
/// to 0.
pub fn is_reachable(from: &[Cell], to: &[Cell]) -> Result<bool> {
    if from.len() != to.len() {
        return Err(ModelError::LengthMismatch(from.len(), to.len()));
    }
    Ok(from.iter().zip(to.iter()).all(|(&a, &b)| match a {
        Cell::Bot => b == Cell::Bot,
        Cell::One => b != Cell::Zero,
        Cell::Zero => true,
    }))
}

/// Improvement predicate: no 0s left, or no 1s left. Applied even to states
/// that fell out of the state space (all 1s crashed); the runner counts those
/// exits separately.
pub fn is_improved(cells: &[Cell]) -> bool {
    !cells.contains(&Cell::Zero) || !cells.contains(&Cell::One)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Cell::{Bot, One, Zero};

    #[test]
    fn state_space_membership() {
        assert!(is_in_state_space(&[One, Zero, Zero], 1));
        assert!(!is_in_state_space(&[Zero, Zero, Zero], 1)); // no 1
        assert!(!is_in_state_space(&[One, Bot, Bot], 1)); // too many crashes
    }

    #[test]
    fn reachability_rules() {
        assert!(is_reachable(&[One, Zero], &[One, One]).unwrap());
        assert!(!is_reachable(&[One, Bot], &[One, Zero]).unwrap());
        assert!(!is_reachable(&[One, Zero], &[Zero, One]).unwrap());
        assert!(is_reachable(&[One, Zero], &[Bot, Bot]).unwrap());
        assert_eq!(
            is_reachable(&[One], &[One, One]),
            Err(ModelError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn improvement_predicate() {
        assert!(is_improved(&[One, One, Bot]));
        assert!(is_improved(&[Zero, Bot]));
        assert!(!is_improved(&[Zero, One]));
    }

    #[test]
    fn cell_order_is_bot_zero_one() {
        assert!(Bot < Zero && Zero < One);
    }

    #[test]
    fn cells_parse_and_print() {
        let cells = parse_cells("01b").unwrap();
        assert_eq!(cells, vec![Zero, One, Bot]);
        assert!(parse_cells("02").is_err());
    }
}
