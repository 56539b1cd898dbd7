//! Parameter sweeps with common random numbers across k, plus the table
//! renderers.
//!
//! All k values of a grid point share trajectories: each run executes
//! `max(k)` rounds once and success at k means the state was improved by
//! round k. Improvement is absorbing, so per-run success is monotone
//! non-decreasing in k by construction, not just statistically.

use crate::round::Sampling;
use crate::runner::{collect_records, InitialCondition, ModelConfig, RunStats};
use crate::Result;

#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub n: usize,
    pub f: Vec<usize>,
    pub p_f: Vec<f64>,
    pub k: Vec<u32>,
    pub initial: Vec<InitialCondition>,
    pub sampling: Vec<Sampling>,
    pub runs: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub f: usize,
    pub p_f: f64,
    pub k: u32,
    pub initial: String,
    pub sampling: String,
    pub runs: u64,
    pub successes: u64,
    pub exits: u64,
}

impl SweepRow {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }

    pub fn ci95(&self) -> f64 {
        let p = self.rate();
        1.96 * (p * (1.0 - p) / self.runs as f64).sqrt()
    }
}

/// Runs every grid point and emits one row per k value, ordered as the grid
/// lists its axes (f, then p_f, then initial, then sampling, then k).
pub fn sweep(grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    let k_max = *grid.k.iter().max().expect("nonempty k axis");
    let mut rows = Vec::new();
    for &f in &grid.f {
        for &p_f in &grid.p_f {
            for initial in &grid.initial {
                for &sampling in &grid.sampling {
                    let cfg = ModelConfig {
                        n: grid.n,
                        f,
                        p_f,
                        k: k_max,
                        sampling,
                        initial: initial.clone(),
                        runs: grid.runs,
                        seed: grid.seed,
                    };
                    let records = collect_records(&cfg, k_max)?;
                    for &k in &grid.k {
                        let stats = RunStats::from_records(&records, k);
                        rows.push(SweepRow {
                            n: grid.n,
                            f,
                            p_f,
                            k,
                            initial: initial.name(),
                            sampling: sampling.name().to_string(),
                            runs: stats.runs,
                            successes: stats.successes,
                            exits: stats.exits,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

const COLUMNS: [&str; 10] = [
    "n", "f", "p_f", "k", "initial", "sampling", "runs", "successes", "rate", "ci95",
];

fn row_fields(row: &SweepRow) -> Vec<String> {
    vec![
        row.n.to_string(),
        row.f.to_string(),
        row.p_f.to_string(),
        row.k.to_string(),
        row.initial.clone(),
        row.sampling.clone(),
        row.runs.to_string(),
        row.successes.to_string(),
        format!("{:.1}%", row.rate() * 100.0),
        format!("{:.1}", row.ci95() * 100.0),
    ]
}

fn header_line(seed: u64) -> String {
    format!(
        "# seed={} version={} tool=ela",
        seed,
        env!("CARGO_PKG_VERSION")
    )
}

/// Space-padded table with a `# seed=... version=...` header line.
pub fn render_text(rows: &[SweepRow], seed: u64) -> String {
    let mut widths: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
    let fields: Vec<Vec<String>> = rows.iter().map(row_fields).collect();
    for row in &fields {
        for (w, field) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(field.len());
        }
    }
    let mut out = header_line(seed);
    out.push('\n');
    let render = |cells: Vec<String>, out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths.iter())
            .map(|(c, w)| format!("{:>width$}", c, width = w))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    render(COLUMNS.iter().map(|c| c.to_string()).collect(), &mut out);
    for row in fields {
        render(row, &mut out);
    }
    out
}

/// Comma-separated table with the same header comment.
pub fn render_csv(rows: &[SweepRow], seed: u64) -> String {
    let mut out = header_line(seed);
    out.push('\n');
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for row in rows {
        let mut fields = row_fields(row);
        fields[8] = row.rate().to_string();
        fields[9] = row.ci95().to_string();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::run_model;

    fn small_grid() -> SweepGrid {
        SweepGrid {
            n: 12,
            f: vec![3],
            p_f: vec![0.1],
            k: vec![1, 2, 3],
            initial: vec![InitialCondition::WorstCase],
            sampling: vec![Sampling::WithoutReplacement],
            runs: 300,
            seed: 5,
        }
    }

    #[test]
    fn rates_are_monotone_in_k() {
        let rows = sweep(&small_grid()).unwrap();
        assert_eq!(rows.len(), 3);
        for pair in rows.windows(2) {
            assert!(pair[0].successes <= pair[1].successes);
        }
    }

    #[test]
    fn single_point_matches_run_model() {
        let grid = SweepGrid {
            k: vec![2],
            ..small_grid()
        };
        let rows = sweep(&grid).unwrap();
        let cfg = ModelConfig {
            n: grid.n,
            f: grid.f[0],
            p_f: grid.p_f[0],
            k: 2,
            sampling: grid.sampling[0],
            initial: grid.initial[0].clone(),
            runs: grid.runs,
            seed: grid.seed,
        };
        let stats = run_model(&cfg).unwrap();
        assert_eq!(rows[0].successes, stats.successes);
        assert_eq!(rows[0].exits, stats.exits);
    }

    #[test]
    fn sweep_prefix_matches_standalone_k() {
        // The k-sweep extends trajectories, so each k row must equal an
        // independent run_model at that k.
        let grid = small_grid();
        let rows = sweep(&grid).unwrap();
        for row in &rows {
            let cfg = ModelConfig {
                n: row.n,
                f: row.f,
                p_f: row.p_f,
                k: row.k,
                sampling: Sampling::WithoutReplacement,
                initial: InitialCondition::WorstCase,
                runs: row.runs,
                seed: grid.seed,
            };
            let stats = run_model(&cfg).unwrap();
            assert_eq!(row.successes, stats.successes, "k = {}", row.k);
        }
    }

    #[test]
    fn renderers_are_stable() {
        let rows = sweep(&small_grid()).unwrap();
        let a = render_text(&rows, 5);
        let b = render_text(&rows, 5);
        assert_eq!(a, b);
        assert!(a.starts_with("# seed=5"));
        let csv = render_csv(&rows, 5);
        assert_eq!(csv.lines().count(), rows.len() + 2);
        assert!(csv.lines().nth(1).unwrap().starts_with("n,f,p_f,k"));
    }
}
