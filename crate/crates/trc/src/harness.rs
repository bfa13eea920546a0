//! Parallel execution of simulation campaigns.
//!
//! Trials are split into fixed-size chunks whose counts are summed; integer
//! addition is order-insensitive, so results do not depend on the worker
//! count or scheduling.

use std::time::Instant;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use trc_core::sim::{ErrorCounts, SimConfig, Simulation, SweepRow, TrialRecord};

use crate::error::{CliError, CliResult};

const CHUNK: u64 = 2048;

pub struct Harness {
    pool: ThreadPool,
    timing: bool,
}

impl Harness {
    /// `workers == 0` uses all available cores. With `timing` off every
    /// row reports `wallMs = 0` so output is byte-reproducible.
    pub fn new(workers: usize, timing: bool) -> CliResult<Self> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::runtime(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool, timing })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn run_trials(&self, sim: &Simulation) -> trc_core::Result<ErrorCounts> {
        let trials = sim.config().trials;
        let chunks = trials.div_ceil(CHUNK);
        self.pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|c| sim.run_range(c * CHUNK..((c + 1) * CHUNK).min(trials)))
                .try_reduce(ErrorCounts::default, |a, b| Ok(a + b))
        })
    }

    /// Runs one configuration; failures become an error row.
    pub fn run_point(&self, config: &SimConfig) -> SweepRow {
        let start = Instant::now();
        let sim = match Simulation::new(config.clone()) {
            Ok(s) => s,
            Err(e) => return SweepRow::failed(config, &e),
        };
        match self.run_trials(&sim) {
            Ok(counts) => sim.row(&counts, self.elapsed_ms(start)),
            Err(e) => SweepRow::failed(config, &e),
        }
    }

    /// Rows in grid order. Each row is a pure function of its own config.
    pub fn sweep(&self, grid: &[SimConfig]) -> Vec<SweepRow> {
        grid.iter().map(|c| self.run_point(c)).collect()
    }

    /// Per-trial records in trial order.
    pub fn transcript(&self, sim: &Simulation) -> trc_core::Result<Vec<TrialRecord>> {
        let trials = sim.config().trials;
        self.pool
            .install(|| (0..trials).into_par_iter().map(|k| sim.run_trial(k)).collect())
    }

    fn elapsed_ms(&self, start: Instant) -> u64 {
        if self.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        }
    }
}
