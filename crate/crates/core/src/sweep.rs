//! Full-factorial parameter sweeps with parallel replications.
//!
//! Conditions are enumerated speed-major, then local conservatism, then
//! migrant conservatism. Each replication owns its world; results are merged
//! by `(condition, replication)` index, so the output does not depend on
//! scheduling or on the degree of parallelism.

use rayon::prelude::*;

use crate::dynamics::Simulation;
use crate::error::{Error, Result};
use crate::metrics::{field_names, Substratum, TickObservables};
use crate::params::SimParams;
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::stats::DataTable;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// Parameters shared by every condition. `base.seed` is the master seed
    /// and `base.ticks` the run length.
    pub base: SimParams,
    pub conservatism_local_levels: Vec<f64>,
    pub conservatism_migrant_levels: Vec<f64>,
    pub speed_levels: Vec<u32>,
    pub replications: usize,
    /// Maximum number of replications running at once.
    pub parallelism: usize,
}

pub const CONSERVATISM_LEVELS: [f64; 5] = [-0.75, -0.25, 0.0, 0.25, 0.75];
pub const SPEED_LEVELS: [u32; 2] = [1, 100];

impl SweepSpec {
    /// The 5 x 5 x 2 design with 500 + 500 agents, 1000 ticks and 20
    /// replications.
    pub fn full_design() -> Self {
        SweepSpec {
            base: SimParams::default(),
            conservatism_local_levels: CONSERVATISM_LEVELS.to_vec(),
            conservatism_migrant_levels: CONSERVATISM_LEVELS.to_vec(),
            speed_levels: SPEED_LEVELS.to_vec(),
            replications: 20,
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }

    pub fn condition_count(&self) -> usize {
        self.conservatism_local_levels.len()
            * self.conservatism_migrant_levels.len()
            * self.speed_levels.len()
    }

    pub fn conditions(&self) -> Vec<Condition> {
        let mut out = Vec::with_capacity(self.condition_count());
        for &speed_intake in &self.speed_levels {
            for &conservatism_local in &self.conservatism_local_levels {
                for &conservatism_migrant in &self.conservatism_migrant_levels {
                    out.push(Condition {
                        index: out.len(),
                        conservatism_local,
                        conservatism_migrant,
                        speed_intake,
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.condition_count() == 0 {
            return Err(Error::Config("sweep has no conditions".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Condition {
    pub index: usize,
    pub conservatism_local: f64,
    pub conservatism_migrant: f64,
    pub speed_intake: u32,
}

impl Condition {
    pub fn params(&self, base: &SimParams) -> SimParams {
        SimParams {
            conservatism_local: self.conservatism_local,
            conservatism_migrant: self.conservatism_migrant,
            speed_intake: self.speed_intake,
            ..base.clone()
        }
    }
}

/// Runs one replication: tick-0 baseline followed by `params.ticks` ticks.
/// `seed` replaces `params.seed`.
pub fn run_replication<S: Scalar>(
    params: &SimParams,
    seed: u64,
) -> Result<Vec<TickObservables<S>>> {
    let params = SimParams {
        seed,
        ..params.clone()
    };
    Ok(Simulation::<S>::new(params)?.run())
}

/// Replicate mean and sample standard deviation of every observable, per
/// tick. Rows are aligned with [`field_names`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionResult<S> {
    pub condition: Condition,
    pub mean: Vec<Vec<S>>,
    pub sd: Vec<Vec<S>>,
}

impl<S: Scalar> ConditionResult<S> {
    /// Wraps a single replication's stream; standard deviations are zero.
    pub fn from_stream(condition: Condition, stream: &[TickObservables<S>]) -> Self {
        aggregate(condition, std::slice::from_ref(&stream.to_vec()))
    }

    /// Replicate means at the last tick.
    pub fn final_mean(&self) -> &[S] {
        self.mean.last().map_or(&[], |r| r.as_slice())
    }

    pub fn ticks(&self) -> usize {
        self.mean.len()
    }
}

/// Outcome counts of one substratum in a long-format row.
#[derive(Clone, Debug, PartialEq)]
pub struct LongSubstratum<S> {
    pub count: usize,
    pub outcomes: [S; 4],
}

/// One observation for the regression pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct LongRecord<S> {
    pub condition: usize,
    pub replication: usize,
    pub tick: u32,
    pub conservatism_local: f64,
    pub conservatism_migrant: f64,
    pub speed_intake: u32,
    /// Fraction of host locals that are conservative.
    pub pct_conservative_locals: S,
    pub pct_conservative_migrants: S,
    pub substrata: [LongSubstratum<S>; 4],
}

impl<S: Scalar> LongRecord<S> {
    fn new(condition: &Condition, replication: usize, obs: &TickObservables<S>) -> Self {
        LongRecord {
            condition: condition.index,
            replication,
            tick: obs.tick,
            conservatism_local: condition.conservatism_local,
            conservatism_migrant: condition.conservatism_migrant,
            speed_intake: condition.speed_intake,
            pct_conservative_locals: obs.populations[0].fraction_conservative,
            pct_conservative_migrants: obs.populations[1].fraction_conservative,
            substrata: [0, 1, 2, 3].map(|s| LongSubstratum {
                count: obs.substrata[s].count,
                outcomes: obs.substrata[s].outcomes,
            }),
        }
    }
}

/// Column names of the long-format table, in order.
pub fn long_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "condition",
        "replication",
        "tick",
        "conservatism_local",
        "conservatism_migrant",
        "speed_intake",
        "pct_conservative_locals",
        "pct_conservative_migrants",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for sub in Substratum::ALL {
        cols.push(format!("{}_count", sub.name()));
        for o in crate::dynamics::Outcome::ALL {
            cols.push(format!("{}_{}", sub.name(), o.name()));
        }
    }
    cols
}

impl<S: Scalar> LongRecord<S> {
    /// Numeric row aligned with [`long_columns`].
    pub fn to_row(&self) -> Vec<f64> {
        let mut row = vec![
            self.condition as f64,
            self.replication as f64,
            f64::from(self.tick),
            self.conservatism_local,
            self.conservatism_migrant,
            f64::from(self.speed_intake),
            self.pct_conservative_locals.as_f64(),
            self.pct_conservative_migrants.as_f64(),
        ];
        for s in &self.substrata {
            row.push(s.count as f64);
            row.extend(s.outcomes.iter().map(|v| v.as_f64()));
        }
        row
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult<S> {
    pub replications: usize,
    pub conditions: Vec<ConditionResult<S>>,
    /// One row per condition x replication x tick, sorted by that key.
    pub long_records: Vec<LongRecord<S>>,
}

impl<S: Scalar> SweepResult<S> {
    pub fn long_table(&self) -> DataTable {
        DataTable::new(
            long_columns(),
            self.long_records.iter().map(|r| r.to_row()).collect(),
        )
        .expect("long records match their column schema")
    }

    pub fn total_runs(&self) -> usize {
        self.conditions.len() * self.replications
    }
}

pub fn run_sweep<S: Scalar>(spec: &SweepSpec) -> Result<SweepResult<S>> {
    run_sweep_with_progress(spec, |_, _| {})
}

/// Like [`run_sweep`], calling `progress(done, total)` after each batch of
/// conditions completes.
pub fn run_sweep_with_progress<S: Scalar>(
    spec: &SweepSpec,
    progress: impl Fn(usize, usize),
) -> Result<SweepResult<S>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let conditions = spec.conditions();
    let total = conditions.len() * spec.replications;
    // enough conditions per batch to keep every worker busy
    let per_batch = spec.parallelism.div_ceil(spec.replications).max(1);

    let mut results = Vec::with_capacity(conditions.len());
    let mut long_records = Vec::new();
    let mut done = 0;
    for batch in conditions.chunks(per_batch) {
        let jobs: Vec<(Condition, usize)> = batch
            .iter()
            .flat_map(|c| (0..spec.replications).map(move |r| (*c, r)))
            .collect();
        let streams: Vec<Result<Vec<TickObservables<S>>>> = pool.install(|| {
            jobs.par_iter()
                .map(|(c, r)| {
                    let seed = derive_seed(spec.base.seed, c.index, *r);
                    run_replication(&c.params(&spec.base), seed).map_err(|e| Error::Replication {
                        condition: c.index,
                        replication: *r,
                        seed,
                        source: Box::new(e),
                    })
                })
                .collect()
        });
        let mut streams = streams.into_iter();
        for condition in batch {
            let reps: Vec<Vec<TickObservables<S>>> = streams
                .by_ref()
                .take(spec.replications)
                .collect::<Result<_>>()?;
            for (r, stream) in reps.iter().enumerate() {
                long_records.extend(stream.iter().map(|obs| LongRecord::new(condition, r, obs)));
            }
            results.push(aggregate(*condition, &reps));
        }
        done += jobs.len();
        progress(done, total);
    }

    Ok(SweepResult {
        replications: spec.replications,
        conditions: results,
        long_records,
    })
}

/// Per-tick mean and sample standard deviation across replications, summed
/// in replication order.
fn aggregate<S: Scalar>(
    condition: Condition,
    reps: &[Vec<TickObservables<S>>],
) -> ConditionResult<S> {
    let n = reps.len();
    let ticks = reps.iter().map(Vec::len).min().unwrap_or(0);
    let width = field_names().len();
    let mut mean = Vec::with_capacity(ticks);
    let mut sd = Vec::with_capacity(ticks);
    for t in 0..ticks {
        let rows: Vec<Vec<S>> = reps.iter().map(|r| r[t].to_row()).collect();
        let mut m = vec![S::zero(); width];
        for row in &rows {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc = *acc + *v;
            }
        }
        for v in &mut m {
            *v = *v / S::from_count(n);
        }
        let mut s = vec![S::zero(); width];
        if n > 1 {
            for row in &rows {
                for ((acc, v), mu) in s.iter_mut().zip(row).zip(&m) {
                    let d = *v - *mu;
                    *acc = *acc + d * d;
                }
            }
            for v in &mut s {
                *v = (*v / S::from_count(n - 1)).sqrt();
            }
        }
        mean.push(m);
        sd.push(s);
    }
    ConditionResult {
        condition,
        mean,
        sd,
    }
}
