//! Desk-scale experiments behind the `regmcts` subcommands.
//!
//! Every command fans out over independent work items on a bounded rayon
//! pool and collects results in item order, so output never depends on the
//! number of workers.

mod bound;
mod config;
mod props;
mod solve;
mod sweep;
mod track;

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub use bound::{bound_process, cmd_bound, tightness_gap, BoundOutcome, BoundRow, BoundSelector};
pub use config::{EnvKind, ExperimentKind, RunConfig, TrackQ};
pub use props::{cmd_props, PropsReport, PropsRow};
pub use solve::{cmd_solve, SolveReport, SolveRequest};
pub use sweep::{cmd_sweep, SweepRow};
pub use track::{cmd_track, TrackingRow};

/// A CSV record with a fixed header.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

/// Writes `rows` under `R::HEADER` to `path`, or to stdout without a path.
/// The header is written even when there are no rows.
pub fn write_csv<R: CsvRow>(path: Option<&Path>, rows: &[R]) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            write_rows(file, rows)
        }
        None => write_rows(io::stdout().lock(), rows),
    }
}

pub fn write_rows<R: CsvRow, W: Write>(out: W, rows: &[R]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    writer.write_record(R::HEADER)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one work item, derived from the user seed and a tuple of tags.
/// Items with different tags get unrelated streams; the same tuple always
/// gets the same seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |acc, &tag| {
        splitmix64(acc ^ splitmix64(tag))
    })
}

/// Worker count: the explicit value, else the available parallelism.
pub fn resolve_workers(workers: Option<usize>) -> Result<usize> {
    match workers {
        Some(0) => Err(Error::Config("workers must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Maps `f` over `items` on a pool of `workers` threads, keeping item order.
pub fn par_map<T, U, F>(workers: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}
