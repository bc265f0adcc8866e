//! Execution policy for the data-parallel stages.
//!
//! Every parallel entry point takes an [`Execution`] so callers can pick
//! sequential or pooled execution at runtime. Without the `parallel`
//! feature the pooled variant degrades to the sequential path. Results are
//! always returned in input order, so outputs never depend on scheduling.

use serde::{Deserialize, Serialize};

/// How a batch of independent tasks is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Execution {
    Sequential,
    /// Pooled execution with at most `workers` threads. `0` means one
    /// thread per available core.
    Parallel { workers: usize },
    #[default]
    Auto,
}

/// Environment variable bounding pooled parallelism.
pub const WORKERS_ENV: &str = "WINDCAST_WORKERS";

impl Execution {
    /// Resolve `Auto` against `WINDCAST_WORKERS`; unset or unparsable means
    /// one thread per core.
    pub fn resolve(self) -> Execution {
        match self {
            Execution::Auto => {
                let workers = std::env::var(WORKERS_ENV)
                    .ok()
                    .and_then(|v| v.trim().parse::<usize>().ok())
                    .unwrap_or(0);
                if workers == 1 {
                    Execution::Sequential
                } else {
                    Execution::Parallel { workers }
                }
            }
            other => other,
        }
    }

    pub fn from_workers(workers: usize) -> Execution {
        match workers {
            1 => Execution::Sequential,
            w => Execution::Parallel { workers: w },
        }
    }

    /// Whether pooled execution is compiled in.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Map `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec.resolve() {
        Execution::Sequential | Execution::Auto => items.iter().map(f).collect(),
        Execution::Parallel { workers } => parallel_map(workers, items, f),
    }
}

/// Map `f` over `0..n`, preserving order.
pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    let idx: Vec<usize> = (0..n).collect();
    map(exec, &idx, |&i| f(i))
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 0 {
        return items.par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(err) => {
            log::warn!("thread pool unavailable ({err}); running sequentially");
            items.iter().map(f).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(_workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_under_every_policy() {
        let items: Vec<u64> = (0..257).collect();
        let expected: Vec<u64> = items.iter().map(|x| x * x).collect();
        for exec in [
            Execution::Sequential,
            Execution::Parallel { workers: 1 },
            Execution::Parallel { workers: 4 },
            Execution::Parallel { workers: 0 },
        ] {
            assert_eq!(map(exec, &items, |x| x * x), expected);
        }
    }

    #[test]
    fn from_workers_maps_one_to_sequential() {
        assert_eq!(Execution::from_workers(1), Execution::Sequential);
        assert_eq!(
            Execution::from_workers(4),
            Execution::Parallel { workers: 4 }
        );
    }
}
