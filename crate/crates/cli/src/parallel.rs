//! Scoped worker pool behind [`ParallelMap`].

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use hypertrain_core::baselines::ParallelMap;

pub const THREADS_ENV: &str = "HYPERTRAIN_THREADS";

#[derive(Debug, Clone, Copy)]
pub struct ThreadPool {
    threads: usize,
}

impl ThreadPool {
    pub fn new(threads: usize) -> Self {
        Self { threads: threads.max(1) }
    }

    /// Worker count from `HYPERTRAIN_THREADS`, else the available cores.
    pub fn from_env() -> Self {
        let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(cores);
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.threads
    }
}

impl ParallelMap for ThreadPool {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        let workers = self.threads.min(n);
        if workers <= 1 {
            return (0..n).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let out = f(i);
                    slots.lock().unwrap()[i] = Some(out);
                });
            }
        });
        slots.into_inner().unwrap().into_iter().map(|t| t.expect("every index ran")).collect()
    }
}
