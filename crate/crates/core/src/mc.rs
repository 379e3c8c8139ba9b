//! Deterministic parallel replica evaluation.
//!
//! Replicas are evaluated through rayon and collected in index order, so the
//! output vector (and any pairwise reduction over it) is independent of the
//! thread schedule. The worker count comes from `STRASSEN_WORKERS` when set;
//! [`set_serial`] forces single-threaded execution.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::OnceLock;

use rayon::prelude::*;

pub const WORKERS_ENV: &str = "STRASSEN_WORKERS";

static SERIAL: AtomicBool = AtomicBool::new(false);
static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

pub fn set_serial(serial: bool) {
    SERIAL.store(serial, Ordering::SeqCst);
}

pub fn is_serial() -> bool {
    SERIAL.load(Ordering::SeqCst)
}

fn pool() -> &'static rayon::ThreadPool {
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
            b = b.num_threads(n.max(1));
        }
        b.build().expect("thread pool")
    })
}

/// Evaluate `f(i)` for `i in 0..n`, returning results in index order.
pub fn replicate<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if is_serial() || n < 2 {
        return (0..n as u64).map(f).collect();
    }
    pool().install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

/// Evaluate `f` on each element of `items` in parallel, preserving order.
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    if is_serial() || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    pool().install(|| items.par_iter().map(&f).collect())
}

/// Running mean and centred second moment of vector-valued samples.
#[derive(Debug, Clone)]
struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self { n: 0.0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1.0;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / self.n;
            *s += d * (v - *m);
        }
    }

    /// Chan et al. pairwise combination.
    fn merge(mut self, other: &Welford) -> Self {
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        for k in 0..self.mean.len() {
            let d = other.mean[k] - self.mean[k];
            self.mean[k] += d * other.n / n;
            self.m2[k] += other.m2[k] + d * d * self.n * other.n / n;
        }
        self.n = n;
        self
    }
}

const BLOCK: usize = 256;

/// Per-component mean and standard error of `f(i)` over replicas `0..n`.
///
/// `f` writes one sample into the provided buffer. Replicas are grouped in
/// fixed blocks whose summaries are merged in block order, so the result does
/// not depend on the number of workers.
pub fn estimate<F>(n: usize, dim: usize, f: F) -> Vec<crate::stats::Estimate>
where
    F: Fn(u64, &mut [f64]) + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    let parts = replicate(blocks, |b| {
        let mut w = Welford::new(dim);
        let mut buf = vec![0.0; dim];
        let lo = b as usize * BLOCK;
        for i in lo..(lo + BLOCK).min(n) {
            buf.iter_mut().for_each(|v| *v = 0.0);
            f(i as u64, &mut buf);
            w.push(&buf);
        }
        w
    });
    let total = parts.iter().fold(Welford::new(dim), |acc, w| acc.merge(w));
    (0..dim)
        .map(|k| {
            let var = if total.n > 1.0 { total.m2[k] / (total.n - 1.0) } else { f64::NAN };
            crate::stats::Estimate { mean: total.mean[k], se: (var / total.n).sqrt(), n }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_matches_direct_statistics() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64).collect();
        let e = estimate(1000, 1, |i, out| out[0] = xs[i as usize]);
        let d = crate::stats::Estimate::from_samples(&xs);
        assert!((e[0].mean - d.mean).abs() < 1e-12);
        assert!((e[0].se - d.se).abs() < 1e-12);
    }

    #[test]
    fn order_is_preserved() {
        let v = replicate(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i as u64));
    }
}
