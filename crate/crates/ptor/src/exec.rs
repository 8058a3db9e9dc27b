//! Data-parallel range execution with a deterministic ordered reduce.
//!
//! Every scan maps a function over an ascending integer range and folds
//! the results in range order. The map runs on rayon when the `parallel`
//! feature is enabled (the default); the fold is always sequential, so
//! the emitted stream is byte-identical for any worker count.

use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Worker configuration for a scan. `None` uses the global default
/// (rayon's thread count, or sequential without the `parallel` feature);
/// `Some(1)` forces the sequential path.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExecCfg {
    pub workers: Option<usize>,
}

impl ExecCfg {
    pub fn sequential() -> Self {
        ExecCfg { workers: Some(1) }
    }

    fn force_sequential(&self) -> bool {
        matches!(self.workers, Some(1)) || !cfg!(feature = "parallel")
    }
}

/// A per-field failure carried out of a scan instead of aborting it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub at: u64,
    pub message: String,
}

const CHUNK: u64 = 4096;

/// Map `f` over `lo..=hi` in parallel chunks, then fold the `Some`
/// results in ascending order. Per-field errors are collected, never
/// dropped. `f` returning `Ok(None)` means "filtered out".
pub fn map_fold<T, A, M, F>(
    lo: u64,
    hi: u64,
    cfg: ExecCfg,
    f: M,
    init: A,
    mut fold: F,
) -> Result<(A, Vec<FieldError>)>
where
    T: Send,
    M: Fn(u64) -> Result<Option<T>> + Sync,
    F: FnMut(A, u64, T) -> A,
{
    let mut acc = init;
    let mut errors = Vec::new();
    #[cfg(feature = "parallel")]
    let pool = match cfg.workers {
        Some(w) if w > 1 => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| crate::error::Error::Capacity(format!("thread pool: {e}")))?,
        ),
        _ => None,
    };

    let mut start = lo;
    while start <= hi {
        let end = start.saturating_add(CHUNK - 1).min(hi);
        let chunk: Vec<(u64, std::result::Result<Option<T>, String>)> = if cfg.force_sequential() {
            (start..=end)
                .map(|n| (n, f(n).map_err(|e| e.to_string())))
                .collect()
        } else {
            #[cfg(feature = "parallel")]
            {
                let run = || {
                    (start..=end)
                        .into_par_iter()
                        .map(|n| (n, f(n).map_err(|e| e.to_string())))
                        .collect()
                };
                match &pool {
                    Some(p) => p.install(run),
                    None => run(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            unreachable!()
        };
        for (n, r) in chunk {
            match r {
                Ok(Some(v)) => acc = fold(acc, n, v),
                Ok(None) => {}
                Err(message) => errors.push(FieldError { at: n, message }),
            }
        }
        if end == u64::MAX {
            break;
        }
        start = end + 1;
    }
    Ok((acc, errors))
}

/// Compensated (Kahan) accumulator for long float sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_fold_matches_sequential() {
        let f = |n: u64| -> Result<Option<u64>> { Ok((n % 3 == 0).then_some(n * n)) };
        let (seq, e1) = map_fold(
            1,
            20000,
            ExecCfg::sequential(),
            f,
            Vec::new(),
            |mut v, n, x| {
                v.push((n, x));
                v
            },
        )
        .unwrap();
        let (par, e2) = map_fold(
            1,
            20000,
            ExecCfg::default(),
            f,
            Vec::new(),
            |mut v, n, x| {
                v.push((n, x));
                v
            },
        )
        .unwrap();
        assert!(e1.is_empty() && e2.is_empty());
        assert_eq!(seq, par);
    }

    #[test]
    fn errors_are_collected_not_dropped() {
        let f = |n: u64| -> Result<Option<u64>> {
            if n == 7 {
                Err(crate::error::Error::Integrity("boom".into()))
            } else {
                Ok(Some(n))
            }
        };
        let (count, errs) =
            map_fold(1, 10, ExecCfg::default(), f, 0u64, |acc, _, _| acc + 1).unwrap();
        assert_eq!(count, 9);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].at, 7);
    }

    #[test]
    fn kahan_sums_accurately() {
        let mut k = Kahan::default();
        for _ in 0..1_000_000 {
            k.add(0.1);
        }
        assert!((k.value() - 100_000.0).abs() < 1e-9);
    }
}
