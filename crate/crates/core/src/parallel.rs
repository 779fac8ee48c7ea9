//! Order-preserving parallel map over samples.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Applies `worker` to every item on `workers` threads. Results keep input
/// order and match a sequential run; the lowest failing index is reported.
pub fn parallel_map<I, R, F>(items: &[I], workers: usize, worker: F) -> Result<Vec<R>>
where
    I: Sync,
    R: Send,
    F: Fn(usize, &I) -> Result<R> + Sync + Send,
{
    let tag = |index: usize, e: Error| Error::Sample {
        index,
        source: Box::new(e),
    };
    if workers <= 1 || items.len() <= 1 {
        return items
            .iter()
            .enumerate()
            .map(|(i, item)| worker(i, item).map_err(|e| tag(i, e)))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<R>> = pool.install(|| {
        items
            .par_iter()
            .enumerate()
            .map(|(i, item)| worker(i, item))
            .collect()
    });
    outcomes
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| tag(i, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_sequential_order() {
        let items: Vec<u64> = (0..37).collect();
        let seq = parallel_map(&items, 1, |i, v| Ok(v * v + i as u64)).unwrap();
        let par = parallel_map(&items, 4, |i, v| Ok(v * v + i as u64)).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn failure_cites_index() {
        let items: Vec<usize> = (0..10).collect();
        for workers in [1, 4] {
            let err = parallel_map(&items, workers, |i, _| {
                if i == 5 || i == 8 {
                    Err(Error::InvalidValue("boom".into()))
                } else {
                    Ok(i)
                }
            })
            .unwrap_err();
            assert!(matches!(err, Error::Sample { index: 5, .. }));
            assert!(err.to_string().contains("sample 5"));
        }
    }

    #[test]
    fn empty_input() {
        let items: Vec<u8> = vec![];
        assert!(parallel_map(&items, 4, |_, _| Ok(1)).unwrap().is_empty());
    }
}
