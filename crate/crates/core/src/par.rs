//! Small data-parallel helpers used by the batch operations.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without
//! it they run plain sequential loops. Results are bit-identical either
//! way: parallel maps preserve element order, and reductions that touch
//! floating point go through [`map_chunks`] with fixed chunk boundaries so
//! the combination order never depends on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential `map` over a slice, collecting in order.
pub fn map_collect_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Order-preserving `map` over a slice, parallel when the feature is on.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Order-preserving `map` over a slice, parallel when the feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    map_collect_seq(items, f)
}

/// Maps fixed-size chunks of `items` to partial results, in chunk order.
///
/// Callers fold the returned vector sequentially; because the chunk
/// boundaries are a function of `chunk_size` alone, the fold order (and
/// therefore any floating-point accumulation) is identical whether the
/// chunks were processed in parallel or not.
pub fn map_chunks_seq<T, U, F>(items: &[T], chunk_size: usize, f: F) -> Vec<U>
where
    F: Fn(&[T]) -> U,
{
    items.chunks(chunk_size.max(1)).map(f).collect()
}

/// Parallel counterpart of [`map_chunks_seq`] with the same chunking.
#[cfg(feature = "parallel")]
pub fn map_chunks<T, U, F>(items: &[T], chunk_size: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&[T]) -> U + Sync + Send,
{
    items.par_chunks(chunk_size.max(1)).map(f).collect()
}

/// Parallel counterpart of [`map_chunks_seq`] with the same chunking.
#[cfg(not(feature = "parallel"))]
pub fn map_chunks<T, U, F>(items: &[T], chunk_size: usize, f: F) -> Vec<U>
where
    F: Fn(&[T]) -> U,
{
    map_chunks_seq(items, chunk_size, f)
}
