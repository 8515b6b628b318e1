//! Pairwise summation with a fixed reduction tree.
//!
//! The split points depend only on the index range, so the result is the same
//! whether the halves run sequentially or on different rayon workers.

const LEAF: usize = 32;
const PARALLEL_MIN: usize = 1 << 15;

/// Sums `term(j)` for `j` in `lo..hi`.
pub fn pairwise_sum<F>(lo: usize, hi: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let len = hi.saturating_sub(lo);
    if len <= LEAF {
        let mut s = 0.0;
        for j in lo..hi {
            s += term(j);
        }
        return s;
    }
    let mid = lo + len / 2;
    if len >= PARALLEL_MIN {
        let (a, b) = rayon::join(
            || pairwise_sum(lo, mid, term),
            || pairwise_sum(mid, hi, term),
        );
        a + b
    } else {
        pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term)
    }
}

/// Pairwise sum of a slice.
pub fn sum_slice(xs: &[f64]) -> f64 {
    pairwise_sum(0, xs.len(), &|j| xs[j])
}
