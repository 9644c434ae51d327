//! Fixed-order compensated reductions.

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Compensated::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Rows per block. Block boundaries are fixed so the reduction tree does not
/// depend on how blocks are scheduled.
pub(crate) const BLOCK: usize = 64;

/// Evaluates `f` on every block `[start, end)` of `0..n` (possibly in
/// parallel) and sums the block results in block order.
pub(crate) fn blocked_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let eval = |b: usize| {
        let start = b * BLOCK;
        f(start, (start + BLOCK).min(n))
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = {
        use rayon::prelude::*;
        (0..blocks).into_par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = (0..blocks).map(eval).collect();
    sum(partials)
}

/// Map over `0..n` in order, possibly in parallel.
pub(crate) fn ordered_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
