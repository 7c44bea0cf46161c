//! Binary indexed tree over `0..n` with order-statistic lookup.

#[derive(Clone, Debug)]
pub(crate) struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    pub(crate) fn new(n: usize) -> Self {
        Fenwick { tree: vec![0; n + 1] }
    }

    /// All positions start at one; built in O(n).
    pub(crate) fn filled(n: usize) -> Self {
        let mut tree = vec![0i64; n + 1];
        for i in 1..=n {
            tree[i] += 1;
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Fenwick { tree }
    }

    pub(crate) fn add(&mut self, index: usize, delta: i64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `0..=index`.
    pub(crate) fn prefix(&self, index: usize) -> i64 {
        let mut i = index + 1;
        let mut acc = 0;
        while i > 0 {
            acc += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        acc
    }

    /// Smallest index whose prefix sum reaches `k` (k >= 1). Entries must be
    /// nonnegative.
    pub(crate) fn find_kth(&self, k: i64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0usize;
        let mut remaining = k;
        let mut step = if n == 0 { 0 } else { 1usize << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] < remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
