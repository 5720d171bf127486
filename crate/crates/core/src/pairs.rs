/// Canonical numbering of unordered field pairs `{f, g}`, `f ≠ g`.
///
/// Pairs are ordered ascending by `(min(f, g), max(f, g))`, so for `n = 3`
/// the indices are `{0,1} → 0`, `{0,2} → 1`, `{1,2} → 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldPairIndex {
    n: usize,
}

impl FieldPairIndex {
    pub fn new(n: usize) -> Self {
        FieldPairIndex { n }
    }

    pub fn n_fields(&self) -> usize {
        self.n
    }

    /// `n(n−1)/2`.
    pub fn len(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of `{f, g}`; `None` when `f == g` or either is out of range.
    pub fn index(&self, f: usize, g: usize) -> Option<usize> {
        if f == g || f >= self.n || g >= self.n {
            return None;
        }
        let (lo, hi) = if f < g { (f, g) } else { (g, f) };
        Some(lo * (2 * self.n - lo - 1) / 2 + (hi - lo - 1))
    }

    /// The pair `(f, g)` with `f < g` at canonical index `p`.
    pub fn pair(&self, p: usize) -> Option<(usize, usize)> {
        if p >= self.len() {
            return None;
        }
        let mut rest = p;
        for f in 0..self.n {
            let row = self.n - f - 1;
            if rest < row {
                return Some((f, f + 1 + rest));
            }
            rest -= row;
        }
        unreachable!("p < len() always lands in a row")
    }

    /// All pairs `(p, f, g)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n)
            .flat_map(move |f| (f + 1..self.n).map(move |g| (f, g)))
            .enumerate()
            .map(|(p, (f, g))| (p, f, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_cases() {
        let idx = FieldPairIndex::new(3);
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.index(0, 1), Some(0));
        assert_eq!(idx.index(2, 0), Some(1));
        assert_eq!(idx.index(1, 2), Some(2));
        assert_eq!(idx.index(1, 1), None);
        assert_eq!(idx.index(0, 3), None);
        assert_eq!(FieldPairIndex::new(22).len(), 231);
        assert_eq!(FieldPairIndex::new(1).len(), 0);
    }

    proptest! {
        #[test]
        fn index_is_a_symmetric_bijection(n in 2usize..40) {
            let idx = FieldPairIndex::new(n);
            let mut seen = vec![false; idx.len()];
            for (p, f, g) in idx.iter() {
                prop_assert_eq!(idx.index(f, g), Some(p));
                prop_assert_eq!(idx.index(g, f), Some(p));
                prop_assert_eq!(idx.pair(p), Some((f, g)));
                prop_assert!(!seen[p]);
                seen[p] = true;
            }
            prop_assert!(seen.into_iter().all(|s| s));
        }
    }
}
