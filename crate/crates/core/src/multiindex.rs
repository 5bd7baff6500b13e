use std::fmt;

/// Ordered tuple of coordinate indices, each in `1..=N`.
///
/// The empty multiindex is allowed and has length zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(entries: Vec<u8>) -> Self {
        debug_assert!(entries.iter().all(|&e| e >= 1), "coordinates are 1-based");
        MultiIndex(entries)
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    /// `len` copies of coordinate `coord`.
    pub fn repeat(coord: u8, len: usize) -> Self {
        MultiIndex(vec![coord; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    /// Sorted copy. Constant-coefficient derivatives commute, so this is the
    /// canonical key for `∂_α`.
    pub fn canonical(&self) -> MultiIndex {
        let mut v = self.0.clone();
        v.sort_unstable();
        MultiIndex(v)
    }

    pub fn max_coord(&self) -> u8 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Occurrence count of each coordinate `1..=dim`.
    pub fn counts(&self, dim: usize) -> Vec<usize> {
        let mut c = vec![0; dim];
        for &e in &self.0 {
            c[(e - 1) as usize] += 1;
        }
        c
    }

    /// Inverse of [`counts`](Self::counts): the sorted multiindex with the given occurrences.
    pub fn from_counts(counts: &[usize]) -> MultiIndex {
        let mut v = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            v.extend(std::iter::repeat_n(i as u8 + 1, c));
        }
        MultiIndex(v)
    }

    pub fn slice(&self, lo: usize, hi: usize) -> MultiIndex {
        MultiIndex(self.0[lo..hi].to_vec())
    }

    /// Every multiindex of length `len` over `1..=dim`, in lexicographic order.
    pub fn all(dim: usize, len: usize) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::empty()];
        for _ in 0..len {
            let mut next = Vec::with_capacity(out.len() * dim);
            for m in &out {
                for c in 1..=dim as u8 {
                    let mut v = m.0.clone();
                    v.push(c);
                    next.push(MultiIndex(v));
                }
            }
            out = next;
        }
        out
    }

    /// Every sorted multiindex of length `len` over `1..=dim`.
    pub fn all_sorted(dim: usize, len: usize) -> Vec<MultiIndex> {
        fn rec(dim: u8, len: usize, start: u8, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
            if cur.len() == len {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for c in start..=dim {
                cur.push(c);
                rec(dim, len, c, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(dim as u8, len, 1, &mut Vec::with_capacity(len), &mut out);
        out
    }
}

impl From<Vec<u8>> for MultiIndex {
    fn from(v: Vec<u8>) -> Self {
        MultiIndex::new(v)
    }
}

impl<const K: usize> From<[u8; K]> for MultiIndex {
    fn from(v: [u8; K]) -> Self {
        MultiIndex::new(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Pairing indicator: 1 iff `|β|` is even and `β_{2j-1} = β_{2j}` for all `j`.
/// The empty multiindex pairs trivially.
pub fn theta(beta: &MultiIndex) -> u8 {
    let e = beta.entries();
    if e.len() % 2 != 0 {
        return 0;
    }
    e.chunks(2).all(|p| p[0] == p[1]) as u8
}

/// All contiguous prefix/suffix splits `(α, β)` with `(α, β) = γ`.
pub fn splits2(gamma: &MultiIndex) -> Vec<(MultiIndex, MultiIndex)> {
    (0..=gamma.len())
        .map(|k| (gamma.slice(0, k), gamma.slice(k, gamma.len())))
        .collect()
}

/// Multiindices `β` of length `2ℓ` with `θ_β = 1`, i.e. `(j₁,j₁,…,j_ℓ,j_ℓ)`.
pub fn paired_indices(dim: usize, pairs: usize) -> Vec<MultiIndex> {
    MultiIndex::all(dim, pairs)
        .into_iter()
        .map(|m| MultiIndex(m.0.iter().flat_map(|&c| [c, c]).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn theta_examples() {
        assert_eq!(theta(&MultiIndex::from([1, 1])), 1);
        assert_eq!(theta(&MultiIndex::from([1, 2])), 0);
        assert_eq!(theta(&MultiIndex::empty()), 1);
        assert_eq!(theta(&MultiIndex::from([1, 1, 2])), 0);
        assert_eq!(theta(&MultiIndex::from([2, 2, 1, 1])), 1);
    }

    #[test]
    fn splits_examples() {
        let s = splits2(&MultiIndex::from([1, 2]));
        assert_eq!(
            s,
            vec![
                (MultiIndex::empty(), MultiIndex::from([1, 2])),
                (MultiIndex::from([1]), MultiIndex::from([2])),
                (MultiIndex::from([1, 2]), MultiIndex::empty()),
            ]
        );
        assert_eq!(splits2(&MultiIndex::empty()), vec![(MultiIndex::empty(), MultiIndex::empty())]);
        assert_eq!(splits2(&MultiIndex::from([1, 1, 1])).len(), 4);
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(MultiIndex::all(2, 3).len(), 8);
        assert_eq!(MultiIndex::all_sorted(2, 3).len(), 4);
        assert_eq!(MultiIndex::all_sorted(3, 9).len(), 55);
        assert_eq!(paired_indices(2, 2).len(), 4);
        assert!(paired_indices(3, 2).iter().all(|b| theta(b) == 1));
    }

    fn arb_index() -> impl Strategy<Value = MultiIndex> {
        prop::collection::vec(1u8..=3, 0..8).prop_map(MultiIndex::new)
    }

    proptest! {
        #[test]
        fn concat_is_associative(a in arb_index(), b in arb_index(), c in arb_index()) {
            prop_assert_eq!(a.concat(&b).concat(&c), a.concat(&b.concat(&c)));
            prop_assert_eq!(a.concat(&b).len(), a.len() + b.len());
        }

        #[test]
        fn theta_properties(pairs in prop::collection::vec((1u8..=3, 1u8..=3), 0..5), swap in 0usize..5) {
            let flat: Vec<u8> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
            let b = MultiIndex::new(flat.clone());
            if theta(&b) == 1 {
                prop_assert_eq!(b.len() % 2, 0);
            }
            let mut swapped = flat;
            if swap < pairs.len() {
                swapped.swap(2 * swap, 2 * swap + 1);
            }
            prop_assert_eq!(theta(&b), theta(&MultiIndex::new(swapped)));
        }

        #[test]
        fn counts_roundtrip(a in arb_index()) {
            prop_assert_eq!(MultiIndex::from_counts(&a.counts(3)), a.canonical());
        }
    }
}
