//! Dense ranking of the bounded lattice `{v in N^m : |v| <= d}`.

/// Bijection between vectors in `N^dims` with entry sum at most `bound`
/// and `0..len()`, in lexicographic order.
#[derive(Clone, Debug)]
pub(crate) struct Lattice {
    dims: usize,
    bound: usize,
    /// `offset[(i * (bound+1) + rem) * (bound+1) + v]`: how many vectors precede
    /// those with value `v` at position `i` given remaining budget `rem`.
    offset: Vec<u64>,
    len: usize,
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r.min(n));
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of vectors in `N^dims` with sum at most `bound`.
pub(crate) fn lattice_size(dims: usize, bound: usize) -> u128 {
    binomial(bound + dims, dims)
}

impl Lattice {
    pub(crate) fn new(dims: usize, bound: usize) -> Self {
        let b1 = bound + 1;
        // count[t][rem] = vectors of length t with sum <= rem
        let count = |t: usize, rem: usize| lattice_size(t, rem) as u64;
        let mut offset = vec![0u64; dims.max(1) * b1 * b1];
        for i in 0..dims {
            let tail = dims - i - 1;
            for rem in 0..=bound {
                let mut acc = 0u64;
                for v in 0..=rem {
                    offset[(i * b1 + rem) * b1 + v] = acc;
                    acc += count(tail, rem - v);
                }
            }
        }
        Lattice {
            dims,
            bound,
            offset,
            len: lattice_size(dims, bound) as usize,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub(crate) fn rank(&self, v: &[u8]) -> usize {
        debug_assert_eq!(v.len(), self.dims);
        let b1 = self.bound + 1;
        let mut rem = self.bound;
        let mut r = 0u64;
        for (i, &x) in v.iter().enumerate() {
            let x = x as usize;
            debug_assert!(x <= rem);
            r += self.offset[(i * b1 + rem) * b1 + x];
            rem -= x;
        }
        r as usize
    }

    /// Marks the up-closure of `v` in `marks`, stopping at already-marked
    /// vectors. Returns how many vectors were newly marked. Relies on the
    /// marked set being up-closed before the call.
    pub(crate) fn mark_up_closure(&self, v: &[u8], marks: &mut [bool], stack: &mut Vec<Vec<u8>>) -> usize {
        let start = self.rank(v);
        if marks[start] {
            return 0;
        }
        marks[start] = true;
        let mut newly = 1;
        stack.clear();
        stack.push(v.to_vec());
        while let Some(cur) = stack.pop() {
            let sum: usize = cur.iter().map(|&x| x as usize).sum();
            if sum >= self.bound {
                continue;
            }
            for i in 0..self.dims {
                let mut next = cur.clone();
                next[i] += 1;
                let r = self.rank(&next);
                if !marks[r] {
                    marks[r] = true;
                    newly += 1;
                    stack.push(next);
                }
            }
        }
        newly
    }

    /// All vectors in lexicographic order.
    pub(crate) fn iter(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        let mut cur: Option<Vec<u8>> = Some(vec![0u8; self.dims]);
        std::iter::from_fn(move || {
            let out = cur.take()?;
            // advance: increment the last position that still has budget,
            // zeroing everything after it
            let mut next = out.clone();
            let mut sum: usize = next.iter().map(|&x| x as usize).sum();
            let mut i = self.dims;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if sum < self.bound {
                    next[i] += 1;
                    cur = Some(next);
                    break;
                }
                sum -= next[i] as usize;
                next[i] = 0;
            }
            Some(out)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_is_lexicographic_bijection() {
        for dims in 1..=4 {
            for bound in 0..=5 {
                let lat = Lattice::new(dims, bound);
                let all: Vec<Vec<u8>> = lat.iter().collect();
                assert_eq!(all.len(), lat.len());
                for (i, v) in all.iter().enumerate() {
                    assert_eq!(lat.rank(v), i, "{v:?}");
                }
                let mut sorted = all.clone();
                sorted.sort();
                assert_eq!(sorted, all);
            }
        }
    }

    #[test]
    fn up_closure_counts() {
        let lat = Lattice::new(3, 4);
        let mut marks = vec![false; lat.len()];
        let mut stack = Vec::new();
        // vectors >= (1,1,0) with sum <= 4: shift by (1,1,0) leaves sum <= 2 in 3 dims
        assert_eq!(lat.mark_up_closure(&[1, 1, 0], &mut marks, &mut stack), 10);
        assert_eq!(lat.mark_up_closure(&[1, 1, 1], &mut marks, &mut stack), 0);
    }
}
