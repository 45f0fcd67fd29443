//! Independent oracle: enumerate trees by leaf count.
//!
//! Works with full `(k+1)`-entry root profiles and never uses the allowance
//! encoding of the main engine. A profile first reached at `n` leaves is kept
//! unless an already kept profile is componentwise smaller and no larger in
//! size; replacing a subtree by such a profile keeps every cap satisfied.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BruteForce {
    pub exists: bool,
    /// Leaf count of a smallest (k,d)-tree when one exists.
    pub min_size: Option<u64>,
    /// Largest leaf count examined.
    pub explored: u64,
}

fn dominated(p: &[u32], kept: &[Vec<u32>]) -> bool {
    kept.iter().any(|q| q.iter().zip(p).all(|(a, b)| a <= b))
}

/// Decides whether a (k,d)-tree with at most `max_leaves` leaves exists and
/// returns the smallest size. Non-existence is certified once no new profile
/// can appear: every new profile at size `n` is a join of kept profiles whose
/// sizes sum to `n`, so nothing appears beyond twice the largest kept size.
pub fn brute_force_trees(k: usize, d: u64, max_leaves: u64) -> Result<BruteForce> {
    if k == 0 || d == 0 {
        return Err(Error::InvalidParams("need k >= 1 and d >= 1".into()));
    }
    let d32 = u32::try_from(d).map_err(|_| Error::InvalidParams("d too large".into()))?;
    // kept profiles grouped by first size; index 0 unused
    let mut by_size: Vec<Vec<Vec<u32>>> = vec![Vec::new(), Vec::new()];
    let mut leaf = vec![0u32; k + 1];
    leaf[0] = 1;
    by_size[1].push(leaf);
    let mut all_kept: Vec<Vec<u32>> = by_size[1].clone();
    let mut largest_kept = 1u64;
    let is_kd_tree = |p: &[u32]| p[..k].iter().all(|&x| x == 0);

    let mut n = 2u64;
    loop {
        if n > 2 * largest_kept {
            return Ok(BruteForce {
                exists: false,
                min_size: None,
                explored: n - 1,
            });
        }
        if n > max_leaves {
            return Err(Error::Inconclusive(format!(
                "no (k,d)-tree with at most {max_leaves} leaves for k = {k}, d = {d}"
            )));
        }
        let mut fresh: BTreeSet<Vec<u32>> = BTreeSet::new();
        for a in 1..=n / 2 {
            let b = n - a;
            let (Some(left), Some(right)) = (by_size.get(a as usize), by_size.get(b as usize)) else {
                continue;
            };
            for p in left {
                for q in right {
                    let mut w = vec![0u32; k + 1];
                    let mut total = 0u32;
                    for j in 0..k {
                        w[j + 1] = p[j] + q[j];
                        total += w[j + 1];
                    }
                    if total <= d32 {
                        fresh.insert(w);
                    }
                }
            }
        }
        // smaller sums first so they can prune their supersets
        let mut fresh: Vec<Vec<u32>> = fresh.into_iter().collect();
        fresh.sort_by_key(|p| p.iter().sum::<u32>());
        let mut kept_now = Vec::new();
        for p in fresh {
            if dominated(&p, &all_kept) || dominated(&p, &kept_now) {
                continue;
            }
            kept_now.push(p);
        }
        if let Some(p) = kept_now.iter().find(|p| is_kd_tree(p)) {
            let _ = p;
            return Ok(BruteForce {
                exists: true,
                min_size: Some(n),
                explored: n,
            });
        }
        if !kept_now.is_empty() {
            largest_kept = n;
            all_kept.extend(kept_now.iter().cloned());
        }
        if by_size.len() <= n as usize {
            by_size.resize(n as usize + 1, Vec::new());
        }
        by_size[n as usize] = kept_now;
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_depth_two() {
        let r = brute_force_trees(2, 4, 64).unwrap();
        assert!(r.exists);
        assert_eq!(r.min_size, Some(4));
    }

    #[test]
    fn caterpillars_for_k2() {
        assert!(!brute_force_trees(2, 2, 1 << 10).unwrap().exists);
        assert!(brute_force_trees(2, 3, 1 << 10).unwrap().exists);
    }

    #[test]
    fn k3_d3_has_no_tree() {
        let r = brute_force_trees(3, 3, 1 << 12).unwrap();
        assert!(!r.exists);
    }

    #[test]
    fn cap_makes_it_inconclusive() {
        // the smallest (2,4)-tree has 4 leaves
        assert!(matches!(brute_force_trees(2, 4, 3), Err(Error::Inconclusive(_))));
    }
}
