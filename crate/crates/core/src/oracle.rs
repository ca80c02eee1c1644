//! Exhaustive reference computations.
//!
//! Nothing here calls into the enumeration code of [`crate::order`]; every
//! function searches a larger space directly (relation matrices, arbitrary maps,
//! arbitrary subsets) and filters by the defining conditions. Tests and the
//! acceptance runner compare the main code paths against these.

use std::collections::BTreeSet;

/// Rank vectors of all linear preorders on `0..n`, found by enumerating every
/// total relation matrix and keeping the transitive ones.
pub fn preorders_by_relation_matrix(n: usize) -> BTreeSet<Vec<usize>> {
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = BTreeSet::new();
    let total = 3usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut rel = vec![vec![false; n]; n];
        for (i, row) in rel.iter_mut().enumerate() {
            row[i] = true;
        }
        let mut c = code;
        for &(i, j) in &pairs {
            match c % 3 {
                0 => rel[i][j] = true,
                1 => rel[j][i] = true,
                _ => {
                    rel[i][j] = true;
                    rel[j][i] = true;
                }
            }
            c /= 3;
        }
        let transitive = (0..n).all(|i| {
            (0..n).all(|j| (0..n).all(|k| !(rel[i][j] && rel[j][k]) || rel[i][k]))
        });
        if !transitive {
            continue;
        }
        // rank(i) = number of distinct strict-below "levels"
        let rank: Vec<usize> = (0..n)
            .map(|i| {
                let below: BTreeSet<Vec<bool>> = (0..n)
                    .filter(|&j| rel[j][i] && !rel[i][j])
                    .map(|j| rel[j].clone())
                    .collect();
                below.len()
            })
            .collect();
        out.insert(rank);
    }
    out
}

/// Monotone surjections `[n] → [m]` between standard orders, by trying all `m^n` maps.
pub fn monotone_surjections(n: usize, m: usize) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    if m == 0 {
        return out;
    }
    let total = m.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let map: Vec<usize> = (0..n)
            .map(|_| {
                let d = c % m;
                c /= m;
                d
            })
            .collect();
        let monotone = map.windows(2).all(|w| w[0] <= w[1]);
        let hit: BTreeSet<usize> = map.iter().copied().collect();
        if monotone && hit.len() == m {
            out.insert(map);
        }
    }
    out
}

/// Convex equivalence relations on the standard order `[n]`, by taking the
/// kernel of every function `[n] → [n]` and keeping those with interval classes.
/// Each relation is returned as its sorted list of classes.
pub fn convex_equivalences(n: usize) -> BTreeSet<Vec<Vec<usize>>> {
    let mut out = BTreeSet::new();
    let total = n.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let f: Vec<usize> = (0..n)
            .map(|_| {
                let d = c % n;
                c /= n;
                d
            })
            .collect();
        let convex = (0..n).all(|i| {
            (i..n).all(|k| f[i] != f[k] || (i..=k).all(|j| f[j] == f[i]))
        });
        if convex {
            let mut classes: Vec<Vec<usize>> = Vec::new();
            for v in f.iter().collect::<BTreeSet<_>>() {
                classes.push((0..n).filter(|&i| f[i] == *v).collect());
            }
            classes.sort();
            out.insert(classes);
        }
    }
    out
}

/// Amalgams of the standard orders `[p]` and `[q]` as rank vectors on `p + q`
/// labels, filtering every preorder found by [`preorders_by_relation_matrix`].
pub fn amalgams(p: usize, q: usize) -> BTreeSet<Vec<usize>> {
    preorders_by_relation_matrix(p + q)
        .into_iter()
        .filter(|rank| {
            let classes: BTreeSet<usize> = rank.iter().copied().collect();
            let left_ok = (1..p).all(|a| rank[a - 1] <= rank[a])
                && rank[..p].iter().collect::<BTreeSet<_>>().len() == classes.len();
            let right_ok = (p + 1..p + q).all(|b| rank[b - 1] <= rank[b])
                && rank[p..].iter().collect::<BTreeSet<_>>().len() == classes.len();
            left_ok && right_ok
        })
        .collect()
}

/// Relation-level join of two preorders given as rank vectors: the least
/// preorder containing both, found by searching all preorders on `n` labels.
pub fn least_common_coarsening(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let n = a.len();
    let contains = |big: &[usize], small: &[usize]| {
        (0..n).all(|i| (0..n).all(|j| small[i] > small[j] || big[i] <= big[j]))
    };
    let uppers: Vec<Vec<usize>> = preorders_by_relation_matrix(n)
        .into_iter()
        .filter(|c| contains(c, a) && contains(c, b))
        .collect();
    uppers
        .iter()
        .find(|c| uppers.iter().all(|d| contains(d, c)))
        .cloned()
}

/// Decompositions `I = I₀ ⊔ I₁` of `[n]` with both parts nonempty, `I₀`
/// downward closed and both parts unions of classes of the relation given by
/// `class_of`, by trying every subset of `[n]`.
pub fn day_decompositions(class_of: &[usize]) -> Vec<BTreeSet<usize>> {
    let n = class_of.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) - 1 {
        let part: BTreeSet<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let down = part.iter().all(|&i| (0..i).all(|j| part.contains(&j)));
        let invariant = (0..n).all(|i| {
            (0..n).all(|j| class_of[i] != class_of[j] || part.contains(&i) == part.contains(&j))
        });
        if down && invariant {
            out.push(part);
        }
    }
    out
}

/// Ordered decompositions of `[n]` into `parts` consecutive nonempty blocks
/// compatible with `class_of`, by trying every assignment of labels to blocks.
pub fn day_decompositions_into(class_of: &[usize], parts: usize) -> usize {
    let n = class_of.len();
    let total = parts.pow(n as u32);
    (0..total)
        .filter(|&code| {
            let mut c = code;
            let block: Vec<usize> = (0..n)
                .map(|_| {
                    let d = c % parts;
                    c /= parts;
                    d
                })
                .collect();
            let monotone = block.windows(2).all(|w| w[0] <= w[1]);
            let all_used = (0..parts).all(|b| block.contains(&b));
            let invariant = (0..n)
                .all(|i| (0..n).all(|j| class_of[i] != class_of[j] || block[i] == block[j]));
            monotone && all_used && invariant
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fubini_numbers() {
        let counts: Vec<usize> = (1..=4).map(|n| preorders_by_relation_matrix(n).len()).collect();
        assert_eq!(counts, vec![1, 3, 13, 75]);
    }

    #[test]
    fn small_surjection_counts() {
        assert_eq!(monotone_surjections(3, 2).len(), 2);
        assert_eq!(monotone_surjections(2, 3).len(), 0);
        assert_eq!(monotone_surjections(4, 4).len(), 1);
    }

    #[test]
    fn convex_counts() {
        assert_eq!(convex_equivalences(3).len(), 4);
        assert_eq!(convex_equivalences(1).len(), 1);
    }

    #[test]
    fn point_amalgam() {
        let a = amalgams(1, 1);
        assert_eq!(a.into_iter().collect::<Vec<_>>(), vec![vec![0, 0]]);
    }

    #[test]
    fn decomposition_counts() {
        assert_eq!(day_decompositions(&[0, 1, 2]).len(), 2);
        assert_eq!(day_decompositions(&[0, 0, 0]).len(), 0);
        assert_eq!(day_decompositions(&[0]).len(), 0);
        assert_eq!(day_decompositions_into(&[0, 1, 2], 3), 1);
    }
}
