//! Finite linear preorders, linear orders, monotone maps, convex equivalence
//! relations and amalgams.
//!
//! Every structure lives on the canonical label set `0..n`. A preorder is a
//! rank vector whose image is an initial segment `0..k` of the naturals, so
//! two preorders are equal exactly when their rank vectors are. Lexicographic
//! order on rank vectors is the canonical enumeration order.

use std::collections::BTreeSet;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("a preorder needs at least one element")]
    Empty,
    #[error("rank image {0:?} is not an initial segment of the naturals")]
    RankGap(Vec<usize>),
    #[error("rank vector {0:?} is not injective, so it is not a linear order")]
    NotLinear(Vec<usize>),
    #[error("relation is not total at ({0}, {1})")]
    NotTotal(usize, usize),
    #[error("relation is not transitive at ({0}, {1}, {2})")]
    NotTransitive(usize, usize, usize),
    #[error("map has {got} entries but the source has {expected} elements")]
    MapLength { expected: usize, got: usize },
    #[error("map sends {0} outside the target")]
    OutOfRange(usize),
    #[error("map is decreasing on {0} <= {1}")]
    Decreasing(usize, usize),
    #[error("map misses the target class of rank {0}")]
    NotEssentiallySurjective(usize),
    #[error("morphisms do not compose: target and source differ")]
    NotComposable,
    #[error("equivalence class labels {0:?} do not match the base")]
    BadClasses(Vec<usize>),
    #[error("class of {0} and {2} does not contain {1}")]
    NotConvex(usize, usize, usize),
    #[error("amalgam preorder has {got} elements, expected {expected}")]
    AmalgamSize { expected: usize, got: usize },
    #[error("inclusion of the {0} factor is not nondecreasing")]
    AmalgamInclusion(&'static str),
    #[error("inclusion of the {0} factor is not essentially surjective")]
    AmalgamSurjectivity(&'static str),
    #[error("amalgams are over different factors")]
    AmalgamMismatch,
}

/// A linear preorder on `0..n`, stored as ranks: `i ≤ j` iff `rank[i] ≤ rank[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "PreorderJson", into = "PreorderJson")]
pub struct LinPreorder {
    rank: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PreorderJson {
    n: usize,
    rank: Vec<usize>,
}

impl TryFrom<PreorderJson> for LinPreorder {
    type Error = String;
    fn try_from(j: PreorderJson) -> Result<Self, String> {
        if j.n != j.rank.len() {
            return Err(format!("n = {} but rank has {} entries", j.n, j.rank.len()));
        }
        LinPreorder::new(j.rank).map_err(|e| e.to_string())
    }
}

impl From<LinPreorder> for PreorderJson {
    fn from(p: LinPreorder) -> Self {
        PreorderJson { n: p.len(), rank: p.rank }
    }
}

impl LinPreorder {
    pub fn new(rank: Vec<usize>) -> Result<Self, OrderError> {
        if rank.is_empty() {
            return Err(OrderError::Empty);
        }
        let image: BTreeSet<usize> = rank.iter().copied().collect();
        if image.iter().enumerate().any(|(k, &r)| k != r) {
            return Err(OrderError::RankGap(rank));
        }
        Ok(LinPreorder { rank })
    }

    /// All `n` elements equivalent.
    pub fn indiscrete(n: usize) -> Result<Self, OrderError> {
        LinPreorder::new(vec![0; n])
    }

    /// Builds a preorder from a relation matrix `rel[i][j] = (i ≤ j)`, checking
    /// totality and transitivity.
    pub fn from_relation(rel: &[Vec<bool>]) -> Result<Self, OrderError> {
        let n = rel.len();
        if n == 0 {
            return Err(OrderError::Empty);
        }
        for i in 0..n {
            for j in 0..n {
                if !rel[i][j] && !rel[j][i] {
                    return Err(OrderError::NotTotal(i, j));
                }
                for k in 0..n {
                    if rel[i][j] && rel[j][k] && !rel[i][k] {
                        return Err(OrderError::NotTransitive(i, j, k));
                    }
                }
            }
        }
        // rank = number of classes strictly below
        let mut below: Vec<BTreeSet<Vec<bool>>> = vec![BTreeSet::new(); n];
        for i in 0..n {
            for j in 0..n {
                if rel[j][i] && !rel[i][j] {
                    below[i].insert(rel[j].clone());
                }
            }
        }
        LinPreorder::new(below.iter().map(|b| b.len()).collect())
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    pub fn rank(&self, i: usize) -> usize {
        self.rank[i]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.rank[i] <= self.rank[j]
    }

    pub fn less(&self, i: usize, j: usize) -> bool {
        self.rank[i] < self.rank[j]
    }

    pub fn equiv(&self, i: usize, j: usize) -> bool {
        self.rank[i] == self.rank[j]
    }

    /// Number of `=`-classes.
    pub fn num_classes(&self) -> usize {
        self.rank.iter().max().map_or(0, |m| m + 1)
    }

    /// The `=`-classes in increasing order, labels ascending inside each class.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &r) in self.rank.iter().enumerate() {
            out[r].push(i);
        }
        out
    }

    /// Labels sorted by `(rank, label)`: the canonical nondecreasing listing.
    pub fn enumeration(&self) -> Vec<usize> {
        let mut e: Vec<usize> = (0..self.len()).collect();
        e.sort_by_key(|&i| (self.rank[i], i));
        e
    }

    pub fn is_linear(&self) -> bool {
        self.num_classes() == self.len()
    }

    pub fn relation_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.leq(i, j)).collect()).collect()
    }

    /// Disjoint union with every element of `self` below every element of `other`;
    /// `other`'s labels are shifted by `self.len()`.
    pub fn concat(&self, other: &LinPreorder) -> LinPreorder {
        let shift = self.num_classes();
        let mut rank = self.rank.clone();
        rank.extend(other.rank.iter().map(|r| r + shift));
        LinPreorder { rank }
    }

    /// `I → I/=_I` with its canonical projection.
    pub fn quotient(&self) -> (LinOrder, OrderMorphism) {
        let q = LinOrder::standard(self.num_classes());
        let proj = OrderMorphism {
            source: self.clone(),
            target: q.as_preorder().clone(),
            map: self.rank.clone(),
        };
        (q, proj)
    }
}

/// A linear order on `0..n`: a preorder with injective rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "LinPreorder", into = "LinPreorder")]
pub struct LinOrder(LinPreorder);

impl TryFrom<LinPreorder> for LinOrder {
    type Error = OrderError;
    fn try_from(p: LinPreorder) -> Result<Self, OrderError> {
        LinOrder::from_preorder(p)
    }
}

impl From<LinOrder> for LinPreorder {
    fn from(o: LinOrder) -> Self {
        o.0
    }
}

impl LinOrder {
    pub fn new(rank: Vec<usize>) -> Result<Self, OrderError> {
        LinOrder::from_preorder(LinPreorder::new(rank)?)
    }

    pub fn from_preorder(p: LinPreorder) -> Result<Self, OrderError> {
        if p.is_linear() {
            Ok(LinOrder(p))
        } else {
            Err(OrderError::NotLinear(p.rank))
        }
    }

    /// `0 < 1 < … < n−1`. Panics if `n == 0`.
    pub fn standard(n: usize) -> Self {
        assert!(n > 0, "orders are nonempty");
        LinOrder(LinPreorder { rank: (0..n).collect() })
    }

    pub fn as_preorder(&self) -> &LinPreorder {
        &self.0
    }

    /// Element in position `k` of the order.
    pub fn element_at(&self, k: usize) -> usize {
        self.0.rank.iter().position(|&r| r == k).expect("rank is a bijection")
    }

    pub fn is_standard(&self) -> bool {
        self.0.rank.iter().enumerate().all(|(i, &r)| i == r)
    }

    pub fn concat(&self, other: &LinOrder) -> LinOrder {
        LinOrder(self.0.concat(&other.0))
    }
}

impl Deref for LinOrder {
    type Target = LinPreorder;
    fn deref(&self) -> &LinPreorder {
        &self.0
    }
}

/// Concatenation `I ⋆ J`: `J` placed above `I`, its labels shifted by `|I|`.
pub fn concatenate_orders(i: &LinOrder, j: &LinOrder) -> LinOrder {
    i.concat(j)
}

/// A nondecreasing, essentially surjective map of preorders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderMorphism {
    source: LinPreorder,
    target: LinPreorder,
    map: Vec<usize>,
}

impl Serialize for OrderMorphism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct M<'a> {
            map: &'a [usize],
        }
        M { map: &self.map }.serialize(s)
    }
}

impl OrderMorphism {
    pub fn new(
        source: LinPreorder,
        target: LinPreorder,
        map: Vec<usize>,
    ) -> Result<Self, OrderError> {
        if map.len() != source.len() {
            return Err(OrderError::MapLength { expected: source.len(), got: map.len() });
        }
        if let Some(i) = (0..map.len()).find(|&i| map[i] >= target.len()) {
            return Err(OrderError::OutOfRange(i));
        }
        for i in 0..map.len() {
            for j in 0..map.len() {
                if source.leq(i, j) && !target.leq(map[i], map[j]) {
                    return Err(OrderError::Decreasing(i, j));
                }
            }
        }
        let hit: BTreeSet<usize> = map.iter().map(|&j| target.rank(j)).collect();
        if let Some(r) = (0..target.num_classes()).find(|r| !hit.contains(r)) {
            return Err(OrderError::NotEssentiallySurjective(r));
        }
        Ok(OrderMorphism { source, target, map })
    }

    pub fn identity(p: &LinPreorder) -> Self {
        OrderMorphism { source: p.clone(), target: p.clone(), map: (0..p.len()).collect() }
    }

    pub fn source(&self) -> &LinPreorder {
        &self.source
    }

    pub fn target(&self) -> &LinPreorder {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &OrderMorphism) -> Result<OrderMorphism, OrderError> {
        if self.target != next.source {
            return Err(OrderError::NotComposable);
        }
        Ok(OrderMorphism {
            source: self.source.clone(),
            target: next.target.clone(),
            map: self.map.iter().map(|&j| next.map[j]).collect(),
        })
    }

    pub fn is_surjective(&self) -> bool {
        let hit: BTreeSet<usize> = self.map.iter().copied().collect();
        hit.len() == self.target.len()
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target && self.map.iter().enumerate().all(|(i, &j)| i == j)
    }
}

/// All monotone surjections `I → J`, sorted by their map vectors.
pub fn enumerate_surjections(i: &LinOrder, j: &LinOrder) -> Vec<OrderMorphism> {
    let (n, m) = (i.len(), j.len());
    if n < m {
        return Vec::new();
    }
    // a monotone surjection is a choice of m−1 cut points among the n−1 gaps of I
    let mut out = Vec::new();
    for cuts in combinations(n - 1, m - 1) {
        let mut map = vec![0; n];
        let mut block = 0;
        for pos in 0..n {
            if pos > 0 && cuts.contains(&(pos - 1)) {
                block += 1;
            }
            map[i.element_at(pos)] = j.element_at(block);
        }
        out.push(
            OrderMorphism::new(i.as_preorder().clone(), j.as_preorder().clone(), map)
                .expect("cut-point construction yields a monotone surjection"),
        );
    }
    out.sort();
    out
}

/// `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            cur.push(x);
            go(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// All linear preorders on `0..n`, one rank vector each, in lexicographic order.
pub fn enumerate_linear_preorders(n: usize) -> Result<Vec<LinPreorder>, OrderError> {
    if n == 0 {
        return Err(OrderError::Empty);
    }
    let mut out = Vec::new();
    let mut rank = vec![0usize; n];
    loop {
        if let Ok(p) = LinPreorder::new(rank.clone()) {
            out.push(p);
        }
        // odometer over {0..n}^n, last digit fastest, which is lexicographic order
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            rank[k] += 1;
            if rank[k] < n {
                break;
            }
            rank[k] = 0;
        }
    }
}

/// An equivalence relation on a preorder whose classes are intervals.
///
/// Classes are numbered `0..k` in increasing order along the base.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConvexEquiv {
    base: LinPreorder,
    class_of: Vec<usize>,
}

impl ConvexEquiv {
    /// Accepts any labelling of the classes and renumbers it canonically.
    pub fn new(base: LinPreorder, labels: Vec<usize>) -> Result<Self, OrderError> {
        if labels.len() != base.len() {
            return Err(OrderError::BadClasses(labels));
        }
        let n = base.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if labels[i] == labels[k]
                        && base.leq(i, j)
                        && base.leq(j, k)
                        && labels[j] != labels[i]
                    {
                        return Err(OrderError::NotConvex(i, j, k));
                    }
                }
            }
        }
        let mut renumber = std::collections::BTreeMap::new();
        for &e in &base.enumeration() {
            let next = renumber.len();
            renumber.entry(labels[e]).or_insert(next);
        }
        let class_of = labels.iter().map(|l| renumber[l]).collect();
        Ok(ConvexEquiv { base, class_of })
    }

    pub fn discrete(base: &LinOrder) -> Self {
        ConvexEquiv { base: base.as_preorder().clone(), class_of: base.ranks().to_vec() }
    }

    pub fn indiscrete(base: &LinPreorder) -> Self {
        ConvexEquiv { base: base.clone(), class_of: vec![0; base.len()] }
    }

    /// Equivalence whose classes are the `=`-classes of the base.
    pub fn of_equalities(base: &LinPreorder) -> Self {
        ConvexEquiv { base: base.clone(), class_of: base.ranks().to_vec() }
    }

    pub fn base(&self) -> &LinPreorder {
        &self.base
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.class_of[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.class_of
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_of.iter().max().map_or(0, |m| m + 1)
    }

    pub fn same(&self, i: usize, j: usize) -> bool {
        self.class_of[i] == self.class_of[j]
    }

    pub fn is_discrete(&self) -> bool {
        self.num_classes() == self.len()
    }

    pub fn is_indiscrete(&self) -> bool {
        self.num_classes() == 1
    }

    /// `self ⊆ other` as relations.
    pub fn refines(&self, other: &ConvexEquiv) -> bool {
        self.base == other.base
            && (0..self.len())
                .all(|i| (0..self.len()).all(|j| !self.same(i, j) || other.same(i, j)))
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &c) in self.class_of.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// `I → I/E` as a morphism onto the standard order on the classes.
    pub fn quotient(&self) -> (LinOrder, OrderMorphism) {
        let q = LinOrder::standard(self.num_classes());
        let proj = OrderMorphism::new(self.base.clone(), q.as_preorder().clone(), self.class_of.clone())
            .expect("convex classes are ordered along the base");
        (q, proj)
    }

    /// Preimage `f⁻¹E` along a morphism into this relation's base.
    pub fn pullback(&self, f: &OrderMorphism) -> Result<ConvexEquiv, OrderError> {
        if f.target() != &self.base {
            return Err(OrderError::NotComposable);
        }
        ConvexEquiv::new(f.source().clone(), f.map().iter().map(|&j| self.class_of[j]).collect())
    }

    /// Restriction to the consecutive interval `[start, start+len)` of a standard order.
    pub fn restrict_interval(&self, start: usize, len: usize) -> ConvexEquiv {
        let labels = self.class_of[start..start + len].to_vec();
        ConvexEquiv::new(LinOrder::standard(len).as_preorder().clone(), labels)
            .expect("restriction of a convex relation is convex")
    }
}

/// The poset `Conv(I)` ordered by refinement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvPoset {
    pub elements: Vec<ConvexEquiv>,
    /// `le[a][b]` iff `elements[a] ⊆ elements[b]`.
    pub le: Vec<Vec<bool>>,
}

impl ConvPoset {
    pub fn index_of(&self, e: &ConvexEquiv) -> Option<usize> {
        self.elements.iter().position(|x| x == e)
    }

    pub fn bottom(&self) -> usize {
        self.elements.iter().position(|e| e.is_discrete()).expect("discrete relation is convex")
    }

    pub fn top(&self) -> usize {
        self.elements.iter().position(|e| e.is_indiscrete()).expect("indiscrete relation is convex")
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// All convex equivalence relations on `I` with the refinement order.
///
/// Brute force: every set partition (as a restricted growth string) filtered by convexity.
pub fn enumerate_convex_equivalences(i: &LinOrder) -> ConvPoset {
    let n = i.len();
    let mut elements = BTreeSet::new();
    let mut rgs = vec![0usize; n];
    loop {
        if let Ok(e) = ConvexEquiv::new(i.as_preorder().clone(), rgs.clone()) {
            elements.insert(e);
        }
        // next restricted growth string: rgs[k] ≤ 1 + max(rgs[..k])
        let mut k = n;
        let advanced = loop {
            if k <= 1 {
                break false;
            }
            k -= 1;
            let bound = rgs[..k].iter().max().copied().unwrap_or(0) + 1;
            if rgs[k] < bound {
                rgs[k] += 1;
                for x in rgs.iter_mut().skip(k + 1) {
                    *x = 0;
                }
                break true;
            }
        };
        if !advanced {
            break;
        }
    }
    let elements: Vec<ConvexEquiv> = elements.into_iter().collect();
    let le = elements
        .iter()
        .map(|a| elements.iter().map(|b| a.refines(b)).collect())
        .collect();
    ConvPoset { elements, le }
}

/// A preorder on `I ⊔ J` (labels of `J` shifted by `|I|`) restricting to the
/// given orders, with both inclusions essentially surjective.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Amalgam {
    left: LinOrder,
    right: LinOrder,
    preorder: LinPreorder,
}

impl Amalgam {
    pub fn new(left: LinOrder, right: LinOrder, preorder: LinPreorder) -> Result<Self, OrderError> {
        let (p, q) = (left.len(), right.len());
        if preorder.len() != p + q {
            return Err(OrderError::AmalgamSize { expected: p + q, got: preorder.len() });
        }
        let sides: [(&'static str, &LinOrder, usize); 2] = [("left", &left, 0), ("right", &right, p)];
        for (name, factor, offset) in sides {
            let n = factor.len();
            for a in 0..n {
                for b in 0..n {
                    if factor.leq(a, b) && !preorder.leq(a + offset, b + offset) {
                        return Err(OrderError::AmalgamInclusion(name));
                    }
                }
            }
            let hit: BTreeSet<usize> = (0..n).map(|a| preorder.rank(a + offset)).collect();
            if hit.len() != preorder.num_classes() {
                return Err(OrderError::AmalgamSurjectivity(name));
            }
        }
        Ok(Amalgam { left, right, preorder })
    }

    pub fn left(&self) -> &LinOrder {
        &self.left
    }

    pub fn right(&self) -> &LinOrder {
        &self.right
    }

    pub fn preorder(&self) -> &LinPreorder {
        &self.preorder
    }

    /// `self ≤ other`: the identity of `I ⊔ J` is nondecreasing from `self` to `other`.
    pub fn below(&self, other: &Amalgam) -> bool {
        let n = self.preorder.len();
        (0..n).all(|a| (0..n).all(|b| !self.preorder.leq(a, b) || other.preorder.leq(a, b)))
    }

    /// Least upper bound: the transitive closure of the union of the two relations.
    pub fn join(&self, other: &Amalgam) -> Result<Amalgam, OrderError> {
        if self.left != other.left || self.right != other.right {
            return Err(OrderError::AmalgamMismatch);
        }
        let n = self.preorder.len();
        let mut rel: Vec<Vec<bool>> = (0..n)
            .map(|a| (0..n).map(|b| self.preorder.leq(a, b) || other.preorder.leq(a, b)).collect())
            .collect();
        for k in 0..n {
            for a in 0..n {
                if rel[a][k] {
                    for b in 0..n {
                        if rel[k][b] {
                            rel[a][b] = true;
                        }
                    }
                }
            }
        }
        Amalgam::new(self.left.clone(), self.right.clone(), LinPreorder::from_relation(&rel)?)
    }
}

/// `Amal(I, J)` with its partial order.
#[derive(Debug, Clone)]
pub struct AmalgamPoset {
    pub elements: Vec<Amalgam>,
    pub le: Vec<Vec<bool>>,
}

impl AmalgamPoset {
    pub fn index_of(&self, k: &Amalgam) -> Option<usize> {
        self.elements.iter().position(|x| x == k)
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        let j = self.elements[a].join(&self.elements[b]).expect("same factors");
        self.index_of(&j).expect("join of amalgams is an amalgam")
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// All amalgams of two linear orders, sorted by rank vector.
///
/// An amalgam's class order `K/=_K` has `m` classes, each meeting both factors,
/// so amalgams correspond to pairs of monotone surjections `I → [m]`, `J → [m]`.
pub fn enumerate_amalgams(i: &LinOrder, j: &LinOrder) -> AmalgamPoset {
    let (p, q) = (i.len(), j.len());
    let mut elements = Vec::new();
    for m in 1..=p.min(q) {
        let target = LinOrder::standard(m);
        let fs = enumerate_surjections(i, &target);
        let gs = enumerate_surjections(j, &target);
        for f in &fs {
            for g in &gs {
                let mut rank = f.map().to_vec();
                rank.extend_from_slice(g.map());
                let pre = LinPreorder::new(rank).expect("both maps are surjective");
                elements.push(Amalgam::new(i.clone(), j.clone(), pre).expect("valid by construction"));
            }
        }
    }
    elements.sort_by(|a, b| a.preorder.cmp(&b.preorder));
    let le = elements.iter().map(|a| elements.iter().map(|b| a.below(b)).collect()).collect();
    AmalgamPoset { elements, le }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preorder_validation() {
        assert_eq!(LinPreorder::new(vec![]), Err(OrderError::Empty));
        assert!(matches!(LinPreorder::new(vec![0, 2]), Err(OrderError::RankGap(_))));
        let p = LinPreorder::new(vec![1, 0, 1]).unwrap();
        assert!(p.leq(1, 0) && p.equiv(0, 2) && !p.is_linear());
        assert_eq!(p.classes(), vec![vec![1], vec![0, 2]]);
        assert_eq!(p.enumeration(), vec![1, 0, 2]);
    }

    #[test]
    fn small_preorder_counts() {
        assert_eq!(enumerate_linear_preorders(1).unwrap().len(), 1);
        let two: Vec<Vec<usize>> = enumerate_linear_preorders(2)
            .unwrap()
            .into_iter()
            .map(|p| p.ranks().to_vec())
            .collect();
        assert_eq!(two, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(enumerate_linear_preorders(0), Err(OrderError::Empty));
    }

    #[test]
    fn quotient_examples() {
        let (q, f) = LinPreorder::new(vec![0, 0]).unwrap().quotient();
        assert_eq!(q.len(), 1);
        assert_eq!(f.map(), &[0, 0]);
        let (q, f) = LinPreorder::new(vec![0, 0, 1]).unwrap().quotient();
        assert_eq!(q.len(), 2);
        assert_eq!(f.map(), &[0, 0, 1]);
        let o = LinOrder::new(vec![2, 0, 1]).unwrap();
        let (q, f) = o.quotient();
        assert_eq!(q.len(), 3);
        assert_eq!(f.map(), o.ranks());
    }

    #[test]
    fn surjection_examples() {
        let i3 = LinOrder::standard(3);
        let ids = enumerate_surjections(&i3, &i3);
        assert_eq!(ids.len(), 1);
        assert!(ids[0].is_identity());
        let maps: Vec<Vec<usize>> = enumerate_surjections(&i3, &LinOrder::standard(2))
            .iter()
            .map(|f| f.map().to_vec())
            .collect();
        assert_eq!(maps, vec![vec![0, 0, 1], vec![0, 1, 1]]);
        assert!(enumerate_surjections(&LinOrder::standard(2), &i3).is_empty());
    }

    #[test]
    fn morphism_validation_and_composition() {
        let p = LinPreorder::new(vec![0, 1, 1]).unwrap();
        let two = LinOrder::standard(2);
        assert!(matches!(
            OrderMorphism::new(two.as_preorder().clone(), p.clone(), vec![1, 0]),
            Err(OrderError::Decreasing(0, 1))
        ));
        // hitting one element of the top class is enough
        let f = OrderMorphism::new(two.as_preorder().clone(), p.clone(), vec![0, 2]).unwrap();
        assert!(!f.is_surjective());
        let g = OrderMorphism::new(p.clone(), two.as_preorder().clone(), vec![0, 1, 1]).unwrap();
        assert!(f.then(&g).unwrap().is_identity());
        assert_eq!(g.then(&g), Err(OrderError::NotComposable));
    }

    #[test]
    fn convex_equivalences_on_three() {
        let poset = enumerate_convex_equivalences(&LinOrder::standard(3));
        assert_eq!(poset.len(), 4);
        let (b, t) = (poset.bottom(), poset.top());
        for k in 0..poset.len() {
            assert!(poset.le[b][k] && poset.le[k][t]);
        }
        assert!(matches!(
            ConvexEquiv::new(LinOrder::standard(3).as_preorder().clone(), vec![0, 1, 0]),
            Err(OrderError::NotConvex(..))
        ));
        assert_eq!(enumerate_convex_equivalences(&LinOrder::standard(1)).len(), 1);
    }

    #[test]
    fn amalgams_of_points() {
        let pt = LinOrder::standard(1);
        let poset = enumerate_amalgams(&pt, &pt);
        assert_eq!(poset.len(), 1);
        assert_eq!(poset.elements[0].preorder().ranks(), &[0, 0]);
        let k = &poset.elements[0];
        assert_eq!(&k.join(k).unwrap(), k);
    }

    #[test]
    fn amalgam_rejects_bad_inclusions() {
        let two = LinOrder::standard(2);
        let pt = LinOrder::standard(1);
        // right factor misses the upper class
        let pre = LinPreorder::new(vec![0, 1, 0]).unwrap();
        assert_eq!(
            Amalgam::new(two.clone(), pt.clone(), pre),
            Err(OrderError::AmalgamSurjectivity("right"))
        );
        let pre = LinPreorder::new(vec![1, 0, 0]).unwrap();
        assert_eq!(Amalgam::new(two, pt, pre), Err(OrderError::AmalgamInclusion("left")));
    }

    #[test]
    fn concatenation() {
        let ab = concatenate_orders(&LinOrder::standard(1), &LinOrder::standard(1));
        assert!(ab.less(0, 1));
        let c = concatenate_orders(&LinOrder::standard(2), &LinOrder::standard(3));
        assert_eq!(c.ranks(), &[0, 1, 2, 3, 4]);
        let (i, j, k) = (LinOrder::new(vec![1, 0]).unwrap(), LinOrder::standard(1), LinOrder::standard(2));
        assert_eq!(i.concat(&j).concat(&k), i.concat(&j.concat(&k)));
    }

    #[test]
    fn json_schema() {
        let p = LinPreorder::new(vec![1, 0, 1]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":3,"rank":[1,0,1]}"#);
        assert_eq!(serde_json::from_str::<LinPreorder>(&s).unwrap(), p);
        assert!(serde_json::from_str::<LinPreorder>(r#"{"n":2,"rank":[0,2]}"#).is_err());
        let f = OrderMorphism::identity(&p);
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"map":[0,1,2]}"#);
    }
}
