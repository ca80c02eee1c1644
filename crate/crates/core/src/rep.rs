//! Points of `Rep(I, BR⁺)`: additive cocycles on the comparable pairs of a
//! linear preorder with values in `(−∞, ∞]`, together with their charts,
//! strata and the membership predicates for `U_E`, `K_E` and `Φ(I, ≃)`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ext::{q, Ext};
use crate::order::{ConvexEquiv, LinOrder, LinPreorder, OrderError, OrderMorphism};

/// First failure found by [`RepPoint::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepViolation {
    #[error("no value on the comparable pair ({0}, {1})")]
    Missing(usize, usize),
    #[error("value on the non-comparable pair ({0}, {1})")]
    Unexpected(usize, usize),
    #[error("value −∞ on ({0}, {1})")]
    NegativeInfinity(usize, usize),
    #[error("α({0}, {0}) is not 0")]
    Diagonal(usize),
    #[error("α({0}, {1}) is infinite although {0} and {1} are equivalent")]
    InfiniteWithinClass(usize, usize),
    #[error("cocycle law fails on ({0}, {1}, {2})")]
    Cocycle(usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepError {
    #[error("expected {expected} gaps, got {got}")]
    GapCount { expected: usize, got: usize },
    #[error("gap {0} is −∞")]
    NegativeGap(usize),
    #[error("gap {0} joins equivalent elements and must be finite")]
    InfiniteGapWithinClass(usize),
    #[error("invalid point: {0}")]
    Invalid(#[from] RepViolation),
    #[error("enumeration {0:?} is not a nondecreasing listing of the base")]
    BadEnumeration(Vec<usize>),
    #[error("objects live over different bases")]
    BaseMismatch,
    #[error(transparent)]
    Order(#[from] OrderError),
}

/// A point `α ∈ Rep(I, BR⁺)` stored as its full table on comparable pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RepPoint {
    base: LinPreorder,
    table: Vec<Vec<Option<Ext>>>,
}

/// Coordinates of a point in the chart attached to a nondecreasing listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    pub coords: Vec<Ext>,
    /// Slot `m` must be finite because listing entries `m` and `m+1` are equivalent.
    pub finite_forced: Vec<bool>,
}

impl Chart {
    pub fn finite_count(&self) -> usize {
        self.coords.iter().filter(|c| c.is_finite()).count()
    }
}

fn sum_gaps(gaps: &[Ext]) -> Ext {
    gaps.iter().fold(Ext::zero(), |acc, g| acc.checked_add(g).expect("gaps are never −∞"))
}

impl RepPoint {
    /// The point on `[n] = {0 < … < n}` whose consecutive gaps are `gaps`.
    pub fn from_gaps(gaps: Vec<Ext>) -> Result<Self, RepError> {
        let base = LinOrder::standard(gaps.len() + 1);
        RepPoint::from_gaps_on(base.as_preorder().clone(), gaps)
    }

    /// Point on `base` from its gaps along the canonical enumeration:
    /// `gaps[m] = α(e_m, e_{m+1})`.
    pub fn from_gaps_on(base: LinPreorder, gaps: Vec<Ext>) -> Result<Self, RepError> {
        let n = base.len();
        if gaps.len() + 1 != n {
            return Err(RepError::GapCount { expected: n - 1, got: gaps.len() });
        }
        let e = base.enumeration();
        for (m, g) in gaps.iter().enumerate() {
            if *g == Ext::NegInf {
                return Err(RepError::NegativeGap(m));
            }
            if base.equiv(e[m], e[m + 1]) && !g.is_finite() {
                return Err(RepError::InfiniteGapWithinClass(m));
            }
        }
        let mut pos = vec![0; n];
        for (k, &i) in e.iter().enumerate() {
            pos[i] = k;
        }
        let mut table = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                if !base.leq(i, j) {
                    continue;
                }
                let (a, b) = (pos[i], pos[j]);
                table[i][j] = Some(if a <= b {
                    sum_gaps(&gaps[a..b])
                } else {
                    // equal rank, listed in the other order: the segment is finite
                    -sum_gaps(&gaps[b..a])
                });
            }
        }
        Ok(RepPoint { base, table })
    }

    /// Unchecked table; `table[i][j]` should be `Some` exactly when `i ≤ j`.
    pub fn from_table(base: LinPreorder, table: Vec<Vec<Option<Ext>>>) -> Self {
        RepPoint { base, table }
    }

    /// The unique point over a one-element order.
    pub fn point() -> Self {
        RepPoint::from_gaps(Vec::new()).expect("no gaps")
    }

    pub fn base(&self) -> &LinPreorder {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn alpha(&self, i: usize, j: usize) -> Option<&Ext> {
        self.table[i][j].as_ref()
    }

    /// `α(i, j)` for a comparable pair. Panics if `i ≰ j`.
    pub fn at(&self, i: usize, j: usize) -> &Ext {
        self.alpha(i, j).expect("pair is comparable")
    }

    /// Gaps along the canonical enumeration.
    pub fn gaps(&self) -> Vec<Ext> {
        let e = self.base.enumeration();
        e.windows(2).map(|w| self.at(w[0], w[1]).clone()).collect()
    }

    pub fn validate(&self) -> Result<(), RepViolation> {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                match (&self.table[i][j], self.base.leq(i, j)) {
                    (None, true) => return Err(RepViolation::Missing(i, j)),
                    (Some(_), false) => return Err(RepViolation::Unexpected(i, j)),
                    (Some(Ext::NegInf), _) => return Err(RepViolation::NegativeInfinity(i, j)),
                    _ => {}
                }
            }
        }
        if let Some(i) = (0..n).find(|&i| self.at(i, i) != &Ext::zero()) {
            return Err(RepViolation::Diagonal(i));
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && self.base.equiv(i, j) && !self.at(i, j).is_finite() {
                    return Err(RepViolation::InfiniteWithinClass(i, j));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if !self.base.leq(i, j) {
                    continue;
                }
                for k in 0..n {
                    if !self.base.leq(j, k) {
                        continue;
                    }
                    let sum = self.at(i, j).checked_add(self.at(j, k)).expect("no −∞ entries");
                    if &sum != self.at(i, k) {
                        return Err(RepViolation::Cocycle(i, j, k));
                    }
                }
            }
        }
        Ok(())
    }

    /// `E(α)`: `i ~ j` iff the distance between them is finite.
    pub fn stratum_of(&self) -> Result<ConvexEquiv, RepError> {
        self.validate()?;
        let n = self.len();
        let mut label: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for j in 0..n {
                if self.base.leq(i, j) && self.at(i, j).is_finite() {
                    let (a, b) = (label[i], label[j]);
                    for l in label.iter_mut() {
                        if *l == b {
                            *l = a;
                        }
                    }
                }
            }
        }
        Ok(ConvexEquiv::new(self.base.clone(), label)?)
    }

    /// Membership in the stratum `K_E`.
    pub fn in_stratum(&self, e: &ConvexEquiv) -> Result<bool, RepError> {
        Ok(&self.stratum_of()? == e)
    }

    /// Membership in the open set `U_E`: finite distance on every `E`-related pair.
    pub fn in_open(&self, e: &ConvexEquiv) -> Result<bool, RepError> {
        if e.base() != &self.base {
            return Err(RepError::BaseMismatch);
        }
        Ok(e.refines(&self.stratum_of()?))
    }

    /// Membership in `Φ(I, ≃)`: finite distance only between `≃`-related elements.
    pub fn in_phi(&self, rel: &ConvexEquiv) -> Result<bool, RepError> {
        if rel.base() != &self.base {
            return Err(RepError::BaseMismatch);
        }
        Ok(self.stratum_of()?.refines(rel))
    }

    /// Consecutive distances along a nondecreasing listing of the base.
    pub fn chart_coordinates(&self, listing: &[usize]) -> Result<Chart, RepError> {
        let n = self.len();
        let mut seen = vec![false; n];
        let ok = listing.len() == n
            && listing.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
            && listing.windows(2).all(|w| self.base.leq(w[0], w[1]));
        if !ok {
            return Err(RepError::BadEnumeration(listing.to_vec()));
        }
        let coords = listing.windows(2).map(|w| self.at(w[0], w[1]).clone()).collect();
        let finite_forced = listing.windows(2).map(|w| self.base.leq(w[1], w[0])).collect();
        Ok(Chart { coords, finite_forced })
    }

    /// Precomposition with `f: I → J`, where `self` lives on `J`.
    pub fn pullback(&self, f: &OrderMorphism) -> Result<RepPoint, RepError> {
        if f.target() != &self.base {
            return Err(RepError::BaseMismatch);
        }
        let src = f.source();
        let n = src.len();
        let table = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| src.leq(i, k).then(|| self.at(f.apply(i), f.apply(k)).clone()))
                    .collect()
            })
            .collect();
        Ok(RepPoint { base: src.clone(), table })
    }

    /// The point on `I ⋆ J` restricting to `self` and `other`, with `∞` on cross pairs.
    pub fn glue(&self, other: &RepPoint) -> RepPoint {
        let base = self.base.concat(&other.base);
        let p = self.len();
        let n = base.len();
        let table = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if !base.leq(i, j) {
                            None
                        } else if i < p && j < p {
                            self.alpha(i, j).cloned()
                        } else if i >= p && j >= p {
                            other.alpha(i - p, j - p).cloned()
                        } else {
                            Some(Ext::PosInf)
                        }
                    })
                    .collect()
            })
            .collect();
        RepPoint { base, table }
    }
}

impl Serialize for RepPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RepPointJson { base: self.base.clone(), gaps: self.gaps() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RepPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = RepPointJson::deserialize(d)?;
        RepPoint::from_gaps_on(j.base, j.gaps).map_err(serde::de::Error::custom)
    }
}

/// JSON form: the base preorder and the gaps along its canonical enumeration.
#[derive(Serialize, Deserialize)]
struct RepPointJson {
    base: LinPreorder,
    gaps: Vec<Ext>,
}

/// The finite values used when sampling a stratum: `1/2, 1, 3/2, …, 5`.
pub fn sample_grid() -> Vec<Ext> {
    (1..=10).map(|k| Ext::Fin(q(k, 2))).collect()
}

/// A point of the stratum `K_E` with finite gaps drawn from [`sample_grid`].
///
/// `E` must contain the `=`-classes of the base (every stratum does).
pub fn sample_in_stratum<R: Rng>(e: &ConvexEquiv, rng: &mut R) -> RepPoint {
    let base = e.base().clone();
    let grid = sample_grid();
    let order = base.enumeration();
    let gaps = order
        .windows(2)
        .map(|w| {
            if e.same(w[0], w[1]) {
                grid.choose(rng).expect("grid is nonempty").clone()
            } else {
                Ext::PosInf
            }
        })
        .collect();
    RepPoint::from_gaps_on(base, gaps).expect("stratum contains the equalities of the base")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::qi;
    use crate::order::{enumerate_convex_equivalences, enumerate_surjections};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fin(n: i64) -> Ext {
        Ext::Fin(qi(n))
    }

    #[test]
    fn gaps_examples() {
        let pt = RepPoint::from_gaps(vec![]).unwrap();
        assert_eq!(pt.at(0, 0), &Ext::zero());
        let broken = RepPoint::from_gaps(vec![Ext::PosInf]).unwrap();
        assert_eq!(broken.at(0, 1), &Ext::PosInf);
        let a = RepPoint::from_gaps(vec![fin(1), fin(2)]).unwrap();
        assert_eq!(a.at(0, 2), &fin(3));
        assert!(a.validate().is_ok());
        assert_eq!(RepPoint::from_gaps(vec![Ext::NegInf]), Err(RepError::NegativeGap(0)));
    }

    #[test]
    fn validation_reports_cocycle() {
        let base = LinOrder::standard(3).as_preorder().clone();
        let mut t = vec![vec![None; 3]; 3];
        for i in 0..3 {
            t[i][i] = Some(Ext::zero());
        }
        t[0][1] = Some(fin(1));
        t[1][2] = Some(fin(1));
        t[0][2] = Some(fin(3));
        let a = RepPoint::from_table(base, t);
        assert_eq!(a.validate(), Err(RepViolation::Cocycle(0, 1, 2)));
    }

    #[test]
    fn validation_reports_infinite_within_class() {
        let base = LinPreorder::indiscrete(2).unwrap();
        let t = vec![
            vec![Some(Ext::zero()), Some(Ext::PosInf)],
            vec![Some(Ext::PosInf), Some(Ext::zero())],
        ];
        let a = RepPoint::from_table(base.clone(), t);
        assert_eq!(a.validate(), Err(RepViolation::InfiniteWithinClass(0, 1)));
        assert_eq!(
            RepPoint::from_gaps_on(base, vec![Ext::PosInf]),
            Err(RepError::InfiniteGapWithinClass(0))
        );
    }

    #[test]
    fn preorder_points_are_antisymmetric_on_classes() {
        let base = LinPreorder::new(vec![1, 0, 1]).unwrap();
        // enumeration is 1, 0, 2
        let a = RepPoint::from_gaps_on(base, vec![Ext::PosInf, fin(2)]).unwrap();
        assert!(a.validate().is_ok());
        assert_eq!(a.at(0, 2), &fin(2));
        assert_eq!(a.at(2, 0), &fin(-2));
        assert_eq!(a.at(1, 2), &Ext::PosInf);
    }

    #[test]
    fn strata() {
        let all_fin = RepPoint::from_gaps(vec![fin(1), fin(1)]).unwrap();
        assert!(all_fin.stratum_of().unwrap().is_indiscrete());
        let all_inf = RepPoint::from_gaps(vec![Ext::PosInf; 3]).unwrap();
        assert!(all_inf.stratum_of().unwrap().is_discrete());
        let mixed = RepPoint::from_gaps(vec![Ext::PosInf, fin(1), Ext::PosInf]).unwrap();
        assert_eq!(mixed.stratum_of().unwrap().classes(), vec![vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn charts() {
        let gaps = vec![fin(2), Ext::PosInf, Ext::fin(1, 2)];
        let a = RepPoint::from_gaps(gaps.clone()).unwrap();
        let c = a.chart_coordinates(&[0, 1, 2, 3]).unwrap();
        assert_eq!(c.coords, gaps);
        assert_eq!(c.finite_forced, vec![false; 3]);
        assert!(matches!(a.chart_coordinates(&[1, 0, 2, 3]), Err(RepError::BadEnumeration(_))));

        let ind = RepPoint::from_gaps_on(LinPreorder::indiscrete(2).unwrap(), vec![fin(-3)]).unwrap();
        let c = ind.chart_coordinates(&[0, 1]).unwrap();
        assert_eq!(c.finite_forced, vec![true]);
        // the other listing of an indiscrete pair is also nondecreasing
        assert_eq!(ind.chart_coordinates(&[1, 0]).unwrap().coords, vec![fin(3)]);
    }

    #[test]
    fn stratum_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let i = LinOrder::standard(5);
        for e in enumerate_convex_equivalences(&i).elements {
            let a = sample_in_stratum(&e, &mut rng);
            assert!(a.in_stratum(&e).unwrap());
            let c = a.chart_coordinates(&i.enumeration()).unwrap();
            assert_eq!(c.finite_count(), i.len() - e.num_classes());
        }
    }

    #[test]
    fn pullback_examples() {
        let a = RepPoint::from_gaps(vec![fin(3), Ext::PosInf]).unwrap();
        let id = OrderMorphism::identity(a.base());
        assert_eq!(a.pullback(&id).unwrap(), a);
        // [2] → [1] merging 1 and 2
        let j = RepPoint::from_gaps(vec![fin(4)]).unwrap();
        let f = enumerate_surjections(&LinOrder::standard(3), &LinOrder::standard(2))
            .into_iter()
            .find(|f| f.map() == [0, 1, 1])
            .unwrap();
        let b = j.pullback(&f).unwrap();
        assert_eq!(b.gaps(), vec![fin(4), fin(0)]);
        assert!(b.validate().is_ok());
    }

    #[test]
    fn phi_membership() {
        let i = LinOrder::standard(3);
        let a = RepPoint::from_gaps(vec![fin(1), Ext::PosInf]).unwrap();
        assert!(a.in_phi(&ConvexEquiv::indiscrete(i.as_preorder())).unwrap());
        assert!(!a.in_phi(&ConvexEquiv::discrete(&i)).unwrap());
        let all_inf = RepPoint::from_gaps(vec![Ext::PosInf; 2]).unwrap();
        assert!(all_inf.in_phi(&ConvexEquiv::discrete(&i)).unwrap());
    }

    #[test]
    fn json_form() {
        let a = RepPoint::from_gaps(vec![Ext::fin(1, 2), Ext::PosInf]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"base":{"n":3,"rank":[0,1,2]},"gaps":[{"fin":"1/2"},"inf"]}"#);
        assert_eq!(serde_json::from_str::<RepPoint>(&s).unwrap(), a);
    }
}
