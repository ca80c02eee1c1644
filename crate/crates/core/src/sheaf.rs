//! Sheaves on the moduli of broken lines, as functors on finite linear orders
//! and surjections, and their constructible restrictions to `Rep(I)`.
//!
//! A global sheaf is presented by `V_n = F([n])` for `[n] = {0 < … < n}` and
//! the images `gen(n, k) = F(s_k)` of the adjacent merges `s_k: [n] → [n−1]`.
//! Restriction maps of a constructible sheaf go from finer to coarser
//! relations: `value(E) → value(E')` for `E ⊆ E'`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::family::SampledFamily;
use crate::linalg::{Matrix, NonunitalAlgebra};
use crate::order::{enumerate_convex_equivalences, ConvPoset, ConvexEquiv, LinOrder, OrderMorphism};
use crate::rep::{RepError, RepPoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SheafError {
    #[error("generator ({n},{k}) is missing")]
    MissingGenerator { n: usize, k: usize },
    #[error("generator ({n},{k}) has shape {rows}×{cols}, expected {expected_rows}×{expected_cols}")]
    GeneratorShape { n: usize, k: usize, rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },
    #[error("unexpected generator key {0:?}")]
    UnexpectedGenerator(String),
    #[error("exchange relation fails at n={n}, i={i}, j={j}")]
    Exchange { n: usize, i: usize, j: usize },
    #[error("expected {expected} dimensions, got {got}")]
    DimCount { expected: usize, got: usize },
    #[error("order of size {size} exceeds the truncation (at most {max} elements)")]
    Truncation { size: usize, max: usize },
    #[error("map is not a monotone surjection between linear orders")]
    NotLinear,
    #[error("the sample's index is not the sheaf's base")]
    BaseMismatch,
    #[error(transparent)]
    Rep(#[from] RepError),
}

/// Which adjacent merge to peel off first when factoring a surjection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    Rightmost,
    Leftmost,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalSheaf {
    truncation: usize,
    dims: Vec<usize>,
    gen: BTreeMap<(usize, usize), Matrix>,
}

impl GlobalSheaf {
    /// Validates shapes and all exchange relations.
    pub fn new(
        truncation: usize,
        dims: Vec<usize>,
        gen: BTreeMap<(usize, usize), Matrix>,
    ) -> Result<Self, SheafError> {
        if dims.len() != truncation + 1 {
            return Err(SheafError::DimCount { expected: truncation + 1, got: dims.len() });
        }
        for &(n, k) in gen.keys() {
            if n == 0 || n > truncation || k >= n {
                return Err(SheafError::UnexpectedGenerator(format!("{n},{k}")));
            }
        }
        for n in 1..=truncation {
            for k in 0..n {
                let g = gen.get(&(n, k)).ok_or(SheafError::MissingGenerator { n, k })?;
                if (g.rows(), g.cols()) != (dims[n - 1], dims[n]) {
                    return Err(SheafError::GeneratorShape {
                        n,
                        k,
                        rows: g.rows(),
                        cols: g.cols(),
                        expected_rows: dims[n - 1],
                        expected_cols: dims[n],
                    });
                }
            }
        }
        let sheaf = GlobalSheaf { truncation, dims, gen };
        for n in 2..=truncation {
            for i in 0..n - 1 {
                for j in i..n - 1 {
                    let lhs = sheaf.gen[&(n - 1, j)].mul(&sheaf.gen[&(n, i)]);
                    let rhs = sheaf.gen[&(n - 1, i)].mul(&sheaf.gen[&(n, j + 1)]);
                    if lhs != rhs {
                        return Err(SheafError::Exchange { n, i, j });
                    }
                }
            }
        }
        Ok(sheaf)
    }

    /// `F([n]) = A^{⊗(n+1)}`, with `s_k` acting by multiplying factors `k` and `k+1`.
    pub fn from_algebra(a: &NonunitalAlgebra, truncation: usize) -> Self {
        let d = a.dim();
        let dims = (0..=truncation).map(|n| d.pow(n as u32 + 1)).collect();
        let mut gen = BTreeMap::new();
        let m = a.mult_matrix();
        for n in 1..=truncation {
            for k in 0..n {
                let left = Matrix::identity(d.pow(k as u32));
                let right = Matrix::identity(d.pow((n - 1 - k) as u32));
                gen.insert((n, k), left.kron(&m).kron(&right));
            }
        }
        GlobalSheaf::new(truncation, dims, gen).expect("associativity gives the exchange relations")
    }

    /// Constant sheaf with value `Q^d` and identity maps.
    pub fn constant(d: usize, truncation: usize) -> Self {
        let dims = vec![d; truncation + 1];
        let gen = (1..=truncation)
            .flat_map(|n| (0..n).map(move |k| ((n, k), Matrix::identity(d))))
            .collect();
        GlobalSheaf::new(truncation, dims, gen).expect("identities commute")
    }

    /// Replaces `V_n` by an isomorphic copy through `p[n]: V_n → V_n'`.
    pub fn conjugate(&self, p: &[Matrix]) -> Result<Self, SheafError> {
        let inv: Vec<Matrix> = p.iter().map(|m| m.inverse().expect("conjugating matrices are invertible")).collect();
        let gen = self
            .gen
            .iter()
            .map(|(&(n, k), g)| ((n, k), p[n - 1].mul(g).mul(&inv[n])))
            .collect();
        GlobalSheaf::new(self.truncation, self.dims.clone(), gen)
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Dimension of `F` on an order with `size` elements.
    pub fn dim_on(&self, size: usize) -> usize {
        self.dims[size - 1]
    }

    pub fn generator(&self, n: usize, k: usize) -> &Matrix {
        &self.gen[&(n, k)]
    }

    /// `F(g)` for a monotone surjection `g` between standard orders, given by
    /// its values; `g` is factored into adjacent merges.
    pub fn apply_map(&self, g: &[usize], how: Factorization) -> Result<Matrix, SheafError> {
        let n = g.len();
        let m = g.last().map_or(0, |&x| x + 1);
        let ok = n >= 1 && g[0] == 0 && g.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1);
        if !ok {
            return Err(SheafError::NotLinear);
        }
        if n > self.truncation + 1 {
            return Err(SheafError::Truncation { size: n, max: self.truncation + 1 });
        }
        let mut g = g.to_vec();
        let mut acc = Matrix::identity(self.dims[n - 1]);
        while g.len() > m {
            let mut ties = (0..g.len() - 1).filter(|&k| g[k] == g[k + 1]);
            let k = match how {
                Factorization::Rightmost => ties.next_back(),
                Factorization::Leftmost => ties.next(),
            }
            .expect("a non-injective map has a tie");
            acc = self.gen[&(g.len() - 1, k)].mul(&acc);
            g.remove(k + 1);
        }
        Ok(acc)
    }

    /// `F(f)` for a monotone surjection between linear orders.
    pub fn apply_surjection(&self, f: &OrderMorphism) -> Result<Matrix, SheafError> {
        let (src, tgt) = (f.source(), f.target());
        if !src.is_linear() || !tgt.is_linear() {
            return Err(SheafError::NotLinear);
        }
        let g: Vec<usize> = src.enumeration().iter().map(|&i| tgt.rank(f.apply(i))).collect();
        self.apply_map(&g, Factorization::Rightmost)
    }
}

/// JSON form `{"N": n, "V": [dims], "gen": {"n,k": matrix}}`.
impl Serialize for GlobalSheaf {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct G<'a> {
            #[serde(rename = "N")]
            n: usize,
            #[serde(rename = "V")]
            v: &'a [usize],
            gen: BTreeMap<String, &'a Matrix>,
        }
        let gen = self.gen.iter().map(|(&(n, k), m)| (format!("{n},{k}"), m)).collect();
        G { n: self.truncation, v: &self.dims, gen }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GlobalSheaf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct G {
            #[serde(rename = "N")]
            n: usize,
            #[serde(rename = "V")]
            v: Vec<usize>,
            gen: BTreeMap<String, Matrix>,
        }
        let g = G::deserialize(d)?;
        let mut gen = BTreeMap::new();
        for (key, m) in g.gen {
            let parsed = key
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| serde::de::Error::custom(format!("bad generator key {key:?}")))?;
            gen.insert(parsed, m);
        }
        GlobalSheaf::new(g.n, g.v, gen).map_err(serde::de::Error::custom)
    }
}

/// A functor on `Conv(I)`, stored on every comparable pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructibleSheaf {
    base: LinOrder,
    poset: ConvPoset,
    values: Vec<usize>,
    restrictions: BTreeMap<(usize, usize), Matrix>,
}

impl ConstructibleSheaf {
    pub fn base(&self) -> &LinOrder {
        &self.base
    }

    pub fn poset(&self) -> &ConvPoset {
        &self.poset
    }

    pub fn value(&self, e: &ConvexEquiv) -> Option<usize> {
        self.poset.index_of(e).map(|i| self.values[i])
    }

    /// The map `value(E) → value(E')`, defined when `E ⊆ E'`.
    pub fn restriction(&self, e: &ConvexEquiv, e2: &ConvexEquiv) -> Option<&Matrix> {
        let (a, b) = (self.poset.index_of(e)?, self.poset.index_of(e2)?);
        self.restrictions.get(&(a, b))
    }

    /// Identities on the diagonal and composition along every chain `E ⊆ E' ⊆ E''`.
    pub fn is_functorial(&self) -> bool {
        let n = self.poset.len();
        (0..n).all(|a| self.restrictions[&(a, a)].is_identity())
            && (0..n).all(|a| {
                (0..n).filter(|&b| self.poset.le[a][b]).all(|b| {
                    (0..n).filter(|&c| self.poset.le[b][c]).all(|c| {
                        self.restrictions[&(b, c)].mul(&self.restrictions[&(a, b)]) == self.restrictions[&(a, c)]
                    })
                })
            })
    }

    /// Value at the stratum of `α`.
    pub fn stalk(&self, alpha: &RepPoint) -> Result<usize, SheafError> {
        if alpha.base() != self.base.as_preorder() {
            return Err(SheafError::BaseMismatch);
        }
        Ok(self.value(&alpha.stratum_of()?).expect("every stratum is in Conv(I)"))
    }

    /// The cospecialization map from the stalk at a finer stratum to a coarser one.
    pub fn cospecialization(&self, finer: &RepPoint, coarser: &RepPoint) -> Result<Option<Matrix>, SheafError> {
        let (e, e2) = (finer.stratum_of()?, coarser.stratum_of()?);
        Ok(self.restriction(&e, &e2).cloned())
    }
}

/// The surjection `I/E → I/E'` of class orders, for `E ⊆ E'`.
fn class_map(e: &ConvexEquiv, e2: &ConvexEquiv) -> Vec<usize> {
    e.classes().iter().map(|c| e2.class_of(c[0])).collect()
}

/// `value(E) = F(I/E)`, restrictions induced by the quotient maps.
pub fn global_to_constructible(f: &GlobalSheaf, base: &LinOrder) -> Result<ConstructibleSheaf, SheafError> {
    if base.len() > f.truncation + 1 {
        return Err(SheafError::Truncation { size: base.len(), max: f.truncation + 1 });
    }
    let poset = enumerate_convex_equivalences(base);
    let values = poset.elements.iter().map(|e| f.dim_on(e.num_classes())).collect();
    let mut restrictions = BTreeMap::new();
    for (a, e) in poset.elements.iter().enumerate() {
        for (b, e2) in poset.elements.iter().enumerate() {
            if poset.le[a][b] {
                restrictions.insert((a, b), f.apply_map(&class_map(e, e2), Factorization::Rightmost)?);
            }
        }
    }
    Ok(ConstructibleSheaf { base: base.clone(), poset, values, restrictions })
}

/// Pulling back along `f: I → J` sends `E ∈ Conv(J)` to `f⁻¹E`, and the sheaf
/// built on `I` must agree with the one on `J` at every such pair of strata,
/// including all restriction maps.
pub fn pullback_compatible(f: &GlobalSheaf, map: &OrderMorphism) -> Result<bool, SheafError> {
    let i = LinOrder::from_preorder(map.source().clone()).map_err(|_| SheafError::NotLinear)?;
    let j = LinOrder::from_preorder(map.target().clone()).map_err(|_| SheafError::NotLinear)?;
    let (si, sj) = (global_to_constructible(f, &i)?, global_to_constructible(f, &j)?);
    let pulled: Vec<ConvexEquiv> = sj
        .poset
        .elements
        .iter()
        .map(|e| e.pullback(map).expect("target matches"))
        .collect();
    for (a, e) in sj.poset.elements.iter().enumerate() {
        if si.value(&pulled[a]) != sj.value(e) {
            return Ok(false);
        }
        for (b, e2) in sj.poset.elements.iter().enumerate() {
            if sj.poset.le[a][b] && si.restriction(&pulled[a], &pulled[b]) != sj.restriction(e, e2) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeMap {
    pub from: String,
    pub to: String,
    /// `None` when the strata are incomparable.
    pub map: Option<Matrix>,
    /// True when the map runs against the edge, from `to` to `from`.
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyEvaluation {
    pub stalks: Vec<(String, usize)>,
    pub edges: Vec<EdgeMap>,
}

/// Stalks at every sample and cospecialization maps along declared edges.
pub fn evaluate_on_family(f: &GlobalSheaf, family: &SampledFamily) -> Result<FamilyEvaluation, SheafError> {
    let base = LinOrder::from_preorder(family.index().clone()).map_err(|_| SheafError::NotLinear)?;
    let sheaf = global_to_constructible(f, &base)?;
    let mut stalks = Vec::new();
    let mut strata = BTreeMap::new();
    for s in family.samples() {
        stalks.push((s.id.clone(), sheaf.stalk(&s.point)?));
        strata.insert(s.id.clone(), s.point.stratum_of()?);
    }
    let edges = family
        .edges()
        .iter()
        .map(|(a, b)| {
            let (ea, eb) = (&strata[a], &strata[b]);
            let (map, reversed) = if ea.refines(eb) {
                (sheaf.restriction(ea, eb).cloned(), false)
            } else if eb.refines(ea) {
                (sheaf.restriction(eb, ea).cloned(), true)
            } else {
                (None, false)
            };
            EdgeMap { from: a.clone(), to: b.clone(), map, reversed }
        })
        .collect();
    Ok(FamilyEvaluation { stalks, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::Ext;
    use crate::family::easybreak_family;
    use crate::order::enumerate_surjections;

    #[test]
    fn generators_and_identity() {
        let f = GlobalSheaf::from_algebra(&NonunitalAlgebra::matrix2(), 3);
        assert!(f.apply_map(&[0, 1, 2], Factorization::Rightmost).unwrap().is_identity());
        assert_eq!(&f.apply_map(&[0, 0], Factorization::Rightmost).unwrap(), f.generator(1, 0));
        let both = f.apply_map(&[0, 0, 0], Factorization::Rightmost).unwrap();
        assert_eq!(both, f.generator(1, 0).mul(f.generator(2, 0)));
        assert_eq!(both, f.generator(1, 0).mul(f.generator(2, 1)));
        assert!(f.apply_map(&[0, 2], Factorization::Rightmost).is_err());
    }

    #[test]
    fn factorization_independent() {
        let f = GlobalSheaf::from_algebra(&NonunitalAlgebra::nilpotent3(), 4);
        for n in 1..=5 {
            for m in 1..=n {
                for s in enumerate_surjections(&LinOrder::standard(n), &LinOrder::standard(m)) {
                    assert_eq!(
                        f.apply_map(s.map(), Factorization::Rightmost).unwrap(),
                        f.apply_map(s.map(), Factorization::Leftmost).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn exchange_relation_enforced() {
        let mut gen = BTreeMap::new();
        gen.insert((1, 0), Matrix::from_ints(&[&[1, 0]]));
        gen.insert((2, 0), Matrix::from_ints(&[&[1, 0], &[0, 1]]));
        gen.insert((2, 1), Matrix::from_ints(&[&[0, 1], &[1, 0]]));
        let err = GlobalSheaf::new(2, vec![1, 2, 2], gen);
        assert_eq!(err, Err(SheafError::Exchange { n: 2, i: 0, j: 0 }));
    }

    #[test]
    fn constructible_values() {
        let a = NonunitalAlgebra::nilpotent3();
        let f = GlobalSheaf::from_algebra(&a, 4);
        let i = LinOrder::standard(2);
        let c = global_to_constructible(&f, &i).unwrap();
        assert!(c.is_functorial());
        let disc = ConvexEquiv::discrete(&i);
        let ind = ConvexEquiv::indiscrete(i.as_preorder());
        assert_eq!(c.value(&disc), Some(9));
        assert_eq!(c.value(&ind), Some(3));
        assert_eq!(c.restriction(&disc, &ind), Some(f.generator(1, 0)));
        let i4 = LinOrder::standard(5);
        assert!(global_to_constructible(&f, &i4).unwrap().is_functorial());
    }

    #[test]
    fn pullbacks() {
        let f = GlobalSheaf::from_algebra(&NonunitalAlgebra::matrix2(), 3);
        for n in 1..=4 {
            for m in 1..=n {
                for s in enumerate_surjections(&LinOrder::standard(n), &LinOrder::standard(m)) {
                    assert!(pullback_compatible(&f, &s).unwrap());
                }
            }
        }
    }

    #[test]
    fn stalks_and_easybreak() {
        let a = NonunitalAlgebra::nilpotent3();
        let f = GlobalSheaf::from_algebra(&a, 4);
        let c = global_to_constructible(&f, &LinOrder::standard(3)).unwrap();
        let finite = RepPoint::from_gaps(vec![Ext::fin(1, 1), Ext::fin(2, 1)]).unwrap();
        let broken = RepPoint::from_gaps(vec![Ext::PosInf, Ext::PosInf]).unwrap();
        assert_eq!(c.stalk(&finite).unwrap(), 3);
        assert_eq!(c.stalk(&broken).unwrap(), 27);

        let ev = evaluate_on_family(&f, &easybreak_family()).unwrap();
        let dims: Vec<usize> = ev.stalks.iter().map(|s| s.1).collect();
        assert_eq!(dims, vec![3, 3, 3, 9]);
        assert!(ev.edges[0].map.as_ref().unwrap().is_identity());
        let last = &ev.edges[2];
        assert!(last.reversed);
        assert_eq!(last.map.as_ref().unwrap(), &a.mult_matrix());
    }

    #[test]
    fn conjugation_and_json() {
        let f = GlobalSheaf::from_algebra(&NonunitalAlgebra::rationals(), 2);
        let p: Vec<Matrix> = (0..3).map(|n| Matrix::from_ints(&[&[n + 2]])).collect();
        let g = f.conjugate(&p).unwrap();
        assert_ne!(g, f);
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.starts_with(r#"{"N":2,"V":[1,1,1],"gen":{"1,0":"#));
        assert_eq!(serde_json::from_str::<GlobalSheaf>(&s).unwrap(), g);
        let c = GlobalSheaf::constant(2, 3);
        assert!(global_to_constructible(&c, &LinOrder::standard(4)).unwrap().is_functorial());
    }
}
