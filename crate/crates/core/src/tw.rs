//! The twisted arrow category of finite linear orders, functors out of it,
//! Day convolution, and the passage between nonunital algebras and
//! factorizable functors.
//!
//! Objects are `(I, ≃)` with `I = {0 < … < n−1}` and `≃` convex; a morphism is
//! a monotone surjection `f` with `f(i) ≃ f(i') ⇒ i ≃ i'`. Functors are
//! truncated: they are defined on objects with at most `N` elements.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{AlgebraError, LinalgError, Matrix, NonunitalAlgebra};
use crate::order::{combinations, ConvexEquiv, LinOrder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TwError {
    #[error("relation labels do not describe a convex equivalence on {0} elements")]
    BadRelation(usize),
    #[error("map is not a monotone surjection")]
    NotSurjection,
    #[error("f(i) ≃ f(i') but i ≄ i' for i={0}, i'={1}")]
    Twist(usize, usize),
    #[error("morphisms do not compose")]
    NotComposable,
    #[error("object of size {size} is beyond the truncation {truncation}")]
    Truncation { size: usize, truncation: usize },
    #[error("truncation {0} is too small (need at least {1})")]
    TruncationTooSmall(usize, usize),
    #[error("the comparison map F(I♯) → F(I, ≃) is not invertible at {0}")]
    NotFun0(String),
    #[error("the structure map at ({0}, {1}) is not invertible")]
    NotMonoidal(String, String),
    #[error("recovered product is not associative: {0}")]
    NotAssociative(AlgebraError),
    #[error("ternary structure map disagrees with the iterated product")]
    TernaryMismatch,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `(I, ≃)` on canonical labels; classes are numbered in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TwObject {
    class_of: Vec<usize>,
}

impl TwObject {
    pub fn new(class_of: Vec<usize>) -> Result<Self, TwError> {
        let n = class_of.len();
        let rel = ConvexEquiv::new(LinOrder::standard(n.max(1)).as_preorder().clone(), class_of.clone())
            .map_err(|_| TwError::BadRelation(n))?;
        if n == 0 {
            return Err(TwError::BadRelation(0));
        }
        Ok(TwObject { class_of: rel.labels().to_vec() })
    }

    /// `I^♯`: the indiscrete relation.
    pub fn sharp(n: usize) -> Self {
        TwObject { class_of: vec![0; n] }
    }

    /// The discrete relation.
    pub fn flat(n: usize) -> Self {
        TwObject { class_of: (0..n).collect() }
    }

    pub fn point() -> Self {
        TwObject::sharp(1)
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn same(&self, i: usize, j: usize) -> bool {
        self.class_of[i] == self.class_of[j]
    }

    pub fn num_classes(&self) -> usize {
        self.class_of.last().map_or(0, |c| c + 1)
    }

    pub fn is_sharp(&self) -> bool {
        self.num_classes() == 1
    }

    /// Concatenation with no identifications across the two parts.
    pub fn star(&self, other: &TwObject) -> TwObject {
        let shift = self.num_classes();
        let class_of = self.class_of.iter().copied().chain(other.class_of.iter().map(|c| c + shift)).collect();
        TwObject { class_of }
    }

    /// Restriction to the interval `[start, start + len)`.
    pub fn restrict(&self, start: usize, len: usize) -> TwObject {
        let base = self.class_of[start];
        TwObject { class_of: self.class_of[start..start + len].iter().map(|c| c - base).collect() }
    }

    /// Split points `p` with `{0..p}` a proper, nonempty, `≃`-invariant initial segment.
    pub fn splits(&self) -> Vec<usize> {
        (1..self.len()).filter(|&p| !self.same(p - 1, p)).collect()
    }

    pub fn to_convex(&self) -> ConvexEquiv {
        ConvexEquiv::new(LinOrder::standard(self.len()).as_preorder().clone(), self.class_of.clone())
            .expect("convex by construction")
    }
}

impl std::fmt::Display for TwObject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .to_convex()
            .classes()
            .iter()
            .map(|c| c.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(""))
            .collect();
        write!(f, "({})", parts.join("|"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TwMorphism {
    source: TwObject,
    target: TwObject,
    map: Vec<usize>,
}

impl TwMorphism {
    pub fn new(source: TwObject, target: TwObject, map: Vec<usize>) -> Result<Self, TwError> {
        let surjective = map.len() == source.len()
            && map.first() == Some(&0)
            && map.last() == Some(&(target.len() - 1))
            && map.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1);
        if !surjective {
            return Err(TwError::NotSurjection);
        }
        for i in 0..map.len() {
            for k in i + 1..map.len() {
                if target.same(map[i], map[k]) && !source.same(i, k) {
                    return Err(TwError::Twist(i, k));
                }
            }
        }
        Ok(TwMorphism { source, target, map })
    }

    pub fn identity(x: &TwObject) -> Self {
        TwMorphism { source: x.clone(), target: x.clone(), map: (0..x.len()).collect() }
    }

    /// The identity of `I` viewed as `I^♯ → (I, ≃)`.
    pub fn comparison(x: &TwObject) -> Self {
        TwMorphism { source: TwObject::sharp(x.len()), target: x.clone(), map: (0..x.len()).collect() }
    }

    /// The map `I^♯ → pt`.
    pub fn collapse(n: usize) -> Self {
        TwMorphism { source: TwObject::sharp(n), target: TwObject::point(), map: vec![0; n] }
    }

    pub fn source(&self) -> &TwObject {
        &self.source
    }

    pub fn target(&self) -> &TwObject {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &TwMorphism) -> Result<TwMorphism, TwError> {
        if self.target != next.source {
            return Err(TwError::NotComposable);
        }
        Ok(TwMorphism {
            source: self.source.clone(),
            target: next.target.clone(),
            map: self.map.iter().map(|&j| next.map[j]).collect(),
        })
    }

    /// `f ⋆ g`.
    pub fn star(&self, other: &TwMorphism) -> TwMorphism {
        let shift = self.target.len();
        TwMorphism {
            source: self.source.star(&other.source),
            target: self.target.star(&other.target),
            map: self.map.iter().copied().chain(other.map.iter().map(|j| j + shift)).collect(),
        }
    }

    /// Restriction to source interval `[start, start + len)` onto its image.
    fn restrict(&self, start: usize, len: usize) -> TwMorphism {
        let lo = self.map[start];
        let hi = self.map[start + len - 1];
        TwMorphism {
            source: self.source.restrict(start, len),
            target: self.target.restrict(lo, hi - lo + 1),
            map: self.map[start..start + len].iter().map(|j| j - lo).collect(),
        }
    }

    /// Sizes of the fibers `f⁻¹(j)` in order.
    pub fn fiber_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.target.len()];
        for &j in &self.map {
            sizes[j] += 1;
        }
        sizes
    }
}

/// Objects and morphisms of the truncation to orders with at most `N` elements.
#[derive(Debug, Clone)]
pub struct TwCategory {
    pub truncation: usize,
    pub objects: Vec<TwObject>,
    pub morphisms: Vec<TwMorphism>,
}

impl TwCategory {
    pub fn enumerate(truncation: usize) -> Self {
        let mut objects = Vec::new();
        for n in 1..=truncation {
            // a convex relation on n elements is a set of cut points
            for mask in 0u32..(1 << (n - 1)) {
                let mut class_of = vec![0; n];
                for i in 1..n {
                    class_of[i] = class_of[i - 1] + usize::from(mask & (1 << (i - 1)) != 0);
                }
                objects.push(TwObject { class_of });
            }
        }
        objects.sort();
        let mut morphisms = Vec::new();
        for x in &objects {
            for y in objects.iter().filter(|y| y.len() <= x.len()) {
                for cuts in combinations(x.len() - 1, y.len() - 1) {
                    let mut map = vec![0; x.len()];
                    for i in 1..x.len() {
                        map[i] = map[i - 1] + usize::from(cuts.contains(&(i - 1)));
                    }
                    if let Ok(f) = TwMorphism::new(x.clone(), y.clone(), map) {
                        morphisms.push(f);
                    }
                }
            }
        }
        morphisms.sort();
        TwCategory { truncation, objects, morphisms }
    }

    pub fn hom(&self, x: &TwObject, y: &TwObject) -> Vec<&TwMorphism> {
        self.morphisms.iter().filter(|f| &f.source == x && &f.target == y).collect()
    }

    /// Composition is closed: every composite of enumerated morphisms is enumerated.
    pub fn is_closed(&self) -> bool {
        let set: std::collections::BTreeSet<&TwMorphism> = self.morphisms.iter().collect();
        self.morphisms.iter().all(|f| {
            self.morphisms
                .iter()
                .filter(|g| g.source == f.target)
                .all(|g| set.contains(&f.then(g).expect("composable")))
        })
    }
}

/// `Hom(I^♯, y) = Hom_LinOrd(I, J)` for every `I` and `y = (J, ≃)`, and both
/// triangle identities of the unit `I → I` and counit `J^♯ → (J, ≃)` hold.
pub fn sharp_adjunction_check(cat: &TwCategory) -> bool {
    let linear = |n: usize, m: usize| combinations(n - 1, m - 1).len();
    let bijective = cat.objects.iter().all(|y| {
        (1..=cat.truncation).all(|n| {
            n < y.len() || cat.hom(&TwObject::sharp(n), y).len() == linear(n, y.len())
        })
    });
    let triangles = cat.objects.iter().all(|y| {
        // ε_y ∘ (forget-then-sharp of id_y) = ε_y, and forget(ε_y) ∘ η = id
        let eps = TwMorphism::comparison(y);
        let lifted = TwMorphism::identity(&TwObject::sharp(y.len()));
        lifted.then(&eps).map(|c| c == eps).unwrap_or(false) && eps.map.iter().enumerate().all(|(i, &j)| i == j)
    }) && (1..=cat.truncation).all(|n| {
        let s = TwObject::sharp(n);
        TwMorphism::comparison(&s) == TwMorphism::identity(&s)
    });
    bijective && triangles
}

/// A functor `Tw(LinOrd) → Vect_Q` on a truncation, with a lax monoidal structure
/// `μ_{x,y}: F(x) ⊗ F(y) → F(x ⋆ y)` for `|x| + |y| ≤ N`.
pub trait TwFunctor {
    fn truncation(&self) -> usize;
    fn dim(&self, x: &TwObject) -> usize;
    fn action(&self, f: &TwMorphism) -> Matrix;
    fn monoidal(&self, x: &TwObject, y: &TwObject) -> Matrix;
}

/// `F(I, ≃) = A^{⊗|I|}`; `f` multiplies each fiber in order; `μ` is the identity.
#[derive(Debug, Clone)]
pub struct AlgebraFunctor {
    algebra: NonunitalAlgebra,
    truncation: usize,
    products: Vec<Matrix>,
}

impl AlgebraFunctor {
    pub fn algebra(&self) -> &NonunitalAlgebra {
        &self.algebra
    }
}

/// The strictly monoidal functor attached to a nonunital algebra.
pub fn algebra_to_functor(a: &NonunitalAlgebra, truncation: usize) -> Result<AlgebraFunctor, TwError> {
    a.validate().map_err(TwError::NotAssociative)?;
    let products = (1..=truncation).map(|k| a.iterated_mult(k)).collect();
    Ok(AlgebraFunctor { algebra: a.clone(), truncation, products })
}

impl TwFunctor for AlgebraFunctor {
    fn truncation(&self) -> usize {
        self.truncation
    }

    fn dim(&self, x: &TwObject) -> usize {
        self.algebra.dim().pow(x.len() as u32)
    }

    fn action(&self, f: &TwMorphism) -> Matrix {
        Matrix::kron_all(f.fiber_sizes().iter().map(|&k| &self.products[k - 1]))
    }

    fn monoidal(&self, x: &TwObject, y: &TwObject) -> Matrix {
        Matrix::identity(self.dim(x) * self.dim(y))
    }
}

/// Dimension one everywhere, identity actions and structure maps.
#[derive(Debug, Clone, Copy)]
pub struct ConstantFunctor {
    pub truncation: usize,
}

impl TwFunctor for ConstantFunctor {
    fn truncation(&self) -> usize {
        self.truncation
    }

    fn dim(&self, _: &TwObject) -> usize {
        1
    }

    fn action(&self, _: &TwMorphism) -> Matrix {
        Matrix::identity(1)
    }

    fn monoidal(&self, _: &TwObject, _: &TwObject) -> Matrix {
        Matrix::identity(1)
    }
}

/// `F` transported along invertible `P_x: F(x) → F'(x)`.
pub struct Conjugated<'a> {
    inner: &'a dyn TwFunctor,
    p: BTreeMap<TwObject, (Matrix, Matrix)>,
}

impl<'a> Conjugated<'a> {
    /// `p` holds `(P_x, P_x⁻¹)` for every object of the truncation.
    pub fn new(inner: &'a dyn TwFunctor, p: BTreeMap<TwObject, (Matrix, Matrix)>) -> Result<Self, TwError> {
        for (m, inv) in p.values() {
            if !m.compose(inv)?.is_identity() {
                return Err(LinalgError::Singular.into());
            }
        }
        Ok(Conjugated { inner, p })
    }
}

impl TwFunctor for Conjugated<'_> {
    fn truncation(&self) -> usize {
        self.inner.truncation()
    }

    fn dim(&self, x: &TwObject) -> usize {
        self.inner.dim(x)
    }

    fn action(&self, f: &TwMorphism) -> Matrix {
        self.p[&f.target].0.mul(&self.inner.action(f)).mul(&self.p[&f.source].1)
    }

    fn monoidal(&self, x: &TwObject, y: &TwObject) -> Matrix {
        let xy = x.star(y);
        self.p[&xy].0.mul(&self.inner.monoidal(x, y)).mul_kron(&self.p[x].1, &self.p[y].1)
    }
}

/// `F` with the zero lax structure `μ = 0`, which is natural and associative
/// but never invertible unless both sides vanish.
pub struct ZeroStructure<'a> {
    inner: &'a dyn TwFunctor,
}

impl<'a> ZeroStructure<'a> {
    pub fn new(inner: &'a dyn TwFunctor) -> Self {
        ZeroStructure { inner }
    }
}

impl TwFunctor for ZeroStructure<'_> {
    fn truncation(&self) -> usize {
        self.inner.truncation()
    }

    fn dim(&self, x: &TwObject) -> usize {
        self.inner.dim(x)
    }

    fn action(&self, f: &TwMorphism) -> Matrix {
        self.inner.action(f)
    }

    fn monoidal(&self, x: &TwObject, y: &TwObject) -> Matrix {
        Matrix::zeros(self.dim(&x.star(y)), self.dim(x) * self.dim(y))
    }
}

/// `(F ⊛ G)(I, ≃) = ⊕_p F(I_{<p}) ⊗ G(I_{≥p})` over the split points `p` in
/// increasing order. The lax structure is taken to be zero.
pub struct DayConvolution<'a> {
    f: &'a dyn TwFunctor,
    g: &'a dyn TwFunctor,
}

impl<'a> DayConvolution<'a> {
    pub fn new(f: &'a dyn TwFunctor, g: &'a dyn TwFunctor) -> Self {
        DayConvolution { f, g }
    }

    /// `(split, offset, dim)` for each summand.
    pub fn summands(&self, x: &TwObject) -> Vec<(usize, usize, usize)> {
        let n = x.len();
        let mut off = 0;
        x.splits()
            .into_iter()
            .map(|p| {
                let d = self.f.dim(&x.restrict(0, p)) * self.g.dim(&x.restrict(p, n - p));
                let s = (p, off, d);
                off += d;
                s
            })
            .collect()
    }
}

impl TwFunctor for DayConvolution<'_> {
    fn truncation(&self) -> usize {
        self.f.truncation().min(self.g.truncation())
    }

    fn dim(&self, x: &TwObject) -> usize {
        self.summands(x).iter().map(|s| s.2).sum()
    }

    fn action(&self, f: &TwMorphism) -> Matrix {
        let (x, y) = (&f.source, &f.target);
        let (n, m) = (x.len(), y.len());
        let rows = self.summands(y);
        let cols = self.summands(x);
        let mut out = Matrix::zeros(self.dim(y), self.dim(x));
        for &(p, c0, _) in &cols {
            // the split after f(p−1) is a split of y because f never identifies across classes
            let q = f.map[p - 1] + 1;
            let &(_, r0, _) = rows.iter().find(|r| r.0 == q).expect("image of a split is a split");
            let block = self.f.action(&f.restrict(0, p)).kron(&self.g.action(&f.restrict(p, n - p)));
            debug_assert_eq!(block.rows(), self.f.dim(&y.restrict(0, q)) * self.g.dim(&y.restrict(q, m - q)));
            out.put_block(r0, c0, &block);
        }
        out
    }

    fn monoidal(&self, x: &TwObject, y: &TwObject) -> Matrix {
        Matrix::zeros(self.dim(&x.star(y)), self.dim(x) * self.dim(y))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctorReport {
    pub objects: usize,
    pub morphisms: usize,
    pub composable_pairs: usize,
    pub failures: Vec<String>,
}

impl FunctorReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Identities, composition, and shapes over the whole truncation.
pub fn check_functorial(f: &dyn TwFunctor, cat: &TwCategory) -> FunctorReport {
    let mut failures = Vec::new();
    let actions: BTreeMap<&TwMorphism, Matrix> = cat.morphisms.iter().map(|m| (m, f.action(m))).collect();
    for (m, a) in &actions {
        if (a.rows(), a.cols()) != (f.dim(&m.target), f.dim(&m.source)) {
            failures.push(format!("shape of F({:?})", m.map));
        }
    }
    for x in &cat.objects {
        if !actions[&TwMorphism::identity(x)].is_identity() {
            failures.push(format!("F(id_{x}) is not the identity"));
        }
    }
    let mut pairs = 0;
    for a in &cat.morphisms {
        for b in cat.morphisms.iter().filter(|b| b.source == a.target) {
            pairs += 1;
            let ab = a.then(b).expect("composable");
            if actions[b].mul(&actions[a]) != actions[&ab] {
                failures.push(format!("F({:?}) ∘ F({:?}) on {} → {}", b.map, a.map, a.source, b.target));
            }
        }
    }
    FunctorReport { objects: cat.objects.len(), morphisms: cat.morphisms.len(), composable_pairs: pairs, failures }
}

/// Naturality and associativity of the lax structure for `|x| + |y| (+ |z|) ≤ N`.
pub fn check_lax(f: &dyn TwFunctor, cat: &TwCategory) -> Vec<String> {
    let n = cat.truncation;
    let mut failures = Vec::new();
    for a in &cat.morphisms {
        for b in cat.morphisms.iter().filter(|b| a.source.len() + b.source.len() <= n) {
            let lhs = f.action(&a.star(b)).mul(&f.monoidal(&a.source, &b.source));
            let rhs = f.monoidal(&a.target, &b.target).mul_kron(&f.action(a), &f.action(b));
            if lhs != rhs {
                failures.push(format!("μ not natural at F({:?}) ⋆ F({:?})", a.map, b.map));
            }
        }
    }
    for x in &cat.objects {
        for y in cat.objects.iter().filter(|y| x.len() + y.len() < n) {
            for z in cat.objects.iter().filter(|z| x.len() + y.len() + z.len() <= n) {
                let id = |o: &TwObject| Matrix::identity(f.dim(o));
                let lhs = f.monoidal(&x.star(y), z).mul(&f.monoidal(x, y).kron(&id(z)));
                let rhs = f.monoidal(x, &y.star(z)).mul(&id(x).kron(&f.monoidal(y, z)));
                if lhs != rhs {
                    failures.push(format!("μ not associative at {x}, {y}, {z}"));
                }
            }
        }
    }
    failures
}

/// Objects where `F(I^♯) → F(I, ≃)` fails to be invertible.
pub fn fun0_failures(f: &dyn TwFunctor, cat: &TwCategory) -> Vec<TwObject> {
    cat.objects
        .iter()
        .filter(|x| !f.action(&TwMorphism::comparison(x)).is_invertible())
        .cloned()
        .collect()
}

/// Whether `F(I, discrete) ⊗ F(J, discrete) → F(I ⋆ J, discrete)` is invertible
/// for all sizes within the truncation.
pub fn factorizable_check(f: &dyn TwFunctor) -> bool {
    let n = f.truncation();
    (1..n).all(|p| (1..=n - p).all(|q| f.monoidal(&TwObject::flat(p), &TwObject::flat(q)).is_invertible()))
}

/// `A = F(pt)` with product `F(2^♯ → pt) ∘ F(2^♯ → 2^♭)⁻¹ ∘ μ_{pt,pt}`.
///
/// The product is certified associative, and the ternary structure map
/// `F(3^♯ → pt) ∘ F(3^♯ → 3^♭)⁻¹ ∘ μ_{2^♭,pt} ∘ (μ_{pt,pt} ⊗ 1)` must equal the
/// iterated product.
pub fn functor_to_algebra(f: &dyn TwFunctor) -> Result<NonunitalAlgebra, TwError> {
    if f.truncation() < 3 {
        return Err(TwError::TruncationTooSmall(f.truncation(), 3));
    }
    let pt = TwObject::point();
    let d = f.dim(&pt);
    let mu = f.monoidal(&pt, &pt);
    if !mu.is_invertible() {
        return Err(TwError::NotMonoidal(pt.to_string(), pt.to_string()));
    }
    let to_flat = |n: usize| -> Result<Matrix, TwError> {
        f.action(&TwMorphism::comparison(&TwObject::flat(n)))
            .inverse()
            .map_err(|_| TwError::NotFun0(TwObject::flat(n).to_string()))
    };
    let mult = f.action(&TwMorphism::collapse(2)).mul(&to_flat(2)?).mul(&mu);
    let a = NonunitalAlgebra::from_mult(&mult).map_err(TwError::NotAssociative)?;
    a.validate().map_err(TwError::NotAssociative)?;
    let mu3 = f.monoidal(&TwObject::flat(2), &pt).mul(&mu.kron(&Matrix::identity(d)));
    let ternary = f.action(&TwMorphism::collapse(3)).mul(&to_flat(3)?).mul(&mu3);
    if ternary != a.iterated_mult(3) {
        return Err(TwError::TernaryMismatch);
    }
    Ok(a)
}

/// The iterated structure map `F(pt)^{⊗n} → F(n^♭)`.
fn iterated_structure(f: &dyn TwFunctor, n: usize) -> Matrix {
    let pt = TwObject::point();
    let d = f.dim(&pt);
    let mut acc = Matrix::identity(d);
    for k in 1..n {
        acc = f.monoidal(&TwObject::flat(k), &pt).mul_kron(&acc, &Matrix::identity(d));
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NaturalIsoReport {
    pub objects: usize,
    pub morphisms: usize,
    pub failures: Vec<String>,
    /// `η_x` for each object, in object order.
    #[serde(skip)]
    pub components: Vec<(TwObject, Matrix)>,
}

impl NaturalIsoReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Builds `η_x = F(I^♯ → x) ∘ F(I^♯ → I^♭)⁻¹ ∘ μ^{(n)}: A^{⊗n} → F(x)` from the
/// algebra functor of `A = F(pt)` to `F`, and checks invertibility, naturality
/// and compatibility with the structure maps.
pub fn natural_iso_to(f: &dyn TwFunctor, g: &AlgebraFunctor, cat: &TwCategory) -> Result<NaturalIsoReport, TwError> {
    let mut failures = Vec::new();
    let mut eta: BTreeMap<&TwObject, Matrix> = BTreeMap::new();
    let mut to_sharp: BTreeMap<usize, Matrix> = BTreeMap::new();
    for n in 1..=cat.truncation {
        let back = f
            .action(&TwMorphism::comparison(&TwObject::flat(n)))
            .inverse()
            .map_err(|_| TwError::NotFun0(TwObject::flat(n).to_string()))?;
        to_sharp.insert(n, back.mul(&iterated_structure(f, n)));
    }
    for x in &cat.objects {
        let e = f.action(&TwMorphism::comparison(x)).mul(&to_sharp[&x.len()]);
        if !e.is_invertible() {
            failures.push(format!("η at {x} is not invertible"));
        }
        eta.insert(x, e);
    }
    for m in &cat.morphisms {
        if eta[&m.target].mul(&g.action(m)) != f.action(m).mul(&eta[&m.source]) {
            failures.push(format!("η not natural at {:?}: {} → {}", m.map, m.source, m.target));
        }
    }
    for x in &cat.objects {
        for y in cat.objects.iter().filter(|y| x.len() + y.len() <= cat.truncation) {
            let xy = x.star(y);
            if eta[&xy].mul(&g.monoidal(x, y)) != f.monoidal(x, y).mul_kron(&eta[x], &eta[y]) {
                failures.push(format!("η not monoidal at {x}, {y}"));
            }
        }
    }
    Ok(NaturalIsoReport {
        objects: cat.objects.len(),
        morphisms: cat.morphisms.len(),
        failures,
        components: eta.into_iter().map(|(x, m)| (x.clone(), m)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DayAssocReport {
    pub objects: usize,
    pub morphisms: usize,
    pub failures: Vec<String>,
}

impl DayAssocReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Reindexing `((F ⊛ G) ⊛ H)(x) → (F ⊛ (G ⊛ H))(x)`: both sides are sums over
/// pairs of splits `r < p` of `F ⊗ G ⊗ H` on the three parts, listed in
/// different orders and with different tensor bracketings.
fn day_reindexing(f: &dyn TwFunctor, g: &dyn TwFunctor, h: &dyn TwFunctor, x: &TwObject) -> Matrix {
    let fg = DayConvolution::new(f, g);
    let gh = DayConvolution::new(g, h);
    let left = DayConvolution::new(&fg, h);
    let right = DayConvolution::new(f, &gh);
    let n = x.len();
    let total = left.dim(x);
    let mut perm = vec![usize::MAX; total];
    for &(p, lp_off, _) in &left.summands(x) {
        let x0 = x.restrict(0, p);
        let hd = h.dim(&x.restrict(p, n - p));
        for &(r, fg_off, _) in &fg.summands(&x0) {
            let (fd, gd) = (f.dim(&x.restrict(0, r)), g.dim(&x.restrict(r, p - r)));
            let &(_, rr_off, _) = right.summands(x).iter().find(|s| s.0 == r).expect("r splits x");
            let x1 = x.restrict(r, n - r);
            let gh_total = gh.dim(&x1);
            let &(_, gh_off, _) = gh.summands(&x1).iter().find(|s| s.0 == p - r).expect("p splits the tail");
            for a in 0..fd {
                for b in 0..gd {
                    for c in 0..hd {
                        let li = lp_off + (fg_off + a * gd + b) * hd + c;
                        let ri = rr_off + a * gh_total + gh_off + b * hd + c;
                        perm[li] = ri;
                    }
                }
            }
        }
    }
    debug_assert!(perm.iter().all(|&i| i < total));
    Matrix::permutation(&perm)
}

/// Checks that the reindexing bijections intertwine the actions of every morphism.
pub fn day_assoc_check(
    f: &dyn TwFunctor,
    g: &dyn TwFunctor,
    h: &dyn TwFunctor,
    cat: &TwCategory,
) -> DayAssocReport {
    let fg = DayConvolution::new(f, g);
    let gh = DayConvolution::new(g, h);
    let left = DayConvolution::new(&fg, h);
    let right = DayConvolution::new(f, &gh);
    let mut failures = Vec::new();
    let phi: BTreeMap<&TwObject, Matrix> = cat.objects.iter().map(|x| (x, day_reindexing(f, g, h, x))).collect();
    for x in &cat.objects {
        if left.dim(x) != right.dim(x) {
            failures.push(format!("dimensions differ at {x}"));
        }
    }
    if failures.is_empty() {
        for m in &cat.morphisms {
            if phi[&m.target].mul(&left.action(m)) != right.action(m).mul(&phi[&m.source]) {
                failures.push(format!("reindexing not natural at {:?}: {} → {}", m.map, m.source, m.target));
            }
        }
    }
    DayAssocReport { objects: cat.objects.len(), morphisms: cat.morphisms.len(), failures }
}

/// Per-object pairs `(P_x, P_x⁻¹)` with `P_x = Q_{x,1} ⊗ … ⊗ Q_{x,n}`, built
/// from a seed, for conjugating a functor whose values are tensor powers of
/// `Q^d`. Factors are dense on objects with at most two elements and monomial
/// (a signed, scaled permutation) on larger ones, which keeps exact inverses cheap.
pub fn tensor_conjugators(cat: &TwCategory, d: usize, seed: u64) -> BTreeMap<TwObject, (Matrix, Matrix)> {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dense = |rng: &mut rand_chacha::ChaCha8Rng| loop {
        let rows = (0..d).map(|_| (0..d).map(|_| crate::ext::qi(rng.gen_range(-2..=2))).collect()).collect();
        let m = Matrix::from_rows(rows).expect("square");
        if let Ok(inv) = m.inverse() {
            break (m, inv);
        }
    };
    let monomial = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        let (mut m, mut inv) = (Matrix::zeros(d, d), Matrix::zeros(d, d));
        for (j, &i) in perm.iter().enumerate() {
            let s = [-2i64, -1, 1, 2, 3][rng.gen_range(0..5)];
            m.set(i, j, crate::ext::qi(s));
            inv.set(j, i, crate::ext::q(1, s));
        }
        (m, inv)
    };
    cat.objects
        .iter()
        .map(|x| {
            let factors: Vec<(Matrix, Matrix)> = (0..x.len())
                .map(|_| if x.len() <= 2 { dense(&mut rng) } else { monomial(&mut rng) })
                .collect();
            let p = Matrix::kron_all(factors.iter().map(|f| &f.0));
            let inv = Matrix::kron_all(factors.iter().map(|f| &f.1));
            (x.clone(), (p, inv))
        })
        .collect()
}

/// Outcome of both roundtrips for one algebra.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundtripReport {
    pub truncation: usize,
    pub functorial: bool,
    pub lax: bool,
    pub fun0: bool,
    pub factorizable: bool,
    pub algebra_recovered: bool,
    pub natural_iso: bool,
    pub failures: Vec<String>,
}

impl RoundtripReport {
    pub fn passed(&self) -> bool {
        self.functorial && self.lax && self.fun0 && self.factorizable && self.algebra_recovered && self.natural_iso
    }
}

/// `A ↦ F_A ↦ A` exactly, and `F ↦ A_F ↦ F_{A_F} ≅ F` for a conjugate `F` of `F_A`.
pub fn mainc_roundtrip(a: &NonunitalAlgebra, truncation: usize, seed: u64) -> Result<RoundtripReport, TwError> {
    let cat = TwCategory::enumerate(truncation);
    let fa = algebra_to_functor(a, truncation)?;
    let mut failures = Vec::new();
    let fr = check_functorial(&fa, &cat);
    failures.extend(fr.failures.iter().cloned());
    let lax = check_lax(&fa, &cat);
    failures.extend(lax.iter().cloned());
    let fun0 = fun0_failures(&fa, &cat);
    failures.extend(fun0.iter().map(|x| format!("not in Fun0 at {x}")));
    let factorizable = factorizable_check(&fa);
    let recovered = functor_to_algebra(&fa)?;
    let algebra_recovered = &recovered == a;
    if !algebra_recovered {
        failures.push("recovered algebra differs".into());
    }
    let conj = Conjugated::new(&fa, tensor_conjugators(&cat, a.dim(), seed))?;
    let b = functor_to_algebra(&conj)?;
    let fb = algebra_to_functor(&b, truncation)?;
    let iso = natural_iso_to(&conj, &fb, &cat)?;
    failures.extend(iso.failures.iter().cloned());
    Ok(RoundtripReport {
        truncation,
        functorial: fr.passed(),
        lax: lax.is_empty(),
        fun0: fun0.is_empty(),
        factorizable,
        algebra_recovered,
        natural_iso: iso.passed(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::qi;

    #[test]
    fn object_counts() {
        for n in 1..=5 {
            let cat = TwCategory::enumerate(n);
            assert_eq!(cat.objects.len(), (1..=n).map(|k| 1 << (k - 1)).sum::<usize>());
            assert!(cat.is_closed());
        }
        let cat = TwCategory::enumerate(2);
        assert!(cat.objects.contains(&TwObject::flat(2)));
        assert!(cat.objects.contains(&TwObject::sharp(2)));
    }

    #[test]
    fn twist_condition() {
        assert!(TwMorphism::new(TwObject::flat(2), TwObject::point(), vec![0, 0]).is_err());
        assert!(TwMorphism::new(TwObject::sharp(2), TwObject::point(), vec![0, 0]).is_ok());
        for x in TwCategory::enumerate(4).objects {
            assert!(TwMorphism::new(TwObject::sharp(x.len()), x.clone(), (0..x.len()).collect()).is_ok());
        }
        assert!(TwMorphism::new(TwObject::flat(2), TwObject::sharp(2), vec![0, 1]).is_err());
    }

    #[test]
    fn concatenation() {
        let pt = TwObject::point();
        assert_eq!(pt.star(&pt), TwObject::flat(2));
        let (s2, s1) = (TwObject::sharp(2), TwObject::sharp(1));
        let joined = s2.star(&s1);
        assert_eq!(joined.num_classes(), 2);
        assert_eq!(TwObject::sharp(3).num_classes(), 1);
        let objs = TwCategory::enumerate(2).objects;
        for x in &objs {
            for y in &objs {
                for z in &objs {
                    assert_eq!(x.star(y).star(z), x.star(&y.star(z)));
                }
            }
        }
    }

    #[test]
    fn adjunction() {
        assert!(sharp_adjunction_check(&TwCategory::enumerate(4)));
    }

    #[test]
    fn algebra_actions() {
        let zero = algebra_to_functor(&NonunitalAlgebra::zero(1), 3).unwrap();
        assert!(zero.action(&TwMorphism::collapse(2)).is_zero());
        let q = algebra_to_functor(&NonunitalAlgebra::rationals(), 3).unwrap();
        assert_eq!(q.action(&TwMorphism::collapse(2)), Matrix::from_ints(&[&[1]]));
        let n = algebra_to_functor(&NonunitalAlgebra::nilpotent3(), 3).unwrap();
        let merge = n.action(&TwMorphism::collapse(2));
        // e12 ⊗ e23 is basis vector 0*3+2, e23 ⊗ e12 is 2*3+0
        let mut v = vec![qi(0); 9];
        v[2] = qi(1);
        assert_eq!(merge.apply(&v), vec![qi(0), qi(1), qi(0)]);
        let mut w = vec![qi(0); 9];
        w[6] = qi(1);
        assert!(merge.apply(&w).iter().all(|x| x == &qi(0)));
    }

    #[test]
    fn roundtrips() {
        for a in [NonunitalAlgebra::zero(1), NonunitalAlgebra::rationals(), NonunitalAlgebra::nilpotent3()] {
            let r = mainc_roundtrip(&a, 3, 11).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let c = ConstantFunctor { truncation: 3 };
        assert_eq!(functor_to_algebra(&c).unwrap(), NonunitalAlgebra::rationals());
    }

    #[test]
    fn day_convolution_values() {
        let c = ConstantFunctor { truncation: 4 };
        let d = DayConvolution::new(&c, &c);
        assert_eq!(d.dim(&TwObject::flat(3)), 2);
        assert_eq!(d.dim(&TwObject::sharp(3)), 0);
        assert_eq!(d.dim(&TwObject::point()), 0);
        let cat = TwCategory::enumerate(4);
        assert!(check_functorial(&d, &cat).passed());
        let dd = DayConvolution::new(&d, &c);
        assert_eq!(dd.dim(&TwObject::flat(3)), 1);
        assert!(day_assoc_check(&c, &c, &c, &cat).passed());
    }

    #[test]
    fn day_associativity_for_algebras() {
        let cat = TwCategory::enumerate(4);
        let f = algebra_to_functor(&NonunitalAlgebra::nilpotent3(), 4).unwrap();
        let r = day_assoc_check(&f, &f, &f, &cat);
        assert!(r.passed(), "{:?}", r.failures);
        let z = algebra_to_functor(&NonunitalAlgebra::zero(1), 4).unwrap();
        let q = algebra_to_functor(&NonunitalAlgebra::rationals(), 4).unwrap();
        assert!(day_assoc_check(&q, &z, &f, &cat).passed());
    }

    #[test]
    fn factorizability() {
        let f = algebra_to_functor(&NonunitalAlgebra::nilpotent3(), 4).unwrap();
        assert!(factorizable_check(&f));
        let bad = ZeroStructure::new(&f);
        assert!(!factorizable_check(&bad));
        assert!(bad.monoidal(&TwObject::point(), &TwObject::point()).is_zero());
        assert!(check_lax(&bad, &TwCategory::enumerate(3)).is_empty());
        let ff = DayConvolution::new(&f, &f);
        assert!(!factorizable_check(&ff));
    }

    #[test]
    fn fun0_of_day_square_fails_on_sharp() {
        let f = algebra_to_functor(&NonunitalAlgebra::rationals(), 3).unwrap();
        let ff = DayConvolution::new(&f, &f);
        let cat = TwCategory::enumerate(3);
        let bad = fun0_failures(&ff, &cat);
        assert!(bad.contains(&TwObject::flat(2)));
    }
}
