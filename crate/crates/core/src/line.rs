//! Broken lines as concrete combinatorial objects.
//!
//! A broken line with `m` components is the concatenation of `m` copies of
//! `[−∞, ∞]`; it is determined by `m`. Points are `(component, coordinate)`
//! pairs with components numbered `1..=m`, and the glued fixed points are
//! written in the canonical form `(a + 1, −∞)` rather than `(a, +∞)`.

use std::cmp::Ordering;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ext::{Ext, ExtError, Q};
use crate::order::LinPreorder;
use crate::rep::{RepError, RepPoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("a broken line has at least one component")]
    NoComponents,
    #[error("component {component} is outside 1..={m}")]
    BadComponent { component: usize, m: usize },
    #[error("translation distance is only defined from a non-fixed point")]
    FixedSource,
    #[error("isomorphisms need lines with the same number of components ({0} vs {1})")]
    ComponentMismatch(usize, usize),
    #[error("shift vector has {got} entries, expected {expected}")]
    ShiftLength { expected: usize, got: usize },
    #[error(transparent)]
    Ext(#[from] ExtError),
    #[error(transparent)]
    Rep(#[from] RepError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BrokenLine {
    m: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinePoint {
    pub component: usize,
    pub coord: Ext,
}

impl Serialize for LinePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct P {
            a: usize,
            t: String,
        }
        P { a: self.component, t: self.coord.to_line_token() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct P {
            a: usize,
            t: String,
        }
        let p = P::deserialize(d)?;
        let coord = Ext::from_line_token(&p.t).map_err(serde::de::Error::custom)?;
        Ok(LinePoint { component: p.a, coord })
    }
}

impl LinePoint {
    pub fn new(component: usize, coord: Ext) -> Self {
        LinePoint { component, coord }
    }

    pub fn interior(component: usize, coord: Q) -> Self {
        LinePoint { component, coord: Ext::Fin(coord) }
    }

    pub fn is_fixed(&self) -> bool {
        !self.coord.is_finite()
    }
}

impl BrokenLine {
    pub fn new(m: usize) -> Result<Self, LineError> {
        if m == 0 {
            Err(LineError::NoComponents)
        } else {
            Ok(BrokenLine { m })
        }
    }

    /// The standard unbroken line `[−∞, ∞]`.
    pub fn standard() -> Self {
        BrokenLine { m: 1 }
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn fixed_point_count(&self) -> usize {
        self.m + 1
    }

    pub fn initial(&self) -> LinePoint {
        LinePoint::new(1, Ext::NegInf)
    }

    pub fn terminal(&self) -> LinePoint {
        LinePoint::new(self.m, Ext::PosInf)
    }

    /// Fixed points in increasing order.
    pub fn fixed_points(&self) -> Vec<LinePoint> {
        let mut out: Vec<LinePoint> = (1..=self.m).map(|a| LinePoint::new(a, Ext::NegInf)).collect();
        out.push(self.terminal());
        out
    }

    /// Rewrites `(a, +∞)` as `(a + 1, −∞)` for `a < m` and checks the component.
    pub fn canonical(&self, x: &LinePoint) -> Result<LinePoint, LineError> {
        if x.component == 0 || x.component > self.m {
            return Err(LineError::BadComponent { component: x.component, m: self.m });
        }
        if x.coord == Ext::PosInf && x.component < self.m {
            Ok(LinePoint::new(x.component + 1, Ext::NegInf))
        } else {
            Ok(x.clone())
        }
    }

    /// Lexicographic order on canonical `(component, coordinate)`.
    pub fn compare(&self, x: &LinePoint, y: &LinePoint) -> Result<Ordering, LineError> {
        let (x, y) = (self.canonical(x)?, self.canonical(y)?);
        Ok(x.component.cmp(&y.component).then_with(|| x.coord.cmp(&y.coord)))
    }

    /// The `R`-action: interior points move by `t` inside their component.
    pub fn translate(&self, t: &Q, x: &LinePoint) -> Result<LinePoint, LineError> {
        let x = self.canonical(x)?;
        Ok(LinePoint::new(x.component, x.coord.add_rational(t)))
    }

    /// Flow time from the non-fixed point `x` to `y`; `±∞` across components.
    pub fn translation_distance(&self, x: &LinePoint, y: &LinePoint) -> Result<Ext, LineError> {
        let (x, y) = (self.canonical(x)?, self.canonical(y)?);
        let xc = x.coord.finite().ok_or(LineError::FixedSource)?;
        Ok(match x.component.cmp(&y.component) {
            Ordering::Less => Ext::PosInf,
            Ordering::Greater => Ext::NegInf,
            Ordering::Equal => match &y.coord {
                Ext::Fin(yc) => Ext::Fin(yc - xc),
                inf => inf.clone(),
            },
        })
    }

    /// `self ⋆ other` with the embeddings of both factors.
    pub fn concatenate(&self, other: &BrokenLine) -> Concatenation {
        Concatenation { line: BrokenLine { m: self.m + other.m }, offset: self.m }
    }

    /// Isomorphisms `self → other`: `None` when the component counts differ,
    /// otherwise every shift vector in `Q^m` gives one.
    pub fn hom_set(&self, other: &BrokenLine) -> Option<HomSet> {
        (self.m == other.m).then_some(HomSet { m: self.m })
    }
}

/// The result of concatenating two broken lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Concatenation {
    pub line: BrokenLine,
    offset: usize,
}

impl Concatenation {
    pub fn embed_left(&self, x: &LinePoint) -> LinePoint {
        x.clone()
    }

    pub fn embed_right(&self, x: &LinePoint) -> LinePoint {
        LinePoint::new(x.component + self.offset, x.coord.clone())
    }
}

/// The hom-set between two broken lines with the same number of components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HomSet {
    m: usize,
}

impl HomSet {
    pub fn iso(&self, shifts: Vec<Q>) -> Result<LineIso, LineError> {
        LineIso::new(self.m, shifts)
    }

    pub fn identity(&self) -> LineIso {
        LineIso::identity(self.m)
    }
}

/// An `R`-equivariant isomorphism of broken lines: a translation on each component.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LineIso {
    shifts: Vec<Q>,
}

impl LineIso {
    pub fn new(m: usize, shifts: Vec<Q>) -> Result<Self, LineError> {
        if shifts.len() != m {
            return Err(LineError::ShiftLength { expected: m, got: shifts.len() });
        }
        Ok(LineIso { shifts })
    }

    pub fn identity(m: usize) -> Self {
        LineIso { shifts: vec![Q::zero(); m] }
    }

    pub fn shifts(&self) -> &[Q] {
        &self.shifts
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &LineIso) -> Result<LineIso, LineError> {
        if self.shifts.len() != other.shifts.len() {
            return Err(LineError::ComponentMismatch(self.shifts.len(), other.shifts.len()));
        }
        Ok(LineIso { shifts: self.shifts.iter().zip(&other.shifts).map(|(a, b)| a + b).collect() })
    }

    pub fn inverse(&self) -> LineIso {
        LineIso { shifts: self.shifts.iter().map(|s| -s).collect() }
    }

    pub fn apply(&self, x: &LinePoint) -> LinePoint {
        LinePoint::new(x.component, x.coord.add_rational(&self.shifts[x.component - 1]))
    }

    pub fn is_identity(&self) -> bool {
        self.shifts.iter().all(Zero::is_zero)
    }
}

/// The unique isomorphism carrying the marks `xs` on `source` to `ys` on
/// `target`, if one exists. Marks must be interior and hit every component.
pub fn marked_iso(
    source: &BrokenLine,
    xs: &[LinePoint],
    target: &BrokenLine,
    ys: &[LinePoint],
) -> Option<LineIso> {
    if source.m != target.m || xs.len() != ys.len() {
        return None;
    }
    let mut shifts: Vec<Option<Q>> = vec![None; source.m];
    for (x, y) in xs.iter().zip(ys) {
        if x.component != y.component {
            return None;
        }
        let (xc, yc) = (x.coord.finite()?, y.coord.finite()?);
        let s = yc - xc;
        match &shifts[x.component - 1] {
            Some(prev) if prev != &s => return None,
            Some(_) => {}
            None => shifts[x.component - 1] = Some(s),
        }
    }
    let shifts: Option<Vec<Q>> = shifts.into_iter().collect();
    Some(LineIso { shifts: shifts? })
}

/// A broken line with one mark per element of an index preorder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedLine {
    pub line: BrokenLine,
    pub marks: Vec<LinePoint>,
}

/// The fiber of the universal family over `α`, with its canonical marks.
///
/// Components are the finite-distance classes of `α` in increasing order. In
/// each class the basepoint is the element of highest rank (largest label on
/// ties), and element `j` sits at coordinate `−α(j, basepoint)`.
pub fn fiber_over(alpha: &RepPoint) -> Result<MarkedLine, LineError> {
    let classes = alpha.stratum_of()?.classes();
    let base: &LinPreorder = alpha.base();
    let mut marks = vec![LinePoint::new(1, Ext::zero()); alpha.len()];
    for (a, class) in classes.iter().enumerate() {
        let basepoint = *class
            .iter()
            .max_by_key(|&&i| (base.rank(i), i))
            .expect("classes are nonempty");
        for &j in class {
            let d = alpha.at(j, basepoint).finite().expect("same class").clone();
            marks[j] = LinePoint::interior(a + 1, -d);
        }
    }
    Ok(MarkedLine { line: BrokenLine::new(classes.len())?, marks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{q, qi};

    #[test]
    fn fibers() {
        let f = fiber_over(&RepPoint::point()).unwrap();
        assert_eq!(f.line.components(), 1);
        assert_eq!(f.marks, vec![LinePoint::interior(1, qi(0))]);

        let f = fiber_over(&RepPoint::from_gaps(vec![Ext::PosInf]).unwrap()).unwrap();
        assert_eq!(f.line.components(), 2);
        assert_eq!(f.marks, vec![LinePoint::interior(1, qi(0)), LinePoint::interior(2, qi(0))]);

        let f = fiber_over(&RepPoint::from_gaps(vec![Ext::fin(1, 1), Ext::PosInf]).unwrap()).unwrap();
        assert_eq!(f.line.components(), 2);
        assert_eq!(
            f.marks,
            vec![
                LinePoint::interior(1, qi(-1)),
                LinePoint::interior(1, qi(0)),
                LinePoint::interior(2, qi(0))
            ]
        );
    }

    #[test]
    fn order_of_points() {
        let l = BrokenLine::new(2).unwrap();
        let x = LinePoint::interior(1, qi(3));
        let y = LinePoint::interior(2, qi(-5));
        assert_eq!(l.compare(&x, &y).unwrap(), Ordering::Less);
        assert_eq!(l.compare(&l.initial(), &x).unwrap(), Ordering::Less);
        assert_eq!(l.compare(&y, &l.terminal()).unwrap(), Ordering::Less);
        // the glued fixed point has two names
        let glued = LinePoint::new(1, Ext::PosInf);
        assert_eq!(l.compare(&glued, &LinePoint::new(2, Ext::NegInf)).unwrap(), Ordering::Equal);
        assert!(l.compare(&LinePoint::interior(3, qi(0)), &x).is_err());
    }

    #[test]
    fn action() {
        let l = BrokenLine::new(2).unwrap();
        let x = LinePoint::interior(1, qi(2));
        assert_eq!(l.translate(&qi(0), &x).unwrap(), x);
        assert_eq!(l.translate(&qi(-5), &x).unwrap(), LinePoint::interior(1, qi(-3)));
        let fixed = LinePoint::new(2, Ext::NegInf);
        assert_eq!(l.translate(&q(7, 3), &fixed).unwrap(), fixed);
    }

    #[test]
    fn distances() {
        let l = BrokenLine::standard();
        let d = l
            .translation_distance(&LinePoint::interior(1, qi(1)), &LinePoint::interior(1, qi(4)))
            .unwrap();
        assert_eq!(d, Ext::Fin(qi(3)));
        let l2 = BrokenLine::new(2).unwrap();
        let (x, y) = (LinePoint::interior(1, qi(0)), LinePoint::interior(2, qi(0)));
        assert_eq!(l2.translation_distance(&x, &y).unwrap(), Ext::PosInf);
        assert_eq!(l2.translation_distance(&y, &x).unwrap(), Ext::NegInf);
        assert_eq!(l2.translation_distance(&x, &l2.terminal()).unwrap(), Ext::PosInf);
        assert_eq!(l2.translation_distance(&y, &LinePoint::new(2, Ext::NegInf)).unwrap(), Ext::NegInf);
        assert_eq!(
            l2.translation_distance(&l2.initial(), &x),
            Err(LineError::FixedSource)
        );
    }

    #[test]
    fn concatenation() {
        let l = BrokenLine::standard();
        let c = l.concatenate(&l);
        assert_eq!(c.line.components(), 2);
        assert_eq!(c.embed_right(&l.initial()), LinePoint::new(2, Ext::NegInf));
        // terminal of the left factor is the initial point of the right one
        assert_eq!(
            c.line.compare(&c.embed_left(&l.terminal()), &c.embed_right(&l.initial())).unwrap(),
            Ordering::Equal
        );
        let (a, b, d) = (BrokenLine::new(2).unwrap(), BrokenLine::new(1).unwrap(), BrokenLine::new(3).unwrap());
        assert_eq!(a.concatenate(&b).line.concatenate(&d).line, a.concatenate(&b.concatenate(&d).line).line);
    }

    #[test]
    fn isomorphisms() {
        let (one, two) = (BrokenLine::standard(), BrokenLine::new(2).unwrap());
        assert!(one.hom_set(&two).is_none());
        let h = two.hom_set(&two).unwrap();
        assert!(h.identity().is_identity());
        let g = h.iso(vec![q(1, 2), qi(-3)]).unwrap();
        assert!(g.then(&g.inverse()).unwrap().is_identity());
        assert!(h.iso(vec![qi(1)]).is_err());
    }

    #[test]
    fn marked_isomorphism_is_unique_when_it_exists() {
        let l = BrokenLine::new(2).unwrap();
        let xs = vec![LinePoint::interior(1, qi(0)), LinePoint::interior(1, qi(2)), LinePoint::interior(2, qi(5))];
        let ys = vec![LinePoint::interior(1, qi(1)), LinePoint::interior(1, qi(3)), LinePoint::interior(2, qi(0))];
        let g = marked_iso(&l, &xs, &l, &ys).unwrap();
        assert_eq!(g.shifts(), &[qi(1), qi(-5)]);
        let bad = vec![LinePoint::interior(1, qi(1)), LinePoint::interior(1, qi(4)), LinePoint::interior(2, qi(0))];
        assert!(marked_iso(&l, &xs, &l, &bad).is_none());
    }

    #[test]
    fn json_forms() {
        let p = LinePoint::new(2, Ext::NegInf);
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"a":2,"t":"-inf"}"#);
        let l = BrokenLine::new(3).unwrap();
        assert_eq!(serde_json::to_string(&l).unwrap(), r#"{"m":3}"#);
        let back: LinePoint = serde_json::from_str(r#"{"a":1,"t":"3/4"}"#).unwrap();
        assert_eq!(back, LinePoint::interior(1, q(3, 4)));
    }
}
