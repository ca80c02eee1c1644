//! Finitely sampled families of broken lines with `I`-sections.
//!
//! A family is a list of samples, each a point of `Rep(I)`, together with
//! declared edges (consecutive samples along a path) and declared limit
//! samples. The fiber over a sample is [`fiber_over`] and its marks form the
//! canonical section.

use std::collections::BTreeMap;

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ext::{Ext, Q};
use crate::line::{fiber_over, marked_iso, BrokenLine, LineError, LineIso, LinePoint, MarkedLine};
use crate::order::{ConvexEquiv, LinPreorder};
use crate::rep::{RepError, RepPoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("sample {id:?} lives on a different index preorder")]
    IndexMismatch { id: String },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("unknown sample id {0:?}")]
    UnknownId(String),
    #[error("sample {id:?}: {source}")]
    Sample { id: String, source: RepError },
    #[error("section violates {0}")]
    Section(#[from] SectionViolation),
    #[error(transparent)]
    Line(#[from] LineError),
}

/// Ways a list of marks can fail to be an `I`-section of one fiber.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum SectionViolation {
    #[error("mark count {got} differs from the index size {expected}")]
    Count { expected: usize, got: usize },
    #[error("mark {0} is outside the line")]
    OffLine(usize),
    #[error("mark {0} is a fixed point")]
    Fixed(usize),
    #[error("d(σ_{0}, σ_{1}) = −∞ although {0} ≤ {1}")]
    Backwards(usize, usize),
    #[error("component {0} carries no mark")]
    MissedComponent(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub point: RepPoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledFamily {
    index: LinPreorder,
    samples: Vec<Sample>,
    edges: Vec<(String, String)>,
    limits: Vec<String>,
}

impl SampledFamily {
    pub fn new(index: LinPreorder, samples: Vec<Sample>) -> Result<Self, FamilyError> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &samples {
            if !seen.insert(s.id.clone()) {
                return Err(FamilyError::DuplicateId(s.id.clone()));
            }
            if s.point.base() != &index {
                return Err(FamilyError::IndexMismatch { id: s.id.clone() });
            }
            s.point
                .validate()
                .map_err(|v| FamilyError::Sample { id: s.id.clone(), source: RepError::Invalid(v) })?;
        }
        Ok(SampledFamily { index, samples, edges: Vec::new(), limits: Vec::new() })
    }

    /// Declares consecutive samples along a path and the samples that are limits.
    pub fn with_path(
        mut self,
        edges: Vec<(String, String)>,
        limits: Vec<String>,
    ) -> Result<Self, FamilyError> {
        for id in edges.iter().flat_map(|(a, b)| [a, b]).chain(&limits) {
            if self.position(id).is_none() {
                return Err(FamilyError::UnknownId(id.clone()));
            }
        }
        self.edges = edges;
        self.limits = limits;
        Ok(self)
    }

    pub fn index(&self) -> &LinPreorder {
        &self.index
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn limits(&self) -> &[String] {
        &self.limits
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.samples.iter().position(|s| s.id == id)
    }

    fn is_limit(&self, id: &str) -> bool {
        self.limits.iter().any(|l| l == id)
    }
}

/// Fibers of the universal family over the given samples, with canonical sections.
pub fn build_family(
    index: LinPreorder,
    samples: Vec<Sample>,
) -> Result<(SampledFamily, Vec<MarkedLine>), FamilyError> {
    let family = SampledFamily::new(index, samples)?;
    let fibers = family
        .samples
        .iter()
        .map(|s| {
            let f = fiber_over(&s.point)?;
            validate_section(&family.index, &f)?;
            Ok(f)
        })
        .collect::<Result<Vec<_>, FamilyError>>()?;
    Ok((family, fibers))
}

/// Checks the section clauses for one fiber: interior marks, `d(σ_i, σ_j) > −∞`
/// for `i ≤ j`, and every component hit.
pub fn validate_section(index: &LinPreorder, fiber: &MarkedLine) -> Result<(), SectionViolation> {
    let n = index.len();
    let line = &fiber.line;
    if fiber.marks.len() != n {
        return Err(SectionViolation::Count { expected: n, got: fiber.marks.len() });
    }
    for (i, x) in fiber.marks.iter().enumerate() {
        if line.canonical(x).is_err() {
            return Err(SectionViolation::OffLine(i));
        }
        if x.is_fixed() {
            return Err(SectionViolation::Fixed(i));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if index.leq(i, j) {
                let d = line
                    .translation_distance(&fiber.marks[i], &fiber.marks[j])
                    .expect("marks are interior");
                if d == Ext::NegInf {
                    return Err(SectionViolation::Backwards(i, j));
                }
            }
        }
    }
    for a in 1..=line.components() {
        if !fiber.marks.iter().any(|x| x.component == a) {
            return Err(SectionViolation::MissedComponent(a));
        }
    }
    Ok(())
}

/// `α(i, j) = d(σ_i, σ_j)` for `i ≤ j`.
pub fn extract_alpha(index: &LinPreorder, fiber: &MarkedLine) -> Result<RepPoint, FamilyError> {
    validate_section(index, fiber)?;
    let n = index.len();
    let table = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    index.leq(i, j).then(|| {
                        fiber
                            .line
                            .translation_distance(&fiber.marks[i], &fiber.marks[j])
                            .expect("marks are interior")
                    })
                })
                .collect()
        })
        .collect();
    let alpha = RepPoint::from_table(index.clone(), table);
    alpha.validate().map_err(|v| FamilyError::Sample { id: String::new(), source: RepError::Invalid(v) })?;
    Ok(alpha)
}

/// The unique isomorphism between two marked fibers, if any.
pub fn fiber_iso(a: &MarkedLine, b: &MarkedLine) -> Option<LineIso> {
    marked_iso(&a.line, &a.marks, &b.line, &b.marks)
}

/// Moves the marks on component `a` by `shifts[a - 1]`.
pub fn shift_marks(fiber: &MarkedLine, shifts: &[Q]) -> MarkedLine {
    let marks = fiber
        .marks
        .iter()
        .map(|x| LinePoint::new(x.component, x.coord.add_rational(&shifts[x.component - 1])))
        .collect();
    MarkedLine { line: fiber.line, marks }
}

/// Fiberwise concatenation over all pairs of samples, ids joined as `s|t`.
pub fn concat_families(
    (f, f_fibers): (&SampledFamily, &[MarkedLine]),
    (g, g_fibers): (&SampledFamily, &[MarkedLine]),
) -> Result<(SampledFamily, Vec<MarkedLine>), FamilyError> {
    let index = f.index.concat(&g.index);
    let mut samples = Vec::new();
    let mut fibers = Vec::new();
    for (s, fs) in f.samples.iter().zip(f_fibers) {
        for (t, gt) in g.samples.iter().zip(g_fibers) {
            let c = fs.line.concatenate(&gt.line);
            let marks = fs
                .marks
                .iter()
                .map(|x| c.embed_left(x))
                .chain(gt.marks.iter().map(|y| c.embed_right(y)))
                .collect();
            let fiber = MarkedLine { line: c.line, marks };
            samples.push(Sample {
                id: format!("{}|{}", s.id, t.id),
                point: extract_alpha(&index, &fiber)?,
            });
            fibers.push(fiber);
        }
    }
    Ok((SampledFamily::new(index, samples)?, fibers))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathViolation {
    /// The stratum changes along an edge without moving toward a declared limit.
    StratumJump { from: String, to: String },
    /// The stratum changes toward a limit but the limit is not finer.
    LimitNotFiner { limit: String, other: String },
    /// A finite distance moves by at least `δ` in the compactified coordinate.
    Discontinuity { from: String, to: String, i: usize, j: usize },
    /// A fiber's marks are not a section.
    BadFiber { id: String, violation: SectionViolation },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub edges_checked: usize,
    pub fibers_checked: usize,
    pub violations: Vec<PathViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sampled shadow of the recognition axioms along the declared edges.
///
/// Along an edge the finite-distance stratum may only change when one end is a
/// declared limit, and then the limit's stratum must be strictly finer. Where a
/// distance is finite at both ends, its compactified value `x/(1+|x|)` may move
/// by less than `delta`. Every fiber must carry a valid section.
pub fn check_axioms_on_path(
    family: &SampledFamily,
    fibers: &[MarkedLine],
    delta: &Q,
) -> Result<AxiomReport, FamilyError> {
    let mut violations = Vec::new();
    for (s, fiber) in family.samples.iter().zip(fibers) {
        if let Err(v) = validate_section(&family.index, fiber) {
            violations.push(PathViolation::BadFiber { id: s.id.clone(), violation: v });
        }
    }
    let strata: BTreeMap<&str, ConvexEquiv> = family
        .samples
        .iter()
        .map(|s| {
            s.point
                .stratum_of()
                .map(|e| (s.id.as_str(), e))
                .map_err(|e| FamilyError::Sample { id: s.id.clone(), source: e })
        })
        .collect::<Result<_, _>>()?;
    let n = family.index.len();
    for (a, b) in &family.edges {
        let (ea, eb) = (&strata[a.as_str()], &strata[b.as_str()]);
        if ea != eb {
            match (family.is_limit(a), family.is_limit(b)) {
                (false, false) => violations.push(PathViolation::StratumJump { from: a.clone(), to: b.clone() }),
                (la, _) => {
                    let (limit, other, el, eo) = if la { (a, b, ea, eb) } else { (b, a, eb, ea) };
                    if !el.refines(eo) {
                        violations.push(PathViolation::LimitNotFiner { limit: limit.clone(), other: other.clone() });
                    }
                }
            }
        }
        let (pa, pb) = (
            &family.samples[family.position(a).expect("checked")].point,
            &family.samples[family.position(b).expect("checked")].point,
        );
        for i in 0..n {
            for j in 0..n {
                if !family.index.leq(i, j) {
                    continue;
                }
                let (x, y) = (pa.at(i, j), pb.at(i, j));
                if x.is_finite() && y.is_finite() {
                    let jump = x.compactified() - y.compactified();
                    if jump.abs() >= *delta {
                        violations.push(PathViolation::Discontinuity { from: a.clone(), to: b.clone(), i, j });
                    }
                }
            }
        }
    }
    Ok(AxiomReport { edges_checked: family.edges.len(), fibers_checked: fibers.len(), violations })
}

/// The standard path degenerating one line into two: `I = [1]` with gaps
/// `0, 1, 2` at `t = 1, 1/2, 1/4` and `∞` at the limit `t = 0`.
///
/// The gap at `t` is `−log₂ t`, which keeps every value rational on this grid.
pub fn easybreak_family() -> SampledFamily {
    let index = crate::order::LinOrder::standard(2).as_preorder().clone();
    let gaps = [("t=1", Ext::fin(0, 1)), ("t=1/2", Ext::fin(1, 1)), ("t=1/4", Ext::fin(2, 1)), ("t=0", Ext::PosInf)];
    let samples = gaps
        .iter()
        .map(|(id, g)| Sample { id: id.to_string(), point: RepPoint::from_gaps(vec![g.clone()]).expect("valid gap") })
        .collect();
    let edges = gaps.windows(2).map(|w| (w[0].0.to_string(), w[1].0.to_string())).collect();
    SampledFamily::new(index, samples)
        .and_then(|f| f.with_path(edges, vec!["t=0".into()]))
        .expect("well-formed")
}

/// On-disk form of a family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFile {
    pub index: LinPreorder,
    pub samples: Vec<SampleFile>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub limits: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleFile {
    pub id: String,
    pub gaps: Vec<Ext>,
}

impl FamilyFile {
    pub fn into_family(self) -> Result<SampledFamily, FamilyError> {
        let samples = self
            .samples
            .into_iter()
            .map(|s| {
                RepPoint::from_gaps_on(self.index.clone(), s.gaps)
                    .map(|point| Sample { id: s.id.clone(), point })
                    .map_err(|e| FamilyError::Sample { id: s.id, source: e })
            })
            .collect::<Result<Vec<_>, _>>()?;
        SampledFamily::new(self.index, samples)?.with_path(self.edges, self.limits)
    }

    pub fn from_family(f: &SampledFamily) -> Self {
        FamilyFile {
            index: f.index.clone(),
            samples: f.samples.iter().map(|s| SampleFile { id: s.id.clone(), gaps: s.point.gaps() }).collect(),
            edges: f.edges.clone(),
            limits: f.limits.clone(),
        }
    }
}

/// Number of components of each fiber, in sample order.
pub fn component_counts(fibers: &[MarkedLine]) -> Vec<usize> {
    fibers.iter().map(|f| BrokenLine::components(&f.line)).collect()
}
