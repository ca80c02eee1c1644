//! Points of the fiber product of two universal families: one broken line
//! carrying an `I`-section and a `J`-section.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::family::{extract_alpha, fiber_iso, validate_section, FamilyError, SectionViolation};
use crate::line::{fiber_over, BrokenLine, LineError, LinePoint, MarkedLine};
use crate::order::{enumerate_amalgams, enumerate_convex_equivalences, Amalgam, LinOrder, OrderError};
use crate::rep::{sample_in_stratum, RepError, RepPoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("left marks: {0}")]
    Left(SectionViolation),
    #[error("right marks: {0}")]
    Right(SectionViolation),
    #[error("amalgam is over different factors")]
    FactorMismatch,
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Line(#[from] LineError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Configuration {
    pub line: BrokenLine,
    pub i_marks: Vec<LinePoint>,
    pub j_marks: Vec<LinePoint>,
}

impl Configuration {
    pub fn new(
        left: &LinOrder,
        right: &LinOrder,
        line: BrokenLine,
        i_marks: Vec<LinePoint>,
        j_marks: Vec<LinePoint>,
    ) -> Result<Self, ConfigError> {
        validate_section(left, &MarkedLine { line, marks: i_marks.clone() }).map_err(ConfigError::Left)?;
        validate_section(right, &MarkedLine { line, marks: j_marks.clone() }).map_err(ConfigError::Right)?;
        Ok(Configuration { line, i_marks, j_marks })
    }

    /// All marks as one list, `I` first.
    pub fn marked_line(&self) -> MarkedLine {
        MarkedLine { line: self.line, marks: self.i_marks.iter().chain(&self.j_marks).cloned().collect() }
    }
}

/// `a ≤ b` iff `d(a, b) ≠ −∞`, i.e. `a` lies in a component no later than `b`.
pub fn k_of(left: &LinOrder, right: &LinOrder, config: &Configuration) -> Result<Amalgam, ConfigError> {
    let ranks = config.i_marks.iter().chain(&config.j_marks).map(|x| x.component - 1).collect();
    let pre = crate::order::LinPreorder::new(ranks)?;
    Ok(Amalgam::new(left.clone(), right.clone(), pre)?)
}

/// Membership in `U_K = {s : K ≤ K_s}`.
pub fn u_membership(config_k: &Amalgam, k: &Amalgam) -> Result<bool, ConfigError> {
    if config_k.left() != k.left() || config_k.right() != k.right() {
        return Err(ConfigError::FactorMismatch);
    }
    Ok(k.below(config_k))
}

/// The configuration over a point `α` of `Rep(K)`: its fiber with the marks split.
pub fn config_from_rep(k: &Amalgam, alpha: &RepPoint) -> Result<Configuration, ConfigError> {
    if alpha.base() != k.preorder() {
        return Err(RepError::BaseMismatch.into());
    }
    let fiber = fiber_over(alpha)?;
    let p = k.left().len();
    let (i, j) = fiber.marks.split_at(p);
    Configuration::new(k.left(), k.right(), fiber.line, i.to_vec(), j.to_vec())
}

/// The inverse encoding `s ↦ (K_s, α_s)`.
pub fn rep_from_config(
    left: &LinOrder,
    right: &LinOrder,
    config: &Configuration,
) -> Result<(Amalgam, RepPoint), ConfigError> {
    let k = k_of(left, right, config)?;
    let alpha = extract_alpha(k.preorder(), &config.marked_line())?;
    Ok((k, alpha))
}

/// True when the configuration and the fiber over its encoding are isomorphic
/// as marked lines (the isomorphism is then unique).
pub fn roundtrips(left: &LinOrder, right: &LinOrder, config: &Configuration) -> Result<bool, ConfigError> {
    let (_, alpha) = rep_from_config(left, right, config)?;
    let back = fiber_over(&alpha)?;
    Ok(fiber_iso(&config.marked_line(), &back).is_some())
}

/// Configurations over every stratum of every `Rep(K)`, `per_stratum` samples each.
pub fn sample_configurations(
    left: &LinOrder,
    right: &LinOrder,
    per_stratum: usize,
    seed: u64,
) -> Result<Vec<Configuration>, ConfigError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in enumerate_amalgams(left, right).elements {
        let (classes, proj) = k.preorder().quotient();
        for e in enumerate_convex_equivalences(&classes).elements {
            let e = e.pullback(&proj)?;
            for _ in 0..per_stratum {
                out.push(config_from_rep(&k, &sample_in_stratum(&e, &mut rng))?);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JoinViolation {
    pub config: usize,
    pub k: usize,
    pub k_prime: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JoinReport {
    pub amalgams: usize,
    pub configurations: usize,
    pub pairs_checked: usize,
    pub uncovered: Vec<usize>,
    pub violations: Vec<JoinViolation>,
}

impl JoinReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.uncovered.is_empty()
    }
}

/// Checks `U_{K ∨ K'} = U_K ∩ U_{K'}` pointwise on sampled configurations, and
/// that every configuration lies in some `U_K`.
pub fn verify_join_identity(
    left: &LinOrder,
    right: &LinOrder,
    per_stratum: usize,
    seed: u64,
) -> Result<JoinReport, ConfigError> {
    let poset = enumerate_amalgams(left, right);
    let configs = sample_configurations(left, right, per_stratum, seed)?;
    let n = poset.len();
    let joins: Vec<Vec<usize>> = (0..n).map(|a| (0..n).map(|b| poset.join(a, b)).collect()).collect();
    let mut violations = Vec::new();
    let mut uncovered = Vec::new();
    let mut pairs_checked = 0;
    for (c, config) in configs.iter().enumerate() {
        let ks = k_of(left, right, config)?;
        let member: Vec<bool> =
            poset.elements.iter().map(|k| u_membership(&ks, k)).collect::<Result<_, _>>()?;
        if !member.iter().any(|&m| m) {
            uncovered.push(c);
        }
        for a in 0..n {
            for b in 0..n {
                pairs_checked += 1;
                if member[joins[a][b]] != (member[a] && member[b]) {
                    violations.push(JoinViolation { config: c, k: a, k_prime: b });
                }
            }
        }
    }
    Ok(JoinReport { amalgams: n, configurations: configs.len(), pairs_checked, uncovered, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{qi, Ext};
    use crate::order::LinPreorder;

    fn pt() -> LinOrder {
        LinOrder::standard(1)
    }

    #[test]
    fn point_point() {
        let c = Configuration::new(
            &pt(),
            &pt(),
            BrokenLine::standard(),
            vec![LinePoint::interior(1, qi(0))],
            vec![LinePoint::interior(1, qi(4))],
        )
        .unwrap();
        let k = k_of(&pt(), &pt(), &c).unwrap();
        assert_eq!(k.preorder(), &LinPreorder::indiscrete(2).unwrap());
        assert!(u_membership(&k, &k).unwrap());
    }

    #[test]
    fn separate_components() {
        let two = LinOrder::standard(2);
        let c = Configuration::new(
            &two,
            &two,
            BrokenLine::new(2).unwrap(),
            vec![LinePoint::interior(1, qi(0)), LinePoint::interior(2, qi(0))],
            vec![LinePoint::interior(1, qi(1)), LinePoint::interior(2, qi(-1))],
        )
        .unwrap();
        let k = k_of(&two, &two, &c).unwrap();
        assert!(k.preorder().less(0, 1));
        assert!(k.preorder().equiv(0, 2));
        // the indiscrete amalgam is strictly above, so not a member
        let top = Amalgam::new(two.clone(), two.clone(), LinPreorder::new(vec![0, 0, 0, 0]).unwrap()).unwrap();
        assert!(!u_membership(&k, &top).unwrap());
        assert!(u_membership(&top, &k).unwrap());
    }

    #[test]
    fn section_required() {
        let two = LinOrder::standard(2);
        let err = Configuration::new(
            &two,
            &pt(),
            BrokenLine::new(2).unwrap(),
            vec![LinePoint::interior(1, qi(0)), LinePoint::interior(1, qi(1))],
            vec![LinePoint::interior(2, qi(0))],
        );
        assert!(matches!(err, Err(ConfigError::Left(SectionViolation::MissedComponent(2)))));
    }

    #[test]
    fn open_stratum_roundtrip() {
        let two = LinOrder::standard(2);
        for k in enumerate_amalgams(&two, &two).elements {
            let gaps: Vec<Ext> = k
                .preorder()
                .enumeration()
                .windows(2)
                .map(|w| if k.preorder().equiv(w[0], w[1]) { Ext::fin(1, 1) } else { Ext::PosInf })
                .collect();
            let alpha = RepPoint::from_gaps_on(k.preorder().clone(), gaps).unwrap();
            let c = config_from_rep(&k, &alpha).unwrap();
            assert_eq!(k_of(&two, &two, &c).unwrap(), k);
            assert!(roundtrips(&two, &two, &c).unwrap());
        }
    }

    #[test]
    fn join_identity_small() {
        let r = verify_join_identity(&pt(), &pt(), 3, 1).unwrap();
        assert_eq!(r.amalgams, 1);
        assert!(r.passed());
        let two = LinOrder::standard(2);
        let r = verify_join_identity(&two, &two, 4, 7).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.configurations > 0);
    }
}
