//! The acceptance suite: nine end-to-end checks, each with a time budget.
//!
//! Every check returns a [`Criterion`]; a criterion passes only when all its
//! assertions hold and it finishes inside its budget.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ext::{qi, Ext};
use crate::family::{build_family, easybreak_family, extract_alpha, fiber_iso, shift_marks, Sample};
use crate::fiber_product::verify_join_identity;
use crate::line::{fiber_over, LineIso};
use crate::linalg::NonunitalAlgebra;
use crate::morse::{run_demo, MorseConfig, SurfaceModel};
use crate::oracle;
use crate::order::{
    enumerate_amalgams, enumerate_convex_equivalences, enumerate_linear_preorders, enumerate_surjections, LinOrder,
    LinPreorder,
};
use crate::rep::{sample_in_stratum, RepPoint};
use crate::sheaf::{evaluate_on_family, pullback_compatible, GlobalSheaf};
use crate::tw::{
    algebra_to_functor, day_assoc_check, mainc_roundtrip, ConstantFunctor, DayConvolution, TwCategory, TwFunctor,
    TwObject,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptConfig {
    pub truncation: usize,
    pub seed: u64,
    pub morse: MorseConfig,
}

impl Default for AcceptConfig {
    fn default() -> Self {
        AcceptConfig { truncation: 4, seed: 20240607, morse: MorseConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub checks_passed: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub detail: String,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {}: {} ({:.2}s of {:.0}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

fn timed(id: usize, name: &str, budget: f64, run: impl FnOnce() -> Result<String, String>) -> Criterion {
    let start = Instant::now();
    let outcome = run();
    let seconds = start.elapsed().as_secs_f64();
    let (checks_passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Criterion {
        id,
        name: name.to_string(),
        passed: checks_passed && seconds < budget,
        checks_passed,
        seconds,
        budget_seconds: budget,
        detail,
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub const CRITERIA: [&str; 9] = [
    "algebra roundtrip",
    "global to constructible",
    "fiber-product covering",
    "classification",
    "stratification",
    "day convolution",
    "representability",
    "cospecialization",
    "morse demo",
];

pub fn run(id: usize, cfg: &AcceptConfig) -> Criterion {
    match id {
        1 => algebra_roundtrip(cfg),
        2 => global_to_constructible_check(cfg),
        3 => fiber_product_covering(cfg),
        4 => classification(cfg),
        5 => stratification(cfg),
        6 => day_convolution(cfg),
        7 => representability(cfg),
        8 => cospecialization(cfg),
        9 => morse_demo(cfg),
        _ => panic!("criteria are numbered 1 to 9"),
    }
}

pub fn run_all(cfg: &AcceptConfig) -> Vec<Criterion> {
    (1..=CRITERIA.len()).map(|id| run(id, cfg)).collect()
}

fn reference_algebras() -> [(&'static str, NonunitalAlgebra); 3] {
    [("zero1", NonunitalAlgebra::zero(1)), ("nilpotent3", NonunitalAlgebra::nilpotent3()), ("matrix2", NonunitalAlgebra::matrix2())]
}

pub fn algebra_roundtrip(cfg: &AcceptConfig) -> Criterion {
    timed(1, CRITERIA[0], 10.0, || {
        let mut names = Vec::new();
        for (name, a) in reference_algebras() {
            let r = mainc_roundtrip(&a, cfg.truncation, cfg.seed).map_err(|e| format!("{name}: {e}"))?;
            ensure(r.passed(), || format!("{name}: {:?}", r.failures))?;
            names.push(name);
        }
        Ok(format!("both directions exact at N={} for {}", cfg.truncation, names.join(", ")))
    })
}

pub fn global_to_constructible_check(_cfg: &AcceptConfig) -> Criterion {
    timed(2, CRITERIA[1], 10.0, || {
        let max = 4;
        let mut sheaves: Vec<(String, GlobalSheaf)> = reference_algebras()
            .into_iter()
            .chain([("rationals", NonunitalAlgebra::rationals())])
            .map(|(n, a)| (n.to_string(), GlobalSheaf::from_algebra(&a, max - 1)))
            .collect();
        sheaves.push(("constant2".into(), GlobalSheaf::constant(2, max - 1)));
        let mut maps = 0;
        for (name, f) in &sheaves {
            // a serialized sheaf is re-validated on the way back in
            let json = serde_json::to_string(f).map_err(|e| e.to_string())?;
            let back: GlobalSheaf = serde_json::from_str(&json).map_err(|e| format!("{name}: {e}"))?;
            ensure(&back == f, || format!("{name}: JSON roundtrip differs"))?;
            for n in 1..=max {
                for m in 1..=n {
                    for s in enumerate_surjections(&LinOrder::standard(n), &LinOrder::standard(m)) {
                        let ok = pullback_compatible(f, &s).map_err(|e| e.to_string())?;
                        ensure(ok, || format!("{name}: square fails for {:?}", s.map()))?;
                        maps += 1;
                    }
                }
            }
        }
        Ok(format!("{maps} surjections × all target strata over {} sheaves", sheaves.len()))
    })
}

pub fn fiber_product_covering(cfg: &AcceptConfig) -> Criterion {
    timed(3, CRITERIA[2], 30.0, || {
        let (mut configs, mut pairs) = (0, 0);
        for p in 1..=3 {
            for q in 1..=3 {
                let (left, right) = (LinOrder::standard(p), LinOrder::standard(q));
                let poset = enumerate_amalgams(&left, &right);
                let ours: std::collections::BTreeSet<Vec<usize>> =
                    poset.elements.iter().map(|k| k.preorder().ranks().to_vec()).collect();
                ensure(ours == oracle::amalgams(p, q), || format!("Amal([{p}],[{q}]) differs from brute force"))?;
                let n = poset.len();
                for a in 0..n {
                    for b in 0..n {
                        let j = poset.join(a, b);
                        let upper = poset.le[a][j] && poset.le[b][j];
                        let least = (0..n).all(|c| !(poset.le[a][c] && poset.le[b][c]) || poset.le[j][c]);
                        ensure(upper && least, || format!("join of {a},{b} in Amal([{p}],[{q}]) is not least"))?;
                    }
                }
                let r = verify_join_identity(&left, &right, 2, cfg.seed).map_err(|e| e.to_string())?;
                ensure(r.passed(), || format!("|I|={p} |J|={q}: {} violations, {} uncovered", r.violations.len(), r.uncovered.len()))?;
                configs += r.configurations;
                pairs += r.pairs_checked;
            }
        }
        Ok(format!("{configs} configurations, {pairs} amalgam pairs, zero violations"))
    })
}

/// A point of `Rep(I)` in a random stratum, for a random linear preorder `I` of size `n`.
fn random_point(n: usize, rng: &mut ChaCha8Rng) -> RepPoint {
    let pres = enumerate_linear_preorders(n).expect("n > 0");
    let index = pres.choose(rng).expect("nonempty").clone();
    random_point_on(&index, rng)
}

fn random_point_on(index: &LinPreorder, rng: &mut ChaCha8Rng) -> RepPoint {
    let (classes, proj) = index.quotient();
    let strata = enumerate_convex_equivalences(&classes).elements;
    let e = strata.choose(rng).expect("nonempty").pullback(&proj).expect("quotient map");
    sample_in_stratum(&e, rng)
}

pub fn classification(cfg: &AcceptConfig) -> Criterion {
    timed(4, CRITERIA[3], 5.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for k in 0..200 {
            let n = rng.gen_range(1..=5);
            let alpha = random_point(n, &mut rng);
            alpha.validate().map_err(|v| format!("sample {k}: {v:?}"))?;
            let fiber = fiber_over(&alpha).map_err(|e| e.to_string())?;
            let classes = alpha.stratum_of().map_err(|e| e.to_string())?.num_classes();
            ensure(fiber.line.components() == classes, || format!("sample {k}: {} components vs {classes} classes", fiber.line.components()))?;
            let d = |i: usize, j: usize| fiber.line.translation_distance(&fiber.marks[i], &fiber.marks[j]).expect("interior marks");
            for i in 0..n {
                for j in 0..n {
                    if let Some(a) = alpha.alpha(i, j) {
                        ensure(&d(i, j) == a, || format!("sample {k}: d({i},{j}) disagrees with α"))?;
                    }
                    for l in 0..n {
                        let (dij, djl, dil) = (d(i, j), d(j, l), d(i, l));
                        if dij.is_finite() && djl.is_finite() {
                            ensure(dij.checked_add(&djl).ok() == Some(dil), || format!("sample {k}: cocycle fails at {i},{j},{l}"))?;
                        }
                    }
                }
            }
        }
        Ok("200 points with |I| ≤ 5: component counts and cocycles agree".into())
    })
}

pub fn stratification(cfg: &AcceptConfig) -> Criterion {
    timed(5, CRITERIA[4], 5.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut points = 0;
        for n in 1..=6 {
            let order = LinOrder::standard(n);
            let conv = enumerate_convex_equivalences(&order);
            ensure(conv.len() == 1 << (n - 1), || format!("|Conv([{n}])| = {}", conv.len()))?;
            let ours: std::collections::BTreeSet<Vec<Vec<usize>>> = conv.elements.iter().map(|e| e.classes()).collect();
            ensure(ours == oracle::convex_equivalences(n), || format!("Conv([{n}]) differs from brute force"))?;
            for e in &conv.elements {
                for _ in 0..3 {
                    let alpha = sample_in_stratum(e, &mut rng);
                    ensure(alpha.in_stratum(e).map_err(|e| e.to_string())?, || "sample left its stratum".into())?;
                    let chart = alpha.chart_coordinates(&order.enumeration()).map_err(|e| e.to_string())?;
                    ensure(chart.finite_count() == n - e.num_classes(), || {
                        format!("finite count {} on a stratum with {} classes", chart.finite_count(), e.num_classes())
                    })?;
                    points += 1;
                }
            }
        }
        Ok(format!("|Conv| = 2^(n−1) for n ≤ 6; {points} sampled finite counts"))
    })
}

pub fn day_convolution(cfg: &AcceptConfig) -> Criterion {
    timed(6, CRITERIA[5], 30.0, || {
        let n = cfg.truncation;
        let cat = TwCategory::enumerate(n);
        let c = ConstantFunctor { truncation: n };
        let cc = DayConvolution::new(&c, &c);
        ensure(cc.dim(&TwObject::flat(3)) == 2, || "constant ⊛ constant on a discrete 3-element order".into())?;
        ensure(cc.dim(&TwObject::point()) == 0, || "singleton is not zero".into())?;
        let ccc = DayConvolution::new(&cc, &c);
        ensure(ccc.dim(&TwObject::flat(3)) == 1, || "triple product on a discrete 3-element order".into())?;
        let algebras: Vec<_> = [NonunitalAlgebra::rationals(), NonunitalAlgebra::nilpotent3()]
            .iter()
            .map(|a| algebra_to_functor(a, n))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let nil = &algebras[1];
        for x in &cat.objects {
            let decomps = oracle::day_decompositions(x.class_of()).len();
            ensure(cc.dim(x) == decomps, || format!("constant square at {x}"))?;
            ensure(ccc.dim(x) == oracle::day_decompositions_into(x.class_of(), 3), || format!("constant cube at {x}"))?;
            let sq = DayConvolution::new(nil, nil);
            ensure(sq.dim(x) == decomps * 3usize.pow(x.len() as u32), || format!("algebra square at {x}"))?;
            if x.is_sharp() && x.len() >= 2 {
                ensure(sq.dim(x) == 0 && cc.dim(x) == 0, || format!("indiscrete {x} is not zero"))?;
            }
        }
        let r = day_assoc_check(&c, &c, &c, &cat);
        ensure(r.passed(), || format!("constant: {:?}", r.failures))?;
        let r = day_assoc_check(nil, nil, nil, &cat);
        ensure(r.passed(), || format!("nilpotent3: {:?}", r.failures))?;
        let r = day_assoc_check(&algebras[0], nil, &c, &cat);
        ensure(r.passed(), || format!("mixed: {:?}", r.failures))?;
        Ok(format!("dimensions on {} objects, associativity at N={n}", cat.objects.len()))
    })
}

pub fn representability(cfg: &AcceptConfig) -> Criterion {
    timed(7, CRITERIA[6], 5.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut fibers_checked = 0;
        for fam in 0..100 {
            let n = rng.gen_range(1..=4);
            let index = enumerate_linear_preorders(n).expect("n > 0").choose(&mut rng).expect("nonempty").clone();
            let samples: Vec<Sample> =
                (0..3).map(|k| Sample { id: format!("s{k}"), point: random_point_on(&index, &mut rng) }).collect();
            let (family, fibers) = build_family(index.clone(), samples).map_err(|e| format!("family {fam}: {e}"))?;
            for (s, fiber) in family.samples().iter().zip(&fibers) {
                let alpha = extract_alpha(&index, fiber).map_err(|e| e.to_string())?;
                ensure(alpha == s.point, || format!("family {fam} sample {}: α not recovered", s.id))?;
                // move the marks by an automorphism, then rebuild
                let m = fiber.line.components();
                let shifts: Vec<_> = (0..m).map(|_| qi(rng.gen_range(-5..=5))).collect();
                let moved = shift_marks(fiber, &shifts);
                let alpha2 = extract_alpha(&index, &moved).map_err(|e| e.to_string())?;
                ensure(alpha2 == s.point, || format!("family {fam}: α not translation invariant"))?;
                let rebuilt = fiber_over(&alpha2).map_err(|e| e.to_string())?;
                let iso = fiber_iso(&moved, &rebuilt).ok_or_else(|| format!("family {fam}: no connecting iso"))?;
                ensure(moved.marks.iter().map(|x| iso.apply(x)).eq(rebuilt.marks.iter().cloned()), || {
                    format!("family {fam}: iso does not carry marks")
                })?;
                // every component is marked, so changing any shift breaks the marks
                for a in 0..m {
                    let mut other = iso.shifts().to_vec();
                    other[a] += qi(1);
                    let alt = LineIso::new(m, other).map_err(|e| e.to_string())?;
                    ensure(!moved.marks.iter().map(|x| alt.apply(x)).eq(rebuilt.marks.iter().cloned()), || {
                        format!("family {fam}: connecting iso not unique")
                    })?;
                }
                fibers_checked += 1;
            }
        }
        Ok(format!("100 families, {fibers_checked} fibers, unique connecting isos"))
    })
}

pub fn cospecialization(cfg: &AcceptConfig) -> Criterion {
    timed(8, CRITERIA[7], 10.0, || {
        let family = easybreak_family();
        for (name, a) in reference_algebras() {
            let f = GlobalSheaf::from_algebra(&a, cfg.truncation);
            let ev = evaluate_on_family(&f, &family).map_err(|e| e.to_string())?;
            let d = a.dim();
            let dims: Vec<usize> = ev.stalks.iter().map(|s| s.1).collect();
            ensure(dims == vec![d, d, d, d * d], || format!("{name}: stalks {dims:?}"))?;
            let (last, rest) = ev.edges.split_last().ok_or("no edges")?;
            for e in rest {
                ensure(e.map.as_ref().is_some_and(|m| m.is_identity()), || format!("{name}: {} → {} not identity", e.from, e.to))?;
            }
            ensure(last.reversed && last.map.as_ref() == Some(&a.mult_matrix()), || format!("{name}: limit edge is not the product"))?;
        }
        Ok("stalks A, A, A, A⊗A; the limit edge is the multiplication".into())
    })
}

pub fn morse_demo(cfg: &AcceptConfig) -> Criterion {
    timed(9, CRITERIA[8], 60.0, || {
        let m = &cfg.morse;
        let sphere = run_demo(&SurfaceModel::sphere(), m).map_err(|e| e.to_string())?;
        ensure(sphere.criticals.len() == 2 && sphere.euler_characteristic == 2, || {
            format!("sphere: {} criticals, χ = {}", sphere.criticals.len(), sphere.euler_characteristic)
        })?;
        let torus = run_demo(&SurfaceModel::builtin("torus").expect("builtin"), m).map_err(|e| e.to_string())?;
        ensure(torus.criticals.len() == 4 && torus.euler_characteristic == 0, || {
            format!("torus: {} criticals, χ = {}", torus.criticals.len(), torus.euler_characteristic)
        })?;
        for c in sphere.criticals.iter().chain(&torus.criticals) {
            ensure(c.grad_norm < m.tol_crit, || format!("|∇h| = {} at a critical point", c.grad_norm))?;
        }
        let good: Vec<_> = torus
            .trajectories
            .iter()
            .filter(|t| {
                t.broken
                    && t.report.passed()
                    && t.line.alpha.validate().is_ok()
                    && t.line.alpha.gaps().iter().all(|g| *g == Ext::PosInf)
                    && t.line.time_discrepancy < m.tol_time
            })
            .collect();
        ensure(!good.is_empty(), || "no validated broken trajectory on the torus".into())?;
        let worst = good.iter().map(|t| t.report.reparam_residual).fold(0.0, f64::max);
        Ok(format!(
            "sphere χ=2, torus χ=0; {} validated broken trajectories, max residual {worst:.1e}",
            good.len()
        ))
    })
}
