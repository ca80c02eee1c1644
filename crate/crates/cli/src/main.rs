mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use brokenline::acceptance::{self, AcceptConfig};
use brokenline::ext::parse_q;
use brokenline::family::{build_family, check_axioms_on_path, easybreak_family, extract_alpha, FamilyFile, SampledFamily};
use brokenline::fiber_product::verify_join_identity;
use brokenline::linalg::NonunitalAlgebra;
use brokenline::morse::{render_svg, run_demo, SurfaceModel};
use brokenline::order::{
    enumerate_amalgams, enumerate_convex_equivalences, enumerate_linear_preorders, enumerate_surjections, LinOrder,
};
use brokenline::sheaf::{evaluate_on_family, pullback_compatible, GlobalSheaf};
use brokenline::tw::{algebra_to_functor, day_assoc_check, mainc_roundtrip, DayConvolution, TwCategory, TwFunctor};

use config::{resolve_out_dir, RunConfig, OUT_ENV};

#[derive(Parser, Debug)]
#[command(name = "brokenline", version, about = "Exact computations with broken lines, sheaves and nonunital algebras")]
struct Cli {
    /// TOML file with run settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for reports and plots (overrides the environment and the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List finite combinatorial objects as JSON.
    #[command(subcommand)]
    Enumerate(Enumerate),
    /// Check a property and report violations.
    #[command(subcommand)]
    Verify(Verify),
    /// Global sheaves built from algebras.
    #[command(subcommand)]
    Sheaf(SheafCmd),
    /// Algebra to functor to algebra, and back.
    #[command(subcommand)]
    Roundtrip(RoundtripCmd),
    /// Day convolution of algebra functors.
    #[command(subcommand)]
    Daycon(DayconCmd),
    /// Gradient flow demo on a built-in surface.
    #[command(subcommand)]
    Morse(MorseCmd),
    /// Run the acceptance suite and write a summary.
    Accept {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum Enumerate {
    Preorders {
        #[arg(long)]
        n: usize,
    },
    Surjections {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
    Conv {
        #[arg(long)]
        n: usize,
    },
    Amalgams {
        #[arg(long)]
        left: usize,
        #[arg(long)]
        right: usize,
    },
    Tw {
        #[arg(long)]
        truncation: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// The join identity on configurations of two sections.
    Amalgams {
        #[arg(long)]
        left: usize,
        #[arg(long)]
        right: usize,
        #[arg(long)]
        per_stratum: Option<usize>,
    },
    /// Fibers, section clauses and path axioms of a family file.
    Family {
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value = "1/100")]
        delta: String,
    },
}

#[derive(Args, Debug)]
struct AlgebraArg {
    /// `builtin:NAME` or a JSON file `{"dim", "c"}`.
    #[arg(long, default_value = "builtin:nilpotent3")]
    algebra: String,
}

#[derive(Subcommand, Debug)]
enum SheafCmd {
    /// Stalks and cospecialization maps along a family (easybreak by default).
    Evaluate {
        #[command(flatten)]
        algebra: AlgebraArg,
        #[arg(long)]
        family: Option<PathBuf>,
    },
    /// Pullback squares for every surjection between small orders.
    Pullback {
        #[command(flatten)]
        algebra: AlgebraArg,
        #[arg(long)]
        max_size: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum RoundtripCmd {
    Mainc {
        #[command(flatten)]
        algebra: AlgebraArg,
        #[arg(long)]
        truncation: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum DayconCmd {
    /// Dimensions of `F ⊛ F` on every object.
    Dims {
        #[command(flatten)]
        algebra: AlgebraArg,
        #[arg(long)]
        truncation: Option<usize>,
    },
    /// The associativity reindexing for `F, F, F`.
    Assoc {
        #[command(flatten)]
        algebra: AlgebraArg,
        #[arg(long)]
        truncation: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum MorseCmd {
    Demo {
        #[arg(long, default_value = "torus")]
        surface: String,
    },
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    /// Writes `name.json` to the output directory and prints it.
    fn emit(&self, name: &str, report: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(report)? + "\n";
        self.write(&format!("{name}.json"), &text)?;
        print!("{text}");
        Ok(())
    }

    fn write(&self, file: &str, text: &str) -> Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(file);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn load_algebra(spec: &str) -> Result<NonunitalAlgebra> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return NonunitalAlgebra::builtin(name).ok_or_else(|| anyhow!("unknown builtin algebra {name:?}"));
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
    let a: NonunitalAlgebra = serde_json::from_str(&text).with_context(|| format!("parsing {spec}"))?;
    a.validate().map_err(|e| anyhow!("{spec}: {e}"))?;
    Ok(a)
}

fn load_family(path: Option<&Path>) -> Result<SampledFamily> {
    match path {
        None => Ok(easybreak_family()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let file: FamilyFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            Ok(file.into_family()?)
        }
    }
}

/// Covering pairs of a finite partial order given by its `≤` matrix.
fn hasse_edges(le: &[Vec<bool>]) -> Vec<[usize; 2]> {
    let n = le.len();
    let lt = |a: usize, b: usize| a != b && le[a][b];
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if lt(a, b) && !(0..n).any(|c| lt(a, c) && lt(c, b)) {
                out.push([a, b]);
            }
        }
    }
    out
}

fn enumerate(ctx: &Ctx, e: Enumerate) -> Result<bool> {
    let report = match e {
        Enumerate::Preorders { n } => {
            let all = enumerate_linear_preorders(n)?;
            json!({ "n": n, "count": all.len(), "preorders": all })
        }
        Enumerate::Surjections { n, m } => {
            let all = enumerate_surjections(&LinOrder::standard(n), &LinOrder::standard(m));
            json!({ "n": n, "m": m, "count": all.len(), "surjections": all })
        }
        Enumerate::Conv { n } => {
            if n == 0 {
                bail!("n must be positive");
            }
            let poset = enumerate_convex_equivalences(&LinOrder::standard(n));
            let classes: Vec<_> = poset.elements.iter().map(|e| e.classes()).collect();
            json!({ "n": n, "count": classes.len(), "relations": classes, "edges": hasse_edges(&poset.le) })
        }
        Enumerate::Amalgams { left, right } => {
            if left == 0 || right == 0 {
                bail!("both orders must be nonempty");
            }
            let poset = enumerate_amalgams(&LinOrder::standard(left), &LinOrder::standard(right));
            let pre: Vec<_> = poset.elements.iter().map(|k| k.preorder().clone()).collect();
            json!({ "left": left, "right": right, "count": pre.len(), "amalgams": pre, "edges": hasse_edges(&poset.le) })
        }
        Enumerate::Tw { truncation } => {
            let cat = TwCategory::enumerate(truncation.unwrap_or(ctx.cfg.truncation));
            json!({
                "truncation": cat.truncation,
                "objects": cat.objects.iter().map(|x| x.class_of().to_vec()).collect::<Vec<_>>(),
                "morphisms": cat.morphisms.len(),
            })
        }
    };
    ctx.emit("enumerate", &report)?;
    Ok(true)
}

fn verify(ctx: &Ctx, v: Verify) -> Result<bool> {
    match v {
        Verify::Amalgams { left, right, per_stratum } => {
            if left == 0 || right == 0 {
                bail!("both orders must be nonempty");
            }
            let r = verify_join_identity(
                &LinOrder::standard(left),
                &LinOrder::standard(right),
                per_stratum.unwrap_or(ctx.cfg.per_stratum),
                ctx.cfg.seed,
            )?;
            ctx.emit("verify-amalgams", &r)?;
            Ok(r.passed())
        }
        Verify::Family { file, delta } => {
            let delta = parse_q(&delta).map_err(|e| anyhow!("--delta: {e}"))?;
            let family = load_family(file.as_deref())?;
            let (built, fibers) = build_family(family.index().clone(), family.samples().to_vec())?;
            let family = built.with_path(family.edges().to_vec(), family.limits().to_vec())?;
            let mut roundtrip = Vec::new();
            for (s, fiber) in family.samples().iter().zip(&fibers) {
                let back = extract_alpha(family.index(), fiber)?;
                roundtrip.push(json!({ "id": s.id, "components": fiber.line.components(), "recovered": back == s.point }));
            }
            let axioms = check_axioms_on_path(&family, &fibers, &delta)?;
            let passed = axioms.passed() && roundtrip.iter().all(|r| r["recovered"] == Value::Bool(true));
            ctx.emit("verify-family", &json!({ "samples": roundtrip, "axioms": axioms, "passed": passed }))?;
            Ok(passed)
        }
    }
}

fn sheaf(ctx: &Ctx, s: SheafCmd) -> Result<bool> {
    match s {
        SheafCmd::Evaluate { algebra, family } => {
            let a = load_algebra(&algebra.algebra)?;
            let family = load_family(family.as_deref())?;
            let f = GlobalSheaf::from_algebra(&a, ctx.cfg.truncation.max(family.index().len().saturating_sub(1)));
            let ev = evaluate_on_family(&f, &family)?;
            ctx.emit("sheaf-evaluate", &json!({ "algebra": a, "evaluation": ev }))?;
            Ok(true)
        }
        SheafCmd::Pullback { algebra, max_size } => {
            let a = load_algebra(&algebra.algebra)?;
            let max = max_size.unwrap_or(ctx.cfg.max_size);
            let f = GlobalSheaf::from_algebra(&a, max.saturating_sub(1).max(1));
            let mut checked = 0;
            let mut failures = Vec::new();
            for n in 1..=max {
                for m in 1..=n {
                    for s in enumerate_surjections(&LinOrder::standard(n), &LinOrder::standard(m)) {
                        checked += 1;
                        if !pullback_compatible(&f, &s)? {
                            failures.push(s.map().to_vec());
                        }
                    }
                }
            }
            let passed = failures.is_empty();
            ctx.emit("sheaf-pullback", &json!({ "max_size": max, "surjections": checked, "failures": failures, "passed": passed }))?;
            Ok(passed)
        }
    }
}

fn roundtrip(ctx: &Ctx, r: RoundtripCmd) -> Result<bool> {
    let RoundtripCmd::Mainc { algebra, truncation } = r;
    let a = load_algebra(&algebra.algebra)?;
    let n = truncation.unwrap_or(ctx.cfg.truncation);
    let report = mainc_roundtrip(&a, n, ctx.cfg.seed)?;
    let passed = report.passed();
    let mut out = json!({ "algebra": a, "report": report, "passed": passed });
    if !passed {
        // witnesses: the structure maps the recovered algebra was read from
        let f = algebra_to_functor(&a, n)?;
        out["witness"] = json!({
            "mult": a.mult_matrix(),
            "mu_pt_pt": f.monoidal(&brokenline::TwObject::point(), &brokenline::TwObject::point()),
        });
    }
    ctx.emit("roundtrip-mainc", &out)?;
    Ok(passed)
}

fn daycon(ctx: &Ctx, d: DayconCmd) -> Result<bool> {
    match d {
        DayconCmd::Dims { algebra, truncation } => {
            let a = load_algebra(&algebra.algebra)?;
            let n = truncation.unwrap_or(ctx.cfg.truncation);
            let f = algebra_to_functor(&a, n)?;
            let ff = DayConvolution::new(&f, &f);
            let cat = TwCategory::enumerate(n);
            let rows: Vec<Value> = cat
                .objects
                .iter()
                .map(|x| json!({ "object": x.class_of(), "dim": ff.dim(x), "splits": ff.summands(x).len() }))
                .collect();
            ctx.emit("daycon-dims", &json!({ "truncation": n, "values": rows }))?;
            Ok(true)
        }
        DayconCmd::Assoc { algebra, truncation } => {
            let a = load_algebra(&algebra.algebra)?;
            let n = truncation.unwrap_or(ctx.cfg.truncation);
            let f = algebra_to_functor(&a, n)?;
            let r = day_assoc_check(&f, &f, &f, &TwCategory::enumerate(n));
            let passed = r.passed();
            ctx.emit("daycon-assoc", &json!({ "report": r, "passed": passed }))?;
            Ok(passed)
        }
    }
}

fn morse(ctx: &Ctx, m: MorseCmd) -> Result<bool> {
    let MorseCmd::Demo { surface } = m;
    let s = SurfaceModel::builtin(&surface)?;
    let demo = run_demo(&s, &ctx.cfg.morse)?;
    ctx.write(&format!("morse-{surface}.svg"), &render_svg(&s, &demo))?;
    let passed = demo.trajectories.iter().all(|t| t.report.passed());
    ctx.emit(&format!("morse-{surface}"), &demo)?;
    Ok(passed)
}

fn accept(ctx: &Ctx, only: Option<usize>) -> Result<bool> {
    let cfg = AcceptConfig { truncation: ctx.cfg.truncation, seed: ctx.cfg.seed, morse: ctx.cfg.morse.clone() };
    let results = match only {
        Some(id) if (1..=acceptance::CRITERIA.len()).contains(&id) => vec![acceptance::run(id, &cfg)],
        Some(id) => bail!("no criterion {id}"),
        None => acceptance::run_all(&cfg),
    };
    let passed = results.iter().all(|r| r.passed);
    let text = serde_json::to_string_pretty(&json!({ "criteria": results, "passed": passed }))? + "\n";
    ctx.write("accept.json", &text)?;
    println!("{:<3} {:<26} {:<6} {:>8}", "id", "criterion", "result", "seconds");
    for r in &results {
        println!("{:<3} {:<26} {:<6} {:>8.2}", r.id, r.name, if r.passed { "pass" } else { "FAIL" }, r.seconds);
    }
    for r in results.iter().filter(|r| !r.passed) {
        println!("criterion {}: {}", r.id, r.detail);
    }
    println!("summary written to {}", ctx.out.join("accept.json").display());
    Ok(passed)
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let out = resolve_out_dir(cli.out, std::env::var(OUT_ENV).ok(), &cfg);
    let ctx = Ctx { cfg, out };
    match cli.command {
        Command::Enumerate(e) => enumerate(&ctx, e),
        Command::Verify(v) => verify(&ctx, v),
        Command::Sheaf(s) => sheaf(&ctx, s),
        Command::Roundtrip(r) => roundtrip(&ctx, r),
        Command::Daycon(d) => daycon(&ctx, d),
        Command::Morse(m) => morse(&ctx, m),
        Command::Accept { only } => accept(&ctx, only),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
