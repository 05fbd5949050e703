//! Command-line front end. Every subcommand prints one JSON report.
//!
//! Exit codes: 0 consistent or exact, 1 refuted, 2 usage or parse error.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::affine::{construct_affine_k_minorant, verify_k_bound};
use crate::composite::{
    check_composition_preconditions, named_g, test_composition_convex, test_epi_monotone, test_hull_monotone,
    CompositeConfig,
};
use crate::cones::Cone;
use crate::convexity::{estimate_dual_kf, test_k_convexity, test_scalar_convexity};
use crate::error::{KconeError, Result};
use crate::hull::{affine_majorant_search, sample_graph, verify_epi_equals_hull, HullConfig};
use crate::maps::parse_map;
use crate::sampling::Sampler;
use crate::scalar::ScalarFn;
use crate::space::{Point, SpaceDesc};
use crate::verdict::Verdict;

pub const SCHEMA: &str = "v1";
pub const RNG_NAME: &str = "ChaCha8 (index-addressable streams)";

#[derive(Parser, Debug)]
#[command(name = "kcone", version, about = "Cone-induced convexity checks with JSON reports")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Shared settings, echoed into every report.
#[derive(Args, Debug, Clone, Serialize)]
pub struct RunConfig {
    /// RNG seed (default from KCONE_SEED, else 0).
    #[arg(long, global = true, env = "KCONE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Sampled triples or pairs per test.
    #[arg(long, global = true, default_value_t = 500)]
    pub budget: usize,
    /// Convexity and order tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Hull-membership and bound-verification tolerance.
    #[arg(long = "hull-tol", global = true, default_value_t = 1e-8)]
    pub hull_tol: f64,
    /// Directions for dual-cone estimates and sampled self-dual checks.
    #[arg(long, global = true, default_value_t = 200)]
    pub dirs: usize,
    /// Initial graph-cloud draws.
    #[arg(long, global = true, default_value_t = 200)]
    pub cloud: usize,
    /// Largest cloud reached by adaptive doubling.
    #[arg(long = "cloud-max", global = true, default_value_t = 800)]
    pub cloud_max: usize,
    /// Vertical offsets for horizon evidence.
    #[arg(long = "t-list", global = true, value_delimiter = ',', default_value = "1,10,100")]
    pub t_list: Vec<f64>,
    /// Largest ray parameter for horizon values.
    #[arg(long = "t-max", global = true, default_value_t = 1e6)]
    pub t_max: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Add wall-clock timings (makes reports run-dependent).
    #[arg(long, global = true)]
    pub timings: bool,
    /// JSON output (the only format).
    #[arg(long, global = true)]
    pub json: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            budget: 500,
            tol: 1e-9,
            hull_tol: 1e-8,
            dirs: 200,
            cloud: 200,
            cloud_max: 800,
            t_list: vec![1.0, 10.0, 100.0],
            t_max: 1e6,
            out: None,
            timings: false,
            json: false,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cone operations.
    Cone {
        #[command(subcommand)]
        action: ConeAction,
    },
    /// Map-versus-cone checks.
    Check {
        #[command(subcommand)]
        action: CheckAction,
    },
    /// Is there a cone making F convex and g increasing?
    Composite(CompositeArgs),
    /// Scalar-function checks.
    Scalar {
        #[command(subcommand)]
        action: ScalarAction,
    },
}

#[derive(Args, Debug)]
pub struct ConeArg {
    /// Named cone (psd:N, negpsd:N, spectral:N, orthant:N, trivial:SPACE, full:SPACE), JSON, or @file.
    #[arg(long)]
    pub cone: String,
}

#[derive(Subcommand, Debug)]
pub enum ConeAction {
    Polar(ConeArg),
    Contains {
        #[command(flatten)]
        cone: ConeArg,
        /// JSON array of embedded coordinates.
        #[arg(long)]
        point: String,
    },
    Pointed(ConeArg),
    #[command(name = "self-dual")]
    SelfDual(ConeArg),
}

#[derive(Args, Debug)]
pub struct MapConeArgs {
    /// Named map (gramhalf:NxM, square:N, inverse:N, eigen:N, identity:N, affine:N, xsq-y, x2-exp, x2-negx2), JSON, or @file.
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub cone: String,
}

#[derive(Subcommand, Debug)]
pub enum CheckAction {
    Kconvex(MapConeArgs),
    Kf {
        #[arg(long)]
        map: String,
    },
    #[command(name = "epi-hull")]
    EpiHull(MapConeArgs),
    Minorant(MapConeArgs),
}

#[derive(Args, Debug)]
pub struct CompositeArgs {
    /// abs-x1, trace, max-eig, norm, sq-norm, exp-sum, first, const, neg-trace.
    #[arg(long)]
    pub g: String,
    #[arg(long)]
    pub map: String,
    /// Also run the epigraph-monotonicity test for this cone.
    #[arg(long)]
    pub cone: Option<String>,
}

#[derive(Args, Debug)]
pub struct ScalarArgs {
    /// Registry function (see `composite --g`).
    #[arg(long)]
    pub g: String,
    /// rn:N, sym:N, rmat:NxM, or N.
    #[arg(long, default_value = "rn:1")]
    pub space: String,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub hi: f64,
}

#[derive(Subcommand, Debug)]
pub enum ScalarAction {
    Convexity(ScalarArgs),
    Majorant(ScalarArgs),
}

/// Exit code, report text, and the destination path if any.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
    pub out: Option<PathBuf>,
}

fn read_arg(s: &str) -> Result<String> {
    match s.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| KconeError::Parse(format!("{path}: {e}"))),
        None => Ok(s.to_string()),
    }
}

pub fn parse_space(s: &str) -> Result<SpaceDesc> {
    let bad = || KconeError::Parse(format!("bad space '{s}' (rn:N, sym:N, rmat:NxM, N)"));
    let num = |a: &str| a.trim().parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(bad);
    match s.trim().split_once(':') {
        None => Ok(SpaceDesc::rn(num(s)?)),
        Some(("rn", n)) => Ok(SpaceDesc::rn(num(n)?)),
        Some(("sym", n)) => Ok(SpaceDesc::sym(num(n)?)),
        Some(("rmat", nm)) => {
            let (n, m) = nm.split_once('x').ok_or_else(bad)?;
            Ok(SpaceDesc::rmat(num(n)?, num(m)?))
        }
        _ => Err(bad()),
    }
}

/// Named cone, inline JSON, or `@file`.
pub fn parse_cone(s: &str) -> Result<Cone> {
    let s = read_arg(s)?;
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| KconeError::Parse(format!("cone JSON: {e}")));
    }
    let (name, arg) = s.split_once(':').ok_or_else(|| KconeError::Parse(format!("unknown cone '{s}'")))?;
    let n = || {
        arg.parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(|| KconeError::Parse(format!("bad size in cone '{s}'")))
    };
    Ok(match name {
        "psd" => Cone::psd(n()?),
        "negpsd" => Cone::neg_psd(n()?),
        "spectral" => Cone::spectral(n()?),
        "orthant" => Cone::orthant(n()?),
        "trivial" => Cone::trivial(parse_space(arg)?),
        "full" => Cone::full(parse_space(arg)?),
        _ => return Err(KconeError::Parse(format!("unknown cone '{s}'"))),
    })
}

pub fn parse_point(s: &str, space: SpaceDesc) -> Result<Point> {
    let coords: Vec<f64> =
        serde_json::from_str(&read_arg(s)?).map_err(|e| KconeError::Parse(format!("point JSON: {e}")))?;
    Point::new(space, coords)
}

fn map_arg(s: &str) -> Result<crate::maps::MapSpec> {
    parse_map(&read_arg(s)?)
}

fn exit_code(v: &Verdict) -> i32 {
    if v.is_negative() {
        1
    } else {
        0
    }
}

fn value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report serializes")
}

fn hull_config(cfg: &RunConfig) -> HullConfig {
    HullConfig {
        seed: cfg.seed,
        budget: cfg.budget,
        n_cloud: cfg.cloud,
        cloud_max: cfg.cloud_max,
        t_list: cfg.t_list.clone(),
        tol: cfg.hull_tol,
        n_dirs: cfg.dirs,
        sufficiency: vec![],
    }
}

fn cmd_cone(action: &ConeAction, cfg: &RunConfig) -> Result<(i32, Value)> {
    Ok(match action {
        ConeAction::Polar(a) => {
            let k = parse_cone(&a.cone)?;
            (0, json!({ "cone": k, "polar": k.polar(), "dual": k.dual() }))
        }
        ConeAction::Contains { cone, point } => {
            let k = parse_cone(&cone.cone)?;
            let p = parse_point(point, k.space)?;
            let (inside, witness) = k.membership(&p, cfg.hull_tol)?;
            let v = if inside {
                Verdict::exact(true, "point lies in the cone")
            } else {
                Verdict::refuted(crate::verdict::Witness::Vector {
                    v: witness.unwrap_or_else(|| Point::zeros(k.space)),
                    note: "u in the dual cone with <u, point> < 0".into(),
                })
            };
            (exit_code(&v), json!({ "cone": k, "point": p, "verdict": v }))
        }
        ConeAction::Pointed(a) => {
            let k = parse_cone(&a.cone)?;
            let v = k.is_pointed();
            (exit_code(&v), json!({ "cone": k, "verdict": v }))
        }
        ConeAction::SelfDual(a) => {
            let k = parse_cone(&a.cone)?;
            let v = k.check_self_dual_inclusion(cfg.dirs, cfg.seed);
            (exit_code(&v), json!({ "cone": k, "verdict": v }))
        }
    })
}

fn cmd_check(action: &CheckAction, cfg: &RunConfig) -> Result<(i32, Value)> {
    Ok(match action {
        CheckAction::Kconvex(a) => {
            let (f, k) = (map_arg(&a.map)?, parse_cone(&a.cone)?);
            let v = test_k_convexity(&f, &k, cfg.budget, cfg.seed)?;
            (exit_code(&v), json!({ "map": f.label(), "cone": k, "verdict": v }))
        }
        CheckAction::Kf { map } => {
            let f = map_arg(map)?;
            let est = estimate_dual_kf(&f, cfg.dirs, cfg.budget, cfg.seed)?;
            let counts = json!({
                "accepted": est.accepted.len(),
                "rejected": est.rejected.len(),
                "marginal": est.marginal.len(),
            });
            (0, json!({ "map": f.label(), "counts": counts, "estimate": est }))
        }
        CheckAction::EpiHull(a) => {
            let (f, k) = (map_arg(&a.map)?, parse_cone(&a.cone)?);
            let r = verify_epi_equals_hull(&f, &k, &hull_config(cfg))?;
            (exit_code(&r.overall), value(&r))
        }
        CheckAction::Minorant(a) => {
            let (f, k) = (map_arg(&a.map)?, parse_cone(&a.cone)?);
            let (w, e) =
                k.h_form().ok_or_else(|| KconeError::Unsupported("minorants need a polyhedral cone".into()))?;
            if !e.is_empty() {
                return Err(KconeError::Unsupported(
                    "minorants need K = {y : <b_i, y> >= 0} without equalities".into(),
                ));
            }
            let normals: Vec<Point> = w.into_iter().map(|r| Point { space: k.space, coords: r }).collect();
            let bound = construct_affine_k_minorant(&f, &normals, &[])?;
            let v = verify_k_bound(&f, &bound, &f.default_sampler(cfg.seed), cfg.budget, cfg.seed, cfg.hull_tol)?;
            (exit_code(&v), json!({ "map": f.label(), "bound": bound, "verdict": v }))
        }
    })
}

fn cmd_composite(a: &CompositeArgs, cfg: &RunConfig) -> Result<(i32, Value)> {
    let f = map_arg(&a.map)?;
    let g = named_g(&a.g, f.output_space())?;
    let ccfg = CompositeConfig { n_dirs: cfg.dirs, budget: cfg.budget, seed: cfg.seed, t_max: cfg.t_max, tol: cfg.tol };
    let report = check_composition_preconditions(&g, &f, &ccfg)?;
    let sampler = f.default_sampler(cfg.seed);
    let convex = test_composition_convex(&g, &f, &sampler, cfg.budget, cfg.seed)?;
    let cloud = sample_graph(&f, &f.cloud_sampler(cfg.seed), cfg.cloud, cfg.seed, true)?;
    let hull_mono = test_hull_monotone(&g, &cloud, cfg.budget, cfg.seed, cfg.tol)?;
    let epi = match &a.cone {
        Some(c) => {
            let k = parse_cone(c)?;
            Some(test_epi_monotone(&g, &f, &k, &sampler, cfg.budget, cfg.seed, cfg.tol)?)
        }
        None => None,
    };
    let refuted = report.conclusion.is_negative() || epi.as_ref().is_some_and(|v| v.is_negative());
    Ok((
        i32::from(refuted),
        json!({
            "report": report,
            "composition_convex": convex,
            "hull_monotone": hull_mono,
            "epi_monotone": epi,
        }),
    ))
}

fn cmd_scalar(action: &ScalarAction, cfg: &RunConfig) -> Result<(i32, Value)> {
    let (ScalarAction::Convexity(a) | ScalarAction::Majorant(a)) = action;
    let space = parse_space(&a.space)?;
    let g: ScalarFn = named_g(&a.g, space)?;
    let sampler = Sampler::new(space, crate::sampling::SamplerScheme::Box { lo: a.lo, hi: a.hi }, cfg.seed)?;
    Ok(match action {
        ScalarAction::Convexity(_) => {
            let v = test_scalar_convexity(&g, &sampler, cfg.budget, cfg.seed, cfg.tol)?;
            (exit_code(&v), json!({ "g": g.label(), "verdict": v }))
        }
        ScalarAction::Majorant(_) => {
            let ms = affine_majorant_search(&g, &sampler.sample(cfg.budget), cfg.hull_tol)?;
            (0, json!({ "g": g.label(), "search": ms }))
        }
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Cone { action } => match action {
            ConeAction::Polar(_) => "cone polar",
            ConeAction::Contains { .. } => "cone contains",
            ConeAction::Pointed(_) => "cone pointed",
            ConeAction::SelfDual(_) => "cone self-dual",
        },
        Command::Check { action } => match action {
            CheckAction::Kconvex(_) => "check kconvex",
            CheckAction::Kf { .. } => "check kf",
            CheckAction::EpiHull(_) => "check epi-hull",
            CheckAction::Minorant(_) => "check minorant",
        },
        Command::Composite(_) => "composite",
        Command::Scalar { action } => match action {
            ScalarAction::Convexity(_) => "scalar convexity",
            ScalarAction::Majorant(_) => "scalar majorant",
        },
    }
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Outcome {
    let cfg = &cli.config;
    let start = Instant::now();
    let result = match &cli.command {
        Command::Cone { action } => cmd_cone(action, cfg),
        Command::Check { action } => cmd_check(action, cfg),
        Command::Composite(a) => cmd_composite(a, cfg),
        Command::Scalar { action } => cmd_scalar(action, cfg),
    };
    let (code, mut report) = match result {
        Ok((code, body)) => (code, json!({ "schema": SCHEMA, "command": command_name(&cli.command), "result": body })),
        Err(e) => (2, json!({ "schema": SCHEMA, "command": command_name(&cli.command), "error": e.to_string() })),
    };
    report["config"] = value(cfg);
    report["rng"] = json!(RNG_NAME);
    report["exit_code"] = json!(code);
    if cfg.timings {
        report["timings_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    }
    Outcome { code, text: render(&report), out: cfg.out.clone() }
}

/// Parses `args` (program name first) and runs. Usage errors give exit 2.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            Outcome { code, text: e.to_string(), out: None }
        }
    }
}
