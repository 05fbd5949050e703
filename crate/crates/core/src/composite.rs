//! Horizon functions, `K`-increasing tests, and the search for a cone `K`
//! with `F` `K`-convex and `g` `K`-increasing.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::cones::Cone;
use crate::convexity::{estimate_dual_kf, test_scalar_convexity, DualConeEstimate, DEFAULT_TOL};
use crate::error::{KconeError, Result};
use crate::hull::SampleCloud;
use crate::linalg::lambda_max;
use crate::maps::MapSpec;
use crate::sampling::{stream_rng, Sampler};
use crate::scalar::ScalarFn;
use crate::space::{smat, Point, SpaceDesc};
use crate::verdict::{Budget, Verdict, Witness};

/// A convex `g` on the output space, `+∞` allowed.
pub type ScalarConvexFn = ScalarFn;

/// Values beyond this count as `+∞`.
pub const OVERFLOW_GUARD: f64 = 1e12;
pub const DEFAULT_T_MAX: f64 = 1e6;
pub const HZN_TOL: f64 = 1e-6;
const QUOTIENT_TOL: f64 = 1e-9;
const GROWTH_TOL: f64 = 1e-3;
const PAIR_STREAM_SALT: u64 = 0x9a175;

/// Names accepted by [`named_g`].
pub const G_REGISTRY: [&str; 9] =
    ["abs-x1", "trace", "max-eig", "norm", "sq-norm", "exp-sum", "first", "const", "neg-trace"];

fn trace(x: &Point) -> f64 {
    match x.space {
        SpaceDesc::Sym { .. } => smat(x).trace(),
        _ => x.coords.iter().sum(),
    }
}

/// Registry functions on `space`. On `Sym(n)`, `trace` and `max-eig` act on
/// the matrix; elsewhere on the coordinates.
pub fn named_g(name: &str, space: SpaceDesc) -> Result<ScalarConvexFn> {
    let g = match name {
        "abs-x1" => ScalarFn::new(space, "|y1|", |y| y.coords[0].abs()),
        "trace" => ScalarFn::new(space, "tr", trace),
        "neg-trace" => ScalarFn::new(space, "-tr", |y| -trace(y)),
        "max-eig" => match space {
            SpaceDesc::Sym { .. } => ScalarFn::new(space, "lambda_max", lambda_max),
            _ => ScalarFn::new(space, "max_i y_i", |y| y.coords.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        },
        "norm" => ScalarFn::new(space, "|y|", |y| y.norm()),
        "sq-norm" => ScalarFn::new(space, "|y|^2", |y| y.coords.iter().map(|v| v * v).sum()),
        "exp-sum" => ScalarFn::new(space, "sum exp(y_i)", |y| y.coords.iter().map(|v| v.exp()).sum()),
        "first" => ScalarFn::new(space, "y1", |y| y.coords[0]),
        "const" => ScalarFn::new(space, "0", |_| 0.0),
        other => return Err(KconeError::Parse(format!("unknown g '{other}' (known: {})", G_REGISTRY.join(", ")))),
    };
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonValue {
    /// Largest finite difference quotient.
    pub value: f64,
    /// Quotients overflowed, the function left its domain, or they were
    /// still growing at `t_max`.
    pub infinite: bool,
    pub quotients: Vec<(f64, f64)>,
}

fn t_grid(t_max: f64) -> Vec<f64> {
    let mut ts = vec![];
    let mut t = 1.0;
    while t < t_max {
        ts.push(t);
        t *= 2.0;
    }
    ts.push(t_max);
    ts
}

/// `g^∞(u) = sup_t (g(x₀+tu) − g(x₀))/t` on `t ∈ {1, 2, 4, …, t_max}`.
/// The quotients of a convex `g` are nondecreasing in `t`; a drop is an error.
pub fn horizon_value(g: &ScalarConvexFn, u: &Point, x0: &Point, t_max: f64) -> Result<HorizonValue> {
    u.check_space(&g.space())?;
    let g0 = g.eval(x0);
    if !g0.is_finite() {
        return Err(KconeError::OutsideDomain);
    }
    let mut quotients: Vec<(f64, f64)> = vec![];
    let mut infinite = false;
    for t in t_grid(t_max) {
        let gt = g.eval(&x0.axpy(t, u)?);
        if !gt.is_finite() {
            infinite = true;
            break;
        }
        let q = (gt - g0) / t;
        if let Some(&(_, prev)) = quotients.last() {
            if q < prev - QUOTIENT_TOL * (1.0 + prev.abs()) {
                return Err(KconeError::NotConvexAlongRay { t, prev, next: q });
            }
        }
        quotients.push((t, q));
        if q.abs() > OVERFLOW_GUARD {
            infinite = true;
            break;
        }
    }
    let value = quotients.last().map_or(f64::INFINITY, |&(_, q)| q);
    if !infinite && quotients.len() >= 2 {
        let (q_half, q) = (quotients[quotients.len() - 2].1, quotients[quotients.len() - 1].1);
        infinite = q - q_half > GROWTH_TOL * (1.0 + q_half.abs());
    }
    Ok(HorizonValue { value: if infinite { f64::INFINITY } else { value }, infinite, quotients })
}

/// `u ∈ hzn g` evidence: `g^∞(u) ≤ tol` from every in-domain probe.
pub fn hzn_contains(g: &ScalarConvexFn, u: &Point, probes: &[Point], t_max: f64, tol: f64) -> Result<Verdict> {
    let mut used = 0;
    for x0 in probes {
        if !g.eval(x0).is_finite() {
            continue;
        }
        used += 1;
        let hv = horizon_value(g, u, x0, t_max)?;
        if hv.infinite || hv.value > tol {
            return Ok(Verdict::refuted(Witness::Horizon { x0: x0.clone(), u: u.clone(), value: hv.value }));
        }
    }
    if used == 0 {
        return Err(KconeError::DomainStarvation(probes.len()));
    }
    let mut b = Budget::new(used, 0);
    b.seed = None;
    Ok(Verdict::Consistent { budget: b })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayHorizon {
    pub value: f64,
    pub infinite: bool,
}

/// Heuristic `f^∞(u) ≈ f(t_max·u)/t_max`, valid when `f(tu)/t` converges.
/// Flags divergence when the value overflows or keeps growing between
/// `t_max/2` and `t_max`.
pub fn ray_horizon_estimate(f: &ScalarFn, u: &Point, t_max: f64) -> RayHorizon {
    let at = |t: f64| f.eval(&u.scale(t)) / t;
    let q = at(t_max);
    let q_half = at(t_max / 2.0);
    let infinite = !q.is_finite() || q > OVERFLOW_GUARD || (q_half > 1.0 && q >= 1.5 * q_half);
    RayHorizon { value: if infinite { f64::INFINITY } else { q }, infinite }
}

/// Unit generators of `K` followed by relative-interior points.
fn cone_directions(k: &Cone, seed: u64) -> Result<(Vec<Point>, Vec<Point>)> {
    let gens: Vec<Point> =
        k.direction_generators().unwrap_or_default().into_iter().filter_map(|p| p.normalized()).collect();
    let ri: Vec<Point> = k.ri_sample(16, seed)?.into_iter().filter_map(|p| p.normalized()).collect();
    Ok((gens, ri))
}

fn pick_k(gens: &[Point], ri: &[Point], i: u64, seed: u64) -> Option<Point> {
    let all: Vec<&Point> = gens.iter().chain(ri).collect();
    if all.is_empty() {
        return None;
    }
    let mut rng = stream_rng(seed ^ PAIR_STREAM_SALT, i);
    let idx = rng.random_range(0..all.len());
    let scale = 0.1 + 2.9 * rng.random::<f64>();
    Some(all[idx].scale(scale))
}

fn order_violation(gx: f64, gy: f64, tol: f64) -> bool {
    gy < gx - tol * (1.0 + gx.abs())
}

/// `y ≥_K x ⟹ g(y) ≥ g(x)` on pairs `(x, x + k)`: first `(−k̂, 0)` and
/// `(0, k̂)` for each generator `k̂`, then sampled `x` with random `k ∈ K`.
pub fn test_k_increasing(
    g: &ScalarConvexFn,
    k: &Cone,
    sampler: &Sampler,
    budget: usize,
    seed: u64,
    tol: f64,
) -> Result<Verdict> {
    if k.space != g.space() {
        return Err(KconeError::mismatch(&g.space(), &k.space));
    }
    let (gens, ri) = cone_directions(k, seed)?;
    if gens.is_empty() && ri.is_empty() {
        return Ok(Verdict::Consistent { budget: Budget::new(0, seed).noted("K = {0}: only k = 0") });
    }
    let zero = Point::zeros(k.space);
    let mut pairs: Vec<(Point, Point)> = vec![];
    for kh in &gens {
        pairs.push((kh.neg(), kh.clone()));
        pairs.push((zero.clone(), kh.clone()));
    }
    let s = sampler.with_seed(seed);
    for i in 0..budget as u64 {
        if let Some(kv) = pick_k(&gens, &ri, i, seed) {
            pairs.push((s.point(i), kv));
        }
    }
    let mut used = 0;
    for (x, kv) in pairs {
        let gx = g.eval(&x);
        if !gx.is_finite() {
            continue;
        }
        used += 1;
        let y = x.add(&kv)?;
        let gy = g.eval(&y);
        if order_violation(gx, gy, tol) {
            return Ok(Verdict::refuted(Witness::Order { x, y, gx, gy }));
        }
    }
    if used == 0 {
        return Err(KconeError::DomainStarvation(budget));
    }
    Ok(Verdict::consistent(used, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeConfig {
    pub n_dirs: usize,
    pub budget: usize,
    pub seed: u64,
    pub t_max: f64,
    pub tol: f64,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        CompositeConfig { n_dirs: 64, budget: 200, seed: 0, t_max: DEFAULT_T_MAX, tol: DEFAULT_TOL }
    }
}

/// The i)–iv) checklist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checklist {
    /// A closed convex cone with `F` `K`-convex and `g` `K`-increasing exists.
    pub i_cone_exists: Verdict,
    /// `g` is `K_F`-increasing.
    pub ii_g_kf_increasing: Verdict,
    /// `K_F ⊂ −hzn g`.
    pub iii_kf_in_neg_hzn: Verdict,
    /// `(hzn g)° ⊂ −K_F°`: follows from iii) by polarity, not tested.
    pub iv_polar_inclusion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeReport {
    pub g: String,
    pub map: String,
    pub kf_estimate: DualConeEstimate,
    /// `{y : ⟨u,y⟩ ≥ 0 for accepted u}`, contains the true `K_F`.
    pub kf_cone: Cone,
    pub kf_generators: Vec<Point>,
    pub k_increasing: Verdict,
    pub hzn_inclusion: Verdict,
    /// `k_increasing` and `hzn_inclusion` both refute or both do not.
    pub agreement: bool,
    pub checklist: Checklist,
    pub conclusion: Verdict,
    pub notes: Vec<String>,
}

fn composite_fn(g: &ScalarConvexFn, map: &MapSpec) -> ScalarFn {
    let (g, map2) = (g.clone(), map.clone());
    ScalarFn::new(map.input_space(), format!("{} o {}", g.label(), map.label()), move |x| match map2.try_eval(x) {
        Some(y) => g.eval(&y),
        None => f64::INFINITY,
    })
}

fn check_proper(g: &ScalarConvexFn, map: &MapSpec, seed: u64) -> Result<()> {
    let h = composite_fn(g, map);
    let s = map.default_sampler(seed);
    const PROBES: usize = 1000;
    if (0..PROBES as u64).any(|i| h.eval(&s.point(i)).is_finite()) {
        Ok(())
    } else {
        Err(KconeError::ImproperComposite(PROBES))
    }
}

/// Estimates `−K_F°`, forms `K̃_F`, and tests ii) `g` `K̃_F`-increasing and
/// iii) `K̃_F ⊂ −hzn g` on the generators of `K̃_F`.
pub fn check_composition_preconditions(
    g: &ScalarConvexFn,
    map: &MapSpec,
    cfg: &CompositeConfig,
) -> Result<CompositeReport> {
    let out = map.output_space();
    if g.space() != out {
        return Err(KconeError::mismatch(&out, &g.space()));
    }
    check_proper(g, map, cfg.seed)?;
    let mut notes = vec![];
    let kf_estimate = estimate_dual_kf(map, cfg.n_dirs, cfg.budget, cfg.seed)?;
    let kf_cone = if kf_estimate.accepted.is_empty() {
        notes.push("no accepted directions: K_F estimate is the whole space".into());
        Cone::full(out)
    } else {
        Cone::h_rep(out, kf_estimate.accepted.iter().map(|p| p.coords.clone()).collect(), vec![])?
    };
    let kf_generators = match kf_cone.direction_generators() {
        Ok(g) => g,
        Err(e) => {
            notes.push(format!("exact generators unavailable ({e}); using relative-interior samples"));
            kf_cone.ri_sample(16, cfg.seed)?.into_iter().filter_map(|p| p.normalized()).collect()
        }
    };
    let out_sampler = Sampler::boxed(out, -2.0, 2.0, cfg.seed);
    let k_increasing = test_k_increasing(g, &kf_cone, &out_sampler, cfg.budget, cfg.seed, cfg.tol)?;

    let mut probes: Vec<Point> = vec![Point::zeros(out)];
    probes.extend(out_sampler.sample(4));
    let mut hzn_inclusion = None;
    for kh in &kf_generators {
        if let v @ Verdict::Refuted { .. } = hzn_contains(g, &kh.neg(), &probes, cfg.t_max, HZN_TOL)? {
            let inner = v.witness().cloned().unwrap();
            hzn_inclusion = Some(Verdict::refuted(Witness::Direction { u: kh.clone(), inner: Box::new(inner) }));
            break;
        }
    }
    let hzn_inclusion = hzn_inclusion.unwrap_or_else(|| Verdict::Consistent {
        budget: Budget::new(kf_generators.len(), cfg.seed).noted("every generator k satisfies -k in hzn g"),
    });
    let agreement = k_increasing.is_refuted() == hzn_inclusion.is_refuted();
    if !agreement {
        notes.push("ii) and iii) disagree".into());
    }
    let conclusion = match k_increasing.witness() {
        Some(w) if k_increasing.is_refuted() => Verdict::refuted(Witness::Direction {
            u: match w {
                Witness::Order { x, y, .. } => y.sub(x)?,
                _ => Point::zeros(out),
            },
            inner: Box::new(w.clone()),
        }),
        _ => Verdict::Consistent {
            budget: Budget::new(cfg.budget, cfg.seed).noted("g is increasing for the estimated K_F"),
        },
    };
    let checklist = Checklist {
        i_cone_exists: conclusion.clone(),
        ii_g_kf_increasing: k_increasing.clone(),
        iii_kf_in_neg_hzn: hzn_inclusion.clone(),
        iv_polar_inclusion: "derived from iii)".into(),
    };
    Ok(CompositeReport {
        g: g.label().to_string(),
        map: map.label(),
        kf_estimate,
        kf_cone,
        kf_generators,
        k_increasing,
        hzn_inclusion,
        agreement,
        checklist,
        conclusion,
        notes,
    })
}

/// `g(F(x)) ≤ g(F(x) + k)` for sampled `x ∈ dom F` and `k ∈ K`.
#[allow(clippy::too_many_arguments)]
pub fn test_epi_monotone(
    g: &ScalarConvexFn,
    map: &MapSpec,
    k: &Cone,
    sampler: &Sampler,
    budget: usize,
    seed: u64,
    tol: f64,
) -> Result<Verdict> {
    if k.space != map.output_space() {
        return Err(KconeError::mismatch(&map.output_space(), &k.space));
    }
    let (gens, ri) = cone_directions(k, seed)?;
    if gens.is_empty() && ri.is_empty() {
        return Ok(Verdict::Consistent { budget: Budget::new(0, seed).noted("K = {0}: only k = 0") });
    }
    let s = sampler.with_seed(seed);
    let mut used = 0;
    for i in 0..budget as u64 {
        let Some(fx) = map.try_eval(&s.point(i)) else { continue };
        let gx = g.eval(&fx);
        if !gx.is_finite() {
            continue;
        }
        used += 1;
        let y = fx.add(&pick_k(&gens, &ri, i, seed).unwrap())?;
        let gy = g.eval(&y);
        if order_violation(gx, gy, tol) {
            return Ok(Verdict::refuted(Witness::Order { x: fx, y, gx, gy }));
        }
    }
    if used == 0 {
        return Err(KconeError::DomainStarvation(budget));
    }
    Ok(Verdict::consistent(used, seed))
}

/// `g(F(x)) ≤ g(y)` for random convex combinations `(x, y)` of cloud points.
/// Combinations with `x ∉ dom F` are skipped and counted.
pub fn test_hull_monotone(
    g: &ScalarConvexFn,
    cloud: &SampleCloud,
    budget: usize,
    seed: u64,
    tol: f64,
) -> Result<Verdict> {
    if cloud.is_empty() {
        return Err(KconeError::Empty("sample cloud"));
    }
    let map = &cloud.map;
    let n = cloud.len();
    let mut used = 0;
    let mut skipped = 0;
    for i in 0..budget as u64 {
        let mut rng = stream_rng(seed ^ PAIR_STREAM_SALT, i);
        let picks = 2 + (i % 2) as usize;
        let idx: Vec<usize> = (0..picks).map(|_| rng.random_range(0..n)).collect();
        let w: Vec<f64> = (0..picks).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = w.iter().sum();
        let mut x = Point::zeros(cloud.points[0].0.space);
        let mut y = Point::zeros(cloud.points[0].1.space);
        for (j, wj) in idx.iter().zip(&w) {
            x = x.axpy(wj / total, &cloud.points[*j].0)?;
            y = y.axpy(wj / total, &cloud.points[*j].1)?;
        }
        let Some(fx) = map.try_eval(&x) else {
            skipped += 1;
            continue;
        };
        used += 1;
        let (gfx, gy) = (g.eval(&fx), g.eval(&y));
        if order_violation(gfx, gy, tol) {
            return Ok(Verdict::refuted(Witness::Order { x: fx, y, gx: gfx, gy }));
        }
    }
    Ok(Verdict::Consistent { budget: Budget::new(used, seed).noted(format!("{skipped} combinations outside dom F")) })
}

/// Secant test of `x ↦ g(F(x))`, `+∞` outside `dom F`.
pub fn test_composition_convex(
    g: &ScalarConvexFn,
    map: &MapSpec,
    sampler: &Sampler,
    budget: usize,
    seed: u64,
) -> Result<Verdict> {
    if g.space() != map.output_space() {
        return Err(KconeError::mismatch(&map.output_space(), &g.space()));
    }
    test_scalar_convexity(&composite_fn(g, map), sampler, budget, seed, DEFAULT_TOL)
}
