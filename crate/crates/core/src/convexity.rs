//! Convexity of scalar functions and `K`-convexity of maps through their
//! scalarizations `⟨u,F⟩`, `u ∈ −K°`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{Cone, ConeRep};
use crate::error::{KconeError, Result};
use crate::linalg::{lambda_min, lstsq, orth_complement, sym_eigen};
use crate::maps::{MapKind, MapSpec};
use crate::sampling::{stream_rng, unit_vec, Sampler};
use crate::scalar::ScalarFn;
use crate::space::{norm, svec_unchecked, Point};
use crate::verdict::{Budget, Verdict, Witness};

pub const DEFAULT_BUDGET: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const AFFINE_TOL: f64 = 1e-8;
/// Directions with `|λ_min(smat u)|` below this are reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-3;
const RI_DIRS: usize = 16;
const ALPHA_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const ALPHA_STREAM_SALT: u64 = 0x5eca_a17a;
const DIR_STREAM_SALT: u64 = 0xd1ec7;

fn secant(f: &ScalarFn, x: &Point, y: &Point, alpha: f64, fx: f64, fy: f64) -> (f64, f64, Point) {
    let z = x.scale(alpha).add(&y.scale(1.0 - alpha)).expect("same space");
    let fz = f.eval(&z);
    let chord = alpha * fx + (1.0 - alpha) * fy;
    if !fz.is_finite() {
        return (f64::MAX, 1.0 + fx.abs() + fy.abs(), z);
    }
    (fz - chord, 1.0 + fx.abs() + fy.abs() + fz.abs(), z)
}

/// Secant excess `f(αx+(1−α)y) − αf(x) − (1−α)f(y)` and its tolerance scale.
/// A midpoint outside the domain yields `f64::MAX`.
pub fn secant_excess(f: &ScalarFn, x: &Point, y: &Point, alpha: f64) -> (f64, f64) {
    let (e, s, _) = secant(f, x, y, alpha, f.eval(x), f.eval(y));
    (e, s)
}

/// Re-evaluates a secant witness (after stripping direction wrappers).
/// `Some(true)` when it still violates convexity beyond `tol`.
pub fn replay_secant(f: &ScalarFn, w: &Witness, tol: f64) -> Option<bool> {
    match w.innermost() {
        Witness::Secant { x, y, alpha, .. } => {
            let (e, s) = secant_excess(f, x, y, *alpha);
            Some(e > tol * s)
        }
        _ => None,
    }
}

fn check_triple(f: &ScalarFn, x: &Point, y: &Point, alpha: f64, fx: f64, fy: f64, tol: f64) -> Option<Witness> {
    let (excess, scale, _) = secant(f, x, y, alpha, fx, fy);
    (excess > tol * scale).then(|| Witness::Secant { x: x.clone(), y: y.clone(), alpha, excess })
}

/// Sampled secant test, plus the gradient inequality when `f` has a gradient.
/// Gradient violations are turned into secant triples close to `x`.
pub fn test_scalar_convexity(f: &ScalarFn, sampler: &Sampler, budget: usize, seed: u64, tol: f64) -> Result<Verdict> {
    let s = sampler.with_seed(seed);
    let mut evaluated = 0usize;
    for i in 0..budget as u64 {
        let x = s.point(2 * i);
        let y = s.point(2 * i + 1);
        let (fx, fy) = (f.eval(&x), f.eval(&y));
        if !fx.is_finite() || !fy.is_finite() {
            continue;
        }
        evaluated += 1;
        let alpha = if i % 2 == 0 {
            ALPHA_GRID[(i as usize / 2) % ALPHA_GRID.len()]
        } else {
            0.02 + 0.96 * stream_rng(seed ^ ALPHA_STREAM_SALT, i).random::<f64>()
        };
        if let Some(w) = check_triple(f, &x, &y, alpha, fx, fy, tol) {
            return Ok(Verdict::refuted(w));
        }
        if let Some(g) = f.gradient(&x) {
            let d = y.sub(&x)?;
            let lin = fx + g.dot(&d)?;
            if lin - fy > tol * (1.0 + fx.abs() + fy.abs() + lin.abs()) {
                for k in 1..=40 {
                    let s = 0.5f64.powi(k);
                    if let Some(w) = check_triple(f, &x, &y, 1.0 - s, fx, fy, tol) {
                        return Ok(Verdict::refuted(w));
                    }
                }
            }
        }
    }
    if evaluated == 0 {
        return Err(KconeError::DomainStarvation(2 * budget));
    }
    Ok(Verdict::Consistent { budget: Budget::new(evaluated, seed) })
}

/// `Exact` answer for the matrix gallery (`V ⪰ 0`) and affine maps.
pub fn analytic_convexity(map: &MapSpec, u: &Point) -> Result<Verdict> {
    u.check_space(&map.output_space())?;
    match &map.kind {
        MapKind::AffineMap { .. } => Ok(Verdict::exact(true, "affine map: every scalarization is affine")),
        _ if map.is_matrix_gallery() => {
            let lam = lambda_min(u);
            Ok(Verdict::exact(lam >= -1e-12 * (1.0 + u.norm()), format!("lambda_min(smat u) = {lam:.6e}")))
        }
        _ => Err(KconeError::NoAnalyticCertificate(map.kind_name())),
    }
}

/// A secant triple along a line where `⟨u,F⟩` is concave, for matrix-gallery
/// maps and `u` with a negative eigenvalue.
pub fn analytic_witness(map: &MapSpec, u: &Point) -> Option<Witness> {
    if !map.is_matrix_gallery() || u.space != map.output_space() {
        return None;
    }
    let (vals, vecs) = sym_eigen(&crate::space::smat(u));
    let n = vals.len();
    let lam = vals[n - 1];
    if lam >= 0.0 {
        return None;
    }
    let q = vecs.column(n - 1).into_owned();
    let f = map.scalarize(u);
    let triple = |x: Point, y: Point, alpha: f64| {
        let (excess, scale) = secant_excess(&f, &x, &y, alpha);
        (excess > DEFAULT_TOL * scale).then_some(Witness::Secant { x, y, alpha, excess })
    };
    match &map.kind {
        MapKind::Square { .. } => {
            let y = svec_unchecked(&(2.0 * &q * q.transpose()));
            triple(Point::zeros(y.space), y, 0.5)
        }
        MapKind::GramHalf { n, m } => {
            let mut d = nalgebra::DMatrix::zeros(*n, *m);
            d.set_column(0, &q);
            let y = Point::from_rmat(&(2.0 * d));
            triple(Point::zeros(y.space), y, 0.5)
        }
        MapKind::Inverse { .. } => {
            let mut t = 1.0;
            for _ in 0..60 {
                let mut mm = nalgebra::DMatrix::identity(n, n) / t;
                for i in 0..n - 1 {
                    let qi = vecs.column(i);
                    mm += qi * qi.transpose();
                }
                mm += t * &q * q.transpose();
                if let Some(x) = mm.try_inverse() {
                    let xp = svec_unchecked(&(0.5 * (&x + x.transpose())));
                    if let Some(w) = triple(xp.clone(), xp.scale(3.0), 0.5) {
                        return Some(w);
                    }
                }
                t *= 2.0;
            }
            None
        }
        _ => None,
    }
}

fn unit_dirs_of(points: Vec<Point>) -> Vec<Point> {
    points.into_iter().filter_map(|p| p.normalized()).collect()
}

/// `F` is `K`-convex iff `⟨u,F⟩` is convex for every `u ∈ −K°`.
///
/// Tests the generators of `−K°` (when finitely generated) and points of
/// its relative interior. `Exact(true)` only when every generator carries
/// an analytic certificate.
pub fn test_k_convexity(map: &MapSpec, k: &Cone, budget: usize, seed: u64) -> Result<Verdict> {
    if k.space != map.output_space() {
        return Err(KconeError::mismatch(&map.output_space(), &k.space));
    }
    let gens = k.dual_generators().ok();
    let mut dirs = unit_dirs_of(gens.clone().unwrap_or_default());
    let n_gen = dirs.len();
    dirs.extend(unit_dirs_of(k.dual().ri_sample(RI_DIRS, seed)?));
    let mut all_exact = gens.is_some();
    let mut samples = 0usize;
    for (idx, u) in dirs.iter().enumerate() {
        let v = match analytic_convexity(map, u) {
            Ok(v) => v,
            Err(_) => {
                let f = map.scalarize(u);
                test_scalar_convexity(
                    &f,
                    &map.default_sampler(seed),
                    budget,
                    seed.wrapping_add(idx as u64),
                    DEFAULT_TOL,
                )?
            }
        };
        match v {
            Verdict::Refuted { witness } => {
                return Ok(Verdict::refuted(Witness::Direction { u: u.clone(), inner: Box::new(witness) }))
            }
            Verdict::Exact { holds: false, certificate } => {
                let inner = analytic_witness(map, u).unwrap_or(Witness::Note { text: certificate });
                return Ok(Verdict::refuted(Witness::Direction { u: u.clone(), inner: Box::new(inner) }));
            }
            Verdict::Exact { holds: true, .. } => {}
            Verdict::Consistent { budget } => {
                samples += budget.samples;
                if idx < n_gen {
                    all_exact = false;
                }
            }
        }
    }
    if all_exact {
        return Ok(Verdict::exact(true, format!("all {n_gen} generators of the dual cone certified analytically")));
    }
    Ok(Verdict::Consistent {
        budget: Budget::new(samples, seed).noted(format!("{} dual directions ({n_gen} generators)", dirs.len())),
    })
}

fn affine_fit(
    eval: &dyn Fn(&Point) -> Option<Vec<f64>>,
    sampler: &Sampler,
    budget: usize,
    seed: u64,
    tol: f64,
) -> Result<Verdict> {
    let s = sampler.with_seed(seed);
    let d = s.space.ambient_dim();
    let want = budget.max(d + 2);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut i = 0u64;
    while xs.len() < want && i < 20 * want as u64 {
        let x = s.point(i);
        i += 1;
        if let Some(y) = eval(&x) {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.is_empty() {
        return Err(KconeError::DomainStarvation(i as usize));
    }
    let k = ys[0].len();
    let n = xs.len();
    let mut a = nalgebra::DMatrix::zeros(n, d + 1);
    let mut b = nalgebra::DMatrix::zeros(n, k);
    for r in 0..n {
        for c in 0..d {
            a[(r, c)] = xs[r].coords[c];
        }
        a[(r, d)] = 1.0;
        for c in 0..k {
            b[(r, c)] = ys[r][c];
        }
    }
    let (coef, rank) = lstsq(&a, &b);
    if rank < d + 1 {
        return Err(KconeError::DegenerateSample { rank, needed: d + 1 });
    }
    let fit = &a * &coef;
    let mut worst = (0.0f64, 0usize);
    let mut scale = 1.0f64;
    for r in 0..n {
        let res: Vec<f64> = (0..k).map(|c| fit[(r, c)] - b[(r, c)]).collect();
        let e = norm(&res);
        if e > worst.0 {
            worst = (e, r);
        }
        scale = scale.max(1.0 + norm(&ys[r]));
    }
    if worst.0 <= tol * scale {
        Ok(Verdict::Consistent { budget: Budget::new(n, seed).noted(format!("affine fit residual {:.3e}", worst.0)) })
    } else {
        Ok(Verdict::refuted(Witness::Residual { x: xs[worst.1].clone(), residual: worst.0 }))
    }
}

/// `{0}`-convexity: `F` agrees with an affine map on its domain.
pub fn test_affine(map: &MapSpec, sampler: &Sampler, budget: usize, seed: u64, tol: f64) -> Result<Verdict> {
    affine_fit(&|x| map.try_eval(x).map(|y| y.coords), sampler, budget, seed, tol)
}

/// Affinity test for a scalar function.
pub fn test_scalar_affine(f: &ScalarFn, sampler: &Sampler, budget: usize, seed: u64, tol: f64) -> Result<Verdict> {
    affine_fit(
        &|x| {
            let v = f.eval(x);
            v.is_finite().then(|| vec![v])
        },
        sampler,
        budget,
        seed,
        tol,
    )
}

/// `U`-convexity for a subspace `U`: `⟨e,F⟩` affine for each `e` in a basis of `U^⊥`.
pub fn test_subspace_convexity(map: &MapSpec, u: &Cone, budget: usize, seed: u64) -> Result<Verdict> {
    let d = map.output_space().ambient_dim();
    if u.space != map.output_space() {
        return Err(KconeError::mismatch(&map.output_space(), &u.space));
    }
    let basis = match &u.rep {
        ConeRep::Subspace { basis } => basis.clone(),
        ConeRep::Trivial => vec![],
        ConeRep::Full => crate::linalg::identity_rows(d),
        _ => return Err(KconeError::Unsupported("subspace cone expected".into())),
    };
    let comp = orth_complement(&basis, d);
    if comp.is_empty() {
        return Ok(Verdict::exact(true, "U is the whole space"));
    }
    let mut samples = 0;
    for (i, e) in comp.into_iter().enumerate() {
        let e = Point::new(map.output_space(), e)?;
        let f = map.scalarize(&e);
        match test_scalar_affine(&f, &map.default_sampler(seed), budget, seed.wrapping_add(i as u64), AFFINE_TOL)? {
            Verdict::Refuted { witness } => {
                return Ok(Verdict::refuted(Witness::Direction { u: e, inner: Box::new(witness) }))
            }
            v => samples += consistent_samples(&v),
        }
    }
    Ok(Verdict::consistent(samples, seed))
}

fn consistent_samples(v: &Verdict) -> usize {
    match v {
        Verdict::Consistent { budget } => budget.samples,
        _ => 0,
    }
}

/// `H = {y : ⟨w,y⟩ ≥ 0}`-convexity: convexity of `⟨w,F⟩`.
pub fn test_halfspace_convexity(map: &MapSpec, w: &Point, budget: usize, seed: u64) -> Result<Verdict> {
    w.check_space(&map.output_space())?;
    if w.norm() == 0.0 {
        return Err(KconeError::ZeroVector("halfspace normal"));
    }
    let f = map.scalarize(w);
    Ok(match test_scalar_convexity(&f, &map.default_sampler(seed), budget, seed, DEFAULT_TOL)? {
        Verdict::Refuted { witness } => Verdict::refuted(Witness::Direction { u: w.clone(), inner: Box::new(witness) }),
        v => v,
    })
}

/// Convexity with respect to `∩ {⟨wᵢ,·⟩ ≥ 0}`: every `⟨wᵢ,F⟩` convex.
pub fn test_polyhedral_convexity(map: &MapSpec, normals: &[Point], budget: usize, seed: u64) -> Result<Verdict> {
    let mut samples = 0;
    for (i, w) in normals.iter().enumerate() {
        match test_halfspace_convexity(map, w, budget, seed.wrapping_add(i as u64))? {
            v @ Verdict::Refuted { .. } => return Ok(v),
            v => samples += consistent_samples(&v),
        }
    }
    Ok(Verdict::consistent(samples, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedDir {
    pub u: Point,
    pub witness: Witness,
}

/// Sampled description of `−K_F° = {u : ⟨u,F⟩ convex}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualConeEstimate {
    pub accepted: Vec<Point>,
    pub rejected: Vec<RejectedDir>,
    pub marginal: Vec<Point>,
    pub n_dirs: usize,
    pub budget_per_dir: usize,
    pub seed: u64,
    /// `"analytic"` (eigenvalue criterion), `"affine"` or `"sampled"`.
    pub method: String,
}

/// The `k`-th probe direction: `±eᵢ` first, then random unit vectors.
pub fn probe_direction(space: crate::space::SpaceDesc, k: usize, seed: u64) -> Point {
    let d = space.ambient_dim();
    if k < 2 * d {
        let mut c = vec![0.0; d];
        c[k / 2] = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        return Point { space, coords: c };
    }
    Point { space, coords: unit_vec(&mut stream_rng(seed ^ DIR_STREAM_SALT, k as u64), d) }
}

pub fn estimate_dual_kf(map: &MapSpec, n_dirs: usize, budget: usize, seed: u64) -> Result<DualConeEstimate> {
    if n_dirs == 0 {
        return Err(KconeError::Empty("direction count"));
    }
    let out = map.output_space();
    let method = if map.is_matrix_gallery() {
        "analytic"
    } else if matches!(map.kind, MapKind::AffineMap { .. }) {
        "affine"
    } else {
        "sampled"
    };
    let mut est = DualConeEstimate {
        accepted: vec![],
        rejected: vec![],
        marginal: vec![],
        n_dirs,
        budget_per_dir: budget,
        seed,
        method: method.into(),
    };
    for k in 0..n_dirs {
        let u = probe_direction(out, k, seed);
        match method {
            "analytic" => {
                let lam = lambda_min(&u);
                if lam.abs() < MARGINAL_BAND {
                    est.marginal.push(u);
                } else if lam > 0.0 {
                    est.accepted.push(u);
                } else {
                    let witness = analytic_witness(map, &u)
                        .unwrap_or(Witness::Note { text: format!("lambda_min(smat u) = {lam:.6e}") });
                    est.rejected.push(RejectedDir { u, witness });
                }
            }
            "affine" => est.accepted.push(u),
            _ => {
                let f = map.scalarize(&u);
                match test_scalar_convexity(
                    &f,
                    &map.default_sampler(seed),
                    budget,
                    seed.wrapping_add(k as u64),
                    DEFAULT_TOL,
                )? {
                    Verdict::Refuted { witness } => est.rejected.push(RejectedDir { u, witness }),
                    _ => est.accepted.push(u),
                }
            }
        }
    }
    Ok(est)
}

/// Does the stored witness of a rejected direction still violate convexity?
pub fn replay_rejected(map: &MapSpec, r: &RejectedDir, tol: f64) -> bool {
    replay_secant(&map.scalarize(&r.u), &r.witness, tol).unwrap_or(false)
}

/// Probe sequence `target + 2^{-k} · direction`, `k = 1, 2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LscProbe {
    pub target: Point,
    pub direction: Point,
}

const LSC_STEPS: i32 = 24;
const LSC_TAIL: usize = 12;
const LSC_DECAY_GAP: usize = 6;

/// Lower-semicontinuity evidence along explicit probe sequences. Targets
/// outside the domain are skipped.
pub fn test_scalar_lsc_probes(f: &ScalarFn, probes: &[LscProbe], tol: f64) -> Result<Verdict> {
    let mut used = 0;
    for p in probes {
        let ft = f.eval(&p.target);
        if !ft.is_finite() {
            continue;
        }
        used += 1;
        let pts: Vec<Point> =
            (1..=LSC_STEPS).map(|k| p.target.axpy(0.5f64.powi(k), &p.direction)).collect::<Result<_>>()?;
        let tail: Vec<Point> = pts[pts.len() - LSC_TAIL..].to_vec();
        let values: Vec<f64> = tail.iter().map(|x| f.eval(x)).collect();
        // A continuous deficit shrinks with the step; a jump does not.
        let fine = ft - values[LSC_TAIL - 1];
        let coarse = ft - values[LSC_TAIL - 1 - LSC_DECAY_GAP];
        if fine > tol * (1.0 + ft.abs()) && fine >= 0.5 * coarse {
            return Ok(Verdict::refuted(Witness::Sequence {
                target: p.target.clone(),
                target_value: ft,
                points: tail,
                values,
            }));
        }
    }
    let mut b = Budget::new(used, 0);
    b.seed = None;
    if used == 0 {
        b = b.noted("no in-domain targets");
    }
    Ok(Verdict::Consistent { budget: b })
}

/// Targets from `targets`, one random unit direction each.
pub fn test_scalar_lsc(f: &ScalarFn, targets: &Sampler, budget: usize, seed: u64, tol: f64) -> Result<Verdict> {
    let s = targets.with_seed(seed);
    let d = s.space.ambient_dim();
    let probes: Vec<LscProbe> = (0..budget as u64)
        .map(|i| LscProbe {
            target: s.point(i),
            direction: Point { space: s.space, coords: unit_vec(&mut stream_rng(seed ^ DIR_STREAM_SALT, i), d) },
        })
        .collect();
    Ok(match test_scalar_lsc_probes(f, &probes, tol)? {
        Verdict::Consistent { mut budget } => {
            budget.seed = Some(seed);
            Verdict::Consistent { budget }
        }
        v => v,
    })
}
