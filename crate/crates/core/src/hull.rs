//! Sampled graph clouds, hull membership, horizon evidence, and the
//! verifier for `Epi_K F = cl conv(gph F)`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::affine::{construct_affine_k_majorant, construct_affine_k_minorant, minmax_obstruction};
use crate::cones::Cone;
use crate::convexity::test_k_convexity;
use crate::error::{KconeError, Result};
use crate::linalg::rank;
use crate::lp::{hull_membership, solve, HullMembership, LpProblem, LpStatus};
use crate::maps::MapSpec;
use crate::sampling::Sampler;
use crate::scalar::ScalarFn;
use crate::space::{dot, Point, SpaceDesc};
use crate::verdict::{Budget, Verdict, Witness};

pub const HULL_TOL: f64 = 1e-8;
pub const DEFAULT_T_LIST: [f64; 3] = [1.0, 10.0, 100.0];
const MAX_DRAW_FACTOR: usize = 50;
const MAX_HORIZON_GENERATORS: usize = 16;

/// Hex SHA-256 of the JSON form of an LP certificate.
pub fn certificate_hash<T: Serialize>(cert: &T) -> String {
    let bytes = serde_json::to_vec(cert).expect("certificate serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Pairs `(x, F(x))`.
#[derive(Debug, Clone)]
pub struct SampleCloud {
    pub map: MapSpec,
    pub points: Vec<(Point, Point)>,
    /// `(−x, F(−x))` stored next to each `(x, F(x))`.
    pub symmetrized: bool,
    pub seed: u64,
    pub n: usize,
}

fn joint(x: &Point, y: &Point) -> Point {
    let mut c = x.coords.clone();
    c.extend_from_slice(&y.coords);
    Point { space: SpaceDesc::rn(c.len()), coords: c }
}

impl SampleCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(x, y)` concatenated into one vector per point.
    pub fn joint_points(&self) -> Vec<Point> {
        self.points.iter().map(|(x, y)| joint(x, y)).collect()
    }

    pub fn xs(&self) -> Vec<Point> {
        self.points.iter().map(|(x, _)| x.clone()).collect()
    }
}

/// `n` in-domain draws (at most `50n` attempts); with `symmetrize` and a
/// symmetric domain each draw is paired with its negation.
pub fn sample_graph(map: &MapSpec, sampler: &Sampler, n: usize, seed: u64, symmetrize: bool) -> Result<SampleCloud> {
    if n == 0 {
        return Err(KconeError::Empty("sample cloud"));
    }
    if sampler.space != map.input_space() {
        return Err(KconeError::mismatch(&map.input_space(), &sampler.space));
    }
    let s = sampler.with_seed(seed);
    let sym = symmetrize && map.domain().is_symmetric();
    let mut points = Vec::with_capacity(if sym { 2 * n } else { n });
    let mut taken = 0;
    let mut i = 0u64;
    while taken < n && i < (MAX_DRAW_FACTOR * n) as u64 {
        let x = s.point(i);
        i += 1;
        let Some(y) = map.try_eval(&x) else { continue };
        taken += 1;
        let neg = x.neg();
        points.push((x, y));
        if sym {
            if let Some(y2) = map.try_eval(&neg) {
                points.push((neg, y2));
            }
        }
    }
    if taken == 0 {
        return Err(KconeError::DomainStarvation(i as usize));
    }
    Ok(SampleCloud { map: map.clone(), points, symmetrized: sym, seed, n })
}

/// LP membership of `(x, y)` in the convex hull of the cloud.
pub fn graph_hull_membership(cloud: &SampleCloud, x: &Point, y: &Point, tol: f64) -> Result<HullMembership> {
    if cloud.is_empty() {
        return Err(KconeError::Empty("sample cloud"));
    }
    x.check_space(&cloud.points[0].0.space)?;
    y.check_space(&cloud.points[0].1.space)?;
    hull_membership(&cloud.joint_points(), &joint(x, y), tol)
}

fn centroid(points: &[Point]) -> Point {
    let mut c = vec![0.0; points[0].coords.len()];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(&p.coords) {
            *ci += pi;
        }
    }
    let n = points.len() as f64;
    Point { space: points[0].space, coords: c.into_iter().map(|v| v / n).collect() }
}

fn check_t_list(t_list: &[f64]) -> Result<()> {
    let ok = !t_list.is_empty()
        && t_list[0] > 0.0
        && t_list.windows(2).all(|w| w[1] > w[0])
        && t_list.iter().all(|t| t.is_finite());
    if ok {
        Ok(())
    } else {
        Err(KconeError::Parse("t_list must be positive and increasing".into()))
    }
}

/// Verdict plus hashes of the membership certificates produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonEvidence {
    pub verdict: Verdict,
    pub certificates: Vec<String>,
}

/// Tests `(x̄, ȳ + t·u)` against the hull of `points` for each `t`, with
/// `(x̄, ȳ)` the centroid.
pub fn horizon_evidence_points(
    points: &[(Point, Point)],
    u: &Point,
    t_list: &[f64],
    tol: f64,
) -> Result<HorizonEvidence> {
    check_t_list(t_list)?;
    if points.is_empty() {
        return Err(KconeError::Empty("sample cloud"));
    }
    u.check_space(&points[0].1.space)?;
    if u.norm() == 0.0 {
        return Ok(HorizonEvidence {
            verdict: Verdict::Consistent { budget: Budget::new(0, 0).noted("u = 0") },
            certificates: vec![],
        });
    }
    let xs: Vec<Point> = points.iter().map(|(x, _)| x.clone()).collect();
    let ys: Vec<Point> = points.iter().map(|(_, y)| y.clone()).collect();
    let (xb, yb) = (centroid(&xs), centroid(&ys));
    let cloud: Vec<Point> = points.iter().map(|(x, y)| joint(x, y)).collect();
    let mut certificates = vec![];
    for &t in t_list {
        let q = joint(&xb, &yb.axpy(t, u)?);
        let m = hull_membership(&cloud, &q, tol)?;
        match (&m.coefficients, &m.separator) {
            (Some(c), _) => certificates.push(certificate_hash(c)),
            (None, Some(s)) => certificates.push(certificate_hash(s)),
            _ => {}
        }
        if !m.inside {
            return Ok(HorizonEvidence {
                verdict: Verdict::refuted(Witness::HullGap {
                    u: u.clone(),
                    t,
                    note: "insufficient sample or genuine failure".into(),
                }),
                certificates,
            });
        }
    }
    let mut b = Budget::new(t_list.len(), 0).noted(format!("base: centroid of {} cloud points", points.len()));
    b.seed = None;
    Ok(HorizonEvidence { verdict: Verdict::Consistent { budget: b }, certificates })
}

/// `{0}×ℝ₊u ⊂ [conv gph F]^∞` evidence on a fixed cloud. A failure means
/// the sample is too small or the inclusion is false.
pub fn horizon_direction_evidence(cloud: &SampleCloud, u: &Point, t_list: &[f64], tol: f64) -> Result<Verdict> {
    let mut v = horizon_evidence_points(&cloud.points, u, t_list, tol)?.verdict;
    if let Verdict::Consistent { budget } = &mut v {
        budget.seed = Some(cloud.seed);
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonEntry {
    pub u: Point,
    pub verdict: Verdict,
    pub cloud_size: usize,
    pub doublings: usize,
    pub certificates: Vec<String>,
}

/// Horizon evidence, doubling the number of draws from `n0` while it fails
/// and the next size stays within `n_max`.
#[allow(clippy::too_many_arguments)]
pub fn horizon_evidence_adaptive(
    map: &MapSpec,
    sampler: &Sampler,
    u: &Point,
    t_list: &[f64],
    tol: f64,
    n0: usize,
    n_max: usize,
    seed: u64,
) -> Result<HorizonEntry> {
    let mut n = n0;
    let mut doublings = 0;
    loop {
        let cloud = sample_graph(map, sampler, n, seed, true)?;
        let ev = horizon_evidence_points(&cloud.points, u, t_list, tol)?;
        if !ev.verdict.is_refuted() || 2 * n > n_max {
            return Ok(HorizonEntry {
                u: u.clone(),
                verdict: ev.verdict,
                cloud_size: cloud.len(),
                doublings,
                certificates: ev.certificates,
            });
        }
        n *= 2;
        doublings += 1;
    }
}

/// Outcome of the centroid-envelope LP
/// `min ⟨a,x̄⟩ + β  s.t.  ⟨a,xⱼ⟩ + β ≥ f(xⱼ)`, `x̄` the sample centroid.
///
/// The optimum is the upper envelope of the samples at `x̄`. `found` when it
/// does not exceed `f(x̄)`, i.e. `f` is matched by an affine majorant on the
/// samples. Otherwise `lambda` (convex weights with `Σλⱼxⱼ = x̄`) certifies
/// that every affine majorant on the samples overshoots `f(x̄)` by `gap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantSearch {
    pub found: bool,
    pub a: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub envelope: f64,
    pub centroid_value: f64,
    pub gap: f64,
    pub lambda: Vec<f64>,
    pub certificate: String,
}

pub fn affine_majorant_search(f: &ScalarFn, samples: &[Point], tol: f64) -> Result<MajorantSearch> {
    let pts: Vec<(&Point, f64)> = samples.iter().map(|x| (x, f.eval(x))).filter(|(_, v)| v.is_finite()).collect();
    if pts.is_empty() {
        return Err(KconeError::Empty("majorant samples"));
    }
    let d = pts[0].0.coords.len();
    let xs: Vec<Point> = pts.iter().map(|(x, _)| (*x).clone()).collect();
    let xb = centroid(&xs);
    let fv: Vec<f64> = pts.iter().map(|(_, v)| *v).collect();

    let mut dual = LpProblem::new(pts.len()).maximize(fv.clone());
    for r in 0..d {
        dual = dual.eq(xs.iter().map(|x| x.coords[r]).collect(), xb.coords[r]);
    }
    dual = dual.eq(vec![1.0; pts.len()], 1.0);
    let dres = solve(&dual)?;
    if dres.status != LpStatus::Optimal {
        return Err(KconeError::Unsupported(format!("envelope LP status {:?}", dres.status)));
    }
    let lambda: Vec<f64> = dres.x.unwrap().into_iter().map(|v| v.max(0.0)).collect();
    let envelope = dot(&lambda, &fv);

    let mut primal = LpProblem::new(d + 1).minimize(xb.coords.iter().copied().chain([1.0]).collect());
    for (x, v) in &pts {
        primal = primal.ge(x.coords.iter().copied().chain([1.0]).collect(), *v);
    }
    for j in 0..=d {
        primal = primal.free(j);
    }
    let pres = solve(&primal)?;
    let (a, beta) = match (pres.status, pres.x) {
        (LpStatus::Optimal, Some(z)) => (Some(z[..d].to_vec()), Some(z[d])),
        _ => (None, None),
    };

    let fc = f.eval(&xb);
    let gap = if fc.is_finite() { envelope - fc } else { f64::INFINITY };
    let scale = 1.0 + fv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let found = gap <= tol * scale;
    let certificate = certificate_hash(&lambda);
    Ok(MajorantSearch { found, a, beta, envelope, centroid_value: fc, gap, lambda, certificate })
}

/// A generator set `{bᵢ}` with a ray set `Cⁱ` (as a sampler over the input
/// space) for the sufficiency hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyItem {
    pub b: Point,
    pub rays: Sampler,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyEntry {
    pub b: Point,
    /// `F(Cⁱ) ⊂ ℝ₊bᵢ` on the samples.
    pub range: Verdict,
    /// `⟨bᵢ,F⟩` has no affine majorant on `Cⁱ`.
    pub no_majorant: Verdict,
    pub certificate: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullConfig {
    pub seed: u64,
    pub budget: usize,
    pub n_cloud: usize,
    pub cloud_max: usize,
    pub t_list: Vec<f64>,
    pub tol: f64,
    pub n_dirs: usize,
    #[serde(default)]
    pub sufficiency: Vec<SufficiencyItem>,
}

impl Default for HullConfig {
    fn default() -> Self {
        HullConfig {
            seed: 0,
            budget: 500,
            n_cloud: 200,
            cloud_max: 800,
            t_list: DEFAULT_T_LIST.to_vec(),
            tol: HULL_TOL,
            n_dirs: 200,
            sufficiency: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullVerifyReport {
    pub map: String,
    pub cone: String,
    pub k_closed_convex: Verdict,
    pub self_dual_inclusion: Verdict,
    pub k_convexity: Verdict,
    pub minmax_obstruction: Option<Verdict>,
    pub horizon_evidence: Vec<HorizonEntry>,
    pub sufficiency: Vec<SufficiencyEntry>,
    /// From the necessary checks only.
    pub overall: Verdict,
    pub skipped: Vec<String>,
    pub lp_certificates: Vec<String>,
}

fn negative_witness(v: &Verdict) -> Option<Witness> {
    match v {
        Verdict::Refuted { witness } => Some(witness.clone()),
        Verdict::Exact { holds: false, certificate } => Some(Witness::Note { text: certificate.clone() }),
        _ => None,
    }
}

fn minmax_check(
    map: &MapSpec,
    k: &Cone,
    cfg: &HullConfig,
    skipped: &mut Vec<String>,
    certs: &mut Vec<String>,
) -> Result<Option<Verdict>> {
    if k.is_pointed().is_negative() {
        skipped.push("minmax: K is not pointed".into());
        return Ok(None);
    }
    let gens = match k.dual_generators() {
        Ok(g) => g,
        Err(_) => {
            skipped.push("minmax: dual of K is not finitely generated".into());
            return Ok(None);
        }
    };
    let xs = sample_graph(map, &map.cloud_sampler(cfg.seed), cfg.n_cloud, cfg.seed, false)?.xs();
    for (i, u) in gens.iter().enumerate() {
        let ms = affine_majorant_search(&map.scalarize(u), &xs, cfg.tol)?;
        certs.push(ms.certificate.clone());
        if !ms.found {
            return Ok(Some(Verdict::Consistent {
                budget: Budget::new(xs.len(), cfg.seed)
                    .noted(format!("no affine majorant of <u,F> for dual generator {i} (gap {:.3e})", ms.gap)),
            }));
        }
    }
    let Some((w, e)) = k.h_form() else {
        skipped.push("minmax: K has no H-representation".into());
        return Ok(None);
    };
    let d = k.space.ambient_dim();
    if !e.is_empty() || w.is_empty() || rank(&w, d, None) < w.len() {
        skipped.push("minmax: scalar majorants found but K lacks independent normals".into());
        return Ok(None);
    }
    let normals: Vec<Point> = w.iter().map(|r| Point { space: k.space, coords: r.clone() }).collect();
    let mut scalar = vec![];
    for b in &normals {
        let ms = affine_majorant_search(&map.scalarize(b), &xs, cfg.tol)?;
        certs.push(ms.certificate.clone());
        match (ms.found, ms.a, ms.beta) {
            (true, Some(a), Some(beta)) => scalar.push((Point { space: map.input_space(), coords: a }, beta)),
            _ => {
                return Ok(Some(Verdict::Consistent {
                    budget: Budget::new(xs.len(), cfg.seed).noted("no affine majorant along a normal of K"),
                }))
            }
        }
    }
    let bounds = construct_affine_k_minorant(map, &normals, &[])
        .and_then(|lo| construct_affine_k_majorant(map, &normals, &scalar).map(|hi| (lo, hi)));
    match bounds {
        Ok((lo, hi)) => Ok(Some(minmax_obstruction(
            map,
            k,
            Some(&lo),
            Some(&hi),
            &map.default_sampler(cfg.seed),
            cfg.budget,
            cfg.seed,
            cfg.tol,
        )?)),
        Err(e) => {
            skipped.push(format!("minmax: bound construction failed ({e})"));
            Ok(None)
        }
    }
}

fn sufficiency_check(map: &MapSpec, item: &SufficiencyItem, tol: f64) -> Result<SufficiencyEntry> {
    item.b.check_space(&map.output_space())?;
    let bn2 = item.b.dot(&item.b)?;
    if bn2 == 0.0 {
        return Err(KconeError::ZeroVector("sufficiency generator"));
    }
    let s = &item.rays;
    let mut xs = vec![];
    let mut i = 0u64;
    let mut range = None;
    while xs.len() < item.n && i < (MAX_DRAW_FACTOR * item.n.max(1)) as u64 {
        let x = s.point(i);
        i += 1;
        let Some(y) = map.try_eval(&x) else { continue };
        let c = y.dot(&item.b)? / bn2;
        let resid = y.axpy(-c, &item.b)?.norm();
        if range.is_none() && (resid > tol * (1.0 + y.norm()) || c < -tol) {
            range = Some(Verdict::refuted(Witness::Vector {
                v: y,
                note: format!("F(x) not in R+ b at x = {:?}", x.coords),
            }));
        }
        xs.push(x);
    }
    if xs.is_empty() {
        return Err(KconeError::DomainStarvation(i as usize));
    }
    let range = range.unwrap_or(Verdict::consistent(xs.len(), s.seed));
    let ms = affine_majorant_search(&map.scalarize(&item.b), &xs, tol)?;
    let no_majorant = if ms.found {
        Verdict::refuted(Witness::Note { text: "affine majorant of <b,F> found on the ray samples".into() })
    } else {
        Verdict::Consistent { budget: Budget::new(xs.len(), s.seed).noted(format!("envelope gap {:.3e}", ms.gap)) }
    };
    Ok(SufficiencyEntry { b: item.b.clone(), range, no_majorant, certificate: Some(ms.certificate) })
}

/// Runs, in order: representation sanity, `K ⊂ −K°`, `K`-convexity, the
/// minorant/majorant obstruction, horizon evidence on generators of `K`,
/// and the optional sufficiency items.
pub fn verify_epi_equals_hull(map: &MapSpec, k: &Cone, cfg: &HullConfig) -> Result<HullVerifyReport> {
    if k.space != map.output_space() {
        return Err(KconeError::mismatch(&map.output_space(), &k.space));
    }
    check_t_list(&cfg.t_list)?;
    let mut skipped = vec![];
    let mut certs = vec![];

    let k_closed_convex = Verdict::exact(true, format!("{} is closed and convex by representation", k.label()));
    let self_dual_inclusion = k.check_self_dual_inclusion(cfg.n_dirs, cfg.seed);
    let k_convexity = test_k_convexity(map, k, cfg.budget, cfg.seed)?;
    let minmax = minmax_check(map, k, cfg, &mut skipped, &mut certs)?;

    let mut horizon_evidence = vec![];
    match k.direction_generators() {
        Ok(gens) => {
            if gens.len() > MAX_HORIZON_GENERATORS {
                skipped.push(format!(
                    "horizon: only the first {MAX_HORIZON_GENERATORS} of {} generators tested",
                    gens.len()
                ));
            }
            let sampler = map.cloud_sampler(cfg.seed);
            for u in gens.iter().take(MAX_HORIZON_GENERATORS) {
                let e = horizon_evidence_adaptive(
                    map,
                    &sampler,
                    u,
                    &cfg.t_list,
                    cfg.tol,
                    cfg.n_cloud,
                    cfg.cloud_max,
                    cfg.seed,
                )?;
                certs.extend(e.certificates.iter().cloned());
                horizon_evidence.push(e);
            }
        }
        Err(e) => skipped.push(format!("horizon: generators unavailable ({e})")),
    }

    let mut sufficiency = vec![];
    if cfg.sufficiency.is_empty() {
        skipped.push("sufficiency: no generator/ray-set items supplied".into());
    }
    for item in &cfg.sufficiency {
        let e = sufficiency_check(map, item, cfg.tol)?;
        certs.extend(e.certificate.iter().cloned());
        sufficiency.push(e);
    }

    let necessary = [&self_dual_inclusion, &k_convexity].into_iter().chain(minmax.as_ref());
    let overall = match necessary.filter_map(negative_witness).next() {
        Some(w) => Verdict::refuted(w),
        None => Verdict::Consistent { budget: Budget::new(cfg.budget, cfg.seed).noted("necessary checks passed") },
    };
    Ok(HullVerifyReport {
        map: map.label(),
        cone: k.label(),
        k_closed_convex,
        self_dual_inclusion,
        k_convexity,
        minmax_obstruction: minmax,
        horizon_evidence,
        sufficiency,
        overall,
        skipped,
        lp_certificates: certs,
    })
}
