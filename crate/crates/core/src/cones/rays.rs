//! Extreme rays of small polyhedral cones, relative-interior sampling and
//! the `K ⊂ −K°` check.
//!
//! Rays of `{Wx ≥ 0, Ex = 0}` are found by brute force over active sets:
//! after splitting off the lineality space `L`, the pointed part lives in a
//! `k`-dimensional subspace and each extreme ray is the one-dimensional
//! solution set of `k − 1` tight normals. Fine for the cones used here
//! (dimension ≲ 10, a few dozen normals); larger inputs are rejected.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{lineality, Cone, ConeRep};
use crate::error::{KconeError, Result};
use crate::linalg::{nullspace, orthonormalize};
use crate::lp;
use crate::sampling::{gaussian_vec, stream_rng, Sampler};
use crate::space::{dot, norm, Point};
use crate::verdict::{Budget, Verdict, Witness};

const MAX_SUBSETS: u128 = 200_000;
const RAY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayDecomposition {
    /// Unit extreme rays of the pointed part, sorted lexicographically.
    pub rays: Vec<Vec<f64>>,
    /// Orthonormal basis of `K ∩ (−K)`.
    pub lineality: Vec<Vec<f64>>,
}

impl RayDecomposition {
    /// Rays followed by `±` each lineality vector.
    pub fn generating_set(&self) -> Vec<Vec<f64>> {
        let mut out = self.rays.clone();
        for l in &self.lineality {
            out.push(l.clone());
            out.push(l.iter().map(|x| -x).collect());
        }
        out
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > RAY_TOL {
            return x.total_cmp(y);
        }
    }
    Ordering::Equal
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn clean(v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.into_iter().map(|x| if (x / n).abs() < 1e-12 { 0.0 } else { x / n }).collect()
}

fn push_unique(out: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    if !out.iter().any(|r| lex_cmp(r, &v) == Ordering::Equal) {
        out.push(v);
    }
}

pub(crate) fn decompose_h(normals: &[Vec<f64>], equalities: &[Vec<f64>], d: usize) -> Result<RayDecomposition> {
    let lin = lineality(normals, equalities, d);
    let mut eqx = equalities.to_vec();
    eqx.extend(lin.iter().cloned());
    let k = nullspace(&eqx, d, Some(1e-10)).len();
    let mut rays = Vec::new();
    if k > 0 {
        let m = normals.len();
        let pick = k - 1;
        if binomial(m, pick) > MAX_SUBSETS {
            return Err(KconeError::Unsupported(format!("ray enumeration over C({m}, {pick}) active sets")));
        }
        let feasible = |z: &[f64]| normals.iter().all(|w| dot(w, z) >= -RAY_TOL);
        let mut idx: Vec<usize> = (0..pick).collect();
        loop {
            let mut rows = eqx.clone();
            rows.extend(idx.iter().map(|&i| normals[i].clone()));
            let ns = nullspace(&rows, d, Some(1e-9));
            if ns.len() == 1 {
                let z = &ns[0];
                for s in [1.0, -1.0] {
                    let cand: Vec<f64> = z.iter().map(|x| s * x).collect();
                    if feasible(&cand) {
                        push_unique(&mut rays, clean(cand));
                    }
                }
            }
            if !next_combination(&mut idx, m) {
                break;
            }
        }
    }
    rays.sort_by(|a, b| lex_cmp(a, b));
    Ok(RayDecomposition { rays, lineality: lin })
}

/// Advances `idx` (strictly increasing, values `< m`) to the next subset.
fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < m - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub(crate) fn decompose_v(generators: &[Vec<f64>]) -> Result<RayDecomposition> {
    let cols: Vec<&[f64]> = generators.iter().map(|g| g.as_slice()).collect();
    let mut two_sided = Vec::new();
    for g in generators {
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        if lp::nonneg_combination(&cols, &neg, false, 1e-9)?.inside {
            two_sided.push(g.clone());
        }
    }
    let lin = orthonormalize(&two_sided, 1e-10);
    let project = |g: &[f64]| {
        let mut r = g.to_vec();
        for l in &lin {
            let c = dot(l, g);
            for (ri, li) in r.iter_mut().zip(l) {
                *ri -= c * li;
            }
        }
        r
    };
    let mut cand: Vec<Vec<f64>> = Vec::new();
    for g in generators {
        let r = project(g);
        if norm(&r) > 1e-10 {
            push_unique(&mut cand, clean(r));
        }
    }
    let mut rays = Vec::new();
    for (i, r) in cand.iter().enumerate() {
        let mut others: Vec<&[f64]> =
            cand.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.as_slice()).collect();
        let neg_lin: Vec<Vec<f64>> = lin.iter().map(|l| l.iter().map(|x| -x).collect()).collect();
        others.extend(lin.iter().map(|l| l.as_slice()));
        others.extend(neg_lin.iter().map(|l| l.as_slice()));
        let redundant = !others.is_empty() && lp::nonneg_combination(&others, r, false, 1e-9)?.inside;
        if !redundant {
            rays.push(r.clone());
        }
    }
    rays.sort_by(|a, b| lex_cmp(a, b));
    Ok(RayDecomposition { rays, lineality: lin })
}

fn positive_combination(gens: &[Vec<f64>], lin: &[Vec<f64>], d: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, index);
    let mut v = vec![0.0; d];
    for g in gens {
        let c = 0.1 + 0.9 * rng.random::<f64>();
        for (vi, gi) in v.iter_mut().zip(g) {
            *vi += c * gi;
        }
    }
    let gam = gaussian_vec(&mut rng, lin.len());
    for (l, c) in lin.iter().zip(gam) {
        for (vi, li) in v.iter_mut().zip(l) {
            *vi += c * li;
        }
    }
    v
}

pub(crate) fn ri_sample(k: &Cone, count: usize, seed: u64) -> Result<Vec<Point>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let d = k.dim();
    let (gens, lin) = match &k.rep {
        ConeRep::Psd { .. } => return Ok(Sampler::psd_interior(k.space, 1.0, seed).sample(count)),
        ConeRep::NegPsd { .. } => {
            return Ok(Sampler::psd_interior(k.space, 1.0, seed).sample(count).iter().map(Point::neg).collect())
        }
        ConeRep::PolyhedralV { generators } => (generators.clone(), Vec::new()),
        _ => {
            let dec = k.decompose()?;
            (dec.rays, dec.lineality)
        }
    };
    if gens.is_empty() && lin.is_empty() {
        return Ok(vec![Point::zeros(k.space)]);
    }
    (0..count as u64).map(|i| Point::new(k.space, positive_combination(&gens, &lin, d, seed, i))).collect()
}

fn pairwise(gens: &mut [Vec<f64>], k: &Cone) -> Verdict {
    gens.sort_by(|a, b| lex_cmp(a, b));
    for g in gens.iter() {
        if let Some(h) = gens.iter().find(|h| dot(g, h) < -RAY_TOL) {
            let v = Point { space: k.space, coords: g.clone() };
            return Verdict::refuted(Witness::Vector {
                v,
                note: format!("generator not in the dual cone (inner product {:.6} with another generator)", dot(g, h)),
            });
        }
    }
    Verdict::exact(true, format!("all {} generators pairwise nonnegative", gens.len()))
}

pub(crate) fn self_dual_inclusion(k: &Cone, n_dirs: usize, seed: u64) -> Verdict {
    match &k.rep {
        ConeRep::Psd { .. } | ConeRep::NegPsd { .. } => Verdict::exact(true, "semidefinite cone is self-dual"),
        ConeRep::PolyhedralV { generators } => pairwise(&mut generators.clone(), k),
        _ => match k.decompose() {
            Ok(dec) => {
                if let Some(l) = dec.lineality.first() {
                    return Verdict::refuted(Witness::Vector {
                        v: Point { space: k.space, coords: l.clone() },
                        note: "lineality direction: l and -l both lie in K".into(),
                    });
                }
                pairwise(&mut dec.rays.clone(), k)
            }
            Err(_) => sampled_inclusion(k, n_dirs, seed),
        },
    }
}

/// Rejection-samples points of `K` and tests pairwise inner products.
fn sampled_inclusion(k: &Cone, n_dirs: usize, seed: u64) -> Verdict {
    let sampler = Sampler::unit_sphere(k.space, seed);
    let pts: Vec<Point> = (0..n_dirs as u64 * 20)
        .map(|i| sampler.point(i))
        .filter(|p| k.contains(p, 1e-9).unwrap_or(false))
        .take(n_dirs)
        .collect();
    for p in &pts {
        for q in &pts {
            if dot(&p.coords, &q.coords) < -RAY_TOL {
                return Verdict::refuted(Witness::Vector {
                    v: p.clone(),
                    note: "sampled point of K not in the dual cone".into(),
                });
            }
        }
    }
    Verdict::Consistent { budget: Budget::new(pts.len(), seed).noted("rejection-sampled points of K") }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpaceDesc;

    #[test]
    fn spectral_rays_are_adjacent_differences() {
        let dec = Cone::spectral(4).decompose().unwrap();
        assert!(dec.lineality.is_empty());
        assert_eq!(dec.rays.len(), 3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [[0.0, 0.0, s, -s], [0.0, s, -s, 0.0], [s, -s, 0.0, 0.0]];
        for (r, e) in dec.rays.iter().zip(expect) {
            for (a, b) in r.iter().zip(e) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_dual_inclusion_cases() {
        assert!(Cone::psd(2).check_self_dual_inclusion(10, 0).is_exact_true());
        assert!(Cone::spectral(2).check_self_dual_inclusion(10, 0).is_exact_true());
        let v = Cone::spectral(3).check_self_dual_inclusion(10, 0);
        let Some(Witness::Vector { v, .. }) = v.witness() else { panic!("expected refutation") };
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v.coords[0]).abs() < 1e-12 && (v.coords[1] - s).abs() < 1e-12 && (v.coords[2] + s).abs() < 1e-12);
        assert!(Cone::orthant(3).check_self_dual_inclusion(10, 0).is_exact_true());
        assert!(Cone::full(SpaceDesc::rn(2)).check_self_dual_inclusion(10, 0).is_refuted());
    }

    #[test]
    fn ri_samples() {
        let v = Cone::v_rep(SpaceDesc::rn(2), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        for p in v.ri_sample(50, 3).unwrap() {
            assert!(p.coords[0] > 0.0 && p.coords[1] > 0.0);
        }
        for p in Cone::psd(2).ri_sample(20, 3).unwrap() {
            assert!(crate::linalg::lambda_min(&p) > 0.0);
        }
        for p in Cone::spectral(3).dual().ri_sample(50, 3).unwrap() {
            assert!(p.coords[0] > p.coords[1] && p.coords[1] > p.coords[2]);
        }
        assert_eq!(Cone::trivial(SpaceDesc::rn(2)).ri_sample(5, 0).unwrap(), vec![Point::rn(&[0.0, 0.0])]);
    }

    #[test]
    fn v_decomposition_drops_redundant_and_finds_lines() {
        let gens = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let dec = Cone::v_rep(SpaceDesc::rn(2), gens).unwrap().decompose().unwrap();
        assert_eq!(dec.rays.len(), 2);
        let gens = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]];
        let dec = Cone::v_rep(SpaceDesc::rn(2), gens).unwrap().decompose().unwrap();
        assert_eq!(dec.lineality.len(), 1);
        assert_eq!(dec.rays, vec![vec![0.0, 1.0]]);
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut idx = vec![0, 1];
        let mut n = 1;
        while next_combination(&mut idx, 5) {
            n += 1;
        }
        assert_eq!(n, 10);
        assert_eq!(binomial(5, 2), 10);
    }
}
