//! Affine `K`-minorants and `K`-majorants for polyhedral `K = {y : ⟨bᵢ,y⟩ ≥ 0}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cones::Cone;
use crate::error::{KconeError, Result};
use crate::linalg::rank;
use crate::maps::MapSpec;
use crate::sampling::Sampler;
use crate::space::{dot, Point};
use crate::verdict::{Budget, Verdict, Witness};

/// Strict margin for `⟨w̄,bᵢ⟩ < δᵢ` and for majorant offsets.
pub const MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Minorant,
    Majorant,
}

/// `G(x) = Lx + w`, claimed to satisfy `F − G ∈ K` (minorant) or `G − F ∈ K` (majorant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineKBound {
    /// One row per output coordinate.
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    pub w: Point,
    pub kind: BoundKind,
    pub cone: Cone,
}

impl AffineKBound {
    pub fn apply(&self, x: &Point) -> Point {
        Point {
            space: self.w.space,
            coords: self.l.iter().zip(&self.w.coords).map(|(r, wi)| dot(r, &x.coords) + wi).collect(),
        }
    }

    /// The vector that must lie in `K`.
    pub fn gap(&self, fx: &Point, x: &Point) -> Point {
        let g = self.apply(x);
        match self.kind {
            BoundKind::Minorant => fx.sub(&g).expect("same space"),
            BoundKind::Majorant => g.sub(fx).expect("same space"),
        }
    }
}

fn check_normals(map: &MapSpec, normals: &[Point]) -> Result<DMatrix<f64>> {
    if normals.is_empty() {
        return Err(KconeError::Empty("normals"));
    }
    let out = map.output_space();
    for b in normals {
        b.check_space(&out)?;
    }
    let d = out.ambient_dim();
    let rows: Vec<Vec<f64>> = normals.iter().map(|b| b.coords.clone()).collect();
    let r = rank(&rows, d, None);
    if r < normals.len() {
        return Err(KconeError::DependentNormals { rank: r, count: normals.len() });
    }
    Ok(DMatrix::from_fn(d, normals.len(), |i, j| normals[j].coords[i]))
}

/// `B (BᵀB)⁻¹`: maps prescribed inner products with the `bᵢ` to the
/// least-norm vector in `span B` realizing them.
fn pseudo_dual(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = b.transpose() * b;
    let inv = gram.try_inverse().ok_or(KconeError::DependentNormals { rank: 0, count: b.ncols() })?;
    Ok(b * inv)
}

/// `L = B(BᵀB)⁻¹Cᵀ`, so that `⟨bᵢ, Lx⟩ = ⟨cᵢ, x⟩`.
fn adjoint_rows(bp: &DMatrix<f64>, cs: &[Point]) -> Vec<Vec<f64>> {
    let d1 = cs[0].coords.len();
    let c = DMatrix::from_fn(d1, cs.len(), |i, j| cs[j].coords[i]);
    let l = bp * c.transpose();
    (0..l.nrows()).map(|i| l.row(i).iter().copied().collect()).collect()
}

/// Zero when it lies in the domain, else the first in-domain draw of the default sampler.
pub fn default_anchor(map: &MapSpec) -> Result<Point> {
    let z = Point::zeros(map.input_space());
    if map.domain_contains(&z) {
        return Ok(z);
    }
    let s = map.default_sampler(0);
    (0..1000).map(|i| s.point(i)).find(|x| map.domain_contains(x)).ok_or(KconeError::DomainStarvation(1000))
}

/// Tangent planes of `⟨bᵢ,F⟩` at the anchors give `(cᵢ, δᵢ)`; then
/// `L = adjoint of (bᵢ ↦ cᵢ)` and `w̄ = s·d` with `⟨d,bᵢ⟩ = −1`, `s` the
/// smallest scale with `⟨w̄,bᵢ⟩ ≤ δᵢ − MARGIN`.
///
/// `anchors` may be empty (default anchor), one shared anchor, or one per normal.
pub fn construct_affine_k_minorant(map: &MapSpec, normals: &[Point], anchors: &[Point]) -> Result<AffineKBound> {
    let b = check_normals(map, normals)?;
    let m = normals.len();
    let shared = match anchors.len() {
        0 => vec![default_anchor(map)?],
        1 => anchors.to_vec(),
        k if k == m => anchors.to_vec(),
        k => return Err(KconeError::DimensionMismatch(format!("{k} anchors for {m} normals"))),
    };
    let mut cs = Vec::with_capacity(m);
    let mut deltas = Vec::with_capacity(m);
    for (i, bi) in normals.iter().enumerate() {
        let x = &shared[i.min(shared.len() - 1)];
        let fx = map.eval(x)?;
        let c = map.grad_or_fd(bi, x).map_err(|e| match e {
            KconeError::OutsideDomain => e,
            _ => KconeError::GradientUnavailable,
        })?;
        deltas.push(bi.dot(&fx)? - c.dot(x)?);
        cs.push(c);
    }
    let bp = pseudo_dual(&b)?;
    let d_vec = &bp * nalgebra::DVector::from_element(m, -1.0);
    let s = deltas.iter().fold(MARGIN, |acc, di| acc.max(MARGIN - di));
    let out = map.output_space();
    let w = Point { space: out, coords: d_vec.iter().map(|v| s * v).collect() };
    let cone = Cone::h_rep(out, normals.iter().map(|p| p.coords.clone()).collect(), vec![])?;
    Ok(AffineKBound { l: adjoint_rows(&bp, &cs), w, kind: BoundKind::Minorant, cone })
}

/// Lifts scalar majorants `⟨aᵢ,x⟩ + βᵢ ≥ ⟨bᵢ,F(x)⟩` to a `K`-majorant:
/// `⟨bᵢ, Lx + w⟩ = ⟨aᵢ,x⟩ + βᵢ + MARGIN`.
pub fn construct_affine_k_majorant(map: &MapSpec, normals: &[Point], scalar: &[(Point, f64)]) -> Result<AffineKBound> {
    let b = check_normals(map, normals)?;
    if scalar.len() != normals.len() {
        return Err(KconeError::DimensionMismatch(format!(
            "{} scalar majorants for {} normals",
            scalar.len(),
            normals.len()
        )));
    }
    for (a, _) in scalar {
        a.check_space(&map.input_space())?;
    }
    let bp = pseudo_dual(&b)?;
    let beta = nalgebra::DVector::from_iterator(scalar.len(), scalar.iter().map(|(_, be)| be + MARGIN));
    let w = &bp * beta;
    let out = map.output_space();
    let cs: Vec<Point> = scalar.iter().map(|(a, _)| a.clone()).collect();
    let cone = Cone::h_rep(out, normals.iter().map(|p| p.coords.clone()).collect(), vec![])?;
    Ok(AffineKBound {
        l: adjoint_rows(&bp, &cs),
        w: Point { space: out, coords: w.iter().copied().collect() },
        kind: BoundKind::Majorant,
        cone,
    })
}

/// Checks the bound's cone membership on `n` in-domain samples.
pub fn verify_k_bound(
    map: &MapSpec,
    bound: &AffineKBound,
    sampler: &Sampler,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<Verdict> {
    if bound.w.space != map.output_space() || bound.cone.space != map.output_space() {
        return Err(KconeError::mismatch(&map.output_space(), &bound.w.space));
    }
    let s = sampler.with_seed(seed);
    let mut checked = 0usize;
    let mut i = 0u64;
    while checked < n && i < 20 * n.max(1) as u64 {
        let x = s.point(i);
        i += 1;
        let Some(fx) = map.try_eval(&x) else { continue };
        checked += 1;
        let r = bound.gap(&fx, &x);
        let (inside, dir) = bound.cone.membership(&r, tol * (1.0 + fx.norm()))?;
        if !inside {
            let residual = dir.map(|u| -u.dot(&r).unwrap_or(0.0)).unwrap_or(f64::NAN);
            return Ok(Verdict::refuted(Witness::Residual { x, residual }));
        }
    }
    if checked == 0 {
        return Err(KconeError::DomainStarvation(i as usize));
    }
    Ok(Verdict::consistent(checked, seed))
}

/// For pointed `K`, an affine `K`-minorant and an affine `K`-majorant that
/// both verify rule out `Epi_K F = cl conv gph F`.
#[allow(clippy::too_many_arguments)]
pub fn minmax_obstruction(
    map: &MapSpec,
    k: &Cone,
    minorant: Option<&AffineKBound>,
    majorant: Option<&AffineKBound>,
    sampler: &Sampler,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<Verdict> {
    if k.is_pointed().is_negative() {
        return Err(KconeError::NotPointed);
    }
    let (Some(lo), Some(hi)) = (minorant, majorant) else {
        return Ok(Verdict::Consistent { budget: Budget::new(0, seed).noted("vacuous: a bound is missing") });
    };
    let mut lo = lo.clone();
    let mut hi = hi.clone();
    lo.cone = k.clone();
    hi.cone = k.clone();
    let v_lo = verify_k_bound(map, &lo, sampler, n, seed, tol)?;
    let v_hi = verify_k_bound(map, &hi, sampler, n, seed.wrapping_add(1), tol)?;
    if !v_lo.is_negative() && !v_hi.is_negative() {
        return Ok(Verdict::refuted(Witness::Note {
            text: format!(
                "affine K-minorant and K-majorant both verify on {n} samples; Epi_K F = cl conv gph F is impossible"
            ),
        }));
    }
    Ok(Verdict::Consistent { budget: Budget::new(n, seed).noted("at least one bound fails verification") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::parse_map;
    use crate::space::{svec, SpaceDesc};

    fn e(i: usize, d: usize) -> Point {
        let mut c = vec![0.0; d];
        c[i] = 1.0;
        Point::rn(&c)
    }

    #[test]
    fn x2_exp_minorant_verifies() {
        let f = parse_map("x2-exp").unwrap();
        let b = construct_affine_k_minorant(&f, &[e(0, 2), e(1, 2)], &[]).unwrap();
        // tangents at 0: x² has slope 0, eˣ slope 1
        assert!(b.l[0][0].abs() < 1e-12 && (b.l[1][0] - 1.0).abs() < 1e-12);
        assert!(b.w.coords.iter().all(|w| *w < 0.0));
        let s = Sampler::boxed(SpaceDesc::rn(1), -5.0, 5.0, 0);
        assert!(!verify_k_bound(&f, &b, &s, 1000, 0, 1e-8).unwrap().is_negative());
    }

    #[test]
    fn corrupted_shift_is_refuted() {
        let f = parse_map("x2-exp").unwrap();
        let mut b = construct_affine_k_minorant(&f, &[e(0, 2), e(1, 2)], &[]).unwrap();
        b.w = Point::rn(&[0.5, 0.5]);
        let s = Sampler::boxed(SpaceDesc::rn(1), -0.5, 0.5, 0);
        assert!(verify_k_bound(&f, &b, &s, 200, 0, 1e-8).unwrap().is_refuted());
    }

    #[test]
    fn affine_map_minorant_is_shift() {
        let f = parse_map("affine:2").unwrap();
        let b = construct_affine_k_minorant(&f, &[e(0, 2), e(1, 2)], &[]).unwrap();
        let x = Point::rn(&[0.3, -1.2]);
        let g = b.gap(&f.eval(&x).unwrap(), &x);
        // F − G = b − w̄ with b = (1, 1)
        for (gi, wi) in g.coords.iter().zip(&b.w.coords) {
            assert!((gi - (1.0 - wi)).abs() < 1e-12 && *wi < 0.0);
        }
    }

    #[test]
    fn gram_diag_minorant() {
        let f = MapSpec::gram_half(2, 2);
        let normals: Vec<Point> = [(0, 0), (1, 1)]
            .iter()
            .map(|&(i, j)| {
                let mut m = nalgebra::DMatrix::zeros(2, 2);
                m[(i, j)] = 1.0;
                svec(&m).unwrap()
            })
            .collect();
        let b = construct_affine_k_minorant(&f, &normals, &[]).unwrap();
        assert!(b.l.iter().flatten().all(|v| v.abs() < 1e-12));
        assert!(b.w.coords[0] < 0.0 && b.w.coords[2] < 0.0);
        let s = f.default_sampler(3);
        assert!(!verify_k_bound(&f, &b, &s, 1000, 3, 1e-8).unwrap().is_negative());
    }

    #[test]
    fn adjoint_identity() {
        let f = parse_map("x2-exp").unwrap();
        let normals = [Point::rn(&[1.0, 1.0]), Point::rn(&[0.0, 2.0])];
        let anchor = Point::rn(&[0.7]);
        let b = construct_affine_k_minorant(&f, &normals, std::slice::from_ref(&anchor)).unwrap();
        let x = Point::rn(&[-1.3]);
        let lx = b.apply(&x).sub(&b.w).unwrap();
        for bi in &normals {
            let c = f.grad_or_fd(bi, &anchor).unwrap();
            assert!((bi.dot(&lx).unwrap() - c.dot(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let f = parse_map("x2-exp").unwrap();
        let r = construct_affine_k_minorant(&f, &[e(0, 2), e(0, 2)], &[]);
        assert!(matches!(r, Err(KconeError::DependentNormals { .. })));
        let k = Cone::h_rep(SpaceDesc::rn(2), vec![vec![1.0, 0.0]], vec![]).unwrap();
        let s = Sampler::boxed(SpaceDesc::rn(1), -1.0, 1.0, 0);
        assert!(matches!(minmax_obstruction(&f, &k, None, None, &s, 10, 0, 1e-8), Err(KconeError::NotPointed)));
    }

    #[test]
    fn minmax_cases() {
        let f = parse_map("affine:2").unwrap();
        let sp = SpaceDesc::rn(2);
        // K = R₊×{0}
        let k = Cone::h_rep(sp, vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]).unwrap();
        let (l, b) = match &f.kind {
            crate::maps::MapKind::AffineMap { l, b, .. } => (l.clone(), b.clone()),
            _ => unreachable!(),
        };
        let shifted =
            |s: f64, kind| AffineKBound { l: l.clone(), w: Point::rn(&[b[0] + s, b[1]]), kind, cone: k.clone() };
        let lo = shifted(-0.1, BoundKind::Minorant);
        let hi = shifted(0.1, BoundKind::Majorant);
        let s = Sampler::boxed(sp, -3.0, 3.0, 0);
        assert!(minmax_obstruction(&f, &k, Some(&lo), Some(&hi), &s, 200, 0, 1e-8).unwrap().is_refuted());
        assert!(!minmax_obstruction(&f, &k, Some(&lo), None, &s, 200, 0, 1e-8).unwrap().is_negative());

        let g = MapSpec::gram_half(2, 2);
        let psd = Cone::psd(2);
        let zero = AffineKBound {
            l: vec![vec![0.0; 4]; 3],
            w: Point::zeros(SpaceDesc::sym(2)),
            kind: BoundKind::Minorant,
            cone: psd.clone(),
        };
        let mut top = zero.clone();
        top.kind = BoundKind::Majorant;
        top.w = svec(&(nalgebra::DMatrix::identity(2, 2) * 10.0)).unwrap();
        let v = minmax_obstruction(&g, &psd, Some(&zero), Some(&top), &g.cloud_sampler(0), 300, 0, 1e-8).unwrap();
        assert!(!v.is_negative());
    }
}
