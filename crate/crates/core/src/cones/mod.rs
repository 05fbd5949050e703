//! Closed convex cones: membership, polars, the order `≥_K`, pointedness.
//!
//! Polyhedral cones come in two shapes and polarity swaps them exactly:
//! `H{W, E} = {x : Wx ≥ 0, Ex = 0}` has `−K° = cone(W) + span(E)`, and
//! `V{G} = cone(G)` has `K° = {v : Gᵀv ≤ 0}`. Anything that would need the
//! other representation goes through an LP or (in small dimension) through
//! the extreme-ray enumeration in [`rays`].

mod rays;

use serde::{Deserialize, Serialize};

use crate::error::{KconeError, Result};
use crate::linalg::{identity_rows, nullspace, orth_complement, orthonormalize, rank, sym_eigen};
use crate::lp::{self, LpProblem, LpStatus};
use crate::space::{dot, norm, smat, svec_unchecked, Point, SpaceDesc};
use crate::verdict::Verdict;

/// Row vectors in embedded coordinates.
pub type Rows = Vec<Vec<f64>>;

pub use rays::RayDecomposition;

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ConeRep {
    /// `⟨wᵢ,x⟩ ≥ 0` for each normal, `⟨eⱼ,x⟩ = 0` for each equality.
    #[serde(rename = "polyhedralH")]
    PolyhedralH {
        normals: Vec<Vec<f64>>,
        #[serde(default)]
        equalities: Vec<Vec<f64>>,
    },
    #[serde(rename = "polyhedralV")]
    PolyhedralV { generators: Vec<Vec<f64>> },
    #[serde(rename = "psd")]
    Psd { n: usize },
    #[serde(rename = "negPsd")]
    NegPsd { n: usize },
    /// `K_n = {v : v₁ + … + v_k ≥ 0 (k < n), v₁ + … + v_n = 0}`.
    #[serde(rename = "spectral")]
    SpectralKn { n: usize },
    /// `{x : ⟨w,x⟩ ≥ 0}`.
    #[serde(rename = "halfspace")]
    Halfspace { w: Vec<f64> },
    #[serde(rename = "subspace")]
    Subspace { basis: Vec<Vec<f64>> },
    #[serde(rename = "trivial")]
    Trivial,
    #[serde(rename = "full")]
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeJson")]
pub struct Cone {
    pub space: SpaceDesc,
    pub rep: ConeRep,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConeJson {
    Full { space: SpaceDesc, rep: ConeRep },
    Bare(ConeRep),
}

impl TryFrom<ConeJson> for Cone {
    type Error = KconeError;

    fn try_from(j: ConeJson) -> Result<Cone> {
        match j {
            ConeJson::Full { space, rep } => Cone::new(space, rep),
            ConeJson::Bare(rep) => {
                let first_len = |rows: &[Vec<f64>]| rows.first().map(|r| r.len());
                let space = match &rep {
                    ConeRep::Psd { n } | ConeRep::NegPsd { n } => SpaceDesc::sym(*n),
                    ConeRep::SpectralKn { n } => SpaceDesc::rn(*n),
                    ConeRep::Halfspace { w } => SpaceDesc::rn(w.len()),
                    ConeRep::PolyhedralH { normals, equalities } => {
                        SpaceDesc::rn(first_len(normals).or(first_len(equalities)).ok_or_else(no_space)?)
                    }
                    ConeRep::PolyhedralV { generators } => SpaceDesc::rn(first_len(generators).ok_or_else(no_space)?),
                    ConeRep::Subspace { basis } => SpaceDesc::rn(first_len(basis).ok_or_else(no_space)?),
                    ConeRep::Trivial | ConeRep::Full => return Err(no_space()),
                };
                Cone::new(space, rep)
            }
        }
    }
}

fn no_space() -> KconeError {
    KconeError::Parse("cone JSON needs a \"space\" field for this representation".into())
}

/// `u ∈ −K°` with `⟨u, y − x⟩ < 0`: a certificate that `y ≥_K x` fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderWitness {
    pub u: Point,
}

fn unit_rows(rows: Vec<Vec<f64>>, d: usize, what: &'static str) -> Result<Vec<Vec<f64>>> {
    rows.into_iter()
        .map(|r| {
            if r.len() != d {
                return Err(KconeError::DimensionMismatch(format!(
                    "{what} row of length {} in dimension {d}",
                    r.len()
                )));
            }
            let n = norm(&r);
            if !n.is_finite() || n <= 0.0 {
                return Err(KconeError::ZeroVector(what));
            }
            if (n - 1.0).abs() < 1e-14 {
                return Ok(r);
            }
            Ok(r.into_iter().map(|v| v / n).collect())
        })
        .collect()
}

fn neg_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|v| -v).collect()).collect()
}

fn scale_of(v: &Point) -> f64 {
    1.0 + v.norm()
}

impl Cone {
    /// Validates dimensions, rejects zero vectors and unit-normalizes.
    pub fn new(space: SpaceDesc, rep: ConeRep) -> Result<Cone> {
        let d = space.ambient_dim();
        let rep = match rep {
            ConeRep::PolyhedralH { normals, equalities } => ConeRep::PolyhedralH {
                normals: unit_rows(normals, d, "normal")?,
                equalities: unit_rows(equalities, d, "equality")?,
            },
            ConeRep::PolyhedralV { generators } => {
                ConeRep::PolyhedralV { generators: unit_rows(generators, d, "generator")? }
            }
            ConeRep::Psd { n } | ConeRep::NegPsd { n } if space != SpaceDesc::sym(n) => {
                return Err(KconeError::mismatch(&SpaceDesc::sym(n), &space))
            }
            ConeRep::SpectralKn { n } if space != SpaceDesc::rn(n) || n == 0 => {
                return Err(KconeError::mismatch(&SpaceDesc::rn(n.max(1)), &space))
            }
            ConeRep::Halfspace { w } => {
                let w = unit_rows(vec![w], d, "halfspace normal")?.pop().unwrap();
                ConeRep::Halfspace { w }
            }
            ConeRep::Subspace { basis } => {
                if basis.iter().any(|b| b.len() != d) {
                    return Err(KconeError::DimensionMismatch("subspace basis vector length".into()));
                }
                ConeRep::Subspace { basis: orthonormalize(&basis, 1e-10) }
            }
            other => other,
        };
        Ok(Cone { space, rep })
    }

    pub fn psd(n: usize) -> Cone {
        Cone { space: SpaceDesc::sym(n), rep: ConeRep::Psd { n } }
    }

    pub fn neg_psd(n: usize) -> Cone {
        Cone { space: SpaceDesc::sym(n), rep: ConeRep::NegPsd { n } }
    }

    pub fn spectral(n: usize) -> Cone {
        Cone { space: SpaceDesc::rn(n), rep: ConeRep::SpectralKn { n } }
    }

    pub fn orthant(n: usize) -> Cone {
        Cone { space: SpaceDesc::rn(n), rep: ConeRep::PolyhedralH { normals: identity_rows(n), equalities: vec![] } }
    }

    pub fn halfspace(w: &Point) -> Result<Cone> {
        Cone::new(w.space, ConeRep::Halfspace { w: w.coords.clone() })
    }

    pub fn subspace(space: SpaceDesc, basis: Vec<Vec<f64>>) -> Result<Cone> {
        Cone::new(space, ConeRep::Subspace { basis })
    }

    pub fn h_rep(space: SpaceDesc, normals: Vec<Vec<f64>>, equalities: Vec<Vec<f64>>) -> Result<Cone> {
        Cone::new(space, ConeRep::PolyhedralH { normals, equalities })
    }

    pub fn v_rep(space: SpaceDesc, generators: Vec<Vec<f64>>) -> Result<Cone> {
        Cone::new(space, ConeRep::PolyhedralV { generators })
    }

    pub fn trivial(space: SpaceDesc) -> Cone {
        Cone { space, rep: ConeRep::Trivial }
    }

    pub fn full(space: SpaceDesc) -> Cone {
        Cone { space, rep: ConeRep::Full }
    }

    pub fn dim(&self) -> usize {
        self.space.ambient_dim()
    }

    /// Normals and equalities when the cone has an exact H-representation.
    pub fn h_form(&self) -> Option<(Rows, Rows)> {
        let d = self.dim();
        match &self.rep {
            ConeRep::PolyhedralH { normals, equalities } => Some((normals.clone(), equalities.clone())),
            ConeRep::SpectralKn { n } => {
                let n = *n;
                let normals = (1..n)
                    .map(|k| (0..n).map(|i| if i < k { 1.0 / (k as f64).sqrt() } else { 0.0 }).collect())
                    .collect();
                Some((normals, vec![vec![1.0 / (n as f64).sqrt(); n]]))
            }
            ConeRep::Halfspace { w } => Some((vec![w.clone()], vec![])),
            ConeRep::Subspace { basis } => Some((vec![], orth_complement(basis, d))),
            ConeRep::Trivial => Some((vec![], identity_rows(d))),
            ConeRep::Full => Some((vec![], vec![])),
            ConeRep::PolyhedralV { .. } | ConeRep::Psd { .. } | ConeRep::NegPsd { .. } => None,
        }
    }

    /// Membership of `v` at relative tolerance `tol · (1 + ‖v‖)`.
    pub fn contains(&self, v: &Point, tol: f64) -> Result<bool> {
        Ok(self.membership(v, tol)?.0)
    }

    /// Membership plus, when `v ∉ K`, some `u ∈ −K°` (unit) with `⟨u,v⟩ < 0`.
    pub fn membership(&self, v: &Point, tol: f64) -> Result<(bool, Option<Point>)> {
        v.check_space(&self.space)?;
        let s = tol * scale_of(v);
        let out = |u: Vec<f64>| -> Result<(bool, Option<Point>)> {
            let u = Point::new(self.space, u)?;
            Ok((false, u.normalized()))
        };
        match &self.rep {
            ConeRep::PolyhedralV { generators } => {
                if generators.is_empty() {
                    return if v.norm() <= s { Ok((true, None)) } else { out(v.neg().coords) };
                }
                let cols: Vec<&[f64]> = generators.iter().map(|g| g.as_slice()).collect();
                let h = lp::nonneg_combination(&cols, &v.coords, false, tol)?;
                if h.inside {
                    Ok((true, None))
                } else if let Some(sep) = h.separator {
                    out(sep.normal.iter().map(|x| -x).collect())
                } else {
                    Ok((false, None))
                }
            }
            ConeRep::Psd { .. } => {
                let (vals, vecs) = sym_eigen(&smat(v));
                let k = vals.len() - 1;
                if vals[k] >= -s {
                    return Ok((true, None));
                }
                let q = vecs.column(k).into_owned();
                out(svec_unchecked(&(&q * q.transpose())).coords)
            }
            ConeRep::NegPsd { .. } => {
                let (vals, vecs) = sym_eigen(&smat(v));
                if vals[0] <= s {
                    return Ok((true, None));
                }
                let q = vecs.column(0).into_owned();
                out(svec_unchecked(&(-(&q * q.transpose()))).coords)
            }
            ConeRep::Subspace { basis } => {
                let mut r = v.coords.clone();
                for b in basis {
                    let c = dot(b, &v.coords);
                    for (ri, bi) in r.iter_mut().zip(b) {
                        *ri -= c * bi;
                    }
                }
                if norm(&r) <= s {
                    Ok((true, None))
                } else {
                    out(r.iter().map(|x| -x).collect())
                }
            }
            ConeRep::Full => Ok((true, None)),
            _ => {
                let (normals, equalities) = self.h_form().expect("H-representable");
                let mut worst: Option<(f64, Vec<f64>)> = None;
                for w in &normals {
                    let a = dot(w, &v.coords);
                    if a < -s && worst.as_ref().is_none_or(|(b, _)| a < *b) {
                        worst = Some((a, w.clone()));
                    }
                }
                for e in &equalities {
                    let a = dot(e, &v.coords);
                    if a.abs() > s && worst.as_ref().is_none_or(|(b, _)| -a.abs() < *b) {
                        let u = if a > 0.0 { e.iter().map(|x| -x).collect() } else { e.clone() };
                        worst = Some((-a.abs(), u));
                    }
                }
                match worst {
                    None => Ok((true, None)),
                    Some((_, u)) => out(u),
                }
            }
        }
    }

    /// `−K`.
    pub fn negate(&self) -> Cone {
        let rep = match &self.rep {
            ConeRep::PolyhedralH { normals, equalities } => {
                ConeRep::PolyhedralH { normals: neg_rows(normals), equalities: equalities.clone() }
            }
            ConeRep::PolyhedralV { generators } => ConeRep::PolyhedralV { generators: neg_rows(generators) },
            ConeRep::Psd { n } => ConeRep::NegPsd { n: *n },
            ConeRep::NegPsd { n } => ConeRep::Psd { n: *n },
            ConeRep::SpectralKn { .. } => {
                let (normals, equalities) = self.h_form().unwrap();
                ConeRep::PolyhedralH { normals: neg_rows(&normals), equalities }
            }
            ConeRep::Halfspace { w } => ConeRep::Halfspace { w: w.iter().map(|x| -x).collect() },
            other => other.clone(),
        };
        Cone { space: self.space, rep }
    }

    /// `K° = {v : ⟨v,k⟩ ≤ 0 for all k ∈ K}`.
    pub fn polar(&self) -> Cone {
        let d = self.dim();
        let rep = match &self.rep {
            ConeRep::PolyhedralV { generators } => {
                ConeRep::PolyhedralH { normals: neg_rows(generators), equalities: vec![] }
            }
            ConeRep::PolyhedralH { normals, equalities } => {
                let mut generators = neg_rows(normals);
                for e in equalities {
                    generators.push(e.clone());
                    generators.push(e.iter().map(|x| -x).collect());
                }
                ConeRep::PolyhedralV { generators }
            }
            ConeRep::Psd { n } => ConeRep::NegPsd { n: *n },
            ConeRep::NegPsd { n } => ConeRep::Psd { n: *n },
            ConeRep::SpectralKn { n } => {
                let n = *n;
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let normals = (0..n.saturating_sub(1))
                    .map(|i| {
                        let mut r = vec![0.0; n];
                        r[i] = -s;
                        r[i + 1] = s;
                        r
                    })
                    .collect();
                ConeRep::PolyhedralH { normals, equalities: vec![] }
            }
            ConeRep::Halfspace { w } => ConeRep::PolyhedralV { generators: vec![w.iter().map(|x| -x).collect()] },
            ConeRep::Subspace { basis } => ConeRep::Subspace { basis: orth_complement(basis, d) },
            ConeRep::Trivial => ConeRep::Full,
            ConeRep::Full => ConeRep::Trivial,
        };
        Cone { space: self.space, rep }
    }

    /// `−K° = {v : ⟨v,k⟩ ≥ 0 for all k ∈ K}`.
    pub fn dual(&self) -> Cone {
        self.polar().negate()
    }

    /// `y ≥_K x`, i.e. `y − x ∈ K`; on failure a witness from `−K°` when one is available.
    pub fn leq(&self, x: &Point, y: &Point, tol: f64) -> Result<(bool, Option<OrderWitness>)> {
        let diff = y.sub(x)?;
        let (ok, u) = self.membership(&diff, tol)?;
        Ok((ok, u.map(|u| OrderWitness { u })))
    }

    /// `K ∩ (−K) = {0}`, decided exactly.
    pub fn is_pointed(&self) -> Verdict {
        let d = self.dim();
        match &self.rep {
            ConeRep::Psd { .. } | ConeRep::NegPsd { .. } => Verdict::exact(true, "semidefinite cone"),
            ConeRep::PolyhedralV { generators } => {
                if generators.is_empty() {
                    return Verdict::exact(true, "no generators");
                }
                let k = generators.len();
                let mut p = LpProblem::new(k).maximize(vec![1.0; k]);
                for r in 0..d {
                    p = p.eq(generators.iter().map(|g| g[r]).collect(), 0.0);
                }
                for j in 0..k {
                    p = p.bound(j, 0.0, 1.0);
                }
                match lp::solve(&p) {
                    Ok(res) if res.status == LpStatus::Optimal => {
                        let v = res.objective_value.unwrap_or(0.0);
                        Verdict::exact(
                            v <= 1e-7,
                            format!("max sum(lambda) s.t. G lambda = 0, 0 <= lambda <= 1: {v:.3e}"),
                        )
                    }
                    Ok(res) => Verdict::exact(false, format!("lp status {:?}", res.status)),
                    Err(e) => Verdict::exact(false, format!("lp error: {e}")),
                }
            }
            _ => {
                let (mut rows, eqs) = self.h_form().unwrap();
                rows.extend(eqs);
                let r = rank(&rows, d, Some(1e-10));
                Verdict::exact(r == d, format!("rank of stacked normals {r} of {d}"))
            }
        }
    }

    /// Intersection of two H-representable cones.
    pub fn intersect(&self, other: &Cone) -> Result<Cone> {
        if self.space != other.space {
            return Err(KconeError::mismatch(&self.space, &other.space));
        }
        match (&self.rep, &other.rep) {
            (_, ConeRep::Full) => return Ok(self.clone()),
            (ConeRep::Full, _) => return Ok(other.clone()),
            (_, ConeRep::Trivial) | (ConeRep::Trivial, _) => return Ok(Cone::trivial(self.space)),
            _ => {}
        }
        let (Some((mut w1, mut e1)), Some((w2, e2))) = (self.h_form(), other.h_form()) else {
            return Err(KconeError::NeedsHRep);
        };
        w1.extend(w2);
        e1.extend(e2);
        Ok(Cone { space: self.space, rep: ConeRep::PolyhedralH { normals: w1, equalities: e1 } })
    }

    /// Extreme rays and lineality basis, for polyhedral cones of modest size.
    pub fn decompose(&self) -> Result<RayDecomposition> {
        match &self.rep {
            ConeRep::PolyhedralV { generators } => rays::decompose_v(generators),
            ConeRep::Psd { .. } | ConeRep::NegPsd { .. } => {
                Err(KconeError::Unsupported("semidefinite cones have infinitely many extreme rays".into()))
            }
            _ => {
                let (w, e) = self.h_form().unwrap();
                rays::decompose_h(&w, &e, self.dim())
            }
        }
    }

    /// Unit directions generating `K` (rays, then `±` lineality). The
    /// semidefinite cones, having no finite generating set, are represented
    /// by `±svec(I)/√n`.
    pub fn direction_generators(&self) -> Result<Vec<Point>> {
        let identity = |n: usize, sign: f64| {
            let p = svec_unchecked(&nalgebra::DMatrix::identity(n, n));
            p.scale(sign / p.norm())
        };
        match &self.rep {
            ConeRep::Psd { n } => Ok(vec![identity(*n, 1.0)]),
            ConeRep::NegPsd { n } => Ok(vec![identity(*n, -1.0)]),
            _ => Ok(self
                .decompose()?
                .generating_set()
                .into_iter()
                .map(|c| Point { space: self.space, coords: c })
                .collect()),
        }
    }

    /// A finite generating set of `−K°` (lineality directions appear as `±` pairs).
    pub fn dual_generators(&self) -> Result<Vec<Point>> {
        let rows = match &self.rep {
            ConeRep::PolyhedralV { generators } => {
                let dec = rays::decompose_h(generators, &[], self.dim())?;
                dec.generating_set()
            }
            ConeRep::Psd { .. } | ConeRep::NegPsd { .. } => {
                return Err(KconeError::Unsupported("dual of a semidefinite cone is not finitely generated".into()))
            }
            _ => {
                let (w, e) = self.h_form().unwrap();
                let mut rows = w;
                for r in e {
                    rows.push(r.iter().map(|x| -x).collect());
                    rows.push(r);
                }
                rows
            }
        };
        rows.into_iter().map(|r| Point::new(self.space, r)).collect()
    }

    /// Points of the relative interior of `K`.
    pub fn ri_sample(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        rays::ri_sample(self, count, seed)
    }

    /// Decides (or probes) `K ⊂ −K°`.
    pub fn check_self_dual_inclusion(&self, n_dirs: usize, seed: u64) -> Verdict {
        rays::self_dual_inclusion(self, n_dirs, seed)
    }

    pub fn label(&self) -> String {
        match &self.rep {
            ConeRep::PolyhedralH { normals, equalities } => {
                format!("H-cone in {} ({} normals, {} equalities)", self.space, normals.len(), equalities.len())
            }
            ConeRep::PolyhedralV { generators } => {
                format!("V-cone in {} ({} generators)", self.space, generators.len())
            }
            ConeRep::Psd { n } => format!("S^{n}_+"),
            ConeRep::NegPsd { n } => format!("-S^{n}_+"),
            ConeRep::SpectralKn { n } => format!("K_{n}"),
            ConeRep::Halfspace { .. } => format!("halfspace in {}", self.space),
            ConeRep::Subspace { basis } => format!("{}-dim subspace of {}", basis.len(), self.space),
            ConeRep::Trivial => "{0}".into(),
            ConeRep::Full => format!("{}", self.space),
        }
    }
}

/// Lineality space of an H-cone, as an orthonormal basis.
pub fn lineality(normals: &[Vec<f64>], equalities: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let mut rows = normals.to_vec();
    rows.extend_from_slice(equalities);
    nullspace(&rows, d, Some(1e-10))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::svec;
    use nalgebra::DMatrix;

    fn diag(v: &[f64]) -> Point {
        svec(&DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))).unwrap()
    }

    #[test]
    fn psd_membership() {
        let k = Cone::psd(2);
        assert!(k.contains(&diag(&[1.0, 1.0]), DEFAULT_TOL).unwrap());
        assert!(!k.contains(&diag(&[1.0, -1.0]), DEFAULT_TOL).unwrap());
    }

    #[test]
    fn spectral_contains_last_two_pattern() {
        assert!(Cone::spectral(3).contains(&Point::rn(&[0.0, 1.0, -1.0]), DEFAULT_TOL).unwrap());
        assert!(!Cone::spectral(3).contains(&Point::rn(&[-1.0, 1.0, 0.0]), DEFAULT_TOL).unwrap());
    }

    #[test]
    fn membership_space_mismatch() {
        assert!(matches!(
            Cone::psd(2).contains(&Point::rn(&[1.0, 0.0, 1.0]), 1e-8),
            Err(KconeError::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn halfspace_polar_and_dual() {
        let h = Cone::halfspace(&Point::rn(&[1.0, 0.0])).unwrap();
        let p = h.polar();
        assert!(p.contains(&Point::rn(&[-2.0, 0.0]), 1e-9).unwrap());
        assert!(!p.contains(&Point::rn(&[2.0, 0.0]), 1e-9).unwrap());
        assert!(!p.contains(&Point::rn(&[-2.0, 0.5]), 1e-9).unwrap());
        let d = h.dual();
        assert!(d.contains(&Point::rn(&[3.0, 0.0]), 1e-9).unwrap());
        assert!(!d.contains(&Point::rn(&[3.0, 0.1]), 1e-9).unwrap());
    }

    #[test]
    fn spectral_dual_is_decreasing() {
        let d = Cone::spectral(3).dual();
        assert!(d.contains(&Point::rn(&[3.0, 2.0, 1.0]), 1e-9).unwrap());
        assert!(!d.contains(&Point::rn(&[1.0, 2.0, 3.0]), 1e-9).unwrap());
    }

    #[test]
    fn psd_order_witness() {
        let k = Cone::psd(2);
        let (ok, _) = k.leq(&Point::zeros(SpaceDesc::sym(2)), &diag(&[1.0, 1.0]), 1e-8).unwrap();
        assert!(ok);
        let (ok, w) = k.leq(&Point::zeros(SpaceDesc::sym(2)), &diag(&[1.0, -1.0]), 1e-8).unwrap();
        assert!(!ok);
        let u = w.unwrap().u;
        assert!(u.coords[0].abs() < 1e-12 && u.coords[1].abs() < 1e-12 && (u.coords[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflexive_order() {
        let x = Point::rn(&[0.3, -1.0, 2.0]);
        for k in [Cone::spectral(3), Cone::orthant(3), Cone::trivial(SpaceDesc::rn(3))] {
            assert!(k.leq(&x, &x, 1e-9).unwrap().0);
        }
    }

    #[test]
    fn pointedness() {
        assert!(Cone::psd(3).is_pointed().is_exact_true());
        assert!(!Cone::subspace(SpaceDesc::rn(3), vec![vec![1.0, 1.0, 0.0]]).unwrap().is_pointed().is_exact_true());
        assert!(Cone::spectral(3).is_pointed().is_exact_true());
        let v = Cone::v_rep(SpaceDesc::rn(2), vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert!(!v.is_pointed().is_exact_true());
        let v = Cone::v_rep(SpaceDesc::rn(2), vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(v.is_pointed().is_exact_true());
    }

    #[test]
    fn intersections() {
        let s = SpaceDesc::rn(2);
        let h1 = Cone::halfspace(&Point::rn(&[1.0, 0.0])).unwrap();
        let h2 = Cone::halfspace(&Point::rn(&[0.0, 1.0])).unwrap();
        let q = h1.intersect(&h2).unwrap();
        assert!(q.contains(&Point::rn(&[1.0, 2.0]), 1e-9).unwrap());
        assert!(!q.contains(&Point::rn(&[1.0, -2.0]), 1e-9).unwrap());
        assert_eq!(h1.intersect(&Cone::full(s)).unwrap(), h1);
        let k = Cone::spectral(3).intersect(&Cone::halfspace(&Point::rn(&[0.0, 1.0, 0.0])).unwrap()).unwrap();
        assert!(k.contains(&Point::rn(&[0.0, 1.0, -1.0]), 1e-9).unwrap());
        assert!(!k.contains(&Point::rn(&[1.0, -2.0, 1.0]), 1e-9).unwrap());
        assert_eq!(
            Cone::psd(2).intersect(&Cone::trivial(SpaceDesc::sym(2))).unwrap(),
            Cone::trivial(SpaceDesc::sym(2))
        );
        let v = Cone::v_rep(s, vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(v.intersect(&h1), Err(KconeError::NeedsHRep));
    }

    #[test]
    fn rejects_zero_normal() {
        assert_eq!(Cone::h_rep(SpaceDesc::rn(2), vec![vec![0.0, 0.0]], vec![]), Err(KconeError::ZeroVector("normal")));
    }

    #[test]
    fn json_forms() {
        let c: Cone = serde_json::from_str(
            r#"{"space":{"kind":"Rn","n":3},"rep":{"type":"polyhedralH","normals":[[1,0,0],[1,1,0]],"equalities":[[1,1,1]]}}"#,
        )
        .unwrap();
        assert!(c.contains(&Point::rn(&[0.0, 1.0, -1.0]), 1e-9).unwrap());
        let p: Cone = serde_json::from_str(r#"{"type":"psd","n":2}"#).unwrap();
        assert_eq!(p, Cone::psd(2));
        let k: Cone = serde_json::from_str(r#"{"type":"spectral","n":3}"#).unwrap();
        assert_eq!(k, Cone::spectral(3));
        let back: Cone = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn v_rep_order_witness_is_in_dual() {
        let k = Cone::v_rep(SpaceDesc::rn(2), vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let v = Point::rn(&[0.0, 1.0]);
        let (ok, u) = k.membership(&v, 1e-9).unwrap();
        assert!(!ok);
        let u = u.unwrap();
        assert!(u.dot(&v).unwrap() < 0.0);
        assert!(k.dual().contains(&u, 1e-9).unwrap());
    }
}
