//! Vector-valued maps `F : D ⊂ E₁ → E₂` with domains, scalarizations and
//! analytic gradients.
//!
//! The matrix gallery:
//!
//! | kind       | input      | output   | `∇⟨V,F⟩(X)`      |
//! |------------|------------|----------|------------------|
//! | `GramHalf` | `R^{n×m}`  | `S^n`    | `VX`             |
//! | `Square`   | `S^n`      | `S^n`    | `VX + XV`        |
//! | `Inverse`  | `S^n_{++}` | `S^n`    | `−X⁻¹VX⁻¹`       |
//! | `Eigen`    | `S^n`      | `R^n`    | none             |

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{KconeError, Result};
use crate::fd::{fd_gradient, DEFAULT_STEP};
use crate::linalg::{eigenvalues_desc, lambda_min};
use crate::sampling::{Sampler, SamplerScheme};
use crate::scalar::ScalarFn;
use crate::space::{dot, smat, svec_unchecked, Point, SpaceDesc};

/// Scalar building blocks for [`MapKind::Componentwise`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "atom", rename_all = "kebab-case")]
pub enum Atom {
    /// `xᵢ²`
    Square { i: usize },
    /// `−xᵢ²`
    NegSquare { i: usize },
    /// `e^{xᵢ}`
    Exp { i: usize },
    /// `|xᵢ|`
    Abs { i: usize },
    /// `xᵢ`
    Coord { i: usize },
    /// `⟨c, x⟩`
    Linear { c: Vec<f64> },
    /// `‖x‖²`
    SqNorm,
}

impl Atom {
    fn max_index(&self) -> Option<usize> {
        match self {
            Atom::Square { i } | Atom::NegSquare { i } | Atom::Exp { i } | Atom::Abs { i } | Atom::Coord { i } => {
                Some(*i)
            }
            Atom::Linear { c } => c.len().checked_sub(1),
            Atom::SqNorm => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Atom::Square { i } => x[*i] * x[*i],
            Atom::NegSquare { i } => -x[*i] * x[*i],
            Atom::Exp { i } => x[*i].exp(),
            Atom::Abs { i } => x[*i].abs(),
            Atom::Coord { i } => x[*i],
            Atom::Linear { c } => dot(c, x),
            Atom::SqNorm => dot(x, x),
        }
    }

    /// Gradient (a subgradient for `Abs` at 0).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        match self {
            Atom::Square { i } => g[*i] = 2.0 * x[*i],
            Atom::NegSquare { i } => g[*i] = -2.0 * x[*i],
            Atom::Exp { i } => g[*i] = x[*i].exp(),
            Atom::Abs { i } => {
                g[*i] = if x[*i] > 0.0 {
                    1.0
                } else if x[*i] < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Atom::Coord { i } => g[*i] = 1.0,
            Atom::Linear { c } => g.copy_from_slice(c),
            Atom::SqNorm => g.iter_mut().zip(x).for_each(|(gi, xi)| *gi = 2.0 * xi),
        }
        g
    }
}

pub type MapEval = Arc<dyn Fn(&Point) -> Option<Point> + Send + Sync>;
pub type MapGrad = Arc<dyn Fn(&Point, &Point) -> Option<Point> + Send + Sync>;

/// A programmatically supplied map. `eval` returns `None` outside its domain.
#[derive(Clone)]
pub struct CustomMap {
    pub label: String,
    pub input: SpaceDesc,
    pub output: SpaceDesc,
    pub eval: MapEval,
    /// `(u, x) ↦ ∇⟨u,F⟩(x)`.
    pub grad: Option<MapGrad>,
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomMap({}: {} -> {})", self.label, self.input, self.output)
    }
}

impl PartialEq for CustomMap {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && Arc::ptr_eq(&self.eval, &other.eval)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapKind {
    /// `X ↦ ½XXᵀ`
    GramHalf { n: usize, m: usize },
    /// `X ↦ X²`
    Square { n: usize },
    /// `X ↦ X⁻¹` on positive definite matrices.
    Inverse { n: usize },
    /// Ordered eigenvalues `λ₁ ≥ … ≥ λₙ`.
    Eigen { n: usize },
    /// `x ↦ Σ fᵢ(x) bᵢ` on `R^{input}` into `R^{output}`.
    Componentwise { input: usize, atoms: Vec<Atom>, targets: Vec<Vec<f64>> },
    /// `x ↦ Lx + b` in embedded coordinates; `l` has one row per output coordinate.
    #[serde(rename = "affine")]
    AffineMap { input: SpaceDesc, output: SpaceDesc, l: Vec<Vec<f64>>, b: Vec<f64> },
    #[serde(skip)]
    Custom(CustomMap),
}

/// Membership predicate wrapper for [`DomainDesc::CustomPredicate`].
#[derive(Clone)]
pub struct Predicate {
    pub label: String,
    pub test: Arc<dyn Fn(&Point) -> bool + Send + Sync>,
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predicate({})", self.label)
    }
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && Arc::ptr_eq(&self.test, &other.test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainDesc {
    All,
    /// `{X : λ_min(X) > 1e-10 · (1 + ‖X‖)}`.
    PsdOpen,
    /// `{x : ⟨w,x⟩ > offset}`.
    HalfspaceOpen {
        w: Vec<f64>,
        offset: f64,
    },
    /// Every embedded coordinate in `[lo, hi]`.
    Box {
        lo: f64,
        hi: f64,
    },
    /// `{base + t·direction : t ∈ [t_min, t_max]}` (up to `1e-9` relative).
    RaySet {
        base: Point,
        direction: Point,
        t_min: f64,
        t_max: f64,
    },
    #[serde(skip)]
    CustomPredicate(Predicate),
}

pub const INVERSE_DOMAIN_TOL: f64 = 1e-10;

impl DomainDesc {
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            DomainDesc::All => true,
            DomainDesc::PsdOpen => {
                x.space.sym_order().is_some() && lambda_min(x) > INVERSE_DOMAIN_TOL * (1.0 + x.norm())
            }
            DomainDesc::HalfspaceOpen { w, offset } => w.len() == x.dim() && dot(w, &x.coords) > *offset,
            DomainDesc::Box { lo, hi } => x.coords.iter().all(|c| lo <= c && c <= hi),
            DomainDesc::RaySet { base, direction, t_min, t_max } => {
                let Ok(r) = x.sub(base) else { return false };
                let dd = direction.norm().powi(2);
                if dd == 0.0 {
                    return r.norm() <= 1e-9 * (1.0 + base.norm());
                }
                let t = dot(&r.coords, &direction.coords) / dd;
                let off = r.axpy(-t, direction).map(|p| p.norm()).unwrap_or(f64::INFINITY);
                let slack = 1e-9 * (1.0 + t.abs());
                off <= 1e-9 * (1.0 + x.norm()) && t >= t_min - slack && t <= t_max + slack
            }
            DomainDesc::CustomPredicate(p) => (p.test)(x),
        }
    }

    /// `x ∈ D ⟹ −x ∈ D` (by representation).
    pub fn is_symmetric(&self) -> bool {
        match self {
            DomainDesc::All => true,
            DomainDesc::Box { lo, hi } => *lo == -*hi,
            DomainDesc::RaySet { base, t_min, t_max, .. } => base.norm() == 0.0 && *t_min == -*t_max,
            _ => false,
        }
    }
}

/// A map with its (effective) domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(flatten)]
    pub kind: MapKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainDesc>,
}

impl From<MapKind> for MapSpec {
    fn from(kind: MapKind) -> Self {
        MapSpec { kind, domain: None }
    }
}

impl MapSpec {
    pub fn new(kind: MapKind) -> Result<MapSpec> {
        let spec = MapSpec { kind, domain: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gram_half(n: usize, m: usize) -> MapSpec {
        MapKind::GramHalf { n, m }.into()
    }

    pub fn square(n: usize) -> MapSpec {
        MapKind::Square { n }.into()
    }

    pub fn inverse(n: usize) -> MapSpec {
        MapKind::Inverse { n }.into()
    }

    pub fn eigen(n: usize) -> MapSpec {
        MapKind::Eigen { n }.into()
    }

    /// `x ↦ Σ fᵢ(x) eᵢ` into `R^{atoms.len()}`.
    pub fn componentwise(input: usize, atoms: Vec<Atom>) -> Result<MapSpec> {
        let k = atoms.len();
        let targets = (0..k)
            .map(|i| {
                let mut e = vec![0.0; k];
                e[i] = 1.0;
                e
            })
            .collect();
        MapSpec::new(MapKind::Componentwise { input, atoms, targets })
    }

    pub fn affine(input: SpaceDesc, output: SpaceDesc, l: Vec<Vec<f64>>, b: Vec<f64>) -> Result<MapSpec> {
        MapSpec::new(MapKind::AffineMap { input, output, l, b })
    }

    pub fn custom(map: CustomMap) -> MapSpec {
        MapKind::Custom(map).into()
    }

    pub fn with_domain(mut self, domain: DomainDesc) -> MapSpec {
        self.domain = Some(domain);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(KconeError::DimensionMismatch(s));
        match &self.kind {
            MapKind::GramHalf { n, m } if *n == 0 || *m == 0 => bad("gramhalf needs n, m ≥ 1".into()),
            MapKind::Square { n } | MapKind::Inverse { n } | MapKind::Eigen { n } if *n == 0 => {
                bad("matrix order must be ≥ 1".into())
            }
            MapKind::Componentwise { input, atoms, targets } => {
                if atoms.len() != targets.len() || atoms.is_empty() {
                    return bad(format!("{} atoms but {} targets", atoms.len(), targets.len()));
                }
                let out = targets[0].len();
                if targets.iter().any(|t| t.len() != out) {
                    return bad("targets differ in length".into());
                }
                for a in atoms {
                    if a.max_index().is_some_and(|i| i >= *input) {
                        return bad(format!("atom {a:?} reads past input dimension {input}"));
                    }
                    if let Atom::Linear { c } = a {
                        if c.len() != *input {
                            return bad("linear atom length".into());
                        }
                    }
                }
                Ok(())
            }
            MapKind::AffineMap { input, output, l, b } => {
                if l.len() != output.ambient_dim() || b.len() != output.ambient_dim() {
                    return bad("affine map rows must match output dimension".into());
                }
                if l.iter().any(|r| r.len() != input.ambient_dim()) {
                    return bad("affine map columns must match input dimension".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn input_space(&self) -> SpaceDesc {
        match &self.kind {
            MapKind::GramHalf { n, m } => SpaceDesc::rmat(*n, *m),
            MapKind::Square { n } | MapKind::Inverse { n } | MapKind::Eigen { n } => SpaceDesc::sym(*n),
            MapKind::Componentwise { input, .. } => SpaceDesc::rn(*input),
            MapKind::AffineMap { input, .. } => *input,
            MapKind::Custom(c) => c.input,
        }
    }

    pub fn output_space(&self) -> SpaceDesc {
        match &self.kind {
            MapKind::GramHalf { n, .. } | MapKind::Square { n } | MapKind::Inverse { n } => SpaceDesc::sym(*n),
            MapKind::Eigen { n } => SpaceDesc::rn(*n),
            MapKind::Componentwise { targets, .. } => SpaceDesc::rn(targets[0].len()),
            MapKind::AffineMap { output, .. } => *output,
            MapKind::Custom(c) => c.output,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            MapKind::GramHalf { .. } => "gramhalf",
            MapKind::Square { .. } => "square",
            MapKind::Inverse { .. } => "inverse",
            MapKind::Eigen { .. } => "eigen",
            MapKind::Componentwise { .. } => "componentwise",
            MapKind::AffineMap { .. } => "affine",
            MapKind::Custom(_) => "custom",
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            MapKind::GramHalf { n, m } => format!("gramhalf:{n}x{m}"),
            MapKind::Square { n } => format!("square:{n}"),
            MapKind::Inverse { n } => format!("inverse:{n}"),
            MapKind::Eigen { n } => format!("eigen:{n}"),
            MapKind::Componentwise { atoms, .. } => format!("componentwise({} atoms)", atoms.len()),
            MapKind::AffineMap { input, output, .. } => format!("affine {input} -> {output}"),
            MapKind::Custom(c) => c.label.clone(),
        }
    }

    /// Explicit domain, or the natural one for the kind.
    pub fn domain(&self) -> DomainDesc {
        match (&self.domain, &self.kind) {
            (Some(d), _) => d.clone(),
            (None, MapKind::Inverse { .. }) => DomainDesc::PsdOpen,
            (None, _) => DomainDesc::All,
        }
    }

    pub fn domain_contains(&self, x: &Point) -> bool {
        if x.space != self.input_space() || !x.is_finite() {
            return false;
        }
        if matches!(self.kind, MapKind::Inverse { .. }) && !DomainDesc::PsdOpen.contains(x) {
            return false;
        }
        self.domain().contains(x)
    }

    fn eval_unchecked(&self, x: &Point) -> Option<Point> {
        let out = self.output_space();
        let p = match &self.kind {
            MapKind::GramHalf { .. } => {
                let m = x.to_matrix();
                svec_unchecked(&(0.5 * &m * m.transpose()))
            }
            MapKind::Square { .. } => {
                let m = smat(x);
                svec_unchecked(&(&m * &m))
            }
            MapKind::Inverse { .. } => {
                let inv = smat(x).try_inverse()?;
                svec_unchecked(&(0.5 * (&inv + inv.transpose())))
            }
            MapKind::Eigen { .. } => Point { space: out, coords: eigenvalues_desc(&smat(x)) },
            MapKind::Componentwise { atoms, targets, .. } => {
                let mut y = vec![0.0; out.ambient_dim()];
                for (a, b) in atoms.iter().zip(targets) {
                    let v = a.eval(&x.coords);
                    for (yi, bi) in y.iter_mut().zip(b) {
                        *yi += v * bi;
                    }
                }
                Point { space: out, coords: y }
            }
            MapKind::AffineMap { l, b, .. } => {
                Point { space: out, coords: l.iter().zip(b).map(|(r, bi)| dot(r, &x.coords) + bi).collect() }
            }
            MapKind::Custom(c) => (c.eval)(x)?,
        };
        (p.space == out && p.is_finite()).then_some(p)
    }

    /// `F(x)`; `Err(OutsideDomain)` when `x ∉ dom F`.
    pub fn eval(&self, x: &Point) -> Result<Point> {
        x.check_space(&self.input_space())?;
        if !self.domain_contains(x) {
            return Err(KconeError::OutsideDomain);
        }
        self.eval_unchecked(x).ok_or(KconeError::OutsideDomain)
    }

    /// `F(x)` or `None` outside the domain.
    pub fn try_eval(&self, x: &Point) -> Option<Point> {
        self.eval(x).ok()
    }

    /// `∇⟨u,F⟩(x)` in input coordinates.
    pub fn grad_scalar(&self, u: &Point, x: &Point) -> Result<Point> {
        u.check_space(&self.output_space())?;
        x.check_space(&self.input_space())?;
        if !self.domain_contains(x) {
            return Err(KconeError::OutsideDomain);
        }
        match &self.kind {
            MapKind::GramHalf { .. } => Ok(Point::from_rmat(&(smat(u) * x.to_matrix()))),
            MapKind::Square { .. } => {
                let (v, m) = (smat(u), smat(x));
                Ok(svec_unchecked(&(&v * &m + &m * &v)))
            }
            MapKind::Inverse { .. } => {
                let inv = smat(x).try_inverse().ok_or(KconeError::OutsideDomain)?;
                let g = -(&inv * smat(u) * &inv);
                Ok(svec_unchecked(&(0.5 * (&g + g.transpose()))))
            }
            MapKind::Eigen { .. } => Err(KconeError::NoSmoothGradient),
            MapKind::Componentwise { atoms, targets, .. } => {
                let mut g = vec![0.0; x.dim()];
                for (a, b) in atoms.iter().zip(targets) {
                    let w = dot(&u.coords, b);
                    if w != 0.0 {
                        for (gi, ai) in g.iter_mut().zip(a.gradient(&x.coords)) {
                            *gi += w * ai;
                        }
                    }
                }
                Ok(Point { space: x.space, coords: g })
            }
            MapKind::AffineMap { l, .. } => {
                let mut g = vec![0.0; x.dim()];
                for (row, ui) in l.iter().zip(&u.coords) {
                    for (gj, lj) in g.iter_mut().zip(row) {
                        *gj += ui * lj;
                    }
                }
                Ok(Point { space: x.space, coords: g })
            }
            MapKind::Custom(c) => match &c.grad {
                Some(g) => g(u, x).ok_or(KconeError::GradientUnavailable),
                None => Err(KconeError::GradientUnavailable),
            },
        }
    }

    /// Analytic gradient when the kind has one, central differences otherwise.
    pub fn grad_or_fd(&self, u: &Point, x: &Point) -> Result<Point> {
        match self.grad_scalar(u, x) {
            Err(KconeError::NoSmoothGradient | KconeError::GradientUnavailable) => {
                let f = self.scalarize(u);
                fd_gradient(|p| f.eval(p), x, DEFAULT_STEP).map_err(|_| KconeError::GradientUnavailable)
            }
            other => other,
        }
    }

    pub fn has_analytic_gradient(&self) -> bool {
        match &self.kind {
            MapKind::Eigen { .. } => false,
            MapKind::Custom(c) => c.grad.is_some(),
            _ => true,
        }
    }

    /// `x ↦ ⟨u, F(x)⟩`, `+∞` outside the domain.
    pub fn scalarize(&self, u: &Point) -> ScalarFn {
        let map = self.clone();
        let uu = u.clone();
        let f = ScalarFn::new(self.input_space(), format!("<u, {}>", self.label()), move |x| match map.eval(x) {
            Ok(y) => dot(&uu.coords, &y.coords),
            Err(_) => f64::INFINITY,
        });
        if self.has_analytic_gradient() {
            let map = self.clone();
            let uu = u.clone();
            f.with_gradient(move |x| map.grad_scalar(&uu, x).ok())
        } else {
            f
        }
    }

    /// A sampler that stays (mostly) inside the domain.
    pub fn default_sampler(&self, seed: u64) -> Sampler {
        let space = self.input_space();
        let scheme = match (self.domain(), &self.kind) {
            (DomainDesc::PsdOpen, _) | (_, MapKind::Inverse { .. }) => SamplerScheme::PsdInterior { scale: 1.0 },
            (DomainDesc::Box { lo, hi }, _) => SamplerScheme::Box { lo, hi },
            (DomainDesc::RaySet { base, direction, t_min, t_max }, _) => {
                SamplerScheme::Ray { base, direction, t_min, t_max }
            }
            _ => SamplerScheme::Box { lo: -2.0, hi: 2.0 },
        };
        Sampler { space, scheme, seed }
    }

    /// A wide-ranging sampler for graph clouds.
    pub fn cloud_sampler(&self, seed: u64) -> Sampler {
        let space = self.input_space();
        match (self.domain(), &self.kind) {
            (DomainDesc::PsdOpen, _) | (_, MapKind::Inverse { .. }) => Sampler::psd_spectrum(space, -4.0, 3.0, seed),
            (DomainDesc::All, _) => Sampler::log_radial(space, 0.05, 30.0, seed),
            _ => self.default_sampler(seed),
        }
    }

    /// GramHalf, Square or Inverse: convexity of `⟨V,F⟩` is decided by `V ⪰ 0`.
    pub fn is_matrix_gallery(&self) -> bool {
        matches!(self.kind, MapKind::GramHalf { .. } | MapKind::Square { .. } | MapKind::Inverse { .. })
    }
}

/// Parses a map name: `gramhalf:NxM`, `square:N`, `inverse:N`, `eigen:N`,
/// `identity:N`, `affine:N`, `xsq-y`, `x2-exp`, `x2-negx2`, `abs:lo,hi`, or inline JSON.
pub fn parse_map(s: &str) -> Result<MapSpec> {
    let s = s.trim();
    if s.starts_with('{') {
        let spec: MapSpec = serde_json::from_str(s).map_err(|e| KconeError::Parse(format!("map JSON: {e}")))?;
        spec.validate()?;
        return Ok(spec);
    }
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let num = |a: &str| a.parse::<usize>().map_err(|_| KconeError::Parse(format!("bad size '{a}' in map '{s}'")));
    let spec = match name {
        "gramhalf" => {
            let (n, m) =
                arg.split_once('x').ok_or_else(|| KconeError::Parse(format!("expected gramhalf:NxM, got '{s}'")))?;
            MapSpec::gram_half(num(n)?, num(m)?)
        }
        "square" => MapSpec::square(num(arg)?),
        "inverse" => MapSpec::inverse(num(arg)?),
        "eigen" => MapSpec::eigen(num(arg)?),
        "identity" => {
            let n = num(arg)?;
            let sp = SpaceDesc::rn(n);
            MapSpec::affine(sp, sp, crate::linalg::identity_rows(n), vec![0.0; n])?
        }
        "affine" => {
            let n = num(arg)?;
            let sp = SpaceDesc::rn(n);
            let l = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                1.0
                            } else if j == i + 1 {
                                0.5
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            MapSpec::affine(sp, sp, l, vec![1.0; n])?
        }
        "xsq-y" => MapSpec::componentwise(2, vec![Atom::Square { i: 0 }, Atom::Coord { i: 1 }])?,
        "x2-exp" => MapSpec::componentwise(1, vec![Atom::Square { i: 0 }, Atom::Exp { i: 0 }])?,
        "x2-negx2" => MapSpec::componentwise(1, vec![Atom::Square { i: 0 }, Atom::NegSquare { i: 0 }])?,
        _ => return Err(KconeError::Parse(format!("unknown map '{s}'"))),
    };
    spec.validate()?;
    Ok(spec)
}
