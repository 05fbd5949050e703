//! Euclidean spaces and points.
//!
//! Symmetric matrices are stored through the isometric `svec` embedding:
//! the upper triangle is read row by row, diagonal entries verbatim and
//! off-diagonal entries scaled by `√2`. With that scaling the plain dot
//! product of two embedded vectors equals the trace inner product `tr(XY)`,
//! so every cone and LP routine can work on flat coordinate vectors.
//! Rectangular matrices use row-major storage, which is already isometric
//! for the Frobenius product.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{KconeError, Result};

const SYM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SpaceDesc {
    Rn { n: usize },
    Rmat { n: usize, m: usize },
    Sym { n: usize },
}

impl SpaceDesc {
    pub fn rn(n: usize) -> Self {
        SpaceDesc::Rn { n }
    }

    pub fn rmat(n: usize, m: usize) -> Self {
        SpaceDesc::Rmat { n, m }
    }

    pub fn sym(n: usize) -> Self {
        SpaceDesc::Sym { n }
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            SpaceDesc::Rn { n } => n,
            SpaceDesc::Rmat { n, m } => n * m,
            SpaceDesc::Sym { n } => n * (n + 1) / 2,
        }
    }

    /// Side length for `Sym(n)`, `None` elsewhere.
    pub fn sym_order(&self) -> Option<usize> {
        match *self {
            SpaceDesc::Sym { n } => Some(n),
            _ => None,
        }
    }

    /// Orthonormal basis of the embedded coordinates.
    pub fn basis(&self) -> Vec<Point> {
        (0..self.ambient_dim())
            .map(|i| {
                let mut p = Point::zeros(*self);
                p.coords[i] = 1.0;
                p
            })
            .collect()
    }
}

impl fmt::Display for SpaceDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SpaceDesc::Rn { n } => write!(f, "R^{n}"),
            SpaceDesc::Rmat { n, m } => write!(f, "R^{n}x{m}"),
            SpaceDesc::Sym { n } => write!(f, "S^{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub space: SpaceDesc,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(space: SpaceDesc, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != space.ambient_dim() {
            return Err(KconeError::DimensionMismatch(format!(
                "{} needs {} coordinates, got {}",
                space,
                space.ambient_dim(),
                coords.len()
            )));
        }
        Ok(Point { space, coords })
    }

    pub fn rn(coords: &[f64]) -> Self {
        Point { space: SpaceDesc::rn(coords.len()), coords: coords.to_vec() }
    }

    pub fn zeros(space: SpaceDesc) -> Self {
        Point { space, coords: vec![0.0; space.ambient_dim()] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn check_space(&self, space: &SpaceDesc) -> Result<()> {
        if &self.space != space {
            return Err(KconeError::mismatch(space, &self.space));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Point) -> Result<f64> {
        other.check_space(&self.space)?;
        Ok(dot(&self.coords, &other.coords))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn sub(&self, other: &Point) -> Result<Point> {
        other.check_space(&self.space)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn add(&self, other: &Point) -> Result<Point> {
        other.check_space(&self.space)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn scale(&self, s: f64) -> Point {
        Point { space: self.space, coords: self.coords.iter().map(|c| c * s).collect() }
    }

    /// `self + s * dir`.
    pub fn axpy(&self, s: f64, dir: &Point) -> Result<Point> {
        dir.check_space(&self.space)?;
        Ok(self.zip_with(dir, |a, b| a + s * b))
    }

    pub fn neg(&self) -> Point {
        self.scale(-1.0)
    }

    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    fn zip_with(&self, other: &Point, f: impl Fn(f64, f64) -> f64) -> Point {
        Point { space: self.space, coords: self.coords.iter().zip(&other.coords).map(|(a, b)| f(*a, *b)).collect() }
    }

    /// Matrix view: `Sym(n)` through `smat`, `Rmat(n,m)` row-major, `Rn(n)` as a column.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self.space {
            SpaceDesc::Sym { .. } => smat(self),
            SpaceDesc::Rmat { n, m } => DMatrix::from_row_slice(n, m, &self.coords),
            SpaceDesc::Rn { n } => DMatrix::from_column_slice(n, 1, &self.coords),
        }
    }

    pub fn from_rmat(x: &DMatrix<f64>) -> Point {
        let (n, m) = x.shape();
        let mut coords = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                coords.push(x[(i, j)]);
            }
        }
        Point { space: SpaceDesc::rmat(n, m), coords }
    }

    /// Re-read the same coordinates in another space of equal dimension.
    pub fn with_space(&self, space: SpaceDesc) -> Result<Point> {
        Point::new(space, self.coords.clone())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Isometric embedding of a symmetric matrix.
pub fn svec(x: &DMatrix<f64>) -> Result<Point> {
    let (n, m) = x.shape();
    if n != m {
        return Err(KconeError::DimensionMismatch(format!("svec needs a square matrix, got {n}x{m}")));
    }
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((x[(i, j)] - x[(j, i)]).abs());
        }
    }
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if asym > SYM_TOL * (1.0 + scale) {
        return Err(KconeError::NotSymmetric(asym));
    }
    Ok(svec_unchecked(x))
}

/// `svec` of the symmetric part; for matrices known to be symmetric up to rounding.
pub(crate) fn svec_unchecked(x: &DMatrix<f64>) -> Point {
    let n = x.nrows();
    let mut coords = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        coords.push(x[(i, i)]);
        for j in (i + 1)..n {
            coords.push(std::f64::consts::SQRT_2 * 0.5 * (x[(i, j)] + x[(j, i)]));
        }
    }
    Point { space: SpaceDesc::sym(n), coords }
}

/// Inverse of [`svec`]. Panics if `p` does not live in a `Sym` space.
pub fn smat(p: &Point) -> DMatrix<f64> {
    let n = p.space.sym_order().expect("smat needs a Sym point");
    let mut x = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        x[(i, i)] = p.coords[k];
        k += 1;
        for j in (i + 1)..n {
            let v = p.coords[k] / std::f64::consts::SQRT_2;
            x[(i, j)] = v;
            x[(j, i)] = v;
            k += 1;
        }
    }
    x
}
