//! Seeded, index-addressable point samplers.
//!
//! Point `i` of a sampler is drawn from its own ChaCha8 stream
//! (`seed`, stream `i`), so any subset of indices can be generated in any
//! order, or in parallel, and still reproduce the same points.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{KconeError, Result};
use crate::space::{svec_unchecked, Point, SpaceDesc};

pub const RNG_NAME: &str = "ChaCha8Rng(seed, stream = sample index)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum SamplerScheme {
    UnitSphere,
    /// Independent uniform coordinates in `[lo, hi]`.
    Box {
        lo: f64,
        hi: f64,
    },
    /// Uniform direction with log-uniform radius in `[r_min, r_max]`.
    /// Reaches several orders of magnitude, which graph clouds need
    /// to witness vertical directions in their hulls.
    LogRadial {
        r_min: f64,
        r_max: f64,
    },
    /// Positive definite matrices `scale · (B Bᵀ/n + I/2)` with Gaussian `B`;
    /// for vector spaces, coordinates uniform in `[scale/10, scale]`.
    PsdInterior {
        scale: f64,
    },
    /// `Q diag(e^{s₁},…,e^{sₙ}) Qᵀ` with Haar-random `Q` and `sᵢ` uniform in
    /// `[log_min, log_max]`; for vector spaces, coordinates `e^{sᵢ}`.
    PsdSpectrum {
        log_min: f64,
        log_max: f64,
    },
    /// `base + t · direction` with `t` uniform in `[t_min, t_max]`.
    Ray {
        base: Point,
        direction: Point,
        t_min: f64,
        t_max: f64,
    },
    /// Cycles through the given points.
    CustomList {
        points: Vec<Point>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub space: SpaceDesc,
    #[serde(flatten)]
    pub scheme: SamplerScheme,
    pub seed: u64,
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub(crate) fn unit_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, n);
        let nv = crate::space::norm(&v);
        if nv > 1e-6 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

impl Sampler {
    pub fn new(space: SpaceDesc, scheme: SamplerScheme, seed: u64) -> Result<Self> {
        match &scheme {
            SamplerScheme::Box { lo, hi } if lo.is_nan() || hi.is_nan() || lo > hi => {
                return Err(KconeError::Parse(format!("box bounds reversed: [{lo}, {hi}]")))
            }
            SamplerScheme::LogRadial { r_min, r_max } if !(0.0 < *r_min && r_min <= r_max) => {
                return Err(KconeError::Parse(format!("bad radii [{r_min}, {r_max}]")))
            }
            SamplerScheme::PsdSpectrum { log_min, log_max }
                if log_min.is_nan() || log_max.is_nan() || log_min > log_max =>
            {
                return Err(KconeError::Parse(format!("log spectrum bounds reversed: [{log_min}, {log_max}]")))
            }
            SamplerScheme::Ray { base, direction, .. } => {
                base.check_space(&space)?;
                direction.check_space(&space)?;
            }
            SamplerScheme::CustomList { points } => {
                if points.is_empty() {
                    return Err(KconeError::Empty("custom sample list"));
                }
                for p in points {
                    p.check_space(&space)?;
                }
            }
            _ => {}
        }
        Ok(Sampler { space, scheme, seed })
    }

    pub fn unit_sphere(space: SpaceDesc, seed: u64) -> Self {
        Sampler { space, scheme: SamplerScheme::UnitSphere, seed }
    }

    pub fn boxed(space: SpaceDesc, lo: f64, hi: f64, seed: u64) -> Self {
        Sampler { space, scheme: SamplerScheme::Box { lo, hi }, seed }
    }

    pub fn psd_interior(space: SpaceDesc, scale: f64, seed: u64) -> Self {
        Sampler { space, scheme: SamplerScheme::PsdInterior { scale }, seed }
    }

    pub fn log_radial(space: SpaceDesc, r_min: f64, r_max: f64, seed: u64) -> Self {
        Sampler { space, scheme: SamplerScheme::LogRadial { r_min, r_max }, seed }
    }

    pub fn psd_spectrum(space: SpaceDesc, log_min: f64, log_max: f64, seed: u64) -> Self {
        Sampler { space, scheme: SamplerScheme::PsdSpectrum { log_min, log_max }, seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Sampler { seed, ..self.clone() }
    }

    /// The `index`-th point; identical for identical `(scheme, seed, index)`.
    pub fn point(&self, index: u64) -> Point {
        let mut rng = stream_rng(self.seed, index);
        let d = self.space.ambient_dim();
        let coords = match &self.scheme {
            SamplerScheme::UnitSphere => unit_vec(&mut rng, d),
            SamplerScheme::Box { lo, hi } => (0..d).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect(),
            SamplerScheme::LogRadial { r_min, r_max } => {
                let dir = unit_vec(&mut rng, d);
                let r = (r_min.ln() + (r_max / r_min).ln() * rng.random::<f64>()).exp();
                dir.into_iter().map(|x| r * x).collect()
            }
            SamplerScheme::PsdInterior { scale } => match self.space {
                SpaceDesc::Sym { n } => {
                    let b = DMatrix::from_vec(n, n, gaussian_vec(&mut rng, n * n));
                    let x = (&b * b.transpose()) / n as f64 + DMatrix::identity(n, n) * 0.5;
                    svec_unchecked(&(x * *scale)).coords
                }
                _ => (0..d).map(|_| scale * (0.1 + 0.9 * rng.random::<f64>())).collect(),
            },
            SamplerScheme::PsdSpectrum { log_min, log_max } => {
                let mut spec = || (log_min + (log_max - log_min) * rng.random::<f64>()).exp();
                match self.space {
                    SpaceDesc::Sym { n } => {
                        let vals: Vec<f64> = (0..n).map(|_| spec()).collect();
                        let g = DMatrix::from_vec(n, n, gaussian_vec(&mut rng, n * n));
                        let q = g.qr().q();
                        let x = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals)) * q.transpose();
                        svec_unchecked(&(0.5 * (&x + x.transpose()))).coords
                    }
                    _ => (0..d).map(|_| spec()).collect(),
                }
            }
            SamplerScheme::Ray { base, direction, t_min, t_max } => {
                let t = t_min + (t_max - t_min) * rng.random::<f64>();
                base.coords.iter().zip(&direction.coords).map(|(b, v)| b + t * v).collect()
            }
            SamplerScheme::CustomList { points } => points[(index as usize) % points.len()].coords.clone(),
        };
        Point { space: self.space, coords }
    }

    pub fn sample(&self, count: usize) -> Vec<Point> {
        self.sample_range(0, count)
    }

    pub fn sample_range(&self, start: u64, count: usize) -> Vec<Point> {
        (start..start + count as u64).map(|i| self.point(i)).collect()
    }
}

/// Free-standing form of [`Sampler::sample`].
pub fn sample(s: &Sampler, count: usize) -> Vec<Point> {
    s.sample(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lambda_min;

    #[test]
    fn unit_sphere_points_have_unit_norm() {
        let s = Sampler::unit_sphere(SpaceDesc::rn(2), 7);
        let pts = s.sample(3);
        assert_eq!(pts.len(), 3);
        for p in &pts {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn psd_interior_is_positive_definite() {
        let s = Sampler::psd_interior(SpaceDesc::sym(2), 1.0, 3);
        for p in s.sample(5) {
            assert!(lambda_min(&p) > 0.0);
        }
    }

    #[test]
    fn psd_spectrum_eigenvalues_in_range() {
        let s = Sampler::psd_spectrum(SpaceDesc::sym(3), -2.0, 1.0, 5);
        for p in s.sample(10) {
            let ev = crate::linalg::eigenvalues_desc(&crate::space::smat(&p));
            assert!(ev[0] <= 1f64.exp() + 1e-9 && ev[2] >= (-2f64).exp() - 1e-12);
        }
    }

    #[test]
    fn same_seed_same_points() {
        let s = Sampler::boxed(SpaceDesc::sym(3), -2.0, 2.0, 11);
        let a = s.sample(20);
        let b = s.sample(20);
        assert_eq!(a, b);
        let bits_a: Vec<u64> = a.iter().flat_map(|p| p.coords.iter().map(|c| c.to_bits())).collect();
        let bits_b: Vec<u64> = b.iter().flat_map(|p| p.coords.iter().map(|c| c.to_bits())).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn index_addressing_is_order_independent() {
        let s = Sampler::unit_sphere(SpaceDesc::rn(4), 99);
        let forward = s.sample(10);
        let backward: Vec<Point> = (0..10u64).rev().map(|i| s.point(i)).collect();
        for (i, p) in backward.iter().rev().enumerate() {
            assert_eq!(p, &forward[i]);
        }
    }

    #[test]
    fn zero_count_is_empty() {
        assert!(Sampler::unit_sphere(SpaceDesc::rn(2), 1).sample(0).is_empty());
    }

    #[test]
    fn ray_points_lie_on_ray() {
        let base = Point::rn(&[1.0, 1.0]);
        let dir = Point::rn(&[0.0, 2.0]);
        let s = Sampler::new(SpaceDesc::rn(2), SamplerScheme::Ray { base, direction: dir, t_min: 0.5, t_max: 1.0 }, 0)
            .unwrap();
        for p in s.sample(10) {
            assert_eq!(p.coords[0], 1.0);
            assert!(p.coords[1] >= 2.0 && p.coords[1] <= 3.0);
        }
    }
}
