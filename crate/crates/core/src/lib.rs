//! Cone-induced convexity tools.

pub mod affine;
pub mod cli;
pub mod composite;
pub mod cones;
pub mod convexity;
pub mod error;
pub mod fd;
pub mod hull;
pub mod linalg;
pub mod lp;
pub mod maps;
pub mod sampling;
pub mod scalar;
pub mod space;
pub mod verdict;

pub use cones::{Cone, ConeRep};
pub use error::{KconeError, Result};
pub use maps::{MapKind, MapSpec};
pub use space::{Point, SpaceDesc};
pub use verdict::{Budget, Verdict, Witness};
