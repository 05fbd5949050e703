//! Central finite differences in embedded coordinates.

use crate::error::{KconeError, Result};
use crate::space::Point;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Central-difference gradient of `f` at `x`, one coordinate of the
/// embedding at a time.
///
/// For `Sym(n)` points the result is already in `svec` coordinates, so
/// `dot(grad, svec(D))` approximates the directional derivative along `D`.
pub fn fd_gradient(f: impl Fn(&Point) -> f64, x: &Point, h: f64) -> Result<Point> {
    let mut grad = Point::zeros(x.space);
    let mut probe = x.clone();
    for i in 0..x.dim() {
        let xi = x.coords[i];
        probe.coords[i] = xi + h;
        let fp = f(&probe);
        probe.coords[i] = xi - h;
        let fm = f(&probe);
        probe.coords[i] = xi;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(KconeError::StencilLeavesDomain(i));
        }
        grad.coords[i] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}
