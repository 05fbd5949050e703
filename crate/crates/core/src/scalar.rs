//! Extended-real-valued scalar function handles.

use std::fmt;
use std::sync::Arc;

use crate::space::{Point, SpaceDesc};

pub type ValueFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&Point) -> Option<Point> + Send + Sync>;

/// A function `E → ℝ ∪ {+∞}` with an optional analytic gradient.
///
/// `+∞` encodes points outside the domain; evaluators that produce NaN
/// are treated the same way.
#[derive(Clone)]
pub struct ScalarFn {
    space: SpaceDesc,
    label: String,
    value: ValueFn,
    gradient: Option<GradFn>,
}

impl ScalarFn {
    pub fn new(space: SpaceDesc, label: impl Into<String>, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn { space, label: label.into(), value: Arc::new(f), gradient: None }
    }

    pub fn with_gradient(mut self, g: impl Fn(&Point) -> Option<Point> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn space(&self) -> SpaceDesc {
        self.space
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &Point) -> f64 {
        if x.space != self.space {
            return f64::INFINITY;
        }
        let v = (self.value)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: &Point) -> Option<Point> {
        self.gradient.as_ref().and_then(|g| g(x))
    }

    /// `x ↦ f(x) + c`, keeping the gradient.
    pub fn shifted(&self, c: f64) -> ScalarFn {
        let inner = self.clone();
        let grad = self.gradient.clone();
        let mut out = ScalarFn::new(self.space, format!("{} + {c}", self.label), move |x| inner.eval(x) + c);
        out.gradient = grad;
        out
    }

    /// Restriction to a set given by a membership predicate (`+∞` elsewhere).
    pub fn restricted(&self, label: &str, member: impl Fn(&Point) -> bool + Send + Sync + 'static) -> ScalarFn {
        let inner = self.clone();
        ScalarFn::new(self.space, format!("{} | {label}", self.label), move |x| {
            if member(x) {
                inner.eval(x)
            } else {
                f64::INFINITY
            }
        })
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFn")
            .field("space", &self.space)
            .field("label", &self.label)
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}
