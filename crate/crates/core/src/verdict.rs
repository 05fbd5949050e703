//! Three-valued outcomes for sampling-based tests.

use serde::{Deserialize, Serialize};

use crate::space::Point;

/// Outcome of a test that can refute by example, accumulate evidence, or
/// (for analytic cases) decide exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Verdict {
    /// A replayable counterexample.
    Refuted { witness: Witness },
    /// No counterexample within the stated budget.
    Consistent { budget: Budget },
    /// Decided by an analytic or LP certificate; `holds` is the answer.
    Exact { holds: bool, certificate: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Budget {
    pub fn new(samples: usize, seed: u64) -> Self {
        Budget { samples, seed: Some(seed), note: None }
    }

    pub fn noted(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Evidence carried by a refutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Witness {
    /// `f(αx + (1-α)y) - (αf(x) + (1-α)f(y)) = excess > 0`.
    Secant {
        x: Point,
        y: Point,
        alpha: f64,
        excess: f64,
    },
    /// A violating vector (membership, inclusion, order claims).
    Vector {
        v: Point,
        note: String,
    },
    /// A refutation found for the scalarization along `u`.
    Direction {
        u: Point,
        inner: Box<Witness>,
    },
    /// An affine fit (or bound) misses `F(x)` by `residual`.
    Residual {
        x: Point,
        residual: f64,
    },
    /// `f(x_k)` stays below `f(target) - tol` along a sequence converging to `target`.
    Sequence {
        target: Point,
        target_value: f64,
        points: Vec<Point>,
        values: Vec<f64>,
    },
    /// `y ≥_K x` but `g(y) < g(x)`.
    Order {
        x: Point,
        y: Point,
        gx: f64,
        gy: f64,
    },
    /// A horizon probe `(x0, y0 + t u)` fell outside the sampled hull.
    HullGap {
        u: Point,
        t: f64,
        note: String,
    },
    /// Positive horizon value `g∞(u) = value` observed from `x0`.
    Horizon {
        x0: Point,
        u: Point,
        value: f64,
    },
    Note {
        text: String,
    },
}

impl Verdict {
    pub fn consistent(samples: usize, seed: u64) -> Self {
        Verdict::Consistent { budget: Budget::new(samples, seed) }
    }

    pub fn exact(holds: bool, certificate: impl Into<String>) -> Self {
        Verdict::Exact { holds, certificate: certificate.into() }
    }

    pub fn refuted(witness: Witness) -> Self {
        Verdict::Refuted { witness }
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }

    /// Refuted, or decided exactly in the negative.
    pub fn is_negative(&self) -> bool {
        matches!(self, Verdict::Refuted { .. } | Verdict::Exact { holds: false, .. })
    }

    pub fn is_exact_true(&self) -> bool {
        matches!(self, Verdict::Exact { holds: true, .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Refuted { witness } => Some(witness),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Refuted { .. } => "refuted",
            Verdict::Consistent { .. } => "consistent",
            Verdict::Exact { holds: true, .. } => "exact-true",
            Verdict::Exact { holds: false, .. } => "exact-false",
        }
    }
}

impl Witness {
    /// Strips `Direction` wrappers.
    pub fn innermost(&self) -> &Witness {
        match self {
            Witness::Direction { inner, .. } => inner.innermost(),
            w => w,
        }
    }
}
