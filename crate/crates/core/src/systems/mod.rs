//! Control systems `f: R^n x R^m -> R^n` whose openness is measured.
//!
//! Polynomial systems are the primary format; the few non-polynomial
//! built-ins are [`SmoothSystem`]s with an analytic Lipschitz constant.

mod catalog;
mod descriptor;
mod polynomial;

pub use catalog::{builtin, catalog, counterexample, identity, CatalogEntry};
pub use descriptor::{load_descriptor, parse_descriptor, save_descriptor, to_descriptor_json};
pub use polynomial::{Polynomial, PolynomialSystem, Term, MAX_DEGREE, MAX_DIM};

use crate::error::{Error, Result};
use crate::norm::NormChoice;

/// Anything that can be sampled by the geometry pipeline.
pub trait ControlSystem: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;

    fn input_dim(&self) -> usize {
        self.state_dim() + self.control_dim()
    }

    /// Unchecked evaluation; `z.len() == input_dim()` and
    /// `out.len() == state_dim()`.
    fn eval_into(&self, z: &[f64], out: &mut [f64]);

    /// Lipschitz constant of the map on the closed ball of `radius` about the
    /// origin, valid for `norm` on both sides.
    fn lipschitz_bound(&self, radius: f64, norm: NormChoice) -> Result<f64>;

    fn id(&self) -> String;

    /// Radius below which the openness rate at the origin is known to vanish
    /// identically, when that is known analytically.
    fn zero_rate_below(&self) -> Option<f64> {
        None
    }

    fn evaluate(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.input_dim() {
            return Err(Error::input(format!(
                "point has dimension {}, system expects n + m = {}",
                z.len(),
                self.input_dim()
            )));
        }
        let mut out = vec![0.0; self.state_dim()];
        self.eval_into(z, &mut out);
        Ok(out)
    }
}

impl ControlSystem for PolynomialSystem {
    fn state_dim(&self) -> usize {
        PolynomialSystem::state_dim(self)
    }

    fn control_dim(&self) -> usize {
        PolynomialSystem::control_dim(self)
    }

    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        PolynomialSystem::eval_into(self, z, out)
    }

    fn lipschitz_bound(&self, radius: f64, norm: NormChoice) -> Result<f64> {
        PolynomialSystem::lipschitz_bound(self, radius, norm)
    }

    fn id(&self) -> String {
        self.label().unwrap_or("polynomial").to_string()
    }
}

/// Non-polynomial system given by an evaluation function and an analytic
/// Lipschitz constant as a function of the ball radius.
#[derive(Clone)]
pub struct SmoothSystem {
    pub name: String,
    pub state_dim: usize,
    pub control_dim: usize,
    pub eval: fn(&[f64], &mut [f64]),
    /// Valid for both supported norms on the ball of the given radius.
    pub lipschitz: fn(f64) -> f64,
    pub zero_rate_below: Option<f64>,
    pub note: &'static str,
}

impl std::fmt::Debug for SmoothSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothSystem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("control_dim", &self.control_dim)
            .finish_non_exhaustive()
    }
}

impl ControlSystem for SmoothSystem {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn control_dim(&self) -> usize {
        self.control_dim
    }

    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        (self.eval)(z, out)
    }

    fn lipschitz_bound(&self, radius: f64, _norm: NormChoice) -> Result<f64> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::input(format!(
                "Lipschitz radius must be positive and finite, got {radius}"
            )));
        }
        Ok((self.lipschitz)(radius))
    }

    fn id(&self) -> String {
        self.name.clone()
    }

    fn zero_rate_below(&self) -> Option<f64> {
        self.zero_rate_below
    }
}

/// A built-in or loaded system.
#[derive(Debug, Clone)]
pub enum System {
    Polynomial(PolynomialSystem),
    Smooth(SmoothSystem),
}

impl System {
    pub fn as_polynomial(&self) -> Option<&PolynomialSystem> {
        match self {
            System::Polynomial(p) => Some(p),
            System::Smooth(_) => None,
        }
    }

    fn inner(&self) -> &dyn ControlSystem {
        match self {
            System::Polynomial(p) => p,
            System::Smooth(s) => s,
        }
    }
}

impl ControlSystem for System {
    fn state_dim(&self) -> usize {
        self.inner().state_dim()
    }

    fn control_dim(&self) -> usize {
        self.inner().control_dim()
    }

    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        self.inner().eval_into(z, out)
    }

    fn lipschitz_bound(&self, radius: f64, norm: NormChoice) -> Result<f64> {
        self.inner().lipschitz_bound(radius, norm)
    }

    fn id(&self) -> String {
        self.inner().id()
    }

    fn zero_rate_below(&self) -> Option<f64> {
        self.inner().zero_rate_below()
    }
}

impl From<PolynomialSystem> for System {
    fn from(p: PolynomialSystem) -> Self {
        System::Polynomial(p)
    }
}
