//! Norm estimates driven by openness rates: a lower bound on the sup norm
//! of `f` over a ball from the rate at its center, and sup-norm upper
//! envelopes for the rate itself.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{make_ball_net, make_ball_net_with_budget};
use crate::norm::NormChoice;
use crate::rate::{PowerLaw, RateTable, Resolution};
use crate::systems::{ControlSystem, PolynomialSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupNorm {
    /// Largest norm attained on the net (a lower bound on the true sup).
    pub measured: f64,
    /// `lambda * delta`.
    pub slack: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl SupNorm {
    /// Certified upper bound on the sup over the ball.
    pub fn certified_upper(&self) -> f64 {
        self.measured + self.slack
    }
}

/// Sup of `||f||` over the closed ball of radius `r` about `center`.
pub fn sup_norm_on_ball<S: ControlSystem + ?Sized>(
    sys: &S,
    center: &[f64],
    r: f64,
    norm: NormChoice,
    res: Resolution,
) -> Result<SupNorm> {
    let dim = sys.input_dim();
    if center.len() != dim {
        return Err(Error::input(format!(
            "center has dimension {}, system expects {dim}",
            center.len()
        )));
    }
    let net = match res.spacing {
        Some(s) => make_ball_net(dim, r, norm, s * r)?,
        None => make_ball_net_with_budget(dim, r, norm, res.max_points)?,
    }
    .translated(center)?;
    let cloud = crate::geometry::image_cloud(sys, &net)?;
    let lambda = sys.lipschitz_bound(r + norm.norm(center), norm)?;
    let delta = net.spacing();
    Ok(SupNorm {
        measured: cloud.max_norm(norm),
        slack: lambda * delta,
        lambda,
        delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormBoundKind {
    LowerBoundOnSupNorm,
    UpperBoundOnRate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormBoundInputs {
    pub system: String,
    pub center: Vec<f64>,
    pub radius: f64,
    pub rate_source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormBound {
    pub kind: NormBoundKind,
    pub value: f64,
    /// Discretization slack attached to `value`; zero for exact sources.
    pub slack: f64,
    pub rigorous: bool,
    pub inputs: NormBoundInputs,
}

/// Where the openness rate at the ball center comes from.
#[derive(Debug, Clone, Copy)]
pub enum RateSource<'a> {
    /// Lower column of a table measured at the ball center.
    Table(&'a RateTable),
    /// Exact linear rate `g(r) = banach * r` of an affine map (Euclidean).
    Linear { banach: f64 },
}

/// `||f(x*)|| + g(R)`, a lower bound on the sup of `||f||` over the ball of
/// radius `R` about `x*`.
pub fn norm_lower_bound<S: ControlSystem + ?Sized>(
    sys: &S,
    center: &[f64],
    radius: f64,
    norm: NormChoice,
    source: RateSource<'_>,
) -> Result<NormBound> {
    if !(radius > 0.0) {
        return Err(Error::input(format!("ball radius must be positive, got {radius}")));
    }
    let f_center = norm.norm(&sys.evaluate(center)?);
    let (rate, slack, rigorous, desc) = match source {
        RateSource::Table(t) => {
            if radius < t.r_min() || radius > t.r_max() * (1.0 + 1e-12) {
                return Err(Error::Range(format!(
                    "rate table covers [{}, {}], ball radius {radius} is outside",
                    t.r_min(),
                    t.r_max()
                )));
            }
            let e = t
                .entries
                .iter()
                .take_while(|e| e.r <= radius * (1.0 + 1e-12))
                .last()
                .expect("radius is covered");
            let slack = e.slack(t.image_dim);
            (
                e.g_lower,
                slack,
                e.lower_rigorous,
                format!("rate table lower column at r = {}", e.r),
            )
        }
        RateSource::Linear { banach } => (
            banach * radius,
            0.0,
            true,
            format!("linear rate {banach} * r"),
        ),
    };
    Ok(NormBound {
        kind: NormBoundKind::LowerBoundOnSupNorm,
        value: f_center + rate,
        slack,
        rigorous,
        inputs: NormBoundInputs {
            system: sys.id(),
            center: center.to_vec(),
            radius,
            rate_source: desc,
        },
    })
}

/// Linear part `A` of an affine polynomial system `f(z) = A z + b`, or
/// `None` when some term has degree above one.
pub fn affine_matrix(sys: &PolynomialSystem) -> Option<DMatrix<f64>> {
    let width = sys.state_dim() + sys.control_dim();
    let mut a = DMatrix::zeros(sys.state_dim(), width);
    for (i, c) in sys.components().iter().enumerate() {
        for t in c.terms() {
            match t.degree() {
                0 => {}
                1 => {
                    let j = t.exponents.iter().position(|&e| e == 1)?;
                    a[(i, j)] += t.coeff;
                }
                _ => return None,
            }
        }
    }
    Some(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub r: f64,
    pub measured: f64,
    pub slack: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    /// No grid radius has a measured sup above the envelope.
    pub holds: bool,
    /// Every grid radius has measured sup plus slack within the envelope.
    pub certified: bool,
    pub first_violation: Option<f64>,
    pub rows: Vec<EnvelopeRow>,
}

/// Checks `sup_{||z|| <= r} ||f(z)|| <= M r^alpha` on the grid.
pub fn envelope_check<S: ControlSystem + ?Sized>(
    sys: &S,
    envelope: PowerLaw,
    r_grid: &[f64],
    norm: NormChoice,
    res: Resolution,
) -> Result<EnvelopeReport> {
    if !(envelope.coefficient > 0.0) || !(envelope.exponent > 0.0) {
        return Err(Error::input("envelope coefficient and exponent must be positive"));
    }
    let origin = vec![0.0; sys.input_dim()];
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let s = sup_norm_on_ball(sys, &origin, r, norm, res)?;
        rows.push(EnvelopeRow {
            r,
            measured: s.measured,
            slack: s.slack,
            envelope: envelope.eval(r),
        });
    }
    // Relative tolerance for rounding in the envelope evaluation itself.
    let tol = 1e-12;
    let first_violation = rows
        .iter()
        .find(|row| row.measured > row.envelope * (1.0 + tol))
        .map(|row| row.r);
    let certified = rows
        .iter()
        .all(|row| row.measured + row.slack <= row.envelope * (1.0 + tol));
    Ok(EnvelopeReport {
        holds: first_violation.is_none(),
        certified,
        first_violation,
        rows,
    })
}
