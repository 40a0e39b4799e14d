//! Closed-loop integration, finite-difference linearization, and the
//! counterexample family `x' = x + u_p(x)` with `u_p(x) = -x - x^p`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::systems::{builtin, counterexample, PolynomialSystem, Term};

/// Norm above which an integration is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e6;
/// Largest initial-state norm accepted for the catalog loops.
pub const BASIN_RADIUS: f64 = 0.1;
/// Net size used by the counterexample cross-checks.
pub const CHECK_NET_POINTS: usize = 10_000;

#[derive(Debug, Clone)]
enum Kind {
    ThresholdAlpha(PolynomialSystem),
    Counterexample(u32),
    Linear(DMatrix<f64>),
}

/// Autonomous field `x -> f(x, u(x))`.
#[derive(Debug, Clone)]
pub struct ClosedLoopField {
    kind: Kind,
}

impl ClosedLoopField {
    /// `cubic2d` under `u(x) = cbrt(-2 x2 - x1/2 - x1 x2 - x2^2)`, which
    /// cancels the plant's cubic term down to a linear one.
    pub fn threshold_alpha() -> Self {
        let plant = builtin("cubic2d")
            .ok()
            .and_then(|s| s.as_polynomial().cloned())
            .expect("cubic2d is a polynomial built-in");
        ClosedLoopField {
            kind: Kind::ThresholdAlpha(plant),
        }
    }

    /// `x' = x + u_p(x) = -x^p` for odd `p >= 3`.
    pub fn counterexample(p: u32) -> Result<Self> {
        check_odd(p)?;
        Ok(ClosedLoopField {
            kind: Kind::Counterexample(p),
        })
    }

    /// `x' = A x`.
    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::input("linear field needs a nonempty square matrix"));
        }
        Ok(ClosedLoopField { kind: Kind::Linear(a) })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::ThresholdAlpha(_) => 2,
            Kind::Counterexample(_) => 1,
            Kind::Linear(a) => a.nrows(),
        }
    }

    /// Initial states must lie within this radius, when one is documented.
    pub fn basin_radius(&self) -> Option<f64> {
        match self.kind {
            Kind::Linear(_) => None,
            _ => Some(BASIN_RADIUS),
        }
    }

    /// The feedback value `u(x)`, for the loops that have a plant.
    pub fn feedback(&self, x: &[f64]) -> Option<f64> {
        match self.kind {
            Kind::ThresholdAlpha(_) => {
                let (x1, x2) = (x[0], x[1]);
                Some((-2.0 * x2 - 0.5 * x1 - x1 * x2 - x2 * x2).cbrt())
            }
            Kind::Counterexample(p) => Some(-x[0] - x[0].powi(p as i32)),
            Kind::Linear(_) => None,
        }
    }

    /// Unchecked evaluation; `x.len() == out.len() == dim()`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::ThresholdAlpha(plant) => {
                let u = self.feedback(x).unwrap_or(0.0);
                plant.eval_into(&[x[0], x[1], u], out);
            }
            Kind::Counterexample(_) => {
                out[0] = x[0] + self.feedback(x).unwrap_or(0.0);
            }
            Kind::Linear(a) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum();
                }
            }
        }
    }

    /// The closed-loop map `x -> f(x, u(x))` as a polynomial system without
    /// controls. The cube root in the threshold feedback cancels against the
    /// plant's `u^3`, so every loop here is polynomial.
    pub fn closed_loop_map(&self) -> PolynomialSystem {
        let sys = match &self.kind {
            Kind::ThresholdAlpha(_) => PolynomialSystem::new(
                2,
                0,
                vec![
                    vec![Term::new(1.0, [2, 0]), Term::new(1.0, [0, 2]), Term::new(1.0, [0, 1])],
                    vec![Term::new(-0.5, [1, 0]), Term::new(-2.0, [0, 1])],
                ],
            ),
            Kind::Counterexample(p) => counterexample(*p),
            Kind::Linear(a) => {
                let n = a.nrows();
                let comps = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let mut e = vec![0u32; n];
                                e[j] = 1;
                                Term::new(a[(i, j)], e)
                            })
                            .collect()
                    })
                    .collect();
                PolynomialSystem::new(n, 0, comps)
            }
        };
        sys.expect("closed-loop maps are valid polynomial systems")
            .labeled(format!("closed_loop:{self}"))
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        Ok(out)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::input(format!(
                "state has dimension {}, loop `{self}` expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ClosedLoopField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::ThresholdAlpha(_) => f.write_str("threshold_alpha"),
            Kind::Counterexample(p) => write!(f, "counterexample:{p}"),
            Kind::Linear(a) => write!(f, "linear({}x{})", a.nrows(), a.ncols()),
        }
    }
}

impl FromStr for ClosedLoopField {
    type Err = Error;

    /// `threshold_alpha`, `counterexample:<p>` or `counterexample_p(<p>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "threshold_alpha" || s == "threshold_alpha_feedback" {
            return Ok(Self::threshold_alpha());
        }
        let p = s
            .strip_prefix("counterexample:")
            .or_else(|| s.strip_prefix("counterexample_p:"))
            .or_else(|| s.strip_prefix("counterexample_p(").and_then(|r| r.strip_suffix(')')));
        match p {
            Some(p) => {
                let p: u32 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::input(format!("`{p}` is not a valid exponent")))?;
                Self::counterexample(p)
            }
            None => Err(Error::Catalog(s.to_string())),
        }
    }
}

fn check_odd(p: u32) -> Result<()> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(Error::input(format!(
            "counterexample exponent must be an odd integer >= 3, got {p}"
        )));
    }
    Ok(())
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Euclidean norms of the states.
    pub norms: Vec<f64>,
    /// Exponential decay rate `-d/dt log ||x||` fitted over the final half,
    /// when every norm is positive.
    pub decay_fit: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map_or(&[], Vec::as_slice)
    }

    pub fn final_norm(&self) -> f64 {
        self.norms.last().copied().unwrap_or(0.0)
    }

    /// True when the norm never increases along the trajectory.
    pub fn is_monotone_decreasing(&self) -> bool {
        self.norms.windows(2).all(|w| w[1] <= w[0])
    }

    /// CSV with header `t,x1,...,xn,norm`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut s = String::from("t");
        for i in 1..=n {
            let _ = write!(s, ",x{i}");
        }
        s.push_str(",norm\n");
        for ((t, x), nrm) in self.times.iter().zip(&self.states).zip(&self.norms) {
            let _ = write!(s, "{t:.16e}");
            for v in x {
                let _ = write!(s, ",{v:.16e}");
            }
            let _ = writeln!(s, ",{nrm:.16e}");
        }
        s
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        self.times.push(t);
        self.norms.push(euclid(x));
        self.states.push(x.to_vec());
    }

    fn fit_decay(&mut self) {
        if self.len() < 3 || self.norms.iter().any(|&v| !(v > 0.0)) {
            return;
        }
        let start = self.len() / 2;
        let t = &self.times[start..];
        let y: Vec<f64> = self.norms[start..].iter().map(|v| v.ln()).collect();
        let n = t.len() as f64;
        let tm = t.iter().sum::<f64>() / n;
        let ym = y.iter().sum::<f64>() / n;
        let sxx: f64 = t.iter().map(|v| (v - tm) * (v - tm)).sum();
        let sxy: f64 = t.iter().zip(&y).map(|(a, b)| (a - tm) * (b - ym)).sum();
        if sxx > 0.0 {
            self.decay_fit = Some(-sxy / sxx);
        }
    }
}

fn rk4_step(field: &ClosedLoopField, x: &[f64], h: f64, k: &mut [Vec<f64>; 4], tmp: &mut [f64]) -> Vec<f64> {
    field.eval_into(x, &mut k[0]);
    for i in 0..x.len() {
        tmp[i] = x[i] + 0.5 * h * k[0][i];
    }
    field.eval_into(tmp, &mut k[1]);
    for i in 0..x.len() {
        tmp[i] = x[i] + 0.5 * h * k[1][i];
    }
    field.eval_into(tmp, &mut k[2]);
    for i in 0..x.len() {
        tmp[i] = x[i] + h * k[2][i];
    }
    field.eval_into(tmp, &mut k[3]);
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
        .collect()
}

/// Classical fixed-step RK4 from `x0` over `[0, t_end]`. The last step is
/// shortened to land on `t_end` exactly.
pub fn integrate(field: &ClosedLoopField, x0: &[f64], dt: f64, t_end: f64) -> Result<Trajectory> {
    field.check_dim(x0)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::input(format!("step must be positive, got {dt}")));
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::input(format!("horizon {t_end} must be at least the step {dt}")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("initial state must be finite"));
    }
    if let Some(basin) = field.basin_radius() {
        let n0 = euclid(x0);
        if n0 > basin {
            return Err(Error::input(format!(
                "initial state norm {n0} exceeds the basin-check radius {basin} of `{field}`"
            )));
        }
    }

    let steps = (t_end / dt - 1e-9).ceil() as usize;
    let dim = x0.len();
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        norms: Vec::with_capacity(steps + 1),
        decay_fit: None,
    };
    traj.push(0.0, x0);
    let mut k = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let mut tmp = vec![0.0; dim];
    let mut x = x0.to_vec();
    for i in 1..=steps {
        let t_prev = (i - 1) as f64 * dt;
        let t = if i == steps { t_end } else { i as f64 * dt };
        x = rk4_step(field, &x, t - t_prev, &mut k, &mut tmp);
        let nrm = euclid(&x);
        if !nrm.is_finite() || nrm > DIVERGENCE_NORM {
            traj.push(t, &x);
            return Err(Error::Diverged {
                time: t,
                norm: nrm,
                partial: Box::new(traj),
            });
        }
        traj.push(t, &x);
    }
    traj.fit_decay();
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Linearization {
    /// Row-major Jacobian.
    pub jacobian: Vec<Vec<f64>>,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
}

/// Central-difference Jacobian at `x` and its eigenvalues.
pub fn linearize(field: &ClosedLoopField, x: &[f64], step: f64) -> Result<Linearization> {
    field.check_dim(x)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::input(format!("finite-difference step must be positive, got {step}")));
    }
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let (plus, minus) = (x[j] + step, x[j] - step);
        if plus == x[j] || minus == x[j] {
            return Err(Error::input(format!(
                "finite-difference step {step} underflows at coordinate {j}"
            )));
        }
        xp[j] = plus;
        field.eval_into(&xp, &mut fp);
        xp[j] = minus;
        field.eval_into(&xp, &mut fm);
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (plus - minus);
        }
    }
    let eigenvalues = eigenvalues(&jac);
    Ok(Linearization {
        jacobian: (0..n).map(|i| jac.row(i).iter().copied().collect()).collect(),
        eigenvalues,
    })
}

/// Eigenvalues of a square matrix: closed form from the characteristic
/// polynomial up to 3x3, Schur decomposition beyond.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    let mut ev = match a.nrows() {
        0 => Vec::new(),
        1 => vec![Complex64::new(a[(0, 0)], 0.0)],
        2 => {
            let tr = a[(0, 0)] + a[(1, 1)];
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            quadratic_roots(-tr, det).to_vec()
        }
        3 => {
            let tr = a.trace();
            let minors = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]
                + a[(0, 0)] * a[(2, 2)] - a[(0, 2)] * a[(2, 0)]
                + a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)];
            let det = a.determinant();
            cubic_roots(-tr, minors, -det).to_vec()
        }
        _ => a.complex_eigenvalues().iter().copied().collect(),
    };
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    ev
}

/// Roots of `z^2 + b z + c`.
fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = Complex64::new(b * b - 4.0 * c, 0.0).sqrt();
    [(-b - disc) / 2.0, (-b + disc) / 2.0]
}

/// Roots of `z^3 + a z^2 + b z + c`: the real root by Cardano polished
/// with Newton, the other two from the deflated quadratic so that a complex
/// pair comes out exactly conjugate.
fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = Complex64::new(q * q / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let mut u = (Complex64::new(-q / 2.0, 0.0) + disc).cbrt();
    if u.norm() < 1e-300 {
        u = (Complex64::new(-q / 2.0, 0.0) - disc).cbrt();
    }
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut real = (0..3)
        .map(|k| {
            let uk = u * omega.powu(k);
            let t = if uk.norm() < 1e-300 { uk } else { uk - p / (3.0 * uk) };
            t - a / 3.0
        })
        .min_by(|x, y| x.im.abs().total_cmp(&y.im.abs()))
        .map_or(0.0, |z| z.re);
    let poly = |z: f64| ((z + a) * z + b) * z + c;
    for _ in 0..8 {
        let d = (3.0 * real + 2.0 * a) * real + b;
        if d == 0.0 {
            break;
        }
        let next = real - poly(real) / d;
        if !next.is_finite() || poly(next).abs() >= poly(real).abs() {
            break;
        }
        real = next;
    }
    let [z1, z2] = quadratic_roots(a + real, b + real * (a + real));
    [Complex64::new(real, 0.0), z1, z2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseGrowth {
    /// `r^(1/p)`.
    pub value: f64,
    /// Sup of `|F^{-1}(y)|` over a net of `[-r, r]`, inverting by bisection.
    pub brute_force: f64,
    /// Whether the two agree within `1e-6`.
    pub cross_check: bool,
}

fn invert_counterexample(p: u32, y: f64) -> f64 {
    // F(x) = -x^p is strictly decreasing.
    let mut lo = -(y.abs().max(1.0));
    let mut hi = -lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if -mid.powi(p as i32) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sup norm of the closed-loop inverse `F_p^{-1}` over `[-r, r]`.
pub fn inverse_growth(p: u32, r: f64) -> Result<InverseGrowth> {
    check_odd(p)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::input(format!("radius must be positive, got {r}")));
    }
    let value = r.powf(1.0 / p as f64);
    let n = CHECK_NET_POINTS;
    let brute_force = (0..n)
        .map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64)
        .map(|y| invert_counterexample(p, y).abs())
        .fold(0.0, f64::max);
    Ok(InverseGrowth {
        value,
        brute_force,
        cross_check: (brute_force - value).abs() <= 1e-6,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainEnvelope {
    pub p: u32,
    pub radius: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Whether `3/4 <= |u_p(x)| / |x| <= 5/4` on the whole net.
    pub holds: bool,
}

/// Ratio `|u_p(x)| / |x|` on a net of `[-radius, radius]` without the origin.
pub fn gain_envelope_check(p: u32, radius: f64) -> Result<GainEnvelope> {
    check_odd(p)?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::input(format!("radius must be positive, got {radius}")));
    }
    let field = ClosedLoopField::counterexample(p)?;
    let n = CHECK_NET_POINTS;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let x = -radius + 2.0 * radius * i as f64 / (n - 1) as f64;
        if x == 0.0 {
            continue;
        }
        let ratio = field.feedback(&[x]).unwrap_or(0.0).abs() / x.abs();
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(GainEnvelope {
        p,
        radius,
        min_ratio: lo,
        max_ratio: hi,
        holds: lo >= 0.75 && hi <= 1.25,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanHit {
    pub p: u32,
    pub r: f64,
    pub inverse_growth: f64,
    pub bound: f64,
}

/// First `p` in `ps` for which `h_p(e^-p) = e^-1` exceeds the candidate
/// bound `bound(e^-p)`, showing the candidate is not a universal bound.
pub fn counterexample_scan(bound: impl Fn(f64) -> f64, ps: impl IntoIterator<Item = u32>) -> Result<Option<ScanHit>> {
    for p in ps {
        let r = (-(p as f64)).exp();
        let h = inverse_growth(p, r)?.value;
        let b = bound(r);
        if h > b {
            return Ok(Some(ScanHit {
                p,
                r,
                inverse_growth: h,
                bound: b,
            }));
        }
    }
    Ok(None)
}
