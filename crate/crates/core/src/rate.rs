//! Openness-rate tables `r -> [g_lower(r), g_upper(r)]`, their monotone
//! repair, step-function generalized inverse, Banach constants of linear
//! maps, and power-law fits.

use std::fmt::{self, Write as _};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{image_cloud, inradius_with_lower_cell, make_ball_net, make_ball_net_with_budget};
use crate::norm::NormChoice;
use crate::systems::ControlSystem;

pub const DEFAULT_GRID_POINTS: usize = 16;
pub const DEFAULT_R_MIN: f64 = 1e-2;
pub const DEFAULT_R_MAX: f64 = 1.0;
pub const DEFAULT_MAX_POINTS: usize = 1_000_000;

/// Cells per axis used to cap automatically chosen grids.
const AUTO_CELLS_PER_AXIS: [f64; 4] = [0.0, 0.0, 4000.0, 300.0];

/// `points` log-spaced radii from `r_min` to `r_max` inclusive.
pub fn log_grid(r_min: f64, r_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0) || !(r_max > r_min) || !r_max.is_finite() {
        return Err(Error::input(format!(
            "radius grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if points < 2 {
        return Err(Error::input("radius grid needs at least 2 points"));
    }
    let (a, b) = (r_min.ln(), r_max.ln());
    let step = (b - a) / (points - 1) as f64;
    let mut g: Vec<f64> = (0..points).map(|i| (a + step * i as f64).exp()).collect();
    g[0] = r_min;
    g[points - 1] = r_max;
    Ok(g)
}

pub fn default_grid() -> Vec<f64> {
    log_grid(DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_GRID_POINTS).expect("static grid")
}

/// How finely each ball and its image are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Net spacing as a fraction of the radius; `None` picks the finest
    /// grid within `max_points`.
    pub spacing: Option<f64>,
    /// Occupancy cell size as a fraction of the radius; `None` uses the
    /// net covering radius (coarsened only if the grid would get too large).
    pub cell: Option<f64>,
    pub max_points: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            spacing: None,
            cell: None,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

impl Resolution {
    pub fn with_budget(max_points: usize) -> Self {
        Resolution {
            max_points,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("spacing", self.spacing), ("cell", self.cell)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::input(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.max_points == 0 {
            return Err(Error::input("point budget must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEntry {
    pub r: f64,
    pub g_lower: f64,
    pub g_upper: f64,
    /// Covering radius of the domain net.
    pub delta: f64,
    /// Occupancy cell size (zero for one-dimensional images).
    pub epsilon: f64,
    /// Lipschitz bound used for the dilation.
    pub lambda: f64,
    pub lower_rigorous: bool,
}

impl RateEntry {
    /// Discretization slack `lambda*delta + epsilon*sqrt(dim)`.
    pub fn slack(&self, image_dim: usize) -> f64 {
        self.lambda * self.delta + self.epsilon * (image_dim as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Column {
    Lower,
    Upper,
}

/// Tabulated maximal openness rate of a map at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub system: String,
    pub norm: NormChoice,
    pub center: Vec<f64>,
    pub image_dim: usize,
    pub entries: Vec<RateEntry>,
    /// Radius below which the rate is known to vanish identically.
    pub zero_rate_below: Option<f64>,
}

impl RateTable {
    /// Builds a table directly from columns, e.g. for an analytically known
    /// rate. Provenance fields are zero.
    pub fn from_columns(
        system: impl Into<String>,
        norm: NormChoice,
        image_dim: usize,
        r: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> Result<Self> {
        if r.len() != lower.len() || r.len() != upper.len() || r.is_empty() {
            return Err(Error::input("rate table columns must be nonempty and equally long"));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) || !(r[0] > 0.0) {
            return Err(Error::input("rate table radii must be positive and strictly increasing"));
        }
        let entries = r
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(&r, (&lo, &up))| {
                if !(0.0 <= lo && lo <= up) {
                    return Err(Error::input(format!(
                        "rate table row r = {r} violates 0 <= lower <= upper ({lo}, {up})"
                    )));
                }
                Ok(RateEntry {
                    r,
                    g_lower: lo,
                    g_upper: up,
                    delta: 0.0,
                    epsilon: 0.0,
                    lambda: 0.0,
                    lower_rigorous: true,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RateTable {
            system: system.into(),
            norm,
            center: Vec::new(),
            image_dim,
            entries,
            zero_rate_below: None,
        })
    }

    pub fn radii(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.r).collect()
    }

    pub fn column(&self, column: Column) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| match column {
                Column::Lower => e.g_lower,
                Column::Upper => e.g_upper,
            })
            .collect()
    }

    pub fn r_min(&self) -> f64 {
        self.entries.first().map_or(0.0, |e| e.r)
    }

    pub fn r_max(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.r)
    }

    /// Upper bound on `g(arg)`: reads the first grid radius at or above
    /// `arg`. `None` when `arg` lies beyond the table.
    pub fn upper_at(&self, arg: f64) -> Option<f64> {
        if arg <= 0.0 {
            return Some(0.0);
        }
        self.entries.iter().find(|e| e.r >= arg).map(|e| e.g_upper)
    }

    /// Lower bound on `g(arg)`: reads the last grid radius at or below
    /// `arg`, and zero below the table.
    pub fn lower_at(&self, arg: f64) -> f64 {
        self.entries
            .iter()
            .take_while(|e| e.r <= arg)
            .last()
            .map_or(0.0, |e| e.g_lower)
    }

    /// True when every upper entry is within twice its discretization slack
    /// of zero, i.e. the data cannot tell the rate apart from zero.
    pub fn consistent_with_zero(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.g_upper <= 2.0 * e.slack(self.image_dim))
    }

    /// CSV with header `r,g_lower,g_upper,delta,epsilon,lambda`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,g_lower,g_upper,delta,epsilon,lambda\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                e.r, e.g_lower, e.g_upper, e.delta, e.epsilon, e.lambda
            );
        }
        s
    }
}

/// Rate table of `sys` at the origin, which must be an equilibrium.
pub fn openness_rate_table<S: ControlSystem + ?Sized>(
    sys: &S,
    r_grid: &[f64],
    norm: NormChoice,
    res: Resolution,
) -> Result<RateTable> {
    let origin = vec![0.0; sys.input_dim()];
    let f0 = sys.evaluate(&origin)?;
    if f0.iter().any(|&v| v != 0.0) {
        return Err(Error::input(format!(
            "{} does not have an equilibrium at the origin (f(0) = {f0:?})",
            sys.id()
        )));
    }
    let mut table = openness_rate_table_at(sys, &origin, r_grid, norm, res)?;
    table.zero_rate_below = sys.zero_rate_below();
    Ok(table)
}

/// Rate table of `sys` at an arbitrary point `center`, measured as the
/// inradius of `f(B_r(center))` at `f(center)`.
pub fn openness_rate_table_at<S: ControlSystem + ?Sized>(
    sys: &S,
    center: &[f64],
    r_grid: &[f64],
    norm: NormChoice,
    res: Resolution,
) -> Result<RateTable> {
    res.validate()?;
    if r_grid.is_empty() {
        return Err(Error::input("radius grid is empty"));
    }
    if r_grid[0] <= 0.0 || r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::input("radius grid must be positive and strictly increasing"));
    }
    let image_center = sys.evaluate(center)?;
    let center_norm = norm.norm(center);
    let entries = r_grid
        .par_iter()
        .map(|&r| rate_entry(sys, center, center_norm, &image_center, r, norm, res))
        .collect::<Result<Vec<_>>>()?;
    let table = RateTable {
        system: sys.id(),
        norm,
        center: center.to_vec(),
        image_dim: sys.state_dim(),
        entries,
        zero_rate_below: None,
    };
    Ok(enforce_monotone(table))
}

fn rate_entry<S: ControlSystem + ?Sized>(
    sys: &S,
    center: &[f64],
    center_norm: f64,
    image_center: &[f64],
    r: f64,
    norm: NormChoice,
    res: Resolution,
) -> Result<RateEntry> {
    let dim = sys.input_dim();
    let net = match res.spacing {
        Some(s) => make_ball_net(dim, r, norm, s * r)?,
        None => make_ball_net_with_budget(dim, r, norm, res.max_points)?,
    }
    .translated(center)?;
    let cloud = image_cloud(sys, &net)?;
    let lambda = sys.lipschitz_bound(r + center_norm, norm)?;
    let delta = net.spacing();
    let dilation = lambda * delta;
    let image_dim = sys.state_dim();
    let (epsilon, lower_cell) = if image_dim == 1 {
        // Intervals are handled exactly; the cell size is unused.
        (res.cell.map_or(0.0, |c| c * r), 0.0)
    } else {
        let eps = match res.cell {
            Some(c) => c * r,
            None => {
                let (min, max) = cloud.bounding_box();
                let extent = min
                    .iter()
                    .zip(&max)
                    .map(|(a, b)| b - a + 2.0 * dilation)
                    .fold(0.0, f64::max);
                let cap = AUTO_CELLS_PER_AXIS[image_dim.min(3)];
                delta.max(extent / cap)
            }
        };
        // The raw raster needs cells at least as coarse as the image sample
        // spacing to come out solid.
        (eps, eps.max(lambda * net.pitch()))
    };
    let est = inradius_with_lower_cell(
        &cloud,
        image_center,
        dilation,
        epsilon.max(f64::MIN_POSITIVE),
        lower_cell.max(f64::MIN_POSITIVE),
        norm,
    )?;
    Ok(RateEntry {
        r,
        g_lower: est.lower,
        g_upper: est.upper,
        delta,
        epsilon,
        lambda,
        lower_rigorous: est.provenance.lower_rigorous,
    })
}

/// Replaces both columns by their running maxima. The true rate is
/// nondecreasing, so raising entries keeps upper bounds valid and makes
/// lower bounds monotone.
pub fn enforce_monotone(mut table: RateTable) -> RateTable {
    let mut lo = 0.0_f64;
    let mut up = 0.0_f64;
    for e in &mut table.entries {
        lo = lo.max(e.g_lower);
        up = up.max(e.g_upper);
        e.g_lower = lo;
        e.g_upper = up;
    }
    table
}

/// `inf { r : column(r) >= s }` over the table grid. Zero for `s <= 0`,
/// `f64::INFINITY` when no entry reaches `s`.
pub fn generalized_inverse(table: &RateTable, s: f64, column: Column) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    table
        .entries
        .iter()
        .find(|e| match column {
            Column::Lower => e.g_lower >= s,
            Column::Upper => e.g_upper >= s,
        })
        .map_or(f64::INFINITY, |e| e.r)
}

/// Banach constant of `A`: the inradius at 0 of the image of the Euclidean
/// unit ball, i.e. the smallest singular value when `A` has full row rank
/// and 0 otherwise. Computed by inverse power iteration on `A A^T`.
pub fn banach_constant(a: &DMatrix<f64>) -> f64 {
    let (n, k) = a.shape();
    if n == 0 || k < n {
        return 0.0;
    }
    let m = a * a.transpose();
    let Some(chol) = m.clone().cholesky() else {
        return 0.0;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b4a_c4c0);
    let mut x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    x /= x.norm();
    let mut mu = (x.transpose() * &m * &x)[(0, 0)];
    for _ in 0..10_000 {
        let y = chol.solve(&x);
        let ny = y.norm();
        if !(ny > 0.0) || !ny.is_finite() {
            return 0.0;
        }
        x = y / ny;
        let next = (x.transpose() * &m * &x)[(0, 0)];
        let done = (next - mu).abs() <= 1e-10 * next.abs().max(f64::MIN_POSITIVE);
        mu = next;
        if done {
            break;
        }
    }
    mu.max(0.0).sqrt()
}

/// `g(r) = coefficient * r^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn new(coefficient: f64, exponent: f64) -> Self {
        PowerLaw {
            coefficient,
            exponent,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.coefficient * r.powf(self.exponent)
    }
}

impl std::str::FromStr for PowerLaw {
    type Err = Error;

    /// `pow:C:gamma` with both parameters positive.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let body = s
            .strip_prefix("pow:")
            .or_else(|| s.strip_prefix("power:"))
            .ok_or_else(|| Error::input(format!("envelope `{s}`: expected pow:C:gamma")))?;
        let (c, g) = body
            .split_once(':')
            .ok_or_else(|| Error::input(format!("envelope `{s}`: expected pow:C:gamma")))?;
        let parse = |v: &str| -> Result<f64> {
            match v.trim().parse::<f64>() {
                Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
                _ => Err(Error::input(format!("envelope `{s}`: `{v}` is not a positive number"))),
            }
        };
        Ok(PowerLaw::new(parse(c)?, parse(g)?))
    }
}

impl fmt::Display for PowerLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pow:{}:{}", self.coefficient, self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub law: PowerLaw,
    pub max_relative_residual: f64,
}

/// Least-squares fit of `log g = log C + gamma log r` to a table column.
pub fn powerlaw_fit(table: &RateTable, column: Column) -> Result<PowerLawFit> {
    let r = table.radii();
    let g = table.column(column);
    fit_points(&r, &g)
}

pub(crate) fn fit_points(r: &[f64], g: &[f64]) -> Result<PowerLawFit> {
    if r.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 rows, got {}", r.len())));
    }
    let bad: Vec<usize> = g
        .iter()
        .enumerate()
        .filter(|(_, &v)| !(v > 0.0) || !v.is_finite())
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::Fit(format!("nonpositive values in rows {bad:?}")));
    }
    let xs: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = g.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("radii must not all coincide".into()));
    }
    let exponent = sxy / sxx;
    let coefficient = (my - exponent * mx).exp();
    let law = PowerLaw::new(coefficient, exponent);
    let max_relative_residual = r
        .iter()
        .zip(g)
        .map(|(&r, &g)| (law.eval(r) - g).abs() / g)
        .fold(0.0, f64::max);
    Ok(PowerLawFit {
        law,
        max_relative_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{builtin, identity};

    fn analytic(r: &[f64], f: impl Fn(f64) -> f64) -> RateTable {
        let g: Vec<f64> = r.iter().map(|&r| f(r)).collect();
        RateTable::from_columns("analytic", NormChoice::EllInf, 1, r, &g, &g).unwrap()
    }

    fn lower_table(lower: &[f64]) -> RateTable {
        let r: Vec<f64> = (1..=lower.len()).map(|i| i as f64).collect();
        let up = vec![10.0; lower.len()];
        RateTable::from_columns("t", NormChoice::EllInf, 1, &r, lower, &up).unwrap()
    }

    #[test]
    fn running_max_repair() {
        let t = enforce_monotone(lower_table(&[1.0, 2.0, 1.5]));
        assert_eq!(t.column(Column::Lower), vec![1.0, 2.0, 2.0]);
    }

    #[test]
    fn repair_is_idempotent() {
        let t = enforce_monotone(lower_table(&[1.0, 2.0, 1.5]));
        assert_eq!(enforce_monotone(t.clone()), t);
        let mono = lower_table(&[0.5, 1.0, 3.0]);
        assert_eq!(enforce_monotone(mono.clone()), mono);
    }

    #[test]
    fn inverse_of_cubic_table() {
        let r = log_grid(0.01, 1.0, 4000).unwrap();
        let t = analytic(&r, |r| 2.0 * r.powi(3));
        // Bisection oracle for 2 r^3 = 0.25.
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * mid.powi(3) >= 0.25 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let inv = generalized_inverse(&t, 0.25, Column::Upper);
        assert!(inv >= hi && inv - hi < 2e-3, "{inv} vs {hi}");
        assert_eq!(generalized_inverse(&t, 0.0, Column::Upper), 0.0);
        assert_eq!(generalized_inverse(&t, 3.0, Column::Upper), f64::INFINITY);
    }

    #[test]
    fn banach_constants() {
        let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!((banach_constant(&d) - 1.0).abs() < 1e-8);
        assert!((banach_constant(&DMatrix::identity(3, 3)) - 1.0).abs() < 1e-12);
        let a = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        assert!((banach_constant(&a) - 2.0).abs() < 1e-8);
        // Not surjective.
        let tall = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(banach_constant(&tall), 0.0);
        let rank1 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(banach_constant(&rank1) < 1e-6);
    }

    #[test]
    fn power_law_specs() {
        let p: PowerLaw = "pow:2:3".parse().unwrap();
        assert_eq!(p, PowerLaw::new(2.0, 3.0));
        assert_eq!(p.to_string().parse::<PowerLaw>().unwrap(), p);
        for bad in ["pow:2", "pow:0:3", "lin:1:1", "pow:a:b", "pow:1:inf"] {
            assert!(bad.parse::<PowerLaw>().is_err(), "{bad}");
        }
    }

    #[test]
    fn banach_matches_2x2_eigen_solve() {
        // Closed-form smallest eigenvalue of the symmetric 2x2 matrix A A^T.
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, -1.0, 0.5, -1.0, 3.0]);
        let m = &a * a.transpose();
        let (p, q, s) = (m[(0, 0)], m[(1, 1)], m[(0, 1)]);
        let lam: f64 = 0.5 * (p + q) - f64::sqrt(0.25 * (p - q) * (p - q) + s * s);
        assert!((banach_constant(&a) - lam.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn exact_cubic_fit() {
        let r = log_grid(0.05, 0.8, 16).unwrap();
        let fit = powerlaw_fit(&analytic(&r, |r| 2.0 * r.powi(3)), Column::Upper).unwrap();
        assert!((fit.law.coefficient - 2.0).abs() < 1e-9);
        assert!((fit.law.exponent - 3.0).abs() < 1e-9);
        assert!(fit.max_relative_residual < 1e-9);
        let flat = powerlaw_fit(&analytic(&r, |_| 0.7), Column::Lower).unwrap();
        assert!(flat.law.exponent.abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_zero_rows() {
        let r = [0.1, 0.2, 0.3, 0.4];
        let t = RateTable::from_columns("z", NormChoice::EllInf, 1, &r, &[0.0; 4], &[0.0, 1.0, 1.0, 1.0]).unwrap();
        match powerlaw_fit(&t, Column::Upper) {
            Err(Error::Fit(msg)) => assert!(msg.contains("[0]"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(powerlaw_fit(&t, Column::Upper).is_err());
    }

    #[test]
    fn cubic_scalar_rate_at_half() {
        let sys = builtin("cubic_scalar").unwrap();
        let t = openness_rate_table(&sys, &[0.5], NormChoice::EllInf, Resolution::with_budget(40_000)).unwrap();
        let g = t.entries[0].g_upper;
        assert!((g - 0.25).abs() <= 0.05 * 0.25, "{g}");
    }

    #[test]
    fn cubic_scalar_euclidean_rate_at_one() {
        // Oracle: brute-force max of x^3 + u^3 over the unit disk.
        let n = 1000;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let (x, u) = (-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64);
                if x * x + u * u <= 1.0 {
                    best = best.max(x.powi(3) + u.powi(3));
                }
            }
        }
        assert!((best - 1.0).abs() < 1e-9);
        let sys = builtin("cubic_scalar").unwrap();
        let t = openness_rate_table(&sys, &[1.0], NormChoice::Ell2, Resolution::with_budget(40_000)).unwrap();
        assert!((t.entries[0].g_upper - best).abs() <= 0.05 * best, "{:?}", t.entries[0]);
    }

    #[test]
    fn unicycle_rate_is_slack() {
        let sys = builtin("unicycle").unwrap();
        let t = openness_rate_table(&sys, &[0.3], NormChoice::EllInf, Resolution::with_budget(100_000)).unwrap();
        let e = t.entries[0];
        assert!(e.g_upper <= e.slack(3), "{e:?}");
        assert!(t.consistent_with_zero());
        assert!(t.zero_rate_below.is_some());
    }

    #[test]
    fn identity_rate_is_linear() {
        let sys = identity(2).unwrap();
        let r = log_grid(0.1, 1.0, 4).unwrap();
        let t = openness_rate_table(&sys, &r, NormChoice::EllInf, Resolution::with_budget(40_000)).unwrap();
        for e in &t.entries {
            assert!(e.g_upper >= e.r && e.g_upper <= e.r * 1.05, "{e:?}");
        }
        assert!(!t.consistent_with_zero());
    }

    #[test]
    fn csv_layout() {
        let t = analytic(&[0.5, 1.0], |r| r);
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("r,g_lower,g_upper,delta,epsilon,lambda"));
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 6);
        assert!(row.starts_with("5.0000000000000000e-1,"));
    }

    #[test]
    fn non_equilibrium_rejected() {
        let sys = builtin("affine1d").unwrap();
        assert!(openness_rate_table(&sys, &[0.5], NormChoice::EllInf, Resolution::default()).is_err());
    }
}
