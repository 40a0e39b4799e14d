//! Gain classes `||u(x)|| <= d(||x||)` and inverse-growth models
//! `h(r) <= ...`, with the colon-packed text syntax used on the command
//! line (`pow:kappa:beta`, `const:c`, `lip:L`, `power:L:eta`,
//! `table:s1/v1,s2/v2,...`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone step table `s -> v`, read at the first knot at or above the
/// argument (an upper bound for a nondecreasing function).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTable {
    knots: Vec<(f64, f64)>,
}

impl StepTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::input("table needs at least one knot"));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::input("table arguments must be strictly increasing"));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::input("table values must be nondecreasing"));
            }
        }
        for &(s, v) in &knots {
            if !(s >= 0.0) || !(v >= 0.0) || !s.is_finite() || !v.is_finite() {
                return Err(Error::input("table entries must be finite and nonnegative"));
            }
        }
        if knots[0].0 == 0.0 && knots[0].1 != 0.0 {
            return Err(Error::input("table must vanish at zero"));
        }
        Ok(StepTable { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval_up(&self, s: f64) -> Option<f64> {
        if s <= 0.0 {
            return Some(0.0);
        }
        self.knots.iter().find(|k| k.0 >= s).map(|k| k.1)
    }

    fn parse(body: &str) -> Result<Self> {
        let knots = body
            .split(',')
            .map(|pair| {
                let (s, v) = pair
                    .split_once('/')
                    .ok_or_else(|| Error::input(format!("table knot `{pair}` is not s/v")))?;
                Ok((parse_num(s)?, parse_num(v)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(knots)
    }
}

impl fmt::Display for StepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("table:")?;
        for (i, (s, v)) in self.knots.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}/{v}")?;
        }
        Ok(())
    }
}

fn parse_num(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::input(format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn positive(v: f64, name: &str) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::input(format!("{name} must be positive, got {v}")))
    }
}

/// Radial gain bound on admissible feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainClass {
    PowerLaw { kappa: f64, beta: f64 },
    Constant { c: f64 },
    Tabulated { table: StepTable },
}

impl GainClass {
    pub fn power_law(kappa: f64, beta: f64) -> Result<Self> {
        Ok(GainClass::PowerLaw {
            kappa: positive(kappa, "gain coefficient")?,
            beta: positive(beta, "gain exponent")?,
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::input(format!("constant gain must be nonnegative, got {c}")));
        }
        Ok(GainClass::Constant { c })
    }

    /// `d(s)`; `None` when a tabulated gain is read beyond its last knot.
    pub fn eval(&self, s: f64) -> Option<f64> {
        match self {
            GainClass::PowerLaw { kappa, beta } => Some(if s <= 0.0 { 0.0 } else { kappa * s.powf(*beta) }),
            GainClass::Constant { c } => Some(*c),
            GainClass::Tabulated { table } => table.eval_up(s),
        }
    }
}

impl FromStr for GainClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "pow" | "power" => {
                let (k, b) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::input(format!("gain `{s}`: expected pow:kappa:beta")))?;
                GainClass::power_law(parse_num(k)?, parse_num(b)?)
            }
            "const" => GainClass::constant(parse_num(rest)?),
            "table" => Ok(GainClass::Tabulated {
                table: StepTable::parse(rest)?,
            }),
            _ => Err(Error::input(format!(
                "gain `{s}`: expected pow:kappa:beta, const:c or table:s/v,..."
            ))),
        }
    }
}

impl fmt::Display for GainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainClass::PowerLaw { kappa, beta } => write!(f, "pow:{kappa}:{beta}"),
            GainClass::Constant { c } => write!(f, "const:{c}"),
            GainClass::Tabulated { table } => table.fmt(f),
        }
    }
}

/// Model of the closed-loop inverse growth `h(r)`, asserted by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InverseGrowthBound {
    Lipschitz { l: f64 },
    Power { l: f64, eta: f64 },
    Tabulated { table: StepTable },
}

impl InverseGrowthBound {
    pub fn lipschitz(l: f64) -> Result<Self> {
        Ok(InverseGrowthBound::Lipschitz {
            l: positive(l, "inverse Lipschitz constant")?,
        })
    }

    pub fn power(l: f64, eta: f64) -> Result<Self> {
        let l = positive(l, "inverse growth coefficient")?;
        let eta = positive(eta, "inverse growth exponent")?;
        if eta > 1.0 {
            return Err(Error::input(format!(
                "inverse growth exponent must be at most 1, got {eta}"
            )));
        }
        Ok(InverseGrowthBound::Power { l, eta })
    }

    pub fn eval(&self, r: f64) -> Option<f64> {
        match self {
            InverseGrowthBound::Lipschitz { l } => Some(l * r.max(0.0)),
            InverseGrowthBound::Power { l, eta } => Some(if r <= 0.0 { 0.0 } else { l * r.powf(*eta) }),
            InverseGrowthBound::Tabulated { table } => table.eval_up(r),
        }
    }

    /// `(L, eta)` for the power-type models.
    pub fn as_power(&self) -> Option<(f64, f64)> {
        match *self {
            InverseGrowthBound::Lipschitz { l } => Some((l, 1.0)),
            InverseGrowthBound::Power { l, eta } => Some((l, eta)),
            InverseGrowthBound::Tabulated { .. } => None,
        }
    }
}

impl FromStr for InverseGrowthBound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "lip" => InverseGrowthBound::lipschitz(parse_num(rest)?),
            "power" | "pow" => {
                let (l, e) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::input(format!("h `{s}`: expected power:L:eta")))?;
                InverseGrowthBound::power(parse_num(l)?, parse_num(e)?)
            }
            "table" => Ok(InverseGrowthBound::Tabulated {
                table: StepTable::parse(rest)?,
            }),
            _ => Err(Error::input(format!(
                "h `{s}`: expected lip:L, power:L:eta or table:r/h,..."
            ))),
        }
    }
}

impl fmt::Display for InverseGrowthBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InverseGrowthBound::Lipschitz { l } => write!(f, "lip:{l}"),
            InverseGrowthBound::Power { l, eta } => write!(f, "power:{l}:{eta}"),
            InverseGrowthBound::Tabulated { table } => table.fmt(f),
        }
    }
}

/// `sqrt(r^2 + d(r)^2)`, the radius of the product-space ball that the
/// graph of an admissible feedback over `B_r` stays in.
pub fn rho(r: f64, d: &GainClass) -> Option<f64> {
    let r = r.max(0.0);
    d.eval(r).map(|dr| r.hypot(dr))
}
