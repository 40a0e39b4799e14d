use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Norm used on both the product space of states and controls and on the
/// state space the vector field maps into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormChoice {
    #[serde(rename = "ellinf", alias = "linf")]
    EllInf,
    #[serde(rename = "ell2", alias = "l2")]
    Ell2,
}

impl NormChoice {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormChoice::EllInf => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            NormChoice::Ell2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            NormChoice::EllInf => a
                .iter()
                .zip(b)
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())),
            NormChoice::Ell2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Norm of a vector given as per-axis absolute offsets.
    pub(crate) fn combine_axes(self, offsets: impl Iterator<Item = f64>) -> f64 {
        match self {
            NormChoice::EllInf => offsets.fold(0.0_f64, |m, x| m.max(x.abs())),
            NormChoice::Ell2 => offsets.map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormChoice::EllInf => "linf",
            NormChoice::Ell2 => "l2",
        }
    }
}

impl fmt::Display for NormChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linf" | "ellinf" | "inf" | "max" => Ok(NormChoice::EllInf),
            "l2" | "ell2" | "2" | "euclidean" => Ok(NormChoice::Ell2),
            other => Err(Error::input(format!(
                "unknown norm `{other}` (expected linf or l2)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_of_simple_vectors() {
        assert_eq!(NormChoice::EllInf.norm(&[3.0, -4.0]), 4.0);
        assert_eq!(NormChoice::Ell2.norm(&[3.0, -4.0]), 5.0);
        assert_eq!(NormChoice::Ell2.dist(&[1.0, 1.0], &[4.0, 5.0]), 5.0);
    }

    #[test]
    fn parse_aliases() {
        assert_eq!("linf".parse::<NormChoice>().unwrap(), NormChoice::EllInf);
        assert_eq!("ELL2".parse::<NormChoice>().unwrap(), NormChoice::Ell2);
        assert!("l1".parse::<NormChoice>().is_err());
    }
}
