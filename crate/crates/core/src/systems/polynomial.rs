use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::NormChoice;

/// Largest total degree accepted for a single monomial.
pub const MAX_DEGREE: u32 = 64;
/// Largest state or control dimension accepted from external input.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    /// Multi-index over `(x_1..x_n, u_1..u_m)`.
    pub exponents: Vec<u32>,
}

impl Term {
    pub fn new(coeff: f64, exponents: impl Into<Vec<u32>>) -> Self {
        Term {
            coeff,
            exponents: exponents.into(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    fn is_constant(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    #[inline]
    fn eval(&self, z: &[f64]) -> f64 {
        let mut v = self.coeff;
        for (&e, &x) in self.exponents.iter().zip(z) {
            if e != 0 {
                v *= x.powi(e as i32);
            }
        }
        v
    }
}

/// One component of the vector field: a sum of monomials in canonical form
/// (no repeated multi-index, no zero coefficients).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<Term>,
}

impl Polynomial {
    /// Merges duplicate multi-indices into their first occurrence and drops
    /// terms whose coefficient ends up zero. Term order is otherwise kept.
    fn canonical(terms: Vec<Term>) -> Self {
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.iter_mut().find(|o| o.exponents == t.exponents) {
                Some(o) => o.coeff += t.coeff,
                None => out.push(t),
            }
        }
        out.retain(|t| t.coeff != 0.0);
        Polynomial { terms: out }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    #[inline]
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(z)).sum()
    }

    fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.is_constant())
            .map(|t| t.coeff)
            .sum()
    }
}

/// Multivariate polynomial map `f(x, u)` from `R^n x R^m` to `R^n`.
#[derive(Debug, Clone)]
pub struct PolynomialSystem {
    label: Option<String>,
    state_dim: usize,
    control_dim: usize,
    components: Vec<Polynomial>,
}

impl PartialEq for PolynomialSystem {
    fn eq(&self, other: &Self) -> bool {
        self.state_dim == other.state_dim
            && self.control_dim == other.control_dim
            && self.components == other.components
    }
}

impl PolynomialSystem {
    /// Builds a system with an equilibrium at the origin. A nonzero constant
    /// term in any component is a validation error.
    pub fn new(state_dim: usize, control_dim: usize, components: Vec<Vec<Term>>) -> Result<Self> {
        let sys = Self::with_offset(state_dim, control_dim, components)?;
        for (i, c) in sys.components.iter().enumerate() {
            let k = c.constant_term();
            if k != 0.0 {
                return Err(Error::Validation {
                    location: format!("component {i}"),
                    message: format!(
                        "constant term {k} makes f(0,0) nonzero; translate the equilibrium to the origin"
                    ),
                });
            }
        }
        Ok(sys)
    }

    /// Like [`PolynomialSystem::new`] but accepts constant terms, for affine
    /// maps measured at a point other than the origin.
    pub fn with_offset(
        state_dim: usize,
        control_dim: usize,
        components: Vec<Vec<Term>>,
    ) -> Result<Self> {
        if state_dim == 0 || state_dim > MAX_DIM {
            return Err(Error::Validation {
                location: "state_dim".into(),
                message: format!("must be in 1..={MAX_DIM}, got {state_dim}"),
            });
        }
        if control_dim > MAX_DIM {
            return Err(Error::Validation {
                location: "control_dim".into(),
                message: format!("must be at most {MAX_DIM}, got {control_dim}"),
            });
        }
        if components.len() != state_dim {
            return Err(Error::Validation {
                location: "components".into(),
                message: format!(
                    "expected {state_dim} components, got {}",
                    components.len()
                ),
            });
        }
        let width = state_dim + control_dim;
        let mut canon = Vec::with_capacity(state_dim);
        for (i, terms) in components.into_iter().enumerate() {
            for (j, t) in terms.iter().enumerate() {
                let location = || format!("component {i}, term {j}");
                if t.exponents.len() != width {
                    return Err(Error::Validation {
                        location: location(),
                        message: format!(
                            "exponents has length {}, expected state_dim + control_dim = {width}",
                            t.exponents.len()
                        ),
                    });
                }
                if !t.coeff.is_finite() {
                    return Err(Error::Validation {
                        location: location(),
                        message: "coefficient is not finite".into(),
                    });
                }
                if t.exponents.iter().any(|&e| e > MAX_DEGREE)
                    || t.exponents.iter().map(|&e| e as u64).sum::<u64>() > MAX_DEGREE as u64
                {
                    return Err(Error::Validation {
                        location: location(),
                        message: format!("total degree exceeds {MAX_DEGREE}"),
                    });
                }
            }
            canon.push(Polynomial::canonical(terms));
        }
        Ok(PolynomialSystem {
            label: None,
            state_dim,
            control_dim,
            components: canon,
        })
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn equilibrium_at_origin(&self) -> bool {
        self.components.iter().all(|c| c.constant_term() == 0.0)
    }

    pub(crate) fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(z);
        }
    }

    /// Entrywise bound on `|df_i/dz_j|` over the closed ball of the given
    /// radius: each monomial contributes `|c| * e_j * radius^(deg - 1)`.
    fn jacobian_bound(&self, radius: f64) -> Vec<Vec<f64>> {
        let width = self.state_dim + self.control_dim;
        self.components
            .iter()
            .map(|c| {
                let mut row = vec![0.0; width];
                for t in &c.terms {
                    let deg = t.degree();
                    for (j, &e) in t.exponents.iter().enumerate() {
                        if e > 0 {
                            row[j] += t.coeff.abs() * e as f64 * radius.powi(deg as i32 - 1);
                        }
                    }
                }
                row
            })
            .collect()
    }

    pub fn lipschitz_bound(&self, radius: f64, norm: NormChoice) -> Result<f64> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::input(format!(
                "Lipschitz radius must be positive and finite, got {radius}"
            )));
        }
        let b = self.jacobian_bound(radius);
        let row_sum = b
            .iter()
            .map(|r| r.iter().sum::<f64>())
            .fold(0.0_f64, f64::max);
        Ok(match norm {
            NormChoice::EllInf => row_sum,
            NormChoice::Ell2 => {
                // |J| <= B entrywise, so ||J||_2 <= ||B||_2, which is bounded
                // by both the Frobenius norm and sqrt(||B||_1 ||B||_inf).
                let width = self.state_dim + self.control_dim;
                let col_sum = (0..width)
                    .map(|j| b.iter().map(|r| r[j]).sum::<f64>())
                    .fold(0.0_f64, f64::max);
                let frob = b.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                frob.min((row_sum * col_sum).sqrt())
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> PolynomialSystem {
        PolynomialSystem::new(1, 1, vec![vec![Term::new(1.0, [3, 0]), Term::new(1.0, [0, 3])]])
            .unwrap()
    }

    #[test]
    fn cubic_evaluates() {
        let s = cubic();
        let mut out = [0.0];
        s.eval_into(&[1.0, 1.0], &mut out);
        assert_eq!(out[0], 2.0);
        s.eval_into(&[0.0, 0.0], &mut out);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn cubic_lipschitz_linf_is_six() {
        assert_eq!(cubic().lipschitz_bound(1.0, NormChoice::EllInf).unwrap(), 6.0);
    }

    #[test]
    fn diagonal_lipschitz_l2_is_two() {
        let s = PolynomialSystem::new(
            2,
            0,
            vec![vec![Term::new(2.0, [1, 0])], vec![Term::new(1.0, [0, 1])]],
        )
        .unwrap();
        for r in [0.1, 1.0, 7.0] {
            assert_eq!(s.lipschitz_bound(r, NormChoice::Ell2).unwrap(), 2.0);
        }
    }

    #[test]
    fn zero_polynomial_has_zero_bound() {
        let s = PolynomialSystem::new(2, 1, vec![vec![], vec![]]).unwrap();
        assert_eq!(s.lipschitz_bound(3.0, NormChoice::Ell2).unwrap(), 0.0);
        assert_eq!(s.lipschitz_bound(3.0, NormChoice::EllInf).unwrap(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(cubic().lipschitz_bound(0.0, NormChoice::EllInf).is_err());
        assert!(cubic().lipschitz_bound(-1.0, NormChoice::Ell2).is_err());
    }

    #[test]
    fn duplicates_are_merged() {
        let s = PolynomialSystem::new(
            1,
            1,
            vec![vec![
                Term::new(1.0, [3, 0]),
                Term::new(0.5, [0, 3]),
                Term::new(0.5, [0, 3]),
            ]],
        )
        .unwrap();
        assert_eq!(s, cubic());
    }

    #[test]
    fn cancelling_terms_vanish() {
        let s = PolynomialSystem::new(
            1,
            0,
            vec![vec![Term::new(1.0, [2]), Term::new(-1.0, [2])]],
        )
        .unwrap();
        assert!(s.components()[0].terms().is_empty());
    }

    #[test]
    fn constant_term_names_component() {
        let err = PolynomialSystem::new(
            2,
            0,
            vec![vec![Term::new(1.0, [1, 0])], vec![Term::new(1.0, [0, 0])]],
        )
        .unwrap_err();
        match err {
            Error::Validation { location, .. } => assert_eq!(location, "component 1"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn wrong_exponent_width_rejected() {
        let err = PolynomialSystem::new(1, 1, vec![vec![Term::new(1.0, [1])]]).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }
}
