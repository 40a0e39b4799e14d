use std::f64::consts::FRAC_PI_2;

use super::{PolynomialSystem, SmoothSystem, System, Term, MAX_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub dims: &'static str,
    pub summary: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "cubic_scalar",
            dims: "n=1, m=1",
            summary: "f(x,u) = x^3 + u^3; openness rate 2r^3 on the max-norm ball",
        },
        CatalogEntry {
            name: "cubic2d",
            dims: "n=2, m=1",
            summary: "f(x,u) = (x1^2 + x2^2 + x2, x1 x2 + x2^2 + u^3); stabilizable only by non-C1 feedback, rate O(r^3)",
        },
        CatalogEntry {
            name: "unicycle",
            dims: "n=3, m=2",
            summary: "(u1 cos th, u1 sin th, u2); openness rate identically zero (Brockett obstruction); Lipschitz 2*sqrt(1+R^2)",
        },
        CatalogEntry {
            name: "affine1d",
            dims: "n=1, m=0",
            summary: "f(x) = 2x + 3; norm estimate 7 >= 5 + 2 on K = [0,2] about x* = 1",
        },
        CatalogEntry {
            name: "affine2d",
            dims: "n=2, m=0",
            summary: "f(x) = diag(2,1) x + (3,4); norm estimate >= 6 on the unit ball, Banach constant 1",
        },
        CatalogEntry {
            name: "identity_n",
            dims: "n, m=0",
            summary: "f(x) = x (e.g. identity_2); openness rate g(r) = r",
        },
        CatalogEntry {
            name: "counterexample_p",
            dims: "n=1, m=0",
            summary: "closed-loop map -x^p of x' = x + u under u = -x - x^p, odd p >= 3 (e.g. counterexample_p(3)); defeats any universal bound on inverse growth",
        },
    ]
}

fn parse_count(s: &str, what: &str) -> Result<u32> {
    s.trim()
        .parse::<u32>()
        .map_err(|_| Error::input(format!("{what}: `{s}` is not a nonnegative integer")))
}

/// Looks up a built-in system by name.
///
/// Accepts `identity_<n>` and `counterexample_p(<p>)` (also
/// `counterexample:<p>`) for the parameterized families.
pub fn builtin(name: &str) -> Result<System> {
    let name = name.trim();
    match name {
        "cubic_scalar" => return Ok(cubic_scalar().into()),
        "cubic2d" => return Ok(cubic2d().into()),
        "unicycle" => return Ok(System::Smooth(unicycle())),
        "affine1d" => return Ok(affine1d().into()),
        "affine2d" => return Ok(affine2d().into()),
        _ => {}
    }
    if let Some(n) = name.strip_prefix("identity_") {
        let n = parse_count(n, "identity dimension")? as usize;
        return Ok(identity(n)?.into());
    }
    let p = name
        .strip_prefix("counterexample_p(")
        .and_then(|s| s.strip_suffix(')'))
        .or_else(|| name.strip_prefix("counterexample:"))
        .or_else(|| name.strip_prefix("counterexample_p:"));
    if let Some(p) = p {
        let p = parse_count(p, "counterexample exponent")?;
        return Ok(counterexample(p)?.into());
    }
    Err(Error::Catalog(name.to_string()))
}

pub(crate) fn cubic_scalar() -> PolynomialSystem {
    PolynomialSystem::new(1, 1, vec![vec![Term::new(1.0, [3, 0]), Term::new(1.0, [0, 3])]])
        .expect("static system")
        .labeled("cubic_scalar")
}

pub(crate) fn cubic2d() -> PolynomialSystem {
    PolynomialSystem::new(
        2,
        1,
        vec![
            vec![
                Term::new(1.0, [2, 0, 0]),
                Term::new(1.0, [0, 2, 0]),
                Term::new(1.0, [0, 1, 0]),
            ],
            vec![
                Term::new(1.0, [1, 1, 0]),
                Term::new(1.0, [0, 2, 0]),
                Term::new(1.0, [0, 0, 3]),
            ],
        ],
    )
    .expect("static system")
    .labeled("cubic2d")
}

fn unicycle_eval(z: &[f64], out: &mut [f64]) {
    let (theta, u1, u2) = (z[2], z[3], z[4]);
    out[0] = u1 * theta.cos();
    out[1] = u1 * theta.sin();
    out[2] = u2;
}

fn unicycle_lipschitz(radius: f64) -> f64 {
    // The Jacobian has spectral norm max(1, |u1|) and max row sum 1 + |u1|;
    // both are below 2 sqrt(1 + R^2).
    2.0 * (1.0 + radius * radius).sqrt()
}

/// Unicycle with state `(x, y, theta)` and control `(u1, u2)`.
pub(crate) fn unicycle() -> SmoothSystem {
    SmoothSystem {
        name: "unicycle".into(),
        state_dim: 3,
        control_dim: 2,
        eval: unicycle_eval,
        lipschitz: unicycle_lipschitz,
        // For |theta| < pi/2 a zero first image coordinate forces u1 = 0, so
        // the points (0, t, 0), t != 0, are never attained.
        zero_rate_below: Some(FRAC_PI_2),
        note: "Lipschitz constant 2*sqrt(1+R^2) (safety factor 2); rate vanishes below radius pi/2",
    }
}

pub(crate) fn affine1d() -> PolynomialSystem {
    PolynomialSystem::with_offset(1, 0, vec![vec![Term::new(2.0, [1]), Term::new(3.0, [0])]])
        .expect("static system")
        .labeled("affine1d")
}

pub(crate) fn affine2d() -> PolynomialSystem {
    PolynomialSystem::with_offset(
        2,
        0,
        vec![
            vec![Term::new(2.0, [1, 0]), Term::new(3.0, [0, 0])],
            vec![Term::new(1.0, [0, 1]), Term::new(4.0, [0, 0])],
        ],
    )
    .expect("static system")
    .labeled("affine2d")
}

pub fn identity(n: usize) -> Result<PolynomialSystem> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::input(format!("identity dimension must be in 1..={MAX_DIM}, got {n}")));
    }
    let comps = (0..n)
        .map(|i| {
            let mut e = vec![0u32; n];
            e[i] = 1;
            vec![Term::new(1.0, e)]
        })
        .collect();
    Ok(PolynomialSystem::new(n, 0, comps)?.labeled(format!("identity_{n}")))
}

/// The closed-loop map `x -> -x^p` for odd `p >= 3`.
pub fn counterexample(p: u32) -> Result<PolynomialSystem> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(Error::input(format!(
            "counterexample exponent must be an odd integer >= 3, got {p}"
        )));
    }
    Ok(PolynomialSystem::new(1, 0, vec![vec![Term::new(-1.0, [p])]])?
        .labeled(format!("counterexample_p({p})")))
}
