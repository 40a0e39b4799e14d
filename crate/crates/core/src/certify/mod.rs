//! No-go checkers. Each one evaluates a necessary condition for the
//! existence of a stabilizing feedback in a gain class and reports whether
//! it fails (an obstruction), holds, or cannot be decided.
//!
//! The inverse-growth bound `h` is always a user assertion about the
//! feedback class under test: no universal bound on it exists.

mod gain;
mod verdict;

use rayon::prelude::*;

pub use gain::{rho, GainClass, InverseGrowthBound, StepTable};
pub use verdict::{Mode, Outcome, Verdict, Witness};

use crate::error::{Error, Result};
use crate::estimates::sup_norm_on_ball;
use crate::norm::NormChoice;
use crate::rate::{PowerLaw, RateTable, Resolution};
use crate::systems::ControlSystem;

/// Relative tolerance for treating the symbolic exponent as exactly one.
pub const BORDERLINE_TOL: f64 = 1e-12;

fn validate_grid(r_grid: &[f64]) -> Result<[f64; 2]> {
    if r_grid.is_empty() {
        return Err(Error::input("radius range is empty"));
    }
    if r_grid.iter().any(|r| !(*r > 0.0) || !r.is_finite())
        || r_grid.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::input(
            "radius range must be positive, finite and strictly increasing",
        ));
    }
    Ok([r_grid[0], r_grid[r_grid.len() - 1]])
}

fn h_at(h: &InverseGrowthBound, r: f64) -> Result<f64> {
    h.eval(r)
        .ok_or_else(|| Error::Range(format!("inverse growth table does not reach r = {r}")))
}

fn rho_at(hr: f64, d: &GainClass) -> Result<f64> {
    rho(hr, d).ok_or_else(|| Error::Range(format!("gain table does not reach s = {hr}")))
}

/// Smallest and largest `rho(h(r), d)` over the grid: the radii a rate
/// table must cover for [`check_nogo`].
pub fn required_arguments(d: &GainClass, h: &InverseGrowthBound, r_grid: &[f64]) -> Result<(f64, f64)> {
    validate_grid(r_grid)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &r in r_grid {
        let a = rho_at(h_at(h, r)?, d)?;
        lo = lo.min(a);
        hi = hi.max(a);
    }
    Ok((lo, hi))
}

fn aggregate(range: [f64; 2], rows: Vec<Witness>, mut notes: Vec<String>) -> Verdict {
    let (witnesses, satisfied): (Vec<_>, Vec<_>) = rows.into_iter().partition(Witness::fails);
    let outcome = if satisfied.is_empty() {
        notes.push(format!(
            "inequality fails at every grid radius in [{:e}, {:e}]; this is a finite-range \
             certificate, an asymptotic claim needs the symbolic mode",
            range[0], range[1]
        ));
        Outcome::ObstructionCertified
    } else if witnesses.is_empty() {
        notes.push(
            "inequality holds at every grid radius; the condition is only necessary, so this \
             does not assert that a stabilizer exists"
                .into(),
        );
        Outcome::NoObstruction
    } else {
        notes.push(format!(
            "inequality fails at {} of {} grid radii",
            witnesses.len(),
            witnesses.len() + satisfied.len()
        ));
        Outcome::Inconclusive
    };
    Verdict {
        outcome,
        mode: Mode::NumericGrid,
        checked_range: Some(range),
        witnesses,
        satisfied,
        notes,
    }
}

fn zero_rate_verdict(range: [f64; 2], r0: f64, rows: Vec<Witness>, what: &str) -> Verdict {
    let (witnesses, satisfied): (Vec<_>, Vec<_>) = rows.into_iter().partition(Witness::fails);
    Verdict {
        outcome: Outcome::ObstructionCertified,
        mode: Mode::NumericGrid,
        checked_range: Some(range),
        witnesses,
        satisfied,
        notes: vec![format!(
            "{what} has rate identically zero on radii below {r0:e} (analytic certificate); \
             for any continuous feedback with u(0) = 0 and any h with h(r) -> 0 the argument \
             rho(h(r)) tends to zero, so r <= g(rho) fails for all small r whatever the gain bound"
        )],
    }
}

fn coverage_verdict(range: [f64; 2], table: &RateTable, needed: f64) -> Verdict {
    Verdict {
        outcome: Outcome::Inconclusive,
        mode: Mode::NumericGrid,
        checked_range: Some(range),
        witnesses: Vec::new(),
        satisfied: Vec::new(),
        notes: vec![format!(
            "rate table covers radii up to {:e} but arguments up to {needed:e} are needed; \
             extend the table",
            table.r_max()
        )],
    }
}

/// Main inequality `r <= g(rho(h(r), d))` on an explicit grid, reading the
/// upper column of `g` rounded up to the next table radius.
pub fn check_nogo(
    g: &RateTable,
    d: &GainClass,
    h: &InverseGrowthBound,
    r_grid: &[f64],
) -> Result<Verdict> {
    let range = validate_grid(r_grid)?;
    let args = r_grid
        .par_iter()
        .map(|&r| Ok((r, rho_at(h_at(h, r)?, d)?)))
        .collect::<Result<Vec<_>>>()?;

    if let Some(r0) = g.zero_rate_below {
        let rows = args
            .iter()
            .filter_map(|&(r, a)| {
                let rhs = if a < r0 { Some(0.0) } else { g.upper_at(a) };
                rhs.map(|rhs| Witness { r, lhs: r, rhs })
            })
            .collect();
        return Ok(zero_rate_verdict(range, r0, rows, &g.system));
    }

    let needed = args.iter().map(|a| a.1).fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(args.len());
    for &(r, a) in &args {
        match g.upper_at(a) {
            Some(rhs) => rows.push(Witness { r, lhs: r, rhs }),
            None => return Ok(coverage_verdict(range, g, needed)),
        }
    }
    Ok(aggregate(range, rows, Vec::new()))
}

/// Strengthened inequality `g_Fu(h(r)) <= g_f(rho(h(r), d))`.
///
/// The left side reads the lower column of `g_Fu` rounded down, and is
/// floored at `r`: whenever `h` really bounds the closed-loop inverse,
/// `g_Fu(h(r)) >= r`, so the floor keeps the check sound while making it
/// dominate [`check_nogo`] row by row. Rows where the tabulated
/// `g_Fu(h(r))` is certainly below `r` are reported as a diagnostic of the
/// `h` model.
pub fn check_nogo_strong(
    g_f: &RateTable,
    g_fu: &RateTable,
    d: &GainClass,
    h: &InverseGrowthBound,
    r_grid: &[f64],
) -> Result<Verdict> {
    let range = validate_grid(r_grid)?;
    let rows = r_grid
        .par_iter()
        .map(|&r| {
            let hr = h_at(h, r)?;
            Ok((r, hr, rho_at(hr, d)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut notes = Vec::new();
    let bad: Vec<f64> = rows
        .iter()
        .filter(|&&(r, hr, _)| g_fu.upper_at(hr).is_some_and(|u| u < r))
        .map(|&(r, _, _)| r)
        .collect();
    if !bad.is_empty() {
        notes.push(format!(
            "closed-loop rate at h(r) is below r at {} grid radii (first r = {:e}); the h model \
             does not bound the closed-loop inverse there",
            bad.len(),
            bad[0]
        ));
    }

    if let Some(r0) = g_f.zero_rate_below {
        let witnesses = rows
            .iter()
            .filter_map(|&(r, hr, a)| {
                let rhs = if a < r0 { Some(0.0) } else { g_f.upper_at(a) };
                rhs.map(|rhs| Witness { r, lhs: g_fu.lower_at(hr).max(r), rhs })
            })
            .collect();
        let mut v = zero_rate_verdict(range, r0, witnesses, &g_f.system);
        v.notes.extend(notes);
        return Ok(v);
    }

    let needed = rows.iter().map(|a| a.2).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(rows.len());
    for &(r, hr, a) in &rows {
        let Some(rhs) = g_f.upper_at(a) else {
            let mut v = coverage_verdict(range, g_f, needed);
            v.notes.extend(notes);
            return Ok(v);
        };
        out.push(Witness {
            r,
            lhs: g_fu.lower_at(hr).max(r),
            rhs,
        });
    }
    Ok(aggregate(range, out, notes))
}

/// Sup-norm variant `r <= sup ||f|| over the ball of radius rho(h(r), d)`,
/// with the right side a certified upper bound. Never stronger than
/// [`check_nogo`] since the inradius of an image never exceeds the sup norm.
pub fn check_norm_bound_nogo<S: ControlSystem + ?Sized>(
    sys: &S,
    d: &GainClass,
    h: &InverseGrowthBound,
    r_grid: &[f64],
    norm: NormChoice,
    res: Resolution,
) -> Result<Verdict> {
    let range = validate_grid(r_grid)?;
    let origin = vec![0.0; sys.input_dim()];
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let a = rho_at(h_at(h, r)?, d)?;
        let rhs = if a == 0.0 {
            0.0
        } else {
            sup_norm_on_ball(sys, &origin, a, norm, res)?.certified_upper()
        };
        rows.push(Witness { r, lhs: r, rhs });
    }
    Ok(aggregate(range, rows, Vec::new()))
}

/// Exponent `gamma * eta * min(beta, 1)` of the power-law right side.
pub fn obstruction_exponent(gamma: f64, beta: f64, eta: f64) -> f64 {
    gamma * eta * beta.min(1.0)
}

/// Asymptotic check for power-law data: rate envelope `g(r) <= C r^gamma`,
/// gain `d(s) = kappa s^beta`, inverse growth `h(r) <= L r^eta`.
pub fn check_nogo_symbolic(
    g_env: PowerLaw,
    d: &GainClass,
    h: &InverseGrowthBound,
) -> Result<Verdict> {
    let (c, gamma) = (g_env.coefficient, g_env.exponent);
    let &GainClass::PowerLaw { kappa, beta } = d else {
        return Err(Error::input("symbolic mode needs a power-law gain (pow:kappa:beta)"));
    };
    let Some((l, eta)) = h.as_power() else {
        return Err(Error::input("symbolic mode needs h of the form lip:L or power:L:eta"));
    };
    for (name, v) in [("C", c), ("gamma", gamma), ("kappa", kappa), ("beta", beta), ("L", l), ("eta", eta)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::input(format!("{name} must be positive, got {v}")));
        }
    }
    let e = obstruction_exponent(gamma, beta, eta);
    let mut notes = vec![format!(
        "right side behaves like r^e with e = gamma*eta*min(beta,1) = {gamma}*{eta}*{} = {e}",
        beta.min(1.0)
    )];
    let (outcome, checked_range) = if (e - 1.0).abs() <= BORDERLINE_TOL {
        let (coef, form) = if beta >= 1.0 {
            (
                c * l.powf(gamma) * (kappa * kappa + 1.0).powf(gamma / 2.0),
                "C*L^gamma*(kappa^2+1)^(gamma/2)",
            )
        } else {
            (c * kappa.powf(gamma) * l.powf(gamma * beta), "C*kappa^gamma*L^(gamma*beta)")
        };
        notes.push(format!(
            "borderline exponent: an obstruction follows for small r iff {form} < 1; here it \
             equals {coef}, so the condition {}",
            if coef < 1.0 { "holds" } else { "fails" }
        ));
        if beta < 1.0 {
            let kappa_min = (c * l.powf(gamma * beta)).powf(-1.0 / gamma);
            notes.push(format!(
                "equivalently, a stabilizing feedback in this class needs kappa >= {kappa_min}"
            ));
        }
        (Outcome::Inconclusive, None)
    } else if e > 1.0 {
        let k = c * (kappa * kappa * l.powf(2.0 * beta) + l * l).powf(gamma / 2.0);
        let r_star = k.powf(-1.0 / (e - 1.0)).min(1.0);
        notes.push(format!(
            "for r <= 1 the right side is at most K r^e with K = {k}, so r <= K r^e fails for \
             every 0 < r < {r_star}"
        ));
        (Outcome::ObstructionCertified, Some([0.0, r_star]))
    } else {
        notes.push(
            "e < 1: the estimate yields no obstruction; the condition is only necessary, so \
             this does not assert that a stabilizer exists"
                .into(),
        );
        (Outcome::NoObstruction, None)
    };
    Ok(Verdict {
        outcome,
        mode: Mode::SymbolicPowerLaw,
        checked_range,
        witnesses: Vec::new(),
        satisfied: Vec::new(),
        notes,
    })
}

/// Largest admissible gain exponent `1/alpha` for an envelope exponent
/// `alpha > 1` under bi-Lipschitz closed loops.
pub fn threshold_beta(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::input(format!("envelope exponent must exceed 1, got {alpha}")));
    }
    Ok(1.0 / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::log_grid;

    fn pl(c: f64, g: f64) -> PowerLaw {
        PowerLaw::new(c, g)
    }

    fn power_table(c: f64, gamma: f64, r: &[f64]) -> RateTable {
        let g: Vec<f64> = r.iter().map(|r| c * r.powf(gamma)).collect();
        RateTable::from_columns("analytic", NormChoice::EllInf, 1, r, &g, &g).unwrap()
    }

    #[test]
    fn threshold_values() {
        assert_eq!(threshold_beta(3.0).unwrap(), 1.0 / 3.0);
        assert_eq!(threshold_beta(2.0).unwrap(), 0.5);
        assert!((threshold_beta(1.5).unwrap() - 0.6667).abs() < 1e-4);
        assert!(threshold_beta(1.0).is_err());
        assert!(threshold_beta(0.5).is_err());
    }

    #[test]
    fn symbolic_cases() {
        let lip = InverseGrowthBound::lipschitz(1.0).unwrap();
        let v = check_nogo_symbolic(pl(2.0, 3.0), &GainClass::power_law(1.0, 1.0).unwrap(), &lip).unwrap();
        assert_eq!(v.outcome, Outcome::ObstructionCertified);
        let [lo, hi] = v.checked_range.unwrap();
        assert_eq!(lo, 0.0);
        // K = 2 * 2^{3/2}, r* = K^{-1/2}.
        assert!((hi - (2.0 * 2f64.powf(1.5)).powf(-0.5)).abs() < 1e-12);

        let v = check_nogo_symbolic(pl(2.0, 3.0), &GainClass::power_law(1.0, 1.0 / 3.0).unwrap(), &lip).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        assert!(v.notes.iter().any(|n| n.contains("kappa >=")));

        let v = check_nogo_symbolic(pl(2.0, 3.0), &GainClass::power_law(1.0, 0.25).unwrap(), &lip).unwrap();
        assert_eq!(v.outcome, Outcome::NoObstruction);

        for beta in [0.3, 1.0, 4.0] {
            let v = check_nogo_symbolic(pl(1.0, 1.0), &GainClass::power_law(1.0, beta).unwrap(), &lip).unwrap();
            assert_ne!(v.outcome, Outcome::ObstructionCertified);
        }
        assert!(check_nogo_symbolic(pl(0.0, 3.0), &GainClass::power_law(1.0, 1.0).unwrap(), &lip).is_err());
        assert!(check_nogo_symbolic(pl(1.0, 3.0), &GainClass::constant(1.0).unwrap(), &lip).is_err());
    }

    #[test]
    fn cubic_main_check() {
        let grid = log_grid(1e-3, 1e-1, 12).unwrap();
        let table = power_table(2.0, 3.0, &log_grid(1e-3, 1.0, 60).unwrap());
        let d = GainClass::power_law(1.0, 1.0).unwrap();
        let h = InverseGrowthBound::lipschitz(1.0).unwrap();
        let v = check_nogo(&table, &d, &h, &grid).unwrap();
        assert_eq!(v.outcome, Outcome::ObstructionCertified);
        assert_eq!(v.witnesses.len(), grid.len());
        assert!(v.notes[0].contains("finite-range"));
    }

    #[test]
    fn linear_rate_defeats_constant_gain() {
        let grid = log_grid(1e-3, 1e-1, 12).unwrap();
        let table = power_table(1.0, 1.0, &log_grid(1e-3, 10.0, 60).unwrap());
        let v = check_nogo(
            &table,
            &GainClass::constant(1.0).unwrap(),
            &InverseGrowthBound::lipschitz(1.0).unwrap(),
            &grid,
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::NoObstruction);
        assert_eq!(v.exit_code(), 1);
    }

    #[test]
    fn uncovered_arguments_are_inconclusive() {
        let grid = log_grid(1e-3, 1e-1, 5).unwrap();
        let table = power_table(1.0, 1.0, &log_grid(1e-3, 0.5, 10).unwrap());
        let v = check_nogo(
            &table,
            &GainClass::constant(1.0).unwrap(),
            &InverseGrowthBound::lipschitz(1.0).unwrap(),
            &grid,
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
        assert!(v.notes[0].contains("extend the table"));
    }

    #[test]
    fn malformed_range() {
        let table = power_table(1.0, 1.0, &[0.1, 1.0]);
        let d = GainClass::constant(1.0).unwrap();
        let h = InverseGrowthBound::lipschitz(1.0).unwrap();
        assert!(check_nogo(&table, &d, &h, &[]).is_err());
        assert!(check_nogo(&table, &d, &h, &[0.1, 0.05]).is_err());
        assert!(check_nogo(&table, &d, &h, &[0.0, 0.05]).is_err());
    }

    #[test]
    fn strong_counterexample_consistency() {
        let r = log_grid(1e-4, 1.0, 80).unwrap();
        let g_fu = power_table(1.0, 3.0, &r);
        let h = InverseGrowthBound::power(1.0, 1.0 / 3.0).unwrap();
        let grid = log_grid(1e-3, 1e-1, 10).unwrap();
        // Exact table at h(r) = r^{1/3}: upper reading never below r.
        for &ri in &grid {
            let hr = h.eval(ri).unwrap();
            assert!(g_fu.upper_at(hr).unwrap() >= ri * (1.0 - 1e-12));
        }
        let v = check_nogo_strong(&g_fu, &g_fu, &GainClass::constant(0.0).unwrap(), &h, &grid).unwrap();
        assert!(!v.notes.iter().any(|n| n.contains("does not bound")));
    }

    #[test]
    fn strong_dominates_and_vacuous_gain() {
        let grid = log_grid(1e-3, 1e-1, 10).unwrap();
        let cubic = power_table(2.0, 3.0, &log_grid(1e-3, 1.0, 60).unwrap());
        let d = GainClass::power_law(1.0, 1.0).unwrap();
        let h = InverseGrowthBound::lipschitz(1.0).unwrap();
        let v = check_nogo_strong(&cubic, &cubic, &d, &h, &grid).unwrap();
        assert_eq!(v.outcome, Outcome::ObstructionCertified);

        let lin = power_table(1.0, 1.0, &log_grid(1e-3, 1e3, 80).unwrap());
        let v = check_nogo_strong(&lin, &lin, &GainClass::constant(100.0).unwrap(), &h, &grid).unwrap();
        assert_eq!(v.outcome, Outcome::NoObstruction);
    }

    #[test]
    fn verdict_json_shape() {
        let v = check_nogo_symbolic(
            pl(2.0, 3.0),
            &GainClass::power_law(1.0, 1.0).unwrap(),
            &InverseGrowthBound::lipschitz(1.0).unwrap(),
        )
        .unwrap();
        let j: serde_json::Value = serde_json::from_str(&v.to_json()).unwrap();
        assert_eq!(j["outcome"], "ObstructionCertified");
        assert_eq!(j["mode"], "symbolic_power_law");
        assert!(j["witnesses"].is_array());
        assert!(j["notes"].is_array());
        assert_eq!(j["checked_range"][0], 0.0);
    }
}
