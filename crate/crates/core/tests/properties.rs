//! Property suites for the rate, geometry, certification and simulation
//! layers. Oracles are closed forms or brute force, never the code under
//! test.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use openness_core::certify::{check_nogo, check_nogo_strong, check_nogo_symbolic, check_norm_bound_nogo};
use openness_core::geometry::{inradius_box_oracle, inradius_with_lower_cell};
use openness_core::simulate::{integrate, inverse_growth, ClosedLoopField};
use openness_core::systems::{builtin, parse_descriptor, ControlSystem};
use openness_core::{
    enforce_monotone, generalized_inverse, inradius, log_grid, openness_rate_table, Column, GainClass,
    InverseGrowthBound, NormChoice, Outcome, PointCloud, PowerLaw, RateTable, Resolution,
};

const BUILTINS: [&str; 8] = [
    "cubic_scalar",
    "cubic2d",
    "unicycle",
    "affine1d",
    "affine2d",
    "identity_2",
    "identity_3",
    "counterexample_p(3)",
];

fn random_in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64, norm: NormChoice) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
        if norm.norm(&z) <= radius {
            return z;
        }
    }
}

#[test]
fn lipschitz_bounds_hold_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in BUILTINS {
        let sys = builtin(name).unwrap();
        for norm in [NormChoice::EllInf, NormChoice::Ell2] {
            for radius in [0.1, 1.0] {
                let lip = sys.lipschitz_bound(radius, norm).unwrap();
                for _ in 0..1000 {
                    let a = random_in_ball(&mut rng, sys.input_dim(), radius, norm);
                    let b = random_in_ball(&mut rng, sys.input_dim(), radius, norm);
                    let fa = sys.evaluate(&a).unwrap();
                    let fb = sys.evaluate(&b).unwrap();
                    let lhs = norm.dist(&fa, &fb);
                    let rhs = lip * norm.dist(&a, &b);
                    assert!(
                        lhs <= rhs * (1.0 + 1e-12) + 1e-15,
                        "{name} {norm} R={radius}: |f(a)-f(b)| = {lhs} > {rhs}"
                    );
                }
            }
        }
    }
}

fn table_strategy() -> impl Strategy<Value = RateTable> {
    (2usize..12)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.01f64..1.0, n),
                prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), n),
            )
        })
        .prop_filter_map("radii must be distinct", |(steps, cols)| {
            let mut r = 0.0;
            let radii: Vec<f64> = steps
                .iter()
                .map(|s| {
                    r += s;
                    r
                })
                .collect();
            let lower: Vec<f64> = cols.iter().map(|&(a, b)| a.min(b)).collect();
            let upper: Vec<f64> = cols.iter().map(|&(a, b)| a.max(b)).collect();
            RateTable::from_columns("random", NormChoice::EllInf, 1, &radii, &lower, &upper).ok()
        })
}

proptest! {
    #[test]
    fn generalized_inverse_is_a_galois_inverse(table in table_strategy(), s in 0.0f64..1.2) {
        let t = enforce_monotone(table);
        for col in [Column::Lower, Column::Upper] {
            let g = t.column(col);
            for (e, &gr) in t.entries.iter().zip(&g) {
                if gr > 0.0 {
                    prop_assert!(generalized_inverse(&t, gr, col) <= e.r);
                }
            }
            let inv = generalized_inverse(&t, s, col);
            if inv.is_finite() && inv > 0.0 {
                let i = t.entries.iter().position(|e| e.r == inv).unwrap();
                prop_assert!(g[i] >= s);
            }
        }
    }

    #[test]
    fn monotone_repair_is_idempotent_and_dominating(table in table_strategy()) {
        let once = enforce_monotone(table.clone());
        let twice = enforce_monotone(once.clone());
        prop_assert_eq!(&once, &twice);
        for col in [Column::Lower, Column::Upper] {
            let (orig, rep) = (table.column(col), once.column(col));
            prop_assert!(rep.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(orig.iter().zip(&rep).all(|(a, b)| a <= b));
        }
        prop_assert!(once.entries.iter().all(|e| e.g_lower <= e.g_upper));
    }
}

/// Samples the box `[lo, hi]` on a lattice of the given pitch, which has
/// max-norm covering radius `pitch / 2`.
fn box_cloud(lo: &[f64], hi: &[f64], pitch: f64) -> PointCloud {
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| {
            let n = ((b - a) / pitch).ceil() as usize;
            (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
        })
        .collect();
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    PointCloud::from_points(lo.len(), pts).unwrap()
}

#[test]
fn inradius_matches_box_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..50 {
        let dim = if case % 5 == 4 { 3 } else { 2 };
        let norm = if case % 2 == 0 { NormChoice::EllInf } else { NormChoice::Ell2 };
        let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..-0.2)).collect();
        let hi: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.2..1.0)).collect();
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| rng.gen_range(a * 0.5..b * 0.5)).collect();
        let pitch = if dim == 2 { 0.01 } else { 0.04 };
        let cloud = box_cloud(&lo, &hi, pitch);
        // Identity map: Lambda = 1 and delta is the covering radius.
        let delta = match norm {
            NormChoice::EllInf => pitch / 2.0,
            NormChoice::Ell2 => pitch / 2.0 * (dim as f64).sqrt(),
        };
        let eps = delta;
        // The raw raster behind the lower bound must not be finer than the
        // sample lattice, as in the rate pipeline.
        let est = inradius_with_lower_cell(&cloud, &center, delta, eps, eps.max(pitch), norm).unwrap();
        let oracle = inradius_box_oracle(&lo, &hi, &center);
        let tol = delta + 2.0 * eps * (dim as f64).sqrt();
        assert!(est.lower <= est.upper);
        assert!(est.upper >= oracle - 1e-12, "case {case}: upper {} < oracle {oracle}", est.upper);
        assert!(est.upper <= oracle + tol, "case {case}: upper {} vs oracle {oracle} (tol {tol})", est.upper);
        assert!((est.lower - oracle).abs() <= tol, "case {case}: lower {} vs oracle {oracle}", est.lower);
    }
}

#[test]
fn inradius_bounds_tighten_under_refinement() {
    let (lo, hi, center) = ([-0.5, -0.3], [0.7, 0.4], [0.1, 0.05]);
    let oracle = inradius_box_oracle(&lo, &hi, &center);
    let mut prev_gap = f64::INFINITY;
    for pitch in [0.04, 0.02, 0.01] {
        let est = inradius(&box_cloud(&lo, &hi, pitch), &center, pitch / 2.0, pitch / 2.0, NormChoice::EllInf).unwrap();
        let gap = est.upper - oracle;
        assert!(gap >= -1e-12 && gap <= prev_gap + 1e-12, "gap {gap} after {prev_gap}");
        prev_gap = gap;
    }
}

fn cubic_table() -> RateTable {
    // Closed form g(r) = 2 r^3 of the scalar cubic in the max norm.
    let r = log_grid(1e-3, 2.0, 200).unwrap();
    let g: Vec<f64> = r.iter().map(|r| 2.0 * r * r * r).collect();
    RateTable::from_columns("cubic_scalar", NormChoice::EllInf, 1, &r, &g, &g).unwrap()
}

fn failing_rows(v: &openness_core::Verdict) -> Vec<f64> {
    v.witnesses.iter().filter(|w| w.fails()).map(|w| w.r).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verdicts_are_monotone_in_the_gain(
        k1 in 0.1f64..3.0, dk in 0.0f64..3.0, beta in 0.2f64..2.0, l in 0.5f64..2.0,
    ) {
        let table = cubic_table();
        let grid = log_grid(1e-3, 0.1, 12).unwrap();
        let h = InverseGrowthBound::lipschitz(l).unwrap();
        let small = check_nogo(&table, &GainClass::power_law(k1, beta).unwrap(), &h, &grid).unwrap();
        let large = check_nogo(&table, &GainClass::power_law(k1 + dk, beta).unwrap(), &h, &grid).unwrap();
        let fs = failing_rows(&small);
        for r in failing_rows(&large) {
            prop_assert!(fs.contains(&r), "row {} fails under the larger gain only", r);
        }
        if large.outcome == Outcome::ObstructionCertified {
            prop_assert_eq!(small.outcome, Outcome::ObstructionCertified);
        }
    }

    #[test]
    fn symbolic_certifies_exactly_above_threshold(
        c in 0.1f64..5.0, gamma in 0.5f64..5.0, kappa in 0.1f64..5.0,
        beta in 0.05f64..3.0, l in 0.1f64..5.0, eta in 0.05f64..1.0,
    ) {
        let e = gamma * eta * beta.min(1.0);
        prop_assume!((e - 1.0).abs() > 1e-9);
        let v = check_nogo_symbolic(
            PowerLaw::new(c, gamma),
            &GainClass::power_law(kappa, beta).unwrap(),
            &InverseGrowthBound::power(l, eta).unwrap(),
        ).unwrap();
        prop_assert_eq!(v.outcome == Outcome::ObstructionCertified, e > 1.0);
        if let Some([lo, hi]) = v.checked_range {
            // On the certified range the right side really is below r.
            let r = 0.5 * (lo + hi);
            let s = l * r.powf(eta);
            let rho = (s * s + (kappa * s.powf(beta)).powi(2)).sqrt();
            prop_assert!(c * rho.powf(gamma) < r);
        }
    }
}

#[test]
fn strong_and_supnorm_checks_are_ordered_against_the_main_check() {
    let res = Resolution::with_budget(20_000);
    let grid = log_grid(1e-2, 0.2, 6).unwrap();
    let closed = ClosedLoopField::counterexample(3).unwrap().closed_loop_map();
    let h = InverseGrowthBound::power(1.0, 1.0 / 3.0).unwrap();
    let hs: Vec<f64> = grid.iter().map(|&r| h.eval(r).unwrap()).collect();
    let g_fu = openness_rate_table(&closed, &log_grid(hs[0], *hs.last().unwrap(), 16).unwrap(), NormChoice::EllInf, res).unwrap();
    for name in ["cubic_scalar", "cubic2d", "identity_2", "unicycle"] {
        let sys = builtin(name).unwrap();
        let g_f = openness_rate_table(&sys, &log_grid(1e-3, 2.0, 24).unwrap(), NormChoice::EllInf, res).unwrap();
        for d in [GainClass::power_law(1.0, 1.0).unwrap(), GainClass::constant(2.0).unwrap()] {
            let main = check_nogo(&g_f, &d, &h, &grid).unwrap();
            let strong = check_nogo_strong(&g_f, &g_fu, &d, &h, &grid).unwrap();
            let sup = check_norm_bound_nogo(&sys, &d, &h, &grid, NormChoice::EllInf, res).unwrap();
            let main_fail = failing_rows(&main);
            for r in &main_fail {
                assert!(failing_rows(&strong).contains(r), "{name}: strong misses row {r}");
            }
            for r in failing_rows(&sup) {
                assert!(main_fail.contains(&r), "{name}: sup-norm check fails row {r} the main check passes");
            }
            if main.is_certified() {
                assert!(strong.is_certified(), "{name}: strong check weaker than main");
            }
            if sup.is_certified() {
                assert!(main.is_certified(), "{name}: sup-norm check stronger than main");
            }
        }
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    // x' = A x with A = [[-1, 2], [-2, -1]]: x(t) = e^-t R(-2t) x0.
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]);
    let field = ClosedLoopField::linear(a).unwrap();
    let t_end: f64 = 2.0;
    let exact = {
        let (c, s, k) = ((2.0 * t_end).cos(), (2.0 * t_end).sin(), (-t_end).exp());
        [k * c, -k * s]
    };
    let err = |dt: f64| {
        let x = integrate(&field, &[1.0, 0.0], dt, t_end).unwrap();
        let x = x.final_state();
        ((x[0] - exact[0]).powi(2) + (x[1] - exact[1]).powi(2)).sqrt()
    };
    let errs: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&dt| err(dt)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.9, "observed order {order}");
    }
}

#[test]
fn counterexample_rates_and_inverses_follow_the_exponent() {
    let res = Resolution::default();
    for p in [3u32, 5, 7] {
        let sys = builtin(&format!("counterexample_p({p})")).unwrap();
        let table = openness_rate_table(&sys, &log_grid(0.05, 1.0, 8).unwrap(), NormChoice::EllInf, res).unwrap();
        for e in &table.entries {
            let exact = e.r.powi(p as i32);
            assert!(e.g_lower <= exact * (1.0 + 1e-9) && exact <= e.g_upper * (1.0 + 1e-9) + 1e-15);
            assert!(e.g_upper - e.g_lower <= e.slack(1) + 1e-15);
        }
        for s in [1e-6, 1e-3, 0.3] {
            let ig = inverse_growth(p, s).unwrap();
            assert!((ig.value - s.powf(1.0 / p as f64)).abs() < 1e-12);
            assert!(ig.cross_check, "p={p} s={s}: {ig:?}");
        }
    }
}

proptest! {
    #[test]
    fn parsers_never_panic(s in "\\PC{0,40}") {
        let _ = s.parse::<GainClass>();
        let _ = s.parse::<InverseGrowthBound>();
        let _ = s.parse::<PowerLaw>();
        let _ = s.parse::<ClosedLoopField>();
        let _ = s.parse::<NormChoice>();
        let _ = builtin(&s);
        let _ = parse_descriptor(&s);
    }

    #[test]
    fn spec_parsers_never_panic_on_structured_input(
        kind in prop::sample::select(vec!["pow", "power", "const", "table", "lip", "counterexample"]),
        nums in prop::collection::vec(prop::num::f64::ANY, 0..4),
        seps in prop::collection::vec(prop::sample::select(vec![":", "/", ","]), 0..4),
    ) {
        let mut s = kind.to_string();
        for (i, n) in nums.iter().enumerate() {
            s.push_str(seps.get(i).copied().unwrap_or(":"));
            s.push_str(&n.to_string());
        }
        let _ = s.parse::<GainClass>();
        let _ = s.parse::<InverseGrowthBound>();
        let _ = s.parse::<PowerLaw>();
        let _ = s.parse::<ClosedLoopField>();
    }

    #[test]
    fn descriptor_parser_never_panics_on_json(
        n in 0usize..4, m in 0usize..3,
        exps in prop::collection::vec(prop::collection::vec(0u32..80, 0..6), 0..4),
        coeff in prop::num::f64::ANY,
    ) {
        let terms: Vec<serde_json::Value> = exps
            .iter()
            .map(|e| serde_json::json!({"coeff": if coeff.is_finite() { coeff } else { 1.0 }, "exponents": e}))
            .collect();
        let text = serde_json::json!({"state_dim": n, "control_dim": m, "components": [terms]}).to_string();
        let _ = parse_descriptor(&text);
    }
}
