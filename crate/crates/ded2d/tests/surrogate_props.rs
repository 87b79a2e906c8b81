use ded2d::model::{penalty_omega, Scenario};
use ded2d::sca::{find_feasible, initial_point, AlgorithmOptions, Problem};
use ded2d::scenario::C64;
use ded2d::scenario::{generate_channels, ScenarioConfig};
use ded2d::surrogate::*;
use ded2d::verify::{minorant_bounds, template_checks};
use proptest::prelude::*;

#[test]
fn scalar_minorants_on_ten_thousand_tuples() {
    let rep = minorant_bounds(10_000, 2024);
    assert_eq!(rep.samples, 10_000);
    assert!(rep.max_violation <= 1e-12, "violation {:e}", rep.max_violation);
    assert!(rep.max_equality_error <= 1e-12, "equality {:e}", rep.max_equality_error);
}

proptest! {
    #[test]
    fn log_ratio_bound_holds(x in 1e-3f64..1e3, y in 1e-3f64..1e3, xb in 1e-3f64..1e3, yb in 1e-3f64..1e3) {
        let exact = (x / y).ln_1p();
        prop_assert!(lb_log1p_ratio(x, y, xb, yb).unwrap() <= exact + 1e-12 * exact.max(1.0));
        prop_assert!((lb_log1p_ratio(xb, yb, xb, yb).unwrap() - (xb / yb).ln_1p()).abs() <= 1e-12);
    }

    #[test]
    fn log_ratio_over_time_bound_holds(
        x in 1e-3f64..1e3, y in 1e-3f64..1e3, t in 1.0f64..50.0,
        xb in 1e-3f64..1e3, yb in 1e-3f64..1e3, tb in 1.0f64..50.0,
    ) {
        let exact = (x / y).ln_1p() / t;
        prop_assert!(lb_log1p_ratio_over_t(x, y, t, xb, yb, tb).unwrap() <= exact + 1e-12 * exact.max(1.0));
    }

    #[test]
    fn square_bound_holds(x in -1e3f64..1e3, xb in -1e3f64..1e3) {
        prop_assert!(lb_square(x, xb) <= x * x + 1e-12 * (x * x).max(1.0));
    }

    #[test]
    fn penalty_bound_holds(
        mods in prop::collection::vec(0.01f64..1.0, 1..8),
        phases in prop::collection::vec(0.0f64..6.28, 8),
        bar_mods in prop::collection::vec(0.05f64..1.0, 8),
    ) {
        let theta: Vec<C64> = mods.iter().zip(&phases).map(|(r, a)| C64::from_polar(*r, *a)).collect();
        let bar: Vec<C64> = theta.iter().zip(&bar_mods).map(|(z, r)| C64::from_polar(*r, z.arg() + 0.3)).collect();
        let lb = lb_penalty(&theta, &bar);
        prop_assume!(lb.is_ok());
        prop_assert!(lb.unwrap() <= penalty_omega(&theta).unwrap() + 1e-12);
    }
}

#[test]
fn coefficients_reject_degenerate_points() {
    assert!(SurrogateCoefficients::log1p_ratio(0.0, 1.0).is_err());
    assert!(SurrogateCoefficients::log1p_ratio(1.0, -1.0).is_err());
    assert!(SurrogateCoefficients::log1p_ratio_over_t(1.0, 1.0, 0.0).is_err());
    assert!(lb_penalty(&[C64::new(0.0, 0.0)], &[C64::new(0.0, 0.0)]).is_err());
}

const KINDS: [fn(Scenario) -> SubproblemKind; 3] = [SubproblemKind::block1, SubproblemKind::block2, SubproblemKind::feasibility];

/// Every template family of every subproblem is tight at its expansion point
/// and stays below the exact quantity on at least 10³ in-region samples.
#[test]
fn templates_are_tight_minorants() {
    let cfg = ScenarioConfig::calibrated();
    let mut families = 0;
    for seed in [1u64, 4] {
        let ch = generate_channels(&cfg, seed).unwrap();
        let prob = Problem::new(&ch, &cfg).unwrap();
        for scenario in [Scenario::Nota, Scenario::Ota] {
            let start = find_feasible(&prob, scenario, &AlgorithmOptions { seed, ..Default::default() }).unwrap();
            for make in KINDS {
                let kind = make(scenario);
                for c in template_checks(&prob, kind, &start.point, 1600, seed + 100).unwrap() {
                    families += 1;
                    assert!(c.tightness <= 1e-9, "{} {} tightness {:e}", kind.name(), c.family, c.tightness);
                    assert!(c.violation <= 1e-9, "{} {} violation {:e}", kind.name(), c.family, c.violation);
                    assert!(c.samples >= 1000, "{} {} only {} samples", kind.name(), c.family, c.samples);
                }
            }
        }
    }
    assert!(families >= 2 * 20);
}

/// Templates also hold around an arbitrary interior start whose reflection
/// vector is strictly inside the unit ball.
#[test]
fn templates_hold_off_the_unit_circle() {
    let cfg = ScenarioConfig::calibrated();
    let ch = generate_channels(&cfg, 6).unwrap();
    let prob = Problem::new(&ch, &cfg).unwrap();
    for scenario in [Scenario::Nota, Scenario::Ota] {
        let mut base = initial_point(&cfg, scenario, 6);
        for (n, z) in base.theta.iter_mut().enumerate() {
            *z *= 0.4 + 0.05 * n as f64;
        }
        for make in KINDS {
            for c in template_checks(&prob, make(scenario), &base, 400, 9).unwrap() {
                assert!(c.tightness <= 1e-9 && c.violation <= 1e-9, "{c:?}");
            }
        }
    }
}

#[test]
fn zero_d2d_threshold_drops_the_rate_templates() {
    let mut cfg = ScenarioConfig::calibrated();
    cfg.set_param("r_k_min_bps", 0.0).unwrap();
    let ch = generate_channels(&cfg, 2).unwrap();
    let prob = Problem::new(&ch, &cfg).unwrap();
    let base = initial_point(&cfg, Scenario::Nota, 2);
    let tpl = build_templates(SubproblemKind::Nota1, &prob.maps, &cfg, &base, 1.0).unwrap();
    assert!(tpl.d2d.is_empty());
    assert_eq!(tpl.iu.len(), cfg.counts.num_ius);
    assert_eq!(tpl.energy.len(), cfg.counts.num_eus);
    assert!(tpl.penalty.is_none());
    let tpl = build_templates(SubproblemKind::Nota2, &prob.maps, &cfg, &base, 1.0).unwrap();
    assert!(tpl.penalty.is_some());
}
