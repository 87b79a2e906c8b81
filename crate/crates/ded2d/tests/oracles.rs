use ded2d::model::{DesignPoint, Scenario};
use ded2d::sca::{find_feasible, run, Algorithm, AlgorithmOptions, Problem};
use ded2d::scenario::{generate_channels, ScenarioConfig, C64};
use ded2d::verify::{max_min_sinr_oracle, theta_block_ascent, theta_grid_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_element(seed: u64) -> (ScenarioConfig, u64) {
    let mut cfg = ScenarioConfig::calibrated();
    cfg.set_param("N", 2.0).unwrap();
    (cfg, seed)
}

#[test]
fn reflection_block_matches_a_phase_grid() {
    for seed in [3u64, 8] {
        let (cfg, seed) = two_element(seed);
        let ch = generate_channels(&cfg, seed).unwrap();
        let prob = Problem::new(&ch, &cfg).unwrap();
        let opts = AlgorithmOptions { seed, ..Default::default() };
        let start = find_feasible(&prob, Scenario::Nota, &opts).unwrap();
        let (point, ours) = theta_block_ascent(&prob, &start.point, &opts, 50).unwrap();
        assert!(point.theta.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let (best, _) = theta_grid_oracle(&prob, &start.point, 360).unwrap().expect("some grid point is feasible");
        let gap = (ours - best).abs() / best;
        assert!(gap <= 0.02, "seed {seed}: block {ours} vs grid {best}");
    }
}

/// Plain random search over feasible beamformers never beats the bisection
/// optimum, and the full algorithm lands within 1% of it.
#[test]
fn max_min_sinr_agrees_with_bisection() {
    let mut cfg = ScenarioConfig::calibrated();
    for (name, value) in [("K", 0.0), ("U_E", 0.0), ("N", 0.0)] {
        cfg.set_param(name, value).unwrap();
    }
    for seed in [2u64, 9] {
        let ch = generate_channels(&cfg, seed).unwrap();
        let prob = Problem::new(&ch, &cfg).unwrap();
        let oracle = max_min_sinr_oracle(&ch, &cfg).unwrap();
        assert!(oracle.objective > 0.0 && oracle.t_i > 0.0 && oracle.t_i < 1.0);

        let at_oracle = DesignPoint { w: oracle.w.clone(), v: vec![], p: vec![], tau: vec![1.0 / oracle.t_i, 1.0 / (1.0 - oracle.t_i)], theta: vec![] };
        let eval = prob.evaluate(&at_oracle).unwrap();
        assert!(eval.max_violation() <= 1e-6, "oracle point violates by {:e}", eval.max_violation());
        assert!((eval.objective - oracle.objective).abs() <= 1e-6 * oracle.objective);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = cfg.counts.num_bs_antennas;
        let pb = cfg.p_b_max_mw();
        for _ in 0..2000 {
            let t_i = rng.gen_range(0.05..0.999);
            let mut w: Vec<Vec<C64>> = (0..cfg.counts.num_ius).map(|_| (0..m).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()).collect();
            let used: f64 = w.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * t_i;
            let worst_beam = w.iter().map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>()).fold(0.0, f64::max);
            let s = (pb / used).min(pb / worst_beam).sqrt() * rng.gen_range(0.5..1.0);
            w.iter_mut().flatten().for_each(|z| *z *= s);
            let x = DesignPoint { w, v: vec![], p: vec![], tau: vec![1.0 / t_i, 1.0 / (1.0 - t_i)], theta: vec![] };
            let ev = prob.evaluate(&x).unwrap();
            if ev.is_feasible() {
                assert!(ev.objective <= oracle.objective * (1.0 + 1e-9));
            }
        }

        let trace = run(&prob, Algorithm::Nota, &AlgorithmOptions { seed, ..Default::default() }).unwrap();
        let gap = (trace.final_objective() - oracle.objective).abs() / oracle.objective;
        assert!(gap <= 0.01, "seed {seed}: algorithm {} vs oracle {}", trace.final_objective(), oracle.objective);
    }
}
