use ded2d::scenario::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn bs_irs_geometry_matches_the_default_layout() {
    let cfg = ScenarioConfig::default();
    let d = distance(cfg.geometry.bs_position, cfg.geometry.irs_position);
    assert!(close(d, 73.655, 1e-3), "distance {d}");
    let g = bs_irs_gain_db(&cfg, d);
    assert!(close(g, -66.98, 5e-3), "gain {g}");
}

#[test]
fn los_entries_have_the_large_scale_modulus() {
    let cfg = ScenarioConfig::default();
    let ch = generate_channels(&cfg, 4).unwrap();
    let d = distance(cfg.geometry.bs_position, cfg.geometry.irs_position);
    let amp = 10f64.powf(bs_irs_gain_db(&cfg, d) / 20.0);
    for row in &ch.bs_to_irs {
        for z in row {
            assert!(close(z.norm(), amp, 1e-12 * amp));
        }
    }
    for row in los_matrix(9, 7, 5) {
        assert_eq!(row.len(), 5);
        assert!(row.iter().all(|z| close(z.norm(), 1.0, 1e-12)));
    }
}

#[test]
fn path_loss_grows_with_distance() {
    for gamma in [2.0, 3.0] {
        let mut prev = f64::NEG_INFINITY;
        for d in [1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 170.0] {
            let l = path_loss_db(gamma, d);
            assert!(l > prev);
            prev = l;
        }
    }
    assert!(close(path_loss_db(2.0, 10.0), 50.0, 1e-12));
    assert!(close(amplitude(20.0), 0.1, 1e-15));
}

#[test]
fn rayleigh_power_matches_path_loss() {
    let cfg = ScenarioConfig::default();
    let pl = generate_placement(&cfg, 1).unwrap();
    let d = distance(cfg.geometry.bs_position, pl.ius[0]);
    let expected = amplitude(path_loss_db(cfg.channel.pathloss_exponent_rayleigh, d)).powi(2) / cfg.noise_power_mw();
    let seeds = 3000;
    let mut acc = 0.0;
    let mut count = 0.0;
    for seed in 0..seeds {
        let ch = channels_for_placement(&cfg, seed, &pl);
        for z in &ch.bs_to_iu[0] {
            acc += z.norm_sqr();
            count += 1.0;
        }
    }
    let mean = acc / count;
    assert!((mean / expected - 1.0).abs() < 0.03, "mean {mean:e} vs {expected:e}");
}

#[test]
fn channels_are_deterministic_per_seed() {
    let cfg = ScenarioConfig::default();
    assert_eq!(generate_channels(&cfg, 17).unwrap(), generate_channels(&cfg, 17).unwrap());
    assert_ne!(generate_channels(&cfg, 17).unwrap(), generate_channels(&cfg, 18).unwrap());
}

#[test]
fn shapes_follow_the_counts() {
    let mut cfg = ScenarioConfig::default();
    cfg.set_param("M", 3.0).unwrap();
    cfg.set_param("N", 4.0).unwrap();
    cfg.set_param("U_I", 1.0).unwrap();
    cfg.set_param("U_E", 3.0).unwrap();
    cfg.set_param("K", 2.0).unwrap();
    let ch = generate_channels(&cfg, 2).unwrap();
    ch.validate().unwrap();
    assert_eq!((ch.m(), ch.n(), ch.num_ius(), ch.num_eus(), ch.num_pairs()), (3, 4, 1, 3, 2));
    assert_eq!(ch.d2d_cross.len(), 2);
    assert!(ch.d2d_cross[0][0].norm() == 0.0 && ch.d2d_cross[1][1].norm() == 0.0);
    assert_eq!(ch.d2dtx_to_eu[1].len(), 3);
}

#[test]
fn placement_respects_area_and_pair_distance() {
    let cfg = ScenarioConfig::default();
    for seed in 0..50 {
        let pl = generate_placement(&cfg, seed).unwrap();
        let area = cfg.geometry.deployment_area;
        for p in pl.ius.iter().chain(&pl.eus).chain(&pl.d2d_tx).chain(&pl.d2d_rx) {
            assert!(p[0] >= 0.0 && p[0] <= area[0] && p[1] >= 0.0 && p[1] <= area[1]);
        }
        for (t, r) in pl.d2d_tx.iter().zip(&pl.d2d_rx) {
            assert!(close(distance(*t, *r), cfg.geometry.d2d_pair_distance, 1e-9));
        }
    }
}

#[test]
fn noise_power_is_thermal_over_the_band() {
    let cfg = ScenarioConfig::default();
    assert!(close(cfg.noise_power_dbm(), -104.0, 1e-9));
    assert!(close(mw_to_dbm(dbm_to_mw(-37.5)), -37.5, 1e-12));
}

#[test]
fn config_round_trips_through_toml() {
    let mut cfg = ScenarioConfig::calibrated();
    cfg.set_param("p_b_max_dbm", 15.0).unwrap();
    cfg.set_param("rng_seed", 42.0).unwrap();
    let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(back, cfg);
    let partial = ScenarioConfig::from_toml_str("[power]\ne_min_dbm = -70.0\n").unwrap();
    assert_eq!(partial.power.e_min_dbm, -70.0);
    assert_eq!(partial.counts, ScenarioConfig::default().counts);
}

#[test]
fn table_defaults_and_calibrated_profile() {
    let cfg = ScenarioConfig::default();
    let c = &cfg.counts;
    assert_eq!((c.num_bs_antennas, c.num_irs_elements, c.num_ius, c.num_eus, c.num_d2d_pairs), (6, 10, 2, 2, 3));
    assert_eq!((cfg.power.p_b_max_dbm, cfg.power.p_k_max_dbm, cfg.power.e_min_dbm, cfg.power.rho), (20.0, 20.0, 0.0, 0.5));
    assert!(close(cfg.r_k_min_nats(), 0.4 * std::f64::consts::LN_2, 1e-15));
    assert_eq!(ScenarioConfig::calibrated().power.e_min_dbm, CALIBRATED_E_MIN_DBM);
}

#[test]
fn invalid_parameters_are_rejected() {
    let mut cfg = ScenarioConfig::default();
    assert!(cfg.set_param("bogus", 1.0).is_err());
    assert!(cfg.set_param("K", 2.5).is_err());
    assert!(cfg.set_param("M", 0.0).is_err() || cfg.validate().is_err());
    let mut cfg = ScenarioConfig::default();
    cfg.power.rho = 1.5;
    assert!(cfg.validate().is_err());
    assert!(ScenarioConfig::from_toml_str("[power]\nrho = \"high\"\n").is_err());
}

#[test]
fn snapshot_round_trip_is_exact() {
    let ch = generate_channels(&ScenarioConfig::default(), 8).unwrap();
    let back = ChannelSet::from_snapshot(&ch.to_snapshot()).unwrap();
    assert_eq!(back, ch);
    assert!(ChannelSet::from_snapshot("{\"format\":\"other\",\"version\":1}").is_err());
}

#[test]
fn adding_pairs_keeps_existing_links() {
    let mut cfg = ScenarioConfig::default();
    cfg.set_param("K", 3.0).unwrap();
    let small = generate_channels(&cfg, 5).unwrap();
    cfg.set_param("K", 4.0).unwrap();
    let large = generate_channels(&cfg, 5).unwrap();
    assert_eq!(small.bs_to_iu, large.bs_to_iu);
    assert_eq!(small.d2d_direct[..], large.d2d_direct[..3]);
}
