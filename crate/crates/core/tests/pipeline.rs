use wrd_mimo::detect::DetectorId;
use wrd_mimo::sim::{
    config_to_toml, load_config, load_result, parse_config, plot_data, result_to_json, run, run_so, write_result,
    SimConfig, SimMode,
};
use wrd_mimo::theory::{diversity_slope, CurveKind, TheoryCurve};
use wrd_mimo::MimoError;

#[test]
fn config_file_to_result_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("campaign.toml");
    std::fs::write(
        &cfg_path,
        "detector = \"sssd\"\nsnr_db = [8.0, 12.0]\norder = 4\nmode = \"so\"\nmax_trials = 400\nseed = 2\n\n[channel]\nn_tx = 4\nn_rx = 4\ncorrelation_alpha = 0.5\ncorrelation_beta = 0.5\n",
    )
    .unwrap();
    let cfg = load_config(&cfg_path).unwrap();
    assert_eq!(cfg.mode, SimMode::So);
    let result = run(&cfg).unwrap();
    let out = dir.path().join("result.json");
    write_result(&result, &out).unwrap();
    let back = load_result(&out).unwrap();
    assert_eq!(back, result);
    assert_eq!(result_to_json(&back).unwrap(), std::fs::read_to_string(&out).unwrap());
    // the echoed configuration reproduces the run
    assert_eq!(run(&back.config).unwrap(), result);
    assert_eq!(parse_config(&config_to_toml(&cfg).unwrap()).unwrap(), cfg);
}

#[test]
fn repeated_runs_are_identical() {
    let mut cfg = SimConfig::new(DetectorId::Ppcd, vec![12.0, 18.0]);
    cfg.pattern = Some("partial:1".parse().unwrap());
    cfg.max_trials = 500;
    let a = run(&cfg).unwrap();
    cfg.workers = 2;
    let b = run(&cfg).unwrap();
    assert_eq!(plot_data(&a), plot_data(&b));
    assert_eq!(result_to_json(&a).unwrap(), result_to_json(&b).unwrap());
}

#[test]
fn different_seeds_differ() {
    let mut cfg = SimConfig::new(DetectorId::Nc, vec![10.0]);
    cfg.max_trials = 300;
    cfg.target_errors = 0;
    let a = run(&cfg).unwrap();
    cfg.seed = 1;
    let b = run(&cfg).unwrap();
    assert_ne!(a.points[0].bit_errors, b.points[0].bit_errors);
}

#[test]
fn soft_run_rejects_hard_only_detector() {
    let mut cfg = SimConfig::new(DetectorId::Nc, vec![10.0]);
    cfg.mode = SimMode::So;
    assert!(matches!(run_so(&cfg, None), Err(MimoError::Config(_))));
}

#[test]
fn theory_curves_have_expected_slopes() {
    let grid: Vec<f64> = (0..11).map(|k| 30.0 + k as f64).collect();
    let pcd = TheoryCurve::evaluate(CurveKind::Pcd, 4, 16, &grid).unwrap();
    let pnc = TheoryCurve::evaluate(CurveKind::Pnc, 4, 16, &grid).unwrap();
    assert!((diversity_slope(&pcd.slope_points()).unwrap() + 2.0).abs() < 0.2);
    assert!((diversity_slope(&pnc.slope_points()).unwrap() + 1.0).abs() < 0.2);
}
