use edgeworth_tv::edgeworth::EdgeworthModel;
use edgeworth_tv::harness::{emit_report, run_rate, standardized, tv_at, RateConfig, Verdict};
use edgeworth_tv::numerics::GridSpec;

#[test]
fn higher_order_correction_is_closer_at_large_n() {
    let d = standardized("exp").unwrap();
    let spec = GridSpec::standard(1);
    let tv = |r| tv_at(&d, &EdgeworthModel::new(&d, r).unwrap(), 1024, &spec).unwrap().mid();
    let (t2, t5) = (tv(2), tv(5));
    assert!(t5 < t2, "r=5 {t5} vs r=2 {t2}");
}

#[test]
fn config_file_to_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("rate.cfg");
    std::fs::write(&cfg_path, "dist = exp\nr = 3\nn_list = 32,64,128,256\nseed = 5\n").unwrap();
    let cfg = RateConfig::from_file(&cfg_path).unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_report(&run_rate(&cfg).unwrap(), &a).unwrap();
    emit_report(&run_rate(&cfg).unwrap(), &b).unwrap();
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    assert!(text.starts_with("n,tv_mid,tv_lo,tv_hi\n32,"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn verdicts_on_shipped_scenarios() {
    let grid = vec![32, 64, 128, 256, 512, 1024];
    for (dist, r, expected) in [("exp", 2, -0.5), ("exp", 3, -1.0), ("uniform", 3, -1.0), ("laplace", 3, -1.0)] {
        let report = run_rate(&RateConfig::new(dist, r, grid.clone())).unwrap();
        assert_eq!(report.expected_slope, expected, "{dist} r={r}");
        assert_eq!(report.verdict, Verdict::Pass, "{dist} r={r}: {report:?}");
        assert!(report.n_values.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn tight_tolerance_fails_with_reason() {
    let mut cfg = RateConfig::new("exp", 2, vec![32, 64, 128]);
    cfg.slope_tol = 1e-9;
    match run_rate(&cfg).unwrap().verdict {
        Verdict::Fail(reason) => assert!(reason.contains("slope"), "{reason}"),
        Verdict::Pass => panic!("expected failure"),
    }
}

#[test]
fn empty_grid_is_a_config_error() {
    assert!(run_rate(&RateConfig::new("exp", 2, vec![])).is_err());
    assert!(run_rate(&RateConfig::new("nope", 2, vec![32, 64])).is_err());
}
