use std::fs;

use dragmc::harness::{
    emit_acf_comparison, emit_figure1, run_experiment, standard_methods, ExperimentConfig, Figure1Config, Method,
    SharedSettings,
};
use dragmc::testbed::oracle::MarginalCdf;
use dragmc::testbed::Problem;

fn small(problem: Problem, method: Method, n: Option<usize>) -> ExperimentConfig {
    let mut c = ExperimentConfig::standard(problem, method, n);
    c.iterations = 5000;
    c
}

#[test]
fn same_seed_gives_identical_chain_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for problem in [Problem::Test1, Problem::Test2] {
        for method in [Method::Joint, Method::Single, Method::Marginal, Method::Drag] {
            let n = (method == Method::Drag).then_some(7);
            let mut c = small(problem, method, n);
            c.seed = 99;
            c.out_dir = Some(a.path().into());
            run_experiment(&c).unwrap();
            c.out_dir = Some(b.path().into());
            run_experiment(&c).unwrap();
            let ca = fs::read(a.path().join("chain.csv")).unwrap();
            let cb = fs::read(b.path().join("chain.csv")).unwrap();
            assert_eq!(ca, cb, "{problem} {method:?}");
        }
    }
}

#[test]
fn chain_file_has_post_burn_in_rows_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(Problem::Test2, Method::Drag, Some(5));
    c.burn_in = 0.2;
    c.out_dir = Some(dir.path().into());
    let out = run_experiment(&c).unwrap();
    let text = fs::read_to_string(dir.path().join("chain.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "iter,x,y0,y1,accepted");
    assert_eq!(lines.count(), 4000);
    assert_eq!(out.chain.len(), 4000);
    assert_eq!(out.chain[0].iter, 1000);

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["label"], "drag-5");
    assert_eq!(report["summary"]["length"], 4000);
    assert!(report["rejection_rates"]["outer"].is_number());
    assert!(report["rejection_rates"]["inner"].is_number());
}

#[test]
fn slow_preparations_follow_the_method() {
    for (method, n) in [(Method::Joint, None), (Method::Single, None), (Method::Drag, Some(12))] {
        let c = small(Problem::Test1, method, n);
        let r = run_experiment(&c).unwrap().report;
        let k = &r.kernel_stats;
        assert_eq!(r.eval_counts.slow_preparations, k.outer_proposals + 1, "{method:?}");
        if method == Method::Drag {
            assert_eq!(k.inner_proposals, k.outer_proposals * 11);
        }
    }
}

#[test]
fn slow_delay_enters_simulated_cost() {
    let mut c = small(Problem::Test1, Method::Drag, Some(3));
    c.iterations = 1000;
    c.slow_delay_us = 200;
    let r = run_experiment(&c).unwrap().report;
    let floor = 200e-6 * r.eval_counts.slow_preparations as f64;
    assert!(r.simulated_cost_secs >= floor * 0.999);
    assert!(r.wall_clock_secs >= floor * 0.999);
}

#[test]
fn figure1_scatter_has_the_right_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Figure1Config {
        out_dir: Some(dir.path().into()),
        ..Figure1Config::default()
    };
    let pts = emit_figure1(&cfg).unwrap();
    assert_eq!(pts.len(), 1000);
    let text = fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    assert_eq!(text.lines().count(), 1001);

    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let vx = pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n;
    let vy = pts.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n;
    let cov = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / n;
    assert!(cov / (vx * vy).sqrt() > 0.5);
    let exact = MarginalCdf::new().variance();
    assert!((vx - exact).abs() < 0.1 * exact, "var {vx} vs {exact}");
}

#[test]
fn acf_comparison_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let shared = SharedSettings {
        iterations: Some(4000),
        max_lag: Some(10),
        out_dir: Some(dir.path().into()),
        svg: true,
        ..SharedSettings::default()
    };
    let methods = standard_methods(Problem::Test2);
    let cmp = emit_acf_comparison(Problem::Test2, &methods, &shared).unwrap();
    assert_eq!(cmp.reports.len(), 6);
    assert_eq!(cmp.rows.len(), 6 * 11);
    for r in cmp.rows.iter().filter(|r| r.lag == 0) {
        assert_eq!(r.acf, 1.0);
    }
    let labels: Vec<_> = cmp.reports.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["joint", "single", "marginal", "drag-20", "drag-100", "drag-500"]);
    assert_eq!(fs::read_to_string(dir.path().join("acf.csv")).unwrap().lines().count(), 67);
    assert!(dir.path().join("summary.json").exists());
    assert!(fs::read_to_string(dir.path().join("acf.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn invalid_configs_name_the_field() {
    let mut c = ExperimentConfig::standard(Problem::Test1, Method::Drag, Some(0));
    let e = run_experiment(&c).unwrap_err();
    assert!(e.is_config() && e.to_string().contains('n'), "{e}");
    c.n = Some(10);
    c.iterations = 10;
    assert!(run_experiment(&c).unwrap_err().to_string().contains("iterations"));
    c.iterations = 2000;
    c.outer_sd = vec![-1.0];
    assert!(run_experiment(&c).unwrap_err().to_string().contains("outer_sd"));
    let mut d = ExperimentConfig::standard(Problem::Discrete, Method::Joint, None);
    d.iterations = 2000;
    assert!(run_experiment(&d).unwrap_err().is_config());
}

#[test]
fn partial_config_falls_back_to_standard_settings() {
    let c = ExperimentConfig::from_json_str(r#"{"problem":"test2","method":"drag","n":100,"seed":4}"#).unwrap();
    let mut expected = ExperimentConfig::standard(Problem::Test2, Method::Drag, Some(100));
    expected.seed = 4;
    assert_eq!(c, expected);

    let e = ExperimentConfig::from_json_str(r#"{"problem":"test1","method":"joint","sd":1}"#).unwrap_err();
    assert!(e.is_config() && e.to_string().contains("sd"), "{e}");
    assert!(ExperimentConfig::from_json_str(r#"{"method":"joint"}"#).unwrap_err().is_config());
    assert!(ExperimentConfig::from_json_str("[1]").unwrap_err().is_config());
}

#[test]
fn report_json_round_trips() {
    let out = run_experiment(&small(Problem::Test1, Method::Single, None)).unwrap();
    let text = serde_json::to_string(&out.report).unwrap();
    let back: dragmc::harness::ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, out.report);
    assert_eq!(back.config, small(Problem::Test1, Method::Single, None));
}
