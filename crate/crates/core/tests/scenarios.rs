use acx_core::scenario::config::{StructureSpec, SurfaceSpec};
use acx_core::scenario::report::ScenarioEcho;
use acx_core::scenario::{
    builtin, run_scenario, Format, RunOptions, RunReport, Stages, Summary, Verdict,
};
use acx_core::{Error, Execution, LeviClass, Stage};

fn small(name: &str, n: usize) -> acx_core::scenario::Scenario {
    let mut cfg = builtin(name).unwrap();
    cfg.sampling.n_points = n;
    cfg.build().unwrap()
}

fn opts(stages: Stages, execution: Execution) -> RunOptions {
    RunOptions { stages, execution }
}

#[test]
fn records_are_byte_identical_across_runs_and_execution_modes() {
    let sc = small("sphere-perturbed-0.05", 20);
    let a = run_scenario(&sc, &opts(Stages::ALL, Execution::Parallel)).unwrap();
    let b = run_scenario(&sc, &opts(Stages::ALL, Execution::Parallel)).unwrap();
    let c = run_scenario(&sc, &opts(Stages::ALL, Execution::Sequential)).unwrap();
    let bytes = a.to_bytes(Format::Records);
    assert_eq!(bytes, b.to_bytes(Format::Records));
    assert_eq!(bytes, c.to_bytes(Format::Records));
    assert_eq!(a.to_bytes(Format::Human), c.to_bytes(Format::Human));
}

#[test]
fn seed_changes_the_samples() {
    let sc = small("sphere-std", 5);
    let mut other = sc.config.clone();
    other.sampling.seed += 1;
    let a = run_scenario(&sc, &RunOptions::default()).unwrap();
    let b = run_scenario(&other.build().unwrap(), &RunOptions::default()).unwrap();
    assert_ne!(a.records[0].x, b.records[0].x);
}

#[test]
fn records_round_trip_and_summary_is_recomputable() {
    for name in ["plane-flat", "sphere-perturbed-0.05", "indefinite-quadric"] {
        let sc = small(name, 8);
        let report = run_scenario(&sc, &RunOptions::default()).unwrap();
        let text = String::from_utf8(report.to_bytes(Format::Records)).unwrap();
        assert_eq!(text.lines().count(), 8 + 2);
        let back = RunReport::parse_records(&text).unwrap();
        assert_eq!(back, report);
        let recomputed = Summary::from_records(&back.scenario.config, &back.records);
        assert_eq!(recomputed, back.summary);
    }
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let sc = small("sphere-std", 1);
    let report = run_scenario(&sc, &opts(Stages::NIJENHUIS, Execution::Sequential)).unwrap();
    let text = String::from_utf8(report.to_bytes(Format::Records)).unwrap();
    let sample = text.lines().nth(1).unwrap();
    let x = &sample[sample.find("\"x\":[").unwrap() + 5..];
    let first = x.split(',').next().unwrap();
    let mantissa = first.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.replace('.', "").len(), 17, "{first}");
}

#[test]
fn empty_record_list_gives_summary_only() {
    let sc = small("sphere-std", 1);
    let summary = Summary::from_records(&sc.config, &[]);
    assert_eq!(summary.total_reality_verdict, None);
    assert!(summary.acs_ok);
    let report = RunReport {
        scenario: ScenarioEcho::new(&sc),
        records: vec![],
        summary,
    };
    let text = String::from_utf8(report.to_bytes(Format::Records)).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(RunReport::parse_records(&text).unwrap(), report);
    assert!(!report.to_bytes(Format::Human).is_empty());
}

#[test]
fn single_stage_runs() {
    let sc = small("sphere-perturbed-0.05", 4);
    let r = run_scenario(&sc, &opts(Stages::NIJENHUIS, Execution::Sequential)).unwrap();
    assert!(r.records.iter().all(|s| s.nijenhuis.is_some() && s.levi.is_none() && s.conormal.is_empty()));
    assert!(r.summary.nijenhuis_norm_max.unwrap() > 1e-3);
    assert_eq!(r.summary.total_reality_verdict, None);
    assert!(r.summary.passed);

    let r = run_scenario(&sc, &opts(Stages::LEVI, Execution::Sequential)).unwrap();
    assert!(r.records.iter().all(|s| s.nijenhuis.is_none() && s.levi.is_some()));
    assert_eq!(
        r.summary.levi_classification_histogram.get(&LeviClass::StronglyPseudoconvexPositive),
        Some(&4)
    );

    let r = run_scenario(&sc, &opts(Stages::CONORMAL, Execution::Sequential)).unwrap();
    assert!(r.records.iter().all(|s| s.levi.is_none() && s.conormal.len() == 12));
    assert_eq!(r.summary.total_reality_verdict, Some(Verdict::TotallyReal));
}

#[test]
fn lambda_grid_starts_with_fixed_values() {
    let sc = small("sphere-std", 2);
    let r = run_scenario(&sc, &opts(Stages::CONORMAL, Execution::Sequential)).unwrap();
    for s in &r.records {
        let l: Vec<f64> = s.conormal.iter().map(|c| c.lambda).collect();
        assert_eq!(&l[..4], &[1.0, -1.0, 0.5, -0.5]);
        assert!(l[4..].iter().all(|v| (0.1..=10.0).contains(&v.abs())));
    }
}

#[test]
fn degenerate_surface_names_stage_and_sample() {
    let mut cfg = builtin("sphere-std").unwrap();
    cfg.surface = SurfaceSpec::Custom {
        rho: "x1 - x1 + 1".into(),
    };
    let err = run_scenario(&cfg.build().unwrap(), &RunOptions::default()).unwrap_err();
    match &err {
        Error::Sample { stage, index, source } => {
            assert_eq!(*stage, Stage::Sampling);
            assert_eq!(*index, 0);
            assert!(matches!(**source, Error::DegenerateGradient { .. }));
        }
        other => panic!("unexpected {other}"),
    }
    assert!(!err.is_config());
    assert!(err.to_string().contains("sampling stage failed at sample 0"));
}

#[test]
fn invalid_structure_fails_the_acs_check() {
    let mut cfg = builtin("sphere-std").unwrap();
    cfg.sampling.n_points = 3;
    cfg.structure = StructureSpec::Custom {
        j: vec![
            vec!["0".into(), "-1".into(), "0".into(), "0".into()],
            vec!["1".into(), "0".into(), "0".into(), "0".into()],
            vec!["0".into(), "0".into(), "0".into(), "-1".into()],
            vec!["0".into(), "0".into(), "1".into(), "x1".into()],
        ],
    };
    let r = run_scenario(&cfg.build().unwrap(), &RunOptions::default()).unwrap();
    assert!(!r.summary.acs_ok);
    assert!(!r.summary.passed);
}

#[test]
fn expected_verdict_mismatch_fails() {
    let mut cfg = builtin("plane-flat").unwrap();
    cfg.sampling.n_points = 3;
    cfg.expected_verdict = Some(Verdict::TotallyReal);
    cfg.expected_classification = None;
    let r = run_scenario(&cfg.build().unwrap(), &RunOptions::default()).unwrap();
    let check = r.summary.checks.iter().find(|c| c.name == "verdict_mismatch").unwrap();
    assert!(!check.pass);
    assert!(!r.summary.passed);
}

#[test]
fn heisenberg_orientations() {
    // y2 = |z1|^2 written with the graph on the other side
    let mut cfg = builtin("heisenberg").unwrap();
    cfg.sampling.n_points = 10;
    cfg.surface = SurfaceSpec::Custom {
        rho: "x4 - x1^2 - x2^2".into(),
    };
    cfg.expected_classification = Some(LeviClass::StronglyPseudoconvexNegative);
    let r = run_scenario(&cfg.build().unwrap(), &RunOptions::default()).unwrap();
    assert_eq!(
        r.summary.levi_classification_histogram.get(&LeviClass::StronglyPseudoconvexNegative),
        Some(&10)
    );
    assert_eq!(r.summary.total_reality_verdict, Some(Verdict::TotallyReal));
    assert!(r.summary.passed);
}

#[test]
fn higher_dimensional_sphere() {
    let mut cfg = builtin("sphere-std").unwrap();
    cfg.dim = 6;
    cfg.sampling.n_points = 10;
    cfg.sampling.n_lambdas = 4;
    let r = run_scenario(&cfg.build().unwrap(), &RunOptions::default()).unwrap();
    assert!(r.summary.passed, "{:?}", r.summary.checks);
    for s in &r.records {
        let ev = &s.levi.as_ref().unwrap().eigenvalues;
        assert_eq!(ev.len(), 4);
        assert!(ev.iter().all(|l| (l - 4.0).abs() <= 1e-9));
    }
}
