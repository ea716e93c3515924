//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;

use acx_core::conormal::{corrupted_basis, lagrangian_residual, ConormalPoint, LAMBDA_MIN};
use acx_core::lift::project;
use acx_core::scenario::run::{draw_point, sample_rng};
use acx_core::scenario::{builtin, builtins, run_scenario, Format, RunOptions, RunReport, Stages, Verdict};
use acx_core::{CotangentPoint, Hypersurface, LeviClass, LiftedStructure, SurfaceGeometry};
use nalgebra::DVector;
use rand::Rng;

/// Smallest principal-angle margins seen on the builtin runs, kept as floors.
const MARGIN_FLOOR_SPHERE_STD: f64 = 0.4636;
const MARGIN_FLOOR_SPHERE_PERTURBED: f64 = 0.4510;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn worst(r: &RunReport, key: &str) -> f64 {
    r.summary.worst_residuals.get(key).copied().unwrap_or(0.0)
}

fn all_dims(r: &RunReport, dim: usize) -> bool {
    r.summary.dim_intersection_histogram.keys().all(|&d| d == dim) && r.summary.n_conormal > 0
}

fn only_class(r: &RunReport, class: LeviClass) -> bool {
    r.summary.levi_classification_histogram.len() == 1
        && r.summary.levi_classification_histogram.contains_key(&class)
}

fn min_margin(r: &RunReport) -> f64 {
    r.summary.worst_margins.as_ref().map_or(f64::NAN, |m| m.margin)
}

fn lift_correctness() -> Outcome {
    let sc = builtin("sphere-perturbed-0.05").unwrap().build().unwrap();
    let (mut square, mut route, mut proj) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..200 {
        let mut rng = sample_rng(2024, i);
        let x = DVector::from_fn(4, |_, _| rng.random_range(-1.5..1.5));
        let p = DVector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
        let v = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        let jet = sc.acs.jet_at(x.as_slice()).unwrap();
        let alpha = CotangentPoint::new(x, p).unwrap();
        let a = LiftedStructure::coordinates_at(&jet, &alpha).unwrap();
        let b = LiftedStructure::definitional_at(&jet, &alpha).unwrap();
        square = square.max(a.square_residual()).max(b.square_residual());
        route = route.max((a.matrix() - b.matrix()).amax());
        for l in [&a, &b] {
            proj = proj.max((project(&l.apply(&v)) - &jet.value * project(&v)).amax());
        }
    }
    outcome(
        square <= 1e-9 && route <= 1e-9 && proj <= 1e-9,
        format!("200 cotangent samples: |JJ^2+Id| {square:.1e}, routes {route:.1e}, projection {proj:.1e}"),
    )
}

fn nijenhuis_oracle(runs: &BTreeMap<String, RunReport>) -> Outcome {
    let mut cfg = builtin("sphere-perturbed-0.05").unwrap();
    cfg.sampling.n_points = 100;
    let opts = RunOptions {
        stages: Stages::NIJENHUIS,
        ..RunOptions::default()
    };
    let r = run_scenario(&cfg.build().unwrap(), &opts).unwrap();
    let rel = worst(&r, "nijenhuis_oracle_error");
    let integrable = ["sphere-std", "plane-flat", "heisenberg", "indefinite-quadric", "sphere-sheared", "ellipsoid-std"];
    let n_int = integrable
        .iter()
        .map(|n| runs[*n].summary.nijenhuis_norm_max.unwrap())
        .fold(0.0f64, f64::max);
    outcome(
        rel <= 1e-5 && n_int <= 1e-9,
        format!("perturbed relative error {rel:.1e} over 100 samples; integrable builtins max |N| {n_int:.1e}"),
    )
}

fn strongly_pseudoconvex_witness(runs: &BTreeMap<String, RunReport>) -> Outcome {
    let a = &runs["sphere-std"];
    let b = &runs["sphere-perturbed-0.05"];
    let pass = all_dims(a, 0)
        && all_dims(b, 0)
        && a.summary.n_conormal == 3000
        && b.summary.n_conormal == 3000
        && min_margin(a) >= MARGIN_FLOOR_SPHERE_STD
        && min_margin(b) >= MARGIN_FLOOR_SPHERE_PERTURBED;
    outcome(
        pass,
        format!(
            "dim 0 at {}+{} conormal samples; min margin {:.6} (floor {MARGIN_FLOOR_SPHERE_STD}), {:.6} (floor {MARGIN_FLOOR_SPHERE_PERTURBED})",
            a.summary.n_conormal,
            b.summary.n_conormal,
            min_margin(a),
            min_margin(b)
        ),
    )
}

fn contact_witness(runs: &BTreeMap<String, RunReport>) -> Outcome {
    let r = &runs["ellipsoid-std"];
    let pass = all_dims(r, 0)
        && r.summary.contact_check_all == Some(true)
        && r.summary.nijenhuis_norm_max == Some(0.0);
    outcome(
        pass,
        format!("ellipsoid-std: dim 0 at {} samples, contact at every point, min margin {:.4}", r.summary.n_conormal, min_margin(r)),
    )
}

fn falsifiability(runs: &BTreeMap<String, RunReport>) -> Outcome {
    let r = &runs["plane-flat"];
    let plane = all_dims(r, 2) && only_class(r, LeviClass::Degenerate);

    let sc = builtin("sphere-std").unwrap().build().unwrap();
    let mut min_corrupt = f64::INFINITY;
    for i in 0..50 {
        let mut rng = sample_rng(7, i);
        let x = draw_point(&sc, &mut rng).unwrap();
        let geom = SurfaceGeometry::at(&sc.surface, &sc.acs, x.as_slice()).unwrap();
        let frame = geom.distribution_frame(1e-3).unwrap();
        // large |lambda| stretches the fiber and shrinks the normalized defect
        let lambda = [1.0, -1.0, 0.5, -0.5][i % 4];
        let cp = ConormalPoint::new(&geom, lambda, LAMBDA_MIN).unwrap();
        min_corrupt = min_corrupt.min(lagrangian_residual(&corrupted_basis(&geom, &frame, &cp)));
    }
    outcome(
        plane && min_corrupt > 0.1,
        format!(
            "plane-flat dim 2 at {} samples, Degenerate everywhere; corrupted basis residual >= {min_corrupt:.3} for |lambda| <= 1",
            r.summary.n_conormal
        ),
    )
}

fn lagrangian(runs: &BTreeMap<String, RunReport>) -> Outcome {
    let w = runs.values().map(|r| worst(r, "lagrangian_residual")).fold(0.0f64, f64::max);
    let n: usize = runs.values().map(|r| r.summary.n_conormal).sum();
    outcome(w <= 1e-9, format!("max residual {w:.1e} over {n} conormal samples in {} scenarios", runs.len()))
}

fn identities(runs: &BTreeMap<String, RunReport>) -> Outcome {
    let twisted = runs.values().map(|r| worst(r, "twisted_form_residual")).fold(0.0f64, f64::max);
    let mut pairing = 0.0f64;
    let mut oracle = 0.0f64;
    for r in runs.values() {
        for (class, _) in &r.summary.levi_classification_histogram {
            if class.is_strongly_pseudoconvex() {
                pairing = pairing.max(worst(r, "pairing_error"));
                oracle = oracle.max(worst(r, "levi_oracle_error"));
            }
        }
    }
    let min_pairs = runs.values().map(|r| r.summary.n_conormal).min().unwrap_or(0);
    outcome(
        twisted <= 1e-9 && pairing <= 1e-6 && oracle <= 1e-6 && min_pairs >= 100,
        format!("twisted form {twisted:.1e} (>= {min_pairs} random pairs per scenario); w = Jv certificate {pairing:.1e}; Levi oracle {oracle:.1e}"),
    )
}

fn levi_classification(runs: &BTreeMap<String, RunReport>) -> Outcome {
    let sphere = &runs["sphere-std"];
    let eig = sphere
        .records
        .iter()
        .flat_map(|s| s.levi.as_ref().unwrap().eigenvalues.iter())
        .fold(0.0f64, |m, l| m.max((l - 4.0).abs()));
    let classes = only_class(sphere, LeviClass::StronglyPseudoconvexPositive)
        && only_class(&runs["heisenberg"], LeviClass::StronglyPseudoconvexPositive)
        && only_class(&runs["indefinite-quadric"], LeviClass::NonDegenerateIndefinite);

    let mut flips = 0usize;
    let mut checked = 0usize;
    for name in ["sphere-std", "heisenberg", "sphere-perturbed-0.05", "ellipsoid-std", "indefinite-quadric"] {
        let sc = builtin(name).unwrap().build().unwrap();
        let neg: Hypersurface = sc.surface.rescaled(-1.0).unwrap();
        for s in &runs[name].records {
            let before = s.levi.as_ref().unwrap().classification;
            let geom = SurfaceGeometry::at(&neg, &sc.acs, &s.x).unwrap();
            let frame = geom.distribution_frame(1e-3).unwrap();
            let after = geom.levi_report(&frame, sc.config.tolerances.tol_eig).classification;
            checked += 1;
            if after == before.flipped() {
                flips += 1;
            }
        }
    }
    outcome(
        eig <= 1e-9 && classes && flips == checked,
        format!("sphere eigenvalues 4 within {eig:.1e}; heisenberg Positive, indefinite-quadric Indefinite; rho -> -rho flips at {flips}/{checked}"),
    )
}

fn determinism(runs: &BTreeMap<String, RunReport>) -> Outcome {
    let sc = builtin("sphere-perturbed-0.05").unwrap().build().unwrap();
    let again = run_scenario(&sc, &RunOptions::default()).unwrap().to_bytes(Format::Records);
    let first = runs["sphere-perturbed-0.05"].to_bytes(Format::Records);
    outcome(first == again, format!("two runs of sphere-perturbed-0.05: {} bytes each, identical: {}", first.len(), first == again))
}

fn main() -> ExitCode {
    let mut runs = BTreeMap::new();
    for name in builtins::names() {
        let sc = builtin(name).unwrap().build().unwrap();
        let r = run_scenario(&sc, &RunOptions::default()).unwrap();
        let expected = sc.config.expected_verdict;
        assert!(
            expected.is_none() || r.summary.total_reality_verdict == expected,
            "{name}: verdict {:?}",
            r.summary.total_reality_verdict
        );
        runs.insert(name.to_string(), r);
    }
    assert_eq!(runs["plane-flat"].summary.total_reality_verdict, Some(Verdict::NotTotallyReal));

    let criteria: [(&str, Box<dyn Fn() -> Outcome>); 9] = [
        ("lift correctness", Box::new(lift_correctness)),
        ("nijenhuis oracle equivalence", Box::new(|| nijenhuis_oracle(&runs))),
        ("strongly pseudoconvex spheres are totally real", Box::new(|| strongly_pseudoconvex_witness(&runs))),
        ("integrable contact ellipsoid is totally real", Box::new(|| contact_witness(&runs))),
        ("falsifiability controls", Box::new(|| falsifiability(&runs))),
        ("conormal bundles are Lagrangian", Box::new(|| lagrangian(&runs))),
        ("twisted form identity and w = Jv certificate", Box::new(|| identities(&runs))),
        ("Levi classification", Box::new(|| levi_classification(&runs))),
        ("byte determinism", Box::new(|| determinism(&runs))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
