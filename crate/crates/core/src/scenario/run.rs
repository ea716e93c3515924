//! Per-sample pipeline: sample, validate, Nijenhuis scan, Levi scan, conormal scan.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::Scenario;
use super::report::{
    ConormalRecord, LeviRecord, NijenhuisRecord, RunReport, SampleRecord, ScenarioEcho, Summary,
};
use crate::conormal::{
    conormal_lift, conormal_tangent_basis, intersection_check, lagrangian_residual, total_reality, twisted_pairing,
    ConormalPoint,
};
use crate::error::{Error, Result, Stage};
use crate::hypersurface::SurfaceGeometry;
use crate::lift::{g_j_at, omega_pair, jhat_pullback_omega_at, project, twisted_form_residual, LiftedStructure};
use crate::oracle;
use crate::parallel::{map_indexed, Execution};

/// Absolute limit for identities that hold exactly in exact arithmetic.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Relative limit for the finite-difference Nijenhuis oracle.
pub const NIJENHUIS_ORACLE_TOL: f64 = 1e-5;
/// Floor on `|N|` in the oracle's relative error.
pub const NIJENHUIS_ORACLE_FLOOR: f64 = 1e-4;
/// Relative limit for the finite-difference Levi form oracle.
pub const LEVI_ORACLE_TOL: f64 = 1e-6;
/// Relative limit for the `w = Jv` pairing certificate.
pub const PAIRING_TOL: f64 = 1e-6;

const MAX_ATTEMPTS: usize = 200;
const FIXED_LAMBDAS: [f64; 4] = [1.0, -1.0, 0.5, -0.5];
const LAMBDA_RANGE: (f64, f64) = (0.1, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub nijenhuis: bool,
    pub levi: bool,
    pub conormal: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        nijenhuis: true,
        levi: true,
        conormal: true,
    };
    pub const NIJENHUIS: Stages = Stages {
        nijenhuis: true,
        levi: false,
        conormal: false,
    };
    pub const LEVI: Stages = Stages {
        nijenhuis: false,
        levi: true,
        conormal: false,
    };
    pub const CONORMAL: Stages = Stages {
        nijenhuis: false,
        levi: false,
        conormal: true,
    };
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub stages: Stages,
    pub execution: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            stages: Stages::ALL,
            execution: Execution::default(),
        }
    }
}

/// Independent stream per sample so the scan order does not matter.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `{1, -1, 0.5, -0.5}` then log-uniform magnitudes in `[0.1, 10]` with random sign.
pub fn draw_lambdas(count: usize, rng: &mut impl Rng) -> Vec<f64> {
    let (lo, hi) = (LAMBDA_RANGE.0.ln(), LAMBDA_RANGE.1.ln());
    (0..count)
        .map(|k| match FIXED_LAMBDAS.get(k) {
            Some(&l) => l,
            None => {
                let mag = rng.random_range(lo..hi).exp();
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            }
        })
        .collect()
}

fn random_vector(dim: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0))
}

/// Uniform draw in the box, projected onto the surface; retried on failure.
pub fn draw_point(sc: &Scenario, rng: &mut impl Rng) -> Result<DVector<f64>> {
    let [lo, hi] = sc.config.sampling.bounds;
    let tol = sc.config.tolerances.tol_surface;
    let mut last = None;
    for _ in 0..MAX_ATTEMPTS {
        let x0: Vec<f64> = (0..sc.config.dim).map(|_| rng.random_range(lo..hi)).collect();
        let attempt = sc.surface.project_to_surface(&x0).and_then(|x| {
            let r = sc.surface.rho().eval(x.as_slice())?;
            if r.abs() > tol {
                return Err(Error::NoConvergence {
                    steps: 0,
                    residual: r.abs(),
                });
            }
            sc.acs.matrix_at(x.as_slice())?;
            Ok(x)
        });
        match attempt {
            Ok(x) => return Ok(x),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> Result<RunReport> {
    let n = sc.config.sampling.n_points;
    let results = map_indexed(n, opts.execution, |i| run_sample(sc, opts.stages, i));
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = Summary::from_records(&sc.config, &records);
    Ok(RunReport {
        scenario: ScenarioEcho::new(sc),
        records,
        summary,
    })
}

pub fn run_sample(sc: &Scenario, stages: Stages, index: usize) -> Result<SampleRecord> {
    let cfg = &sc.config;
    let tol = &cfg.tolerances;
    let mut rng = sample_rng(cfg.sampling.seed, index);
    let x = draw_point(sc, &mut rng).map_err(|e| e.at(Stage::Sampling, index))?;
    let lambdas = draw_lambdas(cfg.sampling.n_lambdas, &mut rng);
    let xs = x.as_slice();

    let validation = sc
        .acs
        .validate(xs, tol.tol_acs)
        .map_err(|e| e.at(Stage::Validate, index))?;
    let geom = SurfaceGeometry::at(&sc.surface, &sc.acs, xs).map_err(|e| e.at(Stage::Validate, index))?;
    let rho = geom.rho.value();
    if !validation.ok {
        return Ok(SampleRecord {
            index,
            x: x.iter().copied().collect(),
            rho,
            acs_residual: validation.residual,
            nijenhuis: None,
            levi: None,
            conormal: Vec::new(),
        });
    }

    let nijenhuis = if stages.nijenhuis {
        let v = random_vector(cfg.dim, &mut rng);
        Some(nijenhuis_record(sc, &geom, &v).map_err(|e| e.at(Stage::Nijenhuis, index))?)
    } else {
        None
    };

    let needs_frame = stages.levi || stages.conormal;
    let frame = if needs_frame {
        let stage = if stages.levi { Stage::Levi } else { Stage::Conormal };
        Some(
            geom.distribution_frame(tol.gradient_floor)
                .map_err(|e| e.at(stage, index))?,
        )
    } else {
        None
    };

    let levi = match (&frame, stages.levi) {
        (Some(frame), true) => {
            let report = geom.levi_report(frame, tol.tol_eig);
            let mut oracle_error = 0.0f64;
            for d in frame.d_basis.column_iter() {
                let d = d.clone_owned();
                let exact = geom.levi_bilinear(&d, &d);
                let fd = oracle::levi_form(sc.surface.rho(), sc.acs.field(), xs, &d)
                    .map_err(|e| e.at(Stage::Levi, index))?;
                oracle_error = oracle_error.max((exact - fd).abs() / exact.abs().max(1.0));
            }
            Some(LeviRecord {
                classification: report.classification,
                eigenvalues: report.eigenvalues,
                threshold: report.threshold,
                contact_det: report.contact_det,
                contact_check: report.contact_check,
                contact_informational: report.contact_informational,
                oracle_error,
                invariance_defect: frame.invariance_defect(geom.j()),
            })
        }
        _ => None,
    };

    let mut conormal = Vec::new();
    if let (Some(frame), true) = (&frame, stages.conormal) {
        for &lambda in &lambdas {
            conormal.push(conormal_record(sc, &geom, frame, lambda, &mut rng, index)?);
        }
    }

    Ok(SampleRecord {
        index,
        x: x.iter().copied().collect(),
        rho,
        acs_residual: validation.residual,
        nijenhuis,
        levi,
        conormal,
    })
}

fn nijenhuis_record(sc: &Scenario, geom: &SurfaceGeometry, v: &DVector<f64>) -> Result<NijenhuisRecord> {
    let nij = geom.nijenhuis();
    let fd = oracle::nijenhuis_tensor(sc.acs.field(), geom.x.as_slice())?;
    let exact = nij.to_dense();
    let mut diff = 0.0f64;
    let mut fd_max = 0.0f64;
    for (ea, fa) in exact.iter().zip(&fd) {
        for (ei, fi) in ea.iter().zip(fa) {
            for (e, f) in ei.iter().zip(fi) {
                diff = diff.max((e - f).abs());
                fd_max = fd_max.max(f.abs());
            }
        }
    }
    let jv = geom.j() * v;
    Ok(NijenhuisRecord {
        norm: nij.max_abs(),
        oracle_error: diff / fd_max.max(NIJENHUIS_ORACLE_FLOOR),
        identity_residual: nij.apply(v, &jv).amax(),
    })
}

fn conormal_record(
    sc: &Scenario,
    geom: &SurfaceGeometry,
    frame: &crate::hypersurface::DistributionFrame,
    lambda: f64,
    rng: &mut ChaCha8Rng,
    index: usize,
) -> Result<ConormalRecord> {
    let tol = &sc.config.tolerances;
    let n = geom.dim();
    let conormal_err = |e: Error| e.at(Stage::Conormal, index);
    let residual_err = |e: Error| e.at(Stage::Residuals, index);

    let cp = ConormalPoint::new(geom, lambda, tol.lambda_min).map_err(conormal_err)?;
    let basis = conormal_tangent_basis(geom, frame, &cp).map_err(conormal_err)?;
    let lifted = LiftedStructure::coordinates_at(&geom.structure, &cp.alpha).map_err(conormal_err)?;
    let tr = total_reality(&lifted, &basis, lambda, tol.tol_angle);
    let intersection = intersection_check(geom, &tr.dhat_basis);

    let definitional =
        LiftedStructure::definitional_at(&geom.structure, &cp.alpha).map_err(residual_err)?;
    let route = (lifted.matrix() - definitional.matrix()).amax();
    let square = lifted.square_residual().max(definitional.square_residual());

    let v = random_vector(2 * n, rng);
    let w = random_vector(2 * n, rng);
    let mut projection = 0.0f64;
    for l in [&lifted, &definitional] {
        let r = project(&l.apply(&v)) - geom.j() * project(&v);
        projection = projection.max(r.amax());
    }

    let pullback = jhat_pullback_omega_at(&geom.structure, &cp.alpha).map_err(residual_err)?;
    let g = g_j_at(&geom.structure, &cp.alpha).map_err(residual_err)?;
    let cols = basis.columns();
    let mut twisted = twisted_form_residual(&lifted, &pullback, &g, &v, &w);
    for a in &cols {
        for b in &cols {
            twisted = twisted.max(twisted_form_residual(&lifted, &pullback, &g, a, b));
        }
    }

    let d0 = frame.d_basis.column(0).clone_owned();
    let jd0 = geom.j() * &d0;
    let lifted_pair = |a: &DVector<f64>, b: &DVector<f64>| {
        omega_pair(&conormal_lift(geom, &cp, a), &lifted.apply(&conormal_lift(geom, &cp, b)))
    };
    let pairing = lifted_pair(&d0, &jd0).abs();
    let pairing_expected = (lambda * geom.levi_bilinear(&d0, &d0)).abs();
    let pairing_error = (pairing - pairing_expected).abs() / pairing_expected.max(1.0);
    let mut pairing_identity = 0.0f64;
    let dcols: Vec<DVector<f64>> = frame.d_basis.column_iter().map(|c| c.clone_owned()).collect();
    for a in &dcols {
        for b in dcols.iter().chain(std::iter::once(&jd0)) {
            let formula = twisted_pairing(geom, &cp, a, b).map_err(residual_err)?;
            pairing_identity = pairing_identity.max((lifted_pair(a, b) - formula).abs());
        }
    }

    Ok(ConormalRecord {
        lambda,
        dim_intersection: tr.dim_intersection,
        margin: tr.margin,
        cosines: tr.cosines,
        annihilation_residual: cp.annihilation_residual(frame),
        basis_residual: basis.constraint_residual(geom, &cp),
        lagrangian_residual: lagrangian_residual(&basis.b),
        lift_square_residual: square,
        lift_route_residual: route,
        lift_projection_residual: projection,
        twisted_form_residual: twisted,
        intersection,
        pairing,
        pairing_expected,
        pairing_error,
        pairing_identity_residual: pairing_identity,
    })
}
