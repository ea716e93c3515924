//! Run reports: per-sample records, the derived summary, and the two output
//! formats (aligned text and JSON Lines).

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::config::{Scenario, ScenarioConfig, Verdict};
use super::run::{
    LEVI_ORACLE_TOL, NIJENHUIS_ORACLE_TOL, PAIRING_TOL, RESIDUAL_TOL,
};
use crate::conormal::IntersectionCheck;
use crate::error::{Error, Result};
use crate::hypersurface::LeviClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub generator: String,
    pub config: ScenarioConfig,
    pub rho: String,
}

impl ScenarioEcho {
    pub fn new(sc: &Scenario) -> Self {
        ScenarioEcho {
            generator: concat!("acx-core ", env!("CARGO_PKG_VERSION")).to_string(),
            config: sc.config.clone(),
            rho: sc.rho.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub rho: f64,
    pub acs_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nijenhuis: Option<NijenhuisRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levi: Option<LeviRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conormal: Vec<ConormalRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NijenhuisRecord {
    /// Largest component `|N^a_{il}|`.
    pub norm: f64,
    pub oracle_error: f64,
    /// `|N(v, Jv)|` for a random `v`.
    pub identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviRecord {
    pub classification: LeviClass,
    pub eigenvalues: Vec<f64>,
    pub threshold: f64,
    pub contact_det: f64,
    pub contact_check: bool,
    pub contact_informational: bool,
    pub oracle_error: f64,
    pub invariance_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConormalRecord {
    pub lambda: f64,
    pub dim_intersection: usize,
    pub margin: f64,
    pub cosines: Vec<f64>,
    pub annihilation_residual: f64,
    pub basis_residual: f64,
    pub lagrangian_residual: f64,
    pub lift_square_residual: f64,
    pub lift_route_residual: f64,
    pub lift_projection_residual: f64,
    pub twisted_form_residual: f64,
    pub intersection: IntersectionCheck,
    /// `|omega(V, JJ W)|` for the lifts of `v = d_0`, `w = J d_0`.
    pub pairing: f64,
    /// `|lambda L(v)|`.
    pub pairing_expected: f64,
    pub pairing_error: f64,
    pub pairing_identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstMargin {
    pub margin: f64,
    pub sample: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_samples: usize,
    pub n_conormal: usize,
    pub acs_ok: bool,
    pub nijenhuis_norm_max: Option<f64>,
    pub levi_classification_histogram: BTreeMap<LeviClass, usize>,
    pub contact_check_all: Option<bool>,
    pub total_reality_verdict: Option<Verdict>,
    pub dim_intersection_histogram: BTreeMap<usize, usize>,
    pub worst_margins: Option<WorstMargin>,
    pub worst_residuals: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn bump(map: &mut BTreeMap<String, f64>, key: &str, v: f64) {
    let e = map.entry(key.to_string()).or_insert(0.0);
    *e = e.max(v);
}

impl Summary {
    pub fn from_records(cfg: &ScenarioConfig, records: &[SampleRecord]) -> Summary {
        let tol = &cfg.tolerances;
        let mut worst = BTreeMap::new();
        let mut nij_max: Option<f64> = None;
        let mut classes = BTreeMap::new();
        let mut contact_all: Option<bool> = None;
        let mut dims = BTreeMap::new();
        let mut margin: Option<WorstMargin> = None;
        let mut odd = 0usize;
        let mut non_injective = 0usize;
        let mut n_conormal = 0usize;
        let mut class_mismatch = 0usize;
        let mut levi_seen = false;

        for r in records {
            bump(&mut worst, "acs_residual", r.acs_residual);
            bump(&mut worst, "surface_residual", r.rho.abs());
            if let Some(n) = &r.nijenhuis {
                nij_max = Some(nij_max.unwrap_or(0.0).max(n.norm));
                bump(&mut worst, "nijenhuis_oracle_error", n.oracle_error);
                bump(&mut worst, "nijenhuis_identity_residual", n.identity_residual);
            }
            if let Some(l) = &r.levi {
                levi_seen = true;
                *classes.entry(l.classification).or_insert(0) += 1;
                contact_all = Some(contact_all.unwrap_or(true) && l.contact_check);
                bump(&mut worst, "levi_oracle_error", l.oracle_error);
                bump(&mut worst, "distribution_invariance_defect", l.invariance_defect);
                if cfg.expected_classification.is_some_and(|c| c != l.classification) {
                    class_mismatch += 1;
                }
            }
            for c in &r.conormal {
                n_conormal += 1;
                *dims.entry(c.dim_intersection).or_insert(0) += 1;
                if c.dim_intersection % 2 != 0 {
                    odd += 1;
                }
                if !c.intersection.injective {
                    non_injective += 1;
                }
                if margin.as_ref().is_none_or(|m| c.margin < m.margin) {
                    margin = Some(WorstMargin {
                        margin: c.margin,
                        sample: r.index,
                        lambda: c.lambda,
                    });
                }
                for (k, v) in [
                    ("annihilation_residual", c.annihilation_residual),
                    ("basis_residual", c.basis_residual),
                    ("lagrangian_residual", c.lagrangian_residual),
                    ("lift_square_residual", c.lift_square_residual),
                    ("lift_route_residual", c.lift_route_residual),
                    ("lift_projection_residual", c.lift_projection_residual),
                    ("twisted_form_residual", c.twisted_form_residual),
                    ("pairing_error", c.pairing_error),
                    ("pairing_identity_residual", c.pairing_identity_residual),
                    ("intersection_image_residual", c.intersection.drho_residual.max(c.intersection.theta_residual)),
                ] {
                    bump(&mut worst, k, v);
                }
            }
        }

        let verdict = if n_conormal == 0 {
            None
        } else if dims.keys().all(|&d| d == 0) {
            Some(Verdict::TotallyReal)
        } else if !dims.contains_key(&0) {
            Some(Verdict::NotTotallyReal)
        } else {
            Some(Verdict::Mixed)
        };

        let limit_for = |name: &str| match name {
            "acs_residual" => tol.tol_acs,
            "surface_residual" => tol.tol_surface,
            "nijenhuis_oracle_error" => NIJENHUIS_ORACLE_TOL,
            "levi_oracle_error" => LEVI_ORACLE_TOL,
            "pairing_error" => PAIRING_TOL,
            _ => RESIDUAL_TOL,
        };
        let mut checks: Vec<Check> = worst
            .iter()
            .map(|(name, &value)| {
                let limit = limit_for(name);
                Check {
                    name: name.clone(),
                    value,
                    limit,
                    pass: value <= limit,
                }
            })
            .collect();
        let mut count = |name: &str, n: usize| {
            checks.push(Check {
                name: name.to_string(),
                value: n as f64,
                limit: 0.0,
                pass: n == 0,
            })
        };
        if n_conormal > 0 {
            count("odd_intersection_count", odd);
            count("non_injective_count", non_injective);
        }
        if levi_seen && cfg.expected_classification.is_some() {
            count("classification_mismatch_count", class_mismatch);
        }
        if let (Some(expected), Some(got)) = (cfg.expected_verdict, verdict) {
            count("verdict_mismatch", usize::from(expected != got));
        }

        let acs_ok = worst.get("acs_residual").is_none_or(|&v| v <= tol.tol_acs);
        let passed = checks.iter().all(|c| c.pass);
        Summary {
            n_samples: records.len(),
            n_conormal,
            acs_ok,
            nijenhuis_norm_max: nij_max,
            levi_classification_histogram: classes,
            contact_check_all: contact_all,
            total_reality_verdict: verdict,
            dim_intersection_histogram: dims,
            worst_margins: margin,
            worst_residuals: worst,
            checks,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: ScenarioEcho,
    pub records: Vec<SampleRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Records,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Scenario(ScenarioEcho),
    Sample(SampleRecord),
    Summary(Summary),
}

/// Writes floats with 17 significant digits.
struct Fixed17;

impl serde_json::ser::Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }
}

fn write_line<W: Write>(out: &mut W, line: &Line) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *out, Fixed17);
    line.serialize(&mut ser).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

impl RunReport {
    pub fn emit<W: Write>(&self, format: Format, out: &mut W) -> io::Result<()> {
        match format {
            Format::Records => self.emit_records(out),
            Format::Human => self.emit_human(out),
        }
    }

    pub fn to_bytes(&self, format: Format) -> Vec<u8> {
        let mut buf = Vec::new();
        self.emit(format, &mut buf).expect("writing to a Vec");
        buf
    }

    fn emit_records<W: Write>(&self, out: &mut W) -> io::Result<()> {
        write_line(out, &Line::Scenario(self.scenario.clone()))?;
        for r in &self.records {
            write_line(out, &Line::Sample(r.clone()))?;
        }
        write_line(out, &Line::Summary(self.summary.clone()))
    }

    /// Reads back JSON Lines output.
    pub fn parse_records(text: &str) -> Result<RunReport> {
        let bad = |k: usize, e: &dyn std::fmt::Display| Error::Config(format!("record line {}: {e}", k + 1));
        let mut scenario = None;
        let mut summary = None;
        let mut records = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let mut value: serde_json::Value = serde_json::from_str(raw).map_err(|e| bad(k, &e))?;
            let kind = value
                .as_object_mut()
                .and_then(|o| o.remove("type"))
                .and_then(|t| t.as_str().map(str::to_owned))
                .ok_or_else(|| bad(k, &"missing `type`"))?;
            match kind.as_str() {
                "scenario" => scenario = Some(serde_json::from_value(value).map_err(|e| bad(k, &e))?),
                "sample" => records.push(serde_json::from_value(value).map_err(|e| bad(k, &e))?),
                "summary" => summary = Some(serde_json::from_value(value).map_err(|e| bad(k, &e))?),
                other => return Err(bad(k, &format!("unknown record type `{other}`"))),
            }
        }
        match (scenario, summary) {
            (Some(scenario), Some(summary)) => Ok(RunReport {
                scenario,
                records,
                summary,
            }),
            _ => Err(Error::Config("records need a scenario and a summary line".into())),
        }
    }

    fn emit_human<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let c = &self.scenario.config;
        let s = &self.summary;
        writeln!(out, "scenario   {} (dim {})", c.name, c.dim)?;
        writeln!(out, "rho        {}", self.scenario.rho)?;
        writeln!(
            out,
            "sampling   {} points x {} lambdas, seed {}",
            c.sampling.n_points, c.sampling.n_lambdas, c.sampling.seed
        )?;
        writeln!(out, "samples    {} surface, {} conormal", s.n_samples, s.n_conormal)?;
        writeln!(out, "acs        {}", if s.acs_ok { "ok" } else { "FAILED" })?;
        if let Some(n) = s.nijenhuis_norm_max {
            writeln!(out, "nijenhuis  max |N| = {n:.3e}")?;
        }
        for (class, count) in &s.levi_classification_histogram {
            writeln!(out, "levi       {class:?}: {count}")?;
        }
        if let Some(all) = s.contact_check_all {
            writeln!(out, "contact    {}", if all { "all samples" } else { "not at all samples" })?;
        }
        for (dim, count) in &s.dim_intersection_histogram {
            writeln!(out, "dim W^JW   {dim}: {count}")?;
        }
        if let Some(m) = &s.worst_margins {
            writeln!(
                out,
                "margin     min {:.6e} rad at sample {}, lambda {:.4}",
                m.margin, m.sample, m.lambda
            )?;
        }
        match (s.total_reality_verdict, c.expected_verdict) {
            (Some(v), Some(e)) => writeln!(out, "verdict    {v:?} (expected {e:?})")?,
            (Some(v), None) => writeln!(out, "verdict    {v:?}")?,
            _ => {}
        }
        writeln!(out, "checks")?;
        let width = s.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for ch in &s.checks {
            writeln!(
                out,
                "  {:<width$}  {:>10.3e} <= {:<8.1e}  {}",
                ch.name,
                ch.value,
                ch.limit,
                if ch.pass { "ok" } else { "FAIL" }
            )?;
        }
        writeln!(out, "result     {}", if s.passed { "PASS" } else { "FAIL" })
    }
}
