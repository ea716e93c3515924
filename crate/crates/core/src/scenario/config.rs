//! Scenario files: TOML documents with a fixed schema. Unknown keys are errors.
//!
//! ```toml
//! name = "sphere-std"
//! dim = 4
//! expected_verdict = "TotallyReal"                          # optional
//! expected_classification = "StronglyPseudoconvexPositive"  # optional
//!
//! [structure]
//! kind = "standard"            # or "conjugated" (epsilon, s) or "custom" (j)
//!
//! [surface]
//! kind = "sphere"              # sphere (radius), ellipsoid (semi_axes), plane,
//! radius = 1.0                 # heisenberg, indefinite-quadric, custom (rho)
//!
//! [sampling]
//! box = [-1.5, 1.5]
//! n_points = 250
//! n_lambdas = 12
//! seed = 1
//!
//! [tolerances]                 # every key optional
//! tol_acs = 1e-10
//! ```

use serde::{Deserialize, Serialize};

use crate::acs::{AlmostComplexStructure, TOL_ACS};
use crate::conormal::{LAMBDA_MIN, TOL_ANGLE};
use crate::error::{Error, Result};
use crate::expr::{parse, MatrixField};
use crate::hypersurface::{Hypersurface, LeviClass, GRADIENT_FLOOR, TOL_EIG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    TotallyReal,
    NotTotallyReal,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_classification: Option<LeviClass>,
    pub structure: StructureSpec,
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StructureSpec {
    Standard,
    /// `(Id + eps S) J_std (Id - eps S)`; a conjugation when `S^2 = 0`.
    Conjugated { epsilon: f64, s: Vec<Vec<String>> },
    Custom { j: Vec<Vec<String>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Sphere {
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipsoid { semi_axes: Vec<f64> },
    /// `rho = x_{2n}`.
    Plane,
    /// `rho = sum_{k<n} |z_k|^2 - y_n`.
    Heisenberg,
    /// `rho = y_n + sum_{k<n} s_k |z_k|^2` with alternating signs `s_k`.
    IndefiniteQuadric,
    Custom { rho: String },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSpec {
    #[serde(rename = "box")]
    pub bounds: [f64; 2],
    pub n_points: usize,
    pub n_lambdas: usize,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            bounds: [-1.5, 1.5],
            n_points: 100,
            n_lambdas: 12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol_acs: f64,
    pub tol_eig: f64,
    pub tol_angle: f64,
    pub tol_surface: f64,
    pub gradient_floor: f64,
    pub lambda_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_acs: TOL_ACS,
            tol_eig: TOL_EIG,
            tol_angle: TOL_ANGLE,
            tol_surface: 1e-10,
            gradient_floor: GRADIENT_FLOOR,
            lambda_min: LAMBDA_MIN,
        }
    }
}

/// A validated scenario with its structure and surface built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub acs: AlmostComplexStructure,
    pub surface: Hypersurface,
    /// Source text of `rho`.
    pub rho: String,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn build(&self) -> Result<Scenario> {
        self.check()?;
        let acs = self.structure.build(self.dim)?;
        let rho = self.surface.rho_source(self.dim)?;
        let expr = parse(&rho, self.dim)?;
        Ok(Scenario {
            config: self.clone(),
            acs,
            surface: Hypersurface::new(expr, self.tolerances.gradient_floor),
            rho,
        })
    }

    fn check(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.dim < 4 || self.dim % 2 != 0 {
            return cfg(format!("dim must be even and at least 4, got {}", self.dim));
        }
        let s = &self.sampling;
        if s.n_points == 0 {
            return cfg("sampling.n_points must be at least 1".into());
        }
        if s.n_lambdas == 0 {
            return cfg("sampling.n_lambdas must be at least 1".into());
        }
        if !(s.bounds[0] < s.bounds[1]) || !s.bounds.iter().all(|b| b.is_finite()) {
            return cfg(format!("sampling.box must be [lo, hi] with lo < hi, got {:?}", s.bounds));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_acs", t.tol_acs),
            ("tol_eig", t.tol_eig),
            ("tol_angle", t.tol_angle),
            ("tol_surface", t.tol_surface),
            ("gradient_floor", t.gradient_floor),
            ("lambda_min", t.lambda_min),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return cfg(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

impl StructureSpec {
    pub fn build(&self, dim: usize) -> Result<AlmostComplexStructure> {
        let check_dim = |f: &MatrixField| {
            if f.dim() != dim {
                Err(Error::Config(format!(
                    "structure matrix is {}x{}, scenario dim is {dim}",
                    f.dim(),
                    f.dim()
                )))
            } else {
                Ok(())
            }
        };
        match self {
            StructureSpec::Standard => AlmostComplexStructure::standard(dim),
            StructureSpec::Conjugated { epsilon, s } => {
                if !epsilon.is_finite() {
                    return Err(Error::Config("structure.epsilon must be finite".into()));
                }
                let s = matrix_field(s)?;
                check_dim(&s)?;
                AlmostComplexStructure::conjugated(*epsilon, &s)
            }
            StructureSpec::Custom { j } => {
                let f = matrix_field(j)?;
                check_dim(&f)?;
                Ok(AlmostComplexStructure::new(f))
            }
        }
    }
}

fn matrix_field(rows: &[Vec<String>]) -> Result<MatrixField> {
    MatrixField::parse_rows(rows).map_err(|e| match e {
        Error::Dimension(m) => Error::Config(m),
        other => other,
    })
}

impl SurfaceSpec {
    /// Defining function as expression source over `dim` variables.
    pub fn rho_source(&self, dim: usize) -> Result<String> {
        let n = dim / 2;
        let sq = |k: usize| format!("x{k}^2");
        let pair = |k: usize| format!("{} + {}", sq(2 * k - 1), sq(2 * k));
        Ok(match self {
            SurfaceSpec::Sphere { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Config(format!("surface.radius must be positive, got {radius}")));
                }
                let terms: Vec<String> = (1..=dim).map(sq).collect();
                format!("{} - {:?}", terms.join(" + "), radius * radius)
            }
            SurfaceSpec::Ellipsoid { semi_axes } => {
                if semi_axes.len() != dim {
                    return Err(Error::Config(format!(
                        "surface.semi_axes needs {dim} entries, got {}",
                        semi_axes.len()
                    )));
                }
                if let Some(a) = semi_axes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
                    return Err(Error::Config(format!("semi-axis must be positive, got {a}")));
                }
                let terms: Vec<String> = semi_axes
                    .iter()
                    .enumerate()
                    .map(|(k, a)| format!("x{}^2 / {:?}", k + 1, a * a))
                    .collect();
                format!("{} - 1", terms.join(" + "))
            }
            SurfaceSpec::Plane => format!("x{dim}"),
            SurfaceSpec::Heisenberg => {
                let terms: Vec<String> = (1..n).map(pair).collect();
                format!("{} - x{dim}", terms.join(" + "))
            }
            SurfaceSpec::IndefiniteQuadric => {
                if n < 3 {
                    return Err(Error::Config(
                        "indefinite-quadric needs dim >= 6 for an indefinite Levi form".into(),
                    ));
                }
                let mut s = format!("x{dim}");
                for k in 1..n {
                    let sign = if k % 2 == 1 { '+' } else { '-' };
                    s.push_str(&format!(" {sign} x{}^2 {sign} x{}^2", 2 * k - 1, 2 * k));
                }
                s
            }
            SurfaceSpec::Custom { rho } => rho.clone(),
        })
    }
}
