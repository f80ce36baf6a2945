//! TOML run configuration for custom problems.
//!
//! ```toml
//! n = [10, 20, 40]          # strictly increasing
//! output = "out"            # default "out"
//! seed = 0
//! timings = false
//!
//! [domain]
//! lo = [-1.0, -1.0, -1.0]
//! hi = [1.0, 1.0, 1.0]
//!
//! [interface]               # kind: plane | sphere | orthocircle | cloud
//! kind = "sphere"
//! center = [0.0, 0.0, 0.0]
//! radius = 0.5
//!
//! [coefficients]
//! beta_minus = 1.0
//! beta_plus = 10.0
//!
//! [scheme]
//! epsilon = -1              # -1, 0 or 1
//! sigma0 = 10.0
//! quadrature = "plane-cut"  # or "levelset-sign"
//! strict = true
//!
//! [solution]                # kind: level-set-over-beta | sphere-cosine | radial | none
//! kind = "radial"
//! center = [0.0, 0.0, 0.0]
//! radius = 0.5
//!
//! [boundary]                # kind: exact | sines | constant
//! kind = "exact"
//!
//! [solver]
//! tol = 1e-10
//! max_iter = 20000
//! ```
//!
//! Plane interfaces are `normal . x = offset`; cloud paths are relative to
//! the config file. With `solution.kind = "none"` the source is the constant
//! `solution.source` and errors are measured against the finest mesh.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::assembly::QuadratureMode;
use crate::error::{Error, Result};
use crate::geometry::ClassifyOptions;
use crate::ife::Betas;
use crate::levelset::{LevelSet, OrthocircleLevelSet, PlaneLevelSet, SphereLevelSet};
use crate::mesh::BoxDomain;
use crate::pointcloud::load_cloud;
use crate::problems::{
    level_set_over_beta, radial, sines, sphere_cosine, ExactFn, Interface, Problem, SourceFn,
};
use crate::runner::RunSettings;
use crate::solver::SolverOptions;
use crate::Point;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Vec<usize>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub timings: bool,
    pub domain: DomainSpec,
    pub interface: InterfaceSpec,
    #[serde(default)]
    pub coefficients: CoefficientSpec,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub solution: SolutionSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InterfaceSpec {
    Plane {
        normal: [f64; 3],
        offset: f64,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Orthocircle {
        #[serde(default = "default_thickness")]
        thickness: f64,
    },
    Cloud {
        path: PathBuf,
    },
}

fn default_thickness() -> f64 {
    0.075
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub beta_minus: f64,
    pub beta_plus: f64,
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        Self {
            beta_minus: 1.0,
            beta_plus: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_sigma0")]
    pub sigma0: f64,
    #[serde(default = "default_quadrature")]
    pub quadrature: String,
    #[serde(default = "default_true")]
    pub strict: bool,
}

fn default_epsilon() -> f64 {
    -1.0
}
fn default_sigma0() -> f64 {
    10.0
}
fn default_quadrature() -> String {
    "plane-cut".into()
}
fn default_true() -> bool {
    true
}

impl Default for SchemeSpec {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            sigma0: default_sigma0(),
            quadrature: default_quadrature(),
            strict: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolutionSpec {
    /// `u = ls / beta`; needs an analytic interface.
    #[default]
    LevelSetOverBeta,
    SphereCosine {
        center: [f64; 3],
        radius: f64,
    },
    Radial {
        center: [f64; 3],
        radius: f64,
    },
    None {
        #[serde(default)]
        source: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySpec {
    #[default]
    Exact,
    Sines,
    Constant {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}
fn default_max_iter() -> usize {
    SolverOptions::default().max_iter
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

/// Everything a config resolves to.
pub struct ResolvedRun {
    pub problem: Problem,
    pub sizes: Vec<usize>,
    pub settings: RunSettings,
    pub output: PathBuf,
    pub seed: u64,
}

fn point(a: [f64; 3]) -> Point {
    Point::new(a[0], a[1], a[2])
}

impl RunConfig {
    /// Parses TOML text; `path` is only used in messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Checks value ranges; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() {
            return Err(Error::config("n", "at least one mesh size is required"));
        }
        if self.n[0] == 0 || self.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "n",
                format!("must be positive and strictly increasing, got {:?}", self.n),
            ));
        }
        for d in 0..3 {
            if !(self.domain.lo[d] < self.domain.hi[d]) {
                return Err(Error::config("domain", "need lo < hi in every coordinate"));
            }
        }
        let c = &self.coefficients;
        if !(c.beta_minus > 0.0 && c.beta_minus.is_finite()) {
            return Err(Error::config("coefficients.beta_minus", "must be positive"));
        }
        if !(c.beta_plus > 0.0 && c.beta_plus.is_finite()) {
            return Err(Error::config("coefficients.beta_plus", "must be positive"));
        }
        let s = &self.scheme;
        if ![-1.0, 0.0, 1.0].contains(&s.epsilon) {
            return Err(Error::config(
                "scheme.epsilon",
                format!("must be -1, 0 or 1, got {}", s.epsilon),
            ));
        }
        if !(s.sigma0 > 0.0 && s.sigma0.is_finite()) {
            return Err(Error::config("scheme.sigma0", "must be positive"));
        }
        if s.quadrature.parse::<QuadratureMode>().is_err() {
            return Err(Error::config(
                "scheme.quadrature",
                format!(
                    "unknown mode `{}` (plane-cut or levelset-sign)",
                    s.quadrature
                ),
            ));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(Error::config("solver.tol", "must be in (0, 1)"));
        }
        if self.solver.max_iter == 0 {
            return Err(Error::config("solver.max_iter", "must be positive"));
        }
        match &self.interface {
            InterfaceSpec::Plane { normal, .. } if point(*normal).norm() == 0.0 => {
                return Err(Error::config("interface.normal", "must be nonzero"));
            }
            InterfaceSpec::Sphere { radius, .. } if !(*radius > 0.0) => {
                return Err(Error::config("interface.radius", "must be positive"));
            }
            InterfaceSpec::Orthocircle { thickness } if !(*thickness > 0.0) => {
                return Err(Error::config("interface.thickness", "must be positive"));
            }
            _ => {}
        }
        match &self.solution {
            SolutionSpec::LevelSetOverBeta
                if matches!(self.interface, InterfaceSpec::Cloud { .. }) =>
            {
                return Err(Error::config(
                    "solution.kind",
                    "level-set-over-beta needs an analytic interface",
                ));
            }
            SolutionSpec::SphereCosine { radius, .. } | SolutionSpec::Radial { radius, .. }
                if !(*radius > 0.0) =>
            {
                return Err(Error::config("solution.radius", "must be positive"));
            }
            SolutionSpec::None { .. } if self.boundary == BoundarySpec::Exact => {
                return Err(Error::config(
                    "boundary.kind",
                    "`exact` needs an exact solution",
                ));
            }
            SolutionSpec::None { .. } if self.n.len() < 2 => {
                return Err(Error::config(
                    "n",
                    "without an exact solution at least two sizes are needed",
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Builds the problem and run settings. `base` is the directory that
    /// relative cloud paths are resolved against.
    pub fn resolve(&self, base: &Path) -> Result<ResolvedRun> {
        self.validate()?;
        let domain = BoxDomain::new(point(self.domain.lo), point(self.domain.hi))
            .map_err(|e| Error::config("domain", e.to_string()))?;
        let betas = Betas::new(self.coefficients.beta_minus, self.coefficients.beta_plus)?;
        let (interface, analytic): (Interface, Option<Arc<dyn LevelSet>>) = match &self.interface {
            InterfaceSpec::Plane { normal, offset } => {
                let ls: Arc<dyn LevelSet> = Arc::new(PlaneLevelSet::new(point(*normal), *offset));
                (Interface::Analytic(ls.clone()), Some(ls))
            }
            InterfaceSpec::Sphere { center, radius } => {
                let ls: Arc<dyn LevelSet> = Arc::new(SphereLevelSet {
                    center: point(*center),
                    radius: *radius,
                });
                (Interface::Analytic(ls.clone()), Some(ls))
            }
            InterfaceSpec::Orthocircle { thickness } => {
                let ls: Arc<dyn LevelSet> = Arc::new(OrthocircleLevelSet {
                    thickness: *thickness,
                });
                (Interface::Analytic(ls.clone()), Some(ls))
            }
            InterfaceSpec::Cloud { path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                let cloud = load_cloud(&full)?;
                cloud
                    .check_inside(&domain)
                    .map_err(|e| Error::config("interface.path", e.to_string()))?;
                (Interface::Cloud(Arc::new(cloud)), None)
            }
        };
        let (source, exact): (SourceFn, Option<ExactFn>) = match &self.solution {
            SolutionSpec::LevelSetOverBeta => {
                let ls = analytic.clone().expect("validated");
                let (f, u) = level_set_over_beta(ls, betas)
                    .map_err(|e| Error::config("solution.kind", e.to_string()))?;
                (f, Some(u))
            }
            SolutionSpec::SphereCosine { center, radius } => {
                let (f, u) = sphere_cosine(point(*center), *radius, betas);
                (f, Some(u))
            }
            SolutionSpec::Radial { center, radius } => {
                let (f, u) = radial(point(*center), *radius, betas);
                (f, Some(u))
            }
            SolutionSpec::None { source } => {
                let c = *source;
                (Arc::new(move |_: &Point, _| c) as SourceFn, None)
            }
        };
        let boundary: crate::problems::BoundaryFn = match &self.boundary {
            BoundarySpec::Exact => {
                let u = exact.clone().expect("validated");
                match analytic {
                    Some(ls) => Arc::new(move |x: &Point| {
                        let side = if ls.value(x) < 0.0 {
                            crate::geometry::Side::Minus
                        } else {
                            crate::geometry::Side::Plus
                        };
                        u(x, side).0
                    }),
                    // the cloud is a closed surface away from the boundary
                    None => Arc::new(move |x: &Point| u(x, crate::geometry::Side::Plus).0),
                }
            }
            BoundarySpec::Sines => Arc::new(sines),
            BoundarySpec::Constant { value } => {
                let v = *value;
                Arc::new(move |_: &Point| v)
            }
        };
        let settings = RunSettings {
            epsilon: self.scheme.epsilon,
            sigma0: self.scheme.sigma0,
            quadrature: self.scheme.quadrature.parse()?,
            solver: SolverOptions {
                tol: self.solver.tol,
                max_iter: self.solver.max_iter,
            },
            classify: ClassifyOptions {
                strict: self.scheme.strict,
                ..ClassifyOptions::default()
            },
            timings: self.timings,
        };
        Ok(ResolvedRun {
            problem: Problem {
                name: "config".into(),
                domain,
                interface,
                betas,
                source,
                boundary,
                exact,
            },
            sizes: self.n.clone(),
            settings,
            output: self.output.clone(),
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n = [4]
[domain]
lo = [-1, -1, -1]
hi = [1, 1, 1]
[interface]
kind = "plane"
normal = [1, 0, 1]
offset = 0.3
"#;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_resolves() {
        let c = RunConfig::parse(MINIMAL, Path::new("x.toml")).unwrap();
        assert_eq!(c.scheme, SchemeSpec::default());
        let r = c.resolve(Path::new(".")).unwrap();
        assert_eq!(r.sizes, vec![4]);
        assert!(r.problem.exact.is_some());
        assert_eq!(r.output, PathBuf::from("out"));
    }

    #[test]
    fn validation_names_the_key() {
        let bad = MINIMAL.to_string() + "[scheme]\nepsilon = 2\n";
        let c = RunConfig::parse(&bad, Path::new("x.toml")).unwrap();
        assert_eq!(key_of(c.validate().unwrap_err()), "scheme.epsilon");

        let bad = MINIMAL.replace("n = [4]", "n = [8, 4]");
        let c = RunConfig::parse(&bad, Path::new("x.toml")).unwrap();
        assert_eq!(key_of(c.validate().unwrap_err()), "n");

        let bad = MINIMAL.to_string() + "[scheme]\nquadrature = \"midpoint\"\n";
        let c = RunConfig::parse(&bad, Path::new("x.toml")).unwrap();
        assert_eq!(key_of(c.validate().unwrap_err()), "scheme.quadrature");

        let bad = MINIMAL.to_string() + "[solution]\nkind = \"none\"\n";
        let c = RunConfig::parse(&bad, Path::new("x.toml")).unwrap();
        assert_eq!(key_of(c.validate().unwrap_err()), "boundary.kind");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.to_string() + "[solver]\ntolerance = 1e-8\n";
        let err = RunConfig::parse(&bad, Path::new("x.toml")).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert!(message.contains("tolerance"), "{message}");
                assert_eq!(line, 11);
            }
            other => panic!("{other}"),
        }
        let bad = MINIMAL.replace("offset = 0.3", "offset = 0.3\nradius = 1");
        assert!(RunConfig::parse(&bad, Path::new("x.toml")).is_err());
    }
}
