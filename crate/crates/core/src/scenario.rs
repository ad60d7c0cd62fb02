//! Scenario files (TOML): domain, boundary traces, fluid and norm parameters,
//! solver options and verification settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryData, SpaceFn};
use crate::error::{Error, Result};
use crate::fields::NormParams;
use crate::geometry::{build_domain, Domain, DomainSpec};
use crate::momentum::FluidParams;
use crate::picard::PicardOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Rectangle,
    Lens,
    Disk,
}

/// Exactly one of `path`, `builtin` or `spec`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainRef {
    /// domain spec file, relative to the scenario file
    pub path: Option<String>,
    pub builtin: Option<Builtin>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub amplitude: Option<f64>,
    pub scale: Option<f64>,
    pub spec: Option<DomainSpec>,
}

/// Boundary traces as expressions in `x1, x2`, stored as perturbations of
/// the constant flow (all three multiplied by `scale`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSpec {
    /// `b - f tau1`
    pub stress: String,
    /// `d - n1`
    pub normal_velocity: String,
    /// `rho_in - 1`
    pub density: String,
    pub friction: String,
    pub scale: f64,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            stress: "0".into(),
            normal_velocity: "0".into(),
            density: "0".into(),
            friction: "1".into(),
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 32, ny: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    /// manufactured case for the convergence study (unit square only)
    pub mms: Option<String>,
    pub mms_grids: Vec<usize>,
    /// bound `M` in the singularity-point checks
    pub sing_bound: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self { mms: None, mms_grids: vec![16, 32, 64], sing_bound: 1.0 }
    }
}

fn default_norms() -> NormParams {
    NormParams { s: 0.5, p: 5.0, epsilon: 0.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub domain: DomainRef,
    #[serde(default)]
    pub traces: TraceSpec,
    #[serde(default)]
    pub fluid: FluidParams,
    #[serde(default = "default_norms")]
    pub norms: NormParams,
    #[serde(default)]
    pub solver: PicardOptions,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    /// directory for resolving relative paths; not part of the file
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))?;
        s.base_dir = base_dir.to_path_buf();
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    /// Checks that do not need the domain to be built.
    pub fn validate(&self) -> Result<()> {
        self.fluid.validate()?;
        self.norms.validate()?;
        self.solver.validate()?;
        if self.grid.nx < 8 || self.grid.ny < 8 {
            return Err(Error::InvalidInput(format!(
                "grid resolution {}x{} below 8",
                self.grid.nx, self.grid.ny
            )));
        }
        let d = &self.domain;
        let given = [d.path.is_some(), d.builtin.is_some(), d.spec.is_some()];
        if given.iter().filter(|&&b| b).count() != 1 {
            return Err(Error::InvalidInput(
                "domain needs exactly one of `path`, `builtin`, `spec`".into(),
            ));
        }
        // parse traces early so malformed expressions fail as parse errors
        self.boundary_data()?;
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Domain> {
        let d = &self.domain;
        if let Some(p) = &d.path {
            let text = std::fs::read_to_string(self.base_dir.join(p))?;
            return build_domain(&DomainSpec::from_toml(&text)?);
        }
        if let Some(spec) = &d.spec {
            return build_domain(spec);
        }
        let h = d.height.unwrap_or(1.0);
        match d.builtin.expect("validated") {
            Builtin::Rectangle => Domain::rectangle(d.width.unwrap_or(1.0), h),
            Builtin::Lens => Domain::lens(h, d.amplitude.unwrap_or(1.0)),
            Builtin::Disk => Domain::disk(h, d.scale.unwrap_or(1.0)),
        }
    }

    pub fn boundary_data(&self) -> Result<BoundaryData> {
        let t = &self.traces;
        Ok(BoundaryData {
            stress: SpaceFn::parse(&t.stress)?,
            normal_velocity: SpaceFn::parse(&t.normal_velocity)?,
            density: SpaceFn::parse(&t.density)?,
            friction: SpaceFn::parse(&t.friction)?,
            scale: t.scale,
        })
    }

    /// Set one numeric parameter by name (used by sweeps).
    pub fn set(&mut self, name: &str, v: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidInput(format!("`{name}` needs a positive integer, got {v}")))
            }
        };
        match name {
            "n" => {
                self.grid.nx = as_count(v)?;
                self.grid.ny = self.grid.nx;
            }
            "nx" => self.grid.nx = as_count(v)?,
            "ny" => self.grid.ny = as_count(v)?,
            "scale" => self.traces.scale = v,
            "s" => self.norms.s = v,
            "p" => self.norms.p = v,
            "epsilon" => self.norms.epsilon = v,
            "mu" => self.fluid.mu = v,
            "nu" => self.fluid.nu = v,
            "gamma" => self.fluid.gamma = v,
            "kappa" => self.fluid.kappa = v,
            "theta" => self.solver.theta = v,
            _ => return Err(Error::InvalidInput(format!("unknown sweep parameter `{name}`"))),
        }
        self.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"
name = "square"
[domain]
builtin = "rectangle"
[traces]
density = "0.01*sin(2*pi*x2)"
"#;

    #[test]
    fn minimal_scenario_parses() {
        let s = Scenario::from_toml(SQUARE, Path::new(".")).unwrap();
        assert_eq!(s.grid.nx, 32);
        assert_eq!(s.fluid, FluidParams::default());
        let d = s.boundary_data().unwrap();
        assert!((d.density_pert([0.0, 0.25]) - 0.01).abs() < 1e-15);
        assert!(s.build_domain().is_ok());
    }

    #[test]
    fn unknown_keys_and_bad_expressions_are_parse_errors() {
        let bad = SQUARE.replace("[traces]", "[traces]\ncolour = \"red\"");
        assert!(matches!(Scenario::from_toml(&bad, Path::new(".")), Err(Error::Parse(_))));
        let bad = SQUARE.replace("0.01*sin(2*pi*x2)", "0.01*sin(");
        assert!(matches!(Scenario::from_toml(&bad, Path::new(".")), Err(Error::Parse(_))));
    }

    #[test]
    fn sweep_setter() {
        let mut s = Scenario::from_toml(SQUARE, Path::new(".")).unwrap();
        s.set("n", 16.0).unwrap();
        assert_eq!((s.grid.nx, s.grid.ny), (16, 16));
        assert!(s.set("n", 4.0).is_err());
        assert!(s.set("bogus", 1.0).is_err());
    }
}
