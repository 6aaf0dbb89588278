//! Run configuration: a single JSON file plus a few command-line overrides.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use scatter_core::las::{SolveOptions, SolverChoice};
use scatter_core::limit::DensityChoice;
use scatter_core::materials::{FieldPreset, MaterialFields};
use scatter_core::{MediumParams, PlaneWave, SimDomain, Vec3};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Las,
    Limit,
    Oracle,
    Design,
    Validate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub medium: MediumParams,
    pub domain: SimDomain,
    pub materials: MaterialsBlock,
    pub wave: PlaneWave,
    pub solver: SolverBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsBlock {
    pub h: FieldPreset<Complex64>,
    pub n: FieldPreset<f64>,
}

fn default_kappa() -> f64 {
    0.5
}

fn default_cells() -> usize {
    8
}

fn default_n_theta() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub mode: Mode,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_cells")]
    pub cells_per_axis: usize,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub solver: SolverChoice,
    /// Placement seed for varying densities.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Radii for `study` and `oracle`.
    #[serde(default)]
    pub a_sequence: Vec<f64>,
    /// Latitude rings of the sphere mesh in `oracle` and `validate`.
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    /// Impedance of the single sphere; defaults to `h` at the domain centre.
    #[serde(default)]
    pub oracle_h: Option<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBlock {
    pub target_mu: FieldPreset<Complex64>,
    /// Nodes per axis of the design grid spanning the domain.
    pub grid: [usize; 3],
    /// Density used for the design; defaults to the materials `n`.
    #[serde(default)]
    pub density: Option<DensityChoice>,
}

fn default_probe_n() -> usize {
    5
}

/// Probe points: an explicit list, or an `n³` grid over `[min, max]`
/// (the domain box when omitted).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec3>,
    #[serde(default)]
    pub min: Option<Vec3>,
    #[serde(default)]
    pub max: Option<Vec3>,
    #[serde(default = "default_probe_n")]
    pub n: usize,
}

impl Default for ProbeBlock {
    fn default() -> Self {
        ProbeBlock {
            points: Vec::new(),
            min: None,
            max: None,
            n: default_probe_n(),
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub probes: ProbeBlock,
    /// Skip the field CSV.
    #[serde(default)]
    pub no_fields: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: default_dir(),
            probes: ProbeBlock::default(),
            no_fields: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub a: Option<f64>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::schema(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::schema("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(a) = o.a {
            self.solver.a = Some(a);
        }
        if let Some(m) = o.mode {
            self.solver.mode = m;
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
    }

    /// Range checks that the typed parse cannot express.
    pub fn check(&self) -> Result<(), CliError> {
        self.medium
            .validate()
            .map_err(|e| CliError::schema("medium", e.to_string()))?;
        if let Some(a) = self.solver.a {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CliError::schema("solver.a", format!("must be positive, got {a}")));
            }
        }
        if !(self.solver.kappa > 0.0 && self.solver.kappa < 1.0) {
            return Err(CliError::schema("solver.kappa", "must lie in (0, 1)"));
        }
        if let Some(t) = self.solver.tolerance {
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::schema("solver.tolerance", "must lie in (0, 1)"));
            }
        }
        if let Some((i, a)) = self.solver.a_sequence.iter().enumerate().find(|(_, a)| !(**a > 0.0 && a.is_finite())) {
            return Err(CliError::schema(format!("solver.a_sequence[{i}]"), format!("must be positive, got {a}")));
        }
        if self.output.probes.points.is_empty() && self.output.probes.n == 0 {
            return Err(CliError::schema("output.probes.n", "must be at least 1"));
        }
        self.fields()?;
        Ok(())
    }

    pub fn require_a(&self) -> Result<f64, CliError> {
        self.solver
            .a
            .ok_or_else(|| CliError::schema("solver.a", "required for this mode (or pass --a)"))
    }

    pub fn fields(&self) -> Result<MaterialFields, CliError> {
        MaterialFields::new(self.domain, self.materials.h.clone(), self.materials.n.clone())
            .map_err(|e| CliError::schema("materials", e.to_string()))
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            solver: self.solver.solver,
            tolerance: self.solver.tolerance,
            ..SolveOptions::default()
        }
    }

    pub fn probes(&self) -> Vec<Vec3> {
        let p = &self.output.probes;
        if !p.points.is_empty() {
            return p.points.clone();
        }
        let min = p.min.unwrap_or(self.domain.min());
        let max = p.max.unwrap_or(self.domain.max());
        scatter_core::study::probe_grid(min, max, p.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"min": [0, 0, 0], "max": [1, 1, 1]},
        "materials": {"h": {"constant": {"value": [0.05, 0]}}, "n": {"constant": {"value": 1}}},
        "wave": {"direction": [0, 0, 1], "polarization": [[1, 0], [0, 0], [0, 0]]},
        "solver": {"mode": "las", "a": 0.1}
    }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.solver.kappa, 0.5);
        assert_eq!(cfg.medium, MediumParams::default());
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
        cfg.check().unwrap();
        assert_eq!(cfg.probes().len(), 125);
    }

    #[test]
    fn errors_carry_the_key_path() {
        let bad = MINIMAL.replace(r#""a": 0.1"#, r#""a": "x""#);
        match RunConfig::parse(&bad) {
            Err(CliError::Schema { path, .. }) => assert_eq!(path, "solver.a"),
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace(r#""polarization": [[1, 0], [0, 0], [0, 0]]"#, r#""polarization": [[0, 0], [0, 0], [1, 0]]"#);
        match RunConfig::parse(&bad) {
            Err(CliError::Schema { path, .. }) => assert_eq!(path, "wave"),
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace(r#""mode": "las""#, r#""mode": "las", "typo": 1"#);
        match RunConfig::parse(&bad) {
            Err(CliError::Schema { path, .. }) => assert_eq!(path, "solver.typo"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_and_round_trip() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.apply(&Overrides {
            a: Some(0.05),
            mode: Some(Mode::Limit),
            out: Some(PathBuf::from("elsewhere")),
        });
        assert_eq!(cfg.solver.a, Some(0.05));
        assert_eq!(cfg.solver.mode, Mode::Limit);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn range_checks() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.solver.kappa = 1.0;
        assert!(matches!(cfg.check(), Err(CliError::Schema { path, .. }) if path == "solver.kappa"));
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.solver.a = None;
        assert!(matches!(cfg.require_a(), Err(CliError::Schema { path, .. }) if path == "solver.a"));
    }
}
