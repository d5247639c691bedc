//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sediment::cloud::LambdaPolicy;
use sediment::dynamics::{Scheme, SolverKind};
use sediment::meanfield::Rho0Spec;
use sediment::reflections::{GravitySettings, NeumannOptions};
use sediment::Vec3;

use crate::error::{HarnessError, Result};

/// Version string embedded in every report.
pub const CODE_VERSION: &str = concat!("sediment-harness ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Selftest,
}

impl std::str::FromStr for ExperimentId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" => Ok(ExperimentId::Exp1),
            "exp2" => Ok(ExperimentId::Exp2),
            "exp3" => Ok(ExperimentId::Exp3),
            "exp4" => Ok(ExperimentId::Exp4),
            "selftest" => Ok(ExperimentId::Selftest),
            other => Err(HarnessError::Usage(format!("unknown experiment '{other}'"))),
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::Exp4 => "exp4",
            ExperimentId::Selftest => "selftest",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Independent uniform points in `[0, side]³`.
    UniformBox { side: f64 },
    /// Simple cubic lattice filling `[0, side]³` row by row, each site moved
    /// uniformly within `±jitter·h/2` per axis.
    PerturbedLattice { side: f64, jitter: f64 },
    /// Independent draws from a closed-form density.
    Density { spec: Rho0Spec },
    /// Positions from a CSV file with columns `x,y,z`.
    File { path: PathBuf },
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec::UniformBox { side: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    /// `r0 = N R`.
    pub r0: f64,
    /// Settling velocity `κg` of an isolated sphere.
    pub settling_velocity: [f64; 3],
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            r0: 0.05,
            settling_velocity: [0.0, 0.0, -1.0],
        }
    }
}

impl Physics {
    pub fn gravity(&self) -> GravitySettings {
        let g = self.settling_velocity;
        GravitySettings::new(Vec3::new(g[0], g[1], g[2]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSettings {
    pub dt: f64,
    /// Unset means `ln 2 / Ĉ(0)` from the initial Lipschitz constant.
    pub horizon: Option<f64>,
    pub stride: usize,
    pub scheme: Scheme,
    /// Lower bound on the number of steps when the horizon is automatic.
    pub min_steps: usize,
}

impl Default for TimeSettings {
    fn default() -> Self {
        TimeSettings {
            dt: 0.02,
            horizon: None,
            stride: 1,
            scheme: Scheme::Rk4,
            min_steps: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub mbar: f64,
    pub e: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { mbar: 256.0, e: 64.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldSettings {
    pub spec: Rho0Spec,
    pub m_per_axis: usize,
    /// Blob core size; twice the grid spacing when unset.
    pub delta: Option<f64>,
}

impl Default for MeanfieldSettings {
    fn default() -> Self {
        MeanfieldSettings {
            spec: Rho0Spec::Bump {
                center: Vec3::zeros(),
                radius: 1.0,
            },
            m_per_axis: 12,
            delta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub generator: GeneratorSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Seeds `seed, seed + 1, …` run per `N`.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
    #[serde(default)]
    pub time: TimeSettings,
    #[serde(default)]
    pub lambda_policy: LambdaPolicy,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub meanfield: MeanfieldSettings,
    #[serde(default)]
    pub exact_m: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_n_list() -> Vec<usize> {
    vec![128, 256, 512]
}

fn default_seed() -> u64 {
    7
}

fn default_seeds() -> usize {
    1
}

fn default_solver() -> SolverKind {
    SolverKind::Reflections(NeumannOptions {
        track_series: false,
        ..Default::default()
    })
}

/// Commented example accepted by [`ExperimentConfig::from_toml`].
pub const SCHEMA: &str = r#"# sediment experiment configuration (TOML)
experiment = "exp1"            # exp1 | exp2 | exp3 | exp4 | selftest
n_list = [128, 256, 512]       # particle counts
seed = 7                       # first seed
seeds = 1                      # seeds per N: seed, seed+1, ...
exact_m = false                # exact box sweep for M (N <= 512)
output_dir = "out"             # optional; --out overrides
lambda_policy = { policy = "half_dmin_floor" }   # fixed (value) | cube_root | half_dmin_floor

[generator]                    # uniform_box | perturbed_lattice | density | file
kind = "uniform_box"
side = 1.0
# kind = "perturbed_lattice"; side = 1.0; jitter = 0.2
# kind = "density"; spec = { family = "bump", center = [0, 0, 0], radius = 1.0 }
# kind = "file"; path = "cloud.csv"   # columns x,y,z

[physics]
r0 = 0.05                      # N R
settling_velocity = [0.0, 0.0, -1.0]

[solver]                       # first_order | reflections | dense
kind = "reflections"
p_max = 20
tol = 1e-14
closure = "dropped"            # dropped | rigid
track_series = false
# kind = "dense"; closure = "dropped"

[time]
dt = 0.02
# horizon = 0.5                # default: ln 2 / C(0)
stride = 1
scheme = "rk4"                 # euler | heun | rk4
min_steps = 10

[budgets]
mbar = 256.0                   # M / (N λ³) with M = 8L
e = 64.0

[meanfield]
spec = { family = "bump", center = [0.0, 0.0, 0.0], radius = 1.0 }
m_per_axis = 12
# delta = 0.3
"#;

impl ExperimentConfig {
    /// Defaults for `id` with the generator and sizes each experiment expects.
    pub fn default_for(id: ExperimentId) -> Self {
        let mut c = ExperimentConfig {
            experiment: id,
            n_list: default_n_list(),
            generator: GeneratorSpec::default(),
            seed: default_seed(),
            seeds: default_seeds(),
            physics: Physics::default(),
            solver: default_solver(),
            time: TimeSettings::default(),
            lambda_policy: LambdaPolicy::default(),
            budgets: Budgets::default(),
            meanfield: MeanfieldSettings::default(),
            exact_m: false,
            output_dir: None,
        };
        match id {
            ExperimentId::Exp1 => {}
            ExperimentId::Exp2 => {
                c.generator = GeneratorSpec::Density { spec: c.meanfield.spec };
                c.physics.r0 = 0.5;
                c.seeds = 5;
                c.solver = SolverKind::FirstOrder;
                c.time.horizon = Some(0.5);
                c.time.dt = 0.05;
                c.time.stride = 2;
            }
            ExperimentId::Exp3 => {
                c.n_list = vec![64, 125, 216];
                c.generator = GeneratorSpec::PerturbedLattice { side: 1.0, jitter: 0.2 };
                c.physics.r0 = 0.01;
            }
            ExperimentId::Exp4 => {
                c.n_list = vec![64, 128, 256, 512];
                c.seeds = 3;
            }
            ExperimentId::Selftest => c.n_list = vec![],
        }
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(HarnessError::Usage(format!("empty configuration; expected:\n{SCHEMA}")));
        }
        let c: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Usage(format!("{e}\nexpected:\n{SCHEMA}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut c = Self::from_toml(&text)?;
        if let GeneratorSpec::File { path: p } = &mut c.generator {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.experiment != ExperimentId::Selftest && (self.n_list.is_empty() || self.n_list.contains(&0)) {
            return bad("n_list must hold positive particle counts");
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1");
        }
        if !(self.physics.r0 > 0.0) || !self.physics.settling_velocity.iter().all(|v| v.is_finite()) {
            return bad("physics needs r0 > 0 and a finite settling velocity");
        }
        if !(self.time.dt > 0.0) || self.time.stride == 0 {
            return bad("time needs dt > 0 and stride >= 1");
        }
        if let Some(h) = self.time.horizon {
            if !(h >= 0.0) || !h.is_finite() {
                return bad("horizon must be finite and non-negative");
            }
        }
        if !(self.budgets.mbar > 0.0 && self.budgets.e > 0.0) {
            return bad("budgets must be positive");
        }
        match &self.generator {
            GeneratorSpec::UniformBox { side } if !(*side > 0.0) => return bad("uniform_box side must be positive"),
            GeneratorSpec::PerturbedLattice { side, jitter } if !(*side > 0.0) || !(0.0..=1.0).contains(jitter) => {
                return bad("perturbed_lattice needs side > 0 and jitter in [0, 1]")
            }
            GeneratorSpec::Density { spec } => spec.validate().map_err(HarnessError::Core)?,
            GeneratorSpec::File { path } if !path.exists() => {
                return Err(HarnessError::Config(format!("cloud file {} does not exist", path.display())))
            }
            _ => {}
        }
        self.meanfield.spec.validate().map_err(HarnessError::Core)?;
        if self.meanfield.m_per_axis < 4 {
            return bad("meanfield.m_per_axis must be at least 4");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, in hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.seeds as u64).map(move |k| self.seed.wrapping_add(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_example_parses() {
        let c = ExperimentConfig::from_toml(SCHEMA).unwrap();
        assert_eq!(c.experiment, ExperimentId::Exp1);
        assert_eq!(c.n_list, vec![128, 256, 512]);
        assert!(matches!(c.solver, SolverKind::Reflections(_)));
    }

    #[test]
    fn empty_config_is_a_usage_error_with_schema() {
        match ExperimentConfig::from_toml("  \n") {
            Err(HarnessError::Usage(m)) => assert!(m.contains("experiment =")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_toml("experiment = \"exp1\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_toml("experiment = \"exp3\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.generator, GeneratorSpec::UniformBox { side: 1.0 });
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default_for(ExperimentId::Exp1);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        for id in [ExperimentId::Exp1, ExperimentId::Exp2, ExperimentId::Exp3, ExperimentId::Exp4] {
            let c = ExperimentConfig::default_for(id);
            let text = toml::to_string(&c).unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
        }
    }

    #[test]
    fn missing_cloud_file_is_rejected() {
        let mut c = ExperimentConfig::default_for(ExperimentId::Exp1);
        c.generator = GeneratorSpec::File {
            path: "/nonexistent/cloud.csv".into(),
        };
        assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
    }
}
