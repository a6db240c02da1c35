//! Experiment configuration files: structure, dataset, and solver
//! parameters in one JSON document. See `docs/file_formats.md` for the
//! schema and `configs/` for shipped examples.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use ddcm::assembly::SolverConfig;
use ddcm::dataset::{
    add_noise, generate_linear, generate_sigmoid, load_csv, make_unsymmetric,
    repair_with_originals, CsvColumns, Dataset, GeneratorLaw,
};
use ddcm::solvers::{InitMode, SolverKind};
use ddcm::structure::{
    build_bar, manufactured_bar_load, BarLoad, BarSupports, BenchmarkSpec, StrainMeasure,
    Structure, TrussConfig,
};

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub structure: StructureSpec,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Solver strategy; both are run when omitted.
    #[serde(default)]
    pub kind: Option<SolverKind>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureSpec {
    Bar {
        length: f64,
        n_elements: usize,
        area: f64,
        #[serde(default)]
        supports: BarSupportsSpec,
        load: BarLoadSpec,
    },
    Truss(TrussConfig),
    TrussFile {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarSupportsSpec {
    #[default]
    FixedFixed,
    FixedFree,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BarLoadSpec {
    /// Axial end force (N) at the right end.
    EndForce { force: f64 },
    /// The manufactured benchmark load density for the given parameters.
    Manufactured { benchmark: BenchmarkSpec },
}

impl StructureSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Structure, CliError> {
        match self {
            StructureSpec::Bar {
                length,
                n_elements,
                area,
                supports,
                load,
            } => {
                let supports = match supports {
                    BarSupportsSpec::FixedFixed => BarSupports::FixedFixed,
                    BarSupportsSpec::FixedFree => BarSupports::FixedFree,
                };
                let built = match load {
                    BarLoadSpec::EndForce { force } => build_bar(
                        *length,
                        *n_elements,
                        *area,
                        supports,
                        BarLoad::EndForce(*force),
                    ),
                    BarLoadSpec::Manufactured { benchmark } => build_bar(
                        *length,
                        *n_elements,
                        *area,
                        supports,
                        BarLoad::Distributed(&|xi| manufactured_bar_load(xi, benchmark)),
                    ),
                };
                built.map_err(|e| CliError::Config(e.to_string()))
            }
            StructureSpec::Truss(cfg) => cfg.build().map_err(|e| CliError::Config(e.to_string())),
            StructureSpec::TrussFile { path } => {
                let resolved = if path.is_relative() {
                    base_dir.join(path)
                } else {
                    path.clone()
                };
                TrussConfig::from_file(&resolved)
                    .and_then(|cfg| cfg.build())
                    .map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    /// Benchmark parameters when the structure is a manufactured bar.
    pub fn benchmark(&self) -> Option<&BenchmarkSpec> {
        match self {
            StructureSpec::Bar {
                load: BarLoadSpec::Manufactured { benchmark },
                ..
            } => Some(benchmark),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct DatasetSpec {
    #[serde(flatten)]
    pub source: DatasetSource,
    /// Optional Gaussian perturbation applied after generation.
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Linear {
        e_modulus: f64,
        n_points: usize,
        strain_max: f64,
    },
    Sigmoid {
        s_max: f64,
        n_points: usize,
        strain_max: f64,
    },
    Unsymmetric {
        law: GeneratorLaw,
        n_points: usize,
        strain_max: f64,
        fraction_positive: f64,
    },
    Csv {
        path: PathBuf,
        columns: CsvColumns,
    },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
    /// Replace points violating the consistency check by their pre-noise
    /// originals (default true).
    #[serde(default = "default_repair")]
    pub repair: bool,
}

fn default_repair() -> bool {
    true
}

impl DatasetSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Dataset, CliError> {
        let clean = match &self.source {
            DatasetSource::Linear {
                e_modulus,
                n_points,
                strain_max,
            } => generate_linear(*e_modulus, *n_points, *strain_max),
            DatasetSource::Sigmoid {
                s_max,
                n_points,
                strain_max,
            } => generate_sigmoid(*s_max, *n_points, *strain_max),
            DatasetSource::Unsymmetric {
                law,
                n_points,
                strain_max,
                fraction_positive,
            } => make_unsymmetric(*law, *n_points, *strain_max, *fraction_positive),
            DatasetSource::Csv { path, columns } => {
                let resolved = if path.is_relative() {
                    base_dir.join(path)
                } else {
                    path.clone()
                };
                load_csv(resolved, columns)
            }
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        match self.noise {
            None => Ok(clean),
            Some(noise) => {
                let noisy = add_noise(&clean, noise.sigma, noise.seed)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                if noise.repair {
                    repair_with_originals(&noisy, &clean)
                        .map_err(|e| CliError::Config(e.to_string()))
                } else {
                    Ok(noisy)
                }
            }
        }
    }
}

/// Solver parameters, all optional; unset fields keep library defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct SolverSpec {
    pub alpha: Option<u8>,
    pub c: Option<f64>,
    pub beta_s: Option<f64>,
    pub newton_tol: Option<f64>,
    pub newton_res_rtol: Option<f64>,
    pub newton_max_iters: Option<usize>,
    pub adm_max_iters: Option<usize>,
    pub k_max: Option<usize>,
    /// Explicit load factors; mutually exclusive with `gamma`/`steps`.
    pub load_factors: Option<Vec<f64>>,
    /// Target load factor reached in `steps` equal increments.
    pub gamma: Option<f64>,
    pub steps: Option<usize>,
    pub init: Option<InitSpec>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum InitSpec {
    Random {
        #[serde(default)]
        seed: u64,
    },
    StressFree,
    StructureSpecific,
}

impl From<InitSpec> for InitMode {
    fn from(spec: InitSpec) -> Self {
        match spec {
            InitSpec::Random { seed } => InitMode::Random { seed },
            InitSpec::StressFree => InitMode::StressFree,
            InitSpec::StructureSpecific => InitMode::StructureSpecific,
        }
    }
}

impl SolverSpec {
    pub fn to_config(&self) -> Result<SolverConfig, CliError> {
        let mut config = SolverConfig::default();
        if let Some(alpha) = self.alpha {
            config.strain = StrainMeasure::from_alpha(alpha)
                .ok_or_else(|| CliError::Config(format!("alpha must be 0 or 1, got {alpha}")))?;
        }
        if let Some(c) = self.c {
            config.c = Some(c);
        }
        if let Some(beta_s) = self.beta_s {
            config.beta_s = beta_s;
        }
        if let Some(tol) = self.newton_tol {
            config.newton_tol = tol;
        }
        if let Some(rtol) = self.newton_res_rtol {
            config.newton_res_rtol = rtol;
        }
        if let Some(n) = self.newton_max_iters {
            config.newton_max_iters = n;
        }
        if let Some(n) = self.adm_max_iters {
            config.adm_max_iters = n;
        }
        if let Some(k) = self.k_max {
            config.k_max = k;
        }
        if let Some(init) = self.init {
            config.init = init.into();
        }
        match (&self.load_factors, self.gamma, self.steps) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(CliError::Config(
                    "load_factors and gamma/steps are mutually exclusive".into(),
                ))
            }
            (Some(factors), None, None) => {
                if factors.is_empty() {
                    return Err(CliError::Config("load_factors must be nonempty".into()));
                }
                config.load_factors = factors.clone();
            }
            (None, gamma, steps) => {
                let gamma = gamma.unwrap_or(1.0);
                let steps = steps.unwrap_or(1).max(1);
                config.load_factors =
                    (1..=steps).map(|j| gamma * j as f64 / steps as f64).collect();
            }
        }
        Ok(config)
    }
}
