//! Run configuration files.
//!
//! A config is TOML with one required section, `[task]`, and optional
//! `[sim]`, `[ga]`, `[grf]`, `[iris]` and `[output]` sections. Keys carry
//! their unit in the name and unknown keys are rejected. Missing values take
//! task-dependent defaults; [`RunConfig::canonical_text`] writes the fully
//! resolved form, which is what run directories and checkpoints record.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qsnn::evolve::GaConfig;
use qsnn::genome::chromosome_length;
use qsnn::tasks::{
    iris_encode, kfold_split, parse_iris, xor_patterns, GrfConfig, SpikePattern, XorVariant,
    IRIS_DATA,
};
use qsnn::{KernelMode, QuantScheme, SimParams, SpikeTask, Topology};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    XorStandard,
    XorOneNeuron,
    Iris,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::XorStandard => "xor-standard",
            TaskKind::XorOneNeuron => "xor-one-neuron",
            TaskKind::Iris => "iris",
        }
    }

    fn default_topology(self) -> Vec<usize> {
        match self {
            TaskKind::XorStandard => vec![3, 5, 1],
            TaskKind::XorOneNeuron => vec![3, 1],
            TaskKind::Iris => vec![33, 8, 1],
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_time_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_r_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_spikes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossover_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selective_pressure: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elite_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_generations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse_target_ms2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miss_penalty_ms2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrfSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neurons: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fire_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrisSection {
    /// UCI `iris.data`; the bundled copy is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_per_class: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    /// Fold whose training split is used by `train`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fold: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shuffle_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance_ms: Option<f64>,
}

/// Training and validation patterns of one fold.
pub type FoldPatterns = (Vec<SpikePattern>, Vec<SpikePattern>);

/// Settings that do not influence results and are left out of the
/// configuration hash.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_every_generations: Option<usize>,
}

/// The config file as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub task: TaskSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub grf: GrfSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub iris: IrisSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub output: OutputSection,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

impl FromStr for ConfigFile {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        toml::from_str(s).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrisSettings {
    pub data_path: Option<PathBuf>,
    pub train_per_class: usize,
    pub folds: usize,
    pub fold: usize,
    pub shuffle_seed: Option<u64>,
    pub tolerance_ms: f64,
}

/// A validated, fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: TaskKind,
    pub topology: Topology,
    pub scheme: QuantScheme,
    pub sim: SimParams,
    pub ga: GaConfig,
    pub grf: Option<GrfConfig>,
    pub iris: Option<IrisSettings>,
    pub out_dir: PathBuf,
    pub checkpoint_every: usize,
}

fn field_err(field: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Self::resolve(&text.parse()?)
    }

    pub fn resolve(file: &ConfigFile) -> Result<Self, CliError> {
        let task = file.task.kind;
        let topology = Topology::new(
            file.task
                .topology
                .clone()
                .unwrap_or_else(|| task.default_topology()),
        )
        .map_err(|e| field_err("task.topology", e))?;
        let scheme = match &file.task.scheme {
            Some(s) => s.parse().map_err(|e| field_err("task.scheme", e))?,
            None => QuantScheme::Decimal,
        };
        if topology.outputs() != 1 {
            return Err(field_err(
                "task.topology",
                "the last layer must have exactly one neuron",
            ));
        }

        let s = &file.sim;
        let default_theta = match (task, scheme) {
            (TaskKind::XorStandard, _) => 1.5,
            (TaskKind::XorOneNeuron, _) | (TaskKind::Iris, QuantScheme::Decimal) => 3.0,
            (TaskKind::Iris, QuantScheme::Integer) => 6.0,
        };
        let base = SimParams::default();
        let sim = SimParams {
            sim_time_ms: s.sim_time_ms.unwrap_or(base.sim_time_ms),
            dt_ms: s.dt_ms.unwrap_or(base.dt_ms),
            tau_ms: s.tau_ms.unwrap_or(base.tau_ms),
            tau_r_ms: s.tau_r_ms.unwrap_or(base.tau_r_ms),
            theta: s.theta.unwrap_or(default_theta),
            max_spikes: s.max_spikes.unwrap_or(base.max_spikes),
            kernel_mode: match &s.kernel {
                Some(k) => KernelMode::from_name(k).ok_or_else(|| {
                    field_err(
                        "sim.kernel",
                        format!("unknown kernel '{k}' (normalized|unscaled)"),
                    )
                })?,
                None => base.kernel_mode,
            },
        };
        sim.validate().map_err(|e| field_err("sim", e))?;

        let g = &file.ga;
        let base = match task {
            TaskKind::Iris => GaConfig {
                population_size: 600,
                max_generations: 600,
                ..GaConfig::default()
            },
            TaskKind::XorOneNeuron => GaConfig {
                max_generations: 200,
                mse_target: 0.0,
                ..GaConfig::default()
            },
            TaskKind::XorStandard => GaConfig::default(),
        };
        let ga = GaConfig {
            population_size: g.population_size.unwrap_or(base.population_size),
            crossover_rate: g.crossover_rate.unwrap_or(base.crossover_rate),
            mutation_rate: g.mutation_rate.unwrap_or(base.mutation_rate),
            selective_pressure: g.selective_pressure.unwrap_or(base.selective_pressure),
            elite_count: g.elite_count.unwrap_or(base.elite_count),
            max_generations: g.max_generations.unwrap_or(base.max_generations),
            mse_target: g.mse_target_ms2.unwrap_or(base.mse_target),
            seed: g.seed.unwrap_or(base.seed),
            miss_penalty: g.miss_penalty_ms2.unwrap_or(base.miss_penalty),
        };
        ga.validate().map_err(|e| field_err("ga", e))?;

        let (grf, iris) = if task == TaskKind::Iris {
            let d = GrfConfig::default();
            let r = &file.grf;
            let grf = GrfConfig {
                neurons: r.neurons.unwrap_or(d.neurons),
                i_min: r.i_min.unwrap_or(d.i_min),
                i_max: r.i_max.unwrap_or(d.i_max),
                gamma: r.gamma.unwrap_or(d.gamma),
                fire_threshold: r.fire_threshold.unwrap_or(d.fire_threshold),
                data_scale: r.data_scale.unwrap_or(d.data_scale),
            };
            grf.validate().map_err(|e| field_err("grf", e))?;
            let i = &file.iris;
            let iris = IrisSettings {
                data_path: i.data_path.clone(),
                train_per_class: i.train_per_class.unwrap_or(10),
                folds: i.folds.unwrap_or(5),
                fold: i.fold.unwrap_or(0),
                shuffle_seed: i.shuffle_seed,
                tolerance_ms: i.tolerance_ms.unwrap_or(2.0),
            };
            if iris.fold >= iris.folds {
                return Err(field_err(
                    "iris.fold",
                    format!("must be < folds ({})", iris.folds),
                ));
            }
            if iris.tolerance_ms.is_nan() || iris.tolerance_ms <= 0.0 {
                return Err(field_err("iris.tolerance_ms", "must be > 0"));
            }
            (Some(grf), Some(iris))
        } else {
            if !is_default(&file.grf) || !is_default(&file.iris) {
                return Err(CliError::Config(format!(
                    "[grf] and [iris] only apply to the iris task, not {task}"
                )));
            }
            (None, None)
        };

        let expected_inputs = match &grf {
            Some(g) => 1 + 4 * g.neurons,
            None => 3,
        };
        if topology.inputs() != expected_inputs {
            return Err(field_err(
                "task.topology",
                format!(
                    "{task} needs {expected_inputs} inputs, topology [{topology}] has {}",
                    topology.inputs()
                ),
            ));
        }
        let checkpoint_every = file.output.checkpoint_every_generations.unwrap_or(10);
        if checkpoint_every == 0 {
            return Err(field_err(
                "output.checkpoint_every_generations",
                "must be >= 1",
            ));
        }
        // Guards against absurd sizes before any allocation.
        if chromosome_length(&topology) > 1 << 24 {
            return Err(field_err("task.topology", "network too large"));
        }

        Ok(RunConfig {
            task,
            topology,
            scheme,
            sim,
            ga,
            grf,
            iris,
            out_dir: file
                .output
                .dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("runs")),
            checkpoint_every,
        })
    }

    /// The resolved config as a `ConfigFile` with every result-relevant value
    /// filled in.
    pub fn to_file(&self) -> ConfigFile {
        let s = &self.sim;
        let g = &self.ga;
        ConfigFile {
            task: TaskSection {
                kind: self.task,
                topology: Some(self.topology.layer_sizes().to_vec()),
                scheme: Some(self.scheme.name().to_string()),
            },
            sim: SimSection {
                sim_time_ms: Some(s.sim_time_ms),
                dt_ms: Some(s.dt_ms),
                tau_ms: Some(s.tau_ms),
                tau_r_ms: Some(s.tau_r_ms),
                theta: Some(s.theta),
                max_spikes: Some(s.max_spikes),
                kernel: Some(s.kernel_mode.name().to_string()),
            },
            ga: GaSection {
                population_size: Some(g.population_size),
                crossover_rate: Some(g.crossover_rate),
                mutation_rate: Some(g.mutation_rate),
                selective_pressure: Some(g.selective_pressure),
                elite_count: Some(g.elite_count),
                max_generations: Some(g.max_generations),
                mse_target_ms2: Some(g.mse_target),
                miss_penalty_ms2: Some(g.miss_penalty),
                seed: Some(g.seed),
            },
            grf: self
                .grf
                .as_ref()
                .map(|r| GrfSection {
                    neurons: Some(r.neurons),
                    i_min: Some(r.i_min),
                    i_max: Some(r.i_max),
                    gamma: Some(r.gamma),
                    fire_threshold: Some(r.fire_threshold),
                    data_scale: Some(r.data_scale),
                })
                .unwrap_or_default(),
            iris: self
                .iris
                .as_ref()
                .map(|i| IrisSection {
                    data_path: i.data_path.clone(),
                    train_per_class: Some(i.train_per_class),
                    folds: Some(i.folds),
                    fold: Some(i.fold),
                    shuffle_seed: i.shuffle_seed,
                    tolerance_ms: Some(i.tolerance_ms),
                })
                .unwrap_or_default(),
            output: OutputSection::default(),
        }
    }

    /// Resolved TOML without the `[output]` section. Two configs that
    /// produce the same results have the same canonical text.
    pub fn canonical_text(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.ga.seed = seed;
        self
    }

    fn iris_samples(&self) -> Result<Vec<qsnn::tasks::LabeledSample>, CliError> {
        let iris = self.iris.as_ref().expect("iris task has iris settings");
        match &iris.data_path {
            Some(p) => Ok(qsnn::tasks::iris_load(p)?),
            None => Ok(parse_iris(IRIS_DATA)?),
        }
    }

    /// Every pattern of the task: the four XOR rows, or all iris samples.
    pub fn all_patterns(&self) -> Result<Vec<SpikePattern>, CliError> {
        match self.task {
            TaskKind::XorStandard => Ok(xor_patterns(XorVariant::Standard)),
            TaskKind::XorOneNeuron => Ok(xor_patterns(XorVariant::OneNeuron)),
            TaskKind::Iris => {
                let grf = self.grf.as_ref().expect("iris task has grf settings");
                Ok(iris_encode(&self.iris_samples()?, grf, self.sim.dt_ms)?)
            }
        }
    }

    /// Training and validation patterns of every fold. XOR has one "fold"
    /// that trains and validates on the same four rows.
    pub fn fold_patterns(&self) -> Result<Vec<FoldPatterns>, CliError> {
        let all = self.all_patterns()?;
        match &self.iris {
            None => Ok(vec![(all.clone(), all)]),
            Some(i) => {
                let samples = self.iris_samples()?;
                let folds = kfold_split(&samples, i.train_per_class, i.folds, i.shuffle_seed)
                    .map_err(|e| field_err("iris", e))?;
                let pick = |idx: &[usize]| idx.iter().map(|&k| all[k].clone()).collect::<Vec<_>>();
                Ok(folds
                    .iter()
                    .map(|f| (pick(&f.train), pick(&f.validation)))
                    .collect())
            }
        }
    }

    pub fn training_patterns(&self) -> Result<Vec<SpikePattern>, CliError> {
        let fold = self.iris.as_ref().map_or(0, |i| i.fold);
        Ok(self.fold_patterns()?.swap_remove(fold).0)
    }

    pub fn spike_task(&self, patterns: Vec<SpikePattern>) -> Result<SpikeTask, CliError> {
        Ok(SpikeTask::new(
            self.topology.clone(),
            self.scheme,
            self.sim.clone(),
            patterns,
            self.ga.miss_penalty,
        )?)
    }

    pub fn tolerance_ms(&self) -> f64 {
        self.iris.as_ref().map_or(2.0, |i| i.tolerance_ms)
    }
}
