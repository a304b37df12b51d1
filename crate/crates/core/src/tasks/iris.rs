use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::grf::{grf_encode, GrfConfig};
use super::SpikePattern;
use crate::error::{Error, Result};
use crate::evolve::Target;

/// The standard 150-sample iris data set in UCI text form.
pub const IRIS_DATA: &str = include_str!("../../data/iris.data");

/// Spike time of the bias input in every encoded iris pattern.
pub const IRIS_BIAS_MS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IrisClass {
    Setosa,
    Versicolor,
    Virginica,
}

impl IrisClass {
    pub const ALL: [IrisClass; 3] = [
        IrisClass::Setosa,
        IrisClass::Versicolor,
        IrisClass::Virginica,
    ];

    pub fn label(self) -> &'static str {
        match self {
            IrisClass::Setosa => "Iris-setosa",
            IrisClass::Versicolor => "Iris-versicolor",
            IrisClass::Virginica => "Iris-virginica",
        }
    }

    /// Desired output spike time.
    pub fn target_ms(self) -> f64 {
        match self {
            IrisClass::Setosa => 15.0,
            IrisClass::Versicolor => 20.0,
            IrisClass::Virginica => 25.0,
        }
    }
}

impl fmt::Display for IrisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for IrisClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        IrisClass::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| format!("unknown class '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    /// Sepal length, sepal width, petal length, petal width (cm).
    pub attributes: [f64; 4],
    pub class: IrisClass,
}

/// Parses comma-separated `a,b,c,d,class` lines. Blank lines are skipped.
pub fn parse_iris(text: &str) -> Result<Vec<LabeledSample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                i + 1,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let mut attributes = [0.0; 4];
        for (a, f) in attributes.iter_mut().zip(&fields[..4]) {
            *a = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| Error::parse(i + 1, format!("bad attribute '{f}'")))?;
        }
        let class = fields[4].parse().map_err(|e| Error::parse(i + 1, e))?;
        out.push(LabeledSample { attributes, class });
    }
    if out.is_empty() {
        return Err(Error::param("iris data contains no samples"));
    }
    Ok(out)
}

pub fn iris_load(path: &Path) -> Result<Vec<LabeledSample>> {
    parse_iris(&fs::read_to_string(path)?)
}

/// One pattern per sample: a bias spike followed by the receptive fields of
/// each attribute in turn.
pub fn iris_encode(
    samples: &[LabeledSample],
    grf: &GrfConfig,
    dt_ms: f64,
) -> Result<Vec<SpikePattern>> {
    samples
        .iter()
        .map(|s| {
            let mut inputs = Vec::with_capacity(1 + 4 * grf.neurons);
            inputs.push(Some(IRIS_BIAS_MS));
            for &a in &s.attributes {
                inputs.extend(grf_encode(a, grf, dt_ms)?);
            }
            Ok(SpikePattern {
                inputs,
                desired: Target::Spike(s.class.target_ms()),
            })
        })
        .collect()
}

/// Sample indices (ascending) of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold partition with rotating contiguous training blocks.
///
/// Each class keeps its samples in file order (or shuffled once when `seed`
/// is given). Fold `f` trains on `train_per_class` consecutive samples of
/// every class starting at offset `f * n_c / k`, wrapping around, and
/// validates on the rest of the data set.
pub fn kfold_split(
    samples: &[LabeledSample],
    train_per_class: usize,
    k: usize,
    seed: Option<u64>,
) -> Result<Vec<Fold>> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    if train_per_class == 0 {
        return Err(Error::param("train_per_class must be at least 1"));
    }
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut by_class = Vec::new();
    for class in IrisClass::ALL {
        let mut idx: Vec<usize> = (0..samples.len())
            .filter(|&i| samples[i].class == class)
            .collect();
        if idx.is_empty() {
            continue;
        }
        if train_per_class >= idx.len() {
            return Err(Error::param(format!(
                "train_per_class {train_per_class} leaves no validation samples for {class} ({} samples)",
                idx.len()
            )));
        }
        if k > idx.len() {
            return Err(Error::param(format!(
                "k = {k} exceeds the {} samples of {class}",
                idx.len()
            )));
        }
        if let Some(rng) = rng.as_mut() {
            idx.shuffle(rng);
        }
        by_class.push(idx);
    }
    if by_class.is_empty() {
        return Err(Error::param("no samples to split"));
    }
    Ok((0..k)
        .map(|f| {
            let mut in_train = vec![false; samples.len()];
            for idx in &by_class {
                let n = idx.len();
                let offset = f * n / k;
                for t in 0..train_per_class {
                    in_train[idx[(offset + t) % n]] = true;
                }
            }
            let (train, validation) = (0..samples.len()).partition(|&i| in_train[i]);
            Fold { train, validation }
        })
        .collect())
}

/// Patterns whose first output spike is missing, unwanted, or more than
/// `tolerance_ms` away from the target.
pub fn count_misclassified(
    actual: &[Option<f64>],
    desired: &[Target],
    tolerance_ms: f64,
) -> Result<usize> {
    if actual.len() != desired.len() {
        return Err(Error::shape(format!(
            "{} outputs for {} targets",
            actual.len(),
            desired.len()
        )));
    }
    Ok(actual
        .iter()
        .zip(desired)
        .filter(|(a, d)| match (a, d) {
            (Some(t), Target::Spike(td)) => (t - td).abs() > tolerance_ms,
            (None, Target::Silent) => false,
            _ => true,
        })
        .count())
}

/// Scores every fold's validation outputs against its targets and
/// summarizes the misclassification counts over `dataset_size` samples.
pub fn classify_outputs(
    folds: &[(Vec<Option<f64>>, Vec<Target>)],
    tolerance_ms: f64,
    dataset_size: usize,
) -> Result<CvSummary> {
    if !(tolerance_ms > 0.0) {
        return Err(Error::param(format!(
            "tolerance must be > 0 ms, got {tolerance_ms}"
        )));
    }
    let errors = folds
        .iter()
        .map(|(a, d)| count_misclassified(a, d, tolerance_ms))
        .collect::<Result<Vec<_>>>()?;
    CvSummary::new(errors, dataset_size)
}

/// Cross-validation result: misclassified counts per fold, their mean, and
/// the accuracy that mean implies on the whole data set.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub fold_errors: Vec<usize>,
    pub mean_errors: f64,
    pub accuracy_pct: f64,
}

impl CvSummary {
    pub fn new(fold_errors: Vec<usize>, dataset_size: usize) -> Result<Self> {
        if fold_errors.is_empty() || dataset_size == 0 {
            return Err(Error::param(
                "summary needs at least one fold and a non-empty data set",
            ));
        }
        let mean_errors = fold_errors.iter().sum::<usize>() as f64 / fold_errors.len() as f64;
        Ok(CvSummary {
            accuracy_pct: 100.0 * (1.0 - mean_errors / dataset_size as f64),
            fold_errors,
            mean_errors,
        })
    }
}
