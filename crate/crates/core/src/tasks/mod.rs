//! Benchmark tasks: spike-time XOR and the iris data set encoded with
//! Gaussian receptive fields, plus k-fold evaluation helpers.

mod grf;
mod iris;
mod xor;

pub use grf::{grf_centers_width, grf_encode, GrfConfig};
pub use iris::{
    classify_outputs, count_misclassified, iris_encode, iris_load, kfold_split, parse_iris,
    CvSummary, Fold, IrisClass, LabeledSample, IRIS_BIAS_MS, IRIS_DATA,
};
pub use xor::{xor_patterns, XorVariant};

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::evolve::{objective, ErrorMode, Fitness, Target};
use crate::genome::{chromosome_length, decode_chromosome, Chromosome, QuantScheme};
use crate::srm::{QuantizedNetwork, SimParams, Simulator, SpikeTrain, Topology};

/// Input spike times (one per input neuron, `None` = no spike) and the
/// desired output.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikePattern {
    pub inputs: Vec<Option<f64>>,
    pub desired: Target,
}

impl SpikePattern {
    pub fn input_trains(&self) -> Result<Vec<SpikeTrain>> {
        self.inputs
            .iter()
            .map(|t| match t {
                Some(t) => SpikeTrain::single(*t),
                None => Ok(SpikeTrain::empty()),
            })
            .collect()
    }
}

/// Writes `pattern, in1..inN, desired_ms` rows; `0` marks "no spike".
pub fn write_patterns<W: Write>(mut w: W, patterns: &[SpikePattern]) -> io::Result<()> {
    let width = patterns.first().map_or(0, |p| p.inputs.len());
    write!(w, "pattern")?;
    for i in 1..=width {
        write!(w, "\tin{i}")?;
    }
    writeln!(w, "\tdesired_ms")?;
    for (k, p) in patterns.iter().enumerate() {
        write!(w, "{k}")?;
        for t in &p.inputs {
            write!(w, "\t{}", t.unwrap_or(0.0))?;
        }
        writeln!(w, "\t{}", p.desired.time().unwrap_or(0.0))?;
    }
    Ok(())
}

/// A supervised spike-timing task: a fixed architecture and scheme, a set
/// of patterns, and the simulator settings used to score networks.
#[derive(Debug, Clone)]
pub struct SpikeTask {
    topology: Topology,
    scheme: QuantScheme,
    sim: Simulator,
    patterns: Vec<SpikePattern>,
    inputs: Vec<Vec<SpikeTrain>>,
    miss_penalty: f64,
    mode: ErrorMode,
}

impl SpikeTask {
    pub fn new(
        topology: Topology,
        scheme: QuantScheme,
        params: SimParams,
        patterns: Vec<SpikePattern>,
        miss_penalty: f64,
    ) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::param("a task needs at least one pattern"));
        }
        if topology.outputs() != 1 {
            return Err(Error::shape("tasks are scored on a single output neuron"));
        }
        let sim = Simulator::new(params)?;
        let mut inputs = Vec::with_capacity(patterns.len());
        for (k, p) in patterns.iter().enumerate() {
            if p.inputs.len() != topology.inputs() {
                return Err(Error::shape(format!(
                    "pattern {k} has {} inputs, topology [{topology}] expects {}",
                    p.inputs.len(),
                    topology.inputs()
                )));
            }
            let times = p.inputs.iter().flatten().copied().chain(p.desired.time());
            for t in times {
                if !(t > 0.0) || sim.params().grid_index(t).is_none() {
                    return Err(Error::param(format!(
                        "pattern {k}: time {t} ms must be > 0 and on the {} ms grid",
                        sim.params().dt_ms
                    )));
                }
            }
            inputs.push(p.input_trains()?);
        }
        Ok(SpikeTask {
            topology,
            scheme,
            sim,
            patterns,
            inputs,
            miss_penalty,
            mode: ErrorMode::Mse,
        })
    }

    pub fn with_mode(mut self, mode: ErrorMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn scheme(&self) -> QuantScheme {
        self.scheme
    }

    pub fn params(&self) -> &SimParams {
        self.sim.params()
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn patterns(&self) -> &[SpikePattern] {
        &self.patterns
    }

    pub fn targets(&self) -> Vec<Target> {
        self.patterns.iter().map(|p| p.desired).collect()
    }

    pub fn chromosome_len(&self) -> usize {
        chromosome_length(&self.topology)
    }

    fn check_network(&self, net: &QuantizedNetwork) -> Result<()> {
        if net.topology() != &self.topology {
            return Err(Error::shape(format!(
                "network topology [{}] does not match task topology [{}]",
                net.topology(),
                self.topology
            )));
        }
        Ok(())
    }

    /// Output spike train of every pattern.
    pub fn outputs(&self, net: &QuantizedNetwork) -> Result<Vec<SpikeTrain>> {
        self.check_network(net)?;
        self.inputs
            .iter()
            .map(|inp| {
                let run = self.sim.run_network(net, inp, false)?;
                Ok(run.outputs()[0].clone())
            })
            .collect()
    }

    pub fn evaluate_network(&self, net: &QuantizedNetwork) -> Result<f64> {
        objective(
            &self.outputs(net)?,
            &self.targets(),
            self.mode,
            self.miss_penalty,
        )
    }

    pub fn misclassified(&self, net: &QuantizedNetwork, tolerance_ms: f64) -> Result<usize> {
        let firsts: Vec<_> = self.outputs(net)?.iter().map(SpikeTrain::first).collect();
        count_misclassified(&firsts, &self.targets(), tolerance_ms)
    }

    pub fn decode(&self, chromosome: &Chromosome) -> Result<QuantizedNetwork> {
        decode_chromosome(chromosome, &self.topology, self.scheme)
    }
}

impl Fitness for SpikeTask {
    fn evaluate(&self, chromosome: &Chromosome) -> Result<f64> {
        self.evaluate_network(&self.decode(chromosome)?)
    }
}
