//! Bit-string chromosomes and the 3-bit weight/delay quantization schemes.
//!
//! Each synapse takes 6 bits: a 3-bit delay genotype followed by a 3-bit
//! weight genotype, both read most-significant bit first. Synapses are laid
//! out layer pair by layer pair starting at the inputs, and within a pair by
//! postsynaptic neuron, then presynaptic neuron.

mod file;

pub use file::{
    parse_network, parse_table_text, write_network, write_static_array_source, write_table_text,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::srm::{QuantizedNetwork, Synapse, SynapseMatrix, Topology};

pub const BITS_PER_FIELD: usize = 3;
pub const BITS_PER_SYNAPSE: usize = 2 * BITS_PER_FIELD;
pub const LEVELS: u8 = 1 << BITS_PER_FIELD;

/// The two weight codomains. Delays are `1..=8` ms in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantScheme {
    /// `{2, 1.5, 1, .., -1.5}`: one binary decimal place.
    Decimal,
    /// `{4, 3, 2, .., -3}`.
    Integer,
}

impl QuantScheme {
    pub const ALL: [QuantScheme; 2] = [QuantScheme::Decimal, QuantScheme::Integer];

    pub fn name(self) -> &'static str {
        match self {
            QuantScheme::Decimal => "decimal",
            QuantScheme::Integer => "integer",
        }
    }

    /// Weights are `(WEIGHT_OFFSET - level) / divisor`.
    pub fn weight_divisor(self) -> u8 {
        match self {
            QuantScheme::Decimal => 2,
            QuantScheme::Integer => 1,
        }
    }

    pub fn decode_weight(self, level: u8) -> Result<f64> {
        check_level(level)?;
        Ok(f64::from(WEIGHT_OFFSET - i16::from(level)) / f64::from(self.weight_divisor()))
    }

    pub fn encode_weight(self, weight: f64) -> Result<u8> {
        let scaled = weight * f64::from(self.weight_divisor());
        let level = f64::from(WEIGHT_OFFSET) - scaled;
        if level.fract() == 0.0 && (0.0..f64::from(LEVELS)).contains(&level) {
            Ok(level as u8)
        } else {
            Err(Error::Quantization {
                what: "weight",
                value: weight,
                scheme: self.name(),
            })
        }
    }

    pub fn decode_delay(self, level: u8) -> Result<f64> {
        decode_delay(level)
    }

    pub fn encode_delay(self, delay_ms: f64) -> Result<u8> {
        if delay_ms.fract() == 0.0 && (1.0..=f64::from(LEVELS)).contains(&delay_ms) {
            Ok(delay_ms as u8 - 1)
        } else {
            Err(Error::Quantization {
                what: "delay",
                value: delay_ms,
                scheme: self.name(),
            })
        }
    }

    pub fn weights(self) -> [f64; LEVELS as usize] {
        std::array::from_fn(|g| self.decode_weight(g as u8).unwrap())
    }
}

impl fmt::Display for QuantScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuantScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decimal" => Ok(QuantScheme::Decimal),
            "integer" => Ok(QuantScheme::Integer),
            other => Err(Error::param(format!(
                "unknown scheme '{other}' (expected decimal or integer)"
            ))),
        }
    }
}

/// Level 0 decodes to the largest weight in both schemes.
pub const WEIGHT_OFFSET: i16 = 4;

fn check_level(level: u8) -> Result<()> {
    if level < LEVELS {
        Ok(())
    } else {
        Err(Error::param(format!(
            "genotype {level} does not fit in 3 bits"
        )))
    }
}

/// Delay in ms for a 3-bit genotype: value + 1.
pub fn decode_delay(level: u8) -> Result<f64> {
    check_level(level)?;
    Ok(f64::from(level) + 1.0)
}

pub fn decode_weight(level: u8, scheme: QuantScheme) -> Result<f64> {
    scheme.decode_weight(level)
}

pub fn chromosome_length(topology: &Topology) -> usize {
    BITS_PER_SYNAPSE * topology.num_synapses()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
}

impl Chromosome {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Chromosome { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Chromosome {
            bits: vec![false; len],
        }
    }

    pub fn ones(len: usize) -> Self {
        Chromosome {
            bits: vec![true; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn flip(&mut self, k: usize) {
        self.bits[k] = !self.bits[k];
    }

    /// Unsigned value of `BITS_PER_FIELD` bits starting at `start`, MSB first.
    fn field(&self, start: usize) -> u8 {
        self.bits[start..start + BITS_PER_FIELD]
            .iter()
            .fold(0u8, |acc, &b| (acc << 1) | u8::from(b))
    }

    fn set_field(&mut self, start: usize, value: u8) {
        for (o, bit) in self.bits[start..start + BITS_PER_FIELD]
            .iter_mut()
            .enumerate()
        {
            *bit = (value >> (BITS_PER_FIELD - 1 - o)) & 1 == 1;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        f.write_str(&s)
    }
}

impl FromStr for Chromosome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::param(format!("invalid bit '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Chromosome::from_bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Delay,
    Weight,
}

/// What a single chromosome bit controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitLocation {
    /// Index into the network's synapses in chromosome order.
    pub synapse: usize,
    /// Layer pair; 0 connects the inputs to the first computing layer.
    pub layer_pair: usize,
    pub post: usize,
    pub pre: usize,
    pub field: Field,
    /// 0 is the most significant bit of the field.
    pub bit: usize,
}

/// Maps a chromosome bit index to the synapse field it belongs to.
pub fn locate_bit(topology: &Topology, k: usize) -> Option<BitLocation> {
    if k >= chromosome_length(topology) {
        return None;
    }
    let synapse = k / BITS_PER_SYNAPSE;
    let within = k % BITS_PER_SYNAPSE;
    let mut offset = synapse;
    for (layer_pair, (pre, post)) in topology.layer_pairs().enumerate() {
        if offset < pre * post {
            return Some(BitLocation {
                synapse,
                layer_pair,
                post: offset / pre,
                pre: offset % pre,
                field: if within < BITS_PER_FIELD {
                    Field::Delay
                } else {
                    Field::Weight
                },
                bit: within % BITS_PER_FIELD,
            });
        }
        offset -= pre * post;
    }
    None
}

pub fn decode_chromosome(
    chromosome: &Chromosome,
    topology: &Topology,
    scheme: QuantScheme,
) -> Result<QuantizedNetwork> {
    let expected = chromosome_length(topology);
    if chromosome.len() != expected {
        return Err(Error::shape(format!(
            "topology [{topology}] needs a {expected}-bit chromosome, got {} bits",
            chromosome.len()
        )));
    }
    let weights = scheme.weights();
    let mut cursor = 0;
    let mut layers = Vec::with_capacity(topology.num_layers() - 1);
    for (pre, post) in topology.layer_pairs() {
        let mut data = Vec::with_capacity(pre * post);
        for _ in 0..pre * post {
            let d = chromosome.field(cursor);
            let w = chromosome.field(cursor + BITS_PER_FIELD);
            data.push(Synapse {
                weight: weights[w as usize],
                delay_ms: f64::from(d) + 1.0,
            });
            cursor += BITS_PER_SYNAPSE;
        }
        layers.push(SynapseMatrix::new(post, pre, data)?);
    }
    QuantizedNetwork::new(topology.clone(), scheme, layers)
}

/// Inverse of [`decode_chromosome`]. Values are never snapped to the nearest
/// level; anything off the scheme's levels is an error.
pub fn encode_network(net: &QuantizedNetwork, scheme: QuantScheme) -> Result<Chromosome> {
    let mut c = Chromosome::zeros(chromosome_length(net.topology()));
    for (s, syn) in net.synapses().enumerate() {
        let base = s * BITS_PER_SYNAPSE;
        c.set_field(base, scheme.encode_delay(syn.delay_ms)?);
        c.set_field(base + BITS_PER_FIELD, scheme.encode_weight(syn.weight)?);
    }
    Ok(c)
}
