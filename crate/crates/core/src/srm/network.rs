use std::fmt;

use crate::error::{Error, Result};
use crate::genome::QuantScheme;

/// Neuron count per layer. Layer 0 holds the non-computing input emitters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Topology(Vec<usize>);

impl Topology {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::param("a topology needs at least 2 layers"));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::param("every layer needs at least one neuron"));
        }
        Ok(Topology(layer_sizes))
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn num_layers(&self) -> usize {
        self.0.len()
    }

    pub fn inputs(&self) -> usize {
        self.0[0]
    }

    pub fn outputs(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    /// `(presynaptic, postsynaptic)` sizes for each adjacent layer pair.
    pub fn layer_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn num_synapses(&self) -> usize {
        self.layer_pairs().map(|(pre, post)| pre * post).sum()
    }

    pub fn computing_neurons(&self) -> usize {
        self.0[1..].iter().sum()
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    pub weight: f64,
    pub delay_ms: f64,
}

/// Synapses between two adjacent layers, row-major over
/// `(postsynaptic j, presynaptic i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseMatrix {
    post: usize,
    pre: usize,
    data: Vec<Synapse>,
}

impl SynapseMatrix {
    pub fn new(post: usize, pre: usize, data: Vec<Synapse>) -> Result<Self> {
        if data.len() != post * pre {
            return Err(Error::shape(format!(
                "{post}x{pre} synapse matrix needs {} entries, got {}",
                post * pre,
                data.len()
            )));
        }
        Ok(SynapseMatrix { post, pre, data })
    }

    pub fn filled(post: usize, pre: usize, syn: Synapse) -> Self {
        SynapseMatrix {
            post,
            pre,
            data: vec![syn; post * pre],
        }
    }

    pub fn post(&self) -> usize {
        self.post
    }

    pub fn pre(&self) -> usize {
        self.pre
    }

    pub fn get(&self, j: usize, i: usize) -> Synapse {
        self.data[j * self.pre + i]
    }

    pub fn row(&self, j: usize) -> &[Synapse] {
        &self.data[j * self.pre..(j + 1) * self.pre]
    }

    pub fn as_slice(&self) -> &[Synapse] {
        &self.data
    }
}

/// A fully connected feed-forward network whose weights and delays are all
/// levels of one quantization scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedNetwork {
    topology: Topology,
    scheme: QuantScheme,
    layers: Vec<SynapseMatrix>,
}

impl QuantizedNetwork {
    pub fn new(
        topology: Topology,
        scheme: QuantScheme,
        layers: Vec<SynapseMatrix>,
    ) -> Result<Self> {
        if layers.len() != topology.num_layers() - 1 {
            return Err(Error::shape(format!(
                "topology [{topology}] needs {} synapse matrices, got {}",
                topology.num_layers() - 1,
                layers.len()
            )));
        }
        for (l, ((pre, post), m)) in topology.layer_pairs().zip(&layers).enumerate() {
            if m.pre != pre || m.post != post {
                return Err(Error::shape(format!(
                    "layer pair {l}: expected {post}x{pre} matrix, got {}x{}",
                    m.post, m.pre
                )));
            }
            for s in &m.data {
                scheme.encode_weight(s.weight)?;
                scheme.encode_delay(s.delay_ms)?;
            }
        }
        Ok(QuantizedNetwork {
            topology,
            scheme,
            layers,
        })
    }

    /// Every synapse set to the same `(weight, delay)`.
    pub fn uniform(topology: Topology, scheme: QuantScheme, syn: Synapse) -> Result<Self> {
        let layers = topology
            .layer_pairs()
            .map(|(pre, post)| SynapseMatrix::filled(post, pre, syn))
            .collect();
        Self::new(topology, scheme, layers)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn scheme(&self) -> QuantScheme {
        self.scheme
    }

    /// Matrix `l` connects layer `l` to layer `l + 1`.
    pub fn layers(&self) -> &[SynapseMatrix] {
        &self.layers
    }

    /// All synapses in chromosome order.
    pub fn synapses(&self) -> impl Iterator<Item = &Synapse> + '_ {
        self.layers.iter().flat_map(|m| m.data.iter())
    }
}
