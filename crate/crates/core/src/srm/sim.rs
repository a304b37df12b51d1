use super::{epsilon, rho, MembraneTrace, QuantizedNetwork, SimParams, SpikeTrain};
use crate::error::{Error, Result};

/// A weighted presynaptic spike reaching the soma at `time_ms`
/// (presynaptic spike time plus synaptic delay).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time_ms: f64,
    pub weight: f64,
}

impl Arrival {
    pub fn new(time_ms: f64, weight: f64) -> Self {
        Arrival { time_ms, weight }
    }
}

/// Arrivals split by whether they land exactly on a grid sample. On-grid
/// arrivals read the kernel from a table; the rest evaluate it directly.
#[derive(Debug, Default)]
struct ArrivalSet {
    on_grid: Vec<(usize, f64)>,
    off_grid: Vec<(f64, f64)>,
}

impl ArrivalSet {
    fn clear(&mut self) {
        self.on_grid.clear();
        self.off_grid.clear();
    }

    /// Sample index before which the potential is identically zero.
    fn quiet_until(&self) -> usize {
        if !self.off_grid.is_empty() {
            return 0;
        }
        self.on_grid
            .iter()
            .map(|&(s, _)| s)
            .min()
            .unwrap_or(usize::MAX)
    }
}

/// Output of a network run.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRun {
    /// Spike trains for every layer, inputs included.
    pub trains: Vec<Vec<SpikeTrain>>,
    /// Membrane traces for every computing layer (layer 1 onwards) when
    /// tracing was requested.
    pub traces: Option<Vec<Vec<MembraneTrace>>>,
}

impl NetworkRun {
    pub fn outputs(&self) -> &[SpikeTrain] {
        self.trains.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn first_output_spikes(&self) -> Vec<Option<f64>> {
        self.outputs().iter().map(SpikeTrain::first).collect()
    }
}

/// Validated parameters plus kernel tables sampled on the simulation grid.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: SimParams,
    eps: Vec<f64>,
    rho: Vec<f64>,
}

impl Simulator {
    pub fn new(params: SimParams) -> Result<Self> {
        params.validate()?;
        let n = params.steps();
        let eps = (0..=n)
            .map(|k| epsilon(params.time_at(k), params.tau_ms, params.kernel_mode))
            .collect();
        let rho = (0..=n)
            .map(|k| rho(params.time_at(k), params.theta, params.tau_r_ms))
            .collect();
        Ok(Simulator { params, eps, rho })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    fn push_arrival(&self, set: &mut ArrivalSet, time_ms: f64, weight: f64) {
        if weight == 0.0 {
            return;
        }
        match self.params.grid_index(time_ms) {
            Some(s) if s >= 0 => {
                // beyond the horizon it never contributes
                if (s as usize) <= self.params.steps() {
                    set.on_grid.push((s as usize, weight));
                }
            }
            _ => {
                if time_ms < self.params.sim_time_ms {
                    set.off_grid.push((time_ms, weight));
                }
            }
        }
    }

    fn arrival_set(&self, arrivals: &[Arrival]) -> Result<ArrivalSet> {
        let mut set = ArrivalSet::default();
        for a in arrivals {
            if !a.time_ms.is_finite() || !a.weight.is_finite() {
                return Err(Error::param("arrival times and weights must be finite"));
            }
            if a.time_ms < 0.0 {
                return Err(Error::param(format!(
                    "arrival time {} ms precedes the simulation start",
                    a.time_ms
                )));
            }
            self.push_arrival(&mut set, a.time_ms, a.weight);
        }
        Ok(set)
    }

    /// Runs one neuron over the grid and returns the sample indices at which
    /// it fired. When `trace` is given it receives every sample of `u`.
    fn integrate(&self, set: &ArrivalSet, mut trace: Option<&mut Vec<f64>>) -> Vec<usize> {
        let p = &self.params;
        let n = p.steps();
        let mut spikes = Vec::new();
        let start = match trace.as_deref_mut() {
            Some(buf) => {
                buf.clear();
                0
            }
            None => set.quiet_until(),
        };
        if let Some(buf) = trace.as_deref_mut() {
            buf.reserve(n + 1);
        }
        if start > n {
            return spikes;
        }

        let mut prev = 0.0;
        let mut last: Option<usize> = None;
        for k in start..=n {
            let mut u = 0.0;
            for &(s, w) in &set.on_grid {
                if k > s {
                    u += w * self.eps[k - s];
                }
            }
            if !set.off_grid.is_empty() {
                let t = p.time_at(k);
                for &(a, w) in &set.off_grid {
                    u += w * epsilon(t - a, p.tau_ms, p.kernel_mode);
                }
            }
            if let Some(f) = last {
                u += self.rho[k - f];
            }
            if spikes.len() < p.max_spikes && u >= p.theta && u > prev {
                spikes.push(k);
                last = Some(k);
            }
            match trace.as_deref_mut() {
                Some(buf) => buf.push(u),
                None if spikes.len() >= p.max_spikes => break,
                None => {}
            }
            prev = u;
        }
        spikes
    }

    fn to_train(&self, steps: &[usize]) -> SpikeTrain {
        SpikeTrain::from_sim(steps.iter().map(|&k| self.params.time_at(k)).collect())
    }

    fn grid(&self) -> Vec<f64> {
        (0..=self.params.steps())
            .map(|k| self.params.time_at(k))
            .collect()
    }

    pub fn neuron_spikes(&self, arrivals: &[Arrival]) -> Result<SpikeTrain> {
        let set = self.arrival_set(arrivals)?;
        Ok(self.to_train(&self.integrate(&set, None)))
    }

    pub fn neuron_trace(&self, arrivals: &[Arrival]) -> Result<MembraneTrace> {
        let set = self.arrival_set(arrivals)?;
        let mut u = Vec::new();
        let steps = self.integrate(&set, Some(&mut u));
        Ok(MembraneTrace {
            grid: self.grid(),
            u,
            spikes: self.to_train(&steps),
        })
    }

    /// Runs the network layer by layer. Input spike times must lie on the
    /// simulation grid.
    pub fn run_network(
        &self,
        net: &QuantizedNetwork,
        inputs: &[SpikeTrain],
        trace: bool,
    ) -> Result<NetworkRun> {
        let topo = net.topology();
        if inputs.len() != topo.inputs() {
            return Err(Error::shape(format!(
                "topology [{topo}] has {} inputs, got {} spike trains",
                topo.inputs(),
                inputs.len()
            )));
        }
        // spikes of the previous layer, as times
        let mut layer_times: Vec<Vec<f64>> = Vec::with_capacity(inputs.len());
        for (i, train) in inputs.iter().enumerate() {
            for &t in train.times() {
                if self.params.grid_index(t).is_none() {
                    return Err(Error::param(format!(
                        "input {i}: spike at {t} ms is not on the {} ms grid",
                        self.params.dt_ms
                    )));
                }
            }
            layer_times.push(train.times().to_vec());
        }

        let mut trains = vec![inputs.to_vec()];
        let mut traces = trace.then(Vec::new);
        let mut set = ArrivalSet::default();
        let mut buf = Vec::new();
        for matrix in net.layers() {
            let mut next_times = Vec::with_capacity(matrix.post());
            let mut layer_traces = Vec::new();
            for j in 0..matrix.post() {
                set.clear();
                for (i, syn) in matrix.row(j).iter().enumerate() {
                    for &t in &layer_times[i] {
                        self.push_arrival(&mut set, t + syn.delay_ms, syn.weight);
                    }
                }
                let steps = if trace {
                    let s = self.integrate(&set, Some(&mut buf));
                    layer_traces.push(MembraneTrace {
                        grid: self.grid(),
                        u: buf.clone(),
                        spikes: self.to_train(&s),
                    });
                    s
                } else {
                    self.integrate(&set, None)
                };
                next_times.push(
                    steps
                        .iter()
                        .map(|&k| self.params.time_at(k))
                        .collect::<Vec<_>>(),
                );
            }
            trains.push(
                next_times
                    .iter()
                    .map(|t| SpikeTrain::from_sim(t.clone()))
                    .collect(),
            );
            if let Some(all) = traces.as_mut() {
                all.push(layer_traces);
            }
            layer_times = next_times;
        }
        Ok(NetworkRun { trains, traces })
    }
}

/// Simulates a single neuron driven by `arrivals` and returns its sampled
/// membrane potential together with the spikes it emitted.
pub fn simulate_neuron(arrivals: &[Arrival], params: &SimParams) -> Result<MembraneTrace> {
    Simulator::new(params.clone())?.neuron_trace(arrivals)
}

pub fn simulate_network(
    net: &QuantizedNetwork,
    inputs: &[SpikeTrain],
    params: &SimParams,
    trace: bool,
) -> Result<NetworkRun> {
    Simulator::new(params.clone())?.run_network(net, inputs, trace)
}
