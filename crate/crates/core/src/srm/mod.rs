//! Discrete-time simulation of feed-forward SRM0 networks.
//!
//! Every computing neuron sums a weighted postsynaptic kernel for each
//! delayed presynaptic spike and a refractory kernel keyed to its own most
//! recent spike:
//!
//! ```text
//! u_j(t) = rho(t - t_j) + sum_i sum_g w_ji * eps(t - t_i^g - d_ji)
//! ```
//!
//! The potential is sampled on a fixed grid `0, dt, 2dt, .., sim_time`. A
//! spike is emitted at the first sample where the potential is at or above
//! the threshold and strictly higher than the previous sample.

mod network;
mod sim;
mod trace;

pub use network::{QuantizedNetwork, Synapse, SynapseMatrix, Topology};
pub use sim::{simulate_network, simulate_neuron, Arrival, NetworkRun, Simulator};
pub use trace::{neuron_labels, write_trace_table};

use crate::error::{Error, Result};

/// Shape of the postsynaptic kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMode {
    /// `(t/tau) * exp(1 - t/tau)`, peaking at exactly 1 when `t = tau`.
    #[default]
    Normalized,
    /// `(t/tau) * exp(-t/tau)`, peaking at `1/e`.
    Unscaled,
}

impl KernelMode {
    pub fn name(self) -> &'static str {
        match self {
            KernelMode::Normalized => "normalized",
            KernelMode::Unscaled => "unscaled",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "normalized" => Some(KernelMode::Normalized),
            "unscaled" => Some(KernelMode::Unscaled),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub sim_time_ms: f64,
    pub dt_ms: f64,
    pub tau_ms: f64,
    pub tau_r_ms: f64,
    pub theta: f64,
    pub max_spikes: usize,
    pub kernel_mode: KernelMode,
}

impl Default for SimParams {
    /// The XOR network settings: 50 ms at 1 ms resolution, tau 3 ms,
    /// tau_R 20 ms, threshold 1.5, at most 10 spikes per neuron.
    fn default() -> Self {
        SimParams {
            sim_time_ms: 50.0,
            dt_ms: 1.0,
            tau_ms: 3.0,
            tau_r_ms: 20.0,
            theta: 1.5,
            max_spikes: 10,
            kernel_mode: KernelMode::Normalized,
        }
    }
}

/// Relative slack used when deciding whether a time falls on the grid.
const GRID_EPS: f64 = 1e-9;

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.sim_time_ms,
            self.dt_ms,
            self.tau_ms,
            self.tau_r_ms,
            self.theta,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("simulation parameters must be finite"));
        }
        if self.dt_ms <= 0.0 {
            return Err(Error::param(format!(
                "dt_ms must be > 0, got {}",
                self.dt_ms
            )));
        }
        if self.sim_time_ms < 0.0 {
            return Err(Error::param("sim_time_ms must be >= 0"));
        }
        let ratio = self.sim_time_ms / self.dt_ms;
        if (ratio - ratio.round()).abs() > GRID_EPS * ratio.max(1.0) {
            return Err(Error::param(format!(
                "sim_time_ms {} is not a multiple of dt_ms {}",
                self.sim_time_ms, self.dt_ms
            )));
        }
        if self.tau_ms <= 0.0 {
            return Err(Error::param("tau_ms must be > 0"));
        }
        if self.tau_r_ms <= 0.0 {
            return Err(Error::param("tau_r_ms must be > 0"));
        }
        if self.theta <= 0.0 {
            return Err(Error::param("theta must be > 0"));
        }
        if self.max_spikes == 0 {
            return Err(Error::param("max_spikes must be >= 1"));
        }
        Ok(())
    }

    /// Index of the last grid sample; the grid has `steps() + 1` samples.
    pub fn steps(&self) -> usize {
        (self.sim_time_ms / self.dt_ms).round() as usize
    }

    pub fn time_at(&self, step: usize) -> f64 {
        step as f64 * self.dt_ms
    }

    /// Grid index of `t` if it lies on the grid.
    pub fn grid_index(&self, t: f64) -> Option<i64> {
        let r = t / self.dt_ms;
        let k = r.round();
        ((r - k).abs() <= GRID_EPS * k.abs().max(1.0)).then_some(k as i64)
    }
}

/// Postsynaptic potential of a single unit-weight spike, `t_e` after arrival.
pub fn epsilon_kernel(t_e: f64, tau: f64, mode: KernelMode) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::param(format!("tau must be > 0, got {tau}")));
    }
    Ok(epsilon(t_e, tau, mode))
}

/// Refractory potential `t_p` after the neuron's own spike.
pub fn rho_kernel(t_p: f64, theta: f64, tau_r: f64) -> Result<f64> {
    if !(tau_r > 0.0) {
        return Err(Error::param(format!("tau_r must be > 0, got {tau_r}")));
    }
    Ok(rho(t_p, theta, tau_r))
}

#[inline]
pub(crate) fn epsilon(t_e: f64, tau: f64, mode: KernelMode) -> f64 {
    if t_e <= 0.0 {
        return 0.0;
    }
    let x = t_e / tau;
    match mode {
        KernelMode::Normalized => x * (1.0 - x).exp(),
        KernelMode::Unscaled => x * (-x).exp(),
    }
}

#[inline]
pub(crate) fn rho(t_p: f64, theta: f64, tau_r: f64) -> f64 {
    if t_p <= 0.0 {
        return 0.0;
    }
    -4.0 * theta * (-t_p / tau_r).exp()
}

/// Strictly increasing spike times in ms. Time 0 is reserved for "no spike",
/// so every stored time is positive.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpikeTrain {
    times: Vec<f64>,
}

impl SpikeTrain {
    pub fn empty() -> Self {
        SpikeTrain::default()
    }

    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::param("spike times must be finite and > 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("spike times must be strictly increasing"));
        }
        Ok(SpikeTrain { times })
    }

    pub fn single(t: f64) -> Result<Self> {
        Self::new(vec![t])
    }

    /// Simulator output: ordered, and never at t = 0 because arrivals are
    /// non-negative and the kernels vanish there.
    pub(crate) fn from_sim(times: Vec<f64>) -> Self {
        SpikeTrain { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn first(&self) -> Option<f64> {
        self.times.first().copied()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Sampled membrane potential of one neuron. `u[k]` is the potential at
/// `grid[k]`; on a spike sample it is the value before the refractory reset.
#[derive(Debug, Clone, PartialEq)]
pub struct MembraneTrace {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub spikes: SpikeTrain,
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn epsilon_examples() {
        for mode in [KernelMode::Normalized, KernelMode::Unscaled] {
            assert_eq!(epsilon_kernel(-2.0, 3.0, mode).unwrap(), 0.0);
            assert_eq!(epsilon_kernel(0.0, 3.0, mode).unwrap(), 0.0);
        }
        assert_eq!(
            epsilon_kernel(3.0, 3.0, KernelMode::Normalized).unwrap(),
            1.0
        );
        let v = epsilon_kernel(6.0, 3.0, KernelMode::Normalized).unwrap();
        assert!((v - 2.0 / E).abs() < 1e-15);
        assert!((v - 0.73576).abs() < 1e-5);
        let v = epsilon_kernel(3.0, 3.0, KernelMode::Unscaled).unwrap();
        assert!((v - 1.0 / E).abs() < 1e-15);
        assert!((v - 0.36788).abs() < 1e-5);
    }

    #[test]
    fn kernels_reject_bad_time_constants() {
        assert!(epsilon_kernel(1.0, 0.0, KernelMode::Normalized).is_err());
        assert!(epsilon_kernel(1.0, -1.0, KernelMode::Normalized).is_err());
        assert!(epsilon_kernel(1.0, f64::NAN, KernelMode::Normalized).is_err());
        assert!(rho_kernel(1.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_kernel(-1.0, 1.5, 20.0).unwrap(), 0.0);
        let near = rho_kernel(1e-12, 1.5, 20.0).unwrap();
        assert!((near + 6.0).abs() < 1e-9);
        let v = rho_kernel(20.0, 1.5, 20.0).unwrap();
        assert!((v + 6.0 / E).abs() < 1e-15);
        assert!((v + 2.20728).abs() < 1e-5);
    }

    #[test]
    fn epsilon_is_unimodal_with_peak_at_tau() {
        for mode in [KernelMode::Normalized, KernelMode::Unscaled] {
            let tau = 3.0;
            let peak = epsilon(tau, tau, mode);
            let mut prev = 0.0;
            for k in 1..=3000 {
                let t = k as f64 * 0.001;
                let v = epsilon(t, tau, mode);
                assert!(v > 0.0);
                assert!(v > prev, "rising before tau");
                assert!(v <= peak);
                prev = v;
            }
            for k in 3001..20000 {
                let t = k as f64 * 0.001;
                let v = epsilon(t, tau, mode);
                assert!(v < prev, "falling after tau");
                prev = v;
            }
        }
    }

    #[test]
    fn normalized_grid_maximum_is_one_when_tau_on_grid() {
        for (tau, dt) in [(3.0, 1.0), (3.0, 0.01), (2.5, 0.5), (7.0, 0.25)] {
            let n = (50.0_f64 / dt).round() as usize;
            let max = (0..=n)
                .map(|k| epsilon(k as f64 * dt, tau, KernelMode::Normalized))
                .fold(f64::MIN, f64::max);
            assert!((max - 1.0).abs() <= 1e-12, "tau {tau} dt {dt}: {max}");
        }
        // off-grid tau stays strictly below the peak
        let max = (0..=50)
            .map(|k| epsilon(k as f64, 2.5, KernelMode::Normalized))
            .fold(f64::MIN, f64::max);
        assert!(max < 1.0);
    }

    #[test]
    fn params_validation() {
        assert!(SimParams::default().validate().is_ok());
        let bad = [
            SimParams {
                dt_ms: 0.0,
                ..Default::default()
            },
            SimParams {
                dt_ms: 0.3,
                ..Default::default()
            },
            SimParams {
                tau_ms: 0.0,
                ..Default::default()
            },
            SimParams {
                tau_r_ms: -1.0,
                ..Default::default()
            },
            SimParams {
                theta: 0.0,
                ..Default::default()
            },
            SimParams {
                max_spikes: 0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
        let fine = SimParams {
            dt_ms: 0.01,
            ..Default::default()
        };
        fine.validate().unwrap();
        assert_eq!(fine.steps(), 5000);
    }

    #[test]
    fn spike_train_invariants() {
        assert!(SpikeTrain::new(vec![1.0, 2.0, 5.0]).is_ok());
        assert!(SpikeTrain::new(vec![0.0]).is_err());
        assert!(SpikeTrain::new(vec![2.0, 2.0]).is_err());
        assert!(SpikeTrain::new(vec![3.0, 2.0]).is_err());
        assert_eq!(SpikeTrain::empty().first(), None);
    }
}
