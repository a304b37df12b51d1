use super::SpikePattern;
use crate::evolve::Target;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XorVariant {
    /// Output fires at 17 ms for XOR = 0 and at 10 ms for XOR = 1.
    Standard,
    /// Output stays silent for XOR = 0 and fires at 10 ms for XOR = 1.
    OneNeuron,
}

const BIAS_MS: f64 = 1.0;
const LOGIC_0_MS: f64 = 1.0;
const LOGIC_1_MS: f64 = 7.0;

/// The four XOR rows as `(bias, A, B)` input spike times, in truth-table
/// order `00, 01, 10, 11`.
pub fn xor_patterns(variant: XorVariant) -> Vec<SpikePattern> {
    [(false, false), (false, true), (true, false), (true, true)]
        .into_iter()
        .map(|(a, b)| {
            let enc = |bit: bool| if bit { LOGIC_1_MS } else { LOGIC_0_MS };
            let desired = match (variant, a ^ b) {
                (_, true) => Target::Spike(10.0),
                (XorVariant::Standard, false) => Target::Spike(17.0),
                (XorVariant::OneNeuron, false) => Target::Silent,
            };
            SpikePattern {
                inputs: vec![Some(BIAS_MS), Some(enc(a)), Some(enc(b))],
                desired,
            }
        })
        .collect()
}
