use crate::error::{Error, Result};
use crate::srm::SpikeTrain;

/// Desired output of one pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// First output spike at this time (ms).
    Spike(f64),
    /// No output spike at all.
    Silent,
}

impl Target {
    pub fn time(self) -> Option<f64> {
        match self {
            Target::Spike(t) => Some(t),
            Target::Silent => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    /// Half the summed squared error.
    Lms,
    /// Mean squared error over patterns.
    #[default]
    Mse,
}

/// Squared timing error of one pattern. Only the first output spike counts.
pub(crate) fn pattern_error(actual: Option<f64>, desired: Target, miss_penalty: f64) -> f64 {
    match (actual, desired) {
        (Some(t), Target::Spike(d)) => (t - d) * (t - d),
        (None, Target::Silent) => 0.0,
        _ => miss_penalty,
    }
}

/// Training error in ms^2 over a set of patterns.
pub fn objective(
    actual: &[SpikeTrain],
    desired: &[Target],
    mode: ErrorMode,
    miss_penalty: f64,
) -> Result<f64> {
    if desired.is_empty() {
        return Err(Error::param("objective needs at least one pattern"));
    }
    if actual.len() != desired.len() {
        return Err(Error::shape(format!(
            "{} output trains for {} patterns",
            actual.len(),
            desired.len()
        )));
    }
    let total: f64 = actual
        .iter()
        .zip(desired)
        .map(|(a, &d)| pattern_error(a.first(), d, miss_penalty))
        .sum();
    Ok(match mode {
        ErrorMode::Lms => 0.5 * total,
        ErrorMode::Mse => total / desired.len() as f64,
    })
}
