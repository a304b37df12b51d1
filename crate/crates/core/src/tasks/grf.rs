use crate::error::{Error, Result};

/// Gaussian receptive field population coding of a scalar attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct GrfConfig {
    /// Receptive fields per attribute (at least 3).
    pub neurons: usize,
    pub i_min: f64,
    pub i_max: f64,
    /// Width control; larger values give narrower fields.
    pub gamma: f64,
    /// Activations below this produce no spike.
    pub fire_threshold: f64,
    /// Attributes are multiplied by this before coding.
    pub data_scale: f64,
}

impl Default for GrfConfig {
    fn default() -> Self {
        GrfConfig {
            neurons: 8,
            i_min: 0.0,
            i_max: 50.0,
            gamma: 1.5,
            fire_threshold: 0.1,
            data_scale: 10.0,
        }
    }
}

impl GrfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neurons < 3 {
            return Err(Error::param(format!(
                "grf neurons must be >= 3, got {}",
                self.neurons
            )));
        }
        if !(self.i_max > self.i_min) || !self.i_min.is_finite() || !self.i_max.is_finite() {
            return Err(Error::param("grf input range must satisfy i_min < i_max"));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::param("grf gamma must be positive"));
        }
        if !(self.fire_threshold > 0.0 && self.fire_threshold < 1.0) {
            return Err(Error::param("grf fire threshold must lie in (0, 1)"));
        }
        if !(self.data_scale > 0.0) || !self.data_scale.is_finite() {
            return Err(Error::param("grf data scale must be positive"));
        }
        Ok(())
    }
}

/// Field centers (in order) and the shared width.
pub fn grf_centers_width(cfg: &GrfConfig) -> Result<(Vec<f64>, f64)> {
    cfg.validate()?;
    let span = (cfg.i_max - cfg.i_min) / (cfg.neurons - 2) as f64;
    let centers = (1..=cfg.neurons)
        .map(|i| cfg.i_min + (2.0 * i as f64 - 3.0) / 2.0 * span)
        .collect();
    Ok((centers, span / cfg.gamma))
}

/// Spike times of the receptive fields for one attribute value.
///
/// A strong activation `g` fires early: `t = 10 - round(10 g)` on the
/// `dt_ms` grid, never earlier than `dt_ms`.
pub fn grf_encode(x: f64, cfg: &GrfConfig, dt_ms: f64) -> Result<Vec<Option<f64>>> {
    if !x.is_finite() {
        return Err(Error::param(format!("attribute value {x} is not finite")));
    }
    if !(dt_ms > 0.0) || !dt_ms.is_finite() {
        return Err(Error::param("dt must be positive"));
    }
    let (centers, sigma) = grf_centers_width(cfg)?;
    let v = x * cfg.data_scale;
    let horizon = (10.0 / dt_ms).round() as i64;
    Ok(centers
        .iter()
        .map(|c| {
            let g = (-(v - c).powi(2) / (2.0 * sigma * sigma)).exp();
            if g < cfg.fire_threshold {
                return None;
            }
            let steps = (horizon - (10.0 * g / dt_ms).round() as i64).max(1);
            Some(steps as f64 * dt_ms)
        })
        .collect())
}
