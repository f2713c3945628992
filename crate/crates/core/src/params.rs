//! Model parameters of the semiclassical isotropic oscillator ensemble.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The tuple (d, E, N) with the derived semiclassical scale h = E/(N + d/2).
///
/// `h` is the single source of scale for every module; it is computed once at
/// construction so `h * (N + d/2) == E` holds to machine precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    dim: usize,
    energy: f64,
    level: u32,
    h: f64,
}

impl ModelParams {
    pub fn new(dim: usize, energy: f64, level: u32) -> Result<Self> {
        if dim < 1 {
            return Err(Error::Domain("dimension must be >= 1".into()));
        }
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::Domain(format!(
                "energy must be positive, got {energy}"
            )));
        }
        let h = energy / (level as f64 + dim as f64 / 2.0);
        Ok(Self {
            dim,
            energy,
            level,
            h,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Semiclassical parameter h = E/(N + d/2).
    pub fn h(&self) -> f64 {
        self.h
    }

    /// E/h, which by construction equals N + d/2 exactly.
    pub fn energy_over_h(&self) -> f64 {
        self.level as f64 + self.dim as f64 / 2.0
    }

    /// Classical momentum bound sqrt(2E).
    pub fn momentum_max(&self) -> f64 {
        (2.0 * self.energy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_times_level_recovers_energy() {
        for (d, e, n) in [(1, 1.0, 20), (2, 0.5, 7), (3, 2.5, 0), (5, 1.0, 100)] {
            let p = ModelParams::new(d, e, n).unwrap();
            assert!((p.h() * (n as f64 + d as f64 / 2.0) - e).abs() <= f64::EPSILON * e);
            assert_eq!(p.energy_over_h(), n as f64 + d as f64 / 2.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ModelParams::new(0, 1.0, 3).is_err());
        assert!(ModelParams::new(2, 0.0, 3).is_err());
        assert!(ModelParams::new(2, -1.0, 3).is_err());
        assert!(ModelParams::new(2, f64::NAN, 3).is_err());
    }
}
