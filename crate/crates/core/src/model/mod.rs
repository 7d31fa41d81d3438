//! Domain model shared by every other module: array geometry, scenario
//! configuration, synthetic channels and seeded randomness.

mod channels;
mod rng;
mod scenario;

pub use channels::{generate_channels, ChannelSet};
pub use rng::{streams, Draws, Rng};
pub use scenario::{scenario_preset, Preset, ScenarioConfig, DEFAULT_REFERENCE_SNR_DB, DEFAULT_SUBCARRIERS};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::scalar::{CVec, Real};

/// Uniform linear array at the transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub n_tx: usize,
    /// Element spacing `d / λ`.
    #[serde(default = "default_spacing")]
    pub spacing_wavelengths: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl Default for ArrayGeometry {
    /// Two half-wavelength spaced elements, as on the measurement testbed.
    fn default() -> Self {
        Self { n_tx: 2, spacing_wavelengths: 0.5 }
    }
}

impl ArrayGeometry {
    pub fn new(n_tx: usize, spacing_wavelengths: f64) -> Result<Self> {
        let geom = Self { n_tx, spacing_wavelengths };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 {
            return Err(IsacError::InvalidConfig("n_tx must be at least 1".into()));
        }
        if !(self.spacing_wavelengths > 0.0) || !self.spacing_wavelengths.is_finite() {
            return Err(IsacError::InvalidConfig(format!(
                "spacing_wavelengths must be positive, got {}",
                self.spacing_wavelengths
            )));
        }
        Ok(())
    }

    /// Broadside steering vector `a_0` (all ones).
    pub fn broadside<T: Real>(&self) -> CVec<T> {
        steering_vector(self, 0.0)
    }

    /// `u_0 = a_0 / sqrt(N_T)`.
    pub fn broadside_unit<T: Real>(&self) -> CVec<T> {
        let s = T::one() / T::of_usize(self.n_tx).sqrt();
        vec![Complex::new(s, T::zero()); self.n_tx]
    }
}

/// Array response towards `angle_deg` (0 is broadside): element `g` is
/// `exp(j 2π (d/λ) g sin θ)`.
pub fn steering_vector<T: Real>(geom: &ArrayGeometry, angle_deg: f64) -> CVec<T> {
    let sin = angle_deg.to_radians().sin();
    (0..geom.n_tx)
        .map(|g| {
            // Exact unit entries at broadside; the phase is evaluated in f64.
            if sin == 0.0 {
                return Complex::new(T::one(), T::zero());
            }
            let phase = std::f64::consts::TAU * geom.spacing_wavelengths * g as f64 * sin;
            Complex::from_polar(T::one(), T::of(phase))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::inner;

    fn close(a: Complex<f64>, b: Complex<f64>) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn broadside_is_all_ones() {
        for n in 1..6 {
            let geom = ArrayGeometry::new(n, 0.5).unwrap();
            let a: CVec<f64> = steering_vector(&geom, 0.0);
            assert!(a.iter().all(|z| *z == Complex::new(1.0, 0.0)));
        }
    }

    #[test]
    fn endfire_alternates_sign() {
        let geom = ArrayGeometry::new(2, 0.5).unwrap();
        let a: CVec<f64> = steering_vector(&geom, 90.0);
        assert!(close(a[0], Complex::new(1.0, 0.0)));
        assert!(close(a[1], Complex::new(-1.0, 0.0)));
    }

    #[test]
    fn thirty_degrees_four_elements() {
        let geom = ArrayGeometry::new(4, 0.5).unwrap();
        let a: CVec<f64> = steering_vector(&geom, 30.0);
        // sin 30° = 1/2 so the phase advances by π/2 per element.
        let expected = [
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 1.0),
            Complex::new(-1.0, 0.0),
            Complex::new(0.0, -1.0),
        ];
        for (z, e) in a.iter().zip(expected) {
            assert!(close(*z, e), "{z} vs {e}");
        }
    }

    #[test]
    fn broadside_unit_has_unit_norm() {
        let geom = ArrayGeometry::new(3, 0.5).unwrap();
        let u: CVec<f64> = geom.broadside_unit();
        assert!((inner(&u, &u).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_array() {
        assert!(ArrayGeometry::new(0, 0.5).is_err());
        assert!(ArrayGeometry::new(2, 0.0).is_err());
    }
}
