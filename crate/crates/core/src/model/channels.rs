use num_complex::Complex;

use super::{rng::streams, steering_vector, ArrayGeometry, Rng, ScenarioConfig};
use crate::error::{IsacError, Result};
use crate::scalar::{norm, scale, CVec, Real};

/// Per-subcarrier UE channels. Outer index is the UE (0 or 1), inner index
/// the subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T> {
    pub true_channels: [Vec<CVec<T>>; 2],
    pub est_channels: [Vec<CVec<T>>; 2],
    /// `ĥ_i[k] / ‖ĥ_i[k]‖`.
    pub unit_est: [Vec<CVec<T>>; 2],
    /// `u_0 = a_0 / sqrt(N_T)`.
    pub broadside_unit: CVec<T>,
}

impl<T: Real> ChannelSet<T> {
    /// Build from explicit true and estimated channels.
    pub fn new(true_channels: [Vec<CVec<T>>; 2], est_channels: [Vec<CVec<T>>; 2]) -> Result<Self> {
        let n_c = true_channels[0].len();
        let n_tx = true_channels[0].first().map_or(0, Vec::len);
        for grid in true_channels.iter().chain(&est_channels) {
            if grid.len() != n_c {
                return Err(IsacError::LengthMismatch { expected: n_c, found: grid.len() });
            }
            if let Some(v) = grid.iter().find(|v| v.len() != n_tx) {
                return Err(IsacError::LengthMismatch { expected: n_tx, found: v.len() });
            }
        }
        let mut unit_est: [Vec<CVec<T>>; 2] = [Vec::with_capacity(n_c), Vec::with_capacity(n_c)];
        for (ue, grid) in est_channels.iter().enumerate() {
            for (k, h) in grid.iter().enumerate() {
                let n = norm(h);
                if !(n > T::zero()) {
                    return Err(IsacError::ZeroNormChannel { ue, subcarrier: k });
                }
                unit_est[ue].push(scale(h, T::one() / n));
            }
        }
        let geom = ArrayGeometry { n_tx, spacing_wavelengths: 0.5 };
        Ok(Self { true_channels, est_channels, unit_est, broadside_unit: geom.broadside_unit() })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.true_channels[0].len()
    }

    pub fn n_tx(&self) -> usize {
        self.broadside_unit.len()
    }

    /// Multiply every true and estimated channel by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        let s = |g: &[Vec<CVec<T>>; 2]| g.clone().map(|ue| ue.iter().map(|h| scale(h, factor)).collect());
        Self::new(s(&self.true_channels), s(&self.est_channels))
    }
}

/// Single-path line-of-sight channels with an i.i.d. random phase per UE and
/// subcarrier; CSIT error is additive white complex Gaussian.
pub fn generate_channels<T: Real>(cfg: &ScenarioConfig, geom: &ArrayGeometry, rng: &Rng) -> Result<ChannelSet<T>> {
    cfg.validate()?;
    geom.validate()?;
    let n_c = cfg.n_subcarriers;
    let mut phases = rng.child(streams::CHANNEL_PHASE).generator();
    let mut csit = rng.child(streams::CSIT_ERROR).generator();
    let csit_var = cfg.csit_error_var;

    let mut true_channels: [Vec<CVec<T>>; 2] = [Vec::with_capacity(n_c), Vec::with_capacity(n_c)];
    let mut est_channels: [Vec<CVec<T>>; 2] = [Vec::with_capacity(n_c), Vec::with_capacity(n_c)];
    for ue in 0..2 {
        let a: CVec<f64> = steering_vector(geom, cfg.ue_angles_deg[ue]);
        for _ in 0..n_c {
            let rot = Complex::from_polar(cfg.ue_gains[ue], phases.phase());
            let h: CVec<f64> = a.iter().map(|z| z * rot).collect();
            let est: CVec<T> = if csit_var > 0.0 {
                h.iter()
                    .map(|z| {
                        let e = z + csit.complex_normal(csit_var);
                        Complex::new(T::of(e.re), T::of(e.im))
                    })
                    .collect()
            } else {
                h.iter().map(|z| Complex::new(T::of(z.re), T::of(z.im))).collect()
            };
            true_channels[ue].push(h.iter().map(|z| Complex::new(T::of(z.re), T::of(z.im))).collect());
            est_channels[ue].push(est);
        }
    }
    ChannelSet::new(true_channels, est_channels)
}
