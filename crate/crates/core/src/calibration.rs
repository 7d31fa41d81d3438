//! Per-RF-chain phase calibration against a broadside anchor antenna.
//!
//! Each transmit chain adds an unknown phase `φ_{g,k}`. An anchor placed at
//! a known angle records the per-element channel; the mean phase difference
//! between the two chains is the correctable part of the offset.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{IsacError, Result};
use crate::model::{streams, ArrayGeometry, Rng};
use crate::scalar::{CVec, Real};

/// Hardware phase offsets and anchor placement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RfImpairment {
    /// `φ_{g,k}`, indexed `[g][k]`, in `(−π, π]`.
    pub phase_offsets: Vec<Vec<f64>>,
    pub anchor_delay_bins: usize,
    pub anchor_angle_deg: f64,
}

/// Wrap an angle into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = phi.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

impl RfImpairment {
    /// Constant offset per chain on every subcarrier.
    pub fn constant(offsets: &[f64], n_subcarriers: usize) -> Self {
        Self {
            phase_offsets: offsets.iter().map(|&o| vec![wrap_phase(o); n_subcarriers]).collect(),
            anchor_delay_bins: 0,
            anchor_angle_deg: 0.0,
        }
    }

    /// Constant random offset per chain plus small per-subcarrier jitter
    /// (standard deviation `jitter` rad). Element 0 is the reference.
    pub fn random(n_tx: usize, n_subcarriers: usize, jitter: f64, rng: &Rng) -> Self {
        let mut g = rng.child(streams::IMPAIRMENT).generator();
        let phase_offsets = (0..n_tx)
            .map(|chain| {
                let base = if chain == 0 { 0.0 } else { g.phase() };
                (0..n_subcarriers).map(|_| wrap_phase(base + jitter * g.normal())).collect()
            })
            .collect();
        Self { phase_offsets, anchor_delay_bins: 0, anchor_angle_deg: 0.0 }
    }

    pub fn n_tx(&self) -> usize {
        self.phase_offsets.len()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.phase_offsets.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n_c = self.n_subcarriers();
        for row in &self.phase_offsets {
            if row.len() != n_c {
                return Err(IsacError::LengthMismatch { expected: n_c, found: row.len() });
            }
        }
        if self.anchor_delay_bins >= n_c.max(1) {
            return Err(IsacError::InvalidConfig(format!(
                "anchor delay {} outside 0..{n_c}",
                self.anchor_delay_bins
            )));
        }
        Ok(())
    }
}

/// `h_g[k] = β e^{j2π n_a k/N_c} e^{jφ_{g,k}} e^{j2π (d/λ) g sin θ_a}`, indexed `[g][k]`.
pub fn anchor_channels<T: Real>(imp: &RfImpairment, geom: &ArrayGeometry, beta: f64) -> Result<Vec<CVec<T>>> {
    imp.validate()?;
    if imp.n_tx() != geom.n_tx {
        return Err(IsacError::LengthMismatch { expected: geom.n_tx, found: imp.n_tx() });
    }
    let n_c = imp.n_subcarriers();
    let sin = imp.anchor_angle_deg.to_radians().sin();
    let tau = std::f64::consts::TAU;
    Ok(imp
        .phase_offsets
        .iter()
        .enumerate()
        .map(|(g, row)| {
            let steer = tau * geom.spacing_wavelengths * g as f64 * sin;
            row.iter()
                .enumerate()
                .map(|(k, phi)| {
                    let delay = tau * ((imp.anchor_delay_bins * k) % n_c) as f64 / n_c as f64;
                    let z = Complex::from_polar(beta, delay + phi + steer);
                    Complex::new(T::of(z.re), T::of(z.im))
                })
                .collect()
        })
        .collect())
}

/// Estimated phase misalignment between the two chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCorrection {
    /// Circular mean over subcarriers of `φ_0[k] − φ_1[k]`.
    pub delta_phi: f64,
    /// `−Δφ`: the estimated offset of element 1 relative to element 0.
    pub correction: f64,
}

impl PhaseCorrection {
    /// Remove the estimated offset from element 1 of `v`.
    pub fn apply<T: Real>(&self, v: &mut [Complex<T>]) {
        if let Some(z) = v.get_mut(1) {
            let rot = Complex::from_polar(1.0, -self.correction);
            *z = *z * Complex::new(T::of(rot.re), T::of(rot.im));
        }
    }
}

/// Estimate `Δφ` from the anchor measurement of a two-element array.
pub fn estimate_phase_correction<T: Real>(anchor: &[CVec<T>]) -> Result<PhaseCorrection> {
    if anchor.len() != 2 {
        return Err(IsacError::UnsupportedArray(anchor.len()));
    }
    let (h0, h1) = (&anchor[0], &anchor[1]);
    if h0.len() != h1.len() {
        return Err(IsacError::LengthMismatch { expected: h0.len(), found: h1.len() });
    }
    let mut acc = Complex::new(0.0, 0.0);
    for (a, b) in h0.iter().zip(h1) {
        let d = Complex::new(a.re.as_f64(), a.im.as_f64()) * Complex::new(b.re.as_f64(), -b.im.as_f64());
        let n = d.norm();
        if n > 0.0 {
            acc += d / n;
        }
    }
    let delta_phi = if acc.norm() > 0.0 { acc.arg() } else { 0.0 };
    Ok(PhaseCorrection { delta_phi, correction: wrap_phase(-delta_phi) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn geom() -> ArrayGeometry {
        ArrayGeometry::default()
    }

    #[test]
    fn unit_phases_give_beta() {
        let imp = RfImpairment::constant(&[0.0, 0.0], 8);
        let h: Vec<CVec<f64>> = anchor_channels(&imp, &geom(), 0.7).unwrap();
        assert!(h.iter().flatten().all(|z| (z - Complex::new(0.7, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn endfire_anchor_adds_pi() {
        let mut imp = RfImpairment::constant(&[0.0, 0.0], 4);
        imp.anchor_angle_deg = 90.0;
        let h: Vec<CVec<f64>> = anchor_channels(&imp, &geom(), 1.0).unwrap();
        for k in 0..4 {
            assert!((h[1][k] / h[0][k] - Complex::new(-1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_scalar_recomputation() {
        let mut imp = RfImpairment::random(2, 16, 0.2, &Rng::new(5, 0));
        imp.anchor_delay_bins = 3;
        imp.anchor_angle_deg = 17.0;
        let beta = 0.4;
        let h: Vec<CVec<f64>> = anchor_channels(&imp, &geom(), beta).unwrap();
        for g in 0..2 {
            for k in 0..16 {
                let phase = 2.0 * PI * 3.0 * k as f64 / 16.0
                    + imp.phase_offsets[g][k]
                    + 2.0 * PI * 0.5 * g as f64 * 17f64.to_radians().sin();
                let z = Complex::new(beta * phase.cos(), beta * phase.sin());
                assert!((h[g][k] - z).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_offset_sign() {
        let imp = RfImpairment::constant(&[0.0, 0.3], 32);
        let h: Vec<CVec<f64>> = anchor_channels(&imp, &geom(), 1.0).unwrap();
        let c = estimate_phase_correction(&h).unwrap();
        assert!((c.delta_phi + 0.3).abs() < 1e-12);
        assert!((c.correction - 0.3).abs() < 1e-12);
    }

    #[test]
    fn no_offset_no_correction() {
        let imp = RfImpairment::constant(&[0.0, 0.0], 8);
        let h: Vec<CVec<f64>> = anchor_channels(&imp, &geom(), 1.0).unwrap();
        assert_eq!(estimate_phase_correction(&h).unwrap().delta_phi, 0.0);
    }

    #[test]
    fn zero_mean_variation_is_not_correctable() {
        let n_c = 16;
        let row1: Vec<f64> = (0..n_c).map(|k| if k % 2 == 0 { 0.2 } else { -0.2 }).collect();
        let imp = RfImpairment { phase_offsets: vec![vec![0.0; n_c], row1], anchor_delay_bins: 0, anchor_angle_deg: 0.0 };
        let h: Vec<CVec<f64>> = anchor_channels(&imp, &geom(), 1.0).unwrap();
        assert!(estimate_phase_correction(&h).unwrap().delta_phi.abs() < 1e-12);
    }

    #[test]
    fn round_trip_near_branch_cut() {
        for offset in [0.3, -1.2, PI - 1e-3, -PI + 1e-3, 3.0] {
            let imp = RfImpairment::constant(&[0.0, offset], 64);
            let h: Vec<CVec<f64>> = anchor_channels(&imp, &geom(), 1.0).unwrap();
            let corr = estimate_phase_correction(&h).unwrap();
            // Post-calibration response of the impaired array towards broadside.
            let mut response = vec![Complex::from_polar(1.0, 0.0), Complex::from_polar(1.0, offset)];
            corr.apply(&mut response);
            let misalignment = wrap_phase(response[1].arg() - response[0].arg());
            assert!(misalignment.abs() < 1e-9, "{offset}: {misalignment}");
        }
    }

    #[test]
    fn only_two_elements() {
        let geom4 = ArrayGeometry::new(4, 0.5).unwrap();
        let imp = RfImpairment::constant(&[0.0; 4], 8);
        let h: Vec<CVec<f64>> = anchor_channels(&imp, &geom4, 1.0).unwrap();
        assert!(matches!(estimate_phase_correction(&h), Err(IsacError::UnsupportedArray(4))));
    }

    #[test]
    fn wrapping() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5) - 0.5).abs() < 1e-15);
    }
}
