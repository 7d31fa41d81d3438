//! Parametric RSMA/SDMA ISAC precoders.
//!
//! Four trade-off parameters drive every precoder:
//!
//! * `t_comms`: fraction of the power budget spent on communications
//!   (the remainder feeds the dedicated sensing precoder),
//! * `t_p`: fraction of the communications power given to the two private
//!   streams (the remainder feeds the common stream),
//! * `alpha_c`, `alpha_p`: weight of the communication direction against
//!   the broadside (target) direction inside the common and private
//!   precoders respectively.
//!
//! Each communications precoder is a weighted blend of a communication
//! direction and `u_0`, normalized jointly over all subcarriers so that the
//! stream receives exactly its share of `P_T`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::model::{ChannelSet, ScenarioConfig};
use crate::scalar::{inner, norm, norm_sqr, scale, weighted_sum, zeros, CVec, Real};

/// Private-stream beamforming family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "MRT")]
    Mrt,
    #[serde(rename = "ZF")]
    Zf,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Mrt => "MRT",
            Family::Zf => "ZF",
        })
    }
}

impl FromStr for Family {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mrt" => Ok(Family::Mrt),
            "zf" => Ok(Family::Zf),
            _ => Err(IsacError::InvalidConfig(format!("unknown precoder family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub t_comms: f64,
    pub t_p: f64,
    pub alpha_c: f64,
    pub alpha_p: f64,
    pub family: Family,
}

impl ParameterPoint {
    pub fn new(t_comms: f64, t_p: f64, alpha_c: f64, alpha_p: f64, family: Family) -> Result<Self> {
        let pp = Self { t_comms, t_p, alpha_c, alpha_p, family };
        pp.validate()?;
        Ok(pp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_comms", self.t_comms),
            ("t_p", self.t_p),
            ("alpha_c", self.alpha_c),
            ("alpha_p", self.alpha_p),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(IsacError::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Common-stream power fraction `t_comms (1 - t_p)`.
    pub fn common_fraction(&self) -> f64 {
        self.t_comms * (1.0 - self.t_p)
    }

    /// Total private-stream power fraction `t_comms t_p`.
    pub fn private_fraction(&self) -> f64 {
        self.t_comms * self.t_p
    }

    pub fn sensing_fraction(&self) -> f64 {
        1.0 - self.t_comms
    }

    /// No common stream is transmitted.
    pub fn is_sdma(&self) -> bool {
        self.common_fraction() == 0.0
    }

    /// Lexicographic key used to pick a representative among equal points.
    pub fn order_key(&self) -> (u64, u64, u64, u64, Family) {
        // Parameters are non-negative, so the IEEE bit pattern orders them.
        (self.t_comms.to_bits(), self.t_p.to_bits(), self.alpha_c.to_bits(), self.alpha_p.to_bits(), self.family)
    }
}

/// Precoders for every subcarrier. `common`, `private[i]` and `sensing` are
/// `p_c`, `p_{i+1}` and `p_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet<T> {
    pub common: Vec<CVec<T>>,
    pub private: [Vec<CVec<T>>; 2],
    pub sensing: Vec<CVec<T>>,
}

/// Power carried by each stream, summed over subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamPowers {
    pub common: f64,
    pub private: [f64; 2],
    pub sensing: f64,
}

impl StreamPowers {
    pub fn total(&self) -> f64 {
        self.common + self.private[0] + self.private[1] + self.sensing
    }
}

fn grid_power<T: Real>(grid: &[CVec<T>]) -> T {
    grid.iter().fold(T::zero(), |acc, p| acc + norm_sqr(p))
}

impl<T: Real> PrecoderSet<T> {
    pub fn n_subcarriers(&self) -> usize {
        self.sensing.len()
    }

    pub fn n_tx(&self) -> usize {
        self.sensing.first().map_or(0, Vec::len)
    }

    pub fn powers(&self) -> StreamPowers {
        StreamPowers {
            common: grid_power(&self.common).as_f64(),
            private: [grid_power(&self.private[0]).as_f64(), grid_power(&self.private[1]).as_f64()],
            sensing: grid_power(&self.sensing).as_f64(),
        }
    }

    pub fn total_power(&self) -> T {
        grid_power(&self.common) + grid_power(&self.private[0]) + grid_power(&self.private[1]) + grid_power(&self.sensing)
    }

    /// True when `p_c` is not identically zero.
    pub fn has_common(&self) -> bool {
        self.common.iter().flatten().any(|z| z.norm_sqr() > T::zero())
    }

    /// All four streams in transmission order `[p_c, p_1, p_2, p_r]`.
    pub fn streams(&self) -> [&[CVec<T>]; 4] {
        [&self.common, &self.private[0], &self.private[1], &self.sensing]
    }
}

/// `u_c[k] = (u_1[k] + u_2[k]) / ‖u_1[k] + u_2[k]‖`.
pub fn common_direction<T: Real>(channels: &ChannelSet<T>) -> Result<Vec<CVec<T>>> {
    let tiny = T::of(1e-12);
    channels.unit_est[0]
        .iter()
        .zip(&channels.unit_est[1])
        .enumerate()
        .map(|(k, (u1, u2))| {
            let sum: CVec<T> = u1.iter().zip(u2).map(|(a, b)| a + b).collect();
            let n = norm(&sum);
            if n < tiny {
                return Err(IsacError::DegenerateDirection { subcarrier: k });
            }
            Ok(scale(&sum, T::one() / n))
        })
        .collect()
}

/// Unit-norm private-stream directions for both UEs.
///
/// MRT uses `u_i[k]`. ZF uses column `i` of `H_k (H_k^H H_k)^{-1}` with
/// `H_k = [ĥ_1[k], ĥ_2[k]]`, normalized to unit length.
pub fn private_directions<T: Real>(channels: &ChannelSet<T>, family: Family) -> Result<[Vec<CVec<T>>; 2]> {
    match family {
        Family::Mrt => Ok(channels.unit_est.clone()),
        Family::Zf => {
            let n_c = channels.n_subcarriers();
            let mut out: [Vec<CVec<T>>; 2] = [Vec::with_capacity(n_c), Vec::with_capacity(n_c)];
            for k in 0..n_c {
                let [d1, d2] = zf_columns(&channels.est_channels[0][k], &channels.est_channels[1][k], k)?;
                out[0].push(scale(&d1, T::one() / norm(&d1)));
                out[1].push(scale(&d2, T::one() / norm(&d2)));
            }
            Ok(out)
        }
    }
}

/// Raw (unnormalized) pseudo-inverse columns for one subcarrier.
fn zf_columns<T: Real>(h1: &[Complex<T>], h2: &[Complex<T>], k: usize) -> Result<[CVec<T>; 2]> {
    // Gram matrix G = H^H H = [[g11, g12], [conj(g12), g22]].
    let g11 = norm_sqr(h1);
    let g22 = norm_sqr(h2);
    let g12 = inner(h1, h2);
    let det = g11 * g22 - g12.norm_sqr();

    // Singular values of H are the square roots of the eigenvalues of G.
    let tr = g11 + g22;
    let disc = (tr * tr - T::of(4.0) * det).max(T::zero()).sqrt();
    let lam_max = (tr + disc) / T::of(2.0);
    let lam_min = (det / lam_max).max(T::zero());
    let ratio = if lam_max > T::zero() { (lam_min / lam_max).sqrt() } else { T::zero() };
    if !(ratio >= T::of(1e-9)) || !(det > T::zero()) {
        return Err(IsacError::RankDeficient { subcarrier: k, ratio: ratio.as_f64() });
    }

    // H G^{-1}, with G^{-1} = [[g22, -g12], [-conj(g12), g11]] / det.
    let inv_det = T::one() / det;
    let col1 = h1
        .iter()
        .zip(h2)
        .map(|(a, b)| (a.scale(g22) - b * g12.conj()).scale(inv_det))
        .collect();
    let col2 = h1
        .iter()
        .zip(h2)
        .map(|(a, b)| (b.scale(g11) - a * g12).scale(inv_det))
        .collect();
    Ok([col1, col2])
}

/// `sqrt(power) * (sqrt(α) d[k] + sqrt(1-α) u_0) / sqrt(Σ_k' ‖·‖²)`, or an
/// exact zero grid when `power` is zero.
fn blended_stream<T: Real>(power: T, alpha: T, dirs: &[CVec<T>], u0: &[Complex<T>]) -> Result<Vec<CVec<T>>> {
    let n_tx = u0.len();
    if power == T::zero() {
        return Ok(vec![zeros(n_tx); dirs.len()]);
    }
    let wa = alpha.sqrt();
    let wb = (T::one() - alpha).sqrt();
    let raw: Vec<CVec<T>> = dirs.iter().map(|d| weighted_sum(wa, d, wb, u0)).collect();
    let denom = grid_power(&raw);
    if !(denom > T::of(1e-24)) {
        return Err(IsacError::DegenerateDirection { subcarrier: 0 });
    }
    let s = (power / denom).sqrt();
    Ok(raw.iter().map(|v| scale(v, s)).collect())
}

/// Build `{p_c, p_1, p_2, p_r}` for one parameter point.
pub fn build_precoders<T: Real>(pp: &ParameterPoint, channels: &ChannelSet<T>, cfg: &ScenarioConfig) -> Result<PrecoderSet<T>> {
    pp.validate()?;
    let n_c = channels.n_subcarriers();
    let u0 = &channels.broadside_unit;
    let p_t = cfg.total_power;

    let common_power = T::of(p_t * pp.common_fraction());
    let private_power = T::of(p_t * pp.private_fraction() / 2.0);
    let sensing_power = p_t * pp.sensing_fraction();

    let common = if common_power > T::zero() {
        let uc = common_direction(channels)?;
        blended_stream(common_power, T::of(pp.alpha_c), &uc, u0)?
    } else {
        vec![zeros(u0.len()); n_c]
    };

    let private = if private_power > T::zero() {
        let dirs = private_directions(channels, pp.family)?;
        let alpha = T::of(pp.alpha_p);
        [blended_stream(private_power, alpha, &dirs[0], u0)?, blended_stream(private_power, alpha, &dirs[1], u0)?]
    } else {
        [vec![zeros(u0.len()); n_c], vec![zeros(u0.len()); n_c]]
    };

    let sensing = if sensing_power > 0.0 {
        let s = T::of((sensing_power / n_c as f64).sqrt());
        vec![scale(u0, s); n_c]
    } else {
        vec![zeros(u0.len()); n_c]
    };

    Ok(PrecoderSet { common, private, sensing })
}

/// Named special cases of the parametric design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpecialCase {
    /// RSMA without a dedicated sensing signal: `t_comms = 1`.
    #[serde(rename = "RSMA_NoSense_General")]
    RsmaNoSenseGeneral,
    /// Soft separation: `t_comms = 1`, `alpha_c = 1 - alpha_p`, `alpha_p >= 1/2`.
    #[serde(rename = "RSMA_NoSense_Soft")]
    RsmaNoSenseSoft,
    /// SDMA with a dedicated sensing signal: `0 < t_comms < 1`, `t_p = 1`.
    #[serde(rename = "SDMA_Sense_General")]
    SdmaSenseGeneral,
    /// Hard separation: SDMA with sensing and `alpha_p = 1`.
    #[serde(rename = "SDMA_Sense_Hard")]
    SdmaSenseHard,
    /// SDMA without a dedicated sensing signal: `t_comms = t_p = 1`.
    #[serde(rename = "SDMA_NoSense")]
    SdmaNoSense,
    #[serde(rename = "General")]
    General,
}

impl SpecialCase {
    pub const ALL: [SpecialCase; 6] = [
        SpecialCase::RsmaNoSenseGeneral,
        SpecialCase::RsmaNoSenseSoft,
        SpecialCase::SdmaSenseGeneral,
        SpecialCase::SdmaSenseHard,
        SpecialCase::SdmaNoSense,
        SpecialCase::General,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SpecialCase::RsmaNoSenseGeneral => "RSMA_NoSense_General",
            SpecialCase::RsmaNoSenseSoft => "RSMA_NoSense_Soft",
            SpecialCase::SdmaSenseGeneral => "SDMA_Sense_General",
            SpecialCase::SdmaSenseHard => "SDMA_Sense_Hard",
            SpecialCase::SdmaNoSense => "SDMA_NoSense",
            SpecialCase::General => "General",
        }
    }

    /// Row number (1..=5) in the table of special cases.
    pub fn table_row(&self) -> Option<u8> {
        match self {
            SpecialCase::RsmaNoSenseGeneral => Some(1),
            SpecialCase::RsmaNoSenseSoft => Some(2),
            SpecialCase::SdmaSenseGeneral => Some(3),
            SpecialCase::SdmaSenseHard => Some(4),
            SpecialCase::SdmaNoSense => Some(5),
            SpecialCase::General => None,
        }
    }
}

impl fmt::Display for SpecialCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpecialCase {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        SpecialCase::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IsacError::InvalidConfig(format!("unknown special case `{s}`")))
    }
}

const CASE_EPS: f64 = 1e-9;

fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= CASE_EPS
}

/// Most specific special case matching `pp`.
pub fn classify_special_case(pp: &ParameterPoint) -> SpecialCase {
    let full_comms = eq(pp.t_comms, 1.0);
    let sdma = eq(pp.t_p, 1.0);
    let with_sensing = pp.t_comms > CASE_EPS && pp.t_comms < 1.0 - CASE_EPS;
    if full_comms && sdma {
        SpecialCase::SdmaNoSense
    } else if full_comms {
        if eq(pp.alpha_c, 1.0 - pp.alpha_p) && pp.alpha_p >= 0.5 - CASE_EPS {
            SpecialCase::RsmaNoSenseSoft
        } else {
            SpecialCase::RsmaNoSenseGeneral
        }
    } else if with_sensing && sdma {
        if eq(pp.alpha_p, 1.0) {
            SpecialCase::SdmaSenseHard
        } else {
            SpecialCase::SdmaSenseGeneral
        }
    } else {
        SpecialCase::General
    }
}
