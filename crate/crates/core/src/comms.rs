//! Communications metrics: per-subcarrier SINRs, MCS selection and
//! MCS-limited stream throughput with RSMA throughput collapse.

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::model::{ChannelSet, ScenarioConfig};
use crate::precoder::PrecoderSet;
use crate::scalar::{from_db, inner, Real};

/// OFDM effective bandwidth after cyclic-prefix and guard overhead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveBandwidth {
    pub total_hz: f64,
    pub n_subcarriers: usize,
    pub cp_samples: usize,
    pub data_subcarriers: usize,
    pub value_hz: f64,
}

pub fn effective_bandwidth(total_hz: f64, n_subcarriers: usize, cp_samples: usize, data_subcarriers: usize) -> EffectiveBandwidth {
    // total · N/(N+cp) · data/N, with the N factors cancelled to keep it exact.
    let value_hz = total_hz * data_subcarriers as f64 / (n_subcarriers + cp_samples) as f64;
    EffectiveBandwidth { total_hz, n_subcarriers, cp_samples, data_subcarriers, value_hz }
}

/// Testbed numerology: 100 MHz sampling, 512 subcarriers, 128-sample CP,
/// 468 data subcarriers.
pub fn testbed_bandwidth() -> EffectiveBandwidth {
    effective_bandwidth(100e6, 512, 128, 468)
}

fn ser_ratio<S: Serializer>(r: &Ratio<u32>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McsLevel {
    pub index: usize,
    pub bits_per_symbol: u32,
    #[serde(serialize_with = "ser_ratio")]
    pub code_rate: Ratio<u32>,
    pub data_rate_bps: f64,
}

/// `(m, r)` for MCS 0..=9.
pub const MCS_TABLE: [(u32, u32, u32); 10] = [
    (1, 1, 2),
    (1, 3, 4),
    (2, 1, 2),
    (2, 3, 4),
    (4, 1, 2),
    (4, 3, 4),
    (6, 2, 3),
    (6, 3, 4),
    (8, 3, 4),
    (8, 5, 6),
];

impl McsLevel {
    pub fn new(index: usize, bandwidth: &EffectiveBandwidth) -> Option<Self> {
        let &(m, num, den) = MCS_TABLE.get(index)?;
        let code_rate = Ratio::new(num, den);
        let data_rate_bps = bandwidth.value_hz * m as f64 * num as f64 / den as f64;
        Some(Self { index, bits_per_symbol: m, code_rate, data_rate_bps })
    }

    /// Spectral efficiency `m · r` in bits/s/Hz.
    pub fn efficiency(&self) -> f64 {
        self.bits_per_symbol as f64 * *self.code_rate.numer() as f64 / *self.code_rate.denom() as f64
    }

    pub fn all(bandwidth: &EffectiveBandwidth) -> Vec<McsLevel> {
        (0..MCS_TABLE.len()).filter_map(|i| Self::new(i, bandwidth)).collect()
    }
}

/// Highest level with `m · r < efficiency`.
fn select_mcs(efficiency: f64, bandwidth: &EffectiveBandwidth) -> Option<McsLevel> {
    McsLevel::all(bandwidth).into_iter().rev().find(|l| l.efficiency() < efficiency)
}

/// Highest-rate MCS decodable at an average spectral efficiency, after an
/// SNR-gap penalty of `gap_db`.
///
/// The gap is applied to the flat-channel SINR equivalent of `efficiency`:
/// `log2(1 + (2^efficiency - 1) / gap)`.
pub fn max_mcs(avg_spectral_efficiency: f64, gap_db: f64) -> Option<McsLevel> {
    let adjusted = if gap_db == 0.0 {
        avg_spectral_efficiency
    } else {
        (1.0 + (avg_spectral_efficiency.exp2() - 1.0) / from_db(gap_db)).log2()
    };
    select_mcs(adjusted, &testbed_bandwidth())
}

fn projection<T: Real>(h: &[num_complex::Complex<T>], p: &[num_complex::Complex<T>]) -> f64 {
    inner(h, p).norm_sqr().as_f64()
}

/// Common-stream SINR at UE `ue` (0 or 1) on every subcarrier.
pub fn sinr_common<T: Real>(channels: &ChannelSet<T>, precoders: &PrecoderSet<T>, ue: usize, sigma2: f64) -> Vec<f64> {
    channels.true_channels[ue]
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let signal = projection(h, &precoders.common[k]);
            let interference = projection(h, &precoders.private[0][k]) + projection(h, &precoders.private[1][k]);
            signal / (interference + sigma2)
        })
        .collect()
}

/// Private-stream SINR at UE `ue` after the common stream is cancelled.
pub fn sinr_private<T: Real>(channels: &ChannelSet<T>, precoders: &PrecoderSet<T>, ue: usize, sigma2: f64) -> Vec<f64> {
    let other = 1 - ue;
    channels.true_channels[ue]
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let signal = projection(h, &precoders.private[ue][k]);
            let interference = projection(h, &precoders.private[other][k]);
            signal / (interference + sigma2)
        })
        .collect()
}

/// `mean_k log2(1 + SINR[k] / gap)`.
pub fn mean_efficiency(sinr: &[f64], gap_db: f64) -> f64 {
    if sinr.is_empty() {
        return 0.0;
    }
    let gap = from_db(gap_db);
    sinr.iter().map(|s| (1.0 + s / gap).log2()).sum::<f64>() / sinr.len() as f64
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputReport {
    /// `T_c` in bit/s.
    pub t_common: f64,
    /// `T_1`, `T_2` in bit/s.
    pub t_private: [f64; 2],
    pub t_sum: f64,
    /// Chosen levels for `[common, private 1, private 2]`.
    pub mcs_chosen: [Option<McsLevel>; 3],
    pub collapsed: bool,
    /// Whether `p_c` carries power. Without a common stream the sum is
    /// `T_1 + T_2`.
    pub has_common: bool,
    /// Mean linear SINR of the common stream at each UE.
    pub mean_sinr_common: [f64; 2],
    pub mean_sinr_private: [f64; 2],
    /// Gap-adjusted mean spectral efficiencies `[common (min over UEs), private 1, private 2]`.
    pub efficiency: [f64; 3],
}

impl ThroughputReport {
    /// Sum throughput recomputed from the stream throughputs.
    pub fn expected_sum(&self) -> f64 {
        if self.has_common {
            self.t_common + if self.t_common > 0.0 { self.t_private[0] + self.t_private[1] } else { 0.0 }
        } else {
            self.t_private[0] + self.t_private[1]
        }
    }
}

/// MCS-limited throughput of one precoder set over the true channels.
pub fn throughput<T: Real>(channels: &ChannelSet<T>, precoders: &PrecoderSet<T>, cfg: &ScenarioConfig) -> ThroughputReport {
    let bw = testbed_bandwidth();
    let sigma2 = cfg.noise_power_comms;
    let gap = cfg.shannon_gap_db;

    let sc = [sinr_common(channels, precoders, 0, sigma2), sinr_common(channels, precoders, 1, sigma2)];
    let sp = [sinr_private(channels, precoders, 0, sigma2), sinr_private(channels, precoders, 1, sigma2)];

    let eff_c = mean_efficiency(&sc[0], gap).min(mean_efficiency(&sc[1], gap));
    let eff_p = [mean_efficiency(&sp[0], gap), mean_efficiency(&sp[1], gap)];

    let has_common = precoders.has_common();
    let mcs_c = if has_common { select_mcs(eff_c, &bw) } else { None };
    let mcs_p = [select_mcs(eff_p[0], &bw), select_mcs(eff_p[1], &bw)];
    let rate = |l: Option<McsLevel>| l.map_or(0.0, |l| l.data_rate_bps);

    let t_common = rate(mcs_c);
    let t_private = [rate(mcs_p[0]), rate(mcs_p[1])];
    let collapsed = has_common && mcs_c.is_none();

    let mut report = ThroughputReport {
        t_common,
        t_private,
        t_sum: 0.0,
        mcs_chosen: [mcs_c, mcs_p[0], mcs_p[1]],
        collapsed,
        has_common,
        mean_sinr_common: [mean(&sc[0]), mean(&sc[1])],
        mean_sinr_private: [mean(&sp[0]), mean(&sp[1])],
        efficiency: [eff_c, eff_p[0], eff_p[1]],
    };
    report.t_sum = report.expected_sum();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_channels, scenario_preset, ArrayGeometry, Rng};
    use crate::precoder::{build_precoders, Family, ParameterPoint};
    use num_complex::Complex;

    #[test]
    fn bandwidth_examples() {
        assert_eq!(testbed_bandwidth().value_hz, 73.125e6);
        assert_eq!(effective_bandwidth(100e6, 512, 0, 512).value_hz, 100e6);
        assert!((effective_bandwidth(20e6, 64, 16, 52).value_hz - 13.0e6).abs() < 1e-6);
    }

    #[test]
    fn mcs_products() {
        let bw = testbed_bandwidth();
        let products: Vec<f64> = McsLevel::all(&bw).iter().map(McsLevel::efficiency).collect();
        let expected = [0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 4.5, 6.0, 20.0 / 3.0];
        for (p, e) in products.iter().zip(expected) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn max_mcs_examples() {
        assert_eq!(max_mcs(2.1, 0.0).unwrap().index, 4);
        assert!(max_mcs(0.4, 0.0).is_none());
        let top = max_mcs(7.0, 0.0).unwrap();
        assert_eq!(top.index, 9);
        assert!((top.data_rate_bps - 487.5e6).abs() < 1e-3);
        // Strict inequality: exactly 2 bits/s/Hz does not admit MCS 4.
        assert_eq!(max_mcs(2.0, 0.0).unwrap().index, 3);
        assert!(max_mcs(0.5, 0.0).is_none());
    }

    #[test]
    fn gap_never_raises_mcs() {
        for i in 0..200 {
            let eff = i as f64 * 0.04;
            let a = max_mcs(eff, 0.0).map_or(-1, |l| l.index as i64);
            let b = max_mcs(eff, 2.0).map_or(-1, |l| l.index as i64);
            assert!(b <= a);
        }
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn sinr_brute_force() {
        let h1 = vec![c(0.3, -1.1), c(0.8, 0.2)];
        let h2 = vec![c(-0.5, 0.4), c(0.1, 0.9)];
        let ch = ChannelSet::new([vec![h1.clone()], vec![h2.clone()]], [vec![h1.clone()], vec![h2.clone()]]).unwrap();
        let p = PrecoderSet {
            common: vec![vec![c(0.2, 0.1), c(-0.3, 0.4)]],
            private: [vec![vec![c(0.5, 0.0), c(0.0, -0.2)]], vec![vec![c(-0.1, 0.3), c(0.6, 0.1)]]],
            sensing: vec![vec![c(0.7, 0.0), c(0.7, 0.0)]],
        };
        let sigma2 = 0.05;
        // Scalar expansion of h^H p = Σ_g conj(h_g) p_g.
        let proj = |h: &[Complex<f64>], p: &[Complex<f64>]| {
            let mut re = 0.0;
            let mut im = 0.0;
            for g in 0..2 {
                re += h[g].re * p[g].re + h[g].im * p[g].im;
                im += h[g].re * p[g].im - h[g].im * p[g].re;
            }
            re * re + im * im
        };
        for (ue, h) in [&h1, &h2].into_iter().enumerate() {
            let oc = proj(h, &p.common[0]) / (proj(h, &p.private[0][0]) + proj(h, &p.private[1][0]) + sigma2);
            let op = proj(h, &p.private[ue][0]) / (proj(h, &p.private[1 - ue][0]) + sigma2);
            assert!((sinr_common(&ch, &p, ue, sigma2)[0] - oc).abs() < 1e-12);
            assert!((sinr_private(&ch, &p, ue, sigma2)[0] - op).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_common_gives_zero_sinr() {
        let cfg = scenario_preset("S1").unwrap().with_subcarriers(8);
        let ch: ChannelSet<f64> = generate_channels(&cfg, &ArrayGeometry::default(), &Rng::new(1, 0)).unwrap();
        let pp = ParameterPoint::new(0.8, 1.0, 0.0, 0.5, Family::Mrt).unwrap();
        let p = build_precoders(&pp, &ch, &cfg).unwrap();
        assert!(sinr_common(&ch, &p, 0, cfg.noise_power_comms).iter().all(|&s| s == 0.0));
        let r = throughput(&ch, &p, &cfg);
        assert!(!r.has_common && !r.collapsed);
        assert_eq!(r.t_sum, r.t_private[0] + r.t_private[1]);
    }

    #[test]
    fn sensing_only_point() {
        let cfg = scenario_preset("S1").unwrap().with_subcarriers(8);
        let ch: ChannelSet<f64> = generate_channels(&cfg, &ArrayGeometry::default(), &Rng::new(1, 0)).unwrap();
        let pp = ParameterPoint::new(0.0, 0.5, 0.5, 0.5, Family::Mrt).unwrap();
        let r = throughput(&ch, &build_precoders(&pp, &ch, &cfg).unwrap(), &cfg);
        assert_eq!(r.t_sum, 0.0);
        assert!(!r.collapsed);
    }

    #[test]
    fn zf_sdma_saturates_at_top_mcs() {
        let mut cfg = scenario_preset("S1").unwrap().with_subcarriers(16);
        cfg.noise_power_comms = 1e-9;
        let ch: ChannelSet<f64> = generate_channels(&cfg, &ArrayGeometry::default(), &Rng::new(1, 0)).unwrap();
        let pp = ParameterPoint::new(1.0, 1.0, 0.0, 1.0, Family::Zf).unwrap();
        let r = throughput(&ch, &build_precoders(&pp, &ch, &cfg).unwrap(), &cfg);
        assert!((r.t_sum - 975e6).abs() < 1e-3);
    }

    #[test]
    fn weak_common_stream_collapses() {
        // Common precoder aims at UE 1 only; UE 2 sees it through a deep null.
        let h1 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let h2 = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let ch = ChannelSet::new([vec![h1.clone()], vec![h2.clone()]], [vec![h1], vec![h2]]).unwrap();
        let p = PrecoderSet {
            common: vec![vec![c(0.9, 0.0), c(0.01, 0.0)]],
            private: [vec![vec![c(0.3, 0.0), c(0.0, 0.0)]], vec![vec![c(0.0, 0.0), c(0.3, 0.0)]]],
            sensing: vec![vec![c(0.0, 0.0); 2]],
        };
        let cfg = ScenarioConfig { noise_power_comms: 0.01, ..ScenarioConfig::default() };
        let r = throughput(&ch, &p, &cfg);
        assert!(r.efficiency[0] < 0.5);
        assert!(r.collapsed);
        assert_eq!(r.t_sum, 0.0);
        assert!(r.t_private[0] > 0.0);
    }
}
