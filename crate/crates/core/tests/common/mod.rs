//! Independent reference implementations shared by the integration suites.

#![allow(dead_code)]

use num_complex::Complex;
use rsma_isac::comms::MCS_TABLE;
use rsma_isac::model::{generate_channels, ArrayGeometry, ChannelSet, Rng, ScenarioConfig};
use rsma_isac::precoder::{classify_special_case, Family, ParameterPoint, PrecoderSet, SpecialCase};

pub type C = Complex<f64>;

pub fn scenario(n_c: usize, angles: [f64; 2], gains: [f64; 2], csit: f64, noise: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n_subcarriers: n_c,
        ue_angles_deg: angles,
        ue_gains: gains,
        csit_error_var: csit,
        noise_power_comms: noise,
        seed,
        target_delay_bins: 1,
        ..ScenarioConfig::default()
    }
}

pub fn channels(cfg: &ScenarioConfig) -> ChannelSet<f64> {
    generate_channels(cfg, &ArrayGeometry::default(), &Rng::new(cfg.seed, 0)).unwrap()
}

pub fn total_power(p: &PrecoderSet<f64>) -> f64 {
    p.streams().iter().flat_map(|g| g.iter()).flat_map(|v| v.iter()).map(|z| z.norm_sqr()).sum()
}

pub fn max_diff(a: &PrecoderSet<f64>, b: &PrecoderSet<f64>) -> f64 {
    a.streams()
        .iter()
        .zip(b.streams().iter())
        .flat_map(|(x, y)| x.iter().zip(y.iter()))
        .flat_map(|(u, v)| u.iter().zip(v.iter()))
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

/// Explicit-loop reference for the closed forms.
pub mod oracle {
    use super::*;

    pub fn conj_dot(a: &[C], b: &[C]) -> C {
        let mut acc = C::new(0.0, 0.0);
        for i in 0..a.len() {
            acc += a[i].conj() * b[i];
        }
        acc
    }

    pub fn unit(v: &[C]) -> Vec<C> {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter().map(|z| z / n).collect()
    }

    /// Columns of `(H^H)^{-1}` for a square 2×2 `H = [h1, h2]`.
    pub fn zf_dirs(h1: &[C], h2: &[C]) -> [Vec<C>; 2] {
        // A = H^H has rows conj(h1), conj(h2).
        let (a, b, c, d) = (h1[0].conj(), h1[1].conj(), h2[0].conj(), h2[1].conj());
        let det = a * d - b * c;
        // A^{-1} = [[d, -b], [-c, a]] / det; columns are the ZF directions.
        [unit(&[d / det, -c / det]), unit(&[-b / det, a / det])]
    }

    pub fn blend(power: f64, alpha: f64, dirs: &[Vec<C>], u0: &[C]) -> Vec<Vec<C>> {
        if power == 0.0 {
            return vec![vec![C::new(0.0, 0.0); u0.len()]; dirs.len()];
        }
        let raw: Vec<Vec<C>> = dirs
            .iter()
            .map(|d| d.iter().zip(u0).map(|(x, y)| x * alpha.sqrt() + y * (1.0 - alpha).sqrt()).collect())
            .collect();
        let mut total = 0.0;
        for v in &raw {
            for z in v {
                total += z.norm_sqr();
            }
        }
        raw.iter().map(|v| v.iter().map(|z| z * (power / total).sqrt()).collect()).collect()
    }

    pub fn scaled(power_per_sc: f64, dirs: &[Vec<C>]) -> Vec<Vec<C>> {
        dirs.iter().map(|d| d.iter().map(|z| z * power_per_sc.sqrt()).collect()).collect()
    }

    /// The precoder column for each special case, written out directly.
    pub fn special_case_precoders(pp: &ParameterPoint, ch: &ChannelSet<f64>, p_t: f64) -> PrecoderSet<f64> {
        let n_c = ch.n_subcarriers();
        let n_tx = ch.n_tx();
        let u0: Vec<C> = vec![C::new(1.0 / (n_tx as f64).sqrt(), 0.0); n_tx];
        let u: [Vec<Vec<C>>; 2] = [0, 1].map(|i| ch.est_channels[i].iter().map(|h| unit(h)).collect());
        let dirs: [Vec<Vec<C>>; 2] = match pp.family {
            Family::Mrt => u.clone(),
            Family::Zf => {
                let mut out = [Vec::new(), Vec::new()];
                for k in 0..n_c {
                    let [d1, d2] = zf_dirs(&ch.est_channels[0][k], &ch.est_channels[1][k]);
                    out[0].push(d1);
                    out[1].push(d2);
                }
                out
            }
        };
        let uc: Vec<Vec<C>> = (0..n_c)
            .map(|k| unit(&u[0][k].iter().zip(&u[1][k]).map(|(a, b)| a + b).collect::<Vec<_>>()))
            .collect();
        let zero = vec![vec![C::new(0.0, 0.0); n_tx]; n_c];
        let sensing = |t: f64| if t < 1.0 { scaled(p_t * (1.0 - t) / n_c as f64, &vec![u0.clone(); n_c]) } else { zero.clone() };
        let t = pp.t_comms;
        match classify_special_case(pp) {
            SpecialCase::RsmaNoSenseGeneral | SpecialCase::RsmaNoSenseSoft => PrecoderSet {
                common: blend(p_t * (1.0 - pp.t_p), pp.alpha_c, &uc, &u0),
                private: [0, 1].map(|i| blend(p_t * pp.t_p / 2.0, pp.alpha_p, &dirs[i], &u0)),
                sensing: zero.clone(),
            },
            SpecialCase::SdmaSenseGeneral => PrecoderSet {
                common: zero.clone(),
                private: [0, 1].map(|i| blend(p_t * t / 2.0, pp.alpha_p, &dirs[i], &u0)),
                sensing: sensing(t),
            },
            SpecialCase::SdmaSenseHard => PrecoderSet {
                common: zero.clone(),
                private: [0, 1].map(|i| scaled(p_t * t / (2.0 * n_c as f64), &dirs[i])),
                sensing: sensing(t),
            },
            SpecialCase::SdmaNoSense => PrecoderSet {
                common: zero.clone(),
                private: [0, 1].map(|i| blend(p_t / 2.0, pp.alpha_p, &dirs[i], &u0)),
                sensing: zero.clone(),
            },
            SpecialCase::General => panic!("no closed form for the general case"),
        }
    }

    pub fn mcs_rate(eff: f64) -> f64 {
        let b = 100e6 * 468.0 / 640.0;
        MCS_TABLE
            .iter()
            .rev()
            .find(|(m, n, d)| (*m as f64) * (*n as f64) / (*d as f64) < eff)
            .map_or(0.0, |(m, n, d)| b * (*m as f64) * (*n as f64) / (*d as f64))
    }
}

pub fn well_conditioned(ch: &ChannelSet<f64>) -> bool {
    (0..ch.n_subcarriers()).all(|k| oracle::conj_dot(&ch.unit_est[0][k], &ch.unit_est[1][k]).norm() < 0.995)
}

/// Non-dominated indices by exhaustive pairwise comparison, lowest index
/// kept among identical coordinates, sorted by `x`.
pub fn pareto_brute(pts: &[(f64, f64)]) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..pts.len())
        .filter(|&i| {
            let (x, y) = pts[i];
            !pts.iter().any(|&(ox, oy)| ox >= x && oy >= y && (ox > x || oy > y)) && !pts[..i].contains(&(x, y))
        })
        .collect();
    keep.sort_by(|&a, &b| pts[a].0.total_cmp(&pts[b].0));
    keep
}
