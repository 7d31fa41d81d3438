//! Monostatic OFDM radar at the ISAC transmitter.
//!
//! The target sits at broadside, so only the projection `a_0^H x[k]` of the
//! transmit signal matters. `a_0` is the all-ones vector, making the
//! projection the plain sum of the antenna entries.
//!
//! Noise convention: `sigma_r2` arguments are the radar receiver's
//! time-domain per-sample noise variance `σ_r²`. After the `N_c`-point OFDM
//! demodulation each subcarrier carries noise of variance `σ_r² / N_c`, which
//! is the variance the CRB and the Fisher information are evaluated with.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::model::{streams, Rng, ScenarioConfig};
use crate::precoder::PrecoderSet;
use crate::scalar::{CVec, Real};

/// Range resolution of one delay bin at 100 MHz sampling.
pub const RANGE_RESOLUTION_M: f64 = 1.5;

/// Relative power of the static background against the target echo.
pub const CLUTTER_TO_ECHO: f64 = 10.0;

pub fn bins_to_meters(bins: f64) -> f64 {
    bins * RANGE_RESOLUTION_M
}

/// Transmit signal `x[k]` on every subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct TxGrid<T> {
    pub x: Vec<CVec<T>>,
}

impl<T: Real> TxGrid<T> {
    pub fn n_subcarriers(&self) -> usize {
        self.x.len()
    }

    /// `a_0^H x[k]` for every `k`.
    pub fn broadside_projection(&self) -> CVec<T> {
        self.x.iter().map(|xk| project(xk)).collect()
    }

    /// `|a_0^H x[k]|²` for every `k`.
    pub fn broadside_profile(&self) -> Vec<f64> {
        self.x.iter().map(|xk| project(xk).norm_sqr().as_f64()).collect()
    }
}

fn project<T: Real>(v: &[Complex<T>]) -> Complex<T> {
    v.iter().fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z)
}

/// Distribution of the data symbols `s_c`, `s_1`, `s_2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolModel {
    /// QPSK: unit magnitude on every subcarrier.
    #[default]
    UnitModulus,
    /// Circularly-symmetric complex Gaussian with unit variance.
    Gaussian,
}

/// Draw symbols and form `x[k] = p_c s_c + p_1 s_1 + p_2 s_2 + p_r s_r`.
///
/// `s_r` is BPSK from its own seeded sequence, so it is reproducible (and
/// known to the UEs).
pub fn synthesize_tx<T: Real>(precoders: &PrecoderSet<T>, rng: &Rng) -> TxGrid<T> {
    synthesize_tx_with(precoders, rng, SymbolModel::UnitModulus)
}

pub fn synthesize_tx_with<T: Real>(precoders: &PrecoderSet<T>, rng: &Rng, model: SymbolModel) -> TxGrid<T> {
    let mut data = rng.child(streams::SYMBOLS).generator();
    let mut sensing = Rng::new(rng.seed, 0).child(streams::SYMBOLS).child(streams::SENSING_SYMBOLS).generator();
    let qpsk = std::f64::consts::FRAC_1_SQRT_2;
    let draw = |g: &mut crate::model::Draws| -> Complex<f64> {
        match model {
            SymbolModel::UnitModulus => {
                let re = if g.coin() { qpsk } else { -qpsk };
                let im = if g.coin() { qpsk } else { -qpsk };
                Complex::new(re, im)
            }
            SymbolModel::Gaussian => g.complex_normal(1.0),
        }
    };
    let n_tx = precoders.n_tx();
    let x = (0..precoders.n_subcarriers())
        .map(|k| {
            let s = [draw(&mut data), draw(&mut data), draw(&mut data)];
            let s_r = if sensing.coin() { 1.0 } else { -1.0 };
            (0..n_tx)
                .map(|g| {
                    let cast = |z: Complex<f64>| Complex::new(T::of(z.re), T::of(z.im));
                    precoders.common[k][g] * cast(s[0])
                        + precoders.private[0][k][g] * cast(s[1])
                        + precoders.private[1][k][g] * cast(s[2])
                        + precoders.sensing[k][g].scale(T::of(s_r))
                })
                .collect()
        })
        .collect();
    TxGrid { x }
}

/// Symbol-averaged broadside profile `Σ_streams |a_0^H p_s[k]|²`, i.e. the
/// expectation of `|a_0^H x[k]|²` over independent unit-energy symbols.
pub fn expected_profile<T: Real>(precoders: &PrecoderSet<T>) -> Vec<f64> {
    (0..precoders.n_subcarriers())
        .map(|k| {
            precoders
                .streams()
                .iter()
                .map(|grid| project(&grid[k]).norm_sqr().as_f64())
                .sum()
        })
        .collect()
}

/// `G_0 = Σ_k |a_0^H x[k]|²`.
pub fn broadside_gain<T: Real>(x: &TxGrid<T>) -> f64 {
    x.broadside_profile().iter().sum()
}

/// Radar receiver capture.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarObservation<T> {
    pub y_r: CVec<T>,
    /// Clutter contribution alone, when clutter was simulated.
    pub clutter_only: Option<CVec<T>>,
    pub n0_true: usize,
    pub beta: f64,
    /// Time-domain noise variance of the capture.
    pub sigma_r2: f64,
}

/// Static background reflection coefficients. Depends only on the seed, so
/// every capture within a scenario sees the same grid.
fn clutter_grid(n_c: usize, beta: f64, seed: u64) -> Vec<Complex<f64>> {
    let mut g = Rng::new(seed, 0).child(streams::CLUTTER).generator();
    let var = CLUTTER_TO_ECHO * beta * beta;
    (0..n_c).map(|_| g.complex_normal(var)).collect()
}

fn simulate<T: Real>(
    x: &TxGrid<T>,
    n0: usize,
    echo: bool,
    beta: f64,
    sigma_r2: f64,
    rng: &Rng,
    with_clutter: bool,
) -> Result<RadarObservation<T>> {
    let n_c = x.n_subcarriers();
    if n0 >= n_c {
        return Err(IsacError::InvalidConfig(format!("delay bin {n0} outside 0..{n_c}")));
    }
    let proj = x.broadside_projection();
    let clutter: Option<CVec<T>> = with_clutter.then(|| {
        clutter_grid(n_c, beta, rng.seed)
            .iter()
            .zip(&proj)
            .map(|(c, s)| Complex::new(T::of(c.re), T::of(c.im)) * s)
            .collect()
    });
    let mut noise = rng.child(streams::RADAR_NOISE).generator();
    let sub_var = sigma_r2 / n_c as f64;
    let y_r = (0..n_c)
        .map(|k| {
            let mut y = Complex::new(T::zero(), T::zero());
            if echo && beta != 0.0 {
                let phase = std::f64::consts::TAU * ((n0 * k) % n_c) as f64 / n_c as f64;
                let ramp = Complex::from_polar(beta, phase);
                y += proj[k] * Complex::new(T::of(ramp.re), T::of(ramp.im));
            }
            if let Some(c) = &clutter {
                y += c[k];
            }
            if sub_var > 0.0 {
                let n = noise.complex_normal(sub_var);
                y += Complex::new(T::of(n.re), T::of(n.im));
            }
            y
        })
        .collect();
    Ok(RadarObservation { y_r, clutter_only: clutter, n0_true: n0, beta, sigma_r2 })
}

/// `y_r[k] = β (a_0^H x[k]) e^{j2π n0 k/N_c} + clutter[k] + n_r[k]`.
pub fn radar_return<T: Real>(
    x: &TxGrid<T>,
    n0: usize,
    beta: f64,
    sigma_r2: f64,
    rng: &Rng,
    with_clutter: bool,
) -> Result<RadarObservation<T>> {
    simulate(x, n0, true, beta, sigma_r2, rng, with_clutter)
}

/// The same waveform captured with the target absent (clutter plus noise).
pub fn background_return<T: Real>(
    x: &TxGrid<T>,
    beta: f64,
    sigma_r2: f64,
    rng: &Rng,
    with_clutter: bool,
) -> Result<RadarObservation<T>> {
    simulate(x, 0, false, beta, sigma_r2, rng, with_clutter)
}

/// Subtract a target-free capture; independent noise adds in power.
pub fn background_subtract<T: Real>(
    with_target: &RadarObservation<T>,
    without_target: &RadarObservation<T>,
) -> Result<RadarObservation<T>> {
    let n = with_target.y_r.len();
    if without_target.y_r.len() != n {
        return Err(IsacError::LengthMismatch { expected: n, found: without_target.y_r.len() });
    }
    Ok(RadarObservation {
        y_r: with_target.y_r.iter().zip(&without_target.y_r).map(|(a, b)| a - b).collect(),
        clutter_only: None,
        n0_true: with_target.n0_true,
        beta: with_target.beta,
        sigma_r2: with_target.sigma_r2 + without_target.sigma_r2,
    })
}

/// Matched-filter delay profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeProfile {
    /// `|Y_r[n]|`.
    pub magnitudes: Vec<f64>,
    pub peak_bin: usize,
    /// Post-processing SNR, linear.
    pub snr_rad: f64,
    /// CRB in squared delay bins; infinite without delay information.
    pub crb_bins2: f64,
}

impl RangeProfile {
    pub fn snr_rad_db(&self) -> f64 {
        crate::scalar::to_db(self.snr_rad)
    }

    /// Mean `|Y_r[n]|²` over the off-peak bins.
    pub fn noise_floor(&self) -> f64 {
        off_peak_mean(&self.magnitudes, self.peak_bin)
    }

    /// Per-bin power relative to the off-peak floor, linear.
    pub fn bin_snr(&self) -> Vec<f64> {
        let floor = self.noise_floor();
        self.magnitudes.iter().map(|m| m * m / floor).collect()
    }
}

fn off_peak_mean(magnitudes: &[f64], peak: usize) -> f64 {
    let n = magnitudes.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = magnitudes.iter().enumerate().filter(|&(i, _)| i != peak).map(|(_, m)| m * m).sum();
    total / (n - 1) as f64
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `Y_r[n] = Σ_k y_r[k] (x^H[k] a_0) e^{-j2π nk/N_c}` via FFT.
pub fn matched_filter<T: Real>(obs: &RadarObservation<T>, x: &TxGrid<T>) -> Result<CVec<T>> {
    let n_c = x.n_subcarriers();
    if obs.y_r.len() != n_c {
        return Err(IsacError::LengthMismatch { expected: n_c, found: obs.y_r.len() });
    }
    let mut buf: CVec<T> = obs.y_r.iter().zip(x.broadside_projection()).map(|(y, s)| y * s.conj()).collect();
    FftPlanner::new().plan_fft_forward(n_c).process(&mut buf);
    Ok(buf)
}

pub fn range_profile<T: Real>(obs: &RadarObservation<T>, x: &TxGrid<T>) -> Result<RangeProfile> {
    let spectrum = matched_filter(obs, x)?;
    let magnitudes: Vec<f64> = spectrum.iter().map(|z| z.norm().as_f64()).collect();
    if magnitudes.iter().all(|&m| m == 0.0) {
        return Err(IsacError::UndefinedProfile);
    }
    let peak_bin = argmax(&magnitudes);
    let floor = off_peak_mean(&magnitudes, peak_bin);
    let peak = magnitudes[peak_bin] * magnitudes[peak_bin];
    let snr_rad = if floor > 0.0 { peak / floor } else { f64::INFINITY };
    let n_c = x.n_subcarriers();
    let crb_bins2 = crb(x, obs.beta, obs.sigma_r2 / n_c as f64).unwrap_or(f64::INFINITY);
    Ok(RangeProfile { magnitudes, peak_bin, snr_rad, crb_bins2 })
}

/// `β² (N_c − 1) Σ_k |a_0^H x[k]|² / σ_r²`.
pub fn snr_rad_closed_form<T: Real>(x: &TxGrid<T>, beta: f64, sigma_r2: f64) -> f64 {
    snr_from_gain(broadside_gain(x), x.n_subcarriers(), beta, sigma_r2)
}

pub fn snr_from_gain(g0: f64, n_c: usize, beta: f64, sigma_r2: f64) -> f64 {
    beta * beta * (n_c as f64 - 1.0) * g0 / sigma_r2
}

/// `σ² N_c² / (8π² β² Σ_k k² |a_0^H x[k]|²)` with `σ²` the per-subcarrier
/// noise variance.
pub fn crb<T: Real>(x: &TxGrid<T>, beta: f64, sigma2: f64) -> Result<f64> {
    crb_from_profile(&x.broadside_profile(), beta, sigma2)
}

pub fn crb_from_profile(profile: &[f64], beta: f64, sigma2: f64) -> Result<f64> {
    let info = fisher_information(profile, beta, sigma2);
    if !(info > 0.0) {
        return Err(IsacError::ZeroInformation);
    }
    Ok(1.0 / info)
}

/// Fisher information on `n_0` carried by the observation.
pub fn fisher_information(profile: &[f64], beta: f64, sigma2: f64) -> f64 {
    let n_c = profile.len() as f64;
    let weighted: f64 = profile.iter().enumerate().map(|(k, g)| (k * k) as f64 * g).sum();
    8.0 * std::f64::consts::PI.powi(2) * beta * beta * weighted / (sigma2 * n_c * n_c)
}

/// Gaussian log-likelihood of `y` for a continuous delay `n0`, up to a
/// constant: `−Σ_k |y[k] − β s[k] e^{j2π n0 k/N_c}|² / σ²`.
pub fn log_likelihood(y: &[Complex<f64>], s: &[Complex<f64>], beta: f64, sigma2: f64, n0: f64) -> f64 {
    let n_c = y.len() as f64;
    -y.iter()
        .zip(s)
        .enumerate()
        .map(|(k, (yk, sk))| {
            let mean = sk * Complex::from_polar(beta, std::f64::consts::TAU * n0 * k as f64 / n_c);
            (yk - mean).norm_sqr()
        })
        .sum::<f64>()
        / sigma2
}

/// Outcome of repeated end-to-end radar captures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadarTrials {
    pub trials: usize,
    pub peak_hits: usize,
    /// Mean linear post-processing SNR.
    pub mean_snr: f64,
    pub mean_crb_bins2: f64,
}

/// Run `trials` independent captures of the echo at `n0` and average.
///
/// With clutter the target-free capture is subtracted first.
pub fn radar_trials<T: Real>(
    precoders: &PrecoderSet<T>,
    cfg: &ScenarioConfig,
    n0: usize,
    beta: f64,
    trials: usize,
    rng: &Rng,
    with_clutter: bool,
) -> Result<RadarTrials> {
    let (stats, _) = radar_trials_profile(precoders, cfg, n0, beta, trials, rng, with_clutter)?;
    Ok(stats)
}

/// As [`radar_trials`], also returning the trial-averaged per-bin SNR.
pub fn radar_trials_profile<T: Real>(
    precoders: &PrecoderSet<T>,
    cfg: &ScenarioConfig,
    n0: usize,
    beta: f64,
    trials: usize,
    rng: &Rng,
    with_clutter: bool,
) -> Result<(RadarTrials, Vec<f64>)> {
    let n_c = precoders.n_subcarriers();
    let mut bins = vec![0.0; n_c];
    let mut hits = 0;
    let mut snr_sum = 0.0;
    let mut crb_sum = 0.0;
    for t in 0..trials {
        let trial = rng.child(t as u64);
        let x = synthesize_tx(precoders, &trial);
        let with = radar_return(&x, n0, beta, cfg.noise_power_radar, &trial.child(1), with_clutter)?;
        let obs = if with_clutter {
            let without = background_return(&x, beta, cfg.noise_power_radar, &trial.child(2), true)?;
            background_subtract(&with, &without)?
        } else {
            with
        };
        let profile = range_profile(&obs, &x)?;
        hits += usize::from(profile.peak_bin == n0);
        snr_sum += profile.snr_rad;
        crb_sum += profile.crb_bins2;
        for (acc, s) in bins.iter_mut().zip(profile.bin_snr()) {
            *acc += s;
        }
    }
    let denom = trials.max(1) as f64;
    bins.iter_mut().for_each(|b| *b /= denom);
    let stats = RadarTrials { trials, peak_hits: hits, mean_snr: snr_sum / denom, mean_crb_bins2: crb_sum / denom };
    Ok((stats, if trials == 0 { Vec::new() } else { bins }))
}
