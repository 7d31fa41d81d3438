use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};

/// One measurement scenario. Serializes to JSON with exactly these field
/// names; unknown keys are rejected.
///
/// Powers are linear. `noise_power_radar` is the per-sample (time domain)
/// noise power at the radar receiver; after OFDM demodulation each
/// subcarrier carries `noise_power_radar / n_subcarriers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_subcarriers: usize,
    pub total_power: f64,
    pub noise_power_comms: f64,
    pub noise_power_radar: f64,
    pub ue_angles_deg: [f64; 2],
    pub ue_gains: [f64; 2],
    pub target_angle_deg: f64,
    pub target_delay_bins: usize,
    pub target_attenuation: f64,
    pub csit_error_var: f64,
    pub shannon_gap_db: f64,
    pub seed: u64,
}

/// Subcarriers on the measurement testbed.
pub const DEFAULT_SUBCARRIERS: usize = 512;

/// Reference SNR `P_T |g|^2 / (N_c σ²)` of the default scenarios, in dB.
/// Absolute power cancels in every ratio, so only this quantity matters.
pub const DEFAULT_REFERENCE_SNR_DB: f64 = 25.0;

impl Default for ScenarioConfig {
    /// Target at broadside three range bins out, UEs at ±30°.
    fn default() -> Self {
        let n = DEFAULT_SUBCARRIERS;
        Self {
            n_subcarriers: n,
            // Normalized transmit power.
            total_power: 1.0,
            noise_power_comms: 6.0e-6,
            // Puts the sensing-only point at ~22 dB post-processing SNR.
            noise_power_radar: 0.064,
            ue_angles_deg: [-30.0, 30.0],
            ue_gains: [1.0, 1.0],
            target_angle_deg: 0.0,
            target_delay_bins: 3,
            target_attenuation: 0.1,
            csit_error_var: 0.0,
            shannon_gap_db: 0.0,
            seed: 7,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IsacError::InvalidConfig(msg));
        if self.n_subcarriers < 2 {
            return bad(format!("n_subcarriers must be >= 2, got {}", self.n_subcarriers));
        }
        for (name, v) in [
            ("total_power", self.total_power),
            ("noise_power_comms", self.noise_power_comms),
            ("noise_power_radar", self.noise_power_radar),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (i, g) in self.ue_gains.iter().enumerate() {
            if !(*g > 0.0 && g.is_finite()) {
                return bad(format!("ue_gains[{i}] must be positive, got {g}"));
            }
        }
        for a in self.ue_angles_deg.iter().chain([&self.target_angle_deg]) {
            if !a.is_finite() || a.abs() > 90.0 {
                return bad(format!("angles must lie in [-90, 90] degrees, got {a}"));
            }
        }
        if self.target_delay_bins >= self.n_subcarriers {
            return bad(format!(
                "target_delay_bins ({}) must be below n_subcarriers ({})",
                self.target_delay_bins, self.n_subcarriers
            ));
        }
        if !self.target_attenuation.is_finite() {
            return bad("target_attenuation must be finite".into());
        }
        if !(self.csit_error_var >= 0.0) {
            return bad(format!("csit_error_var must be >= 0, got {}", self.csit_error_var));
        }
        if !(self.shannon_gap_db >= 0.0) {
            return bad(format!("shannon_gap_db must be >= 0, got {}", self.shannon_gap_db));
        }
        Ok(())
    }

    /// UE channel strengths within a factor of two of each other.
    pub fn gains_balanced(&self) -> bool {
        let [a, b] = self.ue_gains;
        a.max(b) <= 2.0 * a.min(b)
    }

    /// Change `N_c` keeping the per-subcarrier communications SNR fixed.
    ///
    /// Precoder power per subcarrier scales as `1/N_c`, so the comms noise
    /// power is scaled by the same factor. The radar noise is a per-sample
    /// quantity and is left untouched.
    pub fn with_subcarriers(mut self, n: usize) -> Self {
        self.noise_power_comms *= self.n_subcarriers as f64 / n as f64;
        self.n_subcarriers = n;
        self
    }

    /// Per-subcarrier noise variance of the demodulated radar return.
    pub fn radar_noise_per_subcarrier(&self) -> f64 {
        self.noise_power_radar / self.n_subcarriers as f64
    }

    /// Apply a `key=value` override. Keys are the JSON field names; list
    /// fields take comma-separated values.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| IsacError::InvalidConfig(format!("cannot parse `{v}` for `{key}`")))
        }
        fn pair(key: &str, v: &str) -> Result<[f64; 2]> {
            let parts: Vec<&str> = v.split(',').collect();
            if parts.len() != 2 {
                return Err(IsacError::InvalidConfig(format!("`{key}` needs two comma-separated values")));
            }
            Ok([num(key, parts[0])?, num(key, parts[1])?])
        }
        match key {
            "n_subcarriers" => self.n_subcarriers = num(key, value)?,
            "total_power" => self.total_power = num(key, value)?,
            "noise_power_comms" => self.noise_power_comms = num(key, value)?,
            "noise_power_radar" => self.noise_power_radar = num(key, value)?,
            "ue_angles_deg" => self.ue_angles_deg = pair(key, value)?,
            "ue_gains" => self.ue_gains = pair(key, value)?,
            "target_angle_deg" => self.target_angle_deg = num(key, value)?,
            "target_delay_bins" => self.target_delay_bins = num(key, value)?,
            "target_attenuation" => self.target_attenuation = num(key, value)?,
            "csit_error_var" => self.csit_error_var = num(key, value)?,
            "shannon_gap_db" => self.shannon_gap_db = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(IsacError::InvalidConfig(format!("unknown scenario field `{key}`"))),
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| IsacError::InvalidConfig(format!("scenario JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}

/// Synthetic stand-ins for the three measurement geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// UEs and target mutually well separated.
    S1,
    /// UEs close together, well separated from the target.
    S2,
    /// UEs and target all close together.
    S3,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::S1, Preset::S2, Preset::S3];

    /// UE angles in degrees; the target sits at broadside.
    ///
    /// With a two-element half-wavelength array, ±30° makes the two UE
    /// channels orthogonal. S2 and S3 place the UEs 10° apart, giving a
    /// channel correlation above 0.96.
    pub fn ue_angles(self) -> [f64; 2] {
        match self {
            Preset::S1 => [-30.0, 30.0],
            Preset::S2 => [35.0, 45.0],
            Preset::S3 => [-5.0, 5.0],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Preset::S1 => "S1",
            Preset::S2 => "S2",
            Preset::S3 => "S3",
        };
        f.write_str(s)
    }
}

impl FromStr for Preset {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S1" => Ok(Preset::S1),
            "S2" => Ok(Preset::S2),
            "S3" => Ok(Preset::S3),
            _ => Err(IsacError::UnknownPreset(s.to_string())),
        }
    }
}

pub fn scenario_preset(name: &str) -> Result<ScenarioConfig> {
    let preset: Preset = name.parse()?;
    Ok(ScenarioConfig { ue_angles_deg: preset.ue_angles(), ..ScenarioConfig::default() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_encode_the_geometries() {
        let s1 = scenario_preset("S1").unwrap();
        let [a, b] = s1.ue_angles_deg;
        assert!((a - b).abs() >= 60.0);
        assert!(a.abs().min(b.abs()) >= 30.0);

        let [a, b] = scenario_preset("S2").unwrap().ue_angles_deg;
        assert!((a - b).abs() <= 10.0);
        assert!(a.abs().min(b.abs()) >= 30.0);

        let [a, b] = scenario_preset("s3").unwrap().ue_angles_deg;
        assert!((a - b).abs() <= 10.0);
        assert!(a.abs().min(b.abs()) <= 10.0);
    }

    #[test]
    fn preset_defaults() {
        for p in Preset::ALL {
            let cfg = scenario_preset(&p.to_string()).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.n_subcarriers, 512);
            assert_eq!(cfg.target_angle_deg, 0.0);
            assert!(cfg.gains_balanced());
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(scenario_preset("S4"), Err(IsacError::UnknownPreset(_))));
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let mut v: serde_json::Value = serde_json::from_str(&ScenarioConfig::default().to_json()).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = scenario_preset("S2").unwrap();
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn json_field_names() {
        let v: serde_json::Value = serde_json::from_str(&ScenarioConfig::default().to_json()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "csit_error_var",
                "n_subcarriers",
                "noise_power_comms",
                "noise_power_radar",
                "seed",
                "shannon_gap_db",
                "target_angle_deg",
                "target_attenuation",
                "target_delay_bins",
                "total_power",
                "ue_angles_deg",
                "ue_gains"
            ]
        );
    }

    #[test]
    fn validation_errors() {
        let mut cfg = ScenarioConfig::default();
        cfg.target_delay_bins = cfg.n_subcarriers;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.n_subcarriers = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.csit_error_var = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = ScenarioConfig::default();
        cfg.set("shannon_gap_db", "2").unwrap();
        cfg.set("ue_angles_deg", "-10, 10").unwrap();
        assert_eq!(cfg.shannon_gap_db, 2.0);
        assert_eq!(cfg.ue_angles_deg, [-10.0, 10.0]);
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("seed", "x").is_err());
    }

    #[test]
    fn rescaling_subcarriers_keeps_snr() {
        let cfg = ScenarioConfig::default();
        let small = cfg.clone().with_subcarriers(64);
        let snr = |c: &ScenarioConfig| c.total_power / (c.n_subcarriers as f64 * c.noise_power_comms);
        assert!((snr(&cfg) - snr(&small)).abs() < 1e-9 * snr(&cfg));
    }
}
