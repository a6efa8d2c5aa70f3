//! FMCW radar parameter mathematics.
//!
//! The radar chirps linearly from `start_frequency` to
//! `start_frequency + bandwidth`; each chirp lasts one pulse repetition
//! interval and a frame holds `chirps_per_frame` chirps. Everything here is a
//! pure function of a [`RadarConfig`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Lower edge of the 76-81 GHz automotive/industrial band (Hz).
pub const TI_BAND_LOW_HZ: f64 = 76.0e9;
/// Upper edge of the 76-81 GHz band (Hz).
pub const TI_BAND_HIGH_HZ: f64 = 81.0e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadarError {
    #[error("invalid radar config: {0}")]
    InvalidConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Chirp and frame configuration of the radar front end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub samples_per_chirp: u32,
    pub chirps_per_frame: u32,
    #[serde(rename = "start_frequency_hz")]
    pub start_frequency: f64,
    #[serde(rename = "frame_duration_s")]
    pub frame_duration: f64,
    #[serde(rename = "bandwidth_hz")]
    pub bandwidth: f64,
    #[serde(rename = "pri_s")]
    pub pulse_repetition_interval: f64,
    /// Require the swept band to stay inside 76-81 GHz.
    #[serde(default)]
    pub ti_band: bool,
}

impl Default for RadarConfig {
    /// The IWR1443 configuration used for the recordings.
    fn default() -> Self {
        Self {
            samples_per_chirp: 240,
            chirps_per_frame: 16,
            start_frequency: 79.21e9,
            frame_duration: 0.03333,
            bandwidth: 2.4398e9,
            pulse_repetition_interval: 64.140e-6,
            ti_band: false,
        }
    }
}

impl RadarConfig {
    pub fn max_frequency(&self) -> f64 {
        self.start_frequency + self.bandwidth
    }

    /// Chirp slope in Hz/s, taken as bandwidth over the pulse repetition
    /// interval.
    pub fn chirp_slope(&self) -> f64 {
        self.bandwidth / self.pulse_repetition_interval
    }

    /// Time spent chirping inside one frame.
    pub fn active_frame_time(&self) -> f64 {
        f64::from(self.chirps_per_frame) * self.pulse_repetition_interval
    }

    pub fn validate(&self) -> Vec<ConfigViolation> {
        validate_config(self)
    }
}

/// One violated invariant of a [`RadarConfig`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigViolation {
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Minimum separable distance between two targets, `c / (2 BW)`.
pub fn range_resolution(config: &RadarConfig) -> Result<f64, RadarError> {
    if !(config.bandwidth > 0.0) || !config.bandwidth.is_finite() {
        return Err(RadarError::InvalidConfig(format!("bandwidth must be positive, got {}", config.bandwidth)));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * config.bandwidth))
}

/// Round-trip propagation delay to a target at `distance` meters.
pub fn round_trip_delay(distance: f64) -> Result<f64, RadarError> {
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(RadarError::Domain(format!("distance must be non-negative and finite, got {distance}")));
    }
    Ok(2.0 * distance / SPEED_OF_LIGHT)
}

/// Inverse of [`round_trip_delay`]: `c τ / 2`.
pub fn delay_to_range(delay: f64) -> Result<f64, RadarError> {
    if !(delay >= 0.0) || !delay.is_finite() {
        return Err(RadarError::Domain(format!("delay must be non-negative and finite, got {delay}")));
    }
    Ok(SPEED_OF_LIGHT * delay / 2.0)
}

/// Target range for an IF beat frequency: `c f_b / (2 S)` with S the chirp
/// slope.
pub fn beat_frequency_to_range(beat_frequency: f64, config: &RadarConfig) -> Result<f64, RadarError> {
    if !(beat_frequency >= 0.0) || !beat_frequency.is_finite() {
        return Err(RadarError::Domain(format!(
            "beat frequency must be non-negative and finite, got {beat_frequency}"
        )));
    }
    let slope = config.chirp_slope();
    if !(slope > 0.0) || !slope.is_finite() {
        return Err(RadarError::InvalidConfig(format!("chirp slope must be positive, got {slope}")));
    }
    Ok(SPEED_OF_LIGHT * beat_frequency / (2.0 * slope))
}

/// Whole frames that fit in a clip of `clip_duration` seconds.
pub fn frames_per_clip(clip_duration: f64, config: &RadarConfig) -> Result<usize, RadarError> {
    if !(clip_duration > 0.0) || !clip_duration.is_finite() {
        return Err(RadarError::Domain(format!("clip duration must be positive, got {clip_duration}")));
    }
    if !(config.frame_duration > 0.0) {
        return Err(RadarError::InvalidConfig(format!(
            "frame duration must be positive, got {}",
            config.frame_duration
        )));
    }
    // Slack absorbs representation error when the ratio is an integer.
    Ok((clip_duration / config.frame_duration + 1e-9).floor() as usize)
}

/// Collects every violated invariant; an empty list means the config is valid.
pub fn validate_config(config: &RadarConfig) -> Vec<ConfigViolation> {
    let mut out = Vec::new();
    let mut positive = |field: &'static str, value: f64| {
        if !(value > 0.0) || !value.is_finite() {
            out.push(ConfigViolation { field, message: format!("must be strictly positive and finite, got {value}") });
        }
    };
    positive("samples_per_chirp", f64::from(config.samples_per_chirp));
    positive("chirps_per_frame", f64::from(config.chirps_per_frame));
    positive("start_frequency_hz", config.start_frequency);
    positive("frame_duration_s", config.frame_duration);
    positive("bandwidth_hz", config.bandwidth);
    positive("pri_s", config.pulse_repetition_interval);

    let active = config.active_frame_time();
    if active.is_finite() && config.frame_duration.is_finite() && active > config.frame_duration {
        out.push(ConfigViolation {
            field: "pri_s",
            message: format!(
                "{} chirps x {} s = {} s exceed the frame duration {} s",
                config.chirps_per_frame, config.pulse_repetition_interval, active, config.frame_duration
            ),
        });
    }

    if config.ti_band {
        let lo = config.start_frequency;
        let hi = config.max_frequency();
        if lo < TI_BAND_LOW_HZ || hi > TI_BAND_HIGH_HZ {
            out.push(ConfigViolation {
                field: "start_frequency_hz",
                message: format!("swept band [{lo:e}, {hi:e}] Hz leaves [{TI_BAND_LOW_HZ:e}, {TI_BAND_HIGH_HZ:e}] Hz"),
            });
        }
    }
    out
}
