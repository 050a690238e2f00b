//! Synthetic PV sensor datasets with a known ground-truth power function.
//!
//! Illuminance follows a clamped half-sine clear-sky curve (day length from
//! latitude and time of year) modulated by random cloud dips; temperature is
//! a lagged diurnal sinusoid; humidity runs anti-phase to temperature and is
//! pushed into saturation around dawn, reproducing the real sensor's early
//! morning plateau. Day-to-day weather variation is injected as seeded
//! per-day offsets scaled by the configured amplitudes. Power is an exact
//! linear combination of the recorded channel values plus optional Gaussian
//! noise, clamped at zero; voltage is a constant-voltage load bus and the
//! current carries the power.
//!
//! The half-sine stands in for the unspecified clear-sky model; it is a
//! deliberate simplification and is isolated in [`clear_sky_elevation`].

use chrono::{Datelike, Duration, Timelike};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::types::{
    validate_record, Dataset, MeasurementRecord, Timestamp, ILLUMINANCE_MAX_LUX,
};

/// Ground-truth linear panel response, watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelCoeffs {
    /// W per lux.
    pub lux: f64,
    /// W per degree Celsius.
    pub temperature: f64,
    /// W per percent relative humidity.
    pub humidity: f64,
    /// W.
    pub intercept: f64,
}

/// Per-channel Gaussian noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSd {
    pub illuminance: f64,
    pub temperature: f64,
    pub humidity: f64,
    pub power: f64,
}

impl NoiseSd {
    pub const ZERO: NoiseSd = NoiseSd {
        illuminance: 0.0,
        temperature: 0.0,
        humidity: 0.0,
        power: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub start: Timestamp,
    pub days: u32,
    pub period: Duration,
    /// Degrees north; sets day length over the year.
    pub latitude_deg: f64,
    pub peak_illuminance: f64,
    pub temp_base: f64,
    pub temp_amplitude: f64,
    pub humidity_base: f64,
    pub humidity_amplitude: f64,
    pub panel_coeffs: PanelCoeffs,
    pub noise_sd: NoiseSd,
    pub cloud_events_per_day: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            start: crate::ingest::default_utc_offset()
                .with_ymd_and_hms(2019, 1, 14, 0, 0, 0)
                .unwrap(),
            days: 30,
            period: Duration::minutes(5),
            latitude_deg: 19.7,
            peak_illuminance: 110_000.0,
            temp_base: 18.0,
            temp_amplitude: 9.0,
            humidity_base: 62.0,
            humidity_amplitude: 28.0,
            panel_coeffs: PanelCoeffs {
                lux: 8.0e-4,
                temperature: -0.5,
                humidity: -0.10,
                intercept: 8.0,
            },
            noise_sd: NoiseSd {
                illuminance: 800.0,
                temperature: 0.3,
                humidity: 1.5,
                power: 0.5,
            },
            cloud_events_per_day: 3.0,
            seed: 42,
        }
    }
}

use chrono::TimeZone;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::InvalidConfig("days must be >= 1".into()));
        }
        if self.period <= Duration::zero() {
            return Err(Error::InvalidConfig("period must be positive".into()));
        }
        if !(0.0..=ILLUMINANCE_MAX_LUX).contains(&self.peak_illuminance) {
            return Err(Error::InvalidConfig(format!(
                "peak_illuminance must lie in [0, {ILLUMINANCE_MAX_LUX}]"
            )));
        }
        if self.temp_amplitude < 0.0 || self.humidity_amplitude < 0.0 {
            return Err(Error::InvalidConfig("amplitudes must be non-negative".into()));
        }
        for sd in [
            self.noise_sd.illuminance,
            self.noise_sd.temperature,
            self.noise_sd.humidity,
            self.noise_sd.power,
        ] {
            if sd < 0.0 {
                return Err(Error::InvalidConfig("noise_sd must be non-negative".into()));
            }
        }
        if self.cloud_events_per_day < 0.0 {
            return Err(Error::InvalidConfig(
                "cloud_events_per_day must be non-negative".into(),
            ));
        }
        if self.latitude_deg.abs() >= 66.0 {
            return Err(Error::InvalidConfig(
                "latitude must stay below the polar circles".into(),
            ));
        }
        Ok(())
    }
}

/// The exact noise-free linear combination used by the generator, before
/// the clamp at zero.
pub fn ground_truth_power(config: &SynthConfig, lux: f64, temp: f64, hum: f64) -> f64 {
    let c = &config.panel_coeffs;
    c.lux * lux + c.temperature * temp + c.humidity * hum + c.intercept
}

/// Constant-voltage bus level of the electronic load, volts.
const BUS_VOLTAGE: f64 = 14.3;
/// Humidity push applied around dawn, percentage points.
const DAWN_HUMIDITY_BOOST: f64 = 14.0;
/// Fractions of the configured amplitudes used for day-to-day offsets.
const DAILY_TEMP_VARIATION: f64 = 0.28;
const DAILY_HUMIDITY_VARIATION: f64 = 0.21;

/// Normalized solar elevation in [0, 1]: a half sine between dawn and dusk,
/// zero at night. Day length follows the standard declination formula for
/// the configured latitude.
pub fn clear_sky_elevation(latitude_deg: f64, day_of_year: u32, hour: f64) -> f64 {
    let (dawn, dusk) = daylight_window(latitude_deg, day_of_year);
    if hour <= dawn || hour >= dusk {
        return 0.0;
    }
    (std::f64::consts::PI * (hour - dawn) / (dusk - dawn)).sin().max(0.0)
}

struct CloudEvent {
    center_hour: f64,
    width_hours: f64,
    depth: f64,
}

struct DayWeather {
    dawn: f64,
    temp_offset: f64,
    humidity_offset: f64,
    clouds: Vec<CloudEvent>,
}

fn daylight_window(latitude_deg: f64, day_of_year: u32) -> (f64, f64) {
    let declination = -23.44f64.to_radians()
        * (std::f64::consts::TAU * (day_of_year as f64 + 10.0) / 365.0).cos();
    let cos_hour_angle = (-latitude_deg.to_radians().tan() * declination.tan()).clamp(-1.0, 1.0);
    let half_day = cos_hour_angle.acos() / std::f64::consts::PI * 12.0;
    (12.0 - half_day, 12.0 + half_day)
}

fn draw_day(rng: &mut ChaCha8Rng, config: &SynthConfig, day_of_year: u32) -> DayWeather {
    let (dawn, dusk) = daylight_window(config.latitude_deg, day_of_year);
    let temp_offset =
        sample_normal(rng, config.temp_amplitude * DAILY_TEMP_VARIATION);
    let humidity_offset =
        sample_normal(rng, config.humidity_amplitude * DAILY_HUMIDITY_VARIATION);
    let count = if config.cloud_events_per_day > 0.0 {
        Poisson::new(config.cloud_events_per_day)
            .expect("validated lambda")
            .sample(rng) as usize
    } else {
        0
    };
    let clouds = (0..count)
        .map(|_| CloudEvent {
            center_hour: rng.gen_range(dawn..dusk),
            width_hours: rng.gen_range(1.0 / 6.0..1.0),
            depth: rng.gen_range(0.2..0.85),
        })
        .collect();
    DayWeather {
        dawn,
        temp_offset,
        humidity_offset,
        clouds,
    }
}

fn sample_normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    Normal::new(0.0, sd).expect("validated sd").sample(rng)
}

fn cloud_attenuation(clouds: &[CloudEvent], hour: f64) -> f64 {
    clouds.iter().fold(1.0, |acc, event| {
        let normalized = (hour - event.center_hour) / event.width_hours;
        acc * (1.0 - event.depth * (-normalized * normalized).exp())
    })
}

/// Generates a validated dataset on a fixed grid, deterministic in the
/// config seed.
pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let period_seconds = config.period.num_seconds();
    let total_seconds = config.days as i64 * 86_400;
    let steps = total_seconds / period_seconds;
    let lux_cap = (config.peak_illuminance * 1.05).min(ILLUMINANCE_MAX_LUX);

    let mut records = Vec::with_capacity(steps as usize);
    let mut current_day = -1i64;
    let mut weather: Option<DayWeather> = None;

    for k in 0..steps {
        let ts = config.start + Duration::seconds(k * period_seconds);
        let day_index = k * period_seconds / 86_400;
        let hour = ts.hour() as f64 + ts.minute() as f64 / 60.0 + ts.second() as f64 / 3600.0;
        if day_index != current_day {
            current_day = day_index;
            weather = Some(draw_day(&mut rng, config, ts.ordinal()));
        }
        let weather = weather.as_ref().expect("drawn on first step");

        let elevation = clear_sky_elevation(config.latitude_deg, ts.ordinal(), hour);
        let clear_lux = config.peak_illuminance * elevation;
        let lux = (clear_lux * cloud_attenuation(&weather.clouds, hour)
            + sample_normal(&mut rng, config.noise_sd.illuminance))
        .clamp(0.0, lux_cap);

        let diurnal = (std::f64::consts::TAU * (hour - 15.0) / 24.0).cos();
        let temp = config.temp_base
            + weather.temp_offset
            + config.temp_amplitude * diurnal
            + sample_normal(&mut rng, config.noise_sd.temperature);

        let dawn_push = DAWN_HUMIDITY_BOOST * (-((hour - weather.dawn) / 0.9).powi(2)).exp();
        let hum = (config.humidity_base + weather.humidity_offset
            - config.humidity_amplitude * diurnal
            + dawn_push
            + sample_normal(&mut rng, config.noise_sd.humidity))
        .clamp(0.0, 100.0);

        let power = (ground_truth_power(config, lux, temp, hum)
            + sample_normal(&mut rng, config.noise_sd.power))
        .max(0.0);
        let (voltage, current) = if power > 0.0 {
            (BUS_VOLTAGE, power / BUS_VOLTAGE)
        } else {
            (0.0, 0.0)
        };

        records.push(validate_record(MeasurementRecord::new(
            ts,
            Some(lux),
            Some(temp),
            Some(hum),
            Some(voltage),
            Some(current),
        )));
    }
    Dataset::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlr::fit_mlr;
    use crate::stats::pearson;
    use crate::types::{Channel, DataMatrix, QualityFlags, Variable};

    /// Config whose linear form stays positive everywhere, so the power
    /// clamp never engages.
    fn linear_config() -> SynthConfig {
        SynthConfig {
            days: 4,
            panel_coeffs: PanelCoeffs {
                lux: 8.0e-4,
                temperature: -0.2,
                humidity: -0.05,
                intercept: 25.0,
            },
            noise_sd: NoiseSd::ZERO,
            cloud_events_per_day: 0.0,
            seed: 9,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn one_day_at_five_minutes_gives_288_records() {
        let config = SynthConfig {
            days: 1,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&config).unwrap().len(), 288);
    }

    #[test]
    fn long_run_covers_the_field_campaign_volume() {
        let config = SynthConfig {
            days: 120,
            ..SynthConfig::default()
        };
        assert!(generate(&config).unwrap().len() >= 32_200);
    }

    #[test]
    fn clear_midnight_has_zero_lux_and_intercept_power() {
        let config = SynthConfig {
            days: 1,
            panel_coeffs: PanelCoeffs {
                lux: 1.0e-3,
                temperature: 0.0,
                humidity: 0.0,
                intercept: 5.0,
            },
            noise_sd: NoiseSd::ZERO,
            cloud_events_per_day: 0.0,
            ..SynthConfig::default()
        };
        let dataset = generate(&config).unwrap();
        let midnight = &dataset.records()[0];
        assert_eq!(midnight.illuminance, Some(0.0));
        let power = midnight.power.unwrap();
        assert!((power - 5.0).abs() < 1e-9, "power {power}");
    }

    #[test]
    fn ground_truth_is_direct_arithmetic() {
        let config = SynthConfig {
            panel_coeffs: PanelCoeffs {
                lux: 0.001,
                temperature: -0.1,
                humidity: 0.0,
                intercept: 5.0,
            },
            ..SynthConfig::default()
        };
        assert!((ground_truth_power(&config, 10_000.0, 20.0, 40.0) - 13.0).abs() < 1e-12);

        let constant = SynthConfig {
            panel_coeffs: PanelCoeffs {
                lux: 0.0,
                temperature: 0.0,
                humidity: 0.0,
                intercept: 7.0,
            },
            ..SynthConfig::default()
        };
        assert_eq!(ground_truth_power(&constant, 1.0, 2.0, 3.0), 7.0);
    }

    #[test]
    fn recorded_power_matches_ground_truth_when_noise_free() {
        let config = linear_config();
        let dataset = generate(&config).unwrap();
        for record in dataset.records() {
            let expected = ground_truth_power(
                &config,
                record.illuminance.unwrap(),
                record.temperature.unwrap(),
                record.humidity.unwrap(),
            );
            let actual = record.power.unwrap();
            assert!(
                (actual - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                "{actual} vs {expected}"
            );
        }
    }

    #[test]
    fn equal_seeds_give_bit_identical_datasets() {
        let config = SynthConfig {
            days: 2,
            ..SynthConfig::default()
        };
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.records(), b.records());

        let other = SynthConfig { seed: 43, ..config };
        let c = generate(&other).unwrap();
        assert_ne!(a.records(), c.records());
    }

    #[test]
    fn generated_values_respect_physical_bounds() {
        let config = SynthConfig {
            days: 6,
            ..SynthConfig::default()
        };
        let dataset = generate(&config).unwrap();
        let cap = config.peak_illuminance * 1.05;
        for record in dataset.records() {
            let hum = record.humidity.unwrap();
            assert!((0.0..=100.0).contains(&hum));
            let lux = record.illuminance.unwrap();
            assert!((0.0..=cap).contains(&lux));
            assert!(!record.quality_flags.contains(QualityFlags::OUT_OF_RANGE));
        }
    }

    #[test]
    fn dawn_saturation_occurs_and_is_flagged() {
        let config = SynthConfig {
            days: 3,
            ..SynthConfig::default()
        };
        let dataset = generate(&config).unwrap();
        let saturated = dataset
            .records()
            .iter()
            .filter(|r| r.quality_flags.contains(QualityFlags::HUMIDITY_SATURATED))
            .count();
        assert!(saturated > 0, "no saturated records generated");
    }

    #[test]
    fn noise_free_linear_data_recovers_panel_coeffs() {
        let config = linear_config();
        let dataset = generate(&config).unwrap();
        let (matrix, _) = DataMatrix::from_dataset(&dataset, &Variable::ALL, true).unwrap();
        let model = fit_mlr(&matrix).unwrap();
        let c = &config.panel_coeffs;
        let expected = [c.lux, c.temperature, c.humidity];
        for (got, want) in model.coefficients().iter().zip(expected) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
        assert!((model.intercept() - c.intercept).abs() < 1e-8);
    }

    #[test]
    fn humidity_runs_against_temperature() {
        let dataset = generate(&SynthConfig {
            days: 10,
            ..SynthConfig::default()
        })
        .unwrap();
        let series = |channel: Channel| -> Vec<f64> {
            dataset
                .records()
                .iter()
                .map(|r| r.channel(channel).unwrap())
                .collect()
        };
        let temp_hum = pearson(&series(Channel::Temperature), &series(Channel::Humidity)).unwrap();
        let lux_power = pearson(&series(Channel::Illuminance), &series(Channel::Power)).unwrap();
        assert!(temp_hum < 0.0, "temperature-humidity r = {temp_hum}");
        assert!(temp_hum < lux_power);
        assert!(lux_power > 0.9, "illuminance-power r = {lux_power}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = SynthConfig::default();
        config.days = 0;
        assert!(matches!(generate(&config), Err(Error::InvalidConfig(_))));

        let mut config = SynthConfig::default();
        config.peak_illuminance = 500_000.0;
        assert!(matches!(generate(&config), Err(Error::InvalidConfig(_))));

        let mut config = SynthConfig::default();
        config.noise_sd.power = -1.0;
        assert!(matches!(generate(&config), Err(Error::InvalidConfig(_))));
    }
}
