//! Seeded nonstationary case streams made of exponential waves.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::TimeSeries;

/// Values never drop below this, so the default low-count filter keeps every day.
pub const FLOOR: f64 = 100.0;

/// One outbreak: log-linear rise from `start` to `peak`, log-linear decay to `end`.
/// Days are offsets from the stream start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpec {
    pub start: usize,
    pub peak: usize,
    pub end: usize,
    pub height: f64,
}

impl FromStr for WaveSpec {
    type Err = String;

    /// Parses `<start>:<peak>:<end>:<height>` with day offsets.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, peak, end, height] = parts.as_slice() else {
            return Err(format!("wave `{s}` must look like <start>:<peak>:<end>:<height>"));
        };
        let day = |v: &str| v.parse::<usize>().map_err(|_| format!("wave `{s}`: `{v}` is not a day offset"));
        let height: f64 = height
            .parse()
            .map_err(|_| format!("wave `{s}`: `{height}` is not a number"))?;
        Ok(WaveSpec {
            start: day(start)?,
            peak: day(peak)?,
            end: day(end)?,
            height,
        })
    }
}

impl fmt::Display for WaveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.start, self.peak, self.end, self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub start_date: NaiveDate,
    pub days: usize,
    /// Level between waves.
    pub baseline: f64,
    pub waves: Vec<WaveSpec>,
    /// Standard deviation of the multiplicative Gaussian noise, as a fraction of the envelope.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::config("days", "synthetic stream needs at least one day"));
        }
        if !(self.baseline.is_finite() && self.baseline > 0.0) {
            return Err(Error::config("baseline", "baseline must be positive"));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::config("noise", "noise must be a non-negative fraction"));
        }
        for (i, w) in self.waves.iter().enumerate() {
            if !(w.start <= w.peak && w.peak <= w.end && w.start < w.end) {
                return Err(Error::config(
                    "wave",
                    format!("wave {} needs start <= peak <= end with start < end", i + 1),
                ));
            }
            if !(w.height.is_finite() && w.height > 0.0) {
                return Err(Error::config("wave", format!("wave {} height must be positive", i + 1)));
            }
        }
        let mut sorted: Vec<&WaveSpec> = self.waves.iter().collect();
        sorted.sort_by_key(|w| w.start);
        if let Some(p) = sorted.windows(2).find(|p| p[1].start < p[0].end) {
            return Err(Error::config(
                "wave",
                format!(
                    "waves [{}, {}] and [{}, {}] overlap",
                    p[0].start, p[0].end, p[1].start, p[1].end
                ),
            ));
        }
        Ok(())
    }

    /// Noise-free wave profile, one value per day.
    pub fn envelope(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let base = self.baseline;
        Ok((0..self.days)
            .map(|day| {
                let wave = self.waves.iter().find(|w| w.start <= day && day <= w.end);
                match wave {
                    None => base,
                    Some(w) => {
                        let ratio = (w.height / base).ln();
                        let frac = if day <= w.peak {
                            if w.peak == w.start {
                                1.0
                            } else {
                                (day - w.start) as f64 / (w.peak - w.start) as f64
                            }
                        } else {
                            (w.end - day) as f64 / (w.end - w.peak) as f64
                        };
                        if frac == 1.0 {
                            w.height
                        } else {
                            base * (ratio * frac).exp()
                        }
                    }
                }
            })
            .collect())
    }
}

/// Generates the stream; a pure function of `config` (including its seed).
pub fn generate_synthetic_stream(config: &SyntheticConfig) -> Result<TimeSeries> {
    let envelope = config.envelope()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let values = envelope
        .iter()
        .map(|e| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (e * (1.0 + config.noise * z)).max(FLOOR)
        })
        .collect();
    TimeSeries::from_values(config.start_date, values)
}

/// Five waves over 724 days from 2020-10-15, shaped like the Cyprus case
/// curve: three moderate waves in 2021, a large winter wave and a summer 2022 wave.
pub fn five_wave_preset(noise: f64, seed: u64) -> SyntheticConfig {
    let start_date = NaiveDate::from_ymd_opt(2020, 10, 15).expect("valid date");
    let day = |y, m, d| (NaiveDate::from_ymd_opt(y, m, d).expect("valid date") - start_date).num_days() as usize;
    let wave = |s: usize, p: usize, e: usize, height: f64| WaveSpec {
        start: s,
        peak: p,
        end: e,
        height,
    };
    SyntheticConfig {
        start_date,
        days: 724,
        baseline: 150.0,
        waves: vec![
            wave(day(2020, 11, 20), day(2021, 1, 1), day(2021, 2, 5), 900.0),
            wave(day(2021, 3, 10), day(2021, 4, 20), day(2021, 5, 25), 1100.0),
            wave(day(2021, 6, 15), day(2021, 7, 15), day(2021, 8, 20), 1200.0),
            wave(day(2021, 11, 25), day(2022, 1, 2), day(2022, 4, 20), 5000.0),
            wave(day(2022, 5, 25), day(2022, 7, 5), day(2022, 9, 10), 3000.0),
        ],
        noise,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_wave(noise: f64, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            start_date: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            days: 101,
            baseline: 150.0,
            waves: vec![WaveSpec {
                start: 0,
                peak: 50,
                end: 100,
                height: 1000.0,
            }],
            noise,
            seed,
        }
    }

    #[test]
    fn noiseless_peak_is_exact() {
        let ts = generate_synthetic_stream(&single_wave(0.0, 7)).unwrap();
        assert_eq!(ts.len(), 101);
        assert_eq!(ts.values()[50], 1000.0);
        assert!(ts.values()[..50].windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn wave_text_round_trip() {
        let w: WaveSpec = "10:40:90:1200.5".parse().unwrap();
        assert_eq!(w, WaveSpec { start: 10, peak: 40, end: 90, height: 1200.5 });
        assert_eq!(w.to_string().parse::<WaveSpec>().unwrap(), w);
        assert!("10:40:90".parse::<WaveSpec>().is_err());
        assert!("a:40:90:1".parse::<WaveSpec>().is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let a = generate_synthetic_stream(&single_wave(0.05, 3)).unwrap();
        let b = generate_synthetic_stream(&single_wave(0.05, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_differ_but_share_envelope() {
        let cfg1 = single_wave(0.05, 1);
        let cfg2 = single_wave(0.05, 2);
        let env = cfg1.envelope().unwrap();
        assert_eq!(env, cfg2.envelope().unwrap());
        let a = generate_synthetic_stream(&cfg1).unwrap();
        let b = generate_synthetic_stream(&cfg2).unwrap();
        assert_ne!(a.values(), b.values());
        for series in [&a, &b] {
            let within = series
                .values()
                .iter()
                .zip(&env)
                .filter(|(v, e)| (*v - *e).abs() <= 3.0 * 0.05 * *e)
                .count();
            // 3-sigma band holds for ~99.7% of days
            assert!(within as f64 >= 0.99 * env.len() as f64, "{within}/{}", env.len());
        }
    }

    #[test]
    fn overlapping_waves_rejected() {
        let mut cfg = single_wave(0.0, 1);
        cfg.waves.push(WaveSpec {
            start: 90,
            peak: 95,
            end: 100,
            height: 500.0,
        });
        assert!(matches!(generate_synthetic_stream(&cfg), Err(Error::Config { .. })));
    }

    #[test]
    fn floor_holds() {
        let mut cfg = single_wave(0.5, 11);
        cfg.baseline = 100.0;
        let ts = generate_synthetic_stream(&cfg).unwrap();
        assert!(ts.values().iter().all(|v| *v >= FLOOR));
    }

    #[test]
    fn five_wave_preset_spans_724_days() {
        let ts = generate_synthetic_stream(&five_wave_preset(0.05, 1)).unwrap();
        assert_eq!(ts.len(), 724);
        assert_eq!(ts.dates()[723], NaiveDate::from_ymd_opt(2022, 10, 8).unwrap());
    }
}
