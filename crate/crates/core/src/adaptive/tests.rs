use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::evaluation::mae;
use crate::features::{Aggregator, FeatureItem};
use crate::ingest::{make_windows, CASES};
use crate::mlp::TrainConfig;

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 3, 1).unwrap()
}

fn stream(values: Vec<f64>) -> TimeSeries {
    TimeSeries::from_values(start(), values).unwrap()
}

fn ramp(n: usize) -> TimeSeries {
    stream((1..=n).map(|v| 100.0 + v as f64).collect())
}

/// Predicts the last input value and remembers what the memory looked like.
#[derive(Default)]
struct Probe {
    predicted_days: Vec<usize>,
    memory_snapshots: Vec<Vec<usize>>,
}

impl Forecaster for Probe {
    fn predict(&mut self, ctx: &DayContext<'_>) -> Result<Vec<f64>> {
        self.predicted_days.push(ctx.day);
        Ok(vec![ctx.input.last().copied().unwrap_or(0.0) * ctx.scale; ctx.horizon])
    }

    fn learn(&mut self, memory: &MemoryQueue) -> Result<()> {
        self.memory_snapshots.push(memory.iter().map(|e| e.issue_index).collect());
        Ok(())
    }
}

#[derive(Debug, PartialEq)]
enum Step {
    Predict(usize),
    Append { day: usize, window_end: usize, targets: (usize, usize) },
    Train(usize),
}

/// Direct transcription of the algorithm's line structure.
fn schedule_oracle(len: usize, w: usize, d: usize) -> Vec<Step> {
    let mut out = vec![Step::Predict(w)];
    for t in w + 1..=w + d - 1 {
        if t <= len {
            out.push(Step::Predict(t));
        }
    }
    for t in w + d..=len {
        out.push(Step::Append {
            day: t,
            window_end: t - d,
            targets: (t - d + 1, t),
        });
        out.push(Step::Train(t));
        out.push(Step::Predict(t));
    }
    out
}

fn observed_schedule(ts: &TimeSeries, opts: &LoopOptions) -> Vec<Step> {
    let mut steps = Vec::new();
    let mut probe = Probe::default();
    run_online_observed(ts, &mut probe, opts, |e| match e {
        LoopEvent::Predict { day, .. } => steps.push(Step::Predict(*day)),
        LoopEvent::Train { day, .. } => steps.push(Step::Train(*day)),
        LoopEvent::Append { day, example, .. } => {
            let first = ts.dates().iter().position(|d| *d == example.target_dates[0]).unwrap() + 1;
            let last = ts
                .dates()
                .iter()
                .position(|d| d == example.target_dates.last().unwrap())
                .unwrap()
                + 1;
            steps.push(Step::Append {
                day: *day,
                window_end: example.issue_index + 1,
                targets: (first, last),
            });
        }
    })
    .unwrap();
    steps
}

#[test]
fn next_day_schedule() {
    let records = run_online(&ramp(20), &mut Probe::default(), &LoopOptions::raw(7, 1, 1)).unwrap();
    assert_eq!(records.len(), 14);
    let steps = observed_schedule(&ramp(20), &LoopOptions::raw(7, 1, 1));
    let first_train = steps.iter().find_map(|s| match s {
        Step::Train(d) => Some(*d),
        _ => None,
    });
    assert_eq!(first_train, Some(8));
}

#[test]
fn three_day_horizon_schedule_matches_oracle() {
    let steps = observed_schedule(&ramp(20), &LoopOptions::raw(7, 3, 5));
    assert_eq!(steps, schedule_oracle(20, 7, 3));
    assert_eq!(steps[..3], [Step::Predict(7), Step::Predict(8), Step::Predict(9)]);
    assert_eq!(
        steps[3],
        Step::Append {
            day: 10,
            window_end: 7,
            targets: (8, 10)
        }
    );

    let mut probe = Probe::default();
    run_online(&ramp(20), &mut probe, &LoopOptions::raw(7, 3, 5)).unwrap();
    assert_eq!(probe.memory_snapshots[0], vec![6]);
}

#[test]
fn memory_of_one_holds_only_newest() {
    let mut probe = Probe::default();
    run_online(&ramp(30), &mut probe, &LoopOptions::raw(7, 2, 1)).unwrap();
    for (k, snap) in probe.memory_snapshots.iter().enumerate() {
        // training at day 9 + k uses the window ending at day 7 + k
        assert_eq!(snap, &vec![6 + k]);
    }
}

#[test]
fn training_pairs_match_window_enumeration() {
    let ts = stream((0..40).map(|i| 100.0 + ((i * 37) % 11) as f64 * 10.0).collect());
    let opts = LoopOptions::raw(5, 3, 100);
    let (norm, _) = normalize(&ts, opts.scale).unwrap();
    let oracle = make_windows(&norm, 5, 3).unwrap();
    let mut appended = Vec::new();
    run_online_observed(&ts, &mut Probe::default(), &opts, |e| {
        if let LoopEvent::Append { example, .. } = e {
            appended.push((*example).clone());
        }
    })
    .unwrap();
    assert_eq!(appended, oracle);
}

#[test]
fn records_carry_dates_and_realized_values() {
    let ts = ramp(12);
    let records = run_online(&ts, &mut Probe::default(), &LoopOptions::raw(4, 2, 3)).unwrap();
    let first = &records[0];
    assert_eq!(first.issue_day, 4);
    assert_eq!(first.issue_date, ts.dates()[3]);
    assert_eq!(first.target_dates, vec![ts.dates()[4], ts.dates()[5]]);
    assert_eq!(first.realized, vec![Some(105.0), Some(106.0)]);
    let last = records.last().unwrap();
    assert_eq!(last.issue_day, 12);
    assert_eq!(last.realized, vec![None, None]);
    assert_eq!(last.target_dates[0], ts.dates()[11].succ_opt().unwrap());
    let penultimate = &records[records.len() - 2];
    assert_eq!(penultimate.realized, vec![Some(112.0), None]);
}

#[test]
fn too_short_stream() {
    assert!(matches!(
        run_online(&ramp(9), &mut Probe::default(), &LoopOptions::raw(7, 3, 1)),
        Err(Error::InsufficientData { needed: 10, available: 9 })
    ));
}

#[test]
fn memory_bound_over_run() {
    let mut lens = Vec::new();
    run_online_observed(&ramp(120), &mut Probe::default(), &LoopOptions::raw(7, 1, 30), |e| {
        if let LoopEvent::Train { memory_len, .. } = e {
            lens.push(*memory_len);
        }
    })
    .unwrap();
    for (k, len) in lens.iter().enumerate() {
        assert_eq!(*len, (k + 1).min(30));
    }
    assert_eq!(lens.iter().max(), Some(&30));
}

#[test]
fn mlp_forecasts_are_causal() {
    let base: Vec<f64> = (0..60).map(|i| 200.0 + 50.0 * ((i as f64) / 6.0).sin()).collect();
    let cut = 40;
    let mut altered = base.clone();
    for v in &mut altered[cut..] {
        *v *= 3.0;
    }
    let opts = LoopOptions::raw(7, 2, 10);
    let run = |values: Vec<f64>| {
        let mut f = MlpForecaster::new(7, &[8], 2, TrainConfig::default()).unwrap();
        run_online(&stream(values), &mut f, &opts).unwrap()
    };
    let (a, b) = (run(base), run(altered));
    for (ra, rb) in a.iter().zip(&b).filter(|(r, _)| r.issue_day <= cut) {
        assert_eq!(ra.predicted, rb.predicted, "day {}", ra.issue_day);
    }
    assert!(a.iter().zip(&b).any(|(ra, rb)| ra.predicted != rb.predicted));
}

#[test]
fn ar_forecaster_is_exact_on_noiseless_ar_data() {
    let mut values = vec![200.0];
    while values.len() < 80 {
        values.push(5.0 + 0.8 * values.last().unwrap());
    }
    let mut ar = ArForecaster::new(30);
    let records = run_online(&stream(values), &mut ar, &LoopOptions::raw(7, 3, 1)).unwrap();
    let realized: Vec<ForecastRecord> = records.into_iter().filter(ForecastRecord::is_realized).collect();
    assert!(mae(&realized).unwrap() < 1e-6);
    let fit = ar.last_fit().unwrap();
    assert!((fit.coefficient - 0.8).abs() < 1e-6);
}

#[test]
fn offline_pretrains_on_windows_then_freezes() {
    struct Frozen {
        inner: MlpForecaster,
        checksums: Vec<u64>,
        trained_on: usize,
        learn_calls: usize,
    }
    impl Forecaster for Frozen {
        fn predict(&mut self, ctx: &DayContext<'_>) -> Result<Vec<f64>> {
            self.checksums.push(self.inner.model.checksum());
            self.inner.predict(ctx)
        }
        fn learn(&mut self, memory: &MemoryQueue) -> Result<()> {
            self.learn_calls += 1;
            self.trained_on = memory.len();
            self.inner.learn(memory)
        }
    }
    let ts = stream((0..90).map(|i| 150.0 + (i % 13) as f64 * 20.0).collect());
    let mut f = Frozen {
        inner: MlpForecaster::new(7, &[8], 1, TrainConfig::default()).unwrap(),
        checksums: Vec::new(),
        trained_on: 0,
        learn_calls: 0,
    };
    let records = run_offline(&ts, &mut f, &LoopOptions::raw(7, 1, 1), 30).unwrap();
    assert_eq!(f.trained_on, 23);
    assert_eq!(f.learn_calls, 1);
    assert_eq!(f.inner.model.step(), 23);
    assert_eq!(records.len(), 90 - 30 + 1);
    assert_eq!(records[0].issue_day, 30);
    assert_eq!(f.checksums.first(), f.checksums.last());
    assert!(f.checksums.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn offline_rejects_short_pretraining() {
    assert!(matches!(
        run_offline(&ramp(60), &mut Probe::default(), &LoopOptions::raw(7, 1, 1), 7),
        Err(Error::Config { .. })
    ));
}

#[test]
fn feature_mode_uses_spec_window_as_lookback() {
    let n = 40;
    let mut covs = BTreeMap::new();
    covs.insert("stringency".to_string(), (0..n).map(|i| (i % 5) as f64).collect());
    let ts = TimeSeries::with_covariates(
        start().iter_days().take(n).collect(),
        (0..n).map(|i| 120.0 + i as f64).collect(),
        covs,
    )
    .unwrap();
    let spec = FeatureSpec::new(
        vec![
            FeatureItem {
                column: CASES.into(),
                aggregator: Aggregator::Mean,
            },
            FeatureItem {
                column: "stringency".into(),
                aggregator: Aggregator::StdDev,
            },
            "stringency:max".parse().unwrap(),
        ],
        14,
    )
    .unwrap();
    let opts = LoopOptions {
        features: Some(spec.clone()),
        ..LoopOptions::raw(7, 7, 1)
    };
    assert_eq!(opts.lookback(), 14);
    assert_eq!(opts.input_dim(), 3);
    let mut inputs = Vec::new();
    struct Capture<'a>(&'a mut Vec<(usize, Vec<f64>)>);
    impl Forecaster for Capture<'_> {
        fn predict(&mut self, ctx: &DayContext<'_>) -> Result<Vec<f64>> {
            self.0.push((ctx.day, ctx.input.to_vec()));
            Ok(vec![0.0; ctx.horizon])
        }
        fn learn(&mut self, _: &MemoryQueue) -> Result<()> {
            Ok(())
        }
    }
    let records = run_online(&ts, &mut Capture(&mut inputs), &opts).unwrap();
    assert_eq!(records.len(), n - 14 + 1);
    assert_eq!(inputs[0].0, 14);
    let (norm, _) = normalize(&ts, ScaleMode::RunningMax).unwrap();
    assert_eq!(inputs[0].1, aggregate_window(&norm, 13, &spec).unwrap());

    let mut mlp = MlpForecaster::new(3, &[4], 7, TrainConfig::default()).unwrap();
    run_online(&ts, &mut mlp, &opts).unwrap();

    let bad = LoopOptions {
        features: Some(FeatureSpec::new(vec!["missing:mean".parse().unwrap()], 14).unwrap()),
        ..LoopOptions::raw(7, 1, 1)
    };
    assert!(matches!(
        run_online(&ts, &mut Probe::default(), &bad),
        Err(Error::Config { .. })
    ));
}

proptest! {
    #[test]
    fn record_count_law(len in 4usize..60, w in 1usize..10, d in 1usize..6, m in 1usize..8) {
        prop_assume!(len >= w + d);
        let ts = ramp(len);
        let records = run_online(&ts, &mut Probe::default(), &LoopOptions::raw(w, d, m)).unwrap();
        prop_assert_eq!(records.len(), len - w + 1);
        prop_assert_eq!(observed_schedule(&ts, &LoopOptions::raw(w, d, m)), schedule_oracle(len, w, d));
    }
}
