//! Forecast error metrics, wave/normal segmentation and repetition summaries.

mod report;
mod segment;

use crate::adaptive::ForecastRecord;
use crate::error::{Error, Result};

pub use report::{aggregate_repetitions, evaluate, MetricsReport, ReportMeta, SegmentScore, SegmentSummary};
pub use segment::{segment, DateRange, SegmentSpec, NORMAL, OVERALL, WAVES};

/// Denominator guard for percentage errors.
pub const MAPE_EPSILON: f64 = 1e-8;

fn realized(record: &ForecastRecord) -> Result<Vec<f64>> {
    record
        .realized
        .iter()
        .map(|v| {
            v.ok_or_else(|| {
                Error::Evaluation(format!(
                    "forecast issued {} is not fully realized",
                    record.issue_date
                ))
            })
        })
        .collect()
}

fn mean_over<'a, I, F>(records: I, per_record: F) -> Result<f64>
where
    I: IntoIterator<Item = &'a ForecastRecord>,
    F: Fn(&ForecastRecord, &[f64]) -> Result<f64>,
{
    let mut sum = 0.0;
    let mut count = 0usize;
    for record in records {
        let actual = realized(record)?;
        sum += per_record(record, &actual)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Evaluation("no forecasts to evaluate".into()));
    }
    Ok(sum / count as f64)
}

/// Mean absolute error in case units, averaged over the horizon and then over records.
pub fn mae<'a>(records: impl IntoIterator<Item = &'a ForecastRecord>) -> Result<f64> {
    mean_over(records, |r, actual| {
        Ok(r.predicted
            .iter()
            .zip(actual)
            .map(|(p, y)| (y - p).abs())
            .sum::<f64>()
            / actual.len() as f64)
    })
}

/// Mean absolute percentage error, in percent.
pub fn mape<'a>(records: impl IntoIterator<Item = &'a ForecastRecord>) -> Result<f64> {
    let records: Vec<&ForecastRecord> = records.into_iter().collect();
    let flagged: Vec<String> = records
        .iter()
        .flat_map(|r| {
            r.realized
                .iter()
                .zip(&r.target_dates)
                .filter(|(v, _)| matches!(v, Some(y) if y.abs() < MAPE_EPSILON))
                .map(|(_, d)| d.to_string())
        })
        .collect();
    if !flagged.is_empty() {
        return Err(Error::Evaluation(format!(
            "percentage error undefined for near-zero actuals on {}",
            flagged.join(", ")
        )));
    }
    mean_over(records, |r, actual| {
        Ok(100.0
            * r.predicted
                .iter()
                .zip(actual)
                .map(|(p, y)| (y - p).abs() / y.abs())
                .sum::<f64>()
            / actual.len() as f64)
    })
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;
    use proptest::prelude::*;

    use super::*;

    pub(crate) fn record(predicted: &[f64], realized: &[f64]) -> ForecastRecord {
        let d = NaiveDate::from_ymd_opt(2021, 6, 1).unwrap();
        ForecastRecord {
            issue_day: 1,
            issue_date: d,
            target_dates: d.iter_days().skip(1).take(predicted.len()).collect(),
            predicted: predicted.to_vec(),
            realized: realized.iter().copied().map(Some).collect(),
        }
    }

    #[test]
    fn perfect_forecasts() {
        let r = [record(&[120.0, 130.0], &[120.0, 130.0])];
        assert_eq!(mae(&r).unwrap(), 0.0);
        assert_eq!(mape(&r).unwrap(), 0.0);
    }

    #[test]
    fn hand_cases() {
        let r = [record(&[110.0, 180.0], &[100.0, 200.0])];
        assert_eq!(mae(&r).unwrap(), 15.0);
        assert!((mape(&r).unwrap() - 10.0).abs() < 1e-12);
        let two = [record(&[110.0], &[100.0]), record(&[120.0], &[100.0])];
        assert_eq!(mae(&two).unwrap(), 15.0);
        let constant = [record(&[150.0; 3], &[100.0; 3])];
        assert_eq!(mape(&constant).unwrap(), 50.0);
    }

    #[test]
    fn empty_and_unrealized_are_errors() {
        assert!(matches!(mae(&[]), Err(Error::Evaluation(_))));
        assert!(matches!(mape(&[]), Err(Error::Evaluation(_))));
        let mut r = record(&[1.0, 2.0], &[1.0, 2.0]);
        r.realized[1] = None;
        assert!(mae(std::slice::from_ref(&r)).is_err());
    }

    #[test]
    fn zero_actual_is_flagged_with_date() {
        let r = [record(&[1.0, 2.0], &[5.0, 0.0])];
        match mape(&r) {
            Err(Error::Evaluation(msg)) => assert!(msg.contains("2021-06-03"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn scaling_laws(
            pairs in prop::collection::vec((1.0f64..1e4, 1.0f64..1e4), 1..40),
            k in prop::sample::select(vec![0.5, 3.0, 17.25]),
        ) {
            let recs: Vec<ForecastRecord> = pairs.iter().map(|(p, y)| record(&[*p], &[*y])).collect();
            let scaled: Vec<ForecastRecord> = pairs.iter().map(|(p, y)| record(&[p * k], &[y * k])).collect();
            let (m0, m1) = (mae(&recs).unwrap(), mae(&scaled).unwrap());
            prop_assert!((m1 - k * m0).abs() <= 1e-12 * (k * m0).max(1e-300));
            let (p0, p1) = (mape(&recs).unwrap(), mape(&scaled).unwrap());
            prop_assert!((p1 - p0).abs() <= 1e-12 * p0.max(1e-300));
            prop_assert!(m0 >= 0.0 && p0 >= 0.0);
            prop_assert_eq!(m0 == 0.0, p0 == 0.0);
        }
    }
}
