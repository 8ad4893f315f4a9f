use chrono::NaiveDate;

use crate::error::{Error, Result};

use super::TimeSeries;

/// One supervised pair cut from a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedExample {
    /// Model input, oldest first and most recent last.
    pub x: Vec<f64>,
    /// The `D` values that followed the input window.
    pub y: Vec<f64>,
    /// Stream index of the last input day.
    pub issue_index: usize,
    pub issue_date: NaiveDate,
    pub target_dates: Vec<NaiveDate>,
}

/// Cuts every `(W, D)` sliding window from the case values.
pub fn make_windows(ts: &TimeSeries, window: usize, horizon: usize) -> Result<Vec<WindowedExample>> {
    if window == 0 || horizon == 0 {
        return Err(Error::config("window/horizon", "window and horizon must be at least 1"));
    }
    let needed = window + horizon;
    if ts.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: ts.len(),
        });
    }
    let values = ts.values();
    let dates = ts.dates();
    Ok((0..=ts.len() - needed)
        .map(|i| {
            let issue = i + window - 1;
            WindowedExample {
                x: values[i..=issue].to_vec(),
                y: values[issue + 1..=issue + horizon].to_vec(),
                issue_index: issue,
                issue_date: dates[issue],
                target_dates: dates[issue + 1..=issue + horizon].to_vec(),
            }
        })
        .collect())
}
