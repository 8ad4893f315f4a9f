use std::fmt::Write as _;

use crate::adaptive::ForecastRecord;
use crate::error::{Error, Result};
use crate::format::sig10;

use super::{mae, mape, segment, SegmentSpec};

/// Metrics of one repetition on one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentScore {
    pub segment: String,
    pub count: usize,
    pub mae: f64,
    pub mape: f64,
}

/// Scores every non-empty segment using the fully realized records only.
pub fn evaluate(records: &[ForecastRecord], spec: &SegmentSpec) -> Result<Vec<SegmentScore>> {
    let realized: Vec<ForecastRecord> = records.iter().filter(|r| r.is_realized()).cloned().collect();
    if realized.is_empty() {
        return Err(Error::Evaluation("no fully realized forecasts".into()));
    }
    segment(&realized, spec)
        .into_iter()
        .filter(|(_, subset)| !subset.is_empty())
        .map(|(name, subset)| {
            Ok(SegmentScore {
                segment: name,
                count: subset.len(),
                mae: mae(subset.iter().copied())?,
                mape: mape(subset.iter().copied())?,
            })
        })
        .collect()
}

/// Mean and population standard deviation across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSummary {
    pub segment: String,
    pub count: usize,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub mape_mean: f64,
    pub mape_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn aggregate_repetitions(reps: &[Vec<SegmentScore>]) -> Result<Vec<SegmentSummary>> {
    let first = reps
        .first()
        .ok_or_else(|| Error::Evaluation("no repetitions to aggregate".into()))?;
    let keys: Vec<&str> = first.iter().map(|s| s.segment.as_str()).collect();
    for (r, rep) in reps.iter().enumerate() {
        let rep_keys: Vec<&str> = rep.iter().map(|s| s.segment.as_str()).collect();
        if rep_keys != keys {
            return Err(Error::Evaluation(format!(
                "repetition {r} has segments {rep_keys:?}, expected {keys:?}"
            )));
        }
    }
    Ok(keys
        .iter()
        .enumerate()
        .map(|(k, key)| {
            let maes: Vec<f64> = reps.iter().map(|r| r[k].mae).collect();
            let mapes: Vec<f64> = reps.iter().map(|r| r[k].mape).collect();
            let (mae_mean, mae_std) = mean_std(&maes);
            let (mape_mean, mape_std) = mean_std(&mapes);
            SegmentSummary {
                segment: key.to_string(),
                count: first[k].count,
                mae_mean,
                mae_std,
                mape_mean,
                mape_std,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportMeta {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub window: usize,
    pub horizon: usize,
    pub memory: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub segments: Vec<SegmentSummary>,
    pub meta: ReportMeta,
}

impl MetricsReport {
    pub fn from_repetitions(reps: &[Vec<SegmentScore>], meta: ReportMeta) -> Result<Self> {
        Ok(Self {
            segments: aggregate_repetitions(reps)?,
            meta,
        })
    }

    pub fn get(&self, segment: &str) -> Option<&SegmentSummary> {
        self.segments.iter().find(|s| s.segment == segment)
    }

    fn meta_lines(&self) -> Vec<String> {
        let seeds: Vec<String> = self.meta.seeds.iter().map(u64::to_string).collect();
        let mut lines = vec![
            format!("config_hash={}", self.meta.config_hash),
            format!("seeds={}", seeds.join(" ")),
            format!("window={} horizon={} memory={}", self.meta.window, self.meta.horizon, self.meta.memory),
        ];
        lines.extend(self.meta.notes.iter().map(|n| format!("note: {n}")));
        lines
    }

    /// One row per (segment, metric); metadata as leading `#` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in self.meta_lines() {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("segment,metric,mean,std,count\n");
        for s in &self.segments {
            let _ = writeln!(out, "{},mae,{},{},{}", s.segment, sig10(s.mae_mean), sig10(s.mae_std), s.count);
            let _ = writeln!(out, "{},mape,{},{},{}", s.segment, sig10(s.mape_mean), sig10(s.mape_std), s.count);
        }
        out
    }

    /// Aligned table of `mean (std)` cells per segment.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for line in self.meta_lines() {
            let _ = writeln!(out, "{line}");
        }
        out.push('\n');
        let cell = |m: f64, s: f64| format!("{m:.1} ({s:.1})");
        let rows: Vec<[String; 4]> = self
            .segments
            .iter()
            .map(|s| {
                [
                    s.segment.clone(),
                    s.count.to_string(),
                    cell(s.mae_mean, s.mae_std),
                    cell(s.mape_mean, s.mape_std),
                ]
            })
            .collect();
        let header = ["Segment", "N", "MAE", "MAPE (%)"].map(String::from);
        let widths: Vec<usize> = (0..4)
            .map(|c| rows.iter().chain([&header]).map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let render = |r: &[String; 4]| {
            format!(
                "{:<w0$} | {:>w1$} | {:>w2$} | {:>w3$}\n",
                r[0],
                r[1],
                r[2],
                r[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            )
        };
        out.push_str(&render(&header));
        out.push_str(&format!(
            "{}\n",
            widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-")
        ));
        for r in &rows {
            out.push_str(&render(r));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(segment: &str, mae: f64) -> SegmentScore {
        SegmentScore {
            segment: segment.into(),
            count: 3,
            mae,
            mape: mae / 10.0,
        }
    }

    #[test]
    fn single_repetition_has_zero_spread() {
        let s = aggregate_repetitions(&[vec![score("overall", 180.0)]]).unwrap();
        assert_eq!(s[0].mae_mean, 180.0);
        assert_eq!(s[0].mae_std, 0.0);
    }

    #[test]
    fn three_repetitions() {
        let reps: Vec<Vec<SegmentScore>> = [180.0, 190.0, 200.0]
            .iter()
            .map(|m| vec![score("overall", *m)])
            .collect();
        let s = aggregate_repetitions(&reps).unwrap();
        assert!((s[0].mae_mean - 190.0).abs() < 1e-12);
        // sqrt(200 / 3)
        assert!((s[0].mae_std - 8.164_965_809_277_26).abs() < 1e-9);
    }

    #[test]
    fn identical_repetitions_have_zero_spread() {
        let rep = vec![score("overall", 12.5), score("normal", 3.0)];
        let s = aggregate_repetitions(&[rep.clone(), rep.clone(), rep]).unwrap();
        assert!(s.iter().all(|x| x.mae_std == 0.0 && x.mape_std == 0.0));
    }

    #[test]
    fn mismatched_keys_and_empty_input() {
        let err = aggregate_repetitions(&[vec![score("overall", 1.0)], vec![score("normal", 1.0)]]);
        assert!(matches!(err, Err(Error::Evaluation(_))));
        assert!(aggregate_repetitions(&[]).is_err());
    }

    #[test]
    fn csv_and_table_layout() {
        let report = MetricsReport::from_repetitions(
            &[vec![score("overall", 186.1), score("waves", 378.4)]],
            ReportMeta {
                config_hash: "abc".into(),
                seeds: vec![0],
                window: 7,
                horizon: 1,
                memory: 1,
                notes: vec![],
            },
        )
        .unwrap();
        let csv = report.to_csv();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 1 + 2 * 2);
        assert_eq!(rows[1], "overall,mae,186.1,0,3");
        assert_eq!(rows[2], "overall,mape,18.61,0,3");
        let table = report.to_table();
        assert!(table.contains("186.1 (0.0)"));
        assert!(table.contains("Segment"));
    }
}
