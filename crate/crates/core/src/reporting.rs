//! CSV output of metric series and run summaries.
//!
//! Reals are written with six fixed decimals so identical inputs give
//! identical bytes.

use std::path::Path;

use crate::engine::{ExperimentResult, MetricsSeries};
use crate::error::{invalid, Error, Result};
use crate::policies::PolicyId;
use crate::traffic::TrafficModel;

pub const SERIES_HEADER: [&str; 4] = ["frame", "avg_sensing", "avg_norm_tp", "avg_collision"];
pub const SUMMARY_HEADER: [&str; 8] = [
    "policy",
    "n_channels",
    "traffic",
    "avg_sensing",
    "avg_norm_tp",
    "avg_collision",
    "n_runs",
    "seed",
];

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One `frame` row per entry; frames are numbered from 1.
pub fn write_series_csv(series: &MetricsSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SERIES_HEADER).map_err(csv_err(path))?;
    for i in 0..series.len() {
        w.write_record([
            (i + 1).to_string(),
            fmt(series.avg_sensing[i]),
            fmt(series.avg_norm_tp[i]),
            fmt(series.avg_collision[i]),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_series_csv(path: &Path) -> Result<MetricsSeries> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = MetricsSeries::default();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| invalid(format!("{}: bad field {i} in {rec:?}", path.display())))
        };
        out.avg_sensing.push(num(1)?);
        out.avg_norm_tp.push(num(2)?);
        out.avg_collision.push(num(3)?);
    }
    Ok(out)
}

/// End-of-run metrics of one (policy, channel count) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub policy: PolicyId,
    pub n_channels: usize,
    pub traffic: TrafficModel,
    pub avg_sensing: f64,
    pub avg_norm_tp: f64,
    pub avg_collision: f64,
    pub n_runs: usize,
    pub seed: u64,
}

impl SummaryRow {
    pub fn from_experiment(exp: &ExperimentResult) -> Result<Self> {
        let (s, tp, c) = exp
            .mean
            .final_values()
            .ok_or_else(|| invalid("experiment produced an empty series"))?;
        Ok(Self {
            policy: exp.config.policy,
            n_channels: exp.config.n_channels,
            traffic: exp.config.traffic,
            avg_sensing: s,
            avg_norm_tp: tp,
            avg_collision: c,
            n_runs: exp.config.n_runs,
            seed: exp.config.seed,
        })
    }

    fn sort_key(&self) -> (PolicyId, usize, TrafficModel) {
        (self.policy, self.n_channels, self.traffic)
    }
}

/// Rows are written sorted by (policy, n_channels).
pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut sorted: Vec<&SummaryRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    for r in sorted {
        w.write_record([
            r.policy.name().to_string(),
            r.n_channels.to_string(),
            r.traffic.name().to_string(),
            fmt(r.avg_sensing),
            fmt(r.avg_norm_tp),
            fmt(r.avg_collision),
            r.n_runs.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = || invalid(format!("{}: malformed summary row {rec:?}", path.display()));
        let field = |i: usize| rec.get(i).ok_or_else(bad);
        let num = |i: usize| field(i)?.parse::<f64>().map_err(|_| bad());
        out.push(SummaryRow {
            policy: PolicyId::from_name(field(0)?).ok_or_else(bad)?,
            n_channels: field(1)?.parse().map_err(|_| bad())?,
            traffic: TrafficModel::from_name(field(2)?).ok_or_else(bad)?,
            avg_sensing: num(3)?,
            avg_norm_tp: num(4)?,
            avg_collision: num(5)?,
            n_runs: field(6)?.parse().map_err(|_| bad())?,
            seed: field(7)?.parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(policy: PolicyId, n: usize) -> SummaryRow {
        SummaryRow {
            policy,
            n_channels: n,
            traffic: TrafficModel::Gpd,
            avg_sensing: 1.234_567_89,
            avg_norm_tp: 0.75,
            avg_collision: 0.031,
            n_runs: 200,
            seed: 42,
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_series_csv(&MetricsSeries::default(), &p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "frame,avg_sensing,avg_norm_tp,avg_collision\n"
        );
    }

    #[test]
    fn series_line_count_and_bytes_stable() {
        let dir = tempfile::tempdir().unwrap();
        let s = MetricsSeries {
            avg_sensing: (0..1200).map(|i| i as f64 / 1200.0).collect(),
            avg_norm_tp: vec![0.94; 1200],
            avg_collision: vec![0.0; 1200],
        };
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_series_csv(&s, &a).unwrap();
        write_series_csv(&s, &b).unwrap();
        let text = std::fs::read(&a).unwrap();
        assert_eq!(text, std::fs::read(&b).unwrap());
        assert_eq!(text.iter().filter(|&&c| c == b'\n').count(), 1201);
        assert!(String::from_utf8(text).unwrap().contains("\n2,0.000833,0.940000,0.000000\n"));
    }

    #[test]
    fn summary_round_trip_and_ordering() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("summary.csv");
        write_summary_csv(&[row(PolicyId::Ots, 5)], &p).unwrap();
        let back = read_summary_csv(&p).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].policy, PolicyId::Ots);
        assert!((back[0].avg_sensing - 1.234_568).abs() < 1e-12);

        let rows = vec![
            row(PolicyId::Rand, 4),
            row(PolicyId::Proposed, 6),
            row(PolicyId::Ots, 4),
            row(PolicyId::Proposed, 4),
        ];
        write_summary_csv(&rows, &p).unwrap();
        let order: Vec<(PolicyId, usize)> = read_summary_csv(&p)
            .unwrap()
            .iter()
            .map(|r| (r.policy, r.n_channels))
            .collect();
        assert_eq!(
            order,
            vec![
                (PolicyId::Proposed, 4),
                (PolicyId::Proposed, 6),
                (PolicyId::Ots, 4),
                (PolicyId::Rand, 4)
            ]
        );
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let err = write_series_csv(&MetricsSeries::default(), Path::new("/nonexistent/dir/s.csv"))
            .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/s.csv"));
    }

    proptest! {
        #[test]
        fn series_round_trip_within_1e6(xs in prop::collection::vec((0.0f64..10.0, 0.0f64..=1.0, 0.0f64..=1.0), 1..50)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("s.csv");
            let s = MetricsSeries {
                avg_sensing: xs.iter().map(|x| x.0).collect(),
                avg_norm_tp: xs.iter().map(|x| x.1).collect(),
                avg_collision: xs.iter().map(|x| x.2).collect(),
            };
            write_series_csv(&s, &p).unwrap();
            let back = read_series_csv(&p).unwrap();
            prop_assert_eq!(back.len(), s.len());
            for (a, b) in [(&s.avg_sensing, &back.avg_sensing), (&s.avg_norm_tp, &back.avg_norm_tp), (&s.avg_collision, &back.avg_collision)] {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() <= 5e-7 + 1e-12);
                }
            }
        }
    }
}
