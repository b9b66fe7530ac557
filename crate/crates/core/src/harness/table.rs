//! Sweep result tables, their CSV form and log-log slope fits.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Marker written for metrics that have no closed form.
pub const NOT_DEFINED: &str = "NA";

pub const CSV_HEADER: [&str; 11] = [
    "axis",
    "scheme",
    "empirical",
    "closed_form",
    "stderr",
    "computation",
    "interference",
    "noise",
    "closed_form_computation",
    "closed_form_interference",
    "closed_form_noise",
];

/// One (axis value, strategy) cell. Metrics are normalized MSE values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub axis: f64,
    pub scheme: String,
    pub empirical: f64,
    pub closed_form: Option<f64>,
    pub stderr: f64,
    pub computation: f64,
    pub interference: f64,
    pub noise: f64,
    pub closed_form_computation: Option<f64>,
    pub closed_form_interference: Option<f64>,
    pub closed_form_noise: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Empirical,
    ClosedForm,
    Computation,
    Interference,
    Noise,
    /// Empirical computation plus interference.
    ComputationPlusInterference,
}

impl TableRow {
    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Empirical => Some(self.empirical),
            Metric::ClosedForm => self.closed_form,
            Metric::Computation => Some(self.computation),
            Metric::Interference => Some(self.interference),
            Metric::Noise => Some(self.noise),
            Metric::ComputationPlusInterference => Some(self.computation + self.interference),
        }
    }
}

/// Rows sorted by axis value, plus a snapshot of everything needed to
/// regenerate them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub axis_name: String,
    pub rows: Vec<TableRow>,
    pub metadata: serde_json::Value,
}

/// Shortest decimal that parses back to the same `f64`, in plain notation
/// for moderate magnitudes and scientific otherwise.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn format_opt(x: Option<f64>) -> String {
    x.map_or_else(|| NOT_DEFINED.to_owned(), format_float)
}

impl ResultTable {
    /// Axis and metric values of one strategy, in row order.
    pub fn series(&self, scheme: &str, metric: Metric) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for row in self.rows.iter().filter(|r| r.scheme == scheme) {
            let y = row
                .metric(metric)
                .ok_or_else(|| invalid(format!("{metric:?} is not defined for {scheme}")))?;
            xs.push(row.axis);
            ys.push(y);
        }
        Ok((xs, ys))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| crate::Error::Io(std::io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                format_float(r.axis),
                r.scheme.clone(),
                format_float(r.empirical),
                format_opt(r.closed_form),
                format_float(r.stderr),
                format_float(r.computation),
                format_float(r.interference),
                format_float(r.noise),
                format_opt(r.closed_form_computation),
                format_opt(r.closed_form_interference),
                format_opt(r.closed_form_noise),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and the `<stem>.json` sidecar into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        let sidecar = serde_json::json!({ "axis": self.axis_name, "metadata": self.metadata });
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(invalid("a slope fit needs at least three paired points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(invalid("log-log fits need positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("axis values must not all be equal"));
    }
    Ok(sxy / sxx)
}

/// [`loglog_slope`] of one strategy's metric across a table.
pub fn table_loglog_slope(table: &ResultTable, scheme: &str, metric: Metric) -> Result<f64> {
    let (x, y) = table.series(scheme, metric)?;
    loglog_slope(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_slopes() {
        let xs = [64.0, 128.0, 256.0, 512.0, 1024.0];
        let inv: Vec<f64> = xs.iter().map(|x| 3.0 / x).collect();
        let inv2: Vec<f64> = xs.iter().map(|x| 3.0 / (x * x)).collect();
        assert!((loglog_slope(&xs, &inv).unwrap() + 1.0).abs() < 1e-12);
        assert!((loglog_slope(&xs, &inv2).unwrap() + 2.0).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(loglog_slope(&xs[..2], &inv[..2]).is_err());
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.0, 1.0, 64.0, 0.1 + 0.2, 1e-7, 3.3e-12, 123456.789, -2.5e20] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_marks_missing_closed_forms() {
        let row = TableRow {
            axis: 64.0,
            scheme: "bev_round_robin".into(),
            empirical: 0.5,
            closed_form: None,
            stderr: 0.01,
            computation: 0.4,
            interference: 0.1,
            noise: 0.0,
            closed_form_computation: None,
            closed_form_interference: None,
            closed_form_noise: None,
        };
        let t = ResultTable { axis_name: "ris_elements".into(), rows: vec![row], metadata: serde_json::Value::Null };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(text.lines().nth(1).unwrap(), "64,bev_round_robin,0.5,NA,0.01,0.4,0.1,0,NA,NA,NA");
        assert!(t.series("bev_round_robin", Metric::ClosedForm).is_err());
    }
}
