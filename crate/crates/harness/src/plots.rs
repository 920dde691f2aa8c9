//! Plot specifications built from `aggregate.csv`.
//!
//! Each figure is a JSON document:
//! `{"schema", "title", "x": {"label", "scale"}, "y": {"label", "scale"},
//!   "series": [{"name", "x", "y", "err"}]}`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::HarnessError;

pub const PLOT_SCHEMA: &str = "intcorr-plot/1";

const REQUIRED: [&str; 9] = [
    "estimator", "t", "rot_db", "mse_mean", "mse_stderr", "c_mean", "c_stderr", "rho_mean", "rho_stderr",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub label: String,
    pub scale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub err: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSpec {
    pub schema: String,
    pub title: String,
    pub x: Axis,
    pub y: Axis,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    estimator: String,
    t: usize,
    rot: f64,
    mse: (f64, f64),
    c: (f64, f64),
    rho: (f64, f64),
}

fn parse_f(s: &str, col: &str) -> Result<f64, HarnessError> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| HarnessError::Schema(format!("column {col}: {s:?} is not a number")))
}

fn read_rows(path: &Path) -> Result<Vec<Row>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let pos = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|c| pos(c).is_none()).collect();
    if !missing.is_empty() {
        return Err(HarnessError::Schema(format!("{} lacks columns {}", path.display(), missing.join(", "))));
    }
    let idx: Vec<usize> = REQUIRED.iter().map(|c| pos(c).unwrap()).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |k: usize| rec.get(idx[k]).unwrap_or("");
        rows.push(Row {
            estimator: get(0).to_string(),
            t: get(1).parse().map_err(|_| HarnessError::Schema(format!("bad T {:?}", get(1))))?,
            rot: parse_f(get(2), "rot_db")?,
            mse: (parse_f(get(3), "mse_mean")?, parse_f(get(4), "mse_stderr")?),
            c: (parse_f(get(5), "c_mean")?, parse_f(get(6), "c_stderr")?),
            rho: (parse_f(get(7), "rho_mean")?, parse_f(get(8), "rho_stderr")?),
        });
    }
    Ok(rows)
}

fn series(rows: &[&Row], x: impl Fn(&Row) -> f64, y: impl Fn(&Row) -> (f64, f64)) -> Vec<Series> {
    // estimators keep their first-appearance order
    let mut order: Vec<String> = Vec::new();
    for r in rows {
        if !order.contains(&r.estimator) {
            order.push(r.estimator.clone());
        }
    }
    order
        .into_iter()
        .map(|name| {
            let mut pts: Vec<(f64, f64, f64)> = rows
                .iter()
                .filter(|r| r.estimator == name)
                .map(|r| {
                    let (m, e) = y(r);
                    (x(r), m, e)
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                name,
                x: pts.iter().map(|p| p.0).collect(),
                y: pts.iter().map(|p| p.1).collect(),
                err: pts.iter().map(|p| p.2).collect(),
            }
        })
        .collect()
}

fn axis(label: &str, scale: &str) -> Axis {
    Axis {
        label: label.into(),
        scale: scale.into(),
    }
}

fn spec(title: String, x: Axis, y: Axis, series: Vec<Series>) -> PlotSpec {
    PlotSpec {
        schema: PLOT_SCHEMA.into(),
        title,
        x,
        y,
        series,
    }
}

fn tag(x: f64) -> String {
    format!("{x}").replace('-', "m").replace('.', "p")
}

/// Builds the figure set: MSE and rate against ROT for each `T`, and
/// throughput against `T` for each ROT.
pub fn build_specs(aggregate: &Path) -> Result<BTreeMap<String, PlotSpec>, HarnessError> {
    let rows = read_rows(aggregate)?;
    if rows.is_empty() {
        return Err(HarnessError::Empty);
    }
    let mut ts: Vec<usize> = rows.iter().map(|r| r.t).collect();
    ts.sort_unstable();
    ts.dedup();
    let mut rots: Vec<f64> = rows.iter().map(|r| r.rot).collect();
    rots.sort_by(f64::total_cmp);
    rots.dedup();
    let mut out = BTreeMap::new();
    for &t in &ts {
        let sel: Vec<&Row> = rows.iter().filter(|r| r.t == t).collect();
        out.insert(
            format!("mse_vs_rot_T{t}.json"),
            spec(
                format!("MSE vs ROT, T = {t}"),
                axis("ROT (dB)", "linear"),
                axis("MSE", "log"),
                series(&sel, |r| r.rot, |r| r.mse),
            ),
        );
        out.insert(
            format!("rate_vs_rot_T{t}.json"),
            spec(
                format!("Achievable rate vs ROT, T = {t}"),
                axis("ROT (dB)", "linear"),
                axis("rate (bit/s/Hz)", "linear"),
                series(&sel, |r| r.rot, |r| r.c),
            ),
        );
    }
    for &rot in &rots {
        let sel: Vec<&Row> = rows.iter().filter(|r| r.rot == rot).collect();
        out.insert(
            format!("throughput_vs_T_ROT{}.json", tag(rot)),
            spec(
                format!("Throughput vs T, ROT = {rot} dB"),
                axis("T (snapshots)", "log2"),
                axis("throughput (bit/s/Hz)", "linear"),
                series(&sel, |r| r.t as f64, |r| r.rho),
            ),
        );
    }
    Ok(out)
}

/// Writes the specs next to the aggregate, under `plots/`.
pub fn write_plots(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let agg = dir.join("aggregate.csv");
    if !agg.exists() {
        return Err(HarnessError::Config(format!("{} not found", agg.display())));
    }
    let specs = build_specs(&agg)?;
    let pdir = dir.join("plots");
    std::fs::create_dir_all(&pdir)?;
    let mut paths = Vec::new();
    for (name, s) in specs {
        let p = pdir.join(name);
        std::fs::write(&p, serde_json::to_string_pretty(&s).expect("json"))?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("aggregate.csv");
        std::fs::write(&p, body).unwrap();
        p
    }

    const HEAD: &str = "estimator,t,rot_db,mse_mean,mse_stderr,c_mean,c_stderr,rho_mean,rho_stderr\n";

    #[test]
    fn series_are_sorted_by_x() {
        let d = tempfile::tempdir().unwrap();
        let body = format!(
            "{HEAD}LS,8,0,1,0.1,2,0.1,1,0.1\nLS,2,0,3,0.1,1,0.1,0.5,0.1\nLS,4,0,2,0.1,1.5,0.1,0.7,0.1\nPBCE-ID,2,0,1,0.1,2,0.1,1.5,0.1\n"
        );
        let specs = build_specs(&write(d.path(), &body)).unwrap();
        let th = &specs["throughput_vs_T_ROT0.json"];
        assert_eq!(th.series[0].name, "LS");
        assert_eq!(th.series[0].x, vec![2.0, 4.0, 8.0]);
        assert_eq!(th.series[0].y, vec![0.5, 0.7, 1.0]);
        assert_eq!(th.series[1].x, vec![2.0]);
        assert_eq!(specs.len(), 3 * 2 + 1);
    }

    #[test]
    fn missing_columns_and_empty_input() {
        let d = tempfile::tempdir().unwrap();
        let e = build_specs(&write(d.path(), "estimator,t\nLS,2\n")).unwrap_err();
        assert!(matches!(e, HarnessError::Schema(_)));
        let e = build_specs(&write(d.path(), HEAD)).unwrap_err();
        assert!(matches!(e, HarnessError::Empty));
        assert_eq!(e.exit_code(), 4);
    }
}
