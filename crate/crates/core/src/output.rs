//! CSV writers for trajectories, metric summaries and divergence
//! manifests. Floats use Rust's shortest round-trip formatting.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, RunRecord};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// `t1.csv` -> `t1.metrics.csv`
pub fn metrics_path(out: &Path) -> PathBuf {
    sibling(out, "metrics")
}

/// `t1.csv` -> `t1.errors.csv`
pub fn errors_path(out: &Path) -> PathBuf {
    sibling(out, "errors")
}

fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn float_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// One row per (run, iteration, agent), ordered by run, iteration and
/// agent id. `e` is empty for averaging agents.
pub fn write_trajectory<W: Write>(writer: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let map = |e: csv::Error| Error::Config(format!("csv: {e}"));
    let dim = records.first().map_or(0, RunRecord::dim);
    let mut header = vec!["run".to_owned(), "iteration".into(), "agent".into()];
    header.extend((0..dim).map(|c| format!("w{c}")));
    header.extend(["e".to_owned(), "dist_opt".into()]);
    w.write_record(&header).map_err(map)?;
    for rec in records {
        let mut order: Vec<usize> = (0..rec.agent_ids().len()).collect();
        order.sort_by(|&a, &b| rec.agent_ids()[a].cmp(&rec.agent_ids()[b]));
        let dist: Vec<Vec<f64>> = (0..rec.agent_ids().len())
            .map(|a| rec.distances(a))
            .collect();
        let run = rec.run.to_string();
        for i in 1..=rec.iterations() {
            let it = i.to_string();
            for &a in &order {
                let mut row = vec![run.clone(), it.clone(), rec.agent_ids()[a].clone()];
                row.extend(rec.w(i, a).iter().map(f64::to_string));
                row.push(float_cell(rec.e(i, a)));
                row.push(dist[a][i - 1].to_string());
                w.write_record(&row).map_err(map)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(())
}

/// Long-format summary with columns `metric,agent,iteration,value`.
pub fn write_metrics<W: Write>(writer: W, report: &MetricsReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let map = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(["metric", "agent", "iteration", "value"])
        .map_err(map)?;
    w.write_record(["band", "", "", &report.band.to_string()])
        .map_err(map)?;
    w.write_record([
        "window_fraction",
        "",
        "",
        &report.window_fraction.to_string(),
    ])
    .map_err(map)?;
    for (k, agent) in report.agents.iter().enumerate() {
        w.write_record([
            "convergence_iter",
            agent,
            "",
            &opt_cell(report.convergence_iter[k]),
        ])
        .map_err(map)?;
        w.write_record([
            "steady_state_var",
            agent,
            "",
            &report.steady_state_var[k].to_string(),
        ])
        .map_err(map)?;
    }
    for c in &report.crossing_iter {
        let pair = format!("{}|{}", c.p, c.q);
        w.write_record(["crossing_iter", &pair, "", &opt_cell(c.iteration)])
            .map_err(map)?;
    }
    for (k, agent) in report.agents.iter().enumerate() {
        for (i, v) in report.msd[k].iter().enumerate() {
            w.write_record(["msd", agent, &(i + 1).to_string(), &v.to_string()])
                .map_err(map)?;
        }
    }
    w.flush().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(())
}

/// Divergence manifest with columns `run,agent,iteration,message`.
pub fn write_errors<W: Write>(writer: W, errors: &[(usize, Error)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let map = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(["run", "agent", "iteration", "message"])
        .map_err(map)?;
    for (run, err) in errors {
        let (agent, iteration) = match err {
            Error::Divergence { site, .. } => (site.agent.clone(), site.iteration),
            _ => (None, None),
        };
        w.write_record([
            run.to_string(),
            agent.unwrap_or_default(),
            opt_cell(iteration),
            err.to_string(),
        ])
        .map_err(map)?;
    }
    w.flush().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(())
}

pub fn write_file(
    path: &Path,
    f: impl FnOnce(std::io::BufWriter<std::fs::File>) -> Result<()>,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f(std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_paths() {
        assert_eq!(
            metrics_path(Path::new("out/t1.csv")),
            PathBuf::from("out/t1.metrics.csv")
        );
        assert_eq!(
            errors_path(Path::new("t1.csv")),
            PathBuf::from("t1.errors.csv")
        );
    }
}
