use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SimulationReport;
use crate::error::Result;

pub const POWERS_HEADER: &str = "node,mode,s,dbm,mw,register_id";
pub const SUMMARY_HEADER: &str = "mode,avg_prr,relative_energy,connected";
pub const LINKS_HEADER: &str = "i,j,analytic_prr,empirical_prr,class";
pub const TRACE_HEADER: &str = "sweep,node,s";
pub const CDF_HEADER: &str = "prr,cumulative_fraction";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    All,
}

fn table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    written.push(path);
    Ok(())
}

/// Writes the report under `dir` and returns the files created.
///
/// `report.json` holds everything. The CSV tables are `powers.csv` and
/// `summary.csv` at the top level plus `links.csv`, `trace.csv`, `cdf.csv`
/// and `transmissions.csv` in one subdirectory per mode.
pub fn emit(report: &SimulationReport, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if format != OutputFormat::Csv {
        write(dir, "report.json", &report.to_json()?, &mut written)?;
    }
    if format == OutputFormat::Json {
        return Ok(written);
    }

    let mut powers = Vec::new();
    for m in &report.modes {
        for node in 0..m.strategies.len() {
            let reg = m.register_ids[node].map(|r| r.to_string()).unwrap_or_default();
            powers.push(format!("{node},{},{},{},{},{reg}", m.mode, m.strategies[node], m.dbm[node], m.mw[node]));
        }
    }
    write(dir, "powers.csv", &table(POWERS_HEADER, powers), &mut written)?;

    let summary = report.modes.iter().map(|m| {
        format!(
            "{},{},{},{}",
            m.mode,
            m.metrics.avg_prr,
            m.metrics.relative_energy,
            m.connectivity.connected()
        )
    });
    write(dir, "summary.csv", &table(SUMMARY_HEADER, summary), &mut written)?;

    for m in &report.modes {
        let sub = dir.join(m.mode.as_str());
        fs::create_dir_all(&sub)?;
        let links = m.links.iter().map(|l| {
            format!("{},{},{},{},{}", l.i, l.j, l.analytic_prr, l.empirical_prr, l.class.as_str())
        });
        write(&sub, "links.csv", &table(LINKS_HEADER, links), &mut written)?;

        let mut trace = Vec::new();
        for (sweep, row) in m.power_trace.iter().enumerate() {
            for (node, s) in row.iter().enumerate() {
                trace.push(format!("{sweep},{node},{s}"));
            }
        }
        write(&sub, "trace.csv", &table(TRACE_HEADER, trace), &mut written)?;

        let cdf = m.metrics.link_quality.cdf_points.iter().map(|(p, f)| format!("{p},{f}"));
        write(&sub, "cdf.csv", &table(CDF_HEADER, cdf), &mut written)?;

        let mut log = Vec::new();
        m.transmissions.write_csv(&mut log)?;
        write(&sub, "transmissions.csv", &String::from_utf8(log).expect("csv is ascii"), &mut written)?;
    }
    Ok(written)
}
