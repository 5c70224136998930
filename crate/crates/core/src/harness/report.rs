use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::evaluate::MetricsReport;
use super::latency::LatencyReport;
use super::metrics::F1Grid;
use crate::error::{Error, Result};
use crate::sensor::Surface;

/// Samples-to-detect measured on real robot data; printed next to synthetic results for context.
pub const REFERENCE_LATENCY_SAMPLES: f64 = 11.3;
/// Weighted accuracy of the TCN on real robot data; context only.
pub const REFERENCE_TCN_ACCURACY: f64 = 0.913;

pub const COMPARISON_HEADER: &str = "model,accuracy,precision,recall,f1,samples";

/// `{experiment}_{seed}.csv`
pub fn report_file_name(experiment: &str, seed: u64) -> String {
    format!("{experiment}_{seed}.csv")
}

pub fn write_report(dir: &Path, experiment: &str, seed: u64, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(report_file_name(experiment, seed));
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn metrics_line(s: &mut String, name: &str, r: &MetricsReport) {
    let _ = writeln!(
        s,
        "{name},{:.6},{:.6},{:.6},{:.6},{}",
        r.accuracy,
        r.precision,
        r.recall,
        r.f1,
        r.samples()
    );
}

/// One row per model, weighted metrics in [0, 1].
pub fn comparison_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a MetricsReport)>) -> String {
    let mut s = format!("{COMPARISON_HEADER}\n");
    for (name, r) in rows {
        metrics_line(&mut s, name, r);
    }
    s
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |f| format!("{f:.4}"))
}

/// Per-(slip type, speed) rows by surface column, with row and column marginals.
pub fn grid_csv(grid: &F1Grid) -> String {
    let mut s = String::from("slip_type,speed");
    for surf in Surface::ALL {
        let _ = write!(s, ",{surf}");
    }
    s.push_str(",all\n");
    for m in grid.motions() {
        let _ = write!(s, "{},{}", m.slip_type, m.speed());
        for surf in Surface::ALL {
            let _ = write!(s, ",{}", cell(grid.cell(m, surf)));
        }
        let _ = writeln!(s, ",{}", cell(grid.motion_marginal(m)));
    }
    s.push_str("all,-");
    for surf in Surface::ALL {
        let _ = write!(s, ",{}", cell(grid.surface_marginal(surf)));
    }
    let _ = writeln!(s, ",{}", cell(grid.overall()));
    s
}

pub fn metrics_summary(name: &str, r: &MetricsReport) -> String {
    let [[tn, fp], [fn_, tp]] = r.confusion.counts;
    format!(
        "{name}: accuracy {:.4}  precision {:.4}  recall {:.4}  F1 {:.4}  over {} windows\n\
         confusion (true x predicted, stable/slip): [[{tn}, {fp}], [{fn_}, {tp}]]\n",
        r.accuracy,
        r.precision,
        r.recall,
        r.f1,
        r.samples()
    )
}

pub fn latency_csv(r: &LatencyReport) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".into(), |f| format!("{f:.4}"));
    let optu = |v: Option<usize>| v.map_or_else(|| "-".into(), |u| u.to_string());
    format!(
        "sequences,frames,onsets,detected,missed,false_events,mean,median,p90,max,reference\n\
         {},{},{},{},{},{},{},{},{},{},{}\n",
        r.sequences,
        r.frames,
        r.onsets,
        r.detected,
        r.missed,
        r.false_events,
        opt(r.mean),
        opt(r.median),
        optu(r.p90),
        optu(r.max),
        REFERENCE_LATENCY_SAMPLES
    )
}

pub fn latency_summary(r: &LatencyReport) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".into(), |f| format!("{f:.2}"));
    format!(
        "latency over {} onsets in {} sequences: mean {} samples, median {}, p90 {}, max {}\n\
         detected {}, missed {} ({:.1}%), false events {}\n\
         mean inference {:.1} us per window\n\
         reference (robot data): {REFERENCE_LATENCY_SAMPLES} samples\n",
        r.onsets,
        r.sequences,
        fmt(r.mean),
        fmt(r.median),
        r.p90.map_or("n/a".into(), |v| v.to_string()),
        r.max.map_or("n/a".into(), |v| v.to_string()),
        r.detected,
        r.missed,
        100.0 * r.miss_rate(),
        r.false_events,
        r.mean_inference_us
    )
}
