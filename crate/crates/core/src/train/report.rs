use std::fmt::Write as _;
use std::io::{self, Write};

use super::{SweepReport, TracePoint, TrainHistory};

pub const REPORT_HEADER: &str = "stacks,window,parameters,mse,file_size_bytes,latency_ms_mean,latency_ms_std,accuracy_pct";
pub const TRACE_HEADER: &str = "time_s,soc_true,soc_pred";
pub const HISTORY_HEADER: &str = "epoch,train_loss,train_mse,val_mse";

/// One line per row; a failed row keeps its grid coordinates and parameter
/// count and leaves the measured columns empty.
pub fn write_report_csv<W: Write>(report: &SweepReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for row in &report.rows {
        write!(out, "{},{},{},", row.stacks, row.window, row.parameters)?;
        match &row.result {
            Ok(m) => writeln!(
                out,
                "{},{},{},{},{}",
                m.mse, m.file_size_bytes, m.latency_ms_mean, m.latency_ms_std, m.accuracy_pct
            )?,
            Err(_) => writeln!(out, ",,,,")?,
        }
    }
    out.flush()
}

/// Aligned plain-text rendering of the report, protocol noted up top and
/// diagnostics listed under any failed rows.
pub fn format_report_table(report: &SweepReport) -> String {
    let head = ["stacks", "window", "parameters", "mse", "file_size_bytes", "latency_ms_mean", "latency_ms_std", "accuracy_pct"];
    let mut cells: Vec<[String; 8]> = Vec::with_capacity(report.rows.len());
    for row in &report.rows {
        let measured = match &row.result {
            Ok(m) => [
                format!("{:.6}", m.mse),
                m.file_size_bytes.to_string(),
                format!("{:.4}", m.latency_ms_mean),
                format!("{:.4}", m.latency_ms_std),
                format!("{:.2}", m.accuracy_pct),
            ],
            Err(_) => std::array::from_fn(|i| if i == 0 { "FAILED".to_string() } else { "-".to_string() }),
        };
        let [a, b, c, d, e] = measured;
        cells.push([row.stacks.to_string(), row.window.to_string(), row.parameters.to_string(), a, b, c, d, e]);
    }
    let widths: Vec<usize> = (0..8)
        .map(|i| cells.iter().map(|r| r[i].len()).chain([head[i].len()]).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    let _ = writeln!(s, "protocol: {}   eval: {}", report.protocol, report.eval_mode);
    let line = |s: &mut String, fields: &[&str]| {
        let padded: Vec<String> = fields.iter().zip(&widths).map(|(f, w)| format!("{f:>w$}")).collect();
        let _ = writeln!(s, "{}", padded.join("  "));
    };
    line(&mut s, &head);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut s, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for r in &cells {
        line(&mut s, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    for row in &report.rows {
        if let Err(e) = &row.result {
            let _ = writeln!(s, "S={} L={}: {e}", row.stacks, row.window);
        }
    }
    s
}

pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for p in trace {
        writeln!(out, "{},{},{}", p.time_s, p.soc_true, p.soc_pred)?;
    }
    out.flush()
}

/// Epochs are 1-based; `val_mse` is empty when no validation split was held out.
pub fn write_history_csv<W: Write>(history: &TrainHistory, mut out: W) -> io::Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for e in &history.epochs {
        match e.val_mse {
            Some(v) => writeln!(out, "{},{},{},{v}", e.epoch, e.train_loss, e.train_mse)?,
            None => writeln!(out, "{},{},{},", e.epoch, e.train_loss, e.train_mse)?,
        }
    }
    out.flush()
}
