//! Plain-text and CSV summaries of evaluation results.

use std::fmt::Write as _;

use arfault::classify::{EvalReport, Task};

use crate::experiment::PipelineReport;

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Accuracy table: one row per stage with the 95% interval.
pub fn accuracy_csv(r: &PipelineReport) -> String {
    let mut s = String::from("stage,n,accuracy_pct,ci_lo_pct,ci_hi_pct,config_hash\n");
    for t in Task::ALL {
        let e = r.stage(t);
        let _ = writeln!(s, "{},{},{},{},{},{}", t, e.n, pct(e.accuracy), pct(e.ci_lo), pct(e.ci_hi), r.config_hash);
    }
    let _ = writeln!(s, "end_to_end,{},{},,,{}", r.n_test, pct(r.end_to_end), r.config_hash);
    s
}

fn confusion_text(e: &EvalReport) -> String {
    let width = e.labels.iter().map(String::len).max().unwrap_or(4).max(6);
    let mut s = format!("{:>width$} |", "true");
    for l in &e.labels {
        let _ = write!(s, " {l:>width$}");
    }
    s.push('\n');
    for (l, row) in e.labels.iter().zip(&e.confusion) {
        let _ = write!(s, "{l:>width$} |");
        for v in row {
            let _ = write!(s, " {v:>width$}");
        }
        s.push('\n');
    }
    s
}

/// Human-readable report with stage accuracies and confusion matrices.
pub fn report_text(r: &PipelineReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "arfault evaluation report");
    let _ = writeln!(s, "config hash: {}", r.config_hash);
    let _ = writeln!(s, "test cases: {}", r.n_test);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<12} {:>6} {:>9} {:>17}", "stage", "n", "acc (%)", "95% CI (%)");
    for t in Task::ALL {
        let e = r.stage(t);
        let _ = writeln!(s, "{:<12} {:>6} {:>9} {:>17}", t.to_string(), e.n, pct(e.accuracy), format!("{} - {}", pct(e.ci_lo), pct(e.ci_hi)));
    }
    let _ = writeln!(s, "{:<12} {:>6} {:>9}", "end_to_end", r.n_test, pct(r.end_to_end));
    for t in Task::ALL {
        let e = r.stage(t);
        let _ = writeln!(s, "\n{t} confusion (rows true, columns predicted)");
        s.push_str(&confusion_text(e));
    }
    s
}
