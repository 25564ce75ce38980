//! JSON, CSV and plain-text renderings of reports.

use std::fmt::Write;

use serde::Serialize;

use crate::experiment::{outcome_bits, ExperimentReport, OUTCOMES};
use crate::lhv::Certificate;

pub const BAR_WIDTH: usize = 40;

/// Pretty JSON with a trailing newline. Floats are written in their shortest
/// round-trip form, so every double is reproduced exactly on parsing.
pub fn json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report types serialize");
    out.push('\n');
    out
}

pub fn outcome_label(index: usize) -> String {
    outcome_bits(index)
        .iter()
        .map(|&b| if b > 0 { '+' } else { '-' })
        .collect()
}

/// One histogram panel: a row per outcome, bars scaled to the largest entry.
pub fn histogram_panel(title: &str, values: &[f64; OUTCOMES], annotations: &[String]) -> String {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let mut out = format!("{title}\n");
    for (k, &v) in values.iter().enumerate() {
        let len = if max > 0.0 {
            (BAR_WIDTH as f64 * v / max).round() as usize
        } else {
            0
        };
        let _ = writeln!(
            out,
            "  {} |{:<width$}| {}",
            outcome_label(k),
            "#".repeat(len),
            annotations[k],
            width = BAR_WIDTH
        );
    }
    out
}

pub fn report_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("correlation,sign,E,stderr,n\n");
    for c in &report.correlations {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.id,
            c.id.sign(),
            c.value,
            c.stderr,
            c.n
        );
    }
    out
}

pub fn correlation_table(report: &ExperimentReport) -> String {
    let mut out = format!(
        "{:<11} {:>4} {:>12} {:>10} {:>9}\n",
        "correlation", "sign", "E", "stderr", "n"
    );
    for c in &report.correlations {
        let _ = writeln!(
            out,
            "{:<11} {:>+4} {:>12.5} {:>10.5} {:>9}",
            c.id.name(),
            c.id.sign(),
            c.value,
            c.stderr,
            c.n
        );
    }
    let _ = writeln!(
        out,
        "\nO = {:.5} ± {:.5}",
        report.bell_value, report.bell_stderr
    );
    if let Some(s) = report.sigma_violation {
        let _ = writeln!(out, "violation of O ≤ 7: {s:.1} standard deviations");
    }
    let _ = writeln!(out, "M fidelity: {:.4}", report.m_fidelity);
    out
}

pub fn lr_panel(lr_counts: &[usize; OUTCOMES]) -> String {
    let values = lr_counts.map(|c| c as f64);
    let notes: Vec<String> = lr_counts
        .iter()
        .map(|c| format!("{c} assignments"))
        .collect();
    histogram_panel(
        "Local realism (M context, bits A1 A2 B1 B2)",
        &values,
        &notes,
    )
}

pub fn qm_panel(probs: &[f64; OUTCOMES]) -> String {
    let notes: Vec<String> = probs.iter().map(|p| format!("{p:.6}")).collect();
    histogram_panel("Quantum mechanics", probs, &notes)
}

pub fn observed_panel(freqs: &[f64; OUTCOMES], total: u64) -> String {
    let counts = freqs.map(|p| (p * total as f64).round());
    let notes: Vec<String> = counts.iter().map(|c| format!("{c:.0}")).collect();
    histogram_panel("Observed", &counts, &notes)
}

pub fn certificate_text(cert: &Certificate) -> String {
    let mut out =
        String::from("Local-realism constraints (product of elements of reality = sign)\n");
    for row in &cert.constraints {
        let names: Vec<&str> = row.symbols.iter().map(|s| s.name()).collect();
        let _ = writeln!(
            out,
            "  {:>2}. {:<11} {} = {:+}",
            row.index,
            row.correlation.name(),
            names.join("·"),
            row.required_sign
        );
    }
    let a = &cert.audit;
    let _ = writeln!(out, "\nassignments enumerated: {}", cert.assignment_count);
    let _ = writeln!(
        out,
        "satisfying all {}: {}",
        a.constraint_count, a.all_satisfied_count
    );
    let _ = writeln!(
        out,
        "max satisfied: {} ({} assignments)",
        a.max_satisfied, a.assignments_at_max
    );
    let _ = writeln!(out, "histogram by satisfied count: {:?}", a.histogram);
    let _ = writeln!(
        out,
        "local-realism bound on O: max {} min {}",
        cert.bound.max_value, cert.bound.min_value
    );
    let _ = writeln!(out, "parity witness: {}", cert.parity_witness);
    let _ = writeln!(
        out,
        "O = 2·satisfied − 9 for every assignment: {}",
        cert.bell_identity_holds
    );
    let _ = writeln!(out, "certificate valid: {}\n", cert.is_valid());
    out.push_str(&lr_panel(&cert.lr_m_histogram));
    out
}

pub fn certificate_csv(cert: &Certificate) -> String {
    let mut out = String::from("satisfied_count,assignments\n");
    for (k, n) in cert.audit.histogram.iter().enumerate() {
        let _ = writeln!(out, "{k},{n}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_outcome_order() {
        assert_eq!(outcome_label(0), "++++");
        assert_eq!(outcome_label(6), "+--+");
        assert_eq!(outcome_label(15), "----");
    }

    #[test]
    fn bars_are_fixed_width() {
        let mut v = [0.0; OUTCOMES];
        v[1] = 2.0;
        v[2] = 1.0;
        let notes = vec![String::new(); OUTCOMES];
        let panel = histogram_panel("t", &v, &notes);
        let lines: Vec<&str> = panel.lines().collect();
        assert_eq!(lines.len(), 17);
        assert!(lines[2].contains(&format!("|{}|", "#".repeat(40))));
        assert!(lines[3].contains(&format!("|{}{}|", "#".repeat(20), " ".repeat(20))));
        assert!(lines[1].contains(&format!("|{}|", " ".repeat(40))));
    }
}
