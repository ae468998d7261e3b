use std::collections::BTreeSet;
use std::fmt::Write as _;

use pseudobox::{round_half_away, ApReport, ClassLabel};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("report '{name}' covers a different class set than '{first}'")]
    ClassSetMismatch { first: String, name: String },
}

/// Percentage with one decimal, rounded half away from zero.
pub fn format_percent(value: f64) -> String {
    format!("{:.1}", round_half_away(value * 100.0, 1))
}

/// Fixed-width AP table: one row per report, the 20 classes in VOC order using
/// their short names, then `Avg.` (the report's mAP). Classes excluded from a
/// report's mAP print as `-`.
pub fn render_table(reports: &[(String, ApReport)]) -> Result<String, TableError> {
    let class_set = |r: &ApReport| -> BTreeSet<ClassLabel> { r.included().into_keys().collect() };
    if let Some((first, head)) = reports.first() {
        let expected = class_set(head);
        for (name, r) in &reports[1..] {
            if class_set(r) != expected {
                return Err(TableError::ClassSetMismatch {
                    first: first.clone(),
                    name: name.clone(),
                });
            }
        }
    }

    let name_width = reports
        .iter()
        .map(|(n, _)| n.chars().count())
        .chain(std::iter::once("Method".len()))
        .max()
        .unwrap_or(6);
    let col = |label: &str| label.len().max(5);

    let mut out = String::new();
    let _ = write!(out, "{:<name_width$}", "Method");
    for c in ClassLabel::ALL {
        let _ = write!(out, " {:>w$}", c.short_name(), w = col(c.short_name()));
    }
    let _ = writeln!(out, " {:>5}", "Avg.");

    for (name, report) in reports {
        let _ = write!(out, "{name:<name_width$}");
        for c in ClassLabel::ALL {
            let cell = report
                .ap(c)
                .map(format_percent)
                .unwrap_or_else(|| "-".into());
            let _ = write!(out, " {:>w$}", cell, w = col(c.short_name()));
        }
        let _ = writeln!(out, " {:>5}", format_percent(report.map));
    }
    Ok(out)
}
