use std::fmt::Write;

use super::{RunReport, ToolHistogram};

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{:.1}", v * 100.0))
}

/// Plain-text results table for one or more reports.
pub fn render_table(reports: &[RunReport]) -> String {
    let header = ["Variant", "Model", "Pass in 2 Tests", "Pass in Budget", "Edit %", "Input Tokens", "Output Tokens", "Cost"];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.variant.clone(),
                r.model_id.clone(),
                pct(r.pass_in_2_tests),
                pct(r.pass_in_budget),
                pct(r.edit_adherence_micro),
                r.usage.input_tokens.to_string(),
                r.usage.output_tokens.to_string(),
                r.cost.map_or_else(|| "n/a".into(), |c| format!("{:.2}", c.round_dp(2))),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        writeln!(out, "| {} |", padded.join(" | ")).unwrap();
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    writeln!(out, "|-{}-|", rule.join("-|-")).unwrap();
    for r in &rows {
        line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

/// Tool call counts and shares, one line per tool.
pub fn render_histogram(h: &ToolHistogram) -> String {
    let width = h.keys().map(String::len).max().unwrap_or(0);
    let mut out = String::new();
    for (name, e) in h {
        writeln!(out, "{name:<width$}  {:>6}  {:>5.1}%", e.count, e.proportion * 100.0).unwrap();
    }
    out
}

/// The table followed by each report's histogram and exclusions.
pub fn render_report(reports: &[RunReport]) -> String {
    let mut out = render_table(reports);
    for r in reports {
        writeln!(out, "\n{} / {}: {} tasks evaluated, {} runs each", r.variant, r.model_id, r.evaluated_tasks, r.runs_per_task).unwrap();
        if !r.excluded_tasks.is_empty() {
            writeln!(out, "excluded (no run completed): {}", r.excluded_tasks.join(", ")).unwrap();
        }
        out.push_str(&render_histogram(&r.tool_histogram));
    }
    out
}
