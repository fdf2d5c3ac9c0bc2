//! Report rendering: canonical pretty-printed JSON for tooling and a
//! fixed-width table for terminals. Both are deterministic functions of
//! the report, so identical replays render to identical bytes.

use serde::Serialize;
use serde_json::Value;

use caret_core::metrics::MetricsReport;

/// Serialization mirror of [`MetricsReport`]; field order is the output
/// order.
#[derive(Serialize)]
struct ReportDoc<'a> {
    fcml: f64,
    fcml_no_paste: f64,
    acceptance_rate: f64,
    avg_chars_per_accept: f64,
    latency_p50_ms: u64,
    latency_p90_ms: u64,
    cache_hit_rate: f64,
    requests: usize,
    cache_served: usize,
    shown: usize,
    accepted: usize,
    rejected: usize,
    qualifying_rejects: usize,
    typed_chars: usize,
    accepted_chars: usize,
    pasted_chars: usize,
    qualifying_pasted_chars: usize,
    zero_denominators: &'a [&'static str],
}

impl<'a> ReportDoc<'a> {
    fn new(report: &'a MetricsReport) -> ReportDoc<'a> {
        ReportDoc {
            fcml: report.fcml,
            fcml_no_paste: report.fcml_no_paste,
            acceptance_rate: report.acceptance_rate,
            avg_chars_per_accept: report.avg_chars_per_accept,
            latency_p50_ms: report.latency_p50_ms,
            latency_p90_ms: report.latency_p90_ms,
            cache_hit_rate: report.cache_hit_rate,
            requests: report.requests,
            cache_served: report.cache_served,
            shown: report.shown,
            accepted: report.accepted,
            rejected: report.rejected,
            qualifying_rejects: report.qualifying_rejects,
            typed_chars: report.typed_chars,
            accepted_chars: report.accepted_chars,
            pasted_chars: report.pasted_chars,
            qualifying_pasted_chars: report.qualifying_pasted_chars,
            zero_denominators: &report.zero_denominators,
        }
    }
}

/// The report as a JSON value, shared by the file renderer and the
/// service's metrics response.
pub fn json_value(report: &MetricsReport) -> Value {
    serde_json::to_value(ReportDoc::new(report)).expect("reports serialize")
}

/// Pretty-printed JSON, newline-terminated.
pub fn render_json(report: &MetricsReport) -> String {
    let mut out =
        serde_json::to_string_pretty(&ReportDoc::new(report)).expect("reports serialize");
    out.push('\n');
    out
}

/// Aligned name/value lines, newline-terminated.
pub fn render_table(report: &MetricsReport) -> String {
    let mut rows: Vec<(&str, String)> = vec![
        ("fcml", format!("{:.4}", report.fcml)),
        ("fcml_no_paste", format!("{:.4}", report.fcml_no_paste)),
        ("acceptance_rate", format!("{:.4}", report.acceptance_rate)),
        ("avg_chars_per_accept", format!("{:.2}", report.avg_chars_per_accept)),
        ("latency_p50_ms", report.latency_p50_ms.to_string()),
        ("latency_p90_ms", report.latency_p90_ms.to_string()),
        ("cache_hit_rate", format!("{:.4}", report.cache_hit_rate)),
        ("requests", report.requests.to_string()),
        ("cache_served", report.cache_served.to_string()),
        ("shown", report.shown.to_string()),
        ("accepted", report.accepted.to_string()),
        ("rejected", report.rejected.to_string()),
        ("qualifying_rejects", report.qualifying_rejects.to_string()),
        ("typed_chars", report.typed_chars.to_string()),
        ("accepted_chars", report.accepted_chars.to_string()),
        ("pasted_chars", report.pasted_chars.to_string()),
        ("qualifying_pasted_chars", report.qualifying_pasted_chars.to_string()),
    ];
    if !report.zero_denominators.is_empty() {
        rows.push(("zero_denominators", report.zero_denominators.join(", ")));
    }
    let width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (name, value) in rows {
        out.push_str(&format!("{name:<width$}  {value}\n"));
    }
    out
}
