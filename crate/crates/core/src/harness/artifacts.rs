//! Text renderings of run artifacts: metric and curve CSVs for analysis,
//! and the comparison table as markdown and CSV.

use super::metrics::MetricsReport;
use super::report::{measured_cells, MEASURED_HEADER};
use super::train::CurvePoint;

fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    let mut line = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&csv_field(f));
    }
    line.push('\n');
    line
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Every metric field, one row per report. Undefined rates are empty cells.
pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut out = csv_line(
        &[
            "agent",
            "episodes",
            "scenarios",
            "mitigation_rate",
            "true_positive_rate",
            "false_positive_rate",
            "median_response_seconds",
            "mean_policy_updates_per_hour",
            "mean_policy_updates_per_day",
            "mean_outstanding_violations",
            "max_outstanding_violations",
            "mean_episode_reward",
            "total_breaches",
            "total_neutralized_by_agent",
            "total_fp_actions",
            "total_guardrail_rejections",
        ]
        .map(String::from),
    );
    for m in reports {
        out.push_str(&csv_line(&[
            m.agent.clone(),
            m.episodes.to_string(),
            m.scenarios.to_string(),
            opt(m.mitigation_rate),
            opt(m.true_positive_rate),
            opt(m.false_positive_rate),
            opt(m.median_response_seconds),
            m.mean_policy_updates_per_hour.to_string(),
            m.mean_policy_updates_per_day.to_string(),
            m.mean_outstanding_violations.to_string(),
            m.max_outstanding_violations.to_string(),
            m.mean_episode_reward.to_string(),
            m.total_breaches.to_string(),
            m.total_neutralized_by_agent.to_string(),
            m.total_fp_actions.to_string(),
            m.total_guardrail_rejections.to_string(),
        ]));
    }
    out
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = csv_line(&["episode", "phase", "env_steps", "return"].map(String::from));
    for p in points {
        out.push_str(&csv_line(&[
            p.episode.to_string(),
            p.phase.clone(),
            p.env_steps.to_string(),
            p.episode_return.to_string(),
        ]));
    }
    out
}

/// The comparison columns as raw numbers, rates in [0, 1].
pub fn comparison_csv(reports: &[MetricsReport]) -> String {
    let mut out = csv_line(
        &[
            "agent",
            "mitigation_rate",
            "median_response_seconds",
            "true_positive_rate",
            "false_positive_rate",
            "policy_updates_per_day",
            "mean_outstanding_violations",
        ]
        .map(String::from),
    );
    for m in reports {
        out.push_str(&csv_line(&[
            m.agent.clone(),
            opt(m.mitigation_rate),
            opt(m.median_response_seconds),
            opt(m.true_positive_rate),
            opt(m.false_positive_rate),
            m.mean_policy_updates_per_day.to_string(),
            m.mean_outstanding_violations.to_string(),
        ]));
    }
    out
}

/// The comparison as a markdown pipe table, same formatted cells as the
/// plain-text rendering.
pub fn comparison_markdown(reports: &[MetricsReport]) -> String {
    let mut out = String::new();
    out.push('|');
    for h in MEASURED_HEADER {
        out.push(' ');
        out.push_str(h);
        out.push_str(" |");
    }
    out.push('\n');
    out.push('|');
    for _ in MEASURED_HEADER {
        out.push_str(" --- |");
    }
    out.push('\n');
    for row in measured_cells(reports) {
        out.push('|');
        for cell in row {
            out.push(' ');
            out.push_str(&cell);
            out.push_str(" |");
        }
        out.push('\n');
    }
    out
}
