//! Report generation with provider-written prose and file output.

use std::path::{Path, PathBuf};

use argugraph_core::credibility::PropagationResult;
use argugraph_core::critique::Finding;
use argugraph_core::graph::ArgumentGraph;
use argugraph_core::report::{fallback_recommendations, fallback_summary, EdgeAssumptions, Report, ReportInputs};

use crate::assist::{call_with_retries, snapshot_message, CallFailure};
use crate::provider::{ChatMessage, ChatProvider, Task};

pub const FALLBACK_NOTICE: &str = "Fallback notice:";

fn prose(
    provider: &dyn ChatProvider,
    task: Task,
    instruction: &str,
    inputs: &ReportInputs<'_>,
) -> Result<String, String> {
    let context = format!(
        "{}\n{}\n{}",
        argugraph_core::report::credibility(inputs),
        argugraph_core::report::critique(inputs),
        argugraph_core::report::edges(inputs)
    );
    let messages = vec![
        ChatMessage::system(
            "You write sections of an analysis report about an argumentative essay modelled as a claim graph. \
             Be concise and concrete, refer to claims by id, and do not restate numbers you were not given.",
        ),
        snapshot_message(inputs.graph),
        ChatMessage::user(format!("{instruction}\n\nEngine results:\n{context}")),
    ];
    call_with_retries(provider, task, messages, |reply| {
        let reply = reply.trim();
        if reply.is_empty() {
            Err("reply is empty".to_string())
        } else {
            Ok(reply.to_string())
        }
    })
    .map_err(|f| match f {
        CallFailure::Provider { source, .. } => source.to_string(),
        CallFailure::Rejected { reason, .. } => reason,
    })
}

/// Builds the eight-section report. The executive summary and
/// recommendations come from `provider`; if it is absent or fails, templated
/// text is used and the section says so.
pub fn generate_report(
    graph: &ArgumentGraph,
    propagation: &PropagationResult,
    findings: &[Finding],
    assumptions: &[EdgeAssumptions],
    provider: Option<&dyn ChatProvider>,
    generated_at: &str,
) -> Report {
    let inputs = ReportInputs {
        graph,
        propagation,
        findings,
        assumptions,
    };
    let section = |task: Task, instruction: &str, fallback: fn(&ReportInputs<'_>) -> String| {
        let result = match provider {
            Some(p) => prose(p, task, instruction, &inputs),
            None => Err("no language model provider is configured".to_string()),
        };
        match result {
            Ok(text) => text,
            Err(reason) => {
                tracing::warn!(?task, %reason, "using templated report section");
                format!(
                    "{FALLBACK_NOTICE} generated without a language model ({reason}).\n\n{}",
                    fallback(&inputs)
                )
            }
        }
    };
    let summary = section(
        Task::ReportSummary,
        "Write a one-paragraph executive summary of the argument's overall strength.",
        fallback_summary,
    );
    let recommendations = section(
        Task::ReportRecommendations,
        "Write a short bulleted list of concrete recommendations to strengthen the argument.",
        fallback_recommendations,
    );
    Report::assemble(&inputs, generated_at, summary, recommendations)
}

fn file_stem(graph_id: &str) -> String {
    graph_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `<id>-report.json` and `<id>-report.md` into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let stem = file_stem(&report.graph_id);
    let json_path = dir.join(format!("{stem}-report.json"));
    let md_path = dir.join(format!("{stem}-report.md"));
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    std::fs::write(&json_path, json + "\n")?;
    std::fs::write(&md_path, report.to_markdown())?;
    Ok((json_path, md_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{MockProvider, ProviderError};
    use argugraph_core::credibility::{compute_scores, PropagationConfig};
    use argugraph_core::graph::{ClaimType, NewEdge, QualitativeStrength, Relation};

    fn graph() -> ArgumentGraph {
        let mut g = ArgumentGraph::new("g/1", "Parks", "2026-01-01T00:00:00Z");
        let a = g.add_claim("a", ClaimType::Fact).unwrap().id.clone();
        let b = g.add_claim("b", ClaimType::Policy).unwrap().id.clone();
        g.add_edge(NewEdge::new(&a, &b, Relation::Support, QualitativeStrength::Strong))
            .unwrap();
        g
    }

    #[test]
    fn provider_prose_is_used() {
        let g = graph();
        let p = compute_scores(&g, &PropagationConfig::for_graph(&g)).unwrap();
        let mock = MockProvider::new(0);
        let r = generate_report(&g, &p, &[], &[], Some(&mock), "2026-01-01T00:00:00Z");
        assert!(r.has_canonical_layout());
        assert!(r.sections[0].body.starts_with("Mock executive summary"));
        assert!(r.sections[7].body.starts_with("Mock recommendations"));
        assert_eq!(mock.calls(), 2);
    }

    #[test]
    fn failure_falls_back_with_notice() {
        let g = graph();
        let p = compute_scores(&g, &PropagationConfig::for_graph(&g)).unwrap();
        let mock = MockProvider::new(0).fail(
            Task::ReportSummary,
            ProviderError::Status {
                status: 500,
                body: String::new(),
            },
        );
        let r = generate_report(&g, &p, &[], &[], Some(&mock), "t");
        assert!(r.sections[0].body.starts_with(FALLBACK_NOTICE));
        assert!(!r.sections[7].body.starts_with(FALLBACK_NOTICE));
        let r = generate_report(&g, &p, &[], &[], None, "t");
        assert!(r.sections[7].body.starts_with(FALLBACK_NOTICE));
    }

    #[test]
    fn writes_both_files() {
        let g = graph();
        let p = compute_scores(&g, &PropagationConfig::for_graph(&g)).unwrap();
        let r = generate_report(&g, &p, &[], &[], None, "t");
        let dir = tempfile::tempdir().unwrap();
        let (json, md) = write_report(&r, dir.path()).unwrap();
        assert_eq!(json.file_name().unwrap(), "g_1-report.json");
        let back: Report = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(std::fs::read_to_string(md).unwrap().contains("## 8. Recommendations"));
    }
}
