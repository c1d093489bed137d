//! Command-line driver.
//!
//! Exit codes: 0 success, 1 when the graph breaks invariants, 2 for usage,
//! parse and IO errors.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use argugraph_core::credibility::{compute_scores, propagate, PropagationConfig, PropagationError, PropagationResult};
use argugraph_core::critique::{detect_structural, sort_findings, CritiqueError, Finding, PatternBank};
use argugraph_core::graph::{ArgumentGraph, Violation};
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::api::{AppState, ENV_API_TOKEN};
use crate::bank::{default_bank, load_pattern_bank_file};
use crate::document;
use crate::provider::{select_provider_from_env, ChatProvider, ENV_ENDPOINT, ENV_PROVIDER};
use crate::reporting::{generate_report, write_report};
use crate::semantic::detect_semantic;
use crate::store::{DEFAULT_DATA_DIR, ENV_DATA_DIR};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "argugraph", version, about = "Score, critique and report on argument graphs")]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a graph document against the schema and graph invariants.
    Validate { file: PathBuf },
    /// Compute credibility scores.
    Score {
        file: PathBuf,
        /// Evidence weight; defaults to the document's delta.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
        /// Write the scores back into the file.
        #[arg(long)]
        in_place: bool,
    },
    /// Run the pattern bank against a graph.
    Critique {
        file: PathBuf,
        /// YAML pattern bank; the built-in bank is used otherwise.
        #[arg(long)]
        bank: Option<PathBuf>,
        /// Also run semantic patterns through the configured provider.
        #[arg(long)]
        semantic: bool,
    },
    /// Write the report as JSON and Markdown.
    Report {
        file: PathBuf,
        #[arg(short = 'o', long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, env = ENV_DATA_DIR, default_value = DEFAULT_DATA_DIR)]
        data_dir: PathBuf,
    },
}

/// A failed command: message for stderr and the exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn error(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_ERROR,
            message: message.into(),
        }
    }
}

type Outcome = Result<i32, Failure>;

fn read_graph(path: &Path) -> Result<ArgumentGraph, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::error(format!("{}: {e}", path.display())))?;
    document::parse(&text).map_err(|e| Failure::error(format!("{}: {e}", path.display())))
}

fn print_violations(out: &mut dyn Write, violations: &[Violation]) -> std::io::Result<()> {
    for v in violations {
        writeln!(out, "{v}")?;
    }
    writeln!(
        out,
        "{} violation{}",
        violations.len(),
        if violations.len() == 1 { "" } else { "s" }
    )
}

fn invalid(out: &mut dyn Write, json: bool, violations: &[Violation]) -> Outcome {
    if json {
        writeln!(out, "{}", json!({ "violations": violations })).map_err(io)?;
    } else {
        print_violations(out, violations).map_err(io)?;
    }
    Ok(EXIT_VIOLATIONS)
}

fn io(e: std::io::Error) -> Failure {
    Failure::error(format!("output error: {e}"))
}

fn configured_provider() -> Result<Option<Arc<dyn ChatProvider>>, Failure> {
    select_provider_from_env()
        .map(|s| s.into_shared())
        .map_err(|e| Failure::error(format!("provider configuration: {e}")))
}

fn validate(out: &mut dyn Write, json: bool, file: &Path) -> Outcome {
    let graph = read_graph(file)?;
    let violations = graph.validate();
    if json {
        writeln!(out, "{}", json!({ "violations": violations })).map_err(io)?;
    } else {
        print_violations(out, &violations).map_err(io)?;
    }
    Ok(if violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}

fn score(
    out: &mut dyn Write,
    err: &mut dyn Write,
    json: bool,
    file: &Path,
    config: impl FnOnce(PropagationConfig) -> PropagationConfig,
    in_place: bool,
) -> Outcome {
    let mut graph = read_graph(file)?;
    let config = config(PropagationConfig::for_graph(&graph));
    let run = if in_place {
        propagate(&mut graph, &config)
    } else {
        compute_scores(&graph, &config)
    };
    let result: PropagationResult = match run {
        Ok(r) => r,
        Err(PropagationError::InvalidGraph(v)) => return invalid(out, json, &v),
        Err(PropagationError::Config(e)) => return Err(Failure::error(e.to_string())),
    };
    if json {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&result).expect("results serialize")
        )
        .map_err(io)?;
    } else {
        for node in &graph.nodes {
            let s = result.score(&node.id).expect("every node is scored");
            writeln!(out, "S_{}={s:.5}", node.id).map_err(io)?;
        }
        if result.converged {
            writeln!(out, "converged after {} iteration(s)", result.iterations_used).map_err(io)?;
        }
    }
    if !result.converged {
        writeln!(
            err,
            "warning: did not converge within {} iteration(s); max residual {:e}",
            result.iterations_used, result.max_residual
        )
        .map_err(io)?;
    }
    if in_place {
        document::touch(&mut graph);
        let text = document::serialize(&graph) + "\n";
        write_file(file, &text)?;
    }
    Ok(EXIT_OK)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| Failure::error(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(text.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn print_findings(out: &mut dyn Write, findings: &[Finding]) -> std::io::Result<()> {
    for f in findings {
        let edges = if f.involved_edge_ids.is_empty() {
            String::new()
        } else {
            format!(" via {}", f.involved_edge_ids.join(", "))
        };
        writeln!(
            out,
            "[{}] {}: {}{edges}: {}",
            f.severity.as_str(),
            f.pattern_id,
            f.involved_node_ids.join(", "),
            f.explanation
        )?;
    }
    writeln!(
        out,
        "{} finding{}",
        findings.len(),
        if findings.len() == 1 { "" } else { "s" }
    )
}

fn critique(
    out: &mut dyn Write,
    err: &mut dyn Write,
    json: bool,
    file: &Path,
    bank: Option<&Path>,
    semantic: bool,
) -> Outcome {
    let graph = read_graph(file)?;
    let bank: PatternBank = match bank {
        Some(p) => load_pattern_bank_file(p).map_err(|e| Failure::error(e.to_string()))?,
        None => default_bank(),
    };
    let mut findings = match detect_structural(&graph, &bank) {
        Ok(f) => f,
        Err(CritiqueError::InvalidGraph(v)) => return invalid(out, json, &v),
    };
    let mut diagnostics = Vec::new();
    if semantic {
        let provider = configured_provider()?.ok_or_else(|| {
            Failure::error(format!(
                "--semantic needs a provider: set {ENV_ENDPOINT} or {ENV_PROVIDER}=mock"
            ))
        })?;
        let outcome = detect_semantic(&graph, &bank, &provider).map_err(|e| Failure::error(e.to_string()))?;
        findings.extend(outcome.findings);
        diagnostics = outcome.diagnostics;
        sort_findings(&mut findings);
    }
    if json {
        let body = json!({ "findings": findings, "diagnostics": diagnostics });
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&body).expect("findings serialize")
        )
        .map_err(io)?;
    } else {
        print_findings(out, &findings).map_err(io)?;
        for d in &diagnostics {
            writeln!(err, "note: {d}").map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

fn report(out: &mut dyn Write, json: bool, file: &Path, out_dir: &Path) -> Outcome {
    let graph = read_graph(file)?;
    let violations = graph.validate();
    if !violations.is_empty() {
        return invalid(out, json, &violations);
    }
    let propagation =
        compute_scores(&graph, &PropagationConfig::for_graph(&graph)).map_err(|e| Failure::error(e.to_string()))?;
    let findings = detect_structural(&graph, &default_bank()).map_err(|e| Failure::error(e.to_string()))?;
    let provider = configured_provider()?;
    let report = generate_report(
        &graph,
        &propagation,
        &findings,
        &[],
        provider.as_deref(),
        &graph.metadata.modified_at,
    );
    let (json_path, md_path) =
        write_report(&report, out_dir).map_err(|e| Failure::error(format!("{}: {e}", out_dir.display())))?;
    if json {
        writeln!(out, "{}", json!({ "json": json_path, "markdown": md_path })).map_err(io)?;
    } else {
        writeln!(out, "wrote {}", json_path.display()).map_err(io)?;
        writeln!(out, "wrote {}", md_path.display()).map_err(io)?;
    }
    Ok(EXIT_OK)
}

fn serve(addr: SocketAddr, data_dir: PathBuf) -> Outcome {
    let provider = configured_provider()?;
    let token = std::env::var(ENV_API_TOKEN).ok();
    if token.as_deref().is_none_or(str::is_empty) {
        tracing::warn!("{ENV_API_TOKEN} is not set; the API accepts unauthenticated requests");
    }
    let state = AppState::new(&data_dir, provider, default_bank(), token)
        .map_err(|e| Failure::error(format!("{}: {e}", data_dir.display())))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::error(e.to_string()))?;
    runtime
        .block_on(crate::api::serve(addr, state))
        .map_err(|e| Failure::error(format!("server error: {e}")))?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return e.exit_code();
        }
    };
    let json = cli.json;
    let outcome = match cli.command {
        Command::Validate { file } => validate(out, json, &file),
        Command::Score {
            file,
            delta,
            epsilon,
            max_iters,
            in_place,
        } => score(
            out,
            err,
            json,
            &file,
            |mut c| {
                if let Some(d) = delta {
                    c = c.with_delta(d);
                }
                if let Some(e) = epsilon {
                    c = c.with_epsilon(e);
                }
                if let Some(m) = max_iters {
                    c = c.with_max_iterations(m);
                }
                c
            },
            in_place,
        ),
        Command::Critique { file, bank, semantic } => critique(out, err, json, &file, bank.as_deref(), semantic),
        Command::Report { file, out_dir } => report(out, json, &file, &out_dir),
        Command::Serve { addr, data_dir } => serve(addr, data_dir),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
