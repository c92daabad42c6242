use serde::Serialize;

use super::trace::{render_view, trace_view, TraceView};
use crate::check::LassoTrace;
use crate::coherence::{CoherenceReport, FindingKind};
use crate::system::TransitionSystem;

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub file: String,
    pub coherent: bool,
    pub exit_code: i32,
    pub summary: Summary,
    pub findings: Vec<FindingEntry>,
    pub confirmations: Vec<ConfirmationEntry>,
    pub inconclusive: Vec<InconclusiveEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub coherence_findings: usize,
    pub refuted_queries: usize,
    pub confirmations: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FindingEntry {
    pub kind: FindingKind,
    pub severity: String,
    pub rules: Vec<String>,
    pub explanation: String,
    pub witness: Option<TraceView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfirmationEntry {
    pub check: String,
    pub subject: Vec<String>,
    pub explanation: String,
    pub witness: Option<TraceView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InconclusiveEntry {
    pub check: String,
    pub subject: Vec<String>,
    pub reason: String,
}

/// Collects everything both output formats show, so they cannot disagree.
pub fn report_document(report: &CoherenceReport, ts: &TransitionSystem, file: &str) -> ReportDocument {
    let view = |w: &Option<LassoTrace>| w.as_ref().map(|w| trace_view(ts, w));
    let findings: Vec<FindingEntry> = report
        .findings
        .iter()
        .map(|f| FindingEntry {
            kind: f.kind,
            severity: f.severity.as_str().to_string(),
            rules: f.implicated_rules.clone(),
            explanation: f.explanation.clone(),
            witness: view(&f.witness),
        })
        .collect();
    let refuted = findings.iter().filter(|f| f.kind == FindingKind::QueryRefuted).count();
    ReportDocument {
        file: file.to_string(),
        coherent: report.coherence_findings().next().is_none(),
        exit_code: report.exit_code(),
        summary: Summary {
            coherence_findings: findings.len() - refuted,
            refuted_queries: refuted,
            confirmations: report.confirmations.len(),
            inconclusive: report.inconclusive.len(),
        },
        findings,
        confirmations: report
            .confirmations
            .iter()
            .map(|c| ConfirmationEntry {
                check: c.check.clone(),
                subject: c.subject.clone(),
                explanation: c.explanation.clone(),
                witness: view(&c.witness),
            })
            .collect(),
        inconclusive: report
            .inconclusive
            .iter()
            .map(|i| InconclusiveEntry { check: i.check.clone(), subject: i.subject.clone(), reason: i.reason.clone() })
            .collect(),
    }
}

pub fn report_json(doc: &ReportDocument) -> String {
    serde_json::to_string_pretty(doc).expect("report serializes") + "\n"
}

fn indent(text: &str, by: &str) -> String {
    text.lines().map(|l| format!("{by}{l}\n")).collect()
}

fn plural(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

pub fn report_text(doc: &ReportDocument, ts: &TransitionSystem, with_confirmations: bool) -> String {
    let s = &doc.summary;
    let mut out = format!(
        "{}: {}, {}, {}\n",
        doc.file,
        if doc.coherent { "coherent" } else { "NOT coherent" },
        plural(s.coherence_findings, "coherence finding", "coherence findings"),
        plural(s.refuted_queries, "refuted query", "refuted queries"),
    );
    for f in &doc.findings {
        out.push_str(&format!("\n{}[{}] {}\n", f.severity, f.kind, f.rules.join(", ")));
        out.push_str(&indent(&f.explanation, "  "));
        if let Some(w) = &f.witness {
            out.push_str("  witness:\n");
            out.push_str(&indent(&render_view(ts, w), "    "));
        }
    }
    if with_confirmations {
        for c in &doc.confirmations {
            out.push_str(&format!("\nconfirmed[{}] {}\n", c.check, c.subject.join(", ")));
            out.push_str(&indent(&c.explanation, "  "));
            if let Some(w) = &c.witness {
                out.push_str("  witness:\n");
                out.push_str(&indent(&render_view(ts, w), "    "));
            }
        }
    } else if s.confirmations > 0 {
        out.push_str(&format!("\n{}\n", plural(s.confirmations, "check confirmed", "checks confirmed")));
    }
    for i in &doc.inconclusive {
        out.push_str(&format!("\ninconclusive[{}] {}\n  {}\n", i.check, i.subject.join(", "), i.reason));
    }
    out
}
