use std::fmt;

use serde::Serialize;

use crate::check::LassoTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    UnrealizableBackground,
    NoLegalBehaviour,
    ContradictingObligations,
    ForbiddenReparation,
    ConflictingReparations,
    ImpossiblePermission,
    QueryRefuted,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::UnrealizableBackground => "unrealizable-background",
            FindingKind::NoLegalBehaviour => "no-legal-behaviour",
            FindingKind::ContradictingObligations => "contradicting-obligations",
            FindingKind::ForbiddenReparation => "forbidden-reparation",
            FindingKind::ConflictingReparations => "conflicting-reparations",
            FindingKind::ImpossiblePermission => "impossible-permission",
            FindingKind::QueryRefuted => "query-refuted",
        }
    }

    /// Whether the kind is a coherence problem rather than a query answer.
    pub fn is_coherence_problem(self) -> bool {
        self != FindingKind::QueryRefuted
    }
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    /// The problem only arises on runs that already break other rules.
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub severity: Severity,
    pub implicated_rules: Vec<String>,
    pub witness: Option<LassoTrace>,
    pub explanation: String,
}

/// A check that passed.
#[derive(Debug, Clone, Serialize)]
pub struct Confirmation {
    pub check: String,
    pub subject: Vec<String>,
    pub witness: Option<LassoTrace>,
    pub explanation: String,
}

/// A check that could not be decided, usually because the state budget ran out.
#[derive(Debug, Clone, Serialize)]
pub struct Inconclusive {
    pub check: String,
    pub subject: Vec<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CoherenceReport {
    pub findings: Vec<Finding>,
    pub confirmations: Vec<Confirmation>,
    pub inconclusive: Vec<Inconclusive>,
}

impl CoherenceReport {
    pub fn is_coherent(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn coherence_findings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.kind.is_coherence_problem())
    }

    /// Process exit status: 0 coherent, 1 findings present, 3 undecided checks.
    pub fn exit_code(&self) -> i32 {
        if !self.findings.is_empty() {
            1
        } else if !self.inconclusive.is_empty() {
            3
        } else {
            0
        }
    }
}
