//! Text and JSON renderings of witnesses, reports and compiled models.

mod model;
mod report;
mod trace;

pub use model::{emit_model, snake_case, Dialect, EmitError};
pub use report::{
    report_document, report_json, report_text, ConfirmationEntry, FindingEntry, InconclusiveEntry, ReportDocument,
    Summary,
};
pub use trace::{render_trace, trace_view, TraceStep, TraceView};
