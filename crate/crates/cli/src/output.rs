use std::io::Write;

use serde::Serialize;

use nterm::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    pub message: String,
}

impl ErrorRecord {
    pub fn config(field: Option<&str>, message: impl Into<String>) -> Self {
        ErrorRecord { kind: "config", field: field.map(str::to_string), n: None, message: message.into() }
    }

    pub fn from_error(err: &Error, n: Option<u64>) -> Self {
        let (kind, field) = match err {
            Error::InvalidParameter { field, .. } => ("config", Some(field.clone())),
            e if e.is_config_error() => ("config", None),
            Error::Divergence { .. } => ("divergence", None),
            Error::ToleranceUnreachable { .. } => ("tolerance", None),
            Error::ScanBudgetExceeded { .. } => ("scan_budget", None),
            Error::MissingGrowthCertificate(_) => ("missing_certificate", None),
            Error::Overflow(_) => ("overflow", None),
            _ => ("domain", None),
        };
        ErrorRecord { kind, field, n, message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            "config" => EXIT_CONFIG,
            "verification" => EXIT_VERIFY,
            _ => EXIT_DOMAIN,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    tool_version: &'static str,
    config_echo: &'a C,
    records: &'a [R],
    errors: &'a [ErrorRecord],
}

/// Records plus errors of one run, written as the JSON envelope or as CSV
/// rows. CSV output falls back to the envelope when there are errors so the
/// failure stays machine-readable.
pub struct Report<R> {
    pub records: Vec<R>,
    pub errors: Vec<ErrorRecord>,
}

impl<R: Serialize> Report<R> {
    pub fn new() -> Self {
        Report { records: Vec::new(), errors: Vec::new() }
    }

    pub fn exit_code(&self) -> i32 {
        self.errors.iter().map(ErrorRecord::exit_code).max().unwrap_or(0)
    }

    pub fn emit<C: Serialize, Row: Serialize>(
        &self,
        format: Format,
        config: &C,
        rows: impl Fn(&R) -> Vec<Row>,
        out: &mut dyn Write,
    ) -> std::io::Result<()> {
        if format == Format::Csv && self.errors.is_empty() {
            let mut w = csv::Writer::from_writer(out);
            for r in &self.records {
                for row in rows(r) {
                    w.serialize(row)?;
                }
            }
            return w.flush();
        }
        let env = Envelope {
            tool_version: env!("CARGO_PKG_VERSION"),
            config_echo: config,
            records: &self.records,
            errors: &self.errors,
        };
        serde_json::to_writer_pretty(&mut *out, &env)?;
        writeln!(out)
    }
}

/// Writes a lone configuration error in the JSON envelope.
pub fn emit_config_error(message: &str, out: &mut dyn Write) -> std::io::Result<()> {
    let report: Report<()> = Report { records: Vec::new(), errors: vec![ErrorRecord::config(None, message)] };
    report.emit(Format::Json, &serde_json::Value::Null, |_| Vec::<()>::new(), out)
}
