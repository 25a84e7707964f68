//! File formats: the native JSON instance, trace CSV and report JSON.

use std::io::{Read, Write};
use std::time::Instant;

use pdhg_core::pdhg::{Certificate, SeqKind, TraceRecord, TraceSink};
use pdhg_core::{GeneralFormLp, SolveOutcome, SparseMatrix, StepSizes};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON instance: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Instance(#[from] pdhg_core::Error),
    #[error("trace CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace CSV line {line}: {msg}")]
    Trace { line: u64, msg: String },
}

/// Sparse matrix as `[row, col, value]` triplets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

/// `min cᵀx + obj_offset, Ax ≥ b, lower ≤ x ≤ upper`. A `null` bound is
/// infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub c: Vec<f64>,
    pub a: MatrixFile,
    pub b: Vec<f64>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    #[serde(default)]
    pub obj_offset: f64,
}

impl InstanceFile {
    pub fn from_lp(p: &GeneralFormLp) -> Self {
        let finite = |v: &f64| v.is_finite().then_some(*v);
        InstanceFile {
            c: p.c.clone(),
            a: MatrixFile { rows: p.a.n_rows(), cols: p.a.n_cols(), entries: p.a.triplets() },
            b: p.b.clone(),
            lower: p.lower.iter().map(finite).collect(),
            upper: p.upper.iter().map(finite).collect(),
            obj_offset: p.obj_offset,
        }
    }

    pub fn to_lp(&self) -> Result<GeneralFormLp, FormatError> {
        let lp = GeneralFormLp {
            c: self.c.clone(),
            a: SparseMatrix::from_triplets(self.a.rows, self.a.cols, &self.a.entries)?,
            b: self.b.clone(),
            lower: self.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect(),
            upper: self.upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
            obj_offset: self.obj_offset,
        };
        lp.check_dims()?;
        lp.check_bounds()?;
        Ok(lp)
    }
}

pub fn read_instance(json: &[u8]) -> Result<GeneralFormLp, FormatError> {
    serde_json::from_slice::<InstanceFile>(json)?.to_lp()
}

pub fn write_instance(p: &GeneralFormLp) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_lp(p)).expect("plain data serializes")
}

pub const TRACE_HEADER: [&str; 7] = ["k", "seq", "scaled_err", "obj_term", "kkt", "active_changed", "ms"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub record: TraceRecord,
    /// Wall time since the start of the run.
    pub ms: f64,
}

/// Collects records with their wall time.
pub struct TimedTrace {
    start: Instant,
    pub rows: Vec<TraceRow>,
}

impl TimedTrace {
    pub fn new() -> Self {
        TimedTrace { start: Instant::now(), rows: Vec::new() }
    }
}

impl Default for TimedTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl TraceSink for TimedTrace {
    fn record(&mut self, rec: &TraceRecord) {
        let ms = self.start.elapsed().as_secs_f64() * 1e3;
        self.rows.push(TraceRow { record: *rec, ms });
    }
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for row in rows {
        let r = &row.record;
        let err = r.scaled_err.map(|e| e.to_string()).unwrap_or_default();
        w.write_record([
            r.k.to_string(),
            r.seq.label().to_string(),
            err,
            r.obj_term.to_string(),
            r.kkt.to_string(),
            u8::from(r.active_changed).to_string(),
            row.ms.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>, FormatError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(FormatError::Trace { line: 1, msg: "unexpected header".into() });
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: &str| FormatError::Trace { line, msg: msg.to_string() };
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(TRACE_HEADER[i]));
        let record = TraceRecord {
            k: rec[0].parse().map_err(|_| bad("k"))?,
            seq: SeqKind::from_label(&rec[1]).ok_or_else(|| bad("seq"))?,
            scaled_err: if rec[2].is_empty() { None } else { Some(num(2)?) },
            obj_term: num(3)?,
            kkt: num(4)?,
            active_changed: match &rec[5] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("active_changed")),
            },
        };
        out.push(TraceRow { record, ms: num(6)? });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub candidate: &'static str,
    pub k: u64,
    pub vector: Vec<f64>,
    pub scaled_error: f64,
    pub objective_term: f64,
}

impl CertificateReport {
    fn new(c: &Certificate) -> Self {
        CertificateReport {
            candidate: c.kind.name(),
            k: c.k,
            vector: c.vector.clone(),
            scaled_error: c.report.scaled_error,
            objective_term: c.report.objective_term,
        }
    }
}

/// What `solve` writes with `--json-out`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: &'static str,
    pub iterations: u64,
    pub eta: f64,
    pub tau: f64,
    pub kkt: f64,
    pub primal_objective: f64,
    pub other_side_confirmed: bool,
    pub last_active_change: u64,
    pub primal_certificate: Option<CertificateReport>,
    pub dual_certificate: Option<CertificateReport>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SolveReport {
    pub fn new(out: &SolveOutcome, steps: StepSizes) -> Self {
        SolveReport {
            status: out.status.name(),
            iterations: out.iterations,
            eta: steps.eta,
            tau: steps.tau,
            kkt: out.kkt,
            primal_objective: out.primal_objective,
            other_side_confirmed: out.other_side_confirmed,
            last_active_change: out.last_active_change,
            primal_certificate: out.primal_certificate.as_ref().map(CertificateReport::new),
            dual_certificate: out.dual_certificate.as_ref().map(CertificateReport::new),
            x: out.x.clone(),
            y: out.y.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_bounds_become_null() {
        let p = pdhg_core::demos::example1(0.0, 1.0);
        let text = write_instance(&p);
        assert!(text.contains("null"));
        assert_eq!(read_instance(text.as_bytes()).unwrap(), p);
    }

    #[test]
    fn crossed_bounds_are_rejected() {
        let text = r#"{"c":[1],"a":{"rows":1,"cols":1,"entries":[[0,0,1]]},"b":[0],"lower":[2],"upper":[1]}"#;
        assert!(matches!(read_instance(text.as_bytes()), Err(FormatError::Instance(_))));
    }

    #[test]
    fn empty_error_field_reads_as_none() {
        let text = "k,seq,scaled_err,obj_term,kkt,active_changed,ms\n40,avg_x,,-1,0.5,0,1.25\n";
        let rows = read_trace(text.as_bytes()).unwrap();
        assert_eq!(rows[0].record.scaled_err, None);
        assert_eq!(rows[0].record.seq.label(), "avg_x");
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(read_trace("k,seq\n1,diff\n".as_bytes()).is_err());
    }
}
