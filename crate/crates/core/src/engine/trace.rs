use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Above this dimension the per-coordinate `x` and `s` columns are omitted.
pub const MAX_STATE_COLUMNS_DIM: usize = 10;

/// One step of a trajectory. `u` is the input applied at time `t`, i.e. the
/// one that produces record `t + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub u: f64,
    pub f_gap: f64,
    pub grad_inf: f64,
    pub resid_inf: f64,
}

/// Streams trace records as CSV: `t,u,f_gap,grad_inf,resid_inf` followed by
/// `x0..` and `s0..` when the dimension is at most 10. Floats are written in
/// scientific notation with 17 significant digits so they round-trip exactly.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
    state_columns: bool,
}

impl<W: Write> TraceWriter<W> {
    /// Writes `preamble` as `# `-prefixed comment lines, then the header.
    pub fn new(mut out: W, dim: usize, preamble: Option<&str>) -> Result<Self> {
        if let Some(text) = preamble {
            for line in text.lines() {
                writeln!(out, "# {line}")?;
            }
        }
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let state_columns = dim <= MAX_STATE_COLUMNS_DIM;
        let mut header: Vec<String> = ["t", "u", "f_gap", "grad_inf", "resid_inf"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if state_columns {
            header.extend((0..dim).map(|i| format!("x{i}")));
            header.extend((0..dim).map(|i| format!("s{i}")));
        }
        inner.write_record(&header)?;
        Ok(Self { inner, state_columns })
    }

    pub fn write(&mut self, rec: &TraceRecord) -> Result<()> {
        let mut row = vec![
            rec.t.to_string(),
            fmt_f64(rec.u),
            fmt_f64(rec.f_gap),
            fmt_f64(rec.grad_inf),
            fmt_f64(rec.resid_inf),
        ];
        if self.state_columns {
            row.extend(rec.x.iter().chain(&rec.s).map(|v| fmt_f64(*v)));
        }
        self.inner.write_record(&row)?;
        Ok(())
    }

    pub fn finish(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| crate::error::Error::Io(e.error().to_string()))
    }
}

pub fn write_trace_csv<W: Write>(out: W, records: &[TraceRecord], preamble: Option<&str>) -> Result<W> {
    let dim = records.first().map_or(0, |r| r.x.len());
    let mut writer = TraceWriter::new(out, dim, preamble)?;
    for rec in records {
        writer.write(rec)?;
    }
    writer.finish()
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
