//! Minimal header-indexed CSV reading with line-accurate errors.

use std::collections::HashMap;

use crate::error::{CliError, CliResult};

pub struct Row {
    pub line: u64,
    record: csv::StringRecord,
}

pub struct Table {
    pub file: String,
    columns: HashMap<String, usize>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn parse(file: &str, text: &str, required: &[&str]) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(false)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| CliError::input(file, 1, "header", e.to_string()))?
            .clone();
        let columns: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(k, h)| (h.to_ascii_lowercase(), k))
            .collect();
        for col in required {
            if !columns.contains_key(*col) {
                return Err(CliError::input(file, 1, col, "missing column"));
            }
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let record = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                CliError::input(file, line, "record", e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            rows.push(Row { line, record });
        }
        Ok(Self {
            file: file.to_string(),
            columns,
            rows,
        })
    }

    /// Trimmed field, `None` when empty or the column is absent.
    pub fn get<'a>(&self, row: &'a Row, col: &str) -> Option<&'a str> {
        self.columns
            .get(col)
            .and_then(|&k| row.record.get(k))
            .filter(|s| !s.is_empty())
    }

    pub fn text<'a>(&self, row: &'a Row, col: &str) -> CliResult<&'a str> {
        self.get(row, col)
            .ok_or_else(|| CliError::input(&self.file, row.line, col, "value required"))
    }

    pub fn number(&self, row: &Row, col: &str) -> CliResult<f64> {
        let s = self.text(row, col)?;
        let v: f64 = s
            .parse()
            .map_err(|_| CliError::input(&self.file, row.line, col, format!("not a number: {s:?}")))?;
        if !v.is_finite() {
            return Err(CliError::input(&self.file, row.line, col, format!("not finite: {s:?}")));
        }
        Ok(v)
    }

    pub fn err(&self, row: &Row, col: &str, message: impl Into<String>) -> CliError {
        CliError::input(&self.file, row.line, col, message)
    }

    pub fn core_err(&self, row: &Row, col: &str, e: chjm_core::Error) -> CliError {
        CliError::from_core(&self.file, row.line, col, e)
    }
}
