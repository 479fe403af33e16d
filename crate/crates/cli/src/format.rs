use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Twelve significant digits in scientific notation; empty when `x` is not
/// finite so that a failed sample leaves a blank CSV field.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        String::new()
    }
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Accumulates a CSV document with `\n` line endings.
pub(crate) struct Csv {
    text: String,
}

impl Csv {
    pub(crate) fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub(crate) fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub(crate) fn emit(&self, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
        match path {
            Some(p) => fs::write(p, &self.text)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
            None => Ok(out.write_all(self.text.as_bytes())?),
        }
    }
}
