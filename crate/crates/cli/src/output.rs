//! CSV assembly and emission. Output is built fully in memory and written
//! in one shot, so repeated runs with the same inputs produce bytewise
//! identical artifacts.

use std::io::Write;

use affine_pricer_core::Result;
use sha2::{Digest, Sha256};

pub struct Csv {
    meta: Vec<(String, String)>,
    header: String,
    rows: Vec<String>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Csv {
            meta: Vec::new(),
            header: columns.join(","),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn row(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push('#');
        for (k, v) in &self.meta {
            s.push(' ');
            s.push_str(k);
            s.push('=');
            s.push_str(v);
        }
        s.push('\n');
        s.push_str(&self.header);
        s.push('\n');
        for row in &self.rows {
            s.push_str(row);
            s.push('\n');
        }
        s
    }
}

/// Hex digest prefix identifying a model by its canonical form.
pub fn model_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Write to the given path, or stdout for "-".
pub fn emit(out: &str, content: &str) -> Result<()> {
    if out == "-" {
        std::io::stdout().write_all(content.as_bytes())?;
    } else {
        std::fs::write(out, content)?;
    }
    Ok(())
}

/// Shortest round-trip decimal form; integers keep a trailing ".0" away.
pub fn num(v: f64) -> String {
    format!("{v}")
}
