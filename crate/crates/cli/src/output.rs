//! CSV emission. Numbers use 17 significant digits in scientific notation,
//! which round-trips every `f64` and never depends on the locale.

use std::fmt::Write as _;

use marrm_core::Diagnostic;

pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// `# key=value` lines.
pub fn comment_header(pairs: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "# {k}={v}");
    }
    s
}

/// Short codes for the `notes` column, joined by `|`.
pub fn notes(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| match d {
            Diagnostic::AcceptabilityArbitrage { .. } => "arbitrage",
            Diagnostic::BoxBoundary { .. } => "box_boundary",
            Diagnostic::EntropicDivergence { .. } => "entropic_sample_artifact",
            Diagnostic::NotConverged { .. } => "not_converged",
        })
        .collect::<Vec<_>>()
        .join("|")
}

/// Header row plus data rows.
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, header: &str) -> String {
        let mut s = header.to_string();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// `pi_1, .., pi_d` with an optional prefix.
pub fn pi_columns(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}pi_{i}")).collect()
}
