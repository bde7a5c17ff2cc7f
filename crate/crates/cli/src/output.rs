use std::fmt::Write as _;

use serde::Serialize;

use crate::config::ExperimentConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round-trip float formatting: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header block shared by CSV and JSON outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: ExperimentConfig,
    /// Parameters after snapping to the grid, as `(name, value)`.
    pub snapped: Vec<(String, f64)>,
}

impl Header {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self { artifact: "rdde", version: VERSION, command: command.into(), config: config.clone(), snapped: Vec::new() }
    }

    pub fn snap(mut self, name: &str, value: f64) -> Self {
        self.snapped.push((name.into(), value));
        self
    }
}

/// A CSV table with a `#`-comment header.
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &Header, columns: &[&str]) -> Self {
        let mut text = String::new();
        writeln!(text, "# {} {}", header.artifact, header.version).unwrap();
        writeln!(text, "# command: {}", header.command).unwrap();
        writeln!(text, "# config: {}", header.config.to_json_line()).unwrap();
        for (k, v) in &header.snapped {
            writeln!(text, "# snapped {k}: {}", fmt_f64(*v)).unwrap();
        }
        writeln!(text, "{}", columns.join(",")).unwrap();
        Self { text, width: columns.len() }
    }

    /// Appends a row; each cell is either a preformatted string or a float.
    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.width);
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        writeln!(self.text, "{}", line.join(",")).unwrap();
    }

    pub fn comment(&mut self, line: &str) {
        writeln!(self.text, "# {line}").unwrap();
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

/// Pretty JSON for `{"header": …, "body": …}`, with non-finite floats as
/// `null`.
pub fn json_document(header: &Header, body: &impl Serialize) -> String {
    let doc = serde_json::json!({ "header": header, "body": body });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_layout() {
        let h = Header::new("simulate", &ExperimentConfig::default()).snap("epsilon", 0.1);
        let mut c = Csv::new(&h, &["a", "b"]);
        c.row(&[Cell::U(3), Cell::F(0.5)]);
        let text = c.finish();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# rdde "));
        assert!(lines[2].starts_with("# config: {"));
        assert_eq!(lines[3], "# snapped epsilon: 1.0000000000000001e-1");
        assert_eq!(lines[4], "a,b");
        assert_eq!(lines[5], "3,5.0000000000000000e-1");
    }
}
