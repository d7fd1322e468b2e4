//! Output helpers: every float is written with 17 significant digits so
//! reports round-trip exactly, and every output carries a run header.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

pub const TOOL: &str = "mzkit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `v` in scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Compact JSON formatter that writes floats as `fmt_f64` does.
#[derive(Debug, Default, Clone, Copy)]
pub struct SigDigitsFormatter;

impl Formatter for SigDigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialises with `SigDigitsFormatter`; non-finite floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitsFormatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Provenance block embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunHeader {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub tolerances: serde_json::Value,
}

impl RunHeader {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: command.into(),
            config: serde_json::Value::Object(Default::default()),
            seeds: Vec::new(),
            tolerances: serde_json::Value::Object(Default::default()),
        }
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_tolerances(mut self, tolerances: serde_json::Value) -> Self {
        self.tolerances = tolerances;
        self
    }
}

/// `{"header": .., "<key>": body}` as a single JSON document.
pub fn json_document<T: Serialize>(header: &RunHeader, key: &str, body: &T) -> String {
    #[derive(Serialize)]
    struct Doc<'a, T: Serialize> {
        header: &'a RunHeader,
        #[serde(flatten)]
        body: std::collections::BTreeMap<&'a str, &'a T>,
    }
    let mut map = std::collections::BTreeMap::new();
    map.insert(key, body);
    to_json_string(&Doc { header, body: map }).expect("report serialisation cannot fail")
}

/// A CSV table preceded by `# header: {json}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: Option<&RunHeader>) -> String {
        let mut out = String::new();
        if let Some(h) = header {
            out.push_str("# header: ");
            out.push_str(to_json_string(h).expect("header serialises").trim_end());
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// A point as `x1 x2 ..` with 17 significant digits (space separated so it
/// stays a single CSV field).
pub fn fmt_point(x: &[f64]) -> String {
    x.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}
