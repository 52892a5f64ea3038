//! Record output for the experiment CLI: JSON lines or CSV.
//!
//! Every record carries a kind, written first. CSV emits a header line
//! whenever the kind changes. Reals are written with 17 significant digits in
//! CSV; integers too wide for JSON numbers are written as strings.

use num_bigint::BigUint;
use serde_json::{Map, Number, Value as Json};
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    UInt(u64),
    /// Exact integer that may exceed 64 bits, kept as decimal digits.
    Big(String),
    Real(f64),
    Bool(bool),
    Text(String),
    /// Missing value: JSON `null`, empty CSV cell.
    Null,
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::UInt(v)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::UInt(v as u64)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::UInt(v as u64)
    }
}

impl From<u128> for Value {
    fn from(v: u128) -> Self {
        match u64::try_from(v) {
            Ok(v) => Value::UInt(v),
            Err(_) => Value::Big(v.to_string()),
        }
    }
}

impl From<&BigUint> for Value {
    fn from(v: &BigUint) -> Self {
        Value::Big(v.to_string())
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        match v {
            Some(v) => v.into(),
            None => Value::Null,
        }
    }
}

impl Value {
    fn to_json(&self) -> Json {
        match self {
            Value::Int(v) => Json::from(*v),
            Value::UInt(v) => Json::from(*v),
            Value::Big(s) => Json::String(s.clone()),
            Value::Real(v) => Number::from_f64(*v).map_or(Json::Null, Json::Number),
            Value::Bool(b) => Json::Bool(*b),
            Value::Text(s) => Json::String(s.clone()),
            Value::Null => Json::Null,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::UInt(v) => v.to_string(),
            Value::Big(s) | Value::Text(s) => s.clone(),
            Value::Real(v) if v.is_finite() => format!("{v:.16e}"),
            Value::Real(v) => v.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Null => String::new(),
        }
    }
}

/// One output record: a kind plus ordered fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub kind: &'static str,
    pub fields: Vec<(&'static str, Value)>,
}

impl Record {
    pub fn new(kind: &'static str) -> Self {
        Record {
            kind,
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, name: &'static str, value: impl Into<Value>) -> Self {
        self.fields.push((name, value.into()));
        self
    }

    pub fn to_json_line(&self) -> String {
        let mut map = Map::new();
        map.insert("record".into(), Json::String(self.kind.into()));
        for (k, v) in &self.fields {
            map.insert((*k).into(), v.to_json());
        }
        Json::Object(map).to_string()
    }
}

pub struct RecordWriter<W: Write> {
    format: Format,
    inner: Sink<W>,
    header: Option<(&'static str, Vec<&'static str>)>,
}

enum Sink<W: Write> {
    Json(W),
    Csv(csv::Writer<W>),
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W, format: Format) -> Self {
        let inner = match format {
            Format::Json => Sink::Json(out),
            Format::Csv => Sink::Csv(csv::WriterBuilder::new().flexible(true).from_writer(out)),
        };
        RecordWriter {
            format,
            inner,
            header: None,
        }
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn write(&mut self, record: &Record) -> io::Result<()> {
        match &mut self.inner {
            Sink::Json(w) => writeln!(w, "{}", record.to_json_line()),
            Sink::Csv(w) => {
                let names: Vec<&'static str> = record.fields.iter().map(|(k, _)| *k).collect();
                let fresh =
                    !matches!(&self.header, Some((k, n)) if *k == record.kind && *n == names);
                if fresh {
                    let mut head = vec!["record"];
                    head.extend(&names);
                    w.write_record(&head)?;
                    self.header = Some((record.kind, names));
                }
                let mut row = vec![record.kind.to_string()];
                row.extend(record.fields.iter().map(|(_, v)| v.to_csv()));
                w.write_record(&row)?;
                Ok(())
            }
        }
    }

    pub fn finish(self) -> io::Result<W> {
        match self.inner {
            Sink::Json(mut w) => {
                w.flush()?;
                Ok(w)
            }
            Sink::Csv(w) => w.into_inner().map_err(|e| e.into_error()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Record> {
        vec![
            Record::new("pell")
                .with("d", 61u64)
                .with("t", &BigUint::from(1_766_319_049u64))
                .with("eps_log", 22.0_f64.ln()),
            Record::new("pell")
                .with("d", 62u64)
                .with("t", &BigUint::from(63u64))
                .with("eps_log", 0.5),
            Record::new("summary")
                .with("rows", 2u64)
                .with("ok", true)
                .with("note", "a,b"),
        ]
    }

    #[test]
    fn json_lines_round_trip() {
        let mut w = RecordWriter::new(Vec::new(), Format::Json);
        for r in sample() {
            w.write(&r).unwrap();
        }
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        for line in text.lines() {
            let v: Json = serde_json::from_str(line).unwrap();
            assert_eq!(v.to_string(), line);
            assert!(line.starts_with("{\"record\":"));
        }
        assert!(text.contains("\"t\":\"1766319049\""));
    }

    #[test]
    fn csv_headers_and_digits() {
        let mut w = RecordWriter::new(Vec::new(), Format::Csv);
        for r in sample() {
            w.write(&r).unwrap();
        }
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "record,d,t,eps_log");
        assert_eq!(lines[2], "pell,62,63,5.0000000000000000e-1");
        assert_eq!(lines[3], "record,rows,ok,note");
        assert_eq!(lines[4], "summary,2,true,\"a,b\"");
        let digits = lines[1].rsplit(',').next().unwrap();
        let mantissa = digits.split('e').next().unwrap().replace('.', "");
        assert_eq!(mantissa.len(), 17);
    }

    #[test]
    fn non_finite_reals() {
        let r = Record::new("x").with("v", f64::NAN);
        assert_eq!(r.to_json_line(), "{\"record\":\"x\",\"v\":null}");
    }
}
