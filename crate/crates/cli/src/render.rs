//! One document rendered as an aligned table, CSV or JSON.

use crate::Format;
use equisum_core::entropy::fmt_sig;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

/// Floats rounded to 16 significant digits; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        let r: f64 = fmt_sig(x).parse().unwrap();
        json!(r)
    } else {
        Value::String(format!("{x}"))
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn fnum(x: f64) -> String {
    fmt_sig(x)
}

/// JSON number when it fits in u64, decimal string otherwise.
pub fn big(x: &BigUint) -> Value {
    match x.to_u64() {
        Some(v) => json!(v),
        None => Value::String(x.to_string()),
    }
}

pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut w: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            w[i] = w[i].max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{:<width$}", c, width = w[i])).collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    for r in rows {
        out += &line(r.iter().map(|s| s.as_str()).collect());
    }
    out
}

pub fn kv_table(pairs: &[(&str, String)]) -> String {
    let w = pairs.iter().map(|p| p.0.len()).max().unwrap_or(0);
    pairs.iter().map(|(k, v)| format!("{:<w$}  {}\n", k, v, w = w)).collect()
}

#[derive(Debug, Clone)]
pub struct Output {
    pub json: Value,
    pub table: String,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
    pub default_format: Format,
}

impl Output {
    pub fn new(schema: &str, mut json: Value, table: String) -> Output {
        if let Value::Object(m) = &mut json {
            let mut n = serde_json::Map::new();
            n.insert("schema".into(), Value::String(schema.into()));
            n.extend(std::mem::take(m));
            *m = n;
        }
        Output { json, table, csv_header: Vec::new(), csv_rows: Vec::new(), default_format: Format::Table }
    }

    pub fn with_csv(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Output {
        self.csv_header = header.iter().map(|s| s.to_string()).collect();
        self.csv_rows = rows;
        self
    }

    pub fn csv_text(&self) -> String {
        let mut s = self.csv_header.join(",") + "\n";
        for r in &self.csv_rows {
            s += &r.join(",");
            s.push('\n');
        }
        s
    }

    pub fn render(&self, f: Format) -> String {
        match f {
            Format::Json => serde_json::to_string_pretty(&self.json).unwrap() + "\n",
            Format::Table => self.table.clone(),
            Format::Csv => self.csv_text(),
        }
    }
}
