//! CSV and JSON emission.

use serde::Serialize;

/// 17 significant digits; negative zero prints as zero.
pub fn num(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Num(f64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => num(*x),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x + 0.0)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let records: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                self.header
                    .iter()
                    .zip(row)
                    .map(|(k, v)| {
                        (
                            k.to_string(),
                            serde_json::to_value(v).unwrap_or(serde_json::Value::Null),
                        )
                    })
                    .collect()
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&records).unwrap_or_default();
        s.push('\n');
        s
    }
}

/// Flags joined with `;`, or `ok`.
pub fn flags(list: &[String]) -> Cell {
    if list.is_empty() {
        "ok".into()
    } else {
        list.join(";").into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.5), "5.0000000000000000e-1");
        assert_eq!(num(-0.0), "0.0000000000000000e0");
        assert_eq!(num(-1.25), "-1.2500000000000000e0");
    }

    #[test]
    fn csv_rows_use_lf() {
        let t = Table {
            header: &["family", "x", "ok"],
            rows: vec![vec!["unc".into(), 1.0.into(), true.into()]],
        };
        assert_eq!(t.to_csv(), "family,x,ok\nunc,1.0000000000000000e0,true\n");
        assert!(t.to_json().contains("\"family\": \"unc\""));
    }
}
