//! Output tables: CSV and JSON writers.

use serde_json::{json, Value};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    /// Shortest text that parses back to the same value.
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "NaN".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) => format!("{x:?}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => json!(self.csv()),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Row index and message of every row with a non-empty `error` cell.
    pub fn errors(&self) -> Vec<(usize, String)> {
        let Some(at) = self.columns.iter().position(|c| c == "error") else {
            return Vec::new();
        };
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(k, r)| match &r[at] {
                Cell::Text(s) if !s.is_empty() => Some((k, s.clone())),
                _ => None,
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(format!("csv: {e}")))
    }

    pub fn to_json(&self) -> Result<Vec<u8>, CliError> {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let mut out = serde_json::to_vec_pretty(&json!({ "columns": self.columns, "rows": rows }))
            .map_err(|e| CliError::Io(format!("json: {e}")))?;
        out.push(b'\n');
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(columns: &[&str]) -> Table {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    #[test]
    fn csv_floats_round_trip() {
        let xs = [0.1 + 0.2, 1e-300, 6.02214076e23, -0.0, 1.0 / 3.0];
        let mut t = table(&["x", "flag"]);
        for x in xs {
            t.rows.push(vec![x.into(), (x > 0.0).into()]);
        }
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<f64> = r.records().map(|rec| rec.unwrap()[0].parse().unwrap()).collect();
        assert_eq!(back.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert!(text.starts_with("x,flag\r\n"));
    }

    #[test]
    fn text_cells_are_quoted_when_needed() {
        let mut t = table(&["error"]);
        t.rows.push(vec![Cell::Text("bad, \"worse\"".into())]);
        t.rows.push(vec![Cell::Empty]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "error\r\n\"bad, \"\"worse\"\"\"\r\n\"\"\r\n");
        assert_eq!(t.errors(), vec![(0, "bad, \"worse\"".to_string())]);
    }

    #[test]
    fn json_keeps_column_order() {
        let mut t = table(&["b", "a"]);
        t.rows.push(vec![1.5.into(), Cell::Empty]);
        let v: Value = serde_json::from_slice(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["columns"], json!(["b", "a"]));
        assert_eq!(v["rows"][0], json!([1.5, null]));
    }
}
