use std::fmt;
use std::str::FromStr;

use super::svg::emit_svg;
use super::SweepError;

pub const STEADY_COLUMNS: [&str; 7] = [
    "sweep_value",
    "series_id",
    "q_l_forward",
    "q_l_reverse",
    "q_r_forward",
    "rectification",
    "omega_l_effective",
];

pub const TIME_COLUMNS: [&str; 6] = ["time", "series_id", "q_l", "q_r", "max_coherence", "energy"];

/// A rectangular table of finite values with `key: value` provenance lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new(header: Vec<(String, String)>, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, SweepError> {
        if let Some((k, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != columns.len()) {
            return Err(SweepError::Table(format!(
                "row {k} has {} entries for {} columns",
                r.len(),
                columns.len()
            )));
        }
        for (k, r) in rows.iter().enumerate() {
            if let Some(v) = r.iter().find(|v| !v.is_finite()) {
                return Err(SweepError::Table(format!("row {k} holds non-finite value {v}")));
            }
        }
        if let Some((k, _)) = header.iter().find(|(k, _)| k.contains(':') || k.contains('\n')) {
            return Err(SweepError::Table(format!("bad header key '{k}'")));
        }
        Ok(ResultTable { header, columns, rows })
    }

    /// First header value under `key`.
    pub fn header_value<'a>(&'a self, key: &'a str) -> Option<&'a str> {
        self.header_values(key).next()
    }

    pub fn header_values<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.header.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Rows whose `series_id` equals `id`.
    pub fn series_rows(&self, id: usize) -> impl Iterator<Item = &Vec<f64>> + '_ {
        self.rows.iter().filter(move |r| r.get(1) == Some(&(id as f64)))
    }

    /// `(id, label)` pairs from the header.
    pub fn series_labels(&self) -> Vec<(usize, String)> {
        self.header_values("series")
            .filter_map(|v| {
                let (id, label) = v.split_once(' ').unwrap_or((v, ""));
                Some((id.parse().ok()?, label.to_string()))
            })
            .collect()
    }

    /// `(series id, x)` zero-crossing markers from the header.
    pub fn markers(&self) -> Vec<(usize, f64)> {
        self.header_values("marker")
            .filter_map(|v| {
                let (id, x) = v.split_once(' ')?;
                Some((id.parse().ok()?, x.parse().ok()?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(SweepError::UnsupportedFormat(other.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Svg => "svg",
        })
    }
}

pub fn emit(table: &ResultTable, format: Format) -> Result<Vec<u8>, SweepError> {
    if table.rows.is_empty() {
        return Err(SweepError::EmptyTable);
    }
    match format {
        Format::Csv => emit_csv(table),
        Format::Svg => Ok(emit_svg(table)?.into_bytes()),
    }
}

fn emit_csv(table: &ResultTable) -> Result<Vec<u8>, SweepError> {
    let mut out = Vec::new();
    for (k, v) in &table.header {
        out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| SweepError::Table(e.to_string());
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        // 17 significant digits round-trip every f64.
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(io)?;
    }
    w.into_inner().map_err(|e| SweepError::Table(e.to_string()))
}

/// Inverse of the CSV emitter.
pub fn parse_csv(text: &str) -> Result<ResultTable, SweepError> {
    let mut header = Vec::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix("# ") else { break };
        let rest = rest.strip_suffix('\n').unwrap_or(rest);
        let (k, v) = rest
            .split_once(": ")
            .or_else(|| rest.strip_suffix(':').map(|k| (k, "")))
            .ok_or_else(|| SweepError::Table(format!("bad header line '{rest}'")))?;
        header.push((k.to_string(), v.to_string()));
        body_start += line.len();
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(&text.as_bytes()[body_start..]);
    let columns = reader
        .headers()
        .map_err(|e| SweepError::Table(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SweepError::Table(e.to_string()))?;
        let row = record
            .iter()
            .map(|x| x.parse::<f64>().map_err(|e| SweepError::Table(format!("'{x}': {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    ResultTable::new(header, columns, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ResultTable {
        ResultTable::new(
            vec![("preset".into(), "none".into()), ("config".into(), "".into())],
            vec!["a".into(), "series_id".into()],
            vec![vec![0.1, 0.0], vec![1.0 / 3.0, 0.0], vec![-2.5e-300, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn csv_has_header_and_rows() {
        let text = String::from_utf8(emit(&table(), Format::Csv).unwrap()).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 4);
        assert_eq!(data[0], "a,series_id");
    }

    #[test]
    fn csv_round_trips_bit_exactly() {
        let t = table();
        let back = parse_csv(std::str::from_utf8(&emit(&t, Format::Csv).unwrap()).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn empty_and_unknown_formats_are_errors() {
        let t = ResultTable::new(vec![], vec!["a".into()], vec![]).unwrap();
        assert_eq!(emit(&t, Format::Csv), Err(SweepError::EmptyTable));
        assert!(matches!("png".parse::<Format>(), Err(SweepError::UnsupportedFormat(_))));
    }

    #[test]
    fn rejects_ragged_or_nonfinite_rows() {
        assert!(ResultTable::new(vec![], vec!["a".into()], vec![vec![1.0, 2.0]]).is_err());
        assert!(ResultTable::new(vec![], vec!["a".into()], vec![vec![f64::NAN]]).is_err());
    }
}
