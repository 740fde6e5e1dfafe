//! Flat CSV/JSON reports with the columns `method,system,param,n,value,diag`.

use serde::{Deserialize, Serialize};

use crate::entropy::EntropyReport;
use crate::error::{Error, Result};
use crate::stats::{OrbitCount, TypicalityResult};

pub const CSV_HEADER: &str = "method,system,param,n,value,diag";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub method: String,
    pub system: String,
    pub param: String,
    #[serde(deserialize_with = "csv::invalid_option")]
    pub n: Option<usize>,
    pub value: f64,
    pub diag: String,
}

impl Row {
    pub fn new(method: &str, system: &str, param: &str, n: Option<usize>, value: f64, diag: impl Into<String>) -> Self {
        Row {
            method: method.to_string(),
            system: system.to_string(),
            param: param.to_string(),
            n,
            value,
            diag: diag.into(),
        }
    }

    /// `method/system/param`, followed by `/n` when the row has one.
    pub fn key(&self) -> String {
        match self.n {
            Some(n) => format!("{}/{}/{}/{n}", self.method, self.system, self.param),
            None => format!("{}/{}/{}", self.method, self.system, self.param),
        }
    }

    /// Headline estimate of a method.
    pub fn is_rate(&self) -> bool {
        self.param == "rate" || self.param.ends_with(":rate")
    }
}

/// Report rows with `key=value` metadata written on a leading `#` line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: Vec<(String, String)>,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = Row>) {
        self.rows.extend(rows);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        if !self.meta.is_empty() {
            let fields: Vec<String> = self.meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!("# {}\n", fields.join(" ")));
        }
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
        for r in &self.rows {
            w.serialize(r).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Report> {
        let mut meta = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(m) = line.strip_prefix('#') {
                for field in m.split_whitespace() {
                    if let Some((k, v)) = field.split_once('=') {
                        meta.push((k.to_string(), v.to_string()));
                    }
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let header = rd.headers().map_err(csv_error)?.iter().collect::<Vec<_>>().join(",");
        if !body.trim().is_empty() && header != CSV_HEADER {
            return Err(Error::Decode(format!("unexpected header {header:?}")));
        }
        let rows = rd.deserialize().collect::<std::result::Result<Vec<Row>, _>>().map_err(csv_error)?;
        Ok(Report { meta, rows })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Domain(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Decode(e.to_string())
}

fn tagged(prefix: &str, param: &str) -> String {
    if prefix.is_empty() {
        param.to_string()
    } else {
        format!("{prefix}:{param}")
    }
}

/// Samples, trend points, `rate` and `rate_lower` of an estimator report.
pub fn entropy_rows(r: &EntropyReport) -> Vec<Row> {
    let mut rows = Vec::new();
    for s in &r.samples {
        let diag = if s.error > 0.0 { format!("err={}", s.error) } else { String::new() };
        rows.push(Row::new(&r.method, &r.system, &tagged(&r.param, &s.param), Some(s.n), s.value, diag));
    }
    for t in &r.trend {
        rows.push(Row::new(&r.method, &r.system, &tagged(&r.param, &t.param), None, t.value, ""));
    }
    let n = r.samples.iter().map(|s| s.n).max();
    rows.push(Row::new(&r.method, &r.system, &tagged(&r.param, "rate"), n, r.rate, r.diagnostics.summary()));
    rows.push(Row::new(&r.method, &r.system, &tagged(&r.param, "rate_lower"), n, r.rate_lower, ""));
    rows
}

/// One row per orbit count: the certified average, with the undecided and
/// outside counts as diagnostics.
pub fn birkhoff_row(system: &str, target: &str, c: &OrbitCount) -> Row {
    let diag = format!("inside={};outside={};undecided={}", c.inside, c.outside, c.undecided);
    Row::new("birkhoff", system, target, Some(c.n), c.average().to_f64(), diag)
}

/// Per-member residuals and the maximum with the verdict.
pub fn typicality_rows(system: &str, t: &TypicalityResult) -> Vec<Row> {
    let mut rows: Vec<Row> = t
        .residuals
        .iter()
        .map(|m| {
            let diag = format!("freq={};mass={};undecided={}", m.frequency, m.mass, m.undecided);
            Row::new("typicality", system, &m.label, Some(t.n), m.residual, diag)
        })
        .collect();
    let diag = format!("verdict={:?};tol={}", t.verdict, t.tol);
    rows.push(Row::new("typicality", system, "max_residual", Some(t.n), t.max_residual, diag));
    rows
}

/// Recurrence bounds at each `n` of the grid, read off a running-minimum trace.
pub fn recurrence_rows(system: &str, trace: &[crate::numerics::Rational], ns: &[usize]) -> Vec<Row> {
    ns.iter()
        .filter(|&&n| n >= 1 && n <= trace.len())
        .map(|&n| Row::new("recurrence", system, "min_dist", Some(n), trace[n - 1].to_f64(), ""))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new().with_meta("config_sha256", "ab12").with_meta("seed", 7);
        r.extend([
            Row::new("block", "doubling", "binary:rate", Some(16), 1.0, "oracle=exact"),
            Row::new("ksym", "rotation", "a,b", None, 0.25, "truncated_at=3;skipped=2"),
        ]);
        r
    }

    #[test]
    fn csv_round_trip() {
        let r = sample();
        let text = r.to_csv().unwrap();
        assert!(text.starts_with("# config_sha256=ab12 seed=7\nmethod,system,param,n,value,diag\n"));
        assert!(text.contains("block,doubling,binary:rate,16,1.0,oracle=exact\n"));
        assert!(text.contains("\"a,b\",,0.25,"));
        let back = Report::from_csv(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.meta("seed"), Some("7"));
        assert!(back.rows[0].is_rate() && !back.rows[1].is_rate());
        assert_eq!(back.rows[1].key(), "ksym/rotation/a,b");
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(matches!(Report::from_csv("a,b\n1,2\n"), Err(Error::Decode(_))));
        assert_eq!(Report::from_csv("").unwrap().rows, vec![]);
    }

    #[test]
    fn json_lists_rows() {
        let j: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        assert_eq!(j["rows"].as_array().unwrap().len(), 2);
        assert_eq!(j["rows"][0]["n"], 16);
    }
}
