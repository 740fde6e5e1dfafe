//! Report rows against a table of reference values.

use effdyn::report::Report;

/// A reference value; `tol` overrides the command-line tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub key: String,
    pub value: f64,
    pub tol: Option<f64>,
}

/// Reads `key,value[,tol]` lines; `#` comments and a leading `key,...`
/// header are skipped.
pub fn parse_oracle(text: &str) -> anyhow::Result<Vec<OracleRow>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if i == 0 && rec.get(0) == Some("key") {
            continue;
        }
        if rec.len() < 2 || rec.len() > 3 {
            anyhow::bail!("oracle line {}: expected key,value[,tol]", i + 1);
        }
        let value = rec[1].parse().map_err(|_| anyhow::anyhow!("oracle line {}: bad value {:?}", i + 1, &rec[1]))?;
        let tol = match rec.get(2) {
            Some(t) if !t.is_empty() => {
                Some(t.parse().map_err(|_| anyhow::anyhow!("oracle line {}: bad tolerance {t:?}", i + 1))?)
            }
            _ => None,
        };
        out.push(OracleRow { key: rec[0].to_string(), value, tol });
    }
    if out.is_empty() {
        anyhow::bail!("oracle table is empty");
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub key: String,
    pub expected: f64,
    /// `None` when no report row matches the key.
    pub actual: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

/// A key matches a row's full key (`method/system/param[/n]`), or, on rate
/// rows, the row's system name. Every matching row must lie within `tol`.
pub fn compare(report: &Report, oracle: &[OracleRow], tol: f64) -> Vec<Comparison> {
    let mut out = Vec::new();
    for o in oracle {
        let tol = o.tol.unwrap_or(tol);
        let matches: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.key() == o.key || (r.is_rate() && r.system == o.key))
            .map(|r| r.value)
            .collect();
        if matches.is_empty() {
            out.push(Comparison { key: o.key.clone(), expected: o.value, actual: None, tol, pass: false });
        }
        for v in matches {
            let pass = (v - o.value).abs() <= tol;
            out.push(Comparison { key: o.key.clone(), expected: o.value, actual: Some(v), tol, pass });
        }
    }
    out
}

pub fn render(rows: &[Comparison]) -> String {
    let mut s = String::from("key,expected,actual,tol,verdict\n");
    for c in rows {
        let (actual, verdict) = match c.actual {
            Some(v) => (v.to_string(), if c.pass { "pass" } else { "FAIL" }),
            None => (String::new(), "FAIL MissingKey"),
        };
        s.push_str(&format!("{},{},{actual},{},{verdict}\n", c.key, c.expected, c.tol));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use effdyn::report::Row;

    fn report() -> Report {
        let mut r = Report::new();
        r.extend([
            Row::new("h1", "doubling", "spanning:rate", Some(12), 1.0, ""),
            Row::new("h1", "shift3", "spanning:rate", Some(8), 1.585, ""),
            Row::new("h1", "rotation", "spanning:rate", Some(12), 0.0, ""),
            Row::new("h1", "rotation", "spanning:p=2", Some(12), 3.0, ""),
        ]);
        r
    }

    fn oracle() -> Vec<OracleRow> {
        parse_oracle("key,value,tol\ndoubling,1.0,0.1\nshift3,1.585\n# note\nrotation,0.0,0.05\n").unwrap()
    }

    #[test]
    fn matches_by_system_and_key() {
        let c = compare(&report(), &oracle(), 0.05);
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|r| r.pass));
        assert_eq!(c[0].tol, 0.1);
        let exact = vec![OracleRow { key: "h1/rotation/spanning:p=2/12".into(), value: 3.0, tol: None }];
        assert!(compare(&report(), &exact, 0.0)[0].pass);
    }

    #[test]
    fn perturbed_rows_fail() {
        let mut r = report();
        r.rows[0].value += 0.5;
        let c = compare(&r, &oracle(), 0.05);
        assert!(!c[0].pass && c[1].pass);
        assert!(render(&c).contains("doubling,1,1.5,0.1,FAIL"));
    }

    #[test]
    fn empty_report_misses_keys() {
        let c = compare(&Report::new(), &oracle(), 0.05);
        assert!(c.iter().all(|r| r.actual.is_none() && !r.pass));
        assert!(render(&c).contains("MissingKey"));
    }

    #[test]
    fn oracle_errors() {
        assert!(parse_oracle("").is_err());
        assert!(parse_oracle("a,notanumber\n").is_err());
        assert!(parse_oracle("a,1,2,3\n").is_err());
    }
}
