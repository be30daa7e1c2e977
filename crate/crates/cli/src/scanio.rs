//! Scan CSV output and parsing.
//!
//! Columns: `v1,v2,in_R,in_Sj,in_Tj` (plus `elapsed_us` when timing is
//! requested). Flags are `1`/`0`, empty when the set was not evaluated.
//! Coordinates are written in shortest round-trip form, so re-reading a file
//! recovers the exact grid values.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use spinmoment::scan::ScanResult;

pub const HEADER: [&str; 5] = ["v1", "v2", "in_R", "in_Sj", "in_Tj"];

/// One parsed CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub v1: f64,
    pub v2: f64,
    pub in_r: Option<bool>,
    pub in_s: Option<bool>,
    pub in_t: Option<bool>,
}

fn flag(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

fn parse_flag(s: &str, line: usize, col: &str) -> Result<Option<bool>> {
    match s.trim() {
        "1" => Ok(Some(true)),
        "0" => Ok(Some(false)),
        "" => Ok(None),
        other => bail!("line {line}, column {col}: expected 1, 0 or empty, found '{other}'"),
    }
}

pub fn write_csv<W: Write>(result: &ScanResult, out: W, timing: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<&str> = HEADER.to_vec();
    if timing {
        header.push("elapsed_us");
    }
    w.write_record(&header)?;
    for p in &result.points {
        let mut rec = vec![
            p.v1.to_string(),
            p.v2.to_string(),
            flag(p.in_r).to_string(),
            flag(p.in_s).to_string(),
            flag(p.in_t).to_string(),
        ];
        if timing {
            rec.push(p.elapsed.as_micros().to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ScanRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 5 || header[..5] != HEADER {
        bail!("unexpected CSV header {header:?}");
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .parse()
                .with_context(|| format!("line {line}, column {}", HEADER[i]))
        };
        rows.push(ScanRow {
            v1: num(0)?,
            v2: num(1)?,
            in_r: parse_flag(rec.get(2).unwrap_or(""), line, HEADER[2])?,
            in_s: parse_flag(rec.get(3).unwrap_or(""), line, HEADER[3])?,
            in_t: parse_flag(rec.get(4).unwrap_or(""), line, HEADER[4])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use spinmoment::scan::{scan, ScanSpec, SetSelection};
    use spinmoment::SpinNumber;

    #[test]
    fn write_then_read() {
        let mut spec = ScanSpec::new(SpinNumber::new(4).unwrap(), [0.1, 0.2, 0.3], 9);
        spec.sets = SetSelection::parse("R,T").unwrap();
        let result = scan(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&result, &mut buf, true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("v1,v2,in_R,in_Sj,in_Tj,elapsed_us\n"));
        assert!(!text.contains('\r'));
        let rows = read_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 81);
        for (row, p) in rows.iter().zip(&result.points) {
            assert_eq!((row.v1, row.v2), (p.v1, p.v2));
            assert_eq!((row.in_r, row.in_s, row.in_t), (p.in_r, None, p.in_t));
        }
    }

    #[test]
    fn rejects_bad_flags() {
        let text = "v1,v2,in_R,in_Sj,in_Tj\n0.1,0.2,yes,,\n";
        let e = read_csv(text.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
    }
}
