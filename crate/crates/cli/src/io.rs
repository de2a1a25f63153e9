//! Daily count series as `date,cases,deaths` CSV.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use epiassim_core::observation::EpidemicSeries;

use crate::error::{CliError, Result};

pub const HEADER: [&str; 3] = ["date", "cases", "deaths"];

pub fn load_series(path: &Path) -> Result<EpidemicSeries> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_series(file, path)
}

/// Parses CSV from any reader; `path` only labels errors.
pub fn parse_series<R: Read>(reader: R, path: &Path) -> Result<EpidemicSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(parse_err(1, format!("expected header `{}`", HEADER.join(","))));
    }

    let mut start: Option<NaiveDate> = None;
    let mut prev: Option<NaiveDate> = None;
    let mut cases = Vec::new();
    let mut deaths = Vec::new();
    let mut missing = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date {:?}: {e}", &rec[0])))?;
        let count = |i: usize| {
            rec[i]
                .trim()
                .parse::<u64>()
                .map_err(|_| parse_err(line, format!("{} must be a non-negative integer, got {:?}", HEADER[i], &rec[i])))
        };
        let (c, d) = (count(1)?, count(2)?);
        if let Some(p) = prev {
            if date <= p {
                return Err(parse_err(line, format!("date {date} does not follow {p}")));
            }
            missing.extend(p.iter_days().skip(1).take_while(|x| *x < date));
        } else {
            start = Some(date);
        }
        prev = Some(date);
        cases.push(c);
        deaths.push(d);
    }
    if !missing.is_empty() {
        return Err(CliError::DateGap {
            path: path.to_path_buf(),
            missing,
        });
    }
    let start = start.ok_or_else(|| parse_err(1, "no data rows".into()))?;
    Ok(EpidemicSeries::new(start, cases, deaths)?)
}

pub fn write_series(series: &EpidemicSeries, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_series_to(series, file).map_err(|e| CliError::io(path, e))
}

pub fn write_series_to<W: Write>(series: &EpidemicSeries, out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for day in 0..series.len() {
        w.write_record([
            series.date(day).to_string(),
            series.cases()[day].to_string(),
            series.deaths()[day].to_string(),
        ])?;
    }
    w.flush()
}
