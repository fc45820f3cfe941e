//! File formats: comma-separated datasets with a header row, newline-delimited
//! JSON streams, JSON reports and the flat pairs table.
//!
//! Dataset CSVs use the header `f0,...,f{d-1},t` where the optional `t`
//! column holds one-based time bins. Arbitrary feature names are accepted on
//! input; columns listed in [`CsvOptions::ignore`] are dropped.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pipeline::ExplanationReport;
use crate::synth::GroundTruth;
use crate::types::{Dataset, FeatureVector, TimeBin, TimedSample};

pub const TIME_COLUMN: &str = "t";

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Column names to drop before parsing.
    pub ignore: Vec<String>,
}

/// Feature rows read from a CSV, with optional time bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureVector>,
    pub bins: Option<Vec<TimeBin>>,
}

impl Table {
    pub fn into_dataset(self) -> Result<Dataset> {
        let bins = self
            .bins
            .ok_or_else(|| Error::validation("input has no time column 't'"))?;
        let samples = self
            .rows
            .into_iter()
            .zip(bins)
            .map(|(x, t)| TimedSample::new(x, t))
            .collect();
        Dataset::from_samples(samples)
    }
}

fn ingest(row: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        row,
        message: message.into(),
    }
}

/// Parses CSV text. Row numbers in errors are one-based data rows (the
/// header is row 0).
pub fn read_table<R: Read>(reader: R, opts: &CsvOptions) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut feature_cols = Vec::new();
    let mut names = Vec::new();
    let mut time_col = None;
    for (c, h) in headers.iter().enumerate() {
        if opts.ignore.iter().any(|i| i == h) {
            continue;
        }
        if h == TIME_COLUMN {
            time_col = Some(c);
        } else {
            feature_cols.push(c);
            names.push(h.to_string());
        }
    }
    if feature_cols.is_empty() {
        return Err(ingest(0, "no feature columns"));
    }
    let mut rows = Vec::new();
    let mut bins = time_col.map(|_| Vec::new());
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| ingest(row, e.to_string()))?;
        let mut x = Vec::with_capacity(feature_cols.len());
        for (&c, name) in feature_cols.iter().zip(&names) {
            let field = record.get(c).ok_or_else(|| ingest(row, format!("missing column '{name}'")))?;
            let v: f64 = field
                .parse()
                .map_err(|_| ingest(row, format!("column '{name}': cannot parse '{field}' as a number")))?;
            x.push(v);
        }
        rows.push(FeatureVector::new(x).map_err(|e| ingest(row, e.to_string()))?);
        if let (Some(c), Some(bins)) = (time_col, bins.as_mut()) {
            let field = record.get(c).unwrap_or("");
            let t: usize = field
                .parse()
                .map_err(|_| ingest(row, format!("cannot parse time bin '{field}'")))?;
            bins.push(TimeBin::new(t).map_err(|e| ingest(row, e.to_string()))?);
        }
    }
    if rows.is_empty() {
        return Err(ingest(0, "no data rows"));
    }
    Ok(Table {
        feature_names: names,
        rows,
        bins,
    })
}

pub fn read_table_file(path: &Path, opts: &CsvOptions) -> Result<Table> {
    read_table(BufReader::new(File::open(path)?), opts)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonRow {
    Plain(Vec<f64>),
    Object { x: Vec<f64> },
}

/// One sample per line, either `[1.0, 2.0]` or `{"x": [1.0, 2.0]}`. Blank
/// lines are skipped.
pub fn read_ndjson<R: BufRead>(reader: R) -> Result<Vec<FeatureVector>> {
    let mut out = Vec::new();
    for (r, line) in reader.lines().enumerate() {
        let row = r + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonRow =
            serde_json::from_str(&line).map_err(|e| ingest(row, e.to_string()))?;
        let x = match parsed {
            JsonRow::Plain(x) | JsonRow::Object { x } => x,
        };
        out.push(FeatureVector::new(x).map_err(|e| ingest(row, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(ingest(0, "no data rows"));
    }
    Ok(out)
}

/// Dispatches on the extension: `.ndjson`/`.jsonl` or CSV otherwise.
pub fn read_stream_file(path: &Path, opts: &CsvOptions) -> Result<Table> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if matches!(ext, "ndjson" | "jsonl") {
        let rows = read_ndjson(BufReader::new(File::open(path)?))?;
        let dim = rows[0].dim();
        Ok(Table {
            feature_names: crate::pipeline::default_feature_names(dim),
            rows,
            bins: None,
        })
    } else {
        read_table_file(path, opts)
    }
}

pub fn write_dataset<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..data.dim()).map(|f| format!("f{f}")).collect();
    header.push(TIME_COLUMN.into());
    w.write_record(&header)?;
    for s in data.samples() {
        let mut rec: Vec<String> = s.x.iter().map(|v| v.to_string()).collect();
        rec.push(s.t.index().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_truth<W: Write>(writer: W, truth: &GroundTruth) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match &truth.c_true {
        Some(c) => {
            w.write_record(["index", "i_true", "c_true"])?;
            for (k, (i, c)) in truth.i_true.iter().zip(c).enumerate() {
                w.write_record([k.to_string(), i.to_string(), c.to_string()])?;
            }
        }
        None => {
            w.write_record(["index", "i_true"])?;
            for (k, i) in truth.i_true.iter().enumerate() {
                w.write_record([k.to_string(), i.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_json<W: Write>(mut writer: W, report: &ExplanationReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Flat table with one row per characteristic sample and one per associated
/// sample. Pair ids number (characteristic, bin) combinations; the
/// characteristic row of a pair repeats for every bin.
pub fn write_pairs_csv<W: Write>(writer: W, report: &ExplanationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["pair_id".to_string(), "bin".into(), "role".into(), "position".into()];
    header.extend(report.feature_names.iter().cloned());
    header.extend(["i_value".to_string(), "cost".into()]);
    w.write_record(&header)?;
    let mut pair_id = 0usize;
    for assoc in &report.associations {
        for pair in &assoc.pairs {
            let c = &report.characteristic[pair.characteristic];
            for (role, s, cost) in [
                ("characteristic", c, 0.0),
                ("associated", &pair.associated, pair.cost),
            ] {
                let mut rec = vec![
                    pair_id.to_string(),
                    s.bin.index().to_string(),
                    role.to_string(),
                    s.position.to_string(),
                ];
                rec.extend(s.x.iter().map(|v| v.to_string()));
                rec.push(s.i_value.to_string());
                rec.push(cost.to_string());
                w.write_record(&rec)?;
            }
            pair_id += 1;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes via a sibling temporary file that is renamed into place, so a
/// failure leaves no partial output.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<File>) -> Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::validation(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.partial", name.to_string_lossy()));
    let result = (|| {
        let mut w = std::io::BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.flush()?;
        drop(w);
        std::fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{sample_gmm, GmmSpec};

    #[test]
    fn dataset_round_trip() {
        let data = sample_gmm(&GmmSpec::new(3, 2, 2, 1), 50, 2).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f0,f1,f2,t\n"));
        let back = read_table(&buf[..], &CsvOptions::default()).unwrap().into_dataset().unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn bad_number_names_row() {
        let text = "a,b\n1,2\n3,x\n";
        match read_table(text.as_bytes(), &CsvOptions::default()) {
            Err(Error::Ingest { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ignored_columns_and_missing_time() {
        let text = "date,price,class\n1,2.5,UP\n2,3.5,DOWN\n";
        let opts = CsvOptions {
            ignore: vec!["class".into()],
        };
        let t = read_table(text.as_bytes(), &opts).unwrap();
        assert_eq!(t.feature_names, vec!["date", "price"]);
        assert_eq!(t.rows[1].as_slice(), &[2.0, 3.5]);
        assert!(t.bins.is_none());
        assert!(t.into_dataset().is_err());
    }

    #[test]
    fn ndjson_both_shapes() {
        let text = "[1, 2]\n\n{\"x\": [3, 4]}\n";
        let rows = read_ndjson(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].as_slice(), &[3.0, 4.0]);
        assert!(matches!(read_ndjson("[1]\n{\"y\":1}\n".as_bytes()), Err(Error::Ingest { row: 2, .. })));
    }

    #[test]
    fn atomic_write_leaves_nothing_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let res = write_atomic(&path, |w| {
            w.write_all(b"partial")?;
            Err(Error::validation("boom"))
        });
        assert!(res.is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        write_atomic(&path, |w| Ok(w.write_all(b"ok")?)).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "ok");
    }
}
