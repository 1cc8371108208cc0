use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(format!("unknown format {other:?} (expected csv or jsonl)")),
        }
    }
}

/// A flat report row with a fixed column list.
pub trait Row: Serialize {
    const HEADER: &'static [&'static str];
}

/// Writes rows as CSV (header always present) or JSON lines.
pub fn write_table<R: Row>(path: &Path, rows: &[R], format: OutputFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(&mut out, rows)?,
        OutputFormat::Jsonl => {
            for row in rows {
                serde_json::to_writer(&mut out, row).map_err(|source| Error::Json {
                    path: path.to_path_buf(),
                    source,
                })?;
                out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv<W: Write, R: Row>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(R::HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Demo {
        name: &'static str,
        value: Option<f64>,
    }

    impl Row for Demo {
        const HEADER: &'static [&'static str] = &["name", "value"];
    }

    #[test]
    fn empty_csv_still_has_header() {
        let mut buf = Vec::new();
        write_csv::<_, Demo>(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "name,value\n");
    }

    #[test]
    fn absent_values_are_empty_cells() {
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &[
                Demo {
                    name: "a",
                    value: Some(0.5),
                },
                Demo {
                    name: "b",
                    value: None,
                },
            ],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "name,value\na,0.5\nb,\n");
    }
}
