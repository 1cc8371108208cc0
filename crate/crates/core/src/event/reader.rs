use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use rayon::prelude::*;

use super::{parse_line, Event, ParseOutcome, ParseStats};
use crate::error::{Error, Result};

const CHUNK_LINES: usize = 16 * 1024;

/// Retained events from one log file plus its tallies.
#[derive(Debug, Default)]
pub struct LogBatch {
    pub path: PathBuf,
    pub events: Vec<Event>,
    pub stats: ParseStats,
}

/// Opens a log for line reading, decompressing `.gz` files transparently.
pub fn open_log(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|ext| ext == "gz");
    Ok(if gz {
        Box::new(BufReader::with_capacity(
            1 << 16,
            MultiGzDecoder::new(BufReader::new(file)),
        ))
    } else {
        Box::new(BufReader::with_capacity(1 << 16, file))
    })
}

/// Parses a whole log file. Lines are parsed in parallel chunks on the
/// current rayon pool; event order matches line order.
pub fn read_log(path: &Path) -> Result<LogBatch> {
    let mut reader = open_log(path)?;
    let mut batch = LogBatch {
        path: path.to_path_buf(),
        ..LogBatch::default()
    };
    let mut chunk: Vec<Vec<u8>> = Vec::with_capacity(CHUNK_LINES);
    loop {
        let mut line = Vec::new();
        let n = reader
            .read_until(b'\n', &mut line)
            .map_err(|e| Error::io(path, e))?;
        if n > 0 {
            chunk.push(line);
        }
        if chunk.len() == CHUNK_LINES || (n == 0 && !chunk.is_empty()) {
            absorb_chunk(&mut batch, &chunk);
            chunk.clear();
        }
        if n == 0 {
            break;
        }
    }
    Ok(batch)
}

fn absorb_chunk(batch: &mut LogBatch, chunk: &[Vec<u8>]) {
    let outcomes: Vec<ParseOutcome> = chunk.par_iter().map(|l| parse_line(l)).collect();
    for outcome in outcomes {
        batch.stats.record(&outcome);
        if let ParseOutcome::Event(e) = outcome {
            batch.events.push(e);
        }
    }
}

/// Reads several logs, one batch per path in argument order.
pub fn read_logs<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<LogBatch>> {
    paths.iter().map(|p| read_log(p.as_ref())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    const LINE: &str = r#"{"event_type":"play_video","user_id":"u","course_id":"c","time":"2021-08-26T00:46:55.696Z","event_source":"browser","event":{"id":"v","currentTime":0}}"#;

    fn sample() -> String {
        format!("{LINE}\nnot json\n{{\"event_type\":\"page_close\"}}\n{LINE}")
    }

    #[test]
    fn plain_and_gzip_agree() {
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("log.jsonl");
        std::fs::write(&plain, sample()).unwrap();
        let gz = dir.path().join("log.jsonl.gz");
        let mut enc = GzEncoder::new(File::create(&gz).unwrap(), Compression::default());
        enc.write_all(sample().as_bytes()).unwrap();
        enc.finish().unwrap();

        let a = read_log(&plain).unwrap();
        let b = read_log(&gz).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.stats, b.stats);
        assert_eq!(
            a.stats,
            ParseStats {
                lines_read: 4,
                parsed: 3,
                retained: 2,
                malformed: 1,
                filtered_out: 1
            }
        );
    }

    #[test]
    fn empty_file_reads_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.jsonl");
        std::fs::write(&p, "").unwrap();
        let batch = read_log(&p).unwrap();
        assert_eq!(batch.stats, ParseStats::default());
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_log(Path::new("/nonexistent/x.jsonl")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.jsonl"));
    }
}
