use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use holdem_core::evaluation::HandHistoryRecord;

use crate::PlatformError;

/// Parses and replays every line of a history file. The first bad line is reported with its
/// 1-based number.
pub fn read_history(path: &Path) -> Result<Vec<HandHistoryRecord>, PlatformError> {
    let file = File::open(path).map_err(|e| PlatformError::History {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let fail = |message: String| PlatformError::History {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| fail(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = HandHistoryRecord::from_line(&line).map_err(|e| fail(format!("not a hand record: {e}")))?;
        record.replay().map_err(|e| fail(format!("does not replay: {e}")))?;
        records.push(record);
    }
    Ok(records)
}

/// Number of valid records, or the first failure.
pub fn validate_history(path: &Path) -> Result<usize, PlatformError> {
    read_history(path).map(|r| r.len())
}
