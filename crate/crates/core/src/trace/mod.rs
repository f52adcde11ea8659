//! Trace records, file formats, the synthetic generator and offset analysis.

pub mod analyze;
pub mod crafted;
pub mod format;
pub mod gen;
pub mod record;

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

pub use analyze::{analyze_offsets, write_histogram_csv, OffsetAnalysis, OffsetAnalyzer, OffsetClass, OffsetHistogram};
pub use format::{read_trace, write_text_trace, write_trace, TextTraceReader, TraceError, TraceReader, TraceWriter};
pub use gen::{generate_program, generate_trace, GenError, GeneratedProgram, GeneratorSpec};
pub use record::{RecordError, TraceRecord};

pub type RecordStream = Box<dyn Iterator<Item = Result<TraceRecord, TraceError>> + Send>;

/// Opens a trace file, picking the binary or text reader from the first bytes.
pub fn open_trace(path: &Path) -> Result<RecordStream, TraceError> {
    let mut reader = BufReader::new(File::open(path)?);
    let head = reader.fill_buf()?;
    if head.is_empty() || head.starts_with(&format::MAGIC) || !head.iter().take(4).all(u8::is_ascii) {
        return Ok(Box::new(TraceReader::new(reader)?));
    }
    Ok(Box::new(TextTraceReader::new(reader)))
}

/// Wraps in-memory records as a stream.
pub fn stream_of(records: Vec<TraceRecord>) -> RecordStream {
    Box::new(records.into_iter().map(Ok))
}

/// Reads every record of a binary trace.
pub fn read_all<R: Read>(input: R) -> Result<Vec<TraceRecord>, TraceError> {
    read_trace(input)?.collect()
}
