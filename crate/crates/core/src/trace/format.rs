//! Trace file formats.
//!
//! Binary (little-endian): `"BTRC"`, `u16` version = 1, `u16` reserved = 0,
//! then 18-byte records `pc: u64, target: u64, kind: u8, taken: u8`. Only the
//! low 48 bits of `pc` and `target` are significant.
//!
//! Text: one record per line, `<hex pc> <hex target> <kind> <T|N>`, with `#`
//! starting a comment.

use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

use super::record::{RecordError, TraceRecord};
use crate::addr::{AddrError, BranchKind, InstrAddress};

pub const MAGIC: [u8; 4] = *b"BTRC";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: u64 = 8;
pub const RECORD_BYTES: u64 = 18;

const SIGNIFICANT: u64 = (1 << 48) - 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic at byte 0")]
    BadMagic,
    #[error("unsupported version {version} at byte 4")]
    BadVersion { version: u16 },
    #[error("truncated header")]
    TruncatedHeader,
    #[error("truncated record at byte {offset}")]
    Truncated { offset: u64 },
    #[error("unaligned address at byte {offset}: {source}")]
    Address { offset: u64, source: AddrError },
    #[error("invalid kind code {code} at byte {offset}")]
    BadKind { offset: u64, code: u8 },
    #[error("invalid taken flag {flag} at byte {offset}")]
    BadTaken { offset: u64, flag: u8 },
    #[error("invalid record at byte {offset}: {source}")]
    Invalid { offset: u64, source: RecordError },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

/// Streaming reader for the binary format.
pub struct TraceReader<R> {
    inner: R,
    offset: u64,
    done: bool,
}

impl<R: Read> TraceReader<R> {
    pub fn new(mut inner: R) -> Result<Self, TraceError> {
        let mut header = [0u8; HEADER_BYTES as usize];
        let n = read_full(&mut inner, &mut header)?;
        if n >= 4 && header[..4] != MAGIC {
            return Err(TraceError::BadMagic);
        }
        if n < header.len() {
            return Err(if n < 4 {
                TraceError::BadMagic
            } else {
                TraceError::TruncatedHeader
            });
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(TraceError::BadVersion { version });
        }
        Ok(TraceReader {
            inner,
            offset: HEADER_BYTES,
            done: false,
        })
    }

    fn read_record(&mut self) -> Result<Option<TraceRecord>, TraceError> {
        let mut buf = [0u8; RECORD_BYTES as usize];
        let offset = self.offset;
        let n = read_full(&mut self.inner, &mut buf)?;
        if n == 0 {
            return Ok(None);
        }
        if n < buf.len() {
            return Err(TraceError::Truncated { offset });
        }
        let word = |i: usize| u64::from_le_bytes(buf[i..i + 8].try_into().unwrap()) & SIGNIFICANT;
        let pc = InstrAddress::new(word(0)).map_err(|source| TraceError::Address { offset, source })?;
        let target = InstrAddress::new(word(8)).map_err(|source| TraceError::Address {
            offset: offset + 8,
            source,
        })?;
        let kind = BranchKind::from_code(buf[16]).ok_or(TraceError::BadKind {
            offset: offset + 16,
            code: buf[16],
        })?;
        let taken = match buf[17] {
            0 => false,
            1 => true,
            flag => {
                return Err(TraceError::BadTaken {
                    offset: offset + 17,
                    flag,
                })
            }
        };
        let rec = TraceRecord {
            pc,
            kind,
            taken,
            target,
        };
        rec.validate()
            .map_err(|source| TraceError::Invalid { offset, source })?;
        self.offset += RECORD_BYTES;
        Ok(Some(rec))
    }
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<TraceRecord, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let r = self.read_record();
        match r {
            Ok(Some(rec)) => Some(Ok(rec)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

pub struct TraceWriter<W: Write> {
    inner: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut inner: W) -> io::Result<Self> {
        inner.write_all(&MAGIC)?;
        inner.write_all(&VERSION.to_le_bytes())?;
        inner.write_all(&0u16.to_le_bytes())?;
        Ok(TraceWriter { inner })
    }

    pub fn write(&mut self, rec: &TraceRecord) -> io::Result<()> {
        let mut buf = [0u8; RECORD_BYTES as usize];
        buf[..8].copy_from_slice(&rec.pc.get().to_le_bytes());
        buf[8..16].copy_from_slice(&rec.target.get().to_le_bytes());
        buf[16] = rec.kind.map_or(0, BranchKind::code);
        buf[17] = rec.taken as u8;
        self.inner.write_all(&buf)
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_trace<'a, W: Write>(records: impl IntoIterator<Item = &'a TraceRecord>, out: W) -> io::Result<W> {
    let mut w = TraceWriter::new(out)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub fn read_trace<R: Read>(input: R) -> Result<TraceReader<R>, TraceError> {
    TraceReader::new(input)
}

fn parse_kind(s: &str) -> Option<Option<BranchKind>> {
    let k = match s.to_ascii_lowercase().as_str() {
        "none" | "not_a_branch" | "nb" | "-" => None,
        "conditional_direct" | "cond" => Some(BranchKind::ConditionalDirect),
        "unconditional_direct" | "jump" | "jmp" => Some(BranchKind::UnconditionalDirect),
        "call_direct" | "call" => Some(BranchKind::CallDirect),
        "return" | "ret" => Some(BranchKind::Return),
        "indirect_jump" | "ijmp" => Some(BranchKind::IndirectJump),
        "indirect_call" | "icall" => Some(BranchKind::IndirectCall),
        _ => return None,
    };
    Some(k)
}

fn parse_hex(s: &str) -> Option<u64> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u64::from_str_radix(digits, 16).ok()
}

/// Parses one text-format line; `Ok(None)` for blank and comment lines.
pub fn parse_text_line(line: &str, line_no: u64) -> Result<Option<TraceRecord>, TraceError> {
    let content = line.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let err = |message: String| TraceError::Parse { line: line_no, message };
    let fields: Vec<&str> = content.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(err(format!("expected 4 fields, found {}", fields.len())));
    }
    let addr = |s: &str| -> Result<InstrAddress, TraceError> {
        let v = parse_hex(s).ok_or_else(|| err(format!("bad hex address {s:?}")))?;
        InstrAddress::new(v).map_err(|e| err(e.to_string()))
    };
    let pc = addr(fields[0])?;
    let target = addr(fields[1])?;
    let kind = parse_kind(fields[2]).ok_or_else(|| err(format!("unknown kind {:?}", fields[2])))?;
    let taken = match fields[3] {
        "T" | "t" => true,
        "N" | "n" => false,
        other => return Err(err(format!("taken flag must be T or N, found {other:?}"))),
    };
    let rec = TraceRecord {
        pc,
        kind,
        taken,
        target,
    };
    rec.validate().map_err(|e| err(e.to_string()))?;
    Ok(Some(rec))
}

/// Streaming reader for the text format.
pub struct TextTraceReader<R> {
    lines: io::Lines<R>,
    line_no: u64,
    done: bool,
}

impl<R: BufRead> TextTraceReader<R> {
    pub fn new(input: R) -> Self {
        TextTraceReader {
            lines: input.lines(),
            line_no: 0,
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for TextTraceReader<R> {
    type Item = Result<TraceRecord, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            match parse_text_line(&line, self.line_no) {
                Ok(Some(r)) => return Some(Ok(r)),
                Ok(None) => continue,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}

pub fn write_text_trace<'a, W: Write>(records: impl IntoIterator<Item = &'a TraceRecord>, mut out: W) -> io::Result<W> {
    for r in records {
        let kind = r.kind.map_or("none", BranchKind::name);
        writeln!(
            out,
            "{:#x} {:#x} {} {}",
            r.pc.get(),
            r.target.get(),
            kind,
            if r.taken { "T" } else { "N" }
        )?;
    }
    out.flush()?;
    Ok(out)
}
