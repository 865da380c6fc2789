use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    /// Header text after `>`, trimmed; empty for headerless input.
    pub id: String,
    /// Uppercased ACGT sequence.
    pub seq: String,
}

/// Parses FASTA. Headers start records; blank lines and surrounding whitespace
/// are skipped; bases are uppercased and anything outside ACGT is rejected
/// with its 1-based line and column.
pub fn parse_fasta<R: BufRead>(input: R) -> Result<Vec<FastaRecord>> {
    let mut records: Vec<FastaRecord> = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let text = line.trim_end();
        if let Some(header) = text.strip_prefix('>') {
            records.push(FastaRecord {
                id: header.trim().to_string(),
                seq: String::new(),
            });
            continue;
        }
        if text.trim().is_empty() {
            continue;
        }
        if records.is_empty() {
            records.push(FastaRecord {
                id: String::new(),
                seq: String::new(),
            });
        }
        let seq = &mut records.last_mut().unwrap().seq;
        for (col, c) in text.chars().enumerate() {
            if c.is_whitespace() {
                continue;
            }
            let u = c.to_ascii_uppercase();
            if !matches!(u, 'A' | 'C' | 'G' | 'T') {
                return Err(Error::Fasta {
                    line: n + 1,
                    column: col + 1,
                    found: c,
                });
            }
            seq.push(u);
        }
    }
    Ok(records)
}

/// One pattern per line; blank lines are skipped.
pub fn read_queries<R: BufRead>(input: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            out.push(t.to_ascii_uppercase());
        }
    }
    Ok(out)
}
