//! Line-oriented N-Triples reader.
//!
//! Reads one line at a time into a reused buffer, so memory use is bounded by
//! the longest line rather than the file size. Blank nodes are not part of
//! the entity model and are reported as malformed lines.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use thiserror::Error;

use super::model::{Iri, Literal, Object, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort at the first malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and count them.
    Lenient,
}

#[derive(Debug, Error)]
pub enum NTriplesError {
    #[error("line {line}: {message}: {text}")]
    Syntax { line: u64, message: String, text: String },
    #[error("read error after line {line}: {source}")]
    Io { line: u64, source: io::Error },
}

impl NTriplesError {
    pub fn line(&self) -> u64 {
        match self {
            NTriplesError::Syntax { line, .. } | NTriplesError::Io { line, .. } => *line,
        }
    }
}

/// Streaming iterator over the triples of an N-Triples source.
pub struct NTriplesReader<R> {
    reader: R,
    mode: ParseMode,
    buf: Vec<u8>,
    line: u64,
    skipped: u64,
    done: bool,
}

impl<R: BufRead> NTriplesReader<R> {
    pub fn new(reader: R, mode: ParseMode) -> Self {
        NTriplesReader { reader, mode, buf: Vec::with_capacity(256), line: 0, skipped: 0, done: false }
    }

    /// Malformed lines skipped so far (lenient mode only).
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn lines_read(&self) -> u64 {
        self.line
    }
}

/// Parses an N-Triples byte stream lazily.
pub fn parse_ntriples<R: BufRead>(reader: R, mode: ParseMode) -> NTriplesReader<R> {
    NTriplesReader::new(reader, mode)
}

/// Opens a file for reading, transparently decompressing gzip (detected by magic bytes).
pub fn open_maybe_gzip(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let mut file = BufReader::with_capacity(1 << 16, File::open(path)?);
    let is_gzip = {
        let head = file.fill_buf()?;
        head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b
    };
    if is_gzip {
        Ok(Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(file))
    }
}

/// Convenience: open a (possibly gzipped) N-Triples file.
pub fn read_ntriples_file(path: &Path, mode: ParseMode) -> io::Result<NTriplesReader<Box<dyn BufRead + Send>>> {
    Ok(NTriplesReader::new(open_maybe_gzip(path)?, mode))
}

impl<R: BufRead> Iterator for NTriplesReader<R> {
    type Item = Result<Triple, NTriplesError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(source) => {
                    self.done = true;
                    return Some(Err(NTriplesError::Io { line: self.line, source }));
                }
            }
            self.line += 1;
            let result = match std::str::from_utf8(&self.buf) {
                Ok(text) => parse_line(text).map_err(|message| (message, text.trim_end().to_owned())),
                Err(_) => Err(("invalid UTF-8".to_owned(), String::from_utf8_lossy(&self.buf).trim_end().to_owned())),
            };
            match result {
                Ok(Some(triple)) => return Some(Ok(triple)),
                Ok(None) => continue,
                Err((message, text)) => match self.mode {
                    ParseMode::Lenient => {
                        log::debug!("skipping line {}: {}", self.line, message);
                        self.skipped += 1;
                    }
                    ParseMode::Strict => {
                        self.done = true;
                        return Some(Err(NTriplesError::Syntax { line: self.line, message, text }));
                    }
                },
            }
        }
        None
    }
}

/// Parses one line. `Ok(None)` for blank and comment lines.
pub fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let mut cur = Cursor { s: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject = cur.subject()?;
    cur.skip_ws();
    let predicate = cur.iri_ref().map_err(|e| format!("predicate: {e}"))?;
    cur.skip_ws();
    let object = cur.object()?;
    cur.skip_ws();
    if !cur.eat('.') {
        return Err("expected '.' after object".to_owned());
    }
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some('#') {
        return Err("unexpected content after '.'".to_owned());
    }
    Ok(Some(Triple { subject, predicate, object }))
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn rest(&self) -> &str {
        &self.s[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r' | '\n')) {
            self.pos += 1;
        }
    }

    fn subject(&mut self) -> Result<Iri, String> {
        match self.peek() {
            Some('<') => self.iri_ref().map_err(|e| format!("subject: {e}")),
            Some('_') => Err("blank nodes are not supported".to_owned()),
            _ => Err("expected subject IRI".to_owned()),
        }
    }

    fn object(&mut self) -> Result<Object, String> {
        match self.peek() {
            Some('<') => Ok(Object::Iri(self.iri_ref().map_err(|e| format!("object: {e}"))?)),
            Some('"') => Ok(Object::Literal(self.literal()?)),
            Some('_') => Err("blank nodes are not supported".to_owned()),
            _ => Err("expected object".to_owned()),
        }
    }

    fn iri_ref(&mut self) -> Result<Iri, String> {
        if !self.eat('<') {
            return Err("expected '<'".to_owned());
        }
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated IRI".to_owned()),
                Some('>') => break,
                Some('\\') => value.push(self.uchar()?),
                Some(c) => value.push(c),
            }
        }
        Iri::new(value).map_err(|e| e.to_string())
    }

    fn uchar(&mut self) -> Result<char, String> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err("invalid escape in IRI".to_owned()),
        };
        self.hex(width)
    }

    fn hex(&mut self, width: usize) -> Result<char, String> {
        let digits = self.rest().get(..width).ok_or("truncated \\u escape")?;
        let code = u32::from_str_radix(digits, 16).map_err(|_| "invalid hex in \\u escape".to_owned())?;
        self.pos += width;
        char::from_u32(code).ok_or_else(|| format!("invalid code point U+{code:X}"))
    }

    fn literal(&mut self) -> Result<Literal, String> {
        self.eat('"');
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated literal".to_owned()),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex(4)?,
                        Some('U') => self.hex(8)?,
                        _ => return Err("invalid escape in literal".to_owned()),
                    };
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
            }
        }
        if self.eat('@') {
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                self.pos += 1;
            }
            let tag = &self.s[start..self.pos];
            if !valid_lang_tag(tag) {
                return Err(format!("invalid language tag '{tag}'"));
            }
            Ok(Literal::with_language(lexical, tag))
        } else if self.rest().starts_with("^^") {
            self.pos += 2;
            let dt = self.iri_ref().map_err(|e| format!("datatype: {e}"))?;
            Ok(Literal::typed(lexical, dt))
        } else {
            Ok(Literal::plain(lexical))
        }
    }
}

fn valid_lang_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    match parts.next() {
        Some(p) if !p.is_empty() && p.chars().all(|c| c.is_ascii_alphabetic()) => {}
        _ => return false,
    }
    parts.all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

/// Writes triples as N-Triples lines.
pub fn write_ntriples<'a, W: io::Write>(mut out: W, triples: impl IntoIterator<Item = &'a Triple>) -> io::Result<()> {
    for t in triples {
        writeln!(out, "{t}")?;
    }
    Ok(())
}

/// Reads everything; used by small fixtures and tests.
pub fn parse_ntriples_str(text: &str, mode: ParseMode) -> Result<(Vec<Triple>, u64), NTriplesError> {
    let mut reader = parse_ntriples(text.as_bytes(), mode);
    let triples = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((triples, reader.skipped()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_line() {
        let t = parse_line("<http://x/a> <http://x/p> <http://x/b> .").unwrap().unwrap();
        assert_eq!(t.subject.as_str(), "http://x/a");
        assert_eq!(t.predicate.as_str(), "http://x/p");
        assert_eq!(t.object, Object::Iri(Iri::new("http://x/b").unwrap()));
    }

    #[test]
    fn language_tagged_literal() {
        let t = parse_line("<http://x/a> <http://x/p> \"Star Wars\"@en .").unwrap().unwrap();
        assert_eq!(t.object, Object::Literal(Literal::with_language("Star Wars", "en")));
    }

    #[test]
    fn escapes_and_datatypes() {
        let t = parse_line(r#"<http://x/a> <http://x/p> "a\"b\\cé\n"^^<http://www.w3.org/2001/XMLSchema#string> ."#)
            .unwrap()
            .unwrap();
        let Object::Literal(lit) = &t.object else { panic!() };
        assert_eq!(lit.lexical(), "a\"b\\cé\n");
        assert_eq!(lit.datatype().unwrap().as_str(), "http://www.w3.org/2001/XMLSchema#string");
        assert_eq!(parse_line(&t.to_string()).unwrap().unwrap(), t);
    }

    #[test]
    fn comments_and_blank_lines() {
        assert_eq!(parse_line("").unwrap(), None);
        assert_eq!(parse_line("   # a comment").unwrap(), None);
        assert!(parse_line("<http://x/a> <http://x/p> <http://x/b> . # trailing").unwrap().is_some());
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_line("<http://x/a> <http://x/p> .").is_err());
        assert!(parse_line("<http://x/a> <http://x/p> <http://x/b>").is_err());
        assert!(parse_line("_:b0 <http://x/p> <http://x/b> .").is_err());
        assert!(parse_line("<http://x/a> <http://x/p> \"x\"@ .").is_err());
        assert!(parse_line("<http://x/a> <http://x/p> \"unterminated .").is_err());
        assert!(parse_line("<http://x/a> <http://x/p> <http://x/b> . extra").is_err());
    }

    #[test]
    fn strict_mode_reports_line_number() {
        let text = "<http://x/a> <http://x/p> <http://x/b> .\n\n<http://x/a> <http://x/p> .\n<http://x/c> <http://x/p> <http://x/d> .\n";
        let err = parse_ntriples_str(text, ParseMode::Strict).unwrap_err();
        assert_eq!(err.line(), 3);
        assert!(err.to_string().contains("<http://x/a> <http://x/p> ."));
    }

    #[test]
    fn lenient_mode_skips_and_counts() {
        let text = "<http://x/a> <http://x/p> <http://x/b> .\n<http://x/a> <http://x/p> .\n<http://x/c> <http://x/p> <http://x/d> .\n";
        let (triples, skipped) = parse_ntriples_str(text, ParseMode::Lenient).unwrap();
        assert_eq!(triples.len(), 2);
        assert_eq!(skipped, 1);
    }

    #[test]
    fn invalid_utf8_is_a_line_error() {
        let bytes: &[u8] = b"<http://x/a> <http://x/p> \"\xff\" .\n<http://x/a> <http://x/p> <http://x/b> .\n";
        let mut r = parse_ntriples(bytes, ParseMode::Lenient);
        assert_eq!(r.by_ref().count(), 1);
        assert_eq!(r.skipped(), 1);
    }
}
