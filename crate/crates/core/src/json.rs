//! JSON decoding with byte offsets for syntax errors and field paths for
//! schema errors.

use serde::de::DeserializeOwned;
use serde_json::error::Category;

use crate::error::{Error, Result};

/// Byte offset just past the 1-based (line, column) position where the
/// parser stopped; a truncated document reports its length.
pub(crate) fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let start: usize = bytes
        .split_inclusive(|&b| b == b'\n')
        .take(line.saturating_sub(1))
        .map(<[u8]>::len)
        .sum();
    (start + column).min(bytes.len())
}

fn syntax(bytes: &[u8], e: &serde_json::Error) -> Error {
    Error::Json {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    }
}

fn field(path: String, e: &serde_json::Error) -> Error {
    let path = if path == "." { "(root)".to_string() } else { path };
    Error::Field {
        path,
        message: e.to_string(),
    }
}

pub(crate) fn from_slice<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            Category::Data => field(path, &inner),
            _ => syntax(bytes, &inner),
        }
    })?;
    de.end().map_err(|e| syntax(bytes, &e))?;
    Ok(value)
}

/// Parse only the syntax; schema checks happen later via [`from_value`].
pub(crate) fn parse_value(bytes: &[u8]) -> Result<serde_json::Value> {
    serde_json::from_slice(bytes).map_err(|e| syntax(bytes, &e))
}

pub(crate) fn from_value<T: DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        field(path, e.inner())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, serde::Deserialize)]
    #[allow(dead_code)]
    struct Doc {
        a: Vec<Inner>,
    }

    #[derive(Debug, serde::Deserialize)]
    #[allow(dead_code)]
    struct Inner {
        b: u32,
    }

    #[test]
    fn truncated_input_reports_offset() {
        let text = b"{\"a\": [\n{\"b\": 1}";
        match from_slice::<Doc>(text).unwrap_err() {
            Error::Json { offset, .. } => assert_eq!(offset, text.len()),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bad_field_reports_path() {
        match from_slice::<Doc>(b"{\"a\": [{\"b\": 1}, {\"b\": \"x\"}]}").unwrap_err() {
            Error::Field { path, .. } => assert_eq!(path, "a[1].b"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn offsets_count_bytes() {
        assert_eq!(byte_offset(b"ab\ncd\nef", 3, 2), 8);
        assert_eq!(byte_offset(b"ab", 1, 1), 1);
        match from_slice::<Doc>(b"{\"a\": x}").unwrap_err() {
            Error::Json { offset, .. } => assert_eq!(offset, 7),
            e => panic!("{e}"),
        }
    }
}
