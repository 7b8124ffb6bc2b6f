//! JSON output with sorted keys and floats rounded to 9 significant digits,
//! so reports compare byte-for-byte.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

struct StableFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

/// Rounds to 9 significant digits, then prints the shortest decimal that
/// round-trips the rounded value.
pub fn format_f64(v: f64) -> String {
    if !v.is_finite() {
        return "null".to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("valid float literal");
    let s = rounded.to_string();
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

impl Formatter for StableFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Pretty-printed, key-sorted JSON with a trailing newline.
pub fn to_stable_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // Value's map is a BTreeMap, which sorts keys.
    let tree = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        StableFormatter {
            inner: PrettyFormatter::with_indent(b"  "),
        },
    );
    tree.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn float_formatting() {
        assert_eq!(format_f64(0.5), "0.5");
        assert_eq!(format_f64(1.0), "1.0");
        assert_eq!(format_f64(0.0), "0.0");
        assert_eq!(format_f64(1.0 / 3.0), "0.333333333");
        assert_eq!(format_f64(2.0 / 3.0), "0.666666667");
        assert_eq!(format_f64(123456789.4), "123456789.0");
        assert_eq!(format_f64(f64::NAN), "null");
    }

    #[test]
    fn keys_are_sorted() {
        let v = json!({"zeta": 1, "alpha": {"b": 0.25, "a": [1.5, 2]}});
        assert_eq!(
            to_stable_json(&v).unwrap(),
            "{\n  \"alpha\": {\n    \"a\": [\n      1.5,\n      2\n    ],\n    \"b\": 0.25\n  },\n  \"zeta\": 1\n}\n"
        );
    }
}
